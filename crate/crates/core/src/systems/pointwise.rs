use super::{check_dt, phi1, SystemSpec, Variant};
use crate::error::{EwsError, Result};

/// Per-node exact flow of `du(x) = (f(x, p) u(x) + σ_R ξ(x)) dt` with frozen `ξ`.
#[derive(Debug, Clone)]
pub struct PointwiseStepper {
    decay: Vec<f64>,
    forcing: Vec<f64>,
}

impl PointwiseStepper {
    pub fn new(spec: &SystemSpec, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        if !matches!(spec.variant(), Variant::MultiplicationOp(_)) {
            return Err(EwsError::Unsupported(format!(
                "pointwise stepper applied to {}",
                spec.variant().name()
            )));
        }
        let drift = spec.drift_values().expect("multiplication variant");
        if let Some(f) = drift.iter().find(|f| !(**f < 0.0)) {
            return Err(EwsError::param("p", format!("drift value {f} is not negative")));
        }
        Ok(PointwiseStepper {
            decay: drift.iter().map(|f| (f * dt).exp()).collect(),
            forcing: drift.iter().map(|f| spec.sigma_r() * phi1(*f, dt)).collect(),
        })
    }

    #[inline]
    pub fn step(&mut self, u: &mut [f64], xi: &[f64]) {
        for ((v, x), (a, b)) in u.iter_mut().zip(xi).zip(self.decay.iter().zip(&self.forcing)) {
            *v = a * *v + b * x;
        }
    }
}

pub fn pointwise_step(u: &[f64], xi: &[f64], spec: &SystemSpec, dt: f64) -> Result<Vec<f64>> {
    let n = spec.state_grid().len();
    if u.len() != n || xi.len() != n {
        return Err(EwsError::GridMismatch(format!(
            "u has {} nodes and xi {} nodes, grid has {n}",
            u.len(),
            xi.len()
        )));
    }
    let mut stepper = PointwiseStepper::new(spec, dt)?;
    let mut next = u.to_vec();
    stepper.step(&mut next, xi);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_evolve_as_independent_scalars() {
        // grid nodes at -0.01, 0, 0.01
        let spec = SystemSpec::multiplication(2.0, -0.01, 0.01, 3, -0.25).unwrap();
        let next = pointwise_step(&[1.0; 3], &[0.0; 3], &spec, 0.1).unwrap();
        assert!((next[1] - (-0.025f64).exp()).abs() < 1e-15);
        assert!((next[2] - (-0.2501f64 * 0.1).exp()).abs() < 1e-15);
        assert_eq!(next[0], next[2]);
    }

    #[test]
    fn repeated_steps_are_exact_exponentials() {
        let spec = SystemSpec::multiplication(1.5, -0.5, 0.5, 11, -0.2).unwrap();
        let mut u = vec![1.0; 11];
        let mut stepper = PointwiseStepper::new(&spec, 0.1).unwrap();
        for _ in 0..50 {
            stepper.step(&mut u, &[0.0; 11]);
        }
        for (v, f) in u.iter().zip(spec.drift_values().unwrap()) {
            assert!((v - (f * 5.0).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn no_spatial_coupling() {
        // a unit impulse on one node never reaches its neighbours
        let spec = SystemSpec::multiplication(2.0, -1.0, 1.0, 9, -0.5).unwrap();
        let mut u = vec![0.0; 9];
        u[4] = 1.0;
        let mut xi = vec![0.0; 9];
        xi[2] = 3.0;
        let next = pointwise_step(&u, &xi, &spec, 0.3).unwrap();
        for (i, v) in next.iter().enumerate() {
            if i != 2 && i != 4 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn rejects_mismatch() {
        let spec = SystemSpec::multiplication(2.0, -1.0, 1.0, 9, -0.5).unwrap();
        assert!(pointwise_step(&[0.0; 8], &[0.0; 9], &spec, 0.1).is_err());
    }
}
