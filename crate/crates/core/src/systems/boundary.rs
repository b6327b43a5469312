use std::f64::consts::{PI, SQRT_2};

use super::{check_dt, SystemSpec, Variant};
use crate::error::{EwsError, Result};
use crate::grid::Grid1D;

/// Largest eigenvalue of `Δ_h + shift + p` with zero Dirichlet data.
pub(crate) fn leading_discrete_eigenvalue(grid: &Grid1D, shift: f64, p: f64) -> f64 {
    let h = grid.spacing();
    let s = (PI / (2.0 * (grid.len() - 1) as f64)).sin();
    p + shift - 4.0 * s * s / (h * h)
}

/// `√2 sin(iπ(x - left)/L)`, orthonormal under the Riemann inner product.
pub(crate) fn sine_mode(grid: &Grid1D, i: usize) -> Vec<f64> {
    let len = grid.right() - grid.left();
    grid.nodes()
        .map(|x| SQRT_2 * (i as f64 * PI * (x - grid.left()) / len).sin())
        .collect()
}

/// Implicit Euler for `du = (Δ + shift + p) u dt` with boundary rows
/// `u(left) = σ_R ξ_left`, `u(right) = σ_R ξ_right` evaluated at the new time.
///
/// The interior matrix `I - dt (Δ_h + shift + p)` is constant, so its Thomas
/// factorization is computed once.
#[derive(Debug, Clone)]
pub struct BoundaryStepper {
    coupling: f64,
    off: f64,
    c_prime: Vec<f64>,
    inv_pivot: Vec<f64>,
    sigma_r: f64,
    rhs: Vec<f64>,
}

impl BoundaryStepper {
    pub fn new(spec: &SystemSpec, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        let (grid, shift) = match spec.variant() {
            Variant::CableBoundaryNoise(b) => (&b.grid, b.shift),
            other => {
                return Err(EwsError::Unsupported(format!(
                    "boundary stepper applied to {}",
                    other.name()
                )))
            }
        };
        let m = grid.len() - 2;
        let h = grid.spacing();
        let coupling = dt / (h * h);
        let diag = 1.0 + 2.0 * coupling - dt * (shift + spec.p());
        let off = -coupling;
        let mut c_prime = Vec::with_capacity(m);
        let mut inv_pivot = Vec::with_capacity(m);
        let mut prev_c = 0.0;
        for i in 0..m {
            let pivot = if i == 0 { diag } else { diag - off * prev_c };
            if !(pivot.abs() > 1e-300) || !pivot.is_finite() {
                return Err(EwsError::Singular(format!("zero pivot at interior row {i}")));
            }
            let inv = 1.0 / pivot;
            prev_c = off * inv;
            c_prime.push(prev_c);
            inv_pivot.push(inv);
        }
        Ok(BoundaryStepper {
            coupling,
            off,
            c_prime,
            inv_pivot,
            sigma_r: spec.sigma_r(),
            rhs: vec![0.0; m],
        })
    }

    pub fn step(&mut self, u: &mut [f64], xi_left: f64, xi_right: f64) {
        let n = u.len();
        let m = n - 2;
        let left = self.sigma_r * xi_left;
        let right = self.sigma_r * xi_right;
        self.rhs.copy_from_slice(&u[1..n - 1]);
        self.rhs[0] += self.coupling * left;
        self.rhs[m - 1] += self.coupling * right;
        // forward sweep
        let mut prev = 0.0;
        for i in 0..m {
            let d = if i == 0 {
                self.rhs[0]
            } else {
                self.rhs[i] - self.off * prev
            };
            prev = d * self.inv_pivot[i];
            self.rhs[i] = prev;
        }
        // back substitution
        u[n - 2] = self.rhs[m - 1];
        for i in (0..m - 1).rev() {
            u[i + 1] = self.rhs[i] - self.c_prime[i] * u[i + 2];
        }
        u[0] = left;
        u[n - 1] = right;
    }
}

pub fn boundary_implicit_euler_step(
    u: &[f64],
    xi_left: f64,
    xi_right: f64,
    spec: &SystemSpec,
    dt: f64,
) -> Result<Vec<f64>> {
    let n = spec.state_grid().len();
    if u.len() != n {
        return Err(EwsError::DimensionMismatch {
            expected: n,
            actual: u.len(),
        });
    }
    let mut stepper = BoundaryStepper::new(spec, dt)?;
    let mut next = u.to_vec();
    stepper.step(&mut next, xi_left, xi_right);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_data_stays_zero() {
        let spec = SystemSpec::boundary(201, -0.5).unwrap();
        let next = boundary_implicit_euler_step(&vec![0.0; 201], 0.0, 0.0, &spec, 0.1).unwrap();
        assert!(next.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_boundary_data_converges_to_harmonic_profile() {
        let p = -0.5;
        let c = 1.0;
        let spec = SystemSpec::boundary(201, p).unwrap();
        let grid = spec.state_grid();
        let mut stepper = BoundaryStepper::new(&spec, 1.0).unwrap();
        let mut u = vec![0.0; 201];
        for _ in 0..400 {
            stepper.step(&mut u, c, c);
        }
        let omega = (PI * PI + p).sqrt();
        let b = (1.0 - omega.cos()) / omega.sin();
        let w: Vec<f64> = grid
            .nodes()
            .map(|x| c * ((omega * x).cos() + b * (omega * x).sin()))
            .collect();
        let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = u.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err / scale < 1e-3, "relative error {}", err / scale);
    }

    #[test]
    fn sine_mode_is_damped_like_the_exponential() {
        let p = -0.5;
        let spec = SystemSpec::boundary(201, p).unwrap();
        let grid = spec.state_grid();
        let mode = sine_mode(&grid, 1);
        for dt in [1e-2, 1e-3] {
            let next = boundary_implicit_euler_step(&mode, 0.0, 0.0, &spec, dt).unwrap();
            let lambda = leading_discrete_eigenvalue(&grid, PI * PI, p);
            let factor = 1.0 / (1.0 - dt * lambda);
            for (a, b) in next.iter().zip(&mode) {
                assert!((a - factor * b).abs() < 1e-12);
            }
            // O(dt²) away from the continuous flow
            assert!((factor - (p * dt).exp()).abs() < 2.0 * dt * dt);
        }
    }

    #[test]
    fn rejects_foreign_variant() {
        let spec = SystemSpec::cable(16, -0.5).unwrap();
        assert!(BoundaryStepper::new(&spec, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn zero_boundary_norm_is_nonincreasing(
            seed in prop::collection::vec(-1.0f64..1.0, 19),
            dt in 1e-4f64..10.0,
            p in -3.0f64..-0.05,
        ) {
            let spec = SystemSpec::boundary(21, p).unwrap();
            let mut u = vec![0.0];
            u.extend(seed);
            u.push(0.0);
            let n0: f64 = u.iter().map(|v| v * v).sum();
            let next = boundary_implicit_euler_step(&u, 0.0, 0.0, &spec, dt).unwrap();
            let n1: f64 = next.iter().map(|v| v * v).sum();
            prop_assert!(n1 <= n0 * (1.0 + 1e-12));
        }
    }
}
