use super::{check_dt, SystemSpec, Variant};
use crate::error::{EwsError, Result};

/// Right and left generalized eigenvector chains of `J = p I + N` (`N` the
/// superdiagonal shift), indexed `k = 1..=M`:
///
/// * right `e_k = (1, …, 1, 0, …, 0)` with `k` leading ones, `J e_k = p e_k + e_{k-1}`;
/// * left `e*_1 = u_M`, `e*_k = u_{M-k+1} - u_{M-k+2}`, `Jᵀ e*_k = p e*_k + e*_{k-1}`.
///
/// For `M = 4` the left chain is `(0,0,0,1)`, `(0,0,1,-1)`, `(0,1,-1,0)`, `(1,-1,0,0)`.
pub(crate) fn chain(dim: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    (1..=dim)
        .map(|k| {
            let right: Vec<f64> = (0..dim).map(|i| if i < k { 1.0 } else { 0.0 }).collect();
            let mut left = vec![0.0; dim];
            left[dim - k] = 1.0;
            if k >= 2 {
                left[dim - k + 1] = -1.0;
            }
            (right, left)
        })
        .collect()
}

/// `∫_0^h e^{p s} s^m / m! ds` for `m = 0..dim`.
fn integrated_powers(p: f64, h: f64, dim: usize) -> Vec<f64> {
    let ph = p * h;
    if ph.abs() < 1.0 {
        // Σ_j p^j h^{m+j+1} / (j! m! (m+j+1)), alternating but well inside its radius
        (0..dim)
            .map(|m| {
                let mut fact_m = 1.0;
                for i in 1..=m {
                    fact_m *= i as f64;
                }
                let mut term = h.powi(m as i32 + 1) / fact_m; // j = 0 numerator / m!
                let mut sum = term / (m as f64 + 1.0);
                for j in 1..60 {
                    term *= ph / j as f64;
                    let add = term / (m + j + 1) as f64;
                    sum += add;
                    if add.abs() <= 1e-18 * sum.abs() {
                        break;
                    }
                }
                sum
            })
            .collect()
    } else {
        let e = ph.exp();
        let mut out = Vec::with_capacity(dim);
        let mut prev = ph.exp_m1() / p;
        out.push(prev);
        let mut hm = 1.0;
        for m in 1..dim {
            hm *= h / m as f64;
            prev = (e * hm - prev) / p;
            out.push(prev);
        }
        out
    }
}

/// Exact propagator of `du = (J u + σ_R ξ) dt` with `ξ` frozen over the step:
/// `u' = e^{J dt} u + σ_R J^{-1}(e^{J dt} - I) ξ`. Both matrices are upper
/// triangular Toeplitz; only their first rows are stored.
#[derive(Debug, Clone)]
pub struct JordanStepper {
    propagator: Vec<f64>,
    forcing: Vec<f64>,
    scratch: Vec<f64>,
}

impl JordanStepper {
    pub fn new(spec: &SystemSpec, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        let dim = match spec.variant() {
            Variant::JordanChain(j) => j.dim,
            other => {
                return Err(EwsError::Unsupported(format!(
                    "Jordan stepper applied to {}",
                    other.name()
                )))
            }
        };
        let p = spec.p();
        let e = (p * dt).exp();
        let mut propagator = Vec::with_capacity(dim);
        let mut term = e;
        for m in 0..dim {
            if m > 0 {
                term *= dt / m as f64;
            }
            propagator.push(term);
        }
        let forcing = integrated_powers(p, dt, dim)
            .into_iter()
            .map(|v| v * spec.sigma_r())
            .collect();
        Ok(JordanStepper {
            propagator,
            forcing,
            scratch: vec![0.0; dim],
        })
    }

    #[inline]
    pub fn step(&mut self, u: &mut [f64], xi: &[f64]) {
        let dim = self.propagator.len();
        for i in 0..dim {
            let mut acc = 0.0;
            for m in 0..dim - i {
                acc += self.propagator[m] * u[i + m] + self.forcing[m] * xi[i + m];
            }
            self.scratch[i] = acc;
        }
        u.copy_from_slice(&self.scratch);
    }
}

pub fn jordan_step(u: &[f64], xi: &[f64], spec: &SystemSpec, dt: f64) -> Result<Vec<f64>> {
    let dim = spec.state_grid().len();
    if !matches!(spec.variant(), Variant::JordanChain(_)) {
        return Err(EwsError::Unsupported("jordan_step needs a Jordan system".into()));
    }
    for len in [u.len(), xi.len()] {
        if len != dim {
            return Err(EwsError::DimensionMismatch {
                expected: dim,
                actual: len,
            });
        }
    }
    let mut stepper = JordanStepper::new(spec, dt)?;
    let mut next = u.to_vec();
    stepper.step(&mut next, xi);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jordan_matrix(p: f64, dim: usize) -> Vec<Vec<f64>> {
        (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        if i == j {
                            p
                        } else if j == i + 1 {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn matvec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
            .collect()
    }

    fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..a.len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
    }

    #[test]
    fn top_of_chain_evolves_in_closed_form() {
        let p = -0.3;
        let t = 1.7;
        let spec = SystemSpec::jordan(4, p).unwrap();
        let next = jordan_step(&[0.0, 0.0, 0.0, 1.0], &[0.0; 4], &spec, t).unwrap();
        let e = (p * t).exp();
        let expected = [e * t.powi(3) / 6.0, e * t * t / 2.0, e * t, e];
        for (a, b) in next.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn eigenvector_decays_without_mixing() {
        let p = -0.3;
        let spec = SystemSpec::jordan(4, p).unwrap();
        let next = jordan_step(&[1.0, 0.0, 0.0, 0.0], &[0.0; 4], &spec, 0.4).unwrap();
        assert!((next[0] - (p * 0.4f64).exp()).abs() < 1e-15);
        assert!(next[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_coupling_gives_deterministic_decay() {
        let spec = SystemSpec::jordan(4, -0.5).unwrap().with_sigma_r(0.0).unwrap();
        let u0 = [0.3, -1.0, 2.0, 0.5];
        let next = jordan_step(&u0, &[5.0, 5.0, 5.0, 5.0], &spec, 40.0).unwrap();
        let n0: f64 = u0.iter().map(|v| v * v).sum();
        let n1: f64 = next.iter().map(|v| v * v).sum();
        assert!(n1 < n0);
    }

    #[test]
    fn forcing_matches_quadrature_of_the_exponential() {
        // compare σ_R ∫_0^h e^{J s} ds ξ against composite Simpson, both regimes of |p h|
        for (p, h) in [(-0.01, 0.1), (-2.0, 3.0), (-0.7, 1.0)] {
            let spec = SystemSpec::jordan(4, p).unwrap();
            let xi = [0.2, -0.4, 1.0, 0.7];
            let got = jordan_step(&[0.0; 4], &xi, &spec, h).unwrap();
            let n = 2000;
            let mut acc = [0.0; 4];
            for k in 0..=n {
                let s = h * k as f64 / n as f64;
                let w = if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let v = jordan_step(&xi, &[0.0; 4], &spec.with_sigma_r(0.0).unwrap(), s.max(1e-300)).unwrap();
                for i in 0..4 {
                    acc[i] += w * v[i];
                }
            }
            for i in 0..4 {
                let quad = acc[i] * h / (3.0 * n as f64);
                assert!((got[i] - quad).abs() < 1e-10 * (1.0 + quad.abs()), "p={p} i={i}");
            }
        }
    }

    #[test]
    fn chains_satisfy_jordan_relations_and_biorthogonality() {
        let p = -0.25;
        let dim = 4;
        let j = jordan_matrix(p, dim);
        let jt = transpose(&j);
        let chain = chain(dim);
        for k in 0..dim {
            let (r, l) = &chain[k];
            let jr = matvec(&j, r);
            let jl = matvec(&jt, l);
            for i in 0..dim {
                let prev_r = if k > 0 { chain[k - 1].0[i] } else { 0.0 };
                let prev_l = if k > 0 { chain[k - 1].1[i] } else { 0.0 };
                assert_eq!(jr[i], p * r[i] + prev_r);
                assert_eq!(jl[i], p * l[i] + prev_l);
            }
        }
        for k in 1..=dim {
            for m in 1..=dim {
                let ip: f64 = chain[k - 1].0.iter().zip(&chain[dim - m].1).map(|(a, b)| a * b).sum();
                assert_eq!(ip, if k == m { 1.0 } else { 0.0 }, "<e_{k}, e*_{}>", dim - m + 1);
            }
        }
    }

    #[test]
    fn rejects_wrong_dimension() {
        let spec = SystemSpec::jordan(4, -0.5).unwrap();
        assert!(jordan_step(&[0.0; 3], &[0.0; 4], &spec, 0.1).is_err());
    }
}
