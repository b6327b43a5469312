//! Stationary covariance oracles: closed forms, Lyapunov solves, the Jordan
//! chain formula and the continuous-spectrum quadrature, plus the predicted
//! scaling regimes.
//!
//! All spatial noise uses the cylindrical normalization of
//! [`crate::noise::OUParams::cylindrical`]: the projection of `ξ` on a unit
//! vector has variance `σ²/(2κ)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{EwsError, Result};
use crate::grid::Grid1D;
use crate::probes::{weighted_dot, Probe, ProbeSpec};
use crate::quadrature::{adaptive_simpson_pieces, Tolerance};
use crate::systems::{jordan, DriftProfile, SystemSpec, Variant};

fn check_rates(p: f64, kappa: f64, sigma: f64, sigma_r: f64) -> Result<()> {
    if !(p < 0.0 && p.is_finite()) {
        return Err(EwsError::param("p", format!("must be < 0, got {p}")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(EwsError::param("kappa", format!("must be > 0, got {kappa}")));
    }
    if !(sigma >= 0.0 && sigma_r >= 0.0) {
        return Err(EwsError::param("sigma", "noise intensities must be >= 0"));
    }
    Ok(())
}

/// Stationary variance of `du = (p u + σ_R ξ) dt` with scalar OU `ξ`:
/// `σ²σ_R² / (2κ(-p)(κ-p))`.
pub fn scalar_red_noise_variance(p: f64, kappa: f64, sigma: f64, sigma_r: f64) -> Result<f64> {
    check_rates(p, kappa, sigma, sigma_r)?;
    Ok(sigma * sigma * sigma_r * sigma_r / (2.0 * kappa * (-p) * (kappa - p)))
}

/// Stationary second moments `(C_uu, C_uξ, C_ξξ)` of the pair `(u, ξ)` for a
/// scalar mode with eigenvalue `λ`.
fn mode_moments(lambda: f64, kappa: f64, sigma: f64, sigma_r: f64) -> (f64, f64, f64) {
    let cxx = sigma * sigma / (2.0 * kappa);
    let cux = sigma_r * cxx / (kappa - lambda);
    let cuu = sigma_r * cux / (-lambda);
    (cuu, cux, cxx)
}

/// Stationary variance of `u` under the time-stepping actually used for
/// simulation: `u_{n+1} = e^{λh} u_n + σ_R φ(λ,h) ξ_{n+1}` with exact OU
/// transitions for `ξ`. Differs from [`scalar_red_noise_variance`] by `O(h)`.
pub fn scalar_scheme_variance(lambda: f64, kappa: f64, sigma: f64, sigma_r: f64, dt: f64) -> Result<f64> {
    check_rates(lambda, kappa, sigma, sigma_r)?;
    let a = (lambda * dt).exp();
    let rho = (-kappa * dt).exp();
    let b = sigma_r * (lambda * dt).exp_m1() / lambda;
    let var_xi = sigma * sigma / (2.0 * kappa);
    Ok(b * b * var_xi * (1.0 + a * rho) / ((1.0 - a * a) * (1.0 - a * rho)))
}

/// Solves `A C + C Aᵀ + Q = 0` through the Kronecker system
/// `(I ⊗ A + A ⊗ I) vec C = -vec Q`.
pub fn lyapunov_stationary_covariance(drift: &DMatrix<f64>, noise_cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = drift.nrows();
    if drift.ncols() != n || noise_cov.shape() != (n, n) {
        return Err(EwsError::DimensionMismatch {
            expected: n,
            actual: if drift.ncols() != n {
                drift.ncols()
            } else {
                noise_cov.nrows()
            },
        });
    }
    let worst = drift
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(worst < 0.0) {
        return Err(EwsError::param(
            "drift",
            format!("not stable: eigenvalue with real part {worst}"),
        ));
    }
    let m = n * n;
    let mut k = DMatrix::<f64>::zeros(m, m);
    for j in 0..n {
        for i in 0..n {
            let row = i + n * j;
            for l in 0..n {
                k[(row, l + n * j)] += drift[(i, l)];
                k[(row, i + n * l)] += drift[(j, l)];
            }
        }
    }
    let rhs = DVector::from_iterator(m, noise_cov.iter().map(|v| -v));
    let x = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| EwsError::Singular("Lyapunov Kronecker system".into()))?;
    let c = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok((&c + c.transpose()) * 0.5)
}

/// A single Jordan block `λ I + N` of size `M` driven by red noise with `Q = I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JordanSpec {
    pub eigenvalue: f64,
    pub block_size: usize,
    pub kappa: f64,
    pub sigma: f64,
    pub sigma_r: f64,
}

impl JordanSpec {
    pub fn new(eigenvalue: f64, block_size: usize, kappa: f64, sigma: f64, sigma_r: f64) -> Result<Self> {
        check_rates(eigenvalue, kappa, sigma, sigma_r)?;
        if block_size == 0 {
            return Err(EwsError::param("block_size", "must be >= 1"));
        }
        if (eigenvalue + kappa).abs() <= 1e-12 * kappa {
            return Err(EwsError::param("kappa", "-kappa coincides with the eigenvalue"));
        }
        Ok(JordanSpec {
            eigenvalue,
            block_size,
            kappa,
            sigma,
            sigma_r,
        })
    }

    /// Drift `[[J, σ_R I], [0, -κ I]]` and noise `diag(0, σ² I)` of the joint system.
    pub fn extended_system(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let m = self.block_size;
        let mut drift = DMatrix::zeros(2 * m, 2 * m);
        let mut noise = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            drift[(i, i)] = self.eigenvalue;
            if i + 1 < m {
                drift[(i, i + 1)] = 1.0;
            }
            drift[(i, m + i)] = self.sigma_r;
            drift[(m + i, m + i)] = -self.kappa;
            noise[(m + i, m + i)] = self.sigma * self.sigma;
        }
        (drift, noise)
    }

    /// `μ_k = (Jᵀ + κ)^{-1} e*_k = -Σ_{j≤k} (-λ-κ)^{-k+j-1} e*_j`, `k = 1..=M`.
    pub fn resolvent_chain(&self) -> Vec<Vec<f64>> {
        let chain = jordan::chain(self.block_size);
        let base = -self.eigenvalue - self.kappa;
        (1..=self.block_size)
            .map(|k| {
                let mut mu = vec![0.0; self.block_size];
                for j in 1..=k {
                    let w = -base.powi(j as i32 - k as i32 - 1);
                    for (m, e) in mu.iter_mut().zip(&chain[j - 1].1) {
                        *m += w * e;
                    }
                }
                mu
            })
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Covariance of `u` along the left generalized eigenvectors `e*_{k1}` and
/// `e*_{k2}` of a Jordan block, from the four-term closed form.
pub fn jordan_variance_formula(spec: &JordanSpec, k1: usize, k2: usize) -> Result<f64> {
    let m = spec.block_size;
    for k in [k1, k2] {
        if k == 0 || k > m {
            return Err(EwsError::param("k", format!("chain index {k} outside 1..={m}")));
        }
    }
    let lam = spec.eigenvalue;
    let kap = spec.kappa;
    let mu = spec.resolvent_chain();
    let mut total = 0.0;
    for j1 in 1..=k1 {
        for j2 in 1..=k2 {
            let a = k1 - j1;
            let b = k2 - j2;
            total +=
                binomial(a + b, a) * (-2.0 * lam).powi(-(a as i32) - (b as i32) - 1) * dot(&mu[j1 - 1], &mu[j2 - 1]);
        }
    }
    for j2 in 1..=k2 {
        total -= (kap - lam).powi(j2 as i32 - k2 as i32 - 1) * dot(&mu[k1 - 1], &mu[j2 - 1]);
    }
    for j1 in 1..=k1 {
        total -= (kap - lam).powi(j1 as i32 - k1 as i32 - 1) * dot(&mu[j1 - 1], &mu[k2 - 1]);
    }
    total += dot(&mu[k1 - 1], &mu[k2 - 1]) / (2.0 * kap);
    Ok(spec.sigma * spec.sigma * spec.sigma_r * spec.sigma_r * total)
}

/// The same covariance read off the `2M × 2M` Lyapunov solution.
pub fn jordan_lyapunov_variance(spec: &JordanSpec, k1: usize, k2: usize) -> Result<f64> {
    let m = spec.block_size;
    for k in [k1, k2] {
        if k == 0 || k > m {
            return Err(EwsError::param("k", format!("chain index {k} outside 1..={m}")));
        }
    }
    let (drift, noise) = spec.extended_system();
    let c = lyapunov_stationary_covariance(&drift, &noise)?;
    let chain = jordan::chain(m);
    let (a, b) = (&chain[k1 - 1].1, &chain[k2 - 1].1);
    let mut v = 0.0;
    for i in 0..m {
        for j in 0..m {
            v += a[i] * c[(i, j)] * b[j];
        }
    }
    Ok(v)
}

/// `∫_0^∞ ((e^{ft} - e^{-κt})/(f+κ))² dt` in closed form:
/// `(-1/(2f) + 2/(f-κ) + 1/(2κ)) / (f+κ)²`, which reduces to `1/(2(-f)κ(κ-f))`.
fn pointwise_kernel(f: f64, kappa: f64) -> f64 {
    if (f + kappa).abs() > 0.1 * kappa {
        (-0.5 / f + 2.0 / (f - kappa) + 0.5 / kappa) / ((f + kappa) * (f + kappa))
    } else {
        // the bracket vanishes to second order at f = -κ; use the cancelled form
        1.0 / (2.0 * (-f) * kappa * (kappa - f))
    }
}

fn check_profile_interval(profile: &DriftProfile, p: f64, s: (f64, f64)) -> Result<()> {
    profile.validate()?;
    if !(s.0 < s.1) || !s.0.is_finite() || !s.1.is_finite() {
        return Err(EwsError::param(
            "S",
            format!("need a finite interval, got [{}, {}]", s.0, s.1),
        ));
    }
    // f ≤ p at the critical point; check f < 0 at the ends and the critical point
    let xc = profile.critical_point().clamp(s.0, s.1);
    for x in [s.0, xc, s.1] {
        let f = profile.drift(x, p);
        if !(f < 0.0) {
            return Err(EwsError::param("p", format!("drift f({x}) = {f} is not negative")));
        }
    }
    Ok(())
}

/// Breakpoints that resolve the `|x - x_c|` scales near the critical point.
fn critical_breaks(s: (f64, f64), xc: f64) -> Vec<f64> {
    let mut breaks = vec![s.0, s.1];
    if xc > s.0 && xc < s.1 {
        breaks.push(xc);
    }
    for e in 1..=24 {
        let d = 10f64.powi(-e) * (s.1 - s.0);
        for x in [xc - d, xc + d] {
            if x > s.0 && x < s.1 {
                breaks.push(x);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

/// `σ²σ_R² ∫_S (-1/(2f) + 2/(f-κ) + 1/(2κ)) / (f+κ)² dx`, the stationary
/// variance along `𝟙_S` for the multiplication operator `f(x, p)`.
pub fn continuous_variance_quadrature(
    profile: &DriftProfile,
    p: f64,
    kappa: f64,
    sigma: f64,
    sigma_r: f64,
    s: (f64, f64),
) -> Result<f64> {
    check_rates(p, kappa, sigma, sigma_r)?;
    check_profile_interval(profile, p, s)?;
    let scale = sigma * sigma * sigma_r * sigma_r;
    if scale == 0.0 {
        return Ok(0.0);
    }
    let breaks = critical_breaks(s, profile.critical_point());
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-11,
        max_depth: 60,
    };
    let v = adaptive_simpson_pieces(|x| pointwise_kernel(profile.drift(x, p), kappa), &breaks, tol)?;
    Ok(scale * v)
}

/// Composite Simpson rule with `panels` equal panels on `[a, b]`.
fn composite_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..2 * panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + 0.5 * h * i as f64);
    }
    acc * h / 6.0
}

/// Independent evaluation of the same quantity as a nested integral
/// `∫_S ∫_0^{T(x)} ((e^{ft} - e^{-κt})/(f+κ))² dt dx`, truncated where the
/// integrand has decayed below `e^{-80}`.
///
/// The inner integral uses a fixed composite rule on dyadic time pieces so
/// that it is a smooth function of `x`; the outer integral is adaptive.
pub fn continuous_variance_time_integral(
    profile: &DriftProfile,
    p: f64,
    kappa: f64,
    sigma: f64,
    sigma_r: f64,
    s: (f64, f64),
) -> Result<f64> {
    check_rates(p, kappa, sigma, sigma_r)?;
    check_profile_interval(profile, p, s)?;
    let inner = |x: f64| -> f64 {
        let f = profile.drift(x, p);
        let slow = (-f).min(kappa);
        let fast = (-f).max(kappa);
        let t_max = 40.0 / slow;
        // (e^{ft} - e^{-κt})/(f+κ) = e^{mt} (1 - e^{-|f+κ|t}) / |f+κ|, m = max(f, -κ)
        let d = (f + kappa).abs();
        let m = f.max(-kappa);
        let g = |t: f64| {
            let v = if d == 0.0 {
                t * (m * t).exp()
            } else {
                (m * t).exp() * -(-d * t).exp_m1() / d
            };
            v * v
        };
        let mut lo = 0.0;
        let mut hi = 0.25 / fast;
        let mut total = 0.0;
        while lo < t_max {
            let top = hi.min(t_max);
            total += composite_simpson(&g, lo, top, 64);
            lo = top;
            hi *= 2.0;
        }
        total
    };
    let breaks = critical_breaks(s, profile.critical_point());
    let outer_tol = Tolerance {
        abs: 0.0,
        rel: 1e-10,
        max_depth: 60,
    };
    let v = adaptive_simpson_pieces(inner, &breaks, outer_tol)?;
    Ok(sigma * sigma * sigma_r * sigma_r * v)
}

/// Stationary variance of `⟨(u, ξ), probe⟩` for the continuous-time system on
/// its grid. Extended probes include the noise component. The boundary
/// system is not covered.
pub fn probe_variance_oracle(spec: &SystemSpec, kappa: f64, sigma: f64, probe: &Probe) -> Result<f64> {
    check_rates(spec.p(), kappa, sigma, spec.sigma_r())?;
    let grid = spec.state_grid();
    grid.check_len(probe.u_part.len())?;
    let xi_part = probe.xi_part.clone().unwrap_or_else(|| vec![0.0; probe.u_part.len()]);
    let sr = spec.sigma_r();
    let pair = |a: f64, b: f64, lambda: f64| {
        let (cuu, cux, cxx) = mode_moments(lambda, kappa, sigma, sr);
        a * a * cuu + 2.0 * a * b * cux + b * b * cxx
    };
    match spec.variant() {
        Variant::CablePeriodic(c) => {
            let w = c.grid.weight();
            Ok(periodic_modes(&c.grid)
                .map(|(k, mode)| {
                    let a = weighted_dot(&probe.u_part, &mode, w);
                    let b = weighted_dot(&xi_part, &mode, w);
                    let lambda = spec.p() - (2.0 * PI * k / (c.grid.right() - c.grid.left())).powi(2);
                    pair(a, b, lambda)
                })
                .sum())
        }
        Variant::MultiplicationOp(_) => {
            // nodes are independent scalar systems; node noise carries weight 1/δx
            let dx = grid.weight();
            let drift = spec.drift_values().expect("multiplication variant");
            Ok(drift
                .iter()
                .zip(probe.u_part.iter().zip(&xi_part))
                .map(|(f, (a, b))| dx * pair(*a, *b, *f))
                .sum())
        }
        Variant::JordanChain(j) => {
            // the Lyapunov solve stays regular at p = -κ, where JordanSpec::new refuses
            let js = JordanSpec {
                eigenvalue: spec.p(),
                block_size: j.dim,
                kappa,
                sigma,
                sigma_r: sr,
            };
            let (drift, noise) = js.extended_system();
            let c = lyapunov_stationary_covariance(&drift, &noise)?;
            let w: Vec<f64> = probe.u_part.iter().chain(&xi_part).copied().collect();
            let w = DVector::from_vec(w);
            Ok(w.dot(&(&c * &w)))
        }
        Variant::CableBoundaryNoise(_) => Err(EwsError::Unsupported(
            "no analytic oracle for the boundary-noise system".into(),
        )),
    }
}

/// Orthonormal real Fourier basis on a periodic grid with its wavenumbers,
/// including the Nyquist mode for even sizes.
fn periodic_modes(grid: &Grid1D) -> impl Iterator<Item = (f64, Vec<f64>)> + '_ {
    let n = grid.len();
    let len = grid.right() - grid.left();
    let sq2 = std::f64::consts::SQRT_2;
    (0..n).map(move |idx| {
        let k = idx.div_ceil(2);
        let values: Vec<f64> = grid
            .nodes()
            .map(|x| {
                let theta = 2.0 * PI * k as f64 * (x - grid.left()) / len;
                if idx == 0 {
                    1.0
                } else if n.is_multiple_of(2) && idx == n - 1 {
                    theta.cos()
                } else if idx % 2 == 1 {
                    sq2 * theta.cos()
                } else {
                    sq2 * theta.sin()
                }
            })
            .collect();
        (k as f64, values)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    PToZero,
    KappaToZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "regime", content = "exponent")]
pub enum Regime {
    PowerLaw(f64),
    Logarithmic,
    Bounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaPrediction {
    pub regime: Regime,
    pub limit: Limit,
}

/// Predicted divergence regime of the variance along `probe` as `p → 0⁻` or `κ → 0⁺`.
pub fn theta_prediction(spec: &SystemSpec, probe: &ProbeSpec, limit: Limit) -> Result<ThetaPrediction> {
    let regime = match limit {
        Limit::KappaToZero => Regime::PowerLaw(-1.0),
        Limit::PToZero => match (spec.variant(), probe) {
            (_, ProbeSpec::Noise(_)) => Regime::Bounded,
            (
                Variant::CablePeriodic(_) | Variant::CableBoundaryNoise(_),
                ProbeSpec::Eigen(i) | ProbeSpec::Extended(i),
            ) => {
                if *i == 1 {
                    Regime::PowerLaw(-1.0)
                } else {
                    Regime::Bounded
                }
            }
            // any indicator has a nonzero component along the leading mode
            (Variant::CablePeriodic(_) | Variant::CableBoundaryNoise(_), ProbeSpec::Indicator(..)) => {
                Regime::PowerLaw(-1.0)
            }
            (Variant::JordanChain(_), ProbeSpec::Eigen(k)) => Regime::PowerLaw(-(2.0 * *k as f64 - 1.0)),
            (Variant::JordanChain(_), ProbeSpec::Extended(1)) => Regime::PowerLaw(-1.0),
            (Variant::MultiplicationOp(m), ProbeSpec::Indicator(a, b)) => {
                let xc = m.profile.critical_point();
                if xc < *a || xc > *b {
                    Regime::Bounded
                } else {
                    match m.profile.vanishing_order() {
                        Some(alpha) if (alpha - 1.0).abs() < 1e-12 => Regime::Logarithmic,
                        Some(alpha) if alpha > 1.0 => Regime::PowerLaw(-1.0 + 1.0 / alpha),
                        Some(_) => Regime::Bounded,
                        None => {
                            return Err(EwsError::Unsupported(
                                "drift profile without a finite vanishing order".into(),
                            ))
                        }
                    }
                }
            }
            (variant, probe) => {
                return Err(EwsError::Unsupported(format!(
                    "no prediction for probe {probe} on {}",
                    variant.name()
                )))
            }
        },
    };
    Ok(ThetaPrediction { regime, limit })
}
