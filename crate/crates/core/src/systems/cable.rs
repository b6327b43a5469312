use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{check_dt, phi1, SystemSpec, Variant};
use crate::error::{EwsError, Result};
use crate::grid::Grid1D;
use crate::noise::{standard_normal, NoiseRng, OUParams, OuTransition, QSpectrum};

/// Fourier wavenumber of the `i`-th eigenfunction (1-based): 0, 1, 1, 2, 2, ...
pub(crate) fn mode_wavenumber(i: usize) -> usize {
    i / 2
}

/// `p - (2πk/L)²`
pub(crate) fn mode_eigenvalue(grid: &Grid1D, p: f64, k: f64) -> f64 {
    let w = 2.0 * PI * k / (grid.right() - grid.left());
    p - w * w
}

/// Real eigenfunctions of the periodic Laplacian, orthonormal under the
/// Riemann inner product: `1`, `√2 cos(2πx)`, `√2 sin(2πx)`, `√2 cos(4πx)`, ...
pub(crate) fn mode_function(grid: &Grid1D, i: usize) -> Vec<f64> {
    assert!(i >= 1, "modes are numbered from 1");
    let k = mode_wavenumber(i) as f64;
    let len = grid.right() - grid.left();
    grid.nodes()
        .map(|x| {
            let theta = 2.0 * PI * k * (x - grid.left()) / len;
            match i {
                1 => 1.0,
                _ if i.is_multiple_of(2) => SQRT_2 * theta.cos(),
                _ => SQRT_2 * theta.sin(),
            }
        })
        .collect()
}

/// Spectral exponential integrator for `du = ((Δ + p) u + σ_R ξ) dt` on a
/// periodic grid. Per DFT bin with wavenumber `k`:
/// `û' = e^{λ_k dt} û + σ_R φ(λ_k) ξ̂`, `λ_k = p - (2πk/L)²`.
pub struct CableStepper {
    n: usize,
    decay: Vec<f64>,
    forcing: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    u_hat: Vec<Complex64>,
    xi_hat: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl fmt::Debug for CableStepper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CableStepper")
            .field("n", &self.n)
            .finish_non_exhaustive()
    }
}

impl CableStepper {
    pub fn new(spec: &SystemSpec, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        let grid = match spec.variant() {
            Variant::CablePeriodic(c) => &c.grid,
            other => {
                return Err(EwsError::Unsupported(format!(
                    "cable stepper applied to {}",
                    other.name()
                )))
            }
        };
        let n = grid.len();
        let mut decay = Vec::with_capacity(n);
        let mut forcing = Vec::with_capacity(n);
        for j in 0..n {
            let k = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            let lambda = mode_eigenvalue(grid, spec.p(), k);
            decay.push((lambda * dt).exp());
            forcing.push(spec.sigma_r() * phi1(lambda, dt));
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Ok(CableStepper {
            n,
            decay,
            forcing,
            fwd,
            inv,
            u_hat: vec![Complex64::default(); n],
            xi_hat: vec![Complex64::default(); n],
            scratch: vec![Complex64::default(); scratch_len],
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward DFT of a real grid vector into `out`.
    pub fn transform(&mut self, values: &[f64], out: &mut [Complex64]) {
        for (o, v) in out.iter_mut().zip(values) {
            *o = Complex64::new(*v, 0.0);
        }
        self.fwd.process_with_scratch(out, &mut self.scratch);
    }

    /// Advances grid values in place.
    pub fn step(&mut self, u: &mut [f64], xi: &[f64]) {
        let mut u_hat = std::mem::take(&mut self.u_hat);
        self.transform(u, &mut u_hat);
        self.step_spectral(&mut u_hat, xi);
        self.inv.process_with_scratch(&mut u_hat, &mut self.scratch);
        let scale = 1.0 / self.n as f64;
        for (v, c) in u.iter_mut().zip(&u_hat) {
            *v = c.re * scale;
        }
        self.u_hat = u_hat;
    }

    /// Advances a state held as its unnormalized DFT; only `ξ` is transformed.
    pub fn step_spectral(&mut self, u_hat: &mut [Complex64], xi: &[f64]) {
        let mut xi_hat = std::mem::take(&mut self.xi_hat);
        self.transform(xi, &mut xi_hat);
        for j in 0..self.n {
            u_hat[j] = u_hat[j] * self.decay[j] + xi_hat[j] * self.forcing[j];
        }
        self.xi_hat = xi_hat;
    }
}

/// The periodic cable equation advanced in the DFT basis of its grid, with
/// the red noise drawn directly in Fourier space.
///
/// The DFT of i.i.d. node noise of variance `s²` has independent bins: bin 0
/// (and bin `n/2` for even `n`) is real with variance `n s²`, every other bin
/// has independent real and imaginary parts of variance `n s²/2`. Since every
/// node carries the same OU dynamics, so does every bin, and the scheme needs
/// no transform per step. Bins above `n/2` are the conjugates of those below.
pub struct SpectralCable {
    n: usize,
    decay: Vec<f64>,
    forcing: Vec<f64>,
    xi_decay: f64,
    xi_std: Vec<(f64, f64)>,
    u_hat: Vec<Complex64>,
    xi_hat: Vec<Complex64>,
}

impl fmt::Debug for SpectralCable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralCable")
            .field("n", &self.n)
            .finish_non_exhaustive()
    }
}

impl SpectralCable {
    /// Starts from `u ≡ 0, ξ ≡ 0`. The noise weight must be the same on every node.
    pub fn new(spec: &SystemSpec, dt: f64, noise: &OUParams) -> Result<Self> {
        check_dt(dt)?;
        let grid = match spec.variant() {
            Variant::CablePeriodic(c) => &c.grid,
            other => {
                return Err(EwsError::Unsupported(format!(
                    "spectral cable scheme applied to {}",
                    other.name()
                )))
            }
        };
        if matches!(noise.q, QSpectrum::PerNode(_)) {
            return Err(EwsError::Unsupported(
                "spectral noise needs the same weight on every node".into(),
            ));
        }
        let n = grid.len();
        let tr = OuTransition::new(noise, dt, n)?;
        let s = tr.innovation_std(0);
        let bins = n / 2 + 1;
        let mut decay = Vec::with_capacity(bins);
        let mut forcing = Vec::with_capacity(bins);
        let mut xi_std = Vec::with_capacity(bins);
        for k in 0..bins {
            let lambda = mode_eigenvalue(grid, spec.p(), k as f64);
            decay.push((lambda * dt).exp());
            forcing.push(spec.sigma_r() * phi1(lambda, dt));
            let real_bin = k == 0 || 2 * k == n;
            xi_std.push(if real_bin {
                ((n as f64).sqrt() * s, 0.0)
            } else {
                let h = (n as f64 / 2.0).sqrt() * s;
                (h, h)
            });
        }
        Ok(SpectralCable {
            n,
            decay,
            forcing,
            xi_decay: tr.decay(),
            xi_std,
            u_hat: vec![Complex64::default(); bins],
            xi_hat: vec![Complex64::default(); bins],
        })
    }

    /// One step: `ξ̂` by its exact OU transition, then `û` with the new `ξ̂` frozen.
    #[inline]
    pub fn advance(&mut self, rng: &mut NoiseRng) {
        for (x, &(sr, si)) in self.xi_hat.iter_mut().zip(&self.xi_std) {
            let re = x.re * self.xi_decay + sr * standard_normal(rng);
            let im = if si > 0.0 {
                x.im * self.xi_decay + si * standard_normal(rng)
            } else {
                0.0
            };
            *x = Complex64::new(re, im);
        }
        self.step_u();
    }

    /// One step with a caller-supplied noise spectrum (bins `0..=n/2`).
    pub fn advance_with(&mut self, xi_hat: &[Complex64]) {
        let bins = self.xi_hat.len();
        self.xi_hat.copy_from_slice(&xi_hat[..bins]);
        self.step_u();
    }

    #[inline]
    fn step_u(&mut self) {
        for k in 0..self.u_hat.len() {
            self.u_hat[k] = self.u_hat[k] * self.decay[k] + self.xi_hat[k] * self.forcing[k];
        }
    }

    pub fn u_hat(&self) -> &[Complex64] {
        &self.u_hat
    }

    pub fn xi_hat(&self) -> &[Complex64] {
        &self.xi_hat
    }

    /// `⟨·, v⟩` with weight `w`, evaluated on half spectra.
    pub fn functional(&self, values: &[f64], w: f64) -> SpectralFunctional {
        SpectralFunctional::new(values, w)
    }
}

/// A real inner product `w Σ x_j v_j` rewritten by Parseval as
/// `Σ_k (a_k Re x̂_k + b_k Im x̂_k)` over bins `0..=n/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunctional {
    terms: Vec<(usize, f64, f64)>,
}

impl SpectralFunctional {
    pub fn new(values: &[f64], w: f64) -> Self {
        let n = values.len();
        let mut hat: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut hat);
        let max = hat.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let terms = (0..=n / 2)
            .filter(|&k| hat[k].norm() > 1e-14 * max)
            .map(|k| {
                let c = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
                let f = c * w / n as f64;
                (k, f * hat[k].re, f * hat[k].im)
            })
            .collect();
        SpectralFunctional { terms }
    }

    #[inline]
    pub fn apply(&self, x_hat: &[Complex64]) -> f64 {
        self.terms
            .iter()
            .map(|&(k, a, b)| a * x_hat[k].re + b * x_hat[k].im)
            .sum()
    }
}

/// One step of the periodic cable equation.
pub fn cable_periodic_step(u: &[f64], xi: &[f64], spec: &SystemSpec, dt: f64) -> Result<Vec<f64>> {
    let grid = spec.state_grid();
    if !matches!(spec.variant(), Variant::CablePeriodic(_)) {
        return Err(EwsError::Unsupported("cable_periodic_step needs a cable system".into()));
    }
    if u.len() != grid.len() || xi.len() != grid.len() {
        return Err(EwsError::GridMismatch(format!(
            "u has {} nodes and xi {} nodes, grid has {}",
            u.len(),
            xi.len(),
            grid.len()
        )));
    }
    let mut stepper = CableStepper::new(spec, dt)?;
    let mut next = u.to_vec();
    stepper.step(&mut next, xi);
    Ok(next)
}
