//! Red-noise fields: Q-Wiener increments and exact Ornstein–Uhlenbeck updates.
//!
//! Each node carries an independent scalar process
//! `dξ = -κ ξ dt + σ √q dW`, advanced with its exact Gaussian transition
//! `ξ' = e^{-κ dt} ξ + η`, `Var η = σ² q (1 - e^{-2κ dt}) / (2κ)`.
//!
//! Streams are keyed by `(root_seed, row, sample)` so ensembles are reproducible
//! regardless of the order in which trajectories are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{EwsError, Result};
use crate::grid::Grid1D;

pub type NoiseRng = ChaCha8Rng;

/// Independent generator for sample `sample` of sweep row `row`.
pub fn stream_rng(root_seed: u64, row: u32, sample: u32) -> NoiseRng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(((row as u64) << 32) | sample as u64);
    rng
}

#[inline]
pub(crate) fn standard_normal(rng: &mut NoiseRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Diagonal covariance of the driving Wiener process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QSpectrum {
    Identity,
    /// Same weight on every node (e.g. `1/δx` for cylindrical normalization).
    Uniform(f64),
    PerNode(Vec<f64>),
}

impl QSpectrum {
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        match self {
            QSpectrum::Identity => 1.0,
            QSpectrum::Uniform(w) => *w,
            QSpectrum::PerNode(w) => w[i],
        }
    }

    fn validate(&self, len: usize) -> Result<()> {
        let ok = |w: f64| w.is_finite() && w > 0.0;
        match self {
            QSpectrum::Identity => Ok(()),
            QSpectrum::Uniform(w) if ok(*w) => Ok(()),
            QSpectrum::Uniform(w) => Err(EwsError::param("q", format!("weight {w} must be > 0"))),
            QSpectrum::PerNode(ws) => {
                if ws.len() != len {
                    return Err(EwsError::DimensionMismatch {
                        expected: len,
                        actual: ws.len(),
                    });
                }
                match ws.iter().position(|w| !ok(*w)) {
                    Some(i) => Err(EwsError::param(
                        "q",
                        format!("weight {} at node {i} must be > 0", ws[i]),
                    )),
                    None => Ok(()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OUParams {
    pub kappa: f64,
    pub sigma: f64,
    pub q: QSpectrum,
}

impl OUParams {
    pub fn new(kappa: f64, sigma: f64) -> Result<Self> {
        Self::with_q(kappa, sigma, QSpectrum::Identity)
    }

    pub fn with_q(kappa: f64, sigma: f64, q: QSpectrum) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(EwsError::param("kappa", format!("must be > 0, got {kappa}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(EwsError::param("sigma", format!("must be >= 0, got {sigma}")));
        }
        if let QSpectrum::Uniform(_) = q {
            q.validate(0)?;
        }
        Ok(OUParams { kappa, sigma, q })
    }

    /// Cylindrical (space-time white) normalization: weight `1/δx` on spatial
    /// grids so that `⟨ξ, e⟩` has variance `‖e‖² σ²/(2κ)`; unit weight otherwise.
    pub fn cylindrical(kappa: f64, sigma: f64, grid: &Grid1D) -> Result<Self> {
        let q = if grid.kind().is_spatial() {
            QSpectrum::Uniform(1.0 / grid.spacing())
        } else {
            QSpectrum::Identity
        };
        Self::with_q(kappa, sigma, q)
    }

    /// Stationary variance `σ² q_i / (2κ)` of node `i`.
    pub fn stationary_variance(&self, i: usize) -> f64 {
        self.sigma * self.sigma * self.q.weight(i) / (2.0 * self.kappa)
    }

    pub(crate) fn check_nodes(&self, len: usize) -> Result<()> {
        self.q.validate(len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OUField {
    pub values: Vec<f64>,
    pub time: f64,
}

impl OUField {
    pub fn zeros(len: usize) -> Self {
        OUField {
            values: vec![0.0; len],
            time: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(EwsError::param("dt", format!("must be > 0, got {dt}")));
    }
    Ok(())
}

/// Independent increments `ΔW_i ~ N(0, q_i dt)`, one per node.
pub fn sample_wiener_increment(grid: &Grid1D, params: &OUParams, dt: f64, rng: &mut NoiseRng) -> Result<Vec<f64>> {
    check_dt(dt)?;
    params.check_nodes(grid.len())?;
    Ok((0..grid.len())
        .map(|i| (params.q.weight(i) * dt).sqrt() * standard_normal(rng))
        .collect())
}

/// Precomputed exact one-step transition for fixed `(κ, σ, q, dt)`.
#[derive(Debug, Clone)]
pub struct OuTransition {
    decay: f64,
    std: Vec<f64>,
    uniform: bool,
    dt: f64,
}

impl OuTransition {
    pub fn new(params: &OUParams, dt: f64, len: usize) -> Result<Self> {
        check_dt(dt)?;
        params.check_nodes(len)?;
        let kappa = params.kappa;
        let decay = (-kappa * dt).exp();
        // (1 - e^{-2κdt}) / (2κ), written with expm1 to stay accurate as κdt → 0
        let factor = -(-2.0 * kappa * dt).exp_m1() / (2.0 * kappa);
        let s2 = params.sigma * params.sigma;
        let (std, uniform) = match &params.q {
            QSpectrum::Identity => (vec![(s2 * factor).sqrt()], true),
            QSpectrum::Uniform(w) => (vec![(s2 * w * factor).sqrt()], true),
            QSpectrum::PerNode(ws) => (ws.iter().map(|w| (s2 * w * factor).sqrt()).collect(), false),
        };
        Ok(OuTransition {
            decay,
            std,
            uniform,
            dt,
        })
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    /// Standard deviation of the innovation at node `i`.
    pub fn innovation_std(&self, i: usize) -> f64 {
        if self.uniform {
            self.std[0]
        } else {
            self.std[i]
        }
    }

    /// Advances `values` in place, drawing one standard normal per node.
    #[inline]
    pub fn advance(&self, values: &mut [f64], rng: &mut NoiseRng) {
        if self.uniform {
            let s = self.std[0];
            for v in values.iter_mut() {
                *v = self.decay * *v + s * standard_normal(rng);
            }
        } else {
            for (v, s) in values.iter_mut().zip(&self.std) {
                *v = self.decay * *v + s * standard_normal(rng);
            }
        }
    }

    /// Advances `values` with caller-supplied standard normals.
    pub fn advance_with(&self, values: &mut [f64], normals: &[f64]) {
        for (i, (v, z)) in values.iter_mut().zip(normals).enumerate() {
            *v = self.decay * *v + self.innovation_std(i) * z;
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// One exact Ornstein–Uhlenbeck step of every node.
pub fn ou_exact_step(state: &OUField, params: &OUParams, dt: f64, rng: &mut NoiseRng) -> Result<OUField> {
    let transition = OuTransition::new(params, dt, state.len())?;
    let mut next = state.clone();
    transition.advance(&mut next.values, rng);
    next.time += dt;
    Ok(next)
}

/// Draw from the stationary law `N(0, σ² q_i / (2κ))`.
pub fn ou_stationary_sample(grid: &Grid1D, params: &OUParams, rng: &mut NoiseRng) -> Result<OUField> {
    params.check_nodes(grid.len())?;
    let values = (0..grid.len())
        .map(|i| params.stationary_variance(i).sqrt() * standard_normal(rng))
        .collect();
    Ok(OUField { values, time: 0.0 })
}
