//! Trajectory simulation, parameter sweeps in `p → 0⁻` and `κ → 0⁺`,
//! log-log scaling fits and early-warning verdicts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{EwsError, Result};
use crate::grid::Grid1D;
use crate::noise::{stream_rng, NoiseRng, OUParams, OuTransition};
use crate::oracle::{continuous_variance_quadrature, probe_variance_oracle, Limit, Regime, ThetaPrediction};
use crate::probes::{weight, weighted_dot, Probe, ProbeSpec};
use crate::stats::{aggregate_ensemble, ProjectionSeries, RunningMoments, VarianceEstimate};
use crate::systems::{phi1, SpectralCable, SpectralFunctional, Stepper, SystemSpec, Variant};

/// Time discretization and recording schedule of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub horizon: f64,
    pub dt: f64,
    pub burn_in_fraction: f64,
    /// Record every `stride` steps.
    pub stride: usize,
}

impl TrajectoryConfig {
    pub fn new(horizon: f64, dt: f64, burn_in_fraction: f64) -> Result<Self> {
        let cfg = TrajectoryConfig {
            horizon,
            dt,
            burn_in_fraction,
            stride: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_stride(mut self, stride: usize) -> Result<Self> {
        self.stride = stride;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(EwsError::param("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(EwsError::param("horizon", format!("must be > 0, got {}", self.horizon)));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(EwsError::param(
                "burn_in_fraction",
                format!("must lie in [0, 1), got {}", self.burn_in_fraction),
            ));
        }
        if self.stride == 0 {
            return Err(EwsError::param("stride", "must be >= 1"));
        }
        if self.n_records() < self.burn_in_count() + 2 {
            return Err(EwsError::SeriesTooShort(format!(
                "horizon {} with dt {} and stride {} leaves fewer than 2 usable records",
                self.horizon, self.dt, self.stride
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn n_records(&self) -> usize {
        self.n_steps() / self.stride
    }

    pub fn burn_in_count(&self) -> usize {
        (self.burn_in_fraction * self.n_records() as f64).floor() as usize
    }

    pub fn record_dt(&self) -> f64 {
        self.dt * self.stride as f64
    }
}

/// Red-noise parameters on the system's noise space: cylindrical weight
/// `1/δx` on spatial grids, identity on finite-dimensional spaces.
pub fn noise_params(spec: &SystemSpec, kappa: f64, sigma: f64) -> Result<OUParams> {
    OUParams::cylindrical(kappa, sigma, &spec.noise_grid())
}

struct Compiled {
    u_part: Vec<f64>,
    xi_part: Option<Vec<f64>>,
    wu: f64,
    wx: f64,
}

fn compile(probes: &[Probe], u_grid: &Grid1D, xi_grid: &Grid1D) -> Result<Vec<Compiled>> {
    probes
        .iter()
        .map(|p| {
            u_grid.check_len(p.u_part.len())?;
            if let Some(x) = &p.xi_part {
                if x.len() != xi_grid.len() {
                    return Err(EwsError::DimensionMismatch {
                        expected: xi_grid.len(),
                        actual: x.len(),
                    });
                }
            }
            Ok(Compiled {
                u_part: p.u_part.clone(),
                xi_part: p.xi_part.clone(),
                wu: weight(p.kind, u_grid),
                wx: xi_grid.weight(),
            })
        })
        .collect()
}

/// Steps the full discretized system from `u ≡ 0, ξ ≡ 0` and hands the probe
/// projections of every recorded state to `observe`. The periodic cable
/// equation runs in its grid's Fourier basis.
fn simulate<F: FnMut(&[f64])>(
    spec: &SystemSpec,
    kappa: f64,
    sigma: f64,
    cfg: &TrajectoryConfig,
    probes: &[Probe],
    rng: &mut NoiseRng,
    mut observe: F,
) -> Result<()> {
    cfg.validate()?;
    let u_grid = spec.state_grid();
    let xi_grid = spec.noise_grid();
    let compiled = compile(probes, &u_grid, &xi_grid)?;
    let params = noise_params(spec, kappa, sigma)?;
    if let Variant::CablePeriodic(_) = spec.variant() {
        return simulate_spectral(spec, &params, cfg, &compiled, rng, observe);
    }
    let ou = OuTransition::new(&params, cfg.dt, xi_grid.len())?;
    let mut stepper = Stepper::new(spec, cfg.dt)?;
    let mut u = vec![0.0; u_grid.len()];
    let mut xi = vec![0.0; xi_grid.len()];
    let mut out = vec![0.0; probes.len()];
    for _ in 0..cfg.n_records() {
        for _ in 0..cfg.stride {
            ou.advance(&mut xi, rng);
            stepper.step(&mut u, &xi);
        }
        for (o, c) in out.iter_mut().zip(&compiled) {
            let mut v = weighted_dot(&u, &c.u_part, c.wu);
            if let Some(x) = &c.xi_part {
                v += weighted_dot(&xi, x, c.wx);
            }
            *o = v;
        }
        observe(&out);
    }
    Ok(())
}

fn simulate_spectral<F: FnMut(&[f64])>(
    spec: &SystemSpec,
    params: &OUParams,
    cfg: &TrajectoryConfig,
    compiled: &[Compiled],
    rng: &mut NoiseRng,
    mut observe: F,
) -> Result<()> {
    let mut cable = SpectralCable::new(spec, cfg.dt, params)?;
    let funcs: Vec<(SpectralFunctional, Option<SpectralFunctional>)> = compiled
        .iter()
        .map(|c| {
            (
                cable.functional(&c.u_part, c.wu),
                c.xi_part.as_ref().map(|x| cable.functional(x, c.wx)),
            )
        })
        .collect();
    let mut out = vec![0.0; compiled.len()];
    for _ in 0..cfg.n_records() {
        for _ in 0..cfg.stride {
            cable.advance(rng);
        }
        for (o, (fu, fx)) in out.iter_mut().zip(&funcs) {
            let mut v = fu.apply(cable.u_hat());
            if let Some(fx) = fx {
                v += fx.apply(cable.xi_hat());
            }
            *o = v;
        }
        observe(&out);
    }
    Ok(())
}

fn collect_series(
    cfg: &TrajectoryConfig,
    n_probes: usize,
    run: impl FnOnce(&mut dyn FnMut(&[f64])) -> Result<()>,
) -> Result<Vec<ProjectionSeries>> {
    let mut values = vec![Vec::with_capacity(cfg.n_records()); n_probes];
    run(&mut |x: &[f64]| {
        for (s, v) in values.iter_mut().zip(x) {
            s.push(*v);
        }
    })?;
    values
        .into_iter()
        .map(|v| ProjectionSeries::new(v, cfg.record_dt(), cfg.burn_in_count()))
        .collect()
}

fn collect_variances(
    cfg: &TrajectoryConfig,
    n_probes: usize,
    run: impl FnOnce(&mut dyn FnMut(&[f64])) -> Result<()>,
) -> Result<Vec<f64>> {
    let burn = cfg.burn_in_count();
    let mut seen = 0usize;
    let mut moments = vec![RunningMoments::new(); n_probes];
    run(&mut |x: &[f64]| {
        if seen >= burn {
            for (m, v) in moments.iter_mut().zip(x) {
                m.push(*v);
            }
        }
        seen += 1;
    })?;
    moments.iter().map(|m| m.variance()).collect()
}

/// Full-grid trajectory; one projection series per probe.
pub fn run_trajectory(
    spec: &SystemSpec,
    kappa: f64,
    sigma: f64,
    cfg: &TrajectoryConfig,
    probes: &[Probe],
    rng: &mut NoiseRng,
) -> Result<Vec<ProjectionSeries>> {
    collect_series(cfg, probes.len(), |obs| {
        simulate(spec, kappa, sigma, cfg, probes, rng, obs)
    })
}

/// Post-burn-in time variance per probe, accumulated without storing the series.
pub fn trajectory_variances(
    spec: &SystemSpec,
    kappa: f64,
    sigma: f64,
    cfg: &TrajectoryConfig,
    probes: &[Probe],
    rng: &mut NoiseRng,
) -> Result<Vec<f64>> {
    collect_variances(cfg, probes.len(), |obs| {
        simulate(spec, kappa, sigma, cfg, probes, rng, obs)
    })
}

/// Modal reduction of the periodic cable equation: only the Fourier modes
/// seen by the probes are simulated. With cylindrical noise, `⟨ξ, e_i⟩` are
/// independent scalar OU processes of variance `σ²/(2κ)`, so the projected
/// dynamics coincide in law with the full spectral scheme.
fn simulate_modal<F: FnMut(&[f64])>(
    spec: &SystemSpec,
    kappa: f64,
    sigma: f64,
    cfg: &TrajectoryConfig,
    probes: &[ProbeSpec],
    rng: &mut NoiseRng,
    mut observe: F,
) -> Result<()> {
    cfg.validate()?;
    let grid = match spec.variant() {
        Variant::CablePeriodic(c) => &c.grid,
        other => {
            return Err(EwsError::Unsupported(format!(
                "modal resolution needs the periodic cable equation, got {}",
                other.name()
            )))
        }
    };
    let mut modes: Vec<usize> = Vec::new();
    for probe in probes {
        let i = probe
            .cable_mode()
            .ok_or_else(|| EwsError::Unsupported(format!("probe {probe} is not a single Fourier mode")))?;
        // validates mode availability on this grid
        probe.resolve(spec, kappa)?;
        if !modes.contains(&i) {
            modes.push(i);
        }
    }
    modes.sort_unstable();
    let sr = spec.sigma_r();
    let lambdas: Vec<f64> = modes
        .iter()
        .map(|&i| {
            let k = (i / 2) as f64;
            let w = 2.0 * std::f64::consts::PI * k / (grid.right() - grid.left());
            spec.p() - w * w
        })
        .collect();
    let decay: Vec<f64> = lambdas.iter().map(|l| (l * cfg.dt).exp()).collect();
    let forcing: Vec<f64> = lambdas.iter().map(|l| sr * phi1(*l, cfg.dt)).collect();
    let ou = OuTransition::new(&OUParams::new(kappa, sigma)?, cfg.dt, modes.len())?;
    // (slot, u weight, ξ weight) per probe
    let readout: Vec<(usize, f64, f64)> = probes
        .iter()
        .map(|probe| {
            let slot = modes
                .binary_search(&probe.cable_mode().expect("checked"))
                .expect("collected");
            match probe {
                ProbeSpec::Eigen(_) => (slot, 1.0, 0.0),
                ProbeSpec::Noise(_) => (slot, 0.0, 1.0),
                _ => (slot, 1.0, sr / (lambdas[slot] + kappa)),
            }
        })
        .collect();
    let mut u = vec![0.0; modes.len()];
    let mut xi = vec![0.0; modes.len()];
    let mut out = vec![0.0; probes.len()];
    for _ in 0..cfg.n_records() {
        for _ in 0..cfg.stride {
            ou.advance(&mut xi, rng);
            for j in 0..u.len() {
                u[j] = decay[j] * u[j] + forcing[j] * xi[j];
            }
        }
        for (o, &(slot, a, b)) in out.iter_mut().zip(&readout) {
            *o = a * u[slot] + b * xi[slot];
        }
        observe(&out);
    }
    Ok(())
}

/// Modal cable trajectory; one projection series per probe.
pub fn run_modal_trajectory(
    spec: &SystemSpec,
    kappa: f64,
    sigma: f64,
    cfg: &TrajectoryConfig,
    probes: &[ProbeSpec],
    rng: &mut NoiseRng,
) -> Result<Vec<ProjectionSeries>> {
    collect_series(cfg, probes.len(), |obs| {
        simulate_modal(spec, kappa, sigma, cfg, probes, rng, obs)
    })
}

pub fn modal_trajectory_variances(
    spec: &SystemSpec,
    kappa: f64,
    sigma: f64,
    cfg: &TrajectoryConfig,
    probes: &[ProbeSpec],
    rng: &mut NoiseRng,
) -> Result<Vec<f64>> {
    collect_variances(cfg, probes.len(), |obs| {
        simulate_modal(spec, kappa, sigma, cfg, probes, rng, obs)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Swept {
    P,
    Kappa,
}

impl Swept {
    pub fn name(self) -> &'static str {
        match self {
            Swept::P => "p",
            Swept::Kappa => "kappa",
        }
    }

    pub fn limit(self) -> Limit {
        match self {
            Swept::P => Limit::PToZero,
            Swept::Kappa => Limit::KappaToZero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    MonteCarlo,
    /// Analytic stationary variance (no sampling).
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    #[default]
    Full,
    /// Probed Fourier modes only (periodic cable equation).
    Modal,
}

/// Dyadic grid `{2^hi, 2^(hi-step), ..., 2^lo}`, descending.
pub fn dyadic_grid(hi: i32, lo: i32, step: i32) -> Vec<f64> {
    assert!(step > 0 && hi >= lo);
    (0..)
        .map(|k| hi - k * step)
        .take_while(|e| *e >= lo)
        .map(|e| 2f64.powi(e))
        .collect()
}

/// Default `-p` grid `{2^0, ..., 2^-8}`.
pub fn default_p_grid() -> Vec<f64> {
    dyadic_grid(0, -8, 1)
}

/// Default `κ` grid `{2^1, ..., 2^-8}`.
pub fn default_kappa_grid() -> Vec<f64> {
    dyadic_grid(1, -8, 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Template; its `p` is replaced in `p`-sweeps.
    pub system: SystemSpec,
    pub swept: Swept,
    /// `-p` or `κ` values, strictly positive and descending.
    pub values: Vec<f64>,
    /// `κ` in `p`-sweeps, `p` in `κ`-sweeps.
    pub fixed_other: f64,
    pub sigma: f64,
    pub probes: Vec<ProbeSpec>,
    pub trajectory: TrajectoryConfig,
    pub n_samples: usize,
    pub root_seed: u64,
    pub estimator: Estimator,
    pub resolution: Resolution,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(EwsError::param("values", "sweep needs at least one value"));
        }
        if let Some(v) = self.values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(EwsError::param("values", format!("swept values must be > 0, got {v}")));
        }
        if self.values.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(EwsError::param("values", "swept values must be strictly descending"));
        }
        match self.swept {
            Swept::P if !(self.fixed_other.is_finite() && self.fixed_other > 0.0) => {
                return Err(EwsError::param(
                    "fixed_other",
                    format!("kappa must be > 0, got {}", self.fixed_other),
                ))
            }
            Swept::Kappa if !(self.fixed_other.is_finite() && self.fixed_other < 0.0) => {
                return Err(EwsError::param(
                    "fixed_other",
                    format!("p must be < 0, got {}", self.fixed_other),
                ))
            }
            _ => {}
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(EwsError::param("sigma", format!("must be >= 0, got {}", self.sigma)));
        }
        if self.probes.is_empty() {
            return Err(EwsError::param("probes", "need at least one probe"));
        }
        if self.n_samples == 0 {
            return Err(EwsError::param("n_samples", "must be >= 1"));
        }
        if self.n_samples > u32::MAX as usize || self.values.len() > u32::MAX as usize {
            return Err(EwsError::param(
                "n_samples",
                "too many rows or samples for the stream keys",
            ));
        }
        self.trajectory.validate()?;
        for row in 0..self.values.len() {
            let (spec, kappa) = self.row_system(row)?;
            for probe in &self.probes {
                probe.resolve(&spec, kappa).map_err(|e| self.row_error(row, e))?;
            }
        }
        Ok(())
    }

    /// `(system, κ)` of row `row`.
    pub fn row_system(&self, row: usize) -> Result<(SystemSpec, f64)> {
        let v = self.values[row];
        let (p, kappa) = match self.swept {
            Swept::P => (-v, self.fixed_other),
            Swept::Kappa => (self.fixed_other, v),
        };
        let spec = self.system.with_p(p).map_err(|e| self.row_error(row, e))?;
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(self.row_error(row, EwsError::param("kappa", format!("must be > 0, got {kappa}"))));
        }
        Ok((spec, kappa))
    }

    fn row_error(&self, row: usize, source: EwsError) -> EwsError {
        EwsError::Row {
            row,
            swept: self.swept.name(),
            value: self.values[row],
            source: Box::new(source),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub p: f64,
    pub kappa: f64,
    pub estimates: Vec<VarianceEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub probe_labels: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn x_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }

    pub fn mean_log10(&self, probe: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.estimates[probe].mean_log10).collect()
    }

    pub fn std_log10(&self, probe: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.estimates[probe].std_log10).collect()
    }
}

/// Analytic stationary variance along a named probe. Indicators on the
/// multiplication operator use the continuum integral over the probed interval.
pub fn oracle_variance(spec: &SystemSpec, kappa: f64, sigma: f64, probe: &ProbeSpec) -> Result<f64> {
    if let (Variant::MultiplicationOp(m), ProbeSpec::Indicator(a, b)) = (spec.variant(), probe) {
        let s = (a.max(m.grid.left()), b.min(m.grid.right()));
        return continuous_variance_quadrature(&m.profile, spec.p(), kappa, sigma, spec.sigma_r(), s);
    }
    probe_variance_oracle(spec, kappa, sigma, &probe.resolve(spec, kappa)?)
}

fn sample_variances(sweep: &SweepSpec, row: usize, sample: usize, resolved: &[Probe]) -> Result<Vec<f64>> {
    let (spec, kappa) = sweep.row_system(row)?;
    let mut rng = stream_rng(sweep.root_seed, row as u32, sample as u32);
    match sweep.resolution {
        Resolution::Full => trajectory_variances(&spec, kappa, sweep.sigma, &sweep.trajectory, resolved, &mut rng),
        Resolution::Modal => {
            modal_trajectory_variances(&spec, kappa, sweep.sigma, &sweep.trajectory, &sweep.probes, &mut rng)
        }
    }
    .map_err(|e| sweep.row_error(row, e))
}

/// Runs every `(row, sample)` trajectory and aggregates per row.
///
/// Sample `s` of row `r` always draws from stream `(root_seed, r, s)` and
/// results are placed by index, so the output does not depend on the number
/// of worker threads or on scheduling.
pub fn run_sweep(sweep: &SweepSpec) -> Result<SweepResult> {
    sweep.validate()?;
    let probe_labels: Vec<String> = sweep.probes.iter().map(|p| p.to_string()).collect();
    let n_rows = sweep.values.len();
    let mut resolved = Vec::with_capacity(n_rows);
    for row in 0..n_rows {
        let (spec, kappa) = sweep.row_system(row)?;
        let probes = sweep
            .probes
            .iter()
            .map(|p| p.resolve(&spec, kappa))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| sweep.row_error(row, e))?;
        resolved.push(probes);
    }

    let per_row: Vec<Vec<Vec<f64>>> = match sweep.estimator {
        Estimator::Oracle => (0..n_rows)
            .map(|row| {
                let (spec, kappa) = sweep.row_system(row)?;
                let v = sweep
                    .probes
                    .iter()
                    .map(|p| oracle_variance(&spec, kappa, sweep.sigma, p))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| sweep.row_error(row, e))?;
                Ok(vec![v])
            })
            .collect::<Result<_>>()?,
        Estimator::MonteCarlo => {
            let tasks: Vec<(usize, usize)> = (0..n_rows)
                .flat_map(|r| (0..sweep.n_samples).map(move |s| (r, s)))
                .collect();
            let run = |&(r, s): &(usize, usize)| sample_variances(sweep, r, s, &resolved[r]);
            #[cfg(feature = "parallel")]
            let flat: Vec<Result<Vec<f64>>> = {
                use rayon::prelude::*;
                tasks.par_iter().map(run).collect()
            };
            #[cfg(not(feature = "parallel"))]
            let flat: Vec<Result<Vec<f64>>> = tasks.iter().map(run).collect();
            let mut per_row = vec![Vec::with_capacity(sweep.n_samples); n_rows];
            for ((r, _), v) in tasks.iter().zip(flat) {
                per_row[*r].push(v?);
            }
            per_row
        }
    };

    let rows = per_row
        .into_iter()
        .enumerate()
        .map(|(row, samples)| {
            let (spec, kappa) = sweep.row_system(row)?;
            let estimates = (0..sweep.probes.len())
                .map(|j| {
                    let column: Vec<f64> = samples.iter().map(|s| s[j]).collect();
                    aggregate_ensemble(&column)
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| sweep.row_error(row, e))?;
            Ok(SweepRow {
                value: sweep.values[row],
                p: spec.p(),
                kappa,
                estimates,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        spec: sweep.clone(),
        probe_labels,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `log10 V = slope · log10 x + intercept`
    Power,
    /// `V = slope · ln x + intercept`
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination of `log10 V`, for either model.
    pub r_squared: f64,
    /// Row indices used by the fit.
    pub fit_window: Vec<usize>,
    pub model: FitModel,
}

/// Rows of the default fit window: the 5 smallest swept values whose
/// `std_log10` does not exceed 0.5. Values are stored descending, so these
/// are taken from the end.
pub fn default_window(std_log10: &[f64]) -> Vec<usize> {
    let mut w: Vec<usize> = (0..std_log10.len())
        .rev()
        .filter(|&i| std_log10[i] <= 0.5)
        .take(5)
        .collect();
    w.reverse();
    w
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn r_squared(observed: &[f64], predicted: &[f64]) -> f64 {
    let n = observed.len() as f64;
    let m = observed.iter().sum::<f64>() / n;
    let ss_tot: f64 = observed.iter().map(|y| (y - m) * (y - m)).sum();
    let ss_res: f64 = observed.iter().zip(predicted).map(|(y, f)| (y - f) * (y - f)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}

/// Least-squares scaling fit of `mean_log10` against the swept values `x`
/// on the rows in `window`. Both models report `r²` of `log10 V` so they can
/// be compared directly.
pub fn fit_loglog_slope(x: &[f64], mean_log10: &[f64], window: &[usize], model: FitModel) -> Result<ScalingFit> {
    if x.len() != mean_log10.len() {
        return Err(EwsError::DimensionMismatch {
            expected: x.len(),
            actual: mean_log10.len(),
        });
    }
    if window.len() < 3 {
        return Err(EwsError::param(
            "window",
            format!("need >= 3 points, got {}", window.len()),
        ));
    }
    if let Some(&i) = window.iter().find(|&&i| i >= x.len()) {
        return Err(EwsError::param("window", format!("row {i} out of range")));
    }
    let xs: Vec<f64> = window.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = window.iter().map(|&i| mean_log10[i]).collect();
    if xs.iter().any(|v| !(v.is_finite() && *v > 0.0)) || ys.iter().any(|v| !v.is_finite()) {
        return Err(EwsError::param(
            "window",
            "need positive swept values and finite variances",
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.log10()).collect();
    let m = lx.iter().sum::<f64>() / lx.len() as f64;
    if lx.iter().all(|v| (v - m).abs() <= 1e-12 * m.abs().max(1.0)) {
        return Err(EwsError::param("window", "swept values in the window coincide"));
    }
    let (slope, intercept, predicted) = match model {
        FitModel::Power => {
            let (s, c) = least_squares(&lx, &ys);
            (s, c, lx.iter().map(|v| s * v + c).collect::<Vec<_>>())
        }
        FitModel::Logarithmic => {
            let ln: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
            let var: Vec<f64> = ys.iter().map(|y| 10f64.powf(*y)).collect();
            let (s, c) = least_squares(&ln, &var);
            // a non-positive prediction has no logarithm; count it as a total miss
            let pred = ln
                .iter()
                .zip(&ys)
                .map(|(l, y)| {
                    let v = s * l + c;
                    if v > 0.0 {
                        v.log10()
                    } else {
                        y + f64::from(f32::MAX)
                    }
                })
                .collect();
            (s, c, pred)
        }
    };
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared: r_squared(&ys, &predicted),
        fit_window: window.to_vec(),
        model,
    })
}

/// Power-law and logarithmic fits of one sweep column on the same window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnFit {
    pub power: ScalingFit,
    pub logarithmic: ScalingFit,
}

impl ColumnFit {
    pub fn new(x: &[f64], mean_log10: &[f64], window: &[usize]) -> Result<Self> {
        Ok(ColumnFit {
            power: fit_loglog_slope(x, mean_log10, window, FitModel::Power)?,
            logarithmic: fit_loglog_slope(x, mean_log10, window, FitModel::Logarithmic)?,
        })
    }

    /// The model with the larger `r²`; ties go to the power law.
    pub fn preferred(&self) -> &ScalingFit {
        if self.logarithmic.r_squared > self.power.r_squared {
            &self.logarithmic
        } else {
            &self.power
        }
    }

    /// The fit [`detect_ews`] should judge for this prediction.
    pub fn for_prediction(&self, prediction: &ThetaPrediction) -> &ScalingFit {
        match prediction.regime {
            Regime::Logarithmic => self.preferred(),
            _ => &self.power,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The predicted divergence is observed as `p → 0⁻`.
    Confirmed,
    /// The observed scaling departs from the prediction without vanishing.
    Muted,
    /// No divergence (`|slope| ≤ tolerance`).
    Absent,
    /// Divergence produced by `κ → 0⁺`, with no deterministic destabilization.
    FalsePositiveContext,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Confirmed => "confirmed",
            Verdict::Muted => "muted",
            Verdict::Absent => "absent",
            Verdict::FalsePositiveContext => "false_positive_context",
        })
    }
}

/// Classifies a fitted scaling law against the predicted regime.
///
/// Power laws are confirmed when `|slope - exponent| ≤ tolerance`; the
/// logarithmic regime when the logarithmic model is the fit given and the
/// variance grows as the limit is approached. In the `κ` limit a matching
/// divergence is reported as a false positive.
pub fn detect_ews(fit: &ScalingFit, prediction: &ThetaPrediction, tolerance: f64) -> Verdict {
    let flat = |f: &ScalingFit| f.model == FitModel::Power && f.slope.abs() <= tolerance;
    let matched = match (prediction.regime, fit.model) {
        (Regime::PowerLaw(e), FitModel::Power) => (fit.slope - e).abs() <= tolerance,
        // V ≈ a ln x + b grows as x → 0⁺ when a < 0
        (Regime::Logarithmic, FitModel::Logarithmic) => fit.slope < 0.0,
        _ => false,
    };
    if matched {
        return match prediction.limit {
            Limit::PToZero => Verdict::Confirmed,
            Limit::KappaToZero => Verdict::FalsePositiveContext,
        };
    }
    if flat(fit) {
        Verdict::Absent
    } else {
        Verdict::Muted
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::scalar_red_noise_variance;
    use crate::stats::time_variance;
    use proptest::prelude::*;

    fn cfg(horizon: f64) -> TrajectoryConfig {
        TrajectoryConfig::new(horizon, 0.1, 0.1).unwrap()
    }

    fn pow_pred(e: f64, limit: Limit) -> ThetaPrediction {
        ThetaPrediction {
            regime: Regime::PowerLaw(e),
            limit,
        }
    }

    fn fit_of(slope: f64, model: FitModel) -> ScalingFit {
        ScalingFit {
            slope,
            intercept: 0.0,
            r_squared: 1.0,
            fit_window: vec![0, 1, 2],
            model,
        }
    }

    #[test]
    fn trajectory_config_counts() {
        let c = cfg(100.0);
        assert_eq!(c.n_steps(), 1000);
        assert_eq!(c.n_records(), 1000);
        assert_eq!(c.burn_in_count(), 100);
        let c = c.with_stride(10).unwrap();
        assert_eq!(c.n_records(), 100);
        assert!((c.record_dt() - 1.0).abs() < 1e-15);
        assert!(TrajectoryConfig::new(0.1, 0.1, 0.1).is_err());
        assert!(TrajectoryConfig::new(10.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn silent_system_gives_zero_series() {
        let spec = SystemSpec::cable(16, -0.5).unwrap().with_sigma_r(0.0).unwrap();
        let probes: Vec<Probe> = (1..=3)
            .map(|i| ProbeSpec::Eigen(i).resolve(&spec, 2.0).unwrap())
            .collect();
        let mut rng = stream_rng(1, 0, 0);
        let series = run_trajectory(&spec, 2.0, 0.0, &cfg(10.0), &probes, &mut rng).unwrap();
        assert!(series.iter().all(|s| s.values.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn same_stream_same_series() {
        let spec = SystemSpec::jordan(4, -0.3).unwrap();
        let probes: Vec<Probe> = (1..=4)
            .map(|i| ProbeSpec::Eigen(i).resolve(&spec, 2.0).unwrap())
            .collect();
        let run = || {
            let mut rng = stream_rng(42, 3, 7);
            run_trajectory(&spec, 2.0, 0.1, &cfg(50.0), &probes, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
        let mut other = stream_rng(42, 3, 8);
        let b = run_trajectory(&spec, 2.0, 0.1, &cfg(50.0), &probes, &mut other).unwrap();
        assert_ne!(run(), b);
    }

    #[test]
    fn streaming_matches_stored_series() {
        let spec = SystemSpec::cable(32, -0.5).unwrap();
        let probes: Vec<Probe> = [ProbeSpec::Eigen(1), ProbeSpec::Extended(2), ProbeSpec::Noise(3)]
            .iter()
            .map(|p| p.resolve(&spec, 2.0).unwrap())
            .collect();
        let series = run_trajectory(&spec, 2.0, 0.1, &cfg(200.0), &probes, &mut stream_rng(5, 0, 0)).unwrap();
        let streamed = trajectory_variances(&spec, 2.0, 0.1, &cfg(200.0), &probes, &mut stream_rng(5, 0, 0)).unwrap();
        for (s, v) in series.iter().zip(&streamed) {
            let stored = time_variance(s).unwrap();
            assert!((stored - v).abs() <= 1e-10 * stored, "{stored} vs {v}");
        }
    }

    #[test]
    fn modal_path_rejects_other_systems_and_indicators() {
        let jordan = SystemSpec::jordan(4, -0.5).unwrap();
        let mut rng = stream_rng(0, 0, 0);
        assert!(modal_trajectory_variances(&jordan, 2.0, 0.1, &cfg(10.0), &[ProbeSpec::Eigen(1)], &mut rng).is_err());
        let cable = SystemSpec::cable(16, -0.5).unwrap();
        let ind = [ProbeSpec::Indicator(0.0, 0.5)];
        assert!(modal_trajectory_variances(&cable, 2.0, 0.1, &cfg(10.0), &ind, &mut rng).is_err());
        assert!(modal_trajectory_variances(&cable, 2.0, 0.1, &cfg(10.0), &[ProbeSpec::Eigen(16)], &mut rng).is_err());
    }

    #[test]
    fn modal_e1_tracks_scalar_oracle() {
        let spec = SystemSpec::cable(200, -0.5).unwrap();
        let oracle = scalar_red_noise_variance(-0.5, 2.0, 0.1, 1.0).unwrap();
        let c = cfg(2e4);
        let v: Vec<f64> = (0..4)
            .map(|s| {
                let mut rng = stream_rng(11, 0, s);
                modal_trajectory_variances(&spec, 2.0, 0.1, &c, &[ProbeSpec::Eigen(1)], &mut rng).unwrap()[0]
            })
            .collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean / oracle - 1.0).abs() < 0.1, "{mean} vs {oracle}");
    }

    fn small_sweep() -> SweepSpec {
        SweepSpec {
            system: SystemSpec::cable(16, -1.0).unwrap(),
            swept: Swept::P,
            values: vec![1.0, 0.5, 0.25],
            fixed_other: 2.0,
            sigma: 0.1,
            probes: vec![ProbeSpec::Eigen(1), ProbeSpec::Eigen(2)],
            trajectory: cfg(100.0),
            n_samples: 3,
            root_seed: 9,
            estimator: Estimator::MonteCarlo,
            resolution: Resolution::Full,
        }
    }

    #[test]
    fn sweep_validation() {
        let mut s = small_sweep();
        s.values = vec![0.5, 1.0];
        assert!(s.validate().is_err());
        let mut s = small_sweep();
        s.values = vec![1.0, -0.5];
        assert!(s.validate().is_err());
        let mut s = small_sweep();
        s.n_samples = 0;
        assert!(s.validate().is_err());
        let mut s = small_sweep();
        s.swept = Swept::Kappa;
        assert!(s.validate().is_err(), "kappa sweep needs negative fixed p");
        let mut s = small_sweep();
        s.probes = vec![ProbeSpec::Eigen(40)];
        assert!(matches!(s.validate(), Err(EwsError::Row { row: 0, .. })));
    }

    #[test]
    fn sweep_rows_are_ordered_and_single_sample_has_zero_spread() {
        let mut s = small_sweep();
        s.n_samples = 1;
        let r = run_sweep(&s).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.probe_labels, vec!["e_1", "e_2"]);
        for (row, v) in r.rows.iter().zip(&s.values) {
            assert_eq!(row.value, *v);
            assert_eq!(row.p, -v);
            assert_eq!(row.kappa, 2.0);
            assert!(row.estimates.iter().all(|e| e.std_log10 == 0.0 && e.n_samples == 1));
        }
    }

    #[test]
    fn sweep_is_reproducible_and_sample_keyed() {
        let s = small_sweep();
        let a = run_sweep(&s).unwrap();
        assert_eq!(a, run_sweep(&s).unwrap());
        // a one-row sweep reproduces row 0 of the longer one
        let first = run_sweep(&SweepSpec {
            values: vec![1.0],
            ..s.clone()
        })
        .unwrap();
        assert_eq!(first.rows[0], a.rows[0]);
    }

    #[test]
    fn oracle_estimator_rows() {
        let mut s = small_sweep();
        s.estimator = Estimator::Oracle;
        let r = run_sweep(&s).unwrap();
        for row in &r.rows {
            let want = scalar_red_noise_variance(row.p, 2.0, 0.1, 1.0).unwrap();
            let got = 10f64.powf(row.estimates[0].mean_log10);
            assert!((got / want - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_on_continuum_uses_quadrature() {
        let spec = SystemSpec::multiplication(2.0, -0.01, 0.01, 21, -1e-3).unwrap();
        let v = oracle_variance(&spec, 2.0, 0.1, &ProbeSpec::Indicator(-0.01, 0.01)).unwrap();
        let profile = match spec.variant() {
            Variant::MultiplicationOp(m) => m.profile.clone(),
            _ => unreachable!(),
        };
        let q = continuous_variance_quadrature(&profile, -1e-3, 2.0, 0.1, 1.0, (-0.01, 0.01)).unwrap();
        assert_eq!(v, q);
    }

    #[test]
    fn dyadic_grids() {
        assert_eq!(default_p_grid().len(), 9);
        assert_eq!(default_p_grid()[8], 2f64.powi(-8));
        assert_eq!(default_kappa_grid()[0], 2.0);
        assert_eq!(dyadic_grid(0, -4, 2), vec![1.0, 0.25, 0.0625]);
    }

    #[test]
    fn power_fit_of_exact_laws() {
        let x = default_p_grid();
        let y: Vec<f64> = x.iter().map(|v| (3.0 / v).log10()).collect();
        let w = default_window(&vec![0.0; x.len()]);
        assert_eq!(w, vec![4, 5, 6, 7, 8]);
        let f = fit_loglog_slope(&x, &y, &w, FitModel::Power).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.log10()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let f = fit_loglog_slope(&x, &vec![-2.0; x.len()], &w, FitModel::Power).unwrap();
        assert!(f.slope.abs() < 1e-12);
    }

    #[test]
    fn default_window_skips_noisy_rows() {
        let std = [0.0, 0.0, 0.1, 0.2, 0.6, 0.0, 0.9, 0.0];
        assert_eq!(default_window(&std), vec![1, 2, 3, 5, 7]);
        assert!(fit_loglog_slope(&[1.0, 0.5], &[0.0, 0.0], &[0, 1], FitModel::Power).is_err());
        assert!(fit_loglog_slope(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0], &[0, 1, 2], FitModel::Power).is_err());
    }

    #[test]
    fn logarithmic_data_prefers_logarithmic_model() {
        let x = dyadic_grid(-20, -40, 4);
        let y: Vec<f64> = x.iter().map(|v| (-v.ln() + 1.0).log10()).collect();
        let w: Vec<usize> = (0..x.len()).collect();
        let fits = ColumnFit::new(&x, &y, &w).unwrap();
        assert_eq!(fits.preferred().model, FitModel::Logarithmic);
        assert!((fits.logarithmic.slope + 1.0).abs() < 1e-9);
        assert!(fits.power.r_squared < 1.0);
        let pred = ThetaPrediction {
            regime: Regime::Logarithmic,
            limit: Limit::PToZero,
        };
        assert_eq!(detect_ews(fits.for_prediction(&pred), &pred, 0.1), Verdict::Confirmed);
    }

    #[test]
    fn verdicts() {
        let p = Limit::PToZero;
        assert_eq!(
            detect_ews(&fit_of(-0.98, FitModel::Power), &pow_pred(-1.0, p), 0.15),
            Verdict::Confirmed
        );
        assert_eq!(
            detect_ews(&fit_of(-0.5, FitModel::Power), &pow_pred(-1.0, p), 0.15),
            Verdict::Muted
        );
        assert_eq!(
            detect_ews(&fit_of(0.02, FitModel::Power), &pow_pred(-1.0, p), 0.15),
            Verdict::Absent
        );
        let bounded = ThetaPrediction {
            regime: Regime::Bounded,
            limit: p,
        };
        assert_eq!(
            detect_ews(&fit_of(-0.05, FitModel::Power), &bounded, 0.1),
            Verdict::Absent
        );
        assert_eq!(
            detect_ews(
                &fit_of(-1.02, FitModel::Power),
                &pow_pred(-1.0, Limit::KappaToZero),
                0.15
            ),
            Verdict::FalsePositiveContext
        );
        let log = ThetaPrediction {
            regime: Regime::Logarithmic,
            limit: p,
        };
        assert_eq!(detect_ews(&fit_of(-0.3, FitModel::Power), &log, 0.1), Verdict::Muted);
        assert_eq!(detect_ews(&fit_of(0.01, FitModel::Power), &log, 0.1), Verdict::Absent);
    }

    proptest! {
        #[test]
        fn power_fit_recovers_slope(slope in -8.0f64..2.0, c in -5.0f64..5.0) {
            let x = dyadic_grid(0, -10, 1);
            let y: Vec<f64> = x.iter().map(|v| slope * v.log10() + c).collect();
            let w: Vec<usize> = (0..x.len()).collect();
            let f = fit_loglog_slope(&x, &y, &w, FitModel::Power).unwrap();
            prop_assert!((f.slope - slope).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&f.r_squared));
        }

        #[test]
        fn r_squared_stays_in_unit_interval(ys in proptest::collection::vec(-6.0f64..0.0, 5)) {
            let x = dyadic_grid(0, -4, 1);
            let w: Vec<usize> = (0..5).collect();
            for model in [FitModel::Power, FitModel::Logarithmic] {
                let f = fit_loglog_slope(&x, &ys, &w, model).unwrap();
                prop_assert!((0.0..=1.0).contains(&f.r_squared));
            }
        }
    }
}
