//! Configuration-driven experiments: TOML config → sweeps → tables, fits,
//! verdicts, a run manifest and a plotting script.
//!
//! ```toml
//! name = "fig1a"
//!
//! [system]
//! variant = "cable_periodic"   # jordan_chain | multiplication_op | cable_boundary_noise
//! dx = 0.005
//!
//! [noise]
//! kappa = 2.0
//! sigma = 0.1
//!
//! [sweep]
//! swept = "p"                  # or "kappa"; p-sweeps hold noise.kappa, kappa-sweeps hold system.p
//! grid = { hi = 0, lo = -8 }   # or values = [1.0, 0.5, ...]
//! horizon = 1e5
//!
//! [probes]
//! names = ["e_1", "e_2", "e_3"]
//!
//! [output]
//! directory = "out/fig1a"
//! formats = ["csv", "jsonl"]
//! ```

mod presets;
pub mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use presets::{preset, preset_text, PRESETS};
pub use table::{parse_table, read_table, render_table, write_table, Cell, Table, TableFormat};

use crate::error::{EwsError, Result};
use crate::grid::{make_grid, BoundaryKind};
use crate::oracle::{theta_prediction, Regime, ThetaPrediction};
use crate::probes::ProbeSpec;
use crate::sweep::{
    default_kappa_grid, default_p_grid, default_window, detect_ews, dyadic_grid, run_sweep, ColumnFit, Estimator,
    Resolution, ScalingFit, SweepResult, SweepSpec, Swept, TrajectoryConfig, Verdict,
};
use crate::systems::{
    BoundaryPayload, CablePayload, DriftProfile, JordanPayload, MultiplicationPayload, SystemSpec, Variant,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    CablePeriodic,
    JordanChain,
    MultiplicationOp,
    CableBoundaryNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub variant: VariantName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// One value or a list; each value becomes its own set of columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default = "one")]
    pub sigma_r: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseBlock {
    pub kappa: f64,
    pub sigma: f64,
}

impl Default for NoiseBlock {
    fn default() -> Self {
        NoiseBlock { kappa: 2.0, sigma: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicGridBlock {
    pub hi: i32,
    pub lo: i32,
    #[serde(default = "one_step")]
    pub step: i32,
}

fn one_step() -> i32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub swept: Swept,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<DyadicGridBlock>,
    pub horizon: f64,
    pub dt: f64,
    pub n_samples: usize,
    pub root_seed: u64,
    pub burn_in_fraction: f64,
    pub stride: usize,
    pub estimator: Estimator,
    pub resolution: Resolution,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock {
            swept: Swept::P,
            values: None,
            grid: None,
            horizon: 1e5,
            dt: 0.1,
            n_samples: 10,
            root_seed: 0,
            burn_in_fraction: 0.1,
            stride: 1,
            estimator: Estimator::MonteCarlo,
            resolution: Resolution::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbesBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitBlock {
    /// Verdict tolerance on the fitted slope.
    pub tolerance: f64,
    /// Per-probe tolerances, overriding `tolerance`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Vec<f64>>,
    /// Inclusive range of swept values to fit; default is the 5 smallest.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

impl Default for FitBlock {
    fn default() -> Self {
        FitBlock {
            tolerance: 0.15,
            tolerances: None,
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    pub formats: Vec<TableFormat>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: None,
            formats: vec![TableFormat::Csv],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub system: SystemBlock,
    #[serde(default)]
    pub noise: NoiseBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub probes: ProbesBlock,
    #[serde(default)]
    pub fit: FitBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

fn default_name() -> String {
    "experiment".into()
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub horizon: Option<f64>,
    pub out: Option<PathBuf>,
}

/// A semantic problem, located by section and key.
struct Issue {
    section: &'static str,
    key: &'static str,
    message: String,
}

fn issue(section: &'static str, key: &'static str, message: impl Into<String>) -> Issue {
    Issue {
        section,
        key,
        message: message.into(),
    }
}

impl Issue {
    fn into_error(self, text: Option<&str>) -> EwsError {
        let line = text.and_then(|t| locate(t, self.section, self.key));
        let place = if self.section.is_empty() {
            format!("`{}`", self.key)
        } else {
            format!("[{}] `{}`", self.section, self.key)
        };
        match line {
            Some(n) => EwsError::Config(format!("line {n}: {place}: {}", self.message)),
            None => EwsError::Config(format!("{place}: {}", self.message)),
        }
    }
}

/// 1-based line of `key` inside `[section]` (or before any section when
/// `section` is empty); falls back to the section header.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

/// A validated experiment, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub config: ExperimentConfig,
    /// One sweep per system member (several for a list of `alpha` values).
    pub sweeps: Vec<(String, SweepSpec)>,
    pub tolerances: Vec<f64>,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.sweep.root_seed = s;
        }
        if let Some(n) = o.samples {
            self.sweep.n_samples = n;
        }
        if let Some(h) = o.horizon {
            self.sweep.horizon = h;
        }
        if let Some(d) = &o.out {
            self.output.directory = Some(d.clone());
        }
    }

    /// Checks every precondition and builds the sweeps.
    pub fn plan(&self) -> Result<Plan> {
        self.plan_inner().map_err(|i| i.into_error(None))
    }

    fn probe_specs(&self) -> std::result::Result<Vec<ProbeSpec>, Issue> {
        match &self.probes.names {
            Some(names) => {
                if names.is_empty() {
                    return Err(issue("probes", "names", "need at least one probe"));
                }
                names
                    .iter()
                    .map(|n| {
                        n.parse::<ProbeSpec>()
                            .map_err(|e| issue("probes", "names", e.to_string()))
                    })
                    .collect()
            }
            None => Ok(match self.system.variant {
                VariantName::CablePeriodic => (1..=3).map(ProbeSpec::Eigen).collect(),
                VariantName::JordanChain => (1..=self.system.dim.unwrap_or(4)).map(ProbeSpec::Eigen).collect(),
                VariantName::MultiplicationOp => {
                    let [a, b] = self.system.interval.unwrap_or([-0.01, 0.01]);
                    vec![ProbeSpec::Indicator(a, b)]
                }
                VariantName::CableBoundaryNoise => vec![
                    ProbeSpec::Indicator(0.0, 1.0 / 3.0),
                    ProbeSpec::Indicator(1.0 / 3.0, 2.0 / 3.0),
                    ProbeSpec::Indicator(2.0 / 3.0, 1.0),
                ],
            }),
        }
    }

    fn members(&self) -> std::result::Result<Vec<(String, SystemSpec)>, Issue> {
        let s = &self.system;
        let p = s.p.unwrap_or(-0.5);
        if !(p.is_finite() && p < 0.0) {
            return Err(issue(
                "system",
                "p",
                format!("bifurcation parameter must satisfy p < 0, got {p}"),
            ));
        }
        if !(s.sigma_r.is_finite() && s.sigma_r >= 0.0) {
            return Err(issue("system", "sigma_r", format!("must be >= 0, got {}", s.sigma_r)));
        }
        let not_for = |key: &'static str, present: bool| {
            if present {
                Err(issue("system", key, format!("does not apply to {:?}", s.variant)))
            } else {
                Ok(())
            }
        };
        if s.dx.is_some() && s.n_points.is_some() {
            return Err(issue("system", "n_points", "give either dx or n_points, not both"));
        }
        if let Some(dx) = s.dx {
            if !(dx.is_finite() && dx > 0.0) {
                return Err(issue("system", "dx", format!("must be > 0, got {dx}")));
            }
        }
        let nodes = |length: f64, dx_default: f64, endpoints: bool| -> std::result::Result<usize, Issue> {
            let n = match s.n_points {
                Some(n) => n,
                None => {
                    let cells = (length / s.dx.unwrap_or(dx_default)).round();
                    if !(1.0..1e8).contains(&cells) {
                        return Err(issue("system", "dx", "gives an unusable number of grid nodes"));
                    }
                    cells as usize + usize::from(endpoints)
                }
            };
            Ok(n)
        };
        let build = |variant: Variant| SystemSpec::new(variant, p, s.sigma_r);
        let grid_issue = |e: EwsError| issue("system", "variant", e.to_string());
        let mut out = Vec::new();
        match s.variant {
            VariantName::CablePeriodic => {
                not_for("dim", s.dim.is_some())?;
                not_for("alpha", s.alpha.is_some())?;
                not_for("interval", s.interval.is_some())?;
                let n = nodes(1.0, 0.005, false)?;
                let grid = make_grid(BoundaryKind::Periodic, 0.0, 1.0, n).map_err(grid_issue)?;
                let spec = build(Variant::CablePeriodic(CablePayload { grid })).map_err(grid_issue)?;
                out.push((String::new(), spec));
            }
            VariantName::JordanChain => {
                not_for("dx", s.dx.is_some())?;
                not_for("n_points", s.n_points.is_some())?;
                not_for("alpha", s.alpha.is_some())?;
                not_for("interval", s.interval.is_some())?;
                let dim = s.dim.unwrap_or(4);
                let spec = build(Variant::JordanChain(JordanPayload { dim }))
                    .map_err(|e| issue("system", "dim", e.to_string()))?;
                out.push((String::new(), spec));
            }
            VariantName::MultiplicationOp => {
                not_for("dim", s.dim.is_some())?;
                let [a, b] = s.interval.unwrap_or([-0.01, 0.01]);
                if !(a < b && a.is_finite() && b.is_finite()) {
                    return Err(issue("system", "interval", format!("need a < b, got [{a}, {b}]")));
                }
                let n = nodes(b - a, 1e-5, true)?;
                let grid = make_grid(BoundaryKind::DecoupledPointwise, a, b, n).map_err(grid_issue)?;
                let alphas = s.alpha.as_ref().map(OneOrMany::values).unwrap_or_else(|| vec![2.0]);
                if alphas.is_empty() {
                    return Err(issue("system", "alpha", "need at least one value"));
                }
                for alpha in alphas {
                    let spec = build(Variant::MultiplicationOp(MultiplicationPayload {
                        profile: DriftProfile::PowerLaw { alpha },
                        grid: grid.clone(),
                    }))
                    .map_err(|e| issue("system", "alpha", e.to_string()))?;
                    let prefix = if s.alpha.as_ref().is_some_and(|a| matches!(a, OneOrMany::Many(_))) {
                        format!("alpha={alpha}/")
                    } else {
                        String::new()
                    };
                    out.push((prefix, spec));
                }
            }
            VariantName::CableBoundaryNoise => {
                not_for("dim", s.dim.is_some())?;
                not_for("alpha", s.alpha.is_some())?;
                not_for("interval", s.interval.is_some())?;
                let n = nodes(1.0, 0.005, true)?;
                let grid = make_grid(BoundaryKind::DirichletEndpoints, 0.0, 1.0, n).map_err(grid_issue)?;
                let spec = build(Variant::CableBoundaryNoise(BoundaryPayload {
                    grid,
                    shift: std::f64::consts::PI * std::f64::consts::PI,
                }))
                .map_err(|e| issue("system", "p", e.to_string()))?;
                out.push((String::new(), spec));
            }
        }
        Ok(out)
    }

    fn plan_inner(&self) -> std::result::Result<Plan, Issue> {
        if self.name.trim().is_empty() {
            return Err(issue("", "name", "must not be empty"));
        }
        let members = self.members()?;
        let probes = self.probe_specs()?;
        let n = &self.noise;
        if !(n.kappa.is_finite() && n.kappa > 0.0) {
            return Err(issue("noise", "kappa", format!("must be > 0, got {}", n.kappa)));
        }
        if !(n.sigma.is_finite() && n.sigma >= 0.0) {
            return Err(issue("noise", "sigma", format!("must be >= 0, got {}", n.sigma)));
        }
        let sw = &self.sweep;
        let values = match (&sw.values, &sw.grid) {
            (Some(_), Some(_)) => return Err(issue("sweep", "grid", "give either values or grid, not both")),
            (Some(v), None) => v.clone(),
            (None, Some(g)) => {
                if g.step <= 0 || g.hi < g.lo {
                    return Err(issue("sweep", "grid", "need hi >= lo and step >= 1"));
                }
                dyadic_grid(g.hi, g.lo, g.step)
            }
            (None, None) => match sw.swept {
                Swept::P => default_p_grid(),
                Swept::Kappa => default_kappa_grid(),
            },
        };
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            let what = match sw.swept {
                Swept::P => "-p values must be > 0 (p < 0)",
                Swept::Kappa => "kappa values must be > 0",
            };
            return Err(issue("sweep", "values", format!("{what}, got {v}")));
        }
        if values.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(issue("sweep", "values", "must be strictly descending"));
        }
        let trajectory = TrajectoryConfig {
            horizon: sw.horizon,
            dt: sw.dt,
            burn_in_fraction: sw.burn_in_fraction,
            stride: sw.stride,
        };
        trajectory.validate().map_err(|e| {
            let key = match &e {
                EwsError::InvalidParameter { name, .. } => match *name {
                    "dt" => "dt",
                    "burn_in_fraction" => "burn_in_fraction",
                    "stride" => "stride",
                    _ => "horizon",
                },
                _ => "horizon",
            };
            issue("sweep", key, e.to_string())
        })?;
        if sw.n_samples == 0 {
            return Err(issue("sweep", "n_samples", "must be >= 1"));
        }
        let fixed_other = match sw.swept {
            Swept::P => n.kappa,
            Swept::Kappa => members[0].1.p(),
        };
        let tolerances = match &self.fit.tolerances {
            Some(t) if t.len() != probes.len() => {
                return Err(issue(
                    "fit",
                    "tolerances",
                    format!("need one tolerance per probe ({}), got {}", probes.len(), t.len()),
                ))
            }
            Some(t) => t.clone(),
            None => vec![self.fit.tolerance; probes.len()],
        };
        if let Some(t) = tolerances.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(issue("fit", "tolerance", format!("must be > 0, got {t}")));
        }
        if let Some([lo, hi]) = self.fit.window {
            let inside = values.iter().filter(|v| **v >= lo && **v <= hi).count();
            if inside < 3 {
                return Err(issue(
                    "fit",
                    "window",
                    format!("[{lo}, {hi}] holds {inside} swept values, need >= 3"),
                ));
            }
        }
        if self.output.formats.is_empty() {
            return Err(issue("output", "formats", "need at least one format"));
        }
        let mut sweeps = Vec::new();
        for (prefix, spec) in members {
            if sw.estimator == Estimator::Oracle && matches!(spec.variant(), Variant::CableBoundaryNoise(_)) {
                return Err(issue(
                    "sweep",
                    "estimator",
                    "no analytic oracle for cable_boundary_noise",
                ));
            }
            if sw.resolution == Resolution::Modal {
                if !matches!(spec.variant(), Variant::CablePeriodic(_)) {
                    return Err(issue("sweep", "resolution", "modal resolution needs cable_periodic"));
                }
                if probes.iter().any(|p| p.cable_mode().is_none()) {
                    return Err(issue(
                        "sweep",
                        "resolution",
                        "modal resolution needs e_i, ext_i or noise_i probes",
                    ));
                }
            }
            let sweep = SweepSpec {
                system: spec,
                swept: sw.swept,
                values: values.clone(),
                fixed_other,
                sigma: n.sigma,
                probes: probes.clone(),
                trajectory,
                n_samples: sw.n_samples,
                root_seed: sw.root_seed,
                estimator: sw.estimator,
                resolution: sw.resolution,
            };
            sweep.validate().map_err(|e| {
                let inner = match &e {
                    EwsError::Row { source, .. } => source.as_ref().clone(),
                    other => other.clone(),
                };
                match inner {
                    EwsError::InvalidParameter { name: "p", .. } => issue("system", "p", e.to_string()),
                    EwsError::InvalidParameter { name: "kappa", .. } => issue("noise", "kappa", e.to_string()),
                    _ => issue("probes", "names", e.to_string()),
                }
            })?;
            sweeps.push((prefix, sweep));
        }
        let out_dir = self
            .output
            .directory
            .clone()
            .unwrap_or_else(|| Path::new("out").join(&self.name));
        Ok(Plan {
            config: self.clone(),
            sweeps,
            tolerances,
            out_dir,
        })
    }
}

/// Parses and validates a TOML config; errors carry the offending line.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| EwsError::Config(e.to_string()))?;
    config.plan_inner().map_err(|i| i.into_error(Some(text)))?;
    Ok(config)
}

/// Reads and validates a TOML config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| EwsError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        EwsError::Config(m) => EwsError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Fit and verdict of one table column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnReport {
    pub label: String,
    pub fits: ColumnFit,
    pub prediction: Option<ThetaPrediction>,
    pub judged: Option<ScalingFit>,
    pub tolerance: f64,
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub plan: Plan,
    pub results: Vec<(String, SweepResult)>,
    pub columns: Vec<ColumnReport>,
    pub sweep_table: Table,
    pub fits_table: Table,
    pub verdicts_table: Table,
    pub files: Vec<PathBuf>,
    pub wall_time_seconds: f64,
}

fn fit_window(config: &ExperimentConfig, values: &[f64], std_log10: &[f64]) -> Vec<usize> {
    match config.fit.window {
        Some([lo, hi]) => (0..values.len())
            .filter(|&i| values[i] >= lo && values[i] <= hi)
            .collect(),
        None => default_window(std_log10),
    }
}

fn analyze(plan: &Plan, results: &[(String, SweepResult)]) -> Result<Vec<ColumnReport>> {
    let mut out = Vec::new();
    for (prefix, result) in results {
        let x = result.x_values();
        for (j, probe) in result.spec.probes.iter().enumerate() {
            let label = format!("{prefix}{}", result.probe_labels[j]);
            let mean = result.mean_log10(j);
            let window = fit_window(&plan.config, &x, &result.std_log10(j));
            let fits = ColumnFit::new(&x, &mean, &window)
                .map_err(|e| EwsError::Config(format!("fit of column {label}: {e}")))?;
            let prediction = theta_prediction(&result.spec.system, probe, result.spec.swept.limit()).ok();
            let tolerance = plan.tolerances[j];
            let judged = prediction.map(|p| fits.for_prediction(&p).clone());
            let verdict = prediction
                .as_ref()
                .zip(judged.as_ref())
                .map(|(p, f)| detect_ews(f, p, tolerance));
            out.push(ColumnReport {
                label,
                fits,
                prediction,
                judged,
                tolerance,
                verdict,
            });
        }
    }
    Ok(out)
}

/// `swept_value`, then `<column>_mean_log10`, `<column>_std_log10` per probe.
pub fn sweep_table(results: &[(String, SweepResult)]) -> Result<Table> {
    let mut columns = vec!["swept_value".to_string()];
    for (prefix, r) in results {
        for label in &r.probe_labels {
            columns.push(format!("{prefix}{label}_mean_log10"));
            columns.push(format!("{prefix}{label}_std_log10"));
        }
    }
    let mut table = Table::new(columns);
    let n_rows = results.first().map(|(_, r)| r.rows.len()).unwrap_or(0);
    for i in 0..n_rows {
        let mut row = vec![Cell::Num(results[0].1.rows[i].value)];
        for (_, r) in results {
            for e in &r.rows[i].estimates {
                row.push(Cell::Num(e.mean_log10));
                row.push(Cell::Num(e.std_log10));
            }
        }
        table.push(row)?;
    }
    Ok(table)
}

fn fits_table(columns: &[ColumnReport], values: &[f64]) -> Result<Table> {
    let mut t = Table::new(
        [
            "column",
            "model",
            "slope",
            "intercept",
            "r_squared",
            "window_min",
            "window_max",
            "n_points",
        ]
        .map(String::from)
        .to_vec(),
    );
    for c in columns {
        for (name, f) in [("power", &c.fits.power), ("logarithmic", &c.fits.logarithmic)] {
            let xs: Vec<f64> = f.fit_window.iter().map(|&i| values[i]).collect();
            t.push(vec![
                Cell::Text(c.label.clone()),
                Cell::Text(name.into()),
                Cell::Num(f.slope),
                Cell::Num(f.intercept),
                Cell::Num(f.r_squared),
                Cell::Num(xs.iter().copied().fold(f64::INFINITY, f64::min)),
                Cell::Num(xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                Cell::Int(xs.len() as i64),
            ])?;
        }
    }
    Ok(t)
}

fn verdicts_table(columns: &[ColumnReport]) -> Result<Table> {
    let mut t = Table::new(
        [
            "column",
            "limit",
            "regime",
            "predicted_exponent",
            "judged_model",
            "fitted_slope",
            "tolerance",
            "verdict",
        ]
        .map(String::from)
        .to_vec(),
    );
    for c in columns {
        let (limit, regime, exponent) = match &c.prediction {
            Some(p) => {
                let limit = match p.limit {
                    crate::oracle::Limit::PToZero => "p_to_zero",
                    crate::oracle::Limit::KappaToZero => "kappa_to_zero",
                };
                match p.regime {
                    Regime::PowerLaw(e) => (limit, "power_law", Cell::Num(e)),
                    Regime::Logarithmic => (limit, "logarithmic", Cell::Text(String::new())),
                    Regime::Bounded => (limit, "bounded", Cell::Text(String::new())),
                }
            }
            None => ("", "unpredicted", Cell::Text(String::new())),
        };
        let (model, slope) = match &c.judged {
            Some(f) => (
                match f.model {
                    crate::sweep::FitModel::Power => "power",
                    crate::sweep::FitModel::Logarithmic => "logarithmic",
                },
                Cell::Num(f.slope),
            ),
            None => ("power", Cell::Num(c.fits.power.slope)),
        };
        t.push(vec![
            Cell::Text(c.label.clone()),
            Cell::Text(limit.into()),
            Cell::Text(regime.into()),
            exponent,
            Cell::Text(model.into()),
            slope,
            Cell::Num(c.tolerance),
            Cell::Text(c.verdict.map(|v| v.to_string()).unwrap_or_default()),
        ])?;
    }
    Ok(t)
}

/// Python/matplotlib script plotting the sweep table in log-log scale.
pub fn plot_script(plan: &Plan, table_file: &str) -> String {
    let xlabel = match plan.config.sweep.swept {
        Swept::P => "-p",
        Swept::Kappa => "kappa",
    };
    format!(
        r#"# Generated plot script: log-log variance curves with ±1 std_log10 bands.
import csv
import math

import matplotlib.pyplot as plt

with open("{table_file}", newline="") as fh:
    rows = list(csv.DictReader(fh))

x = [math.log10(float(r["swept_value"])) for r in rows]
columns = [c[: -len("_mean_log10")] for c in rows[0] if c.endswith("_mean_log10")] if rows else []
fig, ax = plt.subplots()
for c in columns:
    m = [float(r[c + "_mean_log10"]) for r in rows]
    s = [float(r[c + "_std_log10"]) for r in rows]
    ax.plot(x, m, marker="o", label=c)
    ax.fill_between(x, [a - b for a, b in zip(m, s)], [a + b for a, b in zip(m, s)], color="grey", alpha=0.3)
if columns:
    m0 = float(rows[0][columns[0] + "_mean_log10"])
    ax.plot(x, [m0 - (xi - x[0]) for xi in x], "k--", label="slope -1")
ax.invert_xaxis()
ax.set_xlabel("log10({xlabel})")
ax.set_ylabel("log10 variance")
ax.set_title("{name}")
ax.legend()
fig.savefig("{name}.png", dpi=150)
"#,
        name = plan.config.name,
    )
}

/// Runs every sweep of the plan; no files are written.
pub fn execute(plan: &Plan) -> Result<(Vec<(String, SweepResult)>, Vec<ColumnReport>)> {
    let results = plan
        .sweeps
        .iter()
        .map(|(prefix, s)| Ok((prefix.clone(), run_sweep(s)?)))
        .collect::<Result<Vec<_>>>()?;
    let columns = analyze(plan, &results)?;
    Ok((results, columns))
}

/// Runs the experiment and writes its tables, manifest and plot script into
/// the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let plan = config.plan()?;
    let (results, columns) = execute(&plan)?;
    let values = results[0].1.x_values();
    let sweep_table = sweep_table(&results)?;
    let fits_table = fits_table(&columns, &values)?;
    let verdicts_table = verdicts_table(&columns)?;

    std::fs::create_dir_all(&plan.out_dir).map_err(|e| EwsError::Io(format!("{}: {e}", plan.out_dir.display())))?;
    let mut files = Vec::new();
    for &format in &plan.config.output.formats {
        for (stem, table) in [
            ("sweep", &sweep_table),
            ("fits", &fits_table),
            ("verdicts", &verdicts_table),
        ] {
            let path = plan.out_dir.join(format!("{stem}.{}", format.extension()));
            write_table(table, format, &path).map_err(|e| EwsError::Io(format!("{}: {e}", path.display())))?;
            files.push(path);
        }
    }
    let plot = plan.out_dir.join("plot.py");
    let table_file = if plan.config.output.formats.contains(&TableFormat::Csv) {
        "sweep.csv"
    } else {
        "sweep.jsonl"
    };
    std::fs::write(&plot, plot_script(&plan, table_file))?;
    files.push(plot);

    let wall_time_seconds = start.elapsed().as_secs_f64();
    let manifest = serde_json::json!({
        "name": plan.config.name,
        "code_version": env!("CARGO_PKG_VERSION"),
        "root_seed": plan.config.sweep.root_seed,
        "config": plan.config,
        "outputs": files
            .iter()
            .map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
            .collect::<Vec<_>>(),
        "wall_time_seconds": wall_time_seconds,
    });
    let manifest_path = plan.out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| EwsError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(&manifest_path, text)?;
    files.push(manifest_path);

    Ok(ExperimentReport {
        plan,
        results,
        columns,
        sweep_table,
        fits_table,
        verdicts_table,
        files,
        wall_time_seconds,
    })
}
