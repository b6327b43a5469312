//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations: analytic variance curves, short Monte Carlo sweeps and
//! log-log slope fits. Each has a plain Rust form (used by the native tests)
//! and a thin `#[wasm_bindgen]` wrapper.

use ews_core::probes::ProbeSpec;
use ews_core::sweep::{
    dyadic_grid, fit_loglog_slope, oracle_variance, run_sweep, Estimator, FitModel, Resolution, SweepSpec, Swept,
    TrajectoryConfig,
};
use ews_core::systems::SystemSpec;
use wasm_bindgen::prelude::*;

const SIGMA: f64 = 0.1;

/// Swept values with their log10 variances (and spread, for simulations).
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    x: Vec<f64>,
    mean_log10: Vec<f64>,
    std_log10: Vec<f64>,
}

#[wasm_bindgen]
impl Curve {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn mean_log10(&self) -> Vec<f64> {
        self.mean_log10.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn std_log10(&self) -> Vec<f64> {
        self.std_log10.clone()
    }
}

#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Small demo-sized versions of the four systems.
pub fn system(name: &str, alpha: f64) -> Result<SystemSpec, String> {
    let spec = match name {
        "cable" => SystemSpec::cable(64, -0.5),
        "jordan" => SystemSpec::jordan(4, -0.5),
        "multiplication" => SystemSpec::multiplication(alpha, -0.01, 0.01, 21, -0.5),
        "boundary" => SystemSpec::boundary(51, -0.5),
        other => return Err(format!("unknown system `{other}`")),
    };
    spec.map_err(|e| e.to_string())
}

fn sweep_spec(
    system_name: &str,
    alpha: f64,
    probe: &str,
    swept: &str,
    fixed_other: f64,
    lo_exp: i32,
    hi_exp: i32,
) -> Result<SweepSpec, String> {
    let swept = match swept {
        "p" => Swept::P,
        "kappa" => Swept::Kappa,
        other => return Err(format!("swept must be `p` or `kappa`, got `{other}`")),
    };
    if lo_exp > hi_exp {
        return Err(format!("empty grid 2^{hi_exp}..2^{lo_exp}"));
    }
    let probe: ProbeSpec = probe.parse().map_err(|e: ews_core::EwsError| e.to_string())?;
    Ok(SweepSpec {
        system: system(system_name, alpha)?,
        swept,
        values: dyadic_grid(hi_exp, lo_exp, 1),
        fixed_other,
        sigma: SIGMA,
        probes: vec![probe],
        trajectory: TrajectoryConfig::new(1e3, 0.1, 0.1).map_err(|e| e.to_string())?,
        n_samples: 1,
        root_seed: 0,
        estimator: Estimator::Oracle,
        resolution: Resolution::Full,
    })
}

/// Stationary variance along one probe over a dyadic grid `2^hi_exp..2^lo_exp`
/// of `-p` (with κ = `fixed_other`) or of κ (with p = `fixed_other`).
pub fn oracle_curve_impl(
    system_name: &str,
    alpha: f64,
    probe: &str,
    swept: &str,
    fixed_other: f64,
    lo_exp: i32,
    hi_exp: i32,
) -> Result<Curve, String> {
    let spec = sweep_spec(system_name, alpha, probe, swept, fixed_other, lo_exp, hi_exp)?;
    spec.validate().map_err(|e| e.to_string())?;
    let mut mean_log10 = Vec::with_capacity(spec.values.len());
    for row in 0..spec.values.len() {
        let (sys, kappa) = spec.row_system(row).map_err(|e| e.to_string())?;
        let v = oracle_variance(&sys, kappa, SIGMA, &spec.probes[0]).map_err(|e| e.to_string())?;
        mean_log10.push(v.log10());
    }
    Ok(Curve {
        std_log10: vec![0.0; spec.values.len()],
        x: spec.values,
        mean_log10,
    })
}

/// Monte Carlo version of [`oracle_curve_impl`] with `samples` trajectories of
/// length `horizon` per grid point.
#[allow(clippy::too_many_arguments)]
pub fn simulate_curve_impl(
    system_name: &str,
    alpha: f64,
    probe: &str,
    swept: &str,
    fixed_other: f64,
    lo_exp: i32,
    hi_exp: i32,
    horizon: f64,
    samples: usize,
    seed: u64,
) -> Result<Curve, String> {
    let mut spec = sweep_spec(system_name, alpha, probe, swept, fixed_other, lo_exp, hi_exp)?;
    spec.trajectory = TrajectoryConfig::new(horizon, 0.1, 0.1).map_err(|e| e.to_string())?;
    spec.n_samples = samples;
    spec.root_seed = seed;
    spec.estimator = Estimator::MonteCarlo;
    let result = run_sweep(&spec).map_err(|e| e.to_string())?;
    Ok(Curve {
        x: result.x_values(),
        mean_log10: result.mean_log10(0),
        std_log10: result.std_log10(0),
    })
}

/// Least-squares fit of `log10 V` against `log10 x` (or `V = a ln x + b`).
pub fn fit_slope_impl(x: &[f64], mean_log10: &[f64], logarithmic: bool) -> Result<Fit, String> {
    let window: Vec<usize> = (0..x.len()).collect();
    let model = if logarithmic {
        FitModel::Logarithmic
    } else {
        FitModel::Power
    };
    let f = fit_loglog_slope(x, mean_log10, &window, model).map_err(|e| e.to_string())?;
    Ok(Fit {
        slope: f.slope,
        intercept: f.intercept,
        r_squared: f.r_squared,
    })
}

fn js(e: String) -> JsValue {
    JsValue::from_str(&e)
}

#[wasm_bindgen]
pub fn oracle_curve(
    system: &str,
    alpha: f64,
    probe: &str,
    swept: &str,
    fixed_other: f64,
    lo_exp: i32,
    hi_exp: i32,
) -> Result<Curve, JsValue> {
    oracle_curve_impl(system, alpha, probe, swept, fixed_other, lo_exp, hi_exp).map_err(js)
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn simulate_curve(
    system: &str,
    alpha: f64,
    probe: &str,
    swept: &str,
    fixed_other: f64,
    lo_exp: i32,
    hi_exp: i32,
    horizon: f64,
    samples: usize,
    seed: u64,
) -> Result<Curve, JsValue> {
    simulate_curve_impl(
        system,
        alpha,
        probe,
        swept,
        fixed_other,
        lo_exp,
        hi_exp,
        horizon,
        samples,
        seed,
    )
    .map_err(js)
}

#[wasm_bindgen]
pub fn fit_slope(x: &[f64], mean_log10: &[f64], logarithmic: bool) -> Result<Fit, JsValue> {
    fit_slope_impl(x, mean_log10, logarithmic).map_err(js)
}
