//! `ews oracle <system> key=value ...`

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use ews_core::oracle::{
    continuous_variance_quadrature, continuous_variance_time_integral, jordan_lyapunov_variance,
    jordan_variance_formula, probe_variance_oracle, scalar_red_noise_variance, JordanSpec,
};
use ews_core::probes::ProbeSpec;
use ews_core::systems::{DriftProfile, SystemSpec};

struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    fn parse(raw: &[String], allowed: &[&str]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for item in raw {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| anyhow!("expected key=value, got `{item}`"))?;
            let k = k.trim();
            if !allowed.contains(&k) {
                bail!("unknown parameter `{k}`; expected one of {}", allowed.join(", "));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Params { values })
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| anyhow!("parameter `{key}` = `{v}`: {e}")),
        }
    }
}

const RATES: [&str; 4] = ["p", "kappa", "sigma", "sigma_r"];

fn allowed(extra: &[&'static str]) -> Vec<&'static str> {
    RATES.iter().chain(extra).copied().collect()
}

/// Named analytic values for `system`; defaults p = -0.5, κ = 2, σ = 0.1, σ_R = 1.
pub fn evaluate(system: &str, raw: &[String]) -> Result<Vec<(String, f64)>> {
    let extra: &[&str] = match system {
        "scalar" => &[],
        "cable" => &["n", "probe"],
        "jordan" => &["dim", "k1", "k2"],
        "multiplication" => &["alpha", "a", "b"],
        other => bail!("unknown oracle system `{other}`; expected scalar, cable, jordan or multiplication"),
    };
    let params = Params::parse(raw, &allowed(extra))?;
    let p: f64 = params.get("p", -0.5)?;
    let kappa: f64 = params.get("kappa", 2.0)?;
    let sigma: f64 = params.get("sigma", 0.1)?;
    let sigma_r: f64 = params.get("sigma_r", 1.0)?;
    let mut out = Vec::new();
    match system {
        "scalar" => out.push(("variance".into(), scalar_red_noise_variance(p, kappa, sigma, sigma_r)?)),
        "cable" => {
            let n: usize = params.get("n", 200)?;
            let probe: ProbeSpec = params.get("probe", ProbeSpec::Eigen(1))?;
            let spec = SystemSpec::cable(n, p)?.with_sigma_r(sigma_r)?;
            let resolved = probe.resolve(&spec, kappa)?;
            out.push((
                format!("variance[{probe}]"),
                probe_variance_oracle(&spec, kappa, sigma, &resolved)?,
            ));
        }
        "jordan" => {
            let dim: usize = params.get("dim", 4)?;
            let js = JordanSpec::new(p, dim, kappa, sigma, sigma_r)?;
            let pairs: Vec<(usize, usize)> = match (params.values.get("k1"), params.values.get("k2")) {
                (None, None) => (1..=dim).map(|k| (k, k)).collect(),
                _ => {
                    let k1 = params.get("k1", 1)?;
                    vec![(k1, params.get("k2", k1)?)]
                }
            };
            for (k1, k2) in pairs {
                out.push((format!("formula[{k1},{k2}]"), jordan_variance_formula(&js, k1, k2)?));
                out.push((format!("lyapunov[{k1},{k2}]"), jordan_lyapunov_variance(&js, k1, k2)?));
            }
        }
        "multiplication" => {
            let alpha: f64 = params.get("alpha", 2.0)?;
            let s = (params.get("a", -0.01)?, params.get("b", 0.01)?);
            let profile = DriftProfile::PowerLaw { alpha };
            out.push((
                "quadrature".into(),
                continuous_variance_quadrature(&profile, p, kappa, sigma, sigma_r, s)
                    .context("closed-form quadrature")?,
            ));
            out.push((
                "time_integral".into(),
                continuous_variance_time_integral(&profile, p, kappa, sigma, sigma_r, s)
                    .context("time-integral evaluation")?,
            ));
        }
        _ => unreachable!(),
    }
    Ok(out)
}
