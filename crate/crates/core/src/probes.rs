//! Probing functions and the discrete inner product used to observe a field.
//!
//! Probes are either concrete vectors ([`Probe`]) or named descriptions
//! ([`ProbeSpec`]) that resolve against a system, e.g. `e_1`, `ext_1`,
//! `noise_2` or `indicator[0,1/3]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{EwsError, Result};
use crate::grid::{BoundaryKind, Grid1D};
use crate::systems::{system_eigenstructure, SystemSpec, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    GridFunction,
    CoordinateVector,
    /// Acts on the joint state `(u, ξ)`.
    Extended,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub label: String,
    pub kind: ProbeKind,
    pub u_part: Vec<f64>,
    pub xi_part: Option<Vec<f64>>,
}

impl Probe {
    pub fn grid_function(label: impl Into<String>, values: Vec<f64>) -> Self {
        Probe {
            label: label.into(),
            kind: ProbeKind::GridFunction,
            u_part: values,
            xi_part: None,
        }
    }

    pub fn coordinate(label: impl Into<String>, values: Vec<f64>) -> Self {
        Probe {
            label: label.into(),
            kind: ProbeKind::CoordinateVector,
            u_part: values,
            xi_part: None,
        }
    }

    pub fn extended(label: impl Into<String>, u_part: Vec<f64>, xi_part: Vec<f64>) -> Self {
        Probe {
            label: label.into(),
            kind: ProbeKind::Extended,
            u_part,
            xi_part: Some(xi_part),
        }
    }

    /// Probe that only sees the noise component.
    pub fn noise_only(label: impl Into<String>, xi_part: Vec<f64>) -> Self {
        let n = xi_part.len();
        Self::extended(label, vec![0.0; n], xi_part)
    }

    /// `Σ c_k probe_k`; all terms must share kind and length.
    pub fn linear_combination(label: impl Into<String>, terms: &[(f64, &Probe)]) -> Result<Probe> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| EwsError::param("terms", "empty linear combination"))?;
        let mut u = vec![0.0; first.u_part.len()];
        let mut xi = first.xi_part.as_ref().map(|x| vec![0.0; x.len()]);
        for (c, probe) in terms {
            if probe.kind != first.kind || probe.u_part.len() != u.len() {
                return Err(EwsError::param("terms", "probes differ in kind or length"));
            }
            for (a, b) in u.iter_mut().zip(&probe.u_part) {
                *a += c * b;
            }
            if let (Some(acc), Some(part)) = (xi.as_mut(), probe.xi_part.as_ref()) {
                for (a, b) in acc.iter_mut().zip(part) {
                    *a += c * b;
                }
            }
        }
        Ok(Probe {
            label: label.into(),
            kind: first.kind,
            u_part: u,
            xi_part: xi,
        })
    }

    pub fn has_u_part(&self) -> bool {
        self.u_part.iter().any(|&v| v != 0.0)
    }
}

pub(crate) fn weight(kind: ProbeKind, grid: &Grid1D) -> f64 {
    match kind {
        ProbeKind::CoordinateVector => 1.0,
        ProbeKind::GridFunction | ProbeKind::Extended => grid.weight(),
    }
}

#[inline]
pub(crate) fn weighted_dot(a: &[f64], b: &[f64], w: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * w
}

/// Riemann-sum inner product `Σ field_i probe_i δx` (plain dot product for
/// coordinate vectors). Uses the `u`-part of extended probes.
pub fn project(field: &[f64], probe: &Probe, grid: &Grid1D) -> Result<f64> {
    if field.len() != probe.u_part.len() {
        return Err(EwsError::DimensionMismatch {
            expected: probe.u_part.len(),
            actual: field.len(),
        });
    }
    grid.check_len(field.len())?;
    Ok(weighted_dot(field, &probe.u_part, weight(probe.kind, grid)))
}

/// `⟨u, v_u⟩ + ⟨ξ, v_ξ⟩` for a joint state.
pub fn project_joint(u: &[f64], xi: &[f64], probe: &Probe, u_grid: &Grid1D, xi_grid: &Grid1D) -> Result<f64> {
    let mut total = project(u, probe, u_grid)?;
    if let Some(part) = &probe.xi_part {
        if part.len() != xi.len() {
            return Err(EwsError::DimensionMismatch {
                expected: part.len(),
                actual: xi.len(),
            });
        }
        total += weighted_dot(xi, part, xi_grid.weight());
    }
    Ok(total)
}

/// Indicator of `[a, b)` on the grid nodes. The interval is closed on the
/// right when `b` is the grid's right edge, so consecutive pieces of a
/// partition sum to the full-domain indicator.
pub fn indicator_probe(grid: &Grid1D, a: f64, b: f64) -> Result<Probe> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(EwsError::param("indicator", format!("need a < b, got [{a}, {b}]")));
    }
    let tol = 1e-12 * (grid.right() - grid.left()).abs().max(1.0);
    if a < grid.left() - tol || b > grid.right() + tol {
        return Err(EwsError::param(
            "indicator",
            format!(
                "[{a}, {b}] is outside the grid extent [{}, {}]",
                grid.left(),
                grid.right()
            ),
        ));
    }
    let closed = (b - grid.right()).abs() <= tol;
    let values: Vec<f64> = grid
        .nodes()
        .map(|x| {
            let inside = x >= a - tol && (x < b - tol || (closed && x <= b + tol));
            if inside {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    if values.iter().all(|&v| v == 0.0) {
        return Err(EwsError::param(
            "indicator",
            format!("[{a}, {b}] contains no grid node"),
        ));
    }
    Ok(Probe::grid_function(format!("1[{a},{b}]"), values))
}

/// Eigenfunction `(e*_i, σ_R/(λ_i + κ) e*_i)` of the adjoint joint drift.
pub fn extended_eigenprobe(spec: &SystemSpec, mode: usize, kappa: f64) -> Result<Probe> {
    let pair = match spec.variant() {
        Variant::CablePeriodic(_) => system_eigenstructure(spec, mode)?
            .into_iter()
            .nth(mode.wrapping_sub(1))
            .ok_or_else(|| EwsError::param("mode", format!("mode {mode} not available")))?,
        Variant::JordanChain(_) => {
            if mode != 1 {
                return Err(EwsError::param(
                    "mode",
                    "only the proper eigenvector e*_1 of a Jordan block is an eigenfunction",
                ));
            }
            system_eigenstructure(spec, 1)?.remove(0)
        }
        other => {
            return Err(EwsError::Unsupported(format!(
                "extended eigenprobes need a domain-noise system with discrete spectrum, got {}",
                other.name()
            )))
        }
    };
    let denom = pair.eigenvalue + kappa;
    if denom.abs() <= 1e-12 * kappa {
        return Err(EwsError::param("kappa", "lambda + kappa vanishes"));
    }
    let w = spec.sigma_r() / denom;
    let xi_part = pair.left.iter().map(|v| w * v).collect();
    Ok(Probe::extended(format!("ext_{mode}"), pair.left, xi_part))
}

/// Named probe description, resolved against a concrete system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProbeSpec {
    /// `e_i`: eigenfunction `i` (cable, boundary) or left chain vector `e*_i` (Jordan).
    Eigen(usize),
    /// `ext_i`: extended eigenprobe on `(u, ξ)`.
    Extended(usize),
    /// `noise_i`: pure-noise probe `(0, e_i)`.
    Noise(usize),
    /// `indicator[a,b]`
    Indicator(f64, f64),
}

impl ProbeSpec {
    pub fn resolve(&self, spec: &SystemSpec, kappa: f64) -> Result<Probe> {
        let grid = spec.state_grid();
        let label = self.to_string();
        match self {
            ProbeSpec::Eigen(i) => {
                let values = discrete_mode(spec, *i)?;
                Ok(match grid.kind() {
                    BoundaryKind::FiniteDimensional => Probe::coordinate(label, values),
                    _ => Probe::grid_function(label, values),
                })
            }
            ProbeSpec::Extended(i) => {
                let mut p = extended_eigenprobe(spec, *i, kappa)?;
                p.label = label;
                Ok(p)
            }
            ProbeSpec::Noise(i) => {
                if matches!(spec.variant(), Variant::CableBoundaryNoise(_)) {
                    return Err(EwsError::Unsupported(
                        "noise probes on the boundary system are not supported".into(),
                    ));
                }
                Ok(Probe::noise_only(label, discrete_mode(spec, *i)?))
            }
            ProbeSpec::Indicator(a, b) => {
                let mut p = indicator_probe(&grid, *a, *b)?;
                p.label = label;
                Ok(p)
            }
        }
    }

    /// Fourier mode seen by this probe, for modal simulation of the cable equation.
    pub fn cable_mode(&self) -> Option<usize> {
        match self {
            ProbeSpec::Eigen(i) | ProbeSpec::Extended(i) | ProbeSpec::Noise(i) => Some(*i),
            ProbeSpec::Indicator(..) => None,
        }
    }
}

fn discrete_mode(spec: &SystemSpec, i: usize) -> Result<Vec<f64>> {
    let available = match spec.variant() {
        Variant::CablePeriodic(c) => {
            let n = c.grid.len();
            // skip the Nyquist pair, which is not resolved by the grid
            if n % 2 == 0 {
                n - 1
            } else {
                n
            }
        }
        Variant::JordanChain(j) => j.dim,
        Variant::CableBoundaryNoise(b) => b.grid.len() - 2,
        Variant::MultiplicationOp(_) => 0,
    };
    if i == 0 || i > available {
        return Err(EwsError::param(
            "probe",
            format!(
                "e_{i} does not exist on {} (modes 1..={available})",
                spec.variant().name()
            ),
        ));
    }
    Ok(system_eigenstructure(spec, i)?.remove(i - 1).left)
}

impl fmt::Display for ProbeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeSpec::Eigen(i) => write!(f, "e_{i}"),
            ProbeSpec::Extended(i) => write!(f, "ext_{i}"),
            ProbeSpec::Noise(i) => write!(f, "noise_{i}"),
            ProbeSpec::Indicator(a, b) => write!(f, "indicator[{a},{b}]"),
        }
    }
}

fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((num, den)) => {
            let d: f64 = den.trim().parse().ok()?;
            Some(num.trim().parse::<f64>().ok()? / d)
        }
        None => s.parse().ok(),
    }
}

impl FromStr for ProbeSpec {
    type Err = EwsError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || EwsError::Config(format!("unknown probe `{s}`"));
        if let Some(rest) = s.strip_prefix("indicator[").and_then(|r| r.strip_suffix(']')) {
            let (a, b) = rest.split_once(',').ok_or_else(bad)?;
            return Ok(ProbeSpec::Indicator(
                parse_number(a).ok_or_else(bad)?,
                parse_number(b).ok_or_else(bad)?,
            ));
        }
        let (head, index) = s.rsplit_once('_').ok_or_else(bad)?;
        let index: usize = index.parse().map_err(|_| bad())?;
        match head {
            "e" => Ok(ProbeSpec::Eigen(index)),
            "ext" => Ok(ProbeSpec::Extended(index)),
            "noise" => Ok(ProbeSpec::Noise(index)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for ProbeSpec {
    type Error = EwsError;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<ProbeSpec> for String {
    fn from(value: ProbeSpec) -> Self {
        value.to_string()
    }
}
