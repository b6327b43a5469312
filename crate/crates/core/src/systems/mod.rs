//! The four linear red-noise systems and their time steppers.
//!
//! | variant                | drift                                 | scheme                          |
//! |------------------------|---------------------------------------|---------------------------------|
//! | `CablePeriodic`        | `Δ + p` on the periodic unit interval | spectral exponential integrator |
//! | `JordanChain`          | `p I + N` on `R^M` (one Jordan block) | exact matrix exponential        |
//! | `MultiplicationOp`     | `f(x, p) = -g(x) + p`, pointwise      | exact per-node exponential      |
//! | `CableBoundaryNoise`   | `Δ + π² + p`, red Dirichlet data      | implicit Euler, tridiagonal     |
//!
//! In the first three the noise is frozen over each step (variation of
//! constants with constant forcing), so the deterministic part is exact.

mod boundary;
mod cable;
pub(crate) mod jordan;
mod pointwise;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use boundary::{boundary_implicit_euler_step, BoundaryStepper};
pub use cable::{cable_periodic_step, CableStepper, SpectralCable, SpectralFunctional};
pub use jordan::{jordan_step, JordanStepper};
pub use pointwise::{pointwise_step, PointwiseStepper};

use crate::error::{EwsError, Result};
use crate::grid::{make_grid, BoundaryKind, Grid1D};

/// Shape `g` of the pointwise drift `f(x, p) = -g(x) + p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftProfile {
    /// `g(x) = |x|^α`
    PowerLaw { alpha: f64 },
    /// `g(x) = Σ_n a_n (x - center)^n`, coefficients from `n = 0`.
    Analytic { center: f64, coeffs: Vec<f64> },
}

impl DriftProfile {
    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        match self {
            DriftProfile::PowerLaw { alpha } => x.abs().powf(*alpha),
            DriftProfile::Analytic { center, coeffs } => {
                let y = x - center;
                coeffs.iter().rev().fold(0.0, |acc, a| acc * y + a)
            }
        }
    }

    #[inline]
    pub fn drift(&self, x: f64, p: f64) -> f64 {
        -self.g(x) + p
    }

    /// Order of the zero of `g` at its minimum: `α`, or the first non-zero
    /// coefficient index `n_*` for analytic profiles.
    pub fn vanishing_order(&self) -> Option<f64> {
        match self {
            DriftProfile::PowerLaw { alpha } => Some(*alpha),
            DriftProfile::Analytic { coeffs, .. } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .find(|(_, a)| **a != 0.0)
                .map(|(n, _)| n as f64),
        }
    }

    /// Point where `g` attains its minimum.
    pub fn critical_point(&self) -> f64 {
        match self {
            DriftProfile::PowerLaw { .. } => 0.0,
            DriftProfile::Analytic { center, .. } => *center,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            DriftProfile::PowerLaw { alpha } if alpha.is_finite() && *alpha > 0.0 => Ok(()),
            DriftProfile::PowerLaw { alpha } => Err(EwsError::param("alpha", format!("must be > 0, got {alpha}"))),
            DriftProfile::Analytic { center, coeffs } => {
                if !center.is_finite() || coeffs.is_empty() || coeffs.iter().any(|a| !a.is_finite()) {
                    return Err(EwsError::param("coeffs", "need finite center and coefficients"));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CablePayload {
    pub grid: Grid1D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanPayload {
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicationPayload {
    pub profile: DriftProfile,
    pub grid: Grid1D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPayload {
    pub grid: Grid1D,
    /// Constant added to the Laplacian (π² places the sin(πx) mode at `p`).
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    CablePeriodic(CablePayload),
    JordanChain(JordanPayload),
    MultiplicationOp(MultiplicationPayload),
    CableBoundaryNoise(BoundaryPayload),
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::CablePeriodic(_) => "cable_periodic",
            Variant::JordanChain(_) => "jordan_chain",
            Variant::MultiplicationOp(_) => "multiplication_op",
            Variant::CableBoundaryNoise(_) => "cable_boundary_noise",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    variant: Variant,
    p: f64,
    sigma_r: f64,
}

impl SystemSpec {
    pub fn new(variant: Variant, p: f64, sigma_r: f64) -> Result<Self> {
        let spec = SystemSpec { variant, p, sigma_r };
        spec.validate()?;
        Ok(spec)
    }

    /// Periodic cable equation on `[0, 1]` with `n_points` nodes.
    pub fn cable(n_points: usize, p: f64) -> Result<Self> {
        let grid = make_grid(BoundaryKind::Periodic, 0.0, 1.0, n_points)?;
        Self::new(Variant::CablePeriodic(CablePayload { grid }), p, 1.0)
    }

    pub fn jordan(dim: usize, p: f64) -> Result<Self> {
        Self::new(Variant::JordanChain(JordanPayload { dim }), p, 1.0)
    }

    /// Pointwise system with `g(x) = |x|^α` on `[left, right]`.
    pub fn multiplication(alpha: f64, left: f64, right: f64, n_points: usize, p: f64) -> Result<Self> {
        let grid = make_grid(BoundaryKind::DecoupledPointwise, left, right, n_points)?;
        Self::new(
            Variant::MultiplicationOp(MultiplicationPayload {
                profile: DriftProfile::PowerLaw { alpha },
                grid,
            }),
            p,
            1.0,
        )
    }

    /// Cable equation on `[0, 1]` with red Dirichlet data at both ends.
    pub fn boundary(n_points: usize, p: f64) -> Result<Self> {
        let grid = make_grid(BoundaryKind::DirichletEndpoints, 0.0, 1.0, n_points)?;
        Self::new(
            Variant::CableBoundaryNoise(BoundaryPayload { grid, shift: PI * PI }),
            p,
            1.0,
        )
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sigma_r(&self) -> f64 {
        self.sigma_r
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.variant.clone(), p, self.sigma_r)
    }

    pub fn with_sigma_r(&self, sigma_r: f64) -> Result<Self> {
        Self::new(self.variant.clone(), self.p, sigma_r)
    }

    /// Space of the solution `u`.
    pub fn state_grid(&self) -> Grid1D {
        match &self.variant {
            Variant::CablePeriodic(c) => c.grid.clone(),
            Variant::JordanChain(j) => Grid1D::finite_dimensional(j.dim).expect("validated dim"),
            Variant::MultiplicationOp(m) => m.grid.clone(),
            Variant::CableBoundaryNoise(b) => b.grid.clone(),
        }
    }

    /// Space of the red noise; the two boundary points for the boundary system.
    pub fn noise_grid(&self) -> Grid1D {
        match &self.variant {
            Variant::CableBoundaryNoise(_) => Grid1D::finite_dimensional(2).expect("dim 2"),
            _ => self.state_grid(),
        }
    }

    /// Pointwise drift values on the grid (multiplication operator only).
    pub fn drift_values(&self) -> Option<Vec<f64>> {
        match &self.variant {
            Variant::MultiplicationOp(m) => Some(m.grid.nodes().map(|x| m.profile.drift(x, self.p)).collect()),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p < 0.0) {
            return Err(EwsError::param(
                "p",
                format!("bifurcation parameter must satisfy p < 0, got {}", self.p),
            ));
        }
        if !(self.sigma_r.is_finite() && self.sigma_r >= 0.0) {
            return Err(EwsError::param(
                "sigma_r",
                format!("must be >= 0, got {}", self.sigma_r),
            ));
        }
        match &self.variant {
            Variant::CablePeriodic(c) => {
                if c.grid.kind() != BoundaryKind::Periodic {
                    return Err(EwsError::GridMismatch("cable equation needs a periodic grid".into()));
                }
            }
            Variant::JordanChain(j) => {
                if j.dim == 0 {
                    return Err(EwsError::param("dim", "Jordan block needs dimension >= 1"));
                }
            }
            Variant::MultiplicationOp(m) => {
                m.profile.validate()?;
                if m.grid.kind() != BoundaryKind::DecoupledPointwise {
                    return Err(EwsError::GridMismatch(
                        "multiplication operator needs a decoupled pointwise grid".into(),
                    ));
                }
                if let Some((x, f)) = m
                    .grid
                    .nodes()
                    .map(|x| (x, m.profile.drift(x, self.p)))
                    .find(|(_, f)| !(*f < 0.0))
                {
                    return Err(EwsError::param(
                        "p",
                        format!("drift f(x, p) = {f} must be negative, violated at x = {x}"),
                    ));
                }
            }
            Variant::CableBoundaryNoise(b) => {
                if b.grid.kind() != BoundaryKind::DirichletEndpoints || b.grid.len() < 3 {
                    return Err(EwsError::GridMismatch(
                        "boundary system needs a Dirichlet grid with >= 3 nodes".into(),
                    ));
                }
                let lead = boundary::leading_discrete_eigenvalue(&b.grid, b.shift, self.p);
                if !(lead < 0.0) {
                    return Err(EwsError::param(
                        "p",
                        format!("discrete leading eigenvalue {lead} is not negative; refine the grid or decrease p"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Rejects `κ` values that coincide with `-λ` for a drift eigenvalue `λ`,
    /// where the resolvent `(A + κ)^{-1}` does not exist. Only quantities built
    /// from the resolvent need this; stationary variances are continuous there.
    pub fn check_kappa(&self, kappa: f64) -> Result<()> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(EwsError::param("kappa", format!("must be > 0, got {kappa}")));
        }
        let hit = |lambda: f64| (lambda + kappa).abs() <= 1e-12 * kappa.max(lambda.abs());
        let clash = match &self.variant {
            Variant::CablePeriodic(c) => (0..=c.grid.len() / 2)
                .map(|k| cable::mode_eigenvalue(&c.grid, self.p, k as f64))
                .any(hit),
            Variant::JordanChain(_) => hit(self.p),
            Variant::MultiplicationOp(_) => self
                .drift_values()
                .expect("multiplication variant")
                .into_iter()
                .any(hit),
            // the noise enters through boundary data; no resolvent condition on the state grid
            Variant::CableBoundaryNoise(_) => false,
        };
        if clash {
            return Err(EwsError::param(
                "kappa",
                format!("-kappa = {} lies in the drift spectrum", -kappa),
            ));
        }
        Ok(())
    }
}

/// One entry of the (generalized) eigenstructure of the drift.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub eigenvalue: f64,
    /// Position in the Jordan chain (1 for proper eigenvectors).
    pub chain_index: usize,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

/// Leading eigenpairs sorted by decreasing eigenvalue.
///
/// For the Jordan block the whole chain is returned, `k = 1..=M`, with
/// `Jᵀ e*_k = p e*_k + e*_{k-1}`, `J e_k = p e_k + e_{k-1}` and the
/// biorthogonal normalization `⟨e_k, e*_{M-k+1}⟩ = 1`.
pub fn system_eigenstructure(spec: &SystemSpec, count: usize) -> Result<Vec<Eigenpair>> {
    match spec.variant() {
        Variant::CablePeriodic(c) => {
            let n = count.min(c.grid.len());
            Ok((1..=n)
                .map(|i| {
                    let f = cable::mode_function(&c.grid, i);
                    Eigenpair {
                        eigenvalue: cable::mode_eigenvalue(&c.grid, spec.p(), cable::mode_wavenumber(i) as f64),
                        chain_index: 1,
                        right: f.clone(),
                        left: f,
                    }
                })
                .collect())
        }
        Variant::JordanChain(j) => Ok(jordan::chain(j.dim)
            .into_iter()
            .enumerate()
            .map(|(k, (right, left))| Eigenpair {
                eigenvalue: spec.p(),
                chain_index: k + 1,
                right,
                left,
            })
            .collect()),
        Variant::CableBoundaryNoise(b) => {
            let n = count.min(b.grid.len() - 2);
            Ok((1..=n)
                .map(|i| {
                    let f = boundary::sine_mode(&b.grid, i);
                    let k = i as f64 * PI / (b.grid.right() - b.grid.left());
                    Eigenpair {
                        eigenvalue: spec.p() + b.shift - k * k,
                        chain_index: 1,
                        right: f.clone(),
                        left: f,
                    }
                })
                .collect())
        }
        Variant::MultiplicationOp(_) => Err(EwsError::Unsupported(
            "multiplication operator has a continuous spectrum".into(),
        )),
    }
}

/// A stepper for any variant: `u ← step(u, ξ)` with `ξ` on [`SystemSpec::noise_grid`].
#[derive(Debug)]
pub enum Stepper {
    Cable(CableStepper),
    Jordan(JordanStepper),
    Pointwise(PointwiseStepper),
    Boundary(BoundaryStepper),
}

impl Stepper {
    pub fn new(spec: &SystemSpec, dt: f64) -> Result<Self> {
        Ok(match spec.variant() {
            Variant::CablePeriodic(_) => Stepper::Cable(CableStepper::new(spec, dt)?),
            Variant::JordanChain(_) => Stepper::Jordan(JordanStepper::new(spec, dt)?),
            Variant::MultiplicationOp(_) => Stepper::Pointwise(PointwiseStepper::new(spec, dt)?),
            Variant::CableBoundaryNoise(_) => Stepper::Boundary(BoundaryStepper::new(spec, dt)?),
        })
    }

    #[inline]
    pub fn step(&mut self, u: &mut [f64], xi: &[f64]) {
        match self {
            Stepper::Cable(s) => s.step(u, xi),
            Stepper::Jordan(s) => s.step(u, xi),
            Stepper::Pointwise(s) => s.step(u, xi),
            Stepper::Boundary(s) => s.step(u, xi[0], xi[1]),
        }
    }
}

pub(crate) fn check_dt(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(EwsError::param("dt", format!("must be > 0, got {dt}")));
    }
    Ok(())
}

/// `(e^{λ h} - 1) / λ`, continuous at `λ = 0`.
#[inline]
pub(crate) fn phi1(lambda: f64, h: f64) -> f64 {
    if lambda == 0.0 {
        h
    } else {
        (lambda * h).exp_m1() / lambda
    }
}
