//! One-dimensional spatial grids and their quadrature weights.
//!
//! Two spacing conventions are used. A periodic grid on `[left, right)`
//! has `n` nodes and spacing `(right - left) / n`; every other spatial kind
//! places nodes on both endpoints, so the spacing is `(right - left) / (n - 1)`.
//! A finite-dimensional "grid" carries no geometry and has unit weights, so
//! Riemann inner products reduce to plain dot products.

use serde::{Deserialize, Serialize};

use crate::error::{EwsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Periodic,
    DirichletEndpoints,
    DecoupledPointwise,
    FiniteDimensional,
}

impl BoundaryKind {
    pub fn is_spatial(self) -> bool {
        !matches!(self, BoundaryKind::FiniteDimensional)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n_points: usize,
    spacing: f64,
    left: f64,
    right: f64,
    kind: BoundaryKind,
}

/// Builds a grid, validating bounds and node count.
pub fn make_grid(kind: BoundaryKind, left: f64, right: f64, n_points: usize) -> Result<Grid1D> {
    if kind == BoundaryKind::FiniteDimensional {
        return Grid1D::finite_dimensional(n_points);
    }
    if !left.is_finite() || !right.is_finite() {
        return Err(EwsError::InvalidGrid(format!(
            "bounds must be finite, got [{left}, {right}]"
        )));
    }
    if right <= left {
        return Err(EwsError::InvalidGrid(format!(
            "right bound {right} must exceed left bound {left}"
        )));
    }
    if n_points < 2 {
        return Err(EwsError::InvalidGrid(format!(
            "spatial grids need at least 2 nodes, got {n_points}"
        )));
    }
    let intervals = match kind {
        BoundaryKind::Periodic => n_points,
        _ => n_points - 1,
    };
    Ok(Grid1D {
        n_points,
        spacing: (right - left) / intervals as f64,
        left,
        right,
        kind,
    })
}

impl Grid1D {
    /// Coordinate space `R^n` with unit weights.
    pub fn finite_dimensional(dim: usize) -> Result<Grid1D> {
        if dim == 0 {
            return Err(EwsError::InvalidGrid(
                "finite-dimensional space needs dimension >= 1".into(),
            ));
        }
        Ok(Grid1D {
            n_points: dim,
            spacing: 1.0,
            left: 0.0,
            right: dim as f64,
            kind: BoundaryKind::FiniteDimensional,
        })
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn kind(&self) -> BoundaryKind {
        self.kind
    }

    /// Quadrature weight attached to every node.
    pub fn weight(&self) -> f64 {
        self.spacing
    }

    pub fn node(&self, i: usize) -> f64 {
        self.left + i as f64 * self.spacing
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.node(i))
    }

    pub fn same_shape(&self, other: &Grid1D) -> bool {
        self.kind == other.kind
            && self.n_points == other.n_points
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing.abs()
            && (self.left - other.left).abs() <= 1e-12 * (1.0 + self.left.abs())
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_points {
            return Err(EwsError::DimensionMismatch {
                expected: self.n_points,
                actual: len,
            });
        }
        Ok(())
    }
}
