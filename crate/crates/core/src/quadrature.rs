//! Adaptive Simpson quadrature.

use crate::error::{EwsError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_depth: u32,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-10,
            rel: 1e-8,
            max_depth: 50,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn coarse_panels<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64, n: usize, out: &mut Vec<Panel>) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut total = 0.0;
    let mut f_prev = f(lo);
    for i in 0..n {
        let pa = lo + h * i as f64;
        let pb = if i + 1 == n { hi } else { lo + h * (i + 1) as f64 };
        let fm = f(0.5 * (pa + pb));
        let fb = f(pb);
        let whole = simpson(pa, pb, f_prev, fm, fb);
        total += whole;
        out.push(Panel {
            a: pa,
            b: pb,
            fa: f_prev,
            fm,
            fb,
            whole,
        });
        f_prev = fb;
    }
    total
}

const COARSE: usize = 8;

/// `∫_a^b f` by adaptive Simpson with Richardson correction.
///
/// A panel is accepted when `|S_left + S_right - S_whole| ≤ 15 ε`, where the
/// error budget `ε = max(abs, rel · |coarse estimate|)` is split evenly over
/// the initial panels and halved at every bisection.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(EwsError::param(
            "interval",
            format!("bounds must be finite, got [{a}, {b}]"),
        ));
    }
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    Ok(sign * adaptive_simpson_pieces(f, &[lo, hi], tol)?)
}

/// Integral over consecutive increasing breakpoints with one shared error budget.
pub fn adaptive_simpson_pieces<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], tol: Tolerance) -> Result<f64> {
    if breaks.iter().any(|b| !b.is_finite()) {
        return Err(EwsError::param("interval", "breakpoints must be finite"));
    }
    if breaks.windows(2).any(|w| w[1] < w[0]) {
        return Err(EwsError::param("interval", "breakpoints must be increasing"));
    }
    let mut panels = Vec::with_capacity(COARSE * breaks.len());
    let mut coarse = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            coarse += coarse_panels(&mut f, w[0], w[1], COARSE, &mut panels);
        }
    }
    if panels.is_empty() {
        return Ok(0.0);
    }
    let eps = tol.abs.max(tol.rel * coarse.abs()) / panels.len() as f64;
    let mut total = 0.0;
    for panel in panels {
        total += refine(&mut f, panel, eps, tol.max_depth)?;
    }
    if !total.is_finite() {
        return Err(EwsError::param("integrand", "non-finite value encountered"));
    }
    Ok(total)
}

fn refine<F: FnMut(f64) -> f64>(f: &mut F, p: Panel, eps: f64, depth: u32) -> Result<f64> {
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(p.a, m, p.fa, flm, p.fm);
    let right = simpson(m, p.b, p.fm, frm, p.fb);
    let delta = left + right - p.whole;
    if delta.abs() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || m <= p.a || m >= p.b {
        return Err(EwsError::param(
            "quadrature",
            format!("no convergence on [{}, {}] (error estimate {delta:e})", p.a, p.b),
        ));
    }
    let l = refine(
        f,
        Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
        },
        eps / 2.0,
        depth - 1,
    )?;
    let r = refine(
        f,
        Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
        },
        eps / 2.0,
        depth - 1,
    )?;
    Ok(l + r)
}
