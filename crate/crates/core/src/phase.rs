//! The exceptional line: boundary of the PT-unbroken region connected to
//! `q = 0`, traced over `delta` on either side of the `q` axis.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eig::{is_real, sort_levels, DEFAULT_LEVELS, DEFAULT_TOL_IM};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{BoundaryCondition, GalerkinParts, ModelParams, DEFAULT_TRUNCATION};
use crate::sweep::validate_grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    PositiveQ,
    NegativeQ,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::PositiveQ => 1.0,
            Side::NegativeQ => -1.0,
        }
    }
}

/// Critical `q`, or `Unbounded` when nothing breaks before `q_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QCrit {
    Finite(f64),
    Unbounded,
}

impl QCrit {
    pub fn finite(self) -> Option<f64> {
        match self {
            QCrit::Finite(q) => Some(q),
            QCrit::Unbounded => None,
        }
    }

    /// `|q_crit|`, with `Unbounded` as infinity.
    pub fn magnitude(self) -> f64 {
        match self {
            QCrit::Finite(q) => q.abs(),
            QCrit::Unbounded => f64::INFINITY,
        }
    }
}

impl fmt::Display for QCrit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QCrit::Finite(q) => write!(f, "{q}"),
            QCrit::Unbounded => f.write_str("unbounded"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSettings {
    /// Number of lowest levels that must stay real.
    pub k: usize,
    pub q_max: f64,
    pub tol_q: f64,
    /// Coarse scan step before bisection.
    pub scan_step: f64,
    /// Relative size of a discontinuity recorded as a jump.
    pub jump_threshold: f64,
    /// Galerkin truncation for the scan.
    pub n_trunc: usize,
    /// Largest truncation tried when a result fails its check at twice the
    /// truncation.
    pub n_max: usize,
    pub tol_im: f64,
}

impl Default for PhaseSettings {
    fn default() -> Self {
        Self {
            k: DEFAULT_LEVELS,
            q_max: 20.0,
            tol_q: 1e-4,
            scan_step: 0.02,
            jump_threshold: 0.25,
            n_trunc: DEFAULT_TRUNCATION,
            n_max: 256,
            tol_im: DEFAULT_TOL_IM,
        }
    }
}

impl PhaseSettings {
    fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParams(format!("k must be at least 2, got {}", self.k)));
        }
        for (name, v) in [
            ("q_max", self.q_max),
            ("tol_q", self.tol_q),
            ("scan_step", self.scan_step),
            ("jump_threshold", self.jump_threshold),
            ("tol_im", self.tol_im),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Whether the `k` lowest levels of the truncation-`n` matrix are all real.
fn unbroken(parts: &GalerkinParts, q: f64, delta: f64, k: usize, tol_im: f64) -> Result<bool> {
    let mut ev = linalg::eigenvalues(&parts.matrix(q, delta))?;
    sort_levels(&mut ev);
    Ok(ev.iter().take(k).all(|&z| is_real(z, tol_im)))
}

/// Outcome of a one-dimensional boundary scan.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Scan {
    /// Last point where the predicate held and first where it failed.
    Bracket { inside: f64, outside: f64 },
    Unbounded,
}

/// Walks from `0` to `end` (either sign) in steps of `step` until `holds`
/// fails, then bisects the failing cell down to `tol`.
fn scan_boundary(
    end: f64,
    step: f64,
    tol: f64,
    mut holds: impl FnMut(f64) -> Result<bool>,
) -> Result<Scan> {
    let sign = end.signum();
    let n = (end.abs() / step - 1e-9).ceil() as usize;
    let mut prev = 0.0;
    for i in 1..=n {
        let x = if i == n { end } else { sign * i as f64 * step };
        if !holds(x)? {
            let (mut inside, mut outside) = (prev, x);
            while (outside - inside).abs() > tol {
                let mid = 0.5 * (inside + outside);
                if holds(mid)? {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            return Ok(Scan::Bracket { inside, outside });
        }
        prev = x;
    }
    Ok(Scan::Unbounded)
}

/// Runs `scan` at increasing truncation until its answer survives a check at
/// twice the truncation (or `n_max` is reached).
fn confirmed_scan(
    j: u32,
    bc: BoundaryCondition,
    settings: &PhaseSettings,
    end: f64,
    scan: impl Fn(&GalerkinParts) -> Result<Scan>,
    point: impl Fn(f64) -> (f64, f64),
) -> Result<Scan> {
    let mut n = settings.n_trunc;
    loop {
        let parts = GalerkinParts::new(j, bc, n)?;
        let result = scan(&parts)?;
        if 2 * n > settings.n_max {
            return Ok(result);
        }
        let check = GalerkinParts::new(j, bc, 2 * n)?;
        let holds = |x: f64| {
            let (q, delta) = point(x);
            unbroken(&check, q, delta, settings.k, settings.tol_im)
        };
        let ok = match result {
            Scan::Bracket { inside, outside } => holds(inside)? && !holds(outside)?,
            Scan::Unbounded => holds(end)?,
        };
        if ok {
            return Ok(result);
        }
        log::debug!("boundary scan at N = {n} failed its check at N = {}", 2 * n);
        n *= 2;
    }
}

/// Boundary of the unbroken region connected to `q = 0` at fixed `delta`.
/// Recovery of real levels beyond the first failure is not searched.
pub fn critical_q(
    delta: f64,
    j: u32,
    bc: BoundaryCondition,
    side: Side,
    settings: &PhaseSettings,
) -> Result<QCrit> {
    ModelParams::new(0.0, delta, j, bc)?;
    settings.validate()?;
    let end = side.sign() * settings.q_max;
    let scan = confirmed_scan(
        j,
        bc,
        settings,
        end,
        |parts| {
            scan_boundary(end, settings.scan_step, settings.tol_q, |q| {
                unbroken(parts, q, delta, settings.k, settings.tol_im)
            })
        },
        |q| (q, delta),
    )?;
    Ok(match scan {
        Scan::Bracket { inside, outside } => QCrit::Finite(0.5 * (inside + outside)),
        Scan::Unbounded => QCrit::Unbounded,
    })
}

/// Smallest `delta > 0` at which the `k` lowest levels stop being real, at
/// fixed `q`; `None` if that does not happen up to `delta_max`.
pub fn critical_delta(
    q: f64,
    j: u32,
    bc: BoundaryCondition,
    delta_max: f64,
    tol_delta: f64,
    settings: &PhaseSettings,
) -> Result<Option<f64>> {
    ModelParams::new(q, 0.0, j, bc)?;
    settings.validate()?;
    if !(delta_max > 0.0 && tol_delta > 0.0) {
        return Err(Error::InvalidParams("delta_max and tol_delta must be positive".into()));
    }
    let scan = confirmed_scan(
        j,
        bc,
        settings,
        delta_max,
        |parts| {
            scan_boundary(delta_max, settings.scan_step, tol_delta, |delta| {
                unbroken(parts, q, delta, settings.k, settings.tol_im)
            })
        },
        |delta| (q, delta),
    )?;
    Ok(match scan {
        Scan::Bracket { inside, outside } => Some(0.5 * (inside + outside)),
        Scan::Unbounded => None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinePoint {
    pub delta: f64,
    pub q_crit: QCrit,
}

/// A discontinuity of the line between grid points `index - 1` and `index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    /// Midpoint of the two bracketing `delta` values.
    pub delta: f64,
    pub index: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExceptionalLine {
    pub j: u32,
    pub bc: BoundaryCondition,
    pub k: usize,
    pub side: Side,
    pub q_max: f64,
    pub points: Vec<LinePoint>,
    pub jumps: Vec<Jump>,
}

impl ExceptionalLine {
    /// `(delta, q_crit)` for the points with a finite critical `q`.
    pub fn finite_points(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.q_crit.finite().map(|q| (p.delta, q)))
            .collect()
    }

    pub fn jumps_in(&self, lo: f64, hi: f64) -> Vec<Jump> {
        self.jumps
            .iter()
            .copied()
            .filter(|j| j.delta >= lo && j.delta <= hi)
            .collect()
    }
}

/// Jumps between consecutive finite points; a change between finite and
/// `Unbounded` is the cap at `q_max`, not a jump.
fn find_jumps(points: &[LinePoint], threshold: f64) -> Vec<Jump> {
    points
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| match (w[0].q_crit, w[1].q_crit) {
            (QCrit::Finite(a), QCrit::Finite(b)) if (b - a).abs() > threshold * a.abs().max(1.0) => {
                Some(Jump {
                    delta: 0.5 * (w[0].delta + w[1].delta),
                    index: i + 1,
                })
            }
            _ => None,
        })
        .collect()
}

/// Critical `q` over an ascending grid of non-negative `delta` values.
pub fn trace_exceptional_line(
    delta_grid: &[f64],
    j: u32,
    bc: BoundaryCondition,
    side: Side,
    settings: &PhaseSettings,
) -> Result<ExceptionalLine> {
    validate_grid(delta_grid)?;
    if delta_grid[0] < 0.0 {
        return Err(Error::InvalidGrid(
            "delta grid must be non-negative (the line is symmetric in delta)".into(),
        ));
    }
    settings.validate()?;
    let points = delta_grid
        .par_iter()
        .map(|&delta| {
            critical_q(delta, j, bc, side, settings).map(|q_crit| LinePoint { delta, q_crit })
        })
        .collect::<Result<Vec<_>>>()?;
    let jumps = find_jumps(&points, settings.jump_threshold);
    Ok(ExceptionalLine {
        j,
        bc,
        k: settings.k,
        side,
        q_max: settings.q_max,
        points,
        jumps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceViolation {
    pub delta: f64,
    pub q_crit_a: QCrit,
    pub q_crit_b: QCrit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub compared: usize,
    pub violations: Vec<DominanceViolation>,
}

impl DominanceReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `|q_crit(b)| >= |q_crit(a)|` at every grid point, i.e. that the
/// unbroken region of `b` (typically Dirichlet) contains that of `a`
/// (typically Neumann).
pub fn compare_bc_stability(a: &ExceptionalLine, b: &ExceptionalLine) -> Result<DominanceReport> {
    if a.j != b.j {
        return Err(Error::LineMismatch(format!("j differs ({} vs {})", a.j, b.j)));
    }
    if a.side != b.side {
        return Err(Error::LineMismatch("lines are on different sides of q = 0".into()));
    }
    if a.points.len() != b.points.len()
        || a.points.iter().zip(&b.points).any(|(x, y)| (x.delta - y.delta).abs() > 1e-12)
    {
        return Err(Error::LineMismatch("delta grids differ".into()));
    }
    let violations = a
        .points
        .iter()
        .zip(&b.points)
        .filter(|(x, y)| y.q_crit.magnitude() < x.q_crit.magnitude())
        .map(|(x, y)| DominanceViolation {
            delta: x.delta,
            q_crit_a: x.q_crit,
            q_crit_b: y.q_crit,
        })
        .collect();
    Ok(DominanceReport {
        compared: a.points.len(),
        violations,
    })
}
