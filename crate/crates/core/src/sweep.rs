//! One-parameter sweeps: branch tracking, coalescence detection and the real
//! intervals ("energy loops") of each branch.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eig::{converged_spectrum, is_real, spectrum_at, SolverSettings};
use crate::error::{Error, Result};
use crate::model::{assemble_matrix, ModelParams};

/// Width to which coalescence points are bracketed.
pub const EVENT_BRACKET: f64 = 1e-6;

/// Extra candidates offered to the matcher above the tracked levels, so that
/// a level entering from above can be picked up.
const EXTRA_CANDIDATES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Q,
    Delta,
}

impl SweepParam {
    pub fn apply(self, base: &ModelParams, value: f64) -> ModelParams {
        match self {
            SweepParam::Q => base.with_q(value),
            SweepParam::Delta => base.with_delta(value),
        }
    }
}

/// One eigenvalue branch followed across a sweep grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelCurve {
    pub sweep_param: SweepParam,
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Level index at the first grid point.
    pub label: usize,
}

/// The tracked curves of a sweep together with what is needed to revisit
/// intermediate parameter values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSweep {
    pub base: ModelParams,
    pub sweep_param: SweepParam,
    pub grid: Vec<f64>,
    pub curves: Vec<LevelCurve>,
    /// Truncation that converged at each grid point.
    pub n_used: Vec<usize>,
    pub settings: SolverSettings,
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("grid is empty".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid("grid contains non-finite values".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Greedy assignment of `heads` to `candidates` by ascending distance.
/// Returns, for each head, the index of its candidate.
fn match_nearest(heads: &[Complex64], candidates: &[Complex64]) -> Vec<usize> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(heads.len() * candidates.len());
    for (h, zh) in heads.iter().enumerate() {
        for (c, zc) in candidates.iter().enumerate() {
            pairs.push(((zh - zc).norm(), h, c));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut head_to = vec![usize::MAX; heads.len()];
    let mut taken = vec![false; candidates.len()];
    let mut last_chosen: Option<(f64, usize, usize)> = None;
    for (d, h, c) in pairs {
        if head_to[h] != usize::MAX || taken[c] {
            if let Some((d0, h0, c0)) = last_chosen {
                if (d - d0).abs() < 1e-9 && (h == h0) != (c == c0) {
                    log::debug!(
                        "ambiguous branch matching: head {h0}->{c0} vs {h}->{c} at distance {d0:e}"
                    );
                }
            }
            continue;
        }
        head_to[h] = c;
        taken[c] = true;
        last_chosen = Some((d, h, c));
    }
    head_to
}

/// Tracks the `k` lowest levels across `grid`, varying `sweep_param` from
/// `base`.
pub fn sweep_levels(
    base: &ModelParams,
    sweep_param: SweepParam,
    grid: &[f64],
    k: usize,
    settings: &SolverSettings,
) -> Result<LevelSweep> {
    base.validate()?;
    validate_grid(grid)?;
    if k < 2 {
        return Err(Error::InvalidParams(format!("a sweep tracks at least 2 levels, got {k}")));
    }
    let n_cand = k + EXTRA_CANDIDATES;
    let spectra: Vec<(Vec<Complex64>, usize)> = grid
        .par_iter()
        .map(|&x| {
            let p = sweep_param.apply(base, x);
            let s = converged_spectrum(&p, n_cand, settings)?;
            Ok((s.eigenvalues[..n_cand].to_vec(), s.n_used))
        })
        .collect::<Result<_>>()?;

    let mut values: Vec<Vec<Complex64>> = (0..k).map(|_| Vec::with_capacity(grid.len())).collect();
    for (b, v) in values.iter_mut().enumerate() {
        v.push(spectra[0].0[b]);
    }
    for (cands, _) in spectra.iter().skip(1) {
        let heads: Vec<Complex64> = values.iter().map(|v| *v.last().unwrap()).collect();
        let assignment = match_nearest(&heads, cands);
        for (b, v) in values.iter_mut().enumerate() {
            v.push(cands[assignment[b]]);
        }
    }
    let curves = values
        .into_iter()
        .enumerate()
        .map(|(label, values)| LevelCurve {
            sweep_param,
            grid: grid.to_vec(),
            values,
            label,
        })
        .collect();
    Ok(LevelSweep {
        base: *base,
        sweep_param,
        grid: grid.to_vec(),
        curves,
        n_used: spectra.iter().map(|s| s.1).collect(),
        settings: *settings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    RealToComplex,
    ComplexToReal,
}

/// Two branches merging on the real axis and leaving it as a conjugate pair
/// (or the reverse).
///
/// `direction` is read moving away from zero along the sweep parameter:
/// ascending for events at non-negative values, descending otherwise. That
/// keeps "levels are lost as |q| grows" a `RealToComplex` event on either
/// side of the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceEvent {
    pub param_value: f64,
    pub branch_a: usize,
    pub branch_b: usize,
    pub a_star: f64,
    pub direction: Direction,
    /// False when bisection could not confirm the transition inside the grid
    /// cell; `param_value` is then the cell midpoint.
    pub bracketed: bool,
    /// Grid cell `(i, i + 1)` containing the event.
    pub cell: usize,
}

/// Real-axis window that isolates a branch pair from its neighbours.
#[derive(Debug, Clone, Copy)]
struct Window {
    lo: f64,
    hi: f64,
}

impl Window {
    fn for_pair(sweep: &LevelSweep, cell: usize, a: usize, b: usize) -> Self {
        let own: Vec<f64> = [a, b]
            .iter()
            .flat_map(|&l| [sweep.curves[l].values[cell].re, sweep.curves[l].values[cell + 1].re])
            .collect();
        let center = own.iter().sum::<f64>() / own.len() as f64;
        let spread = own.iter().map(|x| (x - center).abs()).fold(0.0, f64::max);
        let nearest_other = sweep
            .curves
            .iter()
            .filter(|c| c.label != a && c.label != b)
            .flat_map(|c| [c.values[cell].re, c.values[cell + 1].re])
            .map(|x| (x - center).abs())
            .fold(f64::INFINITY, f64::min);
        let mut half = if nearest_other.is_finite() {
            0.5 * (spread + nearest_other)
        } else {
            2.0 * spread + 1.0
        };
        half = half.max(1.5 * spread).max(1e-9);
        Window {
            lo: center - half,
            hi: center + half,
        }
    }

    /// A complex eigenvalue with real part inside the window, if any.
    fn complex_member(&self, eigenvalues: &[Complex64], tol_im: f64) -> Option<Complex64> {
        eigenvalues
            .iter()
            .copied()
            .filter(|z| z.re >= self.lo && z.re <= self.hi && !is_real(*z, tol_im))
            .min_by(|x, y| x.im.abs().total_cmp(&y.im.abs()).then(x.im.total_cmp(&y.im)))
    }
}

fn pair_up(sweep: &LevelSweep, members: &[usize], at: usize) -> Vec<(usize, usize)> {
    let mut cands = Vec::new();
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            let za = sweep.curves[a].values[at];
            let zb = sweep.curves[b].values[at];
            cands.push(((za - zb.conj()).norm(), a.min(b), a.max(b)));
        }
    }
    cands.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (_, a, b) in cands {
        if used.contains(&a) || used.contains(&b) {
            continue;
        }
        used.insert(a);
        used.insert(b);
        out.push((a, b));
    }
    out
}

/// Scans every grid cell for branch pairs that switch between two distinct
/// real values and one conjugate pair, and brackets each switch by bisection
/// to [`EVENT_BRACKET`].
pub fn detect_coalescence(sweep: &LevelSweep, tol_im: f64) -> Result<Vec<CoalescenceEvent>> {
    if !(tol_im > 0.0) {
        return Err(Error::InvalidParams("tol_im must be positive".into()));
    }
    let mut events = Vec::new();
    for cell in 0..sweep.grid.len().saturating_sub(1) {
        let mut lost = Vec::new();
        let mut gained = Vec::new();
        for c in &sweep.curves {
            let left = is_real(c.values[cell], tol_im);
            let right = is_real(c.values[cell + 1], tol_im);
            match (left, right) {
                (true, false) => lost.push(c.label),
                (false, true) => gained.push(c.label),
                _ => {}
            }
        }
        for (a, b) in pair_up(sweep, &lost, cell + 1) {
            events.push(bracket_event(sweep, cell, a, b, true, tol_im)?);
        }
        for (a, b) in pair_up(sweep, &gained, cell) {
            events.push(bracket_event(sweep, cell, a, b, false, tol_im)?);
        }
    }
    events.sort_by(|x, y| {
        x.param_value
            .total_cmp(&y.param_value)
            .then(x.branch_a.cmp(&y.branch_a))
            .then(x.branch_b.cmp(&y.branch_b))
    });
    Ok(events)
}

fn bracket_event(
    sweep: &LevelSweep,
    cell: usize,
    a: usize,
    b: usize,
    complex_on_right: bool,
    tol_im: f64,
) -> Result<CoalescenceEvent> {
    let window = Window::for_pair(sweep, cell, a, b);
    let n = sweep.n_used[cell].max(sweep.n_used[cell + 1]);
    let eval = |x: f64| -> Result<Option<Complex64>> {
        let p = sweep.sweep_param.apply(&sweep.base, x);
        let s = spectrum_at(&assemble_matrix(&p, n)?, tol_im)?;
        Ok(window.complex_member(&s.eigenvalues, tol_im))
    };
    let (mut lo, mut hi) = (sweep.grid[cell], sweep.grid[cell + 1]);
    let at_lo = eval(lo)?;
    let at_hi = eval(hi)?;
    let consistent = at_lo.is_some() != complex_on_right && at_hi.is_some() == complex_on_right;

    let ascending = if complex_on_right {
        Direction::RealToComplex
    } else {
        Direction::ComplexToReal
    };
    let flip = |d: Direction| match d {
        Direction::RealToComplex => Direction::ComplexToReal,
        Direction::ComplexToReal => Direction::RealToComplex,
    };

    if !consistent {
        log::debug!("coalescence of branches {a}/{b} in cell {cell} could not be bracketed");
        let mid = 0.5 * (lo + hi);
        let za = sweep.curves[a].values[cell];
        let zb = sweep.curves[b].values[cell];
        return Ok(CoalescenceEvent {
            param_value: mid,
            branch_a: a,
            branch_b: b,
            a_star: 0.5 * (za.re + zb.re),
            direction: if mid >= 0.0 { ascending } else { flip(ascending) },
            bracketed: false,
            cell,
        });
    }

    let mut complex_side = if complex_on_right { at_hi } else { at_lo }.expect("checked above");
    while hi - lo > EVENT_BRACKET {
        let mid = 0.5 * (lo + hi);
        let m = eval(mid)?;
        let mid_complex = m.is_some();
        if mid_complex == complex_on_right {
            hi = mid;
        } else {
            lo = mid;
        }
        if let Some(z) = m {
            complex_side = z;
        }
    }
    let param_value = 0.5 * (lo + hi);
    Ok(CoalescenceEvent {
        param_value,
        branch_a: a,
        branch_b: b,
        a_star: complex_side.re,
        direction: if param_value >= 0.0 {
            ascending
        } else {
            flip(ascending)
        },
        bracketed: true,
        cell,
    })
}

/// Maximal parameter intervals on which branch `label` is real. Interior
/// endpoints are moved onto the bracketed coalescence points from `events`.
pub fn real_intervals(
    sweep: &LevelSweep,
    label: usize,
    tol_im: f64,
    events: &[CoalescenceEvent],
) -> Result<Vec<(f64, f64)>> {
    let curve = sweep
        .curves
        .iter()
        .find(|c| c.label == label)
        .ok_or_else(|| Error::InvalidParams(format!("no branch with label {label}")))?;
    let real: Vec<bool> = curve.values.iter().map(|&z| is_real(z, tol_im)).collect();
    let event_in = |cell: usize| {
        events
            .iter()
            .find(|e| e.cell == cell && (e.branch_a == label || e.branch_b == label))
            .map(|e| e.param_value)
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < real.len() {
        if !real[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < real.len() && real[i + 1] {
            i += 1;
        }
        let end = i;
        let lo = if start == 0 {
            curve.grid[0]
        } else {
            event_in(start - 1).unwrap_or(curve.grid[start])
        };
        let hi = if end + 1 == real.len() {
            curve.grid[end]
        } else {
            event_in(end).unwrap_or(curve.grid[end])
        };
        out.push((lo, hi));
        i += 1;
    }
    Ok(out)
}

/// Evenly spaced grid from `lo` to `hi` (inclusive when `hi` lands on the
/// lattice within 1e-9 of a step).
pub fn linear_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(Error::InvalidGrid(format!("bad grid {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoundaryCondition;

    fn fast() -> SolverSettings {
        SolverSettings {
            n_start: 32,
            ..SolverSettings::default()
        }
    }

    fn base(delta: f64, j: u32) -> ModelParams {
        ModelParams::new(0.0, delta, j, BoundaryCondition::Neumann).unwrap()
    }

    #[test]
    fn grid_helpers() {
        let g = linear_grid(0.0, 1.0, 0.25).unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(linear_grid(0.0, 0.9, 0.25).unwrap().len(), 4);
        assert!(linear_grid(1.0, 0.0, 0.1).is_err());
        assert!(validate_grid(&[0.0, 0.0]).is_err());
        assert!(validate_grid(&[]).is_err());
    }

    #[test]
    fn matcher_prefers_nearest() {
        let c = |r: f64, i: f64| Complex64::new(r, i);
        let heads = [c(0.0, 0.0), c(1.0, 0.0)];
        let cands = [c(1.1, 0.0), c(-0.1, 0.0), c(5.0, 0.0)];
        assert_eq!(match_nearest(&heads, &cands), vec![1, 0]);
    }

    #[test]
    fn hermitian_sweep_has_no_events() {
        let grid = linear_grid(0.0, 5.0, 0.1).unwrap();
        let s = sweep_levels(&base(0.0, 1), SweepParam::Q, &grid, 4, &fast()).unwrap();
        assert_eq!(s.curves.len(), 4);
        for c in &s.curves {
            assert!(c.values.iter().all(|z| z.im.abs() < 1e-9));
        }
        // classical ordering a_0 < a_1 < a_2 < a_3 everywhere on q > 0
        for i in 0..grid.len() {
            for l in 0..3 {
                assert!(s.curves[l].values[i].re < s.curves[l + 1].values[i].re);
            }
        }
        assert!(detect_coalescence(&s, 1e-7).unwrap().is_empty());
        let iv = real_intervals(&s, 0, 1e-7, &[]).unwrap();
        assert_eq!(iv, vec![(0.0, 5.0)]);
    }

    #[test]
    fn lowest_pair_forms_a_loop() {
        let grid = linear_grid(0.0, 3.0, 0.02).unwrap();
        let s = sweep_levels(&base(2.0, 1), SweepParam::Q, &grid, 2, &fast()).unwrap();
        let events = detect_coalescence(&s, 1e-7).unwrap();
        assert_eq!(events.len(), 1);
        let e = events[0];
        assert!(e.bracketed);
        assert_eq!(e.direction, Direction::RealToComplex);
        assert_eq!((e.branch_a, e.branch_b), (0, 1));
        for label in 0..2 {
            let iv = real_intervals(&s, label, 1e-7, &events).unwrap();
            assert_eq!(iv.len(), 1);
            assert_eq!(iv[0].0, 0.0);
            assert_eq!(iv[0].1, e.param_value);
            assert!(iv[0].1 < 3.0);
        }
        // just past the event the two branches are conjugate
        let past = e.cell + 1;
        let za = s.curves[0].values[past];
        let zb = s.curves[1].values[past];
        assert!((za.im + zb.im).abs() < 1e-7 * za.re.abs().max(1.0));
        assert!(za.im.abs() > 1e-7);
    }

    #[test]
    fn reflection_in_delta_preserves_sweeps() {
        let grid = linear_grid(-2.0, 2.0, 0.25).unwrap();
        let plus = sweep_levels(&base(0.8, 2), SweepParam::Q, &grid, 4, &fast()).unwrap();
        let minus = sweep_levels(&base(-0.8, 2), SweepParam::Q, &grid, 4, &fast()).unwrap();
        for i in 0..grid.len() {
            let mut a: Vec<Complex64> = plus.curves.iter().map(|c| c.values[i]).collect();
            let mut b: Vec<Complex64> = minus.curves.iter().map(|c| c.values[i]).collect();
            crate::eig::sort_levels(&mut a);
            crate::eig::sort_levels(&mut b);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-9, "{x} vs {y} at q = {}", grid[i]);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let g = [0.0, 1.0];
        assert!(sweep_levels(&base(0.1, 1), SweepParam::Q, &g, 1, &fast()).is_err());
        assert!(sweep_levels(&base(0.1, 1), SweepParam::Q, &[1.0, 0.0], 2, &fast()).is_err());
    }
}
