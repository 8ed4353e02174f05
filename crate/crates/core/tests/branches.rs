use num_complex::Complex64;
use ptmathieu::eig::{converged_spectrum, SolverSettings, DEFAULT_TOL_IM};
use ptmathieu::oracle::refine_eigenvalue;
use ptmathieu::sweep::{
    detect_coalescence, linear_grid, real_intervals, sweep_levels, CoalescenceEvent, Direction,
    LevelSweep, SweepParam,
};
use ptmathieu::{BoundaryCondition, ModelParams};

fn q_sweep(delta: f64, j: u32, lo: f64, hi: f64, step: f64, k: usize) -> (LevelSweep, Vec<CoalescenceEvent>) {
    let base = ModelParams::new(0.0, delta, j, BoundaryCondition::Neumann).unwrap();
    let grid = linear_grid(lo, hi, step).unwrap();
    let sweep = sweep_levels(&base, SweepParam::Q, &grid, k, &SolverSettings::default()).unwrap();
    let events = detect_coalescence(&sweep, DEFAULT_TOL_IM).unwrap();
    (sweep, events)
}

fn pair(e: &CoalescenceEvent) -> (usize, usize) {
    (e.branch_a.min(e.branch_b), e.branch_a.max(e.branch_b))
}

/// Shooting-refined levels near `a_star` at `q`, seeded from the Galerkin
/// spectrum.
fn refined_pair(base: &ModelParams, q: f64, a_star: f64) -> [Complex64; 2] {
    let p = base.with_q(q);
    let mut levels = converged_spectrum(&p, 8, &SolverSettings::default()).unwrap().levels(8);
    levels.sort_by(|x, y| (x.re - a_star).abs().total_cmp(&(y.re - a_star).abs()));
    [
        refine_eigenvalue(&p, levels[0]).unwrap(),
        refine_eigenvalue(&p, levels[1]).unwrap(),
    ]
}

#[test]
fn negative_q_breaks_for_small_deformation() {
    let (_, events) = q_sweep(0.1, 1, -10.0, 0.0, 0.05, 4);
    assert!(events
        .iter()
        .any(|e| e.param_value < 0.0 && e.direction == Direction::RealToComplex && e.bracketed));
}

#[test]
fn levels_are_lost_then_recovered() {
    let (sweep, events) = q_sweep(0.44, 2, 0.0, 10.0, 0.02, 6);
    let found = events.iter().enumerate().find_map(|(i, lost)| {
        (lost.direction == Direction::RealToComplex).then(|| {
            events[i + 1..]
                .iter()
                .find(|back| back.direction == Direction::ComplexToReal && pair(back) == pair(lost))
                .map(|back| (*lost, *back))
        })?
    });
    let (lost, back) = found.expect("a loss followed by a recovery on one branch pair");
    assert!(lost.param_value < back.param_value);

    for e in [lost, back] {
        assert!(e.bracketed);
        // interval endpoints sit on the events
        for label in [e.branch_a, e.branch_b] {
            let iv = real_intervals(&sweep, label, DEFAULT_TOL_IM, &events).unwrap();
            assert!(iv
                .iter()
                .any(|&(lo, hi)| (lo - e.param_value).abs() < 1e-6 || (hi - e.param_value).abs() < 1e-6));
        }
        // the real/complex character on either side survives shooting
        // refinement one bracket tolerance away from the event
        let (real_q, complex_q) = match e.direction {
            Direction::RealToComplex => (e.param_value - 1e-4, e.param_value + 1e-4),
            Direction::ComplexToReal => (e.param_value + 1e-4, e.param_value - 1e-4),
        };
        let r = refined_pair(&sweep.base, real_q, e.a_star);
        assert!(r.iter().all(|z| z.im.abs() < 1e-6), "{r:?}");
        assert!((r[0] - r[1]).norm() > 1e-4);
        let c = refined_pair(&sweep.base, complex_q, e.a_star);
        assert!(c[0].im.abs() > 1e-4, "{c:?}");
        assert!((c[0] - c[1].conj()).norm() < 1e-6);
    }
}

#[test]
fn isolated_loop_on_the_negative_side() {
    let (sweep, events) = q_sweep(0.43, 2, -10.0, 0.0, 0.02, 6);
    let isolated: Vec<(usize, (f64, f64))> = sweep
        .curves
        .iter()
        .flat_map(|c| {
            real_intervals(&sweep, c.label, DEFAULT_TOL_IM, &events)
                .unwrap()
                .into_iter()
                .map(move |iv| (c.label, iv))
        })
        .filter(|&(_, (lo, hi))| lo > -10.0 && hi < -0.5)
        .collect();
    assert!(!isolated.is_empty(), "no isolated interval among {:?}", events);
    for (_, (lo, hi)) in isolated {
        assert!(hi > lo);
    }
}

#[test]
fn conjugate_partners_past_every_loss() {
    let (sweep, events) = q_sweep(2.0, 1, 0.0, 3.0, 0.02, 4);
    for e in events.iter().filter(|e| e.direction == Direction::RealToComplex && e.param_value > 0.0) {
        let after = e.cell + 1;
        let za = sweep.curves[e.branch_a].values[after];
        let zb = sweep.curves[e.branch_b].values[after];
        assert!((za.im + zb.im).abs() <= DEFAULT_TOL_IM);
        assert!(za.im.abs() > DEFAULT_TOL_IM);
    }
}
