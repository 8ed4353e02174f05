use num_complex::Complex64;
use ptmathieu::eig::{converged_spectrum, SolverSettings};
use ptmathieu::oracle::{fd_extrapolated, refine_eigenvalue, RICHARDSON_GRIDS};
use ptmathieu::{BoundaryCondition, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LEVELS: usize = 4;

fn min_gap(values: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    gap
}

#[test]
fn galerkin_fd_and_shooting_agree_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut checked = 0;
    while checked < 30 {
        let bc = if rng.gen_bool(0.5) { BoundaryCondition::Neumann } else { BoundaryCondition::Dirichlet };
        let p = ModelParams::new(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(1..=3),
            bc,
        )
        .unwrap();
        let galerkin = converged_spectrum(&p, LEVELS, &SolverSettings::default()).unwrap().levels(LEVELS);
        // the routes lose accuracy close to exceptional points
        if min_gap(&galerkin) < 0.05 {
            continue;
        }
        let fd = fd_extrapolated(&p, &RICHARDSON_GRIDS, LEVELS).unwrap();
        for (n, (&g, &f)) in galerkin.iter().zip(&fd).enumerate() {
            assert!((g - f).norm() < 1e-6, "{p:?} level {n}: galerkin {g} fd {f}");
            let s = refine_eigenvalue(&p, g).unwrap();
            assert!((g - s).norm() < 1e-6, "{p:?} level {n}: galerkin {g} shooting {s}");
        }
        checked += 1;
    }
}

#[test]
fn dirichlet_levels_exceed_neumann_counterparts_when_hermitian() {
    // classical ordering a_0 < b_1 < a_1 < b_2 < a_2 for q > 0
    for q in [0.5, 2.0, 6.0] {
        let s = SolverSettings::default();
        let a = converged_spectrum(&ModelParams::new(q, 0.0, 1, BoundaryCondition::Neumann).unwrap(), 3, &s)
            .unwrap()
            .levels(3);
        let b = converged_spectrum(&ModelParams::new(q, 0.0, 1, BoundaryCondition::Dirichlet).unwrap(), 2, &s)
            .unwrap()
            .levels(2);
        assert!(a[0].re < b[0].re && b[0].re < a[1].re && a[1].re < b[1].re && b[1].re < a[2].re);
    }
}
