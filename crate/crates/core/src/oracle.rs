//! Reference methods that share nothing with the Galerkin path: a
//! second-order finite-difference discretization and a complex shooting
//! method. Both are used to validate Galerkin spectra; the shooting refiner
//! also polishes individual eigenvalues.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eig::{symmetrize_conjugates, Spectrum, DEFAULT_TOL_IM};
use crate::error::{Error, Result};
use crate::linalg::symmetric_tridiagonal_eigenvalues;
use crate::model::{potential_value, BoundaryCondition, ModelParams};

/// Smallest accepted finite-difference grid.
pub const MIN_GRID_POINTS: usize = 51;

/// Grids used for the extrapolated finite-difference reference.
pub const RICHARDSON_GRIDS: [usize; 3] = [201, 401, 801];

/// Complex symmetric tridiagonal form of the finite-difference operator.
///
/// Dirichlet ends drop the boundary nodes. Neumann ends keep them and close
/// with a mirrored ghost point (`u_{-1} = u_1`); the resulting rows are not
/// symmetric, but a diagonal similarity turns their `-2/h^2, -1/h^2`
/// couplings into `-sqrt(2)/h^2` on both sides.
fn fd_tridiagonal(params: &ModelParams, m: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let h = PI / (m - 1) as f64;
    let inv_h2 = 1.0 / (h * h);
    let node = |i: usize| potential_value(params, i as f64 * h);
    match params.bc {
        BoundaryCondition::Dirichlet => {
            let diag = (1..m - 1).map(|i| node(i) + 2.0 * inv_h2).collect();
            let off = vec![Complex64::new(-inv_h2, 0.0); m - 3];
            (diag, off)
        }
        BoundaryCondition::Neumann => {
            let diag = (0..m).map(|i| node(i) + 2.0 * inv_h2).collect();
            let mut off = vec![Complex64::new(-inv_h2, 0.0); m - 1];
            let end = Complex64::new(-(2.0_f64).sqrt() * inv_h2, 0.0);
            off[0] = end;
            off[m - 2] = end;
            (diag, off)
        }
    }
}

fn check_grid(m: usize) -> Result<()> {
    if m < MIN_GRID_POINTS || m % 2 == 0 {
        return Err(Error::InvalidGrid(format!(
            "finite-difference grid needs an odd number of points >= {MIN_GRID_POINTS}, got {m}"
        )));
    }
    Ok(())
}

/// Full finite-difference spectrum on an `m`-point uniform grid over `[0, pi]`.
pub fn fd_spectrum(params: &ModelParams, m: usize) -> Result<Spectrum> {
    params.validate()?;
    check_grid(m)?;
    let (diag, off) = fd_tridiagonal(params, m);
    let ev = symmetric_tridiagonal_eigenvalues(&diag, &off)?;
    Spectrum::from_eigenvalues(*params, ev, DEFAULT_TOL_IM)
}

/// The `k` lowest finite-difference eigenvalues in level order.
pub fn fd_levels(params: &ModelParams, m: usize, k: usize) -> Result<Vec<Complex64>> {
    params.validate()?;
    check_grid(m)?;
    let (diag, off) = fd_tridiagonal(params, m);
    let mut ev = symmetric_tridiagonal_eigenvalues(&diag, &off)?;
    symmetrize_conjugates(&mut ev, DEFAULT_TOL_IM)?;
    if k > ev.len() {
        return Err(Error::InvalidParams(format!(
            "requested {k} levels from a grid with {} unknowns",
            ev.len()
        )));
    }
    ev.truncate(k);
    Ok(ev)
}

/// Richardson extrapolation of the `k` lowest levels over grids whose
/// spacing halves at each step (`m - 1` doubling), assuming an error
/// expansion in even powers of `h`.
pub fn fd_extrapolated(params: &ModelParams, grids: &[usize], k: usize) -> Result<Vec<Complex64>> {
    if grids.is_empty() {
        return Err(Error::InvalidGrid("no grids given".into()));
    }
    for w in grids.windows(2) {
        if w[1] - 1 != 2 * (w[0] - 1) {
            return Err(Error::InvalidGrid(format!(
                "grid spacing must halve between {} and {} points",
                w[0], w[1]
            )));
        }
    }
    let rows: Vec<Vec<Complex64>> = grids
        .iter()
        .map(|&m| fd_levels(params, m, k))
        .collect::<Result<_>>()?;
    Ok((0..k)
        .map(|level| {
            let column: Vec<Complex64> = rows.iter().map(|r| r[level]).collect();
            richardson(&column)
        })
        .collect())
}

/// Last diagonal entry of the Richardson table for a sequence with spacing
/// ratio 2 and even-power error terms.
pub fn richardson(values: &[Complex64]) -> Complex64 {
    let mut table = values.to_vec();
    let mut factor = 1.0;
    for level in 1..values.len() {
        factor *= 4.0;
        for i in (level..values.len()).rev() {
            table[i] = table[i] + (table[i] - table[i - 1]) / (factor - 1.0);
        }
    }
    *table.last().expect("non-empty")
}

/// Right-boundary mismatch of a shooting trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootResult {
    pub a: Complex64,
    /// `u'(pi)` for Neumann (from `u(0) = 1, u'(0) = 0`), `u(pi)` for
    /// Dirichlet (from `u(0) = 0, u'(0) = 1`).
    pub residual: Complex64,
    pub params: ModelParams,
}

type State = [Complex64; 2];

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Per-step error tolerance of the shooting integrator.
const LOCAL_TOL: f64 = 1e-12;

/// Adaptive Dormand-Prince integration of `u'' = (V(x) - a) u` from 0 to pi.
fn integrate(params: &ModelParams, a: Complex64, y0: State) -> Result<State> {
    let rhs = |x: f64, y: &State| -> State { [y[1], (potential_value(params, x) - a) * y[0]] };
    let mut x = 0.0;
    let mut y = y0;
    let scale = (a.norm() + 2.0 * params.q.abs() * (1.0 + params.delta.abs())).sqrt().max(1.0);
    let mut h = 0.01 / scale;
    let h_min = 1e-14 * PI;
    let mut k = [[Complex64::new(0.0, 0.0); 2]; 7];
    k[0] = rhs(x, &y);
    while x < PI {
        if x + h > PI {
            h = PI - x;
        }
        for s in 1..7 {
            let mut ys = y;
            for (i, ki) in k.iter().enumerate().take(s) {
                let w = A[s][i];
                if w != 0.0 {
                    ys[0] += ki[0] * (h * w);
                    ys[1] += ki[1] * (h * w);
                }
            }
            k[s] = rhs(x + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err = [Complex64::new(0.0, 0.0); 2];
        for s in 0..7 {
            for c in 0..2 {
                y5[c] += k[s][c] * (h * B5[s]);
                err[c] += k[s][c] * (h * (B5[s] - B4[s]));
            }
        }
        let err_norm = (0..2)
            .map(|c| err[c].norm() / (LOCAL_TOL * (1.0 + y[c].norm().max(y5[c].norm()))))
            .fold(0.0, f64::max);
        if err_norm <= 1.0 {
            x = if (PI - x - h).abs() < 1e-15 { PI } else { x + h };
            y = y5;
            // first-same-as-last
            k[0] = k[6];
        }
        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < h_min && x < PI {
            return Err(Error::StepUnderflow { x });
        }
    }
    Ok(y)
}

pub fn shoot(params: &ModelParams, a: Complex64) -> Result<ShootResult> {
    params.validate()?;
    if !(a.re.is_finite() && a.im.is_finite()) {
        return Err(Error::InvalidParams(format!("trial eigenvalue {a} is not finite")));
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let residual = match params.bc {
        BoundaryCondition::Neumann => integrate(params, a, [one, zero])?[1],
        BoundaryCondition::Dirichlet => integrate(params, a, [zero, one])?[0],
    };
    Ok(ShootResult {
        a,
        residual,
        params: *params,
    })
}

pub fn shoot_residual(params: &ModelParams, a: Complex64) -> Result<Complex64> {
    shoot(params, a).map(|r| r.residual)
}

/// Maximum distance a refined root may travel from its seed.
pub const TRUST_RADIUS: f64 = 1.0;

/// Complex secant iteration on the shooting residual, started at a Galerkin
/// (or other) estimate of one eigenvalue.
pub fn refine_eigenvalue(params: &ModelParams, a_seed: Complex64) -> Result<Complex64> {
    let fail = |reason: String| Error::RefinementFailed {
        seed: a_seed,
        reason,
    };
    let mut a0 = a_seed;
    let mut f0 = shoot_residual(params, a0)?;
    if f0.norm() < 1e-10 {
        return Ok(a0);
    }
    let mut a1 = a_seed + Complex64::new(1e-6 * a_seed.norm().max(1.0), 0.0);
    let mut f1 = shoot_residual(params, a1)?;
    for _ in 0..100 {
        if f1.norm() < 1e-10 {
            return Ok(a1);
        }
        let df = f1 - f0;
        if df.norm() == 0.0 {
            return Err(fail("secant slope vanished".into()));
        }
        let a2 = a1 - f1 * (a1 - a0) / df;
        if !(a2.re.is_finite() && a2.im.is_finite()) {
            return Err(fail("iterate is not finite".into()));
        }
        if (a2 - a_seed).norm() > TRUST_RADIUS {
            return Err(fail(format!("iterate {a2} left the trust radius")));
        }
        let step = (a2 - a1).norm();
        a0 = a1;
        f0 = f1;
        a1 = a2;
        f1 = shoot_residual(params, a1)?;
        if step <= 4.0 * f64::EPSILON * a1.norm().max(1.0) {
            return Ok(a1);
        }
    }
    Err(fail("no convergence after 100 secant steps".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::{converged_spectrum, SolverSettings};
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn params(q: f64, delta: f64, j: u32, bc: BoundaryCondition) -> ModelParams {
        ModelParams::new(q, delta, j, bc).unwrap()
    }

    #[test]
    fn free_fd_levels() {
        let p = params(0.0, 0.7, 1, BoundaryCondition::Neumann);
        let ev = fd_levels(&p, 401, 3).unwrap();
        let h = PI / 400.0;
        for (z, n) in ev.iter().zip([0.0, 1.0, 4.0]) {
            // central differences underestimate n^2 by about n^4 h^2 / 12
            assert!((z.re - n).abs() <= n.powi(4) * h * h / 12.0 * 1.01 + 1e-10);
            assert!(z.im.abs() < 1e-10);
        }
        let d = fd_levels(&params(0.0, 0.0, 1, BoundaryCondition::Dirichlet), 401, 2).unwrap();
        assert!((d[0].re - 1.0).abs() < 1e-4);
        assert!((d[1].re - 4.0).abs() < 1e-4);
    }

    #[test]
    fn grid_validation() {
        let p = params(1.0, 0.0, 1, BoundaryCondition::Neumann);
        assert!(fd_levels(&p, 49, 1).is_err());
        assert!(fd_levels(&p, 200, 1).is_err());
        assert!(fd_extrapolated(&p, &[201, 301], 1).is_err());
    }

    #[test]
    fn richardson_removes_even_powers() {
        // f(h) = 3 + 2h^2 - 5h^4 sampled at h = 1, 1/2, 1/4
        let f = |h: f64| c(3.0 + 2.0 * h * h - 5.0 * h.powi(4));
        let r = richardson(&[f(1.0), f(0.5), f(0.25)]);
        assert_abs_diff_eq!(r.re, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn shooting_free_cases() {
        let n = params(0.0, 0.4, 2, BoundaryCondition::Neumann);
        assert!(shoot_residual(&n, c(4.0)).unwrap().norm() < 1e-10);
        let r = shoot_residual(&n, c(2.25)).unwrap();
        assert_abs_diff_eq!(r.re, 1.5, epsilon = 1e-10);
        assert_abs_diff_eq!(r.im, 0.0, epsilon = 1e-10);
        let d = params(0.0, 0.4, 2, BoundaryCondition::Dirichlet);
        assert!(shoot_residual(&d, c(1.0)).unwrap().norm() < 1e-10);
    }

    #[test]
    fn residual_is_analytic_in_a() {
        let p = params(1.3, 0.6, 2, BoundaryCondition::Neumann);
        let a = Complex64::new(2.1, 0.3);
        let h = 1e-6;
        let ih = Complex64::new(0.0, h);
        let f = |z| shoot_residual(&p, z).unwrap();
        let d_re = (f(a + h) - f(a - h)) / (2.0 * h);
        let d_im = (f(a + ih) - f(a - ih)) / (ih * 2.0);
        assert!((d_re - d_im).norm() / d_re.norm() < 1e-4);
    }

    #[test]
    fn refine_free_level() {
        let p = params(0.0, 1.5, 1, BoundaryCondition::Neumann);
        let a = refine_eigenvalue(&p, c(3.9)).unwrap();
        assert_abs_diff_eq!(a.re, 4.0, epsilon = 1e-10);
        assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn refine_rejects_bad_seed() {
        let p = params(0.0, 0.0, 1, BoundaryCondition::Neumann);
        // halfway between 4 and 9 the secant wanders further than the trust radius
        match refine_eigenvalue(&p, c(6.4)) {
            Err(Error::RefinementFailed { .. }) => {}
            other => panic!("expected refinement failure, got {other:?}"),
        }
    }

    #[test]
    fn classical_lowest_level_three_ways() {
        let p = params(1.0, 0.0, 1, BoundaryCondition::Neumann);
        let fd = fd_extrapolated(&p, &RICHARDSON_GRIDS, 1).unwrap()[0];
        let galerkin = converged_spectrum(&p, 1, &SolverSettings::default())
            .unwrap()
            .levels(1)[0];
        let shot = refine_eigenvalue(&p, galerkin).unwrap();
        assert!((fd - galerkin).norm() < 1e-8, "{fd} vs {galerkin}");
        assert!((shot - galerkin).norm() < 1e-8, "{shot} vs {galerkin}");
        assert_abs_diff_eq!(fd.re, -0.455_139, epsilon = 5e-7);
    }

    #[test]
    fn complex_capable_refinement() {
        let p = params(1.0, 0.5, 1, BoundaryCondition::Neumann);
        let galerkin = converged_spectrum(&p, 1, &SolverSettings::default())
            .unwrap()
            .levels(1)[0];
        let shot = refine_eigenvalue(&p, galerkin + Complex64::new(1e-3, 1e-3)).unwrap();
        assert!((shot - galerkin).norm() < 1e-8, "{shot} vs {galerkin}");
    }

    #[test]
    fn dirichlet_three_way_agreement() {
        let p = params(1.0, 0.5, 1, BoundaryCondition::Dirichlet);
        let fd = fd_extrapolated(&p, &RICHARDSON_GRIDS, 6).unwrap();
        let s = converged_spectrum(&p, 6, &SolverSettings::default()).unwrap();
        for (f, g) in fd.iter().zip(s.levels(6)) {
            assert!((f - g).norm() < 1e-6, "{f} vs {g}");
        }
    }
}
