//! Spectra of the truncated operator: raw eigenvalues, realness
//! classification and truncation escalation.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{GalerkinParts, ModelParams, OperatorMatrix, DEFAULT_TRUNCATION};

/// Default relative realness tolerance.
pub const DEFAULT_TOL_IM: f64 = 1e-7;

/// Default number of monitored levels.
pub const DEFAULT_LEVELS: usize = 6;

/// Largest truncation tried by [`converged_spectrum`].
pub const MAX_TRUNCATION: usize = 512;

/// Ascending by real part, ties by imaginary part.
pub fn level_order(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn sort_levels(values: &mut [Complex64]) {
    values.sort_by(level_order);
}

/// `|Im z| <= tol_im * max(1, |Re z|)`.
#[inline]
pub fn is_real(z: Complex64, tol_im: f64) -> bool {
    z.im.abs() <= tol_im * z.re.abs().max(1.0)
}

/// All eigenvalues of the operator matrix, unordered.
pub fn eigenvalues(matrix: &OperatorMatrix) -> Result<Vec<Complex64>> {
    linalg::eigenvalues(&matrix.entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugatePair {
    /// Member with positive imaginary part.
    pub upper: Complex64,
    /// Member with negative imaginary part.
    pub lower: Complex64,
}

impl ConjugatePair {
    /// Distance between `upper` and the conjugate of `lower`.
    pub fn mismatch(&self) -> f64 {
        (self.upper - self.lower.conj()).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classified {
    pub real_levels: Vec<f64>,
    pub complex_pairs: Vec<ConjugatePair>,
}

/// Indices of the real eigenvalues and of the conjugate pairs
/// `(upper, lower)`; pairing is greedy on the distance `|z - conj(w)|`.
fn classify_indices(raw: &[Complex64], tol_im: f64) -> Result<(Vec<usize>, Vec<(usize, usize)>)> {
    if !(tol_im > 0.0) {
        return Err(Error::InvalidParams(format!("tol_im must be positive, got {tol_im}")));
    }
    let mut reals = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for (i, &z) in raw.iter().enumerate() {
        if is_real(z, tol_im) {
            reals.push(i);
        } else if z.im > 0.0 {
            upper.push(i);
        } else {
            lower.push(i);
        }
    }
    let mut candidates = Vec::with_capacity(upper.len() * lower.len());
    for &a in &upper {
        for &b in &lower {
            candidates.push(((raw[a] - raw[b].conj()).norm(), a, b));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used = vec![false; raw.len()];
    let mut pairs = Vec::new();
    for (_, a, b) in candidates {
        if used[a] || used[b] {
            continue;
        }
        used[a] = true;
        used[b] = true;
        pairs.push((a, b));
    }
    let leftover: Vec<Complex64> = upper
        .iter()
        .chain(&lower)
        .filter(|&&i| !used[i])
        .map(|&i| raw[i])
        .collect();
    if !leftover.is_empty() {
        return Err(Error::UnpairedComplex(leftover));
    }
    Ok((reals, pairs))
}

/// Splits eigenvalues into real levels (imaginary part dropped) and
/// conjugate pairs.
pub fn classify_real(raw: &[Complex64], tol_im: f64) -> Result<Classified> {
    let (reals, pairs) = classify_indices(raw, tol_im)?;
    let mut real_levels: Vec<f64> = reals.iter().map(|&i| raw[i].re).collect();
    real_levels.sort_by(f64::total_cmp);
    let mut complex_pairs: Vec<ConjugatePair> = pairs
        .iter()
        .map(|&(a, b)| ConjugatePair {
            upper: raw[a],
            lower: raw[b],
        })
        .collect();
    complex_pairs.sort_by(|x, y| level_order(&x.upper, &y.upper));
    Ok(Classified {
        real_levels,
        complex_pairs,
    })
}

/// Replaces every conjugate pair by its exactly symmetric average and sorts
/// into level order. The operator's spectrum is closed under conjugation, so
/// this only removes rounding, and it keeps the two members of a pair from
/// swapping places between otherwise identical computations.
pub fn symmetrize_conjugates(values: &mut [Complex64], tol_im: f64) -> Result<()> {
    let (_, pairs) = classify_indices(values, tol_im)?;
    for (a, b) in pairs {
        let re = 0.5 * (values[a].re + values[b].re);
        let im = 0.5 * (values[a].im - values[b].im);
        values[a] = Complex64::new(re, im);
        values[b] = Complex64::new(re, -im);
    }
    sort_levels(values);
    Ok(())
}

/// Eigenvalue multiset at one parameter point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub params: ModelParams,
    pub n_used: usize,
    /// All eigenvalues of the final truncation, in level order.
    pub eigenvalues: Vec<Complex64>,
    pub real_levels: Vec<f64>,
    pub complex_pairs: Vec<ConjugatePair>,
    pub tol_im: f64,
}

impl Spectrum {
    pub fn from_eigenvalues(
        params: ModelParams,
        mut eigenvalues: Vec<Complex64>,
        tol_im: f64,
    ) -> Result<Self> {
        symmetrize_conjugates(&mut eigenvalues, tol_im)?;
        let classified = classify_real(&eigenvalues, tol_im)?;
        Ok(Self {
            params,
            n_used: eigenvalues.len(),
            eigenvalues,
            real_levels: classified.real_levels,
            complex_pairs: classified.complex_pairs,
            tol_im,
        })
    }

    /// The `k` lowest eigenvalues in level order; real ones have their
    /// imaginary part set to zero.
    pub fn levels(&self, k: usize) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .take(k)
            .map(|&z| {
                if is_real(z, self.tol_im) {
                    Complex64::new(z.re, 0.0)
                } else {
                    z
                }
            })
            .collect()
    }

    /// Whether the `k` lowest levels are all real.
    pub fn lowest_are_real(&self, k: usize) -> bool {
        self.eigenvalues.iter().take(k).all(|&z| is_real(z, self.tol_im))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// First truncation tried.
    pub n_start: usize,
    /// Escalation stops with an error beyond this truncation.
    pub n_max: usize,
    /// Absolute movement allowed for each monitored level between truncations.
    pub tol: f64,
    pub tol_im: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            n_start: DEFAULT_TRUNCATION,
            n_max: MAX_TRUNCATION,
            tol: 1e-6,
            tol_im: DEFAULT_TOL_IM,
        }
    }
}

fn solve(params: &ModelParams, n: usize, tol_im: f64) -> Result<Vec<Complex64>> {
    let parts = GalerkinParts::new(params.j, params.bc, n)?;
    let mut ev = linalg::eigenvalues(&parts.matrix(params.q, params.delta))?;
    symmetrize_conjugates(&mut ev, tol_im)?;
    for z in ev.iter_mut().filter(|z| is_real(**z, tol_im)) {
        z.im = 0.0;
    }
    Ok(ev)
}

/// Largest distance from a monitored level of `prev` to the nearest value in
/// `next`, so that reordering of nearly equal levels is not mistaken for
/// movement.
fn level_movement(prev: &[Complex64], next: &[Complex64], k: usize) -> f64 {
    let window = &next[..(k + 2).min(next.len())];
    prev.iter()
        .take(k)
        .map(|a| window.iter().map(|b| (a - b).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Spectrum whose `k` lowest levels are stable to `settings.tol` under
/// doubling of the truncation.
pub fn converged_spectrum(
    params: &ModelParams,
    k: usize,
    settings: &SolverSettings,
) -> Result<Spectrum> {
    params.validate()?;
    if k == 0 {
        return Err(Error::InvalidParams("at least one level is required".into()));
    }
    if !(settings.tol > 0.0) {
        return Err(Error::InvalidParams("convergence tolerance must be positive".into()));
    }
    let mut n = settings.n_start.max(k + 2);
    let mut prev = solve(params, n, settings.tol_im)?;
    let mut earlier = Vec::new();
    loop {
        let next_n = 2 * n;
        if next_n > settings.n_max {
            return Err(Error::TruncationNotConverged {
                n_max: settings.n_max,
                previous: earlier.iter().take(k).copied().collect(),
                last: prev.into_iter().take(k).collect(),
            });
        }
        let next = solve(params, next_n, settings.tol_im)?;
        let moved = level_movement(&prev, &next, k);
        if moved < settings.tol {
            return Spectrum::from_eigenvalues(*params, next, settings.tol_im);
        }
        log::debug!("{params:?}: levels moved {moved:e} from N = {n} to {next_n}");
        earlier = std::mem::replace(&mut prev, next);
        n = next_n;
    }
}

/// Spectrum at a fixed truncation, without convergence checking.
pub fn spectrum_at(matrix: &OperatorMatrix, tol_im: f64) -> Result<Spectrum> {
    Spectrum::from_eigenvalues(matrix.params, eigenvalues(matrix)?, tol_im)
}
