//! Dense complex eigenvalue routines.
//!
//! [`eigenvalues`] handles general (non-Hermitian) square matrices through
//! balancing, Householder reduction to upper Hessenberg form and a
//! single-shift complex QR iteration. [`symmetric_tridiagonal_eigenvalues`]
//! is an implicit QL iteration for complex *symmetric* (not Hermitian)
//! tridiagonal matrices, which costs O(n^2) and is what the finite-difference
//! oracle relies on for large grids.

use num_complex::Complex64;

use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;

/// Square, row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from nested rows; panics if the rows are not square.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "rows must form a square matrix");
        Self::from_fn(n, |i, j| rows[i][j])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn conj(&self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

#[inline]
fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// All eigenvalues of a general complex matrix, with multiplicity and in no
/// particular order.
pub fn eigenvalues(matrix: &CMatrix) -> Result<Vec<Complex64>> {
    if !matrix.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut h = matrix.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hessenberg_qr(&mut h)
}

/// Parlett-Reinsch balancing by powers of two. Only a diagonal similarity is
/// applied, so eigenvalues are unchanged up to rounding.
fn balance(a: &mut CMatrix) {
    const RADIX: f64 = 2.0;
    let n = a.n;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(a[(j, i)]);
                    r += abs1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / RADIX;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(a: &mut CMatrix) {
    let n = a.n;
    if n < 3 {
        return;
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n - 2 {
        let alpha_sq: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum();
        if alpha_sq == 0.0 {
            continue;
        }
        let alpha = alpha_sq.sqrt();
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        // v = x + phase * |x| e1, reflector P = I - 2 v v^H / (v^H v)
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] += phase * alpha;
        let vnorm_sq: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm_sq;

        // left: A <- P A on rows k+1..n
        w[k..n].fill(Complex64::new(0.0, 0.0));
        for i in k + 1..n {
            let vc = v[i].conj();
            let row = &a.data[i * n..(i + 1) * n];
            for j in k..n {
                w[j] += vc * row[j];
            }
        }
        for i in k + 1..n {
            let vi = v[i] * beta;
            let row = &mut a.data[i * n..(i + 1) * n];
            for j in k..n {
                row[j] -= vi * w[j];
            }
        }
        // right: A <- A P on columns k+1..n
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for j in k + 1..n {
                s += a[(i, j)] * v[j];
            }
            s *= beta;
            for j in k + 1..n {
                let vj = v[j];
                a[(i, j)] -= s * vj.conj();
            }
        }
        for i in k + 2..n {
            a[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Givens rotation `G = [[c, s], [-conj(s), c]]` with `G [x; y] = [r; 0]`.
#[inline]
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    let phase = x / ax;
    (ax / r, phase * y.conj() / r)
}

/// Eigenvalues of an upper Hessenberg matrix by single-shift complex QR with
/// Wilkinson shifts. Rotations are restricted to the active window, since
/// only eigenvalues are wanted.
fn hessenberg_qr(h: &mut CMatrix) -> Result<Vec<Complex64>> {
    let n = h.n;
    let mut eig = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(eig);
    }
    let itmax = 30 * n.max(10);
    let mut total_iter = 0usize;
    let mut hi = n - 1;
    let mut its = 0usize;

    loop {
        // find lo: the start of the unreduced block ending at hi
        let mut lo = hi;
        while lo > 0 {
            let sub = abs1(h[(lo, lo - 1)]);
            let mut diag = abs1(h[(lo, lo)]) + abs1(h[(lo - 1, lo - 1)]);
            if diag == 0.0 {
                diag = (lo.saturating_sub(2)..=(lo + 1).min(hi))
                    .map(|i| abs1(h[(i, lo - 1)]))
                    .sum::<f64>();
            }
            if sub <= EPS * diag || sub < f64::MIN_POSITIVE {
                h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }

        if lo == hi {
            eig[hi] = h[(hi, hi)];
            its = 0;
            if hi == 0 {
                break;
            }
            hi -= 1;
            continue;
        }

        if lo + 1 == hi {
            let (l1, l2) = eig2(h[(lo, lo)], h[(lo, hi)], h[(hi, lo)], h[(hi, hi)]);
            eig[lo] = l1;
            eig[hi] = l2;
            its = 0;
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            continue;
        }

        total_iter += 1;
        its += 1;
        if total_iter > itmax {
            return Err(Error::NoConvergence {
                iterations: total_iter,
                remaining: hi + 1,
            });
        }

        let shift = if its % 10 == 0 {
            // exceptional shift
            h[(hi, hi)] + Complex64::new(0.75 * abs1(h[(hi, hi - 1)]), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            if k > lo {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let col_start = if k > lo { k - 1 } else { lo };
            for j in col_start..=hi {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = a * c + s * b;
                h[(k + 1, j)] = -s.conj() * a + b * c;
            }
            if k > lo {
                h[(k + 1, k - 1)] = Complex64::new(0.0, 0.0);
            }
            let row_end = (k + 2).min(hi);
            for i in lo..=row_end {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * c + b * s.conj();
                h[(i, k + 1)] = -a * s + b * c;
            }
        }
    }
    Ok(eig)
}

fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let half_tr = (a + d) * 0.5;
    let diff = (a - d) * 0.5;
    let disc = (diff * diff + b * c).sqrt();
    (half_tr + disc, half_tr - disc)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let (l1, l2) = eig2(a, b, c, d);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// `sqrt(a^2 + b^2)` for complex arguments, scaled against overflow.
fn csqrt_sum_sq(a: Complex64, b: Complex64) -> Complex64 {
    let scale = abs1(a).max(abs1(b));
    if scale == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let (a, b) = (a / scale, b / scale);
    (a * a + b * b).sqrt() * scale
}

/// Eigenvalues of the complex symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off[i]` couples rows `i` and `i + 1`).
///
/// Implicit QL with complex orthogonal (not unitary) rotations. Breakdown,
/// where a rotation would need `f^2 + g^2 = 0` with nonzero arguments, is
/// reported as non-convergence.
pub fn symmetric_tridiagonal_eigenvalues(
    diag: &[Complex64],
    off: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    assert_eq!(off.len() + 1, n, "off-diagonal must have n - 1 entries");
    if diag.iter().chain(off).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut d = diag.to_vec();
    let mut e: Vec<Complex64> = off.to_vec();
    e.push(Complex64::new(0.0, 0.0));
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let max_iter = 60;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = abs1(d[m]) + abs1(d[m + 1]);
                if abs1(e[m]) <= EPS * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > max_iter {
                return Err(Error::NoConvergence {
                    iterations: iter,
                    remaining: n - l,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (e[l] * 2.0);
            let mut r = csqrt_sum_sq(g, one);
            let denom = if (g + r).norm() >= (g - r).norm() { g + r } else { g - r };
            g = d[m] - d[l] + e[l] / denom;
            let mut s = one;
            let mut c = one;
            let mut p = zero;
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = csqrt_sum_sq(f, g);
                e[i + 1] = r;
                if abs1(r) == 0.0 {
                    if abs1(f) + abs1(g) != 0.0 {
                        return Err(Error::NoConvergence {
                            iterations: iter,
                            remaining: n - l,
                        });
                    }
                    d[i + 1] -= p;
                    e[m] = zero;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + c * b * 2.0;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = zero;
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn diagonal() {
        let m = CMatrix::from_diagonal(&[c(0., 0.), c(1., 0.), c(4., 0.), c(9., 0.)]);
        let ev = sorted(eigenvalues(&m).unwrap());
        for (got, want) in ev.iter().zip([0.0, 1.0, 4.0, 9.0]) {
            assert_abs_diff_eq!(got.re, want, epsilon = 1e-14);
            assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn rotation_generator() {
        let m = CMatrix::from_rows(&[vec![c(0., 0.), c(1., 0.)], vec![c(-1., 0.), c(0., 0.)]]);
        let ev = sorted(eigenvalues(&m).unwrap());
        assert_abs_diff_eq!(ev[0].im, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1].im, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[0].re, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn triangular() {
        let m = CMatrix::from_rows(&[vec![c(2., 0.), c(1., 0.)], vec![c(0., 0.), c(3., 0.)]]);
        let ev = sorted(eigenvalues(&m).unwrap());
        assert_abs_diff_eq!(ev[0].re, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1].re, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn companion_matrix_roots() {
        // roots 1, 2, 3, 4+i, 4-i
        let roots = [c(1., 0.), c(2., 0.), c(3., 0.), c(4., 1.), c(4., -1.)];
        let mut poly = vec![c(1., 0.)];
        for r in roots {
            let mut next = vec![c(0., 0.); poly.len() + 1];
            for (k, &p) in poly.iter().enumerate() {
                next[k] += p;
                next[k + 1] -= p * r;
            }
            poly = next;
        }
        let n = roots.len();
        let m = CMatrix::from_fn(n, |i, j| {
            if i == 0 {
                -poly[j + 1]
            } else if i == j + 1 {
                c(1., 0.)
            } else {
                c(0., 0.)
            }
        });
        let ev = sorted(eigenvalues(&m).unwrap());
        for (got, want) in ev.iter().zip(sorted(roots.to_vec())) {
            assert!((got - want).norm() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn rejects_non_finite() {
        let m = CMatrix::from_diagonal(&[c(f64::NAN, 0.), c(1., 0.)]);
        assert!(matches!(eigenvalues(&m), Err(Error::NonFinite)));
    }

    #[test]
    fn tridiagonal_ql_matches_dense_qr() {
        let n = 40;
        let diag: Vec<Complex64> = (0..n)
            .map(|i| c((i as f64).sin() * 3.0 + i as f64, (0.7 * i as f64).cos()))
            .collect();
        let off: Vec<Complex64> = (0..n - 1).map(|i| c(1.0 + 0.1 * i as f64, 0.0)).collect();
        let dense = CMatrix::from_fn(n, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                c(0., 0.)
            }
        });
        let a = sorted(symmetric_tridiagonal_eigenvalues(&diag, &off).unwrap());
        let b = sorted(eigenvalues(&dense).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-9, "{x} vs {y}");
        }
    }
}
