//! Parameter space and operator assembly for
//! `H = -d^2/dx^2 + 2q (cos 2x + i delta sin 2jx)` on `[0, pi]`.
//!
//! The Galerkin bases are the orthonormal cosines (Neumann ends) and sines
//! (Dirichlet ends):
//!
//! ```text
//! Neumann:   e_0 = 1/sqrt(pi),  e_n = sqrt(2/pi) cos(nx),  n >= 1
//! Dirichlet: e_n = sqrt(2/pi) sin(nx),                      n >= 1
//! ```
//!
//! so the kinetic part is exactly `diag(n^2)` and all matrix elements of the
//! potential have closed forms.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Smallest accepted Galerkin truncation.
pub const MIN_TRUNCATION: usize = 8;

/// Default Galerkin truncation.
pub const DEFAULT_TRUNCATION: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    /// `u'(0) = u'(pi) = 0`, the `a_n` family.
    Neumann,
    /// `u(0) = u(pi) = 0`, the `b_n` family.
    Dirichlet,
}

impl BoundaryCondition {
    /// Index of the first basis function.
    pub fn first_index(self) -> usize {
        match self {
            BoundaryCondition::Neumann => 0,
            BoundaryCondition::Dirichlet => 1,
        }
    }

    /// Basis function index of matrix row `row`.
    pub fn basis_index(self, row: usize) -> usize {
        row + self.first_index()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCondition::Neumann => "neumann",
            BoundaryCondition::Dirichlet => "dirichlet",
        }
    }

    /// Sign of the `cos((m+n)x)` term in the product-to-sum expansion of
    /// `phi_m phi_n`.
    fn sum_sign(self) -> f64 {
        match self {
            BoundaryCondition::Neumann => 1.0,
            BoundaryCondition::Dirichlet => -1.0,
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "neumann" | "n" | "a" => Ok(BoundaryCondition::Neumann),
            "dirichlet" | "d" | "b" => Ok(BoundaryCondition::Dirichlet),
            other => Err(Error::InvalidParams(format!(
                "unknown boundary condition '{other}' (expected neumann or dirichlet)"
            ))),
        }
    }
}

/// One point `(q, delta, j, bc)` of parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub q: f64,
    pub delta: f64,
    pub j: u32,
    pub bc: BoundaryCondition,
}

impl ModelParams {
    pub fn new(q: f64, delta: f64, j: u32, bc: BoundaryCondition) -> Result<Self> {
        let p = Self { q, delta, j, bc };
        p.validate()?;
        Ok(p)
    }

    /// Accepts a real-valued frequency index and rejects anything that is
    /// not a positive integer (for example `j = 1/2`).
    pub fn with_real_j(q: f64, delta: f64, j: f64, bc: BoundaryCondition) -> Result<Self> {
        if !j.is_finite() || j.fract() != 0.0 || j < 1.0 || j > u32::MAX as f64 {
            return Err(Error::InvalidParams(format!(
                "j must be a positive integer, got {j}"
            )));
        }
        Self::new(q, delta, j as u32, bc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.j == 0 {
            return Err(Error::InvalidParams("j must be at least 1".into()));
        }
        if !self.q.is_finite() || !self.delta.is_finite() {
            return Err(Error::InvalidParams(format!(
                "q and delta must be finite (q = {}, delta = {})",
                self.q, self.delta
            )));
        }
        Ok(())
    }

    pub fn with_q(self, q: f64) -> Self {
        Self { q, ..self }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }
}

/// Complex potential `V(x) = 2q (cos 2x + i delta sin 2jx)`.
pub fn potential_value(params: &ModelParams, x: f64) -> Complex64 {
    let two_q = 2.0 * params.q;
    Complex64::new(
        two_q * (2.0 * x).cos(),
        two_q * params.delta * (2.0 * params.j as f64 * x).sin(),
    )
}

/// `int_0^pi sin(kx) cos(px) dx` for integers `k`, `p`.
fn sin_cos_integral(k: i64, p: i64) -> f64 {
    if k * k == p * p || (k + p).rem_euclid(2) == 0 {
        return 0.0;
    }
    2.0 * k as f64 / (k * k - p * p) as f64
}

/// `int_0^pi cos(2x) cos(px) dx` for integer `p`.
fn cos2_cos_integral(p: i64) -> f64 {
    if p.abs() == 2 {
        PI / 2.0
    } else {
        0.0
    }
}

fn check_index(n: usize, bc: BoundaryCondition) -> Result<()> {
    if n < bc.first_index() {
        return Err(Error::InvalidIndex {
            index: n,
            basis: match bc {
                BoundaryCondition::Neumann => "cosine",
                BoundaryCondition::Dirichlet => "sine",
            },
        });
    }
    Ok(())
}

/// Un-normalized `int_0^pi phi_m(x) sin(2jx) phi_n(x) dx` with
/// `phi_n = cos(nx)` (Neumann) or `sin(nx)` (Dirichlet).
///
/// Vanishes whenever `m + n` is even.
pub fn sine_coupling(m: usize, n: usize, j: u32, bc: BoundaryCondition) -> Result<f64> {
    check_index(m, bc)?;
    check_index(n, bc)?;
    if j == 0 {
        return Err(Error::InvalidParams("j must be at least 1".into()));
    }
    Ok(sine_coupling_unchecked(m, n, j, bc))
}

fn sine_coupling_unchecked(m: usize, n: usize, j: u32, bc: BoundaryCondition) -> f64 {
    let k = 2 * j as i64;
    let (m, n) = (m as i64, n as i64);
    0.5 * (sin_cos_integral(k, m - n) + bc.sum_sign() * sin_cos_integral(k, m + n))
}

/// Un-normalized `int_0^pi phi_m(x) cos(2x) phi_n(x) dx`.
pub fn cosine_coupling(m: usize, n: usize, bc: BoundaryCondition) -> Result<f64> {
    check_index(m, bc)?;
    check_index(n, bc)?;
    Ok(cosine_coupling_unchecked(m, n, bc))
}

fn cosine_coupling_unchecked(m: usize, n: usize, bc: BoundaryCondition) -> f64 {
    let (m, n) = (m as i64, n as i64);
    0.5 * (cos2_cos_integral(m - n) + bc.sum_sign() * cos2_cos_integral(m + n))
}

/// Normalization constant of basis function `n`.
fn basis_norm(n: usize, bc: BoundaryCondition) -> f64 {
    match (bc, n) {
        (BoundaryCondition::Neumann, 0) => 1.0 / PI.sqrt(),
        _ => (2.0 / PI).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    CosineNormalized,
    SineNormalized,
    FiniteDifference,
}

impl Basis {
    pub fn for_bc(bc: BoundaryCondition) -> Self {
        match bc {
            BoundaryCondition::Neumann => Basis::CosineNormalized,
            BoundaryCondition::Dirichlet => Basis::SineNormalized,
        }
    }
}

/// Truncated matrix representation of `H` at one parameter point.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub entries: CMatrix,
    pub basis: Basis,
    pub params: ModelParams,
}

impl OperatorMatrix {
    pub fn n(&self) -> usize {
        self.entries.dim()
    }
}

/// The `q`- and `delta`-independent pieces of the Galerkin matrix for a given
/// `(j, bc, N)`: `H = K + 2q C + 2i q delta S`.
///
/// Building these once and re-combining them is what makes dense parameter
/// scans cheap.
#[derive(Debug, Clone)]
pub struct GalerkinParts {
    j: u32,
    bc: BoundaryCondition,
    n: usize,
    kinetic: Vec<f64>,
    cos_part: Vec<f64>,
    sin_part: Vec<f64>,
}

impl GalerkinParts {
    pub fn new(j: u32, bc: BoundaryCondition, n: usize) -> Result<Self> {
        if n < MIN_TRUNCATION {
            return Err(Error::TruncationTooSmall {
                n,
                min: MIN_TRUNCATION,
            });
        }
        if j == 0 {
            return Err(Error::InvalidParams("j must be at least 1".into()));
        }
        let idx = |row: usize| bc.basis_index(row);
        let kinetic = (0..n).map(|r| (idx(r) * idx(r)) as f64).collect();
        let mut cos_part = vec![0.0; n * n];
        let mut sin_part = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                let (m, k) = (idx(r), idx(c));
                let w = basis_norm(m, bc) * basis_norm(k, bc);
                cos_part[r * n + c] = w * cosine_coupling_unchecked(m, k, bc);
                sin_part[r * n + c] = w * sine_coupling_unchecked(m, k, j, bc);
            }
        }
        Ok(Self {
            j,
            bc,
            n,
            kinetic,
            cos_part,
            sin_part,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    /// Normalized Galerkin matrix of `cos 2x`.
    pub fn cos_matrix(&self) -> &[f64] {
        &self.cos_part
    }

    /// Normalized Galerkin matrix of `sin 2jx`.
    pub fn sin_matrix(&self) -> &[f64] {
        &self.sin_part
    }

    pub fn matrix(&self, q: f64, delta: f64) -> CMatrix {
        let n = self.n;
        let re = 2.0 * q;
        let im = 2.0 * q * delta;
        CMatrix::from_fn(n, |r, c| {
            let k = r * n + c;
            let diag = if r == c { self.kinetic[r] } else { 0.0 };
            Complex64::new(diag + re * self.cos_part[k], im * self.sin_part[k])
        })
    }

    pub fn operator(&self, params: &ModelParams) -> Result<OperatorMatrix> {
        params.validate()?;
        if params.j != self.j || params.bc != self.bc {
            return Err(Error::InvalidParams(format!(
                "parameters (j = {}, bc = {}) do not match the assembled parts (j = {}, bc = {})",
                params.j, params.bc, self.j, self.bc
            )));
        }
        Ok(OperatorMatrix {
            entries: self.matrix(params.q, params.delta),
            basis: Basis::for_bc(self.bc),
            params: *params,
        })
    }
}

/// Galerkin matrix of `H` at `params`, truncated to `n` basis functions.
pub fn assemble_matrix(params: &ModelParams, n: usize) -> Result<OperatorMatrix> {
    params.validate()?;
    GalerkinParts::new(params.j, params.bc, n)?.operator(params)
}
