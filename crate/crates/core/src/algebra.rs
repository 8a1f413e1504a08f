//! Small dense complex matrices (2×2 single-photon, 4×4 two-photon) and the
//! Hermitian spectral kernel everything else is built on.
//!
//! Two-photon operators are written in the product basis ordered
//! `HH, HV, VH, VV`, signal mode first.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum entrywise asymmetry accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues in `[-NEGATIVE_REJECT, 0)` are treated as rounding and clipped.
/// Anything more negative is an upstream bug.
pub const NEGATIVE_REJECT: f64 = 1e-6;

/// Trace and eigenvalue deviations treated as floating-point noise.
const ROUNDING_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix of dimension 2 or 4, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| {
            (0..m.dim)
                .map(|r| m.row(r).iter().map(f).collect())
                .collect()
        };
        MatrixJson {
            dim: m.dim,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        check_dim(j.dim)?;
        let shape_ok = |rows: &Vec<Vec<f64>>| {
            rows.len() == j.dim && rows.iter().all(|r| r.len() == j.dim)
        };
        if !shape_ok(&j.re) || !shape_ok(&j.im) {
            return Err(Error::parse(
                "matrix",
                format!("`re` and `im` must both be {0}x{0}", j.dim),
            ));
        }
        let data: Vec<C64> = j
            .re
            .iter()
            .flatten()
            .zip(j.im.iter().flatten())
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        let m = ComplexMatrix { dim: j.dim, data };
        if !m.is_finite() {
            return Err(Error::parse("matrix", "non-finite entry"));
        }
        Ok(m)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 4 {
        Ok(())
    } else {
        Err(Error::InvalidState(format!(
            "matrix dimension must be 2 or 4, got {dim}"
        )))
    }
}

impl ComplexMatrix {
    /// # Panics
    /// If `dim` is not 2 or 4.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 4, "matrix dimension must be 2 or 4");
        ComplexMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |r, c| if r == c { ONE } else { ZERO })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.data[r * dim + c] = f(r, c);
            }
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |r, c| {
            if r == c {
                C64::new(diag[r], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// Builds a matrix from nested rows, rejecting ragged or non-finite input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidState("ragged matrix rows".into()));
        }
        let m = ComplexMatrix {
            dim,
            data: rows.iter().flatten().copied().collect(),
        };
        if !m.is_finite() {
            return Err(Error::InvalidState("non-finite matrix entry".into()));
        }
        Ok(m)
    }

    /// `|ket⟩⟨bra|`
    pub fn outer(ket: &[C64], bra: &[C64]) -> Self {
        assert_eq!(ket.len(), bra.len());
        Self::from_fn(ket.len(), |r, c| ket[r] * bra[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn row(&self, row: usize) -> &[C64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &ComplexMatrix) -> C64 {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = ZERO;
        for r in 0..n {
            for c in 0..n {
                acc += self.data[r * n + c] * other.data[c * n + r];
            }
        }
        acc
    }

    /// `⟨v|self|v⟩`
    pub fn expectation(&self, v: &[C64]) -> C64 {
        assert_eq!(v.len(), self.dim);
        let n = self.dim;
        let mut acc = ZERO;
        for r in 0..n {
            let row: C64 = (0..n).map(|c| self.data[r * n + c] * v[c]).sum();
            acc += v[r].conj() * row;
        }
        acc
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Kronecker product; `self` acts on the signal (first) mode.
    pub fn kron(&self, other: &ComplexMatrix) -> Self {
        let (a, b) = (self.dim, other.dim);
        Self::from_fn(a * b, |r, c| self.get(r / b, c / b) * other.get(r % b, c % b))
    }

    /// Largest entrywise `|m_jk − conj(m_kj)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// `(m + m†)/2`
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |r, c| (self.get(r, c) + self.get(c, r).conj()) * 0.5)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Squared Frobenius norm, `Σ|m_jk|²`.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for r in 0..self.dim {
            write!(f, "  ")?;
            for z in self.row(r) {
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * rhs.data[k * n + c];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.vectors.dim).map(|r| self.vectors.get(r, k)).collect()
    }

    /// `V · diag(f(λ)) · V†`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.vectors.dim;
        let w: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, |r, c| {
            (0..n)
                .map(|k| self.vectors.get(r, k) * self.vectors.get(c, k).conj() * w[k])
                .sum()
        })
    }
}

/// Cyclic complex Jacobi on an `n×n` Hermitian matrix stored row-major.
/// Returns unsorted real eigenvalues; `v` receives the eigenvectors as columns.
fn jacobi(n: usize, a: &mut [C64], v: &mut [C64]) -> Vec<f64> {
    for (i, z) in v.iter_mut().enumerate() {
        *z = if i / n == i % n { ONE } else { ZERO };
    }
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let floor = scale * 1e-300;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[p * n + q];
                let mag = g.norm();
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                // Relative threshold keeps small eigenvalues of PSD input accurate.
                if mag <= f64::EPSILON * 0.5 * (app.abs() * aqq.abs()).sqrt() || mag <= floor {
                    continue;
                }
                rotated = true;
                let phase = g / mag;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Columns p, q of the unitary J = diag(1, conj(phase)) · R(c, s).
                let j_pp = C64::new(c, 0.0);
                let j_pq = C64::new(s, 0.0);
                let j_qp = -phase.conj() * s;
                let j_qq = phase.conj() * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * j_pp + akq * j_qp;
                    a[k * n + q] = akp * j_pq + akq * j_qq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = j_pp.conj() * apk + j_qp.conj() * aqk;
                    a[q * n + k] = j_pq.conj() * apk + j_qq.conj() * aqk;
                }
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                a[p * n + p] = C64::new(app - t * mag, 0.0);
                a[q * n + q] = C64::new(aqq + t * mag, 0.0);

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * j_pp + vkq * j_qp;
                    v[k * n + q] = vkp * j_pq + vkq * j_qq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (0..n).map(|i| a[i * n + i].re).collect()
}

/// Sorted (descending) eigen-decomposition of a Hermitian matrix.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let deviation = m.hermiticity_error();
    if !(deviation <= HERMITIAN_TOL) {
        return Err(Error::NonHermitianInput { deviation });
    }
    let n = m.dim;
    let mut a = m.hermitian_part().data;
    let mut v = vec![ZERO; n * n];
    let values = jacobi(n, &mut a, &mut v);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let vectors = ComplexMatrix::from_fn(n, |r, c| v[r * n + order[c]]);
    Ok(HermitianEigen {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors,
    })
}

/// Singular values (descending) of a square matrix, read off the Hermitian
/// dilation `[[0, M], [M†, 0]]`. Unlike `sqrt(eig(M·M†))` this keeps
/// absolute accuracy near zero.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.dim;
    let w = 2 * n;
    let mut a = vec![ZERO; w * w];
    for r in 0..n {
        for c in 0..n {
            let z = m.get(r, c);
            a[r * w + (n + c)] = z;
            a[(n + c) * w + r] = z.conj();
        }
    }
    let mut v = vec![ZERO; w * w];
    let mut values = jacobi(w, &mut a, &mut v);
    values.sort_by(|x, y| y.total_cmp(x));
    values.truncate(n);
    values.into_iter().map(|s| s.max(0.0)).collect()
}

/// Sum of singular values, `tr|M|`.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).iter().sum()
}

fn check_not_too_negative(values: &[f64]) -> Result<()> {
    match values.last() {
        Some(&min) if min < -NEGATIVE_REJECT => Err(Error::InvalidState(format!(
            "eigenvalue {min:.3e} below -{NEGATIVE_REJECT:e}"
        ))),
        _ => Ok(()),
    }
}

/// Principal square root of a Hermitian positive-semidefinite matrix.
/// Rounding-level negative eigenvalues are clipped to zero.
pub fn matrix_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eigen(m)?;
    check_not_too_negative(&eig.values)?;
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()).hermitian_part())
}

/// Projects an approximately Hermitian matrix onto the physical states by
/// clipping negative eigenvalues and renormalizing the trace.
pub fn nearest_physical(m: &ComplexMatrix) -> Result<DensityMatrix> {
    if m.dim != 4 {
        return Err(Error::InvalidState(format!(
            "density matrix must be 4x4, got {0}x{0}",
            m.dim
        )));
    }
    if !m.is_finite() {
        return Err(Error::InvalidState("non-finite matrix entry".into()));
    }
    let sym = m.hermitian_part();
    let eig = hermitian_eigen(&sym)?;
    let total: f64 = eig.values.iter().map(|l| l.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTrace);
    }
    let rho = eig.reconstruct_with(|l| l.max(0.0) / total).hermitian_part();
    Ok(DensityMatrix(rho))
}

/// Two-photon polarization state: 4×4 Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct DensityMatrix(ComplexMatrix);

impl TryFrom<ComplexMatrix> for DensityMatrix {
    type Error = Error;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        DensityMatrix::new(m)
    }
}

impl From<DensityMatrix> for ComplexMatrix {
    fn from(rho: DensityMatrix) -> Self {
        rho.0
    }
}

impl DensityMatrix {
    /// Validates `m` as a state. Asymmetry up to [`HERMITIAN_TOL`] and trace
    /// error up to 1e-8 are absorbed; slightly negative eigenvalues are
    /// clipped; eigenvalues below `-NEGATIVE_REJECT` are rejected.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.dim != 4 {
            return Err(Error::InvalidState(format!(
                "density matrix must be 4x4, got {0}x{0}",
                m.dim
            )));
        }
        if !m.is_finite() {
            return Err(Error::InvalidState("non-finite matrix entry".into()));
        }
        let deviation = m.hermiticity_error();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NonHermitianInput { deviation });
        }
        let tr = m.trace().re;
        if (tr - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        // Input that is already a state to rounding is kept bit for bit, so
        // serialized states parse back unchanged.
        let mut sym = m.hermitian_part();
        if (tr - 1.0).abs() > ROUNDING_TOL {
            sym = sym.scale_re(1.0 / tr);
        }
        let eig = hermitian_eigen(&sym)?;
        check_not_too_negative(&eig.values)?;
        if eig.values[3] < -ROUNDING_TOL {
            return nearest_physical(&sym);
        }
        Ok(DensityMatrix(sym))
    }

    /// Wraps a matrix already known to be a state (MLE iterates, mixtures of
    /// projectors). Only symmetrizes and fixes the trace.
    pub(crate) fn from_matrix_unchecked(m: ComplexMatrix) -> Self {
        let tr = m.trace().re;
        DensityMatrix(m.hermitian_part().scale_re(1.0 / tr))
    }

    pub fn from_pure(psi: &PureState) -> Self {
        DensityMatrix(ComplexMatrix::outer(&psi.0, &psi.0))
    }

    /// `𝟙/4`
    pub fn maximally_mixed() -> Self {
        DensityMatrix(ComplexMatrix::identity(4).scale_re(0.25))
    }

    /// Convex combination `Σ wᵢ ρᵢ`; weights must be nonnegative and sum to 1.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!(
                "mixture weights must be nonnegative and sum to 1 (sum {total})"
            )));
        }
        let mut acc = ComplexMatrix::zeros(4);
        for (w, rho) in parts {
            acc = &acc + &rho.0.scale_re(*w);
        }
        Ok(DensityMatrix::from_matrix_unchecked(acc))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0.get(row, col)
    }

    pub fn eigen(&self) -> HermitianEigen {
        hermitian_eigen(&self.0).expect("density matrix is Hermitian by construction")
    }

    pub fn sqrt(&self) -> ComplexMatrix {
        self.eigen().reconstruct_with(|l| l.max(0.0).sqrt()).hermitian_part()
    }

    /// Unitary conjugation `U ρ U†`.
    pub fn transformed(&self, u: &ComplexMatrix) -> Self {
        DensityMatrix::from_matrix_unchecked(&(u * &self.0) * &u.adjoint())
    }

    /// Born probability `tr(ρ Π)`.
    pub fn probability(&self, projector: &ComplexMatrix) -> f64 {
        self.0.trace_product(projector).re
    }
}

/// Pure two-photon amplitude vector ordered `HH, HV, VH, VV`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState([C64; 4]);

impl PureState {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(amplitudes: [C64; 4]) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !((norm_sq - 1.0).abs() <= Self::NORM_TOL) {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(PureState(amplitudes))
    }

    /// Rescales to unit norm; fails only for the zero vector.
    pub fn normalized(amplitudes: [C64; 4]) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized {
                norm_sq: norm * norm,
            });
        }
        Ok(PureState(amplitudes.map(|a| a / norm)))
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.0
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    /// `|⟨self|other⟩|²`
    pub fn overlap_sq(&self, other: &PureState) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm_sqr()
    }
}
