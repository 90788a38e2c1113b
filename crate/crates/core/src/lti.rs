//! Plant model: transfer-function description, observable canonical
//! realization, forward simulation and the packed parameter vector.
//!
//! Sign convention: `a_coeffs` on [`TransferFunctionSpec`] are the raw
//! denominator coefficients of `s^r + a_1 s^{r-1} + ... + a_r`. Everywhere
//! else (realization, parameter vector, filter coefficients) the negated
//! vector `a_vec = -[a_1 ... a_r]` is used, so that the first block column
//! of `A` is `a_vec[i] * I_q`.

use nalgebra::{DMatrix, DVector};

use crate::error::{mismatch, Error, Result};
use crate::linalg;

/// Default tolerance for [`is_schur_stable`].
pub const SCHUR_TOL: f64 = 1e-9;

/// Output count `q`, input count `m` and block order `r`, with the derived
/// state dimension `n = r q` and parameter dimension `d = r + m n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimensions {
    q: usize,
    m: usize,
    r: usize,
}

impl Dimensions {
    pub fn new(q: usize, m: usize, r: usize) -> Result<Self> {
        if q == 0 || m == 0 || r == 0 {
            return Err(Error::InvalidArgument(format!("dimensions must be positive (q={q}, m={m}, r={r})")));
        }
        Ok(Self { q, m, r })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.r * self.q
    }

    pub fn d(&self) -> usize {
        self.r + self.m * self.n()
    }
}

/// Denominator coefficients and numerator matrices of a strictly proper
/// transfer matrix `(N_1 s^{r-1} + ... + N_r) / (s^r + a_1 s^{r-1} + ... + a_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunctionSpec {
    a_coeffs: Vec<f64>,
    numerators: Vec<DMatrix<f64>>,
    dims: Dimensions,
}

impl TransferFunctionSpec {
    pub fn new(a_coeffs: Vec<f64>, numerators: Vec<DMatrix<f64>>) -> Result<Self> {
        let r = a_coeffs.len();
        if r == 0 {
            return Err(Error::InvalidArgument("denominator order r must be at least 1".into()));
        }
        if numerators.len() != r {
            return Err(mismatch("numerator count", r, numerators.len()));
        }
        let (q, m) = numerators[0].shape();
        for (i, n) in numerators.iter().enumerate() {
            if n.shape() != (q, m) {
                return Err(mismatch(
                    format!("numerator N_{}", i + 1),
                    format!("{q}x{m}"),
                    format!("{}x{}", n.nrows(), n.ncols()),
                ));
            }
        }
        if a_coeffs.iter().any(|v| !v.is_finite()) || numerators.iter().any(|n| !linalg::is_finite_matrix(n)) {
            return Err(Error::NonFinite("transfer function coefficients"));
        }
        let dims = Dimensions::new(q, m, r)?;
        Ok(Self {
            a_coeffs,
            numerators,
            dims,
        })
    }

    pub fn a_coeffs(&self) -> &[f64] {
        &self.a_coeffs
    }

    pub fn numerators(&self) -> &[DMatrix<f64>] {
        &self.numerators
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }
}

/// Block-companion matrix with `coeffs[i] * I_q` in the first block column
/// and identities on the block superdiagonal. This is the shared pattern of
/// the plant matrix `A` (with `a_vec`) and the filter matrix `F` (with `f_vec`).
pub fn canonical_block_matrix(coeffs: &[f64], q: usize) -> DMatrix<f64> {
    let r = coeffs.len();
    let n = r * q;
    let mut m = DMatrix::zeros(n, n);
    for (i, &c) in coeffs.iter().enumerate() {
        for k in 0..q {
            m[(i * q + k, k)] = c;
            if i + 1 < r {
                m[(i * q + k, (i + 1) * q + k)] = 1.0;
            }
        }
    }
    m
}

/// Recovers the first-block-column coefficients if `m` has exactly the
/// canonical block pattern for block size `q`.
pub fn canonical_coefficients(m: &DMatrix<f64>, q: usize) -> Option<Vec<f64>> {
    if q == 0 || !m.is_square() || !m.nrows().is_multiple_of(q) || m.nrows() == 0 {
        return None;
    }
    let r = m.nrows() / q;
    let coeffs: Vec<f64> = (0..r).map(|i| m[(i * q, 0)]).collect();
    (canonical_block_matrix(&coeffs, q) == *m).then_some(coeffs)
}

/// `(A, B, C)` in observable canonical form.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemRealization {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    dims: Dimensions,
}

impl SystemRealization {
    /// Builds the realization from `a_vec = -[a_1 ... a_r]` and `B` (n x m).
    pub fn from_canonical(a_vec: &[f64], b: DMatrix<f64>, q: usize) -> Result<Self> {
        let r = a_vec.len();
        let n = r * q;
        if b.nrows() != n {
            return Err(mismatch("B rows", n, b.nrows()));
        }
        let dims = Dimensions::new(q, b.ncols(), r)?;
        if a_vec.iter().any(|v| !v.is_finite()) || !linalg::is_finite_matrix(&b) {
            return Err(Error::NonFinite("plant coefficients"));
        }
        Ok(Self {
            a: canonical_block_matrix(a_vec, q),
            b,
            c: output_matrix(dims),
            dims,
        })
    }

    /// Accepts explicit `(A, B)` after checking that `A` has the canonical
    /// block pattern for `q` outputs.
    pub fn from_matrices(a: DMatrix<f64>, b: DMatrix<f64>, q: usize) -> Result<Self> {
        let a_vec = canonical_coefficients(&a, q).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "A ({}x{}) is not in observable canonical form for q = {q}",
                a.nrows(),
                a.ncols()
            ))
        })?;
        Self::from_canonical(&a_vec, b, q)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    /// `a_vec = -[a_1 ... a_r]`, read back from the first block column of `A`.
    pub fn a_vec(&self) -> Vec<f64> {
        let q = self.dims.q;
        (0..self.dims.r).map(|i| self.a[(i * q, 0)]).collect()
    }

    /// One step of `x+ = A x + B u`, `y = C x`. The output comes from the
    /// pre-update state.
    pub fn simulate_step(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        if x.len() != self.dims.n() {
            return Err(mismatch("state length", self.dims.n(), x.len()));
        }
        if u.len() != self.dims.m {
            return Err(mismatch("input length", self.dims.m, u.len()));
        }
        if !linalg::is_finite_vector(x) {
            return Err(Error::NonFinite("state"));
        }
        if !linalg::is_finite_vector(u) {
            return Err(Error::NonFinite("input"));
        }
        Ok((&self.a * x + &self.b * u, &self.c * x))
    }
}

/// `C = [I_q 0 ... 0]`.
pub fn output_matrix(dims: Dimensions) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(dims.q, dims.n());
    c.fill_diagonal(1.0);
    c
}

/// Stacks the numerator matrices into `B` and the negated denominator into
/// the first block column of `A`.
pub fn realize_observable_canonical(tf: &TransferFunctionSpec) -> SystemRealization {
    let dims = tf.dims;
    let (q, m) = (dims.q, dims.m);
    let a_vec: Vec<f64> = tf.a_coeffs.iter().map(|a| -a).collect();
    let mut b = DMatrix::zeros(dims.n(), m);
    for (i, n_i) in tf.numerators.iter().enumerate() {
        b.view_mut((i * q, 0), (q, m)).copy_from(n_i);
    }
    SystemRealization {
        a: canonical_block_matrix(&a_vec, q),
        b,
        c: output_matrix(dims),
        dims,
    }
}

/// Column-stacked `vec(M)`.
pub fn vec_columns(m: &DMatrix<f64>) -> DVector<f64> {
    // nalgebra storage is column-major already
    DVector::from_column_slice(m.as_slice())
}

/// The unknown parameters `p = [(a - f); vec(B)]` together with the pieces
/// they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub a_vec: DVector<f64>,
    pub f_vec: DVector<f64>,
    pub b_vec: DVector<f64>,
    pub p: DVector<f64>,
}

impl ParameterVector {
    pub fn pack(a_vec: &[f64], f_vec: &[f64], b: &DMatrix<f64>) -> Result<Self> {
        let r = a_vec.len();
        if f_vec.len() != r {
            return Err(mismatch("f_vec length", r, f_vec.len()));
        }
        if r == 0 || !b.nrows().is_multiple_of(r) || b.nrows() == 0 || b.ncols() == 0 {
            return Err(Error::InvalidArgument(format!(
                "B ({}x{}) is incompatible with block order r = {r}",
                b.nrows(),
                b.ncols()
            )));
        }
        let a_vec = DVector::from_column_slice(a_vec);
        let f_vec = DVector::from_column_slice(f_vec);
        let b_vec = vec_columns(b);
        let mut p = DVector::zeros(r + b_vec.len());
        p.rows_mut(0, r).copy_from(&(&a_vec - &f_vec));
        p.rows_mut(r, b_vec.len()).copy_from(&b_vec);
        Ok(Self { a_vec, f_vec, b_vec, p })
    }

    /// Inverse of [`ParameterVector::pack`]: returns `(a_vec, B)`.
    pub fn unpack(p: &DVector<f64>, f_vec: &[f64], dims: Dimensions) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if p.len() != dims.d() {
            return Err(mismatch("parameter vector length", dims.d(), p.len()));
        }
        if f_vec.len() != dims.r {
            return Err(mismatch("f_vec length", dims.r, f_vec.len()));
        }
        let r = dims.r;
        let a_vec = p.rows(0, r) + DVector::from_column_slice(f_vec);
        let b = DMatrix::from_column_slice(dims.n(), dims.m, p.rows(r, dims.m * dims.n()).as_slice());
        Ok((a_vec, b))
    }
}

/// Spectral radius strictly below `1 - tol`, from a general eigenvalue solve.
pub fn is_schur_stable(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    Ok(linalg::spectral_radius(m)? < 1.0 - tol)
}
