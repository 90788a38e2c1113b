//! The `m + 1` filter recursions that turn measured `(y, u)` into the
//! regressor.
//!
//! `S_y` (n x r) is driven by `I_r ⊗ y`, each `S_u^(i)` (n x n) by
//! `u^(i) I_n`, all through the same Schur-stable `F`. Stacking them gives
//! `S = [S_y | S_u^(1) ... S_u^(m)]` (n x d), for which the plant state obeys
//! `x_t = S_t p + F^t x_0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{mismatch, Error, Result};
use crate::linalg;
use crate::lti::{canonical_block_matrix, Dimensions};

/// Filter matrix with `f_vec[i] * I_q` down the first block column.
pub fn build_f(f_vec: &[f64], q: usize) -> DMatrix<f64> {
    canonical_block_matrix(f_vec, q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterBankState {
    f: DMatrix<f64>,
    s_y: DMatrix<f64>,
    s_u: Vec<DMatrix<f64>>,
    t: usize,
    dims: Dimensions,
}

/// `S_t` and `phi_t = S_t^T C^T` at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorSnapshot {
    pub s: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub t: usize,
}

impl FilterBankState {
    /// Zero-initialised filters. `f` must already be the block-companion
    /// filter matrix for `dims`; stability is checked by the observer.
    pub fn new(f: DMatrix<f64>, dims: Dimensions) -> Result<Self> {
        let n = dims.n();
        if f.shape() != (n, n) {
            return Err(mismatch("F shape", format!("{n}x{n}"), format!("{}x{}", f.nrows(), f.ncols())));
        }
        Ok(Self {
            f,
            s_y: DMatrix::zeros(n, dims.r()),
            s_u: vec![DMatrix::zeros(n, n); dims.m()],
            t: 0,
            dims,
        })
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn s_y(&self) -> &DMatrix<f64> {
        &self.s_y
    }

    pub fn s_u(&self) -> &[DMatrix<f64>] {
        &self.s_u
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    /// Consumes `(y_t, u_t)` and moves the filters to index `t + 1`.
    pub fn advance(&mut self, y: &DVector<f64>, u: &DVector<f64>) -> Result<()> {
        let dims = self.dims;
        if y.len() != dims.q() {
            return Err(mismatch("output length", dims.q(), y.len()));
        }
        if u.len() != dims.m() {
            return Err(mismatch("input length", dims.m(), u.len()));
        }
        if !linalg::is_finite_vector(y) {
            return Err(Error::NonFinite("filter output sample"));
        }
        if !linalg::is_finite_vector(u) {
            return Err(Error::NonFinite("filter input sample"));
        }

        // I_r ⊗ y
        let y_block = DMatrix::<f64>::identity(dims.r(), dims.r()).kronecker(y);
        self.s_y = &self.f * &self.s_y + y_block;
        for (s, &ui) in self.s_u.iter_mut().zip(u.iter()) {
            let mut next = &self.f * &*s;
            for k in 0..dims.n() {
                next[(k, k)] += ui;
            }
            *s = next;
        }
        self.t += 1;
        Ok(())
    }

    /// `S = [S_y | S_u]`, n x d.
    pub fn assemble(&self) -> DMatrix<f64> {
        let dims = self.dims;
        let n = dims.n();
        let mut s = DMatrix::zeros(n, dims.d());
        s.columns_mut(0, dims.r()).copy_from(&self.s_y);
        for (i, su) in self.s_u.iter().enumerate() {
            s.columns_mut(dims.r() + i * n, n).copy_from(su);
        }
        s
    }

    pub fn snapshot(&self, c: &DMatrix<f64>) -> RegressorSnapshot {
        let s = self.assemble();
        let phi = s.transpose() * c.transpose();
        RegressorSnapshot { s, phi, t: self.t }
    }
}
