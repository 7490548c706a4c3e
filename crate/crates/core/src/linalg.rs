//! Small fixed-size complex linear algebra.
//!
//! Operators are stack arrays (`[[C64; N]; N]`); the largest in the crate is
//! 4×4. Eigenproblems, solves and least squares go through nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub type Mat<const N: usize> = [[C64; N]; N];

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };


pub fn zeros<const N: usize>() -> Mat<N> {
    [[ZERO; N]; N]
}

pub fn identity<const N: usize>() -> Mat<N> {
    let mut m = zeros::<N>();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = ONE;
    }
    m
}

pub fn matmul<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Mat<N> {
    let mut out = zeros::<N>();
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            if aik == ZERO {
                continue;
            }
            for j in 0..N {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn adjoint<const N: usize>(a: &Mat<N>) -> Mat<N> {
    let mut out = zeros::<N>();
    for i in 0..N {
        for j in 0..N {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

pub fn trace<const N: usize>(a: &Mat<N>) -> C64 {
    (0..N).map(|i| a[i][i]).sum()
}

pub fn scale<const N: usize>(a: &Mat<N>, s: C64) -> Mat<N> {
    let mut out = *a;
    out.iter_mut().flatten().for_each(|x| *x *= s);
    out
}

pub fn add<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Mat<N> {
    let mut out = *a;
    for i in 0..N {
        for j in 0..N {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn sub<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Mat<N> {
    add(a, &scale(b, -ONE))
}

pub fn mat_vec<const N: usize>(a: &Mat<N>, v: &[C64; N]) -> [C64; N] {
    let mut out = [ZERO; N];
    for i in 0..N {
        out[i] = (0..N).map(|j| a[i][j] * v[j]).sum();
    }
    out
}

/// `⟨a|b⟩`, conjugate-linear in the first argument.
pub fn inner<const N: usize>(a: &[C64; N], b: &[C64; N]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `|a⟩⟨b|`
pub fn outer<const N: usize>(a: &[C64; N], b: &[C64; N]) -> Mat<N> {
    let mut out = zeros::<N>();
    for i in 0..N {
        for j in 0..N {
            out[i][j] = a[i] * b[j].conj();
        }
    }
    out
}

/// Kronecker product of two single-qubit operators, first factor on the
/// most significant index (signal ⊗ idler).
pub fn kron(a: &Mat<2>, b: &Mat<2>) -> Mat<4> {
    let mut out = zeros::<4>();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn kron_vec(a: &[C64; 2], b: &[C64; 2]) -> [C64; 4] {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

pub fn max_abs_diff<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..N {
        for j in 0..N {
            worst = worst.max((a[i][j] - b[i][j]).norm());
        }
    }
    worst
}

pub fn frobenius<const N: usize>(a: &Mat<N>) -> f64 {
    a.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest deviation from Hermiticity, `max |a_ij − conj(a_ji)|`.
pub fn hermiticity_defect<const N: usize>(a: &Mat<N>) -> f64 {
    max_abs_diff(a, &adjoint(a))
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigh<const N: usize> {
    /// Eigenvalues in descending order.
    pub values: [f64; N],
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: Mat<N>,
}

impl<const N: usize> Eigh<N> {
    pub fn vector(&self, k: usize) -> [C64; N] {
        let mut v = [ZERO; N];
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = self.vectors[i][k];
        }
        v
    }

    /// Rebuilds `Σ f(λ_k) |v_k⟩⟨v_k|`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Mat<N> {
        let mut out = zeros::<N>();
        for k in 0..N {
            let w = f(self.values[k]);
            if w == 0.0 {
                continue;
            }
            let v = self.vector(k);
            out = add(&out, &scale(&outer(&v, &v), C64::new(w, 0.0)));
        }
        out
    }
}

/// Diagonalizes the Hermitian part of `m`.
pub fn eigh<const N: usize>(m: &Mat<N>) -> Eigh<N> {
    let a = DMatrix::<C64>::from_fn(N, N, |i, j| (m[i][j] + m[j][i].conj()) * 0.5);
    let eig = a.symmetric_eigen();
    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = std::array::from_fn(|k| eig.eigenvalues[order[k]]);
    let mut vectors = zeros::<N>();
    for (k, &src) in order.iter().enumerate() {
        for (i, row) in vectors.iter_mut().enumerate() {
            row[k] = eig.eigenvectors[(i, src)];
        }
    }
    Eigh { values, vectors }
}

/// Closed-form eigenvalues of a 2×2 Hermitian matrix, descending.
pub fn eigvals_hermitian_2x2(m: &Mat<2>) -> [f64; 2] {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let b = (m[0][1] + m[1][0].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean + radius, mean - radius]
}

fn dense(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let ncols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

fn well_conditioned(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    let sv = m.singular_values();
    let max = sv.max();
    max > 0.0 && sv.min() > rel_tol * max
}

/// Solves the square real system `a x = b`. Returns `None` when the smallest
/// singular value of `a` falls below `rel_tol` times the largest.
pub fn solve_real(a: &[Vec<f64>], b: &[f64], rel_tol: f64) -> Option<Vec<f64>> {
    let m = dense(a);
    if !well_conditioned(&m, rel_tol) {
        return None;
    }
    let x = m.lu().solve(&DVector::from_column_slice(b))?;
    Some(x.iter().copied().collect())
}

/// Inverse of a small real matrix, or `None` when singular to `rel_tol`.
pub fn invert_real(a: &[Vec<f64>], rel_tol: f64) -> Option<Vec<Vec<f64>>> {
    let m = dense(a);
    if !well_conditioned(&m, rel_tol) {
        return None;
    }
    let inv = m.try_inverse()?;
    Some(inv.row_iter().map(|r| r.iter().copied().collect()).collect())
}

/// Numerical rank of a real matrix (rows × cols): singular values above
/// `rel_tol` times the largest.
pub fn rank_real(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let sv = dense(rows).singular_values();
    let cut = rel_tol * sv.max();
    sv.iter().filter(|&&s| s > cut).count()
}

/// Ordinary (optionally weighted) linear least squares.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub params: Vec<f64>,
    /// `(Jᵀ W J)⁻¹`, unscaled.
    pub normal_inverse: Vec<Vec<f64>>,
    pub residual_sum_squares: f64,
}

/// Minimizes `Σ w_k (y_k − Σ_j x_kj p_j)²`. `None` if the design is rank
/// deficient.
pub fn linear_least_squares(
    design: &[Vec<f64>],
    y: &[f64],
    weights: Option<&[f64]>,
) -> Option<LeastSquares> {
    design.first()?;
    let x = dense(design);
    let w = DVector::from_fn(y.len(), |k, _| weights.map_or(1.0, |w| w[k]));
    let sqrt_w = w.map(f64::sqrt);
    let xw = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * sqrt_w[i]);
    let yw = DVector::from_fn(y.len(), |k, _| y[k] * sqrt_w[k]);
    if rank_real(design, 1e-13) < x.ncols() {
        return None;
    }
    let qr = xw.clone().qr();
    let params = qr.r().solve_upper_triangular(&(qr.q().transpose() * &yw))?;
    let normal_inverse = (xw.transpose() * &xw).try_inverse()?;
    let resid = &yw - &xw * &params;
    Some(LeastSquares {
        params: params.iter().copied().collect(),
        normal_inverse: normal_inverse.row_iter().map(|r| r.iter().copied().collect()).collect(),
        residual_sum_squares: resid.norm_squared(),
    })
}
