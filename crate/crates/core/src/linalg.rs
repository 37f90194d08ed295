//! Rank-revealing dense helpers: orthonormal ranges and null spaces,
//! minimum-norm solves, subspace containment / intersection / angles.
//!
//! Everything is built on an in-crate Householder QR with column pivoting
//! (plus a complete orthogonal decomposition for minimum-norm solves).
//! Householder products are orthonormal to machine precision regardless of
//! the input, and the pivoted R diagonal is a reliable rank witness, so no
//! external SVD is involved in any rank decision.
//!
//! Rank decisions treat diagonal magnitudes at or below `tol * scale` as
//! zero, where `scale` is the larger of the factorization's leading
//! diagonal and a caller-supplied magnitude (so structurally-zero matrices
//! made of round-off are recognized as rank zero).

use nalgebra::{DMatrix, DVector};

/// Default relative rank tolerance for an `n`-dimensional problem.
pub fn default_rank_tol(n: usize) -> f64 {
    1e-10 * n.max(1) as f64
}

/// Householder QR with (optional) column pivoting: A·P = Q·R.
pub struct PivotedQr {
    /// reflector j acts on rows j.. ; (start, vector on rows start.., 2/uᵀu)
    reflectors: Vec<(usize, DVector<f64>, f64)>,
    /// upper-triangular factor (in pivoted column order)
    r: DMatrix<f64>,
    /// column j of R corresponds to column perm[j] of A
    perm: Vec<usize>,
    /// |R_jj|, non-increasing when pivoting is on
    diag: Vec<f64>,
    nrows: usize,
    ncols: usize,
}

impl PivotedQr {
    pub fn new(a: &DMatrix<f64>, pivot: bool) -> Self {
        let (m, n) = a.shape();
        let mut work = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::new();
        let mut diag = Vec::new();
        let steps = m.min(n);
        for j in 0..steps {
            if pivot {
                // exact recomputation of remaining column norms
                let mut best = j;
                let mut best_norm = -1.0;
                for c in j..n {
                    let norm: f64 = (j..m).map(|i| work[(i, c)] * work[(i, c)]).sum();
                    if norm > best_norm {
                        best_norm = norm;
                        best = c;
                    }
                }
                if best != j {
                    work.swap_columns(j, best);
                    perm.swap(j, best);
                }
            }
            let sigma: f64 = ((j..m).map(|i| work[(i, j)] * work[(i, j)]).sum::<f64>()).sqrt();
            if sigma == 0.0 {
                diag.push(0.0);
                continue;
            }
            let x0 = work[(j, j)];
            let r_jj = if x0 >= 0.0 { -sigma } else { sigma };
            let mut u = DVector::zeros(m - j);
            for i in j..m {
                u[i - j] = work[(i, j)];
            }
            u[0] -= r_jj;
            let unorm2 = u.norm_squared();
            if unorm2 == 0.0 {
                diag.push(sigma);
                continue;
            }
            let coef = 2.0 / unorm2;
            // apply to the remaining columns (including j for the R entry)
            for c in j..n {
                let mut dot = 0.0;
                for i in j..m {
                    dot += u[i - j] * work[(i, c)];
                }
                let f = coef * dot;
                for i in j..m {
                    work[(i, c)] -= f * u[i - j];
                }
            }
            work[(j, j)] = r_jj;
            for i in (j + 1)..m {
                work[(i, j)] = 0.0;
            }
            diag.push(r_jj.abs());
            reflectors.push((j, u, coef));
        }
        // keep only the triangle
        let mut r = DMatrix::zeros(steps, n);
        for i in 0..steps {
            for c in i..n {
                r[(i, c)] = work[(i, c)];
            }
        }
        Self {
            reflectors,
            r,
            perm,
            diag,
            nrows: m,
            ncols: n,
        }
    }

    pub fn rank(&self, thresh: f64) -> usize {
        let mut rank = 0;
        for &d in &self.diag {
            if d > thresh {
                rank += 1;
            } else {
                break;
            }
        }
        rank
    }

    pub fn leading_diag(&self) -> f64 {
        self.diag.first().copied().unwrap_or(0.0)
    }

    /// Qᵀ · m in place.
    pub fn apply_qt(&self, m: &mut DMatrix<f64>) {
        assert_eq!(m.nrows(), self.nrows);
        for (start, u, coef) in &self.reflectors {
            for c in 0..m.ncols() {
                let mut dot = 0.0;
                for i in *start..self.nrows {
                    dot += u[i - start] * m[(i, c)];
                }
                let f = coef * dot;
                for i in *start..self.nrows {
                    m[(i, c)] -= f * u[i - start];
                }
            }
        }
    }

    /// Q · m in place.
    pub fn apply_q(&self, m: &mut DMatrix<f64>) {
        assert_eq!(m.nrows(), self.nrows);
        for (start, u, coef) in self.reflectors.iter().rev() {
            for c in 0..m.ncols() {
                let mut dot = 0.0;
                for i in *start..self.nrows {
                    dot += u[i - start] * m[(i, c)];
                }
                let f = coef * dot;
                for i in *start..self.nrows {
                    m[(i, c)] -= f * u[i - start];
                }
            }
        }
    }

    /// Columns `from..to` of the full orthogonal factor Q (machine-exact
    /// orthonormality).
    pub fn q_columns(&self, from: usize, to: usize) -> DMatrix<f64> {
        assert!(from <= to && to <= self.nrows);
        let mut cols = DMatrix::zeros(self.nrows, to - from);
        for (k, j) in (from..to).enumerate() {
            cols[(j, k)] = 1.0;
        }
        self.apply_q(&mut cols);
        cols
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }
}

fn rank_thresh(qr: &PivotedQr, tol: f64, scale: f64) -> f64 {
    tol * qr.leading_diag().max(scale)
}

/// Orthonormal basis of the column space of `m`, at tolerance `tol`
/// relative to `max(leading diagonal, scale)`.
pub fn orthonormal_range_scaled(m: &DMatrix<f64>, tol: f64, scale: f64) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let qr = PivotedQr::new(m, true);
    let rank = qr.rank(rank_thresh(&qr, tol, scale));
    qr.q_columns(0, rank)
}

pub fn orthonormal_range(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    orthonormal_range_scaled(m, tol, 0.0)
}

/// Orthonormal basis of the orthogonal complement of the column span of `u`
/// (columns assumed orthonormal) inside the full ambient space: the trailing
/// columns of the full Q of a Householder QR of `u`.
pub fn orthonormal_complement(u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    if u.ncols() == 0 {
        return DMatrix::identity(n, n);
    }
    if u.ncols() >= n {
        return DMatrix::zeros(n, 0);
    }
    let qr = PivotedQr::new(u, false);
    qr.q_columns(u.ncols(), n)
}

/// Orthonormal basis of the right null space `{x : m x = 0}` at tolerance
/// `tol` relative to `max(leading diagonal, scale)`: the trailing Q columns
/// of a pivoted QR of `mᵀ`.
pub fn null_space_scaled(m: &DMatrix<f64>, tol: f64, scale: f64) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if c == 0 {
        return DMatrix::zeros(0, 0);
    }
    if r == 0 {
        return DMatrix::identity(c, c);
    }
    let qr = PivotedQr::new(&m.transpose(), true);
    let rank = qr.rank(rank_thresh(&qr, tol, scale));
    qr.q_columns(rank, c)
}

pub fn null_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    null_space_scaled(m, tol, 0.0)
}

/// Numerical rank at tolerance `tol` relative to `max(leading diag, scale)`.
pub fn rank_scaled(m: &DMatrix<f64>, tol: f64, scale: f64) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let qr = PivotedQr::new(m, true);
    qr.rank(rank_thresh(&qr, tol, scale))
}

/// Minimum-norm least-squares solution of `a x = rhs` via the complete
/// orthogonal decomposition, with rank cutoff `tol * max(leading, scale)`.
/// Returns the solution and the residual norm `‖a x - rhs‖`.
pub fn min_norm_solve_scaled(
    a: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    tol: f64,
    scale: f64,
) -> (DMatrix<f64>, f64) {
    let (m, n) = a.shape();
    if n == 0 {
        return (DMatrix::zeros(0, rhs.ncols()), rhs.norm());
    }
    if m == 0 {
        return (DMatrix::zeros(n, rhs.ncols()), 0.0);
    }
    let qr = PivotedQr::new(a, true);
    let rank = qr.rank(rank_thresh(&qr, tol, scale));
    if rank == 0 {
        return (DMatrix::zeros(n, rhs.ncols()), rhs.norm());
    }
    // A P = Q [Rtop; ~0]; a second QR of Rtopᵀ zeroes the off-triangle:
    // Rtopᵀ = Z [T; 0]  =>  A P = Q₁ Tᵀ Z₁ᵀ.
    let rtop = qr.r().rows(0, rank).into_owned();
    let zqr = PivotedQr::new(&rtop.transpose(), false);
    let t = zqr.r().columns(0, rank).into_owned(); // rank×rank upper triangular

    let mut qtb = rhs.clone();
    qr.apply_qt(&mut qtb);
    let c = qtb.rows(0, rank).into_owned();
    // solve Tᵀ w = c (lower triangular, forward substitution)
    let mut w = DMatrix::zeros(rank, rhs.ncols());
    for col in 0..rhs.ncols() {
        for i in 0..rank {
            let mut s = c[(i, col)];
            for k in 0..i {
                s -= t[(k, i)] * w[(k, col)];
            }
            w[(i, col)] = s / t[(i, i)];
        }
    }
    // y = Z₁ w in permuted coordinates; undo the permutation.
    let z1 = zqr.q_columns(0, rank);
    let y = z1 * w;
    let mut x = DMatrix::zeros(n, rhs.ncols());
    for (j, &pj) in qr.permutation().iter().enumerate() {
        for col in 0..rhs.ncols() {
            x[(pj, col)] = y[(j, col)];
        }
    }
    let residual = (a * &x - rhs).norm();
    (x, residual)
}

pub fn min_norm_solve_vec_scaled(
    a: &DMatrix<f64>,
    rhs: &DVector<f64>,
    tol: f64,
    scale: f64,
) -> (DVector<f64>, f64) {
    let rhs_m = DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
    let (x, r) = min_norm_solve_scaled(a, &rhs_m, tol, scale);
    (DVector::from_column_slice(x.as_slice()), r)
}

/// True when every column of `inner` lies in the span of the orthonormal
/// basis `outer`, up to `tol` per unit column norm.
pub fn subspace_contains(outer: &DMatrix<f64>, inner: &DMatrix<f64>, tol: f64) -> bool {
    if inner.ncols() == 0 {
        return true;
    }
    if inner.ncols() > outer.ncols() {
        return false;
    }
    let proj = inner - outer * (outer.transpose() * inner);
    proj.column_iter()
        .zip(inner.column_iter())
        .all(|(p, c)| p.norm() <= tol * c.norm().max(1.0))
}

/// Orthonormal basis of the intersection of the spans of the orthonormal
/// bases `a` and `b`.
pub fn subspace_intersection(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, b.nrows(), "subspace ambient dimensions differ");
    if a.ncols() == 0 || b.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    // x = a u = b v  <=>  [a | -b] (u; v) = 0.
    let mut stacked = DMatrix::zeros(n, a.ncols() + b.ncols());
    stacked.view_mut((0, 0), (n, a.ncols())).copy_from(a);
    stacked
        .view_mut((0, a.ncols()), (n, b.ncols()))
        .copy_from(&(-b));
    let ns = null_space_scaled(&stacked, tol, 1.0);
    if ns.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let coeffs = ns.rows(0, a.ncols()).into_owned();
    let reps = a * coeffs;
    orthonormal_range_scaled(&reps, 0.5, 1.0)
}

/// Spectral norm estimate by power iteration on mᵀm (two deterministic
/// starts, matvec round-off accuracy; no SVD involved).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let mut best = 0.0f64;
    for seed in 0..2u64 {
        let mut x = DVector::from_fn(m.ncols(), |i, _| {
            let h = (i as u64 + 1)
                .wrapping_mul(0x9e3779b97f4a7c15)
                .wrapping_add(seed.wrapping_mul(0xbf58476d1ce4e5b9));
            ((h >> 33) as f64 / (1u64 << 31) as f64) - 1.0 + 1e-3
        });
        let nx = x.norm();
        if nx == 0.0 {
            continue;
        }
        x /= nx;
        let mut estimate = 0.0;
        for _ in 0..200 {
            let y = m * &x;
            let z = m.transpose() * y;
            let nz = z.norm();
            if nz == 0.0 {
                estimate = 0.0;
                break;
            }
            let next = nz.sqrt();
            let done = (next - estimate).abs() <= 1e-12 * next.max(1e-300);
            estimate = next;
            x = z / nz;
            if done {
                break;
            }
        }
        best = best.max(estimate);
    }
    best
}

/// Largest principal-angle sine between the spans of two orthonormal bases.
/// Accurate for small angles (sine-based, not cosine-based). Subspaces of
/// different dimension always report 1.
pub fn max_principal_angle_sine(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let da = b - a * (a.transpose() * b);
    let db = a - b * (b.transpose() * a);
    spectral_norm(&da).max(spectral_norm(&db)).min(1.0)
}

/// Re-orthonormalize `basis` in the diagonal `weights` inner product
/// (columns assumed linearly independent). Returns `w` with
/// `wᵀ diag(weights) w = I` and the same span.
pub fn mass_orthonormalize(basis: &DMatrix<f64>, weights: &DVector<f64>) -> DMatrix<f64> {
    let gram = weighted_gram(basis, weights);
    let chol = gram
        .cholesky()
        .expect("mass Gram matrix must be positive definite");
    let l_inv_t = chol
        .l()
        .transpose()
        .solve_upper_triangular(&DMatrix::identity(basis.ncols(), basis.ncols()))
        .expect("triangular solve");
    basis * l_inv_t
}

/// `basisᵀ diag(weights) basis`.
pub fn weighted_gram(basis: &DMatrix<f64>, weights: &DVector<f64>) -> DMatrix<f64> {
    let mut weighted = basis.clone();
    for (i, mut row) in weighted.row_iter_mut().enumerate() {
        row *= weights[i];
    }
    basis.transpose() * weighted
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending, deterministic
/// column signs (largest-magnitude entry made positive).
pub fn symmetric_eigen_ascending(mat: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = mat.nrows();
    let sym = (mat + mat.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("no NaN eigenvalues")
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = eig.eigenvectors.select_columns(&order);
    for mut col in vectors.column_iter_mut() {
        let mut dominant = 0;
        let mut best = 0.0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                dominant = i;
            }
        }
        if col[dominant] < 0.0 {
            col.neg_mut();
        }
    }
    (values, vectors)
}
