//! Finite-dimensional constraint analysis for linear presymplectic systems.
//!
//! A system is an antisymmetric pairing Ω together with a quadratic
//! Hamiltonian H(x) = ½ xᵀA x + bᵀx + c on ℝⁿ. The Gotay–Nester–Hinds
//! iteration shrinks the phase space to the maximal affine subspace N on
//! which the Hamilton equation ♭(X) = dH admits a solution X tangent to N,
//! then reports the general solution (a particular affine map plus the
//! gauge directions) and the geometric class of N.
//!
//! Everything here is rank-revealing linear algebra; rank decisions use the
//! tolerance carried by the subspaces, floored by the natural scale of the
//! system so that structurally-zero matrices made of round-off are treated
//! as zero.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

/// Quadratic Hamiltonian H(x) = ½ xᵀ A x + bᵀ x + c with A symmetrized on
/// construction.
#[derive(Debug, Clone)]
pub struct QuadraticHamiltonian {
    quadratic: DMatrix<f64>,
    linear: DVector<f64>,
    constant: f64,
}

impl QuadraticHamiltonian {
    pub fn new(quadratic: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Result<Self> {
        if quadratic.nrows() != quadratic.ncols() {
            return Err(Error::Shape(format!(
                "Hamiltonian matrix must be square, got {}x{}",
                quadratic.nrows(),
                quadratic.ncols()
            )));
        }
        if quadratic.nrows() != linear.len() {
            return Err(Error::DimensionMismatch {
                context: "Hamiltonian linear term",
                expected: quadratic.nrows(),
                got: linear.len(),
            });
        }
        let sym = (&quadratic + quadratic.transpose()) * 0.5;
        Ok(Self {
            quadratic: sym,
            linear,
            constant,
        })
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn quadratic(&self) -> &DMatrix<f64> {
        &self.quadratic
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// dH(x) = A x + b.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.quadratic * x + &self.linear
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.quadratic * x)) + self.linear.dot(x) + self.constant
    }
}

/// Antisymmetric bilinear form; antisymmetrized on construction.
#[derive(Debug, Clone)]
pub struct PresymplecticForm {
    matrix: DMatrix<f64>,
}

impl PresymplecticForm {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Shape(format!(
                "form matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let anti = (&matrix - matrix.transpose()) * 0.5;
        Ok(Self { matrix: anti })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// ω(x, y) = xᵀ Ω y.
    pub fn pairing(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.matrix * y))
    }

    pub fn rank(&self, tol: f64) -> usize {
        linalg::rank_scaled(&self.matrix, tol, 0.0)
    }

    /// Orthonormal basis of ker Ω at tolerance `tol`.
    pub fn kernel(&self, tol: f64) -> DMatrix<f64> {
        linalg::null_space_scaled(&self.matrix, tol, 0.0)
    }

    fn scale(&self) -> f64 {
        self.matrix.amax().max(1e-300)
    }
}

/// Presymplectic system (Ω, H) on ℝⁿ.
#[derive(Debug, Clone)]
pub struct PresymplecticSystem {
    pub form: PresymplecticForm,
    pub hamiltonian: QuadraticHamiltonian,
}

impl PresymplecticSystem {
    pub fn new(form: PresymplecticForm, hamiltonian: QuadraticHamiltonian) -> Result<Self> {
        if form.dim() != hamiltonian.dim() {
            return Err(Error::DimensionMismatch {
                context: "form vs Hamiltonian dimension",
                expected: form.dim(),
                got: hamiltonian.dim(),
            });
        }
        Ok(Self { form, hamiltonian })
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    /// Natural magnitude of the linear data, used as an absolute floor for
    /// rank decisions on derived matrices.
    fn data_scale(&self, offset: &DVector<f64>) -> f64 {
        let a = self.hamiltonian.quadratic().amax();
        let b = self.hamiltonian.linear().amax();
        (a * offset.amax().max(1.0) + b).max(1.0)
    }
}

/// Affine subspace `{offset + basis·y}` with a column-orthonormal direction
/// basis, or the empty set.
#[derive(Debug, Clone)]
pub struct AffineSubspace {
    basis: DMatrix<f64>,
    offset: DVector<f64>,
    tol: f64,
    empty: bool,
}

impl AffineSubspace {
    /// The whole ambient space ℝⁿ.
    pub fn full(n: usize, tol: f64) -> Self {
        Self {
            basis: DMatrix::identity(n, n),
            offset: DVector::zeros(n),
            tol,
            empty: false,
        }
    }

    /// Subspace with the given (already column-orthonormal) basis.
    pub fn from_orthonormal(basis: DMatrix<f64>, offset: DVector<f64>, tol: f64) -> Result<Self> {
        if basis.nrows() != offset.len() {
            return Err(Error::DimensionMismatch {
                context: "subspace basis vs offset",
                expected: basis.nrows(),
                got: offset.len(),
            });
        }
        let gram = basis.transpose() * &basis;
        let dev = (&gram - DMatrix::identity(basis.ncols(), basis.ncols())).amax();
        if basis.ncols() > 0 && dev > tol.max(1e-8) {
            return Err(Error::InvalidInput(format!(
                "basis not orthonormal (deviation {dev:.3e})"
            )));
        }
        Ok(Self {
            basis,
            offset,
            tol,
            empty: false,
        })
    }

    /// Subspace spanned by arbitrary (possibly dependent) direction vectors.
    pub fn spanning(directions: &DMatrix<f64>, offset: DVector<f64>, tol: f64) -> Self {
        let basis = linalg::orthonormal_range_scaled(directions, tol, 0.0);
        Self {
            basis,
            offset,
            tol,
            empty: false,
        }
    }

    pub fn point(offset: DVector<f64>, tol: f64) -> Self {
        let n = offset.len();
        Self {
            basis: DMatrix::zeros(n, 0),
            offset,
            tol,
            empty: false,
        }
    }

    pub fn empty(n: usize, tol: f64) -> Self {
        Self {
            basis: DMatrix::zeros(n, 0),
            offset: DVector::zeros(n),
            tol,
            empty: true,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.offset.len()
    }

    /// Dimension of the direction space (0 for points and for the empty set).
    pub fn dim(&self) -> usize {
        if self.empty {
            0
        } else {
            self.basis.ncols()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        if self.empty {
            return false;
        }
        let d = x - &self.offset;
        let residual = &d - &self.basis * (self.basis.transpose() * &d);
        residual.norm() <= self.tol * d.norm().max(1.0)
    }

    /// Containment of `other`'s direction span (and offset) in `self`.
    pub fn contains_subspace(&self, other: &AffineSubspace) -> bool {
        if other.empty {
            return true;
        }
        if self.empty {
            return false;
        }
        linalg::subspace_contains(&self.basis, &other.basis, self.tol)
            && self.contains(&other.offset)
    }

    pub fn equal_to(&self, other: &AffineSubspace) -> bool {
        if self.empty || other.empty {
            return self.empty == other.empty;
        }
        self.dim() == other.dim() && self.contains_subspace(other) && other.contains_subspace(self)
    }

    /// Nearest point of the subspace to `x`.
    pub fn project_point(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = x - &self.offset;
        &self.offset + &self.basis * (self.basis.transpose() * &d)
    }
}

/// General solution of the restricted Hamilton equation on the final
/// subspace: `X(m) = matrix·m + offset` plus any combination of the gauge
/// columns. The gauge basis spans the kernel of the form pulled back to the
/// final subspace (directions both tangent and symplectically orthogonal to
/// it), which is exactly the arbitrariness that survives the tangency
/// conditions.
#[derive(Debug, Clone)]
pub struct VectorFieldSolution {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub gauge: DMatrix<f64>,
}

impl VectorFieldSolution {
    pub fn evaluate(&self, m: &DVector<f64>) -> DVector<f64> {
        &self.matrix * m + &self.offset
    }

    pub fn gauge_dim(&self) -> usize {
        self.gauge.ncols()
    }
}

/// Output of the constraint iteration: the chain M₁ ⊇ M₂ ⊇ …, the final
/// subspace, and the vector-field solution when one exists.
#[derive(Debug, Clone)]
pub struct ConstraintChainResult {
    pub chain: Vec<AffineSubspace>,
    pub final_subspace: AffineSubspace,
    pub terminated: bool,
    pub steps: usize,
    pub vector_field: Option<VectorFieldSolution>,
}

impl ConstraintChainResult {
    pub fn gauge_dim(&self) -> usize {
        self.vector_field.as_ref().map_or(0, |vf| vf.gauge_dim())
    }

    pub fn chain_dims(&self) -> Vec<usize> {
        self.chain.iter().map(|m| m.dim()).collect()
    }
}

/// Geometric class of a constraint subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SubmanifoldClass {
    Lagrangian,
    Isotropic,
    FirstClass,
    SecondClass,
    Mixed,
}

impl std::fmt::Display for SubmanifoldClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SubmanifoldClass::Lagrangian => "Lagrangian",
            SubmanifoldClass::Isotropic => "Isotropic",
            SubmanifoldClass::FirstClass => "FirstClass",
            SubmanifoldClass::SecondClass => "SecondClass",
            SubmanifoldClass::Mixed => "Mixed",
        };
        f.write_str(s)
    }
}

/// Class label plus the raw set relations it was derived from.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub class: SubmanifoldClass,
    /// T N⊥ ⊆ T N
    pub orthogonal_within_tangent: bool,
    /// T N ⊆ T N⊥
    pub tangent_within_orthogonal: bool,
    pub orthogonal_dim: usize,
    pub intersection_dim: usize,
}

/// Covector ω(x, ·) of the pairing against `x`, as a coefficient vector.
pub fn flat_map(form: &PresymplecticForm, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != form.dim() {
        return Err(Error::DimensionMismatch {
            context: "flat map argument",
            expected: form.dim(),
            got: x.len(),
        });
    }
    Ok(form.matrix.transpose() * x)
}

/// Orthonormal basis of the symplectic orthogonal
/// `{z : ω(v, z) = 0 for all v in V}`.
pub fn symplectic_orthogonal(form: &PresymplecticForm, v: &AffineSubspace) -> Result<DMatrix<f64>> {
    if v.ambient_dim() != form.dim() {
        return Err(Error::DimensionMismatch {
            context: "symplectic orthogonal subspace",
            expected: form.dim(),
            got: v.ambient_dim(),
        });
    }
    let pairing_rows = v.basis().transpose() * form.matrix();
    Ok(linalg::null_space_scaled(
        &pairing_rows,
        v.tol(),
        form.scale(),
    ))
}

/// One constraint-algorithm step: the subset of `m` where dH lies in the
/// image of the flat map restricted to `m`'s directions. The empty set is a
/// valid result, not an error. In finite dimensions closures are identities,
/// so no closure step is taken.
pub fn solvability_subspace(
    sys: &PresymplecticSystem,
    m: &AffineSubspace,
) -> Result<AffineSubspace> {
    if m.ambient_dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            context: "solvability subspace",
            expected: sys.dim(),
            got: m.ambient_dim(),
        });
    }
    if m.is_empty() {
        return Ok(m.clone());
    }
    let tol = m.tol();
    let flat_image = sys.form.matrix().transpose() * m.basis();
    let range = linalg::orthonormal_range_scaled(&flat_image, tol, sys.form.scale());
    let complement = linalg::orthonormal_complement(&range);
    if complement.ncols() == 0 {
        // dH is always reachable: the step is the identity.
        return Ok(m.clone());
    }
    // Conditions wᵀ(A(o + D y) + b) = 0 on the internal coordinates y.
    let a = sys.hamiltonian.quadratic();
    let grad_offset = sys.hamiltonian.gradient(m.offset());
    let cond = complement.transpose() * (a * m.basis());
    let rhs = -(complement.transpose() * grad_offset);
    let scale = sys.data_scale(m.offset());
    let (y0, residual) = linalg::min_norm_solve_vec_scaled(&cond, &rhs, tol, scale);
    if residual > 50.0 * tol * scale {
        return Ok(AffineSubspace::empty(sys.dim(), tol));
    }
    let nullspace = linalg::null_space_scaled(&cond, tol, scale);
    let new_basis = m.basis() * nullspace;
    let new_offset = m.offset() + m.basis() * y0;
    AffineSubspace::from_orthonormal(new_basis, new_offset, tol)
}

/// Run the constraint iteration from the full phase space until the chain
/// stabilizes, becomes empty, or `max_steps` subspaces have been produced.
///
/// The returned chain lists the strictly shrinking subspaces starting with
/// the full space; `steps == chain.len()`. Arbitrariness of the linear solve
/// that is fixed by later tangency conditions is folded into the particular
/// solution; the gauge basis holds only what is still free at termination.
pub fn constraint_chain(
    sys: &PresymplecticSystem,
    max_steps: usize,
    tol: f64,
) -> Result<ConstraintChainResult> {
    if max_steps == 0 {
        return Err(Error::InvalidInput("max_steps must be at least 1".into()));
    }
    let n = sys.dim();
    let mut chain = vec![AffineSubspace::full(n, tol)];
    let mut terminated = false;

    loop {
        let current = chain.last().expect("chain never empty");
        if current.is_empty() {
            terminated = true;
            break;
        }
        let next = solvability_subspace(sys, current)?;
        if !next.is_empty() && next.dim() == current.dim() {
            // Nothing was cut: the chain is stable.
            terminated = true;
            break;
        }
        chain.push(next);
        if !terminated && chain.len() > max_steps {
            break;
        }
    }

    let final_subspace = chain.last().expect("chain never empty").clone();
    let vector_field = if terminated && !final_subspace.is_empty() {
        Some(solve_vector_field(sys, &final_subspace)?)
    } else {
        None
    };
    Ok(ConstraintChainResult {
        steps: chain.len(),
        chain,
        final_subspace,
        terminated,
        vector_field,
    })
}

/// General solution of ♭(X) = dH on `n` with X tangent to `n`: minimum-norm
/// particular affine map plus the gauge directions (tangent vectors the
/// restricted form pairs with nothing).
fn solve_vector_field(
    sys: &PresymplecticSystem,
    n_sub: &AffineSubspace,
) -> Result<VectorFieldSolution> {
    let tol = n_sub.tol();
    let d = n_sub.basis();
    let o = n_sub.offset();
    let flat_on_tangent = sys.form.matrix().transpose() * d; // n×k
    let a = sys.hamiltonian.quadratic();
    let scale = sys.data_scale(o).max(sys.form.scale());

    // Coefficients of X(m) in the tangent basis: X = D·(Cy·y + c0) with
    // B·Cy = A·D and B·c0 = A o + b.
    let (coeff_map, _res_map) = solve_tall(&flat_on_tangent, &(a * d), tol, scale);
    let grad_offset = sys.hamiltonian.gradient(o);
    let grad_mat = DMatrix::from_column_slice(grad_offset.len(), 1, grad_offset.as_slice());
    let (coeff_off, _res_off) = solve_tall(&flat_on_tangent, &grad_mat, tol, scale);

    // Rewrite in ambient coordinates: y = Dᵀ(m - o).
    let matrix = d * &coeff_map * d.transpose();
    let offset = d * DVector::from_column_slice(coeff_off.as_slice()) - &matrix * o;

    let perp = symplectic_orthogonal(&sys.form, n_sub)?;
    let gauge = linalg::subspace_intersection(d, &perp, tol);

    Ok(VectorFieldSolution {
        matrix,
        offset,
        gauge,
    })
}

/// Solve `b x = rhs` preferring a fast LU path for square well-posed
/// systems, falling back to the SVD pseudo-inverse.
fn solve_tall(
    b: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    tol: f64,
    scale: f64,
) -> (DMatrix<f64>, f64) {
    if b.nrows() == b.ncols() && b.nrows() > 0 {
        if let Some(x) = b.clone().lu().solve(rhs) {
            let residual = (b * &x - rhs).amax();
            if residual <= 100.0 * tol * scale.max(1.0) {
                return (x, residual);
            }
        }
    }
    linalg::min_norm_solve_scaled(b, rhs, tol, scale)
}

/// Classify `n_sub` by the set relations between its tangent space and the
/// symplectic orthogonal, reporting the most specific applicable label.
///
/// When the orthogonal is trivial both the first- and second-class relations
/// hold vacuously; the second-class label is the meaningful one (the
/// restricted form is nondegenerate), so the precedence used here is
/// Lagrangian > Isotropic > SecondClass > FirstClass > Mixed.
pub fn classify_submanifold(
    form: &PresymplecticForm,
    n_sub: &AffineSubspace,
) -> Result<ClassificationReport> {
    let tol = n_sub.tol();
    let tangent = n_sub.basis();
    let perp = symplectic_orthogonal(form, n_sub)?;
    let intersection = linalg::subspace_intersection(tangent, &perp, tol);

    let orthogonal_within_tangent = linalg::subspace_contains(tangent, &perp, tol);
    let tangent_within_orthogonal = linalg::subspace_contains(&perp, tangent, tol);
    let lagrangian = orthogonal_within_tangent
        && tangent_within_orthogonal
        && perp.ncols() == tangent.ncols();
    let second = intersection.ncols() == 0;

    let class = if lagrangian {
        SubmanifoldClass::Lagrangian
    } else if tangent_within_orthogonal {
        SubmanifoldClass::Isotropic
    } else if second {
        SubmanifoldClass::SecondClass
    } else if orthogonal_within_tangent {
        SubmanifoldClass::FirstClass
    } else {
        SubmanifoldClass::Mixed
    };

    Ok(ClassificationReport {
        class,
        orthogonal_within_tangent,
        tangent_within_orthogonal,
        orthogonal_dim: perp.ncols(),
        intersection_dim: intersection.ncols(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::default_rank_tol;

    fn canonical_2d() -> PresymplecticForm {
        PresymplecticForm::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).unwrap()
    }

    /// ω = dq1∧dp1 on coordinates ordered (q1, q2, p1, p2).
    fn degenerate_4d() -> PresymplecticForm {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 2)] = 1.0;
        m[(2, 0)] = -1.0;
        PresymplecticForm::new(m).unwrap()
    }

    #[test]
    fn flat_map_examples() {
        let form = canonical_2d();
        let cov = flat_map(&form, &DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(cov.as_slice(), &[0.0, 1.0]);

        let zero = PresymplecticForm::new(DMatrix::zeros(2, 2)).unwrap();
        let cov = flat_map(&zero, &DVector::from_vec(vec![3.0, 5.0])).unwrap();
        assert_eq!(cov.as_slice(), &[0.0, 0.0]);

        let form4 = degenerate_4d();
        let e_q2 = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(flat_map(&form4, &e_q2).unwrap().norm(), 0.0);

        assert!(matches!(
            flat_map(&form4, &DVector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn symplectic_orthogonal_examples() {
        let tol = default_rank_tol(4);
        // Nondegenerate form, V = whole space -> {0}.
        let form = canonical_2d();
        let v = AffineSubspace::full(2, default_rank_tol(2));
        assert_eq!(symplectic_orthogonal(&form, &v).unwrap().ncols(), 0);

        // Zero form pairs nothing.
        let zero = PresymplecticForm::new(DMatrix::zeros(3, 3)).unwrap();
        let v = AffineSubspace::full(3, default_rank_tol(3));
        assert_eq!(symplectic_orthogonal(&zero, &v).unwrap().ncols(), 3);

        // V = span{e_p2} under dq1∧dp1: everything is orthogonal.
        let form4 = degenerate_4d();
        let basis = DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 0.0, 1.0]);
        let v = AffineSubspace::from_orthonormal(basis, DVector::zeros(4), tol).unwrap();
        assert_eq!(symplectic_orthogonal(&form4, &v).unwrap().ncols(), 4);
    }

    fn toy_system() -> PresymplecticSystem {
        // H = ½ p1² + q1 q2 on (q1, q2, p1, p2).
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = 1.0;
        a[(2, 2)] = 1.0;
        PresymplecticSystem::new(
            degenerate_4d(),
            QuadraticHamiltonian::new(a, DVector::zeros(4), 0.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn solvability_examples() {
        let tol = default_rank_tol(4);
        // Canonical form: range of the flat map is everything.
        let form = canonical_2d();
        let ham = QuadraticHamiltonian::new(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, -2.0]),
            0.0,
        )
        .unwrap();
        let sys = PresymplecticSystem::new(form, ham).unwrap();
        let m = AffineSubspace::full(2, default_rank_tol(2));
        let next = solvability_subspace(&sys, &m).unwrap();
        assert!(next.equal_to(&m));

        // Toy: first restriction is {q1 = 0}.
        let sys = toy_system();
        let m1 = AffineSubspace::full(4, tol);
        let m2 = solvability_subspace(&sys, &m1).unwrap();
        assert_eq!(m2.dim(), 3);
        assert!(!m2.contains(&DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0])));
        assert!(m2.contains(&DVector::from_vec(vec![0.0, 2.0, -1.0, 3.0])));

        // Zero form with a pure linear Hamiltonian: inconsistent.
        let zero = PresymplecticForm::new(DMatrix::zeros(2, 2)).unwrap();
        let ham = QuadraticHamiltonian::new(
            DMatrix::zeros(2, 2),
            DVector::from_vec(vec![1.0, 0.0]),
            0.0,
        )
        .unwrap();
        let sys = PresymplecticSystem::new(zero, ham).unwrap();
        let next = solvability_subspace(&sys, &AffineSubspace::full(2, default_rank_tol(2)))
            .unwrap();
        assert!(next.is_empty());
    }

    #[test]
    fn free_particle_chain() {
        let form = canonical_2d();
        let mut a = DMatrix::zeros(2, 2);
        a[(1, 1)] = 1.0; // H = ½ p²
        let ham = QuadraticHamiltonian::new(a, DVector::zeros(2), 0.0).unwrap();
        let sys = PresymplecticSystem::new(form, ham).unwrap();
        let result = constraint_chain(&sys, 10, default_rank_tol(2)).unwrap();
        assert!(result.terminated);
        assert_eq!(result.chain_dims(), vec![2]);
        let vf = result.vector_field.unwrap();
        assert_eq!(vf.gauge_dim(), 0);
        let x = vf.evaluate(&DVector::from_vec(vec![0.3, -1.7]));
        assert!((x[0] - (-1.7)).abs() < 1e-12);
        assert!(x[1].abs() < 1e-12);
    }

    #[test]
    fn toy_chain_hand_checked() {
        let sys = toy_system();
        let tol = default_rank_tol(4);
        let result = constraint_chain(&sys, 10, tol).unwrap();
        assert!(result.terminated);
        assert_eq!(result.chain_dims(), vec![4, 3, 2, 1]);
        // Final subspace is the p2 axis.
        let fin = &result.final_subspace;
        assert!(fin.contains(&DVector::from_vec(vec![0.0, 0.0, 0.0, 5.0])));
        assert!(!fin.contains(&DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0])));
        // The only arbitrariness still tangent to N is the p2 direction;
        // the q2 freedom of the raw linear solve is fixed by tangency.
        let vf = result.vector_field.unwrap();
        assert_eq!(vf.gauge_dim(), 1);
        assert!(vf.gauge[(3, 0)].abs() > 0.999);
        // On N the dynamics is trivial.
        let x = vf.evaluate(&DVector::from_vec(vec![0.0, 0.0, 0.0, 2.0]));
        assert!(x.norm() < 1e-12);
    }

    #[test]
    fn chain_max_steps_cutoff() {
        let sys = toy_system();
        let result = constraint_chain(&sys, 1, default_rank_tol(4)).unwrap();
        assert!(!result.terminated);
        assert!(result.vector_field.is_none());
        assert!(result.chain.len() >= 2);
    }

    #[test]
    fn empty_final_subspace_has_no_vector_field() {
        let zero = PresymplecticForm::new(DMatrix::zeros(2, 2)).unwrap();
        let ham = QuadraticHamiltonian::new(
            DMatrix::zeros(2, 2),
            DVector::from_vec(vec![0.0, 1.0]),
            0.0,
        )
        .unwrap();
        let sys = PresymplecticSystem::new(zero, ham).unwrap();
        let result = constraint_chain(&sys, 10, default_rank_tol(2)).unwrap();
        assert!(result.terminated);
        assert!(result.final_subspace.is_empty());
        assert!(result.vector_field.is_none());
    }

    #[test]
    fn classification_examples() {
        let tol = default_rank_tol(2);
        // Zero-momentum line in the canonical plane is Lagrangian.
        let form = canonical_2d();
        let line = AffineSubspace::from_orthonormal(
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            DVector::zeros(2),
            tol,
        )
        .unwrap();
        let report = classify_submanifold(&form, &line).unwrap();
        assert_eq!(report.class, SubmanifoldClass::Lagrangian);
        assert!(report.orthogonal_within_tangent && report.tangent_within_orthogonal);

        // Whole nondegenerate space: trivial orthogonal, second class.
        let full = AffineSubspace::full(2, tol);
        let report = classify_submanifold(&form, &full).unwrap();
        assert_eq!(report.class, SubmanifoldClass::SecondClass);

        // p2 axis under dq1∧dp1 is isotropic.
        let form4 = degenerate_4d();
        let axis = AffineSubspace::from_orthonormal(
            DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 0.0, 1.0]),
            DVector::zeros(4),
            default_rank_tol(4),
        )
        .unwrap();
        let report = classify_submanifold(&form4, &axis).unwrap();
        assert_eq!(report.class, SubmanifoldClass::Isotropic);
    }

    #[test]
    fn form_rank_is_even() {
        let form4 = degenerate_4d();
        assert_eq!(form4.rank(1e-10), 2);
        let form = canonical_2d();
        assert_eq!(form.rank(1e-10), 2);
    }
}
