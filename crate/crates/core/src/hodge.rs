//! Discrete Hodge decomposition of edge fields into harmonic, transverse
//! and longitudinal parts under relative or absolute boundary conditions.
//!
//! Two routes are provided and kept independent. The default projector
//! solves a scalar Poisson problem for the longitudinal potential and
//! projects onto the harmonic kernel; the eigenbasis route classifies the
//! eigenvectors of the vector Laplacian (cluster by cluster, so degenerate
//! eigenvalues shared between gradient-type and curl-type modes are split
//! correctly) and serves as the cross-check oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linalg;
use crate::ops::{
    build_grad_bc, build_vector_laplacian_stiffness, BoundaryConditionSpec, DiscreteOperator,
    SparseMatrix, VectorBc,
};
use crate::spectral;

/// Mass-orthonormal basis of the harmonic edge fields (curl-free and
/// weak-divergence-free with the boundary condition's traces).
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub vectors: DMatrix<f64>,
}

impl HarmonicBasis {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

/// The three mutually mass-orthogonal parts of an edge field.
#[derive(Debug, Clone)]
pub struct HodgeDecomposition {
    pub harmonic: DVector<f64>,
    pub transverse: DVector<f64>,
    pub longitudinal: DVector<f64>,
    pub bc: VectorBc,
}

impl HodgeDecomposition {
    pub fn reconstruct(&self) -> DVector<f64> {
        &self.harmonic + &self.transverse + &self.longitudinal
    }
}

/// Gauge used by the scalar Poisson solve behind the longitudinal
/// projector. The Neumann problem is singular; without a gauge the solve is
/// refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonGauge {
    None,
    ZeroMean,
}

enum PoissonSolver {
    /// Dirichlet stiffness is positive definite.
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    /// Neumann stiffness bordered with the mass vector (zero-mean gauge).
    Bordered(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, usize),
}

/// Reusable factorized projectors for one grid and boundary condition.
pub struct HodgeProjector {
    bc: VectorBc,
    grad: DiscreteOperator,
    solver: PoissonSolver,
    harmonic: HarmonicBasis,
    edge_mass: DVector<f64>,
}

fn scalar_poisson_solver(
    stiffness: &SparseMatrix,
    node_mass: &DVector<f64>,
    gauge: PoissonGauge,
    singular: bool,
) -> Result<PoissonSolver> {
    let k = stiffness.to_dense();
    if !singular {
        let chol = k
            .cholesky()
            .ok_or_else(|| Error::SingularSolve("Dirichlet stiffness not positive definite".into()))?;
        return Ok(PoissonSolver::Cholesky(chol));
    }
    match gauge {
        PoissonGauge::None => Err(Error::SingularSolve(
            "scalar Poisson problem is singular; the zero-mean gauge is required".into(),
        )),
        PoissonGauge::ZeroMean => {
            let n = k.nrows();
            let mut bordered = DMatrix::zeros(n + 1, n + 1);
            bordered.view_mut((0, 0), (n, n)).copy_from(&k);
            for i in 0..n {
                bordered[(i, n)] = node_mass[i];
                bordered[(n, i)] = node_mass[i];
            }
            Ok(PoissonSolver::Bordered(bordered.lu(), n))
        }
    }
}

impl PoissonSolver {
    fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            PoissonSolver::Cholesky(chol) => Ok(chol.solve(rhs)),
            PoissonSolver::Bordered(lu, n) => {
                let mut padded = DVector::zeros(n + 1);
                padded.rows_mut(0, *n).copy_from(rhs);
                let sol = lu
                    .solve(&padded)
                    .ok_or_else(|| Error::SingularSolve("bordered Poisson solve failed".into()))?;
                Ok(sol.rows(0, *n).into_owned())
            }
        }
    }
}

impl HodgeProjector {
    pub fn new(grid: &GridSpec, bc: &BoundaryConditionSpec) -> Result<Self> {
        if grid.dim() < 2 {
            return Err(Error::Unsupported(
                "Hodge decomposition needs a 2-D or 3-D grid".into(),
            ));
        }
        let grad = build_grad_bc(grid, bc)?;
        let stiffness = grad.matrix.gram_weighted(&grad.row_mass);
        let (gauge, singular) = match bc.vector {
            VectorBc::Relative => (PoissonGauge::None, false),
            VectorBc::Absolute => (PoissonGauge::ZeroMean, true),
        };
        let solver = scalar_poisson_solver(&stiffness, &grad.col_mass, gauge, singular)?;
        let harmonic = harmonic_basis(grid, bc)?;
        Ok(Self {
            bc: bc.vector,
            edge_mass: grad.row_mass.clone(),
            grad,
            solver,
            harmonic,
        })
    }

    pub fn harmonic(&self) -> &HarmonicBasis {
        &self.harmonic
    }

    pub fn bc(&self) -> VectorBc {
        self.bc
    }

    pub fn edge_dim(&self) -> usize {
        self.edge_mass.len()
    }

    /// Edge-mass inner product.
    pub fn mass_dot(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.iter()
            .zip(y.iter())
            .zip(self.edge_mass.iter())
            .map(|((a, b), m)| a * b * m)
            .sum()
    }

    pub fn mass_norm(&self, x: &DVector<f64>) -> f64 {
        self.mass_dot(x, x).sqrt()
    }

    /// Longitudinal potential: φ solving gradᵀM grad φ = gradᵀM u.
    pub fn longitudinal_potential(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let weighted = DVector::from_iterator(
            u.len(),
            u.iter().zip(self.edge_mass.iter()).map(|(v, m)| v * m),
        );
        let rhs = self.grad.matrix.apply_transpose(&weighted);
        self.solver.solve(&rhs)
    }

    pub fn decompose(&self, u: &DVector<f64>) -> Result<HodgeDecomposition> {
        if u.len() != self.edge_dim() {
            return Err(Error::DimensionMismatch {
                context: "Hodge decomposition input",
                expected: self.edge_dim(),
                got: u.len(),
            });
        }
        let phi = self.longitudinal_potential(u)?;
        let longitudinal = self.grad.apply(&phi);
        let mut harmonic = DVector::zeros(u.len());
        for k in 0..self.harmonic.dim() {
            let h = self.harmonic.vectors.column(k);
            let c = self.mass_dot(&h.into_owned(), u);
            harmonic += self.harmonic.vectors.column(k) * c;
        }
        let transverse = u - &longitudinal - &harmonic;
        Ok(HodgeDecomposition {
            harmonic,
            transverse,
            longitudinal,
            bc: self.bc,
        })
    }

    /// Divergence-free (harmonic ⊕ transverse) part of `u`.
    pub fn project_physical(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let phi = self.longitudinal_potential(u)?;
        Ok(u - self.grad.apply(&phi))
    }
}

/// Mass-orthonormal kernel of the vector Laplacian with the given boundary
/// condition, extracted at the spectral kernel tolerance.
pub fn harmonic_basis(grid: &GridSpec, bc: &BoundaryConditionSpec) -> Result<HarmonicBasis> {
    let k_vec = build_vector_laplacian_stiffness(grid, bc)?;
    let grad = build_grad_bc(grid, bc)?;
    let edge_mass = grad.row_mass.clone();
    let inv = DVector::from_iterator(edge_mass.len(), edge_mass.iter().map(|m| 1.0 / m));
    let endo = DiscreteOperator {
        rows: grad.rows.clone(),
        cols: grad.rows.clone(),
        matrix: k_vec.scale_rows(&inv),
        row_mass: edge_mass.clone(),
        col_mass: edge_mass,
    };
    let dec = spectral::eigendecompose(&endo, None, 1e-9)?;
    let kc = dec.kernel_count();
    Ok(HarmonicBasis {
        vectors: dec.eigenvectors().columns(0, kc).into_owned(),
    })
}

/// Poisson-projector Hodge decomposition (builds the projector afresh; use
/// [`HodgeProjector`] to amortize the factorization).
pub fn hodge_decompose(
    grid: &GridSpec,
    bc: &BoundaryConditionSpec,
    u: &DVector<f64>,
) -> Result<HodgeDecomposition> {
    HodgeProjector::new(grid, bc)?.decompose(u)
}

/// Divergence-free projection (harmonic ⊕ transverse sector).
pub fn project_physical(
    grid: &GridSpec,
    bc: &BoundaryConditionSpec,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    HodgeProjector::new(grid, bc)?.project_physical(u)
}

/// Eigenbasis-route decomposition: classify the vector-Laplacian
/// eigenvectors as longitudinal (gradient-type) or transverse, cluster by
/// cluster. Retained as an independent cross-check of the Poisson route.
pub fn hodge_decompose_eigenroute(
    grid: &GridSpec,
    bc: &BoundaryConditionSpec,
    u: &DVector<f64>,
) -> Result<HodgeDecomposition> {
    let k_vec = build_vector_laplacian_stiffness(grid, bc)?;
    let grad = build_grad_bc(grid, bc)?;
    let edge_mass = grad.row_mass.clone();
    let n = edge_mass.len();
    if u.len() != n {
        return Err(Error::DimensionMismatch {
            context: "Hodge decomposition input",
            expected: n,
            got: u.len(),
        });
    }
    let inv = DVector::from_iterator(n, edge_mass.iter().map(|m| 1.0 / m));
    let endo = DiscreteOperator {
        rows: grad.rows.clone(),
        cols: grad.rows.clone(),
        matrix: k_vec.scale_rows(&inv),
        row_mass: edge_mass.clone(),
        col_mass: edge_mass.clone(),
    };
    let dec = spectral::eigendecompose(&endo, None, 1e-9)?;
    let values = dec.eigenvalues();
    let vectors = dec.eigenvectors();
    let kc = dec.kernel_count();

    // Euclidean coordinates w = M^{1/2} v make the classification an
    // ordinary orthogonal projection problem.
    let sqrt_m = edge_mass.map(f64::sqrt);
    let mut grad_range = grad.matrix.to_dense();
    for (i, mut row) in grad_range.row_iter_mut().enumerate() {
        row *= sqrt_m[i];
    }
    let grad_range = linalg::orthonormal_range(&grad_range, 1e-12);

    let mut longitudinal = DVector::zeros(n);
    let mut transverse = DVector::zeros(n);
    let mut harmonic = DVector::zeros(n);
    for k in 0..kc {
        let v = vectors.column(k).into_owned();
        let c = dec.mass_dot(&v, u);
        harmonic += v * c;
    }

    let lambda_max = values.amax().max(1.0);
    let mut start = kc;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len()
            && values[end] - values[end - 1] <= 1e-8 * lambda_max
        {
            end += 1;
        }
        // Split the cluster into gradient-type and curl-type directions: the
        // squared cosines against the gradient range are exactly 0 or 1, so
        // the eigenvectors of the little Gram matrix rotate the cluster into
        // pure longitudinal and pure transverse columns.
        let cols: Vec<usize> = (start..end).collect();
        let block = vectors.select_columns(&cols);
        let mut block_w = block.clone();
        for (i, mut row) in block_w.row_iter_mut().enumerate() {
            row *= sqrt_m[i];
        }
        let cosines = grad_range.transpose() * &block_w;
        let gram = cosines.transpose() * &cosines;
        let (cos_sq, rot) = linalg::symmetric_eigen_ascending(&gram);
        let rotated_w = &block_w * &rot;
        for col in 0..rotated_w.ncols() {
            let w = rotated_w.column(col);
            // back to mass coordinates
            let vcol = DVector::from_iterator(n, w.iter().zip(sqrt_m.iter()).map(|(v, s)| v / s));
            let c = dec.mass_dot(&vcol, u);
            if cos_sq[col] > 0.5 {
                longitudinal += &vcol * c;
            } else {
                transverse += &vcol * c;
            }
        }
        start = end;
    }

    Ok(HodgeDecomposition {
        harmonic,
        transverse,
        longitudinal,
        bc: bc.vector,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::HoleBox;
    use crate::ops::build_weak_div;

    fn pseudo_random(n: usize, seed: u64) -> DVector<f64> {
        DVector::from_fn(n, |i, _| {
            let x = (i as u64 + 1)
                .wrapping_mul(6364136223846793005)
                .wrapping_add(seed.wrapping_mul(1442695040888963407));
            ((x >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        })
    }

    #[test]
    fn harmonic_dimensions_match_topology() {
        // Independent count from the Euler formula on connected 2-D grids:
        // relative:  E_free - interior_nodes - (cells - 1)
        // absolute:  E_all  - (nodes - 1)    - cells
        let box2 = GridSpec::rect([6, 5], [0.2, 0.2]).unwrap();
        let holed = GridSpec::rect_with_hole([8, 8], [0.125, 0.125], HoleBox { lo: [3, 3], hi: [5, 5] })
            .unwrap();
        for grid in [&box2, &holed] {
            let euler_rel = grid.free_edges().len() as i64
                - grid.interior_nodes().len() as i64
                - (grid.cell_count() as i64 - 1);
            let euler_abs = grid.edge_count() as i64
                - (grid.node_count() as i64 - 1)
                - grid.cell_count() as i64;
            let rel = harmonic_basis(grid, &BoundaryConditionSpec::relative()).unwrap();
            let abs = harmonic_basis(grid, &BoundaryConditionSpec::absolute()).unwrap();
            assert_eq!(rel.dim() as i64, euler_rel);
            assert_eq!(abs.dim() as i64, euler_abs);
        }
        assert_eq!(
            harmonic_basis(&box2, &BoundaryConditionSpec::relative()).unwrap().dim(),
            0
        );
        let rel = harmonic_basis(&holed, &BoundaryConditionSpec::relative()).unwrap();
        let abs = harmonic_basis(&holed, &BoundaryConditionSpec::absolute()).unwrap();
        assert_eq!(rel.dim(), 1);
        assert_eq!(abs.dim(), 1);

        let box3 = GridSpec::box3([3, 3, 3], [0.3, 0.3, 0.3]).unwrap();
        for bc in [BoundaryConditionSpec::relative(), BoundaryConditionSpec::absolute()] {
            assert_eq!(harmonic_basis(&box3, &bc).unwrap().dim(), 0);
        }
    }

    #[test]
    fn decomposition_of_pure_gradient() {
        let grid = GridSpec::rect([5, 4], [0.2, 0.25]).unwrap();
        for bc in [BoundaryConditionSpec::relative(), BoundaryConditionSpec::absolute()] {
            let grad = build_grad_bc(&grid, &bc).unwrap();
            let phi = pseudo_random(grad.matrix.shape().1, 3);
            let u = grad.apply(&phi);
            let dec = hodge_decompose(&grid, &bc, &u).unwrap();
            let scale = u.norm().max(1.0);
            assert!((dec.reconstruct() - &u).norm() < 1e-10 * scale);
            assert!(dec.harmonic.norm() < 1e-10 * scale);
            assert!(dec.transverse.norm() < 1e-10 * scale);
            assert!(project_physical(&grid, &bc, &u).unwrap().norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn decomposition_of_curl_adjoint_has_no_longitudinal_part() {
        let grid = GridSpec::rect([5, 5], [0.2, 0.2]).unwrap();
        for bc in [BoundaryConditionSpec::relative(), BoundaryConditionSpec::absolute()] {
            let curl = crate::ops::build_curl_bc(&grid, &bc).unwrap();
            let psi = pseudo_random(curl.matrix.shape().0, 9);
            let u = curl.mass_adjoint_apply(&psi);
            let dec = hodge_decompose(&grid, &bc, &u).unwrap();
            assert!(dec.longitudinal.norm() < 1e-10 * u.norm().max(1.0));
        }
    }

    #[test]
    fn random_field_parts_are_orthogonal_and_divergence_free() {
        let grid = GridSpec::rect_with_hole([8, 8], [0.125, 0.125], HoleBox { lo: [3, 3], hi: [5, 5] })
            .unwrap();
        for bc in [BoundaryConditionSpec::relative(), BoundaryConditionSpec::absolute()] {
            let proj = HodgeProjector::new(&grid, &bc).unwrap();
            let div = build_weak_div(&grid, &bc).unwrap();
            let u = pseudo_random(proj.edge_dim(), 17);
            let dec = proj.decompose(&u).unwrap();
            let scale = u.norm();
            assert!((dec.reconstruct() - &u).norm() < 1e-10 * scale);
            assert!(proj.mass_dot(&dec.harmonic, &dec.transverse).abs() < 1e-10 * scale * scale);
            assert!(proj.mass_dot(&dec.harmonic, &dec.longitudinal).abs() < 1e-10 * scale * scale);
            assert!(proj.mass_dot(&dec.transverse, &dec.longitudinal).abs() < 1e-10 * scale * scale);
            let physical = &dec.harmonic + &dec.transverse;
            assert!(div.apply(&physical).norm() < 1e-10 * scale);
            // idempotence
            let once = proj.project_physical(&u).unwrap();
            let twice = proj.project_physical(&once).unwrap();
            assert!((&once - &twice).norm() < 1e-10 * scale);
            // complement orthogonality
            assert!(proj.mass_dot(&dec.longitudinal, &once).abs() < 1e-10 * scale * scale);
        }
    }

    #[test]
    fn curl_curl_preserves_the_physical_sector() {
        let grid = GridSpec::rect_with_hole([8, 8], [0.125, 0.125], HoleBox { lo: [3, 3], hi: [5, 5] })
            .unwrap();
        for bc in [BoundaryConditionSpec::relative(), BoundaryConditionSpec::absolute()] {
            let cc = crate::ops::build_curl_curl(&grid, &bc).unwrap();
            let proj = HodgeProjector::new(&grid, &bc).unwrap();
            let u = pseudo_random(proj.edge_dim(), 23);
            let image = cc.apply(&u);
            let dec = proj.decompose(&image).unwrap();
            assert!(
                dec.longitudinal.norm() <= 1e-10 * u.norm().max(1.0),
                "curl-curl image leaked into the longitudinal sector"
            );
        }
    }

    #[test]
    fn eigenroute_agrees_with_poisson_route() {
        // The square grid has degenerate eigenvalues shared by gradient- and
        // curl-type modes, exercising the cluster splitting.
        let grid = GridSpec::rect([6, 6], [1.0 / 6.0, 1.0 / 6.0]).unwrap();
        for bc in [BoundaryConditionSpec::relative(), BoundaryConditionSpec::absolute()] {
            let u = pseudo_random(
                build_grad_bc(&grid, &bc).unwrap().matrix.shape().0,
                31,
            );
            let a = hodge_decompose(&grid, &bc, &u).unwrap();
            let b = hodge_decompose_eigenroute(&grid, &bc, &u).unwrap();
            let scale = u.norm();
            assert!((&a.longitudinal - &b.longitudinal).norm() < 1e-8 * scale);
            assert!((&a.transverse - &b.transverse).norm() < 1e-8 * scale);
            assert!((&a.harmonic - &b.harmonic).norm() < 1e-8 * scale);
        }
    }

    #[test]
    fn neumann_poisson_without_gauge_is_refused() {
        let grid = GridSpec::rect([4, 4], [0.25, 0.25]).unwrap();
        let bc = BoundaryConditionSpec::absolute();
        let grad = build_grad_bc(&grid, &bc).unwrap();
        let stiffness = grad.matrix.gram_weighted(&grad.row_mass);
        let err = scalar_poisson_solver(&stiffness, &grad.col_mass, PoissonGauge::None, true)
            .err()
            .expect("must refuse");
        let msg = err.to_string();
        assert!(msg.contains("zero-mean gauge"), "error should name the gauge: {msg}");
    }
}
