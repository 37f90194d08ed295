//! The concrete boundary-field models: scalar waves under
//! Dirichlet/Neumann/Robin conditions and Maxwell under relative (perfect
//! conductor) or absolute conditions, assembled as presymplectic systems
//! and evolved with the exact spectral propagator.
//!
//! Phase-space conventions:
//! * scalar: x = (Q, P) on the bc's nodal space, Ω the canonical pairing in
//!   the nodal mass inner product, H = ½(⟨P,P⟩ + ⟨∇Q,∇Q⟩ [+ Robin term]);
//! * Maxwell: x = (Q⊥, Q⃗, P⃗); Ω pairs only Q⃗ with P⃗ in the edge mass
//!   inner product (the Q⊥ directions are the degenerate image of the
//!   primary constraint: the perpendicular momentum is omitted entirely),
//!   H = ½⟨P⃗,P⃗⟩ − ⟨P⃗,∇Q⊥⟩ + ½⟨∇×Q⃗,∇×Q⃗⟩.
//!
//! Evolution splits a Maxwell state into Hodge sectors: the divergence-free
//! sector rotates under the curl-curl spectrum with harmonic modes drifting
//! linearly (Q̇_h = P_h, Ṗ_h = 0), while the longitudinal sector and Q⊥
//! follow the chosen gauge. Field strengths (curl Q⃗) and P⃗ never depend
//! on the gauge choice.

use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::hodge::HodgeProjector;
use crate::linalg;
use crate::ops::{
    self, BoundaryConditionSpec, DiscreteOperator, ScalarBc, SparseMatrix, TraceKind, VectorBc,
};
use crate::presym::{PresymplecticForm, PresymplecticSystem, QuadraticHamiltonian};
use crate::spectral::{self, SpectralDecomposition, WaveState};

/// Default relative tolerance on constraint residuals for evolution
/// preconditions.
pub const DEFAULT_CTOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ScalarState {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

/// Scalar wave model on the boundary condition's nodal space.
pub struct ScalarModel {
    pub grid: GridSpec,
    pub bc: BoundaryConditionSpec,
    /// Δ, symmetric nonpositive in the mass inner product
    pub laplacian: DiscreteOperator,
    /// K = gradᵀ M_e grad (+ Robin boundary term)
    pub stiffness: SparseMatrix,
    decomposition: OnceLock<SpectralDecomposition>,
}

impl ScalarModel {
    pub fn new(grid: GridSpec, bc: BoundaryConditionSpec) -> Result<Self> {
        let laplacian = ops::build_scalar_laplacian(&grid, &bc)?;
        let stiffness = ops::build_scalar_stiffness(&grid, &bc)?;
        Ok(Self {
            grid,
            bc,
            laplacian,
            stiffness,
            decomposition: OnceLock::new(),
        })
    }

    /// Number of nodal unknowns.
    pub fn dof(&self) -> usize {
        self.laplacian.shape().0
    }

    pub fn node_mass(&self) -> &DVector<f64> {
        &self.laplacian.row_mass
    }

    /// Spectral decomposition of -Δ, built on first use.
    pub fn decomposition(&self) -> Result<&SpectralDecomposition> {
        if self.decomposition.get().is_none() {
            let dec = spectral::eigendecompose(&self.laplacian.scaled(-1.0), None, 1e-10)?;
            let _ = self.decomposition.set(dec);
        }
        Ok(self.decomposition.get().expect("just initialized"))
    }

    pub fn energy(&self, s: &ScalarState) -> f64 {
        let kinetic: f64 = s
            .p
            .iter()
            .zip(self.node_mass().iter())
            .map(|(p, m)| p * p * m)
            .sum();
        let potential = s.q.dot(&self.stiffness.apply(&s.q));
        0.5 * (kinetic + potential)
    }
}

/// Stacked presymplectic system (Q, P) for the scalar model: canonical Ω in
/// the mass inner product, A = diag(K, M), b = 0.
pub fn assemble_scalar_system(model: &ScalarModel) -> Result<PresymplecticSystem> {
    let m = model.dof();
    let mass = model.node_mass();
    let n = 2 * m;
    let mut omega = DMatrix::zeros(n, n);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..m {
        omega[(i, m + i)] = mass[i];
        omega[(m + i, i)] = -mass[i];
        a[(m + i, m + i)] = mass[i];
    }
    for &(r, c, v) in model.stiffness.triplets() {
        a[(r, c)] = v;
    }
    PresymplecticSystem::new(
        PresymplecticForm::new(omega)?,
        QuadraticHamiltonian::new(a, DVector::zeros(n), 0.0)?,
    )
}

/// Exact evolution by `t` via the spectral propagator of -Δ.
pub fn evolve_scalar(model: &ScalarModel, s: &ScalarState, t: f64) -> Result<ScalarState> {
    let dec = model.decomposition()?;
    let state = WaveState::new(s.q.clone(), s.p.clone(), 0.0)?;
    let out = spectral::propagate(dec, &state, t)?;
    Ok(ScalarState { q: out.q, p: out.v })
}

#[derive(Debug, Clone)]
pub struct MaxwellState {
    pub q_perp: DVector<f64>,
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

/// How the undetermined perpendicular-potential rate is fixed during
/// evolution. `FixedPotential` holds Q⊥ constant (the rate the omitted
/// perpendicular momentum would dictate); `Rate` applies a constant
/// arbitrary rate.
#[derive(Debug, Clone)]
pub enum GaugeChoice {
    FixedPotential,
    Rate(DVector<f64>),
}

/// Divergence-free sector of the edge space with the curl-curl operator
/// diagonalized on it: `basis` is mass-orthonormal and spans ker(weak div);
/// its leading `harmonic_count` eigenvectors are the harmonic fields.
pub struct ReducedSpace {
    pub basis: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub harmonic_count: usize,
}

impl ReducedSpace {
    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Maxwell model on the boundary condition's spaces.
pub struct MaxwellModel {
    pub grid: GridSpec,
    pub bc: BoundaryConditionSpec,
    /// nodes(bc) → edges(bc)
    pub grad: DiscreteOperator,
    /// edges(bc) → faces
    pub curl: DiscreteOperator,
    /// curl-curl endomorphism on edges(bc)
    pub curl_curl: DiscreteOperator,
    /// curlᵀ M_f curl
    pub cc_stiffness: SparseMatrix,
    /// edges(bc) → nodes(bc)
    pub weak_div: DiscreteOperator,
    pub ctol: f64,
    hodge: OnceLock<HodgeProjector>,
    reduced: OnceLock<ReducedSpace>,
}

impl MaxwellModel {
    pub fn new(grid: GridSpec, bc: BoundaryConditionSpec) -> Result<Self> {
        if grid.dim() < 2 {
            return Err(Error::Unsupported(
                "the Maxwell model needs a 2-D or 3-D grid".into(),
            ));
        }
        let grad = ops::build_grad_bc(&grid, &bc)?;
        let curl = ops::build_curl_bc(&grid, &bc)?;
        let curl_curl = ops::build_curl_curl(&grid, &bc)?;
        let cc_stiffness = ops::build_curl_curl_stiffness(&grid, &bc)?;
        let weak_div = ops::build_weak_div(&grid, &bc)?;
        Ok(Self {
            grid,
            bc,
            grad,
            curl,
            curl_curl,
            cc_stiffness,
            weak_div,
            ctol: DEFAULT_CTOL,
            hodge: OnceLock::new(),
            reduced: OnceLock::new(),
        })
    }

    pub fn node_dof(&self) -> usize {
        self.grad.matrix.shape().1
    }

    pub fn edge_dof(&self) -> usize {
        self.grad.matrix.shape().0
    }

    /// Total stacked phase-space dimension (Q⊥, Q⃗, P⃗).
    pub fn phase_dim(&self) -> usize {
        self.node_dof() + 2 * self.edge_dof()
    }

    pub fn edge_mass(&self) -> &DVector<f64> {
        &self.grad.row_mass
    }

    pub fn node_mass(&self) -> &DVector<f64> {
        &self.grad.col_mass
    }

    pub fn hodge(&self) -> Result<&HodgeProjector> {
        if self.hodge.get().is_none() {
            let proj = HodgeProjector::new(&self.grid, &self.bc)?;
            let _ = self.hodge.set(proj);
        }
        Ok(self.hodge.get().expect("just initialized"))
    }

    pub fn reduced_space(&self) -> Result<&ReducedSpace> {
        if self.reduced.get().is_none() {
            let space = self.build_reduced_space()?;
            let _ = self.reduced.set(space);
        }
        Ok(self.reduced.get().expect("just initialized"))
    }

    fn build_reduced_space(&self) -> Result<ReducedSpace> {
        let e = self.edge_dof();
        // ker(gradᵀ M_e) = divergence-free edge fields.
        let div_rows = self
            .grad
            .matrix
            .transpose()
            .scale_cols(self.edge_mass())
            .to_dense();
        let tol = linalg::default_rank_tol(e);
        let scale = div_rows.amax();
        let raw = linalg::null_space_scaled(&div_rows, tol, scale);
        let basis = linalg::mass_orthonormalize(&raw, self.edge_mass());
        // Curl-curl restricted to the sector; coefficients are orthonormal.
        let m = basis.ncols();
        let mut kw = DMatrix::zeros(e, m);
        for j in 0..m {
            kw.set_column(j, &self.cc_stiffness.apply(&basis.column(j).into_owned()));
        }
        let k_r = basis.transpose() * kw;
        let (eigenvalues, eigenvectors) = linalg::symmetric_eigen_ascending(&k_r);
        let lam_max = eigenvalues.amax().max(1.0);
        let ktol = 1e-9 * lam_max;
        if eigenvalues.len() > 0 && eigenvalues[0] < -ktol {
            return Err(Error::NotNonNegative {
                lambda: eigenvalues[0],
                neg_ktol: -ktol,
            });
        }
        let harmonic_count = eigenvalues.iter().filter(|&&l| l.abs() <= ktol).count();
        Ok(ReducedSpace {
            basis,
            eigenvalues,
            eigenvectors,
            harmonic_count,
        })
    }

    pub fn mass_dot_edges(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.iter()
            .zip(y.iter())
            .zip(self.edge_mass().iter())
            .map(|((a, b), m)| a * b * m)
            .sum()
    }

    pub fn mass_norm_edges(&self, x: &DVector<f64>) -> f64 {
        self.mass_dot_edges(x, x).sqrt()
    }

    pub fn mass_norm_nodes(&self, x: &DVector<f64>) -> f64 {
        x.iter()
            .zip(self.node_mass().iter())
            .map(|(v, m)| v * v * m)
            .sum::<f64>()
            .sqrt()
    }

    /// H = ½⟨P,P⟩ − ⟨P,∇Q⊥⟩ + ½⟨∇×Q,∇×Q⟩.
    pub fn energy(&self, s: &MaxwellState) -> f64 {
        let kinetic = self.mass_dot_edges(&s.p, &s.p);
        let coupling = self.mass_dot_edges(&s.p, &self.grad.apply(&s.q_perp));
        let curl_energy = s.q.dot(&self.cc_stiffness.apply(&s.q));
        0.5 * kinetic - coupling + 0.5 * curl_energy
    }

    /// Relative Gauss residual ‖div P‖ / (1 + ‖P‖).
    pub fn gauss_residual(&self, p: &DVector<f64>) -> f64 {
        let div = self.weak_div.apply(p);
        self.mass_norm_nodes(&div) / (1.0 + self.mass_norm_edges(p))
    }

    fn check_gauss(&self, p: &DVector<f64>) -> Result<()> {
        let residual = self.gauss_residual(p);
        if residual > self.ctol {
            return Err(Error::ConstraintViolated {
                name: "Gauss (weak divergence of P)",
                residual,
                tol: self.ctol,
            });
        }
        Ok(())
    }
}

/// Stacked presymplectic system (Q⊥, Q⃗, P⃗) for the Maxwell model. Ω pairs
/// only the vector potential with its momentum, so the Q⊥ directions span
/// its kernel.
pub fn assemble_maxwell_system(model: &MaxwellModel) -> Result<PresymplecticSystem> {
    let a_dim = model.node_dof();
    let e = model.edge_dof();
    let n = a_dim + 2 * e;
    let me = model.edge_mass();
    let mut omega = DMatrix::zeros(n, n);
    let mut quad = DMatrix::zeros(n, n);
    for i in 0..e {
        omega[(a_dim + i, a_dim + e + i)] = me[i];
        omega[(a_dim + e + i, a_dim + i)] = -me[i];
        quad[(a_dim + e + i, a_dim + e + i)] = me[i];
    }
    // coupling blocks: A[Q⊥, P⃗] = -gradᵀ M_e and its transpose
    for &(edge, node, v) in model.grad.matrix.triplets() {
        let coeff = -v * me[edge];
        quad[(node, a_dim + e + edge)] += coeff;
        quad[(a_dim + e + edge, node)] += coeff;
    }
    for &(r, c, v) in model.cc_stiffness.triplets() {
        quad[(a_dim + r, a_dim + c)] = v;
    }
    PresymplecticSystem::new(
        PresymplecticForm::new(omega)?,
        QuadraticHamiltonian::new(quad, DVector::zeros(n), 0.0)?,
    )
}

/// Exact evolution by `t`. The state must satisfy the Gauss constraint to
/// the model's `ctol`; evolution refuses violating states rather than
/// repairing them (project with the Hodge machinery first if needed).
pub fn evolve_maxwell(
    model: &MaxwellModel,
    s: &MaxwellState,
    t: f64,
    gauge: &GaugeChoice,
) -> Result<MaxwellState> {
    let e = model.edge_dof();
    if s.q.len() != e || s.p.len() != e || s.q_perp.len() != model.node_dof() {
        return Err(Error::DimensionMismatch {
            context: "Maxwell state",
            expected: e,
            got: s.q.len(),
        });
    }
    model.check_gauss(&s.p)?;
    if let GaugeChoice::Rate(chi) = gauge {
        if chi.len() != model.node_dof() {
            return Err(Error::DimensionMismatch {
                context: "gauge rate",
                expected: model.node_dof(),
                got: chi.len(),
            });
        }
    }
    let red = model.reduced_space()?;
    let w = &red.basis;
    let weigh = |x: &DVector<f64>| {
        DVector::from_iterator(
            x.len(),
            x.iter().zip(model.edge_mass().iter()).map(|(v, m)| v * m),
        )
    };
    // Divergence-free coefficients and longitudinal remainders.
    let a0 = w.transpose() * weigh(&s.q);
    let p0 = w.transpose() * weigh(&s.p);
    let q_long = &s.q - w * &a0;
    let p_long = &s.p - w * &p0;

    // Rotate in the eigenbasis of the restricted curl-curl operator.
    let z = &red.eigenvectors;
    let mut ca = z.transpose() * &a0;
    let mut cp = z.transpose() * &p0;
    for k in 0..red.mode_count() {
        if k < red.harmonic_count {
            ca[k] += t * cp[k];
        } else {
            let omega = red.eigenvalues[k].sqrt();
            let (sn, cs) = (omega * t).sin_cos();
            let (aq, bp) = (ca[k], cp[k]);
            ca[k] = cs * aq + sn / omega * bp;
            cp[k] = -omega * sn * aq + cs * bp;
        }
    }
    let a_t = z * ca;
    let p_t = z * cp;

    // Gauge sector: Q̇⊥ = χ (zero by default), Q̇_long = P_long − ∇Q⊥(τ).
    let (q_perp_t, drift) = match gauge {
        GaugeChoice::FixedPotential => {
            let drift = &p_long * t - model.grad.apply(&s.q_perp) * t;
            (s.q_perp.clone(), drift)
        }
        GaugeChoice::Rate(chi) => {
            let drift = &p_long * t
                - model.grad.apply(&s.q_perp) * t
                - model.grad.apply(chi) * (0.5 * t * t);
            (&s.q_perp + chi * t, drift)
        }
    };

    Ok(MaxwellState {
        q_perp: q_perp_t,
        q: w * a_t + q_long + drift,
        p: w * p_t + p_long,
    })
}

/// Norms of the constraint and trace residuals appropriate to the model's
/// boundary condition. Report-only: nothing is rejected here.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConstraintReport {
    pub entries: BTreeMap<String, f64>,
}

pub fn check_maxwell_constraints(model: &MaxwellModel, s: &MaxwellState) -> Result<ConstraintReport> {
    let mut entries = BTreeMap::new();
    let div = model.weak_div.apply(&s.p);
    entries.insert("gauss_weak_div_p".to_string(), model.mass_norm_nodes(&div));
    match model.bc.vector {
        VectorBc::Relative => {
            // Tangential edges are eliminated from the space itself.
            entries.insert("tangential_trace_p".to_string(), 0.0);
        }
        VectorBc::Absolute => {
            let normal = ops::build_trace(&model.grid, TraceKind::Normal)?;
            entries.insert("normal_trace_p".to_string(), normal.apply(&s.p).norm());
            let face_trace = ops::build_face_tangential_trace(&model.grid)?;
            let curl_q = model.curl.apply(&s.q);
            entries.insert(
                "tangential_trace_curl_q".to_string(),
                face_trace.apply(&curl_q).norm(),
            );
        }
    }
    Ok(ConstraintReport { entries })
}

pub fn check_scalar_constraints(model: &ScalarModel, s: &ScalarState) -> Result<ConstraintReport> {
    let mut entries = BTreeMap::new();
    match &model.bc.scalar {
        ScalarBc::Dirichlet => {
            // Boundary nodes are eliminated from the space itself.
            entries.insert("dirichlet_boundary_values".to_string(), 0.0);
        }
        ScalarBc::Neumann => {
            entries.insert(
                "neumann_normal_derivative".to_string(),
                sampled_robin_residual(&model.grid, &s.q, None),
            );
        }
        ScalarBc::Robin(b) => {
            entries.insert(
                "robin_boundary_operator".to_string(),
                sampled_robin_residual(&model.grid, &s.q, Some(b)),
            );
        }
    }
    Ok(ConstraintReport { entries })
}

/// Sampled boundary-operator residual B·Q − n·∇Q (B = 0 for Neumann): a
/// one-sided difference per boundary patch, root-mean-square over patches.
/// First-order accurate; a diagnostic, not part of the weak operators.
fn sampled_robin_residual(grid: &GridSpec, q: &DVector<f64>, b: Option<&[f64]>) -> f64 {
    let boundary = grid.boundary_nodes();
    let slot_of: BTreeMap<usize, usize> = boundary
        .iter()
        .enumerate()
        .map(|(slot, &node)| (node, slot))
        .collect();
    let patches = ops::boundary_patches(grid);
    if patches.is_empty() {
        return 0.0;
    }
    let d = grid.dim();
    let mut sum_sq = 0.0;
    for &(cell, axis, side) in &patches {
        let center = grid.cell_center(cell);
        let h = grid.spacing()[axis];
        // plane coordinates of the patch and of the next layer inward
        let outer = center[axis] + if side == 1 { 0.5 * h } else { -0.5 * h };
        let inner = center[axis] + if side == 1 { -0.5 * h } else { 0.5 * h };
        let mut q_out = 0.0;
        let mut q_in = 0.0;
        let mut b_avg = 0.0;
        let mut count = 0.0;
        for node in 0..grid.node_count() {
            let p = grid.node_position(node);
            let mut on_cell = true;
            for a in 0..d {
                if a == axis {
                    continue;
                }
                if (p[a] - center[a]).abs() > 0.51 * grid.spacing()[a] {
                    on_cell = false;
                    break;
                }
            }
            if !on_cell {
                continue;
            }
            if (p[axis] - outer).abs() < 1e-9 * h {
                q_out += q[node];
                if let Some(bv) = b {
                    if let Some(&slot) = slot_of.get(&node) {
                        b_avg += bv[slot];
                    }
                }
                count += 1.0;
            } else if (p[axis] - inner).abs() < 1e-9 * h {
                q_in += q[node];
            }
        }
        if count == 0.0 {
            continue;
        }
        q_out /= count;
        q_in /= count;
        b_avg /= count;
        let normal_derivative = (q_out - q_in) / h;
        sum_sq += (b_avg * q_out - normal_derivative).powi(2);
    }
    (sum_sq / patches.len() as f64).sqrt()
}

/// Gauge transformation Q⃗ ← Q⃗ + ∇φ, Q⊥ ← Q⊥ + χ⊥, P⃗ unchanged. φ must
/// live in the bc's nodal space.
pub fn gauge_transform(
    model: &MaxwellModel,
    s: &MaxwellState,
    phi: &DVector<f64>,
    chi_perp: &DVector<f64>,
) -> Result<MaxwellState> {
    if phi.len() != model.node_dof() {
        return Err(Error::DimensionMismatch {
            context: "gauge potential",
            expected: model.node_dof(),
            got: phi.len(),
        });
    }
    if chi_perp.len() != model.node_dof() {
        return Err(Error::DimensionMismatch {
            context: "perpendicular gauge shift",
            expected: model.node_dof(),
            got: chi_perp.len(),
        });
    }
    Ok(MaxwellState {
        q_perp: &s.q_perp + chi_perp,
        q: &s.q + model.grad.apply(phi),
        p: s.p.clone(),
    })
}

/// Coordinates of a Gauss-constrained state on the reduced phase space:
/// transverse and harmonic coefficients of (Q⃗, P⃗).
#[derive(Debug, Clone)]
pub struct ReducedState {
    pub transverse_q: DVector<f64>,
    pub transverse_p: DVector<f64>,
    pub harmonic_q: DVector<f64>,
    pub harmonic_p: DVector<f64>,
}

pub fn reduce(model: &MaxwellModel, s: &MaxwellState) -> Result<ReducedState> {
    model.check_gauss(&s.p)?;
    let red = model.reduced_space()?;
    let weigh = |x: &DVector<f64>| {
        DVector::from_iterator(
            x.len(),
            x.iter().zip(model.edge_mass().iter()).map(|(v, m)| v * m),
        )
    };
    let cq = red.eigenvectors.transpose() * (red.basis.transpose() * weigh(&s.q));
    let cp = red.eigenvectors.transpose() * (red.basis.transpose() * weigh(&s.p));
    let hc = red.harmonic_count;
    Ok(ReducedState {
        harmonic_q: cq.rows(0, hc).into_owned(),
        harmonic_p: cp.rows(0, hc).into_owned(),
        transverse_q: cq.rows(hc, red.mode_count() - hc).into_owned(),
        transverse_p: cp.rows(hc, red.mode_count() - hc).into_owned(),
    })
}

/// Representative with zero longitudinal and perpendicular parts;
/// `reduce ∘ unreduce` is the identity on coefficients.
pub fn unreduce(model: &MaxwellModel, r: &ReducedState) -> Result<MaxwellState> {
    let red = model.reduced_space()?;
    let hc = red.harmonic_count;
    let mc = red.mode_count();
    if r.harmonic_q.len() != hc || r.transverse_q.len() != mc - hc {
        return Err(Error::DimensionMismatch {
            context: "reduced state coefficients",
            expected: mc,
            got: r.harmonic_q.len() + r.transverse_q.len(),
        });
    }
    let mut cq = DVector::zeros(mc);
    let mut cp = DVector::zeros(mc);
    cq.rows_mut(0, hc).copy_from(&r.harmonic_q);
    cq.rows_mut(hc, mc - hc).copy_from(&r.transverse_q);
    cp.rows_mut(0, hc).copy_from(&r.harmonic_p);
    cp.rows_mut(hc, mc - hc).copy_from(&r.transverse_p);
    Ok(MaxwellState {
        q_perp: DVector::zeros(model.node_dof()),
        q: &red.basis * (&red.eigenvectors * cq),
        p: &red.basis * (&red.eigenvectors * cp),
    })
}

/// The curl-curl spectrum on the divergence-free sector as a spectral
/// decomposition over the edge space (harmonic fields are the kernel
/// block). Partial by construction: it spans only the physical sector.
pub fn maxwell_mode_decomposition(model: &MaxwellModel) -> Result<SpectralDecomposition> {
    let red = model.reduced_space()?;
    let vectors = &red.basis * &red.eigenvectors;
    let lam_max = red.eigenvalues.amax().max(1.0);
    SpectralDecomposition::from_parts(
        red.eigenvalues.clone(),
        vectors,
        model.edge_mass().clone(),
        red.harmonic_count,
        1e-9 * lam_max,
        1e-10,
        false,
    )
}

/// Evolution directly on the reduced coordinates: transverse modes rotate,
/// harmonic modes drift.
pub fn evolve_reduced(model: &MaxwellModel, r: &ReducedState, t: f64) -> Result<ReducedState> {
    let red = model.reduced_space()?;
    let hc = red.harmonic_count;
    let mut out = r.clone();
    for k in 0..out.harmonic_q.len() {
        out.harmonic_q[k] += t * out.harmonic_p[k];
    }
    for k in 0..out.transverse_q.len() {
        let omega = red.eigenvalues[hc + k].sqrt();
        let (sn, cs) = (omega * t).sin_cos();
        let (a, b) = (out.transverse_q[k], out.transverse_p[k]);
        out.transverse_q[k] = cs * a + sn / omega * b;
        out.transverse_p[k] = -omega * sn * a + cs * b;
    }
    Ok(out)
}
