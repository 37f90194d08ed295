//! Mimetic discrete operators on staggered grids.
//!
//! Operators are sparse maps between entity spaces carrying the diagonal
//! mass weights of their row and column spaces. The weak divergence is the
//! negative mass adjoint of the gradient, so the discrete Green identity
//! `⟨div u, φ⟩ + ⟨u, grad φ⟩ = 0` holds exactly on the spaces selected by
//! the boundary condition, and `curl ∘ grad = 0` holds entrywise by
//! construction.
//!
//! Boundary conditions act by *selection*: Dirichlet keeps interior nodes,
//! the relative (perfect conductor) condition keeps edges that do not lie
//! inside the boundary surface. Neumann/Robin and the absolute condition
//! keep everything and impose their conditions weakly through the mass
//! adjoints (Robin adds a lumped boundary term).

use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::{EntityKind, GridSpec};

/// Minimal COO/CSR-style sparse matrix with unique sorted entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: Vec<(usize, usize, f64)>) -> Self {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet out of bounds");
            *map.entry((r, c)).or_insert(0.0) += v;
        }
        let entries = map
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Self {
            nrows,
            ncols,
            entries,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            entries: (0..n).map(|i| (i, i, 1.0)).collect(),
        }
    }

    pub fn from_diagonal(d: &DVector<f64>) -> Self {
        Self {
            nrows: d.len(),
            ncols: d.len(),
            entries: d
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, i, v))
                .collect(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols, "sparse apply shape");
        let mut y = DVector::zeros(self.nrows);
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.nrows, "sparse transpose apply shape");
        let mut y = DVector::zeros(self.ncols);
        for &(r, c, v) in &self.entries {
            y[c] += v * x[r];
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let t = self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let t = self.entries.iter().map(|&(r, c, v)| (r, c, s * v)).collect();
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    /// diag(d) · A
    pub fn scale_rows(&self, d: &DVector<f64>) -> Self {
        assert_eq!(d.len(), self.nrows);
        let t = self
            .entries
            .iter()
            .map(|&(r, c, v)| (r, c, d[r] * v))
            .collect();
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    /// A · diag(d)
    pub fn scale_cols(&self, d: &DVector<f64>) -> Self {
        assert_eq!(d.len(), self.ncols);
        let t = self
            .entries
            .iter()
            .map(|&(r, c, v)| (r, c, v * d[c]))
            .collect();
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        let mut t = self.entries.clone();
        t.extend_from_slice(&other.entries);
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    /// Aᵀ · diag(w) · A, accumulated row by row (exactly symmetric).
    pub fn gram_weighted(&self, w: &DVector<f64>) -> Self {
        assert_eq!(w.len(), self.nrows);
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut i = 0;
        while i < self.entries.len() {
            let row = self.entries[i].0;
            let mut j = i;
            while j < self.entries.len() && self.entries[j].0 == row {
                j += 1;
            }
            let weight = w[row];
            for a in i..j {
                for b in i..j {
                    let (_, ca, va) = self.entries[a];
                    let (_, cb, vb) = self.entries[b];
                    *map.entry((ca, cb)).or_insert(0.0) += weight * va * vb;
                }
            }
            i = j;
        }
        let entries = map
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Self {
            nrows: self.ncols,
            ncols: self.ncols,
            entries,
        }
    }

    /// Keep only the listed rows/columns (compact reindexing).
    pub fn restrict(&self, rows: Option<&[usize]>, cols: Option<&[usize]>) -> Self {
        let row_map = rows.map(|list| {
            let mut m = vec![usize::MAX; self.nrows];
            for (new, &old) in list.iter().enumerate() {
                m[old] = new;
            }
            m
        });
        let col_map = cols.map(|list| {
            let mut m = vec![usize::MAX; self.ncols];
            for (new, &old) in list.iter().enumerate() {
                m[old] = new;
            }
            m
        });
        let nrows = rows.map_or(self.nrows, <[usize]>::len);
        let ncols = cols.map_or(self.ncols, <[usize]>::len);
        let t = self
            .entries
            .iter()
            .filter_map(|&(r, c, v)| {
                let nr = row_map.as_ref().map_or(r, |m| m[r]);
                let nc = col_map.as_ref().map_or(c, |m| m[c]);
                (nr != usize::MAX && nc != usize::MAX).then_some((nr, nc, v))
            })
            .collect();
        Self::from_triplets(nrows, ncols, t)
    }
}

/// Descriptor of the entity space an operator maps from or to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySpace {
    pub kind: EntityKind,
    pub len: usize,
    pub label: String,
}

impl EntitySpace {
    fn new(kind: EntityKind, len: usize, label: impl Into<String>) -> Self {
        Self {
            kind,
            len,
            label: label.into(),
        }
    }
}

/// Sparse linear map between entity spaces with their diagonal masses.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub rows: EntitySpace,
    pub cols: EntitySpace,
    pub matrix: SparseMatrix,
    pub row_mass: DVector<f64>,
    pub col_mass: DVector<f64>,
}

impl DiscreteOperator {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.matrix.apply(x)
    }

    /// Adjoint in the mass inner products: M_col⁻¹ Aᵀ M_row.
    pub fn mass_adjoint_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let weighted = DVector::from_iterator(
            x.len(),
            x.iter().zip(self.row_mass.iter()).map(|(v, m)| v * m),
        );
        let mut y = self.matrix.apply_transpose(&weighted);
        for (yi, m) in y.iter_mut().zip(self.col_mass.iter()) {
            *yi /= m;
        }
        y
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            matrix: self.matrix.scaled(s),
            row_mass: self.row_mass.clone(),
            col_mass: self.col_mass.clone(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.matrix.shape()
    }

    pub fn is_endomorphism(&self) -> bool {
        self.rows == self.cols
    }
}

/// Scalar boundary condition. Robin carries one coefficient per boundary
/// node (in boundary-node order), all required nonpositive.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarBc {
    Dirichlet,
    Neumann,
    Robin(Vec<f64>),
}

/// Vector (edge-field) boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorBc {
    Relative,
    Absolute,
}

/// Combined boundary condition used by the operator builders. The nodal
/// space of a relative vector condition is the Dirichlet one, of an
/// absolute condition the Neumann one.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditionSpec {
    pub scalar: ScalarBc,
    pub vector: VectorBc,
}

impl BoundaryConditionSpec {
    pub fn dirichlet() -> Self {
        Self {
            scalar: ScalarBc::Dirichlet,
            vector: VectorBc::Relative,
        }
    }

    pub fn neumann() -> Self {
        Self {
            scalar: ScalarBc::Neumann,
            vector: VectorBc::Absolute,
        }
    }

    pub fn robin(coefficients: Vec<f64>) -> Self {
        Self {
            scalar: ScalarBc::Robin(coefficients),
            vector: VectorBc::Absolute,
        }
    }

    pub fn robin_constant(grid: &GridSpec, b: f64) -> Self {
        Self::robin(vec![b; grid.boundary_nodes().len()])
    }

    pub fn relative() -> Self {
        Self::dirichlet()
    }

    pub fn absolute() -> Self {
        Self::neumann()
    }

    fn validate(&self, grid: &GridSpec) -> Result<()> {
        if let ScalarBc::Robin(b) = &self.scalar {
            let expected = grid.boundary_nodes().len();
            if b.len() != expected {
                return Err(Error::DimensionMismatch {
                    context: "Robin coefficient array",
                    expected,
                    got: b.len(),
                });
            }
            if b.iter().any(|&v| v > 0.0) {
                return Err(Error::InvalidInput(
                    "Robin coefficients must be nonpositive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Kept node indices, or None when every node is kept.
    pub fn node_selection(&self, grid: &GridSpec) -> Option<Vec<usize>> {
        match self.scalar {
            ScalarBc::Dirichlet => Some(grid.interior_nodes()),
            _ => None,
        }
    }

    /// Kept edge indices, or None when every edge is kept.
    pub fn edge_selection(&self, grid: &GridSpec) -> Option<Vec<usize>> {
        match self.vector {
            VectorBc::Relative => Some(grid.free_edges()),
            VectorBc::Absolute => None,
        }
    }

    pub fn node_space_label(&self) -> &'static str {
        match self.scalar {
            ScalarBc::Dirichlet => "node:interior",
            _ => "node:all",
        }
    }

    pub fn edge_space_label(&self) -> &'static str {
        match self.vector {
            VectorBc::Relative => "edge:free",
            VectorBc::Absolute => "edge:all",
        }
    }
}

/// Which trace operator to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Nodal,
    Tangential,
    Normal,
}

fn select(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

fn node_mass_for(grid: &GridSpec, sel: Option<&[usize]>) -> DVector<f64> {
    let full = grid.node_masses();
    match sel {
        Some(list) => select(&full, list),
        None => full,
    }
}

fn edge_mass_for(grid: &GridSpec, sel: Option<&[usize]>) -> DVector<f64> {
    let full = grid.edge_masses();
    match sel {
        Some(list) => select(&full, list),
        None => full,
    }
}

/// First-order difference along every edge: nodes → edges, full spaces.
pub fn build_grad(grid: &GridSpec) -> DiscreteOperator {
    let mut t = Vec::with_capacity(2 * grid.edge_count());
    for e in 0..grid.edge_count() {
        let h = grid.spacing()[grid.edge_axis(e)];
        let (tail, head) = grid.edge_endpoints(e);
        t.push((e, head, 1.0 / h));
        t.push((e, tail, -1.0 / h));
    }
    DiscreteOperator {
        rows: EntitySpace::new(EntityKind::Edge, grid.edge_count(), "edge:all"),
        cols: EntitySpace::new(EntityKind::Node, grid.node_count(), "node:all"),
        matrix: SparseMatrix::from_triplets(grid.edge_count(), grid.node_count(), t),
        row_mass: grid.edge_masses(),
        col_mass: grid.node_masses(),
    }
}

/// Gradient restricted to the boundary condition's node and edge spaces.
/// Eliminated nodes contribute zero; the dropped edge rows are exactly the
/// ones on which such gradients vanish anyway.
pub fn build_grad_bc(grid: &GridSpec, bc: &BoundaryConditionSpec) -> Result<DiscreteOperator> {
    bc.validate(grid)?;
    let full = build_grad(grid);
    let rows = bc.edge_selection(grid);
    let cols = bc.node_selection(grid);
    let matrix = full.matrix.restrict(rows.as_deref(), cols.as_deref());
    let row_mass = edge_mass_for(grid, rows.as_deref());
    let col_mass = node_mass_for(grid, cols.as_deref());
    Ok(DiscreteOperator {
        rows: EntitySpace::new(EntityKind::Edge, matrix.shape().0, bc.edge_space_label()),
        cols: EntitySpace::new(EntityKind::Node, matrix.shape().1, bc.node_space_label()),
        matrix,
        row_mass,
        col_mass,
    })
}

/// Signed circulation around every face divided by its area: edges → faces.
pub fn build_curl(grid: &GridSpec) -> Result<DiscreteOperator> {
    if grid.dim() < 2 {
        return Err(Error::Unsupported("curl needs a 2-D or 3-D grid".into()));
    }
    let mut t = Vec::new();
    for f in 0..grid.face_count() {
        for (e, coeff) in grid.face_circulation(f) {
            t.push((f, e, coeff));
        }
    }
    Ok(DiscreteOperator {
        rows: EntitySpace::new(EntityKind::Face, grid.face_count(), "face:all"),
        cols: EntitySpace::new(EntityKind::Edge, grid.edge_count(), "edge:all"),
        matrix: SparseMatrix::from_triplets(grid.face_count(), grid.edge_count(), t),
        row_mass: grid.face_masses(),
        col_mass: grid.edge_masses(),
    })
}

/// Curl restricted to the boundary condition's edge space.
pub fn build_curl_bc(grid: &GridSpec, bc: &BoundaryConditionSpec) -> Result<DiscreteOperator> {
    bc.validate(grid)?;
    let full = build_curl(grid)?;
    let cols = bc.edge_selection(grid);
    let matrix = full.matrix.restrict(None, cols.as_deref());
    let col_mass = edge_mass_for(grid, cols.as_deref());
    Ok(DiscreteOperator {
        rows: full.rows,
        cols: EntitySpace::new(EntityKind::Edge, matrix.shape().1, bc.edge_space_label()),
        matrix,
        row_mass: full.row_mass,
        col_mass,
    })
}

/// Weak divergence: the negative mass adjoint of the gradient on the spaces
/// selected by `bc`, so that `⟨div u, φ⟩ + ⟨u, grad φ⟩ = 0` exactly for all
/// test functions φ of the bc's nodal space. Under the absolute condition
/// this also encodes the vanishing normal trace weakly.
pub fn build_weak_div(grid: &GridSpec, bc: &BoundaryConditionSpec) -> Result<DiscreteOperator> {
    let grad = build_grad_bc(grid, bc)?;
    let inv_node = DVector::from_iterator(grad.col_mass.len(), grad.col_mass.iter().map(|m| 1.0 / m));
    let matrix = grad
        .matrix
        .transpose()
        .scale_rows(&inv_node)
        .scale_cols(&grad.row_mass)
        .scaled(-1.0);
    Ok(DiscreteOperator {
        rows: grad.cols.clone(),
        cols: grad.rows.clone(),
        matrix,
        row_mass: grad.col_mass.clone(),
        col_mass: grad.row_mass.clone(),
    })
}

/// Stiffness form of the scalar Laplacian: gradᵀ M_edge grad plus the lumped
/// Robin boundary term. Symmetric positive semidefinite.
pub fn build_scalar_stiffness(grid: &GridSpec, bc: &BoundaryConditionSpec) -> Result<SparseMatrix> {
    let grad = build_grad_bc(grid, bc)?;
    let mut k = grad.matrix.gram_weighted(&grad.row_mass);
    if let ScalarBc::Robin(b) = &bc.scalar {
        let weights = grid.boundary_node_weights();
        let boundary = grid.boundary_nodes();
        let mut t = Vec::new();
        for (slot, &node) in boundary.iter().enumerate() {
            // -B = b² with b ≥ 0; the boundary quadratic adds +(-B)·w on the diagonal.
            let coeff = -b[slot] * weights[node];
            if coeff != 0.0 {
                t.push((node, node, coeff));
            }
        }
        let n = grid.node_count();
        k = k.add(&SparseMatrix::from_triplets(n, n, t));
    }
    Ok(k)
}

/// Scalar Laplacian Δ as a symmetric (in the mass inner product) nonpositive
/// endomorphism of the bc's nodal space: Δ = -M⁻¹ K.
pub fn build_scalar_laplacian(grid: &GridSpec, bc: &BoundaryConditionSpec) -> Result<DiscreteOperator> {
    let k = build_scalar_stiffness(grid, bc)?;
    let mass = node_mass_for(grid, bc.node_selection(grid).as_deref());
    let inv = DVector::from_iterator(mass.len(), mass.iter().map(|m| -1.0 / m));
    let matrix = k.scale_rows(&inv);
    let space = EntitySpace::new(EntityKind::Node, mass.len(), bc.node_space_label());
    Ok(DiscreteOperator {
        rows: space.clone(),
        cols: space,
        matrix,
        row_mass: mass.clone(),
        col_mass: mass,
    })
}

/// Stiffness form of the curl-curl operator: curlᵀ M_face curl on the bc's
/// edge space. Symmetric positive semidefinite.
pub fn build_curl_curl_stiffness(
    grid: &GridSpec,
    bc: &BoundaryConditionSpec,
) -> Result<SparseMatrix> {
    let curl = build_curl_bc(grid, bc)?;
    Ok(curl.matrix.gram_weighted(&curl.row_mass))
}

/// Curl-curl as a symmetric nonnegative endomorphism of the bc's edge space:
/// M_edge⁻¹ curlᵀ M_face curl. The relative condition eliminates boundary
/// edges; the absolute condition imposes the natural trace weakly.
pub fn build_curl_curl(grid: &GridSpec, bc: &BoundaryConditionSpec) -> Result<DiscreteOperator> {
    if grid.dim() < 2 {
        return Err(Error::Unsupported("curl-curl needs a 2-D or 3-D grid".into()));
    }
    let k = build_curl_curl_stiffness(grid, bc)?;
    let mass = edge_mass_for(grid, bc.edge_selection(grid).as_deref());
    let inv = DVector::from_iterator(mass.len(), mass.iter().map(|m| 1.0 / m));
    let matrix = k.scale_rows(&inv);
    let space = EntitySpace::new(EntityKind::Edge, mass.len(), bc.edge_space_label());
    Ok(DiscreteOperator {
        rows: space.clone(),
        cols: space,
        matrix,
        row_mass: mass.clone(),
        col_mass: mass,
    })
}

/// Stiffness form of the full vector Laplacian on the bc's edge space:
/// curlᵀ M_f curl + M_e grad M_n⁻¹ gradᵀ M_e. Its kernel consists of the
/// harmonic edge fields (curl-free and weak-divergence-free with the bc's
/// traces).
pub fn build_vector_laplacian_stiffness(
    grid: &GridSpec,
    bc: &BoundaryConditionSpec,
) -> Result<SparseMatrix> {
    let curl_part = build_curl_curl_stiffness(grid, bc)?;
    let grad = build_grad_bc(grid, bc)?;
    // (gradᵀ M_e)ᵀ M_n⁻¹ (gradᵀ M_e)
    let b = grad.matrix.transpose().scale_cols(&grad.row_mass);
    let inv_node = DVector::from_iterator(grad.col_mass.len(), grad.col_mass.iter().map(|m| 1.0 / m));
    let div_part = b.gram_weighted(&inv_node);
    Ok(curl_part.add(&div_part))
}

/// Boundary patches of active cells: `(cell, axis, side)` with `side` 0 for
/// the low face and 1 for the high face, ordered lexicographically.
pub fn boundary_patches(grid: &GridSpec) -> Vec<(usize, usize, usize)> {
    let d = grid.dim();
    let mut out = Vec::new();
    for cell in 0..grid.cell_count() {
        let center = grid.cell_center(cell);
        for axis in 0..d {
            for side in 0..2 {
                let h = grid.spacing()[axis];
                // probe the neighbor cell center across this side
                let mut probe = center;
                probe[axis] += if side == 0 { -h } else { h };
                if !cell_exists_at(grid, &probe) {
                    out.push((cell, axis, side));
                }
            }
        }
    }
    out
}

fn cell_exists_at(grid: &GridSpec, point: &[f64; 3]) -> bool {
    let d = grid.dim();
    let mut idx = [0usize; 3];
    for a in 0..d {
        let x = point[a] / grid.spacing()[a];
        if x < 0.0 || x > grid.cells_per_axis()[a] as f64 {
            return false;
        }
        let i = x.floor() as isize;
        if i < 0 || i as usize >= grid.cells_per_axis()[a] {
            return false;
        }
        idx[a] = i as usize;
    }
    if let Some(hole) = grid.hole() {
        if idx[0] >= hole.lo[0] && idx[0] < hole.hi[0] && idx[1] >= hole.lo[1] && idx[1] < hole.hi[1]
        {
            return false;
        }
    }
    true
}

fn cell_edge_indices(grid: &GridSpec, cell: usize, axis: usize) -> Vec<usize> {
    // All edges parallel to `axis` belonging to this cell, found by midpoint.
    let d = grid.dim();
    let center = grid.cell_center(cell);
    let mut out = Vec::new();
    for e in 0..grid.edge_count() {
        if grid.edge_axis(e) != axis {
            continue;
        }
        let mid = grid.edge_midpoint(e);
        let mut close = true;
        for a in 0..d {
            let tol = 0.51 * grid.spacing()[a];
            if (mid[a] - center[a]).abs() > tol {
                close = false;
                break;
            }
        }
        if close {
            out.push(e);
        }
    }
    out
}

/// Trace operators: `Nodal` selects boundary node values, `Tangential`
/// selects the edges lying inside the boundary surface (its kernel is the
/// relative edge space), `Normal` averages the perpendicular edges of each
/// boundary patch. All act on the full entity spaces.
pub fn build_trace(grid: &GridSpec, which: TraceKind) -> Result<DiscreteOperator> {
    match which {
        TraceKind::Nodal => {
            let boundary = grid.boundary_nodes();
            let t = boundary
                .iter()
                .enumerate()
                .map(|(row, &n)| (row, n, 1.0))
                .collect();
            let node_mass = grid.node_masses();
            Ok(DiscreteOperator {
                rows: EntitySpace::new(EntityKind::Node, boundary.len(), "node:boundary"),
                cols: EntitySpace::new(EntityKind::Node, grid.node_count(), "node:all"),
                matrix: SparseMatrix::from_triplets(boundary.len(), grid.node_count(), t),
                row_mass: select(&grid.boundary_node_weights(), &boundary),
                col_mass: node_mass,
            })
        }
        TraceKind::Tangential => {
            if grid.dim() < 2 {
                return Err(Error::Unsupported(
                    "tangential trace needs a 2-D or 3-D grid".into(),
                ));
            }
            let boundary = grid.boundary_edges();
            let t = boundary
                .iter()
                .enumerate()
                .map(|(row, &e)| (row, e, 1.0))
                .collect();
            Ok(DiscreteOperator {
                rows: EntitySpace::new(EntityKind::Edge, boundary.len(), "edge:boundary"),
                cols: EntitySpace::new(EntityKind::Edge, grid.edge_count(), "edge:all"),
                matrix: SparseMatrix::from_triplets(boundary.len(), grid.edge_count(), t),
                row_mass: select(&grid.edge_masses(), &boundary),
                col_mass: grid.edge_masses(),
            })
        }
        TraceKind::Normal => {
            let patches = boundary_patches(grid);
            let volume: f64 = grid.spacing().iter().product();
            let mut t = Vec::new();
            let mut row_mass = Vec::new();
            for (row, &(cell, axis, _side)) in patches.iter().enumerate() {
                let edges = cell_edge_indices(grid, cell, axis);
                let share = 1.0 / edges.len() as f64;
                for e in edges {
                    t.push((row, e, share));
                }
                row_mass.push(volume / grid.spacing()[axis]);
            }
            Ok(DiscreteOperator {
                rows: EntitySpace::new(EntityKind::Face, patches.len(), "boundary-patch"),
                cols: EntitySpace::new(EntityKind::Edge, grid.edge_count(), "edge:all"),
                matrix: SparseMatrix::from_triplets(patches.len(), grid.edge_count(), t),
                row_mass: DVector::from_vec(row_mass),
                col_mass: grid.edge_masses(),
            })
        }
    }
}

/// Sampled tangential boundary values of a face field (used to report the
/// natural trace residual of a curl under the absolute condition): for each
/// boundary patch and tangent direction, the average of the adjacent faces
/// with that normal.
pub fn build_face_tangential_trace(grid: &GridSpec) -> Result<DiscreteOperator> {
    if grid.dim() < 2 {
        return Err(Error::Unsupported("face trace needs a 2-D or 3-D grid".into()));
    }
    let patches = boundary_patches(grid);
    let mut t = Vec::new();
    let mut row = 0usize;
    if grid.dim() == 2 {
        // The scalar curl lives on cells; its boundary sample is the cell value.
        for &(cell, _axis, _side) in &patches {
            t.push((row, cell, 1.0));
            row += 1;
        }
    } else {
        for &(cell, axis, _side) in &patches {
            let center = grid.cell_center(cell);
            for normal in 0..3 {
                if normal == axis {
                    continue;
                }
                // the two faces of this cell with the tangent normal
                let mut faces = Vec::new();
                for f in 0..grid.face_count() {
                    if grid.face_axis(f) != normal {
                        continue;
                    }
                    let c = grid.face_center(f);
                    let mut close = true;
                    for a in 0..3 {
                        if (c[a] - center[a]).abs() > 0.51 * grid.spacing()[a] {
                            close = false;
                            break;
                        }
                    }
                    if close {
                        faces.push(f);
                    }
                }
                let share = 1.0 / faces.len().max(1) as f64;
                for f in faces {
                    t.push((row, f, share));
                }
                row += 1;
            }
        }
    }
    let rows = row;
    Ok(DiscreteOperator {
        rows: EntitySpace::new(EntityKind::Face, rows, "boundary-patch-tangent"),
        cols: EntitySpace::new(EntityKind::Face, grid.face_count(), "face:all"),
        matrix: SparseMatrix::from_triplets(rows, grid.face_count(), t),
        row_mass: DVector::from_element(rows, 1.0),
        col_mass: grid.face_masses(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StaggeredField;

    #[test]
    fn grad_of_linear_field_is_constant() {
        let g = GridSpec::line(2, 0.5).unwrap();
        let grad = build_grad(&g);
        let q = DVector::from_vec(vec![0.0, 1.0, 2.0]);
        let e = grad.apply(&q);
        assert_eq!(e.as_slice(), &[2.0, 2.0]);

        let constant = DVector::from_element(3, 4.0);
        assert_eq!(grad.apply(&constant).norm(), 0.0);
    }

    #[test]
    fn curl_grad_is_zero_everywhere() {
        for grid in [
            GridSpec::rect([4, 3], [0.3, 0.2]).unwrap(),
            GridSpec::box3([3, 2, 2], [0.5, 0.4, 0.7]).unwrap(),
        ] {
            let grad = build_grad(&grid);
            let curl = build_curl(&grid).unwrap();
            for seed in 0..200 {
                let q = DVector::from_fn(grid.node_count(), |i, _| {
                    (((i * 2654435761 + seed * 40503) % 1000) as f64) / 499.5 - 1.0
                });
                let cg = curl.apply(&grad.apply(&q));
                assert!(cg.amax() < 1e-13, "curl∘grad residual {}", cg.amax());
            }
        }
    }

    #[test]
    fn uniform_edge_field_has_zero_curl() {
        let g = GridSpec::box3([3, 3, 3], [0.2, 0.2, 0.2]).unwrap();
        let curl = build_curl(&g).unwrap();
        let u = StaggeredField::sample_edges(&g, |_, axis| if axis == 0 { 1.0 } else { 0.0 });
        assert_eq!(curl.apply(&u.values).norm(), 0.0);
    }

    #[test]
    fn curl_of_rotation_field_is_constant_two() {
        // A = (-y, x, 0) has curl (0, 0, 2); linear fields are differenced
        // exactly on the staggered grid.
        let n = 8;
        let h = 1.0 / n as f64;
        let g = GridSpec::box3([n, n, n], [h, h, h]).unwrap();
        let curl = build_curl(&g).unwrap();
        let a = StaggeredField::sample_edges(&g, |p, axis| match axis {
            0 => -p[1],
            1 => p[0],
            _ => 0.0,
        });
        let w = curl.apply(&a.values);
        for f in 0..g.face_count() {
            let expected = if g.face_axis(f) == 2 { 2.0 } else { 0.0 };
            assert!((w[f] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn neumann_stiffness_matches_cellwise_assembly() {
        // Independent assembly: every active cell spreads its volume over
        // its parallel edge groups, one difference quotient per edge.
        let g = GridSpec::box3([3, 3, 3], [0.31, 0.27, 0.4]).unwrap();
        let grad = build_grad(&g);
        let k = grad.matrix.gram_weighted(&grad.row_mass).to_dense();

        let mut direct = DMatrix::zeros(g.node_count(), g.node_count());
        let d = g.dim();
        let share = g.spacing().iter().product::<f64>() / (1usize << (d - 1)) as f64;
        for cell in 0..g.cell_count() {
            for axis in 0..d {
                let h = g.spacing()[axis];
                let w = share / (h * h);
                for e in cell_edge_indices(&g, cell, axis) {
                    let (t, hd) = g.edge_endpoints(e);
                    direct[(t, t)] += w;
                    direct[(hd, hd)] += w;
                    direct[(t, hd)] -= w;
                    direct[(hd, t)] -= w;
                }
            }
        }
        assert!((k - direct).amax() < 1e-12);
    }

    #[test]
    fn weak_div_is_negative_adjoint_of_grad() {
        let hole = crate::grid::HoleBox { lo: [2, 2], hi: [3, 3] };
        let g = GridSpec::rect_with_hole([5, 4], [0.2, 0.25], hole).unwrap();
        for bc in [
            BoundaryConditionSpec::dirichlet(),
            BoundaryConditionSpec::neumann(),
            BoundaryConditionSpec::relative(),
        ] {
            let grad = build_grad_bc(&g, &bc).unwrap();
            let div = build_weak_div(&g, &bc).unwrap();
            let ne = grad.matrix.shape().0;
            let nn = grad.matrix.shape().1;
            for seed in 0..5u64 {
                let u = DVector::from_fn(ne, |i, _| ((i as u64 * 37 + seed * 11) % 13) as f64 - 6.0);
                let phi = DVector::from_fn(nn, |i, _| ((i as u64 * 29 + seed * 7) % 11) as f64 - 5.0);
                let lhs: f64 = div
                    .apply(&u)
                    .iter()
                    .zip(div.row_mass.iter())
                    .zip(phi.iter())
                    .map(|((d, m), p)| d * m * p)
                    .sum();
                let rhs: f64 = grad
                    .apply(&phi)
                    .iter()
                    .zip(grad.row_mass.iter())
                    .zip(u.iter())
                    .map(|((gp, m), uv)| gp * m * uv)
                    .sum();
                assert!(
                    (lhs + rhs).abs() < 1e-10 * (lhs.abs() + rhs.abs()).max(1.0),
                    "Green identity violated: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn weak_div_of_curl_adjoint_vanishes() {
        let g = GridSpec::rect([5, 5], [0.2, 0.2]).unwrap();
        for bc in [BoundaryConditionSpec::relative(), BoundaryConditionSpec::absolute()] {
            let div = build_weak_div(&g, &bc).unwrap();
            let curl = build_curl_bc(&g, &bc).unwrap();
            for seed in 0..20u64 {
                let psi = DVector::from_fn(g.face_count(), |i, _| {
                    ((i as u64 * 101 + seed * 17) % 19) as f64 - 9.0
                });
                // curl adjoint in the mass inner products: faces -> edges
                let u = {
                    let weighted = DVector::from_iterator(
                        psi.len(),
                        psi.iter().zip(curl.row_mass.iter()).map(|(v, m)| v * m),
                    );
                    let mut y = curl.matrix.apply_transpose(&weighted);
                    for (yi, m) in y.iter_mut().zip(curl.col_mass.iter()) {
                        *yi /= m;
                    }
                    y
                };
                let dv = div.apply(&u);
                assert!(dv.amax() < 1e-11, "div∘curl* residual {}", dv.amax());
            }
        }
    }

    #[test]
    fn dirichlet_spectrum_matches_stencil_formula() {
        // 3 interior nodes on [0,1] with h = 1/4: eigenvalues of -Δ are
        // (4/h²) sin²(kπ/8).
        let g = GridSpec::line(4, 0.25).unwrap();
        let bc = BoundaryConditionSpec::dirichlet();
        let lap = build_scalar_laplacian(&g, &bc).unwrap();
        let neg = lap.scaled(-1.0);
        let dense = neg.matrix.to_dense();
        let eig = crate::linalg::symmetric_eigen_ascending(&dense);
        let h: f64 = 0.25;
        for k in 1..=3usize {
            let expected = 4.0 / (h * h) * (k as f64 * std::f64::consts::PI / 8.0).sin().powi(2);
            assert!(
                (eig.0[k - 1] - expected).abs() < 1e-10 * expected,
                "eigenvalue {k}: {} vs {expected}",
                eig.0[k - 1]
            );
        }
        assert!((eig.0[0] - 9.372583).abs() < 1e-5);
    }

    #[test]
    fn neumann_kernel_is_constant() {
        let g = GridSpec::rect([4, 3], [0.25, 0.3]).unwrap();
        let bc = BoundaryConditionSpec::neumann();
        let lap = build_scalar_laplacian(&g, &bc).unwrap();
        let ones = DVector::from_element(g.node_count(), 1.0);
        assert!(lap.apply(&ones).amax() < 1e-12);
    }

    #[test]
    fn robin_rejects_positive_coefficients() {
        let g = GridSpec::line(4, 0.25).unwrap();
        let bad = BoundaryConditionSpec::robin(vec![0.5, -1.0]);
        assert!(build_scalar_laplacian(&g, &bad).is_err());
    }

    #[test]
    fn robin_with_zero_coefficient_is_neumann() {
        let g = GridSpec::rect([3, 3], [0.2, 0.2]).unwrap();
        let robin = BoundaryConditionSpec::robin(vec![0.0; g.boundary_nodes().len()]);
        let neumann = BoundaryConditionSpec::neumann();
        let a = build_scalar_laplacian(&g, &robin).unwrap();
        let b = build_scalar_laplacian(&g, &neumann).unwrap();
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn curl_curl_kills_gradients() {
        let g = GridSpec::rect([4, 4], [0.25, 0.25]).unwrap();
        for bc in [BoundaryConditionSpec::relative(), BoundaryConditionSpec::absolute()] {
            let grad = build_grad_bc(&g, &bc).unwrap();
            let cc = build_curl_curl(&g, &bc).unwrap();
            let phi = DVector::from_fn(grad.matrix.shape().1, |i, _| (i as f64 * 0.37).sin());
            let u = grad.apply(&phi);
            assert!(cc.apply(&u).amax() < 1e-11);
            let zero = DVector::zeros(cc.matrix.shape().1);
            assert_eq!(cc.apply(&zero).norm(), 0.0);
        }
    }

    #[test]
    fn traces_select_boundary_values() {
        let g = GridSpec::rect([4, 4], [0.25, 0.25]).unwrap();
        let nodal = build_trace(&g, TraceKind::Nodal).unwrap();
        let ones = DVector::from_element(g.node_count(), 1.0);
        let tr = nodal.apply(&ones);
        assert!(tr.iter().all(|&v| (v - 1.0).abs() < 1e-15));

        // A field supported on interior nodes has zero nodal trace.
        let mut interior = DVector::zeros(g.node_count());
        for i in g.interior_nodes() {
            interior[i] = 2.0;
        }
        assert_eq!(nodal.apply(&interior).norm(), 0.0);

        // Gradients of Dirichlet-zero node fields have zero tangential trace.
        let tangential = build_trace(&g, TraceKind::Tangential).unwrap();
        let grad = build_grad(&g);
        assert!(tangential.apply(&grad.apply(&interior)).amax() < 1e-13);

        // Interior-supported edge fields have zero normal trace.
        let normal = build_trace(&g, TraceKind::Normal).unwrap();
        let mut u = DVector::zeros(g.edge_count());
        for e in g.free_edges() {
            let mid = g.edge_midpoint(e);
            // keep only edges well inside
            if mid[0] > 0.26 && mid[0] < 0.74 && mid[1] > 0.26 && mid[1] < 0.74 {
                u[e] = 1.0;
            }
        }
        assert_eq!(normal.apply(&u).norm(), 0.0);
    }

    #[test]
    fn one_dimensional_curl_unsupported() {
        let g = GridSpec::line(4, 0.25).unwrap();
        assert!(build_curl(&g).is_err());
        assert!(build_curl_curl(&g, &BoundaryConditionSpec::relative()).is_err());
    }
}
