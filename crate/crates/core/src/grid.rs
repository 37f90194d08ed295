//! Staggered rectangular grids in 1-D/2-D/3-D with an optional rectangular
//! hole (2-D only), plus the entity bookkeeping the mimetic operators need.
//!
//! Entity ordering contract (frozen; all file I/O depends on it):
//! * multi-indices are ordered lexicographically with x fastest,
//! * edges are grouped by axis: all x-edges first, then y-edges, then
//!   z-edges, each group in lexicographic order,
//! * faces (3-D) are grouped by normal axis the same way; in 2-D the cell
//!   itself carries the scalar curl and plays the role of the face,
//! * entities inside a hole are dropped; the compact index skips them.
//!
//! Scalar fields live on nodes, vector fields on edges (one component per
//! edge, along the edge axis), curls on faces. A node or edge is *boundary*
//! when it touches fewer active cells than an interior one would; boundary
//! edges are exactly the edges lying inside the boundary surface (the ones
//! a relative/perfect-conductor condition eliminates).

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Which staggered entity a field lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Node,
    Edge,
    Face,
    Cell,
}

impl std::fmt::Display for EntityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EntityKind::Node => "node",
            EntityKind::Edge => "edge",
            EntityKind::Face => "face",
            EntityKind::Cell => "cell",
        };
        f.write_str(s)
    }
}

/// Axis-aligned hole given as a half-open cell-index box `lo..hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct HoleBox {
    pub lo: [usize; 2],
    pub hi: [usize; 2],
}

#[derive(Debug, Clone)]
struct EntityTable {
    /// compact index for each lexicographic candidate, usize::MAX if absent
    compact: Vec<usize>,
    /// lexicographic candidate for each compact index
    candidate: Vec<usize>,
}

impl EntityTable {
    fn build(total: usize, mut keep: impl FnMut(usize) -> bool) -> Self {
        let mut compact = vec![usize::MAX; total];
        let mut candidate = Vec::new();
        for lin in 0..total {
            if keep(lin) {
                compact[lin] = candidate.len();
                candidate.push(lin);
            }
        }
        Self { compact, candidate }
    }

    fn len(&self) -> usize {
        self.candidate.len()
    }
}

/// A rectangular staggered grid.
#[derive(Debug, Clone)]
pub struct GridSpec {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    hole: Option<HoleBox>,
    nodes: EntityTable,
    cells: EntityTable,
    /// one table per edge axis
    edges: Vec<EntityTable>,
    /// one table per face normal axis (single table in 2-D)
    faces: Vec<EntityTable>,
    node_boundary: Vec<bool>,
    edge_boundary: Vec<bool>,
}

impl GridSpec {
    pub fn new(dims: Vec<usize>, spacing: Vec<f64>, hole: Option<HoleBox>) -> Result<Self> {
        let d = dims.len();
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidInput(format!("grid dimension {d} not in 1..=3")));
        }
        if spacing.len() != d {
            return Err(Error::DimensionMismatch {
                context: "grid spacing",
                expected: d,
                got: spacing.len(),
            });
        }
        if dims.iter().any(|&c| c < 2) {
            return Err(Error::InvalidInput("grids need at least 2 cells per axis".into()));
        }
        if spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidInput("grid spacing must be positive".into()));
        }
        if let Some(h) = &hole {
            if d != 2 {
                return Err(Error::Unsupported("holes are supported in 2-D only".into()));
            }
            for a in 0..2 {
                if h.lo[a] < 1 || h.hi[a] > dims[a] - 1 || h.lo[a] >= h.hi[a] {
                    return Err(Error::InvalidInput(
                        "hole must be a nonempty strictly interior cell box".into(),
                    ));
                }
            }
        }

        let mut grid = Self {
            dims,
            spacing,
            hole,
            nodes: EntityTable { compact: vec![], candidate: vec![] },
            cells: EntityTable { compact: vec![], candidate: vec![] },
            edges: vec![],
            faces: vec![],
            node_boundary: vec![],
            edge_boundary: vec![],
        };
        grid.build_tables();
        Ok(grid)
    }

    pub fn line(cells: usize, h: f64) -> Result<Self> {
        Self::new(vec![cells], vec![h], None)
    }

    pub fn rect(cells: [usize; 2], h: [f64; 2]) -> Result<Self> {
        Self::new(cells.to_vec(), h.to_vec(), None)
    }

    pub fn rect_with_hole(cells: [usize; 2], h: [f64; 2], hole: HoleBox) -> Result<Self> {
        Self::new(cells.to_vec(), h.to_vec(), Some(hole))
    }

    pub fn box3(cells: [usize; 3], h: [f64; 3]) -> Result<Self> {
        Self::new(cells.to_vec(), h.to_vec(), None)
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn hole(&self) -> Option<&HoleBox> {
        self.hole.as_ref()
    }

    // ---- raw multi-index helpers -------------------------------------------

    fn node_shape(&self) -> [usize; 3] {
        let mut s = [1usize; 3];
        for (a, &c) in self.dims.iter().enumerate() {
            s[a] = c + 1;
        }
        s
    }

    fn cell_shape(&self) -> [usize; 3] {
        let mut s = [1usize; 3];
        for (a, &c) in self.dims.iter().enumerate() {
            s[a] = c;
        }
        s
    }

    fn edge_shape(&self, axis: usize) -> [usize; 3] {
        let mut s = self.node_shape();
        s[axis] = self.dims[axis];
        s
    }

    fn face_shape(&self, normal: usize) -> [usize; 3] {
        if self.dim() == 2 {
            return self.cell_shape();
        }
        let mut s = self.cell_shape();
        s[normal] = self.dims[normal] + 1;
        s
    }

    fn lin(shape: &[usize; 3], idx: &[usize; 3]) -> usize {
        idx[0] + shape[0] * (idx[1] + shape[1] * idx[2])
    }

    fn unlin(shape: &[usize; 3], lin: usize) -> [usize; 3] {
        let i0 = lin % shape[0];
        let rest = lin / shape[0];
        [i0, rest % shape[1], rest / shape[1]]
    }

    fn cell_in_hole(&self, idx: &[usize; 3]) -> bool {
        match &self.hole {
            Some(h) => {
                idx[0] >= h.lo[0] && idx[0] < h.hi[0] && idx[1] >= h.lo[1] && idx[1] < h.hi[1]
            }
            None => false,
        }
    }

    fn cell_active_raw(&self, idx: &[usize; 3]) -> bool {
        !self.cell_in_hole(idx)
    }

    /// Count of active cells adjacent to an entity whose multi-index varies
    /// over `lo..=hi` per axis (clipped to the cell range).
    fn count_adjacent_active(&self, spans: &[(isize, isize); 3]) -> usize {
        let cs = self.cell_shape();
        let mut count = 0;
        for k in spans[2].0..=spans[2].1 {
            if k < 0 || k as usize >= cs[2] {
                continue;
            }
            for j in spans[1].0..=spans[1].1 {
                if j < 0 || j as usize >= cs[1] {
                    continue;
                }
                for i in spans[0].0..=spans[0].1 {
                    if i < 0 || i as usize >= cs[0] {
                        continue;
                    }
                    if self.cell_active_raw(&[i as usize, j as usize, k as usize]) {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    fn node_spans(idx: &[usize; 3], d: usize) -> [(isize, isize); 3] {
        let mut spans = [(0isize, 0isize); 3];
        for a in 0..3 {
            let i = idx[a] as isize;
            spans[a] = if a < d { (i - 1, i) } else { (0, 0) };
        }
        spans
    }

    fn edge_spans(idx: &[usize; 3], axis: usize, d: usize) -> [(isize, isize); 3] {
        let mut spans = Self::node_spans(idx, d);
        spans[axis] = (idx[axis] as isize, idx[axis] as isize);
        spans
    }

    fn face_spans(idx: &[usize; 3], normal: usize, d: usize) -> [(isize, isize); 3] {
        let mut spans = [(0isize, 0isize); 3];
        for a in 0..3 {
            let i = idx[a] as isize;
            spans[a] = if a < d { (i, i) } else { (0, 0) };
        }
        if d == 3 {
            spans[normal] = (idx[normal] as isize - 1, idx[normal] as isize);
        }
        spans
    }

    fn build_tables(&mut self) {
        let d = self.dim();

        let cshape = self.cell_shape();
        let ctotal = cshape.iter().product();
        self.cells = EntityTable::build(ctotal, |lin| {
            let idx = Self::unlin(&cshape, lin);
            self.cell_active_raw(&idx)
        });

        let nshape = self.node_shape();
        let ntotal = nshape.iter().product();
        self.nodes = EntityTable::build(ntotal, |lin| {
            let idx = Self::unlin(&nshape, lin);
            self.count_adjacent_active(&Self::node_spans(&idx, d)) > 0
        });
        self.node_boundary = self
            .nodes
            .candidate
            .iter()
            .map(|&lin| {
                let idx = Self::unlin(&nshape, lin);
                self.count_adjacent_active(&Self::node_spans(&idx, d)) < (1usize << d)
            })
            .collect();

        self.edges.clear();
        self.edge_boundary.clear();
        for axis in 0..d {
            let eshape = self.edge_shape(axis);
            let etotal = eshape.iter().product();
            let table = EntityTable::build(etotal, |lin| {
                let idx = Self::unlin(&eshape, lin);
                self.count_adjacent_active(&Self::edge_spans(&idx, axis, d)) > 0
            });
            for &lin in &table.candidate {
                let idx = Self::unlin(&eshape, lin);
                let adj = self.count_adjacent_active(&Self::edge_spans(&idx, axis, d));
                self.edge_boundary.push(adj < (1usize << (d - 1)));
            }
            self.edges.push(table);
        }

        self.faces.clear();
        match d {
            1 => {}
            2 => {
                // In 2-D, faces are the active cells.
                self.faces.push(self.cells.clone());
            }
            3 => {
                for normal in 0..3 {
                    let fshape = self.face_shape(normal);
                    let ftotal = fshape.iter().product();
                    let table = EntityTable::build(ftotal, |lin| {
                        let idx = Self::unlin(&fshape, lin);
                        self.count_adjacent_active(&Self::face_spans(&idx, normal, d)) > 0
                    });
                    self.faces.push(table);
                }
            }
            _ => unreachable!(),
        }
    }

    // ---- counts -------------------------------------------------------------

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(EntityTable::len).sum()
    }

    pub fn face_count(&self) -> usize {
        self.faces.iter().map(EntityTable::len).sum()
    }

    pub fn count(&self, kind: EntityKind) -> usize {
        match kind {
            EntityKind::Node => self.node_count(),
            EntityKind::Edge => self.edge_count(),
            EntityKind::Face => self.face_count(),
            EntityKind::Cell => self.cell_count(),
        }
    }

    // ---- compact-index accessors ---------------------------------------------

    /// (axis, per-axis compact index) of a global compact edge index.
    fn edge_split(&self, idx: usize) -> (usize, usize) {
        let mut rest = idx;
        for (axis, table) in self.edges.iter().enumerate() {
            if rest < table.len() {
                return (axis, rest);
            }
            rest -= table.len();
        }
        panic!("edge index {idx} out of range");
    }

    fn face_split(&self, idx: usize) -> (usize, usize) {
        let mut rest = idx;
        for (axis, table) in self.faces.iter().enumerate() {
            if rest < table.len() {
                return (axis, rest);
            }
            rest -= table.len();
        }
        panic!("face index {idx} out of range");
    }

    pub fn edge_axis(&self, idx: usize) -> usize {
        self.edge_split(idx).0
    }

    /// Normal axis of a face; in 2-D every face is the scalar out-of-plane
    /// component and this returns 2.
    pub fn face_axis(&self, idx: usize) -> usize {
        if self.dim() == 2 {
            2
        } else {
            self.face_split(idx).0
        }
    }

    pub fn node_is_boundary(&self, idx: usize) -> bool {
        self.node_boundary[idx]
    }

    pub fn edge_is_boundary(&self, idx: usize) -> bool {
        self.edge_boundary[idx]
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| !self.node_boundary[i]).collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.node_boundary[i]).collect()
    }

    /// Edges kept by a relative (tangential-trace-zero) condition.
    pub fn free_edges(&self) -> Vec<usize> {
        (0..self.edge_count()).filter(|&i| !self.edge_boundary[i]).collect()
    }

    pub fn boundary_edges(&self) -> Vec<usize> {
        (0..self.edge_count()).filter(|&i| self.edge_boundary[i]).collect()
    }

    // ---- geometry -------------------------------------------------------------

    pub fn node_position(&self, idx: usize) -> [f64; 3] {
        let shape = self.node_shape();
        let mi = Self::unlin(&shape, self.nodes.candidate[idx]);
        let mut p = [0.0; 3];
        for a in 0..self.dim() {
            p[a] = mi[a] as f64 * self.spacing[a];
        }
        p
    }

    pub fn edge_midpoint(&self, idx: usize) -> [f64; 3] {
        let (axis, local) = self.edge_split(idx);
        let shape = self.edge_shape(axis);
        let mi = Self::unlin(&shape, self.edges[axis].candidate[local]);
        let mut p = [0.0; 3];
        for a in 0..self.dim() {
            p[a] = mi[a] as f64 * self.spacing[a];
        }
        p[axis] += 0.5 * self.spacing[axis];
        p
    }

    pub fn face_center(&self, idx: usize) -> [f64; 3] {
        let d = self.dim();
        let (normal, local) = if d == 2 { (2, idx) } else { self.face_split(idx) };
        let shape = self.face_shape(if d == 2 { 0 } else { normal });
        let table = &self.faces[if d == 2 { 0 } else { normal }];
        let mi = Self::unlin(&shape, table.candidate[local]);
        let mut p = [0.0; 3];
        for a in 0..d {
            p[a] = mi[a] as f64 * self.spacing[a];
            if a != normal {
                p[a] += 0.5 * self.spacing[a];
            }
        }
        p
    }

    pub fn cell_center(&self, idx: usize) -> [f64; 3] {
        let shape = self.cell_shape();
        let mi = Self::unlin(&shape, self.cells.candidate[idx]);
        let mut p = [0.0; 3];
        for a in 0..self.dim() {
            p[a] = (mi[a] as f64 + 0.5) * self.spacing[a];
        }
        p
    }

    // ---- incidence -------------------------------------------------------------

    /// Compact node indices of an edge's (tail, head) endpoints.
    pub fn edge_endpoints(&self, idx: usize) -> (usize, usize) {
        let (axis, local) = self.edge_split(idx);
        let eshape = self.edge_shape(axis);
        let mut mi = Self::unlin(&eshape, self.edges[axis].candidate[local]);
        let nshape = self.node_shape();
        let tail = self.nodes.compact[Self::lin(&nshape, &mi)];
        mi[axis] += 1;
        let head = self.nodes.compact[Self::lin(&nshape, &mi)];
        debug_assert!(tail != usize::MAX && head != usize::MAX);
        (tail, head)
    }

    /// Signed circulation stencil of a face: `(edge index, coefficient)`
    /// pairs so that the face value of the curl is the sum of
    /// `coefficient * edge value`.
    pub fn face_circulation(&self, idx: usize) -> Vec<(usize, f64)> {
        let d = self.dim();
        let (normal, local) = if d == 2 { (2, idx) } else { self.face_split(idx) };
        let table = &self.faces[if d == 2 { 0 } else { normal }];
        let shape = self.face_shape(if d == 2 { 0 } else { normal });
        let mi = Self::unlin(&shape, table.candidate[local]);
        let (b, c) = match normal {
            2 => (0, 1),
            0 => (1, 2),
            1 => (2, 0),
            _ => unreachable!(),
        };
        let hb = self.spacing[b];
        let hc = self.spacing[c];
        let mut out = Vec::with_capacity(4);
        let push = |axis: usize, at: [usize; 3], coeff: f64, out: &mut Vec<(usize, f64)>| {
            let eshape = self.edge_shape(axis);
            let lin = Self::lin(&eshape, &at);
            let compact = self.edges[axis].compact[lin];
            debug_assert!(compact != usize::MAX, "face uses an inactive edge");
            let offset: usize = self.edges[..axis].iter().map(EntityTable::len).sum();
            out.push((offset + compact, coeff));
        };
        // (curl u)_normal = d_b u_c - d_c u_b
        let mut at = mi;
        push(c, at, -1.0 / hb, &mut out);
        at[b] += 1;
        push(c, at, 1.0 / hb, &mut out);
        let mut at = mi;
        push(b, at, 1.0 / hc, &mut out);
        at[c] += 1;
        push(b, at, -1.0 / hc, &mut out);
        out
    }

    // ---- masses ----------------------------------------------------------------

    fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn node_masses(&self) -> DVector<f64> {
        let d = self.dim();
        let vol = self.cell_volume();
        let share = vol / (1usize << d) as f64;
        let nshape = self.node_shape();
        DVector::from_iterator(
            self.node_count(),
            self.nodes.candidate.iter().map(|&lin| {
                let idx = Self::unlin(&nshape, lin);
                self.count_adjacent_active(&Self::node_spans(&idx, d)) as f64 * share
            }),
        )
    }

    pub fn edge_masses(&self) -> DVector<f64> {
        let d = self.dim();
        let vol = self.cell_volume();
        let share = vol / (1usize << (d - 1)) as f64;
        let mut out = Vec::with_capacity(self.edge_count());
        for (axis, table) in self.edges.iter().enumerate() {
            let eshape = self.edge_shape(axis);
            for &lin in &table.candidate {
                let idx = Self::unlin(&eshape, lin);
                let adj = self.count_adjacent_active(&Self::edge_spans(&idx, axis, d));
                out.push(adj as f64 * share);
            }
        }
        DVector::from_vec(out)
    }

    pub fn face_masses(&self) -> DVector<f64> {
        let d = self.dim();
        let vol = self.cell_volume();
        match d {
            2 => self.cell_masses(),
            3 => {
                let mut out = Vec::with_capacity(self.face_count());
                for (normal, table) in self.faces.iter().enumerate() {
                    let fshape = self.face_shape(normal);
                    for &lin in &table.candidate {
                        let idx = Self::unlin(&fshape, lin);
                        let adj =
                            self.count_adjacent_active(&Self::face_spans(&idx, normal, d));
                        out.push(adj as f64 * vol / 2.0);
                    }
                }
                DVector::from_vec(out)
            }
            _ => DVector::zeros(0),
        }
    }

    pub fn cell_masses(&self) -> DVector<f64> {
        DVector::from_element(self.cell_count(), self.cell_volume())
    }

    pub fn masses(&self, kind: EntityKind) -> DVector<f64> {
        match kind {
            EntityKind::Node => self.node_masses(),
            EntityKind::Edge => self.edge_masses(),
            EntityKind::Face => self.face_masses(),
            EntityKind::Cell => self.cell_masses(),
        }
    }

    /// Boundary-measure weight of every node (zero for interior nodes):
    /// in 1-D each boundary point counts 1, in 2-D each boundary edge
    /// contributes half its length to both endpoints, in 3-D each surface
    /// face contributes a quarter of its area to its corners.
    pub fn boundary_node_weights(&self) -> DVector<f64> {
        let d = self.dim();
        let mut w = DVector::zeros(self.node_count());
        match d {
            1 => {
                for i in 0..self.node_count() {
                    if self.node_boundary[i] {
                        w[i] = 1.0;
                    }
                }
            }
            2 => {
                for e in 0..self.edge_count() {
                    if !self.edge_boundary[e] {
                        continue;
                    }
                    let len = self.spacing[self.edge_axis(e)];
                    let (t, h) = self.edge_endpoints(e);
                    w[t] += 0.5 * len;
                    w[h] += 0.5 * len;
                }
            }
            3 => {
                let nshape = self.node_shape();
                for normal in 0..3 {
                    let fshape = self.face_shape(normal);
                    let area = self.cell_volume() / self.spacing[normal];
                    for &lin in &self.faces[normal].candidate {
                        let idx = Self::unlin(&fshape, lin);
                        if self.count_adjacent_active(&Self::face_spans(&idx, normal, d)) != 1 {
                            continue;
                        }
                        let (b, c) = match normal {
                            0 => (1, 2),
                            1 => (2, 0),
                            _ => (0, 1),
                        };
                        for db in 0..2 {
                            for dc in 0..2 {
                                let mut ni = idx;
                                ni[b] += db;
                                ni[c] += dc;
                                let node = self.nodes.compact[Self::lin(&nshape, &ni)];
                                w[node] += 0.25 * area;
                            }
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        w
    }
}

/// A flat field over one entity kind, in the frozen lexicographic order.
#[derive(Debug, Clone)]
pub struct StaggeredField {
    pub kind: EntityKind,
    pub values: DVector<f64>,
}

impl StaggeredField {
    pub fn new(grid: &GridSpec, kind: EntityKind, values: DVector<f64>) -> Result<Self> {
        let expected = grid.count(kind);
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "staggered field length",
                expected,
                got: values.len(),
            });
        }
        Ok(Self { kind, values })
    }

    pub fn zeros(grid: &GridSpec, kind: EntityKind) -> Self {
        Self {
            kind,
            values: DVector::zeros(grid.count(kind)),
        }
    }

    /// Sample a scalar function at node positions.
    pub fn sample_nodes(grid: &GridSpec, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        let values = DVector::from_iterator(
            grid.node_count(),
            (0..grid.node_count()).map(|i| f(&grid.node_position(i))),
        );
        Self {
            kind: EntityKind::Node,
            values,
        }
    }

    /// Sample the along-axis component of a vector function at edge midpoints.
    pub fn sample_edges(grid: &GridSpec, f: impl Fn(&[f64; 3], usize) -> f64) -> Self {
        let values = DVector::from_iterator(
            grid.edge_count(),
            (0..grid.edge_count()).map(|i| f(&grid.edge_midpoint(i), grid.edge_axis(i))),
        );
        Self {
            kind: EntityKind::Edge,
            values,
        }
    }
}
