//! Spectral machinery for symmetric nonnegative operators: full dense
//! eigendecomposition (Lanczos for partial spectra of large systems),
//! operator functions, the kernel/range split, and the exact wave
//! propagator.
//!
//! The propagator evolves (Q, V) in closed form: kernel modes drift as
//! `Q + tV` with constant V, range modes rotate with `cos(√λ t)`,
//! `sin(√λ t)/√λ` and `-√λ sin(√λ t)` coefficients. One call yields the
//! state at any time; there is no stepping error, so energy and the
//! symplectic pairing are conserved to round-off.

use nalgebra::{DMatrix, DVector};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg;
use crate::ops::DiscreteOperator;

/// Above this size a full dense decomposition is refused and callers must
/// ask for an explicit mode budget.
pub const DENSE_CUTOFF: usize = 4000;

const CACHE_MAGIC: &[u8; 4] = b"GNHS";
const CACHE_VERSION: u32 = 1;

/// Eigenpairs of a symmetric nonnegative operator in a diagonal mass inner
/// product, eigenvalues ascending, with the kernel block resolved.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    /// columns mass-orthonormal: Vᵀ diag(mass) V = I
    eigenvectors: DMatrix<f64>,
    mass: DVector<f64>,
    kernel_count: usize,
    ktol: f64,
    rtol: f64,
    full: bool,
}

/// What `apply_function` should do with the unresolved complement of a
/// partial decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplementPolicy {
    /// Error out (default): silently truncating would fake conservation.
    Reject,
    /// Act on the resolved span and drop the complement.
    ProjectOut,
}

/// State of the abstract wave equation.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub q: DVector<f64>,
    pub v: DVector<f64>,
    pub t: f64,
}

impl WaveState {
    pub fn new(q: DVector<f64>, v: DVector<f64>, t: f64) -> Result<Self> {
        if q.len() != v.len() {
            return Err(Error::DimensionMismatch {
                context: "wave state components",
                expected: q.len(),
                got: v.len(),
            });
        }
        Ok(Self { q, v, t })
    }
}

impl SpectralDecomposition {
    /// Assemble a decomposition from precomputed pieces (used by the cache
    /// reader and by model code that diagonalizes restricted operators).
    /// Eigenvalues must be ascending and the columns mass-orthonormal.
    pub fn from_parts(
        eigenvalues: DVector<f64>,
        eigenvectors: DMatrix<f64>,
        mass: DVector<f64>,
        kernel_count: usize,
        ktol: f64,
        rtol: f64,
        full: bool,
    ) -> Result<Self> {
        if eigenvectors.ncols() != eigenvalues.len() || eigenvectors.nrows() != mass.len() {
            return Err(Error::Shape(format!(
                "decomposition pieces disagree: {} values, {}x{} vectors, {} masses",
                eigenvalues.len(),
                eigenvectors.nrows(),
                eigenvectors.ncols(),
                mass.len()
            )));
        }
        if kernel_count > eigenvalues.len() {
            return Err(Error::Shape("kernel count exceeds mode count".into()));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
            mass,
            kernel_count,
            ktol,
            rtol,
            full,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn mass(&self) -> &DVector<f64> {
        &self.mass
    }

    pub fn kernel_count(&self) -> usize {
        self.kernel_count
    }

    pub fn ktol(&self) -> f64 {
        self.ktol
    }

    pub fn rtol(&self) -> f64 {
        self.rtol
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Mass inner product ⟨x, y⟩ = Σ mᵢ xᵢ yᵢ.
    pub fn mass_dot(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.iter()
            .zip(y.iter())
            .zip(self.mass.iter())
            .map(|((a, b), m)| a * b * m)
            .sum()
    }

    pub fn mass_norm(&self, x: &DVector<f64>) -> f64 {
        self.mass_dot(x, x).sqrt()
    }

    /// Coefficients ⟨v_k, x⟩ in the mass inner product.
    pub fn coefficients(&self, x: &DVector<f64>) -> DVector<f64> {
        let weighted = DVector::from_iterator(
            x.len(),
            x.iter().zip(self.mass.iter()).map(|(v, m)| v * m),
        );
        self.eigenvectors.transpose() * weighted
    }

    fn check_in_span(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let coeffs = self.coefficients(x);
        if !self.full {
            let rebuilt = &self.eigenvectors * &coeffs;
            let err = self.mass_norm(&(x - rebuilt));
            let scale = self.mass_norm(x).max(1e-300);
            if err > 100.0 * self.rtol * scale {
                return Err(Error::InvalidInput(format!(
                    "field is not contained in the decomposed span (residual {err:.3e})"
                )));
            }
        }
        Ok(coeffs)
    }
}

fn default_ktol(op_norm: f64) -> f64 {
    1e-9 * op_norm.max(1.0)
}

/// Symmetrized similarity transform S = M^{1/2} L M^{-1/2} of the
/// endomorphism entries, as a dense matrix.
fn symmetrized_dense(op: &DiscreteOperator) -> Result<DMatrix<f64>> {
    let (r, c) = op.shape();
    if r != c {
        return Err(Error::Shape(format!(
            "eigendecomposition needs an endomorphism, got {r}x{c}"
        )));
    }
    let m = &op.row_mass;
    let sqrt_m: Vec<f64> = m.iter().map(|v| v.sqrt()).collect();
    let mut s = DMatrix::zeros(r, r);
    for &(i, j, v) in op.matrix.triplets() {
        s[(i, j)] = sqrt_m[i] * v / sqrt_m[j];
    }
    Ok((&s + s.transpose()) * 0.5)
}

/// Full dense eigendecomposition of a symmetric (in the mass inner product)
/// nonnegative endomorphism. `ktol = None` uses `1e-9 · ‖op‖`. Eigenvalues
/// below `-ktol` are a hard error: the nonnegativity assumption is a
/// precondition of the closed-form propagator, not a suggestion.
pub fn eigendecompose(
    op: &DiscreteOperator,
    ktol: Option<f64>,
    rtol: f64,
) -> Result<SpectralDecomposition> {
    let n = op.shape().0;
    if n > DENSE_CUTOFF {
        return Err(Error::Unsupported(format!(
            "dense decomposition refused for n = {n} > {DENSE_CUTOFF}; request a mode budget"
        )));
    }
    let s = symmetrized_dense(op)?;
    let (values, w) = linalg::symmetric_eigen_ascending(&s);
    let op_norm = values.amax();
    let ktol = ktol.unwrap_or_else(|| default_ktol(op_norm));
    if values[0] < -ktol {
        return Err(Error::NotNonNegative {
            lambda: values[0],
            neg_ktol: -ktol,
        });
    }
    let kernel_count = values.iter().filter(|&&l| l.abs() <= ktol).count();
    // Transform back: V = M^{-1/2} W is mass-orthonormal.
    let mut vectors = w;
    for (i, mut row) in vectors.row_iter_mut().enumerate() {
        row /= op.row_mass[i].sqrt();
    }
    Ok(SpectralDecomposition {
        eigenvalues: values,
        eigenvectors: vectors,
        mass: op.row_mass.clone(),
        kernel_count,
        ktol,
        rtol,
        full: true,
    })
}

/// Partial decomposition of the low end of the spectrum via Lanczos with
/// full reorthogonalization. Returns the contiguous block of lowest Ritz
/// pairs whose residuals pass `rtol · ‖op‖`; the block may be shorter than
/// `budget` if convergence stalls.
pub fn eigendecompose_partial(
    op: &DiscreteOperator,
    ktol: Option<f64>,
    rtol: f64,
    budget: usize,
) -> Result<SpectralDecomposition> {
    let n = op.shape().0;
    if budget == 0 {
        return Err(Error::InvalidInput("mode budget must be positive".into()));
    }
    if budget >= n {
        return eigendecompose(op, ktol, rtol);
    }
    let sqrt_m: DVector<f64> = op.row_mass.map(f64::sqrt);
    // Symmetric operator action y = M^{1/2} L M^{-1/2} x via the sparse matrix.
    let apply_s = |x: &DVector<f64>| -> DVector<f64> {
        let scaled = DVector::from_iterator(n, x.iter().zip(sqrt_m.iter()).map(|(v, s)| v / s));
        let y = op.matrix.apply(&scaled);
        DVector::from_iterator(n, y.iter().zip(sqrt_m.iter()).map(|(v, s)| v * s))
    };

    let steps = (4 * budget + 40).min(n);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut alphas = Vec::with_capacity(steps);
    let mut betas = Vec::with_capacity(steps);
    // Deterministic start vector.
    let mut q = DVector::from_fn(n, |i, _| ((i as f64 + 1.0) * 0.7391).sin() + 0.01);
    q /= q.norm();
    basis.push(q.clone());
    let mut prev_beta = 0.0;
    let mut prev: Option<DVector<f64>> = None;
    for step in 0..steps {
        let mut w = apply_s(&basis[step]);
        if let Some(p) = &prev {
            w -= p * prev_beta;
        }
        let alpha = w.dot(&basis[step]);
        w -= &basis[step] * alpha;
        // Full reorthogonalization, twice.
        for _ in 0..2 {
            for b in &basis {
                let c = w.dot(b);
                w -= b * c;
            }
        }
        alphas.push(alpha);
        let beta = w.norm();
        if beta < 1e-14 || step + 1 == steps {
            break;
        }
        betas.push(beta);
        w /= beta;
        prev = Some(basis[step].clone());
        prev_beta = beta;
        basis.push(w);
    }

    let m = alphas.len();
    let mut tri = DMatrix::zeros(m, m);
    for i in 0..m {
        tri[(i, i)] = alphas[i];
        if i + 1 < m {
            tri[(i, i + 1)] = betas[i];
            tri[(i + 1, i)] = betas[i];
        }
    }
    let (theta, z) = linalg::symmetric_eigen_ascending(&tri);
    let op_norm = theta.amax();
    let ktol = ktol.unwrap_or_else(|| default_ktol(op_norm));

    let mut values = Vec::new();
    let mut vectors: Vec<DVector<f64>> = Vec::new();
    for k in 0..m {
        if values.len() >= budget {
            break;
        }
        let mut v = DVector::zeros(n);
        for (j, b) in basis.iter().enumerate() {
            v += b * z[(j, k)];
        }
        let residual = (apply_s(&v) - &v * theta[k]).norm();
        if residual > rtol.max(1e-12) * op_norm.max(1.0) {
            // The low block must stay contiguous.
            break;
        }
        values.push(theta[k]);
        vectors.push(v);
    }
    if values.is_empty() {
        return Err(Error::SingularSolve(
            "Lanczos produced no converged eigenpairs".into(),
        ));
    }
    if values[0] < -ktol {
        return Err(Error::NotNonNegative {
            lambda: values[0],
            neg_ktol: -ktol,
        });
    }
    let kernel_count = values.iter().filter(|&&l| l.abs() <= ktol).count();
    let k = values.len();
    let mut eigenvectors = DMatrix::zeros(n, k);
    for (col, v) in vectors.iter().enumerate() {
        for i in 0..n {
            eigenvectors[(i, col)] = v[i] / sqrt_m[i];
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues: DVector::from_vec(values),
        eigenvectors,
        mass: op.row_mass.clone(),
        kernel_count,
        ktol,
        rtol,
        full: false,
    })
}

/// Σ f(λ_k) ⟨v_k, x⟩ v_k. Rejects partial decompositions unless the caller
/// explicitly opts in to projecting the complement away.
pub fn apply_function_with(
    dec: &SpectralDecomposition,
    f: impl Fn(f64) -> f64,
    x: &DVector<f64>,
    policy: ComplementPolicy,
) -> Result<DVector<f64>> {
    if !dec.full && policy == ComplementPolicy::Reject {
        return Err(Error::Unsupported(
            "partial decomposition: pass ComplementPolicy::ProjectOut to act on the resolved span"
                .into(),
        ));
    }
    let coeffs = dec.coefficients(x);
    let mut scaled = coeffs;
    for (k, c) in scaled.iter_mut().enumerate() {
        let fl = f(dec.eigenvalues[k]);
        if !fl.is_finite() {
            return Err(Error::UndefinedAtEigenvalue {
                lambda: dec.eigenvalues[k],
            });
        }
        *c *= fl;
    }
    Ok(&dec.eigenvectors * scaled)
}

pub fn apply_function(
    dec: &SpectralDecomposition,
    f: impl Fn(f64) -> f64,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    apply_function_with(dec, f, x, ComplementPolicy::Reject)
}

/// Mass-orthogonal kernel/range split of `x` (kernel must be fully
/// resolved, which a full decomposition guarantees).
pub fn kernel_range_split(
    dec: &SpectralDecomposition,
    x: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let coeffs = dec.check_in_span(x)?;
    let mut kernel = DVector::zeros(x.len());
    for k in 0..dec.kernel_count {
        kernel += dec.eigenvectors.column(k) * coeffs[k];
    }
    let range = x - &kernel;
    Ok((kernel, range))
}

/// Exact evolution of the wave state by `t` (relative to the state's own
/// time stamp): kernel modes drift linearly, range modes rotate.
pub fn propagate(
    dec: &SpectralDecomposition,
    state: &WaveState,
    t: f64,
) -> Result<WaveState> {
    let n = dec.dim();
    if state.q.len() != n {
        return Err(Error::DimensionMismatch {
            context: "propagate state",
            expected: n,
            got: state.q.len(),
        });
    }
    let a = dec.check_in_span(&state.q)?;
    let b = dec.check_in_span(&state.v)?;
    let k = dec.mode_count();
    let mut qa = DVector::zeros(k);
    let mut vb = DVector::zeros(k);
    for i in 0..k {
        if i < dec.kernel_count {
            qa[i] = a[i] + t * b[i];
            vb[i] = b[i];
        } else {
            let omega = dec.eigenvalues[i].sqrt();
            let (s, c) = (omega * t).sin_cos();
            qa[i] = c * a[i] + s / omega * b[i];
            vb[i] = -omega * s * a[i] + c * b[i];
        }
    }
    Ok(WaveState {
        q: &dec.eigenvectors * qa,
        v: &dec.eigenvectors * vb,
        t: state.t + t,
    })
}

/// Wave energy ½(‖V‖² + Σ λ a_k²) in the mass inner product.
pub fn energy(dec: &SpectralDecomposition, state: &WaveState) -> f64 {
    let a = dec.coefficients(&state.q);
    let b = dec.coefficients(&state.v);
    let mut e = 0.0;
    for k in 0..dec.mode_count() {
        e += b[k] * b[k] + dec.eigenvalues[k] * a[k] * a[k];
    }
    0.5 * e
}

/// Canonical pairing ω((q₁,v₁),(q₂,v₂)) = ⟨q₁,v₂⟩ − ⟨q₂,v₁⟩ in the mass
/// inner product; the exact propagator preserves it.
pub fn symplectic_pairing(dec: &SpectralDecomposition, s1: &WaveState, s2: &WaveState) -> f64 {
    dec.mass_dot(&s1.q, &s2.v) - dec.mass_dot(&s2.q, &s1.v)
}

/// Kick-drift-kick leapfrog on q̈ = -op·q, used as an independent check of
/// the spectral propagator (sparse matrix-vector products only).
pub fn leapfrog(
    op: &DiscreteOperator,
    state: &WaveState,
    dt: f64,
    steps: usize,
) -> WaveState {
    let mut q = state.q.clone();
    let mut v = state.v.clone();
    for _ in 0..steps {
        let acc = -op.apply(&q);
        let v_half = &v + acc * (0.5 * dt);
        q += &v_half * dt;
        let acc = -op.apply(&q);
        v = v_half + acc * (0.5 * dt);
    }
    WaveState {
        q,
        v,
        t: state.t + dt * steps as f64,
    }
}

// ---- cache ------------------------------------------------------------------

fn push_f64s(buf: &mut Vec<u8>, values: impl Iterator<Item = f64>) {
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serialize the decomposition: magic `GNHS`, version, sizes, tolerances,
/// mass, eigenvalues, eigenvectors column-major, all little-endian. A JSON
/// sidecar (same path, `.json` extension) records the generating
/// fingerprint so stale caches are rejected.
pub fn write_cache(path: &Path, dec: &SpectralDecomposition, fingerprint: &str) -> Result<()> {
    let n = dec.dim() as u64;
    let k = dec.mode_count() as u64;
    let mut buf = Vec::with_capacity(64 + 8 * (dec.dim() * dec.mode_count() + dec.dim()));
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&k.to_le_bytes());
    buf.extend_from_slice(&(dec.kernel_count as u64).to_le_bytes());
    buf.extend_from_slice(&dec.ktol.to_le_bytes());
    buf.extend_from_slice(&dec.rtol.to_le_bytes());
    buf.push(u8::from(dec.full));
    push_f64s(&mut buf, dec.mass.iter().copied());
    push_f64s(&mut buf, dec.eigenvalues.iter().copied());
    push_f64s(&mut buf, dec.eigenvectors.iter().copied());
    // temp + rename so readers never observe a half-written cache
    let tmp = path.with_extension("eig.tmp");
    std::fs::File::create(&tmp)?.write_all(&buf)?;
    std::fs::rename(&tmp, path)?;

    let sidecar = serde_json::json!({
        "magic": "GNHS",
        "version": CACHE_VERSION,
        "fingerprint": fingerprint,
        "n": n,
        "modes": k,
        "kernel_count": dec.kernel_count,
        "ktol": dec.ktol,
    });
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, serde_json::to_string_pretty(&sidecar).expect("json"))?;
    std::fs::rename(&tmp, path.with_extension("json"))?;
    Ok(())
}

fn read_f64(buf: &[u8], at: &mut usize) -> Result<f64> {
    let end = *at + 8;
    if end > buf.len() {
        return Err(Error::Parse("cache file truncated".into()));
    }
    let v = f64::from_le_bytes(buf[*at..end].try_into().expect("8 bytes"));
    *at = end;
    Ok(v)
}

fn read_u64(buf: &[u8], at: &mut usize) -> Result<u64> {
    let end = *at + 8;
    if end > buf.len() {
        return Err(Error::Parse("cache file truncated".into()));
    }
    let v = u64::from_le_bytes(buf[*at..end].try_into().expect("8 bytes"));
    *at = end;
    Ok(v)
}

/// Load a cached decomposition, verifying the sidecar fingerprint first.
pub fn read_cache(path: &Path, expected_fingerprint: &str) -> Result<SpectralDecomposition> {
    let sidecar_path = path.with_extension("json");
    let sidecar: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(&sidecar_path)?,
    )
    .map_err(|e| Error::Parse(format!("cache sidecar: {e}")))?;
    let found = sidecar
        .get("fingerprint")
        .and_then(|v| v.as_str())
        .unwrap_or("")
        .to_string();
    if found != expected_fingerprint {
        return Err(Error::CacheFingerprint {
            expected: expected_fingerprint.to_string(),
            found,
        });
    }

    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    if buf.len() < 4 + 4 + 3 * 8 + 2 * 8 + 1 || &buf[0..4] != CACHE_MAGIC {
        return Err(Error::Parse("not a spectral cache file".into()));
    }
    let version = u32::from_le_bytes(buf[4..8].try_into().expect("4 bytes"));
    if version != CACHE_VERSION {
        return Err(Error::Parse(format!("unsupported cache version {version}")));
    }
    let mut at = 8;
    let n = read_u64(&buf, &mut at)? as usize;
    let k = read_u64(&buf, &mut at)? as usize;
    let kernel_count = read_u64(&buf, &mut at)? as usize;
    let ktol = read_f64(&buf, &mut at)?;
    let rtol = read_f64(&buf, &mut at)?;
    if at >= buf.len() {
        return Err(Error::Parse("cache file truncated".into()));
    }
    let full = buf[at] != 0;
    at += 1;
    let expected_len = at + 8 * (n + k + n * k);
    if buf.len() != expected_len {
        return Err(Error::Parse(format!(
            "cache length {} does not match header ({expected_len})",
            buf.len()
        )));
    }
    let mut mass = DVector::zeros(n);
    for i in 0..n {
        mass[i] = read_f64(&buf, &mut at)?;
    }
    let mut eigenvalues = DVector::zeros(k);
    for i in 0..k {
        eigenvalues[i] = read_f64(&buf, &mut at)?;
    }
    let mut eigenvectors = DMatrix::zeros(n, k);
    for col in 0..k {
        for row in 0..n {
            eigenvectors[(row, col)] = read_f64(&buf, &mut at)?;
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        mass,
        kernel_count,
        ktol,
        rtol,
        full,
    })
}
