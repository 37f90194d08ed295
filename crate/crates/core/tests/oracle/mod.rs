//! Brute-force reference for the constraint iteration, built on plain
//! Gauss-Jordan elimination over explicit constraint rows. Deliberately
//! avoids the library's SVD-based subspace machinery so the two routes are
//! independent: subspaces are solution sets `{m : C m = d}`, null spaces
//! come from free columns of the reduced echelon form, and rank decisions
//! use a fixed absolute threshold suited to the small integer-valued test
//! systems this runs on.

pub struct OracleOutcome {
    pub chain_dims: Vec<usize>,
    pub steps: usize,
    pub final_empty: bool,
    pub final_dim: Option<usize>,
    pub gauge_dim: Option<usize>,
}

fn maxabs(rows: &[Vec<f64>]) -> f64 {
    rows.iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

/// In-place Gauss-Jordan on the first `ncols` columns (extra columns ride
/// along as right-hand sides). Returns the pivot column list.
fn row_echelon(rows: &mut Vec<Vec<f64>>, ncols: usize, thresh: f64) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        // partial pivoting
        let mut best = r;
        for i in r..rows.len() {
            if rows[i][c].abs() > rows[best][c].abs() {
                best = i;
            }
        }
        if rows.is_empty() || r >= rows.len() || rows[best][c].abs() <= thresh {
            continue;
        }
        rows.swap(r, best);
        let scale = rows[r][c];
        for v in rows[r].iter_mut() {
            *v /= scale;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c].abs() > 0.0 {
                let f = rows[i][c];
                let (head, tail) = rows.split_at_mut(r.max(i));
                let (pivot_row, row): (&Vec<f64>, &mut Vec<f64>) = if i < r {
                    (&tail[0], &mut head[i])
                } else {
                    (&head[r], &mut tail[0])
                };
                for (x, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *x -= f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

/// Basis of `{x : rows · x = 0}` from the free columns of the echelon form.
fn null_basis(rows: &[Vec<f64>], n: usize, thresh: f64) -> Vec<Vec<f64>> {
    let mut work: Vec<Vec<f64>> = rows.iter().map(|r| r[..n].to_vec()).collect();
    let pivots = row_echelon(&mut work, n, thresh);
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for free in 0..n {
        if is_pivot[free] {
            continue;
        }
        let mut v = vec![0.0; n];
        v[free] = 1.0;
        for (row_idx, &p) in pivots.iter().enumerate() {
            v[p] = -work[row_idx][free];
        }
        basis.push(v);
    }
    basis
}

fn matvec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x.iter()).map(|(a, b)| a * b).sum())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Run the constraint iteration from the full space, mirroring the
/// library's chain/step bookkeeping.
pub fn brute_force_chain(
    omega: &[Vec<f64>],
    quadratic: &[Vec<f64>],
    linear: &[f64],
    max_steps: usize,
) -> OracleOutcome {
    let n = linear.len();
    let scale = maxabs(omega)
        .max(maxabs(quadratic))
        .max(linear.iter().fold(0.0f64, |a, &v| a.max(v.abs())))
        .max(1.0);
    let thresh = 1e-8 * scale;

    // Ωᵀ as explicit rows (the flat map applied to candidate fields X).
    let omega_t: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| omega[j][i]).collect())
        .collect();

    // Constraint rows [c | d] meaning c·m = d.
    let mut constraints: Vec<Vec<f64>> = Vec::new();
    let mut chain_dims = vec![n];
    let mut rank = 0usize;
    let mut final_empty = false;
    let mut terminated = false;

    loop {
        let tangent = null_basis(&constraints, n, thresh);
        // G = Ωᵀ · N, one column per tangent direction.
        let g: Vec<Vec<f64>> = (0..n)
            .map(|i| tangent.iter().map(|t| dot(&omega_t[i], t)).collect())
            .collect();
        // w ranges over the left null space of G: null of Gᵀ.
        let g_t: Vec<Vec<f64>> = (0..tangent.len())
            .map(|j| (0..n).map(|i| g[i][j]).collect())
            .collect();
        let left_null = null_basis(&g_t, n, thresh);

        let mut appended = constraints.clone();
        for w in &left_null {
            let mut row: Vec<f64> = matvec(quadratic, w);
            row.push(-dot(w, linear));
            appended.push(row);
        }
        let pivots = row_echelon(&mut appended, n, thresh);
        let new_rank = pivots.len();
        // inconsistent system: a zero row with nonzero right-hand side
        let inconsistent = appended
            .iter()
            .any(|row| row[..n].iter().all(|v| v.abs() <= thresh) && row[n].abs() > thresh);
        if inconsistent {
            final_empty = true;
            chain_dims.push(0);
            terminated = true;
            break;
        }
        if new_rank == rank {
            terminated = true;
            break;
        }
        rank = new_rank;
        constraints = appended
            .into_iter()
            .filter(|row| row[..n].iter().any(|v| v.abs() > thresh))
            .collect();
        chain_dims.push(n - rank);
        if chain_dims.len() > max_steps {
            break;
        }
    }

    let steps = chain_dims.len();
    if final_empty || !terminated {
        let final_dim = if final_empty { None } else { chain_dims.last().copied() };
        return OracleOutcome {
            chain_dims,
            steps,
            final_empty,
            final_dim,
            gauge_dim: None,
        };
    }

    let final_dim = n - rank;
    // gauge = tangent ∩ symplectic-orthogonal: null of [C ; NᵀΩ].
    let tangent = null_basis(&constraints, n, thresh);
    let mut stacked: Vec<Vec<f64>> = constraints.iter().map(|r| r[..n].to_vec()).collect();
    for t in &tangent {
        // row z ↦ ω(t, z) = Σ_j (Σ_i t_i Ω[i][j]) z_j
        let row: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| t[i] * omega[i][j]).sum())
            .collect();
        stacked.push(row);
    }
    let gauge = null_basis(&stacked, n, thresh).len();

    OracleOutcome {
        chain_dims,
        steps,
        final_empty: false,
        final_dim: Some(final_dim),
        gauge_dim: Some(gauge),
    }
}

#[allow(dead_code)]
pub fn oracle_null_dim(rows: &[Vec<f64>], n: usize) -> usize {
    let thresh = 1e-8 * maxabs(rows).max(1.0);
    null_basis(rows, n, thresh).len()
}
