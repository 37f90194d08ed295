//! Discretization accuracy: eigenvalues of the assembled operators against
//! closed-form and continuum oracles, with measured convergence rates.

use gnh_core::grid::GridSpec;
use gnh_core::ops::{build_curl_curl, build_scalar_laplacian, BoundaryConditionSpec};
use gnh_core::spectral::eigendecompose;

const PI: f64 = std::f64::consts::PI;

fn dirichlet_eigenvalue(cells: usize, k: usize) -> f64 {
    let grid = GridSpec::line(cells, 1.0 / cells as f64).unwrap();
    let op = build_scalar_laplacian(&grid, &BoundaryConditionSpec::dirichlet())
        .unwrap()
        .scaled(-1.0);
    let dec = eigendecompose(&op, None, 1e-12).unwrap();
    dec.eigenvalues()[k - 1]
}

#[test]
fn dirichlet_eigenvalues_converge_at_second_order() {
    // closed-form stencil spectrum on [0,1]: (4/h²) sin²(kπh/2)
    for cells in [8usize, 16] {
        let h = 1.0 / cells as f64;
        for k in 1..=3usize {
            let expected = 4.0 / (h * h) * (k as f64 * PI * h / 2.0).sin().powi(2);
            let got = dirichlet_eigenvalue(cells, k);
            assert!(
                (got - expected).abs() <= 1e-12 * expected,
                "stencil formula violated at h = {h}, k = {k}"
            );
        }
    }
    // convergence to the continuum (kπ)² at O(h²), measured over a halving
    for k in 1..=2usize {
        let exact = (k as f64 * PI).powi(2);
        let e1 = (dirichlet_eigenvalue(16, k) - exact).abs();
        let e2 = (dirichlet_eigenvalue(32, k) - exact).abs();
        let order = (e1 / e2).log2();
        assert!(
            (1.9..=2.1).contains(&order),
            "mode {k}: measured order {order}"
        );
    }
}

/// Continuum Robin dispersion on [0,1] with B = -1 at both ends:
/// eigenfunction cos(ωx) + sin(ωx)/ω needs (1 - ω²) sin ω + 2ω cos ω = 0.
fn robin_continuum_lowest() -> f64 {
    let f = |w: f64| (1.0 - w * w) * w.sin() + 2.0 * w * w.cos();
    let (mut lo, mut hi) = (0.1f64, 0.5 * PI);
    assert!(f(lo) > 0.0 && f(hi) < 0.0, "root not bracketed");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = 0.5 * (lo + hi);
    w * w
}

fn robin_lowest_eigenvalue(cells: usize) -> f64 {
    let grid = GridSpec::line(cells, 1.0 / cells as f64).unwrap();
    let bc = BoundaryConditionSpec::robin_constant(&grid, -1.0);
    let op = build_scalar_laplacian(&grid, &bc).unwrap().scaled(-1.0);
    let dec = eigendecompose(&op, None, 1e-12).unwrap();
    dec.eigenvalues()[0]
}

#[test]
fn robin_lowest_eigenvalue_matches_bisection_oracle() {
    let exact = robin_continuum_lowest();
    assert!((1.0..3.0).contains(&exact), "sanity: λ₁ = {exact}");
    let e1 = (robin_lowest_eigenvalue(32) - exact).abs();
    let e2 = (robin_lowest_eigenvalue(64) - exact).abs();
    assert!(e1 < 0.01 * exact, "coarse grid already close");
    let order = (e1 / e2).log2();
    assert!(
        (1.8..=2.2).contains(&order),
        "Robin convergence order {order} not second order"
    );
}

fn cavity_low_modes(cells: usize, bc: &BoundaryConditionSpec, count: usize) -> Vec<f64> {
    let h = 1.0 / cells as f64;
    let grid = GridSpec::rect([cells, cells], [h, h]).unwrap();
    let cc = build_curl_curl(&grid, bc).unwrap();
    let dec = eigendecompose(&cc, None, 1e-10).unwrap();
    // skip the gradient kernel; return the smallest curl-carrying modes
    dec.eigenvalues()
        .iter()
        .copied()
        .filter(|&l| l > 1e-6)
        .take(count)
        .collect()
}

#[test]
fn cavity_eigenvalues_match_the_analytic_spectrum() {
    // Unit square. Divergence-free eigenfields derive from a stream
    // function ψ with u = (∂_y ψ, -∂_x ψ): the relative (perfect conductor)
    // condition makes ψ Neumann, so λ ∈ π²·{1, 1, 2, ...}; the absolute
    // condition makes ψ Dirichlet, so λ ∈ π²·{2, 5, 5, ...}.
    let rel_exact = [PI * PI, PI * PI, 2.0 * PI * PI];
    let abs_exact = [2.0 * PI * PI, 5.0 * PI * PI, 5.0 * PI * PI];
    for (bc, exact) in [
        (BoundaryConditionSpec::relative(), rel_exact),
        (BoundaryConditionSpec::absolute(), abs_exact),
    ] {
        let coarse = cavity_low_modes(8, &bc, 3);
        let fine = cavity_low_modes(16, &bc, 3);
        for k in 0..3 {
            let e1 = (coarse[k] - exact[k]).abs();
            let e2 = (fine[k] - exact[k]).abs();
            assert!(
                e1 < 0.05 * exact[k],
                "mode {k}: coarse value {} too far from {}",
                coarse[k],
                exact[k]
            );
            let order = (e1 / e2).log2();
            assert!(
                (1.7..=2.3).contains(&order),
                "mode {k}: Richardson order {order}"
            );
        }
    }
}
