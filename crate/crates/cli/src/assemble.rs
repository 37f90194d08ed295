//! Construction of grids, boundary conditions, models and operators from a
//! run configuration, plus the cached spectral decompositions.

use nalgebra::{DMatrix, DVector};
use std::path::PathBuf;

use gnh_core::grid::{GridSpec, HoleBox};
use gnh_core::io;
use gnh_core::models::{maxwell_mode_decomposition, MaxwellModel, ScalarModel};
use gnh_core::ops::{BoundaryConditionSpec, DiscreteOperator, EntitySpace, SparseMatrix};
use gnh_core::presym::{PresymplecticForm, PresymplecticSystem, QuadraticHamiltonian};
use gnh_core::spectral::{self, SpectralDecomposition};

use crate::config::RunConfig;
use crate::CliError;

pub fn build_grid(cfg: &RunConfig) -> Result<GridSpec, CliError> {
    let g = &cfg.grid;
    if g.cells.len() != g.dim || g.spacing.len() != g.dim {
        return Err(CliError::Config(format!(
            "grid.cells and grid.spacing must both have {} entries",
            g.dim
        )));
    }
    let hole = g.hole.as_ref().map(|h| HoleBox { lo: h.lo, hi: h.hi });
    Ok(GridSpec::new(g.cells.clone(), g.spacing.clone(), hole)?)
}

pub fn build_bc(cfg: &RunConfig, grid: &GridSpec) -> Result<BoundaryConditionSpec, CliError> {
    match cfg.model.kind.as_str() {
        "maxwell" => match cfg.bc.vector.as_str() {
            "relative" => Ok(BoundaryConditionSpec::relative()),
            "absolute" => Ok(BoundaryConditionSpec::absolute()),
            other => Err(CliError::Config(format!("unknown vector bc {other:?}"))),
        },
        _ => match cfg.bc.scalar.as_str() {
            "dirichlet" => Ok(BoundaryConditionSpec::dirichlet()),
            "neumann" => Ok(BoundaryConditionSpec::neumann()),
            "robin" => {
                let coefficients = match &cfg.bc.robin_b_file {
                    Some(path) => {
                        let text = std::fs::read_to_string(path)?;
                        io::parse_field_csv(&text, grid.boundary_nodes().len())?
                            .iter()
                            .copied()
                            .collect()
                    }
                    None => vec![cfg.bc.robin_b; grid.boundary_nodes().len()],
                };
                Ok(BoundaryConditionSpec::robin(coefficients))
            }
            other => Err(CliError::Config(format!("unknown scalar bc {other:?}"))),
        },
    }
}

pub fn build_scalar_model(cfg: &RunConfig) -> Result<ScalarModel, CliError> {
    let grid = build_grid(cfg)?;
    let bc = build_bc(cfg, &grid)?;
    Ok(ScalarModel::new(grid, bc)?)
}

pub fn build_maxwell_model(cfg: &RunConfig) -> Result<MaxwellModel, CliError> {
    let grid = build_grid(cfg)?;
    let bc = build_bc(cfg, &grid)?;
    let mut model = MaxwellModel::new(grid, bc)?;
    model.ctol = cfg.tolerances.ctol();
    Ok(model)
}

/// Raw operator from a matrix text file, with an optional mass CSV
/// (defaults to unit masses). The operator must be square.
pub fn load_operator(cfg: &RunConfig) -> Result<DiscreteOperator, CliError> {
    let path = cfg
        .model
        .operator_file
        .as_ref()
        .ok_or_else(|| CliError::Config("model.kind = \"operator\" needs model.operator_file".into()))?;
    let dense = io::read_matrix_text(path)?;
    if dense.nrows() != dense.ncols() {
        return Err(CliError::Core(gnh_core::Error::Shape(format!(
            "operator must be square, got {}x{}",
            dense.nrows(),
            dense.ncols()
        ))));
    }
    let n = dense.nrows();
    let mass = match &cfg.model.mass_file {
        Some(mpath) => {
            let text = std::fs::read_to_string(mpath)?;
            io::parse_field_csv(&text, n)?
        }
        None => DVector::from_element(n, 1.0),
    };
    if mass.iter().any(|&m| !(m > 0.0)) {
        return Err(CliError::Config("operator masses must be positive".into()));
    }
    let mut triplets = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if dense[(r, c)] != 0.0 {
                triplets.push((r, c, dense[(r, c)]));
            }
        }
    }
    let space = EntitySpace {
        kind: gnh_core::grid::EntityKind::Node,
        len: n,
        label: "raw".into(),
    };
    Ok(DiscreteOperator {
        rows: space.clone(),
        cols: space,
        matrix: SparseMatrix::from_triplets(n, n, triplets),
        row_mass: mass.clone(),
        col_mass: mass,
    })
}

/// Raw presymplectic system from `[gnh]` matrix files.
pub fn load_raw_system(cfg: &RunConfig) -> Result<Option<PresymplecticSystem>, CliError> {
    let Some(omega_path) = &cfg.gnh.omega_file else {
        return Ok(None);
    };
    let omega = io::read_matrix_text(omega_path)?;
    let n = omega.nrows();
    let quadratic = match &cfg.gnh.a_file {
        Some(p) => io::read_matrix_text(p)?,
        None => DMatrix::zeros(n, n),
    };
    let linear = match &cfg.gnh.b_file {
        Some(p) => {
            let m = io::read_matrix_text(p)?;
            if m.ncols() != 1 {
                return Err(CliError::Core(gnh_core::Error::Shape(
                    "b file must be a single-column matrix".into(),
                )));
            }
            DVector::from_column_slice(m.as_slice())
        }
        None => DVector::zeros(n),
    };
    let system = PresymplecticSystem::new(
        PresymplecticForm::new(omega)?,
        QuadraticHamiltonian::new(quadratic, linear, 0.0)?,
    )?;
    Ok(Some(system))
}

/// The wave operator of the configured model (-Δ for scalar, the raw matrix
/// for operator runs) as a nonnegative endomorphism.
pub fn wave_operator(cfg: &RunConfig) -> Result<DiscreteOperator, CliError> {
    match cfg.model.kind.as_str() {
        "scalar" => {
            let model = build_scalar_model(cfg)?;
            Ok(model.laplacian.scaled(-1.0))
        }
        "operator" => load_operator(cfg),
        other => Err(CliError::Config(format!(
            "wave operator undefined for model kind {other:?}"
        ))),
    }
}

fn cache_paths(cfg: &RunConfig, cache_override: Option<&PathBuf>, what: &str) -> Option<(PathBuf, String)> {
    let dir = cache_override.cloned().or_else(|| cfg.cache.dir.clone())?;
    let fingerprint = io::fingerprint(&cfg.fingerprint_text(what));
    let file = dir.join(format!("{}-{}.eig", what, &fingerprint[..16]));
    Some((file, fingerprint))
}

/// Decompose the configured model's operator, consulting the cache when a
/// cache directory is set. A stale or unreadable cache is rebuilt with a
/// warning on stderr.
pub fn decomposition_with_cache(
    cfg: &RunConfig,
    cache_override: Option<&PathBuf>,
) -> Result<SpectralDecomposition, CliError> {
    let what = match cfg.model.kind.as_str() {
        "maxwell" => "maxwell-modes",
        "operator" => "operator-modes",
        _ => "scalar-modes",
    };
    let cache = cache_paths(cfg, cache_override, what);
    if let Some((path, fingerprint)) = &cache {
        if path.exists() {
            match spectral::read_cache(path, fingerprint) {
                Ok(dec) => return Ok(dec),
                Err(e) => {
                    eprintln!("warning: rebuilding cache {}: {e}", path.display());
                }
            }
        }
    }
    let dec = match cfg.model.kind.as_str() {
        "maxwell" => {
            let model = build_maxwell_model(cfg)?;
            maxwell_mode_decomposition(&model)?
        }
        _ => {
            let op = wave_operator(cfg)?;
            if cfg.propagate.mode_budget > 0 {
                spectral::eigendecompose_partial(
                    &op,
                    cfg.tolerances.ktol,
                    cfg.tolerances.rtol(),
                    cfg.propagate.mode_budget,
                )?
            } else {
                spectral::eigendecompose(&op, cfg.tolerances.ktol, cfg.tolerances.rtol())?
            }
        }
    };
    if let Some((path, fingerprint)) = &cache {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        spectral::write_cache(path, &dec, fingerprint)?;
    }
    Ok(dec)
}
