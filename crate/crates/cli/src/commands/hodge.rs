//! `hodge`: split an edge field into harmonic / transverse / longitudinal
//! parts; write the three field CSVs and a JSON summary.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use gnh_core::hodge::HodgeProjector;
use gnh_core::io;

use crate::config::RunConfig;
use crate::{assemble, CliError, Context};

pub fn run(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let grid = assemble::build_grid(cfg)?;
    let bc = match cfg.bc.vector.as_str() {
        "relative" => gnh_core::ops::BoundaryConditionSpec::relative(),
        "absolute" => gnh_core::ops::BoundaryConditionSpec::absolute(),
        other => return Err(CliError::Config(format!("unknown vector bc {other:?}"))),
    };
    let projector = HodgeProjector::new(&grid, &bc)?;
    let n = projector.edge_dim();

    let field = match &cfg.hodge.field_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            io::parse_field_csv(&text, n)?
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
        }
    };

    let parts = projector.decompose(&field)?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    io::write_atomic(&cfg.output.dir.join("hodge_harmonic.csv"), &io::field_csv(&parts.harmonic))?;
    io::write_atomic(
        &cfg.output.dir.join("hodge_transverse.csv"),
        &io::field_csv(&parts.transverse),
    )?;
    io::write_atomic(
        &cfg.output.dir.join("hodge_longitudinal.csv"),
        &io::field_csv(&parts.longitudinal),
    )?;

    let reconstruction = (parts.reconstruct() - &field).norm();
    let summary = json!({
        "bc": cfg.bc.vector,
        "edge_dof": n,
        "harmonic_dim": projector.harmonic().dim(),
        "norm_harmonic": projector.mass_norm(&parts.harmonic),
        "norm_transverse": projector.mass_norm(&parts.transverse),
        "norm_longitudinal": projector.mass_norm(&parts.longitudinal),
        "reconstruction_error": reconstruction,
        "orthogonality": {
            "harmonic_transverse": projector.mass_dot(&parts.harmonic, &parts.transverse),
            "harmonic_longitudinal": projector.mass_dot(&parts.harmonic, &parts.longitudinal),
            "transverse_longitudinal": projector.mass_dot(&parts.transverse, &parts.longitudinal),
        },
    });
    io::write_atomic(&cfg.output.dir.join("hodge.json"), &format!("{:#}\n", summary))?;
    println!(
        "hodge: harmonic dim {} -> {}",
        projector.harmonic().dim(),
        cfg.output.dir.display()
    );
    Ok(())
}
