//! `gnh` / `classify`: run the constraint chain on the configured system
//! (or raw matrices) and report the chain, gauge count and geometric class.

use serde_json::json;

use gnh_core::io;
use gnh_core::linalg::default_rank_tol;
use gnh_core::models::{assemble_maxwell_system, assemble_scalar_system};
use gnh_core::presym::{classify_submanifold, constraint_chain};

use crate::config::RunConfig;
use crate::{assemble, CliError, Context};

pub fn run(cfg: &RunConfig, _ctx: &Context, classify_only: bool) -> Result<(), CliError> {
    let system = match assemble::load_raw_system(cfg)? {
        Some(sys) => sys,
        None => match cfg.model.kind.as_str() {
            "scalar" => assemble_scalar_system(&assemble::build_scalar_model(cfg)?)?,
            "maxwell" => assemble_maxwell_system(&assemble::build_maxwell_model(cfg)?)?,
            other => {
                return Err(CliError::Config(format!(
                    "gnh needs model.kind scalar/maxwell or [gnh] matrix files, got {other:?}"
                )))
            }
        },
    };
    let n = system.dim();
    let tol = cfg.tolerances.tol.unwrap_or_else(|| default_rank_tol(n));
    let max_steps = cfg.gnh.max_steps.unwrap_or(n + 2);
    let result = constraint_chain(&system, max_steps, tol)?;

    let classification = if result.terminated && !result.final_subspace.is_empty() {
        Some(classify_submanifold(&system.form, &result.final_subspace)?)
    } else {
        None
    };

    std::fs::create_dir_all(&cfg.output.dir)?;
    let class_json = classification.as_ref().map(|c| {
        json!({
            "class": c.class.to_string(),
            "orthogonal_within_tangent": c.orthogonal_within_tangent,
            "tangent_within_orthogonal": c.tangent_within_orthogonal,
            "orthogonal_dim": c.orthogonal_dim,
            "intersection_dim": c.intersection_dim,
        })
    });

    if classify_only {
        let report = json!({
            "classification": class_json,
            "final_dim": result.final_subspace.dim(),
            "final_empty": result.final_subspace.is_empty(),
        });
        let path = cfg.output.dir.join("classify.json");
        io::write_atomic(&path, &format!("{:#}\n", report))?;
        match &classification {
            Some(c) => println!("class: {}", c.class),
            None => println!("class: undefined (chain did not terminate on a nonempty set)"),
        }
    } else {
        let report = json!({
            "ambient_dim": n,
            "steps": result.steps,
            "chain_dims": result.chain_dims(),
            "terminated": result.terminated,
            "final_dim": result.final_subspace.dim(),
            "final_empty": result.final_subspace.is_empty(),
            "gauge_dim": result.gauge_dim(),
            "classification": class_json,
        });
        let path = cfg.output.dir.join("gnh.json");
        io::write_atomic(&path, &format!("{:#}\n", report))?;
        println!(
            "gnh: chain {:?}, gauge {}, class {} -> {}",
            result.chain_dims(),
            result.gauge_dim(),
            classification
                .as_ref()
                .map_or("n/a".to_string(), |c| c.class.to_string()),
            path.display()
        );
    }

    if !result.terminated {
        return Err(CliError::NonTermination(result.steps));
    }
    Ok(())
}
