//! `propagate`: evaluate the exact propagator at each requested time and
//! write one state CSV per time plus a JSON run manifest with energy,
//! constraint and symplectic-drift columns.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use gnh_core::io;
use gnh_core::models::{
    check_maxwell_constraints, check_scalar_constraints, evolve_maxwell,
    GaugeChoice, MaxwellState, ScalarState,
};
use gnh_core::spectral::{self, WaveState};

use super::parallel_map;
use crate::config::RunConfig;
use crate::{assemble, CliError, Context};

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn state_path(cfg: &RunConfig, idx: usize) -> std::path::PathBuf {
    cfg.output.dir.join(format!("state_{idx:04}.csv"))
}

pub fn run(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.output.dir)?;
    match cfg.model.kind.as_str() {
        "maxwell" => run_maxwell(cfg, ctx),
        "scalar" | "operator" => run_wave(cfg, ctx),
        other => Err(CliError::Config(format!("cannot propagate model kind {other:?}"))),
    }
}

fn run_wave(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let dec = assemble::decomposition_with_cache(cfg, ctx.cache_dir.as_ref())?;
    let n = dec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let (q0, p0) = match cfg.propagate.initial.as_str() {
        "random" => (random_vector(&mut rng, n), random_vector(&mut rng, n)),
        "mode" => {
            let k = cfg.propagate.mode_index;
            if k >= dec.mode_count() {
                return Err(CliError::Config(format!(
                    "mode_index {k} outside the {} computed modes",
                    dec.mode_count()
                )));
            }
            (dec.eigenvectors().column(k).into_owned(), DVector::zeros(n))
        }
        "file" => {
            let path = cfg.propagate.state_file.as_ref().ok_or_else(|| {
                CliError::Config("propagate.initial = \"file\" needs propagate.state_file".into())
            })?;
            let text = std::fs::read_to_string(path)?;
            let mut parts = io::parse_state_csv(&text, &[("q", n), ("p", n)])?;
            let p = parts.pop().expect("two components");
            let q = parts.pop().expect("two components");
            (q, p)
        }
        other => return Err(CliError::Config(format!("unknown initial state kind {other:?}"))),
    };
    let s0 = WaveState::new(q0, p0, 0.0)?;
    // auxiliary pair for the symplectic-drift column
    let aux1 = WaveState::new(random_vector(&mut rng, n), random_vector(&mut rng, n), 0.0)?;
    let aux2 = WaveState::new(random_vector(&mut rng, n), random_vector(&mut rng, n), 0.0)?;
    let pairing0 = spectral::symplectic_pairing(&dec, &aux1, &aux2);

    let scalar_model = (cfg.model.kind == "scalar")
        .then(|| assemble::build_scalar_model(cfg))
        .transpose()?;

    let times = &cfg.propagate.times;
    let states = parallel_map(times.len(), ctx.threads, |i| {
        let t = times[i];
        let s = spectral::propagate(&dec, &s0, t)?;
        let e1 = spectral::propagate(&dec, &aux1, t)?;
        let e2 = spectral::propagate(&dec, &aux2, t)?;
        let drift = (spectral::symplectic_pairing(&dec, &e1, &e2) - pairing0).abs()
            / pairing0.abs().max(1.0);
        Ok::<_, gnh_core::Error>((s, drift))
    });

    let mut rows = Vec::with_capacity(times.len());
    for (i, item) in states.into_iter().enumerate() {
        let (state, drift) = item?;
        let csv = io::state_csv(&[("q", &state.q), ("p", &state.v)]);
        io::write_atomic(&state_path(cfg, i), &csv)?;
        let mut row = json!({
            "t": times[i],
            "energy": spectral::energy(&dec, &state),
            "symplectic_drift": drift,
        });
        if let Some(model) = &scalar_model {
            let report = check_scalar_constraints(
                model,
                &ScalarState { q: state.q.clone(), p: state.v.clone() },
            )?;
            row.as_object_mut()
                .expect("row is an object")
                .insert("constraints".into(), json!(report.entries));
        }
        rows.push(row);
    }

    let manifest = json!({
        "model": cfg.model.kind,
        "dof": n,
        "seed": ctx.seed,
        "times": times,
        "rows": rows,
    });
    io::write_atomic(
        &cfg.output.dir.join("propagate.json"),
        &format!("{:#}\n", manifest),
    )?;
    println!("propagate: {} states -> {}", times.len(), cfg.output.dir.display());
    Ok(())
}

fn run_maxwell(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let model = assemble::build_maxwell_model(cfg)?;
    let a = model.node_dof();
    let e = model.edge_dof();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let s0 = match cfg.propagate.initial.as_str() {
        "random" => {
            // random but physically admissible: project the momentum
            let hodge = model.hodge()?;
            MaxwellState {
                q_perp: random_vector(&mut rng, a),
                q: random_vector(&mut rng, e),
                p: hodge.project_physical(&random_vector(&mut rng, e))?,
            }
        }
        "mode" => {
            let dec = gnh_core::models::maxwell_mode_decomposition(&model)?;
            let k = cfg.propagate.mode_index;
            if k >= dec.mode_count() {
                return Err(CliError::Config(format!(
                    "mode_index {k} outside the {} physical modes",
                    dec.mode_count()
                )));
            }
            MaxwellState {
                q_perp: DVector::zeros(a),
                q: dec.eigenvectors().column(k).into_owned(),
                p: DVector::zeros(e),
            }
        }
        "file" => {
            let path = cfg.propagate.state_file.as_ref().ok_or_else(|| {
                CliError::Config("propagate.initial = \"file\" needs propagate.state_file".into())
            })?;
            let text = std::fs::read_to_string(path)?;
            let mut parts =
                io::parse_state_csv(&text, &[("q_perp", a), ("q", e), ("p", e)])?;
            let p = parts.pop().expect("three components");
            let q = parts.pop().expect("three components");
            let q_perp = parts.pop().expect("three components");
            MaxwellState { q_perp, q, p }
        }
        other => return Err(CliError::Config(format!("unknown initial state kind {other:?}"))),
    };
    let gauge = if cfg.propagate.gauge_rate == 0.0 {
        GaugeChoice::FixedPotential
    } else {
        GaugeChoice::Rate(DVector::from_element(a, cfg.propagate.gauge_rate))
    };

    // auxiliary Gauss-respecting pair for the symplectic-drift column
    let hodge = model.hodge()?;
    let mk_aux = |rng: &mut ChaCha8Rng| -> Result<MaxwellState, CliError> {
        Ok(MaxwellState {
            q_perp: DVector::zeros(a),
            q: random_vector(rng, e),
            p: hodge.project_physical(&random_vector(rng, e))?,
        })
    };
    let aux1 = mk_aux(&mut rng)?;
    let aux2 = mk_aux(&mut rng)?;
    let pairing = |x: &MaxwellState, y: &MaxwellState| {
        model.mass_dot_edges(&x.q, &y.p) - model.mass_dot_edges(&y.q, &x.p)
    };
    let pairing0 = pairing(&aux1, &aux2);

    let times = &cfg.propagate.times;
    let states = parallel_map(times.len(), ctx.threads, |i| {
        let t = times[i];
        let s = evolve_maxwell(&model, &s0, t, &gauge)?;
        let e1 = evolve_maxwell(&model, &aux1, t, &GaugeChoice::FixedPotential)?;
        let e2 = evolve_maxwell(&model, &aux2, t, &GaugeChoice::FixedPotential)?;
        let drift = (pairing(&e1, &e2) - pairing0).abs() / pairing0.abs().max(1.0);
        Ok::<_, gnh_core::Error>((s, drift))
    });

    let mut rows = Vec::with_capacity(times.len());
    for (i, item) in states.into_iter().enumerate() {
        let (state, drift) = item?;
        let csv = io::state_csv(&[("q_perp", &state.q_perp), ("q", &state.q), ("p", &state.p)]);
        io::write_atomic(&state_path(cfg, i), &csv)?;
        let report = check_maxwell_constraints(&model, &state)?;
        rows.push(json!({
            "t": times[i],
            "energy": model.energy(&state),
            "symplectic_drift": drift,
            "constraints": report.entries,
        }));
    }

    let manifest = json!({
        "model": "maxwell",
        "node_dof": a,
        "edge_dof": e,
        "seed": ctx.seed,
        "times": times,
        "rows": rows,
    });
    io::write_atomic(
        &cfg.output.dir.join("propagate.json"),
        &format!("{:#}\n", manifest),
    )?;
    println!("propagate: {} states -> {}", times.len(), cfg.output.dir.display());
    Ok(())
}
