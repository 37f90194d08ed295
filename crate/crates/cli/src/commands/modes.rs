//! `modes`: decompose the model operator, write the eigenvalue table and
//! maintain the decomposition cache.

use gnh_core::io;

use crate::config::RunConfig;
use crate::{assemble, CliError, Context};

pub fn run(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let dec = assemble::decomposition_with_cache(cfg, ctx.cache_dir.as_ref())?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    let mut csv = String::from("k,lambda,kernel\n");
    for k in 0..dec.mode_count() {
        csv.push_str(&format!(
            "{k},{},{}\n",
            io::format_float(dec.eigenvalues()[k]),
            u8::from(k < dec.kernel_count())
        ));
    }
    let path = cfg.output.dir.join("modes.csv");
    io::write_atomic(&path, &csv)?;
    println!(
        "modes: {} eigenvalues ({} kernel) -> {}",
        dec.mode_count(),
        dec.kernel_count(),
        path.display()
    );
    Ok(())
}
