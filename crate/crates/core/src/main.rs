use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use mixlab::blocks::Block;
use mixlab::budgets::{
    enstrophy_schedule_from_norms, palenstrophy_schedule_from_norms, schedule_csv,
};
use mixlab::diagnostics::{
    functional_mixing_scale, geometric_mixing_scale, unmixedness_certificate, MixParams,
};
use mixlab::error::{MixError, Result};
use mixlab::grid::{mixed_level, TracerField};
use mixlab::scenario::run_scenario;
use mixlab::verify::{run_suite, Suite};

#[derive(Parser)]
#[command(name = "mixlab", version, about = "Mixing by generalized cellular flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run manifest and write its artifacts.
    Run {
        manifest: PathBuf,
        /// Output directory (overrides the manifest's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure the mixing diagnostics of a field file.
    Measure {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        kappa: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma_bar: f64,
        #[arg(long, default_value_t = 0.25)]
        alpha: f64,
        #[arg(long, default_value_t = 2)]
        padding: usize,
        /// Tiling level of the un-mixedness certificate (default: the mixed
        /// level of the field).
        #[arg(long)]
        level: Option<u32>,
    },
    /// Print a budget schedule as CSV `n,T_n,tau_n`.
    Schedule {
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        budget: f64,
        #[arg(long)]
        stages: usize,
        #[arg(long, default_value_t = 1)]
        ell0: u32,
        /// identity | interleave | baker | swirl | deep:<d>
        #[arg(long, default_value = "interleave")]
        block: String,
        /// Stage norm to use instead of the block's own.
        #[arg(long)]
        norm: Option<f64>,
    },
    /// Run a self-check suite: conservation, scaling, lemma25, decay, oracle.
    Verify { suite: String },
}

fn parse_block(spec: &str) -> Result<Block> {
    match spec.split_once(':') {
        Some(("deep", d)) => Block::deep(
            d.parse()
                .map_err(|_| MixError::InvalidParameter(format!("bad depth `{d}`")))?,
        ),
        _ => match spec {
            "identity" => Ok(Block::identity()),
            "interleave" => Ok(Block::interleave()),
            "baker" => Ok(Block::baker()),
            "swirl" => Block::swirl(None, mixlab::blocks::SMOOTH_POWER),
            _ => Err(MixError::InvalidParameter(format!("unknown block `{spec}`"))),
        },
    }
}

fn output_dir(manifest: &Path, base: &Path, out: Option<PathBuf>, text: &str) -> PathBuf {
    if let Some(o) = out {
        return o;
    }
    let from_manifest = serde_json::from_str::<serde_json::Value>(text)
        .ok()
        .and_then(|v| v.get("output").and_then(|o| o.as_str()).map(PathBuf::from));
    match from_manifest {
        Some(o) => base.join(o),
        None => {
            let stem = manifest
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            base.join(format!("{stem}_out"))
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { manifest, out } => {
            let text = std::fs::read_to_string(&manifest)?;
            let base = manifest
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_default();
            let dir = output_dir(&manifest, &base, out, &text);
            let summary = run_scenario(&text, &base, &dir)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(true)
        }
        Command::Measure {
            field,
            kappa,
            gamma_bar,
            alpha,
            padding,
            level,
        } => {
            let params = MixParams::new(kappa, gamma_bar, alpha)?;
            let f = TracerField::read(&field)?;
            let mixed = mixed_level(&f);
            let geometric = geometric_mixing_scale(&f, &params)?;
            let hminus1 = functional_mixing_scale(&f, padding)?;
            let cert_level = level.or(mixed);
            let certificate = match (f.signs(), cert_level) {
                (Some(_), Some(k)) => {
                    let c = unmixedness_certificate(&f, k, &params)?;
                    json!({
                        "level": c.level,
                        "certified": c.certified,
                        "measured_alpha": c.measured_alpha,
                        "asymmetric_tiles": c.tiles.iter().filter(|t| t.asymmetric).count(),
                    })
                }
                _ => serde_json::Value::Null,
            };
            let out = json!({
                "m": f.grid().m(),
                "mode": f.mode(),
                "mean": f.mean(),
                "mixed_level": mixed,
                "geometric": geometric,
                "hminus1": hminus1,
                "certificate": certificate,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(true)
        }
        Command::Schedule {
            s,
            p,
            budget,
            stages,
            ell0,
            block,
            norm,
        } => {
            let norm = match norm {
                Some(v) => v,
                None => parse_block(&block)?.sup_norm(s, p)?,
            };
            let norms = vec![norm; stages];
            let schedule = if s == 1.0 {
                enstrophy_schedule_from_norms(&norms, budget)?
            } else {
                let levels: Vec<u32> = (0..stages as u32).map(|n| ell0 * n).collect();
                palenstrophy_schedule_from_norms(&norms, &levels, budget, s)?
            };
            print!("{}", schedule_csv(&schedule));
            Ok(true)
        }
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            let report = run_suite(suite)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.pass)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("MIXLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("mixlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
