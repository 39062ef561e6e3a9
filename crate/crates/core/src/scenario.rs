//! Run manifests and the artifact writer behind `mixlab run`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::blocks::{Block, BlockDescriptor};
use crate::budgets::{
    decay_fit, enstrophy_schedule, first_holding_window, minimal_cost_check, palenstrophy_schedule,
    schedule_csv, transport_cost, CostInputs,
};
use crate::composer::{CellularFlow, MeasureConfig, Schedule, SigmaSequence, SigmaSpec, Snapshot};
use crate::diagnostics::{sobolev_norm, MixParams};
use crate::error::{MixError, Result};
use crate::grid::{GridSpec, Pattern, TracerField};
use crate::plot;

pub const MANIFEST_VERSION: u32 = 1;

/// Initial tracer of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialSpec {
    Pattern {
        pattern: Pattern,
        /// Store as a continuous field.
        #[serde(default)]
        lift: bool,
    },
    /// A field file in the text format; relative paths resolve against the
    /// manifest directory.
    File { path: PathBuf },
    /// Balanced random signs drawn from the manifest seed.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BudgetSpec {
    Enstrophy {
        #[serde(rename = "B")]
        budget: f64,
        #[serde(default)]
        s: Option<f64>,
        #[serde(default = "default_p")]
        p: f64,
    },
    Palenstrophy {
        #[serde(rename = "B")]
        budget: f64,
        s: f64,
        #[serde(default = "default_p")]
        p: f64,
    },
    Explicit { times: Vec<f64> },
}

fn default_p() -> f64 {
    2.0
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    #[serde(default = "yes")]
    pub geometric: bool,
    #[serde(default = "yes")]
    pub hminus1: bool,
    #[serde(default = "yes")]
    pub length_scale: bool,
    /// Sampled `W^{s,p}` norm of the velocity at each stage start.
    #[serde(default)]
    pub sobolev: bool,
    #[serde(default = "yes")]
    pub cost_reports: bool,
    #[serde(default)]
    pub params: Option<MixParams>,
    #[serde(default)]
    pub padding: Option<usize>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self {
            geometric: true,
            hminus1: true,
            length_scale: true,
            sobolev: false,
            cost_reports: true,
            params: None,
            padding: None,
        }
    }
}

/// JSON run configuration. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: u32,
    pub m: u32,
    #[serde(default = "default_ell0")]
    pub ell0: u32,
    pub stages: usize,
    pub initial: InitialSpec,
    /// One descriptor per stage, or a single descriptor used for all.
    pub blocks: Vec<BlockDescriptor>,
    #[serde(default)]
    pub sigma: Option<SigmaSpec>,
    #[serde(default)]
    pub budget: Option<BudgetSpec>,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn default_ell0() -> u32 {
    1
}

fn bad(msg: impl Into<String>) -> MixError {
    MixError::Manifest(msg.into())
}

impl RunManifest {
    pub fn parse(text: &str) -> Result<Self> {
        let m: RunManifest = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    /// Schema-level consistency; resolution checks happen when the flow is
    /// built.
    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(bad(format!(
                "unsupported manifest version {}, expected {MANIFEST_VERSION}",
                self.version
            )));
        }
        if self.blocks.is_empty() || (self.blocks.len() != 1 && self.blocks.len() != self.stages) {
            return Err(bad(format!(
                "{} block descriptors for {} stages",
                self.blocks.len(),
                self.stages
            )));
        }
        match &self.budget {
            Some(BudgetSpec::Enstrophy { s: Some(s), .. }) if *s != 1.0 => {
                return Err(bad("an enstrophy budget has s = 1"));
            }
            Some(BudgetSpec::Palenstrophy { s, .. }) if !(*s > 1.0) => {
                return Err(bad("a palenstrophy budget needs s > 1"));
            }
            Some(BudgetSpec::Explicit { times }) if times.len() != self.stages + 1 => {
                return Err(bad(format!(
                    "explicit schedule lists {} times, {} needed",
                    times.len(),
                    self.stages + 1
                )));
            }
            _ => {}
        }
        if let Some(p) = &self.diagnostics.params {
            p.validate().map_err(|e| bad(e.to_string()))?;
        }
        Ok(())
    }

    pub fn params(&self) -> MixParams {
        self.diagnostics.params.unwrap_or_default()
    }

    /// `(s, p)` of the budget, `(1, 2)` without one.
    pub fn exponents(&self) -> (f64, f64) {
        match &self.budget {
            Some(BudgetSpec::Enstrophy { p, .. }) => (1.0, *p),
            Some(BudgetSpec::Palenstrophy { s, p, .. }) => (*s, *p),
            _ => (1.0, 2.0),
        }
    }

    pub fn initial_field(&self, base_dir: &Path) -> Result<TracerField> {
        let grid = GridSpec::new(self.m).map_err(|e| bad(e.to_string()))?;
        match &self.initial {
            InitialSpec::Pattern { pattern, lift } => {
                let f = TracerField::pattern(grid, *pattern)?;
                Ok(if *lift { f.lift() } else { f })
            }
            InitialSpec::File { path } => {
                let f = TracerField::read(&base_dir.join(path))?;
                if f.grid() != grid {
                    return Err(bad(format!(
                        "initial field has m={}, manifest says m={}",
                        f.grid().m(),
                        self.m
                    )));
                }
                Ok(f)
            }
            InitialSpec::Random => Ok(random_binary(grid, self.seed)),
        }
    }

    pub fn build_blocks(&self) -> Result<Vec<Block>> {
        let built: Vec<Block> = self
            .blocks
            .iter()
            .map(|d| d.build().map_err(|e| bad(e.to_string())))
            .collect::<Result<_>>()?;
        Ok(if built.len() == 1 {
            vec![built[0].clone(); self.stages]
        } else {
            built
        })
    }

    /// Builds the flow and attaches the budget schedule.
    pub fn build_flow(&self, base_dir: &Path) -> Result<CellularFlow> {
        let sigma = self
            .sigma
            .as_ref()
            .map(|s| SigmaSequence::generate(s, self.stages + 1))
            .transpose()
            .map_err(|e| bad(e.to_string()))?;
        let mut flow = CellularFlow::new(
            self.initial_field(base_dir)?,
            self.ell0,
            self.build_blocks()?,
            None,
            sigma,
        )?;
        let schedule = match &self.budget {
            None => None,
            Some(BudgetSpec::Enstrophy { budget, p, .. }) => {
                Some(enstrophy_schedule(&flow, *budget, *p)?)
            }
            Some(BudgetSpec::Palenstrophy { budget, s, p }) => {
                Some(palenstrophy_schedule(&flow, *budget, *s, *p)?)
            }
            Some(BudgetSpec::Explicit { times }) => {
                Some(Schedule::new(times.clone()).map_err(|e| bad(e.to_string()))?)
            }
        };
        if let Some(s) = schedule {
            flow.set_schedule(s)?;
        }
        Ok(flow)
    }
}

/// A balanced `+1/-1` field with the cells shuffled by a seeded generator.
pub fn random_binary(grid: GridSpec, seed: u64) -> TracerField {
    let n = grid.cell_count();
    let mut signs: Vec<i8> = (0..n).map(|i| if i < n / 2 { 1 } else { -1 }).collect();
    signs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    TracerField::binary(grid, signs).expect("balanced signs")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Files written by a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub output: PathBuf,
    pub manifest_sha256: String,
    pub snapshots: usize,
    pub files: Vec<PathBuf>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn measurements_csv(
    hash: &str,
    snaps: &[Snapshot],
    norms: &[Option<f64>],
    (s, p): (f64, f64),
) -> String {
    let mut out = format!("# manifest-sha256: {hash}\n");
    let _ = writeln!(
        out,
        "n,t,G,G_lower,G_upper,Hminus1,LS,alpha,mixed_level,W_s{s}_p{p}"
    );
    for (snap, norm) in snaps.iter().zip(norms) {
        let m = snap.measurements.as_ref();
        let g = m.and_then(|m| m.geometric.as_ref());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            snap.n,
            snap.t,
            opt(g.map(|g| g.value)),
            opt(g.map(|g| g.lower)),
            opt(g.map(|g| g.upper).filter(|u| u.is_finite())),
            opt(m.and_then(|m| m.hminus1)),
            opt(m.and_then(|m| m.length_scale)),
            opt(m.and_then(|m| m.alpha)),
            m.and_then(|m| m.mixed_level)
                .map(|l| l.to_string())
                .unwrap_or_default(),
            opt(*norm),
        );
    }
    out
}

/// Executes a manifest and writes the run artifacts into `out_dir`.
pub fn run_scenario(manifest_text: &str, base_dir: &Path, out_dir: &Path) -> Result<RunSummary> {
    let manifest = RunManifest::parse(manifest_text)?;
    let hash = sha256_hex(manifest_text.as_bytes());
    let mut flow = manifest.build_flow(base_dir)?;
    let params = manifest.params();
    let diag = &manifest.diagnostics;
    let (s, p) = manifest.exponents();
    if diag.sobolev {
        if flow.schedule().is_none() {
            return Err(bad("sobolev diagnostics need a budget or explicit schedule"));
        }
        if let Some(b) = flow.blocks().iter().find(|b| b.velocity().is_none()) {
            return Err(MixError::MissingVelocity(b.name()));
        }
    }
    let cfg = MeasureConfig {
        params,
        geometric: diag.geometric,
        hminus1: diag.hminus1,
        length_scale: diag.length_scale,
        padding: diag.padding.unwrap_or(crate::diagnostics::DEFAULT_PADDING),
    };
    let side = flow.grid().side();
    let norms: Vec<Option<f64>> = (0..=flow.stages())
        .map(|n| {
            if !diag.sobolev || n >= flow.stages() {
                return Ok(None);
            }
            let t = flow.time(n);
            Ok(Some(sobolev_norm(&flow.velocity_samples(t, side)?, s, p)?))
        })
        .collect::<Result<_>>()?;
    let snaps = flow.run(manifest.stages, Some(&cfg))?;

    let mut files = Vec::new();
    let snap_dir = out_dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    for snap in &snaps {
        let path = snap_dir.join(format!("snapshot_{:03}.field", snap.n));
        snap.field.write(
            &path,
            &[
                format!("manifest-sha256: {hash}"),
                format!("n={} t={}", snap.n, snap.t),
            ],
        )?;
        files.push(path);
    }
    let mut write = |name: &str, body: String| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, body)?;
        files.push(path);
        Ok(())
    };
    write("measurements.csv", measurements_csv(&hash, &snaps, &norms, (s, p)))?;

    if let Some(sched) = flow.schedule() {
        write(
            "schedule.csv",
            format!("# manifest-sha256: {hash}\n{}", schedule_csv(sched)),
        )?;
    }

    let g_series: Vec<Option<f64>> = snaps
        .iter()
        .map(|s| {
            s.measurements
                .as_ref()
                .and_then(|m| m.geometric.as_ref().map(|g| g.value))
        })
        .collect();
    let h_series: Vec<Option<f64>> = snaps
        .iter()
        .map(|s| s.measurements.as_ref().and_then(|m| m.hminus1))
        .collect();

    let mut reports = Vec::new();
    let mut cost_note = None;
    let has_velocity = flow.blocks().iter().all(|b| b.velocity().is_some());
    if diag.cost_reports && has_velocity && diag.geometric {
        for n in 0..flow.stages() {
            for k in 1..=flow.stages() - n {
                let cost = transport_cost(&flow, n, k, p)?;
                let mut inputs = CostInputs::with_defaults(n, k, cost, p, &params);
                inputs.mix_start = g_series[n];
                inputs.mix_end = g_series[n + k];
                inputs.lambda = flow.lambda();
                let sigma = |i: usize| flow.sigma().and_then(|s| s.get(i)).unwrap_or(0);
                inputs.sigma_gain = sigma(n + k).saturating_sub(sigma(n));
                reports.push(minimal_cost_check(&inputs)?);
            }
        }
    } else if diag.cost_reports {
        cost_note = Some(if has_velocity {
            "geometric mixing scale disabled"
        } else {
            "a block in the run carries no velocity"
        });
    }
    let cost_json = json!({
        "manifest_sha256": hash,
        "p": p,
        "note": cost_note,
        "first_holding_window": first_holding_window(&reports),
        "reports": reports,
    });
    write("cost_reports.json", serde_json::to_string_pretty(&cost_json)? + "\n")?;

    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let (series_name, series) = if diag.hminus1 {
        ("Hminus1", &h_series)
    } else {
        ("G", &g_series)
    };
    let samples: Option<Vec<(f64, f64)>> = times
        .iter()
        .zip(series)
        .map(|(t, v)| v.map(|v| (*t, v)))
        .collect();
    let fit_json = match samples.map(|s| decay_fit(&s)) {
        Some(Ok(report)) => json!({
            "manifest_sha256": hash,
            "series": series_name,
            "fit": report,
        }),
        Some(Err(e)) => json!({
            "manifest_sha256": hash,
            "series": series_name,
            "error": e.to_string(),
        }),
        None => json!({
            "manifest_sha256": hash,
            "error": "no mixing-scale series was measured",
        }),
    };
    write("decay_fit.json", serde_json::to_string_pretty(&fit_json)? + "\n")?;

    let curves: Vec<plot::Curve> = [("G", &g_series), ("H^-1", &h_series)]
        .into_iter()
        .filter_map(|(name, series)| {
            let pts: Vec<(f64, f64)> = times
                .iter()
                .zip(series.iter())
                .filter_map(|(t, v)| v.map(|v| (*t, v)))
                .collect();
            (!pts.is_empty()).then(|| plot::Curve {
                name: name.to_string(),
                points: pts,
            })
        })
        .collect();
    write("decay.svg", plot::decay_svg(&curves, &hash))?;

    Ok(RunSummary {
        output: out_dir.to_path_buf(),
        manifest_sha256: hash,
        snapshots: snaps.len(),
        files,
    })
}
