//! Self-check suites run by `mixlab verify` at pinned desk-scale settings.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blocks::Block;
use crate::budgets::{decay_fit, enstrophy_schedule, palenstrophy_schedule, DecayModel};
use crate::composer::{CellularFlow, Schedule};
use crate::diagnostics::{
    characteristic_length_scale, functional_mixing_scale, geometric_mixing_scale, sobolev_norm,
    MixParams,
};
use crate::error::{MixError, Result};
use crate::grid::{tile_sums, CellRegion, CellSet, GridSpec, Pattern, TracerField};
use crate::oracle;
use crate::scenario::random_binary;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Conservation,
    Scaling,
    Lemma25,
    Decay,
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Conservation,
        Suite::Scaling,
        Suite::Lemma25,
        Suite::Decay,
        Suite::Oracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Conservation => "conservation",
            Suite::Scaling => "scaling",
            Suite::Lemma25 => "lemma25",
            Suite::Decay => "decay",
            Suite::Oracle => "oracle",
        }
    }
}

impl FromStr for Suite {
    type Err = MixError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| MixError::InvalidParameter(format!("unknown suite `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub pass: bool,
    pub checks: Vec<Check>,
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

pub fn run_suite(suite: Suite) -> Result<VerifyReport> {
    let checks = match suite {
        Suite::Conservation => conservation()?,
        Suite::Scaling => scaling()?,
        Suite::Lemma25 => lemma25()?,
        Suite::Decay => decay()?,
        Suite::Oracle => oracle_suite()?,
    };
    Ok(VerifyReport {
        suite,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

/// Parent tile average equals the mean of its four children at every level.
pub fn tile_hierarchy_consistent(field: &TracerField) -> Result<bool> {
    let m = field.grid().m();
    let mut child = tile_sums(field, m)?.averages();
    for level in (0..m).rev() {
        let parent = tile_sums(field, level)?.averages();
        let t = 1usize << level;
        for k in 0..t {
            for h in 0..t {
                let c = |a: usize, b: usize| child[(2 * k + a) * 2 * t + 2 * h + b];
                let mean = (c(0, 0) + c(0, 1) + c(1, 0) + c(1, 1)) / 4.0;
                if mean != parent[k * t + h] {
                    return Ok(false);
                }
            }
        }
        child = parent;
    }
    Ok(true)
}

/// Random block sequence drawn from the permutation blocks.
pub fn random_blocks(rng: &mut impl Rng, stages: usize) -> Result<Vec<Block>> {
    (0..stages)
        .map(|_| match rng.gen_range(0..4) {
            0 => Ok(Block::identity()),
            1 => Ok(Block::interleave()),
            2 => Ok(Block::baker()),
            _ => Block::deep(2),
        })
        .collect()
}

fn conservation() -> Result<Vec<Check>> {
    let grid = GridSpec::new(8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d69_786c);
    let mut checks = Vec::new();
    for run in 0..50 {
        let init = random_binary(grid, rng.gen());
        let stages = rng.gen_range(1..=4);
        let blocks = random_blocks(&mut rng, stages)?;
        let names: Vec<String> = blocks.iter().map(|b| b.name()).collect();
        let mut flow = CellularFlow::new(init.clone(), 1, blocks, None, None)?;
        let mut ok = true;
        for n in 0..stages {
            let level = flow.tile_level(n);
            let before = tile_sums(flow.state(), level)?;
            flow.compose_stage(n)?;
            ok &= tile_sums(flow.state(), level)? == before;
        }
        ok &= flow.state().sorted_values() == init.sorted_values();
        ok &= tile_hierarchy_consistent(flow.state())?;
        checks.push(check(format!("run {run}"), ok, names.join(",")));
    }
    Ok(checks)
}

/// Checkerboard(1) initial data transported by interleave stages with the
/// smooth swirl carrier; snapshot `n` is mixed at level `n`.
pub fn interleave_run(m: u32, stages: usize) -> Result<CellularFlow> {
    let init = TracerField::pattern(GridSpec::new(m)?, Pattern::Checkerboard(1))?;
    CellularFlow::new(init, 1, vec![Block::interleave(); stages], None, None)
}

fn scaling() -> Result<Vec<Check>> {
    let m = 10;
    let init = TracerField::pattern(GridSpec::new(m)?, Pattern::Checkerboard(1))?.lift();
    let sched = Schedule::new(vec![0.0, 1.0, 3.0, 4.0, 6.5])?;
    let flow = CellularFlow::new(
        init,
        1,
        vec![Block::swirl(None, 4)?; 4],
        Some(sched.clone()),
        None,
    )?;
    let mut checks = Vec::new();
    for n in 0..4 {
        let t = sched.time(n) + 0.3 * sched.tau(n);
        let samples = flow.velocity_samples(t, 1 << m)?;
        for s in [1.0, 2.0] {
            let got = sobolev_norm(&samples, s, 2.0)?;
            let want = flow.predicted_norm(t, s, 2.0)?;
            let rel = (got / want - 1.0).abs();
            checks.push(check(
                format!("stage {n} s={s}"),
                rel < 0.02,
                format!("measured {got:.6}, predicted {want:.6}, rel {rel:.2e}"),
            ));
        }
    }
    Ok(checks)
}

fn spread(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values
        .iter()
        .map(|v| (v / mean - 1.0).abs())
        .fold(0.0, f64::max)
}

fn lemma25() -> Result<Vec<Check>> {
    let mut flow = interleave_run(10, 6)?;
    let snaps = flow.run(6, None)?;
    let params = MixParams::default();
    let mut g = Vec::new();
    let mut h = Vec::new();
    for snap in &snaps[2..] {
        let scale = (snap.n as f64).exp2();
        g.push(geometric_mixing_scale(&snap.field, &params)?.value * scale);
        h.push(functional_mixing_scale(&snap.field, 2)? * scale);
    }
    Ok(vec![
        check("G / 2^-l", spread(&g) < 0.2, format!("{g:.4?}")),
        check("H^-1 / 2^-l", spread(&h) < 0.2, format!("{h:.4?}")),
    ])
}

fn decay() -> Result<Vec<Check>> {
    let stages = 6;
    let mut flow = interleave_run(10, stages)?;
    let b1 = flow.block(0).sup_norm(1.0, 2.0)?;
    let b2 = flow.block(0).sup_norm(2.0, 2.0)?;
    let ens = enstrophy_schedule(&flow, b1, 2.0)?;
    let pal = palenstrophy_schedule(&flow, b2, 2.0, 2.0)?;
    let snaps = flow.run(stages, None)?;
    let h: Vec<f64> = snaps
        .iter()
        .map(|s| functional_mixing_scale(&s.field, 2))
        .collect::<Result<_>>()?;
    let series = |sched: &Schedule| -> Vec<(f64, f64)> {
        h.iter()
            .enumerate()
            .map(|(n, v)| (sched.time(n), *v))
            .collect()
    };
    let e = decay_fit(&series(&ens))?;
    let tau = ens.tau(0);
    let rate = 2f64.ln() / tau;
    let p = decay_fit(&series(&pal))?;
    let gap = p.polynomial.r_squared - p.exponential.r_squared;
    Ok(vec![
        check(
            "enstrophy: exponential",
            e.verdict == DecayModel::Exponential
                && (e.exponential.rate_or_exponent / rate - 1.0).abs() < 0.1
                && e.exponential.r_squared >= 0.98,
            format!(
                "rate {:.4} vs {rate:.4}, r2 {:.4}",
                e.exponential.rate_or_exponent, e.exponential.r_squared
            ),
        ),
        check(
            "palenstrophy: polynomial",
            p.verdict == DecayModel::Polynomial
                && (-1.2..=-0.85).contains(&p.polynomial.rate_or_exponent)
                && gap >= 0.02,
            format!(
                "exponent {:.4}, r2 gap {gap:.4}",
                p.polynomial.rate_or_exponent
            ),
        ),
    ])
}

/// The ten fields compared against the brute-force scans.
pub fn oracle_fields(m: u32) -> Result<Vec<(String, TracerField)>> {
    let grid = GridSpec::new(m)?;
    let mut out = Vec::new();
    for p in [
        Pattern::LeftRightHalves,
        Pattern::TopBottomHalves,
        Pattern::Checkerboard(2),
        Pattern::Stripes(3),
        Pattern::HorizontalStripes(1),
    ] {
        out.push((format!("{p:?}"), TracerField::pattern(grid, p)?));
    }
    for seed in 0..3 {
        out.push((format!("random {seed}"), random_binary(grid, seed)));
    }
    let init = TracerField::pattern(grid, Pattern::LeftRightHalves)?;
    let mut flow = CellularFlow::new(init, 1, vec![Block::baker(), Block::interleave()], None, None)?;
    for snap in flow.run(2, None)?.into_iter().skip(1) {
        out.push((format!("baker/interleave stage {}", snap.n), snap.field));
    }
    Ok(out)
}

fn oracle_suite() -> Result<Vec<Check>> {
    let params = MixParams::default();
    let mut checks = Vec::new();
    for (name, field) in oracle_fields(6)? {
        let fast_g = geometric_mixing_scale(&field, &params)?.value;
        let slow_g = oracle::geometric_mixing_scale(&field, &params)?;
        let set = CellSet::from_sign(&field, 1)?;
        let region = CellRegion::whole(field.grid());
        let fast_l = characteristic_length_scale(&set, region, &params)?.value;
        let slow_l = oracle::characteristic_length_scale(&set, region, &params)?;
        checks.push(check(
            name,
            fast_g.to_bits() == slow_g.to_bits() && fast_l.to_bits() == slow_l.to_bits(),
            format!("G {fast_g} / {slow_g}, LS {fast_l} / {slow_l}"),
        ));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn hierarchy_check_detects_consistency() {
        let f = random_binary(GridSpec::new(5).unwrap(), 3);
        assert!(tile_hierarchy_consistent(&f).unwrap());
    }
}
