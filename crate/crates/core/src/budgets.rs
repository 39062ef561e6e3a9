//! Transport costs, budget-constrained schedules and decay-law fits.

use serde::Serialize;

use crate::composer::{CellularFlow, Schedule};
use crate::diagnostics::MixParams;
use crate::error::{MixError, Result};

/// Stage durations `tau_n = norm_n / B` for `s = 1`, where `norm_n` is the
/// sup-in-time gradient norm of the stage block.
pub fn enstrophy_schedule_from_norms(norms: &[f64], budget: f64) -> Result<Schedule> {
    palenstrophy_schedule_from_norms(norms, &vec![0; norms.len()], budget, 1.0)
}

/// Stage durations `tau_n = 2^{L_n (s-1)} norm_n / B` with `L_n` the tile
/// level of stage `n`, which makes `sup_t ||grad^s u(t)||_{L^p} = B` on
/// every stage.
///
/// When all norms are equal and `s` is an integer the partial sums of
/// `2^{L_n (s-1)}` are formed exactly in integers and scaled once.
pub fn palenstrophy_schedule_from_norms(
    norms: &[f64],
    levels: &[u32],
    budget: f64,
    s: f64,
) -> Result<Schedule> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(MixError::InvalidParameter(format!(
            "budget must be positive, got {budget}"
        )));
    }
    if !(s >= 1.0 && s.is_finite()) {
        return Err(MixError::UnsupportedNorm { s, p: f64::NAN });
    }
    if norms.len() != levels.len() {
        return Err(MixError::InvalidParameter(
            "one norm and one tile level per stage".into(),
        ));
    }
    if let Some(n) = norms.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(MixError::InvalidParameter(format!(
            "stage {n} has norm {}, a budget schedule needs positive norms",
            norms[n]
        )));
    }
    let uniform = norms.windows(2).all(|w| w[0] == w[1]);
    let integer = s.fract() == 0.0 && levels.iter().all(|&l| (l as f64) * (s - 1.0) < 120.0);
    let mut times = Vec::with_capacity(norms.len() + 1);
    times.push(0.0);
    if uniform && integer && !norms.is_empty() {
        let e = s as u32 - 1;
        let c = norms[0] / budget;
        let mut acc: u128 = 0;
        for &l in levels {
            acc = acc
                .checked_add(1u128 << (l * e))
                .ok_or_else(|| MixError::InvalidParameter("schedule overflows".into()))?;
            times.push(acc as f64 * c);
        }
    } else {
        let mut t = 0.0;
        for (&v, &l) in norms.iter().zip(levels) {
            t += (l as f64 * (s - 1.0)).exp2() * v / budget;
            times.push(t);
        }
    }
    Schedule::new(times)
}

fn stage_norms(flow: &CellularFlow, s: f64, p: f64) -> Result<Vec<f64>> {
    flow.blocks().iter().map(|b| b.sup_norm(s, p)).collect()
}

/// Schedule keeping `sup_t ||grad u(t)||_{L^p}` at `budget`.
pub fn enstrophy_schedule(flow: &CellularFlow, budget: f64, p: f64) -> Result<Schedule> {
    enstrophy_schedule_from_norms(&stage_norms(flow, 1.0, p)?, budget)
}

/// Schedule keeping `sup_t ||grad^s u(t)||_{L^p}` at `budget`, `s > 1`.
pub fn palenstrophy_schedule(flow: &CellularFlow, budget: f64, s: f64, p: f64) -> Result<Schedule> {
    if !(s > 1.0) {
        return Err(MixError::UnsupportedNorm { s, p });
    }
    palenstrophy_schedule_from_norms(&stage_norms(flow, s, p)?, &flow.tile_levels(), budget, s)
}

/// CSV rows `n,T_n,tau_n`.
pub fn schedule_csv(schedule: &Schedule) -> String {
    let mut out = String::from("n,T_n,tau_n\n");
    for n in 0..=schedule.stages() {
        let tau = if n < schedule.stages() {
            format!("{}", schedule.tau(n))
        } else {
            String::new()
        };
        out.push_str(&format!("{n},{},{tau}\n", schedule.time(n)));
    }
    out
}

/// `int_0^1 ||grad u_{Q,n,k}(t)||_{L^p} dt` of the window velocity: after
/// rescaling the window to unit time and a level-`L(n)` tile to the unit
/// cell, stage `n + j` contributes exactly the cost of its block.
pub fn transport_cost(flow: &CellularFlow, n: usize, k: usize, p: f64) -> Result<f64> {
    if k == 0 || n + k > flow.stages() {
        return Err(MixError::InvalidParameter(format!(
            "window ({n}, {k}) outside the {} stages",
            flow.stages()
        )));
    }
    (n..n + k).map(|j| flow.block(j).cost(1.0, p)).sum()
}

/// Concatenated window velocity `u_{Q,n,k}(t, x)` on the unit cell for the
/// level-`L(n)` tile with index `tile`:
/// `tau_{n,k} 2^{L(n)} u(T_n + tau_{n,k} t, r + 2^{-L(n)} x)`.
pub fn window_velocity(
    flow: &CellularFlow,
    n: usize,
    k: usize,
    tile: usize,
    t: f64,
    x: f64,
    y: f64,
) -> Result<[f64; 2]> {
    let sched = flow
        .schedule()
        .ok_or_else(|| MixError::InvalidParameter("flow has no schedule".into()))?;
    if k == 0 || n + k > flow.stages() {
        return Err(MixError::InvalidParameter(format!("window ({n}, {k}) out of range")));
    }
    let level = flow.tile_level(n);
    let per_side = 1usize << level;
    if tile >= per_side * per_side {
        return Err(MixError::InvalidParameter(format!("tile {tile} out of range")));
    }
    let scale = (-(level as f64)).exp2();
    let (tk, th) = (tile / per_side, tile % per_side);
    let cx = -0.5 + (tk as f64 + 0.5) * scale;
    let cy = -0.5 + (th as f64 + 0.5) * scale;
    let tau = sched.tau_window(n, k);
    let big_t = (sched.time(n) + tau * t).min(sched.time(n + k) * (1.0 - 1e-15));
    let v = flow.global_velocity(big_t, cx + scale * x, cy + scale * y)?;
    let f = tau / scale;
    Ok([f * v[0], f * v[1]])
}

/// The three constants of the lower-bound argument.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProofConstants {
    /// `(1 - gamma_bar) (3/16) alpha^2 pi`.
    pub eta: f64,
    /// `sqrt((1 + gamma_bar) / 2)`.
    pub omega: f64,
    /// `1 - sqrt((3 + gamma_bar) / 4)`.
    pub c_gamma: f64,
}

pub fn proof_constants(params: &MixParams) -> ProofConstants {
    let g = params.gamma_bar;
    let a = params.alpha;
    ProofConstants {
        eta: (1.0 - g) * (3.0 / 16.0) * a * a * std::f64::consts::PI,
        omega: ((1.0 + g) / 2.0).sqrt(),
        c_gamma: 1.0 - ((3.0 + g) / 4.0).sqrt(),
    }
}

/// Inputs of one minimal-cost comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct CostInputs {
    pub n: usize,
    pub k: usize,
    pub measured_cost: f64,
    pub mix_start: Option<f64>,
    pub mix_end: Option<f64>,
    pub c1: f64,
    pub c2: f64,
    pub lambda: f64,
    /// `sigma(n + k) - sigma(n)`.
    pub sigma_gain: u32,
}

impl CostInputs {
    /// Default constants `c1 = eta^{1/p}`, `c2 = 1`.
    pub fn with_defaults(n: usize, k: usize, measured_cost: f64, p: f64, params: &MixParams) -> Self {
        Self {
            n,
            k,
            measured_cost,
            mix_start: None,
            mix_end: None,
            c1: proof_constants(params).eta.powf(1.0 / p),
            c2: 1.0,
            lambda: 0.5,
            sigma_gain: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub n: usize,
    pub k: usize,
    /// `c1 log(c2 mix_start / mix_end)`.
    pub m_nk: f64,
    /// `c1 log(c2 / lambda^{k + sigma(n+k) - sigma(n)})`.
    pub structural_bound: f64,
    pub measured_cost: f64,
    pub mix_start: f64,
    pub mix_end: f64,
    pub c1: f64,
    pub c2: f64,
    /// `measured_cost < m_nk`.
    pub violation: bool,
}

pub fn minimal_cost_check(inputs: &CostInputs) -> Result<CostReport> {
    let start = inputs
        .mix_start
        .ok_or(MixError::MissingMeasurement("mixing scale at window start"))?;
    let end = inputs
        .mix_end
        .ok_or(MixError::MissingMeasurement("mixing scale at window end"))?;
    if !(start > 0.0) {
        return Err(MixError::NonPositive { t: 0.0, value: start });
    }
    if !(end > 0.0) {
        return Err(MixError::NonPositive { t: 1.0, value: end });
    }
    if !(inputs.measured_cost >= 0.0) {
        return Err(MixError::InvalidParameter(format!(
            "negative transport cost {}",
            inputs.measured_cost
        )));
    }
    let m_nk = inputs.c1 * (inputs.c2 * start / end).ln();
    let exponent = (inputs.k as u32 + inputs.sigma_gain) as f64;
    let structural_bound = inputs.c1 * (inputs.c2 / inputs.lambda.powf(exponent)).ln();
    Ok(CostReport {
        n: inputs.n,
        k: inputs.k,
        m_nk,
        structural_bound,
        measured_cost: inputs.measured_cost,
        mix_start: start,
        mix_end: end,
        c1: inputs.c1,
        c2: inputs.c2,
        violation: inputs.measured_cost < m_nk,
    })
}

/// Smallest window length among `reports` from which the bound holds for
/// every longer window.
pub fn first_holding_window(reports: &[CostReport]) -> Option<usize> {
    let mut sorted: Vec<&CostReport> = reports.iter().collect();
    sorted.sort_by_key(|r| r.k);
    let mut first = None;
    for r in sorted {
        if r.violation {
            first = None;
        } else if first.is_none() {
            first = Some(r.k);
        }
    }
    first
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    Exponential,
    Polynomial,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Decay rate `a` in `e^{-a t}`, or exponent `b` in `t^b`.
    pub rate_or_exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    /// Observed minus fitted log values over the window.
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub exponential: DecayFit,
    pub polynomial: DecayFit,
    pub verdict: DecayModel,
    /// Late residuals of the exponential fit are increasing and end
    /// positive: the data decays slower than the fitted exponential.
    pub witness: bool,
    pub samples_used: usize,
}

/// Least squares `y = a + b x`; returns `(a, b, r^2, residuals)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64, Vec<f64>) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(u, v)| v - (a + b * u)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (a, b, r2, residuals)
}

/// Fits `log mix` against `t` and against `log t` over the trailing half of
/// the samples (at least three), picks the model with the larger `r^2`.
pub fn decay_fit(samples: &[(f64, f64)]) -> Result<DecayReport> {
    if samples.len() < 4 {
        return Err(MixError::TooFewSamples {
            need: 4,
            got: samples.len(),
        });
    }
    if let Some(&(t, value)) = samples.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(MixError::NonPositive { t, value });
    }
    let used = samples.len().div_ceil(2).max(3);
    let tail = &samples[samples.len() - used..];
    if let Some(&(t, _)) = tail.iter().find(|(t, _)| !(*t > 0.0)) {
        return Err(MixError::NonPositive { t, value: t });
    }
    let t: Vec<f64> = tail.iter().map(|s| s.0).collect();
    let log_t: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let log_y: Vec<f64> = tail.iter().map(|s| s.1.ln()).collect();
    let window = (t[0], t[used - 1]);
    let (ae, be, re, res_e) = linear_fit(&t, &log_y);
    let (ap, bp, rp, res_p) = linear_fit(&log_t, &log_y);
    let late = &res_e[used.saturating_sub(3)..];
    let witness = late.windows(2).all(|w| w[1] > w[0]) && late[late.len() - 1] > 0.0;
    Ok(DecayReport {
        exponential: DecayFit {
            model: DecayModel::Exponential,
            rate_or_exponent: -be,
            intercept: ae,
            r_squared: re,
            window,
            residuals: res_e,
        },
        polynomial: DecayFit {
            model: DecayModel::Polynomial,
            rate_or_exponent: bp,
            intercept: ap,
            r_squared: rp,
            window,
            residuals: res_p,
        },
        verdict: if rp > re {
            DecayModel::Polynomial
        } else {
            DecayModel::Exponential
        },
        witness,
        samples_used: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::Block;
    use crate::grid::{GridSpec, Pattern, TracerField};
    use std::f64::consts::PI;

    fn swirl_flow(stages: usize, m: u32) -> CellularFlow {
        let init = TracerField::pattern(GridSpec::new(m).unwrap(), Pattern::LeftRightHalves)
            .unwrap()
            .lift();
        CellularFlow::new(
            init,
            1,
            vec![Block::swirl(None, 4).unwrap(); stages],
            None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn proof_constants_closed_forms() {
        let c = proof_constants(&MixParams::new(0.5, 0.5, 0.25).unwrap());
        assert_eq!(c.eta, 3.0 * PI / 512.0);
        assert_eq!(c.omega, 3f64.sqrt() / 2.0);
        assert_eq!(c.c_gamma, 1.0 - (7.0f64 / 8.0).sqrt());
    }

    #[test]
    fn unit_norm_palenstrophy_schedule_is_dyadic() {
        let s = palenstrophy_schedule_from_norms(&[1.0; 6], &[0, 1, 2, 3, 4, 5], 1.0, 2.0).unwrap();
        for n in 0..=6 {
            assert_eq!(s.time(n), (1u64 << n) as f64 - 1.0);
        }
        let e = enstrophy_schedule_from_norms(&[2.0; 4], 2.0).unwrap();
        assert_eq!(e.times(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let half = enstrophy_schedule_from_norms(&[2.0; 4], 4.0).unwrap();
        assert_eq!(half.tau(2), 0.5);
        assert!(enstrophy_schedule_from_norms(&[1.0], 0.0).is_err());
    }

    #[test]
    fn fractional_order_is_close_to_enstrophy_near_one() {
        let levels = [0, 1, 2, 3];
        let s = palenstrophy_schedule_from_norms(&[1.0; 4], &levels, 1.0, 1.0 + 1e-9).unwrap();
        for n in 0..4 {
            assert!((s.tau(n) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn flow_schedules_use_block_norms() {
        let flow = swirl_flow(3, 6);
        let b = flow.block(0).sup_norm(1.0, 2.0).unwrap();
        let e = enstrophy_schedule(&flow, b, 2.0).unwrap();
        assert_eq!(e.times(), &[0.0, 1.0, 2.0, 3.0]);
        assert!(palenstrophy_schedule(&flow, 1.0, 1.0, 2.0).is_err());
        let b2 = flow.block(0).sup_norm(2.0, 2.0).unwrap();
        let p = palenstrophy_schedule(&flow, b2, 2.0, 2.0).unwrap();
        assert_eq!(p.times(), &[0.0, 1.0, 3.0, 7.0]);
    }

    #[test]
    fn transport_cost_is_additive() {
        let flow = swirl_flow(3, 6);
        let one = transport_cost(&flow, 0, 1, 2.0).unwrap();
        assert_eq!(one, block_cost_of(&flow));
        assert!((transport_cost(&flow, 0, 2, 2.0).unwrap() - 2.0 * one).abs() < 1e-12);
        let still = CellularFlow::new(
            TracerField::pattern(GridSpec::new(4).unwrap(), Pattern::LeftRightHalves).unwrap(),
            1,
            vec![Block::identity()],
            None,
            None,
        )
        .unwrap();
        assert_eq!(transport_cost(&still, 0, 1, 2.0).unwrap(), 0.0);
    }

    fn block_cost_of(flow: &CellularFlow) -> f64 {
        crate::blocks::block_cost(flow.block(0), 1.0, 2.0).unwrap()
    }

    #[test]
    fn cost_check_no_mixing_is_trivial() {
        let p = MixParams::default();
        let mut inputs = CostInputs::with_defaults(0, 1, 0.0, 2.0, &p);
        assert!(matches!(
            minimal_cost_check(&inputs),
            Err(MixError::MissingMeasurement(_))
        ));
        inputs.mix_start = Some(0.3);
        inputs.mix_end = Some(0.3);
        let r = minimal_cost_check(&inputs).unwrap();
        assert_eq!(r.m_nk, 0.0);
        assert!(!r.violation);
        inputs.sigma_gain = 2;
        inputs.k = 3;
        let r = minimal_cost_check(&inputs).unwrap();
        assert!((r.structural_bound - r.c1 * 5.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn first_holding_window_skips_early_violations() {
        let mk = |k, violation| CostReport {
            n: 0,
            k,
            m_nk: 0.0,
            structural_bound: 0.0,
            measured_cost: 0.0,
            mix_start: 1.0,
            mix_end: 1.0,
            c1: 1.0,
            c2: 1.0,
            violation,
        };
        let r = [mk(1, true), mk(2, false), mk(3, true), mk(4, false), mk(5, false)];
        assert_eq!(first_holding_window(&r), Some(4));
        assert_eq!(first_holding_window(&[mk(1, true)]), None);
    }

    #[test]
    fn exact_exponential_and_power_laws() {
        let exp: Vec<(f64, f64)> = (0..8).map(|t| (t as f64, (-(t as f64)).exp())).collect();
        let r = decay_fit(&exp).unwrap();
        assert_eq!(r.verdict, DecayModel::Exponential);
        assert!((r.exponential.rate_or_exponent - 1.0).abs() < 1e-12);
        assert!((r.exponential.r_squared - 1.0).abs() < 1e-12);
        let pow: Vec<(f64, f64)> = (1..9).map(|t| (t as f64, 1.0 / t as f64)).collect();
        let r = decay_fit(&pow).unwrap();
        assert_eq!(r.verdict, DecayModel::Polynomial);
        assert!((r.polynomial.rate_or_exponent + 1.0).abs() < 1e-12);
        assert!((r.polynomial.r_squared - 1.0).abs() < 1e-12);
        assert!(r.witness);
    }

    #[test]
    fn decay_fit_rejects_bad_input() {
        assert!(matches!(
            decay_fit(&[(1.0, 1.0); 3]),
            Err(MixError::TooFewSamples { .. })
        ));
        assert!(matches!(
            decay_fit(&[(1.0, 1.0), (2.0, 0.5), (3.0, 0.0), (4.0, 0.1)]),
            Err(MixError::NonPositive { .. })
        ));
    }
}
