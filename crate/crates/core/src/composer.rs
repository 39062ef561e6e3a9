//! Generalized cellular flows: a block per stage, rescaled into every tile
//! of a refining tiling in space and into `[T_n, T_{n+1}]` in time.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocks::perm::{apply_tiled, compose_on_grid, CellPermutation, TiledPermutations};
use crate::blocks::Block;
use crate::diagnostics::{
    functional_mixing_scale, geometric_mixing_scale, unmixedness_certificate, MixParams,
    MixingScale, VelocitySamples,
};
use crate::error::{MixError, Result};
use crate::grid::{is_mixed_at_scale, mixed_level, GridSpec, TracerField};

/// Generator of the un-mixedness index sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SigmaSpec {
    /// `sigma(n) = c`.
    Constant(u32),
    /// `sigma(n) = a n`.
    Linear(u32),
    Custom(Vec<u32>),
}

/// Values `sigma(0), sigma(1), ...`, non-decreasing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SigmaSequence {
    values: Vec<u32>,
}

impl SigmaSequence {
    pub fn new(values: Vec<u32>) -> Result<Self> {
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(MixError::InvalidParameter(format!(
                "sigma must be non-decreasing, got {values:?}"
            )));
        }
        Ok(Self { values })
    }

    /// The first `len` values of a generator.
    pub fn generate(spec: &SigmaSpec, len: usize) -> Result<Self> {
        let values = match spec {
            SigmaSpec::Constant(c) => vec![*c; len],
            SigmaSpec::Linear(a) => (0..len as u32).map(|n| a * n).collect(),
            SigmaSpec::Custom(v) => {
                if v.len() < len {
                    return Err(MixError::InvalidParameter(format!(
                        "custom sigma lists {} values, {len} needed",
                        v.len()
                    )));
                }
                v[..len].to_vec()
            }
        };
        Self::new(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, n: usize) -> Option<u32> {
        self.values.get(n).copied()
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }
}

/// Stage times `T_0 = 0 < T_1 < ...`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule {
    times: Vec<f64>,
}

impl Schedule {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return Err(MixError::InvalidParameter("a schedule starts at T_0 = 0".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MixError::InvalidParameter(format!(
                "schedule times must be finite and strictly increasing: {times:?}"
            )));
        }
        Ok(Self { times })
    }

    /// `T_n = n`.
    pub fn uniform(stages: usize) -> Self {
        Self {
            times: (0..=stages).map(|n| n as f64).collect(),
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of stages covered.
    pub fn stages(&self) -> usize {
        self.times.len() - 1
    }

    pub fn time(&self, n: usize) -> f64 {
        self.times[n]
    }

    /// `tau_n = T_{n+1} - T_n`.
    pub fn tau(&self, n: usize) -> f64 {
        self.times[n + 1] - self.times[n]
    }

    /// `tau_{n,k} = T_{n+k} - T_n`.
    pub fn tau_window(&self, n: usize, k: usize) -> f64 {
        self.times[n + k] - self.times[n]
    }

    /// Stage containing time `t`.
    pub fn stage_of(&self, t: f64) -> Result<usize> {
        let end = *self.times.last().expect("non-empty schedule");
        if !(t >= 0.0 && t < end) {
            return Err(MixError::TimeOutOfRange { t, start: 0.0, end });
        }
        Ok(self.times.partition_point(|&x| x <= t) - 1)
    }
}

/// Which diagnostics to record with each snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureConfig {
    pub params: MixParams,
    pub geometric: bool,
    pub hminus1: bool,
    pub length_scale: bool,
    pub padding: usize,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            params: MixParams::default(),
            geometric: true,
            hminus1: true,
            length_scale: true,
            padding: crate::diagnostics::DEFAULT_PADDING,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measurements {
    pub geometric: Option<MixingScale>,
    pub hminus1: Option<f64>,
    /// Smallest per-tile length scale at the mixed level.
    pub length_scale: Option<f64>,
    /// `length_scale / lambda^k` at the mixed level.
    pub alpha: Option<f64>,
    pub mixed_level: Option<u32>,
}

/// Computes the configured diagnostics of a field.
pub fn measure(field: &TracerField, cfg: &MeasureConfig) -> Result<Measurements> {
    let level = mixed_level(field);
    let geometric = if cfg.geometric && field.max_abs() > 0.0 {
        Some(geometric_mixing_scale(field, &cfg.params)?)
    } else {
        None
    };
    let hminus1 = if cfg.hminus1 {
        Some(functional_mixing_scale(field, cfg.padding)?)
    } else {
        None
    };
    let (length_scale, alpha) = match (cfg.length_scale, level, field.signs()) {
        (true, Some(k), Some(_)) => {
            let cert = unmixedness_certificate(field, k, &cfg.params)?;
            let lambda = (-(k as f64)).exp2();
            (Some(cert.measured_alpha * lambda), Some(cert.measured_alpha))
        }
        _ => (None, None),
    };
    Ok(Measurements {
        geometric,
        hminus1,
        length_scale,
        alpha,
        mixed_level: level,
    })
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    /// Number of completed stages.
    pub n: usize,
    /// `T_n`, or `n` when the flow has no schedule.
    pub t: f64,
    pub field: TracerField,
    pub measurements: Option<Measurements>,
}

/// A generalized cellular flow acting on a tracer.
#[derive(Debug)]
pub struct CellularFlow {
    grid: GridSpec,
    ell0: u32,
    blocks: Vec<Block>,
    overrides: BTreeMap<(usize, usize), Block>,
    schedule: Option<Schedule>,
    sigma: Option<SigmaSequence>,
    state: TracerField,
    next_stage: usize,
    flow_map: Vec<u32>,
}

impl CellularFlow {
    /// `ell0` is the tiling exponent (`lambda = 2^-ell0`); `blocks[n]` acts
    /// at stage `n`. When `sigma` is given it must cover `blocks.len() + 1`
    /// values, and each stage is checked against it.
    pub fn new(
        initial: TracerField,
        ell0: u32,
        blocks: Vec<Block>,
        schedule: Option<Schedule>,
        sigma: Option<SigmaSequence>,
    ) -> Result<Self> {
        if ell0 == 0 {
            return Err(MixError::InvalidParameter(
                "the tiling exponent must be at least 1".into(),
            ));
        }
        let grid = initial.grid();
        let stages = blocks.len();
        if let Some(s) = &schedule {
            if s.stages() < stages {
                return Err(MixError::InvalidParameter(format!(
                    "schedule covers {} stages, {stages} blocks given",
                    s.stages()
                )));
            }
        }
        if let Some(s) = &sigma {
            if s.len() < stages + 1 {
                return Err(MixError::InvalidParameter(format!(
                    "sigma lists {} values, {} needed",
                    s.len(),
                    stages + 1
                )));
            }
        }
        let flow = Self {
            grid,
            ell0,
            blocks,
            overrides: BTreeMap::new(),
            schedule,
            sigma,
            flow_map: (0..grid.cell_count() as u32).collect(),
            state: initial,
            next_stage: 0,
        };
        for n in 0..stages {
            let level = flow.tile_level(n);
            let need = level + flow.blocks[n].min_resolution();
            if need > grid.m() {
                return Err(MixError::ResolutionTooCoarse {
                    have: grid.m(),
                    need,
                });
            }
            if flow.sigma.is_some() {
                let expected = flow.expected_level(n);
                if expected > grid.m() {
                    return Err(MixError::ResolutionTooCoarse {
                        have: grid.m(),
                        need: expected,
                    });
                }
            }
        }
        Ok(flow)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn ell0(&self) -> u32 {
        self.ell0
    }

    pub fn lambda(&self) -> f64 {
        (-(self.ell0 as f64)).exp2()
    }

    pub fn stages(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, n: usize) -> &Block {
        &self.blocks[n]
    }

    pub fn schedule(&self) -> Option<&Schedule> {
        self.schedule.as_ref()
    }

    pub fn set_schedule(&mut self, schedule: Schedule) -> Result<()> {
        if schedule.stages() < self.stages() {
            return Err(MixError::InvalidParameter(format!(
                "schedule covers {} stages, {} needed",
                schedule.stages(),
                self.stages()
            )));
        }
        self.schedule = Some(schedule);
        Ok(())
    }

    pub fn sigma(&self) -> Option<&SigmaSequence> {
        self.sigma.as_ref()
    }

    fn sigma_at(&self, n: usize) -> u32 {
        self.sigma.as_ref().and_then(|s| s.get(n)).unwrap_or(0)
    }

    /// Tiling level of stage `n`: `ell0 (n + sigma(n))`.
    pub fn tile_level(&self, n: usize) -> u32 {
        self.ell0 * (n as u32 + self.sigma_at(n))
    }

    pub fn tile_levels(&self) -> Vec<u32> {
        (0..self.stages()).map(|n| self.tile_level(n)).collect()
    }

    /// Level at which the state must be mixed after stage `n`.
    pub fn expected_level(&self, n: usize) -> u32 {
        self.ell0 * (n as u32 + 1 + self.sigma_at(n + 1))
    }

    /// Uses `block` instead of the stage block inside one tile.
    pub fn set_tile_override(&mut self, stage: usize, tile: usize, block: Block) -> Result<()> {
        if stage >= self.stages() {
            return Err(MixError::InvalidParameter(format!("no stage {stage}")));
        }
        let level = self.tile_level(stage);
        if tile >= 1usize << (2 * level) {
            return Err(MixError::InvalidParameter(format!(
                "tile {tile} out of range at level {level}"
            )));
        }
        if level + block.min_resolution() > self.grid.m() {
            return Err(MixError::ResolutionTooCoarse {
                have: self.grid.m(),
                need: level + block.min_resolution(),
            });
        }
        self.overrides.insert((stage, tile), block);
        Ok(())
    }

    fn block_for(&self, n: usize, tile: usize) -> &Block {
        self.overrides.get(&(n, tile)).unwrap_or(&self.blocks[n])
    }

    pub fn state(&self) -> &TracerField {
        &self.state
    }

    pub fn next_stage(&self) -> usize {
        self.next_stage
    }

    /// Composite cell map of all executed permutation stages
    /// (`map[source] = destination`).
    pub fn flow_map(&self) -> &[u32] {
        &self.flow_map
    }

    /// Time of snapshot `n`.
    pub fn time(&self, n: usize) -> f64 {
        self.schedule
            .as_ref()
            .map(|s| s.time(n))
            .unwrap_or(n as f64)
    }

    fn check_order(&self, n: usize) -> Result<()> {
        if n != self.next_stage || n >= self.stages() {
            return Err(MixError::StageOrder {
                requested: n,
                next: self.next_stage,
            });
        }
        Ok(())
    }

    /// Applies the stage-`n` block inside every tile of level
    /// `tile_level(n)` and returns the new state.
    pub fn compose_stage(&mut self, n: usize) -> Result<&TracerField> {
        self.check_order(n)?;
        let level = self.tile_level(n);
        let r = self.grid.m() - level;
        let has_override = self.overrides.keys().any(|(s, _)| *s == n);
        let uniform = self.blocks[n].cell_map(r)?;
        let holder: Vec<Arc<CellPermutation>>;
        let perms = if has_override {
            let tiles = 1usize << (2 * level);
            holder = (0..tiles)
                .map(|t| self.block_for(n, t).cell_map(r))
                .collect::<Result<_>>()?;
            TiledPermutations::PerTile(holder.iter().map(|p| p.as_ref()).collect())
        } else {
            TiledPermutations::Uniform(uniform.as_ref())
        };
        let next = apply_tiled(&self.state, level, &perms)?;
        self.flow_map = compose_on_grid(self.grid, &self.flow_map, level, &perms);
        let approximate = (0..1usize << (2 * level)).any(|t| self.block_for(n, t).is_approximate());
        if self.sigma.is_some() && !approximate {
            let expected = self.expected_level(n);
            if !is_mixed_at_scale(&next, expected)? {
                return Err(MixError::SigmaViolation {
                    stage: n,
                    expected,
                    measured: mixed_level(&next),
                });
            }
        }
        self.state = next;
        self.next_stage += 1;
        Ok(&self.state)
    }

    /// Runs stages until `n_stages` have been executed, recording a snapshot
    /// of the initial state and after every stage.
    pub fn run(&mut self, n_stages: usize, measure_cfg: Option<&MeasureConfig>) -> Result<Vec<Snapshot>> {
        if n_stages > self.stages() {
            return Err(MixError::InvalidParameter(format!(
                "{n_stages} stages requested, flow has {}",
                self.stages()
            )));
        }
        let mut out = Vec::with_capacity(n_stages + 1);
        let snap = |flow: &Self| -> Result<Snapshot> {
            Ok(Snapshot {
                n: flow.next_stage,
                t: flow.time(flow.next_stage),
                field: flow.state.clone(),
                measurements: measure_cfg.map(|c| measure(&flow.state, c)).transpose()?,
            })
        };
        out.push(snap(self)?);
        while self.next_stage < n_stages {
            self.compose_stage(self.next_stage)?;
            out.push(snap(self)?);
        }
        Ok(out)
    }

    fn require_schedule(&self) -> Result<&Schedule> {
        self.schedule
            .as_ref()
            .ok_or_else(|| MixError::InvalidParameter("flow has no schedule".into()))
    }

    /// Rescaled velocity of the flow:
    /// `u(t, x) = 2^-L / tau_n * u_n((t - T_n) / tau_n, (x - r) 2^L)` in the
    /// tile of level `L = tile_level(n)` with center `r` containing `x`;
    /// zero outside `Q` and on tile edges.
    pub fn global_velocity(&self, t: f64, x: f64, y: f64) -> Result<[f64; 2]> {
        let sched = self.require_schedule()?;
        let n = sched.stage_of(t)?;
        if n >= self.stages() {
            return Err(MixError::TimeOutOfRange {
                t,
                start: 0.0,
                end: sched.time(self.stages()),
            });
        }
        let level = self.tile_level(n);
        let tau = sched.tau(n);
        let tt = (t - sched.time(n)) / tau;
        let Some((tile, cx, cy)) = locate_tile(level, x, y) else {
            return Ok([0.0, 0.0]);
        };
        let block = self.block_for(n, tile);
        let scale = (-(level as f64)).exp2();
        let v = block.sample_velocity(tt, (x - cx) / scale, (y - cy) / scale)?;
        let f = scale / tau;
        Ok([f * v[0], f * v[1]])
    }

    /// Samples the global velocity at time `t` on the cell centers of an
    /// `n x n` grid.
    pub fn velocity_samples(&self, t: f64, n: usize) -> Result<VelocitySamples> {
        let sched = self.require_schedule()?;
        let stage = sched.stage_of(t)?;
        if stage >= self.stages() {
            return Err(MixError::TimeOutOfRange {
                t,
                start: 0.0,
                end: sched.time(self.stages()),
            });
        }
        for tile in 0..1usize << (2 * self.tile_level(stage)) {
            if self.block_for(stage, tile).velocity().is_none() {
                return Err(MixError::MissingVelocity(self.block_for(stage, tile).name()));
            }
        }
        Ok(VelocitySamples::from_fn(n, |x, y| {
            self.global_velocity(t, x, y).unwrap_or([0.0, 0.0])
        }))
    }

    /// Norm predicted by the change of variables at time `t`:
    /// `2^{L(s-1)} / tau_n * ||grad^s u_n(t')||_{L^p}`.
    pub fn predicted_norm(&self, t: f64, s: f64, p: f64) -> Result<f64> {
        let sched = self.require_schedule()?;
        let n = sched.stage_of(t)?;
        let level = self.tile_level(n);
        let tt = (t - sched.time(n)) / sched.tau(n);
        let base = self.blocks[n].norm_at(tt, s, p)?;
        Ok((level as f64 * (s - 1.0)).exp2() / sched.tau(n) * base)
    }

    /// Transports the (continuous) state over `[T_n, T_{n+1}]` along the
    /// global velocity by the semi-Lagrangian scheme.
    pub fn advect_stage(&mut self, n: usize, substeps: usize) -> Result<&TracerField> {
        self.check_order(n)?;
        if self.state.signs().is_some() {
            return Err(MixError::NotContinuous);
        }
        let sched = self.require_schedule()?;
        let (t0, t1) = (sched.time(n), sched.time(n + 1));
        for tile in 0..1usize << (2 * self.tile_level(n)) {
            if self.block_for(n, tile).velocity().is_none() {
                return Err(MixError::MissingVelocity(self.block_for(n, tile).name()));
            }
        }
        // Sample strictly inside the stage so the velocity lookup never
        // leaves [T_n, T_{n+1}).
        let eps = (t1 - t0) * 1e-12;
        let next = advect_semi_lagrangian(
            &self.state,
            |t, x, y| {
                self.global_velocity(t.clamp(t0, t1 - eps), x, y)
                    .unwrap_or([0.0, 0.0])
            },
            t0,
            t1,
            substeps,
        )?;
        self.state = next;
        self.next_stage += 1;
        Ok(&self.state)
    }
}

/// Tile index and center of the level-`level` tile containing `(x, y)`.
fn locate_tile(level: u32, x: f64, y: f64) -> Option<(usize, f64, f64)> {
    let (cx, cy) = crate::blocks::velocity::tile_center(level, x, y)?;
    let t = 1usize << level;
    let k = (((x + 0.5) * t as f64).floor() as usize).min(t - 1);
    let h = (((y + 0.5) * t as f64).floor() as usize).min(t - 1);
    Some((k * t + h, cx, cy))
}

/// Bilinear interpolation of cell-center values at `(x, y)`; zero outside
/// `Q`, clamped to the outermost centers inside it.
fn bilinear(field: &TracerField, x: f64, y: f64) -> f64 {
    if !(x > -0.5 && x < 0.5 && y > -0.5 && y < 0.5) {
        return 0.0;
    }
    let n = field.grid().side();
    let nf = n as f64;
    let gx = ((x + 0.5) * nf - 0.5).clamp(0.0, nf - 1.0);
    let gy = ((y + 0.5) * nf - 0.5).clamp(0.0, nf - 1.0);
    let i0 = (gx.floor() as usize).min(n.saturating_sub(2));
    let j0 = (gy.floor() as usize).min(n.saturating_sub(2));
    let (fx, fy) = (gx - i0 as f64, gy - j0 as f64);
    let i1 = (i0 + 1).min(n - 1);
    let j1 = (j0 + 1).min(n - 1);
    let v00 = field.get(i0, j0);
    let v10 = field.get(i1, j0);
    let v01 = field.get(i0, j1);
    let v11 = field.get(i1, j1);
    (1.0 - fx) * ((1.0 - fy) * v00 + fy * v01) + fx * ((1.0 - fy) * v10 + fy * v11)
}

/// Semi-Lagrangian transport of a continuous field from `t0` to `t1`
/// (either order): for each of `substeps` uniform steps, every cell center
/// is traced backwards along the velocity with RK4 and the previous field is
/// sampled bilinearly at the departure point. A constant shift after each
/// step restores the initial mean.
pub fn advect_semi_lagrangian(
    field: &TracerField,
    velocity: impl Fn(f64, f64, f64) -> [f64; 2] + Sync,
    t0: f64,
    t1: f64,
    substeps: usize,
) -> Result<TracerField> {
    if field.signs().is_some() {
        return Err(MixError::NotContinuous);
    }
    if substeps == 0 {
        return Err(MixError::InvalidParameter("substeps must be positive".into()));
    }
    let grid = field.grid();
    let n = grid.side();
    let h = grid.h();
    let mean0 = field.mean();
    let dt = (t1 - t0) / substeps as f64;
    let mut cur = field.clone();
    for step in 0..substeps {
        let ta = t0 + step as f64 * dt;
        let tb = ta + dt;
        let vals: Vec<f64> = (0..grid.cell_count())
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                let (mut x, mut y) = (-0.5 + (i as f64 + 0.5) * h, -0.5 + (j as f64 + 0.5) * h);
                // integrate dX/dt = u backwards from tb to ta
                let d = -dt;
                let k1 = velocity(tb, x, y);
                let k2 = velocity(tb + 0.5 * d, x + 0.5 * d * k1[0], y + 0.5 * d * k1[1]);
                let k3 = velocity(tb + 0.5 * d, x + 0.5 * d * k2[0], y + 0.5 * d * k2[1]);
                let k4 = velocity(ta, x + d * k3[0], y + d * k3[1]);
                x += d / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
                y += d / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
                bilinear(&cur, x, y)
            })
            .collect();
        let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
        let shift = mean0 - mean;
        cur = TracerField::continuous(grid, vals.into_iter().map(|v| v + shift).collect())?;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{tile_sums, Pattern};

    fn g(m: u32) -> GridSpec {
        GridSpec::new(m).unwrap()
    }

    fn halves(m: u32) -> TracerField {
        TracerField::pattern(g(m), Pattern::LeftRightHalves).unwrap()
    }

    #[test]
    fn figure_one_two_steps() {
        let mut flow = CellularFlow::new(
            halves(4),
            1,
            vec![Block::interleave(), Block::interleave()],
            None,
            Some(SigmaSequence::new(vec![0, 0, 0]).unwrap()),
        )
        .unwrap();
        flow.compose_stage(0).unwrap();
        assert!(is_mixed_at_scale(flow.state(), 1).unwrap());
        flow.compose_stage(1).unwrap();
        assert!(is_mixed_at_scale(flow.state(), 2).unwrap());
        assert!(matches!(
            flow.compose_stage(0),
            Err(MixError::StageOrder { .. })
        ));
    }

    #[test]
    fn stage_order_is_enforced() {
        let mut flow =
            CellularFlow::new(halves(4), 1, vec![Block::interleave(); 2], None, None).unwrap();
        assert!(matches!(
            flow.compose_stage(1),
            Err(MixError::StageOrder { requested: 1, next: 0 })
        ));
    }

    #[test]
    fn identity_stage_keeps_state() {
        let mut flow =
            CellularFlow::new(halves(3), 1, vec![Block::identity()], None, None).unwrap();
        let before = flow.state().clone();
        flow.compose_stage(0).unwrap();
        assert_eq!(flow.state(), &before);
    }

    #[test]
    fn tiles_keep_their_value_multisets() {
        let mut flow =
            CellularFlow::new(halves(5), 1, vec![Block::interleave(); 3], None, None).unwrap();
        for n in 0..3 {
            let level = flow.tile_level(n);
            let before = tile_sums(flow.state(), level).unwrap();
            flow.compose_stage(n).unwrap();
            assert_eq!(tile_sums(flow.state(), level).unwrap(), before);
        }
    }

    #[test]
    fn too_coarse_grids_are_rejected() {
        let r = CellularFlow::new(halves(3), 1, vec![Block::interleave(); 3], None, None);
        assert!(matches!(r, Err(MixError::ResolutionTooCoarse { .. })));
    }

    #[test]
    fn deep_then_interleaves_with_sigma() {
        let init = TracerField::pattern(g(6), Pattern::Stripes(2)).unwrap();
        let blocks = vec![
            Block::deep(2).unwrap(),
            Block::interleave(),
            Block::interleave(),
        ];
        let sigma = SigmaSequence::new(vec![1, 2, 2, 2]).unwrap();
        let mut flow = CellularFlow::new(init, 1, blocks, None, Some(sigma)).unwrap();
        let snaps = flow.run(3, None).unwrap();
        assert!(is_mixed_at_scale(&snaps[1].field, 3).unwrap());
        assert_eq!(mixed_level(&snaps[1].field), Some(3));
        assert_eq!(mixed_level(&snaps[3].field), Some(5));
    }

    #[test]
    fn sigma_violation_is_reported() {
        let sigma = SigmaSequence::new(vec![0, 1]).unwrap();
        let mut flow =
            CellularFlow::new(halves(4), 1, vec![Block::interleave()], None, Some(sigma)).unwrap();
        assert!(matches!(
            flow.compose_stage(0),
            Err(MixError::SigmaViolation { expected: 2, .. })
        ));
    }

    #[test]
    fn run_records_snapshots() {
        let mut flow =
            CellularFlow::new(halves(4), 1, vec![Block::interleave()], None, None).unwrap();
        assert_eq!(flow.run(0, None).unwrap().len(), 1);
        let snaps = flow.run(1, Some(&MeasureConfig::default())).unwrap();
        assert_eq!(snaps.len(), 2);
        assert_eq!(snaps[1].measurements.as_ref().unwrap().mixed_level, Some(1));
    }

    #[test]
    fn global_velocity_rescaling() {
        let sched = Schedule::new(vec![0.0, 1.0, 1.5, 3.5]).unwrap();
        let flow = CellularFlow::new(
            halves(6),
            1,
            vec![Block::interleave(); 3],
            Some(sched),
            None,
        )
        .unwrap();
        assert_eq!(flow.global_velocity(0.3, 0.7, 0.0).unwrap(), [0.0, 0.0]);
        let b = Block::interleave();
        let v0 = flow.global_velocity(0.5, 0.1, -0.2).unwrap();
        assert_eq!(v0, b.sample_velocity(0.5, 0.1, -0.2).unwrap());
        // stage 2: tiles of side 1/4, tau = 2
        let (x, y) = (0.3, 0.05);
        let v = flow.global_velocity(2.5, x, y).unwrap();
        let w = b
            .sample_velocity(0.5, (x - 0.375) * 4.0, (y - 0.125) * 4.0)
            .unwrap();
        assert_eq!(v, [w[0] * 0.25 / 2.0, w[1] * 0.25 / 2.0]);
        assert!(flow.global_velocity(3.5, 0.0, 0.0).is_err());
        assert_eq!(flow.global_velocity(2.5, 0.25, 0.1).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Schedule::new(vec![0.5, 1.0]).is_err());
        let s = Schedule::new(vec![0.0, 1.0, 3.0, 7.0]).unwrap();
        assert_eq!(s.tau_window(1, 2), 6.0);
        assert_eq!(s.stage_of(3.0).unwrap(), 2);
        assert!(s.stage_of(7.0).is_err());
    }

    #[test]
    fn zero_velocity_advection_is_identity() {
        let f = TracerField::from_fn(g(5), |x, y| (3.0 * x).sin() * y).unwrap();
        let out = advect_semi_lagrangian(&f, |_, _, _| [0.0, 0.0], 0.0, 1.0, 4).unwrap();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(
            advect_semi_lagrangian(&halves(3), |_, _, _| [0.0, 0.0], 0.0, 1.0, 1),
            Err(MixError::NotContinuous)
        ));
    }

    #[test]
    fn swirl_stage_spreads_halves_into_quadrants() {
        let lifted = halves(7).lift();
        let mut flow = CellularFlow::new(
            lifted.clone(),
            1,
            vec![Block::swirl(None, 2).unwrap()],
            Some(Schedule::uniform(1)),
            None,
        )
        .unwrap();
        flow.advect_stage(0, 32).unwrap();
        let before = tile_sums(&lifted, 1).unwrap().averages();
        let after = tile_sums(flow.state(), 1).unwrap().averages();
        let size = |v: &[f64]| v.iter().map(|a| a.abs()).fold(0.0, f64::max);
        assert!(size(&after) < size(&before));
        assert!(flow.state().mean().abs() < 1e-12);
    }
}
