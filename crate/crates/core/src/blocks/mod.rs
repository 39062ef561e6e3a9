//! Unit-cell building blocks: an exact cell permutation (for tracer
//! transport) paired with an optional analytic velocity (for costs).

pub mod perm;
pub mod velocity;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MixError, Result};
use crate::grid::TracerField;
pub use perm::CellPermutation;
pub use velocity::{CosineProfile, StreamSwirl, VelocityCarrier};

/// Column map of the canonical interleave on its 4x4 reference grid.
pub const INTERLEAVE_COLUMNS: [usize; 4] = [0, 2, 1, 3];

/// Profile power of the velocity attached to interleave and deep blocks.
/// `cos^4` keeps the tiled field twice continuously differentiable across
/// tile edges.
pub const SMOOTH_POWER: u32 = 4;

/// Profile power of the default swirl block (`sin^2` bump).
pub const SWIRL_POWER: u32 = 2;

/// RK4 steps used to build the snapped swirl map.
pub const SWIRL_STEPS: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Identity,
    Interleave,
    Baker,
    Deep(u32),
    Swirl,
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockKind::Identity => write!(f, "identity"),
            BlockKind::Interleave => write!(f, "interleave"),
            BlockKind::Baker => write!(f, "baker"),
            BlockKind::Deep(d) => write!(f, "deep({d})"),
            BlockKind::Swirl => write!(f, "swirl"),
        }
    }
}

/// A building block. Cell maps are built lazily per resolution and cached.
pub struct Block {
    kind: BlockKind,
    min_resolution: u32,
    velocity: Option<VelocityCarrier>,
    approximate: bool,
    maps: Mutex<HashMap<u32, Arc<CellPermutation>>>,
}

impl Clone for Block {
    fn clone(&self) -> Self {
        Self {
            kind: self.kind,
            min_resolution: self.min_resolution,
            velocity: self.velocity.clone(),
            approximate: self.approximate,
            maps: Mutex::new(self.maps.lock().expect("map cache poisoned").clone()),
        }
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Block")
            .field("kind", &self.kind)
            .field("min_resolution", &self.min_resolution)
            .field("velocity", &self.velocity)
            .field("approximate", &self.approximate)
            .finish()
    }
}

impl PartialEq for Block {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.min_resolution == other.min_resolution
            && self.velocity == other.velocity
            && self.approximate == other.approximate
    }
}

fn smooth_carrier(depth: u32) -> VelocityCarrier {
    let base = StreamSwirl::new(None, SMOOTH_POWER).expect("valid smooth profile");
    if depth == 1 {
        VelocityCarrier::Swirl(base)
    } else {
        VelocityCarrier::Cascade { base, depth }
    }
}

impl Block {
    fn build(kind: BlockKind, min_resolution: u32, velocity: Option<VelocityCarrier>) -> Self {
        Self {
            kind,
            min_resolution,
            velocity,
            approximate: kind == BlockKind::Swirl,
            maps: Mutex::new(HashMap::new()),
        }
    }

    /// Leaves every field unchanged; carries zero velocity.
    pub fn identity() -> Self {
        Self::build(BlockKind::Identity, 0, Some(VelocityCarrier::Zero))
    }

    /// Middle-column swap on the 4x4 reference grid. Carries the smooth
    /// quarter-turn swirl as its cost velocity.
    pub fn interleave() -> Self {
        Self::build(BlockKind::Interleave, 2, Some(smooth_carrier(1)))
    }

    /// Discrete baker's map; no velocity.
    pub fn baker() -> Self {
        Self::build(BlockKind::Baker, 1, None)
    }

    /// `d` nested interleaves: level `j` applies the interleave inside every
    /// tile of side `2^-j`, `j = 0..d-1`.
    pub fn deep(d: u32) -> Result<Self> {
        if d == 0 {
            return Err(MixError::InvalidParameter(
                "deep block depth must be at least 1".into(),
            ));
        }
        if d + 1 > crate::grid::MAX_LEVEL {
            return Err(MixError::InvalidParameter(format!("deep block depth {d} too large")));
        }
        Ok(Self::build(BlockKind::Deep(d), d + 1, Some(smooth_carrier(d))))
    }

    /// Swirl driven by `psi = A sin^k(pi(x+1/2)) sin^k(pi(y+1/2))`, with the
    /// grid-snapped time-1 flow map as its (approximate) permutation.
    pub fn swirl(amplitude: Option<f64>, power: u32) -> Result<Self> {
        let sw = StreamSwirl::new(amplitude, power)?;
        Ok(Self::build(BlockKind::Swirl, 1, Some(VelocityCarrier::Swirl(sw))))
    }

    /// Raises the minimum grid resolution the block may act on.
    pub fn with_min_resolution(mut self, q: u32) -> Result<Self> {
        if q < self.min_resolution {
            return Err(MixError::ResolutionTooCoarse {
                have: q,
                need: self.min_resolution,
            });
        }
        self.min_resolution = q;
        Ok(self)
    }

    /// Replaces the cost velocity (`None` removes it).
    pub fn with_velocity(mut self, velocity: Option<VelocityCarrier>) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn kind(&self) -> BlockKind {
        self.kind
    }

    pub fn name(&self) -> String {
        self.kind.to_string()
    }

    pub fn min_resolution(&self) -> u32 {
        self.min_resolution
    }

    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    pub fn velocity(&self) -> Option<&VelocityCarrier> {
        self.velocity.as_ref()
    }

    /// Number of tiling levels by which one application refines the mixed
    /// level of its canonical input.
    pub fn mix_gain(&self) -> u32 {
        match self.kind {
            BlockKind::Identity | BlockKind::Swirl => 0,
            BlockKind::Interleave | BlockKind::Baker => 1,
            BlockKind::Deep(d) => d,
        }
    }

    /// Increment of the un-mixedness index contributed by one application:
    /// levels mixed beyond the single level a stage accounts for.
    pub fn depth_gain(&self) -> u32 {
        self.mix_gain().saturating_sub(1)
    }

    /// The cell map at resolution `r` (a `2^r x 2^r` grid).
    pub fn cell_map(&self, r: u32) -> Result<Arc<CellPermutation>> {
        if r < self.min_resolution {
            return Err(MixError::ResolutionTooCoarse {
                have: r,
                need: self.min_resolution,
            });
        }
        if r > crate::grid::MAX_LEVEL {
            return Err(MixError::InvalidParameter(format!("resolution {r} too large")));
        }
        if let Some(p) = self.maps.lock().expect("map cache poisoned").get(&r) {
            return Ok(p.clone());
        }
        let map = Arc::new(match self.kind {
            BlockKind::Identity => CellPermutation::identity(r),
            BlockKind::Interleave => interleave_map()?.refine(r)?,
            BlockKind::Deep(d) => deep_map(d)?.refine(r)?,
            BlockKind::Baker => baker_map(r)?,
            BlockKind::Swirl => match &self.velocity {
                Some(VelocityCarrier::Swirl(sw)) => snapped_flow_map(sw, r, SWIRL_STEPS)?,
                _ => {
                    return Err(MixError::MissingVelocity(
                        "swirl block without a swirl velocity".into(),
                    ))
                }
            },
        });
        self.maps
            .lock()
            .expect("map cache poisoned")
            .insert(r, map.clone());
        Ok(map)
    }

    /// Transports a field through one application of the block at the
    /// field's own resolution.
    pub fn apply(&self, field: &TracerField) -> Result<TracerField> {
        let map = self.cell_map(field.grid().m())?;
        map.apply(field)
    }

    fn carrier(&self) -> Result<&VelocityCarrier> {
        self.velocity
            .as_ref()
            .ok_or_else(|| MixError::MissingVelocity(self.name()))
    }

    /// Velocity at unit time `t` and point `(x, y)` of the unit cell.
    pub fn sample_velocity(&self, t: f64, x: f64, y: f64) -> Result<[f64; 2]> {
        Ok(self.carrier()?.sample(t, x, y))
    }

    /// `int_0^1 ||grad^s u(t)||_{L^p(Q)} dt`.
    pub fn cost(&self, s: f64, p: f64) -> Result<f64> {
        self.carrier()?.cost(s, p)
    }

    /// `sup_t ||grad^s u(t)||_{L^p(Q)}`.
    pub fn sup_norm(&self, s: f64, p: f64) -> Result<f64> {
        self.carrier()?.sup_norm(s, p)
    }

    /// `||grad^s u(t)||_{L^p(Q)}` at unit time `t`.
    pub fn norm_at(&self, t: f64, s: f64, p: f64) -> Result<f64> {
        self.carrier()?.norm_at(t, s, p)
    }
}

/// `int_0^1 ||grad^s u||_{L^p} dt` of a block.
pub fn block_cost(block: &Block, s: f64, p: f64) -> Result<f64> {
    block.cost(s, p)
}

fn interleave_map() -> Result<CellPermutation> {
    CellPermutation::from_fn(2, |i, j| (INTERLEAVE_COLUMNS[i], j))
}

fn deep_map(d: u32) -> Result<CellPermutation> {
    let q = d + 1;
    let base = interleave_map()?;
    let mut acc = CellPermutation::identity(q);
    let n = 1usize << q;
    for j in 0..d {
        let local = base.refine(q - j)?;
        let ls = 1usize << (q - j);
        let stage = CellPermutation::from_fn(q, |a, b| {
            let (da, db) = local.map_cell(a % ls, b % ls);
            ((a / ls) * ls + da, (b / ls) * ls + db)
        })?;
        debug_assert_eq!(stage.side(), n);
        acc = acc.then(&stage)?;
    }
    Ok(acc)
}

/// `(x, y) -> (2x mod 1, (y + floor(2x)) / 2)` on a `2^r` grid of the unit
/// cell: the low bit of the row index selects which of the two new columns
/// a cell lands in, so the map is a bijection.
pub fn baker_map(r: u32) -> Result<CellPermutation> {
    if r == 0 {
        return Err(MixError::ResolutionTooCoarse { have: 0, need: 1 });
    }
    let half = 1usize << (r - 1);
    CellPermutation::from_fn(r, |i, j| {
        let b = i / half;
        (2 * (i % half) + (j & 1), (j >> 1) + b * half)
    })
}

/// RK4 endpoint of the time-1 trajectory from `(x, y)`.
pub fn integrate(sw: &StreamSwirl, x: f64, y: f64, steps: usize, sign: f64) -> (f64, f64) {
    let dt = sign / steps as f64;
    let (mut x, mut y) = (x, y);
    for _ in 0..steps {
        let k1 = sw.velocity(x, y);
        let k2 = sw.velocity(x + 0.5 * dt * k1[0], y + 0.5 * dt * k1[1]);
        let k3 = sw.velocity(x + 0.5 * dt * k2[0], y + 0.5 * dt * k2[1]);
        let k4 = sw.velocity(x + dt * k3[0], y + dt * k3[1]);
        x += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y += dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    }
    (x, y)
}

/// Grid-snapped time-1 map of a swirl. Each cell center is integrated
/// forward; cells are then claimed in row-major order starting from the top
/// row, and a cell whose landing cell is already taken goes to the nearest
/// free cell (distance from the landing point, ties broken by scan order).
pub fn snapped_flow_map(sw: &StreamSwirl, r: u32, steps: usize) -> Result<CellPermutation> {
    let n = 1usize << r;
    let h = 1.0 / n as f64;
    let landing: Vec<(f64, f64)> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            integrate(
                sw,
                -0.5 + (i as f64 + 0.5) * h,
                -0.5 + (j as f64 + 0.5) * h,
                steps,
                1.0,
            )
        })
        .collect();
    let cell_of = |v: f64| (((v + 0.5) * n as f64).floor().max(0.0) as usize).min(n - 1);
    let mut claimed = vec![false; n * n];
    let mut dest = vec![0u32; n * n];
    for row in 0..n {
        let j = n - 1 - row;
        for i in 0..n {
            let (x, y) = landing[i * n + j];
            let (ti, tj) = (cell_of(x), cell_of(y));
            let target = if !claimed[ti * n + tj] {
                ti * n + tj
            } else {
                nearest_free(&claimed, n, ti, tj, x, y, h)
            };
            claimed[target] = true;
            dest[i * n + j] = target as u32;
        }
    }
    CellPermutation::new(r, dest)
}

fn nearest_free(claimed: &[bool], n: usize, ti: usize, tj: usize, x: f64, y: f64, h: f64) -> usize {
    let dist = |a: usize, b: usize| {
        let cx = -0.5 + (a as f64 + 0.5) * h - x;
        let cy = -0.5 + (b as f64 + 0.5) * h - y;
        cx * cx + cy * cy
    };
    // Scan rank of a cell: top row first, left to right.
    let rank = |a: usize, b: usize| (n - 1 - b) * n + a;
    let mut best: Option<(f64, usize, usize)> = None;
    let mut found_at = None;
    for radius in 1..n {
        if let Some(f) = found_at {
            if radius > f + 1 {
                break;
            }
        }
        let lo_i = ti.saturating_sub(radius);
        let hi_i = (ti + radius).min(n - 1);
        let lo_j = tj.saturating_sub(radius);
        let hi_j = (tj + radius).min(n - 1);
        for a in lo_i..=hi_i {
            for b in lo_j..=hi_j {
                let on_ring = a.abs_diff(ti) == radius || b.abs_diff(tj) == radius;
                if !on_ring || claimed[a * n + b] {
                    continue;
                }
                let d = dist(a, b);
                let better = match best {
                    None => true,
                    Some((bd, ba, bb)) => d < bd || (d == bd && rank(a, b) < rank(ba, bb)),
                };
                if better {
                    best = Some((d, a, b));
                }
            }
        }
        if best.is_some() && found_at.is_none() {
            found_at = Some(radius);
        }
    }
    let (_, a, b) = best.expect("a free cell always exists while sources remain");
    a * n + b
}

/// Velocity attached to a block descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum VelocitySpec {
    Swirl {
        #[serde(default)]
        amplitude: Option<f64>,
        #[serde(default)]
        power: Option<u32>,
    },
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorKind {
    Identity,
    Interleave,
    Baker,
    Deep,
    Swirl,
}

/// Configuration form of a block, e.g. `{"kind": "deep", "d": 2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDescriptor {
    pub kind: DescriptorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<VelocitySpec>,
}

impl BlockDescriptor {
    pub fn of(kind: DescriptorKind) -> Self {
        Self {
            kind,
            d: None,
            q: None,
            amplitude: None,
            power: None,
            velocity: None,
        }
    }

    pub fn build(&self) -> Result<Block> {
        let reject = |field: &str| {
            Err(MixError::InvalidParameter(format!(
                "`{field}` is not valid for {:?} blocks",
                self.kind
            )))
        };
        if self.d.is_some() && self.kind != DescriptorKind::Deep {
            return reject("d");
        }
        if (self.amplitude.is_some() || self.power.is_some()) && self.kind != DescriptorKind::Swirl {
            return reject("amplitude/power");
        }
        let mut block = match self.kind {
            DescriptorKind::Identity => Block::identity(),
            DescriptorKind::Interleave => Block::interleave(),
            DescriptorKind::Baker => Block::baker(),
            DescriptorKind::Deep => Block::deep(self.d.ok_or_else(|| {
                MixError::InvalidParameter("deep block requires `d`".into())
            })?)?,
            DescriptorKind::Swirl => {
                Block::swirl(self.amplitude, self.power.unwrap_or(SWIRL_POWER))?
            }
        };
        if let Some(q) = self.q {
            block = block.with_min_resolution(q)?;
        }
        if let Some(v) = &self.velocity {
            if self.kind == DescriptorKind::Swirl {
                return reject("velocity");
            }
            let carrier = match v {
                VelocitySpec::None => None,
                VelocitySpec::Swirl { amplitude, power } => {
                    let base = StreamSwirl::new(*amplitude, power.unwrap_or(SMOOTH_POWER))?;
                    let depth = match block.kind {
                        BlockKind::Deep(d) => d,
                        _ => 1,
                    };
                    Some(if depth == 1 {
                        VelocityCarrier::Swirl(base)
                    } else {
                        VelocityCarrier::Cascade { base, depth }
                    })
                }
            };
            block = block.with_velocity(carrier);
        }
        Ok(block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{is_mixed_at_scale, GridSpec, Pattern};

    fn g(m: u32) -> GridSpec {
        GridSpec::new(m).unwrap()
    }

    fn column_signs(f: &TracerField, j: usize) -> Vec<f64> {
        (0..f.grid().side()).map(|i| f.get(i, j)).collect()
    }

    #[test]
    fn interleave_on_halves() {
        let f = TracerField::pattern(g(2), Pattern::LeftRightHalves).unwrap();
        let out = Block::interleave().apply(&f).unwrap();
        for j in 0..4 {
            assert_eq!(column_signs(&out, j), vec![1.0, -1.0, 1.0, -1.0]);
        }
        assert!(is_mixed_at_scale(&out, 1).unwrap());
    }

    #[test]
    fn interleave_twice_matches_composed_columns() {
        let f = TracerField::pattern(g(2), Pattern::LeftRightHalves).unwrap();
        let b = Block::interleave();
        let out = b.apply(&b.apply(&f).unwrap()).unwrap();
        // Oracle: the column map composed with itself is the identity.
        let mut col = [0usize; 4];
        for (c, slot) in col.iter_mut().enumerate() {
            *slot = INTERLEAVE_COLUMNS[INTERLEAVE_COLUMNS[c]];
        }
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(out.get(col[i], j), f.get(i, j));
            }
        }
    }

    #[test]
    fn interleave_leaves_zero_field() {
        let z = TracerField::continuous(g(3), vec![0.0; 64]).unwrap();
        assert_eq!(Block::interleave().apply(&z).unwrap(), z);
        assert!(matches!(
            Block::interleave().apply(&TracerField::continuous(g(1), vec![0.0; 4]).unwrap()),
            Err(MixError::ResolutionTooCoarse { .. })
        ));
    }

    #[test]
    fn baker_on_top_bottom_halves() {
        let f = TracerField::pattern(g(4), Pattern::TopBottomHalves).unwrap();
        let b = Block::baker();
        let once = b.apply(&f).unwrap();
        // Oracle: push every cell through the continuous map at its center.
        let n = 16;
        let mut expect = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let x = (i as f64 + 0.5) / n as f64;
                let y = (j as f64 + 0.5) / n as f64;
                let nx = (2.0 * x).fract();
                let ny = (y + (2.0 * x).floor()) / 2.0;
                // the center lands on a cell edge in x; the row parity picks the side
                let ci = ((nx * n as f64) as usize - 1 + (j & 1)).min(n - 1);
                let cj = (ny * n as f64) as usize;
                expect[ci * n + cj] = f.get(i, j);
            }
        }
        assert_eq!(once.values(), expect);
        let twice = b.apply(&once).unwrap();
        let stripes = TracerField::pattern(g(4), Pattern::HorizontalStripes(3)).unwrap();
        assert_eq!(twice, stripes);
    }

    #[test]
    fn baker_iterates_produce_halving_stripes() {
        let mut f = TracerField::pattern(g(5), Pattern::TopBottomHalves).unwrap();
        let b = Block::baker();
        for n in 1..=4u32 {
            f = b.apply(&f).unwrap();
            let want = TracerField::pattern(g(5), Pattern::HorizontalStripes(n + 1)).unwrap();
            assert_eq!(f, want, "n={n}");
        }
    }

    #[test]
    fn deep_one_is_interleave() {
        let d1 = Block::deep(1).unwrap().cell_map(2).unwrap();
        let il = Block::interleave().cell_map(2).unwrap();
        assert_eq!(d1, il);
        assert!(Block::deep(0).is_err());
    }

    #[test]
    fn deep_two_mixes_two_levels() {
        let f = TracerField::pattern(g(3), Pattern::LeftRightHalves).unwrap();
        let out = Block::deep(2).unwrap().apply(&f).unwrap();
        // Oracle: interleave on Q followed by interleave in each quadrant.
        let first = Block::interleave().cell_map(3).unwrap().apply(&f).unwrap();
        let second = Block::interleave()
            .cell_map(2)
            .unwrap()
            .apply_tiled(&first, 1)
            .unwrap();
        assert_eq!(out, second);
        assert!(is_mixed_at_scale(&out, 2).unwrap());
        assert!(!is_mixed_at_scale(&out, 3).unwrap());
    }

    #[test]
    fn deep_three_conserves_counts() {
        let f = TracerField::pattern(g(4), Pattern::LeftRightHalves).unwrap();
        let out = Block::deep(3).unwrap().apply(&f).unwrap();
        let plus = out.values().iter().filter(|&&v| v > 0.0).count();
        assert_eq!(plus, 128);
        assert!(Block::deep(3).unwrap().apply(&f.refine(4).unwrap()).is_ok());
        let coarse = TracerField::pattern(g(3), Pattern::LeftRightHalves).unwrap();
        assert!(Block::deep(3).unwrap().apply(&coarse).is_err());
    }

    #[test]
    fn swirl_map_is_bijection_and_approximate() {
        let b = Block::swirl(None, 2).unwrap();
        assert!(b.is_approximate());
        let p = b.cell_map(5).unwrap();
        let mut seen = vec![false; 1024];
        for &d in p.dest() {
            seen[d as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
        // A cell right of the center turns counterclockwise, moving up and left.
        let (i, j) = p.map_cell(20, 16);
        assert!(i < 20 && j > 17, "{i} {j}");
    }

    #[test]
    fn swirl_rotation_sense_matches_quarter_turn() {
        let sw = StreamSwirl::new(None, 2).unwrap();
        let (x, y) = integrate(&sw, 0.01, 0.0, 512, 1.0);
        assert!(x.abs() < 1e-3 && (y - 0.01).abs() < 1e-3, "{x} {y}");
    }

    #[test]
    fn baker_has_no_cost() {
        assert!(matches!(
            Block::baker().cost(1.0, 2.0),
            Err(MixError::MissingVelocity(_))
        ));
        assert_eq!(Block::identity().cost(1.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn descriptors_build_blocks() {
        let d: BlockDescriptor = serde_json::from_str(r#"{"kind":"deep","d":2,"q":4}"#).unwrap();
        let b = d.build().unwrap();
        assert_eq!(b.kind(), BlockKind::Deep(2));
        assert_eq!(b.min_resolution(), 4);
        let bad: BlockDescriptor = serde_json::from_str(r#"{"kind":"deep","d":3,"q":3}"#).unwrap();
        assert!(bad.build().is_err());
        let sw: BlockDescriptor =
            serde_json::from_str(r#"{"kind":"swirl","amplitude":1.0}"#).unwrap();
        assert_eq!(sw.build().unwrap().kind(), BlockKind::Swirl);
        assert!(serde_json::from_str::<BlockDescriptor>(r#"{"kind":"baker","x":1}"#).is_err());
        let nv: BlockDescriptor =
            serde_json::from_str(r#"{"kind":"interleave","velocity":{"kind":"none"}}"#).unwrap();
        assert!(nv.build().unwrap().cost(1.0, 2.0).is_err());
    }
}
