//! Characteristic length scales of cell sets and per-tile un-mixedness.

use rayon::prelude::*;
use serde::Serialize;

use super::ladder::{self, Disk};
use super::{spread_order, MixParams, SumTables};
use crate::error::{MixError, Result};
use crate::grid::{CellRegion, CellSet, GridSpec, Tiling, TracerField};

/// Largest ladder radius of a ball inside `E` that `J` fills beyond the
/// threshold fraction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LengthScale {
    /// 0 when no admissible ball qualifies.
    pub value: f64,
    pub index: Option<u32>,
    /// Node `(a, b)` of the first qualifying ball in scan order.
    pub center: Option<(i64, i64)>,
}

/// Precomputed indicator sums of a cell set, reusable across regions.
pub struct SetTables {
    grid: GridSpec,
    tables: SumTables,
}

impl SetTables {
    pub fn new(set: &CellSet) -> Self {
        let grid = set.grid();
        Self {
            grid,
            tables: SumTables::new(grid.side(), |i, j| if set.contains(i, j) { 1.0 } else { 0.0 }),
        }
    }

    fn from_sign(field: &TracerField, sign: i8) -> Result<Self> {
        let s = field.signs().ok_or(MixError::NotBinary)?;
        let grid = field.grid();
        let n = grid.side();
        Ok(Self {
            grid,
            tables: SumTables::new(n, |i, j| if s[i * n + j] == sign { 1.0 } else { 0.0 }),
        })
    }

    /// Top ladder index for a region of `size` cells per side: the largest
    /// radius not exceeding half the side.
    pub fn top_index(size: usize) -> Option<u32> {
        if size < 2 {
            return None;
        }
        // 2^(i/4) <= size/2
        let mut i = 0u32;
        while ladder::radius_cells(i + 1) <= size as f64 / 2.0 {
            i += 1;
        }
        Some(i)
    }

    fn qualifying_center(
        &self,
        region: CellRegion,
        disk: &Disk,
        threshold: f64,
    ) -> Option<(i64, i64)> {
        let reach = disk.reach;
        let lo_i = region.i0 as i64 + reach;
        let hi_i = (region.i0 + region.size) as i64 - reach;
        let lo_j = region.j0 as i64 + reach;
        let hi_j = (region.j0 + region.size) as i64 - reach;
        if lo_i > hi_i || lo_j > hi_j {
            return None;
        }
        let need = threshold * disk.count as f64;
        let k = disk.half_width();
        let order = spread_order((hi_j - lo_j + 1) as usize);
        let t = &self.tables;
        order.par_iter().find_map_first(|&row| {
            let b = lo_j + row as i64;
            for a in lo_i..=hi_i {
                let (sq, _) = t.boxed(a - k - 1, a + k, b - k - 1, b + k);
                if sq <= need {
                    continue;
                }
                let mut c = 0.0;
                for &(dj, kr) in &disk.rows {
                    c += t.span(b + dj, a - kr - 1, a + kr);
                }
                if c > need {
                    return Some((a, b));
                }
            }
            None
        })
    }

    /// Length scale of the set within `region`.
    pub fn length_scale(&self, region: CellRegion, params: &MixParams) -> Result<LengthScale> {
        params.validate()?;
        let n = self.grid.side();
        if region.size == 0 || region.i0 + region.size > n || region.j0 + region.size > n {
            return Err(MixError::InvalidParameter(format!(
                "region {region:?} is not a square of cells inside the grid"
            )));
        }
        let threshold = params.fill_threshold();
        let m = self.grid.m();
        if let Some(top) = Self::top_index(region.size) {
            for index in (0..=top).rev() {
                let disk = Disk::new(index);
                if let Some(c) = self.qualifying_center(region, &disk, threshold) {
                    return Ok(LengthScale {
                        value: ladder::radius(m, index),
                        index: Some(index),
                        center: Some(c),
                    });
                }
            }
        }
        Ok(LengthScale {
            value: 0.0,
            index: None,
            center: None,
        })
    }
}

/// `LS_E(J)`: the largest ladder radius `r` such that some disk of radius
/// `r` contained in `E` has more than `1 - ((1 - kappa)/2) gamma_bar` of its
/// cells in `J`. Centers are the nodes of `E` at distance at least
/// `ceil(r/h)` cells from its edges.
pub fn characteristic_length_scale(
    set: &CellSet,
    region: CellRegion,
    params: &MixParams,
) -> Result<LengthScale> {
    SetTables::new(set).length_scale(region, params)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TileCertificate {
    pub tile: usize,
    /// Length scale of the `+1` set inside the tile.
    pub plus: f64,
    /// Length scale of the `-1` set inside the tile.
    pub minus: f64,
    /// `max(plus, minus) / lambda^k`.
    pub ratio: f64,
    /// The two sets differ by more than a factor `sqrt 2`.
    pub asymmetric: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnmixednessCertificate {
    pub level: u32,
    pub certified: bool,
    /// Minimum tile ratio: the largest `alpha` this field certifies.
    pub measured_alpha: f64,
    pub tiles: Vec<TileCertificate>,
}

/// Per-tile length scales at level `k` and whether all of them reach
/// `alpha lambda^k`. Each tile is credited with the better of its `+1` and
/// `-1` sets.
pub fn unmixedness_certificate(
    field: &TracerField,
    level: u32,
    params: &MixParams,
) -> Result<UnmixednessCertificate> {
    params.validate()?;
    let grid = field.grid();
    if level > grid.m() {
        return Err(MixError::LevelTooFine { level, m: grid.m() });
    }
    let plus = SetTables::from_sign(field, 1)?;
    let minus = SetTables::from_sign(field, -1)?;
    let tiling = Tiling::new(level);
    let lambda = tiling.lambda();
    let mut tiles = Vec::with_capacity(tiling.tile_count());
    for t in 0..tiling.tile_count() {
        let region = tiling.tile(t).region(grid)?;
        let p = plus.length_scale(region, params)?.value;
        let q = minus.length_scale(region, params)?.value;
        let best = p.max(q);
        tiles.push(TileCertificate {
            tile: t,
            plus: p,
            minus: q,
            ratio: best / lambda,
            asymmetric: best > 0.0 && p.min(q) * std::f64::consts::SQRT_2 < best,
        });
    }
    let measured_alpha = tiles.iter().map(|t| t.ratio).fold(f64::INFINITY, f64::min);
    Ok(UnmixednessCertificate {
        level,
        certified: measured_alpha >= params.alpha,
        measured_alpha,
        tiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Pattern;

    fn g(m: u32) -> GridSpec {
        GridSpec::new(m).unwrap()
    }

    #[test]
    fn full_set_reaches_half_side() {
        let grid = g(5);
        let all = CellSet::new(grid, vec![true; 1024]).unwrap();
        let ls = characteristic_length_scale(&all, CellRegion::whole(grid), &MixParams::default())
            .unwrap();
        assert_eq!(ls.value, 0.5);
        let tile = CellRegion {
            i0: 8,
            j0: 16,
            size: 8,
        };
        let ls = characteristic_length_scale(&all, tile, &MixParams::default()).unwrap();
        assert_eq!(ls.value, 0.125);
    }

    #[test]
    fn empty_set_has_zero_scale() {
        let grid = g(4);
        let none = CellSet::new(grid, vec![false; 256]).unwrap();
        let ls = characteristic_length_scale(&none, CellRegion::whole(grid), &MixParams::default())
            .unwrap();
        assert_eq!(ls.value, 0.0);
        assert_eq!(ls.index, None);
    }

    #[test]
    fn disk_set_scale_is_near_its_radius() {
        let grid = g(7);
        let r = 0.125;
        let set = CellSet::from_fn(grid, |x, y| x * x + y * y < r * r);
        let ls = characteristic_length_scale(&set, CellRegion::whole(grid), &MixParams::default())
            .unwrap();
        assert!(ls.value >= 0.75 * r && ls.value <= r + 2.0 * grid.h(), "{ls:?}");
    }

    #[test]
    fn rejects_regions_outside_grid() {
        let grid = g(3);
        let set = CellSet::new(grid, vec![true; 64]).unwrap();
        let bad = CellRegion {
            i0: 4,
            j0: 0,
            size: 8,
        };
        assert!(characteristic_length_scale(&set, bad, &MixParams::default()).is_err());
    }

    #[test]
    fn halves_certify_a_quarter() {
        let f = TracerField::pattern(g(6), Pattern::LeftRightHalves).unwrap();
        let c = unmixedness_certificate(&f, 0, &MixParams::default()).unwrap();
        // A ball may poke slightly across the interface: one ladder step above 1/4.
        assert!(c.measured_alpha >= 0.25 - 2.0 / 64.0 && c.measured_alpha <= 0.3, "{c:?}");
        assert!(!c.tiles[0].asymmetric);
    }

    #[test]
    fn finest_checkerboard_is_not_certified() {
        let f = TracerField::pattern(g(6), Pattern::Checkerboard(6)).unwrap();
        let p = MixParams::new(0.5, 0.5, 0.1).unwrap();
        let c = unmixedness_certificate(&f, 0, &p).unwrap();
        assert!(!c.certified);
        assert!(c.measured_alpha < 0.05);
        let cont = f.lift();
        assert!(matches!(
            unmixedness_certificate(&cont, 0, &p),
            Err(MixError::NotBinary)
        ));
    }
}
