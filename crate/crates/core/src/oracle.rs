//! Brute-force reference implementations of the ball-scan diagnostics.
//!
//! These evaluate the disk predicate cell by cell with no span or table
//! decomposition. They are slow and exist to cross-check the fast paths.

use crate::diagnostics::ladder;
use crate::diagnostics::MixParams;
use crate::error::{MixError, Result};
use crate::grid::{CellRegion, CellSet, TracerField};

/// Number of lattice cells inside the disk (cells outside `Q` included).
fn disk_count(t: f64, reach: i64) -> i64 {
    let mut count = 0;
    for di in -reach..reach {
        for dj in -reach..reach {
            if ladder::contains(t, di, dj) {
                count += 1;
            }
        }
    }
    count
}

/// Sum of the field over the cells of `Q` inside the disk at node `(a, b)`.
fn disk_sum(field: &TracerField, t: f64, reach: i64, a: i64, b: i64) -> f64 {
    let n = field.grid().side() as i64;
    let mut s = 0.0;
    for i in (a - reach).max(0)..(a + reach).min(n) {
        for j in (b - reach).max(0)..(b + reach).min(n) {
            if ladder::contains(t, i - a, j - b) {
                s += field.get(i as usize, j as usize);
            }
        }
    }
    s
}

/// Reference value of the geometric mixing scale: the first ladder radius
/// for which no node center violates the accuracy condition.
pub fn geometric_mixing_scale(field: &TracerField, params: &MixParams) -> Result<f64> {
    params.validate()?;
    field.require_mean_zero()?;
    let sup = field.max_abs();
    if sup == 0.0 {
        return Err(MixError::Degenerate("field is identically zero".into()));
    }
    let m = field.grid().m();
    let n = field.grid().side() as i64;
    let top = ladder::top_index(m);
    'radius: for index in 0..=top {
        let t = ladder::threshold(index);
        let reach = ladder::radius_cells(index).ceil() as i64;
        let count = disk_count(t, reach);
        for a in -reach..=n + reach {
            for b in -reach..=n + reach {
                let s = disk_sum(field, t, reach, a, b);
                if s.abs() >= params.kappa * count as f64 * sup {
                    continue 'radius;
                }
            }
        }
        return Ok(ladder::radius(m, index));
    }
    Ok(ladder::radius(m, top))
}

/// Reference value of the characteristic length scale: every ladder radius
/// up to half the region side is tried and the largest qualifying one kept.
pub fn characteristic_length_scale(
    set: &CellSet,
    region: CellRegion,
    params: &MixParams,
) -> Result<f64> {
    params.validate()?;
    let m = set.grid().m();
    let thr = params.fill_threshold();
    let mut best = 0.0;
    let mut index = 0u32;
    while ladder::radius_cells(index) <= region.size as f64 / 2.0 {
        let t = ladder::threshold(index);
        let reach = ladder::radius_cells(index).ceil() as i64;
        let (lo_i, hi_i) = (region.i0 as i64 + reach, (region.i0 + region.size) as i64 - reach);
        let (lo_j, hi_j) = (region.j0 as i64 + reach, (region.j0 + region.size) as i64 - reach);
        let mut found = false;
        'centers: for a in lo_i..=hi_i {
            for b in lo_j..=hi_j {
                let mut inside = 0i64;
                let mut count = 0i64;
                for di in -reach..reach {
                    for dj in -reach..reach {
                        if ladder::contains(t, di, dj) {
                            count += 1;
                            if set.contains((a + di) as usize, (b + dj) as usize) {
                                inside += 1;
                            }
                        }
                    }
                }
                if inside as f64 > thr * count as f64 {
                    found = true;
                    break 'centers;
                }
            }
        }
        if found {
            best = ladder::radius(m, index);
        }
        index += 1;
    }
    Ok(best)
}
