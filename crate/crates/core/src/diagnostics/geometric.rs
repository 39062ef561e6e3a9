//! Geometric mixing scale on the radius ladder.

use rayon::prelude::*;
use serde::Serialize;

use super::ladder::{self, Disk};
use super::{spread_order, MixParams, SumTables};
use crate::error::{MixError, Result};
use crate::grid::{FieldMode, TracerField};

/// A ladder measurement with its bracketing interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingScale {
    /// Smallest ladder radius at which every disk average is below
    /// `kappa ||rho||_inf` in magnitude.
    pub value: f64,
    /// The next ladder radius below `value` (0 at the bottom of the ladder).
    pub lower: f64,
    pub upper: f64,
    pub index: u32,
    /// Node `(a, b)` of the first violating disk at the ladder step below
    /// the result.
    pub binding_center: Option<(i64, i64)>,
    /// True if even the top of the ladder fails; `value` is then the top.
    pub saturated: bool,
}

impl MixingScale {
    /// Physical position of the binding center.
    pub fn binding_point(&self, m: u32) -> Option<(f64, f64)> {
        let h = (-(m as f64)).exp2();
        self.binding_center
            .map(|(a, b)| (-0.5 + a as f64 * h, -0.5 + b as f64 * h))
    }
}

/// Checks every center for one ladder radius. Returns the first violating
/// node in scan order, or `None` if the radius is valid.
fn first_violation(
    tables: &SumTables,
    n: usize,
    disk: &Disk,
    limit: f64,
    margin: f64,
    sup: f64,
) -> Option<(i64, i64)> {
    let reach = disk.reach;
    let k = disk.half_width();
    let side = n as i64 + 2 * reach + 1;
    let sq_area = (2 * k + 2) * (2 * k + 2);
    let order = spread_order(side as usize);
    order.par_iter().find_map_first(|&row| {
        let b = row as i64 - reach;
        for a in -reach..=n as i64 + reach {
            let (s_sq, in_q) = tables.boxed(a - k - 1, a + k, b - k - 1, b + k);
            let slack = in_q.min(sq_area - disk.count) as f64 * sup;
            if s_sq.abs() + slack < limit - margin {
                continue;
            }
            let mut s = 0.0;
            for &(dj, kr) in &disk.rows {
                s += tables.span(b + dj, a - kr - 1, a + kr);
            }
            if s.abs() >= limit {
                return Some((a, b));
            }
        }
        None
    })
}

/// Smallest ladder radius `eps` such that for every node center the disk
/// average (cells outside `Q` count as zero) is below `kappa ||rho||_inf`.
pub fn geometric_mixing_scale(field: &TracerField, params: &MixParams) -> Result<MixingScale> {
    params.validate()?;
    field.require_mean_zero()?;
    let sup = field.max_abs();
    if sup == 0.0 {
        return Err(MixError::Degenerate("field is identically zero".into()));
    }
    let grid = field.grid();
    let n = grid.side();
    let tables = SumTables::new(n, |i, j| field.get(i, j));
    let exact = field.mode() == FieldMode::Binary;
    let m = grid.m();
    let top = ladder::top_index(m);
    let mut binding = None;
    for index in 0..=top {
        let disk = Disk::new(index);
        let limit = params.kappa * disk.count as f64 * sup;
        let margin = if exact { 0.0 } else { 1e-9 * limit };
        match first_violation(&tables, n, &disk, limit, margin, sup) {
            Some(c) => binding = Some(c),
            None => {
                return Ok(MixingScale {
                    value: ladder::radius(m, index),
                    lower: if index == 0 {
                        0.0
                    } else {
                        ladder::radius(m, index - 1)
                    },
                    upper: ladder::radius(m, index),
                    index,
                    binding_center: binding,
                    saturated: false,
                })
            }
        }
    }
    Ok(MixingScale {
        value: ladder::radius(m, top),
        lower: ladder::radius(m, top),
        upper: f64::INFINITY,
        index: top,
        binding_center: binding,
        saturated: true,
    })
}
