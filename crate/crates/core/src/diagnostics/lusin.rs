//! Restricted Lipschitz profile of a discrete flow map.

use serde::Serialize;

use crate::error::{MixError, Result};
use crate::grid::GridSpec;

/// Excluded fractions probed by [`lusin_lipschitz_profile`].
pub const EXCLUDED_FRACTIONS: [f64; 5] = [0.01, 0.02, 0.05, 0.10, 0.20];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LusinProfile {
    pub epsilons: Vec<f64>,
    /// Largest sampled difference quotient of the inverse map on the kept
    /// cells, per excluded fraction.
    pub lipschitz: Vec<f64>,
    pub cost: f64,
    pub p: f64,
    /// Least-squares `c` in `log L = c cost / eps^(1/p)`.
    pub fitted_c: f64,
    /// `exp(fitted_c cost / eps^(1/p))` per excluded fraction.
    pub bound: Vec<f64>,
}

/// Probes how far the inverse of a cell map `X` (given as `dest[source]`)
/// is from Lipschitz once a small set of cells is discarded.
///
/// Pairs of cells at axis offsets `2^j` (`j = 0..m-1`) are sampled. Every
/// cell is scored by its largest difference quotient
/// `|X^-1(x) - X^-1(y)| / |x - y|`; for each excluded fraction `eps` the
/// highest-scoring `eps` share of cells is removed (ties by index) and the
/// largest quotient among remaining pairs is reported.
pub fn lusin_lipschitz_profile(
    grid: GridSpec,
    dest: &[u32],
    cost: f64,
    p: f64,
) -> Result<LusinProfile> {
    let n = grid.side();
    let cells = grid.cell_count();
    if dest.len() != cells {
        return Err(MixError::InvalidParameter(format!(
            "flow map has {} entries for {cells} cells",
            dest.len()
        )));
    }
    if !(p > 1.0) || !(cost >= 0.0) {
        return Err(MixError::InvalidParameter(format!(
            "need p > 1 and cost >= 0, got p={p}, cost={cost}"
        )));
    }
    let mut inv = vec![u32::MAX; cells];
    for (src, &d) in dest.iter().enumerate() {
        let d = d as usize;
        if d >= cells || inv[d] != u32::MAX {
            return Err(MixError::InvalidParameter(
                "flow map is not a bijection of cells".into(),
            ));
        }
        inv[d] = src as u32;
    }
    let pos = |c: u32| {
        let c = c as usize;
        ((c / n) as f64, (c % n) as f64)
    };
    let mut pairs: Vec<(u32, u32, f64)> = Vec::new();
    for j in 0..grid.m() {
        let off = 1usize << j;
        for i in 0..n {
            for k in 0..n {
                let x = (i * n + k) as u32;
                let (ax, ay) = pos(inv[x as usize]);
                for (ni, nk) in [(i + off, k), (i, k + off)] {
                    if ni >= n || nk >= n {
                        continue;
                    }
                    let y = (ni * n + nk) as u32;
                    let (bx, by) = pos(inv[y as usize]);
                    let q = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt() / off as f64;
                    pairs.push((x, y, q));
                }
            }
        }
    }
    let mut stretch = vec![0.0f64; cells];
    for &(x, y, q) in &pairs {
        stretch[x as usize] = stretch[x as usize].max(q);
        stretch[y as usize] = stretch[y as usize].max(q);
    }
    let mut order: Vec<usize> = (0..cells).collect();
    order.sort_by(|&a, &b| stretch[b].total_cmp(&stretch[a]).then(a.cmp(&b)));

    let mut removed = vec![false; cells];
    let mut done = 0usize;
    let mut lipschitz = Vec::new();
    for &eps in &EXCLUDED_FRACTIONS {
        let target = (eps * cells as f64).round() as usize;
        while done < target {
            removed[order[done]] = true;
            done += 1;
        }
        let l = pairs
            .iter()
            .filter(|(x, y, _)| !removed[*x as usize] && !removed[*y as usize])
            .map(|t| t.2)
            .fold(0.0f64, f64::max);
        lipschitz.push(l);
    }
    let xs: Vec<f64> = EXCLUDED_FRACTIONS
        .iter()
        .map(|e| cost / e.powf(1.0 / p))
        .collect();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&lipschitz)
        .map(|(x, l)| x * l.max(f64::MIN_POSITIVE).ln())
        .sum();
    let fitted_c = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Ok(LusinProfile {
        epsilons: EXCLUDED_FRACTIONS.to_vec(),
        bound: xs.iter().map(|x| (fitted_c * x).exp()).collect(),
        lipschitz,
        cost,
        p,
        fitted_c,
    })
}
