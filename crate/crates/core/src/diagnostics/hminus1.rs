//! Homogeneous `H^-1` norm through a spectral Poisson solve on a padded
//! torus.

use crate::error::{MixError, Result};
use crate::grid::TracerField;
use crate::spectral::weighted_power_sum;

/// Side of the periodic box, in units of the side of `Q`.
pub const DEFAULT_PADDING: usize = 2;

/// `||rho||_{H^-1}` of a periodic function on the torus of side `side`,
/// given by its first `rows.len()` rows of an `m x m` point grid (remaining
/// rows zero). The zero mode is dropped.
pub fn torus_hminus1(rows: &[Vec<f64>], m: usize, side: f64) -> f64 {
    let two_pi_over_l = 2.0 * std::f64::consts::PI / side;
    let raw = weighted_power_sum(rows, m, |kx, ky| {
        let k2 = (kx * kx + ky * ky) as f64;
        if k2 == 0.0 {
            0.0
        } else {
            1.0 / (two_pi_over_l * two_pi_over_l * k2)
        }
    });
    let norm = (m * m) as f64;
    (side * side * raw / (norm * norm)).sqrt()
}

/// `||rho||_{H^-1(R^2)}` approximated on the torus of side `padding` with
/// the field zero-extended outside `Q`. Solves `Delta phi = rho` with the
/// Fourier multiplier `-1/|xi|^2` and returns `||grad phi||_{L^2}`.
pub fn functional_mixing_scale(field: &TracerField, padding: usize) -> Result<f64> {
    if padding == 0 {
        return Err(MixError::InvalidParameter("padding must be at least 1".into()));
    }
    let mean = field.mean();
    if mean.abs() > crate::grid::CONTINUOUS_TOL {
        return Err(MixError::NotMeanZero(mean));
    }
    let grid = field.grid();
    let n = grid.side();
    let m = padding * n;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = vec![0.0; m];
            for (j, slot) in r.iter_mut().enumerate().take(n) {
                *slot = field.get(i, j);
            }
            r
        })
        .collect();
    Ok(torus_hminus1(&rows, m, padding as f64))
}
