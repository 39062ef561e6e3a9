//! Mixing scales, length scales, Sobolev norms and flow-map probes.

pub mod geometric;
pub mod hminus1;
pub mod ladder;
pub mod length_scale;
pub mod lusin;
pub mod sobolev;

use serde::{Deserialize, Serialize};

use crate::error::{MixError, Result};

pub use geometric::{geometric_mixing_scale, MixingScale};
pub use hminus1::{functional_mixing_scale, torus_hminus1, DEFAULT_PADDING};
pub use length_scale::{
    characteristic_length_scale, unmixedness_certificate, LengthScale, TileCertificate,
    UnmixednessCertificate,
};
pub use lusin::{lusin_lipschitz_profile, LusinProfile};
pub use sobolev::{sobolev_norm, VelocitySamples};

/// Accuracy, gap and un-mixedness constants shared by the diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixParams {
    pub kappa: f64,
    pub gamma_bar: f64,
    pub alpha: f64,
}

impl Default for MixParams {
    fn default() -> Self {
        Self {
            kappa: 0.5,
            gamma_bar: 0.5,
            alpha: 0.25,
        }
    }
}

impl MixParams {
    pub fn new(kappa: f64, gamma_bar: f64, alpha: f64) -> Result<Self> {
        let p = Self {
            kappa,
            gamma_bar,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa", self.kappa),
            ("gamma_bar", self.gamma_bar),
            ("alpha", self.alpha),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(MixError::InvalidParameter(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `omega = sqrt((1 + gamma_bar) / 2)`.
    pub fn omega(&self) -> f64 {
        ((1.0 + self.gamma_bar) / 2.0).sqrt()
    }

    /// Fill fraction a ball must exceed to witness a length scale:
    /// `1 - ((1 - kappa) / 2) gamma_bar`.
    pub fn fill_threshold(&self) -> f64 {
        1.0 - ((1.0 - self.kappa) / 2.0) * self.gamma_bar
    }
}

/// Row prefix sums and a summed-area table of per-cell values.
pub(crate) struct SumTables {
    n: usize,
    /// `rows[j * (n + 1) + i]` = sum over `i' < i` of cell `(i', j)`.
    rows: Vec<f64>,
    /// `sat[i * (n + 1) + j]` = sum over `i' < i, j' < j`.
    sat: Vec<f64>,
}

impl SumTables {
    pub fn new(n: usize, value: impl Fn(usize, usize) -> f64) -> Self {
        let w = n + 1;
        let mut rows = vec![0.0; n * w];
        let mut sat = vec![0.0; w * w];
        for j in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                acc += value(i, j);
                rows[j * w + i + 1] = acc;
            }
        }
        for i in 0..n {
            let mut col = 0.0;
            for j in 0..n {
                col += value(i, j);
                sat[(i + 1) * w + j + 1] = sat[i * w + j + 1] + col;
            }
        }
        Self { n, rows, sat }
    }

    /// Sum over columns `lo..=hi` of row `j`, clipped to the grid.
    #[inline]
    pub fn span(&self, j: i64, lo: i64, hi: i64) -> f64 {
        let n = self.n as i64;
        if j < 0 || j >= n {
            return 0.0;
        }
        let lo = lo.max(0);
        let hi = hi.min(n - 1);
        if lo > hi {
            return 0.0;
        }
        let base = j as usize * (self.n + 1);
        self.rows[base + hi as usize + 1] - self.rows[base + lo as usize]
    }

    /// Sum and clipped cell count of the box `[i0, i1] x [j0, j1]`.
    #[inline]
    pub fn boxed(&self, i0: i64, i1: i64, j0: i64, j1: i64) -> (f64, i64) {
        let n = self.n as i64;
        let (i0, i1, j0, j1) = (i0.max(0), i1.min(n - 1), j0.max(0), j1.min(n - 1));
        if i0 > i1 || j0 > j1 {
            return (0.0, 0);
        }
        let w = self.n + 1;
        let at = |i: i64, j: i64| self.sat[i as usize * w + j as usize];
        let s = at(i1 + 1, j1 + 1) - at(i0, j1 + 1) - at(i1 + 1, j0) + at(i0, j0);
        (s, (i1 - i0 + 1) * (j1 - j0 + 1))
    }
}

/// Visits `0..len` in bit-reversed order so that early entries spread over
/// the whole range.
pub(crate) fn spread_order(len: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let bits = usize::BITS - (len - 1).leading_zeros();
    let mut out = Vec::with_capacity(len);
    for k in 0..(1usize << bits) {
        let r = if bits == 0 {
            0
        } else {
            k.reverse_bits() >> (usize::BITS - bits)
        };
        if r < len {
            out.push(r);
        }
    }
    out
}
