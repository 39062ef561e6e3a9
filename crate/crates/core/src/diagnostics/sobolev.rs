//! Sobolev norms of sampled velocity fields.

use rayon::prelude::*;

use crate::blocks::velocity::check_exponents;
use crate::error::{MixError, Result};
use crate::spectral;

/// A velocity sampled at the cell centers of an `n x n` grid over `Q`
/// (column-major, `index = i * n + j`).
#[derive(Clone, Debug, PartialEq)]
pub struct VelocitySamples {
    pub n: usize,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
}

impl VelocitySamples {
    pub fn from_fn(n: usize, u: impl Fn(f64, f64) -> [f64; 2] + Sync) -> Self {
        let h = 1.0 / n as f64;
        let vals: Vec<[f64; 2]> = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                u(-0.5 + (i as f64 + 0.5) * h, -0.5 + (j as f64 + 0.5) * h)
            })
            .collect();
        Self {
            n,
            ux: vals.iter().map(|v| v[0]).collect(),
            uy: vals.iter().map(|v| v[1]).collect(),
        }
    }
}

/// Fourth-order first derivative with one-sided stencils at the ends.
fn d1(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let c = 1.0 / (12.0 * h);
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * c;
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * c;
    for i in 2..n - 2 {
        out[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * c;
    }
    let e = n - 1;
    out[e - 1] = (3.0 * f[e] + 10.0 * f[e - 1] - 18.0 * f[e - 2] + 6.0 * f[e - 3] - f[e - 4]) * c;
    out[e] = (25.0 * f[e] - 48.0 * f[e - 1] + 36.0 * f[e - 2] - 16.0 * f[e - 3] + 3.0 * f[e - 4]) * c;
}

/// Fourth-order second derivative with one-sided stencils at the ends.
fn d2(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let c = 1.0 / (12.0 * h * h);
    let left = |g: &dyn Fn(usize) -> f64| {
        (
            (45.0 * g(0) - 154.0 * g(1) + 214.0 * g(2) - 156.0 * g(3) + 61.0 * g(4) - 10.0 * g(5)) * c,
            (10.0 * g(0) - 15.0 * g(1) - 4.0 * g(2) + 14.0 * g(3) - 6.0 * g(4) + g(5)) * c,
        )
    };
    let (a, b) = left(&|k| f[k]);
    out[0] = a;
    out[1] = b;
    for i in 2..n - 2 {
        out[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) * c;
    }
    let (a, b) = left(&|k| f[n - 1 - k]);
    out[n - 1] = a;
    out[n - 2] = b;
}

/// Applies the order-`k` derivative (composed from `d2` and `d1`) along one
/// axis of an `n x n` array.
fn derivative(values: &[f64], n: usize, h: f64, k: u32, along_x: bool) -> Vec<f64> {
    let mut cur = values.to_vec();
    let mut steps = Vec::new();
    for _ in 0..k / 2 {
        steps.push(2);
    }
    if k % 2 == 1 {
        steps.push(1);
    }
    for order in steps {
        let mut next = vec![0.0; n * n];
        let lines: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|l| {
                let line: Vec<f64> = (0..n)
                    .map(|t| if along_x { cur[t * n + l] } else { cur[l * n + t] })
                    .collect();
                let mut out = vec![0.0; n];
                if order == 2 {
                    d2(&line, h, &mut out);
                } else {
                    d1(&line, h, &mut out);
                }
                out
            })
            .collect();
        for (l, line) in lines.iter().enumerate() {
            for (t, v) in line.iter().enumerate() {
                if along_x {
                    next[t * n + l] = *v;
                } else {
                    next[l * n + t] = *v;
                }
            }
        }
        cur = next;
    }
    cur
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `||grad^s u||_{L^p(Q)}` of a sampled velocity.
///
/// Integer `s`: fourth-order finite differences (one-sided near the edges)
/// and the Frobenius norm of the `s`-th derivative tensor, integrated with
/// the midpoint rule. Fractional `s` (only `p = 2`): Fourier multiplier
/// `|xi|^s` on the even reflection to the torus of side 2.
pub fn sobolev_norm(samples: &VelocitySamples, s: f64, p: f64) -> Result<f64> {
    check_exponents(s, p)?;
    let n = samples.n;
    if samples.ux.len() != n * n || samples.uy.len() != n * n {
        return Err(MixError::InvalidParameter("sample arrays do not match n".into()));
    }
    if s.fract() != 0.0 {
        return Ok((spectral::reflected_seminorm_sq(&samples.ux, n, s)
            + spectral::reflected_seminorm_sq(&samples.uy, n, s))
        .sqrt());
    }
    if n < 6 {
        return Err(MixError::InvalidParameter(format!(
            "need at least 6 samples per side, got {n}"
        )));
    }
    let s = s as u32;
    let h = 1.0 / n as f64;
    let mut sq = vec![0.0; n * n];
    for comp in [&samples.ux, &samples.uy] {
        for a in 0..=s {
            let dx = derivative(comp, n, h, a, true);
            let d = derivative(&dx, n, h, s - a, false);
            let w = binomial(s, a);
            for (acc, v) in sq.iter_mut().zip(&d) {
                *acc += w * v * v;
            }
        }
    }
    if p.is_infinite() {
        return Ok(sq.iter().fold(0.0f64, |m, v| m.max(v.sqrt())));
    }
    let sum: f64 = sq.iter().map(|v| v.sqrt().powf(p)).sum();
    Ok((sum * h * h).powf(1.0 / p))
}
