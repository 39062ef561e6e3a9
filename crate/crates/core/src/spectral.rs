//! Weighted power sums of 2-D discrete Fourier transforms on a square torus.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Signed frequency of DFT index `q` on `m` points.
#[inline]
pub fn signed_frequency(q: usize, m: usize) -> i64 {
    if q <= m / 2 {
        q as i64
    } else {
        q as i64 - m as i64
    }
}

/// `sum_{kx, ky} weight(kx, ky) |F(kx, ky)|^2` where `F` is the unnormalized
/// `m x m` DFT of a grid whose first `rows.len()` rows are given (each of
/// length `m`) and whose remaining rows are zero. Frequencies are signed.
///
/// Rows are transformed first; each column transform is then reduced
/// immediately, so memory stays at `rows.len() * m`. The reduction is
/// performed in a fixed order and is reproducible across thread counts.
pub fn weighted_power_sum(
    rows: &[Vec<f64>],
    m: usize,
    weight: impl Fn(i64, i64) -> f64 + Sync,
) -> f64 {
    assert!(rows.len() <= m);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);

    let row_spectra: Vec<Vec<Complex64>> = rows
        .par_iter()
        .map(|r| {
            assert_eq!(r.len(), m);
            let mut buf: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft.process(&mut buf);
            buf
        })
        .collect();

    let partial: Vec<f64> = (0..m)
        .into_par_iter()
        .map_init(
            || vec![Complex64::new(0.0, 0.0); m],
            |col, q| {
                for c in col.iter_mut() {
                    *c = Complex64::new(0.0, 0.0);
                }
                for (i, spec) in row_spectra.iter().enumerate() {
                    col[i] = spec[q];
                }
                fft.process(col);
                let ky = signed_frequency(q, m);
                col.iter()
                    .enumerate()
                    .map(|(p, c)| weight(signed_frequency(p, m), ky) * c.norm_sqr())
                    .sum::<f64>()
            },
        )
        .collect();
    partial.iter().sum()
}

/// `sum_k |xi_k|^{2s} |c_k|^2` for the even reflection of an `n x n` grid of
/// cell-center samples on `Q` onto the torus of side 2, with `c_k` the
/// normalized Fourier coefficients and `xi_k = pi k`. For smooth data this
/// approximates the squared homogeneous `H^s(Q)` seminorm.
pub fn reflected_seminorm_sq(values: &[f64], n: usize, s: f64) -> f64 {
    assert_eq!(values.len(), n * n);
    let m = 2 * n;
    let fold = |k: usize| if k < n { k } else { m - 1 - k };
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|a| (0..m).map(|b| values[fold(a) * n + fold(b)]).collect())
        .collect();
    let pi = std::f64::consts::PI;
    let raw = weighted_power_sum(&rows, m, |kx, ky| {
        let xi2 = pi * pi * (kx * kx + ky * ky) as f64;
        if xi2 == 0.0 {
            0.0
        } else {
            xi2.powf(s)
        }
    });
    let norm = (m * m) as f64;
    raw / (norm * norm)
}
