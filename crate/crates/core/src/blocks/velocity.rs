//! Analytic stream-function velocities on the unit cell and their Sobolev
//! norms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MixError, Result};
use crate::spectral;

/// Midpoint rule resolution used for `p != 2` integer-order norms.
pub const QUADRATURE_POINTS: usize = 256;

/// Sampling resolution of the spectral fractional-order norm.
pub const SPECTRAL_POINTS: usize = 256;

/// An even profile `f(x) = sum_j c_j cos(2 pi j x)` on `[-1/2, 1/2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosineProfile {
    coeffs: Vec<f64>,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl CosineProfile {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// `cos^k(pi x) = sin^k(pi (x + 1/2))` for even `k >= 2`.
    pub fn cos_power(k: u32) -> Result<Self> {
        if k < 2 || k % 2 != 0 {
            return Err(MixError::InvalidParameter(format!(
                "profile power must be an even integer >= 2, got {k}"
            )));
        }
        // cos^k(t) = 2^-k [C(k, k/2) + 2 sum_{j>=1} C(k, k/2 - j) cos(2 j t)]
        let half = k / 2;
        let scale = (-(k as f64)).exp2();
        let mut coeffs = vec![binomial(k, half) * scale];
        for j in 1..=half {
            coeffs.push(2.0 * binomial(k, half - j) * scale);
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `order`-th derivative at `x`.
    pub fn derivative(&self, order: u32, x: f64) -> f64 {
        let mut acc = 0.0;
        for (j, c) in self.coeffs.iter().enumerate() {
            if j == 0 {
                if order == 0 {
                    acc += c;
                }
                continue;
            }
            let w = 2.0 * std::f64::consts::PI * j as f64;
            let arg = w * x;
            let trig = match order % 4 {
                0 => arg.cos(),
                1 => -arg.sin(),
                2 => -arg.cos(),
                _ => arg.sin(),
            };
            acc += c * w.powi(order as i32) * trig;
        }
        acc
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    /// `int_{-1/2}^{1/2} (f^{(k)})^2 dx`.
    fn square_integral(&self, k: u32) -> f64 {
        let mut acc = 0.0;
        for (j, c) in self.coeffs.iter().enumerate() {
            if j == 0 {
                if k == 0 {
                    acc += c * c;
                }
            } else {
                let w = 2.0 * std::f64::consts::PI * j as f64;
                acc += c * c * w.powi(2 * k as i32) / 2.0;
            }
        }
        acc
    }
}

/// Velocity `u = (d psi/dy, -d psi/dx)` of `psi = A f(x) f(y)`, zero outside
/// the unit cell `(-1/2, 1/2)^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamSwirl {
    amplitude: f64,
    power: u32,
    profile: CosineProfile,
}

impl StreamSwirl {
    /// `psi = A cos^power(pi x) cos^power(pi y)`; `amplitude = None` picks the
    /// quarter-turn amplitude.
    pub fn new(amplitude: Option<f64>, power: u32) -> Result<Self> {
        let profile = CosineProfile::cos_power(power)?;
        let amplitude = amplitude.unwrap_or_else(|| Self::quarter_turn_amplitude(power));
        if !amplitude.is_finite() {
            return Err(MixError::InvalidParameter(format!(
                "swirl amplitude must be finite, got {amplitude}"
            )));
        }
        Ok(Self {
            amplitude,
            power,
            profile,
        })
    }

    /// Amplitude whose time-1 map turns the center by a right angle:
    /// the angular speed at the peak is `A k pi^2`.
    pub fn quarter_turn_amplitude(power: u32) -> f64 {
        1.0 / (2.0 * power as f64 * std::f64::consts::PI)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn profile(&self) -> &CosineProfile {
        &self.profile
    }

    fn inside(x: f64, y: f64) -> bool {
        x > -0.5 && x < 0.5 && y > -0.5 && y < 0.5
    }

    pub fn stream(&self, x: f64, y: f64) -> f64 {
        if !Self::inside(x, y) {
            return 0.0;
        }
        self.amplitude * self.profile.value(x) * self.profile.value(y)
    }

    pub fn velocity(&self, x: f64, y: f64) -> [f64; 2] {
        if !Self::inside(x, y) {
            return [0.0, 0.0];
        }
        let f = &self.profile;
        [
            self.amplitude * f.value(x) * f.derivative(1, y),
            -self.amplitude * f.derivative(1, x) * f.value(y),
        ]
    }

    /// `d^a/dx^a d^b/dy^b` of velocity component `c`.
    pub fn velocity_derivative(&self, c: usize, a: u32, b: u32, x: f64, y: f64) -> f64 {
        if !Self::inside(x, y) {
            return 0.0;
        }
        let f = &self.profile;
        if c == 0 {
            self.amplitude * f.derivative(a, x) * f.derivative(b + 1, y)
        } else {
            -self.amplitude * f.derivative(a + 1, x) * f.derivative(b, y)
        }
    }

    /// `div u` from the analytic first derivatives.
    pub fn divergence(&self, x: f64, y: f64) -> f64 {
        self.velocity_derivative(0, 1, 0, x, y) + self.velocity_derivative(1, 0, 1, x, y)
    }

    /// Frobenius magnitude of the `s`-th derivative tensor at a point.
    fn tensor_norm(&self, s: u32, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for c in 0..2 {
            for a in 0..=s {
                let d = self.velocity_derivative(c, a, s - a, x, y);
                acc += binomial(s, a) * d * d;
            }
        }
        acc.sqrt()
    }

    /// `||grad^s u||_{L^p(Q)}`.
    ///
    /// Integer `s` with `p = 2` is evaluated in closed form, other `p` by
    /// midpoint quadrature of the analytic derivatives; fractional `s`
    /// requires `p = 2` and uses the spectral multiplier on the even
    /// reflection.
    pub fn norm(&self, s: f64, p: f64) -> Result<f64> {
        check_exponents(s, p)?;
        if s.fract() != 0.0 {
            return Ok(self.fractional_norm(s));
        }
        let s = s as u32;
        if p == 2.0 {
            let f = &self.profile;
            let mut acc = 0.0;
            for a in 0..=s {
                let b = s - a;
                acc += binomial(s, a)
                    * (f.square_integral(a) * f.square_integral(b + 1)
                        + f.square_integral(a + 1) * f.square_integral(b));
            }
            return Ok(self.amplitude.abs() * acc.sqrt());
        }
        let n = QUADRATURE_POINTS;
        let h = 1.0 / n as f64;
        let center = |k: usize| -0.5 + (k as f64 + 0.5) * h;
        if p.is_infinite() {
            let max = (0..n)
                .into_par_iter()
                .map(|i| {
                    (0..n)
                        .map(|j| self.tensor_norm(s, center(i), center(j)))
                        .fold(0.0f64, f64::max)
                })
                .collect::<Vec<_>>()
                .into_iter()
                .fold(0.0f64, f64::max);
            return Ok(max);
        }
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| self.tensor_norm(s, center(i), center(j)).powf(p))
                    .sum::<f64>()
            })
            .collect();
        Ok((rows.iter().sum::<f64>() * h * h).powf(1.0 / p))
    }

    fn fractional_norm(&self, s: f64) -> f64 {
        let n = SPECTRAL_POINTS;
        let h = 1.0 / n as f64;
        let mut ux = vec![0.0; n * n];
        let mut uy = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let v = self.velocity(-0.5 + (i as f64 + 0.5) * h, -0.5 + (j as f64 + 0.5) * h);
                ux[i * n + j] = v[0];
                uy[i * n + j] = v[1];
            }
        }
        (spectral::reflected_seminorm_sq(&ux, n, s) + spectral::reflected_seminorm_sq(&uy, n, s))
            .sqrt()
    }
}

pub(crate) fn check_exponents(s: f64, p: f64) -> Result<()> {
    let bad = !(s.is_finite() && s >= 1.0) || !(p > 1.0) || p.is_nan();
    if bad || (s.fract() != 0.0 && p != 2.0) {
        return Err(MixError::UnsupportedNorm { s, p });
    }
    Ok(())
}

/// The velocity a block carries on its unit time interval.
#[derive(Clone, Debug, PartialEq)]
pub enum VelocityCarrier {
    /// Identically zero.
    Zero,
    /// A time-independent stream-function swirl.
    Swirl(StreamSwirl),
    /// `depth` equal sub-intervals; during sub-interval `j` the base swirl is
    /// rescaled into every tile of level `j`.
    Cascade { base: StreamSwirl, depth: u32 },
}

impl VelocityCarrier {
    /// Velocity at unit time `t in [0, 1]` and point `(x, y)`.
    pub fn sample(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        match self {
            VelocityCarrier::Zero => [0.0, 0.0],
            VelocityCarrier::Swirl(sw) => sw.velocity(x, y),
            VelocityCarrier::Cascade { base, depth } => {
                let d = *depth;
                let j = ((t * d as f64).floor() as i64).clamp(0, d as i64 - 1) as u32;
                let scale = (-(j as f64)).exp2();
                let Some((cx, cy)) = tile_center(j, x, y) else {
                    return [0.0, 0.0];
                };
                let v = base.velocity((x - cx) / scale, (y - cy) / scale);
                let factor = d as f64 * scale;
                [factor * v[0], factor * v[1]]
            }
        }
    }

    /// `||grad^s u(t)||_{L^p}` at unit time `t`.
    pub fn norm_at(&self, t: f64, s: f64, p: f64) -> Result<f64> {
        check_exponents(s, p)?;
        match self {
            VelocityCarrier::Zero => Ok(0.0),
            VelocityCarrier::Swirl(sw) => sw.norm(s, p),
            VelocityCarrier::Cascade { base, depth } => {
                let d = *depth;
                let j = ((t * d as f64).floor() as i64).clamp(0, d as i64 - 1) as u32;
                Ok(cascade_factor(d, j, s, p) * base.norm(s, p)?)
            }
        }
    }

    /// `sup_t ||grad^s u(t)||_{L^p}`.
    pub fn sup_norm(&self, s: f64, p: f64) -> Result<f64> {
        check_exponents(s, p)?;
        match self {
            VelocityCarrier::Zero => Ok(0.0),
            VelocityCarrier::Swirl(sw) => sw.norm(s, p),
            VelocityCarrier::Cascade { base, depth } => {
                let b = base.norm(s, p)?;
                Ok((0..*depth)
                    .map(|j| cascade_factor(*depth, j, s, p) * b)
                    .fold(0.0, f64::max))
            }
        }
    }

    /// `int_0^1 ||grad^s u(t)||_{L^p} dt`.
    pub fn cost(&self, s: f64, p: f64) -> Result<f64> {
        check_exponents(s, p)?;
        match self {
            VelocityCarrier::Zero => Ok(0.0),
            VelocityCarrier::Swirl(sw) => sw.norm(s, p),
            VelocityCarrier::Cascade { base, depth } => {
                let b = base.norm(s, p)?;
                let d = *depth as f64;
                Ok((0..*depth)
                    .map(|j| cascade_factor(*depth, j, s, p) * b / d)
                    .sum())
            }
        }
    }
}

/// Norm ratio of sub-interval `j` of a cascade to its base swirl: the speed
/// factor is `d 2^-j`, each derivative gains `2^j` and the `4^j` tiles cancel
/// the area factor `4^-j`.
fn cascade_factor(d: u32, j: u32, s: f64, _p: f64) -> f64 {
    d as f64 * (j as f64 * (s - 1.0)).exp2()
}

/// Center of the level-`level` tile containing the point, or `None` on a tile
/// boundary or outside the unit cell.
pub(crate) fn tile_center(level: u32, x: f64, y: f64) -> Option<(f64, f64)> {
    if !(x > -0.5 && x < 0.5 && y > -0.5 && y < 0.5) {
        return None;
    }
    let t = (level as f64).exp2();
    let gx = (x + 0.5) * t;
    let gy = (y + 0.5) * t;
    if gx.fract() == 0.0 || gy.fract() == 0.0 {
        return None;
    }
    let side = 1.0 / t;
    Some((
        -0.5 + (gx.floor() + 0.5) * side,
        -0.5 + (gy.floor() + 0.5) * side,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cos_power_coefficients_match_profile() {
        let p2 = CosineProfile::cos_power(2).unwrap();
        assert_eq!(p2.coeffs(), &[0.5, 0.5]);
        let p4 = CosineProfile::cos_power(4).unwrap();
        assert_eq!(p4.coeffs(), &[0.375, 0.5, 0.125]);
        for k in [2u32, 4, 6] {
            let p = CosineProfile::cos_power(k).unwrap();
            for x in [-0.4, -0.1, 0.0, 0.23, 0.49] {
                let direct = (PI * (x + 0.5)).sin().powi(k as i32);
                assert!((p.value(x) - direct).abs() < 1e-14);
            }
        }
        assert!(CosineProfile::cos_power(3).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = CosineProfile::cos_power(4).unwrap();
        let h = 1e-5;
        for x in [-0.3, 0.05, 0.41] {
            for k in 0..3 {
                let fd = (p.derivative(k, x + h) - p.derivative(k, x - h)) / (2.0 * h);
                let an = p.derivative(k + 1, x);
                assert!((fd - an).abs() < 1e-5 * (1.0 + an.abs()), "k={k} x={x}");
            }
        }
    }

    #[test]
    fn swirl_center_is_stagnation_point() {
        let sw = StreamSwirl::new(None, 2).unwrap();
        let v = sw.velocity(0.0, 0.0);
        assert_eq!(v, [0.0, 0.0]);
        assert_eq!(sw.velocity(0.7, 0.0), [0.0, 0.0]);
    }

    #[test]
    fn closed_form_gradient_norm_for_unit_amplitude() {
        // ||grad u||^2 = 2 (I1^2 + I0 I2) with I0 = 3/8, I1 = pi^2/2, I2 = 2 pi^4.
        let sw = StreamSwirl::new(Some(1.0), 2).unwrap();
        let n = sw.norm(1.0, 2.0).unwrap();
        assert!((n - 2f64.sqrt() * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn quadrature_matches_closed_form_at_p2() {
        let sw = StreamSwirl::new(Some(1.0), 4).unwrap();
        let closed = sw.norm(2.0, 2.0).unwrap();
        let quad = (0..QUADRATURE_POINTS)
            .map(|i| {
                let h = 1.0 / QUADRATURE_POINTS as f64;
                (0..QUADRATURE_POINTS)
                    .map(|j| {
                        let x = -0.5 + (i as f64 + 0.5) * h;
                        let y = -0.5 + (j as f64 + 0.5) * h;
                        sw.tensor_norm(2, x, y).powi(2) * h * h
                    })
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt();
        assert!((closed - quad).abs() / closed < 1e-10);
        // p close to 2 through the general quadrature path
        let near = sw.norm(2.0, 2.000001).unwrap();
        assert!((near - closed).abs() / closed < 1e-5);
    }

    #[test]
    fn fractional_norm_interpolates_integer_orders() {
        let sw = StreamSwirl::new(Some(1.0), 4).unwrap();
        let n1 = sw.norm(1.0, 2.0).unwrap();
        let n2 = sw.norm(2.0, 2.0).unwrap();
        let n15 = sw.norm(1.5, 2.0).unwrap();
        assert!(n15 > n1 && n15 < n2);
        // Interpolation inequality |u|_{1.5} <= |u|_1^{1/2} |u|_2^{1/2}.
        assert!(n15 <= (n1 * n2).sqrt() * 1.001);
        assert!(matches!(
            sw.norm(1.5, 3.0),
            Err(MixError::UnsupportedNorm { .. })
        ));
    }

    #[test]
    fn cascade_costs_add_levels() {
        let base = StreamSwirl::new(None, 4).unwrap();
        let b1 = base.norm(1.0, 2.0).unwrap();
        let b2 = base.norm(2.0, 2.0).unwrap();
        let c = VelocityCarrier::Cascade { base, depth: 3 };
        assert!((c.cost(1.0, 2.0).unwrap() - 3.0 * b1).abs() < 1e-12 * b1);
        assert!((c.cost(2.0, 2.0).unwrap() - 7.0 * b2).abs() < 1e-12 * b2);
        assert!((c.sup_norm(2.0, 2.0).unwrap() - 12.0 * b2).abs() < 1e-12 * b2);
        assert!((c.norm_at(0.5, 2.0, 2.0).unwrap() - 6.0 * b2).abs() < 1e-12 * b2);
    }

    #[test]
    fn cascade_sample_rescales_into_tiles() {
        let base = StreamSwirl::new(None, 2).unwrap();
        let c = VelocityCarrier::Cascade {
            base: base.clone(),
            depth: 2,
        };
        let v = c.sample(0.75, 0.3, 0.1);
        let w = base.velocity((0.3 - 0.25) * 2.0, (0.1 - 0.25) * 2.0);
        assert_eq!(v, [w[0], w[1]]);
        assert_eq!(c.sample(0.75, 0.0, 0.1), [0.0, 0.0]);
        let v0 = c.sample(0.2, 0.3, 0.1);
        let w0 = base.velocity(0.3, 0.1);
        assert_eq!(v0, [2.0 * w0[0], 2.0 * w0[1]]);
    }
}
