//! Gamma densities for recovery and death kernels.
//!
//! Special functions are computed in place: log-Γ by a Lanczos
//! approximation, the regularized incomplete gamma by its power series below
//! `x = a + 1` and a Lentz continued fraction above it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const INCGAMMA_EPS: f64 = 1e-15;
const INCGAMMA_MAX_ITER: usize = 10_000;

/// Tail mass used wherever "effectively infinity" is needed.
pub const DEFAULT_TAIL_MASS: f64 = 1e-12;

/// Truncation times are multiples of `scale / TRUNCATION_GRID_PER_SCALE`.
const TRUNCATION_GRID_PER_SCALE: f64 = 1000.0;

/// Natural log of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete gamma pair (P(a, x), Q(a, x)).
pub fn incomplete_gamma(a: f64, x: f64) -> (f64, f64) {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..INCGAMMA_MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * INCGAMMA_EPS {
                break;
            }
        }
        let p = (sum.ln() + log_prefactor).exp().min(1.0);
        (p, 1.0 - p)
    } else {
        // modified Lentz
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=INCGAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < INCGAMMA_EPS {
                break;
            }
        }
        let q = (h.ln() + log_prefactor).exp().min(1.0);
        (1.0 - q, q)
    }
}

/// Shape/scale pair of a gamma density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSummary {
    pub mean: f64,
    pub median: f64,
    pub mode: f64,
    pub variance: f64,
}

impl GammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma parameters must be positive, got shape={shape} scale={scale}"
            )));
        }
        Ok(Self { shape, scale })
    }

    /// Recovery and death kernels must rise to an interior peak.
    pub fn is_peaked(&self) -> bool {
        self.shape > 1.0
    }

    fn check_t(t: f64) -> Result<()> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::invalid(format!("time {t} must be non-negative")));
        }
        Ok(())
    }

    /// Log of the normalizing constant, `-(ln Γ(a) + a ln b)`.
    pub(crate) fn log_norm(&self) -> f64 {
        -(ln_gamma(self.shape) + self.shape * self.scale.ln())
    }

    pub fn pdf(&self, t: f64) -> Result<f64> {
        Self::check_t(t)?;
        Ok(self.density(t))
    }

    /// Density without the domain check; callers guarantee `t >= 0`.
    pub(crate) fn density(&self, t: f64) -> f64 {
        if t == 0.0 {
            return match self.shape.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Greater) => 0.0,
                Some(std::cmp::Ordering::Equal) => 1.0 / self.scale,
                _ => f64::INFINITY,
            };
        }
        ((self.shape - 1.0) * t.ln() - t / self.scale + self.log_norm()).exp()
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        Self::check_t(t)?;
        Ok(incomplete_gamma(self.shape, t / self.scale).0)
    }

    /// Upper tail `1 - cdf(t)` without cancellation.
    pub fn sf(&self, t: f64) -> Result<f64> {
        Self::check_t(t)?;
        Ok(incomplete_gamma(self.shape, t / self.scale).1)
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    pub fn mode(&self) -> Result<f64> {
        if self.shape <= 1.0 {
            return Err(Error::invalid(format!(
                "mode undefined for shape {} <= 1",
                self.shape
            )));
        }
        Ok((self.shape - 1.0) * self.scale)
    }

    /// Unique t with cdf(t) = 1/2, by bisection to 1e-8 in t.
    pub fn median(&self) -> f64 {
        let mut lo = 0.0;
        let mut hi = self
            .truncation_time(DEFAULT_TAIL_MASS)
            .expect("valid tail mass");
        while hi - lo > 1e-8 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if incomplete_gamma(self.shape, mid / self.scale).0 < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Smallest multiple of `scale / 1000` whose upper tail is at most `tail_mass`.
    pub fn truncation_time(&self, tail_mass: f64) -> Result<f64> {
        if !(tail_mass > 0.0 && tail_mass < 1.0) {
            return Err(Error::invalid(format!(
                "tail mass {tail_mass} must lie in (0, 1)"
            )));
        }
        let step = self.scale / TRUNCATION_GRID_PER_SCALE;
        let tail = |k: u64| incomplete_gamma(self.shape, k as f64 * step / self.scale).1;

        let mut hi = ((self.mean() / step).ceil() as u64).max(1);
        while tail(hi) > tail_mass {
            hi *= 2;
        }
        let mut lo = 0u64; // tail(0) = 1 > tail_mass
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if tail(mid) > tail_mass {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi as f64 * step)
    }

    pub fn summary(&self) -> Result<GammaSummary> {
        Ok(GammaSummary {
            mean: self.mean(),
            median: self.median(),
            mode: self.mode()?,
            variance: self.variance(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn g(a: f64, b: f64) -> GammaParams {
        GammaParams::new(a, b).unwrap()
    }

    #[test]
    fn ln_gamma_known_values() {
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ln_gamma(2.0), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            ln_gamma(0.5),
            std::f64::consts::PI.sqrt().ln(),
            epsilon = 1e-14
        );
        // ln(10!) = ln Γ(11)
        assert_relative_eq!(ln_gamma(11.0), 3_628_800f64.ln(), max_relative = 1e-14);
        // Γ(38.16) overflows nothing in log space
        assert!(ln_gamma(38.16).is_finite());
    }

    #[test]
    fn pdf_closed_forms() {
        assert_abs_diff_eq!(
            g(2.0, 1.0).pdf(1.0).unwrap(),
            (-1f64).exp(),
            epsilon = 1e-14
        );
        assert_eq!(g(4.7, 4.5).pdf(0.0).unwrap(), 0.0);
        assert_eq!(g(1.0, 2.0).pdf(0.0).unwrap(), 0.5);
        assert!(g(0.5, 1.0).pdf(0.0).unwrap().is_infinite());
        assert!(g(2.0, 1.0).pdf(-1.0).is_err());
        assert!(g(38.16, 0.0485).pdf(1.8).unwrap().is_finite());
    }

    #[test]
    fn cdf_closed_forms() {
        assert_abs_diff_eq!(
            g(1.0, 2.0).cdf(2.0).unwrap(),
            0.632_120_558_8,
            epsilon = 1e-10
        );
        assert_eq!(g(3.3, 1.7).cdf(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            g(2.0, 1.0).cdf(2.0).unwrap(),
            1.0 - 3.0 * (-2f64).exp(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(g(4.7, 4.5).cdf(19.64).unwrap(), 0.5, epsilon = 0.002);
        assert!(g(1.0, 1.0).cdf(-0.1).is_err());
        // both branches agree at the switch point
        let p = g(5.0, 1.0);
        let below = p.cdf(5.999_999_999).unwrap();
        let above = p.cdf(6.000_000_001).unwrap();
        assert_abs_diff_eq!(below, above, epsilon = 1e-9);
    }

    #[test]
    fn moments_and_mode() {
        let p = g(4.7, 4.5);
        assert_abs_diff_eq!(p.mean(), 21.15, epsilon = 1e-12);
        assert_abs_diff_eq!(p.mode().unwrap(), 16.65, epsilon = 1e-12);
        let measles = g(38.16, 0.0485);
        assert_abs_diff_eq!(measles.mean(), 1.851, epsilon = 0.0005);
        assert_abs_diff_eq!(measles.mode().unwrap(), 1.8023, epsilon = 0.0005);
        assert_abs_diff_eq!(measles.variance(), 0.0898, epsilon = 0.0005);
        let typhoid = g(30.0, 0.036);
        assert_abs_diff_eq!(typhoid.mean(), 1.08, epsilon = 0.0005);
        assert_abs_diff_eq!(typhoid.mode().unwrap(), 1.044, epsilon = 0.0005);
        assert_abs_diff_eq!(typhoid.variance(), 0.0389, epsilon = 0.0005);
        assert!(g(1.0, 3.0).mode().is_err());
    }

    #[test]
    fn medians() {
        // published medians are rounded summaries, so only agree to about 0.1
        assert_abs_diff_eq!(g(4.7, 4.5).median(), 19.64, epsilon = 0.1);
        assert_abs_diff_eq!(g(2.55, 12.2).median(), 27.23, epsilon = 0.1);
        assert_abs_diff_eq!(g(1.0, 3.0).median(), 3.0 * 2f64.ln(), epsilon = 1e-8);
        let p = g(4.7, 4.5);
        assert_abs_diff_eq!(p.cdf(p.median()).unwrap(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn truncation() {
        let exp1 = g(1.0, 1.0);
        // the boundary sits exactly on a grid point, so allow one step of rounding
        assert_abs_diff_eq!(
            exp1.truncation_time((-5f64).exp()).unwrap(),
            5.0,
            epsilon = 1.5e-3
        );
        assert_abs_diff_eq!(
            exp1.truncation_time(0.5).unwrap(),
            2f64.ln(),
            epsilon = 1e-3
        );
        let p = g(4.95, 2.05);
        let t = p.truncation_time(1e-10).unwrap();
        assert!(t.is_finite() && t > p.mean());
        assert!(p.sf(t).unwrap() <= 1e-10);
        assert!(p.sf(t - 2.05e-3).unwrap() > 1e-10);
        assert!(exp1.truncation_time(0.0).is_err());
        assert!(exp1.truncation_time(1.0).is_err());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(GammaParams::new(0.0, 1.0).is_err());
        assert!(GammaParams::new(1.0, -1.0).is_err());
        assert!(GammaParams::new(f64::NAN, 1.0).is_err());
    }
}
