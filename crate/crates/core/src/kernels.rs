//! Truncated profiles `k` on `[0, 1]` and the kernel `K(u) = k(|u|^2)` and
//! weight `G(u) = -k'(|u|^2)` they induce.
//!
//! Profiles are not normalized to unit mass. Every algorithm only uses ratios
//! of `G` values, so normalization constants cancel; KDE values reported by
//! [`crate::state::kde_value`] are therefore defined up to the kernel's mass.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A truncated profile function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `k(t) = (1 - t)_+^alpha`.
    PolyAlpha(u32),
    /// `k(t) = (1 - t)_+`, whose weight is the uniform indicator of the unit ball.
    Epanechnikov,
}

impl Profile {
    pub const BIWEIGHT: Profile = Profile::PolyAlpha(2);
    pub const TRIWEIGHT: Profile = Profile::PolyAlpha(3);
    pub const QUADWEIGHT: Profile = Profile::PolyAlpha(4);

    /// Build a polynomial profile, rejecting `alpha == 0`.
    pub fn poly(alpha: u32) -> Result<Self> {
        if alpha == 0 {
            return Err(domain("profile exponent must be positive"));
        }
        Ok(Profile::PolyAlpha(alpha))
    }

    /// `k(t)` for `t >= 0`. Callers are expected to pass valid `t`; use
    /// [`profile_value`] for checked evaluation.
    #[inline]
    pub fn value(self, t: f64) -> f64 {
        if t >= 1.0 {
            return 0.0;
        }
        let one_minus = 1.0 - t;
        match self {
            Profile::PolyAlpha(alpha) => one_minus.powi(alpha as i32),
            Profile::Epanechnikov => one_minus,
        }
    }

    /// `k'(t)`, taken as `0` on `t >= 1`.
    #[inline]
    pub fn derivative(self, t: f64) -> f64 {
        if t >= 1.0 {
            return 0.0;
        }
        match self {
            Profile::PolyAlpha(alpha) => -(alpha as f64) * (1.0 - t).powi(alpha as i32 - 1),
            Profile::Epanechnikov => -1.0,
        }
    }

    /// `G` evaluated at squared norm `t = |u|^2`.
    #[inline]
    pub fn weight(self, t: f64) -> f64 {
        -self.derivative(t)
    }

    /// `k(0)`.
    pub fn at_zero(self) -> f64 {
        1.0
    }

    /// `|k'(0)|`, equal to `G(0)`.
    pub fn slope_at_zero(self) -> f64 {
        self.weight(0.0)
    }

    /// Whether the profile is C1 across the truncation point, which the
    /// convergence theory assumes.
    pub fn is_smooth(self) -> bool {
        matches!(self, Profile::PolyAlpha(alpha) if alpha >= 2)
    }

    /// `k(a) - k(b)` evaluated without cancellation when `a` and `b` are close.
    ///
    /// `b_minus_a` must equal `b - a`; it is passed separately because callers
    /// can usually compute it far more accurately than by subtracting.
    pub(crate) fn value_difference(self, a: f64, b: f64, b_minus_a: f64) -> f64 {
        if a >= 1.0 || b >= 1.0 {
            return self.value(a) - self.value(b);
        }
        let (p, q) = (1.0 - a, 1.0 - b);
        match self {
            Profile::Epanechnikov => b_minus_a,
            Profile::PolyAlpha(alpha) => {
                // p^n - q^n = (p - q) * sum_m p^m q^(n-1-m), with p - q = b - a.
                let mut sum = 0.0;
                let mut p_pow = 1.0;
                let q_pow = |e: u32| q.powi(e as i32);
                for m in 0..alpha {
                    sum += p_pow * q_pow(alpha - 1 - m);
                    p_pow *= p;
                }
                b_minus_a * sum
            }
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::PolyAlpha(2) => f.write_str("biweight"),
            Profile::PolyAlpha(3) => f.write_str("triweight"),
            Profile::PolyAlpha(4) => f.write_str("quadweight"),
            Profile::PolyAlpha(alpha) => write!(f, "poly{alpha}"),
            Profile::Epanechnikov => f.write_str("epanechnikov"),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "biweight" => Ok(Profile::PolyAlpha(2)),
            "triweight" => Ok(Profile::PolyAlpha(3)),
            "quadweight" => Ok(Profile::PolyAlpha(4)),
            "epanechnikov" | "uniform-weight" | "uniform" => Ok(Profile::Epanechnikov),
            other => match other.strip_prefix("poly").map(str::parse::<u32>) {
                Some(Ok(alpha)) => Profile::poly(alpha),
                _ => Err(Error::Unknown {
                    kind: "profile",
                    name: s.to_string(),
                }),
            },
        }
    }
}

/// A point already divided by the bandwidth.
#[derive(Debug, Clone, Copy)]
pub struct KernelPoint<'a>(pub &'a [f64]);

impl KernelPoint<'_> {
    pub fn norm_squared(&self) -> Result<f64> {
        if self.0.iter().any(|c| !c.is_finite()) {
            return Err(domain("kernel argument has non-finite coordinates"));
        }
        Ok(self.0.iter().map(|c| c * c).sum())
    }
}

fn check_t(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(domain(format!("profile argument must be finite and >= 0, got {t}")));
    }
    Ok(())
}

pub fn profile_value(p: Profile, t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(p.value(t))
}

pub fn profile_derivative(p: Profile, t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(p.derivative(t))
}

/// `K(u) = k(|u|^2)`.
pub fn kernel_value(p: Profile, u: KernelPoint<'_>) -> Result<f64> {
    Ok(p.value(u.norm_squared()?))
}

/// `G(u) = -k'(|u|^2)`.
pub fn weight_value(p: Profile, u: KernelPoint<'_>) -> Result<f64> {
    Ok(p.weight(u.norm_squared()?))
}
