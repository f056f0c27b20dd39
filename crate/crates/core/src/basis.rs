//! Radial/elliptical basis families and their truncated support radii.
//!
//! Every family is a non-increasing map `phi: [0, inf) -> [0, 1]` with
//! `phi(0) = 1`. Compact families vanish identically for `r >= 1`; global
//! families are truncated by the density threshold `sigma_eps` (see
//! [`BasisFamily::support_radius`]).

use serde::{Deserialize, Serialize};

/// The basis function families available for primitive density profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    Gaussian,
    Bump,
    Wendland,
    InvMultiquadric,
    InvQuadratic,
    C0Matern,
}

/// Whether a family vanishes on its own (`r >= 1`) or needs threshold truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportKind {
    Compact,
    Global,
}

impl BasisFamily {
    pub const ALL: [BasisFamily; 6] = [
        BasisFamily::Gaussian,
        BasisFamily::Bump,
        BasisFamily::Wendland,
        BasisFamily::InvMultiquadric,
        BasisFamily::InvQuadratic,
        BasisFamily::C0Matern,
    ];

    pub fn support_kind(self) -> SupportKind {
        match self {
            BasisFamily::Bump | BasisFamily::Wendland => SupportKind::Compact,
            _ => SupportKind::Global,
        }
    }

    pub fn is_compact(self) -> bool {
        self.support_kind() == SupportKind::Compact
    }

    /// Evaluates `phi(r)` for `r >= 0`. Total on its domain; returns a value in `[0, 1]`.
    pub fn eval(self, r: f64) -> f64 {
        match self {
            BasisFamily::Gaussian => (-0.5 * r * r).exp(),
            BasisFamily::Bump => {
                if r < 1.0 {
                    (1.0 - 1.0 / (1.0 - r * r)).exp()
                } else {
                    0.0
                }
            }
            BasisFamily::Wendland => {
                if r <= 1.0 {
                    let u = 1.0 - r;
                    let u2 = u * u;
                    u2 * u2 * (4.0 * r + 1.0)
                } else {
                    0.0
                }
            }
            BasisFamily::InvMultiquadric => 1.0 / (1.0 + r * r).sqrt(),
            BasisFamily::InvQuadratic => 1.0 / (1.0 + r * r),
            BasisFamily::C0Matern => (-r).exp(),
        }
    }

    /// Evaluates `d phi / d r`.
    ///
    /// The bump family is extended by continuity with derivative 0 at `r = 1`
    /// (the exponential decay dominates the rational blow-up).
    pub fn eval_derivative(self, r: f64) -> f64 {
        match self {
            BasisFamily::Gaussian => -r * (-0.5 * r * r).exp(),
            BasisFamily::Bump => {
                if r < 1.0 {
                    let d = 1.0 - r * r;
                    let exponent = 1.0 - 1.0 / d;
                    // Once phi underflows, the product with the rational factor
                    // is 0 * inf; cut off before that happens.
                    if exponent < -700.0 {
                        0.0
                    } else {
                        exponent.exp() * (-2.0 * r / (d * d))
                    }
                } else {
                    0.0
                }
            }
            BasisFamily::Wendland => {
                if r <= 1.0 {
                    let u = 1.0 - r;
                    -20.0 * r * u * u * u
                } else {
                    0.0
                }
            }
            BasisFamily::InvMultiquadric => {
                let q = 1.0 + r * r;
                -r / (q * q.sqrt())
            }
            BasisFamily::InvQuadratic => {
                let q = 1.0 + r * r;
                -2.0 * r / (q * q)
            }
            BasisFamily::C0Matern => -(-r).exp(),
        }
    }

    /// Inverse `phi^{-1}(v)` for global families, `v` in `(0, 1]`.
    fn inverse(self, v: f64) -> f64 {
        debug_assert!(v > 0.0 && v <= 1.0);
        match self {
            BasisFamily::Gaussian => (2.0 * (1.0 / v).ln()).sqrt(),
            BasisFamily::InvMultiquadric => (1.0 / (v * v) - 1.0).sqrt(),
            BasisFamily::InvQuadratic => (1.0 / v - 1.0).sqrt(),
            BasisFamily::C0Matern => (1.0 / v).ln(),
            BasisFamily::Bump | BasisFamily::Wendland => {
                unreachable!("compact families are not threshold-truncated")
            }
        }
    }

    /// Radius of the truncated support: the `r*` with
    /// `sigma_tilde * phi(r*) = sigma_eps` for global families, and exactly 1
    /// for compact families regardless of `sigma_tilde`.
    ///
    /// Returns `None` when a global family's support is empty
    /// (`sigma_eps >= sigma_tilde`); the primitive then contributes nothing
    /// and callers skip it.
    pub fn support_radius(self, sigma_tilde: f64, sigma_eps: f64) -> Option<f64> {
        if self.is_compact() {
            return Some(1.0);
        }
        if sigma_eps >= sigma_tilde {
            return None;
        }
        Some(self.inverse(sigma_eps / sigma_tilde))
    }
}

impl std::str::FromStr for BasisFamily {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "gaussian" => Ok(BasisFamily::Gaussian),
            "bump" => Ok(BasisFamily::Bump),
            "wendland" => Ok(BasisFamily::Wendland),
            "inv_multiquadric" => Ok(BasisFamily::InvMultiquadric),
            "inv_quadratic" => Ok(BasisFamily::InvQuadratic),
            "c0_matern" => Ok(BasisFamily::C0Matern),
            other => Err(crate::Error::Config(format!(
                "unknown basis family `{other}` (expected one of: gaussian, bump, wendland, \
                 inv_multiquadric, inv_quadratic, c0_matern)"
            ))),
        }
    }
}

impl std::fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BasisFamily::Gaussian => "gaussian",
            BasisFamily::Bump => "bump",
            BasisFamily::Wendland => "wendland",
            BasisFamily::InvMultiquadric => "inv_multiquadric",
            BasisFamily::InvQuadratic => "inv_quadratic",
            BasisFamily::C0Matern => "c0_matern",
        };
        f.write_str(s)
    }
}
