use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inversion::spline::{spline_phi_derivs, SplineBasis, DEFAULT_KAPPA};

/// `(h, h', h'')` at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProfileValue {
    pub h: f64,
    pub dh: f64,
    pub d2h: f64,
}

impl ProfileValue {
    pub const ZERO: ProfileValue = ProfileValue {
        h: 0.0,
        dh: 0.0,
        d2h: 0.0,
    };
}

fn default_kappa() -> u32 {
    DEFAULT_KAPPA
}

fn default_envelope_amplitude() -> f64 {
    0.5
}

/// Closed-form registry entries and spline profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Flat,
    /// `amplitude * phi((x1 - center) / width)` with the quartic cardinal spline.
    Bump {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `phi((x1 + 0.2) / 0.3)`
    Example1,
    /// `-0.8 phi((x1 - 0.3) / 0.2)`
    Example2,
    /// `exp[16/(25 x1^2 - 16)] sin(4 pi x1)` on `|x1| < 4/5`
    Example3,
    /// `exp[16/(25 x1^2 - 16)] (0.5 + 0.1 sin(16 pi x1))` on `|x1| < 4/5`
    Example4,
    /// `amplitude * exp[16/(25 x1^2 - 16)]` on `|x1| < 4/5` (even)
    Envelope {
        #[serde(default = "default_envelope_amplitude")]
        amplitude: f64,
    },
    /// `sum a_i phi_i(x1)` over the basis with `M = coefficients.len()`.
    Spline {
        coefficients: Vec<f64>,
        #[serde(default = "default_kappa")]
        kappa: u32,
    },
    /// Pointwise sum of the parts.
    Sum { parts: Vec<ProfileSpec> },
}

impl ProfileSpec {
    /// Looks up a registry entry by name with default parameters.
    pub fn named(name: &str) -> Option<ProfileSpec> {
        Some(match name {
            "flat" => ProfileSpec::Flat,
            "example1" => ProfileSpec::Example1,
            "example2" => ProfileSpec::Example2,
            "example3" => ProfileSpec::Example3,
            "example4" => ProfileSpec::Example4,
            "envelope" => ProfileSpec::Envelope {
                amplitude: default_envelope_amplitude(),
            },
            _ => return None,
        })
    }
}

/// `exp[16/(25 x^2 - 16)]` and its first two derivatives, zero for `|x| >= 4/5`.
fn envelope(x: f64) -> ProfileValue {
    let q = 25.0 * x * x - 16.0;
    if q >= 0.0 {
        return ProfileValue::ZERO;
    }
    let e = 16.0 / q;
    if e < -700.0 {
        return ProfileValue::ZERO;
    }
    let f = e.exp();
    let g = -800.0 * x / (q * q);
    let dg = -800.0 / (q * q) + 80_000.0 * x * x / (q * q * q);
    ProfileValue {
        h: f,
        dh: f * g,
        d2h: f * (g * g + dg),
    }
}

fn scaled_bump(amplitude: f64, center: f64, width: f64, x: f64) -> ProfileValue {
    let p = spline_phi_derivs((x - center) / width, DEFAULT_KAPPA);
    ProfileValue {
        h: amplitude * p.h,
        dh: amplitude * p.dh / width,
        d2h: amplitude * p.d2h / (width * width),
    }
}

/// Envelope times `a + b sin(c x)`.
fn modulated(a: f64, b: f64, c: f64, x: f64) -> ProfileValue {
    let e = envelope(x);
    let (s, co) = (c * x).sin_cos();
    let m = a + b * s;
    let dm = b * c * co;
    let d2m = -b * c * c * s;
    ProfileValue {
        h: e.h * m,
        dh: e.dh * m + e.h * dm,
        d2h: e.d2h * m + 2.0 * e.dh * dm + e.h * d2m,
    }
}

/// A surface profile `h` with its truncation radius `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceProfile {
    pub spec: ProfileSpec,
    pub radius: f64,
    #[serde(skip)]
    derived: Derived,
}

#[derive(Debug, Clone, PartialEq, Default)]
enum Derived {
    #[default]
    None,
    Basis(SplineBasis),
    Parts(Vec<SurfaceProfile>),
}

/// Tolerance for the support check at `x1 = +-R`.
pub const SUPPORT_TOL: f64 = 1e-12;

impl SurfaceProfile {
    pub fn new(spec: ProfileSpec, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("radius {radius} must be > 0")));
        }
        let derived = match &spec {
            ProfileSpec::Spline { coefficients, kappa } => {
                if coefficients.iter().any(|a| !a.is_finite()) {
                    return Err(Error::InvalidInput("non-finite spline coefficient".into()));
                }
                Derived::Basis(SplineBasis::new(coefficients.len(), radius, *kappa)?)
            }
            ProfileSpec::Bump { width, .. } if !(*width > 0.0) => {
                return Err(Error::InvalidInput(format!("bump width {width} must be > 0")));
            }
            ProfileSpec::Sum { parts } => Derived::Parts(
                parts
                    .iter()
                    .map(|p| SurfaceProfile::new(p.clone(), radius))
                    .collect::<Result<_>>()?,
            ),
            _ => Derived::None,
        };
        let profile = Self { spec, radius, derived };
        for x in [-radius, radius] {
            let v = profile.eval(x);
            if v.h.abs() > SUPPORT_TOL || v.dh.abs() > SUPPORT_TOL {
                return Err(Error::InvalidInput(format!(
                    "profile does not vanish at x1 = {x} (h = {:e}, h' = {:e}); support must lie in (-R, R)",
                    v.h, v.dh
                )));
            }
        }
        Ok(profile)
    }

    pub fn flat(radius: f64) -> Self {
        Self {
            spec: ProfileSpec::Flat,
            radius,
            derived: Derived::None,
        }
    }

    pub fn eval(&self, x: f64) -> ProfileValue {
        match &self.spec {
            ProfileSpec::Flat => ProfileValue::ZERO,
            ProfileSpec::Bump {
                amplitude,
                center,
                width,
            } => scaled_bump(*amplitude, *center, *width, x),
            ProfileSpec::Example1 => scaled_bump(1.0, -0.2, 0.3, x),
            ProfileSpec::Example2 => scaled_bump(-0.8, 0.3, 0.2, x),
            ProfileSpec::Example3 => modulated(0.0, 1.0, 4.0 * std::f64::consts::PI, x),
            ProfileSpec::Example4 => modulated(0.5, 0.1, 16.0 * std::f64::consts::PI, x),
            ProfileSpec::Envelope { amplitude } => {
                let e = envelope(x);
                ProfileValue {
                    h: amplitude * e.h,
                    dh: amplitude * e.dh,
                    d2h: amplitude * e.d2h,
                }
            }
            ProfileSpec::Spline { coefficients, .. } => match &self.derived {
                Derived::Basis(b) => b.eval_sum(coefficients, x),
                _ => ProfileValue::ZERO,
            },
            ProfileSpec::Sum { .. } => match &self.derived {
                Derived::Parts(parts) => parts.iter().fold(ProfileValue::ZERO, |acc, p| {
                    let v = p.eval(x);
                    ProfileValue {
                        h: acc.h + v.h,
                        dh: acc.dh + v.dh,
                        d2h: acc.d2h + v.d2h,
                    }
                }),
                _ => ProfileValue::ZERO,
            },
        }
    }

    pub fn is_flat(&self) -> bool {
        match &self.spec {
            ProfileSpec::Flat => true,
            ProfileSpec::Spline { coefficients, .. } => coefficients.iter().all(|a| *a == 0.0),
            ProfileSpec::Bump { amplitude, .. } | ProfileSpec::Envelope { amplitude } => {
                *amplitude == 0.0
            }
            ProfileSpec::Sum { .. } => match &self.derived {
                Derived::Parts(parts) => parts.iter().all(|p| p.is_flat()),
                _ => false,
            },
            _ => false,
        }
    }

    /// Re-attaches derived data after deserialization.
    pub fn rebuild(self) -> Result<Self> {
        Self::new(self.spec, self.radius)
    }
}
