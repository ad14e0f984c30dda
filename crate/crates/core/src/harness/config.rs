//! Experiment configuration: the user-facing JSON schema and its validated,
//! canonical form.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward::IncidentWave;
use crate::frechet::TraceMethod;
use crate::geometry::{ProfileSpec, SurfaceProfile, MIN_MESH_N};
use crate::inversion::{EtaRule, InversionSettings, MeshRule, SplineBasis, DEFAULT_KAPPA};

/// Profile as a registry name (`"example1"`) or a full specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileEntry {
    Name(String),
    Spec(ProfileSpec),
}

/// Explicit wavenumbers or `"odd(N)"` for `1, 3, ..., 2N - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleEntry {
    List(Vec<f64>),
    Rule(String),
}

/// Angle in radians, or an expression such as `"pi/3"`, `"-pi/6"`, `"2pi/7"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AngleEntry {
    Radians(f64),
    Expr(String),
}

/// `"k"` for `eta = k`, or a fixed number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaEntry {
    Fixed(f64),
    Rule(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaPolicyEntry {
    #[serde(default = "eta_k")]
    pub synthesis: EtaEntry,
    #[serde(default = "eta_zero")]
    pub inversion: EtaEntry,
}

impl Default for EtaPolicyEntry {
    fn default() -> Self {
        Self {
            synthesis: eta_k(),
            inversion: eta_zero(),
        }
    }
}

fn eta_k() -> EtaEntry {
    EtaEntry::Rule("k".into())
}

fn eta_zero() -> EtaEntry {
    EtaEntry::Fixed(0.0)
}

fn default_radius() -> f64 {
    1.0
}

fn default_n_f() -> usize {
    64
}

fn default_m() -> usize {
    10
}

fn default_kappa() -> u32 {
    DEFAULT_KAPPA
}

fn default_rho() -> f64 {
    0.8
}

fn default_tau() -> f64 {
    1.5
}

fn default_max_iterations() -> usize {
    25
}

fn default_tripwire() -> f64 {
    1.5
}

/// The JSON config file as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub profile: ProfileEntry,
    #[serde(default = "default_radius")]
    pub radius: f64,
    pub schedule: ScheduleEntry,
    pub incidence: Vec<AngleEntry>,
    #[serde(default = "default_n_f")]
    pub n_f: usize,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_kappa")]
    pub kappa: u32,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_tripwire")]
    pub tripwire: f64,
    #[serde(default)]
    pub mesh: Option<MeshRule>,
    #[serde(default)]
    pub eta: EtaPolicyEntry,
    #[serde(default)]
    pub trace: TraceMethod,
}

/// Validated configuration with every default filled in. Its JSON
/// serialization is canonical and defines the config hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub profile: ProfileSpec,
    pub radius: f64,
    pub schedule: Vec<f64>,
    pub incidence: Vec<f64>,
    pub n_f: usize,
    pub delta: f64,
    pub seed: u64,
    pub m: usize,
    pub kappa: u32,
    pub rho: f64,
    pub tau: f64,
    pub max_iterations: usize,
    pub tripwire: f64,
    pub mesh: MeshRule,
    pub synthesis_eta: EtaRule,
    pub inversion_eta: EtaRule,
    pub trace: TraceMethod,
}

/// Parses `"odd(N)"`.
pub fn parse_schedule(rule: &str) -> Result<Vec<f64>> {
    let s: String = rule.chars().filter(|c| !c.is_whitespace()).collect();
    let inner = s
        .strip_prefix("odd(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::config("schedule", format!("unknown rule `{rule}`, expected odd(N)")))?;
    let n: usize = inner
        .parse()
        .map_err(|_| Error::config("schedule", format!("`{inner}` is not a count")))?;
    Ok((0..n).map(|i| (2 * i + 1) as f64).collect())
}

/// Parses `[-][c][*]pi[/d]` or a plain number.
pub fn parse_angle(expr: &str) -> Option<f64> {
    let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(&s)),
    };
    let (num, den) = match body.split_once('/') {
        Some((a, b)) => (a, b.parse::<f64>().ok()?),
        None => (body, 1.0),
    };
    let coef = num.strip_suffix("pi")?;
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let c = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().ok()? };
    let v = sign * c * PI / den;
    v.is_finite().then_some(v)
}

fn eta_rule(entry: &EtaEntry, field: &str) -> Result<EtaRule> {
    match entry {
        EtaEntry::Fixed(v) if v.is_finite() => Ok(EtaRule::Fixed(*v)),
        EtaEntry::Rule(s) if s.trim() == "k" => Ok(EtaRule::Wavenumber),
        other => Err(Error::config(field, format!("expected \"k\" or a finite number, got {other:?}"))),
    }
}

fn positive(v: f64, field: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("{v} must be finite and > 0")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::config(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Validates every field and fills in defaults.
    pub fn resolve(&self) -> Result<Experiment> {
        positive(self.radius, "radius")?;
        let profile = match &self.profile {
            ProfileEntry::Name(name) => ProfileSpec::named(name)
                .ok_or_else(|| Error::config("profile", format!("unknown profile `{name}`")))?,
            ProfileEntry::Spec(spec) => spec.clone(),
        };
        SurfaceProfile::new(profile.clone(), self.radius)
            .map_err(|e| Error::config("profile", e.to_string()))?;

        let schedule = match &self.schedule {
            ScheduleEntry::List(ks) => ks.clone(),
            ScheduleEntry::Rule(rule) => parse_schedule(rule)?,
        };
        if schedule.is_empty() {
            return Err(Error::config("schedule", "empty wavenumber schedule"));
        }
        for (i, &k) in schedule.iter().enumerate() {
            positive(k, &format!("schedule[{i}]"))?;
            if i > 0 && k <= schedule[i - 1] {
                return Err(Error::config(format!("schedule[{i}]"), "wavenumbers must increase"));
            }
        }

        if self.incidence.is_empty() {
            return Err(Error::config("incidence", "at least one incidence angle is required"));
        }
        let incidence = self
            .incidence
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let field = format!("incidence[{i}]");
                let theta = match a {
                    AngleEntry::Radians(v) => *v,
                    AngleEntry::Expr(s) => parse_angle(s)
                        .ok_or_else(|| Error::config(&field, format!("cannot parse angle `{s}`")))?,
                };
                IncidentWave::new(1.0, theta).map_err(|e| Error::config(&field, e.to_string()))?;
                Ok(theta)
            })
            .collect::<Result<Vec<_>>>()?;

        if self.n_f < 1 {
            return Err(Error::config("n_f", "need at least one observation interval"));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::config("delta", format!("{} must be >= 0", self.delta)));
        }
        SplineBasis::new(self.m, self.radius, self.kappa)
            .map_err(|e| Error::config("m", e.to_string()))?;

        let mesh = self.mesh.unwrap_or_default();
        if mesh.below < MIN_MESH_N || mesh.above < MIN_MESH_N {
            return Err(Error::config("mesh", format!("mesh sizes must be >= {MIN_MESH_N}")));
        }
        if mesh.switch_k.is_nan() {
            return Err(Error::config("mesh.switch_k", "must be a number"));
        }

        let exp = Experiment {
            profile,
            radius: self.radius,
            schedule,
            incidence,
            n_f: self.n_f,
            delta: self.delta,
            seed: self.seed,
            m: self.m,
            kappa: self.kappa,
            rho: self.rho,
            tau: self.tau,
            max_iterations: self.max_iterations,
            tripwire: self.tripwire,
            mesh,
            synthesis_eta: eta_rule(&self.eta.synthesis, "eta.synthesis")?,
            inversion_eta: eta_rule(&self.eta.inversion, "eta.inversion")?,
            trace: self.trace,
        };
        exp.settings()
            .validate()
            .map_err(|e| Error::config("rho/tau/tripwire/trace", e.to_string()))?;
        Ok(exp)
    }
}

impl Experiment {
    pub fn true_profile(&self) -> Result<SurfaceProfile> {
        SurfaceProfile::new(self.profile.clone(), self.radius)
    }

    pub fn basis(&self) -> Result<SplineBasis> {
        SplineBasis::new(self.m, self.radius, self.kappa)
    }

    pub fn settings(&self) -> InversionSettings {
        InversionSettings {
            rho: self.rho,
            tau: self.tau,
            max_iterations: self.max_iterations,
            tripwire: self.tripwire,
            mesh: self.mesh,
            eta: self.inversion_eta,
            trace: self.trace,
        }
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("experiment serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EXAMPLE1: &str = r#"{
        "profile": "example1",
        "schedule": "odd(6)",
        "incidence": ["pi/3"],
        "delta": 0.03,
        "seed": 7
    }"#;

    #[test]
    fn angles() {
        let cases = [
            ("pi/3", PI / 3.0),
            ("-pi/6", -PI / 6.0),
            ("2pi/7", 2.0 * PI / 7.0),
            ("2*pi/7", 2.0 * PI / 7.0),
            ("0", 0.0),
            ("0.25", 0.25),
            (" PI / 4 ", PI / 4.0),
        ];
        for (s, v) in cases {
            assert_eq!(parse_angle(s), Some(v), "{s}");
        }
        for s in ["pi/0x", "tau", "", "pi/"] {
            assert_eq!(parse_angle(s), None, "{s}");
        }
    }

    #[test]
    fn schedule_rule() {
        assert_eq!(parse_schedule("odd(3)").unwrap(), vec![1.0, 3.0, 5.0]);
        assert_eq!(parse_schedule("odd( 1 )").unwrap(), vec![1.0]);
        assert!(parse_schedule("even(3)").is_err());
        assert!(parse_schedule("odd(x)").is_err());
    }

    #[test]
    fn defaults_and_hash() {
        let exp = ExperimentConfig::from_json(EXAMPLE1).unwrap().resolve().unwrap();
        assert_eq!(exp.schedule, vec![1.0, 3.0, 5.0, 7.0, 9.0, 11.0]);
        assert_eq!(exp.incidence, vec![PI / 3.0]);
        assert_eq!((exp.m, exp.kappa, exp.n_f), (10, 4, 64));
        assert_eq!((exp.rho, exp.tau), (0.8, 1.5));
        assert_eq!(exp.mesh, MeshRule::default());
        assert_eq!(exp.synthesis_eta, EtaRule::Wavenumber);
        assert_eq!(exp.inversion_eta, EtaRule::Fixed(0.0));
        let h = exp.hash();
        assert_eq!(h.len(), 64);
        assert_eq!(h, exp.clone().hash());
        let mut other = exp.clone();
        other.seed = 8;
        assert_ne!(other.hash(), h);
        let back: Experiment = serde_json::from_str(&exp.canonical_json()).unwrap();
        assert_eq!(back, exp);
    }

    #[test]
    fn explicit_fields() {
        let text = r#"{
            "profile": {"kind": "spline", "coefficients": [0.1, -0.2, 0.0]},
            "radius": 1.0,
            "schedule": [1, 2.5],
            "incidence": [0.1, "-pi/4"],
            "n_f": 16,
            "m": 6,
            "mesh": {"below": 64},
            "eta": {"synthesis": 2.0, "inversion": "k"},
            "trace": {"kind": "quadrature"}
        }"#;
        let exp = ExperimentConfig::from_json(text).unwrap().resolve().unwrap();
        assert_eq!(exp.schedule, vec![1.0, 2.5]);
        assert_eq!(exp.mesh.n_for(1.0), 64);
        assert_eq!(exp.mesh.n_for(20.0), 256);
        assert_eq!(exp.synthesis_eta, EtaRule::Fixed(2.0));
        assert_eq!(exp.inversion_eta, EtaRule::Wavenumber);
        assert_eq!(exp.trace, TraceMethod::Quadrature);
    }

    fn field_of(text: &str) -> String {
        let err = ExperimentConfig::from_json(text).and_then(|c| c.resolve()).unwrap_err();
        match err {
            Error::Config { field, .. } => field,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diagnostics_name_the_field() {
        let base = |extra: &str| {
            format!(r#"{{"profile": "example1", "schedule": "odd(2)", "incidence": [0.0]{extra}}}"#)
        };
        assert!(field_of(&base(r#", "colour": 1"#)).starts_with("line 1"));
        assert!(field_of("{\n  \"profile\": \"example1\",\n  \"schedule\": [1],\n  \"incidence\": [0],\n  \"n_f\": -3\n}")
            .starts_with("line 5"));
        assert_eq!(field_of(r#"{"profile": "example1", "schedule": [], "incidence": [0]}"#), "schedule");
        assert_eq!(field_of(r#"{"profile": "example1", "schedule": [1, 1], "incidence": [0]}"#), "schedule[1]");
        assert_eq!(field_of(r#"{"profile": "nope", "schedule": [1], "incidence": [0]}"#), "profile");
        assert_eq!(field_of(r#"{"profile": "flat", "schedule": [1], "incidence": [0, "pi/2"]}"#), "incidence[1]");
        assert_eq!(field_of(&base(r#", "delta": -0.1"#)), "delta");
        assert_eq!(field_of(&base(r#", "m": 0"#)), "m");
        assert_eq!(field_of(&base(r#", "eta": {"synthesis": "2k"}"#)), "eta.synthesis");
        assert_eq!(field_of(&base(r#", "mesh": {"below": 2}"#)), "mesh");
        assert_eq!(field_of(&base(r#", "radius": 0"#)), "radius");
        assert_eq!(field_of(&base(r#", "rho": 1.5"#)), "rho/tau/tripwire/trace");
    }

    proptest! {
        #[test]
        fn angle_expressions_round_trip(c in 1u32..50, d in 1u32..50, neg in any::<bool>()) {
            let sign = if neg { "-" } else { "" };
            let v = parse_angle(&format!("{sign}{c}pi/{d}")).unwrap();
            let expect = if neg { -1.0 } else { 1.0 } * c as f64 * PI / d as f64;
            prop_assert!((v - expect).abs() <= 1e-15 * expect.abs());
        }

        #[test]
        fn hash_tracks_every_change(seed in any::<u64>(), delta in 0.0f64..1.0) {
            let mut exp = ExperimentConfig::from_json(EXAMPLE1).unwrap().resolve().unwrap();
            let base = exp.hash();
            exp.seed = seed;
            exp.delta = delta;
            prop_assume!(seed != 7 || delta != 0.03);
            prop_assert_ne!(exp.hash(), base);
        }
    }
}
