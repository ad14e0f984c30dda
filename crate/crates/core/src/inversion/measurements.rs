//! Synthetic far-field data with block-wise relative noise.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{assemble, far_field, observation_angles, rhs, IncidentWave};
use crate::geometry::{build_mesh, SurfaceProfile};

/// Mesh size used for wavenumber `k` when nothing else is configured.
pub fn default_mesh_n(k: f64) -> usize {
    MeshRule::default().n_for(k)
}

/// `n = below` for `k < switch_k`, `above` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshRule {
    pub switch_k: f64,
    pub below: usize,
    pub above: usize,
}

impl Default for MeshRule {
    fn default() -> Self {
        Self {
            switch_k: 13.0,
            below: 128,
            above: 256,
        }
    }
}

impl MeshRule {
    pub fn fixed(n: usize) -> Self {
        Self {
            switch_k: f64::INFINITY,
            below: n,
            above: n,
        }
    }

    pub fn n_for(&self, k: f64) -> usize {
        if k < self.switch_k {
            self.below
        } else {
            self.above
        }
    }
}

/// Coupling parameter as a function of the wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaRule {
    /// `eta = k`
    Wavenumber,
    Fixed(f64),
}

impl EtaRule {
    pub fn eta(&self, k: f64) -> f64 {
        match self {
            EtaRule::Wavenumber => k,
            EtaRule::Fixed(v) => *v,
        }
    }
}

/// Far-field data for every `(k, direction)` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSet {
    /// Increasing wavenumbers.
    pub wavenumbers: Vec<f64>,
    /// Incidence angles `theta`; the direction is `(sin theta, -cos theta)`.
    pub directions: Vec<f64>,
    pub angles: Vec<f64>,
    /// `values[s][l][j]` for wavenumber `s`, direction `l`, angle `j`.
    pub values: Vec<Vec<Vec<Complex64>>>,
    pub delta: f64,
    pub seed: u64,
}

impl MeasurementSet {
    pub fn n_f(&self) -> usize {
        self.angles.len().saturating_sub(1)
    }

    pub fn stage_index(&self, k: f64) -> Option<usize> {
        self.wavenumbers.iter().position(|w| *w == k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.wavenumbers.is_empty() {
            return Err(Error::InvalidInput("empty wavenumber schedule".into()));
        }
        if self.wavenumbers.iter().any(|k| !(*k > 0.0 && k.is_finite()))
            || self.wavenumbers.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidInput("wavenumbers must be positive and increasing".into()));
        }
        if self.directions.is_empty() {
            return Err(Error::InvalidInput("no incidence directions".into()));
        }
        for &theta in &self.directions {
            IncidentWave::new(1.0, theta)?;
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidInput(format!("noise level {} must be >= 0", self.delta)));
        }
        let shape_ok = self.values.len() == self.wavenumbers.len()
            && self.values.iter().all(|per_k| {
                per_k.len() == self.directions.len()
                    && per_k.iter().all(|b| b.len() == self.angles.len())
            });
        if !shape_ok {
            return Err(Error::Dimension(
                "values must be indexed [wavenumber][direction][angle]".into(),
            ));
        }
        if self.values.iter().flatten().flatten().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidInput("non-finite measurement value".into()));
        }
        Ok(())
    }
}

fn block_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `u + delta zeta ||u|| / ||zeta||` with `zeta` complex standard normal.
fn perturb(u: &[Complex64], delta: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let zeta: Vec<Complex64> = (0..u.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    let (nu, nz) = (block_norm(u), block_norm(&zeta));
    if delta == 0.0 || nu == 0.0 || nz == 0.0 {
        return u.to_vec();
    }
    let s = delta * nu / nz;
    u.iter().zip(&zeta).map(|(a, z)| a + s * z).collect()
}

/// Exact far fields with `eta = k` on mesh `mesh_n(k)`, then noise per block.
/// Noise is drawn in `(k, direction)` order from one seeded stream.
pub fn synthesize_measurements(
    true_profile: &SurfaceProfile,
    schedule: &[f64],
    directions: &[f64],
    n_f: usize,
    delta: f64,
    seed: u64,
    mesh_n: impl Fn(f64) -> usize + Sync,
) -> Result<MeasurementSet> {
    synthesize_measurements_with(
        true_profile,
        schedule,
        directions,
        n_f,
        delta,
        seed,
        mesh_n,
        EtaRule::Wavenumber,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn synthesize_measurements_with(
    true_profile: &SurfaceProfile,
    schedule: &[f64],
    directions: &[f64],
    n_f: usize,
    delta: f64,
    seed: u64,
    mesh_n: impl Fn(f64) -> usize + Sync,
    eta: EtaRule,
) -> Result<MeasurementSet> {
    if schedule.is_empty() {
        return Err(Error::InvalidInput("empty wavenumber schedule".into()));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("noise level {delta} must be >= 0")));
    }
    let angles = observation_angles(n_f);
    let exact = schedule
        .par_iter()
        .map(|&k| -> Result<Vec<Vec<Complex64>>> {
            let mesh = build_mesh(true_profile, mesh_n(k))?;
            let eta = eta.eta(k);
            let system = assemble(&mesh, k, eta)?;
            let incidents = directions
                .iter()
                .map(|&t| IncidentWave::new(k, t))
                .collect::<Result<Vec<_>>>()?;
            let densities = system.solve_many(&incidents.iter().map(|w| rhs(&mesh, w)).collect::<Vec<_>>())?;
            densities
                .iter()
                .map(|d| Ok(far_field(&mesh, d, k, eta, &angles)?.values))
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = exact
        .iter()
        .map(|per_k| per_k.iter().map(|u| perturb(u, delta, &mut rng)).collect())
        .collect();
    let set = MeasurementSet {
        wavenumbers: schedule.to_vec(),
        directions: directions.to_vec(),
        angles,
        values,
        delta,
        seed,
    };
    set.validate()?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ProfileSpec;

    fn example1() -> SurfaceProfile {
        SurfaceProfile::new(ProfileSpec::Example1, 1.0).unwrap()
    }

    #[test]
    fn block_noise_level_and_determinism() {
        let p = example1();
        let clean = synthesize_measurements(&p, &[1.0, 3.0], &[0.3, -0.2], 16, 0.0, 5, |_| 32).unwrap();
        let a = synthesize_measurements(&p, &[1.0, 3.0], &[0.3, -0.2], 16, 0.05, 5, |_| 32).unwrap();
        let b = synthesize_measurements(&p, &[1.0, 3.0], &[0.3, -0.2], 16, 0.05, 5, |_| 32).unwrap();
        let c = synthesize_measurements(&p, &[1.0, 3.0], &[0.3, -0.2], 16, 0.05, 6, |_| 32).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert_eq!(a.angles, c.angles);
        for s in 0..2 {
            for l in 0..2 {
                let u = &clean.values[s][l];
                let diff: Vec<_> = a.values[s][l].iter().zip(u).map(|(x, y)| x - y).collect();
                let ratio = block_norm(&diff) / block_norm(u);
                assert!((ratio - 0.05).abs() <= 1e-12, "{ratio}");
            }
        }
    }

    #[test]
    fn validation() {
        let p = example1();
        assert!(synthesize_measurements(&p, &[], &[0.0], 8, 0.0, 1, |_| 16).is_err());
        assert!(synthesize_measurements(&p, &[1.0], &[0.0], 8, -1.0, 1, |_| 16).is_err());
        let mut m = synthesize_measurements(&p, &[1.0], &[0.0], 8, 0.0, 1, |_| 16).unwrap();
        assert_eq!(m.n_f(), 8);
        assert_eq!(m.stage_index(1.0), Some(0));
        m.values[0][0].pop();
        assert!(m.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = synthesize_measurements(&example1(), &[1.0], &[0.5], 8, 0.1, 9, |_| 16).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"values\":[[[["));
        let back: MeasurementSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
