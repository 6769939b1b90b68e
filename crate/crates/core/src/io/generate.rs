//! Seeded random polyhedra and fuzz instances.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cap::{extract_cap, Cap, CapError, CapSpec};
use crate::extend::{build_extension, ExtendError, Extension, UnboundedPolyhedron};
use crate::geom::{Point3, Tolerances, Vec3};
use crate::hull::{convex_hull, HullError, Polyhedron};

/// Draws per fuzz seed before giving up on finding a usable instance.
pub const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    /// Points on the unit sphere above `z = −1/2`.
    SphereCap,
    /// Points on `z = 1 − x² − y²` over the unit disk.
    Paraboloid,
    /// Points uniform in the unit ball.
    Ball,
}

impl Distribution {
    pub const ALL: [Distribution; 3] = [Distribution::SphereCap, Distribution::Paraboloid, Distribution::Ball];

    pub fn name(self) -> &'static str {
        match self {
            Distribution::SphereCap => "sphere-cap",
            Distribution::Paraboloid => "paraboloid",
            Distribution::Ball => "ball",
        }
    }

    pub fn sample(self, rng: &mut impl Rng) -> Point3 {
        loop {
            let p = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let r = p.norm();
            match self {
                Distribution::Ball if r <= 1.0 => return p,
                Distribution::SphereCap if r <= 1.0 && r > 1e-3 => {
                    let q = p / r;
                    if q.z >= -0.5 {
                        return q;
                    }
                }
                Distribution::Paraboloid if p.x * p.x + p.y * p.y <= 1.0 => {
                    return Vec3::new(p.x, p.y, 1.0 - p.x * p.x - p.y * p.y);
                }
                _ => {}
            }
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Distribution::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| format!("unknown distribution {s:?} (expected sphere-cap, paraboloid or ball)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n: usize,
    pub seed: u64,
    pub distribution: Distribution,
    pub phi_degrees: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("need at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("phi must lie in (0, 90] degrees, got {0}")]
    InvalidPhi(f64),
    #[error(transparent)]
    Hull(#[from] HullError),
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenerateError> {
        if self.n < 4 {
            return Err(GenerateError::TooFewPoints(self.n));
        }
        if !(self.phi_degrees > 0.0 && self.phi_degrees <= 90.0) {
            return Err(GenerateError::InvalidPhi(self.phi_degrees));
        }
        Ok(())
    }
}

pub fn sample_points(n: usize, distribution: Distribution, rng: &mut impl Rng) -> Vec<Point3> {
    (0..n).map(|_| distribution.sample(rng)).collect()
}

/// Hull of `cfg.n` seeded samples, redrawn until the hull is solid.
pub fn generate(cfg: &GeneratorConfig) -> Result<Polyhedron, GenerateError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    loop {
        let pts = sample_points(cfg.n, cfg.distribution, &mut rng);
        match convex_hull(&pts) {
            Ok(p) => return Ok(p),
            Err(HullError::DegenerateHull) | Err(HullError::TooFewPoints(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
}

/// A random cap with a ray-bearing extension.
#[derive(Debug, Clone)]
pub struct FuzzInstance {
    pub seed: u64,
    pub config: GeneratorConfig,
    pub polyhedron: Polyhedron,
    pub cap: Cap,
    pub extension: UnboundedPolyhedron,
    /// Draws rejected for having an empty cap or a ray-less extension.
    pub redraws: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuzzError {
    #[error("seed {seed}: {source}")]
    Cap { seed: u64, config: GeneratorConfig, source: CapError },
    #[error("seed {seed}: {source}")]
    Extend { seed: u64, config: GeneratorConfig, source: ExtendError },
    #[error("seed {0}: no usable instance in {MAX_REDRAWS} draws")]
    Exhausted(u64),
}

/// Draws the fuzz instance for `seed`: n ∈ [10, 100], φ ∈ (10°, 90°] and a
/// distribution, redrawing while the cap is empty or the extension has no
/// rays. Lemma violations and extension failures are returned as errors.
pub fn fuzz_instance(seed: u64) -> Result<FuzzInstance, FuzzError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for redraws in 0..MAX_REDRAWS {
        let config = GeneratorConfig {
            n: rng.gen_range(10..=100),
            seed: rng.gen(),
            distribution: Distribution::ALL[rng.gen_range(0..3)],
            phi_degrees: 90.0 - 80.0 * rng.gen::<f64>(),
        };
        let polyhedron = match generate(&config) {
            Ok(p) => p,
            Err(GenerateError::Hull(source)) => {
                return Err(FuzzError::Extend { seed, config, source: ExtendError::Hull(source) })
            }
            Err(e) => unreachable!("drawn config is valid: {e}"),
        };
        let tol = Tolerances::for_points(polyhedron.vertices());
        let spec = CapSpec::from_degrees(config.phi_degrees).expect("valid phi");
        let cap = match extract_cap(&polyhedron, spec, &tol) {
            Ok(c) => c,
            Err(CapError::EmptyCap) => continue,
            Err(source) => return Err(FuzzError::Cap { seed, config, source }),
        };
        match build_extension(&cap, &tol) {
            Ok(Extension::Unbounded(extension)) => {
                return Ok(FuzzInstance { seed, config, polyhedron, cap, extension, redraws })
            }
            Ok(Extension::Degenerate(_)) => continue,
            Err(source) => return Err(FuzzError::Extend { seed, config, source }),
        }
    }
    Err(FuzzError::Exhausted(seed))
}
