//! Renewable availability scenarios: probabilities, period blocking and a
//! seeded synthetic profile generator for desk-scale studies.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::system::PowerSystem;

pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("block length must be at least 1")]
    InvalidBlockLength,
    #[error("{profiles} profiles but {probabilities} probabilities")]
    LengthMismatch { profiles: usize, probabilities: usize },
    #[error("probability {value} of scenario {index} is negative or not finite")]
    NegativeProbability { index: usize, value: f64 },
    #[error("all scenario probabilities are zero")]
    ZeroProbabilityMass,
    #[error("scaling factor {0} is negative or not finite")]
    NegativeFactor(f64),
    #[error("scenario set is empty")]
    Empty,
    #[error("scenario `{scenario}` unit `{unit}` has {found} periods, expected {expected}")]
    HorizonMismatch {
        scenario: String,
        unit: String,
        found: usize,
        expected: usize,
    },
    #[error("scenario `{scenario}` unit `{unit}` period {period}: availability {value} is negative")]
    NegativeAvailability {
        scenario: String,
        unit: String,
        period: usize,
        value: f64,
    },
    #[error("scenario `{scenario}` lacks availability for RES unit `{unit}`")]
    MissingUnit { scenario: String, unit: String },
    #[error("scenario probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid scenario JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

/// Per-unit availability profiles, keyed by RES unit id.
pub type Profile = BTreeMap<String, Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub probability: f64,
    /// MW available per RES unit per period.
    pub availability: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScenarioFile {
    Wrapped { scenarios: Vec<RawScenario> },
    Bare(Vec<RawScenario>),
}

#[derive(Deserialize)]
struct RawScenario {
    #[serde(default)]
    id: Option<String>,
    probability: f64,
    availability: Profile,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.scenarios
            .first()
            .and_then(|s| s.availability.values().next())
            .map_or(0, Vec::len)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.probability).collect()
    }

    /// Parse a scenario document, normalize probabilities and block-average
    /// every profile.
    pub fn from_json_str(text: &str, block_len: usize) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let raw = match file {
            ScenarioFile::Wrapped { scenarios } | ScenarioFile::Bare(scenarios) => scenarios,
        };
        let ids: Vec<String> = raw
            .iter()
            .enumerate()
            .map(|(i, r)| r.id.clone().unwrap_or_else(|| format!("s{}", i + 1)))
            .collect();
        let probabilities: Vec<f64> = raw.iter().map(|r| r.probability).collect();
        let profiles: Vec<Profile> = raw.into_iter().map(|r| r.availability).collect();
        let mut set = build_scenario_set(profiles, &probabilities, block_len)?;
        for (s, id) in set.scenarios.iter_mut().zip(ids) {
            s.id = id;
        }
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>, block_len: usize) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text, block_len)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario set serializes")
    }

    /// Check the set invariants and that it covers every RES unit of `sys`
    /// over the demand horizon.
    pub fn check_against(&self, sys: &PowerSystem) -> Result<(), ScenarioError> {
        self.check()?;
        let horizon = sys.horizon();
        for s in &self.scenarios {
            for w in &sys.res_units {
                let profile = s.availability.get(&w.id).ok_or_else(|| ScenarioError::MissingUnit {
                    scenario: s.id.clone(),
                    unit: w.id.clone(),
                })?;
                if profile.len() != horizon {
                    return Err(ScenarioError::HorizonMismatch {
                        scenario: s.id.clone(),
                        unit: w.id.clone(),
                        found: profile.len(),
                        expected: horizon,
                    });
                }
            }
        }
        Ok(())
    }

    /// Internal invariants: probabilities sum to one, availabilities are
    /// nonnegative and share one horizon.
    pub fn check(&self) -> Result<(), ScenarioError> {
        if self.scenarios.is_empty() {
            return Err(ScenarioError::Empty);
        }
        let total: f64 = self.scenarios.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(ScenarioError::NotNormalized(total));
        }
        let horizon = self.horizon();
        for s in &self.scenarios {
            for (unit, profile) in &s.availability {
                if profile.len() != horizon {
                    return Err(ScenarioError::HorizonMismatch {
                        scenario: s.id.clone(),
                        unit: unit.clone(),
                        found: profile.len(),
                        expected: horizon,
                    });
                }
                if let Some((t, v)) = profile.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
                    return Err(ScenarioError::NegativeAvailability {
                        scenario: s.id.clone(),
                        unit: unit.clone(),
                        period: t + 1,
                        value: *v,
                    });
                }
            }
        }
        Ok(())
    }

    /// Dense `[s][w][t]` availability in the order of `sys.res_units`.
    pub fn dense(&self, sys: &PowerSystem) -> Result<Vec<Vec<Vec<f64>>>, ScenarioError> {
        self.check_against(sys)?;
        Ok(self
            .scenarios
            .iter()
            .map(|s| sys.res_units.iter().map(|w| s.availability[&w.id].clone()).collect())
            .collect())
    }
}

/// Replace each period by the mean of its block of `block_len` periods. A
/// trailing partial block is averaged over its own length.
pub fn block_average(profile: &[f64], block_len: usize) -> Result<Vec<f64>, ScenarioError> {
    if block_len == 0 {
        return Err(ScenarioError::InvalidBlockLength);
    }
    let mut out = Vec::with_capacity(profile.len());
    for block in profile.chunks(block_len) {
        let mean = block.iter().sum::<f64>() / block.len() as f64;
        out.extend(std::iter::repeat(mean).take(block.len()));
    }
    Ok(out)
}

pub fn build_scenario_set(
    profiles: Vec<Profile>,
    probabilities: &[f64],
    block_len: usize,
) -> Result<ScenarioSet, ScenarioError> {
    if block_len == 0 {
        return Err(ScenarioError::InvalidBlockLength);
    }
    if profiles.len() != probabilities.len() {
        return Err(ScenarioError::LengthMismatch {
            profiles: profiles.len(),
            probabilities: probabilities.len(),
        });
    }
    if profiles.is_empty() {
        return Err(ScenarioError::Empty);
    }
    for (index, &value) in probabilities.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(ScenarioError::NegativeProbability { index, value });
        }
    }
    let mass: f64 = probabilities.iter().sum();
    if mass <= 0.0 {
        return Err(ScenarioError::ZeroProbabilityMass);
    }
    let scenarios = profiles
        .into_iter()
        .zip(probabilities)
        .enumerate()
        .map(|(i, (profile, p))| {
            let availability = profile
                .into_iter()
                .map(|(unit, values)| Ok((unit, block_average(&values, block_len)?)))
                .collect::<Result<Profile, ScenarioError>>()?;
            Ok(Scenario {
                id: format!("s{}", i + 1),
                probability: p / mass,
                availability,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    let set = ScenarioSet { scenarios };
    set.check()?;
    Ok(set)
}

/// Multiply every availability entry by `factor`; probabilities are kept.
pub fn scale_penetration(scen: &ScenarioSet, factor: f64) -> Result<ScenarioSet, ScenarioError> {
    if !(factor.is_finite() && factor >= 0.0) {
        return Err(ScenarioError::NegativeFactor(factor));
    }
    let mut out = scen.clone();
    for s in &mut out.scenarios {
        for profile in s.availability.values_mut() {
            for v in profile.iter_mut() {
                *v *= factor;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindSite {
    pub id: String,
    /// Installed capacity, MW; profiles stay within `[0, capacity]`.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    pub sites: Vec<WindSite>,
    /// Starting (and center) level as a fraction of capacity.
    pub mean_fraction: f64,
    /// Largest per-period step as a fraction of capacity.
    pub amplitude: f64,
}

/// Bounded random walk per site.
///
/// Each site starts at `mean_fraction * capacity`; every period adds a step
/// drawn uniformly from `[-amplitude, amplitude] * capacity` and the result
/// is clamped to `[0, capacity]`. A ChaCha8 stream seeded with `seed` drives
/// all draws in scenario-major, site, period order.
pub fn synth_wind_profiles(seed: u64, n_scenarios: usize, horizon: usize, shape: &ShapeParams) -> Vec<Profile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = shape.mean_fraction.clamp(0.0, 1.0);
    let amp = shape.amplitude.max(0.0);
    (0..n_scenarios.max(1))
        .map(|_| {
            shape
                .sites
                .iter()
                .map(|site| {
                    let cap = site.capacity.max(0.0);
                    let mut level = mean * cap;
                    let values = (0..horizon)
                        .map(|t| {
                            if t > 0 && amp > 0.0 {
                                let step: f64 = rng.gen_range(-amp..=amp);
                                level = (level + step * cap).clamp(0.0, cap);
                            }
                            level
                        })
                        .collect();
                    (site.id.clone(), values)
                })
                .collect()
        })
        .collect()
}
