//! Experiment configs: JSON in, validated library objects out.

use std::collections::BTreeMap;

use kernel_duality::{AprioriMeasure, CylinderFunction, Point, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::RunError;

/// A real number written either as a JSON number or as a decimal string.
#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum Num {
    Number(f64),
    Text(#[serde(with = "text")] f64),
}

mod text {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:.16e}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        s.trim().parse().map_err(|_| serde::de::Error::custom(format!("not a decimal number: {s:?}")))
    }
}

impl Num {
    pub fn get(self) -> f64 {
        match self {
            Num::Number(v) | Num::Text(v) => v,
        }
    }
}

fn nums(v: &[Num]) -> Vec<f64> {
    v.iter().map(|x| x.get()).collect()
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SideSpec {
    Future,
    Past,
}

impl From<SideSpec> for Side {
    fn from(s: SideSpec) -> Side {
        match s {
            SideSpec::Future => Side::Future,
            SideSpec::Past => Side::Past,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub side: SideSpec,
    pub depth: usize,
    pub re: Vec<Num>,
    #[serde(default)]
    pub im: Vec<Num>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    #[serde(default)]
    pub prefix: Vec<usize>,
    #[serde(default)]
    pub tail: usize,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsSpec {
    /// Reference point of the kernel construction.
    #[serde(default)]
    pub z: PointSpec,
    /// Tail symbol of the past points carrying `D_n`.
    #[serde(default)]
    pub reference: usize,
    /// Base point `x'`.
    #[serde(default)]
    pub base: PointSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum EigenSelector {
    Index { index: usize },
    Value { value: [Num; 2], match_tol: Num },
}

impl Default for EigenSelector {
    fn default() -> Self {
        EigenSelector::Index { index: 0 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySpec {
    pub depths: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl Default for BatterySpec {
    fn default() -> Self {
        BatterySpec { depths: vec![1, 2, 3], seeds: vec![1, 2] }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Identities that hold exactly on cylinders.
    #[serde(default = "default_exact")]
    pub exact: Num,
    /// Certified limits, oracle agreement and reconstruction.
    #[serde(default = "default_limit")]
    pub limit: Num,
    /// Relative tolerance of the finite-level preimage identity.
    #[serde(default = "default_preimage")]
    pub preimage: Num,
}

fn default_preimage() -> Num {
    Num::Number(1e-10)
}

fn default_exact() -> Num {
    Num::Number(1e-12)
}

fn default_limit() -> Num {
    Num::Number(1e-8)
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { exact: default_exact(), limit: default_limit(), preimage: default_preimage() }
    }
}

fn default_theta() -> Num {
    Num::Number(0.5)
}

fn default_n_max() -> usize {
    12
}

fn default_budget() -> u64 {
    1 << 24
}

/// The raw config file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alphabet: usize,
    #[serde(default)]
    pub weights: Option<Vec<Num>>,
    #[serde(default = "default_theta")]
    pub theta: Num,
    pub potentials: BTreeMap<String, PotentialSpec>,
    #[serde(default)]
    pub points: PointsSpec,
    #[serde(default)]
    pub eigenvalue: EigenSelector,
    /// Depth of the transfer matrices; defaults to `max(k - 1, 1)`.
    #[serde(default)]
    pub matrix_depth: Option<usize>,
    #[serde(default)]
    pub tests: BatterySpec,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_budget")]
    pub word_budget: u64,
    #[serde(default)]
    pub epsilon: Option<Num>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// A validated experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub d: usize,
    pub nu: AprioriMeasure,
    pub theta: f64,
    pub a: CylinderFunction,
    pub b: CylinderFunction,
    pub c_star: CylinderFunction,
    pub z: Point,
    pub reference: usize,
    pub base: Point,
    pub selector: EigenSelector,
    pub m: usize,
    /// Labelled past test functions.
    pub battery: Vec<(String, CylinderFunction)>,
    pub n_max: usize,
    pub word_budget: u64,
    pub epsilon: Option<f64>,
    pub exact_tol: f64,
    pub limit_tol: f64,
    pub preimage_tol: f64,
}

fn config_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

fn point(side: Side, p: &PointSpec, d: usize, what: &str) -> Result<Point, RunError> {
    let pt = Point::new(side, p.prefix.clone(), p.tail);
    pt.validate(d).map_err(|e| config_err(format!("{what}: {e}")))?;
    Ok(pt)
}

fn potential(
    specs: &BTreeMap<String, PotentialSpec>,
    name: &str,
    side: Side,
    d: usize,
) -> Result<Option<CylinderFunction>, RunError> {
    let Some(p) = specs.get(name) else { return Ok(None) };
    if Side::from(p.side) != side {
        return Err(config_err(format!("potential {name} must live on the {side:?} side")));
    }
    if p.depth > 3 {
        return Err(config_err(format!("potential {name}: depth {} exceeds 3", p.depth)));
    }
    let expected = d.pow(p.depth as u32);
    if p.re.len() != expected || !(p.im.is_empty() || p.im.len() == expected) {
        return Err(config_err(format!(
            "potential {name}: arrays must have d^depth = {expected} entries, got re {} im {}",
            p.re.len(),
            p.im.len()
        )));
    }
    let f = CylinderFunction::from_parts(side, d, p.depth, &nums(&p.re), &nums(&p.im))
        .map_err(|e| config_err(format!("potential {name}: {e}")))?;
    Ok(Some(f))
}

/// Pseudo-random past test function with entries in `[-1, 1]^2`.
pub fn test_function(d: usize, depth: usize, seed: u64) -> CylinderFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((depth as u64) << 32));
    let n = d.pow(depth as u32);
    let re: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let im: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    CylinderFunction::from_parts(Side::Past, d, depth, &re, &im).expect("sized table")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| config_err(format!("malformed config: {e}")))
    }

    pub fn validate(&self) -> Result<Experiment, RunError> {
        let d = self.alphabet;
        if !(2..=3).contains(&d) {
            return Err(config_err(format!("alphabet size must be 2 or 3, got {d}")));
        }
        let weights = match &self.weights {
            Some(w) if w.len() != d => {
                return Err(config_err(format!("weights: expected {d} entries, got {}", w.len())));
            }
            Some(w) => nums(w),
            None => vec![1.0 / d as f64; d],
        };
        let nu = AprioriMeasure::new(weights)
            .map_err(|e| config_err(format!("weights must be positive and sum to 1: {e}")))?;
        let theta = self.theta.get();
        if !(theta > 0.0 && theta < 1.0) {
            return Err(config_err(format!("theta must lie in (0, 1), got {theta}")));
        }
        if let Some(name) = self.potentials.keys().find(|k| !matches!(k.as_str(), "A" | "B" | "Cstar")) {
            return Err(config_err(format!("unknown potential {name:?}; expected A, B or Cstar")));
        }
        let a = potential(&self.potentials, "A", Side::Future, d)?
            .ok_or_else(|| config_err("potential A (future side) is required"))?;
        let zero = |side| CylinderFunction::constant(side, d, kernel_duality::Cdd::ZERO);
        let b = potential(&self.potentials, "B", Side::Future, d)?.unwrap_or_else(|| zero(Side::Future));
        let c_star = potential(&self.potentials, "Cstar", Side::Past, d)?.unwrap_or_else(|| zero(Side::Past));
        let z = point(Side::Future, &self.points.z, d, "points.z")?;
        let base = point(Side::Future, &self.points.base, d, "points.base")?;
        if self.points.reference >= d {
            return Err(config_err(format!("points.reference: symbol {} out of range", self.points.reference)));
        }
        let k = a.depth();
        let m = self.matrix_depth.unwrap_or(k.saturating_sub(1).max(1));
        if m < k.saturating_sub(1).max(1) || m > 6 {
            return Err(config_err(format!("matrix_depth must lie in [max(k-1,1), 6], got {m}")));
        }
        if self.n_max == 0 || self.n_max > 14 {
            return Err(config_err(format!("n_max must lie in [1, 14], got {}", self.n_max)));
        }
        if self.tests.depths.iter().any(|&j| j == 0 || j > 3) {
            return Err(config_err("tests.depths must lie in [1, 3]"));
        }
        let battery = self
            .tests
            .depths
            .iter()
            .flat_map(|&j| {
                self.tests.seeds.iter().map(move |&s| (format!("phi[depth={j},seed={s}]"), test_function(d, j, s)))
            })
            .collect();
        if let EigenSelector::Value { match_tol, .. } = &self.eigenvalue {
            if match_tol.get().is_nan() || match_tol.get() <= 0.0 {
                return Err(config_err("eigenvalue.match_tol must be positive"));
            }
        }
        let exact_tol = self.tolerances.exact.get();
        let limit_tol = self.tolerances.limit.get();
        let preimage_tol = self.tolerances.preimage.get();
        if !(exact_tol > 0.0 && limit_tol > 0.0 && preimage_tol > 0.0) {
            return Err(config_err("tolerances must be positive"));
        }
        Ok(Experiment {
            d,
            nu,
            theta,
            a,
            b,
            c_star,
            z,
            reference: self.points.reference,
            base,
            selector: self.eigenvalue.clone(),
            m,
            battery,
            n_max: self.n_max,
            word_budget: self.word_budget,
            epsilon: self.epsilon.map(Num::get),
            exact_tol,
            limit_tol,
            preimage_tol,
        })
    }
}

impl EigenSelector {
    pub fn describe(&self) -> String {
        match self {
            EigenSelector::Index { index } => format!("index {index}"),
            EigenSelector::Value { value, match_tol } => {
                format!("value {} within {}", Complex64::new(value[0].get(), value[1].get()), match_tol.get())
            }
        }
    }
}
