//! Scenario files: parsing and validation. Everything here runs before any
//! check is computed, and every failure maps to exit status 2.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use pq_core::expr::{parse_expr, FunctionDef, FunctionRegistry, Point};
use pq_core::geometry::{
    conjugate_structure, flat_model, load_structure, propo_frame, propo_structure,
    pullback_structure, random_conjugator, random_diffeomorphism, PqStructure,
};
use pq_core::integrability::{diagonal_matrix, propo_admissible, propo_samples, CompatibleStructure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug)]
pub struct ValidationError(pub String);

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ValidationError> {
    Err(ValidationError(msg.into()))
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub structure: Value,
    #[serde(default)]
    pub samples: SampleSpec,
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    pub checks: Vec<Value>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum StructureSource {
    Flat {
        m: usize,
    },
    Propo {
        m: usize,
        #[serde(default = "default_h")]
        h: String,
    },
    Pullback {
        m: usize,
        seed: u64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    Conjugated {
        m: usize,
        seed: u64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    File {
        path: PathBuf,
    },
}

fn default_h() -> String {
    "h_one".into()
}

fn default_scale() -> f64 {
    0.05
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub random: Option<RandomBox>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBox {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    #[default]
    Pass,
    Fail,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CompatibleSpec {
    pub coefficients: [String; 3],
    pub eps: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckKind {
    QuaternionicityWitness {},
    AdmissibleBasisCheck {},
    PdeResidual {},
    LemmaPeCheck {},
    ProofIdentitySuite {},
    IsIntegrable {
        structure: CompatibleSpec,
    },
    TheoremSugClassify {
        structures: Vec<CompatibleSpec>,
    },
    TwistorNijenhuis {
        #[serde(default = "both_signs")]
        eps: Vec<f64>,
        #[serde(default = "two")]
        base_points: usize,
        #[serde(default = "two")]
        fiber_points: usize,
    },
    MinimalIndependence {
        #[serde(default = "three")]
        alphas: usize,
        #[serde(default = "two")]
        base_points: usize,
    },
    TautologicalSectionCheck {
        structure: CompatibleSpec,
    },
}

fn both_signs() -> Vec<f64> {
    vec![-1.0, 1.0]
}
fn two() -> usize {
    2
}
fn three() -> usize {
    3
}

pub const CHECK_NAMES: [&str; 10] = [
    "quaternionicity_witness",
    "admissible_basis_check",
    "pde_residual",
    "lemma_pe_check",
    "proof_identity_suite",
    "is_integrable",
    "theorem_sug_classify",
    "twistor_nijenhuis",
    "minimal_independence",
    "tautological_section_check",
];

/// A check entry: the kind with its parameters plus the run options.
#[derive(Clone, Debug)]
pub struct CheckSpec {
    pub kind: CheckKind,
    pub name: String,
    pub expect: Expect,
    pub tol: f64,
    /// The entry as written, echoed into the report.
    pub raw: Value,
}

/// A validated scenario ready to run.
pub struct Plan {
    pub structure: PqStructure,
    pub source: StructureSource,
    /// Diagonal frame matrix when the structure comes from one.
    pub frame: Option<Vec<Vec<pq_core::expr::ScalarExpr>>>,
    pub registry: FunctionRegistry,
    pub points: Vec<Point>,
    pub checks: Vec<CheckSpec>,
    pub seed: u64,
    pub tol: f64,
    pub output: Option<PathBuf>,
}

fn parse_check(raw: &Value, default_tol: f64) -> Result<CheckSpec, ValidationError> {
    let mut obj = match raw {
        Value::String(s) => serde_json::Map::from_iter([("name".to_string(), Value::String(s.clone()))]),
        Value::Object(m) => m.clone(),
        _ => return invalid(format!("check entry must be a name or an object, got {raw}")),
    };
    let name = match obj.get("name") {
        Some(Value::String(s)) => s.clone(),
        _ => return invalid(format!("check entry without a name: {raw}")),
    };
    if !CHECK_NAMES.contains(&name.as_str()) {
        return invalid(format!("unknown check `{name}`; known checks: {}", CHECK_NAMES.join(", ")));
    }
    let expect = match obj.remove("expect") {
        None => Expect::Pass,
        Some(v) => serde_json::from_value(v).map_err(|e| ValidationError(format!("check `{name}`: expect: {e}")))?,
    };
    let tol = match obj.remove("tol") {
        None => default_tol,
        Some(v) => v
            .as_f64()
            .ok_or_else(|| ValidationError(format!("check `{name}`: tol must be a number")))?,
    };
    if !(tol > 0.0 && tol.is_finite()) {
        return invalid(format!("check `{name}`: tolerance must be positive, got {tol}"));
    }
    let kind: CheckKind =
        serde_json::from_value(Value::Object(obj)).map_err(|e| ValidationError(format!("check `{name}`: {e}")))?;
    Ok(CheckSpec {
        kind,
        name,
        expect,
        tol,
        raw: raw.clone(),
    })
}

fn build_structure(
    source: &StructureSource,
    registry: &FunctionRegistry,
    base_dir: &Path,
) -> Result<(PqStructure, Option<Arc<FunctionDef>>), ValidationError> {
    let wrap = |e: pq_core::Error| ValidationError(format!("structure: {e}"));
    let check_m = |m: usize| {
        if m < 2 {
            invalid(format!("structure: m must be at least 2 (dimension 4m ≥ 8), got {m}"))
        } else {
            Ok(())
        }
    };
    match source {
        StructureSource::Flat { m } => {
            check_m(*m)?;
            Ok((flat_model(*m).map_err(wrap)?, None))
        }
        StructureSource::Propo { m, h } => {
            check_m(*m)?;
            let def = registry
                .get(h)
                .cloned()
                .ok_or_else(|| ValidationError(format!("structure: unknown function `{h}`")))?;
            Ok((propo_structure(*m, &def).map_err(wrap)?, Some(def)))
        }
        StructureSource::Pullback { m, seed, scale } => {
            check_m(*m)?;
            let flat = flat_model(*m).map_err(wrap)?;
            let phi = random_diffeomorphism(flat.chart(), *seed, *scale);
            Ok((pullback_structure(&flat, &phi).map_err(wrap)?, None))
        }
        StructureSource::Conjugated { m, seed, scale } => {
            check_m(*m)?;
            let flat = flat_model(*m).map_err(wrap)?;
            let g = random_conjugator(flat.chart(), *seed, *scale);
            Ok((conjugate_structure(&flat, &g).map_err(wrap)?, None))
        }
        StructureSource::File { path } => {
            let full = base_dir.join(path);
            Ok((load_structure(&full, registry).map_err(wrap)?, None))
        }
    }
}

pub fn compatible(spec: &CompatibleSpec, h: &PqStructure, registry: &FunctionRegistry) -> Result<CompatibleStructure, ValidationError> {
    let names: Vec<String> = h.chart().coords().iter().map(|c| c.to_string()).collect();
    let mut coeffs = Vec::with_capacity(3);
    for s in &spec.coefficients {
        coeffs.push(parse_expr(s, &names, registry).map_err(|e| ValidationError(format!("coefficient `{s}`: {e}")))?);
    }
    let coeffs: [_; 3] = coeffs.try_into().expect("three coefficients");
    CompatibleStructure::new(coeffs, spec.eps).map_err(|e| ValidationError(e.to_string()))
}

/// Parses the coefficients and checks the invariant at every sample.
fn compatible_at(
    spec: &CompatibleSpec,
    h: &PqStructure,
    registry: &FunctionRegistry,
    points: &[Point],
) -> Result<CompatibleStructure, ValidationError> {
    let s = compatible(spec, h, registry)?;
    for p in points {
        s.checked_at(p).map_err(|e| ValidationError(e.to_string()))?;
    }
    Ok(s)
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ValidationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ValidationError(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ValidationError(format!("{}: {e}", path.display())))
    }

    /// Resolves structure, samples and checks; `base_dir` anchors relative
    /// structure file paths.
    pub fn validate(self, base_dir: &Path) -> Result<Plan, ValidationError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return invalid(format!("tolerance must be positive, got {}", self.tol));
        }
        if self.checks.is_empty() {
            return invalid("scenario lists no checks");
        }
        let checks = self
            .checks
            .iter()
            .map(|c| parse_check(c, self.tol))
            .collect::<Result<Vec<_>, _>>()?;
        let source: StructureSource = serde_json::from_value(self.structure.clone())
            .map_err(|e| ValidationError(format!("structure: {e}")))?;
        let registry = FunctionRegistry::with_defaults();
        let (structure, hdef) = build_structure(&source, &registry, base_dir)?;
        let n = structure.dim();
        let chart = structure.chart().clone();

        let mut points = Vec::new();
        for c in &self.samples.points {
            let p = chart
                .point(c.clone())
                .map_err(|e| ValidationError(format!("sample point {c:?}: {e}")))?;
            if let Some(def) = &hdef {
                if !propo_admissible(&chart, def, &p) {
                    return invalid(format!("sample point {c:?} lies on the singular locus of the structure"));
                }
            }
            points.push(p);
        }
        if let Some(b) = &self.samples.random {
            if !(b.lo < b.hi) || b.count == 0 {
                return invalid(format!("random box needs lo < hi and count ≥ 1, got [{}, {}] × {}", b.lo, b.hi, b.count));
            }
            match &hdef {
                Some(def) => points.extend(
                    propo_samples(&chart, def, b.lo, b.hi, b.count, self.seed)
                        .map_err(|e| ValidationError(format!("samples: {e}")))?,
                ),
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                    for _ in 0..b.count {
                        let c = (0..n).map(|_| rng.gen_range(b.lo..b.hi)).collect();
                        points.push(chart.point(c).expect("dimension matches"));
                    }
                }
            }
        }
        if points.is_empty() {
            return invalid("scenario has no sample points");
        }

        let frame = hdef.as_ref().map(|def| diagonal_matrix(&propo_frame(&chart, def)));
        for c in &checks {
            let name = &c.name;
            match &c.kind {
                CheckKind::PdeResidual {} if frame.is_none() => {
                    return invalid("pde_residual needs a structure built from a diagonal frame (generator `propo`)");
                }
                CheckKind::IsIntegrable { structure: s } | CheckKind::TautologicalSectionCheck { structure: s } => {
                    compatible_at(s, &structure, &registry, &points).map_err(|e| ValidationError(format!("{name}: {e}")))?;
                }
                CheckKind::TheoremSugClassify { structures } => {
                    if structures.is_empty() {
                        return invalid(format!("{name}: needs at least one structure"));
                    }
                    for s in structures {
                        compatible_at(s, &structure, &registry, &points)
                            .map_err(|e| ValidationError(format!("{name}: {e}")))?;
                    }
                }
                CheckKind::TwistorNijenhuis {
                    eps,
                    base_points,
                    fiber_points,
                } => {
                    if eps.is_empty() || eps.iter().any(|e| *e != 1.0 && *e != -1.0) {
                        return invalid(format!("{name}: eps must be a non-empty list of ±1"));
                    }
                    if *base_points == 0 || *fiber_points == 0 {
                        return invalid(format!("{name}: base_points and fiber_points must be at least 1"));
                    }
                }
                CheckKind::MinimalIndependence { base_points, .. } if *base_points == 0 => {
                    return invalid(format!("{name}: base_points must be at least 1"));
                }
                _ => {}
            }
        }
        Ok(Plan {
            structure,
            source,
            frame,
            registry,
            points,
            checks,
            seed: self.seed,
            tol: self.tol,
            output: self.output.map(|o| base_dir.join(o)),
        })
    }
}
