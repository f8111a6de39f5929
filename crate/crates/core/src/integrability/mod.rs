//! Integrability decisions: Nijenhuis checks, involutivity of frames, the
//! diagonal-frame PDE, normal forms of degenerate triples, case
//! classification and the para-quaternionic verdict.

mod baze;
mod frames;
mod identities;
pub(crate) mod report;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use baze::{baze_normal_form, BazeCase, BazeForm};
pub use frames::{
    eigen_frame, graph_frame, involutive, pde_residual, propo_admissible, propo_samples, diagonal_matrix,
    SINGULAR_MARGIN,
};
pub use identities::{lemma_pe_check, proof_identity_suite, proof_identity_suite_with, triple_for_lemma_pe};
pub use report::{CheckResidual, CheckStatus, IntegrabilityReport, Verdict};

use crate::error::{Error, Result};
use crate::expr::{Point, ScalarExpr};
use crate::geometry::{metric, EndomorphismField, PqStructure, StructureElement, StructureJet};
use crate::tensorcalc::algebra::{delta_fit, nijenhuis_at};
use crate::tensorcalc::{th_from_jet, tp_from_jet, Tensor3};

/// Tolerance for the pointwise invariant `-a1² + a2² + a3² = ε`.
pub const COMPATIBLE_TOL: f64 = 1e-10;
/// Threshold below which metric quantities count as degenerate or dependent.
pub const GEOMETRIC_TOL: f64 = 1e-9;

/// Run parameters shared by the checks.
#[derive(Clone, Copy, Debug)]
pub struct CheckConfig {
    pub tol: f64,
    pub seed: u64,
    /// Random tangent pairs drawn per sample point.
    pub pairs: usize,
}

impl CheckConfig {
    pub fn new(tol: f64) -> Self {
        CheckConfig { tol, seed: 0, pairs: 16 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Deterministic tangent pairs with entries in [-1, 1] for sample `index`.
pub fn tangent_pairs(n: usize, cfg: &CheckConfig, index: usize) -> Vec<(DVector<f64>, DVector<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    (0..cfg.pairs)
        .map(|_| {
            let x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let y = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            (x, y)
        })
        .collect()
}

/// Section `a1 J1 + a2 J2 + a3 J3` of the structure bundle squaring to `ε Id`.
#[derive(Clone, Debug)]
pub struct CompatibleStructure {
    pub element: StructureElement,
    pub eps: f64,
}

impl CompatibleStructure {
    pub fn new(coeffs: [ScalarExpr; 3], eps: f64) -> Result<Self> {
        if eps != 1.0 && eps != -1.0 {
            return Err(Error::Invalid(format!("sign must be ±1, got {eps}")));
        }
        Ok(CompatibleStructure {
            element: StructureElement::new(coeffs),
            eps,
        })
    }

    /// Constant coefficients; the sign is read off the fiber metric.
    pub fn constant(a: [f64; 3]) -> Result<Self> {
        let m = metric(a, a);
        let eps = if (m - 1.0).abs() <= COMPATIBLE_TOL {
            1.0
        } else if (m + 1.0).abs() <= COMPATIBLE_TOL {
            -1.0
        } else {
            return Err(Error::Invalid(format!(
                "coefficients {a:?} have squared norm {m}, expected ±1"
            )));
        };
        Self::new(a.map(ScalarExpr::constant), eps)
    }

    pub fn coefficients_at(&self, p: &Point) -> Result<[f64; 3]> {
        self.element.eval(p)
    }

    /// Coefficients at `p` after checking the invariant.
    pub fn checked_at(&self, p: &Point) -> Result<[f64; 3]> {
        let a = self.coefficients_at(p)?;
        let defect = (metric(a, a) - self.eps).abs();
        if defect > COMPATIBLE_TOL {
            return Err(Error::Invalid(format!(
                "compatible structure squares to {}·Id instead of {}·Id (defect {defect:e})",
                metric(a, a),
                self.eps
            ))
            .at_point(&p.coords));
        }
        Ok(a)
    }

    pub fn endomorphism(&self, h: &PqStructure) -> EndomorphismField {
        h.element(&self.element.coeffs)
    }

    /// Value and partials of the endomorphism at `p`.
    pub fn jet(&self, jet: &StructureJet) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
        let n = jet.n();
        let coords = &jet.coords;
        let mut vals = Vec::with_capacity(3 * (n + 1));
        let tape = crate::expr::Tape::compile(self.element.coeffs.iter());
        let a = tape.eval(coords).map_err(|e| e.at_point(coords))?;
        for c in &self.element.coeffs {
            let row: Vec<ScalarExpr> = (0..n).map(|k| crate::expr::differentiate(c, k)).collect();
            vals.push(crate::expr::Tape::compile(&row).eval(coords).map_err(|e| e.at_point(coords))?);
        }
        let value = jet.element([a[0], a[1], a[2]]);
        let d = (0..n)
            .map(|k| {
                let mut m = jet.element_partial([a[0], a[1], a[2]], k);
                for i in 0..3 {
                    m += &jet.j[i] * vals[i][k];
                }
                m
            })
            .collect();
        Ok((value, d))
    }
}

fn square_check(j: &DMatrix<f64>, at: &[f64]) -> Result<()> {
    let n = j.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let sq = j * j;
    let defect = (&sq - &id).amax().min((&sq + &id).amax());
    if defect > 1e-8 {
        return Err(Error::Invalid(format!("J² is not ±Id (defect {defect:e})")).at_point(at));
    }
    Ok(())
}

fn pair_max(t: &Tensor3, pairs: &[(DVector<f64>, DVector<f64>)]) -> f64 {
    pairs.iter().map(|(x, y)| t.apply(x, y).amax()).fold(0.0, f64::max)
}

/// Largest `|N_J(X, Y)|` over samples and random tangent pairs.
pub fn is_integrable(j: &EndomorphismField, samples: &[Point], cfg: &CheckConfig) -> Result<IntegrabilityReport> {
    let mut report = IntegrabilityReport::new("is_integrable", cfg.tol, samples);
    let mut worst = report::Worst::default();
    for (idx, p) in samples.iter().enumerate() {
        let jet = j.jet(&p.coords).map_err(|e| e.at_point(&p.coords))?;
        square_check(&jet.value, &p.coords)?;
        let nij = nijenhuis_at(&jet.value, &jet.d);
        worst.update(pair_max(&nij, &tangent_pairs(j.dim(), cfg, idx)), p);
    }
    report.push_checked("nijenhuis", worst);
    Ok(report.finish())
}

/// `is_integrable` for a compatible structure, after checking its invariant.
pub fn is_integrable_compatible(
    h: &PqStructure,
    s: &CompatibleStructure,
    samples: &[Point],
    cfg: &CheckConfig,
) -> Result<IntegrabilityReport> {
    let mut report = IntegrabilityReport::new("is_integrable", cfg.tol, samples);
    let mut worst = report::Worst::default();
    for (idx, p) in samples.iter().enumerate() {
        s.checked_at(p)?;
        let jet = h.jet(p)?;
        let (value, d) = s.jet(&jet)?;
        let nij = nijenhuis_at(&value, &d);
        worst.update(pair_max(&nij, &tangent_pairs(h.dim(), cfg, idx)), p);
    }
    report.push_checked("nijenhuis", worst);
    Ok(report.finish())
}

/// Para-quaternionic verdict from `max ‖T^P‖`. The informational
/// `fol_obstruction` entry is the least-squares residual of
/// `T^H ≈ δ(Σ α_i ⊗ J_i + α ⊗ Id)`, which vanishes exactly when `T^P` does.
pub fn quaternionicity_witness(h: &PqStructure, samples: &[Point], cfg: &CheckConfig) -> Result<IntegrabilityReport> {
    if samples.is_empty() {
        return Err(Error::HypothesisRegionEmpty("no admissible sample points".into()));
    }
    let mut report = IntegrabilityReport::new("quaternionicity_witness", cfg.tol, samples);
    let mut tp = report::Worst::default();
    let mut least = f64::INFINITY;
    let mut obstruction = report::Worst::default();
    for p in samples {
        let jet = h.jet(p)?;
        let v = tp_from_jet(&jet).amax();
        least = least.min(v);
        tp.update(v, p);
        obstruction.update(fol_obstruction(&jet), p);
    }
    report.push_checked("tp_norm", tp);
    report.push_info("tp_norm_min", least, None);
    report.push_info("fol_obstruction", obstruction.value, obstruction.point);
    Ok(report.finish())
}

/// Residual of the best fit `T^H ≈ δ(Σ α_i ⊗ J_i + α ⊗ Id)` at one point.
pub fn fol_obstruction(jet: &StructureJet) -> f64 {
    let n = jet.n();
    let mats = [
        jet.j[0].clone(),
        jet.j[1].clone(),
        jet.j[2].clone(),
        DMatrix::identity(n, n),
    ];
    delta_fit(&mats, &th_from_jet(jet)).1
}

/// Which hypothesis pattern of the three-case theorem a family satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SugCase {
    /// Two independent structures, one of them complex.
    ComplexPair,
    /// Two para-complex structures spanning a non-degenerate plane.
    NonDegeneratePair,
    /// Three pairwise independent para-complex structures, dependent, with
    /// all pairwise spans degenerate.
    DegenerateTriple,
}

impl SugCase {
    pub fn number(self) -> usize {
        match self {
            SugCase::ComplexPair => 1,
            SugCase::NonDegeneratePair => 2,
            SugCase::DegenerateTriple => 3,
        }
    }
}

fn independent(a: [f64; 3], b: [f64; 3]) -> bool {
    let c = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    c.iter().map(|x| x.abs()).fold(0.0, f64::max) > GEOMETRIC_TOL
}

fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Gram determinant of span{a, b}; zero exactly for degenerate planes.
fn gram(a: [f64; 3], b: [f64; 3]) -> f64 {
    metric(a, a) * metric(b, b) - metric(a, b).powi(2)
}

/// Violation of a case hypothesis for the given members at one point
/// (zero when it holds).
fn case_violation(case: SugCase, members: &[usize], coeffs: &[[f64; 3]], eps: &[f64]) -> f64 {
    let c = |i: usize| coeffs[members[i]];
    let e = |i: usize| eps[members[i]];
    let indep = |a: [f64; 3], b: [f64; 3]| -> f64 {
        if independent(a, b) {
            0.0
        } else {
            1.0
        }
    };
    match case {
        SugCase::ComplexPair => {
            let complex: f64 = if e(0) < 0.0 || e(1) < 0.0 { 0.0 } else { 1.0 };
            indep(c(0), c(1)).max(complex)
        }
        SugCase::NonDegeneratePair => {
            let para: f64 = if e(0) > 0.0 && e(1) > 0.0 { 0.0 } else { 1.0 };
            let g = gram(c(0), c(1)).abs();
            let nondeg = if g > GEOMETRIC_TOL { 0.0 } else { 1.0 - g };
            indep(c(0), c(1)).max(para).max(nondeg)
        }
        SugCase::DegenerateTriple => {
            let para: f64 = if (0..3).all(|i| e(i) > 0.0) { 0.0 } else { 1.0 };
            let mut v = para;
            for (i, k) in [(0, 1), (0, 2), (1, 2)] {
                v = v.max(indep(c(i), c(k))).max(gram(c(i), c(k)).abs());
            }
            v.max(det3(c(0), c(1), c(2)).abs())
        }
    }
}

/// Decides which of the three sufficient cases for para-quaternionicity the
/// given structures satisfy at every sample, and cross-checks `T^P ≈ 0`
/// when one does. Every structure must be integrable.
pub fn theorem_sug_classify(
    h: &PqStructure,
    structures: &[CompatibleStructure],
    samples: &[Point],
    cfg: &CheckConfig,
) -> Result<IntegrabilityReport> {
    if structures.len() < 2 {
        return Err(Error::Invalid("at least two compatible structures are required".into()));
    }
    let mut report = IntegrabilityReport::new("theorem_sug_classify", cfg.tol, samples);
    for (k, s) in structures.iter().enumerate() {
        let r = is_integrable_compatible(h, s, samples, cfg)?;
        let w = r.residuals[0].clone();
        report.push_checked(&format!("nijenhuis_I{}", k + 1), report::Worst::from_residual(&w));
    }
    let coeffs: Vec<Vec<[f64; 3]>> = samples
        .iter()
        .map(|p| structures.iter().map(|s| s.checked_at(p)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let eps: Vec<f64> = structures.iter().map(|s| s.eps).collect();
    let count = structures.len();
    let mut pairs = Vec::new();
    for a in 0..count {
        for b in (a + 1)..count {
            pairs.push(vec![a, b]);
        }
    }
    let mut triples = Vec::new();
    for a in 0..count {
        for b in (a + 1)..count {
            for c in (b + 1)..count {
                triples.push(vec![a, b, c]);
            }
        }
    }
    let candidates = [
        (SugCase::ComplexPair, &pairs),
        (SugCase::NonDegeneratePair, &pairs),
        (SugCase::DegenerateTriple, &triples),
    ];
    let mut found = None;
    let mut least = f64::INFINITY;
    'search: for (case, sets) in candidates {
        for members in sets.iter() {
            let v = coeffs
                .iter()
                .map(|c| case_violation(case, members, c, &eps))
                .fold(0.0, f64::max);
            least = least.min(v);
            if v == 0.0 {
                found = Some((case, members.clone()));
                break 'search;
            }
        }
    }
    let mut tp = report::Worst::default();
    for p in samples {
        tp.update(tp_from_jet(&h.jet(p)?).amax(), p);
    }
    match found {
        Some((case, members)) => {
            let names: Vec<String> = members.iter().map(|m| format!("I{}", m + 1)).collect();
            report.case = Some(case);
            report.notes.push(format!("case {} applies with {}", case.number(), names.join(", ")));
            report.push_checked("tp_norm", tp);
        }
        None => {
            report.notes.push("no case applies".into());
            if let Some(first) = coeffs.first() {
                for a in 0..count {
                    for b in (a + 1)..count {
                        report.notes.push(format!(
                            "<I{},I{}> = {:.12} at {:?}",
                            a + 1,
                            b + 1,
                            metric(first[a], first[b]),
                            samples[0].coords
                        ));
                    }
                }
            }
            report.push_failed("case_hypotheses", least, None);
            report.push_info("tp_norm", tp.value, tp.point);
        }
    }
    Ok(report.finish())
}
