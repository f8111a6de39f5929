//! Dispatch from validated check entries to the core operations.

use pq_core::connections::obata;
use pq_core::expr::Point;
use pq_core::geometry::{admissible_basis_check, OneForm};
use pq_core::integrability::{
    is_integrable_compatible, lemma_pe_check, pde_residual, proof_identity_suite, quaternionicity_witness,
    theorem_sug_classify, CheckConfig, CheckResidual, CheckStatus, IntegrabilityReport, Verdict,
};
use pq_core::twistorspace::{fiber_sample, minimal_independence, tautological_section_check, twistor_nijenhuis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::{compatible, CheckKind, CheckSpec, Plan};

fn residual(name: &str, value: f64, tol: f64, point: Option<Vec<f64>>) -> CheckResidual {
    CheckResidual {
        name: name.to_string(),
        value,
        status: if value <= tol { CheckStatus::Pass } else { CheckStatus::Fail },
        worst_point: point,
        detail: None,
    }
}

fn assemble(check: &str, tol: f64, residuals: Vec<CheckResidual>, samples: Vec<Vec<f64>>, notes: Vec<String>) -> IntegrabilityReport {
    let failed = residuals.iter().any(|r| r.status == CheckStatus::Fail);
    IntegrabilityReport {
        check: check.to_string(),
        verdict: if failed { Verdict::Fail } else { Verdict::Pass },
        tol,
        residuals,
        samples,
        case: None,
        notes,
    }
}

/// Joins reports of one check run under several settings; residual names
/// get the setting as a suffix.
fn merge(check: &str, tol: f64, parts: Vec<(String, IntegrabilityReport)>) -> IntegrabilityReport {
    let mut residuals = Vec::new();
    let mut samples = Vec::new();
    let mut notes = Vec::new();
    for (tag, r) in parts {
        for mut c in r.residuals {
            c.name = format!("{}[{tag}]", c.name);
            residuals.push(c);
        }
        samples.extend(r.samples);
        notes.extend(r.notes.into_iter().map(|n| format!("[{tag}] {n}")));
    }
    assemble(check, tol, residuals, samples, notes)
}

fn coords(points: &[Point]) -> Vec<Vec<f64>> {
    points.iter().map(|p| p.coords.clone()).collect()
}

fn eps_tag(eps: f64) -> String {
    if eps < 0.0 { "eps=-1".into() } else { "eps=+1".into() }
}

pub fn run_check(plan: &Plan, spec: &CheckSpec) -> pq_core::Result<IntegrabilityReport> {
    let h = &plan.structure;
    let pts = &plan.points;
    let cfg = CheckConfig::new(spec.tol).with_seed(plan.seed);
    let bad = |e: crate::scenario::ValidationError| pq_core::Error::Invalid(e.0);
    match &spec.kind {
        CheckKind::QuaternionicityWitness {} => quaternionicity_witness(h, pts, &cfg),
        CheckKind::LemmaPeCheck {} => lemma_pe_check(h, pts, &cfg),
        CheckKind::ProofIdentitySuite {} => proof_identity_suite(h, pts, &cfg),
        CheckKind::AdmissibleBasisCheck {} => {
            let r = admissible_basis_check(h, pts, spec.tol)?;
            let res = [
                ("j1_squared", r.j1_squared),
                ("j2_squared", r.j2_squared),
                ("j3_squared", r.j3_squared),
                ("anticommute", r.anticommute),
                ("product", r.product),
                ("trace", r.trace),
            ]
            .into_iter()
            .map(|(n, v)| residual(n, v, spec.tol, None))
            .collect();
            Ok(assemble("admissible_basis_check", spec.tol, res, coords(pts), vec![]))
        }
        CheckKind::PdeResidual {} => {
            let f = plan.frame.as_ref().expect("validated: diagonal frame present");
            let mut worst = (0.0f64, None);
            for p in pts {
                let v = pde_residual(h.chart(), f, p)?;
                if worst.1.is_none() || v > worst.0 || v.is_nan() {
                    worst = (v, Some(p.coords.clone()));
                }
            }
            let res = vec![residual("pde", worst.0, spec.tol, worst.1)];
            Ok(assemble("pde_residual", spec.tol, res, coords(pts), vec![]))
        }
        CheckKind::IsIntegrable { structure } => {
            let s = compatible(structure, h, &plan.registry).map_err(bad)?;
            is_integrable_compatible(h, &s, pts, &cfg)
        }
        CheckKind::TheoremSugClassify { structures } => {
            let list = structures
                .iter()
                .map(|s| compatible(s, h, &plan.registry))
                .collect::<Result<Vec<_>, _>>()
                .map_err(bad)?;
            theorem_sug_classify(h, &list, pts, &cfg)
        }
        CheckKind::TautologicalSectionCheck { structure } => {
            let s = compatible(structure, h, &plan.registry).map_err(bad)?;
            tautological_section_check(h, &s, pts, &cfg)
        }
        CheckKind::TwistorNijenhuis {
            eps,
            base_points,
            fiber_points,
        } => {
            let mut parts = Vec::new();
            for &e in eps {
                let mut fps = Vec::new();
                for (i, p) in pts.iter().take(*base_points).enumerate() {
                    fps.extend(fiber_sample(e, p, *fiber_points, plan.seed.wrapping_add(i as u64))?);
                }
                parts.push((eps_tag(e), twistor_nijenhuis(h, &fps, &cfg)?));
            }
            Ok(merge("twistor_nijenhuis", spec.tol, parts))
        }
        CheckKind::MinimalIndependence { alphas, base_points } => {
            let n = h.dim();
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
            let forms: Vec<OneForm> = (0..*alphas)
                .map(|_| OneForm::constant(&(0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()))
                .collect();
            let mut parts = Vec::new();
            for (i, p) in pts.iter().take(*base_points).enumerate() {
                // make sure the structure admits a connection here before sampling the fiber
                obata(h, p)?;
                for e in [-1.0, 1.0] {
                    let fp = fiber_sample(e, p, 1, plan.seed.wrapping_add(i as u64))?.remove(0);
                    parts.push((format!("{}#{i}", eps_tag(e)), minimal_independence(h, &fp, &forms, spec.tol)?));
                }
            }
            Ok(merge("minimal_independence", spec.tol, parts))
        }
    }
}
