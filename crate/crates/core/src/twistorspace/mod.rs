//! Twistor (`ε = −1`) and reflector (`ε = +1`) spaces of an almost
//! para-quaternionic structure and their canonical almost ε-complex
//! structures.
//!
//! The admissible basis trivializes the bundle, so the total space is
//! `M × Q_ε` with `Q_ε = {a : −a1² + a2² + a3² = ε}` sitting inside the
//! ambient space `M × R³`. Tangent vectors are pairs `(ξ, ȧ)` with
//! `⟨a, ȧ⟩ = 0`. The horizontal lift of `ξ` through a connection with fiber
//! form `ω` is `(ξ, −ω_ξ a)`; the structure sends it to the lift of `Aξ`,
//! and acts on vertical vectors by left multiplication with `A`.
//!
//! The structure is written as an endomorphism of the ambient tangent
//! space that preserves `TZ` along `Z`. Derivatives are then taken along
//! straight ambient lines, which agree with intrinsic derivatives to the
//! order of the difference scheme, so no quadric charts are needed.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::connections::{fiber_form, minimal_fast, minimal_from, obata, ConnectionJet};
use crate::error::{Error, Result};
use crate::expr::{differentiate, ChartId, Point, Tape};
use crate::geometry::{metric, OneForm, PqStructure};
use crate::integrability::report::Worst;
use crate::integrability::{
    is_integrable_compatible, tangent_pairs, CheckConfig, CompatibleStructure, IntegrabilityReport,
};
use crate::tensorcalc::tp_from_jet;

/// Defect allowed in `−a1² + a2² + a3² = ε`.
pub const QUADRIC_TOL: f64 = 1e-12;
/// Difference step for derivatives of the structure on the total space.
pub const FD_STEP: f64 = 1e-4;
/// Bound on `‖T^P‖` below which the tautological-section test applies.
pub const FLATNESS_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct FiberPoint {
    pub base: Point,
    /// `A = a1 J1 + a2 J2 + a3 J3`.
    pub coeffs: [f64; 3],
    pub eps: f64,
}

impl FiberPoint {
    pub fn new(base: Point, coeffs: [f64; 3], eps: f64) -> Result<Self> {
        if eps != 1.0 && eps != -1.0 {
            return Err(Error::Invalid(format!("sign must be ±1, got {eps}")));
        }
        let scale = coeffs.iter().map(|c| c * c).sum::<f64>().max(1.0);
        let defect = (metric(coeffs, coeffs) - eps).abs();
        if defect > QUADRIC_TOL * scale {
            return Err(Error::Invalid(format!(
                "coefficients {coeffs:?} miss the quadric of sign {eps} by {defect:e}"
            )));
        }
        Ok(FiberPoint { base, coeffs, eps })
    }

    /// Base coordinates followed by the fiber coefficients.
    pub fn total_coords(&self) -> Vec<f64> {
        let mut v = self.base.coords.clone();
        v.extend_from_slice(&self.coeffs);
        v
    }

    fn total_point(&self) -> Point {
        let id = ChartId::new(&format!("{}+fiber", self.base.chart.as_str()));
        Point::new(id, self.total_coords())
    }

    /// Projection of the ambient tangent space onto `TZ`, along `(0, a)`.
    pub fn tangent_projector(&self) -> DMatrix<f64> {
        let n = self.base.dim();
        let mut p = DMatrix::identity(n + 3, n + 3);
        let a = self.coeffs;
        let g = [-1.0, 1.0, 1.0];
        for r in 0..3 {
            for c in 0..3 {
                p[(n + r, n + c)] -= self.eps * a[r] * g[c] * a[c];
            }
        }
        p
    }
}

/// A tangent vector of the total space.
#[derive(Clone, Debug, PartialEq)]
pub struct TotalTangent {
    pub horizontal: DVector<f64>,
    /// `(ȧ1, ȧ2, ȧ3)`, orthogonal to the fiber point.
    pub vertical: [f64; 3],
}

impl TotalTangent {
    pub fn new(fp: &FiberPoint, horizontal: DVector<f64>, vertical: [f64; 3]) -> Result<Self> {
        if horizontal.len() != fp.base.dim() {
            return Err(Error::Dimension {
                expected: fp.base.dim(),
                found: horizontal.len(),
            });
        }
        let scale = 1.0 + vertical.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let d = metric(fp.coeffs, vertical);
        if d.abs() > 1e-10 * scale {
            return Err(Error::Invalid(format!("vertical part leaves the quadric (⟨a, ȧ⟩ = {d:e})")));
        }
        Ok(TotalTangent { horizontal, vertical })
    }

    /// Ambient vector projected onto the tangent space at `fp`.
    pub fn projected(fp: &FiberPoint, v: &DVector<f64>) -> Self {
        Self::from_ambient(&(fp.tangent_projector() * v))
    }

    pub fn to_ambient(&self) -> DVector<f64> {
        let n = self.horizontal.len();
        DVector::from_fn(n + 3, |r, _| if r < n { self.horizontal[r] } else { self.vertical[r - n] })
    }

    fn from_ambient(v: &DVector<f64>) -> Self {
        let n = v.len() - 3;
        TotalTangent {
            horizontal: v.rows(0, n).into_owned(),
            vertical: [v[n], v[n + 1], v[n + 2]],
        }
    }
}

/// `(Σ u_i J_i)(Σ v_j J_j) = ⟨u, v⟩ Id + Σ w_k J_k`; returns `w`.
pub fn fiber_product(u: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    [
        u[2] * v[1] - u[1] * v[2],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

/// Seeded points on the quadric of sign `eps` above `p`.
///
/// `ε = −1` uses the graph `a1 = ±√(1 + b² + c²)` over `(b, c)`; `ε = +1`
/// uses `(a1, θ) ↦ (a1, r cos θ, r sin θ)` with `r = √(1 + a1²)`, which
/// covers the one-sheeted hyperboloid without seams.
pub fn fiber_sample(eps: f64, p: &Point, count: usize, seed: u64) -> Result<Vec<FiberPoint>> {
    if count == 0 {
        return Err(Error::Invalid("fiber sample count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = if eps < 0.0 {
                let b: f64 = rng.gen_range(-1.5..1.5);
                let c: f64 = rng.gen_range(-1.5..1.5);
                let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                [s * (1.0 + b * b + c * c).sqrt(), b, c]
            } else {
                let a1: f64 = rng.gen_range(-1.5..1.5);
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = (1.0 + a1 * a1).sqrt();
                [a1, r * t.cos(), r * t.sin()]
            };
            FiberPoint::new(p.clone(), a, eps)
        })
        .collect()
}

/// The structure at fiber coefficients `a` over the point of `c`, as an
/// endomorphism of the ambient tangent space (base block first).
fn assemble(c: &ConnectionJet, a: [f64; 3]) -> Result<DMatrix<f64>> {
    let form = fiber_form(c)?;
    let n = c.n();
    let big_a = c.structure.element(a);
    let av = Vector3::from(a);
    let mut m = DMatrix::zeros(n + 3, n + 3);
    for k in 0..n {
        let ax = big_a.column(k).into_owned();
        let lift = form.along(&ax) * av;
        let wk = form.matrix(k) * av;
        let turn = fiber_product(a, [wk[0], wk[1], wk[2]]);
        for r in 0..n {
            m[(r, k)] = big_a[(r, k)];
        }
        for i in 0..3 {
            m[(n + i, k)] = turn[i] - lift[i];
        }
    }
    for i in 0..3 {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        let col = fiber_product(a, e);
        for r in 0..3 {
            m[(n + r, n + i)] = col[r];
        }
    }
    Ok(m)
}

fn check_base(c: &ConnectionJet, fp: &FiberPoint) -> Result<()> {
    if c.point.coords != fp.base.coords {
        return Err(Error::Invalid("connection and fiber point sit over different base points".into()));
    }
    Ok(())
}

/// Ambient matrix of the structure at `fp` built from the connection `c`.
pub fn twistor_matrix(c: &ConnectionJet, fp: &FiberPoint) -> Result<DMatrix<f64>> {
    check_base(c, fp)?;
    assemble(c, fp.coeffs)
}

#[allow(non_snake_case)]
pub fn twistor_J(c: &ConnectionJet, fp: &FiberPoint, v: &TotalTangent) -> Result<TotalTangent> {
    let m = twistor_matrix(c, fp)?;
    Ok(TotalTangent::from_ambient(&(m * v.to_ambient())))
}

/// `max |(𝒥² − ε Id) v|` over tangent vectors, and the trace of `𝒥` on `TZ`.
pub fn square_and_trace(c: &ConnectionJet, fp: &FiberPoint) -> Result<(f64, f64)> {
    let m = twistor_matrix(c, fp)?;
    let p = fp.tangent_projector();
    let sq = (&m * &m * &p - &p * fp.eps).amax();
    Ok((sq, (&m * &p).trace()))
}

/// Derivatives of the assembled structure along the ambient coordinates.
fn ambient_derivatives(h: &PqStructure, fp: &FiberPoint, base: &ConnectionJet, step: f64) -> Result<Vec<DMatrix<f64>>> {
    let n = h.dim();
    let zero = OneForm::zero(n);
    let mut out = Vec::with_capacity(n + 3);
    for k in 0..n {
        let plus = minimal_fast(h, &fp.base.shifted(k, step), &zero)?;
        let minus = minimal_fast(h, &fp.base.shifted(k, -step), &zero)?;
        out.push((assemble(&plus, fp.coeffs)? - assemble(&minus, fp.coeffs)?) / (2.0 * step));
    }
    for i in 0..3 {
        let mut ap = fp.coeffs;
        let mut am = fp.coeffs;
        ap[i] += step;
        am[i] -= step;
        out.push((assemble(base, ap)? - assemble(base, am)?) / (2.0 * step));
    }
    Ok(out)
}

/// `N(X, Y) = (D_{JX}J)Y − (D_{JY}J)X − J(D_XJ)Y + J(D_YJ)X` for a flat
/// ambient derivative `D`; valid on `TZ` because `J² = ε` there.
fn nijenhuis_pair(j: &DMatrix<f64>, d: &[DMatrix<f64>], x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    let dir = |v: &DVector<f64>| {
        let mut acc = DMatrix::zeros(j.nrows(), j.ncols());
        for (k, dk) in d.iter().enumerate() {
            if v[k] != 0.0 {
                acc += dk * v[k];
            }
        }
        acc
    };
    let jx = j * x;
    let jy = j * y;
    dir(&jx) * y - dir(&jy) * x - j * (dir(x) * y) + j * (dir(y) * x)
}

fn max_nijenhuis(j: &DMatrix<f64>, d: &[DMatrix<f64>], pairs: &[(DVector<f64>, DVector<f64>)]) -> f64 {
    pairs
        .iter()
        .map(|(x, y)| nijenhuis_pair(j, d, x, y).amax())
        .fold(0.0, f64::max)
}

/// Numerical Nijenhuis tensor of the canonical structure at each fiber
/// point, from a minimal connection recomputed at every stencil node.
///
/// Central differences use [`FD_STEP`]; a value within a factor 10 of the
/// tolerance triggers Richardson extrapolation with half the step.
pub fn twistor_nijenhuis(h: &PqStructure, fps: &[FiberPoint], cfg: &CheckConfig) -> Result<IntegrabilityReport> {
    if fps.is_empty() {
        return Err(Error::Invalid("no fiber points".into()));
    }
    let samples: Vec<Point> = fps.iter().map(FiberPoint::total_point).collect();
    let mut report = IntegrabilityReport::new("twistor_nijenhuis", cfg.tol, &samples);
    let n = h.dim();
    let zero = OneForm::zero(n);
    let mut worst = Worst::default();
    let mut square = Worst::default();
    let mut refined = 0usize;
    for (idx, (fp, tp)) in fps.iter().zip(&samples).enumerate() {
        let base = minimal_fast(h, &fp.base, &zero).map_err(|e| e.at_point(&fp.base.coords))?;
        let j = twistor_matrix(&base, fp)?;
        let proj = fp.tangent_projector();
        square.update((&j * &j * &proj - &proj * fp.eps).amax(), tp);
        let pairs: Vec<_> = tangent_pairs(n + 3, cfg, idx)
            .into_iter()
            .map(|(x, y)| (&proj * x, &proj * y))
            .collect();
        let coarse = ambient_derivatives(h, fp, &base, FD_STEP)?;
        let mut value = max_nijenhuis(&j, &coarse, &pairs);
        if value > cfg.tol / 10.0 && value <= cfg.tol * 10.0 {
            let fine = ambient_derivatives(h, fp, &base, FD_STEP / 2.0)?;
            let extrapolated: Vec<DMatrix<f64>> =
                fine.iter().zip(&coarse).map(|(f, c)| (f * 4.0 - c) / 3.0).collect();
            value = max_nijenhuis(&j, &extrapolated, &pairs);
            refined += 1;
        }
        worst.update(value, tp);
    }
    report.push_checked("nijenhuis", worst);
    report.push_info("square_defect", square.value, square.point);
    if refined > 0 {
        report
            .notes
            .push(format!("richardson extrapolation at {refined} fiber point(s)"));
    }
    Ok(report.finish())
}

/// Compares the structures built from the minimal connections for `α = 0`
/// and for each of `alphas` on the tangent space at `fp`.
pub fn minimal_independence(
    h: &PqStructure,
    fp: &FiberPoint,
    alphas: &[OneForm],
    tol: f64,
) -> Result<IntegrabilityReport> {
    let tp = fp.total_point();
    let mut report = IntegrabilityReport::new("minimal_independence", tol, std::slice::from_ref(&tp));
    let ob = obata(h, &fp.base)?;
    let reference = minimal_from(&ob, &OneForm::zero(h.dim()))?;
    let m0 = twistor_matrix(&reference, fp)?;
    let w0 = fiber_form(&reference)?;
    let proj = fp.tangent_projector();
    let mut worst = Worst::default();
    worst.update(0.0, &tp);
    let mut shift = 0.0f64;
    for alpha in alphas {
        let c = minimal_from(&ob, alpha)?;
        let m = twistor_matrix(&c, fp)?;
        worst.update(((&m - &m0) * &proj).amax(), &tp);
        let w = fiber_form(&c)?;
        for k in 0..h.dim() {
            shift = shift.max((w.matrix(k) - w0.matrix(k)).amax());
        }
    }
    report.push_checked("discrepancy", worst);
    // how far the horizontal distributions moved; nonzero means the
    // comparison is not vacuous
    report.push_info("fiber_form_shift", shift, None);
    Ok(report.finish())
}

/// Stability of the image of the section `p ↦ s(p)` under the canonical
/// structure, compared with the integrability of `s`.
///
/// At `p` the image has tangent vectors `(ξ, da(ξ))`; stability asks that
/// `𝒥(ξ, da(ξ)) = (Aξ, da(Aξ))`. Both tests are exact in the jets.
pub fn tautological_section_check(
    h: &PqStructure,
    s: &CompatibleStructure,
    samples: &[Point],
    cfg: &CheckConfig,
) -> Result<IntegrabilityReport> {
    if samples.is_empty() {
        return Err(Error::HypothesisRegionEmpty("no sample points".into()));
    }
    let mut report = IntegrabilityReport::new("tautological_section_check", cfg.tol, samples);
    let n = h.dim();
    let mut tp = Worst::default();
    for p in samples {
        tp.update(tp_from_jet(&h.jet(p)?).amax(), p);
    }
    if tp.value > FLATNESS_TOL {
        report.push_unmet("agreement", "T^P = 0", tp.value, tp.point);
        return Ok(report.finish());
    }
    let partials: Vec<_> = s
        .element
        .coeffs
        .iter()
        .flat_map(|c| (0..n).map(move |k| differentiate(c, k)))
        .collect();
    let tape = Tape::compile(&partials);
    let zero = OneForm::zero(n);
    let mut stability = Worst::default();
    for p in samples {
        let a = s.checked_at(p)?;
        let fp = FiberPoint::new(p.clone(), a, s.eps)?;
        let da = tape.eval(&p.coords).map_err(|e| e.at_point(&p.coords))?;
        let c = minimal_fast(h, p, &zero)?;
        let j = twistor_matrix(&c, &fp)?;
        // section differential as an (n+3) × n matrix
        let sd = DMatrix::from_fn(n + 3, n, |r, k| {
            if r < n {
                if r == k { 1.0 } else { 0.0 }
            } else {
                da[(r - n) * n + k]
            }
        });
        let big_a = c.structure.element(a);
        stability.update((&j * &sd - &sd * &big_a).amax(), p);
    }
    let integ = is_integrable_compatible(h, s, samples, cfg)?;
    let nij = integ.residual("nijenhuis").map(|r| r.value).unwrap_or(f64::NAN);
    let stable = stability.value <= cfg.tol;
    let integrable = nij <= cfg.tol;
    report.push_info("stability", stability.value, stability.point.clone());
    report.push_info("nijenhuis", nij, integ.residual("nijenhuis").and_then(|r| r.worst_point.clone()));
    report.notes.push(format!(
        "section {}, structure {}",
        if stable { "stable" } else { "unstable" },
        if integrable { "integrable" } else { "not integrable" }
    ));
    let mut agreement = Worst::default();
    let value = if stable == integrable { 0.0 } else { stability.value.max(nij) };
    agreement.update(value, &samples[0]);
    report.push_checked("agreement", agreement);
    Ok(report.finish())
}
