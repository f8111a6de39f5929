//! Pointwise identities between Nijenhuis tensors, Nijenhuis brackets and
//! the torsion `T^H`, each evaluated under its own hypothesis.

use nalgebra::{DMatrix, DVector};

use super::frames::{eigen_frame, involutive_with_rank};
use super::report::{IntegrabilityReport, Worst};
use super::{is_integrable_compatible, tangent_pairs, CheckConfig, CompatibleStructure};
use crate::connections::obata_closed_form;
use crate::error::{Error, Result};
use crate::expr::Point;
use crate::geometry::{PqStructure, StructureJet, EPS};
use crate::tensorcalc::algebra::{bracket_at, delta, delta_fit, nijenhuis_at};
use crate::tensorcalc::{th_from_jet, Tensor3};

type V = DVector<f64>;

/// The compatible para-complex triple `J2`, `J1 + J2 + J3`, `J1 + J2 − J3`.
pub fn triple_for_lemma_pe() -> [CompatibleStructure; 3] {
    [[0.0, 1.0, 0.0], [1.0, 1.0, 1.0], [1.0, 1.0, -1.0]].map(|a| CompatibleStructure::constant(a).unwrap())
}

/// Everything the identities need at one point.
struct Ctx {
    n: usize,
    j: [DMatrix<f64>; 3],
    nij: [Tensor3; 3],
    br: [[Tensor3; 3]; 3],
    th: Tensor3,
    /// Torsion of the Obata connection.
    tor: Tensor3,
    /// Largest Nijenhuis tensor of the triple `I1, I2, I3`.
    triple: f64,
}

impl Ctx {
    fn new(jet: &StructureJet) -> Ctx {
        let nij = [0, 1, 2].map(|i| nijenhuis_at(&jet.j[i], &jet.dj[i]));
        let br = [0, 1, 2].map(|a| [0, 1, 2].map(|b| bracket_at(&jet.j[a], &jet.dj[a], &jet.j[b], &jet.dj[b])));
        let triple = triple_for_lemma_pe()
            .iter()
            .map(|s| {
                let a = s.element.coeffs.clone().map(|c| c.as_const().unwrap());
                let d: Vec<DMatrix<f64>> = (0..jet.n()).map(|k| jet.element_partial(a, k)).collect();
                nijenhuis_at(&jet.element(a), &d).amax()
            })
            .fold(0.0, f64::max);
        Ctx {
            n: jet.n(),
            j: jet.j.clone(),
            nij,
            br,
            th: th_from_jet(jet),
            tor: delta(&obata_closed_form(jet)),
            triple,
        }
    }

    fn jv(&self, i: usize, v: &V) -> V {
        &self.j[i] * v
    }

    fn nv(&self, i: usize, x: &V, y: &V) -> V {
        self.nij[i].apply(x, y)
    }

    fn t(&self, x: &V, y: &V) -> V {
        self.th.apply(x, y)
    }

    fn b(&self, a: usize, c: usize, x: &V, y: &V) -> V {
        self.br[a][c].apply(x, y)
    }

    /// `E(X, Y) = N1(J2X, J2Y) + N1(X, Y)`.
    fn e(&self, x: &V, y: &V) -> V {
        self.nv(0, &self.jv(1, x), &self.jv(1, y)) + self.nv(0, x, y)
    }

    /// `F(X, Y) = N1(J2X, Y) + N1(X, J2Y)`.
    fn f(&self, x: &V, y: &V) -> V {
        self.nv(0, &self.jv(1, x), y) + self.nv(0, x, &self.jv(1, y))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Hyp {
    None,
    J1,
    J2,
    Triple,
}

impl Hyp {
    fn describe(self) -> &'static str {
        match self {
            Hyp::None => "none",
            Hyp::J1 => "J1 integrable",
            Hyp::J2 => "J2 integrable",
            Hyp::Triple => "J2, J1+J2+J3, J1+J2-J3 integrable",
        }
    }

    fn value(self, c: &Ctx) -> f64 {
        match self {
            Hyp::None => 0.0,
            Hyp::J1 => c.nij[0].amax(),
            Hyp::J2 => c.nij[1].amax(),
            Hyp::Triple => c.triple.max(c.nij[1].amax()),
        }
    }
}

type Residual = Box<dyn Fn(&Ctx, &V, &V) -> V>;

struct Identity {
    name: String,
    hyp: Hyp,
    residual: Residual,
}

fn identity(name: impl Into<String>, hyp: Hyp, residual: impl Fn(&Ctx, &V, &V) -> V + 'static) -> Identity {
    Identity {
        name: name.into(),
        hyp,
        residual: Box::new(residual),
    }
}

fn cat(a: V, b: V) -> V {
    V::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

fn identities() -> Vec<Identity> {
    let [e1, e2, e3] = EPS;
    let mut out = Vec::new();
    for i in 0..3 {
        out.push(identity(format!("n_symmetry_J{}", i + 1), Hyp::None, move |c, x, y| {
            let jx = c.jv(i, x);
            let jy = c.jv(i, y);
            let a = c.nv(i, &jx, y);
            cat(&a - c.nv(i, x, &jy), &a + c.jv(i, &c.nv(i, x, y)))
        }));
    }
    for i in 0..3 {
        for k in 0..3 {
            if i == k {
                continue;
            }
            // J_i J_k = ±J_l and N is quadratic in J
            let l = 3 - i - k;
            let (ei, ek) = (EPS[i], EPS[k]);
            out.push(identity(format!("j12_J{}J{}", i + 1, k + 1), Hyp::None, move |c, x, y| {
                let (ix, iy, kx, ky) = (c.jv(i, x), c.jv(i, y), c.jv(k, x), c.jv(k, y));
                let rhs = c.nv(i, &kx, &ky) - c.nv(k, x, y) * ei - c.jv(i, &(c.nv(k, &ix, y) + c.nv(k, x, &iy)))
                    - c.nv(i, x, y) * ek
                    + c.nv(k, &ix, &iy)
                    - c.jv(k, &(c.nv(i, x, &ky) + c.nv(i, &kx, y)));
                c.nv(l, x, y) * 2.0 - rhs
            }));
        }
    }
    for a in 0..3 {
        for b in 0..3 {
            out.push(identity(format!("nijab_J{}J{}", a + 1, b + 1), Hyp::None, move |c, x, y| {
                let t = |u: &V, v: &V| c.tor.apply(u, v);
                let (ax, ay, bx, by) = (c.jv(a, x), c.jv(a, y), c.jv(b, x), c.jv(b, y));
                let anti = &c.j[a] * &c.j[b] + &c.j[b] * &c.j[a];
                let rhs = c.jv(a, &(t(&bx, y) + t(x, &by))) + c.jv(b, &(t(x, &ay) + t(&ax, y)))
                    - t(&ax, &by)
                    - t(&bx, &ay)
                    - anti * t(x, y);
                c.b(a, b, x, y) - rhs
            }));
        }
    }

    // J1 integrable
    out.push(identity("need", Hyp::J1, move |c, x, y| {
        c.t(x, y) + (c.nv(1, x, y) * e2 + c.nv(2, x, y) * e3) / 6.0
    }));
    out.push(identity("nj123", Hyp::J1, move |c, x, y| {
        let (ax, ay) = (c.jv(0, x), c.jv(0, y));
        let rhs = -c.nv(1, x, y) * e1 - c.jv(0, &(c.nv(1, &ax, y) + c.nv(1, x, &ay))) + c.nv(1, &ax, &ay);
        c.nv(2, x, y) * 2.0 - rhs
    }));
    out.push(identity("t", Hyp::J1, move |c, x, y| {
        let (ax, ay) = (c.jv(0, x), c.jv(0, y));
        let rhs = c.nv(1, x, y) * (3.0 * e2) - c.jv(0, &(c.nv(1, &ax, y) + c.nv(1, x, &ay))) * e3
            + c.nv(1, &ax, &ay) * e3;
        c.t(x, y) * -12.0 - rhs
    }));
    out.push(identity("integr_combo_J1", Hyp::J1, move |c, x, y| {
        let (ax, ay) = (c.jv(0, x), c.jv(0, y));
        let lhs = (c.t(&ax, y) + c.t(x, &ay)) * 6.0;
        let rhs = c.jv(0, &c.nv(1, &ax, &ay)) * e3
            - c.jv(0, &c.nv(1, x, y)) * e2
            - (c.nv(1, &ax, y) + c.nv(1, x, &ay)) * e2;
        lhs - rhs
    }));
    out.push(identity("integr_combo_J2", Hyp::J1, move |c, x, y| {
        let (ax, ay, bx, by) = (c.jv(0, x), c.jv(0, y), c.jv(1, x), c.jv(1, y));
        let lhs = (c.t(&bx, y) + c.t(x, &by)) * 6.0;
        let rhs = c.jv(1, &c.nv(1, x, y)) * (3.0 * e2) - c.jv(1, &c.nv(1, &ax, &ay)) * e3;
        lhs - rhs
    }));
    out.push(identity("integr_combo_J1J2", Hyp::J1, move |c, x, y| {
        let (ax, ay, bx, by) = (c.jv(0, x), c.jv(0, y), c.jv(1, x), c.jv(1, y));
        let lhs = (c.t(&ax, &by) + c.t(&bx, &ay)) * 6.0;
        let rhs = c.jv(1, &(c.nv(1, &ax, y) + c.nv(1, x, &ay))) * (2.0 * e2)
            + c.jv(2, &(c.nv(1, &ax, &ay) - c.nv(1, x, y) * e1)) * e3;
        lhs - rhs
    }));
    out.push(identity("integr_step_two", Hyp::J1, move |c, x, y| {
        let (ax, ay) = (c.jv(0, x), c.jv(0, y));
        let rhs = c.jv(2, &c.nv(1, x, y)) * e2 - c.jv(2, &c.nv(1, &ax, &ay)) * e3
            - c.jv(1, &(c.nv(1, &ax, y) + c.nv(1, x, &ay))) * e2;
        c.b(0, 1, x, y) * 2.0 - rhs
    }));

    // J2 integrable
    out.push(identity("tors", Hyp::J2, move |c, x, y| {
        c.t(x, y) + (c.nv(0, x, y) * e1 + c.nv(2, x, y) * e3) / 6.0
    }));
    out.push(identity("nun", Hyp::J2, |c, x, y| {
        let (bx, by) = (c.jv(1, x), c.jv(1, y));
        let rhs = c.nv(0, &bx, &by) - c.nv(0, x, y) - c.jv(1, &(c.nv(0, x, &by) + c.nv(0, &bx, y)));
        c.nv(2, x, y) * 2.0 - rhs
    }));
    out.push(identity("torsiunea", Hyp::J2, |c, x, y| {
        let (bx, by) = (c.jv(1, x), c.jv(1, y));
        let rhs = c.nv(0, x, y) * 3.0 - c.nv(0, &bx, &by) + c.jv(1, &(c.nv(0, x, &by) + c.nv(0, &bx, y)));
        c.t(x, y) * 12.0 - rhs
    }));
    out.push(identity("main1_combo_J1J2", Hyp::J2, |c, x, y| {
        let (ax, ay, bx, by) = (c.jv(0, x), c.jv(0, y), c.jv(1, x), c.jv(1, y));
        let lhs = (c.t(&ax, &by) + c.t(&bx, &ay)) * 6.0;
        let rhs = -c.jv(0, &c.f(x, y)) * 2.0 - c.jv(2, &(c.nv(0, &bx, &by) - c.nv(0, x, y)));
        lhs - rhs
    }));
    out.push(identity("main1_combo_J1J3", Hyp::J2, |c, x, y| {
        let (ax, ay, cx, cy) = (c.jv(0, x), c.jv(0, y), c.jv(2, x), c.jv(2, y));
        let lhs = (c.t(&ax, &cy) + c.t(&cx, &ay)) * 6.0;
        let rhs = -c.f(x, y) + c.jv(1, &c.e(x, y));
        lhs - rhs
    }));
    out.push(identity("main1_combo_J2J3", Hyp::J2, |c, x, y| {
        let (bx, by, cx, cy) = (c.jv(1, x), c.jv(1, y), c.jv(2, x), c.jv(2, y));
        let lhs = (c.t(&bx, &cy) + c.t(&cx, &by)) * 6.0;
        let rhs = -c.jv(0, &(c.nv(0, &bx, &by) * 3.0 + c.nv(0, x, y)));
        lhs - rhs
    }));
    out.push(identity("main1_combo_J1", Hyp::J2, |c, x, y| {
        let (ax, ay, bx, by) = (c.jv(0, x), c.jv(0, y), c.jv(1, x), c.jv(1, y));
        let lhs = (c.t(&ax, y) + c.t(x, &ay)) * 6.0;
        let rhs = -c.jv(0, &(c.nv(0, x, y) * 3.0 + c.nv(0, &bx, &by)));
        lhs - rhs
    }));
    out.push(identity("main1_combo_J2", Hyp::J2, |c, x, y| {
        let (bx, by) = (c.jv(1, x), c.jv(1, y));
        let lhs = (c.t(&bx, y) + c.t(x, &by)) * 6.0;
        let rhs = c.jv(1, &c.e(x, y)) + c.f(x, y);
        lhs - rhs
    }));
    out.push(identity("main1_combo_J3", Hyp::J2, |c, x, y| {
        let (bx, by, cx, cy) = (c.jv(1, x), c.jv(1, y), c.jv(2, x), c.jv(2, y));
        let lhs = (c.t(x, &cy) + c.t(&cx, y)) * 6.0;
        let rhs = -c.jv(0, &c.f(x, y)) * 2.0 + c.jv(2, &(c.nv(0, &bx, &by) - c.nv(0, x, y)));
        lhs - rhs
    }));
    out.push(identity("main1_bracket_J1J2", Hyp::J2, |c, x, y| {
        c.b(0, 1, x, y) * 2.0 - (c.jv(0, &c.f(x, y)) + c.jv(2, &c.e(x, y)))
    }));
    out.push(identity("main1_bracket_J1J3", Hyp::J2, |c, x, y| {
        c.b(0, 2, x, y) * 2.0 - (c.f(x, y) - c.jv(1, &c.e(x, y)))
    }));
    out.push(identity("main1_bracket_J2J3", Hyp::J2, |c, x, y| {
        c.b(1, 2, x, y) * 2.0 - (c.jv(0, &c.e(x, y)) + c.jv(2, &c.f(x, y)))
    }));
    out.push(identity("new", Hyp::J2, |c, x, y| {
        let (bx, by) = (c.jv(1, x), c.jv(1, y));
        let rhs = -c.nv(2, x, y) - c.jv(1, &(c.nv(2, &bx, y) + c.nv(2, x, &by))) + c.nv(2, &bx, &by);
        c.nv(0, x, y) * 2.0 - rhs
    }));

    // the triple I1, I2, I3 integrable
    out.push(identity("pe_relation_N1_N3", Hyp::Triple, |c, x, y| {
        c.nv(0, x, y) + c.nv(2, x, y) + c.b(0, 1, x, y)
    }));
    out.push(identity("pe_relation_brackets", Hyp::Triple, |c, x, y| {
        c.b(0, 2, x, y) + c.b(1, 2, x, y)
    }));
    out.push(identity("single", Hyp::Triple, |c, x, y| pe_single(c, x, y)));
    out.push(identity("nj1j2j33", Hyp::Triple, |c, x, y| pe_nj(c, x, y)));
    out.push(identity("j3_n3", Hyp::Triple, |c, x, y| pe_n3(c, x, y)));
    out
}

fn pe_single(c: &Ctx, x: &V, y: &V) -> V {
    let e = c.e(x, y);
    &e + c.jv(2, &e)
}

fn pe_nj(c: &Ctx, x: &V, y: &V) -> V {
    c.nv(0, &c.jv(2, x), &c.jv(2, y)) - c.jv(2, &c.nv(0, x, y))
}

fn pe_n3(c: &Ctx, x: &V, y: &V) -> V {
    c.jv(2, &c.nv(2, x, y)) - c.nv(2, x, y)
}

/// Equivalence modulo `δ(Σ α_i ⊗ J_i + α ⊗ Id)`: residual of the best fit.
fn modulo_residual(c: &Ctx, t: &Tensor3) -> f64 {
    let mats = [
        c.j[0].clone(),
        c.j[1].clone(),
        c.j[2].clone(),
        DMatrix::identity(c.n, c.n),
    ];
    delta_fit(&mats, t).1
}

/// Evaluates every identity of the suite on `samples`.
pub fn proof_identity_suite(h: &PqStructure, samples: &[Point], cfg: &CheckConfig) -> Result<IntegrabilityReport> {
    proof_identity_suite_with(h, None, samples, cfg)
}

/// As `proof_identity_suite`, adding the equivalences that hold when `J1`
/// and a second structure `I2 = a J1 + b J2` are integrable.
pub fn proof_identity_suite_with(
    h: &PqStructure,
    second: Option<&CompatibleStructure>,
    samples: &[Point],
    cfg: &CheckConfig,
) -> Result<IntegrabilityReport> {
    if samples.is_empty() {
        return Err(Error::Invalid("no sample points".into()));
    }
    let mut report = IntegrabilityReport::new("proof_identity_suite", cfg.tol, samples);
    let jets: Vec<StructureJet> = samples.iter().map(|p| h.jet(p)).collect::<Result<_>>()?;
    let ctxs: Vec<Ctx> = jets.iter().map(Ctx::new).collect();
    let pairs: Vec<_> = (0..samples.len()).map(|i| tangent_pairs(h.dim(), cfg, i)).collect();

    for id in identities() {
        let mut hyp = Worst::default();
        for (c, p) in ctxs.iter().zip(samples) {
            hyp.update(id.hyp.value(c), p);
        }
        if hyp.value > cfg.tol {
            report.push_unmet(&id.name, id.hyp.describe(), hyp.value, hyp.point);
            continue;
        }
        let mut w = Worst::default();
        for ((c, p), prs) in ctxs.iter().zip(samples).zip(&pairs) {
            for (x, y) in prs {
                w.update((id.residual)(c, x, y).amax(), p);
            }
        }
        report.push_checked(&id.name, w);
    }

    pe_chain(&mut report, &ctxs, samples, &pairs, cfg);
    if let Some(s) = second {
        second_structure(&mut report, h, s, &ctxs, &jets, samples, cfg)?;
    }
    Ok(report.finish())
}

/// The three equivalent conditions of the eigenbundle lemma, checked as
/// implications at every sample: when one side is below `tol` the others
/// must be below `10·tol`.
fn pe_chain(report: &mut IntegrabilityReport, ctxs: &[Ctx], samples: &[Point], pairs: &[Vec<(V, V)>], cfg: &CheckConfig) {
    let mut hyp = Worst::default();
    for (c, p) in ctxs.iter().zip(samples) {
        hyp.update(Hyp::J2.value(c), p);
    }
    if hyp.value > cfg.tol {
        report.push_unmet("pe_chain", Hyp::J2.describe(), hyp.value, hyp.point);
        return;
    }
    let conds: [fn(&Ctx, &V, &V) -> V; 3] = [pe_single, pe_nj, pe_n3];
    let mut w = Worst::default();
    let mut maxima = [0.0f64; 3];
    let mut triggered = 0;
    for ((c, p), prs) in ctxs.iter().zip(samples).zip(pairs) {
        let r = conds.map(|f| prs.iter().map(|(x, y)| f(c, x, y).amax()).fold(0.0, f64::max));
        for k in 0..3 {
            maxima[k] = maxima[k].max(r[k]);
        }
        for a in 0..3 {
            if r[a] > cfg.tol {
                continue;
            }
            triggered += 1;
            for b in 0..3 {
                if b != a {
                    w.update(r[b] / 10.0, p);
                }
            }
        }
    }
    report.push_checked("pe_chain", w);
    for (name, v) in ["single", "nj1j2j33", "j3_n3"].iter().zip(maxima) {
        report.push_info(&format!("pe_chain_{name}"), v, None);
    }
    if triggered == 0 {
        report.notes.push("pe_chain: no condition holds at any sample; implications vacuous".into());
    }
}

#[allow(clippy::too_many_arguments)]
fn second_structure(
    report: &mut IntegrabilityReport,
    h: &PqStructure,
    s: &CompatibleStructure,
    ctxs: &[Ctx],
    jets: &[StructureJet],
    samples: &[Point],
    cfg: &CheckConfig,
) -> Result<()> {
    const NAMES: [&str; 9] = [
        "ni2", "star", "star_divided", "r1", "r2", "clar", "n2_modulo", "n3_modulo", "th_modulo",
    ];
    let integ = is_integrable_compatible(h, s, samples, cfg)?;
    let mut hyp = Worst::default();
    let mut coeffs = Vec::new();
    for ((c, p), jet) in ctxs.iter().zip(samples).zip(jets) {
        let a = s.checked_at(p)?;
        coeffs.push(a);
        let (value, d) = s.jet(jet)?;
        let v = c.nij[0].amax().max(nijenhuis_at(&value, &d).amax()).max(a[2].abs());
        hyp.update(v, p);
    }
    if hyp.value > cfg.tol || !integ.passed() {
        for name in NAMES {
            report.push_unmet(name, "J1 and I2 = a J1 + b J2 integrable", hyp.value.max(integ.max_residual()), hyp.point.clone());
        }
        return Ok(());
    }
    let [e1, e2, e3] = EPS;
    let mut worst: Vec<Worst> = NAMES.iter().map(|_| Worst::default()).collect();
    let mut divided_samples = 0;
    for ((c, p), a) in ctxs.iter().zip(samples).zip(&coeffs) {
        let (aa, bb) = (a[0], a[1]);
        let id = DMatrix::identity(c.n, c.n);
        let n2 = &c.nij[1];
        let n2_11 = n2.precompose(&c.j[0], &c.j[0]);
        let n2_split = &n2.precompose(&c.j[0], &id) + &n2.precompose(&id, &c.j[0]);
        let star = &n2.scale(bb * bb) + &c.br[0][1].scale(aa * bb);
        let ni2 = &star + &c.nij[0].scale(aa * aa);
        let mut vals = vec![Some(modulo_residual(c, &ni2)), Some(modulo_residual(c, &star))];
        if aa.abs() >= 1e-6 {
            divided_samples += 1;
            let lead = n2.scale(-2.0 * bb / aa);
            let step_two = &(&n2.left(&c.j[2]).scale(e2) - &n2_11.left(&c.j[2]).scale(e3)) - &n2_split.left(&c.j[1]).scale(e2);
            let r1_rhs = &n2.left(&c.j[2]).scale(e2) - &n2_11.left(&c.j[2]).scale(e3);
            vals.push(Some(modulo_residual(c, &(&lead - &step_two))));
            vals.push(Some(modulo_residual(c, &(&lead - &r1_rhs))));
        } else {
            vals.push(None);
            vals.push(None);
        }
        vals.push(Some(modulo_residual(c, &n2_split)));
        vals.push(Some(modulo_residual(c, &(&n2_11 + &n2.scale(e1)))));
        vals.push(Some(modulo_residual(c, n2)));
        vals.push(Some(modulo_residual(c, &c.nij[2])));
        vals.push(Some(modulo_residual(c, &c.th)));
        for (w, v) in worst.iter_mut().zip(vals) {
            if let Some(v) = v {
                w.update(v, p);
            }
        }
    }
    for (k, (name, w)) in NAMES.iter().zip(worst).enumerate() {
        if (k == 2 || k == 3) && divided_samples == 0 {
            report.push_unmet(name, "a != 0 at some sample", 0.0, None);
        } else {
            report.push_checked(name, w);
        }
    }
    Ok(())
}

/// Both sides of the eigenbundle lemma: (left) the triple `J2`,
/// `J1 + J2 + J3`, `J1 + J2 − J3` is integrable; (right) `J2` is integrable
/// and `Ker(J3 − Id)` is involutive. Passes when the two verdicts agree.
pub fn lemma_pe_check(h: &PqStructure, samples: &[Point], cfg: &CheckConfig) -> Result<IntegrabilityReport> {
    let mut report = IntegrabilityReport::new("lemma_pe_check", cfg.tol, samples);
    let mut left = 0.0f64;
    for (k, s) in triple_for_lemma_pe().iter().enumerate() {
        let r = is_integrable_compatible(h, s, samples, cfg)?;
        let w = &r.residuals[0];
        report.push_info(&format!("nijenhuis_I{}", k + 1), w.value, w.worst_point.clone());
        left = left.max(w.value);
    }
    let j2 = super::is_integrable(h.j(1), samples, cfg)?;
    let (inv, rank) = involutive_with_rank(&eigen_frame(h.j(2), 1.0), samples, cfg)?;
    let half = h.dim() / 2;
    if let Some(r) = rank {
        if r != half {
            return Err(Error::RankDeficient { rank: r, expected: half });
        }
    }
    let r_j2 = &j2.residuals[0];
    let r_inv = &inv.residuals[0];
    report.push_info("nijenhuis_J2", r_j2.value, r_j2.worst_point.clone());
    report.push_info("eigenbundle_J3", r_inv.value, r_inv.worst_point.clone());
    let right = r_j2.value.max(r_inv.value);
    report.push_info("left_side", left, None);
    report.push_info("right_side", right, None);
    let (lp, rp) = (left <= cfg.tol, right <= cfg.tol);
    let side = |b: bool| if b { "pass" } else { "fail" };
    report.notes.push(format!("left side {}, right side {}", side(lp), side(rp)));
    let agreement = if lp == rp { 0.0 } else { left.max(right) };
    report.push_checked(
        "agreement",
        Worst {
            value: agreement,
            point: None,
        },
    );
    Ok(report.finish())
}
