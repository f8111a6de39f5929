use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DVector;

use super::algebra;
use super::tensor::Tensor3;
use crate::error::{Error, Result};
use crate::expr::{Differentiator, Point, ScalarExpr, Tape};
use crate::geometry::{EndomorphismField, OneForm, PqStructure, VectorField, EPS};

type Evaluator = Arc<dyn Fn(&[f64]) -> Result<Tensor3> + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Table {
        comps: Arc<Vec<ScalarExpr>>,
        tape: Arc<OnceLock<Tape>>,
    },
    Eval(Evaluator),
}

impl Repr {
    fn at(&self, n: usize, coords: &[f64]) -> Result<Tensor3> {
        match self {
            Repr::Table { comps, tape } => {
                let tape = tape.get_or_init(|| Tape::compile(comps.iter()));
                Ok(Tensor3::from_vec(n, tape.eval(coords)?))
            }
            Repr::Eval(f) => f(coords),
        }
    }
}

/// Tangent-valued two-form, as a closed-form component table or as a
/// pointwise evaluator.
#[derive(Clone)]
pub struct VectorTwoForm {
    n: usize,
    repr: Repr,
}

/// Endomorphism-valued one-form with the same two representations.
#[derive(Clone)]
pub struct EndoValuedOneForm {
    n: usize,
    repr: Repr,
}

macro_rules! form_common {
    ($t:ident) => {
        impl $t {
            /// Table with entry `k·n² + i·n + j` holding component `(k, i, j)`.
            pub fn from_table(n: usize, comps: Vec<ScalarExpr>) -> Result<Self> {
                if comps.len() != n * n * n {
                    return Err(Error::Dimension {
                        expected: n * n * n,
                        found: comps.len(),
                    });
                }
                Ok($t {
                    n,
                    repr: Repr::Table {
                        comps: Arc::new(comps),
                        tape: Arc::new(OnceLock::new()),
                    },
                })
            }

            pub fn from_evaluator(
                n: usize,
                f: impl Fn(&[f64]) -> Result<Tensor3> + Send + Sync + 'static,
            ) -> Self {
                $t {
                    n,
                    repr: Repr::Eval(Arc::new(f)),
                }
            }

            /// Constant tensor on every point.
            pub fn constant(t: Tensor3) -> Self {
                let n = t.n();
                Self::from_table(n, t.data().iter().map(|&v| ScalarExpr::constant(v)).collect())
                    .unwrap()
            }

            pub fn dim(&self) -> usize {
                self.n
            }

            pub fn table(&self) -> Option<&[ScalarExpr]> {
                match &self.repr {
                    Repr::Table { comps, .. } => Some(comps),
                    Repr::Eval(_) => None,
                }
            }

            pub fn at(&self, p: &Point) -> Result<Tensor3> {
                self.at_coords(&p.coords).map_err(|e| e.at_point(&p.coords))
            }

            pub fn at_coords(&self, coords: &[f64]) -> Result<Tensor3> {
                if coords.len() != self.n {
                    return Err(Error::Dimension {
                        expected: self.n,
                        found: coords.len(),
                    });
                }
                self.repr.at(self.n, coords)
            }
        }

        impl fmt::Debug for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let kind = match self.repr {
                    Repr::Table { .. } => "table",
                    Repr::Eval(_) => "evaluator",
                };
                write!(f, "{}(n={}, {})", stringify!($t), self.n, kind)
            }
        }
    };
}

form_common!(VectorTwoForm);
form_common!(EndoValuedOneForm);

impl VectorTwoForm {
    /// `T(X, Y)` at `p`.
    pub fn eval(&self, p: &Point, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.at(p)?.apply(x, y))
    }
}

impl EndoValuedOneForm {
    /// The endomorphism `η(X)` at `p`.
    pub fn eval(&self, p: &Point, x: &DVector<f64>) -> Result<nalgebra::DMatrix<f64>> {
        Ok(self.at(p)?.interior(x))
    }
}

/// `[X, Y]^k = X^i ∂_i Y^k − Y^i ∂_i X^k`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    let n = x.dim();
    if y.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            found: y.dim(),
        });
    }
    let mut diffs: Vec<Differentiator> = (0..n).map(Differentiator::new).collect();
    let comps = (0..n)
        .map(|k| {
            let mut terms = Vec::new();
            for (i, d) in diffs.iter_mut().enumerate() {
                terms.push(x.comp(i).mul(&d.diff(y.comp(k))));
                terms.push(y.comp(i).mul(&d.diff(x.comp(k))).neg());
            }
            ScalarExpr::sum(&terms)
        })
        .collect();
    Ok(VectorField::new(comps))
}

fn symbolic_bracket(a: &EndomorphismField, b: &EndomorphismField) -> Vec<ScalarExpr> {
    let n = a.dim();
    let same = std::ptr::eq(a, b);
    let da = a.partials();
    let db = if same { da.clone() } else { b.partials() };
    let mut out = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut terms = Vec::new();
                for s in 0..n {
                    terms.push(a.entry(s, i).mul(db[s].entry(k, j)));
                    terms.push(b.entry(s, j).mul(da[s].entry(k, i)).neg());
                    terms.push(b.entry(s, i).mul(da[s].entry(k, j)));
                    terms.push(a.entry(s, j).mul(db[s].entry(k, i)).neg());
                    let curl_b = db[i].entry(s, j).sub(db[j].entry(s, i));
                    let curl_a = da[i].entry(s, j).sub(da[j].entry(s, i));
                    terms.push(a.entry(k, s).mul(&curl_b).neg());
                    terms.push(b.entry(k, s).mul(&curl_a).neg());
                }
                out.push(ScalarExpr::sum(&terms));
            }
        }
    }
    out
}

/// Nijenhuis bracket `[A, B]` as a closed-form table on coordinate fields.
pub fn nijenhuis_bracket(a: &EndomorphismField, b: &EndomorphismField) -> Result<VectorTwoForm> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    VectorTwoForm::from_table(a.dim(), symbolic_bracket(a, b))
}

/// Nijenhuis tensor `N_J(X,Y) = ε[X,Y] + [JX,JY] − J[JX,Y] − J[X,JY]`.
///
/// On coordinate fields the `ε[X,Y]` term vanishes, so `eps` only records
/// the type of `J`; the table is `½[J, J]`.
pub fn nijenhuis(j: &EndomorphismField, eps: f64) -> Result<VectorTwoForm> {
    debug_assert!(eps == 1.0 || eps == -1.0);
    let half: Vec<ScalarExpr> = symbolic_bracket(j, j).iter().map(|e| e.scale(0.5)).collect();
    VectorTwoForm::from_table(j.dim(), half)
}

/// `T^H = −(1/6) Σ ε_i N_{J_i}` as a closed-form table.
pub fn torsion_th(h: &PqStructure) -> Result<VectorTwoForm> {
    let n = h.dim();
    let tables: Vec<Vec<ScalarExpr>> = (0..3)
        .map(|i| symbolic_bracket(h.j(i), h.j(i)))
        .collect();
    let comps = (0..n * n * n)
        .map(|c| {
            let terms: Vec<ScalarExpr> =
                (0..3).map(|i| tables[i][c].scale(-EPS[i] / 12.0)).collect();
            ScalarExpr::sum(&terms)
        })
        .collect();
    VectorTwoForm::from_table(n, comps)
}

fn check_dim(h: &PqStructure, n: usize) -> Result<()> {
    if h.dim() != n {
        return Err(Error::Dimension {
            expected: h.dim(),
            found: n,
        });
    }
    Ok(())
}

/// `Π^{0,2}_J(T)`.
pub fn pi02(j: &EndomorphismField, eps: f64, t: &VectorTwoForm) -> Result<VectorTwoForm> {
    if j.dim() != t.dim() {
        return Err(Error::Dimension {
            expected: j.dim(),
            found: t.dim(),
        });
    }
    let (j, t) = (j.clone(), t.clone());
    Ok(VectorTwoForm::from_evaluator(t.dim(), move |c| {
        Ok(algebra::pi02(&j.eval(c)?, eps, &t.at_coords(c)?))
    }))
}

/// The projector `P`.
pub fn projector_p(h: &PqStructure, t: &VectorTwoForm) -> Result<VectorTwoForm> {
    check_dim(h, t.dim())?;
    let (h, t) = (h.clone(), t.clone());
    Ok(VectorTwoForm::from_evaluator(t.dim(), move |c| {
        Ok(algebra::projector(&h.jet_at(c)?.j, &t.at_coords(c)?))
    }))
}

/// The section `π(T)`.
pub fn pi_section(h: &PqStructure, t: &VectorTwoForm) -> Result<EndoValuedOneForm> {
    check_dim(h, t.dim())?;
    let (h, t) = (h.clone(), t.clone());
    Ok(EndoValuedOneForm::from_evaluator(t.dim(), move |c| {
        Ok(algebra::pi_section(&h.jet_at(c)?.j, &t.at_coords(c)?))
    }))
}

/// `(δη)(X, Y) = η(X)Y − η(Y)X`.
pub fn delta_map(eta: &EndoValuedOneForm) -> VectorTwoForm {
    if let Some(tab) = eta.table() {
        let n = eta.dim();
        let comps = (0..n)
            .flat_map(|k| (0..n).flat_map(move |i| (0..n).map(move |j| (k, i, j))))
            .map(|(k, i, j)| tab[(k * n + i) * n + j].sub(&tab[(k * n + j) * n + i]))
            .collect();
        return VectorTwoForm::from_table(n, comps).unwrap();
    }
    let eta = eta.clone();
    VectorTwoForm::from_evaluator(eta.dim(), move |c| Ok(algebra::delta(&eta.at_coords(c)?)))
}

/// The one-forms `τ_1, τ_2, τ_3` built from `T`.
#[derive(Clone)]
pub struct TauForms {
    h: PqStructure,
    t: VectorTwoForm,
}

impl TauForms {
    pub fn at(&self, p: &Point) -> Result<[DVector<f64>; 3]> {
        let jet = self.h.jet(p)?;
        Ok(algebra::tau(&jet.j, &self.t.at(p)?))
    }

    /// `Σ τ_i ⊗ J_i`.
    pub fn as_structure_form(&self) -> EndoValuedOneForm {
        let this = self.clone();
        EndoValuedOneForm::from_evaluator(self.h.dim(), move |c| {
            let jet = this.h.jet_at(c)?;
            let tau = algebra::tau(&jet.j, &this.t.at_coords(c)?);
            Ok(algebra::structure_valued(&jet.j, &tau))
        })
    }
}

pub fn tau_forms(h: &PqStructure, t: &VectorTwoForm) -> Result<TauForms> {
    check_dim(h, t.dim())?;
    Ok(TauForms {
        h: h.clone(),
        t: t.clone(),
    })
}

/// `T^𝒫 = T^H − δ(Σ τ_i ⊗ J_i)`, evaluated from the structure jet.
pub fn torsion_tp(h: &PqStructure) -> VectorTwoForm {
    let h = h.clone();
    VectorTwoForm::from_evaluator(h.dim(), move |c| {
        let jet = h.jet_at(c)?;
        Ok(tp_from_jet(&jet))
    })
}

/// `T^H` at a point from the structure jet.
pub fn th_from_jet(jet: &crate::geometry::StructureJet) -> Tensor3 {
    let mut acc = Tensor3::zeros(jet.n());
    for i in 0..3 {
        acc = &acc + &algebra::nijenhuis_at(&jet.j[i], &jet.dj[i]).scale(-EPS[i] / 6.0);
    }
    acc
}

/// `T^𝒫` at a point from the structure jet.
pub fn tp_from_jet(jet: &crate::geometry::StructureJet) -> Tensor3 {
    let th = th_from_jet(jet);
    let tau = algebra::tau_of_projected(&jet.j, &th);
    &th - &algebra::delta(&algebra::structure_valued(&jet.j, &tau))
}

fn alpha_form(
    h: &PqStructure,
    alpha: &OneForm,
    f: fn(&[nalgebra::DMatrix<f64>; 3], &DVector<f64>) -> Tensor3,
) -> Result<EndoValuedOneForm> {
    check_dim(h, alpha.dim())?;
    let (h, alpha) = (h.clone(), alpha.clone());
    Ok(EndoValuedOneForm::from_evaluator(h.dim(), move |c| {
        Ok(f(&h.jet_at(c)?.j, &alpha.eval(c)?))
    }))
}

/// `S^α`.
pub fn s_alpha(h: &PqStructure, alpha: &OneForm) -> Result<EndoValuedOneForm> {
    alpha_form(h, alpha, algebra::s_alpha)
}

/// `T^α = Σ ε_i (α∘J_i) ⊗ J_i`.
pub fn t_alpha(h: &PqStructure, alpha: &OneForm) -> Result<EndoValuedOneForm> {
    alpha_form(h, alpha, algebra::t_alpha)
}

/// `E^α`.
pub fn e_alpha(h: &PqStructure, alpha: &OneForm) -> Result<EndoValuedOneForm> {
    alpha_form(h, alpha, algebra::e_alpha)
}

/// `max_i ‖[A, J_i(p)]‖`.
pub fn centralizer_residual(a: &nalgebra::DMatrix<f64>, h: &PqStructure, p: &Point) -> Result<f64> {
    Ok(algebra::centralizer_residual(a, &h.jet(p)?.j))
}

/// `max_i` distance of `[A, J_i(p)]` from span{J_i(p)}.
pub fn normalizer_residual(a: &nalgebra::DMatrix<f64>, h: &PqStructure, p: &Point) -> Result<f64> {
    Ok(algebra::normalizer_residual(a, &h.jet(p)?.j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{conjugate_structure, flat_model, random_conjugator, Chart};

    #[test]
    fn lie_bracket_examples() {
        let c = Chart::standard(2).unwrap();
        let d = |k| VectorField::coordinate(8, k);
        let z = lie_bracket(&d(0), &d(1)).unwrap();
        assert!(z.comps().iter().all(|e| e.is_zero()));
        let xy = VectorField::coordinate(8, 4).scale(&c.var(0));
        let r = lie_bracket(&d(0), &xy).unwrap();
        assert_eq!(r.eval(&[0.3; 8]).unwrap(), VectorField::coordinate(8, 4).eval(&[0.0; 8]).unwrap());
        let a = d(1).scale(&c.var(0));
        let b = d(0).scale(&c.var(1));
        let r = lie_bracket(&a, &b).unwrap().eval(&[1.0; 8]).unwrap();
        assert_eq!(r[0], 1.0);
        assert_eq!(r[1], -1.0);
    }

    #[test]
    fn table_matches_pointwise() {
        let h = flat_model(2).unwrap();
        let g = random_conjugator(h.chart(), 3, 0.04);
        let s = conjugate_structure(&h, &g).unwrap();
        let p = s.chart().point((0..8).map(|k| 0.1 * k as f64 - 0.3).collect()).unwrap();
        let jet = s.jet(&p).unwrap();
        for i in 0..3 {
            let tab = nijenhuis(s.j(i), EPS[i]).unwrap().at(&p).unwrap();
            let num = algebra::nijenhuis_at(&jet.j[i], &jet.dj[i]);
            assert!((&tab - &num).amax() < 1e-12);
            assert!(num.amax() > 1e-4);
        }
        let th = torsion_th(&s).unwrap().at(&p).unwrap();
        assert!((&th - &th_from_jet(&jet)).amax() < 1e-12);
    }

    #[test]
    fn flat_torsions_vanish() {
        let h = flat_model(2).unwrap();
        let p = h.chart().point(vec![0.5; 8]).unwrap();
        assert_eq!(torsion_th(&h).unwrap().at(&p).unwrap().amax(), 0.0);
        assert_eq!(torsion_tp(&h).at(&p).unwrap().amax(), 0.0);
        for i in 0..3 {
            assert_eq!(nijenhuis(h.j(i), EPS[i]).unwrap().at(&p).unwrap().amax(), 0.0);
        }
    }
}
