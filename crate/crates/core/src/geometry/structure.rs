use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::chart::Chart;
use super::field::EndomorphismField;
use crate::error::{Error, Result};
use crate::expr::{evaluate, Point, ScalarExpr, Tape};

/// Signs with `J_i² = ε_i Id`.
pub const EPS: [f64; 3] = [-1.0, 1.0, 1.0];

/// Almost para-quaternionic structure given by an admissible basis
/// `(J1, J2, J3)` with `J1² = -Id`, `J2² = J3² = Id`, `J3 = J1 J2`.
#[derive(Clone, Debug)]
pub struct PqStructure {
    chart: Chart,
    j: [EndomorphismField; 3],
    jet_tape: Arc<OnceLock<Tape>>,
}

/// The three basis endomorphisms and their first partials at one point.
#[derive(Clone, Debug)]
pub struct StructureJet {
    pub coords: Vec<f64>,
    pub j: [DMatrix<f64>; 3],
    /// `dj[i][k]` is `∂_k J_i`.
    pub dj: [Vec<DMatrix<f64>>; 3],
}

impl StructureJet {
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    /// `a1 J1 + a2 J2 + a3 J3`.
    pub fn element(&self, a: [f64; 3]) -> DMatrix<f64> {
        &self.j[0] * a[0] + &self.j[1] * a[1] + &self.j[2] * a[2]
    }

    /// Partial along `k` of `a1 J1 + a2 J2 + a3 J3` for constant coefficients.
    pub fn element_partial(&self, a: [f64; 3], k: usize) -> DMatrix<f64> {
        &self.dj[0][k] * a[0] + &self.dj[1][k] * a[1] + &self.dj[2][k] * a[2]
    }

    /// Coefficients of the orthogonal projection of `m` onto span{J_i}
    /// together with the Frobenius norm of the remainder.
    pub fn project_span(&self, m: &DMatrix<f64>) -> ([f64; 3], f64) {
        // tr(J_i J_j) = n ε_i δ_ij for an admissible basis, but the basis is
        // only admissible up to roundoff, so solve the 3x3 Gram system.
        let mut gram = nalgebra::Matrix3::<f64>::zeros();
        let mut rhs = nalgebra::Vector3::<f64>::zeros();
        for i in 0..3 {
            for k in 0..3 {
                gram[(i, k)] = self.j[i].dot(&self.j[k]);
            }
            rhs[i] = self.j[i].dot(m);
        }
        let c = gram.lu().solve(&rhs).unwrap_or_default();
        let a = [c[0], c[1], c[2]];
        let rem = m - self.element(a);
        (a, rem.norm())
    }
}

impl PqStructure {
    pub fn new(chart: Chart, j1: EndomorphismField, j2: EndomorphismField, j3: EndomorphismField) -> Result<Self> {
        for j in [&j1, &j2, &j3] {
            if j.dim() != chart.dim() {
                return Err(Error::Dimension {
                    expected: chart.dim(),
                    found: j.dim(),
                });
            }
        }
        Ok(PqStructure {
            chart,
            j: [j1, j2, j3],
            jet_tape: Arc::new(OnceLock::new()),
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn j(&self, i: usize) -> &EndomorphismField {
        &self.j[i]
    }

    pub fn basis(&self) -> &[EndomorphismField; 3] {
        &self.j
    }

    /// Symbolic `a1 J1 + a2 J2 + a3 J3`.
    pub fn element(&self, a: &[ScalarExpr; 3]) -> EndomorphismField {
        self.j[0]
            .scale(&a[0])
            .add(&self.j[1].scale(&a[1]))
            .add(&self.j[2].scale(&a[2]))
    }

    pub fn jet(&self, p: &Point) -> Result<StructureJet> {
        self.chart.check(p)?;
        self.jet_at(&p.coords).map_err(|e| e.at_point(&p.coords))
    }

    pub(crate) fn jet_at(&self, coords: &[f64]) -> Result<StructureJet> {
        let n = self.dim();
        let tape = self.jet_tape.get_or_init(|| {
            let mut roots = Vec::new();
            for j in &self.j {
                roots.extend(j.entries().iter().cloned());
                for d in j.partials() {
                    roots.extend(d.entries().iter().cloned());
                }
            }
            Tape::compile(&roots)
        });
        let vals = tape.eval(coords)?;
        let block = |i: usize| DMatrix::from_row_slice(n, n, &vals[i * n * n..(i + 1) * n * n]);
        let per = n + 1;
        let j = |i: usize| block(i * per);
        let dj = |i: usize| (1..=n).map(|k| block(i * per + k)).collect::<Vec<_>>();
        Ok(StructureJet {
            coords: coords.to_vec(),
            j: [j(0), j(1), j(2)],
            dj: [dj(0), dj(1), dj(2)],
        })
    }
}

/// Element `a1 J1 + a2 J2 + a3 J3` of the structure bundle.
#[derive(Clone, Debug)]
pub struct StructureElement {
    pub coeffs: [ScalarExpr; 3],
}

impl StructureElement {
    pub fn new(coeffs: [ScalarExpr; 3]) -> Self {
        StructureElement { coeffs }
    }

    pub fn constant(a: [f64; 3]) -> Self {
        Self::new(a.map(ScalarExpr::constant))
    }

    pub fn eval(&self, p: &Point) -> Result<[f64; 3]> {
        Ok([
            evaluate(&self.coeffs[0], p)?,
            evaluate(&self.coeffs[1], p)?,
            evaluate(&self.coeffs[2], p)?,
        ])
    }
}

/// Lorentzian fiber metric `-a1 b1 + a2 b2 + a3 b3`.
pub fn metric(a: [f64; 3], b: [f64; 3]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn structure_metric(u: &StructureElement, v: &StructureElement, p: &Point) -> Result<f64> {
    Ok(metric(u.eval(p)?, v.eval(p)?))
}

/// Maximum violation of each admissible-basis relation over the samples.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AdmissibleReport {
    pub j1_squared: f64,
    pub j2_squared: f64,
    pub j3_squared: f64,
    pub anticommute: f64,
    pub product: f64,
    pub trace: f64,
    pub tol: f64,
    pub pass: bool,
}

impl AdmissibleReport {
    pub fn max_violation(&self) -> f64 {
        [
            self.j1_squared,
            self.j2_squared,
            self.j3_squared,
            self.anticommute,
            self.product,
            self.trace,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn admissible_basis_check(h: &PqStructure, samples: &[Point], tol: f64) -> Result<AdmissibleReport> {
    if samples.is_empty() {
        return Err(Error::Invalid("no sample points".into()));
    }
    let n = h.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let mut r = AdmissibleReport {
        tol,
        ..Default::default()
    };
    for p in samples {
        h.chart().check(p)?;
        let js = [&h.j[0], &h.j[1], &h.j[2]];
        let m: Vec<DMatrix<f64>> = js
            .iter()
            .map(|j| j.eval(&p.coords).map_err(|e| e.at_point(&p.coords)))
            .collect::<Result<_>>()?;
        r.j1_squared = r.j1_squared.max((&m[0] * &m[0] + &id).amax());
        r.j2_squared = r.j2_squared.max((&m[1] * &m[1] - &id).amax());
        r.j3_squared = r.j3_squared.max((&m[2] * &m[2] - &id).amax());
        let ac = [(0, 1), (1, 2), (0, 2)]
            .iter()
            .map(|&(a, b)| (&m[a] * &m[b] + &m[b] * &m[a]).amax())
            .fold(0.0, f64::max);
        r.anticommute = r.anticommute.max(ac);
        r.product = r.product.max((&m[0] * &m[1] - &m[2]).amax());
        r.trace = r.trace.max(m[1].trace().abs().max(m[2].trace().abs()));
    }
    r.pass = r.max_violation() <= tol;
    Ok(r)
}
