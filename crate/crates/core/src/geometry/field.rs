use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{Differentiator, ScalarExpr, Tape};

/// Value and first partial derivatives of a matrix field at a point.
#[derive(Clone, Debug)]
pub struct MatrixJet {
    pub value: DMatrix<f64>,
    /// `d[k]` is the partial derivative along coordinate `k`.
    pub d: Vec<DMatrix<f64>>,
}

/// Tangent vector field with symbolic components.
#[derive(Clone, Debug)]
pub struct VectorField {
    comps: Vec<ScalarExpr>,
    tape: Arc<OnceLock<Tape>>,
}

impl VectorField {
    pub fn new(comps: Vec<ScalarExpr>) -> Self {
        VectorField {
            comps,
            tape: Arc::new(OnceLock::new()),
        }
    }

    /// The coordinate field `∂/∂x_k` in dimension `n`.
    pub fn coordinate(n: usize, k: usize) -> Self {
        Self::new(
            (0..n)
                .map(|i| if i == k { ScalarExpr::one() } else { ScalarExpr::zero() })
                .collect(),
        )
    }

    pub fn constant(v: &[f64]) -> Self {
        Self::new(v.iter().map(|&c| ScalarExpr::constant(c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[ScalarExpr] {
        &self.comps
    }

    pub fn comp(&self, k: usize) -> &ScalarExpr {
        &self.comps[k]
    }

    pub fn eval(&self, coords: &[f64]) -> Result<DVector<f64>> {
        let tape = self.tape.get_or_init(|| Tape::compile(&self.comps));
        Ok(DVector::from_vec(tape.eval(coords)?))
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField::new(self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect())
    }

    pub fn scale(&self, f: &ScalarExpr) -> VectorField {
        VectorField::new(self.comps.iter().map(|a| a.mul(f)).collect())
    }
}

/// Differential one-form with symbolic components.
#[derive(Clone, Debug)]
pub struct OneForm {
    comps: Vec<ScalarExpr>,
    tape: Arc<OnceLock<Tape>>,
}

impl OneForm {
    pub fn new(comps: Vec<ScalarExpr>) -> Self {
        OneForm {
            comps,
            tape: Arc::new(OnceLock::new()),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![ScalarExpr::zero(); n])
    }

    pub fn constant(v: &[f64]) -> Self {
        Self::new(v.iter().map(|&c| ScalarExpr::constant(c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[ScalarExpr] {
        &self.comps
    }

    pub fn eval(&self, coords: &[f64]) -> Result<DVector<f64>> {
        let tape = self.tape.get_or_init(|| Tape::compile(&self.comps));
        Ok(DVector::from_vec(tape.eval(coords)?))
    }
}

/// Field of endomorphisms of the tangent bundle.
///
/// Entry `(a, b)` is the component `J^a_b`, so `J(∂_b) = Σ_a J^a_b ∂_a`.
#[derive(Clone)]
pub struct EndomorphismField {
    n: usize,
    entries: Vec<ScalarExpr>,
    jet_tape: Arc<OnceLock<Tape>>,
}

impl std::fmt::Debug for EndomorphismField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "EndomorphismField({}x{})", self.n, self.n)
    }
}

impl EndomorphismField {
    /// Builds a field from row-major entries.
    pub fn from_entries(n: usize, entries: Vec<ScalarExpr>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                found: entries.len(),
            });
        }
        Ok(EndomorphismField {
            n,
            entries,
            jet_tape: Arc::new(OnceLock::new()),
        })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> ScalarExpr) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                entries.push(f(a, b));
            }
        }
        Self::from_entries(n, entries).unwrap()
    }

    pub fn constant(m: &DMatrix<f64>) -> Self {
        assert!(m.is_square());
        Self::from_fn(m.nrows(), |a, b| ScalarExpr::constant(m[(a, b)]))
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(&DMatrix::identity(n, n))
    }

    pub fn zero(n: usize) -> Self {
        Self::from_fn(n, |_, _| ScalarExpr::zero())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, a: usize, b: usize) -> &ScalarExpr {
        &self.entries[a * self.n + b]
    }

    pub fn entries(&self) -> &[ScalarExpr] {
        &self.entries
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(|e| e.as_const().is_some())
    }

    pub fn mul(&self, other: &EndomorphismField) -> EndomorphismField {
        let n = self.n;
        Self::from_fn(n, |a, b| {
            let terms: Vec<ScalarExpr> = (0..n)
                .map(|c| self.entry(a, c).mul(other.entry(c, b)))
                .collect();
            ScalarExpr::sum(&terms)
        })
    }

    pub fn add(&self, other: &EndomorphismField) -> EndomorphismField {
        Self::from_fn(self.n, |a, b| self.entry(a, b).add(other.entry(a, b)))
    }

    pub fn sub(&self, other: &EndomorphismField) -> EndomorphismField {
        Self::from_fn(self.n, |a, b| self.entry(a, b).sub(other.entry(a, b)))
    }

    pub fn scale(&self, f: &ScalarExpr) -> EndomorphismField {
        Self::from_fn(self.n, |a, b| self.entry(a, b).mul(f))
    }

    pub fn scale_const(&self, c: f64) -> EndomorphismField {
        self.scale(&ScalarExpr::constant(c))
    }

    pub fn trace(&self) -> ScalarExpr {
        let d: Vec<ScalarExpr> = (0..self.n).map(|a| self.entry(a, a).clone()).collect();
        ScalarExpr::sum(&d)
    }

    pub fn apply(&self, v: &VectorField) -> VectorField {
        let n = self.n;
        VectorField::new(
            (0..n)
                .map(|a| {
                    let t: Vec<ScalarExpr> =
                        (0..n).map(|b| self.entry(a, b).mul(v.comp(b))).collect();
                    ScalarExpr::sum(&t)
                })
                .collect(),
        )
    }

    /// Adjugate-style inverse by the Faddeev–LeVerrier recursion.
    ///
    /// Returns `(M, c0)` with `self⁻¹ = -M / c0` and `det = (-1)^n c0`.
    /// The recursion is division-free apart from the exact factors `1/k`,
    /// so the result stays polynomial in the entries.
    pub fn faddeev_leverrier(&self) -> (EndomorphismField, ScalarExpr) {
        let n = self.n;
        let id = Self::identity(n);
        let mut m = id.clone();
        let mut am = self.mul(&m);
        let mut c = am.trace().neg();
        for k in 2..=n {
            m = am.add(&id.scale(&c));
            am = self.mul(&m);
            c = am.trace().scale(-1.0 / k as f64);
        }
        (m, c)
    }

    pub fn determinant(&self) -> ScalarExpr {
        let (_, c0) = self.faddeev_leverrier();
        if self.n % 2 == 0 {
            c0
        } else {
            c0.neg()
        }
    }

    /// Symbolic inverse; singular points surface as division errors.
    pub fn inverse(&self) -> EndomorphismField {
        let (m, c0) = self.faddeev_leverrier();
        let f = c0.neg();
        Self::from_fn(self.n, |a, b| m.entry(a, b).div(&f))
    }

    pub fn transpose(&self) -> EndomorphismField {
        Self::from_fn(self.n, |a, b| self.entry(b, a).clone())
    }

    pub fn eval(&self, coords: &[f64]) -> Result<DMatrix<f64>> {
        let tape = Tape::compile(&self.entries);
        Ok(DMatrix::from_row_slice(self.n, self.n, &tape.eval(coords)?))
    }

    /// Symbolic partial derivatives, one field per coordinate.
    pub fn partials(&self) -> Vec<EndomorphismField> {
        (0..self.n)
            .map(|k| {
                let mut d = Differentiator::new(k);
                EndomorphismField::from_entries(
                    self.n,
                    self.entries.iter().map(|e| d.diff(e)).collect(),
                )
                .unwrap()
            })
            .collect()
    }

    /// Value and first partials at a point, through a cached tape.
    pub fn jet(&self, coords: &[f64]) -> Result<MatrixJet> {
        let n = self.n;
        let tape = self.jet_tape.get_or_init(|| {
            let mut roots = self.entries.clone();
            for p in self.partials() {
                roots.extend(p.entries);
            }
            Tape::compile(&roots)
        });
        let vals = tape.eval(coords)?;
        let block = |i: usize| DMatrix::from_row_slice(n, n, &vals[i * n * n..(i + 1) * n * n]);
        Ok(MatrixJet {
            value: block(0),
            d: (1..=n).map(block).collect(),
        })
    }
}
