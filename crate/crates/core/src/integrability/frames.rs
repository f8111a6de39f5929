//! Distributions given by frames, the graph-frame PDE and sampling for the
//! diagonal-frame family.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{IntegrabilityReport, Worst};
use super::CheckConfig;
use crate::error::{Error, Result};
use crate::expr::{Differentiator, FunctionDef, Point, ScalarExpr, Tape};
use crate::geometry::{Chart, EndomorphismField, VectorField};

/// Smallest admissible magnitude for denominators and for the
/// non-degeneracy quantity `h(s) + s h'(s)`.
pub const SINGULAR_MARGIN: f64 = 1e-6;

/// Relative singular-value cutoff used to read off the rank of a frame.
const RANK_CUTOFF: f64 = 1e-9;

/// Frame `{∂_k + sign·J ∂_k}` spanning the `sign`-eigendistribution of a
/// para-complex `J`. The frame is redundant (n fields for rank n/2).
pub fn eigen_frame(j: &EndomorphismField, sign: f64) -> Vec<VectorField> {
    let n = j.dim();
    (0..n)
        .map(|k| {
            VectorField::new(
                (0..n)
                    .map(|a| {
                        let e = j.entry(a, k).scale(sign);
                        if a == k {
                            e.add(&ScalarExpr::one())
                        } else {
                            e
                        }
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Frame `{∂x_i + Σ_t f_it ∂y_t}` on a chart with coordinates
/// `(x_1..x_h, y_1..y_h)`.
pub fn graph_frame(chart: &Chart, f: &[Vec<ScalarExpr>]) -> Result<Vec<VectorField>> {
    let h = half(chart, f)?;
    Ok((0..h)
        .map(|i| {
            VectorField::new(
                (0..2 * h)
                    .map(|a| {
                        if a == i {
                            ScalarExpr::one()
                        } else if a >= h {
                            f[i][a - h].clone()
                        } else {
                            ScalarExpr::zero()
                        }
                    })
                    .collect(),
            )
        })
        .collect())
}

/// Square matrix with `f` on the diagonal.
pub fn diagonal_matrix(f: &[ScalarExpr]) -> Vec<Vec<ScalarExpr>> {
    (0..f.len())
        .map(|i| {
            (0..f.len())
                .map(|t| if i == t { f[i].clone() } else { ScalarExpr::zero() })
                .collect()
        })
        .collect()
}

fn half(chart: &Chart, f: &[Vec<ScalarExpr>]) -> Result<usize> {
    let h = chart.dim() / 2;
    if f.len() != h || f.iter().any(|row| row.len() != h) {
        return Err(Error::Dimension {
            expected: h,
            found: f.len(),
        });
    }
    Ok(h)
}

/// Values and Jacobians of a frame at a point: `(X_a, ∂_s X_a)`.
struct FrameJet {
    tape: Tape,
    n: usize,
    count: usize,
}

impl FrameJet {
    fn new(frame: &[VectorField]) -> Self {
        let n = frame[0].dim();
        let mut diffs: Vec<Differentiator> = (0..n).map(Differentiator::new).collect();
        let mut roots = Vec::new();
        for x in frame {
            roots.extend(x.comps().iter().cloned());
        }
        for x in frame {
            for d in diffs.iter_mut() {
                roots.extend(x.comps().iter().map(|c| d.diff(c)));
            }
        }
        FrameJet {
            tape: Tape::compile(&roots),
            n,
            count: frame.len(),
        }
    }

    /// Frame matrix (columns are fields) and pairwise brackets.
    fn eval(&self, coords: &[f64]) -> Result<(DMatrix<f64>, Vec<((usize, usize), DVector<f64>)>)> {
        let n = self.n;
        let v = self.tape.eval(coords)?;
        let frame = DMatrix::from_fn(n, self.count, |k, a| v[a * n + k]);
        let base = self.count * n;
        // jac[a][(k, s)] = ∂_s X_a^k
        let jac: Vec<DMatrix<f64>> = (0..self.count)
            .map(|a| DMatrix::from_fn(n, n, |k, s| v[base + (a * n + s) * n + k]))
            .collect();
        let mut brackets = Vec::new();
        for a in 0..self.count {
            for b in (a + 1)..self.count {
                let br = &jac[b] * frame.column(a) - &jac[a] * frame.column(b);
                brackets.push(((a, b), br));
            }
        }
        Ok((frame, brackets))
    }
}

/// Least-squares test of involutivity: the component of every pairwise
/// bracket orthogonal to the span of the frame. The frame may be redundant
/// but must have the same rank at every sample.
pub fn involutive(frame: &[VectorField], samples: &[Point], cfg: &CheckConfig) -> Result<IntegrabilityReport> {
    Ok(involutive_with_rank(frame, samples, cfg)?.0)
}

pub(crate) fn involutive_with_rank(
    frame: &[VectorField],
    samples: &[Point],
    cfg: &CheckConfig,
) -> Result<(IntegrabilityReport, Option<usize>)> {
    if frame.is_empty() {
        return Err(Error::Invalid("empty frame".into()));
    }
    let jet = FrameJet::new(frame);
    let mut report = IntegrabilityReport::new("involutive", cfg.tol, samples);
    let mut worst = Worst::default();
    let mut expected_rank = None;
    for p in samples {
        let (m, brackets) = jet.eval(&p.coords).map_err(|e| e.at_point(&p.coords))?;
        let (basis, rank) = crate::linalg::span_basis(&m, RANK_CUTOFF);
        match expected_rank {
            None => expected_rank = Some(rank),
            Some(r) if r != rank => {
                return Err(Error::RankDeficient { rank, expected: r }.at_point(&p.coords));
            }
            _ => {}
        }
        for (_, br) in brackets {
            let rem = &br - &basis * (basis.transpose() * &br);
            worst.update(rem.amax(), p);
        }
    }
    report.push_checked("bracket_off_span", worst);
    if let Some(r) = expected_rank {
        report.notes.push(format!("rank {r}"));
    }
    Ok((report.finish(), expected_rank))
}

/// Largest residual of the integrability PDE for the graph frame
/// `{∂x_i + Σ_t f_it ∂y_t}`:
/// `∂_{x_i} f_jt − ∂_{x_j} f_it + Σ_k (f_ik ∂_{y_k} f_jt − f_jk ∂_{y_k} f_it)`
/// over `i < j` and all `t`.
pub fn pde_residual(chart: &Chart, f: &[Vec<ScalarExpr>], p: &Point) -> Result<f64> {
    chart.check(p)?;
    let h = half(chart, f)?;
    let flat: Vec<ScalarExpr> = f.iter().flatten().cloned().collect();
    let mut roots = flat.clone();
    for s in 0..2 * h {
        let mut d = Differentiator::new(s);
        roots.extend(flat.iter().map(|e| d.diff(e)));
    }
    let v = Tape::compile(&roots)
        .eval(&p.coords)
        .map_err(|e| e.at_point(&p.coords))?;
    let hh = h * h;
    let val = DMatrix::from_fn(h, h, |i, t| v[i * h + t]);
    let det = val.determinant();
    if det.abs() < 1e-12 {
        return Err(Error::Singular { det }.at_point(&p.coords));
    }
    // ∂_s f_it
    let df = |s: usize, i: usize, t: usize| v[hh * (s + 1) + i * h + t];
    let mut worst = 0.0f64;
    for i in 0..h {
        for j in (i + 1)..h {
            for t in 0..h {
                let mut r = df(i, j, t) - df(j, i, t);
                for k in 0..h {
                    r += val[(i, k)] * df(h + k, j, t) - val[(j, k)] * df(h + k, i, t);
                }
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}

/// Whether `p` lies in the regular region of the diagonal-frame family built
/// from `hdef`: every denominator and every frame function is at least
/// `SINGULAR_MARGIN` in magnitude, and `h(s) + s h'(s)` as well.
pub fn propo_admissible(chart: &Chart, hdef: &Arc<FunctionDef>, p: &Point) -> bool {
    let half = chart.dim() / 2;
    let x = &p.coords[..half];
    let y = &p.coords[half..];
    let sx: f64 = x[1..].iter().map(|v| v * v).sum();
    let sy: f64 = y[1..].iter().map(|v| v * v).sum();
    if sx < SINGULAR_MARGIN || sy < SINGULAR_MARGIN {
        return false;
    }
    if x[1..].iter().chain(&y[1..]).any(|v| v.abs() < SINGULAR_MARGIN) {
        return false;
    }
    let s = sx / sy;
    let hv = hdef.eval(s);
    let cond = hv + s * hdef.derivative().eval(s);
    hv.is_finite() && cond.is_finite() && hv.abs() >= SINGULAR_MARGIN && cond.abs() >= SINGULAR_MARGIN
}

/// Uniform samples from the box `[lo, hi]^n` restricted to the regular
/// region. Fails when no admissible point turns up.
pub fn propo_samples(
    chart: &Chart,
    hdef: &Arc<FunctionDef>,
    lo: f64,
    hi: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Point>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let attempts = 200 * count.max(1);
    for _ in 0..attempts {
        if out.len() == count {
            break;
        }
        let p = chart.point((0..chart.dim()).map(|_| rng.gen_range(lo..hi)).collect())?;
        if propo_admissible(chart, hdef, &p) {
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err(Error::HypothesisRegionEmpty(format!(
            "no sample in [{lo}, {hi}]^{} avoids the singular set and satisfies h(s) + s h'(s) != 0 for `{}`",
            chart.dim(),
            hdef.name()
        )));
    }
    Ok(out)
}
