use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Pointwise tensor with one upper and two lower indices.
///
/// `get(k, i, j)` is component `k` of `T(∂_i, ∂_j)`. The same layout holds
/// endomorphism-valued one-forms: component `k` of `η(∂_i)(∂_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Tensor3 {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    t.data[(k * n + i) * n + j] = f(k, i, j);
                }
            }
        }
        t
    }

    /// Builds `T` from its values on coordinate pairs.
    pub fn from_pairs(n: usize, mut f: impl FnMut(usize, usize) -> DVector<f64>) -> Self {
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = f(i, j);
                for k in 0..n {
                    t.data[(k * n + i) * n + j] = v[k];
                }
            }
        }
        t
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n * n);
        Tensor3 { n, data }
    }

    /// Random alternating tensor with entries in `[-1, 1]`.
    pub fn random_alternating<R: Rng>(n: usize, rng: &mut R) -> Self {
        let mut t = Self::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = rng.gen_range(-1.0..1.0);
                    t.data[(k * n + i) * n + j] = v;
                    t.data[(k * n + j) * n + i] = -v;
                }
            }
        }
        t
    }

    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        Self::from_fn(n, |_, _, _| rng.gen_range(-1.0..1.0))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.data[(k * self.n + i) * self.n + j] = v;
    }

    /// `T(∂_i, ∂_j)`.
    pub fn pair(&self, i: usize, j: usize) -> DVector<f64> {
        DVector::from_fn(self.n, |k, _| self.get(k, i, j))
    }

    /// `T(X, Y)`.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |k, _| {
            let mut s = 0.0;
            for i in 0..n {
                if x[i] == 0.0 {
                    continue;
                }
                let row = &self.data[(k * n + i) * n..(k * n + i + 1) * n];
                let mut r = 0.0;
                for j in 0..n {
                    r += row[j] * y[j];
                }
                s += x[i] * r;
            }
            s
        })
    }

    /// Interior product `T_X = T(X, ·)` as a matrix: entry `(k, j)` is
    /// component `k` of `T(X, ∂_j)`. For an endomorphism-valued form this
    /// is the endomorphism `η(X)`.
    pub fn interior(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |k, j| (0..n).map(|i| x[i] * self.get(k, i, j)).sum())
    }

    /// Endomorphism `η(∂_i)`.
    pub fn slot(&self, i: usize) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |k, j| self.get(k, i, j))
    }

    fn slice(&self, k: usize) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_row_slice(n, n, &self.data[k * n * n..(k + 1) * n * n])
    }

    /// `T(A·, B·)`.
    pub fn precompose(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Tensor3 {
        let n = self.n;
        let at = a.transpose();
        let mut out = Tensor3::zeros(n);
        for k in 0..n {
            let s = &at * self.slice(k) * b;
            for i in 0..n {
                for j in 0..n {
                    out.data[(k * n + i) * n + j] = s[(i, j)];
                }
            }
        }
        out
    }

    /// `C ∘ T`.
    pub fn left(&self, c: &DMatrix<f64>) -> Tensor3 {
        let n = self.n;
        let m = DMatrix::from_row_slice(n, n * n, &self.data);
        let r = c * m;
        let mut out = Tensor3::zeros(n);
        for k in 0..n {
            for ij in 0..n * n {
                out.data[k * n * n + ij] = r[(k, ij)];
            }
        }
        out
    }

    /// Exchange of the two lower slots.
    pub fn swap(&self) -> Tensor3 {
        let n = self.n;
        Tensor3::from_fn(n, |k, i, j| self.get(k, j, i))
    }

    /// `T(X,Y) + T(Y,X)` measured by its largest component.
    pub fn alternation_defect(&self) -> f64 {
        (self + &self.swap()).amax()
    }

    pub fn amax(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, c: f64) -> Tensor3 {
        Tensor3 {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Add for &Tensor3 {
    type Output = Tensor3;
    fn add(self, rhs: &Tensor3) -> Tensor3 {
        Tensor3 {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Tensor3 {
    type Output = Tensor3;
    fn sub(self, rhs: &Tensor3) -> Tensor3 {
        Tensor3 {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Add for Tensor3 {
    type Output = Tensor3;
    fn add(self, rhs: Tensor3) -> Tensor3 {
        &self + &rhs
    }
}

impl Sub for Tensor3 {
    type Output = Tensor3;
    fn sub(self, rhs: Tensor3) -> Tensor3 {
        &self - &rhs
    }
}

impl Mul<f64> for &Tensor3 {
    type Output = Tensor3;
    fn mul(self, c: f64) -> Tensor3 {
        self.scale(c)
    }
}

impl Mul<f64> for Tensor3 {
    type Output = Tensor3;
    fn mul(self, c: f64) -> Tensor3 {
        self.scale(c)
    }
}

impl Neg for &Tensor3 {
    type Output = Tensor3;
    fn neg(self) -> Tensor3 {
        self.scale(-1.0)
    }
}

impl Neg for Tensor3 {
    type Output = Tensor3;
    fn neg(self) -> Tensor3 {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn precompose_matches_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 8;
        let t = Tensor3::random(n, &mut rng);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = t.precompose(&a, &b).apply(&x, &y);
        let rhs = t.apply(&(&a * &x), &(&b * &y));
        assert!((lhs - rhs).amax() < 1e-12);
        let c = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = t.left(&c).apply(&x, &y);
        let rhs = &c * t.apply(&x, &y);
        assert!((lhs - rhs).amax() < 1e-12);
        assert!((t.interior(&x) * &y - t.apply(&x, &y)).amax() < 1e-12);
    }

    #[test]
    fn random_alternating_is_alternating() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = Tensor3::random_alternating(8, &mut rng);
        assert_eq!(t.alternation_defect(), 0.0);
    }
}
