//! Smooth second-order operators `g(x) = Sx + c + μx + (L₂/2)|x|∘x` with a planted zero.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};
use crate::operator::{Operator, Smoothness};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P2Params {
    pub n: usize,
    pub l2: f64,
    /// Spectral norm of the skew part `S`.
    pub skew_scale: f64,
    /// Strong monotonicity modulus; zero gives the merely monotone variant.
    pub mu: f64,
    /// Euclidean norm of the planted solution.
    pub solution_norm: f64,
    pub seed: u64,
}

impl P2Params {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Configuration(msg));
        if self.n == 0 {
            return bad("dimension must be positive".into());
        }
        if !(self.l2 > 0.0) || !self.l2.is_finite() {
            return bad(format!("L₂ must be positive, got {}", self.l2));
        }
        for (name, v) in [("skew_scale", self.skew_scale), ("mu", self.mu), ("solution_norm", self.solution_norm)] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be nonnegative, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P2Synthetic<T> {
    params: P2Params,
    skew: DenseMatrix<T>,
    offset: Vector<T>,
    solution: Vector<T>,
    l2: T,
    mu: T,
}

impl<T: Scalar> P2Synthetic<T> {
    pub fn new(params: P2Params) -> Result<Self> {
        params.validate()?;
        let n = params.n;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
        let raw = DenseMatrix::new(n, n, (0..n * n).map(|_| T::c(gauss())).collect())?;
        let mut skew = raw.sub(&raw.transpose()).scale(T::c(0.5));
        let norm = skew.norm2();
        skew = if norm > T::zero() { skew.scale(T::c(params.skew_scale) / norm) } else { DenseMatrix::zeros(n, n) };
        let dir = Vector::new((0..n).map(|_| T::c(gauss())).collect())?;
        let solution = if params.solution_norm > 0.0 {
            dir.scale(T::c(params.solution_norm) / dir.norm2())
        } else {
            Vector::zeros(n)
        };
        let mut inst = Self {
            params,
            skew,
            offset: Vector::zeros(n),
            solution: solution.clone(),
            l2: T::c(params.l2),
            mu: T::c(params.mu),
        };
        inst.offset = -&inst.eval_raw(&solution);
        Ok(inst)
    }

    pub fn params(&self) -> &P2Params {
        &self.params
    }

    pub fn solution(&self) -> &Vector<T> {
        &self.solution
    }

    pub fn skew(&self) -> &DenseMatrix<T> {
        &self.skew
    }

    pub fn offset(&self) -> &Vector<T> {
        &self.offset
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    fn eval_raw(&self, x: &Vector<T>) -> Vector<T> {
        let half = self.l2 / T::c(2.0);
        let mut out = self.skew.matvec(x).add_scaled(T::one(), &self.offset);
        for i in 0..x.dim() {
            out[i] = out[i] + self.mu * x[i] + half * x[i].abs() * x[i];
        }
        out
    }
}

impl<T: Scalar> Operator<T> for P2Synthetic<T> {
    fn dim(&self) -> usize {
        self.params.n
    }

    fn max_derivative_order(&self) -> usize {
        2
    }

    /// `‖diag(L₂(|x| − |y|))‖ ≤ L₂‖x − y‖`, attained along coordinate directions.
    fn smoothness(&self) -> Smoothness<T> {
        Smoothness { order: 2, constant: self.l2 }
    }

    fn eval(&self, x: &Vector<T>) -> Result<Vector<T>> {
        x.check_dim(self.dim())?;
        let out = self.eval_raw(x);
        out.check_finite("synthetic operator")?;
        Ok(out)
    }

    fn jacobian(&self, x: &Vector<T>) -> Result<DenseMatrix<T>> {
        x.check_dim(self.dim())?;
        let mut j = self.skew.clone();
        for i in 0..x.dim() {
            j[(i, i)] = j[(i, i)] + self.mu + self.l2 * x[i].abs();
        }
        Ok(j)
    }

    fn contraction(&self, order: usize, x: &Vector<T>, h: &Vector<T>) -> Result<Vector<T>> {
        x.check_dim(self.dim())?;
        h.check_dim(self.dim())?;
        match order {
            0 => self.eval(x),
            1 => Ok(self.jacobian(x)?.matvec(h)),
            2 => Ok(x.zip_map(h, |xi, hi| {
                let s = if xi > T::zero() {
                    T::one()
                } else if xi < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                };
                self.l2 * s * hi * hi
            })),
            _ => Err(Error::UnsupportedOrder { requested: order, available: 2 }),
        }
    }
}
