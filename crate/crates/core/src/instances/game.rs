//! Bilinear matrix games `min_{x∈Δ_n} max_{y∈Δ_m} yᵀAx`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FeasibleSet, ProxSetup};
use crate::linalg::{DenseMatrix, Vector};
use crate::operator::{NormKind, Operator, Smoothness};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixGame<T> {
    /// `m × n` payoff; the column player `x ∈ Δ_n` minimizes.
    payoff: DenseMatrix<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium<T> {
    pub x: Vector<T>,
    pub y: Vector<T>,
    pub value: T,
}

impl<T: Scalar> MatrixGame<T> {
    pub fn new(payoff: DenseMatrix<T>) -> Result<Self> {
        if payoff.rows() == 0 || payoff.cols() == 0 {
            return Err(Error::Configuration("payoff matrix must be nonempty".into()));
        }
        if !payoff.is_finite() {
            return Err(Error::NonFinite("payoff matrix"));
        }
        Ok(Self { payoff })
    }

    /// Entries i.i.d. uniform on `[−1, 1]`.
    pub fn random(m: usize, n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..m * n).map(|_| T::c(rng.random_range(-1.0..=1.0))).collect();
        Self::new(DenseMatrix::new(m, n, data)?)
    }

    pub fn payoff(&self) -> &DenseMatrix<T> {
        &self.payoff
    }

    /// Strategy counts `(n, m)` of the minimizing and maximizing players.
    pub fn shape(&self) -> (usize, usize) {
        (self.payoff.cols(), self.payoff.rows())
    }

    pub fn feasible_set(&self) -> FeasibleSet<T> {
        let (n, m) = self.shape();
        FeasibleSet::Product { blocks: vec![FeasibleSet::Simplex { dim: n }, FeasibleSet::Simplex { dim: m }] }
    }

    pub fn prox_setup(&self) -> ProxSetup {
        ProxSetup::Entropy
    }

    /// The pair of uniform strategies.
    pub fn uniform_start(&self) -> Vector<T> {
        let (n, m) = self.shape();
        let x = Vector::filled(n, T::one() / T::from_usize_lossy(n));
        let y = Vector::filled(m, T::one() / T::from_usize_lossy(m));
        Vector::concat(&[&x, &y])
    }

    pub fn split(&self, z: &Vector<T>) -> (Vector<T>, Vector<T>) {
        let (n, m) = self.shape();
        (z.segment(0, n), z.segment(n, m))
    }

    /// `max_i (Ax)_i − min_j (Aᵀy)_j`
    pub fn exact_gap(&self, z: &Vector<T>) -> Result<T> {
        let (n, m) = self.shape();
        z.check_dim(n + m)?;
        let (x, y) = self.split(z);
        let best_response_y = self.payoff.matvec(&x).iter().copied().fold(T::neg_infinity(), T::max);
        let best_response_x = self.payoff.matvec_transpose(&y).iter().copied().fold(T::infinity(), T::min);
        Ok(best_response_y - best_response_x)
    }

    /// Exact equilibrium by the simplex method on the shifted game.
    pub fn equilibrium(&self) -> Result<Equilibrium<T>> {
        let (n, m) = self.shape();
        let shift = 1.0 + self.payoff.max_abs().to_f64_lossy();
        // A' = A + shift > 0; maximize 1ᵀw s.t. A'w ≤ 1, w ≥ 0.
        let mut a = vec![vec![0.0; n]; m];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.payoff[(i, j)].to_f64_lossy() + shift;
            }
        }
        let (w, u) = simplex_max(&a, &vec![1.0; m], &vec![1.0; n])?;
        let total: f64 = w.iter().sum();
        let dual_total: f64 = u.iter().sum();
        if !(total > 0.0) || !(dual_total > 0.0) {
            return Err(Error::Precondition("degenerate linear program for the game value".into()));
        }
        let x = Vector::new(w.iter().map(|v| T::c(v / total)).collect())?;
        let y = Vector::new(u.iter().map(|v| T::c(v / dual_total)).collect())?;
        Ok(Equilibrium { x, y, value: T::c(1.0 / total - shift) })
    }

    pub fn operator(&self) -> GameOperator<'_, T> {
        GameOperator { game: self }
    }
}

/// Dense tableau simplex with Bland's rule for `max cᵀw, Aw ≤ b, w ≥ 0`, `b ≥ 0`.
/// Returns the primal solution and the dual multipliers of the constraints.
fn simplex_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = a.len();
    let n = c.len();
    let width = n + m + 1;
    let mut tab = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        tab[i][..n].copy_from_slice(&a[i]);
        tab[i][n + i] = 1.0;
        tab[i][width - 1] = b[i];
    }
    for j in 0..n {
        tab[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let eps = 1e-12;
    let max_pivots = 50 * (n + m) + 1000;
    for _ in 0..max_pivots {
        let Some(enter) = (0..n + m).find(|&j| tab[m][j] < -eps) else {
            let mut w = vec![0.0; n];
            for (i, &bi) in basis.iter().enumerate() {
                if bi < n {
                    w[bi] = tab[i][width - 1];
                }
            }
            let u = (0..m).map(|i| tab[m][n + i]).collect();
            return Ok((w, u));
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if tab[i][enter] > eps {
                let ratio = tab[i][width - 1] / tab[i][enter];
                let better = ratio < best - eps
                    || (ratio <= best + eps && leave.is_some_and(|l| basis[i] < basis[l]));
                if leave.is_none() || better {
                    best = ratio.min(best);
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return Err(Error::Precondition("unbounded linear program".into()));
        };
        let pivot = tab[r][enter];
        for v in tab[r].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = tab[r].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[enter];
            if factor != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
            }
        }
        basis[r] = enter;
    }
    Err(Error::Precondition("simplex method did not terminate".into()))
}

/// `z = (x, y) ↦ (Aᵀy, −Ax)`
pub struct GameOperator<'a, T> {
    game: &'a MatrixGame<T>,
}

impl<T: Scalar> Operator<T> for GameOperator<'_, T> {
    fn dim(&self) -> usize {
        let (n, m) = self.game.shape();
        n + m
    }

    fn max_derivative_order(&self) -> usize {
        3
    }

    fn smoothness(&self) -> Smoothness<T> {
        Smoothness { order: 1, constant: self.game.payoff.max_abs() }
    }

    fn norm(&self) -> NormKind {
        NormKind::L1
    }

    fn eval(&self, z: &Vector<T>) -> Result<Vector<T>> {
        z.check_dim(self.dim())?;
        let (x, y) = self.game.split(z);
        let gx = self.game.payoff.matvec_transpose(&y);
        let gy = -&self.game.payoff.matvec(&x);
        Ok(Vector::concat(&[&gx, &gy]))
    }

    fn jacobian(&self, z: &Vector<T>) -> Result<DenseMatrix<T>> {
        z.check_dim(self.dim())?;
        let (n, m) = self.game.shape();
        let mut j = DenseMatrix::zeros(n + m, n + m);
        for r in 0..m {
            for c in 0..n {
                let a = self.game.payoff[(r, c)];
                j[(c, n + r)] = a;
                j[(n + r, c)] = -a;
            }
        }
        Ok(j)
    }

    fn contraction(&self, order: usize, z: &Vector<T>, h: &Vector<T>) -> Result<Vector<T>> {
        z.check_dim(self.dim())?;
        h.check_dim(self.dim())?;
        match order {
            0 => self.eval(z),
            1 => Ok(self.jacobian(z)?.matvec(h)),
            2 | 3 => Ok(Vector::zeros(self.dim())),
            _ => Err(Error::UnsupportedOrder { requested: order, available: 3 }),
        }
    }
}
