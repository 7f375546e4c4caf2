//! The lower-bound saddle-point family with closed-form optimum.
//!
//! For index `k = 2t + 1`:
//! `ζ(x, y) = f(x) + ⟨Ax − b, y⟩`, with
//! `f(x) = L_f/(p+1)!·Σ|Cx|ᵢ^{p+1} − (L_f + L_A/2)/p!·x₁`, `C = diag(B_k, I)`,
//! `A = (L_A/p!)·[diag(B_k, 2I) 0]`, `b = (L_A/p!)·(1_k; 0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FeasibleSet, ProxSetup};
use crate::linalg::{DenseMatrix, Vector};
use crate::operator::{Operator, Smoothness};
use crate::scalar::{factorial, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardParams {
    pub t: usize,
    pub p: usize,
    pub l_f: f64,
    pub l_a: f64,
    pub n: usize,
    pub m: usize,
}

impl HardParams {
    /// Default embedding `m = 2t + 2`, `n = 4t + 3`.
    pub fn with_default_dims(t: usize, p: usize, l_f: f64, l_a: f64) -> Self {
        Self { t, p, l_f, l_a, n: 4 * t + 3, m: 2 * t + 2 }
    }

    pub fn index(&self) -> usize {
        2 * self.t + 1
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.index();
        let bad = |msg: String| Err(Error::Configuration(msg));
        if self.t == 0 {
            return bad("t must be at least 1".into());
        }
        if self.p < 2 {
            return bad(format!("hard instance needs p ≥ 2, got {}", self.p));
        }
        if !(self.l_f > 0.0) || !self.l_f.is_finite() {
            return bad(format!("L_f must be positive, got {}", self.l_f));
        }
        if !(self.l_a >= 0.0) || self.l_a > self.l_f {
            return bad(format!("L_A must satisfy 0 ≤ L_A ≤ L_f, got {}", self.l_a));
        }
        if self.m < k + 1 {
            return bad(format!("m = {} must be at least 2t + 2 = {}", self.m, k + 1));
        }
        if self.n < self.m {
            return bad(format!("n = {} must be at least m = {}", self.n, self.m));
        }
        Ok(())
    }
}

/// Anti-triangular `B_k`: row i has 1 at column k−i and −1 at column k−i+1 (0-based).
pub fn b_matrix<T: Scalar>(k: usize) -> DenseMatrix<T> {
    let mut b = DenseMatrix::zeros(k, k);
    for i in 0..k {
        b[(i, k - 1 - i)] = T::one();
        if i > 0 {
            b[(i, k - i)] = -T::one();
        }
    }
    b
}

/// `(Bx)ᵢ = x_{k−i} − x_{k−i+1}` (0-based, second term absent for i = 0).
fn apply_b<T: Scalar>(k: usize, x: &[T], out: &mut [T]) {
    for i in 0..k {
        out[i] = x[k - 1 - i] - if i > 0 { x[k - i] } else { T::zero() };
    }
}

/// `Bᵀs`
fn apply_bt<T: Scalar>(k: usize, s: &[T], out: &mut [T]) {
    for o in out.iter_mut().take(k) {
        *o = T::zero();
    }
    for i in 0..k {
        out[k - 1 - i] = out[k - 1 - i] + s[i];
        if i > 0 {
            out[k - i] = out[k - i] - s[i];
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardInstance<T> {
    params: HardParams,
    l_f: T,
    l_a: T,
    /// `L_A / p!`
    a_scale: T,
    a: DenseMatrix<T>,
    b: Vector<T>,
    r_x: T,
    r_y: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormOptimum<T> {
    pub x: Vector<T>,
    pub y: Vector<T>,
    pub value: T,
}

impl<T: Scalar> HardInstance<T> {
    pub fn new(params: HardParams) -> Result<Self> {
        params.validate()?;
        let k = params.index();
        let (n, m) = (params.n, params.m);
        let l_f = T::c(params.l_f);
        let l_a = T::c(params.l_a);
        let a_scale = l_a / factorial::<T>(params.p);
        let b_k = b_matrix::<T>(k);
        let g = DenseMatrix::identity(m - k).scale(T::c(2.0));
        let square = DenseMatrix::block_diagonal(&[&b_k, &g]).scale(a_scale);
        let mut a = DenseMatrix::zeros(m, n);
        for i in 0..m {
            for j in 0..m {
                a[(i, j)] = square[(i, j)];
            }
        }
        let mut b = Vector::zeros(m);
        for i in 0..k {
            b[i] = a_scale;
        }
        let tp1 = T::from_usize_lossy(params.t + 1);
        let r_x = (T::c(3.0) * tp1 * tp1 * tp1).sqrt();
        let r_y = tp1.sqrt();
        Ok(Self { params, l_f, l_a, a_scale, a, b, r_x, r_y })
    }

    pub fn params(&self) -> &HardParams {
        &self.params
    }

    pub fn k(&self) -> usize {
        self.params.index()
    }

    pub fn a(&self) -> &DenseMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &Vector<T> {
        &self.b
    }

    /// `C = diag(B_k, I_{n−k})`
    pub fn c_matrix(&self) -> DenseMatrix<T> {
        let k = self.k();
        DenseMatrix::block_diagonal(&[&b_matrix(k), &DenseMatrix::identity(self.params.n - k)])
    }

    pub fn radius_x(&self) -> T {
        self.r_x
    }

    pub fn radius_y(&self) -> T {
        self.r_y
    }

    /// `X × Y`, both Euclidean balls centred at the origin.
    pub fn feasible_set(&self) -> FeasibleSet<T> {
        FeasibleSet::Product {
            blocks: vec![
                FeasibleSet::Ball { center: Vector::zeros(self.params.n), radius: self.r_x },
                FeasibleSet::Ball { center: Vector::zeros(self.params.m), radius: self.r_y },
            ],
        }
    }

    pub fn prox_setup(&self) -> ProxSetup {
        ProxSetup::Euclidean
    }

    pub fn optimum(&self) -> ClosedFormOptimum<T> {
        let k = self.k();
        let mut x = Vector::zeros(self.params.n);
        for i in 0..k {
            x[i] = T::from_usize_lossy(k - i);
        }
        let mut y = Vector::zeros(self.params.m);
        for i in 0..k {
            y[i] = T::c(0.5);
        }
        let p = T::from_usize_lossy(self.params.p);
        let value = -(p / (p + T::one()) * self.l_f + self.l_a / T::c(2.0)) / factorial::<T>(self.params.p)
            * T::from_usize_lossy(k);
        ClosedFormOptimum { x, y, value }
    }

    /// `s = Cx`
    fn c_apply(&self, x: &Vector<T>) -> Vec<T> {
        let k = self.k();
        let mut s = x.as_slice().to_vec();
        apply_b(k, x.as_slice(), &mut s[..k]);
        s
    }

    /// `Cᵀs`
    fn c_transpose_apply(&self, s: &[T]) -> Vector<T> {
        let k = self.k();
        let mut out = s.to_vec();
        apply_bt(k, s, &mut out[..k]);
        Vector::from_raw(out)
    }

    fn linear_coefficient(&self) -> T {
        (self.l_f + self.l_a / T::c(2.0)) / factorial::<T>(self.params.p)
    }

    pub fn f(&self, x: &Vector<T>) -> Result<T> {
        x.check_dim(self.params.n)?;
        let p = self.params.p;
        let s = self.c_apply(x);
        let power: T = s.iter().map(|v| v.abs().powi(p as i32 + 1)).sum();
        Ok(self.l_f / factorial::<T>(p + 1) * power - self.linear_coefficient() * x[0])
    }

    pub fn grad_f(&self, x: &Vector<T>) -> Result<Vector<T>> {
        x.check_dim(self.params.n)?;
        let p = self.params.p;
        let coeff = self.l_f / factorial::<T>(p);
        let s: Vec<T> = self.c_apply(x).into_iter().map(|v| coeff * v.signum() * v.abs().powi(p as i32)).collect();
        let mut g = self.c_transpose_apply(&s);
        g[0] = g[0] - self.linear_coefficient();
        Ok(g)
    }

    pub fn hessian_f(&self, x: &Vector<T>) -> Result<DenseMatrix<T>> {
        x.check_dim(self.params.n)?;
        let p = self.params.p;
        let coeff = self.l_f / factorial::<T>(p - 1);
        let s = self.c_apply(x);
        let c = self.c_matrix();
        let n = self.params.n;
        let mut h = DenseMatrix::zeros(n, n);
        for (r, &sr) in s.iter().enumerate() {
            let w = coeff * sr.abs().powi(p as i32 - 1);
            if w == T::zero() {
                continue;
            }
            let row = c.row(r);
            for i in 0..n {
                if row[i] == T::zero() {
                    continue;
                }
                for j in 0..n {
                    h[(i, j)] = h[(i, j)] + w * row[i] * row[j];
                }
            }
        }
        Ok(h)
    }

    /// `∇^{order+1} f(x)[h]^{order}` for `order ∈ {2, 3}`.
    fn higher_f(&self, order: usize, x: &Vector<T>, h: &Vector<T>) -> Vector<T> {
        let p = self.params.p;
        let s = self.c_apply(x);
        let ch = self.c_apply(h);
        let w: Vec<T> = match order {
            2 => {
                let coeff = self.l_f / factorial::<T>(p - 2);
                s.iter()
                    .zip(&ch)
                    .map(|(&sv, &hv)| coeff * sign0(sv) * sv.abs().powi(p as i32 - 2) * hv * hv)
                    .collect()
            }
            _ => {
                let coeff = self.l_f / factorial::<T>(p - 3);
                s.iter().zip(&ch).map(|(&sv, &hv)| coeff * sv.abs().powi(p as i32 - 3) * hv * hv * hv).collect()
            }
        };
        self.c_transpose_apply(&w)
    }

    /// `ζ(x, y) = f(x) + ⟨Ax − b, y⟩`
    pub fn zeta(&self, x: &Vector<T>, y: &Vector<T>) -> Result<T> {
        y.check_dim(self.params.m)?;
        let r = self.a.matvec(x).add_scaled(-T::one(), &self.b);
        Ok(self.f(x)? + r.dot(y))
    }

    /// `φ(x) = f(x) + R_Y‖Ax − b‖₂`, the primal objective over the Y-ball.
    pub fn primal_value(&self, x: &Vector<T>) -> Result<T> {
        x.check_dim(self.params.n)?;
        let ball = FeasibleSet::Ball { center: Vector::zeros(self.params.n), radius: self.r_x };
        ball.check_contains(x, "primal point")?;
        let r = self.a.matvec(x).add_scaled(-T::one(), &self.b);
        Ok(self.f(x)? + self.r_y * r.norm2())
    }

    /// Oracle-class lower bound on the gap for this instance (reported, never asserted).
    pub fn lower_bound_value(&self) -> T {
        lower_bound_value(self.params.p, self.params.t, self.l_f, self.l_a)
    }

    /// Closed form `−(pL_f/(p+1)!)(1 + L_A/(2L_f))^{1+1/p}·t` of `min f` over the
    /// first-`t`-coordinates subspace.
    pub fn restricted_f_minimum(&self) -> T {
        let p = T::from_usize_lossy(self.params.p);
        let t = T::from_usize_lossy(self.params.t);
        -(p * self.l_f / factorial::<T>(self.params.p + 1))
            * (T::one() + self.l_a / (T::c(2.0) * self.l_f)).powf(T::one() + T::one() / p)
            * t
    }

    /// Closed form `(L_A/p!)√(t+1)` of `min ‖Ax − b‖₂` over the same subspace.
    pub fn restricted_residual_minimum(&self) -> T {
        self.a_scale * T::from_usize_lossy(self.params.t + 1).sqrt()
    }

    /// The saddle operator `z = (x, y) ↦ (∇f(x) + Aᵀy, b − Ax)`.
    pub fn operator(&self) -> SaddleOperator<'_, T> {
        SaddleOperator { inst: self }
    }

    /// `(x, y) → z`
    pub fn stack(&self, x: &Vector<T>, y: &Vector<T>) -> Vector<T> {
        Vector::concat(&[x, y])
    }

    /// `z → (x, y)`
    pub fn split(&self, z: &Vector<T>) -> (Vector<T>, Vector<T>) {
        (z.segment(0, self.params.n), z.segment(self.params.n, self.params.m))
    }
}

fn sign0<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Oracle-class lower bound on the gap,
/// `(1/(10·3^{3(p+1)/2}))(pL_f/(p+1)!)R_X^{p+1}/(t+1)^{(3p+1)/2}
///  + (L_A/p!)R_X R_Y^p/(√3(t+1)^{(p+1)/2})` with `R_X² = 3(t+1)³`, `R_Y² = t+1`.
pub fn lower_bound_value<T: Scalar>(p: usize, t: usize, l_f: T, l_a: T) -> T {
    let pf = T::from_usize_lossy(p);
    let tp1 = T::from_usize_lossy(t + 1);
    let r_x = T::c(3.0).sqrt() * tp1.powf(T::c(1.5));
    let r_y = tp1.sqrt();
    let three = T::c(3.0);
    let first = T::one() / (T::c(10.0) * three.powf(three * (pf + T::one()) / T::c(2.0))) * pf * l_f
        / factorial::<T>(p + 1)
        * r_x.powi(p as i32 + 1)
        / tp1.powf((three * pf + T::one()) / T::c(2.0));
    let second = l_a / factorial::<T>(p) * r_x * r_y.powi(p as i32) / (three.sqrt() * tp1.powf((pf + T::one()) / T::c(2.0)));
    first + second
}

pub struct SaddleOperator<'a, T> {
    inst: &'a HardInstance<T>,
}

impl<T: Scalar> Operator<T> for SaddleOperator<'_, T> {
    fn dim(&self) -> usize {
        self.inst.params.n + self.inst.params.m
    }

    fn max_derivative_order(&self) -> usize {
        self.inst.params.p.min(3)
    }

    /// `L_f‖C‖^{p+1} ≤ 2^{p+1}L_f`; the bilinear coupling adds nothing for `p ≥ 2`.
    fn smoothness(&self) -> Smoothness<T> {
        let p = self.inst.params.p;
        Smoothness { order: p, constant: T::c(2f64.powi(p as i32 + 1)) * self.inst.l_f }
    }

    fn eval(&self, z: &Vector<T>) -> Result<Vector<T>> {
        z.check_dim(self.dim())?;
        let (x, y) = self.inst.split(z);
        let gx = self.inst.grad_f(&x)?.add_scaled(T::one(), &self.inst.a.matvec_transpose(&y));
        let gy = self.inst.b.add_scaled(-T::one(), &self.inst.a.matvec(&x));
        let out = Vector::concat(&[&gx, &gy]);
        out.check_finite("hard-instance operator")?;
        Ok(out)
    }

    fn jacobian(&self, z: &Vector<T>) -> Result<DenseMatrix<T>> {
        z.check_dim(self.dim())?;
        let (n, m) = (self.inst.params.n, self.inst.params.m);
        let (x, _) = self.inst.split(z);
        let h = self.inst.hessian_f(&x)?;
        let a = &self.inst.a;
        let mut j = DenseMatrix::zeros(n + m, n + m);
        for r in 0..n {
            for c in 0..n {
                j[(r, c)] = h[(r, c)];
            }
        }
        for r in 0..m {
            for c in 0..n {
                j[(c, n + r)] = a[(r, c)];
                j[(n + r, c)] = -a[(r, c)];
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
            2 | 3 if order <= self.max_derivative_order() => {
                let (x, _) = self.inst.split(z);
                let (hx, _) = self.inst.split(h);
                let top = self.inst.higher_f(order, &x, &hx);
                Ok(Vector::concat(&[&top, &Vector::zeros(self.inst.params.m)]))
            }
            _ => Err(crate::error::Error::UnsupportedOrder { requested: order, available: self.max_derivative_order() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b3_matches_display() {
        let b = b_matrix::<f64>(3);
        let expected = DenseMatrix::from_f64_rows(&[&[0.0, 0.0, 1.0], &[0.0, 1.0, -1.0], &[1.0, -1.0, 0.0]]).unwrap();
        assert_eq!(b, expected);
        let x = Vector::from_f64_slice(&[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(b.matvec(&x), Vector::from_f64_slice(&[1.0, 1.0, 1.0]).unwrap());
    }

    #[test]
    fn structured_products_match_dense() {
        let inst = HardInstance::<f64>::new(HardParams::with_default_dims(2, 3, 1.0, 0.5)).unwrap();
        let x = Vector::from_f64_slice(&(0..11).map(|i| (i as f64 * 0.7).sin()).collect::<Vec<_>>()).unwrap();
        let c = inst.c_matrix();
        assert!(Vector::from_raw(inst.c_apply(&x)).max_abs_diff(&c.matvec(&x)) < 1e-15);
        assert!(inst.c_transpose_apply(x.as_slice()).max_abs_diff(&c.matvec_transpose(&x)) < 1e-15);
    }

    #[test]
    fn t1_optimum_value() {
        let inst = HardInstance::<f64>::new(HardParams::with_default_dims(1, 2, 1.0, 1.0)).unwrap();
        let opt = inst.optimum();
        assert!((opt.value + 1.75).abs() < 1e-15);
        assert_eq!(&opt.x.as_slice()[..4], &[3.0, 2.0, 1.0, 0.0]);
        assert!((inst.zeta(&opt.x, &opt.y).unwrap() - opt.value).abs() < 1e-12);
        assert_eq!(inst.f(&Vector::zeros(7)).unwrap(), 0.0);
    }

    #[test]
    fn primal_value_at_origin() {
        let inst = HardInstance::<f64>::new(HardParams::with_default_dims(2, 2, 1.0, 1.0)).unwrap();
        let v = inst.primal_value(&Vector::zeros(11)).unwrap();
        assert!((v - 3f64.sqrt() * 0.5 * 5f64.sqrt()).abs() < 1e-14);
        assert!(inst.primal_value(&Vector::filled(11, 100.0)).is_err());
    }

    #[test]
    fn lower_bound_reference_value() {
        // R_X³/2^{3.5} = 2·3^{1.5}, so the value is 2/(30·27) = 1/405.
        let v = lower_bound_value::<f64>(2, 1, 1.0, 0.0);
        assert!((v - 1.0 / 405.0).abs() < 1e-15, "{v}");
    }

    #[test]
    fn dimension_validation() {
        assert!(HardInstance::<f64>::new(HardParams { t: 1, p: 2, l_f: 1.0, l_a: 0.0, n: 7, m: 3 }).is_err());
        assert!(HardInstance::<f64>::new(HardParams { t: 1, p: 2, l_f: 1.0, l_a: 0.0, n: 3, m: 4 }).is_err());
        assert!(HardInstance::<f64>::new(HardParams { t: 1, p: 1, l_f: 1.0, l_a: 0.0, n: 7, m: 4 }).is_err());
        assert!(HardInstance::<f64>::new(HardParams { t: 1, p: 2, l_f: 1.0, l_a: 2.0, n: 7, m: 4 }).is_err());
    }
}
