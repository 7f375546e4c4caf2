//! Operators `g: Rⁿ → Rⁿ` with analytic higher-order directional derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};
use crate::scalar::{factorial, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Euclidean,
    L1,
    LInf,
}

impl NormKind {
    pub fn dual(self) -> Self {
        match self {
            NormKind::Euclidean => NormKind::Euclidean,
            NormKind::L1 => NormKind::LInf,
            NormKind::LInf => NormKind::L1,
        }
    }

    pub fn norm<T: Scalar>(self, v: &Vector<T>) -> T {
        match self {
            NormKind::Euclidean => v.norm2(),
            NormKind::L1 => v.norm1(),
            NormKind::LInf => v.norm_inf(),
        }
    }
}

/// Declared smoothness: the `order − 1`st derivative is `constant`-Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothness<T> {
    pub order: usize,
    pub constant: T,
}

/// A vector field with analytic derivatives up to `max_derivative_order`.
///
/// `contraction(i, x, h)` returns the fully contracted `∇ⁱg(x)[h]ⁱ`.
/// Implementations must be deterministic and re-entrant.
pub trait Operator<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    /// Highest `i` for which `contraction(i, ..)` is available (at most 3).
    fn max_derivative_order(&self) -> usize;

    fn smoothness(&self) -> Smoothness<T>;

    /// Primal norm the smoothness constant refers to.
    fn norm(&self) -> NormKind {
        NormKind::Euclidean
    }

    fn is_monotone(&self) -> bool {
        true
    }

    fn eval(&self, x: &Vector<T>) -> Result<Vector<T>>;

    fn jacobian(&self, x: &Vector<T>) -> Result<DenseMatrix<T>>;

    fn contraction(&self, order: usize, x: &Vector<T>, h: &Vector<T>) -> Result<Vector<T>> {
        match order {
            0 => self.eval(x),
            1 => {
                h.check_dim(self.dim())?;
                Ok(self.jacobian(x)?.matvec(h))
            }
            _ => Err(Error::UnsupportedOrder { requested: order, available: self.max_derivative_order().min(1) }),
        }
    }
}

impl<T: Scalar, O: Operator<T> + ?Sized> Operator<T> for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn max_derivative_order(&self) -> usize {
        (**self).max_derivative_order()
    }
    fn smoothness(&self) -> Smoothness<T> {
        (**self).smoothness()
    }
    fn norm(&self) -> NormKind {
        (**self).norm()
    }
    fn is_monotone(&self) -> bool {
        (**self).is_monotone()
    }
    fn eval(&self, x: &Vector<T>) -> Result<Vector<T>> {
        (**self).eval(x)
    }
    fn jacobian(&self, x: &Vector<T>) -> Result<DenseMatrix<T>> {
        (**self).jacobian(x)
    }
    fn contraction(&self, order: usize, x: &Vector<T>, h: &Vector<T>) -> Result<Vector<T>> {
        (**self).contraction(order, x, h)
    }
}

impl<T: Scalar, O: Operator<T> + ?Sized> Operator<T> for Box<O> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn max_derivative_order(&self) -> usize {
        (**self).max_derivative_order()
    }
    fn smoothness(&self) -> Smoothness<T> {
        (**self).smoothness()
    }
    fn norm(&self) -> NormKind {
        (**self).norm()
    }
    fn is_monotone(&self) -> bool {
        (**self).is_monotone()
    }
    fn eval(&self, x: &Vector<T>) -> Result<Vector<T>> {
        (**self).eval(x)
    }
    fn jacobian(&self, x: &Vector<T>) -> Result<DenseMatrix<T>> {
        (**self).jacobian(x)
    }
    fn contraction(&self, order: usize, x: &Vector<T>, h: &Vector<T>) -> Result<Vector<T>> {
        (**self).contraction(order, x, h)
    }
}

fn check_order<T: Scalar, O: Operator<T> + ?Sized>(op: &O, order: usize) -> Result<()> {
    let available = op.max_derivative_order();
    if order > available {
        return Err(Error::UnsupportedOrder { requested: order, available });
    }
    Ok(())
}

/// `T_order(query; center) = Σᵢ (1/i!) ∇ⁱg(center)[query − center]ⁱ`.
pub fn taylor_expand<T: Scalar, O: Operator<T> + ?Sized>(
    op: &O,
    order: usize,
    center: &Vector<T>,
    query: &Vector<T>,
) -> Result<Vector<T>> {
    check_order(op, order)?;
    center.check_dim(op.dim())?;
    query.check_dim(op.dim())?;
    let h = query - center;
    let mut out = op.eval(center)?;
    for i in 1..=order {
        let term = op.contraction(i, center, &h)?;
        out.axpy(T::one() / factorial::<T>(i), &term);
    }
    out.check_finite("Taylor expansion")?;
    Ok(out)
}

/// `‖g(query) − T_{p−1}(query; center)‖_*` with `p` the declared smoothness order
/// and the dual taken of `norm`.
pub fn taylor_remainder_norm<T: Scalar, O: Operator<T> + ?Sized>(
    op: &O,
    center: &Vector<T>,
    query: &Vector<T>,
    norm: NormKind,
) -> Result<T> {
    let p = op.smoothness().order;
    if p == 0 {
        return Err(Error::Configuration("smoothness order must be at least 1".into()));
    }
    let expansion = taylor_expand(op, p - 1, center, query)?;
    let value = op.eval(query)?;
    Ok(norm.dual().norm(&(&value - &expansion)))
}

/// Right-hand side of the smoothness inequality, `(L_p/p!)‖query − center‖^p`.
pub fn taylor_remainder_bound<T: Scalar, O: Operator<T> + ?Sized>(
    op: &O,
    center: &Vector<T>,
    query: &Vector<T>,
    norm: NormKind,
) -> T {
    let s = op.smoothness();
    let r = norm.norm(&(query - center));
    s.constant / factorial::<T>(s.order) * r.powi(s.order as i32)
}

/// Max-norm discrepancy between the analytic `∇^order g(x)[h]^order` and a
/// central finite-difference estimate with step `fd_step`.
pub fn directional_derivative_check<T: Scalar, O: Operator<T> + ?Sized>(
    op: &O,
    order: usize,
    x: &Vector<T>,
    h: &Vector<T>,
    fd_step: T,
) -> Result<T> {
    if !(fd_step > T::zero()) || !fd_step.is_finite() {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {fd_step}")));
    }
    check_order(op, order)?;
    x.check_dim(op.dim())?;
    h.check_dim(op.dim())?;
    let analytic = op.contraction(order, x, h)?;
    let e = fd_step;
    let at = |s: T| op.eval(&x.add_scaled(s, h));
    let two = T::c(2.0);
    let estimate = match order {
        0 => op.eval(x)?,
        1 => (&at(e)? - &at(-e)?).scale(T::one() / (two * e)),
        2 => {
            let mid = op.eval(x)?;
            at(e)?.add_scaled(-two, &mid).add_scaled(T::one(), &at(-e)?).scale(T::one() / (e * e))
        }
        3 => {
            let num = at(two * e)?
                .add_scaled(-two, &at(e)?)
                .add_scaled(two, &at(-e)?)
                .add_scaled(-T::one(), &at(-two * e)?);
            num.scale(T::one() / (two * e * e * e))
        }
        _ => return Err(Error::UnsupportedOrder { requested: order, available: 3 }),
    };
    Ok(analytic.max_abs_diff(&estimate))
}

/// `g(x) = Mx + c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffineOperator<T> {
    matrix: DenseMatrix<T>,
    offset: Vector<T>,
    monotone: bool,
}

impl<T: Scalar> AffineOperator<T> {
    pub fn new(matrix: DenseMatrix<T>, offset: Vector<T>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.rows(), got: matrix.cols() });
        }
        offset.check_dim(matrix.rows())?;
        let sym = matrix.symmetric_part();
        let monotone = crate::linalg::symmetric_eigenvalues(&sym)
            .into_iter()
            .fold(T::infinity(), |a, b| a.min(b))
            >= -T::c(1e-12) * matrix.max_abs().max(T::one());
        Ok(Self { matrix, offset, monotone })
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.matrix
    }

    pub fn offset(&self) -> &Vector<T> {
        &self.offset
    }
}

impl<T: Scalar> Operator<T> for AffineOperator<T> {
    fn dim(&self) -> usize {
        self.offset.dim()
    }

    fn max_derivative_order(&self) -> usize {
        3
    }

    fn smoothness(&self) -> Smoothness<T> {
        Smoothness { order: 1, constant: self.matrix.norm2() }
    }

    fn is_monotone(&self) -> bool {
        self.monotone
    }

    fn eval(&self, x: &Vector<T>) -> Result<Vector<T>> {
        x.check_dim(self.dim())?;
        let out = self.matrix.matvec(x).add_scaled(T::one(), &self.offset);
        out.check_finite("affine operator")?;
        Ok(out)
    }

    fn jacobian(&self, x: &Vector<T>) -> Result<DenseMatrix<T>> {
        x.check_dim(self.dim())?;
        Ok(self.matrix.clone())
    }

    fn contraction(&self, order: usize, x: &Vector<T>, h: &Vector<T>) -> Result<Vector<T>> {
        x.check_dim(self.dim())?;
        h.check_dim(self.dim())?;
        match order {
            0 => self.eval(x),
            1 => Ok(self.matrix.matvec(h)),
            2 | 3 => Ok(Vector::zeros(self.dim())),
            _ => Err(Error::UnsupportedOrder { requested: order, available: 3 }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `g(x)_j = x_j³`
    struct Cubic {
        n: usize,
    }

    impl Operator<f64> for Cubic {
        fn dim(&self) -> usize {
            self.n
        }
        fn max_derivative_order(&self) -> usize {
            3
        }
        fn smoothness(&self) -> Smoothness<f64> {
            Smoothness { order: 2, constant: 6.0 }
        }
        fn eval(&self, x: &Vector<f64>) -> Result<Vector<f64>> {
            Ok(x.map(|v| v * v * v))
        }
        fn jacobian(&self, x: &Vector<f64>) -> Result<DenseMatrix<f64>> {
            Ok(DenseMatrix::diagonal(&x.map(|v| 3.0 * v * v).into_vec()))
        }
        fn contraction(&self, order: usize, x: &Vector<f64>, h: &Vector<f64>) -> Result<Vector<f64>> {
            match order {
                0 => self.eval(x),
                1 => Ok(x.zip_map(h, |a, b| 3.0 * a * a * b)),
                2 => Ok(x.zip_map(h, |a, b| 6.0 * a * b * b)),
                3 => Ok(h.map(|b| 6.0 * b * b * b)),
                _ => Err(Error::UnsupportedOrder { requested: order, available: 3 }),
            }
        }
    }

    fn random_affine(n: usize, seed: u64) -> AffineOperator<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DenseMatrix::new(n, n, (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let c = Vector::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        AffineOperator::new(m, c).unwrap()
    }

    #[test]
    fn dual_is_involutive() {
        for n in [NormKind::Euclidean, NormKind::L1, NormKind::LInf] {
            assert_eq!(n.dual().dual(), n);
        }
        assert_eq!(NormKind::L1.dual(), NormKind::LInf);
    }

    #[test]
    fn zeroth_order_expansion_is_value() {
        let op = random_affine(4, 1);
        let c = Vector::from_f64_slice(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let q = Vector::from_f64_slice(&[1.0, -1.0, 2.0, 0.0]).unwrap();
        assert_eq!(taylor_expand(&op, 0, &c, &q).unwrap(), op.eval(&c).unwrap());
        assert_eq!(taylor_expand(&op, 3, &c, &c).unwrap(), op.eval(&c).unwrap());
    }

    #[test]
    fn first_order_expansion_of_affine_is_exact() {
        let op = random_affine(6, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let c = Vector::new((0..6).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            let q = Vector::new((0..6).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            let direct = op.matrix().matvec(&q).add_scaled(1.0, op.offset());
            let t1 = taylor_expand(&op, 1, &c, &q).unwrap();
            assert!(t1.max_abs_diff(&direct) < 1e-12);
        }
    }

    #[test]
    fn cubic_remainder_at_unit_vector() {
        let op = Cubic { n: 3 };
        let zero = Vector::zeros(3);
        let e1 = Vector::unit(0, 3);
        assert_eq!(op.jacobian(&zero).unwrap().max_abs(), 0.0);
        let r = taylor_remainder_norm(&op, &zero, &e1, NormKind::Euclidean).unwrap();
        assert_eq!(r, 1.0);
        assert!(r <= taylor_remainder_bound(&op, &zero, &e1, NormKind::Euclidean));
    }

    #[test]
    fn affine_remainder_vanishes_at_second_order() {
        let op = random_affine(3, 4);
        struct AsP2<'a>(&'a AffineOperator<f64>);
        impl Operator<f64> for AsP2<'_> {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn max_derivative_order(&self) -> usize {
                3
            }
            fn smoothness(&self) -> Smoothness<f64> {
                Smoothness { order: 2, constant: 0.0 }
            }
            fn eval(&self, x: &Vector<f64>) -> Result<Vector<f64>> {
                self.0.eval(x)
            }
            fn jacobian(&self, x: &Vector<f64>) -> Result<DenseMatrix<f64>> {
                self.0.jacobian(x)
            }
            fn contraction(&self, order: usize, x: &Vector<f64>, h: &Vector<f64>) -> Result<Vector<f64>> {
                self.0.contraction(order, x, h)
            }
        }
        let x = Vector::from_f64_slice(&[1.0, 2.0, 3.0]).unwrap();
        let y = Vector::from_f64_slice(&[-1.0, 0.5, 4.0]).unwrap();
        assert!(taylor_remainder_norm(&AsP2(&op), &x, &y, NormKind::Euclidean).unwrap() < 1e-13);
    }

    #[test]
    fn finite_differences_agree() {
        let affine = random_affine(5, 5);
        let x = Vector::from_f64_slice(&[0.3, -0.2, 0.5, 1.0, -1.0]).unwrap();
        let h = Vector::from_f64_slice(&[1.0, 0.5, -0.5, 0.25, 0.0]).unwrap();
        assert!(directional_derivative_check(&affine, 1, &x, &h, 1e-4).unwrap() <= 1e-10);
        let cubic = Cubic { n: 5 };
        assert!(directional_derivative_check(&cubic, 2, &x, &h, 1e-4).unwrap() <= 1e-6);
        assert!(directional_derivative_check(&cubic, 3, &x, &h, 1e-3).unwrap() <= 1e-4);
        let zero = Vector::zeros(5);
        assert_eq!(directional_derivative_check(&cubic, 1, &x, &zero, 1e-4).unwrap(), 0.0);
    }

    #[test]
    fn unsupported_order_rejected() {
        let affine = random_affine(2, 6);
        let x = Vector::zeros(2);
        assert!(matches!(
            taylor_expand(&affine, 4, &x, &x),
            Err(Error::UnsupportedOrder { requested: 4, available: 3 })
        ));
        assert!(directional_derivative_check(&affine, 1, &x, &x, 0.0).is_err());
    }
}
