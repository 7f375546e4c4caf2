//! Real Schur decomposition `A = Q T Qᵀ` with `T` quasi-upper-triangular.
//!
//! Householder reduction to Hessenberg form followed by Francis double-shift
//! QR sweeps, after the EISPACK `orthes`/`hqr2` pair. Only the Schur form is
//! produced; eigenvectors are never back-substituted.

use std::ops::{Index, IndexMut};

use super::{DenseMatrix, Vector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One diagonal block of the quasi-triangular factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagonalBlock {
    pub start: usize,
    /// 1 for a real eigenvalue, 2 for a complex-conjugate pair.
    pub size: usize,
}

#[derive(Debug, Clone)]
pub struct RealSchur<T> {
    q: DenseMatrix<T>,
    t: DenseMatrix<T>,
    blocks: Vec<DiagonalBlock>,
}

/// Square scratch matrix indexed with signed integers, matching the loop
/// structure of the original Algol routines.
struct Sq<T> {
    n: usize,
    a: Vec<T>,
}

impl<T> Index<(isize, isize)> for Sq<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (isize, isize)) -> &T {
        &self.a[i as usize * self.n + j as usize]
    }
}

impl<T> IndexMut<(isize, isize)> for Sq<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (isize, isize)) -> &mut T {
        &mut self.a[i as usize * self.n + j as usize]
    }
}

impl<T: Scalar> RealSchur<T> {
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: a.rows(), got: a.cols() });
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("Schur input"));
        }
        let n = a.rows();
        let mut h = Sq { n, a: a.as_slice().to_vec() };
        let mut v = Sq { n, a: vec![T::zero(); n * n] };
        reduce_to_hessenberg(&mut h, &mut v);
        for i in 0..n {
            for j in 0..i.saturating_sub(1) {
                h.a[i * n + j] = T::zero();
            }
        }
        let complex_tops = francis_qr(&mut h, &mut v)?;

        let mut blocks = Vec::new();
        let mut i = 0;
        while i < n {
            if complex_tops[i] {
                blocks.push(DiagonalBlock { start: i, size: 2 });
                i += 2;
            } else {
                blocks.push(DiagonalBlock { start: i, size: 1 });
                i += 1;
            }
        }
        let mut t = DenseMatrix::new(n, n, h.a)?;
        for i in 1..n {
            for j in 0..i {
                let keep = j + 1 == i && complex_tops[j];
                if !keep {
                    t[(i, j)] = T::zero();
                }
            }
        }
        let q = DenseMatrix::new(n, n, v.a)?;
        Ok(Self { q, t, blocks })
    }

    /// Orthogonal factor.
    pub fn q(&self) -> &DenseMatrix<T> {
        &self.q
    }

    /// Quasi-upper-triangular factor.
    pub fn t(&self) -> &DenseMatrix<T> {
        &self.t
    }

    pub fn blocks(&self) -> &[DiagonalBlock] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.t.rows()
    }

    /// Solves `(T + shift·I) w = rhs` by block back-substitution, O(n²).
    pub fn solve_quasi_triangular(&self, rhs: &Vector<T>, shift: T) -> Result<Vector<T>> {
        let n = self.dim();
        rhs.check_dim(n)?;
        let t = &self.t;
        let scale = t.max_abs().max(shift.abs()).max(T::min_positive_value());
        let tiny = T::epsilon() * scale;
        let mut w = vec![T::zero(); n];
        for block in self.blocks.iter().rev() {
            let b = block.start;
            let end = b + block.size;
            let residual = |row: usize| {
                (end..n).fold(rhs[row], |acc, j| acc - t[(row, j)] * w[j])
            };
            if block.size == 1 {
                let d = t[(b, b)] + shift;
                if d.abs() <= tiny {
                    return Err(Error::SingularShift { lambda: shift.to_f64_lossy() });
                }
                w[b] = residual(b) / d;
            } else {
                let (r0, r1) = (residual(b), residual(b + 1));
                let a00 = t[(b, b)] + shift;
                let a01 = t[(b, b + 1)];
                let a10 = t[(b + 1, b)];
                let a11 = t[(b + 1, b + 1)] + shift;
                let det = a00 * a11 - a01 * a10;
                if det.abs() <= tiny * tiny {
                    return Err(Error::SingularShift { lambda: shift.to_f64_lossy() });
                }
                w[b] = (a11 * r0 - a01 * r1) / det;
                w[b + 1] = (a00 * r1 - a10 * r0) / det;
            }
        }
        let out = Vector::from_raw(w);
        if !out.is_finite() {
            return Err(Error::SingularShift { lambda: shift.to_f64_lossy() });
        }
        Ok(out)
    }

    /// `Q T Qᵀ`
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        self.q.matmul(&self.t).matmul(&self.q.transpose())
    }
}

fn reduce_to_hessenberg<T: Scalar>(h: &mut Sq<T>, v: &mut Sq<T>) {
    let n = h.n as isize;
    let low: isize = 0;
    let high: isize = n - 1;
    let mut ort = vec![T::zero(); h.n];
    let o = |i: isize| i as usize;

    for m in (low + 1)..high {
        let mut scale = T::zero();
        for i in m..=high {
            scale = scale + h[(i, m - 1)].abs();
        }
        if scale == T::zero() {
            continue;
        }
        let mut hh = T::zero();
        for i in (m..=high).rev() {
            ort[o(i)] = h[(i, m - 1)] / scale;
            hh = hh + ort[o(i)] * ort[o(i)];
        }
        let mut g = hh.sqrt();
        if ort[o(m)] > T::zero() {
            g = -g;
        }
        hh = hh - ort[o(m)] * g;
        ort[o(m)] = ort[o(m)] - g;

        for j in m..n {
            let mut f = T::zero();
            for i in (m..=high).rev() {
                f = f + ort[o(i)] * h[(i, j)];
            }
            f = f / hh;
            for i in m..=high {
                h[(i, j)] = h[(i, j)] - f * ort[o(i)];
            }
        }
        for i in 0..=high {
            let mut f = T::zero();
            for j in (m..=high).rev() {
                f = f + ort[o(j)] * h[(i, j)];
            }
            f = f / hh;
            for j in m..=high {
                h[(i, j)] = h[(i, j)] - f * ort[o(j)];
            }
        }
        ort[o(m)] = scale * ort[o(m)];
        h[(m, m - 1)] = scale * g;
    }

    for i in 0..n {
        for j in 0..n {
            v[(i, j)] = if i == j { T::one() } else { T::zero() };
        }
    }
    for m in ((low + 1)..high).rev() {
        if h[(m, m - 1)] == T::zero() {
            continue;
        }
        for i in (m + 1)..=high {
            ort[o(i)] = h[(i, m - 1)];
        }
        for j in m..=high {
            let mut g = T::zero();
            for i in m..=high {
                g = g + ort[o(i)] * v[(i, j)];
            }
            g = (g / ort[o(m)]) / h[(m, m - 1)];
            for i in m..=high {
                v[(i, j)] = v[(i, j)] + g * ort[o(i)];
            }
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix. Returns, for each
/// index, whether it starts a 2×2 block holding a complex-conjugate pair.
fn francis_qr<T: Scalar>(h: &mut Sq<T>, v: &mut Sq<T>) -> Result<Vec<bool>> {
    let nn = h.n as isize;
    let mut n = nn - 1;
    let low: isize = 0;
    let high: isize = nn - 1;
    let eps = T::epsilon();
    let two = T::c(2.0);
    let mut exshift = T::zero();
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut w, mut x, mut y);
    let mut complex_tops = vec![false; h.n];

    let mut norm = T::zero();
    for i in 0..nn {
        for j in (i - 1).max(0)..nn {
            norm = norm + h[(i, j)].abs();
        }
    }

    let max_sweeps = 100 * h.n.max(1);
    let mut sweeps = 0usize;
    let mut iter = 0usize;
    while n >= low {
        let mut l = n;
        while l > low {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == T::zero() {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            h[(n, n)] = h[(n, n)] + exshift;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            w = h[(n, n - 1)] * h[(n - 1, n)];
            p = (h[(n - 1, n - 1)] - h[(n, n)]) / two;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(n, n)] = h[(n, n)] + exshift;
            h[(n - 1, n - 1)] = h[(n - 1, n - 1)] + exshift;

            if q >= T::zero() {
                z = if p >= T::zero() { p + z } else { p - z };
                x = h[(n, n - 1)];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p = p / r;
                q = q / r;

                for j in (n - 1)..nn {
                    z = h[(n - 1, j)];
                    h[(n - 1, j)] = q * z + p * h[(n, j)];
                    h[(n, j)] = q * h[(n, j)] - p * z;
                }
                for i in 0..=n {
                    z = h[(i, n - 1)];
                    h[(i, n - 1)] = q * z + p * h[(i, n)];
                    h[(i, n)] = q * h[(i, n)] - p * z;
                }
                for i in low..=high {
                    z = v[(i, n - 1)];
                    v[(i, n - 1)] = q * z + p * v[(i, n)];
                    v[(i, n)] = q * v[(i, n)] - p * z;
                }
            } else {
                complex_tops[(n - 1) as usize] = true;
            }
            n -= 2;
            iter = 0;
        } else {
            sweeps += 1;
            if sweeps > max_sweeps {
                return Err(Error::NonConvergence {
                    iterations: sweeps,
                    certificate: h[(n, n - 1)].abs().to_f64_lossy(),
                    best: Vec::new(),
                });
            }
            x = h[(n, n)];
            y = T::zero();
            w = T::zero();
            if l < n {
                y = h[(n - 1, n - 1)];
                w = h[(n, n - 1)] * h[(n - 1, n)];
            }

            // Wilkinson's exceptional shift
            if iter == 10 {
                exshift = exshift + x;
                for i in low..=n {
                    h[(i, i)] = h[(i, i)] - x;
                }
                s = h[(n, n - 1)].abs() + h[(n - 1, n - 2)].abs();
                x = T::c(0.75) * s;
                y = x;
                w = T::c(-0.4375) * s * s;
            }

            // MATLAB's exceptional shift
            if iter == 30 {
                s = (y - x) / two;
                s = s * s + w;
                if s > T::zero() {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / two + s);
                    for i in low..=n {
                        h[(i, i)] = h[(i, i)] - s;
                    }
                    exshift = exshift + s;
                    x = T::c(0.964);
                    y = x;
                    w = x;
                }
            }

            iter += 1;

            // Look for two consecutive small sub-diagonal elements.
            let mut m = n - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p = p / s;
                q = q / s;
                r = r / s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=n {
                h[(i, i - 2)] = T::zero();
                if i > m + 2 {
                    h[(i, i - 3)] = T::zero();
                }
            }

            // Double QR step on rows l..n and columns m..n.
            let mut k = m;
            while k < n {
                let notlast = k != n - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { T::zero() };
                    x = p.abs() + q.abs() + r.abs();
                    if x == T::zero() {
                        k += 1;
                        continue;
                    }
                    p = p / x;
                    q = q / x;
                    r = r / x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < T::zero() {
                    s = -s;
                }
                if s != T::zero() {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p = p + s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q = q / p;
                    r = r / p;

                    for j in k..nn {
                        p = h[(k, j)] + q * h[(k + 1, j)];
                        if notlast {
                            p = p + r * h[(k + 2, j)];
                            h[(k + 2, j)] = h[(k + 2, j)] - p * z;
                        }
                        h[(k, j)] = h[(k, j)] - p * x;
                        h[(k + 1, j)] = h[(k + 1, j)] - p * y;
                    }
                    for i in 0..=n.min(k + 3) {
                        p = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            p = p + z * h[(i, k + 2)];
                            h[(i, k + 2)] = h[(i, k + 2)] - p * r;
                        }
                        h[(i, k)] = h[(i, k)] - p;
                        h[(i, k + 1)] = h[(i, k + 1)] - p * q;
                    }
                    for i in low..=high {
                        p = x * v[(i, k)] + y * v[(i, k + 1)];
                        if notlast {
                            p = p + z * v[(i, k + 2)];
                            v[(i, k + 2)] = v[(i, k + 2)] - p * r;
                        }
                        v[(i, k)] = v[(i, k)] - p;
                        v[(i, k + 1)] = v[(i, k + 1)] - p * q;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(complex_tops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> DenseMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        DenseMatrix::new(n, n, data).unwrap()
    }

    fn rel_err(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> f64 {
        a.sub(b).norm_frobenius() / b.norm_frobenius().max(1e-300)
    }

    #[test]
    fn reconstructs_random_matrices() {
        for (n, seed) in [(1, 1), (2, 2), (3, 3), (7, 4), (20, 5), (50, 6)] {
            let a = random_matrix(n, seed);
            let schur = RealSchur::new(&a).unwrap();
            assert!(rel_err(&schur.reconstruct(), &a) < 1e-12, "n={n}");
            let qtq = schur.q().transpose().matmul(schur.q());
            assert!(rel_err(&qtq, &DenseMatrix::identity(n)) < 1e-12);
        }
    }

    #[test]
    fn factor_is_quasi_triangular() {
        let a = random_matrix(30, 9);
        let schur = RealSchur::new(&a).unwrap();
        let t = schur.t();
        let covered: usize = schur.blocks().iter().map(|b| b.size).sum();
        assert_eq!(covered, 30);
        for i in 0..30 {
            for j in 0..i {
                let allowed = schur.blocks().iter().any(|b| b.size == 2 && b.start == j && i == j + 1);
                if !allowed {
                    assert_eq!(t[(i, j)], 0.0);
                }
            }
        }
        // a random real matrix of this size almost surely has complex pairs
        assert!(schur.blocks().iter().any(|b| b.size == 2));
    }

    #[test]
    fn rotation_matrix_keeps_complex_block() {
        let a = DenseMatrix::<f64>::from_f64_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap();
        let schur = RealSchur::new(&a).unwrap();
        assert_eq!(schur.blocks(), &[DiagonalBlock { start: 0, size: 2 }]);
        assert!(rel_err(&schur.reconstruct(), &a) < 1e-15);
    }

    #[test]
    fn shifted_solve_matches_lu() {
        let a = random_matrix(25, 11);
        let schur = RealSchur::new(&a).unwrap();
        let b = Vector::new((0..25).map(|i| (i as f64).sin()).collect()).unwrap();
        for shift in [0.5, 3.0, 10.0] {
            let qtb = schur.q().matvec_transpose(&b);
            let w = schur.solve_quasi_triangular(&qtb, shift).unwrap();
            let x = schur.q().matvec(&w);
            let direct = a.shifted(shift).solve(&b).unwrap();
            assert!(x.max_abs_diff(&direct) < 1e-10 * direct.norm_inf().max(1.0));
        }
    }

    #[test]
    fn works_in_single_precision() {
        let a = DenseMatrix::<f32>::from_f64_rows(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.0]])
            .unwrap();
        let schur = RealSchur::new(&a).unwrap();
        let err = schur.reconstruct().sub(&a).norm_frobenius();
        assert!(err < 1e-5);
    }
}
