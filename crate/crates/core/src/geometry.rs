//! Distance-generating functions, Bregman divergences, feasible sets and
//! mirror steps.
//!
//! Conventions: the Euclidean setup uses `d(x) = ‖x‖²` so `ω(x, y) = ‖x − y‖²`;
//! the entropy setup uses `d(x) = 2 Σ xᵢ ln xᵢ` so `ω` is twice the
//! generalized KL divergence and dominates `‖x − y‖₁²` on the simplex.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::operator::NormKind;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProxSetup {
    Euclidean,
    Entropy,
}

impl ProxSetup {
    pub fn norm(self) -> NormKind {
        match self {
            ProxSetup::Euclidean => NormKind::Euclidean,
            ProxSetup::Entropy => NormKind::L1,
        }
    }

    pub fn d<T: Scalar>(self, x: &Vector<T>) -> T {
        match self {
            ProxSetup::Euclidean => x.norm2_squared(),
            ProxSetup::Entropy => {
                let floor = T::log_floor();
                T::c(2.0) * x.iter().map(|&v| if v > T::zero() { v * v.max(floor).ln() } else { T::zero() }).sum()
            }
        }
    }

    pub fn grad_d<T: Scalar>(self, x: &Vector<T>) -> Vector<T> {
        match self {
            ProxSetup::Euclidean => x.scale(T::c(2.0)),
            ProxSetup::Entropy => {
                let floor = T::log_floor();
                x.map(|v| T::c(2.0) * (v.max(floor).ln() + T::one()))
            }
        }
    }

    /// `ω(x, y) = d(x) − d(y) − ⟨∇d(y), x − y⟩`, evaluated in a cancellation-free form.
    pub fn omega<T: Scalar>(self, x: &Vector<T>, y: &Vector<T>) -> T {
        debug_assert_eq!(x.dim(), y.dim());
        match self {
            ProxSetup::Euclidean => (x - y).norm2_squared(),
            ProxSetup::Entropy => {
                let floor = T::log_floor();
                let s: T = x
                    .iter()
                    .zip(y.iter())
                    .map(|(&a, &b)| {
                        let b = b.max(floor);
                        let xlog = if a > T::zero() { a * (a.max(floor).ln() - b.ln()) } else { T::zero() };
                        xlog - a + b
                    })
                    .sum();
                (T::c(2.0) * s).max(T::zero())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeasibleSet<T> {
    WholeSpace { dim: usize },
    Ball { center: Vector<T>, radius: T },
    Box { lo: Vector<T>, hi: Vector<T> },
    Simplex { dim: usize },
    /// Cartesian product; vectors are the concatenation of the blocks.
    Product { blocks: Vec<FeasibleSet<T>> },
}

impl<T: Scalar> FeasibleSet<T> {
    pub fn whole_space(dim: usize) -> Self {
        FeasibleSet::WholeSpace { dim }
    }

    pub fn ball(center: Vector<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::Configuration(format!("ball radius must be positive, got {radius}")));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    pub fn centered_ball(dim: usize, radius: T) -> Result<Self> {
        Self::ball(Vector::zeros(dim), radius)
    }

    pub fn boxed(lo: Vector<T>, hi: Vector<T>) -> Result<Self> {
        hi.check_dim(lo.dim())?;
        if lo.iter().zip(hi.iter()).any(|(a, b)| a > b) {
            return Err(Error::Configuration("box bounds must satisfy lo ≤ hi".into()));
        }
        Ok(FeasibleSet::Box { lo, hi })
    }

    pub fn simplex(dim: usize) -> Self {
        FeasibleSet::Simplex { dim }
    }

    pub fn product(blocks: Vec<FeasibleSet<T>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Configuration("product set needs at least one block".into()));
        }
        Ok(FeasibleSet::Product { blocks })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::WholeSpace { dim } | FeasibleSet::Simplex { dim } => *dim,
            FeasibleSet::Ball { center, .. } => center.dim(),
            FeasibleSet::Box { lo, .. } => lo.dim(),
            FeasibleSet::Product { blocks } => blocks.iter().map(|b| b.dim()).sum(),
        }
    }

    pub fn is_compact(&self) -> bool {
        match self {
            FeasibleSet::WholeSpace { .. } => false,
            FeasibleSet::Product { blocks } => blocks.iter().all(|b| b.is_compact()),
            _ => true,
        }
    }

    /// True when every block is a simplex (the entropy setup's domain).
    pub fn is_simplicial(&self) -> bool {
        match self {
            FeasibleSet::Simplex { .. } => true,
            FeasibleSet::Product { blocks } => blocks.iter().all(|b| b.is_simplicial()),
            _ => false,
        }
    }

    fn tolerance(scale: T) -> T {
        T::c(1e-12).max(T::c(64.0) * T::epsilon()) * scale.max(T::one())
    }

    /// Membership within a 1e-12 (relative to the set's scale) tolerance.
    pub fn contains(&self, x: &Vector<T>) -> bool {
        if x.dim() != self.dim() || !x.is_finite() {
            return false;
        }
        match self {
            FeasibleSet::WholeSpace { .. } => true,
            FeasibleSet::Ball { center, radius } => (x - center).norm2() <= *radius + Self::tolerance(*radius),
            FeasibleSet::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi.iter())).all(|(&v, (&l, &h))| {
                let tol = Self::tolerance(l.abs().max(h.abs()));
                v >= l - tol && v <= h + tol
            }),
            FeasibleSet::Simplex { .. } => {
                let tol = Self::tolerance(T::one());
                x.iter().all(|&v| v >= -tol) && (x.sum() - T::one()).abs() <= tol
            }
            FeasibleSet::Product { blocks } => {
                let mut offset = 0;
                blocks.iter().all(|b| {
                    let seg = x.segment(offset, b.dim());
                    offset += b.dim();
                    b.contains(&seg)
                })
            }
        }
    }

    pub fn check_contains(&self, x: &Vector<T>, what: &str) -> Result<()> {
        x.check_dim(self.dim())?;
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!("{what} lies outside the feasible set")))
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &Vector<T>) -> Vector<T> {
        match self {
            FeasibleSet::WholeSpace { .. } => x.clone(),
            FeasibleSet::Ball { center, radius } => {
                let diff = x - center;
                let r = diff.norm2();
                if r <= *radius {
                    x.clone()
                } else {
                    center.add_scaled(*radius / r, &diff)
                }
            }
            FeasibleSet::Box { lo, hi } => {
                let clamped: Vec<T> =
                    x.iter().zip(lo.iter().zip(hi.iter())).map(|(&v, (&l, &h))| v.max(l).min(h)).collect();
                Vector::from_raw(clamped)
            }
            FeasibleSet::Simplex { .. } => project_simplex(x),
            FeasibleSet::Product { .. } => self.map_blocks(x, |b, seg| b.project(seg)),
        }
    }

    fn map_blocks(&self, x: &Vector<T>, mut f: impl FnMut(&FeasibleSet<T>, &Vector<T>) -> Vector<T>) -> Vector<T> {
        let FeasibleSet::Product { blocks } = self else { unreachable!("map_blocks on a non-product set") };
        let mut out = Vec::with_capacity(x.dim());
        let mut offset = 0;
        for b in blocks {
            let seg = x.segment(offset, b.dim());
            out.extend_from_slice(f(b, &seg).as_slice());
            offset += b.dim();
        }
        Vector::from_raw(out)
    }

    /// `inf_{x ∈ set} ⟨field, x⟩`.
    pub fn support_min(&self, field: &Vector<T>) -> Result<T> {
        field.check_dim(self.dim())?;
        match self {
            FeasibleSet::WholeSpace { .. } => Err(Error::UnboundedCertificate),
            FeasibleSet::Ball { center, radius } => Ok(field.dot(center) - *radius * field.norm2()),
            FeasibleSet::Box { lo, hi } => Ok(field
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .map(|(&f, (&l, &h))| (f * l).min(f * h))
                .sum()),
            FeasibleSet::Simplex { .. } => Ok(field.iter().fold(T::infinity(), |a, &b| a.min(b))),
            FeasibleSet::Product { blocks } => {
                let mut offset = 0;
                let mut total = T::zero();
                for b in blocks {
                    total = total + b.support_min(&field.segment(offset, b.dim()))?;
                    offset += b.dim();
                }
                Ok(total)
            }
        }
    }

    /// A random point of the set: uniform for balls and boxes, flat Dirichlet on simplices.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vector<T>> {
        match self {
            FeasibleSet::WholeSpace { .. } => Err(Error::Domain("cannot sample from an unbounded set".into())),
            FeasibleSet::Ball { center, radius } => {
                let n = center.dim();
                let g: Vec<T> = (0..n).map(|_| T::c(StandardNormal.sample(rng))).collect();
                let g = Vector::from_raw(g);
                let norm = g.norm2().max(T::min_positive_value());
                let u: f64 = rng.random();
                let r = *radius * T::c(u.powf(1.0 / n as f64));
                Ok(center.add_scaled(r / norm, &g))
            }
            FeasibleSet::Box { lo, hi } => Ok(Vector::from_raw(
                lo.iter()
                    .zip(hi.iter())
                    .map(|(&l, &h)| l + (h - l) * T::c(rng.random::<f64>()))
                    .collect(),
            )),
            FeasibleSet::Simplex { dim } => {
                let e: Vec<T> = (0..*dim).map(|_| T::c(Exp1.sample(rng)).max(T::c(1e-12))).collect();
                let e = Vector::from_raw(e);
                let s = e.sum();
                Ok(e.scale(T::one() / s))
            }
            FeasibleSet::Product { blocks } => {
                let mut out = Vec::with_capacity(self.dim());
                for b in blocks {
                    out.extend_from_slice(b.sample(rng)?.as_slice());
                }
                Ok(Vector::from_raw(out))
            }
        }
    }

    /// The centre of a compact set (ball centre, box midpoint, simplex barycentre).
    pub fn center(&self) -> Vector<T> {
        match self {
            FeasibleSet::WholeSpace { dim } => Vector::zeros(*dim),
            FeasibleSet::Ball { center, .. } => center.clone(),
            FeasibleSet::Box { lo, hi } => lo.zip_map(hi, |a, b| (a + b) / T::c(2.0)),
            FeasibleSet::Simplex { dim } => Vector::filled(*dim, T::one() / T::from_usize_lossy(*dim)),
            FeasibleSet::Product { blocks } => {
                let parts: Vec<Vector<T>> = blocks.iter().map(|b| b.center()).collect();
                Vector::concat(&parts.iter().collect::<Vec<_>>())
            }
        }
    }
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
fn project_simplex<T: Scalar>(x: &Vector<T>) -> Vector<T> {
    let mut sorted: Vec<T> = x.as_slice().to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumsum = T::zero();
    let mut theta = T::zero();
    for (k, &v) in sorted.iter().enumerate() {
        cumsum = cumsum + v;
        let candidate = (cumsum - T::one()) / T::from_usize_lossy(k + 1);
        if v - candidate > T::zero() {
            theta = candidate;
        }
    }
    x.map(|v| (v - theta).max(T::zero()))
}

/// Multiplicative-weights step on one simplex block.
fn entropy_step<T: Scalar>(anchor: &Vector<T>, linear: &Vector<T>, alpha: T) -> Vector<T> {
    let floor = T::log_floor();
    let two_alpha = T::c(2.0) * alpha;
    let logits = anchor.zip_map(linear, |a, c| a.max(floor).ln() - c / two_alpha);
    let top = logits.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let weights = logits.map(|v| (v - top).exp());
    let total = weights.sum();
    let floored = weights.map(|w| (w / total).max(floor));
    let s = floored.sum();
    floored.scale(T::one() / s)
}

/// `argmin_{x ∈ set} ⟨linear, x⟩ + alpha·ω(x, anchor)`.
pub fn mirror_step<T: Scalar>(
    setup: ProxSetup,
    set: &FeasibleSet<T>,
    anchor: &Vector<T>,
    linear: &Vector<T>,
    alpha: T,
) -> Result<Vector<T>> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::Domain(format!("mirror step weight must be positive and finite, got {alpha}")));
    }
    linear.check_dim(set.dim())?;
    linear.check_finite("mirror step linear term")?;
    set.check_contains(anchor, "mirror step anchor")?;
    let out = match setup {
        ProxSetup::Euclidean => {
            let free = anchor.add_scaled(-T::one() / (T::c(2.0) * alpha), linear);
            set.project(&free)
        }
        ProxSetup::Entropy => {
            if !set.is_simplicial() {
                return Err(Error::Configuration("entropy prox requires a simplex or product of simplices".into()));
            }
            match set {
                FeasibleSet::Simplex { .. } => entropy_step(anchor, linear, alpha),
                FeasibleSet::Product { blocks } => {
                    let mut out = Vec::with_capacity(set.dim());
                    let mut offset = 0;
                    for b in blocks {
                        let len = b.dim();
                        let step = mirror_step(
                            setup,
                            b,
                            &anchor.segment(offset, len),
                            &linear.segment(offset, len),
                            alpha,
                        )?;
                        out.extend_from_slice(step.as_slice());
                        offset += len;
                    }
                    Vector::from_raw(out)
                }
                _ => unreachable!("is_simplicial admitted a non-simplex set"),
            }
        }
    };
    out.check_finite("mirror step")?;
    Ok(out)
}

/// Slack of the prox inequality for `φ(x) = ⟨linear, x⟩` and unit weight:
/// `φ(probe) + ω(probe, anchor) − φ(x₊) − ω(x₊, anchor) − ω(probe, x₊)`.
pub fn tseng_inequality_check<T: Scalar>(
    setup: ProxSetup,
    set: &FeasibleSet<T>,
    anchor: &Vector<T>,
    linear: &Vector<T>,
    probe: &Vector<T>,
) -> Result<T> {
    let next = mirror_step(setup, set, anchor, linear, T::one())?;
    Ok(linear.dot(probe) + setup.omega(probe, anchor)
        - linear.dot(&next)
        - setup.omega(&next, anchor)
        - setup.omega(probe, &next))
}

/// `sup_{x ∈ set} ⟨field, at − x⟩` via the closed-form support function.
pub fn gap_certificate<T: Scalar>(set: &FeasibleSet<T>, at: &Vector<T>, field: &Vector<T>) -> Result<T> {
    at.check_dim(set.dim())?;
    if !set.is_compact() {
        return Err(Error::UnboundedCertificate);
    }
    Ok(field.dot(at) - set.support_min(field)?)
}

/// `|⟨∇d(y) − ∇d(z), x − z⟩ − ω(x, z) − ω(z, y) + ω(x, y)|`
pub fn bregman_three_point_residual<T: Scalar>(setup: ProxSetup, x: &Vector<T>, y: &Vector<T>, z: &Vector<T>) -> T {
    let lhs = (&setup.grad_d(y) - &setup.grad_d(z)).dot(&(x - z));
    let rhs = setup.omega(x, z) + setup.omega(z, y) - setup.omega(x, y);
    (lhs - rhs).abs()
}
