//! Boundary functionals `Γ ↦ Σ_k (∫_{Γ∩∂D})^k K⁽ᵏ⁾` and their product law.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::kernel::{slice_functional, Kernel2};
use super::PerturbationError;
use crate::dynamics::{Grid, HamiltonianCurve, Slice};

/// The space-time slab between two slices; its boundary is `Σ_{t₁} − Σ_{t₀}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    pub t0: Slice,
    pub t1: Slice,
}

fn half_steps(s: Slice) -> usize {
    match s {
        Slice::Node(n) => 2 * n,
        Slice::Midpoint(n) => 2 * n + 1,
    }
}

impl Slab {
    pub fn new(t0: Slice, t1: Slice) -> Result<Self, PerturbationError> {
        if half_steps(t0) >= half_steps(t1) {
            return Err(PerturbationError::InvalidSlab { t0, t1 });
        }
        Ok(Self { t0, t1 })
    }

    /// Staggered boundaries just outside rows `n0..=n1`.
    pub fn staggered(n0: usize, n1: usize) -> Result<Self, PerturbationError> {
        if n0 == 0 {
            return Err(PerturbationError::InvalidConfig("staggered slab needs n0 ≥ 1".into()));
        }
        Self::new(Slice::Midpoint(n0 - 1), Slice::Midpoint(n1))
    }
}

/// The data of one tensor factor.
#[derive(Debug, Clone)]
pub enum TensorKernel {
    /// `F⁽¹⁾` from a lattice solution `Φ⁽¹⁾`.
    First(Arc<Grid>),
    /// `F⁽²⁾` from a kernel `Φ⁽²⁾`.
    Second(Arc<Kernel2>),
}

impl TensorKernel {
    pub fn order(&self) -> usize {
        match self {
            Self::First(_) => 1,
            Self::Second(_) => 2,
        }
    }
}

/// `(∫_{Γ∩∂D})^k F⁽ᵏ⁾` for `k ∈ {1, 2}`.
pub fn eval_tensor_boundary(curve: &HamiltonianCurve, slab: &Slab, kernel: &TensorKernel) -> Result<f64, PerturbationError> {
    match kernel {
        TensorKernel::First(phi1) => Ok(slice_functional(curve, slab.t1, phi1)? - slice_functional(curve, slab.t0, phi1)?),
        TensorKernel::Second(k) => {
            let t = |a: Slice, b: Slice| k.tensor_boundary(curve, a, b);
            Ok(t(slab.t1, slab.t1)? - t(slab.t1, slab.t0)? - t(slab.t0, slab.t1)? + t(slab.t0, slab.t0)?)
        }
    }
}

/// A weighted tensor product of kernels. Its boundary integral factorizes.
#[derive(Debug, Clone)]
pub struct Term {
    pub weight: f64,
    pub factors: Vec<TensorKernel>,
}

impl Term {
    pub fn order(&self) -> usize {
        self.factors.iter().map(TensorKernel::order).sum()
    }
}

/// A functional truncated at order [`PerturbativeFunctional::MAX_ORDER`].
///
/// `unit` is the order-0 coefficient: 1 for a constructed series, 0 for the
/// zero functional. It is what makes the Cauchy product reproduce the
/// lower-order terms of each factor.
#[derive(Debug, Clone)]
pub struct PerturbativeFunctional {
    pub unit: f64,
    pub terms: Vec<Term>,
    pub slab: Slab,
}

impl PerturbativeFunctional {
    pub const MAX_ORDER: usize = 2;

    pub fn zero(slab: Slab) -> Self {
        Self {
            unit: 0.0,
            terms: Vec::new(),
            slab,
        }
    }

    /// `1 + ∫F⁽¹⁾ + λ(∫)²F⁽²⁾`, the second term dropped when no kernel is given.
    pub fn series(phi1: Arc<Grid>, phi2: Option<Arc<Kernel2>>, lambda: f64, slab: Slab) -> Self {
        let mut terms = vec![Term {
            weight: 1.0,
            factors: vec![TensorKernel::First(phi1)],
        }];
        if let Some(k) = phi2 {
            terms.push(Term {
                weight: lambda,
                factors: vec![TensorKernel::Second(k)],
            });
        }
        Self { unit: 1.0, terms, slab }
    }

    /// The order-`k` part on `Γ` (order 0 is the unit).
    pub fn eval_order(&self, curve: &HamiltonianCurve, k: usize) -> Result<f64, PerturbationError> {
        if k == 0 {
            return Ok(self.unit);
        }
        let mut total = 0.0;
        for t in self.terms.iter().filter(|t| t.order() == k) {
            let mut v = t.weight;
            for f in &t.factors {
                v *= eval_tensor_boundary(curve, &self.slab, f)?;
            }
            total += v;
        }
        Ok(total)
    }

    pub fn eval(&self, curve: &HamiltonianCurve) -> Result<f64, PerturbationError> {
        (0..=Self::MAX_ORDER).map(|k| self.eval_order(curve, k)).sum()
    }
}

/// The Cauchy product `Σ_k Σ_l F⁽ˡ⁾ ⊗ G⁽ᵏ⁻ˡ⁾`, truncated at order 2.
pub fn product_functionals(
    a: &PerturbativeFunctional,
    b: &PerturbativeFunctional,
) -> Result<PerturbativeFunctional, PerturbationError> {
    if a.slab != b.slab {
        return Err(PerturbationError::InvalidConfig(
            "product of functionals on different slabs".into(),
        ));
    }
    let mut terms = Vec::new();
    let mut push = |weight: f64, factors: Vec<TensorKernel>| {
        if weight != 0.0 {
            terms.push(Term { weight, factors });
        }
    };
    for t in &a.terms {
        push(t.weight * b.unit, t.factors.clone());
    }
    for t in &b.terms {
        push(a.unit * t.weight, t.factors.clone());
    }
    for ta in &a.terms {
        for tb in &b.terms {
            if ta.order() + tb.order() <= PerturbativeFunctional::MAX_ORDER {
                push(ta.weight * tb.weight, ta.factors.iter().chain(&tb.factors).cloned().collect());
            }
        }
    }
    Ok(PerturbativeFunctional {
        unit: a.unit * b.unit,
        terms,
        slab: a.slab,
    })
}
