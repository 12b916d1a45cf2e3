//! The tensor form `F⁽²⁾ = A₁^μ A₂^ν Φ⁽²⁾ ω_μ ⊗ ω_ν` with
//! `A^μ = p^μ − η^{μλ}φ ∂_λ`, its bi-differential, its bivector field and
//! the pseudobracket `{𝓗^{⊗2}, F⁽²⁾} = d𝓗 ⊗ d𝓗 (ξ⁽²⁾)`.

use std::collections::BTreeMap;

use crate::charts::{build_omega_ddw, omega_mu, DWChart, MetricSignature, SpacetimeChart};
use crate::exterior::{DiffForm, PointForm};
use crate::legendre::HamiltonianDensity;

/// A function of two space-time points with mixed partial derivatives.
pub trait BiScalar: Send + Sync {
    /// `∂^a_{x₁} ∂^b_{x₂} Φ(x₁, x₂)`; `a` and `b` list space-time indices.
    fn deriv(&self, x1: [f64; 2], x2: [f64; 2], a: &[usize], b: &[usize]) -> f64;
}

/// `cos(k·x + δ)` on space-time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave {
    pub k: [f64; 2],
    pub phase: f64,
}

impl Wave {
    fn deriv(&self, x: [f64; 2], idx: &[usize]) -> f64 {
        let arg = self.k[0] * x[0] + self.k[1] * x[1] + self.phase + idx.len() as f64 * std::f64::consts::FRAC_PI_2;
        idx.iter().map(|&i| self.k[i]).product::<f64>() * arg.cos()
    }
}

/// `Σ c · w(x₁) w′(x₂)`, with exact derivatives of every order.
#[derive(Debug, Clone, Default)]
pub struct SeparableKernel {
    pub terms: Vec<(f64, Wave, Wave)>,
}

impl SeparableKernel {
    /// `c (w(x₁)w′(x₂) + w′(x₁)w(x₂))`.
    pub fn symmetric(c: f64, w: Wave, w2: Wave) -> Self {
        Self {
            terms: vec![(c, w, w2), (c, w2, w)],
        }
    }
}

impl BiScalar for SeparableKernel {
    fn deriv(&self, x1: [f64; 2], x2: [f64; 2], a: &[usize], b: &[usize]) -> f64 {
        self.terms
            .iter()
            .map(|(c, w1, w2)| c * w1.deriv(x1, a) * w2.deriv(x2, b))
            .sum()
    }
}

/// A `(p, q)` tensor product of forms at a pair of points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointTensor {
    pub entries: BTreeMap<(Vec<usize>, Vec<usize>), f64>,
}

impl PointTensor {
    pub fn add_product(&mut self, a: &PointForm, b: &PointForm, c: f64) {
        if c == 0.0 {
            return;
        }
        for (ka, va) in a.coeffs() {
            for (kb, vb) in b.coeffs() {
                *self.entries.entry((ka.clone(), kb.clone())).or_insert(0.0) += c * va * vb;
            }
        }
    }

    pub fn max_abs_diff(&self, other: &PointTensor) -> f64 {
        let get = |t: &PointTensor, k: &(Vec<usize>, Vec<usize>)| t.entries.get(k).copied().unwrap_or(0.0);
        self.entries
            .keys()
            .chain(other.entries.keys())
            .map(|k| (get(self, k) - get(other, k)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `Σ c ∂^{idx}`: a differential operator in one slot with frozen coefficients.
type SlotOp = Vec<(f64, Vec<usize>)>;

/// `F⁽²⁾` over a kernel `Φ⁽²⁾`, on the `n = 2, k = 1` chart.
pub struct SecondOrderForm<B: BiScalar> {
    pub phi2: B,
    chart: DWChart,
    eta: [f64; 2],
    omega_mu: [PointForm; 2],
    /// `dz^I ∧ ω_μ`, indexed `[I][μ]`.
    wedge_basis: Vec<[PointForm; 2]>,
    /// `∂_I ⌟ Ω`.
    omega_slots: Vec<PointForm>,
}

impl<B: BiScalar> SecondOrderForm<B> {
    pub fn new(phi2: B, chart: &DWChart, metric: &MetricSignature) -> Self {
        assert_eq!((chart.n(), chart.k()), (2, 1), "F⁽²⁾ lives on the n = 2, k = 1 chart");
        let ch = chart.chart();
        let om_forms = [0, 1].map(|mu| omega_mu(chart, mu).expect("mu < 2"));
        let wedge_basis = (0..chart.dim())
            .map(|i| {
                [0, 1].map(|mu| {
                    DiffForm::basis(ch, &[i])
                        .wedge(&om_forms[mu])
                        .expect("degree fits")
                        .constant_point_form()
                        .expect("constant")
                })
            })
            .collect();
        let omega = build_omega_ddw(chart).constant_point_form().expect("Ω is constant");
        let omega_slots = (0..chart.dim())
            .map(|i| {
                let mut e = vec![0.0; chart.dim()];
                e[i] = 1.0;
                omega.contract(&e).expect("dimension fits")
            })
            .collect();
        Self {
            phi2,
            chart: chart.clone(),
            eta: [metric.upper(0), metric.upper(1)],
            omega_mu: om_forms.map(|f| f.constant_point_form().expect("constant")),
            wedge_basis,
            omega_slots,
        }
    }

    fn base(&self, z: &[f64]) -> [f64; 2] {
        [z[self.chart.x(0)], z[self.chart.x(1)]]
    }

    fn apply(&self, z1: &[f64], z2: &[f64], op1: &SlotOp, op2: &SlotOp) -> f64 {
        let (x1, x2) = (self.base(z1), self.base(z2));
        let mut total = 0.0;
        for (c1, a) in op1 {
            for (c2, b) in op2 {
                total += c1 * c2 * self.phi2.deriv(x1, x2, a, b);
            }
        }
        total
    }

    /// `A^μ = p^μ − η^{μμ}φ ∂_μ` at `z`.
    fn a_op(&self, z: &[f64], mu: usize) -> SlotOp {
        let c = &self.chart;
        vec![(z[c.p(mu, 0)], vec![]), (-self.eta[mu] * z[c.y(0)], vec![mu])]
    }

    /// `∂/∂z^I` of the slot operator `A^μ`.
    fn da_op(&self, z: &[f64], mu: usize, i: usize) -> SlotOp {
        let c = &self.chart;
        if i == c.x(0) || i == c.x(1) {
            let kappa = if i == c.x(0) { 0 } else { 1 };
            self.a_op(z, mu)
                .into_iter()
                .map(|(w, mut idx)| {
                    idx.push(kappa);
                    (w, idx)
                })
                .collect()
        } else if i == c.y(0) {
            vec![(-self.eta[mu], vec![mu])]
        } else if i == c.p(mu, 0) {
            vec![(1.0, vec![])]
        } else {
            vec![]
        }
    }

    /// The slot of `ξ⁽²⁾` along `∂_I`.
    fn xi_op(&self, z: &[f64], i: usize) -> SlotOp {
        let c = &self.chart;
        if i == c.e() {
            let mut op: SlotOp = (0..2).map(|mu| (z[c.p(mu, 0)], vec![mu])).collect();
            op.extend((0..2).map(|mu| (-self.eta[mu] * z[c.y(0)], vec![mu, mu])));
            op
        } else if i == c.y(0) {
            vec![(-1.0, vec![])]
        } else if let Some(mu) = (0..2).find(|&mu| i == c.p(mu, 0)) {
            vec![(-self.eta[mu], vec![mu])]
        } else {
            vec![]
        }
    }

    pub fn coefficient(&self, z1: &[f64], z2: &[f64], mu: usize, nu: usize) -> f64 {
        self.apply(z1, z2, &self.a_op(z1, mu), &self.a_op(z2, nu))
    }

    /// `F⁽²⁾` at `(z₁, z₂)`.
    pub fn tensor(&self, z1: &[f64], z2: &[f64]) -> PointTensor {
        let mut t = PointTensor::default();
        for mu in 0..2 {
            for nu in 0..2 {
                t.add_product(&self.omega_mu[mu], &self.omega_mu[nu], self.coefficient(z1, z2, mu, nu));
            }
        }
        t
    }

    /// `d^{⊗2}F⁽²⁾` at `(z₁, z₂)`.
    pub fn d2(&self, z1: &[f64], z2: &[f64]) -> PointTensor {
        let dim = self.chart.dim();
        let mut t = PointTensor::default();
        for mu in 0..2 {
            for nu in 0..2 {
                for i in 0..dim {
                    let op1 = self.da_op(z1, mu, i);
                    if op1.is_empty() {
                        continue;
                    }
                    for j in 0..dim {
                        let op2 = self.da_op(z2, nu, j);
                        if op2.is_empty() {
                            continue;
                        }
                        let c = self.apply(z1, z2, &op1, &op2);
                        t.add_product(&self.wedge_basis[i][mu], &self.wedge_basis[j][nu], c);
                    }
                }
            }
        }
        t
    }

    /// Components `ξ^{IJ}` of `ξ⁽²⁾` at `(z₁, z₂)`.
    pub fn xi(&self, z1: &[f64], z2: &[f64]) -> Vec<Vec<f64>> {
        let dim = self.chart.dim();
        let ops1: Vec<SlotOp> = (0..dim).map(|i| self.xi_op(z1, i)).collect();
        let ops2: Vec<SlotOp> = (0..dim).map(|j| self.xi_op(z2, j)).collect();
        ops1.iter()
            .map(|o1| ops2.iter().map(|o2| self.apply(z1, z2, o1, o2)).collect())
            .collect()
    }

    /// `ξ⁽²⁾ ⌟² Ω ⊗ Ω` at `(z₁, z₂)`.
    pub fn xi_contract(&self, z1: &[f64], z2: &[f64]) -> PointTensor {
        let mut t = PointTensor::default();
        for (i, row) in self.xi(z1, z2).iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                t.add_product(&self.omega_slots[i], &self.omega_slots[j], c);
            }
        }
        t
    }

    /// `{𝓗^{⊗2}, F⁽²⁾} = d𝓗_{z₁} ⊗ d𝓗_{z₂}(ξ⁽²⁾)`.
    pub fn pseudobracket(&self, ham: &HamiltonianDensity, z1: &[f64], z2: &[f64]) -> f64 {
        let (g1, g2) = (ham.grad(z1), ham.grad(z2));
        self.xi(z1, z2)
            .iter()
            .zip(&g1)
            .map(|(row, a)| a * row.iter().zip(&g2).map(|(x, b)| x * b).sum::<f64>())
            .sum()
    }

    /// The three λ-orders of the pseudobracket for the φ³ Hamiltonian:
    /// `φ₁φ₂ K₁K₂Φ`, `φ₁²φ₂ K₂Φ + φ₁φ₂² K₁Φ` and `φ₁²φ₂²Φ`, with `K = Δ + m²`.
    pub fn pseudobracket_orders(&self, m: f64, z1: &[f64], z2: &[f64]) -> [f64; 3] {
        let k_op: SlotOp = {
            let mut op: SlotOp = (0..2).map(|mu| (-self.eta[mu], vec![mu, mu])).collect();
            op.push((m * m, vec![]));
            op
        };
        let one: SlotOp = vec![(1.0, vec![])];
        let (f1, f2) = (z1[self.chart.y(0)], z2[self.chart.y(0)]);
        [
            f1 * f2 * self.apply(z1, z2, &k_op, &k_op),
            f1 * f1 * f2 * self.apply(z1, z2, &one, &k_op) + f1 * f2 * f2 * self.apply(z1, z2, &k_op, &one),
            f1 * f1 * f2 * f2 * self.apply(z1, z2, &one, &one),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::seeding::{rng, Stream};

    fn kernel() -> SeparableKernel {
        let mut k = SeparableKernel::symmetric(
            0.7,
            Wave {
                k: [1.3, -0.4],
                phase: 0.2,
            },
            Wave {
                k: [0.5, 0.9],
                phase: -1.1,
            },
        );
        k.terms.push((
            0.3,
            Wave {
                k: [-0.8, 0.6],
                phase: 0.5,
            },
            Wave {
                k: [-0.8, 0.6],
                phase: 0.5,
            },
        ));
        k
    }

    fn random_point<R: Rng>(r: &mut R) -> Vec<f64> {
        (0..6).map(|_| r.gen_range(-1.5..1.5)).collect()
    }

    #[test]
    fn zero_kernel_gives_zero_tensor() {
        let c = DWChart::new(2, 1).unwrap();
        let f = SecondOrderForm::new(SeparableKernel::default(), &c, &MetricSignature::minkowski(2));
        let z = vec![0.1; 6];
        assert_eq!(f.tensor(&z, &z).max_abs(), 0.0);
        assert_eq!(f.d2(&z, &z).max_abs(), 0.0);
    }

    #[test]
    fn bi_differential_is_bivector_contraction() {
        let c = DWChart::new(2, 1).unwrap();
        let f = SecondOrderForm::new(kernel(), &c, &MetricSignature::minkowski(2));
        let mut r = rng(3, Stream::Perturbation);
        for _ in 0..20 {
            let (z1, z2) = (random_point(&mut r), random_point(&mut r));
            let d2 = f.d2(&z1, &z2);
            assert!(d2.max_abs() > 1e-3);
            assert!(d2.max_abs_diff(&f.xi_contract(&z1, &z2)) < 1e-12);
        }
    }

    #[test]
    fn pseudobracket_expansion_by_orders() {
        let c = DWChart::new(2, 1).unwrap();
        let metric = MetricSignature::minkowski(2);
        let f = SecondOrderForm::new(kernel(), &c, &metric);
        let (m, lam) = (1.1, 0.35);
        let h = HamiltonianDensity::phi_cubed(&c, m, lam, &metric);
        let mut r = rng(4, Stream::Perturbation);
        for _ in 0..20 {
            let (z1, z2) = (random_point(&mut r), random_point(&mut r));
            let [a, b, cc] = f.pseudobracket_orders(m, &z1, &z2);
            let expected = a + lam * b + lam * lam * cc;
            assert!((f.pseudobracket(&h, &z1, &z2) - expected).abs() < 1e-10);
        }
    }
}
