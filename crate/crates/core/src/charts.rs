//! Concrete multisymplectic charts and their canonical forms.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::exterior::{increasing_tuples, Chart, DiffForm, ExteriorError, SmoothScalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("chart dimensions must be positive (n = {n}, k = {k})")]
    EmptyDimension { n: usize, k: usize },
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

/// The alternating symbol in two dimensions, `ε₁₂ = −ε₂₁ = 1` (0-based
/// indices here). Upper-index ε has the same numeric values.
pub const EPSILON_2: [[f64; 2]; 2] = [[0.0, 1.0], [-1.0, 0.0]];

pub fn epsilon(a: usize, b: usize) -> f64 {
    EPSILON_2[a][b]
}

/// A diagonal metric `η^{μν}` with its inverse `η_{μν}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSignature {
    pub eta_upper: Vec<f64>,
    pub eta_lower: Vec<f64>,
}

impl MetricSignature {
    pub fn diagonal(entries: Vec<f64>) -> Self {
        assert!(entries.iter().all(|e| e.abs() == 1.0), "metric entries must be ±1");
        Self {
            eta_lower: entries.iter().map(|e| 1.0 / e).collect(),
            eta_upper: entries,
        }
    }

    /// `diag(−1, +1, …, +1)` with time first.
    pub fn minkowski(n: usize) -> Self {
        let mut e = vec![1.0; n];
        e[0] = -1.0;
        Self::diagonal(e)
    }

    pub fn euclidean(n: usize) -> Self {
        Self::diagonal(vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.eta_upper.len()
    }

    pub fn upper(&self, mu: usize) -> f64 {
        self.eta_upper[mu]
    }

    pub fn lower(&self, mu: usize) -> f64 {
        self.eta_lower[mu]
    }
}

/// Label layout of a chart, for run-report provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartLayout {
    pub name: String,
    pub labels: Vec<String>,
}

/// Common access to the space-time coordinates of a multisymplectic chart.
pub trait SpacetimeChart {
    fn chart(&self) -> &Chart;
    fn n(&self) -> usize;
    fn x(&self, mu: usize) -> usize;

    fn layout(&self) -> ChartLayout;
}

/// The extended de Donder–Weyl chart `(x, y, e, p)` with `p^μ_i` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DWChart {
    n: usize,
    k: usize,
    chart: Chart,
}

impl DWChart {
    pub fn new(n: usize, k: usize) -> Result<Self, ChartError> {
        if n == 0 || k == 0 {
            return Err(ChartError::EmptyDimension { n, k });
        }
        let mut labels: Vec<String> = (0..n).map(|mu| format!("x{mu}")).collect();
        labels.extend((0..k).map(|i| format!("y{i}")));
        labels.push("e".into());
        for mu in 0..n {
            for i in 0..k {
                labels.push(format!("p{mu}_{i}"));
            }
        }
        Ok(Self {
            n,
            k,
            chart: Chart::new(labels)?,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn y(&self, i: usize) -> usize {
        assert!(i < self.k);
        self.n + i
    }

    pub fn e(&self) -> usize {
        self.n + self.k
    }

    pub fn p(&self, mu: usize, i: usize) -> usize {
        assert!(mu < self.n && i < self.k);
        self.n + self.k + 1 + mu * self.k + i
    }

    /// Assembles a point from its blocks; `p` is row-major in `(μ, i)`.
    pub fn point(&self, x: &[f64], y: &[f64], e: f64, p: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.k);
        assert_eq!(p.len(), self.n * self.k);
        let mut z = Vec::with_capacity(self.dim());
        z.extend_from_slice(x);
        z.extend_from_slice(y);
        z.push(e);
        z.extend_from_slice(p);
        z
    }
}

impl SpacetimeChart for DWChart {
    fn chart(&self) -> &Chart {
        &self.chart
    }
    fn n(&self) -> usize {
        self.n
    }
    fn x(&self, mu: usize) -> usize {
        assert!(mu < self.n);
        mu
    }
    fn layout(&self) -> ChartLayout {
        ChartLayout {
            name: format!("dDW(n={}, k={})", self.n, self.k),
            labels: self.chart.labels().to_vec(),
        }
    }
}

/// The full Lepage–Dedecker chart of `Λ²T*ℝ⁴`:
/// `(x¹, x², y¹, y², e, p¹₁, p¹₂, p²₁, p²₂, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LepageChart22 {
    chart: Chart,
}

impl Default for LepageChart22 {
    fn default() -> Self {
        Self::new()
    }
}

impl LepageChart22 {
    pub fn new() -> Self {
        let labels = ["x1", "x2", "y1", "y2", "e", "p1_1", "p1_2", "p2_1", "p2_2", "r"];
        Self {
            chart: Chart::new(labels).expect("fixed labels are unique"),
        }
    }

    pub fn dim(&self) -> usize {
        10
    }

    pub fn y(&self, i: usize) -> usize {
        assert!(i < 2);
        2 + i
    }

    pub fn e(&self) -> usize {
        4
    }

    /// `p^μ_i` with 0-based `(μ, i)`.
    pub fn p(&self, mu: usize, i: usize) -> usize {
        assert!(mu < 2 && i < 2);
        5 + 2 * mu + i
    }

    pub fn r(&self) -> usize {
        9
    }

    pub fn point(&self, x: [f64; 2], y: [f64; 2], e: f64, p: [f64; 4], r: f64) -> Vec<f64> {
        vec![x[0], x[1], y[0], y[1], e, p[0], p[1], p[2], p[3], r]
    }
}

impl SpacetimeChart for LepageChart22 {
    fn chart(&self) -> &Chart {
        &self.chart
    }
    fn n(&self) -> usize {
        2
    }
    fn x(&self, mu: usize) -> usize {
        assert!(mu < 2);
        mu
    }
    fn layout(&self) -> ChartLayout {
        ChartLayout {
            name: "Lepage(n=2, k=2)".into(),
            labels: self.chart.labels().to_vec(),
        }
    }
}

/// `ω = dx⁰ ∧ ⋯ ∧ dx^{n−1}`.
pub fn omega_volume<C: SpacetimeChart>(c: &C) -> DiffForm {
    let idx: Vec<usize> = (0..c.n()).map(|mu| c.x(mu)).collect();
    DiffForm::basis(c.chart(), &idx)
}

/// `ω_μ = ∂_μ ⌟ ω`, an (n−1)-form.
pub fn omega_mu<C: SpacetimeChart>(c: &C, mu: usize) -> Result<DiffForm, ChartError> {
    if mu >= c.n() {
        return Err(ChartError::IndexOutOfRange { index: mu, limit: c.n() });
    }
    Ok(omega_volume(c).interior_basis(c.x(mu)))
}

fn coord(c: &Chart, i: usize) -> SmoothScalar {
    SmoothScalar::coordinate(c.dim(), i)
}

/// `θ = e ω + p^μ_i dy^i ∧ ω_μ`.
pub fn build_theta_ddw(c: &DWChart) -> DiffForm {
    let ch = c.chart();
    let mut theta = omega_volume(c).times(&coord(ch, c.e()));
    for mu in 0..c.n {
        let om = omega_mu(c, mu).expect("mu < n");
        for i in 0..c.k {
            let term = DiffForm::monomial(ch, coord(ch, c.p(mu, i)), &[c.y(i)])
                .wedge(&om)
                .expect("degree fits");
            theta = theta.add(&term).expect("same chart");
        }
    }
    theta
}

/// `Ω = de ∧ ω + dp^μ_i ∧ dy^i ∧ ω_μ`, built directly.
pub fn build_omega_ddw(c: &DWChart) -> DiffForm {
    let ch = c.chart();
    let mut omega = DiffForm::basis(ch, &[c.e()]).wedge(&omega_volume(c)).expect("degree fits");
    for mu in 0..c.n {
        let om = omega_mu(c, mu).expect("mu < n");
        for i in 0..c.k {
            let term = DiffForm::basis(ch, &[c.p(mu, i), c.y(i)]).wedge(&om).expect("degree fits");
            omega = omega.add(&term).expect("same chart");
        }
    }
    omega
}

/// Tautological 2-form `e dx¹∧dx² + ε_{μν} p^μ_i dy^i∧dx^ν + r dy¹∧dy²`.
pub fn build_theta_lepage(c: &LepageChart22) -> DiffForm {
    let ch = c.chart();
    let mut theta = DiffForm::monomial(ch, coord(ch, c.e()), &[c.x(0), c.x(1)]);
    for mu in 0..2 {
        for nu in 0..2 {
            let eps = epsilon(mu, nu);
            if eps == 0.0 {
                continue;
            }
            for i in 0..2 {
                let term = DiffForm::monomial(ch, coord(ch, c.p(mu, i)).scale(eps), &[c.y(i), c.x(nu)]);
                theta = theta.add(&term).expect("same chart");
            }
        }
    }
    let r_term = DiffForm::monomial(ch, coord(ch, c.r()), &[c.y(0), c.y(1)]);
    theta.add(&r_term).expect("same chart")
}

/// `Ω = de∧dx¹∧dx² + ε_{μν} dp^μ_i∧dy^i∧dx^ν + dr∧dy¹∧dy²`.
pub fn build_omega_lepage(c: &LepageChart22) -> DiffForm {
    let ch = c.chart();
    let mut omega = DiffForm::basis(ch, &[c.e(), c.x(0), c.x(1)]);
    for mu in 0..2 {
        for nu in 0..2 {
            let eps = epsilon(mu, nu);
            if eps == 0.0 {
                continue;
            }
            for i in 0..2 {
                let term = DiffForm::basis(ch, &[c.p(mu, i), c.y(i), c.x(nu)]).scale(eps);
                omega = omega.add(&term).expect("same chart");
            }
        }
    }
    omega.add(&DiffForm::basis(ch, &[c.r(), c.y(0), c.y(1)])).expect("same chart")
}

/// Singular values of the map `ξ ↦ ξ⌟Ω` at a point, largest first.
pub fn contraction_singular_values(omega: &DiffForm, point: &[f64]) -> Vec<f64> {
    let dim = omega.dim();
    let pf = omega.at(point);
    let q = omega.degree().saturating_sub(1);
    let cols = increasing_tuples(dim, q);
    let mut m = DMatrix::<f64>::zeros(dim, cols.len().max(1));
    for a in 0..dim {
        let mut e = vec![0.0; dim];
        e[a] = 1.0;
        let row = pf.contract(&e).expect("degree ≥ 1");
        for (c, t) in cols.iter().enumerate() {
            m[(a, c)] = row.get(t);
        }
    }
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.resize(dim, 0.0);
    s
}

/// True iff `ξ⌟Ω = 0` forces `ξ = 0` at `point`.
pub fn nondegeneracy_check(omega: &DiffForm, point: &[f64]) -> bool {
    if omega.degree() == 0 {
        return false;
    }
    let s = contraction_singular_values(omega, point);
    let smax = s.first().copied().unwrap_or(0.0);
    smax > 0.0 && s.iter().all(|&v| v > 1e-10 * smax)
}
