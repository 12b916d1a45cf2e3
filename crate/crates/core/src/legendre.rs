//! Legendre transform (de Donder–Weyl) and Legendre correspondence
//! (Lepage–Dedecker, `n = k = 2`).
//!
//! Multivelocities `v^i_μ` and momenta `p^μ_i` are stored flat, row-major in
//! `(μ, i)` with 0-based indices: `v[μ·k + i]`.

use std::sync::Arc;

use nalgebra::{Matrix4, Vector4};
use thiserror::Error;

use crate::charts::{epsilon, DWChart, LepageChart22, MetricSignature, SpacetimeChart};
use crate::exterior::{Chart, SmoothScalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LegendreError {
    #[error("Newton iteration did not converge: residual {residual:e} after {iterations} iterations")]
    NewtonDivergence { residual: f64, iterations: usize },
    #[error("singular Jacobian (|det| = {det:e}): the Legendre condition fails at this point")]
    SingularJacobian { det: f64 },
    #[error("Lagrangian has n = {n}, k = {k}; the Lepage correspondence needs n = k = 2")]
    WrongShape { n: usize, k: usize },
}

type LFn = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync>;
type LVecFn = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// A first-order Lagrangian density `L(x, y, v)`.
#[derive(Clone)]
pub struct LagrangianDensity {
    n: usize,
    k: usize,
    eval: LFn,
    dl_dv: LVecFn,
    dl_dy: LVecFn,
    d2l_dv2: Option<LVecFn>,
}

impl std::fmt::Debug for LagrangianDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LagrangianDensity(n = {}, k = {})", self.n, self.k)
    }
}

impl LagrangianDensity {
    pub fn new(
        n: usize,
        k: usize,
        eval: impl Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync + 'static,
        dl_dv: impl Fn(&[f64], &[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        dl_dy: impl Fn(&[f64], &[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            n,
            k,
            eval: Arc::new(eval),
            dl_dv: Arc::new(dl_dv),
            dl_dy: Arc::new(dl_dy),
            d2l_dv2: None,
        }
    }

    /// Exact `∂²L/∂v∂v`, row-major `nk × nk`.
    pub fn with_hessian(mut self, h: impl Fn(&[f64], &[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.d2l_dv2 = Some(Arc::new(h));
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eval(&self, x: &[f64], y: &[f64], v: &[f64]) -> f64 {
        (self.eval)(x, y, v)
    }

    pub fn dl_dv(&self, x: &[f64], y: &[f64], v: &[f64]) -> Vec<f64> {
        (self.dl_dv)(x, y, v)
    }

    pub fn dl_dy(&self, x: &[f64], y: &[f64], v: &[f64]) -> Vec<f64> {
        (self.dl_dy)(x, y, v)
    }

    /// `∂²L/∂v²`, exact when supplied, else by central differences of `dl_dv`.
    pub fn d2l_dv2(&self, x: &[f64], y: &[f64], v: &[f64]) -> Vec<f64> {
        if let Some(h) = &self.d2l_dv2 {
            return h(x, y, v);
        }
        let m = self.n * self.k;
        let h = 1e-6;
        let mut out = vec![0.0; m * m];
        let mut w = v.to_vec();
        for b in 0..m {
            w[b] = v[b] + h;
            let up = self.dl_dv(x, y, &w);
            w[b] = v[b] - h;
            let dn = self.dl_dv(x, y, &w);
            w[b] = v[b];
            for a in 0..m {
                out[a * m + b] = (up[a] - dn[a]) / (2.0 * h);
            }
        }
        out
    }

    /// `L = ½η^{μν}v_μv_ν + (m²/2)φ² + (λ/3)φ³` for a single scalar field.
    pub fn phi_cubed(m: f64, lambda: f64, metric: &MetricSignature) -> Self {
        let n = metric.n();
        let (eta1, eta2, eta3) = (metric.eta_upper.clone(), metric.eta_upper.clone(), metric.eta_upper.clone());
        Self::new(
            n,
            1,
            move |_, y, v| {
                let kin: f64 = (0..n).map(|mu| 0.5 * eta1[mu] * v[mu] * v[mu]).sum();
                kin + 0.5 * m * m * y[0] * y[0] + lambda / 3.0 * y[0].powi(3)
            },
            move |_, _, v| (0..n).map(|mu| eta2[mu] * v[mu]).collect(),
            move |_, y, _| vec![m * m * y[0] + lambda * y[0] * y[0]],
        )
        .with_hessian(move |_, _, _| {
            let mut h = vec![0.0; n * n];
            for mu in 0..n {
                h[mu * n + mu] = eta3[mu];
            }
            h
        })
    }

    /// Harmonic map `ℝ² → ℝ²`, `L = ½|v|²`.
    pub fn harmonic_map() -> Self {
        Self::new(
            2,
            2,
            |_, _, v| 0.5 * v.iter().map(|a| a * a).sum::<f64>(),
            |_, _, v| v.to_vec(),
            |_, _, _| vec![0.0; 2],
        )
        .with_hessian(|_, _, _| Matrix4::<f64>::identity().as_slice().to_vec())
    }

    /// The trivial problem `L = 0` with `n = k = 2`.
    pub fn trivial() -> Self {
        Self::new(2, 2, |_, _, _| 0.0, |_, _, _| vec![0.0; 4], |_, _, _| vec![0.0; 2]).with_hessian(|_, _, _| vec![0.0; 16])
    }

    /// Two-dimensional Maxwell, `L = −½(v¹₂ − v²₁)²`.
    pub fn maxwell_2d() -> Self {
        // v¹₂ sits at flat (μ=1, i=0) = 2 and v²₁ at (μ=0, i=1) = 1
        Self::new(
            2,
            2,
            |_, _, v| -0.5 * (v[2] - v[1]).powi(2),
            |_, _, v| {
                let f = v[2] - v[1];
                vec![0.0, f, -f, 0.0]
            },
            |_, _, _| vec![0.0; 2],
        )
        .with_hessian(|_, _, _| {
            let mut h = vec![0.0; 16];
            h[4 + 1] = -1.0;
            h[4 + 2] = 1.0;
            h[8 + 1] = 1.0;
            h[8 + 2] = -1.0;
            h
        })
    }
}

/// `𝓗` on a multisymplectic chart, with an exact gradient.
#[derive(Debug, Clone)]
pub struct HamiltonianDensity {
    chart: Chart,
    scalar: SmoothScalar,
}

impl HamiltonianDensity {
    pub fn new(chart: &Chart, scalar: SmoothScalar) -> Self {
        assert_eq!(chart.dim(), scalar.dim(), "scalar dimension must match the chart");
        assert!(scalar.has_gradient(), "a Hamiltonian needs an exact gradient");
        Self {
            chart: chart.clone(),
            scalar,
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn scalar(&self) -> &SmoothScalar {
        &self.scalar
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.scalar.value(z)
    }

    pub fn grad(&self, z: &[f64]) -> Vec<f64> {
        self.scalar.gradient(z).expect("checked at construction")
    }

    /// `𝓗 = e + ½η_{μν}p^μp^ν − (m²/2)φ² − (λ/3)φ³` on a `k = 1` DW chart.
    pub fn phi_cubed(dw: &DWChart, m: f64, lambda: f64, metric: &MetricSignature) -> Self {
        assert_eq!(dw.k(), 1, "φ³ is a single scalar field");
        assert_eq!(dw.n(), metric.n());
        let n = dw.n();
        let dim = dw.dim();
        let (iy, ie) = (dw.y(0), dw.e());
        let ip: Vec<usize> = (0..n).map(|mu| dw.p(mu, 0)).collect();
        let eta = metric.eta_lower.clone();
        let (ip2, eta2, ip3, eta3) = (ip.clone(), eta.clone(), ip.clone(), eta.clone());
        let scalar = SmoothScalar::new(
            dim,
            move |z| {
                let kin: f64 = (0..n).map(|mu| 0.5 * eta[mu] * z[ip[mu]] * z[ip[mu]]).sum();
                let f = z[iy];
                z[ie] + kin - 0.5 * m * m * f * f - lambda / 3.0 * f * f * f
            },
            move |z| {
                let mut g = vec![0.0; dim];
                let f = z[iy];
                g[iy] = -m * m * f - lambda * f * f;
                g[ie] = 1.0;
                for mu in 0..n {
                    g[ip2[mu]] = eta2[mu] * z[ip2[mu]];
                }
                g
            },
        )
        .with_hessian(move |z| {
            let mut h = vec![0.0; dim * dim];
            h[iy * dim + iy] = -m * m - 2.0 * lambda * z[iy];
            for mu in 0..n {
                h[ip3[mu] * dim + ip3[mu]] = eta3[mu];
            }
            h
        });
        Self::new(dw.chart(), scalar)
    }

    /// `𝓗 = e + H(t, q, p)` on the `n = k = 1` chart `(t, q, e, p)`.
    pub fn classical(dw: &DWChart, h: &ClassicalHamiltonian) -> Self {
        assert_eq!((dw.n(), dw.k()), (1, 1));
        let (h1, h2) = (h.clone(), h.clone());
        let scalar = SmoothScalar::new(
            4,
            move |z| z[2] + h1.value(z[0], z[1], z[3]),
            move |z| {
                let g = h2.gradient(z[0], z[1], z[3]);
                vec![g[0], g[1], 1.0, g[2]]
            },
        );
        Self::new(dw.chart(), scalar)
    }

    /// `𝓗 = e − (p¹₁p²₂ − p¹₂p²₁)/r` on the Lepage chart (trivial problem).
    pub fn lepage_trivial(lc: &LepageChart22) -> Self {
        let scalar = SmoothScalar::new(
            10,
            |z| closed_form_trivial(z[4], &[z[5], z[6], z[7], z[8]], z[9]),
            |z| {
                let (p, r) = ([z[5], z[6], z[7], z[8]], z[9]);
                let det = p[0] * p[3] - p[1] * p[2];
                let mut g = vec![0.0; 10];
                g[4] = 1.0;
                g[5] = -p[3] / r;
                g[6] = p[2] / r;
                g[7] = p[1] / r;
                g[8] = -p[0] / r;
                g[9] = det / (r * r);
                g
            },
        );
        Self::new(lc.chart(), scalar)
    }
}

/// `H(t, q, p)` with its gradient `(∂_t, ∂_q, ∂_p)`.
#[derive(Clone)]
pub struct ClassicalHamiltonian {
    value: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
    gradient: Arc<dyn Fn(f64, f64, f64) -> [f64; 3] + Send + Sync>,
}

impl ClassicalHamiltonian {
    pub fn new(
        value: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(f64, f64, f64) -> [f64; 3] + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    /// `H = ½(p² + q²)`.
    pub fn oscillator() -> Self {
        Self::new(|_, q, p| 0.5 * (p * p + q * q), |_, q, p| [0.0, q, p])
    }

    pub fn value(&self, t: f64, q: f64, p: f64) -> f64 {
        (self.value)(t, q, p)
    }

    pub fn gradient(&self, t: f64, q: f64, p: f64) -> [f64; 3] {
        (self.gradient)(t, q, p)
    }
}

/// Result of the forward DW Legendre transform.
#[derive(Debug, Clone, PartialEq)]
pub struct DwLegendre {
    pub p: Vec<f64>,
    pub h: f64,
}

/// `p = ∂L/∂v`, `H = ⟨p, v⟩ − L`.
pub fn dw_legendre(l: &LagrangianDensity, x: &[f64], y: &[f64], v: &[f64]) -> DwLegendre {
    let p = l.dl_dv(x, y, v);
    let pv: f64 = p.iter().zip(v).map(|(a, b)| a * b).sum();
    DwLegendre {
        h: pv - l.eval(x, y, v),
        p,
    }
}

/// `v^i_μ = ∂𝓗/∂p^μ_i`.
pub fn dw_inverse_legendre(h: &HamiltonianDensity, dw: &DWChart, x: &[f64], y: &[f64], p: &[f64]) -> Vec<f64> {
    let z = dw.point(x, y, 0.0, p);
    let g = h.grad(&z);
    let mut v = Vec::with_capacity(dw.n() * dw.k());
    for mu in 0..dw.n() {
        for i in 0..dw.k() {
            v.push(g[dw.p(mu, i)]);
        }
    }
    v
}

/// A point `(e, p, r)` of the Lepage fiber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LepageMomenta {
    pub e: f64,
    pub p: [f64; 4],
    pub r: f64,
}

impl LepageMomenta {
    pub fn to_vec(&self) -> [f64; 6] {
        [self.e, self.p[0], self.p[1], self.p[2], self.p[3], self.r]
    }

    pub fn from_vec(a: [f64; 6]) -> Self {
        Self {
            e: a[0],
            p: [a[1], a[2], a[3], a[4]],
            r: a[5],
        }
    }
}

/// `det v = v¹₁v²₂ − v¹₂v²₁`.
pub fn det2(v: &[f64; 4]) -> f64 {
    v[0] * v[3] - v[2] * v[1]
}

/// `ε^{μν}ε_{ij}v^j_ν`, which equals `∂(det v)/∂v^i_μ`.
pub fn cofactor(v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for mu in 0..2 {
        for i in 0..2 {
            let mut s = 0.0;
            for nu in 0..2 {
                for j in 0..2 {
                    s += epsilon(mu, nu) * epsilon(i, j) * v[2 * nu + j];
                }
            }
            out[2 * mu + i] = s;
        }
    }
    out
}

/// `⟨T, P⟩ = e + p^μ_i v^i_μ + r det v`.
pub fn lepage_pairing(v: &[f64; 4], pm: &LepageMomenta) -> f64 {
    pm.e + (0..4).map(|a| pm.p[a] * v[a]).sum::<f64>() + pm.r * det2(v)
}

fn check_22(l: &LagrangianDensity) -> Result<(), LegendreError> {
    if l.n() == 2 && l.k() == 2 {
        Ok(())
    } else {
        Err(LegendreError::WrongShape { n: l.n(), k: l.k() })
    }
}

/// Solves `p^μ_i + ε^{μν}ε_{ij}v^j_ν r = ∂L/∂v^i_μ` for `p`.
pub fn lepage_correspondence(
    l: &LagrangianDensity,
    x: &[f64],
    y: &[f64],
    v: &[f64; 4],
    r: f64,
) -> Result<[f64; 4], LegendreError> {
    check_22(l)?;
    let dl = l.dl_dv(x, y, v);
    let c = cofactor(v);
    Ok(std::array::from_fn(|a| dl[a] - r * c[a]))
}

/// `∂W/∂T = p + r·cof(v) − ∂L/∂v`.
fn correspondence_residual(l: &LagrangianDensity, x: &[f64], y: &[f64], v: &[f64; 4], p: &[f64; 4], r: f64) -> Vector4<f64> {
    let dl = l.dl_dv(x, y, v);
    let c = cofactor(v);
    Vector4::from_fn(|a, _| p[a] + r * c[a] - dl[a])
}

fn cofactor_jacobian() -> Matrix4<f64> {
    Matrix4::from_fn(|a, b| {
        let mut e = [0.0; 4];
        e[b] = 1.0;
        cofactor(&e)[a]
    })
}

/// The implicit multivelocity and Hamiltonian value at a Lepage point.
#[derive(Debug, Clone, PartialEq)]
pub struct LepageSolution {
    pub value: f64,
    pub v: [f64; 4],
    pub residual: f64,
    pub iterations: usize,
}

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-12;
const SINGULAR_DET: f64 = 1e-10;
const HOMOTOPY_STEPS: usize = 8;

fn newton(
    l: &LagrangianDensity,
    x: &[f64],
    y: &[f64],
    p: &[f64; 4],
    r: f64,
    guess: [f64; 4],
) -> Result<([f64; 4], f64, usize), LegendreError> {
    let cj = cofactor_jacobian();
    let tol = NEWTON_TOL * (1.0 + p.iter().fold(0.0_f64, |m, a| m.max(a.abs())));
    let mut v = guess;
    let mut g = correspondence_residual(l, x, y, &v, p, r);
    let mut norm = g.amax();
    for it in 0..NEWTON_MAX_ITER {
        if norm <= tol {
            return Ok((v, norm, it));
        }
        let h = Matrix4::from_row_slice(&l.d2l_dv2(x, y, &v));
        let j = cj * r - h;
        let det = j.determinant();
        if det.abs() < SINGULAR_DET {
            return Err(LegendreError::SingularJacobian { det });
        }
        let step = j.lu().solve(&(-g)).ok_or(LegendreError::SingularJacobian { det })?;
        let mut scale = 1.0;
        loop {
            let trial: [f64; 4] = std::array::from_fn(|a| v[a] + scale * step[a]);
            let gt = correspondence_residual(l, x, y, &trial, p, r);
            if gt.amax() <= norm || scale < 1e-6 {
                v = trial;
                g = gt;
                norm = g.amax();
                break;
            }
            scale *= 0.5;
        }
        if !norm.is_finite() {
            break;
        }
    }
    if norm <= tol {
        Ok((v, norm, NEWTON_MAX_ITER))
    } else {
        Err(LegendreError::NewtonDivergence {
            residual: norm,
            iterations: NEWTON_MAX_ITER,
        })
    }
}

/// `𝓗(x, y, P) = W(x, y, T, P)` with `T` defined implicitly by `∂W/∂T = 0`.
///
/// When the `r = 0` problem is regular, Newton first solves it and then
/// follows `r` to its target in eight steps; otherwise it starts directly at
/// the target from `guess` (or zero).
pub fn lepage_hamiltonian(
    l: &LagrangianDensity,
    x: &[f64],
    y: &[f64],
    pm: &LepageMomenta,
    guess: Option<[f64; 4]>,
) -> Result<LepageSolution, LegendreError> {
    check_22(l)?;
    let start = guess.unwrap_or([0.0; 4]);
    let dw_det = Matrix4::from_row_slice(&l.d2l_dv2(x, y, &start)).determinant();
    let direct = || newton(l, x, y, &pm.p, pm.r, start);
    let (v, residual, iterations) = if dw_det.abs() >= SINGULAR_DET && pm.r != 0.0 {
        let homotopy = || -> Result<([f64; 4], f64, usize), LegendreError> {
            let (mut v, mut res, mut total) = newton(l, x, y, &pm.p, 0.0, start)?;
            for s in 1..=HOMOTOPY_STEPS {
                let rs = pm.r * s as f64 / HOMOTOPY_STEPS as f64;
                let (nv, nres, it) = newton(l, x, y, &pm.p, rs, v)?;
                v = nv;
                res = nres;
                total += it;
            }
            Ok((v, res, total))
        };
        homotopy().or_else(|_| direct())?
    } else {
        direct()?
    };
    Ok(LepageSolution {
        value: lepage_pairing(&v, pm) - l.eval(x, y, &v),
        v,
        residual,
        iterations,
    })
}

/// `𝓗 = e − det p / r`.
pub fn closed_form_trivial(e: f64, p: &[f64; 4], r: f64) -> f64 {
    e - (p[0] * p[3] - p[1] * p[2]) / r
}

/// `𝓗 = e + (|p|²/2 + r det p)/(1 − r²)`.
pub fn closed_form_harmonic(e: f64, p: &[f64; 4], r: f64) -> f64 {
    let sq: f64 = p.iter().map(|a| a * a).sum();
    e + (0.5 * sq + r * (p[0] * p[3] - p[1] * p[2])) / (1.0 - r * r)
}

/// `𝓗 = e + ((p¹₂+p²₁)² − 4p¹₁p²₂)/(4r) − ¼(p¹₂−p²₁)²/(2+r)`.
pub fn closed_form_maxwell(e: f64, p: &[f64; 4], r: f64) -> f64 {
    let (p11, p12, p21, p22) = (p[0], p[1], p[2], p[3]);
    e + ((p12 + p21).powi(2) - 4.0 * p11 * p22) / (4.0 * r) - 0.25 * (p12 - p21).powi(2) / (2.0 + r)
}

/// The affine plane of momenta corresponding to one multivelocity.
#[derive(Debug, Clone, PartialEq)]
pub struct Pseudofiber {
    pub v: [f64; 4],
    pub base: LepageMomenta,
    /// Directions in `(e, p¹₁, p¹₂, p²₁, p²₂, r)` coordinates.
    pub directions: [[f64; 6]; 2],
}

impl Pseudofiber {
    /// Dimension of the affine plane, counting the `e` axis.
    pub fn affine_dimension(&self) -> usize {
        2
    }

    pub fn point(&self, s: f64, t: f64) -> LepageMomenta {
        let b = self.base.to_vec();
        LepageMomenta::from_vec(std::array::from_fn(|a| {
            b[a] + s * self.directions[0][a] + t * self.directions[1][a]
        }))
    }
}

/// Pseudofiber through `(x, y, v)`: spanned by `dx¹∧dx²` and
/// `det v dx¹∧dx² − ε_{ij}v^j_ν dy^i∧dx^ν + dy¹∧dy²`.
pub fn pseudofiber_at(l: &LagrangianDensity, x: &[f64], y: &[f64], v: &[f64; 4]) -> Result<Pseudofiber, LegendreError> {
    let p = lepage_correspondence(l, x, y, v, 0.0)?;
    let c = cofactor(v);
    Ok(Pseudofiber {
        v: *v,
        base: LepageMomenta { e: 0.0, p, r: 0.0 },
        directions: [[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], [det2(v), -c[0], -c[1], -c[2], -c[3], 1.0]],
    })
}

/// Max-norm residual of the correspondence equation at `(v, P)`.
pub fn correspondence_defect(l: &LagrangianDensity, x: &[f64], y: &[f64], v: &[f64; 4], pm: &LepageMomenta) -> f64 {
    correspondence_residual(l, x, y, v, &pm.p, pm.r).amax()
}
