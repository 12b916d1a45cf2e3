//! Hamiltonian n-curves: the lattice φ³ field in 1+1 dimensions, its lift to
//! the de Donder–Weyl chart, the classical `n = 1` reduction, and the explicit
//! 2-curves of the trivial Lepage problem.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charts::{DWChart, LepageChart22, MetricSignature, SpacetimeChart};
use crate::exterior::{ContractionTable, DiffForm};
use crate::legendre::{cofactor, det2, ClassicalHamiltonian, HamiltonianDensity};
use crate::seeding::{rng, Stream};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("CFL violation: dt/dx = {ratio} exceeds 1")]
    CflViolation { ratio: f64 },
    #[error("field left the finite range at time step {step}")]
    NonFiniteField { step: usize },
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("initial data has length {got}, lattice has Nx = {nx}")]
    LengthMismatch { got: usize, nx: usize },
    #[error("r vanishes at ({x}, {y})")]
    ZeroR { x: f64, y: f64 },
    #[error("slice {index} outside the time range 0..{nt}")]
    SliceOutOfRange { index: usize, nt: usize },
    #[error("unknown initial-data preset `{0}`")]
    UnknownPreset(String),
}

/// A periodic 1+1 lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice1p1 {
    pub nt: usize,
    pub nx: usize,
    pub dt: f64,
    pub dx: f64,
    #[serde(default)]
    pub t0: f64,
}

impl Lattice1p1 {
    pub fn new(nt: usize, nx: usize, dt: f64, dx: f64) -> Result<Self, DynamicsError> {
        let l = Self { nt, nx, dt, dx, t0: 0.0 };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.nx < 8 || self.nt < 2 {
            return Err(DynamicsError::InvalidLattice(format!(
                "need Nx ≥ 8 and Nt ≥ 2, got Nx = {}, Nt = {}",
                self.nx, self.nt
            )));
        }
        if !(self.dt > 0.0 && self.dx > 0.0) {
            return Err(DynamicsError::InvalidLattice("spacings must be positive".into()));
        }
        let ratio = self.dt / self.dx;
        if ratio > 1.0 {
            return Err(DynamicsError::CflViolation { ratio });
        }
        Ok(())
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn space(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn length(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    /// The same physical box with both spacings halved.
    pub fn refined(&self) -> Self {
        Self {
            nt: 2 * (self.nt - 1) + 1,
            nx: 2 * self.nx,
            dt: self.dt / 2.0,
            dx: self.dx / 2.0,
            t0: self.t0,
        }
    }
}

/// A real field on the `Nt × Nx` lattice, row-major in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nt: usize,
    pub nx: usize,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn zeros(nt: usize, nx: usize) -> Self {
        Self {
            nt,
            nx,
            data: vec![0.0; nt * nx],
        }
    }

    pub fn from_fn(nt: usize, nx: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut g = Self::zeros(nt, nx);
        for n in 0..nt {
            for j in 0..nx {
                g.data[n * nx + j] = f(n, j);
            }
        }
        g
    }

    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.data[n * self.nx + j]
    }

    /// Periodic access in space.
    pub fn at(&self, n: usize, j: isize) -> f64 {
        let nx = self.nx as isize;
        self.data[n * self.nx + j.rem_euclid(nx) as usize]
    }

    pub fn set(&mut self, n: usize, j: usize, v: f64) {
        self.data[n * self.nx + j] = v;
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.nx..(n + 1) * self.nx]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.data[n * self.nx..(n + 1) * self.nx]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Centered time derivative, second-order one-sided on the first and last slice.
    pub fn dt(&self, n: usize, j: usize, dt: f64) -> f64 {
        let last = self.nt - 1;
        if self.nt < 3 {
            return (self.get(1.min(last), j) - self.get(0, j)) / dt;
        }
        if n == 0 {
            (-3.0 * self.get(0, j) + 4.0 * self.get(1, j) - self.get(2, j)) / (2.0 * dt)
        } else if n == last {
            (3.0 * self.get(last, j) - 4.0 * self.get(last - 1, j) + self.get(last - 2, j)) / (2.0 * dt)
        } else {
            (self.get(n + 1, j) - self.get(n - 1, j)) / (2.0 * dt)
        }
    }

    /// Centered periodic space derivative.
    pub fn dx(&self, n: usize, j: usize, dx: f64) -> f64 {
        (self.at(n, j as isize + 1) - self.at(n, j as isize - 1)) / (2.0 * dx)
    }
}

pub(crate) fn laplacian_row(row: &[f64], dx: f64, out: &mut [f64]) {
    let nx = row.len();
    for j in 0..nx {
        let l = row[(j + nx - 1) % nx];
        let r = row[(j + 1) % nx];
        out[j] = (l - 2.0 * row[j] + r) / (dx * dx);
    }
}

const BLOWUP: f64 = 1e12;

/// Three-level leapfrog for `∂_t²φ = ∂_x²φ − m²φ − λφ²`, periodic in x,
/// started by a second-order Taylor step.
pub fn evolve_scalar(phi0: &[f64], phidot0: &[f64], m: f64, lambda: f64, lattice: &Lattice1p1) -> Result<Grid, DynamicsError> {
    lattice.validate()?;
    let (nt, nx, dt) = (lattice.nt, lattice.nx, lattice.dt);
    for v in [phi0, phidot0] {
        if v.len() != nx {
            return Err(DynamicsError::LengthMismatch { got: v.len(), nx });
        }
    }
    if phi0.iter().chain(phidot0).any(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFiniteField { step: 0 });
    }
    let force = |row: &[f64], lap: &[f64], j: usize| lap[j] - m * m * row[j] - lambda * row[j] * row[j];
    let mut g = Grid::zeros(nt, nx);
    g.row_mut(0).copy_from_slice(phi0);
    let mut lap = vec![0.0; nx];
    laplacian_row(phi0, lattice.dx, &mut lap);
    for j in 0..nx {
        let v = phi0[j] + dt * phidot0[j] + 0.5 * dt * dt * force(phi0, &lap, j);
        g.set(1, j, v);
    }
    for n in 1..nt - 1 {
        let (prev, rest) = g.data.split_at_mut(n * nx);
        let (cur, next) = rest.split_at_mut(nx);
        let prev = &prev[(n - 1) * nx..];
        laplacian_row(cur, lattice.dx, &mut lap);
        let next = &mut next[..nx];
        for j in 0..nx {
            next[j] = 2.0 * cur[j] - prev[j] + dt * dt * force(cur, &lap, j);
        }
        if next.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP) {
            return Err(DynamicsError::NonFiniteField { step: n + 1 });
        }
    }
    Ok(g)
}

/// `E = Σ_x (½φ̇² + ½φ′² + ½m²φ² + (λ/3)φ³) dx` on slice `n`.
pub fn field_energy(phi: &Grid, lattice: &Lattice1p1, m: f64, lambda: f64, n: usize) -> f64 {
    (0..phi.nx)
        .map(|j| {
            let f = phi.get(n, j);
            let ft = phi.dt(n, j, lattice.dt);
            let fx = phi.dx(n, j, lattice.dx);
            0.5 * ft * ft + 0.5 * fx * fx + 0.5 * m * m * f * f + lambda / 3.0 * f * f * f
        })
        .sum::<f64>()
        * lattice.dx
}

/// Named initial-data presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitPreset {
    /// Right-moving Klein–Gordon plane wave with `mode` wavelengths in the box.
    PlaneWave { mode: usize, amplitude: f64 },
    /// Gaussian bump at rest, centered in the box.
    Gaussian { amplitude: f64, width: f64 },
    /// A few random low Fourier modes, seeded.
    Noise { seed: u64 },
}

impl std::str::FromStr for InitPreset {
    type Err = DynamicsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plane-wave" => Ok(Self::PlaneWave { mode: 1, amplitude: 0.5 }),
            "gaussian" => Ok(Self::Gaussian {
                amplitude: 0.8,
                width: 0.6,
            }),
            _ => match s.strip_prefix("noise:").map(str::parse::<u64>) {
                Some(Ok(seed)) => Ok(Self::Noise { seed }),
                _ => Err(DynamicsError::UnknownPreset(s.to_string())),
            },
        }
    }
}

impl InitPreset {
    /// `(φ(0, ·), ∂_tφ(0, ·))` on the lattice.
    pub fn data(&self, lattice: &Lattice1p1, m: f64) -> (Vec<f64>, Vec<f64>) {
        let len = lattice.length();
        let xs: Vec<f64> = (0..lattice.nx).map(|j| lattice.space(j)).collect();
        match *self {
            Self::PlaneWave { mode, amplitude } => {
                let k = 2.0 * std::f64::consts::PI * mode as f64 / len;
                let w = (k * k + m * m).sqrt();
                (
                    xs.iter().map(|x| amplitude * (k * x).cos()).collect(),
                    xs.iter().map(|x| amplitude * w * (k * x).sin()).collect(),
                )
            }
            Self::Gaussian { amplitude, width } => (
                xs.iter()
                    .map(|x| amplitude * (-((x - len / 2.0) / width).powi(2)).exp())
                    .collect(),
                vec![0.0; lattice.nx],
            ),
            Self::Noise { seed } => {
                let mut r = rng(seed, Stream::Dynamics);
                let modes: Vec<(f64, f64, f64, f64)> = (1..=4)
                    .map(|q| {
                        let k = 2.0 * std::f64::consts::PI * q as f64 / len;
                        (k, r.gen_range(-0.3..0.3), r.gen_range(-0.3..0.3), r.gen_range(-0.3..0.3))
                    })
                    .collect();
                (
                    xs.iter()
                        .map(|x| modes.iter().map(|(k, a, b, _)| a * (k * x).cos() + b * (k * x).sin()).sum())
                        .collect(),
                    xs.iter()
                        .map(|x| modes.iter().map(|(k, _, _, c)| c * (k * x).cos()).sum())
                        .collect(),
                )
            }
        }
    }
}

/// A smooth space-time field that solves no equation: a sum of random
/// low-frequency modes in both t and x. Used as a negative control.
pub fn noise_field(lattice: &Lattice1p1, seed: u64) -> Grid {
    let mut r = rng(seed, Stream::Dynamics);
    let len = lattice.length();
    let modes: Vec<(f64, f64, f64, f64)> = (1..=3)
        .flat_map(|q| (0..3).map(move |w| (q, w)))
        .map(|(q, w)| {
            let k = 2.0 * std::f64::consts::PI * q as f64 / len;
            (k, 0.7 * w as f64 + 0.3, r.gen_range(-0.5..0.5), r.gen_range(0.0..6.3))
        })
        .collect();
    Grid::from_fn(lattice.nt, lattice.nx, |n, j| {
        let (t, x) = (lattice.time(n), lattice.space(j));
        modes.iter().map(|(k, w, a, ph)| a * (k * x + w * t + ph).cos()).sum()
    })
}

/// A point of a curve together with tangent vectors, in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    pub point: Vec<f64>,
    pub tangents: Vec<Vec<f64>>,
}

/// A time slice of the lattice: a node row, or the staggered row halfway
/// between `n` and `n + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slice {
    Node(usize),
    Midpoint(usize),
}

/// `Γ` for the φ³ field: `(t, x, φ, e, p⁰, p¹)` at every lattice site.
#[derive(Debug, Clone)]
pub struct HamiltonianCurve {
    pub lattice: Lattice1p1,
    pub phi: Grid,
    pub p: [Grid; 2],
    pub e: Grid,
    pub m: f64,
    pub lambda: f64,
    pub h0: f64,
    chart: DWChart,
    metric: MetricSignature,
}

fn phi_cubed_h(p0: f64, p1: f64, f: f64, m: f64, lambda: f64, eta: &MetricSignature) -> f64 {
    0.5 * (eta.lower(0) * p0 * p0 + eta.lower(1) * p1 * p1) - 0.5 * m * m * f * f - lambda / 3.0 * f * f * f
}

/// Lifts a field to `Γ`: `p^μ = η^{μν}∂_νφ` by finite differences and `e`
/// solved from `𝓗 = H0` at every site.
pub fn lift_to_curve(phi: Grid, m: f64, lambda: f64, h0: f64, lattice: &Lattice1p1) -> HamiltonianCurve {
    assert_eq!(
        (phi.nt, phi.nx),
        (lattice.nt, lattice.nx),
        "field shape must match the lattice"
    );
    let metric = MetricSignature::minkowski(2);
    let (nt, nx) = (lattice.nt, lattice.nx);
    let p0 = Grid::from_fn(nt, nx, |n, j| metric.upper(0) * phi.dt(n, j, lattice.dt));
    let p1 = Grid::from_fn(nt, nx, |n, j| metric.upper(1) * phi.dx(n, j, lattice.dx));
    let e = Grid::from_fn(nt, nx, |n, j| {
        h0 - phi_cubed_h(p0.get(n, j), p1.get(n, j), phi.get(n, j), m, lambda, &metric)
    });
    HamiltonianCurve {
        lattice: *lattice,
        phi,
        p: [p0, p1],
        e,
        m,
        lambda,
        h0,
        chart: DWChart::new(2, 1).expect("valid shape"),
        metric,
    }
}

impl HamiltonianCurve {
    pub fn chart(&self) -> &DWChart {
        &self.chart
    }

    pub fn metric(&self) -> &MetricSignature {
        &self.metric
    }

    /// The φ³ Hamiltonian matching this curve's parameters.
    pub fn hamiltonian(&self) -> HamiltonianDensity {
        HamiltonianDensity::phi_cubed(&self.chart, self.m, self.lambda, &self.metric)
    }

    pub fn point(&self, n: usize, j: usize) -> Vec<f64> {
        let l = &self.lattice;
        vec![
            l.time(n),
            l.space(j),
            self.phi.get(n, j),
            self.e.get(n, j),
            self.p[0].get(n, j),
            self.p[1].get(n, j),
        ]
    }

    fn fields(&self) -> [&Grid; 4] {
        [&self.phi, &self.e, &self.p[0], &self.p[1]]
    }

    /// `X_μ = ∂_μ + ∂_μφ ∂_φ + ∂_μe ∂_e + ∂_μp^ν ∂_{p^ν}` at a site.
    pub fn tangents(&self, n: usize, j: usize) -> [Vec<f64>; 2] {
        let l = &self.lattice;
        let mut x0 = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let mut x1 = vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        for (slot, g) in self.fields().into_iter().enumerate() {
            x0[2 + slot] = g.dt(n, j, l.dt);
            x1[2 + slot] = g.dx(n, j, l.dx);
        }
        [x0, x1]
    }

    pub fn sample(&self, n: usize, j: usize) -> CurveSample {
        CurveSample {
            point: self.point(n, j),
            tangents: self.tangents(n, j).to_vec(),
        }
    }

    /// Time rows whose tangent stencils stay clear of the first and last two
    /// levels. The time derivative of `p` is a difference of differences, so
    /// it reaches two levels out; the Taylor-started level 1 carries an
    /// `O(dt³)` error that such stencils would amplify to `O(dt)`.
    pub fn interior_rows(&self) -> std::ops::Range<usize> {
        2..self.lattice.nt.saturating_sub(2).max(2)
    }

    /// Samples at every site of the interior rows.
    pub fn interior_samples(&self) -> Vec<CurveSample> {
        let nx = self.lattice.nx;
        self.interior_rows()
            .into_par_iter()
            .flat_map_iter(|n| (0..nx).map(move |j| self.sample(n, j)))
            .collect()
    }

    /// Max of `f(point, [X₀, X₁])` over the interior rows, streamed in
    /// parallel without storing samples.
    pub fn max_over_interior<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64], &[&[f64]]) -> f64 + Sync,
    {
        self.interior_rows()
            .into_par_iter()
            .map(|n| {
                (0..self.lattice.nx).fold(0.0_f64, |m, j| {
                    let [x0, x1] = self.tangents(n, j);
                    m.max(f(&self.point(n, j), &[&x0, &x1]))
                })
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Max flow residual over the interior rows.
    pub fn flow_residual(&self, omega: &DiffForm, ham: &HamiltonianDensity) -> f64 {
        let checker = FlowChecker::new(omega, ham);
        self.max_over_interior(|z, t| checker.residual(z, t))
    }

    /// `(φ, e, p⁰, p¹)` along a slice; midpoint slices use averaged values
    /// and two-point time differences.
    fn slice_fields(&self, slice: Slice) -> Result<[Vec<f64>; 4], DynamicsError> {
        let l = &self.lattice;
        let nx = l.nx;
        match slice {
            Slice::Node(n) => {
                if n >= l.nt {
                    return Err(DynamicsError::SliceOutOfRange { index: n, nt: l.nt });
                }
                Ok(self.fields().map(|g| g.row(n).to_vec()))
            }
            Slice::Midpoint(n) => {
                if n + 1 >= l.nt {
                    return Err(DynamicsError::SliceOutOfRange { index: n, nt: l.nt });
                }
                let f: Vec<f64> = (0..nx).map(|j| 0.5 * (self.phi.get(n, j) + self.phi.get(n + 1, j))).collect();
                let p0: Vec<f64> = (0..nx)
                    .map(|j| self.metric.upper(0) * (self.phi.get(n + 1, j) - self.phi.get(n, j)) / l.dt)
                    .collect();
                let p1: Vec<f64> = (0..nx)
                    .map(|j| self.metric.upper(1) * (f[(j + 1) % nx] - f[(j + nx - 1) % nx]) / (2.0 * l.dx))
                    .collect();
                let e: Vec<f64> = (0..nx)
                    .map(|j| self.h0 - phi_cubed_h(p0[j], p1[j], f[j], self.m, self.lambda, &self.metric))
                    .collect();
                Ok([f, e, p0, p1])
            }
        }
    }

    /// Points on a slice, each with the single spatial tangent `X₁`.
    pub fn slice_samples(&self, slice: Slice) -> Result<Vec<CurveSample>, DynamicsError> {
        let l = &self.lattice;
        let nx = l.nx;
        let t = match slice {
            Slice::Node(n) => l.time(n),
            Slice::Midpoint(n) => l.time(n) + 0.5 * l.dt,
        };
        let fields = self.slice_fields(slice)?;
        Ok((0..nx)
            .map(|j| {
                let mut point = vec![t, l.space(j)];
                let mut x1 = vec![0.0, 1.0];
                for f in &fields {
                    point.push(f[j]);
                    x1.push((f[(j + 1) % nx] - f[(j + nx - 1) % nx]) / (2.0 * l.dx));
                }
                CurveSample {
                    point,
                    tangents: vec![x1],
                }
            })
            .collect())
    }
}

/// Pointwise check of `X⌟Ω = (−1)ⁿ d𝓗` for `n` tangent vectors.
pub struct FlowChecker<'a> {
    omega: &'a DiffForm,
    table: Option<ContractionTable>,
    ham: &'a HamiltonianDensity,
}

impl<'a> FlowChecker<'a> {
    pub fn new(omega: &'a DiffForm, ham: &'a HamiltonianDensity) -> Self {
        Self {
            omega,
            table: omega.constant_point_form().map(|pf| ContractionTable::new(&pf)),
            ham,
        }
    }

    /// Max-norm of `X⌟Ω − (−1)ⁿ d𝓗` at one point.
    pub fn residual(&self, point: &[f64], tangents: &[&[f64]]) -> f64 {
        let n = tangents.len();
        assert_eq!(self.omega.degree(), n + 1, "Ω must have degree n + 1");
        let lhs = match &self.table {
            Some(t) => t.apply(tangents),
            None => {
                let owned: Vec<Vec<f64>> = tangents.iter().map(|v| v.to_vec()).collect();
                self.omega.at(point).interior(&owned).expect("degree checked").to_covector()
            }
        };
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        lhs.iter()
            .zip(self.ham.grad(point))
            .fold(0.0, |m, (a, g)| m.max((a - sign * g).abs()))
    }
}

/// Per-sample residuals of `X⌟Ω − (−1)ⁿ d𝓗`, where `n` is the number of tangents.
pub fn flow_residuals(samples: &[CurveSample], omega: &DiffForm, ham: &HamiltonianDensity) -> Vec<f64> {
    let checker = FlowChecker::new(omega, ham);
    samples
        .par_iter()
        .map(|s| {
            let t: Vec<&[f64]> = s.tangents.iter().map(Vec::as_slice).collect();
            checker.residual(&s.point, &t)
        })
        .collect()
}

/// Max over samples of `|X⌟Ω − (−1)ⁿ d𝓗|`.
pub fn verify_hamilton_flow(samples: &[CurveSample], omega: &DiffForm, ham: &HamiltonianDensity) -> f64 {
    flow_residuals(samples, omega, ham).into_iter().fold(0.0, f64::max)
}

/// A classical trajectory sampled at uniform steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTrajectory {
    pub dt: f64,
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

/// RK4 integration of `dq/dt = ∂H/∂p`, `dp/dt = −∂H/∂q`.
pub fn classical_reduction(h: &ClassicalHamiltonian, q0: f64, p0: f64, t_end: f64, dt: f64) -> ClassicalTrajectory {
    let steps = (t_end / dt).round() as usize;
    let rhs = |t: f64, q: f64, p: f64| {
        let g = h.gradient(t, q, p);
        (g[2], -g[1])
    };
    let mut out = ClassicalTrajectory {
        dt,
        t: Vec::with_capacity(steps + 1),
        q: Vec::with_capacity(steps + 1),
        p: Vec::with_capacity(steps + 1),
    };
    let (mut q, mut p) = (q0, p0);
    for s in 0..=steps {
        let t = s as f64 * dt;
        out.t.push(t);
        out.q.push(q);
        out.p.push(p);
        if s == steps {
            break;
        }
        let (k1q, k1p) = rhs(t, q, p);
        let (k2q, k2p) = rhs(t + dt / 2.0, q + dt / 2.0 * k1q, p + dt / 2.0 * k1p);
        let (k3q, k3p) = rhs(t + dt / 2.0, q + dt / 2.0 * k2q, p + dt / 2.0 * k2p);
        let (k4q, k4p) = rhs(t + dt, q + dt * k3q, p + dt * k3p);
        q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        p += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    }
    out
}

impl ClassicalTrajectory {
    /// The lifted 1-curve `(t, q, e, p)` with `e = H0 − H`, tangents by
    /// centered differences (interior steps only).
    pub fn lift(&self, h: &ClassicalHamiltonian, h0: f64) -> Vec<CurveSample> {
        let e: Vec<f64> = (0..self.t.len())
            .map(|s| h0 - h.value(self.t[s], self.q[s], self.p[s]))
            .collect();
        (1..self.t.len() - 1)
            .map(|s| {
                let d = |v: &[f64]| (v[s + 1] - v[s - 1]) / (2.0 * self.dt);
                CurveSample {
                    point: vec![self.t[s], self.q[s], e[s], self.p[s]],
                    tangents: vec![vec![1.0, d(&self.q), d(&e), d(&self.p)]],
                }
            })
            .collect()
    }
}

/// `{F, G} = ∂F/∂q ∂G/∂p − ∂F/∂p ∂G/∂q` from `(∂_q, ∂_p)` gradients; with
/// this sign `dF/dt = {F, H}` along trajectories.
pub fn poisson_bracket(grad_f: [f64; 2], grad_g: [f64; 2]) -> f64 {
    grad_f[0] * grad_g[1] - grad_f[1] * grad_g[0]
}

/// Value, Jacobian `jac[i][μ] = ∂_μu^i` and Hessian `hess[i][μ][ν]` of a map `ℝ² → ℝ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapJet {
    pub value: [f64; 2],
    pub jac: [[f64; 2]; 2],
    pub hess: [[[f64; 2]; 2]; 2],
}

pub trait PlaneMap: Send + Sync {
    fn jet(&self, x: [f64; 2]) -> MapJet;
}

pub trait PlaneScalar: Send + Sync {
    /// Value and gradient.
    fn value_grad(&self, x: [f64; 2]) -> (f64, [f64; 2]);
}

const CUBIC_MONOMIALS: [(i32, i32); 10] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];

/// A polynomial map of total degree ≤ 3; `coeffs[i]` multiplies the monomials
/// `1, x, y, x², xy, y², x³, x²y, xy², y³`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicMap {
    pub coeffs: [[f64; 10]; 2],
}

impl CubicMap {
    pub fn identity() -> Self {
        let mut coeffs = [[0.0; 10]; 2];
        coeffs[0][1] = 1.0;
        coeffs[1][2] = 1.0;
        Self { coeffs }
    }

    pub fn random(seed: u64) -> Self {
        let mut r = rng(seed, Stream::Dynamics);
        Self {
            coeffs: std::array::from_fn(|_| std::array::from_fn(|_| r.gen_range(-1.0..1.0))),
        }
    }
}

fn mono(x: f64, a: i32) -> f64 {
    if a < 0 {
        0.0
    } else {
        x.powi(a)
    }
}

impl PlaneMap for CubicMap {
    fn jet(&self, x: [f64; 2]) -> MapJet {
        let mut jet = MapJet {
            value: [0.0; 2],
            jac: [[0.0; 2]; 2],
            hess: [[[0.0; 2]; 2]; 2],
        };
        for i in 0..2 {
            for (c, &(a, b)) in self.coeffs[i].iter().zip(CUBIC_MONOMIALS.iter()) {
                let (af, bf) = (a as f64, b as f64);
                let (px, py) = (x[0], x[1]);
                jet.value[i] += c * mono(px, a) * mono(py, b);
                jet.jac[i][0] += c * af * mono(px, a - 1) * mono(py, b);
                jet.jac[i][1] += c * bf * mono(px, a) * mono(py, b - 1);
                jet.hess[i][0][0] += c * af * (af - 1.0) * mono(px, a - 2) * mono(py, b);
                let mixed = c * af * bf * mono(px, a - 1) * mono(py, b - 1);
                jet.hess[i][0][1] += mixed;
                jet.hess[i][1][0] += mixed;
                jet.hess[i][1][1] += c * bf * (bf - 1.0) * mono(px, a) * mono(py, b - 2);
            }
        }
        jet
    }
}

/// `r(x) = base + amplitude·sin(x¹)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineProfile {
    pub base: f64,
    pub amplitude: f64,
}

impl PlaneScalar for SineProfile {
    fn value_grad(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        (self.base + self.amplitude * x[0].sin(), [self.amplitude * x[0].cos(), 0.0])
    }
}

/// An explicit Hamiltonian 2-curve of the trivial problem on the Lepage chart.
#[derive(Debug, Clone)]
pub struct LepageCurve22 {
    pub h: f64,
    pub grid: Vec<[f64; 2]>,
    pub samples: Vec<CurveSample>,
}

/// Builds `e = r det(Du) + h`, `p^μ_i = −r ε^{μν}ε_{ij}∂_νu^j` with exact
/// tangents at each grid point.
pub fn lepage_trivial_curve(
    u: &dyn PlaneMap,
    r: &dyn PlaneScalar,
    h: f64,
    grid: &[[f64; 2]],
) -> Result<LepageCurve22, DynamicsError> {
    let lc = LepageChart22::new();
    let mut samples = Vec::with_capacity(grid.len());
    for &x in grid {
        let jet = u.jet(x);
        let (rv, rg) = r.value_grad(x);
        if rv == 0.0 {
            return Err(DynamicsError::ZeroR { x: x[0], y: x[1] });
        }
        // v^i_μ at flat μ·2 + i
        let v: [f64; 4] = std::array::from_fn(|a| jet.jac[a % 2][a / 2]);
        let cof = cofactor(&v);
        let e = rv * det2(&v) + h;
        let p: [f64; 4] = std::array::from_fn(|a| -rv * cof[a]);
        let point = lc.point(x, jet.value, e, p, rv);
        let mut tangents = Vec::with_capacity(2);
        for lam in 0..2 {
            let dv: [f64; 4] = std::array::from_fn(|a| jet.hess[a % 2][a / 2][lam]);
            let dcof = cofactor(&dv);
            let de = rg[lam] * det2(&v) + rv * (0..4).map(|a| cof[a] * dv[a]).sum::<f64>();
            let dp: [f64; 4] = std::array::from_fn(|a| -rg[lam] * cof[a] - rv * dcof[a]);
            let mut xl = vec![0.0; 10];
            xl[lc.x(lam)] = 1.0;
            xl[lc.y(0)] = jet.jac[0][lam];
            xl[lc.y(1)] = jet.jac[1][lam];
            xl[lc.e()] = de;
            for mu in 0..2 {
                for i in 0..2 {
                    xl[lc.p(mu, i)] = dp[2 * mu + i];
                }
            }
            xl[lc.r()] = rg[lam];
            tangents.push(xl);
        }
        samples.push(CurveSample { point, tangents });
    }
    Ok(LepageCurve22 {
        h,
        grid: grid.to_vec(),
        samples,
    })
}

/// A uniform `n × n` grid on `[a, b]²`.
pub fn square_grid(a: f64, b: f64, n: usize) -> Vec<[f64; 2]> {
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .flat_map(|i| (0..n).map(move |j| [a + i as f64 * step, a + j as f64 * step]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::{build_omega_ddw, build_omega_lepage};

    #[test]
    fn lattice_validation() {
        assert!(matches!(
            Lattice1p1::new(10, 16, 0.2, 0.1),
            Err(DynamicsError::CflViolation { .. })
        ));
        assert!(Lattice1p1::new(10, 4, 0.05, 0.1).is_err());
        let l = Lattice1p1::new(11, 16, 0.05, 0.1).unwrap();
        let r = l.refined();
        assert_eq!((r.nt, r.nx), (21, 32));
        assert_eq!(r.time(r.nt - 1), l.time(l.nt - 1));
    }

    #[test]
    fn presets_parse() {
        assert_eq!("noise:42".parse::<InitPreset>().unwrap(), InitPreset::Noise { seed: 42 });
        assert!("noise:x".parse::<InitPreset>().is_err());
        assert!(matches!("gaussian".parse::<InitPreset>(), Ok(InitPreset::Gaussian { .. })));
    }

    #[test]
    fn zero_field_lifts_to_constant_e() {
        let l = Lattice1p1::new(6, 8, 0.05, 0.1).unwrap();
        let c = lift_to_curve(Grid::zeros(6, 8), 1.0, 0.3, 0.25, &l);
        assert!(c.p[0].max_abs() == 0.0 && c.p[1].max_abs() == 0.0);
        assert!(c.e.data.iter().all(|&e| e == 0.25));
    }

    #[test]
    fn hamiltonian_is_constant_on_curve() {
        let l = Lattice1p1::new(40, 32, 0.05, 0.1).unwrap();
        let (f0, g0) = InitPreset::Gaussian {
            amplitude: 0.5,
            width: 0.5,
        }
        .data(&l, 1.0);
        let phi = evolve_scalar(&f0, &g0, 1.0, 0.2, &l).unwrap();
        let c = lift_to_curve(phi, 1.0, 0.2, -0.4, &l);
        let h = c.hamiltonian();
        for n in 0..l.nt {
            for j in 0..l.nx {
                assert!((h.eval(&c.point(n, j)) + 0.4).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn solution_residual_small_and_noise_large() {
        let l = Lattice1p1::new(41, 64, 0.025, 0.05).unwrap();
        let (f0, g0) = InitPreset::PlaneWave { mode: 1, amplitude: 0.5 }.data(&l, 1.0);
        let phi = evolve_scalar(&f0, &g0, 1.0, 0.0, &l).unwrap();
        let c = lift_to_curve(phi, 1.0, 0.0, 0.0, &l);
        let om = build_omega_ddw(c.chart());
        let good = verify_hamilton_flow(&c.interior_samples(), &om, &c.hamiltonian());
        let bad = lift_to_curve(noise_field(&l, 3), 1.0, 0.0, 0.0, &l);
        let worse = verify_hamilton_flow(&bad.interior_samples(), &om, &bad.hamiltonian());
        assert!(good < 1e-2, "solution residual {good}");
        assert!(worse > 1e3 * good, "noise {worse} vs solution {good}");
    }

    #[test]
    fn midpoint_slice_uses_two_point_differences() {
        let l = Lattice1p1::new(4, 8, 0.05, 0.1).unwrap();
        let phi = Grid::from_fn(4, 8, |n, j| n as f64 + 0.1 * j as f64);
        let c = lift_to_curve(phi, 0.0, 0.0, 0.0, &l);
        let s = c.slice_samples(Slice::Midpoint(1)).unwrap();
        assert!((s[2].point[0] - 0.075).abs() < 1e-15);
        assert!((s[2].point[2] - 1.7).abs() < 1e-12);
        assert!((s[2].point[4] + 20.0).abs() < 1e-9);
        assert!(c.slice_samples(Slice::Midpoint(3)).is_err());
        assert!(c.slice_samples(Slice::Node(4)).is_err());
    }

    #[test]
    fn lepage_identity_curve() {
        let grid = square_grid(-1.0, 1.0, 5);
        let r = SineProfile {
            base: 1.0,
            amplitude: 0.0,
        };
        let curve = lepage_trivial_curve(&CubicMap::identity(), &r, 0.0, &grid).unwrap();
        let s = &curve.samples[0];
        assert_eq!(s.point[4], 1.0);
        let lc = LepageChart22::new();
        let res = verify_hamilton_flow(
            &curve.samples,
            &build_omega_lepage(&lc),
            &HamiltonianDensity::lepage_trivial(&lc),
        );
        assert!(res <= 1e-10, "residual {res}");
        let zero = SineProfile {
            base: 0.0,
            amplitude: 0.0,
        };
        assert!(matches!(
            lepage_trivial_curve(&CubicMap::identity(), &zero, 0.0, &grid),
            Err(DynamicsError::ZeroR { .. })
        ));
    }

    #[test]
    fn oscillator_trajectory() {
        let h = ClassicalHamiltonian::oscillator();
        let tr = classical_reduction(&h, 1.0, 0.0, 10.0, 1e-3);
        let err = tr.t.iter().zip(&tr.q).map(|(t, q)| (q - t.cos()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        assert_eq!(poisson_bracket([0.3, 0.7], [0.3, 0.7]), 0.0);
    }
}
