//! Perturbative observables of the 1+1 φ³ model: the first-order form
//! `F⁽¹⁾`, the retarded lattice Green function, the second-order kernel
//! `Φ⁽²⁾` with its tensor form `F⁽²⁾`, boundary functionals and the
//! λ-scaling study.
//!
//! Throughout, `Δ = −η^{μν}∂_μ∂_ν`, so the field equation reads
//! `(Δ + m²)φ = −λφ²`.

mod functional;
mod green;
mod kernel;
mod scaling;
mod tensor;

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::charts::{omega_mu, DWChart, MetricSignature, SpacetimeChart};
use crate::dynamics::{DynamicsError, Grid, Lattice1p1};
use crate::exterior::{DiffForm, SmoothScalar};
use crate::observables::{ObservableError, ObservableForm};

pub use functional::{eval_tensor_boundary, product_functionals, PerturbativeFunctional, Slab, TensorKernel, Term};
pub use green::{apply_operator, retarded_green, retarded_solve, LatticeGreen};
pub use kernel::{build_phi2, slice_functional, Kernel2, Site};
pub use scaling::{fit_slope, geometric, lambda_scaling_study, Phi1Preset, ScalingConfig, ScalingReport, ScalingRow};
pub use tensor::{BiScalar, PointTensor, SecondOrderForm, SeparableKernel, Wave};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerturbationError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error("slab needs t0 before t1, got {t0:?} and {t1:?}")]
    InvalidSlab {
        t0: crate::dynamics::Slice,
        t1: crate::dynamics::Slice,
    },
    #[error("grid is {got:?}, lattice expects {expected:?}")]
    ShapeMismatch { got: (usize, usize), expected: (usize, usize) },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Value, gradient and Hessian of a space-time function at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl Jet2 {
    /// `ΔΦ = −η^{μν}∂_μ∂_νΦ`.
    pub fn box_op(&self, metric: &MetricSignature) -> f64 {
        -(0..2).map(|mu| metric.upper(mu) * self.hess[mu][mu]).sum::<f64>()
    }
}

/// A function of `(t, x)` with derivatives up to second order.
pub trait SpacetimeScalar: Send + Sync + std::fmt::Debug {
    fn jet(&self, x: [f64; 2]) -> Jet2;
}

/// `A cos(k x − ω t + δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlaneWave {
    pub amplitude: f64,
    pub k: f64,
    pub omega: f64,
    pub phase: f64,
}

impl PlaneWave {
    /// Continuum Klein–Gordon dispersion `ω² = k² + m²`.
    pub fn continuum(amplitude: f64, k: f64, m: f64, phase: f64) -> Self {
        Self {
            amplitude,
            k,
            omega: (k * k + m * m).sqrt(),
            phase,
        }
    }

    /// Lattice dispersion, making the sampled wave an exact solution of the
    /// leapfrog scheme: `(2/dt)² sin²(ω dt/2) = (2/dx)² sin²(k dx/2) + m²`.
    pub fn discrete(amplitude: f64, k: f64, m: f64, phase: f64, lattice: &Lattice1p1) -> Self {
        let s = (2.0 / lattice.dx * (0.5 * k * lattice.dx).sin()).powi(2) + m * m;
        let arg = 0.5 * lattice.dt * s.sqrt();
        assert!(arg <= 1.0, "mode is not resolved by the time step");
        Self {
            amplitude,
            k,
            omega: 2.0 / lattice.dt * arg.asin(),
            phase,
        }
    }

    pub fn sample(&self, lattice: &Lattice1p1) -> Grid {
        Grid::from_fn(lattice.nt, lattice.nx, |n, j| {
            self.jet([lattice.time(n), lattice.space(j)]).value
        })
    }
}

impl SpacetimeScalar for PlaneWave {
    fn jet(&self, x: [f64; 2]) -> Jet2 {
        let arg = self.k * x[1] - self.omega * x[0] + self.phase;
        let (s, c) = arg.sin_cos();
        let a = self.amplitude;
        let kv = [-self.omega, self.k];
        let mut j = Jet2 {
            value: a * c,
            grad: [-a * s * kv[0], -a * s * kv[1]],
            hess: [[0.0; 2]; 2],
        };
        for mu in 0..2 {
            for nu in 0..2 {
                j.hess[mu][nu] = -a * c * kv[mu] * kv[nu];
            }
        }
        j
    }
}

/// A lattice field read through finite differences.
///
/// Node times give centered (one-sided at the ends) differences. Times
/// halfway between two rows give the staggered jet: the row average, the
/// two-point time difference, and centered space differences of the average.
#[derive(Debug, Clone)]
pub struct LatticeScalar {
    pub grid: Grid,
    pub lattice: Lattice1p1,
}

impl LatticeScalar {
    pub fn new(grid: Grid, lattice: Lattice1p1) -> Result<Self, PerturbationError> {
        if (grid.nt, grid.nx) != (lattice.nt, lattice.nx) {
            return Err(PerturbationError::ShapeMismatch {
                got: (grid.nt, grid.nx),
                expected: (lattice.nt, lattice.nx),
            });
        }
        Ok(Self { grid, lattice })
    }

    fn row_jet(&self, rows: &[(usize, f64)], drows: &[(usize, f64)], ddrows: &[(usize, f64)], j: usize) -> Jet2 {
        let dx = self.lattice.dx;
        let comb = |w: &[(usize, f64)], dj: isize| -> f64 { w.iter().map(|&(n, c)| c * self.grid.at(n, j as isize + dj)).sum() };
        let v = comb(rows, 0);
        let vx = (comb(rows, 1) - comb(rows, -1)) / (2.0 * dx);
        let vxx = (comb(rows, 1) - 2.0 * v + comb(rows, -1)) / (dx * dx);
        let vt = comb(drows, 0);
        let vtx = (comb(drows, 1) - comb(drows, -1)) / (2.0 * dx);
        let vtt = comb(ddrows, 0);
        Jet2 {
            value: v,
            grad: [vt, vx],
            hess: [[vtt, vtx], [vtx, vxx]],
        }
    }
}

impl SpacetimeScalar for LatticeScalar {
    fn jet(&self, x: [f64; 2]) -> Jet2 {
        let l = &self.lattice;
        let s = (x[0] - l.t0) / l.dt;
        let j = ((x[1] / l.dx).round() as isize).rem_euclid(l.nx as isize) as usize;
        let last = l.nt - 1;
        let dt = l.dt;
        let half = s - s.floor();
        if (half - 0.5).abs() < 1e-6 {
            let n = (s.floor() as usize).min(last - 1);
            let nn = (n + 1).min(last);
            // second time difference of the staggered values
            let dd: Vec<(usize, f64)> = if n >= 1 && n + 2 <= last {
                let c = 0.5 / (dt * dt);
                vec![(n - 1, c), (n, -c), (n + 1, -c), (n + 2, c)]
            } else {
                vec![]
            };
            return self.row_jet(&[(n, 0.5), (nn, 0.5)], &[(n, -1.0 / dt), (nn, 1.0 / dt)], &dd, j);
        }
        let n = (s.round().max(0.0) as usize).min(last);
        let c1 = 1.0 / (2.0 * dt);
        let c2 = 1.0 / (dt * dt);
        let (d, dd) = if n == 0 {
            (
                vec![(0, -3.0 * c1), (1, 4.0 * c1), (2, -c1)],
                vec![(0, 2.0 * c2), (1, -5.0 * c2), (2, 4.0 * c2), (3, -c2)],
            )
        } else if n == last {
            (
                vec![(last, 3.0 * c1), (last - 1, -4.0 * c1), (last - 2, c1)],
                vec![(last, 2.0 * c2), (last - 1, -5.0 * c2), (last - 2, 4.0 * c2), (last - 3, -c2)],
            )
        } else {
            (
                vec![(n - 1, -c1), (n + 1, c1)],
                vec![(n - 1, c2), (n, -2.0 * c2), (n + 1, c2)],
            )
        };
        self.row_jet(&[(n, 1.0)], &d, &dd, j)
    }
}

fn check_phi_cubed_chart(chart: &DWChart) {
    assert_eq!((chart.n(), chart.k()), (2, 1), "F⁽¹⁾ lives on the n = 2, k = 1 chart");
}

/// `F⁽¹⁾ = (p^μΦ − η^{μν}φ∂_νΦ) ω_μ` with its vector field
/// `ξ⁽¹⁾ = η^{μν}∂_νΦ ∂_{p^μ} − (φΔΦ + p^μ∂_μΦ) ∂_e + Φ ∂_φ`.
pub fn build_f1(phi1: Arc<dyn SpacetimeScalar>, chart: &DWChart, metric: &MetricSignature) -> ObservableForm {
    check_phi_cubed_chart(chart);
    let dim = chart.dim();
    let (it, ix, iy, ie) = (chart.x(0), chart.x(1), chart.y(0), chart.e());
    let ip = [chart.p(0, 0), chart.p(1, 0)];
    let eta = [metric.upper(0), metric.upper(1)];
    let ch = chart.chart();
    let mut form = DiffForm::zero(ch, 1);
    for mu in 0..2 {
        let (pv, pg) = (phi1.clone(), phi1.clone());
        let coeff = SmoothScalar::new(
            dim,
            move |z| {
                let j = pv.jet([z[it], z[ix]]);
                z[ip[mu]] * j.value - eta[mu] * z[iy] * j.grad[mu]
            },
            move |z| {
                let j = pg.jet([z[it], z[ix]]);
                let mut g = vec![0.0; dim];
                for (lam, &slot) in [it, ix].iter().enumerate() {
                    g[slot] = z[ip[mu]] * j.grad[lam] - eta[mu] * z[iy] * j.hess[mu][lam];
                }
                g[iy] = -eta[mu] * j.grad[mu];
                g[ip[mu]] = j.value;
                g
            },
        );
        let om = omega_mu(chart, mu).expect("mu < 2").times(&coeff);
        form = form.add(&om).expect("same chart");
    }
    let mut xi = vec![SmoothScalar::zero(dim); dim];
    for mu in 0..2 {
        let (pv, pg) = (phi1.clone(), phi1.clone());
        xi[ip[mu]] = SmoothScalar::new(
            dim,
            move |z| eta[mu] * pv.jet([z[it], z[ix]]).grad[mu],
            move |z| {
                let j = pg.jet([z[it], z[ix]]);
                let mut g = vec![0.0; dim];
                g[it] = eta[mu] * j.hess[mu][0];
                g[ix] = eta[mu] * j.hess[mu][1];
                g
            },
        );
    }
    let (pv, pg, pe) = (phi1.clone(), phi1.clone(), phi1);
    xi[iy] = SmoothScalar::new(
        dim,
        move |z| pv.jet([z[it], z[ix]]).value,
        move |z| {
            let j = pg.jet([z[it], z[ix]]);
            let mut g = vec![0.0; dim];
            g[it] = j.grad[0];
            g[ix] = j.grad[1];
            g
        },
    );
    let metric = metric.clone();
    xi[ie] = SmoothScalar::value_only(dim, move |z| {
        let j = pe.jet([z[it], z[ix]]);
        -(z[iy] * j.box_op(&metric) + z[ip[0]] * j.grad[0] + z[ip[1]] * j.grad[1])
    });
    ObservableForm::with_xi(form, crate::charts::build_omega_ddw(chart), xi)
}

/// The equations a dynamical algebraic observable `(Φ, E, P^μ)` must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicalEquation {
    /// `∂Φ/∂φ = 0`.
    PhiIndependence,
    /// `P^μ = η^{μν}∂_νΦ`.
    Momentum,
    /// `∂E/∂φ = ∂_μP^μ`.
    Compatibility,
    /// `(m²φ + λφ²)Φ = E`.
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicalVerdict {
    Dynamical,
    Obstructed,
}

/// A candidate `(Φ, E, P⁰, P¹)`, each a function of `(t, x, φ)`.
#[derive(Debug, Clone)]
pub struct DynamicalCandidate {
    pub phi: SmoothScalar,
    pub e: SmoothScalar,
    pub p: [SmoothScalar; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub verdict: DynamicalVerdict,
    /// The first equation, in checking order, whose residual exceeds the tolerance.
    pub first_failure: Option<DynamicalEquation>,
    pub residuals: Vec<(DynamicalEquation, f64)>,
}

/// Tolerance on the residuals of [`classify_dynamical`].
pub const DYNAMICAL_TOL: f64 = 1e-10;

/// Checks the dynamical-observable system on sample points `(t, x, φ)`.
pub fn classify_dynamical(
    m: f64,
    lambda: f64,
    metric: &MetricSignature,
    candidate: &DynamicalCandidate,
    samples: &[[f64; 3]],
) -> Result<ClassificationReport, PerturbationError> {
    let missing = || PerturbationError::InvalidConfig("candidate functions need gradients".into());
    let mut worst = [0.0_f64; 4];
    for s in samples {
        let gphi = candidate.phi.gradient(s).ok_or_else(missing)?;
        let ge = candidate.e.gradient(s).ok_or_else(missing)?;
        let gp0 = candidate.p[0].gradient(s).ok_or_else(missing)?;
        let gp1 = candidate.p[1].gradient(s).ok_or_else(missing)?;
        let r = [
            gphi[2].abs(),
            (0..2)
                .map(|mu| (candidate.p[mu].value(s) - metric.upper(mu) * gphi[mu]).abs())
                .fold(0.0, f64::max),
            (ge[2] - gp0[0] - gp1[1]).abs(),
            ((m * m * s[2] + lambda * s[2] * s[2]) * candidate.phi.value(s) - candidate.e.value(s)).abs(),
        ];
        for (w, v) in worst.iter_mut().zip(r) {
            *w = w.max(v);
        }
    }
    let order = [
        DynamicalEquation::PhiIndependence,
        DynamicalEquation::Momentum,
        DynamicalEquation::Compatibility,
        DynamicalEquation::Energy,
    ];
    let first_failure = order.iter().zip(worst).find(|(_, r)| r.is_nan() || *r > DYNAMICAL_TOL).map(|(e, _)| *e);
    Ok(ClassificationReport {
        verdict: if first_failure.is_none() {
            DynamicalVerdict::Dynamical
        } else {
            DynamicalVerdict::Obstructed
        },
        first_failure,
        residuals: order.into_iter().zip(worst).collect(),
    })
}

/// The free-field candidate `Φ(t, x)`, `E = m²φΦ`, `P^μ = η^{μν}∂_νΦ`.
pub fn free_candidate(phi1: Arc<dyn SpacetimeScalar>, m: f64, metric: &MetricSignature) -> DynamicalCandidate {
    let jet = move |s: &[f64]| phi1.jet([s[0], s[1]]);
    let j1 = jet.clone();
    let phi = SmoothScalar::new(3, move |s| j1(s).value, {
        let j = jet.clone();
        move |s| {
            let v = j(s);
            vec![v.grad[0], v.grad[1], 0.0]
        }
    });
    let e = SmoothScalar::new(
        3,
        {
            let j = jet.clone();
            move |s| m * m * s[2] * j(s).value
        },
        {
            let j = jet.clone();
            move |s| {
                let v = j(s);
                vec![m * m * s[2] * v.grad[0], m * m * s[2] * v.grad[1], m * m * v.value]
            }
        },
    );
    let p = [0, 1].map(|mu| {
        let eta = metric.upper(mu);
        let (jv, jg) = (jet.clone(), jet.clone());
        SmoothScalar::new(
            3,
            move |s| eta * jv(s).grad[mu],
            move |s| {
                let v = jg(s);
                vec![eta * v.hess[mu][0], eta * v.hess[mu][1], 0.0]
            },
        )
    });
    DynamicalCandidate { phi, e, p }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::build_omega_ddw;
    use crate::dynamics::{evolve_scalar, lift_to_curve, InitPreset};
    use crate::legendre::HamiltonianDensity;
    use crate::observables::{pseudobracket, solve_xi};

    fn setup() -> (DWChart, MetricSignature) {
        (DWChart::new(2, 1).unwrap(), MetricSignature::minkowski(2))
    }

    #[test]
    fn plane_wave_solves_klein_gordon() {
        let (_, metric) = setup();
        let w = PlaneWave::continuum(0.7, 1.3, 0.9, 0.2);
        let j = w.jet([0.4, -1.1]);
        assert!((j.box_op(&metric) + 0.81 * j.value).abs() < 1e-14);
    }

    #[test]
    fn discrete_plane_wave_is_a_leapfrog_solution() {
        let l = Lattice1p1::new(40, 32, 0.05, 0.1).unwrap();
        let k = 2.0 * std::f64::consts::PI * 2.0 / l.length();
        let w = PlaneWave::discrete(0.5, k, 1.0, 0.3, &l);
        let g = w.sample(&l);
        let ls = LatticeScalar::new(g, l).unwrap();
        for n in 1..l.nt - 1 {
            for j in [0, 5, 31] {
                let jet = ls.jet([l.time(n), l.space(j)]);
                let r = jet.hess[0][0] - jet.hess[1][1] + jet.value;
                assert!(r.abs() < 1e-10, "{r}");
            }
        }
    }

    #[test]
    fn lattice_scalar_midpoint_jet() {
        let l = Lattice1p1::new(10, 16, 0.05, 0.1).unwrap();
        let g = Grid::from_fn(10, 16, |n, j| n as f64 * 2.0 + j as f64 * 0.5);
        let ls = LatticeScalar::new(g, l).unwrap();
        let jet = ls.jet([l.time(3) + 0.5 * l.dt, l.space(4)]);
        assert!((jet.value - (7.0 + 2.0)).abs() < 1e-12);
        assert!((jet.grad[0] - 2.0 / 0.05).abs() < 1e-9);
        assert!((jet.grad[1] - 0.5 / 0.1).abs() < 1e-9);
    }

    #[test]
    fn zero_phi_gives_zero_form() {
        let (c, metric) = setup();
        let zero = PlaneWave::continuum(0.0, 1.0, 1.0, 0.0);
        let f = build_f1(Arc::new(zero), &c, &metric);
        let z = [0.3, 0.1, 0.5, 0.2, -0.4, 0.9];
        assert_eq!(f.form().at(&z).max_abs(), 0.0);
    }

    #[test]
    fn f1_field_matches_numeric_solve() {
        let (c, metric) = setup();
        let w = PlaneWave::continuum(0.8, 1.1, 1.0, 0.4);
        let f = build_f1(Arc::new(w), &c, &metric);
        let pts: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..6).map(|a| 0.3 * i as f64 - 0.2 * a as f64 + 0.1).collect())
            .collect();
        let numeric = solve_xi(f.form(), &build_omega_ddw(&c), &pts).unwrap();
        for (z, xi) in pts.iter().zip(&numeric) {
            assert!(f.xi_residual(z).unwrap() < 1e-12);
            let analytic = f.xi_at(z).unwrap();
            for (a, b) in analytic.iter().zip(xi) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
            let j = w.jet([z[0], z[1]]);
            let expected_e = -(z[2] * j.box_op(&metric) + z[4] * j.grad[0] + z[5] * j.grad[1]);
            assert!((analytic[c.e()] - expected_e).abs() < 1e-14);
        }
    }

    #[test]
    fn pseudobracket_is_obstruction() {
        let (c, metric) = setup();
        let (m, lam) = (1.0, 0.3);
        let w = PlaneWave::continuum(0.6, 0.9, m, 0.0);
        let f = build_f1(Arc::new(w), &c, &metric);
        let h = HamiltonianDensity::phi_cubed(&c, m, lam, &metric);
        let l = Lattice1p1::new(30, 32, 0.05, 0.1).unwrap();
        let (a, b) = InitPreset::Gaussian {
            amplitude: 0.8,
            width: 0.6,
        }
        .data(&l, m);
        let curve = lift_to_curve(evolve_scalar(&a, &b, m, lam, &l).unwrap(), m, lam, 0.0, &l);
        for n in [0, 7, 29] {
            for j in [0, 13] {
                let z = curve.point(n, j);
                let pb = pseudobracket(&h, &f, &z).unwrap();
                let expected = lam * z[2] * z[2] * w.jet([z[0], z[1]]).value;
                assert!((pb - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn classification_dichotomy() {
        let (_, metric) = setup();
        let m = 1.0;
        let w: Arc<dyn SpacetimeScalar> = Arc::new(PlaneWave::continuum(0.7, 1.2, m, 0.1));
        let cand = free_candidate(w, m, &metric);
        let samples: Vec<[f64; 3]> = (0..50)
            .map(|i| [0.1 * i as f64, 0.37 * i as f64, 0.5 + 0.02 * i as f64])
            .collect();
        let free = classify_dynamical(m, 0.0, &metric, &cand, &samples).unwrap();
        assert_eq!(free.verdict, DynamicalVerdict::Dynamical);
        let lam = 0.2;
        let inter = classify_dynamical(m, lam, &metric, &cand, &samples).unwrap();
        assert_eq!(inter.first_failure, Some(DynamicalEquation::Energy));
        let expected = samples
            .iter()
            .map(|s| (lam * s[2] * s[2] * cand.phi.value(s)).abs())
            .fold(0.0, f64::max);
        assert!((inter.residuals[3].1 - expected).abs() < 1e-12);

        let mut bad = cand.clone();
        bad.phi = SmoothScalar::coordinate(3, 2);
        let r = classify_dynamical(m, 0.0, &metric, &bad, &samples).unwrap();
        assert_eq!(r.first_failure, Some(DynamicalEquation::PhiIndependence));
    }
}
