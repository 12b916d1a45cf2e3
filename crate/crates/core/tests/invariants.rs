//! Structural identities checked on random inputs.

use std::sync::Arc;

use proptest::prelude::*;

use multisym::charts::{build_omega_ddw, build_theta_ddw, DWChart, MetricSignature, SpacetimeChart};
use multisym::dynamics::{evolve_scalar, lift_to_curve, InitPreset, Lattice1p1, Slice};
use multisym::exterior::{Chart, DiffForm, SmoothScalar};
use multisym::legendre::{
    dw_inverse_legendre, dw_legendre, lepage_correspondence, lepage_hamiltonian, HamiltonianDensity, LagrangianDensity,
    LepageMomenta,
};
use multisym::observables::{bracket, bracket_at, slice_eval, solve_xi_at, ObservableForm};
use multisym::perturbation::{build_f1, PlaneWave};

const DIM: usize = 4;

/// `c + b·z + ½ zᵀAz` with exact derivatives; `a` is symmetrized.
fn quadratic(c: f64, b: Vec<f64>, a: Vec<f64>) -> SmoothScalar {
    let sym: Vec<f64> = (0..DIM * DIM).map(|k| 0.5 * (a[k] + a[(k % DIM) * DIM + k / DIM])).collect();
    let (b1, s1, s2) = (b.clone(), sym.clone(), sym.clone());
    SmoothScalar::new(
        DIM,
        move |z| {
            let mut v = c;
            for i in 0..DIM {
                v += b1[i] * z[i];
                for j in 0..DIM {
                    v += 0.5 * s1[i * DIM + j] * z[i] * z[j];
                }
            }
            v
        },
        move |z| {
            (0..DIM)
                .map(|i| b[i] + (0..DIM).map(|j| s2[i * DIM + j] * z[j]).sum::<f64>())
                .collect()
        },
    )
    .with_hessian(move |_| sym.clone())
}

fn coeff() -> impl Strategy<Value = SmoothScalar> {
    (
        -1.0..1.0f64,
        prop::collection::vec(-1.0..1.0f64, DIM),
        prop::collection::vec(-1.0..1.0f64, DIM * DIM),
    )
        .prop_map(|(c, b, a)| quadratic(c, b, a))
}

fn chart() -> Chart {
    Chart::new(["a", "b", "c", "d"]).unwrap()
}

fn one_form() -> impl Strategy<Value = DiffForm> {
    prop::collection::vec(coeff(), DIM).prop_map(|cs| {
        let ch = chart();
        cs.into_iter().enumerate().fold(DiffForm::zero(&ch, 1), |acc, (i, c)| {
            acc.add(&DiffForm::monomial(&ch, c, &[i])).unwrap()
        })
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, DIM)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn d_squared_vanishes(alpha in one_form(), z in point()) {
        let dd = alpha.exterior_derivative().unwrap().exterior_derivative().unwrap();
        prop_assert!(dd.at(&z).max_abs() < 1e-12);
    }

    #[test]
    fn leibniz_rule(alpha in one_form(), beta in one_form(), z in point()) {
        let lhs = alpha.wedge(&beta).unwrap().exterior_derivative().unwrap();
        let rhs = alpha
            .exterior_derivative()
            .unwrap()
            .wedge(&beta)
            .unwrap()
            .sub(&alpha.wedge(&beta.exterior_derivative().unwrap()).unwrap())
            .unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().at(&z).max_abs() < 1e-10);
    }

    #[test]
    fn wedge_of_one_forms_is_antisymmetric(alpha in one_form(), beta in one_form(), z in point()) {
        let sum = alpha.wedge(&beta).unwrap().add(&beta.wedge(&alpha).unwrap()).unwrap();
        prop_assert!(sum.at(&z).max_abs() < 1e-12);
    }

    #[test]
    fn phi_cubed_gradient_matches_differences(
        z in prop::collection::vec(-1.5..1.5f64, 6),
        m in 0.0..2.0f64,
        lambda in -1.0..1.0f64,
    ) {
        let c = DWChart::new(2, 1).unwrap();
        let h = HamiltonianDensity::phi_cubed(&c, m, lambda, &MetricSignature::minkowski(2));
        let g = h.grad(&z);
        let eps = 1e-6;
        for a in 0..6 {
            let (mut up, mut dn) = (z.clone(), z.clone());
            up[a] += eps;
            dn[a] -= eps;
            let fd = (h.eval(&up) - h.eval(&dn)) / (2.0 * eps);
            prop_assert!((fd - g[a]).abs() < 1e-7 * (1.0 + g[a].abs()), "slot {a}: {fd} vs {}", g[a]);
        }
    }

    #[test]
    fn lepage_consistency(
        v in prop::array::uniform4(-0.5..0.5f64),
        r in -0.5..0.5f64,
        e in -1.0..1.0f64,
    ) {
        let l = LagrangianDensity::harmonic_map();
        let origin = [0.0; 2];
        let p = lepage_correspondence(&l, &origin, &origin, &v, r).unwrap();
        let det = v[0] * v[3] - v[2] * v[1];
        let expected = e + (0..4).map(|a| p[a] * v[a]).sum::<f64>() + r * det - l.eval(&origin, &origin, &v);
        let sol = lepage_hamiltonian(&l, &origin, &origin, &LepageMomenta { e, p, r }, None).unwrap();
        prop_assert!((sol.value - expected).abs() < 1e-10, "{} vs {expected}", sol.value);
    }
}

#[test]
fn dw_round_trip_for_the_harmonic_map() {
    use rand::Rng;
    let c = DWChart::new(2, 2).unwrap();
    let ps: Vec<usize> = (0..2)
        .flat_map(|mu| (0..2).map(move |i| (mu, i)))
        .map(|(mu, i)| c.p(mu, i))
        .collect();
    let (pv, pg) = (ps.clone(), ps);
    let dim = c.dim();
    let e = c.e();
    let scalar = SmoothScalar::new(
        dim,
        move |z| z[e] + 0.5 * pv.iter().map(|&a| z[a] * z[a]).sum::<f64>(),
        move |z| {
            let mut g = vec![0.0; dim];
            g[e] = 1.0;
            pg.iter().for_each(|&a| g[a] = z[a]);
            g
        },
    );
    let h = HamiltonianDensity::new(c.chart(), scalar);
    let l = LagrangianDensity::harmonic_map();
    let mut r = multisym::seeding::rng(11, multisym::seeding::Stream::Legendre);
    for _ in 0..100 {
        let x: Vec<f64> = (0..2).map(|_| r.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..2).map(|_| r.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..4).map(|_| r.gen_range(-2.0..2.0)).collect();
        let fwd = dw_legendre(&l, &x, &y, &v);
        let back = dw_inverse_legendre(&h, &c, &x, &y, &fwd.p);
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

fn f1_family() -> (DWChart, Vec<ObservableForm>) {
    let c = DWChart::new(2, 1).unwrap();
    let metric = MetricSignature::minkowski(2);
    let k0 = 2.0 * std::f64::consts::PI / 6.4;
    let forms = [(1.0, 0.1), (1.0, 0.9), (2.0, -0.4)]
        .iter()
        .map(|&(mode, phase)| build_f1(Arc::new(PlaneWave::continuum(1.0, mode * k0, 1.0, phase)), &c, &metric))
        .collect();
    (c, forms)
}

#[test]
fn xi_is_unique_for_a_nondegenerate_omega() {
    let (_, forms) = f1_family();
    let z = [0.4, 1.1, -0.3, 0.8, 0.5, -1.2];
    for f in &forms {
        let analytic = f.xi_at(&z).unwrap();
        let (numeric, _) = solve_xi_at(f.dform().unwrap(), f.omega(), &z).unwrap();
        for (a, b) in analytic.iter().zip(&numeric) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn bracket_is_antisymmetric_coefficientwise() {
    let (c, mut forms) = f1_family();
    let theta = build_theta_ddw(&c);
    let unit = |i: usize| {
        (0..c.dim())
            .map(|a| SmoothScalar::constant(c.dim(), if a == i { 1.0 } else { 0.0 }))
            .collect()
    };
    forms.push(ObservableForm::with_xi(
        theta.interior_basis(c.x(0)),
        build_omega_ddw(&c),
        unit(c.x(0)),
    ));
    let z = [0.2, -0.7, 0.6, 1.4, -0.3, 0.9];
    for f in &forms {
        for g in &forms {
            let fg = bracket(f, g).unwrap();
            let gf = bracket(g, f).unwrap();
            for (t, coeff) in fg.terms() {
                let other = gf.coefficient(t).map_or(0.0, |s| s.value(&z));
                assert_eq!(coeff.value(&z), -other);
            }
            assert_eq!(fg.num_terms(), gf.num_terms());
        }
    }
}

#[test]
fn jacobi_identity_on_slice_integrals() {
    let (c, forms) = f1_family();
    let omega = build_omega_ddw(&c);
    let l = Lattice1p1::new(60, 64, 0.05, 0.1).unwrap();
    let (a, b) = InitPreset::PlaneWave { mode: 1, amplitude: 0.5 }.data(&l, 1.0);
    let curve = lift_to_curve(evolve_scalar(&a, &b, 1.0, 0.0, &l).unwrap(), 1.0, 0.0, 0.0, &l);
    let samples = curve.slice_samples(Slice::Node(30)).unwrap();
    let double = |i: usize, j: usize, k: usize| -> f64 {
        let inner = ObservableForm::unchecked(bracket(&forms[i], &forms[j]).unwrap(), omega.clone());
        samples
            .iter()
            .map(|s| {
                bracket_at(&inner, &forms[k], &s.point)
                    .unwrap()
                    .evaluate(&[s.tangents[0].clone()])
                    .unwrap()
            })
            .sum::<f64>()
            * l.dx
    };
    let cyclic = double(0, 1, 2) + double(1, 2, 0) + double(2, 0, 1);
    assert!(cyclic.abs() < 1e-8, "{cyclic}");
    // the single brackets themselves are not trivial
    let single = slice_eval(&curve, Slice::Node(30), &bracket(&forms[0], &forms[1]).unwrap()).unwrap();
    assert!(single.abs() > 1e-3, "{single}");
}
