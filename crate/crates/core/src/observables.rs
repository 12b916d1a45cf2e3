//! Observable (n−1)-forms, their Hamiltonian vector fields, brackets, slice
//! functionals and the dynamical relations along Hamiltonian curves.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{DynamicsError, HamiltonianCurve, Slice};
use crate::exterior::{
    increasing_tuples, ContractionTable, DecomposableMultivector, DiffForm, ExteriorError, PointForm, SmoothScalar,
};
use crate::legendre::HamiltonianDensity;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObservableError {
    #[error("form is not algebraic: least-squares residual {residual:e}")]
    NotAlgebraic { residual: f64 },
    #[error("pair index {index} out of range for {len} forms")]
    PairIndex { index: usize, len: usize },
    #[error("form carries no analytic vector field")]
    MissingField,
    #[error("projection failed: {successes} usable pairs out of {attempts} attempts")]
    ProjectionFailure { successes: usize, attempts: usize },
    #[error("expected a form of degree {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Algebraic,
    ObservableOnly,
    NotObservable,
    Unchecked,
}

/// Consistency threshold for the pointwise `ξ` solve.
pub const ALGEBRAIC_TOL: f64 = 1e-8;

/// An (n−1)-form `F` together with `Ω` and, when known, `ξ_F`.
#[derive(Debug, Clone)]
pub struct ObservableForm {
    form: DiffForm,
    dform: Option<DiffForm>,
    omega: DiffForm,
    xi: Option<Vec<SmoothScalar>>,
    classification: Classification,
}

impl ObservableForm {
    fn build(form: DiffForm, omega: DiffForm, xi: Option<Vec<SmoothScalar>>, classification: Classification) -> Self {
        assert_eq!(form.chart(), omega.chart(), "F and Ω must share a chart");
        assert_eq!(
            form.degree() + 2,
            omega.degree(),
            "F must have degree n − 1 for an (n+1)-form Ω"
        );
        let dform = form.exterior_derivative().ok();
        Self {
            form,
            dform,
            omega,
            xi,
            classification,
        }
    }

    /// An algebraic observable with a known vector field.
    pub fn with_xi(form: DiffForm, omega: DiffForm, xi: Vec<SmoothScalar>) -> Self {
        assert_eq!(xi.len(), form.dim());
        Self::build(form, omega, Some(xi), Classification::Algebraic)
    }

    pub fn unchecked(form: DiffForm, omega: DiffForm) -> Self {
        Self::build(form, omega, None, Classification::Unchecked)
    }

    /// Classifies by solving for `ξ` at the sample points.
    pub fn from_solve(form: DiffForm, omega: DiffForm, points: &[Vec<f64>]) -> Result<Self, ObservableError> {
        solve_xi(&form, &omega, points)?;
        Ok(Self::build(form, omega, None, Classification::Algebraic))
    }

    pub fn form(&self) -> &DiffForm {
        &self.form
    }

    pub fn dform(&self) -> Result<&DiffForm, ObservableError> {
        self.dform
            .as_ref()
            .ok_or(ObservableError::Exterior(ExteriorError::MissingGradient(Vec::new())))
    }

    pub fn omega(&self) -> &DiffForm {
        &self.omega
    }

    pub fn xi(&self) -> Option<&[SmoothScalar]> {
        self.xi.as_deref()
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    pub fn set_classification(&mut self, c: Classification) {
        self.classification = c;
    }

    /// `ξ_F` at a point: the analytic field when present, else a pointwise solve.
    pub fn xi_at(&self, point: &[f64]) -> Result<Vec<f64>, ObservableError> {
        match &self.xi {
            Some(xi) => Ok(xi.iter().map(|c| c.value(point)).collect()),
            None => Ok(solve_xi_at(self.dform()?, &self.omega, point)?.0),
        }
    }

    /// `|dF + ξ⌟Ω|` at a point.
    pub fn xi_residual(&self, point: &[f64]) -> Result<f64, ObservableError> {
        let xi = self.xi_at(point)?;
        let lhs = self.omega.at(point).contract(&xi)?;
        let df = self.dform()?.at(point);
        Ok(lhs.sub(&df.scale(-1.0)).max_abs())
    }
}

/// Solves `ξ⌟Ω = −dF` at one point; returns `ξ` and the residual.
pub fn solve_xi_at(dform: &DiffForm, omega: &DiffForm, point: &[f64]) -> Result<(Vec<f64>, f64), ObservableError> {
    let dim = omega.dim();
    let q = omega.degree() - 1;
    if dform.degree() != q {
        return Err(ObservableError::DegreeMismatch {
            expected: q,
            got: dform.degree(),
        });
    }
    let rows = increasing_tuples(dim, q);
    let om = omega.at(point);
    let mut a = DMatrix::<f64>::zeros(rows.len(), dim);
    for col in 0..dim {
        let mut e = vec![0.0; dim];
        e[col] = 1.0;
        let c = om.contract(&e)?;
        for (r, t) in rows.iter().enumerate() {
            a[(r, col)] = c.get(t);
        }
    }
    let df = dform.at(point);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|t| -df.get(t)));
    let svd = a.clone().svd(true, true);
    let xi = svd
        .solve(&b, 1e-12)
        .map_err(|_| ObservableError::NotAlgebraic { residual: f64::INFINITY })?;
    let residual = (&a * &xi - &b).amax();
    if residual > ALGEBRAIC_TOL {
        return Err(ObservableError::NotAlgebraic { residual });
    }
    Ok((xi.iter().copied().collect(), residual))
}

/// `ξ_F` at every point, or `NotAlgebraic` at the first inconsistent one.
pub fn solve_xi(form: &DiffForm, omega: &DiffForm, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ObservableError> {
    if form.degree() + 2 != omega.degree() {
        return Err(ObservableError::DegreeMismatch {
            expected: omega.degree() - 2,
            got: form.degree(),
        });
    }
    let dform = form.exterior_derivative()?;
    points
        .iter()
        .map(|p| solve_xi_at(&dform, omega, p).map(|(xi, _)| xi))
        .collect()
}

/// `{𝓗, F} = −d𝓗(ξ_F)` at a point.
pub fn pseudobracket(ham: &HamiltonianDensity, f: &ObservableForm, point: &[f64]) -> Result<f64, ObservableError> {
    let xi = f.xi_at(point)?;
    Ok(-ham.grad(point).iter().zip(&xi).map(|(g, x)| g * x).sum::<f64>())
}

/// `{𝓗, F}` as a (value-only) scalar; requires an analytic `ξ_F`.
pub fn pseudobracket_scalar(ham: &HamiltonianDensity, f: &ObservableForm) -> Result<SmoothScalar, ObservableError> {
    let xi = f.xi.clone().ok_or(ObservableError::MissingField)?;
    let ham = ham.clone();
    Ok(SmoothScalar::value_only(f.form.dim(), move |z| {
        -ham.grad(z).iter().zip(&xi).map(|(g, x)| g * x.value(z)).sum::<f64>()
    }))
}

/// `{F, G} = Ω(ξ_F, ξ_G, ·)` as a form; both fields must be analytic.
pub fn bracket(f: &ObservableForm, g: &ObservableForm) -> Result<DiffForm, ObservableError> {
    let xf = f.xi.as_ref().ok_or(ObservableError::MissingField)?;
    let xg = g.xi.as_ref().ok_or(ObservableError::MissingField)?;
    Ok(f.omega.interior_field(xf)?.interior_field(xg)?)
}

/// `{F, G}` at a point, using pointwise solves when fields are not analytic.
pub fn bracket_at(f: &ObservableForm, g: &ObservableForm, point: &[f64]) -> Result<PointForm, ObservableError> {
    let xf = f.xi_at(point)?;
    let xg = g.xi_at(point)?;
    Ok(f.omega.at(point).interior(&[xf, xg])?)
}

/// `∫_{Σ∩Γ} F`: the pullback of `F` to the slice, summed with weight `dx`.
pub fn slice_eval(curve: &HamiltonianCurve, slice: Slice, form: &DiffForm) -> Result<f64, ObservableError> {
    if form.degree() != 1 {
        return Err(ObservableError::DegreeMismatch {
            expected: 1,
            got: form.degree(),
        });
    }
    let samples = curve.slice_samples(slice)?;
    let mut total = 0.0;
    for s in &samples {
        total += form.evaluate_slices(&[&s.tangents[0]], &s.point)?;
    }
    Ok(total * curve.lattice.dx)
}

/// `Γ ↦ ∫_{Σ∩Γ} F` for a fixed slice.
#[derive(Debug, Clone)]
pub struct SliceFunctional {
    pub slice: Slice,
    pub form: ObservableForm,
}

impl SliceFunctional {
    pub fn eval(&self, curve: &HamiltonianCurve) -> Result<f64, ObservableError> {
        slice_eval(curve, self.slice, self.form.form())
    }
}

fn volume(tangents: &[&[f64]]) -> f64 {
    tangents[0][0] * tangents[1][1] - tangents[0][1] * tangents[1][0]
}

/// `|dF(X₀, X₁) − {𝓗, F} ω(X₀, X₁)|` at one point.
pub fn dynamical_residual_at(
    f: &ObservableForm,
    ham: &HamiltonianDensity,
    point: &[f64],
    tangents: &[&[f64]],
) -> Result<f64, ObservableError> {
    let lhs = f.dform()?.evaluate_slices(tangents, point)?;
    let pb = pseudobracket(ham, f, point)?;
    Ok((lhs - pb * volume(tangents)).abs())
}

/// Max over interior sites of `|dF|_Γ − {𝓗, F} ω|_Γ|`.
pub fn verify_dynamical_relation(
    curve: &HamiltonianCurve,
    f: &ObservableForm,
    ham: &HamiltonianDensity,
) -> Result<f64, ObservableError> {
    f.dform()?;
    Ok(curve.max_over_interior(|z, t| dynamical_residual_at(f, ham, z, t).unwrap_or(f64::INFINITY)))
}

/// Max over interior sites of `|{𝓗, F} dG|_Γ − {𝓗, G} dF|_Γ|`.
pub fn verify_pairwise_relation(
    curve: &HamiltonianCurve,
    f: &ObservableForm,
    g: &ObservableForm,
    ham: &HamiltonianDensity,
) -> Result<f64, ObservableError> {
    let (df, dg) = (f.dform()?, g.dform()?);
    Ok(curve.max_over_interior(|z, t| {
        let eval = || -> Result<f64, ObservableError> {
            let a = pseudobracket(ham, f, z)? * dg.evaluate_slices(t, z)?;
            let b = pseudobracket(ham, g, z)? * df.evaluate_slices(t, z)?;
            Ok((a - b).abs())
        };
        eval().unwrap_or(f64::INFINITY)
    }))
}

/// Residuals of the single relations for every form in `forms` and of the
/// pairwise relation for every index pair, from one sweep of the interior.
/// Each `dF|_Γ` and `{𝓗, F}` is evaluated once per site.
pub fn verify_relations(
    curve: &HamiltonianCurve,
    forms: &[&ObservableForm],
    pairs: &[(usize, usize)],
    ham: &HamiltonianDensity,
) -> Result<(Vec<f64>, Vec<f64>), ObservableError> {
    let dforms: Vec<&DiffForm> = forms.iter().map(|f| f.dform()).collect::<Result<_, _>>()?;
    if let Some(&(a, b)) = pairs.iter().find(|(a, b)| *a >= forms.len() || *b >= forms.len()) {
        return Err(ObservableError::PairIndex {
            index: a.max(b),
            len: forms.len(),
        });
    }
    let (k, np) = (forms.len(), pairs.len());
    let site = |z: &[f64], t: &[&[f64]]| -> Result<Vec<f64>, ObservableError> {
        let grad = ham.grad(z);
        let vol = volume(t);
        let mut d = Vec::with_capacity(k);
        let mut pb = Vec::with_capacity(k);
        for (f, df) in forms.iter().zip(&dforms) {
            d.push(df.evaluate_slices(t, z)?);
            pb.push(-grad.iter().zip(f.xi_at(z)?).map(|(g, x)| g * x).sum::<f64>());
        }
        let mut out: Vec<f64> = (0..k).map(|i| (d[i] - pb[i] * vol).abs()).collect();
        out.extend(pairs.iter().map(|&(a, b)| (pb[a] * d[b] - pb[b] * d[a]).abs()));
        Ok(out)
    };
    let worst = curve
        .interior_rows()
        .into_par_iter()
        .map(|n| {
            let mut m = vec![0.0_f64; k + np];
            for j in 0..curve.lattice.nx {
                let [x0, x1] = curve.tangents(n, j);
                let r = site(&curve.point(n, j), &[&x0, &x1]).unwrap_or_else(|_| vec![f64::INFINITY; k + np]);
                m.iter_mut().zip(r).for_each(|(a, b)| *a = a.max(b));
            }
            m
        })
        .reduce(|| vec![0.0; k + np], |a, b| a.iter().zip(b).map(|(x, y)| x.max(y)).collect());
    let pairs_out = worst[k..].to_vec();
    let mut singles = worst;
    singles.truncate(k);
    Ok((singles, pairs_out))
}

/// Outcome of the observability test.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservabilityReport {
    Observable {
        pairs: usize,
        max_gap: f64,
    },
    Counterexample {
        x: DecomposableMultivector,
        x_tilde: DecomposableMultivector,
        gap: f64,
    },
}

/// Pairs required before a form is certified observable.
pub const REQUIRED_PAIRS: usize = 100;
/// Largest `|dF(X) − dF(X̃)|` tolerated for an observable form.
pub const OBSERVABLE_TOL: f64 = 1e-6;

/// Gauss–Newton with minimum-norm steps towards `Y⌟Ω = target`.
fn project(table: &ContractionTable, target: &[f64], start: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = start.len();
    let dim = target.len();
    let scale = 1.0 + target.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut y = start;
    for _ in 0..60 {
        let refs: Vec<&[f64]> = y.iter().map(Vec::as_slice).collect();
        let r: Vec<f64> = table.apply(&refs).iter().zip(target).map(|(a, b)| a - b).collect();
        if r.iter().all(|v| v.abs() <= 1e-13 * scale) {
            return Some(y);
        }
        let mut jac = DMatrix::<f64>::zeros(dim, n * dim);
        for a in 0..n {
            for i in 0..dim {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                let mut refs: Vec<&[f64]> = y.iter().map(Vec::as_slice).collect();
                refs[a] = &e;
                for (k, v) in table.apply(&refs).into_iter().enumerate() {
                    jac[(k, a * dim + i)] = v;
                }
            }
        }
        let rhs = DVector::from_iterator(dim, r.iter().map(|v| -v));
        let step = jac.svd(true, true).solve(&rhs, 1e-12).ok()?;
        for a in 0..n {
            for i in 0..dim {
                y[a][i] += step[a * dim + i];
            }
        }
        if y.iter().flatten().any(|v| !v.is_finite()) {
            return None;
        }
    }
    None
}

fn plucker_distance(a: &DecomposableMultivector, b: &DecomposableMultivector) -> f64 {
    let (pa, pb) = (a.plucker(), b.plucker());
    let norm = pa.values().fold(0.0_f64, |m, v| m.max(v.abs()));
    pa.iter().map(|(k, v)| (v - pb[k]).abs()).fold(0.0, f64::max) / norm.max(1e-300)
}

/// Tests whether `dF(X)` depends on a decomposable `X` only through `X⌟Ω`.
///
/// Each trial draws `X`, perturbs it, projects the perturbation back onto
/// `{X̃ : X̃⌟Ω = X⌟Ω}` and compares `dF` on both.
pub fn check_observable<R: Rng>(
    form: &DiffForm,
    omega: &DiffForm,
    point: &[f64],
    trials: usize,
    rng: &mut R,
) -> Result<ObservabilityReport, ObservableError> {
    let n = omega.degree() - 1;
    if form.degree() + 1 != n {
        return Err(ObservableError::DegreeMismatch {
            expected: n - 1,
            got: form.degree(),
        });
    }
    let dim = omega.dim();
    let df = form.exterior_derivative()?;
    let table = ContractionTable::new(&omega.at(point));
    let mut pairs = 0;
    let mut max_gap = 0.0_f64;
    for _ in 0..trials {
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let target = table.apply(&refs);
        let start: Vec<Vec<f64>> = x
            .iter()
            .map(|v| v.iter().map(|c| c + rng.gen_range(-0.5..0.5)).collect())
            .collect();
        let Some(xt) = project(&table, &target, start) else { continue };
        let xm = DecomposableMultivector::new(point.to_vec(), x)?;
        let xtm = DecomposableMultivector::new(point.to_vec(), xt)?;
        if plucker_distance(&xm, &xtm) < 1e-3 {
            continue;
        }
        let gap = (df.evaluate(&xm.factors, point)? - df.evaluate(&xtm.factors, point)?).abs();
        pairs += 1;
        if gap > OBSERVABLE_TOL {
            return Ok(ObservabilityReport::Counterexample {
                x: xm,
                x_tilde: xtm,
                gap,
            });
        }
        max_gap = max_gap.max(gap);
    }
    if pairs >= REQUIRED_PAIRS {
        Ok(ObservabilityReport::Observable { pairs, max_gap })
    } else {
        Err(ObservableError::ProjectionFailure {
            successes: pairs,
            attempts: trials,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::{build_omega_ddw, build_theta_ddw, omega_mu, DWChart, MetricSignature, SpacetimeChart};
    use crate::seeding::{rng, Stream};

    fn coord(c: &DWChart, i: usize) -> SmoothScalar {
        SmoothScalar::coordinate(c.dim(), i)
    }

    #[test]
    fn y_omega_mu_is_algebraic() {
        let c = DWChart::new(2, 2).unwrap();
        let om = build_omega_ddw(&c);
        let f = DiffForm::scalar(c.chart(), coord(&c, c.y(1)))
            .wedge(&omega_mu(&c, 0).unwrap())
            .unwrap();
        let pts = vec![vec![0.3; c.dim()], vec![-1.2; c.dim()]];
        let xi = solve_xi(&f, &om, &pts).unwrap();
        // −dy²∧dx² must come from ξ⌟(dp¹₂∧dy²∧dx²): only the p¹₂ slot is set
        for v in &xi {
            for (a, &x) in v.iter().enumerate() {
                let expected = if a == c.p(0, 1) { -1.0 } else { 0.0 };
                assert!((x - expected).abs() < 1e-12, "component {a}: {x}");
            }
        }
    }

    #[test]
    fn y1_dy2_is_not_algebraic_but_observable() {
        let c = DWChart::new(2, 2).unwrap();
        let om = build_omega_ddw(&c);
        let f = DiffForm::monomial(c.chart(), coord(&c, c.y(0)), &[c.y(1)]);
        let pt = vec![0.2; c.dim()];
        assert!(matches!(
            solve_xi(&f, &om, std::slice::from_ref(&pt)),
            Err(ObservableError::NotAlgebraic { .. })
        ));
        let mut r = rng(1, Stream::Observables);
        match check_observable(&f, &om, &pt, 300, &mut r).unwrap() {
            ObservabilityReport::Observable { pairs, max_gap } => {
                assert!(pairs >= REQUIRED_PAIRS);
                assert!(max_gap <= OBSERVABLE_TOL);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn y_dp_has_counterexample() {
        let c = DWChart::new(2, 2).unwrap();
        let om = build_omega_ddw(&c);
        let f = DiffForm::monomial(c.chart(), coord(&c, c.y(0)), &[c.p(0, 0)]);
        let mut r = rng(2, Stream::Observables);
        match check_observable(&f, &om, &vec![0.1; c.dim()], 300, &mut r).unwrap() {
            ObservabilityReport::Counterexample { gap, .. } => assert!(gap >= 1e-2, "{gap}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stress_energy_forms_have_translation_fields() {
        let c = DWChart::new(2, 1).unwrap();
        let om = build_omega_ddw(&c);
        let theta = build_theta_ddw(&c);
        let h = HamiltonianDensity::phi_cubed(&c, 1.0, 0.5, &MetricSignature::minkowski(2));
        for mu in 0..2 {
            let f = theta.interior_basis(c.x(mu));
            let xi: Vec<SmoothScalar> = (0..c.dim())
                .map(|a| SmoothScalar::constant(c.dim(), if a == c.x(mu) { 1.0 } else { 0.0 }))
                .collect();
            let obs = ObservableForm::with_xi(f.clone(), om.clone(), xi);
            let z = vec![0.4, -0.2, 0.9, 1.3, -0.6, 0.25];
            assert!(obs.xi_residual(&z).unwrap() < 1e-14);
            assert_eq!(pseudobracket(&h, &obs, &z).unwrap(), 0.0);
            let numeric = solve_xi(&f, &om, std::slice::from_ref(&z)).unwrap();
            assert!((numeric[0][c.x(mu)] - 1.0).abs() < 1e-12);
        }
        // F₀ = e dx¹ + p¹ dφ carries e and p as coefficients
        let f0 = theta.interior_basis(0);
        let z = vec![0.0, 0.0, 0.0, 2.0, 0.0, 3.0];
        assert_eq!(f0.coefficient(&[1]).unwrap().value(&z), 2.0);
        assert_eq!(f0.coefficient(&[c.y(0)]).unwrap().value(&z), 3.0);
    }

    #[test]
    fn one_sweep_matches_separate_verifiers() {
        use crate::dynamics::{evolve_scalar, lift_to_curve, InitPreset, Lattice1p1};
        let c = DWChart::new(2, 1).unwrap();
        let om = build_omega_ddw(&c);
        let theta = build_theta_ddw(&c);
        let l = Lattice1p1::new(30, 32, 0.05, 0.1).unwrap();
        let (a, b) = InitPreset::Gaussian {
            amplitude: 0.8,
            width: 0.6,
        }
        .data(&l, 1.0);
        let curve = lift_to_curve(evolve_scalar(&a, &b, 1.0, 0.3, &l).unwrap(), 1.0, 0.3, 0.0, &l);
        let h = curve.hamiltonian();
        let forms: Vec<ObservableForm> = (0..2)
            .map(|mu| {
                let xi = (0..c.dim())
                    .map(|a| SmoothScalar::constant(c.dim(), if a == c.x(mu) { 1.0 } else { 0.0 }))
                    .collect();
                ObservableForm::with_xi(theta.interior_basis(c.x(mu)), om.clone(), xi)
            })
            .collect();
        let (singles, pairs) = verify_relations(&curve, &[&forms[0], &forms[1]], &[(0, 1)], &h).unwrap();
        for (f, r) in forms.iter().zip(&singles) {
            assert_eq!(*r, verify_dynamical_relation(&curve, f, &h).unwrap());
        }
        assert_eq!(pairs[0], verify_pairwise_relation(&curve, &forms[0], &forms[1], &h).unwrap());
        assert!(matches!(
            verify_relations(&curve, &[&forms[0]], &[(0, 1)], &h),
            Err(ObservableError::PairIndex { index: 1, len: 1 })
        ));
    }

    #[test]
    fn canonical_bracket_n1() {
        let c = DWChart::new(1, 1).unwrap();
        let om = build_omega_ddw(&c);
        let dim = c.dim();
        let unit = |i: usize, s: f64| -> Vec<SmoothScalar> {
            (0..dim)
                .map(|a| SmoothScalar::constant(dim, if a == i { s } else { 0.0 }))
                .collect()
        };
        let q = ObservableForm::with_xi(
            DiffForm::scalar(c.chart(), coord(&c, c.y(0))),
            om.clone(),
            unit(c.p(0, 0), -1.0),
        );
        let p = ObservableForm::with_xi(
            DiffForm::scalar(c.chart(), coord(&c, c.p(0, 0))),
            om.clone(),
            unit(c.y(0), 1.0),
        );
        let z = vec![0.1, 0.2, 0.3, 0.4];
        assert_eq!(q.xi_residual(&z).unwrap(), 0.0);
        assert_eq!(p.xi_residual(&z).unwrap(), 0.0);
        let b = bracket(&q, &p).unwrap();
        assert_eq!(b.coefficient(&[]).unwrap().as_constant(), Some(-1.0));
        let rev = bracket(&p, &q).unwrap();
        assert_eq!(rev.coefficient(&[]).unwrap().as_constant(), Some(1.0));
        assert!(bracket(&q, &q).unwrap().is_zero());
    }

    #[test]
    fn degree_checks() {
        let c = DWChart::new(2, 1).unwrap();
        let om = build_omega_ddw(&c);
        let wrong = DiffForm::basis(c.chart(), &[0, 1]);
        assert!(matches!(
            solve_xi(&wrong, &om, &[]),
            Err(ObservableError::DegreeMismatch { .. })
        ));
    }
}
