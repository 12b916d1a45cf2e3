//! Exterior calculus on a single coordinate chart.
//!
//! Coefficients are [`SmoothScalar`]s: a value closure paired with an exact
//! gradient (and optionally an exact Hessian). Forms are stored sparsely in
//! basis-tuple normal form: each key is a strictly increasing tuple of
//! coordinate indices and the sign of any permutation is absorbed into the
//! coefficient.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExteriorError {
    #[error("chart mismatch: [{left}] vs [{right}]")]
    ChartMismatch { left: String, right: String },
    #[error("degree overflow: {left} + {right} exceeds chart dimension {dim}")]
    DegreeOverflow { left: usize, right: usize, dim: usize },
    #[error("degree underflow: cannot contract a {order}-vector into a {degree}-form")]
    DegreeUnderflow { order: usize, degree: usize },
    #[error("expected {expected} argument vectors, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("vector of length {got} on a chart of dimension {dim}")]
    DimensionMismatch { got: usize, dim: usize },
    #[error("coefficient on {0:?} carries no gradient")]
    MissingGradient(Vec<usize>),
    #[error("duplicate coordinate label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown coordinate label `{0}`")]
    UnknownLabel(String),
    #[error("chart must have at least one coordinate")]
    EmptyChart,
}

/// An ordered list of unique coordinate labels.
#[derive(Clone, PartialEq, Eq)]
pub struct Chart {
    labels: Arc<[String]>,
}

impl Chart {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self, ExteriorError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(ExteriorError::EmptyChart);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(ExteriorError::DuplicateLabel(l.clone()));
            }
        }
        Ok(Self { labels: labels.into() })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index(&self, label: &str) -> Result<usize, ExteriorError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| ExteriorError::UnknownLabel(label.to_string()))
    }

    fn check_same(&self, other: &Chart) -> Result<(), ExteriorError> {
        if self == other {
            Ok(())
        } else {
            Err(ExteriorError::ChartMismatch {
                left: self.labels.join(","),
                right: other.labels.join(","),
            })
        }
    }
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chart({})", self.labels.join(", "))
    }
}

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A scalar function on a chart with exact first (and optionally second)
/// derivatives. The Hessian, when present, is stored row-major.
#[derive(Clone)]
pub struct SmoothScalar {
    dim: usize,
    constant: Option<f64>,
    value: ValueFn,
    gradient: Option<VecFn>,
    hessian: Option<VecFn>,
}

impl fmt::Debug for SmoothScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.constant {
            Some(c) => write!(f, "SmoothScalar(const {c})"),
            None => write!(
                f,
                "SmoothScalar(dim {}, gradient: {}, hessian: {})",
                self.dim,
                self.gradient.is_some(),
                self.hessian.is_some()
            ),
        }
    }
}

impl SmoothScalar {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            constant: None,
            value: Arc::new(value),
            gradient: Some(Arc::new(gradient)),
            hessian: None,
        }
    }

    /// Attach an exact Hessian (row-major `dim × dim`).
    pub fn with_hessian(mut self, hessian: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    /// A scalar known only by value. Such scalars can be evaluated and
    /// combined but not differentiated.
    pub fn value_only(dim: usize, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            constant: None,
            value: Arc::new(value),
            gradient: None,
            hessian: None,
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self {
            dim,
            constant: Some(c),
            value: Arc::new(move |_| c),
            gradient: Some(Arc::new(move |_| vec![0.0; dim])),
            hessian: Some(Arc::new(move |_| vec![0.0; dim * dim])),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(dim, 0.0)
    }

    /// The coordinate function `z ↦ z[index]`.
    pub fn coordinate(dim: usize, index: usize) -> Self {
        assert!(index < dim, "coordinate index {index} out of range for dim {dim}");
        Self {
            dim,
            constant: None,
            value: Arc::new(move |z| z[index]),
            gradient: Some(Arc::new(move |_| {
                let mut g = vec![0.0; dim];
                g[index] = 1.0;
                g
            })),
            hessian: Some(Arc::new(move |_| vec![0.0; dim * dim])),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.constant == Some(0.0)
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        (self.value)(z)
    }

    pub fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(z))
    }

    pub fn hessian(&self, z: &[f64]) -> Option<Vec<f64>> {
        self.hessian.as_ref().map(|h| h(z))
    }

    /// `∂f/∂z^j` as a scalar. Its gradient is the `j`-th Hessian row when a
    /// Hessian is available; otherwise the result is value-only.
    pub fn partial(&self, j: usize) -> Option<SmoothScalar> {
        if self.constant.is_some() {
            return Some(Self::zero(self.dim));
        }
        let grad = self.gradient.clone()?;
        let dim = self.dim;
        let value: ValueFn = Arc::new(move |z| grad(z)[j]);
        let gradient = self.hessian.clone().map(|h| -> VecFn {
            Arc::new(move |z| {
                let h = h(z);
                h[j * dim..(j + 1) * dim].to_vec()
            })
        });
        Some(Self {
            dim,
            constant: None,
            value,
            gradient,
            hessian: None,
        })
    }

    pub fn scale(&self, s: f64) -> SmoothScalar {
        if let Some(c) = self.constant {
            return Self::constant(self.dim, c * s);
        }
        if s == 0.0 {
            return Self::zero(self.dim);
        }
        let f = self.clone();
        let (g, h) = (self.gradient.clone(), self.hessian.clone());
        Self {
            dim: self.dim,
            constant: None,
            value: Arc::new(move |z| s * f.value(z)),
            gradient: g.map(|g| -> VecFn { Arc::new(move |z| g(z).into_iter().map(|v| s * v).collect()) }),
            hessian: h.map(|h| -> VecFn { Arc::new(move |z| h(z).into_iter().map(|v| s * v).collect()) }),
        }
    }

    fn combine_sum(&self, other: &SmoothScalar, sign: f64) -> SmoothScalar {
        assert_eq!(self.dim, other.dim, "scalar dimension mismatch");
        match (self.constant, other.constant) {
            (Some(a), Some(b)) => return Self::constant(self.dim, a + sign * b),
            (_, Some(0.0)) => return self.clone(),
            (Some(0.0), _) => return other.scale(sign),
            _ => {}
        }
        let (fa, fb) = (self.value.clone(), other.value.clone());
        let gradient = match (&self.gradient, &other.gradient) {
            (Some(ga), Some(gb)) => {
                let (ga, gb) = (ga.clone(), gb.clone());
                Some(Arc::new(move |z: &[f64]| {
                    let mut a = ga(z);
                    for (x, y) in a.iter_mut().zip(gb(z)) {
                        *x += sign * y;
                    }
                    a
                }) as VecFn)
            }
            _ => None,
        };
        let hessian = match (&self.hessian, &other.hessian) {
            (Some(ha), Some(hb)) if gradient.is_some() => {
                let (ha, hb) = (ha.clone(), hb.clone());
                Some(Arc::new(move |z: &[f64]| {
                    let mut a = ha(z);
                    for (x, y) in a.iter_mut().zip(hb(z)) {
                        *x += sign * y;
                    }
                    a
                }) as VecFn)
            }
            _ => None,
        };
        Self {
            dim: self.dim,
            constant: None,
            value: Arc::new(move |z| fa(z) + sign * fb(z)),
            gradient,
            hessian,
        }
    }

    pub fn product(&self, other: &SmoothScalar) -> SmoothScalar {
        assert_eq!(self.dim, other.dim, "scalar dimension mismatch");
        match (self.constant, other.constant) {
            (Some(a), Some(b)) => return Self::constant(self.dim, a * b),
            (Some(a), None) => return other.scale(a),
            (None, Some(b)) => return self.scale(b),
            _ => {}
        }
        let dim = self.dim;
        let (fa, fb) = (self.value.clone(), other.value.clone());
        let gradient = match (&self.gradient, &other.gradient) {
            (Some(ga), Some(gb)) => {
                let (ga, gb, fa, fb) = (ga.clone(), gb.clone(), fa.clone(), fb.clone());
                Some(Arc::new(move |z: &[f64]| {
                    let (a, b) = (fa(z), fb(z));
                    ga(z).into_iter().zip(gb(z)).map(|(x, y)| x * b + a * y).collect()
                }) as VecFn)
            }
            _ => None,
        };
        let hessian = match (&self.gradient, &other.gradient, &self.hessian, &other.hessian) {
            (Some(ga), Some(gb), Some(ha), Some(hb)) => {
                let (ga, gb, ha, hb, fa, fb) = (ga.clone(), gb.clone(), ha.clone(), hb.clone(), fa.clone(), fb.clone());
                Some(Arc::new(move |z: &[f64]| {
                    let (a, b) = (fa(z), fb(z));
                    let (da, db) = (ga(z), gb(z));
                    let (hha, hhb) = (ha(z), hb(z));
                    let mut h = vec![0.0; dim * dim];
                    for i in 0..dim {
                        for j in 0..dim {
                            let k = i * dim + j;
                            h[k] = a * hhb[k] + b * hha[k] + da[i] * db[j] + db[i] * da[j];
                        }
                    }
                    h
                }) as VecFn)
            }
            _ => None,
        };
        Self {
            dim,
            constant: None,
            value: Arc::new(move |z| fa(z) * fb(z)),
            gradient,
            hessian,
        }
    }
}

impl Add for SmoothScalar {
    type Output = SmoothScalar;
    fn add(self, rhs: SmoothScalar) -> SmoothScalar {
        self.combine_sum(&rhs, 1.0)
    }
}

impl Sub for SmoothScalar {
    type Output = SmoothScalar;
    fn sub(self, rhs: SmoothScalar) -> SmoothScalar {
        self.combine_sum(&rhs, -1.0)
    }
}

impl Mul for SmoothScalar {
    type Output = SmoothScalar;
    fn mul(self, rhs: SmoothScalar) -> SmoothScalar {
        self.product(&rhs)
    }
}

impl Mul<f64> for SmoothScalar {
    type Output = SmoothScalar;
    fn mul(self, rhs: f64) -> SmoothScalar {
        self.scale(rhs)
    }
}

impl Neg for SmoothScalar {
    type Output = SmoothScalar;
    fn neg(self) -> SmoothScalar {
        self.scale(-1.0)
    }
}

/// Sorts `indices` into strictly increasing order. Returns the sorted tuple
/// and the sign of the sorting permutation, or `None` when an index repeats.
pub fn normalize_tuple(indices: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = indices.to_vec();
    let mut sign = 1.0;
    // insertion sort, counting transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((v, sign))
    }
}

/// A differential form of fixed degree with smooth coefficients.
#[derive(Clone)]
pub struct DiffForm {
    chart: Chart,
    degree: usize,
    terms: BTreeMap<Vec<usize>, SmoothScalar>,
}

impl fmt::Debug for DiffForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiffForm(degree {}; ", self.degree)?;
        let mut first = true;
        for (tuple, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let basis: Vec<String> = tuple.iter().map(|&i| format!("d{}", self.chart.label(i))).collect();
            match c.as_constant() {
                Some(v) => write!(f, "{v}·{}", basis.join("∧"))?,
                None => write!(f, "f·{}", basis.join("∧"))?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

impl DiffForm {
    pub fn zero(chart: &Chart, degree: usize) -> Self {
        Self {
            chart: chart.clone(),
            degree,
            terms: BTreeMap::new(),
        }
    }

    /// The 0-form `f`.
    pub fn scalar(chart: &Chart, f: SmoothScalar) -> Self {
        let mut out = Self::zero(chart, 0);
        out.accumulate(Vec::new(), f);
        out
    }

    /// `coeff · dz^{i₁} ∧ ⋯ ∧ dz^{i_q}` for indices in any order.
    pub fn monomial(chart: &Chart, coeff: SmoothScalar, indices: &[usize]) -> Self {
        assert!(indices.iter().all(|&i| i < chart.dim()), "index out of range");
        let mut out = Self::zero(chart, indices.len());
        if let Some((tuple, sign)) = normalize_tuple(indices) {
            out.accumulate(tuple, coeff.scale(sign));
        }
        out
    }

    /// `dz^{i₁} ∧ ⋯ ∧ dz^{i_q}` with unit coefficient.
    pub fn basis(chart: &Chart, indices: &[usize]) -> Self {
        Self::monomial(chart, SmoothScalar::constant(chart.dim(), 1.0), indices)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &SmoothScalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, tuple: &[usize]) -> Option<&SmoothScalar> {
        self.terms.get(tuple)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn accumulate(&mut self, tuple: Vec<usize>, coeff: SmoothScalar) {
        if coeff.is_zero() {
            return;
        }
        let merged = match self.terms.remove(&tuple) {
            Some(existing) => existing + coeff,
            None => coeff,
        };
        if !merged.is_zero() {
            self.terms.insert(tuple, merged);
        }
    }

    pub fn add(&self, other: &DiffForm) -> Result<DiffForm, ExteriorError> {
        self.chart.check_same(&other.chart)?;
        assert_eq!(self.degree, other.degree, "cannot add forms of different degree");
        let mut out = self.clone();
        for (t, c) in &other.terms {
            out.accumulate(t.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DiffForm) -> Result<DiffForm, ExteriorError> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> DiffForm {
        let mut out = Self::zero(&self.chart, self.degree);
        for (t, c) in &self.terms {
            out.accumulate(t.clone(), c.scale(s));
        }
        out
    }

    /// Multiplies every coefficient by the scalar `f`.
    pub fn times(&self, f: &SmoothScalar) -> DiffForm {
        let mut out = Self::zero(&self.chart, self.degree);
        for (t, c) in &self.terms {
            out.accumulate(t.clone(), c.product(f));
        }
        out
    }

    pub fn wedge(&self, other: &DiffForm) -> Result<DiffForm, ExteriorError> {
        self.chart.check_same(&other.chart)?;
        let degree = self.degree + other.degree;
        if degree > self.dim() {
            return Err(ExteriorError::DegreeOverflow {
                left: self.degree,
                right: other.degree,
                dim: self.dim(),
            });
        }
        let mut out = Self::zero(&self.chart, degree);
        for (ta, ca) in &self.terms {
            for (tb, cb) in &other.terms {
                let joined: Vec<usize> = ta.iter().chain(tb.iter()).copied().collect();
                if let Some((tuple, sign)) = normalize_tuple(&joined) {
                    out.accumulate(tuple, ca.product(cb).scale(sign));
                }
            }
        }
        Ok(out)
    }

    pub fn exterior_derivative(&self) -> Result<DiffForm, ExteriorError> {
        let mut out = Self::zero(&self.chart, self.degree + 1);
        if self.degree >= self.dim() {
            return Ok(out);
        }
        for (tuple, c) in &self.terms {
            if c.as_constant().is_some() {
                continue;
            }
            if !c.has_gradient() {
                return Err(ExteriorError::MissingGradient(tuple.clone()));
            }
            for j in 0..self.dim() {
                if tuple.contains(&j) {
                    continue;
                }
                let mut joined = Vec::with_capacity(tuple.len() + 1);
                joined.push(j);
                joined.extend_from_slice(tuple);
                let (sorted, sign) = normalize_tuple(&joined).expect("j not in tuple");
                let dj = c.partial(j).expect("gradient checked above");
                out.accumulate(sorted, dj.scale(sign));
            }
        }
        Ok(out)
    }

    /// `∂/∂z^a ⌟ α` as a form.
    pub fn interior_basis(&self, a: usize) -> DiffForm {
        assert!(a < self.dim(), "basis index out of range");
        if self.degree == 0 {
            return Self::zero(&self.chart, 0);
        }
        let mut out = Self::zero(&self.chart, self.degree - 1);
        for (tuple, c) in &self.terms {
            if let Some(pos) = tuple.iter().position(|&i| i == a) {
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                let mut rest = tuple.clone();
                rest.remove(pos);
                out.accumulate(rest, c.scale(sign));
            }
        }
        out
    }

    /// `ξ ⌟ α` for a vector field given by its components. Components that are
    /// the constant zero are skipped.
    pub fn interior_field(&self, field: &[SmoothScalar]) -> Result<DiffForm, ExteriorError> {
        if field.len() != self.dim() {
            return Err(ExteriorError::DimensionMismatch {
                got: field.len(),
                dim: self.dim(),
            });
        }
        if self.degree == 0 {
            return Err(ExteriorError::DegreeUnderflow { order: 1, degree: 0 });
        }
        let mut out = Self::zero(&self.chart, self.degree - 1);
        for (a, comp) in field.iter().enumerate() {
            if comp.is_zero() {
                continue;
            }
            for (tuple, c) in self.interior_basis(a).terms {
                out.accumulate(tuple, c.product(comp));
            }
        }
        Ok(out)
    }

    /// Numeric coefficients at a point.
    pub fn at(&self, point: &[f64]) -> PointForm {
        let mut pf = PointForm::zero(self.dim(), self.degree);
        for (t, c) in &self.terms {
            let v = c.value(point);
            if v != 0.0 {
                pf.coeffs.insert(t.clone(), v);
            }
        }
        pf
    }

    /// When every coefficient is constant, the point-independent numeric form.
    pub fn constant_point_form(&self) -> Option<PointForm> {
        let mut pf = PointForm::zero(self.dim(), self.degree);
        for (t, c) in &self.terms {
            pf.coeffs.insert(t.clone(), c.as_constant()?);
        }
        Some(pf)
    }

    /// `α(v₁, …, v_q)` at `point`, as a sum of coefficient × minor.
    pub fn evaluate(&self, vectors: &[Vec<f64>], point: &[f64]) -> Result<f64, ExteriorError> {
        let refs: Vec<&[f64]> = vectors.iter().map(Vec::as_slice).collect();
        self.evaluate_slices(&refs, point)
    }

    pub fn evaluate_slices(&self, vectors: &[&[f64]], point: &[f64]) -> Result<f64, ExteriorError> {
        if vectors.len() != self.degree {
            return Err(ExteriorError::ArityMismatch {
                expected: self.degree,
                got: vectors.len(),
            });
        }
        if let Some(bad) = vectors.iter().find(|v| v.len() != self.dim()) {
            return Err(ExteriorError::DimensionMismatch {
                got: bad.len(),
                dim: self.dim(),
            });
        }
        let mut total = 0.0;
        for (tuple, c) in &self.terms {
            let minor = minor_det(vectors, tuple);
            if minor != 0.0 {
                total += c.value(point) * minor;
            }
        }
        Ok(total)
    }

    pub fn interior_product(&self, x: &DecomposableMultivector) -> Result<PointForm, ExteriorError> {
        if x.order() > self.degree {
            return Err(ExteriorError::DegreeUnderflow {
                order: x.order(),
                degree: self.degree,
            });
        }
        self.at(&x.point).interior(&x.factors)
    }
}

/// A form with numeric coefficients at a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointForm {
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, f64>,
}

impl PointForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Self {
            dim,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds a 1-form from its component vector.
    pub fn covector(components: &[f64]) -> Self {
        let mut pf = Self::zero(components.len(), 1);
        for (i, &c) in components.iter().enumerate() {
            if c != 0.0 {
                pf.coeffs.insert(vec![i], c);
            }
        }
        pf
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, tuple: &[usize]) -> f64 {
        self.coeffs.get(tuple).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.coeffs
    }

    /// Inserts a coefficient on an arbitrary-order tuple, absorbing the sign.
    pub fn add_term(&mut self, indices: &[usize], value: f64) {
        assert_eq!(indices.len(), self.degree);
        if let Some((t, s)) = normalize_tuple(indices) {
            *self.coeffs.entry(t).or_insert(0.0) += s * value;
        }
    }

    /// Component vector of a 1-form.
    pub fn to_covector(&self) -> Vec<f64> {
        assert_eq!(self.degree, 1, "to_covector on a {}-form", self.degree);
        let mut v = vec![0.0; self.dim];
        for (t, c) in &self.coeffs {
            v[t[0]] = *c;
        }
        v
    }

    pub fn scalar_value(&self) -> f64 {
        assert_eq!(self.degree, 0);
        self.get(&[])
    }

    /// `v ⌟ α`, contracting into the first slot.
    pub fn contract(&self, v: &[f64]) -> Result<PointForm, ExteriorError> {
        if v.len() != self.dim {
            return Err(ExteriorError::DimensionMismatch {
                got: v.len(),
                dim: self.dim,
            });
        }
        if self.degree == 0 {
            return Err(ExteriorError::DegreeUnderflow { order: 1, degree: 0 });
        }
        let mut out = PointForm::zero(self.dim, self.degree - 1);
        for (tuple, &c) in &self.coeffs {
            for (pos, &i) in tuple.iter().enumerate() {
                if v[i] == 0.0 {
                    continue;
                }
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                let mut rest = tuple.clone();
                rest.remove(pos);
                *out.coeffs.entry(rest).or_insert(0.0) += sign * c * v[i];
            }
        }
        Ok(out)
    }

    /// `α(v₁, …, v_r, ·)`.
    pub fn interior(&self, vectors: &[Vec<f64>]) -> Result<PointForm, ExteriorError> {
        if vectors.len() > self.degree {
            return Err(ExteriorError::DegreeUnderflow {
                order: vectors.len(),
                degree: self.degree,
            });
        }
        let mut acc = self.clone();
        for v in vectors {
            acc = acc.contract(v)?;
        }
        Ok(acc)
    }

    pub fn evaluate(&self, vectors: &[Vec<f64>]) -> Result<f64, ExteriorError> {
        if vectors.len() != self.degree {
            return Err(ExteriorError::ArityMismatch {
                expected: self.degree,
                got: vectors.len(),
            });
        }
        Ok(self.interior(vectors)?.scalar_value())
    }

    pub fn sub(&self, other: &PointForm) -> PointForm {
        assert_eq!((self.dim, self.degree), (other.dim, other.degree));
        let mut out = self.clone();
        for (t, c) in &other.coeffs {
            *out.coeffs.entry(t.clone()).or_insert(0.0) -= c;
        }
        out
    }

    pub fn scale(&self, s: f64) -> PointForm {
        let mut out = self.clone();
        out.coeffs.values_mut().for_each(|c| *c *= s);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// `det[v_a[tuple_b]]` for small `q` by cofactor expansion.
fn minor_det(vectors: &[&[f64]], tuple: &[usize]) -> f64 {
    match tuple.len() {
        0 => 1.0,
        1 => vectors[0][tuple[0]],
        2 => vectors[0][tuple[0]] * vectors[1][tuple[1]] - vectors[0][tuple[1]] * vectors[1][tuple[0]],
        q => {
            let mut total = 0.0;
            for (b, &col) in tuple.iter().enumerate() {
                let head = vectors[0][col];
                if head == 0.0 {
                    continue;
                }
                let rest: Vec<usize> = tuple.iter().enumerate().filter(|&(i, _)| i != b).map(|(_, &t)| t).collect();
                let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
                total += sign * head * minor_det(&vectors[1..q], &rest);
            }
            total
        }
    }
}

/// Dense multilinear table of a numeric `(r+1)`-form, used to contract `r`
/// vectors quickly: `(X₁ ⌟ ⋯ ⌟ α)_k = Σ c · X₁[i₁] ⋯ X_r[i_r]` over entries
/// `(i₁, …, i_r, k, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionTable {
    dim: usize,
    entries: Vec<(Vec<usize>, usize, f64)>,
}

impl ContractionTable {
    pub fn new(form: &PointForm) -> Self {
        assert!(form.degree >= 1, "a contraction table needs degree ≥ 1");
        let mut entries = Vec::new();
        for (tuple, &c) in &form.coeffs {
            for perm in permutations(tuple.len()) {
                let idx: Vec<usize> = perm.iter().map(|&s| tuple[s]).collect();
                let sign = normalize_tuple(&idx).expect("distinct").1;
                let (k, rest) = idx.split_last().expect("degree ≥ 1");
                entries.push((rest.to_vec(), *k, sign * c));
            }
        }
        Self { dim: form.dim, entries }
    }

    /// Component vector of `α(X₁, …, X_r, ·)`.
    pub fn apply(&self, vectors: &[&[f64]]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (idx, k, c) in &self.entries {
            let mut prod = *c;
            for (v, &i) in vectors.iter().zip(idx) {
                prod *= v[i];
            }
            out[*k] += prod;
        }
        out
    }
}

fn permutations(q: usize) -> Vec<Vec<usize>> {
    if q == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(q - 1) {
        for pos in 0..=p.len() {
            let mut v = p.clone();
            v.insert(pos, q - 1);
            out.push(v);
        }
    }
    out
}

/// `X = X₁ ∧ ⋯ ∧ X_q` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposableMultivector {
    pub point: Vec<f64>,
    pub factors: Vec<Vec<f64>>,
}

impl DecomposableMultivector {
    pub fn new(point: Vec<f64>, factors: Vec<Vec<f64>>) -> Result<Self, ExteriorError> {
        let dim = point.len();
        if let Some(bad) = factors.iter().find(|f| f.len() != dim) {
            return Err(ExteriorError::DimensionMismatch { got: bad.len(), dim });
        }
        Ok(Self { point, factors })
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    /// Plücker coordinates: all `q × q` minors, keyed by row tuple.
    pub fn plucker(&self) -> BTreeMap<Vec<usize>, f64> {
        let dim = self.point.len();
        let q = self.order();
        let mut out = BTreeMap::new();
        for tuple in increasing_tuples(dim, q) {
            let pf = {
                let mut p = PointForm::zero(dim, q);
                p.coeffs.insert(tuple.clone(), 1.0);
                p
            };
            out.insert(tuple, pf.evaluate(&self.factors).expect("arity matches"));
        }
        out
    }
}

/// All strictly increasing `q`-tuples drawn from `0..dim`.
pub fn increasing_tuples(dim: usize, q: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, dim: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(i + 1, dim, q, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, dim, q, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart3() -> Chart {
        Chart::new(["x1", "x2", "e"]).unwrap()
    }

    #[test]
    fn chart_rejects_duplicates() {
        assert_eq!(
            Chart::new(["a", "b", "a"]).unwrap_err(),
            ExteriorError::DuplicateLabel("a".into())
        );
        assert_eq!(chart3().index("e").unwrap(), 2);
        assert!(chart3().index("q").is_err());
    }

    #[test]
    fn wedge_of_basis_one_forms() {
        let c = chart3();
        let w = DiffForm::basis(&c, &[0]).wedge(&DiffForm::basis(&c, &[1])).unwrap();
        assert_eq!(w.num_terms(), 1);
        assert_eq!(w.coefficient(&[0, 1]).unwrap().as_constant(), Some(1.0));
    }

    #[test]
    fn wedge_sign_of_transposition() {
        // (2·dy¹) ∧ (3·dx²) = −6 dx² ∧ dy¹ once sorted with x² before y¹
        let c = Chart::new(["x1", "x2", "y1"]).unwrap();
        let a = DiffForm::monomial(&c, SmoothScalar::constant(3, 2.0), &[2]);
        let b = DiffForm::monomial(&c, SmoothScalar::constant(3, 3.0), &[1]);
        let w = a.wedge(&b).unwrap();
        assert_eq!(w.coefficient(&[1, 2]).unwrap().as_constant(), Some(-6.0));
    }

    #[test]
    fn wedge_errors() {
        let c = chart3();
        let other = Chart::new(["a", "b", "c"]).unwrap();
        assert!(matches!(
            DiffForm::basis(&c, &[0]).wedge(&DiffForm::basis(&other, &[0])),
            Err(ExteriorError::ChartMismatch { .. })
        ));
        assert!(matches!(
            DiffForm::basis(&c, &[0, 1]).wedge(&DiffForm::basis(&c, &[1, 2])),
            Err(ExteriorError::DegreeOverflow { .. })
        ));
    }

    #[test]
    fn derivative_of_e_times_volume() {
        // d(e dx¹∧dx²) = de∧dx¹∧dx², sorted to +dx¹∧dx²∧de
        let c = chart3();
        let e = SmoothScalar::coordinate(3, 2);
        let form = DiffForm::monomial(&c, e, &[0, 1]);
        let d = form.exterior_derivative().unwrap();
        assert_eq!(d.num_terms(), 1);
        let coeff = d.coefficient(&[0, 1, 2]).unwrap();
        assert_eq!(coeff.value(&[0.3, -1.0, 4.0]), 1.0);
    }

    #[test]
    fn dd_of_triple_product_vanishes() {
        let c = chart3();
        let x = |i| SmoothScalar::coordinate(3, i);
        let f = x(0) * x(1) * x(2);
        let ddf = DiffForm::scalar(&c, f)
            .exterior_derivative()
            .unwrap()
            .exterior_derivative()
            .unwrap();
        let p = [0.7, -1.3, 2.1];
        assert!(ddf.at(&p).max_abs() < 1e-14);
    }

    #[test]
    fn missing_gradient_is_reported() {
        let c = chart3();
        let f = SmoothScalar::value_only(3, |z| z[0]);
        let form = DiffForm::scalar(&c, f);
        assert_eq!(
            form.exterior_derivative().unwrap_err(),
            ExteriorError::MissingGradient(vec![])
        );
    }

    #[test]
    fn evaluate_determinant_example() {
        let c = chart3();
        let w = DiffForm::basis(&c, &[0, 1]);
        let v1 = vec![1.0, 2.0, 0.0];
        let v2 = vec![0.0, 3.0, 0.0];
        assert_eq!(w.evaluate(&[v1.clone(), v2.clone()], &[0.0; 3]).unwrap(), 3.0);
        assert_eq!(w.evaluate(&[v2, v1], &[0.0; 3]).unwrap(), -3.0);
        let e1 = vec![1.0, 0.0, 0.0];
        let e2 = vec![0.0, 1.0, 0.0];
        assert_eq!(w.evaluate(&[e1.clone(), e2], &[0.0; 3]).unwrap(), 1.0);
        assert!(matches!(
            w.evaluate(&[e1], &[0.0; 3]),
            Err(ExteriorError::ArityMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn interior_product_with_zero_factor_vanishes() {
        let c = chart3();
        let w = DiffForm::basis(&c, &[0, 1, 2]);
        let x = DecomposableMultivector::new(vec![0.0; 3], vec![vec![0.0; 3], vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(w.interior_product(&x).unwrap().max_abs(), 0.0);
        let too_many = DecomposableMultivector::new(vec![0.0; 3], vec![vec![1.0, 0.0, 0.0]; 2]).unwrap();
        assert!(DiffForm::basis(&c, &[0]).interior_product(&too_many).is_err());
    }

    #[test]
    fn interior_basis_matches_pointwise_contraction() {
        let c = chart3();
        let w = DiffForm::basis(&c, &[0, 1, 2]).scale(2.0);
        let sym = w.interior_basis(1).at(&[0.0; 3]);
        let num = w.at(&[0.0; 3]).contract(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(sym, num);
        assert_eq!(sym.get(&[0, 2]), -2.0);
    }

    #[test]
    fn contraction_table_matches_interior() {
        let c = chart3();
        let w = DiffForm::basis(&c, &[0, 1, 2])
            .scale(1.5)
            .add(&DiffForm::basis(&c, &[0, 2]).wedge(&DiffForm::basis(&c, &[1])).unwrap())
            .unwrap();
        let pf = w.at(&[0.0; 3]);
        let (a, b) = (vec![0.2, -1.0, 0.7], vec![1.1, 0.4, -0.3]);
        let slow = pf.interior(&[a.clone(), b.clone()]).unwrap().to_covector();
        let fast = ContractionTable::new(&pf).apply(&[&a, &b]);
        for k in 0..3 {
            assert!((slow[k] - fast[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn normalize_tuple_signs() {
        assert_eq!(normalize_tuple(&[2, 0, 1]), Some((vec![0, 1, 2], 1.0)));
        assert_eq!(normalize_tuple(&[1, 0]), Some((vec![0, 1], -1.0)));
        assert_eq!(normalize_tuple(&[1, 1]), None);
        assert_eq!(increasing_tuples(4, 2).len(), 6);
    }
}
