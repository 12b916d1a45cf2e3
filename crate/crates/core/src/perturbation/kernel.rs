//! The second-order kernel `Φ⁽²⁾(x₁, x₂) = −Σ_s Φ⁽¹⁾(s) G(s, x₁) G(s, x₂) dt dx`
//! and the slice functionals built on it.

use std::sync::Arc;

use rayon::prelude::*;

use super::green::{apply_operator, retarded_solve, LatticeGreen};
use super::PerturbationError;
use crate::dynamics::{DynamicsError, Grid, HamiltonianCurve, Lattice1p1, Slice};

/// A lattice site `(n, j)`.
pub type Site = (usize, usize);

/// Row weights for the value and the time derivative of a grid on a slice.
pub(crate) struct SliceStencil {
    pub value: Vec<(usize, f64)>,
    pub deriv: Vec<(usize, f64)>,
}

impl SliceStencil {
    /// Matches the conventions of the curve: centered (one-sided at the
    /// ends) on node slices, average and two-point difference on midpoints.
    pub fn new(slice: Slice, lattice: &Lattice1p1) -> Result<Self, DynamicsError> {
        let (nt, dt) = (lattice.nt, lattice.dt);
        match slice {
            Slice::Node(n) if n < nt => {
                let c = 1.0 / (2.0 * dt);
                let deriv = if n == 0 {
                    vec![(0, -3.0 * c), (1, 4.0 * c), (2, -c)]
                } else if n == nt - 1 {
                    vec![(n, 3.0 * c), (n - 1, -4.0 * c), (n - 2, c)]
                } else {
                    vec![(n - 1, -c), (n + 1, c)]
                };
                Ok(Self {
                    value: vec![(n, 1.0)],
                    deriv,
                })
            }
            Slice::Midpoint(n) if n + 1 < nt => Ok(Self {
                value: vec![(n, 0.5), (n + 1, 0.5)],
                deriv: vec![(n, -1.0 / dt), (n + 1, 1.0 / dt)],
            }),
            Slice::Node(n) | Slice::Midpoint(n) => Err(DynamicsError::SliceOutOfRange { index: n, nt }),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.value.iter().chain(&self.deriv).map(|&(n, _)| n)
    }
}

/// The slice weights `(p⁰_j, φ_j)` of the first-order pairing on `Σ`.
pub(crate) fn slice_weights(curve: &HamiltonianCurve, slice: Slice) -> Result<(Vec<f64>, Vec<f64>), DynamicsError> {
    let samples = curve.slice_samples(slice)?;
    let eta00 = curve.metric().upper(0);
    let a: Vec<f64> = samples.iter().map(|s| s.point[4]).collect();
    let b: Vec<f64> = samples.iter().map(|s| -eta00 * s.point[2]).collect();
    Ok((a, b))
}

/// `∫_Σ (p⁰ g − η^{00} φ ∂_t g) dx`: the slice integral of `F⁽¹⁾` built from
/// a lattice function `g`, read with the slice's own difference stencil.
pub fn slice_functional(curve: &HamiltonianCurve, slice: Slice, g: &Grid) -> Result<f64, PerturbationError> {
    let l = &curve.lattice;
    if (g.nt, g.nx) != (l.nt, l.nx) {
        return Err(PerturbationError::ShapeMismatch {
            got: (g.nt, g.nx),
            expected: (l.nt, l.nx),
        });
    }
    let st = SliceStencil::new(slice, l)?;
    let (a, b) = slice_weights(curve, slice)?;
    let total: f64 = (0..l.nx)
        .map(|j| {
            let v: f64 = st.value.iter().map(|&(n, c)| c * g.get(n, j)).sum();
            let d: f64 = st.deriv.iter().map(|&(n, c)| c * g.get(n, j)).sum();
            a[j] * v + b[j] * d
        })
        .sum();
    Ok(total * l.dx)
}

/// `Φ⁽²⁾` with sources restricted to rows `n ≥ n0`. Never materialized:
/// values and rows are computed from the Green kernel on demand.
#[derive(Debug, Clone)]
pub struct Kernel2 {
    pub green: Arc<LatticeGreen>,
    pub phi1: Grid,
    pub n0: usize,
}

pub fn build_phi2(phi1: Grid, green: Arc<LatticeGreen>, n0: usize) -> Result<Kernel2, PerturbationError> {
    let l = &green.lattice;
    if (phi1.nt, phi1.nx) != (l.nt, l.nx) {
        return Err(PerturbationError::ShapeMismatch {
            got: (phi1.nt, phi1.nx),
            expected: (l.nt, l.nx),
        });
    }
    if n0 == 0 || n0 >= l.nt {
        return Err(PerturbationError::InvalidConfig(format!(
            "source start row {n0} must lie in 1..{}",
            l.nt
        )));
    }
    Ok(Kernel2 { green, phi1, n0 })
}

impl Kernel2 {
    fn lattice(&self) -> &Lattice1p1 {
        &self.green.lattice
    }

    fn cell(&self) -> f64 {
        self.lattice().dt * self.lattice().dx
    }

    /// The `t₀` slice: halfway between rows `n0 − 1` and `n0`.
    pub fn sigma(&self) -> Slice {
        Slice::Midpoint(self.n0 - 1)
    }

    pub fn value(&self, a: Site, b: Site) -> f64 {
        // canonical argument order makes the sum bit-for-bit symmetric
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let nx = self.lattice().nx;
        let mut total = 0.0;
        for ns in self.n0..a.0.min(b.0) {
            for js in 0..nx {
                let s = (ns, js);
                total += self.phi1.get(ns, js) * self.green.g(s, a) * self.green.g(s, b);
            }
        }
        -total * self.cell()
    }

    /// `Φ⁽²⁾(a, ·)`, the retarded solution driven by `−Φ⁽¹⁾(s) G(s, a)`.
    pub fn row(&self, a: Site) -> Grid {
        let l = self.lattice();
        let f = Grid::from_fn(l.nt, l.nx, |n, j| {
            if n < self.n0 {
                0.0
            } else {
                -self.phi1.get(n, j) * self.green.g((n, j), a)
            }
        });
        retarded_solve(&self.green, &f).expect("shapes agree")
    }

    /// `b_S(s) = ∫_S (p⁰ G(s, ·) − η^{00} φ ∂_t G(s, ·)) dx` for every source.
    fn source_response(&self, curve: &HamiltonianCurve, slice: Slice) -> Result<Grid, PerturbationError> {
        let l = *self.lattice();
        let st = SliceStencil::new(slice, &l)?;
        let (a, b) = slice_weights(curve, slice)?;
        let last = st.rows().max().unwrap_or(0);
        let mut out = Grid::zeros(l.nt, l.nx);
        let k = self.green.kernel();
        out.data.par_chunks_mut(l.nx).enumerate().for_each(|(ns, row)| {
            if ns < self.n0 || ns >= last {
                return;
            }
            for (js, o) in row.iter_mut().enumerate() {
                let mut total = 0.0;
                let lag = |n: usize, j: usize| if n > ns { k.at(n - ns, j as isize - js as isize) } else { 0.0 };
                for j in 0..l.nx {
                    let v: f64 = st.value.iter().map(|&(n, c)| c * lag(n, j)).sum();
                    let d: f64 = st.deriv.iter().map(|&(n, c)| c * lag(n, j)).sum();
                    total += a[j] * v + b[j] * d;
                }
                *o = total * l.dx;
            }
        });
        Ok(out)
    }

    /// `(∫_S ⊗ ∫_{S'}) F⁽²⁾ = −Σ_s Φ⁽¹⁾(s) b_S(s) b_{S'}(s) dt dx`.
    pub fn tensor_boundary(&self, curve: &HamiltonianCurve, s1: Slice, s2: Slice) -> Result<f64, PerturbationError> {
        let b1 = self.source_response(curve, s1)?;
        let b2 = if s1 == s2 {
            b1.clone()
        } else {
            self.source_response(curve, s2)?
        };
        let total: f64 = self
            .phi1
            .data
            .iter()
            .zip(b1.data.iter().zip(&b2.data))
            .map(|(p, (x, y))| p * x * y)
            .sum();
        Ok(-total * self.cell())
    }

    /// The same double slice sum, evaluated from explicit rows of `Φ⁽²⁾`.
    pub fn tensor_boundary_direct(&self, curve: &HamiltonianCurve, s1: Slice, s2: Slice) -> Result<f64, PerturbationError> {
        let l = *self.lattice();
        let st1 = SliceStencil::new(s1, &l)?;
        let (a1, b1) = slice_weights(curve, s1)?;
        let rows: Vec<usize> = {
            let mut r: Vec<usize> = st1.rows().collect();
            r.sort_unstable();
            r.dedup();
            r
        };
        let parts: Vec<f64> = (0..l.nx)
            .into_par_iter()
            .map(|j1| -> Result<f64, PerturbationError> {
                let mut acc = Grid::zeros(l.nt, l.nx);
                for &n in &rows {
                    let row = self.row((n, j1));
                    let w: f64 = st1.value.iter().filter(|e| e.0 == n).map(|e| e.1 * a1[j1]).sum::<f64>()
                        + st1.deriv.iter().filter(|e| e.0 == n).map(|e| e.1 * b1[j1]).sum::<f64>();
                    for (o, v) in acc.data.iter_mut().zip(&row.data) {
                        *o += w * v;
                    }
                }
                slice_functional(curve, s2, &acc)
            })
            .collect::<Result<_, _>>()?;
        Ok(parts.iter().sum::<f64>() * l.dx)
    }

    /// Sites whose five-point stencil stays on the lattice.
    pub fn interior_sites(&self) -> Vec<Site> {
        let l = self.lattice();
        (1..l.nt - 1).flat_map(|n| (0..l.nx).map(move |j| (n, j))).collect()
    }

    /// Max over `a` in `sites` and interior `b` of
    /// `|(Δ₁ + m²)(Δ₂ + m²)Φ⁽²⁾(a, b) + Φ⁽¹⁾(a) δ_{ab}/(dt dx)|`.
    pub fn bi_operator_residual(&self, sites: &[Site]) -> f64 {
        let l = *self.lattice();
        let m = self.green.m;
        let (dt2, dx2) = (l.dt * l.dt, l.dx * l.dx);
        let delta = 1.0 / self.cell();
        sites
            .par_iter()
            .map(|&(n, j)| {
                assert!(n >= 1 && n + 1 < l.nt, "site ({n}, {j}) is not interior");
                let ji = j as isize;
                let wrap = |d: isize| (ji + d).rem_euclid(l.nx as isize) as usize;
                let c = self.row((n, j));
                let (up, down) = (self.row((n + 1, j)), self.row((n - 1, j)));
                let (right, left) = (self.row((n, wrap(1))), self.row((n, wrap(-1))));
                let mut w = Grid::zeros(l.nt, l.nx);
                for i in 0..w.data.len() {
                    w.data[i] = (up.data[i] - 2.0 * c.data[i] + down.data[i]) / dt2
                        - (right.data[i] - 2.0 * c.data[i] + left.data[i]) / dx2
                        + m * m * c.data[i];
                }
                let applied = apply_operator(&w, m, &l);
                let source = if n >= self.n0 { self.phi1.get(n, j) } else { 0.0 };
                let mut worst = 0.0_f64;
                for nb in 1..l.nt - 1 {
                    for jb in 0..l.nx {
                        let target = if (nb, jb) == (n, j) { -source * delta } else { 0.0 };
                        worst = worst.max((applied.get(nb, jb) - target).abs());
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `(max |Φ⁽²⁾|, max |∂_tΦ⁽²⁾|)` with one argument on the `t₀` slice and
    /// the other anywhere. Symmetry covers the other argument.
    pub fn sigma_vanishing(&self) -> (f64, f64) {
        let l = *self.lattice();
        let (lo, hi) = (self.n0 - 1, self.n0);
        (0..l.nx)
            .into_par_iter()
            .map(|j| {
                let (a, b) = (self.row((lo, j)), self.row((hi, j)));
                a.data.iter().zip(&b.data).fold((0.0_f64, 0.0_f64), |(v, d), (x, y)| {
                    (v.max((0.5 * (x + y)).abs()), d.max(((y - x) / l.dt).abs()))
                })
            })
            .reduce(|| (0.0, 0.0), |p, q| (p.0.max(q.0), p.1.max(q.1)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_scalar, lift_to_curve, InitPreset};
    use crate::perturbation::green::retarded_green;

    fn setup(nt: usize, nx: usize) -> (Lattice1p1, Arc<LatticeGreen>, Grid) {
        let l = Lattice1p1::new(nt, nx, 0.05, 0.1).unwrap();
        let g = Arc::new(retarded_green(1.0, &l).unwrap());
        let (a, b) = InitPreset::Gaussian {
            amplitude: 1.0,
            width: 0.5,
        }
        .data(&l, 1.0);
        let phi1 = evolve_scalar(&a, &b, 1.0, 0.0, &l).unwrap();
        (l, g, phi1)
    }

    #[test]
    fn zero_source_gives_zero_kernel() {
        let (l, g, _) = setup(20, 16);
        let k = build_phi2(Grid::zeros(l.nt, l.nx), g, 2).unwrap();
        assert_eq!(k.value((10, 3), (12, 7)), 0.0);
        assert_eq!(k.row((15, 2)).max_abs(), 0.0);
    }

    #[test]
    fn row_matches_value_and_is_symmetric() {
        let (_, g, phi1) = setup(24, 16);
        let k = build_phi2(phi1, g, 3).unwrap();
        let a = (15, 4);
        let row = k.row(a);
        for b in [(20, 9), (10, 0), (23, 15), (2, 3)] {
            assert!((row.get(b.0, b.1) - k.value(a, b)).abs() < 1e-12);
            assert_eq!(k.value(a, b), k.value(b, a));
        }
    }

    #[test]
    fn bi_operator_identity() {
        let (_, g, phi1) = setup(24, 16);
        let k = build_phi2(phi1, g, 3).unwrap();
        let sites = k.interior_sites();
        let r = k.bi_operator_residual(&sites);
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn vanishes_on_sigma() {
        let (_, g, phi1) = setup(24, 16);
        let k = build_phi2(phi1, g, 4).unwrap();
        let (v, d) = k.sigma_vanishing();
        assert_eq!((v, d), (0.0, 0.0));
    }

    #[test]
    fn factorized_boundary_matches_direct_sum() {
        let (l, g, phi1) = setup(24, 16);
        let (a, b) = InitPreset::Gaussian {
            amplitude: 0.8,
            width: 0.6,
        }
        .data(&l, 1.0);
        let curve = lift_to_curve(evolve_scalar(&a, &b, 1.0, 0.05, &l).unwrap(), 1.0, 0.05, 0.0, &l);
        let k = build_phi2(phi1, g, 3).unwrap();
        for (s1, s2) in [
            (Slice::Midpoint(18), Slice::Midpoint(18)),
            (Slice::Midpoint(18), Slice::Node(12)),
            (Slice::Midpoint(2), Slice::Midpoint(18)),
        ] {
            let fact = k.tensor_boundary(&curve, s1, s2).unwrap();
            let direct = k.tensor_boundary_direct(&curve, s1, s2).unwrap();
            assert!(
                (fact - direct).abs() < 1e-11 * (1.0 + fact.abs()),
                "{s1:?} {s2:?}: {fact} vs {direct}"
            );
        }
        assert_eq!(k.tensor_boundary(&curve, k.sigma(), Slice::Midpoint(18)).unwrap(), 0.0);
    }
}
