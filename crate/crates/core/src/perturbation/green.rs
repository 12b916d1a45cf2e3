//! Retarded Green function of the lattice Klein–Gordon operator.

use rayon::prelude::*;

use super::PerturbationError;
use crate::dynamics::{laplacian_row, Grid, Lattice1p1};

/// `G(s, x)` for the leapfrog operator `Δ_h + m²`, normalized so that
/// `(Δ_h + m²) G(s, ·) = δ_s / (dt dx)`.
///
/// The operator has constant coefficients on a periodic lattice, so one
/// kernel `K(Δn, Δj)` serves every source: `G(s, x) = K(n_x − n_s, j_x − j_s)`.
#[derive(Debug, Clone)]
pub struct LatticeGreen {
    pub m: f64,
    pub lattice: Lattice1p1,
    kernel: Grid,
}

/// Builds the kernel: zero on the source row, `dt/dx` at the source one row
/// later, then homogeneous leapfrog.
pub fn retarded_green(m: f64, lattice: &Lattice1p1) -> Result<LatticeGreen, PerturbationError> {
    lattice.validate()?;
    if m.is_nan() || m < 0.0 {
        return Err(PerturbationError::InvalidConfig(format!(
            "mass must be non-negative, got {m}"
        )));
    }
    let mut f = Grid::zeros(lattice.nt, lattice.nx);
    f.set(0, 0, 1.0 / (lattice.dt * lattice.dx));
    let kernel = retarded_solve_with(&f, m, lattice);
    Ok(LatticeGreen {
        m,
        lattice: *lattice,
        kernel,
    })
}

fn retarded_solve_with(f: &Grid, m: f64, lattice: &Lattice1p1) -> Grid {
    let (nt, nx, dt) = (lattice.nt, lattice.nx, lattice.dt);
    let mut u = Grid::zeros(nt, nx);
    let mut lap = vec![0.0; nx];
    for n in 0..nt - 1 {
        let (done, rest) = u.data.split_at_mut((n + 1) * nx);
        let cur = &done[n * nx..];
        laplacian_row(cur, lattice.dx, &mut lap);
        let next = &mut rest[..nx];
        let src = f.row(n);
        for j in 0..nx {
            let prev = if n == 0 { 0.0 } else { done[(n - 1) * nx + j] };
            next[j] = 2.0 * cur[j] - prev + dt * dt * (lap[j] - m * m * cur[j] + src[j]);
        }
    }
    u
}

/// `u = Σ_s f(s) G(s, ·) dt dx`, the retarded solution of `(Δ_h + m²)u = f`
/// with `u = 0` before the first source row.
pub fn retarded_solve(green: &LatticeGreen, f: &Grid) -> Result<Grid, PerturbationError> {
    let l = &green.lattice;
    if (f.nt, f.nx) != (l.nt, l.nx) {
        return Err(PerturbationError::ShapeMismatch {
            got: (f.nt, f.nx),
            expected: (l.nt, l.nx),
        });
    }
    Ok(retarded_solve_with(f, green.m, l))
}

/// `(Δ_h + m²)u` on rows `1..Nt−1`, with the row before 0 taken as zero for row 0.
pub fn apply_operator(u: &Grid, m: f64, lattice: &Lattice1p1) -> Grid {
    let (nt, nx, dt, dx) = (u.nt, u.nx, lattice.dt, lattice.dx);
    let mut out = Grid::zeros(nt, nx);
    out.data.par_chunks_mut(nx).enumerate().take(nt - 1).for_each(|(n, row)| {
        for (j, o) in row.iter_mut().enumerate() {
            let prev = if n == 0 { 0.0 } else { u.get(n - 1, j) };
            let ji = j as isize;
            let utt = (u.get(n + 1, j) - 2.0 * u.get(n, j) + prev) / (dt * dt);
            let uxx = (u.at(n, ji + 1) - 2.0 * u.get(n, j) + u.at(n, ji - 1)) / (dx * dx);
            *o = utt - uxx + m * m * u.get(n, j);
        }
    });
    out
}

impl LatticeGreen {
    /// `K(Δn, Δj)`, rows indexed by the time lag.
    pub fn kernel(&self) -> &Grid {
        &self.kernel
    }

    /// `G(s, x)` for sites `(n, j)`; zero unless `x` is strictly later.
    pub fn g(&self, s: (usize, usize), x: (usize, usize)) -> f64 {
        if x.0 <= s.0 {
            return 0.0;
        }
        self.kernel.at(x.0 - s.0, x.1 as isize - s.1 as isize)
    }

    /// `G(s, ·)` as a grid.
    pub fn source_grid(&self, s: (usize, usize)) -> Grid {
        let l = &self.lattice;
        Grid::from_fn(l.nt, l.nx, |n, j| self.g(s, (n, j)))
    }

    /// `max |(Δ_h + m²)G(s, ·) − δ_s/(dt dx)|` over rows from the source on.
    pub fn operator_residual(&self, s: (usize, usize)) -> f64 {
        let l = &self.lattice;
        let u = self.source_grid(s);
        let applied = apply_operator(&u, self.m, l);
        let delta = 1.0 / (l.dt * l.dx);
        let mut worst = 0.0_f64;
        for n in s.0.max(1)..l.nt - 1 {
            for j in 0..l.nx {
                let target = if (n, j) == s { delta } else { 0.0 };
                worst = worst.max((applied.get(n, j) - target).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice() -> Lattice1p1 {
        Lattice1p1::new(40, 32, 0.05, 0.1).unwrap()
    }

    #[test]
    fn operator_identity_and_causality() {
        let l = lattice();
        let g = retarded_green(1.0, &l).unwrap();
        for s in [(1, 0), (5, 17), (20, 31)] {
            assert!(g.operator_residual(s) < 1e-10, "{}", g.operator_residual(s));
            for n in 0..=s.0 {
                for j in 0..l.nx {
                    assert_eq!(g.g(s, (n, j)), 0.0);
                }
            }
        }
    }

    #[test]
    fn solve_matches_green_sum() {
        let l = lattice();
        let g = retarded_green(0.7, &l).unwrap();
        let f = Grid::from_fn(l.nt, l.nx, |n, j| ((n * 7 + j * 3) % 11) as f64 / 11.0 - 0.5);
        let u = retarded_solve(&g, &f).unwrap();
        for x in [(3, 4), (17, 0), (39, 31)] {
            let mut direct = 0.0;
            for n in 0..l.nt {
                for j in 0..l.nx {
                    direct += f.get(n, j) * g.g((n, j), x) * l.dt * l.dx;
                }
            }
            assert!((direct - u.get(x.0, x.1)).abs() < 1e-12, "{direct} vs {}", u.get(x.0, x.1));
        }
    }

    /// Distances at `t = 1` between the massless kernel and `½·1{|x| < t}`:
    /// plain L¹, and weak (against a Gaussian weight).
    fn massless_errors(dx: f64) -> (f64, f64) {
        let nx = (6.4 / dx).round() as usize;
        let nt = (1.0 / (0.5 * dx)).round() as usize + 1;
        let l = Lattice1p1::new(nt, nx, 0.5 * dx, dx).unwrap();
        let g = retarded_green(0.0, &l).unwrap();
        let (n, t) = (nt - 1, l.time(nt - 1));
        let (mut l1, mut weak) = (0.0, 0.0);
        for j in 0..nx {
            let x = if j <= nx / 2 {
                j as f64 * dx
            } else {
                (j as f64 - nx as f64) * dx
            };
            let exact = if (x.abs() - t).abs() < 1e-9 {
                0.25
            } else if x.abs() < t {
                0.5
            } else {
                0.0
            };
            let diff = g.kernel().get(n, j) - exact;
            l1 += diff.abs() * dx;
            weak += diff * (-x * x).exp() * dx;
        }
        (l1, weak.abs())
    }

    #[test]
    fn massless_green_approaches_half_cone() {
        let errs: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125].into_iter().map(massless_errors).collect();
        for w in errs.windows(2) {
            // the front ripples keep the L¹ rate near dx^½
            assert!(w[1].0 < 0.85 * w[0].0, "{errs:?}");
            let weak_order = (w[0].1 / w[1].1).log2();
            assert!((weak_order - 2.0).abs() < 0.1, "{errs:?}");
        }
    }

    #[test]
    fn rejects_cfl_violation() {
        let l = Lattice1p1 {
            nt: 10,
            nx: 16,
            dt: 0.2,
            dx: 0.1,
            t0: 0.0,
        };
        assert!(retarded_green(1.0, &l).is_err());
    }
}
