//! Simple random walk on the discrete torus `T_r^d`.
//!
//! `C^T_z` is computed three ways: the exact dual-lattice sum, a linear solve
//! of `(delta - z Omega D) * C^T = delta`, and the sum of `C_z` over periodic
//! images. A killed-walk Monte Carlo gives a fourth, statistical, route.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{even_transform, tabulate_axis_sum, FieldTable, Geometry, HalfAxis, LatticePoint, OrthantTable};
use crate::mc::{run_sharded, McEstimate, Scratch, TorusWalker};
use crate::srw::{green_fourier_box, green_series_with, mass_m0, quadrature_grid_for, GreenParams, StepLadder};

/// Largest system handed to the dense LU solver.
pub const DENSE_LIMIT: usize = 2048;
/// Largest system accepted by [`torus_green_solve`].
pub const SOLVE_LIMIT: usize = 20_000;

fn check_subcritical(dim: usize, z: f64) -> Result<f64> {
    let a = z * (2 * dim) as f64;
    if !(z >= 0.0) || a >= 1.0 {
        return Err(Error::domain(format!("torus Green function needs 0 <= z Omega < 1, got {a}")));
    }
    Ok(a)
}

/// `C^T_z` on the torus orthant `[0, r/2]^d` by the exact sum over the `r^d` dual frequencies.
pub fn torus_green_fourier_table(dim: usize, period: usize, z: f64) -> Result<OrthantTable> {
    let g = Geometry::torus(dim, period)?;
    let a = check_subcritical(dim, z)?;
    let axis = HalfAxis::torus(period);
    let cosines: Vec<f64> = axis.nodes.iter().map(|k| k.cos() / dim as f64).collect();
    let half = tabulate_axis_sum(dim, &cosines, |dk| 1.0 / (1.0 - a * dk));
    let sites: Vec<f64> = (0..=period / 2).map(|c| c as f64).collect();
    let values = even_transform(&half, dim, &axis, &sites, (period as f64).powi(-(dim as i32)));
    Ok(OrthantTable::from_raw(g, period / 2, values))
}

pub fn torus_green_fourier(dim: usize, period: usize, z: f64, x: &LatticePoint) -> Result<f64> {
    x.check_dim(dim)?;
    Ok(torus_green_fourier_table(dim, period, z)?.get(x))
}

/// Solve `C(x) - z sum_e C(x - e) = delta(x - source)` on the torus.
///
/// Systems up to [`DENSE_LIMIT`] unknowns use LU, larger ones conjugate
/// gradients (the operator is symmetric positive definite for `z Omega < 1`).
pub fn torus_green_solve(dim: usize, period: usize, z: f64, source: &LatticePoint) -> Result<FieldTable> {
    let g = Geometry::torus(dim, period)?;
    check_subcritical(dim, z)?;
    source.check_dim(dim)?;
    let w = TorusWalker::new(dim, period);
    let n = w.sites();
    if n > SOLVE_LIMIT {
        return Err(Error::Budget {
            what: format!("torus solve d={dim} r={period}"),
            estimate: n as f64,
            limit: SOLVE_LIMIT as f64,
        });
    }
    let template = FieldTable::zeros(g, 0);
    let src = template.index(source).expect("torus index is total");
    let mut b = vec![0.0; n];
    b[src] = 1.0;
    let x = if n <= DENSE_LIMIT {
        let mut m = DMatrix::<f64>::identity(n, n);
        for i in 0..n {
            for dir in 0..2 * dim {
                m[(i, w.step(i, dir))] -= z;
            }
        }
        let lu = m.lu();
        let sol = lu
            .solve(&DVector::from_vec(b))
            .ok_or_else(|| Error::Numerical("singular torus system".into()))?;
        sol.as_slice().to_vec()
    } else {
        conjugate_gradient(&w, z, &b)?
    };
    Ok(FieldTable::from_raw(g, 0, x))
}

fn conjugate_gradient(w: &TorusWalker, z: f64, b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let apply = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let mut s = 0.0;
            for dir in 0..2 * w.dim {
                s += v[w.step(i, dir)];
            }
            out[i] = v[i] - z * s;
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let target = 1e-30 * dot(b, b);
    for _ in 0..10 * n {
        if rr <= target {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::Numerical("conjugate gradients did not converge".into()))
}

/// How `C_z` on `Z^d` is evaluated for the image sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ZdRoute {
    Series { nmax: usize },
    Fourier { grid: usize },
}

/// Image sum with its error budget.
#[derive(Clone, Debug, Serialize)]
pub struct Unfolded {
    pub value: f64,
    /// Bound on the images with `|u|_inf > shells`.
    pub truncation_bound: f64,
    /// Accumulated error bound of the `Z^d` evaluations.
    pub route_error: f64,
    pub images: usize,
}

impl Unfolded {
    pub fn error_bound(&self) -> f64 {
        self.truncation_bound + self.route_error
    }
}

/// Bound on `sum_{|u|_inf > s} C_z(x + r u)` from `C_z(y) <= chi0 exp(-m0 |y|_inf)`.
pub(crate) fn image_tail(dim: usize, period: usize, z: f64, xsup: i64, shells: usize) -> Result<f64> {
    let a = z * (2 * dim) as f64;
    if z == 0.0 {
        return Ok(0.0);
    }
    let m0 = mass_m0(dim, z)?;
    let chi0 = 1.0 / (1.0 - a);
    let mut acc = 0.0;
    for n in shells + 1.. {
        let nf = n as f64;
        let count = (2.0 * nf + 1.0).powi(dim as i32) - (2.0 * nf - 1.0).powi(dim as i32);
        let dist = (period as f64 * nf - xsup as f64).max(0.0);
        let term = chi0 * count * (-m0 * dist).exp();
        acc += term;
        if term <= 1e-18 * acc || n > shells + 100_000 {
            break;
        }
    }
    Ok(acc)
}

fn images(dim: usize, shells: usize) -> Vec<Vec<i64>> {
    let s = shells as i64;
    let mut out: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-s..=s).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

/// `sum_{|u|_inf <= shells} C_z(x + r u)` for one torus point.
pub fn torus_green_unfold(
    dim: usize,
    period: usize,
    z: f64,
    x: &LatticePoint,
    shells: usize,
    route: ZdRoute,
) -> Result<Unfolded> {
    let g = Geometry::torus(dim, period)?;
    check_subcritical(dim, z)?;
    x.check_dim(dim)?;
    let x = g.project(x);
    let reach = x.norm_sup() as usize + period * shells;
    let us = images(dim, shells);
    let (value, route_error) = match route {
        ZdRoute::Fourier { grid } => {
            let q = green_fourier_box(dim, z, reach, grid)?;
            let v: f64 = us
                .iter()
                .map(|u| q.table.get(&(&x + &LatticePoint::new(u.clone()).scaled(period as i64))))
                .sum();
            (v, q.error_bound * us.len() as f64)
        }
        ZdRoute::Series { nmax } => {
            let ladder = StepLadder::new(dim, nmax);
            let p = GreenParams { dim, mu: z, radius: reach, nmax, grid: 2 };
            let mut v = 0.0;
            let mut e = 0.0;
            for u in &us {
                let y = &x + &LatticePoint::new(u.clone()).scaled(period as i64);
                let b = green_series_with(&ladder, &p, &y)?;
                v += b.value;
                e += b.error_bound;
            }
            (v, e)
        }
    };
    Ok(Unfolded {
        value,
        truncation_bound: image_tail(dim, period, z, x.norm_sup(), shells)?,
        route_error,
        images: us.len(),
    })
}

/// Image sums for every point of the torus orthant from one quadrature table.
pub fn torus_green_unfold_table(
    dim: usize,
    period: usize,
    z: f64,
    shells: usize,
    grid: usize,
) -> Result<(OrthantTable, f64)> {
    let g = Geometry::torus(dim, period)?;
    check_subcritical(dim, z)?;
    let half = period / 2;
    let q = green_fourier_box(dim, z, half + period * shells, grid)?;
    let us = images(dim, shells);
    let t = OrthantTable::from_fn(g, half, |x| {
        us.iter()
            .map(|u| q.table.get(&(x + &LatticePoint::new(u.clone()).scaled(period as i64))))
            .sum()
    });
    let bound = image_tail(dim, period, z, half as i64, shells)? + q.error_bound * us.len() as f64;
    Ok((t, bound))
}

/// Plateau statistics of `Delta(x) = C^T_z(x) - C_z(x)` over the torus.
#[derive(Clone, Debug, Serialize)]
pub struct PlateauReport {
    pub dim: usize,
    pub period: usize,
    pub z: f64,
    /// `z0 - z` with `z0 = 1 / Omega`.
    pub rho: f64,
    pub chi0: f64,
    /// Extremes of `Delta(x) r^d / chi0`; these are the empirical `c1'`, `c2'`.
    pub min_scaled: f64,
    pub max_scaled: f64,
    /// `min_scaled * log chi0`, the constant of the weakened `d = 4` lower bound.
    pub min_scaled_log: f64,
    /// Smallest `Delta(x)`; nonnegative up to `quadrature_error`.
    pub min_delta: f64,
    pub quadrature_error: f64,
    /// `(C_z, Delta)` at the far corner `(r/2 - 1, ..., r/2 - 1)`.
    pub corner: (f64, f64),
    /// The lower-bound hypotheses hold (`d >= 3`, `z0 - z <= c3' r^{-2}`).
    pub asserted: bool,
    /// `0 < min_scaled <= max_scaled < inf`; meaningful when `asserted`.
    pub pass: bool,
}

/// Compare the exact torus Green function with the `Z^d` one on the whole torus.
pub fn plateau_check_srw(dim: usize, period: usize, z: f64, c3: f64) -> Result<PlateauReport> {
    let a = check_subcritical(dim, z)?;
    if z <= 0.0 {
        return Err(Error::domain("plateau check needs z > 0"));
    }
    let vol = (period as f64).powi(dim as i32);
    let chi0 = 1.0 / (1.0 - a);
    let torus = torus_green_fourier_table(dim, period, z)?;
    let half = period / 2;
    let tol = 1e-7 * chi0 / vol;
    let grid = quadrature_grid_for(dim, z, half, tol)?;
    let q = green_fourier_box(dim, z, half, grid)?;
    let mut min_scaled = f64::INFINITY;
    let mut max_scaled: f64 = 0.0;
    let mut min_delta = f64::INFINITY;
    for (x, ct) in torus.iter() {
        let delta = ct - q.table.get(&x);
        min_delta = min_delta.min(delta);
        let s = delta * vol / chi0;
        min_scaled = min_scaled.min(s);
        max_scaled = max_scaled.max(s);
    }
    let corner = LatticePoint::new(vec![half as i64 - 1; dim]);
    let rho = 1.0 / (2 * dim) as f64 - z;
    let asserted = dim >= 3 && rho <= c3 / (period * period) as f64;
    Ok(PlateauReport {
        dim,
        period,
        z,
        rho,
        chi0,
        min_scaled,
        max_scaled,
        min_scaled_log: min_scaled * chi0.ln(),
        min_delta,
        quadrature_error: q.error_bound,
        corner: (q.table.get(&corner), torus.get(&corner) - q.table.get(&corner)),
        asserted,
        pass: min_scaled > 0.0 && max_scaled.is_finite() && min_scaled <= max_scaled,
    })
}

/// `max_r max_scaled / min_r min_scaled` over a set of reports.
pub fn plateau_spread(reports: &[PlateauReport]) -> f64 {
    let lo = reports.iter().map(|r| r.min_scaled).fold(f64::INFINITY, f64::min);
    let hi = reports.iter().map(|r| r.max_scaled).fold(0.0, f64::max);
    hi / lo
}

/// Visit counts of a walk killed at a geometric time.
#[derive(Clone, Debug, Serialize)]
pub struct KilledWalkMc {
    pub points: Vec<LatticePoint>,
    pub sites: Vec<McEstimate>,
    /// Estimate of `1 + E N = chi0`.
    pub total: McEstimate,
}

impl KilledWalkMc {
    pub fn get(&self, x: &LatticePoint) -> Option<&McEstimate> {
        self.points.iter().position(|p| p == x).map(|i| &self.sites[i])
    }
}

/// `C^T_z(x) = E[#{n <= N : S_n = x}]` with `P(N = n) = (z Omega)^n (1 - z Omega)`.
///
/// The length is drawn up front by inversion, then the walk takes exactly `N`
/// uniform steps.
pub fn killed_walk_mc(
    dim: usize,
    period: usize,
    z: f64,
    samples: u64,
    seed: u64,
    shards: usize,
) -> Result<KilledWalkMc> {
    Geometry::torus(dim, period)?;
    let a = check_subcritical(dim, z)?;
    let w = TorusWalker::new(dim, period);
    let n = w.sites();
    let la = a.ln();
    let sums = run_sharded(samples, shards, seed, n + 1, || (), |_, rng: &mut ChaCha8Rng, _, s: &mut Scratch| {
        let len = if a == 0.0 {
            0
        } else {
            // P(N >= n) = a^n.
            let u: f64 = 1.0 - rng.random::<f64>();
            (u.ln() / la).floor() as u64
        };
        let mut site = 0;
        s.add(0, 1.0);
        for _ in 0..len {
            site = w.step(site, rng.random_range(0..2 * dim));
            s.add(site, 1.0);
        }
        s.add(n, (len + 1) as f64);
    })?;
    let est = sums.estimates(seed, shards);
    Ok(KilledWalkMc {
        points: (0..n).map(|i| w.point(i)).collect(),
        sites: est[..n].to_vec(),
        total: est[n].clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c.to_vec())
    }

    #[test]
    fn circulant_oracle() {
        let t = torus_green_fourier_table(1, 3, 0.25).unwrap();
        assert!((t.get(&p(&[0])) - 1.2).abs() < 1e-14);
        assert!((t.get(&p(&[1])) - 0.4).abs() < 1e-14);
        assert!((t.get(&p(&[2])) - 0.4).abs() < 1e-14);
        assert!((t.sum() - 2.0).abs() < 1e-14);
        let s = torus_green_solve(1, 3, 0.25, &p(&[0])).unwrap();
        for (c, want) in [(0, 1.2), (1, 0.4), (-1, 0.4)] {
            assert!((s.get(&p(&[c])) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_fugacity() {
        let t = torus_green_fourier_table(2, 5, 0.0).unwrap();
        assert!((t.get(&p(&[0, 0])) - 1.0).abs() < 1e-15);
        assert!(t.get(&p(&[1, 2])).abs() < 1e-15);
        let s = torus_green_solve(2, 4, 0.0, &p(&[0, 0])).unwrap();
        assert_eq!(s.get(&p(&[0, 0])), 1.0);
        assert_eq!(s.get(&p(&[1, 0])), 0.0);
        let mc = killed_walk_mc(2, 4, 0.0, 50, 3, 2).unwrap();
        assert_eq!(mc.get(&p(&[0, 0])).unwrap().mean, 1.0);
        assert_eq!(mc.get(&p(&[1, 0])).unwrap().mean, 0.0);
    }

    #[test]
    fn susceptibility_is_exact() {
        for (d, r, a) in [(2, 6, 0.8), (3, 5, 0.95), (3, 8, 0.5)] {
            let z = a / (2 * d) as f64;
            let t = torus_green_fourier_table(d, r, z).unwrap();
            assert!((t.sum() - 1.0 / (1.0 - a)).abs() < 1e-12 / (1.0 - a));
        }
    }

    #[test]
    fn solve_matches_fourier_and_is_translation_invariant() {
        let z = 0.8 / 4.0;
        let t = torus_green_fourier_table(2, 6, z).unwrap();
        let s = torus_green_solve(2, 6, z, &p(&[0, 0])).unwrap();
        let shifted = torus_green_solve(2, 6, z, &p(&[2, -1])).unwrap();
        for (x, v) in s.iter() {
            assert!((v - t.get(&x)).abs() < 1e-12);
            let y = &x + &p(&[2, -1]);
            assert!((shifted.get(&y) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_gradients_match_lu() {
        let w = TorusWalker::new(2, 5);
        let z = 0.22;
        let mut b = vec![0.0; 25];
        b[0] = 1.0;
        let cg = conjugate_gradient(&w, z, &b).unwrap();
        let lu = torus_green_solve(2, 5, z, &p(&[0, 0])).unwrap();
        for (a, b) in cg.iter().zip(lu.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn unfolding_converges_in_one_dimension() {
        let z = 0.25;
        let single = torus_green_unfold(1, 3, z, &p(&[1]), 0, ZdRoute::Series { nmax: 200 }).unwrap();
        let zd = green_series_with(
            &StepLadder::new(1, 200),
            &GreenParams { dim: 1, mu: z, radius: 5, nmax: 200, grid: 2 },
            &p(&[1]),
        )
        .unwrap();
        assert!((single.value - zd.value).abs() < 1e-15);
        let mut last = 0.0;
        for s in [1, 3, 6, 10] {
            let u = torus_green_unfold(1, 3, z, &p(&[1]), s, ZdRoute::Series { nmax: 400 }).unwrap();
            assert!(u.value >= last);
            assert!((u.value - 0.4).abs() <= u.error_bound() + 1e-14);
            last = u.value;
        }
        assert!((last - 0.4).abs() < 1e-10);
    }

    #[test]
    fn plateau_is_positive_in_three_dimensions() {
        let r = 8;
        let z = 1.0 / 6.0 - 1.0 / (r * r) as f64;
        let rep = plateau_check_srw(3, r, z, 1.0).unwrap();
        assert!(rep.asserted && rep.pass);
        assert!(rep.min_delta > 0.0);
        assert!(rep.corner.0 < rep.corner.1);
    }

    #[test]
    fn killed_walk_counts() {
        let mc = killed_walk_mc(1, 3, 0.25, 200_000, 5, 3).unwrap();
        assert!(mc.get(&p(&[0])).unwrap().z_score(1.2) < 4.0);
        assert!(mc.get(&p(&[1])).unwrap().z_score(0.4) < 4.0);
        assert!(mc.total.z_score(2.0) < 4.0);
    }
}
