//! Simple-sampling estimator of the torus WSAW two-point function.
//!
//! A walk of geometric length `N`, `P(N = n) = (z Omega)^n (1 - z Omega)`,
//! records at each time `t` the torus weight `K^T` of its prefix `omega(0..t)`
//! at the site `omega(t)`. Since `P(N >= t) = (z Omega)^t` and each prefix has
//! probability `Omega^{-t}`, the per-site mean is `G^T_z(x)` itself.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{run_sharded, McEstimate, Scratch, TorusWalker};
use crate::error::{Error, Result};
use crate::lattice::{Geometry, LatticePoint};

/// Walk length law of the estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Estimator {
    /// Geometric length; needs `z Omega < 1`.
    Geometric,
    /// Every walk has `nmax` steps; time `t` is weighted by `(z Omega)^t`.
    /// Terms beyond `nmax` are dropped.
    FixedLength { nmax: usize },
}

/// Per-site and per-shell estimates of `G^T_z` on one torus.
#[derive(Clone, Debug, Serialize)]
pub struct TwoPointMc {
    pub dim: usize,
    pub period: usize,
    pub beta: f64,
    pub z: f64,
    pub estimator: Estimator,
    pub points: Vec<LatticePoint>,
    pub sites: Vec<McEstimate>,
    /// Mean of `G^T` over the sites with `|x|_inf = s`, for `s = 0..=r/2`.
    pub shells: Vec<McEstimate>,
    pub shell_sizes: Vec<usize>,
    /// `chi^T(z) = sum_x G^T_z(x)`.
    pub chi: McEstimate,
}

impl TwoPointMc {
    pub fn get(&self, x: &LatticePoint) -> Option<&McEstimate> {
        let g = Geometry::Torus { dim: self.dim, period: self.period };
        let p = g.project(x);
        self.points.iter().position(|q| *q == p).map(|i| &self.sites[i])
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["shell", "x_repr", "mean", "stderr", "n_eff"])?;
        for (p, e) in self.points.iter().zip(&self.sites) {
            out.write_record([
                p.norm_sup().to_string(),
                p.to_string(),
                format!("{}", e.mean),
                format!("{}", e.stderr),
                format!("{}", e.ess),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

struct Work {
    visits: Vec<u32>,
    touched: Vec<usize>,
}

/// Estimate `G^T_z(x)` for every torus site.
#[allow(clippy::too_many_arguments)]
pub fn sample_two_point(
    dim: usize,
    period: usize,
    beta: f64,
    z: f64,
    samples: u64,
    seed: u64,
    shards: usize,
    estimator: Estimator,
) -> Result<TwoPointMc> {
    Geometry::torus(dim, period)?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain(format!("beta must lie in [0, 1], got {beta}")));
    }
    let omega = (2 * dim) as f64;
    let a = z * omega;
    if !(z >= 0.0) || a > 1.05 {
        return Err(Error::domain(format!("need 0 <= z Omega <= 1.05, got {a}")));
    }
    if estimator == Estimator::Geometric && a >= 1.0 {
        return Err(Error::domain(format!(
            "geometric lengths need z Omega < 1 (got {a}); use the fixed-length estimator"
        )));
    }
    let walker = TorusWalker::new(dim, period);
    let n_sites = walker.sites();
    let points: Vec<LatticePoint> = (0..n_sites).map(|s| walker.point(s)).collect();
    let shell_of: Vec<usize> = points.iter().map(|p| p.norm_sup() as usize).collect();
    let n_shells = period / 2 + 1;
    let mut shell_sizes = vec![0usize; n_shells];
    for &s in &shell_of {
        shell_sizes[s] += 1;
    }
    // Slots: sites, then chi, then shells.
    let chi_slot = n_sites;
    let shell_slot = n_sites + 1;
    let keep = 1.0 - beta;
    let pow_keep: Vec<f64> = (0..64).map(|j| keep.powi(j)).collect();
    let record = |scratch: &mut Scratch, site: usize, v: f64| {
        scratch.add(site, v);
        scratch.add(chi_slot, v);
        let s = shell_of[site];
        scratch.add(shell_slot + s, v / shell_sizes[s] as f64);
    };
    let sums = run_sharded(
        samples,
        shards,
        seed,
        n_sites + 1 + n_shells,
        || Work { visits: vec![0; n_sites], touched: Vec::new() },
        |_, rng: &mut ChaCha8Rng, w: &mut Work, scratch: &mut Scratch| {
            let mut site = 0usize;
            let mut k = 1.0f64;
            let mut at = 1.0f64;
            w.visits[0] = 1;
            w.touched.push(0);
            record(scratch, 0, 1.0);
            let mut t = 0usize;
            loop {
                match estimator {
                    Estimator::Geometric => {
                        if rng.random::<f64>() >= a {
                            break;
                        }
                    }
                    Estimator::FixedLength { nmax } => {
                        if t == nmax {
                            break;
                        }
                        at *= a;
                    }
                }
                t += 1;
                site = walker.step(site, rng.random_range(0..2 * dim));
                let j = w.visits[site];
                if j == 0 {
                    w.touched.push(site);
                }
                w.visits[site] = j + 1;
                if j > 0 {
                    k *= pow_keep.get(j as usize).copied().unwrap_or_else(|| keep.powi(j as i32));
                }
                if k == 0.0 {
                    break;
                }
                debug_assert!(k > 0.0 && k <= 1.0);
                record(scratch, site, at * k);
            }
            for &s in &w.touched {
                w.visits[s] = 0;
            }
            w.touched.clear();
        },
    )?;
    let est = sums.estimates(seed, shards);
    Ok(TwoPointMc {
        dim,
        period,
        beta,
        z,
        estimator,
        points,
        sites: est[..n_sites].to_vec(),
        chi: est[chi_slot].clone(),
        shells: est[shell_slot..].to_vec(),
        shell_sizes,
    })
}

/// Shell-binned profile of a two-point estimate.
#[derive(Clone, Debug, Serialize)]
pub struct ShellPoint {
    pub shell: usize,
    pub sites: usize,
    pub mean: f64,
    pub stderr: f64,
}

pub fn shell_profile(mc: &TwoPointMc) -> Vec<ShellPoint> {
    mc.shells
        .iter()
        .enumerate()
        .map(|(s, e)| ShellPoint { shell: s, sites: mc.shell_sizes[s], mean: e.mean, stderr: e.stderr })
        .collect()
}

/// How `z` is chosen for a torus of period `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum WindowRule {
    Fixed(f64),
    /// `z = zc - c r^{-p}`.
    Power { c: f64, p: f64 },
    /// `z = zc - c4 beta^{1/2} r^{-d/2}`; at `beta = 0` the factor `beta^{1/2}` is dropped.
    Window { c4: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindowSpec {
    pub dim: usize,
    pub period: usize,
    pub beta: f64,
    pub zc: f64,
    pub rule: WindowRule,
}

impl WindowSpec {
    pub fn resolve(&self) -> Result<f64> {
        let r = self.period as f64;
        let z = match self.rule {
            WindowRule::Fixed(z) => z,
            WindowRule::Power { c, p } => self.zc - c * r.powf(-p),
            WindowRule::Window { c4 } => {
                if self.dim <= 4 {
                    return Err(Error::domain("the scaling-window rule needs d > 4"));
                }
                let b = if self.beta > 0.0 { self.beta.sqrt() } else { 1.0 };
                self.zc - c4 * b * r.powf(-(self.dim as f64) / 2.0)
            }
        };
        if !matches!(self.rule, WindowRule::Fixed(_)) && !(z < self.zc) {
            return Err(Error::domain(format!("rule resolves to z = {z} >= zc = {}", self.zc)));
        }
        if !(z > 0.0) {
            return Err(Error::domain(format!("rule resolves to nonpositive z = {z}")));
        }
        Ok(z)
    }
}

/// Profile fit `G^T(s) ~ A (1 v s)^{-(d-2)} + B` at one `z`.
#[derive(Clone, Debug, Serialize)]
pub struct PlateauScan {
    pub z: f64,
    pub profile: Vec<ShellPoint>,
    pub chi: McEstimate,
    pub amplitude: f64,
    pub plateau: f64,
    pub plateau_stderr: f64,
    /// `B r^d / chi`.
    pub plateau_scaled: f64,
    /// Shell means nonincreasing within two standard errors.
    pub monotone: bool,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// `B` more than three standard errors above zero.
    Flat,
    /// `B` within three standard errors of zero and resolved to within `chi / r^d`.
    Decaying,
    /// Errors too large to tell.
    Inconclusive,
}

/// Weighted least squares of shell means against `A (1 v s)^{-(d-2)} + B`.
fn fit_profile(profile: &[ShellPoint], dim: usize) -> Result<(f64, f64, f64)> {
    let rows: Vec<(f64, f64, f64)> = profile
        .iter()
        .filter(|p| p.stderr > 0.0 || p.mean > 0.0)
        .map(|p| {
            let u = (p.shell.max(1) as f64).powi(-(dim as i32 - 2));
            let w = if p.stderr > 0.0 { 1.0 / (p.stderr * p.stderr) } else { 1e30 };
            (u, p.mean, w)
        })
        .collect();
    if rows.len() < 3 {
        return Err(Error::domain("profile fit needs at least 3 shells"));
    }
    let (mut suu, mut su, mut s1, mut suy, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(u, y, w) in &rows {
        suu += w * u * u;
        su += w * u;
        s1 += w;
        suy += w * u * y;
        sy += w * y;
    }
    let det = suu * s1 - su * su;
    if det.abs() < 1e-300 {
        return Err(Error::Numerical("degenerate profile fit".into()));
    }
    let a = (suy * s1 - su * sy) / det;
    let b = (suu * sy - su * suy) / det;
    let var_b = suu / det;
    Ok((a, b, var_b.sqrt()))
}

/// Plateau scan over a grid of `z` values on one torus.
#[allow(clippy::too_many_arguments)]
pub fn plateau_scan(
    dim: usize,
    period: usize,
    beta: f64,
    z_grid: &[f64],
    samples: u64,
    seed: u64,
    shards: usize,
    estimator: Estimator,
) -> Result<Vec<PlateauScan>> {
    let vol = (period as f64).powi(dim as i32);
    z_grid
        .iter()
        .map(|&z| {
            let mc = sample_two_point(dim, period, beta, z, samples, seed, shards, estimator)?;
            let profile = shell_profile(&mc);
            let (amplitude, plateau, plateau_stderr) = fit_profile(&profile, dim)?;
            let monotone = profile
                .windows(2)
                .all(|w| w[1].mean <= w[0].mean + 2.0 * (w[0].stderr.hypot(w[1].stderr)));
            let scale = mc.chi.mean / vol;
            let verdict = if plateau > 3.0 * plateau_stderr {
                Verdict::Flat
            } else if plateau_stderr < scale {
                Verdict::Decaying
            } else {
                Verdict::Inconclusive
            };
            Ok(PlateauScan {
                z,
                plateau_scaled: plateau * vol / mc.chi.mean,
                chi: mc.chi.clone(),
                profile,
                amplitude,
                plateau,
                plateau_stderr,
                monotone,
                verdict,
            })
        })
        .collect()
}

/// Torus susceptibility at the window point of each period.
#[derive(Clone, Debug, Serialize)]
pub struct WindowReport {
    pub dim: usize,
    pub beta: f64,
    pub zc: f64,
    pub points: Vec<WindowPoint>,
    /// Least-squares slope of `log chi^T` against `log r`.
    pub slope: f64,
    /// `Some` when at least three periods were given.
    pub slope_in_range: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowPoint {
    pub period: usize,
    pub z: f64,
    pub chi_torus: McEstimate,
    /// `chi(z)` on `Z^d` as supplied by the caller.
    pub chi_lattice: f64,
    /// `chi^T <= chi` within three standard errors.
    pub below_lattice: bool,
}

/// `chi^T(z*)` for each period with `z*` from the window rule.
#[allow(clippy::too_many_arguments)]
pub fn window_susceptibility(
    dim: usize,
    beta: f64,
    periods: &[usize],
    zc: f64,
    rule: WindowRule,
    chi_lattice: &dyn Fn(f64) -> f64,
    samples: u64,
    seed: u64,
    shards: usize,
    estimator: Estimator,
) -> Result<WindowReport> {
    let mut points = Vec::new();
    for &r in periods {
        let z = WindowSpec { dim, period: r, beta, zc, rule }.resolve()?;
        let est = if z * (2 * dim) as f64 >= 1.0 && estimator == Estimator::Geometric {
            return Err(Error::domain(format!(
                "window point z Omega = {} needs the fixed-length estimator",
                z * (2 * dim) as f64
            )));
        } else {
            estimator
        };
        let mc = sample_two_point(dim, r, beta, z, samples, seed, shards, est)?;
        let chi_lattice = chi_lattice(z);
        points.push(WindowPoint {
            period: r,
            z,
            below_lattice: mc.chi.mean <= chi_lattice + 3.0 * mc.chi.stderr,
            chi_torus: mc.chi,
            chi_lattice,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.period as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.chi_torus.mean.ln()).collect();
    let slope = log_slope(&xs, &ys);
    let half = dim as f64 / 2.0;
    Ok(WindowReport {
        dim,
        beta,
        zc,
        slope,
        slope_in_range: (points.len() >= 3).then(|| (slope - half).abs() <= 0.75),
        points,
    })
}

fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_zero_matches_torus_green_function() {
        let mc = sample_two_point(1, 3, 0.0, 0.25, 200_000, 11, 4, Estimator::Geometric).unwrap();
        let want = [1.2, 0.4, 0.4];
        for (i, w) in [0i64, 1, -1].iter().zip(want) {
            let e = mc.get(&LatticePoint::new(vec![*i])).unwrap();
            assert!(e.z_score(w) < 4.0, "{e:?}");
        }
        assert!(mc.chi.z_score(2.0) < 4.0);
    }

    #[test]
    fn zero_fugacity_is_delta() {
        let mc = sample_two_point(2, 4, 0.5, 0.0, 100, 1, 2, Estimator::Geometric).unwrap();
        for (p, e) in mc.points.iter().zip(&mc.sites) {
            assert_eq!(e.mean, if p.is_origin() { 1.0 } else { 0.0 });
            assert_eq!(e.stderr, 0.0);
        }
    }

    #[test]
    fn reproducible_given_seed_and_shards() {
        let a = sample_two_point(2, 4, 0.3, 0.1, 5000, 9, 3, Estimator::Geometric).unwrap();
        let b = sample_two_point(2, 4, 0.3, 0.1, 5000, 9, 3, Estimator::Geometric).unwrap();
        assert_eq!(a.sites, b.sites);
        assert_eq!(a.chi, b.chi);
    }

    #[test]
    fn fixed_length_needs_flag() {
        assert!(sample_two_point(1, 3, 0.3, 0.5, 10, 1, 1, Estimator::Geometric).is_err());
        assert!(sample_two_point(1, 3, 0.3, 0.5, 10, 1, 1, Estimator::FixedLength { nmax: 5 }).is_ok());
        assert!(sample_two_point(1, 3, 0.3, 0.6, 10, 1, 1, Estimator::FixedLength { nmax: 5 }).is_err());
    }

    #[test]
    fn window_rule() {
        let w = WindowSpec { dim: 5, period: 4, beta: 0.25, zc: 0.11, rule: WindowRule::Window { c4: 1.0 } };
        assert!((w.resolve().unwrap() - (0.11 - 0.5 / 32.0)).abs() < 1e-15);
        let w3 = WindowSpec { dim: 3, ..w };
        assert!(w3.resolve().is_err());
        let far = WindowSpec { zc: 0.01, ..w };
        assert!(far.resolve().is_err());
    }

    #[test]
    fn profile_fit_recovers_plateau() {
        let profile: Vec<ShellPoint> = (0..6)
            .map(|s| ShellPoint {
                shell: s,
                sites: 1,
                mean: 2.0 * (s.max(1) as f64).powi(-3) + 0.01,
                stderr: 1e-4,
            })
            .collect();
        let (a, b, _) = fit_profile(&profile, 5).unwrap();
        assert!((a - 2.0).abs() < 1e-9 && (b - 0.01).abs() < 1e-9);
    }
}
