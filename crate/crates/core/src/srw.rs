//! Simple random walk Green function `C_mu(x) = sum_n (mu Omega)^n D^{*n}(x)` on `Z^d`.
//!
//! Two independent routes are provided. The series route sums exact walk
//! probabilities `D^{*n}(x)`, obtained by splitting the `n` steps among the
//! coordinate axes (a binomial allocation per axis) and multiplying the
//! one-dimensional walk probabilities; no box truncation is involved. The
//! quadrature route evaluates the Fourier integral of `1 / (1 - mu Omega D(k))`
//! on a midpoint grid.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{fit_decay, DecayFit, Param};
use crate::lattice::{
    even_transform, tabulate_axis_sum, tilted_step_transform, Geometry, HalfAxis, LatticePoint,
    OrthantTable,
};

/// Inputs shared by the SRW routines.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreenParams {
    pub dim: usize,
    pub mu: f64,
    /// Box half-width `L`. Points with `|x|_inf > L` are rejected.
    pub radius: usize,
    /// Series cutoff `N`.
    pub nmax: usize,
    /// Quadrature points per axis `M` (even).
    pub grid: usize,
}

impl GreenParams {
    pub fn new(dim: usize, mu: f64) -> Self {
        GreenParams { dim, mu, radius: 10, nmax: 200, grid: 64 }
    }

    pub fn with_mu_omega(dim: usize, mu_omega: f64) -> Self {
        Self::new(dim, mu_omega / (2 * dim) as f64)
    }

    pub fn omega(&self) -> f64 {
        (2 * self.dim) as f64
    }

    pub fn mu_omega(&self) -> f64 {
        self.mu * self.omega()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Geometry("dimension must be at least 1".into()));
        }
        if !(self.mu >= 0.0) || self.mu_omega() > 1.0 + 1e-15 {
            return Err(Error::domain(format!(
                "need 0 <= mu Omega <= 1, got {}",
                self.mu_omega()
            )));
        }
        if self.grid == 0 || self.grid % 2 == 1 {
            return Err(Error::domain(format!("quadrature size must be even, got {}", self.grid)));
        }
        Ok(())
    }
}

/// Exact `D^{*n}(x)` for `n = 0..=nmax`.
///
/// Tables of log-factorials are built once; the ladder is cheap to share
/// between threads.
#[derive(Clone, Debug)]
pub struct StepLadder {
    dim: usize,
    nmax: usize,
    ln_fact: Vec<f64>,
}

impl StepLadder {
    pub fn new(dim: usize, nmax: usize) -> Self {
        let mut ln_fact = Vec::with_capacity(nmax + 1);
        let mut acc = 0.0;
        ln_fact.push(0.0);
        for k in 1..=nmax {
            acc += (k as f64).ln();
            ln_fact.push(acc);
        }
        StepLadder { dim, nmax, ln_fact }
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    fn ln_binom(&self, n: usize, k: usize) -> f64 {
        self.ln_fact[n] - self.ln_fact[k] - self.ln_fact[n - k]
    }

    /// One-dimensional `P(S_m = a)` for `m = 0..=nmax`.
    fn line(&self, a: i64) -> Vec<f64> {
        let a = a.unsigned_abs() as usize;
        (0..=self.nmax)
            .map(|m| {
                if m < a || (m + a) % 2 == 1 {
                    0.0
                } else {
                    (self.ln_binom(m, (m + a) / 2) - m as f64 * std::f64::consts::LN_2).exp()
                }
            })
            .collect()
    }

    /// `D^{*n}(x)` for every `n <= nmax`.
    pub fn walk_probabilities(&self, x: &LatticePoint) -> Result<Vec<f64>> {
        x.check_dim(self.dim)?;
        let c = x.coords();
        let d = self.dim;
        let mut g = self.line(c[d - 1]);
        for j in (0..d - 1).rev() {
            let k = (d - j) as f64;
            let (lp, lq) = ((1.0 / k).ln(), (1.0 - 1.0 / k).ln());
            let p = self.line(c[j]);
            let nz: Vec<usize> = (0..=self.nmax).filter(|&m| p[m] != 0.0).collect();
            let mut next = vec![0.0; self.nmax + 1];
            for (n, slot) in next.iter_mut().enumerate() {
                let mut s = 0.0;
                for &m in nz.iter().take_while(|&&m| m <= n) {
                    let rest = g[n - m];
                    if rest != 0.0 {
                        let w = self.ln_binom(n, m) + m as f64 * lp + (n - m) as f64 * lq;
                        s += w.exp() * p[m] * rest;
                    }
                }
                *slot = s;
            }
            g = next;
        }
        Ok(g)
    }
}

/// A truncated sum together with a bound on what was left out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bounded {
    pub value: f64,
    pub error_bound: f64,
}

/// `sum_{n <= N} (mu Omega)^n D^{*n}(x)` with tail bound `(mu Omega)^{N+1} / (1 - mu Omega)`.
pub fn green_series(params: &GreenParams, x: &LatticePoint) -> Result<Bounded> {
    let ladder = StepLadder::new(params.dim, params.nmax);
    green_series_with(&ladder, params, x)
}

/// [`green_series`] reusing a prebuilt ladder.
pub fn green_series_with(ladder: &StepLadder, params: &GreenParams, x: &LatticePoint) -> Result<Bounded> {
    params.validate()?;
    let a = params.mu_omega();
    if a >= 1.0 {
        return Err(Error::domain("series route needs mu Omega < 1"));
    }
    if x.norm_sup() as usize > params.radius {
        return Err(Error::domain(format!("point {x} outside box of radius {}", params.radius)));
    }
    if ladder.nmax < params.nmax || ladder.dim != params.dim {
        return Err(Error::domain("step ladder does not cover the requested cutoff"));
    }
    let p = ladder.walk_probabilities(x)?;
    let mut value = 0.0;
    let mut an = 1.0;
    for &pn in p.iter().take(params.nmax + 1) {
        value += an * pn;
        an *= a;
    }
    Ok(Bounded { value, error_bound: an / (1.0 - a) })
}

/// Green function tabulated on an orthant by midpoint quadrature.
#[derive(Clone, Debug)]
pub struct QuadratureTable {
    pub table: OrthantTable,
    /// Bound on the aliasing error, valid on the whole table; infinite at `mu Omega = 1`.
    pub error_bound: f64,
    /// Set when `mu Omega = 1`: the integrand is singular and no error bound exists.
    pub critical: bool,
}

/// `C_mu(x)` on `[0, radius]^d` by the `M`-point midpoint rule.
///
/// For even `M` the rule equals `sum_u (-1)^{u_1+...+u_d} C(x + M u)`. With
/// `C(y) <= C(0) exp(-m0 |y|_inf)` the aliasing error is at most
/// `C(0) e^{m0 L} sum_{n>=1} ((2n+1)^d - (2n-1)^d) e^{-m0 M n}`.
pub fn green_fourier_box(dim: usize, mu: f64, radius: usize, grid: usize) -> Result<QuadratureTable> {
    let params = GreenParams { dim, mu, radius, nmax: 0, grid };
    params.validate()?;
    let a = params.mu_omega();
    let axis = HalfAxis::quadrature(grid);
    let cosines: Vec<f64> = axis.nodes.iter().map(|k| k.cos() / dim as f64).collect();
    let half = tabulate_axis_sum(dim, &cosines, |dk| 1.0 / (1.0 - a * dk));
    let sites: Vec<f64> = (0..=radius).map(|c| c as f64).collect();
    let scale = (grid as f64).powi(-(dim as i32));
    let values = even_transform(&half, dim, &axis, &sites, scale);
    let table = OrthantTable::from_raw(Geometry::lattice(dim)?, radius, values);
    let critical = a >= 1.0;
    let error_bound = if critical {
        f64::INFINITY
    } else if mu == 0.0 {
        1e-13
    } else {
        let m0 = mass_m0(dim, mu)?;
        let c0 = table.values()[0] + 1e-300;
        c0 * (m0 * radius as f64).exp() * shell_sum(dim, m0 * grid as f64) + 1e-13 * c0 / (1.0 - a)
    };
    Ok(QuadratureTable { table, error_bound, critical })
}

/// Smallest even grid size (a multiple of 8) whose aliasing bound on the box
/// of radius `radius` is below `tol`, assuming `C(0) <= 1 / (1 - mu Omega)`.
pub fn quadrature_grid_for(dim: usize, mu: f64, radius: usize, tol: f64) -> Result<usize> {
    let a = mu * (2 * dim) as f64;
    if !(a < 1.0) {
        return Err(Error::domain("no finite grid bounds the error at mu Omega >= 1"));
    }
    if mu == 0.0 {
        return Ok(8);
    }
    let m0 = mass_m0(dim, mu)?;
    let c0 = 1.0 / (1.0 - a);
    let mut grid = 8;
    while c0 * (m0 * radius as f64).exp() * shell_sum(dim, m0 * grid as f64) > tol {
        grid += 8;
        if grid > 1 << 20 {
            return Err(Error::domain("required quadrature grid is unreasonably large"));
        }
    }
    Ok(grid)
}

/// `sum_{n>=1} ((2n+1)^d - (2n-1)^d) e^{-s n}`.
pub(crate) fn shell_sum(dim: usize, s: f64) -> f64 {
    let mut acc = 0.0;
    for n in 1.. {
        let n = n as f64;
        let term = ((2.0 * n + 1.0).powi(dim as i32) - (2.0 * n - 1.0).powi(dim as i32)) * (-s * n).exp();
        acc += term;
        if term < 1e-18 * acc || term == 0.0 || n > 1e6 {
            break;
        }
    }
    acc
}

/// Single point by the quadrature route.
pub fn green_fourier(params: &GreenParams, x: &LatticePoint) -> Result<(Bounded, bool)> {
    params.validate()?;
    x.check_dim(params.dim)?;
    if x.norm_sup() as usize > params.radius {
        return Err(Error::domain(format!("point {x} outside box of radius {}", params.radius)));
    }
    let q = green_fourier_box(params.dim, params.mu, x.norm_sup() as usize, params.grid)?;
    Ok((Bounded { value: q.table.get(x), error_bound: q.error_bound }, q.critical))
}

/// `m0(mu) = arccosh(1 + (1 - mu Omega) / (2 mu))`.
pub fn mass_m0(dim: usize, mu: f64) -> Result<f64> {
    let omega = (2 * dim) as f64;
    if !(mu > 0.0) {
        return Err(Error::domain(format!("mass needs mu > 0, got {mu}")));
    }
    if mu * omega > 1.0 + 1e-15 {
        return Err(Error::domain(format!("mass needs mu Omega <= 1, got {}", mu * omega)));
    }
    let t = ((1.0 - mu * omega) / (2.0 * mu)).max(0.0);
    if t < 1e-8 {
        Ok((2.0 * t).sqrt())
    } else {
        let y = 1.0 + t;
        Ok((y + (t * (y + 1.0)).sqrt()).ln())
    }
}

/// Tilted symbol `A^(m)(k) = 1 - mu Omega D^(m)(k)`.
pub fn tilted_symbol(dim: usize, mu: f64, m: f64, k: &[f64]) -> Complex64 {
    debug_assert_eq!(k.len(), dim);
    Complex64::new(1.0, 0.0) - (2 * dim) as f64 * mu * tilted_step_transform(k, m)
}

/// On-axis or off-axis decay fit of `C_mu(n v)`.
#[derive(Clone, Debug, Serialize)]
pub struct MassiveDecayReport {
    pub fit: DecayFit,
    pub m0: f64,
    /// Fitted rate divided by `|v|_inf m0`.
    pub rate_ratio: f64,
    pub expected_power: f64,
    /// Fitted rate in `[a1 m0, (1 + slack) m0]` (per unit of `|v|_inf`).
    pub rate_in_bound: bool,
    pub max_tail_ratio: f64,
}

/// Fit `log C_mu(n v) = log A - p log n - a n` over `n` in `window`.
///
/// Values come from the series route; the cutoff must make every tail bound
/// small against the value it accompanies.
pub fn fit_massive_decay(
    params: &GreenParams,
    direction: &LatticePoint,
    window: (i64, i64),
    a1: f64,
    slack: f64,
) -> Result<MassiveDecayReport> {
    params.validate()?;
    if params.dim <= 2 {
        return Err(Error::domain("massive decay fit needs d > 2"));
    }
    if params.mu_omega() >= 1.0 {
        return Err(Error::domain("massive decay fit needs mu Omega < 1"));
    }
    if window.1 - window.0 + 1 < 4 {
        return Err(Error::domain("window needs at least 4 points"));
    }
    let v = direction.norm_sup();
    if v == 0 {
        return Err(Error::domain("direction must be nonzero"));
    }
    let ladder = StepLadder::new(params.dim, params.nmax);
    let p = GreenParams { radius: (window.1 * v) as usize, ..params.clone() };
    let mut data = Vec::new();
    let mut max_tail_ratio: f64 = 0.0;
    for n in window.0..=window.1 {
        let b = green_series_with(&ladder, &p, &direction.scaled(n))?;
        max_tail_ratio = max_tail_ratio.max(b.error_bound / b.value);
        data.push((n as f64, b.value));
    }
    if max_tail_ratio > 1e-6 {
        return Err(Error::domain(format!(
            "series cutoff {} leaves relative tail {max_tail_ratio:.2e} in the window; raise nmax",
            params.nmax
        )));
    }
    let fit = fit_decay(&data, Param::Free, Param::Free)?;
    let m0 = mass_m0(params.dim, params.mu)?;
    let per_unit = fit.rate / v as f64;
    Ok(MassiveDecayReport {
        rate_ratio: per_unit / m0,
        rate_in_bound: per_unit >= a1 * m0 && per_unit <= (1.0 + slack) * m0,
        expected_power: (params.dim as f64 - 1.0) / 2.0,
        m0,
        fit,
        max_tail_ratio,
    })
}

/// Power-law fit of the critical Green function `C_{1/Omega}(n e_1)`.
///
/// The midpoint rule at `mu Omega = 1` has an error of order `1/M`; the
/// values used are the Richardson combination `2 C_{2M} - C_M`.
pub fn fit_critical_decay(dim: usize, window: (i64, i64), grid: usize) -> Result<DecayFit> {
    if dim <= 2 {
        return Err(Error::domain("critical Green function is infinite for d <= 2"));
    }
    let mu = 1.0 / (2 * dim) as f64;
    let l = window.1 as usize;
    let coarse = green_fourier_box(dim, mu, l, grid)?.table;
    let fine = green_fourier_box(dim, mu, l, 2 * grid)?.table;
    let data: Vec<(f64, f64)> = (window.0..=window.1)
        .map(|n| {
            let x = LatticePoint::on_axis(dim, n);
            (n as f64, 2.0 * fine.get(&x) - coarse.get(&x))
        })
        .collect();
    fit_decay(&data, Param::Free, Param::Fixed(0.0))
}

/// Empirical constants of the heat kernel bound `D^{*n}(x) <= A n^{-d/2} exp(-a |x|_inf^2 / n)`.
#[derive(Clone, Debug, Serialize)]
pub struct HeatKernelReport {
    /// Smallest `A` for which the bound holds with `a = 0`.
    pub a_min: f64,
    /// Prefactor used to determine `rate`.
    pub amplitude: f64,
    /// Largest `a` for which the bound holds with `amplitude`.
    pub rate: f64,
    /// `n^{d/2} D^{*n}(0)` for even `n`.
    pub diagonal: Vec<(usize, f64)>,
    pub parity_ok: bool,
    pub support_ok: bool,
}

/// Scan `D^{*n}(x)` for `n` in `n_range` and every `x` with `|x|_inf <= n`.
///
/// `amplitude_factor` (at least 1) sets `A = factor * a_min` for the rate.
pub fn fit_heat_kernel(dim: usize, n_range: (usize, usize), amplitude_factor: f64) -> Result<HeatKernelReport> {
    use rayon::prelude::*;
    let (n0, n1) = n_range;
    if n0 == 0 || n1 < n0 {
        return Err(Error::domain("n range must satisfy 1 <= n0 <= n1"));
    }
    if amplitude_factor < 1.0 {
        return Err(Error::domain("amplitude factor must be at least 1"));
    }
    let ladder = StepLadder::new(dim, n1);
    // Canonical points with decreasing coordinates cover every orbit.
    let mut pts: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..dim {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                let hi = p.last().copied().unwrap_or(n1 as i64);
                (0..=hi).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    let rows: Vec<(LatticePoint, Vec<f64>)> = pts
        .into_par_iter()
        .map(|c| {
            let x = LatticePoint::new(c);
            let p = ladder.walk_probabilities(&x).expect("dimension checked");
            (x, p)
        })
        .collect();
    let half_d = dim as f64 / 2.0;
    let mut a_min: f64 = 0.0;
    let mut parity_ok = true;
    let mut support_ok = true;
    for (x, p) in &rows {
        let s = x.norm_sup() as usize;
        let l1 = x.norm_1() as usize;
        for (n, &v) in p.iter().enumerate() {
            if (n + l1) % 2 == 1 && v != 0.0 {
                parity_ok = false;
            }
            if n < s && v != 0.0 {
                support_ok = false;
            }
            if n >= n0 && n >= s {
                a_min = a_min.max((n as f64).powf(half_d) * v);
            }
        }
    }
    let amplitude = amplitude_factor * a_min;
    let mut rate = f64::INFINITY;
    for (x, p) in &rows {
        let s = x.norm_sup();
        if s == 0 {
            continue;
        }
        for (n, &v) in p.iter().enumerate().skip(n0) {
            if v > 0.0 && n as i64 >= s {
                let r = n as f64 / (s * s) as f64 * (amplitude / ((n as f64).powf(half_d) * v)).ln();
                rate = rate.min(r);
            }
        }
    }
    let zero = &rows[0].1;
    let diagonal = (n0..=n1)
        .filter(|n| n % 2 == 0)
        .map(|n| (n, (n as f64).powf(half_d) * zero[n]))
        .collect();
    Ok(HeatKernelReport { a_min, amplitude, rate, diagonal, parity_ok, support_ok })
}

/// Massive infrared bound constants on the `M^d` midpoint grid.
#[derive(Clone, Debug, Serialize)]
pub struct InfraredReport {
    pub m0: f64,
    pub m: f64,
    /// Largest `c` with `|A^(m)(k)| >= c (|k| + m0)^2` on the grid.
    pub c_lower: f64,
    /// `max |d^alpha C^(m)(k)| (|k| + m0)^{2+|alpha|}` for `|alpha| = 1, 2`.
    pub derivative_constants: [f64; 2],
}

/// Check `|A^(m)(k)| >= c (|k| + m0)^2` and the derivative decay of `C^(m) = 1/A^(m)`.
///
/// Derivatives are centred finite differences with the grid spacing.
pub fn infrared_check(dim: usize, mu: f64, m: f64, sigma: f64, grid: usize) -> Result<InfraredReport> {
    use rayon::prelude::*;
    let omega = (2 * dim) as f64;
    if !(mu * omega >= 0.5 && mu * omega < 1.0) {
        return Err(Error::domain(format!("need mu Omega in [1/2, 1), got {}", mu * omega)));
    }
    if !(0.0..1.0).contains(&sigma) {
        return Err(Error::domain("sigma must lie in [0, 1)"));
    }
    let m0 = mass_m0(dim, mu)?;
    if !(m >= 0.0 && m <= sigma * m0) {
        return Err(Error::domain(format!("tilt {m} exceeds sigma m0 = {}", sigma * m0)));
    }
    if grid < 4 || grid % 2 == 1 {
        return Err(Error::domain("grid must be even and at least 4"));
    }
    let h = 2.0 * std::f64::consts::PI / grid as f64;
    let node = |i: i64| -std::f64::consts::PI + (i.rem_euclid(grid as i64) as f64 + 0.5) * h;
    let total = grid.pow(dim as u32);
    let cm = |idx: &[i64]| -> Complex64 {
        let k: Vec<f64> = idx.iter().map(|&i| node(i)).collect();
        tilted_symbol(dim, mu, m, &k).inv()
    };
    let (c_lower, d1, d2) = (0..total)
        .into_par_iter()
        .map(|mut flat| {
            let idx: Vec<i64> = (0..dim)
                .map(|_| {
                    let i = (flat % grid) as i64;
                    flat /= grid;
                    i
                })
                .collect();
            let k: Vec<f64> = idx.iter().map(|&i| node(i)).collect();
            let kn = k.iter().map(|v| v * v).sum::<f64>().sqrt() + m0;
            let a = tilted_symbol(dim, mu, m, &k).norm();
            let shift = |j: usize, s: i64, base: &[i64]| {
                let mut v = base.to_vec();
                v[j] += s;
                v
            };
            let mut g1: f64 = 0.0;
            let mut g2: f64 = 0.0;
            for j in 0..dim {
                let fp = cm(&shift(j, 1, &idx));
                let fm = cm(&shift(j, -1, &idx));
                g1 = g1.max(((fp - fm) / (2.0 * h)).norm());
                g2 = g2.max(((fp - 2.0 * cm(&idx) + fm) / (h * h)).norm());
                for l in j + 1..dim {
                    let pp = cm(&shift(l, 1, &shift(j, 1, &idx)));
                    let pm = cm(&shift(l, -1, &shift(j, 1, &idx)));
                    let mp = cm(&shift(l, 1, &shift(j, -1, &idx)));
                    let mm = cm(&shift(l, -1, &shift(j, -1, &idx)));
                    g2 = g2.max(((pp - pm - mp + mm) / (4.0 * h * h)).norm());
                }
            }
            (a / (kn * kn), g1 * kn.powi(3), g2 * kn.powi(4))
        })
        .reduce(
            || (f64::INFINITY, 0.0, 0.0),
            |x, y| (x.0.min(y.0), x.1.max(y.1), x.2.max(y.2)),
        );
    Ok(InfraredReport { m0, m, c_lower, derivative_constants: [d1, d2] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FieldTable;

    fn one_d(a: f64, x: i64) -> f64 {
        let s = (1.0 - a * a).sqrt();
        ((1.0 - s) / a).powi(x.abs() as i32) / s
    }

    #[test]
    fn zero_fugacity_is_delta() {
        let p = GreenParams { nmax: 10, ..GreenParams::new(3, 0.0) };
        assert_eq!(green_series(&p, &LatticePoint::origin(3)).unwrap().value, 1.0);
        assert_eq!(green_series(&p, &LatticePoint::new(vec![1, 0, 0])).unwrap().value, 0.0);
        let q = green_fourier_box(2, 0.0, 3, 8).unwrap();
        assert!((q.table.get(&LatticePoint::origin(2)) - 1.0).abs() < 1e-15);
        assert!(q.table.get(&LatticePoint::new(vec![1, 2])).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_closed_form() {
        let p = GreenParams { radius: 40, nmax: 200, ..GreenParams::with_mu_omega(1, 0.5) };
        let c0 = green_series(&p, &LatticePoint::new(vec![0])).unwrap();
        assert!((c0.value - 1.154701).abs() < 1e-6);
        assert!((c0.value - one_d(0.5, 0)).abs() < 1e-12 + c0.error_bound);
        let c1 = green_series(&p, &LatticePoint::new(vec![1])).unwrap();
        assert!((c1.value - 0.309401).abs() < 1e-6);
        let (f0, crit) = green_fourier(&GreenParams { grid: 256, ..p.clone() }, &LatticePoint::new(vec![0])).unwrap();
        assert!(!crit);
        assert!((f0.value - one_d(0.5, 0)).abs() <= f0.error_bound);
    }

    #[test]
    fn routes_agree_in_two_dimensions() {
        let p = GreenParams { radius: 5, nmax: 120, grid: 64, ..GreenParams::with_mu_omega(2, 0.5) };
        let q = green_fourier_box(2, p.mu, 5, 64).unwrap();
        for x in [vec![0, 0], vec![1, 0], vec![3, 2], vec![5, 5]] {
            let x = LatticePoint::new(x);
            let s = green_series(&p, &x).unwrap();
            assert!((s.value - q.table.get(&x)).abs() <= s.error_bound + q.error_bound);
        }
    }

    #[test]
    fn ladder_matches_convolution_powers() {
        let g = Geometry::lattice(3).unwrap();
        let d = FieldTable::step_distribution(g).unwrap();
        let mut dn = FieldTable::delta(g);
        let ladder = StepLadder::new(3, 6);
        let pts = [vec![0, 0, 0], vec![1, 0, 0], vec![2, -1, 0], vec![1, 1, 1], vec![0, 3, -1]];
        let probs: Vec<Vec<f64>> = pts
            .iter()
            .map(|c| ladder.walk_probabilities(&LatticePoint::new(c.clone())).unwrap())
            .collect();
        for n in 0..=6 {
            for (c, p) in pts.iter().zip(&probs) {
                assert!((dn.get(&LatticePoint::new(c.clone())) - p[n]).abs() < 1e-15);
            }
            dn = dn.convolve(&d).unwrap();
        }
    }

    #[test]
    fn mass_values() {
        assert_eq!(mass_m0(3, 1.0 / 6.0).unwrap(), 0.0);
        assert!((mass_m0(1, 0.25).unwrap() - 1.316958).abs() < 1e-6);
        assert!((mass_m0(1, 0.25).unwrap() - (one_d(0.5, 0) / one_d(0.5, 1)).ln()).abs() < 1e-12);
        for a in [0.999, 0.9999] {
            let mu = a / 6.0;
            let m = mass_m0(3, mu).unwrap();
            let r = m * m / (1.0 / mu - 6.0);
            assert!((r - 1.0).abs() < 2.0 * (1.0 - a) * 10.0, "{r}");
        }
        assert!(mass_m0(3, 0.0).is_err());
        assert!(mass_m0(2, 0.1).unwrap() > mass_m0(2, 0.2).unwrap());
    }

    #[test]
    fn green_times_symbol_is_delta() {
        // (C * A)(x) = delta(x) with A = delta - mu Omega D, away from the box edge.
        let q = green_fourier_box(2, 0.2, 12, 64).unwrap();
        let c = q.table.to_field_table();
        let g = Geometry::lattice(2).unwrap();
        let a = FieldTable::delta(g)
            .add_scaled(&FieldTable::step_distribution(g).unwrap(), -0.8)
            .unwrap();
        let ca = c.convolve(&a).unwrap();
        for x in [vec![0, 0], vec![1, 0], vec![4, 3], vec![-2, 7]] {
            let x = LatticePoint::new(x);
            let want = if x.is_origin() { 1.0 } else { 0.0 };
            assert!((ca.get(&x) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn susceptibility_and_monotonicity() {
        let p = GreenParams { radius: 30, nmax: 150, ..GreenParams::with_mu_omega(2, 0.6) };
        let q = green_fourier_box(2, p.mu, 30, 128).unwrap();
        let chi = q.table.sum();
        assert!(chi < 1.0 / 0.4 && chi > 1.0 / 0.4 - 1e-6);
        let lo = green_series(&GreenParams::with_mu_omega(2, 0.5), &LatticePoint::new(vec![2, 1])).unwrap();
        let hi = green_series(&GreenParams::with_mu_omega(2, 0.6), &LatticePoint::new(vec![2, 1])).unwrap();
        assert!(hi.value > lo.value);
    }

    #[test]
    fn heat_kernel_facts() {
        let r = fit_heat_kernel(2, (1, 40), 2.0).unwrap();
        assert!(r.parity_ok && r.support_ok);
        assert!(r.rate > 0.0 && r.rate.is_finite());
        // Oracle: D^{*2n}(0) = (binom(2n, n) 4^{-n})^2 in two dimensions.
        let mut b = 1.0;
        for n in 1..=20usize {
            b *= (2 * n - 1) as f64 / (2 * n) as f64;
            let (m, v) = r.diagonal[n - 1];
            assert_eq!(m, 2 * n);
            assert!((v - m as f64 * b * b).abs() < 1e-12);
        }
        let last = r.diagonal.last().unwrap().1;
        assert!((last - 2.0 / std::f64::consts::PI).abs() < 0.01);
    }

    #[test]
    fn infrared_symbol() {
        let mu = 0.99 / 6.0;
        let m0 = mass_m0(3, mu).unwrap();
        assert!(tilted_symbol(3, mu, m0, &[0.0; 3]).norm() < 1e-12);
        assert!((tilted_symbol(3, mu, 0.0, &[0.0; 3]).re - 0.01).abs() < 1e-15);
        let r = infrared_check(3, mu, 2.0 * m0 / 3.0, 0.8, 16).unwrap();
        assert!(r.c_lower > 0.0);
        assert!(r.derivative_constants.iter().all(|c| c.is_finite()));
        assert!(infrared_check(3, mu, 0.9 * m0, 0.8, 16).is_err());
    }
}
