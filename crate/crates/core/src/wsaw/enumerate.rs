//! Depth-first enumeration of walks with their pair counts.
//!
//! The pair weight `prod_{s<t} (1 + beta U_st)` equals `(1 - beta)^P` where
//! `P` is the number of pairs `s < t` with `omega(s) = omega(t)`. A step onto a
//! site already visited `j` times creates exactly `j` new such pairs, so `P`
//! is carried incrementally with a visit-count table.
//!
//! Only canonical walks are visited: axes enter in the order `0, 1, ...` and
//! each new axis is first stepped in the `+` direction. A canonical walk using
//! `k` axes stands for `2^k d! / (d - k)!` walks, all with the same `P` and
//! with endpoints in the same orbit. Counts are accumulated per
//! `(length, orbit, P)` as exact integers and divided by the orbit size at the
//! end, so results do not depend on the order of the parallel merge.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{torus_rep, Geometry, LatticePoint};

/// Default refusal threshold for the estimated number of DFS nodes.
pub const NODE_LIMIT: f64 = 5e9;

/// Enumeration controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnumOptions {
    pub node_limit: f64,
    /// Run even when the estimate exceeds `node_limit`.
    pub override_budget: bool,
    /// Drop walks with more than this many coinciding pairs. `Some(0)` enumerates
    /// self-avoiding walks only.
    pub pair_limit: Option<u32>,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions { node_limit: NODE_LIMIT, override_budget: false, pair_limit: None }
    }
}

/// Number of canonical walks of length `<= nmax`, which is the DFS node count
/// without pruning.
pub fn enumeration_cost(dim: usize, nmax: usize) -> f64 {
    // w[k] = canonical walks of the current length using k axes.
    let mut w = vec![0.0f64; dim + 1];
    w[0] = 1.0;
    let mut total = 1.0;
    for _ in 0..nmax {
        let mut next = vec![0.0; dim + 1];
        for k in 0..=dim {
            next[k] += w[k] * (2 * k) as f64;
            if k < dim {
                next[k + 1] += w[k];
            }
        }
        w = next;
        total += w.iter().sum::<f64>();
    }
    total
}

/// Orbit representative under the symmetries of the geometry that fix `0`.
pub fn canonical(geometry: &Geometry, x: &LatticePoint) -> LatticePoint {
    match *geometry {
        Geometry::Lattice { .. } => x.canonical(),
        Geometry::Torus { period, .. } => {
            LatticePoint::new(x.coords().iter().map(|&c| torus_rep(c, period).abs()).collect::<Vec<_>>())
                .canonical()
        }
    }
}

/// Number of distinct points in the orbit of `x`.
pub fn orbit_size(geometry: &Geometry, x: &LatticePoint) -> u64 {
    orbit(geometry, x).len() as u64
}

/// All points in the orbit of `x` (as representatives on the torus).
pub fn orbit(geometry: &Geometry, x: &LatticePoint) -> Vec<LatticePoint> {
    let d = x.dim();
    let mut perms: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..d {
        perms = perms
            .into_iter()
            .flat_map(|p| {
                (0..d).filter(|i| !p.contains(i)).map(|i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                }).collect::<Vec<_>>()
            })
            .collect();
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for p in &perms {
        for signs in 0..(1u32 << d) {
            let c: Vec<i64> = (0..d)
                .map(|j| {
                    let v = x.coords()[p[j]];
                    if signs >> j & 1 == 1 {
                        -v
                    } else {
                        v
                    }
                })
                .collect();
            let y = geometry.project(&LatticePoint::new(c));
            if seen.insert(y.clone()) {
                out.push(y);
            }
        }
    }
    out
}

/// Exact walk counts per `(length, endpoint orbit, pair count)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairHistogram {
    geometry: Geometry,
    nmax: usize,
    pmax: usize,
    pair_limit: Option<u32>,
    reps: Vec<LatticePoint>,
    orbit_sizes: Vec<u64>,
    /// Walks ending at one fixed point of the orbit, `[(n * reps + rep) * (pmax + 1) + p]`.
    counts: Vec<u64>,
}

impl PairHistogram {
    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn reps(&self) -> &[LatticePoint] {
        &self.reps
    }

    pub fn orbit_sizes(&self) -> &[u64] {
        &self.orbit_sizes
    }

    pub fn pair_limit(&self) -> Option<u32> {
        self.pair_limit
    }

    pub fn rep_index(&self, x: &LatticePoint) -> Option<usize> {
        let c = canonical(&self.geometry, x);
        self.reps.iter().position(|r| *r == c)
    }

    /// Walks of length `n` from `0` to `x` with exactly `p` coinciding pairs.
    pub fn count(&self, n: usize, x: &LatticePoint, p: usize) -> u64 {
        match self.rep_index(x) {
            Some(i) if n <= self.nmax && p <= self.pmax => self.counts[self.slot(n, i, p)],
            _ => 0,
        }
    }

    pub(crate) fn slot(&self, n: usize, rep: usize, p: usize) -> usize {
        (n * self.reps.len() + rep) * (self.pmax + 1) + p
    }

    #[cfg(test)]
    pub(crate) fn pmax(&self) -> usize {
        self.pmax
    }

    /// `sum_P count (1 - beta)^P`, for every `(n, rep)`.
    pub(crate) fn weighted(&self, beta: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::domain(format!("beta must lie in [0, 1], got {beta}")));
        }
        if let Some(l) = self.pair_limit {
            if beta < 1.0 && l < self.pmax as u32 {
                return Err(Error::domain(format!(
                    "histogram keeps only walks with at most {l} pairs; it cannot be evaluated at beta < 1"
                )));
            }
        }
        let keep = 1.0 - beta;
        let pw: Vec<f64> = (0..=self.pmax).map(|p| keep.powi(p as i32)).collect();
        Ok(self
            .counts
            .chunks(self.pmax + 1)
            .map(|c| c.iter().zip(&pw).map(|(&k, &w)| if k == 0 { 0.0 } else { k as f64 * w }).sum())
            .collect())
    }
}

trait Steps: Sync {
    fn step(&self, site: usize, dir: usize) -> usize;
}

struct BoxSteps {
    strides: Vec<isize>,
}

impl Steps for BoxSteps {
    #[inline(always)]
    fn step(&self, site: usize, dir: usize) -> usize {
        let s = self.strides[dir >> 1];
        if dir & 1 == 0 {
            (site as isize + s) as usize
        } else {
            (site as isize - s) as usize
        }
    }
}

struct TorusSteps {
    degree: usize,
    nbr: Vec<u32>,
}

impl Steps for TorusSteps {
    #[inline(always)]
    fn step(&self, site: usize, dir: usize) -> usize {
        self.nbr[site * self.degree + dir] as usize
    }
}

struct Layout {
    sites: usize,
    origin: usize,
    rep_of: Vec<u32>,
    reps: Vec<LatticePoint>,
    orbit_sizes: Vec<u64>,
}

fn sorted_tuples(dim: usize, hi: i64, budget: Option<i64>) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                let top = p.last().copied().unwrap_or(hi);
                let used: i64 = p.iter().sum();
                (0..=top)
                    .filter(move |&c| budget.map_or(true, |b| used + c <= b))
                    .map(move |c| {
                        let mut q = p.clone();
                        q.push(c);
                        q
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

fn layout(geometry: &Geometry, nmax: usize) -> Result<(Layout, Box<dyn StepsBox>)> {
    let d = geometry.dim();
    let (side, shift, tuples) = match *geometry {
        Geometry::Lattice { .. } => (2 * nmax + 1, nmax as i64, sorted_tuples(d, nmax as i64, Some(nmax as i64))),
        Geometry::Torus { period, .. } => (period, 0, sorted_tuples(d, (period / 2) as i64, None)),
    };
    let sites = side
        .checked_pow(d as u32)
        .filter(|&s| s <= 1 << 31)
        .ok_or_else(|| Error::Budget { what: "visit table".into(), estimate: (side as f64).powi(d as i32), limit: 2f64.powi(31) })?;
    let reps: Vec<LatticePoint> = tuples.into_iter().map(LatticePoint::new).collect();
    let index: HashMap<LatticePoint, u32> = reps.iter().enumerate().map(|(i, r)| (r.clone(), i as u32)).collect();
    let orbit_sizes = reps.iter().map(|r| orbit_size(geometry, r)).collect();
    let point = |mut s: usize| -> LatticePoint {
        LatticePoint::new(
            (0..d)
                .map(|_| {
                    let v = (s % side) as i64 - shift;
                    s /= side;
                    v
                })
                .collect::<Vec<_>>(),
        )
    };
    let rep_of: Vec<u32> = (0..sites)
        .into_par_iter()
        .map(|s| index.get(&canonical(geometry, &point(s))).copied().unwrap_or(u32::MAX))
        .collect();
    let strides: Vec<usize> = (0..d).map(|j| side.pow(j as u32)).collect();
    let origin = strides.iter().map(|s| s * shift as usize).sum();
    let steps: Box<dyn StepsBox> = match *geometry {
        Geometry::Lattice { .. } => Box::new(BoxSteps { strides: strides.iter().map(|&s| s as isize).collect() }),
        Geometry::Torus { period, .. } => {
            let mut nbr = vec![0u32; sites * 2 * d];
            for s in 0..sites {
                for j in 0..d {
                    let c = (s / strides[j]) % period;
                    let up = if c + 1 == period { s + strides[j] - period * strides[j] } else { s + strides[j] };
                    let down = if c == 0 { s + (period - 1) * strides[j] } else { s - strides[j] };
                    nbr[s * 2 * d + 2 * j] = up as u32;
                    nbr[s * 2 * d + 2 * j + 1] = down as u32;
                }
            }
            Box::new(TorusSteps { degree: 2 * d, nbr })
        }
    };
    Ok((Layout { sites, origin, rep_of, reps, orbit_sizes }, steps))
}

/// Object-safe wrapper so both step kinds can be chosen at run time and still
/// be monomorphised inside the DFS.
trait StepsBox: Sync {
    fn run(&self, job: &Job) -> Vec<u64>;
    fn prefixes(&self, job: &Job, depth: usize, counts: &mut [u64]) -> Vec<Prefix>;
}

impl<S: Steps> StepsBox for S {
    fn run(&self, job: &Job) -> Vec<u64> {
        run_prefixes(self, job)
    }
    fn prefixes(&self, job: &Job, depth: usize, counts: &mut [u64]) -> Vec<Prefix> {
        collect_prefixes(self, job, depth, counts)
    }
}

struct Job<'a> {
    dim: usize,
    nmax: usize,
    pstride: usize,
    nreps: usize,
    limit: u32,
    mult: Vec<u64>,
    layout: &'a Layout,
    prefixes: Vec<Prefix>,
}

#[derive(Clone)]
struct Prefix {
    path: Vec<usize>,
    pairs: u32,
    axes: usize,
}

struct Dfs<'a, S: Steps> {
    steps: &'a S,
    job: &'a Job<'a>,
    visits: Vec<u8>,
    counts: Vec<u64>,
}

impl<S: Steps> Dfs<'_, S> {
    #[inline(always)]
    fn record(&mut self, site: usize, n: usize, pairs: u32, k: usize) {
        let rep = self.job.layout.rep_of[site] as usize;
        let idx = (n * self.job.nreps + rep) * self.job.pstride + pairs as usize;
        self.counts[idx] += self.job.mult[k];
    }

    fn go(&mut self, site: usize, n: usize, pairs: u32, k: usize) {
        self.record(site, n, pairs, k);
        if n == self.job.nmax {
            return;
        }
        let dirs = if k < self.job.dim { 2 * k + 1 } else { 2 * k };
        for dir in 0..dirs {
            let next = self.steps.step(site, dir);
            let j = self.visits[next] as u32;
            let np = pairs + j;
            if np > self.job.limit {
                continue;
            }
            self.visits[next] += 1;
            self.go(next, n + 1, np, if dir == 2 * k { k + 1 } else { k });
            self.visits[next] -= 1;
        }
    }
}

fn collect_prefixes<S: Steps>(steps: &S, job: &Job, depth: usize, counts: &mut [u64]) -> Vec<Prefix> {
    let mut out = Vec::new();
    let mut visits = vec![0u8; job.layout.sites];
    let o = job.layout.origin;
    visits[o] = 1;
    let mut path = vec![o];
    fn rec<S: Steps>(
        steps: &S,
        job: &Job,
        depth: usize,
        visits: &mut [u8],
        path: &mut Vec<usize>,
        pairs: u32,
        k: usize,
        counts: &mut [u64],
        out: &mut Vec<Prefix>,
    ) {
        let n = path.len() - 1;
        let site = *path.last().unwrap();
        if n == depth {
            out.push(Prefix { path: path.clone(), pairs, axes: k });
            return;
        }
        let rep = job.layout.rep_of[site] as usize;
        counts[(n * job.nreps + rep) * job.pstride + pairs as usize] += job.mult[k];
        if n == job.nmax {
            return;
        }
        let dirs = if k < job.dim { 2 * k + 1 } else { 2 * k };
        for dir in 0..dirs {
            let next = steps.step(site, dir);
            let j = visits[next] as u32;
            if pairs + j > job.limit {
                continue;
            }
            visits[next] += 1;
            path.push(next);
            rec(steps, job, depth, visits, path, pairs + j, if dir == 2 * k { k + 1 } else { k }, counts, out);
            path.pop();
            visits[next] -= 1;
        }
    }
    rec(steps, job, depth, &mut visits, &mut path, 0, 0, counts, &mut out);
    out
}

fn run_prefixes<S: Steps>(steps: &S, job: &Job) -> Vec<u64> {
    let size = (job.nmax + 1) * job.nreps * job.pstride;
    job.prefixes
        .par_iter()
        .fold(
            || Dfs { steps, job, visits: vec![0u8; job.layout.sites], counts: vec![0u64; size] },
            |mut dfs, p| {
                for &s in &p.path {
                    dfs.visits[s] += 1;
                }
                let end = *p.path.last().unwrap();
                dfs.go(end, p.path.len() - 1, p.pairs, p.axes);
                for &s in &p.path {
                    dfs.visits[s] -= 1;
                }
                dfs
            },
        )
        .map(|dfs| dfs.counts)
        .reduce(
            || vec![0u64; size],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Enumerate every walk of length `<= nmax` from the origin.
pub fn enumerate_pairs(geometry: &Geometry, nmax: usize, opts: EnumOptions) -> Result<PairHistogram> {
    let d = geometry.dim();
    if nmax > 254 {
        return Err(Error::domain("nmax above 254 overflows the visit table"));
    }
    let cost = enumeration_cost(d, nmax);
    if cost > opts.node_limit && !opts.override_budget {
        return Err(Error::Budget {
            what: format!("enumeration of {geometry:?} to n = {nmax}"),
            estimate: cost,
            limit: opts.node_limit,
        });
    }
    let (layout, steps) = layout(geometry, nmax)?;
    let pmax = nmax * (nmax + 1) / 2;
    let mut mult = vec![1u64; d + 1];
    for k in 1..=d {
        mult[k] = mult[k - 1] * 2 * (d - k + 1) as u64;
    }
    let nreps = layout.reps.len();
    let mut job = Job {
        dim: d,
        nmax,
        pstride: pmax + 1,
        nreps,
        limit: opts.pair_limit.unwrap_or(u32::MAX),
        mult,
        layout: &layout,
        prefixes: Vec::new(),
    };
    // Shallowest depth with enough prefixes to balance the parallel work.
    let mut depth = 0;
    while depth < nmax && enumeration_cost(d, depth) - enumeration_cost(d, depth.saturating_sub(1)) < 512.0 {
        depth += 1;
    }
    let mut counts = vec![0u64; (nmax + 1) * nreps * (pmax + 1)];
    job.prefixes = steps.prefixes(&job, depth, &mut counts);
    let deep = steps.run(&job);
    for (a, b) in counts.iter_mut().zip(deep) {
        *a += b;
    }
    // Per-point counts.
    for n in 0..=nmax {
        for (r, &size) in layout.orbit_sizes.iter().enumerate() {
            let base = (n * nreps + r) * (pmax + 1);
            for c in &mut counts[base..=base + pmax] {
                if *c % size != 0 {
                    return Err(Error::Numerical(format!(
                        "orbit total {} not divisible by orbit size {size}",
                        *c
                    )));
                }
                *c /= size;
            }
        }
    }
    Ok(PairHistogram {
        geometry: *geometry,
        nmax,
        pmax,
        pair_limit: opts.pair_limit,
        reps: layout.reps,
        orbit_sizes: layout.orbit_sizes,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_counts_all_walks_in_one_dimension() {
        // d = 1: canonical walks are those whose first step is +1.
        let c = enumeration_cost(1, 3);
        assert_eq!(c, 1.0 + 1.0 + 2.0 + 4.0);
    }

    #[test]
    fn orbits() {
        let g = Geometry::lattice(3).unwrap();
        assert_eq!(orbit_size(&g, &LatticePoint::new(vec![0, 0, 0])), 1);
        assert_eq!(orbit_size(&g, &LatticePoint::new(vec![1, 0, 0])), 6);
        assert_eq!(orbit_size(&g, &LatticePoint::new(vec![2, 1, 0])), 24);
        assert_eq!(orbit_size(&g, &LatticePoint::new(vec![1, 1, 1])), 8);
        let t = Geometry::torus(2, 4).unwrap();
        assert_eq!(orbit_size(&t, &LatticePoint::new(vec![2, 0])), 2);
        assert_eq!(orbit_size(&t, &LatticePoint::new(vec![2, 2])), 1);
        assert_eq!(orbit_size(&t, &LatticePoint::new(vec![2, 1])), 4);
        assert_eq!(canonical(&t, &LatticePoint::new(vec![3, -2])), LatticePoint::new(vec![2, 1]));
    }

    #[test]
    fn total_counts_are_powers_of_the_degree() {
        for g in [Geometry::lattice(2).unwrap(), Geometry::torus(2, 3).unwrap(), Geometry::lattice(3).unwrap()] {
            let h = enumerate_pairs(&g, 6, EnumOptions::default()).unwrap();
            for n in 0..=6 {
                let mut tot = 0u64;
                for (r, rep) in h.reps().iter().enumerate() {
                    for p in 0..=h.pmax() {
                        tot += h.count(n, rep, p) * h.orbit_sizes()[r];
                    }
                }
                assert_eq!(tot, (g.degree() as u64).pow(n as u32));
            }
        }
    }

    #[test]
    fn small_pair_counts() {
        let g = Geometry::lattice(1).unwrap();
        let h = enumerate_pairs(&g, 3, EnumOptions::default()).unwrap();
        let o = LatticePoint::new(vec![0]);
        let e = LatticePoint::new(vec![1]);
        // Two-step returns: 0,1,0 and 0,-1,0, each with one pair.
        assert_eq!(h.count(2, &o, 1), 2);
        assert_eq!(h.count(2, &o, 0), 0);
        // Three steps to 1: 0,1,2,1 and 0,-1,0,1 have one pair, 0,1,0,1 has two.
        assert_eq!(h.count(3, &e, 1), 2);
        assert_eq!(h.count(3, &e, 2), 1);
    }

    #[test]
    fn pair_limit_enumerates_self_avoiding_walks() {
        let g = Geometry::lattice(2).unwrap();
        let opts = EnumOptions { pair_limit: Some(0), ..Default::default() };
        let h = enumerate_pairs(&g, 8, opts).unwrap();
        let saw = [1u64, 4, 12, 36, 100, 284, 780, 2172, 5916];
        for (n, &want) in saw.iter().enumerate() {
            let tot: u64 = h
                .reps()
                .iter()
                .enumerate()
                .map(|(r, rep)| h.count(n, rep, 0) * h.orbit_sizes()[r])
                .sum();
            assert_eq!(tot, want);
        }
        assert!(h.weighted(0.5).is_err());
        assert!(h.weighted(1.0).is_ok());
    }

    #[test]
    fn budget_refusal() {
        let g = Geometry::lattice(5).unwrap();
        let opts = EnumOptions { node_limit: 1e6, ..Default::default() };
        match enumerate_pairs(&g, 12, opts) {
            Err(Error::Budget { estimate, .. }) => assert!(estimate > 1e8),
            other => panic!("expected refusal, got {other:?}"),
        }
    }
}
