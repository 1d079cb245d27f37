//! Monte Carlo on the torus.
//!
//! Every sample owns its generator: a ChaCha8 stream keyed by the run seed and
//! selected by the global sample index. Samples are split into contiguous
//! shards, each shard accumulates privately, and shard totals are merged in
//! shard order. A run is therefore a pure function of `(seed, samples,
//! shards)` and the configuration.

mod wsaw;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub use wsaw::{
    plateau_scan, sample_two_point, shell_profile, window_susceptibility, Estimator, PlateauScan, ShellPoint,
    TwoPointMc, Verdict, WindowPoint, WindowReport, WindowRule, WindowSpec,
};

/// A Monte Carlo mean with its sampling error and provenance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(samples)`.
    pub stderr: f64,
    pub samples: u64,
    /// Kish effective sample size `(sum Y)^2 / sum Y^2`.
    pub ess: f64,
    pub seed: u64,
    pub shards: usize,
}

impl McEstimate {
    fn from_sums(sum: f64, sumsq: f64, samples: u64, seed: u64, shards: usize) -> Self {
        let n = samples as f64;
        let mean = sum / n;
        let var = if samples > 1 { ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        let ess = if sumsq > 0.0 { (sum * sum / sumsq).min(n) } else { 0.0 };
        McEstimate { mean, stderr: (var / n).sqrt(), samples, ess, seed, shards }
    }

    /// `|mean - target| / stderr`, with an exact match scoring 0 even at zero error.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Generator for sample `index` of a run keyed by `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Per-sample site contributions, summed within the sample before squaring.
pub(crate) struct Scratch {
    cur: Vec<f64>,
    touched: Vec<usize>,
}

impl Scratch {
    pub fn add(&mut self, site: usize, v: f64) {
        if self.cur[site] == 0.0 {
            self.touched.push(site);
        }
        self.cur[site] += v;
    }
}

#[derive(Clone)]
pub(crate) struct SiteSums {
    pub sum: Vec<f64>,
    pub sumsq: Vec<f64>,
    pub samples: u64,
}

impl SiteSums {
    pub fn estimates(&self, seed: u64, shards: usize) -> Vec<McEstimate> {
        self.sum
            .iter()
            .zip(&self.sumsq)
            .map(|(&s, &q)| McEstimate::from_sums(s, q, self.samples, seed, shards))
            .collect()
    }
}

/// Run `samples` draws over `shards` contiguous shards.
///
/// `draw(index, rng, workspace, scratch)` records the contributions of one
/// sample; each shard builds its own workspace with `init`.
pub(crate) fn run_sharded<W, I, F>(
    samples: u64,
    shards: usize,
    seed: u64,
    sites: usize,
    init: I,
    draw: F,
) -> Result<SiteSums>
where
    I: Fn() -> W + Sync,
    F: Fn(u64, &mut ChaCha8Rng, &mut W, &mut Scratch) + Sync,
{
    if samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    if shards == 0 {
        return Err(Error::domain("need at least one shard"));
    }
    let per = samples.div_ceil(shards as u64);
    let parts: Vec<SiteSums> = (0..shards as u64)
        .into_par_iter()
        .map(|s| {
            let lo = (s * per).min(samples);
            let hi = ((s + 1) * per).min(samples);
            let mut acc = SiteSums { sum: vec![0.0; sites], sumsq: vec![0.0; sites], samples: hi - lo };
            let mut scratch = Scratch { cur: vec![0.0; sites], touched: Vec::new() };
            let mut work = init();
            for i in lo..hi {
                let mut rng = sample_rng(seed, i);
                draw(i, &mut rng, &mut work, &mut scratch);
                for &t in &scratch.touched {
                    let v = scratch.cur[t];
                    acc.sum[t] += v;
                    acc.sumsq[t] += v * v;
                    scratch.cur[t] = 0.0;
                }
                scratch.touched.clear();
            }
            acc
        })
        .collect();
    let mut total = SiteSums { sum: vec![0.0; sites], sumsq: vec![0.0; sites], samples: 0 };
    for p in parts {
        for i in 0..sites {
            total.sum[i] += p.sum[i];
            total.sumsq[i] += p.sumsq[i];
        }
        total.samples += p.samples;
    }
    Ok(total)
}

/// Torus sites indexed with the first coordinate fastest, digit `c mod r`.
#[derive(Clone, Debug)]
pub(crate) struct TorusWalker {
    pub dim: usize,
    pub period: usize,
    strides: Vec<usize>,
}

impl TorusWalker {
    pub fn new(dim: usize, period: usize) -> Self {
        let strides = (0..dim).map(|j| period.pow(j as u32)).collect();
        TorusWalker { dim, period, strides }
    }

    pub fn sites(&self) -> usize {
        self.period.pow(self.dim as u32)
    }

    /// Neighbour of `site` in direction `dir` (`0..2d`: axis `dir / 2`, sign by parity).
    #[inline]
    pub fn step(&self, site: usize, dir: usize) -> usize {
        let j = dir / 2;
        let s = self.strides[j];
        let c = (site / s) % self.period;
        if dir % 2 == 0 {
            if c + 1 == self.period {
                site + s - self.period * s
            } else {
                site + s
            }
        } else if c == 0 {
            site + (self.period - 1) * s
        } else {
            site - s
        }
    }

    /// Representative in `[-r/2, r/2)^d`.
    pub fn point(&self, mut site: usize) -> crate::lattice::LatticePoint {
        let c: Vec<i64> = (0..self.dim)
            .map(|_| {
                let v = (site % self.period) as i64;
                site /= self.period;
                crate::lattice::torus_rep(v, self.period)
            })
            .collect();
        crate::lattice::LatticePoint::new(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_keyed_by_seed_and_index() {
        let a: u64 = sample_rng(7, 3).random();
        let b: u64 = sample_rng(7, 3).random();
        let c: u64 = sample_rng(7, 4).random();
        let d: u64 = sample_rng(8, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn estimate_statistics() {
        let e = McEstimate::from_sums(6.0, 14.0, 3, 0, 1);
        // samples 1, 2, 3
        assert_eq!(e.mean, 2.0);
        assert!((e.stderr - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(e.ess <= 3.0);
        assert!((e.ess - 36.0 / 14.0).abs() < 1e-15);
    }

    #[test]
    fn sharding_is_deterministic_and_counts_samples() {
        let draw = |i: u64, rng: &mut ChaCha8Rng, _: &mut (), s: &mut Scratch| {
            s.add((i % 3) as usize, rng.random::<f64>());
        };
        let a = run_sharded(100, 4, 1, 3, || (), draw).unwrap();
        let b = run_sharded(100, 4, 1, 3, || (), draw).unwrap();
        assert_eq!(a.sum, b.sum);
        assert_eq!(a.samples, 100);
        let c = run_sharded(100, 7, 1, 3, || (), draw).unwrap();
        assert_eq!(c.samples, 100);
        assert!((a.sum[0] - c.sum[0]).abs() < 1e-12);
    }

    #[test]
    fn walker_wraps() {
        let w = TorusWalker::new(2, 3);
        assert_eq!(w.sites(), 9);
        assert_eq!(w.step(2, 0), 0);
        assert_eq!(w.step(0, 1), 2);
        assert_eq!(w.step(0, 2), 3);
        assert_eq!(w.step(6, 2), 0);
        assert_eq!(w.step(0, 3), 6);
        for s in 0..9 {
            for dir in 0..4 {
                assert_eq!(w.step(w.step(s, dir), dir ^ 1), s);
            }
        }
        assert_eq!(w.point(2).coords(), &[-1, 0]);
    }
}
