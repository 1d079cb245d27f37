use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A site of `Z^d` in lattice units.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        LatticePoint(coords.into())
    }

    pub fn origin(dim: usize) -> Self {
        LatticePoint(vec![0; dim])
    }

    /// `sign * e_axis`.
    pub fn unit(dim: usize, axis: usize, sign: i64) -> Self {
        let mut c = vec![0; dim];
        c[axis] = sign;
        LatticePoint(c)
    }

    /// `n * e_1`.
    pub fn on_axis(dim: usize, n: i64) -> Self {
        let mut c = vec![0; dim];
        c[0] = n;
        LatticePoint(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn norm_sup(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn norm_1(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn norm_euclid_sq(&self) -> i64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm_euclid(&self) -> f64 {
        (self.norm_euclid_sq() as f64).sqrt()
    }

    pub fn scaled(&self, k: i64) -> Self {
        LatticePoint(self.0.iter().map(|c| c * k).collect())
    }

    /// Orbit representative under the hyperoctahedral group: absolute values
    /// sorted in decreasing order.
    pub fn canonical(&self) -> Self {
        let mut c: Vec<i64> = self.0.iter().map(|c| c.abs()).collect();
        c.sort_unstable_by(|a, b| b.cmp(a));
        LatticePoint(c)
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::GeometryMismatch(format!(
                "point {self} has dimension {}, expected {dim}",
                self.dim()
            )));
        }
        Ok(())
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(v: Vec<i64>) -> Self {
        LatticePoint(v)
    }
}

impl Add for &LatticePoint {
    type Output = LatticePoint;
    fn add(self, rhs: &LatticePoint) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &LatticePoint {
    type Output = LatticePoint;
    fn sub(self, rhs: &LatticePoint) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &LatticePoint {
    type Output = LatticePoint;
    fn neg(self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|a| -a).collect())
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Either the full lattice `Z^d` or the discrete torus `(Z / rZ)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    Lattice { dim: usize },
    Torus { dim: usize, period: usize },
}

impl Geometry {
    pub fn lattice(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Geometry("dimension must be at least 1".into()));
        }
        Ok(Geometry::Lattice { dim })
    }

    /// Periods below 3 are rejected: the projection would merge `+e_j` and `-e_j`.
    pub fn torus(dim: usize, period: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Geometry("dimension must be at least 1".into()));
        }
        if period < 3 {
            return Err(Error::Geometry(format!("torus period must be >= 3, got {period}")));
        }
        Ok(Geometry::Torus { dim, period })
    }

    pub fn dim(&self) -> usize {
        match *self {
            Geometry::Lattice { dim } | Geometry::Torus { dim, .. } => dim,
        }
    }

    /// Degree `Omega = 2d` of the nearest-neighbour graph.
    pub fn degree(&self) -> usize {
        2 * self.dim()
    }

    pub fn period(&self) -> Option<usize> {
        match *self {
            Geometry::Lattice { .. } => None,
            Geometry::Torus { period, .. } => Some(period),
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, Geometry::Torus { .. })
    }

    /// Number of torus sites, `None` on `Z^d`.
    pub fn volume(&self) -> Option<usize> {
        self.period().map(|r| r.pow(self.dim() as u32))
    }

    /// Canonical projection; on `Z^d` the identity. Torus points are
    /// represented in `[-r/2, r/2)^d`.
    pub fn project(&self, x: &LatticePoint) -> LatticePoint {
        match *self {
            Geometry::Lattice { .. } => x.clone(),
            Geometry::Torus { period, .. } => {
                LatticePoint(x.coords().iter().map(|&c| torus_rep(c, period)).collect())
            }
        }
    }

    /// All torus sites as representatives, first coordinate fastest.
    pub fn torus_points(&self) -> Option<Vec<LatticePoint>> {
        let r = self.period()?;
        let d = self.dim();
        let lo = -((r / 2) as i64);
        let n = r.pow(d as u32);
        Some(
            (0..n)
                .map(|mut idx| {
                    let mut c = Vec::with_capacity(d);
                    for _ in 0..d {
                        c.push(lo + (idx % r) as i64);
                        idx /= r;
                    }
                    LatticePoint(c)
                })
                .collect(),
        )
    }
}

/// Representative of `c mod r` in `[-r/2, r/2)`.
pub fn torus_rep(c: i64, r: usize) -> i64 {
    let r = r as i64;
    let h = r / 2;
    (c + h).rem_euclid(r) - h
}
