//! Geometry of Z^d: sites, the nearest-neighbour kernel p(x, y) = 1/(2d) on
//! ‖x − y‖₁ = 1, and the geometric weight sequence
//! k_x = Σₙ M⁻ⁿ p⁽ⁿ⁾(x, 0) used to control ergodicity estimates.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// A point of the integer lattice Z^d. Ordering is lexicographic.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(SmallVec<[i64; 2]>);

impl Site {
    pub fn new(coords: &[i64]) -> Self {
        assert!(!coords.is_empty(), "a site needs at least one coordinate");
        Site(SmallVec::from_slice(coords))
    }

    pub fn origin(d: usize) -> Self {
        assert!(d >= 1, "dimension must be at least 1");
        Site(smallvec::smallvec![0; d])
    }

    /// One-dimensional site.
    pub fn line(x: i64) -> Self {
        Site(smallvec::smallvec![x])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn l1_distance(&self, other: &Site) -> u64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a.abs_diff(*b)).sum()
    }

    pub fn l1_norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).sum()
    }

    pub fn negated(&self) -> Site {
        Site(self.0.iter().map(|c| -c).collect())
    }

    fn shifted(&self, axis: usize, delta: i64) -> Site {
        let mut s = self.clone();
        s.0[axis] += delta;
        s
    }

    /// Calls `f` on the 2d nearest neighbours in lexicographic order:
    /// x − e₀, x − e₁, …, x − e_{d−1}, x + e_{d−1}, …, x + e₀.
    pub fn for_each_neighbor(&self, mut f: impl FnMut(Site)) {
        let d = self.dim();
        for axis in 0..d {
            f(self.shifted(axis, -1));
        }
        for axis in (0..d).rev() {
            f(self.shifted(axis, 1));
        }
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim() == 1 {
            write!(f, "{}", self.0[0])
        } else {
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
}

/// The 2d nearest neighbours of `x`, lexicographically ordered.
pub fn neighbors(x: &Site) -> Vec<Site> {
    let mut out = Vec::with_capacity(2 * x.dim());
    x.for_each_neighbor(|y| out.push(y));
    out
}

/// Nearest-neighbour transition kernel of the simple random walk on Z^d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kernel {
    d: usize,
}

impl Kernel {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("d", "dimension must be at least 1"));
        }
        Ok(Kernel { d })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn weight(&self, x: &Site, y: &Site) -> f64 {
        kernel_weight(x, y, self.d)
    }
}

/// p(x, y) = 1/(2d) if ‖x − y‖₁ = 1, else 0.
pub fn kernel_weight(x: &Site, y: &Site, d: usize) -> f64 {
    if x.dim() != d || y.dim() != d {
        return 0.0;
    }
    if x.l1_distance(y) == 1 {
        1.0 / (2 * d) as f64
    } else {
        0.0
    }
}

/// Truncated weight sequence k_x = Σ_{n=0}^{n_max} M⁻ⁿ p⁽ⁿ⁾(x, 0) on the
/// window ‖x‖_∞ ≤ radius.
#[derive(Debug, Clone)]
pub struct WeightSequence {
    pub m: f64,
    pub truncation_order: usize,
    pub d: usize,
    pub radius: usize,
    pub values: BTreeMap<Site, f64>,
    /// max over the window of Σ_y p(x, y) k_y − M k_x; tends to a nonpositive
    /// number as the truncation order grows.
    pub contraction_residual: f64,
    /// Upper bound on the neglected tail Σ_{n > n_max} M⁻ⁿ p⁽ⁿ⁾(x, 0).
    pub truncation_bound: f64,
}

impl WeightSequence {
    pub fn get(&self, x: &Site) -> f64 {
        self.values.get(x).copied().unwrap_or(0.0)
    }
}

/// Dense cube {−r, …, r}^d with row-major indexing.
struct Cube {
    d: usize,
    r: i64,
    side: usize,
}

impl Cube {
    fn new(d: usize, r: usize) -> Self {
        Cube {
            d,
            r: r as i64,
            side: 2 * r + 1,
        }
    }

    fn len(&self) -> usize {
        self.side.pow(self.d as u32)
    }

    fn index(&self, coords: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for &c in coords {
            if c < -self.r || c > self.r {
                return None;
            }
            idx = idx * self.side + (c + self.r) as usize;
        }
        Some(idx)
    }

    fn coords(&self, mut idx: usize) -> Vec<i64> {
        let mut c = vec![0i64; self.d];
        for k in (0..self.d).rev() {
            c[k] = (idx % self.side) as i64 - self.r;
            idx /= self.side;
        }
        c
    }
}

/// One step of the kernel: out(x) = Σ_y p(x, y) f(y), with f = 0 outside the cube.
fn apply_kernel(cube: &Cube, f: &[f64]) -> Vec<f64> {
    let w = 1.0 / (2 * cube.d) as f64;
    let mut out = vec![0.0; f.len()];
    for (i, slot) in out.iter_mut().enumerate() {
        let x = cube.coords(i);
        let mut acc = 0.0;
        Site::new(&x).for_each_neighbor(|y| {
            if let Some(j) = cube.index(y.coords()) {
                acc += f[j];
            }
        });
        *slot = w * acc;
    }
    out
}

/// n-step transition probabilities p⁽ⁿ⁾(x, 0) for ‖x‖_∞ ≤ radius, exact by
/// dense convolution.
pub fn n_step_to_origin(d: usize, n: usize, radius: usize) -> Result<BTreeMap<Site, f64>> {
    Kernel::new(d)?;
    let cube = Cube::new(d, radius.max(n));
    let mut f = vec![0.0; cube.len()];
    f[cube.index(&vec![0; d]).unwrap()] = 1.0;
    for _ in 0..n {
        f = apply_kernel(&cube, &f);
    }
    Ok(collect_window(&cube, &f, radius))
}

fn collect_window(cube: &Cube, f: &[f64], radius: usize) -> BTreeMap<Site, f64> {
    let r = radius as i64;
    (0..cube.len())
        .filter_map(|i| {
            let c = cube.coords(i);
            c.iter().all(|v| v.abs() <= r).then(|| (Site::new(&c), f[i]))
        })
        .collect()
}

/// Builds the truncated weight sequence on Z^d.
///
/// p⁽ⁿ⁾(·, 0) vanishes outside ‖x‖₁ ≤ n, so a cube of half-width
/// max(n_max + 1, radius + 1) holds every term exactly.
pub fn weight_sequence(m: f64, n_max: usize, radius: usize, d: usize) -> Result<WeightSequence> {
    if !(m > 1.0) || !m.is_finite() {
        return Err(Error::param("M", format!("must be a finite real > 1, got {m}")));
    }
    Kernel::new(d)?;
    let cube = Cube::new(d, (n_max + 1).max(radius + 1));
    let mut p_n = vec![0.0; cube.len()];
    p_n[cube.index(&vec![0; d]).unwrap()] = 1.0;
    let mut k = vec![0.0; cube.len()];
    let mut scale = 1.0;
    for n in 0..=n_max {
        if n > 0 {
            p_n = apply_kernel(&cube, &p_n);
            scale /= m;
        }
        for (ki, pi) in k.iter_mut().zip(&p_n) {
            *ki += scale * pi;
        }
    }

    // Σ_y p(x, y) k_y − M k_x over the window; the cube covers the
    // support of k plus one layer, so the convolution is exact there.
    let pk = apply_kernel(&cube, &k);
    let r = radius as i64;
    let contraction_residual = (0..cube.len())
        .filter(|&i| cube.coords(i).iter().all(|v| v.abs() <= r))
        .map(|i| pk[i] - m * k[i])
        .fold(f64::NEG_INFINITY, f64::max);

    // Tail Σ_{n>n_max} M⁻ⁿ p⁽ⁿ⁾ ≤ M^{−(n_max+1)} / (1 − 1/M).
    let truncation_bound = m.powi(-(n_max as i32 + 1)) / (1.0 - 1.0 / m);

    Ok(WeightSequence {
        m,
        truncation_order: n_max,
        d,
        radius,
        values: collect_window(&cube, &k, radius),
        contraction_residual,
        truncation_bound,
    })
}
