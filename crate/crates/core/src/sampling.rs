//! Evaluation grids over `(t, r)` and quasi-random tangent-bundle samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::connection::TangentPoint;

/// Rectangular `(t, r)` grid, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub t_range: (f64, f64),
    pub r_range: (f64, f64),
    pub nt: usize,
    pub nr: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            t_range: (0.5, 2.5),
            r_range: (0.5, 2.5),
            nt: 15,
            nr: 15,
        }
    }
}

fn node(range: (f64, f64), n: usize, i: usize) -> f64 {
    if n <= 1 {
        return range.0;
    }
    range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
}

impl Grid {
    pub fn new(t_range: (f64, f64), r_range: (f64, f64), nt: usize, nr: usize) -> Self {
        Grid {
            t_range,
            r_range,
            nt,
            nr,
        }
    }
    pub fn with_resolution(mut self, nt: usize, nr: usize) -> Self {
        self.nt = nt;
        self.nr = nr;
        self
    }
    pub fn t_nodes(&self) -> Vec<f64> {
        (0..self.nt)
            .map(|i| node(self.t_range, self.nt, i))
            .collect()
    }
    pub fn r_nodes(&self) -> Vec<f64> {
        (0..self.nr)
            .map(|i| node(self.r_range, self.nr, i))
            .collect()
    }
    /// Nodes in row-major order (`t` outer).
    pub fn points(&self) -> Vec<(f64, f64)> {
        let rs = self.r_nodes();
        self.t_nodes()
            .into_iter()
            .flat_map(|t| rs.iter().map(move |&r| (t, r)))
            .collect()
    }
    /// A coarser sub-grid with `n × n` nodes spanning the same box.
    pub fn coarse(&self, n: usize) -> Grid {
        Grid {
            nt: n,
            nr: n,
            ..*self
        }
    }
    pub fn base_point(&self) -> (f64, f64) {
        (self.t_range.0, self.r_range.0)
    }
    pub fn contains(&self, t: f64, r: f64) -> bool {
        t >= self.t_range.0 && t <= self.t_range.1 && r >= self.r_range.0 && r <= self.r_range.1
    }
}

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * inv;
        i /= b;
        inv /= base as f64;
    }
    out
}

/// Ranges of the eight coordinates for sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleBox {
    pub lo: [f64; 8],
    pub hi: [f64; 8],
}

impl SampleBox {
    /// Default box: `(t, r)` over the grid, `sinθ ∈ [0.2, 0.98]` on the
    /// northern branch, `φ ∈ [0, 2π)`, `ṫ ∈ (0, 2]`, other velocities in
    /// `[-2, 2]`.
    pub fn for_grid(grid: &Grid) -> Self {
        SampleBox {
            lo: [
                grid.t_range.0,
                grid.r_range.0,
                0.2f64.asin(),
                0.0,
                0.0,
                -2.0,
                -2.0,
                -2.0,
            ],
            hi: [
                grid.t_range.1,
                grid.r_range.1,
                0.98f64.asin(),
                2.0 * std::f64::consts::PI,
                2.0,
                2.0,
                2.0,
                2.0,
            ],
        }
    }
}

/// Deterministic quasi-random sampler: a Halton sequence with a seeded
/// Cranley–Patterson shift.
pub struct Sampler {
    shift: [f64; 8],
    index: u64,
    bounds: SampleBox,
}

impl Sampler {
    pub fn new(bounds: SampleBox, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = std::array::from_fn(|_| rng.gen::<f64>());
        Sampler {
            shift,
            index: 1,
            bounds,
        }
    }

    pub fn next_point(&mut self) -> TangentPoint {
        let i = self.index;
        self.index += 1;
        let x: [f64; 8] = std::array::from_fn(|d| {
            let u = (radical_inverse(i, PRIMES[d]) + self.shift[d]).fract();
            self.bounds.lo[d] + (self.bounds.hi[d] - self.bounds.lo[d]) * u
        });
        TangentPoint::from_array(&x)
    }

    /// Draws up to `count` points satisfying `accept`, giving up after
    /// `count * 200` draws.
    pub fn draw(
        &mut self,
        count: usize,
        accept: &dyn Fn(&TangentPoint) -> bool,
    ) -> Vec<TangentPoint> {
        let mut out = Vec::with_capacity(count);
        let mut tries = 0;
        while out.len() < count && tries < count * 200 {
            tries += 1;
            let p = self.next_point();
            if p.tdot > 0.0 && accept(&p) {
                out.push(p);
            }
        }
        out
    }
}

/// Convenience: `count` default-domain samples over `grid`.
pub fn default_samples(grid: &Grid, count: usize, seed: u64) -> Vec<TangentPoint> {
    Sampler::new(SampleBox::for_grid(grid), seed).draw(count, &|_| true)
}
