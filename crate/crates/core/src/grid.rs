//! Polar discretization of a disc with rim clustering.
//!
//! Node 0 is the disc centre. Every other node sits on a ring `i` in
//! `1..n_r` at angle `j * 2π / n_theta`. The outermost ring, at radius
//! `a (1 - collar)`, is the truncation ring: it carries boundary data and is
//! never updated by interior stencils.
//!
//! `n_theta = 1` is the radially symmetric fast path. Each ring then holds a
//! single node and the angular part of every stencil vanishes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Parameters that fully determine a [`DiscGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub radius: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub clustering: f64,
    pub collar: f64,
}

impl GridSpec {
    pub fn new(radius: f64, n_r: usize, n_theta: usize, clustering: f64, collar: f64) -> Self {
        Self { radius, n_r, n_theta, clustering, collar }
    }

    /// Radially symmetric grid (`n_theta = 1`).
    pub fn radial(radius: f64, n_r: usize, clustering: f64, collar: f64) -> Self {
        Self::new(radius, n_r, 1, clustering, collar)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.radius > 0.0 && self.radius <= 1.0) {
            return bad(format!("grid radius must lie in (0, 1], got {}", self.radius));
        }
        if self.n_r < 8 {
            return bad(format!("n_r must be at least 8, got {}", self.n_r));
        }
        if self.n_theta != 1 && self.n_theta < 8 {
            return bad(format!("n_theta must be 1 or at least 8, got {}", self.n_theta));
        }
        if !(self.clustering >= 1.0 && self.clustering.is_finite()) {
            return bad(format!("clustering exponent must be >= 1, got {}", self.clustering));
        }
        if !(self.collar > 0.0 && self.collar < 0.5) {
            return bad(format!("collar must lie in (0, 0.5), got {}", self.collar));
        }
        Ok(())
    }
}

/// Compressed stencil: `L f[p] = Σ w (f[q] - f[p])` over the entries of row `p`.
#[derive(Clone, Debug)]
struct Stencil<T> {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct DiscGrid<T: Real> {
    spec: GridSpec,
    radii: Vec<T>,
    dtheta: T,
    stencil: Stencil<T>,
}

/// Builds a disc grid; see [`DiscGrid::new`].
pub fn build_grid<T: Real>(
    a: f64,
    n_r: usize,
    n_theta: usize,
    clustering: f64,
    collar: f64,
) -> Result<Arc<DiscGrid<T>>> {
    DiscGrid::new(GridSpec::new(a, n_r, n_theta, clustering, collar)).map(Arc::new)
}

impl<T: Real> DiscGrid<T> {
    /// Radii follow `r_i = a (1 - collar) (1 - (1 - i/(n_r-1))^clustering)`.
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let outer = T::lit(spec.radius) * (T::one() - T::lit(spec.collar));
        let p = T::lit(spec.clustering);
        let last = spec.n_r - 1;
        let radii: Vec<T> = (0..spec.n_r)
            .map(|i| {
                if i == 0 {
                    T::zero()
                } else if i == last {
                    outer
                } else {
                    let s = T::from_usize_lossy(i) / T::from_usize_lossy(last);
                    outer * (T::one() - (T::one() - s).powf(p))
                }
            })
            .collect();
        let dtheta = T::lit(2.0) * T::PI() / T::from_usize_lossy(spec.n_theta);
        let stencil = build_stencil(&radii, spec.n_theta, dtheta);
        Ok(Self { spec, radii, dtheta, stencil })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn radius(&self) -> T {
        T::lit(self.spec.radius)
    }

    pub fn n_r(&self) -> usize {
        self.spec.n_r
    }

    pub fn n_theta(&self) -> usize {
        self.spec.n_theta
    }

    pub fn is_radial(&self) -> bool {
        self.spec.n_theta == 1
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    /// Radius of the truncation ring.
    pub fn outer_radius(&self) -> T {
        self.radii[self.spec.n_r - 1]
    }

    pub fn dtheta(&self) -> T {
        self.dtheta
    }

    pub fn num_nodes(&self) -> usize {
        1 + (self.spec.n_r - 1) * self.spec.n_theta
    }

    /// Node index of ring `i` (>= 1), angle index `j`.
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= 1 && i < self.spec.n_r && j < self.spec.n_theta);
        1 + (i - 1) * self.spec.n_theta + j
    }

    /// `(ring, angle)` indices of a node; the centre is `(0, 0)`.
    #[inline]
    pub fn ring_of(&self, p: usize) -> (usize, usize) {
        if p == 0 {
            (0, 0)
        } else {
            let q = p - 1;
            (1 + q / self.spec.n_theta, q % self.spec.n_theta)
        }
    }

    #[inline]
    pub fn r(&self, p: usize) -> T {
        self.radii[self.ring_of(p).0]
    }

    #[inline]
    pub fn theta(&self, p: usize) -> T {
        T::from_usize_lossy(self.ring_of(p).1) * self.dtheta
    }

    pub fn xy(&self, p: usize) -> (T, T) {
        let (r, th) = (self.r(p), self.theta(p));
        (r * th.cos(), r * th.sin())
    }

    /// True on the truncation ring.
    #[inline]
    pub fn is_ring(&self, p: usize) -> bool {
        p != 0 && self.ring_of(p).0 == self.spec.n_r - 1
    }

    /// Nodes of the truncation ring.
    pub fn ring_nodes(&self) -> std::ops::Range<usize> {
        let start = self.node(self.spec.n_r - 1, 0);
        start..self.num_nodes()
    }

    /// Every node except the truncation ring, centre included.
    pub fn interior_nodes(&self) -> std::ops::Range<usize> {
        0..self.node(self.spec.n_r - 1, 0)
    }

    /// Interior nodes with `|x| <= r_max`.
    pub fn interior_within(&self, r_max: T) -> impl Iterator<Item = usize> + '_ {
        self.interior_nodes().filter(move |&p| self.r(p) <= r_max)
    }

    /// Smallest spacing incident to node `p` (radial or arc length).
    pub fn local_spacing(&self, p: usize) -> T {
        let (i, _) = self.ring_of(p);
        let n = self.spec.n_r;
        if i == 0 {
            return self.radii[1];
        }
        let mut h = self.radii[i] - self.radii[i - 1];
        if i + 1 < n {
            h = h.min(self.radii[i + 1] - self.radii[i]);
        }
        if !self.is_radial() {
            h = h.min(self.radii[i] * self.dtheta);
        }
        h
    }

    /// Largest grid spacing among nodes with radius `<= r_max`.
    pub fn max_spacing_within(&self, r_max: T) -> T {
        let mut h = T::zero();
        for i in 1..self.spec.n_r {
            if self.radii[i - 1] > r_max {
                break;
            }
            h = h.max(self.radii[i] - self.radii[i - 1]);
            if !self.is_radial() && self.radii[i] <= r_max {
                h = h.max(self.radii[i] * self.dtheta);
            }
        }
        h
    }

    pub fn max_spacing(&self) -> T {
        self.max_spacing_within(self.outer_radius())
    }

    /// Same parameters (grids are rebuilt deterministically from their spec).
    pub fn same_layout(&self, other: &Self) -> bool {
        self.spec == other.spec
    }

    /// Stencil row of node `p`: `(neighbor, weight)` pairs.
    pub fn stencil_row(&self, p: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let s = &self.stencil;
        let (a, b) = (s.offsets[p], s.offsets[p + 1]);
        s.neighbors[a..b].iter().copied().zip(s.weights[a..b].iter().copied())
    }

    /// Applies the flat Laplacian stencil at node `p`.
    #[inline]
    pub fn laplacian_at(&self, values: &[T], p: usize) -> T {
        let s = &self.stencil;
        let fp = values[p];
        let mut acc = T::zero();
        for k in s.offsets[p]..s.offsets[p + 1] {
            acc = acc + s.weights[k] * (values[s.neighbors[k]] - fp);
        }
        acc
    }

    /// Evaluates grid data at an arbitrary point by cubic Lagrange
    /// interpolation in `r` and periodic cubic interpolation in `theta`.
    pub fn interpolate(&self, values: &[T], r: T, theta: T) -> T {
        let n = self.spec.n_r;
        let radii = &self.radii;
        let i = match radii.partition_point(|&ri| ri <= r) {
            0 => 0,
            k => (k - 1).min(n - 2),
        };
        let start = i.saturating_sub(1).min(n - 4);
        let xs = [radii[start], radii[start + 1], radii[start + 2], radii[start + 3]];
        let w = lagrange4(&xs, r);
        let mut acc = T::zero();
        for (m, wm) in w.iter().enumerate() {
            let ring = start + m;
            let v = if ring == 0 { values[0] } else { self.angular_value(values, ring, theta) };
            acc = acc + *wm * v;
        }
        acc
    }

    fn angular_value(&self, values: &[T], ring: usize, theta: T) -> T {
        let nt = self.spec.n_theta;
        let base = self.node(ring, 0);
        if nt == 1 {
            return values[base];
        }
        let two_pi = T::lit(2.0) * T::PI();
        let mut th = theta % two_pi;
        if th < T::zero() {
            th = th + two_pi;
        }
        let s = th / self.dtheta;
        let j = s.floor().to_usize().unwrap_or(0) % nt;
        let frac = s - s.floor();
        // Uniform nodes at -1, 0, 1, 2 relative to j.
        let xs = [-T::one(), T::zero(), T::one(), T::lit(2.0)];
        let w = lagrange4(&xs, frac);
        let mut acc = T::zero();
        for (m, wm) in w.iter().enumerate() {
            let jj = (j + nt + m - 1) % nt;
            acc = acc + *wm * values[base + jj];
        }
        acc
    }
}

fn lagrange4<T: Real>(xs: &[T; 4], x: T) -> [T; 4] {
    let mut w = [T::one(); 4];
    for (k, wk) in w.iter_mut().enumerate() {
        for m in 0..4 {
            if m != k {
                *wk = *wk * (x - xs[m]) / (xs[k] - xs[m]);
            }
        }
    }
    w
}

fn build_stencil<T: Real>(radii: &[T], n_theta: usize, dtheta: T) -> Stencil<T> {
    let n_r = radii.len();
    let num_nodes = 1 + (n_r - 1) * n_theta;
    let node = |i: usize, j: usize| 1 + (i - 1) * n_theta + j;
    let two = T::lit(2.0);
    let mut offsets = Vec::with_capacity(num_nodes + 1);
    let mut neighbors = Vec::new();
    let mut weights = Vec::new();

    // Centre: 4 (mean over ring 1 - f0) / r1^2.
    offsets.push(0);
    let wc = T::lit(4.0) / (radii[1] * radii[1] * T::from_usize_lossy(n_theta));
    for j in 0..n_theta {
        neighbors.push(node(1, j));
        weights.push(wc);
    }
    offsets.push(neighbors.len());

    // Angular weight, exact on cos/sin of the first mode.
    let ang_den = two * (T::one() - dtheta.cos());

    for i in 1..n_r {
        let r = radii[i];
        for j in 0..n_theta {
            let inner = |i: usize| if i == 0 { 0 } else { node(i, j) };
            if i + 1 < n_r {
                let hm = r - radii[i - 1];
                let hp = radii[i + 1] - r;
                let s = hm + hp;
                let wp = two / (hp * s) + hm / (hp * s) / r;
                let wm = two / (hm * s) - hp / (hm * s) / r;
                neighbors.push(node(i + 1, j));
                weights.push(wp);
                neighbors.push(inner(i - 1));
                weights.push(wm);
            } else {
                // One-sided quadratic through the last three radii.
                let (x0, x1, x2) = (r, radii[i - 1], radii[i - 2]);
                let d1 = (x1 - x0) * (x1 - x2);
                let d2 = (x2 - x0) * (x2 - x1);
                let w1 = two / d1 + ((x0 - x2) / d1) / r;
                let w2 = two / d2 + ((x0 - x1) / d2) / r;
                neighbors.push(inner(i - 1));
                weights.push(w1);
                neighbors.push(inner(i - 2));
                weights.push(w2);
            }
            if n_theta > 1 {
                let wa = T::one() / (r * r * ang_den);
                neighbors.push(node(i, (j + 1) % n_theta));
                weights.push(wa);
                neighbors.push(node(i, (j + n_theta - 1) % n_theta));
                weights.push(wa);
            }
            offsets.push(neighbors.len());
        }
    }
    Stencil { offsets, neighbors, weights }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_radii_without_clustering() {
        let g = build_grid::<f64>(1.0, 9, 8, 1.0, 0.1).unwrap();
        for (i, &r) in g.radii().iter().enumerate() {
            assert_abs_diff_eq!(r, 0.1125 * i as f64, epsilon = 1e-15);
        }
        assert_eq!(g.num_nodes(), 1 + 8 * 8);
    }

    #[test]
    fn quadratic_clustering_halves_spacing_towards_rim() {
        let g = build_grid::<f64>(1.0, 9, 8, 2.0, 0.1).unwrap();
        let r = g.radii();
        assert_eq!(r[8], 0.9);
        let gaps: Vec<f64> = r.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
        // Gaps of 0.9 (1-s)^2 decrease linearly: first 15/64 * 0.9, last 1/64 * 0.9.
        assert_abs_diff_eq!(gaps[0], 0.9 * 15.0 / 64.0, epsilon = 1e-14);
        assert_abs_diff_eq!(gaps[7], 0.9 / 64.0, epsilon = 1e-14);
    }

    #[test]
    fn truncation_radius_is_exact() {
        let g = build_grid::<f64>(0.5, 65, 64, 3.0, 0.05).unwrap();
        assert_eq!(g.outer_radius(), 0.5 * (1.0 - 0.05));
        assert_abs_diff_eq!(g.outer_radius(), 0.475, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_grid::<f64>(0.0, 16, 8, 1.0, 0.1).is_err());
        assert!(build_grid::<f64>(1.5, 16, 8, 1.0, 0.1).is_err());
        assert!(build_grid::<f64>(1.0, 7, 8, 1.0, 0.1).is_err());
        assert!(build_grid::<f64>(1.0, 16, 4, 1.0, 0.1).is_err());
        assert!(build_grid::<f64>(1.0, 16, 8, 0.5, 0.1).is_err());
        assert!(build_grid::<f64>(1.0, 16, 8, 1.0, 0.5).is_err());
        assert!(build_grid::<f64>(1.0, 16, 1, 1.0, 0.1).is_ok());
    }

    #[test]
    fn node_indexing_round_trips() {
        let g = build_grid::<f64>(1.0, 10, 12, 1.5, 0.05).unwrap();
        for p in 0..g.num_nodes() {
            let (i, j) = g.ring_of(p);
            if p > 0 {
                assert_eq!(g.node(i, j), p);
            }
        }
        assert_eq!(g.ring_nodes().len(), 12);
        assert!(g.ring_nodes().all(|p| g.is_ring(p)));
        assert!(g.interior_nodes().all(|p| !g.is_ring(p)));
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let g = build_grid::<f64>(1.0, 12, 16, 2.0, 0.05).unwrap();
        let v: Vec<f64> = (0..g.num_nodes()).map(|p| (p as f64 * 0.37).sin()).collect();
        for p in 0..g.num_nodes() {
            assert_abs_diff_eq!(g.interpolate(&v, g.r(p), g.theta(p)), v[p], epsilon = 1e-12);
        }
    }
}
