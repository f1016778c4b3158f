//! Scalar fields over a [`DiscGrid`].

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DiscGrid;
use crate::scalar::Real;

const PAR_THRESHOLD: usize = 1 << 14;

/// One real value per grid node.
#[derive(Clone, Debug)]
pub struct ScalarField<T: Real> {
    grid: Arc<DiscGrid<T>>,
    values: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reduce {
    Min,
    Max,
    SupNorm,
}

impl<T: Real> ScalarField<T> {
    /// Wraps node values, rejecting wrong lengths and non-finite entries.
    pub fn new(grid: Arc<DiscGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::Domain(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.num_nodes()
            )));
        }
        let f = Self { grid, values };
        f.ensure_finite()?;
        Ok(f)
    }

    pub(crate) fn from_values_unchecked(grid: Arc<DiscGrid<T>>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.num_nodes());
        Self { grid, values }
    }

    pub fn constant(grid: Arc<DiscGrid<T>>, c: T) -> Self {
        let n = grid.num_nodes();
        Self { grid, values: vec![c; n] }
    }

    /// Samples `f(r, theta)` at every node.
    pub fn from_polar(grid: Arc<DiscGrid<T>>, f: impl Fn(T, T) -> T) -> Self {
        let values = (0..grid.num_nodes()).map(|p| f(grid.r(p), grid.theta(p))).collect();
        Self { grid, values }
    }

    /// Samples a radial profile `f(r)` at every node.
    pub fn from_radial(grid: Arc<DiscGrid<T>>, f: impl Fn(T) -> T) -> Self {
        let values = (0..grid.num_nodes()).map(|p| f(grid.r(p))).collect();
        Self { grid, values }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_xy(grid: Arc<DiscGrid<T>>, f: impl Fn(T, T) -> T) -> Self {
        let values = (0..grid.num_nodes())
            .map(|p| {
                let (x, y) = grid.xy(p);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<DiscGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(p) => Err(Error::Domain(format!(
                "non-finite value {:?} at node {} (r = {})",
                self.values[p],
                p,
                self.grid.r(p)
            ))),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add_scalar(&self, c: T) -> Self {
        self.map(|v| v + c)
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_layout(&other.grid) {
            Ok(())
        } else {
            Err(Error::Domain("fields live on different grids".into()))
        }
    }

    pub fn reduce(&self, kind: Reduce) -> T {
        field_reduce_over(&self.values, 0..self.values.len(), kind)
    }

    /// Reduction restricted to a node subset.
    pub fn reduce_over(&self, nodes: impl IntoIterator<Item = usize>, kind: Reduce) -> T {
        field_reduce_over(&self.values, nodes, kind)
    }

    /// Flat Laplacian `f_rr + f_r/r + f_θθ/r²`.
    ///
    /// Interior nodes use the second-order polar stencil (angular average at
    /// the centre). Truncation-ring entries come from a one-sided radial
    /// quadratic and are only first-order accurate.
    pub fn laplacian(&self) -> Self {
        let g = &self.grid;
        let n = g.num_nodes();
        let values = if n >= PAR_THRESHOLD {
            (0..n).into_par_iter().map(|p| g.laplacian_at(&self.values, p)).collect()
        } else {
            (0..n).map(|p| g.laplacian_at(&self.values, p)).collect()
        };
        Self { grid: g.clone(), values }
    }

    /// Resamples onto another grid whose nodes lie inside this grid's domain.
    pub fn resample(&self, target: &Arc<DiscGrid<T>>) -> Result<Self> {
        if Arc::ptr_eq(&self.grid, target) || self.grid.same_layout(target) {
            return Ok(Self { grid: target.clone(), values: self.values.clone() });
        }
        let src_max = self.grid.outer_radius();
        let slack = T::lit(1e-12) * src_max;
        if target.outer_radius() > src_max + slack {
            return Err(Error::Domain(format!(
                "target grid reaches radius {} beyond source truncation radius {}",
                target.outer_radius(),
                src_max
            )));
        }
        let values = (0..target.num_nodes())
            .map(|p| {
                let r = target.r(p).min(src_max);
                self.grid.interpolate(&self.values, r, target.theta(p))
            })
            .collect();
        Ok(Self { grid: target.clone(), values })
    }
}

pub fn field_reduce<T: Real>(f: &ScalarField<T>, kind: Reduce) -> T {
    f.reduce(kind)
}

fn field_reduce_over<T: Real>(values: &[T], nodes: impl IntoIterator<Item = usize>, kind: Reduce) -> T {
    let mut it = nodes.into_iter().map(|p| values[p]);
    match kind {
        Reduce::Min => it.fold(T::infinity(), T::min),
        Reduce::Max => it.fold(T::neg_infinity(), T::max),
        Reduce::SupNorm => {
            let first = it.next().map(T::abs).unwrap_or_else(T::zero);
            it.fold(first, |acc, v| acc.max(v.abs()))
        }
    }
}

/// Node where `f` attains its minimum over `nodes`.
pub fn argmin_over<T: Real>(values: &[T], nodes: impl IntoIterator<Item = usize>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for p in nodes {
        let v = values[p];
        match best {
            Some((_, b)) if !(v < b) => {}
            _ => best = Some((p, v)),
        }
    }
    best.map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reductions() {
        let g = build_grid::<f64>(1.0, 16, 8, 1.5, 0.05).unwrap();
        let c = ScalarField::constant(g.clone(), 3.0);
        assert_eq!(c.reduce(Reduce::Max), 3.0);
        let r2 = ScalarField::from_radial(g.clone(), |r| r * r);
        assert_eq!(r2.reduce(Reduce::Min), 0.0);
        assert_eq!(r2.sub(&r2).unwrap().reduce(Reduce::SupNorm), 0.0);
        let neg = r2.map(|v| -2.0 * v);
        assert_abs_diff_eq!(neg.reduce(Reduce::SupNorm), 2.0 * 0.95f64.powi(2), epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = build_grid::<f64>(1.0, 8, 1, 1.0, 0.1).unwrap();
        let mut v = vec![0.0; g.num_nodes()];
        v[3] = f64::NAN;
        assert!(ScalarField::new(g.clone(), v).is_err());
        assert!(ScalarField::new(g, vec![0.0; 2]).is_err());
    }

    #[test]
    fn resample_identity_is_bitwise() {
        let g = build_grid::<f64>(1.0, 20, 16, 2.0, 0.05).unwrap();
        let f = ScalarField::from_xy(g.clone(), |x, y| (3.0 * x).sin() * y.exp());
        let same = build_grid::<f64>(1.0, 20, 16, 2.0, 0.05).unwrap();
        let h = f.resample(&same).unwrap();
        assert!(f.values().iter().zip(h.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn resample_outside_domain_fails() {
        let small = build_grid::<f64>(0.5, 20, 16, 1.0, 0.05).unwrap();
        let big = build_grid::<f64>(1.0, 20, 16, 1.0, 0.05).unwrap();
        let f = ScalarField::constant(small, 1.0);
        assert!(matches!(f.resample(&big), Err(Error::Domain(_))));
    }

    #[test]
    fn resample_constant_is_exact() {
        let src = build_grid::<f64>(1.0, 24, 16, 2.0, 0.02).unwrap();
        let dst = build_grid::<f64>(0.9, 31, 24, 1.0, 0.1).unwrap();
        let f = ScalarField::constant(src, -1.25);
        let g = f.resample(&dst).unwrap();
        for v in g.values() {
            assert_abs_diff_eq!(*v, -1.25, epsilon = 1e-13);
        }
    }
}
