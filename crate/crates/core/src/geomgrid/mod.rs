//! Sample domains, derivative jets of sampled maps and quadrature of forms.
//!
//! Periodic axes carry angles `θ_k = 2πk/N`; interval axes carry `t_k = k/(N−1)`
//! on `[0, 1]`. Nodes are numbered lexicographically with axis 0 slowest. The
//! two-chart model of CP¹ stores chart 0 (coordinate `z = r e^{iφ}`) followed
//! by chart 1 (coordinate `w = 1/z`), each an `(r, φ)` polar grid on the unit
//! disk.

mod forms;
mod io;
mod sampled;

pub use forms::{
    d, exactness_residual, generating_cycles, integrate, integrate_cycle, multi_indices, Cycle, FormReport, GradedForm,
};
pub use io::{decode_grid, encode_grid, read_grid_file, write_grid_file, GRID_MAGIC, GRID_VERSION};
pub use sampled::{differentiate, diff_scalar, Codomain, JetField, SampledMap, CODOMAIN_TOL};
pub(crate) use sampled::fd4_derivative;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MIN_PERIODIC: usize = 8;
pub const MIN_INTERVAL: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Circle,
    Interval,
    Torus2,
    Torus3,
    /// Interval (axis 0) times circle (axis 1).
    Cylinder,
    /// Two closed unit-disk charts glued along `|z| = 1`.
    Cp1Charts,
}

impl DomainKind {
    pub fn code(self) -> u8 {
        match self {
            DomainKind::Circle => 0,
            DomainKind::Interval => 1,
            DomainKind::Torus2 => 2,
            DomainKind::Torus3 => 3,
            DomainKind::Cylinder => 4,
            DomainKind::Cp1Charts => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => DomainKind::Circle,
            1 => DomainKind::Interval,
            2 => DomainKind::Torus2,
            3 => DomainKind::Torus3,
            4 => DomainKind::Cylinder,
            5 => DomainKind::Cp1Charts,
            _ => return None,
        })
    }

    pub fn axis_kinds(self) -> &'static [AxisKind] {
        use AxisKind::*;
        match self {
            DomainKind::Circle => &[Periodic],
            DomainKind::Interval => &[Interval],
            DomainKind::Torus2 => &[Periodic, Periodic],
            DomainKind::Torus3 => &[Periodic, Periodic, Periodic],
            DomainKind::Cylinder => &[Interval, Periodic],
            DomainKind::Cp1Charts => &[Interval, Periodic],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Circle => "circle",
            DomainKind::Interval => "interval",
            DomainKind::Torus2 => "torus2",
            DomainKind::Torus3 => "torus3",
            DomainKind::Cylinder => "cylinder",
            DomainKind::Cp1Charts => "cp1_charts",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisKind {
    Periodic,
    Interval,
}

/// A tensor-product sample grid (or a pair of them, for CP¹).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainGrid {
    kind: DomainKind,
    resolutions: Vec<usize>,
}

/// Build a grid, enforcing per-axis minima (`N ≥ 8` periodic, odd `N ≥ 9`
/// interval).
pub fn make_domain(kind: DomainKind, resolutions: &[usize]) -> Result<DomainGrid> {
    let axes = kind.axis_kinds();
    if resolutions.len() != axes.len() {
        return Err(Error::BadResolution(format!(
            "{} needs {} resolutions, got {}",
            kind.name(),
            axes.len(),
            resolutions.len()
        )));
    }
    for (a, (&n, ak)) in resolutions.iter().zip(axes).enumerate() {
        match ak {
            AxisKind::Periodic if n < MIN_PERIODIC => {
                return Err(Error::BadResolution(format!("periodic axis {a}: {n} < {MIN_PERIODIC}")));
            }
            AxisKind::Interval if n < MIN_INTERVAL || n % 2 == 0 => {
                return Err(Error::BadResolution(format!(
                    "interval axis {a}: {n} must be odd and at least {MIN_INTERVAL}"
                )));
            }
            _ => {}
        }
    }
    Ok(DomainGrid { kind, resolutions: resolutions.to_vec() })
}

impl DomainGrid {
    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn resolutions(&self) -> &[usize] {
        &self.resolutions
    }

    pub fn dim(&self) -> usize {
        self.resolutions.len()
    }

    pub fn axis_kind(&self, axis: usize) -> AxisKind {
        self.kind.axis_kinds()[axis]
    }

    pub fn n_charts(&self) -> usize {
        if self.kind == DomainKind::Cp1Charts {
            2
        } else {
            1
        }
    }

    pub fn nodes_per_chart(&self) -> usize {
        self.resolutions.iter().product()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_charts() * self.nodes_per_chart()
    }

    /// Stride of `axis` inside one chart.
    pub fn stride(&self, axis: usize) -> usize {
        self.resolutions[axis + 1..].iter().product()
    }

    /// Split a node number into `(chart, per-axis indices)`.
    pub fn unravel(&self, node: usize) -> (usize, Vec<usize>) {
        let per = self.nodes_per_chart();
        let chart = node / per;
        let mut rest = node % per;
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = rest % self.resolutions[a];
            rest /= self.resolutions[a];
        }
        (chart, idx)
    }

    pub fn ravel(&self, chart: usize, idx: &[usize]) -> usize {
        let mut node = 0;
        for (a, &i) in idx.iter().enumerate() {
            node = node * self.resolutions[a] + i;
        }
        chart * self.nodes_per_chart() + node
    }

    /// Coordinate of index `i` on `axis`.
    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        let n = self.resolutions[axis];
        match self.axis_kind(axis) {
            AxisKind::Periodic => 2.0 * PI * i as f64 / n as f64,
            AxisKind::Interval => i as f64 / (n - 1) as f64,
        }
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.resolutions[axis]).map(|i| self.axis_coord(axis, i)).collect()
    }

    /// `(chart, coordinates)` of a node.
    pub fn coords(&self, node: usize) -> (usize, Vec<f64>) {
        let (chart, idx) = self.unravel(node);
        (chart, idx.iter().enumerate().map(|(a, &i)| self.axis_coord(a, i)).collect())
    }

    /// Node spacing on `axis`.
    pub fn spacing(&self, axis: usize) -> f64 {
        let n = self.resolutions[axis];
        match self.axis_kind(axis) {
            AxisKind::Periodic => 2.0 * PI / n as f64,
            AxisKind::Interval => 1.0 / (n - 1) as f64,
        }
    }

    /// One-dimensional quadrature weights on `axis`: trapezoid (uniform) on
    /// periodic axes, composite Simpson on interval axes.
    pub fn axis_weights(&self, axis: usize) -> Vec<f64> {
        let n = self.resolutions[axis];
        let h = self.spacing(axis);
        match self.axis_kind(axis) {
            AxisKind::Periodic => vec![h; n],
            AxisKind::Interval => simpson_weights(n, h),
        }
    }

    /// Every line of nodes parallel to `axis`, each listed in axis order.
    pub fn lines(&self, axis: usize) -> Vec<Vec<usize>> {
        let n = self.resolutions[axis];
        let stride = self.stride(axis);
        let per = self.nodes_per_chart();
        let mut out = Vec::with_capacity(self.n_nodes() / n);
        for chart in 0..self.n_charts() {
            for start in 0..per {
                // A line start has index 0 on `axis`.
                if (start / stride) % n != 0 {
                    continue;
                }
                out.push((0..n).map(|i| chart * per + start + i * stride).collect());
            }
        }
        out
    }

    /// True when every axis is periodic (a closed torus).
    pub fn is_closed_torus(&self) -> bool {
        self.kind.axis_kinds().iter().all(|a| *a == AxisKind::Periodic)
    }
}

/// Composite Simpson weights for `n` (odd) nodes with spacing `h`.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    debug_assert!(n % 2 == 1 && n >= 3);
    (0..n)
        .map(|i| {
            let c = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_nodes() {
        let g = make_domain(DomainKind::Circle, &[8]).unwrap();
        assert_eq!(g.n_nodes(), 8);
        for k in 0..8 {
            assert_eq!(g.coords(k).1[0], 2.0 * PI * k as f64 / 8.0);
        }
    }

    #[test]
    fn torus_and_minima() {
        assert_eq!(make_domain(DomainKind::Torus2, &[16, 16]).unwrap().n_nodes(), 256);
        assert!(matches!(make_domain(DomainKind::Circle, &[4]), Err(Error::BadResolution(_))));
        assert!(matches!(make_domain(DomainKind::Interval, &[10]), Err(Error::BadResolution(_))));
        assert!(matches!(make_domain(DomainKind::Interval, &[7]), Err(Error::BadResolution(_))));
        assert!(make_domain(DomainKind::Interval, &[9]).is_ok());
    }

    #[test]
    fn interval_covers_unit_interval() {
        let g = make_domain(DomainKind::Interval, &[9]).unwrap();
        let c = g.axis_coords(0);
        assert_eq!(c[0], 0.0);
        assert_eq!(c[8], 1.0);
    }

    #[test]
    fn ravel_roundtrip_and_lines() {
        let g = make_domain(DomainKind::Cp1Charts, &[9, 8]).unwrap();
        assert_eq!(g.n_nodes(), 2 * 72);
        for node in 0..g.n_nodes() {
            let (c, idx) = g.unravel(node);
            assert_eq!(g.ravel(c, &idx), node);
        }
        assert_eq!(g.lines(0).len(), 2 * 8);
        assert_eq!(g.lines(1).len(), 2 * 9);
        for line in g.lines(1) {
            let (c0, i0) = g.unravel(line[0]);
            for (k, &n) in line.iter().enumerate() {
                let (c, i) = g.unravel(n);
                assert_eq!(c, c0);
                assert_eq!(i[0], i0[0]);
                assert_eq!(i[1], k);
            }
        }
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let n = 9;
        let w = simpson_weights(n, 1.0 / 8.0);
        let s: f64 = (0..n).map(|i| w[i] * (i as f64 / 8.0).powi(3)).sum();
        assert!((s - 0.25).abs() < 1e-15);
    }
}
