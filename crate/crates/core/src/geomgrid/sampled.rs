use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{AxisKind, DomainGrid};
use crate::error::{Error, Result};
use crate::numkernel::{all_finite, projection_residual, unitarity_residual, ComplexMatrix};
use crate::par;
use crate::stiefel::PolarizedWindow;

/// What the values of a sampled map are expected to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Codomain {
    Unitary,
    Projection,
    Frame,
    Generic,
}

/// Tolerance for the codomain checks at construction.
pub const CODOMAIN_TOL: f64 = 1e-8;

/// A matrix-valued map sampled at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMap {
    domain: DomainGrid,
    values: Vec<ComplexMatrix>,
    codomain: Codomain,
    window: Option<PolarizedWindow>,
}

impl SampledMap {
    /// Validate and wrap node values.
    pub fn new(domain: DomainGrid, values: Vec<ComplexMatrix>, codomain: Codomain) -> Result<Self> {
        if values.len() != domain.n_nodes() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                domain.n_nodes()
            )));
        }
        let shape = values[0].shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::ShapeMismatch("empty matrix values".into()));
        }
        for v in &values {
            if v.shape() != shape {
                return Err(Error::ShapeMismatch(format!("mixed value shapes {:?} and {:?}", shape, v.shape())));
            }
            if !all_finite(v) {
                return Err(Error::Format("non-finite matrix entry".into()));
            }
        }
        match codomain {
            Codomain::Unitary => {
                let worst = values.iter().map(unitarity_residual).fold(0.0, f64::max);
                if !(worst < CODOMAIN_TOL) {
                    return Err(Error::NotUnitary(worst));
                }
            }
            Codomain::Projection => {
                let worst = values.iter().map(projection_residual).fold(0.0, f64::max);
                if !(worst < CODOMAIN_TOL) {
                    return Err(Error::NotProjection(worst));
                }
            }
            Codomain::Frame | Codomain::Generic => {}
        }
        Ok(SampledMap { domain, values, codomain, window: None })
    }

    /// Sample `f(chart, coords)` at every node.
    pub fn from_fn<F>(domain: DomainGrid, codomain: Codomain, f: F) -> Result<Self>
    where
        F: Fn(usize, &[f64]) -> ComplexMatrix + Sync + Send,
    {
        let values = par::map_indices(domain.n_nodes(), |node| {
            let (chart, x) = domain.coords(node);
            f(chart, &x)
        });
        SampledMap::new(domain, values, codomain)
    }

    /// Attach the polarization window the values act on.
    pub fn with_window(mut self, window: PolarizedWindow) -> Result<Self> {
        if window.dim() != self.values[0].nrows() {
            return Err(Error::ShapeMismatch(format!(
                "window of dimension {} for {}×{} values",
                window.dim(),
                self.values[0].nrows(),
                self.values[0].ncols()
            )));
        }
        self.window = Some(window);
        Ok(self)
    }

    pub fn domain(&self) -> &DomainGrid {
        &self.domain
    }

    pub fn values(&self) -> &[ComplexMatrix] {
        &self.values
    }

    pub fn value(&self, node: usize) -> &ComplexMatrix {
        &self.values[node]
    }

    pub fn codomain(&self) -> Codomain {
        self.codomain
    }

    pub fn window(&self) -> Option<PolarizedWindow> {
        self.window
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values[0].shape()
    }

    pub fn into_values(self) -> Vec<ComplexMatrix> {
        self.values
    }

    /// Apply `f` node by node, producing a map with the given codomain.
    pub fn map<F>(&self, codomain: Codomain, f: F) -> Result<SampledMap>
    where
        F: Fn(&ComplexMatrix) -> ComplexMatrix + Sync + Send,
    {
        let values = par::map_slice(&self.values, f);
        SampledMap::new(self.domain.clone(), values, codomain)
    }

    /// Node-wise combination of two maps on the same grid.
    pub fn zip_with<F>(&self, other: &SampledMap, codomain: Codomain, f: F) -> Result<SampledMap>
    where
        F: Fn(&ComplexMatrix, &ComplexMatrix) -> ComplexMatrix + Sync + Send,
    {
        if self.domain != other.domain {
            return Err(Error::ShapeMismatch("maps live on different grids".into()));
        }
        let values = par::map_indices(self.values.len(), |i| f(&self.values[i], &other.values[i]));
        SampledMap::new(self.domain.clone(), values, codomain)
    }
}

/// First partial derivatives of a sampled map along every axis.
#[derive(Debug, Clone)]
pub struct JetField<'a> {
    pub base: &'a SampledMap,
    /// `partials[axis][node]`.
    pub partials: Vec<Vec<ComplexMatrix>>,
}

impl JetField<'_> {
    /// All partials at one node, in axis order.
    pub fn at(&self, node: usize) -> Vec<&ComplexMatrix> {
        self.partials.iter().map(|p| &p[node]).collect()
    }
}

/// One-dimensional differentiation operator for a single axis.
struct AxisOperator {
    kind: AxisKind,
    h: f64,
    fft: Option<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
}

impl AxisOperator {
    fn new(domain: &DomainGrid, axis: usize) -> Self {
        let kind = domain.axis_kind(axis);
        let n = domain.resolutions()[axis];
        let fft = match kind {
            AxisKind::Periodic => {
                let mut planner = FftPlanner::new();
                Some((planner.plan_fft_forward(n), planner.plan_fft_inverse(n)))
            }
            AxisKind::Interval => None,
        };
        AxisOperator { kind, h: domain.spacing(axis), fft }
    }

    fn apply(&self, line: &[Complex64]) -> Vec<Complex64> {
        let first = line[0];
        if line.iter().all(|&z| z == first) {
            return vec![Complex64::new(0.0, 0.0); line.len()];
        }
        match self.kind {
            AxisKind::Periodic => {
                let (fwd, inv) = self.fft.as_ref().expect("periodic axis has an fft plan");
                spectral_derivative(line, fwd.as_ref(), inv.as_ref())
            }
            AxisKind::Interval => fd4_derivative(line, self.h),
        }
    }
}

/// Spectral derivative of one period sampled at `N` uniform nodes on `[0, 2π)`.
fn spectral_derivative(line: &[Complex64], fwd: &dyn Fft<f64>, inv: &dyn Fft<f64>) -> Vec<Complex64> {
    let n = line.len();
    let mut buf = line.to_vec();
    fwd.process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let wave = if 2 * k < n {
            k as f64
        } else if 2 * k == n {
            0.0
        } else {
            k as f64 - n as f64
        };
        *c *= Complex64::new(0.0, wave / n as f64);
    }
    inv.process(&mut buf);
    buf
}

/// Fourth-order finite differences: central in the interior, one-sided
/// closures at the two nodes nearest each end.
pub(crate) fn fd4_derivative(f: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = f.len();
    let s = 1.0 / (12.0 * h);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * s;
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * s;
    for i in 2..n - 2 {
        out[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * s;
    }
    out[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) * s;
    out[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) * s;
    out
}

/// Derivative of a scalar field along `axis`.
pub fn diff_scalar(domain: &DomainGrid, values: &[Complex64], axis: usize) -> Vec<Complex64> {
    let op = AxisOperator::new(domain, axis);
    let lines = domain.lines(axis);
    let derived = par::map_slice(&lines, |line| {
        let vals: Vec<Complex64> = line.iter().map(|&n| values[n]).collect();
        op.apply(&vals)
    });
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    for (line, d) in lines.iter().zip(derived) {
        for (&node, v) in line.iter().zip(d) {
            out[node] = v;
        }
    }
    out
}

/// Partial derivatives of `f` along every axis: spectral on periodic axes,
/// fourth-order finite differences on interval axes.
pub fn differentiate(f: &SampledMap) -> JetField<'_> {
    let domain = f.domain();
    let (rows, cols) = f.shape();
    let partials = (0..domain.dim())
        .map(|axis| {
            let op = AxisOperator::new(domain, axis);
            let lines = domain.lines(axis);
            let derived = par::map_slice(&lines, |line| {
                let mut out = vec![ComplexMatrix::zeros(rows, cols); line.len()];
                let mut buf = vec![Complex64::new(0.0, 0.0); line.len()];
                for i in 0..rows {
                    for j in 0..cols {
                        for (k, &node) in line.iter().enumerate() {
                            buf[k] = f.values[node][(i, j)];
                        }
                        for (k, v) in op.apply(&buf).into_iter().enumerate() {
                            out[k][(i, j)] = v;
                        }
                    }
                }
                out
            });
            let mut field = vec![ComplexMatrix::zeros(rows, cols); domain.n_nodes()];
            for (line, d) in lines.iter().zip(derived) {
                for (&node, m) in line.iter().zip(d) {
                    field[node] = m;
                }
            }
            field
        })
        .collect();
    JetField { base: f, partials }
}
