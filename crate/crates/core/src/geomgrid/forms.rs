use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{diff_scalar, AxisKind, DomainGrid, DomainKind};
use crate::error::{Error, Result};
use crate::par;

/// Strictly increasing `p`-element subsets of `0..dim`, in lexicographic order.
pub fn multi_indices(dim: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, dim: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(i + 1, dim, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if p <= dim {
        rec(0, dim, p, &mut Vec::with_capacity(p), &mut out);
    }
    out
}

/// A sampled differential form of fixed degree carrying a power of the Bott
/// element `u`.
///
/// `components[c][node]` is the coefficient of `dx_{I_c}` where `I_c` is the
/// `c`-th entry of [`multi_indices`]`(dim, degree)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedForm {
    pub domain: DomainGrid,
    pub degree: usize,
    pub u_power: i32,
    pub components: Vec<Vec<Complex64>>,
}

impl GradedForm {
    pub fn zero(domain: &DomainGrid, degree: usize, u_power: i32) -> Result<Self> {
        if degree > domain.dim() {
            return Err(Error::DegreeOverflow { degree, dim: domain.dim() });
        }
        let n = multi_indices(domain.dim(), degree).len();
        Ok(GradedForm {
            domain: domain.clone(),
            degree,
            u_power,
            components: vec![vec![Complex64::new(0.0, 0.0); domain.n_nodes()]; n],
        })
    }

    /// Build from per-node component vectors (one entry per multi-index).
    pub fn from_nodes(domain: &DomainGrid, degree: usize, u_power: i32, per_node: Vec<Vec<Complex64>>) -> Result<Self> {
        let mut f = GradedForm::zero(domain, degree, u_power)?;
        if per_node.len() != domain.n_nodes() {
            return Err(Error::ShapeMismatch(format!("{} node values for {} nodes", per_node.len(), domain.n_nodes())));
        }
        for (node, vals) in per_node.into_iter().enumerate() {
            if vals.len() != f.components.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} components for degree {degree}, expected {}",
                    vals.len(),
                    f.components.len()
                )));
            }
            for (c, v) in vals.into_iter().enumerate() {
                f.components[c][node] = v;
            }
        }
        Ok(f)
    }

    /// Scalar function as a 0-form.
    pub fn scalar(domain: &DomainGrid, u_power: i32, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != domain.n_nodes() {
            return Err(Error::ShapeMismatch("0-form length".into()));
        }
        Ok(GradedForm { domain: domain.clone(), degree: 0, u_power, components: vec![values] })
    }

    pub fn index_list(&self) -> Vec<Vec<usize>> {
        multi_indices(self.domain.dim(), self.degree)
    }

    /// Coefficient of `dx_I` at a node; `idx` must be increasing.
    pub fn component(&self, idx: &[usize], node: usize) -> Complex64 {
        let c = self
            .index_list()
            .iter()
            .position(|m| m == idx)
            .expect("multi-index of the form's degree");
        self.components[c][node]
    }

    fn check_compatible(&self, other: &GradedForm) -> Result<()> {
        if self.domain != other.domain || self.degree != other.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, got: other.degree });
        }
        Ok(())
    }

    pub fn add(&self, other: &GradedForm) -> Result<GradedForm> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GradedForm) -> Result<GradedForm> {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &GradedForm, op: impl Fn(Complex64, Complex64) -> Complex64) -> Result<GradedForm> {
        self.check_compatible(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect())
            .collect();
        Ok(GradedForm { components, ..self.clone() })
    }

    pub fn scale(&self, s: Complex64) -> GradedForm {
        let components = self.components.iter().map(|c| c.iter().map(|&x| x * s).collect()).collect();
        GradedForm { components, ..self.clone() }
    }

    /// Largest modulus over all components and nodes.
    pub fn sup_norm(&self) -> f64 {
        self.components.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Sup-norm of `self − other`.
    pub fn max_diff(&self, other: &GradedForm) -> Result<f64> {
        Ok(self.sub(other)?.sup_norm())
    }

    /// Integrals over every generating cycle of matching dimension.
    pub fn cycle_integrals(&self) -> Vec<Complex64> {
        generating_cycles(&self.domain, self.degree)
            .iter()
            .map(|c| integrate_cycle(self, c))
            .collect()
    }

    /// JSON-friendly summary.
    pub fn report(&self) -> FormReport {
        let cycle_integrals = if self.degree == 0 { Vec::new() } else { self.cycle_integrals() };
        FormReport {
            degree: self.degree,
            u_power: self.u_power,
            cycle_integrals: cycle_integrals.iter().map(|z| [z.re, z.im]).collect(),
            sup_norm: self.sup_norm(),
            residuals: Vec::new(),
        }
    }
}

/// Serialized summary of a form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormReport {
    pub degree: usize,
    pub u_power: i32,
    /// `[re, im]` per generating cycle.
    pub cycle_integrals: Vec<[f64; 2]>,
    pub sup_norm: f64,
    pub residuals: Vec<f64>,
}

/// Exterior derivative, evaluated component by component with the grid's
/// derivative scheme.
pub fn d(omega: &GradedForm) -> Result<GradedForm> {
    let dim = omega.domain.dim();
    let p = omega.degree;
    if p + 1 > dim {
        return Err(Error::DegreeOverflow { degree: p + 1, dim });
    }
    let src = multi_indices(dim, p);
    let dst = multi_indices(dim, p + 1);
    // Derivative of every source component along every axis.
    let partials: Vec<Vec<Vec<Complex64>>> = omega
        .components
        .iter()
        .map(|comp| (0..dim).map(|a| diff_scalar(&omega.domain, comp, a)).collect())
        .collect();
    let n = omega.domain.n_nodes();
    let mut out = GradedForm::zero(&omega.domain, p + 1, omega.u_power)?;
    for (c, j) in dst.iter().enumerate() {
        for (r, &axis) in j.iter().enumerate() {
            let rest: Vec<usize> = j.iter().copied().filter(|&x| x != axis).collect();
            let s = src.iter().position(|m| *m == rest).expect("face multi-index");
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            for node in 0..n {
                out.components[c][node] += sign * partials[s][axis][node];
            }
        }
    }
    Ok(out)
}

/// Integral of a top-degree form over its domain.
///
/// Periodic axes use the trapezoid rule, interval axes composite Simpson. On
/// the two-chart sphere each chart is a closed polar disk in `(r, φ)`; the
/// charts are oriented compatibly (holomorphic transition) and overlap only
/// on the measure-zero circle `r = 1`, so the integral is the sum of the two
/// chart integrals.
pub fn integrate(omega: &GradedForm) -> Result<Complex64> {
    let dim = omega.domain.dim();
    if omega.degree != dim {
        return Err(Error::DegreeMismatch { expected: dim, got: omega.degree });
    }
    let g = &omega.domain;
    let weights: Vec<Vec<f64>> = (0..dim).map(|a| g.axis_weights(a)).collect();
    let terms = par::map_indices(g.n_nodes(), |node| {
        let (_, idx) = g.unravel(node);
        let w: f64 = idx.iter().enumerate().map(|(a, &i)| weights[a][i]).product();
        omega.components[0][node] * w
    });
    Ok(par::pairwise_sum(&terms))
}

/// A closed sub-grid carrying a homology generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cycle {
    /// Sub-torus spanned by the listed periodic axes, other indices held at
    /// `base`.
    SubTorus { chart: usize, axes: Vec<usize>, base: Vec<usize> },
    /// The whole closed two-chart sphere.
    Sphere,
}

/// Generators of `H_p` of the domain, realised on the grid.
pub fn generating_cycles(domain: &DomainGrid, p: usize) -> Vec<Cycle> {
    if p == 0 {
        return Vec::new();
    }
    if domain.kind() == DomainKind::Cp1Charts {
        return if p == 2 { vec![Cycle::Sphere] } else { Vec::new() };
    }
    let periodic: Vec<usize> = (0..domain.dim()).filter(|&a| domain.axis_kind(a) == AxisKind::Periodic).collect();
    multi_indices(periodic.len(), p)
        .into_iter()
        .map(|sel| Cycle::SubTorus {
            chart: 0,
            axes: sel.iter().map(|&i| periodic[i]).collect(),
            base: vec![0; domain.dim()],
        })
        .collect()
}

/// Integral of a form over one cycle.
pub fn integrate_cycle(omega: &GradedForm, cycle: &Cycle) -> Complex64 {
    let g = &omega.domain;
    match cycle {
        Cycle::Sphere => integrate(omega).unwrap_or(Complex64::new(0.0, 0.0)),
        Cycle::SubTorus { chart, axes, base } => {
            if axes.len() != omega.degree {
                return Complex64::new(0.0, 0.0);
            }
            let comp = omega
                .index_list()
                .iter()
                .position(|m| m == axes)
                .expect("cycle axes form an increasing multi-index");
            let sizes: Vec<usize> = axes.iter().map(|&a| g.resolutions()[a]).collect();
            let count: usize = sizes.iter().product();
            let h: f64 = axes.iter().map(|&a| g.spacing(a)).product();
            let terms: Vec<Complex64> = (0..count)
                .map(|mut k| {
                    let mut idx = base.clone();
                    for (j, &a) in axes.iter().enumerate().rev() {
                        idx[a] = k % sizes[j];
                        k /= sizes[j];
                    }
                    omega.components[comp][g.ravel(*chart, &idx)]
                })
                .collect();
            par::pairwise_sum(&terms) * h
        }
    }
}

/// Exactness defect of a form: the largest cycle period for degree ≥ 1, the
/// sup-norm for degree 0.
pub fn exactness_residual(omega: &GradedForm, cycles: &[Cycle]) -> f64 {
    if omega.degree == 0 {
        return omega.sup_norm();
    }
    cycles
        .iter()
        .filter(|c| match c {
            Cycle::Sphere => omega.degree == 2,
            Cycle::SubTorus { axes, .. } => axes.len() == omega.degree,
        })
        .map(|c| integrate_cycle(omega, c).norm())
        .fold(0.0, f64::max)
}
