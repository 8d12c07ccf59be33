//! Named analytic map families, addressable from JSON as
//! `{"builder": name, "params": {…}}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geomgrid::{make_domain, Codomain, DomainGrid, DomainKind, SampledMap};
use crate::numkernel::{expm, identity, ComplexMatrix, ONE, ZERO};

pub const BUILDERS: &[&str] = &["loop_zn", "bloch_circle", "taut_cp1", "su2_chart", "const_identity", "trig_loop"];

/// `{"builder": …, "params": {…}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub builder: String,
    #[serde(default)]
    pub params: Value,
}

/// A built map plus what the builder knows about it.
#[derive(Debug, Clone)]
pub struct Built {
    pub map: SampledMap,
    /// Exact Fourier bandwidth for band-limited loops.
    pub bandwidth: Option<usize>,
    /// Loop parameters for projection loops that have an analytic path.
    pub bloch: Option<(f64, f64)>,
}

fn param_f64(params: &Value, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| Error::Format(format!("parameter `{key}` must be a number"))),
    }
}

fn param_i64(params: &Value, key: &str, default: i64) -> Result<i64> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v.as_i64().ok_or_else(|| Error::Format(format!("parameter `{key}` must be an integer"))),
    }
}

fn check_params(params: &Value, allowed: &[&str]) -> Result<()> {
    match params {
        Value::Null => Ok(()),
        Value::Object(m) => match m.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::Format(format!("unknown parameter `{k}`"))),
            None => Ok(()),
        },
        _ => Err(Error::Format("params must be a JSON object".into())),
    }
}

fn domain_from_name(name: &str) -> Result<DomainKind> {
    Ok(match name {
        "circle" => DomainKind::Circle,
        "interval" => DomainKind::Interval,
        "torus2" => DomainKind::Torus2,
        "torus3" => DomainKind::Torus3,
        "cylinder" => DomainKind::Cylinder,
        "cp1_charts" => DomainKind::Cp1Charts,
        other => return Err(Error::Format(format!("unknown domain `{other}`"))),
    })
}

fn pad_res(kind: DomainKind, res: &[usize], default: usize) -> Vec<usize> {
    let dim = kind.axis_kinds().len();
    (0..dim).map(|a| res.get(a).or(res.last()).copied().unwrap_or(default)).collect()
}

fn circle(res: &[usize]) -> Result<DomainGrid> {
    make_domain(DomainKind::Circle, &pad_res(DomainKind::Circle, res, 256))
}

fn scalar(z: Complex64) -> ComplexMatrix {
    ComplexMatrix::from_element(1, 1, z)
}

/// Pauli matrices.
pub fn pauli() -> [ComplexMatrix; 3] {
    let i = Complex64::new(0.0, 1.0);
    [
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
        ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

/// Projection onto the tautological line over `[1 : z]` (chart 0) or
/// `[w : 1]` (chart 1), with the chart coordinate `r e^{iφ}`.
pub fn taut_projection(chart: usize, r: f64, phi: f64) -> ComplexMatrix {
    let z = Complex64::from_polar(r, phi);
    let v = if chart == 0 { [ONE, z] } else { [z, ONE] };
    let norm = (1.0 + r * r).sqrt();
    let v = ComplexMatrix::from_column_slice(2, 1, &[v[0] / norm, v[1] / norm]);
    &v * v.adjoint()
}

/// `ψ(θ) = cos(β/2) e₀ + e^{isθ} sin(β/2) e₁` as a projection.
pub fn bloch_projection(colatitude: f64, s: f64, theta: f64) -> ComplexMatrix {
    let (sn, cs) = (colatitude / 2.0).sin_cos();
    let psi = ComplexMatrix::from_column_slice(2, 1, &[Complex64::new(cs, 0.0), Complex64::from_polar(sn, s * theta)]);
    &psi * psi.adjoint()
}

/// Build a map from a descriptor; `res` gives per-axis resolutions (the last
/// entry repeats).
pub fn build(desc: &Descriptor, res: &[usize]) -> Result<Built> {
    let p = &desc.params;
    let plain = |map| Built { map, bandwidth: None, bloch: None };
    match desc.builder.as_str() {
        "loop_zn" => {
            check_params(p, &["n"])?;
            let n = param_i64(p, "n", 1)?;
            let map = SampledMap::from_fn(circle(res)?, Codomain::Unitary, |_, x| scalar(Complex64::from_polar(1.0, n as f64 * x[0])))?;
            Ok(Built { map, bandwidth: Some(n.unsigned_abs() as usize), bloch: None })
        }
        "trig_loop" => {
            check_params(p, &["n", "amplitude"])?;
            let n = param_i64(p, "n", 1)?;
            let a = param_f64(p, "amplitude", 0.3)?;
            let map = SampledMap::from_fn(circle(res)?, Codomain::Unitary, |_, x| {
                scalar(Complex64::from_polar(1.0, n as f64 * x[0] + a * x[0].sin()))
            })?;
            Ok(plain(map))
        }
        "bloch_circle" => {
            check_params(p, &["colatitude", "s"])?;
            let beta = param_f64(p, "colatitude", PI / 2.0)?;
            let s = param_i64(p, "s", 1)? as f64;
            let map = SampledMap::from_fn(circle(res)?, Codomain::Projection, |_, x| bloch_projection(beta, s, x[0]))?;
            Ok(Built { map, bandwidth: Some(1), bloch: Some((beta, s)) })
        }
        "taut_cp1" => {
            check_params(p, &[])?;
            let g = make_domain(DomainKind::Cp1Charts, &pad_res(DomainKind::Cp1Charts, res, 65))?;
            Ok(plain(SampledMap::from_fn(g, Codomain::Projection, |chart, x| taut_projection(chart, x[0], x[1]))?))
        }
        "su2_chart" => {
            check_params(p, &["amplitude", "domain"])?;
            let a = param_f64(p, "amplitude", 0.8)?;
            let kind = match p.get("domain").and_then(Value::as_str) {
                Some(name) => domain_from_name(name)?,
                None if res.len() >= 3 => DomainKind::Torus3,
                None => DomainKind::Torus2,
            };
            let g = make_domain(kind, &pad_res(kind, res, 32))?;
            let s = pauli();
            let i = Complex64::new(0.0, 1.0);
            let map = SampledMap::from_fn(g, Codomain::Unitary, |_, x| {
                let x0 = x[0];
                let x1 = x.get(1).copied().unwrap_or(0.0);
                let x2 = x.get(2).copied().unwrap_or(0.0);
                let c = [a * x0.cos(), a * x1.sin(), a * (x0 + x1 + x2).sin()];
                let h = &s[0] * Complex64::new(c[0], 0.0) + &s[1] * Complex64::new(c[1], 0.0) + &s[2] * Complex64::new(c[2], 0.0);
                expm(&(h * i))
            })?;
            Ok(plain(map))
        }
        "const_identity" => {
            check_params(p, &["n", "domain"])?;
            let n = param_i64(p, "n", 2)?;
            if n < 1 {
                return Err(Error::Format("`n` must be positive".into()));
            }
            let kind = match p.get("domain").and_then(Value::as_str) {
                Some(name) => domain_from_name(name)?,
                None => match res.len() {
                    0 | 1 => DomainKind::Circle,
                    2 => DomainKind::Torus2,
                    _ => DomainKind::Torus3,
                },
            };
            let default = if kind.axis_kinds().len() == 1 { 64 } else { 17 };
            let g = make_domain(kind, &pad_res(kind, res, default))?;
            let id = identity(n as usize);
            let map = SampledMap::from_fn(g, Codomain::Unitary, |_, _| id.clone())?;
            Ok(Built { map, bandwidth: Some(0), bloch: None })
        }
        other => Err(Error::Format(format!("unknown builder `{other}` (known: {})", BUILDERS.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chernforms::ch_even;
    use crate::geomgrid::integrate;
    use crate::numkernel::{frobenius, projection_residual};
    use serde_json::json;

    fn desc(v: Value) -> Descriptor {
        serde_json::from_value(v).unwrap()
    }

    #[test]
    fn every_builder_builds() {
        for name in BUILDERS {
            let b = build(&desc(json!({"builder": name})), &[]).unwrap();
            assert!(b.map.domain().n_nodes() > 0, "{name}");
        }
    }

    #[test]
    fn unknown_builder_and_params() {
        assert!(matches!(build(&desc(json!({"builder": "nope"})), &[]), Err(Error::Format(_))));
        assert!(matches!(build(&desc(json!({"builder": "loop_zn", "params": {"m": 1}})), &[]), Err(Error::Format(_))));
        assert!(matches!(build(&desc(json!({"builder": "loop_zn", "params": {"n": "x"}})), &[]), Err(Error::Format(_))));
    }

    #[test]
    fn taut_charts_agree_on_the_overlap() {
        for phi in [0.0, 1.0, 4.0] {
            // z = e^{iφ} in chart 0 is w = e^{−iφ} in chart 1.
            assert!(frobenius(&(taut_projection(0, 1.0, phi) - taut_projection(1, 1.0, -phi))) < 1e-14);
        }
        assert!(projection_residual(&taut_projection(0, 0.7, 2.0)) < 1e-14);
    }

    #[test]
    fn tautological_chern_number() {
        let b = build(&desc(json!({"builder": "taut_cp1"})), &[201, 32]).unwrap();
        let c = integrate(&ch_even(&b.map, 1).unwrap()).unwrap();
        assert!((c.re.abs() - 1.0).abs() < 1e-6 && c.im.abs() < 1e-9, "{c}");
    }
}
