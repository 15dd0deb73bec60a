//! Compact command-line grammars for vector fields and analytic boundaries:
//! `rot:sigma=<x,y,z>;b=<x,y,z>;omega=<w>`, `rot2:omega=<w>;center=<x,y>`,
//! `const:<x,y[,z]>`, `lin:a=<row-major matrix>[;b=<shift>]`, and
//! `disk:`/`ball:`/`box:`/`halfcyl`/`sector:` for boundaries.

use kornlab::geometry::AnalyticBoundary;
use kornlab::rigid::RigidMotion;
use nalgebra::{DMatrix, DVector};

/// A field expressible on the command line: a rigid motion or a general
/// affine field `A x + b`.
pub enum FieldSpec {
    Rigid(RigidMotion),
    Affine { a: DMatrix<f64>, b: DVector<f64> },
}

impl FieldSpec {
    pub fn dim(&self) -> usize {
        match self {
            FieldSpec::Rigid(r) => r.dim(),
            FieldSpec::Affine { b, .. } => b.len(),
        }
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            FieldSpec::Rigid(r) => r.evaluate(x),
            FieldSpec::Affine { a, b } => a * x + b,
        }
    }

    /// The rigid motion, when the spec is one (flows are defined for rigid
    /// motions only).
    pub fn as_rigid(&self) -> Result<&RigidMotion, String> {
        match self {
            FieldSpec::Rigid(r) => Ok(r),
            FieldSpec::Affine { .. } => {
                Err("this command needs a rigid-motion field (const:/rot:/rot2:)".into())
            }
        }
    }
}

pub fn parse_numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{p}`"))
        })
        .collect()
}

fn parse_kv(body: &str) -> Result<Vec<(&str, &str)>, String> {
    body.split(';')
        .filter(|p| !p.is_empty())
        .map(|part| {
            part.split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{part}`"))
        })
        .collect()
}

/// Parse a field spec.
pub fn parse_field(text: &str) -> Result<FieldSpec, String> {
    if let Some(body) = text.strip_prefix("const:") {
        let v = parse_numbers(body)?;
        if !(2..=3).contains(&v.len()) {
            return Err("const field needs 2 or 3 components".into());
        }
        return RigidMotion::translation(DVector::from_vec(v))
            .map(FieldSpec::Rigid)
            .map_err(|e| e.to_string());
    }
    if let Some(body) = text.strip_prefix("lin:") {
        let mut a_entries = None;
        let mut shift = None;
        for (k, v) in parse_kv(body)? {
            match k {
                "a" => a_entries = Some(parse_numbers(v)?),
                "b" => shift = Some(parse_numbers(v)?),
                other => return Err(format!("unknown lin key `{other}`")),
            }
        }
        let entries = a_entries.ok_or("lin needs a=<row-major matrix entries>")?;
        let dim = match entries.len() {
            4 => 2,
            9 => 3,
            n => return Err(format!("lin matrix needs 4 or 9 entries, got {n}")),
        };
        let b = match shift {
            Some(s) if s.len() == dim => DVector::from_vec(s),
            Some(_) => return Err("lin shift dimension mismatch".into()),
            None => DVector::zeros(dim),
        };
        return Ok(FieldSpec::Affine {
            a: DMatrix::from_row_slice(dim, dim, &entries),
            b,
        });
    }
    if let Some(body) = text.strip_prefix("rot2:") {
        let mut omega = 1.0;
        let mut center = [0.0, 0.0];
        for (k, v) in parse_kv(body)? {
            match k {
                "omega" => omega = v.parse().map_err(|_| format!("bad number `{v}`"))?,
                "center" => {
                    let c = parse_numbers(v)?;
                    if c.len() != 2 {
                        return Err("center needs 2 components".into());
                    }
                    center = [c[0], c[1]];
                }
                other => return Err(format!("unknown rot2 key `{other}`")),
            }
        }
        // r(x) = ω (-(x2-c2), x1-c1)
        let shift = DVector::from_vec(vec![omega * center[1], -omega * center[0]]);
        return RigidMotion::new(2, vec![omega], shift)
            .map(FieldSpec::Rigid)
            .map_err(|e| e.to_string());
    }
    if let Some(body) = text.strip_prefix("rot:") {
        let mut sigma = vec![0.0, 0.0, 1.0];
        let mut b = vec![0.0, 0.0, 0.0];
        let mut omega = 1.0;
        for (k, v) in parse_kv(body)? {
            match k {
                "sigma" => sigma = parse_numbers(v)?,
                "b" => b = parse_numbers(v)?,
                "omega" => omega = v.parse().map_err(|_| format!("bad number `{v}`"))?,
                other => return Err(format!("unknown rot key `{other}`")),
            }
        }
        if sigma.len() != 3 || b.len() != 3 {
            return Err("rot needs 3-component sigma and b".into());
        }
        let norm = (sigma[0] * sigma[0] + sigma[1] * sigma[1] + sigma[2] * sigma[2]).sqrt();
        if norm == 0.0 {
            return Err("sigma must be nonzero".into());
        }
        let spin: Vec<f64> = sigma.iter().map(|s| omega * s / norm).collect();
        return RigidMotion::new(3, spin, DVector::from_vec(b))
            .map(FieldSpec::Rigid)
            .map_err(|e| e.to_string());
    }
    Err(format!(
        "unknown field spec `{text}` (use const:…, rot:…, rot2:…, lin:…)"
    ))
}

/// Parse an analytic boundary spec.
pub fn parse_boundary(text: &str) -> Result<AnalyticBoundary, String> {
    let (kind, body) = match text.split_once(':') {
        Some((k, b)) => (k, b),
        None => (text, ""),
    };
    let kv = parse_kv(body)?;
    let get = |key: &str| kv.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
    let num = |key: &str, default: f64| -> Result<f64, String> {
        match get(key) {
            Some(v) => v.parse().map_err(|_| format!("bad number `{v}`")),
            None => Ok(default),
        }
    };
    let b = match kind {
        "disk" => {
            let c = match get("center") {
                Some(v) => parse_numbers(v)?,
                None => vec![0.0, 0.0],
            };
            AnalyticBoundary::Disk {
                center: [c[0], c[1]],
                radius: num("radius", 1.0)?,
            }
        }
        "ball" => {
            let c = match get("center") {
                Some(v) => parse_numbers(v)?,
                None => vec![0.0, 0.0, 0.0],
            };
            AnalyticBoundary::Ball {
                center: [c[0], c[1], c[2]],
                radius: num("radius", 1.0)?,
            }
        }
        "box" => {
            let lo = parse_numbers(get("lo").ok_or("box needs lo")?)?;
            let hi = parse_numbers(get("hi").ok_or("box needs hi")?)?;
            AnalyticBoundary::Box { lo, hi }
        }
        "halfcyl" => AnalyticBoundary::CylinderSector {
            radius: num("radius", 1.0)?,
            height: num("height", 1.0)?,
            phi1: -std::f64::consts::FRAC_PI_2,
            phi2: std::f64::consts::FRAC_PI_2,
        },
        "sector" => AnalyticBoundary::CylinderSector {
            radius: num("radius", 1.0)?,
            height: num("height", 1.0)?,
            phi1: num("phi1", 0.0)?,
            phi2: num("phi2", 1.0)?,
        },
        other => return Err(format!("unknown boundary kind `{other}`")),
    };
    b.validate().map_err(|e| e.to_string())?;
    Ok(b)
}
