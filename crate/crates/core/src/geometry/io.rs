//! Mesh file format: structured text (JSON) with fields `dim`, `vertices`,
//! `cells`, `boundary` and an optional `descriptor`. Numbers are written with
//! 17 significant digits so a save/load round trip is bit exact.

use nalgebra::DVector;
use serde::Deserialize;

use super::{AnalyticBoundary, BoundaryFacet, FacetLabel, Mesh};
use crate::error::{Error, Result};

#[derive(Deserialize)]
struct MeshFile {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    cells: Vec<Vec<usize>>,
    boundary: Vec<FacetRecord>,
    #[serde(default)]
    descriptor: Option<DescriptorRecord>,
}

#[derive(Deserialize)]
struct FacetRecord {
    facet: Vec<usize>,
    label: String,
}

#[derive(Deserialize)]
struct DescriptorRecord {
    kind: String,
    params: serde_json::Map<String, serde_json::Value>,
}

fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

fn fmt_floats(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| fmt_f64(x)).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_usizes(xs: &[usize]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

/// Serialize a mesh to the text schema.
pub fn save_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"dim\": {},\n", mesh.dim()));

    out.push_str("  \"vertices\": [\n");
    for (i, v) in mesh.vertices().iter().enumerate() {
        let sep = if i + 1 < mesh.vertices().len() { "," } else { "" };
        out.push_str(&format!("    {}{}\n", fmt_floats(v.as_slice()), sep));
    }
    out.push_str("  ],\n");

    out.push_str("  \"cells\": [\n");
    for (i, c) in mesh.cells().iter().enumerate() {
        let sep = if i + 1 < mesh.cells().len() { "," } else { "" };
        out.push_str(&format!("    {}{}\n", fmt_usizes(c), sep));
    }
    out.push_str("  ],\n");

    out.push_str("  \"boundary\": [\n");
    for (i, f) in mesh.boundary_facets().iter().enumerate() {
        let sep = if i + 1 < mesh.boundary_facets().len() { "," } else { "" };
        let label = match f.label {
            FacetLabel::Tangential => "t",
            FacetLabel::Normal => "n",
        };
        out.push_str(&format!(
            "    {{\"facet\": {}, \"label\": \"{}\"}}{}\n",
            fmt_usizes(&f.vertices),
            label,
            sep
        ));
    }
    out.push_str("  ]");

    if let Some(d) = mesh.descriptor() {
        out.push_str(",\n");
        let (kind, params) = match d {
            AnalyticBoundary::Box { lo, hi } => (
                "box",
                format!("\"lo\": {}, \"hi\": {}", fmt_floats(lo), fmt_floats(hi)),
            ),
            AnalyticBoundary::Disk { center, radius } => (
                "disk",
                format!(
                    "\"center\": {}, \"radius\": {}",
                    fmt_floats(center),
                    fmt_f64(*radius)
                ),
            ),
            AnalyticBoundary::Ball { center, radius } => (
                "ball",
                format!(
                    "\"center\": {}, \"radius\": {}",
                    fmt_floats(center),
                    fmt_f64(*radius)
                ),
            ),
            AnalyticBoundary::CylinderSector {
                radius,
                height,
                phi1,
                phi2,
            } => (
                "cylinder_sector",
                format!(
                    "\"radius\": {}, \"height\": {}, \"phi1\": {}, \"phi2\": {}",
                    fmt_f64(*radius),
                    fmt_f64(*height),
                    fmt_f64(*phi1),
                    fmt_f64(*phi2)
                ),
            ),
        };
        out.push_str(&format!(
            "  \"descriptor\": {{\"kind\": \"{}\", \"params\": {{{}}}}}\n",
            kind, params
        ));
    } else {
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

/// Parse and validate a mesh from the text schema. All mesh invariants are
/// re-checked; violations are reported with the offending cell/facet index.
pub fn load_mesh(text: &str) -> Result<Mesh> {
    let file: MeshFile =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let vertices: Vec<DVector<f64>> = file
        .vertices
        .into_iter()
        .map(DVector::from_vec)
        .collect();
    let mut boundary = Vec::with_capacity(file.boundary.len());
    for (i, rec) in file.boundary.into_iter().enumerate() {
        let label = match rec.label.as_str() {
            "t" => FacetLabel::Tangential,
            "n" => FacetLabel::Normal,
            other => {
                return Err(Error::Schema(format!(
                    "boundary record {i}: label must be \"t\" or \"n\", got \"{other}\""
                )))
            }
        };
        boundary.push(BoundaryFacet {
            vertices: rec.facet,
            label,
        });
    }
    let descriptor = match file.descriptor {
        None => None,
        Some(rec) => Some(parse_descriptor(&rec)?),
    };
    Mesh::new(file.dim, vertices, file.cells, boundary, descriptor)
}

fn parse_descriptor(rec: &DescriptorRecord) -> Result<AnalyticBoundary> {
    let num = |key: &str| -> Result<f64> {
        rec.params
            .get(key)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| Error::Schema(format!("descriptor param `{key}` missing or not a number")))
    };
    let arr = |key: &str| -> Result<Vec<f64>> {
        rec.params
            .get(key)
            .and_then(|v| v.as_array())
            .map(|a| a.iter().filter_map(|x| x.as_f64()).collect::<Vec<f64>>())
            .ok_or_else(|| Error::Schema(format!("descriptor param `{key}` missing or not an array")))
    };
    match rec.kind.as_str() {
        "box" => Ok(AnalyticBoundary::Box {
            lo: arr("lo")?,
            hi: arr("hi")?,
        }),
        "disk" => {
            let c = arr("center")?;
            if c.len() != 2 {
                return Err(Error::Schema("disk center must have 2 entries".into()));
            }
            Ok(AnalyticBoundary::Disk {
                center: [c[0], c[1]],
                radius: num("radius")?,
            })
        }
        "ball" => {
            let c = arr("center")?;
            if c.len() != 3 {
                return Err(Error::Schema("ball center must have 3 entries".into()));
            }
            Ok(AnalyticBoundary::Ball {
                center: [c[0], c[1], c[2]],
                radius: num("radius")?,
            })
        }
        "cylinder_sector" => Ok(AnalyticBoundary::CylinderSector {
            radius: num("radius")?,
            height: num("height")?,
            phi1: num("phi1")?,
            phi2: num("phi2")?,
        }),
        other => Err(Error::Schema(format!("unknown descriptor kind `{other}`"))),
    }
}
