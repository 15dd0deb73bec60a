//! Structured mesh generators for the domain catalog: unit square, unit cube,
//! unit disk, unit ball (polyhedral surrogate with exact boundary normals),
//! half cylinder and general cylinder sectors.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;

use super::{derive_boundary, AnalyticBoundary, BoundaryFacet, FacetLabel, Mesh};
use crate::error::{Error, Result};

/// Named domain of the catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    UnitSquare,
    UnitCube,
    UnitDisk,
    UnitBall,
    HalfCylinder,
    CylinderSector { phi1: f64, phi2: f64, radius: f64 },
}

impl DomainKind {
    /// Parse a domain name as used on the command line.
    pub fn parse(name: &str) -> Result<DomainKind> {
        match name {
            "square" | "unit-square" => Ok(DomainKind::UnitSquare),
            "cube" | "unit-cube" => Ok(DomainKind::UnitCube),
            "disk" | "unit-disk" => Ok(DomainKind::UnitDisk),
            "ball" | "unit-ball" => Ok(DomainKind::UnitBall),
            "halfcyl" | "half-cylinder" => Ok(DomainKind::HalfCylinder),
            other => {
                if let Some(rest) = other.strip_prefix("sector:") {
                    let mut phi1 = None;
                    let mut phi2 = None;
                    let mut radius = 1.0;
                    for part in rest.split(';') {
                        let (k, v) = part
                            .split_once('=')
                            .ok_or_else(|| Error::UnknownDomain(other.into()))?;
                        let x: f64 = v
                            .parse()
                            .map_err(|_| Error::InvalidDomain(format!("bad number `{v}`")))?;
                        match k {
                            "phi1" => phi1 = Some(x),
                            "phi2" => phi2 = Some(x),
                            "r" | "radius" => radius = x,
                            _ => return Err(Error::UnknownDomain(other.into())),
                        }
                    }
                    match (phi1, phi2) {
                        (Some(a), Some(b)) => Ok(DomainKind::CylinderSector {
                            phi1: a,
                            phi2: b,
                            radius,
                        }),
                        _ => Err(Error::InvalidDomain("sector needs phi1 and phi2".into())),
                    }
                } else {
                    Err(Error::UnknownDomain(other.into()))
                }
            }
        }
    }
}

/// Geometric predicate assigning Γt/Γn per boundary facet, evaluated at facet
/// centroids so that labels are stable under refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelRule {
    /// Γt = Γ.
    AllTangential,
    /// Γt = ∅.
    AllNormal,
    /// Facets with |ν·e_N| > 0.5 are Γt (top and bottom), the rest Γn.
    CapsTangential,
    /// Facets on the sector's angular planes are Γt, the rest Γn.
    SectorPlanesTangential,
}

impl LabelRule {
    pub fn parse(name: &str) -> Result<LabelRule> {
        match name {
            "all-t" => Ok(LabelRule::AllTangential),
            "all-n" => Ok(LabelRule::AllNormal),
            "caps-t" => Ok(LabelRule::CapsTangential),
            "sector-t" | "flats-t" => Ok(LabelRule::SectorPlanesTangential),
            other => Err(Error::InvalidArgument(format!("unknown label rule `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LabelRule::AllTangential => "all-t",
            LabelRule::AllNormal => "all-n",
            LabelRule::CapsTangential => "caps-t",
            LabelRule::SectorPlanesTangential => "sector-t",
        }
    }

    fn label(
        &self,
        kind: &DomainKind,
        centroid: &DVector<f64>,
        normal: &DVector<f64>,
    ) -> Result<FacetLabel> {
        match self {
            LabelRule::AllTangential => Ok(FacetLabel::Tangential),
            LabelRule::AllNormal => Ok(FacetLabel::Normal),
            LabelRule::CapsTangential => {
                let last = normal.len() - 1;
                if normal[last].abs() > 0.5 {
                    Ok(FacetLabel::Tangential)
                } else {
                    Ok(FacetLabel::Normal)
                }
            }
            LabelRule::SectorPlanesTangential => {
                let (phi1, phi2) = match kind {
                    DomainKind::HalfCylinder => (-FRAC_PI_2, FRAC_PI_2),
                    DomainKind::CylinderSector { phi1, phi2, .. } => (*phi1, *phi2),
                    _ => {
                        return Err(Error::InvalidArgument(
                            "sector-t labels apply to cylinder sectors only".into(),
                        ))
                    }
                };
                for phi in [phi1, phi2] {
                    // distance of the centroid to the plane through the axis
                    let d = -centroid[0] * phi.sin() + centroid[1] * phi.cos();
                    if d.abs() <= 1e-9 {
                        return Ok(FacetLabel::Tangential);
                    }
                }
                Ok(FacetLabel::Normal)
            }
        }
    }
}

type RawMesh = (Vec<DVector<f64>>, Vec<Vec<usize>>, Option<AnalyticBoundary>);

/// A buildable domain: catalog entry, refinement level, labeling rule.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub refinement: usize,
    pub labels: LabelRule,
}

/// Build the mesh of a catalog domain at refinement level `n` (edge lengths
/// about `1/n`). Curved domains carry their analytic descriptor.
pub fn generate_mesh(spec: &DomainSpec) -> Result<Mesh> {
    if spec.refinement == 0 {
        return Err(Error::InvalidDomain("refinement level must be >= 1".into()));
    }
    let n = spec.refinement;
    let (vertices, cells, descriptor) = match &spec.kind {
        DomainKind::UnitSquare => square_grid(n),
        DomainKind::UnitCube => cube_grid(n),
        DomainKind::UnitDisk => disk_fan(n),
        DomainKind::UnitBall => ball_surrogate(n),
        DomainKind::HalfCylinder => sector_prisms(-FRAC_PI_2, FRAC_PI_2, 1.0, n)?,
        DomainKind::CylinderSector { phi1, phi2, radius } => {
            sector_prisms(*phi1, *phi2, *radius, n)?
        }
    };
    assemble(vertices, cells, descriptor, &spec.kind, spec.labels)
}

fn assemble(
    vertices: Vec<DVector<f64>>,
    mut cells: Vec<Vec<usize>>,
    descriptor: Option<AnalyticBoundary>,
    kind: &DomainKind,
    labels: LabelRule,
) -> Result<Mesh> {
    let dim = vertices[0].len();
    // orient every cell positively
    for cell in cells.iter_mut() {
        if simplex_volume(&vertices, cell) < 0.0 {
            cell.swap(dim - 1, dim);
        }
    }
    let derived = derive_boundary(dim, &cells)?;
    let mut boundary = Vec::with_capacity(derived.len());
    for (facet, &cell) in &derived {
        let mut centroid = DVector::zeros(dim);
        for &v in facet {
            centroid += &vertices[v];
        }
        centroid /= dim as f64;
        let normal = outward_normal(&vertices, &cells[cell], facet, &centroid);
        let label = labels.label(kind, &centroid, &normal)?;
        boundary.push(BoundaryFacet {
            vertices: facet.clone(),
            label,
        });
    }
    Mesh::new(dim, vertices, cells, boundary, descriptor)
}

fn simplex_volume(vertices: &[DVector<f64>], cell: &[usize]) -> f64 {
    let dim = vertices[0].len();
    let p0 = &vertices[cell[0]];
    let mut m = nalgebra::DMatrix::zeros(dim, dim);
    for j in 0..dim {
        m.set_column(j, &(&vertices[cell[j + 1]] - p0));
    }
    m.determinant()
}

fn outward_normal(
    vertices: &[DVector<f64>],
    cell: &[usize],
    facet: &[usize],
    centroid: &DVector<f64>,
) -> DVector<f64> {
    let dim = vertices[0].len();
    let a = &vertices[facet[0]];
    let mut n = match dim {
        2 => {
            let t = &vertices[facet[1]] - a;
            DVector::from_vec(vec![t[1], -t[0]])
        }
        _ => {
            let u = &vertices[facet[1]] - a;
            let v = &vertices[facet[2]] - a;
            super::cross3(&u, &v)
        }
    };
    n /= n.norm();
    let mut cc = DVector::zeros(dim);
    for &v in cell {
        cc += &vertices[v];
    }
    cc /= cell.len() as f64;
    if n.dot(&(centroid - cc)) < 0.0 {
        n = -n;
    }
    n
}

fn square_grid(n: usize) -> RawMesh {
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(DVector::from_vec(vec![i as f64 * h, j as f64 * h]));
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.push(vec![a, b, c]);
            cells.push(vec![a, c, d]);
        }
    }
    let descriptor = AnalyticBoundary::Box {
        lo: vec![0.0, 0.0],
        hi: vec![1.0, 1.0],
    };
    (vertices, cells, Some(descriptor))
}

fn cube_grid(n: usize) -> RawMesh {
    let h = 1.0 / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let (vertices, cells) = kuhn_tets(&grid);
    let descriptor = AnalyticBoundary::Box {
        lo: vec![0.0, 0.0, 0.0],
        hi: vec![1.0, 1.0, 1.0],
    };
    (vertices, cells, Some(descriptor))
}

/// Kuhn (Freudenthal) decomposition of a structured grid into six tetrahedra
/// per hex cell, consistent across cell interfaces and nested under dyadic
/// refinement.
fn kuhn_tets(grid: &[f64]) -> (Vec<DVector<f64>>, Vec<Vec<usize>>) {
    let n = grid.len() - 1;
    let idx = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1).pow(3));
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(DVector::from_vec(vec![grid[i], grid[j], grid[k]]));
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut cells = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut at = [i, j, k];
                    let mut tet = vec![idx(at[0], at[1], at[2])];
                    for &axis in &perm {
                        at[axis] += 1;
                        tet.push(idx(at[0], at[1], at[2]));
                    }
                    cells.push(tet);
                }
            }
        }
    }
    (vertices, cells)
}

fn disk_fan(n: usize) -> RawMesh {
    let m = 8 * n; // angular sectors
    let mut vertices = vec![DVector::from_vec(vec![0.0, 0.0])];
    for ring in 1..=n {
        let r = ring as f64 / n as f64;
        for k in 0..m {
            let theta = 2.0 * PI * k as f64 / m as f64;
            vertices.push(DVector::from_vec(vec![r * theta.cos(), r * theta.sin()]));
        }
    }
    let ring_start = |ring: usize| 1 + (ring - 1) * m;
    let mut cells = Vec::new();
    for k in 0..m {
        cells.push(vec![0, ring_start(1) + k, ring_start(1) + (k + 1) % m]);
    }
    for ring in 1..n {
        let (inner, outer) = (ring_start(ring), ring_start(ring + 1));
        for k in 0..m {
            let k1 = (k + 1) % m;
            cells.push(vec![inner + k, outer + k, outer + k1]);
            cells.push(vec![inner + k, outer + k1, inner + k1]);
        }
    }
    let descriptor = AnalyticBoundary::Disk {
        center: [0.0, 0.0],
        radius: 1.0,
    };
    (vertices, cells, Some(descriptor))
}

/// Polyhedral ball surrogate: the cube `[-1,1]^3` mapped radially onto the
/// ball, with boundary vertices landing on the unit sphere.
fn ball_surrogate(n: usize) -> RawMesh {
    let divisions = 2 * n;
    let grid: Vec<f64> = (0..=divisions)
        .map(|i| -1.0 + 2.0 * i as f64 / divisions as f64)
        .collect();
    let (mut vertices, cells) = kuhn_tets(&grid);
    for v in vertices.iter_mut() {
        let linf = v.amax();
        let l2 = v.norm();
        if l2 > 0.0 {
            *v *= linf / l2;
        }
    }
    let descriptor = AnalyticBoundary::Ball {
        center: [0.0, 0.0, 0.0],
        radius: 1.0,
    };
    (vertices, cells, Some(descriptor))
}

/// Wedge profile mesh (2D) extruded into prisms, each split into three
/// tetrahedra along globally sorted vertex order so that neighboring prisms
/// agree on quad-face diagonals.
fn sector_prisms(
    phi1: f64,
    phi2: f64,
    radius: f64,
    n: usize,
) -> Result<RawMesh> {
    let descriptor = AnalyticBoundary::CylinderSector {
        radius,
        height: 1.0,
        phi1,
        phi2,
    };
    descriptor.validate()?;

    // 2D profile: rings of m+1 angular samples plus the apex.
    let nr = (n as f64 * radius).ceil().max(1.0) as usize;
    let m = ((phi2 - phi1) * radius * n as f64).ceil().max(2.0) as usize;
    let mut profile = vec![[0.0, 0.0]];
    for ring in 1..=nr {
        let r = radius * ring as f64 / nr as f64;
        for k in 0..=m {
            let phi = phi1 + (phi2 - phi1) * k as f64 / m as f64;
            profile.push([r * phi.cos(), r * phi.sin()]);
        }
    }
    let ring_start = |ring: usize| 1 + (ring - 1) * (m + 1);
    let mut tris = Vec::new();
    for k in 0..m {
        tris.push([0, ring_start(1) + k, ring_start(1) + k + 1]);
    }
    for ring in 1..nr {
        let (inner, outer) = (ring_start(ring), ring_start(ring + 1));
        for k in 0..m {
            tris.push([inner + k, outer + k, outer + k + 1]);
            tris.push([inner + k, outer + k + 1, inner + k + 1]);
        }
    }

    // extrude
    let nv2 = profile.len();
    let layers = n;
    let mut vertices = Vec::with_capacity(nv2 * (layers + 1));
    for l in 0..=layers {
        let z = l as f64 / layers as f64;
        for p in &profile {
            vertices.push(DVector::from_vec(vec![p[0], p[1], z]));
        }
    }
    let mut cells = Vec::with_capacity(3 * tris.len() * layers);
    for l in 0..layers {
        let (lo, hi) = (l * nv2, (l + 1) * nv2);
        for tri in &tris {
            let mut s = *tri;
            s.sort_unstable();
            let [p, q, r] = s;
            cells.push(vec![lo + p, lo + q, lo + r, hi + p]);
            cells.push(vec![lo + q, lo + r, hi + p, hi + q]);
            cells.push(vec![lo + r, hi + p, hi + q, hi + r]);
        }
    }
    Ok((vertices, cells, Some(descriptor)))
}
