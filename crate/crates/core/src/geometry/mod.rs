//! Simplicial meshes of the catalog domains with labeled boundary facets.
//!
//! A mesh is immutable after construction; every constructor runs the full
//! invariant check: positive cell volumes, boundary facets exactly the facets
//! incident to one cell, every boundary facet labeled, indices in range.

mod analytic;
mod domains;
mod io;

pub use analytic::AnalyticBoundary;
pub use domains::{generate_mesh, DomainKind, DomainSpec, LabelRule};
pub use io::{load_mesh, save_mesh};

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Boundary condition side a facet belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacetLabel {
    /// Γt: tangential components of admissible fields vanish (fields are normal).
    Tangential,
    /// Γn: normal component of admissible fields vanishes (fields are tangential).
    Normal,
}

/// A boundary facet: `dim` vertex indices plus its label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryFacet {
    pub vertices: Vec<usize>,
    pub label: FacetLabel,
}

/// How boundary normals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalMode {
    /// Plane of the straight facet, oriented outward.
    Facet,
    /// Exact normal of the analytic descriptor.
    Analytic,
}

/// Simplicial mesh: triangles in 2D, tetrahedra in 3D.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<DVector<f64>>,
    cells: Vec<Vec<usize>>,
    boundary: Vec<BoundaryFacet>,
    descriptor: Option<AnalyticBoundary>,
    /// Cell adjacent to each boundary facet (same indexing as `boundary`).
    facet_cell: Vec<usize>,
}

impl Mesh {
    pub fn new(
        dim: usize,
        vertices: Vec<DVector<f64>>,
        cells: Vec<Vec<usize>>,
        boundary: Vec<BoundaryFacet>,
        descriptor: Option<AnalyticBoundary>,
    ) -> Result<Mesh> {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != dim || v.iter().any(|c| !c.is_finite()) {
                return Err(Error::Schema(format!("vertex {i} is not a finite {dim}-vector")));
            }
        }
        if let Some(d) = &descriptor {
            d.validate()?;
            if d.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "descriptor dimension {} vs mesh dimension {dim}",
                    d.dim()
                )));
            }
        }

        let mut mesh = Mesh {
            dim,
            vertices,
            cells,
            boundary,
            descriptor,
            facet_cell: Vec::new(),
        };
        mesh.validate_cells()?;
        mesh.validate_boundary()?;
        Ok(mesh)
    }

    fn validate_cells(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (c, cell) in self.cells.iter().enumerate() {
            if cell.len() != self.dim + 1 {
                return Err(Error::InvalidCell {
                    cell: c,
                    reason: format!("expected {} vertices, got {}", self.dim + 1, cell.len()),
                });
            }
            if cell.iter().any(|&i| i >= nv) {
                return Err(Error::InvalidCell {
                    cell: c,
                    reason: "vertex index out of range".into(),
                });
            }
            let mut sorted = cell.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != cell.len() {
                return Err(Error::InvalidCell {
                    cell: c,
                    reason: "duplicate vertex".into(),
                });
            }
            let vol = self.cell_volume(c);
            if vol.abs() < 1e-14 * self.length_scale().powi(self.dim as i32) {
                return Err(Error::DegenerateCell { cell: c, volume: vol });
            }
            if vol < 0.0 {
                return Err(Error::Orientation { cell: c, volume: vol });
            }
        }
        Ok(())
    }

    fn validate_boundary(&mut self) -> Result<()> {
        // Facets incident to exactly one cell, keyed by sorted vertex tuple.
        let derived = derive_boundary(self.dim, &self.cells)?;

        let mut seen: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        self.facet_cell = vec![usize::MAX; self.boundary.len()];
        for (f, facet) in self.boundary.iter().enumerate() {
            if facet.vertices.len() != self.dim {
                return Err(Error::InvalidFacet {
                    facet: f,
                    reason: format!("expected {} vertices", self.dim),
                });
            }
            let mut key = facet.vertices.clone();
            key.sort_unstable();
            match derived.get(&key) {
                None => {
                    return Err(Error::InvalidFacet {
                        facet: f,
                        reason: "not a boundary facet of the cell complex".into(),
                    })
                }
                Some(&cell) => self.facet_cell[f] = cell,
            }
            if seen.insert(key, f).is_some() {
                return Err(Error::InvalidFacet {
                    facet: f,
                    reason: "listed twice".into(),
                });
            }
        }
        if seen.len() != derived.len() {
            // Some facet of the complex carries no label. Name the first one.
            for (key, &cell) in &derived {
                if !seen.contains_key(key) {
                    return Err(Error::UnlabeledFacet { facet: cell });
                }
            }
        }
        // Outward orientation must be well defined: the facet plane may not
        // contain the adjacent cell centroid.
        for f in 0..self.boundary.len() {
            let n = self.facet_normal_outward(f)?;
            let toward = self.facet_centroid(f) - self.cell_centroid(self.facet_cell[f]);
            if n.dot(&toward) <= 0.0 {
                return Err(Error::InvalidFacet {
                    facet: f,
                    reason: "outward normal undefined".into(),
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.boundary
    }

    pub fn descriptor(&self) -> Option<&AnalyticBoundary> {
        self.descriptor.as_ref()
    }

    /// Cell adjacent to boundary facet `f`.
    pub fn facet_cell(&self, f: usize) -> usize {
        self.facet_cell[f]
    }

    /// Signed volume of cell `c` (positive by the mesh invariant).
    pub fn cell_volume(&self, c: usize) -> f64 {
        let cell = &self.cells[c];
        let p0 = &self.vertices[cell[0]];
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            m.set_column(j, &(&self.vertices[cell[j + 1]] - p0));
        }
        m.determinant() / factorial(self.dim) as f64
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.cells.len()).map(|c| self.cell_volume(c)).sum()
    }

    pub fn cell_centroid(&self, c: usize) -> DVector<f64> {
        let cell = &self.cells[c];
        let mut s = DVector::zeros(self.dim);
        for &i in cell {
            s += &self.vertices[i];
        }
        s / cell.len() as f64
    }

    pub fn facet_centroid(&self, f: usize) -> DVector<f64> {
        let facet = &self.boundary[f].vertices;
        let mut s = DVector::zeros(self.dim);
        for &i in facet {
            s += &self.vertices[i];
        }
        s / facet.len() as f64
    }

    /// Surface measure of boundary facet `f` (length in 2D, area in 3D).
    pub fn facet_area(&self, f: usize) -> f64 {
        let facet = &self.boundary[f].vertices;
        let a = &self.vertices[facet[0]];
        match self.dim {
            2 => (&self.vertices[facet[1]] - a).norm(),
            3 => {
                let u = &self.vertices[facet[1]] - a;
                let v = &self.vertices[facet[2]] - a;
                cross3(&u, &v).norm() / 2.0
            }
            _ => unreachable!(),
        }
    }

    fn facet_normal_outward(&self, f: usize) -> Result<DVector<f64>> {
        let facet = &self.boundary[f].vertices;
        let a = &self.vertices[facet[0]];
        let mut n = match self.dim {
            2 => {
                let t = &self.vertices[facet[1]] - a;
                DVector::from_vec(vec![t[1], -t[0]])
            }
            3 => {
                let u = &self.vertices[facet[1]] - a;
                let v = &self.vertices[facet[2]] - a;
                cross3(&u, &v)
            }
            _ => unreachable!(),
        };
        let norm = n.norm();
        if norm < 1e-300 {
            return Err(Error::InvalidFacet {
                facet: f,
                reason: "zero area".into(),
            });
        }
        n /= norm;
        let toward = self.facet_centroid(f) - self.cell_centroid(self.facet_cell[f]);
        if n.dot(&toward) < 0.0 {
            n = -n;
        }
        Ok(n)
    }

    /// Outer unit normal of boundary facet `f`.
    pub fn boundary_normal(&self, f: usize, mode: NormalMode) -> Result<DVector<f64>> {
        if f >= self.boundary.len() {
            return Err(Error::InvalidArgument(format!("facet index {f} out of range")));
        }
        match mode {
            NormalMode::Facet => self.facet_normal_outward(f),
            NormalMode::Analytic => {
                let d = self.descriptor.as_ref().ok_or(Error::MissingDescriptor)?;
                Ok(d.normal(&self.facet_centroid(f)))
            }
        }
    }

    /// Outer unit normal associated with facet `f`, evaluated at point `x`
    /// (typically one of the facet's vertices). In analytic mode the surface
    /// piece is anchored at the facet centroid so seam vertices stay on the
    /// facet's own piece.
    pub fn boundary_normal_at(
        &self,
        f: usize,
        x: &DVector<f64>,
        mode: NormalMode,
    ) -> Result<DVector<f64>> {
        match mode {
            NormalMode::Facet => self.facet_normal_outward(f),
            NormalMode::Analytic => {
                let d = self.descriptor.as_ref().ok_or(Error::MissingDescriptor)?;
                Ok(d.piece_normal(&self.facet_centroid(f), x))
            }
        }
    }

    /// Normal mode used for boundary constraints: analytic when a descriptor
    /// exists, facet plane otherwise.
    pub fn preferred_normal_mode(&self) -> NormalMode {
        if self.descriptor.is_some() {
            NormalMode::Analytic
        } else {
            NormalMode::Facet
        }
    }

    /// Boundary-vertex adjacency: vertex index -> indices of the boundary
    /// facets containing it, in deterministic order.
    pub fn boundary_vertex_facets(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (f, facet) in self.boundary.iter().enumerate() {
            for &v in &facet.vertices {
                map.entry(v).or_default().push(f);
            }
        }
        map
    }

    /// Same mesh with every vertex scaled by `s > 0` (descriptor included).
    pub fn scaled(&self, s: f64) -> Result<Mesh> {
        if s <= 0.0 {
            return Err(Error::InvalidArgument("scale must be positive".into()));
        }
        Mesh::new(
            self.dim,
            self.vertices.iter().map(|v| v * s).collect(),
            self.cells.clone(),
            self.boundary.clone(),
            self.descriptor.as_ref().map(|d| d.scaled(s)),
        )
    }

    fn length_scale(&self) -> f64 {
        let mut m = 0.0_f64;
        for v in &self.vertices {
            m = m.max(v.amax());
        }
        m.max(1.0)
    }
}

/// Facets of the cell complex incident to exactly one cell, as a map from the
/// sorted vertex tuple to the owning cell.
pub(crate) fn derive_boundary(
    dim: usize,
    cells: &[Vec<usize>],
) -> Result<BTreeMap<Vec<usize>, usize>> {
    let mut count: BTreeMap<Vec<usize>, (usize, usize)> = BTreeMap::new();
    for (c, cell) in cells.iter().enumerate() {
        for omit in 0..cell.len() {
            let mut key: Vec<usize> = cell
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != omit)
                .map(|(_, &v)| v)
                .collect();
            key.sort_unstable();
            let e = count.entry(key).or_insert((0, c));
            e.0 += 1;
            if e.0 > 2 {
                return Err(Error::InvalidCell {
                    cell: c,
                    reason: "facet shared by more than two cells".into(),
                });
            }
        }
    }
    let _ = dim;
    Ok(count
        .into_iter()
        .filter(|(_, (n, _))| *n == 1)
        .map(|(k, (_, c))| (k, c))
        .collect())
}

pub(crate) fn cross3(u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ])
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Orthonormal basis of the tangent plane of a unit normal `n`.
pub fn tangent_basis(n: &DVector<f64>) -> Vec<DVector<f64>> {
    let dim = n.len();
    // start from the coordinate axis least aligned with n
    let mut k = 0;
    for i in 1..dim {
        if n[i].abs() < n[k].abs() {
            k = i;
        }
    }
    let mut t1 = DVector::zeros(dim);
    t1[k] = 1.0;
    t1 -= n * n[k];
    t1 /= t1.norm();
    match dim {
        2 => vec![t1],
        3 => {
            let t2 = cross3(n, &t1);
            vec![t1, t2]
        }
        _ => unreachable!(),
    }
}
