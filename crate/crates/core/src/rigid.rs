//! Rigid-motion algebra: bases of the skew matrices and the rigid motions,
//! the skew-mean projector, numerical boundary-condition kernels, rotation
//! axis extraction and the mixed boundary classification.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{tangent_basis, FacetLabel, Mesh};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Affine field `r(x) = S x + a` with `S` skew-symmetric, stored by the
/// independent entries of `S` so skewness is exact. In 3D `S x = w ∧ x` where
/// `w` is the axial vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidMotion {
    dim: usize,
    /// Independent skew entries: `[s]` in 2D (`S = [[0,-s],[s,0]]`),
    /// the axial vector `[w1,w2,w3]` in 3D.
    spin: Vec<f64>,
    shift: DVector<f64>,
}

impl RigidMotion {
    pub fn new(dim: usize, spin: Vec<f64>, shift: DVector<f64>) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if spin.len() != dim * (dim - 1) / 2 || shift.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "spin needs {} entries and shift {} for dimension {dim}",
                dim * (dim - 1) / 2,
                dim
            )));
        }
        Ok(RigidMotion { dim, spin, shift })
    }

    /// Pure translation.
    pub fn translation(shift: DVector<f64>) -> Result<Self> {
        let dim = shift.len();
        Self::new(dim, vec![0.0; dim * (dim - 1) / 2], shift)
    }

    /// 3D rotation field `r(x) = direction ∧ (x - point)`.
    pub fn about_axis(direction: &DVector<f64>, point: &DVector<f64>) -> Result<Self> {
        if direction.len() != 3 || point.len() != 3 {
            return Err(Error::UnsupportedDimension(direction.len()));
        }
        // direction ∧ (x - point) = direction ∧ x - direction ∧ point
        let shift = -crate::geometry::cross3(direction, point);
        Self::new(3, vec![direction[0], direction[1], direction[2]], shift)
    }

    /// Build from a full matrix and shift; fails unless `S` is skew.
    pub fn from_parts(spin: &DMatrix<f64>, shift: &DVector<f64>) -> Result<Self> {
        let dim = shift.len();
        if spin.nrows() != dim || spin.ncols() != dim {
            return Err(Error::DimensionMismatch("spin matrix shape".into()));
        }
        let asym = (spin + spin.transpose()).norm();
        if asym > 1e-12 * (1.0 + spin.norm()) {
            return Err(Error::InvalidArgument("matrix is not skew-symmetric".into()));
        }
        let entries = match dim {
            2 => vec![spin[(1, 0)]],
            3 => vec![spin[(2, 1)], spin[(0, 2)], spin[(1, 0)]],
            d => return Err(Error::UnsupportedDimension(d)),
        };
        Self::new(dim, entries, shift.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    /// The skew matrix `S` with `r(x) = S x + a`.
    pub fn spin_matrix(&self) -> DMatrix<f64> {
        match self.dim {
            2 => DMatrix::from_row_slice(2, 2, &[0.0, -self.spin[0], self.spin[0], 0.0]),
            _ => {
                let [w1, w2, w3] = [self.spin[0], self.spin[1], self.spin[2]];
                DMatrix::from_row_slice(3, 3, &[0.0, -w3, w2, w3, 0.0, -w1, -w2, w1, 0.0])
            }
        }
    }

    /// Gradient in the transpose-Jacobian convention: `∇r = Sᵀ = -S`.
    pub fn gradient(&self) -> DMatrix<f64> {
        -self.spin_matrix()
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> DVector<f64> {
        match self.dim {
            2 => DVector::from_vec(vec![
                -self.spin[0] * x[1] + self.shift[0],
                self.spin[0] * x[0] + self.shift[1],
            ]),
            _ => {
                let [w1, w2, w3] = [self.spin[0], self.spin[1], self.spin[2]];
                DVector::from_vec(vec![
                    w2 * x[2] - w3 * x[1] + self.shift[0],
                    w3 * x[0] - w1 * x[2] + self.shift[1],
                    w1 * x[1] - w2 * x[0] + self.shift[2],
                ])
            }
        }
    }

    /// Angular speed: the norm of the axial part.
    pub fn angular_speed(&self) -> f64 {
        self.spin.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    /// Coefficients in the orthonormal rigid basis (skew part in Frobenius
    /// scaling, then the translations).
    pub fn coefficients(&self) -> DVector<f64> {
        let mut c = Vec::with_capacity(self.spin.len() + self.dim);
        c.extend(self.spin.iter().map(|s| s * SQRT2));
        c.extend(self.shift.iter());
        DVector::from_vec(c)
    }

    pub fn from_coefficients(dim: usize, c: &DVector<f64>) -> Result<Self> {
        let ns = dim * (dim - 1) / 2;
        if c.len() != ns + dim {
            return Err(Error::DimensionMismatch("coefficient count".into()));
        }
        let spin: Vec<f64> = (0..ns).map(|k| c[k] / SQRT2).collect();
        let shift = DVector::from_iterator(dim, (0..dim).map(|i| c[ns + i]));
        Self::new(dim, spin, shift)
    }

    /// L²-coefficient norm: `(|S|_F² + |a|²)^{1/2}`.
    pub fn coefficient_norm(&self) -> f64 {
        self.coefficients().norm()
    }
}

/// Orthonormal (Frobenius) basis of the skew-symmetric `n×n` matrices.
pub fn so_basis(n: usize) -> Result<Vec<DMatrix<f64>>> {
    let motions = rigid_basis(n)?;
    Ok(motions
        .iter()
        .take(n * (n - 1) / 2)
        .map(|m| m.spin_matrix())
        .collect())
}

/// Orthonormal basis of the rigid motions in the L²-coefficient metric: the
/// `so` basis as motions followed by the unit translations.
pub fn rigid_basis(n: usize) -> Result<Vec<RigidMotion>> {
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    let ns = n * (n - 1) / 2;
    let mut out = Vec::with_capacity(ns + n);
    for k in 0..ns {
        let mut spin = vec![0.0; ns];
        spin[k] = 1.0 / SQRT2;
        out.push(RigidMotion::new(n, spin, DVector::zeros(n))?);
    }
    for i in 0..n {
        let mut shift = DVector::zeros(n);
        shift[i] = 1.0;
        out.push(RigidMotion::new(n, vec![0.0; ns], shift)?);
    }
    Ok(out)
}

/// Volume-weighted mean of the skew parts of per-cell gradient matrices:
/// `(1/|Ω|) Σ_c vol_c skw(G_c)`, exact for piecewise-constant gradients.
pub fn skw_mean(mesh: &Mesh, gradient_field: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    if gradient_field.len() != mesh.cells().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} gradient matrices for {} cells",
            gradient_field.len(),
            mesh.cells().len()
        )));
    }
    let n = mesh.dim();
    let mut acc = DMatrix::zeros(n, n);
    let mut volume = 0.0;
    for (c, g) in gradient_field.iter().enumerate() {
        let vol = mesh.cell_volume(c);
        acc += (g - g.transpose()) * (0.5 * vol);
        volume += vol;
    }
    Ok(acc / volume)
}

/// One scalar boundary-condition row: the `direction` component of the field
/// at `vertex` vanishes, weighted by the square root of the vertex's share of
/// the facet area.
#[derive(Debug, Clone)]
pub struct BcRow {
    pub vertex: usize,
    pub facet: usize,
    pub label: FacetLabel,
    pub weight: f64,
    pub direction: DVector<f64>,
}

/// Enumerate the boundary-condition rows of a labeled mesh: for every boundary
/// vertex and every adjacent Γt facet the tangential components vanish, for
/// every adjacent Γn facet the normal component vanishes. Normals are analytic
/// when the mesh carries a descriptor.
pub fn boundary_rows(mesh: &Mesh) -> Result<Vec<BcRow>> {
    let mode = mesh.preferred_normal_mode();
    let mut rows = Vec::new();
    for (vertex, facets) in mesh.boundary_vertex_facets() {
        let x = &mesh.vertices()[vertex];
        for f in facets {
            let facet = &mesh.boundary_facets()[f];
            let weight = (mesh.facet_area(f) / mesh.dim() as f64).sqrt();
            let normal = mesh.boundary_normal_at(f, x, mode)?;
            match facet.label {
                FacetLabel::Tangential => {
                    for t in tangent_basis(&normal) {
                        rows.push(BcRow {
                            vertex,
                            facet: f,
                            label: facet.label,
                            weight,
                            direction: t,
                        });
                    }
                }
                FacetLabel::Normal => rows.push(BcRow {
                    vertex,
                    facet: f,
                    label: facet.label,
                    weight,
                    direction: normal,
                }),
            }
        }
    }
    Ok(rows)
}

/// Numerically computed kernel of the boundary conditions within the rigid
/// motions, together with the gradient space K it spans.
#[derive(Debug, Clone)]
pub struct KernelReport {
    /// Rigid motions admissible under the boundary conditions.
    pub basis: Vec<RigidMotion>,
    /// Orthonormal skew matrices spanning K (zero spins removed).
    pub gradient_basis: Vec<DMatrix<f64>>,
    /// Full singular-value spectrum of the constraint matrix (descending).
    pub singular_values: Vec<f64>,
    /// Boundary residual of each basis motion, relative to the spectrum scale.
    pub residuals: Vec<f64>,
    pub tolerance: f64,
}

impl KernelReport {
    pub fn kernel_dim(&self) -> usize {
        self.gradient_basis.len()
    }
}

fn constraint_matrix(mesh: &Mesh, motions: &[RigidMotion]) -> Result<DMatrix<f64>> {
    let rows = boundary_rows(mesh)?;
    let m = rows.len().max(motions.len());
    let mut c = DMatrix::zeros(m, motions.len());
    for (i, row) in rows.iter().enumerate() {
        let x = &mesh.vertices()[row.vertex];
        for (j, motion) in motions.iter().enumerate() {
            c[(i, j)] = row.weight * row.direction.dot(&motion.evaluate(x));
        }
    }
    Ok(c)
}

/// Right singular vectors of `c` with singular value below `tol` relative to
/// the largest one (absolute when the matrix vanishes), plus the spectrum.
fn relative_null_space(c: &DMatrix<f64>, tol: f64) -> (Vec<(DVector<f64>, f64)>, Vec<f64>) {
    let d = c.ncols();
    let svd = c.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd with v requested");
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let spectrum: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let scale = if spectrum[0] > 0.0 { spectrum[0] } else { 1.0 };
    let mut null = Vec::new();
    for &k in &order {
        let sigma = svd.singular_values[k];
        if sigma <= tol * scale {
            null.push((v_t.row(k).transpose(), sigma / scale));
        }
    }
    (null, spectrum)
}

/// Kernel `K` of the boundary conditions: the rigid motions whose constrained
/// boundary components vanish, detected by a tolerance-based SVD on the rigid
/// coefficient space. With Γt = Γ this is `{0}` on every catalog domain.
pub fn compute_kernel_k(mesh: &Mesh, tol: f64) -> Result<KernelReport> {
    if tol <= 0.0 {
        return Err(Error::NonPositiveTolerance(tol));
    }
    let motions = rigid_basis(mesh.dim())?;
    let c = constraint_matrix(mesh, &motions)?;
    let (null, spectrum) = relative_null_space(&c, tol);

    let mut basis = Vec::new();
    let mut residuals = Vec::new();
    for (coeffs, res) in &null {
        basis.push(RigidMotion::from_coefficients(mesh.dim(), coeffs)?);
        residuals.push(*res);
    }

    // Orthonormalize the nonzero spins in the Frobenius inner product.
    let mut gradient_basis: Vec<DMatrix<f64>> = Vec::new();
    for motion in &basis {
        let mut g = motion.gradient();
        for q in &gradient_basis {
            let proj = (q.transpose() * &g).trace();
            g -= q * proj;
        }
        let norm = g.norm();
        if norm > 1e-8 * motion.coefficient_norm().max(1.0) {
            gradient_basis.push(g / norm);
        }
    }

    Ok(KernelReport {
        basis,
        gradient_basis,
        singular_values: spectrum,
        residuals,
        tolerance: tol,
    })
}

/// Admissible constant fields: the same constraint machinery restricted to
/// translations. Returns an orthonormal basis.
pub fn compute_constant_kernel(mesh: &Mesh, tol: f64) -> Result<Vec<DVector<f64>>> {
    if tol <= 0.0 {
        return Err(Error::NonPositiveTolerance(tol));
    }
    let dim = mesh.dim();
    let translations: Vec<RigidMotion> = rigid_basis(dim)?
        .into_iter()
        .skip(dim * (dim - 1) / 2)
        .collect();
    let c = constraint_matrix(mesh, &translations)?;
    let (null, _) = relative_null_space(&c, tol);
    Ok(null.into_iter().map(|(v, _)| v).collect())
}

/// Rotation axis of a rigid motion.
#[derive(Debug, Clone)]
pub struct Axis {
    /// Unit direction σ.
    pub direction: DVector<f64>,
    /// Representative point `p = (1/ω) σ ∧ b`, orthogonal to σ.
    pub point: DVector<f64>,
    /// True iff ⟨σ, b⟩ ≈ 0, the bounded-domain compatibility condition.
    pub valid: bool,
}

/// Extract the rotation axis of a nonconstant 3D rigid motion: direction from
/// the axial vector, point `p = (1/ω) σ ∧ b`.
pub fn detect_axis(r: &RigidMotion) -> Result<Axis> {
    if r.dim() != 3 {
        return Err(Error::UnsupportedDimension(r.dim()));
    }
    let omega = r.angular_speed();
    if omega <= 1e-10 * (1.0 + r.shift().norm()) {
        return Err(Error::NoAxis);
    }
    let sigma = DVector::from_vec(vec![
        r.spin[0] / omega,
        r.spin[1] / omega,
        r.spin[2] / omega,
    ]);
    let b = r.shift();
    let point = crate::geometry::cross3(&sigma, b) / omega;
    let valid = sigma.dot(b).abs() <= 1e-10 * (b.norm() + 1.0);
    Ok(Axis {
        direction: sigma,
        point,
        valid,
    })
}

/// Classification of one boundary facet against a candidate rigid motion.
#[derive(Debug, Clone)]
pub struct FacetClassification {
    pub facet: usize,
    pub label: FacetLabel,
    pub pass: bool,
    pub residual: f64,
}

/// Per-facet check of the mixed-boundary structure theorem: every Γt facet
/// must lie in a plane containing the rotation axis, every Γn facet must be
/// tangential to the motion at its vertices.
pub fn classify_mixed(mesh: &Mesh, r: &RigidMotion, tol: f64) -> Result<Vec<FacetClassification>> {
    if tol <= 0.0 {
        return Err(Error::NonPositiveTolerance(tol));
    }
    let axis = detect_axis(r)?;
    let mode = mesh.preferred_normal_mode();
    let mut out = Vec::with_capacity(mesh.boundary_facets().len());
    for (f, facet) in mesh.boundary_facets().iter().enumerate() {
        let (pass, residual) = match facet.label {
            FacetLabel::Tangential => {
                let n_f = mesh.boundary_normal(f, crate::geometry::NormalMode::Facet)?;
                let centroid = mesh.facet_centroid(f);
                let align = n_f.dot(&axis.direction).abs();
                let offset = n_f.dot(&(&axis.point - &centroid)).abs();
                (align <= tol && offset <= tol, align.max(offset))
            }
            FacetLabel::Normal => {
                let mut worst = 0.0_f64;
                for &v in &facet.vertices {
                    let x = &mesh.vertices()[v];
                    let nu = mesh.boundary_normal_at(f, x, mode)?;
                    let val = r.evaluate(x);
                    worst = worst.max(nu.dot(&val).abs() / (val.norm() + tol));
                }
                (worst <= tol, worst)
            }
        };
        out.push(FacetClassification {
            facet: f,
            label: facet.label,
            pass,
            residual,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_mesh, DomainKind, DomainSpec, LabelRule};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn mesh_of(kind: DomainKind, n: usize, labels: LabelRule) -> Mesh {
        generate_mesh(&DomainSpec {
            kind,
            refinement: n,
            labels,
        })
        .unwrap()
    }

    #[test]
    fn basis_counts_and_orthonormality() {
        assert_eq!(so_basis(2).unwrap().len(), 1);
        assert_eq!(so_basis(3).unwrap().len(), 3);
        assert_eq!(rigid_basis(2).unwrap().len(), 3);
        assert_eq!(rigid_basis(3).unwrap().len(), 6);
        assert!(matches!(so_basis(4), Err(Error::UnsupportedDimension(4))));

        let sos = so_basis(3).unwrap();
        for (i, a) in sos.iter().enumerate() {
            for (j, b) in sos.iter().enumerate() {
                let gram = (a.transpose() * b).trace();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(gram, expected, epsilon = 1e-15);
            }
        }
        for m in rigid_basis(3).unwrap() {
            assert_relative_eq!(m.coefficient_norm(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn skw_mean_of_identity_field_vanishes() {
        let mesh = mesh_of(DomainKind::UnitSquare, 2, LabelRule::AllTangential);
        let grads = vec![DMatrix::identity(2, 2); mesh.cells().len()];
        let s = skw_mean(&mesh, &grads).unwrap();
        assert!(s.norm() < 1e-15);
    }

    #[test]
    fn skw_mean_of_rotation_matches_hand_value() {
        // v(x) = (-x2, x1): Jacobian [[0,-1],[1,0]], transposed-Jacobian
        // gradient [[0,1],[-1,0]]; its skew part is itself.
        let mesh = mesh_of(DomainKind::UnitSquare, 3, LabelRule::AllTangential);
        let grad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let grads = vec![grad.clone(); mesh.cells().len()];
        let s = skw_mean(&mesh, &grads).unwrap();
        assert_relative_eq!((s - grad).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn skw_mean_is_linear_and_volume_weighted() {
        let mesh = mesh_of(DomainKind::UnitSquare, 1, LabelRule::AllTangential);
        // two cells of volume 1/2 each; one asymmetric gradient, one zero
        let g1 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let g0 = DMatrix::zeros(2, 2);
        let s = skw_mean(&mesh, &[g1, g0]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 0.25, -0.25, 0.0]);
        assert_relative_eq!((s - expected).norm(), 0.0, epsilon = 1e-15);

        let wrong = skw_mean(&mesh, &[DMatrix::zeros(2, 2)]);
        assert!(matches!(wrong, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn full_tangential_cube_has_trivial_kernel() {
        let mesh = mesh_of(DomainKind::UnitCube, 2, LabelRule::AllTangential);
        let report = compute_kernel_k(&mesh, 1e-8).unwrap();
        assert_eq!(report.kernel_dim(), 0);
        assert!(report.basis.is_empty());
    }

    #[test]
    fn half_cylinder_kernel_is_axis_rotation() {
        let mesh = mesh_of(DomainKind::HalfCylinder, 2, LabelRule::SectorPlanesTangential);
        let report = compute_kernel_k(&mesh, 1e-8).unwrap();
        assert_eq!(report.kernel_dim(), 1);
        assert_eq!(report.basis.len(), 1);
        let motion = &report.basis[0];
        // proportional to r(x) = (-x2, x1, 0): axial vector along e3, no shift
        let c = motion.coefficients();
        let scale = c.norm();
        assert!(scale > 0.0);
        assert_relative_eq!(c[0] / scale, 0.0, epsilon = 1e-9);
        assert_relative_eq!(c[1] / scale, 0.0, epsilon = 1e-9);
        assert_relative_eq!(c[2].abs() / scale, 1.0, epsilon = 1e-9);
        for res in &report.residuals {
            assert!(*res <= report.tolerance);
        }
    }

    #[test]
    fn disk_all_normal_kernel_is_plane_rotation() {
        let mesh = mesh_of(DomainKind::UnitDisk, 4, LabelRule::AllNormal);
        let report = compute_kernel_k(&mesh, 1e-8).unwrap();
        assert_eq!(report.kernel_dim(), 1);
        // gradient basis elements are exactly skew
        for g in &report.gradient_basis {
            assert_eq!((g + g.transpose()).norm(), 0.0);
            assert_relative_eq!(g.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cube_caps_constant_kernel_is_vertical() {
        let mesh = mesh_of(DomainKind::UnitCube, 2, LabelRule::CapsTangential);
        let consts = compute_constant_kernel(&mesh, 1e-8).unwrap();
        assert_eq!(consts.len(), 1);
        let v = &consts[0];
        assert_relative_eq!(v[0], 0.0, epsilon = 1e-10);
        assert_relative_eq!(v[1], 0.0, epsilon = 1e-10);
        assert_relative_eq!(v[2].abs(), 1.0, epsilon = 1e-10);
        // but the gradient kernel K is trivial on the cube
        let report = compute_kernel_k(&mesh, 1e-8).unwrap();
        assert_eq!(report.kernel_dim(), 0);
    }

    #[test]
    fn square_vertical_faces_constant_kernel() {
        let mesh = mesh_of(DomainKind::UnitSquare, 2, LabelRule::CapsTangential);
        let consts = compute_constant_kernel(&mesh, 1e-8).unwrap();
        assert_eq!(consts.len(), 1);
        assert_relative_eq!(consts[0][0], 0.0, epsilon = 1e-10);
        assert_relative_eq!(consts[0][1].abs(), 1.0, epsilon = 1e-10);

        let all_t = mesh_of(DomainKind::UnitSquare, 2, LabelRule::AllTangential);
        assert!(compute_constant_kernel(&all_t, 1e-8).unwrap().is_empty());
    }

    #[test]
    fn axis_of_plane_rotation() {
        let r = RigidMotion::new(3, vec![0.0, 0.0, 1.0], DVector::zeros(3)).unwrap();
        let axis = detect_axis(&r).unwrap();
        assert_relative_eq!(axis.direction[2], 1.0, epsilon = 1e-15);
        assert!(axis.point.norm() < 1e-15);
        assert!(axis.valid);
    }

    #[test]
    fn axis_of_offset_rotation() {
        // r(x) = σ ∧ (x - b), σ = e3, b = e1: axis through (1,0,0) along e3.
        let sigma = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let r = RigidMotion::about_axis(&sigma, &b).unwrap();
        let axis = detect_axis(&r).unwrap();
        assert_relative_eq!(axis.direction[2].abs(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(axis.point[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(axis.point[1], 0.0, epsilon = 1e-14);
        assert!(axis.valid);
    }

    #[test]
    fn constant_motion_has_no_axis() {
        let r = RigidMotion::translation(DVector::from_vec(vec![0.0, 0.0, 1.0])).unwrap();
        assert!(matches!(detect_axis(&r), Err(Error::NoAxis)));
    }

    #[test]
    fn axis_recovery_for_random_motions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mut sigma = DVector::from_fn(3, |_, _| rng.random::<f64>() - 0.5);
            sigma /= sigma.norm();
            let b = DVector::from_fn(3, |_, _| 4.0 * (rng.random::<f64>() - 0.5));
            let r = RigidMotion::about_axis(&sigma, &b).unwrap();
            let axis = detect_axis(&r).unwrap();
            let align = axis.direction.dot(&sigma).abs();
            assert_relative_eq!(align, 1.0, epsilon = 1e-10);
            // the recovered point lies on the line through b along sigma
            let d = &axis.point - &b;
            let off_axis = (&d - &sigma * d.dot(&sigma)).norm();
            assert!(off_axis <= 1e-10 * (1.0 + b.norm()), "off axis by {off_axis}");
            assert!(axis.valid);
        }
    }

    #[test]
    fn classify_half_cylinder_passes() {
        let mesh = mesh_of(DomainKind::HalfCylinder, 2, LabelRule::SectorPlanesTangential);
        let r = RigidMotion::new(3, vec![0.0, 0.0, 1.0], DVector::zeros(3)).unwrap();
        let report = classify_mixed(&mesh, &r, 1e-9).unwrap();
        assert!(report.iter().all(|f| f.pass), "facet classification failed");
    }

    #[test]
    fn classify_cube_caps_fails_contains_axis_test() {
        let mesh = mesh_of(DomainKind::UnitCube, 2, LabelRule::CapsTangential);
        let r = RigidMotion::new(3, vec![0.0, 0.0, 1.0], DVector::zeros(3)).unwrap();
        let report = classify_mixed(&mesh, &r, 1e-9).unwrap();
        for f in &report {
            if f.label == FacetLabel::Tangential {
                assert!(!f.pass, "cap facet must fail: its plane is normal to the axis");
                assert_relative_eq!(f.residual, 1.0, epsilon = 1e-12);
            }
        }
        let constant = RigidMotion::translation(DVector::zeros(3)).unwrap();
        assert!(matches!(
            classify_mixed(&mesh, &constant, 1e-9),
            Err(Error::NoAxis)
        ));
    }

    #[test]
    fn kernel_with_all_tangential_is_trivial_across_catalog() {
        for (kind, n) in [
            (DomainKind::UnitSquare, 3),
            (DomainKind::UnitDisk, 3),
            (DomainKind::UnitBall, 1),
            (DomainKind::HalfCylinder, 2),
        ] {
            let mesh = mesh_of(kind, n, LabelRule::AllTangential);
            let report = compute_kernel_k(&mesh, 1e-8).unwrap();
            assert_eq!(report.kernel_dim(), 0);
        }
    }

    #[test]
    fn rejects_bad_tolerance() {
        let mesh = mesh_of(DomainKind::UnitSquare, 1, LabelRule::AllTangential);
        assert!(matches!(
            compute_kernel_k(&mesh, 0.0),
            Err(Error::NonPositiveTolerance(_))
        ));
    }
}
