//! First-order vector finite elements on simplicial meshes: mass, gradient
//! and symmetric-gradient Gram matrices, and the MINI (P1 + cell bubble)
//! divergence coupling for the inf-sup problem. All element integrals are
//! exact via the barycentric monomial formula
//! `∫_T Π λ_i^{a_i} = vol · N! · Π a_i! / (N + Σ a_i)!`.

mod constraints;

pub use constraints::{
    build_constraints, reduce, Constraint, ConstraintKind, ConstraintRow, ConstraintSet,
};
pub(crate) use constraints::{check_spd, null_space_dense, symmetrize as constraints_symmetrize};

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{Error, Result};
use crate::geometry::Mesh;

/// Assembled bilinear forms of the P1 vector element (interleaved DOF layout
/// `dim * vertex + component`).
#[derive(Debug, Clone)]
pub struct Forms {
    dim: usize,
    n_vertices: usize,
    /// Vector L² mass matrix.
    pub mass: CsrMatrix<f64>,
    /// Gram matrix of the full gradient (Frobenius): `‖∇v‖²`.
    pub grad: CsrMatrix<f64>,
    /// Gram matrix of the symmetric gradient: `‖sym∇v‖²`.
    pub sym: CsrMatrix<f64>,
    /// MINI-element blocks for the inf-sup problem.
    pub mini: Option<MiniForms>,
}

/// MINI element (P1 velocity + one interior vector bubble per cell, P1
/// pressure). Velocity DOFs: the P1 DOFs followed by `dim * cell + component`
/// bubble DOFs.
#[derive(Debug, Clone)]
pub struct MiniForms {
    /// Velocity gradient Gram over P1 ⊕ bubbles.
    pub grad: CsrMatrix<f64>,
    /// Velocity mass over P1 ⊕ bubbles.
    pub mass: CsrMatrix<f64>,
    /// Divergence coupling: rows pressure DOFs, columns velocity DOFs.
    pub div: CsrMatrix<f64>,
    /// Scalar pressure mass matrix.
    pub mass_p: CsrMatrix<f64>,
}

impl Forms {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Number of P1 vector degrees of freedom.
    pub fn n_dofs(&self) -> usize {
        self.dim * self.n_vertices
    }
}

/// `∫_T Π λ_i^{a_i}` over a simplex of volume `vol` in dimension `exps.len()-1`.
pub fn simplex_moment(vol: f64, exps: &[usize]) -> f64 {
    let n = exps.len() - 1;
    let total: usize = exps.iter().sum();
    let mut value = vol * factorial(n) as f64 / factorial(n + total) as f64;
    for &a in exps {
        value *= factorial(a) as f64;
    }
    value
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Geometry of one cell needed for assembly: volume and barycentric gradients
/// (one column per local vertex).
pub(crate) struct CellGeometry {
    pub volume: f64,
    /// `dim × (dim+1)`: column `i` is `∇λ_i`.
    pub grads: DMatrix<f64>,
}

pub(crate) fn cell_geometry(mesh: &Mesh, c: usize) -> Result<CellGeometry> {
    let dim = mesh.dim();
    let cell = &mesh.cells()[c];
    let p0 = &mesh.vertices()[cell[0]];
    let mut d = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        d.set_column(j, &(&mesh.vertices()[cell[j + 1]] - p0));
    }
    let volume = d.determinant() / factorial(dim) as f64;
    if volume.abs() < 1e-300 {
        return Err(Error::DegenerateCell { cell: c, volume });
    }
    let dinv = d.try_inverse().ok_or(Error::DegenerateCell { cell: c, volume })?;
    let mut grads = DMatrix::zeros(dim, dim + 1);
    for j in 0..dim {
        grads.set_column(j + 1, &dinv.row(j).transpose());
    }
    let head: DVector<f64> = -grads.columns(1, dim).column_sum();
    grads.set_column(0, &head);
    Ok(CellGeometry { volume, grads })
}

/// Assemble the P1 forms; `with_bubbles` adds the MINI blocks.
pub fn assemble(mesh: &Mesh, with_bubbles: bool) -> Result<Forms> {
    let dim = mesh.dim();
    let nv = mesh.vertices().len();
    let nc = mesh.cells().len();
    let n_dofs = dim * nv;
    let n_vel = n_dofs + if with_bubbles { dim * nc } else { 0 };

    let mut mass = CooMatrix::new(n_dofs, n_dofs);
    let mut grad = CooMatrix::new(n_dofs, n_dofs);
    let mut sym = CooMatrix::new(n_dofs, n_dofs);
    let mut mini_grad = CooMatrix::new(n_vel, n_vel);
    let mut mini_mass = CooMatrix::new(n_vel, n_vel);
    let mut div = CooMatrix::new(nv, n_vel);
    let mut mass_p = CooMatrix::new(nv, nv);

    let bubble_scale = (dim as f64 + 1.0).powi(dim as i32 + 1);

    for c in 0..nc {
        let geo = cell_geometry(mesh, c)?;
        let vol = geo.volume;
        let cell = &mesh.cells()[c];
        let nl = dim + 1;

        // P1 mass / grad / sym
        for i in 0..nl {
            let gi = geo.grads.column(i);
            for j in 0..nl {
                let gj = geo.grads.column(j);
                let gg = gi.dot(&gj);
                let mij = vol * if i == j { 2.0 } else { 1.0 }
                    / ((dim + 1) as f64 * (dim + 2) as f64);
                for a in 0..dim {
                    let (r, s) = (dim * cell[i] + a, dim * cell[j] + a);
                    mass.push(r, s, mij);
                    grad.push(r, s, vol * gg);
                    if with_bubbles {
                        mini_grad.push(r, s, vol * gg);
                        mini_mass.push(r, s, mij);
                    }
                    for b in 0..dim {
                        let entry = vol * 0.5 * ((if a == b { gg } else { 0.0 }) + gi[b] * gj[a]);
                        if entry != 0.0 {
                            sym.push(dim * cell[i] + a, dim * cell[j] + b, entry);
                        }
                    }
                }
            }
        }

        if with_bubbles {
            // pressure mass and the P1 part of the divergence coupling
            for j in 0..nl {
                for k in 0..nl {
                    let mjk = vol * if j == k { 2.0 } else { 1.0 }
                        / ((dim + 1) as f64 * (dim + 2) as f64);
                    mass_p.push(cell[j], cell[k], mjk);
                }
                // ∫ φ_j div(φ_i e_a) = (g_i)_a vol/(dim+1)
                for i in 0..nl {
                    let gi = geo.grads.column(i);
                    for a in 0..dim {
                        div.push(cell[j], dim * cell[i] + a, gi[a] * vol / (dim + 1) as f64);
                    }
                }
            }

            // bubble integrals via the monomial formula
            let ones = vec![1usize; nl];
            let int_b = bubble_scale * simplex_moment(vol, &ones);
            let mut int_b_phi = vec![0.0; nl];
            for i in 0..nl {
                let mut e = ones.clone();
                e[i] = 2;
                int_b_phi[i] = bubble_scale * simplex_moment(vol, &e);
            }
            let int_b2 = bubble_scale * bubble_scale * simplex_moment(vol, &vec![2usize; nl]);
            let mut grad_b2 = 0.0;
            for i in 0..nl {
                for k in 0..nl {
                    let mut e = ones.clone();
                    e[i] -= 1;
                    e[k] += 1;
                    // exponent vector [m≠i] + [m≠k]
                    let mut exps = vec![0usize; nl];
                    for (m, x) in exps.iter_mut().enumerate() {
                        *x = usize::from(m != i) + usize::from(m != k);
                    }
                    grad_b2 += geo.grads.column(i).dot(&geo.grads.column(k))
                        * simplex_moment(vol, &exps);
                }
            }
            grad_b2 *= bubble_scale * bubble_scale;

            for a in 0..dim {
                let bd = n_dofs + dim * c + a;
                // bubbles are grad-orthogonal to P1 (∫∇b = 0), so the MINI
                // gradient matrix gains only the diagonal bubble block
                mini_grad.push(bd, bd, grad_b2);
                mini_mass.push(bd, bd, int_b2);
                for i in 0..nl {
                    mini_mass.push(bd, dim * cell[i] + a, int_b_phi[i]);
                    mini_mass.push(dim * cell[i] + a, bd, int_b_phi[i]);
                }
                // ∫ φ_j div(b e_a) = -(g_j)_a ∫ b
                for j in 0..nl {
                    let gj = geo.grads.column(j);
                    div.push(cell[j], bd, -gj[a] * int_b);
                }
            }
        }
    }

    let mini = if with_bubbles {
        Some(MiniForms {
            grad: CsrMatrix::from(&mini_grad),
            mass: CsrMatrix::from(&mini_mass),
            div: CsrMatrix::from(&div),
            mass_p: CsrMatrix::from(&mass_p),
        })
    } else {
        None
    };

    Ok(Forms {
        dim,
        n_vertices: nv,
        mass: CsrMatrix::from(&mass),
        grad: CsrMatrix::from(&grad),
        sym: CsrMatrix::from(&sym),
        mini,
    })
}

/// Nodal interpolation of a vector field.
pub fn interpolate<F>(mesh: &Mesh, f: F) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let dim = mesh.dim();
    let mut out = DVector::zeros(dim * mesh.vertices().len());
    for (i, x) in mesh.vertices().iter().enumerate() {
        let v = f(x);
        for a in 0..dim {
            out[dim * i + a] = v[a];
        }
    }
    out
}

/// Per-cell gradients (transpose-Jacobian) of a P1 nodal field:
/// `∇v|_c = Σ_i ∇λ_i u_iᵀ`.
pub fn field_gradients(mesh: &Mesh, nodal: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
    let dim = mesh.dim();
    if nodal.len() != dim * mesh.vertices().len() {
        return Err(Error::DimensionMismatch("nodal field length".into()));
    }
    let mut out = Vec::with_capacity(mesh.cells().len());
    for c in 0..mesh.cells().len() {
        let geo = cell_geometry(mesh, c)?;
        let mut g = DMatrix::zeros(dim, dim);
        for (i, &v) in mesh.cells()[c].iter().enumerate() {
            let u = nodal.rows(dim * v, dim);
            g += geo.grads.column(i) * u.transpose();
        }
        out.push(g);
    }
    Ok(out)
}

/// Sparse matrix-vector product.
pub fn spmv(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(a.nrows());
    for (r, row) in a.row_iter().enumerate() {
        let mut s = 0.0;
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            s += v * x[j];
        }
        y[r] = s;
    }
    y
}

/// Sparse × dense product.
pub fn spmm(a: &CsrMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(a.nrows(), z.ncols());
    for (r, row) in a.row_iter().enumerate() {
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            for c in 0..z.ncols() {
                y[(r, c)] += v * z[(j, c)];
            }
        }
    }
    y
}

/// Dense copy of a sparse matrix.
pub fn to_dense(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    nalgebra_sparse::convert::serial::convert_csr_dense(a)
}

/// Frobenius norm of a sparse matrix.
pub fn sparse_norm(a: &CsrMatrix<f64>) -> f64 {
    a.values().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Coordinate (row, col, value) text dump for debugging.
pub fn export_coordinate_text(a: &CsrMatrix<f64>) -> String {
    let mut out = format!("{} {} {}\n", a.nrows(), a.ncols(), a.nnz());
    for (i, j, v) in a.triplet_iter() {
        out.push_str(&format!("{i} {j} {v:.16e}\n"));
    }
    out
}

/// Quadratic form `xᵀ A x` of a sparse symmetric matrix.
pub fn quad_form(a: &CsrMatrix<f64>, x: &DVector<f64>) -> f64 {
    spmv(a, x).dot(x)
}

/// Evaluate a P1 field of the `coarse` mesh at an arbitrary point by locating
/// the containing cell (brute force, tolerant to roundoff on cell borders).
pub fn evaluate_p1(mesh: &Mesh, nodal: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    let dim = mesh.dim();
    let mut best_cell = usize::MAX;
    let mut best_min = f64::NEG_INFINITY;
    let mut best_bary = DVector::zeros(dim + 1);
    for c in 0..mesh.cells().len() {
        let geo = cell_geometry(mesh, c)?;
        let p0 = &mesh.vertices()[mesh.cells()[c][0]];
        // barycentric coordinates λ_i(x) = λ_i(p0) + ∇λ_i · (x − p0)
        let mut bary = DVector::zeros(dim + 1);
        bary[0] = 1.0;
        let dx = x - p0;
        for i in 0..=dim {
            bary[i] += geo.grads.column(i).dot(&dx);
        }
        let min = bary.min();
        if min > best_min {
            best_min = min;
            best_cell = c;
            best_bary = bary;
        }
    }
    if best_cell == usize::MAX || best_min < -1e-9 {
        return Err(Error::InvalidArgument("point outside the mesh".into()));
    }
    let cell = &mesh.cells()[best_cell];
    let mut out = DVector::zeros(dim);
    for (i, &v) in cell.iter().enumerate() {
        out += best_bary[i] * nodal.rows(dim * v, dim).clone_owned();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_mesh, DomainKind, DomainSpec, LabelRule};
    use crate::rigid;
    use approx::assert_relative_eq;

    fn mesh_of(kind: DomainKind, n: usize, labels: LabelRule) -> Mesh {
        generate_mesh(&DomainSpec {
            kind,
            refinement: n,
            labels,
        })
        .unwrap()
    }

    #[test]
    fn moment_formula_matches_symbolic_values() {
        // reference triangle, vol 1/2
        assert_relative_eq!(simplex_moment(0.5, &[0, 1, 1]), 1.0 / 24.0, epsilon = 1e-16);
        assert_relative_eq!(simplex_moment(0.5, &[1, 1, 1]), 1.0 / 120.0, epsilon = 1e-16);
        assert_relative_eq!(simplex_moment(0.5, &[0, 2, 2]), 1.0 / 180.0, epsilon = 1e-16);
        assert_relative_eq!(simplex_moment(0.5, &[2, 1, 1]), 1.0 / 360.0, epsilon = 1e-16);
        assert_relative_eq!(simplex_moment(0.5, &[2, 2, 2]), 1.0 / 5040.0, epsilon = 1e-16);
        // reference tetrahedron, vol 1/6
        let sixth = 1.0 / 6.0;
        assert_relative_eq!(simplex_moment(sixth, &[0, 1, 1, 0]), 1.0 / 120.0, epsilon = 1e-16);
        assert_relative_eq!(
            simplex_moment(sixth, &[1, 1, 1, 1]),
            1.0 / 5040.0,
            epsilon = 1e-16
        );
    }

    #[test]
    fn energies_of_affine_fields_on_unit_square() {
        let mesh = mesh_of(DomainKind::UnitSquare, 1, LabelRule::AllTangential);
        let forms = assemble(&mesh, false).unwrap();

        // v(x) = x: ∇v = I, |I|² = 2, area 1
        let ident = interpolate(&mesh, |x| x.clone());
        assert_relative_eq!(quad_form(&forms.grad, &ident), 2.0, epsilon = 1e-14);
        assert_relative_eq!(quad_form(&forms.sym, &ident), 2.0, epsilon = 1e-14);
        // ∫ |x|² over the unit square
        assert_relative_eq!(quad_form(&forms.mass, &ident), 2.0 / 3.0, epsilon = 1e-14);

        // rotation (-x2, x1): gradient skew with |∇v|² = 2, sym part zero
        let rot = interpolate(&mesh, |x| DVector::from_vec(vec![-x[1], x[0]]));
        assert_relative_eq!(quad_form(&forms.grad, &rot), 2.0, epsilon = 1e-14);
        assert!(quad_form(&forms.sym, &rot).abs() < 1e-28);
    }

    #[test]
    fn rigid_motions_span_sym_kernel_and_constants_grad_kernel() {
        for (kind, n) in [(DomainKind::UnitSquare, 3), (DomainKind::UnitCube, 2)] {
            let mesh = mesh_of(kind, n, LabelRule::AllTangential);
            let forms = assemble(&mesh, false).unwrap();
            let sym_scale = sparse_norm(&forms.sym);
            for motion in rigid::rigid_basis(mesh.dim()).unwrap() {
                let nodal = interpolate(&mesh, |x| motion.evaluate(x));
                let residual = spmv(&forms.sym, &nodal).norm();
                assert!(residual <= 1e-12 * sym_scale, "sym kernel residual {residual}");
            }
            let grad_scale = sparse_norm(&forms.grad);
            for a in 0..mesh.dim() {
                let mut e = DVector::zeros(mesh.dim());
                e[a] = 1.0;
                let nodal = interpolate(&mesh, |_| e.clone());
                assert!(spmv(&forms.grad, &nodal).norm() <= 1e-12 * grad_scale);
            }
        }
    }

    #[test]
    fn grad_dominates_sym_pointwise() {
        use rand::{Rng, SeedableRng};
        let mesh = mesh_of(DomainKind::UnitDisk, 3, LabelRule::AllNormal);
        let forms = assemble(&mesh, false).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = DVector::from_fn(forms.n_dofs(), |_, _| rng.random::<f64>() - 0.5);
            let eg = quad_form(&forms.grad, &x);
            let es = quad_form(&forms.sym, &x);
            assert!(es <= eg + 1e-10 * eg.abs().max(1.0));
        }
    }

    #[test]
    fn bubble_blocks_match_reference_values() {
        // single reference triangle
        let vs = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ];
        let boundary = vec![
            crate::geometry::BoundaryFacet { vertices: vec![0, 1], label: crate::geometry::FacetLabel::Tangential },
            crate::geometry::BoundaryFacet { vertices: vec![1, 2], label: crate::geometry::FacetLabel::Tangential },
            crate::geometry::BoundaryFacet { vertices: vec![2, 0], label: crate::geometry::FacetLabel::Tangential },
        ];
        let mesh = Mesh::new(2, vs, vec![vec![0, 1, 2]], boundary, None).unwrap();
        let forms = assemble(&mesh, true).unwrap();
        let mini = forms.mini.as_ref().unwrap();

        let bd = forms.n_dofs(); // first bubble dof (component 0)
        let dense_grad = to_dense(&mini.grad);
        let dense_mass = to_dense(&mini.mass);
        let dense_div = to_dense(&mini.div);
        // values frozen from exact symbolic integration on the reference cell
        assert_relative_eq!(dense_grad[(bd, bd)], 81.0 / 10.0, epsilon = 1e-12);
        assert_relative_eq!(dense_mass[(bd, bd)], 81.0 / 560.0, epsilon = 1e-14);
        // ∫ b φ_1 = 3/40, coupling in the same component
        assert_relative_eq!(dense_mass[(bd, 2)], 3.0 / 40.0, epsilon = 1e-14);
        // ∫ φ_j div(b e_x) = -(g_j)_x ∫b with ∫b = 9/40; g_1 = (1,0)
        assert_relative_eq!(dense_div[(1, bd)], -9.0 / 40.0, epsilon = 1e-14);
        // bubble is grad-orthogonal to every P1 dof
        for k in 0..forms.n_dofs() {
            assert_eq!(dense_grad[(bd, k)], 0.0);
        }
    }

    #[test]
    fn bubble_grad_energy_reference_tet() {
        let vs = vec![
            DVector::from_vec(vec![0.0, 0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
        ];
        let labels = crate::geometry::FacetLabel::Tangential;
        let boundary = vec![
            crate::geometry::BoundaryFacet { vertices: vec![0, 1, 2], label: labels },
            crate::geometry::BoundaryFacet { vertices: vec![0, 1, 3], label: labels },
            crate::geometry::BoundaryFacet { vertices: vec![0, 2, 3], label: labels },
            crate::geometry::BoundaryFacet { vertices: vec![1, 2, 3], label: labels },
        ];
        let mesh = Mesh::new(3, vs, vec![vec![0, 1, 2, 3]], boundary, None).unwrap();
        let forms = assemble(&mesh, true).unwrap();
        let mini = forms.mini.as_ref().unwrap();
        let bd = forms.n_dofs();
        let dense_grad = to_dense(&mini.grad);
        let dense_mass = to_dense(&mini.mass);
        assert_relative_eq!(dense_grad[(bd, bd)], 4096.0 / 945.0, epsilon = 1e-12);
        assert_relative_eq!(dense_mass[(bd, bd)], 4096.0 / 155925.0, epsilon = 1e-14);
    }

    #[test]
    fn field_gradients_reproduce_affine_gradients() {
        let mesh = mesh_of(DomainKind::UnitDisk, 2, LabelRule::AllNormal);
        let rot = interpolate(&mesh, |x| DVector::from_vec(vec![-x[1], x[0]]));
        let grads = field_gradients(&mesh, &rot).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        for g in grads {
            assert_relative_eq!((g - &expected).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn evaluate_p1_reproduces_nodal_field() {
        let coarse = mesh_of(DomainKind::UnitSquare, 2, LabelRule::AllTangential);
        let field = interpolate(&coarse, |x| {
            DVector::from_vec(vec![x[0] + 2.0 * x[1], x[0] * 1.5])
        });
        let probe = DVector::from_vec(vec![0.3, 0.7]);
        let v = evaluate_p1(&coarse, &field, &probe).unwrap();
        assert_relative_eq!(v[0], 0.3 + 1.4, epsilon = 1e-13);
        assert_relative_eq!(v[1], 0.45, epsilon = 1e-13);
        assert!(evaluate_p1(&coarse, &field, &DVector::from_vec(vec![3.0, 3.0])).is_err());
    }

    #[test]
    fn coordinate_export_lists_all_entries() {
        let mesh = mesh_of(DomainKind::UnitSquare, 1, LabelRule::AllTangential);
        let forms = assemble(&mesh, false).unwrap();
        let text = export_coordinate_text(&forms.grad);
        let mut lines = text.lines();
        let header: Vec<usize> = lines
            .next()
            .unwrap()
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(header[0], forms.n_dofs());
        assert_eq!(header[2], text.lines().count() - 1);
    }

    #[test]
    fn mass_matrix_positive_definite() {
        let mesh = mesh_of(DomainKind::UnitDisk, 2, LabelRule::AllNormal);
        let forms = assemble(&mesh, false).unwrap();
        assert!(to_dense(&forms.mass).cholesky().is_some());
    }

    #[test]
    fn total_mass_is_domain_volume() {
        let mesh = mesh_of(DomainKind::UnitCube, 2, LabelRule::AllTangential);
        let forms = assemble(&mesh, false).unwrap();
        let mut e = DVector::zeros(forms.n_dofs());
        for i in 0..forms.n_vertices() {
            e[3 * i] = 1.0;
        }
        assert_relative_eq!(quad_form(&forms.mass, &e), 1.0, epsilon = 1e-12);
    }
}
