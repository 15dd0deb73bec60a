//! Constant estimators: each inequality becomes an extremal Rayleigh quotient
//! on a constrained subspace, with the kernel spaces the theory names (K, the
//! skew matrices, the rigid motions, admissible constants) removed by
//! explicit orthogonality constraints.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use super::{extremal_eig, Extremal, SpectralResult};
use crate::error::{Error, Result};
use crate::fem::{
    assemble, build_constraints, check_spd, null_space_dense, reduce, spmv, Constraint,
    ConstraintSet,
};
use crate::geometry::Mesh;
use crate::rigid;

/// Options shared by the estimators.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorOptions {
    /// Relative tolerance for kernel detection.
    pub tol: f64,
    /// Seed for the eigensolver start vector.
    pub seed: u64,
    /// Apply the deflation constraints the corresponding theorem prescribes.
    /// Disabling this exposes the kernel obstructions (diagnostics only).
    pub deflate: bool,
    /// Use the full H¹ norm instead of the gradient half norm in the inf-sup
    /// denominator. No reference value is claimed for this variant.
    pub infsup_full_norm: bool,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            tol: 1e-8,
            seed: 0,
            deflate: true,
            infsup_full_norm: false,
        }
    }
}

/// Result of a constant estimation: the spectral data plus the lifted nodal
/// eigenfield and the kernel bookkeeping behind the constraints.
#[derive(Debug, Clone)]
pub struct ConstantReport {
    pub spectral: SpectralResult,
    /// Derived inequality constant (duplicate of `spectral.constant`).
    pub constant: f64,
    /// Extremal field lifted to nodal coordinates (P1 DOFs; pressure DOFs for
    /// the inf-sup estimator).
    pub nodal_field: DVector<f64>,
    /// Dimension of the gradient kernel K used for deflation.
    pub kernel_dim: usize,
    /// Number of admissible constant fields deflated.
    pub constant_dim: usize,
    /// Dimension of the reduced problem.
    pub reduced_dim: usize,
    /// Inf-sup only: whether the √N upper bound holds.
    pub sqrt_n_bound_ok: Option<bool>,
}

fn finish(
    mut spectral: SpectralResult,
    constant: f64,
    cs: &ConstraintSet,
    kernel_dim: usize,
    constant_dim: usize,
) -> ConstantReport {
    spectral.constant = constant;
    let nodal_field = cs.lift(&spectral.vector);
    let reduced_dim = cs.null_dim();
    ConstantReport {
        spectral,
        constant,
        nodal_field,
        kernel_dim,
        constant_dim,
        reduced_dim,
        sqrt_n_bound_ok: None,
    }
}

/// Korn's first inequality under the mesh's boundary labels:
/// `λ = min ‖sym∇v‖²/‖∇v‖²` over the boundary-condition space with `∇v ⊥ K`
/// and admissible constants removed; the constant is `λ^{-1/2}`.
pub fn korn_first_constant(mesh: &Mesh, opts: &EstimatorOptions) -> Result<ConstantReport> {
    let forms = assemble(mesh, false)?;
    let kernel = rigid::compute_kernel_k(mesh, opts.tol)?;
    let consts = rigid::compute_constant_kernel(mesh, opts.tol)?;
    let mut constraints = vec![Constraint::BoundaryConditions];
    if opts.deflate {
        constraints.push(Constraint::OrthoK(&kernel.gradient_basis));
        constraints.push(Constraint::OrthoConst(&consts));
    }
    let cs = build_constraints(mesh, &forms, &constraints)?;
    let (ar, br) = reduce(&forms.sym, &forms.grad, &cs)?;
    let spectral = extremal_eig(&ar, &br, Extremal::Smallest, opts.seed)?;
    let constant = invsqrt(spectral.lambda);
    Ok(finish(
        spectral,
        constant,
        &cs,
        kernel.kernel_dim(),
        consts.len(),
    ))
}

/// Korn's first inequality without boundary conditions: `∇v ⊥ so(N)` and all
/// constants removed.
pub fn korn_nobc_constant(mesh: &Mesh, opts: &EstimatorOptions) -> Result<ConstantReport> {
    let forms = assemble(mesh, false)?;
    let cs = build_constraints(
        mesh,
        &forms,
        &[Constraint::OrthoSo, Constraint::OrthoAllConst],
    )?;
    let (ar, br) = reduce(&forms.sym, &forms.grad, &cs)?;
    let spectral = extremal_eig(&ar, &br, Extremal::Smallest, opts.seed)?;
    let constant = invsqrt(spectral.lambda);
    Ok(finish(spectral, constant, &cs, 0, mesh.dim()))
}

/// Korn's second inequality in quadratic-mean form:
/// `λ_max = max ‖∇v‖²/(‖sym∇v‖² + ‖v‖²)`, `c₂ = √λ_max`. The sum-form bound
/// holds with the same constant since `a + b ≥ √(a² + b²)`.
pub fn korn_second_constant(mesh: &Mesh, opts: &EstimatorOptions) -> Result<ConstantReport> {
    let forms = assemble(mesh, false)?;
    let cs = build_constraints(mesh, &forms, &[])?;
    let denom = csr_sum(&forms.sym, &forms.mass);
    let (ar, br) = reduce(&forms.grad, &denom, &cs)?;
    let spectral = extremal_eig(&ar, &br, Extremal::Largest, opts.seed)?;
    let constant = spectral.lambda.max(0.0).sqrt();
    Ok(finish(spectral, constant, &cs, 0, 0))
}

/// Poincaré inequality under the boundary labels:
/// `λ = min ‖∇v‖²/‖v‖²` on the boundary-condition space orthogonal to the
/// admissible constants; the constant is `λ^{-1/2}`. Without the constant
/// deflation the quotient's denominator space contains the gradient kernel
/// and the estimator reports a singular denominator.
pub fn poincare_mixed_constant(mesh: &Mesh, opts: &EstimatorOptions) -> Result<ConstantReport> {
    let forms = assemble(mesh, false)?;
    let consts = rigid::compute_constant_kernel(mesh, opts.tol)?;
    let mut constraints = vec![Constraint::BoundaryConditions];
    if opts.deflate {
        constraints.push(Constraint::OrthoConst(&consts));
    }
    let cs = build_constraints(mesh, &forms, &constraints)?;
    let (ar, br) = reduce(&forms.grad, &forms.mass, &cs)?;
    // The inequality bounds ‖v‖ by ‖∇v‖: its denominator is the reduced
    // gradient form, which must be definite for the constant to be finite.
    check_spd(&ar).map_err(|_| Error::SingularDenominator)?;
    let spectral = extremal_eig(&ar, &br, Extremal::Smallest, opts.seed)?;
    let constant = invsqrt(spectral.lambda);
    Ok(finish(spectral, constant, &cs, 0, consts.len()))
}

/// Poincaré inequality for elasticity: `λ = min ‖sym∇v‖²/‖v‖²` over the
/// orthogonal complement of the rigid motions; the constant is `λ^{-1/2}`.
pub fn poincare_elasticity_constant(
    mesh: &Mesh,
    opts: &EstimatorOptions,
) -> Result<ConstantReport> {
    let forms = assemble(mesh, false)?;
    let cs = build_constraints(mesh, &forms, &[Constraint::OrthoRigid])?;
    let (ar, br) = reduce(&forms.sym, &forms.mass, &cs)?;
    check_spd(&ar).map_err(|_| Error::SingularDenominator)?;
    let spectral = extremal_eig(&ar, &br, Extremal::Smallest, opts.seed)?;
    let constant = invsqrt(spectral.lambda);
    Ok(finish(spectral, constant, &cs, 0, 0))
}

/// Discrete inf-sup (LBB) constant of the MINI element with homogeneous
/// Dirichlet velocity and mean-zero pressure: `c = √λ_min` of the pressure
/// Schur pencil `(B A⁻¹ Bᵀ, M_p)`. Always reports the `√N` bound check.
pub fn infsup_constant(mesh: &Mesh, opts: &EstimatorOptions) -> Result<ConstantReport> {
    let dim = mesh.dim();
    let forms = assemble(mesh, true)?;
    let mini = forms.mini.as_ref().expect("assembled with bubbles");

    // velocity space: interior P1 DOFs plus every bubble DOF
    let nv = mesh.vertices().len();
    let n_p1 = dim * nv;
    let n_vel = n_p1 + dim * mesh.cells().len();
    let mut on_boundary = vec![false; nv];
    for facet in mesh.boundary_facets() {
        for &v in &facet.vertices {
            on_boundary[v] = true;
        }
    }
    let kept: Vec<usize> = (0..n_vel)
        .filter(|&d| d >= n_p1 || !on_boundary[d / dim])
        .collect();

    let a_vel = if opts.infsup_full_norm {
        csr_sum(&mini.grad, &mini.mass)
    } else {
        mini.grad.clone()
    };
    let a = dense_submatrix(&a_vel, &kept, &kept);
    let b = dense_columns(&mini.div, &kept);
    let chol = a.cholesky().ok_or(Error::NotPositiveDefinite)?;
    // Schur complement on pressures: S = B A⁻¹ Bᵀ
    let bt = b.transpose();
    let x = chol.solve(&bt);
    let schur = crate::fem::constraints_symmetrize(&b * x);

    // mean-zero pressures: one constraint row ∫ p = (M_p · 1)ᵀ p
    let ones = DVector::from_element(nv, 1.0);
    let mean_row = spmv(&mini.mass_p, &ones);
    let (z, _) = null_space_dense(&[mean_row], nv)?;
    if z.ncols() == 0 {
        return Err(Error::EmptyConstrainedSpace);
    }
    let sr = crate::fem::constraints_symmetrize(z.transpose() * &schur * &z);
    let mp = dense_matrix(&mini.mass_p);
    let mr = crate::fem::constraints_symmetrize(z.transpose() * &mp * &z);

    let mut spectral = extremal_eig(&sr, &mr, Extremal::Smallest, opts.seed)?;
    let constant = spectral.lambda.max(0.0).sqrt();
    spectral.constant = constant;
    let nodal_field = &z * &spectral.vector;
    let reduced_dim = z.ncols();
    Ok(ConstantReport {
        spectral,
        constant,
        nodal_field,
        kernel_dim: 0,
        constant_dim: 1,
        reduced_dim,
        sqrt_n_bound_ok: Some(constant <= (dim as f64).sqrt() + 1e-9),
    })
}

fn invsqrt(lambda: f64) -> f64 {
    if lambda > 0.0 {
        1.0 / lambda.sqrt()
    } else {
        f64::INFINITY
    }
}

/// Entry-wise sum of two sparse matrices.
pub(crate) fn csr_sum(a: &CsrMatrix<f64>, b: &CsrMatrix<f64>) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(a.nrows(), a.ncols());
    for (i, j, v) in a.triplet_iter() {
        coo.push(i, j, *v);
    }
    for (i, j, v) in b.triplet_iter() {
        coo.push(i, j, *v);
    }
    CsrMatrix::from(&coo)
}

fn dense_matrix(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    crate::fem::to_dense(a)
}

fn dense_submatrix(a: &CsrMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    let mut row_map = vec![usize::MAX; a.nrows()];
    for (k, &r) in rows.iter().enumerate() {
        row_map[r] = k;
    }
    let mut col_map = vec![usize::MAX; a.ncols()];
    for (k, &c) in cols.iter().enumerate() {
        col_map[c] = k;
    }
    let mut out = DMatrix::zeros(rows.len(), cols.len());
    for (i, j, v) in a.triplet_iter() {
        if row_map[i] != usize::MAX && col_map[j] != usize::MAX {
            out[(row_map[i], col_map[j])] += *v;
        }
    }
    out
}

fn dense_columns(a: &CsrMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    let rows: Vec<usize> = (0..a.nrows()).collect();
    dense_submatrix(a, &rows, cols)
}
