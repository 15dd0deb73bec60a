//! Linear constraints on nodal degrees of freedom and their elimination
//! through an explicit orthonormal null-space basis. Boundary rows mirror the
//! kernel construction in [`crate::rigid`]; orthogonality rows are exact cell
//! sums (gradient against a constant skew matrix) or mass-matrix rows.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;

use super::{cell_geometry, interpolate, spmm, spmv, Forms};
use crate::error::{Error, Result};
use crate::geometry::{FacetLabel, Mesh};
use crate::rigid::{self, RigidMotion};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    BcTangential,
    BcNormal,
    OrthoK,
    OrthoSo,
    OrthoRigid,
    OrthoConst,
}

/// One sparse linear functional on the nodal DOFs.
#[derive(Debug, Clone)]
pub struct ConstraintRow {
    pub kind: ConstraintKind,
    pub coeffs: Vec<(usize, f64)>,
}

impl ConstraintRow {
    pub fn dot(&self, x: &DVector<f64>) -> f64 {
        self.coeffs.iter().map(|&(i, v)| v * x[i]).sum()
    }

    fn dense(&self, n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for &(i, v) in &self.coeffs {
            out[i] += v;
        }
        out
    }
}

/// What to constrain. `OrthoK` carries the kernel gradient basis from
/// [`crate::rigid::compute_kernel_k`]; `OrthoConst` the admissible constants.
#[derive(Debug, Clone)]
pub enum Constraint<'a> {
    BoundaryConditions,
    OrthoK(&'a [DMatrix<f64>]),
    OrthoSo,
    OrthoRigid,
    OrthoConst(&'a [DVector<f64>]),
    /// All constant fields (the no-boundary-condition case).
    OrthoAllConst,
}

/// Constraint rows plus an orthonormal basis of their joint null space.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub rows: Vec<ConstraintRow>,
    /// `n_dofs × k`, orthonormal columns annihilating every row.
    pub null_basis: DMatrix<f64>,
    rank: usize,
}

impl ConstraintSet {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn null_dim(&self) -> usize {
        self.null_basis.ncols()
    }

    /// Lift reduced coordinates back to nodal DOFs.
    pub fn lift(&self, reduced: &DVector<f64>) -> DVector<f64> {
        &self.null_basis * reduced
    }
}

/// Assemble the requested constraint rows and compute the null-space basis.
pub fn build_constraints(
    mesh: &Mesh,
    forms: &Forms,
    constraints: &[Constraint],
) -> Result<ConstraintSet> {
    let dim = mesh.dim();
    let n = forms.n_dofs();
    let mut rows: Vec<ConstraintRow> = Vec::new();

    for spec in constraints {
        match spec {
            Constraint::BoundaryConditions => {
                for bc in rigid::boundary_rows(mesh)? {
                    let kind = match bc.label {
                        FacetLabel::Tangential => ConstraintKind::BcTangential,
                        FacetLabel::Normal => ConstraintKind::BcNormal,
                    };
                    let coeffs = (0..dim)
                        .map(|a| (dim * bc.vertex + a, bc.weight * bc.direction[a]))
                        .collect();
                    rows.push(ConstraintRow { kind, coeffs });
                }
            }
            Constraint::OrthoK(gradient_basis) => {
                for w in gradient_basis.iter() {
                    rows.push(gradient_moment_row(mesh, w, ConstraintKind::OrthoK)?);
                }
            }
            Constraint::OrthoSo => {
                for w in rigid::so_basis(dim)? {
                    rows.push(gradient_moment_row(mesh, &w, ConstraintKind::OrthoSo)?);
                }
            }
            Constraint::OrthoRigid => {
                for motion in rigid::rigid_basis(dim)? {
                    rows.push(mass_row(mesh, forms, &motion, ConstraintKind::OrthoRigid));
                }
            }
            Constraint::OrthoConst(basis) => {
                for a in basis.iter() {
                    let motion = RigidMotion::translation(a.clone())?;
                    rows.push(mass_row(mesh, forms, &motion, ConstraintKind::OrthoConst));
                }
            }
            Constraint::OrthoAllConst => {
                for i in 0..dim {
                    let mut a = DVector::zeros(dim);
                    a[i] = 1.0;
                    let motion = RigidMotion::translation(a)?;
                    rows.push(mass_row(mesh, forms, &motion, ConstraintKind::OrthoConst));
                }
            }
        }
    }

    let (null_basis, rank) = null_space(&rows, n)?;
    Ok(ConstraintSet {
        rows,
        null_basis,
        rank,
    })
}

/// Row enforcing `∫ ⟨∇v, W⟩ = 0` for a constant matrix `W`: boundary-free
/// exact sum over cells, entry `Σ_{c∋i} vol_c (Wᵀ ∇λ_i)_a` at dof `(i,a)`.
fn gradient_moment_row(
    mesh: &Mesh,
    w: &DMatrix<f64>,
    kind: ConstraintKind,
) -> Result<ConstraintRow> {
    let dim = mesh.dim();
    if w.nrows() != dim || w.ncols() != dim {
        return Err(Error::DimensionMismatch("constraint matrix shape".into()));
    }
    let mut dense = DVector::zeros(dim * mesh.vertices().len());
    for c in 0..mesh.cells().len() {
        let geo = cell_geometry(mesh, c)?;
        for (i, &v) in mesh.cells()[c].iter().enumerate() {
            let wg = w.transpose() * geo.grads.column(i);
            for a in 0..dim {
                dense[dim * v + a] += geo.volume * wg[a];
            }
        }
    }
    Ok(sparse_row(&dense, kind))
}

/// Row enforcing `⟨v, r_h⟩_{L²} = 0` for an interpolated rigid motion.
fn mass_row(mesh: &Mesh, forms: &Forms, motion: &RigidMotion, kind: ConstraintKind) -> ConstraintRow {
    let nodal = interpolate(mesh, |x| motion.evaluate(x));
    let dense = spmv(&forms.mass, &nodal);
    sparse_row(&dense, kind)
}

fn sparse_row(dense: &DVector<f64>, kind: ConstraintKind) -> ConstraintRow {
    let coeffs = dense
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, *v))
        .collect();
    ConstraintRow { kind, coeffs }
}

/// Orthonormal basis of the joint null space by modified Gram-Schmidt with
/// reorthogonalization. Returns the basis and the row-space rank.
fn null_space(rows: &[ConstraintRow], n: usize) -> Result<(DMatrix<f64>, usize)> {
    let dense: Vec<DVector<f64>> = rows.iter().map(|r| r.dense(n)).collect();
    null_space_dense(&dense, n)
}

pub(crate) fn null_space_dense(rows: &[DVector<f64>], n: usize) -> Result<(DMatrix<f64>, usize)> {
    const DROP_TOL: f64 = 1e-8;

    // orthonormal row-space basis
    let mut q: Vec<DVector<f64>> = Vec::new();
    for row in rows {
        let mut r = row.clone();
        let norm = r.norm();
        if norm == 0.0 {
            continue;
        }
        r /= norm;
        for _ in 0..2 {
            for b in &q {
                let p = b.dot(&r);
                r -= b * p;
            }
        }
        let res = r.norm();
        if res > DROP_TOL {
            q.push(r / res);
        }
    }
    let rank = q.len();
    if rank > n {
        return Err(Error::DimensionMismatch("more independent rows than DOFs".into()));
    }

    // complete to a full orthonormal basis; the complement spans the null space
    let mut null: Vec<DVector<f64>> = Vec::new();
    for k in 0..n {
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        for _ in 0..2 {
            for b in &q {
                let p = b.dot(&v);
                v -= b * p;
            }
            for b in &null {
                let p = b.dot(&v);
                v -= b * p;
            }
        }
        let res = v.norm();
        if res > DROP_TOL {
            null.push(v / res);
        }
    }
    if null.len() != n - rank {
        return Err(Error::DimensionMismatch(format!(
            "null-space detection unstable: rank {rank} + nullity {} != {n}",
            null.len()
        )));
    }
    let mut basis = DMatrix::zeros(n, null.len());
    for (j, v) in null.iter().enumerate() {
        basis.set_column(j, v);
    }
    Ok((basis, rank))
}

/// Restrict the pencil `(A, B)` to the constrained subspace: returns
/// `(Zᵀ A Z, Zᵀ B Z)` with both factors symmetrized. Fails when the reduced
/// `B` is numerically singular, which signals a missing deflation constraint.
pub fn reduce(
    a: &CsrMatrix<f64>,
    b: &CsrMatrix<f64>,
    cs: &ConstraintSet,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if cs.null_dim() == 0 {
        return Err(Error::EmptyConstrainedSpace);
    }
    let ar = project(a, &cs.null_basis);
    let br = project(b, &cs.null_basis);
    check_spd(&br).map_err(|_| Error::SingularDenominator)?;
    Ok((ar, br))
}

pub(crate) fn project(a: &CsrMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    let az = spmm(a, z);
    let m = z.transpose() * az;
    symmetrize(m)
}

pub(crate) fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    m += t;
    m *= 0.5;
    m
}

/// Cholesky-based definiteness check with a relative pivot guard.
pub(crate) fn check_spd(m: &DMatrix<f64>) -> Result<()> {
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0_f64;
    for i in 0..l.nrows() {
        dmin = dmin.min(l[(i, i)]);
        dmax = dmax.max(l[(i, i)]);
    }
    if dmin.is_nan() || dmin <= 1e-6 * dmax {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(())
}
