//! Static linear elasticity on the orthogonal complement of the rigid
//! motions: find `v ⊥ R` with `⟨sym∇v, sym∇φ⟩ = ⟨f, φ⟩` for all admissible φ.
//! Well-posedness is exactly the Poincaré inequality for elasticity.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fem::{assemble, build_constraints, interpolate, quad_form, spmv, Constraint};
use crate::geometry::Mesh;
use crate::rigid;

#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    /// Nodal displacement, M-orthogonal to every interpolated rigid motion.
    pub displacement: DVector<f64>,
    /// Nodal load after the compatibility projection onto `R^⊥`.
    pub load: DVector<f64>,
    /// L² norm of the rigid component removed from the load.
    pub removed_rigid_component: f64,
    /// `‖sym∇v‖²` of the solution.
    pub energy: f64,
    /// Relative residual of the reduced linear system.
    pub residual: f64,
}

/// Solve the equilibrium problem for a nodal load `f`. Incompatible loads are
/// projected onto `R^⊥` first; the removed component is reported.
pub fn solve_equilibrium(mesh: &Mesh, f: &DVector<f64>) -> Result<EquilibriumSolution> {
    let forms = assemble(mesh, false)?;
    if f.len() != forms.n_dofs() {
        return Err(Error::DimensionMismatch(format!(
            "load has {} entries, expected {}",
            f.len(),
            forms.n_dofs()
        )));
    }

    // M-orthogonal projection of f onto the rigid motions
    let motions = rigid::rigid_basis(mesh.dim())?;
    let basis: Vec<DVector<f64>> = motions
        .iter()
        .map(|m| interpolate(mesh, |x| m.evaluate(x)))
        .collect();
    let k = basis.len();
    let mut gram = nalgebra::DMatrix::zeros(k, k);
    let mut rhs = DVector::zeros(k);
    let mf = spmv(&forms.mass, f);
    for (i, bi) in basis.iter().enumerate() {
        rhs[i] = mf.dot(bi);
        let mbi = spmv(&forms.mass, bi);
        for (j, bj) in basis.iter().enumerate() {
            gram[(i, j)] = mbi.dot(bj);
        }
    }
    let coeffs = gram
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?
        .solve(&rhs);
    let mut rigid_part = DVector::zeros(f.len());
    for (i, bi) in basis.iter().enumerate() {
        rigid_part += bi * coeffs[i];
    }
    let load = f - &rigid_part;
    let removed_rigid_component = quad_form(&forms.mass, &rigid_part).max(0.0).sqrt();

    // reduced SPD system on the rigid-orthogonal space
    let cs = build_constraints(mesh, &forms, &[Constraint::OrthoRigid])?;
    if cs.null_dim() == 0 {
        return Err(Error::EmptyConstrainedSpace);
    }
    let z = &cs.null_basis;
    let ar = crate::fem::constraints_symmetrize(z.transpose() * crate::fem::spmm(&forms.sym, z));
    let b_reduced = z.transpose() * spmv(&forms.mass, &load);
    let chol = ar.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let u = chol.solve(&b_reduced);
    let displacement = cs.lift(&u);

    let residual_vec = &ar * &u - &b_reduced;
    let residual = residual_vec.norm() / b_reduced.norm().max(1e-300);
    let energy = quad_form(&forms.sym, &displacement);

    Ok(EquilibriumSolution {
        displacement,
        load,
        removed_rigid_component,
        energy,
        residual,
    })
}
