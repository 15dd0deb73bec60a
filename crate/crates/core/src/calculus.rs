//! Checks of the second-derivative identity
//! `∂i∂j v_k = ∂i sym_{jk}∇v + ∂j sym_{ik}∇v − ∂k sym_{ij}∇v`,
//! symbolically on polynomial fields and by central differences on sampled
//! fields.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};

/// Dense multivariate polynomial with double coefficients, exponents capped
/// at degree 6 for exactness in floating arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<[u8; 3], f64>,
}

pub const MAX_DEGREE: usize = 6;

impl Poly {
    pub fn zero(dim: usize) -> Poly {
        Poly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn add_term(&mut self, exps: &[usize], coeff: f64) {
        let mut key = [0u8; 3];
        for (i, &e) in exps.iter().enumerate() {
            key[i] = e as u8;
        }
        *self.terms.entry(key).or_insert(0.0) += coeff;
    }

    pub fn diff(&self, axis: usize) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (&exps, &c) in &self.terms {
            if exps[axis] == 0 {
                continue;
            }
            let mut e = exps;
            e[axis] -= 1;
            *out.terms.entry(e).or_insert(0.0) += c * exps[axis] as f64;
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (&e, &c) in &other.terms {
            *out.terms.entry(e).or_insert(0.0) -= c;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (&e, &c) in &other.terms {
            *out.terms.entry(e).or_insert(0.0) += c;
        }
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (&exps, &c) in &self.terms {
            let mut t = c;
            for (i, &e) in exps.iter().take(self.dim).enumerate() {
                t *= x[i].powi(e as i32);
            }
            s += t;
        }
        s
    }

    /// Dense random polynomial of the given total degree, coefficients in
    /// [-1, 1].
    pub fn random<R: Rng>(dim: usize, degree: usize, rng: &mut R) -> Result<Poly> {
        if degree > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "degree {degree} exceeds cap {MAX_DEGREE}"
            )));
        }
        let mut p = Poly::zero(dim);
        let mut exps = vec![0usize; dim];
        fill_random(&mut p, &mut exps, 0, degree, rng);
        Ok(p)
    }
}

fn fill_random<R: Rng>(p: &mut Poly, exps: &mut [usize], axis: usize, left: usize, rng: &mut R) {
    if axis == exps.len() {
        p.add_term(exps, 2.0 * rng.random::<f64>() - 1.0);
        return;
    }
    for e in 0..=left {
        exps[axis] = e;
        fill_random(p, exps, axis + 1, left - e, rng);
    }
    exps[axis] = 0;
}

/// Polynomial vector field.
#[derive(Debug, Clone)]
pub struct PolyField {
    pub dim: usize,
    pub components: Vec<Poly>,
}

impl PolyField {
    pub fn new(components: Vec<Poly>) -> Result<PolyField> {
        let dim = components.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(PolyField { dim, components })
    }

    pub fn random<R: Rng>(dim: usize, degree: usize, rng: &mut R) -> Result<PolyField> {
        let components = (0..dim)
            .map(|_| Poly::random(dim, degree, rng))
            .collect::<Result<Vec<_>>>()?;
        PolyField::new(components)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval(x)).collect()
    }

    /// `sym_{jk}∇v = (∂_j v_k + ∂_k v_j)/2` as a polynomial.
    fn sym_component(&self, j: usize, k: usize) -> Poly {
        self.components[k]
            .diff(j)
            .add(&self.components[j].diff(k))
            .scale(0.5)
    }
}

/// Maximum coefficient residual of the identity over all index triples;
/// zero up to rounding for every polynomial field.
pub fn check_identity(field: &PolyField) -> f64 {
    let n = field.dim;
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let lhs = field.components[k].diff(j).diff(i);
                let rhs = field
                    .sym_component(j, k)
                    .diff(i)
                    .add(&field.sym_component(i, k).diff(j))
                    .sub(&field.sym_component(i, j).diff(k));
                worst = worst.max(lhs.sub(&rhs).max_abs_coeff());
            }
        }
    }
    worst
}

/// Contracted form: `Δv = 2 div sym∇v − ∇ div v`, coefficient residual.
pub fn check_laplacian_identity(field: &PolyField) -> f64 {
    let n = field.dim;
    let mut worst = 0.0_f64;
    for k in 0..n {
        let mut laplacian = Poly::zero(n);
        let mut div_sym = Poly::zero(n);
        for i in 0..n {
            laplacian = laplacian.add(&field.components[k].diff(i).diff(i));
            div_sym = div_sym.add(&field.sym_component(i, k).diff(i));
        }
        let mut div = Poly::zero(n);
        for i in 0..n {
            div = div.add(&field.components[i].diff(i));
        }
        let rhs = div_sym.scale(2.0).sub(&div.diff(k));
        worst = worst.max(laplacian.sub(&rhs).max_abs_coeff());
    }
    worst
}

/// Finite-difference variant of the identity check on a fixed sample grid;
/// the residual decays as O(h²) for smooth fields.
pub fn check_identity_fd<F>(field: &F, dim: usize, h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if h <= 0.0 {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    let samples: Vec<Vec<f64>> = match dim {
        2 => vec![vec![0.3, 0.4], vec![-0.2, 0.7], vec![0.55, -0.15]],
        3 => vec![
            vec![0.3, 0.4, -0.1],
            vec![-0.2, 0.6, 0.35],
            vec![0.45, -0.25, 0.2],
        ],
        d => return Err(Error::UnsupportedDimension(d)),
    };

    let at = |x: &[f64], k: usize| -> f64 { field(x)[k] };
    // first central difference of component k along axis j
    let d1 = |x: &[f64], j: usize, k: usize| -> f64 {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        (at(&xp, k) - at(&xm, k)) / (2.0 * h)
    };
    let sym = |x: &[f64], j: usize, k: usize| -> f64 { 0.5 * (d1(x, j, k) + d1(x, k, j)) };
    // second central difference of component k
    let d2 = |x: &[f64], i: usize, j: usize, k: usize| -> f64 {
        if i == j {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (at(&xp, k) - 2.0 * at(x, k) + at(&xm, k)) / (h * h)
        } else {
            let mut xpp = x.to_vec();
            let mut xpm = x.to_vec();
            let mut xmp = x.to_vec();
            let mut xmm = x.to_vec();
            xpp[i] += h;
            xpp[j] += h;
            xpm[i] += h;
            xpm[j] -= h;
            xmp[i] -= h;
            xmp[j] += h;
            xmm[i] -= h;
            xmm[j] -= h;
            (at(&xpp, k) - at(&xpm, k) - at(&xmp, k) + at(&xmm, k)) / (4.0 * h * h)
        }
    };
    // outer central difference of a sampled function
    let d_outer = |x: &[f64], i: usize, f: &dyn Fn(&[f64]) -> f64| -> f64 {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    };

    let mut worst = 0.0_f64;
    for x in &samples {
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let lhs = d2(x, i, j, k);
                    let rhs = d_outer(x, i, &|y| sym(y, j, k))
                        + d_outer(x, j, &|y| sym(y, i, k))
                        - d_outer(x, k, &|y| sym(y, i, j));
                    let diff = (lhs - rhs).abs();
                    if !diff.is_finite() {
                        return Err(Error::NonFiniteField);
                    }
                    worst = worst.max(diff);
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn quadratic_field_identity_exact() {
        // v(x) = (x1², x1 x2)
        let mut p1 = Poly::zero(2);
        p1.add_term(&[2, 0], 1.0);
        let mut p2 = Poly::zero(2);
        p2.add_term(&[1, 1], 1.0);
        let field = PolyField::new(vec![p1, p2]).unwrap();
        assert!(check_identity(&field) <= 1e-14);
    }

    #[test]
    fn linear_field_both_sides_vanish() {
        let mut p1 = Poly::zero(2);
        p1.add_term(&[1, 0], 3.0);
        p1.add_term(&[0, 0], -1.0);
        let mut p2 = Poly::zero(2);
        p2.add_term(&[0, 1], 2.0);
        let field = PolyField::new(vec![p1, p2]).unwrap();
        assert_eq!(check_identity(&field), 0.0);
    }

    #[test]
    fn random_degree4_fields_2d_and_3d() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for dim in [2usize, 3] {
            for _ in 0..100 {
                let field = PolyField::random(dim, 4, &mut rng).unwrap();
                assert!(check_identity(&field) <= 1e-12);
                assert!(check_laplacian_identity(&field) <= 1e-12);
            }
        }
    }

    #[test]
    fn degree_cap_enforced() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(Poly::random(2, 7, &mut rng).is_err());
        assert!(Poly::random(3, 6, &mut rng).is_ok());
    }

    #[test]
    fn fd_second_order_convergence_for_sine_field() {
        let field = |x: &[f64]| vec![x[1].sin(), 0.0];
        let r1 = check_identity_fd(&field, 2, 1e-2).unwrap();
        let r2 = check_identity_fd(&field, 2, 5e-3).unwrap();
        let ratio = r1 / r2;
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn fd_exact_for_low_degree_fields() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let quad = PolyField::random(2, 2, &mut rng).unwrap();
        // differences are exact for quadratics; the floor is rounding ~ eps/h²
        for h in [0.5, 0.1, 1e-2] {
            let r = check_identity_fd(&|x: &[f64]| quad.eval(x), 2, h).unwrap();
            assert!(r <= 1e-10, "quadratic residual {r} at h = {h}");
        }
        let cubic = PolyField::random(3, 3, &mut rng).unwrap();
        let r = check_identity_fd(&|x: &[f64]| cubic.eval(x), 3, 1e-2).unwrap();
        assert!(r <= 1e-9, "cubic residual {r}");
    }

    #[test]
    fn fd_rejects_bad_step() {
        let field = |x: &[f64]| vec![x[0], x[1]];
        assert!(check_identity_fd(&field, 2, 0.0).is_err());
    }
}
