//! Exact boundary descriptors: signed distances and outer unit normals for the
//! catalog domains. Signed distance is zero on the surface, negative inside and
//! 1-Lipschitz; it does not have to be the Euclidean distance away from the
//! nearest face.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Analytic description of a domain boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticBoundary {
    /// Axis-aligned box `[lo_i, hi_i]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Disk of given center and radius (2D).
    Disk { center: [f64; 2], radius: f64 },
    /// Ball of given center and radius (3D).
    Ball { center: [f64; 3], radius: f64 },
    /// Cylinder sector `{(r cosφ, r sinφ, z) : 0<r<radius, φ1<φ<φ2, 0<z<height}`.
    ///
    /// The angular span must satisfy `-π < φ1 < φ2 ≤ π`. The half cylinder is
    /// the special case `φ1 = -π/2`, `φ2 = π/2`.
    CylinderSector {
        radius: f64,
        height: f64,
        phi1: f64,
        phi2: f64,
    },
}

/// Which geometric piece of a composite boundary is active at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    BoxFace { axis: usize, upper: bool },
    Round,
    WedgeRay { second: bool },
    Cap { upper: bool },
}

impl AnalyticBoundary {
    pub fn dim(&self) -> usize {
        match self {
            AnalyticBoundary::Box { lo, .. } => lo.len(),
            AnalyticBoundary::Disk { .. } => 2,
            AnalyticBoundary::Ball { .. } | AnalyticBoundary::CylinderSector { .. } => 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AnalyticBoundary::Box { lo, hi } => {
                if lo.len() != hi.len() || !(2..=3).contains(&lo.len()) {
                    return Err(Error::InvalidDomain("box bounds dimension".into()));
                }
                if lo.iter().zip(hi).any(|(a, b)| a >= b) {
                    return Err(Error::InvalidDomain("box needs lo < hi per axis".into()));
                }
            }
            AnalyticBoundary::Disk { radius, .. } | AnalyticBoundary::Ball { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(Error::InvalidDomain("radius must be positive".into()));
                }
            }
            AnalyticBoundary::CylinderSector {
                radius,
                height,
                phi1,
                phi2,
            } => {
                if *radius <= 0.0 || *height <= 0.0 {
                    return Err(Error::InvalidDomain(
                        "sector radius and height must be positive".into(),
                    ));
                }
                if !(-std::f64::consts::PI < *phi1 && phi1 < phi2 && *phi2 <= std::f64::consts::PI)
                {
                    return Err(Error::InvalidDomain(
                        "sector angles must satisfy -pi < phi1 < phi2 <= pi".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Signed distance: negative inside, zero on the surface, positive outside.
    pub fn signed_distance(&self, x: &DVector<f64>) -> f64 {
        self.pieces(x)
            .into_iter()
            .map(|(_, d)| d)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Outer unit normal at `x`, selecting the boundary piece nearest to `x`.
    pub fn normal(&self, x: &DVector<f64>) -> DVector<f64> {
        self.piece_normal(x, x)
    }

    /// Outer unit normal evaluated at `x` on the boundary piece that is active
    /// at `anchor`. Anchoring at a facet centroid keeps seam vertices (which
    /// lie on two pieces at once) attached to the facet's own surface piece.
    pub fn piece_normal(&self, anchor: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        let piece = self
            .pieces(anchor)
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(p, _)| p)
            .expect("descriptor has at least one piece");
        self.normal_of_piece(piece, x)
    }

    /// Per-piece signed distances (the overall signed distance is their max).
    fn pieces(&self, x: &DVector<f64>) -> Vec<(Piece, f64)> {
        match self {
            AnalyticBoundary::Box { lo, hi } => (0..lo.len())
                .map(|i| {
                    let below = lo[i] - x[i];
                    let above = x[i] - hi[i];
                    if above >= below {
                        (Piece::BoxFace { axis: i, upper: true }, above)
                    } else {
                        (Piece::BoxFace { axis: i, upper: false }, below)
                    }
                })
                .collect(),
            AnalyticBoundary::Disk { center, radius } => {
                let r = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt();
                vec![(Piece::Round, r - radius)]
            }
            AnalyticBoundary::Ball { center, radius } => {
                let r = ((x[0] - center[0]).powi(2)
                    + (x[1] - center[1]).powi(2)
                    + (x[2] - center[2]).powi(2))
                .sqrt();
                vec![(Piece::Round, r - radius)]
            }
            AnalyticBoundary::CylinderSector {
                radius,
                height,
                phi1,
                phi2,
            } => {
                let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let (ray_piece, wedge) = wedge_signed_distance(x[0], x[1], *phi1, *phi2);
                vec![
                    (Piece::Round, rho - radius),
                    (ray_piece, wedge),
                    (Piece::Cap { upper: false }, -x[2]),
                    (Piece::Cap { upper: true }, x[2] - height),
                ]
            }
        }
    }

    fn normal_of_piece(&self, piece: Piece, x: &DVector<f64>) -> DVector<f64> {
        let n = x.len();
        match (self, piece) {
            (_, Piece::BoxFace { axis, upper }) => {
                let mut v = DVector::zeros(n);
                v[axis] = if upper { 1.0 } else { -1.0 };
                v
            }
            (AnalyticBoundary::Disk { center, .. }, Piece::Round) => {
                radial_unit(&[x[0] - center[0], x[1] - center[1]])
            }
            (AnalyticBoundary::Ball { center, .. }, Piece::Round) => {
                radial_unit(&[x[0] - center[0], x[1] - center[1], x[2] - center[2]])
            }
            (AnalyticBoundary::CylinderSector { .. }, Piece::Round) => {
                radial_unit(&[x[0], x[1], 0.0])
            }
            (AnalyticBoundary::CylinderSector { phi1, phi2, .. }, Piece::WedgeRay { second }) => {
                let phi = if second { *phi2 } else { *phi1 };
                let sign = if second { 1.0 } else { -1.0 };
                DVector::from_vec(vec![-sign * phi.sin(), sign * phi.cos(), 0.0])
            }
            (_, Piece::Cap { upper }) => {
                let mut v = DVector::zeros(n);
                v[n - 1] = if upper { 1.0 } else { -1.0 };
                v
            }
            _ => unreachable!("piece does not belong to this descriptor"),
        }
    }

    /// Descriptor for the same domain with all lengths scaled by `s > 0`.
    pub fn scaled(&self, s: f64) -> AnalyticBoundary {
        match self {
            AnalyticBoundary::Box { lo, hi } => AnalyticBoundary::Box {
                lo: lo.iter().map(|v| v * s).collect(),
                hi: hi.iter().map(|v| v * s).collect(),
            },
            AnalyticBoundary::Disk { center, radius } => AnalyticBoundary::Disk {
                center: [center[0] * s, center[1] * s],
                radius: radius * s,
            },
            AnalyticBoundary::Ball { center, radius } => AnalyticBoundary::Ball {
                center: [center[0] * s, center[1] * s, center[2] * s],
                radius: radius * s,
            },
            AnalyticBoundary::CylinderSector {
                radius,
                height,
                phi1,
                phi2,
            } => AnalyticBoundary::CylinderSector {
                radius: radius * s,
                height: height * s,
                phi1: *phi1,
                phi2: *phi2,
            },
        }
    }
}

fn radial_unit(v: &[f64]) -> DVector<f64> {
    let mut out = DVector::from_column_slice(v);
    let norm = out.norm();
    if norm == 0.0 {
        out[0] = 1.0;
        return out;
    }
    out / norm
}

/// Signed distance of the planar point `(x, y)` to the infinite wedge
/// `{r (cosφ, sinφ) : φ1 ≤ φ ≤ φ2, r ≥ 0}` plus the ray that realizes it.
fn wedge_signed_distance(x: f64, y: f64, phi1: f64, phi2: f64) -> (Piece, f64) {
    let d1 = ray_distance(x, y, phi1);
    let d2 = ray_distance(x, y, phi2);
    let (piece, d) = if d1 <= d2 {
        (Piece::WedgeRay { second: false }, d1)
    } else {
        (Piece::WedgeRay { second: true }, d2)
    };
    let phi = y.atan2(x);
    let inside = phi1 <= phi && phi <= phi2;
    if inside || (x == 0.0 && y == 0.0) {
        (piece, -d)
    } else {
        (piece, d)
    }
}

/// Euclidean distance from `(x, y)` to the ray `{t (cosφ, sinφ) : t ≥ 0}`.
fn ray_distance(x: f64, y: f64, phi: f64) -> f64 {
    let along = x * phi.cos() + y * phi.sin();
    if along >= 0.0 {
        (-x * phi.sin() + y * phi.cos()).abs()
    } else {
        (x * x + y * y).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn v2(x: f64, y: f64) -> DVector<f64> {
        DVector::from_vec(vec![x, y])
    }

    fn v3(x: f64, y: f64, z: f64) -> DVector<f64> {
        DVector::from_vec(vec![x, y, z])
    }

    #[test]
    fn disk_distance_and_normal() {
        let d = AnalyticBoundary::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        assert_relative_eq!(d.signed_distance(&v2(0.5, 0.0)), -0.5);
        assert_relative_eq!(d.signed_distance(&v2(2.0, 0.0)), 1.0);
        let theta = 0.7_f64;
        let n = d.normal(&v2(0.9 * theta.cos(), 0.9 * theta.sin()));
        assert_relative_eq!(n[0], theta.cos(), epsilon = 1e-15);
        assert_relative_eq!(n[1], theta.sin(), epsilon = 1e-15);
    }

    #[test]
    fn box_distance_zero_on_face_and_normal_axis_aligned() {
        let b = AnalyticBoundary::Box {
            lo: vec![0.0, 0.0, 0.0],
            hi: vec![1.0, 1.0, 1.0],
        };
        assert_eq!(b.signed_distance(&v3(0.3, 0.0, 0.4)), 0.0);
        assert!(b.signed_distance(&v3(0.5, 0.5, 0.5)) < 0.0);
        let n = b.normal(&v3(0.3, 0.0, 0.4));
        assert_eq!(n.as_slice(), &[0.0, -1.0, 0.0]);
        let n = b.normal(&v3(0.5, 0.5, 1.0));
        assert_eq!(n.as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn half_cylinder_flat_face_and_wall() {
        let hc = AnalyticBoundary::CylinderSector {
            radius: 1.0,
            height: 1.0,
            phi1: -FRAC_PI_2,
            phi2: FRAC_PI_2,
        };
        // on the flat face x1 = 0
        assert_relative_eq!(hc.signed_distance(&v3(0.0, 0.5, 0.5)), 0.0);
        let n = hc.normal(&v3(0.0, 0.5, 0.5));
        assert_relative_eq!(n[0], -1.0, epsilon = 1e-15);
        assert_relative_eq!(n[1], 0.0, epsilon = 1e-15);
        // on the curved wall
        let p = v3((PI / 4.0).cos(), (PI / 4.0).sin(), 0.3);
        assert_relative_eq!(hc.signed_distance(&p), 0.0, epsilon = 1e-15);
        // interior
        assert!(hc.signed_distance(&v3(0.5, 0.0, 0.5)) < 0.0);
        // outside through the flat face
        assert_relative_eq!(hc.signed_distance(&v3(-0.2, 0.0, 0.5)), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn seam_vertex_uses_anchor_piece() {
        let hc = AnalyticBoundary::CylinderSector {
            radius: 1.0,
            height: 1.0,
            phi1: -FRAC_PI_2,
            phi2: FRAC_PI_2,
        };
        // Seam point on both the wall and the flat face; anchor in the wall's
        // interior must yield the radial normal evaluated at the seam point.
        let seam = v3(0.0, 1.0, 0.5);
        let anchor = v3((0.1_f64).cos(), (0.1_f64).sin(), 0.5);
        let n = hc.piece_normal(&anchor, &seam);
        assert_relative_eq!(n[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(n[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn wedge_distance_matches_sampling_oracle() {
        // Brute-force oracle: distance to a dense sampling of the wedge rays.
        let (phi1, phi2) = (-0.3_f64, 2.2_f64);
        for &(x, y) in &[(0.4, 0.1), (-0.5, 0.2), (0.3, -0.8), (-1.0, -1.0), (0.0, 1.3)] {
            let (_, sd) = wedge_signed_distance(x, y, phi1, phi2);
            let mut best = f64::INFINITY;
            for ray in [phi1, phi2] {
                for k in 0..20_000 {
                    let t = 3.0 * k as f64 / 20_000.0;
                    let (rx, ry) = (t * ray.cos(), t * ray.sin());
                    best = best.min(((x - rx).powi(2) + (y - ry).powi(2)).sqrt());
                }
            }
            assert_relative_eq!(sd.abs(), best, epsilon = 2e-4);
            let phi = y.atan2(x);
            assert_eq!(sd < 0.0, phi1 <= phi && phi <= phi2, "sign at ({x},{y})");
        }
    }

    #[test]
    fn sector_angle_validation() {
        let bad = AnalyticBoundary::CylinderSector {
            radius: 1.0,
            height: 1.0,
            phi1: 1.0,
            phi2: 0.5,
        };
        assert!(bad.validate().is_err());
        assert!(matches!(bad.validate(), Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn ball_scaled() {
        let b = AnalyticBoundary::Ball {
            center: [0.0, 0.0, 0.0],
            radius: 1.0,
        };
        let s = b.scaled(2.0);
        assert_relative_eq!(s.signed_distance(&v3(2.0, 0.0, 0.0)), 0.0);
        assert_relative_eq!(s.signed_distance(&v3(0.0, 0.0, 0.0)), -2.0);
        assert!(matches!(
            AnalyticBoundary::Box { lo: vec![0.0], hi: vec![1.0] }.validate(),
            Err(_)
        ));
        let _ = PI;
    }
}
