//! Flows of rigid-motion fields: fixed-step RK4 integration of `γ̇ = r(γ)`,
//! the closed-form solution (circles around the axis, with axial drift when
//! `⟨b,σ⟩ ≠ 0`), and signed-distance invariance reports against an analytic
//! boundary.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::{cross3, AnalyticBoundary};
use crate::rigid::RigidMotion;

/// Time-stamped trajectory of a flow.
#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    /// Maximum |signed distance| over the samples, when a boundary was given.
    pub max_deviation: Option<f64>,
    /// `|γ(T) − analytic endpoint|`.
    pub closure_error: Option<f64>,
}

impl FlowTrace {
    pub fn endpoint(&self) -> &DVector<f64> {
        self.points.last().expect("trace has at least the start point")
    }
}

/// Integrate `γ̇ = r(γ)` from `start` over `[0, t_final]` with classical RK4
/// at a fixed step of about `dt` (the step is rounded so the horizon is hit
/// exactly). Global error is O(dt⁴) against the closed form.
pub fn integrate_flow(
    r: &RigidMotion,
    start: &DVector<f64>,
    t_final: f64,
    dt: f64,
    boundary: Option<&AnalyticBoundary>,
) -> Result<FlowTrace> {
    if dt <= 0.0 || t_final <= 0.0 {
        return Err(Error::InvalidArgument(
            "horizon and step must be positive".into(),
        ));
    }
    if start.len() != r.dim() {
        return Err(Error::DimensionMismatch("start point dimension".into()));
    }
    let steps = ((t_final / dt - 1e-9).ceil() as usize).max(1);
    let h = t_final / steps as f64;

    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    let mut x = start.clone();
    times.push(0.0);
    points.push(x.clone());
    for k in 0..steps {
        let k1 = r.evaluate(&x);
        let k2 = r.evaluate(&(&x + &k1 * (h / 2.0)));
        let k3 = r.evaluate(&(&x + &k2 * (h / 2.0)));
        let k4 = r.evaluate(&(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteField);
        }
        times.push((k + 1) as f64 * h);
        points.push(x.clone());
    }

    let max_deviation = boundary.map(|b| {
        points
            .iter()
            .map(|p| b.signed_distance(p).abs())
            .fold(0.0, f64::max)
    });
    let closure_error = Some((analytic_flow(r, start, t_final)? - &x).norm());

    Ok(FlowTrace {
        times,
        points,
        max_deviation,
        closure_error,
    })
}

/// Closed-form solution of `γ̇ = r(γ), γ(0) = p` at time `t`: rotation about
/// the axis superposed with the axial drift `t ⟨b,σ⟩ σ`; a straight line for
/// a constant field.
pub fn analytic_flow(r: &RigidMotion, p: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
    if p.len() != r.dim() {
        return Err(Error::DimensionMismatch("start point dimension".into()));
    }
    match r.dim() {
        2 => {
            // embed into 3D with the rotation axis e3
            let (r3, p3) = embed_2d(r, p)?;
            let x = analytic_flow_3d(&r3, &p3, t);
            Ok(DVector::from_vec(vec![x[0], x[1]]))
        }
        _ => Ok(analytic_flow_3d(r, p, t)),
    }
}

fn embed_2d(r: &RigidMotion, p: &DVector<f64>) -> Result<(RigidMotion, DVector<f64>)> {
    let spin = r.spin_matrix();
    let shift = r.shift();
    let r3 = RigidMotion::new(
        3,
        vec![0.0, 0.0, spin[(1, 0)]],
        DVector::from_vec(vec![shift[0], shift[1], 0.0]),
    )?;
    Ok((r3, DVector::from_vec(vec![p[0], p[1], 0.0])))
}

fn analytic_flow_3d(r: &RigidMotion, p: &DVector<f64>, t: f64) -> DVector<f64> {
    let omega = r.angular_speed();
    let b = r.shift();
    if omega == 0.0 {
        return p + b * t;
    }
    let spin = r.spin_matrix();
    let sigma = DVector::from_vec(vec![
        spin[(2, 1)] / omega,
        spin[(0, 2)] / omega,
        spin[(1, 0)] / omega,
    ]);
    let (s1, s2) = orthonormal_complement(&sigma);

    let c1 = p.dot(&s1) + b.dot(&s2) / omega;
    let c2 = p.dot(&s2) - b.dot(&s1) / omega;
    let (sin, cos) = (omega * t).sin_cos();
    let u1 = c1 * cos - c2 * sin - b.dot(&s2) / omega;
    let u2 = c1 * sin + c2 * cos + b.dot(&s1) / omega;
    let u3 = p.dot(&sigma) + t * b.dot(&sigma);
    s1 * u1 + s2 * u2 + sigma * u3
}

/// Deterministic positively oriented orthonormal completion `{s1, s2, σ}`.
fn orthonormal_complement(sigma: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let mut k = 0;
    for i in 1..3 {
        if sigma[i].abs() < sigma[k].abs() {
            k = i;
        }
    }
    let mut s1 = DVector::zeros(3);
    s1[k] = 1.0;
    s1 -= sigma * sigma[k];
    s1 /= s1.norm();
    let s2 = cross3(sigma, &s1);
    (s1, s2)
}

/// Maximum |signed distance| of the trace samples to the boundary.
pub fn invariance_report(trace: &FlowTrace, boundary: &AnalyticBoundary) -> Result<f64> {
    let dim = boundary.dim();
    if trace.points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch("trace vs boundary dimension".into()));
    }
    Ok(trace
        .points
        .iter()
        .map(|p| boundary.signed_distance(p).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rot2() -> RigidMotion {
        RigidMotion::new(2, vec![1.0], DVector::zeros(2)).unwrap()
    }

    #[test]
    fn circle_closes_after_full_period() {
        let start = DVector::from_vec(vec![1.0, 0.0]);
        let trace = integrate_flow(&rot2(), &start, 2.0 * PI, 1e-3, None).unwrap();
        let endpoint = trace.endpoint();
        assert!((endpoint - &start).norm() <= 1e-8, "closure {}", (endpoint - &start).norm());
        assert!(trace.closure_error.unwrap() <= 1e-9);
    }

    #[test]
    fn constant_field_is_straight_line() {
        let b = DVector::from_vec(vec![0.25, -0.5, 1.0]);
        let r = RigidMotion::translation(b.clone()).unwrap();
        let start = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let trace = integrate_flow(&r, &start, 3.0, 0.1, None).unwrap();
        let expected = &start + &b * 3.0;
        assert!((trace.endpoint() - expected).norm() <= 1e-13);
    }

    #[test]
    fn helix_endpoint_matches_closed_form() {
        // r(x) = (-x2, x1, 1)
        let r = RigidMotion::new(3, vec![0.0, 0.0, 1.0], DVector::from_vec(vec![0.0, 0.0, 1.0]))
            .unwrap();
        let start = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let trace = integrate_flow(&r, &start, 2.0 * PI, 1e-3, None).unwrap();
        let expected = DVector::from_vec(vec![1.0, 0.0, 2.0 * PI]);
        assert!((trace.endpoint() - &expected).norm() <= 1e-8);
        // axial drift: s3(t) = ⟨p,σ⟩ + t⟨b,σ⟩
        let x = analytic_flow(&r, &start, 1.7).unwrap();
        assert_relative_eq!(x[2], 1.7, epsilon = 1e-14);
    }

    #[test]
    fn quarter_circle_analytic() {
        let r = RigidMotion::new(3, vec![0.0, 0.0, 1.0], DVector::zeros(3)).unwrap();
        let p = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let x = analytic_flow(&r, &p, FRAC_PI_2).unwrap();
        assert_relative_eq!(x[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-15);
        assert_relative_eq!(x[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rk4_agrees_with_analytic_for_random_motions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let spin: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
            let shift = DVector::from_fn(3, |_, _| rng.random::<f64>() - 0.5);
            let r = RigidMotion::new(3, spin, shift).unwrap();
            let p = DVector::from_fn(3, |_, _| 2.0 * (rng.random::<f64>() - 0.5));
            let trace = integrate_flow(&r, &p, 10.0, 1e-3, None).unwrap();
            let expected = analytic_flow(&r, &p, 10.0).unwrap();
            let err = (trace.endpoint() - &expected).norm();
            assert!(err <= 1e-7, "endpoint error {err}");
        }
    }

    #[test]
    fn rk4_fourth_order_endpoint_error() {
        let r = RigidMotion::new(3, vec![0.3, -0.4, 1.1], DVector::from_vec(vec![0.2, 0.0, -0.3]))
            .unwrap();
        let p = DVector::from_vec(vec![1.0, -0.5, 0.25]);
        let t = 4.0;
        let err = |dt: f64| {
            let trace = integrate_flow(&r, &p, t, dt, None).unwrap();
            (trace.endpoint() - analytic_flow(&r, &p, t).unwrap()).norm()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((12.0..=20.0).contains(&ratio), "order ratio {ratio}");
    }

    #[test]
    fn rotation_flow_stays_on_circle() {
        let disk = AnalyticBoundary::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        let start = DVector::from_vec(vec![1.0, 0.0]);
        let trace = integrate_flow(&rot2(), &start, 2.0 * PI, 1e-3, Some(&disk)).unwrap();
        assert!(trace.max_deviation.unwrap() <= 1e-8);
        assert_relative_eq!(
            invariance_report(&trace, &disk).unwrap(),
            trace.max_deviation.unwrap()
        );
    }

    #[test]
    fn rotation_flow_stays_on_half_cylinder_wall() {
        let hc = AnalyticBoundary::CylinderSector {
            radius: 1.0,
            height: 1.0,
            phi1: -FRAC_PI_2,
            phi2: FRAC_PI_2,
        };
        let r = RigidMotion::new(3, vec![0.0, 0.0, 1.0], DVector::zeros(3)).unwrap();
        // start on the curved wall, rotate while staying inside the angular range
        let start = DVector::from_vec(vec![(0.4_f64).cos(), (0.4_f64).sin(), 0.5]);
        let trace = integrate_flow(&r, &start, 0.8, 1e-3, Some(&hc)).unwrap();
        assert!(trace.max_deviation.unwrap() <= 1e-8);
    }

    #[test]
    fn tangential_constant_flow_on_box_face_until_edge() {
        let cube = AnalyticBoundary::Box {
            lo: vec![0.0, 0.0, 0.0],
            hi: vec![1.0, 1.0, 1.0],
        };
        let b = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let r = RigidMotion::translation(b).unwrap();
        // start mid-face on y = 0, move along x: on the face until x hits 1
        let start = DVector::from_vec(vec![0.5, 0.0, 0.5]);
        let inside = integrate_flow(&r, &start, 0.45, 0.05, Some(&cube)).unwrap();
        assert_eq!(inside.max_deviation.unwrap(), 0.0);
        let beyond = integrate_flow(&r, &start, 1.0, 0.05, Some(&cube)).unwrap();
        assert!(beyond.max_deviation.unwrap() > 0.4);
    }

    #[test]
    fn axis_distance_invariant_without_drift() {
        let sigma = DVector::from_vec(vec![0.0, 0.6, 0.8]);
        let point = DVector::from_vec(vec![0.3, -0.2, 0.1]);
        let r = RigidMotion::about_axis(&sigma, &point).unwrap();
        let p = DVector::from_vec(vec![1.0, 1.0, -0.5]);
        let dist = |x: &DVector<f64>| {
            let d = x - &point;
            (&d - &sigma * d.dot(&sigma)).norm()
        };
        let d0 = dist(&p);
        for t in [0.5, 1.5, 4.0] {
            let x = analytic_flow(&r, &p, t).unwrap();
            assert_relative_eq!(dist(&x), d0, max_relative = 1e-12);
        }
        let trace = integrate_flow(&r, &p, 4.0, 1e-3, None).unwrap();
        assert_relative_eq!(dist(trace.endpoint()), d0, max_relative = 1e-9);
    }

    #[test]
    fn bad_arguments_rejected() {
        let start = DVector::from_vec(vec![1.0, 0.0]);
        assert!(integrate_flow(&rot2(), &start, 0.0, 0.1, None).is_err());
        assert!(integrate_flow(&rot2(), &start, 1.0, -0.1, None).is_err());
        let p3 = DVector::zeros(3);
        assert!(integrate_flow(&rot2(), &p3, 1.0, 0.1, None).is_err());
    }
}
