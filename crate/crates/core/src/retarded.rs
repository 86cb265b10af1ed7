//! Retarded-time solving: the unique t' <= t_obs on a source world line with
//! c*(t_obs - t') = |x_obs - x_src(t')|.
//!
//! For subluminal sources f(t') = c(t_obs - t') - |x_obs - x_src(t')| is
//! strictly decreasing (|dr/dt'| <= |v| < c), so the backward-expanding
//! bracket always contains exactly one root and safeguarded Newton converges.

use crate::error::{Result, SimError};
use crate::solve::solve_decreasing_backward;
use crate::vec3::Vec3;
use crate::worldline::{KinState, WorldLine};

/// Source kinematics at the retarded time, with the pieces the potential
/// needs precomputed.
#[derive(Clone, Copy, Debug)]
pub struct RetardedEvent {
    pub t_ret: f64,
    pub source_state: KinState,
    /// Observer position minus source position at the retarded time.
    pub r_vec: Vec3,
    pub r: f64,
    /// c*r - r_vec . v_ret; strictly positive for r > 0 and subluminal sources.
    pub denom: f64,
}

/// Mixed absolute/relative residual bound for the retardation constraint.
fn residual_tol(c: f64, t_obs: f64, r: f64, factor: f64) -> f64 {
    factor * (c * t_obs.abs() + r + 1.0)
}

/// The unique retarded time t' <= t_obs for observer (t_obs, x_obs), at the
/// default tolerances.
///
/// `w` must cover the retarded time (its prehistory extrapolates inertially,
/// so only future exhaustion of sampled histories can fail here).
pub fn retarded_time(c: f64, t_obs: f64, x_obs: Vec3, w: &WorldLine) -> Result<f64> {
    let tol = crate::Tolerances::default();
    retarded_time_with(c, t_obs, x_obs, w, tol.retard_residual_factor, tol.solver_max_iter)
}

pub fn retarded_time_with(
    c: f64,
    t_obs: f64,
    x_obs: Vec3,
    w: &WorldLine,
    tol_factor: f64,
    max_iter: u32,
) -> Result<f64> {
    let s_now = w.state(t_obs, c)?;
    let r_now = (x_obs - s_now.pos).norm();
    if r_now == 0.0 {
        // Observer sits on the source point: degenerate coincidence, t' = t_obs.
        return Ok(t_obs);
    }

    // The solver evaluates f before tol at each iterate, so the tolerance can
    // reuse the distance from the latest f evaluation instead of querying the
    // world line again.
    let r_latest = std::cell::Cell::new(r_now);
    let mut inner_err = None;
    let f = |t: f64| -> (f64, f64) {
        match w.state(t, c) {
            Ok(s) => {
                let rv = x_obs - s.pos;
                let r = rv.norm();
                r_latest.set(r);
                let val = c * (t_obs - t) - r;
                // dr/dt = -n.v; guard the r=0 coincidence inside the search.
                let deriv = if r > 0.0 { -c + rv.dot(s.vel) / r } else { -c };
                (val, deriv)
            }
            Err(e) => {
                inner_err = Some(e);
                (f64::NAN, f64::NAN)
            }
        }
    };
    let result = solve_decreasing_backward(
        f,
        t_obs,
        r_now / c,
        |_| residual_tol(c, t_obs, r_latest.get(), tol_factor),
        max_iter,
    );
    if let Some(e) = inner_err {
        return Err(e);
    }
    result
}

/// Retarded time plus the source state and Lienard-Wiechert denominator.
///
/// Fails with [`SimError::SingularField`] when the observer is within
/// `r_min` of the retarded source point.
pub fn retarded_state(
    c: f64,
    t_obs: f64,
    x_obs: Vec3,
    w: &WorldLine,
    r_min: f64,
) -> Result<RetardedEvent> {
    let t_ret = retarded_time(c, t_obs, x_obs, w)?;
    let source_state = w.state(t_ret, c)?;
    let r_vec = x_obs - source_state.pos;
    let r = r_vec.norm();
    if r < r_min {
        return Err(SimError::SingularField { r, r_min });
    }
    let denom = c * r - r_vec.dot(source_state.vel);
    Ok(RetardedEvent {
        t_ret,
        source_state,
        r_vec,
        r,
        denom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{FourVector, LorentzTransform};
    use crate::worldline::transform_worldline;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn static_source_is_t_minus_r_over_c() {
        let w = WorldLine::at_rest(Vec3::ZERO);
        let t = retarded_time(1.0, 10.0, Vec3::new(5.0, 0.0, 0.0), &w).unwrap();
        // Residual contract: |c(t_obs - t') - r| <= 1e-13 (c|t_obs| + r + 1).
        assert!((t - 5.0).abs() <= 1e-13 * 16.0);
    }

    /// Closed-form quadratic root for an inertial source, smaller branch.
    fn inertial_oracle(c: f64, t_obs: f64, x_obs: Vec3, x0: Vec3, vel: Vec3, t0: f64) -> f64 {
        let b = x_obs - x0;
        let big_t = t_obs - t0;
        let a = vel.norm_sq() - c * c;
        let bb = 2.0 * (c * c * big_t - b.dot(vel));
        let cc = b.norm_sq() - c * c * big_t * big_t;
        let disc = (bb * bb - 4.0 * a * cc).sqrt();
        let tau1 = (-bb + disc) / (2.0 * a);
        let tau2 = (-bb - disc) / (2.0 * a);
        t0 + tau1.min(tau2)
    }

    #[test]
    fn inertial_source_matches_quadratic() {
        let c = 1.0;
        let vel = Vec3::new(0.4, 0.0, 0.0);
        let w = WorldLine::inertial(0.0, Vec3::ZERO, vel, c).unwrap();
        let x_obs = Vec3::new(3.0, 2.0, -1.0);
        let t_obs = 6.0;
        let got = retarded_time(c, t_obs, x_obs, &w).unwrap();
        let want = inertial_oracle(c, t_obs, x_obs, Vec3::ZERO, vel, 0.0);
        assert!((got - want).abs() < 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn coincident_observer_returns_t_obs() {
        let w = WorldLine::at_rest(Vec3::new(1.0, 2.0, 3.0));
        let t = retarded_time(1.0, 4.0, Vec3::new(1.0, 2.0, 3.0), &w).unwrap();
        assert_eq!(t, 4.0);
    }

    #[test]
    fn static_denominator_is_cr() {
        let c = 2.0;
        let w = WorldLine::at_rest(Vec3::ZERO);
        let ev = retarded_state(c, 10.0, Vec3::new(0.0, 3.0, 0.0), &w, 1e-9).unwrap();
        assert!((ev.denom - c * 3.0).abs() < 1e-12);
        assert!((ev.r - ev.r_vec.norm()).abs() <= 1e-14 * ev.r);
    }

    #[test]
    fn receding_source_denominator() {
        // Source receding along the line of sight at speed v: denom = r(c+v).
        let c = 1.0;
        let v = 0.5;
        let w = WorldLine::inertial(0.0, Vec3::ZERO, Vec3::new(-v, 0.0, 0.0), c).unwrap();
        let ev = retarded_state(c, 20.0, Vec3::new(4.0, 0.0, 0.0), &w, 0.0).unwrap();
        assert!((ev.denom - ev.r * (c + v)).abs() < 1e-10 * ev.denom);
    }

    #[test]
    fn singular_radius_refused() {
        let w = WorldLine::at_rest(Vec3::ZERO);
        let got = retarded_state(1.0, 1.0, Vec3::new(1e-12, 0.0, 0.0), &w, 1e-9);
        assert!(matches!(got, Err(SimError::SingularField { .. })));
    }

    #[test]
    fn random_sweep_denominator_positive_and_causal() {
        let mut rng = StdRng::seed_from_u64(42);
        let c = 1.0;
        for _ in 0..200 {
            let which: u8 = rng.random_range(0..2);
            let w = if which == 0 {
                let v = Vec3::new(
                    rng.random_range(-0.55..0.55),
                    rng.random_range(-0.55..0.55),
                    rng.random_range(-0.55..0.55),
                );
                WorldLine::inertial(0.0, Vec3::new(rng.random_range(-1.0..1.0), 0.0, 0.0), v, c)
                    .unwrap()
            } else {
                let radius = rng.random_range(0.2..2.0);
                let w_max = 0.9 * c / radius;
                WorldLine::circular(Vec3::ZERO, radius, rng.random_range(0.1..w_max), c).unwrap()
            };
            let t_obs = rng.random_range(-3.0..3.0);
            let x_obs = Vec3::new(
                rng.random_range(-8.0..8.0),
                rng.random_range(-8.0..8.0),
                rng.random_range(-8.0..8.0),
            );
            let ev = match retarded_state(c, t_obs, x_obs, &w, 1e-6) {
                Ok(ev) => ev,
                Err(SimError::SingularField { .. }) => continue,
                Err(e) => panic!("unexpected error: {e}"),
            };
            assert!(ev.t_ret <= t_obs);
            assert!(
                ev.denom > 0.0,
                "denominator must be positive, got {}",
                ev.denom
            );
            let residual = (c * (t_obs - ev.t_ret) - ev.r).abs();
            assert!(residual <= 1e-13 * (c * t_obs.abs() + ev.r + 1.0));
        }
    }

    #[test]
    fn lorentz_compatibility_of_retarded_event() {
        // Transforming observer event and world line, then re-solving, lands on
        // the image of the same retarded source event.
        let c = 1.0;
        let w = WorldLine::circular(Vec3::ZERO, 1.0, 0.45, c).unwrap();
        let t_obs = 2.0;
        let x_obs = Vec3::new(3.0, -1.0, 0.5);
        let ev = retarded_state(c, t_obs, x_obs, &w, 0.0).unwrap();
        let src_event = FourVector::event(c, ev.t_ret, ev.source_state.pos);

        let l = LorentzTransform::boost(Vec3::new(0.35, 0.2, -0.4)).unwrap();
        let obs2 = l.apply(&FourVector::event(c, t_obs, x_obs));
        let w2 = transform_worldline(&l, &w, c);
        let ev2 = retarded_state(c, obs2.time(c), obs2.spatial(), &w2, 0.0).unwrap();
        let src_event2 = FourVector::event(c, ev2.t_ret, ev2.source_state.pos);

        let want = l.apply(&src_event);
        let scale = 1.0 + want.spatial().norm() + want[0].abs();
        for i in 0..4 {
            assert!(
                (src_event2[i] - want[i]).abs() < 1e-9 * scale,
                "component {i}: {} vs {}",
                src_event2[i],
                want[i]
            );
        }
    }
}
