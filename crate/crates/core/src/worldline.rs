//! World-line representation: trajectories queryable for position, velocity
//! and acceleration at any coordinate time, plus reparameterization into a
//! Lorentz-transformed frame.
//!
//! Everything is parameterized by coordinate time t of one global frame with
//! x0(t) = c*t; proper time never appears as a state variable.

use crate::error::{Result, SimError};
use crate::kinematics::{FourVector, LorentzTransform};
use crate::solve::solve_monotone;
use crate::vec3::Vec3;

/// Kinematic snapshot of a world line at one coordinate time.
#[derive(Clone, Copy, Debug)]
pub struct KinState {
    pub t: f64,
    pub pos: Vec3,
    /// Coordinate velocity; subluminal by construction of the producing line.
    pub vel: Vec3,
    pub acc: Vec3,
}

/// One stored sample of a particle trajectory.
///
/// Nodes carry acceleration as well: the field of a source depends on its
/// acceleration at the retarded time, so the interpolant must reproduce it
/// to the integrator's order.
#[derive(Clone, Copy, Debug)]
pub struct HistoryNode {
    pub t: f64,
    pub pos: Vec3,
    pub vel: Vec3,
    pub acc: Vec3,
}

/// What a sampled history does for queries past its newest node.
///
/// Queries before the first node always extrapolate inertially with the
/// first node's velocity, which keeps retarded quantities well defined at
/// startup.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FuturePolicy {
    /// Reject with a history-exhausted error.
    Error,
    /// Extrapolate inertially from the newest node (used by the integrator
    /// for intra-step stage queries).
    ExtrapolateInertial,
}

/// Append-only trajectory record with quintic Hermite interpolation between
/// nodes: position, velocity and acceleration at the nodes are reproduced
/// exactly and the interpolant is C2 across them.
#[derive(Clone, Debug)]
pub struct SampledHistory {
    nodes: Vec<HistoryNode>,
    future: FuturePolicy,
    capacity: Option<usize>,
}

impl SampledHistory {
    pub fn new(first: HistoryNode, future: FuturePolicy, c: f64) -> Result<Self> {
        validate_node(&first, c)?;
        Ok(SampledHistory {
            nodes: vec![first],
            future,
            capacity: None,
        })
    }

    /// Bound the node count; once full, appending drops the oldest node and
    /// the prehistory anchor moves with it.
    pub fn with_capacity_limit(mut self, max_nodes: Option<usize>) -> Self {
        self.capacity = max_nodes;
        self
    }

    /// Node times must be strictly increasing.
    pub fn append(&mut self, node: HistoryNode, c: f64) -> Result<()> {
        validate_node(&node, c)?;
        let last = self.nodes.last().expect("history never empty");
        if node.t <= last.t {
            return Err(SimError::Invalid(format!(
                "history nodes must have strictly increasing times: {} after {}",
                node.t, last.t
            )));
        }
        self.nodes.push(node);
        if let Some(cap) = self.capacity {
            if self.nodes.len() > cap.max(1) {
                self.nodes.remove(0);
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[HistoryNode] {
        &self.nodes
    }

    pub fn set_future_policy(&mut self, policy: FuturePolicy) {
        self.future = policy;
    }

    pub fn first_time(&self) -> f64 {
        self.nodes[0].t
    }

    pub fn last_time(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].t
    }

    fn state(&self, t: f64) -> Result<KinState> {
        let first = &self.nodes[0];
        if t <= first.t {
            return Ok(inertial_state(first.t, first.pos, first.vel, t));
        }
        let last = &self.nodes[self.nodes.len() - 1];
        if t > last.t {
            return match self.future {
                FuturePolicy::Error => Err(SimError::HistoryExhausted { t, last: last.t }),
                FuturePolicy::ExtrapolateInertial => {
                    Ok(inertial_state(last.t, last.pos, last.vel, t))
                }
            };
        }
        // Segment with nodes[i].t < t <= nodes[i+1].t.
        let hi = self.nodes.partition_point(|n| n.t < t);
        if self.nodes[hi].t == t {
            let n = &self.nodes[hi];
            return Ok(KinState {
                t,
                pos: n.pos,
                vel: n.vel,
                acc: n.acc,
            });
        }
        Ok(hermite(&self.nodes[hi - 1], &self.nodes[hi], t))
    }
}

fn validate_node(node: &HistoryNode, c: f64) -> Result<()> {
    if !node.t.is_finite()
        || !node.pos.is_finite()
        || !node.vel.is_finite()
        || !node.acc.is_finite()
    {
        return Err(SimError::NonFinite {
            context: "HistoryNode",
        });
    }
    let speed = node.vel.norm();
    if speed >= c {
        return Err(SimError::Superluminal { speed, c });
    }
    Ok(())
}

fn inertial_state(t0: f64, pos: Vec3, vel: Vec3, t: f64) -> KinState {
    KinState {
        t,
        pos: pos + vel * (t - t0),
        vel,
        acc: Vec3::ZERO,
    }
}

/// Quintic Hermite evaluation on [a.t, b.t] from (pos, vel, acc) at both
/// ends; C2, with position error O(h^6).
fn hermite(a: &HistoryNode, b: &HistoryNode, t: f64) -> KinState {
    let h = b.t - a.t;
    let s = (t - a.t) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;

    let h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h20 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h21 = 0.5 * (s3 - 2.0 * s4 + s5);
    let pos = a.pos * h00
        + a.vel * (h10 * h)
        + a.acc * (h20 * h * h)
        + b.pos * h01
        + b.vel * (h11 * h)
        + b.acc * (h21 * h * h);

    let d00 = (-30.0 * s2 + 60.0 * s3 - 30.0 * s4) / h;
    let d10 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d20 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4) * h;
    let d01 = (30.0 * s2 - 60.0 * s3 + 30.0 * s4) / h;
    let d11 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d21 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4) * h;
    let vel = a.pos * d00 + a.vel * d10 + a.acc * d20 + b.pos * d01 + b.vel * d11 + b.acc * d21;

    let g00 = (-60.0 * s + 180.0 * s2 - 120.0 * s3) / (h * h);
    let g10 = (-36.0 * s + 96.0 * s2 - 60.0 * s3) / h;
    let g20 = 0.5 * (2.0 - 18.0 * s + 36.0 * s2 - 20.0 * s3);
    let g01 = (60.0 * s - 180.0 * s2 + 120.0 * s3) / (h * h);
    let g11 = (-24.0 * s + 84.0 * s2 - 60.0 * s3) / h;
    let g21 = 0.5 * (6.0 * s - 24.0 * s2 + 20.0 * s3);
    let acc = a.pos * g00 + a.vel * g10 + a.acc * g20 + b.pos * g01 + b.vel * g11 + b.acc * g21;

    KinState { t, pos, vel, acc }
}

/// A particle trajectory x(t), queryable at any past coordinate time.
#[derive(Clone, Debug)]
pub enum WorldLine {
    /// Straight line through `pos` at `t0` with constant velocity.
    Inertial { t0: f64, pos: Vec3, vel: Vec3 },
    /// Uniform circular motion in the x-y plane (analytic test fixture).
    Circular {
        center: Vec3,
        radius: f64,
        angular_rate: f64,
    },
    /// Interpolated recorded trajectory.
    Sampled(SampledHistory),
    /// Lazily reparameterized image of another line under a Lorentz
    /// transform; queries solve c*t1 = (L x)^0(t) per call.
    Transformed {
        lambda: LorentzTransform,
        inner: Box<WorldLine>,
    },
}

impl WorldLine {
    pub fn inertial(t0: f64, pos: Vec3, vel: Vec3, c: f64) -> Result<Self> {
        validate_node(
            &HistoryNode {
                t: t0,
                pos,
                vel,
                acc: Vec3::ZERO,
            },
            c,
        )?;
        Ok(WorldLine::Inertial { t0, pos, vel })
    }

    pub fn at_rest(pos: Vec3) -> Self {
        WorldLine::Inertial {
            t0: 0.0,
            pos,
            vel: Vec3::ZERO,
        }
    }

    pub fn circular(center: Vec3, radius: f64, angular_rate: f64, c: f64) -> Result<Self> {
        let speed = (radius * angular_rate).abs();
        if speed >= c {
            return Err(SimError::Superluminal { speed, c });
        }
        Ok(WorldLine::Circular {
            center,
            radius,
            angular_rate,
        })
    }

    pub fn is_inertial(&self) -> bool {
        matches!(self, WorldLine::Inertial { .. })
    }

    /// Position, velocity and acceleration at coordinate time `t`.
    pub fn state(&self, t: f64, c: f64) -> Result<KinState> {
        match self {
            WorldLine::Inertial { t0, pos, vel } => Ok(inertial_state(*t0, *pos, *vel, t)),
            WorldLine::Circular {
                center,
                radius,
                angular_rate,
            } => {
                let ph = angular_rate * t;
                let (sin, cos) = ph.sin_cos();
                let r = *radius;
                let w = *angular_rate;
                Ok(KinState {
                    t,
                    pos: *center + Vec3::new(r * cos, r * sin, 0.0),
                    vel: Vec3::new(-r * w * sin, r * w * cos, 0.0),
                    acc: Vec3::new(-r * w * w * cos, -r * w * w * sin, 0.0),
                })
            }
            WorldLine::Sampled(h) => h.state(t),
            WorldLine::Transformed { lambda, inner } => transformed_state(lambda, inner, t, c),
        }
    }
}

/// State of the transformed line at new-frame coordinate time `t1`.
///
/// Solves c*t1 = sum_nu L^0_nu x^nu(t) for the inner parameter t (strictly
/// monotone for subluminal lines and orthochronous L), then maps position,
/// velocity and acceleration through L.
fn transformed_state(
    lambda: &LorentzTransform,
    inner: &WorldLine,
    t1: f64,
    c: f64,
) -> Result<KinState> {
    let m = lambda.matrix();
    let target = c * t1;
    let g = |t: f64| -> Result<(f64, f64)> {
        let s = inner.state(t, c)?;
        let x0p = m[0][0] * c * t + m[0][1] * s.pos.x + m[0][2] * s.pos.y + m[0][3] * s.pos.z;
        let d = m[0][0] * c + m[0][1] * s.vel.x + m[0][2] * s.vel.y + m[0][3] * s.vel.z;
        Ok((x0p - target, d))
    };
    // Fallible closure bridged for the solver: history exhaustion inside the
    // search surfaces as the original error.
    let mut inner_err = None;
    let t = solve_monotone(
        |t| match g(t) {
            Ok(v) => v,
            Err(e) => {
                inner_err = Some(e);
                (f64::NAN, f64::NAN)
            }
        },
        t1,
        (t1.abs() + 1.0) * 0.5,
        |t| 1e-13 * (c * t.abs() + target.abs() + 1.0) / c,
        120,
    );
    if let Some(e) = inner_err {
        return Err(e);
    }
    let t = t?;

    let s = inner.state(t, c)?;
    let x = lambda.apply(&FourVector::event(c, t, s.pos));
    // d(Lx)^mu/dt split into time (q) and space (p) parts.
    let col = |i: usize, v: Vec3| m[i][1] * v.x + m[i][2] * v.y + m[i][3] * v.z;
    let q = m[0][0] * c + col(0, s.vel);
    let p = Vec3::new(
        m[1][0] * c + col(1, s.vel),
        m[2][0] * c + col(2, s.vel),
        m[3][0] * c + col(3, s.vel),
    );
    let qdot = col(0, s.acc);
    let pdot = Vec3::new(col(1, s.acc), col(2, s.acc), col(3, s.acc));
    let vel = p * (c / q);
    let acc = (pdot * q - p * qdot) * (c * c / (q * q * q));
    Ok(KinState {
        t: t1,
        pos: x.spatial(),
        vel,
        acc,
    })
}

/// Reparameterize a world line by the coordinate time of the frame reached
/// through `lambda` (must be orthochronous, which construction guarantees).
///
/// Inertial lines transform in closed form; everything else becomes a lazy
/// [`WorldLine::Transformed`] wrapper, with nested wrappers collapsed by
/// composing the matrices.
pub fn transform_worldline(lambda: &LorentzTransform, w: &WorldLine, c: f64) -> WorldLine {
    match w {
        WorldLine::Inertial { t0, pos, vel } => {
            let m = lambda.matrix();
            let x = lambda.apply(&FourVector::event(c, *t0, *pos));
            let col = |i: usize| m[i][1] * vel.x + m[i][2] * vel.y + m[i][3] * vel.z;
            let q = m[0][0] * c + col(0);
            let p = Vec3::new(
                m[1][0] * c + col(1),
                m[2][0] * c + col(2),
                m[3][0] * c + col(3),
            );
            WorldLine::Inertial {
                t0: x.time(c),
                pos: x.spatial(),
                vel: p * (c / q),
            }
        }
        WorldLine::Transformed {
            lambda: prior,
            inner,
        } => WorldLine::Transformed {
            lambda: lambda.compose(prior),
            inner: inner.clone(),
        },
        other => WorldLine::Transformed {
            lambda: lambda.clone(),
            inner: Box::new(other.clone()),
        },
    }
}
