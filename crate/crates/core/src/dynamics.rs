//! Delay-differential N-body integration: each particle obeys
//! m d(gamma v)/dt = f with f built from the summed retarded fields of all
//! other particles, evaluated against their accumulated world-line histories.
//!
//! The state variable is the celerity u = gamma*v rather than v: the update
//! d u/dt = f/m is exactly the spatial equation of motion, and reconstructing
//! v = u / sqrt(1 + |u|^2/c^2) keeps every state subluminal by construction.

use crate::error::{Result, SimError};
use crate::fields::{lw_field_of, Coupling, FieldTensor};
use crate::kinematics::{minkowski_inner, FourVector};
use crate::vec3::Vec3;
use crate::worldline::{FuturePolicy, HistoryNode, SampledHistory, WorldLine};
use crate::Tolerances;
use serde::Serialize;

/// A dynamical body. Test particles exert no field on others and enter their
/// own equation of motion only through the ratio q/m, so a gravity probe is
/// `q = m = 1, is_test = true`.
#[derive(Clone, Debug)]
pub struct Particle {
    pub label: String,
    pub m: f64,
    pub q: f64,
    pub is_test: bool,
}

impl Particle {
    pub fn new(label: impl Into<String>, m: f64, q: f64) -> Result<Self> {
        let p = Particle {
            label: label.into(),
            m,
            q,
            is_test: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn test_probe(label: impl Into<String>, charge_to_mass: f64) -> Result<Self> {
        let p = Particle {
            label: label.into(),
            m: 1.0,
            q: charge_to_mass,
            is_test: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0) || !self.m.is_finite() {
            return Err(SimError::Invalid(format!(
                "particle '{}' needs m > 0 (test particles carry the ratio q/m), got {}",
                self.label, self.m
            )));
        }
        if !self.q.is_finite() {
            return Err(SimError::NonFinite {
                context: "particle charge",
            });
        }
        Ok(())
    }
}

/// Integrator controls.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub coupling: Coupling,
    pub dt: f64,
    pub t_end: f64,
    pub output_stride: usize,
    /// Max history nodes kept per particle; None keeps everything.
    pub history_capacity: Option<usize>,
    pub tolerances: Tolerances,
}

impl SimConfig {
    pub fn new(coupling: Coupling, dt: f64, t_end: f64) -> Self {
        SimConfig {
            coupling,
            dt,
            t_end,
            output_stride: 1,
            history_capacity: None,
            tolerances: Tolerances::default(),
        }
    }
}

/// Positions and celerities of every particle at one time.
#[derive(Clone, Debug)]
pub struct SystemState {
    pub t: f64,
    pub pos: Vec<Vec3>,
    /// u = gamma * v (length/time); v stays subluminal for any finite u.
    pub u: Vec<Vec3>,
}

impl SystemState {
    pub fn gamma(&self, i: usize, c: f64) -> f64 {
        (1.0 + self.u[i].norm_sq() / (c * c)).sqrt()
    }

    pub fn velocity(&self, i: usize, c: f64) -> Vec3 {
        self.u[i] / self.gamma(i, c)
    }

    /// Build from coordinate velocities: u = gamma * v.
    pub fn from_velocities(t: f64, pos: Vec<Vec3>, vel: &[Vec3], c: f64) -> Result<Self> {
        let mut u = Vec::with_capacity(vel.len());
        for v in vel {
            let speed = v.norm();
            if speed >= c {
                return Err(SimError::Superluminal { speed, c });
            }
            let g = 1.0 / (1.0 - v.norm_sq() / (c * c)).sqrt();
            u.push(*v * g);
        }
        Ok(SystemState { t, pos, u })
    }
}

/// Spatial Lorentz-force components f_i = q (F_i0 + (1/c) sum_j F_ij v^j);
/// this is the right-hand side of m d(gamma v_i)/dt. Any sign-convention
/// flip is already absorbed in the potential that produced `f`.
pub fn coordinate_force(p: &Particle, v: Vec3, f: &FieldTensor, cpl: &Coupling) -> Vec3 {
    let vv = v.to_array();
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = f.get(i + 1, 0);
        for (j, vj) in vv.iter().enumerate() {
            s += f.get(i + 1, j + 1) * vj / cpl.c;
        }
        *o = p.q * s;
    }
    Vec3::from_array(out)
}

/// d u / dt = f / m. For test particles only the ratio q/m enters.
pub fn du_dt(p: &Particle, v: Vec3, f: &FieldTensor, cpl: &Coupling) -> Vec3 {
    coordinate_force(p, v, f, cpl) / p.m
}

/// Summed retarded field of every non-test particle except `observer_idx`,
/// evaluated at (t, x) against the recorded histories.
fn field_on(
    cpl: &Coupling,
    particles: &[Particle],
    histories: &[WorldLine],
    observer_idx: usize,
    t: f64,
    x: Vec3,
) -> Result<FieldTensor> {
    let mut total = FieldTensor::ZERO;
    for (j, p) in particles.iter().enumerate() {
        if j == observer_idx || p.is_test {
            continue;
        }
        total += lw_field_of(cpl, p.q, &histories[j], t, x)?;
    }
    Ok(total)
}

struct Derivative {
    dpos: Vec<Vec3>,
    du: Vec<Vec3>,
}

/// Coordinate acceleration dv/dt from the celerity and its derivative:
/// v = u/gamma(u), so dv/dt = du/dt / gamma - u (u . du/dt) / (gamma^3 c^2).
fn coordinate_acceleration(u: Vec3, dudt: Vec3, c: f64) -> Vec3 {
    let g = (1.0 + u.norm_sq() / (c * c)).sqrt();
    dudt / g - u * (u.dot(dudt) / (g * g * g * c * c))
}

fn derivative(
    cfg: &SimConfig,
    particles: &[Particle],
    histories: &[WorldLine],
    t: f64,
    pos: &[Vec3],
    u: &[Vec3],
) -> Result<Derivative> {
    let c = cfg.coupling.c;
    let n = particles.len();
    let mut dpos = Vec::with_capacity(n);
    let mut du = Vec::with_capacity(n);
    for k in 0..n {
        let gamma = (1.0 + u[k].norm_sq() / (c * c)).sqrt();
        let v = u[k] / gamma;
        let f = field_on(&cfg.coupling, particles, histories, k, t, pos[k])?;
        dpos.push(v);
        du.push(du_dt(&particles[k], v, &f, &cfg.coupling));
    }
    Ok(Derivative { dpos, du })
}

fn advanced(pos: &[Vec3], u: &[Vec3], d: &Derivative, dt: f64) -> (Vec<Vec3>, Vec<Vec3>) {
    let p = pos
        .iter()
        .zip(&d.dpos)
        .map(|(x, dx)| *x + *dx * dt)
        .collect();
    let v = u.iter().zip(&d.du).map(|(x, dx)| *x + *dx * dt).collect();
    (p, v)
}

/// One classical 4-stage Runge-Kutta step of the full system.
///
/// Every stage evaluates the retarded field sums against the histories as
/// recorded up to the step start; stage queries past the newest node resolve
/// by the histories' inertial extrapolation policy.
pub fn step(
    cfg: &SimConfig,
    particles: &[Particle],
    state: &SystemState,
    histories: &[WorldLine],
) -> Result<SystemState> {
    let dt = cfg.dt;
    let t = state.t;
    let k1 = derivative(cfg, particles, histories, t, &state.pos, &state.u)?;
    let (p2, u2) = advanced(&state.pos, &state.u, &k1, dt / 2.0);
    let k2 = derivative(cfg, particles, histories, t + dt / 2.0, &p2, &u2)?;
    let (p3, u3) = advanced(&state.pos, &state.u, &k2, dt / 2.0);
    let k3 = derivative(cfg, particles, histories, t + dt / 2.0, &p3, &u3)?;
    let (p4, u4) = advanced(&state.pos, &state.u, &k3, dt);
    let k4 = derivative(cfg, particles, histories, t + dt, &p4, &u4)?;

    let n = particles.len();
    let mut pos = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for i in 0..n {
        pos.push(
            state.pos[i] + (k1.dpos[i] + (k2.dpos[i] + k3.dpos[i]) * 2.0 + k4.dpos[i]) * (dt / 6.0),
        );
        u.push(state.u[i] + (k1.du[i] + (k2.du[i] + k3.du[i]) * 2.0 + k4.du[i]) * (dt / 6.0));
    }
    Ok(SystemState { t: t + dt, pos, u })
}

/// One sampled output row.
#[derive(Clone, Debug)]
pub struct TrajectoryRow {
    pub step: u64,
    pub t: f64,
    pub particles: Vec<ParticleRow>,
}

#[derive(Clone, Copy, Debug)]
pub struct ParticleRow {
    pub pos: Vec3,
    pub vel: Vec3,
    pub gamma: f64,
}

/// Invariant residuals accumulated over the sampled rows.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunDiagnostics {
    pub steps: u64,
    /// max |u.u - 1| over all rows and particles.
    pub max_norm_residual: f64,
    /// max |sum F_mu_nu u^mu u^nu| relative to the term scale.
    pub max_orthogonality_residual: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub labels: Vec<String>,
    pub rows: Vec<TrajectoryRow>,
    pub diagnostics: RunDiagnostics,
}

/// Residual of the reconstructed four-velocity normalization u.u = 1.
fn norm_residual(u: Vec3, c: f64) -> f64 {
    let gamma = (1.0 + u.norm_sq() / (c * c)).sqrt();
    let u4 = FourVector([gamma, u.x / c, u.y / c, u.z / c]);
    (minkowski_inner(&u4, &u4) - 1.0).abs()
}

/// Contraction sum F_mu_nu u^mu u^nu, normalized by the sum of |terms|;
/// vanishes by antisymmetry.
fn orthogonality_residual(f: &FieldTensor, u: Vec3, c: f64) -> f64 {
    let gamma = (1.0 + u.norm_sq() / (c * c)).sqrt();
    let u4 = [gamma, u.x / c, u.y / c, u.z / c];
    let mut sum = 0.0;
    let mut scale = 0.0;
    for (mu, umu) in u4.iter().enumerate() {
        for (nu, unu) in u4.iter().enumerate() {
            let term = f.get(mu, nu) * umu * unu;
            sum += term;
            scale += term.abs();
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        sum.abs() / scale
    }
}

/// Integrate the full system from `initial.t` to `cfg.t_end`, appending each
/// accepted state to every particle's history. Deterministic for identical
/// inputs: fixed step count, fixed summation order, no threading.
///
/// Returns the sampled trajectory and the final recorded world lines (whose
/// future queries error rather than extrapolate).
pub fn simulate(
    cfg: &SimConfig,
    particles: &[Particle],
    initial: &SystemState,
) -> Result<(Trajectory, Vec<WorldLine>)> {
    validate_run(cfg, particles, initial)?;
    let c = cfg.coupling.c;
    let n = particles.len();
    let t0 = initial.t;
    let n_steps = ((cfg.t_end - t0) / cfg.dt - 1e-9).ceil().max(0.0) as u64;

    let mut warnings = Vec::new();
    if let Some(min_sep) = min_separation(&initial.pos) {
        if cfg.dt > min_sep / c {
            warnings.push(format!(
                "dt = {:e} exceeds (min separation)/c = {:e}; intra-step retarded queries \
                 will extrapolate the newest history node",
                cfg.dt,
                min_sep / c
            ));
        }
    }

    // The first node carries zero acceleration: the prehistory is inertial,
    // so the recorded line leaves t0 with the junction acceleration of its
    // own past and the interpolant ramps the dynamic acceleration up
    // smoothly. Storing the post-release value instead would put a force
    // discontinuity on every partner's retarded query as it crosses t0.
    let mut histories: Vec<WorldLine> = (0..n)
        .map(|i| {
            let node = HistoryNode {
                t: t0,
                pos: initial.pos[i],
                vel: initial.velocity(i, c),
                acc: Vec3::ZERO,
            };
            SampledHistory::new(node, FuturePolicy::ExtrapolateInertial, c)
                .map(|h| WorldLine::Sampled(h.with_capacity_limit(cfg.history_capacity)))
        })
        .collect::<Result<_>>()?;

    let mut diagnostics = RunDiagnostics {
        steps: n_steps,
        warnings,
        ..Default::default()
    };
    let mut rows = Vec::new();
    let mut state = initial.clone();

    let stride = cfg.output_stride.max(1) as u64;
    for istep in 0..=n_steps {
        if istep % stride == 0 || istep == n_steps {
            rows.push(record_row(
                cfg,
                particles,
                &histories,
                &state,
                istep,
                &mut diagnostics,
            )?);
        }
        if istep == n_steps {
            break;
        }
        let next = step(cfg, particles, &state, &histories).map_err(|e| SimError::StepFailed {
            t: state.t,
            source: Box::new(e),
        })?;
        // Times from the step index, not accumulation, so histories and rows
        // agree bit-for-bit across runs.
        let t_next = t0 + (istep + 1) as f64 * cfg.dt;
        state = SystemState {
            t: t_next,
            pos: next.pos,
            u: next.u,
        };
        // Node accelerations at the accepted state, evaluated against the
        // histories recorded so far (the retarded times it needs lie at or
        // before the previous node for causal step sizes).
        let dn =
            derivative(cfg, particles, &histories, t_next, &state.pos, &state.u).map_err(|e| {
                SimError::StepFailed {
                    t: t_next,
                    source: Box::new(e),
                }
            })?;
        for (i, h) in histories.iter_mut().enumerate() {
            if let WorldLine::Sampled(h) = h {
                h.append(
                    HistoryNode {
                        t: t_next,
                        pos: state.pos[i],
                        vel: state.velocity(i, c),
                        acc: coordinate_acceleration(state.u[i], dn.du[i], c),
                    },
                    c,
                )?;
            }
        }
    }

    for h in &mut histories {
        if let WorldLine::Sampled(h) = h {
            h.set_future_policy(FuturePolicy::Error);
        }
    }
    let tol = &cfg.tolerances;
    if diagnostics.max_norm_residual > tol.row_norm_residual {
        diagnostics.warnings.push(format!(
            "four-velocity normalization residual {:e} exceeds {:e}",
            diagnostics.max_norm_residual, tol.row_norm_residual
        ));
    }
    if diagnostics.max_orthogonality_residual > tol.row_orthogonality_rel {
        diagnostics.warnings.push(format!(
            "field-contraction orthogonality residual {:e} exceeds {:e}",
            diagnostics.max_orthogonality_residual, tol.row_orthogonality_rel
        ));
    }
    let labels = particles.iter().map(|p| p.label.clone()).collect();
    Ok((
        Trajectory {
            labels,
            rows,
            diagnostics,
        },
        histories,
    ))
}

fn record_row(
    cfg: &SimConfig,
    particles: &[Particle],
    histories: &[WorldLine],
    state: &SystemState,
    istep: u64,
    diagnostics: &mut RunDiagnostics,
) -> Result<TrajectoryRow> {
    let c = cfg.coupling.c;
    let mut rows = Vec::with_capacity(particles.len());
    for i in 0..particles.len() {
        let vel = state.velocity(i, c);
        let gamma = state.gamma(i, c);
        diagnostics.max_norm_residual = diagnostics
            .max_norm_residual
            .max(norm_residual(state.u[i], c));
        if particles.len() > 1 {
            let f = field_on(
                &cfg.coupling,
                particles,
                histories,
                i,
                state.t,
                state.pos[i],
            )?;
            diagnostics.max_orthogonality_residual = diagnostics
                .max_orthogonality_residual
                .max(orthogonality_residual(&f, state.u[i], c));
        }
        rows.push(ParticleRow {
            pos: state.pos[i],
            vel,
            gamma,
        });
    }
    Ok(TrajectoryRow {
        step: istep,
        t: state.t,
        particles: rows,
    })
}

fn validate_run(cfg: &SimConfig, particles: &[Particle], initial: &SystemState) -> Result<()> {
    if particles.is_empty() {
        return Err(SimError::Invalid("no particles".into()));
    }
    if particles.len() != initial.pos.len() || particles.len() != initial.u.len() {
        return Err(SimError::Invalid(format!(
            "state arrays ({} positions, {} celerities) do not match {} particles",
            initial.pos.len(),
            initial.u.len(),
            particles.len()
        )));
    }
    if !(cfg.dt > 0.0) || !cfg.dt.is_finite() {
        return Err(SimError::Invalid(format!(
            "dt must be positive, got {}",
            cfg.dt
        )));
    }
    for p in particles {
        p.validate()?;
    }
    for (i, (p, u)) in initial.pos.iter().zip(&initial.u).enumerate() {
        if !p.is_finite() || !u.is_finite() {
            return Err(SimError::Invalid(format!(
                "non-finite initial state for particle {i}"
            )));
        }
    }
    Ok(())
}

fn min_separation(pos: &[Vec3]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..pos.len() {
        for j in (i + 1)..pos.len() {
            let d = (pos[i] - pos[j]).norm();
            best = Some(best.map_or(d, |b: f64| b.min(d)));
        }
    }
    best
}

/// Integrate a single probe in the field of one inertial source, evaluating
/// the source field exactly at every stage (no history bookkeeping).
pub fn test_particle_orbit(
    cfg: &SimConfig,
    source: &crate::fields::SourceParticle,
    probe: &Particle,
    initial_pos: Vec3,
    initial_vel: Vec3,
) -> Result<Trajectory> {
    if !source.worldline.is_inertial() {
        return Err(SimError::Invalid(
            "test_particle_orbit requires an inertial source world line".into(),
        ));
    }
    probe.validate()?;
    let c = cfg.coupling.c;
    let state0 = SystemState::from_velocities(0.0, vec![initial_pos], &[initial_vel], c)?;
    let mut pos = state0.pos[0];
    let mut u = state0.u[0];
    let t0 = state0.t;

    let field = |t: f64, x: Vec3| -> Result<FieldTensor> {
        lw_field_of(&cfg.coupling, source.q, &source.worldline, t, x)
    };
    let deriv = |t: f64, pos: Vec3, u: Vec3| -> Result<(Vec3, Vec3)> {
        let gamma = (1.0 + u.norm_sq() / (c * c)).sqrt();
        let v = u / gamma;
        let f = field(t, pos)?;
        Ok((v, du_dt(probe, v, &f, &cfg.coupling)))
    };

    let n_steps = ((cfg.t_end - t0) / cfg.dt - 1e-9).ceil().max(0.0) as u64;
    let stride = cfg.output_stride.max(1) as u64;
    let mut diagnostics = RunDiagnostics {
        steps: n_steps,
        ..Default::default()
    };
    let mut rows = Vec::new();
    let dt = cfg.dt;
    for istep in 0..=n_steps {
        let t = t0 + istep as f64 * dt;
        if istep % stride == 0 || istep == n_steps {
            let gamma = (1.0 + u.norm_sq() / (c * c)).sqrt();
            diagnostics.max_norm_residual = diagnostics.max_norm_residual.max(norm_residual(u, c));
            let f = field(t, pos).map_err(|e| SimError::StepFailed {
                t,
                source: Box::new(e),
            })?;
            diagnostics.max_orthogonality_residual = diagnostics
                .max_orthogonality_residual
                .max(orthogonality_residual(&f, u, c));
            rows.push(TrajectoryRow {
                step: istep,
                t,
                particles: vec![ParticleRow {
                    pos,
                    vel: u / gamma,
                    gamma,
                }],
            });
        }
        if istep == n_steps {
            break;
        }
        let wrap = |e: SimError| SimError::StepFailed {
            t,
            source: Box::new(e),
        };
        let k1 = deriv(t, pos, u).map_err(wrap)?;
        let k2 =
            deriv(t + dt / 2.0, pos + k1.0 * (dt / 2.0), u + k1.1 * (dt / 2.0)).map_err(wrap)?;
        let k3 =
            deriv(t + dt / 2.0, pos + k2.0 * (dt / 2.0), u + k2.1 * (dt / 2.0)).map_err(wrap)?;
        let k4 = deriv(t + dt, pos + k3.0 * dt, u + k3.1 * dt).map_err(wrap)?;
        pos += (k1.0 + (k2.0 + k3.0) * 2.0 + k4.0) * (dt / 6.0);
        u += (k1.1 + (k2.1 + k3.1) * 2.0 + k4.1) * (dt / 6.0);
    }
    Ok(Trajectory {
        labels: vec![probe.label.clone()],
        rows,
        diagnostics,
    })
}

/// Non-relativistic reference: instantaneous static Coulomb/Newton forces,
/// m dv/dt = f with f_k = -q_k sum_j q_j K_eff (x_k - x_j)/r^3. This is the
/// v -> 0, c -> infinity limit of the retarded dynamics and serves as the
/// comparison oracle for the non-relativistic limit study.
pub fn newtonian_reference(
    cfg: &SimConfig,
    particles: &[Particle],
    initial: &SystemState,
) -> Result<Trajectory> {
    validate_run(cfg, particles, initial)?;
    let c = cfg.coupling.c;
    let k_eff = cfg.coupling.effective_k();
    let r_min = cfg.coupling.r_min();
    let n = particles.len();
    let t0 = initial.t;
    // Interpret the initial celerities as plain velocities for the
    // non-relativistic model (identical data in the small-v regime).
    let mut pos = initial.pos.clone();
    let mut vel: Vec<Vec3> = (0..n).map(|i| initial.velocity(i, c)).collect();

    let accel = |pos: &[Vec3]| -> Result<Vec<Vec3>> {
        let mut acc = vec![Vec3::ZERO; n];
        for k in 0..n {
            for (j, pj) in particles.iter().enumerate() {
                if j == k || pj.is_test {
                    continue;
                }
                let rv = pos[k] - pos[j];
                let r = rv.norm();
                if r < r_min {
                    return Err(SimError::SingularField { r, r_min });
                }
                acc[k] += rv * (-particles[k].q * pj.q * k_eff / (particles[k].m * r * r * r));
            }
        }
        Ok(acc)
    };

    let n_steps = ((cfg.t_end - t0) / cfg.dt - 1e-9).ceil().max(0.0) as u64;
    let stride = cfg.output_stride.max(1) as u64;
    let mut rows = Vec::new();
    let dt = cfg.dt;
    for istep in 0..=n_steps {
        let t = t0 + istep as f64 * dt;
        if istep % stride == 0 || istep == n_steps {
            let particles_row = (0..n)
                .map(|i| ParticleRow {
                    pos: pos[i],
                    vel: vel[i],
                    gamma: 1.0,
                })
                .collect();
            rows.push(TrajectoryRow {
                step: istep,
                t,
                particles: particles_row,
            });
        }
        if istep == n_steps {
            break;
        }
        let wrap = |e: SimError| SimError::StepFailed {
            t,
            source: Box::new(e),
        };
        let a1 = accel(&pos).map_err(wrap)?;
        let p2: Vec<Vec3> = (0..n).map(|i| pos[i] + vel[i] * (dt / 2.0)).collect();
        let v2: Vec<Vec3> = (0..n).map(|i| vel[i] + a1[i] * (dt / 2.0)).collect();
        let a2 = accel(&p2).map_err(wrap)?;
        let p3: Vec<Vec3> = (0..n).map(|i| pos[i] + v2[i] * (dt / 2.0)).collect();
        let v3: Vec<Vec3> = (0..n).map(|i| vel[i] + a2[i] * (dt / 2.0)).collect();
        let a3 = accel(&p3).map_err(wrap)?;
        let p4: Vec<Vec3> = (0..n).map(|i| pos[i] + v3[i] * dt).collect();
        let v4: Vec<Vec3> = (0..n).map(|i| vel[i] + a3[i] * dt).collect();
        let a4 = accel(&p4).map_err(wrap)?;
        for i in 0..n {
            pos[i] += (vel[i] + (v2[i] + v3[i]) * 2.0 + v4[i]) * (dt / 6.0);
            vel[i] += (a1[i] + (a2[i] + a3[i]) * 2.0 + a4[i]) * (dt / 6.0);
        }
    }
    let labels = particles.iter().map(|p| p.label.clone()).collect();
    Ok(Trajectory {
        labels,
        rows,
        diagnostics: RunDiagnostics {
            steps: n_steps,
            ..Default::default()
        },
    })
}
