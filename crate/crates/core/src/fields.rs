//! Retarded potential and field tensor of one point source, plus the
//! finite-difference machinery that certifies the gauge condition, the
//! cyclic (Bianchi) identity, the vacuum Maxwell equations and Lorentz
//! covariance.
//!
//! The potential of source j evaluated at observer event (t, x) is
//!
//! ```text
//!   A_mu = eta_mu_mu * q K * (dx_j^mu/dt')  / (c r - r_vec . v')
//!   with c (t - t') = |x - x_j(t')| ,  r_vec = x - x_j(t')
//! ```
//!
//! and the analytic field propagates derivatives through t' by implicit
//! differentiation of the retardation constraint:
//!
//! ```text
//!   dt'/dx^0 = r / D ,   dt'/dx^i = -r_vec_i / D ,   D = c r - r_vec . v'
//! ```

use crate::error::{Result, SimError};
use crate::kinematics::{FourVector, LorentzTransform, METRIC_DIAG};
use crate::retarded::{retarded_state, RetardedEvent};
use crate::vec3::Vec3;
use crate::worldline::{transform_worldline, WorldLine};

/// How the interaction constant enters the potential.
///
/// Feeding the potential formula above into the Lorentz-force law as written
/// makes the static force between like charges attractive for K > 0, the
/// opposite of the static Coulomb law. `CoulombConsistent` flips the
/// coupling sign inside the potential so the static limit reproduces the
/// Coulomb/Newton law exactly (and K = -G attracts); `PaperLiteral` keeps K
/// exactly as it appears in the formula. Gauge, Bianchi, Maxwell and
/// covariance residuals are sign-independent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignConvention {
    CoulombConsistent,
    PaperLiteral,
}

/// Global interaction constants: speed of light, coupling K and the sign
/// convention, plus the length scale that sets the singularity radius.
#[derive(Clone, Copy, Debug)]
pub struct Coupling {
    pub c: f64,
    pub k: f64,
    pub sign_convention: SignConvention,
    /// Characteristic length of the configuration; field evaluation refuses
    /// within `R_MIN_FACTOR * length_scale` of a source.
    pub length_scale: f64,
}

/// Singularity radius as a fraction of the configured length scale.
pub const R_MIN_FACTOR: f64 = 1e-9;

impl Coupling {
    pub fn new(c: f64, k: f64, sign_convention: SignConvention) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() || !k.is_finite() {
            return Err(SimError::Invalid(format!(
                "coupling needs c > 0, got c = {c}, k = {k}"
            )));
        }
        Ok(Coupling {
            c,
            k,
            sign_convention,
            length_scale: 1.0,
        })
    }

    pub fn with_length_scale(mut self, scale: f64) -> Self {
        self.length_scale = scale;
        self
    }

    /// Coupling as it enters the potential.
    pub fn effective_k(&self) -> f64 {
        match self.sign_convention {
            SignConvention::CoulombConsistent => -self.k,
            SignConvention::PaperLiteral => self.k,
        }
    }

    pub fn r_min(&self) -> f64 {
        R_MIN_FACTOR * self.length_scale
    }
}

/// A field source: charge (or gravitational mass) on a world line.
#[derive(Clone, Debug)]
pub struct SourceParticle {
    pub q: f64,
    pub worldline: WorldLine,
}

/// Covariant potential components (a0, a1, a2, a3) at one event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourPotential(pub [f64; 4]);

impl FourPotential {
    pub const ZERO: FourPotential = FourPotential([0.0; 4]);

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, a| m.max(a.abs()))
    }
}

impl std::ops::Index<usize> for FourPotential {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Antisymmetric field tensor, stored as its six independent components
/// (f01, f02, f03, f12, f13, f23) and expanded on read, so
/// `F[mu][nu] + F[nu][mu] = 0` holds exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldTensor {
    six: [f64; 6],
}

impl FieldTensor {
    pub const ZERO: FieldTensor = FieldTensor { six: [0.0; 6] };

    /// Antisymmetrize a gradient grid: `F_mu_nu = j[mu][nu] - j[nu][mu]`.
    pub fn from_gradient(j: &[[f64; 4]; 4]) -> Self {
        FieldTensor {
            six: [
                j[0][1] - j[1][0],
                j[0][2] - j[2][0],
                j[0][3] - j[3][0],
                j[1][2] - j[2][1],
                j[1][3] - j[3][1],
                j[2][3] - j[3][2],
            ],
        }
    }

    pub fn get(&self, mu: usize, nu: usize) -> f64 {
        if mu == nu {
            return 0.0;
        }
        let (i, sign) = if mu < nu {
            (Self::slot(mu, nu), 1.0)
        } else {
            (Self::slot(nu, mu), -1.0)
        };
        sign * self.six[i]
    }

    fn slot(lo: usize, hi: usize) -> usize {
        match (lo, hi) {
            (0, 1) => 0,
            (0, 2) => 1,
            (0, 3) => 2,
            (1, 2) => 3,
            (1, 3) => 4,
            (2, 3) => 5,
            _ => unreachable!("index pair out of range"),
        }
    }

    pub fn matrix(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for (mu, row) in m.iter_mut().enumerate() {
            for (nu, cell) in row.iter_mut().enumerate() {
                *cell = self.get(mu, nu);
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.six.iter().fold(0.0f64, |m, a| m.max(a.abs()))
    }
}

impl std::ops::Add for FieldTensor {
    type Output = FieldTensor;
    fn add(self, o: FieldTensor) -> FieldTensor {
        let mut six = self.six;
        for (a, b) in six.iter_mut().zip(o.six) {
            *a += b;
        }
        FieldTensor { six }
    }
}

impl std::ops::AddAssign for FieldTensor {
    fn add_assign(&mut self, o: FieldTensor) {
        *self = *self + o;
    }
}

/// Retarded potential of `src` at observer (t_obs, x_obs).
pub fn lw_potential(
    cpl: &Coupling,
    src: &SourceParticle,
    t_obs: f64,
    x_obs: Vec3,
) -> Result<FourPotential> {
    lw_potential_of(cpl, src.q, &src.worldline, t_obs, x_obs)
}

/// Borrowing form of [`lw_potential`] used by the integrator.
pub(crate) fn lw_potential_of(
    cpl: &Coupling,
    q: f64,
    w: &WorldLine,
    t_obs: f64,
    x_obs: Vec3,
) -> Result<FourPotential> {
    let ev = retarded_state(cpl.c, t_obs, x_obs, w, cpl.r_min())?;
    Ok(potential_at(cpl, q, &ev))
}

fn potential_at(cpl: &Coupling, q: f64, ev: &RetardedEvent) -> FourPotential {
    let kq = cpl.effective_k() * q;
    let v = ev.source_state.vel;
    // A_mu = eta_mu_mu * kq * w^mu / D with w = (c, v).
    FourPotential([
        kq * cpl.c / ev.denom,
        -kq * v.x / ev.denom,
        -kq * v.y / ev.denom,
        -kq * v.z / ev.denom,
    ])
}

/// Analytic field tensor F_mu_nu = dA_nu/dx^mu - dA_mu/dx^nu, with the
/// retarded-time dependence differentiated implicitly.
pub fn lw_field(
    cpl: &Coupling,
    src: &SourceParticle,
    t_obs: f64,
    x_obs: Vec3,
) -> Result<FieldTensor> {
    let j = potential_gradient(cpl, src, t_obs, x_obs)?;
    Ok(FieldTensor::from_gradient(&j))
}

/// Borrowing form of [`lw_field`] used by the integrator.
pub(crate) fn lw_field_of(
    cpl: &Coupling,
    q: f64,
    w: &WorldLine,
    t_obs: f64,
    x_obs: Vec3,
) -> Result<FieldTensor> {
    let j = potential_gradient_of(cpl, q, w, t_obs, x_obs)?;
    Ok(FieldTensor::from_gradient(&j))
}

/// Analytic gradient grid `j[mu][nu] = dA_nu/dx^mu`.
pub fn potential_gradient(
    cpl: &Coupling,
    src: &SourceParticle,
    t_obs: f64,
    x_obs: Vec3,
) -> Result<[[f64; 4]; 4]> {
    potential_gradient_of(cpl, src.q, &src.worldline, t_obs, x_obs)
}

fn potential_gradient_of(
    cpl: &Coupling,
    q: f64,
    w: &WorldLine,
    t_obs: f64,
    x_obs: Vec3,
) -> Result<[[f64; 4]; 4]> {
    let ev = retarded_state(cpl.c, t_obs, x_obs, w, cpl.r_min())?;
    let c = cpl.c;
    let kq = cpl.effective_k() * q;
    let v = ev.source_state.vel;
    let a = ev.source_state.acc;
    let rv = ev.r_vec;
    let r = ev.r;
    let d = ev.denom;

    // dt'/dx^mu from the retardation constraint.
    let dtp = [r / d, -rv.x / d, -rv.y / d, -rv.z / d];
    // dD/dt' at fixed observer, and the explicit spatial dependence of D.
    let dd_dt = -c * rv.dot(v) / r + v.norm_sq() - rv.dot(a);
    let expl = [
        0.0,
        c * rv.x / r - v.x,
        c * rv.y / r - v.y,
        c * rv.z / r - v.z,
    ];
    let w4 = [c, v.x, v.y, v.z];
    let w4dot = [0.0, a.x, a.y, a.z];

    let mut grad = [[0.0; 4]; 4];
    for (mu, row) in grad.iter_mut().enumerate() {
        let dd_dx = dd_dt * dtp[mu] + expl[mu];
        for (nu, cell) in row.iter_mut().enumerate() {
            *cell = METRIC_DIAG[nu] * kq * (w4dot[nu] * dtp[mu] / d - w4[nu] * dd_dx / (d * d));
        }
    }
    Ok(grad)
}

/// Default central-difference step for second-order stencils: cbrt(eps)
/// times the local length scale (distance to the retarded source point).
pub fn default_fd_step(r: f64) -> f64 {
    f64::EPSILON.cbrt() * r
}

/// Finite-difference gradient grid `j[mu][nu] = dA_nu/dx^mu` by central
/// differences of [`lw_potential`] (x^0 steps are time steps h/c).
pub fn fd_potential_jacobian(
    cpl: &Coupling,
    src: &SourceParticle,
    t_obs: f64,
    x_obs: Vec3,
    h: f64,
) -> Result<[[f64; 4]; 4]> {
    guard_stencil(cpl, src, t_obs, x_obs, h)?;
    let mut j = [[0.0; 4]; 4];
    for mu in 0..4 {
        let (plus, minus) = stencil_pair(cpl, src, t_obs, x_obs, h, mu, lw_potential)?;
        for nu in 0..4 {
            j[mu][nu] = (plus[nu] - minus[nu]) / (2.0 * h);
        }
    }
    Ok(j)
}

/// Finite-difference field oracle: antisymmetrized central differences of
/// the potential. Independent of the analytic derivative path.
pub fn fd_field(
    cpl: &Coupling,
    src: &SourceParticle,
    t_obs: f64,
    x_obs: Vec3,
    h: f64,
) -> Result<FieldTensor> {
    let j = fd_potential_jacobian(cpl, src, t_obs, x_obs, h)?;
    Ok(FieldTensor::from_gradient(&j))
}

/// Central-difference gradient of the analytic field:
/// `g[lambda][mu][nu] = dF_mu_nu / dx^lambda`.
pub fn fd_field_gradient(
    cpl: &Coupling,
    src: &SourceParticle,
    t_obs: f64,
    x_obs: Vec3,
    h: f64,
) -> Result<[[[f64; 4]; 4]; 4]> {
    guard_stencil(cpl, src, t_obs, x_obs, h)?;
    let mut g = [[[0.0; 4]; 4]; 4];
    for lam in 0..4 {
        let (plus, minus) = stencil_pair(cpl, src, t_obs, x_obs, h, lam, lw_field)?;
        for mu in 0..4 {
            for nu in 0..4 {
                g[lam][mu][nu] = (plus.get(mu, nu) - minus.get(mu, nu)) / (2.0 * h);
            }
        }
    }
    Ok(g)
}

fn guard_stencil(
    cpl: &Coupling,
    src: &SourceParticle,
    t_obs: f64,
    x_obs: Vec3,
    h: f64,
) -> Result<()> {
    if !(h > 0.0) {
        return Err(SimError::Invalid(format!(
            "stencil step must be positive, got {h}"
        )));
    }
    let ev = retarded_state(cpl.c, t_obs, x_obs, &src.worldline, cpl.r_min())?;
    // A step of r/2 or more can straddle the source singularity.
    if h >= 0.5 * ev.r {
        return Err(SimError::SingularField {
            r: ev.r,
            r_min: 2.0 * h,
        });
    }
    Ok(())
}

fn stencil_pair<T>(
    cpl: &Coupling,
    src: &SourceParticle,
    t_obs: f64,
    x_obs: Vec3,
    h: f64,
    mu: usize,
    eval: impl Fn(&Coupling, &SourceParticle, f64, Vec3) -> Result<T>,
) -> Result<(T, T)> {
    let shift = |sign: f64| -> (f64, Vec3) {
        match mu {
            0 => (t_obs + sign * h / cpl.c, x_obs),
            1 => (t_obs, x_obs + Vec3::new(sign * h, 0.0, 0.0)),
            2 => (t_obs, x_obs + Vec3::new(0.0, sign * h, 0.0)),
            _ => (t_obs, x_obs + Vec3::new(0.0, 0.0, sign * h)),
        }
    };
    let (tp, xp) = shift(1.0);
    let (tm, xm) = shift(-1.0);
    Ok((eval(cpl, src, tp, xp)?, eval(cpl, src, tm, xm)?))
}

/// Four-divergence sum_mu eta^mu_mu dA_mu/dx^mu by central differences;
/// vanishes for the retarded potential (Lorenz gauge).
pub fn gauge_divergence(
    cpl: &Coupling,
    src: &SourceParticle,
    t_obs: f64,
    x_obs: Vec3,
    h: f64,
) -> Result<f64> {
    let j = fd_potential_jacobian(cpl, src, t_obs, x_obs, h)?;
    Ok((0..4).map(|mu| METRIC_DIAG[mu] * j[mu][mu]).sum())
}

/// Cyclic derivative residual d_lam F_mu_nu + d_mu F_nu_lam + d_nu F_lam_mu
/// for one triple of distinct indices; vanishes identically.
pub fn bianchi_residual(
    cpl: &Coupling,
    src: &SourceParticle,
    t_obs: f64,
    x_obs: Vec3,
    h: f64,
    triple: (usize, usize, usize),
) -> Result<f64> {
    let (lam, mu, nu) = triple;
    if lam == mu || mu == nu || lam == nu || lam > 3 || mu > 3 || nu > 3 {
        return Err(SimError::Invalid(format!(
            "need three distinct indices in 0..4, got {triple:?}"
        )));
    }
    let g = fd_field_gradient(cpl, src, t_obs, x_obs, h)?;
    Ok(g[lam][mu][nu] + g[mu][nu][lam] + g[nu][lam][mu])
}

/// Vacuum inhomogeneous Maxwell residual sum_mu eta^mu_mu dF_mu_nu/dx^mu for
/// nu = 0..3; vanishes off the source world line, where the current
/// distribution has no support.
pub fn vacuum_maxwell_residual(
    cpl: &Coupling,
    src: &SourceParticle,
    t_obs: f64,
    x_obs: Vec3,
    h: f64,
) -> Result<[f64; 4]> {
    let g = fd_field_gradient(cpl, src, t_obs, x_obs, h)?;
    let mut out = [0.0; 4];
    for (nu, o) in out.iter_mut().enumerate() {
        *o = (0..4).map(|mu| METRIC_DIAG[mu] * g[mu][mu][nu]).sum();
    }
    Ok(out)
}

/// Covariance residual of the potential under `l`: evaluates A at the event,
/// independently evaluates A' at the transformed event from the transformed
/// world line, and returns the max-norm of (covector transform of A) - A',
/// relative to the larger potential scale.
pub fn covariance_check(
    cpl: &Coupling,
    src: &SourceParticle,
    t_obs: f64,
    x_obs: Vec3,
    l: &LorentzTransform,
) -> Result<f64> {
    let a = lw_potential(cpl, src, t_obs, x_obs)?;
    let expected = l.apply_covector(&FourVector(a.0));

    let obs2 = l.apply(&FourVector::event(cpl.c, t_obs, x_obs));
    let src2 = SourceParticle {
        q: src.q,
        worldline: transform_worldline(l, &src.worldline, cpl.c),
    };
    let a2 = lw_potential(cpl, &src2, obs2.time(cpl.c), obs2.spatial())?;

    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for mu in 0..4 {
        diff = diff.max((expected[mu] - a2[mu]).abs());
        scale = scale.max(expected[mu].abs()).max(a2[mu].abs());
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(diff / scale)
}
