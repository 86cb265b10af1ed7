//! Run-configuration file schema (JSON) and its translation into the core
//! simulation types. Unknown keys are rejected; every physical invariant is
//! re-checked on load so a bad file fails before any work starts.

use lwsim::dynamics::{Particle, SimConfig, SystemState};
use lwsim::fields::{Coupling, SignConvention};
use lwsim::scenarios::{GRAVITATIONAL_CONSTANT, SPEED_OF_LIGHT};
use lwsim::{Tolerances, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub constants: ConstantsSpec,
    pub integrator: IntegratorSpec,
    pub particles: Vec<ParticleSpec>,
    #[serde(default)]
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Physical constants, either spelled out or seeded from a preset.
/// Explicit fields win over the preset.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign_convention: Option<SignConventionSpec>,
    /// Sets the singularity radius r_min = 1e-9 * length_scale; defaults to
    /// the minimum initial pairwise separation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_scale: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Electromagnetism in Gaussian-like units: K = +1, c in cm/s.
    EmGaussian,
    /// Gravity in SI units: K = -G, charges default to masses.
    GravitySi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConventionSpec {
    CoulombConsistent,
    PaperLiteral,
}

impl From<SignConventionSpec> for SignConvention {
    fn from(s: SignConventionSpec) -> Self {
        match s {
            SignConventionSpec::CoulombConsistent => SignConvention::CoulombConsistent,
            SignConventionSpec::PaperLiteral => SignConvention::PaperLiteral,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub output_stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history_capacity: Option<usize>,
}

fn default_stride() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSpec {
    pub label: String,
    pub m: f64,
    /// Charge (or gravitational mass). Defaults to `m` under the gravity_si
    /// preset; required otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub pos: [f64; 3],
    pub vel: [f64; 3],
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub test: bool,
}

/// Scenario selector; `nbody` integrates the particle list directly.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScenarioSpec {
    #[default]
    Nbody,
    Mercury {
        orbits: u32,
        amplify: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out_dir")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            directory: default_out_dir(),
            formats: default_formats(),
        }
    }
}

/// A fully validated run: core types plus the echoable resolved config.
#[derive(Debug)]
pub struct ResolvedRun {
    pub sim: SimConfig,
    pub particles: Vec<Particle>,
    pub initial: SystemState,
    pub resolved: RunConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    /// Apply preset defaults, validate every invariant, and build the core
    /// simulation inputs.
    pub fn resolve(&self) -> Result<ResolvedRun, String> {
        let mut resolved = self.clone();
        let cn = &mut resolved.constants;
        if let Some(preset) = cn.preset {
            let (pc, pk, psc) = match preset {
                Preset::EmGaussian => (2.99792458e10, 1.0, SignConventionSpec::CoulombConsistent),
                Preset::GravitySi => (
                    SPEED_OF_LIGHT,
                    -GRAVITATIONAL_CONSTANT,
                    SignConventionSpec::CoulombConsistent,
                ),
            };
            cn.c.get_or_insert(pc);
            cn.k.get_or_insert(pk);
            cn.sign_convention.get_or_insert(psc);
        }
        let c =
            cn.c.ok_or("constants.c missing (set it or choose a preset)")?;
        let k =
            cn.k.ok_or("constants.k missing (set it or choose a preset)")?;
        let sign = cn
            .sign_convention
            .ok_or("constants.sign_convention missing (set it or choose a preset)")?;
        if !(c > 0.0) || !c.is_finite() {
            return Err(format!("constants.c must be positive and finite, got {c}"));
        }

        let it = &resolved.integrator;
        if !(it.dt > 0.0) || !it.dt.is_finite() {
            return Err(format!("integrator.dt must be positive, got {}", it.dt));
        }
        if !(it.t_end > 0.0) || !it.t_end.is_finite() {
            return Err(format!(
                "integrator.t_end must be positive, got {}",
                it.t_end
            ));
        }
        if it.output_stride == 0 {
            return Err("integrator.output_stride must be >= 1".into());
        }

        if resolved.particles.is_empty() {
            return Err("particles list is empty".into());
        }
        let gravity = cn.preset == Some(Preset::GravitySi);
        let mut particles = Vec::new();
        let mut pos = Vec::new();
        let mut vel = Vec::new();
        for (i, p) in resolved.particles.iter_mut().enumerate() {
            let field = |name: &str| format!("particles[{i}].{name}");
            if p.label.is_empty() {
                return Err(format!("{} must not be empty", field("label")));
            }
            if !(p.m > 0.0) || !p.m.is_finite() {
                return Err(format!(
                    "{} must be positive and finite (test particles carry q/m), got {}",
                    field("m"),
                    p.m
                ));
            }
            let q = match p.q {
                Some(q) if q.is_finite() => q,
                Some(q) => return Err(format!("{} is not finite: {q}", field("q"))),
                None if gravity => {
                    p.q = Some(p.m);
                    p.m
                }
                None => {
                    return Err(format!(
                        "{} missing (no preset default applies)",
                        field("q")
                    ))
                }
            };
            let v = Vec3::from_array(p.vel);
            if !v.is_finite() || !Vec3::from_array(p.pos).is_finite() {
                return Err(format!("particles[{i}] has a non-finite pos/vel component"));
            }
            if v.norm() >= c {
                return Err(format!(
                    "{}: |v| = {:e} must be below c = {c:e}",
                    field("vel"),
                    v.norm()
                ));
            }
            let core = Particle {
                label: p.label.clone(),
                m: p.m,
                q,
                is_test: p.test,
            };
            core.validate()
                .map_err(|e| format!("particles[{i}]: {e}"))?;
            particles.push(core);
            pos.push(Vec3::from_array(p.pos));
            vel.push(v);
        }
        for i in 0..particles.len() {
            for j in (i + 1)..particles.len() {
                if particles[i].label == particles[j].label {
                    return Err(format!(
                        "duplicate particle label '{}' (particles[{i}], particles[{j}])",
                        particles[i].label
                    ));
                }
            }
        }

        for f in &resolved.output.formats {
            if f != "csv" && f != "json" {
                return Err(format!("output.formats entries must be \"csv\" or \"json\", got \"{f}\""));
            }
        }

        let length_scale = match cn.length_scale {
            Some(s) if s > 0.0 && s.is_finite() => s,
            Some(s) => return Err(format!("constants.length_scale must be positive, got {s}")),
            None => min_separation(&pos).unwrap_or(1.0),
        };
        let coupling = Coupling::new(c, k, sign.into())
            .map_err(|e| format!("constants: {e}"))?
            .with_length_scale(length_scale);

        let initial = SystemState::from_velocities(0.0, pos, &vel, c)
            .map_err(|e| format!("initial state: {e}"))?;
        let sim = SimConfig {
            coupling,
            dt: it.dt,
            t_end: it.t_end,
            output_stride: it.output_stride,
            history_capacity: it.history_capacity,
            tolerances: Tolerances::default(),
        };
        Ok(ResolvedRun {
            sim,
            particles,
            initial,
            resolved,
        })
    }
}

fn min_separation(pos: &[Vec3]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..pos.len() {
        for j in (i + 1)..pos.len() {
            let d = (pos[i] - pos[j]).norm();
            if d > 0.0 {
                best = Some(best.map_or(d, |b: f64| b.min(d)));
            }
        }
    }
    best
}
