//! Minkowski-space kinematics: metric algebra, gamma factors and Lorentz
//! transformations.
//!
//! Conventions: metric signature (+,-,-,-), time component stored as
//! x0 = c*t, four-velocities dimensionless with u.u = 1.

use crate::error::{Result, SimError};
use crate::vec3::Vec3;

/// Diagonal of the Minkowski metric, eta = diag(+1,-1,-1,-1).
pub const METRIC_DIAG: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// Contravariant four-component quantity in a fixed global inertial frame.
///
/// Events store x0 = c*t; the same type is reused dimensionlessly for
/// four-velocities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> Result<Self> {
        let v = FourVector([x0, x1, x2, x3]);
        if v.0.iter().all(|c| c.is_finite()) {
            Ok(v)
        } else {
            Err(SimError::NonFinite {
                context: "FourVector",
            })
        }
    }

    /// Event at coordinate time `t` and position `pos`, so x0 = c*t.
    pub fn event(c: f64, t: f64, pos: Vec3) -> Self {
        FourVector([c * t, pos.x, pos.y, pos.z])
    }

    pub fn time(&self, c: f64) -> f64 {
        self.0[0] / c
    }

    pub fn spatial(&self) -> Vec3 {
        Vec3::new(self.0[1], self.0[2], self.0[3])
    }
}

impl std::ops::Index<usize> for FourVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::Sub for FourVector {
    type Output = FourVector;
    fn sub(self, o: FourVector) -> FourVector {
        FourVector([
            self.0[0] - o.0[0],
            self.0[1] - o.0[1],
            self.0[2] - o.0[2],
            self.0[3] - o.0[3],
        ])
    }
}

/// Metric inner product a.b = a0*b0 - a1*b1 - a2*b2 - a3*b3.
pub fn minkowski_inner(a: &FourVector, b: &FourVector) -> f64 {
    a.0[0] * b.0[0] - a.0[1] * b.0[1] - a.0[2] * b.0[2] - a.0[3] * b.0[3]
}

/// A coordinate velocity validated subluminal at construction.
#[derive(Clone, Copy, Debug)]
pub struct ThreeVelocity {
    v: Vec3,
}

impl ThreeVelocity {
    /// Rejects |v| >= c and non-finite components.
    pub fn new(v: Vec3, c: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(SimError::NonFinite {
                context: "ThreeVelocity",
            });
        }
        let speed = v.norm();
        if speed >= c {
            return Err(SimError::Superluminal { speed, c });
        }
        Ok(ThreeVelocity { v })
    }

    pub fn as_vec(&self) -> Vec3 {
        self.v
    }
}

/// gamma = (1 - |v|^2/c^2)^(-1/2); dt/ds along the world line is gamma/c.
pub fn gamma_tilde(v: &ThreeVelocity, c: f64) -> f64 {
    gamma_from_vec(v.v, c)
}

/// Same as [`gamma_tilde`] for velocities whose subluminality is
/// structurally guaranteed by the caller.
pub(crate) fn gamma_from_vec(v: Vec3, c: f64) -> f64 {
    1.0 / (1.0 - v.norm_sq() / (c * c)).sqrt()
}

/// Dimensionless four-velocity u = (gamma, gamma*v/c), normalized u.u = 1.
pub fn four_velocity(v: &ThreeVelocity, c: f64) -> FourVector {
    let g = gamma_tilde(v, c);
    FourVector([g, g * v.v.x / c, g * v.v.y / c, g * v.v.z / c])
}

/// A member of the orthochronous Lorentz group, stored as the matrix
/// `lambda[mu][nu]` acting on column four-vectors.
#[derive(Clone, Debug)]
pub struct LorentzTransform {
    m: [[f64; 4]; 4],
}

impl LorentzTransform {
    /// Validates Lambda^T eta Lambda = eta per component and Lambda^0_0 >= 1.
    pub fn new(m: [[f64; 4]; 4], tol: f64) -> Result<Self> {
        let l = LorentzTransform { m };
        let dev = l.metric_deviation();
        if dev > tol {
            return Err(SimError::Invalid(format!(
                "matrix is not Lorentz: max |L^T eta L - eta| = {dev:e} > {tol:e}"
            )));
        }
        if m[0][0] < 1.0 {
            return Err(SimError::Invalid(format!(
                "transform is not orthochronous: L[0][0] = {} < 1",
                m[0][0]
            )));
        }
        Ok(l)
    }

    pub fn identity() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        LorentzTransform { m }
    }

    /// Pure boost for beta = v/c, `|beta| < 1`.
    ///
    /// Acts on coordinates: a particle at rest in the old frame moves with
    /// velocity -beta*c in the new one.
    pub fn boost(beta: Vec3) -> Result<Self> {
        if !beta.is_finite() {
            return Err(SimError::NonFinite {
                context: "boost beta",
            });
        }
        let b2 = beta.norm_sq();
        if b2 >= 1.0 {
            return Err(SimError::Superluminal {
                speed: b2.sqrt(),
                c: 1.0,
            });
        }
        if b2 == 0.0 {
            return Ok(Self::identity());
        }
        let g = 1.0 / (1.0 - b2).sqrt();
        let b = [beta.x, beta.y, beta.z];
        let mut m = [[0.0; 4]; 4];
        m[0][0] = g;
        for i in 0..3 {
            m[0][i + 1] = -g * b[i];
            m[i + 1][0] = -g * b[i];
            for j in 0..3 {
                m[i + 1][j + 1] = (if i == j { 1.0 } else { 0.0 }) + (g - 1.0) * b[i] * b[j] / b2;
            }
        }
        Ok(LorentzTransform { m })
    }

    pub fn matrix(&self) -> &[[f64; 4]; 4] {
        &self.m
    }

    /// Max-norm of Lambda^T eta Lambda - eta.
    pub fn metric_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let mut s = 0.0;
                for (mu, eta) in METRIC_DIAG.iter().enumerate() {
                    s += self.m[mu][a] * eta * self.m[mu][b];
                }
                let target = if a == b { METRIC_DIAG[a] } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    /// Matrix product self * other (apply `other` first).
    pub fn compose(&self, other: &LorentzTransform) -> LorentzTransform {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..4).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        LorentzTransform { m }
    }

    /// Exact group inverse, eta Lambda^T eta.
    pub fn inverse(&self) -> LorentzTransform {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = METRIC_DIAG[i] * self.m[j][i] * METRIC_DIAG[j];
            }
        }
        LorentzTransform { m }
    }

    pub fn apply(&self, v: &FourVector) -> FourVector {
        let mut out = [0.0; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|j| self.m[i][j] * v.0[j]).sum();
        }
        FourVector(out)
    }

    /// Transform a covector (lower index): (L^-1)^nu_mu a_nu.
    pub fn apply_covector(&self, a: &FourVector) -> FourVector {
        let inv = self.inverse();
        let mut out = [0.0; 4];
        for (mu, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|nu| inv.m[nu][mu] * a.0[nu]).sum();
        }
        FourVector(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vel(x: f64, y: f64, z: f64, c: f64) -> ThreeVelocity {
        ThreeVelocity::new(Vec3::new(x, y, z), c).unwrap()
    }

    #[test]
    fn inner_of_unit_timelike() {
        let a = FourVector([1.0, 0.0, 0.0, 0.0]);
        assert_eq!(minkowski_inner(&a, &a), 1.0);
    }

    #[test]
    fn inner_of_null_vector() {
        let a = FourVector([1.0, 1.0, 0.0, 0.0]);
        assert_eq!(minkowski_inner(&a, &a), 0.0);
    }

    #[test]
    fn four_velocity_at_point_six_c() {
        let c = 1.0;
        let u = four_velocity(&vel(0.6, 0.0, 0.0, c), c);
        assert!((u[0] - 1.25).abs() < 1e-15);
        assert!((u[1] - 0.75).abs() < 1e-15);
        assert!((minkowski_inner(&u, &u) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gamma_values() {
        let c = 2.0;
        assert_eq!(gamma_tilde(&vel(0.0, 0.0, 0.0, c), c), 1.0);
        let g = gamma_tilde(&vel(0.0, 1.2, 0.0, c), c); // |v| = 0.6c
        assert!((g - 1.25).abs() < 1e-15);
    }

    #[test]
    fn luminal_velocity_rejected() {
        let err = ThreeVelocity::new(Vec3::new(1.0, 0.0, 0.0), 1.0);
        assert!(matches!(err, Err(SimError::Superluminal { .. })));
    }

    #[test]
    fn rest_four_velocity() {
        let u = four_velocity(&vel(0.0, 0.0, 0.0, 3.0), 3.0);
        assert_eq!(u.0, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn boost_of_timelike_unit() {
        let l = LorentzTransform::boost(Vec3::new(0.6, 0.0, 0.0)).unwrap();
        let v = l.apply(&FourVector([1.0, 0.0, 0.0, 0.0]));
        assert!((v[0] - 1.25).abs() < 1e-15);
        assert!((v[1] + 0.75).abs() < 1e-15);
        assert_eq!(v[2], 0.0);
        assert_eq!(v[3], 0.0);
    }

    #[test]
    fn zero_boost_is_identity() {
        let l = LorentzTransform::boost(Vec3::ZERO).unwrap();
        assert_eq!(l.matrix(), LorentzTransform::identity().matrix());
    }

    #[test]
    fn boost_inverse_roundtrip() {
        let b = Vec3::new(0.3, -0.5, 0.2);
        let l = LorentzTransform::boost(b).unwrap();
        let li = LorentzTransform::boost(-b).unwrap();
        let id = l.compose(&li);
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((id.matrix()[i][j] - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn superluminal_boost_rejected() {
        assert!(LorentzTransform::boost(Vec3::new(1.0, 0.2, 0.0)).is_err());
    }

    #[test]
    fn non_lorentz_matrix_rejected() {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        m[1][1] = 2.0; // breaks L^T eta L = eta
        assert!(LorentzTransform::new(m, 1e-12).is_err());
    }

    #[test]
    fn time_reversal_rejected() {
        // In the group (L^T eta L = eta holds) but not orthochronous.
        let mut m = [[0.0; 4]; 4];
        m[0][0] = -1.0;
        m[1][1] = 1.0;
        m[2][2] = 1.0;
        m[3][3] = 1.0;
        let err = LorentzTransform::new(m, 1e-12);
        assert!(matches!(err, Err(SimError::Invalid(_))));
    }

    #[test]
    fn covector_transform_contracts_invariantly() {
        // a_mu b^mu is frame-independent when a transforms as a covector.
        let l = LorentzTransform::boost(Vec3::new(0.4, -0.2, 0.5)).unwrap();
        let a_low = FourVector([1.3, -0.4, 0.2, 2.0]);
        let b = FourVector([0.7, 1.1, -0.6, 0.3]);
        let before: f64 = (0..4).map(|mu| a_low[mu] * b[mu]).sum();
        let a_low2 = l.apply_covector(&a_low);
        let b2 = l.apply(&b);
        let after: f64 = (0..4).map(|mu| a_low2[mu] * b2[mu]).sum();
        assert!((before - after).abs() < 1e-13, "{before} vs {after}");
    }

    fn arb_beta() -> impl Strategy<Value = Vec3> {
        (-0.95f64..0.95, -0.95f64..0.95, -0.95f64..0.95)
            .prop_map(|(x, y, z)| Vec3::new(x, y, z))
            .prop_filter("subluminal", |b| b.norm() < 0.95)
    }

    proptest! {
        #[test]
        fn four_velocity_normalized(b in arb_beta()) {
            let c = 7.3;
            let u = four_velocity(&ThreeVelocity::new(b * c, c).unwrap(), c);
            prop_assert!((minkowski_inner(&u, &u) - 1.0).abs() < 1e-14);
        }

        #[test]
        fn boost_preserves_inner(b in arb_beta(),
                                 a0 in -5.0f64..5.0, a1 in -5.0f64..5.0,
                                 a2 in -5.0f64..5.0, a3 in -5.0f64..5.0,
                                 c0 in -5.0f64..5.0, c1 in -5.0f64..5.0,
                                 c2 in -5.0f64..5.0, c3 in -5.0f64..5.0) {
            let l = LorentzTransform::boost(b).unwrap();
            let x = FourVector([a0, a1, a2, a3]);
            let y = FourVector([c0, c1, c2, c3]);
            let before = minkowski_inner(&x, &y);
            let after = minkowski_inner(&l.apply(&x), &l.apply(&y));
            prop_assert!((before - after).abs() < 1e-12 * (1.0 + before.abs()));
        }

        #[test]
        fn composition_stays_in_group(b1 in arb_beta(), b2 in arb_beta()) {
            let l = LorentzTransform::boost(b1).unwrap()
                .compose(&LorentzTransform::boost(b2).unwrap());
            prop_assert!(l.metric_deviation() < 1e-11);
        }
    }
}
