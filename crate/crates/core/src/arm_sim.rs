//! Deterministic kinematic model of the simplified 5-link arm.
//!
//! The arm is a yaw joint on a vertical base, two links whose elevations are
//! commanded as absolute angles from horizontal, a horizontal end link, and a
//! suction cup hanging below its tip. Joint motion is pure rate limiting at a
//! fixed tick rate; "steady state" means no joint moved more than a
//! threshold during the last tick. A pushable cylinder on the ground plane
//! serves as the target object.

use std::ops::{Add, Mul, Sub};

use serde::Serialize;

use crate::{Error, Result};

/// Plain 3D point/vector in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Length of the projection onto the ground plane.
    pub fn xy_norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Fixed link lengths of the arm, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArmGeometry {
    /// Base-to-shoulder height.
    pub h1: f64,
    /// Shoulder link length.
    pub l2: f64,
    /// Elbow link length.
    pub l3: f64,
    /// Horizontal end-link length.
    pub l4: f64,
    /// Suction-cup vertical drop below the end-link tip.
    pub lc: f64,
}

impl Default for ArmGeometry {
    /// Desk-scale geometry approximating a small hobby arm.
    fn default() -> Self {
        Self {
            h1: 0.106,
            l2: 0.142,
            l3: 0.158,
            l4: 0.056,
            lc: 0.030,
        }
    }
}

impl ArmGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("h1", self.h1),
            ("l2", self.l2),
            ("l3", self.l3),
            ("l4", self.l4),
            ("lc", self.lc),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("link length {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Upper bound on the cup's horizontal distance from the base axis.
    pub fn horizontal_reach(&self) -> f64 {
        self.l2 + self.l3 + self.l4
    }
}

/// Commanded joint angles: base yaw plus the absolute elevations of the two
/// main links. The end-link joint is derived, not commanded.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct JointVector {
    /// Base yaw (rad).
    pub q1: f64,
    /// Absolute elevation of the shoulder link from horizontal (rad).
    pub q2: f64,
    /// Absolute elevation of the elbow link from horizontal (rad).
    pub q3: f64,
}

impl JointVector {
    pub const fn new(q1: f64, q2: f64, q3: f64) -> Self {
        Self { q1, q2, q3 }
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.q1, self.q2, self.q3]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    /// Per-joint offset, used to turn an action into a reference.
    pub fn offset(self, delta: [f64; 3]) -> Self {
        Self::new(self.q1 + delta[0], self.q2 + delta[1], self.q3 + delta[2])
    }

    /// Largest per-joint absolute difference.
    pub fn max_abs_diff(self, other: Self) -> f64 {
        (self.q1 - other.q1)
            .abs()
            .max((self.q2 - other.q2).abs())
            .max((self.q3 - other.q3).abs())
    }
}

/// Per-joint command bounds in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointLimits {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Default for JointLimits {
    /// Encloses a ground-reachable workspace in front of the arm.
    fn default() -> Self {
        Self {
            min: [
                -std::f64::consts::FRAC_PI_2,
                0.0,
                -60f64.to_radians(),
            ],
            max: [
                std::f64::consts::FRAC_PI_2,
                85f64.to_radians(),
                30f64.to_radians(),
            ],
        }
    }
}

impl JointLimits {
    pub fn validate(&self) -> Result<()> {
        for j in 0..3 {
            if !(self.min[j] < self.max[j]) {
                return Err(Error::Config(format!(
                    "joint {} limits must satisfy min < max, got [{}, {}]",
                    j + 1,
                    self.min[j],
                    self.max[j]
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, q: JointVector) -> bool {
        let a = q.as_array();
        (0..3).all(|j| a[j] >= self.min[j] && a[j] <= self.max[j])
    }
}

/// Positions of the link endpoints for one joint configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPoints {
    /// Shoulder (top of the base column).
    pub p1: Vec3,
    /// Elbow.
    pub p2: Vec3,
    /// Wrist.
    pub p3: Vec3,
    /// End-link tip.
    pub p4: Vec3,
    /// Suction-cup tip.
    pub pc: Vec3,
}

/// Upright cylinder resting on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectState {
    /// Base-center position; `z` is always 0.
    pub center: Vec3,
    pub radius: f64,
    pub height: f64,
}

impl ObjectState {
    /// Goal point for the reaching task: the top-surface center.
    pub fn top_center(&self) -> Vec3 {
        self.center + Vec3::new(0.0, 0.0, self.height)
    }
}

impl Default for ObjectState {
    fn default() -> Self {
        Self {
            center: Vec3::default(),
            radius: 0.020,
            height: 0.040,
        }
    }
}

/// Rate-limit motion law and steadiness threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MotionParams {
    /// Per-joint speed limit (rad/s).
    pub omega_max: f64,
    /// Tick duration (s); the simulator runs at 1/dt Hz.
    pub dt: f64,
    /// Steadiness threshold (rad); below one tick's motion quantum.
    pub eps: f64,
    /// Settle tick budget; pure rate limiting always converges, this guards
    /// future motion laws.
    pub max_ticks: u32,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            omega_max: 1.0,
            dt: 1.0 / 20.0,
            eps: 1e-3,
            max_ticks: 1000,
        }
    }
}

impl MotionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_max > 0.0) || !(self.dt > 0.0) || !(self.eps > 0.0) || self.max_ticks == 0 {
            return Err(Error::Config(format!(
                "motion params must be positive: omega_max={}, dt={}, eps={}, max_ticks={}",
                self.omega_max, self.dt, self.eps, self.max_ticks
            )));
        }
        Ok(())
    }
}

/// Outcome of running the arm to steadiness for one reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleResult {
    pub q_steady: JointVector,
    /// Ticks executed, including the final confirming tick. Always >= 1.
    pub ticks: u32,
    /// True when the reference was clipped by joint limits and the joints
    /// never moved beyond the steadiness threshold.
    pub stuck_at_boundary: bool,
}

/// Link endpoint positions for joint angles `q`.
///
/// With `rhat = (cos q1, sin q1, 0)`: the shoulder sits at height `h1`, the
/// two main links rise by their absolute elevations inside the vertical plane
/// spanned by `rhat`, the end link extends horizontally along `rhat`, and the
/// cup hangs `lc` below its tip.
pub fn forward_kinematics(geom: &ArmGeometry, q: JointVector) -> LinkPoints {
    let (s1, c1) = q.q1.sin_cos();
    let rhat = Vec3::new(c1, s1, 0.0);
    let zhat = Vec3::new(0.0, 0.0, 1.0);
    let p1 = Vec3::new(0.0, 0.0, geom.h1);
    let p2 = p1 + (rhat * q.q2.cos() + zhat * q.q2.sin()) * geom.l2;
    let p3 = p2 + (rhat * q.q3.cos() + zhat * q.q3.sin()) * geom.l3;
    let p4 = p3 + rhat * geom.l4;
    let pc = p4 - zhat * geom.lc;
    LinkPoints { p1, p2, p3, p4, pc }
}

/// Relative elevation command that keeps the end link horizontal given the
/// elbow link's absolute elevation.
pub fn joint4_angle(q: JointVector) -> f64 {
    -q.q3
}

/// Per-joint clamp into the limits; a flag is true iff that joint's
/// reference was altered.
pub fn clamp_reference(q_ref: JointVector, limits: &JointLimits) -> (JointVector, [bool; 3]) {
    let raw = q_ref.as_array();
    let mut clamped = raw;
    let mut flags = [false; 3];
    for j in 0..3 {
        clamped[j] = raw[j].clamp(limits.min[j], limits.max[j]);
        flags[j] = clamped[j] != raw[j];
    }
    (JointVector::from_array(clamped), flags)
}

/// One tick of rate-limited motion: each joint moves toward its reference by
/// at most `omega_max * dt`, arriving exactly when closer than that.
pub fn tick(q: JointVector, q_ref: JointVector, omega_max: f64, dt: f64) -> JointVector {
    let step = omega_max * dt;
    let cur = q.as_array();
    let tgt = q_ref.as_array();
    let mut next = [0.0; 3];
    for j in 0..3 {
        let gap = tgt[j] - cur[j];
        next[j] = if gap.abs() <= step {
            tgt[j]
        } else {
            cur[j] + step.copysign(gap)
        };
    }
    JointVector::from_array(next)
}

/// Runs [`tick`] until the first tick whose largest joint change is below
/// `motion.eps`, reporting the steady joints, the tick count, and whether the
/// transition was stuck at a joint limit.
///
/// `reference_clipped` must say whether [`clamp_reference`] altered the raw
/// reference; stuck detection needs it.
pub fn settle(
    q: JointVector,
    q_ref: JointVector,
    reference_clipped: bool,
    motion: &MotionParams,
) -> Result<SettleResult> {
    settle_observed(q, q_ref, reference_clipped, motion, |_| {})
}

/// [`settle`] with a per-tick observer, called with the joints after every
/// tick (the environment resolves object pushes there).
pub fn settle_observed(
    q: JointVector,
    q_ref: JointVector,
    reference_clipped: bool,
    motion: &MotionParams,
    mut observe: impl FnMut(JointVector),
) -> Result<SettleResult> {
    let start = q;
    let mut prev = q;
    for ticks in 1..=motion.max_ticks {
        let next = tick(prev, q_ref, motion.omega_max, motion.dt);
        observe(next);
        let moved = next.max_abs_diff(prev);
        prev = next;
        if moved < motion.eps {
            let stuck = reference_clipped && next.max_abs_diff(start) < motion.eps;
            return Ok(SettleResult {
                q_steady: next,
                ticks,
                stuck_at_boundary: stuck,
            });
        }
    }
    Err(Error::SettleTimeout {
        max_ticks: motion.max_ticks,
    })
}

/// Resolves cup/object interpenetration by sliding the object horizontally.
///
/// When the cup tip is below the object's top and within its radius, the
/// object translates along the cup-axis line (minimally) so the cup sits
/// exactly on the lateral surface. Returns the new object state and the
/// translation length `d_o` (0 when there was no contact).
pub fn resolve_object_push(prev_cup: Vec3, new_cup: Vec3, obj: &ObjectState) -> (ObjectState, f64) {
    let offset = Vec3::new(new_cup.x - obj.center.x, new_cup.y - obj.center.y, 0.0);
    let rho = offset.xy_norm();
    if new_cup.z >= obj.height || rho >= obj.radius {
        return (*obj, 0.0);
    }
    // Minimal resolving translation: the object flees the side the cup sits
    // on. With the cup dead on the axis that side is ambiguous, so the cup's
    // sweep direction breaks the tie, then +x.
    let flee = if rho > 0.0 {
        offset * (-1.0 / rho)
    } else {
        let sweep = Vec3::new(new_cup.x - prev_cup.x, new_cup.y - prev_cup.y, 0.0);
        let s = sweep.xy_norm();
        if s > 0.0 {
            sweep * (1.0 / s)
        } else {
            Vec3::new(1.0, 0.0, 0.0)
        }
    };
    let d_o = obj.radius - rho;
    let moved = ObjectState {
        center: obj.center + flee * d_o,
        ..*obj
    };
    (moved, d_o)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn fk_straight_up_shoulder() {
        let g = ArmGeometry::default();
        let q = JointVector::new(0.0, std::f64::consts::FRAC_PI_2, 0.0);
        let pts = forward_kinematics(&g, q);
        let expected = Vec3::new(g.l3 + g.l4, 0.0, g.h1 + g.l2 - g.lc);
        assert!(close(pts.pc, expected, 1e-12), "{:?}", pts.pc);
    }

    #[test]
    fn fk_yaw_equivariance() {
        let g = ArmGeometry::default();
        let q = JointVector::new(0.35, 0.7, -0.4);
        let rotated = JointVector::new(q.q1 + std::f64::consts::FRAC_PI_2, q.q2, q.q3);
        let a = forward_kinematics(&g, q);
        let b = forward_kinematics(&g, rotated);
        for (pa, pb) in [
            (a.p1, b.p1),
            (a.p2, b.p2),
            (a.p3, b.p3),
            (a.p4, b.p4),
            (a.pc, b.pc),
        ] {
            // (x, y) -> (-y, x), z unchanged.
            assert!((pb.x + pa.y).abs() < EPS);
            assert!((pb.y - pa.x).abs() < EPS);
            assert!((pb.z - pa.z).abs() < EPS);
        }
    }

    #[test]
    fn fk_link_lengths_hold() {
        let g = ArmGeometry::default();
        let q = JointVector::new(-0.8, 1.1, 0.2);
        let pts = forward_kinematics(&g, q);
        assert!(((pts.p2 - pts.p1).norm() - g.l2).abs() < EPS);
        assert!(((pts.p3 - pts.p2).norm() - g.l3).abs() < EPS);
        assert!(((pts.p4 - pts.p3).norm() - g.l4).abs() < EPS);
        assert!((pts.p4 - pts.p3).z.abs() < EPS);
        assert!(close(pts.pc, pts.p4 - Vec3::new(0.0, 0.0, g.lc), EPS));
    }

    #[test]
    fn joint4_keeps_end_link_horizontal() {
        assert_eq!(joint4_angle(JointVector::new(0.0, 0.2, 0.0)), 0.0);
        assert_eq!(joint4_angle(JointVector::new(0.0, 0.2, 0.3)), -0.3);
        let g = ArmGeometry::default();
        for i in 0..20 {
            let q = JointVector::new(
                -1.5 + 0.15 * i as f64,
                0.05 * i as f64,
                -1.0 + 0.09 * i as f64,
            );
            let pts = forward_kinematics(&g, q);
            assert!((pts.p4 - pts.p3).z.abs() < EPS);
        }
    }

    #[test]
    fn clamp_reference_flags() {
        let limits = JointLimits::default();
        let inside = JointVector::new(0.3, 0.5, -0.2);
        let (c, f) = clamp_reference(inside, &limits);
        assert_eq!(c, inside);
        assert_eq!(f, [false; 3]);

        let over = JointVector::new(0.3, limits.max[1] + 0.1, -0.2);
        let (c, f) = clamp_reference(over, &limits);
        assert_eq!(c.q2, limits.max[1]);
        assert_eq!(f, [false, true, false]);

        let wild = JointVector::new(10.0, -10.0, 10.0);
        let (c, f) = clamp_reference(wild, &limits);
        assert_eq!(f, [true; 3]);
        assert!(limits.contains(c));
    }

    #[test]
    fn tick_rate_limits_and_arrives() {
        let q = JointVector::new(0.0, 0.0, 0.0);
        let q_ref = JointVector::new(0.10, 0.0, 0.0);
        let next = tick(q, q_ref, 1.0, 0.05);
        assert!((next.q1 - 0.05).abs() < EPS);

        // Fixed point.
        assert_eq!(tick(q_ref, q_ref, 1.0, 0.05), q_ref);

        // Gap 0.12 at step 0.05 arrives after exactly ceil(0.12/0.05) = 3 ticks.
        let mut q = JointVector::new(0.0, 0.12, 0.0);
        let q_ref = JointVector::new(0.0, 0.0, 0.0);
        let mut n = 0;
        while q != q_ref {
            q = tick(q, q_ref, 1.0, 0.05);
            n += 1;
            assert!(n <= 10);
        }
        assert_eq!(n, 3);
    }

    #[test]
    fn tick_monotone_gap() {
        let q_ref = JointVector::new(0.4, -0.3, 0.8);
        let mut q = JointVector::new(-0.5, 0.9, 0.0);
        let mut gap = q.max_abs_diff(q_ref);
        for _ in 0..60 {
            q = tick(q, q_ref, 1.0, 0.05);
            let new_gap = q.max_abs_diff(q_ref);
            assert!(new_gap <= gap + EPS);
            gap = new_gap;
        }
    }

    #[test]
    fn settle_immediate_when_at_reference() {
        let q = JointVector::new(0.1, 0.2, 0.3);
        let r = settle(q, q, false, &MotionParams::default()).unwrap();
        assert_eq!(r.ticks, 1);
        assert_eq!(r.q_steady, q);
        assert!(!r.stuck_at_boundary);
    }

    #[test]
    fn settle_counts_confirming_tick() {
        let motion = MotionParams::default();
        let q = JointVector::new(0.0, 0.0, 0.0);
        let q_ref = JointVector::new(0.10, 0.0, 0.0);
        let r = settle(q, q_ref, false, &motion).unwrap();
        // Arrives on tick 2, tick 3 confirms zero motion.
        assert_eq!(r.ticks, 3);
        assert_eq!(r.q_steady, q_ref);
        assert!(!r.stuck_at_boundary);
    }

    #[test]
    fn settle_detects_boundary_stuck() {
        let motion = MotionParams::default();
        let limits = JointLimits::default();
        let q = JointVector::new(0.0, limits.max[1], 0.0);
        let raw = JointVector::new(0.0, limits.max[1] + 0.2, 0.0);
        let (clamped, flags) = clamp_reference(raw, &limits);
        let r = settle(q, clamped, flags.iter().any(|&f| f), &motion).unwrap();
        assert!(r.stuck_at_boundary);
        assert!(r.q_steady.max_abs_diff(q) < motion.eps);
    }

    #[test]
    fn settle_times_out_when_budget_is_too_small() {
        let motion = MotionParams {
            omega_max: 1e-6,
            eps: 1e-9,
            max_ticks: 3,
            ..MotionParams::default()
        };
        let q = JointVector::new(0.0, 0.0, 0.0);
        let q_ref = JointVector::new(1.0, 0.0, 0.0);
        assert!(matches!(
            settle(q, q_ref, false, &motion),
            Err(crate::Error::SettleTimeout { max_ticks: 3 })
        ));
    }

    #[test]
    fn settle_reaches_reference_exactly() {
        let motion = MotionParams::default();
        let q = JointVector::new(-0.3, 0.6, 0.1);
        let q_ref = JointVector::new(0.2, 0.4, -0.5);
        let r = settle(q, q_ref, false, &motion).unwrap();
        assert_eq!(r.q_steady, q_ref);

        // Idempotence: settling again from the steady state is immediate.
        let again = settle(r.q_steady, q_ref, false, &motion).unwrap();
        assert_eq!(again.ticks, 1);
        assert_eq!(again.q_steady, r.q_steady);
    }

    #[test]
    fn push_requires_contact() {
        let obj = ObjectState {
            center: Vec3::new(0.2, 0.0, 0.0),
            ..ObjectState::default()
        };
        // Above the object: no contact.
        let cup = Vec3::new(0.21, 0.0, 0.05);
        let (after, d_o) = resolve_object_push(cup, cup, &obj);
        assert_eq!(d_o, 0.0);
        assert_eq!(after, obj);

        // Outside the radius: no contact.
        let cup = Vec3::new(0.25, 0.0, 0.01);
        let (after, d_o) = resolve_object_push(cup, cup, &obj);
        assert_eq!(d_o, 0.0);
        assert_eq!(after, obj);
    }

    #[test]
    fn push_slides_object_to_surface() {
        let obj = ObjectState {
            center: Vec3::new(0.2, 0.0, 0.0),
            radius: 0.02,
            height: 0.04,
        };
        let cup = Vec3::new(0.21, 0.0, 0.02);
        let (after, d_o) = resolve_object_push(cup, cup, &obj);
        assert!((d_o - 0.01).abs() < EPS);
        // Object slides away from the cup along -x; the cup ends on the surface.
        assert!((after.center.x - 0.19).abs() < EPS);
        let rho = (Vec3::new(cup.x - after.center.x, cup.y - after.center.y, 0.0)).xy_norm();
        assert!((rho - obj.radius).abs() < EPS);
        assert_eq!(after.center.z, 0.0);
    }

    #[test]
    fn push_on_axis_uses_sweep_direction_then_x() {
        let obj = ObjectState {
            center: Vec3::new(0.2, 0.0, 0.0),
            radius: 0.02,
            height: 0.04,
        };
        let prev = Vec3::new(0.2, -0.05, 0.02);
        let cup = Vec3::new(0.2, 0.0, 0.02);
        let (after, d_o) = resolve_object_push(prev, cup, &obj);
        assert!((d_o - obj.radius).abs() < EPS);
        // Swept along +y, so the object is pushed ahead along +y.
        assert!((after.center.y - 0.02).abs() < EPS, "{:?}", after.center);

        let (after, d_o) = resolve_object_push(cup, cup, &obj);
        assert!((d_o - obj.radius).abs() < EPS);
        assert!((after.center.x - 0.22).abs() < EPS);
    }

    #[test]
    fn push_zero_iff_object_unchanged() {
        let obj = ObjectState {
            center: Vec3::new(0.15, 0.05, 0.0),
            ..ObjectState::default()
        };
        for (cup_z, dx) in [(0.05, 0.0), (0.01, 0.001), (0.03, 0.05)] {
            let cup = Vec3::new(obj.center.x + dx, obj.center.y, cup_z);
            let (after, d_o) = resolve_object_push(cup, cup, &obj);
            assert_eq!(d_o == 0.0, after == obj);
        }
    }

    #[test]
    fn reach_bound_holds() {
        let g = ArmGeometry::default();
        let limits = JointLimits::default();
        for i in 0..200 {
            let t = i as f64 / 199.0;
            let q = JointVector::new(
                limits.min[0] + t * (limits.max[0] - limits.min[0]),
                limits.min[1] + (1.0 - t) * (limits.max[1] - limits.min[1]),
                limits.min[2] + t * (limits.max[2] - limits.min[2]),
            );
            let pts = forward_kinematics(&g, q);
            assert!(pts.pc.xy_norm() <= g.horizontal_reach() + EPS);
        }
    }
}
