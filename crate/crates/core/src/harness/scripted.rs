//! Hand-scripted oracle controller.
//!
//! Moves the cup greedily along the observed cup-to-goal displacement by
//! mapping it through the transpose of the cup's analytic Jacobian. Used to
//! confirm the task is solvable over the sampling region and that the flag
//! logic behaves; it is not a learned policy.

use crate::arm_sim::ArmGeometry;
use crate::env::{Action, Observation};

use super::eval::Policy;

/// Greedy displacement-following controller.
pub struct GreedyController {
    pub geometry: ArmGeometry,
    pub delta_max: f64,
    /// Gain applied to the Jacobian-transpose step before clamping.
    pub gain: f64,
}

impl GreedyController {
    pub fn new(geometry: ArmGeometry, delta_max: f64) -> Self {
        Self {
            geometry,
            delta_max,
            gain: 8.0,
        }
    }
}

impl Policy for GreedyController {
    fn action(&self, obs: &Observation) -> Action {
        let o = obs.as_slice();
        let (q1, q2, q3) = (o[15], o[16], o[17]);
        let disp = obs.displacement();
        let g = &self.geometry;

        let (s1, c1) = q1.sin_cos();
        let (s2, c2) = q2.sin_cos();
        let (s3, c3) = q3.sin_cos();
        // Cup position: ((l2 c2 + l3 c3 + l4) c1, (l2 c2 + l3 c3 + l4) s1,
        // h1 + l2 s2 + l3 s3 - lc); its Jacobian columns follow directly.
        let radius = g.l2 * c2 + g.l3 * c3 + g.l4;
        let jac = [
            [-s1 * radius, c1 * radius, 0.0],
            [-c1 * g.l2 * s2, -s1 * g.l2 * s2, g.l2 * c2],
            [-c1 * g.l3 * s3, -s1 * g.l3 * s3, g.l3 * c3],
        ];
        let raw = [
            self.gain * (jac[0][0] * disp.x + jac[0][1] * disp.y + jac[0][2] * disp.z),
            self.gain * (jac[1][0] * disp.x + jac[1][1] * disp.y + jac[1][2] * disp.z),
            self.gain * (jac[2][0] * disp.x + jac[2][1] * disp.y + jac[2][2] * disp.z),
        ];
        Action::clamped(raw, self.delta_max)
    }
}
