//! Surge-yaw-heave rigid-body model of one robot.
//!
//! Thrust is proportional to fin flapping frequency, drag to velocity
//! squared. The caudal fin drives surge, the pectoral pair drives yaw
//! through a differential, and depth is a tug-of-war between fixed positive
//! buoyancy and the on/off dorsal fin. There is no reverse gear and no
//! brake: the only decelerating influence on surge is drag.
//!
//! Conventions: forces in newtons, torques in newton-millimeters, lengths
//! in millimeters, angles in radians. `1000.0 * F / m` converts a force in
//! N acting on a mass in kg into mm/s^2.

use crate::geometry::{normalize_angle, PoseYaw, Vec3};
use serde::{Deserialize, Serialize};

/// Commanded fin state for one control period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinCommand {
    /// Caudal (tail) fin frequency, Hz, >= 0.
    pub caudal_freq: f64,
    /// Left pectoral fin frequency, Hz, >= 0.
    pub pectoral_left_freq: f64,
    /// Right pectoral fin frequency, Hz, >= 0.
    pub pectoral_right_freq: f64,
    /// Dorsal fin on (dive) or off (float up).
    pub dorsal_on: bool,
}

impl FinCommand {
    /// All fins off.
    pub fn stop() -> Self {
        FinCommand {
            caudal_freq: 0.0,
            pectoral_left_freq: 0.0,
            pectoral_right_freq: 0.0,
            dorsal_on: false,
        }
    }

    /// Returns the command with every frequency clamped into [0, f_max].
    pub fn clamped(&self, f_max: f64) -> Self {
        FinCommand {
            caudal_freq: self.caudal_freq.clamp(0.0, f_max),
            pectoral_left_freq: self.pectoral_left_freq.clamp(0.0, f_max),
            pectoral_right_freq: self.pectoral_right_freq.clamp(0.0, f_max),
            dorsal_on: self.dorsal_on,
        }
    }
}

/// Full kinematic state of one robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub pose: PoseYaw,
    /// Surge speed along the body axis, mm/s, never negative.
    pub surge: f64,
    /// Yaw rate, rad/s, positive counterclockwise.
    pub yaw_rate: f64,
    /// Vertical speed along world z, mm/s, positive up.
    pub heave: f64,
    /// Fin command currently held (the last one issued).
    pub fins: FinCommand,
    pub leds_on: bool,
}

impl AgentState {
    pub fn at_rest(pose: PoseYaw, leds_on: bool) -> Self {
        AgentState {
            pose,
            surge: 0.0,
            yaw_rate: 0.0,
            heave: 0.0,
            fins: FinCommand::stop(),
            leds_on,
        }
    }
}

/// Physical parameters of the robot body.
///
/// The defaults are calibrated to two behavioral anchors, a top speed of
/// one body length per second and a coasting drift that takes seconds to
/// die out, rather than measured from any particular hardware. Everything
/// is overridable from scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsParams {
    /// Body mass including added mass, kg.
    pub mass: f64,
    /// Yaw moment of inertia, kg mm^2.
    pub yaw_inertia: f64,
    /// Caudal thrust gain, N per Hz.
    pub thrust_gain_caudal: f64,
    /// Pectoral thrust gain, N per Hz.
    pub thrust_gain_pectoral: f64,
    /// Dorsal downthrust gain, N per Hz.
    pub thrust_gain_dorsal: f64,
    /// Moment arm of the pectoral fins about the yaw axis, mm.
    pub pectoral_arm: f64,
    /// Net buoyancy force, N, positive up.
    pub buoyancy: f64,
    /// Quadratic surge drag, N per (mm/s)^2.
    pub drag_surge: f64,
    /// Quadratic yaw drag, N mm per (rad/s)^2.
    pub drag_yaw: f64,
    /// Quadratic heave drag, N per (mm/s)^2.
    pub drag_heave: f64,
    /// Maximum fin frequency, Hz.
    pub f_max: f64,
    /// Body length, mm.
    pub body_length: f64,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        let body_length = 130.0;
        let f_max = 3.0;
        let drag_surge = 4.0e-6;
        let buoyancy = 0.0128;
        DynamicsParams {
            mass: 0.2,
            yaw_inertia: 282.0,
            // terminal surge speed sqrt(k_c * f_max / c_u) = 1 BL/s exactly
            thrust_gain_caudal: body_length * body_length * drag_surge / f_max,
            thrust_gain_pectoral: 2.0e-2,
            // dorsal at f_max pushes down with twice the buoyancy, so climb
            // and dive rates are symmetric
            thrust_gain_dorsal: 2.0 * buoyancy / f_max,
            pectoral_arm: 30.0,
            buoyancy,
            drag_surge,
            drag_yaw: 2.0,
            drag_heave: 3.0e-5,
            f_max,
            body_length,
        }
    }
}

/// Tank geometry the robots are confined to. The water surface is at
/// z = 0 and the floor at z = -depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Tank {
    /// Rectangular tank centered on the origin: x in [-x/2, x/2],
    /// y in [-y/2, y/2], z in [-depth, 0]. Extents in mm.
    Box { x: f64, y: f64, depth: f64 },
    /// Cylindrical tank centered on the z axis.
    Cylinder { diameter: f64, depth: f64 },
}

impl Tank {
    pub fn depth(&self) -> f64 {
        match self {
            Tank::Box { depth, .. } | Tank::Cylinder { depth, .. } => *depth,
        }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        if p.z > 0.0 || p.z < -self.depth() {
            return false;
        }
        match self {
            Tank::Box { x, y, .. } => p.x.abs() <= x / 2.0 && p.y.abs() <= y / 2.0,
            Tank::Cylinder { diameter, .. } => p.horizontal_norm() <= diameter / 2.0,
        }
    }

    /// Clamps `p` into the tank. Returns the clamped point, the outward
    /// horizontal normal of the touched wall (if any), and whether the
    /// surface or floor was hit.
    fn clamp(&self, p: Vec3) -> (Vec3, Option<Vec3>, bool) {
        let mut out = p;
        let mut wall_normal = None;
        match self {
            Tank::Box { x, y, .. } => {
                let (hx, hy) = (x / 2.0, y / 2.0);
                if out.x.abs() > hx {
                    wall_normal = Some(Vec3::new(out.x.signum(), 0.0, 0.0));
                    out.x = out.x.clamp(-hx, hx);
                }
                if out.y.abs() > hy {
                    let n = Vec3::new(0.0, out.y.signum(), 0.0);
                    wall_normal = Some(match wall_normal {
                        // corner contact: diagonal normal
                        Some(m) => {
                            let s = m + n;
                            s.scale(1.0 / s.norm())
                        }
                        None => n,
                    });
                    out.y = out.y.clamp(-hy, hy);
                }
            }
            Tank::Cylinder { diameter, .. } => {
                let radius = diameter / 2.0;
                let r = out.horizontal_norm();
                if r > radius {
                    let n = Vec3::new(out.x / r, out.y / r, 0.0);
                    out.x = n.x * radius;
                    out.y = n.y * radius;
                    wall_normal = Some(n);
                }
            }
        }
        let mut vertical_hit = false;
        if out.z > 0.0 {
            out.z = 0.0;
            vertical_hit = true;
        } else if out.z < -self.depth() {
            out.z = -self.depth();
            vertical_hit = true;
        }
        (out, wall_normal, vertical_hit)
    }
}

/// Net generalized forces for the current state and command:
/// surge force (N), yaw torque (N mm), vertical force (N).
pub fn net_forces(state: &AgentState, cmd: &FinCommand, params: &DynamicsParams) -> (f64, f64, f64) {
    let c = cmd.clamped(params.f_max);
    let f_surge = params.thrust_gain_caudal * c.caudal_freq
        - params.drag_surge * state.surge * state.surge.abs();
    let tau_yaw = params.thrust_gain_pectoral
        * (c.pectoral_right_freq - c.pectoral_left_freq)
        * params.pectoral_arm
        - params.drag_yaw * state.yaw_rate * state.yaw_rate.abs();
    let dorsal = if c.dorsal_on { params.f_max } else { 0.0 };
    let f_z = params.buoyancy
        - params.thrust_gain_dorsal * dorsal
        - params.drag_heave * state.heave * state.heave.abs();
    (f_surge, tau_yaw, f_z)
}

/// Advances one robot by `dt` seconds with semi-implicit Euler: velocities
/// from forces first, then positions from the new velocities.
///
/// Drag is integrated separately from thrust so that drag alone can never
/// flip the sign of a velocity, whatever the step size; crossing zero under
/// pure drag parks the velocity at zero instead.
pub fn step(
    state: &AgentState,
    cmd: &FinCommand,
    dt: f64,
    params: &DynamicsParams,
    tank: &Tank,
) -> AgentState {
    debug_assert!(dt > 0.0 && dt <= 0.05, "physics step out of range: {dt}");
    let c = cmd.clamped(params.f_max);
    let to_mm = 1000.0 / params.mass;

    // surge: thrust is forward-only, so surge stays nonnegative forever
    let mut surge = drag_decay(state.surge, dt * to_mm * params.drag_surge);
    surge += dt * to_mm * params.thrust_gain_caudal * c.caudal_freq;

    // yaw: torque in N mm over inertia in kg mm^2 gives 1000 * tau / I rad/s^2
    let tau_thrust =
        params.thrust_gain_pectoral * (c.pectoral_right_freq - c.pectoral_left_freq) * params.pectoral_arm;
    let mut yaw_rate = drag_decay(state.yaw_rate, dt * 1000.0 * params.drag_yaw / params.yaw_inertia);
    yaw_rate += dt * 1000.0 * tau_thrust / params.yaw_inertia;

    // heave: buoyancy up, dorsal down
    let dorsal = if c.dorsal_on { params.f_max } else { 0.0 };
    let mut heave = drag_decay(state.heave, dt * to_mm * params.drag_heave);
    heave += dt * to_mm * (params.buoyancy - params.thrust_gain_dorsal * dorsal);

    let yaw = normalize_angle(state.pose.yaw + dt * yaw_rate);
    let (sin_yaw, cos_yaw) = yaw.sin_cos();
    let raw = Vec3::new(
        state.pose.position.x + dt * surge * cos_yaw,
        state.pose.position.y + dt * surge * sin_yaw,
        state.pose.position.z + dt * heave,
    );

    let (position, wall_normal, vertical_hit) = tank.clamp(raw);
    if let Some(n) = wall_normal {
        // kill surge only when still driving into the wall
        if cos_yaw * n.x + sin_yaw * n.y > 0.0 {
            surge = 0.0;
        }
    }
    if vertical_hit {
        heave = 0.0;
    }

    AgentState {
        pose: PoseYaw { position, yaw },
        surge,
        yaw_rate,
        heave,
        fins: c,
        leds_on: state.leds_on,
    }
}

/// One explicit-Euler update of `v` under quadratic drag with the combined
/// coefficient `k = dt * c / inertia`, clamped so it cannot cross zero.
fn drag_decay(v: f64, k: f64) -> f64 {
    let out = v - k * v * v.abs();
    if out * v < 0.0 {
        0.0
    } else {
        out
    }
}

/// Steady surge speed under full caudal actuation, mm/s.
pub fn terminal_speed(params: &DynamicsParams) -> f64 {
    (params.thrust_gain_caudal * params.f_max / params.drag_surge).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn big_tank() -> Tank {
        Tank::Cylinder { diameter: 100_000.0, depth: 50_000.0 }
    }

    fn mid_state() -> AgentState {
        AgentState::at_rest(
            PoseYaw::new(Vec3::new(0.0, 0.0, -1000.0), 0.0),
            true,
        )
    }

    #[test]
    fn rest_with_fins_off_leaves_only_buoyancy() {
        let p = DynamicsParams::default();
        let (fs, ty, fz) = net_forces(&mid_state(), &FinCommand::stop(), &p);
        assert_eq!(fs, 0.0);
        assert_eq!(ty, 0.0);
        assert_eq!(fz, p.buoyancy);
        assert!(fz > 0.0);
    }

    #[test]
    fn terminal_speed_balances_surge_force() {
        let p = DynamicsParams::default();
        let mut s = mid_state();
        s.surge = terminal_speed(&p);
        let cmd = FinCommand { caudal_freq: p.f_max, ..FinCommand::stop() };
        let (fs, _, _) = net_forces(&s, &cmd, &p);
        assert!(fs.abs() < 1e-12, "residual force {fs}");
    }

    #[test]
    fn symmetric_pectorals_produce_no_torque() {
        let p = DynamicsParams::default();
        let cmd = FinCommand {
            pectoral_left_freq: 1.7,
            pectoral_right_freq: 1.7,
            ..FinCommand::stop()
        };
        let (_, ty, _) = net_forces(&mid_state(), &cmd, &p);
        assert_eq!(ty, 0.0);
    }

    #[test]
    fn idle_robot_drifts_straight_up() {
        let p = DynamicsParams::default();
        let tank = big_tank();
        let mut s = mid_state();
        for _ in 0..100 {
            s = step(&s, &FinCommand::stop(), 0.01, &p, &tank);
        }
        assert_eq!(s.pose.position.x, 0.0);
        assert_eq!(s.pose.position.y, 0.0);
        assert!(s.pose.position.z > -1000.0);
        assert!(s.heave > 0.0);
    }

    #[test]
    fn full_caudal_reaches_terminal_speed() {
        let p = DynamicsParams::default();
        let tank = big_tank();
        let mut s = mid_state();
        let cmd = FinCommand { caudal_freq: p.f_max, ..FinCommand::stop() };
        for _ in 0..3000 {
            s = step(&s, &cmd, 0.01, &p, &tank);
        }
        let expected = terminal_speed(&p);
        assert_relative_eq!(s.surge, expected, max_relative = 0.02);
    }

    #[test]
    fn constant_differential_settles_on_predicted_circle() {
        let p = DynamicsParams::default();
        let tank = big_tank();
        let cmd = FinCommand {
            caudal_freq: p.f_max,
            pectoral_right_freq: 1.0,
            ..FinCommand::stop()
        };
        // steady-state balance: surge at terminal, yaw rate where pectoral
        // torque equals quadratic yaw drag
        let u_ss = terminal_speed(&p);
        let psi_dot_ss =
            (p.thrust_gain_pectoral * 1.0 * p.pectoral_arm / p.drag_yaw).sqrt();
        let predicted_radius = u_ss / psi_dot_ss;

        let mut s = mid_state();
        let mut late_points = Vec::new();
        let total = 12_000; // 120 s
        for i in 0..total {
            s = step(&s, &cmd, 0.01, &p, &tank);
            if i >= total / 2 {
                late_points.push(s.pose.position);
            }
        }
        let n = late_points.len() as f64;
        let cx = late_points.iter().map(|p| p.x).sum::<f64>() / n;
        let cy = late_points.iter().map(|p| p.y).sum::<f64>() / n;
        let radius = late_points
            .iter()
            .map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt())
            .sum::<f64>()
            / n;
        assert_relative_eq!(radius, predicted_radius, max_relative = 0.05);
    }

    #[test]
    fn terminal_speed_is_one_body_length_per_second() {
        let p = DynamicsParams::default();
        assert_relative_eq!(terminal_speed(&p), 130.0, max_relative = 1e-12);
    }

    #[test]
    fn terminal_speed_scaling_laws() {
        let base = DynamicsParams::default();
        let mut gain_doubled = base;
        gain_doubled.thrust_gain_caudal *= 2.0;
        assert_relative_eq!(
            terminal_speed(&gain_doubled),
            terminal_speed(&base) * 2.0f64.sqrt(),
            max_relative = 1e-12
        );
        let mut drag_doubled = base;
        drag_doubled.drag_surge *= 2.0;
        assert_relative_eq!(
            terminal_speed(&drag_doubled),
            terminal_speed(&base) / 2.0f64.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn coasting_never_reverses_or_accelerates() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let tank = big_tank();
        for _ in 0..200 {
            let mut p = DynamicsParams::default();
            p.drag_surge = rng.random_range(1e-7..1e-3);
            p.mass = rng.random_range(0.05..1.0);
            let mut s = mid_state();
            s.surge = rng.random_range(0.0..500.0);
            let mut prev = s.surge;
            for _ in 0..500 {
                s = step(&s, &FinCommand::stop(), 0.01, &p, &tank);
                assert!(s.surge >= 0.0, "surge reversed: {}", s.surge);
                assert!(s.surge <= prev + 1e-12, "surge grew while coasting");
                prev = s.surge;
            }
        }
    }

    #[test]
    fn pure_differential_turns_in_place() {
        let p = DynamicsParams::default();
        let tank = big_tank();
        let cmd = FinCommand { pectoral_right_freq: p.f_max, ..FinCommand::stop() };
        let mut s = mid_state();
        let start = s.pose.position;
        let mut turned = 0.0;
        while turned < 2.0 * std::f64::consts::PI {
            let before = s.pose.yaw;
            s = step(&s, &cmd, 0.01, &p, &tank);
            turned += normalize_angle(s.pose.yaw - before).abs();
        }
        // buoyancy lifts the robot while it spins; the body model itself
        // must produce no horizontal motion at all
        let drift = (s.pose.position - start).horizontal_norm();
        assert!(drift < 25.0, "drifted {drift} mm during an in-place turn");
        assert_eq!(drift, 0.0);
    }

    #[test]
    fn step_is_deterministic() {
        let p = DynamicsParams::default();
        let tank = big_tank();
        let mut s = mid_state();
        s.surge = 77.7;
        s.yaw_rate = -0.3;
        let cmd = FinCommand {
            caudal_freq: 2.0,
            pectoral_left_freq: 0.4,
            pectoral_right_freq: 1.1,
            dorsal_on: true,
        };
        let a = step(&s, &cmd, 0.01, &p, &tank);
        let b = step(&s, &cmd, 0.01, &p, &tank);
        assert_eq!(a, b);
    }

    #[test]
    fn inertial_overshoot_outlasts_one_second() {
        let p = DynamicsParams::default();
        let tank = big_tank();
        let mut s = mid_state();
        s.surge = terminal_speed(&p);
        let threshold = 0.05 * terminal_speed(&p);
        let mut t = 0.0;
        while s.surge >= threshold {
            s = step(&s, &FinCommand::stop(), 0.01, &p, &tank);
            t += 0.01;
            assert!(t < 120.0, "coasting never decayed");
        }
        assert!(t > 1.0, "surge decayed too fast: {t} s");
    }

    #[test]
    fn wall_contact_clamps_and_stops() {
        let p = DynamicsParams::default();
        let tank = Tank::Box { x: 2200.0, y: 1400.0, depth: 500.0 };
        let mut s = AgentState::at_rest(
            PoseYaw::new(Vec3::new(1050.0, 0.0, -250.0), 0.0),
            true,
        );
        s.surge = 130.0;
        let cmd = FinCommand { caudal_freq: p.f_max, ..FinCommand::stop() };
        for _ in 0..200 {
            s = step(&s, &cmd, 0.01, &p, &tank);
        }
        assert_eq!(s.pose.position.x, 1100.0);
        assert_eq!(s.surge, 0.0);
    }

    #[test]
    fn surfacing_zeroes_heave() {
        let p = DynamicsParams::default();
        let tank = Tank::Box { x: 2200.0, y: 1400.0, depth: 500.0 };
        let mut s = AgentState::at_rest(PoseYaw::new(Vec3::new(0.0, 0.0, -20.0), 0.0), true);
        for _ in 0..1000 {
            s = step(&s, &FinCommand::stop(), 0.01, &p, &tank);
        }
        assert_eq!(s.pose.position.z, 0.0);
        assert_eq!(s.heave, 0.0);
    }
}
