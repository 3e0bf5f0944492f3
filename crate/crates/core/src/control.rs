//! Follower controllers (zonal and tanh speed laws), depth band control,
//! leader selection, the lost-leader policy, and open-loop leader programs.
//!
//! Controllers are pure: command functions map (estimate, params, memory,
//! time) to (fin command, new memory) with no other state. The only
//! information a follower ever receives about the world is its own parsed
//! leader estimate.

use crate::dynamics::{AgentState, FinCommand};
use crate::geometry::{rotate_z, Vec3};
use crate::vision::LeaderEstimate;
use thiserror::Error;

/// Steering deadband: bearing errors smaller than this produce no
/// pectoral differential.
const STEER_DEADBAND: f64 = 2.0 * std::f64::consts::PI / 180.0;

/// How long a follower replays its last command after losing sight of the
/// leader before switching to a search turn, seconds.
const LOST_HOLD_SECONDS: f64 = 2.0;

/// How long a remembered leader heading stays usable for placing the
/// formation target after the third LED drops out, seconds. Long enough to
/// carry the follower across the leader's rear wedge where the nose LED is
/// hidden, short enough that a follower parked in that wedge degrades to
/// plain pursuit.
const HEADING_HOLD_SECONDS: f64 = 20.0;

/// A heading estimate that disagrees with a fresher-than-this previous one
/// by more than [`HEADING_GATE_COS`] is rejected as a towards/away ghost:
/// the leader cannot physically turn that fast.
const HEADING_GATE_SECONDS: f64 = 1.0;
const HEADING_GATE_COS: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("leader heading unavailable: cannot place the formation target")]
    HeadingUnavailable,
    #[error("no leader estimates to select from")]
    NoLeaders,
}

/// Distance bands around the leader.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zone {
    Approach,
    Follow,
    Dead,
}

impl Zone {
    pub fn as_str(&self) -> &'static str {
        match self {
            Zone::Approach => "approach",
            Zone::Follow => "follow",
            Zone::Dead => "dead",
        }
    }
}

/// Parameters of the zonal follower. Angles are radians internally;
/// scenario files take degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneParams {
    /// Outer edge of the follow zone, mm.
    pub approach_threshold: f64,
    /// Inner edge of the follow zone, mm.
    pub dead_radius: f64,
    /// Desired lateral distance l from the leader, mm.
    pub follow_distance: f64,
    /// Desired angle alpha off the leader's heading, rad; positive places
    /// the target on the leader's left.
    pub follow_angle: f64,
    /// Observed-pitch band (lo, hi) held by the dorsal fin, rad, sorted
    /// ascending.
    pub pitch_band: (f64, f64),
    /// Follow-zone speed law endpoints as fractions of f_max.
    pub v_min_frac: f64,
    pub v_max_frac: f64,
}

impl Default for ZoneParams {
    fn default() -> Self {
        ZoneParams {
            approach_threshold: 500.0,
            dead_radius: 120.0,
            follow_distance: 200.0,
            follow_angle: 90.0f64.to_radians(),
            pitch_band: (-1.0f64.to_radians(), 1.0f64.to_radians()),
            v_min_frac: 0.2,
            v_max_frac: 1.0,
        }
    }
}

/// Parameters of the tanh speed-law variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanhParams {
    /// Distance scale of the tanh ramp, mm.
    pub length_scale: f64,
    /// Caudal frequency ceiling, Hz.
    pub f_cap: f64,
}

impl Default for TanhParams {
    fn default() -> Self {
        TanhParams { length_scale: 300.0, f_cap: 3.0 }
    }
}

/// Per-follower controller state carried between perception cycles.
///
/// Remembered directions are body-frame; the scenario engine rotates them
/// by the own-yaw change each tick (the gyro-integration a real robot
/// would do) so they stay meaningful while the follower turns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerMemory {
    pub last_estimate: Option<LeaderEstimate>,
    /// Time of the last successful estimate, s.
    pub last_seen_time: f64,
    pub last_command: FinCommand,
    pub dorsal_state: bool,
    /// Most recent heading-valid estimate's heading, body frame.
    pub last_valid_heading: Option<(f64, f64)>,
    pub last_valid_heading_time: f64,
}

impl Default for FollowerMemory {
    fn default() -> Self {
        FollowerMemory {
            last_estimate: None,
            last_seen_time: f64::NEG_INFINITY,
            last_command: FinCommand::stop(),
            dorsal_state: false,
            last_valid_heading: None,
            last_valid_heading_time: f64::NEG_INFINITY,
        }
    }
}

impl FollowerMemory {
    /// Rotates every remembered body-frame direction by `-dyaw` to account
    /// for the follower's own yaw change since the memory was recorded.
    pub fn rotate_frame(&mut self, dyaw: f64) {
        let (s, c) = (-dyaw).sin_cos();
        if let Some(est) = &mut self.last_estimate {
            let (hx, hy) = (est.heading.x, est.heading.y);
            est.heading = Vec3::new(hx * c - hy * s, hx * s + hy * c, 0.0);
            est.bearing = crate::geometry::normalize_angle(est.bearing - dyaw);
            let lp = est.leader_position;
            est.leader_position = Vec3::new(lp.x * c - lp.y * s, lp.x * s + lp.y * c, lp.z);
        }
        if let Some((hx, hy)) = self.last_valid_heading {
            self.last_valid_heading = Some((hx * c - hy * s, hx * s + hy * c));
        }
    }
}

/// Open-loop leader motion program. Depth is the one closed loop the
/// leader runs: a dorsal bang-bang about `depth_setpoint` (mm below the
/// surface) with +/-10 mm hysteresis.
#[derive(Debug, Clone, PartialEq)]
pub enum LeaderProgram {
    Straight {
        caudal_freq: f64,
        depth_setpoint: f64,
    },
    Circle {
        caudal_freq: f64,
        /// Pectoral differential, Hz; positive turns counterclockwise.
        pectoral_bias: f64,
        depth_setpoint: f64,
    },
    Piecewise {
        segments: Vec<ProgramSegment>,
        depth_setpoint: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgramSegment {
    pub duration: f64,
    pub caudal_freq: f64,
    pub pectoral_bias: f64,
}

/// Formation target in the follower's body frame:
/// goal = leader position + l * R_z(alpha) * h.
///
/// The target inherits the leader's z; depth is handled separately by the
/// dorsal controller.
pub fn target_pose(estimate: &LeaderEstimate, l: f64, alpha: f64) -> Result<Vec3, ControlError> {
    if !estimate.heading_valid {
        return Err(ControlError::HeadingUnavailable);
    }
    let offset = rotate_z(estimate.heading, alpha).scale(l);
    Ok(estimate.leader_position + offset)
}

/// Distance band for a leader at estimated distance `d`. The follow zone
/// owns both boundaries.
pub fn classify_zone(d: f64, zp: &ZoneParams) -> Zone {
    debug_assert!(d >= 0.0);
    if d > zp.approach_threshold {
        Zone::Approach
    } else if d < zp.dead_radius {
        Zone::Dead
    } else {
        Zone::Follow
    }
}

/// Follow-zone speed law: linear in the leader distance from
/// `v_min_frac * f_max` at the dead radius up to `v_max_frac * f_max` at
/// the approach threshold.
pub fn zonal_speed(d: f64, zp: &ZoneParams, f_max: f64) -> f64 {
    let span = zp.approach_threshold - zp.dead_radius;
    let x = ((d - zp.dead_radius) / span).clamp(0.0, 1.0);
    (zp.v_min_frac + (zp.v_max_frac - zp.v_min_frac) * x) * f_max
}

/// Smooth speed law: f_cap * tanh(distance-to-target / length scale).
pub fn tanh_speed(dist_to_target: f64, tp: &TanhParams) -> f64 {
    tp.f_cap * (dist_to_target / tp.length_scale).tanh()
}

/// The leader heading the follower should act on: the current estimate's
/// heading when it is valid and plausible against recent memory, the
/// remembered heading while the third LED has only briefly dropped out or
/// the fresh estimate looks like a towards/away ghost, and nothing once
/// the memory is stale.
fn effective_heading(est: &LeaderEstimate, mem: &FollowerMemory, t: f64) -> Option<(f64, f64)> {
    let age = t - mem.last_valid_heading_time;
    if est.heading_valid {
        if let Some((ox, oy)) = mem.last_valid_heading {
            let implausible =
                age <= HEADING_GATE_SECONDS && est.heading.x * ox + est.heading.y * oy < HEADING_GATE_COS;
            if implausible {
                return Some((ox, oy));
            }
        }
        return Some((est.heading.x, est.heading.y));
    }
    if age <= HEADING_HOLD_SECONDS {
        return mem.last_valid_heading;
    }
    None
}

/// The body-frame point the follower drives toward: the leader itself in
/// the approach zone; the formation target in the follow zone, built from
/// the effective heading, degrading to plain pursuit of the leader
/// position once no usable heading remains.
pub fn follow_target(
    est: &LeaderEstimate,
    zp: &ZoneParams,
    mem: &FollowerMemory,
    t: f64,
) -> Vec3 {
    if let Zone::Approach = classify_zone(est.distance, zp) {
        return est.leader_position;
    }
    match effective_heading(est, mem, t) {
        Some((hx, hy)) => {
            let offset =
                rotate_z(Vec3::new(hx, hy, 0.0), zp.follow_angle).scale(zp.follow_distance);
            est.leader_position + offset
        }
        None => est.leader_position,
    }
}

/// Zonal follower: pursue the leader itself at full speed in the approach
/// zone, hold the formation target with the linear speed law in the follow
/// zone, cut thrust in the dead zone.
pub fn follower_command_zonal(
    estimate: Option<&LeaderEstimate>,
    zp: &ZoneParams,
    mem: &FollowerMemory,
    t: f64,
    f_max: f64,
) -> (FinCommand, FollowerMemory) {
    let Some(est) = estimate else {
        let cmd = lost_leader_policy(mem, t, zp, f_max);
        return (cmd, remember_lost(mem, cmd));
    };
    let zone = classify_zone(est.distance, zp);
    let dorsal = depth_command(est.pitch, zp.pitch_band, mem.dorsal_state);
    let cmd = match zone {
        Zone::Dead => FinCommand { dorsal_on: dorsal, ..FinCommand::stop() },
        Zone::Approach => steer_toward(est.leader_position, f_max, dorsal, f_max),
        Zone::Follow => {
            let target = follow_target(est, zp, mem, t);
            steer_toward(target, zonal_speed(est.distance, zp, f_max), dorsal, f_max)
        }
    };
    (cmd, remember_seen(est, t, cmd, mem))
}

/// Tanh follower: same target selection and steering as the zonal
/// controller, but the caudal frequency ramps smoothly with the distance
/// to the target. The dead-zone cutoff is retained.
pub fn follower_command_tanh(
    estimate: Option<&LeaderEstimate>,
    zp: &ZoneParams,
    tp: &TanhParams,
    mem: &FollowerMemory,
    t: f64,
    f_max: f64,
) -> (FinCommand, FollowerMemory) {
    let Some(est) = estimate else {
        let cmd = lost_leader_policy(mem, t, zp, f_max);
        return (cmd, remember_lost(mem, cmd));
    };
    let zone = classify_zone(est.distance, zp);
    let dorsal = depth_command(est.pitch, zp.pitch_band, mem.dorsal_state);
    let cmd = match zone {
        Zone::Dead => FinCommand { dorsal_on: dorsal, ..FinCommand::stop() },
        _ => {
            let target = follow_target(est, zp, mem, t);
            steer_toward(target, tanh_speed(target.norm(), tp), dorsal, f_max)
        }
    };
    (cmd, remember_seen(est, t, cmd, mem))
}

/// Proportional bearing steering toward a body-frame target with gain
/// f_max / (pi/2) per radian and a 2 degree deadband, on top of the given
/// caudal frequency.
fn steer_toward(target: Vec3, caudal: f64, dorsal: bool, f_max: f64) -> FinCommand {
    let bearing_err = if target.x == 0.0 && target.y == 0.0 {
        0.0
    } else {
        target.y.atan2(target.x)
    };
    let (left, right) = if bearing_err.abs() < STEER_DEADBAND {
        (0.0, 0.0)
    } else {
        let gain = f_max / std::f64::consts::FRAC_PI_2;
        let diff = (gain * bearing_err).clamp(-f_max, f_max);
        if diff >= 0.0 {
            (0.0, diff)
        } else {
            (-diff, 0.0)
        }
    };
    FinCommand {
        caudal_freq: caudal.clamp(0.0, f_max),
        pectoral_left_freq: left,
        pectoral_right_freq: right,
        dorsal_on: dorsal,
    }
}

fn remember_seen(
    est: &LeaderEstimate,
    t: f64,
    cmd: FinCommand,
    mem: &FollowerMemory,
) -> FollowerMemory {
    // adopt the fresh heading unless the gate rejected it; a rejection
    // must not refresh the timestamp, or a persistent ghost could hold the
    // gate closed indefinitely
    let accepted = est.heading_valid
        && match mem.last_valid_heading {
            Some((ox, oy)) => {
                !(t - mem.last_valid_heading_time <= HEADING_GATE_SECONDS
                    && est.heading.x * ox + est.heading.y * oy < HEADING_GATE_COS)
            }
            None => true,
        };
    let (heading, heading_time) = if accepted {
        (Some((est.heading.x, est.heading.y)), t)
    } else {
        (mem.last_valid_heading, mem.last_valid_heading_time)
    };
    FollowerMemory {
        last_estimate: Some(*est),
        last_seen_time: t,
        last_command: cmd,
        dorsal_state: cmd.dorsal_on,
        last_valid_heading: heading,
        last_valid_heading_time: heading_time,
    }
}

fn remember_lost(mem: &FollowerMemory, cmd: FinCommand) -> FollowerMemory {
    FollowerMemory { last_command: cmd, dorsal_state: cmd.dorsal_on, ..*mem }
}

/// Dorsal bang-bang with hysteresis on the observed leader pitch: above
/// the band means the leader is lower, so dive; below means float up;
/// inside the band (boundaries included) keep the previous state.
pub fn depth_command(pitch_obs: f64, band: (f64, f64), prev: bool) -> bool {
    let (lo, hi) = band;
    debug_assert!(lo <= hi);
    if pitch_obs > hi {
        true
    } else if pitch_obs < lo {
        false
    } else {
        prev
    }
}

/// Index of the nearest leader estimate; ties break toward the lowest
/// index so the choice is stable.
pub fn select_leader(estimates: &[LeaderEstimate]) -> Result<usize, ControlError> {
    if estimates.is_empty() {
        return Err(ControlError::NoLeaders);
    }
    let mut best = 0;
    for (i, est) in estimates.iter().enumerate().skip(1) {
        if est.distance < estimates[best].distance {
            best = i;
        }
    }
    Ok(best)
}

/// Behavior while the leader is out of sight: briefly replay the last
/// command, then creep at minimum speed while turning toward the last
/// known bearing; a follower that has never seen anything rotates in
/// place to search.
pub fn lost_leader_policy(mem: &FollowerMemory, t: f64, zp: &ZoneParams, f_max: f64) -> FinCommand {
    let Some(last) = &mem.last_estimate else {
        return FinCommand {
            caudal_freq: 0.0,
            pectoral_left_freq: 0.0,
            pectoral_right_freq: zp.v_min_frac * f_max,
            dorsal_on: mem.dorsal_state,
        };
    };
    if t - mem.last_seen_time <= LOST_HOLD_SECONDS {
        return mem.last_command;
    }
    let gain = f_max / std::f64::consts::FRAC_PI_2;
    let diff = (gain * last.bearing).clamp(-f_max, f_max);
    let (left, right) = if diff >= 0.0 { (0.0, diff) } else { (-diff, 0.0) };
    FinCommand {
        caudal_freq: zp.v_min_frac * f_max,
        pectoral_left_freq: left,
        pectoral_right_freq: right,
        dorsal_on: mem.dorsal_state,
    }
}

/// Executes the leader's open-loop program at time `t`. The dorsal flag is
/// the only feedback: a bang-bang about the depth setpoint with +/-10 mm
/// hysteresis, keyed off the previously held dorsal state.
pub fn leader_command(program: &LeaderProgram, state: &AgentState, t: f64) -> FinCommand {
    let (caudal, bias, setpoint) = match program {
        LeaderProgram::Straight { caudal_freq, depth_setpoint } => (*caudal_freq, 0.0, *depth_setpoint),
        LeaderProgram::Circle { caudal_freq, pectoral_bias, depth_setpoint } => {
            (*caudal_freq, *pectoral_bias, *depth_setpoint)
        }
        LeaderProgram::Piecewise { segments, depth_setpoint } => {
            let mut elapsed = 0.0;
            let mut current = segments.last().copied().unwrap_or(ProgramSegment {
                duration: 0.0,
                caudal_freq: 0.0,
                pectoral_bias: 0.0,
            });
            for seg in segments {
                // half-open [start, start + duration)
                if t < elapsed + seg.duration {
                    current = *seg;
                    break;
                }
                elapsed += seg.duration;
            }
            (current.caudal_freq, current.pectoral_bias, *depth_setpoint)
        }
    };
    let z_target = -setpoint;
    let z = state.pose.position.z;
    let dorsal = if z > z_target + 10.0 {
        true // too shallow: dive
    } else if z < z_target - 10.0 {
        false // too deep: float up
    } else {
        state.fins.dorsal_on
    };
    let (left, right) = if bias >= 0.0 { (0.0, bias) } else { (-bias, 0.0) };
    FinCommand {
        caudal_freq: caudal,
        pectoral_left_freq: left,
        pectoral_right_freq: right,
        dorsal_on: dorsal,
    }
}
