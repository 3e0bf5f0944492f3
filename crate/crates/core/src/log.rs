//! Per-tick trajectory records and their on-disk CSV form.
//!
//! One row per (tick, agent). Floats carry six significant digits, the
//! newline is `\n`, and absent estimates serialize as empty fields, so a
//! log written twice from the same run is byte-identical.

use crate::control::Zone;
use crate::dynamics::{AgentState, FinCommand};
use crate::geometry::{PoseYaw, Vec3};
use crate::scenario::Role;
use crate::vision::LeaderEstimate;
use thiserror::Error;

/// Columns of `trajectory.csv`, in order.
pub const CSV_HEADER: &str = "t,agent_id,role,x,y,z,yaw_deg,u,w,caudal,pect_l,pect_r,dorsal,\
est_d,est_bearing_deg,est_pitch_deg,est_heading_deg,heading_valid,zone";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("trajectory csv: {0}")]
    Malformed(String),
}

/// What one follower believed about one leader this tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRecord {
    pub distance: f64,
    pub bearing: f64,
    pub pitch: f64,
    /// Heading angle in the follower body frame, rad; meaningful only when
    /// `heading_valid`.
    pub heading_angle: f64,
    pub heading_valid: bool,
}

impl EstimateRecord {
    pub fn from_estimate(est: &LeaderEstimate) -> Self {
        EstimateRecord {
            distance: est.distance,
            bearing: est.bearing,
            pitch: est.pitch,
            heading_angle: est.heading.y.atan2(est.heading.x),
            heading_valid: est.heading_valid,
        }
    }
}

/// One agent's slice of one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord {
    pub state: AgentState,
    pub cmd: FinCommand,
    /// The selected leader's estimate, when any leader was seen.
    pub estimate: Option<EstimateRecord>,
    pub zone: Option<Zone>,
    /// World-frame formation target implied by the current estimate.
    pub target_world: Option<Vec3>,
    /// Which leader the follower is currently following.
    pub selected_leader: Option<usize>,
    /// Estimated distance per visible leader, (agent id, mm), ordered by id.
    pub leader_distances: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub t: f64,
    pub agents: Vec<AgentRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub scenario: String,
    pub roles: Vec<Role>,
    pub ticks: Vec<TickRecord>,
}

impl TrajectoryLog {
    /// Serializes the full log as CSV, header included.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.ticks.len() * self.roles.len() + 128);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for tick in &self.ticks {
            for (id, rec) in tick.agents.iter().enumerate() {
                let p = rec.state.pose.position;
                let cmd = &rec.cmd;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    fmt_sig(tick.t),
                    id,
                    self.roles[id].as_str(),
                    fmt_sig(p.x),
                    fmt_sig(p.y),
                    fmt_sig(p.z),
                    fmt_sig(rec.state.pose.yaw.to_degrees()),
                    fmt_sig(rec.state.surge),
                    fmt_sig(rec.state.heave),
                    fmt_sig(cmd.caudal_freq),
                    fmt_sig(cmd.pectoral_left_freq),
                    fmt_sig(cmd.pectoral_right_freq),
                    if cmd.dorsal_on { 1 } else { 0 },
                ));
                match &rec.estimate {
                    Some(est) => {
                        out.push_str(&format!(
                            ",{},{},{}",
                            fmt_sig(est.distance),
                            fmt_sig(est.bearing.to_degrees()),
                            fmt_sig(est.pitch.to_degrees()),
                        ));
                        if est.heading_valid {
                            out.push_str(&format!(
                                ",{},true",
                                fmt_sig(est.heading_angle.to_degrees())
                            ));
                        } else {
                            out.push_str(",,false");
                        }
                    }
                    None => out.push_str(",,,,,"),
                }
                match &rec.zone {
                    Some(z) => {
                        out.push(',');
                        out.push_str(z.as_str());
                    }
                    None => out.push(','),
                }
                out.push('\n');
            }
        }
        out
    }

    /// Rebuilds a log from its CSV form. Only the fields present in the
    /// CSV are recovered; in-memory-only fields (per-leader distances,
    /// selection, targets) come back empty.
    pub fn from_csv(text: &str) -> Result<TrajectoryLog, LogError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| LogError::Malformed("empty file".into()))?;
        if header != CSV_HEADER {
            return Err(LogError::Malformed("unexpected header".into()));
        }
        let mut roles: Vec<Role> = Vec::new();
        let mut ticks: Vec<TickRecord> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 19 {
                return Err(LogError::Malformed(format!(
                    "line {}: expected 19 fields, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let parse = |s: &str, what: &str| -> Result<f64, LogError> {
                s.parse::<f64>().map_err(|_| {
                    LogError::Malformed(format!("line {}: bad {what}: {s:?}", lineno + 2))
                })
            };
            let t = parse(fields[0], "t")?;
            let agent_id: usize = fields[1]
                .parse()
                .map_err(|_| LogError::Malformed(format!("line {}: bad agent id", lineno + 2)))?;
            let role = match fields[2] {
                "leader" => Role::Leader,
                "follower" => Role::Follower,
                other => {
                    return Err(LogError::Malformed(format!(
                        "line {}: unknown role {other:?}",
                        lineno + 2
                    )))
                }
            };
            let pose = PoseYaw::new(
                Vec3::new(parse(fields[3], "x")?, parse(fields[4], "y")?, parse(fields[5], "z")?),
                parse(fields[6], "yaw")?.to_radians(),
            );
            let mut state = AgentState::at_rest(pose, matches!(role, Role::Leader));
            state.surge = parse(fields[7], "u")?;
            state.heave = parse(fields[8], "w")?;
            let cmd = FinCommand {
                caudal_freq: parse(fields[9], "caudal")?,
                pectoral_left_freq: parse(fields[10], "pect_l")?,
                pectoral_right_freq: parse(fields[11], "pect_r")?,
                dorsal_on: fields[12] == "1",
            };
            let estimate = if fields[13].is_empty() {
                None
            } else {
                let heading_valid = fields[17] == "true";
                Some(EstimateRecord {
                    distance: parse(fields[13], "est_d")?,
                    bearing: parse(fields[14], "est_bearing")?.to_radians(),
                    pitch: parse(fields[15], "est_pitch")?.to_radians(),
                    heading_angle: if heading_valid {
                        parse(fields[16], "est_heading")?.to_radians()
                    } else {
                        0.0
                    },
                    heading_valid,
                })
            };
            let zone = match fields[18] {
                "" => None,
                "approach" => Some(Zone::Approach),
                "follow" => Some(Zone::Follow),
                "dead" => Some(Zone::Dead),
                other => {
                    return Err(LogError::Malformed(format!(
                        "line {}: unknown zone {other:?}",
                        lineno + 2
                    )))
                }
            };
            let record = AgentRecord {
                state,
                cmd,
                estimate,
                zone,
                target_world: None,
                selected_leader: None,
                leader_distances: Vec::new(),
            };

            if agent_id == 0 {
                ticks.push(TickRecord { t, agents: Vec::new() });
            }
            let tick = ticks
                .last_mut()
                .ok_or_else(|| LogError::Malformed("rows do not start at agent 0".into()))?;
            if tick.agents.len() != agent_id {
                return Err(LogError::Malformed(format!(
                    "line {}: agent rows out of order",
                    lineno + 2
                )));
            }
            tick.agents.push(record);
            if agent_id >= roles.len() {
                roles.push(role);
            }
        }
        if ticks.is_empty() {
            return Err(LogError::Malformed("no data rows".into()));
        }
        Ok(TrajectoryLog { scenario: String::new(), roles, ticks })
    }
}

/// Formats with six significant digits in plain decimal notation.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let mut s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    // -0 after rounding collapses to 0
    if s == "-0" {
        s = "0".to_string();
    }
    s
}
