//! Per-follower performance metrics and batch aggregates.
//!
//! Distances here are computed from ground truth: the target point is
//! rebuilt from the true leader pose (lateral offset rotated off the true
//! heading, depth offset from the middle of the pitch band), so the metric
//! is independent of the follower's own noisy estimate.

use crate::geometry::{rotate_z, Vec3};
use crate::log::TrajectoryLog;
use crate::scenario::{Role, ScenarioConfig};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

/// Settling band around the target, mm.
pub const SETTLING_BAND: f64 = 50.0;
/// How long the follower must stay inside the band to count as settled, s.
pub const SETTLING_SUSTAIN: f64 = 10.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("metrics: {0}")]
    Mismatch(String),
}

/// Metrics for one follower over one run.
#[derive(Debug, Clone, Serialize)]
pub struct FollowerMetrics {
    /// Tick times, seconds.
    pub t: Vec<f64>,
    /// Ground-truth distance to the (nearest) leader per tick, mm.
    pub distance_to_leader: Vec<f64>,
    /// Ground-truth distance to the formation target per tick, mm.
    pub distance_to_target: Vec<f64>,
    /// First time the follower stays within the settling band for the
    /// sustain window; absent when that never happens.
    pub settling_time: Option<f64>,
    /// RMS distance-to-target over the steady window, mm.
    pub steady_rms_error: f64,
    /// Start of the window the steady statistics use: the settling time,
    /// or the final third of the run as a fallback.
    pub steady_window_start: f64,
    /// Largest depth error against the target depth over the steady
    /// window, in body lengths.
    pub depth_deviation_max_bl: f64,
    /// Fraction of ticks with any leader estimate.
    pub visibility_fraction: f64,
    /// Fraction of ticks with a heading-valid estimate.
    pub heading_valid_fraction: f64,
    /// Mean/median ground-truth distance to the leader over the steady
    /// window, mm.
    pub mean_distance_to_leader: f64,
    pub median_distance_to_leader: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    /// Keyed by agent id (followers only).
    pub followers: BTreeMap<usize, FollowerMetrics>,
}

/// Computes metrics for every follower in the log.
pub fn compute_metrics(log: &TrajectoryLog, cfg: &ScenarioConfig) -> Result<Metrics, MetricsError> {
    if log.ticks.is_empty() {
        return Err(MetricsError::Mismatch("empty log".into()));
    }
    if log.roles.len() != cfg.agents.len() {
        return Err(MetricsError::Mismatch(format!(
            "log has {} agents, scenario has {}",
            log.roles.len(),
            cfg.agents.len()
        )));
    }
    let leader_ids: Vec<usize> = log
        .roles
        .iter()
        .enumerate()
        .filter(|(_, r)| matches!(r, Role::Leader))
        .map(|(i, _)| i)
        .collect();
    let duration = log.ticks.last().unwrap().t;
    let body_length = cfg.dynamics.body_length;

    let mut followers = BTreeMap::new();
    for (id, role) in log.roles.iter().enumerate() {
        if !matches!(role, Role::Follower) {
            continue;
        }
        let controller = cfg.agents[id].controller.as_ref().ok_or_else(|| {
            MetricsError::Mismatch(format!("agent {id} is a follower without controller config"))
        })?;
        let zp = controller.zone_params();
        let l = zp.follow_distance;
        let alpha = zp.follow_angle;
        let pitch_mid = 0.5 * (zp.pitch_band.0 + zp.pitch_band.1);

        let mut t = Vec::with_capacity(log.ticks.len());
        let mut d_leader = Vec::with_capacity(log.ticks.len());
        let mut d_target = Vec::with_capacity(log.ticks.len());
        let mut depth_err_bl = Vec::with_capacity(log.ticks.len());
        let mut visible = 0usize;
        let mut heading_valid = 0usize;

        for tick in &log.ticks {
            let me = &tick.agents[id];
            let my_pos = me.state.pose.position;

            // nearest leader by ground truth
            let (leader_rec, dist) = leader_ids
                .iter()
                .map(|&lid| {
                    let rec = &tick.agents[lid];
                    (rec, (rec.state.pose.position - my_pos).norm())
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or_else(|| MetricsError::Mismatch("no leaders in log".into()))?;
            let leader_pose = &leader_rec.state.pose;

            // formation target from truth: lateral offset off the true
            // heading, depth from the pitch-band midpoint
            let target_xy = leader_pose.position
                + rotate_z(leader_pose.heading(), alpha).scale(l);
            let target = Vec3::new(
                target_xy.x,
                target_xy.y,
                leader_pose.position.z + l * pitch_mid.tan(),
            );

            t.push(tick.t);
            d_leader.push(dist);
            d_target.push((target - my_pos).norm());
            depth_err_bl.push((my_pos.z - target.z).abs() / body_length);
            if me.estimate.is_some() {
                visible += 1;
            }
            if me.estimate.as_ref().is_some_and(|e| e.heading_valid) {
                heading_valid += 1;
            }
        }

        let settling_time = settling_time(&t, &d_target, duration);
        let steady_window_start = settling_time.unwrap_or(duration * 2.0 / 3.0);
        let window: Vec<usize> = t
            .iter()
            .enumerate()
            .filter(|(_, &ti)| ti >= steady_window_start)
            .map(|(i, _)| i)
            .collect();
        let steady_rms_error = rms(window.iter().map(|&i| d_target[i]));
        let depth_deviation_max_bl = window
            .iter()
            .map(|&i| depth_err_bl[i])
            .fold(0.0f64, f64::max);
        let window_leader: Vec<f64> = window.iter().map(|&i| d_leader[i]).collect();
        let mean_distance_to_leader = mean(&window_leader);
        let median_distance_to_leader = median(&window_leader);
        let n_ticks = log.ticks.len() as f64;

        followers.insert(
            id,
            FollowerMetrics {
                t,
                distance_to_leader: d_leader,
                distance_to_target: d_target,
                settling_time,
                steady_rms_error,
                steady_window_start,
                depth_deviation_max_bl,
                visibility_fraction: visible as f64 / n_ticks,
                heading_valid_fraction: heading_valid as f64 / n_ticks,
                mean_distance_to_leader,
                median_distance_to_leader,
            },
        );
    }
    Ok(Metrics { followers })
}

/// First tick from which the series stays within the settling band for the
/// full sustain window (the window must fit inside the run).
fn settling_time(t: &[f64], d_target: &[f64], duration: f64) -> Option<f64> {
    let n = t.len();
    let mut i = 0;
    while i < n {
        if d_target[i] <= SETTLING_BAND {
            if t[i] + SETTLING_SUSTAIN > duration + 1e-9 {
                return None;
            }
            let mut j = i;
            let mut ok = true;
            while j < n && t[j] <= t[i] + SETTLING_SUSTAIN + 1e-9 {
                if d_target[j] > SETTLING_BAND {
                    ok = false;
                    break;
                }
                j += 1;
            }
            if ok {
                return Some(t[i]);
            }
            i = j;
        } else {
            i += 1;
        }
    }
    None
}

impl Metrics {
    /// Serializes the metrics document: a JSON object keyed by agent id,
    /// floats rounded to six significant digits, fixed field order.
    pub fn to_json(&self) -> String {
        let doc: BTreeMap<String, serde_json::Value> = self
            .followers
            .iter()
            .map(|(id, m)| (id.to_string(), follower_json(m)))
            .collect();
        let mut out = serde_json::to_string_pretty(&doc).expect("metrics serialize");
        out.push('\n');
        out
    }
}

fn follower_json(m: &FollowerMetrics) -> serde_json::Value {
    serde_json::json!({
        "settling_time": m.settling_time.map(round_sig),
        "steady_rms_error": round_sig(m.steady_rms_error),
        "steady_window_start": round_sig(m.steady_window_start),
        "depth_deviation_max_bl": round_sig(m.depth_deviation_max_bl),
        "visibility_fraction": round_sig(m.visibility_fraction),
        "heading_valid_fraction": round_sig(m.heading_valid_fraction),
        "mean_distance_to_leader": round_sig(m.mean_distance_to_leader),
        "median_distance_to_leader": round_sig(m.median_distance_to_leader),
        "series": {
            "t": m.t.iter().map(|&v| round_sig(v)).collect::<Vec<_>>(),
            "distance_to_leader": m.distance_to_leader.iter().map(|&v| round_sig(v)).collect::<Vec<_>>(),
            "distance_to_target": m.distance_to_target.iter().map(|&v| round_sig(v)).collect::<Vec<_>>(),
        },
    })
}

/// Rounds to six significant digits so serialized JSON is stable.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(5 - magnitude);
    (x * factor).round() / factor
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn percentile(xs: &[f64], p: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        v[lo]
    } else {
        v[lo] + (rank - lo as f64) * (v[hi] - v[lo])
    }
}

fn rms(xs: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for x in xs {
        sum += x * x;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Distribution summary of one scalar across a batch of seeds.
#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
}

impl Aggregate {
    pub fn over(values: &[f64]) -> Aggregate {
        Aggregate {
            n: values.len(),
            mean: round_sig(mean(values)),
            median: round_sig(median(values)),
            p10: round_sig(percentile(values, 10.0)),
            p90: round_sig(percentile(values, 90.0)),
        }
    }
}

/// Per-follower aggregates across one batch.
#[derive(Debug, Clone, Serialize)]
pub struct AgentSummary {
    /// How many runs settled, out of `runs`.
    pub settled: usize,
    pub runs: usize,
    /// Over runs that settled.
    pub settling_time: Option<Aggregate>,
    pub steady_rms_error: Aggregate,
    pub mean_distance_to_leader: Aggregate,
    pub median_distance_to_leader: Aggregate,
    pub depth_deviation_max_bl: Aggregate,
    pub visibility_fraction: Aggregate,
    pub heading_valid_fraction: Aggregate,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchSummary {
    pub scenario: String,
    pub variant: String,
    pub seeds: Vec<u64>,
    /// Keyed by agent id (followers only).
    pub agents: BTreeMap<String, AgentSummary>,
}

/// Aggregates the per-seed metrics of one batch. `runs` pairs each seed
/// with its metrics; every run must come from the same scenario.
pub fn summarize_batch(
    scenario: &str,
    variant: &str,
    runs: &[(u64, Metrics)],
) -> BatchSummary {
    let mut agents = BTreeMap::new();
    let follower_ids: Vec<usize> = runs
        .first()
        .map(|(_, m)| m.followers.keys().copied().collect())
        .unwrap_or_default();
    for id in follower_ids {
        let per_seed: Vec<&FollowerMetrics> =
            runs.iter().filter_map(|(_, m)| m.followers.get(&id)).collect();
        let settled: Vec<f64> = per_seed.iter().filter_map(|m| m.settling_time).collect();
        let collect = |f: fn(&FollowerMetrics) -> f64| -> Vec<f64> {
            per_seed.iter().map(|m| f(m)).collect()
        };
        agents.insert(
            id.to_string(),
            AgentSummary {
                settled: settled.len(),
                runs: per_seed.len(),
                settling_time: if settled.is_empty() {
                    None
                } else {
                    Some(Aggregate::over(&settled))
                },
                steady_rms_error: Aggregate::over(&collect(|m| m.steady_rms_error)),
                mean_distance_to_leader: Aggregate::over(&collect(|m| m.mean_distance_to_leader)),
                median_distance_to_leader: Aggregate::over(&collect(
                    |m| m.median_distance_to_leader,
                )),
                depth_deviation_max_bl: Aggregate::over(&collect(|m| m.depth_deviation_max_bl)),
                visibility_fraction: Aggregate::over(&collect(|m| m.visibility_fraction)),
                heading_valid_fraction: Aggregate::over(&collect(|m| m.heading_valid_fraction)),
            },
        );
    }
    BatchSummary {
        scenario: scenario.to_string(),
        variant: variant.to_string(),
        seeds: runs.iter().map(|(s, _)| *s).collect(),
        agents,
    }
}

impl BatchSummary {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("summary serialize");
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Zone;
    use crate::dynamics::{AgentState, FinCommand};
    use crate::geometry::PoseYaw;
    use crate::log::{AgentRecord, EstimateRecord, TickRecord};
    use crate::scenario::{builtins, load_scenario};

    fn synthetic_log(cfg: &ScenarioConfig, offsets: &[Vec3]) -> TrajectoryLog {
        // leader runs straight at 100 mm/s; follower is placed at the exact
        // target plus a per-tick offset
        let zp = cfg.agents[1].controller.as_ref().unwrap().zone_params();
        let mut ticks = Vec::new();
        for (k, off) in offsets.iter().enumerate() {
            let t = k as f64 * 0.2;
            let leader_pos = Vec3::new(100.0 * t, 0.0, -250.0);
            let leader_pose = PoseYaw::new(leader_pos, 0.0);
            let target = leader_pos
                + rotate_z(leader_pose.heading(), zp.follow_angle).scale(zp.follow_distance);
            let follower_pose = PoseYaw::new(target + *off, 0.0);
            let mk = |pose: PoseYaw, leds: bool| AgentRecord {
                state: AgentState::at_rest(pose, leds),
                cmd: FinCommand::stop(),
                estimate: Some(EstimateRecord {
                    distance: 1.0,
                    bearing: 0.0,
                    pitch: 0.0,
                    heading_angle: 0.0,
                    heading_valid: true,
                }),
                zone: Some(Zone::Follow),
                target_world: None,
                selected_leader: Some(0),
                leader_distances: vec![(0, 1.0)],
            };
            let mut leader_rec = mk(leader_pose, true);
            leader_rec.estimate = None;
            leader_rec.zone = None;
            ticks.push(TickRecord { t, agents: vec![leader_rec, mk(follower_pose, false)] });
        }
        TrajectoryLog {
            scenario: cfg.name.clone(),
            roles: vec![Role::Leader, Role::Follower],
            ticks,
        }
    }

    fn smoke_cfg() -> ScenarioConfig {
        load_scenario(builtins::get("smoke_10s").unwrap()).unwrap()
    }

    #[test]
    fn glued_follower_settles_immediately_with_zero_error() {
        let cfg = smoke_cfg();
        let offsets = vec![Vec3::ZERO; 76]; // 15 s
        let log = synthetic_log(&cfg, &offsets);
        let m = compute_metrics(&log, &cfg).unwrap();
        let f = &m.followers[&1];
        assert_eq!(f.settling_time, Some(0.0));
        assert_eq!(f.steady_rms_error, 0.0);
        assert!(f.distance_to_target.iter().all(|&d| d < 1e-9));
    }

    #[test]
    fn follower_never_in_band_never_settles() {
        let cfg = smoke_cfg();
        let offsets = vec![Vec3::new(80.0, 0.0, 0.0); 76];
        let log = synthetic_log(&cfg, &offsets);
        let m = compute_metrics(&log, &cfg).unwrap();
        let f = &m.followers[&1];
        assert_eq!(f.settling_time, None);
        assert!((f.steady_rms_error - 80.0).abs() < 1e-9);
    }

    #[test]
    fn settling_requires_the_full_sustain_window() {
        let cfg = smoke_cfg();
        // inside the band only for 5 s in the middle of a 20 s run
        let mut offsets = vec![Vec3::new(80.0, 0.0, 0.0); 101];
        for off in offsets.iter_mut().take(50).skip(25) {
            *off = Vec3::ZERO;
        }
        let log = synthetic_log(&cfg, &offsets);
        let m = compute_metrics(&log, &cfg).unwrap();
        assert_eq!(m.followers[&1].settling_time, None);

        // inside from 4 s onward: settles at 4 s
        let mut offsets = vec![Vec3::new(80.0, 0.0, 0.0); 101];
        for off in offsets.iter_mut().skip(20) {
            *off = Vec3::ZERO;
        }
        let log = synthetic_log(&cfg, &offsets);
        let m = compute_metrics(&log, &cfg).unwrap();
        assert_eq!(m.followers[&1].settling_time, Some(4.0));
    }

    #[test]
    fn round_sig_is_stable() {
        assert_eq!(round_sig(1234.5678), 1234.57);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(round_sig(-0.001234567), -0.00123457);
    }

    #[test]
    fn aggregate_percentiles() {
        let xs: Vec<f64> = (1..=11).map(|i| i as f64).collect();
        let a = Aggregate::over(&xs);
        assert_eq!(a.n, 11);
        assert_eq!(a.mean, 6.0);
        assert_eq!(a.median, 6.0);
        assert_eq!(a.p10, 2.0);
        assert_eq!(a.p90, 10.0);
    }
}
