//! Declarative experiment descriptions.
//!
//! Scenario files are TOML: lengths in millimeters, angles in degrees,
//! times in seconds. Angles are converted to radians on load and never
//! leave the config layer in degrees. Unknown keys are rejected.

use crate::control::{LeaderProgram, ProgramSegment, TanhParams, ZoneParams};
use crate::dynamics::{DynamicsParams, Tank};
use crate::geometry::Vec3;
use crate::vision::{LedLayout, VisionParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario ({field}): {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), reason: reason.into() }
}

/// Which follower speed law the scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ControllerVariant {
    #[default]
    Zonal,
    Tanh,
}

impl ControllerVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerVariant::Zonal => "zonal",
            ControllerVariant::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Leader,
    Follower,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Leader => "leader",
            Role::Follower => "follower",
        }
    }
}

/// Top-level scenario document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    /// Simulated time, seconds.
    pub duration: f64,
    /// Mixed into the run seed so distinct scenarios decorrelate.
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default)]
    pub controller_variant: ControllerVariant,
    pub tank: Tank,
    #[serde(default)]
    pub vision: VisionConfig,
    #[serde(default)]
    pub dynamics: DynamicsParams,
    #[serde(default)]
    pub led_layout: LedLayoutConfig,
    #[serde(default)]
    pub agents: Vec<AgentConfig>,
}

/// Vision parameters as they appear in scenario files (degrees).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisionConfig {
    pub blind_spot_half_angle_deg: f64,
    pub fov_half_angle_deg: f64,
    pub merge_threshold_deg: f64,
    pub pitch_match_threshold_deg: f64,
    pub noise_sigma_deg: f64,
    pub reflection_rate: f64,
    pub max_range: f64,
    pub occlusion_radius: f64,
}

impl Default for VisionConfig {
    fn default() -> Self {
        VisionConfig {
            blind_spot_half_angle_deg: 2.5,
            fov_half_angle_deg: 180.0,
            merge_threshold_deg: 1.0,
            pitch_match_threshold_deg: 6.0,
            noise_sigma_deg: 0.2,
            reflection_rate: 0.0,
            max_range: 5000.0,
            occlusion_radius: 25.0,
        }
    }
}

impl VisionConfig {
    pub fn to_params(&self) -> VisionParams {
        VisionParams {
            blind_spot_half_angle: self.blind_spot_half_angle_deg.to_radians(),
            fov_half_angle: self.fov_half_angle_deg.to_radians(),
            merge_threshold: self.merge_threshold_deg.to_radians(),
            pitch_match_threshold: self.pitch_match_threshold_deg.to_radians(),
            noise_sigma: self.noise_sigma_deg.to_radians(),
            reflection_rate: self.reflection_rate,
            max_range: self.max_range,
            occlusion_radius: self.occlusion_radius,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedLayoutConfig {
    /// Vertical separation of the posterior pair, mm.
    pub baseline: f64,
    /// Horizontal distance from the pair to the anterior LED, mm.
    pub longitudinal_offset: f64,
}

impl Default for LedLayoutConfig {
    fn default() -> Self {
        LedLayoutConfig { baseline: 50.0, longitudinal_offset: 65.0 }
    }
}

impl LedLayoutConfig {
    pub fn to_layout(&self) -> LedLayout {
        LedLayout::new(self.baseline, self.longitudinal_offset)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub role: Role,
    /// Defaults to true for leaders, false for followers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leds_on: Option<bool>,
    pub init: InitConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<ProgramConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerConfig>,
}

impl AgentConfig {
    pub fn leds_on(&self) -> bool {
        self.leds_on.unwrap_or(matches!(self.role, Role::Leader))
    }
}

/// Initial condition: either a fixed pose or a sampling region with a
/// random heading.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<PoseInit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionInit>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseInit {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw_deg: f64,
}

/// Axis-aligned sampling box; yaw is drawn uniformly over the full circle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionInit {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProgramConfig {
    Straight {
        caudal_freq: f64,
        depth_setpoint: f64,
    },
    Circle {
        caudal_freq: f64,
        pectoral_bias: f64,
        depth_setpoint: f64,
    },
    Piecewise {
        segments: Vec<SegmentConfig>,
        depth_setpoint: f64,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub duration: f64,
    pub caudal_freq: f64,
    #[serde(default)]
    pub pectoral_bias: f64,
}

impl ProgramConfig {
    pub fn to_program(&self) -> LeaderProgram {
        match self {
            ProgramConfig::Straight { caudal_freq, depth_setpoint } => LeaderProgram::Straight {
                caudal_freq: *caudal_freq,
                depth_setpoint: *depth_setpoint,
            },
            ProgramConfig::Circle { caudal_freq, pectoral_bias, depth_setpoint } => {
                LeaderProgram::Circle {
                    caudal_freq: *caudal_freq,
                    pectoral_bias: *pectoral_bias,
                    depth_setpoint: *depth_setpoint,
                }
            }
            ProgramConfig::Piecewise { segments, depth_setpoint } => LeaderProgram::Piecewise {
                segments: segments
                    .iter()
                    .map(|s| ProgramSegment {
                        duration: s.duration,
                        caudal_freq: s.caudal_freq,
                        pectoral_bias: s.pectoral_bias,
                    })
                    .collect(),
                depth_setpoint: *depth_setpoint,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub approach_threshold: f64,
    pub dead_radius: f64,
    pub follow_distance: f64,
    /// Positive places the target on the leader's left.
    pub follow_angle_deg: f64,
    /// Observed-pitch band held by the dorsal fin; normalized ascending.
    pub pitch_band_deg: [f64; 2],
    pub v_min_frac: f64,
    pub v_max_frac: f64,
    pub tanh_length_scale: f64,
    /// Defaults to the dynamics f_max when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tanh_f_cap: Option<f64>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            approach_threshold: 500.0,
            dead_radius: 120.0,
            follow_distance: 200.0,
            follow_angle_deg: 90.0,
            pitch_band_deg: [-1.0, 1.0],
            v_min_frac: 0.2,
            v_max_frac: 1.0,
            tanh_length_scale: 300.0,
            tanh_f_cap: None,
        }
    }
}

impl ControllerConfig {
    pub fn zone_params(&self) -> ZoneParams {
        let (lo, hi) = if self.pitch_band_deg[0] <= self.pitch_band_deg[1] {
            (self.pitch_band_deg[0], self.pitch_band_deg[1])
        } else {
            (self.pitch_band_deg[1], self.pitch_band_deg[0])
        };
        ZoneParams {
            approach_threshold: self.approach_threshold,
            dead_radius: self.dead_radius,
            follow_distance: self.follow_distance,
            follow_angle: self.follow_angle_deg.to_radians(),
            pitch_band: (lo.to_radians(), hi.to_radians()),
            v_min_frac: self.v_min_frac,
            v_max_frac: self.v_max_frac,
        }
    }

    pub fn tanh_params(&self, f_max: f64) -> TanhParams {
        TanhParams {
            length_scale: self.tanh_length_scale,
            f_cap: self.tanh_f_cap.unwrap_or(f_max).min(f_max),
        }
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ScenarioConfig {
    /// Serializes the fully-defaulted config back to TOML (the
    /// `scenario.resolved` echo written next to run outputs).
    pub fn to_resolved_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn leader_count(&self) -> usize {
        self.agents.iter().filter(|a| matches!(a.role, Role::Leader)).count()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.duration > 0.0) {
            return Err(invalid("duration", "must be positive"));
        }
        let leaders = self.leader_count();
        if leaders == 0 {
            return Err(invalid("agents", "at least one leader is required"));
        }
        if !self.agents.iter().any(|a| matches!(a.role, Role::Leader) && a.leds_on()) {
            return Err(invalid("agents", "at least one leader must have its LEDs on"));
        }
        let f_max = self.dynamics.f_max;
        if !(f_max > 0.0) {
            return Err(invalid("dynamics.f_max", "must be positive"));
        }
        self.led_layout
            .to_layout()
            .validate()
            .map_err(|e| invalid("led_layout", e.to_string()))?;
        let v = &self.vision;
        for (name, val) in [
            ("blind_spot_half_angle_deg", v.blind_spot_half_angle_deg),
            ("fov_half_angle_deg", v.fov_half_angle_deg),
            ("merge_threshold_deg", v.merge_threshold_deg),
            ("pitch_match_threshold_deg", v.pitch_match_threshold_deg),
            ("noise_sigma_deg", v.noise_sigma_deg),
            ("reflection_rate", v.reflection_rate),
            ("max_range", v.max_range),
            ("occlusion_radius", v.occlusion_radius),
        ] {
            if val < 0.0 {
                return Err(invalid(&format!("vision.{name}"), "must be nonnegative"));
            }
        }

        for (i, agent) in self.agents.iter().enumerate() {
            let field = |what: &str| format!("agents[{i}].{what}");
            match agent.role {
                Role::Leader => {
                    if agent.program.is_none() {
                        return Err(invalid(&field("program"), "leaders need a program"));
                    }
                    if agent.controller.is_some() {
                        return Err(invalid(&field("controller"), "leaders take no controller"));
                    }
                    if let Some(p) = &agent.program {
                        validate_program(p, f_max, &field("program"))?;
                    }
                }
                Role::Follower => {
                    if agent.controller.is_none() {
                        return Err(invalid(&field("controller"), "followers need a controller"));
                    }
                    if agent.program.is_some() {
                        return Err(invalid(&field("program"), "followers take no program"));
                    }
                    if leaders == 1 && agent.leds_on() {
                        return Err(invalid(
                            &field("leds_on"),
                            "followers keep their LEDs off in single-leader scenarios",
                        ));
                    }
                    let c = agent.controller.as_ref().unwrap();
                    if !(c.dead_radius < c.approach_threshold) {
                        return Err(invalid(
                            &field("controller"),
                            "dead_radius must be below approach_threshold",
                        ));
                    }
                    if !(0.0 <= c.v_min_frac && c.v_min_frac < c.v_max_frac && c.v_max_frac <= 1.0)
                    {
                        return Err(invalid(
                            &field("controller"),
                            "need 0 <= v_min_frac < v_max_frac <= 1",
                        ));
                    }
                    if let Some(cap) = c.tanh_f_cap {
                        if !(cap > 0.0 && cap <= f_max) {
                            return Err(invalid(
                                &field("controller.tanh_f_cap"),
                                "must be in (0, f_max]",
                            ));
                        }
                    }
                    if !(c.tanh_length_scale > 0.0) {
                        return Err(invalid(
                            &field("controller.tanh_length_scale"),
                            "must be positive",
                        ));
                    }
                }
            }
            match (&agent.init.pose, &agent.init.region) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(invalid(
                        &field("init"),
                        "exactly one of `pose` or `region` is required",
                    ));
                }
                (Some(p), None) => {
                    if !self.tank.contains(Vec3::new(p.x, p.y, p.z)) {
                        return Err(invalid(&field("init.pose"), "pose outside the tank"));
                    }
                }
                (None, Some(r)) => {
                    for (axis, [lo, hi]) in [("x", r.x), ("y", r.y), ("z", r.z)] {
                        if !(lo <= hi) {
                            return Err(invalid(
                                &field(&format!("init.region.{axis}")),
                                "bounds must be ordered",
                            ));
                        }
                    }
                    for &cx in &r.x {
                        for &cy in &r.y {
                            for &cz in &r.z {
                                if !self.tank.contains(Vec3::new(cx, cy, cz)) {
                                    return Err(invalid(
                                        &field("init.region"),
                                        "sampling region extends outside the tank",
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn validate_program(p: &ProgramConfig, f_max: f64, field: &str) -> Result<(), ConfigError> {
    let check_freq = |name: &str, f: f64| -> Result<(), ConfigError> {
        if !(0.0..=f_max).contains(&f) {
            Err(invalid(&format!("{field}.{name}"), format!("must be in [0, {f_max}]")))
        } else {
            Ok(())
        }
    };
    match p {
        ProgramConfig::Straight { caudal_freq, .. } => check_freq("caudal_freq", *caudal_freq),
        ProgramConfig::Circle { caudal_freq, pectoral_bias, .. } => {
            check_freq("caudal_freq", *caudal_freq)?;
            if pectoral_bias.abs() > f_max {
                return Err(invalid(
                    &format!("{field}.pectoral_bias"),
                    format!("magnitude must not exceed {f_max}"),
                ));
            }
            Ok(())
        }
        ProgramConfig::Piecewise { segments, .. } => {
            if segments.is_empty() {
                return Err(invalid(&format!("{field}.segments"), "must not be empty"));
            }
            for (j, s) in segments.iter().enumerate() {
                check_freq(&format!("segments[{j}].caudal_freq"), s.caudal_freq)?;
                if s.pectoral_bias.abs() > f_max {
                    return Err(invalid(
                        &format!("{field}.segments[{j}].pectoral_bias"),
                        format!("magnitude must not exceed {f_max}"),
                    ));
                }
                if !(s.duration > 0.0) {
                    return Err(invalid(
                        &format!("{field}.segments[{j}].duration"),
                        "must be positive",
                    ));
                }
            }
            Ok(())
        }
    }
}

pub mod builtins;
