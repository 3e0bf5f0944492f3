//! The simulation loop: seeded initial conditions, a synchronous 5 Hz
//! perception/command cycle, and 20 physics substeps of 10 ms per tick.
//!
//! Each tick every follower perceives the same frozen world snapshot, runs
//! observe -> parse -> select -> control to produce a fin command, leaders
//! run their open-loop programs, and then all agents advance under their
//! held commands. A run is a pure function of (config, seed): per-agent
//! randomness comes from counter-split ChaCha streams, so adding an agent
//! never perturbs the draws of the others.

use crate::control::{
    classify_zone, follow_target, follower_command_tanh, follower_command_zonal, leader_command,
    select_leader, FollowerMemory, LeaderProgram, TanhParams, ZoneParams,
};
use crate::dynamics::{step, AgentState};
use crate::geometry::{rotate_z, PoseYaw, Vec3};
use crate::log::{AgentRecord, EstimateRecord, TickRecord, TrajectoryLog};
use crate::scenario::{ControllerVariant, Role, ScenarioConfig};
use crate::vision::{observe, parse_blobs_with_history, BlobObservation, LedLayout, VisionParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Control (perception) period, seconds.
pub const CONTROL_PERIOD: f64 = 0.2;
/// Physics integration step, seconds.
pub const PHYSICS_DT: f64 = 0.01;
/// Physics substeps per control tick; the control period is an exact
/// multiple of the physics step.
pub const SUBSTEPS: u32 = 20;

/// Draws initial agent states. Deterministic in (config, seed): agent `i`
/// owns ChaCha stream `2 i`, so the draw for one agent is independent of
/// every other agent's presence.
pub fn sample_initial_conditions(cfg: &ScenarioConfig, seed: u64) -> Vec<AgentState> {
    cfg.agents
        .iter()
        .enumerate()
        .map(|(i, agent)| {
            let pose = match (&agent.init.pose, &agent.init.region) {
                (Some(p), None) => PoseYaw::new(Vec3::new(p.x, p.y, p.z), p.yaw_deg.to_radians()),
                (None, Some(r)) => {
                    let mut rng = agent_stream(cfg.seed_base, seed, i, StreamKind::Init);
                    let draw = |rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]| {
                        if lo == hi {
                            lo
                        } else {
                            rng.random_range(lo..hi)
                        }
                    };
                    let x = draw(&mut rng, r.x);
                    let y = draw(&mut rng, r.y);
                    let z = draw(&mut rng, r.z);
                    let yaw = rng.random_range(-PI..PI);
                    PoseYaw::new(Vec3::new(x, y, z), yaw)
                }
                _ => unreachable!("validated: exactly one of pose/region"),
            };
            AgentState::at_rest(pose, agent.leds_on())
        })
        .collect()
}

enum StreamKind {
    Init,
    Vision,
}

fn agent_stream(seed_base: u64, seed: u64, agent_idx: usize, kind: StreamKind) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_base.wrapping_add(seed));
    let lane = match kind {
        StreamKind::Init => 0,
        StreamKind::Vision => 1,
    };
    rng.set_stream(2 * agent_idx as u64 + lane);
    rng
}

enum AgentBrain {
    Leader { program: LeaderProgram },
    Follower { zone_params: ZoneParams, tanh_params: TanhParams, memory: FollowerMemory },
}

/// Runs one scenario to completion and returns the full trajectory log
/// (one record per agent per 0.2 s tick, initial state included).
pub fn run(cfg: &ScenarioConfig, seed: u64) -> TrajectoryLog {
    run_with_variant(cfg, seed, cfg.controller_variant)
}

/// [`run`] with the follower speed law overridden.
pub fn run_with_variant(
    cfg: &ScenarioConfig,
    seed: u64,
    variant: ControllerVariant,
) -> TrajectoryLog {
    let layout = cfg.led_layout.to_layout();
    let vision = cfg.vision.to_params();
    let dynamics = cfg.dynamics;
    let tank = cfg.tank;
    let f_max = dynamics.f_max;

    let mut states = sample_initial_conditions(cfg, seed);
    let mut vision_rngs: Vec<ChaCha8Rng> = (0..cfg.agents.len())
        .map(|i| agent_stream(cfg.seed_base, seed, i, StreamKind::Vision))
        .collect();
    let mut brains: Vec<AgentBrain> = cfg
        .agents
        .iter()
        .map(|agent| match agent.role {
            Role::Leader => AgentBrain::Leader {
                program: agent.program.as_ref().unwrap().to_program(),
            },
            Role::Follower => {
                let c = agent.controller.as_ref().unwrap();
                AgentBrain::Follower {
                    zone_params: c.zone_params(),
                    tanh_params: c.tanh_params(f_max),
                    memory: FollowerMemory::default(),
                }
            }
        })
        .collect();
    let roles: Vec<Role> = cfg.agents.iter().map(|a| a.role).collect();

    let n_ticks = (cfg.duration / CONTROL_PERIOD).round() as usize;
    let mut ticks = Vec::with_capacity(n_ticks + 1);

    for k in 0..=n_ticks {
        let t = k as f64 * CONTROL_PERIOD;
        let snapshot = states.clone();
        let mut records = Vec::with_capacity(snapshot.len());
        let mut commands = Vec::with_capacity(snapshot.len());

        for (i, brain) in brains.iter_mut().enumerate() {
            let record = match brain {
                AgentBrain::Leader { program } => {
                    let cmd = leader_command(program, &snapshot[i], t).clamped(f_max);
                    commands.push(cmd);
                    AgentRecord {
                        state: snapshot[i],
                        cmd,
                        estimate: None,
                        zone: None,
                        target_world: None,
                        selected_leader: None,
                        leader_distances: Vec::new(),
                    }
                }
                AgentBrain::Follower { zone_params, tanh_params, memory } => {
                    let perceived = perceive(
                        i,
                        &snapshot,
                        &layout,
                        &vision,
                        &mut vision_rngs[i],
                        memory,
                    );
                    let selection = select_leader(&perceived.estimates).ok();
                    let selected = selection.map(|idx| (perceived.owners[idx], perceived.estimates[idx]));
                    let est = selected.as_ref().map(|(_, e)| e);

                    let (zone, target_world) = match est {
                        Some(e) => (
                            Some(classify_zone(e.distance, zone_params)),
                            Some(body_to_world(
                                &snapshot[i].pose,
                                follow_target(e, zone_params, memory, t),
                            )),
                        ),
                        None => (None, None),
                    };
                    let (cmd, new_memory) = match variant {
                        ControllerVariant::Zonal => {
                            follower_command_zonal(est, zone_params, memory, t, f_max)
                        }
                        ControllerVariant::Tanh => {
                            follower_command_tanh(est, zone_params, tanh_params, memory, t, f_max)
                        }
                    };
                    *memory = new_memory;
                    commands.push(cmd);
                    AgentRecord {
                        state: snapshot[i],
                        cmd,
                        estimate: est.map(EstimateRecord::from_estimate),
                        zone,
                        target_world,
                        selected_leader: selected.map(|(owner, _)| owner),
                        leader_distances: perceived
                            .owners
                            .iter()
                            .zip(&perceived.estimates)
                            .map(|(owner, e)| (*owner, e.distance))
                            .collect(),
                    }
                }
            };
            records.push(record);
        }

        ticks.push(TickRecord { t, agents: records });

        if k < n_ticks {
            for _ in 0..SUBSTEPS {
                for (i, state) in states.iter_mut().enumerate() {
                    *state = step(state, &commands[i], PHYSICS_DT, &dynamics, &tank);
                }
            }
            // keep remembered body-frame directions aligned with the new
            // own-yaw (the robot's gyro integration)
            for (i, brain) in brains.iter_mut().enumerate() {
                if let AgentBrain::Follower { memory, .. } = brain {
                    let dyaw =
                        crate::geometry::normalize_angle(states[i].pose.yaw - snapshot[i].pose.yaw);
                    memory.rotate_frame(dyaw);
                }
            }
        }
    }

    TrajectoryLog { scenario: cfg.name.clone(), roles, ticks }
}

struct Perceived {
    owners: Vec<usize>,
    estimates: Vec<crate::vision::LeaderEstimate>,
}

/// One perception cycle: observe the world, group blobs per source robot
/// (the stand-in for the real system's blob clustering), and parse each
/// group into a leader estimate.
fn perceive(
    observer_idx: usize,
    snapshot: &[AgentState],
    layout: &LedLayout,
    vision: &VisionParams,
    rng: &mut ChaCha8Rng,
    memory: &FollowerMemory,
) -> Perceived {
    let blobs = observe(observer_idx, snapshot, layout, vision, rng);
    let mut groups: BTreeMap<usize, Vec<BlobObservation>> = BTreeMap::new();
    for blob in blobs {
        groups.entry(blob.source.owner()).or_default().push(blob);
    }
    // No heading prior is fed back into parsing: a prior can lock a
    // towards/away-reversed heading in place indefinitely (each tick the
    // ghost reinforces itself), while the height check plus the
    // away-facing preference recover within a tick once geometry allows.
    let prev_heading = None;
    let _ = &memory.last_estimate;
    let mut owners = Vec::new();
    let mut estimates = Vec::new();
    for (owner, group) in groups {
        if let Some(est) = parse_blobs_with_history(&group, layout, vision, prev_heading) {
            owners.push(owner);
            estimates.push(est);
        }
    }
    Perceived { owners, estimates }
}

fn body_to_world(pose: &PoseYaw, body: Vec3) -> Vec3 {
    let horizontal = rotate_z(Vec3::new(body.x, body.y, 0.0), pose.yaw);
    Vec3::new(
        pose.position.x + horizontal.x,
        pose.position.y + horizontal.y,
        pose.position.z + body.z,
    )
}
