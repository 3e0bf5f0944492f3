//! Synthetic perception: project lit LEDs of other robots into a
//! follower's camera frame, then parse the resulting blobs back into a
//! leader pose estimate.
//!
//! The projection side ([`observe`]) models the rear blind spot, a maximum
//! detection range, occlusion by robot bodies, merging of angularly close
//! blobs, Gaussian angular noise, and spurious water-surface reflections.
//! The parsing side ([`parse_blobs`]) implements the onboard pipeline: the
//! stacked posterior LED pair is identified among the lowest blobs
//! (surface reflections always appear higher, never lower), distance comes
//! from the angle the pair subtends, and a third blob matching the pair's
//! pitch within a threshold is used to recover the leader's heading.

use crate::dynamics::AgentState;
use crate::geometry::{bearing_of, normalize_angle, pitch_of, rotate_z, world_to_pqr, Vec3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VisionError {
    /// The posterior pair subtends zero angle; distance is unresolvable.
    #[error("posterior blob pair subtends zero angle")]
    DegeneratePair,
    #[error("invalid LED layout: {0}")]
    InvalidLayout(String),
}

/// Body-frame positions (mm, z up) of the three LEDs.
///
/// LEDs 1 and 2 are the posterior pair, stacked vertically and separated
/// by the baseline; LED 3 sits ahead of them on the nose. The defaults put
/// the pair at the body center so that the pair midpoint coincides with
/// the robot's position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedLayout {
    pub posterior_bottom: Vec3,
    pub posterior_top: Vec3,
    pub anterior: Vec3,
}

impl Default for LedLayout {
    fn default() -> Self {
        LedLayout::new(50.0, 65.0)
    }
}

impl LedLayout {
    /// Canonical arrangement: posterior pair stacked about the body center
    /// with vertical separation `baseline`, anterior LED
    /// `longitudinal_offset` ahead at pair-midpoint height.
    pub fn new(baseline: f64, longitudinal_offset: f64) -> Self {
        LedLayout {
            posterior_bottom: Vec3::new(0.0, 0.0, -baseline / 2.0),
            posterior_top: Vec3::new(0.0, 0.0, baseline / 2.0),
            anterior: Vec3::new(longitudinal_offset, 0.0, 0.0),
        }
    }

    /// Vertical separation of the posterior pair, mm.
    pub fn baseline(&self) -> f64 {
        self.posterior_top.z - self.posterior_bottom.z
    }

    /// Horizontal distance from the posterior pair to the anterior LED, mm.
    pub fn longitudinal_offset(&self) -> f64 {
        let mid = self.pair_midpoint();
        let d = self.anterior - mid;
        d.horizontal_norm()
    }

    fn pair_midpoint(&self) -> Vec3 {
        (self.posterior_bottom + self.posterior_top).scale(0.5)
    }

    /// Height of the anterior LED above the pair midpoint, mm.
    fn anterior_rise(&self) -> f64 {
        self.anterior.z - self.pair_midpoint().z
    }

    pub fn validate(&self) -> Result<(), VisionError> {
        if self.baseline() <= 0.0 {
            return Err(VisionError::InvalidLayout("baseline must be positive".into()));
        }
        if self.longitudinal_offset() <= 0.0 {
            return Err(VisionError::InvalidLayout(
                "anterior LED must sit ahead of the posterior pair".into(),
            ));
        }
        let dx = self.posterior_top.x - self.posterior_bottom.x;
        let dy = self.posterior_top.y - self.posterior_bottom.y;
        if dx != 0.0 || dy != 0.0 {
            return Err(VisionError::InvalidLayout(
                "posterior pair must differ only in the vertical coordinate".into(),
            ));
        }
        Ok(())
    }

    /// World positions of the LEDs for a robot at `pose`, in the fixed
    /// order bottom posterior, top posterior, anterior.
    pub fn world_positions(&self, pose: &crate::geometry::PoseYaw) -> [Vec3; 3] {
        let place = |offset: Vec3| pose.position + rotate_z(offset, pose.yaw);
        [
            place(self.posterior_bottom),
            place(self.posterior_top),
            place(self.anterior),
        ]
    }
}

/// Where a blob came from. Real robots do not know this; it exists for
/// simulation bookkeeping (grouping blobs per neighbor) and diagnostics,
/// and the parser never reads it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlobSource {
    Agent(usize),
    /// Water-surface reflection of one of `agent`'s LEDs.
    Reflection(usize),
}

impl BlobSource {
    /// Index of the robot whose LED (directly or via reflection) produced
    /// this blob.
    pub fn owner(&self) -> usize {
        match self {
            BlobSource::Agent(i) | BlobSource::Reflection(i) => *i,
        }
    }
}

/// One detected light blob in the observer's camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobObservation {
    /// Horizontal bearing, rad, positive left.
    pub azimuth: f64,
    /// Vertical angle, rad, positive down (a lower blob has a larger
    /// elevation).
    pub elevation: f64,
    pub source: BlobSource,
}

impl BlobObservation {
    /// Unit direction in the observer's pqr frame (p forward, q left,
    /// r down).
    pub fn direction(&self) -> (f64, f64, f64) {
        let (se, ce) = self.elevation.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        (ce * ca, ce * sa, se)
    }
}

/// Parsed leader pose relative to the follower (body frame, z up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderEstimate {
    /// Bearing to the posterior-pair midpoint, rad.
    pub bearing: f64,
    /// Pitch to the posterior-pair midpoint, rad, positive when the leader
    /// is lower.
    pub pitch: f64,
    /// Distance to the posterior-pair midpoint, mm.
    pub distance: f64,
    /// Horizontal range to the pair, mm, triangulated from the vertical
    /// stack constraint (used as the heading-circle center).
    pub ground_range: f64,
    /// Leader heading in the follower's body frame; unit, horizontal.
    pub heading: Vec3,
    pub heading_valid: bool,
    /// Leader position reconstructed from bearing, pitch and distance.
    pub leader_position: Vec3,
}

/// Perception model parameters. Angles are radians here; scenario files
/// take degrees and convert on load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisionParams {
    /// Half-angle of the rear blind cone (total cone ~5 degrees).
    pub blind_spot_half_angle: f64,
    /// Maximum absolute azimuth the cameras cover. The default is a full
    /// sphere less the rear cone.
    pub fov_half_angle: f64,
    /// Angular separation below which two blobs fuse into one.
    pub merge_threshold: f64,
    /// Maximum pitch difference for a blob to count as the third LED.
    pub pitch_match_threshold: f64,
    /// Std dev of Gaussian angular noise per blob axis.
    pub noise_sigma: f64,
    /// Probability per perception cycle of one spurious reflection blob.
    pub reflection_rate: f64,
    /// Detection range cutoff, mm.
    pub max_range: f64,
    /// Radius of the sphere used for body occlusion tests, mm.
    pub occlusion_radius: f64,
}

impl Default for VisionParams {
    fn default() -> Self {
        VisionParams {
            blind_spot_half_angle: 2.5f64.to_radians(),
            fov_half_angle: std::f64::consts::PI,
            merge_threshold: 1.0f64.to_radians(),
            pitch_match_threshold: 6.0f64.to_radians(),
            noise_sigma: 0.2f64.to_radians(),
            reflection_rate: 0.0,
            max_range: 5000.0,
            occlusion_radius: 25.0,
        }
    }
}

/// Projects every lit LED in `world` into the camera frame of
/// `world[observer_idx]` and applies the full perception pipeline.
///
/// A robot whose center sits inside the rear blind cone contributes no
/// blobs at all; outside of that, individual LEDs are dropped when they
/// fall in the cone, beyond `max_range`, or behind another robot's body
/// (including the LED owner's own hull, which hides the nose LED from
/// directly behind).
pub fn observe<R: Rng + ?Sized>(
    observer_idx: usize,
    world: &[AgentState],
    layout: &LedLayout,
    params: &VisionParams,
    rng: &mut R,
) -> Vec<BlobObservation> {
    assert!(observer_idx < world.len(), "observer must be a member of the world");
    let observer = &world[observer_idx].pose;
    let mut blobs = Vec::new();
    let mut mirror_candidates: Vec<(usize, Vec3)> = Vec::new();

    for (j, agent) in world.iter().enumerate() {
        if j == observer_idx || !agent.leds_on {
            continue;
        }
        let center = world_to_pqr(observer, agent.pose.position);
        if let Ok(center_bearing) = bearing_of(&center) {
            if in_rear_cone(center_bearing, params) {
                continue;
            }
        }
        for led in layout.world_positions(&agent.pose) {
            let pqr = world_to_pqr(observer, led);
            if pqr.norm() > params.max_range || pqr.norm() == 0.0 {
                continue;
            }
            let (azimuth, elevation) = match (bearing_of(&pqr), pitch_of(&pqr)) {
                (Ok(a), Ok(e)) => (a, e),
                _ => continue,
            };
            if in_rear_cone(azimuth, params) || azimuth.abs() > params.fov_half_angle {
                continue;
            }
            if occluded(observer.position, led, observer_idx, world, params.occlusion_radius) {
                continue;
            }
            blobs.push(BlobObservation { azimuth, elevation, source: BlobSource::Agent(j) });
            mirror_candidates.push((j, led));
        }
    }

    merge_close_blobs(&mut blobs, params.merge_threshold);

    if params.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, params.noise_sigma).expect("valid noise sigma");
        for blob in &mut blobs {
            blob.azimuth = normalize_angle(blob.azimuth + noise.sample(rng));
            blob.elevation += noise.sample(rng);
        }
    }

    if params.reflection_rate > 0.0
        && !mirror_candidates.is_empty()
        && rng.random::<f64>() < params.reflection_rate
    {
        let (owner, led) = mirror_candidates[rng.random_range(0..mirror_candidates.len())];
        // virtual image of the LED above the water surface (z = 0)
        let mirrored = Vec3::new(led.x, led.y, -led.z);
        let pqr = world_to_pqr(observer, mirrored);
        if let (Ok(mut azimuth), Ok(mut elevation)) = (bearing_of(&pqr), pitch_of(&pqr)) {
            if params.noise_sigma > 0.0 {
                let noise = Normal::new(0.0, params.noise_sigma).expect("valid noise sigma");
                azimuth = normalize_angle(azimuth + noise.sample(rng));
                elevation += noise.sample(rng);
            }
            if !in_rear_cone(azimuth, params) && azimuth.abs() <= params.fov_half_angle {
                blobs.push(BlobObservation {
                    azimuth,
                    elevation,
                    source: BlobSource::Reflection(owner),
                });
            }
        }
    }

    blobs
}

fn in_rear_cone(azimuth: f64, params: &VisionParams) -> bool {
    std::f64::consts::PI - azimuth.abs() < params.blind_spot_half_angle
}

/// True when the sight line from `origin` to `target` passes within
/// `radius` of any robot body other than the observer's own.
///
/// Blockage within one radius of the target itself is ignored: LEDs sit on
/// the hull, so a grazing sight line always dips marginally inside the
/// owner's body sphere right at the LED without actually being hidden.
fn occluded(origin: Vec3, target: Vec3, observer_idx: usize, world: &[AgentState], radius: f64) -> bool {
    let seg = target - origin;
    let len2 = seg.x * seg.x + seg.y * seg.y + seg.z * seg.z;
    for (k, agent) in world.iter().enumerate() {
        if k == observer_idx {
            continue;
        }
        let c = agent.pose.position - origin;
        let t = if len2 > 0.0 {
            ((c.x * seg.x + c.y * seg.y + c.z * seg.z) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let closest = Vec3::new(origin.x + t * seg.x, origin.y + t * seg.y, origin.z + t * seg.z);
        if (closest - agent.pose.position).norm() < radius && (closest - target).norm() > radius {
            return true;
        }
    }
    false
}

/// Greedy pairwise merge: while the two angularly closest blobs are within
/// `threshold`, replace them by the blob at their direction midpoint.
fn merge_close_blobs(blobs: &mut Vec<BlobObservation>, threshold: f64) {
    if threshold <= 0.0 {
        return;
    }
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..blobs.len() {
            for j in (i + 1)..blobs.len() {
                let sep = angular_separation(&blobs[i], &blobs[j]);
                if best.map_or(true, |(_, _, s)| sep < s) {
                    best = Some((i, j, sep));
                }
            }
        }
        match best {
            Some((i, j, sep)) if sep < threshold => {
                let (ai, aj) = (blobs[i], blobs[j]);
                let (xi, yi, zi) = ai.direction();
                let (xj, yj, zj) = aj.direction();
                let mid = (xi + xj, yi + yj, zi + zj);
                let norm = (mid.0 * mid.0 + mid.1 * mid.1 + mid.2 * mid.2).sqrt();
                let merged = BlobObservation {
                    azimuth: mid.1.atan2(mid.0),
                    elevation: (mid.2 / norm).asin(),
                    source: ai.source,
                };
                blobs.remove(j);
                blobs[i] = merged;
            }
            _ => break,
        }
    }
}

fn angular_separation(a: &BlobObservation, b: &BlobObservation) -> f64 {
    let (xa, ya, za) = a.direction();
    let (xb, yb, zb) = b.direction();
    (xa * xb + ya * yb + za * zb).clamp(-1.0, 1.0).acos()
}

/// Distance to the posterior pair from the angle it subtends:
/// d = baseline / (2 tan(gamma / 2)).
///
/// Exact when the pair is viewed level with its midpoint; the residual
/// grows quadratically with the viewing pitch and stays under ~1.5% for
/// pitches within about eight degrees.
pub fn estimate_distance(
    b_low: &BlobObservation,
    b_high: &BlobObservation,
    baseline: f64,
) -> Result<f64, VisionError> {
    let gamma = angular_separation(b_low, b_high);
    let half_tan = (gamma / 2.0).tan();
    if half_tan <= 0.0 {
        return Err(VisionError::DegeneratePair);
    }
    Ok(baseline / (2.0 * half_tan))
}

/// Parses blobs of one neighbor into a leader estimate. Fewer than two
/// blobs means the leader was not seen this cycle.
pub fn parse_blobs(
    blobs: &[BlobObservation],
    layout: &LedLayout,
    params: &VisionParams,
) -> Option<LeaderEstimate> {
    parse_blobs_with_history(blobs, layout, params, None)
}

/// [`parse_blobs`] with the follower's previous heading estimate (already
/// rotated into the current body frame) available to disambiguate the
/// two-fold heading solution.
pub fn parse_blobs_with_history(
    blobs: &[BlobObservation],
    layout: &LedLayout,
    params: &VisionParams,
    prev_heading: Option<(f64, f64)>,
) -> Option<LeaderEstimate> {
    if blobs.len() < 2 {
        return None;
    }
    let mut sorted: Vec<&BlobObservation> = blobs.iter().collect();
    // largest elevation = physically lowest; surface reflections always
    // image above the real LEDs, so restricting attention to the lowest
    // three blobs drops them
    sorted.sort_by(|a, b| b.elevation.total_cmp(&a.elevation));
    let low = &sorted[..sorted.len().min(3)];

    // the posterior pair is the most nearly vertically stacked pair among
    // the low blobs (the anterior LED is laterally offset whenever the
    // leader is off-axis); ties prefer the physically lower pair
    let mut pair = (0, 1);
    let mut best_key = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..low.len() {
        for j in (i + 1)..low.len() {
            let gap = normalize_angle(low[i].azimuth - low[j].azimuth).abs();
            let key = (gap, low[i].elevation + low[j].elevation);
            if key.0 < best_key.0 || (key.0 == best_key.0 && key.1 > best_key.1) {
                best_key = key;
                pair = (i, j);
            }
        }
    }
    let (b_low, b_high) = (low[pair.0], low[pair.1]);

    // Triangulate the pair midpoint from the vertical-stack constraint:
    // both LEDs share a horizontal position, so the difference of their
    // elevation tangents spans exactly one baseline.
    let tan_low = b_low.elevation.tan();
    let tan_high = b_high.elevation.tan();
    let spread = tan_low - tan_high;
    if spread <= 0.0 {
        return None;
    }
    let ground_range = layout.baseline() / spread;
    let bearing = mean_angle(b_low.azimuth, b_high.azimuth);
    let pitch = ((tan_low + tan_high) / 2.0).atan();
    let distance = estimate_distance(b_low, b_high, layout.baseline()).ok()?;

    let horizontal = distance * pitch.cos();
    let leader_position = Vec3::new(
        horizontal * bearing.cos(),
        horizontal * bearing.sin(),
        -distance * pitch.sin(),
    );

    let mut estimate = LeaderEstimate {
        bearing,
        pitch,
        distance,
        ground_range,
        heading: Vec3::new(bearing.cos(), bearing.sin(), 0.0),
        heading_valid: false,
        leader_position,
    };

    // third LED: the remaining blob closest to the pair's pitch, within
    // the match threshold; anything else is treated as a reflection
    let anterior = sorted
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != pair.0 && *i != pair.1)
        .map(|(_, b)| b)
        .filter(|b| (b.elevation - pitch).abs() <= params.pitch_match_threshold)
        .min_by(|a, b| {
            (a.elevation - pitch).abs().total_cmp(&(b.elevation - pitch).abs())
        });
    if let Some(anterior) = anterior {
        let (heading, valid) =
            estimate_heading(anterior, &estimate, layout, params.noise_sigma, prev_heading);
        if valid {
            estimate.heading = Vec3::new(heading.0, heading.1, 0.0);
            estimate.heading_valid = true;
        }
    }
    Some(estimate)
}

/// Solves the anterior LED's ground position as an intersection of the
/// anterior sight ray with the circle of radius `longitudinal_offset`
/// around the pair's ground position, and returns the implied heading.
///
/// Two intersections generally exist. The candidate whose implied LED
/// height matches the pair height wins when that evidence rises above the
/// angular noise floor; below the floor a previous heading, if supplied,
/// is preferred; failing both, the far intersection is used. The far
/// preference keeps broadside and away-facing views correct - the normal
/// geometry for a follower - and concentrates the residual ambiguity on a
/// leader pointing straight at the observer, which genuinely looks the
/// same as one pointing away.
pub fn estimate_heading(
    anterior: &BlobObservation,
    pair: &LeaderEstimate,
    layout: &LedLayout,
    noise_sigma: f64,
    prev_heading: Option<(f64, f64)>,
) -> ((f64, f64), bool) {
    let s = layout.longitudinal_offset();
    let gx = pair.ground_range * pair.bearing.cos();
    let gy = pair.ground_range * pair.bearing.sin();
    let (wx, wy) = (anterior.azimuth.cos(), anterior.azimuth.sin());

    // |t*w - g|^2 = s^2 along the horizontal projection of the sight ray
    let b = wx * gx + wy * gy;
    let c = gx * gx + gy * gy - s * s;
    let disc = b * b - c;
    // a clean measurement puts the blob exactly on the circle, so treat a
    // rounding-level negative discriminant as tangency
    let tangent_tol = 1e-9 * s * s;
    if disc < -tangent_tol {
        return ((0.0, 0.0), false);
    }
    let sqrt_disc = disc.max(0.0).sqrt();
    let mut roots = [b - sqrt_disc, b + sqrt_disc];
    roots.sort_by(f64::total_cmp);
    let candidates: Vec<f64> = roots.iter().copied().filter(|t| *t > 1e-9).collect();
    if candidates.is_empty() {
        return ((0.0, 0.0), false);
    }

    let heading_at = |t: f64| -> (f64, f64) {
        let hx = (t * wx - gx) / s;
        let hy = (t * wy - gy) / s;
        let n = (hx * hx + hy * hy).sqrt();
        (hx / n, hy / n)
    };

    let chosen = if candidates.len() == 1 {
        candidates[0]
    } else {
        // expected LED-3 height below the observer, from the pair height
        // plus the layout's anterior rise (r is positive down)
        let r_pair = pair.ground_range * pair.pitch.tan();
        let r_expected = r_pair - layout.anterior_rise();
        let tan_el = anterior.elevation.tan();
        let score = |t: f64| (t * tan_el - r_expected).abs();
        let (near, far) = (candidates[0], candidates[1]);
        let (sn, sf) = (score(near), score(far));
        // the height comparison is only meaningful when the two scores
        // differ by more than the angular noise can explain
        let floor = (4.0 * far * noise_sigma).max(1e-9 * r_expected.abs().max(1.0));
        if (sn - sf).abs() > floor {
            if sf < sn {
                far
            } else {
                near
            }
        } else if let Some((px, py)) = prev_heading {
            *candidates
                .iter()
                .max_by(|&&a, &&b_| {
                    let ha = heading_at(a);
                    let hb = heading_at(b_);
                    (ha.0 * px + ha.1 * py).total_cmp(&(hb.0 * px + hb.1 * py))
                })
                .unwrap()
        } else {
            far
        }
    };

    (heading_at(chosen), true)
}

fn mean_angle(a: f64, b: f64) -> f64 {
    let x = a.cos() + b.cos();
    let y = a.sin() + b.sin();
    normalize_angle(y.atan2(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PoseYaw;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn noise_free() -> VisionParams {
        VisionParams { noise_sigma: 0.0, ..VisionParams::default() }
    }

    fn agent_at(x: f64, y: f64, z: f64, yaw: f64, leds_on: bool) -> AgentState {
        AgentState::at_rest(PoseYaw::new(Vec3::new(x, y, z), yaw), leds_on)
    }

    /// Independent forward projection used as the test oracle: plain
    /// scalar trig from world coordinates to camera angles.
    fn oracle_angles(observer: (Vec3, f64), point: Vec3) -> (f64, f64) {
        let dx = point.x - observer.0.x;
        let dy = point.y - observer.0.y;
        let dz = point.z - observer.0.z;
        let fwd = dx * observer.1.cos() + dy * observer.1.sin();
        let left = -dx * observer.1.sin() + dy * observer.1.cos();
        let az = left.atan2(fwd);
        let el = (-dz).atan2((fwd * fwd + left * left).sqrt());
        (az, el)
    }

    #[test]
    fn broadside_leader_yields_three_blobs_with_stacked_pair() {
        let world = vec![
            agent_at(0.0, 0.0, -250.0, 0.0, false),
            agent_at(500.0, 0.0, -250.0, PI / 2.0, true),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let blobs = observe(0, &world, &LedLayout::default(), &noise_free(), &mut rng);
        assert_eq!(blobs.len(), 3);
        let pair: Vec<_> = blobs.iter().filter(|b| b.azimuth.abs() < 1e-9).collect();
        assert_eq!(pair.len(), 2, "posterior pair shares the center azimuth");
        assert_relative_eq!(pair[0].azimuth, pair[1].azimuth, epsilon = 1e-12);
    }

    #[test]
    fn head_on_leader_merges_first_and_third_leds() {
        // facing the observer: nose LED sits between the posterior pair in
        // the image; with a generous merge threshold it fuses with LED 1
        let world = vec![
            agent_at(0.0, 0.0, -250.0, 0.0, false),
            agent_at(500.0, 0.0, -250.0, PI, true),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let defaults = noise_free();
        let blobs = observe(0, &world, &LedLayout::default(), &defaults, &mut rng);
        assert_eq!(blobs.len(), 3, "1 degree merge threshold keeps them apart at 500 mm");

        let coarse = VisionParams { merge_threshold: 3.0f64.to_radians(), ..defaults };
        let blobs = observe(0, &world, &LedLayout::default(), &coarse, &mut rng);
        assert_eq!(blobs.len(), 2, "nose LED merges into the nearer posterior blob");
    }

    #[test]
    fn leader_in_rear_cone_is_invisible() {
        let az = 179.0f64.to_radians();
        let world = vec![
            agent_at(0.0, 0.0, -250.0, 0.0, false),
            agent_at(500.0 * az.cos(), 500.0 * az.sin(), -250.0, 0.3, true),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let blobs = observe(0, &world, &LedLayout::default(), &noise_free(), &mut rng);
        assert!(blobs.is_empty());
    }

    #[test]
    fn interposed_body_occludes_far_leds() {
        // unlit robot directly between observer and a leader facing away:
        // every sight line runs down the common axis
        let world = vec![
            agent_at(0.0, 0.0, -250.0, 0.0, false),
            agent_at(500.0, 0.0, -250.0, 0.0, false),
            agent_at(1000.0, 0.0, -250.0, 0.0, true),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let blobs = observe(0, &world, &LedLayout::default(), &noise_free(), &mut rng);
        assert!(blobs.is_empty(), "all sight lines pass through the blocker");

        // brute-force oracle: min distance from sampled sight line points
        // to the blocker center confirms the geometry
        let layout = LedLayout::default();
        for led in layout.world_positions(&world[2].pose) {
            let o = world[0].pose.position;
            let min_d = (0..=1000)
                .map(|i| {
                    let t = i as f64 / 1000.0;
                    let p = Vec3::new(
                        o.x + t * (led.x - o.x),
                        o.y + t * (led.y - o.y),
                        o.z + t * (led.z - o.z),
                    );
                    (p - world[1].pose.position).norm()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(min_d < 25.0);
        }

        // blocker moved aside: the posterior pair reappears (the nose LED
        // stays hidden behind the leader's own hull from directly behind)
        let mut world2 = world.clone();
        world2[1].pose.position.y = 80.0;
        let blobs = observe(0, &world2, &LedLayout::default(), &noise_free(), &mut rng);
        assert_eq!(blobs.len(), 2);
    }

    #[test]
    fn own_hull_hides_nose_led_from_directly_behind() {
        let world = vec![
            agent_at(0.0, 0.0, -250.0, 0.0, false),
            agent_at(500.0, 0.0, -250.0, 0.0, true), // facing away
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let blobs = observe(0, &world, &LedLayout::default(), &noise_free(), &mut rng);
        assert_eq!(blobs.len(), 2, "nose LED is behind the leader's own body");
    }

    #[test]
    fn parse_broadside_recovers_pose_and_heading() {
        let observer = agent_at(0.0, 0.0, -250.0, 0.0, false);
        let leader = agent_at(500.0, 0.0, -250.0, PI / 2.0, true);
        let world = vec![observer, leader];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layout = LedLayout::default();
        let params = noise_free();
        let blobs = observe(0, &world, &layout, &params, &mut rng);
        let est = parse_blobs(&blobs, &layout, &params).expect("estimate");

        assert_relative_eq!(est.bearing, 0.0, epsilon = 1e-9);
        assert_relative_eq!(est.pitch, 0.0, epsilon = 1e-9);
        assert_relative_eq!(est.distance, 500.0, max_relative = 0.05);
        assert!(est.heading_valid);
        let truth = (0.0f64.cos(), 0.0); // leader heading +y in observer frame
        let _ = truth;
        let heading_error = (est.heading.y.atan2(est.heading.x) - PI / 2.0).abs();
        assert!(heading_error < 2.0f64.to_radians(), "heading error {heading_error}");
    }

    #[test]
    fn two_blobs_give_estimate_without_heading() {
        let layout = LedLayout::default();
        let params = noise_free();
        // hand-built posterior pair of a leader 500 mm ahead, level
        let blobs = vec![
            BlobObservation {
                azimuth: 0.0,
                elevation: (25.0f64 / 500.0).atan(),
                source: BlobSource::Agent(1),
            },
            BlobObservation {
                azimuth: 0.0,
                elevation: (-25.0f64 / 500.0).atan(),
                source: BlobSource::Agent(1),
            },
        ];
        let est = parse_blobs(&blobs, &layout, &params).expect("estimate");
        assert!(!est.heading_valid);
        assert_relative_eq!(est.ground_range, 500.0, max_relative = 1e-9);
    }

    #[test]
    fn distant_reflection_blob_is_ignored() {
        let world = vec![
            agent_at(0.0, 0.0, -250.0, 0.0, false),
            agent_at(500.0, 0.0, -250.0, PI / 2.0, true),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layout = LedLayout::default();
        let params = noise_free();
        let mut blobs = observe(0, &world, &layout, &params, &mut rng);
        let clean = parse_blobs(&blobs, &layout, &params).expect("estimate");

        // mirror blob 10 degrees above the pair pitch
        blobs.push(BlobObservation {
            azimuth: 0.05,
            elevation: clean.pitch - 10.0f64.to_radians(),
            source: BlobSource::Reflection(1),
        });
        let with_mirror = parse_blobs(&blobs, &layout, &params).expect("estimate");
        assert_eq!(clean, with_mirror);
    }

    #[test]
    fn distance_formula_algebraic_identity() {
        let half = 0.05f64.atan();
        let blobs = [
            BlobObservation { azimuth: 0.0, elevation: half, source: BlobSource::Agent(1) },
            BlobObservation { azimuth: 0.0, elevation: -half, source: BlobSource::Agent(1) },
        ];
        let d = estimate_distance(&blobs[0], &blobs[1], 50.0).unwrap();
        assert_relative_eq!(d, 500.0, max_relative = 1e-12);
    }

    #[test]
    fn coincident_pair_is_degenerate() {
        let b = BlobObservation { azimuth: 0.1, elevation: 0.2, source: BlobSource::Agent(1) };
        assert_eq!(estimate_distance(&b, &b, 50.0), Err(VisionError::DegeneratePair));
    }

    #[test]
    fn distance_within_one_percent_at_one_meter() {
        let world = vec![
            agent_at(0.0, 0.0, -250.0, 0.0, false),
            agent_at(1000.0, 0.0, -250.0, PI / 2.0, true),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layout = LedLayout::default();
        let params = noise_free();
        let blobs = observe(0, &world, &layout, &params, &mut rng);
        let est = parse_blobs(&blobs, &layout, &params).expect("estimate");
        assert!(est.distance > 990.0 && est.distance < 1010.0, "d = {}", est.distance);
    }

    #[test]
    fn level_toward_view_may_reverse_heading_without_history() {
        // leader ahead, heading mostly toward the observer, exactly level:
        // the two circle intersections imply identical LED heights, the
        // far-intersection fallback fires, and the reported heading flips
        // toward the away-facing interpretation
        let yaw = 150.0f64.to_radians();
        let observer = agent_at(0.0, 0.0, -250.0, 0.0, false);
        let leader = agent_at(500.0, 0.0, -250.0, yaw, true);
        let world = vec![observer, leader];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layout = LedLayout::default();
        let params = noise_free();
        let blobs = observe(0, &world, &layout, &params, &mut rng);
        let est = parse_blobs(&blobs, &layout, &params).expect("estimate");
        assert!(est.heading_valid);
        let truth = (yaw.cos(), yaw.sin());
        let dot = est.heading.x * truth.0 + est.heading.y * truth.1;
        assert!(dot < 0.5, "expected the ambiguous branch, got dot = {dot}");

        // with the true heading as history, the right branch is selected
        let est2 = parse_blobs_with_history(&blobs, &layout, &params, Some(truth)).unwrap();
        let dot2 = est2.heading.x * truth.0 + est2.heading.y * truth.1;
        assert!(dot2 > 0.999, "history should disambiguate, dot = {dot2}");
    }

    #[test]
    fn depth_offset_disambiguates_heading_without_history() {
        // same pose but viewed from slightly above: the implied LED heights
        // of the two candidates now differ and the true branch wins
        let yaw = 150.0f64.to_radians();
        let observer = agent_at(0.0, 0.0, -220.0, 0.0, false);
        let leader = agent_at(500.0, 0.0, -250.0, yaw, true);
        let world = vec![observer, leader];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layout = LedLayout::default();
        let params = noise_free();
        let blobs = observe(0, &world, &layout, &params, &mut rng);
        let est = parse_blobs(&blobs, &layout, &params).expect("estimate");
        assert!(est.heading_valid);
        let truth = (yaw.cos(), yaw.sin());
        let dot = est.heading.x * truth.0 + est.heading.y * truth.1;
        assert!(dot > 0.999, "height check should pick the true branch, dot = {dot}");
    }

    #[test]
    fn ray_missing_circle_invalidates_heading() {
        let pair = LeaderEstimate {
            bearing: 0.0,
            pitch: 0.0,
            distance: 500.0,
            ground_range: 500.0,
            heading: Vec3::new(1.0, 0.0, 0.0),
            heading_valid: false,
            leader_position: Vec3::new(500.0, 0.0, 0.0),
        };
        // anterior blob 30 degrees off to the side cannot touch a 65 mm
        // circle around a point 500 mm ahead
        let anterior = BlobObservation {
            azimuth: 30.0f64.to_radians(),
            elevation: 0.0,
            source: BlobSource::Agent(1),
        };
        let (_, valid) = estimate_heading(&anterior, &pair, &LedLayout::default(), 0.0, None);
        assert!(!valid);
    }

    #[test]
    fn noise_free_round_trip_over_random_poses() {
        let layout = LedLayout::default();
        let params = noise_free();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut tested = 0;
        while tested < 300 {
            let Some(case) = random_clean_case(&mut rng, &layout, &params) else {
                continue;
            };
            let (world, truth_bearing, truth_pitch, truth_distance, truth_heading) = case;
            let mut obs_rng = ChaCha8Rng::seed_from_u64(0);
            let blobs = observe(0, &world, &layout, &params, &mut obs_rng);
            let est = parse_blobs(&blobs, &layout, &params).expect("clean view parses");
            assert!((est.bearing - truth_bearing).abs() < 1e-6, "bearing");
            assert!((est.pitch - truth_pitch).abs() < 1e-6, "pitch");
            assert!(
                (est.distance - truth_distance).abs() / truth_distance < 0.015,
                "distance {} vs {}",
                est.distance,
                truth_distance
            );
            assert!(
                est.heading_valid,
                "heading invalid: blobs {:?} truth (az {truth_bearing}, el {truth_pitch}, \
                 d {truth_distance}, h {truth_heading}) world {:?}",
                blobs, world
            );
            let herr = (est.heading.y.atan2(est.heading.x) - truth_heading).abs();
            let herr = herr.min(2.0 * PI - herr);
            assert!(herr < 2.0f64.to_radians(), "heading error {herr}");
            tested += 1;
        }
    }

    /// Builds one random, geometrically clean observer/leader pair and
    /// returns the ground truth in the observer's body frame, or None when
    /// the draw lands in degenerate geometry (blind spot, merge range,
    /// axis view, near-level tie).
    pub(super) fn random_clean_case(
        rng: &mut ChaCha8Rng,
        layout: &LedLayout,
        params: &VisionParams,
    ) -> Option<(Vec<AgentState>, f64, f64, f64, f64)> {
        use rand::Rng;
        let range = rng.random_range(200.0..2000.0);
        let az = rng.random_range(-170.0f64.to_radians()..170.0f64.to_radians());
        let el_mag = rng.random_range(0.5f64.to_radians()..8.0f64.to_radians());
        let el = if rng.random::<bool>() { el_mag } else { -el_mag };
        let observer = agent_at(0.0, 0.0, -1000.0, rng.random_range(-PI..PI), false);

        // place the leader at the chosen camera angles
        let horiz = range * el.cos();
        let world_angle = observer.pose.yaw + az;
        let leader_pos = Vec3::new(
            horiz * world_angle.cos(),
            horiz * world_angle.sin(),
            -1000.0 - range * el.sin(),
        );
        // keep the observer out of the leader's axis cone where the nose
        // LED merges or hides
        let back_bearing = rng.random_range(35.0f64.to_radians()..145.0f64.to_radians());
        let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let to_observer = (observer.pose.position.y - leader_pos.y)
            .atan2(observer.pose.position.x - leader_pos.x);
        let leader_yaw = normalize_angle(to_observer - side * back_bearing);
        let leader = AgentState::at_rest(PoseYaw::new(leader_pos, leader_yaw), true);
        let world = vec![observer, leader];

        // reject draws where any LED grazes the rear blind cone or where
        // any two blobs approach the merge threshold
        let mut dirs = Vec::new();
        for led in layout.world_positions(&leader.pose) {
            let (a, e) = oracle_angles((observer.pose.position, observer.pose.yaw), led);
            if PI - a.abs() < 2.0 * params.blind_spot_half_angle {
                return None;
            }
            dirs.push((e.cos() * a.cos(), e.cos() * a.sin(), e.sin()));
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let dot: f64 = dirs[i].0 * dirs[j].0 + dirs[i].1 * dirs[j].1 + dirs[i].2 * dirs[j].2;
                if dot.clamp(-1.0, 1.0).acos() < 1.3 * params.merge_threshold {
                    return None;
                }
            }
        }

        let truth_heading = normalize_angle(leader_yaw - observer.pose.yaw);
        Some((world, az, el, range, truth_heading))
    }

    #[test]
    fn parse_is_deterministic() {
        let layout = LedLayout::default();
        let params = noise_free();
        let blobs = vec![
            BlobObservation { azimuth: 0.2, elevation: 0.06, source: BlobSource::Agent(1) },
            BlobObservation { azimuth: 0.21, elevation: -0.04, source: BlobSource::Agent(1) },
            BlobObservation { azimuth: 0.32, elevation: 0.01, source: BlobSource::Agent(1) },
        ];
        assert_eq!(
            parse_blobs(&blobs, &layout, &params),
            parse_blobs(&blobs, &layout, &params)
        );
    }
}
