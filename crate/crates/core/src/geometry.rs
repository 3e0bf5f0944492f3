//! Coordinate frames and the world/camera transforms everything else builds on.
//!
//! World frame: right-handed, millimeters, z up. Body (camera) frame of an
//! observer: `p` forward along the body axis, `q` to the observer's left,
//! `r` down. The down-positive `r` makes a positive pitch angle mean "the
//! target is lower than the observer"; the world/body sign flip is owned
//! entirely by [`world_to_pqr`] and [`pqr_to_world`].

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Error from a degenerate angular query.
#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    /// Bearing is undefined when the target sits exactly on the observer's
    /// vertical axis (p = q = 0).
    #[error("direction undefined: target on the observer's vertical axis")]
    UndefinedDirection,
}

/// Position or displacement in the world frame (mm, z up).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Length of the horizontal (xy) component.
    pub fn horizontal_norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn scale(&self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

/// A point expressed in an observer's body frame: `p` forward (mm),
/// `q` left (mm), `r` down (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PqrPoint {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl PqrPoint {
    pub fn new(p: f64, q: f64, r: f64) -> Self {
        PqrPoint { p, q, r }
    }

    pub fn norm(&self) -> f64 {
        (self.p * self.p + self.q * self.q + self.r * self.r).sqrt()
    }

    pub fn horizontal_norm(&self) -> f64 {
        (self.p * self.p + self.q * self.q).sqrt()
    }
}

/// Horizontal pose of one robot: world position plus yaw.
///
/// Yaw is measured counterclockwise from world +x and kept in [-pi, pi).
/// Body pitch and roll are identically zero; the platform is passively
/// stable in both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseYaw {
    pub position: Vec3,
    pub yaw: f64,
}

impl PoseYaw {
    pub fn new(position: Vec3, yaw: f64) -> Self {
        PoseYaw { position, yaw: normalize_angle(yaw) }
    }

    /// Horizontal heading unit vector (cos yaw, sin yaw, 0).
    pub fn heading(&self) -> Vec3 {
        Vec3::new(self.yaw.cos(), self.yaw.sin(), 0.0)
    }
}

/// Wraps an angle into [-pi, pi).
pub fn normalize_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can return exactly 2*pi for inputs just below -pi due to
    // rounding, which would leave r == pi; fold that back.
    if r >= PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Rotates `v` by `alpha` radians about the world z axis, counterclockwise
/// when viewed from +z. The z component is untouched.
pub fn rotate_z(v: Vec3, alpha: f64) -> Vec3 {
    let (s, c) = alpha.sin_cos();
    Vec3::new(v.x * c - v.y * s, v.x * s + v.y * c, v.z)
}

/// Expresses a world-frame `target` point in `observer`'s body frame.
pub fn world_to_pqr(observer: &PoseYaw, target: Vec3) -> PqrPoint {
    let d = target - observer.position;
    let (s, c) = observer.yaw.sin_cos();
    PqrPoint {
        p: d.x * c + d.y * s,
        q: -d.x * s + d.y * c,
        r: -d.z,
    }
}

/// Inverse of [`world_to_pqr`]: body-frame point back to world coordinates.
pub fn pqr_to_world(observer: &PoseYaw, pt: PqrPoint) -> Vec3 {
    let (s, c) = observer.yaw.sin_cos();
    Vec3::new(
        observer.position.x + pt.p * c - pt.q * s,
        observer.position.y + pt.p * s + pt.q * c,
        observer.position.z - pt.r,
    )
}

/// Horizontal bearing of a body-frame point, in [-pi, pi); positive means
/// the target is to the observer's left.
///
/// Computed with the two-argument arctangent of (q, p) so the full circle
/// is covered, not just the front half-plane.
pub fn bearing_of(pt: &PqrPoint) -> Result<f64, GeometryError> {
    if pt.p == 0.0 && pt.q == 0.0 {
        return Err(GeometryError::UndefinedDirection);
    }
    Ok(normalize_angle(pt.q.atan2(pt.p)))
}

/// Vertical angle of a body-frame point, in (-pi/2, pi/2); positive means
/// the target is lower than the observer.
pub fn pitch_of(pt: &PqrPoint) -> Result<f64, GeometryError> {
    let horiz = pt.horizontal_norm();
    if horiz == 0.0 {
        return Err(GeometryError::UndefinedDirection);
    }
    Ok((pt.r / horiz).atan())
}
