//! Pinhole camera model and field-of-view depth normalization.
//!
//! The camera is a zero-skew, square-pixel pinhole described by a single
//! focal length `f` and a principal point `(cx, cy)`, all in pixels. Depths
//! are metric millimeters along the optical axis.
//!
//! A metric depth `Z` is stored and learned in its FoV-normalized form
//!
//! ```text
//! Z~ = Z * w / f
//! ```
//!
//! where `w` is the image width. Because `w / f` is the ratio of sensor width
//! to focal length it survives any uniform resize of the image, so normalized
//! depths computed at different input resolutions agree.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub f: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(rename = "w")]
    pub width: f64,
    #[serde(rename = "h")]
    pub height: f64,
}

impl CameraIntrinsics {
    pub fn new(f: f64, cx: f64, cy: f64, width: f64, height: f64) -> Result<Self, GeometryError> {
        let cam = Self {
            f,
            cx,
            cy,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Intrinsics for an image of unknown calibration: the focal length is
    /// taken to equal the image width and the principal point sits at the
    /// image center.
    pub fn with_default_focal(width: f64, height: f64) -> Result<Self, GeometryError> {
        Self::new(width, width / 2.0, height / 2.0, width, height)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let fields = [
            ("f", self.f),
            ("cx", self.cx),
            ("cy", self.cy),
            ("w", self.width),
            ("h", self.height),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics(format!("{name} is not finite")));
        }
        if self.f <= 0.0 || self.width <= 0.0 || self.height <= 0.0 {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "f, w and h must be positive (f={}, w={}, h={})",
                self.f, self.width, self.height
            )));
        }
        Ok(())
    }

    /// `w / f`, the horizontal field-of-view ratio.
    pub fn fov_ratio(&self) -> f64 {
        self.width / self.f
    }

    /// The same camera after resizing the image uniformly by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            f: self.f * s,
            cx: self.cx * s,
            cy: self.cy * s,
            width: self.width * s,
            height: self.height * s,
        }
    }

    pub fn contains(&self, p: Point2D) -> bool {
        p.u >= 0.0 && p.v >= 0.0 && p.u <= self.width - 1.0 && p.v <= self.height - 1.0
    }
}

/// Continuous pixel coordinates. Pixel `(i, j)` has its center at `u = i`, `v = j`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2D {
    pub u: f64,
    pub v: f64,
}

impl Point2D {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn distance(&self, other: Point2D) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.u * s, self.v * s)
    }
}

/// Camera-frame point in millimeters, `z` along the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3D {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "Z")]
    pub z: f64,
}

impl Point3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: Point3D) -> f64 {
        (*self - other).norm()
    }

    pub fn dot(&self, other: Point3D) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: Point3D) -> Point3D {
        Point3D::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Point3D {
    type Output = Point3D;
    fn add(self, rhs: Point3D) -> Point3D {
        Point3D::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3D {
    type Output = Point3D;
    fn sub(self, rhs: Point3D) -> Point3D {
        Point3D::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3D {
    type Output = Point3D;
    fn mul(self, rhs: f64) -> Point3D {
        Point3D::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

/// FoV-normalized depth `Z * w / f`, in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizedDepth(pub f64);

impl NormalizedDepth {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn normalize_depth(z: f64, cam: &CameraIntrinsics) -> Result<NormalizedDepth, GeometryError> {
    if !(z > 0.0) {
        return Err(GeometryError::NonPositiveDepth(z));
    }
    Ok(NormalizedDepth(z * cam.width / cam.f))
}

pub fn denormalize_depth(zt: NormalizedDepth, cam: &CameraIntrinsics) -> Result<f64, GeometryError> {
    if !(zt.0 > 0.0) {
        return Err(GeometryError::NonPositiveDepth(zt.0));
    }
    Ok(zt.0 * cam.f / cam.width)
}

/// Lifts a pixel to the camera-frame point at depth `z`: `z * K^-1 [u, v, 1]^T`.
pub fn back_project(p: Point2D, z: f64, cam: &CameraIntrinsics) -> Result<Point3D, GeometryError> {
    if !(z > 0.0) {
        return Err(GeometryError::NonPositiveDepth(z));
    }
    Ok(Point3D::new(z * (p.u - cam.cx) / cam.f, z * (p.v - cam.cy) / cam.f, z))
}

pub fn project(q: Point3D, cam: &CameraIntrinsics) -> Result<Point2D, GeometryError> {
    if !(q.z > 0.0) {
        return Err(GeometryError::NonPositiveDepth(q.z));
    }
    Ok(Point2D::new(cam.f * q.x / q.z + cam.cx, cam.f * q.y / q.z + cam.cy))
}
