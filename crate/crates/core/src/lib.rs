//! Volumetric ray casting of irregularly distributed anisotropic Gaussian
//! primitives, with spherical-harmonic + spherical-Gaussian emitted radiance,
//! a BVH over truncated ellipsoid supports, and reverse-mode gradients for
//! fitting all primitive parameters to posed images.
//!
//! The crate is organized bottom-up:
//!
//! * [`basis`] — the radial/elliptical basis families and their truncation radii
//! * [`appearance`] — direction-dependent emitted radiance per primitive
//! * [`scene`] — primitives, activations, covariance, point-cloud initialization
//! * [`field`] — scene-level density and normalized radiance
//! * [`bvh`] — ellipsoid supports, tight AABBs, segment queries
//! * [`camera`] / [`render`] — ray generation and slab-by-slab integration
//! * [`loss`] / [`backward`] / [`optim`] / [`adaptive`] / [`train`] — fitting
//! * [`ply`] / [`dataset`] / [`checkpoint`] / [`img`] / [`eval`] — pipeline I/O
//! * [`synth`] — synthetic scenes and datasets for tests, benches and self-checks

pub mod appearance;
pub mod basis;
pub mod bvh;
pub mod camera;
pub mod dataset;
pub mod error;
pub mod field;
pub mod img;
pub mod render;
pub mod scene;
pub mod synth;

pub use error::{Error, Result};

/// 3-component column vector in scene units.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3x3 matrix (rotations, covariances).
pub type Mat3 = nalgebra::Matrix3<f64>;
/// Linear RGB triple. Unbounded until final image write-out.
pub type Rgb = [f64; 3];
