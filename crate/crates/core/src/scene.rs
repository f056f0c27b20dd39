//! Primitive parameters, activations, covariance construction, and scene
//! initialization from a point cloud.
//!
//! All optimizable parameters are stored *raw* (unconstrained); constrained
//! quantities are produced by activations: `exp` for scales, `softplus` for
//! density and lobe sharpness, normalization for quaternions and lobe axes.

use crate::appearance;
use crate::basis::BasisFamily;
use crate::{Error, Mat3, Result, Rgb, Vec3};
use serde::{Deserialize, Serialize};

/// Number of spherical-harmonic coefficients (degree 2, bands 0..=2).
pub const MAX_SH_COEFFS: usize = 9;
pub const MAX_SH_DEGREE: usize = 2;
/// Number of spherical-Gaussian lobes.
pub const MAX_SG_LOBES: usize = 7;

/// Raw parameters per primitive: 3 mu + 4 quat + 3 scale + 1 density
/// + 27 SH + 21 SG amplitude + 7 sharpness + 21 lobe axis.
pub const N_PARAMS: usize = 87;

pub const IDX_MU: std::ops::Range<usize> = 0..3;
pub const IDX_QUAT: std::ops::Range<usize> = 3..7;
pub const IDX_SCALE: std::ops::Range<usize> = 7..10;
pub const IDX_DENSITY: usize = 10;
pub const IDX_SH: std::ops::Range<usize> = 11..38;
pub const IDX_SG_AMP: std::ops::Range<usize> = 38..59;
pub const IDX_SG_SHARP: std::ops::Range<usize> = 59..66;
pub const IDX_SG_AXES: std::ops::Range<usize> = 66..87;

/// Per-primitive gradient (or Adam moment) storage, mirroring the raw layout.
pub type PrimParams = [f64; N_PARAMS];

/// Optimizer parameter groups, each with its own learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    Position,
    Quaternion,
    Scale,
    Density,
    /// Band-0 SH coefficients (the view-independent color).
    ShDc,
    /// Band-1 and band-2 SH coefficients.
    ShRest,
    SgAmplitude,
    SgSharpness,
    SgAxis,
}

impl ParamGroup {
    pub fn name(self) -> &'static str {
        match self {
            ParamGroup::Position => "position",
            ParamGroup::Quaternion => "quaternion",
            ParamGroup::Scale => "scale",
            ParamGroup::Density => "density",
            ParamGroup::ShDc => "sh_dc",
            ParamGroup::ShRest => "sh_rest",
            ParamGroup::SgAmplitude => "sg_amplitude",
            ParamGroup::SgSharpness => "sg_sharpness",
            ParamGroup::SgAxis => "sg_axis",
        }
    }
}

/// Group of the flat parameter index `i` (see the `IDX_*` ranges).
pub fn param_group(i: usize) -> ParamGroup {
    if IDX_MU.contains(&i) {
        ParamGroup::Position
    } else if IDX_QUAT.contains(&i) {
        ParamGroup::Quaternion
    } else if IDX_SCALE.contains(&i) {
        ParamGroup::Scale
    } else if i == IDX_DENSITY {
        ParamGroup::Density
    } else if IDX_SH.contains(&i) {
        if i < IDX_SH.start + 3 {
            ParamGroup::ShDc
        } else {
            ParamGroup::ShRest
        }
    } else if IDX_SG_AMP.contains(&i) {
        ParamGroup::SgAmplitude
    } else if IDX_SG_SHARP.contains(&i) {
        ParamGroup::SgSharpness
    } else if IDX_SG_AXES.contains(&i) {
        ParamGroup::SgAxis
    } else {
        panic!("parameter index {i} out of range")
    }
}

/// Whether flat parameter `i` is unlocked under the config's progressive
/// appearance schedule. Locked parameters evaluate to zero contribution and
/// receive exactly zero gradient.
pub fn param_is_active(i: usize, config: &SceneConfig) -> bool {
    if IDX_SH.contains(&i) {
        let coeff = (i - IDX_SH.start) / 3;
        sh_band(coeff) <= config.active_sh_degree
    } else if IDX_SG_AMP.contains(&i) {
        (i - IDX_SG_AMP.start) / 3 < config.active_sg_count
    } else if IDX_SG_SHARP.contains(&i) {
        i - IDX_SG_SHARP.start < config.active_sg_count
    } else if IDX_SG_AXES.contains(&i) {
        (i - IDX_SG_AXES.start) / 3 < config.active_sg_count
    } else {
        true
    }
}

/// Band (degree) of SH coefficient index `c` in (j, m) order with m ascending:
/// c = j^2 + j + m.
pub fn sh_band(c: usize) -> usize {
    (c as f64).sqrt() as usize
}

// --- activations -----------------------------------------------------------

/// Numerically stable `ln(1 + e^x)`. Strictly positive, finite gradients.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Inverse of [`softplus`]: the raw value whose activation is `y > 0`.
pub fn softplus_inv(y: f64) -> f64 {
    // ln(e^y - 1), stable for large y via y + ln(1 - e^-y)
    y + (-(-y).exp()).ln_1p()
}

/// Logistic function; the derivative of [`softplus`].
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

// --- quaternions ------------------------------------------------------------

/// Rotation matrix of a unit quaternion `(w, x, y, z)`.
pub fn rotation_from_unit_quat(q: &[f64; 4]) -> Mat3 {
    let [w, x, y, z] = *q;
    Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Normalizes a quaternion, rejecting zero or non-finite input.
pub fn normalize_quat(q: &[f64; 4]) -> Result<[f64; 4]> {
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteParam("quaternion"));
    }
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    if n < 1e-12 {
        return Err(Error::DegenerateRotation);
    }
    Ok([q[0] / n, q[1] / n, q[2] / n, q[3] / n])
}

// --- primitive ---------------------------------------------------------------

/// One basis function: geometry (mu, quat, scale), density, and appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrimitive {
    pub mu: Vec3,
    /// Rotation as an unnormalized quaternion `(w, x, y, z)`; renormalized
    /// whenever a rotation matrix is built.
    pub quat: [f64; 4],
    /// Log-domain scales; activated scale is `exp(scale_raw)` per axis.
    pub scale_raw: [f64; 3],
    /// Unconstrained density; activated as `softplus(density_raw)`.
    pub density_raw: f64,
    /// Real SH coefficients, (j, m) order with m ascending, RGB per coefficient.
    pub sh_coeffs: [Rgb; MAX_SH_COEFFS],
    pub sg_amplitudes: [Rgb; MAX_SG_LOBES],
    /// Unconstrained sharpness; activated as `softplus`.
    pub sg_sharpness_raw: [f64; MAX_SG_LOBES],
    /// Unnormalized lobe axes; activated direction is `v / |v|`.
    pub sg_axes_raw: [[f64; 3]; MAX_SG_LOBES],
}

impl GaussianPrimitive {
    /// A neutral primitive: identity rotation, unit scale, mid density, no color.
    pub fn neutral() -> Self {
        let mut axes = [[0.0; 3]; MAX_SG_LOBES];
        for (j, axis) in axes.iter_mut().enumerate() {
            *axis = default_lobe_axis(j);
        }
        GaussianPrimitive {
            mu: Vec3::zeros(),
            quat: [1.0, 0.0, 0.0, 0.0],
            scale_raw: [0.0; 3],
            density_raw: softplus_inv(0.5),
            sh_coeffs: [[0.0; 3]; MAX_SH_COEFFS],
            sg_amplitudes: [[0.0; 3]; MAX_SG_LOBES],
            sg_sharpness_raw: [softplus_inv(1.0); MAX_SG_LOBES],
            sg_axes_raw: axes,
        }
    }

    /// Activated per-axis scale. Isotropic scenes tie all three axes to the
    /// first raw component (the per-primitive shape parameter).
    pub fn activated_scale(&self, anisotropic: bool) -> Vec3 {
        if anisotropic {
            Vec3::new(
                self.scale_raw[0].exp(),
                self.scale_raw[1].exp(),
                self.scale_raw[2].exp(),
            )
        } else {
            let r = self.scale_raw[0].exp();
            Vec3::new(r, r, r)
        }
    }

    /// Activated density sigma-tilde, strictly positive.
    pub fn density(&self) -> f64 {
        softplus(self.density_raw)
    }

    /// Activated lobe sharpness, non-negative.
    pub fn sg_sharpness(&self, j: usize) -> f64 {
        softplus(self.sg_sharpness_raw[j])
    }

    /// Activated unit lobe direction.
    pub fn sg_axis(&self, j: usize) -> Vec3 {
        let v = Vec3::from_column_slice(&self.sg_axes_raw[j]);
        let n = v.norm();
        debug_assert!(n > 0.0, "lobe axis collapsed to zero");
        v / n
    }

    pub fn to_flat(&self) -> PrimParams {
        let mut p = [0.0; N_PARAMS];
        p[0..3].copy_from_slice(self.mu.as_slice());
        p[IDX_QUAT].copy_from_slice(&self.quat);
        p[IDX_SCALE].copy_from_slice(&self.scale_raw);
        p[IDX_DENSITY] = self.density_raw;
        for (c, rgb) in self.sh_coeffs.iter().enumerate() {
            p[IDX_SH.start + 3 * c..IDX_SH.start + 3 * c + 3].copy_from_slice(rgb);
        }
        for (j, rgb) in self.sg_amplitudes.iter().enumerate() {
            p[IDX_SG_AMP.start + 3 * j..IDX_SG_AMP.start + 3 * j + 3].copy_from_slice(rgb);
        }
        p[IDX_SG_SHARP].copy_from_slice(&self.sg_sharpness_raw);
        for (j, a) in self.sg_axes_raw.iter().enumerate() {
            p[IDX_SG_AXES.start + 3 * j..IDX_SG_AXES.start + 3 * j + 3].copy_from_slice(a);
        }
        p
    }

    pub fn from_flat(p: &PrimParams) -> Self {
        let mut prim = GaussianPrimitive::neutral();
        prim.mu = Vec3::new(p[0], p[1], p[2]);
        prim.quat.copy_from_slice(&p[IDX_QUAT]);
        prim.scale_raw.copy_from_slice(&p[IDX_SCALE]);
        prim.density_raw = p[IDX_DENSITY];
        for c in 0..MAX_SH_COEFFS {
            prim.sh_coeffs[c]
                .copy_from_slice(&p[IDX_SH.start + 3 * c..IDX_SH.start + 3 * c + 3]);
        }
        for j in 0..MAX_SG_LOBES {
            prim.sg_amplitudes[j]
                .copy_from_slice(&p[IDX_SG_AMP.start + 3 * j..IDX_SG_AMP.start + 3 * j + 3]);
        }
        prim.sg_sharpness_raw.copy_from_slice(&p[IDX_SG_SHARP]);
        for j in 0..MAX_SG_LOBES {
            prim.sg_axes_raw[j]
                .copy_from_slice(&p[IDX_SG_AXES.start + 3 * j..IDX_SG_AXES.start + 3 * j + 3]);
        }
        prim
    }
}

/// Evenly spread unit directions used to seed lobe axes (a zero axis cannot
/// be normalized, so fresh primitives need distinct nonzero seeds).
pub fn default_lobe_axis(j: usize) -> [f64; 3] {
    // golden-angle spiral on the sphere
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    let n = MAX_SG_LOBES as f64;
    let z = 1.0 - 2.0 * (j as f64 + 0.5) / n;
    let rho = (1.0 - z * z).sqrt();
    let phi = golden * j as f64;
    [rho * phi.cos(), rho * phi.sin(), z]
}

// --- covariance ---------------------------------------------------------------

/// Builds `Sigma = R(q) diag(s^2) R(q)^T` and its inverse from a quaternion and
/// positive scales. The inverse is formed from the same factors, so
/// `Sigma * Sigma_inv` is the identity to machine precision.
pub fn covariance_from(quat: &[f64; 4], scale: &Vec3) -> Result<(Mat3, Mat3)> {
    if !(scale.x.is_finite() && scale.y.is_finite() && scale.z.is_finite()) {
        return Err(Error::NonFiniteParam("scale"));
    }
    if scale.x <= 0.0 || scale.y <= 0.0 || scale.z <= 0.0 {
        return Err(Error::NonFiniteParam("scale (must be positive)"));
    }
    let q = normalize_quat(quat)?;
    let r = rotation_from_unit_quat(&q);
    let s2 = Mat3::from_diagonal(&Vec3::new(
        scale.x * scale.x,
        scale.y * scale.y,
        scale.z * scale.z,
    ));
    let s2_inv = Mat3::from_diagonal(&Vec3::new(
        1.0 / (scale.x * scale.x),
        1.0 / (scale.y * scale.y),
        1.0 / (scale.z * scale.z),
    ));
    let sigma = r * s2 * r.transpose();
    let sigma_inv = r * s2_inv * r.transpose();
    Ok((sigma, sigma_inv))
}

/// Mahalanobis distance of `x` from the primitive's center under its
/// (possibly isotropic) covariance.
pub fn mahalanobis(x: &Vec3, prim: &GaussianPrimitive, config: &SceneConfig) -> f64 {
    let q = normalize_quat(&prim.quat).expect("invalid quaternion");
    let rot = rotation_from_unit_quat(&q);
    let s = prim.activated_scale(config.anisotropic);
    let local = rot.transpose() * (x - prim.mu);
    let u = Vec3::new(local.x / s.x, local.y / s.y, local.z / s.z);
    u.norm()
}

// --- scene ---------------------------------------------------------------------

/// Global scene configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub basis: BasisFamily,
    /// Elliptical (per-axis scales + rotation) vs radial (single shape
    /// parameter per primitive) basis evaluation.
    pub anisotropic: bool,
    /// Density truncation threshold; contributions below it are exactly zero.
    pub sigma_eps: f64,
    /// Currently unlocked SH degree (0..=2).
    pub active_sh_degree: usize,
    /// Currently unlocked SG lobe count (0..=7).
    pub active_sg_count: usize,
    /// Background color composited behind every ray.
    pub background: Rgb,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            basis: BasisFamily::Gaussian,
            anisotropic: true,
            sigma_eps: 0.1,
            active_sh_degree: 0,
            active_sg_count: 0,
            background: [1.0, 1.0, 1.0],
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_eps > 0.0) {
            return Err(Error::Config(format!(
                "sigma_eps must be positive, got {}",
                self.sigma_eps
            )));
        }
        if self.active_sh_degree > MAX_SH_DEGREE {
            return Err(Error::Config(format!(
                "active_sh_degree {} exceeds {MAX_SH_DEGREE}",
                self.active_sh_degree
            )));
        }
        if self.active_sg_count > MAX_SG_LOBES {
            return Err(Error::Config(format!(
                "active_sg_count {} exceeds {MAX_SG_LOBES}",
                self.active_sg_count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub primitives: Vec<GaussianPrimitive>,
    pub config: SceneConfig,
}

pub const DEFAULT_INITIAL_DENSITY: f64 = 0.5;

/// Builds one primitive per input point: identity rotation, all scales set to
/// the mean distance to the point's three nearest neighbors, band-0 SH chosen
/// so the view-independent color reproduces the point color, everything else
/// zero/locked.
pub fn init_from_point_cloud(
    points: &[(Vec3, Rgb)],
    config: SceneConfig,
    initial_density: f64,
) -> Result<Scene> {
    if points.len() < 4 {
        return Err(Error::TooFewPoints(points.len()));
    }
    config.validate()?;
    for (p, _) in points {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(Error::NonFiniteParam("point position"));
        }
    }

    let positions: Vec<Vec3> = points.iter().map(|(p, _)| *p).collect();
    let nn = mean_3nn_distances(&positions);

    let density_raw = softplus_inv(initial_density);
    let primitives = points
        .iter()
        .zip(nn)
        .map(|((pos, rgb), d)| {
            // exact duplicates give d = 0; floor it so log-scale stays finite
            let d = d.max(1e-12);
            let mut prim = GaussianPrimitive::neutral();
            prim.mu = *pos;
            prim.scale_raw = [d.ln(); 3];
            prim.density_raw = density_raw;
            for ch in 0..3 {
                prim.sh_coeffs[0][ch] = rgb[ch] / appearance::SH_C0;
            }
            prim
        })
        .collect();

    Ok(Scene { primitives, config })
}

/// Mean distance from each point to its three nearest neighbors (self excluded
/// by index, so exact duplicates of *other* points still count as neighbors).
pub fn mean_3nn_distances(points: &[Vec3]) -> Vec<f64> {
    assert!(points.len() >= 4);
    if points.len() <= 512 {
        return brute_force_3nn(points);
    }
    grid_3nn(points)
}

fn brute_force_3nn(points: &[Vec3]) -> Vec<f64> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut best = [f64::INFINITY; 3];
            for (j, q) in points.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d2 = (p - q).norm_squared();
                if d2 < best[2] {
                    best[2] = d2;
                    if best[2] < best[1] {
                        best.swap(1, 2);
                    }
                    if best[1] < best[0] {
                        best.swap(0, 1);
                    }
                }
            }
            (best[0].sqrt() + best[1].sqrt() + best[2].sqrt()) / 3.0
        })
        .collect()
}

fn grid_3nn(points: &[Vec3]) -> Vec<f64> {
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let extent = hi - lo;
    let volume = (extent.x * extent.y * extent.z).max(1e-30);
    let cell = (volume / points.len() as f64).cbrt().max(1e-12) * 2.0;
    let dims = |v: f64| ((v / cell).floor() as i64).max(0);
    let key = |p: &Vec3| (dims(p.x - lo.x), dims(p.y - lo.y), dims(p.z - lo.z));

    let mut grid: std::collections::HashMap<(i64, i64, i64), Vec<u32>> =
        std::collections::HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i as u32);
    }

    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (cx, cy, cz) = key(p);
            let mut best = [f64::INFINITY; 3];
            let mut ring = 0i64;
            loop {
                let mut any_cell = false;
                for dx in -ring..=ring {
                    for dy in -ring..=ring {
                        for dz in -ring..=ring {
                            if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                                continue;
                            }
                            let Some(ids) = grid.get(&(cx + dx, cy + dy, cz + dz)) else {
                                continue;
                            };
                            any_cell = true;
                            for &j in ids {
                                if j as usize == i {
                                    continue;
                                }
                                let d2 = (p - points[j as usize]).norm_squared();
                                if d2 < best[2] {
                                    best[2] = d2;
                                    if best[2] < best[1] {
                                        best.swap(1, 2);
                                    }
                                    if best[1] < best[0] {
                                        best.swap(0, 1);
                                    }
                                }
                            }
                        }
                    }
                }
                // done once the current 3rd-best cannot be beaten by farther rings
                let ring_dist = (ring as f64) * cell;
                if best[2].is_finite() && ring_dist * ring_dist > best[2] {
                    break;
                }
                // safety: expanded beyond every occupied cell
                if !any_cell && ring > 1 && ring_dist * ring_dist > volume.cbrt().powi(2) * 16.0 {
                    let all = brute_force_3nn_one(points, i);
                    return all;
                }
                ring += 1;
            }
            (best[0].sqrt() + best[1].sqrt() + best[2].sqrt()) / 3.0
        })
        .collect()
}

fn brute_force_3nn_one(points: &[Vec3], i: usize) -> f64 {
    let p = points[i];
    let mut best = [f64::INFINITY; 3];
    for (j, q) in points.iter().enumerate() {
        if i == j {
            continue;
        }
        let d2 = (p - q).norm_squared();
        if d2 < best[2] {
            best[2] = d2;
            if best[2] < best[1] {
                best.swap(1, 2);
            }
            if best[1] < best[0] {
                best.swap(0, 1);
            }
        }
    }
    (best[0].sqrt() + best[1].sqrt() + best[2].sqrt()) / 3.0
}
