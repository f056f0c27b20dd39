//! Direction-dependent emitted radiance: real spherical harmonics up to
//! degree 2 plus up to 7 spherical-Gaussian lobes per primitive.
//!
//! SH convention: real, orthonormal, no Condon-Shortley phase, coefficients
//! ordered by (band j, order m) with m ascending, so `Y00 = 1/(2*sqrt(pi))`,
//! band 1 is `c1*(y, z, x)` and band 2 is
//! `(c2*xy, c2*yz, c20*(3z^2-1), c2*xz, c22*(x^2-y^2))`.

use crate::scene::{
    sigmoid, GaussianPrimitive, PrimParams, SceneConfig, IDX_SG_AMP, IDX_SG_AXES, IDX_SG_SHARP,
    IDX_SH, MAX_SH_COEFFS,
};
use crate::{Rgb, Vec3};

/// `Y00`, the constant band-0 basis value.
pub const SH_C0: f64 = 0.282_094_791_773_878_14;
const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: f64 = 1.092_548_430_592_079_2;
const SH_C2_0: f64 = 0.315_391_565_252_520_05;
const SH_C2_2: f64 = 0.546_274_215_296_039_6;

/// Number of coefficients for SH of maximum band `degree`.
pub fn sh_coeff_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// Evaluates the real SH basis at unit direction `d`; entries beyond the
/// requested degree are zero.
pub fn sh_basis(degree: usize, d: &Vec3) -> [f64; MAX_SH_COEFFS] {
    debug_assert!((d.norm() - 1.0).abs() < 1e-6);
    let (x, y, z) = (d.x, d.y, d.z);
    let mut b = [0.0; MAX_SH_COEFFS];
    b[0] = SH_C0;
    if degree >= 1 {
        b[1] = SH_C1 * y;
        b[2] = SH_C1 * z;
        b[3] = SH_C1 * x;
    }
    if degree >= 2 {
        b[4] = SH_C2 * x * y;
        b[5] = SH_C2 * y * z;
        b[6] = SH_C2_0 * (3.0 * z * z - 1.0);
        b[7] = SH_C2 * x * z;
        b[8] = SH_C2_2 * (x * x - y * y);
    }
    b
}

/// Low-frequency radiance: linear in the coefficients.
pub fn eval_sh(coeffs: &[Rgb; MAX_SH_COEFFS], degree: usize, d: &Vec3) -> Rgb {
    let basis = sh_basis(degree, d);
    let n = sh_coeff_count(degree);
    let mut out = [0.0; 3];
    for c in 0..n {
        for ch in 0..3 {
            out[ch] += coeffs[c][ch] * basis[c];
        }
    }
    out
}

/// High-frequency radiance: a sum of lobes `k * exp(lambda * (d.p - 1))`.
/// Each lobe's scalar factor lies in (0, 1] for `lambda >= 0` and is maximal
/// when `d` aligns with the lobe axis.
pub fn eval_sg(
    amplitudes: &[Rgb],
    sharpness: &[f64],
    axes: &[Vec3],
    count: usize,
    d: &Vec3,
) -> Rgb {
    let mut out = [0.0; 3];
    for j in 0..count {
        let factor = (sharpness[j] * (d.dot(&axes[j]) - 1.0)).exp();
        for ch in 0..3 {
            out[ch] += amplitudes[j][ch] * factor;
        }
    }
    out
}

/// Full emitted radiance of one primitive: gated SH plus gated SG. Locked
/// (not yet unlocked) terms contribute exactly zero.
pub fn eval_radiance(prim: &GaussianPrimitive, config: &SceneConfig, d: &Vec3) -> Rgb {
    let mut out = eval_sh(&prim.sh_coeffs, config.active_sh_degree, d);
    for j in 0..config.active_sg_count {
        let factor = (prim.sg_sharpness(j) * (d.dot(&prim.sg_axis(j)) - 1.0)).exp();
        for ch in 0..3 {
            out[ch] += prim.sg_amplitudes[j][ch] * factor;
        }
    }
    out
}

/// Accumulates `dL/d(raw appearance params)` given `upstream = dL/d c_l(d)`,
/// chaining through the sharpness softplus and the axis normalization.
/// Locked coefficients receive nothing.
pub fn accumulate_radiance_gradients(
    prim: &GaussianPrimitive,
    config: &SceneConfig,
    d: &Vec3,
    upstream: &Rgb,
    grads: &mut PrimParams,
) {
    let basis = sh_basis(config.active_sh_degree, d);
    let n = sh_coeff_count(config.active_sh_degree);
    for c in 0..n {
        for ch in 0..3 {
            grads[IDX_SH.start + 3 * c + ch] += upstream[ch] * basis[c];
        }
    }

    for j in 0..config.active_sg_count {
        let lambda = prim.sg_sharpness(j);
        let v = Vec3::from_column_slice(&prim.sg_axes_raw[j]);
        let v_norm = v.norm();
        let p = v / v_norm;
        let dot = d.dot(&p);
        let factor = (lambda * (dot - 1.0)).exp();

        // amplitude: linear
        for ch in 0..3 {
            grads[IDX_SG_AMP.start + 3 * j + ch] += upstream[ch] * factor;
        }

        // shared scalar: upstream . (k * factor)
        let up_dot_k = (0..3).map(|ch| upstream[ch] * prim.sg_amplitudes[j][ch]).sum::<f64>();

        // sharpness through softplus
        let d_lambda = up_dot_k * factor * (dot - 1.0);
        grads[IDX_SG_SHARP.start + j] += d_lambda * sigmoid(prim.sg_sharpness_raw[j]);

        // axis through normalization: d(dot)/dv = (I - p p^T) d / |v|
        let d_dot = up_dot_k * factor * lambda;
        let tangent = (d - p * dot) / v_norm;
        for ch in 0..3 {
            grads[IDX_SG_AXES.start + 3 * j + ch] += d_dot * tangent[ch];
        }
    }
}
