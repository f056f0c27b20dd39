//! Scene-level density and emitted radiance at a point, summed over a set of
//! contributing primitives.
//!
//! Contributions with `sigma_l(x) < sigma_eps` are dropped exactly, inside the
//! sums, so the rendered field matches the truncated-support approximation
//! bit-for-bit and the truncated region has a well-defined zero gradient.

use crate::appearance;
use crate::scene::{mahalanobis, Scene};
use crate::{Rgb, Vec3};

/// Truncated density of a single primitive at `x`: zero below the threshold.
pub fn primitive_density(x: &Vec3, prim_index: usize, scene: &Scene) -> f64 {
    let prim = &scene.primitives[prim_index];
    let r = mahalanobis(x, prim, &scene.config);
    let sigma = prim.density() * scene.config.basis.eval(r);
    if sigma < scene.config.sigma_eps {
        0.0
    } else {
        sigma
    }
}

/// Total density over the contributor set.
pub fn density_at(x: &Vec3, contributors: &[u32], scene: &Scene) -> f64 {
    contributors
        .iter()
        .map(|&l| primitive_density(x, l as usize, scene))
        .sum()
}

/// Density and normalized emitted radiance in one pass. The radiance is the
/// density-weighted mean of the contributors' `c_l(d)`, so the emission term
/// `sigma * c` equals the plain weighted sum of per-primitive emissions.
/// A zero denominator yields `(0, [0,0,0])`: the sample then contributes
/// nothing downstream.
pub fn sample_field(x: &Vec3, d: &Vec3, contributors: &[u32], scene: &Scene) -> (f64, Rgb) {
    let mut sigma = 0.0;
    let mut emission = [0.0; 3];
    for &l in contributors {
        let w = primitive_density(x, l as usize, scene);
        if w == 0.0 {
            continue;
        }
        let c = appearance::eval_radiance(&scene.primitives[l as usize], &scene.config, d);
        sigma += w;
        for ch in 0..3 {
            emission[ch] += c[ch] * w;
        }
    }
    if sigma > 0.0 {
        let c = [
            emission[0] / sigma,
            emission[1] / sigma,
            emission[2] / sigma,
        ];
        (sigma, c)
    } else {
        (0.0, [0.0; 3])
    }
}

/// Normalized emitted radiance at `x` in direction `d`; a convex combination
/// of the contributors' radiances.
pub fn radiance_at(x: &Vec3, d: &Vec3, contributors: &[u32], scene: &Scene) -> Rgb {
    sample_field(x, d, contributors, scene).1
}
