//! Synthetic scenes, cameras and datasets for tests, benches and the
//! self-check command.

use crate::appearance::SH_C0;
use crate::basis::BasisFamily;
use crate::bvh::EllipsoidBvh;
use crate::camera::Camera;
use crate::dataset::{Dataset, Split, View};
use crate::render::{render_image, RenderConfig};
use crate::scene::{softplus_inv, GaussianPrimitive, Scene, SceneConfig};
use crate::{Result, Rgb, Vec3};
use rand::Rng;

/// A random blob cloud in the unit-ish ball. Colors are convex combinations
/// of [0,1] RGB (band-0 only) unless `view_dependent`, which adds band-1/2 SH
/// and a few SG lobes and unlocks them in the config.
pub fn random_scene(rng: &mut impl Rng, n: usize, view_dependent: bool) -> Scene {
    random_scene_with(rng, n, view_dependent, BasisFamily::Gaussian, 0.01)
}

pub fn random_scene_with(
    rng: &mut impl Rng,
    n: usize,
    view_dependent: bool,
    basis: BasisFamily,
    sigma_eps: f64,
) -> Scene {
    let mut config = SceneConfig::default();
    config.basis = basis;
    config.sigma_eps = sigma_eps;
    config.background = [1.0, 1.0, 1.0];
    if view_dependent {
        config.active_sh_degree = 2;
        config.active_sg_count = 3;
    }

    let primitives = (0..n)
        .map(|_| {
            let mut p = GaussianPrimitive::neutral();
            p.mu = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            p.quat = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            if p.quat.iter().map(|v| v * v).sum::<f64>() < 1e-3 {
                p.quat = [1.0, 0.0, 0.0, 0.0];
            }
            p.scale_raw = [
                rng.gen_range(0.08f64..0.35).ln(),
                rng.gen_range(0.08f64..0.35).ln(),
                rng.gen_range(0.08f64..0.35).ln(),
            ];
            p.density_raw = softplus_inv(rng.gen_range(0.5..4.0));
            for ch in 0..3 {
                p.sh_coeffs[0][ch] = rng.gen_range(0.0..1.0) / SH_C0;
            }
            if view_dependent {
                for c in 1..9 {
                    for ch in 0..3 {
                        p.sh_coeffs[c][ch] = rng.gen_range(-0.15..0.15);
                    }
                }
                for j in 0..3 {
                    for ch in 0..3 {
                        p.sg_amplitudes[j][ch] = rng.gen_range(0.0..0.3);
                    }
                    p.sg_sharpness_raw[j] = softplus_inv(rng.gen_range(2.0..15.0));
                    p.sg_axes_raw[j] = [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ];
                    if p.sg_axes_raw[j].iter().map(|v| v * v).sum::<f64>() < 1e-3 {
                        p.sg_axes_raw[j] = [0.0, 0.0, 1.0];
                    }
                }
            }
            p
        })
        .collect();

    Scene { primitives, config }
}

/// Camera on a sphere of `radius` around the origin, looking at the origin.
pub fn orbit_camera(
    width: u32,
    height: u32,
    fov_deg: f64,
    radius: f64,
    azimuth: f64,
    elevation: f64,
) -> Camera {
    let fx = 0.5 * width as f64 / (0.5 * fov_deg.to_radians()).tan();
    let position = Vec3::new(
        radius * elevation.cos() * azimuth.sin(),
        radius * elevation.sin(),
        radius * elevation.cos() * azimuth.cos(),
    );
    Camera::look_at(
        fx,
        width,
        height,
        position,
        Vec3::zeros(),
        Vec3::new(0.0, 1.0, 0.0),
    )
    .expect("orbit camera construction")
}

/// Roughly uniform orbit poses (golden-angle spiral, elevations away from the
/// poles).
pub fn orbit_poses(count: usize, width: u32, height: u32, fov_deg: f64, radius: f64) -> Vec<Camera> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..count)
        .map(|i| {
            let frac = (i as f64 + 0.5) / count as f64;
            let elevation = (1.2 * (frac - 0.5)).asin().clamp(-0.9, 0.9);
            let azimuth = golden * i as f64;
            orbit_camera(width, height, fov_deg, radius, azimuth, elevation)
        })
        .collect()
}

/// The fixed toy scene used by convergence tests and the self-check command:
/// `n` known Gaussians in a ball of radius ~0.8 with smooth colors.
pub fn toy_scene(rng: &mut impl Rng, n: usize, view_dependent: bool) -> Scene {
    let mut scene = random_scene(rng, n, view_dependent);
    // denser, chunkier blobs than the generic random scene so the object
    // occludes itself and early termination has something to do
    for p in scene.primitives.iter_mut() {
        p.mu *= 0.8;
        let s = rng.gen_range(0.15f64..0.3);
        p.scale_raw = [
            (s * rng.gen_range(0.7..1.4)).ln(),
            (s * rng.gen_range(0.7..1.4)).ln(),
            (s * rng.gen_range(0.7..1.4)).ln(),
        ];
        p.density_raw = softplus_inv(rng.gen_range(4.0..12.0));
    }
    scene.config.sigma_eps = 0.02;
    scene
}

/// Renders ground-truth images of `scene` from orbit poses and packages them
/// as a dataset with the requested train/test split sizes.
pub fn render_dataset(
    scene: &Scene,
    train: usize,
    test: usize,
    width: u32,
    height: u32,
    config: &RenderConfig,
) -> Result<Dataset> {
    let bvh = EllipsoidBvh::build(scene);
    let cameras = orbit_poses(train + test, width, height, 50.0, 3.0);
    let mut views = Vec::new();
    for (i, camera) in cameras.into_iter().enumerate() {
        let (image, _) = render_image(&camera, scene, &bvh, config)?;
        let image = image.clamped();
        let split = if i < train { Split::Train } else { Split::Test };
        views.push(View {
            camera,
            image,
            split,
            name: format!("synth_{i}"),
        });
    }
    Ok(Dataset { views })
}

/// Jittered point cloud sampled near the scene's primitive centers, the kind
/// of sparse prior a real capture pipeline would produce.
pub fn jittered_point_cloud(
    rng: &mut impl Rng,
    scene: &Scene,
    count: usize,
    jitter: f64,
) -> Vec<(Vec3, Rgb)> {
    let n = scene.primitives.len();
    (0..count)
        .map(|_| {
            let prim = &scene.primitives[rng.gen_range(0..n)];
            let pos = prim.mu
                + Vec3::new(
                    rng.gen_range(-jitter..jitter),
                    rng.gen_range(-jitter..jitter),
                    rng.gen_range(-jitter..jitter),
                );
            let mut rgb = [0.0; 3];
            for ch in 0..3 {
                rgb[ch] = (prim.sh_coeffs[0][ch] * SH_C0
                    + rng.gen_range(-0.05..0.05))
                .clamp(0.0, 1.0);
            }
            (pos, rgb)
        })
        .collect()
}
