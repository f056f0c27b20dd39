//! Forward volume ray casting: slab-by-slab integration over the BVH with
//! early termination.
//!
//! Samples live on a global grid anchored at the ray's bounding-box entry
//! `t0`: cell `i` covers `[t0 + i*dt, t0 + (i+1)*dt)` and is evaluated at the
//! full cell midpoint. Slabs are runs of `B` consecutive cells, so slabbing is
//! purely an execution strategy: the rendered value is independent of `B`.
//! The last cell may be clipped by the exit `t1`, in which case its coverage
//! (not its sample point) shrinks.

use crate::appearance;
use crate::bvh::{Aabb, EllipsoidBvh, EllipsoidSupport, HitBuffer};
use crate::camera::{full_image_pixels, generate_rays, Camera, Ray};
use crate::field;
use crate::img::FloatImage;
use crate::scene::{normalize_quat, rotation_from_unit_quat, Scene};
use crate::{Error, Result, Rgb, Vec3};
use rayon::prelude::*;

pub const DEFAULT_DT_SCALE: f64 = 2.5e-4;
pub const DEFAULT_SLAB_SAMPLES: u32 = 8;
pub const DEFAULT_T_EPS: f64 = 1e-4;
pub const DEFAULT_CAPACITY: usize = 512;

/// Rendering parameters. `dt` is the world-space sample spacing; callers that
/// want scene-normalized behavior derive it from the scene bounds via
/// [`RenderConfig::dt_from_scale`].
#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub dt: f64,
    /// Samples per slab (B).
    pub slab_samples: u32,
    /// Early-termination transmittance threshold.
    pub t_eps: f64,
    /// Hit buffer capacity per slab query.
    pub capacity: usize,
    pub background: Rgb,
    pub rays_per_pixel: u32,
}

impl RenderConfig {
    pub fn with_dt(dt: f64) -> RenderConfig {
        RenderConfig {
            dt,
            slab_samples: DEFAULT_SLAB_SAMPLES,
            t_eps: DEFAULT_T_EPS,
            capacity: DEFAULT_CAPACITY,
            background: [1.0, 1.0, 1.0],
            rays_per_pixel: 1,
        }
    }

    /// `dt = scale * |scene bounds diagonal|`; falls back to `scale` itself
    /// for an empty scene (the value is irrelevant there).
    pub fn dt_from_scale(scale: f64, bounds: Option<&Aabb>) -> f64 {
        match bounds {
            Some(b) => scale * b.diagonal(),
            None => scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.slab_samples < 1 {
            return Err(Error::Config("slab_samples must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.t_eps) {
            return Err(Error::Config(format!(
                "t_eps must be in [0, 1), got {}",
                self.t_eps
            )));
        }
        if self.capacity == 0 {
            return Err(Error::Config("capacity must be positive".into()));
        }
        if !matches!(self.rays_per_pixel, 1 | 4) {
            return Err(Error::Config("rays_per_pixel must be 1 or 4".into()));
        }
        Ok(())
    }
}

/// Entry/exit parameters of a ray against the scene box, clipped to `t >= 0`;
/// `None` when the clipped interval is empty.
pub fn intersect_scene_bbox(origin: &Vec3, dir: &Vec3, bbox: &Aabb) -> Option<(f64, f64)> {
    let mut t0: f64 = 0.0;
    let mut t1 = f64::INFINITY;
    for k in 0..3 {
        let o = origin[k];
        let d = dir[k];
        if d.abs() < 1e-300 {
            if o < bbox.min[k] || o > bbox.max[k] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d;
        let mut a = (bbox.min[k] - o) * inv;
        let mut b = (bbox.max[k] - o) * inv;
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        t0 = t0.max(a);
        t1 = t1.min(b);
    }
    if t0 >= t1 {
        None
    } else {
        Some((t0, t1))
    }
}

/// Forward-pass counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderStats {
    pub rays: u64,
    pub bbox_hits: u64,
    pub slabs: u64,
    pub samples: u64,
    pub prim_hits: u64,
    pub overflows: u64,
    pub early_terminated: u64,
}

impl RenderStats {
    pub fn merge(&mut self, other: &RenderStats) {
        self.rays += other.rays;
        self.bbox_hits += other.bbox_hits;
        self.slabs += other.slabs;
        self.samples += other.samples;
        self.prim_hits += other.prim_hits;
        self.overflows += other.overflows;
        self.early_terminated += other.early_terminated;
    }
}

/// Accumulated per-ray state: color before background compositing, and the
/// remaining transmittance (non-increasing, in [0, 1]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayState {
    pub color: Rgb,
    pub transmittance: f64,
}

impl RayState {
    pub fn fresh() -> RayState {
        RayState {
            color: [0.0; 3],
            transmittance: 1.0,
        }
    }
}

/// One evaluated sample, reported to trace observers.
#[derive(Debug, Clone, Copy)]
pub struct SampleEvent {
    pub t: f64,
    pub coverage: f64,
    pub sigma: f64,
    pub radiance: Rgb,
    pub color_after: Rgb,
    pub transmittance_after: f64,
}

/// Per-primitive quantities that stay fixed for a whole render pass.
pub(crate) struct PreparedPrim {
    mu: Vec3,
    rot_t: crate::Mat3,
    inv_scale: Vec3,
    sigma_tilde: f64,
}

pub(crate) struct PreparedScene<'a> {
    pub(crate) scene: &'a Scene,
    prims: Vec<PreparedPrim>,
}

impl<'a> PreparedScene<'a> {
    pub(crate) fn new(scene: &'a Scene) -> Result<PreparedScene<'a>> {
        let anisotropic = scene.config.anisotropic;
        let prims = scene
            .primitives
            .iter()
            .map(|p| {
                let q = normalize_quat(&p.quat)?;
                let s = p.activated_scale(anisotropic);
                Ok(PreparedPrim {
                    mu: p.mu,
                    rot_t: rotation_from_unit_quat(&q).transpose(),
                    inv_scale: Vec3::new(1.0 / s.x, 1.0 / s.y, 1.0 / s.z),
                    sigma_tilde: p.density(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedScene { scene, prims })
    }

    /// Mahalanobis radius of `x` for primitive `l`.
    #[inline]
    pub(crate) fn radius(&self, l: usize, x: &Vec3) -> f64 {
        let p = &self.prims[l];
        let local = p.rot_t * (x - p.mu);
        local.component_mul(&p.inv_scale).norm()
    }

    /// Truncated density of primitive `l` at `x` (exactly zero below the
    /// threshold).
    #[inline]
    pub(crate) fn density(&self, l: usize, x: &Vec3) -> f64 {
        let p = &self.prims[l];
        let sigma = p.sigma_tilde * self.scene.config.basis.eval(self.radius(l, x));
        if sigma < self.scene.config.sigma_eps {
            0.0
        } else {
            sigma
        }
    }
}

/// Slab-local scratch: lazily evaluated per-contributor radiance.
pub(crate) struct SlabColors {
    colors: Vec<Rgb>,
    valid: Vec<bool>,
}

impl SlabColors {
    pub(crate) fn new() -> SlabColors {
        SlabColors {
            colors: Vec::new(),
            valid: Vec::new(),
        }
    }

    fn reset(&mut self, n: usize) {
        self.colors.clear();
        self.colors.resize(n, [0.0; 3]);
        self.valid.clear();
        self.valid.resize(n, false);
    }

    #[inline]
    fn get(&mut self, k: usize, scene: &Scene, l: usize, dir: &Vec3) -> Rgb {
        if !self.valid[k] {
            self.colors[k] =
                appearance::eval_radiance(&scene.primitives[l], &scene.config, dir);
            self.valid[k] = true;
        }
        self.colors[k]
    }
}

/// Integrates the grid samples `[sample_lo, sample_hi)` (anchored at
/// `t_anchor`, coverage clipped at `t_clip`) over the given contributors,
/// updating the ray state in place. Samples where no contributor survives
/// truncation are skipped (`sigma = 0` implies `alpha = 0`).
#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate_slab_prepared(
    state: &mut RayState,
    origin: &Vec3,
    dir: &Vec3,
    t_anchor: f64,
    t_clip: f64,
    dt: f64,
    sample_lo: u64,
    sample_hi: u64,
    contributors: &[u32],
    prepared: &PreparedScene<'_>,
    colors: &mut SlabColors,
    stats: &mut RenderStats,
    mut trace: Option<&mut Vec<SampleEvent>>,
) {
    colors.reset(contributors.len());
    let span = t_clip - t_anchor;
    for i in sample_lo..sample_hi {
        let cell_start = i as f64 * dt;
        let coverage = dt.min(span - cell_start);
        if coverage <= 0.0 {
            break;
        }
        let t_mid = t_anchor + (i as f64 + 0.5) * dt;
        let x = origin + dir * t_mid;

        let mut sigma = 0.0;
        let mut emission = [0.0; 3];
        for (k, &l) in contributors.iter().enumerate() {
            let w = prepared.density(l as usize, &x);
            if w == 0.0 {
                continue;
            }
            let c = colors.get(k, prepared.scene, l as usize, dir);
            sigma += w;
            for ch in 0..3 {
                emission[ch] += c[ch] * w;
            }
        }
        stats.samples += 1;
        if sigma == 0.0 {
            continue;
        }
        let radiance = [
            emission[0] / sigma,
            emission[1] / sigma,
            emission[2] / sigma,
        ];
        let att = (-sigma * coverage).exp();
        let alpha = 1.0 - att;
        for ch in 0..3 {
            state.color[ch] += state.transmittance * alpha * radiance[ch];
        }
        state.transmittance *= att;

        if let Some(events) = trace.as_deref_mut() {
            events.push(SampleEvent {
                t: t_mid,
                coverage,
                sigma,
                radiance,
                color_after: state.color,
                transmittance_after: state.transmittance,
            });
        }
    }
}

/// Public single-slab entry point (used by tests; the render loop shares the
/// same inner routine through its prepared cache).
#[allow(clippy::too_many_arguments)]
pub fn integrate_slab(
    state: &mut RayState,
    origin: &Vec3,
    dir: &Vec3,
    t_anchor: f64,
    t_clip: f64,
    dt: f64,
    sample_lo: u64,
    sample_hi: u64,
    contributors: &[u32],
    scene: &Scene,
) -> Result<()> {
    let prepared = PreparedScene::new(scene)?;
    let mut colors = SlabColors::new();
    let mut stats = RenderStats::default();
    integrate_slab_prepared(
        state,
        origin,
        dir,
        t_anchor,
        t_clip,
        dt,
        sample_lo,
        sample_hi,
        contributors,
        &prepared,
        &mut colors,
        &mut stats,
        None,
    );
    Ok(())
}

/// Marches one ray through the scene, slab by slab.
#[allow(clippy::too_many_arguments)]
pub(crate) fn march_ray(
    ray: &Ray,
    prepared: &PreparedScene<'_>,
    bvh: &EllipsoidBvh,
    bounds: Option<&Aabb>,
    config: &RenderConfig,
    buf: &mut HitBuffer,
    colors: &mut SlabColors,
    stats: &mut RenderStats,
    mut trace: Option<&mut Vec<SampleEvent>>,
) -> RayState {
    let mut state = RayState::fresh();
    stats.rays += 1;
    let Some(bounds) = bounds else {
        return state;
    };
    let Some((t0, t1)) = intersect_scene_bbox(&ray.origin, &ray.dir, bounds) else {
        return state;
    };
    stats.bbox_hits += 1;

    let dt = config.dt;
    let b = config.slab_samples as u64;
    let span = t1 - t0;
    let n_cells = (span / dt).ceil().max(0.0) as u64;
    let n_slabs = n_cells.div_ceil(b);

    for k in 0..n_slabs {
        if state.transmittance <= config.t_eps {
            stats.early_terminated += 1;
            break;
        }
        let sample_lo = k * b;
        let sample_hi = ((k + 1) * b).min(n_cells);
        // slab boundaries coincide with cell boundaries of the global grid
        let t_min_s = t0 + (sample_lo as f64) * dt;
        let t_max_s = (t0 + (sample_hi as f64) * dt).min(t1);
        stats.slabs += 1;

        buf.clear();
        bvh.query_slab(&ray.origin, &ray.dir, t_min_s, t_max_s, buf);
        if buf.overflow {
            stats.overflows += 1;
        }
        if buf.is_empty() {
            continue;
        }
        stats.prim_hits += buf.len() as u64;

        integrate_slab_prepared(
            &mut state,
            &ray.origin,
            &ray.dir,
            t0,
            t1,
            dt,
            sample_lo,
            sample_hi,
            buf.indices(),
            prepared,
            colors,
            stats,
            trace.as_deref_mut(),
        );
    }
    state
}

/// Per-ray render output. Colors include the background term
/// `C + T * background`.
#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub colors: Vec<Rgb>,
    pub transmittance: Vec<f64>,
    pub stats: RenderStats,
}

const RAY_CHUNK: usize = 256;

/// Renders an arbitrary ray batch. Rays are independent and processed in
/// parallel; output order matches input order regardless of scheduling.
pub fn render(
    rays: &[Ray],
    scene: &Scene,
    bvh: &EllipsoidBvh,
    config: &RenderConfig,
) -> Result<RenderOutput> {
    config.validate()?;
    scene.config.validate()?;
    let prepared = PreparedScene::new(scene)?;
    let bounds = bvh.scene_bounds();

    let chunks: Vec<(Vec<Rgb>, Vec<f64>, RenderStats)> = rays
        .par_chunks(RAY_CHUNK.max(1))
        .map(|chunk| {
            let mut buf = HitBuffer::new(config.capacity);
            let mut colors = SlabColors::new();
            let mut stats = RenderStats::default();
            let mut out_c = Vec::with_capacity(chunk.len());
            let mut out_t = Vec::with_capacity(chunk.len());
            for ray in chunk {
                let state = march_ray(
                    ray,
                    &prepared,
                    bvh,
                    bounds.as_ref(),
                    config,
                    &mut buf,
                    &mut colors,
                    &mut stats,
                    None,
                );
                let mut c = state.color;
                for ch in 0..3 {
                    c[ch] += state.transmittance * config.background[ch];
                }
                out_c.push(c);
                out_t.push(state.transmittance);
            }
            (out_c, out_t, stats)
        })
        .collect();

    let mut colors = Vec::with_capacity(rays.len());
    let mut transmittance = Vec::with_capacity(rays.len());
    let mut stats = RenderStats::default();
    for (c, t, s) in chunks {
        colors.extend(c);
        transmittance.extend(t);
        stats.merge(&s);
    }
    Ok(RenderOutput {
        colors,
        transmittance,
        stats,
    })
}

/// Renders one ray while recording every evaluated sample. Diagnostic path
/// for tests and the self-check command.
pub fn render_traced(
    ray: &Ray,
    scene: &Scene,
    bvh: &EllipsoidBvh,
    config: &RenderConfig,
) -> Result<(RayState, Vec<SampleEvent>)> {
    config.validate()?;
    let prepared = PreparedScene::new(scene)?;
    let bounds = bvh.scene_bounds();
    let mut buf = HitBuffer::new(config.capacity);
    let mut colors = SlabColors::new();
    let mut stats = RenderStats::default();
    let mut events = Vec::new();
    let state = march_ray(
        ray,
        &prepared,
        bvh,
        bounds.as_ref(),
        config,
        &mut buf,
        &mut colors,
        &mut stats,
        Some(&mut events),
    );
    Ok((state, events))
}

/// Renders a full camera image, averaging the pixel's rays when
/// supersampling. Colors are left unclamped.
pub fn render_image(
    camera: &Camera,
    scene: &Scene,
    bvh: &EllipsoidBvh,
    config: &RenderConfig,
) -> Result<(FloatImage, RenderStats)> {
    let batch = generate_rays(camera, full_image_pixels(camera), config.rays_per_pixel);
    let output = render(&batch.rays, scene, bvh, config)?;
    let rpp = batch.rays_per_pixel as usize;
    let mut img = FloatImage::new(camera.width, camera.height);
    for (p, px) in img.data.iter_mut().enumerate() {
        let mut acc = [0.0; 3];
        for r in 0..rpp {
            let c = output.colors[p * rpp + r];
            for ch in 0..3 {
                acc[ch] += c[ch];
            }
        }
        for ch in 0..3 {
            px[ch] = acc[ch] / rpp as f64;
        }
    }
    Ok((img, output.stats))
}

/// Union of the tight boxes of every non-empty support, in primitive order.
/// Identical to the BVH root bounds (min/max folds are order-independent).
pub fn scene_bounds(scene: &Scene) -> Option<Aabb> {
    let mut bounds: Option<Aabb> = None;
    for i in 0..scene.primitives.len() {
        if let Some(support) = EllipsoidSupport::from_primitive(scene, i) {
            let aabb = crate::bvh::tight_aabb(&support);
            bounds = Some(match bounds {
                Some(b) => b.union(&aabb),
                None => aabb,
            });
        }
    }
    bounds
}

/// Brute-force oracle: the same sampling grid and compositing recurrence, but
/// every primitive is evaluated at every sample through the plain field path.
/// No BVH, no slabs, no early termination. Bitwise deterministic.
pub fn render_reference(rays: &[Ray], scene: &Scene, config: &RenderConfig) -> Result<Vec<Rgb>> {
    config.validate()?;
    scene.config.validate()?;
    let bounds = scene_bounds(scene);
    let all: Vec<u32> = (0..scene.primitives.len() as u32).collect();

    let mut out = Vec::with_capacity(rays.len());
    for ray in rays {
        let mut state = RayState::fresh();
        if let Some(bounds) = &bounds {
            if let Some((t0, t1)) = intersect_scene_bbox(&ray.origin, &ray.dir, bounds) {
                let span = t1 - t0;
                let n_cells = (span / config.dt).ceil().max(0.0) as u64;
                for i in 0..n_cells {
                    let cell_start = i as f64 * config.dt;
                    let coverage = config.dt.min(span - cell_start);
                    if coverage <= 0.0 {
                        break;
                    }
                    let t_mid = t0 + (i as f64 + 0.5) * config.dt;
                    let x = ray.origin + ray.dir * t_mid;
                    let (sigma, radiance) = field::sample_field(&x, &ray.dir, &all, scene);
                    if sigma == 0.0 {
                        continue;
                    }
                    let att = (-sigma * coverage).exp();
                    let alpha = 1.0 - att;
                    for ch in 0..3 {
                        state.color[ch] += state.transmittance * alpha * radiance[ch];
                    }
                    state.transmittance *= att;
                }
            }
        }
        let mut c = state.color;
        for ch in 0..3 {
            c[ch] += state.transmittance * config.background[ch];
        }
        out.push(c);
    }
    Ok(out)
}
