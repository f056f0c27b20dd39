//! Bounding volume hierarchy over truncated primitive supports.
//!
//! Each primitive's support is the ellipsoid level set of its truncation
//! criterion: effective semi-axes `s~ = s * phi^{-1}(sigma_eps / sigma~)` for
//! global families and `s~ = s` for compact ones. Queries report every
//! primitive whose support intersects a ray segment, into a fixed-capacity
//! hit buffer.

use crate::scene::{normalize_quat, rotation_from_unit_quat, Scene};
use crate::{Mat3, Vec3};

/// Axis-aligned box, `min <= max` componentwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.min[k] && self.max[k] >= other.max[k])
    }

    pub fn contains_point(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    /// Slab test against the parameter interval `[t_lo, t_hi]`. Slightly
    /// padded so roundoff can never reject a segment that touches the
    /// contained geometry; false positives are filtered by the exact
    /// ellipsoid test downstream.
    pub fn segment_intersects(&self, origin: &Vec3, dir: &Vec3, t_lo: f64, t_hi: f64) -> bool {
        let mut lo = t_lo;
        let mut hi = t_hi;
        for k in 0..3 {
            let o = origin[k];
            let d = dir[k];
            if d.abs() < 1e-300 {
                if o < self.min[k] || o > self.max[k] {
                    return false;
                }
                continue;
            }
            let inv = 1.0 / d;
            let mut t0 = (self.min[k] - o) * inv;
            let mut t1 = (self.max[k] - o) * inv;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            let pad = 1e-12 * (t0.abs() + t1.abs() + 1.0);
            lo = lo.max(t0 - pad);
            hi = hi.min(t1 + pad);
            if lo > hi {
                return false;
            }
        }
        true
    }
}

/// A primitive's truncated support: center, rotation and effective semi-axes.
#[derive(Debug, Clone)]
pub struct EllipsoidSupport {
    pub center: Vec3,
    pub rot: Mat3,
    pub semi_axes: Vec3,
    pub prim_index: u32,
}

impl EllipsoidSupport {
    /// Builds the support of one primitive, or `None` when the support is
    /// empty (global family with `sigma_eps >= sigma~`).
    pub fn from_primitive(scene: &Scene, prim_index: usize) -> Option<EllipsoidSupport> {
        let prim = &scene.primitives[prim_index];
        let config = &scene.config;
        let radius = config
            .basis
            .support_radius(prim.density(), config.sigma_eps)?;
        let q = normalize_quat(&prim.quat).ok()?;
        let rot = rotation_from_unit_quat(&q);
        let s = prim.activated_scale(config.anisotropic);
        Some(EllipsoidSupport {
            center: prim.mu,
            rot,
            semi_axes: s * radius,
            prim_index: prim_index as u32,
        })
    }
}

/// Tightest axis-aligned box enclosing the support ellipsoid: the half-extent
/// along world axis k is `sqrt(sum_j (s~_j * R[k][j])^2)`.
pub fn tight_aabb(support: &EllipsoidSupport) -> Aabb {
    let s = &support.semi_axes;
    let r = &support.rot;
    let mut half = Vec3::zeros();
    for k in 0..3 {
        let mut acc = 0.0;
        for j in 0..3 {
            let term = s[j] * r[(k, j)];
            acc += term * term;
        }
        half[k] = acc.sqrt();
    }
    Aabb {
        min: support.center - half,
        max: support.center + half,
    }
}

/// True iff some `t` in `[t_lo, t_hi]` has `o + t d` inside the support
/// ellipsoid. The ray is mapped into the unit-sphere frame (same `t`
/// parameterization) and the quadratic solved with the numerically stable
/// root form.
pub fn segment_ellipsoid_intersect(
    origin: &Vec3,
    dir: &Vec3,
    t_lo: f64,
    t_hi: f64,
    support: &EllipsoidSupport,
) -> bool {
    debug_assert!(t_lo <= t_hi);
    let rt = support.rot.transpose();
    let o_local = rt * (origin - support.center);
    let d_local = rt * dir;
    let s = &support.semi_axes;
    let o = Vec3::new(o_local.x / s.x, o_local.y / s.y, o_local.z / s.z);
    let d = Vec3::new(d_local.x / s.x, d_local.y / s.y, d_local.z / s.z);

    let a = d.norm_squared();
    let b = 2.0 * o.dot(&d);
    let c = o.norm_squared() - 1.0;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return false;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (t0, t1) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        (q / a, c / q)
    };
    let enter = t0.min(t1);
    let exit = t0.max(t1);
    exit >= t_lo && enter <= t_hi
}

/// Fixed-capacity buffer of hit primitive indices, unique per query.
#[derive(Debug, Clone)]
pub struct HitBuffer {
    indices: Vec<u32>,
    capacity: usize,
    pub overflow: bool,
}

impl HitBuffer {
    pub fn new(capacity: usize) -> Self {
        HitBuffer {
            indices: Vec::with_capacity(capacity),
            capacity,
            overflow: false,
        }
    }

    pub fn clear(&mut self) {
        self.indices.clear();
        self.overflow = false;
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    /// Stores a hit; returns false (and flags overflow) once full.
    fn push(&mut self, idx: u32) -> bool {
        if self.indices.len() >= self.capacity {
            self.overflow = true;
            return false;
        }
        self.indices.push(idx);
        true
    }
}

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    aabb: Aabb,
    /// Leaf: start into the support array. Internal: left child index.
    a: u32,
    /// Internal: right child index. Unused for leaves.
    b: u32,
    /// Number of supports in a leaf; 0 marks an internal node.
    count: u32,
}

/// BVH over ellipsoid supports; median split on the longest centroid axis,
/// deterministic for a given primitive order.
#[derive(Debug, Clone)]
pub struct EllipsoidBvh {
    nodes: Vec<Node>,
    supports: Vec<EllipsoidSupport>,
}

impl EllipsoidBvh {
    /// Builds the hierarchy over every primitive with a non-empty support.
    pub fn build(scene: &Scene) -> EllipsoidBvh {
        let supports: Vec<EllipsoidSupport> = (0..scene.primitives.len())
            .filter_map(|i| EllipsoidSupport::from_primitive(scene, i))
            .collect();
        Self::from_supports(supports)
    }

    pub fn from_supports(mut supports: Vec<EllipsoidSupport>) -> EllipsoidBvh {
        let mut nodes = Vec::new();
        if supports.is_empty() {
            return EllipsoidBvh { nodes, supports };
        }
        let boxes: Vec<Aabb> = supports.iter().map(tight_aabb).collect();
        let mut order: Vec<u32> = (0..supports.len() as u32).collect();
        build_node(&mut nodes, &mut order, 0, &boxes);
        // store supports in leaf order so leaves are contiguous ranges
        let reordered: Vec<EllipsoidSupport> = order
            .iter()
            .map(|&i| supports[i as usize].clone())
            .collect();
        supports = reordered;
        EllipsoidBvh { nodes, supports }
    }

    /// Union of all support boxes, or `None` for an empty hierarchy.
    pub fn scene_bounds(&self) -> Option<Aabb> {
        self.nodes.first().map(|n| n.aabb)
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    pub fn supports(&self) -> &[EllipsoidSupport] {
        &self.supports
    }

    /// Collects into `buf` the primitives whose supports intersect the
    /// segment, in traversal order, truncating at capacity with the overflow
    /// flag set. `buf` must be cleared by the caller.
    pub fn query_slab(&self, origin: &Vec3, dir: &Vec3, t_lo: f64, t_hi: f64, buf: &mut HitBuffer) {
        debug_assert!(buf.is_empty() && !buf.overflow);
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = [0u32; 64];
        let mut depth = 1usize;
        stack[0] = 0;
        while depth > 0 {
            depth -= 1;
            let node = &self.nodes[stack[depth] as usize];
            if !node.aabb.segment_intersects(origin, dir, t_lo, t_hi) {
                continue;
            }
            if node.count > 0 {
                let start = node.a as usize;
                for support in &self.supports[start..start + node.count as usize] {
                    if segment_ellipsoid_intersect(origin, dir, t_lo, t_hi, support) {
                        if !buf.push(support.prim_index) {
                            return;
                        }
                    }
                }
            } else {
                stack[depth] = node.a;
                stack[depth + 1] = node.b;
                depth += 2;
            }
        }
    }

    /// Structural invariant walk: parent boxes contain child boxes, leaf boxes
    /// contain their supports' tight boxes, and every support sits in exactly
    /// one leaf. Used by tests and the self-check command.
    pub fn validate_containment(&self) -> bool {
        if self.nodes.is_empty() {
            return self.supports.is_empty();
        }
        let mut seen = vec![false; self.supports.len()];
        if !self.validate_node(0, &mut seen) {
            return false;
        }
        seen.into_iter().all(|s| s)
    }

    fn validate_node(&self, idx: usize, seen: &mut [bool]) -> bool {
        let node = &self.nodes[idx];
        if node.count > 0 {
            let start = node.a as usize;
            for (offset, support) in self.supports[start..start + node.count as usize]
                .iter()
                .enumerate()
            {
                if seen[start + offset] {
                    return false;
                }
                seen[start + offset] = true;
                if !node.aabb.contains_box(&tight_aabb(support)) {
                    return false;
                }
            }
            true
        } else {
            let (l, r) = (node.a as usize, node.b as usize);
            node.aabb.contains_box(&self.nodes[l].aabb)
                && node.aabb.contains_box(&self.nodes[r].aabb)
                && self.validate_node(l, seen)
                && self.validate_node(r, seen)
        }
    }
}

fn build_node(nodes: &mut Vec<Node>, order: &mut [u32], offset: u32, boxes: &[Aabb]) -> u32 {
    let aabb = order
        .iter()
        .fold(Aabb::empty(), |acc, &i| acc.union(&boxes[i as usize]));
    let idx = nodes.len() as u32;
    if order.len() <= LEAF_SIZE {
        nodes.push(Node {
            aabb,
            a: offset,
            b: 0,
            count: order.len() as u32,
        });
        return idx;
    }

    // split at the median of centroids on the longest axis; ties broken by
    // primitive index so the build is fully deterministic
    let mut centroid_bounds = Aabb::empty();
    for &i in order.iter() {
        let c = boxes[i as usize].center();
        centroid_bounds.min = centroid_bounds.min.inf(&c);
        centroid_bounds.max = centroid_bounds.max.sup(&c);
    }
    let extent = centroid_bounds.max - centroid_bounds.min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        let ca = boxes[a as usize].center()[axis];
        let cb = boxes[b as usize].center()[axis];
        ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
    });

    nodes.push(Node {
        aabb,
        a: 0,
        b: 0,
        count: 0,
    });
    let (left, right) = order.split_at_mut(mid);
    let l = build_node(nodes, left, offset, boxes);
    let r = build_node(nodes, right, offset + mid as u32, boxes);
    nodes[idx as usize].a = l;
    nodes[idx as usize].b = r;
    idx
}

/// O(N) reference for [`EllipsoidBvh::query_slab`]: tests every support.
pub fn brute_force_query(
    supports: &[EllipsoidSupport],
    origin: &Vec3,
    dir: &Vec3,
    t_lo: f64,
    t_hi: f64,
) -> Vec<u32> {
    supports
        .iter()
        .filter(|s| segment_ellipsoid_intersect(origin, dir, t_lo, t_hi, s))
        .map(|s| s.prim_index)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{softplus_inv, GaussianPrimitive, SceneConfig};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn unit_sphere_support(center: Vec3) -> EllipsoidSupport {
        EllipsoidSupport {
            center,
            rot: Mat3::identity(),
            semi_axes: Vec3::new(1.0, 1.0, 1.0),
            prim_index: 0,
        }
    }

    #[test]
    fn tight_aabb_axis_aligned() {
        let support = EllipsoidSupport {
            center: Vec3::zeros(),
            rot: Mat3::identity(),
            semi_axes: Vec3::new(2.0, 0.5, 3.0),
            prim_index: 0,
        };
        let aabb = tight_aabb(&support);
        assert_relative_eq!(aabb.min, Vec3::new(-2.0, -0.5, -3.0), epsilon = 1e-14);
        assert_relative_eq!(aabb.max, Vec3::new(2.0, 0.5, 3.0), epsilon = 1e-14);
    }

    #[test]
    fn tight_aabb_rotated() {
        // 90 degrees about z maps semi-axes (2,1,1) to extents (1,2,1)
        let half = std::f64::consts::FRAC_PI_4;
        let q = [half.cos(), 0.0, 0.0, half.sin()];
        let support = EllipsoidSupport {
            center: Vec3::new(1.0, 2.0, 3.0),
            rot: rotation_from_unit_quat(&q),
            semi_axes: Vec3::new(2.0, 1.0, 1.0),
            prim_index: 0,
        };
        let aabb = tight_aabb(&support);
        let half_extent = (aabb.max - aabb.min) * 0.5;
        assert_relative_eq!(half_extent, Vec3::new(1.0, 2.0, 1.0), epsilon = 1e-12);
        assert_relative_eq!(aabb.center(), support.center, epsilon = 1e-12);
    }

    fn random_support(rng: &mut impl Rng, prim_index: u32) -> EllipsoidSupport {
        let quat = loop {
            let q = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            if let Ok(q) = normalize_quat(&q) {
                break q;
            }
        };
        EllipsoidSupport {
            center: Vec3::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            ),
            rot: rotation_from_unit_quat(&quat),
            semi_axes: Vec3::new(
                rng.gen_range(0.05..2.0),
                rng.gen_range(0.05..2.0),
                rng.gen_range(0.05..2.0),
            ),
            prim_index,
        }
    }

    #[test]
    fn tight_aabb_sampling_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let support = random_support(&mut rng, 0);
            let aabb = tight_aabb(&support);

            // boundary points all inside the box
            for _ in 0..10_000 {
                let u = loop {
                    let v = Vec3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    );
                    let n = v.norm();
                    if n > 1e-6 && n <= 1.0 {
                        break v / n;
                    }
                };
                let x = support.center
                    + support.rot * u.component_mul(&support.semi_axes);
                assert!(
                    aabb.contains_point(&(x - Vec3::repeat(1e-12))) || aabb.contains_point(&x),
                    "boundary point escaped the box"
                );
            }

            // each face is touched: the analytic extremal direction reaches it
            for k in 0..3 {
                let ek = Vec3::ith(k, 1.0);
                let v = support
                    .semi_axes
                    .component_mul(&(support.rot.transpose() * ek));
                let u = v / v.norm();
                let x = support.center + support.rot * u.component_mul(&support.semi_axes);
                let extent = aabb.max[k] - aabb.min[k];
                let slack = (aabb.max[k] - x[k]).abs();
                assert!(slack < 1e-9 * extent, "face {k} slack {slack}");
            }
        }
    }

    #[test]
    fn segment_sphere_examples() {
        let s = unit_sphere_support(Vec3::zeros());
        let o = Vec3::new(-2.0, 0.0, 0.0);
        let d = Vec3::new(1.0, 0.0, 0.0);
        // quadratic roots at t = 1 and t = 3
        assert!(segment_ellipsoid_intersect(&o, &d, 0.0, 4.0, &s));
        assert!(segment_ellipsoid_intersect(&o, &d, 0.0, 1.0, &s));
        assert!(!segment_ellipsoid_intersect(&o, &d, 0.0, 0.5, &s));
        assert!(!segment_ellipsoid_intersect(&o, &d, 3.5, 10.0, &s));
        // origin inside: any segment containing t = 0
        let inside = Vec3::new(0.2, 0.1, 0.0);
        assert!(segment_ellipsoid_intersect(&inside, &d, -1.0, 1.0, &s));
        assert!(segment_ellipsoid_intersect(&inside, &d, 0.0, 0.0, &s));
    }

    fn scene_with(prims: Vec<GaussianPrimitive>) -> Scene {
        let mut config = SceneConfig::default();
        config.sigma_eps = 0.05;
        Scene {
            primitives: prims,
            config,
        }
    }

    fn random_prim(rng: &mut impl Rng) -> GaussianPrimitive {
        let mut p = GaussianPrimitive::neutral();
        p.mu = Vec3::new(
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
        );
        p.quat = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        if normalize_quat(&p.quat).is_err() {
            p.quat = [1.0, 0.0, 0.0, 0.0];
        }
        p.scale_raw = [
            rng.gen_range(-2.5..0.5),
            rng.gen_range(-2.5..0.5),
            rng.gen_range(-2.5..0.5),
        ];
        p.density_raw = softplus_inv(rng.gen_range(0.2..5.0));
        p
    }

    #[test]
    fn single_primitive_tree() {
        let scene = scene_with(vec![random_prim(
            &mut rand_chacha::ChaCha8Rng::seed_from_u64(1),
        )]);
        let bvh = EllipsoidBvh::build(&scene);
        let support = EllipsoidSupport::from_primitive(&scene, 0).unwrap();
        assert_eq!(bvh.scene_bounds().unwrap(), tight_aabb(&support));
        assert!(bvh.validate_containment());
    }

    #[test]
    fn two_disjoint_primitives_union_root() {
        let mut a = GaussianPrimitive::neutral();
        a.mu = Vec3::new(-5.0, 0.0, 0.0);
        let mut b = GaussianPrimitive::neutral();
        b.mu = Vec3::new(5.0, 0.0, 0.0);
        let scene = scene_with(vec![a, b]);
        let bvh = EllipsoidBvh::build(&scene);
        let ba = tight_aabb(&EllipsoidSupport::from_primitive(&scene, 0).unwrap());
        let bb = tight_aabb(&EllipsoidSupport::from_primitive(&scene, 1).unwrap());
        assert_eq!(bvh.scene_bounds().unwrap(), ba.union(&bb));
    }

    #[test]
    fn all_supports_empty_gives_empty_bvh() {
        let mut p = GaussianPrimitive::neutral();
        p.density_raw = softplus_inv(0.01); // below sigma_eps
        let scene = scene_with(vec![p]);
        let bvh = EllipsoidBvh::build(&scene);
        assert!(bvh.is_empty());
        assert!(bvh.scene_bounds().is_none());
        let mut buf = HitBuffer::new(8);
        bvh.query_slab(
            &Vec3::zeros(),
            &Vec3::new(1.0, 0.0, 0.0),
            0.0,
            10.0,
            &mut buf,
        );
        assert!(buf.is_empty() && !buf.overflow);
    }

    #[test]
    fn containment_invariant_on_large_random_scene() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let prims: Vec<_> = (0..1000).map(|_| random_prim(&mut rng)).collect();
        let scene = scene_with(prims);
        let bvh = EllipsoidBvh::build(&scene);
        assert!(bvh.validate_containment());
    }

    #[test]
    fn query_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let prims: Vec<_> = (0..100).map(|_| random_prim(&mut rng)).collect();
        let scene = scene_with(prims);
        let bvh = EllipsoidBvh::build(&scene);
        let all_supports: Vec<EllipsoidSupport> = (0..scene.primitives.len())
            .filter_map(|i| EllipsoidSupport::from_primitive(&scene, i))
            .collect();

        let mut buf = HitBuffer::new(512);
        for _ in 0..500 {
            let o = Vec3::new(
                rng.gen_range(-6.0..6.0),
                rng.gen_range(-6.0..6.0),
                rng.gen_range(-6.0..6.0),
            );
            let d = loop {
                let v = Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                if v.norm() > 1e-3 {
                    break v.normalize();
                }
            };
            let t_lo = rng.gen_range(0.0..4.0);
            let t_hi = t_lo + rng.gen_range(0.0..8.0);

            buf.clear();
            bvh.query_slab(&o, &d, t_lo, t_hi, &mut buf);
            assert!(!buf.overflow);
            let mut got: Vec<u32> = buf.indices().to_vec();
            got.sort_unstable();
            let mut expect = brute_force_query(&all_supports, &o, &d, t_lo, t_hi);
            expect.sort_unstable();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn segment_missing_all_boxes_returns_nothing() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let prims: Vec<_> = (0..50).map(|_| random_prim(&mut rng)).collect();
        let scene = scene_with(prims);
        let bvh = EllipsoidBvh::build(&scene);
        let mut buf = HitBuffer::new(512);
        bvh.query_slab(
            &Vec3::new(100.0, 100.0, 100.0),
            &Vec3::new(0.0, 0.0, 1.0),
            0.0,
            1.0,
            &mut buf,
        );
        assert!(buf.is_empty());
    }

    #[test]
    fn capacity_truncation_sets_overflow() {
        let mut prims = Vec::new();
        for i in 0..3 {
            let mut p = GaussianPrimitive::neutral();
            p.mu = Vec3::new(i as f64 * 0.1, 0.0, 0.0);
            prims.push(p);
        }
        let scene = scene_with(prims);
        let bvh = EllipsoidBvh::build(&scene);
        let mut buf = HitBuffer::new(2);
        bvh.query_slab(
            &Vec3::new(-10.0, 0.0, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
            0.0,
            100.0,
            &mut buf,
        );
        assert_eq!(buf.len(), 2);
        assert!(buf.overflow);

        // with enough capacity all three are found and no overflow is flagged
        let mut buf = HitBuffer::new(3);
        bvh.query_slab(
            &Vec3::new(-10.0, 0.0, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
            0.0,
            100.0,
            &mut buf,
        );
        assert_eq!(buf.len(), 3);
        assert!(!buf.overflow);
    }

    #[test]
    fn aabb_test_is_conservative_for_contained_ellipsoid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..2000 {
            let support = random_support(&mut rng, 0);
            let aabb = tight_aabb(&support);
            let o = Vec3::new(
                rng.gen_range(-8.0..8.0),
                rng.gen_range(-8.0..8.0),
                rng.gen_range(-8.0..8.0),
            );
            let d = loop {
                let v = Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                if v.norm() > 1e-3 {
                    break v.normalize();
                }
            };
            let t_hi = rng.gen_range(0.1..20.0);
            if segment_ellipsoid_intersect(&o, &d, 0.0, t_hi, &support) {
                assert!(aabb.segment_intersects(&o, &d, 0.0, t_hi));
            }
        }
    }
}
