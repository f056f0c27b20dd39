//! Pinhole cameras and ray generation.
//!
//! Camera frame convention: x right, y down, z forward (the image v axis
//! grows downward). Continuous image coordinates put pixel `(px, py)`'s
//! center at `(px + 0.5, py + 0.5)`.

use crate::{Error, Mat3, Result, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Camera-to-world rotation; columns are the camera axes in world space.
    pub rotation: Mat3,
    /// Camera center in world space.
    pub position: Vec3,
}

impl Camera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        rotation: Mat3,
        position: Vec3,
    ) -> Result<Camera> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::NonFiniteParam("camera focal length"));
        }
        let gram = rotation.transpose() * rotation;
        if (gram - Mat3::identity()).abs().max() > 1e-6 || rotation.determinant() < 0.0 {
            return Err(Error::NonFiniteParam(
                "camera rotation (must be orthonormal, det +1)",
            ));
        }
        Ok(Camera {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            rotation,
            position,
        })
    }

    /// Camera placed at `position` looking toward `target`.
    pub fn look_at(
        fx: f64,
        width: u32,
        height: u32,
        position: Vec3,
        target: Vec3,
        up: Vec3,
    ) -> Result<Camera> {
        let forward = (target - position).normalize();
        let right = forward.cross(&up).normalize();
        let down = forward.cross(&right); // y axis points down in our frame
        let rotation = Mat3::from_columns(&[right, down, forward]);
        Camera::new(
            fx,
            fx,
            width as f64 / 2.0,
            height as f64 / 2.0,
            width,
            height,
            rotation,
            position,
        )
    }

    /// The world-space viewing axis (+z of the camera frame).
    pub fn forward(&self) -> Vec3 {
        self.rotation * Vec3::new(0.0, 0.0, 1.0)
    }

    /// Unit ray through continuous image coordinates `(u, v)`.
    pub fn ray_through(&self, u: f64, v: f64) -> Ray {
        let dir_cam = Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        Ray {
            origin: self.position,
            dir: (self.rotation * dir_cam).normalize(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

/// A flat list of rays; `rays_per_pixel` consecutive rays belong to one pixel.
#[derive(Debug, Clone)]
pub struct RayBatch {
    pub rays: Vec<Ray>,
    pub rays_per_pixel: u32,
}

impl RayBatch {
    pub fn pixel_count(&self) -> usize {
        self.rays.len() / self.rays_per_pixel as usize
    }
}

/// Sub-pixel sample offsets: the pixel center, or the centers of its 2x2
/// sub-quadrants for 4x supersampling.
pub fn subpixel_offsets(rays_per_pixel: u32) -> &'static [(f64, f64)] {
    match rays_per_pixel {
        1 => &[(0.5, 0.5)],
        4 => &[(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)],
        _ => panic!("rays_per_pixel must be 1 or 4"),
    }
}

/// Generates `rays_per_pixel` rays for each listed pixel, in pixel order.
/// Rays are independent; batches from several cameras may be concatenated.
pub fn generate_rays(
    camera: &Camera,
    pixels: impl IntoIterator<Item = (u32, u32)>,
    rays_per_pixel: u32,
) -> RayBatch {
    let offsets = subpixel_offsets(rays_per_pixel);
    let mut rays = Vec::new();
    for (px, py) in pixels {
        debug_assert!(px < camera.width && py < camera.height);
        for &(ox, oy) in offsets {
            rays.push(camera.ray_through(px as f64 + ox, py as f64 + oy));
        }
    }
    RayBatch {
        rays,
        rays_per_pixel,
    }
}

/// All pixels of a camera's image in row-major order.
pub fn full_image_pixels(camera: &Camera) -> impl Iterator<Item = (u32, u32)> {
    let (w, h) = (camera.width, camera.height);
    (0..h).flat_map(move |y| (0..w).map(move |x| (x, y)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn principal_point_ray_is_forward_axis() {
        let cam = Camera::look_at(
            60.0,
            9,
            9,
            Vec3::new(0.0, 0.0, -4.0),
            Vec3::zeros(),
            Vec3::new(0.0, 1.0, 0.0),
        )
        .unwrap();
        // cx = cy = 4.5, exactly the center of pixel (4, 4)
        let ray = cam.ray_through(cam.cx, cam.cy);
        assert_relative_eq!(ray.dir, cam.forward(), epsilon = 1e-12);

        let batch = generate_rays(&cam, [(4u32, 4u32)], 1);
        assert_eq!(batch.rays.len(), 1);
        assert_relative_eq!(batch.rays[0].dir, cam.forward(), epsilon = 1e-12);
    }

    #[test]
    fn four_rays_per_pixel() {
        let cam = Camera::look_at(
            32.0,
            8,
            8,
            Vec3::new(0.0, 0.0, -2.0),
            Vec3::zeros(),
            Vec3::new(0.0, 1.0, 0.0),
        )
        .unwrap();
        let pixels: Vec<(u32, u32)> = vec![(0, 0), (3, 5), (7, 7)];
        let batch = generate_rays(&cam, pixels.clone(), 4);
        assert_eq!(batch.rays.len(), 4 * pixels.len());
        assert_eq!(batch.pixel_count(), pixels.len());
        for ray in &batch.rays {
            assert_relative_eq!(ray.dir.norm(), 1.0, epsilon = 1e-12);
        }
        // the four sub-rays of a pixel are distinct
        assert_ne!(batch.rays[0].dir, batch.rays[1].dir);
        assert_ne!(batch.rays[2].dir, batch.rays[3].dir);
    }

    #[test]
    fn rejects_bad_rotation() {
        let mut rot = Mat3::identity();
        rot[(0, 0)] = 2.0;
        assert!(Camera::new(10.0, 10.0, 2.0, 2.0, 4, 4, rot, Vec3::zeros()).is_err());
        assert!(Camera::new(-1.0, 10.0, 2.0, 2.0, 4, 4, Mat3::identity(), Vec3::zeros()).is_err());
    }
}
