//! Posed-image datasets and the NeRF-synthetic (Blender) manifest loader.

use crate::camera::Camera;
use crate::img::FloatImage;
use crate::{Error, Mat3, Result, Rgb, Vec3};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone)]
pub struct View {
    pub camera: Camera,
    pub image: FloatImage,
    pub split: Split,
    pub name: String,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub views: Vec<View>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &View> {
        self.views.iter().filter(move |v| v.split == split)
    }

    pub fn train_count(&self) -> usize {
        self.split(Split::Train).count()
    }

    pub fn test_count(&self) -> usize {
        self.split(Split::Test).count()
    }
}

#[derive(Deserialize)]
struct Manifest {
    camera_angle_x: f64,
    #[serde(default)]
    w: Option<u32>,
    #[serde(default)]
    h: Option<u32>,
    frames: Vec<Frame>,
}

#[derive(Deserialize)]
struct Frame {
    file_path: String,
    transform_matrix: [[f64; 4]; 4],
}

/// Loads `transforms_train.json` / `transforms_test.json` from `root`.
/// Intrinsics come from the horizontal field of view and the image size;
/// poses are camera-to-world matrices in the OpenGL convention (-z forward,
/// y up) and are converted here to the renderer's frame (+z forward, y down).
/// RGBA images are composited onto `background`.
pub fn load_blender_dataset(root: &Path, background: Rgb) -> Result<Dataset> {
    let mut views = Vec::new();
    let mut found = false;
    for (split, file) in [
        (Split::Train, "transforms_train.json"),
        (Split::Test, "transforms_test.json"),
    ] {
        let path = root.join(file);
        if !path.exists() {
            continue;
        }
        found = true;
        load_manifest(&path, root, split, background, &mut views)?;
    }
    if !found {
        return Err(Error::Dataset(format!(
            "no transforms_train.json or transforms_test.json under {}",
            root.display()
        )));
    }
    Ok(Dataset { views })
}

fn load_manifest(
    manifest_path: &Path,
    root: &Path,
    split: Split,
    background: Rgb,
    views: &mut Vec<View>,
) -> Result<()> {
    let text = std::fs::read_to_string(manifest_path)?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::Dataset(format!("{}: {e}", manifest_path.display())))?;

    for frame in &manifest.frames {
        let mut img_path = root.join(&frame.file_path);
        if img_path.extension().is_none() {
            img_path.set_extension("png");
        }
        if !img_path.exists() {
            return Err(Error::Dataset(format!(
                "referenced image missing: {}",
                img_path.display()
            )));
        }
        let image = FloatImage::load_png(&img_path, background)?;
        if let (Some(w), Some(h)) = (manifest.w, manifest.h) {
            if image.width != w || image.height != h {
                return Err(Error::DimensionMismatch {
                    expected: format!("{w}x{h}"),
                    got: format!("{}x{}", image.width, image.height),
                });
            }
        }
        let camera = camera_from_transform(
            manifest.camera_angle_x,
            image.width,
            image.height,
            &frame.transform_matrix,
        )?;
        views.push(View {
            camera,
            image,
            split,
            name: frame.file_path.clone(),
        });
    }
    Ok(())
}

/// Builds the renderer-convention camera from a Blender-style pose.
pub fn camera_from_transform(
    camera_angle_x: f64,
    width: u32,
    height: u32,
    transform: &[[f64; 4]; 4],
) -> Result<Camera> {
    let fx = 0.5 * width as f64 / (0.5 * camera_angle_x).tan();
    for row in transform {
        for v in row {
            if !v.is_finite() {
                return Err(Error::Dataset("non-finite pose matrix".into()));
            }
        }
    }
    let gl = Mat3::new(
        transform[0][0],
        transform[0][1],
        transform[0][2],
        transform[1][0],
        transform[1][1],
        transform[1][2],
        transform[2][0],
        transform[2][1],
        transform[2][2],
    );
    let position = Vec3::new(transform[0][3], transform[1][3], transform[2][3]);
    // OpenGL camera axes: x right, y up, z backward. Ours: x right, y down,
    // z forward. Flip the y and z columns, then re-orthonormalize to absorb
    // float noise in stored matrices.
    let rotation = gl * Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0));
    let rotation = orthonormalize(&rotation)?;
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

/// Gram-Schmidt starting from the forward axis, keeping the frame
/// right-handed (x cross y = z).
fn orthonormalize(m: &Mat3) -> Result<Mat3> {
    let forward = m.column(2).into_owned();
    let n = forward.norm();
    if n < 1e-9 {
        return Err(Error::Dataset("degenerate pose rotation".into()));
    }
    let z = forward / n;
    let mut x = m.column(0).into_owned();
    x -= z * z.dot(&x);
    let nx = x.norm();
    if nx < 1e-9 {
        return Err(Error::Dataset("degenerate pose rotation".into()));
    }
    let x = x / nx;
    let y = z.cross(&x);
    Ok(Mat3::from_columns(&[x, y, z]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn intrinsics_from_fov() {
        // fov such that tan(fov/2) = 1 gives fx = width / 2
        let t = std::f64::consts::FRAC_PI_2;
        let identity = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        let cam = camera_from_transform(t, 64, 64, &identity).unwrap();
        assert_relative_eq!(cam.fx, 32.0, epsilon = 1e-12);
        assert_relative_eq!(cam.cx, 32.0, epsilon = 1e-12);
    }

    #[test]
    fn gl_identity_pose_looks_down_negative_z() {
        let identity = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 2.5],
            [0.0, 0.0, 0.0, 1.0],
        ];
        let cam = camera_from_transform(0.8, 32, 32, &identity).unwrap();
        assert_relative_eq!(
            cam.forward(),
            Vec3::new(0.0, 0.0, -1.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(cam.position, Vec3::new(0.0, 0.0, 2.5), epsilon = 1e-12);
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("train")).unwrap();
        let img = image::RgbaImage::from_pixel(8, 6, image::Rgba([255, 0, 0, 255]));
        img.save(dir.path().join("train/r_0.png")).unwrap();

        let manifest = serde_json::json!({
            "camera_angle_x": std::f64::consts::FRAC_PI_2,
            "frames": [{
                "file_path": "./train/r_0",
                "transform_matrix": [
                    [1.0, 0.0, 0.0, 0.0],
                    [0.0, 1.0, 0.0, 0.0],
                    [0.0, 0.0, 1.0, 4.0],
                    [0.0, 0.0, 0.0, 1.0]
                ]
            }]
        });
        std::fs::write(
            dir.path().join("transforms_train.json"),
            serde_json::to_string_pretty(&manifest).unwrap(),
        )
        .unwrap();

        let ds = load_blender_dataset(dir.path(), [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(ds.train_count(), 1);
        assert_eq!(ds.test_count(), 0);
        let view = &ds.views[0];
        assert_eq!(view.image.width, 8);
        // ray through the principal point follows the stored forward axis
        let ray = view.camera.ray_through(view.camera.cx, view.camera.cy);
        assert_relative_eq!(ray.dir, Vec3::new(0.0, 0.0, -1.0), epsilon = 1e-12);
        assert_eq!(view.image.pixel(0, 0), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn missing_image_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = serde_json::json!({
            "camera_angle_x": 0.7,
            "frames": [{
                "file_path": "./train/r_0",
                "transform_matrix": [
                    [1.0, 0.0, 0.0, 0.0],
                    [0.0, 1.0, 0.0, 0.0],
                    [0.0, 0.0, 1.0, 0.0],
                    [0.0, 0.0, 0.0, 1.0]
                ]
            }]
        });
        std::fs::write(
            dir.path().join("transforms_train.json"),
            manifest.to_string(),
        )
        .unwrap();
        assert!(load_blender_dataset(dir.path(), [0.0; 3]).is_err());
    }

    #[test]
    fn malformed_manifest_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("transforms_train.json"), "{not json").unwrap();
        assert!(load_blender_dataset(dir.path(), [0.0; 3]).is_err());
        let empty = tempfile::tempdir().unwrap();
        assert!(load_blender_dataset(empty.path(), [0.0; 3]).is_err());
    }
}
