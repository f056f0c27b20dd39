//! Training loss: `(1 - lambda) * L1 + lambda * DSSIM` with analytic
//! gradients.
//!
//! SSIM uses an 11x11 Gaussian window (sigma 1.5, k1 = 0.01, k2 = 0.03,
//! dynamic range 1) applied with zero padding, and DSSIM = (1 - mean SSIM)/2.
//! The windowed means, variances and covariance are linear/quadratic in the
//! rendered image, so the adjoint is three more window correlations.

use crate::img::FloatImage;
use crate::{Result, Rgb};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in w.iter_mut().enumerate() {
        *v = (-((i as f64 - c).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in w.iter_mut() {
        *v /= sum;
    }
    w
}

/// Separable zero-padded correlation of one channel plane with the window.
fn blur(plane: &[f64], width: usize, height: usize) -> Vec<f64> {
    let w = gaussian_window();
    let half = SSIM_WINDOW as isize / 2;
    let mut tmp = vec![0.0; plane.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, &wk) in w.iter().enumerate() {
                let sx = x as isize + k as isize - half;
                if sx >= 0 && (sx as usize) < width {
                    acc += wk * plane[y * width + sx as usize];
                }
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, &wk) in w.iter().enumerate() {
                let sy = y as isize + k as isize - half;
                if sy >= 0 && (sy as usize) < height {
                    acc += wk * tmp[sy as usize * width + x];
                }
            }
            out[y * width + x] = acc;
        }
    }
    out
}

fn channel_plane(img: &FloatImage, ch: usize) -> Vec<f64> {
    img.data.iter().map(|px| px[ch]).collect()
}

struct SsimStats {
    ux: Vec<f64>,
    uy: Vec<f64>,
    uxx: Vec<f64>,
    uxy: Vec<f64>,
    uyy: Vec<f64>,
}

fn ssim_stats(x: &[f64], y: &[f64], width: usize, height: usize) -> SsimStats {
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    SsimStats {
        ux: blur(x, width, height),
        uy: blur(y, width, height),
        uxx: blur(&xx, width, height),
        uxy: blur(&xy, width, height),
        uyy: blur(&yy, width, height),
    }
}

#[inline]
fn ssim_terms(s: &SsimStats, p: usize) -> (f64, f64, f64, f64, f64) {
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let (ux, uy) = (s.ux[p], s.uy[p]);
    let var_x = s.uxx[p] - ux * ux;
    let var_y = s.uyy[p] - uy * uy;
    let cov = s.uxy[p] - ux * uy;
    let a1 = 2.0 * ux * uy + c1;
    let a2 = 2.0 * cov + c2;
    let b1 = ux * ux + uy * uy + c1;
    let b2 = var_x + var_y + c2;
    (a1, a2, b1, b2, a1 * a2 / (b1 * b2))
}

/// Mean SSIM over pixels and channels.
pub fn ssim_mean(x: &FloatImage, y: &FloatImage) -> Result<f64> {
    x.same_dims(y)?;
    let (w, h) = (x.width as usize, x.height as usize);
    let mut total = 0.0;
    for ch in 0..3 {
        let xp = channel_plane(x, ch);
        let yp = channel_plane(y, ch);
        let stats = ssim_stats(&xp, &yp, w, h);
        for p in 0..w * h {
            total += ssim_terms(&stats, p).4;
        }
    }
    Ok(total / (w * h * 3) as f64)
}

fn l1_mean(x: &FloatImage, y: &FloatImage) -> f64 {
    let mut acc = 0.0;
    for (a, b) in x.data.iter().zip(&y.data) {
        for ch in 0..3 {
            acc += (a[ch] - b[ch]).abs();
        }
    }
    acc / (x.data.len() * 3) as f64
}

/// `(1 - lambda) * L1 + lambda * (1 - mean SSIM) / 2`.
pub fn loss(rendered: &FloatImage, target: &FloatImage, lambda: f64) -> Result<f64> {
    rendered.same_dims(target)?;
    let l1 = l1_mean(rendered, target);
    if lambda == 0.0 {
        return Ok(l1);
    }
    let dssim = (1.0 - ssim_mean(rendered, target)?) / 2.0;
    Ok((1.0 - lambda) * l1 + lambda * dssim)
}

/// Loss value plus its gradient with respect to the rendered image.
pub fn loss_gradient(
    rendered: &FloatImage,
    target: &FloatImage,
    lambda: f64,
) -> Result<(f64, FloatImage)> {
    rendered.same_dims(target)?;
    let (w, h) = (rendered.width as usize, rendered.height as usize);
    let n = (w * h * 3) as f64;
    let mut grad = FloatImage::new(rendered.width, rendered.height);

    // L1 part
    let mut l1 = 0.0;
    for (p, (a, b)) in rendered.data.iter().zip(&target.data).enumerate() {
        for ch in 0..3 {
            let d = a[ch] - b[ch];
            l1 += d.abs();
            grad.data[p][ch] = (1.0 - lambda) * d.signum() * if d == 0.0 { 0.0 } else { 1.0 } / n;
        }
    }
    l1 /= n;
    if lambda == 0.0 {
        return Ok((l1, grad));
    }

    // DSSIM part: dL/dS_p = -lambda / (2n) for every map pixel
    let upstream = -lambda / (2.0 * n);
    let mut ssim_total = 0.0;
    for ch in 0..3 {
        let xp = channel_plane(rendered, ch);
        let yp = channel_plane(target, ch);
        let stats = ssim_stats(&xp, &yp, w, h);

        let mut g_ux = vec![0.0; w * h];
        let mut g_uxx = vec![0.0; w * h];
        let mut g_uxy = vec![0.0; w * h];
        for p in 0..w * h {
            let (a1, a2, b1, b2, s) = ssim_terms(&stats, p);
            ssim_total += s;
            let (ux, uy) = (stats.ux[p], stats.uy[p]);
            let inv_bb = 1.0 / (b1 * b2);
            let ds_dux =
                2.0 * uy * (a2 - a1) * inv_bb + 2.0 * ux * s * (1.0 / b2 - 1.0 / b1);
            let ds_duxx = -s / b2;
            let ds_duxy = 2.0 * a1 * inv_bb;
            g_ux[p] = upstream * ds_dux;
            g_uxx[p] = upstream * ds_duxx;
            g_uxy[p] = upstream * ds_duxy;
        }
        // adjoint of the (symmetric, zero-padded) window correlation is the
        // same correlation
        let c_ux = blur(&g_ux, w, h);
        let c_uxx = blur(&g_uxx, w, h);
        let c_uxy = blur(&g_uxy, w, h);
        for p in 0..w * h {
            grad.data[p][ch] += c_ux[p] + 2.0 * xp[p] * c_uxx[p] + yp[p] * c_uxy[p];
        }
    }
    let dssim = (1.0 - ssim_total / n) / 2.0;
    Ok(((1.0 - lambda) * l1 + lambda * dssim, grad))
}

/// Splits a per-pixel gradient image into per-ray gradients: each of a
/// pixel's `rays_per_pixel` rays receives an equal share of the pixel mean.
pub fn pixel_grad_to_ray_grads(grad: &FloatImage, rays_per_pixel: u32) -> Vec<Rgb> {
    let share = 1.0 / rays_per_pixel as f64;
    let mut out = Vec::with_capacity(grad.data.len() * rays_per_pixel as usize);
    for px in &grad.data {
        for _ in 0..rays_per_pixel {
            out.push([px[0] * share, px[1] * share, px[2] * share]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn random_image(rng: &mut impl Rng, w: u32, h: u32) -> FloatImage {
        let mut img = FloatImage::new(w, h);
        for px in img.data.iter_mut() {
            *px = [rng.gen(), rng.gen(), rng.gen()];
        }
        img
    }

    #[test]
    fn identical_images_have_zero_loss() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        let img = random_image(&mut rng, 16, 12);
        assert_eq!(loss(&img, &img, 0.0).unwrap(), 0.0);
        let l = loss(&img, &img, 0.2).unwrap();
        assert!(l.abs() < 1e-12, "loss {l}");
        assert_relative_eq!(ssim_mean(&img, &img).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_l1_constant_offset() {
        let a = FloatImage::filled(8, 8, [0.4, 0.4, 0.4]);
        let b = FloatImage::filled(8, 8, [0.5, 0.5, 0.5]);
        assert_relative_eq!(loss(&a, &b, 0.0).unwrap(), 0.1, epsilon = 1e-12);
        // L1 is symmetric
        assert_relative_eq!(
            loss(&a, &b, 0.0).unwrap(),
            loss(&b, &a, 0.0).unwrap(),
            epsilon = 1e-15
        );
    }

    /// Brute-force per-pixel SSIM: window sums computed directly from the
    /// definition, no separable convolution.
    fn ssim_oracle(x: &FloatImage, y: &FloatImage) -> f64 {
        let w = gaussian_window();
        let half = SSIM_WINDOW as isize / 2;
        let (width, height) = (x.width as isize, x.height as isize);
        let c1 = SSIM_K1 * SSIM_K1;
        let c2 = SSIM_K2 * SSIM_K2;
        let mut total = 0.0;
        for ch in 0..3 {
            for py in 0..height {
                for px in 0..width {
                    let (mut ux, mut uy, mut uxx, mut uyy, mut uxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                    for ky in 0..SSIM_WINDOW as isize {
                        for kx in 0..SSIM_WINDOW as isize {
                            let sx = px + kx - half;
                            let sy = py + ky - half;
                            if sx < 0 || sx >= width || sy < 0 || sy >= height {
                                continue;
                            }
                            let weight = w[ky as usize] * w[kx as usize];
                            let xv = x.pixel(sx as u32, sy as u32)[ch];
                            let yv = y.pixel(sx as u32, sy as u32)[ch];
                            ux += weight * xv;
                            uy += weight * yv;
                            uxx += weight * xv * xv;
                            uyy += weight * yv * yv;
                            uxy += weight * xv * yv;
                        }
                    }
                    let var_x = uxx - ux * ux;
                    let var_y = uyy - uy * uy;
                    let cov = uxy - ux * uy;
                    total += ((2.0 * ux * uy + c1) * (2.0 * cov + c2))
                        / ((ux * ux + uy * uy + c1) * (var_x + var_y + c2));
                }
            }
        }
        total / (x.data.len() * 3) as f64
    }

    #[test]
    fn matches_independent_ssim_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(67);
        for _ in 0..5 {
            let a = random_image(&mut rng, 14, 9);
            let b = random_image(&mut rng, 14, 9);
            let fast = ssim_mean(&a, &b).unwrap();
            let slow = ssim_oracle(&a, &b);
            assert_relative_eq!(fast, slow, epsilon = 1e-12);

            let lambda = 0.2;
            let expect = 0.8 * l1_mean(&a, &b) + 0.2 * (1.0 - slow) / 2.0;
            assert_relative_eq!(loss(&a, &b, lambda).unwrap(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        for lambda in [0.0, 0.2, 1.0] {
            let mut rendered = random_image(&mut rng, 9, 7);
            let target = random_image(&mut rng, 9, 7);
            // keep L1 away from its kink
            for (r, t) in rendered.data.iter_mut().zip(&target.data) {
                for ch in 0..3 {
                    if (r[ch] - t[ch]).abs() < 1e-3 {
                        r[ch] += 2e-3;
                    }
                }
            }
            let (l0, grad) = loss_gradient(&rendered, &target, lambda).unwrap();
            assert_relative_eq!(l0, loss(&rendered, &target, lambda).unwrap(), epsilon = 1e-14);

            let h = 1e-6;
            for p in [0usize, 10, 31, 62] {
                for ch in 0..3 {
                    let mut plus = rendered.clone();
                    plus.data[p][ch] += h;
                    let mut minus = rendered.clone();
                    minus.data[p][ch] -= h;
                    let fd = (loss(&plus, &target, lambda).unwrap()
                        - loss(&minus, &target, lambda).unwrap())
                        / (2.0 * h);
                    let got = grad.data[p][ch];
                    assert!(
                        (fd - got).abs() <= 1e-6 * fd.abs().max(1e-6),
                        "lambda={lambda} p={p} ch={ch}: fd={fd} analytic={got}"
                    );
                }
            }
        }
    }

    #[test]
    fn ray_grad_split_shares_pixel_gradient() {
        let mut grad = FloatImage::new(2, 1);
        grad.set_pixel(0, 0, [0.4, 0.8, -0.4]);
        grad.set_pixel(1, 0, [1.0, 0.0, 0.0]);
        let rays = pixel_grad_to_ray_grads(&grad, 4);
        assert_eq!(rays.len(), 8);
        assert_eq!(rays[0], [0.1, 0.2, -0.1]);
        assert_eq!(rays[3], [0.1, 0.2, -0.1]);
        assert_eq!(rays[4], [0.25, 0.0, 0.0]);
    }
}
