//! Generic convolution, resampling and pyramid kernels over [`Plane`].

use crate::raster::Plane;
use crate::scalar::Scalar;

/// Bilinear sample at fractional coordinates, clamped to the border.
#[inline]
pub fn sample_bilinear<T: Scalar>(p: &Plane<T>, fx: f64, fy: f64) -> T {
    let fx = fx.clamp(0.0, (p.width - 1) as f64);
    let fy = fy.clamp(0.0, (p.height - 1) as f64);
    let x0 = fx.floor() as usize;
    let y0 = fy.floor() as usize;
    let x1 = (x0 + 1).min(p.width - 1);
    let y1 = (y0 + 1).min(p.height - 1);
    let tx = T::lit(fx - x0 as f64);
    let ty = T::lit(fy - y0 as f64);
    let one = T::one();
    let top = p.get(x0, y0) * (one - tx) + p.get(x1, y0) * tx;
    let bot = p.get(x0, y1) * (one - tx) + p.get(x1, y1) * tx;
    top * (one - ty) + bot * ty
}

/// Bilinear resize with pixel-centre alignment.
pub fn resize_plane<T: Scalar>(p: &Plane<T>, width: usize, height: usize) -> Plane<T> {
    if (width, height) == (p.width, p.height) {
        return p.clone();
    }
    let sx = p.width as f64 / width as f64;
    let sy = p.height as f64 / height as f64;
    Plane::from_fn(width, height, |x, y| {
        sample_bilinear(p, (x as f64 + 0.5) * sx - 0.5, (y as f64 + 0.5) * sy - 0.5)
    })
}

/// Normalized 1-D Gaussian with radius `ceil(3 sigma)`.
pub fn gaussian_kernel<T: Scalar>(sigma: f64) -> Vec<T> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| T::lit(v / sum)).collect()
}

/// Separable convolution with odd-length kernels and replicated borders.
pub fn convolve_separable<T: Scalar>(p: &Plane<T>, kx: &[T], ky: &[T]) -> Plane<T> {
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;
    let horiz = Plane::from_fn(p.width, p.height, |x, y| {
        kx.iter()
            .enumerate()
            .map(|(i, &k)| k * p.get_clamped(x as isize + i as isize - rx, y as isize))
            .sum()
    });
    Plane::from_fn(p.width, p.height, |x, y| {
        ky.iter()
            .enumerate()
            .map(|(i, &k)| k * horiz.get_clamped(x as isize, y as isize + i as isize - ry))
            .sum()
    })
}

pub fn gaussian_blur<T: Scalar>(p: &Plane<T>, sigma: f64) -> Plane<T> {
    let k = gaussian_kernel::<T>(sigma);
    convolve_separable(p, &k, &k)
}

/// Dense 2-D convolution (correlation orientation) with replicated borders.
pub fn convolve2d<T: Scalar>(p: &Plane<T>, kernel: &Plane<T>) -> Plane<T> {
    let rx = (kernel.width / 2) as isize;
    let ry = (kernel.height / 2) as isize;
    Plane::from_fn(p.width, p.height, |x, y| {
        let mut acc = T::zero();
        for ky in 0..kernel.height {
            for kx in 0..kernel.width {
                let k = kernel.get(kx, ky);
                if k != T::zero() {
                    acc = acc + k * p.get_clamped(x as isize + kx as isize - rx, y as isize + ky as isize - ry);
                }
            }
        }
        acc
    })
}

/// Horizontal and vertical 3x3 Sobel responses.
pub fn sobel<T: Scalar>(p: &Plane<T>) -> (Plane<T>, Plane<T>) {
    let two = T::lit(2.0);
    let gx = Plane::from_fn(p.width, p.height, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let g = |dx, dy| p.get_clamped(x + dx, y + dy);
        (g(1, -1) + two * g(1, 0) + g(1, 1)) - (g(-1, -1) + two * g(-1, 0) + g(-1, 1))
    });
    let gy = Plane::from_fn(p.width, p.height, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let g = |dx, dy| p.get_clamped(x + dx, y + dy);
        (g(-1, 1) + two * g(0, 1) + g(1, 1)) - (g(-1, -1) + two * g(0, -1) + g(1, -1))
    });
    (gx, gy)
}

/// One dyadic pyramid step: 5-tap binomial blur, then keep even samples.
pub fn pyr_down<T: Scalar>(p: &Plane<T>) -> Plane<T> {
    let k: Vec<T> = [1.0, 4.0, 6.0, 4.0, 1.0].iter().map(|&v| T::lit(v / 16.0)).collect();
    let blurred = convolve_separable(p, &k, &k);
    let w = p.width.div_ceil(2).max(1);
    let h = p.height.div_ceil(2).max(1);
    Plane::from_fn(w, h, |x, y| blurred.get(2 * x, 2 * y))
}

/// Dyadic Gaussian pyramid with `levels` entries; level 0 is the input.
pub fn gaussian_pyramid<T: Scalar>(p: &Plane<T>, levels: usize) -> Vec<Plane<T>> {
    let mut out = Vec::with_capacity(levels);
    out.push(p.clone());
    for i in 1..levels {
        let next = pyr_down(&out[i - 1]);
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_kernel_normalized_and_symmetric() {
        let k = gaussian_kernel::<f64>(1.0);
        assert_eq!(k.len(), 7);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(k[0], k[6]);
    }

    #[test]
    fn blur_preserves_constant() {
        let p = Plane::<f32>::from_fn(9, 7, |_, _| 3.5);
        let b = gaussian_blur(&p, 1.3);
        assert!(b.data.iter().all(|&v| (v - 3.5).abs() < 1e-5));
    }

    #[test]
    fn sobel_of_ramp() {
        let p = Plane::<f64>::from_fn(6, 6, |x, _| x as f64);
        let (gx, gy) = sobel(&p);
        assert_eq!(gx.get(2, 2), 8.0);
        assert_eq!(gy.get(2, 2), 0.0);
    }

    #[test]
    fn pyramid_dimensions() {
        let p = Plane::<f32>::zeros(100, 37);
        let pyr = gaussian_pyramid(&p, 9);
        let dims: Vec<_> = pyr.iter().map(|l| (l.width, l.height)).collect();
        assert_eq!(dims[1], (50, 19));
        assert_eq!(dims[8], (1, 1));
    }

    #[test]
    fn resize_identity_and_constant() {
        let p = Plane::<f64>::from_fn(5, 4, |x, y| (x * 10 + y) as f64);
        assert_eq!(resize_plane(&p, 5, 4), p);
        let c = Plane::<f64>::from_fn(5, 4, |_, _| 2.0);
        assert!(resize_plane(&c, 13, 3).data.iter().all(|&v| (v - 2.0).abs() < 1e-12));
    }
}
