//! Border handling and interpolation shared by the image transforms.

use image::GrayImage;

/// Mirror index without repeating the edge (`-1 -> 1`, `n -> n - 2`).
pub(crate) fn reflect_index(i: i64, n: u32) -> u32 {
    let n = n as i64;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as u32
}

/// Continuous counterpart of [`reflect_index`].
pub(crate) fn reflect_coord(x: f64, n: u32) -> f64 {
    if n == 1 {
        return 0.0;
    }
    let max = (n - 1) as f64;
    let period = 2.0 * max;
    let mut m = x.rem_euclid(period);
    if m > max {
        m = period - m;
    }
    m
}

pub(crate) fn bilinear(image: &GrayImage, x: f64, y: f64) -> f64 {
    let (w, h) = image.dimensions();
    let x = reflect_coord(x, w);
    let y = reflect_coord(y, h);
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let x0 = x0 as u32;
    let y0 = y0 as u32;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let p = |x: u32, y: u32| image.get_pixel(x, y).0[0] as f64;
    let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
    let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

pub(crate) fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}
