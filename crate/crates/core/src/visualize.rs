//! Side-by-side match overlays.

use crate::error::{Error, Result};
use crate::imgcore::{GrayImage, RgbImage};
use crate::similarity::ReportMatch;

pub const LINE_RGB: [u8; 3] = [0, 220, 0];
pub const CIRCLE_RGB: [u8; 3] = [255, 200, 0];

/// Circle radius per unit of keypoint sigma.
pub const RADIUS_PER_SIGMA: f64 = 3.0;

fn gray_to_rgb(image: &GrayImage) -> RgbImage {
    let data = image.to_u8_samples().into_iter().flat_map(|v| [v, v, v]).collect();
    RgbImage::new(image.width(), image.height(), data).expect("dimensions come from a valid image")
}

fn plot(canvas: &mut RgbImage, x: i64, y: i64, rgb: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as usize) < canvas.width() && (y as usize) < canvas.height() {
        canvas.put_pixel(x as usize, y as usize, rgb);
    }
}

/// Bresenham segment, clipped to the canvas.
pub fn draw_line(canvas: &mut RgbImage, from: [f64; 2], to: [f64; 2], rgb: [u8; 3]) {
    let (mut x0, mut y0) = (from[0].round() as i64, from[1].round() as i64);
    let (x1, y1) = (to[0].round() as i64, to[1].round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        plot(canvas, x0, y0, rgb);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

/// Midpoint circle outline.
pub fn draw_circle(canvas: &mut RgbImage, centre: [f64; 2], radius: f64, rgb: [u8; 3]) {
    let (cx, cy) = (centre[0].round() as i64, centre[1].round() as i64);
    let r = radius.round().max(1.0) as i64;
    let (mut x, mut y, mut err) = (r, 0i64, 1 - r);
    while x >= y {
        for (px, py) in [(x, y), (y, x), (-y, x), (-x, y), (-x, -y), (-y, -x), (y, -x), (x, -y)] {
            plot(canvas, cx + px, cy + py, rgb);
        }
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
}

/// Places `a` and `b` side by side on a black canvas of size
/// `(wa + wb) x max(ha, hb)` and draws each match: a circle at both keypoints
/// and a line between them.
pub fn render_matches(a: &GrayImage, b: &GrayImage, matches: &[ReportMatch]) -> Result<RgbImage> {
    let (wa, wb) = (a.width(), b.width());
    let h = a.height().max(b.height());
    let mut canvas = RgbImage::filled(wa + wb, h, [0, 0, 0])?;
    for (img, x_off) in [(gray_to_rgb(a), 0), (gray_to_rgb(b), wa)] {
        for y in 0..img.height() {
            for x in 0..img.width() {
                canvas.put_pixel(x + x_off, y, img.pixel(x, y));
            }
        }
    }
    let off = wa as f64;
    for m in matches {
        if m.query_kp.iter().chain(&m.train_kp).any(|v| !v.is_finite()) {
            return Err(Error::arg("match keypoint is not finite"));
        }
        let pa = [m.query_kp[0], m.query_kp[1]];
        let pb = [m.train_kp[0] + off, m.train_kp[1]];
        draw_line(&mut canvas, pa, pb, LINE_RGB);
        draw_circle(&mut canvas, pa, RADIUS_PER_SIGMA * m.query_kp[2], CIRCLE_RGB);
        draw_circle(&mut canvas, pb, RADIUS_PER_SIGMA * m.train_kp[2], CIRCLE_RGB);
    }
    Ok(canvas)
}
