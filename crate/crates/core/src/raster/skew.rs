use super::BinaryImage;
use crate::error::{OcrError, Result};

/// Orientation of the minimum-area rectangle around all ink.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkewEstimate {
    /// Degrees, counter-clockwise positive as seen on screen, in (-45, 45].
    pub angle: f64,
    /// Share of the fitted rectangle covered by ink, in [0, 1].
    pub confidence: f64,
}

impl SkewEstimate {
    pub fn level() -> Self {
        Self {
            angle: 0.0,
            confidence: 1.0,
        }
    }
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain; returns the hull counter-clockwise without the
/// closing point. Collinear input collapses to its two extremes.
fn convex_hull(mut pts: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Folds an angle in degrees into (-45, 45].
fn fold_quarter(deg: f64) -> f64 {
    let mut a = deg.rem_euclid(90.0);
    if a > 45.0 {
        a -= 90.0;
    }
    a
}

/// Skew of the page ink from its minimum-area bounding rectangle
/// (rotating calipers over the convex hull).
pub fn estimate_skew(img: &BinaryImage) -> Result<SkewEstimate> {
    let mut pts = Vec::new();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if img.get(x, y) {
                pts.push((x as i64, y as i64));
            }
        }
    }
    let ink = pts.len();
    if ink < 3 {
        return Err(OcrError::InsufficientInk {
            found: ink,
            needed: 3,
        });
    }
    let hull = convex_hull(pts);
    if hull.len() < 3 {
        // All ink on one line: the rectangle degenerates to that segment.
        let (a, b) = (hull[0], hull[hull.len() - 1]);
        let angle = fold_quarter(-((b.1 - a.1) as f64).atan2((b.0 - a.0) as f64).to_degrees());
        return Ok(SkewEstimate {
            angle,
            confidence: 1.0,
        });
    }

    let mut best: Option<(f64, f64, f64)> = None; // (area, angle, rect pixels)
    for i in 0..hull.len() {
        let p = hull[i];
        let q = hull[(i + 1) % hull.len()];
        let (dx, dy) = ((q.0 - p.0) as f64, (q.1 - p.1) as f64);
        let len = dx.hypot(dy);
        let (ux, uy) = (dx / len, dy / len);
        let (mut lo_u, mut hi_u, mut lo_v, mut hi_v) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in &hull {
            let (x, y) = (x as f64, y as f64);
            let u = x * ux + y * uy;
            let v = -x * uy + y * ux;
            lo_u = lo_u.min(u);
            hi_u = hi_u.max(u);
            lo_v = lo_v.min(v);
            hi_v = hi_v.max(v);
        }
        let area = (hi_u - lo_u) * (hi_v - lo_v);
        // Image rows grow downward, so the on-screen angle flips sign.
        let angle = fold_quarter(-dy.atan2(dx).to_degrees());
        let pixels = (hi_u - lo_u + 1.0) * (hi_v - lo_v + 1.0);
        let better = match best {
            None => true,
            Some((a, ang, _)) => {
                area < a - 1e-9 || ((area - a).abs() <= 1e-9 && angle.abs() < ang.abs())
            }
        };
        if better {
            best = Some((area, angle, pixels));
        }
    }
    let (_, angle, pixels) = best.expect("hull has edges");
    Ok(SkewEstimate {
        angle,
        confidence: (ink as f64 / pixels).clamp(0.0, 1.0),
    })
}

/// Rotates the page by `-est.angle` about its centre with bilinear sampling,
/// then re-thresholds at 0.5. The canvas grows to hold the rotated page.
pub fn deskew(img: &BinaryImage, est: &SkewEstimate) -> Result<BinaryImage> {
    if est.angle.abs() >= 45.0 || !est.angle.is_finite() {
        return Err(OcrError::invalid(format!(
            "deskew angle {} outside (-45, 45)",
            est.angle
        )));
    }
    if est.angle == 0.0 {
        return Ok(img.clone());
    }
    let (w, h) = (img.width() as f64, img.height() as f64);
    // A counter-clockwise skew is undone by a clockwise turn, which in
    // y-down coordinates is a positive rotation by the same angle.
    let a = est.angle.to_radians();
    let (sin, cos) = a.sin_cos();
    let out_w = (w * cos.abs() + h * sin.abs()).ceil() as usize;
    let out_h = (w * sin.abs() + h * cos.abs()).ceil() as usize;
    let (icx, icy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
    let (ocx, ocy) = ((out_w as f64 - 1.0) / 2.0, (out_h as f64 - 1.0) / 2.0);

    let sample = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= img.width() as isize || y >= img.height() as isize {
            0.0
        } else if img.get(x as usize, y as usize) {
            1.0
        } else {
            0.0
        }
    };

    let mut out = BinaryImage::blank(out_w, out_h);
    for oy in 0..out_h {
        for ox in 0..out_w {
            let (u, v) = (ox as f64 - ocx, oy as f64 - ocy);
            let sx = cos * u + sin * v + icx;
            let sy = -sin * u + cos * v + icy;
            if sx <= -1.0 || sy <= -1.0 || sx >= w || sy >= h {
                continue;
            }
            let (x0, y0) = (sx.floor(), sy.floor());
            let (fx, fy) = (sx - x0, sy - y0);
            let (x0, y0) = (x0 as isize, y0 as isize);
            let value = sample(x0, y0) * (1.0 - fx) * (1.0 - fy)
                + sample(x0 + 1, y0) * fx * (1.0 - fy)
                + sample(x0, y0 + 1) * (1.0 - fx) * fy
                + sample(x0 + 1, y0 + 1) * fx * fy;
            if value >= 0.5 {
                out.set(ox, oy, true);
            }
        }
    }
    Ok(out)
}
