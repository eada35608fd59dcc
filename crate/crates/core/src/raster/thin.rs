use super::BinaryImage;

/// Zhang-Suen two-subiteration thinning, repeated until stable.
///
/// Pixels outside the raster count as background. The result is a subset of
/// the input ink and is a fixed point of `thin`.
pub fn thin(img: &BinaryImage) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let mut cur = img.clone();
    if w == 0 || h == 0 {
        return cur;
    }
    let at = |im: &BinaryImage, x: isize, y: isize| -> u8 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0
        } else {
            u8::from(im.get(x as usize, y as usize))
        }
    };
    let mut doomed = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            doomed.clear();
            for y in 0..h as isize {
                for x in 0..w as isize {
                    if at(&cur, x, y) == 0 {
                        continue;
                    }
                    // P2..P9 clockwise from north.
                    let p = [
                        at(&cur, x, y - 1),
                        at(&cur, x + 1, y - 1),
                        at(&cur, x + 1, y),
                        at(&cur, x + 1, y + 1),
                        at(&cur, x, y + 1),
                        at(&cur, x - 1, y + 1),
                        at(&cur, x - 1, y),
                        at(&cur, x - 1, y - 1),
                    ];
                    let b: u8 = p.iter().sum();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&i| p[i] == 0 && p[(i + 1) % 8] == 1).count();
                    if a != 1 {
                        continue;
                    }
                    let (p2, p4, p6, p8) = (p[0], p[2], p[4], p[6]);
                    let remove = if pass == 0 {
                        p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0
                    } else {
                        p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0
                    };
                    if remove {
                        doomed.push((x as usize, y as usize));
                    }
                }
            }
            for &(x, y) in &doomed {
                cur.set(x, y, false);
            }
            changed |= !doomed.is_empty();
        }
        if !changed {
            return cur;
        }
    }
}
