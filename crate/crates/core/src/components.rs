//! Connected-component labelling on ink rasters.
//!
//! Ink uses 8-connectivity; background uses the dual 4-connectivity so that
//! a diagonal pen stroke closes a loop.

use crate::raster::BinaryImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Component {
    pub label: u32,
    pub area: usize,
    pub left: usize,
    pub top: usize,
    pub right: usize,
    pub bottom: usize,
}

/// Ink components with a per-pixel label map (0 = background, labels from 1).
#[derive(Clone, Debug)]
pub struct Labels {
    width: usize,
    map: Vec<u32>,
    pub components: Vec<Component>,
}

impl Labels {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u32 {
        self.map[y * self.width + x]
    }

    pub fn component(&self, label: u32) -> Option<&Component> {
        label.checked_sub(1).and_then(|i| self.components.get(i as usize))
    }
}

const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];
const NEIGHBORS_4: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

/// Labels 8-connected ink components in raster scan order.
pub fn label_ink(img: &BinaryImage) -> Labels {
    let (w, h) = (img.width(), img.height());
    let mut map = vec![0u32; w * h];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for y0 in 0..h {
        for x0 in 0..w {
            if !img.get(x0, y0) || map[y0 * w + x0] != 0 {
                continue;
            }
            let label = components.len() as u32 + 1;
            let mut comp = Component {
                label,
                area: 0,
                left: x0,
                top: y0,
                right: x0,
                bottom: y0,
            };
            map[y0 * w + x0] = label;
            stack.push((x0, y0));
            while let Some((x, y)) = stack.pop() {
                comp.area += 1;
                comp.left = comp.left.min(x);
                comp.right = comp.right.max(x);
                comp.top = comp.top.min(y);
                comp.bottom = comp.bottom.max(y);
                for (dx, dy) in NEIGHBORS_8 {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    if img.get(nx, ny) && map[ny * w + nx] == 0 {
                        map[ny * w + nx] = label;
                        stack.push((nx, ny));
                    }
                }
            }
            components.push(comp);
        }
    }
    Labels {
        width: w,
        map,
        components,
    }
}

/// Areas of background regions that cannot be reached from the raster border
/// through 4-connected background.
pub fn enclosed_background(img: &BinaryImage) -> Vec<usize> {
    let (w, h) = (img.width(), img.height());
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let flood = |start: (usize, usize), seen: &mut Vec<bool>, stack: &mut Vec<(usize, usize)>| {
        let mut area = 0;
        seen[start.1 * w + start.0] = true;
        stack.push(start);
        while let Some((x, y)) = stack.pop() {
            area += 1;
            for (dx, dy) in NEIGHBORS_4 {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if !img.get(nx, ny) && !seen[ny * w + nx] {
                    seen[ny * w + nx] = true;
                    stack.push((nx, ny));
                }
            }
        }
        area
    };
    for y in 0..h {
        for x in 0..w {
            let border = x == 0 || y == 0 || x + 1 == w || y + 1 == h;
            if border && !img.get(x, y) && !seen[y * w + x] {
                flood((x, y), &mut seen, &mut stack);
            }
        }
    }
    let mut holes = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !img.get(x, y) && !seen[y * w + x] {
                holes.push(flood((x, y), &mut seen, &mut stack));
            }
        }
    }
    holes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pixels_join() {
        let img = BinaryImage::from_ascii("#..\n.#.\n..#\n...\n#..").unwrap();
        let labels = label_ink(&img);
        assert_eq!(labels.components.len(), 2);
        assert_eq!(labels.components[0].area, 3);
        assert_eq!(labels.at(2, 2), labels.at(0, 0));
        assert_eq!(labels.at(1, 1), 1);
        assert_eq!(labels.at(0, 4), 2);
    }

    #[test]
    fn ring_has_one_hole() {
        let img = BinaryImage::from_ascii(
            "
            .....
            .###.
            .#.#.
            .###.
            .....
            ",
        )
        .unwrap();
        assert_eq!(enclosed_background(&img), vec![1]);
    }

    #[test]
    fn diagonal_ring_still_encloses() {
        let img = BinaryImage::from_ascii(
            "
            ..#..
            .#.#.
            ..#..
            ",
        )
        .unwrap();
        assert_eq!(enclosed_background(&img), vec![1]);
    }

    #[test]
    fn open_cup_has_no_hole() {
        let img = BinaryImage::from_ascii("#.#\n#.#\n###").unwrap();
        assert!(enclosed_background(&img).is_empty());
    }
}
