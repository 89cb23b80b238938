//! Tiny raster plotter for ROC curves and confusion matrices.

use super::{Colormap, SpectrogramImage};

const WHITE: [u8; 3] = [255, 255, 255];
const BLACK: [u8; 3] = [0, 0, 0];
const GREY: [u8; 3] = [170, 170, 170];
const BLUE: [u8; 3] = [31, 119, 180];

/// 3×5 digit glyphs, one row per `u8` (low three bits, MSB = leftmost).
const DIGITS: [[u8; 5]; 10] = [
    [7, 5, 5, 5, 7],
    [2, 6, 2, 2, 7],
    [7, 1, 7, 4, 7],
    [7, 1, 7, 1, 7],
    [5, 5, 7, 1, 1],
    [7, 4, 7, 1, 7],
    [7, 4, 7, 5, 7],
    [7, 1, 1, 1, 1],
    [7, 5, 7, 5, 7],
    [7, 5, 7, 1, 7],
];

struct Canvas {
    w: usize,
    h: usize,
    px: Vec<u8>,
}

impl Canvas {
    fn new(w: usize, h: usize) -> Self {
        Self {
            w,
            h,
            px: WHITE.repeat(w * h),
        }
    }

    fn set(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x < 0 || y < 0 || x as usize >= self.w || y as usize >= self.h {
            return;
        }
        let i = (y as usize * self.w + x as usize) * 3;
        self.px[i..i + 3].copy_from_slice(&c);
    }

    fn line(&mut self, (x0, y0): (i64, i64), (x1, y1): (i64, i64), c: [u8; 3]) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = ((x1 - x0).signum(), (y1 - y0).signum());
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.set(x, y, c);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    fn rect(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, c: [u8; 3]) {
        for y in y0..y1 {
            for x in x0..x1 {
                self.set(x, y, c);
            }
        }
    }

    fn number(&mut self, n: u64, cx: i64, cy: i64, scale: i64, c: [u8; 3]) {
        let s = n.to_string();
        let width = s.len() as i64 * 4 * scale - scale;
        let mut x = cx - width / 2;
        let y = cy - 5 * scale / 2;
        for ch in s.bytes() {
            let glyph = DIGITS[(ch - b'0') as usize];
            for (row, bits) in glyph.iter().enumerate() {
                for col in 0..3 {
                    if bits >> (2 - col) & 1 == 1 {
                        let (px, py) = (x + col * scale, y + row as i64 * scale);
                        self.rect(px, py, px + scale, py + scale, c);
                    }
                }
            }
            x += 4 * scale;
        }
    }

    fn into_image(self) -> SpectrogramImage {
        SpectrogramImage {
            width: self.w,
            height: self.h,
            channels: 3,
            pixels: self.px,
            colormap_name: None,
            mode: None,
        }
    }
}

/// ROC curve over `(fpr, tpr)` points on a `size × size` canvas, with the
/// chance diagonal in grey.
pub fn roc_plot(points: &[(f64, f64)], size: usize) -> SpectrogramImage {
    let size = size.max(32);
    let mut cv = Canvas::new(size, size);
    let m = (size / 10) as i64;
    let span = size as i64 - 2 * m;
    let map = |fpr: f64, tpr: f64| {
        (
            m + (fpr.clamp(0.0, 1.0) * span as f64).round() as i64,
            m + span - (tpr.clamp(0.0, 1.0) * span as f64).round() as i64,
        )
    };
    cv.line(map(0.0, 0.0), map(1.0, 1.0), GREY);
    cv.line(map(0.0, 0.0), map(1.0, 0.0), BLACK);
    cv.line(map(0.0, 0.0), map(0.0, 1.0), BLACK);
    for w in points.windows(2) {
        cv.line(map(w[0].0, w[0].1), map(w[1].0, w[1].1), BLUE);
    }
    cv.into_image()
}

/// 2×2 confusion matrix, rows = truth (Fail, Pass), columns = prediction
/// (Fail, Pass). Cells are shaded by count and labelled with it.
pub fn confusion_plot(tp: u64, fn_: u64, fp: u64, tn: u64, cell: usize) -> SpectrogramImage {
    let cell = cell.max(16);
    let mut cv = Canvas::new(2 * cell, 2 * cell);
    let cmap = Colormap::viridis();
    let max = tp.max(fn_).max(fp).max(tn).max(1) as f64;
    let scale = (cell / 16).max(1) as i64;
    for (i, &n) in [tp, fn_, fp, tn].iter().enumerate() {
        let (col, row) = ((i % 2) as i64, (i / 2) as i64);
        let c = cell as i64;
        let v = n as f64 / max;
        cv.rect(col * c, row * c, col * c + c, row * c + c, cmap.lookup(v));
        let ink = if v > 0.6 { BLACK } else { WHITE };
        cv.number(n, col * c + c / 2, row * c + c / 2, scale, ink);
    }
    cv.into_image()
}
