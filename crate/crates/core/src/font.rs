//! Embedded 5x7 bitmap font for digits and the decimal point.
//!
//! The synthetic renderer draws labels with it and the built-in recognizer
//! matches against it, so the two always agree.

pub const GLYPH_W: usize = 5;
pub const GLYPH_H: usize = 7;
/// Blank columns between glyph boxes.
pub const LETTER_SPACING: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Glyph {
    pub ch: char,
    rows: [&'static str; GLYPH_H],
}

impl Glyph {
    #[inline]
    pub fn ink(&self, col: usize, row: usize) -> bool {
        self.rows[row].as_bytes()[col] == b'#'
    }

    /// Tight bounding box of the inked cells: (col0, row0, cols, rows).
    pub fn ink_box(&self) -> (usize, usize, usize, usize) {
        let (mut c0, mut c1, mut r0, mut r1) = (GLYPH_W, 0, GLYPH_H, 0);
        for r in 0..GLYPH_H {
            for c in 0..GLYPH_W {
                if self.ink(c, r) {
                    c0 = c0.min(c);
                    c1 = c1.max(c);
                    r0 = r0.min(r);
                    r1 = r1.max(r);
                }
            }
        }
        (c0, r0, c1 - c0 + 1, r1 - r0 + 1)
    }

    /// Fraction of the rectangle [x0,x1)x[y0,y1) (in cell units, relative
    /// to the ink box) that is inked.
    pub fn coverage_in_ink_box(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
        let (bc, br, _, _) = self.ink_box();
        let area = (x1 - x0) * (y1 - y0);
        if area <= 0.0 {
            return 0.0;
        }
        let mut inked = 0.0;
        let (cs, ce) = (x0.floor().max(0.0) as usize, x1.ceil() as usize);
        let (rs, re) = (y0.floor().max(0.0) as usize, y1.ceil() as usize);
        for r in rs..re {
            for c in cs..ce {
                let (gc, gr) = (c + bc, r + br);
                if gc >= GLYPH_W || gr >= GLYPH_H || !self.ink(gc, gr) {
                    continue;
                }
                let ox = (x1.min(c as f64 + 1.0) - x0.max(c as f64)).max(0.0);
                let oy = (y1.min(r as f64 + 1.0) - y0.max(r as f64)).max(0.0);
                inked += ox * oy;
            }
        }
        inked / area
    }
}

pub const GLYPHS: [Glyph; 11] = [
    Glyph {
        ch: '0',
        rows: [".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."],
    },
    Glyph {
        ch: '1',
        rows: ["..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."],
    },
    Glyph {
        ch: '2',
        rows: [".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"],
    },
    Glyph {
        ch: '3',
        rows: ["#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."],
    },
    Glyph {
        ch: '4',
        rows: ["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."],
    },
    Glyph {
        ch: '5',
        rows: ["#####", "#....", "####.", "....#", "....#", "#...#", ".###."],
    },
    Glyph {
        ch: '6',
        rows: ["..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."],
    },
    Glyph {
        ch: '7',
        rows: ["#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."],
    },
    Glyph {
        ch: '8',
        rows: [".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."],
    },
    Glyph {
        ch: '9',
        rows: [".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."],
    },
    Glyph {
        ch: '.',
        rows: [".....", ".....", ".....", ".....", ".....", ".##..", ".##.."],
    },
];

pub fn glyph(ch: char) -> Option<&'static Glyph> {
    GLYPHS.iter().find(|g| g.ch == ch)
}

/// Width of `text` in cells, including letter spacing.
pub fn text_width_cells(text: &str) -> usize {
    let n = text.chars().count();
    if n == 0 {
        0
    } else {
        n * GLYPH_W + (n - 1) * LETTER_SPACING
    }
}

/// Whether cell (col, row) of laid-out `text` is inked.
pub fn text_ink(text: &str, col: i64, row: i64) -> bool {
    if row < 0 || row >= GLYPH_H as i64 || col < 0 {
        return false;
    }
    let advance = (GLYPH_W + LETTER_SPACING) as i64;
    let idx = col / advance;
    let within = col % advance;
    if within >= GLYPH_W as i64 {
        return false;
    }
    text.chars()
        .nth(idx as usize)
        .and_then(glyph)
        .is_some_and(|g| g.ink(within as usize, row as usize))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glyph_rows_are_well_formed() {
        for g in &GLYPHS {
            for r in g.rows {
                assert_eq!(r.len(), GLYPH_W, "glyph {}", g.ch);
                assert!(r.bytes().all(|b| b == b'#' || b == b'.'));
            }
        }
    }

    #[test]
    fn ink_boxes() {
        assert_eq!(glyph('1').unwrap().ink_box(), (1, 0, 3, 7));
        assert_eq!(glyph('8').unwrap().ink_box(), (0, 0, 5, 7));
        assert_eq!(glyph('.').unwrap().ink_box(), (1, 5, 2, 2));
    }

    #[test]
    fn text_layout() {
        assert_eq!(text_width_cells("25"), 12);
        assert!(text_ink("25", 0, 6)); // bottom bar of '2'
        assert!(!text_ink("25", 5, 0)); // spacing
        assert!(text_ink("25", 7, 0)); // top bar of '5'
        assert!(!text_ink("25", 12, 0));
    }

    #[test]
    fn coverage_of_full_box() {
        let g = glyph('8').unwrap();
        let full = g.coverage_in_ink_box(0.0, 0.0, 5.0, 7.0);
        let inked = (0..7).flat_map(|r| (0..5).map(move |c| (c, r))).filter(|&(c, r)| g.ink(c, r)).count();
        assert!((full - inked as f64 / 35.0).abs() < 1e-12);
    }
}
