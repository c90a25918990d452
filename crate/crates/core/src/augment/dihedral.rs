use serde::{Deserialize, Serialize};

use crate::raster::{FloatRaster, Rect};

/// Flip/rotation symmetry: an optional horizontal flip followed by `rot`
/// clockwise quarter turns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dihedral {
    pub flip_h: bool,
    pub rot: u8,
}

impl Dihedral {
    pub const IDENTITY: Dihedral = Dihedral {
        flip_h: false,
        rot: 0,
    };
    pub const FLIP_H: Dihedral = Dihedral {
        flip_h: true,
        rot: 0,
    };
    pub const FLIP_V: Dihedral = Dihedral {
        flip_h: true,
        rot: 2,
    };

    pub fn rotation(quarter_turns: u8) -> Dihedral {
        Dihedral {
            flip_h: false,
            rot: quarter_turns % 4,
        }
    }

    pub fn all() -> impl Iterator<Item = Dihedral> {
        (0..8u8).map(|i| Dihedral {
            flip_h: i >= 4,
            rot: i % 4,
        })
    }

    pub fn output_dims(self, w: usize, h: usize) -> (usize, usize) {
        if self.rot % 2 == 1 {
            (h, w)
        } else {
            (w, h)
        }
    }

    /// Where pixel `(x, y)` of a `w x h` raster lands.
    #[inline]
    pub fn map_point(self, x: usize, y: usize, w: usize, h: usize) -> (usize, usize) {
        let (mut x, mut y, mut w, mut h) = (x, y, w, h);
        if self.flip_h {
            x = w - 1 - x;
        }
        for _ in 0..self.rot % 4 {
            (x, y) = (h - 1 - y, x);
            (w, h) = (h, w);
        }
        (x, y)
    }

    pub fn map_rect(self, r: Rect, w: usize, h: usize) -> Rect {
        let (ax, ay) = self.map_point(r.x, r.y, w, h);
        let (bx, by) = self.map_point(r.right() - 1, r.bottom() - 1, w, h);
        Rect::new(
            ax.min(bx),
            ay.min(by),
            ax.abs_diff(bx) + 1,
            ay.abs_diff(by) + 1,
        )
    }

    /// `self` followed by `next`.
    pub fn then(self, next: Dihedral) -> Dihedral {
        // Identify the composite by its action on an asymmetric probe.
        let (w, h) = (3, 2);
        let probe = |d: Dihedral| -> Vec<(usize, usize)> {
            (0..w * h)
                .map(|i| d.map_point(i % w, i / w, w, h))
                .collect()
        };
        let (mw, mh) = self.output_dims(w, h);
        let target: Vec<(usize, usize)> = (0..w * h)
            .map(|i| {
                let (x, y) = self.map_point(i % w, i / w, w, h);
                next.map_point(x, y, mw, mh)
            })
            .collect();
        Dihedral::all()
            .find(|&d| probe(d) == target)
            .expect("dihedral group is closed")
    }

    pub fn inverse(self) -> Dihedral {
        Dihedral::all()
            .find(|&d| self.then(d) == Dihedral::IDENTITY)
            .expect("every element has an inverse")
    }

    pub fn apply(self, r: &FloatRaster) -> FloatRaster {
        if self == Dihedral::IDENTITY {
            return r.clone();
        }
        let (w, h, ch) = (r.width(), r.height(), r.channels());
        let (ow, _) = self.output_dims(w, h);
        let mut out = vec![0f32; r.data().len()];
        for y in 0..h {
            for x in 0..w {
                let (nx, ny) = self.map_point(x, y, w, h);
                let d = (ny * ow + nx) * ch;
                out[d..d + ch].copy_from_slice(r.pixel(x, y));
            }
        }
        let (ow, oh) = self.output_dims(w, h);
        FloatRaster::from_vec_unchecked(ow, oh, ch, out)
    }
}
