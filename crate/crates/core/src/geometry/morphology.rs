//! Binary morphology with disc structuring elements. Pixels outside the
//! image count as unset for both dilation and erosion.

use super::mask::BinaryMask;

/// Disc `dx² + dy² ≤ r²`, stored as a half-width per row offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    radius: usize,
    half_widths: Vec<usize>,
}

impl StructuringElement {
    pub fn disc(radius: usize) -> Self {
        let r2 = radius * radius;
        let half_widths = (0..=radius)
            .map(|dy| {
                let rem = r2 - dy * dy;
                let mut hw = (rem as f64).sqrt() as usize;
                while (hw + 1) * (hw + 1) <= rem {
                    hw += 1;
                }
                while hw * hw > rem {
                    hw -= 1;
                }
                hw
            })
            .collect();
        StructuringElement { radius, half_widths }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Half-width of the disc row at vertical offset `dy`.
    pub fn half_width(&self, dy: isize) -> usize {
        self.half_widths[dy.unsigned_abs()]
    }

    pub fn contains(&self, dx: isize, dy: isize) -> bool {
        dy.unsigned_abs() <= self.radius && dx.unsigned_abs() <= self.half_width(dy)
    }
}

fn prefix_rows(m: &BinaryMask) -> Vec<Vec<u32>> {
    (0..m.height())
        .map(|y| {
            let mut p = Vec::with_capacity(m.width() + 1);
            p.push(0);
            let mut acc = 0;
            for &b in m.row(y) {
                acc += b as u32;
                p.push(acc);
            }
            p
        })
        .collect()
}

pub fn dilate(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (w, h) = (m.width() as isize, m.height() as isize);
    let pre = prefix_rows(m);
    let r = se.radius() as isize;
    BinaryMask::from_fn(m.width(), m.height(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        (-r..=r).any(|dy| {
            let yy = y + dy;
            if yy < 0 || yy >= h {
                return false;
            }
            let hw = se.half_width(dy) as isize;
            let lo = (x - hw).max(0) as usize;
            let hi = (x + hw).min(w - 1) as usize;
            let row = &pre[yy as usize];
            row[hi + 1] > row[lo]
        })
    })
}

pub fn erode(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (w, h) = (m.width() as isize, m.height() as isize);
    let pre = prefix_rows(m);
    let r = se.radius() as isize;
    BinaryMask::from_fn(m.width(), m.height(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        (-r..=r).all(|dy| {
            let yy = y + dy;
            let hw = se.half_width(dy) as isize;
            if yy < 0 || yy >= h || x - hw < 0 || x + hw >= w {
                return false;
            }
            let row = &pre[yy as usize];
            (row[(x + hw + 1) as usize] - row[(x - hw) as usize]) as isize == 2 * hw + 1
        })
    })
}

/// Dilation followed by erosion.
pub fn close(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    erode(&dilate(m, se), se)
}

/// Erosion followed by dilation.
pub fn open(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    dilate(&erode(m, se), se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(m: &BinaryMask, r: usize, is_dilate: bool) -> BinaryMask {
        let ri = r as isize;
        BinaryMask::from_fn(m.width(), m.height(), |x, y| {
            let mut any = false;
            let mut all = true;
            for dy in -ri..=ri {
                for dx in -ri..=ri {
                    if dx * dx + dy * dy > ri * ri {
                        continue;
                    }
                    let (xx, yy) = (x as isize + dx, y as isize + dy);
                    let v = xx >= 0
                        && yy >= 0
                        && (xx as usize) < m.width()
                        && (yy as usize) < m.height()
                        && m.get(xx as usize, yy as usize);
                    any |= v;
                    all &= v;
                }
            }
            if is_dilate {
                any
            } else {
                all
            }
        })
    }

    #[test]
    fn disc_shape() {
        let se = StructuringElement::disc(3);
        assert!(se.contains(0, 0) && se.contains(3, 0) && se.contains(2, 2));
        assert!(!se.contains(3, 1) && !se.contains(0, 4));
        assert_eq!(StructuringElement::disc(0).half_width(0), 0);
    }

    #[test]
    fn empty_and_full() {
        let se = StructuringElement::disc(2);
        assert!(dilate(&BinaryMask::new(9, 9), &se).is_empty());
        let e = erode(&BinaryMask::full(9, 9), &se);
        assert_eq!(e.count(), 25);
        assert!(e.get(4, 4) && !e.get(1, 4));
    }

    #[test]
    fn speck_removed_by_open() {
        let mut m = BinaryMask::new(40, 40);
        for x in 10..13 {
            m.set(x, 20, true);
        }
        assert!(open(&m, &StructuringElement::disc(10)).is_empty());
    }

    fn mask_strategy() -> impl Strategy<Value = BinaryMask> {
        (4usize..24, 4usize..24).prop_flat_map(|(w, h)| {
            prop::collection::vec(prop::bool::weighted(0.3), w * h)
                .prop_map(move |b| BinaryMask::from_bits(w, h, b).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matches_naive(m in mask_strategy(), r in 0usize..6) {
            let se = StructuringElement::disc(r);
            prop_assert_eq!(dilate(&m, &se), naive(&m, r, true));
            prop_assert_eq!(erode(&m, &se), naive(&m, r, false));
        }

        #[test]
        fn opening_idempotent(m in mask_strategy(), r in 1usize..4) {
            let se = StructuringElement::disc(r);
            let once = open(&m, &se);
            prop_assert_eq!(open(&once, &se), once);
        }

        #[test]
        fn duality_in_interior(m in mask_strategy(), r in 1usize..3) {
            let se = StructuringElement::disc(r);
            let lhs = erode(&m, &se);
            let rhs = dilate(&m.not(), &se).not();
            for y in r..m.height().saturating_sub(r) {
                for x in r..m.width().saturating_sub(r) {
                    prop_assert_eq!(lhs.get(x, y), rhs.get(x, y));
                }
            }
        }
    }
}
