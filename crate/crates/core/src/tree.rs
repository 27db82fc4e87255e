//! Dyadic tree of partitions of `[0,1]^d`.
//!
//! Cells are produced by bisecting the longest side, breaking ties by the
//! lowest axis index. Starting from the unit cube that is the same as
//! cycling through the axes, so the split at depth `j → j+1` is always on
//! axis `j mod d`. Cell indices are 1-based within a depth; the children of
//! `(h, i)` are `(h+1, 2i−1)` (lower half) and `(h+1, 2i)` (upper half).

use crate::error::{Error, Result};
use crate::kernel::Point;

pub const DEFAULT_H_MAX: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub depth: u32,
    /// 1-based index, `1 ≤ index ≤ 2^depth`.
    pub index: u64,
}

impl CellId {
    pub const ROOT: CellId = CellId { depth: 0, index: 1 };

    pub fn new(depth: u32, index: u64) -> Result<Self> {
        if depth >= 64 || index == 0 || index > 1u64 << depth {
            return Err(Error::invalid(format!("no cell ({depth}, {index})")));
        }
        Ok(Self { depth, index })
    }

    pub fn children(self) -> [CellId; 2] {
        let d = self.depth + 1;
        [
            CellId { depth: d, index: 2 * self.index - 1 },
            CellId { depth: d, index: 2 * self.index },
        ]
    }

    pub fn parent(self) -> Option<CellId> {
        (self.depth > 0).then(|| CellId {
            depth: self.depth - 1,
            index: self.index.div_ceil(2),
        })
    }
}

/// Axis-aligned box `[lo, hi]`.
///
/// Membership is half-open (`lo ≤ x < hi`) except on faces lying on the
/// upper boundary of the domain, which are closed.
#[derive(Clone, Debug, PartialEq)]
pub struct CellBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl CellBox {
    pub fn center(&self) -> Point {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&a, &b))| v >= a && (v < b || (b == 1.0 && v <= 1.0)))
    }

    pub fn sides(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).collect()
    }

    /// Radius of the smallest ball around the center containing the box.
    pub fn outer_radius(&self) -> f64 {
        0.5 * self.sides().iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    /// Radius of the largest ball around the center contained in the box.
    pub fn inner_radius(&self) -> f64 {
        0.5 * self.sides().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        self.sides().iter().product()
    }
}

/// Constants of the tree: every depth-`h` cell satisfies
/// `B(center, v_inner·ρ^h) ⊂ cell ⊂ B(center, v_outer·ρ^h)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeGeometry {
    pub dim: usize,
    pub rho: f64,
    pub v_outer: f64,
    pub v_inner: f64,
    pub h_max: u32,
}

impl TreeGeometry {
    pub fn new(dim: usize) -> Result<Self> {
        geometry_constants(dim)
    }

    pub fn with_h_max(mut self, h_max: u32) -> Self {
        self.h_max = h_max.min(62);
        self
    }

    /// Inner-ball radius bound `v_inner·ρ^h`.
    pub fn inner_radius(&self, depth: u32) -> f64 {
        self.v_inner * self.rho.powi(depth as i32)
    }

    /// Outer-ball radius bound `v_outer·ρ^h`.
    pub fn outer_radius(&self, depth: u32) -> f64 {
        self.v_outer * self.rho.powi(depth as i32)
    }

    fn check(&self, id: CellId) -> Result<()> {
        if id.depth > self.h_max {
            return Err(Error::Depth {
                depth: id.depth,
                h_max: self.h_max,
            });
        }
        if id.index == 0 || id.index > 1u64 << id.depth {
            return Err(Error::invalid(format!("no cell ({}, {})", id.depth, id.index)));
        }
        Ok(())
    }
}

/// Geometry of longest-axis bisection in dimension `dim`.
///
/// `ρ = 2^{−1/d}`, `v_outer = √d`. The inner constant is `1/2` in one
/// dimension; in higher dimensions cells at depths not divisible by `d` are
/// twice as long on some axes, which lowers it to `2^{1/d − 2}`.
pub fn geometry_constants(dim: usize) -> Result<TreeGeometry> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let d = dim as f64;
    let v_inner = if dim == 1 { 0.5 } else { 2f64.powf(1.0 / d - 2.0) };
    Ok(TreeGeometry {
        dim,
        rho: 2f64.powf(-1.0 / d),
        v_outer: d.sqrt(),
        v_inner,
        h_max: DEFAULT_H_MAX,
    })
}

pub fn cell_region(geom: &TreeGeometry, id: CellId) -> Result<CellBox> {
    geom.check(id)?;
    let mut lo = vec![0.0; geom.dim];
    let mut hi = vec![1.0; geom.dim];
    let path = id.index - 1;
    for j in 0..id.depth {
        let axis = j as usize % geom.dim;
        let bit = (path >> (id.depth - 1 - j)) & 1;
        let mid = 0.5 * (lo[axis] + hi[axis]);
        if bit == 0 {
            hi[axis] = mid;
        } else {
            lo[axis] = mid;
        }
    }
    Ok(CellBox { lo, hi })
}

/// Representative point of a cell: the center of its box.
pub fn cell_center(geom: &TreeGeometry, id: CellId) -> Result<Point> {
    Ok(cell_region(geom, id)?.center())
}

/// The depth-`depth` cell containing `x`.
pub fn locate(geom: &TreeGeometry, x: &[f64], depth: u32) -> Result<CellId> {
    let mut id = CellId::ROOT;
    let mut lo = vec![0.0; geom.dim];
    let mut hi = vec![1.0; geom.dim];
    for j in 0..depth {
        let axis = j as usize % geom.dim;
        let mid = 0.5 * (lo[axis] + hi[axis]);
        let [left, right] = id.children();
        if x[axis] < mid {
            hi[axis] = mid;
            id = left;
        } else {
            lo[axis] = mid;
            id = right;
        }
    }
    geom.check(id)?;
    Ok(id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_cells(depth: u32) -> impl Iterator<Item = CellId> {
        (1..=(1u64 << depth)).map(move |index| CellId { depth, index })
    }

    #[test]
    fn root_and_first_split() {
        let g = geometry_constants(1).unwrap();
        let root = cell_region(&g, CellId::ROOT).unwrap();
        assert_eq!((root.lo.clone(), root.hi.clone()), (vec![0.0], vec![1.0]));
        assert_eq!(cell_center(&g, CellId::ROOT).unwrap(), vec![0.5]);
        let a = cell_region(&g, CellId::new(1, 1).unwrap()).unwrap();
        let b = cell_region(&g, CellId::new(1, 2).unwrap()).unwrap();
        assert_eq!((a.lo, a.hi), (vec![0.0], vec![0.5]));
        assert_eq!((b.lo, b.hi), (vec![0.5], vec![1.0]));
        assert_eq!(cell_center(&g, CellId::new(1, 1).unwrap()).unwrap(), vec![0.25]);
    }

    #[test]
    fn two_dimensional_quadrants() {
        let g = geometry_constants(2).unwrap();
        assert_eq!(cell_center(&g, CellId::ROOT).unwrap(), vec![0.5, 0.5]);
        let mut boxes: Vec<_> = all_cells(2).map(|c| cell_region(&g, c).unwrap()).collect();
        for b in &boxes {
            assert_eq!(b.sides(), vec![0.5, 0.5]);
        }
        boxes.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
        let los: Vec<_> = boxes.iter().map(|b| b.lo.clone()).collect();
        assert_eq!(
            los,
            vec![vec![0.0, 0.0], vec![0.0, 0.5], vec![0.5, 0.0], vec![0.5, 0.5]]
        );
    }

    #[test]
    fn constants() {
        let g1 = geometry_constants(1).unwrap();
        assert_eq!(g1.rho, 0.5);
        for h in 0..10 {
            let c = cell_region(&g1, CellId { depth: h, index: 1 }).unwrap();
            assert_eq!(c.sides()[0] / 2.0, 2f64.powi(-(h as i32) - 1));
        }
        let g2 = geometry_constants(2).unwrap();
        assert!((g2.rho - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(geometry_constants(0).is_err());
    }

    #[test]
    fn ball_sandwich_holds_exhaustively() {
        for dim in 1..=3 {
            let g = geometry_constants(dim).unwrap();
            assert!(g.v_inner <= g.v_outer);
            for h in 0..=12 {
                // cells at one depth are congruent, so checking the first suffices
                // for the radii; all cells are still checked for the partition below
                for id in all_cells(h).take(4) {
                    let b = cell_region(&g, id).unwrap();
                    assert!(b.outer_radius() <= g.outer_radius(h) * (1.0 + 1e-12), "d={dim} h={h}");
                    assert!(b.inner_radius() >= g.inner_radius(h) * (1.0 - 1e-12), "d={dim} h={h}");
                }
            }
        }
    }

    #[test]
    fn depth_cells_partition_the_cube() {
        for dim in 1..=3 {
            let g = geometry_constants(dim).unwrap();
            for h in 0..=12u32 {
                let boxes: Vec<_> = all_cells(h).map(|c| cell_region(&g, c).unwrap()).collect();
                // dyadic volumes are exact in binary floating point
                let total: f64 = boxes.iter().map(CellBox::volume).sum();
                assert_eq!(total, 1.0, "d={dim} h={h}");
                if h <= 8 {
                    for (i, a) in boxes.iter().enumerate() {
                        for b in &boxes[i + 1..] {
                            let overlap = a
                                .lo
                                .iter()
                                .zip(&a.hi)
                                .zip(b.lo.iter().zip(&b.hi))
                                .all(|((al, ah), (bl, bh))| al.max(*bl) < ah.min(*bh));
                            assert!(!overlap);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn children_partition_parent_and_centers_nest() {
        for dim in 1..=3 {
            let g = geometry_constants(dim).unwrap();
            for h in 0..10 {
                for id in all_cells(h) {
                    let parent = cell_region(&g, id).unwrap();
                    let [a, b] = id.children();
                    let (ra, rb) = (cell_region(&g, a).unwrap(), cell_region(&g, b).unwrap());
                    assert_eq!(ra.volume() + rb.volume(), parent.volume());
                    assert!(parent.contains(&ra.center()) && parent.contains(&rb.center()));
                    assert!(parent.contains(&parent.center()));
                    assert_eq!(a.parent(), Some(id));
                    assert_eq!(b.parent(), Some(id));
                }
            }
        }
    }

    #[test]
    fn locate_agrees_with_regions() {
        let g = geometry_constants(2).unwrap();
        for h in 0..8 {
            for id in all_cells(h) {
                let c = cell_center(&g, id).unwrap();
                assert_eq!(locate(&g, &c, h).unwrap(), id);
            }
        }
        assert_eq!(locate(&g, &[1.0, 1.0], 4).unwrap().index, 16);
    }

    #[test]
    fn depth_and_index_errors() {
        let g = geometry_constants(1).unwrap().with_h_max(5);
        assert!(matches!(
            cell_region(&g, CellId { depth: 6, index: 1 }),
            Err(Error::Depth { .. })
        ));
        assert!(CellId::new(2, 5).is_err());
        assert!(CellId::new(2, 0).is_err());
    }
}
