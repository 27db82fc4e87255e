//! Walks the dyadic cell tree: geometry constants, cell boxes, centers and
//! point location.

use bead::tree::{cell_region, locate, CellId, TreeGeometry};

fn main() -> bead::Result<()> {
    for d in 1..=3 {
        let g = TreeGeometry::new(d)?;
        println!("d = {d}: rho {:.4}, v_outer {:.4}, v_inner {:.4}", g.rho, g.v_outer, g.v_inner);
    }
    let g = TreeGeometry::new(2)?;
    let mut frontier = vec![CellId::ROOT];
    for _ in 0..3 {
        frontier = frontier.iter().flat_map(|c| c.children()).collect();
    }
    for id in &frontier {
        let b = cell_region(&g, *id)?;
        println!("{id:?}: lo {:?} hi {:?} center {:?}", b.lo, b.hi, b.center());
    }
    let x = [0.3, 0.8];
    for h in 0..=6 {
        let id = locate(&g, &x, h)?;
        println!("depth {h}: {:?} outer radius {:.4}", id, g.outer_radius(h));
    }
    Ok(())
}
