//! Tabulates upper and lower regret exponents over dimensions one to ten at
//! ν = 1.1 and growth exponent b = 1.2.

use bead::complexity::{exponent_table_text, exponents, Algorithm};

fn main() -> bead::Result<()> {
    let tables = (1..=10).map(|d| exponents(d, 1.1, 1.2)).collect::<bead::Result<Vec<_>>>()?;
    print!("{}", exponent_table_text(&tables));
    for t in &tables {
        let minimax = t.entry(Algorithm::SupKernelUcb).uniform;
        let bead = t.entry(Algorithm::Bead).upper;
        println!("d = {:>2}: minimax {minimax:.5}, bead {bead:.5}, gain {:.5}", t.d, minimax - bead);
    }
    Ok(())
}
