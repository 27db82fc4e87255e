//! Synthesizes a random kernel expansion with a prescribed RKHS norm, locates
//! its maximizer and round-trips it through the text format.

use bead::instance::{format, holder_witness, synth_expansion};
use bead::kernel::KernelSpec;

fn main() -> bead::Result<()> {
    let kernel = KernelSpec::matern(1.1, 1.0, 2)?;
    let f = synth_expansion(kernel, 8, 1.0, 3)?.with_budget_for_lambda(0.5);
    println!("norm {:.6}, budget M {:.6}", f.norm_estimate(), f.norm_budget());
    println!("argmax {:?}, f* {:.6}", f.argmax(), f.fmax());
    println!("Hölder witness {:.4}", holder_witness(&f, 4000, 1));
    let text = format::write_instance(&f);
    let back = format::parse_instance(&text)?;
    assert_eq!(back, f);
    print!("{text}");
    Ok(())
}
