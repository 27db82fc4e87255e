//! Evaluates Matérn kernels of several smoothness orders against distance,
//! comparing the general Bessel form with the half-integer closed forms.

use bead::kernel::{matern_bessel, KernelSpec};

fn main() -> bead::Result<()> {
    let orders = [0.5, 1.1, 1.5, 2.5];
    println!("{:>6} {}", "r", orders.map(|nu| format!("{:>12}", format!("nu={nu}"))).join(""));
    for i in 0..=10 {
        let r = 0.1 * i as f64;
        let mut row = format!("{r:>6.2}");
        for nu in orders {
            let k = KernelSpec::matern(nu, 0.5, 1)?;
            row.push_str(&format!("{:>12.6}", k.eval(&[0.0], &[r])?));
        }
        println!("{row}");
    }
    let k = KernelSpec::matern(1.5, 0.5, 1)?;
    let scaled = 0.3 / 0.5;
    println!("closed form at r = 0.3: {:.15}", k.eval(&[0.0], &[0.3])?);
    println!("bessel form at r = 0.3: {:.15}", matern_bessel(1.5, scaled));
    Ok(())
}
