//! Laws of the running supremum and infimum: tails, the atom at zero,
//! Laplace transforms and moments.

use levyflux::fluctuation::{
    fpt_density, inf_laplace, inf_tail, inf_tail_alt, sup_atom_total, sup_laplace, sup_moment, sup_tail,
};
use levyflux::model::SpectrallyPositiveModel;

fn main() -> levyflux::Result<()> {
    let bm = SpectrallyPositiveModel::brownian(0.0, 1.0)?;
    let gamma = SpectrallyPositiveModel::gamma_minus_drift(1.0, 1.0, 1.0)?;

    // For Brownian motion both tails are 2 P(B_t > x).
    println!("brownian   P(sup_1 > 1) = {:.12}", sup_tail(&bm, 1.0, 1.0)?.value);
    println!("brownian   P(inf_1 < -1) = {:.12}", inf_tail(&bm, 1.0, 1.0)?.value);

    println!("\ngamma - drift, t = 2");
    println!("{:>6} {:>14} {:>14} {:>14} {:>14}", "x", "fpt density", "P(sup > x)", "P(inf < -x)", "second form");
    for x in [0.25, 0.5, 1.0, 1.5] {
        println!(
            "{x:>6} {:>14.10} {:>14.10} {:>14.10} {:>14.10}",
            fpt_density(&gamma, x, 2.0)?,
            sup_tail(&gamma, x, 2.0)?.value,
            inf_tail(&gamma, x, 2.0)?.value,
            inf_tail_alt(&gamma, x, 2.0)?.value,
        );
    }
    println!("P(sup_2 = 0) = {:.12}", sup_atom_total(&gamma, 2.0)?.value);
    println!("E e^(-sup_2) = {:.12}", sup_laplace(&gamma, 1.0, 2.0)?.value);
    println!("E e^(inf_2)  = {:.12}", inf_laplace(&gamma, 1.0, 2.0)?.value);
    println!("E sup_2      = {:.12}", sup_moment(&gamma, 1, 2.0)?.value);
    Ok(())
}
