//! Marginal densities of X_t for the built-in families, and the normalization of a grid.

use levyflux::density::{density, DensityGrid, DEFAULT_GRID_POINTS};
use levyflux::model::{SizeDist, SpectrallyPositiveModel};

fn main() -> levyflux::Result<()> {
    let models = [
        ("brownian", SpectrallyPositiveModel::brownian(0.0, 1.0)?),
        ("gamma - drift", SpectrallyPositiveModel::gamma_minus_drift(1.0, 2.0, 0.5)?),
        ("stable 1.5", SpectrallyPositiveModel::stable(1.5, 1.0, 0.0)?),
    ];
    let t = 1.0;
    for (name, m) in &models {
        let grid = DensityGrid::covering(m, t, DEFAULT_GRID_POINTS)?;
        println!("{name:>14}: {} grid, mass {:.8}", grid.method.as_str(), grid.trapezoid());
        for x in [-1.0, 0.0, 0.5, 2.0] {
            println!("{:>18} p_1({x:>4}) = {:.10}", "", density(m, t, x)?);
        }
    }

    // Compound Poisson minus drift has an atom at −ct, so no density.
    let cp = SpectrallyPositiveModel::compound_poisson_minus_drift(2.0, 1.0, SizeDist::Exponential { mean: 1.0 })?;
    match density(&cp, t, 0.0) {
        Err(e) => println!("compound poisson: {e}"),
        Ok(p) => println!("compound poisson: {p}"),
    }
    Ok(())
}
