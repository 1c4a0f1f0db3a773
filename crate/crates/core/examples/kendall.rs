//! The first-passage cloud {(T_x, x)} of simulated gamma paths against the
//! density (x/t) p_t(-x), cell by cell.

use levyflux::model::SpectrallyPositiveModel;
use levyflux::path_sim::kendall_mc;

fn main() -> levyflux::Result<()> {
    let m = SpectrallyPositiveModel::gamma_minus_drift(1.0, 1.0, 1.0)?;
    let x_edges = [0.0, 0.25, 0.5, 0.75, 1.0];
    let t_edges = [0.0, 0.5, 1.0, 1.5, 2.0];
    let rec = kendall_mc(&m, &x_edges, &t_edges, 50_000, 3)?;
    println!("{:>12} {:>12} {:>10} {:>10} {:>7}", "t", "x", "empirical", "analytic", "z");
    for cell in &rec.cells {
        println!(
            "{:>12} {:>12} {:>10.5} {:>10.5} {:>7.2}",
            format!("{:?}", cell.t_range),
            format!("{:?}", cell.x_range),
            cell.empirical,
            cell.analytic,
            cell.z_score()
        );
    }
    println!("uncrossed by t = 2: {:?}", rec.uncrossed);
    Ok(())
}
