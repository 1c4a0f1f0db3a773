//! Ballot theorem by Monte Carlo: a path pinned at -x after time t, shifted
//! cyclically by a uniform amount, first hits -x at t with probability x/(ct).

use levyflux::model::SizeDist;
use levyflux::path_sim::{ballot_mc, grid_ballot_mc, GridPath};

fn main() -> levyflux::Result<()> {
    let sizes = SizeDist::Exponential { mean: 1.0 };
    for (c, t, x) in [(1.0, 4.0, 1.0), (2.0, 1.0, 1.0), (1.0, 2.0, 0.3)] {
        let est = ballot_mc(5, &sizes, c, t, x, 100_000, 1)?;
        println!(
            "c={c} t={t} x={x}: frequency {:.4} ± {:.4}, mean λ(E)/t {:.4}, x/(ct) {:.4}",
            est.frequency.mean, est.frequency.std_error, est.lebesgue_ratio.mean, est.target
        );
    }

    // A path with continuous pieces, sampled on a fine grid.
    let path = GridPath::three_piece_example(1.0, 0.5, 100_000)?;
    let (measure, bound) = path.lebesgue_e(0.5)?;
    let est = grid_ballot_mc(&path, 0.5, 100_000, 2);
    println!("grid path: λ(E) = {measure:.5} (± {bound:.1e}), shifted frequency {:.4} ± {:.4}", est.mean, est.std_error);
    Ok(())
}
