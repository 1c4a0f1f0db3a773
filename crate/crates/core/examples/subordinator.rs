//! A subordinator Y run at the first time Z_s = s - r·Y_s passes t.

use levyflux::model::{SubordinatorCoord, SubordinatorModel};
use levyflux::subordinator::{
    ballot_conditional, simulate_time_change, solve_phi_y, time_changed_density, TimeChangeSpec, DEFAULT_TRUNCATION,
};

fn main() -> levyflux::Result<()> {
    let spec = TimeChangeSpec::new(SubordinatorModel::gamma(1.0, 1.0)?, vec![0.5])?;
    let draws = simulate_time_change(&spec, 1.0, 50_000, 4, DEFAULT_TRUNCATION, None)?;
    println!("load r·E[Y_1] = {}", spec.load());
    for z in [0.5, 1.0, 2.0] {
        let w = solve_phi_y(&spec, &[z])?;
        let (mc, se) = draws.phi_estimate(&[z]);
        println!("phi_Y({z}) = {:.10} ({} iterations), simulated {mc:.4} ± {se:.4}", w.value, w.iterations);
    }
    for y in [0.0, 0.5, 1.0, 3.0] {
        println!("p^Y_1({y}) = {:.8}", time_changed_density(&spec, 1.0, &[y])?);
    }
    println!("max |tau - t - r·Y| = {:e}", draws.support_defect(&spec));
    println!("P(no passage of Z before s | tau = t) at s = 2: {:.6}", ballot_conditional(&spec, 2.0, 1.0, None)?.analytic);

    let two = SubordinatorModel::new(vec![
        SubordinatorCoord::Gamma { shape_rate: 1.0, scale: 0.5 },
        SubordinatorCoord::Gamma { shape_rate: 2.0, scale: 0.25 },
    ])?;
    let spec2 = TimeChangeSpec::new(two, vec![0.4, 0.8])?;
    println!("two coordinates: phi_Y(1, 1) = {:.10}", solve_phi_y(&spec2, &[1.0, 1.0])?.value);
    Ok(())
}
