//! Cyclic shifts and time reversal of an exact bounded-variation path.

use levyflux::path_sim::BVPath;

fn main() -> levyflux::Result<()> {
    // drift −1 on [0, 4], jumps 0.5 at 1 and 1.25 at 2.5: ends at −2.25
    let p = BVPath::new(4.0, 0.0, -1.0, vec![1.0, 2.5], vec![0.5, 1.25])?;
    let x = -p.end_value();
    println!("X_4 = {}, inf = {}, T_x = {:?}", p.end_value(), p.running_inf(4.0)?, p.first_passage(x));
    println!("λ(E) = {}", p.lebesgue_e(x)?);
    for u in [0.5, 1.0, 2.0, 2.5, 3.5] {
        let q = p.shift(u)?;
        println!(
            "u = {u}: jumps at {:?}, λ(E) = {}, passes only at the end: {}",
            q.jump_times,
            q.lebesgue_e(x)?,
            q.avoids_level_before_horizon(x)
        );
    }
    let r = p.time_reverse();
    println!("reversed: jumps at {:?}, sup = {}", r.jump_times, r.running_sup(4.0)?);
    assert_eq!(p.shift(1.0)?.shift(2.0)?, p.shift(3.0)?);
    Ok(())
}
