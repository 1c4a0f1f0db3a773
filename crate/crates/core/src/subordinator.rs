//! Time change of a `d`-dimensional subordinator by the first passage of
//! `Z_u = u − r·X_u`: `Y_t = X(τ_t)` with `τ_t = inf{u : Z_u = t}`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{SizeDist, SubordinatorCoord, SubordinatorModel};
use crate::path_sim::{
    ballot_mc, poisson, run_samples, sample_gamma_jump, sample_size, McEstimate, Welford, GAMMA_TRUNCATION,
};
use crate::special::{exp_integral_e1, gamma_pdf};

/// The subordinator `X` and the weights `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeChangeSpec {
    pub model: SubordinatorModel,
    pub r: Vec<f64>,
}

impl TimeChangeSpec {
    pub fn new(model: SubordinatorModel, r: Vec<f64>) -> Result<Self> {
        let spec = TimeChangeSpec { model, r };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.r.len() != self.model.dim() {
            return Err(Error::InvalidModel(format!(
                "r has length {} but the subordinator has dimension {}",
                self.r.len(),
                self.model.dim()
            )));
        }
        if self.r.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidModel("r must be componentwise >= 0".into()));
        }
        let load = self.load();
        if load > 1.0 {
            return Err(Error::InvalidModel(format!(
                "Z drifts to −∞: Σ r_i E[X_1^(i)] = {load} > 1"
            )));
        }
        Ok(())
    }

    /// `Σ r_i E[X_1^(i)]`; at most one.
    pub fn load(&self) -> f64 {
        self.r.iter().zip(self.model.means()).map(|(r, m)| r * m).sum()
    }

    pub fn is_critical(&self) -> bool {
        self.load() == 1.0
    }

    fn dot(&self, y: &[f64]) -> f64 {
        self.r.iter().zip(y).map(|(r, v)| r * v).sum()
    }

    /// Slope of `Z` between jumps.
    fn z_slope(&self) -> f64 {
        1.0 - self
            .r
            .iter()
            .zip(&self.model.coords)
            .map(|(r, c)| match c {
                SubordinatorCoord::CompoundPoisson { drift, .. } => r * drift,
                SubordinatorCoord::Gamma { .. } => 0.0,
            })
            .sum::<f64>()
    }
}

/// `p^Y_t(y) = t/(t + r·y) · p^X_{t + r·y}(y)` for independent gamma coordinates.
pub fn time_changed_density(spec: &TimeChangeSpec, t: f64, y: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    if y.len() != spec.model.dim() || y.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument("y must be a nonnegative vector of the model dimension".into()));
    }
    let s = t + spec.dot(y);
    let mut p = t / s;
    for (coord, &yi) in spec.model.coords.iter().zip(y) {
        match coord {
            SubordinatorCoord::Gamma { shape_rate, scale } => p *= gamma_pdf(shape_rate * s, *scale, yi),
            SubordinatorCoord::CompoundPoisson { .. } => {
                return Err(Error::NoDensity(
                    "compound-Poisson coordinates have an atom and no density".into(),
                ))
            }
        }
    }
    Ok(p)
}

/// Fixed point `w = φ_X(z + w r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiY {
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub bisected: bool,
    /// Stability holds with equality; convergence may be slow.
    pub critical: bool,
}

const MAX_ITERATIONS: usize = 200;
const RESIDUAL_TOL: f64 = 1e-12;

/// `φ_Y(z)` by iterating `w ↦ φ_X(z + w r)` from zero, with bisection as fallback.
pub fn solve_phi_y(spec: &TimeChangeSpec, z: &[f64]) -> Result<PhiY> {
    spec.validate()?;
    if z.len() != spec.model.dim() {
        return Err(Error::InvalidArgument(format!(
            "expected a {}-vector, got length {}",
            spec.model.dim(),
            z.len()
        )));
    }
    let map = |w: f64| -> Result<f64> {
        let arg: Vec<f64> = z.iter().zip(&spec.r).map(|(zi, ri)| zi + w * ri).collect();
        spec.model.laplace_exponent(&arg)
    };
    let critical = spec.is_critical();
    let mut w = 0.0;
    for k in 1..=MAX_ITERATIONS {
        let next = map(w)?;
        let done = next == w || (next - w).abs() <= 1e-16 * next.abs();
        w = next;
        if done {
            let residual = (w - map(w)?).abs();
            if residual < RESIDUAL_TOL {
                return Ok(PhiY {
                    value: w,
                    residual,
                    iterations: k,
                    bisected: false,
                    critical,
                });
            }
            break;
        }
    }
    // g(w) = w − φ_X(z + w r) is negative at 0 and eventually positive.
    let g = |w: f64| -> Result<f64> { Ok(w - map(w)?) };
    let (mut lo, mut hi) = (0.0, 1.0f64.max(w));
    let mut grow = 0;
    while g(hi)? <= 0.0 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 1100 {
            return Err(Error::NonConvergence {
                iterations: MAX_ITERATIONS + grow,
                residual: g(hi)?.abs(),
            });
        }
    }
    let mut steps = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    let value = if g(lo)?.abs() <= g(hi)?.abs() { lo } else { hi };
    let residual = g(value)?.abs();
    if residual >= RESIDUAL_TOL {
        return Err(Error::NonConvergence {
            iterations: MAX_ITERATIONS + steps,
            residual,
        });
    }
    Ok(PhiY {
        value,
        residual,
        iterations: MAX_ITERATIONS + steps,
        bisected: true,
        critical,
    })
}

/// Samples of `(τ_t, Y_t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeChangeSamples {
    pub t: f64,
    pub tau: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    /// Expected jump mass per unit time discarded from each coordinate.
    pub truncation_bias: Vec<f64>,
    pub horizon: f64,
}

/// Default simulation horizon as a multiple of `t`.
pub const HORIZON_FACTOR: f64 = 100.0;

struct Coord<'a> {
    rate: f64,
    draw: Box<dyn Fn(&mut ChaCha8Rng) -> f64 + Sync + 'a>,
}

fn coordinate_samplers(spec: &TimeChangeSpec, truncation: f64) -> Vec<Coord<'_>> {
    spec.model
        .coords
        .iter()
        .map(|c| match c {
            SubordinatorCoord::Gamma { shape_rate, scale } => {
                let scale = *scale;
                Coord {
                    rate: shape_rate * exp_integral_e1(truncation / scale),
                    draw: Box::new(move |r| sample_gamma_jump(scale, truncation, r)),
                }
            }
            SubordinatorCoord::CompoundPoisson { rate, size, .. } => Coord {
                rate: *rate,
                draw: Box::new(move |r| sample_size(size, r)),
            },
        })
        .collect()
}

fn coordinate_drifts(spec: &TimeChangeSpec) -> Vec<f64> {
    spec.model
        .coords
        .iter()
        .map(|c| match c {
            SubordinatorCoord::CompoundPoisson { drift, .. } => *drift,
            SubordinatorCoord::Gamma { .. } => 0.0,
        })
        .collect()
}

/// One `(τ_t, Y_t)` draw; `None` if `Z` stays below `t` up to `horizon`.
/// The crossing segment is located on `Z`; `τ_t` is then read off `Z(τ_t) = t`.
fn draw_time_change(
    spec: &TimeChangeSpec,
    coords: &[Coord<'_>],
    drifts: &[f64],
    t: f64,
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> Option<(f64, Vec<f64>)> {
    let slope = spec.z_slope();
    let mut y = vec![0.0; coords.len()];
    let (mut u, mut zv) = (0.0, 0.0);
    let finish = |zv: f64, mut y: Vec<f64>| {
        let dt = (t - zv) / slope;
        for (yi, di) in y.iter_mut().zip(drifts) {
            *yi += di * dt;
        }
        (t + spec.dot(&y), y)
    };
    let mut a = 0.0;
    while a < horizon {
        let b = (a + t).min(horizon);
        let mut jumps: Vec<(f64, usize, f64)> = Vec::new();
        for (i, c) in coords.iter().enumerate() {
            for _ in 0..poisson(c.rate * (b - a), rng) {
                let v = a + (b - a) * (1.0 - rng.gen::<f64>());
                jumps.push((v, i, (c.draw)(rng)));
            }
        }
        jumps.sort_by(|p, q| p.0.total_cmp(&q.0));
        for (v, i, size) in jumps {
            let before = zv + slope * (v - u);
            if before >= t {
                return Some(finish(zv, y));
            }
            for (yi, di) in y.iter_mut().zip(drifts) {
                *yi += di * (v - u);
            }
            y[i] += size;
            u = v;
            zv = before - spec.r[i] * size;
        }
        if zv + slope * (b - u) >= t {
            return Some(finish(zv, y));
        }
        a = b;
    }
    None
}

/// Simulates `n_samples` draws of `(τ_t, Y_t)` with gamma jumps below
/// `truncation` discarded; fails if any path does not reach `t` by `horizon`.
pub fn simulate_time_change(
    spec: &TimeChangeSpec,
    t: f64,
    n_samples: u64,
    seed: u64,
    truncation: f64,
    horizon: Option<f64>,
) -> Result<TimeChangeSamples> {
    spec.validate()?;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    if !(truncation > 0.0) {
        return Err(Error::InvalidArgument("truncation must be > 0".into()));
    }
    let slope = spec.z_slope();
    if !(slope > 0.0) {
        return Err(Error::InvalidModel("Z has no upward drift and cannot reach t".into()));
    }
    let horizon = horizon.unwrap_or(HORIZON_FACTOR * t);
    let coords = coordinate_samplers(spec, truncation);
    let drifts = coordinate_drifts(spec);
    let (draws, exhausted) = run_samples(
        n_samples,
        seed,
        || (Vec::new(), 0u64),
        |acc, rng, _| match draw_time_change(spec, &coords, &drifts, t, horizon, rng) {
            Some(draw) => acc.0.push(draw),
            None => acc.1 += 1,
        },
        |total, mut part| {
            total.0.append(&mut part.0);
            total.1 += part.1;
        },
    );
    if exhausted > 0 {
        return Err(Error::HorizonExhausted { horizon });
    }
    let (tau, y) = draws.into_iter().unzip();
    let truncation_bias = spec
        .model
        .coords
        .iter()
        .map(|c| match c {
            SubordinatorCoord::Gamma { shape_rate, scale } => shape_rate * scale * -(-truncation / scale).exp_m1(),
            SubordinatorCoord::CompoundPoisson { .. } => 0.0,
        })
        .collect();
    Ok(TimeChangeSamples {
        t,
        tau,
        y,
        truncation_bias,
        horizon,
    })
}

impl TimeChangeSamples {
    /// Sample mean of `e^{−z·Y_t}`.
    pub fn laplace(&self, z: &[f64]) -> McEstimate {
        let mut w = Welford::default();
        for y in &self.y {
            w.push((-z.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()).exp());
        }
        w.into()
    }

    /// `−(1/t) log Ê[e^{−z·Y_t}]` and its delta-method standard error.
    pub fn phi_estimate(&self, z: &[f64]) -> (f64, f64) {
        let l = self.laplace(z);
        (-l.mean.ln() / self.t, l.std_error / (l.mean * self.t))
    }

    /// Largest `|τ_t − t − r·Y_t|` over the samples.
    pub fn support_defect(&self, spec: &TimeChangeSpec) -> f64 {
        self.tau
            .iter()
            .zip(&self.y)
            .map(|(tau, y)| (tau - (self.t + spec.dot(y))).abs())
            .fold(0.0, f64::max)
    }
}

/// `P(τ_t = s | X_s = y)` on `s = t + r·y`, optionally with a Monte Carlo check.
#[derive(Clone, Debug, PartialEq)]
pub struct BallotConditional {
    pub analytic: f64,
    pub check: Option<McEstimate>,
}

/// Settings for the Monte Carlo check of [`ballot_conditional`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckConfig {
    pub n_jumps: usize,
    pub n_samples: u64,
    pub seed: u64,
}

/// `t/s`. The check runs the pinned ballot construction on `−Z`: drift
/// `−1`, jumps `r·ΔX` summing to `s − t`, first passage of level `t` at time `s`.
pub fn ballot_conditional(spec: &TimeChangeSpec, s: f64, t: f64, check: Option<CheckConfig>) -> Result<BallotConditional> {
    spec.validate()?;
    if !(t > 0.0) || s < t {
        return Err(Error::InvalidArgument(format!("need s >= t > 0, got s = {s}, t = {t}")));
    }
    let analytic = t / s;
    let check = match check {
        None => None,
        Some(_) if s == t => Some(McEstimate {
            mean: 1.0,
            std_error: 0.0,
            samples: 0,
        }),
        Some(cfg) => {
            let dist = spec
                .model
                .coords
                .iter()
                .find_map(|c| match c {
                    SubordinatorCoord::CompoundPoisson { size, .. } => Some(size.clone()),
                    SubordinatorCoord::Gamma { .. } => None,
                })
                .unwrap_or(SizeDist::Exponential { mean: 1.0 });
            Some(ballot_mc(cfg.n_jumps, &dist, 1.0, s, t, cfg.n_samples, cfg.seed)?.frequency)
        }
    };
    Ok(BallotConditional { analytic, check })
}

/// Default jump-size floor for simulated gamma coordinates.
pub const DEFAULT_TRUNCATION: f64 = GAMMA_TRUNCATION;

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma_spec(r: f64) -> TimeChangeSpec {
        TimeChangeSpec::new(SubordinatorModel::gamma(1.0, 1.0).unwrap(), vec![r]).unwrap()
    }

    #[test]
    fn density_example() {
        let p = time_changed_density(&gamma_spec(0.5), 1.0, &[1.0]).unwrap();
        let expected = (2.0 / 3.0) * (-1.0f64).exp() / 0.886_226_925_452_758;
        assert!((p - expected).abs() < 1e-14, "{p}");
        assert!((p - 0.27673).abs() < 1e-5);
    }

    #[test]
    fn zero_weights_leave_the_law_unchanged() {
        let spec = gamma_spec(0.0);
        let p = time_changed_density(&spec, 2.0, &[0.7]).unwrap();
        assert_eq!(p, gamma_pdf(2.0, 1.0, 0.7));
        let w = solve_phi_y(&spec, &[1.0]).unwrap();
        assert_eq!(w.value, 2.0f64.ln());
    }

    #[test]
    fn fixed_point_example() {
        let w = solve_phi_y(&gamma_spec(0.5), &[1.0]).unwrap();
        assert!(w.residual < 1e-12);
        assert!((w.value - (2.0 + 0.5 * w.value).ln()).abs() < 1e-12);
        assert!((w.value - 0.8951).abs() < 1e-4, "{}", w.value);
        assert_eq!(solve_phi_y(&gamma_spec(0.5), &[0.0]).unwrap().value, 0.0);
        assert!(matches!(solve_phi_y(&gamma_spec(0.5), &[1.0, 0.5]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn unstable_weights_are_rejected() {
        let e = TimeChangeSpec::new(SubordinatorModel::gamma(1.0, 1.0).unwrap(), vec![1.5]);
        assert!(matches!(e, Err(Error::InvalidModel(_))));
        let critical = gamma_spec(1.0);
        assert!(critical.is_critical());
        assert!(solve_phi_y(&critical, &[1.0]).unwrap().residual < 1e-12);
    }

    #[test]
    fn support_identity_holds_per_sample() {
        let spec = gamma_spec(0.5);
        let s = simulate_time_change(&spec, 1.0, 2000, 9, DEFAULT_TRUNCATION, None).unwrap();
        assert_eq!(s.support_defect(&spec), 0.0);
        let s0 = simulate_time_change(&gamma_spec(0.0), 1.0, 200, 9, DEFAULT_TRUNCATION, None).unwrap();
        assert!(s0.tau.iter().all(|&tau| tau == 1.0));
    }

    #[test]
    fn ballot_conditional_values() {
        let spec = gamma_spec(0.5);
        assert_eq!(ballot_conditional(&spec, 1.0, 1.0, None).unwrap().analytic, 1.0);
        assert_eq!(ballot_conditional(&spec, 4.0, 1.0, None).unwrap().analytic, 0.25);
        assert!(ballot_conditional(&spec, 0.5, 1.0, None).is_err());
    }
}
