//! Exact bounded-variation paths, the cyclic shift `θ_u`, and Monte Carlo
//! estimators for the ballot theorem and Kendall's identity.
//!
//! A [`BVPath`] is `X_s = start − c s + Σ_{τ_i ≤ s} J_i` with positive jumps,
//! so downward passages happen only along drift segments and every
//! quantity here (first passage, infimum, ballot set) is computed exactly
//! from the jump list.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Jumps, SizeDist, SpectrallyPositiveModel};
use crate::quadrature::{integrate_panels, Tolerance};
use crate::density::marginal;
use crate::special::exp_integral_e1;

/// Right-continuous path with linear drift and positive jumps on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BVPath {
    pub horizon: f64,
    pub start: f64,
    /// Slope between jumps, `−c`.
    pub drift_rate: f64,
    pub jump_times: Vec<f64>,
    pub jump_sizes: Vec<f64>,
}

fn check_time(s: f64, horizon: f64) -> Result<()> {
    if (0.0..=horizon).contains(&s) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("time {s} outside [0, {horizon}]")))
    }
}

impl BVPath {
    pub fn new(horizon: f64, start: f64, drift_rate: f64, jump_times: Vec<f64>, jump_sizes: Vec<f64>) -> Result<Self> {
        let path = BVPath {
            horizon,
            start,
            drift_rate,
            jump_times,
            jump_sizes,
        };
        path.validate()?;
        Ok(path)
    }

    pub fn pure_drift(horizon: f64, c: f64) -> Self {
        BVPath {
            horizon,
            start: 0.0,
            drift_rate: -c,
            jump_times: Vec::new(),
            jump_sizes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if !self.start.is_finite() || !self.drift_rate.is_finite() {
            return Err(Error::InvalidArgument("start and drift must be finite".into()));
        }
        if self.jump_times.len() != self.jump_sizes.len() {
            return Err(Error::InvalidArgument("jump times and sizes differ in length".into()));
        }
        let mut prev = 0.0;
        for (&t, &j) in self.jump_times.iter().zip(&self.jump_sizes) {
            if !(t > prev && t <= self.horizon) {
                return Err(Error::InvalidArgument(format!(
                    "jump times must be strictly increasing in (0, {}], got {t} after {prev}",
                    self.horizon
                )));
            }
            if !(j > 0.0 && j.is_finite()) {
                return Err(Error::InvalidArgument(format!("jump sizes must be > 0, got {j}")));
            }
            prev = t;
        }
        Ok(())
    }

    /// `c` in `X_s = start − c s + jumps`.
    pub fn c(&self) -> f64 {
        -self.drift_rate
    }

    fn jumps_upto(&self, s: f64, inclusive: bool) -> f64 {
        self.jump_times
            .iter()
            .zip(&self.jump_sizes)
            .take_while(|(&t, _)| if inclusive { t <= s } else { t < s })
            .map(|(_, j)| j)
            .sum()
    }

    /// `X_s`.
    pub fn evaluate(&self, s: f64) -> Result<f64> {
        check_time(s, self.horizon)?;
        Ok(self.start + self.drift_rate * s + self.jumps_upto(s, true))
    }

    /// `X_{s−}`, with `X_{0−} = X_0`.
    pub fn left_limit(&self, s: f64) -> Result<f64> {
        check_time(s, self.horizon)?;
        Ok(self.start + self.drift_rate * s + self.jumps_upto(s, false))
    }

    pub fn end_value(&self) -> f64 {
        self.start + self.drift_rate * self.horizon + self.jump_sizes.iter().sum::<f64>()
    }

    /// Values just before and just after each jump, in time order,
    /// together with the jump times.
    fn jump_values(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let mut acc = 0.0;
        self.jump_times.iter().zip(&self.jump_sizes).map(move |(&t, &j)| {
            let before = self.start + self.drift_rate * t + acc;
            acc += j;
            (t, before, before + j)
        })
    }

    /// `inf_{u ≤ s} X_u` (limit values included).
    pub fn running_inf(&self, s: f64) -> Result<f64> {
        let at = self.evaluate(s)?;
        let mut m = self.start.min(at);
        for (t, before, after) in self.jump_values() {
            if t > s {
                break;
            }
            m = m.min(before).min(after);
        }
        Ok(m)
    }

    /// `sup_{u ≤ s} X_u`.
    pub fn running_sup(&self, s: f64) -> Result<f64> {
        let at = self.evaluate(s)?;
        let mut m = self.start.max(at);
        for (t, before, after) in self.jump_values() {
            if t > s {
                break;
            }
            m = m.max(before).max(after);
        }
        Ok(m)
    }

    /// `T_x = inf{s : X_s = −x}` within the horizon, solved on the drift segment
    /// where the crossing happens.
    pub fn first_passage(&self, x: f64) -> Option<f64> {
        let level = -x;
        if self.start <= level {
            return (self.start == level).then_some(0.0);
        }
        let c = self.c();
        if c <= 0.0 {
            return None;
        }
        let mut seg_start = 0.0;
        let mut value = self.start;
        for (t, before, after) in self.jump_values() {
            if before <= level {
                return Some(seg_start + (value - level) / c);
            }
            seg_start = t;
            value = after;
        }
        let end = value + self.drift_rate * (self.horizon - seg_start);
        (end <= level).then(|| (seg_start + (value - level) / c).min(self.horizon))
    }

    /// True when the path stays strictly above `−x` on `[0, horizon)`, i.e. a
    /// path pinned at `X_horizon = −x` first reaches `−x` at the horizon.
    pub fn avoids_level_before_horizon(&self, x: f64) -> bool {
        let level = -x;
        self.start > level && self.jump_values().all(|(_, before, _)| before > level)
    }

    /// Pieces `(x_from, x_to, t_from)` with `T_y = t_from + (y − x_from)/c`
    /// for `y ∈ [x_from, x_to)`; passage levels are measured below `start`.
    pub fn passage_profile(&self) -> Vec<(f64, f64, f64)> {
        let c = self.c();
        let mut pieces = Vec::new();
        if c <= 0.0 {
            return pieces;
        }
        let mut m = self.start;
        let mut seg_start = 0.0;
        let mut value = self.start;
        let mut close = |seg_start: f64, value: f64, end: f64, m: &mut f64| {
            if end < *m {
                let from = self.start - *m;
                let t_from = seg_start + (value - *m) / c;
                pieces.push((from, self.start - end, t_from));
                *m = end;
            }
        };
        for (t, before, after) in self.jump_values() {
            close(seg_start, value, before, &mut m);
            seg_start = t;
            value = after;
        }
        let end = value + self.drift_rate * (self.horizon - seg_start);
        close(seg_start, value, end, &mut m);
        pieces
    }

    /// `θ_u`: swaps the pieces before and after `u`, keeping the values at 0 and at the horizon.
    pub fn shift(&self, u: f64) -> Result<BVPath> {
        check_time(u, self.horizon)?;
        let t = self.horizon;
        let mut times = Vec::with_capacity(self.jump_times.len());
        let mut sizes = Vec::with_capacity(self.jump_sizes.len());
        for (&v, &j) in self.jump_times.iter().zip(&self.jump_sizes) {
            if v > u {
                times.push(v - u);
                sizes.push(j);
            }
        }
        for (&v, &j) in self.jump_times.iter().zip(&self.jump_sizes) {
            if v <= u {
                times.push(v + (t - u));
                sizes.push(j);
            }
        }
        Ok(BVPath {
            horizon: t,
            start: self.start,
            drift_rate: self.drift_rate,
            jump_times: times,
            jump_sizes: sizes,
        })
    }

    /// Path of `X_t − X_{(t−s)−}` (plus `start`). A jump at the horizon
    /// itself stays there, since the reversed path must start at `start`.
    pub fn time_reverse(&self) -> BVPath {
        let t = self.horizon;
        let mut times = Vec::with_capacity(self.jump_times.len());
        let mut sizes = Vec::with_capacity(self.jump_sizes.len());
        let mut at_horizon = None;
        for (&v, &j) in self.jump_times.iter().zip(&self.jump_sizes).rev() {
            if v == t {
                at_horizon = Some(j);
            } else {
                times.push(t - v);
                sizes.push(j);
            }
        }
        if let Some(j) = at_horizon {
            times.push(t);
            sizes.push(j);
        }
        BVPath {
            horizon: t,
            start: self.start,
            drift_rate: self.drift_rate,
            jump_times: times,
            jump_sizes: sizes,
        }
    }

    /// Time at which the overall infimum is attained, or approached from the
    /// left when it sits just before a jump.
    pub fn time_at_infimum(&self) -> f64 {
        let mut best = (self.start, 0.0);
        for (t, before, _) in self.jump_values() {
            if before < best.0 {
                best = (before, t);
            }
        }
        let end = self.end_value();
        if end < best.0 {
            best = (end, self.horizon);
        }
        best.1
    }

    /// Lebesgue measure of `E = {s : X_s = inf_{u≤s} X_u, X_s ∈ [I, I + x)}`
    /// with `I` the overall infimum, by scanning the drift segments.
    pub fn lebesgue_e(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::InvalidArgument(format!("x must be > 0, got {x}")));
        }
        let c = self.c();
        if c <= 0.0 {
            return Ok(0.0);
        }
        let bottom = self.running_inf(self.horizon)?;
        let top = bottom + x;
        let mut m = self.start;
        let mut total = 0.0;
        let mut account = |end: f64, m: &mut f64| {
            if end < *m {
                let overlap = (m.min(top) - end.max(bottom)).max(0.0);
                total += overlap / c;
                *m = end;
            }
        };
        let mut seg_start = 0.0;
        let mut value = self.start;
        for (t, before, after) in self.jump_values() {
            account(before, &mut m);
            seg_start = t;
            value = after;
        }
        account(value + self.drift_rate * (self.horizon - seg_start), &mut m);
        Ok(total)
    }

    /// Both sides of `T_x(θ_u X) = t ⟺ X_u = inf_u X and X_u ∈ [inf_t X, inf_t X + x)`.
    pub fn shift_passage_sides(&self, x: f64, u: f64) -> Result<(bool, bool)> {
        let lhs = self.shift(u)?.avoids_level_before_horizon(x);
        let xu = self.evaluate(u)?;
        let inf_u = self.running_inf(u)?;
        let inf_t = self.running_inf(self.horizon)?;
        let rhs = xu == inf_u && xu >= inf_t && xu < inf_t + x;
        Ok((lhs, rhs))
    }

    /// Whether the two sides of [`BVPath::shift_passage_sides`] agree.
    pub fn passage_equivalence_holds(&self, x: f64, u: f64) -> Result<bool> {
        let (lhs, rhs) = self.shift_passage_sides(x, u)?;
        Ok(lhs == rhs)
    }
}

/// A path sampled at `n` equally spaced times, read as a step function.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPath {
    pub horizon: f64,
    pub values: Vec<f64>,
}

impl GridPath {
    pub fn new(horizon: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || !(horizon > 0.0) {
            return Err(Error::InvalidArgument("grid path needs >= 2 values and horizon > 0".into()));
        }
        Ok(GridPath { horizon, values })
    }

    /// The deterministic path `s²`, `−s³ − x`, `−(t − s)³ − x` on the three
    /// pieces `[0, t/4)`, `[t/4, t/2)`, `[t/2, t]`.
    pub fn three_piece_example(t: f64, x: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidArgument("need at least 2 points".into()));
        }
        let h = t / (points - 1) as f64;
        let values = (0..points)
            .map(|i| {
                let s = if i == points - 1 { t } else { i as f64 * h };
                if s < t / 4.0 {
                    s * s
                } else if s < t / 2.0 {
                    -s * s * s - x
                } else {
                    -(t - s).powi(3) - x
                }
            })
            .collect();
        GridPath::new(t, values)
    }

    pub fn mesh(&self) -> f64 {
        self.horizon / (self.values.len() - 1) as f64
    }

    fn index(&self, s: f64) -> usize {
        ((s / self.mesh()).floor() as usize).min(self.values.len() - 1)
    }

    pub fn evaluate(&self, s: f64) -> Result<f64> {
        check_time(s, self.horizon)?;
        Ok(self.values[self.index(s)])
    }

    pub fn running_inf(&self, s: f64) -> Result<f64> {
        check_time(s, self.horizon)?;
        Ok(self.values[..=self.index(s)].iter().copied().fold(f64::INFINITY, f64::min))
    }

    pub fn running_sup(&self, s: f64) -> Result<f64> {
        check_time(s, self.horizon)?;
        Ok(self.values[..=self.index(s)].iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// `θ_u` with `u` rounded to the nearest grid time: a rotation of the increments.
    pub fn shift(&self, u: f64) -> Result<GridPath> {
        check_time(u, self.horizon)?;
        let n = self.values.len();
        let k = ((u / self.mesh()).round() as usize).min(n - 1);
        let mut values = Vec::with_capacity(n);
        let (v0, vk, vt) = (self.values[0], self.values[k], self.values[n - 1]);
        for j in 0..n {
            if j < n - 1 - k {
                values.push(v0 + self.values[j + k] - vk);
            } else {
                values.push(self.values[j - (n - 1 - k)] + vt - vk);
            }
        }
        Ok(GridPath {
            horizon: self.horizon,
            values,
        })
    }

    /// `λ(E)` by counting grid times at the running infimum inside the
    /// window, with error bound equal to the mesh times the number of
    /// window crossings (reported as the second value).
    pub fn lebesgue_e(&self, x: f64) -> Result<(f64, f64)> {
        if !(x > 0.0) {
            return Err(Error::InvalidArgument(format!("x must be > 0, got {x}")));
        }
        let bottom = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let top = bottom + x;
        let h = self.mesh();
        let mut m = f64::INFINITY;
        let mut count = 0usize;
        for &v in &self.values[..self.values.len() - 1] {
            m = m.min(v);
            if v == m && v >= bottom && v < top {
                count += 1;
            }
        }
        Ok((count as f64 * h, 2.0 * h))
    }

    /// For every grid shift `k`, whether `θ_{k h}` stays above `−x` before the horizon.
    pub fn shift_passage_table(&self, x: f64) -> Vec<bool> {
        let n = self.values.len();
        let v = &self.values;
        // prefix[i] = min v[0..i], suffix[i] = min v[i..n-1]
        let mut prefix = vec![f64::INFINITY; n];
        for i in 1..n {
            prefix[i] = prefix[i - 1].min(v[i - 1]);
        }
        let mut suffix = vec![f64::INFINITY; n];
        for i in (0..n - 1).rev() {
            suffix[i] = suffix[i + 1].min(v[i]);
        }
        (0..n)
            .map(|k| {
                let first = v[0] + suffix[k] - v[k];
                let second = prefix[k] + v[n - 1] - v[k];
                first.min(second) > -x
            })
            .collect()
    }
}

/// Mean and variance accumulator with an associative merge.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * self.n as f64 * other.n as f64 / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n.max(1) as f64).sqrt()
    }
}

/// RNG for sample `index` under `seed`; independent of how samples are scheduled.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

const CHUNK: u64 = 1024;

/// Runs `step` for every sample index in parallel chunks and merges the
/// chunk accumulators in index order, so the result does not depend on
/// the number of worker threads.
pub fn run_samples<A, I, S, M>(n_samples: u64, seed: u64, init: I, step: S, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, &mut ChaCha8Rng, u64) + Sync,
    M: Fn(&mut A, A),
{
    let chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_samples) {
                let mut rng = sample_rng(seed, i);
                step(&mut acc, &mut rng, i);
            }
            acc
        })
        .collect();
    let mut total = init();
    for part in parts {
        merge(&mut total, part);
    }
    total
}

/// Smallest jump kept when simulating gamma-subordinator jumps.
pub const GAMMA_TRUNCATION: f64 = 1e-6;

/// Expected jump mass per unit time discarded by truncating at `eps`: `∫₀^ε x ν(dx)`.
pub fn truncation_bias(model: &SpectrallyPositiveModel, eps: f64) -> f64 {
    match model.jumps {
        Jumps::GammaSubordinator { shape_rate, scale } => shape_rate * scale * -(-eps / scale).exp_m1(),
        _ => 0.0,
    }
}

pub fn sample_size<R: Rng>(dist: &SizeDist, rng: &mut R) -> f64 {
    match *dist {
        SizeDist::Exponential { mean } => Exp::new(1.0 / mean).expect("validated mean").sample(rng),
        SizeDist::Gamma { shape, scale } => Gamma::new(shape, scale).expect("validated gamma").sample(rng),
        SizeDist::Deterministic { size } => size,
    }
}

/// Jump from `shape_rate · x⁻¹ e^{−x/scale}` restricted to `x > eps`.
pub(crate) fn sample_gamma_jump<R: Rng>(scale: f64, eps: f64, rng: &mut R) -> f64 {
    let lower = exp_integral_e1(eps / scale) - exp_integral_e1(1.0);
    let upper = exp_integral_e1(1.0);
    if eps >= scale {
        loop {
            let x = eps + Exp::new(1.0 / scale).expect("scale > 0").sample(rng);
            if rng.gen::<f64>() < eps / x {
                return x;
            }
        }
    }
    if rng.gen::<f64>() * (lower + upper) < lower {
        // x⁻¹ on (eps, scale), thinned by e^{−x/scale}
        loop {
            let x = eps * (scale / eps).powf(rng.gen::<f64>());
            if rng.gen::<f64>() < (-x / scale).exp() {
                return x;
            }
        }
    }
    // e^{−x/scale} on (scale, ∞), thinned by scale/x
    loop {
        let x = scale + Exp::new(1.0 / scale).expect("scale > 0").sample(rng);
        if rng.gen::<f64>() < scale / x {
            return x;
        }
    }
}

fn sorted_uniform_times<R: Rng>(n: usize, horizon: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let mut times: Vec<f64> = (0..n).map(|_| horizon * (1.0 - rng.gen::<f64>())).collect();
        times.sort_by(f64::total_cmp);
        if times.windows(2).all(|w| w[0] < w[1]) {
            return times;
        }
    }
}

/// Draws a path of a bounded-variation model on `[0, t]` with the given RNG.
pub fn sample_path_with<R: Rng>(model: &SpectrallyPositiveModel, t: f64, rng: &mut R) -> Result<BVPath> {
    if !model.is_bounded_variation() {
        return Err(Error::WrongModel("only bounded-variation models can be simulated exactly".into()));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    type SizeSampler<R> = Box<dyn Fn(&mut R) -> f64>;
    let (count, sizes): (usize, SizeSampler<R>) = match &model.jumps {
        Jumps::None => (0, Box::new(|_: &mut R| 0.0)),
        Jumps::CompoundPoisson { rate, size } => {
            let n = poisson(rate * t, rng);
            let size = size.clone();
            (n, Box::new(move |r: &mut R| sample_size(&size, r)))
        }
        Jumps::GammaSubordinator { shape_rate, scale } => {
            let mass = shape_rate * exp_integral_e1(GAMMA_TRUNCATION / scale);
            let n = poisson(mass * t, rng);
            let scale = *scale;
            (n, Box::new(move |r: &mut R| sample_gamma_jump(scale, GAMMA_TRUNCATION, r)))
        }
        Jumps::StablePositive { .. } => unreachable!("stable models have unbounded variation"),
    };
    let times = sorted_uniform_times(count, t, rng);
    let jump_sizes = (0..count).map(|_| sizes(rng)).collect();
    Ok(BVPath {
        horizon: t,
        start: 0.0,
        drift_rate: model.drift,
        jump_times: times,
        jump_sizes,
    })
}

pub(crate) fn poisson<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).expect("positive mean").sample(rng) as usize
    }
}

/// A path of `model` on `[0, t]`, reproducible from `seed`.
pub fn sample_path(model: &SpectrallyPositiveModel, t: f64, seed: u64) -> Result<BVPath> {
    sample_path_with(model, t, &mut sample_rng(seed, 0))
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl From<Welford> for McEstimate {
    fn from(w: Welford) -> Self {
        McEstimate {
            mean: w.mean,
            std_error: w.std_error(),
            samples: w.n,
        }
    }
}

impl McEstimate {
    /// `|mean − target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Result of [`ballot_mc`].
#[derive(Clone, Debug, PartialEq)]
pub struct BallotEstimate {
    /// Frequency of `T_x = t` for the uniformly shifted pinned paths.
    pub frequency: McEstimate,
    /// Sample mean of `λ(E_{t,x})/t` over the same paths.
    pub lebesgue_ratio: McEstimate,
    /// `x/(ct)`.
    pub target: f64,
}

/// Endpoint-pinned path: `n` jumps with sizes from `dist` rescaled to total
/// `ct − x`, at iid uniform times.
pub fn pinned_path<R: Rng>(n_jumps: usize, dist: &SizeDist, c: f64, t: f64, x: f64, rng: &mut R) -> Result<BVPath> {
    let ct = c * t;
    if !(x < ct) {
        return Err(Error::InfeasibleEndpoint { x, ct });
    }
    if n_jumps == 0 {
        return Err(Error::InvalidArgument("a pinned path with x < ct needs at least one jump".into()));
    }
    let raw: Vec<f64> = (0..n_jumps).map(|_| sample_size(dist, rng)).collect();
    let total: f64 = raw.iter().sum();
    let sizes = raw.iter().map(|s| s * (ct - x) / total).collect();
    let times = sorted_uniform_times(n_jumps, t, rng);
    Ok(BVPath {
        horizon: t,
        start: 0.0,
        drift_rate: -c,
        jump_times: times,
        jump_sizes: sizes,
    })
}

/// Estimates `P(T_x = t)` for uniformly shifted endpoint-pinned paths.
pub fn ballot_mc(
    n_jumps: usize,
    jump_dist: &SizeDist,
    c: f64,
    t: f64,
    x: f64,
    n_samples: u64,
    seed: u64,
) -> Result<BallotEstimate> {
    if !(c > 0.0 && t > 0.0 && x > 0.0) {
        return Err(Error::InvalidArgument("need c, t, x > 0".into()));
    }
    if !(x < c * t) {
        return Err(Error::InfeasibleEndpoint { x, ct: c * t });
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let (hits, ratio) = run_samples(
        n_samples,
        seed,
        || (Welford::default(), Welford::default()),
        |acc, rng, _| {
            let path = pinned_path(n_jumps, jump_dist, c, t, x, rng).expect("checked feasibility");
            let u = t * rng.gen::<f64>();
            let shifted = path.shift(u).expect("u in range");
            acc.0.push(if shifted.avoids_level_before_horizon(x) { 1.0 } else { 0.0 });
            acc.1.push(shifted.lebesgue_e(x).expect("x > 0") / t);
        },
        |total, part| {
            total.0.merge(&part.0);
            total.1.merge(&part.1);
        },
    );
    Ok(BallotEstimate {
        frequency: hits.into(),
        lebesgue_ratio: ratio.into(),
        target: x / (c * t),
    })
}

/// Frequency of `T_x = t` for a deterministic grid path shifted at a uniform time.
pub fn grid_ballot_mc(path: &GridPath, x: f64, n_samples: u64, seed: u64) -> McEstimate {
    let table = path.shift_passage_table(x);
    let n = path.values.len();
    run_samples(
        n_samples,
        seed,
        Welford::default,
        |acc, rng, _| {
            let u = path.horizon * rng.gen::<f64>();
            let k = ((u / path.mesh()).round() as usize).min(n - 1);
            acc.push(if table[k] { 1.0 } else { 0.0 });
        },
        |total, part| total.merge(&part),
    )
    .into()
}

/// One `(t, x)` cell of [`kendall_mc`]; masses are per unit `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct KendallCell {
    pub t_range: (f64, f64),
    pub x_range: (f64, f64),
    pub empirical: f64,
    pub std_error: f64,
    pub analytic: f64,
}

impl KendallCell {
    pub fn z_score(&self) -> f64 {
        let d = (self.empirical - self.analytic).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Result of [`kendall_mc`].
#[derive(Clone, Debug, PartialEq)]
pub struct KendallRecord {
    pub cells: Vec<KendallCell>,
    /// Per `x` column, the mean fraction of the column never crossed before `t_max`.
    pub uncrossed: Vec<f64>,
    /// Per `x` column, the mean of (crossed cells + uncrossed); one up to rounding.
    pub column_totals: Vec<f64>,
    pub samples: u64,
    pub truncation_bias: f64,
}

/// Compares the empirical first-passage cloud `{(T_x, x)}` with
/// `(x/t) p_t(−x) dt dx` on the cells spanned by `t_edges × x_edges`.
pub fn kendall_mc(
    model: &SpectrallyPositiveModel,
    x_edges: &[f64],
    t_edges: &[f64],
    n_samples: u64,
    seed: u64,
) -> Result<KendallRecord> {
    if x_edges.len() < 2 || t_edges.len() < 2 {
        return Err(Error::InvalidArgument("need at least two edges per axis".into()));
    }
    if x_edges.windows(2).any(|w| !(w[1] > w[0])) || x_edges[0] < 0.0 {
        return Err(Error::InvalidArgument("x edges must be increasing and >= 0".into()));
    }
    if t_edges.windows(2).any(|w| !(w[1] > w[0])) || t_edges[0] != 0.0 {
        return Err(Error::InvalidArgument("t edges must be increasing and start at 0".into()));
    }
    let t_max = *t_edges.last().expect("checked length");
    sample_path(model, t_max, seed)?;
    let (nx, nt) = (x_edges.len() - 1, t_edges.len() - 1);
    let acc = run_samples(
        n_samples,
        seed,
        || vec![Welford::default(); nx * (nt + 2)],
        |acc, rng, _| {
            let path = sample_path_with(model, t_max, rng).expect("validated model");
            // −inf at each t edge: passage levels reached by then.
            let reached: Vec<f64> = t_edges
                .iter()
                .map(|&te| path.start - path.running_inf(te).expect("edge within horizon"))
                .collect();
            for ix in 0..nx {
                let (x1, x2) = (x_edges[ix], x_edges[ix + 1]);
                let width = x2 - x1;
                let clamp = |r: f64| r.clamp(x1, x2);
                let mut total = 0.0;
                for it in 0..nt {
                    let mass = (clamp(reached[it + 1]) - clamp(reached[it])) / width;
                    total += mass;
                    acc[ix * (nt + 2) + it].push(mass);
                }
                let rest = (x2 - clamp(reached[nt])) / width;
                acc[ix * (nt + 2) + nt].push(rest);
                acc[ix * (nt + 2) + nt + 1].push(total + rest);
            }
        },
        |total, part| {
            for (a, b) in total.iter_mut().zip(&part) {
                a.merge(b);
            }
        },
    );
    let mut cells = Vec::with_capacity(nx * nt);
    let mut uncrossed = Vec::with_capacity(nx);
    let mut column_totals = Vec::with_capacity(nx);
    for ix in 0..nx {
        let (x1, x2) = (x_edges[ix], x_edges[ix + 1]);
        for it in 0..nt {
            let (t1, t2) = (t_edges[it], t_edges[it + 1]);
            let w = acc[ix * (nt + 2) + it];
            cells.push(KendallCell {
                t_range: (t1, t2),
                x_range: (x1, x2),
                empirical: w.mean,
                std_error: w.std_error(),
                analytic: kendall_cell_mass(model, t1, t2, x1, x2)?,
            });
        }
        uncrossed.push(acc[ix * (nt + 2) + nt].mean);
        column_totals.push(acc[ix * (nt + 2) + nt + 1].mean);
    }
    Ok(KendallRecord {
        cells,
        uncrossed,
        column_totals,
        samples: n_samples,
        truncation_bias: truncation_bias(model, GAMMA_TRUNCATION),
    })
}

/// `(1/Δx) ∫_{t1}^{t2} ∫_{x1}^{x2} (x/t) p_t(−x) dx dt`.
pub fn kendall_cell_mass(model: &SpectrallyPositiveModel, t1: f64, t2: f64, x1: f64, x2: f64) -> Result<f64> {
    let mut edges = vec![t1];
    if let Some(c) = model.bv_drift_c() {
        for xe in [x1, x2] {
            let te = xe / c;
            if te > t1 && te < t2 {
                edges.push(te);
            }
        }
    }
    edges.push(t2);
    edges.sort_by(f64::total_cmp);
    let mut failure = None;
    let r = integrate_panels(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            match marginal(model, t).and_then(|law| law.moment_in(1, -x2, -x1)) {
                Ok(m) => -m / t,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        &edges,
        &Tolerance::with_abs(1e-11),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r.value / (x2 - x1))
}

/// Monte Carlo estimate of `P(sup_t = 0)`.
pub fn sup_zero_mc(model: &SpectrallyPositiveModel, t: f64, n_samples: u64, seed: u64) -> Result<McEstimate> {
    sample_path(model, t, seed)?;
    Ok(run_samples(
        n_samples,
        seed,
        Welford::default,
        |acc, rng, _| {
            let path = sample_path_with(model, t, rng).expect("validated model");
            let sup = path.running_sup(t).expect("t is the horizon");
            acc.push(if sup <= path.start { 1.0 } else { 0.0 });
        },
        |total, part| total.merge(&part),
    )
    .into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_jump() -> BVPath {
        BVPath::new(10.0, 0.0, -1.0, vec![1.0], vec![5.0]).unwrap()
    }

    #[test]
    fn evaluation_and_extremes() {
        let p = BVPath::pure_drift(3.0, 2.0);
        assert_eq!(p.evaluate(1.0).unwrap(), -2.0);
        assert_eq!(p.running_inf(3.0).unwrap(), -6.0);
        let q = one_jump();
        assert_eq!(q.evaluate(1.0).unwrap(), 4.0);
        assert_eq!(q.left_limit(1.0).unwrap(), -1.0);
        assert_eq!(q.running_sup(10.0).unwrap(), 4.0);
        assert!(q.evaluate(10.5).is_err());
    }

    #[test]
    fn first_passage_examples() {
        assert_eq!(BVPath::pure_drift(5.0, 1.0).first_passage(2.0), Some(2.0));
        // −1 just before the jump, +4 after it, then down to −2 at time 1 + 6.
        assert_eq!(one_jump().first_passage(2.0), Some(7.0));
        assert_eq!(one_jump().first_passage(0.5), Some(0.5));
        assert_eq!(one_jump().first_passage(20.0), None);
    }

    #[test]
    fn shift_identities() {
        let p = BVPath::new(4.0, 0.0, -1.0, vec![0.5, 1.25, 3.0], vec![1.0, 0.25, 0.5]).unwrap();
        assert_eq!(p.shift(0.0).unwrap(), p);
        assert_eq!(p.shift(4.0).unwrap(), p);
        let twice = p.shift(1.0).unwrap().shift(2.5).unwrap();
        assert_eq!(twice, p.shift(3.5).unwrap());
        let wrap = p.shift(3.0).unwrap().shift(2.0).unwrap();
        assert_eq!(wrap, p.shift(1.0).unwrap());
    }

    #[test]
    fn time_reverse_involution() {
        let p = BVPath::new(4.0, 0.0, -1.0, vec![0.5, 1.25, 4.0], vec![1.0, 0.25, 0.5]).unwrap();
        assert_eq!(p.time_reverse().time_reverse(), p);
        let d = BVPath::pure_drift(2.0, 1.0);
        assert_eq!(d.time_reverse(), d);
    }

    #[test]
    fn lebesgue_e_examples() {
        assert_eq!(BVPath::pure_drift(2.0, 1.5).lebesgue_e(3.0).unwrap(), 2.0);
        // Pinned at −x: λ(E) = x/c.
        let p = BVPath::new(4.0, 0.0, -1.0, vec![0.5, 1.25, 3.0], vec![1.0, 0.25, 0.5]).unwrap();
        assert_eq!(p.end_value(), -2.25);
        assert_eq!(p.lebesgue_e(2.25).unwrap(), 2.25);
    }

    #[test]
    fn three_piece_grid_path() {
        let g = GridPath::three_piece_example(1.0, 1.0, 100_001).unwrap();
        let (le, err) = g.lebesgue_e(1.0).unwrap();
        assert!((le - 0.25).abs() <= err, "{le}");
    }

    #[test]
    fn welford_merge_matches_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let mut all = Welford::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Welford::default();
        let mut b = Welford::default();
        xs[..37].iter().for_each(|&x| a.push(x));
        xs[37..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean - all.mean).abs() < 1e-15);
        assert!((a.variance() - all.variance()).abs() < 1e-14);
    }

    #[test]
    fn sample_path_is_reproducible() {
        let m = SpectrallyPositiveModel::gamma_minus_drift(1.0, 1.0, 1.0).unwrap();
        assert_eq!(sample_path(&m, 2.0, 7).unwrap(), sample_path(&m, 2.0, 7).unwrap());
        let cp = SpectrallyPositiveModel::compound_poisson_minus_drift(1.0, 0.0, SizeDist::Exponential { mean: 1.0 })
            .unwrap();
        let p = sample_path(&cp, 3.0, 1).unwrap();
        assert!(p.jump_times.is_empty());
        assert_eq!(p.end_value(), -3.0);
    }

    #[test]
    fn ballot_rejects_unreachable_endpoint() {
        let e = ballot_mc(5, &SizeDist::Exponential { mean: 1.0 }, 1.0, 1.0, 1.0, 10, 1);
        assert!(matches!(e, Err(Error::InfeasibleEndpoint { .. })));
    }
}
