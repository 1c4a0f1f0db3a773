//! Marginal law of `X_t`: density, distribution function and the partial
//! moments that the fluctuation formulas integrate against.
//!
//! Brownian and gamma-minus-drift marginals are closed form. Stable and
//! mixed models go through numerical Fourier inversion of
//! `E[e^{iuX_t}] = exp(t φ(−iu))`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Jumps, SpectrallyPositiveModel};
use crate::quadrature::{graded_piece, grading_for_power, integrate_panels, Integral, Knot, Node, Tolerance};
use crate::special::{gamma_p, gamma_pdf, gamma_q, ln_gamma_fn, normal_cdf, normal_pdf};

/// `E[e^{iuX_t}]`.
pub fn characteristic_function(model: &SpectrallyPositiveModel, t: f64, u: f64) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let lam = Complex64::new(0.0, -u.abs());
    let value = (t * model.laplace_exponent_complex(lam)).exp();
    if u > 0.0 {
        value
    } else {
        value.conj()
    }
}

/// Fourier-inversion backend for laws without a closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierLaw {
    model: SpectrallyPositiveModel,
    t: f64,
    center: f64,
    scale: f64,
    u_max: f64,
    heavy_tail: bool,
}

const CF_CUTOFF: f64 = 1e-13;

impl FourierLaw {
    pub fn new(model: &SpectrallyPositiveModel, t: f64) -> Result<Self> {
        let mut scale_sq = model.gaussian_coef * t;
        let heavy_tail = matches!(model.jumps, Jumps::StablePositive { .. });
        match &model.jumps {
            Jumps::StablePositive { alpha, scale } => {
                scale_sq += (scale * t).powf(2.0 / alpha);
            }
            _ => scale_sq += model.variance() * t - model.gaussian_coef * t,
        }
        let scale = scale_sq.sqrt();
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::NoDensity("degenerate characteristic function".into()));
        }
        let mut u_max = 1.0 / scale;
        let mut doublings = 0;
        while characteristic_function(model, t, u_max).norm() > CF_CUTOFF {
            u_max *= 2.0;
            doublings += 1;
            if doublings > 40 {
                return Err(Error::Inversion(format!(
                    "characteristic function still above {CF_CUTOFF:e} at u = {u_max:e}"
                )));
            }
        }
        Ok(FourierLaw {
            model: model.clone(),
            t,
            center: t * model.mean(),
            scale,
            u_max,
            heavy_tail,
        })
    }

    /// `exp(t φ(−iu) − iux)` with the drift phase folded into one term.
    fn shifted_cf(&self, u: f64, x: f64) -> Complex64 {
        let lam = Complex64::new(0.0, -u);
        let mut exponent = self.t * self.model.laplace_exponent_complex(lam);
        exponent.im -= u * x;
        exponent.exp()
    }

    fn panels(&self, x: f64) -> Result<Vec<f64>> {
        let omega = (x - self.center).abs() + self.scale * 1e-3;
        let width = (self.u_max / 16.0).min(4.0 / omega);
        let n = (self.u_max / width).ceil() as usize;
        if n > 200_000 {
            return Err(Error::Inversion(format!("x = {x} is too far in the tail to invert")));
        }
        Ok((0..=n).map(|i| self.u_max * i as f64 / n as f64).collect())
    }

    fn tolerance(&self, panels: usize) -> Tolerance {
        Tolerance {
            abs: 1e-13,
            rel: 1e-11,
            max_intervals: 4 * panels + 2000,
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        let edges = self.panels(x)?;
        let r = within_gate(integrate_panels(|u| self.shifted_cf(u, x).re, &edges, &self.tolerance(edges.len())))?;
        let value = r.value / std::f64::consts::PI;
        if r.abs_error / std::f64::consts::PI > 1e-9 {
            return Err(Error::Inversion(format!(
                "density at {x}: error estimate {:e}",
                r.abs_error / std::f64::consts::PI
            )));
        }
        Ok(value.max(0.0))
    }

    /// Gil-Pelaez inversion of `P(X_t ≤ x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let edges = self.panels(x)?;
        let slope = self.center - x;
        let r = within_gate(integrate_panels(
            |u| {
                if u == 0.0 {
                    slope
                } else {
                    self.shifted_cf(u, x).im / u
                }
            },
            &edges,
            &self.tolerance(edges.len()),
        ))?;
        if r.abs_error > 1e-9 {
            return Err(Error::Inversion(format!(
                "distribution function at {x}: error estimate {:e}",
                r.abs_error
            )));
        }
        Ok((0.5 - r.value / std::f64::consts::PI).clamp(0.0, 1.0))
    }

    /// Left end below which the density is negligible.
    fn left_cut(&self) -> Result<f64> {
        let mut x = self.center - self.scale;
        for _ in 0..60 {
            if self.pdf(x)? < 1e-12 {
                return Ok(x);
            }
            x -= self.scale;
        }
        Ok(x)
    }

    fn right_cut(&self) -> f64 {
        self.center + 40.0 * self.scale
    }
}

/// The panel tolerance is tighter than the 1e-9 the inversion promises, so a run that
/// hits the interval cap is still usable when its estimate is inside that bound.
fn within_gate(r: Result<Integral>) -> Result<Integral> {
    match r {
        Err(Error::Quadrature { value, abs_error, intervals }) if abs_error <= 1e-9 => Ok(Integral {
            value,
            abs_error,
            evaluations: intervals,
        }),
        Err(Error::Quadrature { abs_error, .. }) => {
            Err(Error::Inversion(format!("oscillatory quadrature error estimate {abs_error:e}")))
        }
        other => other,
    }
}

/// The law of `X_t` in the form best suited to evaluate it.
#[derive(Clone, Debug, PartialEq)]
pub enum Marginal {
    Gaussian { mean: f64, sd: f64 },
    /// `X = G + shift` with `G ~ Gamma(shape, scale)`.
    ShiftedGamma { shape: f64, scale: f64, shift: f64 },
    Degenerate { value: f64 },
    Fourier(FourierLaw),
}

/// The marginal law of `X_t`, or `NoDensity` when it has an atom that
/// the integral formulas cannot handle.
pub fn marginal(model: &SpectrallyPositiveModel, t: f64) -> Result<Marginal> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    if model.gaussian_coef > 0.0 {
        if matches!(model.jumps, Jumps::None) {
            return Ok(Marginal::Gaussian {
                mean: model.drift * t,
                sd: (model.gaussian_coef * t).sqrt(),
            });
        }
        return Ok(Marginal::Fourier(FourierLaw::new(model, t)?));
    }
    match &model.jumps {
        Jumps::None => Ok(Marginal::Degenerate { value: model.drift * t }),
        Jumps::GammaSubordinator { shape_rate, scale } => Ok(Marginal::ShiftedGamma {
            shape: shape_rate * t,
            scale: *scale,
            shift: model.drift * t,
        }),
        Jumps::StablePositive { .. } => Ok(Marginal::Fourier(FourierLaw::new(model, t)?)),
        Jumps::CompoundPoisson { rate, .. } => Err(Error::NoDensity(format!(
            "compound Poisson minus drift has an atom of mass {:e} at -ct",
            (-rate * t).exp()
        ))),
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `∫_a^b z^k ϕ(z) dz` for the standard normal density.
fn normal_partial(k: u32, a: f64, b: f64) -> f64 {
    let edge = |z: f64, p: i32| {
        if z.is_infinite() {
            0.0
        } else {
            z.powi(p) * normal_pdf(z)
        }
    };
    let m0 = if a > 0.0 {
        normal_cdf(-a) - normal_cdf(-b)
    } else {
        normal_cdf(b) - normal_cdf(a)
    };
    if k == 0 {
        return m0;
    }
    let m1 = edge(a, 0) - edge(b, 0);
    let (mut prev, mut cur) = (m0, m1);
    for j in 2..=k {
        let next = edge(a, j as i32 - 1) - edge(b, j as i32 - 1) + (j - 1) as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `E[G^i 1{lo < G ≤ hi}]` for `G ~ Gamma(k, θ)`.
fn gamma_partial(k: f64, theta: f64, i: u32, lo: f64, hi: f64) -> f64 {
    let lo = lo.max(0.0);
    if hi <= lo {
        return 0.0;
    }
    let a = k + i as f64;
    let rising = (0..i).fold(1.0, |acc, j| acc * (k + j as f64));
    let mass = if lo / theta > a {
        gamma_q(a, lo / theta) - gamma_q(a, hi / theta)
    } else {
        gamma_p(a, hi / theta) - gamma_p(a, lo / theta)
    };
    theta.powi(i as i32) * rising * mass
}

/// `E[G^i e^{μG} 1{lo < G ≤ hi}]` for `G ~ Gamma(k, θ)`.
fn gamma_tilted_partial(k: f64, theta: f64, i: u32, mu: f64, lo: f64, hi: f64) -> Result<f64> {
    let lo = lo.max(0.0);
    if hi <= lo {
        return Ok(0.0);
    }
    if mu * theta < 0.5 {
        let factor = 1.0 - mu * theta;
        return Ok(factor.powf(-k) * gamma_partial(k, theta / factor, i, lo, hi));
    }
    if hi.is_infinite() {
        return Err(Error::Unsupported(format!(
            "E[exp({mu} G)] is infinite for a gamma law with scale {theta}"
        )));
    }
    // Power series of the exponential; terms peak near n ≈ μ·hi.
    let ln_gk = ln_gamma_fn(k);
    let mut sum = 0.0;
    let mut ln_fact = 0.0;
    for n in 0..5000u32 {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let a = k + (i + n) as f64;
        let ln_coef = n as f64 * mu.ln() - ln_fact + ln_gamma_fn(a) - ln_gk
            + (i + n) as f64 * theta.ln();
        let mass = gamma_p(a, hi / theta) - gamma_p(a, lo / theta);
        let term = ln_coef.exp() * mass;
        sum += term;
        if n as f64 > mu * hi + 10.0 && term < 1e-17 * sum {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        iterations: 5000,
        residual: sum,
    })
}

impl Marginal {
    pub fn pdf(&self, x: f64) -> Result<f64> {
        match self {
            Marginal::Gaussian { mean, sd } => Ok(normal_pdf((x - mean) / sd) / sd),
            Marginal::ShiftedGamma { shape, scale, shift } => Ok(gamma_pdf(*shape, *scale, x - shift)),
            Marginal::Degenerate { value } => Err(Error::NoDensity(format!("law is a point mass at {value}"))),
            Marginal::Fourier(f) => f.pdf(x),
        }
    }

    /// `P(X ≤ x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        match self {
            Marginal::Gaussian { mean, sd } => Ok(normal_cdf((x - mean) / sd)),
            Marginal::ShiftedGamma { shape, scale, shift } => Ok(gamma_p(*shape, (x - shift) / scale)),
            Marginal::Degenerate { value } => Ok(if x >= *value { 1.0 } else { 0.0 }),
            Marginal::Fourier(f) => f.cdf(x),
        }
    }

    /// `P(X > x)`, computed without cancellation in the upper tail where possible.
    pub fn sf(&self, x: f64) -> Result<f64> {
        match self {
            Marginal::Gaussian { mean, sd } => Ok(normal_cdf(-(x - mean) / sd)),
            Marginal::ShiftedGamma { shape, scale, shift } => Ok(gamma_q(*shape, (x - shift) / scale)),
            Marginal::Degenerate { value } => Ok(if x < *value { 1.0 } else { 0.0 }),
            Marginal::Fourier(f) => Ok(1.0 - f.cdf(x)?),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Marginal::Gaussian { mean, .. } => *mean,
            Marginal::ShiftedGamma { shape, scale, shift } => shape * scale + shift,
            Marginal::Degenerate { value } => *value,
            Marginal::Fourier(f) => f.center,
        }
    }

    /// Lower end of the support (`-∞` when unbounded).
    pub fn support_min(&self) -> f64 {
        match self {
            Marginal::ShiftedGamma { shift, .. } => *shift,
            Marginal::Degenerate { value } => *value,
            _ => f64::NEG_INFINITY,
        }
    }

    /// `E[X^j 1{a < X ≤ b}]`.
    pub fn moment_in(&self, j: u32, a: f64, b: f64) -> Result<f64> {
        if !(b > a) {
            return Ok(0.0);
        }
        match self {
            Marginal::Gaussian { mean, sd } => {
                let (za, zb) = ((a - mean) / sd, (b - mean) / sd);
                Ok((0..=j)
                    .map(|i| binomial(j, i) * mean.powi((j - i) as i32) * sd.powi(i as i32) * normal_partial(i, za, zb))
                    .sum())
            }
            Marginal::ShiftedGamma { shape, scale, shift } => Ok((0..=j)
                .map(|i| {
                    binomial(j, i)
                        * shift.powi((j - i) as i32)
                        * gamma_partial(*shape, *scale, i, a - shift, b - shift)
                })
                .sum()),
            Marginal::Degenerate { value } => Ok(if *value > a && *value <= b { value.powi(j as i32) } else { 0.0 }),
            Marginal::Fourier(f) => {
                if j == 0 {
                    let upper = if b.is_infinite() { 1.0 } else { f.cdf(b)? };
                    let lower = if a.is_infinite() { 0.0 } else { f.cdf(a)? };
                    return Ok(upper - lower);
                }
                if b.is_infinite() && f.heavy_tail {
                    if j == 1 {
                        return Ok(f.center - self.moment_in(1, f64::NEG_INFINITY, a)?);
                    }
                    return Err(Error::Unsupported(format!("moment of order {j} is infinite for a stable law")));
                }
                let lo = a.max(f.left_cut()?);
                let hi = b.min(f.right_cut());
                self.expect(|x| x.powi(j as i32), lo, hi)
            }
        }
    }

    /// `E[X^j e^{μX} 1{a < X ≤ b}]`.
    pub fn exp_moment_in(&self, j: u32, mu: f64, a: f64, b: f64) -> Result<f64> {
        if !(b > a) {
            return Ok(0.0);
        }
        if mu == 0.0 {
            return self.moment_in(j, a, b);
        }
        match self {
            Marginal::Gaussian { mean, sd } => {
                let factor = (mu * mean + 0.5 * mu * mu * sd * sd).exp();
                let tilted = Marginal::Gaussian {
                    mean: mean + mu * sd * sd,
                    sd: *sd,
                };
                Ok(factor * tilted.moment_in(j, a, b)?)
            }
            Marginal::ShiftedGamma { shape, scale, shift } => {
                let mut total = 0.0;
                for i in 0..=j {
                    total += binomial(j, i)
                        * shift.powi((j - i) as i32)
                        * gamma_tilted_partial(*shape, *scale, i, mu, a - shift, b - shift)?;
                }
                Ok((mu * shift).exp() * total)
            }
            Marginal::Degenerate { value } => Ok(if *value > a && *value <= b {
                value.powi(j as i32) * (mu * value).exp()
            } else {
                0.0
            }),
            Marginal::Fourier(f) => {
                if mu > 0.0 && b.is_infinite() {
                    return Err(Error::Unsupported("positive exponential moment over an unbounded range".into()));
                }
                let lo = a.max(f.left_cut()?);
                let mut hi = b.min(if f.heavy_tail { f64::INFINITY } else { f.right_cut() });
                if mu < 0.0 {
                    hi = hi.min(lo.max(0.0) + 40.0 / -mu + f.right_cut() - f.center);
                }
                self.expect(|x| x.powi(j as i32) * (mu * x).exp(), lo, hi)
            }
        }
    }

    /// `E[max(−X, 0)]`.
    pub fn neg_part_mean(&self) -> Result<f64> {
        Ok(-self.moment_in(1, f64::NEG_INFINITY, 0.0)?)
    }

    /// `∫_a^b g(x) p(x) dx` by adaptive quadrature over the effective support.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G, a: f64, b: f64) -> Result<f64> {
        if !(b > a) {
            return Ok(0.0);
        }
        let tol = Tolerance::with_abs(1e-12);
        match self {
            Marginal::Gaussian { mean, sd } => {
                let lo = a.max(mean - 14.0 * sd);
                let hi = b.min(mean + 14.0 * sd);
                if hi <= lo {
                    return Ok(0.0);
                }
                let edges: Vec<f64> = (0..=8).map(|i| lo + (hi - lo) * i as f64 / 8.0).collect();
                Ok(integrate_panels(|x| g(x) * normal_pdf((x - mean) / sd) / sd, &edges, &tol)?.value)
            }
            Marginal::ShiftedGamma { shape, scale, shift } => {
                let g_hi = scale * (shape + 40.0 * shape.sqrt() + 60.0);
                let lo = (a - shift).max(0.0);
                let hi = (b - shift).min(g_hi);
                if hi <= lo {
                    return Ok(0.0);
                }
                let left = if lo == 0.0 {
                    Knot::new(0.0, grading_for_power(*shape))
                } else {
                    Knot::new(lo, 1)
                };
                let f = |n: Node| {
                    let y = if n.knot == 0.0 { n.offset } else { n.s };
                    g(y + shift) * gamma_pdf(*shape, *scale, y)
                };
                Ok(graded_piece(&f, left, Knot::new(hi, 1), &tol)?.value)
            }
            Marginal::Degenerate { value } => Ok(if *value > a && *value <= b { g(*value) } else { 0.0 }),
            Marginal::Fourier(f) => {
                let lo = a.max(f.left_cut()?);
                let hi = b.min(f.center + 1e4 * f.scale);
                if hi <= lo {
                    return Ok(0.0);
                }
                let mut edges = vec![lo];
                let mut x = lo;
                let mut step = f.scale;
                while x + step < hi {
                    x += step;
                    edges.push(x);
                    if x > f.center + 4.0 * f.scale {
                        step *= 1.5;
                    }
                }
                edges.push(hi);
                let mut err = None;
                let r = integrate_panels(
                    |x| match f.pdf(x) {
                        Ok(p) => g(x) * p,
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    },
                    &edges,
                    &Tolerance::with_abs(1e-10),
                )?;
                if let Some(e) = err {
                    return Err(e);
                }
                Ok(r.value)
            }
        }
    }
}

/// Density `p_t(x)` of `X_t`.
pub fn density(model: &SpectrallyPositiveModel, t: f64, x: f64) -> Result<f64> {
    match marginal(model, t)? {
        Marginal::Degenerate { value } => Err(Error::NoDensity(format!("X_t = {value} almost surely"))),
        law => law.pdf(x),
    }
}

/// Density by Fourier inversion regardless of family, for cross-checks.
pub fn density_fourier(model: &SpectrallyPositiveModel, t: f64, x: f64) -> Result<f64> {
    if !model.has_density() {
        return Err(Error::NoDensity("model has an atom".into()));
    }
    FourierLaw::new(model, t)?.pdf(x)
}

/// Entrance law `q_t(x) = (x/t) p_t(−x)` of the excursions away from the supremum.
pub fn entrance_law_q(model: &SpectrallyPositiveModel, t: f64, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("x must be >= 0, got {x}")));
    }
    let p = density(model, t, -x)?;
    Ok(if x == 0.0 { 0.0 } else { x / t * p })
}

/// Mass of the atom of `X_t` at `−ct`: `e^{−μt}` for compound Poisson
/// minus drift, one for pure drift, zero otherwise.
pub fn atom_at_minus_ct(model: &SpectrallyPositiveModel, t: f64) -> f64 {
    if model.gaussian_coef > 0.0 {
        return 0.0;
    }
    match &model.jumps {
        Jumps::None => 1.0,
        Jumps::CompoundPoisson { rate, .. } => (-rate * t).exp(),
        _ => 0.0,
    }
}

/// How a grid's values were produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Series,
    Fourier,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Series => "series",
            Method::Fourier => "fourier",
        }
    }
}

/// Tabulated density `p_t` on a sorted grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub t: f64,
    pub x_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub method: Method,
    /// `(a, k)` when the support starts at `a < x_values[0]` with `p_t(x) ∝ (x − a)^{k−1}` there.
    pub edge: Option<(f64, f64)>,
}

pub const DEFAULT_GRID_POINTS: usize = 2048;

impl DensityGrid {
    /// Grid on `[xmin, xmax]` with `n` equally spaced points.
    pub fn on_range(model: &SpectrallyPositiveModel, t: f64, xmin: f64, xmax: f64, n: usize) -> Result<Self> {
        if n < 2 || !(xmax > xmin) {
            return Err(Error::InvalidArgument(format!(
                "need n >= 2 and xmin < xmax, got n={n}, [{xmin}, {xmax}]"
            )));
        }
        let xs = (0..n).map(|i| xmin + (xmax - xmin) * i as f64 / (n - 1) as f64).collect();
        Self::on_points(model, t, xs)
    }

    /// Default grid wide enough that the trapezoid rule recovers unit mass.
    pub fn covering(model: &SpectrallyPositiveModel, t: f64, n: usize) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidArgument(format!("need at least 16 points, got {n}")));
        }
        let law = marginal(model, t)?;
        let xs: Vec<f64> = match &law {
            Marginal::Gaussian { mean, sd } => {
                (0..n).map(|i| mean - 12.0 * sd + 24.0 * sd * i as f64 / (n - 1) as f64).collect()
            }
            Marginal::ShiftedGamma { shape, scale, shift } => {
                let span = scale * (shape + 12.0 * shape.sqrt() + 30.0);
                if *shape >= 4.0 {
                    (0..n).map(|i| shift + span * i as f64 / (n - 1) as f64).collect()
                } else if *shape >= 1.0 {
                    // p_t is finite at the edge but its slope is not for shape < 2
                    (0..n).map(|i| shift + span * (i as f64 / (n - 1) as f64).powi(2)).collect()
                } else {
                    // p_t blows up like (x − shift)^{shape − 1}: grade towards the edge, keeping
                    // the first offset well above the spacing of floats near `shift`.
                    let floor = 1e-12 * shift.abs().max(span);
                    let cap = ((floor / span).ln() / (1.0 / n as f64).ln()).floor().max(1.0) as u32;
                    let m = grading_for_power(*shape).min(cap) as i32;
                    let xs = (0..n).map(|i| shift + span * ((i + 1) as f64 / n as f64).powi(m)).collect();
                    let mut grid = Self::on_points(model, t, xs)?;
                    grid.edge = Some((*shift, *shape));
                    return Ok(grid);
                }
            }
            Marginal::Degenerate { value } => {
                return Err(Error::NoDensity(format!("X_t = {value} almost surely")));
            }
            Marginal::Fourier(f) => {
                let left = f.left_cut()?;
                if f.heavy_tail {
                    let Jumps::StablePositive { alpha, .. } = model.jumps else {
                        unreachable!("heavy tails come from the stable part")
                    };
                    // Tail mass beyond center + scale·R is about R^{-α}/(α Γ(−α)).
                    let gamma_neg = (ln_gamma_fn(2.0 - alpha)).exp() / (alpha * (alpha - 1.0));
                    let reach = (1.0 / (alpha * gamma_neg * 2e-5)).powf(1.0 / alpha);
                    let (v_lo, v_hi) = (((left - f.center) / f.scale).asinh(), reach.asinh());
                    (0..n)
                        .map(|i| f.center + f.scale * (v_lo + (v_hi - v_lo) * i as f64 / (n - 1) as f64).sinh())
                        .collect()
                } else {
                    let right = f.center + 12.0 * f.scale;
                    (0..n).map(|i| left + (right - left) * i as f64 / (n - 1) as f64).collect()
                }
            }
        };
        Self::on_points(model, t, xs)
    }

    fn on_points(model: &SpectrallyPositiveModel, t: f64, x_values: Vec<f64>) -> Result<Self> {
        let law = marginal(model, t)?;
        let method = match law {
            Marginal::Fourier(_) => Method::Fourier,
            _ => Method::ClosedForm,
        };
        let p_values = x_values
            .par_iter()
            .map(|&x| law.pdf(x))
            .collect::<Result<Vec<f64>>>()?;
        Ok(DensityGrid {
            t,
            x_values,
            p_values,
            method,
            edge: None,
        })
    }

    /// Trapezoid-rule integral of the tabulated density. Next to a support edge
    /// the rule is applied to `p_t(x)/(x − a)^{k−1}` against the weight `(x − a)^{k−1}`.
    pub fn trapezoid(&self) -> f64 {
        let cells = self.x_values.windows(2).zip(self.p_values.windows(2));
        let Some((a, k)) = self.edge else {
            return cells.map(|(x, p)| 0.5 * (x[1] - x[0]) * (p[0] + p[1])).sum();
        };
        let q = |x: f64, p: f64| p / (x - a).powf(k - 1.0);
        let (u0, q0) = (self.x_values[0] - a, q(self.x_values[0], self.p_values[0]));
        let head = q0 * u0.powf(k) / k;
        head + cells
            .map(|(x, p)| {
                let (u0, u1) = (x[0] - a, x[1] - a);
                let (q0, q1) = (q(x[0], p[0]), q(x[1], p[1]));
                let slope = (q1 - q0) / (u1 - u0);
                (q0 - slope * u0) * (u1.powf(k) - u0.powf(k)) / k + slope * (u1.powf(k + 1.0) - u0.powf(k + 1.0)) / (k + 1.0)
            })
            .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SizeDist;

    fn bm() -> SpectrallyPositiveModel {
        SpectrallyPositiveModel::brownian(0.0, 1.0).unwrap()
    }

    fn gamma_model() -> SpectrallyPositiveModel {
        SpectrallyPositiveModel::gamma_minus_drift(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn density_examples() {
        let expected = (-0.5_f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((density(&bm(), 1.0, -1.0).unwrap() - expected).abs() < 1e-15);
        assert!((density(&gamma_model(), 1.0, 0.0).unwrap() - (-1.0_f64).exp()).abs() < 1e-15);
        for x in [0.1, 0.7, 2.5] {
            assert_eq!(density(&bm(), 1.3, x).unwrap(), density(&bm(), 1.3, -x).unwrap());
        }
        let cp = SpectrallyPositiveModel::compound_poisson_minus_drift(1.0, 1.0, SizeDist::Exponential { mean: 1.0 })
            .unwrap();
        assert!(matches!(density(&cp, 1.0, 0.0), Err(Error::NoDensity(_))));
        assert!((atom_at_minus_ct(&cp, 2.0) - (-2.0_f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn entrance_law_examples() {
        assert_eq!(entrance_law_q(&bm(), 1.0, 0.0).unwrap(), 0.0);
        assert!((entrance_law_q(&bm(), 1.0, 1.0).unwrap() - 0.241_970_724_519_143_37).abs() < 1e-15);
        let m = SpectrallyPositiveModel::brownian(0.3, 2.0).unwrap();
        for (t, x) in [(0.5, 0.2), (1.0, 1.0), (3.0, 2.0)] {
            let direct = entrance_law_q(&m, t, x).unwrap();
            let fourier = x / t * density_fourier(&m, t, -x).unwrap();
            assert!((direct - fourier).abs() < 1e-7, "{t} {x}");
        }
    }

    #[test]
    fn characteristic_function_examples() {
        assert_eq!(characteristic_function(&gamma_model(), 2.0, 0.0), Complex64::new(1.0, 0.0));
        let v = characteristic_function(&bm(), 1.0, 1.0);
        assert!((v - Complex64::new((-0.5_f64).exp(), 0.0)).norm() < 1e-15);
        let s = SpectrallyPositiveModel::stable(1.5, 1.0, 0.2).unwrap();
        for u in [0.3, 1.0, 4.0] {
            assert_eq!(characteristic_function(&s, 1.0, -u), characteristic_function(&s, 1.0, u).conj());
        }
    }

    #[test]
    fn fourier_matches_gaussian_on_central_region() {
        let m = SpectrallyPositiveModel::brownian(-0.5, 0.7).unwrap();
        let t = 2.0;
        let (mean, sd) = (-1.0, (1.4_f64).sqrt());
        let mut worst: f64 = 0.0;
        for i in 0..=100 {
            let x = mean - 2.6 * sd + 5.2 * sd * i as f64 / 100.0;
            worst = worst.max((density_fourier(&m, t, x).unwrap() - density(&m, t, x).unwrap()).abs());
        }
        assert!(worst < 1e-7, "{worst}");
    }

    #[test]
    fn fourier_cdf_matches_gaussian() {
        let m = bm();
        let law = FourierLaw::new(&m, 1.0).unwrap();
        for x in [-2.0, -0.3, 0.0, 1.5] {
            assert!((law.cdf(x).unwrap() - normal_cdf(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn gamma_partial_moments_match_quadrature() {
        let law = marginal(&SpectrallyPositiveModel::gamma_minus_drift(1.5, 0.7, 2.0).unwrap(), 1.3).unwrap();
        for (j, a, b) in [(0, -1.0, 0.0), (1, f64::NEG_INFINITY, 0.0), (2, -0.5, 3.0), (1, 1.0, f64::INFINITY)] {
            let closed = law.moment_in(j, a, b).unwrap();
            let quad = law.expect(|x| x.powi(j as i32), a, b).unwrap();
            assert!((closed - quad).abs() < 1e-9, "{j} {a} {b}: {closed} vs {quad}");
        }
        for mu in [-2.0, 0.3, 1.5] {
            let closed = law.exp_moment_in(1, mu, f64::NEG_INFINITY, 0.0).unwrap();
            let quad = law.expect(|x| x * (mu * x).exp(), f64::NEG_INFINITY, 0.0).unwrap();
            assert!((closed - quad).abs() < 1e-9, "mu {mu}: {closed} vs {quad}");
        }
    }

    #[test]
    fn gaussian_partial_moments_match_quadrature() {
        let law = Marginal::Gaussian { mean: 0.3, sd: 1.2 };
        for (j, a, b) in [(0, 1.0, 5.0), (1, f64::NEG_INFINITY, 0.0), (3, -1.0, 2.0)] {
            let closed = law.moment_in(j, a, b).unwrap();
            let quad = law.expect(|x| x.powi(j as i32), a, b).unwrap();
            assert!((closed - quad).abs() < 1e-10, "{j}: {closed} vs {quad}");
        }
        let closed = law.exp_moment_in(2, 1.3, 0.0, f64::INFINITY).unwrap();
        let quad = law.expect(|x| x * x * (1.3 * x).exp(), 0.0, f64::INFINITY).unwrap();
        assert!((closed - quad).abs() < 1e-9 * closed);
    }

    #[test]
    fn stable_neg_part_mean_is_consistent() {
        let law = marginal(&SpectrallyPositiveModel::stable(1.5, 1.0, 0.0).unwrap(), 1.0).unwrap();
        let direct = law.neg_part_mean().unwrap();
        let upper = law.moment_in(1, 0.0, f64::INFINITY).unwrap();
        // E[X] = 0 forces E[X⁺] = E[X⁻].
        assert!((direct - upper).abs() < 1e-9);
        assert!(direct > 0.0);
    }

    #[test]
    fn grids_normalize_and_stay_positive() {
        let cases = vec![
            (bm(), 1.0),
            (SpectrallyPositiveModel::brownian(1.0, 0.5).unwrap(), 3.0),
            (gamma_model(), 1.0),
            (gamma_model(), 4.0),
            (SpectrallyPositiveModel::gamma_minus_drift(1.0, 1.0, 1.0).unwrap(), 0.5),
            (SpectrallyPositiveModel::stable(1.5, 1.0, 0.0).unwrap(), 1.0),
        ];
        let shapes = [0.05, 0.3, 0.9, 1.0, 1.2, 1.5, 3.9, 10.0];
        let cases = cases
            .into_iter()
            .chain(shapes.map(|k| (SpectrallyPositiveModel::gamma_minus_drift(1.0, k, 0.5).unwrap(), 1.0)));
        for (m, t) in cases {
            let g = DensityGrid::covering(&m, t, DEFAULT_GRID_POINTS).unwrap();
            let mass = g.trapezoid();
            assert!((mass - 1.0).abs() < 1e-4, "{:?} t={t}: {mass}", m.family());
            let n = g.p_values.len();
            assert!(g.p_values.iter().all(|p| *p >= 0.0));
            assert!(g.p_values[1..n - 1].iter().all(|p| *p > 0.0), "{:?}", m.family());
        }
    }

    #[test]
    fn chapman_kolmogorov() {
        let g = gamma_model();
        for (s, t, x) in [(0.4, 1.0, 0.3), (1.0, 2.5, -0.5), (2.0, 3.0, 1.0)] {
            let left = marginal(&g, s).unwrap();
            let right = marginal(&g, t - s).unwrap();
            let conv = left
                .expect(|y| right.pdf(x - y).unwrap(), f64::NEG_INFINITY, x + (t - s))
                .unwrap();
            assert!((conv - density(&g, t, x).unwrap()).abs() < 1e-5, "{s} {t} {x}");
        }
        let b = bm();
        let left = marginal(&b, 0.3).unwrap();
        let conv = left
            .expect(|y| density(&b, 0.7, 0.4 - y).unwrap(), f64::NEG_INFINITY, f64::INFINITY)
            .unwrap();
        assert!((conv - density(&b, 1.0, 0.4).unwrap()).abs() < 1e-9);
    }
}
