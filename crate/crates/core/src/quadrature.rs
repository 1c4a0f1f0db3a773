//! Adaptive Gauss–Kronrod quadrature with graded endpoint substitutions.
//!
//! Every integral in the fluctuation formulas is one of three shapes:
//! a plain finite interval, a convolution `∫₀ᵗ f(s, t − s) ds` whose
//! integrand may blow up like a power at `0`, at `t` and at interior
//! support edges, or a half-line integral with an algebraic tail. The
//! graded substitution `s = a + h·w^m` turns an endpoint behaviour
//! `(s − a)^(β)` into `w^(m(β+1) − 1)`, which is bounded once `m(β+1) ≥ 1`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::Add;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Stopping rule for the adaptive integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-10,
            rel: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn with_abs(abs: f64) -> Self {
        Tolerance {
            abs,
            ..Tolerance::default()
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

/// Value of an integral with its estimated absolute error.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

impl Add for Integral {
    type Output = Integral;

    fn add(self, rhs: Integral) -> Integral {
        Integral {
            value: self.value + rhs.value,
            abs_error: self.abs_error + rhs.abs_error,
            evaluations: self.evaluations + rhs.evaluations,
        }
    }
}

impl Integral {
    pub fn scale(self, factor: f64) -> Integral {
        Integral {
            value: self.value * factor,
            abs_error: self.abs_error * factor.abs(),
            evaluations: self.evaluations,
        }
    }
}

/// One 21-point Gauss–Kronrod panel, QUADPACK error scaling.
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = 0.0;
    let mut res_k = WGK[10] * fc;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive bisection on `[a, b]`, splitting the panel with the
/// largest error estimate until the total error meets `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<Integral> {
    if a == b {
        return Ok(Integral::default());
    }
    integrate_panels(f, &[a, b], tol)
}

/// Like [`integrate`] but starting from the partition given by `edges`.
pub fn integrate_panels<F: FnMut(f64) -> f64>(mut f: F, edges: &[f64], tol: &Tolerance) -> Result<Integral> {
    if edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "integration limits must be finite, got {edges:?}"
        )));
    }
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for w in edges.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let (value, err) = gk21(&mut f, w[0], w[1]);
        evaluations += 21;
        total += value;
        total_err += err;
        heap.push(Panel { a: w[0], b: w[1], value, err });
    }
    let budget = tol.max_intervals.max(2 * heap.len());
    while total_err > tol.target(total) {
        if heap.len() >= budget {
            return Err(Error::Quadrature {
                value: total,
                abs_error: total_err,
                intervals: heap.len(),
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // Panel narrower than machine resolution; accept what we have.
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
    }
    // Re-sum to shed the drift of the running totals.
    let (value, abs_error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.err));
    if !value.is_finite() {
        return Err(Error::Quadrature {
            value,
            abs_error,
            intervals: heap.len(),
        });
    }
    Ok(Integral {
        value,
        abs_error,
        evaluations,
    })
}

/// Grading exponent `m` that makes `(s − a)^(power − 1)` bounded after `s = a + h·w^m`.
pub fn grading_for_power(power: f64) -> u32 {
    if power >= 2.0 {
        1
    } else {
        ((2.0 / power).ceil() as u32).clamp(1, 48)
    }
}

/// A point where the integrand may behave like `|s − at|^(power − 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Knot {
    pub at: f64,
    pub grading: u32,
}

impl Knot {
    pub fn new(at: f64, grading: u32) -> Self {
        Knot { at, grading }
    }

    pub fn with_power(at: f64, power: f64) -> Self {
        Knot {
            at,
            grading: grading_for_power(power),
        }
    }
}

/// Evaluation point handed to integrands of [`convolution`], [`half_line`]
/// and [`graded_piece`].
///
/// `offset = s − knot` is exact, so an integrand with an edge at `knot`
/// can evaluate its singular factor without cancellation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub s: f64,
    /// `t − s` for convolutions, computed without cancellation near `t`.
    pub rest: f64,
    pub knot: f64,
    pub offset: f64,
}

/// Integrates `f` over `[0, t]`, typically a convolution in `s` and `t − s`.
///
/// Both endpoints get the quadratic substitution (`s = h·u²`), which
/// absorbs the `ds/s` kernel when the numerator vanishes like `√s`, and
/// the `(t − s)^(−1/2)` behaviour of `p_{t−s}(0)`. Interior `breaks`
/// split the range and apply their own grading on both sides.
pub fn convolution<F>(t: f64, breaks: &[Knot], f: F, tol: &Tolerance) -> Result<Integral>
where
    F: Fn(Node) -> f64,
{
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be > 0, got {t}")));
    }
    let mut knots = vec![Knot::new(0.0, 2)];
    let mut inner: Vec<Knot> = breaks
        .iter()
        .copied()
        .filter(|k| k.at > 0.0 && k.at < t)
        .collect();
    inner.sort_by(|x, y| x.at.total_cmp(&y.at));
    inner.dedup_by(|x, y| x.at == y.at);
    knots.extend(inner);
    knots.push(Knot::new(t, 2));

    let g = |node: Node| {
        let rest = if node.knot == t { -node.offset } else { t - node.s };
        f(Node { rest, ..node })
    };
    let mut total = Integral::default();
    for pair in knots.windows(2) {
        total = total + graded_piece(&g, pair[0], pair[1], tol)?;
    }
    Ok(total)
}

/// Integrates `f` over `[0, ∞)`.
///
/// `[0, split]` is graded at `0` with `origin_grading` and at each break;
/// `[split, ∞)` uses `t = split/w²`, which keeps tails decaying like
/// `t^(−3/2)` or faster bounded.
pub fn half_line<F>(f: F, origin_grading: u32, breaks: &[Knot], tol: &Tolerance) -> Result<Integral>
where
    F: Fn(Node) -> f64,
{
    let last_break = breaks.iter().map(|k| k.at).fold(0.0_f64, f64::max);
    let split = (2.0 * last_break).max(1.0);
    let mut knots = vec![Knot::new(0.0, origin_grading)];
    let mut inner: Vec<Knot> = breaks.iter().copied().filter(|k| k.at > 0.0).collect();
    inner.sort_by(|x, y| x.at.total_cmp(&y.at));
    inner.dedup_by(|x, y| x.at == y.at);
    knots.extend(inner);
    knots.push(Knot::new(split, 1));

    let mut total = Integral::default();
    for pair in knots.windows(2) {
        total = total + graded_piece(&f, pair[0], pair[1], tol)?;
    }
    let tail = integrate(
        |w: f64| {
            if w == 0.0 {
                return 0.0;
            }
            let t = split / (w * w);
            let node = Node {
                s: t,
                rest: f64::NAN,
                knot: split,
                offset: t - split,
            };
            let v = f(node) * 2.0 * split / (w * w * w);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )?;
    Ok(total + tail)
}

/// Integrates `f` over `[left.at, right.at]` with graded substitutions at both ends.
pub fn graded_piece<F: Fn(Node) -> f64>(f: &F, left: Knot, right: Knot, tol: &Tolerance) -> Result<Integral> {
    let mid = 0.5 * (left.at + right.at);
    let h_left = mid - left.at;
    let h_right = right.at - mid;
    let m = left.grading as i32;
    let lhs = integrate(
        |w: f64| {
            let d = h_left * w.powi(m);
            if d <= 1e-250 * h_left {
                // next to a graded knot the Jacobian has already killed the integrand
                return 0.0;
            }
            let node = Node {
                s: left.at + d,
                rest: f64::NAN,
                knot: left.at,
                offset: d,
            };
            f(node) * h_left * m as f64 * w.powi(m - 1)
        },
        0.0,
        1.0,
        tol,
    )?;
    let m = right.grading as i32;
    let rhs = integrate(
        |w: f64| {
            let d = h_right * w.powi(m);
            if d <= 1e-250 * h_right {
                // next to a graded knot the Jacobian has already killed the integrand
                return 0.0;
            }
            let node = Node {
                s: right.at - d,
                rest: f64::NAN,
                knot: right.at,
                offset: -d,
            };
            f(node) * h_right * m as f64 * w.powi(m - 1)
        },
        0.0,
        1.0,
        tol,
    )?;
    Ok(lhs + rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, &Tolerance::default()).unwrap();
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn inverse_sqrt_endpoint_via_grading() {
        let tol = Tolerance::default();
        let k = [Knot::new(0.0, 2), Knot::new(1.0, 1)];
        let r = graded_piece(&|n: Node| 1.0 / n.s.sqrt(), k[0], k[1], &tol).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn strong_power_singularity_at_interior_break() {
        // ∫₀² 1{s>1} (s−1)^(−0.6) ds = 2.5
        let tol = Tolerance::default();
        let f = |n: Node| {
            let d = if n.knot == 1.0 { n.offset } else { n.s - 1.0 };
            if d > 0.0 {
                d.powf(-0.6)
            } else {
                0.0
            }
        };
        let r = convolution(2.0, &[Knot::with_power(1.0, 0.4)], f, &tol).unwrap();
        assert!((r.value - 2.5).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn convolution_of_beta_kernel() {
        // ∫₀ᵗ s^(−1/2) (t−s)^(−1/2) ds = π
        let r = convolution(
            3.0,
            &[],
            |n| 1.0 / (n.s.sqrt() * n.rest.sqrt()),
            &Tolerance::default(),
        )
        .unwrap();
        assert!((r.value - std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn half_line_algebraic_tail() {
        // ∫₀^∞ (1 − e^{−t}) t^{−3/2} dt = 2√π
        let r = half_line(
            |n| -(-n.s).exp_m1() * n.s.powf(-1.5),
            2,
            &[],
            &Tolerance::default(),
        )
        .unwrap();
        assert!((r.value - 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn reports_failure_when_budget_exhausted() {
        let tol = Tolerance {
            abs: 1e-14,
            rel: 0.0,
            max_intervals: 3,
        };
        let r = integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, &tol);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
