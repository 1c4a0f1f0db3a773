//! Laws of the first-passage time, the running supremum and the running
//! infimum of a spectrally positive process, evaluated by quadrature over
//! the marginal law of `X_t`.
//!
//! Inf-side formulas carry the factor `x` that comes from integrating the
//! joint law `P(inf_t < −x, X_t ∈ dz) = ∫₀ᵗ (x/s) p_s(−x) p_{t−s}(x+z) ds`
//! over `z`; the same factor shows up in their Laplace transforms and
//! moments.

use std::cell::RefCell;

use crate::density::{density, marginal, Marginal};
use crate::error::{Error, Result};
use crate::model::{inverse_laplace_exponent, largest_root, Jumps, SpectrallyPositiveModel};
use crate::quadrature::{convolution, graded_piece, half_line, integrate_panels, Integral, Knot, Node, Tolerance};
use crate::special::{gamma_pdf, ln_gamma_fn};

/// Something worth knowing about how a value was obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum Flag {
    /// A probability left `[0, 1]` by more than `1e-6` before clamping.
    Clamped { raw: f64 },
    /// The atom at zero only exists for bounded-variation models.
    UnboundedVariation,
}

/// A quadrature result with its error estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    pub flags: Vec<Flag>,
}

impl Estimate {
    fn new(value: f64, abs_error: f64) -> Self {
        Estimate {
            value,
            abs_error,
            flags: Vec::new(),
        }
    }

    fn probability(mut self) -> Self {
        let clamped = self.value.clamp(0.0, 1.0);
        if (clamped - self.value).abs() > 1e-6 {
            self.flags.push(Flag::Clamped { raw: self.value });
        }
        self.value = clamped;
        self
    }
}

/// Tolerance of the single-level integrals in this module.
pub fn tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-10,
        rel: 1e-10,
        max_intervals: 4000,
    }
}

fn fine_tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-13,
        rel: 1e-12,
        max_intervals: 8000,
    }
}

/// Collects the first error raised inside a quadrature integrand.
struct Trap(RefCell<Option<Error>>);

impl Trap {
    fn new() -> Self {
        Trap(RefCell::new(None))
    }

    fn eval(&self, f: impl FnOnce() -> Result<f64>) -> f64 {
        match f() {
            Ok(v) => v,
            Err(e) => {
                self.0.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    }

    fn finish(self, r: Result<Integral>) -> Result<Integral> {
        if let Some(e) = self.0.into_inner() {
            return Err(e);
        }
        r
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be > 0, got {v}")))
    }
}

fn require_density(model: &SpectrallyPositiveModel) -> Result<()> {
    if model.has_density() {
        Ok(())
    } else {
        Err(Error::NoDensity(format!("{} model has an atom", model.family().as_str())))
    }
}

/// Gamma-minus-drift parameters `(c, shape_rate, scale)`.
fn gamma_parts(model: &SpectrallyPositiveModel) -> Option<(f64, f64, f64)> {
    match (&model.jumps, model.bv_drift_c()) {
        (Jumps::GammaSubordinator { shape_rate, scale }, Some(c)) => Some((c, *shape_rate, *scale)),
        _ => None,
    }
}

/// Time `s*` at which the level `w < 0` enters the support of `X_s`, with
/// the graded knot that resolves the density's power behaviour there.
fn edge_knot(model: &SpectrallyPositiveModel, level: f64) -> Option<Knot> {
    let (c, a, _) = gamma_parts(model)?;
    (level < 0.0).then(|| {
        let at = -level / c;
        Knot::with_power(at, a * at)
    })
}

/// `p_s(level)` inside a quadrature, using the exact knot offset at a support edge.
fn pdf_at(model: &SpectrallyPositiveModel, s: f64, level: f64, node: &Node) -> Result<f64> {
    if let Some((c, a, theta)) = gamma_parts(model) {
        let y = if level < 0.0 && node.knot == -level / c {
            c * node.offset
        } else {
            level + c * s
        };
        return Ok(gamma_pdf(a * s, theta, y));
    }
    density(model, s, level)
}

/// Edge powers below this go through [`gamma_edge_convolution`].
const THIN_EDGE: f64 = 0.1;

/// Gamma-minus-drift parameters when `level` enters the support before `t` with a thin edge.
fn thin_edge(model: &SpectrallyPositiveModel, level: f64, t: f64) -> Option<(f64, f64, f64)> {
    let parts @ (c, a, _) = gamma_parts(model)?;
    let s_star = -level / c;
    (level < 0.0 && a * s_star < THIN_EDGE && s_star < t).then_some(parts)
}

/// `∫_{s*}^{t} p_s(level) g(s, t − s) ds` for gamma-minus-drift with a thin
/// edge power `β = a s*`. Most of the mass of `p_s(level)` then sits at
/// offsets `s − s*` far below the smallest double, so the first half is
/// integrated in `v` with `c (s − s*) = Y v^{1/β}`, which absorbs `y^{β−1}`
/// exactly and keeps `ln y` finite.
fn gamma_edge_convolution<G: Fn(f64, f64) -> Result<f64>>(
    (c, a, theta): (f64, f64, f64),
    t: f64,
    level: f64,
    g: G,
    tol: &Tolerance,
) -> Result<Integral> {
    let s_star = -level / c;
    let beta = a * s_star;
    let h = 0.5 * (t - s_star);
    let big_y = c * h;
    let ln_big_y = big_y.ln();
    // v-panels at decades of y/Y, so the region where s leaves s* is resolved
    let mut edges: Vec<f64> = (0..=40).rev().map(|k| (-(k as f64) * 10f64.ln() * beta).exp()).collect();
    edges.insert(0, 0.0);
    edges.dedup();
    let trap = Trap::new();
    let spike = integrate_panels(
        |v: f64| {
            if v == 0.0 {
                return 0.0;
            }
            trap.eval(|| {
                let ln_y = ln_big_y + v.ln() / beta;
                let y = ln_y.exp();
                let s = s_star + y / c;
                let shape = a * s;
                // p_s(level) / y^{β−1}, with shape − β = a y / c
                let ln_rest = (a * y / c) * ln_y - y / theta - ln_gamma_fn(shape) - shape * theta.ln();
                let jac = (beta * ln_big_y).exp() / (beta * c);
                Ok(ln_rest.exp() * jac * g(s, t - s)?)
            })
        },
        &edges,
        tol,
    );
    let spike = trap.finish(spike)?;
    let trap = Trap::new();
    let body = graded_piece(
        &|n: Node| {
            trap.eval(|| {
                let rest = if n.knot == t { -n.offset } else { t - n.s };
                let y = level + c * n.s;
                let p = gamma_pdf(a * n.s, theta, y);
                if p == 0.0 {
                    return Ok(0.0);
                }
                Ok(p * g(n.s, rest)?)
            })
        },
        Knot::new(s_star + h, 1),
        Knot::new(t, 2),
        tol,
    );
    let body = trap.finish(body)?;
    Ok(spike + body)
}

/// Density `(x/t) p_t(−x)` of the first-passage time `T_x` below `−x`.
pub fn fpt_density(model: &SpectrallyPositiveModel, x: f64, t: f64) -> Result<f64> {
    check_positive("x", x)?;
    check_positive("t", t)?;
    Ok(x / t * density(model, t, -x)?)
}

/// `P(inf_t < −x) = ∫₀ᵗ (x/s) p_s(−x) ds`.
pub fn inf_tail(model: &SpectrallyPositiveModel, x: f64, t: f64) -> Result<Estimate> {
    check_positive("x", x)?;
    check_positive("t", t)?;
    require_density(model)?;
    if let Some(parts) = thin_edge(model, -x, t) {
        let r = gamma_edge_convolution(parts, t, -x, |s, _| Ok(x / s), &tolerance())?;
        return Ok(Estimate::new(r.value, r.abs_error).probability());
    }
    let trap = Trap::new();
    let knots: Vec<Knot> = edge_knot(model, -x).into_iter().collect();
    let r = convolution(
        t,
        &knots,
        |n| trap.eval(|| Ok(x / n.s * pdf_at(model, n.s, -x, &n)?)),
        &tolerance(),
    );
    let r = trap.finish(r)?;
    Ok(Estimate::new(r.value, r.abs_error).probability())
}

/// `P(inf_t < −x) = ∫₀ᵗ P(X_{t−s} > 0) x p_s(−x) ds/s + P(X_t < −x)`.
pub fn inf_tail_alt(model: &SpectrallyPositiveModel, x: f64, t: f64) -> Result<Estimate> {
    check_positive("x", x)?;
    check_positive("t", t)?;
    require_density(model)?;
    let end = marginal(model, t)?.cdf(-x)?;
    if let Some(parts) = thin_edge(model, -x, t) {
        let g = |s: f64, rest: f64| Ok(marginal(model, rest)?.sf(0.0)? * x / s);
        let r = gamma_edge_convolution(parts, t, -x, g, &tolerance())?;
        return Ok(Estimate::new(r.value + end, r.abs_error).probability());
    }
    let trap = Trap::new();
    let knots: Vec<Knot> = edge_knot(model, -x).into_iter().collect();
    let r = convolution(
        t,
        &knots,
        |n| {
            trap.eval(|| {
                let p = pdf_at(model, n.s, -x, &n)?;
                if p == 0.0 {
                    return Ok(0.0);
                }
                Ok(marginal(model, n.rest)?.sf(0.0)? * x * p / n.s)
            })
        },
        &tolerance(),
    );
    let r = trap.finish(r)?;
    Ok(Estimate::new(r.value + end, r.abs_error).probability())
}

/// `P(sup_t > x) = ∫₀ᵗ E(X_s⁻) p_{t−s}(x) ds/s + P(X_t > x)`.
pub fn sup_tail(model: &SpectrallyPositiveModel, x: f64, t: f64) -> Result<Estimate> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("x must be >= 0, got {x}")));
    }
    check_positive("t", t)?;
    require_density(model)?;
    let trap = Trap::new();
    let r = convolution(
        t,
        &[],
        |n| {
            trap.eval(|| {
                let p = density(model, n.rest, x)?;
                if p == 0.0 {
                    return Ok(0.0);
                }
                Ok(marginal(model, n.s)?.neg_part_mean()? * p / n.s)
            })
        },
        &tolerance(),
    );
    let r = trap.finish(r)?;
    let end = marginal(model, t)?.sf(x)?;
    Ok(Estimate::new(r.value + end, r.abs_error).probability())
}

/// Density in `z` of `{sup_t > x, X_t ∈ dz}`:
/// `∫₀ᵗ ((x−z)/s) p_s(z−x) p_{t−s}(x) ds` for `x > z`, `x ≥ 0`.
pub fn sup_joint_density(model: &SpectrallyPositiveModel, t: f64, x: f64, z: f64) -> Result<Estimate> {
    check_positive("t", t)?;
    if !(x >= 0.0 && x > z) {
        return Err(Error::InvalidArgument(format!("need x >= 0 and x > z, got x={x}, z={z}")));
    }
    require_density(model)?;
    let level = z - x;
    if let Some(parts) = thin_edge(model, level, t) {
        let g = |s: f64, rest: f64| Ok((x - z) / s * density(model, rest, x)?);
        let r = gamma_edge_convolution(parts, t, level, g, &tolerance())?;
        return Ok(Estimate::new(r.value, r.abs_error));
    }
    let trap = Trap::new();
    let knots: Vec<Knot> = edge_knot(model, level).into_iter().collect();
    let r = convolution(
        t,
        &knots,
        |n| {
            trap.eval(|| {
                let p = pdf_at(model, n.s, level, &n)?;
                if p == 0.0 {
                    return Ok(0.0);
                }
                Ok((x - z) / n.s * p * density(model, n.rest, x)?)
            })
        },
        &tolerance(),
    );
    let r = trap.finish(r)?;
    Ok(Estimate::new(r.value, r.abs_error))
}

/// Density in `z` of `{inf_t < −x, X_t ∈ dz}`:
/// `∫₀ᵗ (x/s) p_s(−x) p_{t−s}(x+z) ds` for `x > 0`, `z ≥ −x`.
pub fn inf_joint_density(model: &SpectrallyPositiveModel, t: f64, x: f64, z: f64) -> Result<Estimate> {
    check_positive("t", t)?;
    check_positive("x", x)?;
    if !(z >= -x) {
        return Err(Error::InvalidArgument(format!("need z >= -x, got x={x}, z={z}")));
    }
    require_density(model)?;
    if let Some(parts) = thin_edge(model, -x, t) {
        let g = |s: f64, rest: f64| Ok(x / s * density(model, rest, x + z)?);
        let r = gamma_edge_convolution(parts, t, -x, g, &tolerance())?;
        return Ok(Estimate::new(r.value, r.abs_error));
    }
    let trap = Trap::new();
    let knots: Vec<Knot> = edge_knot(model, -x).into_iter().collect();
    let r = convolution(
        t,
        &knots,
        |n| {
            trap.eval(|| {
                let p = pdf_at(model, n.s, -x, &n)?;
                if p == 0.0 {
                    return Ok(0.0);
                }
                Ok(x / n.s * p * density(model, n.rest, x + z)?)
            })
        },
        &tolerance(),
    );
    let r = trap.finish(r)?;
    Ok(Estimate::new(r.value, r.abs_error))
}

fn bv_constant(model: &SpectrallyPositiveModel) -> Option<f64> {
    model.bv_drift_c()
}

/// Density in `z < 0` of `{sup_t = 0, X_t ∈ dz}`: `(−z/(ct)) p_t(z)`.
pub fn sup_atom_density(model: &SpectrallyPositiveModel, t: f64, z: f64) -> Result<Estimate> {
    check_positive("t", t)?;
    if !(z < 0.0) {
        return Err(Error::InvalidArgument(format!("z must be < 0, got {z}")));
    }
    let Some(c) = bv_constant(model) else {
        return Ok(Estimate {
            value: 0.0,
            abs_error: 0.0,
            flags: vec![Flag::UnboundedVariation],
        });
    };
    Ok(Estimate::new(-z / (c * t) * density(model, t, z)?, 0.0))
}

/// `P(sup_t = 0) = −E(X_t 1{X_t ≤ 0})/(ct)`; zero (flagged) without bounded variation.
pub fn sup_atom_total(model: &SpectrallyPositiveModel, t: f64) -> Result<Estimate> {
    check_positive("t", t)?;
    let Some(c) = bv_constant(model) else {
        return Ok(Estimate {
            value: 0.0,
            abs_error: 0.0,
            flags: vec![Flag::UnboundedVariation],
        });
    };
    let truncated = marginal(model, t)?.moment_in(1, f64::NEG_INFINITY, 0.0)?;
    Ok(Estimate::new(-truncated / (c * t), 0.0).probability())
}

fn check_lambda(lam: f64) -> Result<()> {
    if lam >= 0.0 && lam.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lam}")))
    }
}

/// `E[e^{−λ sup_t}]`.
pub fn sup_laplace(model: &SpectrallyPositiveModel, lam: f64, t: f64) -> Result<Estimate> {
    check_lambda(lam)?;
    check_positive("t", t)?;
    require_density(model)?;
    let end_law = marginal(model, t)?;
    let end = end_law.exp_moment_in(0, -lam, 0.0, f64::INFINITY)? + end_law.cdf(0.0)?;
    if lam == 0.0 {
        return Ok(Estimate::new(end, 0.0).probability());
    }
    let trap = Trap::new();
    let r = convolution(
        t,
        &[],
        |n| {
            trap.eval(|| {
                let upper = marginal(model, n.rest)?.exp_moment_in(0, -lam, 0.0, f64::INFINITY)?;
                Ok(marginal(model, n.s)?.neg_part_mean()? * upper / n.s)
            })
        },
        &tolerance(),
    );
    let r = trap.finish(r)?;
    Ok(Estimate::new(end - lam * r.value, lam * r.abs_error).probability())
}

/// `E[e^{λ inf_t}] = P(X_t ≥ 0) + E(e^{λX_t} 1{X_t < 0}) − λ ∫₀ᵗ P(X_{t−s} > 0) E(X_s⁻ e^{λX_s}) ds/s`.
pub fn inf_laplace(model: &SpectrallyPositiveModel, lam: f64, t: f64) -> Result<Estimate> {
    check_lambda(lam)?;
    check_positive("t", t)?;
    require_density(model)?;
    let end_law = marginal(model, t)?;
    let end = end_law.exp_moment_in(0, lam, f64::NEG_INFINITY, 0.0)? + end_law.sf(0.0)?;
    if lam == 0.0 {
        return Ok(Estimate::new(end, 0.0).probability());
    }
    let trap = Trap::new();
    let r = convolution(
        t,
        &[],
        |n| {
            trap.eval(|| {
                let tilted = -marginal(model, n.s)?.exp_moment_in(1, lam, f64::NEG_INFINITY, 0.0)?;
                Ok(marginal(model, n.rest)?.sf(0.0)? * tilted / n.s)
            })
        },
        &tolerance(),
    );
    let r = trap.finish(r)?;
    Ok(Estimate::new(end - lam * r.value, lam * r.abs_error).probability())
}

fn check_order(n: u32) -> Result<()> {
    if n >= 1 {
        Ok(())
    } else {
        Err(Error::InvalidArgument("moment order must be >= 1".into()))
    }
}

/// `E[sup_t^n] = n ∫₀ᵗ E(X_s⁻) E(X_{t−s}^{n−1} 1{X_{t−s} ≥ 0}) ds/s + E((X_t⁺)^n)`.
pub fn sup_moment(model: &SpectrallyPositiveModel, n: u32, t: f64) -> Result<Estimate> {
    check_order(n)?;
    check_positive("t", t)?;
    require_density(model)?;
    let end = marginal(model, t)?.moment_in(n, 0.0, f64::INFINITY)?;
    let trap = Trap::new();
    let r = convolution(
        t,
        &[],
        |node| {
            trap.eval(|| {
                let upper = marginal(model, node.rest)?.moment_in(n - 1, 0.0, f64::INFINITY)?;
                Ok(marginal(model, node.s)?.neg_part_mean()? * upper / node.s)
            })
        },
        &tolerance(),
    );
    let r = trap.finish(r)?;
    let k = n as f64;
    Ok(Estimate::new(k * r.value + end, k * r.abs_error))
}

/// `E[(−inf_t)^n] = n ∫₀ᵗ P(X_{t−s} > 0) E((X_s⁻)^n) ds/s + E((X_t⁻)^n)`.
pub fn inf_moment(model: &SpectrallyPositiveModel, n: u32, t: f64) -> Result<Estimate> {
    check_order(n)?;
    check_positive("t", t)?;
    require_density(model)?;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let end = sign * marginal(model, t)?.moment_in(n, f64::NEG_INFINITY, 0.0)?;
    let trap = Trap::new();
    let r = convolution(
        t,
        &[],
        |node| {
            trap.eval(|| {
                let lower = sign * marginal(model, node.s)?.moment_in(n, f64::NEG_INFINITY, 0.0)?;
                Ok(marginal(model, node.rest)?.sf(0.0)? * lower / node.s)
            })
        },
        &tolerance(),
    );
    let r = trap.finish(r)?;
    let k = n as f64;
    Ok(Estimate::new(k * r.value + end, k * r.abs_error))
}

/// `Φ(λ) = ∫₀^∞ (1 − e^{−λt}) t⁻¹ p_t(0) dt`.
pub fn big_phi(model: &SpectrallyPositiveModel, lam: f64) -> Result<Estimate> {
    check_lambda(lam)?;
    require_density(model)?;
    if lam == 0.0 {
        return Ok(Estimate::new(0.0, 0.0));
    }
    let trap = Trap::new();
    let r = half_line(
        |n| trap.eval(|| Ok(-(-lam * n.s).exp_m1() / n.s * density(model, n.s, 0.0)?)),
        2,
        &[],
        &fine_tolerance(),
    );
    let r = trap.finish(r)?;
    Ok(Estimate::new(r.value, r.abs_error))
}

/// `Φ(λ)` from the exponent: `φ⁻¹(λ) − ρ`, minus `λ/c` for bounded variation.
pub fn big_phi_from_exponent(model: &SpectrallyPositiveModel, lam: f64) -> Result<f64> {
    check_lambda(lam)?;
    let base = inverse_laplace_exponent(model, lam)? - largest_root(model)?;
    Ok(match model.bv_drift_c() {
        Some(c) => base - lam / c,
        None => base,
    })
}

/// `φ(λ, z) = ∫₀^∞ e^{−λt} t⁻¹ p_t(z) dt` for `z < 0`.
pub fn phi_lambda_z(model: &SpectrallyPositiveModel, lam: f64, z: f64) -> Result<Estimate> {
    check_lambda(lam)?;
    if !(z < 0.0) {
        return Err(Error::InvalidArgument(format!("z must be < 0, got {z}")));
    }
    require_density(model)?;
    let trap = Trap::new();
    let knots: Vec<Knot> = edge_knot(model, z).into_iter().collect();
    let r = half_line(
        |n| trap.eval(|| Ok((-lam * n.s).exp() / n.s * pdf_at(model, n.s, z, &n)?)),
        2,
        &knots,
        &fine_tolerance(),
    );
    let r = trap.finish(r)?;
    Ok(Estimate::new(r.value, r.abs_error))
}

/// `∫₀^∞ e^{−λt} p_t(0) dt`, the λ-derivative of `Φ`.
pub fn laplace_of_p0(model: &SpectrallyPositiveModel, lam: f64) -> Result<Estimate> {
    check_positive("lambda", lam)?;
    require_density(model)?;
    let trap = Trap::new();
    let r = half_line(
        |n| trap.eval(|| Ok((-lam * n.s).exp() * density(model, n.s, 0.0)?)),
        2,
        &[],
        &fine_tolerance(),
    );
    let r = trap.finish(r)?;
    Ok(Estimate::new(r.value, r.abs_error))
}

/// Residual `φ(λ, z) − φ(0, z) e^{zΦ(λ)}` of the multiplicative identity.
pub fn phi_identity_residual(model: &SpectrallyPositiveModel, lam: f64, z: f64) -> Result<Estimate> {
    let at = phi_lambda_z(model, lam, z)?;
    let origin = phi_lambda_z(model, 0.0, z)?;
    let big = big_phi(model, lam)?;
    let factor = (z * big.value).exp();
    let value = at.value - origin.value * factor;
    let err = at.abs_error + origin.abs_error * factor + (origin.value * factor * z).abs() * big.abs_error;
    Ok(Estimate::new(value, err))
}

/// The λ-derivative of `φ(λ, z)` against the ODE right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeCheck {
    /// Central difference of `φ(·, z)` at `λ`.
    pub derivative: f64,
    /// `z φ(λ, z) ∫₀^∞ e^{−λt} p_t(0) dt`.
    pub rhs: f64,
    /// `derivative − rhs`.
    pub residual: f64,
    /// The residual after adding `z φ / c`, the contribution of the atom
    /// `P(sup_t = 0, X_t ∈ dz)` that bounded-variation models carry.
    pub residual_with_atom: f64,
    pub step: f64,
}

pub fn phi_ode_check(model: &SpectrallyPositiveModel, lam: f64, z: f64) -> Result<OdeCheck> {
    check_positive("lambda", lam)?;
    let step = 1e-3 * lam.max(1.0);
    let step = step.min(0.5 * lam);
    let up = phi_lambda_z(model, lam + step, z)?.value;
    let down = phi_lambda_z(model, lam - step, z)?.value;
    let derivative = (up - down) / (2.0 * step);
    let phi = phi_lambda_z(model, lam, z)?.value;
    let rhs = z * phi * laplace_of_p0(model, lam)?.value;
    let residual = derivative - rhs;
    let atom = model.bv_drift_c().map_or(0.0, |c| z * phi / c);
    Ok(OdeCheck {
        derivative,
        rhs,
        residual,
        residual_with_atom: residual - atom,
        step,
    })
}

/// A candidate entrance law `(t, x) ↦ q_t(x)`.
pub trait EntranceLaw: Sync {
    fn eval(&self, t: f64, x: f64) -> Result<f64>;
}

impl<F: Fn(f64, f64) -> Result<f64> + Sync> EntranceLaw for F {
    fn eval(&self, t: f64, x: f64) -> Result<f64> {
        self(t, x)
    }
}

/// Both sides of the entrance-law equation at `(t, x, z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EntranceResidual {
    /// `∫₀ᵗ ((x−z)/(t−s)) p_{t−s}(z−x) q*_s(x) ds`
    pub lhs: Estimate,
    /// `−d/dx ∫₀ᵗ ((x−z)/(t−s)) p_{t−s}(z−x) p_s(x) ds`
    pub rhs: Estimate,
    pub residual: f64,
    /// Error bound combining quadrature and finite-difference errors.
    pub abs_error: f64,
    pub step: f64,
}

fn entrance_lhs(model: &SpectrallyPositiveModel, qstar: &dyn EntranceLaw, t: f64, x: f64, z: f64) -> Result<Estimate> {
    let trap = Trap::new();
    let level = z - x;
    let knots: Vec<Knot> = edge_knot(model, level).map(|k| Knot::new(t - k.at, k.grading)).into_iter().collect();
    let r = convolution(
        t,
        &knots,
        |n| {
            trap.eval(|| {
                let p = density(model, n.rest, level)?;
                if p == 0.0 {
                    return Ok(0.0);
                }
                Ok((x - z) / n.rest * p * qstar.eval(n.s, x)?)
            })
        },
        &fine_tolerance(),
    );
    let r = trap.finish(r)?;
    Ok(Estimate::new(r.value, r.abs_error))
}

fn entrance_kernel(model: &SpectrallyPositiveModel, t: f64, x: f64, z: f64) -> Result<Integral> {
    let trap = Trap::new();
    let level = z - x;
    let knots: Vec<Knot> = edge_knot(model, level).map(|k| Knot::new(t - k.at, k.grading)).into_iter().collect();
    let r = convolution(
        t,
        &knots,
        |n| {
            trap.eval(|| {
                let p = density(model, n.rest, level)?;
                if p == 0.0 {
                    return Ok(0.0);
                }
                Ok((x - z) / n.rest * p * density(model, n.s, x)?)
            })
        },
        &fine_tolerance(),
    );
    trap.finish(r)
}

/// `LHS − RHS` of the equation an entrance law `q*` must satisfy.
pub fn entrance_law_residual(
    model: &SpectrallyPositiveModel,
    qstar: &dyn EntranceLaw,
    t: f64,
    x: f64,
    z: f64,
) -> Result<EntranceResidual> {
    check_positive("t", t)?;
    check_positive("x", x)?;
    if !(z < x) {
        return Err(Error::InvalidArgument(format!("need z < x, got x={x}, z={z}")));
    }
    require_density(model)?;
    let lhs = entrance_lhs(model, qstar, t, x, z)?;
    let step = (1e-4 * x).max(1e-4);
    let up = entrance_kernel(model, t, x + step, z)?;
    let down = entrance_kernel(model, t, x - step, z)?;
    let rhs_value = -(up.value - down.value) / (2.0 * step);
    let rhs_error = (up.abs_error + down.abs_error) / (2.0 * step);
    let residual = lhs.value - rhs_value;
    Ok(EntranceResidual {
        abs_error: lhs.abs_error + rhs_error + step * step,
        lhs,
        rhs: Estimate::new(rhs_value, rhs_error),
        residual,
        step,
    })
}

/// `∫₀ᵗ q*_s(x) q_{t−s}(x−z) ds`, the joint density of `(sup_t, X_t)` at `(x, z)`
/// implied by a pair of entrance laws.
pub fn joint_law_from_entrance(
    q: &dyn EntranceLaw,
    qstar: &dyn EntranceLaw,
    t: f64,
    x: f64,
    z: f64,
) -> Result<Estimate> {
    check_positive("t", t)?;
    check_positive("x", x)?;
    if !(z < x) {
        return Err(Error::InvalidArgument(format!("need z < x, got x={x}, z={z}")));
    }
    let trap = Trap::new();
    let r = convolution(
        t,
        &[],
        |n| trap.eval(|| Ok(qstar.eval(n.s, x)? * q.eval(n.rest, x - z)?)),
        &tolerance(),
    );
    let r = trap.finish(r)?;
    Ok(Estimate::new(r.value, r.abs_error))
}

/// `−∂/∂x` of the `{sup_t > x, X_t ∈ dz}` density, by central difference.
pub fn sup_joint_density_dx(model: &SpectrallyPositiveModel, t: f64, x: f64, z: f64) -> Result<Estimate> {
    let step = (1e-4 * x).max(1e-4);
    let up = sup_joint_density(model, t, x + step, z)?;
    let down = sup_joint_density(model, t, x - step, z)?;
    Ok(Estimate::new(
        -(up.value - down.value) / (2.0 * step),
        (up.abs_error + down.abs_error) / (2.0 * step) + step * step,
    ))
}

/// `∫_{−∞}^{x} sup_joint_density(t, x, z) dz + P(X_t > x)`, which should
/// reproduce [`sup_tail`].
pub fn sup_tail_by_marginalization(model: &SpectrallyPositiveModel, x: f64, t: f64) -> Result<Estimate> {
    let law = marginal(model, t)?;
    let spread = match &law {
        Marginal::Gaussian { sd, .. } => *sd,
        _ => model.variance().sqrt() * t.sqrt(),
    };
    let lower = match gamma_parts(model) {
        Some((c, _, _)) => x - c * t,
        None => law.mean().min(x) - 14.0 * spread - 1.0,
    };
    let trap = Trap::new();
    let span = x - lower;
    // z = x − span·u: the joint density vanishes linearly as z → x.
    let r = convolution(
        1.0,
        &[],
        |n| trap.eval(|| Ok(span * sup_joint_density(model, t, x, x - span * n.s)?.value)),
        &tolerance(),
    );
    let r = trap.finish(r)?;
    Ok(Estimate::new(r.value + law.sf(x)?, r.abs_error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_cdf;

    fn bm() -> SpectrallyPositiveModel {
        SpectrallyPositiveModel::brownian(0.0, 1.0).unwrap()
    }

    fn gamma_model() -> SpectrallyPositiveModel {
        SpectrallyPositiveModel::gamma_minus_drift(1.0, 1.0, 1.0).unwrap()
    }

    const TAIL: f64 = 0.317_310_507_862_914_1;

    #[test]
    fn brownian_reflection_values() {
        assert!((fpt_density(&bm(), 1.0, 1.0).unwrap() - 0.241_970_724_519_143_37).abs() < 1e-15);
        assert!((inf_tail(&bm(), 1.0, 1.0).unwrap().value - TAIL).abs() < 1e-9);
        assert!((inf_tail_alt(&bm(), 1.0, 1.0).unwrap().value - TAIL).abs() < 1e-9);
        assert!((sup_tail(&bm(), 1.0, 1.0).unwrap().value - TAIL).abs() < 1e-9);
        assert!(sup_tail(&bm(), 0.0, 1.0).unwrap().value > 1.0 - 1e-9);
        assert!(inf_tail_alt(&bm(), 12.0, 1.0).unwrap().value < 1e-6);
    }

    #[test]
    fn brownian_with_drift_inf_tail() {
        // P(inf_t < −x) for drift μ: Φ((−x−μt)/√t) + e^{−2μx} Φ((−x+μt)/√t)
        let mu: f64 = 0.4;
        let m = SpectrallyPositiveModel::brownian(mu, 1.0).unwrap();
        let (x, t) = (0.7_f64, 2.0_f64);
        let exact = normal_cdf((-x - mu * t) / t.sqrt()) + (-2.0 * mu * x).exp() * normal_cdf((-x + mu * t) / t.sqrt());
        assert!((inf_tail(&m, x, t).unwrap().value - exact).abs() < 1e-9);
        assert!((inf_tail_alt(&m, x, t).unwrap().value - exact).abs() < 1e-9);
    }

    #[test]
    fn gamma_inf_formulas_agree() {
        let g = gamma_model();
        for (x, t) in [(0.3, 0.5), (0.5, 2.0), (1.0, 1.0), (2.0, 4.0)] {
            let a = inf_tail(&g, x, t).unwrap().value;
            let b = inf_tail_alt(&g, x, t).unwrap().value;
            assert!((a - b).abs() < 1e-8, "{x} {t}: {a} vs {b}");
        }
    }

    #[test]
    fn gamma_sup_at_zero_complements_atom() {
        let g = gamma_model();
        for t in [0.5, 1.0, 3.0] {
            let tail = sup_tail(&g, 0.0, t).unwrap().value;
            let atom = sup_atom_total(&g, t).unwrap().value;
            assert!((tail + atom - 1.0).abs() < 1e-8, "t={t}: {tail} + {atom}");
        }
    }

    #[test]
    fn atoms() {
        let drift = SpectrallyPositiveModel::pure_drift(2.0).unwrap();
        assert_eq!(sup_atom_total(&drift, 1.5).unwrap().value, 1.0);
        let b = sup_atom_total(&bm(), 1.0).unwrap();
        assert_eq!(b.value, 0.0);
        assert_eq!(b.flags, vec![Flag::UnboundedVariation]);
    }

    #[test]
    fn joint_densities_are_dual() {
        for m in [bm(), gamma_model()] {
            for (t, x, z) in [(1.0, 1.0, 0.0), (0.7, 0.4, -0.8), (2.0, 0.0, -1.5)] {
                let s = sup_joint_density(&m, t, x, z).unwrap().value;
                let i = inf_joint_density(&m, t, x - z, z).unwrap().value;
                assert!((s - i).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn brownian_laplace_and_moments() {
        let s1 = sup_moment(&bm(), 1, 1.0).unwrap().value;
        assert!((s1 - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-8);
        assert!((sup_moment(&bm(), 2, 1.0).unwrap().value - 1.0).abs() < 1e-8);
        let i1 = inf_moment(&bm(), 1, 1.0).unwrap().value;
        assert!((i1 - s1).abs() < 1e-8);
        // E e^{−S} for S ~ |N(0,1)|: 2 e^{1/2} Φ(−1)
        let exact = 2.0 * 0.5_f64.exp() * normal_cdf(-1.0);
        assert!((sup_laplace(&bm(), 1.0, 1.0).unwrap().value - exact).abs() < 1e-9);
        assert!((inf_laplace(&bm(), 1.0, 1.0).unwrap().value - exact).abs() < 1e-9);
        assert_eq!(sup_laplace(&bm(), 0.0, 1.0).unwrap().value, 1.0);
    }

    #[test]
    fn big_phi_matches_exponent() {
        assert!((big_phi(&bm(), 2.0).unwrap().value - 2.0).abs() < 1e-8);
        let v = phi_lambda_z(&bm(), 2.0, -1.0).unwrap().value;
        assert!((v - (-2.0_f64).exp()).abs() < 1e-8);
        assert!((phi_lambda_z(&bm(), 0.0, -1.0).unwrap().value - 1.0).abs() < 1e-8);
        let g = gamma_model();
        for lam in [0.5, 1.0, 3.0] {
            let quad = big_phi(&g, lam).unwrap().value;
            let exact = big_phi_from_exponent(&g, lam).unwrap();
            assert!((quad - exact).abs() < 1e-8, "{lam}: {quad} vs {exact}");
        }
    }
}
