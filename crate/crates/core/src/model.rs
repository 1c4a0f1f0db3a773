//! Parametric spectrally positive Lévy models and multidimensional subordinators.
//!
//! The Laplace exponent convention throughout the crate is
//! `φ(λ) = log E[exp(−λ X₁)]`, convex on `[0, ∞)` with `φ(0) = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{marginal, Marginal};
use crate::error::{Error, Result};

/// Law of a single compound-Poisson jump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SizeDist {
    Exponential { mean: f64 },
    Gamma { shape: f64, scale: f64 },
    Deterministic { size: f64 },
}

impl SizeDist {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SizeDist::Exponential { mean } => mean > 0.0 && mean.is_finite(),
            SizeDist::Gamma { shape, scale } => {
                shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()
            }
            SizeDist::Deterministic { size } => size > 0.0 && size.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!(
                "jump sizes must be strictly positive with finite parameters: {self:?}"
            )))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            SizeDist::Exponential { mean } => mean,
            SizeDist::Gamma { shape, scale } => shape * scale,
            SizeDist::Deterministic { size } => size,
        }
    }

    /// `E[exp(−λ J)]`, continued analytically to `Re λ ≥ 0`.
    pub fn laplace(&self, lam: Complex64) -> Complex64 {
        match *self {
            SizeDist::Exponential { mean } => 1.0 / (1.0 + mean * lam),
            SizeDist::Gamma { shape, scale } => (-shape * (1.0 + scale * lam).ln()).exp(),
            SizeDist::Deterministic { size } => (-lam * size).exp(),
        }
    }
}

/// Jump part of a spectrally positive model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Jumps {
    #[default]
    None,
    CompoundPoisson { rate: f64, size: SizeDist },
    /// Gamma subordinator with Lévy density `shape_rate · x⁻¹ e^{−x/scale}`.
    GammaSubordinator { shape_rate: f64, scale: f64 },
    /// Spectrally positive α-stable part with `log E e^{−λS₁} = scale · λ^α`.
    StablePositive { alpha: f64, scale: f64 },
}

/// The four families of the model zoo, plus the degenerate pure drift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Brownian,
    CompoundPoisson,
    Gamma,
    Stable,
    PureDrift,
    Mixed,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Brownian => "brownian",
            Family::CompoundPoisson => "compound_poisson",
            Family::Gamma => "gamma",
            Family::Stable => "stable",
            Family::PureDrift => "pure_drift",
            Family::Mixed => "mixed",
        }
    }
}

/// A spectrally positive Lévy process `X_t = drift·t + σ B_t + (jumps)`.
///
/// For bounded-variation models `drift` is the actual slope `−c` between
/// jumps. For the stable family the jumps are compensated, so `drift` is
/// the mean `E[X₁]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrallyPositiveModel {
    pub drift: f64,
    #[serde(default)]
    pub gaussian_coef: f64,
    #[serde(default)]
    pub jumps: Jumps,
}

/// On-disk JSON form; `family` is optional and checked when present.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct ModelDocument {
    #[serde(default)]
    family: Option<String>,
    drift: f64,
    #[serde(default)]
    gaussian_coef: f64,
    #[serde(default)]
    jumps: Jumps,
}

impl SpectrallyPositiveModel {
    pub fn brownian(drift: f64, gaussian_coef: f64) -> Result<Self> {
        SpectrallyPositiveModel {
            drift,
            gaussian_coef,
            jumps: Jumps::None,
        }
        .validated()
    }

    pub fn pure_drift(c: f64) -> Result<Self> {
        SpectrallyPositiveModel {
            drift: -c,
            gaussian_coef: 0.0,
            jumps: Jumps::None,
        }
        .validated()
    }

    pub fn gamma_minus_drift(c: f64, shape_rate: f64, scale: f64) -> Result<Self> {
        SpectrallyPositiveModel {
            drift: -c,
            gaussian_coef: 0.0,
            jumps: Jumps::GammaSubordinator { shape_rate, scale },
        }
        .validated()
    }

    pub fn compound_poisson_minus_drift(c: f64, rate: f64, size: SizeDist) -> Result<Self> {
        SpectrallyPositiveModel {
            drift: -c,
            gaussian_coef: 0.0,
            jumps: Jumps::CompoundPoisson { rate, size },
        }
        .validated()
    }

    pub fn stable(alpha: f64, scale: f64, mean: f64) -> Result<Self> {
        SpectrallyPositiveModel {
            drift: mean,
            gaussian_coef: 0.0,
            jumps: Jumps::StablePositive { alpha, scale },
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Checks parameter ranges and that the model is not a subordinator.
    pub fn validate(&self) -> Result<()> {
        if !self.drift.is_finite() {
            return Err(Error::InvalidModel("drift must be finite".into()));
        }
        if !(self.gaussian_coef >= 0.0 && self.gaussian_coef.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "gaussian_coef must be finite and >= 0, got {}",
                self.gaussian_coef
            )));
        }
        match &self.jumps {
            Jumps::None => {}
            Jumps::CompoundPoisson { rate, size } => {
                if !(*rate >= 0.0 && rate.is_finite()) {
                    return Err(Error::InvalidModel(format!("jump rate must be >= 0, got {rate}")));
                }
                size.validate()?;
            }
            Jumps::GammaSubordinator { shape_rate, scale } => {
                if !(*shape_rate > 0.0 && *scale > 0.0 && shape_rate.is_finite() && scale.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "gamma jumps need shape_rate > 0 and scale > 0, got {shape_rate}, {scale}"
                    )));
                }
            }
            Jumps::StablePositive { alpha, scale } => {
                if !(*alpha > 1.0 && *alpha < 2.0) {
                    return Err(Error::InvalidModel(format!(
                        "stable index must lie in (1, 2), got {alpha}"
                    )));
                }
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::InvalidModel(format!("stable scale must be > 0, got {scale}")));
                }
            }
        }
        if self.is_subordinator() {
            return Err(Error::InvalidModel(
                "model is a subordinator (no Gaussian part, drift >= 0 and finite-variation jumps)".into(),
            ));
        }
        Ok(())
    }

    fn is_subordinator(&self) -> bool {
        self.gaussian_coef == 0.0
            && self.drift >= 0.0
            && !matches!(self.jumps, Jumps::StablePositive { .. })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| Error::InvalidModel(format!("bad model JSON: {e}")))?;
        let model = SpectrallyPositiveModel {
            drift: doc.drift,
            gaussian_coef: doc.gaussian_coef,
            jumps: doc.jumps,
        };
        model.validate()?;
        if let Some(family) = doc.family {
            let derived = model.family();
            if family != derived.as_str() {
                return Err(Error::InvalidModel(format!(
                    "family \"{family}\" does not match parameters (looks like \"{}\")",
                    derived.as_str()
                )));
            }
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            family: Some(self.family().as_str().to_string()),
            drift: self.drift,
            gaussian_coef: self.gaussian_coef,
            jumps: self.jumps.clone(),
        };
        serde_json::to_string(&doc).expect("model serializes")
    }

    pub fn family(&self) -> Family {
        match (&self.jumps, self.gaussian_coef > 0.0) {
            (Jumps::None, true) => Family::Brownian,
            (Jumps::None, false) => Family::PureDrift,
            (Jumps::CompoundPoisson { .. }, false) => Family::CompoundPoisson,
            (Jumps::GammaSubordinator { .. }, false) => Family::Gamma,
            (Jumps::StablePositive { .. }, false) => Family::Stable,
            _ => Family::Mixed,
        }
    }

    /// Paths have bounded variation: no Gaussian part and summable jumps.
    pub fn is_bounded_variation(&self) -> bool {
        self.gaussian_coef == 0.0 && !matches!(self.jumps, Jumps::StablePositive { .. })
    }

    /// False when the law of `X_t` charges single points.
    pub fn has_density(&self) -> bool {
        if self.gaussian_coef > 0.0 {
            return true;
        }
        match self.jumps {
            Jumps::None => false,
            Jumps::CompoundPoisson { .. } => false,
            Jumps::GammaSubordinator { .. } | Jumps::StablePositive { .. } => true,
        }
    }

    /// The constant `c > 0` of a bounded-variation model `X = Y − c t`.
    pub fn bv_drift_c(&self) -> Option<f64> {
        (self.is_bounded_variation() && self.drift < 0.0).then_some(-self.drift)
    }

    /// `E[X₁]`.
    pub fn mean(&self) -> f64 {
        self.drift
            + match &self.jumps {
                Jumps::None | Jumps::StablePositive { .. } => 0.0,
                Jumps::CompoundPoisson { rate, size } => rate * size.mean(),
                Jumps::GammaSubordinator { shape_rate, scale } => shape_rate * scale,
            }
    }

    /// `Var[X₁]`, infinite for the stable family.
    pub fn variance(&self) -> f64 {
        self.gaussian_coef
            + match &self.jumps {
                Jumps::None => 0.0,
                Jumps::CompoundPoisson { rate, size } => {
                    let second = match *size {
                        SizeDist::Exponential { mean } => 2.0 * mean * mean,
                        SizeDist::Gamma { shape, scale } => shape * (shape + 1.0) * scale * scale,
                        SizeDist::Deterministic { size } => size * size,
                    };
                    rate * second
                }
                Jumps::GammaSubordinator { shape_rate, scale } => shape_rate * scale * scale,
                Jumps::StablePositive { .. } => f64::INFINITY,
            }
    }

    /// `φ(λ)` continued to complex `λ` with `Re λ ≥ 0`.
    pub fn laplace_exponent_complex(&self, lam: Complex64) -> Complex64 {
        let mut value = -self.drift * lam + 0.5 * self.gaussian_coef * lam * lam;
        value += match &self.jumps {
            Jumps::None => Complex64::new(0.0, 0.0),
            Jumps::CompoundPoisson { rate, size } => *rate * (size.laplace(lam) - 1.0),
            Jumps::GammaSubordinator { shape_rate, scale } => -*shape_rate * (1.0 + *scale * lam).ln(),
            Jumps::StablePositive { alpha, scale } => {
                if lam == Complex64::new(0.0, 0.0) {
                    Complex64::new(0.0, 0.0)
                } else {
                    *scale * lam.powf(*alpha)
                }
            }
        };
        value
    }

    fn phi(&self, lam: f64) -> f64 {
        let mut value = -self.drift * lam + 0.5 * self.gaussian_coef * lam * lam;
        value += match &self.jumps {
            Jumps::None => 0.0,
            Jumps::CompoundPoisson { rate, size } => rate * (size.laplace(Complex64::new(lam, 0.0)).re - 1.0),
            Jumps::GammaSubordinator { shape_rate, scale } => -shape_rate * (scale * lam).ln_1p(),
            Jumps::StablePositive { alpha, scale } => scale * lam.powf(*alpha),
        };
        value
    }
}

/// Laplace exponent `φ(λ) = log E[e^{−λ X₁}]`.
pub fn laplace_exponent(model: &SpectrallyPositiveModel, lam: f64) -> Result<f64> {
    if !(lam >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lam}")));
    }
    Ok(model.phi(lam))
}

const MAX_BRACKET_DOUBLINGS: usize = 200;
const MAX_BISECTIONS: usize = 2000;

fn bracket_above(model: &SpectrallyPositiveModel, start: f64, level: f64) -> Result<f64> {
    let mut hi = start.max(1.0);
    for _ in 0..MAX_BRACKET_DOUBLINGS {
        if model.phi(hi) > level {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    Err(Error::NonConvergence {
        iterations: MAX_BRACKET_DOUBLINGS,
        residual: model.phi(hi) - level,
    })
}

/// Bisection on the predicate `φ(s) ≤ level`, whose solution set is an interval starting at `lo`.
fn bisect_level(model: &SpectrallyPositiveModel, mut lo: f64, mut hi: f64, level: f64) -> Result<f64> {
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(lo);
        }
        if model.phi(mid) <= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_BISECTIONS,
        residual: model.phi(lo) - level,
    })
}

/// Largest `ρ ≥ 0` with `φ(ρ) = 0`; zero when `E[X₁] ≤ 0`.
pub fn largest_root(model: &SpectrallyPositiveModel) -> Result<f64> {
    model.validate()?;
    if model.mean() <= 0.0 {
        return Ok(0.0);
    }
    let hi = bracket_above(model, 1.0, 0.0)?;
    bisect_level(model, 0.0, hi, 0.0)
}

/// Right inverse `φ⁻¹(q)` of the exponent on `[ρ, ∞)`.
pub fn inverse_laplace_exponent(model: &SpectrallyPositiveModel, q: f64) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(Error::InvalidArgument(format!("q must be >= 0, got {q}")));
    }
    let rho = largest_root(model)?;
    if q == 0.0 {
        return Ok(rho);
    }
    let hi = bracket_above(model, 2.0 * rho, q)?;
    bisect_level(model, rho, hi, q)
}

/// Which functional of the law of `X_t` to return from [`model_moments`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentKind {
    /// `E[X_t]`
    Mean,
    /// `E[max(−X_t, 0)]`
    NegPartMean,
    /// `E[X_t 1{X_t ≤ 0}]`
    NegTruncatedMean,
}

pub fn model_moments(model: &SpectrallyPositiveModel, t: f64, kind: MomentKind) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    match kind {
        MomentKind::Mean => Ok(t * model.mean()),
        MomentKind::NegPartMean => neg_part_mean(&marginal(model, t)?),
        MomentKind::NegTruncatedMean => Ok(-neg_part_mean(&marginal(model, t)?)?),
    }
}

fn neg_part_mean(law: &Marginal) -> Result<f64> {
    law.neg_part_mean()
}

/// One coordinate of a multidimensional subordinator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubordinatorCoord {
    Gamma {
        shape_rate: f64,
        scale: f64,
    },
    CompoundPoisson {
        rate: f64,
        size: SizeDist,
        #[serde(default)]
        drift: f64,
    },
}

impl SubordinatorCoord {
    pub fn laplace_exponent(&self, z: f64) -> f64 {
        match self {
            SubordinatorCoord::Gamma { shape_rate, scale } => shape_rate * (scale * z).ln_1p(),
            SubordinatorCoord::CompoundPoisson { rate, size, drift } => {
                rate * (1.0 - size.laplace(Complex64::new(z, 0.0)).re) + drift * z
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            SubordinatorCoord::Gamma { shape_rate, scale } => shape_rate * scale,
            SubordinatorCoord::CompoundPoisson { rate, size, drift } => rate * size.mean() + drift,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SubordinatorCoord::Gamma { shape_rate, scale } => {
                if *shape_rate > 0.0 && *scale > 0.0 && shape_rate.is_finite() && scale.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidModel(format!(
                        "gamma coordinate needs shape_rate > 0 and scale > 0, got {shape_rate}, {scale}"
                    )))
                }
            }
            SubordinatorCoord::CompoundPoisson { rate, size, drift } => {
                if !(*rate >= 0.0 && rate.is_finite()) || !(*drift >= 0.0 && drift.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "compound-Poisson coordinate needs rate >= 0 and drift >= 0, got {rate}, {drift}"
                    )));
                }
                size.validate()
            }
        }
    }
}

/// A `d`-dimensional subordinator with independent coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubordinatorModel {
    pub coords: Vec<SubordinatorCoord>,
}

impl SubordinatorModel {
    pub fn new(coords: Vec<SubordinatorCoord>) -> Result<Self> {
        let model = SubordinatorModel { coords };
        model.validate()?;
        Ok(model)
    }

    pub fn gamma(shape_rate: f64, scale: f64) -> Result<Self> {
        SubordinatorModel::new(vec![SubordinatorCoord::Gamma { shape_rate, scale }])
    }

    pub fn validate(&self) -> Result<()> {
        if self.coords.is_empty() {
            return Err(Error::InvalidModel("subordinator needs at least one coordinate".into()));
        }
        self.coords.iter().try_for_each(SubordinatorCoord::validate)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// `φ_X(z) = −log E[e^{−z·X₁}]` for `z ≥ 0` componentwise.
    pub fn laplace_exponent(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected a {}-vector, got length {}",
                self.dim(),
                z.len()
            )));
        }
        if z.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument("z must be componentwise >= 0".into()));
        }
        Ok(self.coords.iter().zip(z).map(|(c, &zi)| c.laplace_exponent(zi)).sum())
    }

    pub fn means(&self) -> Vec<f64> {
        self.coords.iter().map(SubordinatorCoord::mean).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SubordinatorModel = serde_json::from_str(text)
            .map_err(|e| Error::InvalidModel(format!("bad subordinator JSON: {e}")))?;
        model.validate()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm() -> SpectrallyPositiveModel {
        SpectrallyPositiveModel::brownian(0.0, 1.0).unwrap()
    }

    fn gamma_model() -> SpectrallyPositiveModel {
        SpectrallyPositiveModel::gamma_minus_drift(1.0, 1.0, 1.0).unwrap()
    }

    fn zoo() -> Vec<SpectrallyPositiveModel> {
        vec![
            bm(),
            SpectrallyPositiveModel::brownian(1.0, 1.0).unwrap(),
            gamma_model(),
            SpectrallyPositiveModel::gamma_minus_drift(0.5, 2.0, 0.5).unwrap(),
            SpectrallyPositiveModel::compound_poisson_minus_drift(1.0, 2.0, SizeDist::Exponential { mean: 1.0 })
                .unwrap(),
            SpectrallyPositiveModel::stable(1.5, 1.0, 0.0).unwrap(),
            SpectrallyPositiveModel::stable(1.8, 0.5, 0.3).unwrap(),
        ]
    }

    #[test]
    fn exponent_examples() {
        assert_eq!(laplace_exponent(&bm(), 2.0).unwrap(), 2.0);
        for m in zoo() {
            assert_eq!(laplace_exponent(&m, 0.0).unwrap(), 0.0);
        }
        let v = laplace_exponent(&gamma_model(), 1.0).unwrap();
        assert!((v - (1.0 - 2.0_f64.ln())).abs() < 1e-15);
        assert!(laplace_exponent(&bm(), -0.1).is_err());
    }

    #[test]
    fn exponent_is_convex_on_grid() {
        for m in zoo() {
            let grid: Vec<f64> = (0..40).map(|i| 0.25 * i as f64).collect();
            for w in grid.windows(3) {
                let (a, b, c) = (w[0], w[1], w[2]);
                let interp = model_phi(&m, a) + (b - a) / (c - a) * (model_phi(&m, c) - model_phi(&m, a));
                assert!(model_phi(&m, b) <= interp + 1e-12, "{m:?} at {b}");
            }
        }
    }

    fn model_phi(m: &SpectrallyPositiveModel, l: f64) -> f64 {
        laplace_exponent(m, l).unwrap()
    }

    #[test]
    fn root_examples() {
        assert_eq!(largest_root(&bm()).unwrap(), 0.0);
        let up = SpectrallyPositiveModel::brownian(1.0, 1.0).unwrap();
        assert!((largest_root(&up).unwrap() - 2.0).abs() < 1e-11);
        let g = gamma_model();
        assert_eq!(largest_root(&g).unwrap(), 0.0);
        assert!(model_phi(&g, 1e-3) > 0.0);
    }

    #[test]
    fn root_consistency() {
        for m in zoo() {
            let rho = largest_root(&m).unwrap();
            assert!(model_phi(&m, rho).abs() < 1e-9, "{m:?}");
            assert!(model_phi(&m, rho + 0.1) > 0.0);
        }
    }

    #[test]
    fn inverse_examples_and_round_trip() {
        assert!((inverse_laplace_exponent(&bm(), 2.0).unwrap() - 2.0).abs() < 1e-12);
        for m in zoo() {
            let rho = largest_root(&m).unwrap();
            assert_eq!(inverse_laplace_exponent(&m, 0.0).unwrap(), rho);
            for i in 0..20 {
                let q = 0.05 * 1.6_f64.powi(i);
                let s = inverse_laplace_exponent(&m, q).unwrap();
                assert!(s >= rho);
                assert!((model_phi(&m, s) - q).abs() < 1e-9 * q.max(1.0), "{m:?} q={q}");
            }
        }
    }

    #[test]
    fn bounded_variation_classification() {
        assert!(!bm().is_bounded_variation());
        assert!(gamma_model().is_bounded_variation());
        assert!(SpectrallyPositiveModel::compound_poisson_minus_drift(1.0, 1.0, SizeDist::Deterministic { size: 1.0 })
            .unwrap()
            .is_bounded_variation());
        assert!(!SpectrallyPositiveModel::stable(1.5, 1.0, 0.0).unwrap().is_bounded_variation());
        let mixed = SpectrallyPositiveModel {
            drift: -1.0,
            gaussian_coef: 0.5,
            jumps: Jumps::GammaSubordinator { shape_rate: 1.0, scale: 1.0 },
        };
        assert!(!mixed.is_bounded_variation());
    }

    #[test]
    fn rejects_subordinators_and_negative_jumps() {
        assert!(SpectrallyPositiveModel::gamma_minus_drift(-0.5, 1.0, 1.0).is_err());
        assert!(SpectrallyPositiveModel::compound_poisson_minus_drift(1.0, 1.0, SizeDist::Deterministic { size: -1.0 })
            .is_err());
        assert!(SpectrallyPositiveModel::stable(2.5, 1.0, 0.0).is_err());
        assert!(SpectrallyPositiveModel::brownian(0.0, 0.0).is_err());
    }

    #[test]
    fn json_round_trip_and_family_check() {
        let m = gamma_model();
        let back = SpectrallyPositiveModel::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
        let text = r#"{"family":"brownian","drift":-1.0,"jumps":{"kind":"gamma_subordinator","shape_rate":1,"scale":1}}"#;
        assert!(matches!(SpectrallyPositiveModel::from_json(text), Err(Error::InvalidModel(_))));
        let bm_text = r#"{"family":"brownian","drift":0.0,"gaussian_coef":1.0}"#;
        assert_eq!(SpectrallyPositiveModel::from_json(bm_text).unwrap(), bm());
    }

    #[test]
    fn moment_examples() {
        let v = model_moments(&bm(), 1.0, MomentKind::NegPartMean).unwrap();
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert_eq!(model_moments(&bm(), 1.0, MomentKind::Mean).unwrap(), 0.0);
        assert!(model_moments(&gamma_model(), 1.0, MomentKind::Mean).unwrap().abs() < 1e-15);
        let neg = model_moments(&gamma_model(), 1.0, MomentKind::NegTruncatedMean).unwrap();
        let part = model_moments(&gamma_model(), 1.0, MomentKind::NegPartMean).unwrap();
        assert_eq!(neg, -part);
        let cp = SpectrallyPositiveModel::compound_poisson_minus_drift(1.0, 1.0, SizeDist::Exponential { mean: 1.0 })
            .unwrap();
        assert!(matches!(
            model_moments(&cp, 1.0, MomentKind::NegPartMean),
            Err(Error::NoDensity(_))
        ));
    }

    #[test]
    fn subordinator_exponent() {
        let s = SubordinatorModel::gamma(1.0, 1.0).unwrap();
        assert!((s.laplace_exponent(&[1.0]).unwrap() - 2.0_f64.ln()).abs() < 1e-15);
        assert!(s.laplace_exponent(&[1.0, 2.0]).is_err());
        assert_eq!(s.means(), vec![1.0]);
    }
}
