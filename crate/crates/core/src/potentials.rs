//! Radial potentials: closed-form profiles, the far-field scaling
//! `V_{1,ε}(r) = ε² V₁(ε r)`, decay audits and the CLR phase-space integral.
//!
//! Potentials are a closed set of analytic forms so that derivatives and
//! scaled copies are exact. A [`PotentialSpec::Sum`] covers composites.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Analytic radial potential profile.
///
/// Serialized with an internal `form` tag, e.g.
/// `{"form": "gaussian", "a": -2.8, "b": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `a · exp(−(b r)²)`
    Gaussian { a: f64, b: f64 },
    /// `a · sech(b r)`
    Sech { a: f64, b: f64 },
    /// `a / cosh²(b r)`
    Sech2 { a: f64, b: f64 },
    /// `a / (1 + b r⁴)`
    RationalQuartic { a: f64, b: f64 },
    /// `a / (1 + (b r)²)²`; `b` defaults to 1.
    LorentzianSq {
        a: f64,
        #[serde(default = "unit")]
        b: f64,
    },
    /// Pointwise sum of the listed terms.
    Sum { terms: Vec<PotentialSpec> },
    /// Identically zero.
    Zero,
}

fn unit() -> f64 {
    1.0
}

/// `sech(x)` without overflow for large `|x|`.
fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec::Zero
    }

    /// Checks parameter sanity (finite amplitudes, positive widths).
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("potential {what}")));
        match self {
            PotentialSpec::Gaussian { a, b }
            | PotentialSpec::Sech { a, b }
            | PotentialSpec::Sech2 { a, b }
            | PotentialSpec::RationalQuartic { a, b }
            | PotentialSpec::LorentzianSq { a, b } => {
                if !a.is_finite() {
                    return bad("amplitude must be finite");
                }
                if !(b.is_finite() && *b > 0.0) {
                    return bad("width parameter must be positive and finite");
                }
                Ok(())
            }
            PotentialSpec::Sum { terms } => terms.iter().try_for_each(|t| t.validate()),
            PotentialSpec::Zero => Ok(()),
        }
    }

    /// Exact value at `r`. `r` is expected to be non-negative and finite;
    /// see [`eval`] for the checked entry point.
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            PotentialSpec::Gaussian { a, b } => a * (-(b * r) * (b * r)).exp(),
            PotentialSpec::Sech { a, b } => a * sech(b * r),
            PotentialSpec::Sech2 { a, b } => {
                let s = sech(b * r);
                a * s * s
            }
            PotentialSpec::RationalQuartic { a, b } => {
                let r2 = r * r;
                a / (1.0 + b * r2 * r2)
            }
            PotentialSpec::LorentzianSq { a, b } => {
                let q = 1.0 + (b * r) * (b * r);
                a / (q * q)
            }
            PotentialSpec::Sum { ref terms } => terms.iter().map(|t| t.value(r)).sum(),
            PotentialSpec::Zero => 0.0,
        }
    }

    /// Exact radial derivative `dV/dr`.
    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            PotentialSpec::Gaussian { a, b } => -2.0 * a * b * b * r * (-(b * r) * (b * r)).exp(),
            PotentialSpec::Sech { a, b } => -a * b * sech(b * r) * (b * r).tanh(),
            PotentialSpec::Sech2 { a, b } => {
                let s = sech(b * r);
                -2.0 * a * b * s * s * (b * r).tanh()
            }
            PotentialSpec::RationalQuartic { a, b } => {
                let q = 1.0 + b * r.powi(4);
                -4.0 * a * b * r.powi(3) / (q * q)
            }
            PotentialSpec::LorentzianSq { a, b } => {
                let q = 1.0 + (b * r) * (b * r);
                -4.0 * a * b * b * r / (q * q * q)
            }
            PotentialSpec::Sum { ref terms } => terms.iter().map(|t| t.derivative(r)).sum(),
            PotentialSpec::Zero => 0.0,
        }
    }

    /// The far-field copy `r ↦ ε² V(ε r)`, expressed in the same family.
    pub fn scaled(&self, epsilon: f64) -> PotentialSpec {
        let e2 = epsilon * epsilon;
        match *self {
            PotentialSpec::Gaussian { a, b } => PotentialSpec::Gaussian { a: e2 * a, b: epsilon * b },
            PotentialSpec::Sech { a, b } => PotentialSpec::Sech { a: e2 * a, b: epsilon * b },
            PotentialSpec::Sech2 { a, b } => PotentialSpec::Sech2 { a: e2 * a, b: epsilon * b },
            PotentialSpec::RationalQuartic { a, b } => {
                PotentialSpec::RationalQuartic { a: e2 * a, b: b * e2 * e2 }
            }
            PotentialSpec::LorentzianSq { a, b } => PotentialSpec::LorentzianSq { a: e2 * a, b: epsilon * b },
            PotentialSpec::Sum { ref terms } => PotentialSpec::Sum {
                terms: terms.iter().map(|t| t.scaled(epsilon)).collect(),
            },
            PotentialSpec::Zero => PotentialSpec::Zero,
        }
    }

    /// Characteristic length: the smallest width among the terms.
    pub fn length_scale(&self) -> f64 {
        match *self {
            PotentialSpec::Gaussian { b, .. }
            | PotentialSpec::Sech { b, .. }
            | PotentialSpec::Sech2 { b, .. }
            | PotentialSpec::LorentzianSq { b, .. } => 1.0 / b,
            PotentialSpec::RationalQuartic { b, .. } => b.powf(-0.25),
            PotentialSpec::Sum { ref terms } => {
                terms.iter().map(|t| t.length_scale()).fold(f64::INFINITY, f64::min)
            }
            PotentialSpec::Zero => f64::INFINITY,
        }
        .min(1.0e6)
    }

    /// Upper bound for `sup_r V₋(r)` where `V₋ = max(−V, 0)`.
    ///
    /// Every form is monotone in `r` so its extreme sits at `r = 0`; for sums
    /// the negative parts are added, which is an upper bound.
    pub fn sup_negative_part(&self) -> f64 {
        match self {
            PotentialSpec::Sum { terms } => terms.iter().map(|t| t.sup_negative_part()).sum(),
            other => (-other.value(0.0)).max(0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialSpec::Zero => true,
            PotentialSpec::Sum { terms } => terms.iter().all(|t| t.is_zero()),
            PotentialSpec::Gaussian { a, .. }
            | PotentialSpec::Sech { a, .. }
            | PotentialSpec::Sech2 { a, .. }
            | PotentialSpec::RationalQuartic { a, .. }
            | PotentialSpec::LorentzianSq { a, .. } => *a == 0.0,
        }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidArgument(format!("radius must be finite and non-negative, got {r}")));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// Checked evaluation of a potential at radius `r ≥ 0`.
pub fn eval(spec: &PotentialSpec, r: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(spec.value(r))
}

/// `ε² V₁(ε r)`.
pub fn scaled_eval(v1: &PotentialSpec, epsilon: f64, r: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_radius(r)?;
    Ok(epsilon * epsilon * v1.value(epsilon * r))
}

/// Inner potential `V₀`, far-field potential `V₁` and the scale separation ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositePotential {
    pub v0: PotentialSpec,
    pub v1: PotentialSpec,
    pub epsilon: f64,
}

impl CompositePotential {
    pub fn new(v0: PotentialSpec, v1: PotentialSpec, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        v0.validate()?;
        v1.validate()?;
        Ok(Self { v0, v1, epsilon })
    }

    /// `V_{1,ε}(r) = ε² V₁(ε r)`.
    pub fn v1_eps(&self, r: f64) -> f64 {
        self.epsilon * self.epsilon * self.v1.value(self.epsilon * r)
    }

    /// `W_ε(r) = V₀(r) + ε² V₁(ε r)`.
    pub fn w(&self, r: f64) -> f64 {
        self.v0.value(r) + self.v1_eps(r)
    }

    /// `W_ε` as a single analytic spec.
    pub fn w_spec(&self) -> PotentialSpec {
        PotentialSpec::Sum { terms: vec![self.v0.clone(), self.v1.scaled(self.epsilon)] }
    }
}

/// Which of the three operators built from a [`CompositePotential`] is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    /// `Δ − V₀`, the inner model.
    V0Only,
    /// `Δ − V₁` on its own length scale, the outer model.
    V1Only,
    /// `Δ − W_ε`.
    Full,
}

impl Operator {
    pub const ALL: [Operator; 3] = [Operator::V0Only, Operator::V1Only, Operator::Full];

    /// The potential this operator subtracts from `Δ`.
    pub fn potential(self, pots: &CompositePotential) -> PotentialSpec {
        match self {
            Operator::V0Only => pots.v0.clone(),
            Operator::V1Only => pots.v1.clone(),
            Operator::Full => pots.w_spec(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Operator::V0Only => "v0_only",
            Operator::V1Only => "v1_only",
            Operator::Full => "full",
        }
    }
}

/// Constants of the decay hypotheses: `|V'(r)| ≤ C₁ / r^{3+γ}` and
/// `|V₀(r)| ≤ C₀ / r^{4+γ}` for `r ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayParams {
    pub c0: f64,
    pub c1: f64,
    pub gamma: f64,
}

impl DecayParams {
    pub fn new(c0: f64, c1: f64, gamma: f64) -> Result<Self> {
        let p = Self { c0, c1, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.c0, self.c1, self.gamma].iter().all(|x| x.is_finite() && *x > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("decay constants C0, C1, gamma must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub r: f64,
    pub value: f64,
    pub derivative: f64,
    /// `|V'(r)| ≤ C₁ / r^{3+γ}`
    pub derivative_ok: bool,
    /// `|V(r)| ≤ C₀ / r^{4+γ}`
    pub value_ok: bool,
}

/// Per-sample audit of the decay hypotheses. Advisory: a failing sample is a
/// warning, not an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub params: DecayParams,
    pub samples: Vec<DecaySample>,
    pub derivative_bound_holds: bool,
    pub value_bound_holds: bool,
    pub warnings: Vec<String>,
}

impl DecayReport {
    pub fn all_pass(&self) -> bool {
        self.derivative_bound_holds && self.value_bound_holds
    }
}

/// Evaluates both decay inequalities at each sample radius (`r ≥ 1`).
pub fn verify_decay(spec: &PotentialSpec, params: DecayParams, r_samples: &[f64]) -> Result<DecayReport> {
    if r_samples.is_empty() {
        return Err(Error::InvalidArgument("decay check needs at least one sample radius".into()));
    }
    params.validate()?;
    spec.validate()?;
    let mut samples = Vec::with_capacity(r_samples.len());
    for &r in r_samples {
        if !(r.is_finite() && r >= 1.0) {
            return Err(Error::InvalidArgument(format!("decay samples must lie in [1, inf), got {r}")));
        }
        let value = spec.value(r);
        let derivative = spec.derivative(r);
        samples.push(DecaySample {
            r,
            value,
            derivative,
            derivative_ok: derivative.abs() <= params.c1 / r.powf(3.0 + params.gamma),
            value_ok: value.abs() <= params.c0 / r.powf(4.0 + params.gamma),
        });
    }
    let derivative_bound_holds = samples.iter().all(|s| s.derivative_ok);
    let value_bound_holds = samples.iter().all(|s| s.value_ok);
    let mut warnings = Vec::new();
    if let Some(s) = samples.iter().find(|s| !s.derivative_ok) {
        warnings.push(format!(
            "derivative bound |V'(r)| <= C1/r^(3+gamma) fails first at r = {} (|V'| = {:e})",
            s.r,
            s.derivative.abs()
        ));
    }
    if let Some(s) = samples.iter().find(|s| !s.value_ok) {
        warnings.push(format!(
            "value bound |V(r)| <= C0/r^(4+gamma) fails first at r = {} (|V| = {:e})",
            s.r,
            s.value.abs()
        ));
    }
    Ok(DecayReport { params, samples, derivative_bound_holds, value_bound_holds, warnings })
}

/// `4π ∫₀^∞ V₋(r)^{3/2} r² dr`, the right-hand side of the CLR bound.
///
/// The half line is split into doubling panels `[0, L], [L, 2L], …` with `L`
/// the potential's length scale; each panel is integrated adaptively and the
/// sweep stops once a panel adds less than `1e-14` of the running total.
/// Panels past `R = 1e6 · max(L, 1)` with non-negligible weight mean the
/// integral diverges.
pub fn clr_integral(spec: &PotentialSpec) -> Result<f64> {
    spec.validate()?;
    if spec.is_zero() {
        return Ok(0.0);
    }
    let integrand = |r: f64| {
        let neg = (-spec.value(r)).max(0.0);
        neg * neg.sqrt() * r * r
    };
    let scale = spec.length_scale();
    let cutoff = 1.0e6 * scale.max(1.0);
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut hi = scale;
    let mut quiet_panels = 0;
    while lo < cutoff {
        let q = quadrature::integrate(integrand, lo, hi, 1e-12, 0.0);
        total += q.value;
        if q.value <= 1e-14 * total {
            quiet_panels += 1;
            // Two consecutive negligible doubling panels: the remaining tail
            // of an integrable profile is below the same relative level.
            if quiet_panels >= 2 {
                return Ok(4.0 * std::f64::consts::PI * total);
            }
        } else {
            quiet_panels = 0;
        }
        lo = hi;
        hi *= 2.0;
    }
    if total == 0.0 {
        return Ok(0.0);
    }
    Err(Error::DivergentIntegral { cutoff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn all_forms() -> Vec<PotentialSpec> {
        vec![
            PotentialSpec::Gaussian { a: -2.8, b: 1.0 },
            PotentialSpec::Sech { a: -20.0, b: 1.0 },
            PotentialSpec::Sech2 { a: -3.0, b: 1.2 },
            PotentialSpec::RationalQuartic { a: -2.6, b: 2.0 },
            PotentialSpec::LorentzianSq { a: -30.0, b: 1.0 },
        ]
    }

    #[test]
    fn origin_values() {
        assert_eq!(eval(&PotentialSpec::Gaussian { a: -2.8, b: 1.0 }, 0.0).unwrap(), -2.8);
        assert_eq!(eval(&PotentialSpec::Sech2 { a: -3.0, b: 1.2 }, 0.0).unwrap(), -3.0);
    }

    #[test]
    fn far_values_decay() {
        for f in all_forms() {
            assert!(eval(&f, 1.0e6).unwrap().abs() < 1e-6, "{f:?}");
        }
    }

    #[test]
    fn rejects_bad_radius() {
        let g = PotentialSpec::Gaussian { a: -1.0, b: 1.0 };
        assert!(eval(&g, f64::NAN).is_err());
        assert!(eval(&g, f64::INFINITY).is_err());
        assert!(eval(&g, -1.0).is_err());
    }

    #[test]
    fn scaled_examples() {
        let g = PotentialSpec::Gaussian { a: -30.0, b: 1.0 };
        assert_relative_eq!(scaled_eval(&g, 0.1, 0.0).unwrap(), -0.3, max_relative = 1e-15);
        let s = PotentialSpec::Sech { a: -20.0, b: 1.0 };
        let expected = 0.01 * -20.0 / 1.0f64.cosh();
        assert_relative_eq!(scaled_eval(&s, 0.1, 10.0).unwrap(), expected, max_relative = 1e-14);
        assert!(scaled_eval(&g, 0.0, 1.0).is_err());
        assert!(scaled_eval(&g, -0.1, 1.0).is_err());
    }

    #[test]
    fn scaled_spec_matches_scaled_eval() {
        for f in all_forms() {
            for eps in [1.0, 0.3, 0.01] {
                let s = f.scaled(eps);
                for r in [0.0, 0.5, 3.0, 40.0, 700.0] {
                    let direct = scaled_eval(&f, eps, r).unwrap();
                    assert_relative_eq!(s.value(r), direct, max_relative = 1e-13, epsilon = 1e-300);
                }
            }
        }
    }

    #[test]
    fn derivative_matches_centered_difference() {
        for f in all_forms() {
            for r in [0.3f64, 1.0, 2.5, 6.0] {
                let h = 1e-6 * r.max(1.0);
                let fd = (f.value(r + h) - f.value(r - h)) / (2.0 * h);
                assert!((f.derivative(r) - fd).abs() < 1e-7 * (1.0 + fd.abs()), "{f:?} at {r}");
            }
        }
    }

    #[test]
    fn sech_is_overflow_safe() {
        let s = PotentialSpec::Sech { a: -20.0, b: 1.0 };
        assert_eq!(s.value(1.0e4), 0.0);
        assert!(s.derivative(1.0e4).is_finite());
    }

    #[test]
    fn scenario_closed_forms() {
        let v0 = PotentialSpec::RationalQuartic { a: -2.6, b: 2.0 };
        assert_relative_eq!(v0.value(1.0), -2.6 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(v0.value(10.0), -2.6 / 20001.0, max_relative = 1e-15);
        let v1 = PotentialSpec::LorentzianSq { a: -30.0, b: 1.0 };
        assert_relative_eq!(v1.value(1.0), -7.5, max_relative = 1e-15);
        assert_relative_eq!(v1.value(10.0), -30.0 / 10201.0, max_relative = 1e-15);
        let v0 = PotentialSpec::Sech2 { a: -3.0, b: 1.2 };
        assert_relative_eq!(v0.value(1.0), -3.0 / 1.2f64.cosh().powi(2), max_relative = 1e-14);
    }

    #[test]
    fn json_schema() {
        let g: PotentialSpec = serde_json::from_str(r#"{"form": "gaussian", "a": -2.8, "b": 1.0}"#).unwrap();
        assert_eq!(g, PotentialSpec::Gaussian { a: -2.8, b: 1.0 });
        let l: PotentialSpec = serde_json::from_str(r#"{"form": "lorentzian_sq", "a": -30}"#).unwrap();
        assert_eq!(l, PotentialSpec::LorentzianSq { a: -30.0, b: 1.0 });
        let s: PotentialSpec = serde_json::from_str(
            r#"{"form": "sum", "terms": [{"form": "sech", "a": -1, "b": 2}, {"form": "zero"}]}"#,
        )
        .unwrap();
        assert_eq!(s.value(0.0), -1.0);
        assert!(serde_json::from_str::<PotentialSpec>(r#"{"form": "cubic", "a": 1}"#).is_err());
    }

    #[test]
    fn decay_gaussian_passes() {
        let g = PotentialSpec::Gaussian { a: -2.8, b: 1.0 };
        let grid: Vec<f64> = (1..=50).map(f64::from).collect();
        let rep = verify_decay(&g, DecayParams::new(100.0, 100.0, 1.0).unwrap(), &grid).unwrap();
        assert!(rep.all_pass());
        assert!(rep.warnings.is_empty());
    }

    #[test]
    fn decay_lorentzian_fails_value_bound() {
        // a/r^4 cannot stay under C0/r^5 once r > C0/|a|.
        let l = PotentialSpec::LorentzianSq { a: -30.0, b: 1.0 };
        let grid: Vec<f64> = (1..=2000).map(f64::from).collect();
        let rep = verify_decay(&l, DecayParams::new(100.0, 100.0, 1.0).unwrap(), &grid).unwrap();
        assert!(!rep.value_bound_holds);
        assert!(rep.derivative_bound_holds);
        let first_fail = rep.samples.iter().find(|s| !s.value_ok).unwrap().r;
        // 30 r^5 / (1 + r^2)^2 > 100  <=>  r ≳ 3.6
        assert!(first_fail > 3.0 && first_fail < 5.0, "{first_fail}");
    }

    #[test]
    fn decay_zero_passes_and_errors() {
        let rep = verify_decay(&PotentialSpec::Zero, DecayParams::new(1.0, 1.0, 1.0).unwrap(), &[1.0, 5.0]).unwrap();
        assert!(rep.all_pass());
        assert!(verify_decay(&PotentialSpec::Zero, DecayParams::new(1.0, 1.0, 1.0).unwrap(), &[]).is_err());
        assert!(verify_decay(&PotentialSpec::Zero, DecayParams::new(1.0, 1.0, 1.0).unwrap(), &[0.5]).is_err());
        assert!(DecayParams::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn clr_trivial_cases() {
        assert_eq!(clr_integral(&PotentialSpec::Zero).unwrap(), 0.0);
        assert_eq!(clr_integral(&PotentialSpec::Gaussian { a: 5.0, b: 1.0 }).unwrap(), 0.0);
    }

    #[test]
    fn clr_gaussian_closed_form() {
        // 4π ∫ (g e^{-r²})^{3/2} r² dr = 4π g^{3/2} · (√π / 4) · (2/3)^{3/2}
        let g = 2.8f64;
        let exact = 4.0 * std::f64::consts::PI * g.powf(1.5) * std::f64::consts::PI.sqrt() / 4.0
            * (2.0f64 / 3.0).powf(1.5);
        let got = clr_integral(&PotentialSpec::Gaussian { a: -g, b: 1.0 }).unwrap();
        assert_relative_eq!(got, exact, max_relative = 1e-9);
    }

    #[test]
    fn clr_divergent_tail_reported() {
        // Width far beyond the cutoff: the profile is flat over the whole range.
        let slow = PotentialSpec::RationalQuartic { a: -1.0, b: 1e-30 };
        assert!(matches!(clr_integral(&slow), Err(Error::DivergentIntegral { .. })));
    }
}
