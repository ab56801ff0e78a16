//! Compactified angular flows and their adaptive integrator.
//!
//! Both scales share one form. With `x ∈ [0, 1]` the compactified radius
//! (σ = r/(1+r) on the inner scale, τ = ρ/(1+ρ) with ρ = εr on the outer
//! one) and `φ` the Prüfer angle of `(p, p')`:
//!
//! ```text
//! φ̇ = (x − 1) sin 2φ + x [ (E + Ṽ(x)) cos²φ − sin²φ ]
//! ẋ = x (1 − x)²
//! ```
//!
//! where `E` is λ (inner) or μ = λ/ε² (outer) and `Ṽ` is the sum of the
//! included potential terms pulled back to `x`, extended by zero at `x = 1`.
//! The independent variable is `s = r + ln r` (or `t = ρ + ln ρ`).

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{CompositePotential, PotentialSpec};

/// Above this magnitude the rescaled inner potential `ε⁻² V₀(ρ/ε)` is
/// treated as an overflow.
pub const OUTER_OVERFLOW_LIMIT: f64 = 1.0e30;

/// Compactified radius ↦ physical radius.
#[inline]
pub fn radius_to_physical(x: f64) -> f64 {
    x / (1.0 - x)
}

/// Physical radius ↦ compactified radius.
#[inline]
pub fn physical_to_radius(r: f64) -> f64 {
    r / (1.0 + r)
}

/// Desingularized time `s = r + ln r` at compactified radius `x ∈ (0, 1)`.
#[inline]
pub fn time_at_radius(x: f64) -> f64 {
    let r = radius_to_physical(x);
    r + r.ln()
}

/// Which length scale a flow is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Variables (θ, σ) with σ = r/(1+r).
    Inner,
    /// Variables (ψ, τ) with τ = ρ/(1+ρ), ρ = εr.
    Outer,
}

/// Point of the compactified phase space: a lifted angle and a radius in
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularState {
    pub angle: f64,
    pub radius: f64,
}

impl AngularState {
    pub fn new(angle: f64, radius: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::InvalidArgument(format!("angle must be finite, got {angle}")));
        }
        if !(0.0..=1.0).contains(&radius) {
            return Err(Error::InvalidArgument(format!("radius must lie in [0, 1], got {radius}")));
        }
        Ok(Self { angle, radius })
    }
}

/// Eigenvalue parameter, scale and which potential terms enter the flow.
///
/// The model problems drop one of the two terms: the inner model keeps only
/// `V₀`, the outer model keeps only `V₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub scale: Scale,
    /// λ on the inner scale, μ on the outer scale.
    pub eigen_param: f64,
    pub epsilon: f64,
    pub include_inner_potential: bool,
    pub include_outer_potential: bool,
}

impl FlowParams {
    pub fn full_inner(lambda: f64, epsilon: f64) -> Self {
        Self {
            scale: Scale::Inner,
            eigen_param: lambda,
            epsilon,
            include_inner_potential: true,
            include_outer_potential: true,
        }
    }

    pub fn model_inner(lambda: f64, epsilon: f64) -> Self {
        Self { include_outer_potential: false, ..Self::full_inner(lambda, epsilon) }
    }

    pub fn full_outer(mu: f64, epsilon: f64) -> Self {
        Self {
            scale: Scale::Outer,
            eigen_param: mu,
            epsilon,
            include_inner_potential: true,
            include_outer_potential: true,
        }
    }

    pub fn model_outer(mu: f64, epsilon: f64) -> Self {
        Self { include_inner_potential: false, ..Self::full_outer(mu, epsilon) }
    }

    pub fn with_eigen_param(self, eigen_param: f64) -> Self {
        Self { eigen_param, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !self.eigen_param.is_finite() {
            return Err(Error::InvalidArgument("eigenvalue parameter must be finite".into()));
        }
        Ok(())
    }

    /// Short system label used in reports and CSV metadata.
    pub fn system_tag(&self) -> &'static str {
        match (self.scale, self.include_inner_potential, self.include_outer_potential) {
            (Scale::Inner, true, true) => "inner_full",
            (Scale::Inner, true, false) => "inner_model",
            (Scale::Inner, false, true) => "inner_far_only",
            (Scale::Inner, false, false) => "inner_free",
            (Scale::Outer, true, true) => "outer_full",
            (Scale::Outer, false, true) => "outer_model",
            (Scale::Outer, true, false) => "outer_near_only",
            (Scale::Outer, false, false) => "outer_free",
        }
    }
}

/// `Ṽ₀(σ) = V₀(σ/(1−σ))`, extended by `0` at `σ = 1`.
pub fn extended_v0(v0: &PotentialSpec, sigma: f64) -> f64 {
    if sigma >= 1.0 {
        0.0
    } else {
        v0.value(radius_to_physical(sigma))
    }
}

/// `Ṽ_{1,ε}(σ) = ε² V₁(ε σ/(1−σ))`, extended by `0` at `σ = 1`.
pub fn extended_v1eps(v1: &PotentialSpec, epsilon: f64, sigma: f64) -> f64 {
    if sigma >= 1.0 {
        0.0
    } else {
        epsilon * epsilon * v1.value(epsilon * radius_to_physical(sigma))
    }
}

/// `Ṽ_{0,ε⁻¹}(τ) = ε⁻² V₀(ρ/ε)` with ρ = τ/(1−τ), extended by `0` at `τ = 1`.
pub fn extended_v0_outer(v0: &PotentialSpec, epsilon: f64, tau: f64) -> Result<f64> {
    if tau >= 1.0 {
        return Ok(0.0);
    }
    let rho = radius_to_physical(tau);
    let value = v0.value(rho / epsilon) / (epsilon * epsilon);
    if !value.is_finite() || value.abs() > OUTER_OVERFLOW_LIMIT {
        return Err(Error::PotentialOverflow { radius: tau, value: value.abs() });
    }
    Ok(value)
}

/// The common angular vector field for a given total coefficient
/// `E + Ṽ(x)`.
#[inline]
fn angular_field(angle: f64, radius: f64, coefficient: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    let one_minus = 1.0 - radius;
    let d_angle = -one_minus * 2.0 * s * c + radius * (coefficient * c * c - s * s);
    (d_angle, radius * one_minus * one_minus)
}

/// A flow bound to concrete potentials.
#[derive(Debug, Clone, Copy)]
pub struct AngularFlow<'a> {
    pub params: FlowParams,
    pub pots: &'a CompositePotential,
}

impl<'a> AngularFlow<'a> {
    pub fn new(params: FlowParams, pots: &'a CompositePotential) -> Result<Self> {
        params.validate()?;
        if (params.epsilon - pots.epsilon).abs() > 1e-15 * pots.epsilon {
            return Err(Error::InvalidArgument(format!(
                "flow epsilon {} does not match potential epsilon {}",
                params.epsilon, pots.epsilon
            )));
        }
        Ok(Self { params, pots })
    }

    pub fn with_eigen_param(&self, eigen_param: f64) -> Self {
        Self { params: self.params.with_eigen_param(eigen_param), pots: self.pots }
    }

    /// Sum of the included potential terms at physical radius `x` of this
    /// flow's scale (r for inner, ρ for outer).
    pub fn potential_at_physical(&self, x: f64) -> f64 {
        let eps = self.params.epsilon;
        let mut v = 0.0;
        match self.params.scale {
            Scale::Inner => {
                if self.params.include_inner_potential {
                    v += self.pots.v0.value(x);
                }
                if self.params.include_outer_potential {
                    v += eps * eps * self.pots.v1.value(eps * x);
                }
            }
            Scale::Outer => {
                if self.params.include_inner_potential {
                    v += self.pots.v0.value(x / eps) / (eps * eps);
                }
                if self.params.include_outer_potential {
                    v += self.pots.v1.value(x);
                }
            }
        }
        v
    }

    /// `Ṽ(x)`: the included terms at compactified radius `x`.
    pub fn extended_potential(&self, x: f64) -> Result<f64> {
        let eps = self.params.epsilon;
        let mut v = 0.0;
        match self.params.scale {
            Scale::Inner => {
                if self.params.include_inner_potential {
                    v += extended_v0(&self.pots.v0, x);
                }
                if self.params.include_outer_potential {
                    v += extended_v1eps(&self.pots.v1, eps, x);
                }
            }
            Scale::Outer => {
                if self.params.include_inner_potential {
                    v += extended_v0_outer(&self.pots.v0, eps, x)?;
                }
                if self.params.include_outer_potential {
                    v += extended_v0(&self.pots.v1, x);
                }
            }
        }
        Ok(v)
    }

    pub fn rhs(&self, state: AngularState) -> Result<(f64, f64)> {
        let coefficient = self.params.eigen_param + self.extended_potential(state.radius)?;
        Ok(angular_field(state.angle, state.radius, coefficient))
    }
}

/// Inner-scale field (θ̇, σ̇). Model variants follow from the potential flags.
pub fn inner_rhs(state: AngularState, params: FlowParams, pots: &CompositePotential) -> Result<(f64, f64)> {
    let params = FlowParams { scale: Scale::Inner, ..params };
    AngularFlow::new(params, pots)?.rhs(state)
}

/// Outer-scale field (ψ̇, τ̇). Fails with [`Error::PotentialOverflow`] when
/// the rescaled inner potential exceeds [`OUTER_OVERFLOW_LIMIT`].
pub fn outer_rhs(state: AngularState, params: FlowParams, pots: &CompositePotential) -> Result<(f64, f64)> {
    let params = FlowParams { scale: Scale::Outer, ..params };
    AngularFlow::new(params, pots)?.rhs(state)
}

/// The four boundary equilibria for eigenvalue parameter `lambda ≥ 0`:
/// `[(0,0), (0,π/2), (1, arctan(−√λ)), (1, arctan(√λ))]`, i.e. regular
/// origin, singular origin, decaying end and growing end.
pub fn fixed_points(lambda: f64) -> Result<[AngularState; 4]> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("fixed points need lambda >= 0, got {lambda}")));
    }
    let k = lambda.sqrt().atan();
    Ok([
        AngularState { angle: 0.0, radius: 0.0 },
        AngularState { angle: FRAC_PI_2, radius: 0.0 },
        AngularState { angle: -k, radius: 1.0 },
        AngularState { angle: k, radius: 1.0 },
    ])
}

/// Tolerances and step bounds for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h_init: 1e-3, h_max: 50.0, max_steps: 2_000_000 }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.h_init > 0.0 && self.h_max > 0.0) {
            return Err(Error::InvalidArgument("rtol, atol, h_init and h_max must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be positive".into()));
        }
        Ok(())
    }

    /// Both tolerances scaled by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self { rtol: self.rtol * factor, atol: self.atol * factor, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub indep: f64,
    pub state: AngularState,
}

/// State at a requested radius section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub section: f64,
    pub indep: f64,
    pub state: AngularState,
}

/// Dense record of one integration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub params: Option<FlowParams>,
    pub system: String,
    pub direction: Direction,
}

impl Trajectory {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least the start sample")
    }

    /// Event recorded at `section`, if reached.
    pub fn event_at(&self, section: f64) -> Option<&Event> {
        self.events.iter().find(|e| (e.section - section).abs() <= 1e-15)
    }

    pub fn scale(&self) -> Scale {
        self.params.map(|p| p.scale).unwrap_or(Scale::Inner)
    }

    /// CSV with header `s,sigma,theta,event` (or `t,tau,psi,event` on the
    /// outer scale): one row per accepted step and one flagged row per event,
    /// merged in order of the independent variable.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        self.write_csv_impl(out, None)
    }

    /// Same as [`Trajectory::write_csv`] with an extra `branch_k` column
    /// holding the covering-space branch of each angle after adding
    /// `shift_branches · π`.
    pub fn write_csv_with_branch<W: Write>(&self, out: &mut W, shift_branches: i64) -> std::io::Result<()> {
        self.write_csv_impl(out, Some(shift_branches))
    }

    fn write_csv_impl<W: Write>(&self, out: &mut W, branch_shift: Option<i64>) -> std::io::Result<()> {
        let (iv, rv, av) = match self.scale() {
            Scale::Inner => ("s", "sigma", "theta"),
            Scale::Outer => ("t", "tau", "psi"),
        };
        write!(out, "{iv},{rv},{av},event")?;
        if branch_shift.is_some() {
            write!(out, ",branch_k")?;
        }
        out.write_all(b"\n")?;
        let forward = self.direction == Direction::Forward;
        let mut rows: Vec<(f64, AngularState, bool)> =
            self.samples.iter().map(|s| (s.indep, s.state, false)).collect();
        rows.extend(self.events.iter().map(|e| (e.indep, e.state, true)));
        rows.sort_by(|a, b| {
            let o = a.0.total_cmp(&b.0);
            if forward {
                o
            } else {
                o.reverse()
            }
        });
        for (indep, st, is_event) in rows {
            let shift = branch_shift.unwrap_or(0) as f64 * std::f64::consts::PI;
            let angle = st.angle + shift;
            write!(out, "{indep},{},{angle},{}", st.radius, u8::from(is_event))?;
            if branch_shift.is_some() {
                write!(out, ",{}", crate::manifolds::branch_index(angle))?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau (the flow is autonomous, so the nodes are
// not needed).
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type Vec2 = [f64; 2];

#[inline]
fn axpy(y: Vec2, terms: &[(f64, Vec2)], h: f64) -> Vec2 {
    let mut out = y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

struct StepOutcome {
    y: Vec2,
    err: Vec2,
    k7: Vec2,
}

/// One Dormand–Prince step from `y` with first stage `k1 = f(y)`.
fn dopri_step<F>(f: &F, y: Vec2, k1: Vec2, h: f64) -> Result<StepOutcome>
where
    F: Fn(Vec2) -> Result<Vec2>,
{
    let k2 = f(axpy(y, &[(A21, k1)], h))?;
    let k3 = f(axpy(y, &[(A31, k1), (A32, k2)], h))?;
    let k4 = f(axpy(y, &[(A41, k1), (A42, k2), (A43, k3)], h))?;
    let k5 = f(axpy(y, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], h))?;
    let k6 = f(axpy(y, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)], h))?;
    let y_new = axpy(y, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)], h);
    let k7 = f(y_new)?;
    let mut err = [0.0; 2];
    for i in 0..2 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok(StepOutcome { y: y_new, err, k7 })
}

/// Adaptive Dormand–Prince 5(4) integration of an angular flow in the
/// desingularized time.
///
/// The run starts at `start` (radius strictly inside `(0, 1)`) with
/// independent variable `s = r + ln r`, and ends exactly on
/// `stop_radius`. Every radius in `sections` that lies between the two is
/// reported as an [`Event`] located to `|radius − section| ≤ 1e-12` by
/// re-stepping from the last accepted point. Steps that would move the angle
/// by `π/2` or more are rejected, so the stored angles are a valid lift.
pub fn integrate<F>(
    rhs: F,
    start: AngularState,
    direction: Direction,
    stop_radius: f64,
    sections: &[f64],
    ctl: &StepControl,
) -> Result<Trajectory>
where
    F: Fn(AngularState) -> Result<(f64, f64)>,
{
    ctl.validate()?;
    if !(start.radius > 0.0 && start.radius < 1.0) {
        return Err(Error::InvalidArgument(format!("start radius must lie in (0, 1), got {}", start.radius)));
    }
    if !start.angle.is_finite() {
        return Err(Error::InvalidArgument("start angle must be finite".into()));
    }
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let ahead = |x: f64| sign * (x - start.radius) > 0.0;
    if !(stop_radius > 0.0 && stop_radius < 1.0 && ahead(stop_radius)) {
        return Err(Error::InvalidArgument(format!(
            "stop radius {stop_radius} must lie in (0, 1) and ahead of the start radius {}",
            start.radius
        )));
    }
    for &s in sections {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidArgument(format!("section {s} must lie in (0, 1)")));
        }
    }
    // Pending sections in the order they will be crossed; the stop radius
    // terminates the run.
    let mut pending: Vec<f64> = sections.iter().copied().filter(|&s| ahead(s) && sign * (s - stop_radius) < 0.0).collect();
    pending.sort_by(|a, b| (sign * a).total_cmp(&(sign * b)));
    pending.dedup();
    let mut events: Vec<Event> = sections
        .iter()
        .filter(|&&s| s == start.radius)
        .map(|&s| Event { section: s, indep: time_at_radius(s), state: start })
        .collect();

    let f = |y: Vec2| -> Result<Vec2> {
        let (da, dr) = rhs(AngularState { angle: y[0], radius: y[1] })?;
        if !(da.is_finite() && dr.is_finite()) {
            return Err(Error::NonFinite { at: y[1] });
        }
        Ok([da, dr])
    };

    let mut s = time_at_radius(start.radius);
    let mut y: Vec2 = [start.angle, start.radius];
    let mut k1 = f(y)?;
    let mut samples = vec![Sample { indep: s, state: start }];
    let mut h = ctl.h_init.min(ctl.h_max);
    let mut accepted = 0usize;
    let mut last_factor_reject = false;

    loop {
        if accepted >= ctl.max_steps {
            return Err(Error::MaxStepsExceeded { max_steps: ctl.max_steps, at: s });
        }
        if h < 1e-14 {
            return Err(Error::StepCollapse { step: h, at: s });
        }
        let out = dopri_step(&f, y, k1, sign * h)?;
        let scale0 = ctl.atol + ctl.rtol * y[0].abs().max(out.y[0].abs());
        let scale1 = ctl.atol + ctl.rtol * y[1].abs().max(out.y[1].abs());
        let err = (((out.err[0] / scale0).powi(2) + (out.err[1] / scale1).powi(2)) / 2.0).sqrt();
        let lift_ok = (out.y[0] - y[0]).abs() < FRAC_PI_2;
        let radius_ok = out.y[1] > 0.0 && out.y[1] < 1.0;
        if !(err.is_finite() && err <= 1.0 && lift_ok && radius_ok) {
            let factor = if err.is_finite() && lift_ok && radius_ok {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.25
            };
            h *= factor;
            last_factor_reject = true;
            continue;
        }

        // Sections crossed by this step, landed exactly by partial steps.
        let y_prev = y;
        let k1_prev = k1;
        let s_prev = s;
        let mut finished = None;
        while let Some(&target) = pending.first() {
            if sign * (out.y[1] - target) < 0.0 {
                break;
            }
            let (hs, ys) = land_on_radius(&f, y_prev, k1_prev, sign * h, target)?;
            events.push(Event { section: target, indep: s_prev + hs, state: AngularState { angle: ys[0], radius: ys[1] } });
            pending.remove(0);
        }
        if sign * (out.y[1] - stop_radius) >= 0.0 {
            let (hs, ys) = land_on_radius(&f, y_prev, k1_prev, sign * h, stop_radius)?;
            finished = Some((s_prev + hs, ys));
        }
        if let Some((s_end, y_end)) = finished {
            let st = AngularState { angle: y_end[0], radius: y_end[1] };
            samples.push(Sample { indep: s_end, state: st });
            if sections.contains(&stop_radius) {
                events.push(Event { section: stop_radius, indep: s_end, state: st });
            }
            break;
        }

        s += sign * h;
        y = out.y;
        k1 = out.k7;
        accepted += 1;
        samples.push(Sample { indep: s, state: AngularState { angle: y[0], radius: y[1] } });

        let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        let grow = if last_factor_reject { grow.min(1.0) } else { grow };
        last_factor_reject = false;
        h = (h * grow).min(ctl.h_max);
    }

    Ok(Trajectory { samples, events, params: None, system: String::from("custom"), direction })
}

/// Finds the partial step `hs` (same sign as `h`) from `y` that lands the
/// radius on `target`, returning `(hs, y(hs))`.
fn land_on_radius<F>(f: &F, y: Vec2, k1: Vec2, h: f64, target: f64) -> Result<(f64, Vec2)>
where
    F: Fn(Vec2) -> Result<Vec2>,
{
    // The radius equation integrates in closed form; this is an excellent
    // first guess, corrected below against the discrete flow.
    let mut hs = (time_at_radius(target) - time_at_radius(y[1])).clamp(h.min(0.0), h.max(0.0));
    let mut prev: Option<(f64, f64)> = None;
    let mut best = (hs, dopri_step(f, y, k1, hs)?.y);
    for _ in 0..30 {
        let ys = dopri_step(f, y, k1, hs)?.y;
        let g = ys[1] - target;
        best = (hs, ys);
        if g.abs() <= 1e-13 {
            break;
        }
        let next = match prev {
            Some((hp, gp)) if (g - gp).abs() > 0.0 => hs - g * (hs - hp) / (g - gp),
            // Newton on the radius equation for the first correction.
            _ => {
                let x = ys[1];
                let rate = x * (1.0 - x) * (1.0 - x);
                hs - g / rate
            }
        };
        prev = Some((hs, g));
        hs = next.clamp(h.min(0.0), h.max(0.0));
    }
    let g = best.1[1] - target;
    if g.abs() > 1e-12 {
        return Err(Error::NonFinite { at: target });
    }
    // Snap the radius exactly onto the section.
    Ok((best.0, [best.1[0], target]))
}

/// Convenience wrapper: integrates an [`AngularFlow`] and tags the result.
pub fn integrate_flow(
    flow: &AngularFlow<'_>,
    start: AngularState,
    direction: Direction,
    stop_radius: f64,
    sections: &[f64],
    ctl: &StepControl,
) -> Result<Trajectory> {
    let mut traj = integrate(|st| flow.rhs(st), start, direction, stop_radius, sections, ctl)?;
    traj.params = Some(flow.params);
    traj.system = flow.params.system_tag().to_string();
    Ok(traj)
}
