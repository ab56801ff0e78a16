//! Boundary manifolds of the angular flows.
//!
//! Regularity at the origin is the unstable manifold of `(0, 0)`; decay at
//! infinity is the center manifold of `(1, arctan(−√E))`. Both are computed
//! as lifted trajectories so that branch indices (winding) survive.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::odeflow::{
    integrate_flow, physical_to_radius, radius_to_physical, AngularFlow, AngularState, Direction, StepControl,
    Trajectory,
};

/// Default radius offset of both seeds.
pub const DEFAULT_SEED_OFFSET: f64 = 1e-6;

/// Largest change of a section angle tolerated when the seed offset is
/// halved.
pub const SEED_HALVING_TOL: f64 = 1e-8;

/// Default tolerance of the far-field cut used by the center seed.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

const MAX_RESEEDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSide {
    Radius0Unstable,
    Radius1Center,
}

/// First-order seed on a boundary manifold: the state at radius offset `δ`
/// from the boundary is `base_angle + slope · δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSeed {
    pub side: SeedSide,
    pub radius_offset: f64,
    pub base_angle: f64,
    pub slope: f64,
}

impl ManifoldSeed {
    pub fn state(&self) -> AngularState {
        let angle = self.base_angle + self.slope * self.radius_offset;
        let radius = match self.side {
            SeedSide::Radius0Unstable => self.radius_offset,
            SeedSide::Radius1Center => 1.0 - self.radius_offset,
        };
        AngularState { angle, radius }
    }
}

fn check_offset(offset: f64) -> Result<()> {
    if !(offset > 0.0 && offset < 1e-2) {
        return Err(Error::InvalidArgument(format!("seed offset must lie in (0, 1e-2), got {offset}")));
    }
    Ok(())
}

/// Slope of the unstable eigenvector of `(0, 0)`.
///
/// The linearization there is `[[−2, E + V(0)], [0, 1]]`, so the eigenvector
/// of the eigenvalue `1` has `dθ/dσ = (E + V(0)) / 3`, where `V(0)` is the
/// sum of the potential terms the flow includes.
pub fn unstable_slope(flow: &AngularFlow<'_>) -> f64 {
    (flow.params.eigen_param + flow.potential_at_physical(0.0)) / 3.0
}

/// Seed on the unstable manifold of the regular origin.
pub fn seed_unstable(flow: &AngularFlow<'_>, offset: f64) -> Result<ManifoldSeed> {
    check_offset(offset)?;
    Ok(ManifoldSeed { side: SeedSide::Radius0Unstable, radius_offset: offset, base_angle: 0.0, slope: unstable_slope(flow) })
}

/// Angle of the free decaying solution `e^{−kx}/x` at physical radius `x`.
pub fn free_decaying_angle(eigen_param: f64, x: f64) -> f64 {
    (-eigen_param.max(0.0).sqrt() - 1.0 / x).atan()
}

/// Seed on the center manifold of `(1, arctan(−√E))` at physical radius
/// `x_seed`, using the exact free decaying solution.
pub fn seed_center(eigen_param: f64, x_seed: f64) -> Result<ManifoldSeed> {
    if !(eigen_param.is_finite() && eigen_param >= 0.0) {
        return Err(Error::InvalidArgument(format!("center seed needs eigen_param >= 0, got {eigen_param}")));
    }
    if !(x_seed.is_finite() && x_seed > 0.0) {
        return Err(Error::InvalidArgument(format!("center seed radius must be positive, got {x_seed}")));
    }
    let offset = 1.0 / (1.0 + x_seed);
    let base_angle = (-eigen_param.sqrt()).atan();
    let slope = (free_decaying_angle(eigen_param, x_seed) - base_angle) / offset;
    Ok(ManifoldSeed { side: SeedSide::Radius1Center, radius_offset: offset, base_angle, slope })
}

/// Smallest radius of the doubling ladder `4, 8, 16, …` beyond which the
/// flow's potential no longer moves the decaying angle by more than
/// `tail_tol`, capped at `max_radius`. The criterion is
/// `|V(R)| · min(R, 1/√E) ≤ tail_tol`.
pub fn tail_radius(flow: &AngularFlow<'_>, tail_tol: f64, max_radius: f64) -> f64 {
    let k = flow.params.eigen_param.max(0.0).sqrt();
    let mut r = 4.0;
    while r < max_radius {
        let reach = if k > 0.0 { r.min(1.0 / k) } else { r };
        let v = flow.potential_at_physical(r);
        if v.is_finite() && v.abs() * reach <= tail_tol {
            return r;
        }
        r *= 2.0;
    }
    max_radius
}

/// Angle in the covering space with its branch index: `value − k π ∈ [−π/2, π/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftedAngle {
    pub value: f64,
    pub k: i64,
}

impl LiftedAngle {
    pub fn new(value: f64) -> Self {
        Self { value, k: branch_index(value) }
    }

    /// The angle reduced into `[−π/2, π/2)`.
    pub fn reduced(&self) -> f64 {
        self.value - self.k as f64 * PI
    }
}

/// Branch `k` with `value − kπ ∈ [−π/2, π/2)`.
pub fn branch_index(value: f64) -> i64 {
    ((value + FRAC_PI_2) / PI).floor() as i64
}

/// `x` reduced modulo π into `[−π/2, π/2)`.
pub fn reduce_angle(x: f64) -> f64 {
    (x + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2
}

/// Unwraps angles known only modulo π into a continuous lift starting at
/// the first sample's reduced value.
pub fn lift(raw: &[f64]) -> Result<Vec<LiftedAngle>> {
    let mut out: Vec<LiftedAngle> = Vec::with_capacity(raw.len());
    let Some(&first) = raw.first() else {
        return Ok(out);
    };
    if !first.is_finite() {
        return Err(Error::InvalidArgument("non-finite angle in lift".into()));
    }
    let mut current = reduce_angle(first);
    out.push(LiftedAngle::new(current));
    for w in raw.windows(2) {
        if !w[1].is_finite() {
            return Err(Error::InvalidArgument("non-finite angle in lift".into()));
        }
        let step = reduce_angle(w[1] - w[0]);
        // A reduced jump of ±π/2 cannot be told apart from its opposite.
        if step.abs() >= FRAC_PI_2 - 1e-12 {
            return Err(Error::LiftViolation { jump: step });
        }
        current += step;
        out.push(LiftedAngle::new(current));
    }
    Ok(out)
}

/// Checks that consecutive stored angles of a trajectory form a valid lift.
pub fn check_lift(traj: &Trajectory) -> Result<()> {
    for w in traj.samples.windows(2) {
        let jump = w[1].state.angle - w[0].state.angle;
        if !(jump.abs() < FRAC_PI_2) {
            return Err(Error::LiftViolation { jump });
        }
    }
    Ok(())
}

/// Outer angle ψ (with `tan ψ = p_ρ / p`) to inner angle θ (`tan θ = p_r / p`)
/// via `tan θ = ε tan ψ`, staying on ψ's branch.
pub fn convert_outer_to_inner_angle(psi: LiftedAngle, epsilon: f64) -> LiftedAngle {
    let k = psi.k;
    let reduced = psi.value - k as f64 * PI;
    let theta = if reduced <= -FRAC_PI_2 {
        -FRAC_PI_2
    } else {
        (epsilon * reduced.tan()).atan()
    };
    LiftedAngle { value: k as f64 * PI + theta, k }
}

/// Options shared by the manifold computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldOptions {
    /// Radius offset of the unstable seed from `0`.
    pub seed_offset: f64,
    /// Radius offset `1 − τ` that bounds the center seed; the seed sits at
    /// the smaller of this and the tail radius.
    pub center_offset: f64,
    /// Far-field cut for the center seed; `0` seeds at `1 − center_offset`.
    pub tail_tol: f64,
    /// Re-run every trajectory with halved seed offsets and fail when a
    /// section angle moves by more than [`SEED_HALVING_TOL`].
    pub paranoid: bool,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        Self { seed_offset: DEFAULT_SEED_OFFSET, center_offset: DEFAULT_SEED_OFFSET, tail_tol: DEFAULT_TAIL_TOL, paranoid: false }
    }
}

impl ManifoldOptions {
    pub fn validate(&self) -> Result<()> {
        check_offset(self.seed_offset)?;
        check_offset(self.center_offset)?;
        if !(self.tail_tol >= 0.0 && self.tail_tol.is_finite()) {
            return Err(Error::InvalidArgument("tail_tol must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Largest angle difference between two runs at matching sections and at
/// the end point.
fn section_change(a: &Trajectory, b: &Trajectory) -> f64 {
    let mut change = (a.last().state.angle - b.last().state.angle).abs();
    for e in &a.events {
        if let Some(f) = b.event_at(e.section) {
            change = change.max((e.state.angle - f.state.angle).abs());
        }
    }
    change
}

/// Lifted trajectory of the unstable manifold of `(0, 0)` from its seed to
/// `stop_radius`, with events at `sections`.
pub fn unstable_trajectory(
    flow: &AngularFlow<'_>,
    stop_radius: f64,
    sections: &[f64],
    opts: &ManifoldOptions,
    ctl: &StepControl,
) -> Result<Trajectory> {
    opts.validate()?;
    let run = |offset: f64| -> Result<Trajectory> {
        let seed = seed_unstable(flow, offset)?;
        if stop_radius <= offset {
            return Err(Error::InvalidArgument(format!("stop radius {stop_radius} lies below the seed offset {offset}")));
        }
        let traj = integrate_flow(flow, seed.state(), Direction::Forward, stop_radius, sections, ctl)?;
        check_lift(&traj)?;
        Ok(traj)
    };
    let traj = run(opts.seed_offset)?;
    if opts.paranoid {
        let half = run(0.5 * opts.seed_offset)?;
        let change = section_change(&traj, &half);
        if change > SEED_HALVING_TOL {
            return Err(Error::SeedSensitive { change });
        }
    }
    Ok(traj)
}

/// Lifted trajectory of the center manifold of `(1, arctan(−√E))`,
/// integrated backward to `stop_radius` with events at `sections`.
///
/// The seed sits where the potential has become negligible (see
/// [`tail_radius`]), on the exact free decaying solution, but never closer
/// to the stop radius or a section than a factor two in physical radius. If
/// the backward run drifts away from the free solution inside the seeding
/// region, it is reseeded further out up to three times.
pub fn center_trajectory_backward(
    flow: &AngularFlow<'_>,
    stop_radius: f64,
    sections: &[f64],
    opts: &ManifoldOptions,
    ctl: &StepControl,
) -> Result<Trajectory> {
    opts.validate()?;
    let e = flow.params.eigen_param;
    if !(e >= 0.0) {
        return Err(Error::InvalidArgument(format!("center manifold needs eigen_param >= 0, got {e}")));
    }
    let max_radius = 1.0 / opts.center_offset - 1.0;
    if !(stop_radius > 0.0 && stop_radius < physical_to_radius(max_radius)) {
        return Err(Error::InvalidArgument(format!("stop radius {stop_radius} must lie in (0, 1 - center offset)")));
    }
    let outermost = sections.iter().copied().fold(stop_radius, f64::max);
    let floor = (2.0 * radius_to_physical(outermost)).min(max_radius);
    let tail = if opts.tail_tol > 0.0 { tail_radius(flow, opts.tail_tol, max_radius) } else { max_radius };

    let run = |x_seed: f64| -> Result<(Trajectory, f64)> {
        let seed = seed_center(e, x_seed)?;
        let traj = integrate_flow(flow, seed.state(), Direction::Backward, stop_radius, sections, ctl)?;
        check_lift(&traj)?;
        // Within [x_seed/2, x_seed] the potential is negligible, so the run
        // must track the free decaying angle.
        let drift = traj
            .samples
            .iter()
            .take_while(|s| radius_to_physical(s.state.radius) >= 0.5 * x_seed)
            .map(|s| (s.state.angle - free_decaying_angle(e, radius_to_physical(s.state.radius))).abs())
            .fold(0.0, f64::max);
        Ok((traj, drift))
    };

    let mut x_seed = tail.max(floor);
    let mut accepted = None;
    for _ in 0..=MAX_RESEEDS {
        let (traj, drift) = run(x_seed)?;
        if drift <= 1e-3 {
            accepted = Some((traj, x_seed));
            break;
        }
        if x_seed >= max_radius {
            break;
        }
        x_seed = (4.0 * x_seed).min(max_radius);
    }
    let Some((traj, x_seed)) = accepted else {
        return Err(Error::CenterSeedDiverged { retries: MAX_RESEEDS });
    };
    if opts.paranoid && x_seed < max_radius {
        let (further, _) = run((2.0 * x_seed).min(max_radius))?;
        let change = section_change(&traj, &further);
        if change > SEED_HALVING_TOL {
            return Err(Error::SeedSensitive { change });
        }
    }
    Ok(traj)
}

/// Power-law fit of the model-inner angle at `λ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayDiagnostic {
    /// Fitted exponent of `|θ − nπ|` against `r`.
    pub slope: f64,
    pub r_range: (f64, f64),
    pub samples: Vec<(f64, f64)>,
    /// `|slope + 2| ≤ 0.3`: consistent with no zero-energy resonance.
    pub within_tolerance: bool,
    /// Slope close to `−1`, the signature of a zero-energy resonance.
    pub resonance_suspected: bool,
}

/// Log-log slope of the distance of `θ₀(r)` to the nearest multiple of π on
/// `[r_lo, r_hi]` for the flow at `E = 0`. Without a zero-energy resonance
/// the solution is `c + d/r` with `c ≠ 0`, so the angle decays like `r⁻²`.
pub fn decay_slope_diagnostic(
    flow: &AngularFlow<'_>,
    r_lo: f64,
    r_hi: f64,
    n: usize,
    opts: &ManifoldOptions,
    ctl: &StepControl,
) -> Result<DecayDiagnostic> {
    if !(r_lo > 0.0 && r_hi > r_lo && n >= 2) {
        return Err(Error::InvalidArgument("decay diagnostic needs 0 < r_lo < r_hi and n >= 2".into()));
    }
    let flow = flow.with_eigen_param(0.0);
    let radii: Vec<f64> = (0..n).map(|i| r_lo * (r_hi / r_lo).powf(i as f64 / (n - 1) as f64)).collect();
    let sections: Vec<f64> = radii.iter().map(|&r| physical_to_radius(r)).collect();
    let stop = physical_to_radius(r_hi * 1.01);
    let traj = unstable_trajectory(&flow, stop, &sections, opts, ctl)?;
    let mut samples = Vec::with_capacity(n);
    for (&r, &sec) in radii.iter().zip(&sections) {
        let ev = traj.event_at(sec).ok_or(Error::InvalidArgument(format!("section at r = {r} not reached")))?;
        let a = ev.state.angle;
        samples.push((r, (a - (a / PI).round() * PI).abs()));
    }
    let pts: Vec<(f64, f64)> =
        samples.iter().filter(|(_, d)| *d > 0.0).map(|(r, d)| (r.ln(), d.ln())).collect();
    let slope = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    Ok(DecayDiagnostic {
        slope,
        r_range: (r_lo, r_hi),
        samples,
        within_tolerance: (slope + 2.0).abs() <= 0.3,
        resonance_suspected: (slope + 1.0).abs() <= 0.3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odeflow::FlowParams;
    use crate::potentials::{CompositePotential, PotentialSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scenario1(eps: f64) -> CompositePotential {
        CompositePotential::new(
            PotentialSpec::Gaussian { a: -2.8, b: 1.0 },
            PotentialSpec::Gaussian { a: -30.0, b: 1.0 },
            eps,
        )
        .unwrap()
    }

    fn free() -> CompositePotential {
        CompositePotential::new(PotentialSpec::Zero, PotentialSpec::Zero, 0.1).unwrap()
    }

    #[test]
    fn unstable_seed_slopes() {
        let pots = free();
        let flow = AngularFlow::new(FlowParams::model_inner(0.0, 0.1), &pots).unwrap();
        let s = seed_unstable(&flow, 1e-6).unwrap().state();
        // p ≡ 1 solves the free problem at E = 0, so the angle stays 0.
        assert_eq!(s.angle, 0.0);
        assert_eq!(s.radius, 1e-6);

        let pots = scenario1(0.1);
        let flow = AngularFlow::new(FlowParams::model_inner(0.0, 0.1), &pots).unwrap();
        assert_relative_eq!(unstable_slope(&flow), -2.8 / 3.0, max_relative = 1e-15);
        let flow = AngularFlow::new(FlowParams::full_inner(0.5, 0.1), &pots).unwrap();
        assert_relative_eq!(unstable_slope(&flow), (0.5 - 2.8 - 0.3) / 3.0, max_relative = 1e-14);
        assert!(seed_unstable(&flow, 0.0).is_err());
        assert!(seed_unstable(&flow, 0.02).is_err());
    }

    #[test]
    fn unstable_seed_is_tangent() {
        // The seed must lie on the invariant line of the linearization: the
        // vector field at the seed is parallel to (slope, 1) up to O(δ).
        let pots = scenario1(0.1);
        let flow = AngularFlow::new(FlowParams::full_inner(0.7, 0.1), &pots).unwrap();
        let seed = seed_unstable(&flow, 1e-5).unwrap();
        let (da, dr) = flow.rhs(seed.state()).unwrap();
        assert!((da / dr - seed.slope).abs() < 1e-3 * seed.slope.abs().max(1.0));
    }

    #[test]
    fn backward_from_seed_is_attracted_to_origin() {
        let pots = scenario1(0.1);
        let flow = AngularFlow::new(FlowParams::model_inner(0.0, 0.1), &pots).unwrap();
        // Off the manifold the angle direction expands like e^{2|Δs|} in
        // reverse, so keep the reverse run short relative to the seed error.
        let seed = seed_unstable(&flow, 1e-6).unwrap().state();
        let traj = integrate_flow(&flow, seed, Direction::Backward, 2e-7, &[], &StepControl::default()).unwrap();
        assert!(traj.last().state.angle.abs() < seed.angle.abs(), "{:?} {:?}", seed, traj.last());
    }

    #[test]
    fn free_unstable_trajectory_has_no_winding() {
        let pots = free();
        for lambda in [0.0, 1e-3, 0.5] {
            let flow = AngularFlow::new(FlowParams::model_inner(lambda, 0.1), &pots).unwrap();
            let traj = unstable_trajectory(&flow, 1.0 - 1e-6, &[], &ManifoldOptions::default(), &StepControl::default())
                .unwrap();
            for s in &traj.samples {
                assert!(s.state.angle > -FRAC_PI_2 && s.state.angle <= FRAC_PI_2, "{lambda}: {:?}", s);
            }
            if lambda == 0.0 {
                assert!(traj.samples.iter().all(|s| s.state.angle == 0.0));
            }
        }
    }

    #[test]
    fn seed_halving_is_robust() {
        let pots = scenario1(0.1);
        let flow = AngularFlow::new(FlowParams::full_inner(0.05, 0.1), &pots).unwrap();
        let opts = ManifoldOptions { paranoid: true, ..Default::default() };
        let traj = unstable_trajectory(&flow, 0.99, &[0.5, 0.9], &opts, &StepControl::default()).unwrap();
        assert_eq!(traj.events.len(), 2);
    }

    #[test]
    fn section_angle_continuous_in_lambda() {
        let pots = scenario1(0.1);
        let ctl = StepControl::default();
        let angles: Vec<f64> = (0..=20)
            .map(|i| {
                let flow = AngularFlow::new(FlowParams::full_inner(0.01 * i as f64, 0.1), &pots).unwrap();
                let t = unstable_trajectory(&flow, 0.95, &[0.9], &ManifoldOptions::default(), &ctl).unwrap();
                t.event_at(0.9).unwrap().state.angle
            })
            .collect();
        for w in angles.windows(2) {
            assert!((w[1] - w[0]).abs() < 0.2, "{angles:?}");
        }
    }

    #[test]
    fn center_free_is_exact() {
        let pots = free();
        for mu in [0.0, 0.3, 4.0] {
            let flow = AngularFlow::new(FlowParams::model_outer(mu, 0.1), &pots).unwrap();
            let traj =
                center_trajectory_backward(&flow, 0.2, &[0.5], &ManifoldOptions::default(), &StepControl::default())
                    .unwrap();
            let x = radius_to_physical(0.5);
            let ev = traj.event_at(0.5).unwrap();
            assert!((ev.state.angle - free_decaying_angle(mu, x)).abs() < 1e-8, "{mu}");
        }
    }

    #[test]
    fn center_free_large_mu_approaches_pole() {
        // e^{-kρ}/ρ: the angle tends to −π/2 as ρ → 0.
        let pots = free();
        let flow = AngularFlow::new(FlowParams::model_outer(25.0, 0.1), &pots).unwrap();
        let traj =
            center_trajectory_backward(&flow, 1e-4, &[], &ManifoldOptions::default(), &StepControl::default()).unwrap();
        let a = traj.last().state.angle;
        assert!((a + FRAC_PI_2).abs() < 2e-3, "{a}");
    }

    #[test]
    fn center_literal_seed_agrees_with_tail_seed() {
        let pots = scenario1(0.1);
        let flow = AngularFlow::new(FlowParams::model_outer(3.0, 0.1), &pots).unwrap();
        let ctl = StepControl::default();
        let a = center_trajectory_backward(&flow, 0.3, &[], &ManifoldOptions::default(), &ctl).unwrap();
        let literal = ManifoldOptions { tail_tol: 0.0, center_offset: 1e-4, ..Default::default() };
        let b = center_trajectory_backward(&flow, 0.3, &[], &literal, &ctl).unwrap();
        assert!((a.last().state.angle - b.last().state.angle).abs() < 1e-6);
    }

    #[test]
    fn center_rejects_negative_energy() {
        let pots = free();
        let flow = AngularFlow::new(FlowParams::model_outer(-1.0, 0.1), &pots).unwrap();
        assert!(center_trajectory_backward(&flow, 0.3, &[], &ManifoldOptions::default(), &StepControl::default())
            .is_err());
    }

    #[test]
    fn lift_examples() {
        let c = lift(&[0.3; 5]).unwrap();
        assert!(c.iter().all(|a| (a.value - 0.3).abs() < 1e-15 && a.value == c[0].value));
        // Winding down through −π/2 twice, given modulo π.
        let raw: Vec<f64> = (0..=40).map(|i| -0.1 * i as f64).map(reduce_angle).collect();
        let l = lift(&raw).unwrap();
        for w in l.windows(2) {
            assert!(w[1].value < w[0].value);
        }
        assert!(l[0].value - l.last().unwrap().value > PI);
        assert!(lift(&[0.0, FRAC_PI_2]).is_err());
        assert!(lift(&[]).unwrap().is_empty());
    }

    #[test]
    fn branch_index_convention() {
        assert_eq!(branch_index(0.0), 0);
        assert_eq!(branch_index(-FRAC_PI_2), 0);
        assert_eq!(branch_index(FRAC_PI_2), 1);
        assert_eq!(branch_index(-PI), -1);
        assert_eq!(branch_index(3.0 * PI + 0.1), 3);
    }

    #[test]
    fn conversion_examples() {
        for v in [-2.0, -0.3, 0.0, 1.0, 7.5] {
            let a = LiftedAngle::new(v);
            assert_relative_eq!(convert_outer_to_inner_angle(a, 1.0).value, v, max_relative = 1e-14, epsilon = 1e-15);
        }
        for k in -3..=3 {
            let kp = k as f64 * PI;
            assert_eq!(convert_outer_to_inner_angle(LiftedAngle::new(kp), 0.1).value, kp);
            let pole = LiftedAngle::new(kp - FRAC_PI_2);
            assert_eq!(convert_outer_to_inner_angle(pole, 0.1).value, kp - FRAC_PI_2);
        }
        // Just below the upper pole.
        let near = LiftedAngle::new(FRAC_PI_2 - 1e-12);
        assert!((convert_outer_to_inner_angle(near, 0.1).value - FRAC_PI_2).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn lift_round_trip(start in -10.0f64..10.0, steps in proptest::collection::vec(-1.4f64..1.4, 1..50)) {
            let mut truth = vec![start];
            for s in &steps {
                truth.push(truth.last().unwrap() + s);
            }
            let raw: Vec<f64> = truth.iter().map(|&x| reduce_angle(x)).collect();
            let l = lift(&raw).unwrap();
            let shift = l[0].value - truth[0];
            for (a, t) in l.iter().zip(&truth) {
                prop_assert!((a.value - t - shift).abs() < 1e-9);
                prop_assert!((reduce_angle(a.value) - reduce_angle(*t)).abs() < 1e-9 || (reduce_angle(a.value) - reduce_angle(*t)).abs() > PI - 1e-9);
            }
        }

        #[test]
        fn conversion_keeps_branch_and_order(k in -5i64..5, x in -1.5f64..1.5, dx in 0.0f64..0.05, eps in 0.01f64..1.0) {
            let a = LiftedAngle::new(k as f64 * PI + x);
            let b = LiftedAngle::new(k as f64 * PI + (x + dx).min(1.57));
            let ca = convert_outer_to_inner_angle(a, eps);
            let cb = convert_outer_to_inner_angle(b, eps);
            prop_assert_eq!(ca.k, a.k);
            prop_assert_eq!(branch_index(ca.value), a.k);
            prop_assert!(cb.value >= ca.value);
        }
    }
}
