//! Eigenvalue counts and locations from the manifold trajectories.
//!
//! * [`count_positive_eigenvalues`] winds the unstable manifold across the
//!   whole compactified line at a small eigenvalue floor.
//! * [`find_gap_eigenvalues`] locates the `O(ε²)` eigenvalues as zeros of the
//!   threshold matching function `Σᵏ(μ, ε)`.
//! * [`find_order_one_eigenvalues`] shoots for the `O(1)` eigenvalues on the
//!   inner scale.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::{
    branch_index, center_trajectory_backward, check_lift, convert_outer_to_inner_angle, reduce_angle, tail_radius,
    unstable_trajectory, LiftedAngle, ManifoldOptions,
};
use crate::odeflow::{physical_to_radius, AngularFlow, FlowParams, StepControl, Trajectory};
use crate::potentials::{CompositePotential, Operator};

/// Default `α`: inside `(−1/2, 0)` and close to `−1/2`.
pub const DEFAULT_ALPHA: f64 = -0.45;

/// Threshold sections separating the inner and outer scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub epsilon: f64,
    pub alpha: f64,
    /// `ε^α`
    pub r_eps: f64,
    /// `ε^{α+1}`
    pub rho_eps: f64,
    /// `ε^α + α ln ε`
    pub s_eps: f64,
    /// `ε^{α−1} + (α − 1) ln ε`
    pub t_eps: f64,
    pub sigma_eps: f64,
    /// `ε^{α−1} / (1 + ε^{α−1})`
    pub tau_eps: f64,
    /// `ρ_ε / (1 + ρ_ε)`: the outer section at the same physical radius as
    /// `σ_ε`. This is where the two sides of the matching condition meet.
    pub tau_match: f64,
    /// `ρ_ε + ln ρ_ε`, the outer time at [`Thresholds::tau_match`].
    pub t_match: f64,
}

impl Thresholds {
    pub fn new(epsilon: f64, alpha: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(alpha > -0.5 && alpha < 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (-1/2, 0), got {alpha}")));
        }
        let r_eps = epsilon.powf(alpha);
        let tau_phys = epsilon.powf(alpha - 1.0);
        let rho_eps = epsilon.powf(alpha + 1.0);
        Ok(Self {
            epsilon,
            alpha,
            r_eps,
            rho_eps,
            s_eps: r_eps + alpha * epsilon.ln(),
            t_eps: tau_phys + (alpha - 1.0) * epsilon.ln(),
            sigma_eps: r_eps / (1.0 + r_eps),
            tau_eps: tau_phys / (1.0 + tau_phys),
            tau_match: rho_eps / (1.0 + rho_eps),
            t_match: rho_eps + rho_eps.ln(),
        })
    }

    /// `(4 + γ)(−α) > 2 + γ/4`, the condition on α that makes the plateau
    /// estimates close for decay exponent γ.
    pub fn footnote_holds(&self, gamma: f64) -> bool {
        (4.0 + gamma) * (-self.alpha) > 2.0 + gamma / 4.0
    }

    pub fn warnings(&self, gamma: Option<f64>) -> Vec<String> {
        match gamma {
            Some(g) if !self.footnote_holds(g) => vec![format!(
                "alpha = {} violates (4 + gamma)(-alpha) > 2 + gamma/4 for gamma = {g}",
                self.alpha
            )],
            _ => Vec::new(),
        }
    }
}

/// Integrator and manifold settings shared by every solver here.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub step: StepControl,
    pub manifold: ManifoldOptions,
}

/// The flow whose unstable manifold winds once per eigenvalue of `which`
/// above `eigen_param`. `Δ − V₁` is taken on its own scale.
pub fn flow_params(which: Operator, eigen_param: f64, epsilon: f64) -> FlowParams {
    match which {
        Operator::V0Only => FlowParams::model_inner(eigen_param, epsilon),
        Operator::V1Only => FlowParams::model_outer(eigen_param, epsilon),
        Operator::Full => FlowParams::full_inner(eigen_param, epsilon),
    }
}

/// An eigenvalue count read off a lifted trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub m: usize,
    pub theta_start: f64,
    pub theta_end: f64,
    pub eigen_param_floor: f64,
    pub system: String,
    pub end_radius: f64,
    /// The end angle sits within `10⁻³ π` of a zero of the solution.
    pub near_degenerate: bool,
    /// The far field was closed analytically instead of integrated.
    pub tail_closure: bool,
    /// Counts at the floor and its halvings, in that order.
    pub floor_counts: Vec<(f64, usize)>,
    /// The count did not change under floor halving.
    pub stable: bool,
    pub warnings: Vec<String>,
}

fn near_degenerate(theta_end: f64) -> bool {
    FRAC_PI_2 - reduce_angle(theta_end).abs() < 1e-3 * PI
}

/// Number of zeros of the solution encoded by a lifted trajectory running
/// from near radius 0 to near radius 1.
///
/// Each zero of `p` is a downward crossing of an odd multiple of `π/2`, so
/// the count is the drop in branch index between the end points. The end
/// angle tends to `arctan(√E) − mπ`; the plain `⌊(θ_start − θ_end)/π⌋`
/// would miss the last branch whenever that offset is positive.
pub fn winding_count(traj: &Trajectory) -> Result<CountResult> {
    check_lift(traj)?;
    let start = traj.first().state;
    let end = traj.last().state;
    if !(start.radius < 1e-2 && end.radius > 0.99) {
        return Err(Error::InvalidArgument(format!(
            "trajectory must span the radius from near 0 to near 1, got [{}, {}]",
            start.radius, end.radius
        )));
    }
    let drop = branch_index(start.angle) - branch_index(end.angle);
    if drop < 0 {
        return Err(Error::InvalidArgument(format!("angle wound upward by {} branches", -drop)));
    }
    let floor = traj.params.map(|p| p.eigen_param).unwrap_or(f64::NAN);
    Ok(CountResult {
        m: drop as usize,
        theta_start: start.angle,
        theta_end: end.angle,
        eigen_param_floor: floor,
        system: traj.system.clone(),
        end_radius: end.radius,
        near_degenerate: near_degenerate(end.angle),
        tail_closure: false,
        floor_counts: vec![(floor, drop as usize)],
        stable: true,
        warnings: Vec::new(),
    })
}

/// Settings of [`count_positive_eigenvalues`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountOptions {
    pub eigen_floor: f64,
    /// How often the floor is halved to test stability.
    pub halvings: usize,
    /// The run ends at radius `1 − end_offset`.
    pub end_offset: f64,
    pub solver: SolverOptions,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self { eigen_floor: 1e-6, halvings: 2, end_offset: 1e-6, solver: SolverOptions::default() }
    }
}

/// Beyond this `√E · r_end` the far field is closed analytically.
const DIRECT_REACH: f64 = 1e4;

fn count_at(flow: &AngularFlow<'_>, end_offset: f64, solver: &SolverOptions) -> Result<CountResult> {
    let e = flow.params.eigen_param;
    let k = e.max(0.0).sqrt();
    let r_end = 1.0 / end_offset - 1.0;
    let run = |ctl: &StepControl| -> Result<CountResult> {
        if k * r_end <= DIRECT_REACH {
            let traj = unstable_trajectory(flow, 1.0 - end_offset, &[], &solver.manifold, ctl)?;
            return winding_count(&traj);
        }
        // Integrate to where the potential is negligible; beyond it the
        // solution is a e^{-kr}/r + b e^{kr}/r and has one more zero exactly
        // when its angle lies below the decaying one on the same branch.
        let x_tail = tail_radius(flow, solver.manifold.tail_tol.max(1e-14), r_end);
        let traj = unstable_trajectory(flow, physical_to_radius(x_tail), &[], &solver.manifold, ctl)?;
        check_lift(&traj)?;
        let start = traj.first().state;
        let end = traj.last().state;
        let decaying = (-k - 1.0 / x_tail).atan();
        let extra = i64::from(reduce_angle(end.angle) < decaying);
        let drop = branch_index(start.angle) - branch_index(end.angle) + extra;
        Ok(CountResult {
            m: drop.max(0) as usize,
            theta_start: start.angle,
            theta_end: end.angle,
            eigen_param_floor: e,
            system: traj.system.clone(),
            end_radius: end.radius,
            near_degenerate: (reduce_angle(end.angle) - decaying).abs() < 1e-3 * PI,
            tail_closure: true,
            floor_counts: vec![(e, drop.max(0) as usize)],
            stable: true,
            warnings: Vec::new(),
        })
    };
    let first = run(&solver.step)?;
    if !first.near_degenerate {
        return Ok(first);
    }
    let mut retry = run(&solver.step.tightened(1e-2))?;
    if retry.near_degenerate {
        retry.warnings.push("end angle within 1e-3*pi of a solution zero even at tightened tolerances".into());
    }
    Ok(retry)
}

/// Number of positive eigenvalues of `which`, from the winding of its
/// unstable manifold at the eigenvalue floor. The floor is halved
/// `opts.halvings` times; a change of the count marks the result unstable
/// (an eigenvalue or resonance at the threshold).
pub fn count_positive_eigenvalues(pots: &CompositePotential, which: Operator, opts: &CountOptions) -> Result<CountResult> {
    if !(opts.eigen_floor > 0.0 && opts.eigen_floor.is_finite()) {
        return Err(Error::InvalidArgument(format!("eigen_floor must be positive, got {}", opts.eigen_floor)));
    }
    if !(opts.end_offset > 0.0 && opts.end_offset < 1e-2) {
        return Err(Error::InvalidArgument(format!("end_offset must lie in (0, 1e-2), got {}", opts.end_offset)));
    }
    let floors: Vec<f64> = (0..=opts.halvings).map(|j| opts.eigen_floor / 2f64.powi(j as i32)).collect();
    let results: Vec<CountResult> = floors
        .par_iter()
        .map(|&f| {
            let flow = AngularFlow::new(flow_params(which, f, pots.epsilon), pots)?;
            count_at(&flow, opts.end_offset, &opts.solver)
        })
        .collect::<Result<_>>()?;
    let mut out = results[0].clone();
    out.floor_counts = results.iter().map(|r| (r.eigen_param_floor, r.m)).collect();
    out.stable = results.iter().all(|r| r.m == out.m);
    for r in &results[1..] {
        out.warnings.extend(r.warnings.iter().cloned());
    }
    if !out.stable {
        out.warnings.push(format!(
            "count changes under floor halving {:?}: eigenvalue or zero-energy resonance near the threshold",
            out.floor_counts
        ));
    }
    Ok(out)
}

/// Both sides of the matching condition at one `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPoint {
    pub mu: f64,
    /// Inner unstable angle at `σ_ε`.
    pub theta_minus: f64,
    /// Outer center angle at `ρ = ρ_ε`, converted to the inner angle.
    pub theta_plus: f64,
    /// `Σ⁰ = θ̃₋ − θ̃₊`.
    pub sigma0: f64,
}

impl MatchPoint {
    /// `Σᵏ = Σ⁰ + kπ`.
    pub fn sigma_k(&self, k: i64) -> f64 {
        self.sigma0 + k as f64 * PI
    }
}

/// Evaluates both trajectories of the matching condition at `μ`.
pub fn match_point(pots: &CompositePotential, mu: f64, th: &Thresholds, solver: &SolverOptions) -> Result<MatchPoint> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("mu must be finite and non-negative, got {mu}")));
    }
    let eps = pots.epsilon;
    if (th.epsilon - eps).abs() > 1e-15 * eps {
        return Err(Error::InvalidArgument("thresholds and potentials use different epsilon".into()));
    }
    let inner = AngularFlow::new(FlowParams::full_inner(eps * eps * mu, eps), pots)?;
    let minus = unstable_trajectory(&inner, th.sigma_eps, &[], &solver.manifold, &solver.step)?;
    let outer = AngularFlow::new(FlowParams::full_outer(mu, eps), pots)?;
    let plus = center_trajectory_backward(&outer, th.tau_match, &[], &solver.manifold, &solver.step)?;
    let theta_minus = minus.last().state.angle;
    let theta_plus = convert_outer_to_inner_angle(LiftedAngle::new(plus.last().state.angle), eps).value;
    Ok(MatchPoint { mu, theta_minus, theta_plus, sigma0: theta_minus - theta_plus })
}

/// `Σᵏ(μ, ε)`.
pub fn mismatch_sigma(
    pots: &CompositePotential,
    mu: f64,
    k: i64,
    th: &Thresholds,
    solver: &SolverOptions,
) -> Result<f64> {
    Ok(match_point(pots, mu, th, solver)?.sigma_k(k))
}

/// `1.25 · sup V₁₋`, above every eigenvalue of `Δ − V₁`.
pub fn default_mu_max(pots: &CompositePotential) -> f64 {
    1.25 * pots.v1.sup_negative_part()
}

/// A zero of `Σᵏ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEigenvalue {
    pub mu_hat: f64,
    pub lambda_hat: f64,
    pub k: i64,
    pub bracket: (f64, f64),
    pub residual: f64,
    /// Sign of `Σᵏ(μ_hi) − Σᵏ(μ_lo)`.
    pub slope_positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapOptions {
    pub mu_lo: f64,
    /// `None` uses [`default_mu_max`].
    pub mu_max: Option<f64>,
    /// Number of grid intervals.
    pub n: usize,
    pub mu_tol: f64,
    pub solver: SolverOptions,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self { mu_lo: 0.0, mu_max: None, n: 512, mu_tol: 1e-10, solver: SolverOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSearch {
    pub epsilon: f64,
    pub mu_range: (f64, f64),
    pub thresholds: Thresholds,
    pub roots: Vec<GapEigenvalue>,
    /// Grid points whose evaluation failed, with the error text.
    pub failures: Vec<(f64, String)>,
}

impl GapSearch {
    /// Compares the root count with `m(Δ − V₁)`; a mismatch means ε is
    /// outside the regime where every gap eigenvalue comes from `V₁`.
    pub fn regime_check(&self, m_v1: usize) -> Option<String> {
        (self.roots.len() != m_v1).then(|| {
            format!(
                "found {} zeros of the matching function but m(V1) = {m_v1}; epsilon = {} is outside the asymptotic regime",
                self.roots.len(),
                self.epsilon
            )
        })
    }
}

/// Uniform grid of `n + 1` points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Matching function on a grid, evaluated concurrently, in grid order.
pub fn match_curve(
    pots: &CompositePotential,
    mus: &[f64],
    th: &Thresholds,
    solver: &SolverOptions,
) -> Vec<Result<MatchPoint>> {
    mus.par_iter().map(|&mu| match_point(pots, mu, th, solver)).collect()
}

/// Integers `k` for which `s + kπ` changes sign between `a` and `b`
/// (zero at `b` included, at `a` excluded).
fn crossing_branches(a: f64, b: f64) -> Vec<i64> {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    // lo < −kπ ≤ hi  ⇔  −hi/π ≤ k < −lo/π
    let k_min = (-hi / PI).ceil() as i64;
    let k_max = (-lo / PI).ceil() as i64 - 1;
    (k_min..=k_max)
        .filter(|&k| {
            let fa = a + k as f64 * PI;
            let fb = b + k as f64 * PI;
            (fa < 0.0) != (fb < 0.0) || fb == 0.0
        })
        .collect()
}

/// Bisects `f` on a bracket with a sign change until it is narrower than
/// `tol`.
fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, mut f_lo: f64, tol: f64) -> Result<(f64, f64)> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if (fm < 0.0) == (f_lo < 0.0) && fm != 0.0 {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Zeros of `Σᵏ(·, ε)` over all branches on `[mu_lo, mu_max]`: grid scan,
/// then bisection of every bracket.
pub fn find_gap_eigenvalues(pots: &CompositePotential, th: &Thresholds, opts: &GapOptions) -> Result<GapSearch> {
    let mu_max = opts.mu_max.unwrap_or_else(|| default_mu_max(pots));
    if !(opts.mu_lo >= 0.0 && mu_max > opts.mu_lo && opts.n >= 2) {
        return Err(Error::InvalidArgument(format!(
            "gap search needs 0 <= mu_lo < mu_max and n >= 2, got [{}, {mu_max}], n = {}",
            opts.mu_lo, opts.n
        )));
    }
    let mus = uniform_grid(opts.mu_lo, mu_max, opts.n);
    let curve = match_curve(pots, &mus, th, &opts.solver);
    let mut failures = Vec::new();
    let mut points = Vec::with_capacity(curve.len());
    for (mu, r) in mus.iter().zip(curve) {
        match r {
            Ok(p) => points.push(Some(p)),
            Err(e) => {
                failures.push((*mu, e.to_string()));
                points.push(None);
            }
        }
    }
    let mut brackets = Vec::new();
    for w in points.windows(2) {
        if let (Some(a), Some(b)) = (w[0], w[1]) {
            for k in crossing_branches(a.sigma0, b.sigma0) {
                brackets.push((a, b, k));
            }
        }
    }
    let eps2 = pots.epsilon * pots.epsilon;
    let mut roots: Vec<GapEigenvalue> = brackets
        .par_iter()
        .map(|&(a, b, k)| {
            let f = |mu: f64| mismatch_sigma(pots, mu, k, th, &opts.solver);
            let (lo, hi) = bisect(f, a.mu, b.mu, a.sigma_k(k), opts.mu_tol)?;
            let mu_hat = 0.5 * (lo + hi);
            let residual = f(mu_hat)?.abs();
            Ok(GapEigenvalue {
                mu_hat,
                lambda_hat: eps2 * mu_hat,
                k,
                bracket: (lo, hi),
                residual,
                slope_positive: b.sigma_k(k) > a.sigma_k(k),
            })
        })
        .collect::<Result<_>>()?;
    roots.sort_by(|x, y| x.mu_hat.total_cmp(&y.mu_hat));
    roots.dedup_by(|x, y| (x.mu_hat - y.mu_hat).abs() < 10.0 * opts.mu_tol);
    Ok(GapSearch { epsilon: pots.epsilon, mu_range: (opts.mu_lo, mu_max), thresholds: *th, roots, failures })
}

/// An `O(1)` eigenvalue located by shooting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderOneEigenvalue {
    pub lambda: f64,
    pub k: i64,
    pub bracket: (f64, f64),
    pub residual: f64,
    /// Within `10⁻⁶` of an end of the search range.
    pub near_endpoint: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrderOneOptions {
    /// `None`: `100 ε² μ_max` for the full operator, `0` otherwise.
    pub lambda_min: Option<f64>,
    /// `None`: `1.25 · sup V₋` of the operator's potential.
    pub lambda_max: Option<f64>,
    pub n: usize,
    /// Compactified radius where the two shots are compared.
    pub match_radius: f64,
    pub lambda_tol: f64,
    pub solver: SolverOptions,
}

impl Default for OrderOneOptions {
    fn default() -> Self {
        Self { lambda_min: None, lambda_max: None, n: 256, match_radius: 0.5, lambda_tol: 1e-10, solver: SolverOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderOneSearch {
    pub operator: Operator,
    pub lambda_range: (f64, f64),
    pub eigenvalues: Vec<OrderOneEigenvalue>,
    pub warnings: Vec<String>,
}

/// `θ₋(λ) − θ₊(λ)` at the match radius: the unstable manifold shot forward
/// from the origin against the center manifold shot backward from infinity,
/// both on the inner scale.
pub fn shooting_mismatch(
    pots: &CompositePotential,
    which: Operator,
    lambda: f64,
    match_radius: f64,
    solver: &SolverOptions,
) -> Result<f64> {
    let flow = AngularFlow::new(flow_params(which, lambda, pots.epsilon), pots)?;
    let minus = unstable_trajectory(&flow, match_radius, &[], &solver.manifold, &solver.step)?;
    let plus = center_trajectory_backward(&flow, match_radius, &[], &solver.manifold, &solver.step)?;
    Ok(minus.last().state.angle - plus.last().state.angle)
}

/// Eigenvalues of `which` in `[λ_min, λ_max]` by grid scan and bisection of
/// the shooting mismatch over all branches.
pub fn find_order_one_eigenvalues(
    pots: &CompositePotential,
    which: Operator,
    opts: &OrderOneOptions,
) -> Result<OrderOneSearch> {
    let lambda_min = opts.lambda_min.unwrap_or(match which {
        Operator::Full => 100.0 * pots.epsilon * pots.epsilon * default_mu_max(pots),
        _ => 0.0,
    });
    let lambda_max = opts.lambda_max.unwrap_or_else(|| 1.25 * which.potential(pots).sup_negative_part());
    if !(opts.match_radius > 0.0 && opts.match_radius < 1.0 && opts.n >= 2 && lambda_min >= 0.0) {
        return Err(Error::InvalidArgument("order-one search needs match_radius in (0, 1), n >= 2, lambda_min >= 0".into()));
    }
    let mut warnings = Vec::new();
    if lambda_max <= lambda_min {
        warnings.push(format!("empty search range [{lambda_min}, {lambda_max}]: no eigenvalues above the gap band"));
        return Ok(OrderOneSearch { operator: which, lambda_range: (lambda_min, lambda_max), eigenvalues: vec![], warnings });
    }
    let grid = uniform_grid(lambda_min, lambda_max, opts.n);
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&l| shooting_mismatch(pots, which, l, opts.match_radius, &opts.solver))
        .collect::<Result<_>>()?;
    let mut brackets = Vec::new();
    for i in 0..opts.n {
        for k in crossing_branches(values[i], values[i + 1]) {
            brackets.push((grid[i], grid[i + 1], values[i] + k as f64 * PI, k));
        }
    }
    let mut eigenvalues: Vec<OrderOneEigenvalue> = brackets
        .par_iter()
        .map(|&(a, b, fa, k)| {
            let f = |l: f64| Ok(shooting_mismatch(pots, which, l, opts.match_radius, &opts.solver)? + k as f64 * PI);
            let (lo, hi) = bisect(f, a, b, fa, opts.lambda_tol)?;
            let lambda = 0.5 * (lo + hi);
            Ok(OrderOneEigenvalue {
                lambda,
                k,
                bracket: (lo, hi),
                residual: f(lambda)?.abs(),
                near_endpoint: (lambda - lambda_min).abs() < 1e-6 || (lambda_max - lambda).abs() < 1e-6,
            })
        })
        .collect::<Result<_>>()?;
    eigenvalues.sort_by(|x, y| y.lambda.total_cmp(&x.lambda));
    for e in eigenvalues.iter().filter(|e| e.near_endpoint) {
        warnings.push(format!("eigenvalue {} lies within 1e-6 of the search range end", e.lambda));
    }
    Ok(OrderOneSearch { operator: which, lambda_range: (lambda_min, lambda_max), eigenvalues, warnings })
}

/// `m(W)` against `m(V₀) + m(V₁)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRuleReport {
    pub epsilon: f64,
    pub m_v0: usize,
    pub m_v1: usize,
    pub m_w: usize,
    pub equal: bool,
    pub v0: CountResult,
    pub v1: CountResult,
    pub w: CountResult,
}

/// Counts all three operators by winding and compares them.
pub fn verify_sum_rule(pots: &CompositePotential, opts: &CountOptions) -> Result<SumRuleReport> {
    let counts: Vec<CountResult> =
        Operator::ALL.par_iter().map(|&op| count_positive_eigenvalues(pots, op, opts)).collect::<Result<_>>()?;
    let [v0, v1, w]: [CountResult; 3] = counts.try_into().expect("three operators");
    Ok(SumRuleReport {
        epsilon: pots.epsilon,
        m_v0: v0.m,
        m_v1: v1.m,
        m_w: w.m,
        equal: w.m == v0.m + v1.m,
        v0,
        v1,
        w,
    })
}
