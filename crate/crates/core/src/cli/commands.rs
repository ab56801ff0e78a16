//! Subcommand bodies. Each returns the process exit code.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use super::config::{scenario_potentials, RunConfig};
use crate::manifolds::{center_trajectory_backward, unstable_trajectory};
use crate::odeflow::{AngularFlow, FlowParams};
use crate::oracle::{oracle_count, oracle_eigenvalues, OracleCount, OracleEigenvalue, OracleOptions, OracleSpectrum};
use crate::potentials::{verify_decay, CompositePotential, DecayReport, Operator};
use crate::spectrum::{
    count_positive_eigenvalues, find_gap_eigenvalues, find_order_one_eigenvalues, match_curve, uniform_grid,
    verify_sum_rule, CountResult, GapSearch, MatchPoint, OrderOneSearch, SumRuleReport, Thresholds,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SUM_RULE: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;

/// Serializes `value` as pretty JSON followed by a newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEntry {
    pub mu: f64,
    pub lambda: f64,
    pub k: i64,
    pub bracket: (f64, f64),
    pub residual: f64,
    pub slope_positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub m_v0: usize,
    pub m_v1: usize,
    pub m_w: usize,
    /// Upper end of the gap band.
    pub lambda_split: f64,
    /// Eigenvalues of the full operator in `(0, λ_split]`.
    pub gap_band_count: usize,
    /// Eigenvalues of the full operator in `(0, ε² μ_max]`, the range of the
    /// matching scan.
    pub matching_range_count: usize,
    pub eigenvalues_w: Vec<OracleEigenvalue>,
}

/// Everything one scenario run produces, as written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: u8,
    pub epsilon: f64,
    pub alpha: f64,
    pub m_v0: usize,
    pub m_v1: usize,
    pub m_w: usize,
    pub sum_rule_holds: bool,
    pub gap_eigenvalues: Vec<GapEntry>,
    /// Gap eigenvalue count equals `m(V₁)`.
    pub gap_count_matches: bool,
    pub o1_eigenvalues: Vec<f64>,
    pub oracle_agreement: bool,
    pub oracle: OracleSummary,
    pub mu_range: (f64, f64),
    pub thresholds: Thresholds,
    pub warnings: Vec<String>,
}

/// Everything the scenario command computes, before any file is written.
pub struct ScenarioRun {
    pub report: ScenarioReport,
    pub sum_rule: SumRuleReport,
    pub gaps: GapSearch,
    pub order_one: OrderOneSearch,
    pub exit_code: i32,
}

/// Counts, gap and `O(1)` eigenvalues, and the oracle cross-check for one
/// configuration.
pub fn run_scenario(cfg: &RunConfig) -> Result<ScenarioRun> {
    let pots = cfg.potentials()?;
    let th = cfg.thresholds()?;
    let sum_rule = verify_sum_rule(&pots, &cfg.count_options())?;
    let gaps = find_gap_eigenvalues(&pots, &th, &cfg.gap_options())?;
    let order_one = find_order_one_eigenvalues(&pots, Operator::Full, &cfg.order_one_options())?;

    let mu_max = gaps.mu_range.1;
    let eps2 = pots.epsilon * pots.epsilon;
    let lambda_split = 100.0 * eps2 * mu_max;
    let oracle = oracle_summary(&pots, cfg, &gaps, lambda_split)?;

    let mut warnings = Vec::new();
    for c in [&sum_rule.v0, &sum_rule.v1, &sum_rule.w] {
        warnings.extend(c.warnings.iter().cloned());
    }
    warnings.extend(gaps.regime_check(sum_rule.m_v1));
    warnings.extend(gaps.failures.iter().map(|(mu, e)| format!("matching failed at mu = {mu}: {e}")));
    warnings.extend(order_one.warnings.iter().cloned());
    if !sum_rule.equal {
        warnings.push(format!(
            "sum rule fails: m(W) = {} but m(V0) + m(V1) = {}",
            sum_rule.m_w,
            sum_rule.m_v0 + sum_rule.m_v1
        ));
    }
    let oracle_agreement =
        oracle.m_v0 == sum_rule.m_v0 && oracle.m_v1 == sum_rule.m_v1 && oracle.m_w == sum_rule.m_w;
    if oracle.matching_range_count != gaps.roots.len() {
        warnings.push(format!(
            "oracle finds {} eigenvalues in (0, eps^2 mu_max] but the matching scan found {}",
            oracle.matching_range_count,
            gaps.roots.len()
        ));
    }
    let exit_code = if !oracle_agreement {
        EXIT_ORACLE
    } else if !sum_rule.equal {
        EXIT_SUM_RULE
    } else {
        EXIT_OK
    };
    let report = ScenarioReport {
        scenario: cfg.scenario.unwrap_or(0),
        epsilon: pots.epsilon,
        alpha: th.alpha,
        m_v0: sum_rule.m_v0,
        m_v1: sum_rule.m_v1,
        m_w: sum_rule.m_w,
        sum_rule_holds: sum_rule.equal,
        gap_eigenvalues: gaps
            .roots
            .iter()
            .map(|g| GapEntry {
                mu: g.mu_hat,
                lambda: g.lambda_hat,
                k: g.k,
                bracket: g.bracket,
                residual: g.residual,
                slope_positive: g.slope_positive,
            })
            .collect(),
        gap_count_matches: gaps.roots.len() == sum_rule.m_v1,
        o1_eigenvalues: order_one.eigenvalues.iter().map(|e| e.lambda).collect(),
        oracle_agreement,
        oracle,
        mu_range: gaps.mu_range,
        thresholds: th,
        warnings,
    };
    Ok(ScenarioRun { report, sum_rule, gaps, order_one, exit_code })
}

fn oracle_summary(
    pots: &CompositePotential,
    cfg: &RunConfig,
    gaps: &GapSearch,
    lambda_split: f64,
) -> Result<OracleSummary> {
    let opts = cfg.oracle.options();
    let m_v0 = oracle_count(pots, Operator::V0Only, 0.0, &opts)?.count;
    let m_v1 = oracle_count(pots, Operator::V1Only, 0.0, &opts)?.count;
    // Small eigenvalues need a domain many decay lengths long.
    let eps2 = pots.epsilon * pots.epsilon;
    let smallest = gaps.roots.iter().map(|g| g.lambda_hat).fold(eps2 * gaps.mu_range.1, f64::min);
    let wide = if cfg.oracle.r.is_some() { opts } else { OracleOptions::for_small_eigenvalues(smallest.max(1e-8)) };
    let m_w = oracle_count(pots, Operator::Full, 0.0, &wide)?.count;
    let above_split = oracle_count(pots, Operator::Full, lambda_split, &wide)?.count;
    let above_range = oracle_count(pots, Operator::Full, eps2 * gaps.mu_range.1, &wide)?.count;
    let eigenvalues_w = oracle_eigenvalues(pots, Operator::Full, m_w.max(1), &wide)?.eigenvalues;
    Ok(OracleSummary {
        m_v0,
        m_v1,
        m_w,
        lambda_split,
        gap_band_count: m_w - above_split.min(m_w),
        matching_range_count: m_w - above_range.min(m_w),
        eigenvalues_w,
    })
}

/// Interior points of `(0, 1)` used for the manifold families.
pub fn figure_mus(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

fn write_csv_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Trajectory CSVs for the figure families: the inner unstable manifold
/// lifted to branches `0..branches` and the outer center manifold shifted by
/// `−2π`, for each μ.
pub fn write_figure_data(cfg: &RunConfig, out: &Path, mus: &[f64], branches: i64) -> Result<Vec<String>> {
    let pots = cfg.potentials()?;
    let th = cfg.thresholds()?;
    let solver = cfg.solver();
    let eps = pots.epsilon;
    let mut written = Vec::new();
    for (i, &mu) in mus.iter().enumerate() {
        let inner = AngularFlow::new(FlowParams::full_inner(eps * eps * mu, eps), &pots)?;
        let minus = unstable_trajectory(&inner, 1.0 - 1e-6, &[th.sigma_eps], &solver.manifold, &solver.step)?;
        for k in 0..branches {
            let name = format!("unstable_mu{i:02}_k{k}.csv");
            write_csv_file(&out.join(&name), |w| minus.write_csv_with_branch(w, k))?;
            written.push(name);
        }
        let outer = AngularFlow::new(FlowParams::full_outer(mu, eps), &pots)?;
        let plus = center_trajectory_backward(&outer, 1e-3, &[th.tau_match], &solver.manifold, &solver.step)?;
        let name = format!("center_mu{i:02}.csv");
        write_csv_file(&out.join(&name), |w| plus.write_csv_with_branch(w, -2))?;
        written.push(name);
    }
    let index: Vec<String> = mus.iter().enumerate().map(|(i, mu)| format!("{i},{mu}")).collect();
    fs::write(out.join("figure_mu.csv"), format!("index,mu\n{}\n", index.join("\n")))?;
    written.push("figure_mu.csv".into());
    Ok(written)
}

/// `scenario`: report, match curve and figure data in `out`.
pub fn cmd_scenario(id: u8, epsilon: f64, alpha: f64, out: &Path, figure_points: usize, paranoid: bool) -> Result<i32> {
    scenario_potentials(id)?;
    let mut cfg = RunConfig::preset(id, epsilon);
    cfg.alpha = alpha;
    cfg.manifold.paranoid = paranoid;
    cfg.validate()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let run = run_scenario(&cfg)?;
    fs::write(out.join("report.json"), to_json(&run.report)?)?;
    fs::write(out.join("sum_rule.json"), to_json(&run.sum_rule)?)?;
    let pots = cfg.potentials()?;
    let (csv, _) = match_table(&pots, &cfg, &run.gaps)?;
    fs::write(out.join("match.csv"), csv)?;
    let branches = if id == 2 { 4 } else { 3 };
    write_figure_data(&cfg, out, &figure_mus(figure_points), branches)?;
    eprintln!(
        "scenario {id}: m(V0) = {}, m(V1) = {}, m(W) = {}; sum rule {}; oracle {}",
        run.report.m_v0,
        run.report.m_v1,
        run.report.m_w,
        if run.report.sum_rule_holds { "holds" } else { "FAILS" },
        if run.report.oracle_agreement { "agrees" } else { "DISAGREES" }
    );
    for w in &run.report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(run.exit_code)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountReport {
    pub operator: Operator,
    pub epsilon: f64,
    pub count: CountResult,
    pub oracle: Option<OracleCount>,
    pub agreement: Option<bool>,
}

/// `count`: winding count of the configured operator, checked by the oracle.
pub fn cmd_count(cfg: &RunConfig) -> Result<i32> {
    let pots = cfg.potentials()?;
    let count = count_positive_eigenvalues(&pots, cfg.operator, &cfg.count_options())?;
    let oracle = if cfg.oracle.enabled {
        Some(oracle_count(&pots, cfg.operator, 0.0, &cfg.oracle.options())?)
    } else {
        None
    };
    let agreement = oracle.as_ref().map(|o| o.count == count.m);
    let report = CountReport { operator: cfg.operator, epsilon: pots.epsilon, count, oracle, agreement };
    emit(&to_json(&report)?, cfg.output.report.as_deref())?;
    Ok(if agreement == Some(false) { EXIT_ORACLE } else { EXIT_OK })
}

/// CSV of `Σᵏ` over the μ grid plus the located roots.
///
/// Columns: `mu`, one `sigma_k_<k>` per branch, `root_k` (branch of a root
/// in `(μ_i, μ_{i+1}]`, if any) and `error` (failed evaluations).
pub fn match_table(pots: &CompositePotential, cfg: &RunConfig, gaps: &GapSearch) -> Result<(String, Vec<MatchPoint>)> {
    let th = cfg.thresholds()?;
    let (lo, hi) = gaps.mu_range;
    let mus = uniform_grid(lo, hi, cfg.mu_grid.n);
    let curve = match_curve(pots, &mus, &th, &cfg.solver());
    let k_lo = gaps.roots.iter().map(|r| r.k).min().unwrap_or(0).min(0);
    let k_hi = gaps.roots.iter().map(|r| r.k).max().unwrap_or(1).max(1);
    let mut out = String::from("mu");
    for k in k_lo..=k_hi {
        out.push_str(&format!(",sigma_k_{k}"));
    }
    out.push_str(",root_k,error\n");
    let mut points = Vec::new();
    for (i, (mu, r)) in mus.iter().zip(curve).enumerate() {
        out.push_str(&format!("{mu}"));
        let roots: Vec<String> = gaps
            .roots
            .iter()
            .filter(|g| i + 1 < mus.len() && g.mu_hat > *mu && g.mu_hat <= mus[i + 1])
            .map(|g| g.k.to_string())
            .collect();
        match r {
            Ok(p) => {
                for k in k_lo..=k_hi {
                    out.push_str(&format!(",{}", p.sigma_k(k)));
                }
                out.push_str(&format!(",{},\n", roots.join(";")));
                points.push(p);
            }
            Err(e) => {
                for _ in k_lo..=k_hi {
                    out.push(',');
                }
                out.push_str(&format!(",{},\"{}\"\n", roots.join(";"), e.to_string().replace('"', "'")));
            }
        }
    }
    Ok((out, points))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub epsilon: f64,
    pub thresholds: Thresholds,
    pub search: GapSearch,
}

/// `match`: the matching curve as CSV and its roots as JSON.
pub fn cmd_match(cfg: &RunConfig) -> Result<i32> {
    let pots = cfg.potentials()?;
    let th = cfg.thresholds()?;
    let gaps = find_gap_eigenvalues(&pots, &th, &cfg.gap_options())?;
    let (csv, _) = match_table(&pots, cfg, &gaps)?;
    emit(&csv, cfg.output.csv.as_deref())?;
    let report = MatchReport { epsilon: pots.epsilon, thresholds: th, search: gaps };
    if let Some(p) = cfg.output.report.as_deref() {
        emit(&to_json(&report)?, Some(p))?;
    } else if cfg.output.csv.is_some() {
        emit(&to_json(&report)?, None)?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub epsilon: f64,
    pub counts: Vec<OracleCount>,
    pub spectrum: OracleSpectrum,
}

/// `oracle`: finite-difference counts of all three operators and the
/// largest eigenvalues of the configured one.
pub fn cmd_oracle(cfg: &RunConfig) -> Result<i32> {
    let pots = cfg.potentials()?;
    let opts = cfg.oracle.options();
    let counts = Operator::ALL.iter().map(|&op| oracle_count(&pots, op, 0.0, &opts)).collect::<Result<Vec<_>, _>>()?;
    let spectrum = oracle_eigenvalues(&pots, cfg.operator, cfg.oracle.top_k.max(1), &opts)?;
    emit(&to_json(&OracleReport { epsilon: pots.epsilon, counts, spectrum })?, cfg.output.report.as_deref())?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCheckReport {
    pub v0: DecayReport,
    pub v1: DecayReport,
    pub all_pass: bool,
}

/// `decay-check`: advisory audit of both potentials; always exits 0 once the
/// configuration is valid.
pub fn cmd_decay_check(cfg: &RunConfig) -> Result<i32> {
    let pots = cfg.potentials()?;
    let decay = cfg.decay.ok_or_else(|| anyhow::anyhow!("decay-check needs a \"decay\" section with c0, c1, gamma"))?;
    let grid = decay.grid()?;
    let v0 = verify_decay(&pots.v0, decay.params()?, &grid)?;
    let v1 = verify_decay(&pots.v1, decay.params()?, &grid)?;
    let all_pass = v0.all_pass() && v1.all_pass();
    for w in v0.warnings.iter().map(|w| format!("v0: {w}")).chain(v1.warnings.iter().map(|w| format!("v1: {w}"))) {
        eprintln!("warning: {w}");
    }
    emit(&to_json(&DecayCheckReport { v0, v1, all_pass })?, cfg.output.report.as_deref())?;
    Ok(EXIT_OK)
}
