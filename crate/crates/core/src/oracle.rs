//! Finite-difference cross-check of eigenvalue counts.
//!
//! With `u = r p` the radial problem becomes `u'' − W u = λ u` on `(0, ∞)`
//! with `u(0) = 0`. Truncating at `R` with a Dirichlet condition and using
//! the three-point Laplacian gives a symmetric tridiagonal matrix whose
//! inertia is read off the signs of its `LDLᵀ` pivots.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{CompositePotential, Operator, PotentialSpec};

/// Tail tolerance: the potential must satisfy `|W(R)| < TAIL_TOL` at the
/// truncation radius.
pub const TAIL_TOL: f64 = 1e-8;

/// Number of times `R` may be doubled to meet [`TAIL_TOL`].
pub const MAX_DOUBLINGS: usize = 4;

const PIVOT_GUARD: f64 = 1e-300;

/// Uniform grid `r_i = i h`, `i = 1..=n`, with `h = R / (n + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub radius: f64,
    pub n: usize,
}

impl RadialGrid {
    pub fn new(radius: f64, n: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("grid radius must be positive, got {radius}")));
        }
        if n < 16 {
            return Err(Error::InvalidArgument(format!("grid needs at least 16 interior points, got {n}")));
        }
        Ok(Self { radius, n })
    }

    pub fn h(&self) -> f64 {
        self.radius / (self.n + 1) as f64
    }

    /// Same spacing on twice the radius.
    fn doubled_radius(&self) -> Self {
        Self { radius: 2.0 * self.radius, n: 2 * self.n + 1 }
    }

    /// Same radius, half the spacing.
    fn refined(&self) -> Self {
        Self { radius: self.radius, n: 2 * self.n + 1 }
    }
}

/// Symmetric tridiagonal matrix with a constant off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    pub grid: RadialGrid,
}

impl TridiagonalOperator {
    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }
}

/// Discretizes `Δ − V` for the given potential on `grid`, with no tail check.
pub fn discretize_spec(spec: &PotentialSpec, grid: RadialGrid) -> TridiagonalOperator {
    let h = grid.h();
    let inv_h2 = 1.0 / (h * h);
    let diag = (1..=grid.n).map(|i| -2.0 * inv_h2 - spec.value(i as f64 * h)).collect();
    TridiagonalOperator { diag, offdiag: vec![inv_h2; grid.n - 1], grid }
}

/// Discretizes the chosen operator, doubling `R` at fixed spacing up to
/// [`MAX_DOUBLINGS`] times until `|V(R)| < TAIL_TOL`.
pub fn discretize(pots: &CompositePotential, which: Operator, grid: RadialGrid) -> Result<TridiagonalOperator> {
    let spec = which.potential(pots);
    let grid = fit_radius(&spec, grid)?;
    Ok(discretize_spec(&spec, grid))
}

/// The grid with `R` doubled (spacing kept) until the tail condition holds.
pub fn fit_radius(spec: &PotentialSpec, mut grid: RadialGrid) -> Result<RadialGrid> {
    let mut doublings = 0;
    loop {
        let tail = spec.value(grid.radius).abs();
        if tail < TAIL_TOL {
            return Ok(grid);
        }
        if doublings == MAX_DOUBLINGS {
            return Err(Error::TruncationTooSmall { radius: grid.radius, tail });
        }
        grid = grid.doubled_radius();
        doublings += 1;
    }
}

/// Number of eigenvalues of `A` strictly greater than `shift`.
///
/// The pivots of `LDLᵀ` of `A − shift·I` have the signs of its eigenvalues
/// (Sylvester), so the count is the number of positive pivots.
pub fn sturm_count_above(a: &TridiagonalOperator, shift: f64) -> usize {
    let n = a.diag.len();
    let mut count = 0;
    let mut d = a.diag[0] - shift;
    for i in 0..n {
        if i > 0 {
            let b = a.offdiag[i - 1];
            d = a.diag[i] - shift - b * b / d;
        }
        if d == 0.0 {
            d = -PIVOT_GUARD;
        }
        if d > 0.0 {
            count += 1;
        }
        if d.abs() < PIVOT_GUARD {
            d = PIVOT_GUARD.copysign(d);
        }
    }
    count
}

/// Grid ladder settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOptions {
    pub n: usize,
    /// Truncation radius; `None` picks 200 (400 for the outer model).
    pub radius: Option<f64>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { n: 4000, radius: None }
    }
}

impl OracleOptions {
    /// Settings for counting eigenvalues down to `lambda_target > 0`: the
    /// radius grows to `max(200, 20/√λ)` (twenty decay lengths) at the
    /// spacing of the default grid.
    pub fn for_small_eigenvalues(lambda_target: f64) -> Self {
        let base = Self::default();
        let h = 200.0 / (base.n + 1) as f64;
        let radius = (20.0 / lambda_target.sqrt()).max(200.0);
        Self { n: ((radius / h).ceil() as usize).saturating_sub(1).max(base.n), radius: Some(radius) }
    }

    pub fn base_grid(&self, which: Operator) -> Result<RadialGrid> {
        let r = self.radius.unwrap_or(match which {
            Operator::V1Only => 400.0,
            _ => 200.0,
        });
        RadialGrid::new(r, self.n)
    }
}

/// Counts on the three ladder levels `N, 2N, 4N` (same `R`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCount {
    pub count: usize,
    pub operator: Operator,
    pub shift: f64,
    pub ladder: Vec<(RadialGrid, usize)>,
}

fn ladder(base: RadialGrid) -> [RadialGrid; 3] {
    let g2 = base.refined();
    [base, g2, g2.refined()]
}

/// Eigenvalues of the operator above `shift`, required to agree on all three
/// ladder levels.
pub fn oracle_count(pots: &CompositePotential, which: Operator, shift: f64, opts: &OracleOptions) -> Result<OracleCount> {
    let spec = which.potential(pots);
    oracle_count_spec(&spec, which, shift, opts.base_grid(which)?)
}

/// [`oracle_count`] for an explicit potential and base grid.
pub fn oracle_count_spec(spec: &PotentialSpec, which: Operator, shift: f64, base: RadialGrid) -> Result<OracleCount> {
    if !shift.is_finite() {
        return Err(Error::InvalidArgument("shift must be finite".into()));
    }
    let base = fit_radius(spec, base)?;
    let levels = ladder(base);
    let counts: Vec<(RadialGrid, usize)> =
        levels.par_iter().map(|&g| (g, sturm_count_above(&discretize_spec(spec, g), shift))).collect();
    let first = counts[0].1;
    if counts.iter().any(|c| c.1 != first) {
        return Err(Error::OracleNotConverged { counts: counts.iter().map(|c| c.1).collect() });
    }
    Ok(OracleCount { count: first, operator: which, shift, ladder: counts })
}

/// All eigenvalues of `a` above `floor`, largest first, each located by
/// bisection on the inertia count to width `tol`.
pub fn eigenvalues_above(a: &TridiagonalOperator, floor: f64, tol: f64) -> Vec<f64> {
    let (_, hi) = a.gershgorin();
    let m = sturm_count_above(a, floor);
    (0..m)
        .map(|j| {
            // The (j+1)-th largest eigenvalue: count_above(x) > j below it.
            let (mut lo, mut up) = (floor, hi);
            while up - lo > tol {
                let mid = 0.5 * (lo + up);
                if sturm_count_above(a, mid) > j {
                    lo = mid;
                } else {
                    up = mid;
                }
            }
            0.5 * (lo + up)
        })
        .collect()
}

/// One eigenvalue with its grid-ladder history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEigenvalue {
    /// Richardson extrapolation of the two finest levels.
    pub value: f64,
    /// `|λ_{4N} − λ_{2N}| / 3`, the second-order error estimate of the
    /// finest level.
    pub error_bar: f64,
    pub ladder: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpectrum {
    pub operator: Operator,
    pub eigenvalues: Vec<OracleEigenvalue>,
    /// Fewer than the requested number of positive eigenvalues exist.
    pub short_count: bool,
    pub grid: RadialGrid,
}

/// The `top_k` largest positive eigenvalues with Richardson error bars.
pub fn oracle_eigenvalues(
    pots: &CompositePotential,
    which: Operator,
    top_k: usize,
    opts: &OracleOptions,
) -> Result<OracleSpectrum> {
    let spec = which.potential(pots);
    oracle_eigenvalues_spec(&spec, which, top_k, opts.base_grid(which)?)
}

/// [`oracle_eigenvalues`] for an explicit potential and base grid.
pub fn oracle_eigenvalues_spec(
    spec: &PotentialSpec,
    which: Operator,
    top_k: usize,
    base: RadialGrid,
) -> Result<OracleSpectrum> {
    if top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be at least 1".into()));
    }
    let base = fit_radius(spec, base)?;
    let levels = ladder(base);
    let per_level: Vec<Vec<f64>> =
        levels.par_iter().map(|&g| eigenvalues_above(&discretize_spec(spec, g), 0.0, 1e-10)).collect();
    let available = per_level.iter().map(Vec::len).min().unwrap_or(0);
    let take = available.min(top_k);
    let eigenvalues = (0..take)
        .map(|j| {
            let l: Vec<f64> = per_level.iter().map(|v| v[j]).collect();
            let (fine, mid) = (l[2], l[1]);
            OracleEigenvalue { value: fine + (fine - mid) / 3.0, error_bar: (fine - mid).abs() / 3.0, ladder: l }
        })
        .collect();
    Ok(OracleSpectrum { operator: which, eigenvalues, short_count: take < top_k, grid: base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt() -> PotentialSpec {
        PotentialSpec::Sech2 { a: -6.0, b: 1.0 }
    }

    fn grid() -> RadialGrid {
        RadialGrid::new(40.0, 800).unwrap()
    }

    #[test]
    fn free_operator_has_no_positive_eigenvalues() {
        let a = discretize_spec(&PotentialSpec::Zero, grid());
        assert_eq!(sturm_count_above(&a, 0.0), 0);
    }

    #[test]
    fn gershgorin_extremes() {
        let a = discretize_spec(&pt(), grid());
        let (lo, hi) = a.gershgorin();
        assert_eq!(sturm_count_above(&a, lo - 1.0), a.diag.len());
        assert_eq!(sturm_count_above(&a, hi + 1.0), 0);
    }

    #[test]
    fn constant_shift_is_linear() {
        let g = grid();
        let a = discretize_spec(&pt(), g);
        let shifted = PotentialSpec::Sum { terms: vec![pt(), PotentialSpec::Gaussian { a: 0.25, b: 1e-12 }] };
        let b = discretize_spec(&shifted, g);
        for (x, y) in a.diag.iter().zip(&b.diag) {
            assert!((x - 0.25 - y).abs() < 1e-12);
        }
        assert_eq!(a.offdiag, b.offdiag);
    }

    #[test]
    fn poschl_teller_benchmark() {
        let spec = oracle_eigenvalues_spec(&pt(), Operator::V0Only, 1, RadialGrid::new(40.0, 1000).unwrap()).unwrap();
        let e = &spec.eigenvalues[0];
        assert!((e.value - 1.0).abs() <= e.error_bar.max(1e-9), "{e:?}");
        assert!(e.error_bar < 1e-3);
        let c = oracle_count_spec(&pt(), Operator::V0Only, 0.0, RadialGrid::new(40.0, 1000).unwrap()).unwrap();
        assert_eq!(c.count, 1);
    }

    #[test]
    fn zero_potential_short_count() {
        let s = oracle_eigenvalues_spec(&PotentialSpec::Zero, Operator::Full, 2, grid()).unwrap();
        assert!(s.eigenvalues.is_empty());
        assert!(s.short_count);
    }

    #[test]
    fn tail_doubling_and_failure() {
        let slow = PotentialSpec::LorentzianSq { a: -1.0, b: 1.0 };
        let g = fit_radius(&slow, RadialGrid::new(50.0, 100).unwrap()).unwrap();
        assert!(slow.value(g.radius).abs() < TAIL_TOL);
        assert!((g.h() - RadialGrid::new(50.0, 100).unwrap().h()).abs() < 1e-12);
        let flat = PotentialSpec::Gaussian { a: -1.0, b: 1e-6 };
        assert!(matches!(fit_radius(&flat, grid()), Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn small_eigenvalue_grid_keeps_spacing() {
        let o = OracleOptions::for_small_eigenvalues(1e-4);
        let g = o.base_grid(Operator::Full).unwrap();
        assert_eq!(g.radius, 2000.0);
        let h0 = OracleOptions::default().base_grid(Operator::Full).unwrap().h();
        assert!((g.h() - h0).abs() < 1e-3 * h0);
        assert_eq!(OracleOptions::for_small_eigenvalues(1.0).radius, Some(200.0));
    }

    #[test]
    fn invalid_grids() {
        assert!(RadialGrid::new(10.0, 8).is_err());
        assert!(RadialGrid::new(-1.0, 100).is_err());
    }

    #[test]
    fn count_grows_with_depth() {
        let counts: Vec<usize> = [1.0, 5.0, 20.0, 60.0, 150.0]
            .iter()
            .map(|&c| {
                let a = discretize_spec(&PotentialSpec::Gaussian { a: -c, b: 1.0 }, grid());
                sturm_count_above(&a, 0.0)
            })
            .collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
        assert!(counts[4] > counts[0]);
    }

    proptest! {
        #[test]
        fn inertia_is_monotone(s1 in -50.0f64..5.0, ds in 0.0f64..10.0) {
            let a = discretize_spec(&pt(), RadialGrid::new(20.0, 200).unwrap());
            prop_assert!(sturm_count_above(&a, s1) >= sturm_count_above(&a, s1 + ds));
        }
    }
}
