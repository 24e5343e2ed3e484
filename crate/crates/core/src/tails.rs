//! Point and tail probability estimates for the largest component `L1` and
//! for the component `C(v)` of a fixed vertex.
//!
//! Main terms are returned as they are; the relative and additive budgets ride
//! along for display and are not folded into the value.

use std::f64::consts::PI;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::bigmath::ln_rational;
use crate::error::{require, Error, Result};
use crate::moments::{
    mean_x_asymptotic, mean_x_exact, mean_x_rational, mean_y_log_main, mean_y_rational,
    mean_z_log_main, CountTables,
};
use crate::window::{
    error_term, max_excess, rate_f, rate_g, ComponentQuery, CriticalWindow, ErrorKind,
};
use crate::wright::ExactCountStore;

/// Which estimate a [`TailEstimate`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statement {
    /// `P(L1 = k)`.
    L1Point,
    /// `P(L1 ≥ k)`.
    L1Tail,
    /// `P(|C(v)| = k)`.
    VertexPoint,
    /// `P(|C(v)| ≥ k)`.
    VertexTail,
    /// `P(|C(v)| = k, E(C(v)) = k + l)`.
    VertexPointEdges,
}

impl Statement {
    pub fn name(&self) -> &'static str {
        match self {
            Statement::L1Point => "L1_POINT",
            Statement::L1Tail => "L1_TAIL",
            Statement::VertexPoint => "CV_POINT",
            Statement::VertexTail => "CV_TAIL",
            Statement::VertexPointEdges => "CV_POINT_EDGES",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    /// Natural log of the estimate. Not clamped: far outside the asymptotic
    /// range the estimate may exceed 1, see `out_of_calibration`.
    pub log_prob: f64,
    pub budget_rel: f64,
    pub budget_abs: f64,
    pub statement: Statement,
    pub out_of_calibration: bool,
    pub warnings: Vec<String>,
    /// The exact probability, for identity-based estimates in rationals.
    pub exact: Option<BigRational>,
}

impl TailEstimate {
    fn new(log_prob: f64, budget_rel: f64, budget_abs: f64, statement: Statement) -> Self {
        Self {
            log_prob,
            budget_rel,
            budget_abs,
            statement,
            out_of_calibration: log_prob > 0.0,
            warnings: Vec::new(),
            exact: None,
        }
    }

    pub fn prob(&self) -> f64 {
        self.log_prob.exp()
    }
}

/// Window `−n^{1/12} ≤ λ ≤ n^{1/12}/5`, `min(3λ, 1) n^{2/3} ≤ k ≤ n^{3/4}`.
///
/// When `k` lies below the stricter lower edge `max(3λ, 1) n^{2/3}` under
/// which the `Z` moment asymptotics are proven, a warning is returned.
fn check_large_window(w: &CriticalWindow, k: u64) -> Result<Vec<String>> {
    let top = w.n_pow(1.0 / 12.0);
    require(w.lambda() >= -top, "requires lambda >= -n^(1/12)")?;
    require(w.lambda() <= top / 5.0, "requires lambda <= n^(1/12)/5")?;
    let lam3 = 3.0 * w.lambda();
    let kf = k as f64;
    require(
        kf >= lam3.min(1.0) * w.scale(),
        "requires min(3*lambda, 1)*n^(2/3) <= k",
    )?;
    require(k <= w.truncation(), "requires k <= n^(3/4)")?;
    let mut warnings = Vec::new();
    if kf < lam3.max(1.0) * w.scale() {
        warnings.push(format!(
            "k = {k} lies below max(3*lambda, 1)*n^(2/3) = {:.1}; the estimate is outside the range where the moment asymptotics are proven",
            lam3.max(1.0) * w.scale()
        ));
    }
    Ok(warnings)
}

fn large_budgets(w: &CriticalWindow, k: u64) -> Result<(f64, f64)> {
    let rel = error_term(ErrorKind::M1, k, w.n(), 0, w.lambda())?.value;
    let abs = error_term(ErrorKind::A1, k, w.n(), 0, w.lambda())?.value;
    Ok((rel, abs))
}

/// `P(L1 = k) ≈ k^{1/2} e^{−G_λ(a)} / ((8π)^{1/2} n)`.
pub fn prob_l1_point(w: &CriticalWindow, k: u64) -> Result<TailEstimate> {
    let warnings = check_large_window(w, k)?;
    let (rel, abs) = large_budgets(w, k)?;
    let mut est = TailEstimate::new(mean_y_log_main(w, k), rel, abs, Statement::L1Point);
    est.warnings = warnings;
    Ok(est)
}

/// `P(L1 ≥ k) ≈ a^{1/2} e^{−G_λ(a)} / ((8π)^{1/2} G'_λ(a))`, the main term of
/// `E[Z(k)]`.
pub fn prob_l1_tail(w: &CriticalWindow, k: u64) -> Result<TailEstimate> {
    let warnings = check_large_window(w, k)?;
    let (rel, abs) = large_budgets(w, k)?;
    let mut est = TailEstimate::new(mean_z_log_main(w, k), rel, abs, Statement::L1Tail);
    est.warnings = warnings;
    Ok(est)
}

/// `P(|C(v)| = k) ≈ k^{3/2} e^{−G_λ(a)} / ((8π)^{1/2} n²)`, i.e. `(k/n)` times
/// the main term of `E[Y(k)]`.
pub fn prob_cv_point(w: &CriticalWindow, k: u64) -> Result<TailEstimate> {
    require(
        w.lambda().abs() <= w.n_pow(1.0 / 12.0),
        "requires |lambda| <= n^(1/12)",
    )?;
    require(
        k as f64 >= w.scale() && k <= w.truncation(),
        "requires n^(2/3) <= k <= n^(3/4)",
    )?;
    let (rel, abs) = large_budgets(w, k)?;
    let log_prob = (k as f64 / w.nf()).ln() + mean_y_log_main(w, k);
    Ok(TailEstimate::new(
        log_prob,
        rel,
        abs,
        Statement::VertexPoint,
    ))
}

/// `P(|C(v)| ≥ k) ≈ a^{3/2} e^{−G_λ(a)} / ((8π)^{1/2} n^{1/3} G'_λ(a))`.
pub fn prob_cv_tail(w: &CriticalWindow, k: u64) -> Result<TailEstimate> {
    let warnings = check_large_window(w, k)?;
    let (rel, abs) = large_budgets(w, k)?;
    let a = w.scaled_size(k);
    let (g, g_prime) = rate_g(w.lambda(), a);
    let log_prob = 1.5 * a.ln() - g - 0.5 * (8.0 * PI).ln() - w.nf().ln() / 3.0 - g_prime.ln();
    let mut est = TailEstimate::new(log_prob, rel, abs, Statement::VertexTail);
    est.warnings = warnings;
    Ok(est)
}

/// Evaluation mode for [`prob_cv_point_edges`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgesMode {
    /// `(k/n) E[X(k,k+l)]`, exact for every `n`, `k`, `l`.
    Exact,
    /// `γ_l k^{3l/2} e^{−F_λ(a)} / ((2π)^{1/2} n^{l+1})`.
    Asymptotic,
}

/// `P(|C(v)| = k, E(C(v)) = k + l)`.
pub fn prob_cv_point_edges(
    w: &CriticalWindow,
    q: &ComponentQuery,
    mode: EdgesMode,
    tables: &CountTables,
) -> Result<TailEstimate> {
    let scale = (q.k() as f64 / w.nf()).ln();
    match mode {
        EdgesMode::Exact => {
            let m = mean_x_exact(w, q, tables)?;
            let mut est = TailEstimate::new(
                scale + m.log_value,
                m.budget.value,
                0.0,
                Statement::VertexPointEdges,
            );
            est.exact = m
                .exact
                .map(|x| x * BigRational::new(q.k().into(), w.n().into()));
            Ok(est)
        }
        EdgesMode::Asymptotic => {
            let m = mean_x_asymptotic(w, q, &tables.wright)?;
            Ok(TailEstimate::new(
                scale + m.log_value,
                m.budget.value,
                0.0,
                Statement::VertexPointEdges,
            ))
        }
    }
}

/// Exact `P(|C(v)| = k, E(C(v)) = k + l) = (k/n) E[X(k,k+l)]` in rationals.
pub fn prob_cv_point_edges_rational(
    n: u64,
    k: u64,
    l: i64,
    p: &BigRational,
    store: &ExactCountStore,
) -> Result<BigRational> {
    Ok(mean_x_rational(n, k, l, p, store)? * BigRational::new(k.into(), n.into()))
}

/// Exact `P(|C(v)| = k) = (k/n) E[Y(k)]` in rationals.
pub fn prob_cv_point_rational(
    n: u64,
    k: u64,
    p: &BigRational,
    store: &ExactCountStore,
) -> Result<BigRational> {
    Ok(mean_y_rational(n, k, p, store)? * BigRational::new(k.into(), n.into()))
}

/// The envelope `(c1, c2) · k^{−3/2} e^{−F_λ(a)}` for `P(|C(v)| = k)` at
/// small `k`. The constants are caller-supplied.
pub fn prob_cv_smallk_envelope(w: &CriticalWindow, k: u64, c1: f64, c2: f64) -> Result<(f64, f64)> {
    if !(c1 > 0.0 && c1 <= c2) {
        return Err(Error::domain(format!(
            "requires 0 < c1 <= c2, got c1 = {c1}, c2 = {c2}"
        )));
    }
    require(
        w.lambda().abs() <= w.n_pow(1.0 / 12.0),
        "requires |lambda| <= n^(1/12)",
    )?;
    require(k >= 1 && k <= w.n(), "requires 1 <= k <= n")?;
    let shape = (-1.5 * (k as f64).ln() - rate_f(w.lambda(), w.scaled_size(k))).exp();
    Ok((c1 * shape, c2 * shape))
}

/// Fitted envelope constants: the extreme ratios of the exact
/// `P(|C(v)| = k)` to `k^{−3/2} e^{−F_λ(a)}` over `1 ≤ k ≤ k_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeFit {
    pub c1: f64,
    pub c2: f64,
}

/// Fits `c1`, `c2` from the exact point probabilities at each window in
/// `windows` (all `n ≤ 60`). These are calibration outputs, not constants of
/// the underlying bound.
pub fn calibrate_smallk_envelope(
    windows: &[CriticalWindow],
    k_max: u64,
    store: &ExactCountStore,
) -> Result<EnvelopeFit> {
    if windows.is_empty() || k_max == 0 {
        return Err(Error::domain(
            "calibration needs at least one window and k_max >= 1",
        ));
    }
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    for w in windows {
        let p = w.p_exact();
        for k in 1..=k_max.min(w.n()) {
            let exact = prob_cv_point_rational(w.n(), k, &p, store)?;
            let shape = -1.5 * (k as f64).ln() - rate_f(w.lambda(), w.scaled_size(k));
            let ratio = (ln_rational(&exact) - shape).exp();
            c1 = c1.min(ratio);
            c2 = c2.max(ratio);
        }
    }
    Ok(EnvelopeFit { c1, c2 })
}

/// `min(1, n^{1/4} e^{−k³/(80 n²)})`, an upper bound on `P(L1 ≥ k)`.
pub fn l1_tail_upper_explore(w: &CriticalWindow, k: u64) -> Result<f64> {
    require(
        w.lambda() <= w.n_pow(1.0 / 12.0) / 5.0,
        "requires lambda <= n^(1/12)/5",
    )?;
    require(k >= 1, "requires k >= 1")?;
    let n = w.nf();
    let kf = k as f64;
    Ok((n.powf(0.25) * (-kf.powi(3) / (80.0 * n * n)).exp()).min(1.0))
}

/// Exact distribution of `(|C(v)|, E(C(v)))` as `((k, l), probability)` rows
/// ordered by `(k, l)`, omitting impossible cells.
pub fn exact_vertex_joint_pmf(
    n: u64,
    p: &BigRational,
    store: &ExactCountStore,
) -> Result<Vec<((u64, i64), BigRational)>> {
    let mut rows = Vec::new();
    for k in 1..=n {
        for l in -1..=max_excess(k).max(-1) {
            let v = prob_cv_point_edges_rational(n, k, l, p, store)?;
            if !v.is_zero() {
                rows.push(((k, l), v));
            }
        }
    }
    Ok(rows)
}

/// Nearest double to a nonnegative rational.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or_else(|| ln_rational(x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(n: u64, lambda: f64) -> CriticalWindow {
        CriticalWindow::new(n, lambda).unwrap()
    }

    #[test]
    fn l1_point_and_tail_values() {
        let w = window(1_000_000, 0.0);
        let pt = prob_l1_point(&w, 20_000).unwrap();
        let expect = 20_000f64.sqrt() / ((8.0 * PI).sqrt() * 1e6) * (-1.0f64).exp();
        assert!((pt.prob() / expect - 1.0).abs() < 1e-12);
        assert!(pt.warnings.is_empty());

        let tail = prob_l1_tail(&w, 20_000).unwrap();
        assert!((tail.prob() - 0.0692).abs() < 1e-4);
        assert_eq!(tail.statement, Statement::L1Tail);

        let err = prob_l1_point(&w, 100_000).unwrap_err();
        assert!(err.to_string().contains("k <= n^(3/4)"));
        let w = window(1_000_000, 1e6f64.powf(1.0 / 12.0));
        let err = prob_l1_point(&w, 10_000).unwrap_err();
        assert!(err.to_string().contains("requires lambda <= n^(1/12)/5"));
    }

    #[test]
    fn l1_tail_matches_large_a_closed_form() {
        let w = window(1_000_000, 0.0);
        let k = (20.0 * w.scale()).round() as u64;
        // a = 20 needs k = 2·10^5 > n^{3/4}, so compare the formula directly.
        assert!(prob_l1_tail(&w, k).is_err());
        let a = 20.0f64;
        let (g, gp) = rate_g(0.0, a);
        let main = 0.5 * a.ln() - g - 0.5 * (8.0 * PI).ln() - gp.ln();
        let closed = 0.5 * (8.0 / (9.0 * PI)).ln() - 1.5 * a.ln() - a.powi(3) / 8.0;
        assert!(((main - closed).exp() - 1.0).abs() < 0.15);
    }

    #[test]
    fn tails_decrease_in_k() {
        let w = window(1_000_000, 0.0);
        let mut prev = [f64::INFINITY; 2];
        for k in (10_000..=31_622).step_by(500) {
            let now = [
                prob_l1_tail(&w, k).unwrap().log_prob,
                prob_cv_tail(&w, k).unwrap().log_prob,
            ];
            assert!(now[0] < prev[0] && now[1] < prev[1]);
            prev = now;
        }
    }

    #[test]
    fn point_estimates_peak_inside_window() {
        // k^{1/2} e^{−a³/8} peaks at a³ = 4/3 and k^{3/2} e^{−a³/8} at a³ = 4,
        // so the point estimates rise at the bottom of the window.
        let w = window(1_000_000, 0.0);
        let l1 = |k| prob_l1_point(&w, k).unwrap().log_prob;
        let cv = |k| prob_cv_point(&w, k).unwrap().log_prob;
        assert!(l1(10_500) > l1(10_000));
        assert!(cv(15_000) > cv(10_000));
        let start = (4f64.cbrt() * w.scale()).ceil() as u64;
        let mut prev = [f64::INFINITY; 2];
        for k in (start..=31_622).step_by(500) {
            let now = [l1(k), cv(k)];
            assert!(now[0] < prev[0] && now[1] < prev[1]);
            prev = now;
        }
    }

    #[test]
    fn vertex_estimates_relate_to_l1_estimates() {
        let w = window(1_000_000, 0.0);
        let k = 20_000u64;
        let cv = prob_cv_tail(&w, k).unwrap();
        let l1 = prob_l1_tail(&w, k).unwrap();
        assert!((cv.prob() / l1.prob() - k as f64 / 1e6).abs() < 1e-15);
        assert!((cv.prob() - 1.384e-3).abs() < 1e-6);

        let pt = prob_cv_point(&w, k).unwrap();
        let y = prob_l1_point(&w, k).unwrap();
        assert!((pt.log_prob - ((k as f64 / 1e6).ln() + y.log_prob)).abs() < 1e-12);
        assert!(prob_cv_point(&w, 100).is_err());
    }

    #[test]
    fn window_gap_warning() {
        // λ = 0.5: the lower edges are 10^4 and 1.5·10^4.
        let w = window(1_000_000, 0.5);
        assert!(prob_l1_tail(&w, 9_000).is_err());
        let est = prob_l1_tail(&w, 12_000).unwrap();
        assert_eq!(est.warnings.len(), 1);
        assert!(prob_l1_tail(&w, 16_000).unwrap().warnings.is_empty());
        // λ = 0.2: 3λ < 1, so the weaker edge is 0.6·10^4.
        let w = window(1_000_000, 0.2);
        assert_eq!(prob_l1_tail(&w, 7_000).unwrap().warnings.len(), 1);
    }

    #[test]
    fn point_edges_examples() {
        let t = CountTables::default();
        let w = window(3, 0.0);
        let q = ComponentQuery::new(&w, 2, -1).unwrap();
        let e = prob_cv_point_edges(&w, &q, EdgesMode::Exact, &t).unwrap();
        assert_eq!(e.exact, Some(BigRational::new(8.into(), 27.into())));
        let q = ComponentQuery::new(&w, 3, 0).unwrap();
        let e = prob_cv_point_edges(&w, &q, EdgesMode::Exact, &t).unwrap();
        assert_eq!(e.exact, Some(BigRational::new(1.into(), 27.into())));

        let w = window(1_000_000, 0.0);
        let q = ComponentQuery::new(&w, 10_000, 1).unwrap();
        let a = prob_cv_point_edges(&w, &q, EdgesMode::Asymptotic, &t).unwrap();
        let x = mean_x_asymptotic(&w, &q, &t.wright).unwrap();
        assert!((a.log_prob - (x.log_value + (0.01f64).ln())).abs() < 1e-12);
    }

    #[test]
    fn envelope_shape_and_calibration() {
        let w = window(6, 0.0);
        let (lo, hi) = prob_cv_smallk_envelope(&w, 2, 0.05, 5.0).unwrap();
        assert!((hi / lo - 100.0).abs() < 1e-9);
        assert!(prob_cv_smallk_envelope(&w, 2, 5.0, 0.05).is_err());

        let store = ExactCountStore::default();
        let p = w.p_exact();
        for k in 1..=6 {
            let (lo, hi) = prob_cv_smallk_envelope(&w, k, 0.05, 5.0).unwrap();
            let exact = rational_to_f64(&prob_cv_point_rational(6, k, &p, &store).unwrap());
            assert!(lo <= exact && exact <= hi, "k={k}");
        }

        let w = window(1000, 0.0);
        let (lo1, _) = prob_cv_smallk_envelope(&w, 10, 1.0, 1.0).unwrap();
        let (lo2, _) = prob_cv_smallk_envelope(&w, 20, 1.0, 1.0).unwrap();
        let df = rate_f(0.0, w.scaled_size(20)) - rate_f(0.0, w.scaled_size(10));
        assert!((lo2 / lo1 - 2f64.powf(-1.5) * (-df).exp()).abs() < 1e-12);

        let fit = calibrate_smallk_envelope(&[window(6, 0.0), window(12, 0.0)], 6, &store).unwrap();
        assert!(fit.c1 > 0.0 && fit.c1 <= fit.c2);
    }

    #[test]
    fn exploration_bound_values() {
        let v = l1_tail_upper_explore(&window(1_000_000, 0.0), 100_000).unwrap();
        assert!((v - 1e6f64.powf(0.25) * (-12.5f64).exp()).abs() < 1e-15);
        assert!((v - 1.18e-4).abs() < 1e-6);
        assert_eq!(
            l1_tail_upper_explore(&window(10_000, 0.0), 1000).unwrap(),
            1.0
        );
        assert!(l1_tail_upper_explore(&window(10_000, 5.0), 1000).is_err());
    }

    #[test]
    fn joint_pmf_sums_to_one() {
        let store = ExactCountStore::default();
        for n in 1..=8u64 {
            let p = window(n, 0.0).p_exact();
            let total: BigRational = exact_vertex_joint_pmf(n, &p, &store)
                .unwrap()
                .into_iter()
                .map(|(_, v)| v)
                .sum();
            assert_eq!(total, BigRational::from_integer(1.into()));
        }
    }
}
