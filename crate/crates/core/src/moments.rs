//! First and second moments of the component counts
//!
//! * `X(k, k+l)`: components with exactly `k` vertices and `k + l` edges,
//! * `Y(k)`: components with exactly `k` vertices,
//! * `Z(k)`: components with between `k` and `⌊n^{3/4}⌋` vertices.
//!
//! Exact identities are evaluated either in exact rationals (small `n`) or in
//! log space; asymptotic estimators return main terms with a diagnostic
//! error budget attached.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::bigmath::{binomial, ln_biguint, ln_rational, pow_rational, rational_from_uint};
use crate::error::{require, Error, Result};
use crate::quad;
use crate::window::{
    error_term, max_excess, rate_f, rate_g, ComponentQuery, CriticalWindow, ErrorBudget, ErrorKind,
};
use crate::wright::{count_connected_asymptotic, ExactCountStore, WrightTable};

/// Largest `n` for which moments are also returned as exact rationals.
pub const EXACT_RATIONAL_MAX_N: u64 = 12;

/// How an estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exact rational arithmetic; no rounding anywhere.
    ExactRational,
    /// Exact identity evaluated in floating-point log space.
    ExactLogspace,
    Asymptotic,
    UpperBound,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ExactRational => "EXACT_RATIONAL",
            Method::ExactLogspace => "EXACT_LOGSPACE",
            Method::Asymptotic => "ASYMPTOTIC",
            Method::UpperBound => "UPPER_BOUND",
        }
    }
}

/// A nonnegative expectation in log space. `log_value = -inf` encodes an
/// expectation that is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub log_value: f64,
    pub budget: ErrorBudget,
    /// Additive error scale, where the statement carries one.
    pub additive: Option<ErrorBudget>,
    pub method: Method,
    /// The exact value when `method` is `ExactRational`.
    pub exact: Option<BigRational>,
}

impl MomentEstimate {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    fn rational(value: BigRational) -> Self {
        Self {
            log_value: ln_rational(&value),
            budget: ErrorBudget::zero(ErrorKind::EX),
            additive: None,
            method: Method::ExactRational,
            exact: Some(value),
        }
    }

    fn logspace(log_value: f64, method: Method, budget: ErrorBudget) -> Self {
        Self {
            log_value,
            budget,
            additive: None,
            method,
            exact: None,
        }
    }
}

/// The exact-count memo and Wright table used by the moment estimators.
#[derive(Debug, Default)]
pub struct CountTables {
    pub store: ExactCountStore,
    pub wright: WrightTable,
}

impl CountTables {
    pub fn new(store: ExactCountStore, wright: WrightTable) -> Self {
        Self { store, wright }
    }
}

/// Which expectation mode to use for `Y` and `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Asymptotic,
    /// Exact rational sums over every excess; `n ≤ 12` only.
    ExactSmall,
}

// `count * ln(x)` with the convention 0·ln(0) = 0.
fn xlog(count: f64, ln_x: f64) -> f64 {
    if count == 0.0 {
        0.0
    } else {
        count * ln_x
    }
}

pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    if k < 30 {
        // Summed directly: the lgamma difference loses digits for huge n.
        return (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum();
    }
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Exponent of `(1 − p)` in `E[X(k, k+l)]`: `C(k,2) − (k+l) + k(n−k)`.
fn absent_pairs(n: u64, k: u64, l: i64) -> u64 {
    let inside = (k * (k - 1) / 2) as i64 - (k as i64 + l);
    debug_assert!(inside >= 0);
    inside as u64 + k * (n - k)
}

/// `E[X(k,k+l)] = binomial(n,k) C(k,k+l) p^{k+l} (1−p)^{C(k,2)−(k+l)+k(n−k)}`
/// in exact rationals, for any `n` and any rational `p`.
pub fn mean_x_rational(
    n: u64,
    k: u64,
    l: i64,
    p: &BigRational,
    store: &ExactCountStore,
) -> Result<BigRational> {
    if k == 0 || k > n || l < -1 {
        return Err(Error::domain(format!(
            "invalid component shape k = {k}, l = {l} for n = {n}"
        )));
    }
    if l > max_excess(k) {
        return Ok(BigRational::zero());
    }
    let count = store.count_excess(k, l)?;
    if count.is_zero() {
        return Ok(BigRational::zero());
    }
    let edges = (k as i64 + l) as u64;
    let q = BigRational::one() - p;
    Ok(rational_from_uint(binomial(n, k) * count)
        * pow_rational(p, edges)
        * pow_rational(&q, absent_pairs(n, k, l)))
}

/// Exact expectation of `X(k, k+l)`.
///
/// For `n ≤ 12` the value is an exact rational. Otherwise the identity is
/// evaluated in log space with the exact count `C(k, k+l)` when `k` is within
/// the store cap, and with the Wright asymptotic for `C` beyond it (method
/// `Asymptotic`, budget carrying the count error).
pub fn mean_x_exact(
    w: &CriticalWindow,
    q: &ComponentQuery,
    tables: &CountTables,
) -> Result<MomentEstimate> {
    let (n, k, l) = (w.n(), q.k(), q.l());
    if w.n() <= EXACT_RATIONAL_MAX_N {
        let v = mean_x_rational(n, k, l, &w.p_exact(), &tables.store)?;
        return Ok(MomentEstimate::rational(v));
    }
    if !q.is_possible() {
        return Ok(MomentEstimate::logspace(
            f64::NEG_INFINITY,
            Method::ExactLogspace,
            ErrorBudget::zero(ErrorKind::EX),
        ));
    }
    let (ln_count, method, budget) = if k <= tables.store.k_max() {
        let c = tables.store.count_excess(k, l)?;
        (ln_biguint(&c), Method::ExactLogspace, 0.0)
    } else {
        let kf = k as f64;
        let lf = l as f64;
        let budget = lf * lf / kf + (lf + 1.0).powf(1.0 / 16.0) / kf.powf(9.0 / 50.0);
        (
            count_connected_asymptotic(k, l, &tables.wright)?,
            Method::Asymptotic,
            budget,
        )
    };
    let p = w.p();
    let log_value = ln_binomial(n, k)
        + ln_count
        + xlog(q.edges() as f64, p.ln())
        + xlog(absent_pairs(n, k, l) as f64, (-p).ln_1p());
    Ok(MomentEstimate::logspace(
        log_value,
        method,
        ErrorBudget {
            kind: ErrorKind::EX,
            value: budget,
        },
    ))
}

fn check_lambda(w: &CriticalWindow) -> Result<()> {
    require(
        w.lambda().abs() <= w.n_pow(1.0 / 12.0),
        "requires |lambda| <= n^(1/12)",
    )
}

fn check_k_upper(w: &CriticalWindow, k: u64) -> Result<()> {
    require(k <= w.truncation(), "requires k <= n^(3/4)")
}

/// Count-error terms `l²/k + (l+1)^{1/16}/k^{9/50}` of the Wright asymptotic.
fn count_budget(k: u64, l: i64) -> f64 {
    let kf = k as f64;
    let lf = l as f64;
    lf * lf / kf + (lf + 1.0).powf(1.0 / 16.0) / kf.powf(9.0 / 50.0)
}

/// `E[X(k,k+l)] ≈ γ_l k^{3l/2−1} / ((2π)^{1/2} n^l) · e^{−F_λ(a)}`.
pub fn mean_x_asymptotic(
    w: &CriticalWindow,
    q: &ComponentQuery,
    table: &WrightTable,
) -> Result<MomentEstimate> {
    check_lambda(w)?;
    check_k_upper(w, q.k())?;
    let (k, l) = (q.k() as f64, q.l());
    let limit = (4.0 * w.n_pow(0.25)).min(4.0 * k.sqrt());
    require(l as f64 <= limit, "requires l <= min(4*n^(1/4), 4*sqrt(k))")?;
    let lf = l as f64;
    let log_value = table.ln_gamma(l)? + (1.5 * lf - 1.0) * k.ln()
        - 0.5 * (2.0 * PI).ln()
        - lf * w.nf().ln()
        - rate_f(w.lambda(), q.a());
    let ex = error_term(ErrorKind::EX, q.k(), w.n(), l, w.lambda())?;
    Ok(MomentEstimate::logspace(
        log_value,
        Method::Asymptotic,
        ErrorBudget {
            kind: ErrorKind::EX,
            value: ex.value + count_budget(q.k(), l),
        },
    ))
}

/// Upper envelope
/// `(c/k) (k³/(n²(l∨1)))^{l/2} e^{−F_λ(a) + λ³k/(3n)} ((1+λn^{−1/3})/(1−2/n))^l`.
pub fn mean_x_upper(w: &CriticalWindow, q: &ComponentQuery, c: f64) -> Result<MomentEstimate> {
    check_lambda(w)?;
    require(q.k() < w.n(), "requires k <= n-1")?;
    if c.is_nan() || c <= 0.0 {
        return Err(Error::domain("envelope constant c must be positive"));
    }
    let (n, k, l) = (w.nf(), q.k() as f64, q.l() as f64);
    let drift = 1.0 + w.lambda() / n.cbrt();
    if drift <= 0.0 {
        return Err(Error::domain("envelope undefined when n*p = 0"));
    }
    let ratio = drift / (1.0 - 2.0 / n);
    let log_value = c.ln() - k.ln() + 0.5 * l * (k.powi(3) / (n * n * l.max(1.0))).ln()
        - rate_f(w.lambda(), q.a())
        + w.lambda().powi(3) * k / (3.0 * n)
        + l * ratio.ln();
    Ok(MomentEstimate::logspace(
        log_value,
        Method::UpperBound,
        ErrorBudget::zero(ErrorKind::EX),
    ))
}

fn require_small(w: &CriticalWindow) -> Result<()> {
    require(
        w.n() <= EXACT_RATIONAL_MAX_N,
        "requires n <= 12 for exact mode",
    )
}

/// Exact `E[Y(k)] = Σ_l E[X(k,k+l)]` as a rational (any `n`, rational `p`).
pub fn mean_y_rational(
    n: u64,
    k: u64,
    p: &BigRational,
    store: &ExactCountStore,
) -> Result<BigRational> {
    let mut total = BigRational::zero();
    for l in -1..=max_excess(k).max(-1) {
        total += mean_x_rational(n, k, l, p, store)?;
    }
    Ok(total)
}

/// `E[Y(k)]`: components with exactly `k` vertices.
///
/// Asymptotically `k^{1/2} / ((8π)^{1/2} n) · e^{−G_λ(a)}` with budget `M1`.
pub fn mean_y(
    w: &CriticalWindow,
    k: u64,
    mode: Mode,
    tables: &CountTables,
) -> Result<MomentEstimate> {
    match mode {
        Mode::ExactSmall => {
            require_small(w)?;
            require(k >= 1 && k <= w.n(), "requires 1 <= k <= n")?;
            let v = mean_y_rational(w.n(), k, &w.p_exact(), &tables.store)?;
            Ok(MomentEstimate::rational(v))
        }
        Mode::Asymptotic => {
            check_lambda(w)?;
            require(
                k as f64 >= w.scale() && k <= w.truncation(),
                "requires n^(2/3) <= k <= n^(3/4)",
            )?;
            Ok(MomentEstimate::logspace(
                mean_y_log_main(w, k),
                Method::Asymptotic,
                error_term(ErrorKind::M1, k, w.n(), 0, w.lambda())?,
            ))
        }
    }
}

pub(crate) fn mean_y_log_main(w: &CriticalWindow, k: u64) -> f64 {
    let (g, _) = rate_g(w.lambda(), w.scaled_size(k));
    0.5 * (k as f64).ln() - 0.5 * (8.0 * PI).ln() - w.nf().ln() - g
}

pub(crate) fn mean_z_log_main(w: &CriticalWindow, k: u64) -> f64 {
    let a = w.scaled_size(k);
    let (g, g_prime) = rate_g(w.lambda(), a);
    0.5 * a.ln() - g_prime.ln() - g - 0.5 * (8.0 * PI).ln()
}

/// Lower edge of the `Z` window, `max(3λ, 1) n^{2/3}`.
pub fn z_window_start(w: &CriticalWindow) -> f64 {
    (3.0 * w.lambda()).max(1.0) * w.scale()
}

/// `E[Z(k)]`: components with between `k` and `⌊n^{3/4}⌋` vertices.
///
/// Asymptotically `(a^{1/2}/G'_λ(a)) e^{−G_λ(a)} / (8π)^{1/2}` with relative
/// budget `M1` and additive budget `A1`.
pub fn mean_z(
    w: &CriticalWindow,
    k: u64,
    mode: Mode,
    tables: &CountTables,
) -> Result<MomentEstimate> {
    match mode {
        Mode::ExactSmall => {
            require_small(w)?;
            require(k >= 1 && k <= w.truncation(), "requires 1 <= k <= n^(3/4)")?;
            let p = w.p_exact();
            let mut total = BigRational::zero();
            for j in k..=w.truncation() {
                total += mean_y_rational(w.n(), j, &p, &tables.store)?;
            }
            Ok(MomentEstimate::rational(total))
        }
        Mode::Asymptotic => {
            check_lambda(w)?;
            require(
                k as f64 >= z_window_start(w),
                "requires max(3*lambda, 1)*n^(2/3) <= k",
            )?;
            check_k_upper(w, k)?;
            let mut est = MomentEstimate::logspace(
                mean_z_log_main(w, k),
                Method::Asymptotic,
                error_term(ErrorKind::M1, k, w.n(), 0, w.lambda())?,
            );
            est.additive = Some(error_term(ErrorKind::A1, k, w.n(), 0, w.lambda())?);
            Ok(est)
        }
    }
}

/// Summation mode for [`sum_counts_scaled`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumMode {
    Asymptotic,
    Exact,
}

/// `ln Σ_{l=−1}^{L} C(k,k+l)/n^l`.
///
/// The asymptotic form is `ln(k^{k+1}/(2n)) + k³/(24n²)`, valid for
/// `k ≥ n^{2/3}` and `k³/n² ≤ L ≤ 4√k`. The exact form sums big rationals.
pub fn sum_counts_scaled(
    k: u64,
    n: u64,
    max_l: i64,
    mode: SumMode,
    store: &ExactCountStore,
) -> Result<f64> {
    if k == 0 || n == 0 {
        return Err(Error::domain("requires k >= 1 and n >= 1"));
    }
    let (kf, nf) = (k as f64, n as f64);
    match mode {
        SumMode::Asymptotic => {
            require(kf >= nf.cbrt().powi(2), "requires k >= n^(2/3)")?;
            let lf = max_l as f64;
            require(
                kf.powi(3) / (nf * nf) <= lf && lf <= 4.0 * kf.sqrt(),
                "requires k^3/n^2 <= L <= 4*sqrt(k)",
            )?;
            Ok((kf + 1.0) * kf.ln() - (2.0 * nf).ln() + kf.powi(3) / (24.0 * nf * nf))
        }
        SumMode::Exact => {
            require(max_l >= -1, "requires L >= -1")?;
            let n_big = BigInt::from(n);
            let mut total = BigRational::zero();
            for l in -1..=max_l.min(max_excess(k)) {
                let c = rational_from_uint(store.count_excess(k, l)?);
                let term = if l < 0 {
                    c * BigRational::from_integer(n_big.clone())
                } else {
                    c / BigRational::from_integer(num_traits::pow(n_big.clone(), l as usize))
                };
                total += term;
            }
            Ok(ln_rational(&total))
        }
    }
}

/// The integer window `[J⁻, J⁺]` around the peak `l ≈ a³/12` of
/// `(e a³/(12 l))^{l/2}`, with offset coordinate `y = 12x/a³ − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceWindow {
    pub a: f64,
    pub j_minus: i64,
    pub j_plus: i64,
}

impl LaplaceWindow {
    pub fn new(a: f64) -> Result<Self> {
        if a.is_nan() || a <= 0.0 {
            return Err(Error::domain("scaled size a must be positive"));
        }
        let peak = a.powi(3) / 12.0;
        let width = a.powf(-4.0 / 3.0);
        Ok(Self {
            a,
            j_minus: (peak * (1.0 - width)).floor() as i64,
            j_plus: (peak * (1.0 + width)).floor() as i64,
        })
    }

    /// `y = 12x/a³ − 1`.
    pub fn offset(&self, x: f64) -> f64 {
        12.0 * x / self.a.powi(3) - 1.0
    }

    /// `ln (e a³/(12x))^{x/2}`.
    pub fn log_term(&self, x: f64) -> f64 {
        0.5 * x * (std::f64::consts::E * self.a.powi(3) / (12.0 * x)).ln()
    }

    /// Quadratic approximation `a³/24 − a³y²/48` of [`Self::log_term`] near
    /// the peak; accurate to `O(1/a)` inside the window.
    pub fn log_term_quadratic(&self, x: f64) -> f64 {
        let a3 = self.a.powi(3);
        let y = self.offset(x);
        a3 / 24.0 - a3 * y * y / 48.0
    }
}

/// `c e^{−L/2}`, bounding `Σ_{l≥L} E[X(k,k+l)]`.
pub fn l_tail_bound(w: &CriticalWindow, k: u64, max_l: i64, c: f64) -> Result<f64> {
    require(w.n() >= 25, "requires n >= 25")?;
    check_lambda(w)?;
    require(k >= 1, "requires k >= 1")?;
    check_k_upper(w, k)?;
    let threshold = (4.0 * w.n_pow(0.25)).min(4.0 * (k as f64).cbrt());
    require(
        max_l as f64 >= threshold,
        "requires L >= min(4*n^(1/4), 4*k^(1/3))",
    )?;
    Ok(c * (-(max_l as f64) / 2.0).exp())
}

/// How to evaluate [`tail_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralMode {
    Asymptotic,
    Quadrature,
}

/// `∫_a^∞ y^r e^{−G_λ(y)} dy`, or its main term `a^r e^{−G_λ(a)}/G'_λ(a)`.
pub fn tail_integral(a: f64, lambda: f64, r: f64, mode: IntegralMode) -> Result<f64> {
    require(
        a >= (3.0 * lambda).max(1.0),
        "requires a >= max(1, 3*lambda)",
    )?;
    if r.is_nan() || r < 0.0 {
        return Err(Error::domain("exponent r must be nonnegative"));
    }
    let (g_a, g_prime) = rate_g(lambda, a);
    match mode {
        IntegralMode::Asymptotic => Ok(a.powf(r) * (-g_a).exp() / g_prime),
        IntegralMode::Quadrature => {
            // Integrate e^{G(a) − G(y)} y^r, then rescale, so that large `a`
            // does not underflow inside the integrator.
            let f = |y: f64| y.powf(r) * (g_a - rate_g(lambda, y).0).exp();
            let mut b = a + 1.0 / g_prime;
            while rate_g(lambda, b).0 - g_a - r * (b / a).ln() < 120.0 {
                b = a + 2.0 * (b - a);
            }
            Ok(quad::integrate(f, a, b, 1e-12) * (-g_a).exp())
        }
    }
}

/// Relative and additive error scales of the tail sum main term:
/// `n²/k³` and `n^{(r−2)/12} e^{−G_λ(n^{1/12})}`.
pub fn tail_sum_budget(w: &CriticalWindow, k: u64, r: f64) -> (f64, f64) {
    let n = w.nf();
    let rel = n * n / (k as f64).powi(3);
    let top = w.n_pow(1.0 / 12.0);
    let abs = n.powf((r - 2.0) / 12.0) * (-rate_g(w.lambda(), top).0).exp();
    (rel, abs)
}

/// Whether [`tail_sum`] returns the closed-form main term or sums directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSumMode {
    MainTerm,
    Direct,
}

/// `n^{−2/3} Σ_{j=k}^{⌊n^{3/4}⌋} (j/n^{2/3})^r e^{−G_λ(j/n^{2/3})}` or its main
/// term `a^r e^{−G_λ(a)}/G'_λ(a)`.
pub fn tail_sum(w: &CriticalWindow, k: u64, r: f64, mode: TailSumMode) -> Result<f64> {
    check_lambda(w)?;
    require(
        k as f64 >= z_window_start(w),
        "requires max(3*lambda, 1)*n^(2/3) <= k",
    )?;
    check_k_upper(w, k)?;
    let scale = w.scale();
    match mode {
        TailSumMode::MainTerm => {
            let a = w.scaled_size(k);
            let (g, g_prime) = rate_g(w.lambda(), a);
            Ok(a.powf(r) * (-g).exp() / g_prime)
        }
        TailSumMode::Direct => {
            let total: f64 = (k..=w.truncation())
                .map(|j| {
                    let y = j as f64 / scale;
                    y.powf(r) * (-rate_g(w.lambda(), y).0).exp()
                })
                .sum();
            Ok(total / scale)
        }
    }
}

fn log_add(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return x;
    }
    let m = x.max(y);
    m + ((x - m).exp() + (y - m).exp()).ln()
}

/// `ln[binomial(n−j,k)/binomial(n,k) · (1−p)^{−jk}]`.
fn ln_pair_quotient(w: &CriticalWindow, j: u64, k: u64) -> f64 {
    let n = w.n();
    if j + k > n {
        return f64::NEG_INFINITY;
    }
    ln_binomial(n - j, k) - ln_binomial(n, k) - xlog((j * k) as f64, (-w.p()).ln_1p())
}

/// Exact rational form of [`second_moment_pair`].
pub fn second_moment_pair_rational(
    n: u64,
    p: &BigRational,
    (j, l): (u64, i64),
    (k, l2): (u64, i64),
    store: &ExactCountStore,
) -> Result<BigRational> {
    let ex_j = mean_x_rational(n, j, l, p, store)?;
    let ex_k = mean_x_rational(n, k, l2, p, store)?;
    if j + k > n {
        return Ok(if (j, l) == (k, l2) {
            ex_k
        } else {
            BigRational::zero()
        });
    }
    let ratio = rational_from_uint(binomial(n - j, k)) / rational_from_uint(binomial(n, k));
    let q = BigRational::one() - p;
    // (1−p)^{−jk}
    let boost = pow_rational(&q, j * k).recip();
    let cross = ex_j.clone() * ex_k * ratio * boost;
    Ok(if (j, l) == (k, l2) {
        ex_j + cross
    } else {
        cross
    })
}

/// `E[X(j,j+l) X(k,k+l')]` by the exact disjoint-components identity:
///
/// * diagonal: `E[X²] = E[X] + E[X]² · binomial(n−k,k)/binomial(n,k) · (1−p)^{−k²}`,
/// * otherwise: `E[X_j]E[X_k] · binomial(n−j,k)/binomial(n,k) · (1−p)^{−jk}`,
///   which is 0 when `j + k > n`.
pub fn second_moment_pair(
    w: &CriticalWindow,
    (j, l): (u64, i64),
    (k, l2): (u64, i64),
    tables: &CountTables,
) -> Result<MomentEstimate> {
    let qj = ComponentQuery::new(w, j, l)?;
    let qk = ComponentQuery::new(w, k, l2)?;
    if w.n() <= EXACT_RATIONAL_MAX_N {
        let v = second_moment_pair_rational(w.n(), &w.p_exact(), (j, l), (k, l2), &tables.store)?;
        return Ok(MomentEstimate::rational(v));
    }
    let ej = mean_x_exact(w, &qj, tables)?;
    let ek = mean_x_exact(w, &qk, tables)?;
    let method = if ej.method == Method::Asymptotic || ek.method == Method::Asymptotic {
        Method::Asymptotic
    } else {
        Method::ExactLogspace
    };
    let budget = ErrorBudget {
        kind: ErrorKind::EX,
        value: ej.budget.value + ek.budget.value,
    };
    let cross = ej.log_value + ek.log_value + ln_pair_quotient(w, j, k);
    let log_value = if (j, l) == (k, l2) {
        log_add(ek.log_value, cross)
    } else {
        cross
    };
    Ok(MomentEstimate::logspace(log_value, method, budget))
}

/// Which count the second moment is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Y,
    Z,
}

/// Exact `E[Y(i) Y(j)]` summed over all excess pairs.
fn y_product_rational(
    n: u64,
    p: &BigRational,
    i: u64,
    j: u64,
    store: &ExactCountStore,
) -> Result<BigRational> {
    let mut total = BigRational::zero();
    for l in -1..=max_excess(i).max(-1) {
        for l2 in -1..=max_excess(j).max(-1) {
            total += second_moment_pair_rational(n, p, (i, l), (j, l2), store)?;
        }
    }
    Ok(total)
}

/// `E[Y(k)²]` or `E[Z(k)²]`.
///
/// The asymptotic form is `E[V] + E[V]² exp(λk²/n^{4/3} − k³/n²)` built from
/// [`mean_y`] / [`mean_z`]; for `Z` it is an upper bound. The exact-small mode
/// assembles the exact pair identities over all excess pairs (and all sizes
/// `k..=N` for `Z`).
pub fn second_moment_y_z(
    w: &CriticalWindow,
    k: u64,
    which: Which,
    mode: Mode,
    tables: &CountTables,
) -> Result<MomentEstimate> {
    match mode {
        Mode::ExactSmall => {
            require_small(w)?;
            let p = w.p_exact();
            let n = w.n();
            let v = match which {
                Which::Y => {
                    require(k >= 1 && k <= n, "requires 1 <= k <= n")?;
                    y_product_rational(n, &p, k, k, &tables.store)?
                }
                Which::Z => {
                    let top = w.truncation();
                    require(k >= 1 && k <= top, "requires 1 <= k <= n^(3/4)")?;
                    let mut total = BigRational::zero();
                    for i in k..=top {
                        for j in k..=top {
                            total += y_product_rational(n, &p, i, j, &tables.store)?;
                        }
                    }
                    total
                }
            };
            Ok(MomentEstimate::rational(v))
        }
        Mode::Asymptotic => {
            check_k_upper(w, k)?;
            let (first, method) = match which {
                Which::Y => (mean_y(w, k, Mode::Asymptotic, tables)?, Method::Asymptotic),
                Which::Z => {
                    require(
                        w.lambda() * w.scale() <= k as f64,
                        "requires lambda*n^(2/3) <= k",
                    )?;
                    (mean_z(w, k, Mode::Asymptotic, tables)?, Method::UpperBound)
                }
            };
            let (n, kf) = (w.nf(), k as f64);
            let coupling = w.lambda() * kf * kf / (n * n.cbrt()) - kf.powi(3) / (n * n);
            let log_value = log_add(first.log_value, 2.0 * first.log_value + coupling);
            let extra = match which {
                Which::Y => kf / n + kf.powi(4) / n.powi(3),
                Which::Z => n.powf(-1.0 / 11.0),
            };
            let mut est = MomentEstimate::logspace(
                log_value,
                method,
                ErrorBudget {
                    kind: first.budget.kind,
                    value: first.budget.value + extra,
                },
            );
            est.additive = first.additive;
            Ok(est)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn window(n: u64, lambda: f64) -> CriticalWindow {
        CriticalWindow::new(n, lambda).unwrap()
    }

    fn mean_x(n: u64, lambda: f64, k: u64, l: i64, t: &CountTables) -> MomentEstimate {
        let w = window(n, lambda);
        mean_x_exact(&w, &ComponentQuery::new(&w, k, l).unwrap(), t).unwrap()
    }

    #[test]
    fn mean_x_small_examples() {
        let t = CountTables::default();
        let e = mean_x(2, 0.0, 2, -1, &t);
        assert_eq!(e.method, Method::ExactRational);
        assert_eq!(e.exact, Some(frac(1, 2)));
        assert_eq!(mean_x(3, 0.0, 2, -1, &t).exact, Some(frac(4, 9)));
        assert_eq!(mean_x(3, 0.0, 3, 0, &t).exact, Some(frac(1, 27)));
        let impossible = mean_x(3, 0.0, 2, 0, &t);
        assert_eq!(impossible.log_value, f64::NEG_INFINITY);
        let w = window(3, 0.0);
        assert!(ComponentQuery::new(&w, 4, 0).is_err());
    }

    #[test]
    fn logspace_matches_rational_at_moderate_n() {
        let t = CountTables::default();
        let w = window(40, 0.5);
        let q = ComponentQuery::new(&w, 7, 1).unwrap();
        let float = mean_x_exact(&w, &q, &t).unwrap();
        assert_eq!(float.method, Method::ExactLogspace);
        let exact = mean_x_rational(40, 7, 1, &w.p_exact(), &t.store).unwrap();
        assert!((float.log_value - ln_rational(&exact)).abs() < 1e-11);
    }

    #[test]
    fn beyond_store_cap_uses_asymptotic_count() {
        let t = CountTables::new(ExactCountStore::new(20), WrightTable::new(16));
        let w = window(1_000_000, 0.0);
        let q = ComponentQuery::new(&w, 25, 1).unwrap();
        let e = mean_x_exact(&w, &q, &t).unwrap();
        assert_eq!(e.method, Method::Asymptotic);
        assert!(e.budget.value > 0.0);
    }

    #[test]
    fn asymptotic_mean_x_direct_formula() {
        let t = CountTables::default();
        let w = window(1_000_000, 0.0);
        let k = 10_000u64;
        let q = ComponentQuery::new(&w, k, -1).unwrap();
        let e = mean_x_asymptotic(&w, &q, &t.wright).unwrap();
        let kf = k as f64;
        let expect = -2.5 * kf.ln() - 0.5 * (2.0 * PI).ln() + 1e6f64.ln() - rate_f(0.0, 1.0);
        assert!((e.log_value - expect).abs() < 1e-12);

        // Same quantity through the exact identity with the Wright count.
        for l in [0, 1] {
            let q = ComponentQuery::new(&w, k, l).unwrap();
            let asym = mean_x_asymptotic(&w, &q, &t.wright).unwrap();
            let ident = mean_x_exact(&w, &q, &t).unwrap();
            let gap = (asym.log_value - ident.log_value).exp() - 1.0;
            assert!(
                gap.abs() <= asym.budget.value,
                "l={l} gap={gap} budget={}",
                asym.budget.value
            );
        }

        let q = ComponentQuery::new(&w, 1_000_000, 0).unwrap();
        let err = mean_x_asymptotic(&w, &q, &t.wright).unwrap_err();
        assert!(err.to_string().contains("k <= n^(3/4)"));
    }

    #[test]
    fn upper_envelope_dominates_and_decreases() {
        let t = CountTables::default();
        let w = window(3, 0.0);
        let q = ComponentQuery::new(&w, 2, -1).unwrap();
        let up = mean_x_upper(&w, &q, 10.0).unwrap();
        assert_eq!(up.method, Method::UpperBound);
        assert!(up.value() >= 4.0 / 9.0);
        assert!(up.log_value.is_finite());

        let w = window(10_000, 0.0);
        let k = 400u64;
        let threshold = (k as f64).powi(3) / 1e8;
        let mut prev = f64::INFINITY;
        for l in (threshold.ceil() as i64).max(1)..60 {
            let q = ComponentQuery::new(&w, k, l).unwrap();
            let v = mean_x_upper(&w, &q, 1.0).unwrap().log_value;
            assert!(v < prev);
            prev = v;
        }
        let _ = t;
    }

    #[test]
    fn mean_y_examples() {
        let t = CountTables::default();
        let y = mean_y(&window(3, 0.0), 2, Mode::ExactSmall, &t).unwrap();
        assert_eq!(y.exact, Some(frac(4, 9)));
        let y = mean_y(&window(3, 0.0), 3, Mode::ExactSmall, &t).unwrap();
        assert_eq!(y.exact, Some(frac(7, 27)));

        let w = window(1_000_000, 0.0);
        let y = mean_y(&w, 20_000, Mode::Asymptotic, &t).unwrap();
        let expect = 20_000f64.sqrt() / ((8.0 * PI).sqrt() * 1e6) * (-1.0f64).exp();
        assert!((y.value() / expect - 1.0).abs() < 1e-12);
        assert_eq!(y.budget.kind, ErrorKind::M1);
        assert!(mean_y(&w, 5_000, Mode::Asymptotic, &t).is_err());
        assert!(mean_y(&w, 5, Mode::ExactSmall, &t).is_err());
    }

    #[test]
    fn mean_z_examples() {
        let t = CountTables::default();
        let w = window(1_000_000, 0.0);
        let z = mean_z(&w, 20_000, Mode::Asymptotic, &t).unwrap();
        let expect = 2f64.sqrt() / ((8.0 * PI).sqrt() * 1.5) * (-1.0f64).exp();
        assert!((z.value() - expect).abs() < 1e-12);
        assert!((z.value() - 0.0692).abs() < 1e-4);
        assert!(z.additive.is_some());
        let mut prev = f64::INFINITY;
        for k in (10_000..=31_622).step_by(500) {
            let v = mean_z(&w, k, Mode::Asymptotic, &t).unwrap().log_value;
            assert!(v < prev);
            prev = v;
        }
        assert!(mean_z(&w, 1_000_000, Mode::Asymptotic, &t).is_err());
        assert!(mean_z(&w, 9_000, Mode::Asymptotic, &t).is_err());
    }

    #[test]
    fn sum_counts_examples() {
        let store = ExactCountStore::default();
        let v = sum_counts_scaled(4, 9, -1, SumMode::Exact, &store).unwrap();
        assert!((v - (16.0f64 * 9.0).ln()).abs() < 1e-12);
        assert!(sum_counts_scaled(20, 60, 1, SumMode::Asymptotic, &store).is_err());

        let gap = |k: u64, n: u64| {
            let l = (4.0 * (k as f64).sqrt()).floor() as i64;
            let exact = sum_counts_scaled(k, n, l, SumMode::Exact, &store).unwrap();
            let asym = sum_counts_scaled(k, n, l, SumMode::Asymptotic, &store).unwrap();
            ((asym - exact).exp() - 1.0).abs()
        };
        let g20 = gap(20, 60);
        let g16 = gap(16, 44);
        assert!(g20.is_finite() && g16.is_finite());
    }

    #[test]
    fn laplace_window_quadratic_is_close() {
        let lw = LaplaceWindow::new(12.0).unwrap();
        assert!(lw.j_minus <= lw.j_plus);
        for x in lw.j_minus.max(1)..=lw.j_plus {
            let x = x as f64;
            assert!(lw.offset(x).abs() <= lw.a.powf(-4.0 / 3.0) + 12.0 / lw.a.powi(3));
            assert!((lw.log_term(x) - lw.log_term_quadratic(x)).abs() <= 1.0 / lw.a);
        }
    }

    #[test]
    fn l_tail_examples() {
        let w = window(1_000_000, 0.0);
        let v = l_tail_bound(&w, 100, 40, 1.0).unwrap();
        assert!((v - (-20.0f64).exp()).abs() < 1e-20);
        assert!((v - 2.06e-9).abs() < 1e-11);
        assert!(l_tail_bound(&w, 100, 10, 1.0).is_err());
        assert!(l_tail_bound(&window(12, 0.0), 6, 8, 1.0).is_err());

        // Exact tail Σ_{l≥8} E[X(6, 6+l)] against 10·e^{−4}, at n = 12 and 25.
        let store = ExactCountStore::default();
        for n in [12u64, 25] {
            let p = window(n, 0.0).p_exact();
            let mut tail = BigRational::zero();
            for l in 8..=max_excess(6) {
                tail += mean_x_rational(n, 6, l, &p, &store).unwrap();
            }
            assert!(ln_rational(&tail) <= 10f64.ln() - 4.0);
        }
        let bound = l_tail_bound(&window(25, 0.0), 6, 8, 10.0).unwrap();
        assert!((bound - 10.0 * (-4.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn tail_integral_examples() {
        let asym = tail_integral(5.0, 0.0, 0.0, IntegralMode::Asymptotic).unwrap();
        assert!((asym - (-15.625f64).exp() / 9.375).abs() < 1e-20);
        assert!((asym / 1.7465e-8 - 1.0).abs() < 1e-4);
        let quad = tail_integral(5.0, 0.0, 0.0, IntegralMode::Quadrature).unwrap();
        assert!(quad < asym && quad > 0.9 * asym);
        assert!(tail_integral(0.5, 0.0, 0.0, IntegralMode::Asymptotic).is_err());
        assert!(tail_integral(2.0, 1.0, 0.0, IntegralMode::Asymptotic).is_err());
    }

    #[test]
    fn quadrature_against_closed_form() {
        // λ = 0, r = 2: ∫ y² e^{−y³/8} dy = (8/3) e^{−a³/8}, exactly.
        for a in [1.0, 3.0, 7.5] {
            let q = tail_integral(a, 0.0, 2.0, IntegralMode::Quadrature).unwrap();
            let exact = 8.0 / 3.0 * (-a * a * a / 8.0f64).exp();
            assert!((q / exact - 1.0).abs() < 1e-10, "a={a}");
        }
    }

    #[test]
    fn tail_sum_modes() {
        let w = window(1_000_000, 0.0);
        let top = w.truncation();
        let single = tail_sum(&w, top, 0.0, TailSumMode::Direct).unwrap();
        let main = tail_sum(&w, top, 0.0, TailSumMode::MainTerm).unwrap();
        assert!(single > 0.0 && main > 0.0);
        let direct = tail_sum(&w, 20_000, 0.5, TailSumMode::Direct).unwrap();
        let main = tail_sum(&w, 20_000, 0.5, TailSumMode::MainTerm).unwrap();
        assert!(direct < main);
        assert!(tail_sum(&w, 5_000, 0.0, TailSumMode::MainTerm).is_err());
    }

    #[test]
    fn second_moment_pair_examples() {
        let t = CountTables::default();
        let w3 = window(3, 0.0);
        let x2 = second_moment_pair(&w3, (2, -1), (2, -1), &t).unwrap();
        assert_eq!(x2.exact, Some(frac(4, 9)));
        let w4 = window(4, 0.0);
        let x2 = second_moment_pair(&w4, (2, -1), (2, -1), &t).unwrap();
        assert_eq!(x2.exact, Some(frac(1215, 2048)));
        let off = second_moment_pair(&w4, (2, -1), (2, 0), &t).unwrap();
        assert_eq!(off.exact, Some(BigRational::zero()));
    }

    #[test]
    fn second_moment_pair_logspace_matches_rational() {
        let t = CountTables::default();
        let w = window(30, -0.5);
        let p = w.p_exact();
        for (a, b) in [((3, 0), (3, 0)), ((4, -1), (6, 1)), ((20, 0), (15, 1))] {
            let f = second_moment_pair(&w, a, b, &t).unwrap();
            let r = second_moment_pair_rational(30, &p, a, b, &t.store).unwrap();
            if r.is_zero() {
                assert_eq!(f.log_value, f64::NEG_INFINITY);
            } else {
                assert!((f.log_value - ln_rational(&r)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn second_moment_y_z_asymptotic() {
        let t = CountTables::default();
        let w = window(1_000_000, 0.0);
        let k = 20_000u64;
        let y = mean_y(&w, k, Mode::Asymptotic, &t).unwrap().value();
        let y2 = second_moment_y_z(&w, k, Which::Y, Mode::Asymptotic, &t).unwrap();
        let excess = y2.value() - y;
        let expect = y * y * (-8.0f64).exp();
        assert!(excess > 0.0);
        assert!((excess / expect - 1.0).abs() < 1e-6);
        let z2 = second_moment_y_z(&w, k, Which::Z, Mode::Asymptotic, &t).unwrap();
        assert_eq!(z2.method, Method::UpperBound);
        assert!(z2.value() >= y2.value());
    }

    #[test]
    fn second_moment_y_exact_small() {
        let t = CountTables::default();
        let w = window(4, 0.0);
        let y2 = second_moment_y_z(&w, 2, Which::Y, Mode::ExactSmall, &t).unwrap();
        // Only trees exist on two vertices, so Y(2)² = X(2,1)².
        assert_eq!(y2.exact, Some(frac(1215, 2048)));
        let z2 = second_moment_y_z(&w, 1, Which::Z, Mode::ExactSmall, &t).unwrap();
        let y1 = second_moment_y_z(&w, 1, Which::Y, Mode::ExactSmall, &t).unwrap();
        assert!(z2.exact.unwrap() >= y1.exact.unwrap());
    }
}
