//! Critical-window parameterization `p = 1/n + λ n^{-4/3}` and the scalar
//! rate and error functions shared by every estimator.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One};

use crate::error::{Error, Result};

/// An Erdős–Rényi model `G(n, p)` inside the critical window.
///
/// Only `p ∈ [0, 1]` is validated here; the narrower λ windows of the
/// individual asymptotic statements are checked by the operations that need
/// them, because the exact identities hold for every valid `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalWindow {
    n: u64,
    lambda: f64,
    p: f64,
}

impl CriticalWindow {
    pub fn new(n: u64, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        if !lambda.is_finite() {
            return Err(Error::domain("lambda must be finite"));
        }
        let nf = n as f64;
        let p = 1.0 / nf + lambda / (nf * nf.cbrt());
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Probability { n, lambda, p });
        }
        Ok(Self { n, lambda, p })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Edge probability `1/n + λ n^{-4/3}`.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// `p` as an exact rational. For `λ = 0` this is exactly `1/n`; otherwise
    /// it is the exact dyadic value of the double `p`, so every exact identity
    /// evaluated with it is an identity about that concrete probability.
    pub fn p_exact(&self) -> BigRational {
        if self.lambda == 0.0 {
            BigRational::new(BigInt::one(), BigInt::from(self.n))
        } else {
            BigRational::from_f64(self.p).expect("p is finite")
        }
    }

    /// Truncation size `N = ⌊n^{3/4}⌋`, computed with an exact integer check.
    pub fn truncation(&self) -> u64 {
        floor_three_quarter_power(self.n)
    }

    /// `n^{2/3}`.
    pub fn scale(&self) -> f64 {
        let c = (self.n as f64).cbrt();
        c * c
    }

    /// Scaled component size `a = k / n^{2/3}`.
    pub fn scaled_size(&self, k: u64) -> f64 {
        k as f64 / self.scale()
    }

    pub(crate) fn nf(&self) -> f64 {
        self.n as f64
    }

    pub(crate) fn n_pow(&self, exponent: f64) -> f64 {
        (self.n as f64).powf(exponent)
    }
}

impl fmt::Display for CriticalWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G(n={}, p={}) [lambda={}]", self.n, self.p, self.lambda)
    }
}

/// `⌊n^{3/4}⌋` without floating-point drift at perfect powers.
pub fn floor_three_quarter_power(n: u64) -> u64 {
    let guess = (n as f64).powf(0.75).floor() as u64;
    let n3 = (n as u128).pow(3);
    let fourth = |x: u64| (x as u128).pow(4);
    let mut x = guess.saturating_sub(1);
    while fourth(x + 1) <= n3 {
        x += 1;
    }
    while x > 0 && fourth(x) > n3 {
        x -= 1;
    }
    x
}

/// A component shape: `k` vertices and `k + l` edges (excess `l`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentQuery {
    n: u64,
    k: u64,
    l: i64,
}

impl ComponentQuery {
    pub fn new(w: &CriticalWindow, k: u64, l: i64) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("component size k must be at least 1"));
        }
        if k > w.n() {
            return Err(Error::domain(format!("k = {k} exceeds n = {}", w.n())));
        }
        if l < -1 {
            return Err(Error::domain(format!("excess l = {l} is below -1")));
        }
        Ok(Self { n: w.n(), k, l })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn l(&self) -> i64 {
        self.l
    }

    /// Number of edges `k + l`.
    pub fn edges(&self) -> u64 {
        (self.k as i64 + self.l) as u64
    }

    /// `a = k / n^{2/3}`, recomputed from `(k, n)`.
    pub fn a(&self) -> f64 {
        let c = (self.n as f64).cbrt();
        self.k as f64 / (c * c)
    }

    /// False when no connected graph on `k` vertices has `k + l` edges.
    pub fn is_possible(&self) -> bool {
        max_excess(self.k) >= self.l
    }
}

/// Largest excess a connected graph on `k` vertices can have: `C(k,2) - k`.
pub fn max_excess(k: u64) -> i64 {
    let k = k as i64;
    k * (k - 1) / 2 - k
}

/// `G_λ(x) = x(x − 2λ)²/8` together with its derivative
/// `G'_λ(x) = 3x²/8 − λx + λ²/2`.
pub fn rate_g(lambda: f64, x: f64) -> (f64, f64) {
    let g = x * (x - 2.0 * lambda).powi(2) / 8.0;
    let g_prime = 3.0 * x * x / 8.0 - lambda * x + lambda * lambda / 2.0;
    (g, g_prime)
}

/// `F_λ(x) = x³/6 − λx²/2 + λ²x/2`.
pub fn rate_f(lambda: f64, x: f64) -> f64 {
    x * x * x / 6.0 - lambda * x * x / 2.0 + lambda * lambda * x / 2.0
}

/// Which family of error terms a budget belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    /// `k⁴/n³ + |λ|/n^{1/12} + |λ|³k/n + n^{2/3}/k + n^{-1/10}`.
    M1,
    /// `n^{1/4} e^{-n^{1/4}/80}`, additive.
    A1,
    /// `k⁴/n³ + |λl|/n^{1/3} + k|λ|³/n + k/n + 1/k`.
    EX,
    /// `n k^{-3/2} exp(−G_λ(a) + λk²/n^{4/3} − k³/n²)`.
    PM,
}

impl ErrorKind {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorKind::M1 => "M1",
            ErrorKind::A1 => "A1",
            ErrorKind::EX => "EX",
            ErrorKind::PM => "PM",
        }
    }
}

impl std::str::FromStr for ErrorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M1" => Ok(ErrorKind::M1),
            "A1" => Ok(ErrorKind::A1),
            "EX" => Ok(ErrorKind::EX),
            "PM" => Ok(ErrorKind::PM),
            other => Err(Error::domain(format!("unknown error kind {other:?}"))),
        }
    }
}

/// A diagnostic relative-error scale: the raw sum of the displayed terms,
/// with no implied constant. Not a guaranteed bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub kind: ErrorKind,
    pub value: f64,
}

impl ErrorBudget {
    pub fn zero(kind: ErrorKind) -> Self {
        Self { kind, value: 0.0 }
    }
}

/// Evaluates an error budget. `A1` uses only `n`; `M1` and `PM` ignore `l`.
pub fn error_term(kind: ErrorKind, k: u64, n: u64, l: i64, lambda: f64) -> Result<ErrorBudget> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let nf = n as f64;
    if kind == ErrorKind::A1 {
        let q = nf.powf(0.25);
        return Ok(ErrorBudget {
            kind,
            value: q * (-q / 80.0).exp(),
        });
    }
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    let kf = k as f64;
    let lam = lambda.abs();
    let value = match kind {
        ErrorKind::M1 => {
            kf.powi(4) / nf.powi(3)
                + lam / nf.powf(1.0 / 12.0)
                + lam.powi(3) * kf / nf
                + nf.cbrt().powi(2) / kf
                + nf.powf(-0.1)
        }
        ErrorKind::EX => {
            kf.powi(4) / nf.powi(3)
                + (lambda * l as f64).abs() / nf.cbrt()
                + kf * lam.powi(3) / nf
                + kf / nf
                + 1.0 / kf
        }
        ErrorKind::PM => {
            let a = kf / nf.cbrt().powi(2);
            let (g, _) = rate_g(lambda, a);
            let exponent = -g + lambda * kf * kf / (nf * nf.cbrt()) - kf.powi(3) / (nf * nf);
            nf / kf.powf(1.5) * exponent.exp()
        }
        ErrorKind::A1 => unreachable!(),
    };
    Ok(ErrorBudget { kind, value })
}
