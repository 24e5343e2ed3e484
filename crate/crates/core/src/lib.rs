//! Component sizes of the Erdős–Rényi graph `G(n, p)` in the critical window
//! `p = 1/n + λ n^{-4/3}`.
//!
//! The crate provides exact and asymptotic first and second moments of
//! component counts, point and tail estimates for the largest component and
//! for the component of a fixed vertex, and Monte Carlo samplers to check them.

pub mod bigmath;
pub mod error;
pub mod moments;
pub mod quad;
pub mod sim;
pub mod tails;
pub mod window;
pub mod wright;

pub use error::{Error, Result};
pub use moments::{CountTables, Method, MomentEstimate};
pub use window::{ComponentQuery, CriticalWindow, ErrorBudget, ErrorKind};
pub use wright::{ExactCountStore, WrightTable};
