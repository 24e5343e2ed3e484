pub mod enumerate;
pub mod stats;
