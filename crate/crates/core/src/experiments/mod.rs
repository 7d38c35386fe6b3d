//! The benchmark problems.

pub mod mixture2d;
pub mod galaxy;
pub mod tfbs;
