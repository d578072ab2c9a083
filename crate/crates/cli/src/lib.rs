//! Config-driven scenario runner over `orbitlets-core`.

pub mod config;
pub mod report;
pub mod scenarios;
pub mod setup;
