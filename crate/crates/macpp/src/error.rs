// SPDX-License-Identifier: Apache-2.0 OR MIT
use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid support: {0}")]
    InvalidSupport(String),
    #[error("invalid plane partition: {0}")]
    InvalidPlanePartition(String),
    #[error("coordinate {x} outside the domain ({lo}, {hi})")]
    Domain { x: i64, lo: i64, hi: i64 },
    #[error("enumeration budget exceeded: estimated {estimate} > budget {budget}")]
    Budget { estimate: u128, budget: u128 },
    #[error("invalid weight specification: {0}")]
    InvalidSpec(String),
    #[error("weights are not summable: a_{{{e1}}}^-1 a_{{{e2}}} = {ratio} >= 1")]
    NotSummable { e1: f64, e2: f64, ratio: f64 },
    #[error("no admissible contour: {0}")]
    Contour(String),
    #[error("invalid back wall: {0}")]
    InvalidWall(String),
    #[error("root finding failed: {0}")]
    RootFinding(String),
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;
