//! Metric geometry of complete, partial and generalized rankings, and its
//! application to finding voter blocs and candidate slates in ranked-choice
//! elections.

#![allow(clippy::needless_range_loop)]

pub mod ballot;
pub mod clustering;
pub mod error;
pub mod exec;
pub mod graphs;
pub mod half;
pub mod ingest;
pub mod metrics;
pub mod profile;
pub mod slates;
pub mod sweep;
pub mod synthetic;
pub mod viz;

pub use ballot::{canonicalize, count_ballots, Ballot, CandidateId, GeneralizedBallot, Ranking};
pub use error::{Error, Result};
pub use exec::Exec;
pub use half::HalfInt;
pub use metrics::BordaConvention;
pub use profile::Profile;
