//! Provenance-aware relational queries and the privacy cost of publishing
//! their provenance.
//!
//! Queries over CSV-backed relations are evaluated with where-, why- or
//! how-provenance ([`engine`]). A published result can be inverted into the
//! source data it reveals ([`reconstruct`]), that reconstruction scored
//! against the real source and a policy ([`privacy`]), and the publication
//! coarsened, suppressed or shuffled ([`mitigate`]). The `prov` binary drives
//! the same pipeline from files ([`cli`]).

pub mod cli;
pub mod engine;
pub mod mitigate;
pub mod privacy;
pub mod query;
pub mod reconstruct;
pub mod relmodel;
