//! Differentially private query broker.
//!
//! Users ask statistical queries (count, average, maximum, minimum over a
//! predicated selection) with an accuracy requirement attached; the broker
//! answers each one under the Laplace mechanism while searching for the
//! smallest privacy budget that still meets the requirement, answers exact
//! repeats from a cache at zero cost, and records every expenditure on a
//! hash-chained ledger that data owners can audit and verify.

pub mod bench;
pub mod broker;
pub mod cache;
pub mod dp;
pub mod error;
pub mod ledger;
pub mod protocol;
pub mod search;
pub mod synth;
pub mod table;

pub use broker::{Broker, BrokerParams, BrokerSetup, ConfigFile, ResponseStatus, UserResponse};
pub use dp::{Eps, NType};
pub use error::{Error, Result};
pub use search::{QueryRequest, SearchParams};
pub use table::{AggregateFunction, DataTable, FunctionKind, Predicate};
