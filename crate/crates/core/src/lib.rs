//! Constrained sequential pattern mining over a multi-valued decision
//! diagram (MDD) representation of an attributed sequence database.
//!
//! The usual pipeline is [`seqdb`] to load data, [`constraints`] to describe
//! what a valid occurrence is, [`mdd::build_mdd`] and [`nodeinfo::propagate`]
//! to prepare the diagram, and [`mpp_miner`] to enumerate patterns.
//! [`oracle`] holds slower reference miners.

pub mod constraints;
pub mod error;
pub mod mdd;
pub mod mpp_miner;
pub mod nodeinfo;
pub mod oracle;
pub mod pattern;
pub mod seqdb;

pub use constraints::{ConstraintSpec, Direction, ResolvedSpec};
pub use error::{Error, Result};
pub use mdd::{build_mdd, Mdd};
pub use mpp_miner::{mine_database, Counters, MineOptions, MiningRun};
pub use nodeinfo::{propagate, ConstraintPlan, InfoStore, MedianMode};
pub use pattern::{Pattern, PatternSet};
pub use seqdb::{AttributedDatabase, Event, Item, Sequence, Sid};
