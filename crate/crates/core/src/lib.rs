//! Bubble-up cuckoo hashing: a `d`-ary hash table that stays fast at loads close
//! to 1 by keeping most elements at low hash indices and running a small
//! random-walk cuckoo table over the top `d_core` indices.
//!
//! Start with [`params::ParamConfig`] to derive a [`params::ParamSet`], then build
//! a [`basic::BasicBubbleUp`] or an [`advanced::AdvancedBubbleUp`] and drive it
//! through the [`policy::BubbleUp`] trait. [`deletion::TombstoneTable`] adds
//! deletions; [`oracle`] holds the independent references the tests check against.

pub mod advanced;
pub mod basic;
pub mod choice;
pub mod deletion;
pub mod harness;
pub mod hashing;
pub mod metrics;
pub mod oracle;
pub mod params;
pub mod policy;
pub mod table;

pub use advanced::AdvancedBubbleUp;
pub use basic::BasicBubbleUp;
pub use deletion::TombstoneTable;
pub use hashing::{HashOracle, Key};
pub use params::{CheckLevel, Mode, ParamConfig, ParamSet};
pub use policy::{BubbleUp, InsertOutcome, PolicyConfig, QueryResult};
pub use table::{ChoiceMode, Table};
