//! Laver tables computed on the nonnegative integers with the backwards
//! operation `*`, plus the derived statistics, maximal-element combinatorics,
//! a term language and randomized verification suites.

pub mod element;
pub mod error;
pub mod ld;
pub mod maximal;
pub mod stats;
pub mod store;
pub mod term;
pub mod verify;

pub use element::{ElementId, ELEMENT_BOUND};
pub use error::{Error, FormatError, Result};
pub use ld::{Convention, Laver, PeriodInfo, PlotKind, Resolver, Row, TableView};
pub use store::{RowCache, ThresholdStore};
