//! Fox calculus over free groups: derivatives, Magnus expansions, Schreier
//! rewriting, filtration valuations and group-ring matrix triangularization,
//! with decision pipelines for freedom theorems of one- and few-relator
//! relatively free groups.

pub mod cli;
pub mod error;
pub mod filtration;
pub mod fox;
pub mod freiheit;
pub mod jacobian;
pub mod laurent;
pub mod magnus;
pub mod oracle;
pub mod parse;
pub mod ring;
pub mod schreier;
pub mod subgroup;
pub mod words;

pub use error::{Error, Result};
pub use ring::{QuotientSpec, RingElement};
pub use words::{FreeGroup, Word};
