//! Skeletal program enumeration for compiler testing.
//!
//! A MiniC program is reduced to a skeleton whose variable occurrences are
//! holes. The enumerator emits one representative per class of hole fillings
//! that are equivalent under scope- and type-preserving variable renaming,
//! and the harness feeds the realized variants to external compilers.

pub mod cli;
pub mod combinat;
pub mod enumerator;
pub mod harness;
pub mod minilang;
pub mod skeleton;
