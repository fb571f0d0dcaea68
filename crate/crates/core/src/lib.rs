//! Exact computation in groups of automorphisms of spherically homogeneous
//! rooted trees: wreath recursion and the word problem, finite level
//! quotients with stabilizer chains, rigid stabilizers, and certificate
//! builders for non-closed subgroup families.

pub mod catalog;
pub mod constructions;
pub mod element;
pub mod error;
pub mod perm;
pub mod presentation;
pub mod quotient;
pub mod stabilizers;
pub mod syntax;
pub mod tree;
pub mod word;

pub use element::{Element, Portrait};
pub use error::{Error, Result};
pub use perm::Perm;
pub use presentation::{Caps, GroupPresentation, Order};
pub use tree::{TreeShape, Vertex};
