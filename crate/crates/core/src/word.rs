//! Words over a self-similar presentation.
//!
//! An [`Atom`] is a generator power, a finitary rooted permutation at the top
//! of the current subtree, or a planted atom `plant(v; w)` acting as `w` on
//! the subtree at `v` and trivially elsewhere.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::perm::Perm;
use crate::tree::Vertex;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Atom {
    Gen { id: u16, exp: i32 },
    Rooted(Perm),
    Planted { vertex: Vertex, inner: Word },
}

impl Atom {
    pub fn gen(id: u16) -> Self {
        Atom::Gen { id, exp: 1 }
    }

    pub fn weight(&self) -> usize {
        match self {
            Atom::Gen { exp, .. } => exp.unsigned_abs() as usize,
            Atom::Rooted(_) => 1,
            Atom::Planted { inner, .. } => 1 + inner.weight(),
        }
    }

    pub fn inverse(&self) -> Atom {
        match self {
            Atom::Gen { id, exp } => Atom::Gen { id: *id, exp: -exp },
            Atom::Rooted(p) => Atom::Rooted(p.inverse()),
            Atom::Planted { vertex, inner } => Atom::Planted {
                vertex: vertex.clone(),
                inner: inner.inverse(),
            },
        }
    }
}

/// A sequence of atoms, ordered shortlex (weight first, then lexicographically).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Word(pub(crate) Vec<Atom>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Self {
        Word(atoms)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Letter count: generator exponents count with multiplicity.
    pub fn weight(&self) -> usize {
        self.0.iter().map(Atom::weight).sum()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(Atom::inverse).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut atoms = self.0.clone();
        atoms.extend_from_slice(&other.0);
        Word(atoms)
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight()
            .cmp(&other.weight())
            .then_with(|| self.0.cmp(&other.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortlex_prefers_lighter_words() {
        let short = Word(vec![Atom::Gen { id: 3, exp: 1 }]);
        let long = Word(vec![Atom::gen(0), Atom::gen(0)]);
        assert!(short < long);
        let a = Word(vec![Atom::gen(0), Atom::gen(1)]);
        let b = Word(vec![Atom::gen(1), Atom::gen(0)]);
        assert!(a < b);
    }

    #[test]
    fn inverse_reverses_and_negates() {
        let w = Word(vec![Atom::gen(0), Atom::Gen { id: 1, exp: 2 }]);
        assert_eq!(
            w.inverse(),
            Word(vec![Atom::Gen { id: 1, exp: -2 }, Atom::Gen { id: 0, exp: -1 }])
        );
        assert_eq!(w.inverse().inverse(), w);
    }
}
