//! Built-in presentations: the first Grigorchuk group, GGS and multi-GGS
//! groups, and the group generated by planted prime cycles along a tree with
//! prime arities.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Perm;
use crate::presentation::{Generator, GeneratorKind, GroupPresentation};
use crate::tree::{TreeShape, Vertex};
use crate::word::{Atom, Word};

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// A defining vector `(e_1, ..., e_{p-1})` over `Z/pZ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GgsVector {
    p: u64,
    entries: Vec<u64>,
}

impl GgsVector {
    pub fn new(p: u64, entries: &[i64]) -> Result<Self> {
        if !is_prime(p) || p < 3 {
            return Err(Error::NotPrime(p));
        }
        if entries.len() as u64 != p - 1 {
            return Err(Error::WrongVectorLength { expected: p as usize - 1, found: entries.len() });
        }
        let entries = entries.iter().map(|&e| e.rem_euclid(p as i64) as u64).collect();
        Ok(GgsVector { p, entries })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn is_non_constant(&self) -> bool {
        self.entries.windows(2).any(|w| w[0] != w[1])
    }

    pub fn is_torsion(&self) -> bool {
        self.entries.iter().sum::<u64>() % self.p == 0
    }
}

fn rooted_cycle_gen(name: &str, m: usize) -> Generator {
    Generator {
        name: name.into(),
        kind: GeneratorKind::Recursive {
            perm: Perm::cycle(m, m),
            sections: vec![Word::empty(); m],
            anchor: None,
        },
    }
}

fn directed(id_a: u16, id_self: u16, e: &GgsVector) -> Vec<Word> {
    let mut sections: Vec<Word> = e
        .entries()
        .iter()
        .map(|&k| {
            if k == 0 {
                Word::empty()
            } else {
                Word::from_atoms(vec![Atom::Gen { id: id_a, exp: k as i32 }])
            }
        })
        .collect();
    sections.push(Word::from_atoms(vec![Atom::gen(id_self)]));
    sections
}

/// `a = (1 2)`, `b = (a, c)`, `c = (a, d)`, `d = (1, b)` on the binary tree.
pub fn grigorchuk() -> Arc<GroupPresentation> {
    let id = |w: &[u16]| Word::from_atoms(w.iter().map(|&i| Atom::gen(i)).collect());
    let gen = |name: &str, sections: Vec<Word>| Generator {
        name: name.into(),
        kind: GeneratorKind::Recursive { perm: Perm::identity(2), sections, anchor: None },
    };
    let gens = vec![
        rooted_cycle_gen("a", 2),
        gen("b", vec![id(&[0]), id(&[2])]),
        gen("c", vec![id(&[0]), id(&[3])]),
        gen("d", vec![Word::empty(), id(&[1])]),
    ];
    GroupPresentation::new("grigorchuk", TreeShape::regular(2).unwrap(), gens)
        .expect("the Grigorchuk presentation is valid")
}

/// The GGS group with defining vector `e`: `a = (1 ... p)` and
/// `b = (a^e_1, ..., a^e_{p-1}, b)`.
pub fn ggs(e: &GgsVector) -> Result<Arc<GroupPresentation>> {
    multi_ggs(std::slice::from_ref(e))
}

pub fn multi_ggs(vectors: &[GgsVector]) -> Result<Arc<GroupPresentation>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::BadArgument("a multi-GGS group needs at least one vector".into()))?;
    let p = first.prime();
    if vectors.iter().any(|v| v.prime() != p) {
        return Err(Error::BadArgument("all defining vectors must share the prime".into()));
    }
    let m = p as usize;
    let mut gens = vec![rooted_cycle_gen("a", m)];
    for (i, v) in vectors.iter().enumerate() {
        let name = if vectors.len() == 1 { "b".to_string() } else { format!("b{}", i + 1) };
        gens.push(Generator {
            name,
            kind: GeneratorKind::Recursive {
                perm: Perm::identity(m),
                sections: directed(0, (i + 1) as u16, v),
                anchor: None,
            },
        });
    }
    let name = if vectors.len() == 1 {
        format!("ggs({};{})", p, fmt_entries(first))
    } else {
        let parts: Vec<String> = vectors.iter().map(fmt_entries).collect();
        format!("multi-ggs({};{})", p, parts.join("/"))
    };
    GroupPresentation::new(name, TreeShape::regular(m)?, gens)
}

fn fmt_entries(v: &GgsVector) -> String {
    v.entries().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// A GGS group is torsion iff the entries of its defining vector sum to 0 mod p.
pub fn ggs_is_torsion(e: &GgsVector) -> bool {
    e.is_torsion()
}

/// The tree with arities `p_1, p_2, ...` (the last prime repeats past the
/// supplied prefix) and generators `a_i` cycling the `p_i` children of the
/// leftmost vertex `1...1` of level `i - 1`.
pub fn example25(primes: &[u64]) -> Result<Arc<GroupPresentation>> {
    if primes.is_empty() {
        return Err(Error::BadArgument("need at least one prime".into()));
    }
    if let Some(&p) = primes.iter().find(|&&p| !is_prime(p)) {
        return Err(Error::NotPrime(p));
    }
    let arities: Vec<usize> = primes.iter().map(|&p| p as usize).collect();
    let shape = TreeShape::new(arities.clone(), vec![*arities.last().unwrap()])?;
    let gens = arities
        .iter()
        .enumerate()
        .map(|(i, &p)| Generator {
            name: format!("a{}", i + 1),
            kind: GeneratorKind::Planted { vertex: Vertex::leftmost(i), cycle: p },
        })
        .collect();
    let parts: Vec<String> = primes.iter().map(|p| p.to_string()).collect();
    GroupPresentation::new(format!("example25({})", parts.join(",")), shape, gens)
}
