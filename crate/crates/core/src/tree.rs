//! Spherically homogeneous rooted trees and their vertices.
//!
//! A tree is described by its arity sequence `m_1, m_2, ...`, where every
//! vertex at level `n - 1` has `m_n` children. The sequence is stored as an
//! explicit prefix followed by a block that repeats forever, which covers
//! regular trees (`prefix = []`, `block = [m]`) as well as any eventually
//! periodic sequence.
//!
//! Vertices are paths of 1-based child indices; the root is the empty path.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeShape {
    prefix: Vec<usize>,
    block: Vec<usize>,
}

impl TreeShape {
    pub fn new(prefix: Vec<usize>, block: Vec<usize>) -> Result<Self> {
        if block.is_empty() {
            return Err(Error::InvalidShape("repeating block is empty".into()));
        }
        if let Some(m) = prefix.iter().chain(&block).find(|&&m| m < 2) {
            return Err(Error::InvalidShape(format!("arity {m} is below 2")));
        }
        Ok(TreeShape { prefix, block })
    }

    /// The regular tree `T_m`.
    pub fn regular(m: usize) -> Result<Self> {
        Self::new(Vec::new(), vec![m])
    }

    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }

    pub fn block(&self) -> &[usize] {
        &self.block
    }

    /// `Some(m)` when every level has arity `m`.
    pub fn regular_arity(&self) -> Option<usize> {
        let m = self.block[0];
        let all = self.prefix.iter().chain(&self.block).all(|&x| x == m);
        all.then_some(m)
    }

    /// Arity `m_level` for `level >= 1`: the number of children of a vertex at
    /// level `level - 1`.
    pub fn arity(&self, level: usize) -> usize {
        assert!(level >= 1, "arities are indexed from level 1");
        let i = level - 1;
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.block[(i - self.prefix.len()) % self.block.len()]
        }
    }

    /// Number of children of a vertex sitting at `depth`.
    pub fn children_count(&self, depth: usize) -> usize {
        self.arity(depth + 1)
    }

    /// `m_1 ... m_n`, saturating at `u128::MAX`.
    pub fn level_size(&self, n: usize) -> u128 {
        (1..=n).fold(1u128, |acc, l| acc.saturating_mul(self.arity(l) as u128))
    }

    /// Number of vertices at `depth + n` below a fixed vertex at `depth`.
    pub fn level_size_below(&self, depth: usize, n: usize) -> u128 {
        (depth + 1..=depth + n).fold(1u128, |acc, l| acc.saturating_mul(self.arity(l) as u128))
    }

    /// Representative of the shifted shape below `depth`: two depths with the
    /// same class have identical subtrees.
    pub fn depth_class(&self, depth: usize, min_threshold: usize) -> usize {
        let threshold = self.prefix.len().max(min_threshold);
        if depth < threshold {
            depth
        } else {
            threshold + (depth - threshold) % self.block.len()
        }
    }

    pub fn is_valid(&self, v: &Vertex) -> bool {
        self.is_valid_below(0, v)
    }

    /// Whether `v` is a valid path in the subtree hanging from a vertex at `depth`.
    pub fn is_valid_below(&self, depth: usize, v: &Vertex) -> bool {
        v.path
            .iter()
            .enumerate()
            .all(|(i, &c)| c >= 1 && (c as usize) <= self.children_count(depth + i))
    }

    pub fn check(&self, v: &Vertex) -> Result<()> {
        self.check_below(0, v)
    }

    pub fn check_below(&self, depth: usize, v: &Vertex) -> Result<()> {
        if self.is_valid_below(depth, v) {
            Ok(())
        } else {
            Err(Error::InvalidVertex {
                vertex: v.clone(),
                reason: format!("child index out of range for the shape below depth {depth}"),
            })
        }
    }

    pub fn children(&self, v: &Vertex) -> Vec<Vertex> {
        let m = self.children_count(v.level());
        (1..=m as u32).map(|i| v.child(i)).collect()
    }

    /// All vertices at level `n` below a vertex at `depth`, in shortlex order.
    pub fn level_vertices_below(&self, depth: usize, n: usize) -> Vec<Vertex> {
        let mut out = vec![Vertex::root()];
        for l in 0..n {
            let m = self.children_count(depth + l) as u32;
            out = out
                .iter()
                .flat_map(|v| (1..=m).map(move |i| v.child(i)))
                .collect();
        }
        out
    }

    pub fn level_vertices(&self, n: usize) -> Vec<Vertex> {
        self.level_vertices_below(0, n)
    }

    /// Shortlex index of a vertex among the vertices of its level below `depth`.
    pub fn index_below(&self, depth: usize, v: &Vertex) -> usize {
        v.path.iter().enumerate().fold(0usize, |acc, (i, &c)| {
            acc * self.children_count(depth + i) + (c as usize - 1)
        })
    }

    /// Inverse of [`TreeShape::index_below`].
    pub fn vertex_at_below(&self, depth: usize, n: usize, mut index: usize) -> Vertex {
        let mut path = vec![0u32; n];
        for i in (0..n).rev() {
            let m = self.children_count(depth + i);
            path[i] = (index % m) as u32 + 1;
            index /= m;
        }
        Vertex { path }
    }
}

impl fmt::Display for TreeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |xs: &[usize]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        if self.prefix.is_empty() {
            write!(f, "repeat {}", join(&self.block))
        } else {
            write!(f, "{} repeat {}", join(&self.prefix), join(&self.block))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Equal,
    /// The first vertex is a proper ancestor of the second.
    Ancestor,
    /// The first vertex is a proper descendant of the second.
    Descendant,
    Incomparable,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Vertex {
    pub path: Vec<u32>,
}

impl Vertex {
    pub fn root() -> Self {
        Vertex { path: Vec::new() }
    }

    pub fn new(path: Vec<u32>) -> Self {
        Vertex { path }
    }

    /// Repeated child `1`, `len` times.
    pub fn leftmost(len: usize) -> Self {
        Vertex { path: vec![1; len] }
    }

    pub fn path(&self) -> &[u32] {
        &self.path
    }

    pub fn level(&self) -> usize {
        self.path.len()
    }

    pub fn is_root(&self) -> bool {
        self.path.is_empty()
    }

    pub fn child(&self, i: u32) -> Vertex {
        let mut path = self.path.clone();
        path.push(i);
        Vertex { path }
    }

    pub fn parent(&self) -> Option<Vertex> {
        let (_, rest) = self.path.split_last()?;
        Some(Vertex { path: rest.to_vec() })
    }

    pub fn is_prefix_of(&self, other: &Vertex) -> bool {
        other.path.starts_with(&self.path)
    }

    pub fn relation(&self, other: &Vertex) -> Relation {
        if self == other {
            Relation::Equal
        } else if self.is_prefix_of(other) {
            Relation::Ancestor
        } else if other.is_prefix_of(self) {
            Relation::Descendant
        } else {
            Relation::Incomparable
        }
    }

    pub fn is_incomparable(&self, other: &Vertex) -> bool {
        self.relation(other) == Relation::Incomparable
    }

    /// `uv`: the vertex reached by following `v` from `self`.
    pub fn concat(&self, v: &Vertex) -> Vertex {
        let mut path = self.path.clone();
        path.extend_from_slice(&v.path);
        Vertex { path }
    }

    /// The part of `self` below `ancestor`, if `ancestor` is a prefix.
    pub fn strip_prefix(&self, ancestor: &Vertex) -> Option<Vertex> {
        self.path
            .strip_prefix(ancestor.path.as_slice())
            .map(|rest| Vertex { path: rest.to_vec() })
    }

    /// Parses `12`, `1.10.2` or `root`/`e`/empty for the root.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "root" || s == "e" {
            return Ok(Vertex::root());
        }
        let bad = || Error::BadArgument(format!("cannot parse vertex `{s}`"));
        let path: Vec<u32> = if s.contains('.') {
            s.split('.')
                .map(|p| p.parse::<u32>().map_err(|_| bad()))
                .collect::<Result<_>>()?
        } else {
            s.chars()
                .map(|c| c.to_digit(10).ok_or_else(bad))
                .collect::<Result<_>>()?
        };
        if path.contains(&0) {
            return Err(bad());
        }
        Ok(Vertex { path })
    }
}

/// Checked version of [`Vertex::relation`] for two vertices of one shape.
pub fn relation(shape: &TreeShape, u: &Vertex, v: &Vertex) -> Result<Relation> {
    shape.check(u)?;
    shape.check(v)?;
    Ok(u.relation(v))
}

/// Checked concatenation: `v` must be valid in the shape shifted below `u`.
pub fn concat(shape: &TreeShape, u: &Vertex, v: &Vertex) -> Result<Vertex> {
    shape.check(u)?;
    shape.check_below(u.level(), v)?;
    Ok(u.concat(v))
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            return write!(f, "root");
        }
        if self.path.iter().all(|&c| c <= 9) {
            for c in &self.path {
                write!(f, "{c}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.path.iter().map(|c| c.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(s: &str) -> Vertex {
        Vertex::parse(s).unwrap()
    }

    #[test]
    fn level_sizes() {
        assert_eq!(TreeShape::regular(2).unwrap().level_size(3), 8);
        assert_eq!(TreeShape::regular(3).unwrap().level_size(2), 9);
        let alt = TreeShape::new(vec![], vec![2, 3]).unwrap();
        assert_eq!(alt.level_size(2), 6);
        assert_eq!(alt.level_size(0), 1);
        assert_eq!(alt.arity(5), 2);
    }

    #[test]
    fn arity_below_two_rejected() {
        assert!(TreeShape::new(vec![3, 1], vec![2]).is_err());
        assert!(TreeShape::new(vec![], vec![]).is_err());
    }

    #[test]
    fn relations() {
        assert_eq!(Vertex::root().relation(&v("21")), Relation::Ancestor);
        assert_eq!(v("1").relation(&v("2")), Relation::Incomparable);
        assert_eq!(v("12").relation(&v("1")), Relation::Descendant);
        assert_eq!(v("12").relation(&v("12")), Relation::Equal);
        let bin = TreeShape::regular(2).unwrap();
        assert_eq!(relation(&bin, &v("13"), &v("1")), Err(Error::InvalidVertex {
            vertex: v("13"),
            reason: "child index out of range for the shape below depth 0".into()
        }));
    }

    #[test]
    fn concatenation() {
        let bin = TreeShape::regular(2).unwrap();
        assert_eq!(concat(&bin, &Vertex::root(), &v("21")).unwrap(), v("21"));
        assert_eq!(concat(&bin, &v("1"), &v("2")).unwrap(), v("12"));
        assert_eq!(concat(&bin, &v("12"), &v("11")).unwrap(), v("1211"));
        assert!(concat(&bin, &v("1"), &v("3")).is_err());
        // the shifted shape matters: below level 1 of (2,3,...) the arity is 3
        let alt = TreeShape::new(vec![], vec![2, 3]).unwrap();
        assert!(concat(&alt, &v("1"), &v("3")).is_ok());
        assert!(concat(&alt, &v("11"), &v("3")).is_err());
    }

    #[test]
    fn children_lists() {
        let bin = TreeShape::regular(2).unwrap();
        assert_eq!(bin.children(&Vertex::root()), vec![v("1"), v("2")]);
        assert_eq!(bin.children(&v("1")), vec![v("11"), v("12")]);
        let alt = TreeShape::new(vec![], vec![2, 3]).unwrap();
        assert_eq!(alt.children(&v("1")), vec![v("11"), v("12"), v("13")]);
    }

    #[test]
    fn shortlex_indexing_round_trips() {
        let alt = TreeShape::new(vec![3], vec![2, 3]).unwrap();
        let verts = alt.level_vertices(3);
        assert_eq!(verts.len() as u128, alt.level_size(3));
        for (i, w) in verts.iter().enumerate() {
            assert_eq!(alt.index_below(0, w), i);
            assert_eq!(&alt.vertex_at_below(0, 3, i), w);
        }
        let mut sorted = verts.clone();
        sorted.sort();
        assert_eq!(sorted, verts);
    }

    #[test]
    fn vertex_parsing() {
        assert_eq!(v("root"), Vertex::root());
        assert_eq!(v("1.10.2").path, vec![1, 10, 2]);
        assert_eq!(v("1.10.2").to_string(), "1.10.2");
        assert!(Vertex::parse("102").is_err());
    }

    fn arb_vertex() -> impl Strategy<Value = Vertex> {
        proptest::collection::vec(1u32..=2, 0..6).prop_map(Vertex::new)
    }

    proptest! {
        #[test]
        fn relation_is_a_partial_order(a in arb_vertex(), b in arb_vertex(), c in arb_vertex()) {
            let below = |x: &Vertex, y: &Vertex| matches!(x.relation(y), Relation::Equal | Relation::Ancestor);
            if below(&a, &b) && below(&b, &a) {
                prop_assert_eq!(&a, &b);
            }
            if below(&a, &b) && below(&b, &c) {
                prop_assert!(below(&a, &c));
            }
            let inc = a.relation(&b) == Relation::Incomparable;
            prop_assert_eq!(inc, !a.is_prefix_of(&b) && !b.is_prefix_of(&a) && a != b);
        }

        #[test]
        fn concat_adds_levels(a in arb_vertex(), b in arb_vertex()) {
            prop_assert_eq!(a.concat(&b).level(), a.level() + b.level());
        }

        #[test]
        fn children_match_arity(a in proptest::collection::vec(1u32..=2, 0..6)) {
            let shape = TreeShape::new(vec![], vec![2, 3]).unwrap();
            let mut path = a;
            for (i, c) in path.iter_mut().enumerate() {
                *c = (*c).min(shape.children_count(i) as u32);
            }
            let v = Vertex::new(path);
            prop_assert_eq!(shape.children(&v).len(), shape.arity(v.level() + 1));
        }
    }
}
