//! Tree automorphisms as words with wreath-recursion semantics.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::perm::Perm;
use crate::presentation::{GroupPresentation, Order};
use crate::syntax;
use crate::tree::Vertex;
use crate::word::{Atom, Word};

/// An automorphism of the subtree hanging from a vertex at `depth`
/// (depth 0 for the whole tree), stored as a canonical word.
#[derive(Clone)]
pub struct Element {
    group: Arc<GroupPresentation>,
    depth: usize,
    word: Word,
}

impl Element {
    pub fn identity(group: &Arc<GroupPresentation>) -> Self {
        Self::identity_at(group, 0)
    }

    pub fn identity_at(group: &Arc<GroupPresentation>, depth: usize) -> Self {
        Element { group: group.clone(), depth, word: Word::empty() }
    }

    pub fn from_word(group: &Arc<GroupPresentation>, depth: usize, word: Word) -> Result<Self> {
        group.validate_word(Some(depth), &word)?;
        let word = group.canonical(depth, word.0);
        Ok(Element { group: group.clone(), depth, word })
    }

    pub(crate) fn from_canonical(group: &Arc<GroupPresentation>, depth: usize, word: Word) -> Self {
        Element { group: group.clone(), depth, word }
    }

    pub fn parse(group: &Arc<GroupPresentation>, text: &str) -> Result<Self> {
        Self::parse_at(group, 0, text)
    }

    pub fn parse_at(group: &Arc<GroupPresentation>, depth: usize, text: &str) -> Result<Self> {
        let word = syntax::parse_word(group, text)?;
        Self::from_word(group, depth, word)
    }

    pub fn generator(group: &Arc<GroupPresentation>, name: &str) -> Result<Self> {
        let id = group
            .generator_id(name)
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))?;
        Self::from_word(group, 0, group.generator_word(id))
    }

    /// `plant(v; inner)`: acts as `inner` on the subtree at `v`.
    pub fn planted(&self, v: &Vertex) -> Result<Element> {
        self.group.shape().check_below(self.depth, v)?;
        let word = Word::from_atoms(vec![Atom::Planted { vertex: v.clone(), inner: self.word.clone() }]);
        Ok(Element::from_canonical(&self.group, self.depth, self.group.canonical(self.depth, word.0)))
    }

    /// The same word read as an automorphism of a subtree at `depth`.
    pub fn rebased(&self, depth: usize) -> Result<Element> {
        if depth == self.depth {
            return Ok(self.clone());
        }
        Element::from_word(&self.group, depth, self.word.clone())
    }

    pub fn group(&self) -> &Arc<GroupPresentation> {
        &self.group
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn is_empty_word(&self) -> bool {
        self.word.is_empty()
    }

    fn same_context(&self, other: &Element) {
        assert!(Arc::ptr_eq(&self.group, &other.group), "elements of different presentations");
        assert_eq!(self.depth, other.depth, "elements at different depths");
    }

    pub fn root_perm(&self) -> Perm {
        self.group.first_level(self.depth, &self.word).perm.clone()
    }

    /// The section `g|_v`, an automorphism of the subtree at `v`.
    pub fn section(&self, v: &Vertex) -> Element {
        let word = self.group.section_word(self.depth, &self.word, v);
        Element::from_canonical(&self.group, self.depth + v.level(), word)
    }

    pub fn first_level_sections(&self) -> Vec<Element> {
        let fl = self.group.first_level(self.depth, &self.word);
        fl.sections
            .iter()
            .map(|w| Element::from_canonical(&self.group, self.depth + 1, w.clone()))
            .collect()
    }

    /// `v^g`.
    pub fn act(&self, v: &Vertex) -> Vertex {
        self.group.act_word(self.depth, &self.word, v)
    }

    pub fn multiply(&self, other: &Element) -> Element {
        self.same_context(other);
        let word = self
            .group
            .canonical(self.depth, self.word.atoms().iter().chain(other.word.atoms()).cloned());
        Element::from_canonical(&self.group, self.depth, word)
    }

    pub fn invert(&self) -> Element {
        let word = self.group.canonical(self.depth, self.word.inverse().0);
        Element::from_canonical(&self.group, self.depth, word)
    }

    pub fn power(&self, k: i64) -> Element {
        let base = if k < 0 { self.invert() } else { self.clone() };
        let atoms: Vec<Atom> = (0..k.unsigned_abs())
            .flat_map(|_| base.word.atoms().iter().cloned())
            .collect();
        Element::from_canonical(&self.group, self.depth, self.group.canonical(self.depth, atoms))
    }

    /// `x^y = y^-1 x y`.
    pub fn conjugate(&self, by: &Element) -> Element {
        by.invert().multiply(self).multiply(by)
    }

    /// `[x, y] = x^-1 y^-1 x y`.
    pub fn commutator(&self, other: &Element) -> Element {
        self.invert().multiply(&other.invert()).multiply(self).multiply(other)
    }

    pub fn is_trivial(&self) -> Result<bool> {
        self.group.is_trivial_word(self.depth, &self.word)
    }

    pub fn equal(&self, other: &Element) -> Result<bool> {
        self.same_context(other);
        if self.word == other.word {
            return Ok(true);
        }
        self.multiply(&other.invert()).is_trivial()
    }

    pub fn order(&self, cap: u128) -> Result<Order> {
        self.group.order_word(self.depth, &self.word, cap)
    }

    /// The permutation induced on the `n`-th level below this element's depth.
    pub fn level_image(&self, n: usize) -> Perm {
        self.group.image_word(self.depth, &self.word, n)
    }

    pub fn fixes_level(&self, n: usize) -> bool {
        self.group.fixes_level(self.depth, &self.word, n)
    }

    pub fn portrait(&self, depth: usize) -> Portrait {
        let mut labels = Vec::new();
        let mut frontier = vec![(Vertex::root(), self.word.clone())];
        for level in 0..depth {
            let mut next = Vec::new();
            for (v, w) in frontier {
                let m = self.group.shape().children_count(self.depth + level);
                if w.is_empty() {
                    labels.push((v.clone(), Perm::identity(m)));
                    next.extend((1..=m as u32).map(|i| (v.child(i), Word::empty())));
                    continue;
                }
                let fl = self.group.first_level(self.depth + level, &w);
                labels.push((v.clone(), fl.perm.clone()));
                next.extend(fl.sections.iter().enumerate().map(|(i, s)| (v.child(i as u32 + 1), s.clone())));
            }
            frontier = next;
        }
        Portrait { depth, labels }
    }

    /// Weight of the canonical word, used for shortlex tie-breaks.
    pub fn weight(&self) -> usize {
        self.word.weight()
    }
}

impl PartialEq for Element {
    /// Structural equality of canonical words; see [`Element::equal`] for
    /// equality in the group.
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.group, &other.group) && self.depth == other.depth && self.word == other.word
    }
}

impl Eq for Element {}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.group.format_word(&self.word))
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Element({} @ depth {})", self, self.depth)
    }
}

/// Permutation labels of all vertices above a given depth, in shortlex order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Portrait {
    pub depth: usize,
    pub labels: Vec<(Vertex, Perm)>,
}

impl Portrait {
    pub fn label(&self, v: &Vertex) -> Option<&Perm> {
        self.labels.iter().find(|(u, _)| u == v).map(|(_, p)| p)
    }

    pub fn nontrivial(&self) -> Vec<&Vertex> {
        self.labels.iter().filter(|(_, p)| !p.is_identity()).map(|(v, _)| v).collect()
    }

    /// DOT rendering; node names are vertex paths and labels are in cycle notation.
    pub fn to_dot(&self) -> String {
        let mut dot = String::from("digraph portrait {\n  node [shape=box];\n");
        for (v, p) in &self.labels {
            dot.push_str(&format!("  \"{}\" [label=\"{}\"];\n", v, p.cycle_notation()));
        }
        let named: std::collections::HashSet<&Vertex> = self.labels.iter().map(|(v, _)| v).collect();
        for (v, _) in &self.labels {
            if let Some(parent) = v.parent() {
                if named.contains(&parent) {
                    dot.push_str(&format!("  \"{}\" -> \"{}\";\n", parent, v));
                }
            }
        }
        dot.push_str("}\n");
        dot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::grigorchuk;
    use proptest::prelude::*;

    fn el(g: &Arc<GroupPresentation>, w: &str) -> Element {
        Element::parse(g, w).unwrap()
    }

    fn vx(s: &str) -> Vertex {
        Vertex::parse(s).unwrap()
    }

    #[test]
    fn root_perms_and_sections() {
        let g = grigorchuk();
        assert_eq!(el(&g, "a").root_perm(), Perm::cycle(2, 2));
        assert!(el(&g, "b").root_perm().is_identity());
        assert!(Element::identity(&g).root_perm().is_identity());
        let b = el(&g, "b");
        assert!(b.section(&vx("1")).equal(&Element::parse_at(&g, 1, "a").unwrap()).unwrap());
        assert!(b.section(&vx("2")).equal(&Element::parse_at(&g, 1, "c").unwrap()).unwrap());
        assert_eq!(el(&g, "d").section(&vx("2")).to_string(), "b");
        assert!(Element::identity(&g).section(&vx("121")).is_trivial().unwrap());
    }

    #[test]
    fn action() {
        let g = grigorchuk();
        assert_eq!(el(&g, "a").act(&vx("1")), vx("2"));
        let b = el(&g, "b");
        for w in ["1", "2", "12", "211"] {
            let inner = Element::parse_at(&g, 1, "a").unwrap().act(&vx(w));
            assert_eq!(b.act(&vx(&format!("1{w}"))), vx("1").concat(&inner));
        }
        assert_eq!(b.act(&Vertex::root()), Vertex::root());
    }

    #[test]
    fn arithmetic() {
        let g = grigorchuk();
        let a = el(&g, "a");
        assert!(a.multiply(&a).is_trivial().unwrap());
        let b = el(&g, "b");
        assert!(b.invert().equal(&b).unwrap());
        assert!(b.power(0).is_trivial().unwrap());
        assert!(el(&g, "cd").equal(&b).unwrap());
        assert!(!a.equal(&b).unwrap());
        assert!(b.equal(&b).unwrap());
        assert!(!b.is_trivial().unwrap());
        assert!(el(&g, "bcd").is_trivial().unwrap());
    }

    fn image_order_stabilizes(g: &Element, expected: u128) {
        let mut last = 1u128;
        for n in 1..=8 {
            let k = g.level_image(n).order() as u128;
            assert_eq!(expected % k, 0);
            assert!(k >= last);
            last = k;
        }
        assert_eq!(last, expected);
    }

    #[test]
    fn orders_agree_with_level_images() {
        let g = grigorchuk();
        let ab = el(&g, "ab");
        let ad = el(&g, "ad");
        assert_eq!(el(&g, "a").order(100).unwrap(), Order::Finite(2));
        assert_eq!(ab.order(1 << 20).unwrap(), Order::Finite(16));
        assert_eq!(ad.order(1 << 20).unwrap(), Order::Finite(4));
        image_order_stabilizes(&ab, 16);
        image_order_stabilizes(&ad, 4);
        assert_eq!(ab.order(8).unwrap(), Order::ExceedsCap);
    }

    #[test]
    fn portraits() {
        let g = grigorchuk();
        let p = el(&g, "d").portrait(3);
        assert_eq!(p.nontrivial(), vec![&vx("21")]);
        assert_eq!(p.labels.len(), 7);
        let a = el(&g, "a").portrait(1);
        assert_eq!(a.label(&Vertex::root()), Some(&Perm::cycle(2, 2)));
        assert!(Element::identity(&g).portrait(4).nontrivial().is_empty());
        let dot = el(&g, "d").portrait(3).to_dot();
        assert!(dot.contains("\"21\" [label=\"(1 2)\"]"));
        assert!(dot.contains("\"root\" -> \"1\""));
    }

    #[test]
    fn planted_elements() {
        let g = grigorchuk();
        let a1 = Element::parse_at(&g, 1, "a").unwrap();
        let planted = a1.planted(&vx("1")).unwrap();
        assert_eq!(planted.act(&vx("11")), vx("12"));
        assert_eq!(planted.act(&vx("21")), vx("21"));
        assert_eq!(planted.order(10).unwrap(), Order::Finite(2));
        // plant(1; a) commutes with plant(2; a)
        let other = a1.planted(&vx("2")).unwrap();
        assert!(planted.commutator(&other).is_trivial().unwrap());
    }

    fn word_strategy() -> impl Strategy<Value = String> {
        proptest::collection::vec(0usize..4, 0..=12)
            .prop_map(|ix| ix.into_iter().map(|i| ["a", "b", "c", "d"][i]).collect::<Vec<_>>().join(""))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn action_is_a_right_homomorphism(x in word_strategy(), y in word_strategy()) {
            let g = grigorchuk();
            let (gx, gy) = (el(&g, &x), el(&g, &y));
            let prod = gx.multiply(&gy);
            for v in g.shape().level_vertices(5) {
                prop_assert_eq!(prod.act(&v), gy.act(&gx.act(&v)));
            }
        }

        #[test]
        fn section_rule(x in word_strategy(), y in word_strategy(), i in 1u32..=2) {
            let g = grigorchuk();
            let (gx, gy) = (el(&g, &x), el(&g, &y));
            let v = Vertex::new(vec![i]);
            let lhs = gx.multiply(&gy).section(&v);
            let rhs = gx.section(&v).multiply(&gy.section(&gx.act(&v)));
            prop_assert!(lhs.equal(&rhs).unwrap());
        }

        #[test]
        fn inverse_cancels(x in word_strategy()) {
            let g = grigorchuk();
            let gx = el(&g, &x);
            prop_assert!(gx.multiply(&gx.invert()).is_trivial().unwrap());
        }

        #[test]
        fn triviality_matches_level_images(x in word_strategy()) {
            let g = grigorchuk();
            let gx = el(&g, &x);
            let trivial_images = (1..=8).all(|n| gx.fixes_level(n));
            prop_assert_eq!(gx.is_trivial().unwrap(), trivial_images);
        }
    }
}
