//! Families `H_V = ⟨a h_v | v ∈ V_x⟩` that are not closed in the congruence
//! topology.
//!
//! `a` has order `p` and moves the base vertex `x` along an orbit of size
//! `p` at level `n_0`. The vertices `V_x = {x u_i}` come from the comb
//! `u_i = 1^{i-1} 2` below `x`, selected by a mask, and each `h_v` is a
//! rigid-stabilizer witness of order `p` at `v`. The conjugates
//! `h_v^{a^i}` live at pairwise incomparable vertices, so they commute, and
//! every word in the generators `s_v = a h_v` has the normal form
//! `a^r ∏ (h_v^{a^i})^{e(v, i)}`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::element::Element;
use crate::error::{Error, Result};
use crate::perm::Perm;
use crate::presentation::Order;
use crate::quotient::{contains, image, stab_chain_at, LevelPerm};
use crate::stabilizers::{find_orbit_p_point, in_level_stab, in_rist, orbit_of_vertex, RistWitness};
use crate::tree::Vertex;

use super::{check, WitnessFinder};

/// The image prefilter in sweeps stays on levels with at most this many
/// vertices.
const SWEEP_DEGREE: u128 = 1 << 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HvGenerator {
    /// Position in the comb, from 1.
    pub index: usize,
    pub vertex: Vertex,
    pub witness: RistWitness,
    /// `a h_v`.
    pub element: Element,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HvFamily {
    pub p: u128,
    pub a: Element,
    pub level: usize,
    pub base: Vertex,
    /// `u_1, ..., u_M`, relative to the base vertex.
    pub comb: Vec<Vertex>,
    pub mask: Vec<bool>,
    /// One per set mask bit, in comb order.
    pub generators: Vec<HvGenerator>,
}

/// `s_index` or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HvLetter {
    pub index: usize,
    pub inverse: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HvNormalForm {
    pub r: u128,
    /// `(comb index, twist) ↦ e`, nonzero entries only.
    pub exponents: BTreeMap<(usize, u128), u128>,
}

/// `u_i = 1^{i-1} 2`.
pub fn comb(m: usize) -> Vec<Vertex> {
    (0..m).map(|i| Vertex::leftmost(i).child(2)).collect()
}

pub fn build_hv(finder: &WitnessFinder, p: u128, a: &Element, mask: &[bool]) -> Result<HvFamily> {
    let (base, level) = find_orbit_p_point(a, p)?;
    let comb = comb(mask.len());
    let mut generators = Vec::new();
    for (i, u) in comb.iter().enumerate() {
        if !mask[i] {
            continue;
        }
        let vertex = base.concat(u);
        let witness = finder.find(&vertex, Some(p))?;
        let element = a.multiply(&witness.element);
        generators.push(HvGenerator { index: i + 1, vertex, witness, element });
    }
    let family = HvFamily { p, a: a.clone(), level, base, comb, mask: mask.to_vec(), generators };
    family.verify()?;
    Ok(family)
}

impl HvFamily {
    pub fn generator(&self, index: usize) -> Result<&HvGenerator> {
        self.generators
            .iter()
            .find(|g| g.index == index)
            .ok_or_else(|| Error::BadArgument(format!("s{index} is not a generator of this family")))
    }

    /// `v^{a^i}` for every generator vertex `v` and `0 ≤ i < p`.
    pub fn orbit_vertices(&self) -> Vec<Vertex> {
        let mut out = Vec::new();
        for g in &self.generators {
            out.extend(orbit_of_vertex(&self.a, &g.vertex));
        }
        out
    }

    pub fn verify(&self) -> Result<()> {
        let p = self.p;
        check(self.a.order(p)? == Order::Finite(p), || format!("a does not have order {p}"))?;
        check(orbit_of_vertex(&self.a, &self.base).len() as u128 == p, || "the base orbit does not have size p".into())?;
        check(self.base.level() == self.level, || "the base vertex is not on the stated level".into())?;
        check(self.comb.len() == self.mask.len(), || "comb and mask differ in length".into())?;
        for (i, u) in self.comb.iter().enumerate() {
            for w in &self.comb[i + 1..] {
                check(u.is_incomparable(w), || format!("comb vertices {u} and {w} are comparable"))?;
            }
        }
        let expected: Vec<usize> = (1..=self.mask.len()).filter(|&i| self.mask[i - 1]).collect();
        let got: Vec<usize> = self.generators.iter().map(|g| g.index).collect();
        check(expected == got, || "generators do not match the mask".into())?;
        for g in &self.generators {
            check(g.vertex == self.base.concat(&self.comb[g.index - 1]), || format!("s{} sits at the wrong vertex", g.index))?;
            g.witness.verify()?;
            check(g.witness.vertex == g.vertex && in_rist(&g.witness.element, &g.vertex)?, || {
                format!("h at {} is not rigid", g.vertex)
            })?;
            check(g.witness.element.order(p)? == Order::Finite(p), || format!("h at {} does not have order {p}", g.vertex))?;
            check(g.element == self.a.multiply(&g.witness.element), || format!("s{} is not a h", g.index))?;
            let s = &g.element;
            check(in_level_stab(&s.power(p as i64), g.vertex.level()), || {
                format!("s{}^p does not fix level {}", g.index, g.vertex.level())
            })?;
            check(s.order(p * p)? == Order::Finite(p * p), || format!("s{} does not have order {}", g.index, p * p))?;
        }
        let all = self.orbit_vertices();
        check(all.len() as u128 == p * self.generators.len() as u128, || "generator orbits are not of size p".into())?;
        for (i, u) in all.iter().enumerate() {
            for w in &all[i + 1..] {
                check(u.is_incomparable(w), || format!("{u} and {w} are comparable"))?;
            }
        }
        Ok(())
    }

    pub fn word_element(&self, word: &[HvLetter]) -> Result<Element> {
        let mut out = Element::identity(self.a.group());
        for l in word {
            let s = &self.generator(l.index)?.element;
            out = out.multiply(&if l.inverse { s.invert() } else { s.clone() });
        }
        Ok(out)
    }

    /// Moves `a` to the front: `P · a = a · P^a`, and conjugating by `a`
    /// raises every twist by one.
    pub fn normal_form(&self, word: &[HvLetter]) -> Result<HvNormalForm> {
        let p = self.p;
        let mut r = 0;
        let mut exps: BTreeMap<(usize, u128), u128> = BTreeMap::new();
        let shift = |exps: &BTreeMap<(usize, u128), u128>, by: u128| {
            exps.iter().map(|(&(v, i), &e)| ((v, (i + by) % p), e)).collect::<BTreeMap<_, _>>()
        };
        let bump = |exps: &mut BTreeMap<(usize, u128), u128>, v: usize, d: u128| {
            let e = exps.entry((v, 0)).or_insert(0);
            *e = (*e + d) % p;
            if *e == 0 {
                exps.remove(&(v, 0));
            }
        };
        for l in word {
            self.generator(l.index)?;
            if l.inverse {
                // a^r P h^{-1} a^{-1} = a^{r-1} (P h^{-1})^{a^{-1}}
                bump(&mut exps, l.index, p - 1);
                exps = shift(&exps, p - 1);
                r = (r + p - 1) % p;
            } else {
                // a^r P a h = a^{r+1} P^a h
                exps = shift(&exps, 1);
                bump(&mut exps, l.index, 1);
                r = (r + 1) % p;
            }
        }
        Ok(HvNormalForm { r, exponents: exps })
    }

    /// `h_v^{a^i}`.
    pub fn twisted(&self, index: usize, twist: u128) -> Result<Element> {
        Ok(self.generator(index)?.witness.element.conjugate(&self.a.power(twist as i64)))
    }

    pub fn realize(&self, nf: &HvNormalForm) -> Result<Element> {
        let mut out = self.a.power(nf.r as i64);
        for (&(v, i), &e) in &nf.exponents {
            out = out.multiply(&self.twisted(v, i)?.power(e as i64));
        }
        Ok(out)
    }

    fn letters(&self) -> Vec<HvLetter> {
        let mut out = Vec::new();
        for g in &self.generators {
            out.push(HvLetter { index: g.index, inverse: false });
            out.push(HvLetter { index: g.index, inverse: true });
        }
        out
    }

    fn deepest(&self) -> usize {
        self.generators.iter().map(|g| g.vertex.level()).max().unwrap_or(self.level)
    }

    /// The refutation of `a ∈ H_V` from the normal form, with an exhaustive
    /// sweep of short words as an independent check.
    pub fn refute_a(&self, sweep_length: usize) -> Result<MembershipRefutation> {
        let p = self.p;
        let faithful = self.a.level_image(self.level).order() as u128 == p;
        let in_stab = self.generators.iter().all(|g| in_level_stab(&g.witness.element, self.level));
        let orders = self
            .generators
            .iter()
            .map(|g| Ok(g.witness.element.order(p)? == Order::Finite(p)))
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .all(|b| b);
        let all = self.orbit_vertices();
        let incomparable =
            all.iter().enumerate().all(|(i, u)| all[i + 1..].iter().all(|w| u.is_incomparable(w)));
        let constraints = vec![
            format!(
                "every h_v fixes level {}, where <a> acts faithfully, so a word equal to a has r = 1 mod {p}",
                self.level
            ),
            format!(
                "its exponents then sum to r = 1 mod {p}, so some h_v^(a^i) occurs to a power prime to {p}; \
                 these commute, have order {p} and disjoint supports, so their product is not 1"
            ),
        ];
        let sweep = self.sweep_for_a(sweep_length)?;
        Ok(MembershipRefutation {
            p,
            level: self.level,
            faithful_level: faithful,
            witnesses_fix_level: in_stab,
            witness_orders: orders,
            supports_incomparable: incomparable,
            constraints,
            sweep,
        })
    }

    fn sweep_level(&self) -> usize {
        let shape = self.a.group().shape();
        let mut n = self.deepest() + 2;
        while n > 1 && shape.level_size(n) > SWEEP_DEGREE {
            n -= 1;
        }
        n
    }

    fn sweep_for_a(&self, max_len: usize) -> Result<Sweep> {
        let letters = self.letters();
        let n = self.sweep_level();
        let images: Vec<Perm> = letters
            .iter()
            .map(|l| self.word_element(&[*l]).map(|e| e.level_image(n)))
            .collect::<Result<_>>()?;
        let target = self.a.level_image(n);
        let degree = target.degree();
        let mut sweep = Sweep { max_length: max_len, level: n, words: 0, equal_calls: 0, hits: 0 };
        let mut frontier: Vec<(Vec<HvLetter>, Perm)> = vec![(Vec::new(), Perm::identity(degree))];
        for len in 0..=max_len {
            let mut next = Vec::new();
            for (word, img) in &frontier {
                sweep.words += 1;
                if *img == target {
                    sweep.equal_calls += 1;
                    if self.word_element(word)?.equal(&self.a)? {
                        sweep.hits += 1;
                    }
                }
                if len < max_len {
                    for (l, li) in letters.iter().zip(&images) {
                        let mut w = word.clone();
                        w.push(*l);
                        next.push((w, img.then(li)));
                    }
                }
            }
            frontier = next;
        }
        Ok(sweep)
    }

    /// For each `n ≤ depth`, the first generator with `h_v ∈ st(n)`, so that
    /// `a = s_v h_v^{-1} ∈ H_V st(n)`, cross-checked by a stabilizer chain of
    /// the generator images at level `n`.
    pub fn closure_gap(&self, depth: usize) -> Result<Vec<ClosureGapLevel>> {
        let mut out = Vec::new();
        for n in 1..=depth {
            let Some(g) = self.generators.iter().find(|g| in_level_stab(&g.witness.element, n)) else {
                return Err(Error::DepthExhausted { certified: n - 1 });
            };
            let algebraic = self.a.equal(&g.element.multiply(&g.witness.element.invert()))?;
            let chain_member = self.chain_contains_a(n)?;
            out.push(ClosureGapLevel {
                level: n,
                index: g.index,
                vertex: g.vertex.clone(),
                witness_in_level_stab: true,
                algebraic,
                chain_member,
            });
        }
        Ok(out)
    }

    fn images(&self, n: usize) -> Vec<LevelPerm> {
        self.generators.iter().map(|g| image(&g.element, n)).collect()
    }

    fn chain_contains_a(&self, n: usize) -> Result<bool> {
        let degree = self.a.group().shape().level_size(n) as usize;
        let chain = stab_chain_at(n, degree, &self.images(n))?;
        Ok(contains(&chain, &image(&self.a, n)))
    }

    /// Samples words with `r = 0` and checks that each equals its normal
    /// form, whose factors commute pairwise and have `p`-th power 1.
    pub fn abelian_embedding_check(&self, samples: usize, max_len: usize, seed: u64) -> Result<EmbeddingCheck> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let letters = self.letters();
        let mut report = EmbeddingCheck { samples: 0, realized: 0, commuting: 0, exponent_p: 0 };
        if letters.is_empty() {
            return Ok(report);
        }
        let first = HvLetter { index: self.generators[0].index, inverse: false };
        for _ in 0..samples {
            let len = rng.gen_range(0..=max_len);
            let mut word: Vec<HvLetter> = (0..len).map(|_| letters[rng.gen_range(0..letters.len())]).collect();
            let r = self.normal_form(&word)?.r;
            word.extend(std::iter::repeat(first).take(((self.p - r) % self.p) as usize));
            let nf = self.normal_form(&word)?;
            debug_assert_eq!(nf.r, 0);
            report.samples += 1;
            if self.word_element(&word)?.equal(&self.realize(&nf)?)? {
                report.realized += 1;
            }
            let factors: Vec<Element> =
                nf.exponents.keys().map(|&(v, i)| self.twisted(v, i)).collect::<Result<_>>()?;
            let mut commuting = true;
            for (i, x) in factors.iter().enumerate() {
                for y in &factors[i + 1..] {
                    commuting &= x.commutator(y).is_trivial()?;
                }
            }
            report.commuting += commuting as usize;
            let mut exponent_p = true;
            for x in &factors {
                exponent_p &= x.power(self.p as i64).is_trivial()?;
            }
            report.exponent_p += exponent_p as usize;
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sweep {
    pub max_length: usize,
    /// Level of the image prefilter.
    pub level: usize,
    pub words: usize,
    pub equal_calls: usize,
    pub hits: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipRefutation {
    pub p: u128,
    pub level: usize,
    pub faithful_level: bool,
    pub witnesses_fix_level: bool,
    pub witness_orders: bool,
    pub supports_incomparable: bool,
    pub constraints: Vec<String>,
    pub sweep: Sweep,
}

impl MembershipRefutation {
    pub fn holds(&self) -> bool {
        self.faithful_level
            && self.witnesses_fix_level
            && self.witness_orders
            && self.supports_incomparable
            && self.sweep.hits == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureGapLevel {
    pub level: usize,
    pub index: usize,
    pub vertex: Vertex,
    pub witness_in_level_stab: bool,
    /// `a = s_v h_v^{-1}`.
    pub algebraic: bool,
    /// `image(a, n)` lies in the chain of generator images.
    pub chain_member: bool,
}

impl ClosureGapLevel {
    pub fn holds(&self) -> bool {
        self.witness_in_level_stab && self.algebraic && self.chain_member
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingCheck {
    pub samples: usize,
    pub realized: usize,
    pub commuting: usize,
    pub exponent_p: usize,
}

impl EmbeddingCheck {
    pub fn holds(&self) -> bool {
        self.realized == self.samples && self.commuting == self.samples && self.exponent_p == self.samples
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Separation {
    /// The generator `s_index` of one family is outside the other's image.
    Distinct { level: usize, index: usize, in_first: bool },
    NotSeparated { level: usize },
}

/// Compares the generator images of two families of the same construction
/// at level `depth`.
pub fn family_distinct(first: &HvFamily, second: &HvFamily, depth: usize) -> Result<Separation> {
    if first.a != second.a || first.base != second.base || first.p != second.p {
        return Err(Error::BadArgument("families come from different constructions".into()));
    }
    let degree = first.a.group().shape().level_size(depth) as usize;
    let chains = [
        stab_chain_at(depth, degree, &first.images(depth))?,
        stab_chain_at(depth, degree, &second.images(depth))?,
    ];
    for (k, (family, other)) in [(first, &chains[1]), (second, &chains[0])].into_iter().enumerate() {
        for g in &family.generators {
            if !contains(other, &image(&g.element, depth)) {
                return Ok(Separation::Distinct { level: depth, index: g.index, in_first: k == 0 });
            }
        }
    }
    Ok(Separation::NotSeparated { level: depth })
}

/// A level deep enough to see every generator act: one past the deepest
/// level on which some `h_v` is nontrivial.
pub fn separation_depth(families: &[&HvFamily]) -> usize {
    let mut depth = 1;
    for f in families {
        for g in &f.generators {
            let h = &g.witness.element;
            let mut n = g.vertex.level();
            while h.fixes_level(n) {
                n += 1;
            }
            depth = depth.max(n);
        }
    }
    depth
}
