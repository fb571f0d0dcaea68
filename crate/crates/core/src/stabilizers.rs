//! Level stabilizers, rigid stabilizers, vertex orbits and witness search.
//!
//! A rigid-stabilizer witness is either a word over the generators found by
//! ball search, a conjugate of another witness, or an element `plant(v; k)`
//! with `k` in a branching kernel, whose membership rests on a
//! [`BranchCertificate`] valid at every depth.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::element::Element;
use crate::error::{Error, Result};
use crate::presentation::{GroupPresentation, Order};
use crate::tree::Vertex;
use crate::word::{Atom, Word};

const ORDER_CAP: u128 = 1 << 24;

pub fn in_level_stab(g: &Element, n: usize) -> bool {
    g.fixes_level(n)
}

/// Whether `g` acts trivially outside the subtree at `v`.
pub fn in_rist(g: &Element, v: &Vertex) -> Result<bool> {
    let shape = g.group().shape().clone();
    let mut prefix = Vertex::root();
    for &step in v.path() {
        let s = g.section(&prefix);
        if !s.root_perm().is_identity() {
            return Ok(false);
        }
        let m = shape.children_count(g.depth() + prefix.level()) as u32;
        for c in (1..=m).filter(|&c| c != step) {
            if !g.section(&prefix.child(c)).is_trivial()? {
                return Ok(false);
            }
        }
        prefix = prefix.child(step);
    }
    Ok(true)
}

/// The cycle `(v, v^g, v^(g^2), ...)` up to its return to `v`.
pub fn orbit_of_vertex(g: &Element, v: &Vertex) -> Vec<Vertex> {
    let mut orbit = vec![v.clone()];
    let mut w = g.act(v);
    while &w != v {
        orbit.push(w.clone());
        w = g.act(&w);
    }
    orbit
}

/// The shortlex-least vertex at the least level whose `a`-orbit has size `p`.
pub fn find_orbit_p_point(a: &Element, p: u128) -> Result<(Vertex, usize)> {
    if a.order(p)? != Order::Finite(p) {
        return Err(Error::BadArgument(format!("{a} does not have order {p}")));
    }
    let shape = a.group().shape();
    let mut n = 1;
    while shape.level_size_below(a.depth(), n) <= 1 << 20 {
        let image = a.level_image(n);
        let mut seen = vec![false; image.degree()];
        for k in 0..image.degree() {
            if seen[k] {
                continue;
            }
            let mut len = 0u128;
            let mut j = k;
            while !seen[j] {
                seen[j] = true;
                len += 1;
                j = image.apply(j);
            }
            if len == p {
                return Ok((shape.vertex_at_below(a.depth(), n, k), n));
            }
        }
        n += 1;
    }
    Err(Error::BadArgument(format!("no orbit of size {p} on levels with at most 2^20 vertices")))
}

/// The shortlex-least vertex at the least depth below `u` whose `g`-orbit
/// length passes `accept`, with that length. Searches `max_depth` levels
/// below `u`.
pub fn first_orbit_below(
    g: &Element,
    u: &Vertex,
    max_depth: usize,
    accept: impl Fn(usize) -> bool,
) -> Result<(Vertex, usize)> {
    let shape = g.group().shape().clone();
    shape.check(u)?;
    let mut layer = vec![u.clone()];
    for _ in 0..max_depth {
        layer = layer.iter().flat_map(|w| shape.children(w)).collect();
        for x in &layer {
            let len = orbit_of_vertex(g, x).len();
            if accept(len) {
                return Ok((x.clone(), len));
            }
        }
    }
    Err(Error::BadArgument(format!("no suitable orbit within {max_depth} levels below {u}")))
}

/// Conditions a witness element must meet besides lying in `rist(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Predicate {
    Nontrivial,
    OrderExactly(u128),
    OrderDivisibleBy(u128),
}

impl Predicate {
    /// The verified order when the predicate constrains it.
    fn check(self, g: &Element) -> Result<Option<Option<u128>>> {
        if g.is_trivial()? {
            return Ok(None);
        }
        Ok(match self {
            Predicate::Nontrivial => Some(None),
            Predicate::OrderExactly(k) => match g.order(k)? {
                Order::Finite(o) if o == k => Some(Some(o)),
                _ => None,
            },
            Predicate::OrderDivisibleBy(k) => match g.order(ORDER_CAP)? {
                Order::Finite(o) if o % k == 0 => Some(Some(o)),
                _ => None,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub max_hits: usize,
    pub threads: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { max_hits: 8, threads: 1 }
    }
}

/// Evaluates `f` on every item, preserving order.
pub(crate) fn par_map<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    if threads <= 1 || items.len() < 64 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| scope.spawn(|| part.iter().map(&f).collect::<Result<Vec<R>>>()))
            .collect();
        let mut out = Vec::with_capacity(items.len());
        for h in handles {
            out.extend(h.join().expect("worker panicked")?);
        }
        Ok(out)
    })
}

/// Letters plus the inverses that differ from them.
pub fn alphabet_with_inverses(letters: &[Element]) -> Vec<Element> {
    let mut out: Vec<Element> = letters.to_vec();
    for l in letters {
        let inv = l.invert();
        if !out.contains(&inv) {
            out.push(inv);
        }
    }
    out
}

/// Shortlex enumeration of products of letters, one layer per length.
/// Backtracks and words whose canonical form was already produced are
/// skipped.
pub struct Ball {
    letters: Vec<Element>,
    inverse: Vec<Option<usize>>,
    seen: HashSet<Word>,
    layer: Vec<(Vec<usize>, Element)>,
    radius: usize,
    length: usize,
    cap: usize,
}

impl Ball {
    pub fn new(letters: Vec<Element>, radius: usize, cap: usize) -> Result<Self> {
        let first = letters
            .first()
            .ok_or_else(|| Error::BadArgument("a ball needs at least one letter".into()))?;
        let identity = Element::identity_at(first.group(), first.depth());
        let inverse = letters
            .iter()
            .map(|l| {
                let inv = l.invert();
                letters.iter().position(|m| *m == inv)
            })
            .collect();
        Ok(Ball {
            seen: HashSet::from([identity.word().clone()]),
            layer: vec![(Vec::new(), identity)],
            letters,
            inverse,
            radius,
            length: 0,
            cap,
        })
    }

    pub fn letters(&self) -> &[Element] {
        &self.letters
    }

    /// Words of the next length, or `None` past the radius.
    pub fn next_layer(&mut self) -> Result<Option<&[(Vec<usize>, Element)]>> {
        if self.length >= self.radius {
            return Ok(None);
        }
        let mut next = Vec::new();
        for (word, g) in &self.layer {
            for (i, letter) in self.letters.iter().enumerate() {
                if let Some(&last) = word.last() {
                    if self.inverse[last] == Some(i) {
                        continue;
                    }
                }
                let h = g.multiply(letter);
                if !self.seen.insert(h.word().clone()) {
                    continue;
                }
                if self.seen.len() > self.cap {
                    return Err(Error::BallCapExceeded(self.cap));
                }
                let mut w = word.clone();
                w.push(i);
                next.push((w, h));
            }
        }
        self.length += 1;
        self.layer = next;
        Ok(Some(&self.layer))
    }
}

/// Product of alphabet letters along `word`.
pub fn evaluate(alphabet: &[Element], word: &[usize]) -> Result<Element> {
    let first = alphabet.first().ok_or_else(|| Error::BadArgument("empty alphabet".into()))?;
    let mut g = Element::identity_at(first.group(), first.depth());
    for &i in word {
        let l = alphabet
            .get(i)
            .ok_or(Error::IndexOutOfRange { index: i, len: alphabet.len() })?;
        g = g.multiply(l);
    }
    Ok(g)
}

pub fn generator_elements(group: &Arc<GroupPresentation>) -> Vec<Element> {
    (0..group.generators().len() as u16)
        .map(|id| Element::from_word(group, 0, group.generator_word(id)).expect("generator words are valid"))
        .collect()
}

/// For each child `j` and generator `g`, a word over the generators and
/// their inverses fixing `j` with section `g` there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractalTable {
    pub words: Vec<Vec<Vec<usize>>>,
}

impl FractalTable {
    pub fn find(group: &Arc<GroupPresentation>, radius: usize, budget: usize) -> Result<FractalTable> {
        let gens = generator_elements(group);
        let m = group.shape().children_count(0) as u32;
        let mut words = Vec::new();
        for j in 1..=m {
            let child = Vertex::new(vec![j]);
            let mut row: Vec<Option<Vec<usize>>> = vec![None; gens.len()];
            let mut ball = Ball::new(alphabet_with_inverses(&gens), radius, budget)?;
            while row.iter().any(Option::is_none) {
                let Some(layer) = next_within_budget(&mut ball)? else { break };
                for (word, y) in layer {
                    if y.act(&child) != child {
                        continue;
                    }
                    let s = y.section(&child).rebased(0)?;
                    for (k, g) in gens.iter().enumerate() {
                        if row[k].is_none() && s.equal(g)? {
                            row[k] = Some(word.clone());
                        }
                    }
                }
            }
            let row: Option<Vec<Vec<usize>>> = row.into_iter().collect();
            words.push(row.ok_or(Error::SearchFailed { vertex: child, radius })?);
        }
        Ok(FractalTable { words })
    }

    pub fn verify(&self, group: &Arc<GroupPresentation>) -> Result<()> {
        let gens = generator_elements(group);
        let alphabet = alphabet_with_inverses(&gens);
        let m = group.shape().children_count(0);
        if self.words.len() != m || self.words.iter().any(|row| row.len() != gens.len()) {
            return Err(fail("fractal table has the wrong shape".into()));
        }
        for (j, row) in self.words.iter().enumerate() {
            let child = Vertex::new(vec![j as u32 + 1]);
            for (word, g) in row.iter().zip(&gens) {
                let y = evaluate(&alphabet, word)?;
                if y.act(&child) != child || !y.section(&child).rebased(0)?.equal(g)? {
                    return Err(fail(format!("fractal table entry for {g} at {child} is wrong")));
                }
            }
        }
        Ok(())
    }
}

/// A word over the kernel alphabet lying in `rist(j)` on the first level,
/// with section `s^twist` at `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelLift {
    pub word: Vec<usize>,
    pub twist: Element,
}

/// Evidence that the group is regular branch over `K = ⟨⟨kernel⟩⟩`.
///
/// Each lift shows `plant(j; s^h) ∈ K` for a kernel generator `s`. The
/// fractal table turns every group word `g` into an element fixing `j` with
/// section `g`, and conjugating by it gives `plant(j; s^g) ∈ K` since `K` is
/// normal. Hence `plant(j; K) ⊆ K` for each child, and by induction
/// `plant(v; k) ∈ K` for every vertex `v` and `k ∈ K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchCertificate {
    pub kernel: Vec<Element>,
    /// Group words conjugating the kernel generators into the alphabet.
    pub conjugators: Vec<Element>,
    pub fractal: FractalTable,
    /// Indexed by child, then kernel generator.
    pub lifts: Vec<Vec<KernelLift>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchOptions {
    /// Radius of the conjugator ball forming the kernel alphabet.
    pub conjugator_radius: usize,
    /// Radius of the ball of twists `h` accepted in `s^h`.
    pub twist_radius: usize,
    /// Ball radius over the kernel alphabet when searching lifts.
    pub lift_radius: usize,
    /// Ball radius over the kernel alphabet for inner witnesses.
    pub witness_radius: usize,
    /// Among inner candidates, prefer those fixing this many levels.
    pub prefer_fixed_levels: usize,
    /// Words examined per ball before a search settles for what it has.
    pub budget: usize,
    pub threads: usize,
}

impl Default for BranchOptions {
    fn default() -> Self {
        BranchOptions {
            conjugator_radius: 2,
            twist_radius: 3,
            lift_radius: 4,
            witness_radius: 4,
            prefer_fixed_levels: 2,
            budget: 200_000,
            threads: 1,
        }
    }
}

const FINGERPRINT_LEVEL: usize = 4;

fn ball_elements(letters: &[Element], radius: usize, budget: usize) -> Result<Vec<Element>> {
    let first = &letters[0];
    let mut out = vec![Element::identity_at(first.group(), first.depth())];
    let mut ball = Ball::new(letters.to_vec(), radius, budget)?;
    while let Some(layer) = next_within_budget(&mut ball)? {
        out.extend(layer.iter().map(|(_, g)| g.clone()));
    }
    Ok(out)
}

impl BranchCertificate {
    /// Kernel generators conjugated by each conjugator, deduplicated, then
    /// closed under inverses.
    pub fn alphabet(&self) -> Vec<Element> {
        let mut out: Vec<Element> = Vec::new();
        for s in &self.kernel {
            for c in &self.conjugators {
                let x = s.conjugate(c);
                if !out.contains(&x) {
                    out.push(x);
                }
            }
        }
        alphabet_with_inverses(&out)
    }

    /// Tries the commutator of the first two generators as kernel, then all
    /// nontrivial generator commutators.
    pub fn find(group: &Arc<GroupPresentation>, options: BranchOptions) -> Result<BranchCertificate> {
        if !group.is_self_similar() {
            return Err(Error::BadArgument(
                "branch certificates need a regular tree with unanchored recursive generators".into(),
            ));
        }
        let gens = generator_elements(group);
        let mut commutators = Vec::new();
        for i in 0..gens.len() {
            for j in i + 1..gens.len() {
                let c = gens[i].commutator(&gens[j]);
                if !c.is_trivial()? && !commutators.contains(&c) {
                    commutators.push(c);
                }
            }
        }
        if commutators.is_empty() {
            return Err(Error::SearchFailed { vertex: Vertex::root(), radius: options.lift_radius });
        }
        let fractal = FractalTable::find(group, options.lift_radius.max(options.twist_radius) + 2, options.budget)?;
        let conjugators = ball_elements(&alphabet_with_inverses(&gens), options.conjugator_radius, options.budget)?;
        let twists = ball_elements(&alphabet_with_inverses(&gens), options.twist_radius, options.budget)?;
        let mut last = None;
        for kernel in [commutators[..1].to_vec(), commutators.clone()] {
            let mut cert = BranchCertificate {
                kernel,
                conjugators: conjugators.clone(),
                fractal: fractal.clone(),
                lifts: Vec::new(),
            };
            match cert.find_lifts(&twists, options) {
                Ok(lifts) => {
                    cert.lifts = lifts;
                    return Ok(cert);
                }
                Err(e) if e.is_computation_limit() => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one kernel was tried"))
    }

    fn find_lifts(&self, twists: &[Element], options: BranchOptions) -> Result<Vec<Vec<KernelLift>>> {
        let alphabet = self.alphabet();
        let group = alphabet[0].group().clone();
        let m = group.shape().children_count(0) as u32;
        let targets: Vec<Vec<(crate::perm::Perm, &Element, Element)>> = self
            .kernel
            .iter()
            .map(|s| {
                twists
                    .iter()
                    .map(|h| {
                        let t = s.conjugate(h);
                        (t.level_image(FINGERPRINT_LEVEL), h, t)
                    })
                    .collect()
            })
            .collect();
        let mut lifts = Vec::new();
        for j in 1..=m {
            let child = Vertex::new(vec![j]);
            let mut row: Vec<Option<KernelLift>> = vec![None; self.kernel.len()];
            let mut ball = Ball::new(alphabet.clone(), options.lift_radius, options.budget)?;
            while row.iter().any(Option::is_none) {
                let Some(layer) = next_within_budget(&mut ball)? else { break };
                let sections = par_map(layer, options.threads, |(_, y)| rist_section(y, &child))?;
                for ((word, _), section) in layer.iter().zip(sections) {
                    let Some(section) = section else { continue };
                    let print = section.level_image(FINGERPRINT_LEVEL);
                    for (k, slot) in row.iter_mut().enumerate() {
                        if slot.is_some() {
                            continue;
                        }
                        for (p, h, t) in &targets[k] {
                            if *p == print && t.equal(&section)? {
                                *slot = Some(KernelLift { word: word.clone(), twist: (*h).clone() });
                                break;
                            }
                        }
                    }
                }
            }
            let row: Option<Vec<KernelLift>> = row.into_iter().collect();
            lifts.push(row.ok_or(Error::SearchFailed { vertex: child, radius: options.lift_radius })?);
        }
        Ok(lifts)
    }

    pub fn verify(&self) -> Result<()> {
        let Some(first) = self.kernel.first() else {
            return Err(fail("empty kernel".into()));
        };
        let group = first.group().clone();
        for g in self.kernel.iter().chain(&self.conjugators) {
            if !is_group_word(g) {
                return Err(fail(format!("{g} is not a group word")));
            }
        }
        self.fractal.verify(&group)?;
        let alphabet = self.alphabet();
        let m = group.shape().children_count(0);
        if self.lifts.len() != m || self.lifts.iter().any(|row| row.len() != self.kernel.len()) {
            return Err(fail("lift table has the wrong shape".into()));
        }
        for (j, row) in self.lifts.iter().enumerate() {
            let child = Vertex::new(vec![j as u32 + 1]);
            for (lift, s) in row.iter().zip(&self.kernel) {
                if !is_group_word(&lift.twist) {
                    return Err(fail(format!("twist {} is not a group word", lift.twist)));
                }
                let y = evaluate(&alphabet, &lift.word)?;
                if !in_rist(&y, &child)? {
                    return Err(fail(format!("{y} is not in rist({child})")));
                }
                if !y.section(&child).rebased(0)?.equal(&s.conjugate(&lift.twist))? {
                    return Err(fail(format!("section of {y} at {child} is not {s}^{}", lift.twist)));
                }
            }
        }
        Ok(())
    }

    /// A witness `plant(v; k)` with `k` in the kernel meeting `predicate`;
    /// among candidates, those fixing more levels (up to the preference) win,
    /// then shortlex.
    pub fn witness(self: &Arc<Self>, v: &Vertex, predicate: Predicate, options: BranchOptions) -> Result<RistWitness> {
        let alphabet = self.alphabet();
        let group = alphabet[0].group().clone();
        group.shape().check(v)?;
        let mut ball = Ball::new(alphabet, options.witness_radius, options.budget)?;
        let mut best: Option<(usize, Vec<usize>, Element, Option<u128>)> = None;
        'search: while let Some(layer) = next_within_budget(&mut ball)? {
            let verdicts = par_map(layer, options.threads, |(word, l)| {
                let Some((word, l, order)) = reduce_to_predicate(word, l, predicate)? else {
                    return Ok(None);
                };
                let fixed = (0..=options.prefer_fixed_levels).rev().find(|&n| l.fixes_level(n)).unwrap_or(0);
                Ok(Some((fixed, word, l, order)))
            })?;
            for candidate in verdicts.into_iter().flatten() {
                if best.as_ref().map_or(true, |b| candidate.0 > b.0) {
                    let done = candidate.0 == options.prefer_fixed_levels;
                    best = Some(candidate);
                    if done {
                        break 'search;
                    }
                }
            }
        }
        let (_, inner_word, inner, order) =
            best.ok_or(Error::SearchFailed { vertex: v.clone(), radius: options.witness_radius })?;
        let element = inner.planted(v)?;
        Ok(RistWitness {
            vertex: v.clone(),
            element,
            order,
            radius: options.witness_radius,
            membership: Membership::Branch { certificate: self.clone(), inner_word, inner },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Membership {
    /// The element is a word over the generators.
    Word,
    /// `plant(v; inner)` with `inner` a word over the certificate's kernel
    /// alphabet.
    Branch { certificate: Arc<BranchCertificate>, inner_word: Vec<usize>, inner: Element },
    /// `witness^by` for a group word `by`.
    Conjugate { witness: Box<RistWitness>, by: Element },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RistWitness {
    pub vertex: Vertex,
    pub element: Element,
    pub order: Option<u128>,
    pub radius: usize,
    pub membership: Membership,
}

fn is_group_word(g: &Element) -> bool {
    g.depth() == 0 && g.word().atoms().iter().all(|a| matches!(a, Atom::Gen { .. }))
}

fn fail(msg: String) -> Error {
    Error::VerificationFailed(msg)
}

impl RistWitness {
    /// Rechecks rigidity, nontriviality, the claimed order and membership.
    pub fn verify(&self) -> Result<()> {
        if !in_rist(&self.element, &self.vertex)? {
            return Err(fail(format!("{} is not in rist({})", self.element, self.vertex)));
        }
        if self.element.is_trivial()? {
            return Err(fail(format!("witness at {} is trivial", self.vertex)));
        }
        if let Some(o) = self.order {
            if self.element.order(o)? != Order::Finite(o) {
                return Err(fail(format!("witness at {} does not have order {o}", self.vertex)));
            }
        }
        match &self.membership {
            Membership::Word => {
                if !is_group_word(&self.element) {
                    return Err(fail(format!("{} is not a group word", self.element)));
                }
            }
            Membership::Branch { certificate, inner_word, inner } => {
                certificate.verify()?;
                if evaluate(&certificate.alphabet(), inner_word)? != *inner {
                    return Err(fail("inner word does not evaluate to the stated element".into()));
                }
                if self.element != inner.planted(&self.vertex)? {
                    return Err(fail(format!("witness is not plant({}; {inner})", self.vertex)));
                }
            }
            Membership::Conjugate { witness, by } => {
                witness.verify()?;
                if !is_group_word(by) {
                    return Err(fail(format!("conjugator {by} is not a group word")));
                }
                if self.element != witness.element.conjugate(by) || self.vertex != by.act(&witness.vertex) {
                    return Err(fail("conjugate witness does not match its source".into()));
                }
            }
        }
        Ok(())
    }
}

/// Ball search for words over the generators and their inverses lying in
/// `rist(v)` and meeting `predicate`, deduplicated in the group.
pub fn rist_search(
    group: &Arc<GroupPresentation>,
    v: &Vertex,
    radius: usize,
    predicate: Predicate,
    options: SearchOptions,
) -> Result<Vec<RistWitness>> {
    group.shape().check(v)?;
    let mut hits: Vec<RistWitness> = Vec::new();
    if radius == 0 {
        return Ok(hits);
    }
    let level = v.level();
    let mut ball = Ball::new(alphabet_with_inverses(&generator_elements(group)), radius, group.caps().ball_words)?;
    while let Some(layer) = ball.next_layer()? {
        let checked = par_map(layer, options.threads, |(_, g)| {
            if !in_level_stab(g, level) || !in_rist(g, v)? {
                return Ok(None);
            }
            predicate.check(g)
        })?;
        for ((_, g), verdict) in layer.iter().zip(checked) {
            let Some(order) = verdict else { continue };
            let mut fresh = true;
            for h in &hits {
                if h.element.equal(g)? {
                    fresh = false;
                    break;
                }
            }
            if fresh {
                hits.push(RistWitness {
                    vertex: v.clone(),
                    element: g.clone(),
                    order,
                    radius,
                    membership: Membership::Word,
                });
                if hits.len() >= options.max_hits {
                    return Ok(hits);
                }
            }
        }
    }
    Ok(hits)
}

/// `w^t`, a witness at `v^t`.
pub fn conjugate_witness(w: &RistWitness, t: &Element) -> RistWitness {
    RistWitness {
        vertex: t.act(&w.vertex),
        element: w.element.conjugate(t),
        order: w.order,
        radius: w.radius,
        membership: Membership::Conjugate { witness: Box::new(w.clone()), by: t.clone() },
    }
}

/// `l` itself when it meets `predicate`; for an exact order `k`, also the
/// power `l^(o/k)` of an element of order `o` divisible by `k`.
fn reduce_to_predicate(
    word: &[usize],
    l: &Element,
    predicate: Predicate,
) -> Result<Option<(Vec<usize>, Element, Option<u128>)>> {
    if let Some(order) = predicate.check(l)? {
        return Ok(Some((word.to_vec(), l.clone(), order)));
    }
    let Predicate::OrderExactly(k) = predicate else { return Ok(None) };
    match l.order(ORDER_CAP)? {
        Order::Finite(o) if o % k == 0 && o > k => {
            let e = o / k;
            let repeated = (0..e).flat_map(|_| word.iter().copied()).collect();
            Ok(Some((repeated, l.power(e as i64), Some(k))))
        }
        _ => Ok(None),
    }
}

/// The nontrivial section at `child` of a first-level rigid element.
fn rist_section(y: &Element, child: &Vertex) -> Result<Option<Element>> {
    if !y.root_perm().is_identity() || !in_rist(y, child)? {
        return Ok(None);
    }
    let s = y.section(child).rebased(0)?;
    Ok(if s.is_trivial()? { None } else { Some(s) })
}

/// Like [`Ball::next_layer`], but running out of budget ends the ball.
fn next_within_budget(ball: &mut Ball) -> Result<Option<&[(Vec<usize>, Element)]>> {
    match ball.next_layer() {
        Err(Error::BallCapExceeded(_)) => Ok(None),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{ggs, grigorchuk, GgsVector};
    use proptest::prelude::*;

    fn vx(s: &str) -> Vertex {
        Vertex::parse(s).unwrap()
    }

    fn el(g: &Arc<GroupPresentation>, w: &str) -> Element {
        Element::parse(g, w).unwrap()
    }

    #[test]
    fn level_stabilizers() {
        let g = grigorchuk();
        assert!(in_level_stab(&el(&g, "b"), 1));
        assert!(!in_level_stab(&el(&g, "a"), 1));
        assert!((0..6).all(|n| in_level_stab(&Element::identity(&g), n)));
    }

    #[test]
    fn rigid_stabilizers() {
        let g = grigorchuk();
        assert!(!in_rist(&el(&g, "b"), &vx("1")).unwrap());
        assert!(in_rist(&Element::identity(&g), &vx("12")).unwrap());
        assert!(in_rist(&el(&g, "ada"), &vx("1")).unwrap());
        let planted = Element::parse_at(&g, 2, "a").unwrap().planted(&vx("21")).unwrap();
        assert!(in_rist(&planted, &vx("21")).unwrap());
        assert!(!in_rist(&planted, &vx("22")).unwrap());
    }

    #[test]
    fn orbits() {
        let g = grigorchuk();
        assert_eq!(orbit_of_vertex(&el(&g, "a"), &vx("1")), vec![vx("1"), vx("2")]);
        assert_eq!(orbit_of_vertex(&Element::identity(&g), &vx("12")), vec![vx("12")]);
        assert_eq!(find_orbit_p_point(&el(&g, "a"), 2).unwrap(), (vx("1"), 1));
        let t = ggs(&GgsVector::new(3, &[1, 2]).unwrap()).unwrap();
        assert_eq!(find_orbit_p_point(&el(&t, "a"), 3).unwrap(), (vx("1"), 1));
        let planted = Element::parse_at(&g, 1, "perm[2,1]").unwrap().planted(&vx("1")).unwrap();
        assert_eq!(find_orbit_p_point(&planted, 2).unwrap(), (vx("11"), 2));
        assert!(find_orbit_p_point(&el(&g, "a"), 3).is_err());
    }

    #[test]
    fn ball_search_grigorchuk() {
        let g = grigorchuk();
        let hits = rist_search(&g, &vx("1"), 6, Predicate::OrderExactly(2), SearchOptions::default()).unwrap();
        assert!(!hits.is_empty());
        assert_eq!(hits[0].element.to_string(), "ada");
        for h in &hits {
            h.verify().unwrap();
        }
        assert!(rist_search(&g, &vx("1"), 0, Predicate::Nontrivial, SearchOptions::default()).unwrap().is_empty());
        let threaded = rist_search(
            &g,
            &vx("1"),
            6,
            Predicate::OrderExactly(2),
            SearchOptions { threads: 4, ..Default::default() },
        )
        .unwrap();
        assert_eq!(threaded, hits);
    }

    #[test]
    fn ball_search_gupta_sidki() {
        let g = ggs(&GgsVector::new(3, &[1, 2]).unwrap()).unwrap();
        let hits = rist_search(&g, &vx("3"), 12, Predicate::OrderDivisibleBy(3), SearchOptions::default()).unwrap();
        assert!(!hits.is_empty());
        for h in &hits {
            h.verify().unwrap();
        }
    }

    #[test]
    fn branch_witnesses() {
        let g = grigorchuk();
        let cert = Arc::new(BranchCertificate::find(&g, BranchOptions::default()).unwrap());
        cert.verify().unwrap();
        for v in ["1", "12", "112", "1112", "11112"] {
            let w = cert.witness(&vx(v), Predicate::OrderExactly(2), BranchOptions::default()).unwrap();
            assert_eq!(w.order, Some(2));
            w.verify().unwrap();
        }
        let t = ggs(&GgsVector::new(3, &[1, 2]).unwrap()).unwrap();
        let cert = Arc::new(BranchCertificate::find(&t, BranchOptions::default()).unwrap());
        for v in ["12", "112", "1112", "11112"] {
            let w = cert.witness(&vx(v), Predicate::OrderExactly(3), BranchOptions::default()).unwrap();
            assert_eq!(w.order, Some(3));
            w.verify().unwrap();
        }
    }

    #[test]
    fn tampered_certificates_fail() {
        let g = grigorchuk();
        let cert = Arc::new(BranchCertificate::find(&g, BranchOptions::default()).unwrap());
        let w = cert.witness(&vx("12"), Predicate::OrderExactly(2), BranchOptions::default()).unwrap();
        let mut bad = w.clone();
        bad.vertex = vx("11");
        assert!(bad.verify().is_err());
        let mut broken = (*cert).clone();
        broken.lifts[0][0].word.push(0);
        assert!(broken.verify().is_err());
        let mut broken = (*cert).clone();
        broken.lifts.swap(0, 1);
        assert!(broken.verify().is_err());
        let mut broken = (*cert).clone();
        broken.fractal.words[0].swap(0, 1);
        assert!(broken.verify().is_err());
        let planted = Element::parse_at(&g, 1, "a").unwrap().planted(&vx("1")).unwrap();
        let fake = RistWitness { vertex: vx("1"), element: planted, order: Some(2), radius: 0, membership: Membership::Word };
        assert!(fake.verify().is_err());
    }

    #[test]
    fn conjugated_witness() {
        let g = grigorchuk();
        let hits = rist_search(&g, &vx("1"), 3, Predicate::OrderExactly(2), SearchOptions::default()).unwrap();
        let moved = conjugate_witness(&hits[0], &el(&g, "a"));
        assert_eq!(moved.vertex, vx("2"));
        moved.verify().unwrap();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn rist_implies_level_stab(i in 0usize..4) {
            let g = grigorchuk();
            let hits = rist_search(&g, &vx("1"), 6, Predicate::Nontrivial, SearchOptions::default()).unwrap();
            let h = &hits[i % hits.len()];
            prop_assert!(in_level_stab(&h.element, 1));
            prop_assert!(in_level_stab(&h.element, 0));
        }

        #[test]
        fn incomparable_witnesses_commute(i in 0usize..8, j in 0usize..8) {
            let g = grigorchuk();
            let hits = rist_search(&g, &vx("1"), 6, Predicate::Nontrivial, SearchOptions::default()).unwrap();
            let x = &hits[i % hits.len()];
            let y = conjugate_witness(&hits[j % hits.len()], &el(&g, "a"));
            prop_assert!(x.element.commutator(&y.element).is_trivial().unwrap());
        }
    }
}
