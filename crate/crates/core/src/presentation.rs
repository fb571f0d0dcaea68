//! Self-similar presentations and the wreath-recursion engine behind
//! [`Element`](crate::element::Element).
//!
//! Conventions, used everywhere in the crate: groups act on the right and
//! vertices are written `v^g`. For a first-level letter `i`,
//! `(i w)^g = i^g · w^(g|_i)`, products compose left to right, and
//!
//! ```text
//! (gh)|_i     = g|_i · h|_(i^g)
//! (g^-1)|_i   = (g|_(i^(g^-1)))^-1
//! x^y         = y^-1 x y
//! ```
//!
//! All caches are keyed by `(depth class, canonical word)` and live as long as
//! the presentation.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, RwLock};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Perm;
use crate::tree::{TreeShape, Vertex};
use crate::word::{Atom, Word};

/// Budgets for the decision procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    /// Maximum number of distinct sections explored by one triviality check.
    pub closure_states: usize,
    /// Maximum weight of any word met during a triviality check.
    pub word_length: usize,
    /// Maximum number of words visited by a ball enumeration.
    pub ball_words: usize,
    /// Reduce generator powers modulo their orders and sort commuting
    /// planted atoms while canonicalizing.
    pub rewriting: bool,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            closure_states: 100_000,
            word_length: 1_000,
            ball_words: 1_000_000,
            rewriting: true,
        }
    }
}

impl Caps {
    /// Parses `closure=N,word=N,ball=N,rewriting=on|off`; unknown keys are errors.
    pub fn parse_overrides(mut self, spec: &str) -> Result<Self> {
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::BadArgument(format!("cap `{part}` is not key=value")))?;
            let num = || {
                value
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::BadArgument(format!("cap value `{value}` is not a count")))
            };
            match key.trim() {
                "closure" => self.closure_states = num()?,
                "word" => self.word_length = num()?,
                "ball" => self.ball_words = num()?,
                "rewriting" => self.rewriting = matches!(value.trim(), "on" | "true" | "1"),
                other => return Err(Error::BadArgument(format!("unknown cap `{other}`"))),
            }
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeneratorKind {
    /// Wreath recursion `g = perm (s_1, ..., s_m)`. Unanchored generators
    /// need a regular tree; an anchored one acts at exactly one depth.
    Recursive {
        perm: Perm,
        sections: Vec<Word>,
        anchor: Option<usize>,
    },
    /// The cycle `(1 ... cycle)` on the children of `vertex`, trivial elsewhere.
    Planted { vertex: Vertex, cycle: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub kind: GeneratorKind,
}

#[derive(Debug)]
struct GenData {
    perm: Perm,
    perm_inv: Perm,
    sections: Vec<Word>,
    inv_sections: Vec<Word>,
    order: Option<u32>,
}

/// Root permutation and first-level sections of a canonical word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirstLevel {
    pub perm: Perm,
    pub sections: Vec<Word>,
}

/// Result of an order computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    Finite(u128),
    ExceedsCap,
}

impl Order {
    pub fn finite(self) -> Option<u128> {
        match self {
            Order::Finite(k) => Some(k),
            Order::ExceedsCap => None,
        }
    }
}

type Key = (usize, Word);

#[derive(Default)]
struct Caches {
    first_level: RwLock<HashMap<Key, Arc<FirstLevel>>>,
    trivial: RwLock<HashMap<Key, bool>>,
    order: RwLock<HashMap<Key, u128>>,
}

impl Caches {
    fn clear(&self) {
        self.first_level.write().unwrap().clear();
        self.trivial.write().unwrap().clear();
        self.order.write().unwrap().clear();
    }
}

pub struct GroupPresentation {
    name: String,
    shape: TreeShape,
    generators: Vec<Generator>,
    data: Vec<Option<GenData>>,
    class_threshold: usize,
    caps: RwLock<Caps>,
    caches: Caches,
}

impl std::fmt::Debug for GroupPresentation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GroupPresentation")
            .field("name", &self.name)
            .field("shape", &self.shape)
            .field("generators", &self.generators)
            .finish()
    }
}

enum OrdStep {
    Val(u128),
    Exceeds,
}

pub(crate) fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_digit())
        && name != "e"
}

impl GroupPresentation {
    pub fn new(name: impl Into<String>, shape: TreeShape, generators: Vec<Generator>) -> Result<Arc<Self>> {
        Self::with_caps(name, shape, generators, Caps::default())
    }

    pub fn with_caps(
        name: impl Into<String>,
        shape: TreeShape,
        generators: Vec<Generator>,
        caps: Caps,
    ) -> Result<Arc<Self>> {
        let mut seen = HashSet::new();
        for g in &generators {
            if !is_valid_name(&g.name) {
                return Err(Error::InvalidPresentation(format!(
                    "generator name `{}` must be a letter followed by digits (and not `e`)",
                    g.name
                )));
            }
            if !seen.insert(g.name.clone()) {
                return Err(Error::InvalidPresentation(format!("duplicate generator `{}`", g.name)));
            }
        }
        if generators.len() > u16::MAX as usize {
            return Err(Error::InvalidPresentation("too many generators".into()));
        }
        let max_anchor = generators
            .iter()
            .filter_map(|g| match &g.kind {
                GeneratorKind::Recursive { anchor, .. } => *anchor,
                _ => None,
            })
            .max();
        let class_threshold = max_anchor.map_or(0, |a| a + 1);

        let mut data = Vec::with_capacity(generators.len());
        for g in &generators {
            data.push(match &g.kind {
                GeneratorKind::Recursive { perm, sections, .. } => {
                    let perm_inv = perm.inverse();
                    let inv_sections = (0..perm.degree())
                        .map(|i| sections.get(perm_inv.apply(i)).map(Word::inverse).unwrap_or_default())
                        .collect();
                    Some(GenData {
                        perm: perm.clone(),
                        perm_inv,
                        sections: sections.clone(),
                        inv_sections,
                        order: None,
                    })
                }
                GeneratorKind::Planted { .. } => None,
            });
        }
        let mut pres = GroupPresentation {
            name: name.into(),
            shape,
            generators,
            data,
            class_threshold,
            caps: RwLock::new(caps),
            caches: Caches::default(),
        };
        pres.validate()?;

        // Generator orders feed the rewriting pass; they are computed with
        // rewriting effectively off (no orders known yet).
        let mut orders = Vec::with_capacity(pres.generators.len());
        for (id, g) in pres.generators.iter().enumerate() {
            let order = match &g.kind {
                GeneratorKind::Recursive { anchor, .. } => {
                    let depth = anchor.unwrap_or(0);
                    let w = Word(vec![Atom::gen(id as u16)]);
                    match pres.order_word(depth, &w, 1 << 20) {
                        Ok(Order::Finite(k)) => Some(k as u32),
                        _ => None,
                    }
                }
                GeneratorKind::Planted { .. } => None,
            };
            orders.push(order);
        }
        for (d, o) in pres.data.iter_mut().zip(orders) {
            if let Some(d) = d {
                d.order = o;
            }
        }
        pres.caches.clear();
        Ok(Arc::new(pres))
    }

    fn validate(&self) -> Result<()> {
        for g in &self.generators {
            match &g.kind {
                GeneratorKind::Recursive { perm, sections, anchor } => {
                    let depth = match anchor {
                        None => {
                            if self.shape.regular_arity() != Some(perm.degree()) {
                                return Err(Error::InvalidPresentation(format!(
                                    "generator `{}` needs an anchoring level: the tree is not regular of arity {}",
                                    g.name,
                                    perm.degree()
                                )));
                            }
                            None
                        }
                        Some(k) => {
                            let m = self.shape.children_count(*k);
                            if perm.degree() != m {
                                return Err(Error::InvalidPresentation(format!(
                                    "generator `{}` permutes {} letters but level {} has arity {}",
                                    g.name,
                                    perm.degree(),
                                    k + 1,
                                    m
                                )));
                            }
                            Some(k + 1)
                        }
                    };
                    if sections.len() != perm.degree() {
                        return Err(Error::InvalidPresentation(format!(
                            "generator `{}` has {} sections for {} letters",
                            g.name,
                            sections.len(),
                            perm.degree()
                        )));
                    }
                    for s in sections {
                        self.validate_word(depth, s).map_err(|e| {
                            Error::InvalidPresentation(format!("section of `{}`: {e}", g.name))
                        })?;
                    }
                }
                GeneratorKind::Planted { vertex, cycle } => {
                    self.shape.check(vertex)?;
                    let m = self.shape.children_count(vertex.level());
                    if *cycle < 2 || *cycle > m {
                        return Err(Error::InvalidPresentation(format!(
                            "planted generator `{}` cycles {} of {} children",
                            g.name, cycle, m
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks that `word` is valid at `depth`; `None` means "at every depth"
    /// (only possible on regular trees).
    pub fn validate_word(&self, depth: Option<usize>, word: &Word) -> Result<()> {
        for atom in word.atoms() {
            match atom {
                Atom::Gen { id, .. } => {
                    let g = self
                        .generators
                        .get(*id as usize)
                        .ok_or_else(|| Error::UnknownGenerator(format!("#{id}")))?;
                    match &g.kind {
                        GeneratorKind::Recursive { anchor: Some(k), .. } if depth != Some(*k) => {
                            return Err(Error::InvalidPresentation(format!(
                                "generator `{}` is anchored at level {} but used at depth {:?}",
                                g.name, k, depth
                            )))
                        }
                        GeneratorKind::Planted { .. } => {
                            return Err(Error::InvalidPresentation(format!(
                                "planted generator `{}` must be expanded before use",
                                g.name
                            )))
                        }
                        _ => {}
                    }
                }
                Atom::Rooted(p) => {
                    let m = match depth {
                        Some(d) => self.shape.children_count(d),
                        None => self.shape.regular_arity().unwrap_or(0),
                    };
                    if p.degree() != m {
                        return Err(Error::InvalidPresentation(format!(
                            "rooted permutation {} does not act on {} letters",
                            p, m
                        )));
                    }
                }
                Atom::Planted { vertex, inner } => {
                    let d = depth.unwrap_or(0);
                    self.shape.check_below(d, vertex)?;
                    self.validate_word(depth.map(|d| d + vertex.level()), inner)?;
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &TreeShape {
        &self.shape
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// Regular tree with only unanchored recursive generators: sections of
    /// group words are group words again.
    pub fn is_self_similar(&self) -> bool {
        self.shape.regular_arity().is_some()
            && self
                .generators
                .iter()
                .all(|g| matches!(g.kind, GeneratorKind::Recursive { anchor: None, .. }))
    }

    pub fn generator_id(&self, name: &str) -> Option<u16> {
        self.generators.iter().position(|g| g.name == name).map(|i| i as u16)
    }

    /// Verified order of a recursive generator, when finite.
    pub fn generator_order(&self, id: u16) -> Option<u32> {
        match &self.generators[id as usize].kind {
            GeneratorKind::Planted { cycle, .. } => Some(*cycle as u32),
            GeneratorKind::Recursive { .. } => self.data[id as usize].as_ref().and_then(|d| d.order),
        }
    }

    pub fn caps(&self) -> Caps {
        *self.caps.read().unwrap()
    }

    /// Replaces the caps; cached results stay valid because they are exact.
    pub fn set_caps(&self, caps: Caps) {
        *self.caps.write().unwrap() = caps;
    }

    /// The atom word a generator name stands for.
    pub fn generator_word(&self, id: u16) -> Word {
        match &self.generators[id as usize].kind {
            GeneratorKind::Recursive { .. } => Word(vec![Atom::gen(id)]),
            GeneratorKind::Planted { vertex, cycle } => {
                let m = self.shape.children_count(vertex.level());
                let rooted = Atom::Rooted(Perm::cycle(m, *cycle));
                if vertex.is_root() {
                    Word(vec![rooted])
                } else {
                    Word(vec![Atom::Planted {
                        vertex: vertex.clone(),
                        inner: Word(vec![rooted]),
                    }])
                }
            }
        }
    }

    fn key(&self, depth: usize, word: &Word) -> Key {
        (self.shape.depth_class(depth, self.class_threshold), word.clone())
    }

    // ----- canonical forms -------------------------------------------------

    /// Free reduction plus the bounded rewriting pass.
    pub fn canonical(&self, depth: usize, atoms: impl IntoIterator<Item = Atom>) -> Word {
        let rewriting = self.caps().rewriting;
        let mut out: Vec<Atom> = Vec::new();
        for atom in atoms {
            self.push_atom(depth, &mut out, atom, rewriting);
        }
        Word(out)
    }

    fn reduce_exp(&self, id: u16, exp: i64, rewriting: bool) -> i64 {
        let order = if rewriting {
            self.data[id as usize].as_ref().and_then(|d| d.order)
        } else {
            None
        };
        match order {
            Some(o) => {
                let o = o as i64;
                let r = exp.rem_euclid(o);
                if 2 * r > o {
                    r - o
                } else {
                    r
                }
            }
            None => exp,
        }
    }

    fn push_atom(&self, depth: usize, out: &mut Vec<Atom>, atom: Atom, rewriting: bool) {
        match atom {
            Atom::Gen { id, exp } => {
                if let Some(Atom::Gen { id: last, exp: e }) = out.last_mut() {
                    if *last == id {
                        let r = self.reduce_exp(id, *e as i64 + exp as i64, rewriting);
                        if r == 0 {
                            out.pop();
                        } else {
                            *e = r as i32;
                        }
                        return;
                    }
                }
                let r = self.reduce_exp(id, exp as i64, rewriting);
                if r != 0 {
                    out.push(Atom::Gen { id, exp: r as i32 });
                }
            }
            Atom::Rooted(p) => {
                if p.is_identity() {
                    return;
                }
                if let Some(Atom::Rooted(q)) = out.last_mut() {
                    let prod = q.then(&p);
                    if prod.is_identity() {
                        out.pop();
                    } else {
                        *q = prod;
                    }
                    return;
                }
                out.push(Atom::Rooted(p));
            }
            Atom::Planted { vertex, inner } => {
                if vertex.is_root() {
                    for a in inner.0 {
                        self.push_atom(depth, out, a, rewriting);
                    }
                    return;
                }
                let inner = self.canonical(depth + vertex.level(), inner.0);
                if inner.is_empty() {
                    return;
                }
                // plant(v; plant(w; x)) = plant(vw; x)
                let (vertex, inner) = match inner.0.as_slice() {
                    [Atom::Planted { vertex: w, inner: x }] => (vertex.concat(w), x.clone()),
                    _ => (vertex, inner),
                };
                // Planted atoms at incomparable vertices commute: look through
                // the commuting tail for a partner at the same vertex.
                let mut start = out.len();
                if rewriting {
                    while start > 0 {
                        match &out[start - 1] {
                            Atom::Planted { vertex: u, .. } if u.is_incomparable(&vertex) => start -= 1,
                            _ => break,
                        }
                    }
                }
                if start > 0 {
                    if let Atom::Planted { vertex: u, inner: prev } = &out[start - 1] {
                        if *u == vertex {
                            let merged = self.canonical(
                                depth + vertex.level(),
                                prev.0.iter().cloned().chain(inner.0),
                            );
                            if merged.is_empty() {
                                out.remove(start - 1);
                            } else {
                                out[start - 1] = Atom::Planted { vertex, inner: merged };
                            }
                            return;
                        }
                    }
                }
                let pos = if rewriting {
                    (start..out.len())
                        .find(|&j| matches!(&out[j], Atom::Planted { vertex: u, .. } if *u > vertex))
                        .unwrap_or(out.len())
                } else {
                    out.len()
                };
                out.insert(pos, Atom::Planted { vertex, inner });
            }
        }
    }

    // ----- wreath recursion ------------------------------------------------

    fn atom_first_level(&self, depth: usize, atom: &Atom, m: usize) -> (Perm, Vec<Vec<Atom>>) {
        match atom {
            Atom::Gen { id, exp } => {
                let d = self.data[*id as usize]
                    .as_ref()
                    .expect("planted generators are expanded at parse time");
                let (p, secs) = if *exp > 0 {
                    (&d.perm, &d.sections)
                } else {
                    (&d.perm_inv, &d.inv_sections)
                };
                let mut perm = Perm::identity(m);
                let mut out: Vec<Vec<Atom>> = vec![Vec::new(); m];
                for _ in 0..exp.unsigned_abs() {
                    for (i, o) in out.iter_mut().enumerate() {
                        o.extend(secs[perm.apply(i)].0.iter().cloned());
                    }
                    perm = perm.then(p);
                }
                (perm, out)
            }
            Atom::Rooted(p) => (p.clone(), vec![Vec::new(); m]),
            Atom::Planted { vertex, inner } => {
                let mut out: Vec<Vec<Atom>> = vec![Vec::new(); m];
                let first = vertex.path[0] as usize - 1;
                if vertex.level() == 1 {
                    out[first] = inner.0.clone();
                } else {
                    out[first] = vec![Atom::Planted {
                        vertex: Vertex::new(vertex.path[1..].to_vec()),
                        inner: inner.clone(),
                    }];
                }
                let _ = depth;
                (Perm::identity(m), out)
            }
        }
    }

    /// Root permutation and canonical first-level sections of a canonical word.
    pub fn first_level(&self, depth: usize, word: &Word) -> Arc<FirstLevel> {
        let key = self.key(depth, word);
        if let Some(fl) = self.caches.first_level.read().unwrap().get(&key) {
            return fl.clone();
        }
        let m = self.shape.children_count(depth);
        let mut perm = Perm::identity(m);
        let mut secs: Vec<Vec<Atom>> = vec![Vec::new(); m];
        for atom in word.atoms() {
            let (ap, asecs) = self.atom_first_level(depth, atom, m);
            for (i, s) in secs.iter_mut().enumerate() {
                s.extend(asecs[perm.apply(i)].iter().cloned());
            }
            perm = perm.then(&ap);
        }
        let sections = secs.into_iter().map(|s| self.canonical(depth + 1, s)).collect();
        let fl = Arc::new(FirstLevel { perm, sections });
        self.caches.first_level.write().unwrap().insert(key, fl.clone());
        fl
    }

    pub fn section_word(&self, depth: usize, word: &Word, v: &Vertex) -> Word {
        let mut w = word.clone();
        for (k, &c) in v.path.iter().enumerate() {
            if w.is_empty() {
                break;
            }
            w = self.first_level(depth + k, &w).sections[c as usize - 1].clone();
        }
        w
    }

    pub fn act_word(&self, depth: usize, word: &Word, v: &Vertex) -> Vertex {
        let mut w = word.clone();
        let mut out = Vec::with_capacity(v.level());
        for (k, &c) in v.path.iter().enumerate() {
            if w.is_empty() {
                out.extend_from_slice(&v.path[k..]);
                break;
            }
            let fl = self.first_level(depth + k, &w);
            let i = c as usize - 1;
            out.push(fl.perm.apply(i) as u32 + 1);
            w = fl.sections[i].clone();
        }
        Vertex::new(out)
    }

    /// Action on the `n`-th level below `depth`, shortlex-indexed.
    pub fn image_word(&self, depth: usize, word: &Word, n: usize) -> Perm {
        let size = self.shape.level_size_below(depth, n) as usize;
        if word.is_empty() || n == 0 {
            return Perm::identity(size);
        }
        let fl = self.first_level(depth, word);
        let m = fl.perm.degree();
        let block = size / m;
        let mut images = vec![0u32; size];
        for i in 0..m {
            let sub = self.image_word(depth + 1, &fl.sections[i], n - 1);
            let j = fl.perm.apply(i);
            for k in 0..block {
                images[i * block + k] = (j * block + sub.apply(k)) as u32;
            }
        }
        Perm::from_images_unchecked(images)
    }

    /// Whether the word fixes every vertex of the `n`-th level below `depth`.
    pub fn fixes_level(&self, depth: usize, word: &Word, n: usize) -> bool {
        if n == 0 || word.is_empty() {
            return true;
        }
        let fl = self.first_level(depth, word);
        fl.perm.is_identity() && fl.sections.iter().all(|s| self.fixes_level(depth + 1, s, n - 1))
    }

    /// Coinductive triviality: the word is trivial iff every section reachable
    /// from it has trivial root permutation.
    pub fn is_trivial_word(&self, depth: usize, word: &Word) -> Result<bool> {
        if word.is_empty() {
            return Ok(true);
        }
        let root_key = self.key(depth, word);
        let cached = self.caches.trivial.read().unwrap().get(&root_key).copied();
        if let Some(t) = cached {
            return Ok(t);
        }
        let caps = self.caps();
        let mut visited: HashSet<Key> = HashSet::new();
        let mut queue: VecDeque<(usize, Word)> = VecDeque::new();
        visited.insert(root_key.clone());
        queue.push_back((depth, word.clone()));
        while let Some((d, w)) = queue.pop_front() {
            if w.weight() > caps.word_length {
                return Err(Error::Undecided(format!(
                    "section of weight {} exceeds the word cap {}",
                    w.weight(),
                    caps.word_length
                )));
            }
            let k = self.key(d, &w);
            if k != root_key {
                let cached = self.caches.trivial.read().unwrap().get(&k).copied();
                match cached {
                    Some(true) => continue,
                    Some(false) => {
                        self.caches.trivial.write().unwrap().insert(root_key, false);
                        return Ok(false);
                    }
                    None => {}
                }
            }
            let fl = self.first_level(d, &w);
            if !fl.perm.is_identity() {
                self.caches.trivial.write().unwrap().insert(root_key, false);
                return Ok(false);
            }
            for s in &fl.sections {
                if s.is_empty() {
                    continue;
                }
                if visited.insert(self.key(d + 1, s)) {
                    if visited.len() > caps.closure_states {
                        return Err(Error::Undecided(format!(
                            "more than {} sections reachable",
                            caps.closure_states
                        )));
                    }
                    queue.push_back((d + 1, s.clone()));
                }
            }
        }
        let mut cache = self.caches.trivial.write().unwrap();
        for k in visited {
            cache.insert(k, true);
        }
        Ok(true)
    }

    /// Order as the lcm over root cycles `C` of `|C| · order(product of the
    /// sections along C)`, memoized on canonical words.
    pub fn order_word(&self, depth: usize, word: &Word, cap: u128) -> Result<Order> {
        let mut stack = HashMap::new();
        let (step, _) = self.order_rec(depth, word.clone(), 1, cap.max(1), &mut stack)?;
        Ok(match step {
            OrdStep::Val(v) if v <= cap => Order::Finite(v),
            _ => Order::ExceedsCap,
        })
    }

    fn order_rec(
        &self,
        depth: usize,
        word: Word,
        acc: u128,
        cap: u128,
        stack: &mut HashMap<Key, (usize, u128)>,
    ) -> Result<(OrdStep, usize)> {
        let key = self.key(depth, &word);
        if let Some(&v) = self.caches.order.read().unwrap().get(&key) {
            return Ok((OrdStep::Val(v), usize::MAX));
        }
        if let Some(&(idx, acc0)) = stack.get(&key) {
            // A loop that multiplies orbit lengths means infinite order; one
            // that does not adds nothing new.
            return Ok(if acc == acc0 {
                (OrdStep::Val(1), idx)
            } else {
                (OrdStep::Exceeds, idx)
            });
        }
        if self.is_trivial_word(depth, &word)? {
            self.caches.order.write().unwrap().insert(key, 1);
            return Ok((OrdStep::Val(1), usize::MAX));
        }
        let me = stack.len();
        stack.insert(key.clone(), (me, acc));
        let fl = self.first_level(depth, &word);
        let mut val: u128 = 1;
        let mut low = usize::MAX;
        let mut exceeded = false;
        for cycle in fl.perm.cycles() {
            let k = cycle.len() as u128;
            let acc2 = match acc.checked_mul(k) {
                Some(a) if a <= cap => a,
                _ => {
                    exceeded = true;
                    break;
                }
            };
            let h = self.canonical(
                depth + 1,
                cycle.iter().flat_map(|&i| fl.sections[i].atoms().iter().cloned()),
            );
            let (sub, l) = self.order_rec(depth + 1, h, acc2, cap, stack)?;
            low = low.min(l);
            match sub {
                OrdStep::Exceeds => {
                    exceeded = true;
                    break;
                }
                OrdStep::Val(s) => {
                    val = val.lcm(&(k * s));
                    if val.checked_mul(acc).map_or(true, |x| x > cap) {
                        exceeded = true;
                        break;
                    }
                }
            }
        }
        stack.remove(&key);
        if exceeded {
            return Ok((OrdStep::Exceeds, low));
        }
        if low >= me {
            self.caches.order.write().unwrap().insert(key, val);
            low = usize::MAX;
        }
        Ok((OrdStep::Val(val), low))
    }

    // ----- printing --------------------------------------------------------

    pub fn format_word(&self, word: &Word) -> String {
        if word.is_empty() {
            return "e".into();
        }
        let mut s = String::new();
        for atom in word.atoms() {
            match atom {
                Atom::Gen { id, exp } => {
                    s.push_str(&self.generators[*id as usize].name);
                    match *exp {
                        1 => {}
                        -1 => s.push('\''),
                        e => s.push_str(&format!("^{e}")),
                    }
                }
                Atom::Rooted(p) => {
                    let imgs: Vec<String> = p.one_based().iter().map(|x| x.to_string()).collect();
                    s.push_str(&format!("perm[{}]", imgs.join(",")));
                }
                Atom::Planted { vertex, inner } => {
                    s.push_str(&format!("plant({};{})", vertex, self.format_word(inner)));
                }
            }
        }
        s
    }
}
