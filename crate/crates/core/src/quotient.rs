//! Finite quotients `G/st(n)` as permutation groups on level-`n` vertices.
//!
//! Level-`n` vertices are indexed shortlex, so point `k` is
//! `shape.vertex_at_below(0, n, k)`. Stabilizer chains are built by a
//! deterministic Schreier-Sims; base points are the least moved points.

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use num_bigint::BigUint;

use crate::element::Element;
use crate::error::{Error, Result};
use crate::perm::Perm;
use crate::presentation::GroupPresentation;

/// The permutation induced on the `level`-th level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelPerm {
    pub level: usize,
    pub perm: Perm,
}

impl LevelPerm {
    pub fn identity(group: &GroupPresentation, level: usize) -> Self {
        LevelPerm { level, perm: Perm::identity(group.shape().level_size(level) as usize) }
    }

    /// The product `self · other` (apply `self` first).
    pub fn then(&self, other: &LevelPerm) -> Result<LevelPerm> {
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level, other.level));
        }
        Ok(LevelPerm { level: self.level, perm: self.perm.then(&other.perm) })
    }

    pub fn inverse(&self) -> LevelPerm {
        LevelPerm { level: self.level, perm: self.perm.inverse() }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.is_identity()
    }
}

pub fn image(g: &Element, n: usize) -> LevelPerm {
    LevelPerm { level: n, perm: g.level_image(n) }
}

struct ChainLevel {
    base: usize,
    /// Indices into the strong generating set of generators fixing all
    /// earlier base points.
    gens: Vec<usize>,
    orbit: Vec<usize>,
    /// `transversal[b]` maps the base point to `b`.
    transversal: Vec<Option<Perm>>,
    /// `(orbit position, generator position)` pairs already sifted.
    checked: HashSet<(usize, usize)>,
}

/// A base and strong generating set with explicit transversals.
pub struct StabChain {
    level: usize,
    degree: usize,
    strong: Vec<Perm>,
    levels: Vec<ChainLevel>,
}

impl std::fmt::Debug for StabChain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StabChain")
            .field("level", &self.level)
            .field("degree", &self.degree)
            .field("base", &self.base())
            .field("orbit_sizes", &self.levels.iter().map(|l| l.orbit.len()).collect::<Vec<_>>())
            .finish()
    }
}

impl StabChain {
    fn empty(level: usize, degree: usize) -> Self {
        StabChain { level, degree, strong: Vec::new(), levels: Vec::new() }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn base(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.base).collect()
    }

    pub fn strong_generators(&self) -> &[Perm] {
        &self.strong
    }

    /// Sifts `g` through the levels from `from` on; returns the residue and
    /// the level where sifting stopped.
    fn sift(&self, mut g: Perm, from: usize) -> (Perm, usize) {
        for (i, lvl) in self.levels.iter().enumerate().skip(from) {
            let beta = g.apply(lvl.base);
            match &lvl.transversal[beta] {
                Some(u) => g = g.then(&u.inverse()),
                None => return (g, i),
            }
        }
        let depth = self.levels.len();
        (g, depth)
    }

    fn add_strong(&mut self, r: Perm, depth: usize) {
        if depth == self.levels.len() {
            let base = r.first_moved().expect("residue is nontrivial");
            let mut transversal = vec![None; self.degree];
            transversal[base] = Some(Perm::identity(self.degree));
            self.levels.push(ChainLevel {
                base,
                gens: Vec::new(),
                orbit: vec![base],
                transversal,
                checked: HashSet::new(),
            });
        }
        let idx = self.strong.len();
        self.strong.push(r);
        for lvl in &mut self.levels[..=depth] {
            lvl.gens.push(idx);
        }
    }

    fn extend_orbit(&mut self, i: usize) {
        let strong = &self.strong;
        let lvl = &mut self.levels[i];
        let mut queue: VecDeque<usize> = lvl.orbit.iter().copied().collect();
        while let Some(beta) = queue.pop_front() {
            for &s in &lvl.gens {
                let gamma = strong[s].apply(beta);
                if lvl.transversal[gamma].is_none() {
                    let u = lvl.transversal[beta].as_ref().unwrap().then(&strong[s]);
                    lvl.transversal[gamma] = Some(u);
                    lvl.orbit.push(gamma);
                    queue.push_back(gamma);
                }
            }
        }
    }

    /// Finds one Schreier generator that does not sift, scanning levels
    /// bottom-up.
    fn unsifted_schreier(&mut self) -> Option<(Perm, usize)> {
        for i in (0..self.levels.len()).rev() {
            self.extend_orbit(i);
            let lvl = &self.levels[i];
            let mut pending = Vec::new();
            for (k, &beta) in lvl.orbit.iter().enumerate() {
                for (j, &s) in lvl.gens.iter().enumerate() {
                    if !lvl.checked.contains(&(k, j)) {
                        pending.push((k, j, beta, s));
                    }
                }
            }
            for (k, j, beta, s) in pending {
                self.levels[i].checked.insert((k, j));
                let lvl = &self.levels[i];
                let s_perm = &self.strong[s];
                let u = lvl.transversal[beta].as_ref().unwrap();
                let t = lvl.transversal[s_perm.apply(beta)].as_ref().unwrap();
                let schreier = u.then(s_perm).then(&t.inverse());
                let (r, depth) = self.sift(schreier, i + 1);
                if !r.is_identity() {
                    return Some((r, depth));
                }
            }
        }
        None
    }

    fn insert(&mut self, g: &Perm) {
        let (r, depth) = self.sift(g.clone(), 0);
        if !r.is_identity() {
            self.add_strong(r, depth);
        }
        while let Some((r, depth)) = self.unsifted_schreier() {
            self.add_strong(r, depth);
        }
    }

    fn contains_perm(&self, p: &Perm) -> bool {
        p.degree() == self.degree && self.sift(p.clone(), 0).0.is_identity()
    }

    pub fn order(&self) -> BigUint {
        self.levels.iter().map(|l| BigUint::from(l.orbit.len())).product()
    }

    /// The orbit of the `i`-th base point under the `i`-th stabilizer.
    pub fn basic_orbit(&self, i: usize) -> &[usize] {
        &self.levels[i].orbit
    }
}

/// Builds a chain for `⟨perms⟩`. An empty list needs `level` and `degree`,
/// so use [`stab_chain_at`] for that case.
pub fn stab_chain(perms: &[LevelPerm]) -> Result<StabChain> {
    let first = perms
        .first()
        .ok_or_else(|| Error::BadArgument("an empty generator list needs an explicit level".into()))?;
    stab_chain_at(first.level, first.perm.degree(), perms)
}

pub fn stab_chain_at(level: usize, degree: usize, perms: &[LevelPerm]) -> Result<StabChain> {
    let mut chain = StabChain::empty(level, degree);
    for p in perms {
        if p.level != level {
            return Err(Error::LevelMismatch(level, p.level));
        }
        if p.perm.degree() != degree {
            return Err(Error::BadArgument(format!(
                "permutation of degree {} on a level with {} vertices",
                p.perm.degree(),
                degree
            )));
        }
        chain.insert(&p.perm);
    }
    Ok(chain)
}

pub fn contains(chain: &StabChain, p: &LevelPerm) -> bool {
    p.level == chain.level && chain.contains_perm(&p.perm)
}

/// Images of the generators on level `n`.
pub fn generator_images(group: &Arc<GroupPresentation>, n: usize) -> Vec<LevelPerm> {
    (0..group.generators().len() as u16)
        .map(|id| {
            let g = Element::from_word(group, 0, group.generator_word(id)).expect("generator words are valid");
            image(&g, n)
        })
        .collect()
}

pub fn quotient_order(group: &Arc<GroupPresentation>, n: usize) -> BigUint {
    let degree = group.shape().level_size(n) as usize;
    stab_chain_at(n, degree, &generator_images(group, n))
        .expect("generator images share a level")
        .order()
}

/// Closure of `perms` under products, as an independent oracle.
pub fn bfs_enumerate(level: usize, degree: usize, perms: &[LevelPerm], cap: usize) -> Result<HashSet<LevelPerm>> {
    for p in perms {
        if p.level != level {
            return Err(Error::LevelMismatch(level, p.level));
        }
    }
    let id = LevelPerm { level, perm: Perm::identity(degree) };
    let mut seen = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for s in perms {
            let y = LevelPerm { level, perm: x.perm.then(&s.perm) };
            if !seen.contains(&y) {
                if seen.len() >= cap {
                    return Err(Error::BallCapExceeded(cap));
                }
                seen.insert(y.clone());
                queue.push_back(y);
            }
        }
    }
    Ok(seen)
}
