//! Certificate builders: elements of large order in rigid stabilizers,
//! Prüfer kernels, the closure-gap families `H_V`, and the ERF classifier
//! for sums of cyclic groups.

pub mod erf;
pub mod hv;
pub mod large_order;
pub mod prufer;

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::presentation::{GroupPresentation, Order};
use crate::stabilizers::{
    rist_search, BranchCertificate, BranchOptions, Membership, Predicate, RistWitness, SearchOptions,
};
use crate::tree::Vertex;

/// Rigid-stabilizer witnesses by ball search, falling back to a branch
/// certificate for self-similar groups.
pub struct WitnessFinder {
    group: Arc<GroupPresentation>,
    pub radius: usize,
    pub threads: usize,
    pub branch: BranchOptions,
    certificate: OnceLock<Result<Arc<BranchCertificate>>>,
}

impl WitnessFinder {
    pub fn new(group: &Arc<GroupPresentation>, radius: usize) -> Self {
        WitnessFinder {
            group: group.clone(),
            radius,
            threads: 1,
            branch: BranchOptions::default(),
            certificate: OnceLock::new(),
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self.branch.threads = threads;
        self
    }

    pub fn group(&self) -> &Arc<GroupPresentation> {
        &self.group
    }

    pub fn certificate(&self) -> Result<Arc<BranchCertificate>> {
        self.certificate
            .get_or_init(|| BranchCertificate::find(&self.group, self.branch).map(Arc::new))
            .clone()
    }

    /// A witness at `v`, of order exactly `prime` when given.
    pub fn find(&self, v: &Vertex, prime: Option<u128>) -> Result<RistWitness> {
        let predicate = match prime {
            Some(p) => Predicate::OrderDivisibleBy(p),
            None => Predicate::Nontrivial,
        };
        let options = SearchOptions { max_hits: 1, threads: self.threads };
        if let Some(hit) = rist_search(&self.group, v, self.radius, predicate, options)?.into_iter().next() {
            return Ok(match prime {
                Some(p) => power_to_order(hit, p)?,
                None => hit,
            });
        }
        if !self.group.is_self_similar() {
            return Err(Error::SearchFailed { vertex: v.clone(), radius: self.radius });
        }
        let predicate = match prime {
            Some(p) => Predicate::OrderExactly(p),
            None => Predicate::Nontrivial,
        };
        self.certificate()?.witness(v, predicate, self.branch)
    }
}

/// `w^(o/p)` for a word witness of order `o` divisible by `p`.
fn power_to_order(w: RistWitness, p: u128) -> Result<RistWitness> {
    let o = match w.order {
        Some(o) => o,
        None => match w.element.order(1 << 24)? {
            Order::Finite(o) => o,
            Order::ExceedsCap => return Err(Error::Undecided(format!("order of {}", w.element))),
        },
    };
    if o % p != 0 {
        return Err(Error::BadArgument(format!("order {o} of {} is not divisible by {p}", w.element)));
    }
    if o == p {
        return Ok(w);
    }
    let element = w.element.power((o / p) as i64);
    Ok(RistWitness { element, order: Some(p), membership: Membership::Word, ..w })
}

/// Primes dividing some arity of the tree, ascending.
pub fn arity_primes(group: &GroupPresentation) -> Vec<u128> {
    let shape = group.shape();
    let mut out: Vec<u128> = Vec::new();
    for &m in shape.prefix().iter().chain(shape.block()) {
        for q in 2..=m as u128 {
            if m as u128 % q == 0 && crate::catalog::is_prime(q as u64) && !out.contains(&q) {
                out.push(q);
            }
        }
    }
    out.sort_unstable();
    out
}

pub(crate) fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::VerificationFailed(msg()))
    }
}

