//! Elements with long orbits inside a rigid stabilizer.
//!
//! Starting at `u_1 = u`, each step takes a witness `g_i ∈ rist(u_i)`, a
//! vertex `x_i` moved by it with orbit length `k_i`, and continues at
//! `u_{i+1} = x_i`. The subtrees below the `g_i`-orbit of `x_i` are disjoint,
//! so `g_1 ⋯ g_n` moves `x_n` along an orbit of length `k_1 ⋯ k_n`. With
//! prime orders `p_i` and `k_i = p_i`, the product has order `p_1 ⋯ p_n`.

use crate::element::Element;
use crate::error::{Error, Result};
use crate::presentation::Order;
use crate::stabilizers::{first_orbit_below, in_rist, orbit_of_vertex, RistWitness};
use crate::tree::Vertex;

use super::{arity_primes, check, WitnessFinder};

/// Levels below `u_i` searched for the moved vertex `x_i`.
const ORBIT_DEPTH: usize = 12;
const MAX_STEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LargeOrderStep {
    pub vertex: Vertex,
    pub witness: RistWitness,
    pub moved: Vertex,
    pub orbit_length: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LargeOrderCertificate {
    pub root: Vertex,
    pub target: u128,
    pub torsion: bool,
    pub steps: Vec<LargeOrderStep>,
    pub element: Element,
    pub witness_point: Vertex,
    pub orbit_length: u128,
    /// `p_1 ⋯ p_n`, in torsion mode.
    pub order: Option<u128>,
}

pub fn build_large_order(
    finder: &WitnessFinder,
    u: &Vertex,
    target: u128,
    torsion: bool,
) -> Result<LargeOrderCertificate> {
    if target < 2 {
        return Err(Error::BadArgument("the target must be at least 2".into()));
    }
    let group = finder.group().clone();
    group.shape().check(u)?;
    let primes = arity_primes(&group);
    let mut steps: Vec<LargeOrderStep> = Vec::new();
    let mut vertex = u.clone();
    let mut product: u128 = 1;
    while product < target {
        if steps.len() == MAX_STEPS {
            return Err(Error::BadArgument(format!("no orbit of length {target} after {MAX_STEPS} steps")));
        }
        let (witness, p) = if torsion {
            let mut found = None;
            let mut last = None;
            for &p in &primes {
                match finder.find(&vertex, Some(p)) {
                    Ok(w) => {
                        found = Some((w, Some(p)));
                        break;
                    }
                    Err(e) if e.is_computation_limit() => last = Some(e),
                    Err(e) => return Err(e),
                }
            }
            found.ok_or_else(|| last.unwrap_or(Error::SearchFailed { vertex: vertex.clone(), radius: finder.radius }))?
        } else {
            (finder.find(&vertex, None)?, None)
        };
        let (moved, k) = match p {
            Some(p) => first_orbit_below(&witness.element, &vertex, ORBIT_DEPTH, |len| len as u128 == p)?,
            None => first_orbit_below(&witness.element, &vertex, ORBIT_DEPTH, |len| len >= 2)?,
        };
        product = product.checked_mul(k as u128).ok_or(Error::BadArgument("orbit length overflow".into()))?;
        steps.push(LargeOrderStep { vertex, witness, moved: moved.clone(), orbit_length: k as u128 });
        vertex = moved;
    }
    let mut element = Element::identity(&group);
    for s in &steps {
        element = element.multiply(&s.witness.element);
    }
    let cert = LargeOrderCertificate {
        root: u.clone(),
        target,
        torsion,
        element,
        witness_point: vertex,
        orbit_length: product,
        order: torsion.then_some(product),
        steps,
    };
    cert.verify()?;
    Ok(cert)
}

impl LargeOrderCertificate {
    pub fn verify(&self) -> Result<()> {
        let first = self.steps.first().ok_or(Error::VerificationFailed("no steps".into()))?;
        check(first.vertex == self.root, || "the first step is not at the root vertex".into())?;
        let mut product: u128 = 1;
        let mut element = Element::identity(self.element.group());
        for (i, s) in self.steps.iter().enumerate() {
            s.witness.verify()?;
            check(s.witness.vertex == s.vertex && in_rist(&s.witness.element, &s.vertex)?, || {
                format!("step {} witness is not in rist({})", i + 1, s.vertex)
            })?;
            check(s.vertex.is_prefix_of(&s.moved) && s.vertex != s.moved, || {
                format!("step {} moved vertex {} is not below {}", i + 1, s.moved, s.vertex)
            })?;
            if let Some(next) = self.steps.get(i + 1) {
                check(next.vertex == s.moved, || format!("step {} does not continue at {}", i + 2, s.moved))?;
            }
            let orbit = orbit_of_vertex(&s.witness.element, &s.moved);
            check(orbit.len() as u128 == s.orbit_length && orbit.len() >= 2, || {
                format!("step {} orbit length is {}, not {}", i + 1, orbit.len(), s.orbit_length)
            })?;
            if self.torsion {
                check(s.witness.order == Some(s.orbit_length), || {
                    format!("step {} orbit length differs from the witness order", i + 1)
                })?;
            }
            product *= s.orbit_length;
            element = element.multiply(&s.witness.element);
        }
        check(element == self.element, || "element is not the product of the step witnesses".into())?;
        check(self.witness_point == self.steps.last().unwrap().moved, || "wrong witness point".into())?;
        let orbit = orbit_of_vertex(&self.element, &self.witness_point).len() as u128;
        check(orbit == product && product == self.orbit_length && product >= self.target, || {
            format!("orbit of length {orbit}, claimed {} with target {}", self.orbit_length, self.target)
        })?;
        if self.torsion {
            check(self.order == Some(product) && self.element.order(product)? == Order::Finite(product), || {
                format!("the product does not have order {product}")
            })?;
        }
        Ok(())
    }
}
