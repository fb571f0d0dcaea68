//! ERF classification of direct sums of cyclic groups.
//!
//! A sum `A = ⊕ A_v` is described by the number of infinite cyclic summands
//! and, prime by prime, the exponents `n` of the summands `Z/p^n`.

use serde::{Deserialize, Serialize};

use crate::catalog::is_prime;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rank {
    Finite(u64),
    Infinite,
}

/// Exponents of the `p`-power summands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exponents {
    /// The exponents occurring, as a nonempty multiset.
    Explicit(Vec<u32>),
    BoundedBy(u32),
    Unbounded,
}

impl Exponents {
    pub fn is_bounded(&self) -> bool {
        !matches!(self, Exponents::Unbounded)
    }

    fn check(&self) -> Result<()> {
        match self {
            Exponents::Explicit(v) if v.is_empty() => {
                Err(Error::MalformedDescriptor("explicit exponent multiset is empty".into()))
            }
            Exponents::Explicit(v) if v.contains(&0) => {
                Err(Error::MalformedDescriptor("exponents must be positive".into()))
            }
            Exponents::BoundedBy(0) => Err(Error::MalformedDescriptor("exponent bound must be positive".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeComponent {
    pub p: u64,
    pub exponents: Exponents,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbelianDescriptor {
    /// Number of infinite cyclic summands.
    pub z_rank: Rank,
    /// Listed primes, pairwise distinct.
    pub torsion: Vec<PrimeComponent>,
    /// Whether infinitely many further primes divide the finite summands.
    pub primes_infinite: bool,
    /// The exponents of every unlisted prime, when known. Only meaningful
    /// with `primes_infinite`.
    pub tail: Option<Exponents>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "ERF")]
    Erf,
    #[serde(rename = "NotERF")]
    NotErf,
    Undetermined,
}

impl AbelianDescriptor {
    pub fn finite(components: Vec<PrimeComponent>) -> Self {
        AbelianDescriptor { z_rank: Rank::Finite(0), torsion: components, primes_infinite: false, tail: None }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = Vec::new();
        for c in &self.torsion {
            if !is_prime(c.p) {
                return Err(Error::MalformedDescriptor(format!("{} is not a prime", c.p)));
            }
            if seen.contains(&c.p) {
                return Err(Error::MalformedDescriptor(format!("prime {} listed twice", c.p)));
            }
            seen.push(c.p);
            c.exponents.check()?;
        }
        match (&self.tail, self.primes_infinite) {
            (Some(_), false) => {
                Err(Error::MalformedDescriptor("tail exponents given without infinitely many primes".into()))
            }
            (Some(t), true) => t.check(),
            (None, _) => Ok(()),
        }
    }

    /// Whether the finite summands have uniformly bounded orders. Infinitely
    /// many primes force unbounded orders.
    pub fn orders_bounded(&self) -> bool {
        !self.primes_infinite && self.torsion.iter().all(|c| c.exponents.is_bounded())
    }
}

/// The three-case corollary: infinite `I` is not ERF; finite `I` with bounded
/// orders is ERF; finitely many primes with unbounded orders is not ERF.
pub fn classify_corollary(d: &AbelianDescriptor) -> Result<Verdict> {
    d.validate()?;
    Ok(if d.z_rank == Rank::Infinite {
        Verdict::NotErf
    } else if d.orders_bounded() {
        Verdict::Erf
    } else if !d.primes_infinite {
        Verdict::NotErf
    } else {
        Verdict::Undetermined
    })
}

/// The full criterion for sums of cyclic groups: ERF iff the torsion-free
/// rank is finite and every `p`-component has finite exponent.
pub fn classify_full(d: &AbelianDescriptor) -> Result<Verdict> {
    d.validate()?;
    let tail_bounded = match (&d.tail, d.primes_infinite) {
        (_, false) => true,
        (Some(t), true) => t.is_bounded(),
        (None, true) => return Err(Error::IncompleteDescriptor),
    };
    let finite_rank = d.z_rank != Rank::Infinite;
    let bounded = tail_bounded && d.torsion.iter().all(|c| c.exponents.is_bounded());
    Ok(if finite_rank && bounded { Verdict::Erf } else { Verdict::NotErf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn comp(p: u64, exponents: Exponents) -> PrimeComponent {
        PrimeComponent { p, exponents }
    }

    fn infinite_primes(tail: Option<Exponents>) -> AbelianDescriptor {
        AbelianDescriptor { z_rank: Rank::Finite(0), torsion: vec![], primes_infinite: true, tail }
    }

    #[test]
    fn corollary_cases() {
        let mut d = AbelianDescriptor::finite(vec![]);
        d.z_rank = Rank::Infinite;
        assert_eq!(classify_corollary(&d).unwrap(), Verdict::NotErf);
        let d = AbelianDescriptor::finite(vec![comp(2, Exponents::Explicit(vec![1]))]);
        assert_eq!(classify_corollary(&d).unwrap(), Verdict::Erf);
        let d = AbelianDescriptor::finite(vec![comp(3, Exponents::Unbounded)]);
        assert_eq!(classify_corollary(&d).unwrap(), Verdict::NotErf);
        let d = infinite_primes(Some(Exponents::Explicit(vec![1])));
        assert_eq!(classify_corollary(&d).unwrap(), Verdict::Undetermined);
    }

    #[test]
    fn full_criterion() {
        // increasing distinct primes, each with bounded exponent
        let d = infinite_primes(Some(Exponents::BoundedBy(1)));
        assert_eq!(classify_full(&d).unwrap(), Verdict::Erf);
        let d = AbelianDescriptor::finite(vec![comp(2, Exponents::Unbounded)]);
        assert_eq!(classify_full(&d).unwrap(), Verdict::NotErf);
        let d = AbelianDescriptor::finite(vec![
            comp(2, Exponents::Explicit(vec![1, 3])),
            comp(5, Exponents::Explicit(vec![2])),
        ]);
        assert_eq!(classify_full(&d).unwrap(), Verdict::Erf);
        assert_eq!(classify_full(&infinite_primes(None)).unwrap_err(), Error::IncompleteDescriptor);
    }

    #[test]
    fn malformed() {
        let bad = [
            AbelianDescriptor::finite(vec![comp(4, Exponents::BoundedBy(1))]),
            AbelianDescriptor::finite(vec![comp(2, Exponents::BoundedBy(1)), comp(2, Exponents::Unbounded)]),
            AbelianDescriptor::finite(vec![comp(2, Exponents::Explicit(vec![]))]),
            AbelianDescriptor { tail: Some(Exponents::Unbounded), ..AbelianDescriptor::finite(vec![]) },
        ];
        for d in &bad {
            assert!(matches!(classify_corollary(d), Err(Error::MalformedDescriptor(_))), "{d:?}");
        }
    }

    fn exponents() -> impl Strategy<Value = Exponents> {
        prop_oneof![
            prop::collection::vec(1u32..6, 1..4).prop_map(Exponents::Explicit),
            (1u32..6).prop_map(Exponents::BoundedBy),
            Just(Exponents::Unbounded),
        ]
    }

    fn descriptor() -> impl Strategy<Value = AbelianDescriptor> {
        (
            prop_oneof![(0u64..4).prop_map(Rank::Finite), Just(Rank::Infinite)],
            prop::collection::vec(exponents(), 0..3),
            any::<bool>(),
        )
            .prop_map(|(z_rank, exps, primes_infinite)| AbelianDescriptor {
                z_rank,
                torsion: [2, 3, 5].iter().zip(exps).map(|(&p, exponents)| comp(p, exponents)).collect(),
                primes_infinite,
                tail: None,
            })
    }

    proptest! {
        #[test]
        fn corollary_agrees_with_every_completion(d in descriptor(), tail in exponents()) {
            let verdict = classify_corollary(&d).unwrap();
            let mut complete = d.clone();
            if complete.primes_infinite {
                complete.tail = Some(tail);
            }
            if verdict != Verdict::Undetermined {
                prop_assert_eq!(classify_full(&complete).unwrap(), verdict);
            }
        }
    }
}
