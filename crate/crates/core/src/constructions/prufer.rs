//! Kernels of projections of direct sums of cyclic `p`-groups (or of copies
//! of `Z`) onto the Prüfer group, truncated to a finite prefix.
//!
//! The summand at index `i` is `Z/p^{n_i}` (or `Z`), embedded in `Q/Z` by
//! `x ↦ x / p^{n_i}`. A tuple lies in the kernel iff the sum of its images
//! vanishes. Tuples range over the whole prefix; masked-out coordinates must
//! be zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::hv::comb;
use super::large_order::{build_large_order, LargeOrderCertificate};
use super::WitnessFinder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    /// Summands `Z/p^{n_i}`.
    Torsion,
    /// Summands `Z`, mapped through `Z/2^{n_i}`; the prime is 2.
    TorsionFree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruferKernelSpec {
    pub p: u64,
    pub exponents: Vec<u32>,
    pub mode: KernelMode,
    pub mask: Vec<bool>,
}

/// Isomorphism type of the truncated kernel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsoInvariant {
    /// Sorted orders of the cyclic factors.
    PrimePowers(Vec<u128>),
    /// A free abelian group of countably infinite rank.
    FreeAbelian,
}

/// `t = p^m · y + k` with `k` in the kernel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisibilityWitness {
    pub y: Vec<i128>,
    pub k: Vec<i128>,
}

const MAX_MODULUS: i128 = 1 << 100;

impl PruferKernelSpec {
    pub fn new(p: u64, exponents: Vec<u32>, mode: KernelMode, mask: Vec<bool>) -> Result<Self> {
        let spec = PruferKernelSpec { p, exponents, mode, mask };
        spec.validate()?;
        Ok(spec)
    }

    /// All-ones mask over `exponents`.
    pub fn full(p: u64, exponents: Vec<u32>, mode: KernelMode) -> Result<Self> {
        let mask = vec![true; exponents.len()];
        Self::new(p, exponents, mode, mask)
    }

    pub fn validate(&self) -> Result<()> {
        if !crate::catalog::is_prime(self.p) {
            return Err(Error::NotPrime(self.p));
        }
        if self.mode == KernelMode::TorsionFree && self.p != 2 {
            return Err(Error::BadArgument("the torsion-free kernel uses the prime 2".into()));
        }
        if self.exponents.len() < 2 {
            return Err(Error::BadArgument("need at least two exponents".into()));
        }
        if self.exponents[0] == 0 || self.exponents.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadArgument("exponents must be positive and strictly increasing".into()));
        }
        if self.mask.len() != self.exponents.len() {
            return Err(Error::BadArgument("mask and exponents differ in length".into()));
        }
        let top = *self.exponents.last().unwrap();
        match (self.p as i128).checked_pow(top) {
            Some(q) if q <= MAX_MODULUS => Ok(()),
            _ => Err(Error::BadArgument(format!("{}^{top} is too large", self.p))),
        }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    fn pow(&self, e: u32) -> i128 {
        (self.p as i128).pow(e)
    }

    fn active(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.mask[i])
    }

    fn check_tuple(&self, x: &[i128]) -> Result<()> {
        if x.len() > self.len() {
            return Err(Error::IndexOutOfRange { index: x.len() - 1, len: self.len() });
        }
        if let Some(i) = (0..x.len()).find(|&i| !self.mask[i] && x[i] != 0) {
            return Err(Error::BadArgument(format!("coordinate {} is masked out", i + 1)));
        }
        Ok(())
    }

    /// Canonical representative: each torsion coordinate reduced into
    /// `0..p^{n_i}`, padded to the prefix length.
    pub fn normalize(&self, x: &[i128]) -> Result<Vec<i128>> {
        self.check_tuple(x)?;
        let mut out = vec![0; self.len()];
        for (i, &xi) in x.iter().enumerate() {
            out[i] = match self.mode {
                KernelMode::Torsion => xi.rem_euclid(self.pow(self.exponents[i])),
                KernelMode::TorsionFree => xi,
            };
        }
        Ok(out)
    }

    /// Image in `Z_{p^∞}` as `(c, h)` meaning `c / p^h` with `p ∤ c` unless
    /// the image is 0, in which case `(0, 0)`.
    pub fn prufer_image(&self, x: &[i128]) -> Result<(i128, u32)> {
        self.check_tuple(x)?;
        let Some(m) = (0..x.len()).rev().find(|&i| x[i] != 0) else {
            return Ok((0, 0));
        };
        let top = self.exponents[m];
        let q = self.pow(top);
        let mut c: i128 = 0;
        for i in 0..=m {
            let term = (x[i].rem_euclid(self.pow(self.exponents[i]))) * self.pow(top - self.exponents[i]);
            c = (c + term).rem_euclid(q);
        }
        let p = self.p as i128;
        let mut h = top;
        while c != 0 && c % p == 0 {
            c /= p;
            h -= 1;
        }
        Ok(if c == 0 { (0, 0) } else { (c, h) })
    }

    /// `Σ_{i≤m} p^{n_m - n_i} x_i ≡ 0 (mod p^{n_m})` for the last supported
    /// index `m`.
    pub fn member(&self, x: &[i128]) -> Result<bool> {
        Ok(self.prufer_image(x)?.0 == 0)
    }

    /// `k = e_i - p^{n_j - n_i} e_j` for consecutive active indices `i < j`.
    pub fn generators(&self) -> Vec<Vec<i128>> {
        let active: Vec<usize> = self.active().collect();
        active
            .windows(2)
            .map(|w| {
                let mut k = vec![0; self.len()];
                k[w[0]] = 1;
                k[w[1]] = -self.pow(self.exponents[w[1]] - self.exponents[w[0]]);
                k
            })
            .collect()
    }

    /// Order of a tuple; `None` for a nonzero torsion-free tuple.
    pub fn order(&self, x: &[i128]) -> Result<Option<u128>> {
        let x = self.normalize(x)?;
        match self.mode {
            KernelMode::TorsionFree => Ok(if x.iter().all(|&v| v == 0) { Some(1) } else { None }),
            KernelMode::Torsion => {
                let mut best: u128 = 1;
                for (i, &xi) in x.iter().enumerate() {
                    let q = self.pow(self.exponents[i]);
                    let mut g = gcd(xi, q);
                    if g == 0 {
                        g = q;
                    }
                    best = best.max((q / g) as u128);
                }
                Ok(Some(best))
            }
        }
    }

    pub fn add(&self, x: &[i128], y: &[i128]) -> Result<Vec<i128>> {
        let (x, y) = (self.normalize(x)?, self.normalize(y)?);
        self.normalize(&x.iter().zip(&y).map(|(a, b)| a + b).collect::<Vec<_>>())
    }

    pub fn negate(&self, x: &[i128]) -> Result<Vec<i128>> {
        let x = self.normalize(x)?;
        self.normalize(&x.iter().map(|a| -a).collect::<Vec<_>>())
    }

    /// `p^m · y + k = t` with `k` in the kernel, solving in the first active
    /// summand deep enough to absorb the Prüfer image of `t`.
    pub fn divisibility_witness(&self, t: &[i128], m: u32) -> Result<DivisibilityWitness> {
        let t = self.normalize(t)?;
        let (c, h) = self.prufer_image(&t)?;
        let mut y = vec![0; self.len()];
        if c != 0 {
            let required = m + h;
            let j = self
                .active()
                .find(|&j| self.exponents[j] >= required)
                .ok_or(Error::PrefixTooShort { required })?;
            // p^m · y_j / p^{n_j} = c / p^h
            y[j] = c * self.pow(self.exponents[j] - required);
        }
        let scaled: Vec<i128> = y.iter().map(|v| v * self.pow(m)).collect();
        let k = self.add(&t, &self.negate(&scaled)?)?;
        let y = self.normalize(&y)?;
        Ok(DivisibilityWitness { y, k })
    }

    pub fn verify_divisibility(&self, t: &[i128], m: u32, w: &DivisibilityWitness) -> Result<bool> {
        let scaled: Vec<i128> = w.y.iter().map(|v| v * self.pow(m)).collect();
        Ok(self.member(&w.k)? && self.add(&scaled, &w.k)? == self.normalize(t)?)
    }

    pub fn iso_invariant(&self) -> IsoInvariant {
        match self.mode {
            KernelMode::TorsionFree => IsoInvariant::FreeAbelian,
            KernelMode::Torsion => {
                let mut v: Vec<u128> = self.active().map(|i| self.pow(self.exponents[i]) as u128).collect();
                v.sort_unstable();
                IsoInvariant::PrimePowers(v)
            }
        }
    }
}

/// Cyclic subgroups of order `p^{n_i}` in `rist(u_i)` along the comb, one per
/// active index below `count`. Their product realizes the direct sum, since
/// the comb vertices are pairwise incomparable.
pub fn realize_factors(
    spec: &PruferKernelSpec,
    finder: &WitnessFinder,
    count: usize,
) -> Result<Vec<(usize, LargeOrderCertificate)>> {
    if spec.mode == KernelMode::TorsionFree {
        return Err(Error::BadArgument("only torsion summands have finite realizations".into()));
    }
    let vertices = comb(count.min(spec.len()));
    let mut out = Vec::new();
    for i in spec.active().filter(|&i| i < vertices.len()) {
        let target = spec.pow(spec.exponents[i]) as u128;
        let cert = build_large_order(finder, &vertices[i], target, true)?;
        if cert.order != Some(target) {
            return Err(Error::VerificationFailed(format!(
                "factor {} has order {:?}, not {target}",
                i + 1,
                cert.order
            )));
        }
        out.push((i, cert));
    }
    Ok(out)
}

fn gcd(a: i128, b: i128) -> i128 {
    num_integer::Integer::gcd(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn torsion(p: u64, n: &[u32]) -> PruferKernelSpec {
        PruferKernelSpec::full(p, n.to_vec(), KernelMode::Torsion).unwrap()
    }

    #[test]
    fn generators_and_orders() {
        let s = torsion(2, &[1, 2]);
        assert_eq!(s.generators(), vec![vec![1, -2]]);
        assert_eq!(s.order(&[1, -2]).unwrap(), Some(2));
        let s = torsion(3, &[1, 2, 3]);
        assert_eq!(s.generators()[1], vec![0, 1, -3]);
        for (i, k) in s.generators().iter().enumerate() {
            assert!(s.member(k).unwrap());
            assert_eq!(s.order(k).unwrap(), Some(3u128.pow(s.exponents[i])));
        }
        let none = PruferKernelSpec::new(2, vec![1, 2, 3], KernelMode::Torsion, vec![false; 3]).unwrap();
        assert!(none.generators().is_empty());
        let masked = PruferKernelSpec::new(2, vec![1, 2, 3], KernelMode::Torsion, vec![true, false, true]).unwrap();
        assert_eq!(masked.generators(), vec![vec![1, 0, -4]]);
    }

    #[test]
    fn factors_in_the_tree() {
        let g = crate::catalog::grigorchuk();
        let finder = WitnessFinder::new(&g, 6);
        let s = PruferKernelSpec::new(2, vec![1, 2, 3], KernelMode::Torsion, vec![true, false, true]).unwrap();
        let factors = realize_factors(&s, &finder, 3).unwrap();
        assert_eq!(factors.iter().map(|(i, c)| (*i, c.order)).collect::<Vec<_>>(), vec![(0, Some(2)), (2, Some(8))]);
        let roots: Vec<_> = factors.iter().map(|(_, c)| c.root.clone()).collect();
        assert!(roots[0].is_incomparable(&roots[1]));
        let x = &factors[0].1.element;
        let y = &factors[1].1.element;
        assert!(x.commutator(y).is_trivial().unwrap());
        let free = PruferKernelSpec::full(2, vec![1, 2], KernelMode::TorsionFree).unwrap();
        assert!(realize_factors(&free, &finder, 2).is_err());
    }

    #[test]
    fn membership() {
        let s = torsion(2, &[1, 2]);
        assert!(s.member(&[]).unwrap());
        assert!(s.member(&[0, 0]).unwrap());
        assert!(!s.member(&[1, 0]).unwrap());
        assert!(s.member(&[1, 2]).unwrap());
        assert_eq!(s.member(&[0, 0, 1]).unwrap_err(), Error::IndexOutOfRange { index: 2, len: 2 });
        let f = PruferKernelSpec::full(2, vec![1, 2, 3], KernelMode::TorsionFree).unwrap();
        assert!(f.member(&[1, 2, 4]).unwrap() == false);
        assert!(f.member(&[1, -2, 0]).unwrap());
        assert!(f.member(&[2, 0, 0]).unwrap());
    }

    #[test]
    fn divisibility() {
        let n: Vec<u32> = (1..=10).collect();
        let s = torsion(2, &n);
        let w = s.divisibility_witness(&[0; 10], 4).unwrap();
        assert_eq!(w, DivisibilityWitness { y: vec![0; 10], k: vec![0; 10] });
        let mut e1 = vec![0; 10];
        e1[0] = 1;
        let w = s.divisibility_witness(&e1, 5).unwrap();
        assert!(s.verify_divisibility(&e1, 5, &w).unwrap());
        assert_eq!(s.divisibility_witness(&e1, 10).unwrap_err(), Error::PrefixTooShort { required: 11 });
        let f = PruferKernelSpec::full(2, n, KernelMode::TorsionFree).unwrap();
        let w = f.divisibility_witness(&e1, 3).unwrap();
        assert!(f.verify_divisibility(&e1, 3, &w).unwrap());
    }

    #[test]
    fn invariants() {
        let a = PruferKernelSpec::new(2, vec![1, 2, 3, 4], KernelMode::Torsion, vec![true, true, false, false]).unwrap();
        let b = PruferKernelSpec::new(2, vec![1, 2, 3, 4], KernelMode::Torsion, vec![true, false, true, false]).unwrap();
        assert_ne!(a.iso_invariant(), b.iso_invariant());
        assert_eq!(a.iso_invariant(), a.clone().iso_invariant());
        let fa = PruferKernelSpec { mode: KernelMode::TorsionFree, ..a };
        let fb = PruferKernelSpec { mode: KernelMode::TorsionFree, ..b };
        assert_eq!(fa.iso_invariant(), fb.iso_invariant());
    }

    #[test]
    fn bad_specs() {
        assert!(PruferKernelSpec::full(2, vec![1], KernelMode::Torsion).is_err());
        assert!(PruferKernelSpec::full(2, vec![2, 2], KernelMode::Torsion).is_err());
        assert!(PruferKernelSpec::full(3, vec![1, 2], KernelMode::TorsionFree).is_err());
        assert!(PruferKernelSpec::full(4, vec![1, 2], KernelMode::Torsion).is_err());
        assert!(PruferKernelSpec::new(2, vec![1, 2], KernelMode::Torsion, vec![true]).is_err());
    }

    fn member_of(s: &PruferKernelSpec, coeffs: &[i128]) -> Vec<i128> {
        let mut x = vec![0; s.len()];
        for (k, c) in s.generators().iter().zip(coeffs) {
            let scaled: Vec<i128> = k.iter().map(|v| v * c).collect();
            x = s.add(&x, &scaled).unwrap();
        }
        x
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn kernel_is_a_subgroup(a in prop::collection::vec(-50i128..50, 6), b in prop::collection::vec(-50i128..50, 6)) {
            let n: Vec<u32> = (1..=7).collect();
            for mode in [KernelMode::Torsion, KernelMode::TorsionFree] {
                let s = PruferKernelSpec::full(2, n.clone(), mode).unwrap();
                let (x, y) = (member_of(&s, &a), member_of(&s, &b));
                prop_assert!(s.member(&x).unwrap() && s.member(&y).unwrap());
                prop_assert!(s.member(&s.add(&x, &y).unwrap()).unwrap());
                prop_assert!(s.member(&s.negate(&x).unwrap()).unwrap());
            }
        }

        #[test]
        fn membership_matches_rational_sum(x in prop::collection::vec(-20i128..20, 4)) {
            let s = torsion(3, &[1, 2, 4, 5]);
            // Σ x_i / 3^{n_i} is an integer iff 3^5 divides Σ x_i 3^{5 - n_i}
            let total: i128 = x.iter().zip(&s.exponents).map(|(v, &e)| v * 3i128.pow(5 - e)).sum();
            prop_assert_eq!(s.member(&x).unwrap(), total % 243 == 0);
        }
    }
}
