//! Acceptance criteria, one PASS/FAIL line each. All checks are exact.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use branchforge::catalog::{ggs, ggs_is_torsion, grigorchuk, GgsVector};
use branchforge::constructions::erf::{
    classify_corollary, classify_full, AbelianDescriptor, Exponents, PrimeComponent, Rank, Verdict,
};
use branchforge::constructions::hv::{build_hv, family_distinct, separation_depth, HvFamily, Separation};
use branchforge::constructions::large_order::build_large_order;
use branchforge::constructions::prufer::{IsoInvariant, KernelMode, PruferKernelSpec};
use branchforge::constructions::WitnessFinder;
use branchforge::quotient::{bfs_enumerate, generator_images, quotient_order};
use branchforge::stabilizers::{conjugate_witness, generator_elements, in_rist, rist_search, Predicate, SearchOptions};
use branchforge::{Element, GroupPresentation, Order, Vertex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn el(g: &Arc<GroupPresentation>, w: &str) -> Element {
    Element::parse(g, w).unwrap()
}

fn vx(s: &str) -> Vertex {
    Vertex::parse(s).unwrap()
}

fn mask(s: &str) -> Vec<bool> {
    s.chars().map(|c| c == '1').collect()
}

fn gupta_sidki() -> Arc<GroupPresentation> {
    ggs(&GgsVector::new(3, &[1, 2]).unwrap()).unwrap()
}

struct Families {
    binary: HvFamily,
    ternary: HvFamily,
}

fn families() -> &'static Families {
    static F: OnceLock<Families> = OnceLock::new();
    F.get_or_init(|| {
        let g = grigorchuk();
        let t = gupta_sidki();
        Families {
            binary: build_hv(&WitnessFinder::new(&g, 6), 2, &el(&g, "a"), &mask("1111")).unwrap(),
            ternary: build_hv(&WitnessFinder::new(&t, 6), 3, &el(&t, "a"), &mask("1111")).unwrap(),
        }
    })
}

fn level_image_orders(g: &Element) -> Vec<u64> {
    (1..=8).map(|n| g.level_image(n).order()).collect()
}

fn grigorchuk_relations() -> Check {
    let g = grigorchuk();
    for w in ["aa", "bb", "cc", "dd", "bcd", "(ad)^4", "(ab)^16"] {
        ensure(el(&g, w).is_trivial().unwrap(), || format!("{w} is not trivial"))?;
    }
    ensure(!el(&g, "(ab)^8").is_trivial().unwrap(), || "(ab)^8 is trivial".into())?;
    for (w, o) in [("ab", 16u64), ("ad", 4)] {
        let x = el(&g, w);
        ensure(x.order(1 << 10).unwrap() == Order::Finite(o as u128), || format!("order({w}) is wrong"))?;
        let orders = level_image_orders(&x);
        // orders on deeper levels are multiples of those above and settle at o
        ensure(orders.windows(2).all(|p| p[1] % p[0] == 0), || format!("{w}: {orders:?} do not nest"))?;
        ensure(*orders.last().unwrap() == o && orders.contains(&o), || format!("{w}: {orders:?} do not reach {o}"))?;
    }
    Ok(())
}

fn level_quotients() -> Check {
    let g = grigorchuk();
    for (n, o) in [(1usize, 2u32), (2, 8), (3, 128)] {
        let chain = quotient_order(&g, n);
        let degree = g.shape().level_size(n) as usize;
        let bfs = bfs_enumerate(n, degree, &generator_images(&g, n), 1 << 12).unwrap().len();
        ensure(chain == o.into() && bfs == o as usize, || format!("level {n}: chain {chain}, bfs {bfs}, expected {o}"))?;
    }
    Ok(())
}

fn ggs_torsion() -> Check {
    let vectors: [(u64, &[i64]); 10] = [
        (3, &[1, 2]),
        (3, &[1, 1]),
        (3, &[1, 0]),
        (3, &[2, 1]),
        (5, &[1, 1, 1, 2]),
        (5, &[1, 2, 3, 4]),
        (5, &[1, 0, 0, 0]),
        (5, &[1, -1, 2, -2]),
        (7, &[1, 2, 3, 4, 5, 6]),
        (7, &[1, 1, 1, 1, 1, 1]),
    ];
    for (p, e) in vectors {
        let rule = e.iter().sum::<i64>().rem_euclid(p as i64) == 0;
        let got = ggs_is_torsion(&GgsVector::new(p, e).unwrap());
        ensure(got == rule, || format!("({p}, {e:?}): got {got}, rule says {rule}"))?;
    }
    ensure(ggs_is_torsion(&GgsVector::new(3, &[1, 2]).unwrap()), || "(3,(1,2)) is not torsion".into())?;
    ensure(!ggs_is_torsion(&GgsVector::new(3, &[1, 1]).unwrap()), || "(3,(1,1)) is torsion".into())
}

fn large_order() -> Check {
    let g = grigorchuk();
    let cert = build_large_order(&WitnessFinder::new(&g, 6), &vx("1"), 32, true).map_err(|e| e.to_string())?;
    cert.verify().map_err(|e| e.to_string())?;
    let n = cert.steps.len() as u32;
    let product: u128 = cert.steps.iter().map(|s| s.orbit_length).product();
    ensure(cert.orbit_length >= 32 && cert.orbit_length == product, || "orbit length".into())?;
    ensure(cert.steps.iter().all(|s| s.orbit_length == 2), || "some step is not of order 2".into())?;
    ensure(cert.element.order(1 << 12).unwrap() == Order::Finite(1 << n), || format!("order is not 2^{n}"))?;
    for s in &cert.steps {
        ensure(in_rist(&s.witness.element, &s.vertex).unwrap(), || format!("witness not in rist({})", s.vertex))?;
    }
    Ok(())
}

fn hv_suite() -> Check {
    let f = families();
    for (family, depth) in [(&f.binary, 6usize), (&f.ternary, 4)] {
        let p = family.p;
        ensure(family.generators.len() == 4, || "expected four generators".into())?;
        for g in &family.generators {
            let o = g.element.order(p * p * p).unwrap();
            ensure(o == Order::Finite(p * p), || format!("s{} has order {o:?}", g.index))?;
        }
        let gap = family.closure_gap(depth).map_err(|e| e.to_string())?;
        ensure(gap.len() == depth, || "closure gap is short".into())?;
        for level in &gap {
            ensure(level.algebraic && level.chain_member && level.witness_in_level_stab, || format!("{level:?}"))?;
        }
        let refutation = family.refute_a(4).unwrap();
        ensure(refutation.holds() && refutation.constraints.len() == 2, || format!("{refutation:?}"))?;
        ensure(refutation.sweep.hits == 0 && refutation.sweep.max_length == 4, || "sweep".into())?;
    }
    Ok(())
}

fn abelian_embedding() -> Check {
    let f = families();
    for family in [&f.binary, &f.ternary] {
        let check = family.abelian_embedding_check(100, 8, 2024).unwrap();
        ensure(check.samples == 100 && check.holds(), || format!("{check:?}"))?;
    }
    Ok(())
}

fn distinctness() -> Check {
    let g = grigorchuk();
    let finder = WitnessFinder::new(&g, 6);
    let a = el(&g, "a");
    let pairs = [
        ("1100", "1010"),
        ("1000", "0100"),
        ("1111", "1110"),
        ("0001", "0010"),
        ("1010", "0101"),
        ("1111", "0000"),
        ("1000", "0000"),
        ("0110", "0111"),
        ("1101", "1011"),
        ("0011", "1100"),
    ];
    for (x, y) in pairs {
        let fx = build_hv(&finder, 2, &a, &mask(x)).unwrap();
        let fy = build_hv(&finder, 2, &a, &mask(y)).unwrap();
        let depth = separation_depth(&[&fx, &fy]);
        let sep = family_distinct(&fx, &fy, depth).unwrap();
        ensure(matches!(sep, Separation::Distinct { .. }), || format!("{x} vs {y} not separated at {depth}"))?;
        for same in [&fx, &fy] {
            let sep = family_distinct(same, same, depth).unwrap();
            ensure(matches!(sep, Separation::NotSeparated { .. }), || "identical masks separated".into())?;
        }
    }
    Ok(())
}

fn kernel_arithmetic() -> Check {
    let n: Vec<u32> = (1..=12).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (p, mode) in [(2u64, KernelMode::Torsion), (3, KernelMode::Torsion), (2, KernelMode::TorsionFree)] {
        let spec = PruferKernelSpec::full(p, n.clone(), mode).unwrap();
        let gens = spec.generators();
        ensure(gens.len() == 11, || "expected 11 generators".into())?;
        for (i, k) in gens.iter().enumerate() {
            ensure(spec.member(k).unwrap(), || format!("k{} is not a member", i + 1))?;
            let expected = (mode == KernelMode::Torsion).then(|| (p as u128).pow(n[i]));
            ensure(spec.order(k).unwrap() == expected, || format!("k{} has the wrong order", i + 1))?;
        }
        let random_member = |rng: &mut ChaCha8Rng| {
            let mut x = vec![0i128; n.len()];
            for k in &gens {
                let c: i128 = rng.gen_range(-40..40);
                x = spec.add(&x, &k.iter().map(|v| v * c).collect::<Vec<_>>()).unwrap();
            }
            x
        };
        for _ in 0..500 {
            let (x, y) = (random_member(&mut rng), random_member(&mut rng));
            ensure(spec.member(&x).unwrap() && spec.member(&spec.add(&x, &y).unwrap()).unwrap(), || "sum".into())?;
            ensure(spec.member(&spec.negate(&x).unwrap()).unwrap(), || "negation".into())?;
        }
        // e_i has height i, so n_12 = 12 covers e_1 and e_2 for every m <= 10
        let unit = |i: usize| (0..n.len()).map(|j| i128::from(j == i)).collect::<Vec<_>>();
        for m in 0..=10 {
            for t in [unit(0), unit(1), random_member(&mut rng)] {
                let w = spec.divisibility_witness(&t, m).map_err(|e| e.to_string())?;
                ensure(spec.verify_divisibility(&t, m, &w).unwrap(), || format!("witness for {t:?} at m={m}"))?;
            }
        }
        ensure(spec.divisibility_witness(&unit(2), 10).is_err(), || "e3 at m=10 needs n >= 13".into())?;
    }
    let masks: Vec<Vec<bool>> = (0u32..16).map(|b| (0..4).map(|i| b >> i & 1 == 1).collect()).collect();
    let exps = vec![1, 2, 3, 4];
    for x in &masks {
        for y in &masks {
            let ix = PruferKernelSpec::new(2, exps.clone(), KernelMode::Torsion, x.clone()).unwrap().iso_invariant();
            let iy = PruferKernelSpec::new(2, exps.clone(), KernelMode::Torsion, y.clone()).unwrap().iso_invariant();
            ensure((ix == iy) == (x == y), || format!("invariants of {x:?} and {y:?}"))?;
            let fx = PruferKernelSpec::new(2, exps.clone(), KernelMode::TorsionFree, x.clone()).unwrap();
            ensure(fx.iso_invariant() == IsoInvariant::FreeAbelian, || "torsion-free invariant".into())?;
        }
    }
    Ok(())
}

fn erf_truth_table() -> Check {
    let comp = |p, exponents| PrimeComponent { p, exponents };
    let infinite_primes = |tail| AbelianDescriptor {
        z_rank: Rank::Finite(0),
        torsion: vec![],
        primes_infinite: true,
        tail,
    };
    let infinite_rank = AbelianDescriptor { z_rank: Rank::Infinite, ..AbelianDescriptor::finite(vec![]) };
    let corollary = [
        (infinite_rank, Verdict::NotErf),
        (AbelianDescriptor::finite(vec![comp(2, Exponents::Explicit(vec![1]))]), Verdict::Erf),
        (AbelianDescriptor::finite(vec![comp(2, Exponents::Unbounded)]), Verdict::NotErf),
        (infinite_primes(Some(Exponents::Explicit(vec![1]))), Verdict::Undetermined),
    ];
    for (d, v) in &corollary {
        let got = classify_corollary(d).unwrap();
        ensure(got == *v, || format!("{d:?}: {got:?}, expected {v:?}"))?;
    }
    // distinct increasing primes with each p-component of bounded exponent
    let got = classify_full(&infinite_primes(Some(Exponents::BoundedBy(1)))).unwrap();
    ensure(got == Verdict::Erf, || format!("increasing primes: {got:?}"))?;
    let got = classify_full(&AbelianDescriptor::finite(vec![comp(3, Exponents::Unbounded)])).unwrap();
    ensure(got == Verdict::NotErf, || format!("unbounded single prime: {got:?}"))
}

fn random_word(rng: &mut ChaCha8Rng, gens: &[Element], max_len: usize) -> Element {
    let len = rng.gen_range(0..=max_len);
    let mut out = Element::identity(gens[0].group());
    for _ in 0..len {
        let g = &gens[rng.gen_range(0..gens.len())];
        out = out.multiply(&if rng.gen_bool(0.5) { g.invert() } else { g.clone() });
    }
    out
}

fn random_vertex(rng: &mut ChaCha8Rng, m: u32, max_level: usize) -> Vertex {
    let len = rng.gen_range(1..=max_level);
    Vertex::new((0..len).map(|_| rng.gen_range(1..=m)).collect())
}

fn property_suites() -> Check {
    const CASES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for group in [grigorchuk(), gupta_sidki()] {
        let gens = generator_elements(&group);
        let m = group.shape().children_count(0) as u32;
        for _ in 0..CASES {
            let (g, h) = (random_word(&mut rng, &gens, 10), random_word(&mut rng, &gens, 10));
            let v = random_vertex(&mut rng, m, 5);
            ensure(h.act(&g.act(&v)) == g.multiply(&h).act(&v), || format!("action of {g}, {h} at {v}"))?;
            let lhs = g.multiply(&h).section(&v);
            let rhs = g.section(&v).multiply(&h.section(&g.act(&v)));
            ensure(lhs.equal(&rhs).unwrap(), || format!("section rule for {g}, {h} at {v}"))?;
        }
    }
    let g = grigorchuk();
    let gens = generator_elements(&g);
    for _ in 0..CASES {
        let x = random_word(&mut rng, &gens, 12);
        let images = (1..=8).all(|n| x.fixes_level(n));
        ensure(x.is_trivial().unwrap() == images, || format!("triviality of {x}"))?;
    }
    // witnesses at incomparable vertices: ball hits at 1, their conjugates at
    // 2, and branch witnesses deeper down
    let hits = rist_search(&g, &vx("1"), 6, Predicate::Nontrivial, SearchOptions::default()).unwrap();
    let a = el(&g, "a");
    let finder = WitnessFinder::new(&g, 4);
    let mut pool: Vec<(Vertex, Element)> = Vec::new();
    for h in &hits {
        pool.push((h.vertex.clone(), h.element.clone()));
        let moved = conjugate_witness(h, &a);
        pool.push((moved.vertex, moved.element));
    }
    for v in ["11", "12", "21", "22", "112", "212"] {
        let w = finder.find(&vx(v), None).unwrap();
        pool.push((w.vertex, w.element));
    }
    let mut done = 0;
    while done < CASES {
        let (u, x) = &pool[rng.gen_range(0..pool.len())];
        let (v, y) = &pool[rng.gen_range(0..pool.len())];
        if !u.is_incomparable(v) {
            continue;
        }
        // products of witnesses at one vertex stay in its rigid stabilizer
        let (u2, x2) = &pool[rng.gen_range(0..pool.len())];
        let x = if u2 == u { x.multiply(x2) } else { x.clone() };
        ensure(x.commutator(y).is_trivial().unwrap(), || format!("[{x}, {y}] at {u}, {v}"))?;
        done += 1;
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("Grigorchuk relations and orders", grigorchuk_relations),
        ("level quotient orders", level_quotients),
        ("GGS torsion criterion", ggs_torsion),
        ("large orbits in rist(1), torsion mode", large_order),
        ("H_V generators, closure gap and a outside H_V", hv_suite),
        ("abelian embedding of the level stabilizer", abelian_embedding),
        ("family distinctness", distinctness),
        ("Prüfer kernel arithmetic", kernel_arithmetic),
        ("ERF truth table", erf_truth_table),
        ("cross-module properties", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS {:>2} {name} ({secs:.2}s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.2}s): {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
