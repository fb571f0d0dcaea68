//! Certificate reports.
//!
//! A report echoes its inputs, so `verify` can rebuild it and compare. Keys
//! are sorted (the default `serde_json` map) and output ends in a newline.

use anyhow::{bail, Result};
use branchforge::constructions::erf::{classify_corollary, classify_full, AbelianDescriptor, Verdict};
use branchforge::constructions::hv::{build_hv, family_distinct, separation_depth, HvFamily, Separation};
use branchforge::constructions::large_order::build_large_order;
use branchforge::constructions::prufer::{KernelMode, PruferKernelSpec};
use branchforge::constructions::WitnessFinder;
use branchforge::stabilizers::{in_rist, orbit_of_vertex, Membership, RistWitness};
use branchforge::{Element, Error, Order, Vertex};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::groups;

pub const CONVENTION: &str = "right-action";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Inputs {
    Lemma23 { group: String, vertex: String, target: u64, torsion: bool, radius: usize },
    HvClosureGap {
        group: String,
        p: u64,
        a: String,
        mask: String,
        depth: usize,
        radius: usize,
        samples: usize,
        seed: u64,
        sweep: usize,
    },
    Kv { p: u64, exponents: Vec<u32>, mode: KernelMode, mask: String, target: Vec<i64>, max_m: u32 },
    Erf { descriptor: AbelianDescriptor },
    Distinctness { group: String, p: u64, a: String, masks: [String; 2], depth: Option<usize>, radius: usize },
}

impl Inputs {
    fn kind(&self) -> &'static str {
        match self {
            Inputs::Lemma23 { .. } => "lemma23",
            Inputs::HvClosureGap { .. } => "hv-closure-gap",
            Inputs::Kv { .. } => "kv",
            Inputs::Erf { .. } => "erf",
            Inputs::Distinctness { .. } => "distinctness",
        }
    }
}

struct Steps(Vec<Value>);

impl Steps {
    fn push(&mut self, name: impl Into<String>, ok: bool, detail: Value) {
        self.0.push(json!({ "name": name.into(), "ok": ok, "detail": detail }));
    }

    fn all_ok(&self) -> bool {
        self.0.iter().all(|s| s["ok"] == Value::Bool(true))
    }
}

pub fn parse_mask(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => bail!("mask `{s}` is not a binary string"),
        })
        .collect()
}

fn membership(w: &RistWitness) -> &'static str {
    match w.membership {
        Membership::Word => "word",
        Membership::Branch { .. } => "branch",
        Membership::Conjugate { .. } => "conjugate",
    }
}

fn witness_json(w: &RistWitness) -> Value {
    json!({
        "vertex": w.vertex.to_string(),
        "element": w.element.to_string(),
        "order": w.order,
        "membership": membership(w),
    })
}

pub fn build(inputs: &Inputs, threads: usize) -> Result<Value> {
    let mut steps = Steps(Vec::new());
    let mut extra = serde_json::Map::new();
    let mut seed = json!({ "convention": CONVENTION });
    match inputs {
        Inputs::Lemma23 { group, vertex, target, torsion, radius } => {
            let g = groups::resolve(group)?;
            let finder = WitnessFinder::new(&g, *radius).with_threads(threads);
            let cert = build_large_order(&finder, &Vertex::parse(vertex)?, *target as u128, *torsion)?;
            for (i, s) in cert.steps.iter().enumerate() {
                let rigid = s.witness.verify().is_ok() && in_rist(&s.witness.element, &s.vertex)?;
                let orbit = orbit_of_vertex(&s.witness.element, &s.moved).len() as u128;
                steps.push(
                    format!("step {}", i + 1),
                    rigid && orbit == s.orbit_length,
                    json!({
                        "subtree": s.vertex.to_string(),
                        "witness": witness_json(&s.witness),
                        "moved": s.moved.to_string(),
                        "orbit_length": s.orbit_length,
                    }),
                );
            }
            let orbit = orbit_of_vertex(&cert.element, &cert.witness_point).len() as u128;
            steps.push(
                "orbit",
                orbit == cert.orbit_length && orbit >= *target as u128,
                json!({ "witness_point": cert.witness_point.to_string(), "orbit_length": orbit }),
            );
            if let Some(o) = cert.order {
                let got = cert.element.order(o)?;
                steps.push("order", got == Order::Finite(o), json!({ "order": o }));
            }
            extra.insert("element".into(), json!(cert.element.to_string()));
            seed["radius"] = json!(radius);
        }
        Inputs::HvClosureGap { group, p, a, mask, depth, radius, samples, seed: rng, sweep } => {
            let g = groups::resolve(group)?;
            let finder = WitnessFinder::new(&g, *radius).with_threads(threads);
            let a_el = Element::parse(&g, a)?;
            let family = build_hv(&finder, *p as u128, &a_el, &parse_mask(mask)?)?;
            push_family(&mut steps, &family)?;
            for level in family.closure_gap(*depth)? {
                steps.push(format!("closure gap at level {}", level.level), level.holds(), serde_json::to_value(&level)?);
            }
            let refutation = family.refute_a(*sweep)?;
            steps.push("a is not in H", refutation.holds(), serde_json::to_value(&refutation)?);
            let embedding = family.abelian_embedding_check(*samples, 8, *rng)?;
            steps.push("abelian embedding", embedding.holds(), serde_json::to_value(embedding)?);
            extra.insert("base".into(), json!(family.base.to_string()));
            extra.insert("base_level".into(), json!(family.level));
            seed["mask"] = json!(mask);
            seed["M"] = json!(mask.len());
            seed["radius"] = json!(radius);
            seed["seed"] = json!(rng);
        }
        Inputs::Kv { p, exponents, mode, mask, target, max_m } => {
            let spec = PruferKernelSpec::new(*p, exponents.clone(), *mode, parse_mask(mask)?)?;
            for (i, k) in spec.generators().iter().enumerate() {
                let index = (0..spec.len()).filter(|&j| spec.mask[j]).nth(i).unwrap();
                let expected = match mode {
                    KernelMode::Torsion => Some((*p as u128).pow(exponents[index])),
                    KernelMode::TorsionFree => None,
                };
                let order = spec.order(k)?;
                steps.push(
                    format!("generator k{}", index + 1),
                    spec.member(k)? && order == expected,
                    json!({ "tuple": k, "order": order }),
                );
            }
            let target: Vec<i128> = target.iter().map(|&t| t as i128).collect();
            for m in 0..=*max_m {
                let w = spec.divisibility_witness(&target, m)?;
                let ok = spec.verify_divisibility(&target, m, &w)?;
                steps.push(format!("divisibility m={m}"), ok, serde_json::to_value(&w)?);
            }
            extra.insert("iso_invariant".into(), serde_json::to_value(spec.iso_invariant())?);
            seed["mask"] = json!(mask);
            seed["M"] = json!(mask.len());
        }
        Inputs::Erf { descriptor } => {
            let cor = classify_corollary(descriptor)?;
            let full = match classify_full(descriptor) {
                Ok(v) => Some(v),
                Err(Error::IncompleteDescriptor) => None,
                Err(e) => return Err(e.into()),
            };
            let consistent = match (cor, full) {
                (Verdict::Undetermined, _) | (_, None) => true,
                (c, Some(f)) => c == f,
            };
            steps.push("corollary", true, json!(cor));
            steps.push("full criterion", consistent, json!(full));
            extra.insert("classification".into(), json!(full.unwrap_or(cor)));
        }
        Inputs::Distinctness { group, p, a, masks, depth, radius } => {
            let g = groups::resolve(group)?;
            let finder = WitnessFinder::new(&g, *radius).with_threads(threads);
            let a_el = Element::parse(&g, a)?;
            let first = build_hv(&finder, *p as u128, &a_el, &parse_mask(&masks[0])?)?;
            let second = build_hv(&finder, *p as u128, &a_el, &parse_mask(&masks[1])?)?;
            steps.push("first family", first.verify().is_ok(), json!(masks[0]));
            steps.push("second family", second.verify().is_ok(), json!(masks[1]));
            let depth = depth.unwrap_or_else(|| separation_depth(&[&first, &second]));
            let sep = family_distinct(&first, &second, depth)?;
            // equal masks give equal subgroups, so separating them is a bug
            let ok = masks[0] != masks[1] || matches!(sep, Separation::NotSeparated { .. });
            steps.push("separation", ok, serde_json::to_value(&sep)?);
            extra.insert(
                "separated".into(),
                json!(matches!(sep, Separation::Distinct { .. })),
            );
            seed["masks"] = json!(masks);
            seed["M"] = json!(masks[0].len());
            seed["radius"] = json!(radius);
        }
    }
    let verdict = if steps.all_ok() { "pass" } else { "fail" };
    let mut report = serde_json::Map::new();
    report.insert("kind".into(), json!(inputs.kind()));
    report.insert("inputs".into(), serde_json::to_value(inputs)?);
    report.insert("steps".into(), Value::Array(steps.0));
    report.insert("verdict".into(), json!(verdict));
    report.insert("reproducibility".into(), seed);
    report.extend(extra);
    Ok(Value::Object(report))
}

fn push_family(steps: &mut Steps, family: &HvFamily) -> Result<()> {
    let p = family.p;
    for g in &family.generators {
        let order = g.element.order(p * p)?;
        steps.push(
            format!("generator s{}", g.index),
            g.witness.verify().is_ok() && order == Order::Finite(p * p),
            json!({
                "h": witness_json(&g.witness),
                "s": g.element.to_string(),
                "order": order.finite(),
            }),
        );
    }
    Ok(())
}

pub fn render(report: &Value) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

pub fn passed(report: &Value) -> bool {
    report["verdict"] == json!("pass")
}

/// Rebuilds a report from its echoed inputs; the rebuilt report must match
/// and pass.
pub fn verify(text: &str, threads: usize) -> Result<(bool, Value)> {
    let stored: Value = serde_json::from_str(text)?;
    let inputs: Inputs = serde_json::from_value(stored["inputs"].clone())?;
    if stored["kind"] != json!(inputs.kind()) {
        bail!("report kind does not match its inputs");
    }
    let rebuilt = build(&inputs, threads)?;
    Ok((rebuilt == stored && passed(&rebuilt), rebuilt))
}
