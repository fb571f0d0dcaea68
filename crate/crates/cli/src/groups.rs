//! Resolution of `--group` arguments.
//!
//! Built-ins: `grigorchuk`, `ggs:P:e1,...,e_{P-1}`, `multi-ggs:P:v1/v2/...`
//! with comma-separated vectors, and `example25:p1,p2,...`. Anything else is
//! read as a group-spec file.

use std::sync::Arc;

use anyhow::{bail, Context, Result};
use branchforge::catalog::{example25, ggs, grigorchuk, multi_ggs, GgsVector};
use branchforge::syntax::load_spec;
use branchforge::{Caps, GroupPresentation};

fn ints<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| anyhow::anyhow!("`{x}` is not an integer")))
        .collect()
}

fn vector(p: u64, entries: &str) -> Result<GgsVector> {
    Ok(GgsVector::new(p, &ints::<i64>(entries)?)?)
}

pub fn resolve(spec: &str) -> Result<Arc<GroupPresentation>> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let group = match kind {
        "grigorchuk" if rest.is_empty() => grigorchuk(),
        "ggs" | "multi-ggs" => {
            let (p, vectors) = rest.split_once(':').context("expected ggs:P:e1,e2,...")?;
            let p: u64 = p.trim().parse().context("the prime is not an integer")?;
            let vs = vectors.split('/').map(|v| vector(p, v)).collect::<Result<Vec<_>>>()?;
            if kind == "ggs" {
                if vs.len() != 1 {
                    bail!("ggs takes one defining vector; use multi-ggs");
                }
                ggs(&vs[0])?
            } else {
                multi_ggs(&vs)?
            }
        }
        "example25" => example25(&ints::<u64>(rest)?)?,
        _ => {
            let text = std::fs::read_to_string(spec)
                .with_context(|| format!("`{spec}` is neither a built-in group nor a readable file"))?;
            load_spec(&text)?
        }
    };
    if let Ok(caps) = std::env::var("BRANCHFORGE_CAPS") {
        group.set_caps(Caps::default().parse_overrides(&caps)?);
    }
    Ok(group)
}
