//! Command-line front end.
//!
//! Exit status: 0 success, 1 usage or malformed input, 2 computation limit
//! (caps, radii, search budgets), 3 failed verification.

mod groups;
mod reports;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use branchforge::constructions::erf::AbelianDescriptor;
use branchforge::constructions::prufer::KernelMode;
use branchforge::quotient::{bfs_enumerate, generator_images, quotient_order};
use branchforge::stabilizers::{orbit_of_vertex, rist_search, Predicate, SearchOptions};
use branchforge::syntax::serialize_spec;
use branchforge::{Element, Error, Order, Vertex};
use clap::{Parser, Subcommand, ValueEnum};

use reports::Inputs;

#[derive(Parser)]
#[command(name = "branchforge", version, about = "Exact computation in groups acting on rooted trees")]
struct Cli {
    /// Worker threads for ball searches.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct GroupArg {
    /// `grigorchuk`, `ggs:P:e1,...`, `multi-ggs:P:v1/v2`, `example25:p1,...`,
    /// or a group-spec file. Caps come from BRANCHFORGE_CAPS
    /// (`closure=N,word=N,ball=N,rewriting=on|off`).
    #[arg(long)]
    group: String,
}

#[derive(clap::Args)]
struct ReportArg {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Torsion,
    TorsionFree,
}

#[derive(Subcommand)]
enum Command {
    /// Print a presentation as a group-spec file.
    Group {
        #[command(flatten)]
        group: GroupArg,
    },
    /// Decide whether a word is trivial.
    Wp {
        #[command(flatten)]
        group: GroupArg,
        #[arg(long)]
        word: String,
    },
    /// Order of a word.
    Order {
        #[command(flatten)]
        group: GroupArg,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 1 << 20)]
        cap: u128,
    },
    /// Portrait of a word in DOT format.
    Portrait {
        #[command(flatten)]
        group: GroupArg,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Orbit of a vertex under a word.
    Orbit {
        #[command(flatten)]
        group: GroupArg,
        #[arg(long)]
        word: String,
        #[arg(long)]
        vertex: String,
    },
    /// Order of the action on a level.
    QuotientOrder {
        #[command(flatten)]
        group: GroupArg,
        #[arg(long)]
        level: usize,
        /// Also count the quotient by breadth-first enumeration, up to this
        /// many elements.
        #[arg(long)]
        bfs: Option<usize>,
    },
    /// Ball search for rigid stabilizer witnesses.
    RistSearch {
        #[command(flatten)]
        group: GroupArg,
        #[arg(long)]
        vertex: String,
        #[arg(long)]
        radius: usize,
        /// `nontrivial`, `order=K` or `divisible=K`.
        #[arg(long, default_value = "nontrivial")]
        predicate: String,
        #[arg(long, default_value_t = 8)]
        max_hits: usize,
    },
    /// Element with a long orbit inside a rigid stabilizer.
    Lemma23 {
        #[command(flatten)]
        group: GroupArg,
        #[arg(long)]
        vertex: String,
        #[arg(long)]
        target: u64,
        /// Use witnesses of prime order, giving order exactly the orbit length.
        #[arg(long)]
        torsion: bool,
        #[arg(long, default_value_t = 6)]
        radius: usize,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Closure-gap certificate for `H_V = <a h_v>`.
    Hv {
        #[command(flatten)]
        group: GroupArg,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value = "a")]
        a: String,
        #[arg(long)]
        mask: String,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 6)]
        radius: usize,
        /// Words sampled by the abelian embedding check.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Length of the exhaustive sweep for `a`.
        #[arg(long, default_value_t = 4)]
        sweep: usize,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Arithmetic of the Prüfer kernel.
    Kv {
        #[arg(long)]
        p: u64,
        /// Comma-separated, strictly increasing.
        #[arg(long)]
        exponents: String,
        #[arg(long, value_enum, default_value_t = Mode::Torsion)]
        mode: Mode,
        /// Defaults to all ones.
        #[arg(long)]
        mask: Option<String>,
        /// Tuple for the divisibility witnesses; defaults to the first unit vector.
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 3)]
        max_m: u32,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Classify a direct sum of cyclic groups given as a JSON descriptor.
    ErfClassify {
        /// A JSON descriptor, or a file containing one.
        #[arg(long)]
        descriptor: String,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Separate two `H_V` families by finite quotients.
    Distinct {
        #[command(flatten)]
        group: GroupArg,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value = "a")]
        a: String,
        #[arg(long)]
        mask1: String,
        #[arg(long)]
        mask2: String,
        /// Defaults to a level on which every generator acts.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = 6)]
        radius: usize,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Rebuild a report from its inputs and compare.
    Verify {
        #[arg(long)]
        report: PathBuf,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Compute(anyhow::Error),
    Verify(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(core) if core.is_computation_limit() => Failure::Compute(e),
            Some(Error::VerificationFailed(msg)) => Failure::Verify(msg.clone()),
            _ => Failure::Usage(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::from(anyhow::Error::new(e))
    }
}

fn parse_predicate(s: &str) -> Result<Predicate> {
    let num = |v: &str| v.parse::<u128>().context("predicate argument is not an integer");
    Ok(match s.split_once('=') {
        None if s == "nontrivial" => Predicate::Nontrivial,
        Some(("order", k)) => Predicate::OrderExactly(num(k)?),
        Some(("divisible", k)) => Predicate::OrderDivisibleBy(num(k)?),
        _ => anyhow::bail!("unknown predicate `{s}`"),
    })
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| anyhow::anyhow!("`{x}` is not an integer")))
        .collect()
}

fn emit(report: &serde_json::Value, path: &Option<PathBuf>) -> Result<(), Failure> {
    let text = reports::render(report);
    match path {
        Some(p) => std::fs::write(p, &text)
            .with_context(|| format!("cannot write {}", p.display()))
            .map_err(Failure::Usage)?,
        None => print!("{text}"),
    }
    if reports::passed(report) {
        Ok(())
    } else {
        Err(Failure::Verify("a certificate step failed; see the report".into()))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let threads = cli.threads.max(1);
    let report_of = |inputs: Inputs, path: &Option<PathBuf>| -> Result<(), Failure> {
        let report = reports::build(&inputs, threads)?;
        emit(&report, path)
    };
    match cli.command {
        Command::Group { group } => {
            let g = groups::resolve(&group.group)?;
            print!("{}", serialize_spec(&g));
        }
        Command::Wp { group, word } => {
            let g = groups::resolve(&group.group)?;
            let w = Element::parse(&g, &word)?;
            println!("{}", if w.is_trivial()? { "trivial" } else { "nontrivial" });
        }
        Command::Order { group, word, cap } => {
            let g = groups::resolve(&group.group)?;
            match Element::parse(&g, &word)?.order(cap)? {
                Order::Finite(k) => println!("{k}"),
                Order::ExceedsCap => {
                    return Err(Failure::Compute(anyhow::anyhow!("order exceeds the cap {cap}")));
                }
            }
        }
        Command::Portrait { group, word, depth } => {
            let g = groups::resolve(&group.group)?;
            print!("{}", Element::parse(&g, &word)?.portrait(depth).to_dot());
        }
        Command::Orbit { group, word, vertex } => {
            let g = groups::resolve(&group.group)?;
            let v = Vertex::parse(&vertex)?;
            g.shape().check(&v)?;
            let orbit = orbit_of_vertex(&Element::parse(&g, &word)?, &v);
            let names: Vec<String> = orbit.iter().map(Vertex::to_string).collect();
            println!("{}", names.join(" "));
        }
        Command::QuotientOrder { group, level, bfs } => {
            let g = groups::resolve(&group.group)?;
            let order = quotient_order(&g, level);
            println!("{order}");
            if let Some(cap) = bfs {
                let degree = g.shape().level_size(level) as usize;
                let count = bfs_enumerate(level, degree, &generator_images(&g, level), cap)?.len();
                println!("bfs {count}");
                if order != count.into() {
                    return Err(Failure::Verify(format!("chain order {order} differs from bfs count {count}")));
                }
            }
        }
        Command::RistSearch { group, vertex, radius, predicate, max_hits } => {
            let g = groups::resolve(&group.group)?;
            let v = Vertex::parse(&vertex)?;
            let options = SearchOptions { max_hits, threads };
            let hits = rist_search(&g, &v, radius, parse_predicate(&predicate)?, options)?;
            if hits.is_empty() {
                return Err(Failure::Compute(anyhow::anyhow!(Error::SearchFailed { vertex: v, radius })));
            }
            for h in &hits {
                h.verify()?;
                match h.order {
                    Some(o) => println!("{} order {o}", h.element),
                    None => println!("{}", h.element),
                }
            }
        }
        Command::Lemma23 { group, vertex, target, torsion, radius, report } => {
            report_of(Inputs::Lemma23 { group: group.group, vertex, target, torsion, radius }, &report.report)?;
        }
        Command::Hv { group, p, a, mask, depth, radius, samples, seed, sweep, report } => {
            let inputs = Inputs::HvClosureGap { group: group.group, p, a, mask, depth, radius, samples, seed, sweep };
            report_of(inputs, &report.report)?;
        }
        Command::Kv { p, exponents, mode, mask, target, max_m, report } => {
            let exponents: Vec<u32> = parse_list(&exponents)?;
            let mask = mask.unwrap_or_else(|| "1".repeat(exponents.len()));
            let target = match target {
                Some(t) => parse_list(&t)?,
                None => {
                    let mut e = vec![0i64; exponents.len()];
                    if let Some(i) = mask.find('1') {
                        e[i] = 1;
                    }
                    e
                }
            };
            let mode = match mode {
                Mode::Torsion => KernelMode::Torsion,
                Mode::TorsionFree => KernelMode::TorsionFree,
            };
            report_of(Inputs::Kv { p, exponents, mode, mask, target, max_m }, &report.report)?;
        }
        Command::ErfClassify { descriptor, report } => {
            let text = if descriptor.trim_start().starts_with('{') {
                descriptor
            } else {
                std::fs::read_to_string(&descriptor)
                    .with_context(|| format!("cannot read {descriptor}"))
                    .map_err(Failure::Usage)?
            };
            let descriptor: AbelianDescriptor =
                serde_json::from_str(&text).context("malformed descriptor").map_err(Failure::Usage)?;
            report_of(Inputs::Erf { descriptor }, &report.report)?;
        }
        Command::Distinct { group, p, a, mask1, mask2, depth, radius, report } => {
            let inputs = Inputs::Distinctness { group: group.group, p, a, masks: [mask1, mask2], depth, radius };
            report_of(inputs, &report.report)?;
        }
        Command::Verify { report } => {
            let text = std::fs::read_to_string(&report)
                .with_context(|| format!("cannot read {}", report.display()))
                .map_err(Failure::Usage)?;
            let (ok, _) = reports::verify(&text, threads)?;
            if !ok {
                return Err(Failure::Verify("the report does not replay".into()));
            }
            println!("verified");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("computation limit: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(3)
        }
    }
}
