//! Text formats: words and group-spec files.
//!
//! Words are juxtapositions of generator names (a letter followed by
//! optional digits), with `'` or `^-1` for inverses and `^k` for powers.
//! Parentheses group, `e` is the identity, `plant(v; w)` plants `w` at the
//! vertex `v`, and `perm[2,3,1]` is a rooted permutation given by 1-based
//! images.
//!
//! A group-spec file is line oriented; `#` starts a comment:
//!
//! ```text
//! name grigorchuk
//! tree repeat 2
//! gen a = perm [2,1] sections [e, e]
//! gen b = perm [1,2] sections [a, c]
//! gen x @1 = perm [2,1,3] sections [e, e, e]
//! planted t = vertex 12 cycle 2
//! ```
//!
//! `tree 2 3 repeat 5` is the arity sequence 2, 3, 5, 5, ...; `@k` anchors a
//! generator at level `k` (it permutes the children of level-`k` vertices).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::perm::Perm;
use crate::presentation::{Generator, GeneratorKind, GroupPresentation};
use crate::tree::{TreeShape, Vertex};
use crate::word::{Atom, Word};

fn perr(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column, message: message.into() }
}

struct WordParser<'a, F: Fn(&str) -> Option<Word>> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col0: usize,
    resolve: &'a F,
}

impl<'a, F: Fn(&str) -> Option<Word>> WordParser<'a, F> {
    fn err(&self, msg: impl Into<String>) -> Error {
        perr(self.line, self.col0 + self.pos + 1, msg)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace() || c == '*' || c == '·') {
            self.pos += 1;
        }
    }

    fn starts_with(&self, s: &str) -> bool {
        let n = s.chars().count();
        self.chars.len() >= self.pos + n && self.chars[self.pos..self.pos + n].iter().copied().eq(s.chars())
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn integer(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek(), Some('-') | Some('+')) {
            self.pos += 1;
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| self.err("expected an integer"))
    }

    fn sequence(&mut self, closing: Option<char>) -> Result<Vec<Atom>> {
        let mut atoms = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None => {
                    if closing.is_some() {
                        return Err(self.err("unexpected end of word"));
                    }
                    return Ok(atoms);
                }
                Some(c) if Some(c) == closing => return Ok(atoms),
                Some(_) => {
                    let item = self.item()?;
                    atoms.extend(item);
                }
            }
        }
    }

    fn item(&mut self) -> Result<Vec<Atom>> {
        let mut base = self.primary()?;
        loop {
            match self.peek() {
                Some('\'') => {
                    self.pos += 1;
                    base = Word(base).inverse().0;
                }
                Some('^') => {
                    self.pos += 1;
                    let k = self.integer()?;
                    let unit = if k < 0 { Word(base).inverse().0 } else { base };
                    base = (0..k.unsigned_abs()).flat_map(|_| unit.iter().cloned()).collect();
                }
                _ => return Ok(base),
            }
        }
    }

    fn primary(&mut self) -> Result<Vec<Atom>> {
        self.skip_ws();
        if self.starts_with("plant(") {
            self.pos += "plant(".len();
            self.skip_ws();
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c != ';') {
                self.pos += 1;
            }
            let vtext: String = self.chars[start..self.pos].iter().collect();
            let vertex = Vertex::parse(&vtext).map_err(|_| self.err(format!("bad vertex `{}`", vtext.trim())))?;
            self.expect(';')?;
            let inner = self.sequence(Some(')'))?;
            self.expect(')')?;
            return Ok(vec![Atom::Planted { vertex, inner: Word(inner) }]);
        }
        if self.starts_with("perm[") {
            self.pos += "perm[".len();
            let mut imgs = Vec::new();
            loop {
                let k = self.integer()?;
                if k < 1 {
                    return Err(self.err("permutation images are 1-based"));
                }
                imgs.push(k as usize);
                self.skip_ws();
                match self.peek() {
                    Some(',') => self.pos += 1,
                    Some(']') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.err("expected `,` or `]`")),
                }
            }
            let p = Perm::from_one_based(&imgs).map_err(|e| self.err(e.to_string()))?;
            return Ok(vec![Atom::Rooted(p)]);
        }
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.sequence(Some(')'))?;
                self.expect(')')?;
                Ok(inner)
            }
            Some('1') => {
                self.pos += 1;
                Ok(Vec::new())
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                self.pos += 1;
                while matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                if name == "e" {
                    return Ok(Vec::new());
                }
                match (self.resolve)(&name) {
                    Some(w) => Ok(w.0),
                    None => Err(Error::UnknownGenerator(name)),
                }
            }
            Some(c) => Err(self.err(format!("unexpected character `{c}`"))),
            None => Err(self.err("unexpected end of word")),
        }
    }
}

/// Parses a word; `resolve` maps a generator name to its atom word.
pub fn parse_atoms<F: Fn(&str) -> Option<Word>>(text: &str, resolve: &F) -> Result<Vec<Atom>> {
    parse_atoms_at(text, resolve, 1, 0)
}

fn parse_atoms_at<F: Fn(&str) -> Option<Word>>(
    text: &str,
    resolve: &F,
    line: usize,
    col0: usize,
) -> Result<Vec<Atom>> {
    let mut p = WordParser { chars: text.chars().collect(), pos: 0, line, col0, resolve };
    p.sequence(None)
}

/// Parses a word over the generators of `group`.
pub fn parse_word(group: &GroupPresentation, text: &str) -> Result<Word> {
    let resolve = |name: &str| group.generator_id(name).map(|id| group.generator_word(id));
    let atoms = parse_atoms(text, &resolve)?;
    Ok(Word::from_atoms(atoms))
}

// ----- group-spec files ----------------------------------------------------

struct RawGen {
    name: String,
    line: usize,
    body: RawBody,
}

enum RawBody {
    Recursive {
        perm: Vec<usize>,
        sections: Vec<(String, usize)>,
        anchor: Option<usize>,
    },
    Planted { vertex: Vertex, cycle: usize },
}

fn split_list(s: &str, line: usize, col: usize) -> Result<Vec<(String, usize)>> {
    let s_trim = s.trim();
    if !s_trim.starts_with('[') || !s_trim.ends_with(']') {
        return Err(perr(line, col, "expected a bracketed list"));
    }
    let offset = col + s.find('[').unwrap() + 1;
    let inner = &s_trim[1..s_trim.len() - 1];
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in inner.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push((inner[start..i].trim().to_string(), offset + start));
                start = i + 1;
            }
            _ => {}
        }
    }
    if !inner.trim().is_empty() {
        out.push((inner[start..].trim().to_string(), offset + start));
    }
    Ok(out)
}

/// Parses a group-spec file.
pub fn load_spec(text: &str) -> Result<Arc<GroupPresentation>> {
    let mut name = String::from("custom");
    let mut shape: Option<TreeShape> = None;
    let mut raw: Vec<RawGen> = Vec::new();

    for (lineno, full) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = full.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let (kw, rest) = trimmed.split_once(char::is_whitespace).unwrap_or((trimmed, ""));
        let rest_col = indent + kw.len() + 2;
        match kw {
            "name" => name = rest.trim().to_string(),
            "tree" => {
                let mut prefix = Vec::new();
                let mut block = Vec::new();
                let mut in_block = false;
                for tok in rest.split_whitespace() {
                    if tok == "repeat" {
                        in_block = true;
                        continue;
                    }
                    let m: usize = tok
                        .parse()
                        .map_err(|_| perr(line, rest_col, format!("bad arity `{tok}`")))?;
                    if in_block {
                        block.push(m);
                    } else {
                        prefix.push(m);
                    }
                }
                if !in_block {
                    // a bare list repeats its last entry
                    let last = *prefix.last().ok_or_else(|| perr(line, rest_col, "empty tree"))?;
                    block.push(last);
                }
                shape = Some(
                    TreeShape::new(prefix, block).map_err(|e| perr(line, rest_col, e.to_string()))?,
                );
            }
            "gen" => {
                let (lhs, rhs) = rest
                    .split_once('=')
                    .ok_or_else(|| perr(line, rest_col, "expected `=`"))?;
                let mut lhs_parts = lhs.split_whitespace();
                let gname = lhs_parts.next().ok_or_else(|| perr(line, rest_col, "missing name"))?;
                let anchor = match lhs_parts.next() {
                    Some(a) => Some(
                        a.strip_prefix('@')
                            .and_then(|k| k.parse::<usize>().ok())
                            .ok_or_else(|| perr(line, rest_col, format!("bad anchor `{a}`")))?,
                    ),
                    None => None,
                };
                let rhs_col = rest_col + lhs.len() + 1;
                let rhs_t = rhs.trim();
                let rhs_t = rhs_t
                    .strip_prefix("perm")
                    .ok_or_else(|| perr(line, rhs_col, "expected `perm [...]`"))?;
                let (perm_txt, secs_txt) = rhs_t
                    .split_once("sections")
                    .ok_or_else(|| perr(line, rhs_col, "expected `sections [...]`"))?;
                let perm = split_list(perm_txt, line, rhs_col)?
                    .into_iter()
                    .map(|(t, c)| t.parse::<usize>().map_err(|_| perr(line, c + 1, format!("bad image `{t}`"))))
                    .collect::<Result<Vec<_>>>()?;
                let secs_col = rhs_col + rhs.find("sections").unwrap_or(0) + "sections".len();
                let sections = split_list(secs_txt, line, secs_col)?;
                raw.push(RawGen {
                    name: gname.to_string(),
                    line,
                    body: RawBody::Recursive { perm, sections, anchor },
                });
            }
            "planted" => {
                let (lhs, rhs) = rest
                    .split_once('=')
                    .ok_or_else(|| perr(line, rest_col, "expected `=`"))?;
                let toks: Vec<&str> = rhs.split_whitespace().collect();
                let (vertex, cycle) = match toks.as_slice() {
                    ["vertex", v, "cycle", k] => (
                        Vertex::parse(v).map_err(|e| perr(line, rest_col, e.to_string()))?,
                        k.parse::<usize>().map_err(|_| perr(line, rest_col, format!("bad cycle `{k}`")))?,
                    ),
                    _ => return Err(perr(line, rest_col, "expected `vertex V cycle K`")),
                };
                raw.push(RawGen {
                    name: lhs.trim().to_string(),
                    line,
                    body: RawBody::Planted { vertex, cycle },
                });
            }
            other => return Err(perr(line, indent + 1, format!("unknown keyword `{other}`"))),
        }
    }
    let shape = shape.ok_or_else(|| perr(1, 1, "missing `tree` line"))?;

    // Names resolve to generator words; planted ones are expanded here.
    let names: Vec<String> = raw.iter().map(|g| g.name.clone()).collect();
    let planted_word = |vertex: &Vertex, cycle: usize| -> Word {
        let m = shape.children_count(vertex.level());
        let rooted = Atom::Rooted(Perm::cycle(m.max(cycle), cycle));
        if vertex.is_root() {
            Word::from_atoms(vec![rooted])
        } else {
            Word::from_atoms(vec![Atom::Planted { vertex: vertex.clone(), inner: Word::from_atoms(vec![rooted]) }])
        }
    };
    let resolve = |n: &str| -> Option<Word> {
        let id = names.iter().position(|x| x == n)?;
        Some(match &raw[id].body {
            RawBody::Recursive { .. } => Word::from_atoms(vec![Atom::gen(id as u16)]),
            RawBody::Planted { vertex, cycle } => planted_word(vertex, *cycle),
        })
    };

    let mut generators = Vec::with_capacity(raw.len());
    for g in &raw {
        let kind = match &g.body {
            RawBody::Recursive { perm, sections, anchor } => {
                let perm = Perm::from_one_based(perm).map_err(|e| perr(g.line, 1, e.to_string()))?;
                let secs = sections
                    .iter()
                    .map(|(t, col)| parse_atoms_at(t, &resolve, g.line, *col).map(Word::from_atoms))
                    .collect::<Result<Vec<_>>>()?;
                GeneratorKind::Recursive { perm, sections: secs, anchor: *anchor }
            }
            RawBody::Planted { vertex, cycle } => GeneratorKind::Planted { vertex: vertex.clone(), cycle: *cycle },
        };
        generators.push(Generator { name: g.name.clone(), kind });
    }
    GroupPresentation::new(name, shape, generators)
}

/// Writes a presentation in the group-spec format accepted by [`load_spec`].
pub fn serialize_spec(group: &GroupPresentation) -> String {
    let mut out = String::new();
    out.push_str(&format!("name {}\n", group.name()));
    out.push_str(&format!("tree {}\n", group.shape()));
    for g in group.generators() {
        match &g.kind {
            GeneratorKind::Recursive { perm, sections, anchor } => {
                let imgs: Vec<String> = perm.one_based().iter().map(|x| x.to_string()).collect();
                let secs: Vec<String> = sections.iter().map(|w| group.format_word(w)).collect();
                let anchor = anchor.map(|k| format!(" @{k}")).unwrap_or_default();
                out.push_str(&format!(
                    "gen {}{} = perm [{}] sections [{}]\n",
                    g.name,
                    anchor,
                    imgs.join(","),
                    secs.join(", ")
                ));
            }
            GeneratorKind::Planted { vertex, cycle } => {
                out.push_str(&format!("planted {} = vertex {} cycle {}\n", g.name, vertex, cycle));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRIG: &str = "\
name grigorchuk
tree repeat 2
gen a = perm [2,1] sections [e, e]
gen b = perm [1,2] sections [a, c]
gen c = perm [1,2] sections [a, d]
gen d = perm [1,2] sections [e, b]
";

    #[test]
    fn round_trip() {
        let g = load_spec(GRIG).unwrap();
        let text = serialize_spec(&g);
        let h = load_spec(&text).unwrap();
        assert_eq!(g.generators(), h.generators());
        assert_eq!(g.shape(), h.shape());
        assert_eq!(serialize_spec(&h), text);
    }

    #[test]
    fn unknown_generator_in_section() {
        let bad = GRIG.replace("[e, b]", "[e, z]");
        assert_eq!(load_spec(&bad).unwrap_err(), Error::UnknownGenerator("z".into()));
    }

    #[test]
    fn invalid_permutation() {
        let bad = GRIG.replace("perm [2,1]", "perm [1,1]");
        assert!(matches!(load_spec(&bad), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn arity_mismatch() {
        let bad = GRIG.replace("sections [a, c]", "sections [a, c, d]");
        assert!(matches!(load_spec(&bad), Err(Error::InvalidPresentation(_))));
        let bad = GRIG.replace("tree repeat 2", "tree repeat 3");
        assert!(load_spec(&bad).is_err());
    }

    #[test]
    fn parse_error_reports_position() {
        let bad = GRIG.replace("gen d", "gem d");
        assert_eq!(
            load_spec(&bad).unwrap_err(),
            Error::Parse { line: 6, column: 1, message: "unknown keyword `gem`".into() }
        );
    }

    #[test]
    fn word_syntax() {
        let g = load_spec(GRIG).unwrap();
        let w = parse_word(&g, "(ab)^2 c' plant(12; d)").unwrap();
        assert_eq!(g.format_word(&w), "ababc'plant(12;d)");
        let w = parse_word(&g, "b^-1").unwrap();
        assert_eq!(g.format_word(&w), "b'");
        assert!(parse_word(&g, "ab(").is_err());
        assert_eq!(parse_word(&g, "x").unwrap_err(), Error::UnknownGenerator("x".into()));
        let w = parse_word(&g, "perm[2,1] e").unwrap();
        assert_eq!(g.format_word(&w), "perm[2,1]");
    }

    #[test]
    fn planted_generators_and_anchors() {
        let spec = "\
tree 2 3 repeat 5
planted t = vertex 1 cycle 3
gen x @1 = perm [2,3,1] sections [e, e, e]
";
        let g = load_spec(spec).unwrap();
        assert_eq!(g.generators().len(), 2);
        let text = serialize_spec(&g);
        assert!(text.contains("planted t = vertex 1 cycle 3"));
        assert!(text.contains("gen x @1 = perm [2,3,1]"));
        load_spec(&text).unwrap();
    }
}
