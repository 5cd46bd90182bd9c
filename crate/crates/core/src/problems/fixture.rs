//! Plain-text problem fixtures.
//!
//! ```text
//! kind quadratic
//! n 2
//! p 1
//! matrix A 0 1 1
//! 1
//! vector b 0 1
//! 1
//! ```
//!
//! `matrix <name> <agent|-> <rows> <cols>` is followed by `rows` lines of
//! `cols` decimals; `vector <name> <agent|-> <len>` by one line of `len`
//! decimals. Scalars (`lambda`, `gamma`) are `name value` lines. Values are
//! written in shortest round-trip form, so a dump reparses bit-for-bit.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::{CompositionSpec, LogisticSpec, Problem, ProblemError, ProblemKind, QuadraticSpec};

type Key = (String, Option<usize>);

fn header(out: &mut String, kind: ProblemKind, n: usize, p: usize) {
    let _ = writeln!(out, "# pdsgd problem fixture");
    let _ = writeln!(out, "kind {kind}");
    let _ = writeln!(out, "n {n}");
    let _ = writeln!(out, "p {p}");
}

fn agent_tag(agent: Option<usize>) -> String {
    agent.map_or_else(|| "-".to_string(), |a| a.to_string())
}

fn write_matrix(out: &mut String, name: &str, agent: Option<usize>, m: &DMatrix<f64>) {
    let _ = writeln!(out, "matrix {name} {} {} {}", agent_tag(agent), m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:?}", m[(r, c)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

fn write_vector<'a, I: IntoIterator<Item = &'a f64>>(out: &mut String, name: &str, agent: Option<usize>, v: I) {
    let vals: Vec<String> = v.into_iter().map(|x| format!("{x:?}")).collect();
    let _ = writeln!(out, "vector {name} {} {}", agent_tag(agent), vals.len());
    let _ = writeln!(out, "{}", vals.join(" "));
}

pub(super) fn write_quadratic(spec: &QuadraticSpec) -> String {
    let mut out = String::new();
    header(&mut out, ProblemKind::Quadratic, spec.a.len(), spec.a[0].ncols());
    for (i, (a, b)) in spec.a.iter().zip(&spec.b).enumerate() {
        write_matrix(&mut out, "A", Some(i), a);
        write_vector(&mut out, "b", Some(i), b.iter());
    }
    out
}

pub(super) fn write_logistic(spec: &LogisticSpec) -> String {
    let mut out = String::new();
    header(&mut out, ProblemKind::Logistic, spec.z.len(), spec.z[0].ncols());
    let _ = writeln!(out, "lambda {:?}", spec.lambda);
    for (i, (z, y)) in spec.z.iter().zip(&spec.y).enumerate() {
        write_matrix(&mut out, "Z", Some(i), z);
        write_vector(&mut out, "y", Some(i), y.iter());
    }
    out
}

pub(super) fn write_composition(spec: &CompositionSpec) -> String {
    let mut out = String::new();
    header(&mut out, ProblemKind::PlComposition, spec.m.len(), spec.a.nrows());
    let _ = writeln!(out, "gamma {:?}", spec.gamma);
    write_matrix(&mut out, "A", None, &spec.a);
    for i in 0..spec.m.len() {
        write_matrix(&mut out, "M", Some(i), &spec.m[i]);
        write_vector(&mut out, "c", Some(i), spec.c[i].iter());
        write_vector(&mut out, "d", Some(i), spec.d[i].iter());
    }
    out
}

struct Parsed {
    scalars: HashMap<String, String>,
    blocks: HashMap<Key, DMatrix<f64>>,
}

fn err(line: usize, reason: impl Into<String>) -> ProblemError {
    ProblemError::Fixture { line, reason: reason.into() }
}

fn parse_numbers(line: usize, text: &str, expected: usize) -> Result<Vec<f64>, ProblemError> {
    let vals = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| err(line, format!("'{t}': {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if vals.len() != expected {
        return Err(err(line, format!("expected {expected} values, found {}", vals.len())));
    }
    Ok(vals)
}

fn parse_usize(line: usize, tok: Option<&str>, what: &str) -> Result<usize, ProblemError> {
    let tok = tok.ok_or_else(|| err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| err(line, format!("bad {what} '{tok}'")))
}

fn parse_agent(line: usize, tok: Option<&str>) -> Result<Option<usize>, ProblemError> {
    match tok {
        Some("-") => Ok(None),
        other => parse_usize(line, other, "agent index").map(Some),
    }
}

fn tokenize(text: &str) -> Result<Parsed, ProblemError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let mut scalars = HashMap::new();
    let mut blocks = HashMap::new();
    let mut idx = 0;
    let next_data = |idx: &mut usize, lineno: usize| -> Result<(usize, &str), ProblemError> {
        *idx += 1;
        lines.get(*idx).copied().ok_or_else(|| err(lineno, "unexpected end of fixture"))
    };
    while idx < lines.len() {
        let (lineno, line) = lines[idx];
        let mut toks = line.split_whitespace();
        let head = toks.next().unwrap_or_default();
        match head {
            "matrix" => {
                let name = toks.next().ok_or_else(|| err(lineno, "missing matrix name"))?.to_string();
                let agent = parse_agent(lineno, toks.next())?;
                let rows = parse_usize(lineno, toks.next(), "row count")?;
                let cols = parse_usize(lineno, toks.next(), "column count")?;
                let mut data = Vec::with_capacity(rows * cols);
                for _ in 0..rows {
                    let (ln, text) = next_data(&mut idx, lineno)?;
                    data.extend(parse_numbers(ln, text, cols)?);
                }
                if blocks.insert((name.clone(), agent), DMatrix::from_row_slice(rows, cols, &data)).is_some() {
                    return Err(err(lineno, format!("duplicate block {name}")));
                }
            }
            "vector" => {
                let name = toks.next().ok_or_else(|| err(lineno, "missing vector name"))?.to_string();
                let agent = parse_agent(lineno, toks.next())?;
                let len = parse_usize(lineno, toks.next(), "length")?;
                let (ln, text) = next_data(&mut idx, lineno)?;
                let data = parse_numbers(ln, text, len)?;
                if blocks.insert((name.clone(), agent), DMatrix::from_column_slice(len, 1, &data)).is_some() {
                    return Err(err(lineno, format!("duplicate block {name}")));
                }
            }
            key => {
                let value = toks.next().ok_or_else(|| err(lineno, format!("missing value for '{key}'")))?;
                if toks.next().is_some() {
                    return Err(err(lineno, "trailing tokens"));
                }
                scalars.insert(key.to_string(), value.to_string());
            }
        }
        idx += 1;
    }
    Ok(Parsed { scalars, blocks })
}

impl Parsed {
    fn scalar<T: std::str::FromStr>(&self, key: &str) -> Result<T, ProblemError> {
        let raw = self.scalars.get(key).ok_or_else(|| err(0, format!("missing '{key}'")))?;
        raw.parse().map_err(|_| err(0, format!("bad value for '{key}': {raw}")))
    }

    fn block(&mut self, name: &str, agent: Option<usize>) -> Result<DMatrix<f64>, ProblemError> {
        self.blocks
            .remove(&(name.to_string(), agent))
            .ok_or_else(|| err(0, format!("missing block {name} for agent {}", agent_tag(agent))))
    }

    fn vector(&mut self, name: &str, agent: Option<usize>) -> Result<DVector<f64>, ProblemError> {
        let m = self.block(name, agent)?;
        Ok(DVector::from_column_slice(m.as_slice()))
    }
}

pub(super) fn parse(text: &str) -> Result<Problem, ProblemError> {
    let mut parsed = tokenize(text)?;
    let kind: ProblemKind = {
        let raw = parsed.scalars.get("kind").ok_or_else(|| err(0, "missing 'kind'"))?;
        raw.parse().map_err(|e: String| err(0, e))?
    };
    let n: usize = parsed.scalar("n")?;
    let p: usize = parsed.scalar("p")?;
    let check = |m: &DMatrix<f64>, what: &str| -> Result<(), ProblemError> {
        if m.ncols() != p {
            return Err(err(0, format!("{what} has {} columns, expected {p}", m.ncols())));
        }
        Ok(())
    };
    let problem = match kind {
        ProblemKind::Quadratic => {
            let (mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for i in 0..n {
                let ai = parsed.block("A", Some(i))?;
                check(&ai, "A")?;
                a.push(ai);
                b.push(parsed.vector("b", Some(i))?);
            }
            Problem::quadratic_from_spec(&QuadraticSpec { a, b })?
        }
        ProblemKind::Logistic => {
            let lambda: f64 = parsed.scalar("lambda")?;
            let (mut z, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for i in 0..n {
                let zi = parsed.block("Z", Some(i))?;
                check(&zi, "Z")?;
                z.push(zi);
                y.push(parsed.vector("y", Some(i))?.iter().copied().collect());
            }
            Problem::logistic_from_spec(&LogisticSpec { z, y, lambda })?
        }
        ProblemKind::PlComposition => {
            let gamma: f64 = parsed.scalar("gamma")?;
            let a = parsed.block("A", None)?;
            check(&a, "A")?;
            let (mut m, mut c, mut d) = (vec![], vec![], vec![]);
            for i in 0..n {
                m.push(parsed.block("M", Some(i))?);
                c.push(parsed.vector("c", Some(i))?);
                d.push(parsed.vector("d", Some(i))?);
            }
            Problem::composition_from_spec(&CompositionSpec { a, m, c, d, gamma })?
        }
    };
    if let Some(((name, _), _)) = parsed.blocks.iter().next() {
        return Err(err(0, format!("unexpected block {name}")));
    }
    Ok(problem)
}
