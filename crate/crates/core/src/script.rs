//! Line-oriented text format for protocol scripts.
//!
//! ```text
//! # comments and blank lines are ignored
//! protocol <S> <N_max> <K> <seed>
//! init random                # or: init basis <k> <l>
//!                            # or: init vector, then one line of 2d numbers
//! U random <seed>            # one round per line group, K-1 rounds in total
//! U matrix                   # followed by d rows of 2d numbers: re im re im ...
//! ```
//!
//! `d = (S+1)(N_max+1)` and ancilla-photon index `(k, l)` maps to `k (N_max+1) + l`.
//! `init` is optional and defaults to `random`, drawn from the header seed.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{random_state, Dims, JointState, ProtocolScript, Unitary};
use crate::seed::stream;

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
                .filter(|(_, l)| !l.is_empty()),
        );
        Self { inner: it.peekable() }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        self.inner.next()
    }

    fn peek(&mut self) -> Option<&(usize, &'a str)> {
        self.inner.peek()
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_num<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| perr(line, format!("cannot parse {what} from `{tok}`")))
}

fn parse_complex_row(line: usize, text: &str, dim: usize) -> Result<Vec<Complex64>> {
    let nums: Vec<f64> = text
        .split_whitespace()
        .map(|t| parse_num(line, t, "a real number"))
        .collect::<Result<_>>()?;
    if nums.len() != 2 * dim {
        return Err(perr(
            line,
            format!("expected {} numbers (re im pairs), found {}", 2 * dim, nums.len()),
        ));
    }
    Ok(nums.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

pub fn parse_script(text: &str) -> Result<ProtocolScript> {
    let mut lines = Lines::new(text);
    let (hl, header) = lines.next().ok_or_else(|| perr(0, "empty script"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 5 || toks[0] != "protocol" {
        return Err(perr(hl, "header must be `protocol <S> <N_max> <K> <seed>`"));
    }
    let s: usize = parse_num(hl, toks[1], "S")?;
    let n_max: usize = parse_num(hl, toks[2], "N_max")?;
    let stages: usize = parse_num(hl, toks[3], "K")?;
    let seed: u64 = parse_num(hl, toks[4], "seed")?;
    let dims = Dims::new(s, n_max)?;
    let d = dims.block();

    let mut initial = None;
    if let Some(&(il, l)) = lines.peek() {
        if l.starts_with("init") {
            lines.next();
            let t: Vec<&str> = l.split_whitespace().collect();
            initial = Some(match t.get(1).copied() {
                Some("random") if t.len() == 2 => random_state(d, &mut stream(seed, &[0])),
                Some("basis") if t.len() == 4 => {
                    let k: usize = parse_num(il, t[2], "ancilla level")?;
                    let p: usize = parse_num(il, t[3], "photon number")?;
                    let st = JointState::basis(dims, k, p).map_err(|e| perr(il, e.to_string()))?;
                    st.terms().fold(vec![Complex64::new(0.0, 0.0); d], |mut v, (lab, a)| {
                        v[lab.ancilla * (n_max + 1) + lab.photons] = a;
                        v
                    })
                }
                Some("vector") if t.len() == 2 => {
                    let (vl, row) = lines.next().ok_or_else(|| perr(il, "missing state vector"))?;
                    parse_complex_row(vl, row, d)?
                }
                _ => return Err(perr(il, "expected `init random`, `init basis <k> <l>` or `init vector`")),
            });
        }
    }
    let initial = initial.unwrap_or_else(|| random_state(d, &mut stream(seed, &[0])));

    let mut rounds = Vec::new();
    while let Some((ul, l)) = lines.next() {
        let t: Vec<&str> = l.split_whitespace().collect();
        match (t.first().copied(), t.get(1).copied()) {
            (Some("U"), Some("random")) if t.len() == 3 => {
                let useed: u64 = parse_num(ul, t[2], "unitary seed")?;
                rounds.push(Unitary::random(d, &mut stream(useed, &[])));
            }
            (Some("U"), Some("matrix")) if t.len() == 2 => {
                let mut entries = Vec::with_capacity(d * d);
                for _ in 0..d {
                    let (rl, row) = lines.next().ok_or_else(|| perr(ul, "matrix ended early"))?;
                    entries.extend(parse_complex_row(rl, row, d)?);
                }
                rounds.push(Unitary::new(d, entries).map_err(|e| perr(ul, e.to_string()))?);
            }
            _ => return Err(perr(ul, format!("unrecognized line `{l}`"))),
        }
    }
    ProtocolScript::new(dims, stages, seed, initial, rounds)
}

/// Writes a script with every state and matrix explicit.
pub fn format_script(script: &ProtocolScript) -> String {
    let mut out = String::new();
    let dims = script.dims;
    let _ = writeln!(
        out,
        "protocol {} {} {} {}",
        dims.ancilla_max, dims.photon_max, script.stages, script.seed
    );
    let row = |v: &[Complex64]| {
        v.iter()
            .map(|a| format!("{:e} {:e}", a.re, a.im))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(out, "init vector");
    let _ = writeln!(out, "{}", row(&script.initial));
    let d = dims.block();
    for u in &script.rounds {
        let _ = writeln!(out, "U matrix");
        for r in 0..d {
            let _ = writeln!(out, "{}", row(&u.entries()[r * d..(r + 1) * d]));
        }
    }
    out
}
