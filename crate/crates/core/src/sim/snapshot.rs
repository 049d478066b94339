//! Plain-text instance snapshots.
//!
//! ```text
//! covering-instance v1
//! k 2
//! n 4
//! M 2 3
//! seed 17 0
//! 0 1 1 0          <- u_0
//! 1 0 0 0          <- u_{k+1}
//! ...              <- codewords in (j, m) order
//! ```

use std::fmt::Write as _;

use super::generator::{Instance, TrialSeed};
use crate::error::{Error, Result};

const HEADER: &str = "covering-instance v1";

pub fn write_snapshot(inst: &Instance) -> String {
    let mut out = String::new();
    let join = |s: &[usize]| s.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "k {}", inst.k());
    let _ = writeln!(out, "n {}", inst.n);
    let counts: Vec<String> = inst.counts().iter().map(u64::to_string).collect();
    let _ = writeln!(out, "M {}", counts.join(" "));
    let _ = writeln!(out, "seed {} {}", inst.seed.master, inst.seed.trial);
    let _ = writeln!(out, "{}", join(&inst.common));
    let _ = writeln!(out, "{}", join(&inst.side));
    for cw in inst.codebooks.iter().flatten() {
        let _ = writeln!(out, "{}", join(cw));
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l))
            }
            None => Err(Error::Snapshot { line: self.last + 1, message: format!("missing {what}") }),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<u64>)> {
        let (line, text) = self.next(key)?;
        let mut parts = text.split_whitespace();
        if parts.next() != Some(key) {
            return Err(Error::Snapshot { line, message: format!("expected `{key}`") });
        }
        Ok((line, numbers(line, parts)?))
    }
}

fn numbers<'a, T: std::str::FromStr>(line: usize, parts: impl Iterator<Item = &'a str>) -> Result<Vec<T>> {
    parts
        .map(|p| {
            p.parse()
                .map_err(|_| Error::Snapshot { line, message: format!("bad number `{p}`") })
        })
        .collect()
}

fn one(line: usize, v: Vec<u64>, key: &str) -> Result<u64> {
    match v.as_slice() {
        [x] => Ok(*x),
        _ => Err(Error::Snapshot { line, message: format!("`{key}` takes one value") }),
    }
}

pub fn parse_snapshot(text: &str) -> Result<Instance> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let (line, head) = lines.next("header")?;
    if head.trim() != HEADER {
        return Err(Error::Snapshot { line, message: format!("expected `{HEADER}`") });
    }
    let (line, v) = lines.keyed("k")?;
    let k = one(line, v, "k")? as usize;
    let (line, v) = lines.keyed("n")?;
    let n = one(line, v, "n")? as usize;
    let (line, counts) = lines.keyed("M")?;
    if counts.len() != k {
        return Err(Error::Snapshot { line, message: format!("expected {k} codebook sizes") });
    }
    let (line, seed) = lines.keyed("seed")?;
    let [master, trial] = seed[..] else {
        return Err(Error::Snapshot { line, message: "`seed` takes two values".into() });
    };
    let mut sequence = |what: &str| -> Result<Vec<usize>> {
        let (line, text) = lines.next(what)?;
        let seq: Vec<usize> = numbers(line, text.split_whitespace())?;
        if seq.len() != n {
            return Err(Error::Snapshot { line, message: format!("{what} has {} symbols, expected {n}", seq.len()) });
        }
        Ok(seq)
    };
    let common = sequence("common sequence")?;
    let side = sequence("side sequence")?;
    let mut codebooks = Vec::with_capacity(k);
    for (j, &m) in counts.iter().enumerate() {
        let book = (1..=m)
            .map(|i| sequence(&format!("codeword ({}, {i})", j + 1)))
            .collect::<Result<Vec<_>>>()?;
        codebooks.push(book);
    }
    if let Some((i, extra)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::Snapshot { line: i + 1, message: format!("unexpected `{extra}`") });
    }
    Ok(Instance { n, seed: TrialSeed { master, trial }, common, side, codebooks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::JointPmf;
    use crate::sim::generator::generate_instance;
    use proptest::prelude::*;

    #[test]
    fn known_layout() {
        let inst = Instance {
            n: 2,
            seed: TrialSeed { master: 5, trial: 1 },
            common: vec![0, 1],
            side: vec![1, 1],
            codebooks: vec![vec![vec![0, 0], vec![1, 0]]],
        };
        let text = write_snapshot(&inst);
        assert_eq!(text, "covering-instance v1\nk 1\nn 2\nM 2\nseed 5 1\n0 1\n1 1\n0 0\n1 0\n");
        assert_eq!(parse_snapshot(&text).unwrap(), inst);
    }

    #[test]
    fn reports_line_of_error() {
        let text = "covering-instance v1\nk 1\nn 2\nM 1\nseed 5 1\n0 1\n1\n0 0\n";
        match parse_snapshot(text) {
            Err(Error::Snapshot { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
        assert!(parse_snapshot("covering-instance v2\n").is_err());
        assert!(parse_snapshot("covering-instance v1\nk 1\nn 1\nM 1\nseed 1 1\n0\n0\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(n in 1usize..6, m1 in 0u64..4, m2 in 0u64..4, seed in any::<u64>()) {
            let p = JointPmf::from_table(vec![1.0 / 36.0; 36], vec![2, 3, 2, 3]).unwrap();
            let inst = generate_instance(&p.generation_law(), n, &[m1, m2], seed).unwrap();
            let back = parse_snapshot(&write_snapshot(&inst)).unwrap();
            prop_assert_eq!(back, inst);
        }
    }
}
