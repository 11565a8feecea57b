//! Plain-text coordinate format for QUBOs.
//!
//! ```text
//! qubo 1
//! bits 3
//! constant 1.0
//! linear 2
//! 0 -1.0
//! 2 0.5
//! quadratic 1
//! 0 2 2.0
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Floats are written
//! with Rust's shortest round-trip representation, so `parse(write(q)) == q`
//! bit for bit.

use std::fmt::Write as _;

use super::{Qubo, QuboError};

pub fn write_qubo(q: &Qubo) -> String {
    let mut out = String::new();
    let nz: Vec<(usize, f64)> = q
        .linear()
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, a)| *a != 0.0)
        .collect();
    let _ = writeln!(out, "qubo 1");
    let _ = writeln!(out, "bits {}", q.n_bits());
    let _ = writeln!(out, "constant {:?}", q.constant());
    let _ = writeln!(out, "linear {}", nz.len());
    for (i, a) in nz {
        let _ = writeln!(out, "{i} {a:?}");
    }
    let _ = writeln!(out, "quadratic {}", q.quadratic().len());
    for (&(i, j), v) in q.quadratic() {
        let _ = writeln!(out, "{i} {j} {v:?}");
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self) -> Result<Vec<&'a str>, QuboError> {
        for (k, raw) in self.inner.by_ref() {
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            self.line = k + 1;
            return Ok(t.split_whitespace().collect());
        }
        Err(QuboError::Parse {
            line: self.line + 1,
            message: "unexpected end of file".into(),
        })
    }

    fn err(&self, message: impl Into<String>) -> QuboError {
        QuboError::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn keyword(&mut self, key: &str) -> Result<&'a str, QuboError> {
        let f = self.next_fields()?;
        if f.len() != 2 || f[0] != key {
            return Err(self.err(format!("expected `{key} <value>`")));
        }
        Ok(f[1])
    }

    fn num<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T, QuboError> {
        s.parse().map_err(|_| self.err(format!("invalid {what} `{s}`")))
    }
}

pub fn parse_qubo(text: &str) -> Result<Qubo, QuboError> {
    let mut l = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let version = l.keyword("qubo")?;
    if version != "1" {
        return Err(l.err(format!("unsupported version `{version}`")));
    }
    let n: usize = {
        let s = l.keyword("bits")?;
        l.num(s, "bit count")?
    };
    let mut q = Qubo::new(n);
    let s = l.keyword("constant")?;
    q.constant = l.num(s, "constant")?;
    let s = l.keyword("linear")?;
    let k: usize = l.num(s, "count")?;
    for _ in 0..k {
        let f = l.next_fields()?;
        if f.len() != 2 {
            return Err(l.err("expected `<bit> <value>`"));
        }
        let i: usize = l.num(f[0], "bit index")?;
        if i >= n {
            return Err(l.err(format!("bit {i} out of range")));
        }
        q.linear[i] = l.num(f[1], "coefficient")?;
    }
    let s = l.keyword("quadratic")?;
    let k: usize = l.num(s, "count")?;
    for _ in 0..k {
        let f = l.next_fields()?;
        if f.len() != 3 {
            return Err(l.err("expected `<i> <j> <value>`"));
        }
        let i: usize = l.num(f[0], "bit index")?;
        let j: usize = l.num(f[1], "bit index")?;
        if i >= j || j >= n {
            return Err(l.err(format!("pair ({i}, {j}) is not an upper-triangle entry")));
        }
        let v: f64 = l.num(f[2], "coefficient")?;
        q.quadratic.insert((i, j), v);
    }
    for (k, raw) in l.inner {
        let t = raw.trim();
        if !t.is_empty() && !t.starts_with('#') {
            return Err(QuboError::Parse {
                line: k + 1,
                message: "trailing content".into(),
            });
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn documented_example_parses() {
        let text = "qubo 1\nbits 3\nconstant 1.0\nlinear 2\n0 -1.0\n2 0.5\nquadratic 1\n0 2 2.0\n";
        let q = parse_qubo(text).unwrap();
        assert_eq!(q.energy(&[1, 0, 1]).unwrap(), 1.0 - 1.0 + 0.5 + 2.0);
        assert_eq!(write_qubo(&q), text);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "qubo 1\nbits 2\nconstant 0.0\nlinear 1\n5 1.0\nquadratic 0\n";
        match parse_qubo(text) {
            Err(QuboError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        assert!(parse_qubo("qubo 2\n").is_err());
        assert!(parse_qubo("qubo 1\nbits 2\nconstant 0\nlinear 0\nquadratic 1\n1 0 1.0\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            n in 1usize..10,
            c in proptest::num::f64::NORMAL,
            lin in proptest::collection::vec(proptest::num::f64::ANY, 10),
            pairs in proptest::collection::vec((0usize..10, 0usize..10, proptest::num::f64::NORMAL), 0..20),
        ) {
            let mut q = Qubo::new(n);
            q.add_constant(c);
            for i in 0..n {
                if lin[i].is_finite() {
                    q.add_linear(i, lin[i]);
                }
            }
            for (i, j, v) in pairs {
                if i < n && j < n && i != j {
                    q.quadratic.insert((i.min(j), i.max(j)), v);
                }
            }
            let back = parse_qubo(&write_qubo(&q)).unwrap();
            prop_assert_eq!(back.n_bits(), q.n_bits());
            prop_assert_eq!(back.constant().to_bits(), q.constant().to_bits());
            for i in 0..n {
                let (a, b) = (back.linear()[i], q.linear()[i]);
                prop_assert!(a.to_bits() == b.to_bits() || (a == 0.0 && b == 0.0));
            }
            prop_assert_eq!(back.quadratic().len(), q.quadratic().len());
            for ((k1, v1), (k2, v2)) in back.quadratic().iter().zip(q.quadratic()) {
                prop_assert_eq!(k1, k2);
                prop_assert_eq!(v1.to_bits(), v2.to_bits());
            }
        }
    }
}
