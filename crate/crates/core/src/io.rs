//! The `.fn` and `.set` text formats.
//!
//! `.fn` — a function table. First line `n m`; then 2^n whitespace-separated
//! lowercase-hex codomain codes in domain-code order 0..2^n-1.
//!
//! `.set` — a subset of F_2^n. First line `n`; then one hex code per line,
//! strictly ascending, no duplicates.
//!
//! Readers accept uppercase hex; writers always emit lowercase.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::gf2::{check_dim, FnTable, SubsetF2n};

fn parse_hex(tok: &str, line: usize) -> Result<u32> {
    u32::from_str_radix(tok, 16).map_err(|_| Error::Parse {
        line,
        msg: format!("`{tok}` is not a hex code"),
    })
}

fn parse_dec(tok: &str, line: usize, what: &str) -> Result<u32> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("`{tok}` is not a valid {what}"),
    })
}

/// Reads a `.fn` file.
pub fn read_fn(reader: impl Read) -> Result<FnTable> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or(Error::Parse {
            line: 1,
            msg: "empty input, expected header `n m`".into(),
        })??;
    let mut it = header.split_whitespace();
    let n = parse_dec(it.next().unwrap_or(""), 1, "domain dimension")?;
    let m = parse_dec(
        it.next().ok_or(Error::Parse {
            line: 1,
            msg: "header must be `n m`".into(),
        })?,
        1,
        "codomain dimension",
    )?;
    if it.next().is_some() {
        return Err(Error::Parse {
            line: 1,
            msg: "header must be exactly `n m`".into(),
        });
    }
    check_dim(n)?;
    check_dim(m)?;
    let expected = 1usize << n;
    let bound = 1u32 << m;
    let mut table = Vec::with_capacity(expected);
    let mut lineno = 1;
    for line in lines {
        lineno += 1;
        for tok in line?.split_whitespace() {
            let v = parse_hex(tok, lineno)?;
            if v >= bound {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("entry {v:x} is not below 2^{m}"),
                });
            }
            if table.len() == expected {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("more than 2^{n} = {expected} entries"),
                });
            }
            table.push(v);
        }
    }
    if table.len() != expected {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("found {} entries, expected 2^{n} = {expected}", table.len()),
        });
    }
    FnTable::new(n, m, table)
}

/// Writes a `.fn` file (16 entries per line).
pub fn write_fn(f: &FnTable, mut w: impl Write) -> Result<()> {
    writeln!(w, "{} {}", f.dom_dim(), f.codom_dim())?;
    for chunk in f.table().chunks(16) {
        let line: Vec<String> = chunk.iter().map(|v| format!("{v:x}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Reads a `.set` file, enforcing the strictly-ascending order.
pub fn read_set(reader: impl Read) -> Result<SubsetF2n> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or(Error::Parse {
            line: 1,
            msg: "empty input, expected header `n`".into(),
        })??;
    let n = parse_dec(header.trim(), 1, "dimension")?;
    check_dim(n)?;
    let mut set = SubsetF2n::empty(n)?;
    let mut last: Option<u32> = None;
    let mut lineno = 1;
    for line in lines {
        lineno += 1;
        let line = line?;
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        let v = parse_hex(tok, lineno)?;
        if v >= (1u32 << n) {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("code {v:x} is not below 2^{n}"),
            });
        }
        if let Some(prev) = last {
            if v <= prev {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("codes must be strictly ascending ({prev:x} then {v:x})"),
                });
            }
        }
        last = Some(v);
        set.insert(v);
    }
    Ok(set)
}

/// Writes a `.set` file in ascending order.
pub fn write_set(s: &SubsetF2n, mut w: impl Write) -> Result<()> {
    writeln!(w, "{}", s.dim())?;
    for c in s.codes() {
        writeln!(w, "{c:x}")?;
    }
    Ok(())
}
