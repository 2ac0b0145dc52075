//! Versioned text format for a built construction.
//!
//! ```text
//! # kl-cex v1
//! nmax 32
//! lambda0 1.0000000000000000e0
//! lambda1 5.0000000000000000e-1
//! limit_radius …
//! lambda_inf …
//! body <k> <disk|ring> <n> <m> <rho>
//! level <k> <lambda> <K> <ln_excess>
//! ```
//!
//! Reading rebuilds the bodies from `nmax` and the levels from the stored
//! Torralba constants, then checks both against the records.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::format::{parse, sig17};
use crate::geometry::ConvexBody;

use super::field::CexField;
use super::levels::PrescribedLevels;
use super::rings::build_rings;

pub const HEADER: &str = "# kl-cex v1";

pub fn write_cex(field: &CexField) -> String {
    let bodies = field.bodies();
    let levels = field.levels();
    let mut out = String::new();
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "nmax {}", bodies.nmax()).unwrap();
    writeln!(out, "lambda0 {}", sig17(levels.lambda0())).unwrap();
    writeln!(out, "lambda1 {}", sig17(levels.lambda1())).unwrap();
    writeln!(out, "limit_radius {}", sig17(bodies.limit_radius())).unwrap();
    writeln!(out, "lambda_inf {}", sig17(levels.lambda_inf())).unwrap();
    for k in 0..bodies.len() {
        let tag = bodies.tag(k);
        let (kind, rho) = match bodies.body(k) {
            ConvexBody::Disk { radius, .. } => ("disk", *radius),
            ConvexBody::PolygonArc { rho, .. } => ("ring", *rho),
            _ => unreachable!("construction only holds disks and rings"),
        };
        writeln!(out, "body {k} {kind} {} {} {}", tag.n, tag.m, sig17(rho)).unwrap();
    }
    for k in 0..=levels.last_index() {
        let kk = if k >= 1 && k < levels.last_index() {
            levels.torralba(k)
        } else {
            f64::NAN
        };
        writeln!(
            out,
            "level {k} {} {} {}",
            sig17(levels.lambda(k)),
            sig17(kk),
            sig17(levels.ln_excess(k))
        )
        .unwrap();
    }
    out
}

fn bad(line: usize, what: &str) -> Error {
    Error::Parse(format!("line {line}: {what}"))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

pub fn read_cex(text: &str) -> Result<CexField> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(bad(1, "missing header")),
    }
    let mut nmax = None;
    let mut lambda0 = None;
    let mut lambda1 = None;
    let mut bodies_seen = Vec::new();
    let mut level_rows = Vec::new();
    for (i, line) in lines {
        let no = i + 1;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let num =
            |j: usize| -> Result<f64> { parts.get(j).and_then(|s| parse(s)).ok_or_else(|| bad(no, "bad number")) };
        let int = |j: usize| -> Result<usize> {
            parts
                .get(j)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(no, "bad integer"))
        };
        match parts.first().copied() {
            None => continue,
            Some(s) if s.starts_with('#') => continue,
            Some("nmax") => nmax = Some(int(1)?),
            Some("lambda0") => lambda0 = Some(num(1)?),
            Some("lambda1") => lambda1 = Some(num(1)?),
            Some("limit_radius") | Some("lambda_inf") => {
                num(1)?;
            }
            Some("body") => {
                if parts.len() != 6 {
                    return Err(bad(no, "body record needs 5 fields"));
                }
                bodies_seen.push((int(1)?, parts[2].to_string(), int(3)?, int(4)?, num(5)?, no));
            }
            Some("level") => {
                if parts.len() != 5 {
                    return Err(bad(no, "level record needs 4 fields"));
                }
                level_rows.push((int(1)?, num(2)?, num(3)?, num(4)?, no));
            }
            Some(other) => return Err(bad(no, &format!("unknown record {other:?}"))),
        }
    }
    let nmax = nmax.ok_or_else(|| bad(0, "missing nmax"))?;
    let lambda0 = lambda0.ok_or_else(|| bad(0, "missing lambda0"))?;
    let lambda1 = lambda1.ok_or_else(|| bad(0, "missing lambda1"))?;
    let bodies = build_rings(nmax)?;
    if bodies_seen.len() != bodies.len() {
        return Err(bad(0, "body count does not match nmax"));
    }
    for (k, kind, n, m, rho, no) in &bodies_seen {
        if *k >= bodies.len() {
            return Err(bad(*no, "body index out of range"));
        }
        let tag = bodies.tag(*k);
        let (want_kind, want_rho) = match bodies.body(*k) {
            ConvexBody::Disk { radius, .. } => ("disk", *radius),
            ConvexBody::PolygonArc { rho, .. } => ("ring", *rho),
            _ => unreachable!(),
        };
        if kind != want_kind || *n != tag.n as usize || *m != tag.m as usize || !close(*rho, want_rho, 1e-15) {
            return Err(bad(*no, "body record disagrees with the construction"));
        }
    }
    if level_rows.len() != bodies.len() {
        return Err(bad(0, "level count does not match body count"));
    }
    let mut ks = vec![f64::NAN; bodies.last_index()];
    for (k, _, kk, _, no) in &level_rows {
        if *k >= 1 && *k < bodies.last_index() {
            ks[*k] = *kk;
        } else if *k > bodies.last_index() {
            return Err(bad(*no, "level index out of range"));
        }
    }
    let levels = PrescribedLevels::from_parts(lambda0, lambda1, ks)?;
    for (k, _, _, ln_e, no) in &level_rows {
        if !close(levels.ln_excess(*k), *ln_e, 1e-13) {
            return Err(bad(*no, "level record disagrees with the recursion"));
        }
    }
    CexField::new(bodies, levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let f = CexField::standard(6).unwrap();
        let text = write_cex(&f);
        assert!(text.starts_with(HEADER));
        let g = read_cex(&text).unwrap();
        assert_eq!(write_cex(&g), text);
        assert_eq!(g.levels().lambda_inf(), f.levels().lambda_inf());
    }

    #[test]
    fn tampered_records_are_rejected() {
        let f = CexField::standard(5).unwrap();
        let text = write_cex(&f);
        assert!(read_cex(&text.replacen("# kl-cex v1", "# kl-cex v2", 1)).is_err());
        let broken = text.replacen("body 3 ring 3 3", "body 3 ring 3 4", 1);
        assert!(read_cex(&broken).is_err());
        let truncated: String = text.lines().take(12).map(|l| format!("{l}\n")).collect();
        assert!(read_cex(&truncated).is_err());
    }
}
