//! MDL molfile / SDF reader and writer (V2000 only).
//!
//! Fields are read from their fixed CTfile columns. Only the parts needed to
//! rebuild the molecular graph are interpreted: counts line, atom block
//! (coordinates, symbol), bond block (atoms, order) and `M  CHG` properties.
//! Data items (`> <KEY>`) following `M  END` are kept verbatim.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Atom, Bond, Element, Molecule, MoleculeError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SdfError {
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error("line {line}: file ends before {expected}")]
    Truncated { line: usize, expected: &'static str },
    #[error("line {line}: counts line declares {declared} {block} rows but row {row} is missing")]
    CountsMismatch {
        line: usize,
        block: &'static str,
        declared: usize,
        row: usize,
    },
    #[error("line {line}: malformed counts line")]
    BadCounts { line: usize },
    #[error("line {line}: V3000 molfiles are not supported")]
    V3000 { line: usize },
    #[error("line {line}: unknown element symbol '{symbol}'")]
    UnknownElement { line: usize, symbol: String },
    #[error("line {line}: non-numeric {field} '{value}'")]
    BadNumber {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: malformed M  CHG property")]
    BadCharge { line: usize },
    #[error("invalid molecule: {0}")]
    Molecule(#[from] MoleculeError),
}

/// A single SDF record: the molecule plus its data items.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfRecord {
    pub molecule: Molecule,
    pub data: BTreeMap<String, String>,
}

/// Parses the first record of an SDF/MOL V2000 block.
pub fn parse_sdf(raw: &[u8]) -> Result<Molecule, SdfError> {
    parse_sdf_record(raw).map(|r| r.molecule)
}

pub fn parse_sdf_record(raw: &[u8]) -> Result<SdfRecord, SdfError> {
    let text = std::str::from_utf8(raw).map_err(|_| SdfError::Encoding)?;
    let lines: Vec<&str> = text.lines().collect();
    parse_record(&lines, 0).map(|(rec, _)| rec)
}

/// Parses every `$$$$`-separated record.
pub fn parse_sdf_all(raw: &[u8]) -> Result<Vec<SdfRecord>, SdfError> {
    let text = std::str::from_utf8(raw).map_err(|_| SdfError::Encoding)?;
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::new();
    let mut start = 0;
    while start < lines.len() && lines[start..].iter().any(|l| !l.trim().is_empty()) {
        let (rec, next) = parse_record(&lines, start)?;
        out.push(rec);
        start = next;
    }
    Ok(out)
}

fn field(line: &str, from: usize, to: usize) -> &str {
    let end = to.min(line.len());
    if from >= end {
        return "";
    }
    line.get(from..end).unwrap_or("").trim()
}

fn parse_usize(line: &str, from: usize, to: usize, lineno: usize, name: &'static str) -> Result<usize, SdfError> {
    let f = field(line, from, to);
    f.parse().map_err(|_| SdfError::BadNumber {
        line: lineno,
        field: name,
        value: f.to_string(),
    })
}

/// True for lines that look like a bond row or a property line rather than
/// an atom row; used to tell short atom blocks from garbage coordinates.
fn looks_like_non_atom_row(line: &str) -> bool {
    if line.starts_with("M  ") || line.starts_with("> ") || line.starts_with("$$$$") {
        return true;
    }
    let toks: Vec<&str> = line.split_whitespace().collect();
    toks.len() >= 3 && toks.len() <= 7 && toks.iter().all(|t| t.parse::<i64>().is_ok())
}

fn parse_record(lines: &[&str], start: usize) -> Result<(SdfRecord, usize), SdfError> {
    // 1-based line numbers for diagnostics.
    let lineno = |k: usize| k + 1;
    let counts_idx = start + 3;
    if counts_idx >= lines.len() {
        return Err(SdfError::Truncated {
            line: lineno(lines.len()),
            expected: "the counts line",
        });
    }
    let name = lines[start].trim().to_string();
    let counts = lines[counts_idx];
    if counts.contains("V3000") {
        return Err(SdfError::V3000 { line: lineno(counts_idx) });
    }
    if counts.len() < 6 {
        return Err(SdfError::BadCounts { line: lineno(counts_idx) });
    }
    let natoms = parse_usize(counts, 0, 3, lineno(counts_idx), "atom count")?;
    let nbonds = parse_usize(counts, 3, 6, lineno(counts_idx), "bond count")?;

    let mut atoms = Vec::with_capacity(natoms);
    for row in 0..natoms {
        let k = counts_idx + 1 + row;
        let Some(&line) = lines.get(k) else {
            return Err(SdfError::Truncated {
                line: lineno(k),
                expected: "the end of the atom block",
            });
        };
        if looks_like_non_atom_row(line) {
            return Err(SdfError::CountsMismatch {
                line: lineno(k),
                block: "atom",
                declared: natoms,
                row: row + 1,
            });
        }
        let mut pos = [0.0; 3];
        for (axis, name) in ["x coordinate", "y coordinate", "z coordinate"].iter().enumerate() {
            let f = field(line, axis * 10, axis * 10 + 10);
            pos[axis] = f.parse().map_err(|_| SdfError::BadNumber {
                line: lineno(k),
                field: name,
                value: f.to_string(),
            })?;
        }
        let symbol = field(line, 31, 34);
        let element: Element = symbol.parse().map_err(|_| SdfError::UnknownElement {
            line: lineno(k),
            symbol: symbol.to_string(),
        })?;
        atoms.push(Atom::new(element, pos));
    }

    let bond_start = counts_idx + 1 + natoms;
    let mut bonds = Vec::with_capacity(nbonds);
    for row in 0..nbonds {
        let k = bond_start + row;
        let Some(&line) = lines.get(k) else {
            return Err(SdfError::Truncated {
                line: lineno(k),
                expected: "the end of the bond block",
            });
        };
        if line.starts_with("M  ") || line.starts_with("$$$$") {
            return Err(SdfError::CountsMismatch {
                line: lineno(k),
                block: "bond",
                declared: nbonds,
                row: row + 1,
            });
        }
        let i = parse_usize(line, 0, 3, lineno(k), "bond atom")?;
        let j = parse_usize(line, 3, 6, lineno(k), "bond atom")?;
        let order = parse_usize(line, 6, 9, lineno(k), "bond order")?;
        if i == 0 || j == 0 {
            return Err(SdfError::BadNumber {
                line: lineno(k),
                field: "bond atom",
                value: "0".into(),
            });
        }
        bonds.push(Bond::new(i - 1, j - 1, order.min(255) as u8));
    }

    // Property block up to M  END.
    let mut k = bond_start + nbonds;
    let mut charge: Option<i32> = None;
    loop {
        let Some(&line) = lines.get(k) else {
            return Err(SdfError::Truncated {
                line: lineno(k),
                expected: "M  END",
            });
        };
        if line.starts_with("M  END") {
            k += 1;
            break;
        }
        if line.starts_with("$$$$") {
            return Err(SdfError::Truncated {
                line: lineno(k),
                expected: "M  END",
            });
        }
        if line.starts_with("M  CHG") {
            let n = parse_usize(line, 6, 9, lineno(k), "charge entry count")
                .map_err(|_| SdfError::BadCharge { line: lineno(k) })?;
            let mut total = 0i32;
            for e in 0..n {
                let off = 9 + e * 8;
                let v: i32 = field(line, off + 4, off + 8)
                    .parse()
                    .map_err(|_| SdfError::BadCharge { line: lineno(k) })?;
                let a: usize = field(line, off, off + 4)
                    .parse()
                    .map_err(|_| SdfError::BadCharge { line: lineno(k) })?;
                if a == 0 || a > natoms {
                    return Err(SdfError::BadCharge { line: lineno(k) });
                }
                total += v;
            }
            *charge.get_or_insert(0) += total;
        }
        k += 1;
    }

    // Data items until $$$$ or EOF.
    let mut data = BTreeMap::new();
    let mut current: Option<(String, Vec<String>)> = None;
    while k < lines.len() {
        let line = lines[k];
        k += 1;
        if line.starts_with("$$$$") {
            break;
        }
        if line.starts_with('>') {
            if let Some((key, vals)) = current.take() {
                data.insert(key, vals.join("\n"));
            }
            let key = line
                .find('<')
                .and_then(|a| line[a + 1..].find('>').map(|b| line[a + 1..a + 1 + b].to_string()))
                .unwrap_or_default();
            current = Some((key, Vec::new()));
        } else if let Some((_, vals)) = current.as_mut() {
            if line.trim().is_empty() {
                let (key, vals) = current.take().unwrap();
                data.insert(key, vals.join("\n"));
            } else {
                vals.push(line.to_string());
            }
        }
    }
    if let Some((key, vals)) = current.take() {
        data.insert(key, vals.join("\n"));
    }

    let molecule = Molecule::new(
        if name.is_empty() { "unnamed".to_string() } else { name },
        atoms,
        bonds,
        charge.unwrap_or(0),
        None,
    )?;
    Ok((SdfRecord { molecule, data }, k))
}

/// Writes a V2000 molfile record (terminated by `$$$$`).
pub fn write_sdf(m: &Molecule, data: &BTreeMap<String, String>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", m.name());
    let _ = writeln!(s, "  pepfrag");
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>3}{:>3}  0  0  0  0  0  0  0  0999 V2000",
        m.atoms().len(),
        m.bonds().len()
    );
    for a in m.atoms() {
        let _ = writeln!(
            s,
            "{:>10.4}{:>10.4}{:>10.4} {:<3} 0  0  0  0  0  0  0  0  0  0  0  0",
            a.position[0],
            a.position[1],
            a.position[2],
            a.element.symbol()
        );
    }
    for b in m.bonds() {
        let _ = writeln!(s, "{:>3}{:>3}{:>3}  0  0  0  0", b.i + 1, b.j + 1, b.order);
    }
    if m.net_charge() != 0 {
        // Net charge is carried on the first atom; per-atom charges are not modelled.
        let _ = writeln!(s, "M  CHG  1 {:>3} {:>3}", 1, m.net_charge());
    }
    let _ = writeln!(s, "M  END");
    for (k, v) in data {
        let _ = writeln!(s, "> <{k}>");
        let _ = writeln!(s, "{v}");
        let _ = writeln!(s);
    }
    let _ = writeln!(s, "$$$$");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const WATER: &str = "water
  hand-written

  3  2  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 O   0  0  0  0  0  0  0  0  0  0  0  0
    0.7570    0.5860    0.0000 H   0  0  0  0  0  0  0  0  0  0  0  0
   -0.7570    0.5860    0.0000 H   0  0  0  0  0  0  0  0  0  0  0  0
  1  2  1  0  0  0  0
  1  3  1  0  0  0  0
M  END
$$$$
";

    #[test]
    fn parses_water() {
        let m = parse_sdf(WATER.as_bytes()).unwrap();
        assert_eq!(m.name(), "water");
        assert_eq!(m.formula().to_string(), "H2O");
        assert_eq!(m.bonds().len(), 2);
        assert_eq!(m.atoms()[1].position, [0.757, 0.586, 0.0]);
        assert_eq!(m.net_charge(), 0);
        assert_eq!(m.multiplicity(), 1);
    }

    #[test]
    fn short_atom_block_reports_missing_row() {
        let bad = WATER.replace("  3  2  0", "  4  2  0");
        match parse_sdf(bad.as_bytes()) {
            Err(SdfError::CountsMismatch { line, block, declared, row }) => {
                assert_eq!((line, block, declared, row), (8, "atom", 4, 4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_bond_block_reports_missing_row() {
        let bad = WATER.replace("  3  2  0", "  3  3  0");
        assert!(matches!(
            parse_sdf(bad.as_bytes()),
            Err(SdfError::CountsMismatch { line: 10, block: "bond", .. })
        ));
    }

    #[test]
    fn truncated_file() {
        let cut: String = WATER.lines().take(6).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            parse_sdf(cut.as_bytes()),
            Err(SdfError::Truncated { line: 7, .. })
        ));
        assert!(matches!(parse_sdf(b"x\n\n"), Err(SdfError::Truncated { .. })));
        let no_end = WATER.replace("M  END\n", "");
        assert!(matches!(
            parse_sdf(no_end.as_bytes()),
            Err(SdfError::Truncated { expected: "M  END", .. })
        ));
    }

    #[test]
    fn unknown_element_names_line() {
        let bad = WATER.replacen(" O   0", " Fe  0", 1);
        assert_eq!(
            parse_sdf(bad.as_bytes()),
            Err(SdfError::UnknownElement {
                line: 5,
                symbol: "Fe".into()
            })
        );
    }

    #[test]
    fn non_numeric_coordinate() {
        let bad = WATER.replacen("    0.7570", "    0.7x70", 1);
        assert!(matches!(
            parse_sdf(bad.as_bytes()),
            Err(SdfError::BadNumber { line: 6, field: "x coordinate", .. })
        ));
    }

    #[test]
    fn v3000_rejected() {
        let bad = WATER.replace("0999 V2000", "0999 V3000");
        assert!(matches!(parse_sdf(bad.as_bytes()), Err(SdfError::V3000 { line: 4 })));
    }

    #[test]
    fn charge_sets_multiplicity() {
        // H3O+ : 10 electrons.
        let h3o = "h3o
  x

  4  3  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 O   0  3  0  0  0  0  0  0  0  0  0  0
    0.9600    0.0000    0.0000 H   0  0  0  0  0  0  0  0  0  0  0  0
   -0.4800    0.8300    0.0000 H   0  0  0  0  0  0  0  0  0  0  0  0
   -0.4800   -0.8300    0.0000 H   0  0  0  0  0  0  0  0  0  0  0  0
  1  2  1  0  0  0  0
  1  3  1  0  0  0  0
  1  4  1  0  0  0  0
M  CHG  1   1   1
M  END
";
        let m = parse_sdf(h3o.as_bytes()).unwrap();
        assert_eq!(m.net_charge(), 1);
        assert_eq!(m.electron_count(), 10);
        assert_eq!(m.multiplicity(), 1);
    }

    #[test]
    fn data_items_and_multiple_records() {
        let two = format!(
            "{}{}",
            WATER.replace("M  END\n", "M  END\n> <SOURCE>\nhand\n\n"),
            WATER
        );
        let recs = parse_sdf_all(two.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].data.get("SOURCE").map(String::as_str), Some("hand"));
        assert!(recs[1].data.is_empty());
    }

    #[test]
    fn writer_round_trip() {
        let m = parse_sdf(WATER.as_bytes()).unwrap();
        let text = write_sdf(&m, &BTreeMap::new());
        assert_eq!(parse_sdf(text.as_bytes()).unwrap(), m);
    }
}
