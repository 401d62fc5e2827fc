use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{Dataset, Example, LabelKind};
use crate::error::{Error, Result};
use crate::linalg::SparseVec;

/// How raw LibSVM labels become dataset labels.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelMap {
    /// Binary. `+1`/`1`/`-1` are taken as is; otherwise the two distinct
    /// observed labels map to `-1` and `+1` in ascending order.
    Auto,
    /// Binary one-vs-rest: the given label becomes `+1`, everything else `-1`.
    OneVsRest(f64),
    /// Multiclass: integer label `k` becomes class `k + offset`, which must
    /// land in `1..=classes` (use `offset = 1` for files labelled `0..C-1`).
    Multiclass { classes: usize, offset: i64 },
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Reads LibSVM text: one `label idx:val idx:val ...` example per non-empty line.
///
/// Anything after `#` on a line is ignored. Indices are 1-based and strictly
/// increasing. Errors carry the 1-based line number.
pub fn parse_libsvm<R: BufRead>(reader: R, map: &LabelMap) -> Result<Dataset> {
    let mut raw: Vec<(usize, f64, SparseVec)> = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line?;
        let body = line.split('#').next().unwrap_or("");
        let mut tokens = body.split_whitespace();
        let Some(label_tok) = tokens.next() else { continue };
        let label: f64 = label_tok
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(lineno, format!("unparsable label '{label_tok}'")))?;
        let mut pairs = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("malformed feature '{tok}'")))?;
            let idx: u32 = idx.parse().map_err(|_| parse_err(lineno, format!("bad feature index in '{tok}'")))?;
            let val: f64 = val.parse().map_err(|_| parse_err(lineno, format!("bad feature value in '{tok}'")))?;
            pairs.push((idx, val));
        }
        let features = SparseVec::from_one_based(&pairs).map_err(|e| parse_err(lineno, e.to_string()))?;
        raw.push((lineno, label, features));
    }

    let kind = match map {
        LabelMap::Multiclass { classes, .. } => LabelKind::Multiclass { classes: *classes },
        _ => LabelKind::Binary,
    };
    let mapper = label_mapper(&raw, map)?;
    let mut examples = Vec::with_capacity(raw.len());
    for (lineno, label, features) in raw {
        examples.push(Example { features, label: mapper(lineno, label)? });
    }
    Dataset::new(examples, kind)
}

type Mapper = Box<dyn Fn(usize, f64) -> Result<i32>>;

fn label_mapper(raw: &[(usize, f64, SparseVec)], map: &LabelMap) -> Result<Mapper> {
    match *map {
        LabelMap::OneVsRest(pos) => Ok(Box::new(move |_, l| Ok(if l == pos { 1 } else { -1 }))),
        LabelMap::Multiclass { classes, offset } => Ok(Box::new(move |lineno, l| {
            if l.fract() != 0.0 {
                return Err(parse_err(lineno, format!("class label {l} is not an integer")));
            }
            let c = l as i64 + offset;
            if c < 1 || c as usize > classes {
                return Err(parse_err(lineno, format!("class label {l} outside 1..={classes} after offset {offset}")));
            }
            Ok(c as i32)
        })),
        LabelMap::Auto => {
            if raw.iter().all(|(_, l, _)| *l == 1.0 || *l == -1.0) {
                return Ok(Box::new(|_, l| Ok(l as i32)));
            }
            let mut seen = BTreeSet::new();
            for (lineno, l, _) in raw {
                seen.insert(l.to_bits());
                if seen.len() > 2 {
                    return Err(parse_err(*lineno, "more than two distinct labels in binary mode"));
                }
            }
            let mut labels: Vec<f64> = seen.into_iter().map(f64::from_bits).collect();
            labels.sort_by(f64::total_cmp);
            match labels.as_slice() {
                [lo, hi] => {
                    let (lo, hi) = (*lo, *hi);
                    Ok(Box::new(move |lineno, l| {
                        if l == lo {
                            Ok(-1)
                        } else if l == hi {
                            Ok(1)
                        } else {
                            Err(parse_err(lineno, format!("unexpected label {l}")))
                        }
                    }))
                }
                _ => Err(parse_err(raw.first().map_or(1, |r| r.0), "cannot infer a binary label map")),
            }
        }
    }
}

pub fn read_libsvm_file(path: impl AsRef<Path>, map: &LabelMap) -> Result<Dataset> {
    parse_libsvm(BufReader::new(File::open(path)?), map)
}

/// Writes a dataset in canonical LibSVM form (`+1`/`-1` or the class number).
pub fn write_libsvm<W: Write>(ds: &Dataset, mut sink: W) -> Result<()> {
    for e in ds.examples() {
        match ds.kind() {
            LabelKind::Binary => write!(sink, "{}", if e.label > 0 { "+1" } else { "-1" })?,
            LabelKind::Multiclass { .. } => write!(sink, "{}", e.label)?,
        }
        for (j, v) in e.features.one_based() {
            write!(sink, " {j}:{v}")?;
        }
        writeln!(sink)?;
    }
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        parse_libsvm(text.as_bytes(), &LabelMap::Auto)
    }

    #[test]
    fn basic_lines() {
        let ds = parse("+1 1:0.5 3:2\n-1\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 3);
        assert_eq!(ds.examples()[0].label, 1);
        assert_eq!(ds.examples()[0].features.one_based().collect::<Vec<_>>(), vec![(1, 0.5), (3, 2.0)]);
        assert_eq!(ds.examples()[1].label, -1);
        assert_eq!(ds.examples()[1].features.nnz(), 0);
    }

    #[test]
    fn errors_name_the_line() {
        for (text, line) in [("1 a:b", 1), ("1 1:1\n\n-1 3:1 2:1", 3), ("x 1:1", 1), ("1 1:1\n1 0:2", 2)] {
            match parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn label_maps() {
        let ds = parse("0 1:1\n2 1:1\n0 2:1\n").unwrap();
        assert_eq!(ds.examples().iter().map(|e| e.label).collect::<Vec<_>>(), vec![-1, 1, -1]);
        assert!(parse("0 1:1\n1 1:1\n2 1:1\n").is_err());
        let ovr = parse_libsvm("3 1:1\n1 1:1\n".as_bytes(), &LabelMap::OneVsRest(1.0)).unwrap();
        assert_eq!(ovr.examples()[0].label, -1);
        assert_eq!(ovr.examples()[1].label, 1);
        let mc = parse_libsvm("0 1:1\n9 2:1\n".as_bytes(), &LabelMap::Multiclass { classes: 10, offset: 1 }).unwrap();
        assert_eq!(mc.examples()[1].label, 10);
        assert!(parse_libsvm("10 1:1".as_bytes(), &LabelMap::Multiclass { classes: 10, offset: 1 }).is_err());
    }

    #[test]
    fn scientific_notation_and_comments() {
        let ds = parse("-1 2:1e-3 4:-2.5E2 # trailing\n").unwrap();
        assert_eq!(ds.examples()[0].features.values(), &[1e-3, -250.0]);
    }

    #[test]
    fn write_then_parse_is_stable() {
        let text = "1 1:0.25 7:3\n-1 2:1e-3\n+1\n";
        let ds = parse(text).unwrap();
        let mut buf = Vec::new();
        write_libsvm(&ds, &mut buf).unwrap();
        let again = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(ds, again);
        let mut buf2 = Vec::new();
        write_libsvm(&again, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }
}
