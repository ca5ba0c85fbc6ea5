//! Reading and writing datasets, plus min-max scaling.
//!
//! Text datasets hold one point per line with fields separated by commas or
//! by whitespace (decided from the first data line). Blank lines and lines
//! starting with `#` are skipped. TSPLIB files (`.tsp`, or anything with a
//! `NODE_COORD_SECTION`) are read as their coordinate rows.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Ignore the first non-blank line.
    pub skip_header: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Delim {
    Comma,
    Whitespace,
}

impl Delim {
    fn sniff(line: &str) -> Self {
        if line.contains(',') {
            Delim::Comma
        } else {
            Delim::Whitespace
        }
    }

    fn fields<'a>(self, line: &'a str) -> Box<dyn Iterator<Item = &'a str> + 'a> {
        match self {
            Delim::Comma => Box::new(line.split(',').map(str::trim)),
            Delim::Whitespace => Box::new(line.split_whitespace()),
        }
    }
}

fn parse_err(path: &str, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_string(), line, column, message: message.into() }
}

fn parse_field(field: &str, path: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| parse_err(path, line, column, format!("{field:?} is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, column, format!("{field:?} is not finite")));
    }
    Ok(v)
}

/// Parses delimited text. `source` names the input in error messages; line
/// and column (field) numbers are 1-based.
pub fn parse_delimited(text: &str, source: &str, opts: LoadOptions) -> Result<Dataset> {
    let mut values = Vec::new();
    let mut width: Option<usize> = None;
    let mut delim = None;
    let mut header_pending = opts.skip_header;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let d = *delim.get_or_insert_with(|| Delim::sniff(line));
        let before = values.len();
        for (col, field) in d.fields(line).enumerate() {
            values.push(parse_field(field, source, line_no, col + 1)?);
        }
        let got = values.len() - before;
        match width {
            None => width = Some(got),
            Some(w) if w != got => {
                return Err(parse_err(source, line_no, got.min(w) + 1, format!("expected {w} fields, found {got}")))
            }
            _ => {}
        }
    }
    let n = width.ok_or_else(|| parse_err(source, 0, 0, "no data rows"))?;
    Dataset::new(values, n)
}

/// Parses the `NODE_COORD_SECTION` of a TSPLIB file, dropping node ids.
pub fn parse_tsplib(text: &str, source: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let mut declared: Option<usize> = None;
    for (_, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.starts_with("NODE_COORD_SECTION") {
            break;
        }
        if let Some((key, val)) = line.split_once(':') {
            if key.trim() == "DIMENSION" {
                declared = val.trim().parse().ok();
            }
        }
    }
    let mut values = Vec::new();
    let mut width = None;
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" || line.chars().next().is_some_and(char::is_alphabetic) {
            break;
        }
        let before = values.len();
        for (col, field) in line.split_whitespace().enumerate().skip(1) {
            values.push(parse_field(field, source, idx + 1, col + 1)?);
        }
        let got = values.len() - before;
        if *width.get_or_insert(got) != got || got == 0 {
            return Err(parse_err(source, idx + 1, 1, "malformed coordinate row"));
        }
    }
    let n = width.ok_or_else(|| parse_err(source, 0, 0, "no NODE_COORD_SECTION rows"))?;
    let data = Dataset::new(values, n)?;
    if let Some(d) = declared.filter(|&d| d != data.m()) {
        return Err(parse_err(source, 0, 0, format!("DIMENSION says {d} nodes, found {}", data.m())));
    }
    Ok(data)
}

/// Loads a dataset file, picking the TSPLIB reader for `.tsp` files.
pub fn load_dataset(path: impl AsRef<Path>, opts: LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let source = path.display().to_string();
    let is_tsp = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsp")) || text.contains("NODE_COORD_SECTION");
    if is_tsp {
        parse_tsplib(&text, &source)
    } else {
        parse_delimited(&text, &source, opts)
    }
}

/// Writes one comma-separated row per point. Values use the shortest
/// representation that parses back to the same double.
pub fn save_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        for row in data.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    w.write_all(b",")?;
                }
                write!(w, "{v:?}")?;
                first = false;
            }
            w.write_all(b"\n")?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}

/// Streams rows of a delimited file one at a time, for online clustering
/// without loading the whole file.
pub fn stream_rows(path: impl AsRef<Path>, opts: LoadOptions) -> Result<impl Iterator<Item = Result<Vec<f64>>>> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header_pending = opts.skip_header;
    let mut delim = None;
    let mut width = None;
    let io_path = path.to_path_buf();
    Ok(BufReader::new(file).lines().enumerate().filter_map(move |(idx, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(Error::io(io_path.clone(), e))),
        };
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return None;
        }
        if header_pending {
            header_pending = false;
            return None;
        }
        let d = *delim.get_or_insert_with(|| Delim::sniff(line));
        let row: Result<Vec<f64>> =
            d.fields(line).enumerate().map(|(c, f)| parse_field(f, &source, idx + 1, c + 1)).collect();
        Some(row.and_then(|r| {
            if *width.get_or_insert(r.len()) != r.len() {
                Err(parse_err(&source, idx + 1, 1, "row length differs from the first row"))
            } else {
                Ok(r)
            }
        }))
    }))
}

/// Maps every column to `(x - min) / (max - min)`; constant columns become 0.
pub fn minmax_normalize(data: &Dataset) -> Dataset {
    let bounds = data.bounds();
    let values = data
        .rows()
        .flat_map(|row| row.iter().zip(&bounds).map(|(&x, &(lo, hi))| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 }))
        .collect();
    Dataset::new(values, data.n()).expect("scaled values are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    const OPTS: LoadOptions = LoadOptions { skip_header: false };

    #[test]
    fn comma_and_whitespace() {
        let d = parse_delimited("0,0\n2,0\n", "t", OPTS).unwrap();
        assert_eq!((d.m(), d.n()), (2, 2));
        let d = parse_delimited("1 2 3\n4\t5 6\n", "t", OPTS).unwrap();
        assert_eq!((d.m(), d.n()), (2, 3));
        assert_eq!(d.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn header_comments_and_blank_lines() {
        let d = parse_delimited("# note\nx,y\n\n1,2\n3,4\n", "t", LoadOptions { skip_header: true }).unwrap();
        assert_eq!(d.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        let err = parse_delimited("x,y\n1,2\n", "t", OPTS).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, column: 1, .. }), "{err}");
    }

    #[test]
    fn errors_name_line_and_column() {
        let err = parse_delimited("1,2\n3\n", "t", OPTS).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_delimited("1,2\n3,nan\n", "t", OPTS).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, column: 2, .. }), "{err}");
        let err = parse_delimited("1,2\n3,abc\n", "t", OPTS).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, column: 2, .. }), "{err}");
        assert!(parse_delimited("\n\n", "t", OPTS).is_err());
    }

    #[test]
    fn tsplib_coordinates() {
        let text = "NAME : toy\nTYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3.5 1e2\n3 1 1\nEOF\n";
        let d = parse_tsplib(text, "toy").unwrap();
        assert_eq!(d.as_slice(), &[0.0, 0.0, 3.5, 100.0, 1.0, 1.0]);
        assert!(parse_tsplib(&text.replace("DIMENSION : 3", "DIMENSION : 4"), "toy").is_err());
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        let vals = vec![0.1, 1.0 / 3.0, -2.5e-300, 1.7976931348623157e308, 123456789.12345679, -0.0];
        let d = Dataset::new(vals, 2).unwrap();
        save_dataset(&p, &d).unwrap();
        let back = load_dataset(&p, OPTS).unwrap();
        assert_eq!(
            d.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            back.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let rows: Vec<Vec<f64>> = stream_rows(&p, OPTS).unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(rows.len(), 3);
        assert!(matches!(load_dataset(dir.path().join("missing.csv"), OPTS), Err(Error::Io { .. })));
    }

    #[test]
    fn minmax_examples() {
        let d = Dataset::new(vec![0.0, 7.0, 2.0, 7.0, 4.0, 7.0], 2).unwrap();
        let s = minmax_normalize(&d);
        assert_eq!(s.as_slice(), &[0.0, 0.0, 0.5, 0.0, 1.0, 0.0]);
        assert_eq!(minmax_normalize(&s), s);
    }
}
