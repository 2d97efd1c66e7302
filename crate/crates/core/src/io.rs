//! Plot-friendly CSV output with '#'-prefixed metadata headers, and readers
//! for measured-data inputs.

use std::io::Write;
use std::path::Path;

use crate::error::{ModelError, Result};

/// Write a CSV file: every line of `header` is echoed with a '# ' prefix,
/// followed by the column-name row and fixed-precision data rows, so
/// identical inputs produce byte-identical files.
pub fn write_csv<I>(path: &Path, header: &str, columns: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    for line in header.lines() {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                write!(w, ",")?;
            }
            write!(w, "{v:.12e}")?;
            first = false;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn parse_row(line: &str, line_no: usize, min_cols: usize) -> Result<Option<Vec<f64>>> {
    let t = line.trim();
    if t.is_empty() || t.starts_with('#') {
        return Ok(None);
    }
    let fields: Vec<&str> = t.split(',').map(str::trim).collect();
    let mut out = Vec::with_capacity(fields.len());
    for f in &fields {
        match f.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) => {
                // a single non-numeric row right at the top is a column header
                if out.is_empty() && line_no <= 64 {
                    return Ok(None);
                }
                return Err(ModelError::Parse {
                    line: line_no,
                    message: format!("cannot parse {f:?} as a number"),
                });
            }
        }
    }
    if out.len() < min_cols {
        return Err(ModelError::Parse {
            line: line_no,
            message: format!("expected at least {min_cols} columns, got {}", out.len()),
        });
    }
    Ok(Some(out))
}

/// Read correlation data rows (tau_ps, v[, v_err]); a missing error column
/// reads as zero.
pub fn read_g1_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(row) = parse_row(line, i + 1, 2)? {
            out.push((row[0], row[1], row.get(2).copied().unwrap_or(0.0)));
        }
    }
    if out.is_empty() {
        return Err(ModelError::Parse {
            line: text.lines().count(),
            message: "no data rows".into(),
        });
    }
    Ok(out)
}

/// Read spectrum data rows (energy_meV, counts).
pub fn read_spectrum_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(row) = parse_row(line, i + 1, 2)? {
            out.push((row[0], row[1]));
        }
    }
    if out.is_empty() {
        return Err(ModelError::Parse {
            line: text.lines().count(),
            message: "no data rows".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_headers() {
        let dir = std::env::temp_dir().join("pscatter_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trace.csv");
        write_csv(
            &path,
            "config echo\nsecond line",
            &["tau_ps", "v", "v_err"],
            vec![vec![0.0, 0.98, 0.01], vec![0.5, 0.93, 0.01]],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config echo\n# second line\ntau_ps,v,v_err\n"));
        let rows = read_g1_csv(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].0, 0.5);

        let again = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, again);
    }

    #[test]
    fn bad_rows_name_their_line() {
        let dir = std::env::temp_dir().join("pscatter_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        std::fs::write(&path, "tau_ps,v\n0.0,0.98\n0.5,oops\n").unwrap();
        let err = read_g1_csv(&path).unwrap_err();
        match err {
            ModelError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let dir = std::env::temp_dir().join("pscatter_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("empty.csv");
        std::fs::write(&path, "# only a comment\n").unwrap();
        assert!(read_g1_csv(&path).is_err());
    }
}
