use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use hdmmd::Matrix;

/// Reads a numeric CSV: comma separated, one observation per row, optional
/// single header row.
pub fn read_matrix(path: &Path, header: bool) -> Result<Matrix> {
    let file = File::open(path).with_context(|| format!("{}: cannot open", path.display()))?;
    let mut reader =
        csv::ReaderBuilder::new().has_headers(header).flexible(true).trim(csv::Trim::All).from_reader(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if let Some(first) = rows.first() {
            if record.len() != first.len() {
                bail!("{}:{line}: expected {} columns, found {}", path.display(), first.len(), record.len());
            }
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().ok().filter(|v| v.is_finite()).with_context(|| {
                    format!("{}:{line}: column {}: '{field}' is not a finite number", path.display(), c + 1)
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(Matrix::from_rows(&rows)?)
}

/// Opens `path` for writing, or stdout when absent.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("{}: cannot create", p.display()))?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Writes `# key=value` preamble lines followed by a CSV table.
pub fn write_csv(
    path: Option<&Path>,
    preamble: &[(&str, String)],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut out = output(path)?;
    for (k, v) in preamble {
        writeln!(out, "# {k}={v}")?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    out.flush()?;
    Ok(())
}

pub fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
