//! CSV input parsing and atomic output.

use std::io::Write;
use std::path::Path;

use crate::error::CliError;

/// Float formatting shared by every CSV writer: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_field(field: &str, path: &Path, line: usize) -> Result<f64, CliError> {
    field.trim().parse::<f64>().map_err(|_| {
        CliError::Usage(format!(
            "{}:{line}: cannot parse {:?} as a number",
            path.display(),
            field.trim()
        ))
    })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn is_header(line: &str) -> bool {
    line.split(',').any(|f| f.trim().parse::<f64>().is_err())
}

/// Rows of comma-separated reals; blank lines are skipped. Squareness is
/// checked by the covariance constructor.
pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| parse_field(f, path, k + 1))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Sequence CSV `index,value[,value2]` with an optional header row. Indices
/// must cover `0..M` exactly once; rows may come in any order. Returns one
/// vector per value column.
pub fn read_sequence_csv(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = read_text(path)?;
    let mut entries: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut width = None;
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        if line.trim().is_empty() || (entries.is_empty() && is_header(line)) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(CliError::Usage(format!(
                "{}:{line_no}: expected `index,value[,value2]`, found {} fields",
                path.display(),
                fields.len()
            )));
        }
        if *width.get_or_insert(fields.len()) != fields.len() {
            return Err(CliError::Usage(format!(
                "{}:{line_no}: inconsistent number of columns",
                path.display()
            )));
        }
        let index: usize = fields[0].trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "{}:{line_no}: bad index {:?}",
                path.display(),
                fields[0].trim()
            ))
        })?;
        let values = fields[1..]
            .iter()
            .map(|f| parse_field(f, path, line_no))
            .collect::<Result<Vec<_>, _>>()?;
        entries.push((index, values));
    }
    if entries.is_empty() {
        return Err(CliError::Usage(format!("{}: no data rows", path.display())));
    }
    entries.sort_by_key(|e| e.0);
    for (expected, (index, _)) in entries.iter().enumerate() {
        if *index != expected {
            return Err(CliError::Usage(format!(
                "{}: indices must be 0..{} without gaps or repeats",
                path.display(),
                entries.len()
            )));
        }
    }
    let columns = entries[0].1.len();
    Ok((0..columns)
        .map(|c| entries.iter().map(|(_, v)| v[c]).collect())
        .collect())
}

/// Writes `content` to `out` through a temporary file in the same directory
/// followed by a rename, or to stdout when `out` is `None`.
pub fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Output(e.to_string());
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes()).map_err(fail)?;
            stdout.flush().map_err(fail)
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
            tmp.write_all(content.as_bytes()).map_err(fail)?;
            tmp.as_file().sync_all().map_err(fail)?;
            tmp.persist(path)
                .map_err(|e| CliError::Output(format!("{}: {}", path.display(), e.error)))?;
            Ok(())
        }
    }
}
