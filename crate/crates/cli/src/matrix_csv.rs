//! Complex square matrices as CSV, one matrix row per line, `re,im` pairs per entry.
//!
//! An optional header line (any line whose first field is not a number) is skipped,
//! as are blank lines and lines starting with `#`.

use std::fmt;

use num_complex::Complex64;
use oscgate_core::ComplexMatrix;

/// Largest accepted dimension; guards against runaway allocations on bad input.
pub const MAX_DIM: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCsvError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for MatrixCsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for MatrixCsvError {}

pub fn parse_matrix_csv(text: &str) -> Result<ComplexMatrix, MatrixCsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| MatrixCsvError {
            line: e.position().map(|p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if first && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            first = false;
            continue;
        }
        first = false;
        let err = |message: String| MatrixCsvError { line, message };
        if record.len() % 2 != 0 {
            return Err(err(format!("expected re,im pairs, got {} fields", record.len())));
        }
        if record.len() / 2 > MAX_DIM {
            return Err(err(format!("row has more than {MAX_DIM} entries")));
        }
        let nums = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| err(format!("{f:?} is not a finite number")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let row: Vec<Complex64> = nums.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        if let Some(prev) = rows.first() {
            if prev.len() != row.len() {
                return Err(err(format!("row has {} entries, expected {}", row.len(), prev.len())));
            }
        }
        rows.push(row);
        if rows.len() > rows[0].len() {
            return Err(err(format!("more rows than the {} columns", rows[0].len())));
        }
    }
    let n = rows.len();
    if n == 0 {
        return Err(MatrixCsvError { line: None, message: "no matrix rows".into() });
    }
    if rows[0].len() != n {
        return Err(MatrixCsvError {
            line: None,
            message: format!("matrix is {n}x{}, expected square", rows[0].len()),
        });
    }
    Ok(ComplexMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

/// Header `re_0,im_0,re_1,im_1,...` followed by one line per row.
pub fn write_matrix_csv(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..m.ncols()).map(|c| format!("re_{c},im_{c}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..m.nrows() {
        let fields: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:?},{:?}", m[(r, c)].re, m[(r, c)].im))
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
