//! CSV helpers shared by every table the crate reads or writes.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Nine significant digits, scientific notation. Deterministic across runs
/// and platforms.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        // Avoid "-0.00000000e0" for negative zero.
        return "0.00000000e0".to_string();
    }
    format!("{x:.8e}")
}

/// A headed numeric table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: Vec<String>) -> Self {
        Self {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, index: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[index])
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .enumerate()
                .map(|(col, field)| {
                    field.parse::<f64>().map_err(|_| {
                        Error::invalid(
                            format!("row {} column {}", line + 1, headers[col]),
                            format!("`{field}` is not a number"),
                        )
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self { headers, rows })
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.headers)?;
        for row in &self.rows {
            wtr.write_record(row.iter().map(|&x| fmt_num(x)))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Checks a lambda column: strictly increasing and starting at zero.
pub(crate) fn check_grid(lambda: &[f64]) -> Result<()> {
    if let Some(first) = lambda.first() {
        if *first != 0.0 {
            return Err(Error::invalid(
                "lambda",
                format!("grid must start at 0, starts at {first}"),
            ));
        }
    }
    for (i, w) in lambda.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonIncreasingGrid { index: i + 1 });
        }
    }
    Ok(())
}

/// Locates `x` in a strictly increasing grid: returns `(i, s)` with
/// `x = grid[i] + s * (grid[i + 1] - grid[i])`, `s` in `[0, 1]`. Exact grid
/// nodes return `s = 0` (or `i = last`, `s = 0` at the final node).
pub(crate) fn locate(grid: &[f64], x: f64) -> (usize, f64) {
    let n = grid.len();
    if n == 1 || x <= grid[0] {
        return (0, 0.0);
    }
    if x >= grid[n - 1] {
        return (n - 1, 0.0);
    }
    let i = grid.partition_point(|&g| g <= x) - 1;
    let s = (x - grid[i]) / (grid[i + 1] - grid[i]);
    (i, s)
}
