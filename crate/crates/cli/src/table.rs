//! Column-ordered numeric tables and their CSV form.

use std::fmt::Write as _;

/// A table cell: counters keep their integer form, measurements are written
/// with 12 significant digits.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Int(i64),
    Num(f64),
}

impl Cell {
    fn render(self, out: &mut String) {
        match self {
            Cell::Int(v) => write!(out, "{v}").unwrap(),
            Cell::Num(v) => write!(out, "{v:.11e}").unwrap(),
        }
    }
}

/// An ordered set of named columns with rows of cells.
#[derive(Debug, Clone, Default)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: Vec<String>) -> Self {
        Table {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.headers.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.headers.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_12_significant_digits() {
        let mut table = Table::new(vec!["m".into(), "value".into()]);
        table.push_row(vec![Cell::Int(3), Cell::Num(0.5)]);
        let csv = table.to_csv();
        assert_eq!(csv, "m,value\n3,5.00000000000e-1\n");
    }
}
