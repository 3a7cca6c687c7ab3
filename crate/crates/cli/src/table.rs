//! Column-oriented result table and its CSV form.

use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    header: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl ResultTable {
    pub fn with_time(times: Vec<f64>) -> Self {
        Self {
            header: vec!["t".into()],
            columns: vec![times],
        }
    }

    pub fn push_column(&mut self, name: String, values: Vec<f64>) {
        assert_eq!(values.len(), self.n_rows(), "column `{name}` has the wrong length");
        self.header.push(name);
        self.columns.push(values);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }

    /// Writes the table with 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in 0..self.n_rows() {
            // adding 0.0 turns −0 into +0
            w.write_record(self.columns.iter().map(|c| format!("{:.16e}", c[r] + 0.0)))?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }
}
