use crate::{DynError, Result};
use joma_num::fmt::{csv_line, sig17};
use std::io::Write;

/// Snapshots of a run: a time column followed by named value columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    columns: Vec<String>,
    times: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            times: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, values: Vec<f64>) -> Result<()> {
        if values.len() != self.columns.len() {
            return Err(DynError::Dimension(format!(
                "row has {} values for {} columns",
                values.len(),
                self.columns.len()
            )));
        }
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(DynError::Invalid(format!("time {t} does not follow {last}")));
            }
        }
        self.times.push(t);
        self.rows.push(values);
        Ok(())
    }

    /// Appends, or overwrites the last row when `t` does not advance past it.
    pub fn push_or_replace_last(&mut self, t: f64, values: Vec<f64>) -> Result<()> {
        match self.times.last() {
            Some(&last) if t <= last => {
                if values.len() != self.columns.len() {
                    return Err(DynError::Dimension("row length".into()));
                }
                *self.rows.last_mut().unwrap() = values;
                Ok(())
            }
            _ => self.push(t, values),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn header(&self) -> String {
        let mut cells = vec!["t".to_string()];
        cells.extend(self.columns.iter().cloned());
        csv_line(&cells)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(self.header().as_bytes())?;
        for (t, row) in self.times.iter().zip(&self.rows) {
            let mut cells = vec![sig17(*t)];
            cells.extend(row.iter().map(|v| sig17(*v)));
            out.write_all(csv_line(&cells).as_bytes())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_increasing_time() {
        let mut tr = Trajectory::new(vec!["a".into()]);
        tr.push(0.0, vec![1.0]).unwrap();
        assert!(tr.push(0.0, vec![2.0]).is_err());
        assert!(tr.push(1.0, vec![2.0, 3.0]).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut tr = Trajectory::new(vec!["a".into(), "b".into()]);
        tr.push(0.0, vec![1.0, 0.5]).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,a,b"));
        assert_eq!(lines.next(), Some("0,1.0000000000000000e0,5.0000000000000000e-1"));
    }
}
