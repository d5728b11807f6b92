//! Text formatting shared by every CSV writer.

/// Formats with 17 significant digits, enough to round-trip any f64.
pub fn sig17(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    format!("{v:.16e}")
}

/// One CSV line from already-formatted cells.
pub fn csv_line<S: AsRef<str>>(cells: &[S]) -> String {
    let mut out = cells
        .iter()
        .map(|c| c.as_ref())
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig17_round_trips() {
        for v in [1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE, 0.1 + 0.2] {
            let s = sig17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(sig17(0.0), "0");
        assert_eq!(sig17(-0.0), "0");
    }
}
