use crate::error::{Error, Result};
use std::io::Read;

/// Parses one observation per line. Blank lines and `#` comments are
/// skipped, and a non-numeric first line is taken as a CSV header. Only
/// the first comma-separated field is read.
pub fn parse_data(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() || field.starts_with('#') {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(v) => return Err(Error::Parse(format!("line {}: non-finite value {v}", i + 1))),
            Err(_) if out.is_empty() && i == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("line {}: {e}: {field:?}", i + 1))),
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("no observations".into()));
    }
    Ok(out)
}

pub fn read_data(mut reader: impl Read) -> Result<Vec<f64>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_data(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_header() {
        assert_eq!(parse_data("x\n1.5\n\n2,ignored\n# note\n-3e0\n").unwrap(), [1.5, 2.0, -3.0]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_data("1\nabc\n").is_err());
        assert!(parse_data("").is_err());
        assert!(parse_data("1\ninf\n").is_err());
    }
}
