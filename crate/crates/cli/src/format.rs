//! Number formatting and CSV emission.

use std::fmt::Write as _;

/// Significant digits of every numeric CSV field.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros
/// removed, scientific notation outside `1e-4 <= |x| < 1e12`.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// CSV text with a `#` comment line, a header row and LF line endings.
pub struct CsvWriter {
    out: String,
    columns: usize,
}

impl CsvWriter {
    pub fn new(comment: &str, header: &[&str]) -> Self {
        let mut out = String::new();
        for line in comment.lines() {
            writeln!(out, "# {line}").unwrap();
        }
        writeln!(out, "{}", header.join(",")).unwrap();
        Self {
            out,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[Field]) {
        assert_eq!(
            fields.len(),
            self.columns,
            "row width must match the header"
        );
        let cells: Vec<String> = fields.iter().map(Field::render).collect();
        writeln!(self.out, "{}", cells.join(",")).unwrap();
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub enum Field<'a> {
    Num(f64),
    Int(i64),
    UInt(u64),
    Text(&'a str),
    Empty,
}

impl Field<'_> {
    fn render(&self) -> String {
        match self {
            Field::Num(x) => fmt_g(*x),
            Field::Int(i) => i.to_string(),
            Field::UInt(u) => u.to_string(),
            Field::Text(s) => s.to_string(),
            Field::Empty => String::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_format_matches_printf() {
        assert_eq!(fmt_g(0.5), "0.5");
        assert_eq!(fmt_g(10.0), "10");
        assert_eq!(fmt_g(-2.25), "-2.25");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g(0.64039), "0.64039");
        assert_eq!(fmt_g(1e-5), "1e-05");
        assert_eq!(fmt_g(1.5e-12), "1.5e-12");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(123456789012.0), "123456789012");
        assert_eq!(fmt_g(1234567890123.0), "1.23456789012e+12");
        assert_eq!(fmt_g(0.1 + 0.2), "0.3");
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(f64::NAN), "nan");
    }

    #[test]
    fn twelve_digits_round_trip_within_tolerance() {
        for x in [
            0.123456789012345,
            9.87654321e-7,
            0.999999999999,
            4.81516234200,
        ] {
            let back: f64 = fmt_g(x).parse().unwrap();
            assert!((back - x).abs() <= 1e-11 * x.abs());
        }
    }

    #[test]
    fn csv_layout() {
        let mut w = CsvWriter::new("a=1\nb=2", &["x", "y", "z"]);
        w.row(&[Field::Num(0.5), Field::Empty, Field::Text("PhiPlus")]);
        w.row(&[Field::Int(-1), Field::UInt(7), Field::Num(1e-20)]);
        assert_eq!(
            w.finish(),
            "# a=1\n# b=2\nx,y,z\n0.5,,PhiPlus\n-1,7,1e-20\n"
        );
    }
}
