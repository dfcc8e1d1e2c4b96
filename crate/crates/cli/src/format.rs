//! Fixed number formatting for reports and data files.

/// Rounds to 12 significant digits, then prints the shortest decimal that
/// reads back to the rounded value. Plain notation for `1e-4 ≤ |x| < 1e15`,
/// exponent notation otherwise; both signs of zero print as `0`.
pub fn number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let r = round_sig(x);
    if (1e-4..1e15).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(number(0.0), "0");
        assert_eq!(number(-0.0), "0");
        assert_eq!(number(1.0), "1");
        assert_eq!(number(0.1 + 0.2), "0.3");
        assert_eq!(number(1.0 / 3.0), "0.333333333333");
        assert_eq!(number(-2.5e-7), "-2.5e-7");
        assert_eq!(number(123456789012345.0), "123456789012000");
        assert_eq!(number(1.2345678901234e20), "1.23456789012e20");
        assert_eq!(number(0.00012345678901234), "0.000123456789012");
    }

    #[test]
    fn output_reads_back_to_rounded_value() {
        for x in [std::f64::consts::PI, -1e-9 / 7.0, 6.02214076e23, 0.004_999_999_999_999_9] {
            assert_eq!(number(x).parse::<f64>().unwrap(), round_sig(x));
        }
    }
}
