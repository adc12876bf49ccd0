//! Locale-independent real formatting for CSV output.

/// Plain decimal with at most 12 significant digits and no trailing zeros.
/// Infinities render as `inf` / `-inf`, NaN as `nan`.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // round to 12 significant digits first, then read off the exponent
    let sci = format!("{x:.11e}");
    let (_, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let decimals = (11 - exp).max(0) as usize;
    let rounded: f64 = sci.parse().expect("round-trips");
    let mut s = format!("{rounded:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::fmt_real;

    #[test]
    fn examples() {
        assert_eq!(fmt_real(0.6), "0.6");
        assert_eq!(fmt_real(1.0), "1");
        assert_eq!(fmt_real(0.0), "0");
        assert_eq!(fmt_real(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_real(2.0 / 3.0), "0.666666666667");
        assert_eq!(fmt_real(12.5), "12.5");
        assert_eq!(fmt_real(0.0455002638963), "0.0455002638963");
        assert_eq!(fmt_real(1234.56789012345), "1234.56789012");
        assert_eq!(fmt_real(f64::INFINITY), "inf");
        assert_eq!(fmt_real(-1e-20), "-0.00000000000000000001");
        assert_eq!(fmt_real(0.5f64.sqrt() * 2.0 - 1.0), "0.414213562373");
    }

    #[test]
    fn reparses_within_twelve_digits() {
        for &x in &[0.1, 1e-9, 123456.789, 0.999999999999, 7.0e15, 0.05000000000000001] {
            let back: f64 = fmt_real(x).parse().unwrap();
            assert!((back - x).abs() <= x.abs() * 1e-11, "{x} -> {back}");
        }
    }
}
