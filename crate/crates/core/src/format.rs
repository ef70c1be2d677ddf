//! Number formatting shared by the trace writer and the CLI.

/// Formats `v` with `sig` significant digits in the style of C's `%g`.
pub fn sig(v: f64, sig: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= sig as i32 {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Twelve significant digits, the precision of every printed number.
pub fn num(v: f64) -> String {
    sig(v, 12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_percent_g() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(-2.5e-7), "-2.5e-07");
        assert_eq!(num(1234567.0), "1234567");
        assert_eq!(num(1e15), "1e+15");
        assert_eq!(num(0.000123456789012345), "0.000123456789012");
    }
}
