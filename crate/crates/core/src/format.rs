//! Locale-independent number formatting with 12 significant digits.

/// Formats with 12 significant digits, choosing fixed or exponential
/// notation the way printf's `%g` does and trimming trailing zeros.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let neg = x < 0.0;
    let s = format!("{:.11e}", x.abs());
    let (mantissa, exp) = s.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("exponent parses");
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 12);

    let body = if (-4..12).contains(&exp) {
        if exp >= 0 {
            let point = (exp + 1) as usize;
            let int_part = &digits[..point];
            let frac = trim_zeros(&digits[point..]);
            if frac.is_empty() {
                int_part.to_string()
            } else {
                format!("{int_part}.{frac}")
            }
        } else {
            let zeros = "0".repeat((-exp - 1) as usize);
            let padded = format!("{zeros}{digits}");
            format!("0.{}", trim_zeros(&padded))
        }
    } else {
        let frac = trim_zeros(&digits[1..]);
        if frac.is_empty() {
            format!("{}e{}", &digits[..1], exp)
        } else {
            format!("{}.{}e{}", &digits[..1], frac, exp)
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

fn trim_zeros(s: &str) -> &str {
    s.trim_end_matches('0')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_notation() {
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-2.25), "-2.25");
        assert_eq!(fmt_sig(2_000_000.0), "2000000");
        assert_eq!(fmt_sig(8.0 / 9.0), "0.888888888889");
        assert_eq!(fmt_sig(0.0001), "0.0001");
    }

    #[test]
    fn exponential_notation() {
        assert_eq!(fmt_sig(1e-13), "1e-13");
        assert_eq!(fmt_sig(1.5e12), "1.5e12");
        assert_eq!(fmt_sig(0.00001), "1e-5");
    }

    #[test]
    fn specials() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
        assert_eq!(fmt_sig(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_sig(f64::NAN), "nan");
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(123456789012345.0), "1.23456789012e14");
    }
}
