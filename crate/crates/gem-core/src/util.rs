//! Small shared helpers.

/// Format `v` with `sig` significant digits, `%g`-style: fixed notation for
/// moderate exponents, exponential otherwise, trailing zeros trimmed. Output
/// is locale-independent and stable, so golden files stay byte-identical.
pub fn fmt_sig(v: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if v == 0.0 {
        return "0".to_string();
    }
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let formatted = format!("{:.*e}", sig - 1, v);
    let (mantissa, exp_str) = formatted.split_once('e').expect("exponential format");
    let exp: i32 = exp_str.parse().expect("exponent");
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();

    let body = if exp >= -4 && exp < sig as i32 {
        if exp >= 0 {
            let split = (exp as usize) + 1;
            let int_part = &digits[..split];
            let frac = digits[split..].trim_end_matches('0');
            if frac.is_empty() {
                int_part.to_string()
            } else {
                format!("{int_part}.{frac}")
            }
        } else {
            let zeros = "0".repeat((-exp - 1) as usize);
            let frac = format!("{zeros}{digits}");
            let frac = frac.trim_end_matches('0');
            format!("0.{frac}")
        }
    } else {
        let first = &digits[..1];
        let rest = digits[1..].trim_end_matches('0');
        if rest.is_empty() {
            format!("{first}e{exp}")
        } else {
            format!("{first}.{rest}e{exp}")
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}
