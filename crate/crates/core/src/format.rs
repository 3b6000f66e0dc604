//! Number formatting for the delimited text outputs.

/// `%.{sig}g`-style formatting: `sig` significant digits, trailing zeros
/// trimmed, scientific notation outside `[1e-5, 10^sig)`.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= sig as i32 {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let decimals = (sig as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Twelve significant digits, the precision of every numeric report column.
pub fn fmt12(x: f64) -> String {
    fmt_sig(x, 12)
}

/// Seventeen significant digits; round-trips any `f64` exactly.
pub fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}
