//! Number formatting for tables.

/// Scientific notation with three significant digits and a signed two-digit
/// exponent, e.g. `8.61E-06`.
pub fn sci3(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.2E}");
    let (mantissa, exp) = s.split_once('E').expect("formatted with an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}E{sign}{:02}", exp.abs())
}

/// Shortest representation that parses back to the same `f64`.
pub fn full(v: f64) -> String {
    format!("{v:?}")
}

/// Grid coordinate as a table key: `0`, `0.1`, .., `1`.
pub fn key(v: f64) -> String {
    v.to_string()
}
