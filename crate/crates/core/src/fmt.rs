/// Formats a float so that parsing the text returns the identical value.
///
/// Rust's shortest round-trip representation is used; magnitudes outside
/// `[1e-5, 1e16)` switch to exponent notation to keep fields short.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
