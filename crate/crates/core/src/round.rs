/// Decimal places kept by analysis exports. Enough for any tolerance the
/// analyses promise while hiding last-bit platform differences.
pub const EXPORT_DECIMALS: i32 = 10;

/// Rounds to `dp` decimal places; non-finite values pass through.
pub fn round_dp(x: f64, dp: i32) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let f = 10f64.powi(dp);
    let r = (x * f).round() / f;
    // normalise negative zero so exports never print "-0.0"
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn round_export(x: f64) -> f64 {
    round_dp(x, EXPORT_DECIMALS)
}

/// `serialize_with` helper writing a float at export precision.
pub fn ser_export<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_export(*x))
}

/// `serialize_with` helper for `[support, plausibility]` pairs.
pub fn ser_export_pair<S: serde::Serializer>(x: &[f64; 2], s: S) -> Result<S::Ok, S::Error> {
    use serde::Serialize;
    [round_export(x[0]), round_export(x[1])].serialize(s)
}
