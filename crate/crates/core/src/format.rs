//! Decimal formatting for every text artifact the laboratory writes.

/// Shortest round-trip decimal (never more than 17 significant digits).
///
/// Plain notation is used for moderate magnitudes, scientific otherwise, so
/// the output stays compact and parses back to the identical `f64`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let mag = x.abs();
    if (1e-3..1e16).contains(&mag) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Fixed 17-significant-digit scientific notation.
pub fn sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        num(x)
    }
}

/// Parses the output of [`num`] or [`sig17`].
pub fn parse(s: &str) -> Option<f64> {
    match s.trim() {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plain_and_scientific() {
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(1e-20), "1e-20");
        assert_eq!(num(-3.0), "-3");
        assert_eq!(sig17(1.0), "1.0000000000000000e0");
    }

    proptest! {
        #[test]
        fn round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            prop_assert_eq!(parse(&num(x)).unwrap(), x);
            prop_assert_eq!(parse(&sig17(x)).unwrap(), x);
            let digits = num(x).chars().filter(|c| c.is_ascii_digit()).count();
            // exponent digits included, so allow a little headroom
            prop_assert!(digits <= 17 + 4);
        }
    }
}
