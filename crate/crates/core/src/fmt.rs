//! Deterministic text formatting for emitted data files.

/// Shortest round-trip decimal representation of a double.
///
/// Uses plain decimal for moderate magnitudes and scientific notation
/// outside of them so tiny overlap values do not expand into hundreds of
/// digits. Both forms re-parse to the identical bit pattern.
pub fn float(x: f64) -> String {
    if x == 0.0 || (x.abs() >= 1e-4 && x.abs() < 1e7) || x.is_nan() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::float;

    #[test]
    fn round_trips() {
        for &x in &[
            0.0,
            -0.0,
            2.5,
            1.0 / 3.0,
            9.000_000_000_1,
            1e-300,
            -7.215e222,
            f64::MIN_POSITIVE,
            std::f64::consts::PI,
        ] {
            let s = float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn nan_is_parseable() {
        let s = float(f64::NAN);
        assert!(s.parse::<f64>().unwrap().is_nan());
    }
}
