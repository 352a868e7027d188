//! Exact rational helpers and the two-decimal formatting used for the
//! published-table comparisons.

use num_traits::ToPrimitive;

/// Exact rational used for counts, ratings and desk-scale discriminants.
pub type Rational = num_rational::Ratio<i128>;

pub fn ratio(numer: i128, denom: i128) -> Rational {
    Rational::new(numer, denom)
}

pub fn to_f64(r: &Rational) -> f64 {
    // Ratio::to_f64 is correctly rounded for i128 components.
    r.to_f64().unwrap_or(f64::NAN)
}

/// Two-decimal rendering of a double, rounded on its exact binary value as
/// C `printf("%.2f")` does (so 19/40 prints 0.47 and 5/8 prints 0.62). A zero
/// result never carries a minus sign.
pub fn round2_f64(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}
