use std::collections::HashMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// Longest fractional expansion printed before giving up on finding the
/// period.
const MAX_DIGITS: usize = 64;

/// A ratio kept as the counts it came from, with its reduced form and exact
/// decimal rendering. A zero denominator is reported as 0 with `defined`
/// cleared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactRatio {
    pub numerator: u64,
    pub denominator: u64,
    pub reduced: String,
    pub decimal: String,
    pub defined: bool,
}

impl ExactRatio {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        if denominator == 0 {
            return ExactRatio { numerator, denominator, reduced: "0".into(), decimal: "0".into(), defined: false };
        }
        let r = Ratio::new(numerator, denominator);
        let reduced = if *r.denom() == 1 { r.numer().to_string() } else { format!("{}/{}", r.numer(), r.denom()) };
        ExactRatio { numerator, denominator, reduced, decimal: render_decimal(numerator, denominator), defined: true }
    }

    pub fn value(&self) -> Option<Ratio<u64>> {
        self.defined.then(|| Ratio::new(self.numerator, self.denominator))
    }
}

/// Exact decimal form of `num/den`: terminating expansions in full,
/// repeating ones with the period in parentheses (`1/3` is `0.(3)`).
pub fn render_decimal(num: u64, den: u64) -> String {
    assert!(den > 0, "zero denominator");
    let int = num / den;
    let mut rem = u128::from(num % den);
    let den = u128::from(den);
    if rem == 0 {
        return int.to_string();
    }
    let mut digits = String::new();
    let mut seen: HashMap<u128, usize> = HashMap::new();
    while rem != 0 {
        if let Some(&start) = seen.get(&rem) {
            return format!("{int}.{}({})", &digits[..start], &digits[start..]);
        }
        if digits.len() == MAX_DIGITS {
            return format!("{int}.{digits}...");
        }
        seen.insert(rem, digits.len());
        rem *= 10;
        digits.push(char::from(b'0' + (rem / den) as u8));
        rem %= den;
    }
    format!("{int}.{digits}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals() {
        assert_eq!(render_decimal(4130, 40), "103.25");
        assert_eq!(render_decimal(1, 3), "0.(3)");
        assert_eq!(render_decimal(1, 6), "0.1(6)");
        assert_eq!(render_decimal(22, 7), "3.(142857)");
        assert_eq!(render_decimal(47, 192), "0.244791(6)");
        assert_eq!(render_decimal(2285, 24576), "0.0929768880208(3)");
        assert_eq!(render_decimal(0, 5), "0");
        assert_eq!(render_decimal(u64::MAX, u64::MAX - 1).len(), 2 + MAX_DIGITS + 3);
    }

    #[test]
    fn ratio_forms() {
        let r = ExactRatio::new(4130, 40);
        assert_eq!(r.reduced, "413/4");
        assert_eq!(r.value(), Some(Ratio::new(413, 4)));
        assert_eq!(ExactRatio::new(6, 3).reduced, "2");
        assert_eq!(ExactRatio::new(0, 0).value(), None);
    }
}
