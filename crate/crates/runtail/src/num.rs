//! Rational scalar type used throughout the front end and constraint
//! generation. Floating point enters only inside the solvers and the
//! simulator.

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = Rational64;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(n)
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a manual division; Rational64 components always fit.
        *r.numer() as f64 / *r.denom() as f64
    })
}

/// Parses an integer or decimal literal (e.g. `0.75`, `-2`, `200000000`)
/// into an exact rational.
pub fn parse_decimal(s: &str) -> Option<Rat> {
    let s = s.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1i64, s),
    };
    if body.is_empty() {
        return None;
    }
    match body.split_once('.') {
        None => {
            let n: i64 = body.parse().ok()?;
            Some(rat_int(sign * n))
        }
        Some((int_part, frac_part)) => {
            if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let int_n: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
            let frac_n: i64 = frac_part.parse().ok()?;
            let denom = 10i64.checked_pow(frac_part.len() as u32)?;
            Some(rat_int(sign) * (rat_int(int_n) + rat(frac_n, denom)))
        }
    }
}

/// Binomial coefficient as a rational (small arguments only).
pub fn binomial(n: u32, k: u32) -> Rat {
    if k > n {
        return Rat::zero();
    }
    let mut acc = Rat::one();
    for i in 0..k {
        acc *= rat((n - i) as i64, (i + 1) as i64);
    }
    acc
}

/// Exact integer power of a rational.
pub fn rat_pow(base: &Rat, exp: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Formats a rational the way the surface syntax writes numbers: as an
/// integer when possible, otherwise as a decimal if the denominator is a
/// product of 2s and 5s, otherwise `n/d`.
pub fn rat_display(r: &Rat) -> String {
    if r.denom().is_one() {
        return r.numer().to_string();
    }
    let mut d = *r.denom();
    let mut pow10 = 1i64;
    while d % 2 == 0 {
        d /= 2;
        pow10 = match pow10.checked_mul(2) {
            Some(v) => v,
            None => return format!("{}/{}", r.numer(), r.denom()),
        };
    }
    while d % 5 == 0 {
        d /= 5;
        pow10 = match pow10.checked_mul(5) {
            Some(v) => v,
            None => return format!("{}/{}", r.numer(), r.denom()),
        };
    }
    if d != 1 {
        return format!("{}/{}", r.numer(), r.denom());
    }
    // Scale to a power of ten and print as decimal.
    let mut scale = 1i64;
    let mut digits = 0u32;
    while scale < pow10 * r.denom().abs() / r.denom().abs() {
        scale *= 10;
        digits += 1;
        if scale % r.denom() == 0 && scale / r.denom() * r.denom() == scale {
            break;
        }
    }
    // scale is now a power of ten divisible by denom
    while scale % r.denom() != 0 {
        scale *= 10;
        digits += 1;
    }
    let scaled = r.numer() * (scale / r.denom());
    let neg = scaled.is_negative();
    let abs = scaled.abs();
    let int_part = abs / scale;
    let frac_part = abs % scale;
    let frac_str = format!("{:0width$}", frac_part, width = digits as usize);
    let frac_str = frac_str.trim_end_matches('0');
    let body = if frac_str.is_empty() {
        format!("{}", int_part)
    } else {
        format!("{}.{}", int_part, frac_str)
    };
    if neg {
        format!("-{}", body)
    } else {
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_decimal("0.75"), Some(rat(3, 4)));
        assert_eq!(parse_decimal("-2"), Some(rat_int(-2)));
        assert_eq!(parse_decimal("200000000"), Some(rat_int(200_000_000)));
        assert_eq!(parse_decimal("1.5"), Some(rat(3, 2)));
        assert_eq!(parse_decimal("0.1"), Some(rat(1, 10)));
        assert_eq!(parse_decimal(".5"), Some(rat(1, 2)));
        assert_eq!(parse_decimal("1."), None);
        assert_eq!(parse_decimal("abc"), None);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), rat_int(10));
        assert_eq!(binomial(3, 0), rat_int(1));
        assert_eq!(binomial(2, 3), rat_int(0));
    }

    #[test]
    fn display_round_trips() {
        for s in ["0.75", "-2", "13", "0.5", "1048131068"] {
            let r = parse_decimal(s).unwrap();
            assert_eq!(parse_decimal(&rat_display(&r)), Some(r));
        }
        assert_eq!(rat_display(&rat(1, 3)), "1/3");
    }
}
