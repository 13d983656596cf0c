//! Exact rational helpers used for all bit accounting.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

pub type Rational = Ratio<i128>;

/// Significant digits used whenever a rational is rendered as a decimal.
pub const DISPLAY_DIGITS: usize = 12;

pub fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

/// Renders `r` with `sig` significant digits (round half away from zero),
/// trailing fractional zeros trimmed.
pub fn to_decimal(r: &Rational, sig: usize) -> String {
    assert!(sig > 0);
    if r.is_zero() {
        return "0".to_string();
    }
    let neg = r.is_negative();
    let num = BigInt::from(*r.numer()).abs();
    let den = BigInt::from(*r.denom()).abs();
    let ten = BigInt::from(10);

    // value = num / den; pick scale so that floor(value * 10^scale) has `sig` digits.
    let int_part = &num / &den;
    let mut scale: i64 = if !int_part.is_zero() {
        sig as i64 - int_part.to_string().len() as i64
    } else {
        let mut zeros = 0i64;
        let mut n = num.clone() * &ten;
        while n < den {
            n *= &ten;
            zeros += 1;
        }
        sig as i64 + zeros
    };

    let scaled = |scale: i64| -> BigInt {
        let (n, d) = if scale >= 0 {
            (&num * ten.pow(scale as u32), den.clone())
        } else {
            (num.clone(), &den * ten.pow((-scale) as u32))
        };
        let (q, rem) = n.div_rem(&d);
        if rem * 2 >= d {
            q + 1
        } else {
            q
        }
    };
    let mut q = scaled(scale);
    if q.to_string().len() > sig {
        scale -= 1;
        q = scaled(scale);
    }

    let digits = q.to_string();
    let mut out = if scale <= 0 {
        let mut s = digits;
        s.extend(std::iter::repeat_n('0', (-scale) as usize));
        s
    } else {
        let scale = scale as usize;
        let padded = if digits.len() <= scale {
            format!("{}{}", "0".repeat(scale - digits.len() + 1), digits)
        } else {
            digits
        };
        let (ip, fp) = padded.split_at(padded.len() - scale);
        let fp = fp.trim_end_matches('0');
        if fp.is_empty() {
            ip.to_string()
        } else {
            format!("{ip}.{fp}")
        }
    };
    if neg {
        out.insert(0, '-');
    }
    out
}

/// JSON rendering of an exact rational: numerator and denominator as strings
/// plus a display decimal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalJson {
    pub numerator: String,
    pub denominator: String,
    pub decimal: String,
}

impl From<&Rational> for RationalJson {
    fn from(r: &Rational) -> Self {
        Self {
            numerator: r.numer().to_string(),
            denominator: r.denom().to_string(),
            decimal: to_decimal(r, DISPLAY_DIGITS),
        }
    }
}

impl From<Rational> for RationalJson {
    fn from(r: Rational) -> Self {
        (&r).into()
    }
}

/// `"7/12"` style, or just the integer when the denominator is one.
pub fn fraction_string(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
