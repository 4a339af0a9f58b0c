//! SI quantities in config files: plain numbers, or strings with an
//! optional metric prefix and unit symbol such as `"7.8nW"`, `"40 mK"`,
//! `"6.707GHz"` or `"85pg"`.

use std::fmt;
use std::marker::PhantomData;

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

/// Physical dimension of a config value.
pub trait Dimension {
    /// Unit symbol, without prefix.
    const SYMBOL: &'static str;
    /// Decimal exponent of one `SYMBOL` in SI base units.
    const SCALE_EXP: i32 = 0;
    const NAME: &'static str;
}

macro_rules! dimension {
    ($ty:ident, $sym:literal, $scale:expr, $name:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $ty;
        impl Dimension for $ty {
            const SYMBOL: &'static str = $sym;
            const SCALE_EXP: i32 = $scale;
            const NAME: &'static str = $name;
        }
    };
}

dimension!(Hertz, "Hz", 0, "frequency");
dimension!(Watt, "W", 0, "power");
dimension!(Kelvin, "K", 0, "temperature");
// Mass prefixes attach to the gram: "85pg", "1kg".
dimension!(Kilogram, "g", -3, "mass");

const PREFIXES: &[(&str, i32)] = &[
    ("y", -24),
    ("z", -21),
    ("a", -18),
    ("f", -15),
    ("p", -12),
    ("n", -9),
    ("u", -6),
    ("µ", -6),
    ("μ", -6),
    ("m", -3),
    ("k", 3),
    ("M", 6),
    ("G", 9),
    ("T", 12),
];

fn split_number(s: &str) -> (&str, &str) {
    let bytes = s.as_bytes();
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
        i += 1;
    }
    // Exponent only if followed by digits, so "1e-3" parses but "1eV" would not.
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    (&s[..i], &s[i..])
}

/// Parses a number with optional `<prefix><symbol>` suffix into SI units.
pub fn parse_quantity<D: Dimension>(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let (number, suffix) = split_number(text);
    let bad = || format!("`{text}` is not a {} value", D::NAME);
    let value: f64 = number.parse().map_err(|_| bad())?;
    let suffix = suffix.trim();
    let exp = if suffix.is_empty() {
        // Bare numbers are already SI.
        return Ok(value);
    } else if suffix == D::SYMBOL {
        D::SCALE_EXP
    } else {
        let unit = suffix
            .strip_suffix(D::SYMBOL)
            .ok_or_else(|| format!("`{text}`: expected unit {}", expected_unit::<D>()))?;
        let (_, exp) = PREFIXES
            .iter()
            .find(|(p, _)| *p == unit)
            .ok_or_else(|| format!("`{text}`: unknown metric prefix `{unit}`"))?;
        exp + D::SCALE_EXP
    };
    // Shift the decimal exponent and reparse so "10fW" is exactly 1e-14.
    let (mantissa, own_exp) = match number.find(['e', 'E']) {
        Some(i) => (&number[..i], number[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (number, 0),
    };
    format!("{mantissa}e{}", own_exp + exp).parse().map_err(|_| bad())
}

fn expected_unit<D: Dimension>() -> &'static str {
    if D::SYMBOL == "g" {
        "kg (or a prefixed gram such as pg)"
    } else {
        D::SYMBOL
    }
}

/// A config value in SI units of dimension `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity<D>(pub f64, PhantomData<D>);

impl<D> Quantity<D> {
    pub fn new(value: f64) -> Self {
        Self(value, PhantomData)
    }
    pub fn get(self) -> f64 {
        self.0
    }
}

impl<'de, D: Dimension> Deserialize<'de> for Quantity<D> {
    fn deserialize<De: Deserializer<'de>>(deserializer: De) -> Result<Self, De::Error> {
        struct QuantityVisitor<D>(PhantomData<D>);

        impl<D: Dimension> Visitor<'_> for QuantityVisitor<D> {
            type Value = Quantity<D>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a {} in SI units or a string like \"7.8n{}\"", D::NAME, D::SYMBOL)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Ok(Quantity::new(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Ok(Quantity::new(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(Quantity::new(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                parse_quantity::<D>(v).map(Quantity::new).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(QuantityVisitor(PhantomData))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        ((a - b) / b).abs() < 1e-14
    }

    #[test]
    fn prefixed_values() {
        assert!(close(parse_quantity::<Watt>("7.8nW").unwrap(), 7.8e-9));
        assert!(close(parse_quantity::<Watt>("91.4 fW").unwrap(), 91.4e-15));
        assert!(close(parse_quantity::<Hertz>("6.707GHz").unwrap(), 6.707e9));
        assert!(close(parse_quantity::<Kelvin>("40mK").unwrap(), 0.04));
        assert!(close(parse_quantity::<Kilogram>("85pg").unwrap(), 85e-15));
        assert!(close(parse_quantity::<Kilogram>("2kg").unwrap(), 2.0));
        assert!(close(parse_quantity::<Hertz>("1e6").unwrap(), 1e6));
        assert!(close(parse_quantity::<Hertz>("2.5e3kHz").unwrap(), 2.5e6));
        assert!(close(parse_quantity::<Hertz>("24.4Hz").unwrap(), 24.4));
    }

    #[test]
    fn rejects_wrong_units() {
        assert!(parse_quantity::<Watt>("7.8nHz").is_err());
        assert!(parse_quantity::<Watt>("7.8xW").is_err());
        assert!(parse_quantity::<Kelvin>("warm").is_err());
    }
}
