//! Serialize big integers as strings so exported JSON stays readable and
//! independent of the internal limb layout. Values up to 4096 bits print in
//! decimal; anything wider uses a 0x-prefixed hex form, because decimal
//! conversion is quadratic and plan positions grow doubly exponentially.

use num_bigint::BigUint;
use num_traits::Num;
use serde::{Deserialize, Deserializer, Serializer};

const DECIMAL_BITS: u64 = 4096;

pub fn to_string(n: &BigUint) -> String {
    if n.bits() <= DECIMAL_BITS {
        n.to_string()
    } else {
        format!("0x{}", n.to_str_radix(16))
    }
}

pub fn parse(s: &str) -> Option<BigUint> {
    match s.strip_prefix("0x") {
        Some(hex) => BigUint::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}

pub fn serialize<S: Serializer>(n: &BigUint, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(&to_string(n))
}

pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<BigUint, D::Error> {
    let s = String::deserialize(de)?;
    parse(&s).ok_or_else(|| serde::de::Error::custom("bad big integer string"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrips_both_forms() {
        let small = BigUint::from(12345u32);
        assert_eq!(parse(&to_string(&small)), Some(small));
        let huge = BigUint::from(1u8) << 60000;
        let s = to_string(&huge);
        assert!(s.starts_with("0x1"));
        assert_eq!(parse(&s), Some(huge));
    }
}
