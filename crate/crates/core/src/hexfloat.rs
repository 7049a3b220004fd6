//! Hexadecimal float text, exact in both directions.

use crate::error::{Error, Result};

pub fn format(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mut mant = bits & ((1u64 << 52) - 1);
    if exp == 0 && mant == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 {
        (0, -1022)
    } else {
        (1, exp - 1023)
    };
    let mut digits = 13;
    while digits > 0 && mant & 0xf == 0 {
        mant >>= 4;
        digits -= 1;
    }
    if digits == 0 {
        format!("{sign}0x{lead}p{e:+}")
    } else {
        format!("{sign}0x{lead}.{mant:0digits$x}p{e:+}")
    }
}

pub fn parse(s: &str) -> Result<f64> {
    let t = s.trim();
    match t {
        "nan" => return Ok(f64::NAN),
        "inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    let lower = t.to_ascii_lowercase();
    if lower.contains("0x") {
        // the parser rejects an explicit '+' in the exponent
        let cleaned = lower.replace("p+", "p");
        hexf_parse::parse_hexf64(&cleaned, false)
            .map_err(|e| Error::Catalog(format!("bad hex float {t:?}: {e}")))
    } else {
        t.parse::<f64>()
            .map_err(|e| Error::Catalog(format!("bad number {t:?}: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let vals = [
            0.0,
            -0.0,
            1.0,
            -2.5,
            0.1,
            std::f64::consts::PI,
            f64::MIN_POSITIVE,
            f64::MIN_POSITIVE / 3.0,
            f64::MAX,
            -1e-300,
        ];
        for v in vals {
            let s = format(v);
            let back = parse(&s).unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s}");
        }
        assert_eq!(format(1.5), "0x1.8p+0");
        assert_eq!(format(-4.0), "-0x1p+2");
        assert_eq!(parse("2.25").unwrap(), 2.25);
        assert!(parse("0xzz").is_err());
    }
}
