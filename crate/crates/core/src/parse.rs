//! Scalar grammar shared by the law, scheme and CSV readers.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Finite decimal real.
pub fn parse_real(s: &str) -> Result<f64> {
    let t = s.trim();
    let v: f64 = t
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: {t:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite number: {t:?}")));
    }
    Ok(v)
}

/// Complex literal `re+imi` / `re-imi`; a bare real or a bare `imi` is
/// also accepted, and an empty imaginary magnitude means 1 (`1+i`).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty complex literal".into()));
    }
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(parse_real(t)?, 0.0));
    };
    // Split at the last sign that is not a leading sign or an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (parse_real(&body[..k])?, imag_part(&body[k..])?),
        None => (0.0, imag_part(body)?),
    };
    Ok(Complex64::new(re, im))
}

fn imag_part(s: &str) -> Result<f64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    match s.as_str() {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => parse_real(&s),
    }
}

/// Shortest round-trip decimal; negative zero prints as `0`.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

pub fn fmt_complex(z: Complex64) -> String {
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    if im.is_sign_negative() {
        format!("{}{}i", fmt_real(z.re), fmt_real(im))
    } else {
        format!("{}+{}i", fmt_real(z.re), fmt_real(im))
    }
}
