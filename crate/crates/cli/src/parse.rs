//! Parsers for command-line values. None of them panic on any input.

use qkzr::{Weight, C};

use crate::error::CliError;

fn invalid(what: &str, s: &str) -> CliError {
    CliError::ConfigInvalid(format!("cannot parse {what} from '{s}'"))
}

fn real(s: &str, what: &str, whole: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let bad = s.is_empty() || s.bytes().any(|b| b.is_ascii_alphabetic() && b != b'e' && b != b'E');
    match s.parse::<f64>() {
        Ok(x) if !bad && x.is_finite() => Ok(x),
        _ => Err(invalid(what, whole)),
    }
}

/// A complex number written as `a`, `bi`, `a+bi` or `a-bi`. A lone `i` means 1i.
pub fn parse_complex(s: &str) -> Result<C, CliError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix('i') else {
        return Ok(C::new(real(&t, "complex number", s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (real(&body[..k], "complex number", s)?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => real(x, "complex number", s)?,
    };
    Ok(C::new(re, im))
}

/// `a:b:N`, N equally spaced points from a to b inclusive. N = 0 is an empty grid.
pub fn parse_grid(s: &str) -> Result<Vec<C>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(invalid("grid a:b:N", s));
    };
    let a = parse_complex(a)?;
    let b = parse_complex(b)?;
    let n: usize = n.trim().parse().map_err(|_| invalid("grid point count", s))?;
    if n > 10_000_000 {
        return Err(CliError::ConfigInvalid(format!("grid of {n} points is too large")));
    }
    Ok(match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * (k as f64 / (n - 1) as f64)).collect(),
    })
}

/// Which matrix entries a scan reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Alpha,
    Beta,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntrySpec {
    pub m: usize,
    pub l: usize,
    pub kind: EntryKind,
}

/// `m=0,l=1,kind=beta`; keys in any order, `kind` is `alpha`, `beta` or `all` (default).
pub fn parse_entry(s: &str) -> Result<EntrySpec, CliError> {
    let (mut m, mut l, mut kind) = (None, None, EntryKind::All);
    for item in s.split(',') {
        let (k, v) = item.split_once('=').ok_or_else(|| invalid("entry key=value", s))?;
        match k.trim() {
            "m" => m = Some(v.trim().parse().map_err(|_| invalid("entry index m", s))?),
            "l" => l = Some(v.trim().parse().map_err(|_| invalid("entry index l", s))?),
            "kind" => {
                kind = match v.trim() {
                    "alpha" => EntryKind::Alpha,
                    "beta" => EntryKind::Beta,
                    "all" => EntryKind::All,
                    _ => return Err(invalid("entry kind", s)),
                }
            }
            _ => return Err(invalid("entry key", s)),
        }
    }
    let (Some(m), Some(l)) = (m, l) else {
        return Err(CliError::ConfigInvalid(format!("entry '{s}' needs both m and l")));
    };
    if m == l {
        return Err(CliError::ConfigInvalid(format!("entry '{s}' needs m != l")));
    }
    Ok(EntrySpec { m, l, kind })
}

/// How λ is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSpec {
    Random,
    Fixed(Weight),
}

/// `random`, or comma-separated coordinates λ_0,…,λ_n, optionally in brackets.
pub fn parse_lambda(s: &str) -> Result<LambdaSpec, CliError> {
    let t = s.trim();
    if t == "random" {
        return Ok(LambdaSpec::Random);
    }
    let t = t.strip_prefix('[').and_then(|x| x.strip_suffix(']')).unwrap_or(t);
    let coords = t.split(',').map(parse_complex).collect::<Result<Vec<_>, _>>()?;
    if coords.len() < 2 {
        return Err(CliError::ConfigInvalid(format!("lambda '{s}' needs at least two coordinates")));
    }
    Ok(LambdaSpec::Fixed(Weight(coords)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        let cases = [
            ("0.6", C::new(0.6, 0.0)),
            ("-1.7", C::new(-1.7, 0.0)),
            ("0.13+0.02i", C::new(0.13, 0.02)),
            ("0.13-0.02i", C::new(0.13, -0.02)),
            ("2i", C::new(0.0, 2.0)),
            ("-i", C::new(0.0, -1.0)),
            ("1e-3+2.5e-4i", C::new(1e-3, 2.5e-4)),
            ("1e+2-1E-1i", C::new(100.0, -0.1)),
            (" 1 + 2i ", C::new(1.0, 2.0)),
            ("3+i", C::new(3.0, 1.0)),
        ];
        for (s, want) in cases {
            assert_eq!(parse_complex(s).unwrap(), want, "{s}");
        }
        for bad in ["", "i i", "nan", "inf", "1+2", "1++2i", "abc", "1+2j", "+-i"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn grids() {
        let g = parse_grid("-0.5:0.5:200").unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], C::new(-0.5, 0.0));
        assert_eq!(g[199], C::new(0.5, 0.0));
        assert!(parse_grid("0:1:0").unwrap().is_empty());
        assert_eq!(parse_grid("0.1i:1:1").unwrap(), vec![C::new(0.0, 0.1)]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:-3").is_err());
    }

    #[test]
    fn entries() {
        assert_eq!(
            parse_entry("m=0,l=1,kind=beta").unwrap(),
            EntrySpec { m: 0, l: 1, kind: EntryKind::Beta }
        );
        assert_eq!(parse_entry("l=0, m=2").unwrap().kind, EntryKind::All);
        assert!(parse_entry("m=1,l=1").is_err());
        assert!(parse_entry("m=0").is_err());
        assert!(parse_entry("m=0,l=1,kind=gamma").is_err());
    }

    #[test]
    fn lambdas() {
        assert_eq!(parse_lambda("random").unwrap(), LambdaSpec::Random);
        let LambdaSpec::Fixed(w) = parse_lambda("[0.3+0.05i, -0.2]").unwrap() else { panic!() };
        assert_eq!(w.coords(), &[C::new(0.3, 0.05), C::new(-0.2, 0.0)]);
        assert!(parse_lambda("0.3").is_err());
    }
}
