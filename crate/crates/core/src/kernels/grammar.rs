//! `name[:key=value,...]` kernel specifications, e.g. `sign`,
//! `power_even:r=0.25`, `linear:c=1.0`, `hermite:l=2`, `series:c1=0.5,c3=0.1`.
//!
//! Names and keys are case-insensitive. Singular kernels also accept
//! `at_zero=<value>`. Parsed kernels are centered.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{center, KernelDescriptor, KernelVariant};
use crate::{Error, Result};

fn spec_err(msg: impl Into<String>) -> Error {
    Error::KernelSpec(msg.into())
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| spec_err(format!("{key}: '{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(spec_err(format!("{key}: value must be finite")));
    }
    Ok(x)
}

struct Args(BTreeMap<String, String>);

impl Args {
    fn parse(rest: Option<&str>) -> Result<Self> {
        let mut map = BTreeMap::new();
        if let Some(rest) = rest {
            for part in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| spec_err(format!("expected key=value, got '{part}'")))?;
                let k = k.trim().to_ascii_lowercase();
                if map.insert(k.clone(), v.trim().to_string()).is_some() {
                    return Err(spec_err(format!("duplicate key '{k}'")));
                }
            }
        }
        Ok(Self(map))
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn required(&mut self, key: &str, kernel: &str) -> Result<f64> {
        let v = self
            .take(key)
            .ok_or_else(|| spec_err(format!("{kernel} needs {key}=<value>")))?;
        parse_f64(key, &v)
    }

    fn at_zero(&mut self) -> Result<Option<f64>> {
        self.take("at_zero").map(|v| parse_f64("at_zero", &v)).transpose()
    }

    fn finish(self, kernel: &str) -> Result<()> {
        match self.0.keys().next() {
            Some(k) => Err(spec_err(format!("unknown key '{k}' for {kernel}"))),
            None => Ok(()),
        }
    }
}

impl FromStr for KernelDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s, None),
        };
        let name = name.trim().to_ascii_lowercase().replace('-', "_");
        let mut args = Args::parse(rest)?;
        let k = match name.as_str() {
            "sign" => {
                let z = args.at_zero()?;
                args.finish("sign")?;
                KernelDescriptor::sign().with_value_at_zero(z.unwrap_or(0.0))
            }
            "power_even" | "power_odd" => {
                let r = args.required("r", &name)?;
                let z = args.at_zero()?;
                args.finish(&name)?;
                let k = if name == "power_even" {
                    KernelDescriptor::power_even(r)
                } else {
                    KernelDescriptor::power_odd(r)
                }
                .map_err(|e| spec_err(e.to_string()))?;
                k.with_value_at_zero(z.unwrap_or(0.0))
            }
            "linear" => {
                let c = args.required("c", "linear")?;
                args.finish("linear")?;
                KernelDescriptor::linear(c)?
            }
            "hermite" => {
                let l = args
                    .take("l")
                    .ok_or_else(|| spec_err("hermite needs l=<degree>"))?;
                let l: usize = l
                    .trim()
                    .parse()
                    .map_err(|_| spec_err(format!("l: '{l}' is not a non-negative integer")))?;
                args.finish("hermite")?;
                KernelDescriptor::hermite(l)?
            }
            "series" => {
                let mut coeffs = Vec::new();
                for (k, v) in std::mem::take(&mut args.0) {
                    let idx: usize = k
                        .strip_prefix('c')
                        .and_then(|d| d.parse().ok())
                        .ok_or_else(|| spec_err(format!("unknown key '{k}' for series (expected c<degree>)")))?;
                    if idx > crate::poly_basis::MAX_DEGREE {
                        return Err(Error::DegreeCap {
                            degree: idx,
                            cap: crate::poly_basis::MAX_DEGREE,
                        });
                    }
                    if coeffs.len() <= idx {
                        coeffs.resize(idx + 1, 0.0);
                    }
                    coeffs[idx] = parse_f64(&k, &v)?;
                }
                if coeffs.is_empty() {
                    return Err(spec_err("series needs at least one c<degree>=<value>"));
                }
                KernelDescriptor::series(coeffs)?
            }
            "custom" => return Err(spec_err("custom kernels are built programmatically")),
            other => return Err(spec_err(format!("unknown kernel '{other}'"))),
        };
        center(&k)
    }
}

impl fmt::Display for KernelDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let zero = |f: &mut fmt::Formatter<'_>, first: bool| {
            if self.value_at_zero != 0.0 {
                write!(f, "{}at_zero={}", if first { ":" } else { "," }, self.value_at_zero)
            } else {
                Ok(())
            }
        };
        match &self.variant {
            KernelVariant::Sign => {
                write!(f, "sign")?;
                zero(f, true)
            }
            KernelVariant::PowerEven { r } => {
                write!(f, "power_even:r={r}")?;
                zero(f, false)
            }
            KernelVariant::PowerOdd { r } => {
                write!(f, "power_odd:r={r}")?;
                zero(f, false)
            }
            KernelVariant::Linear { c } => write!(f, "linear:c={c}"),
            KernelVariant::HermiteUnit { degree } => write!(f, "hermite:l={degree}"),
            KernelVariant::Series { coeffs } => {
                write!(f, "series")?;
                let mut sep = ':';
                for (l, c) in coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0) {
                    write!(f, "{sep}c{l}={c}")?;
                    sep = ',';
                }
                Ok(())
            }
            KernelVariant::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::kernel_eval;

    #[test]
    fn parses_catalog() {
        for s in ["sign", "power_even:r=0.25", "power_odd:r=0.25", "linear:c=1", "hermite:l=2", "series:c1=0.5,c3=0.1"] {
            let k: KernelDescriptor = s.parse().unwrap();
            let again: KernelDescriptor = k.to_string().parse().unwrap();
            assert_eq!(k.to_string(), again.to_string());
        }
    }

    #[test]
    fn case_insensitive() {
        let k: KernelDescriptor = "Power_Odd:R=0.25".parse().unwrap();
        assert_eq!(k.to_string(), "power_odd:r=0.25");
        let k: KernelDescriptor = "SIGN".parse().unwrap();
        assert_eq!(kernel_eval(&k, 2.0), 1.0);
    }

    #[test]
    fn parsed_power_even_is_centered() {
        let k: KernelDescriptor = "power_even:r=0.25".parse().unwrap();
        assert!((kernel_eval(&k, 1.0) + 0.22637).abs() < 1e-5);
    }

    #[test]
    fn series_layout() {
        let k: KernelDescriptor = "series:c3=0.1,c1=0.5".parse().unwrap();
        match k.variant() {
            KernelVariant::Series { coeffs } => assert_eq!(coeffs, &vec![0.0, 0.5, 0.0, 0.1]),
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn at_zero_round_trips() {
        let k: KernelDescriptor = "power_odd:r=0.2,at_zero=1.5".parse().unwrap();
        assert_eq!(kernel_eval(&k, 0.0), 1.5);
        assert_eq!(k.to_string(), "power_odd:r=0.2,at_zero=1.5");
    }

    #[test]
    fn rejects_bad_specs() {
        for s in [
            "sine",
            "sign:r=1",
            "power_even",
            "power_even:r=0.7",
            "power_odd:r=abc",
            "linear:c=1,d=2",
            "linear:c=inf",
            "hermite:l=-1",
            "hermite:l=65",
            "series",
            "series:x1=2",
            "linear:c=1,c=2",
            "custom",
        ] {
            assert!(s.parse::<KernelDescriptor>().is_err(), "{s}");
        }
    }
}
