use num_bigint::BigUint;
use num_traits::One;

use crate::{Error, Result};

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of degree-`l` spherical harmonics in `p` variables:
/// `C(p+l-1, l) - C(p+l-3, l-2)` for `l >= 2`, `p` for `l = 1`, `1` for `l = 0`.
pub fn jl_dimension(l: usize, p: usize) -> Result<BigUint> {
    if p < 2 {
        return Err(Error::invalid("spherical harmonics need p >= 2"));
    }
    let (l, p) = (l as u64, p as u64);
    Ok(match l {
        0 => BigUint::one(),
        1 => BigUint::from(p),
        _ => binomial(p + l - 1, l) - binomial(p + l - 3, l - 2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(jl_dimension(0, 7).unwrap(), BigUint::from(1u32));
        assert_eq!(jl_dimension(1, 7).unwrap(), BigUint::from(7u32));
        assert_eq!(jl_dimension(2, 3).unwrap(), BigUint::from(5u32));
    }

    #[test]
    fn classical_three_dimensional_count() {
        // 2l + 1 harmonics of degree l on the 2-sphere
        for l in 0..40usize {
            assert_eq!(jl_dimension(l, 3).unwrap(), BigUint::from(2 * l as u64 + 1));
        }
    }

    #[test]
    fn circle_has_two_per_degree() {
        for l in 1..20usize {
            assert_eq!(jl_dimension(l, 2).unwrap(), BigUint::from(2u32));
        }
    }

    #[test]
    fn large_arguments_do_not_overflow() {
        let d = jl_dimension(60, 100_000).unwrap();
        assert!(d.bits() > 64);
    }

    #[test]
    fn leading_order_is_p_to_the_l_over_l_factorial() {
        let p = 1_000_000usize;
        for l in 2..6usize {
            let d: f64 = jl_dimension(l, p).unwrap().to_string().parse().unwrap();
            let lead = (p as f64).powi(l as i32) / (1..=l).product::<usize>() as f64;
            assert!((d / lead - 1.0).abs() < 1e-4 * l as f64);
        }
    }

    #[test]
    fn rejects_p_below_two() {
        assert!(jl_dimension(2, 1).is_err());
    }
}
