//! Residue arithmetic for the six cell rings and the CRT split between
//! Z/24 ≅ Z/8 × Z/3 and Z/12 ≅ Z/4 × Z/3.

use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("modulus mismatch: {0} vs {1}")]
    Mismatch(Modulus, Modulus),
    #[error("not a CRT-splittable ring: Z/{0}")]
    NotSplittable(Modulus),
    #[error("value {value} out of range for Z/{modulus}")]
    OutOfRange { value: i64, modulus: Modulus },
    #[error("unsupported modulus {0}")]
    BadModulus(u32),
}

/// One of the cell moduli of the shape table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modulus {
    Z2,
    Z3,
    Z4,
    Z8,
    Z12,
    Z24,
}

impl Modulus {
    pub const ALL: [Modulus; 6] = [
        Modulus::Z2,
        Modulus::Z3,
        Modulus::Z4,
        Modulus::Z8,
        Modulus::Z12,
        Modulus::Z24,
    ];

    pub const fn value(self) -> u32 {
        match self {
            Modulus::Z2 => 2,
            Modulus::Z3 => 3,
            Modulus::Z4 => 4,
            Modulus::Z8 => 8,
            Modulus::Z12 => 12,
            Modulus::Z24 => 24,
        }
    }

    pub fn from_value(m: u32) -> Result<Self, RingError> {
        Ok(match m {
            2 => Modulus::Z2,
            3 => Modulus::Z3,
            4 => Modulus::Z4,
            8 => Modulus::Z8,
            12 => Modulus::Z12,
            24 => Modulus::Z24,
            other => return Err(RingError::BadModulus(other)),
        })
    }

    pub fn reduce(self, x: i64) -> u32 {
        x.rem_euclid(self.value() as i64) as u32
    }

    pub fn is_unit(self, x: u32) -> bool {
        gcd(x as u64, self.value() as u64) == 1
    }

    /// The units of the ring in increasing order.
    pub fn units(self) -> impl Iterator<Item = u32> {
        let m = self.value();
        (1..m).filter(move |&x| gcd(x as u64, m as u64) == 1)
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// A canonical representative `0 <= value < modulus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Residue {
    value: u32,
    modulus: Modulus,
}

impl Residue {
    /// Reduces any integer into the ring.
    pub fn new(x: i64, modulus: Modulus) -> Self {
        Residue { value: modulus.reduce(x), modulus }
    }

    /// Accepts only canonical representatives.
    pub fn try_new(x: i64, modulus: Modulus) -> Result<Self, RingError> {
        if x < 0 || x >= modulus.value() as i64 {
            return Err(RingError::OutOfRange { value: x, modulus });
        }
        Ok(Residue { value: x as u32, modulus })
    }

    pub fn zero(modulus: Modulus) -> Self {
        Residue { value: 0, modulus }
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn modulus(self) -> Modulus {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn is_unit(self) -> bool {
        self.modulus.is_unit(self.value)
    }

    fn check(self, other: Residue) -> Result<(), RingError> {
        if self.modulus != other.modulus {
            Err(RingError::Mismatch(self.modulus, other.modulus))
        } else {
            Ok(())
        }
    }

    pub fn add(self, other: Residue) -> Result<Residue, RingError> {
        self.check(other)?;
        Ok(Residue::new(self.value as i64 + other.value as i64, self.modulus))
    }

    pub fn sub(self, other: Residue) -> Result<Residue, RingError> {
        self.check(other)?;
        Ok(Residue::new(self.value as i64 - other.value as i64, self.modulus))
    }

    pub fn mul(self, other: Residue) -> Result<Residue, RingError> {
        self.check(other)?;
        Ok(Residue::new(self.value as i64 * other.value as i64, self.modulus))
    }

    pub fn scale(self, k: i64) -> Residue {
        Residue::new(self.value as i64 * k, self.modulus)
    }

    pub fn neg(self) -> Residue {
        Residue::new(-(self.value as i64), self.modulus)
    }

    pub fn inverse(self) -> Option<Residue> {
        let m = self.modulus.value();
        (1..m)
            .find(|&y| (self.value * y) % m == 1)
            .map(|y| Residue { value: y, modulus: self.modulus })
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus)
    }
}

/// `u ↦ (u mod 8, u mod 3)` on Z/24 and `u ↦ (u mod 4, u mod 3)` on Z/12.
pub fn crt_split(u: Residue) -> Result<(Residue, Residue), RingError> {
    let two = match u.modulus {
        Modulus::Z24 => Modulus::Z8,
        Modulus::Z12 => Modulus::Z4,
        m => return Err(RingError::NotSplittable(m)),
    };
    Ok((
        Residue::new(u.value as i64, two),
        Residue::new(u.value as i64, Modulus::Z3),
    ))
}

/// `(a, b) ↦ 9a + 16b` into Z/24, or `9a + 4b` into Z/12.
pub fn crt_combine(a: Residue, b: Residue) -> Result<Residue, RingError> {
    if b.modulus != Modulus::Z3 {
        return Err(RingError::Mismatch(b.modulus, Modulus::Z3));
    }
    let (target, c) = match a.modulus {
        Modulus::Z8 => (Modulus::Z24, 16),
        Modulus::Z4 => (Modulus::Z12, 4),
        m => return Err(RingError::NotSplittable(m)),
    };
    Ok(Residue::new(9 * a.value as i64 + c * b.value as i64, target))
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// 3-adic valuation of a nonzero integer and its coprime-to-3 cofactor.
pub fn split_three(x: i64) -> (u32, i64) {
    debug_assert!(x != 0);
    let mut r = 0;
    let mut q = x;
    while q % 3 == 0 {
        q /= 3;
        r += 1;
    }
    (r, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_examples() {
        let (a, b) = crt_split(Residue::new(1, Modulus::Z24)).unwrap();
        assert_eq!((a.value(), b.value()), (1, 1));
        let (a, b) = crt_split(Residue::new(13, Modulus::Z24)).unwrap();
        assert_eq!((a.value(), a.modulus(), b.value()), (5, Modulus::Z8, 1));
        let (a, b) = crt_split(Residue::zero(Modulus::Z12)).unwrap();
        assert!(a.is_zero() && b.is_zero());
    }

    #[test]
    fn combine_examples() {
        let c = |a, ma, b| {
            crt_combine(Residue::new(a, ma), Residue::new(b, Modulus::Z3))
                .unwrap()
                .value()
        };
        assert_eq!(c(1, Modulus::Z8, 1), 1);
        assert_eq!(c(5, Modulus::Z8, 1), 13);
        assert_eq!(c(3, Modulus::Z4, 0), 3);
    }

    #[test]
    fn wrong_modulus_rejected() {
        for m in [Modulus::Z2, Modulus::Z3, Modulus::Z4, Modulus::Z8] {
            assert_eq!(
                crt_split(Residue::zero(m)),
                Err(RingError::NotSplittable(m))
            );
        }
        assert!(crt_combine(Residue::zero(Modulus::Z8), Residue::zero(Modulus::Z2)).is_err());
        assert!(crt_combine(Residue::zero(Modulus::Z2), Residue::zero(Modulus::Z3)).is_err());
    }

    #[test]
    fn exhaustive_round_trip() {
        for m in [Modulus::Z24, Modulus::Z12] {
            for u in 0..m.value() as i64 {
                let r = Residue::new(u, m);
                let (a, b) = crt_split(r).unwrap();
                assert_eq!(crt_combine(a, b).unwrap(), r);
            }
        }
    }

    #[test]
    fn exhaustive_homomorphism() {
        for (two, big) in [(Modulus::Z8, Modulus::Z24), (Modulus::Z4, Modulus::Z12)] {
            for a in 0..two.value() as i64 {
                for b in 0..3 {
                    let x = crt_combine(Residue::new(a, two), Residue::new(b, Modulus::Z3)).unwrap();
                    assert_eq!(x.modulus(), big);
                    assert_eq!(x.value() as i64 % two.value() as i64, a);
                    assert_eq!(x.value() as i64 % 3, b);
                    for a2 in 0..two.value() as i64 {
                        for b2 in 0..3 {
                            let y = crt_combine(Residue::new(a2, two), Residue::new(b2, Modulus::Z3))
                                .unwrap();
                            let s = crt_combine(
                                Residue::new(a + a2, two),
                                Residue::new(b + b2, Modulus::Z3),
                            )
                            .unwrap();
                            assert_eq!(s, x.add(y).unwrap());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mixing_is_an_error() {
        let a = Residue::new(1, Modulus::Z8);
        let b = Residue::new(1, Modulus::Z3);
        assert!(a.add(b).is_err());
        assert!(a.mul(b).is_err());
    }

    #[test]
    fn try_new_bounds() {
        assert!(Residue::try_new(24, Modulus::Z24).is_err());
        assert!(Residue::try_new(-1, Modulus::Z24).is_err());
        assert_eq!(Residue::try_new(23, Modulus::Z24).unwrap().value(), 23);
    }

    #[test]
    fn inverses() {
        for m in Modulus::ALL {
            for u in m.units() {
                let r = Residue::new(u as i64, m);
                assert_eq!(r.mul(r.inverse().unwrap()).unwrap().value(), 1);
            }
        }
        assert!(Residue::new(6, Modulus::Z24).inverse().is_none());
    }

    #[test]
    fn three_adic() {
        assert_eq!(split_three(54), (3, 2));
        assert_eq!(split_three(-5), (0, -5));
    }
}
