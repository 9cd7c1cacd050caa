//! Number-mode abstraction: the solver pipeline runs either on exact
//! rationals or on `f64` with explicit tolerances.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;
pub type Int = num_bigint::BigInt;

/// Scalar type the LP solver and the flow pipeline are generic over.
///
/// `Rational` is the exact mode: `tol_zero()` is 0 and every comparison is
/// exact. `f64` is the approximate mode with a fixed 1e-9 tolerance.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Signed
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// True when arithmetic is exact (no tolerance needed anywhere).
    const EXACT: bool;

    fn from_rat(r: &Rational) -> Self;

    /// Exact conversion back to a rational (lossless for both modes).
    fn to_rat(&self) -> Rational;

    /// Threshold under which a magnitude counts as zero.
    fn tol_zero() -> Self;

    /// `self > tol_zero()` — "carries flow" test.
    fn is_pos(&self) -> bool {
        *self > Self::tol_zero()
    }

    /// `|self| <= tol_zero()`.
    fn is_zeroish(&self) -> bool {
        self.abs() <= Self::tol_zero()
    }

    /// `self -= a * b` without intermediate clones where the backing type
    /// supports reference arithmetic. This is the simplex pivot hot path.
    fn sub_prod_assign(&mut self, a: &Self, b: &Self);

    /// `self /= d`, reference-based.
    fn div_assign_ref(&mut self, d: &Self);
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rat(r: &Rational) -> Self {
        r.clone()
    }

    fn to_rat(&self) -> Rational {
        self.clone()
    }

    fn tol_zero() -> Self {
        Rational::zero()
    }

    fn sub_prod_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }

    fn div_assign_ref(&mut self, d: &Self) {
        *self /= d;
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rat(r: &Rational) -> Self {
        r.to_f64().expect("rational out of f64 range")
    }

    fn to_rat(&self) -> Rational {
        Rational::from_float(*self).expect("non-finite float in pipeline")
    }

    fn tol_zero() -> Self {
        1e-9
    }

    fn sub_prod_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }

    fn div_assign_ref(&mut self, d: &Self) {
        *self /= d;
    }
}

/// Exact rational backed by inline small values; the LP solver's hot-path
/// scalar. Converts losslessly to and from [`Rational`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FastRational(pub malachite::Rational);

mod fast_rational {
    use super::{FastRational, Rational, Scalar};
    use malachite::num::arithmetic::traits::Abs;
    use malachite::num::basic::traits::{One as MOne, Zero as MZero};
    use malachite::Natural;
    use num_bigint::{BigInt, BigUint, Sign};
    use num_traits::{Num, One, Signed, Zero};
    use std::ops::{Add, Div, Mul, Neg, Sub};

    fn natural_from_biguint(v: &BigUint) -> Natural {
        Natural::from_limbs_asc(&v.to_u64_digits())
    }

    fn biguint_from_natural(v: &Natural) -> BigUint {
        let mut bytes = Vec::new();
        for limb in v.to_limbs_asc() {
            bytes.extend_from_slice(&limb.to_le_bytes());
        }
        BigUint::from_bytes_le(&bytes)
    }

    impl Scalar for FastRational {
        const EXACT: bool = true;

        fn from_rat(r: &Rational) -> Self {
            let numer = natural_from_biguint(r.numer().magnitude());
            let denom = natural_from_biguint(r.denom().magnitude());
            let q = malachite::Rational::from_naturals(numer, denom);
            FastRational(if r.numer().sign() == Sign::Minus { -q } else { q })
        }

        fn to_rat(&self) -> Rational {
            let numer = BigInt::from_biguint(
                if self.0 < 0 { Sign::Minus } else { Sign::Plus },
                biguint_from_natural(self.0.numerator_ref()),
            );
            let denom = BigInt::from_biguint(
                Sign::Plus,
                biguint_from_natural(self.0.denominator_ref()),
            );
            // Already in lowest terms with a positive denominator.
            Rational::new_raw(numer, denom)
        }

        fn tol_zero() -> Self {
            FastRational(malachite::Rational::ZERO)
        }

        fn sub_prod_assign(&mut self, a: &Self, b: &Self) {
            self.0 -= &a.0 * &b.0;
        }

        fn div_assign_ref(&mut self, d: &Self) {
            self.0 /= &d.0;
        }
    }

    impl Add for FastRational {
        type Output = Self;
        fn add(self, o: Self) -> Self {
            FastRational(self.0 + o.0)
        }
    }

    impl Sub for FastRational {
        type Output = Self;
        fn sub(self, o: Self) -> Self {
            FastRational(self.0 - o.0)
        }
    }

    impl Mul for FastRational {
        type Output = Self;
        fn mul(self, o: Self) -> Self {
            FastRational(self.0 * o.0)
        }
    }

    impl Div for FastRational {
        type Output = Self;
        fn div(self, o: Self) -> Self {
            FastRational(self.0 / o.0)
        }
    }

    impl Neg for FastRational {
        type Output = Self;
        fn neg(self) -> Self {
            FastRational(-self.0)
        }
    }

    impl Zero for FastRational {
        fn zero() -> Self {
            FastRational(malachite::Rational::ZERO)
        }
        fn is_zero(&self) -> bool {
            self.0 == malachite::Rational::ZERO
        }
    }

    impl One for FastRational {
        fn one() -> Self {
            FastRational(malachite::Rational::ONE)
        }
        fn is_one(&self) -> bool {
            self.0 == malachite::Rational::ONE
        }
    }

    impl Num for FastRational {
        type FromStrRadixErr = ();
        fn from_str_radix(s: &str, radix: u32) -> Result<Self, ()> {
            if radix != 10 {
                return Err(());
            }
            s.parse::<malachite::Rational>()
                .map(FastRational)
                .map_err(|_| ())
        }
    }

    impl std::ops::Rem for FastRational {
        type Output = Self;
        fn rem(self, _o: Self) -> Self {
            // Rationals divide exactly; Num demands the operator.
            FastRational(malachite::Rational::ZERO)
        }
    }

    impl Signed for FastRational {
        fn abs(&self) -> Self {
            FastRational((&self.0).abs())
        }
        fn abs_sub(&self, o: &Self) -> Self {
            if self.0 <= o.0 {
                Self::zero()
            } else {
                FastRational(&self.0 - &o.0)
            }
        }
        fn signum(&self) -> Self {
            use std::cmp::Ordering;
            match self.0.partial_cmp(&malachite::Rational::ZERO) {
                Some(Ordering::Greater) => Self::one(),
                Some(Ordering::Less) => -Self::one(),
                _ => Self::zero(),
            }
        }
        fn is_positive(&self) -> bool {
            self.0 > malachite::Rational::ZERO
        }
        fn is_negative(&self) -> bool {
            self.0 < malachite::Rational::ZERO
        }
    }
}

/// Exact `min` for partially ordered scalars (both modes are totally
/// ordered in practice; NaN would be a bug upstream).
pub fn min_s<S: Scalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}

/// Exact `max`, same caveat as [`min_s`].
pub fn max_s<S: Scalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}
