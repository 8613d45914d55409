//! Scalar abstraction: everything numeric in this crate is generic over a
//! floating-point type so the same code runs at f32 or f64 precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float as NumFloat, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the engine computes with: f32 or f64.
pub trait Float:
    NumFloat + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Cast an f64 constant into the working scalar.
    fn real(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    /// Cast a count into the working scalar.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl<T> Float for T where
    T: NumFloat
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Minimal absolute difference between two angles, in [0, pi].
///
/// Computed from `|a - b|` so the result is bit-identical under argument
/// swap.
pub fn angle_diff<F: Float>(a: F, b: F) -> F {
    let two_pi = F::real(std::f64::consts::TAU);
    let d = (a - b).abs() % two_pi;
    if d > F::real(std::f64::consts::PI) {
        two_pi - d
    } else {
        d
    }
}

/// Normalize an angle into [0, 2*pi).
pub fn wrap_angle<F: Float>(a: F) -> F {
    let two_pi = F::real(std::f64::consts::TAU);
    let mut w = a % two_pi;
    if w < F::zero() {
        w += two_pi;
    }
    // `% two_pi` can round back up to the modulus itself.
    if w >= two_pi {
        w = F::zero();
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angle_diff_is_minimal() {
        assert!((angle_diff(0.0, PI) - PI).abs() < 1e-12);
        assert!((angle_diff(0.1, 2.0 * PI - 0.1) - 0.2).abs() < 1e-12);
        assert!(angle_diff(1.0, 1.0).abs() < 1e-12);
        assert!((angle_diff(0.0, PI / 2.0) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn angle_diff_is_symmetric() {
        for i in 0..32 {
            let a = i as f64 * 0.41;
            let b = (i as f64).sin() * 3.0;
            assert_eq!(angle_diff(a, b), angle_diff(b, a));
        }
    }

    #[test]
    fn wrap_into_range() {
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!(wrap_angle(2.0 * PI).abs() < 1e-12);
        assert!((wrap_angle(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-12);
        for i in -20..20 {
            let w: f64 = wrap_angle(i as f64 * 0.7);
            assert!((0.0..2.0 * PI).contains(&w));
        }
    }
}
