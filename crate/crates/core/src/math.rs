// Float routines that are not available in `core`.

use core::f64::consts::{PI, TAU};

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    #[cfg(any(feature = "std", test))]
    return x.sqrt();
    #[cfg(not(any(feature = "std", test)))]
    return libm::sqrt(x);
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    #[cfg(any(feature = "std", test))]
    return x.sin();
    #[cfg(not(any(feature = "std", test)))]
    return libm::sin(x);
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    #[cfg(any(feature = "std", test))]
    return x.cos();
    #[cfg(not(any(feature = "std", test)))]
    return libm::cos(x);
}

#[inline]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    #[cfg(any(feature = "std", test))]
    return y.atan2(x);
    #[cfg(not(any(feature = "std", test)))]
    return libm::atan2(y, x);
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    // Planar distances here are far from overflow, so the plain form is enough.
    sqrt(x * x + y * y)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    f64::from_bits(x.to_bits() & !(1u64 << 63))
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    #[cfg(any(feature = "std", test))]
    return x.floor();
    #[cfg(not(any(feature = "std", test)))]
    return libm::floor(x);
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    #[cfg(any(feature = "std", test))]
    return x.ceil();
    #[cfg(not(any(feature = "std", test)))]
    return libm::ceil(x);
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    #[cfg(any(feature = "std", test))]
    return x.round();
    #[cfg(not(any(feature = "std", test)))]
    return libm::round(x);
}

#[inline]
pub(crate) fn exp2(x: f64) -> f64 {
    #[cfg(any(feature = "std", test))]
    return x.exp2();
    #[cfg(not(any(feature = "std", test)))]
    return libm::exp2(x);
}

/// Wraps an angle into `(-pi, pi]`.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let w = a - TAU * ceil((a - PI) / TAU);
    // `ceil` can land one period off for values a hair above an odd multiple of pi.
    if w <= -PI {
        w + TAU
    } else if w > PI {
        w - TAU
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(1.5 * PI) + 0.5 * PI).abs() < 1e-12);
        assert!((wrap_angle(7.0 * PI) - PI).abs() < 1e-12);
        for k in -50..50 {
            let a = k as f64 * 0.37;
            let w = wrap_angle(a);
            assert!(w > -PI && w <= PI);
            assert!((sin(w) - sin(a)).abs() < 1e-9 && (cos(w) - cos(a)).abs() < 1e-9);
        }
    }
}
