//! Continued-fraction reconstruction of rationals with bounded denominators.

/// Convergents `p/q` of the continued fraction of `x`, up to denominator `max_den`.
pub fn convergents(x: f64, max_den: u64) -> Vec<(i64, u64)> {
    let mut out = Vec::new();
    if !x.is_finite() {
        return out;
    }
    let (mut p0, mut q0, mut p1, mut q1): (i128, i128, i128, i128) = (0, 1, 1, 0);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let p2 = ai * p1 + p0;
        let q2 = ai * q1 + q0;
        if q2 > max_den as i128 || p2.abs() > i64::MAX as i128 {
            break;
        }
        out.push((p2 as i64, q2 as u64));
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    out
}

/// The convergent of smallest denominator within `tol` of `x`, or the last
/// convergent with denominator at most `max_den` if none is that close.
pub fn reconstruct(x: f64, max_den: u64, tol: f64) -> Option<(i64, u64)> {
    let cs = convergents(x, max_den);
    cs.iter().copied().find(|&(p, q)| (x - p as f64 / q as f64).abs() <= tol).or_else(|| cs.last().copied())
}

pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Least common multiple, `None` on overflow.
pub fn lcm(a: u64, b: u64) -> Option<u64> {
    if a == 0 || b == 0 {
        return Some(a.max(b));
    }
    (a / gcd(a, b)).checked_mul(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_fractions() {
        assert_eq!(reconstruct(2.0 / 9.0, 100, 1e-12), Some((2, 9)));
        assert_eq!(reconstruct(-4.0 / 9.0, 100, 1e-12), Some((-4, 9)));
        assert_eq!(reconstruct(0.0, 100, 1e-12), Some((0, 1)));
        assert_eq!(reconstruct(3.0, 100, 1e-12), Some((3, 1)));
        assert_eq!(reconstruct(0.6 + 1e-13, 100, 1e-10), Some((3, 5)));
    }

    #[test]
    fn denominator_bound() {
        assert_eq!(reconstruct(std::f64::consts::PI, 100, 1e-12), Some((22, 7)));
        assert_eq!(reconstruct(std::f64::consts::PI, 1000, 1e-12), Some((355, 113)));
        assert_eq!(reconstruct(std::f64::consts::PI, 5, 1e-12), Some((3, 1)));
    }

    #[test]
    fn lcm_and_gcd() {
        assert_eq!(gcd(12, 18), 6);
        assert_eq!(lcm(4, 6), Some(12));
        assert_eq!(lcm(1, 9), Some(9));
        assert_eq!(lcm(u64::MAX, u64::MAX - 1), None);
    }
}
