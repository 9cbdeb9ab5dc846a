//! Integer-order Bessel functions of the first kind.
//!
//! Values come from Miller's backward recurrence normalised with
//! `J_0 + 2 Σ J_{2k} = 1`, which keeps full relative precision for the
//! moderate arguments (|x| ≲ 100) the landscape and rotating-frame
//! operators need.

/// `J_n(x)` for any integer order.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let order = n.unsigned_abs();
    // J_{-n} = (-1)^n J_n and J_n(-x) = (-1)^n J_n(x)
    let mut sign = 1.0;
    if n < 0 && order % 2 == 1 {
        sign = -sign;
    }
    if x < 0.0 && order % 2 == 1 {
        sign = -sign;
    }
    sign * bessel_j_nonneg(order, x.abs())
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel_j_nonneg(0, x.abs())
}

pub fn bessel_j1(x: f64) -> f64 {
    bessel_j(1, x)
}

/// `J_0''(x) = -(J_0(x) - J_2(x)) / 2`, regular at the origin.
pub fn bessel_j0_second_derivative(x: f64) -> f64 {
    let x = x.abs();
    let (j0, _, j2) = bessel_j012(x);
    -0.5 * (j0 - j2)
}

/// `(J_0, J_1, J_2)` from a single recurrence sweep.
pub fn bessel_j012(x: f64) -> (f64, f64, f64) {
    if x == 0.0 {
        return (1.0, 0.0, 0.0);
    }
    let xa = x.abs();
    let table = miller_table(2, xa);
    let s1 = if x < 0.0 { -1.0 } else { 1.0 };
    (table[0], s1 * table[1], table[2])
}

fn bessel_j_nonneg(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    miller_table(n, x)[n as usize]
}

/// Normalised values `J_0(x) ..= J_n(x)` for `x > 0`.
fn miller_table(n: u32, x: f64) -> Vec<f64> {
    const BIG: f64 = 1e250;
    let reach = (n as f64).max(x);
    let mut start = (reach + 30.0 + (40.0 * reach).sqrt()).ceil() as usize;
    start += start % 2;

    let mut out = vec![0.0; n as usize + 1];
    let mut above = 0.0; // J_{k+1}
    let mut current = 1e-300; // J_k
    let mut norm = 0.0;
    let two_over_x = 2.0 / x;
    for k in (1..=start).rev() {
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        // `current` now holds J_{k-1}
        let idx = k - 1;
        if idx <= n as usize {
            out[idx] = current;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * current;
        }
        if current.abs() > BIG {
            current /= BIG;
            above /= BIG;
            norm /= BIG;
            for v in out.iter_mut() {
                *v /= BIG;
            }
        }
    }
    norm += current;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(n: i32, x: f64) -> f64 {
        // sum_k (-1)^k (x/2)^{2k+n} / (k! (k+n)!)
        let half = x / 2.0;
        let mut term = half.powi(n);
        for i in 1..=n {
            term /= i as f64;
        }
        let mut sum = term;
        for k in 1..200 {
            term *= -half * half / (k as f64 * (k + n) as f64);
            sum += term;
            if term.abs() < 1e-300 {
                break;
            }
        }
        sum
    }

    #[test]
    fn matches_power_series() {
        for n in 0..12 {
            for i in 0..60 {
                let x = 0.05 + 0.2 * i as f64;
                let diff = (bessel_j(n, x) - series(n, x)).abs();
                assert!(diff < 1e-12, "n={n} x={x} diff={diff}");
            }
        }
    }

    #[test]
    fn reference_values() {
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-15);
        assert_eq!(bessel_j0(0.0), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
    }

    #[test]
    fn symmetries() {
        for &x in &[0.3, 2.7, 9.1] {
            assert_eq!(bessel_j0(x), bessel_j0(-x));
            assert!((bessel_j(-3, x) + bessel_j(3, x)).abs() < 1e-16);
            assert!((bessel_j(2, -x) - bessel_j(2, x)).abs() < 1e-16);
            assert!((bessel_j(5, -x) + bessel_j(5, x)).abs() < 1e-16);
        }
    }

    #[test]
    fn large_order_is_tiny_but_finite() {
        let v = bessel_j(40, 12.6);
        assert!(v.is_finite() && v.abs() < 1e-15 && v > 0.0);
    }

    #[test]
    fn second_derivative_by_differences() {
        for &x in &[0.0, 0.4, 3.3, 7.9] {
            let d = 1e-4;
            let fd = (bessel_j0(x + d) - 2.0 * bessel_j0(x) + bessel_j0(x - d)) / (d * d);
            assert!((fd - bessel_j0_second_derivative(x)).abs() < 1e-6);
        }
    }
}
