#![allow(dead_code)]

//! Exact-arithmetic Bessel oracle shared by the integration tests. `J_n(x)`
//! is summed as a rational power series with `x = p/q`, then converted once to
//! `f64`, so the reference carries no floating-point cancellation even at
//! `|x| = 20`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `J_n(p/q)` to well below 1e−16 absolute, `n ≥ 0`.
pub fn bessel_j(n: u32, p: i64, q: i64) -> f64 {
    let half = BigRational::new(BigInt::from(p), BigInt::from(2 * q));
    let half_sq = &half * &half;
    let mut term = BigRational::one();
    for k in 1..=n {
        term = term * &half / BigRational::from_integer(BigInt::from(k));
    }
    let eps = BigRational::new(BigInt::one(), BigInt::from(10).pow(24));
    let mut sum = BigRational::zero();
    let mut m: u64 = 0;
    loop {
        sum += &term;
        m += 1;
        term = -term * &half_sq / BigRational::from_integer(BigInt::from(m * (m + n as u64)));
        // the tail is bounded by the first dropped term once terms shrink
        if m as f64 > (p.abs() as f64 / q as f64) && term.abs() < eps {
            break;
        }
    }
    sum.to_f64().expect("finite")
}

pub fn bessel_j_signed(n: i64, p: i64, q: i64) -> f64 {
    let v = bessel_j(n.unsigned_abs() as u32, p, q);
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}
