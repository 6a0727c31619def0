//! Periodic continued fractions of quadratic surds and fundamental units.
//!
//! For a non-square d the surd `omega = sqrt(d)` (or `(1+sqrt(d))/2` when
//! d = 1 mod 4) has expansion `[u0; u1, ..., us]` with a purely periodic
//! tail.  The convergents `p_j/q_j` give the elements
//! `alpha_j = p_j - q_j * omega'`, and `alpha_{s-1}` is the fundamental
//! unit of Q(sqrt(d)).

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::intmath::is_squarefree;

/// Which surd is being expanded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    /// omega = sqrt(d), for d = 2, 3 mod 4.
    Sqrt,
    /// omega = (1 + sqrt(d))/2, for d = 1 mod 4.
    Half,
}

impl Mode {
    /// The mode matching the ring of integers of Q(sqrt(d)).
    pub fn for_disc(d: u64) -> Mode {
        if d % 4 == 1 {
            Mode::Half
        } else {
            Mode::Sqrt
        }
    }
}

/// Periodic continued fraction `[u0; period...]` of a quadratic surd, with
/// the period starting immediately after u0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfExpansion {
    pub d: u64,
    pub mode: Mode,
    pub u0: u64,
    /// The repeating block (u_1, ..., u_s).
    pub period: Vec<u64>,
}

impl CfExpansion {
    /// Period length s.
    pub fn s(&self) -> usize {
        self.period.len()
    }

    /// Partial quotient u_j for j >= 0, following the period cyclically.
    pub fn u(&self, j: usize) -> u64 {
        if j == 0 {
            self.u0
        } else {
            self.period[(j - 1) % self.period.len()]
        }
    }

    /// The symmetric inner word (u_1, ..., u_{s-1}).
    pub fn inner_word(&self) -> &[u64] {
        &self.period[..self.period.len() - 1]
    }
}

/// Fundamental unit (x + y sqrt(d)) / 2 with x^2 - d y^2 = 4 * norm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitRep {
    pub x: BigInt,
    pub y: BigInt,
    pub d: u64,
    pub norm: i32,
}

impl UnitRep {
    /// log epsilon, stable for units of any size: with x^2 - d y^2 = 4n,
    /// epsilon = (x + sqrt(x^2 - 4n)) / 2.
    pub fn regulator(&self) -> f64 {
        let lx = big_ln(&self.x);
        let t = 4.0 * self.norm as f64 * (-2.0 * lx).exp();
        lx + ((1.0 + (1.0 - t).sqrt()) / 2.0).ln()
    }
}

/// Natural log of a positive big integer, exact to f64 precision at any
/// size.
pub fn big_ln(n: &BigInt) -> f64 {
    assert!(n.is_positive(), "big_ln needs a positive argument");
    let bits = n.bits();
    if bits <= 53 {
        n.to_f64().unwrap().ln()
    } else {
        let shift = bits - 53;
        let top = (n >> shift).to_f64().unwrap();
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Integer square root.
pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    r
}

/// True iff n is a perfect square.
pub fn is_square(n: u64) -> bool {
    let r = isqrt(n);
    r * r == n
}

/// Expand omega_d as a periodic continued fraction.
///
/// The state (P, Q) represents the full quotient (P + sqrt(d)) / Q; after
/// the initial step the walk is purely periodic, and the period is closed
/// off at the first return of the state.
pub fn expand(d: u64, mode: Mode) -> Result<CfExpansion> {
    if is_square(d) || d < 2 {
        return Err(Error::PerfectSquare(d));
    }
    if mode == Mode::Half && d % 2 == 0 && d % 4 != 0 {
        return Err(Error::BadMode(d));
    }
    if mode == Mode::Half && d % 4 == 3 {
        return Err(Error::BadMode(d));
    }
    // for d = 0 mod 4 the surd (1 + sqrt(d))/2 is not integral; rescale to
    // (2 + sqrt(4d))/4 so the state invariant Q | D - P^2 holds
    let (p0, q0, dd) = match mode {
        Mode::Sqrt => (0i64, 1i64, d),
        Mode::Half if d % 4 == 1 => (1, 2, d),
        Mode::Half => (2, 4, 4 * d),
    };
    let r = isqrt(dd) as i64;
    let di = dd as i64;
    let u0 = (p0 + r) / q0;
    let mut p = u0 * q0 - p0;
    let mut q = (di - p * p) / q0;
    let start = (p, q);
    let mut period = Vec::new();
    // the reduced state space has O(d) elements; anything past that is a bug
    let cap = 10 * d + 100;
    loop {
        let u = (p + r) / q;
        period.push(u as u64);
        p = u * q - p;
        q = (di - p * p) / q;
        if (p, q) == start {
            break;
        }
        if period.len() as u64 > cap {
            return Err(Error::Invalid(format!("period detection did not close for d = {d}")));
        }
    }
    let s = period.len();
    let us = period[s - 1];
    let expect_us = match mode {
        Mode::Sqrt => 2 * u0 as u64,
        Mode::Half => 2 * u0 as u64 - 1,
    };
    if us != expect_us {
        return Err(Error::Invalid(format!(
            "d = {d}: last partial quotient {us} != {expect_us}"
        )));
    }
    let inner = &period[..s - 1];
    if inner.iter().ne(inner.iter().rev()) {
        return Err(Error::NotPalindromic(inner.to_vec()));
    }
    Ok(CfExpansion { d, mode, u0: u0 as u64, period })
}

/// Convergent (p_j, q_j) with p_{-1} = 1, q_{-1} = 0, p_0 = u0, q_0 = 1.
pub fn convergents(exp: &CfExpansion, j: i64) -> Result<(BigInt, BigInt)> {
    if j < -1 {
        return Err(Error::Invalid(format!("convergent index {j} < -1")));
    }
    let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
    if j == -1 {
        return Ok((p_prev, q_prev));
    }
    let (mut p, mut q) = (BigInt::from(exp.u0), BigInt::one());
    for i in 1..=j as usize {
        let u = BigInt::from(exp.u(i));
        let p_next = &u * &p + &p_prev;
        let q_next = &u * &q + &q_prev;
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
    }
    Ok((p, q))
}

/// Fundamental unit epsilon = alpha_{s-1} of Q(sqrt(d)), with
/// norm (-1)^s, verified exactly against the Pell equation.
pub fn fundamental_unit(d: u64) -> Result<UnitRep> {
    if d < 2 {
        return Err(Error::Range(format!("fundamental_unit: d = {d} < 2")));
    }
    if !is_squarefree(d) {
        return Err(Error::NotSquarefree(d));
    }
    let exp = expand(d, Mode::for_disc(d))?;
    let s = exp.s();
    let (p, q) = convergents(&exp, s as i64 - 1)?;
    // alpha = p - q * omega' in the (x + y sqrt(d)) / 2 basis
    let (x, y) = match exp.mode {
        Mode::Sqrt => (2 * &p, 2 * &q),
        Mode::Half => (2 * &p - &q, q.clone()),
    };
    let norm = if s % 2 == 0 { 1 } else { -1 };
    let pell = &x * &x - BigInt::from(d) * &y * &y;
    if pell != BigInt::from(4 * norm) {
        return Err(Error::Invalid(format!(
            "d = {d}: unit fails Pell normalization (x^2 - d y^2 = {pell})"
        )));
    }
    Ok(UnitRep { x, y, d, norm })
}

/// Minimal solution of x^2 - d y^2 = +-4 by ascending search over y;
/// an oracle independent of the continued fraction path.
pub fn pell_oracle(d: u64, y_cap: u64) -> Result<UnitRep> {
    if d < 2 || is_square(d) {
        return Err(Error::PerfectSquare(d));
    }
    for y in 1..=y_cap {
        let dy2 = d as u128 * y as u128 * y as u128;
        // the -4 side gives the smaller x for the same y
        for norm in [-1i32, 1] {
            let t = dy2 as i128 + 4 * norm as i128;
            if t <= 0 {
                continue;
            }
            let t = t as u128;
            let r = u128_isqrt(t);
            if r * r == t {
                return Ok(UnitRep {
                    x: BigInt::from(r),
                    y: BigInt::from(y),
                    d,
                    norm,
                });
            }
        }
    }
    Err(Error::OracleCap { d, cap: y_cap })
}

fn u128_isqrt(n: u128) -> u128 {
    let mut r = (n as f64).sqrt() as u128;
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    r
}

/// alpha_j as (A + B sqrt(d)) / 2 with exact integer components.
fn alpha_seq(exp: &CfExpansion) -> Vec<(BigInt, BigInt)> {
    let s = exp.s();
    let mut out = Vec::with_capacity(s);
    // alpha_{-1} = 1
    let (mut a_prev, mut b_prev) = (BigInt::from(2), BigInt::zero());
    // alpha_0 = u0 - omega'
    let (mut a, mut b) = match exp.mode {
        Mode::Sqrt => (BigInt::from(2 * exp.u0), BigInt::from(2)),
        Mode::Half => (BigInt::from(2 * exp.u0 - 1), BigInt::one()),
    };
    out.push((a.clone(), b.clone()));
    for j in 1..s {
        let u = BigInt::from(exp.u(j));
        let a_next = &u * &a + &a_prev;
        let b_next = &u * &b + &b_prev;
        a_prev = a;
        b_prev = b;
        a = a_next;
        b = b_next;
        out.push((a.clone(), b.clone()));
    }
    out
}

/// Exact comparison of alpha = (A + B sqrt(d)) / 2 (with B >= 0) against
/// the integer m: returns true iff alpha > m.
fn alpha_gt(a: &BigInt, b: &BigInt, d: u64, m: &BigInt) -> bool {
    let t: BigInt = 2 * m - a;
    if !t.is_positive() {
        return true;
    }
    b * b * BigInt::from(d) > &t * &t
}

/// Exact comparison: true iff alpha < m.
fn alpha_lt(a: &BigInt, b: &BigInt, d: u64, m: &BigInt) -> bool {
    let t: BigInt = 2 * m - a;
    t.is_positive() && b * b * BigInt::from(d) < &t * &t
}

/// Check the two-sided product bounds on the alpha_j.
///
/// Because the walk is purely periodic from u_1 and alpha_0 = u0 - omega'
/// lies in (u_s, u_s + 1), the index-0 factor of each product is u_s (the
/// partial quotient that actually precedes u_1 in the cycle).  With that
/// factor, for all j <= s - 1:
///
/// * (a)  prod_{i<=j} v_i < alpha_j < prod_{i<=j} (v_i + 1), and
/// * (b)  v_0 * u_j^e * prod_{i=1}^{floor(j/2)} (u_{2i} u_{2i-1} + 1)
///        < alpha_j,  e = j mod 2,
///
/// where v_0 = u_s and v_i = u_i for i >= 1.  All comparisons are exact.
pub fn unit_bounds_check(exp: &CfExpansion) -> bool {
    let s = exp.s();
    let d = exp.d;
    let us = exp.period[s - 1];
    let alphas = alpha_seq(exp);
    let mut lower = BigInt::from(us);
    let mut upper = BigInt::from(us + 1);
    let mut pair_prod = BigInt::from(us);
    for j in 0..s {
        if j > 0 {
            let u = exp.u(j);
            lower *= u;
            upper *= u + 1;
            if j >= 2 && j % 2 == 0 {
                pair_prod *= exp.u(j) * exp.u(j - 1) + 1;
            }
        }
        let (a, b) = &alphas[j];
        if !alpha_gt(a, b, d, &lower) || !alpha_lt(a, b, d, &upper) {
            return false;
        }
        let bound_b = if j % 2 == 1 {
            &pair_prod * exp.u(j)
        } else {
            pair_prod.clone()
        };
        if !alpha_gt(a, b, d, &bound_b) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega_value(d: u64, mode: Mode) -> f64 {
        match mode {
            Mode::Sqrt => (d as f64).sqrt(),
            Mode::Half => (1.0 + (d as f64).sqrt()) / 2.0,
        }
    }

    fn reconstruct(exp: &CfExpansion) -> f64 {
        // evaluate [u0; tail] with the tail truncated deep enough that the
        // error is far below 1e-12
        let terms = 200usize.div_ceil(exp.s()) * exp.s();
        let mut t = f64::INFINITY;
        for i in (1..=terms).rev() {
            t = exp.u(i) as f64 + 1.0 / t;
        }
        exp.u0 as f64 + 1.0 / t
    }

    #[test]
    fn expand_examples() {
        let e = expand(2, Mode::Sqrt).unwrap();
        assert_eq!((e.u0, e.period.clone()), (1, vec![2]));
        let e = expand(13, Mode::Half).unwrap();
        assert_eq!((e.u0, e.period.clone()), (2, vec![3]));
        let e = expand(21, Mode::Half).unwrap();
        assert_eq!((e.u0, e.period.clone()), (2, vec![1, 3]));
    }

    #[test]
    fn expand_rejects() {
        assert!(expand(16, Mode::Sqrt).is_err());
        assert!(expand(1, Mode::Sqrt).is_err());
        assert!(expand(7, Mode::Half).is_err());
    }

    #[test]
    fn expand_structure_and_reconstruction() {
        for d in 2..2_000u64 {
            if is_square(d) {
                continue;
            }
            for mode in [Mode::Sqrt, Mode::Half] {
                if mode == Mode::Half && d % 4 != 1 {
                    continue;
                }
                let e = expand(d, mode).unwrap();
                let s = e.s();
                let expect_us = match mode {
                    Mode::Sqrt => 2 * e.u0,
                    Mode::Half => 2 * e.u0 - 1,
                };
                assert_eq!(e.period[s - 1], expect_us, "d = {d} {mode:?}");
                let inner = e.inner_word();
                assert!(inner.iter().eq(inner.iter().rev()), "d = {d} {mode:?}");
                let w = omega_value(d, mode);
                assert!(
                    (reconstruct(&e) - w).abs() / w < 1e-12,
                    "reconstruction off for d = {d} {mode:?}"
                );
            }
        }
    }

    #[test]
    fn convergent_basics() {
        let e = expand(2, Mode::Sqrt).unwrap();
        assert_eq!(convergents(&e, -1).unwrap(), (BigInt::from(1), BigInt::from(0)));
        assert_eq!(convergents(&e, 1).unwrap(), (BigInt::from(3), BigInt::from(2)));
        let e = expand(13, Mode::Half).unwrap();
        assert_eq!(convergents(&e, 0).unwrap(), (BigInt::from(2), BigInt::from(1)));
        assert!(convergents(&e, -2).is_err());
    }

    #[test]
    fn convergent_determinant_identity() {
        for d in [2u64, 3, 13, 21, 61, 94, 1_000_003] {
            if is_square(d) {
                continue;
            }
            let mode = Mode::for_disc(d);
            let e = expand(d, mode).unwrap();
            for j in 0..(2 * e.s() as i64 + 3) {
                let (p, q) = convergents(&e, j).unwrap();
                let (pp, qp) = convergents(&e, j - 1).unwrap();
                let det = &p * &qp - &pp * &q;
                let expect = if (j - 1).rem_euclid(2) == 0 { 1 } else { -1 };
                assert_eq!(det, BigInt::from(expect), "d = {d}, j = {j}");
                assert!(num_integer::Integer::gcd(&p, &q) == BigInt::one());
            }
        }
    }

    #[test]
    fn unit_examples() {
        let u = fundamental_unit(5).unwrap();
        assert_eq!((u.x, u.y, u.norm), (BigInt::from(1), BigInt::from(1), -1));
        let u = fundamental_unit(13).unwrap();
        assert_eq!((u.x, u.y, u.norm), (BigInt::from(3), BigInt::from(1), -1));
        let u = fundamental_unit(17).unwrap();
        assert_eq!((u.x, u.y, u.norm), (BigInt::from(8), BigInt::from(2), -1));
        let u = fundamental_unit(3).unwrap();
        assert_eq!((u.x, u.y, u.norm), (BigInt::from(4), BigInt::from(2), 1));
        assert!(fundamental_unit(12).is_err());
    }

    #[test]
    fn unit_matches_pell_oracle_small() {
        let mut checked = 0u32;
        for d in 2..2_000u64 {
            if is_square(d) || !is_squarefree(d) {
                continue;
            }
            let cf = fundamental_unit(d).unwrap();
            // units can be astronomically large even for small d; the
            // oracle only covers the ones within its search cap
            match pell_oracle(d, 100_000) {
                Ok(oracle) => {
                    assert_eq!(cf, oracle, "d = {d}");
                    checked += 1;
                }
                Err(Error::OracleCap { .. }) => continue,
                Err(e) => panic!("unexpected oracle error at d = {d}: {e}"),
            }
        }
        assert!(checked > 600, "oracle cap skipped too many cases ({checked} checked)");
    }

    #[test]
    fn pell_oracle_examples() {
        let u = pell_oracle(5, 100).unwrap();
        assert_eq!((u.x, u.y, u.norm), (BigInt::from(1), BigInt::from(1), -1));
        let u = pell_oracle(2, 100).unwrap();
        assert_eq!((u.x, u.y, u.norm), (BigInt::from(2), BigInt::from(2), -1));
        let u = pell_oracle(3, 100).unwrap();
        assert_eq!((u.x, u.y, u.norm), (BigInt::from(4), BigInt::from(2), 1));
        // d = 94 needs y in the hundreds of thousands
        assert!(matches!(pell_oracle(94, 10), Err(Error::OracleCap { .. })));
    }

    #[test]
    fn regulator_values() {
        let u = fundamental_unit(5).unwrap();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((u.regulator() - golden.ln()).abs() < 1e-12);
        // d = 61: x/y are large enough to exercise the stable path
        let u = fundamental_unit(61).unwrap();
        let eps = (u.x.to_f64().unwrap() + u.y.to_f64().unwrap() * 61f64.sqrt()) / 2.0;
        assert!((u.regulator() - eps.ln()).abs() / eps.ln() < 1e-12);
    }

    #[test]
    fn big_ln_matches_f64() {
        for v in [3u64, 1_000, 1 << 52, u64::MAX] {
            assert!((big_ln(&BigInt::from(v)) - (v as f64).ln()).abs() < 1e-12);
        }
        let big = BigInt::from(10u64).pow(50);
        assert!((big_ln(&big) - 50.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn bounds_hold_small_range() {
        for d in 2..3_000u64 {
            if is_square(d) {
                continue;
            }
            let mode = Mode::for_disc(d);
            if mode == Mode::Half && !is_squarefree(d) {
                continue;
            }
            let e = expand(d, mode).unwrap();
            assert!(unit_bounds_check(&e), "bounds fail at d = {d}");
        }
    }

    #[test]
    fn bounds_first_term() {
        // alpha_0 = u0 - omega' sits strictly between u_s and u_s + 1
        let e = expand(13, Mode::Half).unwrap();
        let alpha0 = 2.0 + (13f64.sqrt() - 1.0) / 2.0;
        assert!(3.0 < alpha0 && alpha0 < 4.0);
        assert!(unit_bounds_check(&e));
    }
}
