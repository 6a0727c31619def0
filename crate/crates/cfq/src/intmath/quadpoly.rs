use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::intmath::factor::{factorize, is_prime};
use crate::intmath::symbols::{kron2, kronecker};

/// Root scanning threshold: below this, `count_roots` at composite moduli
/// falls back to a direct residue scan.
const BRUTE_LIMIT: u64 = 1_000_000;

/// An integer quadratic polynomial `D(n) = a n^2 + b n + c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadPoly {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadPoly {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        assert!(a != 0, "leading coefficient must be nonzero");
        QuadPoly { a, b, c }
    }

    /// Discriminant b^2 - 4ac.
    pub fn disc(&self) -> i64 {
        let d = self.b as i128 * self.b as i128 - 4 * self.a as i128 * self.c as i128;
        i64::try_from(d).expect("discriminant overflows i64")
    }

    /// Exact value D(n), wide enough for any n in scan range.
    pub fn eval(&self, n: i64) -> i128 {
        let n = n as i128;
        (self.a as i128 * n + self.b as i128) * n + self.c as i128
    }

    /// D(n) reduced mod m.
    pub fn eval_mod(&self, n: u64, m: u64) -> u64 {
        let m = m as i128;
        let n = n as i128 % m;
        let v = ((self.a as i128 % m * n + self.b as i128) % m * n + self.c as i128) % m;
        v.rem_euclid(m) as u64
    }
}

/// Number of roots of D mod n by direct residue scan.
pub fn count_roots_brute(d: &QuadPoly, n: u64) -> u64 {
    (0..n).filter(|&k| d.eval_mod(k, n) == 0).count() as u64
}

fn gcd3(a: i64, b: i64, c: i64) -> i64 {
    fn g(a: i64, b: i64) -> i64 {
        let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a as i64
    }
    g(g(a, b), c)
}

/// c(p) at an odd prime by the four-way case split on p's divisibility of
/// the coefficients.
fn count_roots_odd_prime(d: &QuadPoly, p: u64) -> u64 {
    let pi = p as i64;
    let pa = d.a.rem_euclid(pi) == 0;
    let pb = d.b.rem_euclid(pi) == 0;
    let pc = d.c.rem_euclid(pi) == 0;
    if !pa {
        (1 + kronecker(d.disc(), pi)) as u64
    } else if !pb {
        1
    } else if !pc {
        0
    } else {
        p
    }
}

/// c(n) = |{k mod n : D(k) = 0 mod n}|.
///
/// Closed forms are used at odd primes p and at p^2 when p does not divide
/// gcd(a, b, c); everything else is a direct scan, supported up to 10^6.
pub fn count_roots(d: &QuadPoly, n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Invalid("count_roots: modulus must be positive".into()));
    }
    if n == 1 {
        return Ok(1);
    }
    if n % 2 == 1 && is_prime(n) {
        return Ok(count_roots_odd_prime(d, n));
    }
    if n % 2 == 1 {
        if let Some(p) = exact_square_root(n) {
            // c(p^2) = c(p) needs every root mod p to lift uniquely, i.e.
            // to be simple (p does not divide the discriminant), or there
            // to be no root at all (p | (a, b) but not c)
            let pi = p as i64;
            let lifts = d.disc().rem_euclid(pi) != 0
                || (d.a.rem_euclid(pi) == 0
                    && d.b.rem_euclid(pi) == 0
                    && d.c.rem_euclid(pi) != 0);
            if is_prime(p) && lifts && gcd3(d.a, d.b, d.c).rem_euclid(pi) != 0 {
                return Ok(count_roots_odd_prime(d, p));
            }
        }
    }
    if n <= BRUTE_LIMIT {
        Ok(count_roots_brute(d, n))
    } else {
        Err(Error::Range(format!(
            "count_roots: composite modulus {n} above scan limit {BRUTE_LIMIT}"
        )))
    }
}

fn exact_square_root(n: u64) -> Option<u64> {
    let r = (n as f64).sqrt().round() as u64;
    for c in [r.wrapping_sub(1), r, r + 1] {
        if c.checked_mul(c) == Some(n) {
            return Some(c);
        }
    }
    None
}

/// Complete character sum J(p) = sum_{n=1}^{p} (D(n)/p) by direct
/// evaluation; the oracle for `jacobsthal`.
pub fn jacobsthal_sum_prime(d: &QuadPoly, p: u64) -> i64 {
    (1..=p).map(|n| kronecker(d.eval_mod(n, p) as i64, p as i64) as i64).sum()
}

/// J(p) in closed form at an odd prime.
fn jacobsthal_prime(d: &QuadPoly, p: u64) -> i64 {
    let pi = p as i64;
    let pa = d.a.rem_euclid(pi) == 0;
    let pb = d.b.rem_euclid(pi) == 0;
    let pc = d.c.rem_euclid(pi) == 0;
    if !pa {
        // complete the square: sum (a/p) * ((n^2 - Delta/(4a^2))/p)
        let base = if d.disc().rem_euclid(pi) == 0 { pi - 1 } else { -1 };
        kronecker(d.a, pi) as i64 * base
    } else if !pb {
        // linear in n over a complete residue system
        0
    } else if !pc {
        // constant: p equal terms
        pi * kronecker(d.c, pi) as i64
    } else {
        0
    }
}

/// Multiplicative Jacobsthal sum J(m) for odd squarefree m, with J(1) = 1.
pub fn jacobsthal(d: &QuadPoly, m: u64) -> Result<i64> {
    if m == 0 || m % 2 == 0 {
        return Err(Error::Invalid(format!("jacobsthal: modulus {m} must be odd and positive")));
    }
    let mut out = 1i128;
    for (p, e) in factorize(m) {
        if e > 1 {
            return Err(Error::NotSquarefree(m));
        }
        out *= jacobsthal_prime(d, p) as i128;
    }
    i64::try_from(out).map_err(|_| Error::Range(format!("jacobsthal: J({m}) overflows i64")))
}

/// Dyadic symbol average K(l) = 2^{-l} sum_{n=1}^{2^l} (D(n)/2)^l.
///
/// The summand depends only on n mod 8, so the average is taken over
/// min(2^l, 8) terms; consequently K(l) = K(l+2) for l >= 2.
pub fn k_ell(d: &QuadPoly, ell: u32) -> Result<Ratio<i64>> {
    if ell == 0 {
        return Err(Error::Invalid("k_ell: exponent must be positive".into()));
    }
    let span: u64 = if ell >= 3 { 8 } else { 1 << ell };
    let sum: i64 = (1..=span)
        .map(|n| {
            let s = kron2(d.eval_mod(n, 8) as i64) as i64;
            if ell % 2 == 0 {
                s * s
            } else {
                s
            }
        })
        .sum();
    Ok(Ratio::new(sum, span as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intmath::factor::sieve_primes;

    fn families() -> Vec<QuadPoly> {
        vec![
            QuadPoly::new(4, 0, 1),   // always 1 mod 4
            QuadPoly::new(4, 4, 5),   // (2n+1)^2 + 4
            QuadPoly::new(4, 12, 5),
        ]
    }

    #[test]
    fn root_count_examples() {
        assert_eq!(count_roots(&QuadPoly::new(4, 0, 1), 5).unwrap(), 2);
        assert_eq!(count_roots(&QuadPoly::new(1, 0, 1), 3).unwrap(), 0);
        // p | (a, b, c) forces every residue to be a root
        assert_eq!(count_roots(&QuadPoly::new(3, 6, 9), 3).unwrap(), 3);
        assert_eq!(count_roots(&QuadPoly::new(4, 0, 1), 1).unwrap(), 1);
    }

    #[test]
    fn root_count_closed_form_matches_brute() {
        let polys = [
            QuadPoly::new(4, 0, 1),
            QuadPoly::new(4, 4, 5),
            QuadPoly::new(4, 12, 5),
            QuadPoly::new(3, 5, 7),
            QuadPoly::new(15, 3, 1),
            QuadPoly::new(15, 10, 5),
            QuadPoly::new(9, 6, 1),
        ];
        for d in &polys {
            for &p in sieve_primes(500).iter().skip(1) {
                assert_eq!(
                    count_roots(d, p).unwrap(),
                    count_roots_brute(d, p),
                    "c({p}) for {d:?}"
                );
            }
            // prime squares, p not dividing gcd(a,b,c)
            for &p in sieve_primes(50).iter().skip(1) {
                if gcd3(d.a, d.b, d.c) % p as i64 != 0 {
                    assert_eq!(
                        count_roots(d, p * p).unwrap(),
                        count_roots_brute(d, p * p),
                        "c({p}^2) for {d:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn root_count_composite_brute_path() {
        let d = QuadPoly::new(4, 0, 1);
        for n in [2u64, 4, 8, 12, 15, 100, 720] {
            assert_eq!(count_roots(&d, n).unwrap(), count_roots_brute(&d, n));
        }
        assert!(count_roots(&d, 2_000_002).is_err());
    }

    #[test]
    fn jacobsthal_base_identity() {
        // sum_{n mod p} ((n^2 + b)/p) = -1 unless p | b, in which case p - 1
        for &p in sieve_primes(200).iter().skip(1) {
            for b in 1..=p {
                let s: i64 = (0..p)
                    .map(|n| kronecker(((n * n + b) % p) as i64, p as i64) as i64)
                    .sum();
                let expect = if b % p == 0 { p as i64 - 1 } else { -1 };
                assert_eq!(s, expect, "p = {p}, b = {b}");
            }
        }
    }

    #[test]
    fn jacobsthal_examples() {
        assert_eq!(jacobsthal(&QuadPoly::new(4, 0, 1), 3).unwrap(), -1);
        assert_eq!(jacobsthal(&QuadPoly::new(4, 0, 1), 1).unwrap(), 1);
        assert_eq!(jacobsthal(&QuadPoly::new(1, 0, 1), 15).unwrap(), 1);
        assert!(jacobsthal(&QuadPoly::new(4, 0, 1), 9).is_err());
        assert!(jacobsthal(&QuadPoly::new(4, 0, 1), 6).is_err());
    }

    #[test]
    fn jacobsthal_closed_form_matches_brute() {
        let polys = [
            QuadPoly::new(4, 0, 1),
            QuadPoly::new(4, 4, 5),
            QuadPoly::new(4, 12, 5),
            QuadPoly::new(3, 5, 7),
            QuadPoly::new(15, 3, 1),
            QuadPoly::new(15, 10, 5),
            QuadPoly::new(25, 5, 1),
        ];
        for d in &polys {
            for &p in sieve_primes(500).iter().skip(1) {
                assert_eq!(
                    jacobsthal(d, p).unwrap(),
                    jacobsthal_sum_prime(d, p),
                    "J({p}) for {d:?}"
                );
            }
        }
    }

    #[test]
    fn jacobsthal_family_table() {
        // for the reference families J(p) = -1 at every odd prime not
        // dividing a, and 0 at p | a (only p = 2 divides a, so all -1)
        for d in &families() {
            for &p in sieve_primes(500).iter().skip(1) {
                assert_eq!(jacobsthal(d, p).unwrap(), -1, "J({p}) for {d:?}");
            }
        }
    }

    #[test]
    fn k_ell_examples() {
        let chowla = QuadPoly::new(4, 0, 1);
        assert_eq!(k_ell(&chowla, 2).unwrap(), Ratio::new(1, 1));
        let fermat = QuadPoly::new(1, 0, 1);
        assert_eq!(k_ell(&fermat, 1).unwrap(), Ratio::new(-1, 2));
        assert!(k_ell(&chowla, 0).is_err());
    }

    #[test]
    fn k_ell_identities() {
        let polys = [
            QuadPoly::new(4, 0, 1),
            QuadPoly::new(4, 4, 5),
            QuadPoly::new(4, 12, 5),
            QuadPoly::new(1, 0, 1),
            QuadPoly::new(1, 1, 1),
            QuadPoly::new(1, 0, 2),
        ];
        for d in &polys {
            let c2 = count_roots(d, 2).unwrap() as i64;
            for ell in [2u32, 4, 6] {
                assert_eq!(k_ell(d, ell).unwrap(), Ratio::new(2 - c2, 2), "even l for {d:?}");
            }
            for ell in [2u32, 3, 4, 5] {
                assert_eq!(k_ell(d, ell).unwrap(), k_ell(d, ell + 2).unwrap());
            }
            // definitional average over the full 2^l range agrees
            for ell in 1..=6u32 {
                let span = 1u64 << ell;
                let sum: i64 = (1..=span)
                    .map(|n| (kron2(d.eval_mod(n, 8) as i64) as i64).pow(ell))
                    .sum();
                assert_eq!(k_ell(d, ell).unwrap(), Ratio::new(sum, span as i64));
            }
        }
    }
}
