//! Class numbers of real quadratic fields by Dirichlet's formula,
//! cross-checked against an independent binary-quadratic-form oracle.
//!
//! For squarefree d >= 2 with fundamental discriminant Delta (d itself when
//! d = 1 mod 4, else 4d), the class number is
//!
//! ```text
//! h(d) = sqrt(Delta) * L(1, chi_Delta) / (2 log eps_d),
//! ```
//!
//! where chi_Delta is the Kronecker character (Delta/.) and eps_d the
//! fundamental unit.  L(1, chi) is evaluated either exactly by the finite
//! log-sine character sum or by a truncated Euler product; the rounding to
//! an integer h is guarded and never silent.

use serde::{Deserialize, Serialize};

use crate::cfquad::{expand, fundamental_unit};
use crate::error::{Error, Result};
use crate::intmath::{is_squarefree, kronecker, sieve_primes};

/// Largest Delta for which the exact O(Delta) character sum is attempted.
pub const L1_EXACT_CAP: i64 = 10_000_000;

/// Largest Delta accepted by the form-cycle oracle.
pub const BQF_CAP: i64 = 1_000_000;

/// How L(1, chi) was obtained for a record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum L1Source {
    /// Finite character sum, error at floating-point rounding level.
    Exact,
    /// Euler product over p <= prime_bound with a heuristic error bar.
    Euler { prime_bound: u64, error_hint: f64 },
}

/// One fully-computed discriminant: unit, regulator, L-value, class number.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscRecord {
    /// Index of the member within its family.
    pub n: u64,
    /// Squarefree part of the discriminant.
    pub d: u64,
    /// Fundamental discriminant (d or 4d).
    pub delta: i64,
    /// Period length of the expansion of omega_d.
    pub s: usize,
    /// Fundamental unit numerator: eps = (x + y sqrt(d))/2.
    pub eps_x: String,
    pub eps_y: String,
    /// Norm of the fundamental unit, +1 or -1.
    pub norm: i32,
    /// log eps_d.
    pub regulator: f64,
    /// L(1, chi_Delta).
    pub l1: f64,
    pub l1_source: L1Source,
    /// Class number (wide sense).
    pub h: u64,
    /// |sqrt(Delta) L / (2 reg) - h|, always < 0.25.
    pub residual: f64,
}

/// The fundamental discriminant of Q(sqrt(d)): d when d = 1 mod 4, else 4d.
pub fn fundamental_discriminant(d: u64) -> Result<i64> {
    if d < 2 || !is_squarefree(d) {
        return Err(Error::NotSquarefree(d));
    }
    let d = d as i64;
    Ok(if d % 4 == 1 { d } else { 4 * d })
}

/// chi_Delta(m) for a fundamental discriminant Delta.
pub fn chi(delta: i64, m: i64) -> i32 {
    kronecker(delta, m)
}

/// Exact L(1, chi_Delta) by the finite log-sine sum
///
/// ```text
/// L(1, chi) = -(1/sqrt(Delta)) sum_{a=1}^{Delta-1} chi(a) log sin(pi a / Delta)
/// ```
///
/// folded over the even symmetry chi(Delta - a) = chi(a) and accumulated
/// with compensated (Kahan) summation.
pub fn l1_exact(d: u64) -> Result<f64> {
    let delta = fundamental_discriminant(d)?;
    if delta > L1_EXACT_CAP {
        return Err(Error::Range(format!(
            "Delta = {delta} exceeds the exact-sum cap {L1_EXACT_CAP}"
        )));
    }
    let df = delta as f64;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for a in 1..=(delta - 1) / 2 {
        let x = chi(delta, a);
        if x == 0 {
            continue;
        }
        let term = x as f64 * (std::f64::consts::PI * a as f64 / df).sin().ln();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    // the a and Delta - a terms are equal (chi is even), a = Delta/2 has chi = 0
    Ok(-2.0 * sum / df.sqrt())
}

/// Hard ceiling for the adaptive Euler prime bound.
pub const EULER_BOUND_CAP: u64 = 16_000_000;

/// Shared, growing prime table for the Euler products (scans ask for the
/// same bounds over and over; re-sieving per member would dominate).
fn with_primes<R>(bound: u64, f: impl FnOnce(&[u64]) -> R) -> R {
    use std::sync::RwLock;
    static CACHE: RwLock<(u64, Vec<u64>)> = RwLock::new((0, Vec::new()));
    {
        let guard = CACHE.read().unwrap();
        if guard.0 >= bound {
            let idx = guard.1.partition_point(|&p| p <= bound);
            return f(&guard.1[..idx]);
        }
    }
    let mut guard = CACHE.write().unwrap();
    if guard.0 < bound {
        *guard = (bound, sieve_primes(bound));
    }
    let idx = guard.1.partition_point(|&p| p <= bound);
    f(&guard.1[..idx])
}

/// Truncated Euler product prod_{p <= P} (1 - chi(p)/p)^{-1} together with
/// a heuristic error bar (the square-root of the tail variance
/// sum_{p > P} 1/p^2 under random signs; not a proven bound).
pub fn l1_euler(d: u64, prime_bound: u64) -> Result<(f64, f64)> {
    if prime_bound < 1_000 {
        return Err(Error::Range("Euler prime bound must be at least 1000".into()));
    }
    let delta = fundamental_discriminant(d)?;
    let log_l = with_primes(prime_bound, |primes| {
        let mut log_l = 0.0f64;
        for &p in primes {
            let x = chi(delta, p as i64);
            if x != 0 {
                log_l -= (1.0 - x as f64 / p as f64).ln();
            }
        }
        log_l
    });
    let pf = prime_bound as f64;
    let hint = (1.0 / (pf * pf.ln())).sqrt();
    Ok((log_l.exp(), hint))
}

/// Assemble the full record for one family member: expansion, unit,
/// regulator, L-value and the guarded class number.
///
/// L(1, chi) comes from the exact sum when Delta <= exact_cap, otherwise
/// from the Euler product at prime_bound, escalating the bound (up to
/// three doublings) if the rounding residual is uncomfortable.
pub fn class_number(n: u64, d: u64, exact_cap: i64, prime_bound: u64) -> Result<DiscRecord> {
    let delta = fundamental_discriminant(d)?;
    let mode = crate::cfquad::Mode::for_disc(d);
    let exp = expand(d, mode)?;
    let unit = fundamental_unit(d)?;
    let reg = unit.regulator();

    let (l1, source) = if delta <= exact_cap.min(L1_EXACT_CAP) {
        (l1_exact(d)?, L1Source::Exact)
    } else {
        // h = scale * L, so the truncation error must stay well below one
        // unit of h: start from a bound whose heuristic error does, and
        // keep doubling while the rounding is uncomfortable
        let scale = (delta as f64).sqrt() / (2.0 * reg);
        let hint_at = |b: u64| (1.0 / (b as f64 * (b as f64).ln())).sqrt();
        let mut bound = prime_bound;
        while bound < EULER_BOUND_CAP && hint_at(bound) * scale > 0.1 {
            bound *= 2;
        }
        loop {
            let (v, hint) = l1_euler(d, bound)?;
            let raw = scale * v;
            let residual = (raw - raw.round()).abs();
            if residual < 0.2 || bound >= EULER_BOUND_CAP {
                break (v, L1Source::Euler { prime_bound: bound, error_hint: hint });
            }
            bound *= 2;
        }
    };

    let raw = (delta as f64).sqrt() * l1 / (2.0 * reg);
    let h = raw.round();
    let residual = (raw - h).abs();
    if !(residual < 0.25) || h < 1.0 {
        return Err(Error::RoundingGuard { d, residual });
    }
    Ok(DiscRecord {
        n,
        d,
        delta,
        s: exp.s(),
        eps_x: unit.x.to_string(),
        eps_y: unit.y.to_string(),
        norm: unit.norm,
        regulator: reg,
        l1,
        l1_source: source,
        h: h as u64,
        residual,
    })
}

/// Integer floor square root.
fn isqrt_i64(n: i64) -> i64 {
    debug_assert!(n >= 0);
    let mut r = (n as f64).sqrt() as i64;
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    while r * r > n {
        r -= 1;
    }
    r
}

fn is_fundamental(delta: i64) -> bool {
    if delta < 5 {
        return false;
    }
    match delta.rem_euclid(4) {
        1 => is_squarefree(delta as u64),
        0 => {
            let m = delta / 4;
            let r = m.rem_euclid(4);
            (r == 2 || r == 3) && is_squarefree(m as u64)
        }
        _ => false,
    }
}

/// Wide class number of the positive fundamental discriminant Delta by
/// enumerating the reduced indefinite forms (A, B, C) with B^2 - 4AC =
/// Delta, 0 < B < sqrt(Delta), sqrt(Delta) - B < 2|A| < sqrt(Delta) + B,
/// partitioning them into cycles of the reduction operator rho, and
/// folding each cycle with the cycle of its negated form (A, B, C) ->
/// (-A, B, -C).  When the fundamental unit has norm -1 the two coincide
/// and the fold is a no-op, so the count is the wide (ideal) class number
/// in every case.  Completely independent of the continued-fraction and
/// L-function paths.
pub fn bqf_class_number(delta: i64) -> Result<u64> {
    if delta > BQF_CAP {
        return Err(Error::Range(format!("Delta = {delta} exceeds the form-oracle cap {BQF_CAP}")));
    }
    if !is_fundamental(delta) {
        return Err(Error::Invalid(format!("Delta = {delta} is not a fundamental discriminant")));
    }
    let root = isqrt_i64(delta);

    // enumerate reduced forms; the inequalities are applied exactly via
    // squared comparisons, never through floating point
    let mut forms: Vec<(i64, i64, i64)> = Vec::new();
    let b0 = if delta % 2 == 0 { 2 } else { 1 };
    let mut b = b0;
    while b * b < delta {
        let ac4 = delta - b * b;
        if ac4 % 4 == 0 {
            let prod = ac4 / 4; // |A| * |C|
            let mut a = 1i64;
            while (2 * a - b) * (2 * a - b) < delta {
                if prod % a == 0 && (2 * a + b) * (2 * a + b) > delta {
                    let c = prod / a;
                    forms.push((a, b, -c));
                    forms.push((-a, b, c));
                }
                a += 1;
            }
        }
        b += 2;
    }

    // rho: (A, B, C) -> (C, B', C') with B' = -B mod 2|C| in the reduced
    // window (sqrt(Delta) - 2|C|, sqrt(Delta))
    let rho = |f: (i64, i64, i64)| -> (i64, i64, i64) {
        let (_, b, c) = f;
        let t = 2 * c.abs();
        let bp = root - (((root + b) % t + t) % t);
        let cp = (bp * bp - delta) / (4 * c);
        (c, bp, cp)
    };

    use std::collections::HashMap;
    let index: HashMap<(i64, i64, i64), usize> =
        forms.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let mut cycle_of = vec![usize::MAX; forms.len()];
    let mut cycles = 0usize;
    for start in 0..forms.len() {
        if cycle_of[start] != usize::MAX {
            continue;
        }
        let id = cycles;
        cycles += 1;
        let mut f = forms[start];
        loop {
            let i = *index
                .get(&f)
                .ok_or_else(|| Error::Invalid(format!("rho left the reduced set at {f:?}")))?;
            if cycle_of[i] != usize::MAX {
                break;
            }
            cycle_of[i] = id;
            f = rho(f);
        }
    }

    // fold cycles paired by form negation
    let mut partner = vec![usize::MAX; cycles];
    for (i, &(a, b, c)) in forms.iter().enumerate() {
        let j = index[&(-a, b, -c)];
        partner[cycle_of[i]] = cycle_of[j];
    }
    let wide = (0..cycles).filter(|&i| partner[i] >= i).count();
    Ok(wide as u64)
}
