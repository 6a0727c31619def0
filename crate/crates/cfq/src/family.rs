//! From a symmetric word to a quadratic family of discriminants.
//!
//! A word (u_1, ..., u_{s-1}) together with a case marker (whether the
//! expanded surd is sqrt(d) or (1+sqrt(d))/2) determines, when a parity
//! condition on the convergent denominators holds, a quadratic polynomial
//! D(n) and a linear k(n) such that the expansion of omega_{D(n)} is
//! exactly [k(n); u_1, ..., u_{s-1}, u_s(k(n))].  The family is the set of
//! squarefree values of D.

use serde::{Deserialize, Serialize};

use crate::cfquad::{expand, is_square, CfExpansion, Mode};
use crate::error::{Error, Result};
use crate::intmath::{count_roots, is_squarefree, sieve_primes, QuadPoly};

/// Which surd the family expands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// sqrt(d), d = 2, 3 mod 4; the closing quotient is u_s = 2k.
    A,
    /// (1 + sqrt(d))/2, d = 1 mod 4; the closing quotient is u_s = 2k - 1.
    B,
}

impl Case {
    pub fn mode(self) -> Mode {
        match self {
            Case::A => Mode::Sqrt,
            Case::B => Mode::Half,
        }
    }

    /// The forced last partial quotient for leading quotient k.
    pub fn closing(self, k: u64) -> u64 {
        match self {
            Case::A => 2 * k,
            Case::B => 2 * k - 1,
        }
    }
}

/// A symmetric coefficient word: the seed of a family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfWord {
    pub case: Case,
    /// Inner word (u_1, ..., u_{s-1}); empty means period length 1.
    pub u: Vec<u64>,
}

impl CfWord {
    pub fn new(case: Case, u: Vec<u64>) -> Result<Self> {
        if u.iter().any(|&x| x == 0) {
            return Err(Error::Invalid("word entries must be positive".into()));
        }
        if u.iter().ne(u.iter().rev()) {
            return Err(Error::NotPalindromic(u));
        }
        Ok(CfWord { case, u })
    }

    /// Period length s.
    pub fn s(&self) -> usize {
        self.u.len() + 1
    }
}

/// Parities of the convergent denominators (q_{s-1}, q_{s-2}, q_{s-3}) of
/// the inner word, with q_{-1} = 0, q_0 = 1 (and q_{-2} = 1 so that the
/// recurrence extends backwards).  Diagnostic only: admissibility itself
/// is decided by the exact fixed-point congruence below.
pub fn q_parities(word: &CfWord) -> (bool, bool, bool) {
    // track q mod 2 through q_j = u_j q_{j-1} + q_{j-2}
    let mut q3 = true; // q_{-2}
    let mut q2 = false; // q_{-1}
    let mut q1 = true; // q_0
    for &u in &word.u {
        let next = ((u % 2 == 1) && q1) != q2; // u*q1 + q2 mod 2
        q3 = q2;
        q2 = q1;
        q1 = next;
    }
    (q1, q2, q3)
}

/// Continuant data of the inner word: P = q_{s-1}, Q = q_{s-2}, and
/// R = K(u_2, ..., u_{s-2}) recovered from P R - Q^2 = (-1)^{s-1}.
fn continuants(word: &CfWord) -> (i128, i128, i128) {
    let mut q_prev: i128 = 0; // q_{-1}
    let mut q: i128 = 1; // q_0
    for &u in &word.u {
        let next = u as i128 * q + q_prev;
        q_prev = q;
        q = next;
    }
    let sign: i128 = if word.s() % 2 == 0 { 1 } else { -1 };
    let r = (q_prev * q_prev - sign) / q;
    (q, q_prev, r)
}

/// The d whose expansion is [k; u_1, ..., u_{s-1}, u_s(k)], if the
/// fixed-point equation of the periodic tail has an integer solution at
/// this leading quotient.  Derived by eliminating the surd from
/// z = (T11 z + T12)/(T21 z + T22), T the continuant matrix of the cycle:
///
/// * case A: d = k^2 + (2kQ + R)/P, needing P | 2kQ + R;
/// * case B: d = (2k-1)^2 + 4((2k-1)Q + R)/P, needing P | 4((2k-1)Q + R).
pub fn solution_for_k(word: &CfWord, k: u64) -> Option<u64> {
    let (p, q, r) = continuants(word);
    let k = k as i128;
    let (base, num) = match word.case {
        Case::A => (k * k, 2 * k * q + r),
        Case::B => ((2 * k - 1) * (2 * k - 1), 4 * ((2 * k - 1) * q + r)),
    };
    if num % p != 0 {
        return None;
    }
    u64::try_from(base + num / p).ok()
}

/// Necessary condition for a family: the fixed-point congruence is
/// solvable and the solutions recurrently take values in the residue
/// classes mod 4 where squarefree discriminants of the case live
/// (2, 3 mod 4 in case A, 1 mod 4 in case B).  Not sufficient: a
/// congruence solution can have a shorter actual period (for instance
/// when the word is itself periodic), so admissibility is decided by
/// [`canonical_hits`].
fn congruence_admissible(word: &CfWord) -> bool {
    let (p, _, _) = continuants(word);
    // solvable k form an arithmetic progression with step dividing P, and
    // d mod 4 along it has period at most 4 steps: 8 successive solutions
    // cover every attained residue
    let mut seen = 0u32;
    let mut k = 1u64;
    while seen < 8 && (k as i128) <= 9 * p {
        if let Some(d) = solution_for_k(word, k) {
            seen += 1;
            let ok = match word.case {
                Case::A => d % 4 == 2 || d % 4 == 3,
                Case::B => d % 4 == 1 && !is_square(d),
            };
            if ok {
                return true;
            }
        }
        k += 1;
    }
    false
}

/// Canonical hits of a word: fixed-point solutions (k, d) whose expansion
/// really has [k; word, closing(k)] as its minimal period, restricted to
/// the residue classes that can be squarefree.  For case B the solutions
/// can interleave a 0 mod 4 branch (never squarefree) with the 1 mod 4
/// branch that carries the family; only the latter is kept when both
/// occur.
pub fn canonical_hits(word: &CfWord) -> Vec<(u64, u64)> {
    if !congruence_admissible(word) {
        return Vec::new();
    }
    let keeps = |case: Case, d: u64| case == Case::A || d % 4 == 1;
    let mut hits: Vec<(u64, u64)> = Vec::new();
    let mut kept = 0usize;
    let mut examined = 0usize;
    let mut k = 1u64;
    while k <= K_MAX {
        if let Some(d) = solution_for_k(word, k) {
            let expandable = match word.case {
                Case::A => true,
                Case::B => d % 4 == 0 || d % 4 == 1,
            };
            if expandable && d >= 2 && !is_square(d) {
                examined += 1;
                if let Ok(exp) = expand(d, word.case.mode()) {
                    let mut target = word.u.clone();
                    target.push(word.case.closing(k));
                    if exp.u0 == k && exp.period == target {
                        if keeps(word.case, d) {
                            kept += 1;
                        }
                        hits.push((k, d));
                    }
                }
            }
            if kept >= 6 || (hits.is_empty() && examined >= 30) || examined >= 400 {
                break;
            }
        }
        k += 1;
    }
    if hits.iter().any(|&(_, d)| !keeps(word.case, d)) {
        hits.retain(|&(_, d)| keeps(word.case, d));
    }
    hits
}

/// At least four hits with a common difference in k.
fn hits_in_progression(hits: &[(u64, u64)]) -> bool {
    hits.len() >= 4 && {
        let e = hits[1].0 - hits[0].0;
        hits.windows(2).all(|h| h[1].0 - h[0].0 == e)
    }
}

/// True iff the word seeds an infinite family: its canonical hits form an
/// arithmetic progression in the leading quotient.
pub fn admissible(word: &CfWord) -> bool {
    hits_in_progression(&canonical_hits(word))
}

/// The synthesized family: D(n) = a n^2 + b n + c with leading quotient
/// k(n) = e n + f, for n >= 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyPoly {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub e: i64,
    pub f: i64,
    pub case: Case,
    pub word: CfWord,
}

impl FamilyPoly {
    pub fn poly(&self) -> QuadPoly {
        QuadPoly::new(self.a, self.b, self.c)
    }

    /// Period length s of every member's expansion.
    pub fn s(&self) -> usize {
        self.word.s()
    }

    pub fn mode(&self) -> Mode {
        self.case.mode()
    }

    /// D(n) as an unsigned value; n must be in the range where D > 0.
    pub fn d_value(&self, n: u64) -> u64 {
        let v = self.poly().eval(n as i64);
        u64::try_from(v).expect("family value out of u64 range")
    }

    /// Leading partial quotient k(n).
    pub fn k(&self, n: u64) -> i64 {
        self.e * n as i64 + self.f
    }

    /// The full expected period for member n.
    pub fn expected_period(&self, n: u64) -> Vec<u64> {
        let mut p = self.word.u.clone();
        p.push(self.case.closing(self.k(n) as u64));
        p
    }

    /// True iff the expansion of D(n) is exactly [k(n); word, u_s(k(n))].
    /// Members whose value cannot be expanded in the family's mode
    /// (squares, or 0 mod 4 in case B) are reported as errors.
    pub fn member_matches(&self, n: u64) -> Result<bool> {
        let d = self.d_value(n);
        let exp = expand(d, self.mode())?;
        Ok(exp.u0 == self.k(n) as u64 && exp.period == self.expected_period(n))
    }

    /// Stable identifier for caching and reports.
    pub fn id(&self) -> String {
        let case = match self.case {
            Case::A => "A",
            Case::B => "B",
        };
        format!("{}n2{:+}n{:+}_k{}n{:+}_{}", self.a, self.b, self.c, self.e, self.f, case)
    }
}

/// Search ceiling for the leading quotient during synthesis; the solution
/// progression's step can be as large as the inner-word continuant, which
/// reaches four digits for period-6 words.
const K_MAX: u64 = 60_000;

/// Scan all d whose expansion could have leading quotient k in the given
/// mode, and return the unique d matching the word, if any.
pub fn hit_for_k(word: &CfWord, k: u64) -> Option<u64> {
    let mut target = word.u.clone();
    target.push(word.case.closing(k));
    let (lo, hi, step) = match word.case {
        // sqrt(d) in (k, k+1)
        Case::A => (k * k + 1, (k + 1) * (k + 1), 1),
        // (1+sqrt(d))/2 in [k, k+1); d = 0 mod 4 solutions count too
        Case::B => ((2 * k - 1) * (2 * k - 1), (2 * k + 1) * (2 * k + 1), 1),
    };
    let mut d = lo;
    while d < hi {
        let residue_ok = match word.case {
            Case::A => true,
            Case::B => d % 4 == 0 || d % 4 == 1,
        };
        if residue_ok && !is_square(d) {
            if let Ok(exp) = expand(d, word.case.mode()) {
                if exp.u0 == k && exp.period == target {
                    return Some(d);
                }
            }
        }
        d += step;
    }
    None
}

/// Synthesize the family polynomial of an admissible word.
///
/// The leading quotients admitting a solution form an arithmetic
/// progression k = e n + f; the first hit is anchored at n = 1, D is the
/// quadratic through the first three hits, and the fit is verified by
/// round-tripping members n = 4..12 through the expansion.
pub fn synthesize(word: &CfWord) -> Result<FamilyPoly> {
    let hits = canonical_hits(word);
    if !hits_in_progression(&hits) {
        return Err(Error::Inadmissible(format!(
            "word {:?} case {:?}: expansion-verified solutions below k = {K_MAX} do not form \
             an arithmetic progression: {:?}",
            word.u,
            word.case,
            hits.iter().map(|h| h.0).collect::<Vec<_>>()
        )));
    }
    let e = (hits[1].0 - hits[0].0) as i64;
    let f = hits[0].0 as i64 - e;
    // quadratic through the first three (n, d) pairs
    let (d1, d2, d3) = (hits[0].1 as i64, hits[1].1 as i64, hits[2].1 as i64);
    if (d3 - 2 * d2 + d1) % 2 != 0 {
        return Err(Error::Synthesis("solution values are not on an integer quadratic".into()));
    }
    let a = (d3 - 2 * d2 + d1) / 2;
    let b = d2 - d1 - 3 * a;
    let c = d1 - a - b;
    let fam = FamilyPoly { a, b, c, e, f, case: word.case, word: word.clone() };
    // structural invariants
    if a <= 0 || !is_square(a as u64) {
        return Err(Error::Synthesis(format!("leading coefficient {a} is not a positive square")));
    }
    let disc = fam.poly().disc();
    let sign = if word.s() % 2 == 0 { 1 } else { -1 };
    let t = disc * sign;
    if t <= 0 || t & (t - 1) != 0 {
        return Err(Error::Synthesis(format!(
            "discriminant {disc} is not (-1)^{} times a power of two",
            word.s()
        )));
    }
    // round-trip verification beyond the fitted points
    for n in 4..=12u64 {
        let d = fam.d_value(n);
        if is_square(d) {
            continue;
        }
        if !fam.member_matches(n)? {
            return Err(Error::Synthesis(format!(
                "fit {} fails expansion round-trip at n = {n}",
                fam.id()
            )));
        }
    }
    Ok(fam)
}

/// Restrict a case A family to the residue classes where its values stay
/// away from 1 mod 4, substituting n -> u n + v with u in {1, 2, 4} and
/// -u < v <= 0.  Case B families are returned unchanged.
pub fn normalize(fam: &FamilyPoly) -> Result<FamilyPoly> {
    if fam.case == Case::B {
        return Ok(fam.clone());
    }
    for u in [1i64, 2, 4] {
        for v in (1 - u)..=0 {
            // D(un+v) mod 4 depends only on (un+v) mod 4, so four
            // consecutive n cover every attained class
            let ok = (1..=4i64).all(|n| {
                let m = u * n + v;
                fam.poly().eval(m).rem_euclid(4) != 1
            });
            if ok {
                return Ok(FamilyPoly {
                    a: fam.a * u * u,
                    b: 2 * fam.a * u * v + fam.b * u,
                    c: fam.a * v * v + fam.b * v + fam.c,
                    e: fam.e * u,
                    f: fam.e * v + fam.f,
                    case: fam.case,
                    word: fam.word.clone(),
                });
            }
        }
    }
    Err(Error::Synthesis(format!(
        "no residue class with u <= 4 avoids 1 mod 4 for {}",
        fam.id()
    )))
}

/// All (n, D(n)) with n >= 1, D(n) <= x and D(n) squarefree, in increasing
/// n.
pub fn enumerate(fam: &FamilyPoly, x: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut n = 1u64;
    loop {
        let v = fam.poly().eval(n as i64);
        if v > x as i128 {
            break;
        }
        if v >= 2 {
            let d = v as u64;
            if is_squarefree(d) {
                out.push((n, d));
            }
        }
        n += 1;
    }
    out
}

/// The density constant C1 = (1 - c(4)/4) prod_{2<p<=P} (1 - c(p)/p^2),
/// returned with a bound on the truncation tail (c(p) <= 2 away from the
/// finitely many p | a).
pub fn c1_constant(fam: &FamilyPoly, prime_bound: u64) -> (f64, f64) {
    let poly = fam.poly();
    let c4 = count_roots(&poly, 4).expect("c(4) in scan range") as f64;
    let mut c1 = 1.0 - c4 / 4.0;
    for p in sieve_primes(prime_bound) {
        if p == 2 {
            continue;
        }
        let cp = count_roots(&poly, p).expect("odd prime closed form") as f64;
        c1 *= 1.0 - cp / (p as f64 * p as f64);
    }
    // sum_{p > P} 2/p^2 < 2/P
    let tail = 2.0 / prime_bound as f64;
    (c1, tail)
}

/// The main term y(x) * C1 of |D_family(x)|.
pub fn predicted_count(fam: &FamilyPoly, x: u64, prime_bound: u64) -> f64 {
    let a = fam.a as f64;
    let disc = fam.poly().disc() as f64;
    let y = ((x as f64 + disc / (4.0 * a)) / a).sqrt() - fam.b as f64 / (2.0 * a);
    let (c1, _) = c1_constant(fam, prime_bound);
    y * c1
}

/// On-disk family description: either a word to synthesize or an explicit
/// polynomial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyFile {
    pub case: Case,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<PolySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolySpec {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub e: i64,
    pub f: i64,
}

/// Build a family from its JSON description.
pub fn from_json(text: &str) -> Result<FamilyPoly> {
    let file: FamilyFile = serde_json::from_str(text)?;
    match (&file.word, &file.poly) {
        (Some(u), None) => {
            let word = CfWord::new(file.case, u.clone())?;
            let fam = synthesize(&word)?;
            normalize(&fam)
        }
        (None, Some(p)) => explicit_family(file.case, p),
        _ => Err(Error::Invalid(
            "family file needs exactly one of \"word\" or \"poly\"".into(),
        )),
    }
}

/// Load a family description from a file.
pub fn load(path: &std::path::Path) -> Result<FamilyPoly> {
    from_json(&std::fs::read_to_string(path)?)
}

/// Accept an explicitly-given polynomial, inferring its word from the
/// expansions of consecutive members (early members may be exceptional,
/// with a shorter period than the generic one).
fn explicit_family(case: Case, p: &PolySpec) -> Result<FamilyPoly> {
    if p.a <= 0 || !is_square(p.a as u64) || p.e == 0 {
        return Err(Error::Invalid(
            "explicit family needs a positive square leading coefficient and e != 0".into(),
        ));
    }
    let probe = FamilyPoly {
        a: p.a,
        b: p.b,
        c: p.c,
        e: p.e,
        f: p.f,
        case,
        word: CfWord { case, u: vec![] },
    };
    let mut last: Option<CfExpansion> = None;
    for n in 1..=8u64 {
        let d = probe.d_value(n);
        if is_square(d) || (case == Case::B && d % 4 != 1) {
            last = None;
            continue;
        }
        let exp = expand(d, case.mode())?;
        if exp.u0 != probe.k(n) as u64 {
            last = None;
            continue;
        }
        if let Some(prev) = &last {
            if prev.inner_word() == exp.inner_word() {
                let word = CfWord::new(case, exp.inner_word().to_vec())?;
                let fam = FamilyPoly { word, ..probe };
                // sanity: the inferred word keeps matching further out
                for m in n + 1..=n + 4 {
                    let dm = fam.d_value(m);
                    if is_square(dm) || (case == Case::B && dm % 4 != 1) {
                        continue;
                    }
                    if !fam.member_matches(m)? {
                        return Err(Error::Invalid(format!(
                            "explicit polynomial is not a single-word family (n = {m})"
                        )));
                    }
                }
                return Ok(fam);
            }
        }
        last = Some(exp);
    }
    Err(Error::Invalid(
        "explicit polynomial has no stable word over n <= 8".into(),
    ))
}
