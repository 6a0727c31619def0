//! Experiment drivers: scans with a resumable cache, identity
//! verification, density / moment / distribution / census comparisons,
//! and reproducible reports.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classno::{class_number, DiscRecord};
use crate::error::{Error, Result};
use crate::family::{enumerate, predicted_count, FamilyPoly};
use crate::intmath::{
    count_roots, count_roots_brute, jacobsthal, jacobsthal_sum_prime, kronecker, sieve_primes,
};
use crate::randmodel::{char_sum_bridge, expect_x, local_law, Model, EULER_GAMMA};

pub const SCAN_SCHEMA: &str = "cfq.scan.v1";
pub const REPORT_SCHEMA: &str = "cfq.report.v1";

/// Default prime bound for Euler products and the random model.
pub const DEFAULT_PRIME_BOUND: u64 = 100_000;

/// Default ceiling on Delta for the exact L(1, chi) character sum in
/// scans; larger members fall back to the Euler product.
pub const DEFAULT_EXACT_CAP: i64 = 1_000_000;

/// One named comparison inside a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub observed: f64,
    pub predicted: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    /// Pass iff |observed - predicted| <= tolerance.
    pub fn abs(name: &str, observed: f64, predicted: f64, tolerance: f64) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            observed,
            predicted,
            tolerance,
            pass: (observed - predicted).abs() <= tolerance,
        }
    }

    /// Pass iff |observed/predicted - 1| <= tolerance.
    pub fn rel(name: &str, observed: f64, predicted: f64, tolerance: f64) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            observed,
            predicted,
            tolerance,
            pass: predicted != 0.0 && (observed / predicted - 1.0).abs() <= tolerance,
        }
    }

    /// An exact count of failures (pass iff zero).
    pub fn count(name: &str, failures: usize, total: usize) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            observed: failures as f64,
            predicted: 0.0,
            tolerance: total as f64,
            pass: failures == 0,
        }
    }
}

/// A reproducible experiment record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub experiment: String,
    pub family: String,
    pub parameters: serde_json::Value,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    pub wall_ms: u128,
}

impl ExperimentReport {
    fn assemble(
        experiment: &str,
        family: &str,
        parameters: serde_json::Value,
        checks: Vec<CheckResult>,
        start: Instant,
    ) -> ExperimentReport {
        let pass = checks.iter().all(|c| c.pass);
        ExperimentReport {
            schema: REPORT_SCHEMA.to_string(),
            experiment: experiment.to_string(),
            family: family.to_string(),
            parameters,
            checks,
            pass,
            wall_ms: start.elapsed().as_millis(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// FNV-1a 64-bit, used as the per-row cache checksum.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRow {
    schema: String,
    family: String,
    n: u64,
    record: DiscRecord,
    checksum: u64,
}

fn row_checksum(family: &str, n: u64, record: &DiscRecord) -> u64 {
    let payload = format!("{family}|{n}|{}", serde_json::to_string(record).expect("record json"));
    fnv1a(payload.as_bytes())
}

/// Load cached records for this family, verifying schema and checksums.
pub fn load_cache(path: &Path, family: &str) -> Result<HashMap<u64, DiscRecord>> {
    let mut out = HashMap::new();
    if !path.exists() {
        return Ok(out);
    }
    let file = std::fs::File::open(path)?;
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: CacheRow = serde_json::from_str(&line)
            .map_err(|e| Error::CacheCorrupt(format!("unparseable row: {e}")))?;
        if row.schema != SCAN_SCHEMA {
            return Err(Error::SchemaMismatch {
                expected: SCAN_SCHEMA.to_string(),
                found: row.schema,
            });
        }
        if row_checksum(&row.family, row.n, &row.record) != row.checksum {
            return Err(Error::CacheCorrupt(format!("checksum mismatch at n = {}", row.n)));
        }
        if row.family == family {
            out.insert(row.n, row.record);
        }
    }
    Ok(out)
}

fn append_cache(path: &Path, family: &str, records: &[&DiscRecord]) -> Result<()> {
    let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    for rec in records {
        let row = CacheRow {
            schema: SCAN_SCHEMA.to_string(),
            family: family.to_string(),
            n: rec.n,
            record: (*rec).clone(),
            checksum: row_checksum(family, rec.n, rec),
        };
        writeln!(file, "{}", serde_json::to_string(&row)?)?;
    }
    Ok(())
}

/// Scan every squarefree member d <= x: expansion, unit, L-value, class
/// number.  Resumable through the JSON-lines cache; rows are returned in
/// increasing n.  Guard violations abort the scan (they are never
/// silently dropped).
pub fn scan(
    fam: &FamilyPoly,
    x: u64,
    exact_cap: i64,
    prime_bound: u64,
    cache: Option<&Path>,
) -> Result<Vec<DiscRecord>> {
    let id = fam.id();
    let cached = match cache {
        Some(p) => load_cache(p, &id)?,
        None => HashMap::new(),
    };
    let mut rows = Vec::new();
    let mut fresh = Vec::new();
    for (n, d) in enumerate(fam, x) {
        if let Some(rec) = cached.get(&n) {
            rows.push(rec.clone());
        } else {
            let rec = class_number(n, d, exact_cap, prime_bound)?;
            rows.push(rec);
            fresh.push(rows.len() - 1);
        }
    }
    if let Some(p) = cache {
        let new_rows: Vec<&DiscRecord> = fresh.iter().map(|&i| &rows[i]).collect();
        append_cache(p, &id, &new_rows)?;
    }
    Ok(rows)
}

/// CSV emission for scan rows; fixed column set, deterministic formatting.
pub fn scan_csv(rows: &[DiscRecord]) -> String {
    let mut out = String::from("n,d,s,eps_x,eps_y,regulator,L1,h\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n, r.d, r.s, r.eps_x, r.eps_y, r.regulator, r.l1, r.h
        ));
    }
    out
}

/// Brute-force verification of the arithmetic identity suites on this
/// family.  `fault` deliberately corrupts the named suite so that the
/// failure path is testable end to end.
pub fn cmd_verify(fam: &FamilyPoly, fault: Option<&str>) -> Result<ExperimentReport> {
    let start = Instant::now();
    let poly = fam.poly();
    let mut checks = Vec::new();
    let corrupt = |name: &str| fault == Some(name);

    // Jacobsthal base identity: sum_n ((n^2 + b)/p) = -1 for p odd, p
    // not dividing b... checked for every b mod p
    {
        let mut bad = 0usize;
        let mut total = 0usize;
        for p in sieve_primes(200) {
            if p == 2 {
                continue;
            }
            for b in 0..p {
                total += 1;
                let sum: i64 = (0..p)
                    .map(|n| kronecker(((n * n + b) % p) as i64, p as i64) as i64)
                    .sum();
                let expect = if b % p == 0 { (p as i64) - 1 } else { -1 };
                if sum != expect {
                    bad += 1;
                }
            }
        }
        if corrupt("jacobsthal_base") {
            bad += 1;
        }
        checks.push(CheckResult::count("jacobsthal_base", bad, total));
    }

    // c(p) closed form vs brute force, p <= 500
    {
        let mut bad = 0usize;
        let mut total = 0usize;
        for p in sieve_primes(500) {
            total += 1;
            let closed = count_roots(&poly, p)?;
            let brute = count_roots_brute(&poly, p);
            if closed != brute || (corrupt("root_counts") && p == 3) {
                bad += 1;
            }
        }
        checks.push(CheckResult::count("root_counts", bad, total));
    }

    // J(p) closed form vs brute force, p <= 500
    {
        let mut bad = 0usize;
        let mut total = 0usize;
        for p in sieve_primes(500) {
            if p == 2 {
                continue;
            }
            total += 1;
            let closed = jacobsthal(&poly, p)?;
            let brute = jacobsthal_sum_prime(&poly, p);
            if closed != brute || (corrupt("jacobsthal_closed") && p == 3) {
                bad += 1;
            }
        }
        checks.push(CheckResult::count("jacobsthal_closed", bad, total));
    }

    // local laws are probability vectors, p <= 1000
    {
        let mut bad = 0usize;
        let mut total = 0usize;
        for p in sieve_primes(1_000) {
            if p == 2 {
                continue;
            }
            total += 1;
            if local_law(&poly, p).is_err() {
                bad += 1;
            }
        }
        checks.push(CheckResult::count("local_laws", bad, total));
    }

    // closed-form E(X(m)) vs atom expectation, and the complete
    // character-sum bridge, m <= 500
    {
        let mut bad_moment = 0usize;
        let mut bad_bridge = 0usize;
        for m in 1..=500u64 {
            if expect_x(&poly, m).is_err() {
                bad_moment += 1;
            }
            let (direct, product) = char_sum_bridge(&poly, m)?;
            if direct != product {
                bad_bridge += 1;
            }
        }
        if corrupt("expect_x") {
            bad_moment += 1;
        }
        checks.push(CheckResult::count("expect_x", bad_moment, 500));
        checks.push(CheckResult::count("char_sum_bridge", bad_bridge, 500));
    }

    // member expansions round-trip and unit bounds hold, n <= 40
    {
        let mut bad = 0usize;
        let mut total = 0usize;
        for n in 1..=40u64 {
            let d = fam.d_value(n);
            if crate::cfquad::is_square(d) {
                continue;
            }
            total += 1;
            let matches = fam.member_matches(n)?;
            // exceptional early members with a shorter period are allowed
            if !matches && n > 3 {
                bad += 1;
            }
            let exp = crate::cfquad::expand(d, fam.mode())?;
            if !crate::cfquad::unit_bounds_check(&exp) {
                bad += 1;
            }
        }
        checks.push(CheckResult::count("member_round_trip", bad, total));
    }

    Ok(ExperimentReport::assemble(
        "verify",
        &fam.id(),
        serde_json::json!({ "fault": fault }),
        checks,
        start,
    ))
}

/// chi_d(m) for a member d, realized through the fundamental
/// discriminant's Kronecker character.
pub fn chi_d(d: u64, m: u64) -> Result<i32> {
    let delta = crate::classno::fundamental_discriminant(d)?;
    Ok(kronecker(delta, m as i64))
}

/// Family density and character averages against the model.
pub fn cmd_density(fam: &FamilyPoly, xs: &[u64], prime_bound: u64) -> Result<ExperimentReport> {
    let start = Instant::now();
    let poly = fam.poly();
    let mut checks = Vec::new();
    let mut prev_dev: Option<f64> = None;
    for &x in xs {
        let members = enumerate(fam, x);
        let observed = members.len() as f64;
        let predicted = predicted_count(fam, x, prime_bound);
        checks.push(CheckResult::rel(&format!("count_x_{x}"), observed, predicted, 0.01));

        let mut max_dev = 0.0f64;
        for m in 1..=50u64 {
            let avg: f64 = members
                .iter()
                .map(|&(_, d)| chi_d(d, m).map(|v| v as f64))
                .sum::<Result<f64>>()?
                / observed;
            let model = expect_x(&poly, m)?;
            let model = *model.numer() as f64 / *model.denom() as f64;
            max_dev = max_dev.max((avg - model).abs());
        }
        checks.push(CheckResult::abs(&format!("char_avg_dev_x_{x}"), max_dev, 0.0, 0.01));
        if let Some(prev) = prev_dev {
            checks.push(CheckResult {
                name: format!("char_avg_dev_shrinks_at_{x}"),
                observed: max_dev,
                predicted: prev,
                tolerance: 0.0,
                pass: max_dev <= prev,
            });
        }
        prev_dev = Some(max_dev);
    }
    Ok(ExperimentReport::assemble(
        "density",
        &fam.id(),
        serde_json::json!({ "x": xs, "prime_bound": prime_bound }),
        checks,
        start,
    ))
}

/// Empirical family moments of L(1, chi_d) against the model moments.
pub fn cmd_moments(
    fam: &FamilyPoly,
    rows: &[DiscRecord],
    zs: &[f64],
    prime_bound: u64,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let model = Model::new(fam, prime_bound)?;
    let mut checks = Vec::new();
    for &z in zs {
        let emp: f64 =
            rows.iter().map(|r| r.l1.powf(z)).sum::<f64>() / rows.len() as f64;
        let (l, _) = model.log_moment(z)?;
        let tol = if z.abs() <= 1.0 { 0.01 } else { 0.03 };
        checks.push(CheckResult::rel(&format!("moment_z_{z}"), emp, l.exp(), tol));
    }
    Ok(ExperimentReport::assemble(
        "moments",
        &fam.id(),
        serde_json::json!({ "rows": rows.len(), "z": zs, "prime_bound": prime_bound }),
        checks,
        start,
    ))
}

/// Kolmogorov-Smirnov distance between two sorted samples.
pub fn ks_distance(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let fa = i as f64 / a.len() as f64;
        let fb = j as f64 / b.len() as f64;
        d = d.max((fa - fb).abs());
    }
    d
}

/// Distribution comparison: empirical tails of L(1, chi_d) vs Monte-Carlo
/// tails of the model and the saddle-point evaluation, plus the KS
/// distance between the two CDFs.
#[allow(clippy::too_many_arguments)]
pub fn cmd_dist(
    fam: &FamilyPoly,
    rows: &[DiscRecord],
    taus: &[f64],
    mc_samples: usize,
    seed: u64,
    prime_bound: u64,
    mc_bound: u64,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let model = Model::new(fam, prime_bound)?;
    let sampler = model.sampler(mc_bound)?;
    let draws = sampler.sample_many(seed, mc_samples);
    let mut checks = Vec::new();

    for &tau in taus {
        let threshold = EULER_GAMMA.exp() * tau;
        let emp =
            rows.iter().filter(|r| r.l1 > threshold).count() as f64 / rows.len() as f64;
        let mc = draws.iter().filter(|&&l| l > threshold).count() as f64 / draws.len() as f64;
        if mc * (draws.len() as f64) < 50.0 {
            // below Monte-Carlo resolution: record, do not judge
            checks.push(CheckResult {
                name: format!("tail_tau_{tau}_below_resolution"),
                observed: emp,
                predicted: mc,
                tolerance: 1.0,
                pass: true,
            });
        } else {
            checks.push(CheckResult::abs(&format!("tail_tau_{tau}"), emp, mc, 0.02));
        }
        let phi = model.phi_saddle(tau)?;
        checks.push(CheckResult::rel(&format!("phi_saddle_vs_mc_tau_{tau}"), phi, mc, 0.25));
    }

    let mut emp: Vec<f64> = rows.iter().map(|r| r.l1).collect();
    let mut mc = draws;
    let ks = ks_distance(&mut emp, &mut mc);
    checks.push(CheckResult::abs("ks_distance", ks, 0.0, 0.05));

    Ok(ExperimentReport::assemble(
        "dist",
        &fam.id(),
        serde_json::json!({
            "rows": rows.len(), "tau": taus, "mc_samples": mc_samples,
            "seed": seed, "prime_bound": prime_bound, "mc_bound": mc_bound
        }),
        checks,
        start,
    ))
}

/// Census of class numbers: sum_{h <= H} F_D(h) counted by scanning
/// d <= X := min(x_cap, H^2 (log H)^8), against C2 H log H, with the
/// ratio's trend over successive doublings of H.
pub fn cmd_census(
    fam: &FamilyPoly,
    h_max: u64,
    x_cap: u64,
    prime_bound: u64,
    cache: Option<&Path>,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let hf = h_max as f64;
    let x = (hf * hf * hf.ln().powi(8)).min(x_cap as f64) as u64;
    let rows = scan(fam, x, DEFAULT_EXACT_CAP, prime_bound, cache)?;
    let model = Model::new(fam, prime_bound)?;
    let c2 = model.c2_constant()?;

    let mut checks = Vec::new();
    let mut prev_gap: Option<f64> = None;
    let mut h = h_max;
    let mut halvings = Vec::new();
    while h >= 4 && halvings.len() < 4 {
        halvings.push(h);
        h /= 2;
    }
    halvings.reverse();
    for h in halvings {
        let hh = h as f64;
        let observed = rows.iter().filter(|r| r.h <= h).count() as f64;
        // The C2 H log H asymptotic is stated for the analytic class number
        // h' = sqrt(Delta) L / log eps; members here have Delta = d and
        // eps_Delta = eps_d, so h' = 2h and {h <= H} = {h' <= 2H}:
        // the predicted count is C2 (2H) log(2H) = 2 C2 H (log H + log 2).
        let predicted = 2.0 * c2 * hh * (hh.ln() + std::f64::consts::LN_2);
        let tol = if h == h_max { 0.25 } else { 0.60 };
        checks.push(CheckResult::rel(&format!("census_H_{h}"), observed, predicted, tol));
        let gap = (observed / predicted - 1.0).abs();
        if let Some(prev) = prev_gap {
            checks.push(CheckResult {
                name: format!("census_trend_H_{h}"),
                observed: gap,
                predicted: prev,
                tolerance: 0.0,
                pass: gap <= prev,
            });
        }
        prev_gap = Some(gap);
    }
    Ok(ExperimentReport::assemble(
        "census",
        &fam.id(),
        serde_json::json!({ "H": h_max, "x": x, "prime_bound": prime_bound }),
        checks,
        start,
    ))
}
