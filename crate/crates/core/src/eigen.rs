//! Two-parameter eigenvalue problems and the eigenvalue catalog.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::{
    connection_coeffs, count_zeros, phase_match, ConnectionData, LambdaPair, Launch,
    SeparatedSolution, ThetaSystem,
};
use crate::geometry::Params;
use crate::hexfloat;

pub const SCHEMA_VERSION: u32 = 1;
/// Largest accepted normalized endpoint mismatch.
pub const RESIDUAL_TOL: f64 = 1e-10;

static SOLVE_CALLS: AtomicUsize = AtomicUsize::new(0);

/// Number of eigenvalue solves performed by this process.
pub fn solve_count() -> usize {
    SOLVE_CALLS.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParityVector {
    pub kind: u8,
    pub bits: Vec<u8>,
}

impl ParityVector {
    pub fn new(kind: u8, bits: &[u8]) -> Result<Self> {
        check_kind(kind)?;
        let want = if kind == 2 { 4 } else { 3 };
        if bits.len() != want {
            return Err(Error::Domain(format!(
                "kind {kind} takes {want} parity bits, got {}",
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Domain(format!(
                "parity bits must be 0 or 1: {bits:?}"
            )));
        }
        Ok(ParityVector {
            kind,
            bits: bits.to_vec(),
        })
    }

    /// Parses a bit string such as "0101".
    pub fn parse(kind: u8, s: &str) -> Result<Self> {
        let bits: Option<Vec<u8>> = s
            .chars()
            .filter(|c| *c != ',')
            .map(|c| c.to_digit(2).map(|d| d as u8))
            .collect();
        let bits = bits.ok_or_else(|| Error::Domain(format!("bad parity string {s:?}")))?;
        Self::new(kind, &bits)
    }

    /// All parity vectors of a kind in binary order.
    pub fn all(kind: u8) -> Vec<Self> {
        let m = if kind == 2 { 4 } else { 3 };
        (0..1u32 << m)
            .map(|v| {
                let bits: Vec<u8> = (0..m).rev().map(|k| ((v >> k) & 1) as u8).collect();
                ParityVector { kind, bits }
            })
            .collect()
    }

    /// Parity attached to singular point a_j, if the kind assigns one.
    pub fn at(&self, j: usize) -> Option<u8> {
        match self.kind {
            2 => self.bits.get(j).copied(),
            1 => j.checked_sub(1).and_then(|k| self.bits.get(k).copied()),
            _ => {
                if j <= 2 {
                    self.bits.get(j).copied()
                } else {
                    None
                }
            }
        }
    }

    pub fn as_int(&self) -> u32 {
        self.bits.iter().fold(0, |acc, &b| 2 * acc + b as u32)
    }
}

impl fmt::Display for ParityVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

fn check_kind(kind: u8) -> Result<()> {
    if (1..=3).contains(&kind) {
        Ok(())
    } else {
        Err(Error::Domain(format!("kind must be 1, 2 or 3, got {kind}")))
    }
}

/// The two doubly-Frobenius intervals of a kind, in increasing order.
pub fn eigen_intervals(kind: u8) -> [usize; 2] {
    match kind {
        1 => [2, 3],
        2 => [1, 3],
        _ => [1, 2],
    }
}

/// The interval whose solution is Frobenius at one end only.
pub fn free_interval(kind: u8) -> usize {
    match kind {
        1 => 1,
        2 => 2,
        _ => 3,
    }
}

/// Endpoint parities of an interval.
pub fn interval_parities(p: &ParityVector, interval: usize) -> (u8, u8) {
    (p.at(interval - 1).unwrap_or(0), p.at(interval).unwrap_or(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub kind: u8,
    pub n: [usize; 2],
    pub p: ParityVector,
    pub lam: LambdaPair<f64>,
    pub norm_scale: f64,
    pub residuals: [f64; 2],
    pub zero_counts: [usize; 2],
    pub connection: Option<ConnectionData<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecordKey {
    pub kind: u8,
    pub n: [usize; 2],
    pub p: ParityVector,
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "kind {} n=({},{}) p={}",
            self.kind, self.n[0], self.n[1], self.p
        )
    }
}

impl EigenRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            kind: self.kind,
            n: self.n,
            p: self.p.clone(),
        }
    }

    /// Re-checks the stored invariants without solving.
    pub fn validate(&self) -> Result<()> {
        self.validate_with(RESIDUAL_TOL)
    }

    pub fn validate_with(&self, tol: f64) -> Result<()> {
        let key = self.key();
        if self.residuals.iter().any(|r| !(r.abs() <= tol)) {
            return Err(Error::Catalog(format!(
                "{key}: residuals {:?} exceed {tol:e}",
                self.residuals
            )));
        }
        if self.zero_counts != self.n {
            return Err(Error::Catalog(format!(
                "{key}: zero counts {:?} differ from index",
                self.zero_counts
            )));
        }
        if !(self.norm_scale > 0.0) || !self.norm_scale.is_finite() {
            return Err(Error::Catalog(format!(
                "{key}: norm scale {} is not positive",
                self.norm_scale
            )));
        }
        let need_conn = self.kind != 2;
        if need_conn != self.connection.is_some() {
            return Err(Error::Catalog(format!(
                "{key}: connection data inconsistent with kind"
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// one-dimensional root finding

/// Brent's method on a bracket with f(a) f(b) <= 0.
pub(crate) fn brent<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    xtol: f64,
) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NotFound(format!("no sign change on [{a}, {b}]")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::NotFound("root iteration limit".into()))
}

// ---------------------------------------------------------------------------
// single-interval problem

/// Range of the Liouville potential on an interval for a given lambda1.
fn potential_range(interval: usize, l1: f64, params: &Params<f64>) -> (f64, f64) {
    let (lo, hi) = params.interval(interval);
    let sigma = if interval == 2 { 1.0 } else { -1.0 };
    let v = |s: f64| -sigma * (3.0 / 16.0 * s * s + l1 * s);
    let mut pts = vec![lo, hi];
    let vert = -l1 * 8.0 / 3.0;
    if vert > lo && vert < hi {
        pts.push(vert);
    }
    let vals: Vec<f64> = pts.iter().map(|&s| v(s)).collect();
    (
        vals.iter().cloned().fold(f64::INFINITY, f64::min),
        vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    )
}

/// Split fraction at the minimum of the Liouville potential, kept inside [0.2, 0.8].
///
/// Matching inside the classically allowed zone keeps the normalized mismatch well
/// conditioned when the eigenfunction tunnels near one end.
fn match_fraction(interval: usize, l1: f64, params: &Params<f64>) -> f64 {
    let (lo, hi) = params.interval(interval);
    let sigma = if interval == 2 { 1.0 } else { -1.0 };
    let v = |f: f64| {
        let s = lo + f * (hi - lo);
        -sigma * (3.0 / 16.0 * s * s + l1 * s)
    };
    let mut cands = vec![0.2, 0.8];
    let vert = (-l1 * 8.0 / 3.0 - lo) / (hi - lo);
    if vert > 0.2 && vert < 0.8 {
        cands.push(vert);
    }
    let best = cands.into_iter().fold((0.5, f64::INFINITY), |acc, f| {
        if v(f) < acc.1 {
            (f, v(f))
        } else {
            acc
        }
    });
    if v(0.5) <= best.1 + 1e-12 * best.1.abs() {
        0.5
    } else {
        best.0
    }
}

/// lambda2 at which the solution on `interval` is doubly Frobenius with `zeros` interior zeros.
pub fn lambda2_on_interval(
    interval: usize,
    l1: f64,
    zeros: usize,
    pl: u8,
    pr: u8,
    params: &Params<f64>,
) -> Result<f64> {
    let sigma = if interval == 2 { 1.0 } else { -1.0 };
    let target = zeros as f64;
    // mu = sigma * lambda2 is the Liouville eigenvalue and the phase index increases with it
    let g = |mu: f64| -> Result<f64> {
        let lam = LambdaPair::new(l1, sigma * mu);
        Ok(phase_match(interval, &lam, pl, pr, params, 0.5)?.index - target)
    };
    let (vmin, vmax) = potential_range(interval, l1, params);
    let len = ThetaSystem::new(interval, &LambdaPair::new(l1, 0.0), params).liouville_length();
    let mut lo = vmin - 1.0;
    let mut glo = g(lo)?;
    let mut step = 1.0;
    while glo >= 0.0 {
        step *= 2.0;
        lo = vmin - step;
        glo = g(lo)?;
        if step > 1e12 {
            return Err(Error::NotFound(format!(
                "no lower bracket on interval {interval}"
            )));
        }
    }
    let base = ((target + 2.0) * std::f64::consts::PI / len).powi(2);
    let mut ex = base + 1.0;
    let mut hi = vmax + ex;
    let mut ghi = g(hi)?;
    while ghi <= 0.0 {
        ex *= 2.0;
        hi = vmax + ex;
        ghi = g(hi)?;
        if ex > 1e14 {
            return Err(Error::NotFound(format!(
                "no upper bracket on interval {interval}"
            )));
        }
    }
    let mu = brent(g, lo, hi, glo, ghi, 1e-14 * (1.0 + lo.abs().max(hi.abs())))?;
    Ok(sigma * mu)
}

// ---------------------------------------------------------------------------
// two-parameter solve

struct Problem<'a> {
    kind: u8,
    n: [usize; 2],
    par: [(u8, u8); 2],
    ints: [usize; 2],
    params: &'a Params<f64>,
}

impl Problem<'_> {
    fn new<'a>(kind: u8, n: [usize; 2], p: &ParityVector, params: &'a Params<f64>) -> Problem<'a> {
        let ints = eigen_intervals(kind);
        Problem {
            kind,
            n,
            par: [interval_parities(p, ints[0]), interval_parities(p, ints[1])],
            ints,
            params,
        }
    }

    fn lambda2(&self, which: usize, l1: f64) -> Result<f64> {
        let (pl, pr) = self.par[which];
        lambda2_on_interval(self.ints[which], l1, self.n[which], pl, pr, self.params)
    }

    /// Increasing in lambda1.
    fn gap(&self, l1: f64) -> Result<f64> {
        Ok(self.lambda2(0, l1)? - self.lambda2(1, l1)?)
    }

    fn residual(&self, lam: &LambdaPair<f64>) -> Result<[f64; 2]> {
        let mut out = [0.0; 2];
        for w in 0..2 {
            let (pl, pr) = self.par[w];
            let frac = match_fraction(self.ints[w], lam.lambda1, self.params);
            out[w] = phase_match(self.ints[w], lam, pl, pr, self.params, frac)?.normalized;
        }
        Ok(out)
    }

    fn solve_lambda1(&self) -> Result<f64> {
        let scale = self.params.span() * (1.0 + (self.n[0] + self.n[1]) as f64);
        let x0 = 0.0;
        let f0 = self.gap(x0)?;
        if f0 == 0.0 {
            return Ok(x0);
        }
        let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
        let mut a = x0;
        let mut fa = f0;
        let mut step = scale;
        for _ in 0..40 {
            let b = a + dir * step;
            let fb = self.gap(b)?;
            if fb.signum() != fa.signum() {
                let (lo, hi, flo, fhi) = if a < b {
                    (a, b, fa, fb)
                } else {
                    (b, a, fb, fa)
                };
                let xtol = 1e-13 * (1.0 + lo.abs().max(hi.abs()));
                return brent(|x| self.gap(x), lo, hi, flo, fhi, xtol);
            }
            a = b;
            fa = fb;
            step *= 2.0;
        }
        Err(Error::NotFound(format!(
            "kind {} n={:?}: lambda1 search window exhausted",
            self.kind, self.n
        )))
    }

    /// Newton iteration on both normalized mismatches with a central-difference Jacobian.
    fn polish(&self, mut lam: LambdaPair<f64>) -> Result<(LambdaPair<f64>, [f64; 2])> {
        let mut r = self.residual(&lam)?;
        for _ in 0..8 {
            let norm = r[0].abs().max(r[1].abs());
            if norm <= 1e-14 {
                break;
            }
            let h1 = 1e-6 * (1.0 + lam.lambda1.abs());
            let h2 = 1e-6 * (1.0 + lam.lambda2.abs());
            let rp1 = self.residual(&LambdaPair::new(lam.lambda1 + h1, lam.lambda2))?;
            let rm1 = self.residual(&LambdaPair::new(lam.lambda1 - h1, lam.lambda2))?;
            let rp2 = self.residual(&LambdaPair::new(lam.lambda1, lam.lambda2 + h2))?;
            let rm2 = self.residual(&LambdaPair::new(lam.lambda1, lam.lambda2 - h2))?;
            let j = [
                [
                    (rp1[0] - rm1[0]) / (2.0 * h1),
                    (rp2[0] - rm2[0]) / (2.0 * h2),
                ],
                [
                    (rp1[1] - rm1[1]) / (2.0 * h1),
                    (rp2[1] - rm2[1]) / (2.0 * h2),
                ],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let d1 = (r[0] * j[1][1] - r[1] * j[0][1]) / det;
            let d2 = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
            let cand = LambdaPair::new(lam.lambda1 - d1, lam.lambda2 - d2);
            let rc = self.residual(&cand)?;
            if rc[0].abs().max(rc[1].abs()) >= norm {
                break;
            }
            lam = cand;
            r = rc;
            let size = 1.0 + lam.lambda1.abs().max(lam.lambda2.abs());
            if d1.abs().max(d2.abs()) <= 1e-10 * size {
                break;
            }
        }
        Ok((lam, r))
    }
}

/// Solves for the eigenpair without computing the normalization.
pub fn solve_eigenpair(
    kind: u8,
    n: [usize; 2],
    p: &ParityVector,
    params: &Params<f64>,
    tol: f64,
) -> Result<EigenRecord> {
    check_kind(kind)?;
    if p.kind != kind {
        return Err(Error::Domain(format!(
            "parity vector of kind {} used for kind {kind}",
            p.kind
        )));
    }
    SOLVE_CALLS.fetch_add(1, Ordering::Relaxed);
    let prob = Problem::new(kind, n, p, params);
    let l1 = prob.solve_lambda1()?;
    let l2 = prob.lambda2(0, l1)?;
    let (lam, res) = prob.polish(LambdaPair::new(l1, l2))?;
    if res.iter().any(|r| !(r.abs() <= tol)) {
        return Err(Error::NotFound(format!(
            "kind {kind} n={n:?} p={p}: residuals {res:?} above {tol:e}"
        )));
    }
    let mut zc = [0usize; 2];
    for w in 0..2 {
        zc[w] = count_zeros(prob.ints[w], &lam, prob.par[w].0, prob.par[w].1, params)?;
    }
    if zc != n {
        return Err(Error::WrongZeroCount {
            target: n,
            found: zc,
        });
    }
    let free = free_interval(kind);
    let (fl, fr) = interval_parities(p, free);
    let connection = match kind {
        2 => {
            let m = phase_match(free, &lam, fl, fr, params, 0.5)?;
            if m.normalized.abs() <= 1e-6 {
                return Err(Error::DegenerateMiddle(m.normalized));
            }
            None
        }
        1 => Some(connect(free, Launch::Right(fr), 0, &lam, params)?),
        _ => Some(connect(free, Launch::Left(fl), 3, &lam, params)?),
    };
    Ok(EigenRecord {
        kind,
        n,
        p: p.clone(),
        lam,
        norm_scale: f64::NAN,
        residuals: res,
        zero_counts: zc,
        connection,
    })
}

fn connect(
    interval: usize,
    launch: Launch,
    end: usize,
    lam: &LambdaPair<f64>,
    params: &Params<f64>,
) -> Result<ConnectionData<f64>> {
    let e = SeparatedSolution::build(interval, launch, lam, params)?;
    let (lo, hi) = e.bounds();
    let st = [
        e.eval(lo + 0.35 * (hi - lo))?,
        e.eval(lo + 0.65 * (hi - lo))?,
    ];
    connection_coeffs(&st, end, lam, params)
}

/// Normalized endpoint mismatches and zero counts recomputed from a record's eigenvalues.
pub fn recheck_record(rec: &EigenRecord, params: &Params<f64>) -> Result<([f64; 2], [usize; 2])> {
    let prob = Problem::new(rec.kind, rec.n, &rec.p, params);
    let res = prob.residual(&rec.lam)?;
    let mut zc = [0usize; 2];
    for w in 0..2 {
        zc[w] = count_zeros(prob.ints[w], &rec.lam, prob.par[w].0, prob.par[w].1, params)?;
    }
    Ok((res, zc))
}

/// Solves the eigenpair and its normalization.
pub fn solve_eigen(
    kind: u8,
    n: [usize; 2],
    p: &ParityVector,
    params: &Params<f64>,
    tol: f64,
) -> Result<EigenRecord> {
    let mut rec = solve_eigenpair(kind, n, p, params, tol)?;
    rec.norm_scale = crate::harmonics::normalization_integral(&rec, params)?;
    Ok(rec)
}

/// Multi-indices with n1 + n2 <= max_order, ordered by total then lexicographically.
pub fn multi_indices(max_order: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    for t in 0..=max_order {
        for a in (0..=t).rev() {
            out.push([a, t - a]);
        }
    }
    out.sort_by_key(|n| (n[0] + n[1], *n));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub params: Params<f64>,
    pub records: BTreeMap<RecordKey, EigenRecord>,
    pub provenance: String,
    /// largest accepted normalized endpoint mismatch
    pub tol: f64,
}

impl Catalog {
    pub fn new(params: Params<f64>) -> Self {
        Catalog {
            params,
            records: BTreeMap::new(),
            provenance: format!("cyclharm {}", env!("CARGO_PKG_VERSION")),
            tol: RESIDUAL_TOL,
        }
    }

    pub fn get(&self, key: &RecordKey) -> Option<&EigenRecord> {
        self.records.get(key)
    }

    pub fn insert(&mut self, rec: EigenRecord) {
        self.records.insert(rec.key(), rec);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records of one kind in expansion order.
    pub fn of_kind(&self, kind: u8) -> Vec<&EigenRecord> {
        let mut v: Vec<&EigenRecord> = self.records.values().filter(|r| r.kind == kind).collect();
        v.sort_by_key(|r| (r.n[0] + r.n[1], r.n, r.p.as_int()));
        v
    }

    /// Solves every missing record up to max_order; returns the number of new solves.
    pub fn fill(&mut self, kind: u8, max_order: usize) -> Result<usize> {
        check_kind(kind)?;
        let keys: Vec<RecordKey> = multi_indices(max_order)
            .into_iter()
            .flat_map(|n| {
                ParityVector::all(kind)
                    .into_iter()
                    .map(move |p| RecordKey { kind, n, p })
            })
            .filter(|k| !self.records.contains_key(k))
            .collect();
        let params = self.params;
        let tol = self.tol;
        let solved: Vec<Result<EigenRecord>> = keys
            .par_iter()
            .map(|k| solve_eigen(k.kind, k.n, &k.p, &params, tol).map_err(|e| e.at_record(k)))
            .collect();
        let count = solved.len();
        for r in solved {
            self.insert(r?);
        }
        Ok(count)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let h = |x: f64| serde_json::Value::String(hexfloat::format(x));
        let records: Vec<serde_json::Value> = self
            .records
            .values()
            .map(|r| {
                let mut o = serde_json::json!({
                    "kind": r.kind,
                    "n": r.n,
                    "p": r.p.bits,
                    "lambda1": h(r.lam.lambda1),
                    "lambda2": h(r.lam.lambda2),
                    "norm_scale": h(r.norm_scale),
                    "residuals": [h(r.residuals[0]), h(r.residuals[1])],
                    "zero_counts": r.zero_counts,
                });
                if let Some(c) = &r.connection {
                    o["connection"] =
                        serde_json::json!({"a": h(c.a_coef), "b": h(c.b_coef), "c": h(c.c_coef)});
                }
                o
            })
            .collect();
        serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "a": self.params.a().iter().map(|&x| h(x)).collect::<Vec<_>>(),
            "provenance": self.provenance,
            "tolerance": h(self.tol),
            "records": records,
        })
    }

    pub fn from_json(v: &serde_json::Value, expected: Option<&Params<f64>>) -> Result<Self> {
        let bad = |m: &str| Error::Catalog(m.to_string());
        let ver = v["schema_version"]
            .as_u64()
            .ok_or_else(|| bad("missing schema_version"))?;
        if ver != SCHEMA_VERSION as u64 {
            return Err(Error::Catalog(format!(
                "schema version {ver} differs from {SCHEMA_VERSION}"
            )));
        }
        let num = |x: &serde_json::Value| -> Result<f64> {
            match x {
                serde_json::Value::String(s) => hexfloat::parse(s),
                serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| bad("bad number")),
                _ => Err(bad("expected a number")),
            }
        };
        let arr = v["a"].as_array().ok_or_else(|| bad("missing a"))?;
        if arr.len() != 4 {
            return Err(bad("a must have four entries"));
        }
        let mut a = [0.0; 4];
        for (k, x) in arr.iter().enumerate() {
            a[k] = num(x)?;
        }
        let params = Params::new(a)?;
        if let Some(e) = expected {
            if e.a() != params.a() {
                return Err(Error::Catalog(format!(
                    "catalog parameters {:?} differ from {:?}",
                    params.a(),
                    e.a()
                )));
            }
        }
        let mut cat = Catalog::new(params);
        if let Some(p) = v["provenance"].as_str() {
            cat.provenance = p.to_string();
        }
        if let Some(t) = v.get("tolerance") {
            cat.tol = num(t)?;
        }
        let recs = v["records"]
            .as_array()
            .ok_or_else(|| bad("missing records"))?;
        for r in recs {
            let kind = r["kind"]
                .as_u64()
                .ok_or_else(|| bad("record without kind"))? as u8;
            let uvec = |x: &serde_json::Value| -> Result<Vec<u64>> {
                x.as_array()
                    .ok_or_else(|| bad("expected an array"))?
                    .iter()
                    .map(|y| y.as_u64().ok_or_else(|| bad("expected an integer")))
                    .collect()
            };
            let n = uvec(&r["n"])?;
            let zc = uvec(&r["zero_counts"])?;
            if n.len() != 2 || zc.len() != 2 {
                return Err(bad("n and zero_counts must have two entries"));
            }
            let bits: Vec<u8> = uvec(&r["p"])?.into_iter().map(|b| b as u8).collect();
            let p = ParityVector::new(kind, &bits)?;
            let res = r["residuals"]
                .as_array()
                .ok_or_else(|| bad("missing residuals"))?;
            if res.len() != 2 {
                return Err(bad("residuals must have two entries"));
            }
            let connection = match r.get("connection") {
                Some(c) if !c.is_null() => Some(ConnectionData {
                    a_coef: num(&c["a"])?,
                    b_coef: num(&c["b"])?,
                    c_coef: num(&c["c"])?,
                }),
                _ => None,
            };
            let rec = EigenRecord {
                kind,
                n: [n[0] as usize, n[1] as usize],
                p,
                lam: LambdaPair::new(num(&r["lambda1"])?, num(&r["lambda2"])?),
                norm_scale: num(&r["norm_scale"])?,
                residuals: [num(&res[0])?, num(&res[1])?],
                zero_counts: [zc[0] as usize, zc[1] as usize],
                connection,
            };
            rec.validate_with(cat.tol)?;
            if cat.records.contains_key(&rec.key()) {
                return Err(Error::Catalog(format!("duplicate record {}", rec.key())));
            }
            cat.insert(rec);
        }
        Ok(cat)
    }

    /// Writes the catalog under an exclusive lock, keeping records another
    /// process stored in the meantime.
    pub fn save(&self, path: &Path) -> Result<()> {
        let lock_path = path.with_extension("lock");
        let lock = std::fs::OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)?;
        lock.lock()?;
        let mut merged = self.clone();
        if path.exists() {
            let disk = Self::load(path, Some(&self.params))?;
            for (k, r) in disk.records {
                merged.records.entry(k).or_insert(r);
            }
        }
        let text = serde_json::to_string_pretty(&merged.to_json())?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, path)?;
        lock.unlock()?;
        Ok(())
    }

    pub fn load(path: &Path, expected: Option<&Params<f64>>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let v: serde_json::Value = serde_json::from_str(&text)?;
        Self::from_json(&v, expected)
    }
}

pub fn enumerate_eigen(kind: u8, max_order: usize, params: &Params<f64>) -> Result<Catalog> {
    let mut cat = Catalog::new(*params);
    cat.fill(kind, max_order)?;
    Ok(cat)
}

/// Eigenvalues under the affine change s = alpha * t + beta, seen from the t side.
pub fn affine_lambda(lam: &LambdaPair<f64>, alpha: f64, beta: f64) -> LambdaPair<f64> {
    LambdaPair::new(
        (lam.lambda1 + 3.0 / 8.0 * beta) / alpha,
        (lam.lambda2 + lam.lambda1 * beta + 3.0 / 16.0 * beta * beta) / (alpha * alpha),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_vectors() {
        assert_eq!(ParityVector::all(2).len(), 16);
        assert_eq!(ParityVector::all(1).len(), 8);
        let p = ParityVector::parse(1, "011").unwrap();
        assert_eq!(
            (p.at(0), p.at(1), p.at(2), p.at(3)),
            (None, Some(0), Some(1), Some(1))
        );
        let p = ParityVector::parse(3, "110").unwrap();
        assert_eq!((p.at(0), p.at(2), p.at(3)), (Some(1), Some(0), None));
        assert!(ParityVector::parse(2, "010").is_err());
        assert!(ParityVector::parse(2, "0120").is_err());
        assert_eq!(ParityVector::all(2)[5].to_string(), "0101");
    }

    #[test]
    fn brent_finds_cubic_root() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let r = brent(f, 0.0, 2.0, -2.0, 6.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn index_ordering() {
        let m = multi_indices(2);
        assert_eq!(m, vec![[0, 0], [0, 1], [1, 0], [0, 2], [1, 1], [2, 0]]);
    }

    #[test]
    fn single_interval_zero_counts() {
        let params = Params::default();
        for zeros in 0..3 {
            let l2 = lambda2_on_interval(1, 0.3, zeros, 0, 1, &params).unwrap();
            let lam = LambdaPair::new(0.3, l2);
            assert_eq!(count_zeros(1, &lam, 0, 1, &params).unwrap(), zeros);
            let m = phase_match(1, &lam, 0, 1, &params, 0.5).unwrap();
            assert!(m.normalized.abs() < 1e-11);
        }
    }

    #[test]
    fn lowest_kind2_pair() {
        let params = Params::default();
        let p = ParityVector::parse(2, "0000").unwrap();
        let rec = solve_eigenpair(2, [0, 0], &p, &params, RESIDUAL_TOL).unwrap();
        assert_eq!(rec.zero_counts, [0, 0]);
        assert!(rec.residuals.iter().all(|r| r.abs() <= 1e-10));
    }
}
