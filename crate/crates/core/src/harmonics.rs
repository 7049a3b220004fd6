//! Internal and external harmonics of kinds 1, 2 and 3.

use serde::{Deserialize, Serialize};

use crate::eigen::{
    eigen_intervals, free_interval, interval_parities, Catalog, EigenRecord, ParityVector,
    RecordKey, RESIDUAL_TOL,
};
use crate::error::{Error, Result, SingularSet};
use crate::expansion::{kind_constant, surface_index, SurfaceQuadrature, DEFAULT_ORDER};
use crate::fuchsian::{
    dense_wronskian, pq_pair, ConnectionData, LambdaPair, Launch, SeparatedSolution,
};
use crate::geometry::{classify_region, omega, Located, Params, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Internal,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    I,
    J,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HarmonicSpec {
    pub kind: u8,
    pub n: [usize; 2],
    pub p: ParityVector,
    pub role: Role,
}

/// The three interval solutions of one eigenpair plus the partner solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedTriple {
    pub kind: u8,
    pub e: [SeparatedSolution<f64>; 3],
    /// Kind 2: Frobenius solution at a2 with W[E2, F2] = wronskian_sign(2).
    pub f2: Option<SeparatedSolution<f64>>,
    /// Kinds 1 and 3: the P, Q pair at the outer endpoint.
    pub pq: Option<(SeparatedSolution<f64>, SeparatedSolution<f64>)>,
    pub connection: Option<ConnectionData<f64>>,
}

/// Value of the modified Wronskian W[E, F] on the free interval.
///
/// Kinds 2 and 3 have their bounded region on the left of the free interval, so the
/// integral representation fixes W = -1 there; kind 1 has it on the right and W = +1.
pub fn wronskian_sign(kind: u8) -> f64 {
    if kind == 1 {
        1.0
    } else {
        -1.0
    }
}

fn parity(p: &ParityVector, j: usize) -> u8 {
    p.at(j).unwrap_or(0)
}

impl SeparatedTriple {
    pub fn build(
        kind: u8,
        p: &ParityVector,
        lam: &LambdaPair<f64>,
        params: &Params<f64>,
    ) -> Result<Self> {
        let free = free_interval(kind);
        let mut sols = Vec::with_capacity(3);
        for i in 1..=3 {
            let (pl, pr) = interval_parities(p, i);
            let launch = if i != free {
                Launch::Both(pl, pr)
            } else {
                match kind {
                    1 => Launch::Right(pr),
                    _ => Launch::Left(pl),
                }
            };
            sols.push(SeparatedSolution::build(i, launch, lam, params)?);
        }
        let e: [SeparatedSolution<f64>; 3] = sols.try_into().unwrap();
        let mut out = SeparatedTriple {
            kind,
            e,
            f2: None,
            pq: None,
            connection: None,
        };
        match kind {
            2 => {
                let f = SeparatedSolution::build(2, Launch::Right(parity(p, 2)), lam, params)?;
                let (lo, hi) = params.interval(2);
                let mid = 0.5 * (lo + hi);
                let w = dense_wronskian(&out.e[1], &f, mid, params)?;
                if w == 0.0 || !w.is_finite() {
                    return Err(Error::DegenerateMiddle(w));
                }
                out.f2 = Some(f.scaled(wronskian_sign(2) / w));
            }
            _ => {
                let end = if kind == 1 { 0 } else { 3 };
                let (pp, qq) = pq_pair(end, lam, params)?;
                let e = &out.e[free - 1];
                let (lo, hi) = params.interval(free);
                let mut acc = [0.0; 2];
                for f in [0.4, 0.6] {
                    let s = lo + f * (hi - lo);
                    acc[0] += 0.5 * dense_wronskian(e, &qq, s, params)?;
                    acc[1] += 0.5 * dense_wronskian(&pp, e, s, params)?;
                }
                let (a, b) = (acc[0], acc[1]);
                let scale = a.abs().max(b.abs());
                if a.abs() < 1e-10 * scale || b.abs() < 1e-10 * scale || scale == 0.0 {
                    return Err(Error::DegenerateConnection { a, b });
                }
                out.connection = Some(ConnectionData {
                    a_coef: a,
                    b_coef: b,
                    c_coef: -1.0 / (2.0 * a * b),
                });
                out.pq = Some((pp, qq));
            }
        }
        Ok(out)
    }

    /// Index (0-based) of the solution that carries the normalization.
    pub fn scaled_index(kind: u8) -> usize {
        eigen_intervals(kind)[0] - 1
    }

    fn with_scale(mut self, k: f64) -> Self {
        let i = Self::scaled_index(self.kind);
        self.e[i] = self.e[i].scaled(k);
        self
    }

    /// The solution on the non-eigen interval.
    pub fn free_solution(&self) -> &SeparatedSolution<f64> {
        &self.e[free_interval(self.kind) - 1]
    }

    /// Second solution on the free interval and its modified Wronskian with the first at s.
    pub fn partner_wronskian(&self, s: f64, params: &Params<f64>) -> Result<f64> {
        let e = self.free_solution();
        match (&self.f2, &self.pq, &self.connection) {
            (Some(f), _, _) => dense_wronskian(e, f, s, params),
            (_, Some((p, q)), Some(c)) => {
                // F = sign c (a P - b Q)
                let wp = dense_wronskian(e, p, s, params)?;
                let wq = dense_wronskian(e, q, s, params)?;
                Ok(wronskian_sign(self.kind) * c.c_coef * (c.a_coef * wp - c.b_coef * wq))
            }
            _ => Err(Error::Domain("partner solution missing".into())),
        }
    }
}

/// Reference surface value for the normalization, stepped off near-zeros of E.
///
/// The 5% threshold is measured against the largest |E| over the candidate window
/// (midpoint plus or minus 20% of the interval), since E may grow without bound
/// toward the far end of the free interval.
pub fn reference_surface(
    kind: u8,
    e: &SeparatedSolution<f64>,
    params: &Params<f64>,
) -> Result<f64> {
    let i = surface_index(kind);
    let (lo, hi) = params.interval(i);
    let mid = 0.5 * (lo + hi);
    let mut big = 0.0f64;
    for k in 0..=80 {
        let s = mid + (hi - lo) * (k as f64 / 200.0 - 0.2);
        big = big.max(e.eval(s)?.w.abs());
    }
    for step in 0..9 {
        let off = ((step + 1) / 2) as f64 * 0.05 * (hi - lo);
        let d = if step % 2 == 1 { mid + off } else { mid - off };
        if e.eval(d)?.w.abs() >= 0.05 * big {
            return Ok(d);
        }
    }
    Err(Error::Quadrature(format!(
        "no reference surface with |E| above 5% of its local maximum for kind {kind}"
    )))
}

/// A normalized internal/external pair for one eigen record.
#[derive(Debug, Clone)]
pub struct HarmonicPair {
    pub record: EigenRecord,
    pub params: Params<f64>,
    pub triple: SeparatedTriple,
    guard: f64,
}

/// Scale applied to the first eigen-interval solution so the functional of G on itself is 1.
pub fn normalization_integral(rec: &EigenRecord, params: &Params<f64>) -> Result<f64> {
    let triple = SeparatedTriple::build(rec.kind, &rec.p, &rec.lam, params)?;
    let pair = HarmonicPair::with_triple(rec.clone(), *params, triple);
    let d = reference_surface(rec.kind, pair.triple.free_solution(), params)?;
    let quad = SurfaceQuadrature::new(rec.kind, d, DEFAULT_ORDER, params)?;
    let raw = pair.self_functional(&quad)?;
    if !(raw > 0.0) || !raw.is_finite() {
        return Err(Error::NormalizationNonPositive(raw));
    }
    Ok(raw.powf(-0.5))
}

impl HarmonicPair {
    fn with_triple(record: EigenRecord, params: Params<f64>, triple: SeparatedTriple) -> Self {
        HarmonicPair {
            record,
            params,
            triple,
            guard: 1e-8 * params.span(),
        }
    }

    /// Builds from a record; the stored normalization scale is applied if present.
    pub fn from_record(rec: &EigenRecord, params: &Params<f64>) -> Result<Self> {
        let mut rec = rec.clone();
        if !(rec.norm_scale > 0.0 && rec.norm_scale.is_finite()) {
            rec.norm_scale = normalization_integral(&rec, params)?;
        }
        let triple =
            SeparatedTriple::build(rec.kind, &rec.p, &rec.lam, params)?.with_scale(rec.norm_scale);
        Ok(Self::with_triple(rec, *params, triple))
    }

    pub fn kind(&self) -> u8 {
        self.record.kind
    }

    pub fn lam(&self) -> LambdaPair<f64> {
        self.record.lam
    }

    pub fn connection(&self) -> Option<ConnectionData<f64>> {
        self.triple.connection
    }

    /// E(d) of the free-interval solution (the E in the functional prefactor).
    pub fn free_value(&self, d: f64) -> Result<f64> {
        Ok(self.triple.free_solution().eval(d)?.w)
    }

    /// Functional of the harmonic applied to itself.
    pub fn self_functional(&self, quad: &SurfaceQuadrature) -> Result<f64> {
        let e = self.free_value(quad.d)?;
        let pre = 1.0 / (kind_constant(self.kind()) * omega(quad.d, &self.params) * e * e);
        let sum = quad.integrate(|loc| {
            let g = self.internal_at(loc)?;
            Ok(g * g)
        })?;
        Ok(pre * sum)
    }

    fn prefactor(&self, loc: &Located<f64>, skip: Option<usize>) -> f64 {
        let p = &self.record.p;
        let mut v = (1.0 + loc.rho).powf(-0.5);
        for j in 0..4 {
            if Some(j) != skip && parity(p, j) == 1 {
                v *= loc.chi[j];
            }
        }
        v
    }

    fn hat(&self, i: usize, s: f64) -> Result<f64> {
        let p = &self.record.p;
        self.triple.e[i - 1].eval_hat(s, parity(p, i - 1), parity(p, i))
    }

    /// The single-product formula valid on the kind's natural domain.
    pub(crate) fn product_form(&self, loc: &Located<f64>) -> Result<f64> {
        let s = loc.coords.as_array();
        let mut v = self.prefactor(loc, None);
        for i in 1..=3 {
            v *= self.hat(i, s[i - 1])?;
        }
        Ok(v)
    }

    /// Building blocks I and J of kinds 1 and 3, with no singular-set check.
    pub fn block_at(&self, which: Block, loc: &Located<f64>) -> Result<f64> {
        let kind = self.kind();
        let (pp, qq) = self
            .triple
            .pq
            .as_ref()
            .ok_or_else(|| Error::Domain(format!("kind {kind} has no I/J building blocks")))?;
        let p = &self.record.p;
        let s = loc.coords.as_array();
        let (free, extra) = if kind == 1 { (1, 0) } else { (3, 3) };
        let mut v = self.prefactor(loc, None);
        for i in 1..=3 {
            if i != free {
                v *= self.hat(i, s[i - 1])?;
            }
        }
        let sf = s[free - 1];
        let (pl, pr) = (parity(p, free - 1), parity(p, free));
        let part = match (which, kind) {
            (Block::I, 1) => pp.eval_hat(sf, 0, pr)?,
            (Block::J, 1) => loc.chi[extra] * qq.eval_hat(sf, 1, pr)?,
            (Block::I, _) => pp.eval_hat(sf, pl, 0)?,
            (Block::J, _) => loc.chi[extra] * qq.eval_hat(sf, pl, 1)?,
        };
        Ok(v * part)
    }

    /// Internal harmonic at a located point, with no singular-set check.
    pub fn internal_at(&self, loc: &Located<f64>) -> Result<f64> {
        let kind = self.kind();
        let a = self.params.a();
        let use_product = match kind {
            2 => true,
            1 => loc.rho < 1.0 && loc.coords.s1 >= 0.5 * (a[0] + a[1]),
            _ => loc.point.z > 0.0 && loc.coords.s3 <= 0.5 * (a[2] + a[3]),
        };
        if use_product {
            return self.product_form(loc);
        }
        let c = self.triple.connection.unwrap();
        Ok(c.a_coef * self.block_at(Block::I, loc)? + c.b_coef * self.block_at(Block::J, loc)?)
    }

    fn check(&self, p: Point3<f64>, sets: &[SingularSet]) -> Result<()> {
        if !p.is_finite() {
            return Err(Error::Domain(format!("non-finite point {p:?}")));
        }
        let t = classify_region(p, &self.params, self.guard);
        for &set in sets {
            let hit = match set {
                SingularSet::K1 => t.k1,
                SingularSet::L1 => t.l1,
                SingularSet::M1 => t.m1,
                SingularSet::K2 => t.k2,
                SingularSet::L2 => t.l2,
                SingularSet::M2 => t.m2,
            };
            if hit {
                return Err(Error::SingularSurface(set));
            }
        }
        Ok(())
    }

    pub fn eval_internal(&self, p: Point3<f64>) -> Result<f64> {
        let set = match self.kind() {
            1 => SingularSet::M1,
            2 => SingularSet::L2,
            _ => SingularSet::M2,
        };
        self.check(p, &[set])?;
        self.internal_at(&Located::from_point(p, &self.params))
    }

    pub fn eval_external(&self, p: Point3<f64>) -> Result<f64> {
        match self.kind() {
            2 => {
                self.check(p, &[SingularSet::L1])?;
                let loc = Located::from_point(p, &self.params);
                let f = self.triple.f2.as_ref().unwrap();
                let pv = &self.record.p;
                let s = loc.coords.as_array();
                let v = self.prefactor(&loc, None)
                    * self.hat(1, s[0])?
                    * f.eval_hat(s[1], parity(pv, 1), parity(pv, 2))?
                    * self.hat(3, s[2])?;
                Ok(v)
            }
            1 => {
                self.check(p, &[SingularSet::K1])?;
                let r2 = p.norm_sq();
                let q = p.scale(1.0 / r2);
                let c = self.triple.connection.unwrap().c_coef;
                Ok(c / r2.sqrt() * self.internal_at(&Located::from_point(q, &self.params))?)
            }
            _ => {
                self.check(p, &[SingularSet::K2])?;
                let q = Point3::new(p.x, p.y, -p.z);
                let c = wronskian_sign(3) * self.triple.connection.unwrap().c_coef;
                Ok(c * self.internal_at(&Located::from_point(q, &self.params))?)
            }
        }
    }

    pub fn eval(&self, role: Role, p: Point3<f64>) -> Result<f64> {
        match role {
            Role::Internal => self.eval_internal(p),
            Role::External => self.eval_external(p),
        }
    }

    pub fn eval_block(&self, which: Block, p: Point3<f64>) -> Result<f64> {
        match self.kind() {
            1 => self.check(p, &[SingularSet::K1, SingularSet::M1])?,
            3 => self.check(p, &[SingularSet::K2, SingularSet::M2])?,
            k => {
                return Err(Error::Domain(format!(
                    "kind {k} has no I/J building blocks"
                )))
            }
        }
        self.block_at(which, &Located::from_point(p, &self.params))
    }
}

/// Kelvin transform |r|^-1 f(r / |r|^2).
pub fn kelvin<F: Fn(Point3<f64>) -> Result<f64>>(f: F, p: Point3<f64>) -> Result<f64> {
    let r2 = p.norm_sq();
    if r2 == 0.0 {
        return Err(Error::Domain("Kelvin transform at the origin".into()));
    }
    Ok(f(p.scale(1.0 / r2))? / r2.sqrt())
}

/// Looks up or solves the record, then builds the pair.
pub fn build_harmonic(
    kind: u8,
    n: [usize; 2],
    p: &ParityVector,
    params: &Params<f64>,
    catalog: Option<&mut Catalog>,
) -> Result<HarmonicPair> {
    let key = RecordKey {
        kind,
        n,
        p: p.clone(),
    };
    let rec = match catalog {
        Some(cat) => match cat.get(&key) {
            Some(r) => r.clone(),
            None => {
                let r = crate::eigen::solve_eigen(kind, n, p, params, RESIDUAL_TOL)?;
                cat.insert(r.clone());
                r
            }
        },
        None => crate::eigen::solve_eigen(kind, n, p, params, RESIDUAL_TOL)?,
    };
    HarmonicPair::from_record(&rec, params)
}
