//! Surface quadrature, coefficient functionals, integral representations and
//! the reciprocal-distance expansions.

use std::fmt::Write as _;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{Catalog, ParityVector};
use crate::error::{Error, Result};
use crate::geometry::{
    chart_coords, omega, scale_factor_coords, surface_patches, to_cyclidic, Located, OctantFlags,
    Params, Point3,
};
use crate::harmonics::HarmonicPair;

pub const DEFAULT_ORDER: usize = 48;

/// Coordinate index whose level surfaces bound the kind's region.
pub fn surface_index(kind: u8) -> usize {
    match kind {
        1 => 1,
        2 => 2,
        _ => 3,
    }
}

/// c_k in the functional prefactor 1 / (c_k omega(d) E(d)^2).
pub fn kind_constant(kind: u8) -> f64 {
    if kind == 2 {
        4.0
    } else {
        2.0
    }
}

/// Leading constant of the reciprocal-distance expansion.
pub fn expansion_constant(kind: u8) -> f64 {
    if kind == 2 {
        std::f64::consts::PI
    } else {
        2.0 * std::f64::consts::PI
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadNode {
    pub loc: Located<f64>,
    /// Gauss weight times the surface element divided by the scale factor.
    pub weight: f64,
}

/// Tensor Gauss-Legendre rule on every patch of a coordinate surface.
#[derive(Debug, Clone)]
pub struct SurfaceQuadrature {
    pub kind: u8,
    pub d: f64,
    pub order: usize,
    pub patches: Vec<OctantFlags>,
    nodes: Vec<QuadNode>,
}

/// Neumaier summation.
fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

impl SurfaceQuadrature {
    pub fn new(kind: u8, d: f64, order: usize, params: &Params<f64>) -> Result<Self> {
        if !(1..=3).contains(&kind) {
            return Err(Error::Domain(format!("kind must be 1, 2 or 3, got {kind}")));
        }
        if order < 8 {
            return Err(Error::Domain(format!("quadrature order {order} below 8")));
        }
        let i = surface_index(kind);
        let (lo, hi) = params.interval(i);
        if !(d > lo && d < hi) {
            return Err(Error::Domain(format!(
                "surface value {d} outside ({lo}, {hi})"
            )));
        }
        let gl = GaussLegendre::new(NonZeroUsize::new(order).unwrap());
        let rule: Vec<(f64, f64)> = gl
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect();
        let patches = surface_patches(i);
        let mut nodes = Vec::with_capacity(patches.len() * order * order);
        for &flags in &patches {
            for &(u, wu) in &rule {
                for &(v, wv) in &rule {
                    let (c, area) = chart_coords(i, d, u, v, flags.inside, params)?;
                    let loc = Located::from_coords(c, flags, params)?;
                    let h = scale_factor_coords(i, &c, flags.inside, params);
                    nodes.push(QuadNode {
                        loc,
                        weight: wu * wv * area / h,
                    });
                }
            }
        }
        Ok(SurfaceQuadrature {
            kind,
            d,
            order,
            patches,
            nodes,
        })
    }

    pub fn nodes(&self) -> &[QuadNode] {
        &self.nodes
    }

    /// Sum of weight * f over the nodes, in fixed node order.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&Located<f64>) -> Result<f64> + Sync,
    {
        let vals: Vec<f64> = self
            .nodes
            .par_iter()
            .map(|n| f(&n.loc).map(|v| v * n.weight))
            .collect::<Result<Vec<f64>>>()?;
        Ok(compensated_sum(vals))
    }
}

fn check_kind(pair: &HarmonicPair, quad: &SurfaceQuadrature) -> Result<()> {
    if pair.kind() != quad.kind {
        return Err(Error::Domain(format!(
            "harmonic of kind {} used with a kind-{} surface",
            pair.kind(),
            quad.kind
        )));
    }
    Ok(())
}

/// (1 / (c_k omega(d) E(d)^2)) * surface integral of G f / h.
pub fn coefficient_functional<F>(pair: &HarmonicPair, f: F, quad: &SurfaceQuadrature) -> Result<f64>
where
    F: Fn(Point3<f64>) -> f64 + Sync,
{
    check_kind(pair, quad)?;
    let e = pair.free_value(quad.d)?;
    let scale = pair.triple.free_solution().eval(quad.d)?.w.abs();
    if e == 0.0 || !scale.is_finite() {
        return Err(Error::Quadrature(format!(
            "E(d) vanishes at d = {}",
            quad.d
        )));
    }
    let pre = 1.0 / (kind_constant(pair.kind()) * omega(quad.d, &pair.params) * e * e);
    let sum = quad.integrate(|loc| Ok(pair.internal_at(loc)? * f(loc.point)))?;
    Ok(pre * sum)
}

/// The functional at order and twice the order; fails if they differ by more than 1e-7.
pub fn coefficient_functional_checked<F>(
    pair: &HarmonicPair,
    f: F,
    d: f64,
    order: usize,
) -> Result<f64>
where
    F: Fn(Point3<f64>) -> f64 + Sync,
{
    let q1 = SurfaceQuadrature::new(pair.kind(), d, order, &pair.params)?;
    let q2 = SurfaceQuadrature::new(pair.kind(), d, 2 * order, &pair.params)?;
    let a = coefficient_functional(pair, &f, &q1)?;
    let b = coefficient_functional(pair, &f, &q2)?;
    if (a - b).abs() > 1e-7 * b.abs().max(1e-300) && (a - b).abs() > 1e-12 {
        return Err(Error::Quadrature(format!(
            "order {order} gives {a}, order {} gives {b}",
            2 * order
        )));
    }
    Ok(b)
}

/// Matrix of functionals: entry (i, j) is the functional of pairs[i] applied to the
/// internal harmonic of pairs[j].
pub fn functional_matrix(
    pairs: &[HarmonicPair],
    quad: &SurfaceQuadrature,
) -> Result<Vec<Vec<f64>>> {
    for p in pairs {
        check_kind(p, quad)?;
    }
    let table: Vec<Vec<f64>> = quad
        .nodes
        .par_iter()
        .map(|n| {
            pairs
                .iter()
                .map(|p| p.internal_at(&n.loc))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let m = pairs.len();
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        let e = pairs[i].free_value(quad.d)?;
        let pre = 1.0 / (kind_constant(quad.kind) * omega(quad.d, &pairs[i].params) * e * e);
        for j in 0..m {
            let terms = quad
                .nodes
                .iter()
                .zip(&table)
                .map(|(n, row)| n.weight * row[i] * row[j]);
            out[i][j] = pre * compensated_sum(terms);
        }
    }
    Ok(out)
}

/// Whether r lies in the closed region bounded by the kind's surface at d.
pub fn in_closed_region(kind: u8, d: f64, r: Point3<f64>, params: &Params<f64>) -> bool {
    let c = to_cyclidic(r, params);
    match kind {
        2 => c.s2 <= d,
        1 => r.norm_sq() <= 1.0 && c.s1 >= d,
        _ => r.z >= 0.0 && c.s3 <= d,
    }
}

/// External harmonic at r' from the surface integral of the internal one.
pub fn external_via_integral(
    pair: &HarmonicPair,
    r_prime: Point3<f64>,
    quad: &SurfaceQuadrature,
) -> Result<f64> {
    check_kind(pair, quad)?;
    if in_closed_region(quad.kind, quad.d, r_prime, &pair.params) {
        return Err(Error::Domain(format!(
            "point {r_prime:?} is not outside the closed region at d = {}",
            quad.d
        )));
    }
    let e = pair.free_value(quad.d)?;
    let pre = 1.0 / (4.0 * std::f64::consts::PI * omega(quad.d, &pair.params) * e * e);
    let sum = quad.integrate(|loc| Ok(pair.internal_at(loc)? / loc.point.dist(r_prime)))?;
    Ok(pre * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    A,
    B,
    C,
    Inapplicable,
}

pub fn applicable_case(
    kind: u8,
    r: Point3<f64>,
    rp: Point3<f64>,
    params: &Params<f64>,
) -> CaseLabel {
    let c = to_cyclidic(r, params);
    let cp = to_cyclidic(rp, params);
    match kind {
        2 => {
            if c.s2 < cp.s2 {
                CaseLabel::A
            } else {
                CaseLabel::Inapplicable
            }
        }
        1 => {
            let (n, np) = (r.norm(), rp.norm());
            if n <= 1.0 && np <= 1.0 && c.s1 > cp.s1 {
                CaseLabel::A
            } else if n < 1.0 && 1.0 < np {
                CaseLabel::B
            } else if n >= 1.0 && np >= 1.0 && c.s1 < cp.s1 {
                CaseLabel::C
            } else {
                CaseLabel::Inapplicable
            }
        }
        3 => {
            if r.z >= 0.0 && rp.z >= 0.0 && c.s3 < cp.s3 {
                CaseLabel::A
            } else if rp.z < 0.0 && 0.0 < r.z {
                CaseLabel::B
            } else if r.z <= 0.0 && rp.z <= 0.0 && cp.s3 < c.s3 {
                CaseLabel::C
            } else {
                CaseLabel::Inapplicable
            }
        }
        _ => CaseLabel::Inapplicable,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub order: usize,
    pub terms: usize,
    pub partial_sum: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub reference: f64,
    /// Leading constant the partial sums were multiplied by.
    pub constant: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("order,terms,partial_sum,abs_err,rel_err\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:?},{:?},{:?}",
                r.order, r.terms, r.partial_sum, r.abs_err, r.rel_err
            );
        }
        s
    }

    /// Constant that makes the last partial sum exact.
    pub fn fitted_constant(&self) -> Option<f64> {
        let last = self.rows.last()?;
        Some(self.reference * self.constant / last.partial_sum)
    }
}

/// Normalized harmonics of one kind in expansion order.
#[derive(Debug, Clone)]
pub struct HarmonicSet {
    pub kind: u8,
    pub pairs: Vec<HarmonicPair>,
}

impl HarmonicSet {
    pub fn from_catalog(catalog: &Catalog, kind: u8, max_order: usize) -> Result<Self> {
        let mut keys = Vec::new();
        for n in crate::eigen::multi_indices(max_order) {
            for p in ParityVector::all(kind) {
                keys.push(crate::eigen::RecordKey { kind, n, p });
            }
        }
        let recs = keys
            .iter()
            .map(|k| {
                catalog
                    .get(k)
                    .cloned()
                    .ok_or_else(|| Error::MissingRecord(k.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let params = catalog.params;
        let pairs = recs
            .par_iter()
            .map(|r| HarmonicPair::from_record(r, &params).map_err(|e| e.at_record(r.key())))
            .collect::<Result<Vec<_>>>()?;
        Ok(HarmonicSet { kind, pairs })
    }

    pub fn max_order(&self) -> usize {
        self.pairs
            .iter()
            .map(|p| p.record.n[0] + p.record.n[1])
            .max()
            .unwrap_or(0)
    }
}

/// Partial sums of the kind's expansion of 1/|r - r'| from a prepared harmonic set.
pub fn reciprocal_expansion_with(
    set: &HarmonicSet,
    r: Point3<f64>,
    rp: Point3<f64>,
    max_order: usize,
) -> Result<ConvergenceReport> {
    let kind = set.kind;
    let params = set
        .pairs
        .first()
        .map(|p| p.params)
        .ok_or_else(|| Error::MissingRecord("empty harmonic set".into()))?;
    if applicable_case(kind, r, rp, &params) == CaseLabel::Inapplicable {
        return Err(Error::InapplicableCase);
    }
    if max_order > set.max_order() {
        return Err(Error::MissingRecord(format!(
            "order {max_order} requested, harmonic set reaches {}",
            set.max_order()
        )));
    }
    let terms: Vec<(usize, f64)> = set
        .pairs
        .par_iter()
        .filter(|p| p.record.n[0] + p.record.n[1] <= max_order)
        .map(|p| -> Result<(usize, f64)> {
            Ok((
                p.record.n[0] + p.record.n[1],
                p.eval_internal(r)? * p.eval_external(rp)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let reference = 1.0 / r.dist(rp);
    let constant = expansion_constant(kind);
    let mut rows = Vec::new();
    for n in 0..=max_order {
        let sel: Vec<f64> = terms.iter().filter(|t| t.0 <= n).map(|t| t.1).collect();
        let s = constant * compensated_sum(sel.iter().cloned());
        let err = (s - reference).abs();
        rows.push(ConvergenceRow {
            order: n,
            terms: sel.len(),
            partial_sum: s,
            abs_err: err,
            rel_err: err / reference,
        });
    }
    Ok(ConvergenceReport {
        reference,
        constant,
        rows,
    })
}

pub fn reciprocal_expansion(
    kind: u8,
    r: Point3<f64>,
    rp: Point3<f64>,
    max_order: usize,
    catalog: &Catalog,
) -> Result<ConvergenceReport> {
    if applicable_case(kind, r, rp, &catalog.params) == CaseLabel::Inapplicable {
        return Err(Error::InapplicableCase);
    }
    let set = HarmonicSet::from_catalog(catalog, kind, max_order)?;
    reciprocal_expansion_with(&set, r, rp, max_order)
}

// ---------------------------------------------------------------------------
// spherical baseline

fn factorial_ratio(l: usize, m: usize) -> f64 {
    // (l - m)! / (l + m)!
    let mut r = 1.0;
    for k in (l - m + 1)..=(l + m) {
        r /= k as f64;
    }
    r
}

/// Ferrers function of the first kind with the (-1)^m phase.
pub fn ferrers_p(l: usize, m: i64, x: f64) -> Result<f64> {
    if m.unsigned_abs() as usize > l {
        return Err(Error::Domain(format!("|m| = {} exceeds l = {l}", m.abs())));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [-1, 1]")));
    }
    let ma = m.unsigned_abs() as usize;
    // seed P_m^m = (-1)^m (2m - 1)!! (1 - x^2)^(m/2)
    let sq = ((1.0 - x) * (1.0 + x)).sqrt();
    let mut pmm = 1.0;
    for k in 1..=ma {
        pmm *= -((2 * k - 1) as f64) * sq;
    }
    let val = if l == ma {
        pmm
    } else {
        let mut prev = pmm;
        let mut cur = x * (2 * ma + 1) as f64 * pmm;
        for ll in (ma + 1)..l {
            let next =
                ((2 * ll + 1) as f64 * x * cur - (ll + ma) as f64 * prev) / (ll + 1 - ma) as f64;
            prev = cur;
            cur = next;
        }
        cur
    };
    if m < 0 {
        let sign = if ma.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(sign * factorial_ratio(l, ma) * val)
    } else {
        Ok(val)
    }
}

/// Partial sums of the Legendre expansion of 1/|r - r'| for |r| < |r'|.
pub fn spherical_expansion(
    r: Point3<f64>,
    rp: Point3<f64>,
    l_max: usize,
) -> Result<ConvergenceReport> {
    let (rn, rpn) = (r.norm(), rp.norm());
    if rpn == 0.0 || !(rn < rpn) {
        return Err(Error::Domain(format!(
            "spherical expansion needs |r| < |r'| (got {rn}, {rpn})"
        )));
    }
    let cos_t = |p: Point3<f64>, n: f64| {
        if n == 0.0 {
            1.0
        } else {
            (p.z / n).clamp(-1.0, 1.0)
        }
    };
    let (ct, ctp) = (cos_t(r, rn), cos_t(rp, rpn));
    let dphi = r.y.atan2(r.x) - rp.y.atan2(rp.x);
    let reference = 1.0 / r.dist(rp);
    let mut sum = 0.0;
    let mut rows = Vec::new();
    let mut terms = 0;
    for l in 0..=l_max {
        let radial = if l == 0 {
            1.0 / rpn
        } else {
            rn.powi(l as i32) / rpn.powi(l as i32 + 1)
        };
        let mut ang = ferrers_p(l, 0, ct)? * ferrers_p(l, 0, ctp)?;
        terms += 1;
        for m in 1..=l {
            let w = 2.0 * factorial_ratio(l, m);
            ang += w
                * ferrers_p(l, m as i64, ct)?
                * ferrers_p(l, m as i64, ctp)?
                * (m as f64 * dphi).cos();
            terms += 2;
        }
        sum += radial * ang;
        let err = (sum - reference).abs();
        rows.push(ConvergenceRow {
            order: l,
            terms,
            partial_sum: sum,
            abs_err: err,
            rel_err: err / reference,
        });
    }
    Ok(ConvergenceReport {
        reference,
        constant: 1.0,
        rows,
    })
}
