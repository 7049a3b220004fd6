//! Invariant check suites, one per module, run by `cyclharm check` and the acceptance run.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::{
    affine_lambda, recheck_record, solve_eigen, solve_eigenpair, Catalog, ParityVector, RecordKey,
    RESIDUAL_TOL,
};
use crate::error::{Error, Result};
use crate::expansion::{
    expansion_constant, external_via_integral, functional_matrix, reciprocal_expansion,
    spherical_expansion, surface_index, CaseLabel, HarmonicSet, SurfaceQuadrature,
};
use crate::fuchsian::{
    eval_series, frobenius_series, propagate, wronskian_mod, LambdaPair, Launch, SeparatedSolution,
    SolutionState,
};
use crate::geometry::{
    apply_symmetry, curve_polylines, from_cyclidic, quadruple, scale_factor, to_cyclidic, CurveSet,
    CyclidicCoords, Located, OctantFlags, Params, Point3,
};
use crate::harmonics::{build_harmonic, kelvin, Block, HarmonicPair};

pub const SUITES: [&str; 5] = ["geometry", "fuchsian", "eigen", "harmonics", "expansion"];

/// Result of one check: the worst observed deviation against its tolerance.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub worst: f64,
    pub tol: f64,
    pub samples: usize,
    pub seconds: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.worst <= self.tol
    }
}

fn outcome(name: &'static str, worst: f64, tol: f64, samples: usize, t0: Instant) -> CheckOutcome {
    CheckOutcome {
        name,
        // NaN never passes
        worst: if worst.is_nan() { f64::INFINITY } else { worst },
        tol,
        samples,
        seconds: t0.elapsed().as_secs_f64(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn sign(bit: Option<u8>) -> f64 {
    if bit == Some(1) {
        -1.0
    } else {
        1.0
    }
}

/// Log-uniform radius, uniform direction.
fn random_space(rng: &mut ChaCha8Rng) -> Point3<f64> {
    let r = 10f64.powf(rng.gen_range(-1.5..1.5));
    let v = Point3::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    v.scale(r / v.norm())
}

/// A point of R: the open positive octant inside the unit ball.
fn random_r(rng: &mut ChaCha8Rng) -> Point3<f64> {
    loop {
        let p = Point3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
        if p.norm() < 0.999 && p.x > 1e-3 && p.y > 1e-3 && p.z > 1e-3 {
            return p;
        }
    }
}

/// A point away from the coordinate planes and the unit sphere.
fn generic_point(rng: &mut ChaCha8Rng, half: f64) -> Point3<f64> {
    loop {
        let p = Point3::new(
            rng.gen_range(-half..half),
            rng.gen_range(-half..half),
            rng.gen_range(-half..half),
        );
        if p.x.abs() > 0.02 && p.y.abs() > 0.02 && p.z.abs() > 0.02 && (p.norm() - 1.0).abs() > 0.02
        {
            return p;
        }
    }
}

// geometry

pub fn interlacing(params: &Params<f64>, n: usize, seed: u64) -> CheckOutcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bad = (0..n)
        .filter(|_| !to_cyclidic(random_space(&mut rng), params).is_interlaced(params))
        .count();
    outcome("interlacing", bad as f64, 0.0, n, t0)
}

/// Both round trips: points through coordinates and interlaced triples through points.
pub fn round_trip(params: &Params<f64>, n: usize, seed: u64) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = random_r(&mut rng);
        let q = from_cyclidic(&to_cyclidic(p, params), OctantFlags::of_point(p), params)?;
        worst = worst.max(p.dist(q));
    }
    for _ in 0..n {
        let mut s = [0.0; 3];
        for (i, v) in s.iter_mut().enumerate() {
            let (lo, hi) = params.interval(i + 1);
            *v = rng.gen_range(lo..hi);
        }
        let c = CyclidicCoords::from_array(s);
        let p = from_cyclidic(&c, OctantFlags::new(1, 1, 1, rng.gen::<bool>()), params)?;
        let back = to_cyclidic(p, params);
        for i in 1..=3 {
            worst = worst.max((back.get(i) - c.get(i)).abs());
        }
    }
    Ok(outcome("round trip", worst, 1e-9, 2 * n, t0))
}

pub fn quadruple_identity(params: &Params<f64>, n: usize, seed: u64) -> CheckOutcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = random_space(&mut rng);
        let x = quadruple(&to_cyclidic(p, params), p.norm() < 1.0, params);
        let sum: f64 = x.iter().map(|v| v * v).sum();
        worst = worst.max((sum - 1.0).abs());
    }
    outcome("quadruple identity", worst, 1e-13, n, t0)
}

pub fn sigma_invariance(params: &Params<f64>, n: usize, seed: u64) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = random_space(&mut rng);
        let c = to_cyclidic(p, params);
        for j in 0..4 {
            let d = to_cyclidic(apply_symmetry(j, p)?, params);
            for i in 1..=3 {
                worst = worst.max((c.get(i) - d.get(i)).abs());
            }
        }
    }
    Ok(outcome("sigma invariance", worst, 1e-10, n, t0))
}

/// chi_j changes sign under sigma_j and is unchanged under the other reflections.
pub fn chi_table(params: &Params<f64>, n: usize, seed: u64) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = random_space(&mut rng);
        let l = Located::from_point(p, params);
        for j in 0..4 {
            let m = Located::from_point(apply_symmetry(j, p)?, params);
            for k in 0..4 {
                let want = if k == j { -l.chi[k] } else { l.chi[k] };
                worst = worst.max((m.chi[k] - want).abs() / (1.0 + want.abs()));
            }
        }
    }
    Ok(outcome("chi sign table", worst, 1e-12, n, t0))
}

pub fn inversion_distance(n: usize, seed: u64) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = random_space(&mut rng);
        let q = random_space(&mut rng);
        let lhs = p.dist(q);
        let rhs = p.norm() * q.norm() * apply_symmetry(0, p)?.dist(apply_symmetry(0, q)?);
        worst = worst.max((lhs - rhs).abs() / lhs.max(1.0));
    }
    Ok(outcome("inversion distance", worst, 1e-12, n, t0))
}

/// h_i times the central-difference gradient norm of s_i.
pub fn scale_factor_consistency(params: &Params<f64>, n: usize, seed: u64) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 1..=3 {
        let mut done = 0;
        while done < n {
            let p = random_r(&mut rng);
            let c = to_cyclidic(p, params);
            // the stencil must stay away from coinciding coordinates
            if c.s2 - c.s1 < 0.05 || c.s3 - c.s2 < 0.05 {
                continue;
            }
            let h = 1e-5 * (1.0 + p.norm());
            let mut g2 = 0.0;
            for k in 0..3 {
                let (mut a, mut b) = (p.to_array(), p.to_array());
                a[k] += h;
                b[k] -= h;
                let d = (to_cyclidic(Point3::from_array(a), params).get(i)
                    - to_cyclidic(Point3::from_array(b), params).get(i))
                    / (2.0 * h);
                g2 += d * d;
            }
            worst = worst.max((scale_factor(i, p, params)? * g2.sqrt() - 1.0).abs());
            done += 1;
        }
    }
    Ok(outcome("scale factors", worst, 1e-5, 3 * n, t0))
}

pub fn geometry_suite(params: &Params<f64>, n: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        interlacing(params, n, seed),
        round_trip(params, n, seed + 1)?,
        quadruple_identity(params, n, seed + 2),
        sigma_invariance(params, n / 10, seed + 3)?,
        chi_table(params, n / 10, seed + 4)?,
        inversion_distance(n / 10, seed + 5)?,
        scale_factor_consistency(params, (n / 100).max(10), seed + 6)?,
    ])
}

// fuchsian

/// Abscissae spanning the middle 80% of interval i; the ray is measured in theta.
fn middle_points(i: usize, params: &Params<f64>, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let f = 0.1 + 0.8 * k as f64 / (count - 1) as f64;
            if i == 4 {
                let t = (std::f64::consts::FRAC_PI_2 * f).tan();
                params.a()[3] + params.span() * t * t
            } else {
                let (lo, hi) = params.interval(i);
                lo + f * (hi - lo)
            }
        })
        .collect()
}

/// Drift of the modified Wronskian of two independent solutions over the middle
/// of each interval and of the ray beyond a3.
pub fn wronskian_constancy(params: &Params<f64>, n: usize, seed: u64) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let lam = LambdaPair::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        for i in 1..=4 {
            let pts = middle_points(i, params, 9);
            let s0 = pts[4];
            let u0 = SolutionState::new(s0, 1.0, rng.gen_range(-1.0..1.0));
            let v0 = SolutionState::new(s0, rng.gen_range(-1.0..1.0), 1.0);
            let w0 = wronskian_mod(&u0, &v0, params)?;
            for &s in &pts {
                let u = propagate(u0, s, &lam, params, 1e-13)?;
                let v = propagate(v0, s, &lam, params, 1e-13)?;
                worst = worst.max((wronskian_mod(&u, &v, params)? - w0).abs() / w0.abs());
            }
        }
    }
    Ok(outcome("wronskian constancy", worst, 1e-10, 4 * n, t0))
}

/// Series evaluation against propagation started from the series nearer its centre.
pub fn series_propagation(params: &Params<f64>, n: usize, seed: u64) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = *params.a();
    let mut worst = 0.0f64;
    for _ in 0..n {
        let lam = LambdaPair::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        for j in 0..4 {
            for parity in 0..2 {
                let sol = frobenius_series(j, parity, &lam, params, 60)?;
                let sides: &[f64] = if j == 0 { &[1.0] } else { &[-1.0, 1.0] };
                for &side in sides {
                    let near = eval_series(&sol, a[j] + side * 0.4 * sol.trust_radius, params)?;
                    let far_s = a[j] + side * 0.9 * sol.trust_radius;
                    let far = eval_series(&sol, far_s, params)?;
                    let prop = propagate(near, far_s, &lam, params, 1e-13)?;
                    let sc = far.w.abs().max(far.dw.abs() * sol.trust_radius);
                    worst = worst.max((prop.w - far.w).abs() / sc);
                }
            }
        }
    }
    Ok(outcome(
        "series vs propagation",
        worst,
        1e-10,
        7 * 2 * n,
        t0,
    ))
}

/// Kind-2 eigenvalues at a shifted and scaled parameter set against the affine map.
pub fn affine_covariance(
    params: &Params<f64>,
    alpha: f64,
    beta: f64,
    indices: &[[usize; 2]],
) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let a = params.a();
    let wide = Params::new([
        alpha * a[0] + beta,
        alpha * a[1] + beta,
        alpha * a[2] + beta,
        alpha * a[3] + beta,
    ])?;
    let p = ParityVector::new(2, &[0, 0, 0, 0])?;
    let mut worst = 0.0f64;
    for &n in indices {
        let base = solve_eigenpair(2, n, &p, params, RESIDUAL_TOL)?;
        let other = solve_eigenpair(2, n, &p, &wide, RESIDUAL_TOL)?;
        let mapped = affine_lambda(&other.lam, alpha, beta);
        worst = worst
            .max((mapped.lambda1 - base.lam.lambda1).abs() / (1.0 + base.lam.lambda1.abs()))
            .max((mapped.lambda2 - base.lam.lambda2).abs() / (1.0 + base.lam.lambda2.abs()));
        if other.zero_counts != base.zero_counts {
            worst = f64::INFINITY;
        }
    }
    Ok(outcome("affine covariance", worst, 1e-8, indices.len(), t0))
}

/// Log-log slope of |w| at each end of each interval: 0 or 1/2 by parity.
pub fn exponent_dichotomy(params: &Params<f64>) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let lam = LambdaPair::new(0.7, -0.4);
    let mut worst = 0.0f64;
    let mut count = 0;
    for i in 1..=3 {
        let (lo, hi) = params.interval(i);
        for parity in 0..2u8 {
            for right in [false, true] {
                let launch = if right {
                    Launch::Right(parity)
                } else {
                    Launch::Left(parity)
                };
                let sol = SeparatedSolution::build(i, launch, &lam, params)?;
                let at = |x: f64| if right { hi - x } else { lo + x };
                let (x1, x2) = (1e-6 * (hi - lo), 1e-7 * (hi - lo));
                let w1 = sol.eval(at(x1))?.w.abs();
                let w2 = sol.eval(at(x2))?.w.abs();
                let slope = (w1 / w2).ln() / (x1 / x2).ln();
                worst = worst.max((slope - 0.5 * parity as f64).abs());
                count += 1;
            }
        }
    }
    Ok(outcome("exponent dichotomy", worst, 0.01, count, t0))
}

pub fn fuchsian_suite(params: &Params<f64>, n: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        wronskian_constancy(params, n, seed)?,
        series_propagation(params, n, seed + 1)?,
        affine_covariance(params, 2.0, 1.0, &[[0, 0], [1, 0], [0, 1]])?,
        exponent_dichotomy(params)?,
    ])
}

// eigen

/// Mismatches and zero counts of every stored record, recomputed from its eigenvalues.
pub fn eigen_residuals(catalog: &Catalog, kind: u8) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let recs = catalog.of_kind(kind);
    let mut worst = 0.0f64;
    for rec in &recs {
        let (res, zc) = recheck_record(rec, &catalog.params).map_err(|e| e.at_record(rec.key()))?;
        worst = worst.max(res[0].abs()).max(res[1].abs());
        if zc != rec.n {
            worst = f64::INFINITY;
        }
    }
    Ok(outcome(
        "eigen residuals",
        worst,
        RESIDUAL_TOL,
        recs.len(),
        t0,
    ))
}

/// Smallest distance between eigenvalue pairs of one parity class, against 1e-8.
pub fn eigen_distinct(catalog: &Catalog, kind: u8) -> CheckOutcome {
    let t0 = Instant::now();
    let recs = catalog.of_kind(kind);
    let mut closest = f64::INFINITY;
    for (i, a) in recs.iter().enumerate() {
        for b in &recs[i + 1..] {
            if a.p == b.p {
                let d = (a.lam.lambda1 - b.lam.lambda1).hypot(a.lam.lambda2 - b.lam.lambda2);
                closest = closest.min(d);
            }
        }
    }
    // reported as 1e-8 / distance so that smaller is better
    outcome("eigen distinct", 1e-8 / closest, 1.0, recs.len(), t0)
}

/// Repeated solves give bit-identical records.
pub fn eigen_determinism(params: &Params<f64>) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let mut bad = 0;
    let keys = [
        (2u8, [1usize, 0usize], "0110"),
        (1, [0, 1], "101"),
        (3, [1, 0], "010"),
    ];
    for (kind, n, bits) in keys {
        let p = ParityVector::parse(kind, bits)?;
        let a = solve_eigen(kind, n, &p, params, RESIDUAL_TOL)?;
        let b = solve_eigen(kind, n, &p, params, RESIDUAL_TOL)?;
        if a.lam.lambda1.to_bits() != b.lam.lambda1.to_bits()
            || a.lam.lambda2.to_bits() != b.lam.lambda2.to_bits()
            || a.norm_scale.to_bits() != b.norm_scale.to_bits()
        {
            bad += 1;
        }
    }
    Ok(outcome(
        "eigen determinism",
        bad as f64,
        0.0,
        keys.len(),
        t0,
    ))
}

pub fn eigen_suite(catalog: &mut Catalog, max_order: usize) -> Result<Vec<CheckOutcome>> {
    let mut out = vec![];
    for kind in 1..=3 {
        catalog.fill(kind, max_order)?;
        out.push(eigen_residuals(catalog, kind)?);
        out.push(eigen_distinct(catalog, kind));
    }
    out.push(eigen_determinism(&catalog.params)?);
    out.push(affine_covariance(
        &catalog.params,
        2.0,
        1.0,
        &[[0, 0], [1, 1]],
    )?);
    Ok(out)
}

// harmonics

fn harmonic(catalog: &Catalog, kind: u8, n: [usize; 2], bits: &str) -> Result<HarmonicPair> {
    let p = ParityVector::parse(kind, bits)?;
    match catalog.get(&RecordKey {
        kind,
        n,
        p: p.clone(),
    }) {
        Some(rec) => HarmonicPair::from_record(rec, &catalog.params),
        None => build_harmonic(kind, n, &p, &catalog.params, None),
    }
}

fn mirror_gap(worst: &mut f64, got: f64, want: f64) {
    let s = got.abs().max(want.abs());
    *worst = worst.max((got - want).abs() / s.max(1e-300));
}

/// Reflection and Kelvin symmetries of G, H and the blocks I, J of every kind.
pub fn harmonic_symmetries(catalog: &Catalog, n_points: usize, seed: u64) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut count = 0;
    let cases: [(u8, [usize; 2], &[&str]); 3] = [
        (2, [1, 0], &["0000", "1010", "0111", "1101"]),
        (1, [0, 1], &["000", "101", "011", "111"]),
        (3, [1, 1], &["000", "110", "011", "101"]),
    ];
    for (kind, n, all_bits) in cases {
        for bits in all_bits {
            let h = harmonic(catalog, kind, n, bits)?;
            let p = &h.record.p;
            for _ in 0..n_points {
                let r = generic_point(&mut rng, 1.8);
                let g = h.eval_internal(r)?;
                let e = h.eval_external(r)?;
                let q0 = apply_symmetry(0, r)?;
                let blocks = if kind == 2 {
                    None
                } else {
                    Some((h.eval_block(Block::I, r)?, h.eval_block(Block::J, r)?))
                };
                // reflections in the coordinate planes
                let planes: &[usize] = if kind == 3 { &[1, 2] } else { &[1, 2, 3] };
                for &j in planes {
                    let sg = sign(p.at(j));
                    let q = apply_symmetry(j, r)?;
                    mirror_gap(&mut worst, h.eval_internal(q)?, sg * g);
                    mirror_gap(&mut worst, h.eval_external(q)?, sg * e);
                    if let Some((i, jv)) = blocks {
                        mirror_gap(&mut worst, h.eval_block(Block::I, q)?, sg * i);
                        mirror_gap(&mut worst, h.eval_block(Block::J, q)?, sg * jv);
                    }
                }
                match kind {
                    2 => {
                        let s0 = sign(p.at(0));
                        mirror_gap(&mut worst, h.eval_internal(q0)?, s0 * r.norm() * g);
                        mirror_gap(&mut worst, h.eval_external(q0)?, s0 * r.norm() * e);
                        mirror_gap(&mut worst, kelvin(|x| h.eval_internal(x), r)?, s0 * g);
                    }
                    1 => {
                        let (i, jv) = blocks.unwrap();
                        mirror_gap(&mut worst, h.eval_block(Block::I, q0)?, r.norm() * i);
                        mirror_gap(&mut worst, h.eval_block(Block::J, q0)?, -r.norm() * jv);
                    }
                    _ => {
                        let (i, jv) = blocks.unwrap();
                        let s0 = sign(p.at(0));
                        mirror_gap(&mut worst, h.eval_block(Block::I, q0)?, s0 * r.norm() * i);
                        mirror_gap(&mut worst, h.eval_block(Block::J, q0)?, s0 * r.norm() * jv);
                        mirror_gap(&mut worst, h.eval_internal(q0)?, s0 * r.norm() * g);
                        mirror_gap(&mut worst, h.eval_external(q0)?, s0 * r.norm() * e);
                        let q3 = apply_symmetry(3, r)?;
                        mirror_gap(&mut worst, h.eval_block(Block::I, q3)?, i);
                        mirror_gap(&mut worst, h.eval_block(Block::J, q3)?, -jv);
                    }
                }
                count += 1;
            }
        }
    }
    Ok(outcome("harmonic symmetries", worst, 1e-9, count, t0))
}

/// 7-point Laplacian and the sum of the absolute axis second differences.
pub fn fd_laplacian<F: Fn(Point3<f64>) -> Result<f64>>(
    f: &F,
    p: Point3<f64>,
    h: f64,
) -> Result<(f64, f64)> {
    let c = f(p)?;
    let (mut lap, mut scale) = (0.0, 0.0);
    for axis in 0..3 {
        let mut e = [0.0; 3];
        e[axis] = h;
        let d = Point3::from_array(e);
        let d2 = (f(p + d)? - 2.0 * c + f(p - d)?) / (h * h);
        lap += d2;
        scale += d2.abs();
    }
    Ok((lap, scale))
}

/// Points just off A1 and A2, where the product formulas switch branches.
pub fn removable_set_points(params: &Params<f64>) -> Result<Vec<Point3<f64>>> {
    let mut out = vec![];
    let shift = Point3::new(3e-5, 0.0, 0.0);
    for set in [CurveSet::A1, CurveSet::A2] {
        let curves = curve_polylines(set, 24, params)?;
        for c in &curves {
            for k in [1usize, 4, 7] {
                let p = c[k];
                if p.norm() > 0.05 && p.norm() < 4.0 {
                    out.push(p + shift);
                }
            }
        }
    }
    Ok(out)
}

/// Laplacian residual of G and H at random points and across A1, A2.
pub fn harmonicity(catalog: &Catalog, n_points: usize, seed: u64) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let params = &catalog.params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let straddle = removable_set_points(params)?;
    let mut worst = 0.0f64;
    let mut count = 0;
    let lowest: [(u8, [usize; 2], &str); 9] = [
        (2, [0, 0], "0000"),
        (2, [1, 0], "0110"),
        (2, [0, 1], "1011"),
        (1, [0, 0], "000"),
        (1, [1, 0], "011"),
        (1, [0, 1], "101"),
        (3, [0, 0], "000"),
        (3, [1, 0], "100"),
        (3, [0, 1], "011"),
    ];
    for (kind, n, bits) in lowest {
        let h = harmonic(catalog, kind, n, bits)?;
        let mut probe = |f: &dyn Fn(Point3<f64>) -> Result<f64>, p: Point3<f64>| -> Result<()> {
            let (lap, scale) = fd_laplacian(&f, p, 1e-4)?;
            worst = worst.max(lap.abs() / scale.max(1e-300));
            count += 1;
            Ok(())
        };
        let mut taken = 0;
        while taken < n_points {
            let r = generic_point(&mut rng, 1.6);
            if kind == 3 && r.z < 0.05 {
                continue;
            }
            probe(&|x| h.eval_internal(x), r)?;
            probe(&|x| h.eval_external(x), r)?;
            taken += 1;
        }
        for &q in &straddle {
            // G of kind 2 is singular on L2, of kind 1 on M1 (bounded by the outer
            // loop of A1), of kind 3 on M2
            let allowed = match kind {
                2 => q.y != 0.0,
                1 => q.y == 0.0 || q.norm() < 1.0,
                _ => q.z > 0.0,
            };
            if allowed {
                probe(&|x| h.eval_internal(x), q)?;
            }
        }
    }
    // relative to the axis second differences
    Ok(outcome("harmonicity", worst, 1e-4, count, t0))
}

/// Two-sided limits across K1 (kind 1) and K2 (kind 3).
pub fn continuity(catalog: &Catalog) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let h = harmonic(catalog, 1, [1, 0], "100")?;
    for (y, z) in [(0.05, 0.1), (0.2, 0.15), (0.1, 0.4)] {
        let a = h.eval_internal(Point3::new(1e-10, y, z))?;
        let b = h.eval_internal(Point3::new(-1e-10, y, z))?;
        worst = worst.max((a - b).abs() / (1.0 + a.abs()));
    }
    let h = harmonic(catalog, 3, [0, 1], "001")?;
    for (x, z) in [(0.2, 0.9), (0.1, 0.5), (0.3, 1.2)] {
        let a = h.eval_internal(Point3::new(x, 1e-10, z))?;
        let b = h.eval_internal(Point3::new(x, -1e-10, z))?;
        worst = worst.max((a - b).abs() / (1.0 + a.abs()));
    }
    Ok(outcome("continuity", worst, 1e-7, 6, t0))
}

/// The global formulas against the product form on R, and a I + b J against
/// the single product, relative to the size of the two terms.
pub fn formula_consistency(catalog: &Catalog, n_points: usize, seed: u64) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let params = &catalog.params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for (kind, bits) in [(2u8, "0110"), (1, "110"), (3, "101")] {
        let h = harmonic(catalog, kind, [1, 1], bits)?;
        for _ in 0..n_points {
            let r = random_r(&mut rng);
            if r.norm() > 0.98 {
                continue;
            }
            let loc = Located::from_point(r, params);
            let g = h.eval_internal(r)?;
            let prod = h.product_form(&loc)?;
            if let Some(c) = h.connection() {
                let ai = c.a_coef * h.block_at(Block::I, &loc)?;
                let bj = c.b_coef * h.block_at(Block::J, &loc)?;
                worst = worst.max((g - ai - bj).abs() / (ai.abs() + bj.abs()));
                worst = worst.max((prod - ai - bj).abs() / (ai.abs() + bj.abs()));
            } else {
                worst = worst.max(rel(g, prod));
            }
        }
    }
    Ok(outcome(
        "formula consistency",
        worst,
        1e-9,
        3 * n_points,
        t0,
    ))
}

/// |r| |H| along a ray out to 1000 relative to its value at 10, and |r|^2 |grad H|
/// at 1000 relative to its value at 100.
pub fn external_decay(catalog: &Catalog) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let dir = Point3::new(1.0, 2.0, 2.0).scale(1.0 / 3.0);
    let mut worst = 0.0f64;
    for (kind, bits) in [(2u8, "0000"), (1, "000"), (3, "000")] {
        let h = harmonic(catalog, kind, [0, 0], bits)?;
        let base = 10.0 * h.eval_external(dir.scale(10.0))?.abs();
        for t in [30.0, 100.0, 300.0, 1000.0] {
            let v = t * h.eval_external(dir.scale(t))?.abs();
            worst = worst.max(v / base);
        }
        let grad = |t: f64| -> Result<f64> {
            let p = dir.scale(t);
            let d = 1e-3 * t;
            let mut g2 = 0.0;
            for axis in 0..3 {
                let mut e = [0.0; 3];
                e[axis] = d;
                let e = Point3::from_array(e);
                let v = (h.eval_external(p + e)? - h.eval_external(p - e)?) / (2.0 * d);
                g2 += v * v;
            }
            Ok(t * t * g2.sqrt())
        };
        worst = worst.max(grad(1000.0)? / grad(100.0)?);
    }
    // bounded: nothing grows by more than a factor 2
    Ok(outcome("external decay", worst, 2.0, 3, t0))
}

pub fn harmonics_suite(catalog: &Catalog, n: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        harmonic_symmetries(catalog, n, seed)?,
        harmonicity(catalog, n, seed + 1)?,
        continuity(catalog)?,
        formula_consistency(catalog, n, seed + 2)?,
        external_decay(catalog)?,
    ])
}

// expansion

/// A fixed well-separated point pair for one kind and case.
#[derive(Debug, Clone, Copy)]
pub struct ExpansionPair {
    pub kind: u8,
    pub case: CaseLabel,
    pub r: Point3<f64>,
    pub rp: Point3<f64>,
}

/// Pairs with the relevant coordinate gap at least 20% of its interval, for a = (0, 1, 2, 3).
pub fn expansion_pairs() -> Vec<ExpansionPair> {
    let p = |x, y, z| Point3::new(x, y, z);
    let inv = |q: Point3<f64>| q.scale(1.0 / q.norm_sq());
    let refl = |q: Point3<f64>| Point3::new(q.x, q.y, -q.z);
    let (a, b) = (p(0.45, 0.40, 0.35), p(0.15, 0.12, 0.10));
    let (c, d) = (p(0.1, 0.05, 0.8), p(0.5, 0.6, 0.4));
    let pair = |kind, case, r, rp| ExpansionPair { kind, case, r, rp };
    vec![
        pair(2, CaseLabel::A, p(-0.15, -0.85, -0.95), p(0.7, 0.15, -0.35)),
        pair(1, CaseLabel::A, b, a),
        pair(1, CaseLabel::B, p(0.3, 0.2, 0.25), p(1.2, 0.9, 0.7)),
        pair(1, CaseLabel::C, inv(a), inv(b)),
        pair(3, CaseLabel::A, c, d),
        pair(3, CaseLabel::B, p(0.2, 0.3, 0.4), p(0.25, 0.1, -0.35)),
        pair(3, CaseLabel::C, refl(d), refl(c)),
    ]
}

/// Relative error at order 4 (against 1e-2) plus an infinite penalty if the
/// error grows anywhere from order 2 on.
pub fn expansion_correctness(catalog: &Catalog, pairs: &[ExpansionPair]) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for ep in pairs {
        let rep = reciprocal_expansion(ep.kind, ep.r, ep.rp, 4, catalog)?;
        worst = worst.max(rep.rows[4].rel_err);
        if rep.rows[2..]
            .windows(2)
            .any(|w| w[1].abs_err > w[0].abs_err)
        {
            worst = f64::INFINITY;
        }
    }
    Ok(outcome("expansion error", worst, 1e-2, pairs.len(), t0))
}

/// The leading constant recovered from the order-4 partial sum.
pub fn expansion_constants(catalog: &Catalog, pairs: &[ExpansionPair]) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for ep in pairs {
        let rep = reciprocal_expansion(ep.kind, ep.r, ep.rp, 4, catalog)?;
        let fit = rep.fitted_constant().unwrap_or(f64::NAN);
        worst = worst.max(rel(fit, expansion_constant(ep.kind)));
    }
    Ok(outcome("leading constants", worst, 5e-3, pairs.len(), t0))
}

/// Exterior points for the integral representation of each kind.
pub fn exterior_points(kind: u8) -> [Point3<f64>; 3] {
    let p = |x, y, z| Point3::new(x, y, z);
    match kind {
        2 => [p(0.3, 0.2, 0.1), p(1.5, 0.7, 0.4), p(0.7, 0.15, -0.35)],
        1 => [p(1.5, 0.7, 0.4), p(-0.4, 1.2, 0.3), p(0.1, -0.2, -2.5)],
        _ => [p(0.1, 0.2, -0.4), p(1.5, -0.7, 0.1), p(-0.3, 0.8, -0.05)],
    }
}

/// External harmonics from the surface integral against direct evaluation.
pub fn integral_representation(catalog: &Catalog, order: usize) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let params = &catalog.params;
    let idx: [([usize; 2], usize); 5] = [
        ([0, 0], 0),
        ([1, 0], 3),
        ([0, 1], 5),
        ([1, 1], 6),
        ([2, 0], 1),
    ];
    let mut worst = 0.0f64;
    let mut count = 0;
    for kind in 1..=3u8 {
        let (lo, hi) = params.interval(surface_index(kind));
        let quad = SurfaceQuadrature::new(kind, 0.5 * (lo + hi), order, params)?;
        for (n, pi) in idx {
            let bits = ParityVector::all(kind)[pi].to_string();
            let h = harmonic(catalog, kind, n, &bits)?;
            for rp in exterior_points(kind) {
                let a = external_via_integral(&h, rp, &quad)?;
                let b = h.eval_external(rp)?;
                worst = worst.max(rel(a, b));
                count += 1;
            }
        }
    }
    Ok(outcome("integral representation", worst, 1e-4, count, t0))
}

/// Functional matrix over the kind-2 harmonics of total order at most 2.
pub fn biorthogonality(catalog: &Catalog, order: usize) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let params = &catalog.params;
    let set = HarmonicSet::from_catalog(catalog, 2, 2)?;
    let (lo, hi) = params.interval(2);
    let quad = SurfaceQuadrature::new(2, lo + 0.45 * (hi - lo), order, params)?;
    let m = functional_matrix(&set.pairs, &quad)?;
    let mut worst = 0.0f64;
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            worst = worst.max((v - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    Ok(outcome(
        "biorthogonality",
        worst,
        1e-5,
        m.len() * m.len(),
        t0,
    ))
}

/// Self functional of a few harmonics on two different surfaces.
pub fn functional_d_independence(catalog: &Catalog, order: usize) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let params = &catalog.params;
    let mut worst = 0.0f64;
    for (kind, bits) in [(2u8, "0110"), (1, "101"), (3, "010")] {
        let h = harmonic(catalog, kind, [1, 1], bits)?;
        let (lo, hi) = params.interval(surface_index(kind));
        let mut vals = vec![];
        for f in [0.4, 0.6] {
            let quad = SurfaceQuadrature::new(kind, lo + f * (hi - lo), order, params)?;
            vals.push(h.self_functional(&quad)?);
        }
        worst = worst
            .max((vals[0] - vals[1]).abs())
            .max((vals[0] - 1.0).abs());
    }
    Ok(outcome("functional d-independence", worst, 1e-6, 6, t0))
}

/// Kind-3 case C at (r, r') against case A at the reflected, swapped pair.
pub fn reflection_duality(catalog: &Catalog) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let refl = |q: Point3<f64>| Point3::new(q.x, q.y, -q.z);
    let mut worst = 0.0f64;
    for ep in expansion_pairs()
        .iter()
        .filter(|e| e.kind == 3 && e.case == CaseLabel::C)
    {
        let c = reciprocal_expansion(3, ep.r, ep.rp, 4, catalog)?;
        let a = reciprocal_expansion(3, refl(ep.rp), refl(ep.r), 4, catalog)?;
        for (x, y) in c.rows.iter().zip(&a.rows) {
            worst = worst.max(rel(x.partial_sum, y.partial_sum));
        }
    }
    Ok(outcome("reflection duality", worst, 1e-10, 1, t0))
}

/// The kind-2 pair expanded both ways; worst error as a fraction of each tolerance.
pub fn spherical_cross_check(catalog: &Catalog) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let ep = expansion_pairs()[0];
    let cyc = reciprocal_expansion(2, ep.r, ep.rp, 4, catalog)?;
    let (near, far) = if ep.r.norm() < ep.rp.norm() {
        (ep.r, ep.rp)
    } else {
        (ep.rp, ep.r)
    };
    let sph = spherical_expansion(near, far, 80)?;
    let worst = (cyc.rows[4].rel_err / 1e-2).max(sph.rows[80].rel_err / 1e-9);
    Ok(outcome("spherical cross-check", worst, 1.0, 2, t0))
}

/// On-axis partial sums 2 - 2^-L and a random ratio-1/2 pair at L = 40.
pub fn spherical_baseline(seed: u64) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let axis = spherical_expansion(Point3::new(0.0, 0.0, 0.5), Point3::new(0.0, 0.0, 1.0), 40)?;
    for (l, row) in axis.rows.iter().enumerate() {
        // scaled so that the 1e-12 bound maps to the 1e-9 bound
        worst = worst.max((row.partial_sum - (2.0 - 0.5f64.powi(l as i32))).abs() * 1e3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = || {
        let v = Point3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        v.scale(1.0 / v.norm())
    };
    let (u, v) = (unit(), unit());
    let rep = spherical_expansion(u.scale(0.6), v.scale(1.2), 40)?;
    worst = worst.max(rep.rows[40].rel_err);
    Ok(outcome("spherical baseline", worst, 1e-9, 2, t0))
}

pub fn expansion_suite(catalog: &mut Catalog, order: usize) -> Result<Vec<CheckOutcome>> {
    for kind in 1..=3 {
        catalog.fill(kind, 4)?;
    }
    let pairs = if catalog.params.a() == &[0.0, 1.0, 2.0, 3.0] {
        expansion_pairs()
    } else {
        vec![]
    };
    let mut out = vec![];
    if !pairs.is_empty() {
        out.push(expansion_correctness(catalog, &pairs)?);
        out.push(expansion_constants(catalog, &pairs)?);
    }
    out.push(integral_representation(catalog, order)?);
    out.push(biorthogonality(catalog, order)?);
    out.push(functional_d_independence(catalog, order)?);
    if !pairs.is_empty() {
        out.push(reflection_duality(catalog)?);
        out.push(spherical_cross_check(catalog)?);
    }
    out.push(spherical_baseline(7)?);
    Ok(out)
}

/// Runs a named suite; the catalog is filled as needed.
pub fn run_suite(
    name: &str,
    catalog: &mut Catalog,
    quad_order: usize,
) -> Result<Vec<CheckOutcome>> {
    let params = catalog.params;
    match name {
        "geometry" => geometry_suite(&params, 2000, 1),
        "fuchsian" => fuchsian_suite(&params, 5, 11),
        "eigen" => eigen_suite(catalog, 2),
        "harmonics" => {
            for kind in 1..=3 {
                catalog.fill(kind, 2)?;
            }
            harmonics_suite(catalog, 6, 21)
        }
        "expansion" => expansion_suite(catalog, quad_order.max(8)),
        _ => Err(Error::Domain(format!(
            "unknown suite {name:?}; expected one of {}",
            SUITES.join(", ")
        ))),
    }
}
