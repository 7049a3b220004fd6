mod common;

use std::sync::OnceLock;

use common::fields::rel_diff;
use cyclharm::eigen::{multi_indices, Catalog, ParityVector};
use cyclharm::error::Error;
use cyclharm::expansion::*;
use cyclharm::geometry::{apply_symmetry, to_cyclidic, Params, Point3};
use cyclharm::harmonics::{build_harmonic, HarmonicPair};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn catalog() -> &'static Catalog {
    static CAT: OnceLock<Catalog> = OnceLock::new();
    CAT.get_or_init(|| {
        let mut c = Catalog::new(Params::<f64>::default());
        for k in 1..=3 {
            c.fill(k, 4).unwrap();
        }
        c
    })
}

fn pair(kind: u8, n: [usize; 2], bits: &str) -> HarmonicPair {
    let p = ParityVector::parse(kind, bits).unwrap();
    let rec = catalog()
        .get(&cyclharm::eigen::RecordKey {
            kind,
            n,
            p: p.clone(),
        })
        .cloned();
    match rec {
        Some(r) => HarmonicPair::from_record(&r, &Params::<f64>::default()).unwrap(),
        None => build_harmonic(kind, n, &p, &Params::<f64>::default(), None).unwrap(),
    }
}

#[test]
fn ferrers_matches_rational_rodrigues() {
    // P_5^3(x) = -(1 - x^2)^(3/2) (3780 x^2 - 420) / 8 with x = 3/10
    let x = Ratio::new(3i64, 10);
    let poly =
        -(Ratio::from_integer(3780) * x * x - Ratio::from_integer(420)) / Ratio::from_integer(8);
    let one_minus = Ratio::from_integer(1) - x * x;
    let root = (*one_minus.numer() as f64 / *one_minus.denom() as f64).powf(1.5);
    let exact = *poly.numer() as f64 / *poly.denom() as f64 * root;
    let got = ferrers_p(5, 3, 0.3).unwrap();
    assert!(rel_diff(got, exact) < 1e-14, "{got} vs {exact}");
    // reflection to negative order
    let neg = ferrers_p(5, -3, 0.3).unwrap();
    assert!(rel_diff(neg, -exact / 20160.0) < 1e-14);
}

#[test]
fn spherical_baseline_random_pair() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..5 {
        let u = Point3::new(
            rng.gen_range(-1.0f64..1.0),
            rng.gen_range(-1.0f64..1.0),
            rng.gen_range(-1.0f64..1.0),
        );
        let v = Point3::new(
            rng.gen_range(-1.0f64..1.0),
            rng.gen_range(-1.0f64..1.0),
            rng.gen_range(-1.0f64..1.0),
        );
        let r = u.scale(0.7 / u.norm());
        let rp = v.scale(1.4 / v.norm());
        let rep = spherical_expansion(r, rp, 40).unwrap();
        assert!(rep.rows[40].rel_err <= 1e-9, "{}", rep.rows[40].rel_err);
        assert_eq!(rep.rows[40].terms, 41 * 41);
    }
    let rep =
        spherical_expansion(Point3::new(0.0, 0.0, 0.5), Point3::new(0.0, 0.0, 1.0), 10).unwrap();
    for (l, row) in rep.rows.iter().enumerate() {
        assert!((row.partial_sum - (2.0 - 0.5f64.powi(l as i32))).abs() < 1e-12);
    }
}

#[test]
fn self_functional_orthogonality_and_d_independence() {
    let params = Params::<f64>::default();
    for (kind, bits_a, bits_b) in [(2u8, "0110", "0100"), (1, "101", "100"), (3, "010", "011")] {
        let g = pair(kind, [1, 1], bits_a);
        let other = pair(kind, [2, 0], bits_b);
        let (lo, hi) = params.interval(surface_index(kind));
        let mid = 0.5 * (lo + hi);
        let mut selfs = vec![];
        for d in [mid, mid - 0.1 * (hi - lo), mid + 0.1 * (hi - lo)] {
            let v =
                coefficient_functional_checked(&g, |p| g.eval_internal(p).unwrap(), d, 32).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "kind {kind} d={d}: {v}");
            selfs.push(v);
            let o = coefficient_functional_checked(&g, |p| other.eval_internal(p).unwrap(), d, 32)
                .unwrap();
            assert!(o.abs() < 1e-6, "kind {kind} cross: {o}");
        }
        assert!((selfs[0] - selfs[1]).abs() < 1e-6 && (selfs[0] - selfs[2]).abs() < 1e-6);
    }
}

#[test]
fn kind2_biorthogonality_over_order_two() {
    let params = Params::<f64>::default();
    let set = HarmonicSet::from_catalog(catalog(), 2, 2).unwrap();
    let pairs: Vec<HarmonicPair> = set
        .pairs
        .into_iter()
        .filter(|p| p.record.n[0] + p.record.n[1] <= 2)
        .collect();
    assert_eq!(pairs.len(), 96);
    let quad = SurfaceQuadrature::new(2, 1.45, DEFAULT_ORDER, &params).unwrap();
    let m = functional_matrix(&pairs, &quad).unwrap();
    let mut worst = 0.0f64;
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - want).abs());
        }
    }
    assert!(worst < 1e-5, "worst entry deviation {worst:e}");
}

#[test]
fn integral_representation_matches_external() {
    let params = Params::<f64>::default();
    let pts = [
        (
            2u8,
            [
                Point3::new(0.3, 0.2, 0.1),
                Point3::new(1.5, 0.7, 0.4),
                Point3::new(0.7, 0.15, -0.35),
            ],
        ),
        (
            1,
            [
                Point3::new(1.5, 0.7, 0.4),
                Point3::new(-0.4, 1.2, 0.3),
                Point3::new(0.1, -0.2, -2.5),
            ],
        ),
        (
            3,
            [
                Point3::new(0.1, 0.2, -0.4),
                Point3::new(1.5, -0.7, 0.1),
                Point3::new(-0.3, 0.8, -0.05),
            ],
        ),
    ];
    let idx: [([usize; 2], usize); 5] = [
        ([0, 0], 0),
        ([1, 0], 3),
        ([0, 1], 5),
        ([1, 1], 6),
        ([2, 0], 1),
    ];
    for (kind, rps) in pts {
        let (lo, hi) = params.interval(surface_index(kind));
        let d = lo + 0.5 * (hi - lo);
        let quad = SurfaceQuadrature::new(kind, d, DEFAULT_ORDER, &params).unwrap();
        for (n, pi) in idx {
            let p = &ParityVector::all(kind)[pi];
            let h = pair(kind, n, &p.to_string());
            for rp in rps {
                let a = external_via_integral(&h, rp, &quad).unwrap();
                let b = h.eval_external(rp).unwrap();
                assert!(
                    rel_diff(a, b) < 1e-4 || (a - b).abs() < 1e-10,
                    "kind {kind} n={n:?} p={p} rp={rp:?}: {a} vs {b}"
                );
            }
        }
    }
    // reflection parity of the integral
    let h = pair(2, [1, 0], "0100");
    let quad = SurfaceQuadrature::new(2, 1.5, 32, &params).unwrap();
    let rp = Point3::new(0.3, 0.2, 0.1);
    let a = external_via_integral(&h, rp, &quad).unwrap();
    let b = external_via_integral(&h, apply_symmetry(1, rp).unwrap(), &quad).unwrap();
    assert!((a + b).abs() < 1e-10 * a.abs().max(1e-300) + 1e-14);
    assert!(matches!(
        external_via_integral(&h, Point3::new(-0.15, -0.85, -0.95), &quad),
        Err(Error::Domain(_))
    ));
}

#[test]
fn case_labels_follow_hypotheses() {
    let params = Params::<f64>::default();
    let r = Point3::new(0.2, 0.3, 0.1);
    for k in 1..=3 {
        assert_eq!(applicable_case(k, r, r, &params), CaseLabel::Inapplicable);
    }
    let u = Point3::new(0.3, -0.2, 0.4);
    assert_eq!(
        applicable_case(1, u.scale(0.5 / u.norm()), u.scale(2.0 / u.norm()), &params),
        CaseLabel::B
    );
    let a = Point3::new(0.2, 0.1, 0.3);
    let b = Point3::new(0.5, 0.6, 0.4);
    assert!(to_cyclidic(a, &params).s3 < to_cyclidic(b, &params).s3);
    assert_eq!(applicable_case(3, a, b, &params), CaseLabel::A);
    assert_eq!(applicable_case(3, b, a, &params), CaseLabel::Inapplicable);
    let e = reciprocal_expansion(2, r, r, 2, catalog()).unwrap_err();
    assert!(matches!(e, Error::InapplicableCase));
}

/// Fixed well-separated pairs per kind and case.
pub fn expansion_pairs() -> Vec<(u8, CaseLabel, Point3<f64>, Point3<f64>)> {
    let a = Point3::new(0.45, 0.40, 0.35);
    let b = Point3::new(0.15, 0.12, 0.10);
    let inv = |p| apply_symmetry(0, p).unwrap();
    let refl = |p| apply_symmetry(3, p).unwrap();
    let k3a = (Point3::new(0.1, 0.05, 0.8), Point3::new(0.5, 0.6, 0.4));
    vec![
        (
            2,
            CaseLabel::A,
            Point3::new(-0.15, -0.85, -0.95),
            Point3::new(0.7, 0.15, -0.35),
        ),
        (1, CaseLabel::A, b, a),
        (
            1,
            CaseLabel::B,
            Point3::new(0.3, 0.2, 0.25),
            Point3::new(1.2, 0.9, 0.7),
        ),
        (1, CaseLabel::C, inv(a), inv(b)),
        (3, CaseLabel::A, k3a.0, k3a.1),
        (
            3,
            CaseLabel::B,
            Point3::new(0.2, 0.3, 0.4),
            Point3::new(0.25, 0.1, -0.35),
        ),
        (3, CaseLabel::C, refl(k3a.1), refl(k3a.0)),
    ]
}

#[test]
fn expansions_converge_with_the_printed_constants() {
    let params = Params::<f64>::default();
    for (kind, case, r, rp) in expansion_pairs() {
        assert_eq!(applicable_case(kind, r, rp, &params), case);
        let rep = reciprocal_expansion(kind, r, rp, 4, catalog()).unwrap();
        let per = if kind == 2 { 16 } else { 8 };
        for row in &rep.rows {
            let count = multi_indices(row.order).len();
            assert_eq!(row.terms, per * count);
        }
        assert!(
            rep.rows[4].rel_err <= 1e-2,
            "kind {kind} {case:?}: {}",
            rep.rows[4].rel_err
        );
        for w in rep.rows[2..].windows(2) {
            assert!(
                w[1].abs_err <= w[0].abs_err,
                "kind {kind} {case:?} not monotone"
            );
        }
        let fit = rep.fitted_constant().unwrap();
        assert!(
            rel_diff(fit, expansion_constant(kind)) < 5e-3,
            "kind {kind}: {fit}"
        );
    }
}

#[test]
fn expansion_symmetries() {
    let pairs = expansion_pairs();
    // applying the x reflection to both points leaves every partial sum unchanged
    for (kind, _, r, rp) in &pairs {
        let a = reciprocal_expansion(*kind, *r, *rp, 3, catalog()).unwrap();
        let s1 = |p| apply_symmetry(1, p).unwrap();
        let b = reciprocal_expansion(*kind, s1(*r), s1(*rp), 3, catalog()).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!(rel_diff(x.partial_sum, y.partial_sum) < 1e-12);
        }
    }
    // kind-3 case C at (r, r') equals case A at (s3 r', s3 r)
    let (_, _, r, rp) = pairs[6];
    let refl = |p| apply_symmetry(3, p).unwrap();
    let c = reciprocal_expansion(3, r, rp, 4, catalog()).unwrap();
    let a = reciprocal_expansion(3, refl(rp), refl(r), 4, catalog()).unwrap();
    for (x, y) in c.rows.iter().zip(&a.rows) {
        assert!(rel_diff(x.partial_sum, y.partial_sum) < 1e-10);
    }
}

#[test]
fn csv_layout() {
    let rep =
        spherical_expansion(Point3::new(0.1, 0.2, 0.0), Point3::new(0.0, 0.0, 1.0), 2).unwrap();
    let csv = rep.to_csv();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("order,terms,partial_sum,abs_err,rel_err")
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    assert_eq!(first[1], "1");
    assert_eq!(first[2].parse::<f64>().unwrap(), rep.rows[0].partial_sum);
    assert_eq!(csv.lines().count(), 4);
}
