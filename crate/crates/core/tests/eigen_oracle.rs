mod common;

use common::collocation;
use cyclharm::eigen::*;
use cyclharm::geometry::Params;

#[test]
fn kind2_matches_collocation() {
    let params = Params::default();
    let a = *params.a();
    for n in [[0, 0], [1, 0]] {
        for p in ParityVector::all(2) {
            let rec = solve_eigenpair(2, n, &p, &params, RESIDUAL_TOL).unwrap();
            let ints = eigen_intervals(2);
            let par = [
                interval_parities(&p, ints[0]),
                interval_parities(&p, ints[1]),
            ];
            let (l1, l2) = collocation::joint(a, ints, par, n);
            let e1 = (rec.lam.lambda1 - l1).abs() / l1.abs().max(1.0);
            let e2 = (rec.lam.lambda2 - l2).abs() / l2.abs().max(1.0);
            assert!(
                e1 < 1e-6 && e2 < 1e-6,
                "n {n:?} p {p}: ({l1}, {l2}) vs {:?}",
                rec.lam
            );
        }
    }
}

#[test]
fn kinds1_3_match_collocation() {
    let params = Params::new([-0.5, 0.8, 1.7, 3.1]).unwrap();
    for kind in [1u8, 3] {
        for p in ParityVector::all(kind).into_iter().step_by(3) {
            let n = [1, 1];
            let rec = solve_eigenpair(kind, n, &p, &params, RESIDUAL_TOL).unwrap();
            let ints = eigen_intervals(kind);
            let par = [
                interval_parities(&p, ints[0]),
                interval_parities(&p, ints[1]),
            ];
            let (l1, l2) = collocation::joint(*params.a(), ints, par, n);
            assert!((rec.lam.lambda1 - l1).abs() < 1e-6 * l1.abs().max(1.0));
            assert!((rec.lam.lambda2 - l2).abs() < 1e-6 * l2.abs().max(1.0));
        }
    }
}

#[test]
fn mirror_symmetry_between_kinds() {
    // s -> 3 - s swaps kinds 1 and 3 and reverses parity order
    let params = Params::default();
    for bits in ParityVector::all(1) {
        let r1 = solve_eigenpair(1, [0, 1], &bits, &params, RESIDUAL_TOL).unwrap();
        let rev: Vec<u8> = bits.bits.iter().rev().cloned().collect();
        let p3 = ParityVector::new(3, &rev).unwrap();
        let r3 = solve_eigenpair(3, [1, 0], &p3, &params, RESIDUAL_TOL).unwrap();
        let m = affine_lambda(&r1.lam, -1.0, 3.0);
        assert!((m.lambda1 - r3.lam.lambda1).abs() < 1e-9);
        assert!((m.lambda2 - r3.lam.lambda2).abs() < 1e-9);
    }
}

#[test]
fn zero_counts_verified_over_catalog() {
    let params = Params::default();
    for kind in 1..=3u8 {
        for n in multi_indices(3) {
            for p in ParityVector::all(kind).into_iter().step_by(5) {
                let rec = solve_eigenpair(kind, n, &p, &params, RESIDUAL_TOL).unwrap();
                let ints = eigen_intervals(kind);
                for w in 0..2 {
                    let (pl, pr) = interval_parities(&p, ints[w]);
                    let z = cyclharm::fuchsian::count_zeros(ints[w], &rec.lam, pl, pr, &params)
                        .unwrap();
                    assert_eq!(z, n[w]);
                }
            }
        }
    }
}
