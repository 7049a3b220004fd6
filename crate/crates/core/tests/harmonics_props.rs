mod common;

use common::fields::{a1_point, a2_point, fd_laplacian, rel_diff, uniform_box};
use cyclharm::eigen::ParityVector;
use cyclharm::error::{Error, SingularSet};
use cyclharm::fuchsian::dense_wronskian;
use cyclharm::geometry::{apply_symmetry, Located, Params, Point3};
use cyclharm::harmonics::{build_harmonic, kelvin, wronskian_sign, Block, HarmonicPair};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pair(kind: u8, n: [usize; 2], bits: &str) -> HarmonicPair {
    let p = ParityVector::parse(kind, bits).unwrap();
    build_harmonic(kind, n, &p, &Params::default(), None).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()) + 1e-14
}

/// A random point away from the coordinate planes and the unit sphere.
fn generic_point(rng: &mut ChaCha8Rng, half: f64) -> Point3<f64> {
    loop {
        let p = uniform_box(rng, half);
        if p.x.abs() > 0.02 && p.y.abs() > 0.02 && p.z.abs() > 0.02 && (p.norm() - 1.0).abs() > 0.02
        {
            return p;
        }
    }
}

#[test]
fn partner_wronskian_is_pinned() {
    let params = Params::default();
    for (kind, bits) in [(2u8, "0110"), (1, "101"), (3, "011")] {
        let h = pair(kind, [1, 0], bits);
        let free = cyclharm::eigen::free_interval(kind);
        let (lo, hi) = params.interval(free);
        for k in 1..=10 {
            let s = lo + (hi - lo) * k as f64 / 11.0;
            let w = h.triple.partner_wronskian(s, &params).unwrap();
            assert!(
                (w - wronskian_sign(kind)).abs() < 1e-9,
                "kind {kind} s={s} W={w}"
            );
        }
        if let Some((p, q)) = &h.triple.pq {
            for k in 1..=10 {
                let s = lo + (hi - lo) * k as f64 / 11.0;
                assert!((dense_wronskian(p, q, s, &params).unwrap() - 1.0).abs() < 1e-9);
            }
            let c = h.connection().unwrap();
            assert_eq!(c.c_coef, -1.0 / (2.0 * c.a_coef * c.b_coef));
        }
    }
}

#[test]
fn kind2_symmetries() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for bits in ["0000", "1010", "0111", "1101"] {
        let h = pair(2, [1, 0], bits);
        let p = ParityVector::parse(2, bits).unwrap();
        for _ in 0..20 {
            let r = generic_point(&mut rng, 1.8);
            let g = h.eval_internal(r).unwrap();
            let e = h.eval_external(r).unwrap();
            for j in 1..=3 {
                let sg = if p.at(j).unwrap() == 1 { -1.0 } else { 1.0 };
                let q = apply_symmetry(j, r).unwrap();
                assert!(
                    close(h.eval_internal(q).unwrap(), sg * g, 1e-9),
                    "G sym j={j} p={bits}"
                );
                assert!(
                    close(h.eval_external(q).unwrap(), sg * e, 1e-9),
                    "H sym j={j} p={bits}"
                );
            }
            let s0 = if p.at(0).unwrap() == 1 { -1.0 } else { 1.0 };
            let q = apply_symmetry(0, r).unwrap();
            assert!(close(h.eval_internal(q).unwrap(), s0 * r.norm() * g, 1e-9));
            assert!(close(h.eval_external(q).unwrap(), s0 * r.norm() * e, 1e-9));
            let k = kelvin(|x| h.eval_internal(x), r).unwrap();
            assert!(close(k, s0 * g, 1e-9));
        }
    }
}

#[test]
fn kind1_symmetries() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for bits in ["000", "101", "011", "111"] {
        let h = pair(1, [0, 1], bits);
        let p = ParityVector::parse(1, bits).unwrap();
        for _ in 0..20 {
            let r = generic_point(&mut rng, 1.8);
            let i = h.eval_block(Block::I, r).unwrap();
            let jv = h.eval_block(Block::J, r).unwrap();
            let q0 = apply_symmetry(0, r).unwrap();
            assert!(close(
                h.eval_block(Block::I, q0).unwrap(),
                r.norm() * i,
                1e-9
            ));
            assert!(close(
                h.eval_block(Block::J, q0).unwrap(),
                -r.norm() * jv,
                1e-9
            ));
            let g = h.eval_internal(r).unwrap();
            let e = h.eval_external(r).unwrap();
            for j in 1..=3 {
                let sg = if p.at(j).unwrap() == 1 { -1.0 } else { 1.0 };
                let q = apply_symmetry(j, r).unwrap();
                assert!(close(h.eval_block(Block::I, q).unwrap(), sg * i, 1e-9));
                assert!(close(h.eval_block(Block::J, q).unwrap(), sg * jv, 1e-9));
                assert!(close(h.eval_internal(q).unwrap(), sg * g, 1e-9));
                assert!(close(h.eval_external(q).unwrap(), sg * e, 1e-9));
            }
        }
    }
}

#[test]
fn kind3_symmetries() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for bits in ["000", "110", "011", "101"] {
        let h = pair(3, [1, 1], bits);
        let p = ParityVector::parse(3, bits).unwrap();
        for _ in 0..20 {
            let r = generic_point(&mut rng, 1.8);
            let i = h.eval_block(Block::I, r).unwrap();
            let jv = h.eval_block(Block::J, r).unwrap();
            let g = h.eval_internal(r).unwrap();
            let e = h.eval_external(r).unwrap();
            let s0 = if p.at(0).unwrap() == 1 { -1.0 } else { 1.0 };
            let q0 = apply_symmetry(0, r).unwrap();
            assert!(close(
                h.eval_block(Block::I, q0).unwrap(),
                s0 * r.norm() * i,
                1e-9
            ));
            assert!(close(
                h.eval_block(Block::J, q0).unwrap(),
                s0 * r.norm() * jv,
                1e-9
            ));
            assert!(close(h.eval_internal(q0).unwrap(), s0 * r.norm() * g, 1e-9));
            assert!(close(h.eval_external(q0).unwrap(), s0 * r.norm() * e, 1e-9));
            for j in 1..=2 {
                let sg = if p.at(j).unwrap() == 1 { -1.0 } else { 1.0 };
                let q = apply_symmetry(j, r).unwrap();
                assert!(close(h.eval_block(Block::I, q).unwrap(), sg * i, 1e-9));
                assert!(close(h.eval_block(Block::J, q).unwrap(), sg * jv, 1e-9));
                assert!(close(h.eval_internal(q).unwrap(), sg * g, 1e-9));
                assert!(close(h.eval_external(q).unwrap(), sg * e, 1e-9));
            }
            let q3 = apply_symmetry(3, r).unwrap();
            assert!(close(h.eval_block(Block::I, q3).unwrap(), i, 1e-9));
            assert!(close(h.eval_block(Block::J, q3).unwrap(), -jv, 1e-9));
        }
    }
}

#[test]
fn vanishing_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let k2a = pair(2, [0, 1], "1000");
    let k2b = pair(2, [0, 1], "0100");
    let k1 = pair(1, [1, 0], "010");
    let k3 = pair(3, [1, 0], "010");
    for _ in 0..10 {
        let r = generic_point(&mut rng, 1.5);
        let u = r.scale(1.0 / r.norm());
        let scale = k2a.eval_internal(r.scale(0.5)).unwrap().abs() + 1.0;
        assert!(k2a.eval_internal(u).unwrap().abs() < 1e-12 * scale);
        let x0 = Point3::new(0.0, r.y, r.z);
        assert!(k2b.eval_internal(x0).unwrap().abs() < 1e-12);
        assert!(k1.eval_block(Block::J, u).unwrap().abs() < 1e-12);
        let z0 = Point3::new(r.x, r.y, 0.0);
        assert!(k3.eval_block(Block::J, z0).unwrap().abs() < 1e-12);
    }
}

#[test]
fn kelvin_is_an_involution() {
    let f = |p: Point3<f64>| Ok(p.x * p.x - p.y + 3.0 * p.z * p.y);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..20 {
        let r = generic_point(&mut rng, 3.0);
        let kk = kelvin(|q| kelvin(f, q), r).unwrap();
        assert!(close(kk, f(r).unwrap(), 1e-13));
    }
    assert!(kelvin(f, Point3::new(0.0, 0.0, 0.0)).is_err());
}

#[test]
fn global_formulas_agree() {
    // inside the ball, the single product and a I + b J describe the same function
    let params = Params::default();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for (kind, bits) in [(1u8, "110"), (3, "101")] {
        let h = pair(kind, [1, 1], bits);
        let c = h.connection().unwrap();
        let mut checked = 0;
        while checked < 30 {
            let r = generic_point(&mut rng, 1.0);
            if r.norm() >= 0.98 || (kind == 3 && r.z < 0.0) {
                continue;
            }
            let loc = Located::from_point(r, &params);
            let via_blocks = c.a_coef * h.block_at(Block::I, &loc).unwrap()
                + c.b_coef * h.block_at(Block::J, &loc).unwrap();
            let g = h.eval_internal(r).unwrap();
            // measured against the size of the two terms, which may cancel heavily
            let ai = c.a_coef * h.block_at(Block::I, &loc).unwrap();
            let bj = c.b_coef * h.block_at(Block::J, &loc).unwrap();
            assert!(
                (g - via_blocks).abs() <= 1e-9 * (ai.abs() + bj.abs()),
                "kind {kind} at {r:?}: {g} vs {via_blocks}"
            );
            checked += 1;
        }
    }
}

#[test]
fn block_inversion_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let h = pair(1, [2, 0], "011");
    for _ in 0..10 {
        let r = generic_point(&mut rng, 1.5);
        let lhs = h
            .eval_block(Block::I, apply_symmetry(0, r).unwrap())
            .unwrap();
        assert!(close(
            lhs,
            r.norm() * h.eval_block(Block::I, r).unwrap(),
            1e-9
        ));
    }
}

#[test]
fn continuity_across_removable_planes() {
    let params = Params::default();
    let tol = 1e-7;
    // kind 1 across K1 (x = 0 inside the unit disc with g1 >= 0)
    let h = pair(1, [1, 0], "100");
    for (y, z) in [(0.05, 0.1), (0.2, 0.15), (0.1, 0.4)] {
        assert!(cyclharm::geometry::g1(y, z, &params) > 0.0);
        let a = h.eval_internal(Point3::new(1e-10, y, z)).unwrap();
        let b = h.eval_internal(Point3::new(-1e-10, y, z)).unwrap();
        assert!((a - b).abs() <= tol * (1.0 + a.abs()), "K1 {a} {b}");
    }
    // kind 3 across K2 (y = 0, z > 0, g2 <= 0)
    let h = pair(3, [0, 1], "001");
    for (x, z) in [(0.2, 0.9), (0.1, 0.5), (0.3, 1.2)] {
        assert!(cyclharm::geometry::g2(x, z, &params) < 0.0);
        let a = h.eval_internal(Point3::new(x, 1e-10, z)).unwrap();
        let b = h.eval_internal(Point3::new(x, -1e-10, z)).unwrap();
        assert!((a - b).abs() <= tol * (1.0 + a.abs()), "K2 {a} {b}");
    }
}

#[test]
fn singular_surfaces_are_rejected() {
    let h2 = pair(2, [0, 0], "0000");
    let e = h2.eval_internal(Point3::new(0.1, 0.0, 0.1)).unwrap_err();
    assert!(matches!(e, Error::SingularSurface(SingularSet::L2)));
    let e = h2.eval_external(Point3::new(0.0, 0.5, 0.1)).unwrap_err();
    assert!(matches!(e, Error::SingularSurface(SingularSet::L1)));
    let h1 = pair(1, [0, 0], "000");
    let e = h1.eval_internal(Point3::new(0.0, 3.0, 0.1)).unwrap_err();
    assert!(matches!(e, Error::SingularSurface(SingularSet::M1)));
    let e = h1.eval_external(Point3::new(0.0, 0.1, 0.1)).unwrap_err();
    assert!(matches!(e, Error::SingularSurface(SingularSet::K1)));
    let h3 = pair(3, [0, 0], "000");
    let e = h3.eval_internal(Point3::new(0.2, 0.0, -0.9)).unwrap_err();
    assert!(matches!(e, Error::SingularSurface(SingularSet::M2)));
    let e = h3.eval_external(Point3::new(0.2, 0.0, 0.9)).unwrap_err();
    assert!(matches!(e, Error::SingularSurface(SingularSet::K2)));
}

fn assert_harmonic<F: Fn(Point3<f64>) -> cyclharm::Result<f64>>(f: F, p: Point3<f64>, what: &str) {
    let (lap, scale) = fd_laplacian(&f, p, 1e-4).unwrap();
    assert!(
        lap.abs() <= 1e-4 * scale,
        "{what} at {p:?}: lap {lap:e} scale {scale:e}"
    );
}

#[test]
fn harmonicity_by_finite_differences() {
    let params = Params::default();
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let mut straddle = vec![];
    for z in [0.1, 0.3] {
        straddle.push(a1_point(z, &params).unwrap());
    }
    for z in [0.6, 0.9] {
        straddle.push(a2_point(z, &params).unwrap());
    }
    for (kind, bits) in [(2u8, "0110"), (1, "011"), (3, "100")] {
        let h = pair(kind, [1, 0], bits);
        for _ in 0..8 {
            let r = generic_point(&mut rng, 1.6);
            if kind == 3 && r.z < 0.0 {
                continue;
            }
            assert_harmonic(|x| h.eval_internal(x), r, "G");
            assert_harmonic(|x| h.eval_external(x), r, "H");
        }
        for &q in &straddle {
            let q = q + Point3::new(3e-5, 0.0, 0.0);
            if kind != 2 || q.y != 0.0 {
                assert_harmonic(|x| h.eval_internal(x), q, "G on A");
            }
        }
    }
    let h = pair(2, [0, 1], "0010");
    for _ in 0..5 {
        let r = generic_point(&mut rng, 1.6);
        assert_harmonic(|x| kelvin(|y| h.eval_internal(y), x), r, "kelvin G");
    }
}

#[test]
fn external_decay() {
    let dir = Point3::new(1.0, 1.0, 1.0).scale(1.0 / 3f64.sqrt());
    for (kind, bits) in [(2u8, "0000"), (1, "000"), (3, "000")] {
        let h = pair(kind, [0, 0], bits);
        let v: Vec<f64> = [5.0, 10.0, 20.0, 1000.0]
            .iter()
            .map(|&t| t * h.eval_external(dir.scale(t)).unwrap())
            .collect();
        assert!(
            rel_diff(v[0], v[1]) < 0.2 && rel_diff(v[1], v[2]) < 0.2,
            "kind {kind}: {v:?}"
        );
        assert!(v[3].abs() < 2.0 * v[2].abs());
    }
}
