//! Independent eigenvalue oracle: Ritz-Galerkin discretization of each interval problem
//! in the variable theta (s = lo + (hi - lo) sin^2 theta) with a trigonometric basis that
//! carries the prescribed endpoint parities, then a bisection on lambda1.

use nalgebra::{DMatrix, SymmetricEigen};

pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub outer: [f64; 2],
    pub sigma: f64,
}

impl Interval {
    pub fn new(a: [f64; 4], i: usize) -> Self {
        let outer: Vec<f64> = (0..4)
            .filter(|&l| l != i - 1 && l != i)
            .map(|l| a[l])
            .collect();
        Interval {
            lo: a[i - 1],
            hi: a[i],
            outer: [outer[0], outer[1]],
            sigma: if i == 2 { 1.0 } else { -1.0 },
        }
    }
}

/// Basis function k and its theta derivative for endpoint parities (pl, pr).
fn basis(pl: u8, pr: u8, k: usize, th: f64) -> (f64, f64) {
    let (m, odd) = match (pl, pr) {
        (0, 0) => (2 * k, false),
        (1, 0) => (2 * k + 1, true),
        (0, 1) => (2 * k + 1, false),
        _ => (2 * k + 2, true),
    };
    let m = m as f64;
    if odd {
        ((m * th).sin(), m * (m * th).cos())
    } else {
        ((m * th).cos(), -m * (m * th).sin())
    }
}

/// Sorted values of sigma * lambda2 = mu for fixed lambda1.
pub fn interval_spectrum(iv: &Interval, l1: f64, pl: u8, pr: u8, nb: usize, nq: usize) -> Vec<f64> {
    let mut a = DMatrix::<f64>::zeros(nb, nb);
    let mut b = DMatrix::<f64>::zeros(nb, nb);
    let h = std::f64::consts::FRAC_PI_2 / nq as f64;
    for q in 0..=nq {
        let th = q as f64 * h;
        let wq = if q == 0 || q == nq { 0.5 * h } else { h };
        let s = iv.lo + (iv.hi - iv.lo) * th.sin().powi(2);
        let r = ((s - iv.outer[0]) * (s - iv.outer[1])).abs().sqrt();
        let v = -iv.sigma * (3.0 / 16.0 * s * s + l1 * s);
        let vals: Vec<(f64, f64)> = (0..nb).map(|k| basis(pl, pr, k, th)).collect();
        for i in 0..nb {
            for j in 0..=i {
                let (fi, di) = vals[i];
                let (fj, dj) = vals[j];
                a[(i, j)] += wq * (di * dj * r / 2.0 + v * fi * fj * 2.0 / r);
                b[(i, j)] += wq * fi * fj * 2.0 / r;
            }
        }
    }
    for i in 0..nb {
        for j in 0..i {
            a[(j, i)] = a[(i, j)];
            b[(j, i)] = b[(i, j)];
        }
    }
    let l = b.cholesky().expect("mass matrix is positive definite").l();
    let li = l.clone().try_inverse().unwrap();
    let c = &li * a * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().cloned().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

pub fn lambda2(iv: &Interval, l1: f64, n: usize, pl: u8, pr: u8) -> f64 {
    iv.sigma * interval_spectrum(iv, l1, pl, pr, 64, 256)[n]
}

/// Joint solve on two intervals with parities and zero counts.
pub fn joint(a: [f64; 4], ints: [usize; 2], par: [(u8, u8); 2], n: [usize; 2]) -> (f64, f64) {
    let ia = Interval::new(a, ints[0]);
    let ib = Interval::new(a, ints[1]);
    let gap = |l1: f64| {
        lambda2(&ia, l1, n[0], par[0].0, par[0].1) - lambda2(&ib, l1, n[1], par[1].0, par[1].1)
    };
    // scan outward from zero, then Illinois regula falsi
    let (mut lo, mut hi) = (0.0, 0.0);
    let g0 = gap(0.0);
    let dir = if g0 < 0.0 { 1.0 } else { -1.0 };
    let mut x = 0.0;
    let mut gx = g0;
    for _ in 0..100 {
        let y = x + dir;
        let gy = gap(y);
        if gy.signum() != gx.signum() {
            lo = x.min(y);
            hi = x.max(y);
            break;
        }
        x = y;
        gx = gy;
    }
    assert!(hi > lo, "no sign change");
    let mut glo = gap(lo);
    let mut ghi = gap(hi);
    let mut side = 0;
    let mut l1 = lo;
    for _ in 0..100 {
        l1 = (lo * ghi - hi * glo) / (ghi - glo);
        let g = gap(l1);
        if g == 0.0 || hi - lo < 1e-13 {
            break;
        }
        if g.signum() == glo.signum() {
            lo = l1;
            glo = g;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = l1;
            ghi = g;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
        if g.abs() < 1e-13 {
            break;
        }
    }
    (l1, lambda2(&ia, l1, n[0], par[0].0, par[0].1))
}
