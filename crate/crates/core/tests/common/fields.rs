use cyclharm::geometry::{g1, g2, Params, Point3};
use cyclharm::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// 7-point Laplacian and the sum of the absolute axis second differences.
pub fn fd_laplacian<F: Fn(Point3<f64>) -> Result<f64>>(
    f: &F,
    p: Point3<f64>,
    h: f64,
) -> Result<(f64, f64)> {
    let c = f(p)?;
    let mut lap = 0.0;
    let mut scale = 0.0;
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

pub fn uniform_box(rng: &mut ChaCha8Rng, half: f64) -> Point3<f64> {
    Point3::new(
        rng.gen_range(-half..half),
        rng.gen_range(-half..half),
        rng.gen_range(-half..half),
    )
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if (f(m) > 0.0) == (flo > 0.0) {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// A point of A1 (x = 0, g1 = 0) with the given z, searching y in (0, ymax).
pub fn a1_point(z: f64, params: &Params<f64>) -> Option<Point3<f64>> {
    let f = |y: f64| g1(y, z, params);
    let n = 400;
    for k in 0..n {
        let (a, b) = (k as f64 * 3.0 / n as f64, (k + 1) as f64 * 3.0 / n as f64);
        if f(a).signum() != f(b).signum() {
            return Some(Point3::new(0.0, bisect(f, a, b), z));
        }
    }
    None
}

/// A point of A2 (y = 0, g2 = 0) with the given z.
pub fn a2_point(z: f64, params: &Params<f64>) -> Option<Point3<f64>> {
    let f = |x: f64| g2(x, z, params);
    let n = 400;
    for k in 0..n {
        let (a, b) = (k as f64 * 3.0 / n as f64, (k + 1) as f64 * 3.0 / n as f64);
        if f(a).signum() != f(b).signum() {
            return Some(Point3::new(bisect(f, a, b), 0.0, z));
        }
    }
    None
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}
