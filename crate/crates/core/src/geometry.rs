//! 5-cyclidic coordinates: forward and inverse maps, symmetries, the sign
//! functions chi_j, scale factors, region tags and coordinate-surface charts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{sgn, Real};

/// The four singular points a0 < a1 < a2 < a3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params<T> {
    a: [T; 4],
}

impl<T: Real> Params<T> {
    pub fn new(a: [T; 4]) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite singular point".into()));
        }
        if !(a[0] < a[1] && a[1] < a[2] && a[2] < a[3]) {
            return Err(Error::InvalidParams(format!(
                "singular points must be strictly increasing, got {:?}",
                a
            )));
        }
        Ok(Params { a })
    }

    #[inline]
    pub fn a(&self) -> &[T; 4] {
        &self.a
    }

    #[inline]
    pub fn span(&self) -> T {
        self.a[3] - self.a[0]
    }

    /// Endpoints of interval i (1..=3).
    #[inline]
    pub fn interval(&self, i: usize) -> (T, T) {
        (self.a[i - 1], self.a[i])
    }

    /// Smallest gap between consecutive singular points.
    pub fn min_gap(&self) -> T {
        (self.a[1] - self.a[0])
            .min(self.a[2] - self.a[1])
            .min(self.a[3] - self.a[2])
    }

    /// P'(a_j) = prod_{k != j} (a_j - a_k).
    pub fn p1(&self, j: usize) -> T {
        let mut r = T::one();
        for k in 0..4 {
            if k != j {
                r = r * (self.a[j] - self.a[k]);
            }
        }
        r
    }

    pub fn cast<U: Real>(&self) -> Params<U> {
        Params {
            a: self.a.map(|v| U::lit(v.as_f64())),
        }
    }
}

impl<T: Real> Default for Params<T> {
    fn default() -> Self {
        Params {
            a: [T::zero(), T::one(), T::lit(2.0), T::lit(3.0)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> std::ops::Add for Point3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> std::ops::Sub for Point3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Point3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Point3 { x, y, z }
    }

    pub fn from_array(v: [T; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm_sq(self) -> T {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, o: Point3<T>) -> T {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        let dz = self.z - o.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn scale(self, k: T) -> Self {
        Point3::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn cross(self, o: Point3<T>) -> Self {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CyclidicCoords<T> {
    pub s1: T,
    pub s2: T,
    pub s3: T,
}

impl<T: Real> CyclidicCoords<T> {
    pub fn new(s1: T, s2: T, s3: T) -> Self {
        CyclidicCoords { s1, s2, s3 }
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.s1, self.s2, self.s3]
    }

    pub fn from_array(s: [T; 3]) -> Self {
        CyclidicCoords::new(s[0], s[1], s[2])
    }

    /// Coordinate i (1..=3).
    pub fn get(&self, i: usize) -> T {
        match i {
            1 => self.s1,
            2 => self.s2,
            3 => self.s3,
            _ => panic!("coordinate index {i} out of range"),
        }
    }

    pub fn is_interlaced(&self, params: &Params<T>) -> bool {
        let a = params.a();
        a[0] <= self.s1
            && self.s1 <= a[1]
            && a[1] <= self.s2
            && self.s2 <= a[2]
            && a[2] <= self.s3
            && self.s3 <= a[3]
    }
}

/// Selects one of the 16 preimages of a coordinate triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OctantFlags {
    pub sign_x: i8,
    pub sign_y: i8,
    pub sign_z: i8,
    pub inside: bool,
}

impl OctantFlags {
    pub const POSITIVE_INSIDE: OctantFlags = OctantFlags {
        sign_x: 1,
        sign_y: 1,
        sign_z: 1,
        inside: true,
    };

    pub fn new(sign_x: i8, sign_y: i8, sign_z: i8, inside: bool) -> Self {
        let n = |v: i8| if v < 0 { -1 } else { 1 };
        OctantFlags {
            sign_x: n(sign_x),
            sign_y: n(sign_y),
            sign_z: n(sign_z),
            inside,
        }
    }

    /// All 16 words in lexicographic order (inside first, then x, y, z signs with + before -).
    pub fn all() -> Vec<OctantFlags> {
        let mut v = Vec::with_capacity(16);
        for inside in [true, false] {
            for sx in [1, -1] {
                for sy in [1, -1] {
                    for sz in [1, -1] {
                        v.push(OctantFlags::new(sx, sy, sz, inside));
                    }
                }
            }
        }
        v
    }

    /// Flags of a Cartesian point; zero components count as positive.
    pub fn of_point<T: Real>(p: Point3<T>) -> Self {
        let s = |v: T| if v < T::zero() { -1 } else { 1 };
        OctantFlags::new(s(p.x), s(p.y), s(p.z), p.norm_sq() < T::one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RegionTags {
    pub a1: bool,
    pub a2: bool,
    pub k1: bool,
    pub l1: bool,
    pub m1: bool,
    pub k2: bool,
    pub l2: bool,
    pub m2: bool,
    pub r: bool,
    pub on_plane_x: bool,
    pub on_plane_y: bool,
    pub on_plane_z: bool,
    pub on_unit_sphere: bool,
}

impl RegionTags {
    /// Names of the set memberships that hold, in a fixed order.
    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        let pairs = [
            (self.a1, "A1"),
            (self.a2, "A2"),
            (self.k1, "K1"),
            (self.l1, "L1"),
            (self.m1, "M1"),
            (self.k2, "K2"),
            (self.l2, "L2"),
            (self.m2, "M2"),
            (self.r, "R"),
        ];
        for (b, n) in pairs {
            if b {
                v.push(n);
            }
        }
        v
    }
}

/// Numerators of the defining equation: ((rho-1)^2, 4x^2, 4y^2, 4z^2).
fn numerators<T: Real>(p: Point3<T>) -> ([T; 4], T) {
    let rho = p.norm_sq();
    let four = T::lit(4.0);
    let n0 = (rho - T::one()) * (rho - T::one());
    (
        [n0, four * p.x * p.x, four * p.y * p.y, four * p.z * p.z],
        rho,
    )
}

/// Coefficients (ascending) of prod (u + d_i).
fn poly_from_shifts<T: Real>(d: &[T]) -> [T; 4] {
    let mut c = [T::one(), T::zero(), T::zero(), T::zero()];
    for (deg, &di) in d.iter().enumerate() {
        for m in (1..=deg + 1).rev() {
            c[m] = c[m - 1] + c[m] * di;
        }
        c[0] = c[0] * di;
    }
    c
}

/// Cleared cubic expanded about u = s - a_k, ascending coefficients.
fn local_cubic<T: Real>(n: &[T; 4], a: &[T; 4], k: usize) -> [T; 4] {
    let mut out = [T::zero(); 4];
    for m in 0..4 {
        if n[m] == T::zero() {
            continue;
        }
        let shifts: Vec<T> = (0..4).filter(|&j| j != m).map(|j| a[k] - a[j]).collect();
        let c = poly_from_shifts(&shifts);
        for i in 0..4 {
            out[i] = out[i] + n[m] * c[i];
        }
    }
    out
}

fn horner<T: Real>(c: &[T; 4], u: T) -> (T, T) {
    let v = ((c[3] * u + c[2]) * u + c[1]) * u + c[0];
    let d = (T::lit(3.0) * c[3] * u + T::lit(2.0) * c[2]) * u + c[1];
    (v, d)
}

/// Roots of the cleared cubic by the trigonometric method, sorted.
fn trig_roots<T: Real>(n: &[T; 4], params: &Params<T>) -> [T; 3] {
    let a = params.a();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let mid = (a[0] + a[3]) / two;
    let half = (a[3] - a[0]) / two;
    let b: Vec<T> = a.iter().map(|&v| (v - mid) / half).collect();
    let total: T = n.iter().copied().sum();
    let (mut e1, mut e2, mut e3) = (T::zero(), T::zero(), T::zero());
    for m in 0..4 {
        let o: Vec<T> = (0..4).filter(|&j| j != m).map(|j| b[j]).collect();
        e1 = e1 + n[m] * (o[0] + o[1] + o[2]);
        e2 = e2 + n[m] * (o[0] * o[1] + o[0] * o[2] + o[1] * o[2]);
        e3 = e3 + n[m] * (o[0] * o[1] * o[2]);
    }
    let bb = -e1 / total;
    let cc = e2 / total;
    let dd = -e3 / total;
    let p = cc - bb * bb / three;
    let q = two * bb * bb * bb / T::lit(27.0) - bb * cc / three + dd;
    let shift = -bb / three;
    let mut r = if p < T::zero() {
        let m = two * (-p / three).sqrt();
        let arg = (three * q / (two * p) * (-three / p).sqrt())
            .max(-T::one())
            .min(T::one());
        let th = arg.acos() / three;
        let tau = two * T::PI() / three;
        [
            m * th.cos() + shift,
            m * (th - tau).cos() + shift,
            m * (th - two * tau).cos() + shift,
        ]
    } else {
        [shift; 3]
    };
    r.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    r.map(|t| mid + half * t)
}

/// Stable solution of d*e = prod, d - e = diff with d, e >= 0.
fn split_pair<T: Real>(diff: T, prod: T) -> (T, T) {
    let prod = prod.max(T::zero());
    let sq = (diff * diff + T::lit(4.0) * prod).sqrt();
    let two = T::lit(2.0);
    if diff >= T::zero() {
        let d = (diff + sq) / two;
        let e = if d > T::zero() { prod / d } else { T::zero() };
        (d, e)
    } else {
        let e = (-diff + sq) / two;
        let d = if e > T::zero() { prod / e } else { T::zero() };
        (d, e)
    }
}

/// Maps a Cartesian point to its 5-cyclidic coordinates.
pub fn to_cyclidic<T: Real>(p: Point3<T>, params: &Params<T>) -> CyclidicCoords<T> {
    let a = params.a();
    let (n, rho) = numerators(p);
    let lead = (rho + T::one()) * (rho + T::one());
    let mut s = trig_roots(&n, params);
    for i in 0..3 {
        s[i] = s[i].max(a[i]).min(a[i + 1]);
    }
    // Newton polish on the cubic expanded about the nearer endpoint.
    for i in 0..3 {
        let (lo, hi) = (a[i], a[i + 1]);
        let k = if s[i] - lo <= hi - s[i] { i } else { i + 1 };
        let c = local_cubic(&n, a, k);
        let mut u = s[i] - a[k];
        let (mut f, _) = horner(&c, u);
        for _ in 0..4 {
            let (fv, dv) = horner(&c, u);
            if dv == T::zero() || fv == T::zero() {
                break;
            }
            let un = u - fv / dv;
            if !(un + a[k] >= lo && un + a[k] <= hi) {
                break;
            }
            let (fnew, _) = horner(&c, un);
            if fnew.abs() > f.abs() {
                break;
            }
            u = un;
            f = fnew;
        }
        s[i] = (a[k] + u).max(lo).min(hi);
    }
    // Close pairs: refine from the exact sum and product identities.
    let tau = T::lit(0.25) * params.min_gap();
    let sum_roots = {
        let mut acc = T::zero();
        for m in 0..4 {
            let o: T = (0..4).filter(|&j| j != m).map(|j| a[j]).sum();
            acc = acc + n[m] * o;
        }
        acc / lead
    };
    if s[1] - s[0] < tau {
        let prod = n[1] * (a[1] - a[0]) * (a[2] - a[1]) * (a[3] - a[1]) / (lead * (s[2] - a[1]));
        let diff = sum_roots - s[2] - a[1] - a[1];
        let (d, e) = split_pair(diff, prod);
        s[0] = (a[1] - e).max(a[0]).min(a[1]);
        s[1] = (a[1] + d).max(a[1]).min(a[2]);
    } else if s[2] - s[1] < tau {
        let prod = n[2] * (a[2] - a[0]) * (a[2] - a[1]) * (a[3] - a[2]) / (lead * (a[2] - s[0]));
        let diff = sum_roots - s[0] - a[2] - a[2];
        let (d, e) = split_pair(diff, prod);
        s[1] = (a[2] - e).max(a[1]).min(a[2]);
        s[2] = (a[2] + d).max(a[2]).min(a[3]);
    }
    CyclidicCoords::from_array(s)
}

/// Residual of the cleared cubic at s, with the polynomial's natural scale.
pub fn cubic_residual<T: Real>(p: Point3<T>, s: T, params: &Params<T>) -> (T, T) {
    let a = params.a();
    let (n, _) = numerators(p);
    let mut v = T::zero();
    let mut scale = T::zero();
    for m in 0..4 {
        let mut t = n[m];
        let mut ts = n[m];
        for j in 0..4 {
            if j != m {
                t = t * (s - a[j]);
                ts = ts * ((s - a[j]).abs() + params.span());
            }
        }
        v = v + t;
        scale = scale + ts;
    }
    (v, scale)
}

/// The quadruple (x0, x1, x2, x3) with x0 signed by the inside flag and x1..x3 >= 0.
pub fn quadruple<T: Real>(c: &CyclidicCoords<T>, inside: bool, params: &Params<T>) -> [T; 4] {
    let a = params.a();
    let s = c.as_array();
    let mut x = [T::zero(); 4];
    for j in 0..4 {
        let mut num = T::one();
        for si in s {
            num = num * (si - a[j]);
        }
        let mut den = T::one();
        for i in 0..4 {
            if i != j {
                den = den * (a[i] - a[j]);
            }
        }
        x[j] = (num / den).max(T::zero()).sqrt();
    }
    if !inside {
        x[0] = -x[0];
    }
    x
}

/// Inverse map; selects the preimage given by the flags.
pub fn from_cyclidic<T: Real>(
    c: &CyclidicCoords<T>,
    flags: OctantFlags,
    params: &Params<T>,
) -> Result<Point3<T>> {
    if !c.is_interlaced(params) {
        return Err(Error::NotInterlaced(format!(
            "({}, {}, {})",
            c.s1, c.s2, c.s3
        )));
    }
    let mut x = quadruple(c, flags.inside, params);
    if !flags.inside && x[0] <= -T::one() + T::epsilon() {
        // the outside preimage is the point at infinity; the finite one is the origin
        x[0] = -x[0];
    }
    let den = T::one() + x[0];
    let sg = |v: i8| if v < 0 { -T::one() } else { T::one() };
    Ok(Point3::new(
        sg(flags.sign_x) * x[1] / den,
        sg(flags.sign_y) * x[2] / den,
        sg(flags.sign_z) * x[3] / den,
    ))
}

/// sigma_0 (inversion in the unit sphere) or a reflection sigma_1..sigma_3.
pub fn apply_symmetry<T: Real>(j: usize, p: Point3<T>) -> Result<Point3<T>> {
    match j {
        0 => {
            let r2 = p.norm_sq();
            if r2 == T::zero() {
                return Err(Error::Domain("inversion at the origin".into()));
            }
            Ok(p.scale(T::one() / r2))
        }
        1 => Ok(Point3::new(-p.x, p.y, p.z)),
        2 => Ok(Point3::new(p.x, -p.y, p.z)),
        3 => Ok(Point3::new(p.x, p.y, -p.z)),
        _ => Err(Error::Domain(format!("symmetry index {j} out of range"))),
    }
}

/// A point together with its coordinates and derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Located<T> {
    pub point: Point3<T>,
    pub coords: CyclidicCoords<T>,
    pub chi: [T; 4],
    /// squared norm
    pub rho: T,
}

impl<T: Real> Located<T> {
    /// Locates a Cartesian point; chi_j use product forms that keep full
    /// relative accuracy near their zero sets.
    pub fn from_point(p: Point3<T>, params: &Params<T>) -> Self {
        let c = to_cyclidic(p, params);
        let a = params.a();
        let (s1, s2, s3) = (c.s1, c.s2, c.s3);
        let rho = p.norm_sq();
        let two = T::lit(2.0);
        let q = T::one() + rho;
        let k0 = (a[1] - a[0]) * (a[2] - a[0]) * (a[3] - a[0]);
        let k1 = (a[1] - a[0]) * (a[2] - a[1]) * (a[3] - a[1]);
        let k2 = (a[2] - a[0]) * (a[2] - a[1]) * (a[3] - a[2]);
        let k3 = (a[3] - a[0]) * (a[3] - a[1]) * (a[3] - a[2]);
        let chi0 = (T::one() - rho) / q * (k0 / ((s2 - a[0]) * (s3 - a[0]))).sqrt();
        let chi1 = two * p.x / q * (k1 / (s3 - a[1])).sqrt();
        let chi2 = two * p.y / q * (k2 / (a[2] - s1)).sqrt();
        let chi3 = two * p.z / q * (k3 / ((a[3] - s1) * (a[3] - s2))).sqrt();
        Located {
            point: p,
            coords: c,
            chi: [chi0, chi1, chi2, chi3],
            rho,
        }
    }

    /// Builds the located point of a coordinate triple and a preimage choice.
    pub fn from_coords(
        c: CyclidicCoords<T>,
        flags: OctantFlags,
        params: &Params<T>,
    ) -> Result<Self> {
        let p = from_cyclidic(&c, flags, params)?;
        Ok(Located {
            point: p,
            coords: c,
            chi: chi_from_coords(&c, flags, params),
            rho: p.norm_sq(),
        })
    }
}

/// chi_j straight from the defining display, with signs taken from flags.
pub fn chi_from_coords<T: Real>(
    c: &CyclidicCoords<T>,
    flags: OctantFlags,
    params: &Params<T>,
) -> [T; 4] {
    let a = params.a();
    let sg = |v: i8| if v < 0 { -T::one() } else { T::one() };
    [
        if flags.inside { T::one() } else { -T::one() } * (c.s1 - a[0]).max(T::zero()).sqrt(),
        sg(flags.sign_x) * ((c.s2 - a[1]) * (a[1] - c.s1)).max(T::zero()).sqrt(),
        sg(flags.sign_y) * ((c.s3 - a[2]) * (a[2] - c.s2)).max(T::zero()).sqrt(),
        sg(flags.sign_z) * (a[3] - c.s3).max(T::zero()).sqrt(),
    ]
}

/// chi_j(p), j = 0..3.
pub fn chi<T: Real>(j: usize, p: Point3<T>, params: &Params<T>) -> T {
    Located::from_point(p, params).chi[j]
}

/// chi_j evaluated literally from the coordinates of p (reference form).
pub fn chi_direct<T: Real>(j: usize, p: Point3<T>, params: &Params<T>) -> T {
    let c = to_cyclidic(p, params);
    let a = params.a();
    match j {
        0 => sgn(T::one() - p.norm()) * (c.s1 - a[0]).sqrt(),
        1 => sgn(p.x) * ((c.s2 - a[1]) * (a[1] - c.s1)).sqrt(),
        2 => sgn(p.y) * ((c.s3 - a[2]) * (a[2] - c.s2)).sqrt(),
        3 => sgn(p.z) * (a[3] - c.s3).sqrt(),
        _ => panic!("chi index {j} out of range"),
    }
}

/// h_i = 1/|grad s_i| from the defining equation with d replaced by s_i(p).
pub fn scale_factor<T: Real>(i: usize, p: Point3<T>, params: &Params<T>) -> Result<T> {
    if !(1..=3).contains(&i) {
        return Err(Error::Domain(format!("coordinate index {i} out of range")));
    }
    let c = to_cyclidic(p, params);
    scale_factor_at(i, p, &c, params)
}

pub(crate) fn scale_factor_at<T: Real>(
    i: usize,
    p: Point3<T>,
    c: &CyclidicCoords<T>,
    params: &Params<T>,
) -> Result<T> {
    let a = params.a();
    let (n, _) = numerators(p);
    let si = c.get(i);
    let mut acc = T::zero();
    for k in 0..4 {
        let d = si - a[k];
        if d == T::zero() {
            if n[k] == T::zero() {
                return Err(Error::DegeneratePoint(format!(
                    "s{i} sits on a{k}; the scale factor is unbounded"
                )));
            }
            return Err(Error::DegeneratePoint(format!("s{i} = a{k}")));
        }
        acc = acc + n[k] / (d * d);
    }
    if acc < T::lit(1e-28) {
        return Err(Error::DegeneratePoint(format!("16 h^2 = {acc}")));
    }
    Ok(acc.sqrt() / T::lit(4.0))
}

/// omega(s) = |prod (s - a_j)|^(1/2).
pub fn omega<T: Real>(s: T, params: &Params<T>) -> T {
    let a = params.a();
    ((s - a[0]) * (s - a[1]) * (s - a[2]) * (s - a[3]))
        .abs()
        .sqrt()
}

/// Scale factor of coordinate i in terms of the coordinates themselves.
pub fn scale_factor_coords<T: Real>(
    i: usize,
    c: &CyclidicCoords<T>,
    inside: bool,
    params: &Params<T>,
) -> T {
    let x = quadruple(c, inside, params);
    let s = c.as_array();
    let mut prod = T::one();
    for m in 0..3 {
        if m != i - 1 {
            prod = prod * (s[i - 1] - s[m]);
        }
    }
    prod.abs().sqrt() / (T::lit(2.0) * (T::one() + x[0]) * omega(s[i - 1], params))
}

pub fn g1<T: Real>(y: T, z: T, params: &Params<T>) -> T {
    let a = params.a();
    let r = y * y + z * z - T::one();
    let four = T::lit(4.0);
    r * r / (a[1] - a[0]) + four * y * y / (a[1] - a[2]) + four * z * z / (a[1] - a[3])
}

pub fn g2<T: Real>(x: T, z: T, params: &Params<T>) -> T {
    let a = params.a();
    let r = x * x + z * z - T::one();
    let four = T::lit(4.0);
    r * r / (a[2] - a[0]) + four * x * x / (a[2] - a[1]) + four * z * z / (a[2] - a[3])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveSet {
    A1,
    A2,
}

impl std::str::FromStr for CurveSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A1" | "a1" => Ok(CurveSet::A1),
            "A2" | "a2" => Ok(CurveSet::A2),
            _ => Err(Error::Domain(format!("unknown curve set {s:?}"))),
        }
    }
}

/// Radii with (rho^2 - 1)^2 = k rho^2, outer first.
fn polar_roots<T: Real>(k: T) -> (T, T) {
    let k = k.max(T::zero());
    let four = T::lit(4.0);
    let half = T::lit(0.5);
    let (a, b) = (k.sqrt(), (k + four).sqrt());
    (half * (b + a), half * (b - a))
}

/// The two closed curves of A1 (x = 0, g1 = 0) or A2 (y = 0, g2 = 0) as
/// polylines with `segments` segments each; the first point is repeated at the end.
pub fn curve_polylines<T: Real>(
    set: CurveSet,
    segments: usize,
    params: &Params<T>,
) -> Result<Vec<Vec<Point3<T>>>> {
    if segments < 4 {
        return Err(Error::Domain(format!(
            "need at least 4 segments, got {segments}"
        )));
    }
    let a = params.a();
    let four = T::lit(4.0);
    let n = T::lit(segments as f64);
    match set {
        CurveSet::A1 => {
            let k = |phi: T| {
                let (c, s) = (phi.cos(), phi.sin());
                four * (a[1] - a[0]) * (c * c / (a[2] - a[1]) + s * s / (a[3] - a[1]))
            };
            let mut outer = Vec::with_capacity(segments + 1);
            let mut inner = Vec::with_capacity(segments + 1);
            for m in 0..=segments {
                let phi = T::lit(2.0) * T::PI() * T::lit((m % segments) as f64) / n;
                let (ro, ri) = polar_roots(k(phi));
                outer.push(Point3::new(T::zero(), ro * phi.cos(), ro * phi.sin()));
                inner.push(Point3::new(T::zero(), ri * phi.cos(), ri * phi.sin()));
            }
            Ok(vec![outer, inner])
        }
        CurveSet::A2 => {
            let k = |phi: T| {
                let (c, s) = (phi.cos(), phi.sin());
                four * (a[2] - a[0]) * (s * s / (a[3] - a[2]) - c * c / (a[2] - a[1]))
            };
            let phi0 = ((a[3] - a[2]) / (a[2] - a[1])).sqrt().atan();
            let width = T::PI() - T::lit(2.0) * phi0;
            let half = segments / 2;
            let mut upper = Vec::with_capacity(segments + 1);
            // phi - phi0 grows quadratically at the ends where both branches meet
            let at = |u: T| {
                let sn = (T::FRAC_PI_2() * u).sin();
                phi0 + width * sn * sn
            };
            for m in 0..=half {
                let phi = at(T::lit(m as f64) / T::lit(half as f64));
                let ro = polar_roots(k(phi)).0;
                upper.push(Point3::new(ro * phi.cos(), T::zero(), ro * phi.sin()));
            }
            let back = segments - half;
            for m in 1..=back {
                let phi = at(T::one() - T::lit(m as f64) / T::lit(back as f64));
                let ri = polar_roots(k(phi)).1;
                upper.push(Point3::new(ri * phi.cos(), T::zero(), ri * phi.sin()));
            }
            let last = upper.len() - 1;
            upper[last] = upper[0];
            let lower = upper.iter().map(|p| Point3::new(p.x, p.y, -p.z)).collect();
            Ok(vec![upper, lower])
        }
    }
}

/// Default boundary snapping tolerance.
pub fn default_region_tol<T: Real>(params: &Params<T>) -> T {
    T::lit(1e-9) * params.span()
}

pub fn classify_region<T: Real>(p: Point3<T>, params: &Params<T>, tol: T) -> RegionTags {
    let mut t = RegionTags {
        on_plane_x: p.x.abs() <= tol,
        on_plane_y: p.y.abs() <= tol,
        on_plane_z: p.z.abs() <= tol,
        on_unit_sphere: (p.norm() - T::one()).abs() <= tol,
        ..RegionTags::default()
    };
    if t.on_plane_x {
        let g = g1(p.y, p.z, params);
        let r2 = p.y * p.y + p.z * p.z;
        t.a1 = g.abs() <= tol;
        t.l1 = g <= tol;
        t.k1 = r2 < T::one() && g >= -tol;
        t.m1 = r2 > T::one() && g >= -tol;
    }
    if t.on_plane_y {
        let g = g2(p.x, p.z, params);
        t.a2 = g.abs() <= tol;
        t.l2 = g >= -tol;
        t.k2 = p.z > T::zero() && g <= tol;
        t.m2 = p.z < T::zero() && g <= tol;
    }
    t.r = p.x > tol && p.y > tol && p.z > tol && p.norm() < T::one() - tol;
    t
}

/// Free coordinates (j, k) of the surface s_i = d.
pub fn free_coords(i: usize) -> (usize, usize) {
    match i {
        1 => (2, 3),
        2 => (1, 3),
        3 => (1, 2),
        _ => panic!("coordinate index {i} out of range"),
    }
}

/// Whether a patch belongs to the closed surface used for kind i.
pub fn patch_allowed(i: usize, flags: OctantFlags) -> bool {
    match i {
        1 => flags.inside,
        2 => true,
        3 => flags.sign_z > 0,
        _ => false,
    }
}

/// The patch words of the surface s_i = d, in lexicographic order.
pub fn surface_patches(i: usize) -> Vec<OctantFlags> {
    OctantFlags::all()
        .into_iter()
        .filter(|f| patch_allowed(i, *f))
        .collect()
}

/// sqrt of |prod (s - a_l)| over the two singular points outside interval j.
fn outer_weight<T: Real>(j: usize, s: T, params: &Params<T>) -> T {
    let a = params.a();
    let mut r = T::one();
    for l in 0..4 {
        if l != j - 1 && l != j {
            r = r * (s - a[l]);
        }
    }
    r.abs().sqrt()
}

/// Coordinate triple and area element of the chart point (u, v) on s_i = d.
pub fn chart_coords<T: Real>(
    i: usize,
    d: T,
    u: T,
    v: T,
    inside: bool,
    params: &Params<T>,
) -> Result<(CyclidicCoords<T>, T)> {
    if !(1..=3).contains(&i) {
        return Err(Error::Domain(format!("coordinate index {i} out of range")));
    }
    let (lo, hi) = params.interval(i);
    if !(d > lo && d < hi) {
        return Err(Error::Domain(format!(
            "surface value {d} outside ({lo}, {hi})"
        )));
    }
    let (j, k) = free_coords(i);
    let half_pi = T::FRAC_PI_2();
    let sub = |m: usize, t: T| {
        let (l, h) = params.interval(m);
        let sn = (half_pi * t).sin();
        l + (h - l) * sn * sn
    };
    let mut s = [T::zero(); 3];
    s[i - 1] = d;
    s[j - 1] = sub(j, u);
    s[k - 1] = sub(k, v);
    let c = CyclidicCoords::from_array(s);
    let x = quadruple(&c, inside, params);
    let factor = |m: usize| {
        let mut prod = T::one();
        for l in 0..3 {
            if l != m - 1 {
                prod = prod * (s[m - 1] - s[l]);
            }
        }
        T::PI() * prod.abs().sqrt()
            / (T::lit(2.0) * (T::one() + x[0]) * outer_weight(m, s[m - 1], params))
    };
    Ok((c, factor(j) * factor(k)))
}

/// Chart of the coordinate surface s_i = d for quadrature and mesh export.
pub fn surface_chart<T: Real>(
    i: usize,
    d: T,
    u: T,
    v: T,
    flags: OctantFlags,
    params: &Params<T>,
) -> Result<(Point3<T>, T)> {
    if (1..=3).contains(&i) && !patch_allowed(i, flags) {
        return Err(Error::Domain(format!(
            "patch {flags:?} is not part of the surface s{i} = const"
        )));
    }
    let (c, area) = chart_coords(i, d, u, v, flags.inside, params)?;
    Ok((from_cyclidic(&c, flags, params)?, area))
}
