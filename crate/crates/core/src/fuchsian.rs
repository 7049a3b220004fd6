//! Solutions of the five-singularity Fuchsian equation
//!
//!   P(s) [w'' + 1/2 sum 1/(s - a_j) w'] + (3/16 s^2 + l1 s + l2) w = 0,
//!   P(s) = prod (s - a_j).
//!
//! Shooting runs in the variable theta with s = lo + (hi - lo) sin^2(theta),
//! in which the equation is regular on the closed interval. The state is
//! (w, v) with v = omega(s) dw/ds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{omega, Params};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LambdaPair<T> {
    pub lambda1: T,
    pub lambda2: T,
}

impl<T: Real> LambdaPair<T> {
    pub fn new(lambda1: T, lambda2: T) -> Self {
        LambdaPair { lambda1, lambda2 }
    }

    pub fn q(&self, s: T) -> T {
        T::lit(3.0 / 16.0) * s * s + self.lambda1 * s + self.lambda2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolutionState<T> {
    pub s: T,
    pub w: T,
    pub dw: T,
}

impl<T: Real> SolutionState<T> {
    pub fn new(s: T, w: T, dw: T) -> Self {
        SolutionState { s, w, dw }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionData<T> {
    pub a_coef: T,
    pub b_coef: T,
    pub c_coef: T,
}

/// Sign of P on interval i.
/// Sign of prod (s - a_j) on interval i; interval 4 is the ray (a3, inf).
pub fn interval_sign<T: Real>(i: usize) -> T {
    if i == 2 || i == 4 {
        T::one()
    } else {
        -T::one()
    }
}

fn check_interval(i: usize) -> Result<()> {
    if (1..=3).contains(&i) {
        Ok(())
    } else {
        Err(Error::Domain(format!("interval index {i} out of range")))
    }
}

pub fn ode_residual<T: Real>(
    s: T,
    w: T,
    dw: T,
    ddw: T,
    lam: &LambdaPair<T>,
    params: &Params<T>,
) -> Result<T> {
    let a = params.a();
    let mut p = T::one();
    let mut sum = T::zero();
    for &aj in a {
        let d = s - aj;
        if d == T::zero() {
            return Err(Error::SingularPoint(s.as_f64()));
        }
        p = p * d;
        sum = sum + T::one() / d;
    }
    Ok(p * (ddw + T::lit(0.5) * sum * dw) + lam.q(s) * w)
}

/// Coefficients of P(c + x) in ascending powers of x.
fn p_local<T: Real>(c: T, params: &Params<T>) -> [T; 5] {
    let mut out = [T::one(), T::zero(), T::zero(), T::zero(), T::zero()];
    for (deg, &aj) in params.a().iter().enumerate() {
        let d = c - aj;
        for m in (1..=deg + 1).rev() {
            out[m] = out[m - 1] + out[m] * d;
        }
        out[0] = out[0] * d;
    }
    out
}

fn q_local<T: Real>(c: T, lam: &LambdaPair<T>) -> [T; 3] {
    [
        lam.q(c),
        T::lit(3.0 / 8.0) * c + lam.lambda1,
        T::lit(3.0 / 16.0),
    ]
}

const TAIL_TOL: f64 = 1e-17;
const MAX_TERMS: usize = 200;

/// Whether the last three terms are negligible against the largest one.
fn tail_ok<T: Real>(c: &[T], r: T) -> bool {
    let k = c.len();
    if k < 4 {
        return false;
    }
    let mut big = T::zero();
    let mut rk = T::one();
    let mut tail = T::zero();
    for (i, &ci) in c.iter().enumerate() {
        let t = ci.abs() * rk;
        big = big.max(t);
        if i + 3 >= k {
            tail = tail.max(t);
        }
        rk = rk * r;
    }
    tail <= T::lit(TAIL_TOL).max(T::epsilon() * T::epsilon()) * big || big == T::zero()
}

/// Frobenius solution |s - a_j|^(parity/2) sum c_k (s - a_j)^k, c_0 = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSolution<T> {
    pub center: usize,
    pub parity: u8,
    pub coeffs: Vec<T>,
    pub trust_radius: T,
    a_center: T,
}

pub fn frobenius_series<T: Real>(
    j: usize,
    parity: u8,
    lam: &LambdaPair<T>,
    params: &Params<T>,
    k: usize,
) -> Result<SeriesSolution<T>> {
    if j > 3 {
        return Err(Error::Domain(format!("singularity index {j} out of range")));
    }
    if parity > 1 {
        return Err(Error::Domain(format!("parity {parity} must be 0 or 1")));
    }
    let a = params.a();
    let c = a[j];
    let mut dmin = T::infinity();
    for (m, &am) in a.iter().enumerate() {
        if m != j {
            dmin = dmin.min((am - c).abs());
        }
    }
    let trust = T::lit(0.25) * dmin;
    let p = p_local(c, params);
    let q = q_local(c, lam);
    let rho = T::lit(0.5) * T::lit(parity as f64);
    let half = T::lit(0.5);
    let mut coeffs = vec![T::one()];
    let kmin = k.max(8);
    let mut n = 1;
    loop {
        let nf = T::lit(n as f64);
        let mut acc = T::zero();
        for m in 2..=4usize {
            if n + 1 >= m {
                let idx = n + 1 - m;
                let mf = T::lit(m as f64);
                acc =
                    acc + p[m] * (nf + T::one() - mf + rho) * (nf + rho - mf * half) * coeffs[idx];
            }
        }
        for m in 0..=2usize {
            if n > m {
                acc = acc + q[m] * coeffs[n - 1 - m];
            }
        }
        let ind = p[1] * (nf + rho) * (nf + rho - half);
        if ind.abs() <= T::epsilon() * p[1].abs() {
            return Err(Error::RecurrenceBreakdown(n));
        }
        coeffs.push(-acc / ind);
        n += 1;
        if (n > kmin && tail_ok(&coeffs, trust)) || n > MAX_TERMS {
            break;
        }
    }
    Ok(SeriesSolution {
        center: j,
        parity,
        coeffs,
        trust_radius: trust,
        a_center: c,
    })
}

impl<T: Real> SeriesSolution<T> {
    pub fn a_center(&self) -> T {
        self.a_center
    }

    /// Analytic factor f(x) and f'(x) at x = s - a_center.
    pub fn analytic_part(&self, x: T) -> (T, T) {
        let mut f = T::zero();
        let mut df = T::zero();
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            df = df * x + f;
            f = f * x + c;
            let _ = k;
        }
        (f, df)
    }

    /// w and dw/ds at x = s - a_center (no trust check).
    fn eval_x(&self, x: T) -> (T, T) {
        let (f, df) = self.analytic_part(x);
        if self.parity == 0 {
            (f, df)
        } else {
            let ax = x.abs();
            let r = ax.sqrt();
            if ax == T::zero() {
                // derivative is unbounded at the singular point
                return (T::zero(), T::infinity());
            }
            let w = r * f;
            (w, r * df + T::lit(0.5) * w / x)
        }
    }

    /// omega * dw/ds with the singular factor resolved analytically.
    /// side is +1 when the solution lives on s > a_center and -1 otherwise.
    fn weighted_derivative(&self, x: T, side: T, params: &Params<T>) -> T {
        let s = self.a_center + x;
        let (f, df) = self.analytic_part(x);
        if self.parity == 0 {
            return omega(s, params) * df;
        }
        // omega = |x|^(1/2) * rest, so omega dw = rest * (|x| df + f/2 * sgn(x))
        let a = params.a();
        let mut rest = T::one();
        for (m, &am) in a.iter().enumerate() {
            if m != self.center {
                rest = rest * (s - am);
            }
        }
        let rest = rest.abs().sqrt();
        rest * (x.abs() * df + T::lit(0.5) * f * side)
    }
}

pub fn eval_series<T: Real>(
    sol: &SeriesSolution<T>,
    s: T,
    _params: &Params<T>,
) -> Result<SolutionState<T>> {
    let x = s - sol.a_center;
    if x.abs() > sol.trust_radius * (T::one() + T::lit(8.0) * T::epsilon()) {
        return Err(Error::OutOfTrustRadius {
            center: sol.center,
            s: s.as_f64(),
            radius: sol.trust_radius.as_f64(),
        });
    }
    let (w, dw) = sol.eval_x(x);
    Ok(SolutionState::new(s, w, dw))
}

/// Taylor expansion of a solution about an ordinary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorNode<T> {
    pub center: T,
    pub coeffs: Vec<T>,
}

impl<T: Real> TaylorNode<T> {
    pub fn build(
        center: T,
        w: T,
        dw: T,
        lam: &LambdaPair<T>,
        params: &Params<T>,
        radius: T,
    ) -> Self {
        let p = p_local(center, params);
        let q = q_local(center, lam);
        let half = T::lit(0.5);
        let mut c = vec![w, dw];
        let mut n = 0usize;
        loop {
            let nf = T::lit(n as f64);
            let mut acc = T::zero();
            for m in 1..=4usize {
                if n + 2 >= m {
                    let mf = T::lit(m as f64);
                    let k = n + 2 - m;
                    acc = acc + p[m] * (nf + T::lit(2.0) - mf) * (nf + T::one() - mf * half) * c[k];
                }
            }
            for m in 0..=2usize {
                if n >= m {
                    acc = acc + q[m] * c[n - m];
                }
            }
            c.push(-acc / (p[0] * (nf + T::lit(2.0)) * (nf + T::one())));
            n += 1;
            if (c.len() > 10 && tail_ok(&c, radius)) || c.len() > MAX_TERMS {
                break;
            }
        }
        TaylorNode { center, coeffs: c }
    }

    pub fn eval(&self, s: T) -> (T, T) {
        let x = s - self.center;
        let mut f = T::zero();
        let mut df = T::zero();
        for &c in self.coeffs.iter().rev() {
            df = df * x + f;
            f = f * x + c;
        }
        (f, df)
    }

    fn scaled(&self, k: T) -> Self {
        TaylorNode {
            center: self.center,
            coeffs: self.coeffs.iter().map(|&c| c * k).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Shooting in theta

/// Fehlberg 7(8) tableau.
struct Rkf78<T> {
    c: [T; 13],
    a: Vec<Vec<T>>,
    b: [T; 13],
    e: T,
}

impl<T: Real> Rkf78<T> {
    fn new() -> Self {
        let f = |x: f64| T::lit(x);
        let c = [
            0.0,
            2.0 / 27.0,
            1.0 / 9.0,
            1.0 / 6.0,
            5.0 / 12.0,
            1.0 / 2.0,
            5.0 / 6.0,
            1.0 / 6.0,
            2.0 / 3.0,
            1.0 / 3.0,
            1.0,
            0.0,
            1.0,
        ]
        .map(f);
        let rows: [&[f64]; 13] = [
            &[],
            &[2.0 / 27.0],
            &[1.0 / 36.0, 1.0 / 12.0],
            &[1.0 / 24.0, 0.0, 1.0 / 8.0],
            &[5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0],
            &[1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0],
            &[
                -25.0 / 108.0,
                0.0,
                0.0,
                125.0 / 108.0,
                -65.0 / 27.0,
                125.0 / 54.0,
            ],
            &[
                31.0 / 300.0,
                0.0,
                0.0,
                0.0,
                61.0 / 225.0,
                -2.0 / 9.0,
                13.0 / 900.0,
            ],
            &[
                2.0,
                0.0,
                0.0,
                -53.0 / 6.0,
                704.0 / 45.0,
                -107.0 / 9.0,
                67.0 / 90.0,
                3.0,
            ],
            &[
                -91.0 / 108.0,
                0.0,
                0.0,
                23.0 / 108.0,
                -976.0 / 135.0,
                311.0 / 54.0,
                -19.0 / 60.0,
                17.0 / 6.0,
                -1.0 / 12.0,
            ],
            &[
                2383.0 / 4100.0,
                0.0,
                0.0,
                -341.0 / 164.0,
                4496.0 / 1025.0,
                -301.0 / 82.0,
                2133.0 / 4100.0,
                45.0 / 82.0,
                45.0 / 164.0,
                18.0 / 41.0,
            ],
            &[
                3.0 / 205.0,
                0.0,
                0.0,
                0.0,
                0.0,
                -6.0 / 41.0,
                -3.0 / 205.0,
                -3.0 / 41.0,
                3.0 / 41.0,
                6.0 / 41.0,
                0.0,
            ],
            &[
                -1777.0 / 4100.0,
                0.0,
                0.0,
                -341.0 / 164.0,
                4496.0 / 1025.0,
                -289.0 / 82.0,
                2193.0 / 4100.0,
                51.0 / 82.0,
                33.0 / 164.0,
                12.0 / 41.0,
                0.0,
                1.0,
            ],
        ];
        let a = rows
            .iter()
            .map(|r| r.iter().map(|&x| f(x)).collect())
            .collect();
        // eighth-order weights; the error estimate is their difference from the seventh-order ones
        let b = [
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            34.0 / 105.0,
            9.0 / 35.0,
            9.0 / 35.0,
            9.0 / 280.0,
            9.0 / 280.0,
            0.0,
            41.0 / 840.0,
            41.0 / 840.0,
        ]
        .map(f);
        Rkf78 {
            c,
            a,
            b,
            e: f(41.0 / 840.0),
        }
    }
}

/// The first-order system on one interval in the theta variable.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ThetaSystem<T> {
    pub interval: usize,
    pub lo: T,
    pub hi: T,
    sigma: T,
    outer: [T; 2],
    /// ray only: the remaining finite singular point and the map scale
    third: T,
    kappa: T,
    lam: LambdaPair<T>,
}

impl<T: Real> ThetaSystem<T> {
    pub fn new(interval: usize, lam: &LambdaPair<T>, params: &Params<T>) -> Self {
        let a = params.a();
        if interval == 4 {
            return ThetaSystem {
                interval,
                lo: a[3],
                hi: T::infinity(),
                sigma: interval_sign(4),
                outer: [a[0], a[1]],
                third: a[2],
                kappa: params.span(),
                lam: *lam,
            };
        }
        let (lo, hi) = params.interval(interval);
        let outer: Vec<T> = (0..4)
            .filter(|&l| l != interval - 1 && l != interval)
            .map(|l| a[l])
            .collect();
        ThetaSystem {
            interval,
            lo,
            hi,
            sigma: interval_sign(interval),
            outer: [outer[0], outer[1]],
            third: T::zero(),
            kappa: T::one(),
            lam: *lam,
        }
    }

    pub fn s_of(&self, th: T) -> T {
        if self.interval == 4 {
            let t = th.tan();
            return self.lo + self.kappa * t * t;
        }
        let sn = th.sin();
        self.lo + (self.hi - self.lo) * sn * sn
    }

    pub fn theta_of(&self, s: T) -> T {
        if self.interval == 4 {
            return ((s - self.lo).max(T::zero()) / self.kappa).sqrt().atan();
        }
        let r = ((s - self.lo) / (self.hi - self.lo))
            .max(T::zero())
            .min(T::one());
        r.sqrt().asin()
    }

    fn r_of(&self, s: T) -> T {
        ((s - self.outer[0]) * (s - self.outer[1])).abs().sqrt()
    }

    /// (a, b) with dw/dtheta = a v and dv/dtheta = b w.
    #[inline]
    fn coeff(&self, th: T) -> (T, T) {
        let s = self.s_of(th);
        let k = if self.interval == 4 {
            let c = th.cos();
            let p3 = (s - self.outer[0]) * (s - self.outer[1]) * (s - self.third);
            T::lit(2.0) * self.kappa.sqrt() / (c * c * p3.abs().sqrt())
        } else {
            T::lit(2.0) / self.r_of(s)
        };
        (k, -self.sigma * self.lam.q(s) * k)
    }

    /// Total length of the interval in the Liouville variable.
    pub fn liouville_length(&self) -> T {
        let n = 64;
        let h = T::FRAC_PI_2() / T::lit(n as f64);
        let mut acc = T::zero();
        for i in 0..=n {
            let w = if i == 0 || i == n {
                T::one()
            } else if i % 2 == 1 {
                T::lit(4.0)
            } else {
                T::lit(2.0)
            };
            acc = acc + w * self.coeff(T::lit(i as f64) * h).0;
        }
        acc * h / T::lit(3.0)
    }

    /// Initial (w, v) of the normalized Frobenius solution at the left (right) end.
    pub fn end_state(&self, right: bool, parity: u8, params: &Params<T>) -> (T, T) {
        if parity == 0 {
            (T::one(), T::zero())
        } else {
            let j = if right {
                self.interval
            } else {
                self.interval - 1
            };
            let v = T::lit(0.5) * params.p1(j).abs().sqrt();
            (T::zero(), if right { -v } else { v })
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Shot<T> {
    pub w: T,
    pub v: T,
    /// natural log of the accumulated renormalization factor
    pub log_scale: T,
    pub zeros: usize,
}

const RENORM: f64 = 1e100;

/// Integrates the theta system from th0 to th1 counting sign changes of w.
pub(crate) fn shoot<T: Real>(
    sys: &ThetaSystem<T>,
    th0: T,
    y0: (T, T),
    th1: T,
    tol: T,
    endpoint_zero: bool,
) -> Result<Shot<T>> {
    let (mut w, mut v) = y0;
    let mut out = Shot {
        w,
        v,
        log_scale: T::zero(),
        zeros: 0,
    };
    if (w == T::zero() && v == T::zero()) || th0 == th1 {
        return Ok(out);
    }
    let tab = Rkf78::<T>::new();
    let tol = tol.max(T::lit(100.0) * T::epsilon());
    let span = th1 - th0;
    let dir = if span > T::zero() {
        T::one()
    } else {
        -T::one()
    };
    let hmax = |th: T| {
        let (a, b) = sys.coeff(th);
        let f = (a * b).abs().sqrt();
        T::lit(0.15).min(T::lit(0.5) / f.max(T::lit(1e-30)))
    };
    let hmin = T::lit(1e-13) * T::FRAC_PI_2();
    let mut th = th0;
    let mut h = hmax(th).min(span.abs() / T::lit(8.0));
    let mut last_sign = if w == T::zero() {
        0
    } else if w > T::zero() {
        1
    } else {
        -1
    };
    let mut log_scale = T::zero();
    let mut kw = [T::zero(); 13];
    let mut kv = [T::zero(); 13];
    let mut pending_change = false;
    loop {
        let rem = (th1 - th) * dir;
        if rem <= T::zero() {
            break;
        }
        let last = h >= rem;
        let hs = if last { rem } else { h } * dir;
        for st in 0..13 {
            let mut yw = w;
            let mut yv = v;
            for (m, &am) in tab.a[st].iter().enumerate() {
                if am != T::zero() {
                    yw = yw + hs * am * kw[m];
                    yv = yv + hs * am * kv[m];
                }
            }
            let (ca, cb) = sys.coeff(th + tab.c[st] * hs);
            kw[st] = ca * yv;
            kv[st] = cb * yw;
        }
        let mut nw = w;
        let mut nv = v;
        for st in 0..13 {
            if tab.b[st] != T::zero() {
                nw = nw + hs * tab.b[st] * kw[st];
                nv = nv + hs * tab.b[st] * kv[st];
            }
        }
        let ew = (tab.e * hs * (kw[0] + kw[10] - kw[11] - kw[12])).abs();
        let ev = (tab.e * hs * (kv[0] + kv[10] - kv[11] - kv[12])).abs();
        let err = ew.max(ev);
        let sc = w.abs().max(v.abs()).max(nw.abs()).max(nv.abs());
        let allowed = tol * sc;
        if err <= allowed || hs.abs() <= hmin {
            if err > allowed && hs.abs() <= hmin && !last {
                return Err(Error::StepUnderflow(sys.s_of(th).as_f64()));
            }
            th = if last { th1 } else { th + hs };
            w = nw;
            v = nv;
            let sg = if w == T::zero() {
                0
            } else if w > T::zero() {
                1
            } else {
                -1
            };
            if sg != 0 {
                if last_sign != 0 && sg != last_sign {
                    out.zeros += 1;
                    pending_change = last;
                }
                last_sign = sg;
            }
            let m = w.abs().max(v.abs());
            if m > T::lit(RENORM) {
                w = w / m;
                v = v / m;
                log_scale = log_scale + m.ln();
            }
            let fac = if err == T::zero() {
                T::lit(4.0)
            } else {
                (T::lit(0.9) * (allowed / err).powf(T::lit(0.125)))
                    .max(T::lit(0.2))
                    .min(T::lit(4.0))
            };
            h = (h * fac).min(hmax(th));
            if last {
                break;
            }
        } else {
            let fac = (T::lit(0.9) * (allowed / err).powf(T::lit(0.125))).max(T::lit(0.1));
            h = (h * fac.min(T::lit(0.9))).max(hmin);
        }
    }
    if endpoint_zero && pending_change {
        out.zeros -= 1;
    }
    out.w = w;
    out.v = v;
    out.log_scale = log_scale;
    Ok(out)
}

/// Default integrator tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Carries a state to s_target within one of the intervals or along the ray s > a3.
pub fn propagate<T: Real>(
    state: SolutionState<T>,
    s_target: T,
    lam: &LambdaPair<T>,
    params: &Params<T>,
    tol: T,
) -> Result<SolutionState<T>> {
    let a = params.a();
    let inside = |i: usize, s: T| s > a[i - 1] && (i == 4 || s < a[i]);
    let i = (1..=4)
        .find(|&i| inside(i, state.s))
        .ok_or_else(|| Error::Domain(format!("s = {} is not inside an interval", state.s)))?;
    if !inside(i, s_target) || !s_target.is_finite() {
        return Err(Error::Domain(format!(
            "target {s_target} is not in the interval of {}",
            state.s
        )));
    }
    let sys = ThetaSystem::new(i, lam, params);
    let v0 = omega(state.s, params) * state.dw;
    let shot = shoot(
        &sys,
        sys.theta_of(state.s),
        (state.w, v0),
        sys.theta_of(s_target),
        tol,
        false,
    )?;
    let k = shot.log_scale.exp();
    let w = shot.w * k;
    let dw = shot.v * k / omega(s_target, params);
    Ok(SolutionState::new(s_target, w, dw))
}

pub fn wronskian_weight<T: Real>(s: T, params: &Params<T>) -> T {
    omega(s, params)
}

pub fn wronskian_mod<T: Real>(
    u: &SolutionState<T>,
    v: &SolutionState<T>,
    params: &Params<T>,
) -> Result<T> {
    if u.s != v.s {
        return Err(Error::MismatchedAbscissae(u.s.as_f64(), v.s.as_f64()));
    }
    Ok(omega(u.s, params) * (u.w * v.dw - v.w * u.dw))
}

/// Matching data of the two end-launched Frobenius solutions at an interior point.
#[derive(Debug, Clone, Copy)]
pub struct PhaseMatch<T> {
    /// Phase difference divided by pi; equals the zero count at an eigenvalue.
    pub index: T,
    /// Modified Wronskian of the raw solutions (c_0 = 1 normalization).
    pub mismatch: T,
    /// Mismatch divided by the norms of both states.
    pub normalized: T,
    pub zeros: [usize; 2],
}

pub fn phase_match<T: Real>(
    interval: usize,
    lam: &LambdaPair<T>,
    parity_left: u8,
    parity_right: u8,
    params: &Params<T>,
    frac: T,
) -> Result<PhaseMatch<T>> {
    check_interval(interval)?;
    let sys = ThetaSystem::new(interval, lam, params);
    let sm = sys.lo + (sys.hi - sys.lo) * frac;
    let tm = sys.theta_of(sm);
    let tol = T::lit(DEFAULT_TOL);
    let l = shoot(
        &sys,
        T::zero(),
        sys.end_state(false, parity_left, params),
        tm,
        tol,
        false,
    )?;
    let r = shoot(
        &sys,
        T::FRAC_PI_2(),
        sys.end_state(true, parity_right, params),
        tm,
        tol,
        false,
    )?;
    let pi = T::PI();
    let mut al = l.w.atan2(l.v);
    if al <= T::zero() {
        al = al + pi;
    }
    let mut ar = r.w.atan2(r.v);
    if ar < T::zero() {
        ar = ar + pi;
    }
    if ar >= pi {
        ar = ar - pi;
    }
    let d = T::lit((l.zeros + r.zeros) as f64) + (al - ar) / pi;
    let raw = l.w * r.v - r.w * l.v;
    let nl = (l.w * l.w + l.v * l.v).sqrt();
    let nr = (r.w * r.w + r.v * r.v).sqrt();
    Ok(PhaseMatch {
        index: d,
        mismatch: raw * (l.log_scale + r.log_scale).exp(),
        normalized: raw / (nl * nr),
        zeros: [l.zeros, r.zeros],
    })
}

pub fn endpoint_mismatch<T: Real>(
    interval: usize,
    lam: &LambdaPair<T>,
    parity_left: u8,
    parity_right: u8,
    params: &Params<T>,
) -> Result<T> {
    Ok(phase_match(
        interval,
        lam,
        parity_left,
        parity_right,
        params,
        T::lit(0.5),
    )?
    .mismatch)
}

/// Interior zeros of the doubly Frobenius solution at an eigenvalue.
///
/// Shoots inward from both ends and counts sign changes on each side of a split where
/// both pieces are well away from zero, so neither shot crosses the region where the
/// wanted solution is recessive.
pub fn count_zeros<T: Real>(
    interval: usize,
    lam: &LambdaPair<T>,
    parity_left: u8,
    parity_right: u8,
    params: &Params<T>,
) -> Result<usize> {
    check_interval(interval)?;
    let sys = ThetaSystem::new(interval, lam, params);
    let tol = T::lit(DEFAULT_TOL);
    let mut best: Option<(T, usize)> = None;
    for f in [0.5, 0.42, 0.58, 0.35, 0.65, 0.25, 0.75] {
        let tm = sys.theta_of(sys.lo + (sys.hi - sys.lo) * T::lit(f));
        let l = shoot(
            &sys,
            T::zero(),
            sys.end_state(false, parity_left, params),
            tm,
            tol,
            false,
        )?;
        let r = shoot(
            &sys,
            T::FRAC_PI_2(),
            sys.end_state(true, parity_right, params),
            tm,
            tol,
            false,
        )?;
        let ql = l.w.abs() / (l.w * l.w + l.v * l.v).sqrt();
        let qr = r.w.abs() / (r.w * r.w + r.v * r.v).sqrt();
        let q = ql.min(qr);
        if q >= T::lit(0.3) {
            return Ok(l.zeros + r.zeros);
        }
        if best.is_none_or(|(bq, _)| q > bq) {
            best = Some((q, l.zeros + r.zeros));
        }
    }
    Ok(best.unwrap().1)
}

// ---------------------------------------------------------------------------
// Dense representation on one interval

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor<T> {
    /// Frobenius solutions of exponents 0 and 1/2 at the endpoint.
    pub series: [SeriesSolution<T>; 2],
    /// w = coef[0] * F0 + coef[1] * F1 near the endpoint.
    pub coef: [T; 2],
}

impl<T: Real> Anchor<T> {
    fn new(j: usize, lam: &LambdaPair<T>, params: &Params<T>, coef: [T; 2]) -> Result<Self> {
        Ok(Anchor {
            series: [
                frobenius_series(j, 0, lam, params, 8)?,
                frobenius_series(j, 1, lam, params, 8)?,
            ],
            coef,
        })
    }

    fn radius(&self) -> T {
        self.series[0].trust_radius
    }

    fn eval(&self, s: T) -> (T, T) {
        let x = s - self.series[0].a_center;
        let mut w = T::zero();
        let mut dw = T::zero();
        for k in 0..2 {
            if self.coef[k] != T::zero() {
                let (a, b) = self.series[k].eval_x(x);
                w = w + self.coef[k] * a;
                dw = dw + self.coef[k] * b;
            }
        }
        (w, dw)
    }

    fn weighted_derivative(&self, s: T, right: bool, params: &Params<T>) -> T {
        let x = s - self.series[0].a_center;
        let side = if right { -T::one() } else { T::one() };
        let mut v = T::zero();
        for k in 0..2 {
            if self.coef[k] != T::zero() {
                v = v + self.coef[k] * self.series[k].weighted_derivative(x, side, params);
            }
        }
        v
    }

    /// w / |x|^(p/2) with the endpoint factor removed term by term.
    fn reduced(&self, s: T, p: u8) -> T {
        let x = s - self.series[0].a_center;
        let ax = x.abs();
        let mut out = T::zero();
        for k in 0..2u8 {
            let c = self.coef[k as usize];
            if c == T::zero() {
                continue;
            }
            let (f, _) = self.series[k as usize].analytic_part(x);
            let e = T::lit(0.5) * (T::lit(k as f64) - T::lit(p as f64));
            let fac = if e == T::zero() { T::one() } else { ax.powf(e) };
            out = out + c * f * fac;
        }
        out
    }

    /// Decomposes a state at s into the two Frobenius solutions.
    fn decompose(&mut self, st: &SolutionState<T>) {
        let x = st.s - self.series[0].a_center;
        let (f0, d0) = self.series[0].eval_x(x);
        let (f1, d1) = self.series[1].eval_x(x);
        let det = f0 * d1 - f1 * d0;
        self.coef = [
            (st.w * d1 - f1 * st.dw) / det,
            (f0 * st.dw - st.w * d0) / det,
        ];
    }
}

/// Which end(s) a separated solution is Frobenius at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Launch {
    Left(u8),
    Right(u8),
    Both(u8, u8),
}

/// A solution on one interval: series anchors at both ends joined by a chain
/// of Taylor expansions obtained by analytic continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatedSolution<T> {
    pub interval: usize,
    pub launch: Launch,
    pub lam: LambdaPair<T>,
    lo: T,
    hi: T,
    left: Anchor<T>,
    right: Anchor<T>,
    left_nodes: Vec<TaylorNode<T>>,
    right_nodes: Vec<TaylorNode<T>>,
    split: T,
    /// relative derivative jump at the split for doubly-Frobenius solutions
    pub glue_defect: T,
}

fn chain<T: Real>(
    start: T,
    w: T,
    dw: T,
    stop: T,
    lam: &LambdaPair<T>,
    params: &Params<T>,
) -> Vec<TaylorNode<T>> {
    let a = params.a();
    let dist = |c: T| a.iter().fold(T::infinity(), |m, &aj| m.min((c - aj).abs()));
    let dir = if stop > start { T::one() } else { -T::one() };
    let mut nodes = Vec::new();
    let mut c = start;
    let mut node = TaylorNode::build(c, w, dw, lam, params, dist(c) / T::lit(3.0));
    loop {
        let done = (stop - c) * dir <= T::zero();
        let step = T::lit(0.25) * dist(c);
        let next = if (stop - c) * dir <= step {
            stop
        } else {
            c + dir * step
        };
        nodes.push(node);
        if done {
            break;
        }
        let (nw, ndw) = nodes.last().unwrap().eval(next);
        c = next;
        node = TaylorNode::build(c, nw, ndw, lam, params, dist(c) / T::lit(3.0));
    }
    nodes.sort_by(|x, y| x.center.partial_cmp(&y.center).unwrap());
    nodes
}

fn nearest<T: Real>(nodes: &[TaylorNode<T>], s: T) -> &TaylorNode<T> {
    let idx = nodes.partition_point(|n| n.center < s);
    if idx == 0 {
        &nodes[0]
    } else if idx == nodes.len() || (s - nodes[idx - 1].center) <= (nodes[idx].center - s) {
        &nodes[idx - 1]
    } else {
        &nodes[idx]
    }
}

impl<T: Real> SeparatedSolution<T> {
    pub fn build(
        interval: usize,
        launch: Launch,
        lam: &LambdaPair<T>,
        params: &Params<T>,
    ) -> Result<Self> {
        check_interval(interval)?;
        let (lo, hi) = params.interval(interval);
        let unit = |p: u8| {
            if p == 0 {
                [T::one(), T::zero()]
            } else {
                [T::zero(), T::one()]
            }
        };
        let zero = [T::zero(), T::zero()];
        let (lc, rc) = match launch {
            Launch::Left(p) => (unit(p), zero),
            Launch::Right(p) => (zero, unit(p)),
            Launch::Both(p, q) => (unit(p), unit(q)),
        };
        let mut left = Anchor::new(interval - 1, lam, params, lc)?;
        let mut right = Anchor::new(interval, lam, params, rc)?;
        let l_edge = lo + left.radius();
        let r_edge = hi - right.radius();
        let mut out = SeparatedSolution {
            interval,
            launch,
            lam: *lam,
            lo,
            hi,
            left: left.clone(),
            right: right.clone(),
            left_nodes: Vec::new(),
            right_nodes: Vec::new(),
            split: T::zero(),
            glue_defect: T::zero(),
        };
        match launch {
            Launch::Left(_) => {
                let (w, dw) = left.eval(l_edge);
                let nodes = chain(l_edge, w, dw, r_edge, lam, params);
                let (ew, edw) = nearest(&nodes, r_edge).eval(r_edge);
                right.decompose(&SolutionState::new(r_edge, ew, edw));
                out.left_nodes = nodes;
                out.split = r_edge;
            }
            Launch::Right(_) => {
                let (w, dw) = right.eval(r_edge);
                let nodes = chain(r_edge, w, dw, l_edge, lam, params);
                let (ew, edw) = nearest(&nodes, l_edge).eval(l_edge);
                left.decompose(&SolutionState::new(l_edge, ew, edw));
                out.right_nodes = nodes;
                out.split = l_edge;
            }
            Launch::Both(_, _) => {
                let len = hi - lo;
                let fr = [0.5, 0.42, 0.58, 0.35, 0.65];
                let s_lo = lo + len * T::lit(0.35);
                let s_hi = lo + len * T::lit(0.65);
                let (w, dw) = left.eval(l_edge);
                let ln = chain(l_edge, w, dw, s_hi.max(l_edge), lam, params);
                let (w, dw) = right.eval(r_edge);
                let rn = chain(r_edge, w, dw, s_lo.min(r_edge), lam, params);
                let mut best: Option<(T, T, T)> = None;
                for f in fr {
                    let sp = lo + len * T::lit(f);
                    let (wl, dl) = nearest(&ln, sp).eval(sp);
                    let (wr, dr) = nearest(&rn, sp).eval(sp);
                    let om = omega(sp, params);
                    let nr = (wr * wr + om * om * dr * dr).sqrt();
                    let ratio = wr.abs() / nr;
                    let better = match best {
                        None => true,
                        Some((_, _, r)) => ratio > r,
                    };
                    if better {
                        best = Some((sp, wl / wr, ratio));
                    }
                    let _ = dl;
                    if ratio >= T::lit(0.3) {
                        break;
                    }
                }
                let (sp, kappa, _) = best.unwrap();
                let (_, dl) = nearest(&ln, sp).eval(sp);
                let (_, dr) = nearest(&rn, sp).eval(sp);
                let om = omega(sp, params);
                let (wl, _) = nearest(&ln, sp).eval(sp);
                let nl = (wl * wl + om * om * dl * dl).sqrt();
                out.glue_defect = (om * (dl - kappa * dr)).abs() / nl;
                right.coef = [right.coef[0] * kappa, right.coef[1] * kappa];
                out.left_nodes = ln;
                out.right_nodes = rn.iter().map(|n| n.scaled(kappa)).collect();
                out.split = sp;
            }
        }
        out.left = left;
        out.right = right;
        Ok(out)
    }

    pub fn bounds(&self) -> (T, T) {
        (self.lo, self.hi)
    }

    /// Frobenius coefficients at the left and right ends.
    pub fn end_coefficients(&self) -> ([T; 2], [T; 2]) {
        (self.left.coef, self.right.coef)
    }

    pub fn scaled(&self, k: T) -> Self {
        let mut o = self.clone();
        o.left.coef = [o.left.coef[0] * k, o.left.coef[1] * k];
        o.right.coef = [o.right.coef[0] * k, o.right.coef[1] * k];
        o.left_nodes = o.left_nodes.iter().map(|n| n.scaled(k)).collect();
        o.right_nodes = o.right_nodes.iter().map(|n| n.scaled(k)).collect();
        o
    }

    fn in_range(&self, s: T) -> Result<()> {
        if s >= self.lo && s <= self.hi {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "s = {s} outside [{}, {}]",
                self.lo, self.hi
            )))
        }
    }

    /// Which piece serves s: 0 left anchor, 1 left chain, 2 right chain, 3 right anchor.
    fn piece(&self, s: T) -> usize {
        if s <= self.split {
            if s - self.lo <= self.left.radius() || self.left_nodes.is_empty() {
                0
            } else {
                1
            }
        } else if self.hi - s <= self.right.radius() || self.right_nodes.is_empty() {
            3
        } else {
            2
        }
    }

    pub fn eval(&self, s: T) -> Result<SolutionState<T>> {
        self.in_range(s)?;
        let (w, dw) = match self.piece(s) {
            0 => self.left.eval(s),
            1 => nearest(&self.left_nodes, s).eval(s),
            2 => nearest(&self.right_nodes, s).eval(s),
            _ => self.right.eval(s),
        };
        Ok(SolutionState::new(s, w, dw))
    }

    /// omega(s) dw/ds, finite up to both endpoints.
    pub fn weighted_derivative(&self, s: T, params: &Params<T>) -> Result<T> {
        self.in_range(s)?;
        Ok(match self.piece(s) {
            0 => self.left.weighted_derivative(s, false, params),
            3 => self.right.weighted_derivative(s, true, params),
            1 => omega(s, params) * nearest(&self.left_nodes, s).eval(s).1,
            _ => omega(s, params) * nearest(&self.right_nodes, s).eval(s).1,
        })
    }

    /// w(s) / ((s - lo)^(pl/2) (hi - s)^(pr/2)).
    pub fn eval_hat(&self, s: T, pl: u8, pr: u8) -> Result<T> {
        self.in_range(s)?;
        let half = T::lit(0.5);
        let fl = |p: u8| {
            if p == 0 {
                T::one()
            } else {
                (s - self.lo).max(T::zero()).powf(half)
            }
        };
        let fr = |p: u8| {
            if p == 0 {
                T::one()
            } else {
                (self.hi - s).max(T::zero()).powf(half)
            }
        };
        Ok(match self.piece(s) {
            0 => self.left.reduced(s, pl) / fr(pr),
            3 => self.right.reduced(s, pr) / fl(pl),
            1 => nearest(&self.left_nodes, s).eval(s).0 / (fl(pl) * fr(pr)),
            _ => nearest(&self.right_nodes, s).eval(s).0 / (fl(pl) * fr(pr)),
        })
    }
}

/// Modified Wronskian of two dense solutions at s.
pub fn dense_wronskian<T: Real>(
    u: &SeparatedSolution<T>,
    v: &SeparatedSolution<T>,
    s: T,
    params: &Params<T>,
) -> Result<T> {
    let a = u.eval(s)?;
    let b = v.eval(s)?;
    let va = u.weighted_derivative(s, params)?;
    let vb = v.weighted_derivative(s, params)?;
    Ok(a.w * vb - b.w * va)
}

/// The solutions P (P(a) = 1) and Q (lim omega Q' = 1) at an outer endpoint.
pub fn pq_pair<T: Real>(
    which_end: usize,
    lam: &LambdaPair<T>,
    params: &Params<T>,
) -> Result<(SeparatedSolution<T>, SeparatedSolution<T>)> {
    let (interval, launch_p, launch_q) = match which_end {
        0 => (1, Launch::Left(0), Launch::Left(1)),
        3 => (3, Launch::Right(0), Launch::Right(1)),
        _ => {
            return Err(Error::Domain(format!(
                "connection end must be a0 or a3, got a{which_end}"
            )))
        }
    };
    let p = SeparatedSolution::build(interval, launch_p, lam, params)?;
    let q = SeparatedSolution::build(interval, launch_q, lam, params)?;
    let alpha = T::lit(2.0) / params.p1(which_end).abs().sqrt();
    let q = q.scaled(if which_end == 0 { alpha } else { -alpha });
    Ok((p, q))
}

/// Raw projection (a, b) of a solution onto the P, Q pair: a = W[E, Q], b = W[P, E].
pub fn wronskian_projection<T: Real>(
    e_states: &[SolutionState<T>; 2],
    which_end: usize,
    lam: &LambdaPair<T>,
    params: &Params<T>,
) -> Result<(T, T, T)> {
    let (p, q) = pq_pair(which_end, lam, params)?;
    let mut acc = [T::zero(); 2];
    let mut vals = Vec::new();
    for st in e_states {
        let ps = p.eval(st.s)?;
        let qs = q.eval(st.s)?;
        let a = wronskian_mod(st, &qs, params)?;
        let b = wronskian_mod(&ps, st, params)?;
        acc[0] = acc[0] + a;
        acc[1] = acc[1] + b;
        vals.push((a, b));
    }
    let two = T::lit(2.0);
    let (a, b) = (acc[0] / two, acc[1] / two);
    let spread = (vals[0].0 - vals[1].0)
        .abs()
        .max((vals[0].1 - vals[1].1).abs());
    let scale = a.abs().max(b.abs()).max(T::min_positive_value());
    Ok((a, b, spread / scale))
}

/// Connection coefficients of E onto the P, Q pair at a0 or a3.
pub fn connection_coeffs<T: Real>(
    e_states: &[SolutionState<T>; 2],
    which_end: usize,
    lam: &LambdaPair<T>,
    params: &Params<T>,
) -> Result<ConnectionData<T>> {
    let (a, b, _) = wronskian_projection(e_states, which_end, lam, params)?;
    let scale = a.abs().max(b.abs());
    if a.abs() < T::lit(1e-10) * scale || b.abs() < T::lit(1e-10) * scale || scale == T::zero() {
        return Err(Error::DegenerateConnection {
            a: a.as_f64(),
            b: b.as_f64(),
        });
    }
    Ok(ConnectionData {
        a_coef: a,
        b_coef: b,
        c_coef: -T::one() / (T::lit(2.0) * a * b),
    })
}
