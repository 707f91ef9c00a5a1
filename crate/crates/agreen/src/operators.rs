//! Operators `A = ∇f` with `f = k^p` for a degree-1 homogeneous gauge `k`,
//! together with the dual gauge `h` (support function of the unit `k`-ball).
//!
//! The canonical isotropic gauge is `k(η) = p^{-1/p} |η|`, so that
//! `f(η) = |η|^p / p` and `A` is exactly the p-Laplace operator.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use rand::Rng;

use crate::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// A user-supplied gauge for the `custom` operator kind.
///
/// `k` must be positively homogeneous of degree 1, positive away from the
/// origin, and `k²` strictly convex.
pub trait CustomGauge: Send + Sync {
    fn k(&self, eta: Vec2) -> f64;
    fn grad_k(&self, eta: Vec2) -> Vec2;
}

#[derive(Clone)]
pub enum GaugeKind {
    /// `k(η) = p^{-1/p} |η|`
    Isotropic,
    /// `k(η) = scale · (ηᵀ W η)^{1/2}` with `W` symmetric positive definite
    Ellipsoidal { w: Mat2, scale: f64 },
    Custom(Arc<dyn CustomGauge>),
}

impl fmt::Debug for GaugeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaugeKind::Isotropic => write!(f, "Isotropic"),
            GaugeKind::Ellipsoidal { w, scale } => {
                write!(f, "Ellipsoidal {{ w: {w:?}, scale: {scale} }}")
            }
            GaugeKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// The tuple `(n, p, k)` defining `A = ∇f`, `f = k^p`.
#[derive(Clone, Debug)]
pub struct OperatorSpec {
    pub n: usize,
    pub p: f64,
    pub kind: GaugeKind,
}

impl OperatorSpec {
    pub fn new(n: usize, p: f64, kind: GaugeKind) -> Result<Self> {
        if n != 2 {
            return Err(Error::Operator(format!("only n = 2 is supported, got n = {n}")));
        }
        if !(p >= n as f64) || !p.is_finite() {
            return Err(Error::Operator(format!("require p >= n = {n}, got p = {p}")));
        }
        if let GaugeKind::Ellipsoidal { w, scale } = &kind {
            if (w - w.transpose()).norm() > 1e-12 * w.norm() {
                return Err(Error::Operator("W must be symmetric".into()));
            }
            let eig = w.symmetric_eigenvalues();
            if eig.min() <= 0.0 {
                return Err(Error::Operator(format!(
                    "W must be positive definite (eigenvalues {:?})",
                    eig
                )));
            }
            if *scale <= 0.0 {
                return Err(Error::Operator("scale must be positive".into()));
            }
        }
        let op = OperatorSpec { n, p, kind };
        // k² strict convexity spot-check on custom gauges
        if matches!(op.kind, GaugeKind::Custom(_)) {
            op.check_gauge_convexity()?;
        }
        Ok(op)
    }

    pub fn isotropic(p: f64) -> Self {
        Self::new(2, p, GaugeKind::Isotropic).expect("isotropic spec is always valid for p >= 2")
    }

    pub fn ellipsoidal(p: f64, w: Mat2) -> Result<Self> {
        Self::new(2, p, GaugeKind::Ellipsoidal { w, scale: 1.0 })
    }

    /// Gauge value `k(η)`.
    pub fn k(&self, eta: Vec2) -> f64 {
        match &self.kind {
            GaugeKind::Isotropic => self.p.powf(-1.0 / self.p) * eta.norm(),
            GaugeKind::Ellipsoidal { w, scale } => scale * (eta.dot(&(w * eta))).sqrt(),
            GaugeKind::Custom(g) => g.k(eta),
        }
    }

    /// `∇k(η)` for `η ≠ 0`; degree-0 homogeneous.
    pub fn grad_k(&self, eta: Vec2) -> Vec2 {
        match &self.kind {
            GaugeKind::Isotropic => self.p.powf(-1.0 / self.p) * eta / eta.norm(),
            GaugeKind::Ellipsoidal { w, scale } => {
                let weta = w * eta;
                *scale * weta / (eta.dot(&weta)).sqrt()
            }
            GaugeKind::Custom(g) => g.grad_k(eta),
        }
    }

    /// `f(η) = k(η)^p`; by homogeneity `f(0) = 0`.
    pub fn eval_f(&self, eta: Vec2) -> f64 {
        if eta == Vec2::zeros() {
            return 0.0;
        }
        self.k(eta).powf(self.p)
    }

    /// `A(η) = ∇f(η) = p k^{p-1} ∇k`; `A(0) = 0` by convention.
    pub fn eval_a(&self, eta: Vec2) -> Vec2 {
        if eta == Vec2::zeros() {
            return Vec2::zeros();
        }
        self.p * self.k(eta).powf(self.p - 1.0) * self.grad_k(eta)
    }

    /// Hessian of `f` at `η ≠ 0`; symmetric.
    pub fn eval_da(&self, eta: Vec2) -> Result<Mat2> {
        if eta == Vec2::zeros() {
            return Err(Error::Operator("DA is undefined at η = 0".into()));
        }
        let p = self.p;
        match &self.kind {
            GaugeKind::Isotropic => {
                // f = |η|^p / p, DA = |η|^{p-2} (I + (p-2) η̂ η̂ᵀ)
                let r = eta.norm();
                let u = eta / r;
                let rp = r.powf(p - 2.0);
                Ok(rp * (Mat2::identity() + (p - 2.0) * u * u.transpose()))
            }
            GaugeKind::Ellipsoidal { w, scale } => {
                // f = s^p (ηᵀWη)^{p/2}
                let sp = scale.powf(p);
                let weta = w * eta;
                let q = eta.dot(&weta);
                let da = p * sp
                    * ((p - 2.0) * q.powf((p - 4.0) / 2.0) * weta * weta.transpose()
                        + q.powf((p - 2.0) / 2.0) * w);
                Ok(da)
            }
            GaugeKind::Custom(_) => {
                // central differences on A, scale-aware step
                let step = 1e-6 * eta.norm();
                let mut m = Mat2::zeros();
                for j in 0..2 {
                    let mut dp = eta;
                    let mut dm = eta;
                    dp[j] += step;
                    dm[j] -= step;
                    let col = (self.eval_a(dp) - self.eval_a(dm)) / (2.0 * step);
                    m.set_column(j, &col);
                }
                // symmetrize
                Ok(0.5 * (m + m.transpose()))
            }
        }
    }

    fn check_gauge_convexity(&self) -> Result<()> {
        // sample Hessian of k² for positive definiteness
        for i in 0..32 {
            let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / 32.0;
            let eta = Vec2::new(t.cos(), t.sin());
            let step = 1e-5;
            let k2 = |v: Vec2| self.k(v) * self.k(v);
            let mut hess = Mat2::zeros();
            for a in 0..2 {
                for b in 0..2 {
                    let mut pp = eta;
                    let mut pm = eta;
                    let mut mp = eta;
                    let mut mm = eta;
                    pp[a] += step;
                    pp[b] += step;
                    pm[a] += step;
                    pm[b] -= step;
                    mp[a] -= step;
                    mp[b] += step;
                    mm[a] -= step;
                    mm[b] -= step;
                    hess[(a, b)] = (k2(pp) - k2(pm) - k2(mp) + k2(mm)) / (4.0 * step * step);
                }
            }
            let eig = (0.5 * (hess + hess.transpose())).symmetric_eigenvalues();
            if eig.min() <= 1e-8 {
                return Err(Error::Operator(format!(
                    "k² is not strictly convex near angle {t} (Hessian eigenvalues {eig:?})"
                )));
            }
        }
        Ok(())
    }

    /// Membership report for the class `M_p(α)`: monotonicity of `A` on
    /// sampled pairs and an ellipticity ratio estimate from Hessian
    /// eigenvalues scaled by `|η|^{p-2}`.
    pub fn validate_mp<R: Rng>(&self, samples: usize, rng: &mut R) -> MpReport {
        let mut alpha_est = 1.0f64;
        let mut monotone_ok = true;
        let mut violations = Vec::new();
        for _ in 0..samples.max(1) {
            let eta = random_nonzero(rng);
            let etb = random_nonzero(rng);
            let d = eta - etb;
            if d.norm() > 1e-12 {
                let m = (self.eval_a(eta) - self.eval_a(etb)).dot(&d);
                if m <= 0.0 {
                    monotone_ok = false;
                    violations.push((eta, etb, m));
                }
            }
            if let Ok(da) = self.eval_da(eta) {
                let eig = da.symmetric_eigenvalues();
                let scale = eta.norm().powf(self.p - 2.0);
                let (lo, hi) = (eig.min() / scale, eig.max() / scale);
                if lo > 0.0 {
                    alpha_est = alpha_est.max(hi).max(1.0 / lo);
                } else {
                    monotone_ok = false;
                    violations.push((eta, eta, lo));
                }
            }
        }
        MpReport { alpha_est, monotone_ok, violations }
    }

    /// Dual gauge (support function of `{k ≤ 1}`).
    pub fn dual_gauge(&self) -> DualGauge {
        DualGauge { op: self.clone() }
    }
}

/// Result of [`OperatorSpec::validate_mp`].
#[derive(Debug, Clone)]
pub struct MpReport {
    pub alpha_est: f64,
    pub monotone_ok: bool,
    /// sample pairs (η, η′, value) violating monotonicity / ellipticity
    pub violations: Vec<(Vec2, Vec2, f64)>,
}

fn random_nonzero<R: Rng>(rng: &mut R) -> Vec2 {
    loop {
        let v = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let r = v.norm();
        if r > 1e-3 {
            // spread magnitudes over a few decades
            let s = 10f64.powf(rng.gen_range(-2.0..2.0));
            return v * (s / r);
        }
    }
}

/// Support function `h` of the unit ball `{k ≤ 1}` and its gradient.
///
/// `h∇h` and `k∇k` are mutually inverse on `ℝ² \ {0}`.
#[derive(Clone, Debug)]
pub struct DualGauge {
    op: OperatorSpec,
}

impl DualGauge {
    /// `h(X) = sup { ⟨η, X⟩ : k(η) ≤ 1 }`, `X ≠ 0`.
    pub fn eval_h(&self, x: Vec2) -> f64 {
        match &self.op.kind {
            GaugeKind::Isotropic => self.op.p.powf(1.0 / self.op.p) * x.norm(),
            GaugeKind::Ellipsoidal { w, scale } => {
                let winv = w.try_inverse().expect("W is SPD");
                (x.dot(&(winv * x))).sqrt() / scale
            }
            GaugeKind::Custom(_) => self.maximize(x).0,
        }
    }

    /// `∇h(X)`: the maximizer, a point of `{k = 1}`.
    pub fn eval_grad_h(&self, x: Vec2) -> Vec2 {
        match &self.op.kind {
            GaugeKind::Isotropic => self.op.p.powf(1.0 / self.op.p) * x / x.norm(),
            GaugeKind::Ellipsoidal { w, scale } => {
                let winv = w.try_inverse().expect("W is SPD");
                let wx = winv * x;
                wx / (scale * (x.dot(&wx)).sqrt())
            }
            GaugeKind::Custom(_) => self.maximize(x).1,
        }
    }

    /// Maximize `⟨u, X⟩ / k(u)` over unit directions. The maximizer rescaled
    /// to `{k = 1}` is `∇h(X)`; the maximum is `h(X)`.
    fn maximize(&self, x: Vec2) -> (f64, Vec2) {
        let value = |t: f64| {
            let u = Vec2::new(t.cos(), t.sin());
            let d = u.dot(&x);
            if d <= 0.0 {
                return f64::NEG_INFINITY;
            }
            d / self.op.k(u)
        };
        // coarse scan then golden-section refinement; the objective is
        // unimodal on the half-circle facing X because k² is strictly convex
        let base = x[1].atan2(x[0]);
        let m = 256;
        let mut best_t = base;
        let mut best_v = value(base);
        for i in 0..m {
            let t = base - std::f64::consts::FRAC_PI_2
                + std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
            let v = value(t);
            if v > best_v {
                best_v = v;
                best_t = t;
            }
        }
        // refine by bisecting on the stationarity condition g'(t) = 0, where
        // g(t) = ⟨u(t), X⟩ / k(u(t)): the derivative is exact via grad_k, so
        // the root is located to full precision (golden-section on g alone
        // stalls at ~√ε because g is flat at its maximum)
        let slope = |t: f64| {
            let u = Vec2::new(t.cos(), t.sin());
            let up = Vec2::new(-t.sin(), t.cos());
            let k = self.op.k(u);
            up.dot(&x) * k - u.dot(&x) * self.op.grad_k(u).dot(&up)
        };
        let (mut a, mut b) = (
            best_t - std::f64::consts::PI / m as f64,
            best_t + std::f64::consts::PI / m as f64,
        );
        let (mut sa, sb) = (slope(a), slope(b));
        let t = if sa.signum() == sb.signum() {
            // degenerate bracket (maximizer exactly at the scan node)
            best_t
        } else {
            for _ in 0..64 {
                let mid = 0.5 * (a + b);
                let sm = slope(mid);
                if sm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if sm.signum() == sa.signum() {
                    a = mid;
                    sa = sm;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        };
        let u = Vec2::new(t.cos(), t.sin());
        let k = self.op.k(u);
        (u.dot(&x) / k, u / k)
    }
}
