//! Explicit fundamental solution `F` for `A = ∇f`:
//!
//! `F(x) = C^{-1/(p-1)} h(x)^ξ` for `p > n` with `ξ = (p-n)/(p-1)`, and
//! `F(x) = C^{-1/(n-1)} log h(x)` for `p = n`, where `h` is the dual gauge
//! and `C` normalizes the point mass at the origin to 1:
//!
//! `C = p ξ^{p-1} ∫_{S¹} h^{-n}(ω) dω` (p > n),
//! `C = n ∫_{S¹} h^{-n}(ω) dω` (p = n).

use crate::operators::{DualGauge, OperatorSpec, Vec2};
use crate::{Error, Result};

const P_EQ_N_TOL: f64 = 1e-12;

/// The normalized fundamental solution of an operator `A = ∇f`.
#[derive(Clone, Debug)]
pub struct FundamentalSolution {
    pub op: OperatorSpec,
    pub dual: DualGauge,
    /// unit-mass normalization constant
    pub c: f64,
    /// homogeneity exponent ξ = (p-n)/(p-1) (zero when p = n)
    pub xi: f64,
    /// logarithmic coefficient γ = C^{-1/(n-1)} (only meaningful for p = n)
    pub gamma: f64,
}

impl FundamentalSolution {
    pub fn new(op: &OperatorSpec) -> Result<Self> {
        let dual = op.dual_gauge();
        let c = normalization_constant(op, &dual)?;
        let n = op.n as f64;
        let xi = (op.p - n) / (op.p - 1.0);
        let gamma = c.powf(-1.0 / (n - 1.0));
        Ok(FundamentalSolution { op: op.clone(), dual, c, xi, gamma })
    }

    pub fn p_equals_n(&self) -> bool {
        (self.op.p - self.op.n as f64).abs() < P_EQ_N_TOL
    }

    /// `F(z)`, `z ≠ 0`.
    pub fn eval(&self, z: Vec2) -> f64 {
        let h = self.dual.eval_h(z);
        if self.p_equals_n() {
            self.gamma * h.ln()
        } else {
            self.c.powf(-1.0 / (self.op.p - 1.0)) * h.powf(self.xi)
        }
    }

    /// `∇F(z)` by the chain rule through `∇h`.
    pub fn grad(&self, z: Vec2) -> Vec2 {
        let h = self.dual.eval_h(z);
        let gh = self.dual.eval_grad_h(z);
        if self.p_equals_n() {
            self.gamma / h * gh
        } else {
            self.c.powf(-1.0 / (self.op.p - 1.0)) * self.xi * h.powf(self.xi - 1.0) * gh
        }
    }

    /// Outward flux `∮_{|z|=r} ⟨A(∇F), z/|z|⟩ dH¹` by trapezoid quadrature;
    /// equals 1 (the point mass at the origin) for every `r > 0`.
    pub fn check_mass(&self, r: f64, nodes: usize) -> f64 {
        let m = nodes.max(16);
        let mut s = 0.0;
        for i in 0..m {
            let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            let z = r * Vec2::new(t.cos(), t.sin());
            let flux = self.op.eval_a(self.grad(z)).dot(&(z / r));
            s += flux;
        }
        s * 2.0 * std::f64::consts::PI * r / m as f64
    }

    /// Max absolute central-difference residual of `∇·A(∇F)` over the sample
    /// points (which must stay away from the origin).
    pub fn check_a_harmonic(&self, points: &[Vec2], step: f64) -> f64 {
        let mut worst = 0.0f64;
        for &z in points {
            let mut div = 0.0;
            for j in 0..2 {
                let mut zp = z;
                let mut zm = z;
                zp[j] += step;
                zm[j] -= step;
                let ap = self.op.eval_a(self.grad(zp))[j];
                let am = self.op.eval_a(self.grad(zm))[j];
                div += (ap - am) / (2.0 * step);
            }
            worst = worst.max(div.abs());
        }
        worst
    }
}

/// `C` by trapezoid quadrature on `S¹` (spectrally accurate for smooth
/// periodic integrands), with node doubling until the relative change drops
/// below 1e-10. At least 2048 nodes are used.
pub fn normalization_constant(op: &OperatorSpec, dual: &DualGauge) -> Result<f64> {
    let n = op.n as f64;
    let integral = |m: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..m {
            let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            let w = Vec2::new(t.cos(), t.sin());
            s += dual.eval_h(w).powf(-n);
        }
        s * 2.0 * std::f64::consts::PI / m as f64
    };
    let mut m = 2048;
    let mut prev = integral(m);
    loop {
        m *= 2;
        let next = integral(m);
        if (next - prev).abs() <= 1e-10 * next.abs() {
            prev = next;
            break;
        }
        prev = next;
        if m > 1 << 21 {
            return Err(Error::Quadrature(format!(
                "sphere integral did not stabilize at {m} nodes"
            )));
        }
    }
    let factor = if (op.p - n).abs() < P_EQ_N_TOL {
        n
    } else {
        let xi = (op.p - n) / (op.p - 1.0);
        op.p * xi.powf(op.p - 1.0)
    };
    Ok(factor * prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Mat2;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn normalization_closed_forms() {
        // p = n = 2 isotropic: h = √2 |X|, integrand h^{-2} ≡ 1/2, C = 2π
        let f2 = FundamentalSolution::new(&OperatorSpec::isotropic(2.0)).unwrap();
        assert_relative_eq!(f2.c, 2.0 * PI, max_relative = 1e-10);
        // p = 4: C = 4 (2/3)³ (1/2) 2π = 32π/27
        let f4 = FundamentalSolution::new(&OperatorSpec::isotropic(4.0)).unwrap();
        assert_relative_eq!(f4.c, 32.0 * PI / 27.0, max_relative = 1e-10);
        // identity-matrix ellipsoid with matching scale reduces to isotropic
        let w = Mat2::identity();
        let ell = OperatorSpec::new(
            2,
            2.0,
            crate::operators::GaugeKind::Ellipsoidal { w, scale: 2f64.powf(-0.5) },
        )
        .unwrap();
        let fe = FundamentalSolution::new(&ell).unwrap();
        assert_relative_eq!(fe.c, f2.c, max_relative = 1e-10);
    }

    #[test]
    fn values_and_homogeneity() {
        let f2 = FundamentalSolution::new(&OperatorSpec::isotropic(2.0)).unwrap();
        // F(e1) = (2π)^{-1} log √2
        assert_relative_eq!(
            f2.eval(Vec2::new(1.0, 0.0)),
            0.5 * 2f64.ln() / (2.0 * PI),
            max_relative = 1e-10
        );
        // p = n: F(tz) - F(z) = γ log t
        let z = Vec2::new(0.3, -1.2);
        for t in [0.5, 2.0, 10.0] {
            assert_relative_eq!(
                f2.eval(t * z) - f2.eval(z),
                f2.gamma * t.ln(),
                epsilon = 1e-12
            );
        }
        // p > n: F(tz) = t^ξ F(z)
        let f4 = FundamentalSolution::new(&OperatorSpec::isotropic(4.0)).unwrap();
        for t in [0.5, 2.0, 10.0] {
            assert_relative_eq!(
                f4.eval(t * z),
                t.powf(f4.xi) * f4.eval(z),
                max_relative = 1e-12
            );
        }
        assert!(f4.eval(z) > 0.0);
    }

    #[test]
    fn isotropic_f_is_radial() {
        let f4 = FundamentalSolution::new(&OperatorSpec::isotropic(4.0)).unwrap();
        let a = f4.eval(Vec2::new(1.7, 0.0));
        let b = f4.eval(Vec2::new(0.0, 1.7));
        let c = f4.eval(1.7 * Vec2::new(0.6, 0.8));
        assert_relative_eq!(a, b, max_relative = 1e-12);
        assert_relative_eq!(a, c, max_relative = 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ops = [
            OperatorSpec::isotropic(2.0),
            OperatorSpec::isotropic(4.0),
            OperatorSpec::ellipsoidal(3.0, Mat2::new(1.0, 0.0, 0.0, 4.0)).unwrap(),
        ];
        for op in &ops {
            let fs = FundamentalSolution::new(op).unwrap();
            for i in 0..20 {
                let t = 2.0 * PI * i as f64 / 20.0;
                let z = (0.5 + i as f64 * 0.1) * Vec2::new(t.cos(), t.sin());
                let g = fs.grad(z);
                let step = 1e-6 * z.norm();
                let mut fd = Vec2::zeros();
                for j in 0..2 {
                    let mut zp = z;
                    let mut zm = z;
                    zp[j] += step;
                    zm[j] -= step;
                    fd[j] = (fs.eval(zp) - fs.eval(zm)) / (2.0 * step);
                }
                assert!((g - fd).norm() <= 1e-6 * g.norm(), "op {op:?} z {z:?}");
            }
        }
    }

    #[test]
    fn unit_mass_at_all_radii() {
        let ops = [
            OperatorSpec::isotropic(2.0),
            OperatorSpec::isotropic(4.0),
            OperatorSpec::ellipsoidal(3.0, Mat2::new(1.0, 0.0, 0.0, 4.0)).unwrap(),
        ];
        for op in &ops {
            let fs = FundamentalSolution::new(op).unwrap();
            for r in [0.5, 1.0, 2.0, 10.0] {
                let mass = fs.check_mass(r, 2048);
                assert!((mass - 1.0).abs() <= 1e-10, "op {op:?} r {r} mass {mass}");
            }
        }
    }

    #[test]
    fn harmonic_residual_small_and_second_order() {
        let f2 = FundamentalSolution::new(&OperatorSpec::isotropic(2.0)).unwrap();
        let pts: Vec<Vec2> = (0..16)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 16.0;
                Vec2::new(t.cos(), t.sin())
            })
            .collect();
        assert!(f2.check_a_harmonic(&pts, 1e-4) <= 1e-6);

        let ell = OperatorSpec::ellipsoidal(3.0, Mat2::new(1.0, 0.2, 0.2, 4.0)).unwrap();
        let fs = FundamentalSolution::new(&ell).unwrap();
        let r1 = fs.check_a_harmonic(&pts, 2e-3);
        let r2 = fs.check_a_harmonic(&pts, 1e-3);
        // roughly quadratic decay of the truncation error
        assert!(r2 <= 0.35 * r1, "r1 {r1} r2 {r2}");
    }
}
