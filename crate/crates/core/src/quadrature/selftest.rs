//! Consistency checks of the integration rules against each other and against
//! exact scaling.

use serde::Serialize;

use super::{polar::gl01, Method, QuadSettings, Quadrature, Weight};
use crate::error::{input, Result};
use crate::fields::{sample, AnalyticField};
use crate::geometry::SpaceParams;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub field: String,
    pub degree: f64,
    /// Least-squares slope of `ln ball(f, r)` against `ln r`.
    pub exponent: f64,
    /// `Q + degree`
    pub expected: f64,
    pub max_misfit: f64,
}

/// Fits the growth exponent of `r -> int_{B_r} f`. For `f` homogeneous of
/// degree `k` the exponent is `Q + k`.
pub fn scaling_exponent(quad: &Quadrature, f: &dyn AnalyticField, radii: &[f64]) -> Result<ScalingFit> {
    if radii.len() < 2 {
        return input("scaling fit needs at least two radii");
    }
    let sp = *quad.space();
    let Some(k) = f.homogeneity(&sp) else {
        return input(format!("field `{}` is not homogeneous", f.meta().name));
    };
    let mut x = Vec::new();
    let mut y = Vec::new();
    for &r in radii {
        let v = quad.ball_integral(r, Weight::ONE, |n| Ok(sample(f, n, &sp, false)?.value))?;
        if !(v.value > 0.0) {
            return input(format!("ball integral of `{}` is not positive", f.meta().name));
        }
        x.push(r.ln());
        y.push(v.value.ln());
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / sxx;
    let max_misfit = x.iter().zip(&y).map(|(a, b)| (b - my - slope * (a - mx)).abs()).fold(0.0, f64::max);
    Ok(ScalingFit { field: f.meta().name.clone(), degree: k, exponent: slope, expected: sp.q() + k, max_misfit })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
    pub budget: f64,
}

impl Comparison {
    /// `|lhs - rhs| <= factor * budget`
    pub fn within(&self, factor: f64) -> bool {
        self.diff <= factor * self.budget
    }

    pub fn rel_diff(&self) -> f64 {
        self.diff / self.lhs.abs().max(self.rhs.abs())
    }
}

/// `int_0^r sphere(f, rho) d rho` against `ball(f, r)`. The outer integral uses
/// composite Gauss-Legendre in `rho = r xi^2`; its truncation error (from
/// halving the panel count) enters the budget.
pub fn coarea(quad: &Quadrature, f: &dyn AnalyticField, r: f64) -> Result<Comparison> {
    let sp = *quad.space();
    let val = |n: &super::Node| Ok(sample(f, n, &sp, false)?.value);
    let ball = quad.ball_integral(r, Weight::ONE, val)?;
    let outer = |panels: usize| -> Result<(f64, f64)> {
        let (mut sum, mut err) = (0.0, 0.0);
        for p in 0..panels {
            for &(x, w) in gl01() {
                let xi = (p as f64 + x) / panels as f64;
                let rho = r * xi * xi;
                if rho == 0.0 {
                    continue;
                }
                let jac = 2.0 * r * xi * w / panels as f64;
                let s = quad.sphere_integral(rho, Weight::ONE, val)?;
                sum += jac * s.value;
                err += jac * s.error_estimate;
            }
        }
        Ok((sum, err))
    };
    let (coarse, _) = outer(4)?;
    let (fine, sph_err) = outer(8)?;
    Ok(Comparison {
        name: format!("coarea/{}", f.meta().name),
        lhs: fine,
        rhs: ball.value,
        diff: (fine - ball.value).abs(),
        budget: sph_err + ball.error_estimate + (fine - coarse).abs(),
    })
}

/// `sphere(psi, r)` against `(Q - 1) ball(psi / rho, r)`, both sides of the
/// divergence theorem applied to `grad_X rho`.
pub fn divergence(quad: &Quadrature, r: f64) -> Result<Comparison> {
    let sp = *quad.space();
    let lhs = quad.sphere_integral(r, Weight::psi(&sp), |_| Ok(1.0))?;
    let rhs = quad.ball_integral(r, Weight::psi_over_rho(&sp, 1.0), |_| Ok(1.0))?;
    let q1 = sp.q() - 1.0;
    Ok(Comparison {
        name: "divergence".into(),
        lhs: lhs.value,
        rhs: q1 * rhs.value,
        diff: (lhs.value - q1 * rhs.value).abs(),
        budget: lhs.error_estimate + q1 * rhs.error_estimate,
    })
}

/// Ball integral of `f` by the reduced rule and by QMC; the budget is the sum
/// of both error estimates.
pub fn cross_method(sp: &SpaceParams, settings: &QuadSettings, f: &dyn AnalyticField, r: f64) -> Result<Comparison> {
    let red = Quadrature::new(*sp, Method::Reduced2d, settings.clone())?;
    let qmc = Quadrature::new(*sp, Method::Qmc, settings.clone())?;
    let a = red.ball_integral(r, Weight::ONE, |n| Ok(sample(f, n, sp, false)?.value))?;
    let b = qmc.ball_integral(r, Weight::ONE, |n| Ok(sample(f, n, sp, false)?.value))?;
    Ok(Comparison {
        name: format!("reduced_vs_qmc/{}", f.meta().name),
        lhs: a.value,
        rhs: b.value,
        diff: (a.value - b.value).abs(),
        budget: a.error_estimate + b.error_estimate,
    })
}
