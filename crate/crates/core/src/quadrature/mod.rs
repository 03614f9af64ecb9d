//! Integrals over gauge balls `B_r = {rho < r}` and gauge spheres, the latter
//! against the co-area density `dsigma / |grad rho|`.
//!
//! Two rules are available. `Reduced2d` integrates bi-radial integrands in the
//! polar chart `(rho, theta)` with composite Gauss-Legendre panels; `Qmc`
//! samples the full `(m + n)`-dimensional space with a randomly shifted Sobol
//! sequence and accepts arbitrary integrands.

mod polar;
mod qmc;
pub mod selftest;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use polar::{sphere_measure_constant, PolarChart};
pub use qmc::QmcRule;

use crate::error::{input, Error, Result};
use crate::geometry::{Point, SpaceParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Reduced2d,
    Qmc,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Reduced2d => "reduced2d",
            Method::Qmc => "qmc",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSettings {
    /// Relative agreement required between successive reduced2d levels.
    pub rel_tol: f64,
    /// Finest reduced2d refinement level.
    pub max_level: usize,
    /// Extra levels on top of the base rule, used for node-doubling studies.
    pub level_offset: usize,
    /// Total number of QMC points, split evenly across replicates.
    pub qmc_points: usize,
    pub qmc_replicates: usize,
    pub seed: u64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings { rel_tol: 1e-8, max_level: 5, level_offset: 0, qmc_points: 1 << 20, qmc_replicates: 8, seed: 20240229 }
    }
}

impl QuadSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return input(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol));
        }
        if self.qmc_replicates < 2 {
            return input("qmc_replicates must be at least 2");
        }
        if self.qmc_points < 2 * self.qmc_replicates {
            return input(format!("qmc_points = {} is too small", self.qmc_points));
        }
        if self.max_level > 8 {
            return input("max_level above 8 is not supported");
        }
        Ok(())
    }
}

/// Singular weight `rho^rho_pow |x|^x_pow` multiplying an integrand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weight {
    pub rho_pow: f64,
    pub x_pow: f64,
}

impl Weight {
    pub const ONE: Weight = Weight { rho_pow: 0.0, x_pow: 0.0 };

    pub const fn new(rho_pow: f64, x_pow: f64) -> Self {
        Weight { rho_pow, x_pow }
    }

    /// `1 / |x|^2`
    pub const fn inv_x2() -> Self {
        Weight::new(0.0, -2.0)
    }

    /// `1 / rho^k`
    pub const fn inv_rho(k: f64) -> Self {
        Weight::new(-k, 0.0)
    }

    /// `psi = |x|^{2 alpha} rho^{-2 alpha}`
    pub fn psi(sp: &SpaceParams) -> Self {
        let al = sp.alpha();
        Weight::new(-2.0 * al, 2.0 * al)
    }

    /// `1 / (rho^2 psi)`
    pub fn inv_rho2_psi(sp: &SpaceParams) -> Self {
        let al = sp.alpha();
        Weight::new(2.0 * al - 2.0, -2.0 * al)
    }

    /// `psi / rho^k`
    pub fn psi_over_rho(sp: &SpaceParams, k: f64) -> Self {
        let al = sp.alpha();
        Weight::new(-k - 2.0 * al, 2.0 * al)
    }

    pub fn times(self, o: Weight) -> Self {
        Weight::new(self.rho_pow + o.rho_pow, self.x_pow + o.x_pow)
    }

    #[inline]
    pub fn eval(&self, rho: f64, s: f64) -> f64 {
        let mut w = 1.0;
        if self.rho_pow != 0.0 {
            w *= rho.powf(self.rho_pow);
        }
        if self.x_pow != 0.0 {
            w *= s.powf(self.x_pow);
        }
        w
    }

    fn describe(&self) -> String {
        format!("rho^{} |x|^{}", self.rho_pow, self.x_pow)
    }

    /// Local integrability near the origin (ball) and near `{x = 0}`.
    pub fn check(&self, sp: &SpaceParams, ball: bool) -> Result<()> {
        let m = sp.m() as f64;
        let near_axis = self.x_pow + m > 0.0;
        let near_origin = !ball || self.rho_pow + self.x_pow + sp.q() > 0.0;
        if near_axis && near_origin {
            Ok(())
        } else {
            Err(Error::NonIntegrableWeight { weight: self.describe(), m: sp.m(), q: sp.q() })
        }
    }
}

/// Evaluation site handed to integrands.
#[derive(Clone, Copy, Debug)]
pub struct Node<'a> {
    pub rho: f64,
    pub psi: f64,
    /// `|x|`
    pub s: f64,
    /// `|y|`
    pub t: f64,
    /// Ambient point; present only for the QMC rule.
    pub point: Option<&'a Point>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub method: Method,
    pub nodes: usize,
}

/// A configured integration rule on one geometry.
#[derive(Clone)]
pub struct Quadrature {
    sp: SpaceParams,
    method: Method,
    settings: QuadSettings,
    chart: PolarChart,
    qmc: Option<Arc<QmcRule>>,
}

impl Quadrature {
    pub fn new(sp: SpaceParams, method: Method, settings: QuadSettings) -> Result<Self> {
        settings.validate()?;
        let qmc = match method {
            Method::Qmc => Some(Arc::new(QmcRule::new(&sp, &settings)?)),
            Method::Reduced2d => None,
        };
        Ok(Quadrature { sp, method, chart: PolarChart::new(sp), settings, qmc })
    }

    pub fn reduced(sp: SpaceParams) -> Self {
        Self::new(sp, Method::Reduced2d, QuadSettings::default()).expect("default settings are valid")
    }

    pub fn space(&self) -> &SpaceParams {
        &self.sp
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn settings(&self) -> &QuadSettings {
        &self.settings
    }

    pub fn chart(&self) -> &PolarChart {
        &self.chart
    }

    /// The same rule with `extra` more refinement levels (reduced2d) or
    /// `2^extra` times more points (QMC).
    pub fn refined(&self, extra: usize) -> Result<Self> {
        let mut s = self.settings.clone();
        s.level_offset += extra;
        s.qmc_points <<= extra;
        Self::new(self.sp, self.method, s)
    }

    /// `int_{B_r} f_k w_k dx dy` for every output `k` of `f`.
    ///
    /// `breaks` lists gauge radii inside `(0, r)` where the integrand has a
    /// kink; the reduced rule aligns panel boundaries with them.
    pub fn ball_multi<F>(&self, r: f64, weights: &[Weight], breaks: &[f64], f: F) -> Result<Vec<QuadratureResult>>
    where
        F: Fn(&Node, &mut [f64]) -> Result<()> + Sync,
    {
        check_radius(r)?;
        for w in weights {
            w.check(&self.sp, true)?;
        }
        match self.method {
            Method::Reduced2d => self.chart.ball(r, weights, breaks, &self.settings, &f),
            Method::Qmc => self.qmc.as_ref().expect("qmc rule").ball(r, weights, &f),
        }
    }

    /// `int_{dB_r} f_k w_k dsigma / |grad rho|` for every output `k` of `f`.
    pub fn sphere_multi<F>(&self, r: f64, weights: &[Weight], f: F) -> Result<Vec<QuadratureResult>>
    where
        F: Fn(&Node, &mut [f64]) -> Result<()> + Sync,
    {
        check_radius(r)?;
        for w in weights {
            w.check(&self.sp, false)?;
        }
        match self.method {
            Method::Reduced2d => self.chart.sphere(r, weights, &self.settings, &f),
            Method::Qmc => self.qmc.as_ref().expect("qmc rule").sphere(r, weights, &f),
        }
    }

    pub fn ball_integral<F>(&self, r: f64, weight: Weight, f: F) -> Result<QuadratureResult>
    where
        F: Fn(&Node) -> Result<f64> + Sync,
    {
        let mut v = self.ball_multi(r, &[weight], &[], |n, out| {
            out[0] = f(n)?;
            Ok(())
        })?;
        Ok(v.remove(0))
    }

    pub fn sphere_integral<F>(&self, r: f64, weight: Weight, f: F) -> Result<QuadratureResult>
    where
        F: Fn(&Node) -> Result<f64> + Sync,
    {
        let mut v = self.sphere_multi(r, &[weight], |n, out| {
            out[0] = f(n)?;
            Ok(())
        })?;
        Ok(v.remove(0))
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        input(format!("radius must be positive, got {r}"))
    }
}

const CHUNK: usize = 512;

/// Sums `eval(k)` over `k < len` for `n_out` outputs, returning the sums and
/// the sums of absolute values. Work is split into fixed chunks combined by a
/// pairwise tree, so the result does not depend on the number of threads.
pub(crate) fn fixed_sum<E>(len: usize, n_out: usize, eval: E) -> Result<(Vec<f64>, Vec<f64>)>
where
    E: Fn(usize, &mut [f64]) -> Result<bool> + Sync,
{
    let n_chunks = len.div_ceil(CHUNK);
    let partial: Vec<Result<Vec<f64>>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; 2 * n_out];
            let mut buf = vec![0.0; n_out];
            for k in c * CHUNK..((c + 1) * CHUNK).min(len) {
                buf.iter_mut().for_each(|v| *v = 0.0);
                if eval(k, &mut buf)? {
                    for (i, v) in buf.iter().enumerate() {
                        acc[i] += v;
                        acc[n_out + i] += v.abs();
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let partial: Vec<Vec<f64>> = partial.into_iter().collect::<Result<_>>()?;
    let total = pairwise(&partial, 2 * n_out);
    Ok((total[..n_out].to_vec(), total[n_out..].to_vec()))
}

fn pairwise(parts: &[Vec<f64>], width: usize) -> Vec<f64> {
    match parts.len() {
        0 => vec![0.0; width],
        1 => parts[0].clone(),
        n => {
            let (a, b) = parts.split_at(n / 2);
            let (a, b) = (pairwise(a, width), pairwise(b, width));
            a.iter().zip(&b).map(|(x, y)| x + y).collect()
        }
    }
}
