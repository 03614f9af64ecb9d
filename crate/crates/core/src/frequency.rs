//! Frequency function of the system `Delta_X u = w`, `Delta_X w = V u`.
//!
//! With `H_1 = int_{dB_r} u^2 psi / |grad rho|`, `H_2` the same for `w`,
//! `I_1 = int_{B_r} |grad_X u|^2 + u w`, `I_2 = int_{B_r} |grad_X w|^2 + V w u`,
//! the profile tracks `H = H_1 + r^4 H_2`, `I = I_1 + r^4 I_2` and
//! `N = r I / H`, together with the checks built on them.

use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::fields::{sample, AnalyticField, Cutoff, FieldRef};
use crate::geometry::{gauge_st, SpaceParams};
use crate::quadrature::{Method, Node, Quadrature, Weight};

pub trait Potential: Send + Sync {
    fn name(&self) -> String;
    fn eval(&self, s: f64, t: f64, sp: &SpaceParams) -> Result<f64>;
}

pub struct ZeroPotential;

impl Potential for ZeroPotential {
    fn name(&self) -> String {
        "zero".into()
    }
    fn eval(&self, _s: f64, _t: f64, _sp: &SpaceParams) -> Result<f64> {
        Ok(0.0)
    }
}

/// `V = c0 / rho_eps^4` with `rho_eps = (rho^{2a} + eps^{2a})^{1/(2a)}`;
/// `eps = 0` gives the unregularized potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseQuartic {
    pub c0: f64,
    pub eps: f64,
}

impl InverseQuartic {
    pub fn regularized_gauge(&self, s: f64, t: f64, sp: &SpaceParams) -> f64 {
        let a = sp.a();
        let rho = gauge_st(s, t, sp);
        if self.eps == 0.0 {
            return rho;
        }
        (rho.powf(2.0 * a) + self.eps.powf(2.0 * a)).powf(1.0 / (2.0 * a))
    }
}

impl Potential for InverseQuartic {
    fn name(&self) -> String {
        format!("c0/rho_eps^4 (c0 = {}, eps = {})", self.c0, self.eps)
    }
    fn eval(&self, s: f64, t: f64, sp: &SpaceParams) -> Result<f64> {
        let r = self.regularized_gauge(s, t, sp);
        if r == 0.0 {
            return Err(Error::DegeneratePoint("c0 / rho^4"));
        }
        Ok(self.c0 / r.powi(4))
    }
}

/// `V = Delta_X^2 u / u`, the potential for which a bi-radial `u` solves the
/// equation exactly.
pub struct ConsistentPotential {
    pub u: FieldRef,
}

impl Potential for ConsistentPotential {
    fn name(&self) -> String {
        format!("lap^2({0})/{0}", self.u.meta().name)
    }
    fn eval(&self, s: f64, t: f64, sp: &SpaceParams) -> Result<f64> {
        let r = self.u.radial(s, t, sp, 2)?;
        let (u, b) = (r.levels[0][0], r.levels[2][0]);
        match (u == 0.0, b == 0.0) {
            (false, _) => Ok(b / u),
            (true, true) => Ok(0.0),
            (true, false) => Err(Error::DegeneratePoint("consistent potential at a zero of u")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmallnessVerdict {
    pub c0: f64,
    pub m: usize,
    pub q: f64,
    /// `4 c0 / ((m-2)^2 (Q-6)) + 4 / (m-2)^4 < 1`
    pub doubling: bool,
    pub doubling_margin: f64,
    /// `4 (c0 + 1) / ((m-2)^2 (Q-6)) < 1`
    pub unique_continuation: bool,
    pub unique_continuation_margin: f64,
    /// `4 c0 / ((m-2)^2 (Q-6)) < 1`
    pub positivity: bool,
    pub positivity_margin: f64,
}

/// Evaluates the three smallness conditions on `c0`; margins are `1 - lhs`.
pub fn smallness_check(c0: f64, sp: &SpaceParams) -> Result<SmallnessVerdict> {
    if !sp.hardy_ok() {
        return input(format!("smallness conditions need m > 2, got m = {}", sp.m()));
    }
    if !sp.rellich_ok() {
        return input(format!("smallness conditions need Q > 6, got Q = {}", sp.q()));
    }
    let (m2, q6) = (sp.m() as f64 - 2.0, sp.q() - 6.0);
    let base = 4.0 / (m2 * m2 * q6);
    let d = 1.0 - (base * c0 + 4.0 / m2.powi(4));
    let u = 1.0 - base * (c0 + 1.0);
    let p = 1.0 - base * c0;
    Ok(SmallnessVerdict {
        c0,
        m: sp.m(),
        q: sp.q(),
        doubling: d > 0.0,
        doubling_margin: d,
        unique_continuation: u > 0.0,
        unique_continuation_margin: u,
        positivity: p > 0.0,
        positivity_margin: p,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub r: f64,
    pub h1: f64,
    pub h2: f64,
    pub h: f64,
    /// Volume forms.
    pub i1: f64,
    pub i2: f64,
    /// Boundary forms `r^{-1} int_{dB_r} u Z u psi / |grad rho|` and the `w` analogue.
    pub i1b: f64,
    pub i2b: f64,
    pub i: f64,
    pub n: f64,
    pub energy_u: f64,
    pub energy_w: f64,
    /// `int_{B_r} (u^2 + w^2) psi`
    pub mass: f64,
    /// `int_{B_r} u^2 psi`
    pub mass_u: f64,
    pub mass_2r: Option<f64>,
    pub h_2r: Option<f64>,
    pub h_err: f64,
    pub i1_err: f64,
    pub i2_err: f64,
    pub i1b_err: f64,
    pub i2b_err: f64,
    pub i_err: f64,
    pub n_err: f64,
    pub mass_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyProfile {
    pub q: f64,
    pub method: Method,
    pub rows: Vec<ProfileRow>,
    /// First radius where `H` fell inside its error budget, if any.
    pub truncated_at: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ProfileOptions {
    /// Also integrate over `B_{2r}` for the doubling checks.
    pub doubling: bool,
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return input("radius grid is empty");
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return input("radius grid must be positive and strictly increasing");
    }
    Ok(())
}

/// Log-uniform grid with `per_decade` points per decade from `r_min` to `r_max`.
pub fn log_grid(r_min: f64, r_max: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max > r_min && per_decade > 0) {
        return input(format!("bad radius grid [{r_min}, {r_max}] with {per_decade} per decade"));
    }
    let n = ((r_max / r_min).log10() * per_decade as f64).round().max(1.0) as usize;
    let step = (r_max / r_min).ln() / n as f64;
    Ok((0..=n).map(|k| if k == n { r_max } else { r_min * (step * k as f64).exp() }).collect())
}

struct PointData {
    u: crate::fields::Sample,
    w: crate::fields::Sample,
    v: f64,
}

fn point_data(u: &dyn AnalyticField, w: &dyn AnalyticField, v: &dyn Potential, node: &Node, sp: &SpaceParams) -> Result<PointData> {
    Ok(PointData { u: sample(u, node, sp, false)?, w: sample(w, node, sp, false)?, v: v.eval(node.s, node.t, sp)? })
}

/// Samples `H`, `I`, `N` and the auxiliary integrals over `radii`.
pub fn compute_profile(
    u: &dyn AnalyticField,
    w: &dyn AnalyticField,
    v: &dyn Potential,
    quad: &Quadrature,
    radii: &[f64],
    opts: ProfileOptions,
) -> Result<FrequencyProfile> {
    check_radii(radii)?;
    let sp = *quad.space();
    let mut rows = Vec::with_capacity(radii.len());
    let mut truncated_at = None;
    for &r in radii {
        let ball = quad.ball_multi(r, &[Weight::ONE; 6], &[], |node, o| {
            let d = point_data(u, w, v, node, &sp)?;
            o[0] = d.u.grad2;
            o[1] = d.u.value * d.w.value;
            o[2] = d.w.grad2;
            o[3] = d.v * d.w.value * d.u.value;
            o[4] = (d.u.value.powi(2) + d.w.value.powi(2)) * node.psi;
            o[5] = d.u.value.powi(2) * node.psi;
            Ok(())
        })?;
        let psi = Weight::psi(&sp);
        let sph = quad.sphere_multi(r, &[psi; 4], |node, o| {
            let su = sample(u, node, &sp, false)?;
            let sw = sample(w, node, &sp, false)?;
            o[0] = su.value * su.value;
            o[1] = sw.value * sw.value;
            o[2] = su.value * su.zu / r;
            o[3] = sw.value * sw.zu / r;
            Ok(())
        })?;
        let r4 = r.powi(4);
        let (h1, h2) = (sph[0].value, sph[1].value);
        let h = h1 + r4 * h2;
        let h_err = sph[0].error_estimate + r4 * sph[1].error_estimate;
        if !(h > 3.0 * h_err) || h <= 0.0 {
            if rows.is_empty() {
                return Err(Error::DegenerateH { r });
            }
            truncated_at = Some(r);
            break;
        }
        let i1 = ball[0].value + ball[1].value;
        let i2 = ball[2].value + ball[3].value;
        let i1_err = ball[0].error_estimate + ball[1].error_estimate;
        let i2_err = ball[2].error_estimate + ball[3].error_estimate;
        let i = i1 + r4 * i2;
        let i_err = i1_err + r4 * i2_err;
        let n = r * i / h;
        let n_err = r * i_err / h + n.abs() * h_err / h;
        let (mut mass_2r, mut h_2r) = (None, None);
        if opts.doubling {
            let r2 = 2.0 * r;
            let b2 = quad.ball_multi(r2, &[Weight::ONE], &[], |node, o| {
                let su = sample(u, node, &sp, false)?;
                let sw = sample(w, node, &sp, false)?;
                o[0] = (su.value.powi(2) + sw.value.powi(2)) * node.psi;
                Ok(())
            })?;
            let s2 = quad.sphere_multi(r2, &[psi; 2], |node, o| {
                o[0] = sample(u, node, &sp, false)?.value.powi(2);
                o[1] = sample(w, node, &sp, false)?.value.powi(2);
                Ok(())
            })?;
            mass_2r = Some(b2[0].value);
            h_2r = Some(s2[0].value + r2.powi(4) * s2[1].value);
        }
        rows.push(ProfileRow {
            r,
            h1,
            h2,
            h,
            i1,
            i2,
            i1b: sph[2].value,
            i2b: sph[3].value,
            i,
            n,
            energy_u: ball[0].value,
            energy_w: ball[2].value,
            mass: ball[4].value,
            mass_u: ball[5].value,
            mass_2r,
            h_2r,
            h_err,
            i1_err,
            i2_err,
            i1b_err: sph[2].error_estimate,
            i2b_err: sph[3].error_estimate,
            i_err,
            n_err,
            mass_err: ball[4].error_estimate,
        });
    }
    Ok(FrequencyProfile { q: sp.q(), method: quad.method(), rows, truncated_at })
}

/// Derivative of `ln f` with respect to `ln r` at every grid point: five-point
/// stencil on log-uniform grids where possible, three-point otherwise.
pub fn log_slope(radii: &[f64], f: &[f64]) -> Vec<Option<f64>> {
    let n = radii.len();
    let x: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let y: Vec<Option<f64>> = f.iter().map(|v| (*v > 0.0).then(|| v.ln())).collect();
    let uniform = n > 2 && {
        let h = x[1] - x[0];
        x.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs())
    };
    (0..n)
        .map(|k| {
            if k == 0 || k + 1 == n {
                return None;
            }
            if uniform && k >= 2 && k + 2 < n {
                let h = x[1] - x[0];
                let (a, b, c, d) = (y[k - 2]?, y[k - 1]?, y[k + 1]?, y[k + 2]?);
                return Some((a - 8.0 * b + 8.0 * c - d) / (12.0 * h));
            }
            let (y0, y1, y2) = (y[k - 1]?, y[k]?, y[k + 1]?);
            let (h0, h1) = (x[k] - x[k - 1], x[k + 1] - x[k]);
            Some((-h1 / (h0 * (h0 + h1))) * y0 + ((h1 - h0) / (h0 * h1)) * y1 + (h0 / (h1 * (h0 + h1))) * y2)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HDerivativeRow {
    pub r: f64,
    pub h_prime_fd: f64,
    pub h_prime_identity: f64,
    /// Relative to `|H'_fd|`.
    pub rel_residual: f64,
    /// Relative to the sum of the magnitudes of the three identity terms;
    /// stays meaningful where `H'` changes sign.
    pub scaled_residual: f64,
}

/// Compares a numerical `H'` with `(Q - 1) H / r + 2 I + 4 r^3 H_2`.
pub fn check_h_derivative(p: &FrequencyProfile) -> Vec<HDerivativeRow> {
    let radii: Vec<f64> = p.rows.iter().map(|r| r.r).collect();
    let h: Vec<f64> = p.rows.iter().map(|r| r.h).collect();
    log_slope(&radii, &h)
        .into_iter()
        .zip(&p.rows)
        .filter_map(|(sl, row)| {
            let fd = sl? * row.h / row.r;
            let terms = [(p.q - 1.0) * row.h / row.r, 2.0 * row.i, 4.0 * row.r.powi(3) * row.h2];
            let id: f64 = terms.iter().sum();
            let scale: f64 = terms.iter().map(|v| v.abs()).sum();
            let res = (fd - id).abs();
            Some(HDerivativeRow { r: row.r, h_prime_fd: fd, h_prime_identity: id, rel_residual: res / fd.abs(), scaled_residual: res / scale })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub r0: f64,
    pub threshold: f64,
    /// Grid points in `{N > max(1, N(r0))}`.
    pub omega: Vec<bool>,
    pub empty: bool,
    /// `max(0, sup_Omega -r (ln N)')`.
    pub beta_hat: f64,
    pub violations: usize,
}

/// Fits the smallest `beta` with `N'/N >= -beta / r` on `Omega_{r0}`.
pub fn check_monotonicity(p: &FrequencyProfile, r0: f64) -> Result<MonotonicityReport> {
    let radii: Vec<f64> = p.rows.iter().map(|r| r.r).collect();
    let n: Vec<f64> = p.rows.iter().map(|r| r.n).collect();
    if radii.is_empty() {
        return input("empty profile");
    }
    let n_r0 = interp_log(&radii, &n, r0)?;
    let threshold = n_r0.max(1.0);
    let omega: Vec<bool> = n.iter().map(|v| *v > threshold + 1e-12).collect();
    let slopes = log_slope(&radii, &n);
    let mut beta_hat: f64 = 0.0;
    for (k, sl) in slopes.iter().enumerate() {
        if let (true, Some(sl)) = (omega[k], sl) {
            beta_hat = beta_hat.max(-sl);
        }
    }
    let violations = slopes.iter().zip(&omega).filter(|(sl, om)| **om && sl.is_some_and(|s| s < -beta_hat - 1e-12)).count();
    Ok(MonotonicityReport { r0, threshold, empty: !omega.iter().any(|b| *b), omega, beta_hat, violations })
}

fn interp_log(radii: &[f64], vals: &[f64], r: f64) -> Result<f64> {
    if r < radii[0] * (1.0 - 1e-12) || r > radii[radii.len() - 1] * (1.0 + 1e-12) {
        return input(format!("r0 = {r} lies outside the profile range"));
    }
    let k = radii.partition_point(|x| *x < r).min(radii.len() - 1);
    if k == 0 || (radii[k] - r).abs() <= 1e-12 * r {
        return Ok(vals[k]);
    }
    let t = (r.ln() - radii[k - 1].ln()) / (radii[k].ln() - radii[k - 1].ln());
    Ok(vals[k - 1] + t * (vals[k] - vals[k - 1]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingReport {
    pub radii: Vec<f64>,
    /// `int_{B_2r} (u^2 + w^2) psi / int_{B_r} (u^2 + w^2) psi`
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub gamma_hat: f64,
    /// Smallest `A` with `H(2r) <= 2^{Q+3} exp(A r^{-gamma}) H(r)` on the grid.
    pub a_hat: f64,
    pub h_ratios: Vec<f64>,
    pub h_level_holds: bool,
}

pub fn check_doubling(p: &FrequencyProfile, beta_hat: f64) -> Result<DoublingReport> {
    let mut radii = Vec::new();
    let mut ratios = Vec::new();
    let mut h_ratios = Vec::new();
    for row in &p.rows {
        let (Some(m2), Some(h2r)) = (row.mass_2r, row.h_2r) else {
            return input("profile was computed without the doubling integrals");
        };
        radii.push(row.r);
        ratios.push(m2 / row.mass);
        h_ratios.push(h2r / row.h);
    }
    let gamma_hat = if beta_hat > 2.0 { beta_hat - 2.0 } else { 0.0 };
    let base = (p.q + 3.0) * 2f64.ln();
    let a_hat = radii.iter().zip(&h_ratios).map(|(r, hr)| (hr.ln() - base).max(0.0) * r.powf(gamma_hat)).fold(0.0, f64::max);
    let h_level_holds = radii
        .iter()
        .zip(&h_ratios)
        .all(|(r, hr)| hr.ln() <= base + a_hat * r.powf(-gamma_hat) + 1e-12 * (1.0 + hr.ln().abs()));
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DoublingReport { radii, ratios, max_ratio, gamma_hat, a_hat, h_ratios, h_level_holds })
}

/// Smallest `C` with `int |grad_X u|^2 + r^4 int |grad_X w|^2 <= C I(r)` over the
/// grid points where `H / r < I`; `None` when there are no such points.
pub fn energy_claim_constant(p: &FrequencyProfile) -> Option<f64> {
    p.rows
        .iter()
        .filter(|row| row.h / row.r < row.i)
        .map(|row| (row.energy_u + row.r.powi(4) * row.energy_w) / row.i)
        .reduce(f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaccioppoliReport {
    pub r: f64,
    /// `int_{B_r} (Delta_X u)^2`
    pub lhs: f64,
    /// `2 int_{B_2r} V u^2 eta^4`
    pub potential_term: f64,
    /// `int_{B_2r} u^2`
    pub mass: f64,
    /// `(lhs - potential_term) r^4 / mass`, clipped at zero.
    pub empirical_c: f64,
    pub error_budget: f64,
}

/// Interior bound of `(Delta_X u)^2` by lower-order masses on a doubled ball,
/// with the quintic smoothstep cutoff. `w` must be `Delta_X u`.
pub fn check_caccioppoli(
    u: &dyn AnalyticField,
    w: &dyn AnalyticField,
    v: &dyn Potential,
    r: f64,
    quad: &Quadrature,
) -> Result<CaccioppoliReport> {
    let sp = *quad.space();
    let eta = Cutoff::new(r)?;
    let res = quad.ball_multi(2.0 * r, &[Weight::ONE; 3], &[r], |node, o| {
        let su = sample(u, node, &sp, false)?;
        let e = eta.eval(node.rho).0;
        o[0] = if node.rho < r { sample(w, node, &sp, false)?.value.powi(2) } else { 0.0 };
        o[1] = if e > 0.0 { 2.0 * v.eval(node.s, node.t, &sp)? * su.value.powi(2) * e.powi(4) } else { 0.0 };
        o[2] = su.value.powi(2);
        Ok(())
    })?;
    let (lhs, pot, mass) = (res[0].value, res[1].value, res[2].value);
    let empirical_c = if mass > 0.0 { ((lhs - pot) * r.powi(4) / mass).max(0.0) } else { 0.0 };
    Ok(CaccioppoliReport {
        r,
        lhs,
        potential_term: pot,
        mass,
        empirical_c,
        error_budget: res.iter().map(|q| q.error_estimate).sum(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DecayClass {
    FiniteOrder,
    SuperPolynomial,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VanishingFit {
    /// Slope of `ln M` against `ln r`.
    pub order: f64,
    /// Largest deviation from the power-law fit, in `ln M`.
    pub power_residual: f64,
    /// `M ~ exp(-B r^{-gamma})`: slope of `ln(-ln M)` against `ln(1/r)`.
    pub gamma: Option<f64>,
    pub b: Option<f64>,
    pub class: DecayClass,
}

pub const MIN_FIT_SAMPLES: usize = 5;

/// Fits ball masses `M(r)` near the origin by a power law and by an
/// exponential law and classifies the decay.
pub fn vanishing_order_fit(radii: &[f64], masses: &[f64]) -> Result<VanishingFit> {
    let pairs: Vec<(f64, f64)> =
        radii.iter().zip(masses).filter(|(r, m)| **r > 0.0 && **m > 0.0 && m.is_finite()).map(|(r, m)| (*r, *m)).collect();
    if pairs.len() < MIN_FIT_SAMPLES || radii.len() != masses.len() {
        return Err(Error::InsufficientRange { got: pairs.len(), needed: MIN_FIT_SAMPLES });
    }
    let lx: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let (slope, icpt) = least_squares(&lx, &ly);
    let power_residual = lx.iter().zip(&ly).map(|(x, y)| (y - slope * x - icpt).abs()).fold(0.0, f64::max);
    let range = ly.iter().copied().fold(f64::NEG_INFINITY, f64::max) - ly.iter().copied().fold(f64::INFINITY, f64::min);
    let (gamma, b) = if pairs.iter().all(|p| p.1 < 1.0) {
        let ex: Vec<f64> = pairs.iter().map(|p| -p.0.ln()).collect();
        let ey: Vec<f64> = pairs.iter().map(|p| (-p.1.ln()).ln()).collect();
        let (g, c) = least_squares(&ex, &ey);
        (Some(g), Some(c.exp()))
    } else {
        (None, None)
    };
    let class = if power_residual <= 0.02 * range.max(f64::MIN_POSITIVE) {
        DecayClass::FiniteOrder
    } else {
        DecayClass::SuperPolynomial
    };
    Ok(VanishingFit { order: slope, power_residual, gamma, b, class })
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sp() -> SpaceParams {
        SpaceParams::new(5, 1, 1.0).unwrap()
    }

    #[test]
    fn smallness_examples() {
        let v = smallness_check(0.0, &sp()).unwrap();
        assert!(v.doubling);
        assert_relative_eq!(v.doubling_margin, 1.0 - 4.0 / 81.0, max_relative = 1e-15);
        let v = smallness_check(2.25, &sp()).unwrap();
        assert!(!v.positivity);
        assert!(v.positivity_margin.abs() < 1e-15);
        let v = smallness_check(1.0, &sp()).unwrap();
        assert!(v.unique_continuation);
        assert_relative_eq!(1.0 - v.unique_continuation_margin, 8.0 / 9.0, max_relative = 1e-15);
        let low = SpaceParams::new(3, 1, 1.0).unwrap();
        assert!(matches!(smallness_check(0.1, &low), Err(Error::Input(_))));
    }

    fn synthetic(q: f64, radii: &[f64], h: impl Fn(f64) -> f64, n: impl Fn(f64) -> f64) -> FrequencyProfile {
        let rows = radii
            .iter()
            .map(|&r| {
                let hv = h(r);
                let nv = n(r);
                let iv = nv * hv / r;
                ProfileRow {
                    r,
                    h1: hv,
                    h2: 0.0,
                    h: hv,
                    i1: iv,
                    i2: 0.0,
                    i1b: iv,
                    i2b: 0.0,
                    i: iv,
                    n: nv,
                    energy_u: iv,
                    energy_w: 0.0,
                    mass: hv,
                    mass_u: hv,
                    mass_2r: Some(h(2.0 * r)),
                    h_2r: Some(h(2.0 * r)),
                    h_err: 0.0,
                    i1_err: 0.0,
                    i2_err: 0.0,
                    i1b_err: 0.0,
                    i2b_err: 0.0,
                    i_err: 0.0,
                    n_err: 0.0,
                    mass_err: 0.0,
                }
            })
            .collect();
        FrequencyProfile { q, method: Method::Reduced2d, rows, truncated_at: None }
    }

    #[test]
    fn h_identity_exact_on_power_law() {
        let radii = log_grid(0.5, 2.0, 64).unwrap();
        let p = synthetic(7.0, &radii, |r| r.powi(6), |_| 0.0);
        let res = check_h_derivative(&p);
        assert_eq!(res.len(), radii.len() - 2);
        assert!(res.iter().all(|row| row.rel_residual < 1e-10));
    }

    #[test]
    fn constant_frequency_has_zero_beta() {
        let radii = log_grid(0.5, 2.0, 32).unwrap();
        let p = synthetic(7.0, &radii, |r| r.powi(8), |_| 1.0);
        let m = check_monotonicity(&p, 0.5).unwrap();
        assert!(m.empty);
        assert_eq!(m.beta_hat, 0.0);
        let p = synthetic(7.0, &radii, |r| r.powi(8), |_| 3.0);
        let m = check_monotonicity(&p, 0.5).unwrap();
        assert!(m.empty, "ties are not in Omega");
        // decreasing frequency N = 3 r^{-1/2} on [0.5, 2] above threshold max(1, N(2)) = 2.12
        let p = synthetic(7.0, &radii, |r| r.powi(8), |r| 3.0 / r.sqrt());
        let m = check_monotonicity(&p, 2.0).unwrap();
        assert!(!m.empty);
        assert!((m.beta_hat - 0.5).abs() < 1e-6);
        assert_eq!(m.violations, 0);
    }

    #[test]
    fn doubling_of_power_law() {
        let radii = log_grid(0.1, 0.5, 16).unwrap();
        let p = synthetic(7.0, &radii, |r| r.powi(9), |_| 1.0);
        let d = check_doubling(&p, 0.0).unwrap();
        assert!(d.ratios.iter().all(|v| (v - 512.0).abs() < 1e-9));
        assert!(d.h_level_holds);
        assert_eq!(d.a_hat, 0.0);
        let p = synthetic(7.0, &radii, |r| r.powi(14), |_| 1.0);
        let d = check_doubling(&p, 3.0).unwrap();
        assert_eq!(d.gamma_hat, 1.0);
        assert!(d.a_hat > 0.0 && d.h_level_holds);
    }

    #[test]
    fn vanishing_fits() {
        let radii: Vec<f64> = (0..20).map(|k| 0.05 + 0.0225 * k as f64).collect();
        let m: Vec<f64> = radii.iter().map(|r| 3.0 * r.powi(9)).collect();
        let f = vanishing_order_fit(&radii, &m).unwrap();
        assert_relative_eq!(f.order, 9.0, max_relative = 1e-10);
        assert_eq!(f.class, DecayClass::FiniteOrder);
        let m: Vec<f64> = radii.iter().map(|r| (-1.0 / r).exp()).collect();
        let f = vanishing_order_fit(&radii, &m).unwrap();
        assert_eq!(f.class, DecayClass::SuperPolynomial);
        assert!((f.gamma.unwrap() - 1.0).abs() < 0.05);
        assert!(matches!(vanishing_order_fit(&radii[..4], &m[..4]), Err(Error::InsufficientRange { .. })));
    }

    #[test]
    fn log_grid_density() {
        let g = log_grid(0.5, 2.0, 64).unwrap();
        assert_eq!(g.first(), Some(&0.5));
        assert_eq!(g.last(), Some(&2.0));
        assert_eq!(g.len(), 40);
    }
}
