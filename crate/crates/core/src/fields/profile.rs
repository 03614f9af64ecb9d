use std::sync::Arc;

use super::{finite_jet, AnalyticField, FieldMeta, RadialData};
use crate::error::{Error, Result};
use crate::geometry::{Jet, Point, SpaceParams};
use crate::taylor::{Series2, MAX_ORDER};

/// Profile `G(S, T)` of a bi-radial field, `u(x, y) = G(|x|^2, |y|^2)`.
pub type ProfileFn = dyn Fn(&Series2, &Series2, &SpaceParams) -> Series2 + Send + Sync;

/// Closed-form `Delta_X u` as a function of `(s, t)`.
pub type ExactLap = dyn Fn(f64, f64, &SpaceParams) -> f64 + Send + Sync;

/// A bi-radial field given by a profile expression; all derivatives come from
/// Taylor arithmetic on the expression.
#[derive(Clone)]
pub struct ProfileField {
    meta: FieldMeta,
    expr: Arc<ProfileFn>,
    exact_lap: Option<Arc<ExactLap>>,
}

impl ProfileField {
    pub fn new(meta: FieldMeta, expr: Arc<ProfileFn>) -> Self {
        ProfileField { meta, expr, exact_lap: None }
    }

    pub fn with_exact_laplacian(mut self, f: Arc<ExactLap>) -> Self {
        self.exact_lap = Some(f);
        self
    }

    pub fn series(&self, s: f64, t: f64, sp: &SpaceParams, order: usize) -> Series2 {
        (self.expr)(&Series2::var_s(s * s, order), &Series2::var_t(t * t, order), sp)
    }
}

/// `Delta_X` of a profile, expressed again in `(S, T)`; lowers the order by 2.
pub fn lap_series(g: &Series2, s_var: &Series2, t_var: &Series2, sp: &SpaceParams) -> Series2 {
    let (m, n) = (sp.m() as f64, sp.n() as f64);
    let gs = g.d_s();
    let gss = gs.d_s();
    let gt = g.d_t();
    let gtt = gt.d_t();
    let x_part = gs.scale(2.0 * m) + *s_var * gss.scale(4.0);
    let y_part = gt.scale(2.0 * n) + *t_var * gtt.scale(4.0);
    x_part + s_var.powf(sp.alpha()) * y_part
}

impl AnalyticField for ProfileField {
    fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    fn radial(&self, s: f64, t: f64, sp: &SpaceParams, depth: usize) -> Result<RadialData> {
        let order = 2 * depth + 1;
        if order > MAX_ORDER {
            return Err(Error::Input(format!("Laplacian depth {depth} exceeds the series order")));
        }
        let sv = Series2::var_s(s * s, order);
        let tv = Series2::var_t(t * t, order);
        let mut g = (self.expr)(&sv, &tv, sp);
        let mut levels = Vec::with_capacity(depth + 1);
        for k in 0..=depth {
            let lv = [g.value(), 2.0 * s * g.coeff(1, 0), 2.0 * t * g.coeff(0, 1)];
            if lv.iter().any(|v| !v.is_finite()) {
                return Err(Error::DegeneratePoint("bi-radial profile"));
            }
            levels.push(lv);
            if k < depth {
                g = lap_series(&g, &sv, &tv, sp);
            }
        }
        Ok(RadialData { levels })
    }

    fn value_st(&self, s: f64, t: f64, sp: &SpaceParams) -> Result<f64> {
        let v = self.series(s, t, sp, 0).value();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::DegeneratePoint("bi-radial profile"))
        }
    }

    fn laplacian_st(&self, s: f64, t: f64, sp: &SpaceParams) -> Result<f64> {
        // closed forms can be 0/0 at the origin, the series can fail on the axis
        let mut v = self.exact_lap.as_ref().map_or(f64::NAN, |f| f(s, t, sp));
        if !v.is_finite() {
            let sv = Series2::var_s(s * s, 3);
            let tv = Series2::var_t(t * t, 3);
            v = lap_series(&(self.expr)(&sv, &tv, sp), &sv, &tv, sp).value();
        }
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::DegeneratePoint("bi-radial Laplacian"))
        }
    }

    fn jet(&self, p: &Point, sp: &SpaceParams, order: usize) -> Result<Jet> {
        let order = order.min(3);
        let z = p.flat();
        let d = z.len();
        let g = self.series(p.s(), p.t(), sp, order.max(1));
        // block of each coordinate: 0 for S, 1 for T
        let blk = |a: usize| (a >= sp.m()) as usize;
        let g1 = |a: usize| if blk(a) == 0 { g.partial(1, 0) } else { g.partial(0, 1) };
        let g2 = |a: usize, b: usize| g.partial(2 - blk(a) - blk(b), blk(a) + blk(b));
        let g3 = |a: usize, b: usize, c: usize| {
            let nt = blk(a) + blk(b) + blk(c);
            g.partial(3 - nt, nt)
        };
        let delta = |a: usize, b: usize| (a == b) as u8 as f64;
        let grad = (0..d).map(|a| 2.0 * z[a] * g1(a)).collect();
        let mut hess = vec![0.0; d * d];
        if order >= 2 {
            for a in 0..d {
                for b in 0..d {
                    hess[a * d + b] = 2.0 * delta(a, b) * g1(a) + 4.0 * z[a] * z[b] * g2(a, b);
                }
            }
        }
        let third = (order >= 3).then(|| {
            let mut t3 = vec![0.0; d * d * d];
            for a in 0..d {
                for b in 0..d {
                    for c in 0..d {
                        t3[(a * d + b) * d + c] = 4.0
                            * (delta(a, b) * z[c] * g2(a, c) + delta(a, c) * z[b] * g2(a, b) + delta(b, c) * z[a] * g2(a, b))
                            + 8.0 * z[a] * z[b] * z[c] * g3(a, b, c);
                    }
                }
            }
            t3
        });
        finite_jet(Jet { value: g.value(), grad, hess, third }, order, "profile jet")
    }

    fn exact_laplacian(&self, p: &Point, sp: &SpaceParams) -> Option<Result<f64>> {
        let f = self.exact_lap.as_ref()?;
        let v = f(p.s(), p.t(), sp);
        Some(if v.is_finite() { Ok(v) } else { Err(Error::DegeneratePoint("closed-form Laplacian")) })
    }
}
