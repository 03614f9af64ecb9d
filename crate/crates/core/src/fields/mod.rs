//! Test fields: analytic probes with exact jets, and discrete bi-radial grids.

mod catalog;
mod cutoff;
mod grid;
mod profile;

use std::sync::Arc;

use serde::Serialize;

pub use catalog::{
    biradial_polynomial, bump, by_name, catalog_names, coordinate_field, exp_linear, gaussian, rho_power, zero, Dilated,
    LaplacianOf, CATALOG,
};
pub use cutoff::Cutoff;
pub use grid::{sample_to_grid, GridField, GridSpec};
pub use profile::{lap_series, ProfileField, ProfileFn};

use crate::error::{Error, Result};
use crate::geometry::{grad_laplace_x, horizontal_gradient, laplace_x, z_derivative, Jet, Point, SpaceParams};
use crate::quadrature::Node;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Smoothness {
    Analytic,
    /// Finitely many continuous derivatives.
    C(u8),
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldMeta {
    pub name: String,
    pub smoothness: Smoothness,
    /// Depends only on `(|x|, |y|)`.
    pub biradial: bool,
    /// Homogeneity degree when it does not depend on the geometry.
    pub homogeneity: Option<f64>,
    /// `Delta_X f = 0` identically.
    pub harmonic: bool,
}

impl FieldMeta {
    pub fn new(name: impl Into<String>) -> Self {
        FieldMeta { name: name.into(), smoothness: Smoothness::Analytic, biradial: true, homogeneity: None, harmonic: false }
    }
}

/// Bi-radial data at `(s, t)`: `levels[k] = [L^k u, d_s L^k u, d_t L^k u]`
/// with `L = Delta_X`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialData {
    pub levels: Vec<[f64; 3]>,
}

pub trait AnalyticField: Send + Sync {
    fn meta(&self) -> &FieldMeta;

    /// Euclidean jet with derivatives up to `order` (at most 3).
    fn jet(&self, p: &Point, sp: &SpaceParams, order: usize) -> Result<Jet>;

    /// Bi-radial data with `depth` applications of `Delta_X`.
    fn radial(&self, _s: f64, _t: f64, _sp: &SpaceParams, _depth: usize) -> Result<RadialData> {
        Err(Error::NonBiradial(self.meta().name.clone()))
    }

    /// Value of a bi-radial field at `(s, t)`.
    fn value_st(&self, s: f64, t: f64, sp: &SpaceParams) -> Result<f64> {
        Ok(self.radial(s, t, sp, 0)?.levels[0][0])
    }

    /// Value of `Delta_X f` at `(s, t)`. Finite on the axis `s = 0` even where
    /// the derivatives in `radial` are not.
    fn laplacian_st(&self, s: f64, t: f64, sp: &SpaceParams) -> Result<f64> {
        Ok(self.radial(s, t, sp, 1)?.levels[1][0])
    }

    /// Degree `k` with `f(delta_lambda p) = lambda^k f(p)`, if any.
    fn homogeneity(&self, _sp: &SpaceParams) -> Option<f64> {
        self.meta().homogeneity
    }

    /// Hand-derived closed form of `Delta_X f`, when one is tabulated.
    fn exact_laplacian(&self, _p: &Point, _sp: &SpaceParams) -> Option<Result<f64>> {
        None
    }
}

pub type FieldRef = Arc<dyn AnalyticField>;

/// Pointwise quantities a check needs from a field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sample {
    pub value: f64,
    /// `|grad_X u|^2`
    pub grad2: f64,
    /// `Z u`
    pub zu: f64,
    /// `Delta_X u`, NaN unless requested.
    pub lap: f64,
    /// `|grad_X Delta_X u|^2`, NaN unless requested.
    pub lap_grad2: f64,
}

/// Evaluates `u` at a quadrature node, through the bi-radial reduction when
/// available and through the ambient jet otherwise.
pub fn sample(u: &dyn AnalyticField, node: &Node, sp: &SpaceParams, with_lap: bool) -> Result<Sample> {
    if u.meta().biradial {
        let (s, t) = (node.s, node.t);
        let r = u.radial(s, t, sp, with_lap as usize)?;
        let w2 = s.powf(2.0 * sp.alpha());
        let [v, us, ut] = r.levels[0];
        let mut out = Sample { value: v, grad2: us * us + w2 * ut * ut, zu: s * us + sp.a() * t * ut, lap: f64::NAN, lap_grad2: f64::NAN };
        if with_lap {
            let [l, ls, lt] = r.levels[1];
            out.lap = l;
            out.lap_grad2 = ls * ls + w2 * lt * lt;
        }
        return Ok(out);
    }
    let p = node.point.ok_or_else(|| Error::NonBiradial(u.meta().name.clone()))?;
    let j = u.jet(p, sp, if with_lap { 3 } else { 1 })?;
    let g = horizontal_gradient(&j, p, sp);
    let mut out = Sample {
        value: j.value,
        grad2: g.iter().map(|v| v * v).sum(),
        zu: z_derivative(&j, p, sp),
        lap: f64::NAN,
        lap_grad2: f64::NAN,
    };
    if with_lap {
        out.lap = laplace_x(&j, p, sp);
        out.lap_grad2 = grad_laplace_x(&j, p, sp)?.iter().map(|v| v * v).sum();
    }
    Ok(out)
}

/// Checks every entry of a jet up to `order` is finite.
pub(crate) fn finite_jet(j: Jet, order: usize, what: &'static str) -> Result<Jet> {
    let ok = j.value.is_finite()
        && (order < 1 || j.grad.iter().all(|v| v.is_finite()))
        && (order < 2 || j.hess.iter().all(|v| v.is_finite()))
        && (order < 3 || j.third.as_ref().is_none_or(|t| t.iter().all(|v| v.is_finite())));
    if ok {
        Ok(j)
    } else {
        Err(Error::DegeneratePoint(what))
    }
}
