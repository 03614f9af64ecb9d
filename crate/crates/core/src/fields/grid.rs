use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::AnalyticField;
use crate::error::{input, Error, Result};
use crate::geometry::SpaceParams;

/// Uniform node layout on `[0, s_max] x [0, t_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub s_max: f64,
    pub t_max: f64,
    pub ns: usize,
    pub nt: usize,
}

impl GridSpec {
    pub fn new(s_max: f64, t_max: f64, ns: usize, nt: usize) -> Result<Self> {
        let g = GridSpec { s_max, t_max, ns, nt };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns < 2 || self.nt < 2 {
            return input(format!("grid needs at least 2 nodes per direction, got {} x {}", self.ns, self.nt));
        }
        if !(self.s_max > 0.0 && self.t_max > 0.0 && self.s_max.is_finite() && self.t_max.is_finite()) {
            return input("grid extents must be positive");
        }
        Ok(())
    }

    pub fn hs(&self) -> f64 {
        self.s_max / (self.ns - 1) as f64
    }

    pub fn ht(&self) -> f64 {
        self.t_max / (self.nt - 1) as f64
    }

    pub fn s(&self, i: usize) -> f64 {
        if i == self.ns - 1 {
            self.s_max
        } else {
            i as f64 * self.hs()
        }
    }

    pub fn t(&self, j: usize) -> f64 {
        if j == self.nt - 1 {
            self.t_max
        } else {
            j as f64 * self.ht()
        }
    }

    pub fn len(&self) -> usize {
        self.ns * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nt + j
    }
}

/// Samples of a bi-radial field `u(s, t)`, `s = |x|`, `t = |y|`, even in both
/// variables. Values are row-major with `s` as the slow index.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return input(format!("expected {} grid values, got {}", spec.len(), values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return input("grid values must be finite");
        }
        Ok(GridField { spec, values })
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    /// Bilinear interpolation inside the rectangle.
    pub fn bilinear(&self, s: f64, t: f64) -> Result<f64> {
        let g = &self.spec;
        let tol = 1e-12 * g.s_max.max(g.t_max);
        if s < -tol || t < -tol || s > g.s_max + tol || t > g.t_max + tol {
            return Err(Error::OutOfDomain { s, t });
        }
        let (fs, ft) = ((s / g.hs()).clamp(0.0, (g.ns - 1) as f64), (t / g.ht()).clamp(0.0, (g.nt - 1) as f64));
        let i = (fs.floor() as usize).min(g.ns - 2);
        let j = (ft.floor() as usize).min(g.nt - 2);
        let (u, v) = (fs - i as f64, ft - j as f64);
        Ok((1.0 - u) * (1.0 - v) * self.at(i, j)
            + u * (1.0 - v) * self.at(i + 1, j)
            + (1.0 - u) * v * self.at(i, j + 1)
            + u * v * self.at(i + 1, j + 1))
    }

    /// Writes the `s-grid` row, the `t-grid` row, then one row of values per
    /// `s` node, all floats with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().flexible(true).from_writer(w);
        let g = &self.spec;
        let row = |label: &str, vals: &mut dyn Iterator<Item = f64>| -> Vec<String> {
            std::iter::once(label.to_string()).chain(vals.map(fmt_f64)).collect()
        };
        wr.write_record(row("s-grid", &mut (0..g.ns).map(|i| g.s(i)))).map_err(csv_err)?;
        wr.write_record(row("t-grid", &mut (0..g.nt).map(|j| g.t(j)))).map_err(csv_err)?;
        for i in 0..g.ns {
            wr.write_record((0..g.nt).map(|j| fmt_f64(self.at(i, j)))).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
        let mut rows = rd.records();
        let mut axis = |label: &str| -> Result<Vec<f64>> {
            let rec = rows.next().ok_or_else(|| Error::Input(format!("missing {label} row")))?.map_err(csv_err)?;
            if rec.get(0) != Some(label) {
                return input(format!("expected a {label} row"));
            }
            rec.iter().skip(1).map(parse_f64).collect()
        };
        let s = axis("s-grid")?;
        let t = axis("t-grid")?;
        if s.len() < 2 || t.len() < 2 {
            return input("grid axes need at least 2 nodes");
        }
        let spec = GridSpec::new(s[s.len() - 1], t[t.len() - 1], s.len(), t.len())?;
        let mut values = Vec::with_capacity(spec.len());
        for rec in rows {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != spec.nt {
                return input(format!("value row has {} entries, expected {}", rec.len(), spec.nt));
            }
            for f in rec.iter() {
                values.push(parse_f64(f)?);
            }
        }
        GridField::new(spec, values)
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Input(format!("not a number: `{s}`")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Input(format!("csv: {e}"))
}

/// Samples a bi-radial field at the grid nodes.
pub fn sample_to_grid(f: &dyn AnalyticField, spec: GridSpec, sp: &SpaceParams) -> Result<GridField> {
    spec.validate()?;
    if !f.meta().biradial {
        return Err(Error::NonBiradial(f.meta().name.clone()));
    }
    let mut values = Vec::with_capacity(spec.len());
    for i in 0..spec.ns {
        for j in 0..spec.nt {
            values.push(f.value_st(spec.s(i), spec.t(j), sp)?);
        }
    }
    GridField::new(spec, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::by_name;
    use crate::geometry::gauge_st;

    #[test]
    fn constant_samples_to_ones() {
        let sp = SpaceParams::new(5, 1, 1.0).unwrap();
        let g = sample_to_grid(by_name("one", 1.0).unwrap().as_ref(), GridSpec::new(1.0, 1.0, 5, 4).unwrap(), &sp).unwrap();
        assert!(g.values.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(matches!(GridSpec::new(1.0, 1.0, 0, 4), Err(Error::Input(_))));
        let sp = SpaceParams::new(5, 1, 1.0).unwrap();
        let bad = GridSpec { s_max: 1.0, t_max: 1.0, ns: 1, nt: 0 };
        assert!(sample_to_grid(by_name("one", 1.0).unwrap().as_ref(), bad, &sp).is_err());
    }

    #[test]
    fn non_biradial_rejected() {
        let sp = SpaceParams::new(5, 1, 1.0).unwrap();
        let spec = GridSpec::new(1.0, 1.0, 4, 4).unwrap();
        assert!(matches!(sample_to_grid(by_name("x1", 1.0).unwrap().as_ref(), spec, &sp), Err(Error::NonBiradial(_))));
    }

    #[test]
    fn bilinear_round_trip_is_second_order() {
        let sp = SpaceParams::new(5, 1, 1.0).unwrap();
        let f = by_name("rho2", 1.0).unwrap();
        let probes: Vec<(f64, f64)> = (0..40).map(|k| (0.013 + 0.0243 * k as f64, 0.97 - 0.0231 * k as f64)).collect();
        let err = |n: usize| {
            let g = sample_to_grid(f.as_ref(), GridSpec::new(1.0, 1.0, n, n).unwrap(), &sp).unwrap();
            probes.iter().map(|&(s, t)| (g.bilinear(s, t).unwrap() - gauge_st(s, t, &sp).powi(2)).abs()).fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(33), err(65), err(129));
        let order = ((e1 / e2).log2() + (e2 / e3).log2()) / 2.0;
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let sp = SpaceParams::new(5, 1, 0.5).unwrap();
        let g = sample_to_grid(by_name("gauss", 1.0).unwrap().as_ref(), GridSpec::new(0.7, 1.3, 9, 6).unwrap(), &sp).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("s-grid,"));
        assert_eq!(text.lines().nth(1).unwrap().split(',').next(), Some("t-grid"));
        let back = GridField::read_csv(&buf[..]).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn outside_rectangle() {
        let g = GridField::new(GridSpec::new(1.0, 1.0, 3, 3).unwrap(), vec![0.0; 9]).unwrap();
        assert!(matches!(g.bilinear(1.5, 0.2), Err(Error::OutOfDomain { .. })));
    }
}
