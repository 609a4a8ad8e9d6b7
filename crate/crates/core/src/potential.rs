//! Scale fields recovered from closed one-forms on the `(t, r)` plane.
//!
//! A [`Potential`] integrates a scalar one-form `P dt + Q dr` by adaptive
//! quadrature along the L-shaped path from a base point. A [`PfaffField`]
//! integrates a completely integrable system `∂_t y = P(t, r, y)`,
//! `∂_r y = Q(t, r, y)` along the same path with the Runge–Kutta
//! integrator. Both are certified on a grid by comparing the L-path with the
//! transposed one, and tabulated for bicubic interpolation.

use std::sync::Arc;

use serde::Serialize;

use crate::ad::{Jet1, Jet2};
use crate::error::{Error, Result};
use crate::ode::{integrate_to, OdeOptions};
use crate::quadrature::integrate;
use crate::sampling::Grid;

/// A scalar one-form `(P, Q)` with first partials of each component.
pub type OneForm = Arc<dyn Fn(f64, f64) -> Result<(Jet1, Jet1)> + Send + Sync>;

/// `∫ P dt + Q dr` along the L-path `(t0, r0) → (t, r0) → (t, r)`.
fn l_path(form: &OneForm, from: (f64, f64), to: (f64, f64), tol: f64) -> Result<f64> {
    let leg1 = integrate(|s| Ok(form(s, from.1)?.0.value), from.0, to.0, 0.5 * tol)?;
    let leg2 = integrate(|s| Ok(form(to.0, s)?.1.value), from.1, to.1, 0.5 * tol)?;
    Ok(leg1 + leg2)
}

/// `∫ P dt + Q dr` along the transposed path `(t0, r0) → (t0, r) → (t, r)`.
fn transposed_path(form: &OneForm, from: (f64, f64), to: (f64, f64), tol: f64) -> Result<f64> {
    let leg1 = integrate(|s| Ok(form(from.0, s)?.1.value), from.1, to.1, 0.5 * tol)?;
    let leg2 = integrate(|s| Ok(form(s, to.1)?.0.value), from.0, to.0, 0.5 * tol)?;
    Ok(leg1 + leg2)
}

/// Certified line integral of a closed one-form: the L-path value, after
/// checking agreement with the transposed path to `path_tol`.
pub fn path_integral(
    form: &OneForm,
    from: (f64, f64),
    to: (f64, f64),
    quad_tol: f64,
    path_tol: f64,
) -> Result<f64> {
    let a = l_path(form, from, to, quad_tol)?;
    let b = transposed_path(form, from, to, quad_tol)?;
    let d = (a - b).abs();
    if d > path_tol * (1.0 + a.abs()) {
        return Err(Error::NotClosed {
            residual: d,
            t: to.0,
            r: to.1,
        });
    }
    Ok(a)
}

/// Largest `|∂_t Q − ∂_r P|` over the grid nodes, normalized by
/// `1 + |∂_r P| + |∂_t Q|`, and where it occurs.
pub fn curl_residual(form: &OneForm, grid: &Grid) -> Result<(f64, f64, f64)> {
    let mut worst = (0.0, grid.t_range.0, grid.r_range.0);
    for (t, r) in grid.points() {
        let (p, q) = form(t, r)?;
        let c = (q.d_t - p.d_r).abs() / (1.0 + p.d_r.abs() + q.d_t.abs());
        if c > worst.0 || c.is_nan() {
            worst = (c, t, r);
        }
    }
    Ok(worst)
}

/// Values and partials of a scalar field on the grid nodes, with bicubic
/// Hermite interpolation in between.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarTable {
    pub name: String,
    pub t_nodes: Vec<f64>,
    pub r_nodes: Vec<f64>,
    /// Row-major in `t`: `value[i * r_nodes.len() + j]` is at `(t_i, r_j)`.
    pub value: Vec<f64>,
    pub d_t: Vec<f64>,
    pub d_r: Vec<f64>,
    pub d_tr: Vec<f64>,
}

fn hermite(u: f64) -> ([f64; 2], [f64; 2]) {
    let u2 = u * u;
    let u3 = u2 * u;
    (
        [2.0 * u3 - 3.0 * u2 + 1.0, -2.0 * u3 + 3.0 * u2],
        [u3 - 2.0 * u2 + u, u3 - u2],
    )
}

fn locate(nodes: &[f64], x: f64) -> (usize, f64, f64) {
    let n = nodes.len();
    let mut i = match nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i,
        Err(i) => i.saturating_sub(1),
    };
    i = i.min(n - 2);
    let h = nodes[i + 1] - nodes[i];
    (i, (x - nodes[i]) / h, h)
}

impl ScalarTable {
    pub fn from_jets(
        name: &str,
        grid: &Grid,
        jet: impl Fn(f64, f64) -> Result<Jet2>,
    ) -> Result<Self> {
        let (tn, rn) = (grid.t_nodes(), grid.r_nodes());
        let mut tab = ScalarTable {
            name: name.to_string(),
            t_nodes: tn.clone(),
            r_nodes: rn.clone(),
            value: Vec::new(),
            d_t: Vec::new(),
            d_r: Vec::new(),
            d_tr: Vec::new(),
        };
        for &t in &tn {
            for &r in &rn {
                let j = jet(t, r)?;
                tab.value.push(j.value);
                tab.d_t.push(j.d_t);
                tab.d_r.push(j.d_r);
                tab.d_tr.push(j.d_tr);
            }
        }
        Ok(tab)
    }

    /// Bicubic Hermite interpolant; extrapolates the boundary cells.
    pub fn interpolate(&self, t: f64, r: f64) -> f64 {
        let nr = self.r_nodes.len();
        let (i, u, ht) = locate(&self.t_nodes, t);
        let (j, v, hr) = locate(&self.r_nodes, r);
        let (hu0, hu1) = hermite(u);
        let (hv0, hv1) = hermite(v);
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let k = (i + a) * nr + (j + b);
                s += hu0[a] * hv0[b] * self.value[k]
                    + hu1[a] * ht * hv0[b] * self.d_t[k]
                    + hu0[a] * hv1[b] * hr * self.d_r[k]
                    + hu1[a] * ht * hv1[b] * hr * self.d_tr[k];
            }
        }
        s
    }
}

/// Scalar potential of a closed one-form, normalized to zero at `base`.
#[derive(Clone)]
pub struct Potential {
    pub name: String,
    form: OneForm,
    pub base: (f64, f64),
    quad_tol: f64,
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Potential")
            .field("name", &self.name)
            .field("base", &self.base)
            .finish()
    }
}

impl Potential {
    pub fn new(name: &str, form: OneForm, base: (f64, f64), quad_tol: f64) -> Self {
        Potential {
            name: name.to_string(),
            form,
            base,
            quad_tol,
        }
    }

    pub fn form(&self) -> &OneForm {
        &self.form
    }

    /// Checks closedness on the grid and path independence at the grid
    /// nodes; returns the largest path discrepancy.
    pub fn certify(&self, grid: &Grid, curl_tol: f64, path_tol: f64) -> Result<f64> {
        let (c, t, r) = curl_residual(&self.form, grid)?;
        if !(c <= curl_tol) {
            return Err(Error::NotClosed { residual: c, t, r });
        }
        let mut worst: f64 = 0.0;
        for (t, r) in grid.points() {
            let a = l_path(&self.form, self.base, (t, r), self.quad_tol)?;
            let b = transposed_path(&self.form, self.base, (t, r), self.quad_tol)?;
            let d = (a - b).abs() / (1.0 + a.abs());
            worst = worst.max(d);
            if d > path_tol {
                return Err(Error::NotClosed { residual: d, t, r });
            }
        }
        Ok(worst)
    }

    pub fn value(&self, t: f64, r: f64) -> Result<f64> {
        l_path(&self.form, self.base, (t, r), self.quad_tol)
    }

    /// Value with first partials read off the one-form and second partials
    /// from its derivatives.
    pub fn jet(&self, t: f64, r: f64) -> Result<Jet2> {
        let value = self.value(t, r)?;
        let (p, q) = (self.form)(t, r)?;
        Ok(Jet2 {
            value,
            d_t: p.value,
            d_r: q.value,
            d_tt: p.d_t,
            d_tr: 0.5 * (p.d_r + q.d_t),
            d_rr: q.d_r,
            kink: false,
        })
    }

    pub fn table(&self, grid: &Grid) -> Result<ScalarTable> {
        ScalarTable::from_jets(&self.name, grid, |t, r| self.jet(t, r))
    }
}

/// A completely integrable first-order system on the `(t, r)` plane.
pub trait Pfaff: Send + Sync {
    fn dim(&self) -> usize;
    fn names(&self) -> Vec<String>;
    /// `(∂_t y, ∂_r y)` at `(t, r)`. The state is given as first-order jets
    /// so that total derivatives of the right-hand side can be formed.
    fn rhs(&self, t: f64, r: f64, y: &[Jet1]) -> Result<(Vec<Jet1>, Vec<Jet1>)>;
}

/// Solution of a [`Pfaff`] system with prescribed value at `base`.
#[derive(Clone)]
pub struct PfaffField {
    system: Arc<dyn Pfaff>,
    pub base: (f64, f64),
    pub initial: Vec<f64>,
    opts: OdeOptions,
}

impl std::fmt::Debug for PfaffField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PfaffField")
            .field("names", &self.system.names())
            .field("base", &self.base)
            .field("initial", &self.initial)
            .finish()
    }
}

fn constant_jets(y: &[f64]) -> Vec<Jet1> {
    y.iter().map(|&v| Jet1::new(v, 0.0, 0.0)).collect()
}

impl PfaffField {
    pub fn new(system: Arc<dyn Pfaff>, base: (f64, f64), initial: Vec<f64>, ode_tol: f64) -> Self {
        PfaffField {
            system,
            base,
            initial,
            opts: OdeOptions::tight(ode_tol),
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.system.names()
    }

    /// Integrates along `t` at fixed `r` (`axis = 0`) or along `r` at
    /// fixed `t` (`axis = 1`).
    fn leg(&self, axis: usize, fixed: f64, from: f64, to: f64, y0: &[f64]) -> Result<Vec<f64>> {
        let sys = &self.system;
        integrate_to(
            |s, y, dy| {
                let (t, r) = if axis == 0 { (s, fixed) } else { (fixed, s) };
                let (p, q) = sys.rhs(t, r, &constant_jets(y))?;
                let d = if axis == 0 { p } else { q };
                for (o, v) in dy.iter_mut().zip(d) {
                    *o = v.value;
                }
                Ok(())
            },
            from,
            y0,
            to,
            &self.opts,
        )
    }

    fn along_l(&self, t: f64, r: f64) -> Result<Vec<f64>> {
        let (t0, r0) = self.base;
        let y = self.leg(0, r0, t0, t, &self.initial)?;
        self.leg(1, t, r0, r, &y)
    }

    fn along_transposed(&self, t: f64, r: f64) -> Result<Vec<f64>> {
        let (t0, r0) = self.base;
        let y = self.leg(1, t0, r0, r, &self.initial)?;
        self.leg(0, r, t0, t, &y)
    }

    pub fn value(&self, t: f64, r: f64) -> Result<Vec<f64>> {
        self.along_l(t, r)
    }

    /// Largest relative discrepancy between the two path orders over the
    /// grid; fails with `PathDependent` above `path_tol`.
    pub fn certify(&self, grid: &Grid, path_tol: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (t, r) in grid.points() {
            let a = self.along_l(t, r)?;
            let b = self.along_transposed(t, r)?;
            for (x, y) in a.iter().zip(&b) {
                let d = (x - y).abs() / (1.0 + x.abs());
                worst = worst.max(d);
            }
            if worst > path_tol {
                return Err(Error::PathDependent { discrepancy: worst });
            }
        }
        Ok(worst)
    }

    /// Second-order jets of every component at `(t, r)`.
    pub fn jets(&self, t: f64, r: f64) -> Result<Vec<Jet2>> {
        let y = self.value(t, r)?;
        let (p0, q0) = self.system.rhs(t, r, &constant_jets(&y))?;
        let seeded: Vec<Jet1> = (0..y.len())
            .map(|i| Jet1::new(y[i], p0[i].value, q0[i].value))
            .collect();
        let (p, q) = self.system.rhs(t, r, &seeded)?;
        Ok((0..y.len())
            .map(|i| Jet2 {
                value: y[i],
                d_t: p[i].value,
                d_r: q[i].value,
                d_tt: p[i].d_t,
                d_tr: 0.5 * (p[i].d_r + q[i].d_t),
                d_rr: q[i].d_r,
                kink: false,
            })
            .collect())
    }

    pub fn tables(&self, grid: &Grid) -> Result<Vec<ScalarTable>> {
        let names = self.names();
        let (tn, rn) = (grid.t_nodes(), grid.r_nodes());
        let mut tabs: Vec<ScalarTable> = names
            .iter()
            .map(|n| ScalarTable {
                name: n.clone(),
                t_nodes: tn.clone(),
                r_nodes: rn.clone(),
                value: Vec::new(),
                d_t: Vec::new(),
                d_r: Vec::new(),
                d_tr: Vec::new(),
            })
            .collect();
        for &t in &tn {
            for &r in &rn {
                for (tab, j) in tabs.iter_mut().zip(self.jets(t, r)?) {
                    tab.value.push(j.value);
                    tab.d_t.push(j.d_t);
                    tab.d_r.push(j.d_r);
                    tab.d_tr.push(j.d_tr);
                }
            }
        }
        Ok(tabs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn form(f: impl Fn(f64, f64) -> (Jet1, Jet1) + Send + Sync + 'static) -> OneForm {
        Arc::new(move |t, r| Ok(f(t, r)))
    }

    #[test]
    fn zero_form_integrates_to_zero() {
        let f = form(|_, _| (Jet1::default(), Jet1::default()));
        assert_eq!(
            path_integral(&f, (0.0, 0.0), (1.0, 2.0), 1e-10, 1e-8).unwrap(),
            0.0
        );
    }

    #[test]
    fn d_of_tr() {
        let f = form(|t, r| (Jet1::new(r, 0.0, 1.0), Jet1::new(t, 1.0, 0.0)));
        assert_relative_eq!(
            path_integral(&f, (0.0, 0.0), (1.0, 2.0), 1e-10, 1e-8).unwrap(),
            2.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn single_variable() {
        let f = form(|t, _| (Jet1::new(2.0 * t, 2.0, 0.0), Jet1::default()));
        assert_relative_eq!(
            path_integral(&f, (0.0, 0.0), (3.0, 5.0), 1e-10, 1e-8).unwrap(),
            9.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn non_closed_form_is_rejected() {
        // r dt - t dr has curl -2.
        let f = form(|t, r| (Jet1::new(r, 0.0, 1.0), Jet1::new(-t, -1.0, 0.0)));
        assert!(matches!(
            path_integral(&f, (0.0, 0.0), (1.0, 1.0), 1e-10, 1e-8),
            Err(Error::NotClosed { .. })
        ));
        let p = Potential::new("bad", f, (0.5, 0.5), 1e-10);
        assert!(matches!(
            p.certify(&Grid::default(), 1e-8, 1e-8),
            Err(Error::NotClosed { .. })
        ));
    }

    #[test]
    fn bicubic_table_tracks_smooth_potential() {
        // Potential sin(t) e^r.
        let f = form(|t, r| {
            let e = r.exp();
            (
                Jet1::new(t.cos() * e, -t.sin() * e, t.cos() * e),
                Jet1::new(t.sin() * e, t.cos() * e, t.sin() * e),
            )
        });
        let grid = Grid::default();
        let p = Potential::new("s", f, grid.base_point(), 1e-12);
        p.certify(&grid, 1e-10, 1e-10).unwrap();
        let c = 0.5f64.sin() * 0.5f64.exp();
        let j = p.jet(1.3, 2.1).unwrap();
        assert_relative_eq!(
            j.value,
            1.3f64.sin() * 2.1f64.exp() - c,
            max_relative = 1e-11
        );
        assert_relative_eq!(j.d_tr, 1.3f64.cos() * 2.1f64.exp(), max_relative = 1e-12);
        let tab = p.table(&grid).unwrap();
        let exact = 1.234f64.sin() * 1.987f64.exp() - c;
        assert!((tab.interpolate(1.234, 1.987) - exact).abs() < 1e-4);
        assert!(
            (tab.interpolate(grid.t_nodes()[3], grid.r_nodes()[7])
                - p.value(grid.t_nodes()[3], grid.r_nodes()[7]).unwrap())
            .abs()
                < 1e-12
        );
    }

    struct Exponential;
    impl Pfaff for Exponential {
        fn dim(&self) -> usize {
            1
        }
        fn names(&self) -> Vec<String> {
            vec!["y".into()]
        }
        // y = exp(t + 2r): ∂_t y = y, ∂_r y = 2y.
        fn rhs(&self, _t: f64, _r: f64, y: &[Jet1]) -> Result<(Vec<Jet1>, Vec<Jet1>)> {
            Ok((vec![y[0]], vec![y[0] * 2.0]))
        }
    }

    #[test]
    fn pfaff_field_jets() {
        let f = PfaffField::new(Arc::new(Exponential), (0.0, 0.0), vec![1.0], 1e-12);
        let j = f.jets(0.3, 0.2).unwrap()[0];
        let e = 0.7f64.exp();
        assert_relative_eq!(j.value, e, max_relative = 1e-10);
        assert_relative_eq!(j.d_r, 2.0 * e, max_relative = 1e-10);
        assert_relative_eq!(j.d_tr, 2.0 * e, max_relative = 1e-10);
        assert_relative_eq!(j.d_rr, 4.0 * e, max_relative = 1e-10);
        f.certify(&Grid::new((0.0, 1.0), (0.0, 1.0), 3, 3), 1e-8)
            .unwrap();
    }
}
