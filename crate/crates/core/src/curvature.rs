//! Curvature coefficients `a1..a14`, derived quantities and the
//! adapted-basis brackets.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::ad::{Hyper, Jet1, Jet2, Real};
use crate::connection::{
    christoffel, nonlinear_connection, ConnectionProfile, TangentPoint, COORD_NAMES,
};
use crate::error::{Error, Result};

/// State of the coupling block `k7..k10` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corner {
    /// `k10 ≠ 0`: `a, b, c` are defined.
    Generic,
    /// `k7 = k8 = k9 = k10 = 0`.
    WCornerZero,
    /// `k10 = 0` while some of `k7, k8, k9` are not.
    K10Degenerate,
}

/// Curvature data at a base point `(t, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    pub t: f64,
    pub r: f64,
    pub k: [Jet2; 12],
    /// `a[0] = a1`, …, `a[13] = a14`, with first partials.
    pub a: [Jet1; 14],
    pub corner: Corner,
    /// `(a, b, c)` when `k10 ≠ 0`.
    pub abc: Option<[Jet2; 3]>,
    /// `(D, E, F)` when `abc` is defined.
    pub def: Option<[Jet1; 3]>,
    /// `(G, G̃, H, H̃)` when `abc` is defined.
    pub gh: Option<[Jet1; 4]>,
}

/// Values below this are treated as exact zeros when deciding the corner
/// state of a single point.
const CORNER_EPS: f64 = 1e-14;

/// The fourteen curvature coefficients from second-order jets of `kᵢ`.
pub fn a_coefficients(k: &[Jet2; 12]) -> [Jet1; 14] {
    let kk: [Jet1; 12] = std::array::from_fn(|i| k[i].to_jet1());
    let kt = |i: usize| k[i - 1].partial_t();
    let kr = |i: usize| k[i - 1].partial_r();
    let q = |i: usize| kk[i - 1];
    [
        kr(1) - kt(2) + q(3) * q(4) - q(2) * q(6),
        kr(2) - kt(3) + q(2) * q(2) + q(3) * q(6) - q(1) * q(3) - q(2) * q(5),
        kr(4) - kt(6) + q(1) * q(6) + q(4) * q(5) - q(2) * q(4) - q(6) * q(6),
        kr(6) - kt(5) + q(2) * q(6) - q(3) * q(4),
        kr(8) - kt(9),
        -kt(7) + q(7) * q(8) - q(1) * q(7) - q(2) * q(10),
        -kt(10) + q(8) * q(10) - q(4) * q(7) - q(6) * q(10),
        -kt(8) + q(1) * q(8) + q(4) * q(9) - q(8) * q(8),
        -kt(9) + q(2) * q(8) + q(6) * q(9) - q(8) * q(9),
        -kr(7) + q(7) * q(9) - q(2) * q(7) - q(3) * q(10),
        -kr(10) + q(9) * q(10) - q(6) * q(7) - q(5) * q(10),
        -kr(8) + q(2) * q(8) + q(6) * q(9) - q(8) * q(9),
        -kr(9) + q(3) * q(8) + q(5) * q(9) - q(9) * q(9),
        q(7) * q(8) + q(9) * q(10) + 1.0,
    ]
}

/// Curvature profile that records degenerate corners instead of failing.
pub fn curvature_profile_lenient(
    conn: &ConnectionProfile,
    t: f64,
    r: f64,
) -> Result<CurvatureProfile> {
    let k = conn.jets(t, r)?;
    let a = a_coefficients(&k);
    let corner = if k[6..10].iter().all(|x| x.value.abs() <= CORNER_EPS) {
        Corner::WCornerZero
    } else if k[9].value.abs() <= CORNER_EPS {
        Corner::K10Degenerate
    } else {
        Corner::Generic
    };
    let (mut abc, mut def, mut gh) = (None, None, None);
    if corner == Corner::Generic {
        let (k7, k8, k9, k10) = (k[6], k[7], k[8], k[9]);
        let aa = k7 / k10;
        let bb = k8 / k10;
        let cc = (k9 * k10 - k7 * k8) / (k10 * k10);
        abc = Some([aa, bb, cc]);
        let (a1, a3, a5) = (a[0], a[2], a[4]);
        let (a1j, b1j) = (aa.to_jet1(), bb.to_jet1());
        let f = a1j * a3 - a1;
        let d = f + a5;
        let e = b1j * a3;
        def = Some([d, e, f]);
        let k1: [Jet1; 12] = std::array::from_fn(|i| k[i].to_jet1());
        let g = (k1[0] - k1[3] * a1j) * 2.0;
        let h = (k1[1] - k1[5] * a1j) * 2.0;
        gh = Some([g, g - k1[7] * 2.0, h, h - k1[8] * 2.0]);
    }
    Ok(CurvatureProfile {
        t,
        r,
        k,
        a,
        corner,
        abc,
        def,
        gh,
    })
}

/// Curvature profile at `(t, r)`; fails with `K10Degenerate` when
/// `a, b, c` cannot be formed although the coupling block is nonzero.
pub fn curvature_profile(conn: &ConnectionProfile, t: f64, r: f64) -> Result<CurvatureProfile> {
    let cp = curvature_profile_lenient(conn, t, r)?;
    if cp.corner == Corner::K10Degenerate {
        return Err(Error::K10Degenerate { t, r });
    }
    Ok(cp)
}

impl CurvatureProfile {
    pub fn values(&self) -> [f64; 14] {
        std::array::from_fn(|i| self.a[i].value)
    }
    pub fn max_abs_a(&self) -> f64 {
        self.a.iter().map(|x| x.value.abs()).fold(0.0, f64::max)
    }
}

/// `R_rt − R_tr = a1 + a4 + 2 a5`.
pub fn ricci_asymmetry(cp: &CurvatureProfile) -> f64 {
    cp.a[0].value + cp.a[3].value + 2.0 * cp.a[4].value
}

/// Curvature table: `R[b][c][e]` is the `∂̇_e` component of `[δ_b, δ_c]`.
pub fn curvature_table<S: Real>(a: &[S; 14], theta: S, v: &[S; 4]) -> [[[S; 4]; 4]; 4] {
    let z = S::cst(0.0);
    let mut out = [[[z; 4]; 4]; 4];
    let s = theta.sin();
    let s2 = s * s;
    let [td, rd, thd, phd] = *v;
    let ai = |i: usize| a[i - 1];
    let mut set = |b: usize, c: usize, comps: [S; 4]| {
        out[b][c] = comps;
        out[c][b] = comps.map(|x| -x);
    };
    set(
        0,
        1,
        [
            ai(1) * td + ai(2) * rd,
            ai(3) * td + ai(4) * rd,
            ai(5) * thd,
            ai(5) * phd,
        ],
    );
    set(0, 2, [ai(6) * thd, ai(7) * thd, ai(8) * td + ai(9) * rd, z]);
    set(
        0,
        3,
        [
            ai(6) * phd * s2,
            ai(7) * phd * s2,
            z,
            ai(8) * td + ai(9) * rd,
        ],
    );
    set(
        1,
        2,
        [ai(10) * thd, ai(11) * thd, ai(12) * td + ai(13) * rd, z],
    );
    set(
        1,
        3,
        [
            ai(10) * phd * s2,
            ai(11) * phd * s2,
            z,
            ai(12) * td + ai(13) * rd,
        ],
    );
    set(2, 3, [z, z, -(ai(14) * phd * s2), ai(14) * thd]);
    out
}

/// Vertical components of a bracket of horizontal fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketVector {
    pub label: String,
    pub components: [f64; 4],
}

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// First-level brackets `[δ_a, δ_b]` and, at depth 2, all `[δ_c, [δ_a, δ_b]]`.
pub fn bracket_vectors(
    conn: &ConnectionProfile,
    p: &TangentPoint,
    depth: u8,
) -> Result<Vec<BracketVector>> {
    let cp = curvature_profile_lenient(conn, p.t, p.r)?;
    Ok(bracket_vectors_with(&cp, p, depth))
}

/// Same as [`bracket_vectors`] with a precomputed curvature profile at
/// `(p.t, p.r)`.
pub fn bracket_vectors_with(
    cp: &CurvatureProfile,
    p: &TangentPoint,
    depth: u8,
) -> Vec<BracketVector> {
    let x = p.to_array();
    let mut out = Vec::new();
    if depth < 2 {
        let a: [f64; 14] = cp.values();
        let tab = curvature_table(&a, p.theta, &p.velocity());
        for &(b, c) in &PAIRS {
            out.push(BracketVector {
                label: format!("[{},{}]", COORD_NAMES[b], COORD_NAMES[c]),
                components: tab[b][c],
            });
        }
        return out;
    }
    let h = Hyper::seed(&x);
    let a: [Hyper; 14] =
        std::array::from_fn(|i| Hyper::taylor(&cp.a[i].to_jet2(), h[0] - x[0], h[1] - x[1]));
    let tab = curvature_table(&a, h[2], &[h[4], h[5], h[6], h[7]]);
    let kv: [f64; 12] = std::array::from_fn(|i| cp.k[i].value);
    let gamma = christoffel(&kv, p.theta);
    let n = nonlinear_connection(&gamma, &p.velocity());
    for &(b, c) in &PAIRS {
        out.push(BracketVector {
            label: format!("[{},{}]", COORD_NAMES[b], COORD_NAMES[c]),
            components: tab[b][c].map(|y| y.value),
        });
    }
    for &(b, c) in &PAIRS {
        let v = &tab[b][c];
        for d in 0..4 {
            let mut comps = [0.0; 4];
            for (e, comp) in comps.iter_mut().enumerate() {
                let mut delta = v[e].grad[d];
                for f in 0..4 {
                    delta -= n[f][d] * v[e].grad[4 + f];
                }
                let transport: f64 = (0..4).map(|f| v[f].value * gamma[e][f][d]).sum();
                *comp = delta + transport;
            }
            out.push(BracketVector {
                label: format!(
                    "[{},[{},{}]]",
                    COORD_NAMES[d], COORD_NAMES[b], COORD_NAMES[c]
                ),
                components: comps,
            });
        }
    }
    out
}

/// Numerical rank of a set of 4-vectors: singular values below
/// `tol * max(σ_max, 1)` count as zero.
pub fn numerical_rank(vectors: &[[f64; 4]], tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(vectors.len(), 4, |i, j| vectors[i][j]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let cut = tol * smax.max(1.0);
    sv.iter().filter(|s| **s > cut).count()
}

/// Minimum number of samples accepted by [`vertical_holonomy_rank`].
pub const MIN_RANK_SAMPLES: usize = 20;

/// Rank of the vertical part of the holonomy distribution, maximized over
/// the samples and capped at 3.
pub fn vertical_holonomy_rank(
    conn: &ConnectionProfile,
    samples: &[TangentPoint],
    tol: f64,
) -> Result<usize> {
    if samples.len() < MIN_RANK_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_RANK_SAMPLES,
            got: samples.len(),
        });
    }
    let mut best = 0;
    for p in samples {
        let vs = bracket_vectors(conn, p, 2)?;
        let rows: Vec<[f64; 4]> = vs.iter().map(|b| b.components).collect();
        best = best.max(numerical_rank(&rows, tol));
    }
    Ok(best.min(3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Params;
    use approx::assert_relative_eq;

    fn example1(alpha: f64) -> ConnectionProfile {
        ConnectionProfile::from_sources(
            &[
                (1, "2*r*(alpha-2)"),
                (4, "4*alpha*r^3*(alpha-1)"),
                (6, "-2*alpha*r"),
                (8, "-2*r"),
                (10, "alpha*r"),
            ],
            Params::new(),
        )
        .unwrap()
        .with_param("alpha", alpha)
    }

    #[test]
    fn example1_coefficients_at_r2() {
        let cp = curvature_profile(&example1(3.0), 1.0, 2.0).unwrap();
        let expect = [
            2.0, 0.0, 96.0, -6.0, -2.0, 0.0, 48.0, -32.0, 0.0, 0.0, -3.0, 2.0, 0.0, 1.0,
        ];
        for (i, e) in expect.iter().enumerate() {
            assert!(
                (cp.a[i].value - e).abs() < 1e-12,
                "a{} = {}",
                i + 1,
                cp.a[i].value
            );
        }
        assert_relative_eq!(ricci_asymmetry(&cp), -8.0);
    }

    #[test]
    fn example2_coefficients() {
        let conn = ConnectionProfile::from_sources(
            &[(1, "r"), (5, "t/3"), (9, "t/3"), (10, "t/3")],
            Params::new(),
        )
        .unwrap();
        let cp = curvature_profile(&conn, 1.3, 0.8).unwrap();
        let third = -1.0 / 3.0;
        // a11 = a13 = -Phi_rr / 3 = 0 and a14 = 1 + (Phi_r / 3)^2 for Phi = t r.
        let a14 = 1.0 + (1.3f64 / 3.0).powi(2);
        let expect = [
            1.0, 0.0, 0.0, third, third, 0.0, third, 0.0, third, 0.0, 0.0, 0.0, 0.0, a14,
        ];
        for (i, e) in expect.iter().enumerate() {
            assert!((cp.a[i].value - e).abs() < 1e-14, "a{}", i + 1);
        }
        assert!(ricci_asymmetry(&cp).abs() < 1e-15);
    }

    #[test]
    fn flat_profile() {
        let cp = curvature_profile(&ConnectionProfile::flat(), 1.0, 1.0).unwrap();
        for i in 0..13 {
            assert_eq!(cp.a[i].value, 0.0);
        }
        assert_eq!(cp.a[13].value, 1.0);
        assert_eq!(cp.corner, Corner::WCornerZero);
        assert_eq!(ricci_asymmetry(&cp), 0.0);
    }

    #[test]
    fn k10_degenerate_is_reported() {
        let conn = ConnectionProfile::from_sources(&[(7, "1")], Params::new()).unwrap();
        assert!(matches!(
            curvature_profile(&conn, 1.0, 1.0),
            Err(Error::K10Degenerate { .. })
        ));
    }

    #[test]
    fn class4_depth1_only_angular_bracket() {
        let conn = ConnectionProfile::from_sources(&[(1, "1")], Params::new()).unwrap();
        let p = TangentPoint::new([1.0, 1.0, 0.8, 0.0], [1.0, 0.5, 0.3, -0.2]);
        let bs = bracket_vectors(&conn, &p, 1).unwrap();
        let s2 = 0.8f64.sin().powi(2);
        for b in &bs {
            if b.label == "[theta,phi]" {
                assert_relative_eq!(b.components[2], 0.2 * s2, max_relative = 1e-14);
                assert_relative_eq!(b.components[3], 0.3);
            } else {
                assert!(b.components.iter().all(|c| *c == 0.0), "{}", b.label);
            }
        }
    }

    #[test]
    fn flat_depth2_is_cot_multiple() {
        let p = TangentPoint::new([1.0, 1.0, 0.8, 0.0], [1.0, 0.5, 0.3, -0.2]);
        let bs = bracket_vectors(&ConnectionProfile::flat(), &p, 2).unwrap();
        let base = bs
            .iter()
            .find(|b| b.label == "[theta,phi]")
            .unwrap()
            .components;
        let nested = bs
            .iter()
            .find(|b| b.label == "[theta,[theta,phi]]")
            .unwrap()
            .components;
        let along_phi = bs
            .iter()
            .find(|b| b.label == "[phi,[theta,phi]]")
            .unwrap()
            .components;
        let cot = 0.8f64.cos() / 0.8f64.sin();
        for e in 0..4 {
            assert!((nested[e] - cot * base[e]).abs() < 1e-14);
            assert!(along_phi[e].abs() < 1e-14);
        }
    }
}
