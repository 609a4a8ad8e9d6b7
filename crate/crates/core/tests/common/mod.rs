#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use berwald::ad::{Jet2, Real};
use berwald::config::JobConfig;
use berwald::connection::ConnectionProfile;
use berwald::expr::Params;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.ini"))
}

pub fn fixture(name: &str) -> JobConfig {
    JobConfig::load(&fixture_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn connection(sources: &[(usize, &str)], params: &[(&str, f64)]) -> ConnectionProfile {
    let p: Params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    ConnectionProfile::from_sources(sources, p).unwrap()
}

/// Polynomial in `(t, r)`: exponents `(i, j)` of `t^i r^j` to coefficients.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly(pub BTreeMap<(u32, u32), f64>);

impl Poly {
    pub fn term(c: f64, i: u32, j: u32) -> Self {
        Poly(BTreeMap::from([((i, j), c)]))
    }
    pub fn add(&self, o: &Poly) -> Poly {
        let mut m = self.0.clone();
        for (k, v) in &o.0 {
            *m.entry(*k).or_insert(0.0) += v;
        }
        Poly(m)
    }
    pub fn d_t(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .filter(|((i, _), _)| *i > 0)
                .map(|(&(i, j), c)| ((i - 1, j), c * i as f64))
                .collect(),
        )
    }
    pub fn d_r(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .filter(|((_, j), _)| *j > 0)
                .map(|(&(i, j), c)| ((i, j - 1), c * j as f64))
                .collect(),
        )
    }
    pub fn eval(&self, t: f64, r: f64) -> f64 {
        self.0
            .iter()
            .map(|(&(i, j), c)| c * t.powi(i as i32) * r.powi(j as i32))
            .sum()
    }
    pub fn jet(&self, t: f64, r: f64) -> Jet2 {
        Jet2 {
            value: self.eval(t, r),
            d_t: self.d_t().eval(t, r),
            d_r: self.d_r().eval(t, r),
            d_tt: self.d_t().d_t().eval(t, r),
            d_tr: self.d_t().d_r().eval(t, r),
            d_rr: self.d_r().d_r().eval(t, r),
            kink: false,
        }
    }
    /// Source text, parenthesized.
    pub fn src(&self) -> String {
        let terms: Vec<String> = self
            .0
            .iter()
            .filter(|(_, c)| **c != 0.0)
            .map(|(&(i, j), c)| format!("({c:.17e})*t^{i}*r^{j}"))
            .collect();
        if terms.is_empty() {
            "(0)".into()
        } else {
            format!("({})", terms.join(" + "))
        }
    }
}

/// Class-3 profile generated from a warped metric
/// `h_ab dxᵃ dxᵇ − e^{2K} (dθ² + sin²θ dφ²)`, where `h = Jᵀ diag(1, −1) J`
/// is the pull-back of flat 2D Minkowski space by `(T, R)(t, r)` and
/// `K = α ln R + β R`. Its Levi-Civita connection is the profile.
#[derive(Debug, Clone)]
pub struct WarpedProfile {
    pub tt: Poly,
    pub rr: Poly,
    pub alpha: f64,
    pub beta: f64,
    pub conn: ConnectionProfile,
}

impl WarpedProfile {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let mut small = |i: u32, j: u32| Poly::term(rng.gen_range(-0.05..0.05), i, j);
        let p = small(2, 0).add(&small(1, 1)).add(&small(0, 2));
        let q = small(2, 0).add(&small(1, 1)).add(&small(0, 2));
        let tt = Poly::term(1.0, 1, 0).add(&p);
        let rr = Poly::term(1.0, 0, 1).add(&q).add(&Poly::term(0.5, 0, 0));
        let alpha = rng.gen_range(0.5..1.5);
        let beta = rng.gen_range(0.0..0.5);
        Self::new(tt, rr, alpha, beta)
    }

    pub fn seeded(seed: u64) -> Self {
        Self::random(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn new(tt: Poly, rr: Poly, alpha: f64, beta: f64) -> Self {
        let (t_t, t_r, r_t, r_r) = (
            tt.d_t().src(),
            tt.d_r().src(),
            rr.d_t().src(),
            rr.d_r().src(),
        );
        let det = format!("({t_t}*{r_r} - {t_r}*{r_t})");
        let second = |p: &Poly, a: usize, b: usize| {
            let q = if a == 0 { p.d_t() } else { p.d_r() };
            (if b == 0 { q.d_t() } else { q.d_r() }).src()
        };
        // Γᵃ_bc = (J⁻¹)ᵃ_A ∂_b∂_c Xᴬ.
        let gt = |a: usize, b: usize| {
            format!(
                "({r_r}*{} - {t_r}*{})/{det}",
                second(&tt, a, b),
                second(&rr, a, b)
            )
        };
        let gr = |a: usize, b: usize| {
            format!(
                "({t_t}*{} - {r_t}*{})/{det}",
                second(&rr, a, b),
                second(&tt, a, b)
            )
        };
        let big_r = rr.src();
        let fp = format!("({alpha:.17e}/{big_r} + {beta:.17e})");
        let e2k = format!("exp(2*({alpha:.17e}*ln({big_r}) + {beta:.17e}*{big_r}))");
        let sources = [
            gt(0, 0),
            gt(0, 1),
            gt(1, 1),
            gr(0, 0),
            gr(1, 1),
            gr(0, 1),
            format!("{e2k}*{fp}*{t_r}/{det}"),
            format!("{fp}*{r_t}"),
            format!("{fp}*{r_r}"),
            format!("0 - {e2k}*{fp}*{t_t}/{det}"),
        ];
        let src: Vec<(usize, &str)> = sources
            .iter()
            .enumerate()
            .map(|(i, s)| (i + 1, s.as_str()))
            .collect();
        let conn = ConnectionProfile::from_sources(&src, Params::new()).unwrap();
        WarpedProfile {
            tt,
            rr,
            alpha,
            beta,
            conn,
        }
    }

    /// `K` at `(t, r)`.
    pub fn k(&self, t: f64, r: f64) -> f64 {
        let big_r = self.rr.eval(t, r);
        self.alpha * big_r.ln() + self.beta * big_r
    }

    /// `(h_tt, h_tr, h_rr, −e^{2K})` with derivatives.
    pub fn coefficients(&self, t: f64, r: f64) -> [Jet2; 4] {
        let tj = |p: &Poly| (p.d_t(), p.d_r());
        let (t_t, t_r) = tj(&self.tt);
        let (r_t, r_r) = tj(&self.rr);
        let h = |a: &Poly, b: &Poly, c: &Poly, d: &Poly| -> Jet2 {
            // a*b - c*d with product rules on jets.
            mul(a.jet(t, r), b.jet(t, r)) + -mul(c.jet(t, r), d.jet(t, r))
        };
        let big_r = self.rr.jet(t, r);
        let k = big_r.ln() * self.alpha + big_r * self.beta;
        let warp = (k * 2.0).exp() * -1.0;
        [
            h(&t_t, &t_t, &r_t, &r_t),
            h(&t_t, &t_r, &r_t, &r_r),
            h(&t_r, &t_r, &r_r, &r_r),
            warp,
        ]
    }
}

fn mul(a: Jet2, b: Jet2) -> Jet2 {
    a * b
}
