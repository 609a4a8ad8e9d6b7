//! Job configuration: a line-oriented format with `[section]` headers and
//! `key = value` lines whose values run to the end of the line.
//!
//! ```text
//! # comment
//! [connection]
//! k1 = 2*r*(alpha-2)
//! [parameters]
//! alpha = 3
//! [grid]
//! t = 0.5, 2.5
//! r = 0.5, 2.5
//! resolution = 15x15
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use crate::connection::{ConnectionProfile, TangentPoint};
use crate::error::{Error, Result};
use crate::expr::{Expression, Params};
use crate::lagrangian::{ExpressionLagrangian, Lagrangian};
use crate::metrize::{BuildOptions, SignatureChoice, ThetaChoice};
use crate::sampling::{Grid, SampleBox, Sampler};

const SECTIONS: [&str; 7] = [
    "connection",
    "parameters",
    "grid",
    "samples",
    "task",
    "reference",
    "geodesic",
];

/// How tangent-bundle samples are drawn.
#[derive(Debug, Clone)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    /// Samples must make this expression in the eight coordinates positive.
    pub domain: Option<ExpressionLagrangian>,
}

/// Construction options and the optional class override.
#[derive(Debug, Clone, Default)]
pub struct TaskOptions {
    pub class_override: Option<u8>,
    pub build: BuildOptions,
}

/// Closed forms to compare a construction against.
#[derive(Debug, Clone, Default)]
pub struct ReferenceSpec {
    /// A Finsler function expected to agree with the built one up to a
    /// positive constant factor.
    pub lagrangian: Option<ExpressionLagrangian>,
    /// Expected `det g` as an expression in the eight coordinates.
    pub hessian_det: Option<ExpressionLagrangian>,
}

/// Initial state and window for trajectory runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicSpec {
    pub start: TangentPoint,
    pub t_end: f64,
    pub n_out: usize,
}

#[derive(Debug, Clone)]
pub struct JobConfig {
    pub connection: ConnectionProfile,
    pub grid: Grid,
    pub samples: SampleSpec,
    pub task: TaskOptions,
    pub reference: ReferenceSpec,
    pub geodesic: Option<GeodesicSpec>,
}

type Section = BTreeMap<String, (usize, String)>;

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn split_sections(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut out: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| config_err(line_no, "unterminated section header"))?
                .trim()
                .to_string();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(config_err(line_no, format!("unknown section [{name}]")));
            }
            if out.contains_key(&name) {
                return Err(config_err(line_no, format!("duplicate section [{name}]")));
            }
            out.insert(name.clone(), Section::new());
            current = Some(name);
            continue;
        }
        let Some(sec) = &current else {
            return Err(config_err(line_no, "key outside of any section"));
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(line_no, "expected `key = value`"))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if k.is_empty() || v.is_empty() {
            return Err(config_err(line_no, "empty key or value"));
        }
        let s = out.get_mut(sec).unwrap();
        if s.contains_key(&k) {
            return Err(config_err(line_no, format!("duplicate key `{k}`")));
        }
        s.insert(k, (line_no, v));
    }
    Ok(out)
}

fn expr_at(line: usize, key: &str, src: &str) -> Result<Expression> {
    Expression::parse(src).map_err(|e| config_err(line, format!("{key}: {e}")))
}

/// A constant expression (parameters and `pi` allowed).
fn constant(line: usize, key: &str, src: &str, params: &Params) -> Result<f64> {
    let e = expr_at(line, key, src)?;
    let v = e
        .eval_f64(f64::NAN, f64::NAN, params)
        .map_err(|err| config_err(line, format!("{key}: {err}")))?;
    if !v.is_finite() {
        return Err(config_err(
            line,
            format!("{key}: value must be a finite constant"),
        ));
    }
    Ok(v)
}

fn list(line: usize, key: &str, src: &str, params: &Params, n: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = src.split(',').collect();
    if parts.len() != n {
        return Err(config_err(
            line,
            format!("{key}: expected {n} comma-separated values"),
        ));
    }
    parts
        .iter()
        .map(|p| constant(line, key, p.trim(), params))
        .collect()
}

/// Parses `NxM`.
pub fn parse_resolution(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.trim().split_once(['x', 'X'])?;
    let (n, m) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (n >= 2 && m >= 2).then_some((n, m))
}

fn reject_unknown(sec: &Section, name: &str, allowed: &[&str]) -> Result<()> {
    for (k, (line, _)) in sec {
        if !allowed.contains(&k.as_str()) {
            return Err(config_err(*line, format!("unknown key `{k}` in [{name}]")));
        }
    }
    Ok(())
}

fn tangent_expr(
    line: usize,
    key: &str,
    src: &str,
    params: &Params,
) -> Result<ExpressionLagrangian> {
    ExpressionLagrangian::parse(src, params.clone())
        .map_err(|e| config_err(line, format!("{key}: {e}")))
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let secs = split_sections(text)?;
        let empty = Section::new();
        let sec = |n: &str| secs.get(n).unwrap_or(&empty);

        let mut params = Params::new();
        for (k, (line, v)) in sec("parameters") {
            if k == "t" || k == "r" || k == "pi" {
                return Err(config_err(
                    *line,
                    format!("`{k}` cannot be a parameter name"),
                ));
            }
            let val = constant(*line, k, v, &params)?;
            params.insert(k.clone(), val);
        }

        let conn_sec = sec("connection");
        let names: Vec<String> = (1..=12).map(|i| format!("k{i}")).collect();
        reject_unknown(
            conn_sec,
            "connection",
            &names.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        )?;
        let mut connection = ConnectionProfile {
            params: params.clone(),
            ..Default::default()
        };
        for (i, n) in names.iter().enumerate() {
            if let Some((line, v)) = conn_sec.get(n) {
                let e = expr_at(*line, n, v)?;
                if let Some(p) = e.parameters().into_iter().find(|p| !params.contains_key(p)) {
                    return Err(config_err(*line, format!("{n}: unbound parameter `{p}`")));
                }
                connection.k[i] = e;
            }
        }

        let g = sec("grid");
        reject_unknown(g, "grid", &["t", "r", "resolution"])?;
        let mut grid = Grid::default();
        if let Some((line, v)) = g.get("t") {
            let x = list(*line, "t", v, &params, 2)?;
            grid.t_range = (x[0], x[1]);
        }
        if let Some((line, v)) = g.get("r") {
            let x = list(*line, "r", v, &params, 2)?;
            grid.r_range = (x[0], x[1]);
        }
        if let Some((line, v)) = g.get("resolution") {
            let (n, m) = parse_resolution(v)
                .ok_or_else(|| config_err(*line, "resolution: expected NxM with N, M >= 2"))?;
            grid = grid.with_resolution(n, m);
        }
        if !(grid.t_range.0 < grid.t_range.1 && grid.r_range.0 < grid.r_range.1) {
            return Err(config_err(0, "grid ranges must be non-empty"));
        }

        let s = sec("samples");
        reject_unknown(s, "samples", &["count", "seed", "domain"])?;
        let mut samples = SampleSpec {
            count: 50,
            seed: 1,
            domain: None,
        };
        if let Some((line, v)) = s.get("count") {
            samples.count = v
                .parse()
                .map_err(|_| config_err(*line, "count: expected a positive integer"))?;
        }
        if let Some((line, v)) = s.get("seed") {
            samples.seed = v
                .parse()
                .map_err(|_| config_err(*line, "seed: expected a non-negative integer"))?;
        }
        if let Some((line, v)) = s.get("domain") {
            samples.domain = Some(tangent_expr(*line, "domain", v, &params)?);
        }

        let t = sec("task");
        reject_unknown(t, "task", &["class", "signature", "c1", "c2", "theta"])?;
        let mut task = TaskOptions::default();
        if let Some((line, v)) = t.get("class") {
            task.class_override = match v.as_str() {
                "auto" => None,
                x => match x.parse::<u8>() {
                    Ok(c @ 1..=5) => Some(c),
                    _ => return Err(config_err(*line, "class: expected auto or 1..5")),
                },
            };
        }
        if let Some((line, v)) = t.get("signature") {
            task.build.signature = SignatureChoice::parse(v)
                .map_err(|_| config_err(*line, "signature: expected lorentzian or euclidean"))?;
        }
        if let Some((line, v)) = t.get("c1") {
            task.build.c1 = constant(*line, "c1", v, &params)?;
        }
        if let Some((line, v)) = t.get("c2") {
            task.build.c2 = constant(*line, "c2", v, &params)?;
        }
        if let Some((line, v)) = t.get("theta") {
            task.build.theta =
                ThetaChoice::parse(v).map_err(|e| config_err(*line, format!("theta: {e}")))?;
        }

        let rf = sec("reference");
        reject_unknown(rf, "reference", &["lagrangian", "hessian_det"])?;
        let mut reference = ReferenceSpec::default();
        if let Some((line, v)) = rf.get("lagrangian") {
            reference.lagrangian = Some(tangent_expr(*line, "lagrangian", v, &params)?);
        }
        if let Some((line, v)) = rf.get("hessian_det") {
            reference.hessian_det = Some(tangent_expr(*line, "hessian_det", v, &params)?);
        }

        let geo = sec("geodesic");
        reject_unknown(geo, "geodesic", &["position", "velocity", "T", "n_out"])?;
        let geodesic = if geo.is_empty() {
            None
        } else {
            let need = |k: &str| {
                geo.get(k)
                    .ok_or_else(|| config_err(0, format!("[geodesic] needs `{k}`")))
            };
            let (lp, vp) = need("position")?;
            let (lv, vv) = need("velocity")?;
            let x = list(*lp, "position", vp, &params, 4)?;
            let v = list(*lv, "velocity", vv, &params, 4)?;
            let t_end = match geo.get("T") {
                Some((line, v)) => constant(*line, "T", v, &params)?,
                None => 0.5,
            };
            let n_out = match geo.get("n_out") {
                Some((line, v)) => v
                    .parse()
                    .map_err(|_| config_err(*line, "n_out: expected an integer"))?,
                None => 100,
            };
            Some(GeodesicSpec {
                start: TangentPoint::new([x[0], x[1], x[2], x[3]], [v[0], v[1], v[2], v[3]]),
                t_end,
                n_out,
            })
        };

        Ok(JobConfig {
            connection,
            grid,
            samples,
            task,
            reference,
            geodesic,
        })
    }

    /// Tangent-bundle samples over the grid satisfying the domain
    /// predicate and `accept`.
    pub fn draw_samples(&self, accept: &dyn Fn(&TangentPoint) -> bool) -> Vec<TangentPoint> {
        let mut sampler = Sampler::new(SampleBox::for_grid(&self.grid), self.samples.seed);
        let domain = self.samples.domain.as_ref();
        sampler.draw(self.samples.count, &|p| {
            domain.is_none_or(|d| matches!(d.eval(p), Ok(v) if v > 0.0)) && accept(p)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "\
# power law
[connection]
k1 = 2*r*(alpha-2)
k10 = alpha*r

[parameters]
alpha = 3

[grid]
t = 0.5, 2.5
r = 0.5, 1 + 1.5
resolution = 7x9

[samples]
count = 20
seed = 11
domain = tdot - 0.1

[task]
theta = s^2 + s
c2 = -2

[geodesic]
position = 1, 2, pi/2, 0
velocity = 1, 0.1, 0.05, 0.02
";

    #[test]
    fn parses_all_sections() {
        let c = JobConfig::parse(EXAMPLE).unwrap();
        assert_eq!(c.connection.k[0].to_string(), "2*r*(alpha-2)");
        assert_eq!(c.connection.params["alpha"], 3.0);
        assert_eq!(c.grid.r_range, (0.5, 2.5));
        assert_eq!((c.grid.nt, c.grid.nr), (7, 9));
        assert_eq!(c.samples.seed, 11);
        assert_eq!(c.task.build.c2, -2.0);
        let g = c.geodesic.unwrap();
        assert!((g.start.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(g.n_out, 100);
        let s = c.draw_samples(&|_| true);
        assert_eq!(s.len(), 20);
        assert!(s.iter().all(|p| p.tdot > 0.1));
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let bad = "[connection]\nk1 = r +* 2\n";
        match JobConfig::parse(bad) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("k1"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            JobConfig::parse("[connection]\nk13 = 1\n"),
            Err(Error::Config { line: 2, .. })
        ));
        assert!(matches!(
            JobConfig::parse("[nope]\n"),
            Err(Error::Config { line: 1, .. })
        ));
        assert!(matches!(
            JobConfig::parse("[connection]\nk1 = beta\n"),
            Err(Error::Config { line: 2, .. })
        ));
        assert!(matches!(
            JobConfig::parse("k1 = 1\n"),
            Err(Error::Config { line: 1, .. })
        ));
        assert!(matches!(
            JobConfig::parse("[grid]\nresolution = 1x5\n"),
            Err(Error::Config { line: 2, .. })
        ));
    }

    #[test]
    fn resolution_syntax() {
        assert_eq!(parse_resolution("15x15"), Some((15, 15)));
        assert_eq!(parse_resolution("3X4"), Some((3, 4)));
        assert_eq!(parse_resolution("15"), None);
        assert_eq!(parse_resolution("0x4"), None);
    }
}
