//! Configuration-driven sweeps: energy scaling, the zero-energy
//! counter-examples, flat-norm convergence and volume-constraint audits.

use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Point2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::predicted_limit;
use crate::degeneracies::{constrained_triangle_minimum, unseparated_slip, crack_pair, dilation_pair, displacement_varies_on};
use crate::energy::{energy, Region};
use crate::error::{Error, Result};
use crate::fields::{audit_volume_constraint, check_mild_separation, dislocation_measure, DisplacementField, SlipField};
use crate::lattice::{ConvexPolygon, DomainSpec, LatticeComplex, LatticeVector};
use crate::measures::{flat_norm, AtomicMeasure, FlatNormOptions};
use crate::recovery::build_recovery_pair;
use crate::solver::{compute_f_of_mu, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Scaling,
    Counterexamples,
    Flatnorm,
    ConstraintAudit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DislocationSpec {
    pub b: [i64; 2],
    pub x: [f64; 2],
}

impl DislocationSpec {
    pub fn burgers(&self) -> LatticeVector {
        LatticeVector::new(self.b[0], self.b[1])
    }

    pub fn point(&self) -> Point2<f64> {
        Point2::new(self.x[0], self.x[1])
    }
}

fn one() -> i64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub dislocations: Vec<DislocationSpec>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub flat_norm: FlatNormOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Integer factor of the dilation counter-example.
    #[serde(default = "one")]
    pub dilation_lambda: i64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<ConvexPolygon> {
        let domain = self.domain.to_polygon()?;
        if self.epsilons.is_empty() {
            return Err(Error::Config("epsilons is empty".into()));
        }
        if let Some(&e) = self.epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::InvalidEpsilon(e));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("epsilons must be strictly decreasing".into()));
        }
        for d in &self.dislocations {
            if !domain.contains_strictly(d.point()) {
                return Err(Error::Config(format!("dislocation at ({}, {}) is not inside the domain", d.x[0], d.x[1])));
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter_factor == 0 {
            return Err(Error::Config("solver needs tol > 0 and max_iter_factor ≥ 1".into()));
        }
        Ok(domain)
    }

    /// Errors if the config names a different experiment than `kind`.
    pub fn check_kind(&self, kind: ExperimentKind) -> Result<()> {
        match self.experiment {
            Some(k) if k != kind => Err(Error::Config(format!("config is for {k:?}, not {kind:?}"))),
            _ => Ok(()),
        }
    }

    /// `Σ b_k δ_{x_k}`.
    pub fn target_measure(&self) -> AtomicMeasure {
        AtomicMeasure::new(self.dislocations.iter().map(|d| (d.point(), d.burgers().to_vector())))
    }
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub epsilon: f64,
    pub F: Option<f64>,
    pub F_normalized: Option<f64>,
    pub F_recovery: Option<f64>,
    pub predicted: f64,
    pub flat_error: Option<f64>,
    pub flat_estimated: Option<bool>,
    pub tv: Option<f64>,
    pub ms_ok: Option<bool>,
    pub volume_fraction: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_time: f64,
    pub error: Option<String>,
}

#[derive(Default)]
struct ScalingValues {
    f: Option<f64>,
    f_recovery: Option<f64>,
    flat: Option<(f64, bool)>,
    tv: Option<f64>,
    ms_ok: Option<bool>,
    volume: Option<f64>,
    iterations: Option<usize>,
}

fn scaling_values(cfg: &ExperimentConfig, domain: &ConvexPolygon, eps: f64, out: &mut ScalingValues) -> Result<()> {
    let complex = LatticeComplex::build(domain.clone(), eps)?;
    let atoms: Vec<_> = cfg.dislocations.iter().map(|d| (d.burgers(), d.point())).collect();
    let pair = build_recovery_pair(&atoms, &complex)?;
    out.tv = Some(pair.measure.scaled_total_variation());
    out.ms_ok = Some(check_mild_separation(&pair.measure, &complex));
    out.volume = Some(audit_volume_constraint(&pair.slip, &complex)?.fraction());
    out.f_recovery = Some(energy(&complex, &pair.displacement, &pair.slip, Region::All)?);
    let flat = flat_norm(&pair.measure.to_scaled_atomic().minus(&cfg.target_measure()), domain, &cfg.flat_norm)?;
    out.flat = Some((flat.value, flat.estimated));
    let min = compute_f_of_mu(&pair.measure, &complex, &cfg.solver)?;
    out.f = Some(min.energy);
    out.iterations = Some(min.iterations);
    Ok(())
}

fn scaling_row(cfg: &ExperimentConfig, domain: &ConvexPolygon, eps: f64, predicted: f64) -> ScalingRow {
    let start = Instant::now();
    let mut v = ScalingValues::default();
    let error = scaling_values(cfg, domain, eps, &mut v).err().map(|e| e.to_string());
    let log = eps.ln().abs();
    ScalingRow {
        epsilon: eps,
        F: v.f,
        F_normalized: v.f.map(|f| f / (eps * eps * log)),
        F_recovery: v.f_recovery,
        predicted,
        flat_error: v.flat.map(|f| f.0),
        flat_estimated: v.flat.map(|f| f.1),
        tv: v.tv,
        ms_ok: v.ms_ok,
        volume_fraction: v.volume,
        iterations: v.iterations,
        wall_time: start.elapsed().as_secs_f64(),
        error,
    }
}

/// One row per ε, largest first. Failures at a given ε end up in `error`.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<Vec<ScalingRow>> {
    let domain = cfg.validate()?;
    let burgers: Vec<_> = cfg.dislocations.iter().map(|d| d.burgers()).collect();
    let predicted = predicted_limit(&burgers);
    let mut rows: Vec<ScalingRow> =
        cfg.epsilons.par_iter().map(|&eps| scaling_row(cfg, &domain, eps, predicted)).collect();
    rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    Ok(rows)
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Slope of `𝓕_ε/ε²` against `|ln ε|` over the rows that succeeded.
pub fn scaling_slope(rows: &[ScalingRow]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        rows.iter().filter_map(|r| r.F.map(|f| (r.epsilon.ln().abs(), f / (r.epsilon * r.epsilon)))).unzip();
    (x.len() >= 2).then(|| fit_slope(&x, &y))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexamplePoint {
    pub epsilon: f64,
    pub energy: f64,
    /// `|μ/ε|(Ω)`.
    pub tv: f64,
    pub flat_norm: f64,
    pub flat_estimated: bool,
    pub ms_ok: bool,
    /// Triangles on which the displacement is not constant.
    pub affected_triangles: Option<usize>,
    /// Smallest per-triangle energy over volume-constrained slips on those.
    pub constrained_minimum: Option<f64>,
    /// How many of them have a strictly positive constrained minimum.
    pub positive_triangles: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleCase {
    pub name: String,
    pub points: Vec<CounterexamplePoint>,
    /// Fitted exponent `a` in `|μ/ε|(Ω) ∝ ε^a`.
    pub tv_exponent: Option<f64>,
    /// Fitted exponent in `flat(μ/ε) ∝ ε^a`.
    pub flat_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub cases: Vec<CounterexampleCase>,
}

/// Slip search box for the constrained per-triangle minimum.
pub const CONSTRAINED_BOUND: i64 = 3;

fn degenerate_point(
    complex: &LatticeComplex,
    domain: &ConvexPolygon,
    u: &DisplacementField,
    slip: &SlipField,
    constrained: bool,
    flat_opts: &FlatNormOptions,
) -> Result<CounterexamplePoint> {
    let mu = dislocation_measure(slip, complex)?;
    let flat = flat_norm(&mu.to_scaled_atomic(), domain, flat_opts)?;
    let mut point = CounterexamplePoint {
        epsilon: complex.epsilon(),
        energy: energy(complex, u, slip, Region::All)?,
        tv: mu.scaled_total_variation(),
        flat_norm: flat.value,
        flat_estimated: flat.estimated,
        ms_ok: check_mild_separation(&mu, complex),
        affected_triangles: None,
        constrained_minimum: None,
        positive_triangles: None,
    };
    if constrained {
        let mut affected = 0;
        let mut positive = 0;
        let mut smallest = f64::INFINITY;
        for &t in complex.triangles() {
            if mu.atoms().contains_key(&t) || !displacement_varies_on(complex, u, t)? {
                continue;
            }
            affected += 1;
            let m = constrained_triangle_minimum(complex, u, t, CONSTRAINED_BOUND)?;
            if m > 0.0 {
                positive += 1;
            }
            smallest = smallest.min(m);
        }
        point.affected_triangles = Some(affected);
        point.constrained_minimum = (affected > 0).then_some(smallest);
        point.positive_triangles = Some(positive);
    }
    Ok(point)
}

fn log_exponent(points: &[CounterexamplePoint], f: impl Fn(&CounterexamplePoint) -> f64) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        points.iter().filter(|p| f(p) > 0.0).map(|p| (p.epsilon.ln(), f(p).ln())).unzip();
    (x.len() >= 2).then(|| fit_slope(&x, &y))
}

/// Unseparated slip, both cracks and the dilation at every ε of the config.
pub fn run_counterexamples(cfg: &ExperimentConfig) -> Result<CounterexampleReport> {
    let domain = cfg.validate()?;
    let names = ["unseparated", "crack_minus", "crack_plus", "dilation"];
    let points: Vec<Vec<CounterexamplePoint>> = names
        .par_iter()
        .map(|&name| {
            cfg.epsilons
                .iter()
                .map(|&eps| {
                    let complex = LatticeComplex::build(domain.clone(), eps)?;
                    let (u, slip, constrained) = match name {
                        "unseparated" => (DisplacementField::zeros(&complex), unseparated_slip(&complex), false),
                        "crack_minus" => {
                            let (u, s) = crack_pair(&complex, -1);
                            (u, s, true)
                        }
                        "crack_plus" => {
                            let (u, s) = crack_pair(&complex, 1);
                            (u, s, true)
                        }
                        _ => {
                            let (u, s) = dilation_pair(&complex, cfg.dilation_lambda);
                            (u, s, true)
                        }
                    };
                    degenerate_point(&complex, &domain, &u, &slip, constrained, &cfg.flat_norm)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let cases = names
        .iter()
        .zip(points)
        .map(|(name, points)| CounterexampleCase {
            name: name.to_string(),
            tv_exponent: log_exponent(&points, |p| p.tv),
            flat_exponent: log_exponent(&points, |p| p.flat_norm),
            points,
        })
        .collect();
    Ok(CounterexampleReport { cases })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatNormRow {
    pub epsilon: f64,
    pub flat_error: Option<f64>,
    pub lower_bound: Option<f64>,
    pub estimated: Option<bool>,
    pub atoms: Option<usize>,
    pub tv: Option<f64>,
    pub direction_x: Option<f64>,
    pub direction_y: Option<f64>,
    pub error: Option<String>,
}

/// `flat(μ_ε/ε − Σ b_k δ_{x_k})` for the recovery measures, without solving.
pub fn run_flatnorm(cfg: &ExperimentConfig) -> Result<Vec<FlatNormRow>> {
    let domain = cfg.validate()?;
    let atoms: Vec<_> = cfg.dislocations.iter().map(|d| (d.burgers(), d.point())).collect();
    let target = cfg.target_measure();
    let mut rows: Vec<FlatNormRow> = cfg
        .epsilons
        .par_iter()
        .map(|&eps| {
            let res = LatticeComplex::build(domain.clone(), eps).and_then(|c| {
                let pair = build_recovery_pair(&atoms, &c)?;
                let diff = pair.measure.to_scaled_atomic().minus(&target);
                Ok((flat_norm(&diff, &domain, &cfg.flat_norm)?, pair.measure.scaled_total_variation()))
            });
            match res {
                Ok((f, tv)) => FlatNormRow {
                    epsilon: eps,
                    flat_error: Some(f.value),
                    lower_bound: Some(f.lower_bound),
                    estimated: Some(f.estimated),
                    atoms: Some(f.atoms_used),
                    tv: Some(tv),
                    direction_x: Some(f.direction[0]),
                    direction_y: Some(f.direction[1]),
                    error: None,
                },
                Err(e) => FlatNormRow {
                    epsilon: eps,
                    flat_error: None,
                    lower_bound: None,
                    estimated: None,
                    atoms: None,
                    tv: None,
                    direction_x: None,
                    direction_y: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    Ok(rows)
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintAuditRow {
    pub epsilon: f64,
    pub dislocation_free: Option<usize>,
    pub satisfied: Option<usize>,
    pub fraction: Option<f64>,
    pub F: Option<f64>,
    pub F_normalized: Option<f64>,
    pub F_recovery: Option<f64>,
    pub error: Option<String>,
}

/// Volume-constraint status of the recovery slip, next to the scaling values
/// it produces.
pub fn run_constraint_audit(cfg: &ExperimentConfig) -> Result<Vec<ConstraintAuditRow>> {
    let domain = cfg.validate()?;
    let atoms: Vec<_> = cfg.dislocations.iter().map(|d| (d.burgers(), d.point())).collect();
    let rows = run_scaling(cfg)?;
    let audits: Vec<Result<_>> = cfg
        .epsilons
        .par_iter()
        .map(|&eps| {
            let c = LatticeComplex::build(domain.clone(), eps)?;
            let pair = build_recovery_pair(&atoms, &c)?;
            audit_volume_constraint(&pair.slip, &c)
        })
        .collect();
    let mut out: Vec<ConstraintAuditRow> = cfg
        .epsilons
        .iter()
        .zip(audits)
        .map(|(&eps, audit)| {
            let row = rows.iter().find(|r| r.epsilon == eps).expect("one scaling row per epsilon");
            let (audit, audit_err) = match audit {
                Ok(a) => (Some(a), None),
                Err(e) => (None, Some(e.to_string())),
            };
            ConstraintAuditRow {
                epsilon: eps,
                dislocation_free: audit.map(|a| a.dislocation_free),
                satisfied: audit.map(|a| a.satisfied),
                fraction: audit.map(|a| a.fraction()),
                F: row.F,
                F_normalized: row.F_normalized,
                F_recovery: row.F_recovery,
                error: audit_err.or_else(|| row.error.clone()),
            }
        })
        .collect();
    out.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    Ok(out)
}

/// `<out>.config.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn write_sidecar(cfg: &ExperimentConfig, kind: ExperimentKind, out: &Path) -> Result<()> {
    let mut resolved = cfg.clone();
    resolved.experiment = Some(kind);
    resolved.output = Some(out.display().to_string());
    let mut f = File::create(sidecar_path(out))?;
    serde_json::to_writer_pretty(&mut f, &resolved)?;
    writeln!(f)?;
    Ok(())
}

/// Writes `rows` as CSV with a header and the resolved config next to it.
pub fn write_csv<R: Serialize>(rows: &[R], cfg: &ExperimentConfig, kind: ExperimentKind, out: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(out)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    write_sidecar(cfg, kind, out)
}

pub fn write_json<R: Serialize>(report: &R, cfg: &ExperimentConfig, kind: ExperimentKind, out: &Path) -> Result<()> {
    let mut f = File::create(out)?;
    serde_json::to_writer_pretty(&mut f, report)?;
    writeln!(f)?;
    write_sidecar(cfg, kind, out)
}
