//! Seeded Monte Carlo harness for the critical radii.
//!
//! Trial `i` draws from ChaCha8 stream `i` of the master seed, so a run is
//! reproducible bit for bit regardless of how trials are scheduled.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexRegion;
use crate::graph::critical_radii_on;
use crate::spatial::{default_cell_size, CellGrid, PointSample, ProcessKind};
use crate::theory::{limit_probability, TheoryParams};

/// Column names of the per-trial CSV, in order.
pub const CSV_HEADER: [&str; 8] = [
    "trial",
    "count",
    "rho_delta",
    "rho_kappa",
    "r_n",
    "below_delta",
    "below_kappa",
    "equal",
];

/// One experiment. `workers` and `output` affect only how and where the
/// run happens, so they are left out of the serialized echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub region: String,
    pub n: u64,
    pub k: usize,
    pub c: f64,
    pub process: ProcessKind,
    pub trials: u64,
    pub master_seed: u64,
    /// Worker threads; 0 uses the rayon default.
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            region: "cube".into(),
            n: 1000,
            k: 1,
            c: 0.0,
            process: ProcessKind::Binomial,
            trials: 100,
            master_seed: 0,
            workers: 0,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.k < 1 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.n < self.k as u64 + 2 {
            return Err(Error::Config(format!(
                "n = {} must be at least k + 2 = {}",
                self.n,
                self.k + 2
            )));
        }
        if !self.c.is_finite() {
            return Err(Error::Config(format!("c must be finite, got {}", self.c)));
        }
        Ok(())
    }
}

/// A validated configuration with its region and theoretical radius
/// resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub region: ConvexRegion,
    pub theory: TheoryParams,
    cell_size: f64,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let region = ConvexRegion::from_token(&config.region)?;
        let theory = TheoryParams::for_region(&region, config.n as f64, config.k, config.c)?;
        let cell_size = default_cell_size(theory.r_n, &region.bounding_box());
        Ok(Experiment {
            config,
            region,
            theory,
            cell_size,
        })
    }

    /// The random stream of trial `index`.
    pub fn trial_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.master_seed);
        rng.set_stream(index);
        rng
    }

    /// The point sample of trial `index`.
    pub fn trial_sample(&self, index: u64) -> Result<PointSample> {
        let mut rng = self.trial_rng(index);
        let mut sample = match self.config.process {
            ProcessKind::Binomial => {
                sample_binomial_process(&self.region, self.config.n, &mut rng)?
            }
            ProcessKind::Poisson => {
                sample_poisson_process(&self.region, self.config.n as f64, &mut rng)?
            }
        };
        sample.region = self.config.region.clone();
        sample.seed = self.config.master_seed;
        Ok(sample)
    }
}

/// Exactly `n` i.i.d. uniform points.
pub fn sample_binomial_process<R: Rng + ?Sized>(
    region: &ConvexRegion,
    n: u64,
    rng: &mut R,
) -> Result<PointSample> {
    let points = (0..n)
        .map(|_| region.sample_uniform(rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(PointSample {
        points,
        region: region.to_string(),
        process: ProcessKind::Binomial,
        seed: 0,
        n_param: n,
    })
}

/// Poisson(`intensity`·|Ω|) many i.i.d. uniform points.
pub fn sample_poisson_process<R: Rng + ?Sized>(
    region: &ConvexRegion,
    intensity: f64,
    rng: &mut R,
) -> Result<PointSample> {
    let mean = intensity * region.volume();
    let dist =
        Poisson::new(mean).map_err(|e| Error::domain(format!("Poisson mean {mean}: {e}")))?;
    let count = dist.sample(rng) as u64;
    let points = (0..count)
        .map(|_| region.sample_uniform(rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(PointSample {
        points,
        region: region.to_string(),
        process: ProcessKind::Poisson,
        seed: 0,
        n_param: intensity.round() as u64,
    })
}

/// Outcome of one trial. Radii are `None` when the sample is too small to
/// reach degree `k + 1` at any radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub count: usize,
    pub rho_delta: Option<f64>,
    pub rho_kappa: Option<f64>,
    pub r_n: f64,
    pub below_delta: bool,
    pub below_kappa: bool,
    pub equal: bool,
}

/// Runs trial `index` at level `k + 1`.
pub fn run_trial(exp: &Experiment, index: u64) -> Result<TrialRecord> {
    let sample = exp.trial_sample(index)?;
    let level = exp.config.k + 1;
    let r_n = exp.theory.r_n;
    if sample.len() < level + 1 {
        return Ok(TrialRecord {
            trial: index,
            count: sample.len(),
            rho_delta: None,
            rho_kappa: None,
            r_n,
            below_delta: false,
            below_kappa: false,
            equal: false,
        });
    }
    let grid = CellGrid::new(&sample.points, exp.cell_size);
    let radii = critical_radii_on(&grid, level)?;
    Ok(TrialRecord {
        trial: index,
        count: sample.len(),
        rho_delta: Some(radii.rho_delta),
        rho_kappa: Some(radii.rho_kappa),
        r_n,
        below_delta: radii.rho_delta <= r_n,
        below_kappa: radii.rho_kappa <= r_n,
        equal: radii.equal,
    })
}

/// Which critical radius to read from a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusField {
    Delta,
    Kappa,
}

impl TrialRecord {
    pub fn radius(&self, field: RadiusField) -> Option<f64> {
        match field {
            RadiusField::Delta => self.rho_delta,
            RadiusField::Kappa => self.rho_kappa,
        }
    }
}

/// Fraction of records whose radius is ≤ `threshold`; undefined radii
/// count as exceeding it.
pub fn empirical_cdf_at(
    records: &[TrialRecord],
    field: RadiusField,
    threshold: f64,
) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("record set"));
    }
    let hits = records
        .iter()
        .filter(|r| r.radius(field).is_some_and(|x| x <= threshold))
        .count();
    Ok(hits as f64 / records.len() as f64)
}

/// Fraction of records whose two radii coincide.
pub fn equality_rate(records: &[TrialRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("record set"));
    }
    Ok(records.iter().filter(|r| r.equal).count() as f64 / records.len() as f64)
}

/// Aggregates over a record set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub trials: u64,
    pub p_hat_delta: f64,
    pub p_hat_kappa: f64,
    pub se_delta: f64,
    pub se_kappa: f64,
    pub equality_rate: f64,
}

impl Aggregates {
    pub fn from_records(records: &[TrialRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Empty("record set"));
        }
        let m = records.len() as f64;
        let frac = |f: fn(&TrialRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / m;
        let p_delta = frac(|r| r.below_delta);
        let p_kappa = frac(|r| r.below_kappa);
        let se = |p: f64| (p * (1.0 - p) / m).sqrt();
        Ok(Aggregates {
            trials: records.len() as u64,
            p_hat_delta: p_delta,
            p_hat_kappa: p_kappa,
            se_delta: se(p_delta),
            se_kappa: se(p_kappa),
            equality_rate: equality_rate(records)?,
        })
    }
}

/// Contents of the summary JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub xi: f64,
    pub r_n: f64,
    pub p_hat_delta: f64,
    pub p_hat_kappa: f64,
    pub se_delta: f64,
    pub se_kappa: f64,
    pub equality_rate: f64,
    pub theory_limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub theory: TheoryParams,
    pub records: Vec<TrialRecord>,
    pub aggregates: Aggregates,
    pub theory_limit: f64,
}

/// Runs every trial and aggregates in trial order. On failure, reports the
/// lowest failing trial index.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let exp = Experiment::new(config.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<TrialRecord>> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|i| run_trial(&exp, i))
            .collect()
    });
    let mut records = Vec::with_capacity(outcomes.len());
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => {
                return Err(Error::Trial {
                    index: i as u64,
                    source: Box::new(e),
                })
            }
        }
    }
    let aggregates = Aggregates::from_records(&records)?;
    Ok(ExperimentResult {
        config: exp.config,
        theory: exp.theory,
        records,
        aggregates,
        theory_limit: limit_probability(config.c),
    })
}

/// `<dir>/<stem>.summary.json` next to a results CSV.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("summary.json")
}

impl ExperimentResult {
    pub fn summary(&self) -> Summary {
        let a = &self.aggregates;
        Summary {
            config: self.config.clone(),
            xi: self.theory.xi,
            r_n: self.theory.r_n,
            p_hat_delta: a.p_hat_delta,
            p_hat_kappa: a.p_hat_kappa,
            se_delta: a.se_delta,
            se_kappa: a.se_kappa,
            equality_rate: a.equality_rate,
            theory_limit: self.theory_limit,
        }
    }

    /// Writes the CSV to `csv_path` and the summary next to it; returns the
    /// summary path.
    pub fn write(&self, csv_path: &Path) -> Result<PathBuf> {
        write_records_csv(csv_path, &self.records)?;
        let json_path = summary_path(csv_path);
        write_summary_json(&json_path, &self.summary())?;
        Ok(json_path)
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn fmt_bool(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_records_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| Error::Serialize(format!("{}: {e}", path.display()));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            r.count.to_string(),
            fmt_opt(r.rho_delta),
            fmt_opt(r.rho_kappa),
            r.r_n.to_string(),
            fmt_bool(r.below_delta).into(),
            fmt_bool(r.below_kappa).into(),
            fmt_bool(r.equal).into(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary_json(path: &Path, summary: &Summary) -> Result<()> {
    let text =
        serde_json::to_string_pretty(summary).map_err(|e| Error::Serialize(e.to_string()))?;
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .and_then(|_| file.write_all(b"\n"))
        .map_err(|e| Error::io(path, e))
}

pub fn read_summary_json(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.into(),
        line: e.line(),
        reason: e.to_string(),
    })
}

/// Reads a results CSV. Line numbers in errors count the header as line 1.
pub fn read_records_csv(path: &Path) -> Result<Vec<(usize, TrialRecord)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(file);
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: path.into(),
        line,
        reason,
    };
    let mut rows = reader.records();
    let header = match rows.next() {
        None => return Err(Error::Empty("results CSV")),
        Some(h) => h.map_err(|e| parse_err(1, e.to_string()))?,
    };
    if header.iter().ne(CSV_HEADER) {
        return Err(parse_err(
            1,
            format!("expected header `{}`", CSV_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    for row in rows {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != CSV_HEADER.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()),
            ));
        }
        let field = |i: usize| row.get(i).unwrap_or("");
        let int = |i: usize| {
            field(i).parse::<u64>().map_err(|_| {
                parse_err(
                    line,
                    format!("{}: `{}` is not an integer", CSV_HEADER[i], field(i)),
                )
            })
        };
        let real = |i: usize| {
            field(i).parse::<f64>().map_err(|_| {
                parse_err(
                    line,
                    format!("{}: `{}` is not a number", CSV_HEADER[i], field(i)),
                )
            })
        };
        let opt_real = |i: usize| {
            if field(i).is_empty() {
                Ok(None)
            } else {
                real(i).map(Some)
            }
        };
        let flag = |i: usize| match field(i) {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(parse_err(
                line,
                format!("{}: `{other}` is not 0 or 1", CSV_HEADER[i]),
            )),
        };
        out.push((
            line,
            TrialRecord {
                trial: int(0)?,
                count: int(1)? as usize,
                rho_delta: opt_real(2)?,
                rho_kappa: opt_real(3)?,
                r_n: real(4)?,
                below_delta: flag(5)?,
                below_kappa: flag(6)?,
                equal: flag(7)?,
            },
        ));
    }
    if out.is_empty() {
        return Err(Error::Empty("results CSV"));
    }
    Ok(out)
}

/// A record that breaks one of the invariants tying its fields together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub line: usize,
    pub trial: u64,
    pub reason: String,
}

/// Aggregates recomputed from a CSV together with any invariant violations.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub aggregates: Aggregates,
    pub violations: Vec<Violation>,
}

/// Checks one record against the invariants of the trial definition.
pub fn record_violations(r: &TrialRecord) -> Vec<String> {
    let mut out = Vec::new();
    match (r.rho_delta, r.rho_kappa) {
        (Some(d), Some(k)) => {
            if k < d {
                out.push(format!("rho_kappa {k} < rho_delta {d}"));
            }
            if r.below_delta != (d <= r.r_n) {
                out.push("below_delta disagrees with rho_delta and r_n".into());
            }
            if r.below_kappa != (k <= r.r_n) {
                out.push("below_kappa disagrees with rho_kappa and r_n".into());
            }
            if r.equal != (d == k) {
                out.push("equal disagrees with the radii".into());
            }
        }
        (None, None) => {
            if r.below_delta || r.below_kappa || r.equal {
                out.push("flags set on a trial with undefined radii".into());
            }
        }
        _ => out.push("exactly one radius is undefined".into()),
    }
    if r.below_kappa && !r.below_delta {
        out.push("below_kappa without below_delta".into());
    }
    out
}

/// Recomputes aggregates from a results CSV and checks every row.
pub fn analyze(path: &Path) -> Result<Analysis> {
    let rows = read_records_csv(path)?;
    let mut violations = Vec::new();
    for (pos, (line, r)) in rows.iter().enumerate() {
        if r.trial != pos as u64 {
            violations.push(Violation {
                line: *line,
                trial: r.trial,
                reason: format!("trial index {} out of sequence (expected {pos})", r.trial),
            });
        }
        for reason in record_violations(r) {
            violations.push(Violation {
                line: *line,
                trial: r.trial,
                reason,
            });
        }
    }
    let records: Vec<TrialRecord> = rows.into_iter().map(|(_, r)| r).collect();
    Ok(Analysis {
        aggregates: Aggregates::from_records(&records)?,
        violations,
    })
}
