//! Experiment configuration and deterministic runs.
//!
//! Configs are flat structured text (TOML: `key = value` under section
//! headers) with `alpha` carried as a decimal string and parsed to a binary
//! float exactly once. A run executes one named experiment, writes a JSON
//! report embedding the full config and a CSV profile table, and returns
//! the exit code encoding how the outcome relates to what the theory
//! predicts for the system at hand: 0 when consistent, 2 when the run
//! contradicts a predicted saturation/completion property, 3 when
//! inconclusive.

use crate::error::{Error, Result};
use crate::relations::{rp_distance, rp_witness, RPQuery, RPWitness};
use crate::sampler::{
    sample_cube_set, write_sample_csv, DistanceProfile, MembershipVerdict, SamplingBudget,
};
use crate::saturation::{
    check_cube_saturation, check_face_saturation, sturmian_counterexample,
    unique_completion_check, CompletionReport, PatternProfile, SaturationReport, Verdict,
};
use crate::spaces::{Convention, FactorKind, FactorMapSpec, Metric, Point, SystemKind, SystemSpec};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "CUBE_SAMPLE")]
    CubeSample,
    #[serde(rename = "RP_ESTIMATE")]
    RpEstimate,
    #[serde(rename = "SATURATION")]
    Saturation,
    #[serde(rename = "FACE_SATURATION")]
    FaceSaturation,
    #[serde(rename = "COMPLETION")]
    Completion,
    #[serde(rename = "STURMIAN_CEX")]
    SturmianCex,
}

impl ExperimentKind {
    pub fn slug(&self) -> &'static str {
        match self {
            ExperimentKind::CubeSample => "cube_sample",
            ExperimentKind::RpEstimate => "rp_estimate",
            ExperimentKind::Saturation => "saturation",
            ExperimentKind::FaceSaturation => "face_saturation",
            ExperimentKind::Completion => "completion",
            ExperimentKind::SturmianCex => "sturmian_cex",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub kind: String,
    /// Decimal string, at least 15 significant digits.
    pub alpha: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncate_k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub n_max: i64,
    #[serde(default = "one")]
    pub grid: usize,
    #[serde(default = "one")]
    pub orbit_len: usize,
}

fn one() -> usize {
    1
}

fn default_tol() -> f64 {
    0.05
}

fn default_delta_match() -> f64 {
    0.01
}

fn default_factor_c() -> f64 {
    3.0
}

fn default_window() -> u32 {
    30
}

fn default_trials() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub d: usize,
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_delta_match")]
    pub delta_match: f64,
    #[serde(default = "default_factor_c")]
    pub factor_c: f64,
    #[serde(default = "default_window")]
    pub window: u32,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<FactorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<PointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<PointConfig>,
    pub schedule: Vec<ScheduleEntry>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn count_significant_digits(s: &str) -> usize {
    let digits: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
    let trimmed = digits.trim_start_matches('0');
    trimmed.len()
}

fn parse_alpha(s: &str) -> Result<f64> {
    if count_significant_digits(s) < 15 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be given to at least 15 significant digits, got \"{s}\""
        )));
    }
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::InvalidParameter(format!("alpha \"{s}\" does not parse: {e}")))
}

/// A config with every reference resolved against the built-in systems.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub config: ExperimentConfig,
    pub sys: SystemSpec,
    pub factor: Option<FactorMapSpec>,
    pub x: Option<Point>,
    pub y: Option<Point>,
    pub schedule: Vec<SamplingBudget>,
    pub metric: Metric,
}

fn resolve_point(sys: &SystemSpec, p: &PointConfig, which: &str) -> Result<Point> {
    match sys.kind() {
        SystemKind::Rotation | SystemKind::AffineSkew => {
            let coords = p.coords.clone().ok_or_else(|| {
                Error::InvalidParameter(format!("point {which} needs coords for a torus system"))
            })?;
            if coords.len() != sys.dim() {
                return Err(Error::InvalidParameter(format!(
                    "point {which} has {} coords, system dimension is {}",
                    coords.len(),
                    sys.dim()
                )));
            }
            Point::torus(coords)
        }
        SystemKind::Sturmian => {
            let base = p.base.ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "point {which} needs a base for the Sturmian system"
                ))
            })?;
            let convention = match p.convention.as_deref() {
                None | Some("LEFT_CLOSED") => Convention::LeftClosed,
                Some("RIGHT_CLOSED") => Convention::RightClosed,
                Some(other) => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown convention \"{other}\" for point {which}"
                    )))
                }
            };
            Point::symbolic(base, convention)
        }
    }
}

pub fn resolve(config: &ExperimentConfig) -> Result<ResolvedConfig> {
    let alpha = parse_alpha(&config.system.alpha)?;
    let sys = match config.system.kind.as_str() {
        "ROTATION" => SystemSpec::rotation(alpha)?,
        "AFFINE_SKEW" => {
            let dim = config.system.dim.ok_or_else(|| {
                Error::InvalidParameter("AFFINE_SKEW needs a dim field".into())
            })?;
            SystemSpec::affine_skew(alpha, dim)?
        }
        "STURMIAN" => SystemSpec::sturmian(alpha)?,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown system kind \"{other}\""
            )))
        }
    };
    let factor = match &config.factor {
        None => None,
        Some(fc) => {
            let kind = match fc.kind.as_str() {
                "IDENTITY" => FactorKind::Identity,
                "SKEW_TRUNCATE" => FactorKind::SkewTruncate(fc.truncate_k.ok_or_else(|| {
                    Error::InvalidParameter("SKEW_TRUNCATE needs truncate_k".into())
                })?),
                "STURMIAN_TO_ROTATION" => FactorKind::SturmianToRotation,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown factor kind \"{other}\""
                    )))
                }
            };
            Some(FactorMapSpec::new(sys.clone(), kind)?)
        }
    };
    if config.d < 1 {
        return Err(Error::InvalidParameter("d must be >= 1".into()));
    }
    if config.schedule.is_empty() {
        return Err(Error::InvalidParameter("schedule must be non-empty".into()));
    }
    let schedule = config
        .schedule
        .iter()
        .map(|e| SamplingBudget::new(e.n_max, e.grid, e.orbit_len, config.seed))
        .collect::<Result<Vec<_>>>()?;
    let x = config
        .x
        .as_ref()
        .map(|p| resolve_point(&sys, p, "x"))
        .transpose()?;
    let y = config
        .y
        .as_ref()
        .map(|p| resolve_point(&sys, p, "y"))
        .transpose()?;

    match config.experiment {
        ExperimentKind::RpEstimate => {
            if x.is_none() || y.is_none() {
                return Err(Error::InvalidParameter(
                    "RP_ESTIMATE needs points x and y".into(),
                ));
            }
        }
        ExperimentKind::FaceSaturation => {
            if x.is_none() {
                return Err(Error::InvalidParameter(
                    "FACE_SATURATION needs a base point x".into(),
                ));
            }
            if factor.is_none() {
                return Err(Error::InvalidParameter(
                    "FACE_SATURATION needs a factor block".into(),
                ));
            }
        }
        ExperimentKind::Saturation => {
            if factor.is_none() {
                return Err(Error::InvalidParameter(
                    "SATURATION needs a factor block".into(),
                ));
            }
        }
        ExperimentKind::SturmianCex => {
            if sys.kind() != SystemKind::Sturmian {
                return Err(Error::InvalidParameter(
                    "STURMIAN_CEX needs a STURMIAN system".into(),
                ));
            }
        }
        ExperimentKind::CubeSample | ExperimentKind::Completion => {}
    }

    let metric = Metric::new(sys.alpha(), config.window);
    Ok(ResolvedConfig {
        config: config.clone(),
        sys,
        factor,
        x,
        y,
        schedule,
        metric,
    })
}

/// Rotations and unipotent affine skew products are distal; the Sturmian
/// system is not (it has proper proximal pairs), so the saturation
/// statements carry no prediction for it.
fn predicts_saturation(sys: &SystemSpec) -> bool {
    matches!(sys.kind(), SystemKind::Rotation | SystemKind::AffineSkew)
}

/// The smallest `k` for which the system has unique cube completion at
/// dimension `k + 1`: its nil-step order. `None` when no finite order
/// applies.
fn step_order(sys: &SystemSpec) -> Option<usize> {
    match sys.kind() {
        SystemKind::Rotation => Some(1),
        SystemKind::AffineSkew => Some(sys.dim()),
        SystemKind::Sturmian => None,
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
enum ReportBody {
    Sample {
        n_configs: usize,
        csv: String,
    },
    Rp {
        verdict: MembershipVerdict,
        profile: DistanceProfile,
        #[serde(skip_serializing_if = "Option::is_none")]
        witness: Option<RPWitness>,
    },
    Saturation {
        report: SaturationReport,
    },
    Completion {
        report: CompletionReport,
    },
    Patterns {
        patterns: Vec<PatternProfile>,
    },
}

#[derive(Serialize)]
struct Report<'a> {
    experiment: ExperimentKind,
    created_unix_ms: u128,
    resolved_alpha: f64,
    params: &'a ExperimentConfig,
    exit_code: i32,
    #[serde(flatten)]
    body: &'a ReportBody,
}

/// Paths and exit status of a finished run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report_path: PathBuf,
    pub csv_path: PathBuf,
    pub summary: String,
}

fn profile_csv_rows(out: &mut String, profile_id: usize, label: &str, p: &DistanceProfile) {
    for (i, pt) in p.points().iter().enumerate() {
        out.push_str(&format!(
            "{profile_id},{label},{i},{},{},{},{}\n",
            pt.budget.n_max, pt.budget.grid, pt.budget.orbit_len, pt.distance
        ));
    }
}

const PROFILE_CSV_HEADER: &str =
    "profile_id,label,point_index,n_max,grid,orbit_len,distance\n";

/// Execute the configured experiment and write its report files under
/// `out_dir`. Identical config and seed give byte-identical CSVs and JSON
/// identical up to the `created_unix_ms` field.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let r = resolve(config)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::InvalidParameter(format!("cannot create {out_dir:?}: {e}")))?;
    let slug = config.experiment.slug();
    let csv_path = out_dir.join(format!("{slug}_profiles.csv"));
    let report_path = out_dir.join(format!("{slug}_report.json"));

    let mut csv = String::new();
    let (body, exit_code, summary) = match config.experiment {
        ExperimentKind::CubeSample => {
            let budget = r.schedule.last().unwrap();
            let s = sample_cube_set(&r.sys, config.d, budget)?;
            let mut buf = Vec::new();
            write_sample_csv(&s, &mut buf)
                .map_err(|e| Error::InvalidParameter(format!("csv write failed: {e}")))?;
            csv = String::from_utf8(buf).expect("csv is utf-8");
            let n = s.len();
            (
                ReportBody::Sample {
                    n_configs: n,
                    csv: format!("{slug}_profiles.csv"),
                },
                0,
                format!("sampled {n} configurations"),
            )
        }
        ExperimentKind::RpEstimate => {
            let q = RPQuery {
                sys: r.sys.clone(),
                x: r.x.clone().unwrap(),
                y: r.y.clone().unwrap(),
                d: config.d,
                schedule: r.schedule.clone(),
            };
            let profile = rp_distance(&q, &r.metric)?;
            let verdict = profile.verdict(config.tol);
            let witness = rp_witness(
                &r.sys,
                &q.x,
                &q.y,
                config.d,
                config.tol,
                r.schedule.last().unwrap(),
                &r.metric,
            )?;
            csv.push_str(PROFILE_CSV_HEADER);
            profile_csv_rows(&mut csv, 0, "rp", &profile);
            let code = match verdict {
                MembershipVerdict::Member | MembershipVerdict::NonMemberEvidence => 0,
                MembershipVerdict::Inconclusive => 3,
            };
            let summary = format!(
                "rp verdict {:?}, final distance {}",
                verdict,
                profile.final_distance()
            );
            (
                ReportBody::Rp {
                    verdict,
                    profile,
                    witness,
                },
                code,
                summary,
            )
        }
        ExperimentKind::Saturation => {
            let report = check_cube_saturation(
                &r.sys,
                r.factor.as_ref().unwrap(),
                config.d,
                &r.schedule,
                config.n_trials,
                config.tol,
                config.seed,
                &r.metric,
            )?;
            csv.push_str(PROFILE_CSV_HEADER);
            for (i, p) in report.profiles.iter().enumerate() {
                profile_csv_rows(&mut csv, i, &format!("trial-{i}"), p);
            }
            let code = saturation_exit_code(&r.sys, report.verdict);
            let summary = format!(
                "saturation verdict {:?}, max final distance {}",
                report.verdict, report.max_final_distance
            );
            (ReportBody::Saturation { report }, code, summary)
        }
        ExperimentKind::FaceSaturation => {
            let report = check_face_saturation(
                &r.sys,
                r.factor.as_ref().unwrap(),
                config.d,
                r.x.as_ref().unwrap(),
                &r.schedule,
                config.n_trials,
                config.tol,
                config.seed,
                &r.metric,
            )?;
            csv.push_str(PROFILE_CSV_HEADER);
            for (i, p) in report.profiles.iter().enumerate() {
                profile_csv_rows(&mut csv, i, &format!("trial-{i}"), p);
            }
            let code = saturation_exit_code(&r.sys, report.verdict);
            let summary = format!(
                "face saturation verdict {:?}, max final distance {}",
                report.verdict, report.max_final_distance
            );
            (ReportBody::Saturation { report }, code, summary)
        }
        ExperimentKind::Completion => {
            let budget = r.schedule.last().unwrap();
            let s = sample_cube_set(&r.sys, config.d, budget)?;
            let report =
                unique_completion_check(&s, config.delta_match, config.factor_c, &r.metric)?;
            csv.push_str("i,j,free_rank,match_distance,free_distance\n");
            for p in &report.pairs {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    p.i, p.j, p.free_rank, p.match_distance, p.free_distance
                ));
            }
            let predicted_unique = step_order(&r.sys).is_some_and(|o| o <= config.d - 1);
            let code = match (report.verdict, predicted_unique) {
                (Verdict::Consistent, true) | (Verdict::ViolationEvidence, false) => 0,
                (Verdict::Inconclusive, _) => 3,
                _ => 2,
            };
            let summary = format!(
                "completion verdict {:?} over {} near-collision pairs",
                report.verdict, report.n_pairs
            );
            (ReportBody::Completion { report }, code, summary)
        }
        ExperimentKind::SturmianCex => {
            let patterns =
                sturmian_counterexample(&r.sys, config.d, &r.schedule, config.window)?;
            csv.push_str(PROFILE_CSV_HEADER);
            for (i, p) in patterns.iter().enumerate() {
                profile_csv_rows(&mut csv, i, &p.pattern.join("|"), &p.profile);
            }
            let any_plateau_above = patterns
                .iter()
                .any(|p| p.profile.plateaued() && p.profile.final_distance() >= config.tol);
            let all_below = patterns
                .iter()
                .all(|p| p.profile.final_distance() < config.tol);
            let code = if any_plateau_above {
                0 // the expected counterexample shows up
            } else if all_below {
                2 // every pattern converged: contradicts the claim
            } else {
                3
            };
            let n_out = patterns
                .iter()
                .filter(|p| p.profile.final_distance() >= config.tol)
                .count();
            let summary = format!("{n_out} of {} patterns stay above tolerance", patterns.len());
            (ReportBody::Patterns { patterns }, code, summary)
        }
    };

    fs::write(&csv_path, csv.as_bytes())
        .map_err(|e| Error::InvalidParameter(format!("cannot write {csv_path:?}: {e}")))?;

    let created_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let report = Report {
        experiment: config.experiment,
        created_unix_ms,
        resolved_alpha: r.sys.alpha(),
        params: config,
        exit_code,
        body: &body,
    };
    let mut f = fs::File::create(&report_path)
        .map_err(|e| Error::InvalidParameter(format!("cannot write {report_path:?}: {e}")))?;
    serde_json::to_writer_pretty(&mut f, &report)
        .map_err(|e| Error::InvalidParameter(format!("report serialization failed: {e}")))?;
    writeln!(f).ok();

    Ok(RunOutcome {
        exit_code,
        report_path,
        csv_path,
        summary,
    })
}

fn saturation_exit_code(sys: &SystemSpec, v: Verdict) -> i32 {
    match v {
        Verdict::Consistent => 0,
        Verdict::ViolationEvidence => {
            if predicts_saturation(sys) {
                2
            } else {
                0
            }
        }
        Verdict::Inconclusive => 3,
    }
}

/// Human-readable table of the built-in systems and factor maps.
pub fn list_systems() -> String {
    [
        "built-in systems:",
        "  ROTATION       circle rotation by alpha; dim = 1",
        "  AFFINE_SKEW    unipotent affine skew product on the dim-torus:",
        "                 (x1, .., xs) -> (x1 + alpha, x2 + x1, .., xs + x_{s-1})",
        "  STURMIAN       two-interval coding of the rotation over {0,1};",
        "                 points carry a convention (LEFT_CLOSED | RIGHT_CLOSED)",
        "                 selecting the coding on the critical orbit",
        "",
        "factor maps:",
        "  IDENTITY              any system to itself",
        "  SKEW_TRUNCATE(k)      AFFINE_SKEW dim s -> first k coordinates (k < s)",
        "  STURMIAN_TO_ROTATION  coding point -> its base circle point",
        "",
        "alpha must be numerically irrational: farther than 1e-6/q^2 from",
        "every rational p/q with q <= 100.",
    ]
    .join("\n")
}
