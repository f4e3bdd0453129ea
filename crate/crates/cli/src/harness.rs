//! Evaluates scenarios: closed-form rates, bounds and simulated trials.

use std::io::Write;

use ccsim_core::adaptive::{self, AdaptiveScheme, ClusterModel};
use ccsim_core::analytics::{
    chi, hcm_bound, pam_bound, pcd_bound, r_dec, r_ma_bound, r_man, r_man_ub, r_mu_bound,
    r_su_bound,
};
use ccsim_core::decentralized::dec_simulate;
use ccsim_core::man::{decode_all, run_with_sharing, ManConfig, ManScheme};
use ccsim_core::model::{derive_seed, measured_rate, padded_size, UserFailure};
use ccsim_core::multiaccess::{ma_simulate, CyclicAccess, MaPlan, MaRegime};
use ccsim_core::multilevel::{
    mu_partition, mu_partition_candidates, mu_partition_from_sets, mu_worst_case_demands,
    su_partition, su_simulate, Level, LevelPartitionMu, LevelPartitionSu, MuPlan, MuVariant,
    SuPlan,
};
use ccsim_core::{DemandVector, Error as CoreError, FileLibrary, Rational, RunReport};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{config_err, CliError, Result};
use crate::output::{big, fmt_big, fmt_rational, sig12, CurveRow, TrialRow, Value};
use crate::scenario::{
    DemandPolicy, Exec, PartitionSpec, Scenario, Scheme, Simulate, DEC_DEFAULT_FILE_SIZE,
};

/// Largest estimated file-size multiple attempted at byte level.
const MAX_MULTIPLE: f64 = 1e7;
/// Largest library (all files, bytes) generated for one trial.
pub const MAX_LIBRARY_BYTES: usize = 1 << 27;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub threads: usize,
    /// Flip a cached bit before decoding (centralized scheme only).
    pub fault_inject: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            threads: default_threads(None),
            fault_inject: false,
        }
    }
}

/// `--threads`, else `CCSIM_THREADS`, else the number of CPUs.
pub fn default_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var("CCSIM_THREADS").ok()?.parse().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))
}

/// Outcome of one simulated trial.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub trial: usize,
    pub seed: u64,
    pub rate: BigRational,
    pub users: usize,
    pub failures: Vec<UserFailure>,
    /// `(label, bytes)` of every broadcast payload; empty in counting mode.
    pub log: Vec<(String, usize)>,
}

/// One grid point (and partition, for multilevel schemes).
#[derive(Clone, Debug)]
pub struct Point {
    pub row: CurveRow,
    pub outcomes: Vec<Outcome>,
    pub file_size: Option<usize>,
}

impl Point {
    fn failures(&self) -> usize {
        self.outcomes.iter().map(|o| o.failures.len()).sum()
    }
}

fn ln_binom(n: usize, k: usize) -> f64 {
    let k = k.min(n.saturating_sub(k));
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

/// Whether the centralized scheme at this size has a manageable file-size
/// multiple (checked before anything calls the exact binomials).
fn man_small(n_files: usize, n_caches: usize, m: Rational) -> bool {
    if n_files == 0 {
        return true;
    }
    let t = m * Rational::from_integer(n_caches as i128) / Rational::from_integer(n_files as i128);
    let lo = t.floor().to_integer().max(0) as usize;
    let hi = t.ceil().to_integer().max(0) as usize;
    let mut est = ln_binom(n_caches, lo) + (*t.denom() as f64).ln();
    if hi != lo {
        est += ln_binom(n_caches, hi);
    }
    est <= MAX_MULTIPLE.ln()
}

/// How a trial is executed.
#[derive(Clone, Debug)]
enum Runner {
    Man(ManConfig),
    Dec,
    Ma(MaPlan),
    Su(SuPlan),
    Mu(MuPlan),
    Adaptive {
        scheme: AdaptiveScheme,
        model: ClusterModel,
        count: bool,
    },
}

struct Prepared {
    runner: Runner,
    m: Rational,
    file_size: usize,
    note: &'static str,
}

fn adaptive_scheme(sc: &Scenario) -> AdaptiveScheme {
    match sc.scheme {
        Scheme::Pcd => AdaptiveScheme::Pcd,
        Scheme::Pam => AdaptiveScheme::Pam,
        _ => AdaptiveScheme::Hcm(sc.t),
    }
}

fn cluster_model(sc: &Scenario) -> Result<ClusterModel> {
    Ok(ClusterModel::new(
        sc.n_files,
        sc.n_caches,
        sc.d,
        sc.rho,
        sc.t0,
    )?)
}

fn requested_size(sc: &Scenario, multiple: usize) -> usize {
    let want = sc
        .file_size
        .unwrap_or(if sc.scheme == Scheme::Decentralized {
            DEC_DEFAULT_FILE_SIZE
        } else {
            multiple
        });
    padded_size(want, multiple)
}

/// Builds the byte-level runner for one point, or `None` when simulation is
/// off or (in auto mode) too large.
fn prepare(
    sc: &Scenario,
    m: Rational,
    su: Option<&LevelPartitionSu>,
    mu: Option<&LevelPartitionMu>,
    force: bool,
) -> Result<Option<Prepared>> {
    let mode = if force { Simulate::On } else { sc.simulate };
    if mode == Simulate::Off {
        return Ok(None);
    }
    let too_big = |what: String| -> Result<Option<Prepared>> {
        if mode == Simulate::On {
            config_err(format!(
                "{what}; byte-level simulation is not feasible at this size"
            ))
        } else {
            Ok(None)
        }
    };
    let n_total: usize = sc.n_files;
    let bytes = |runner: Runner, multiple: usize, note| -> Result<Option<Prepared>> {
        let file_size = requested_size(sc, multiple);
        if file_size.saturating_mul(n_total) > MAX_LIBRARY_BYTES {
            return Ok(None);
        }
        Ok(Some(Prepared {
            runner,
            m,
            file_size,
            note,
        }))
    };
    let prepared = match sc.scheme {
        Scheme::Man => {
            if !man_small(sc.n_files, sc.n_caches, m) {
                return too_big(format!("C({}, t) subfiles per file", sc.n_caches));
            }
            let cfg = ManConfig::new(sc.n_files, sc.n_caches, m)?;
            let multiple = ManScheme::new(cfg.clone(), "man").file_size_multiple();
            bytes(Runner::Man(cfg), multiple, "")?
        }
        Scheme::Decentralized => bytes(Runner::Dec, 1, "")?,
        Scheme::Multiaccess => {
            let plan = MaPlan::new(CyclicAccess::new(sc.n_caches, sc.d)?, sc.n_files, m)?;
            let man_m = match plan.regime() {
                MaRegime::SingleCache => Some(m),
                MaRegime::Shared => Some(Rational::new(sc.n_files as i128, 2 * sc.d as i128)),
                MaRegime::FullCoverage => None,
            };
            if man_m.is_some_and(|x| !man_small(sc.n_files, sc.n_caches, x)) {
                return too_big(format!("C({}, t) subfiles per file", sc.n_caches));
            }
            let multiple = plan.file_size_multiple();
            bytes(Runner::Ma(plan), multiple, "")?
        }
        Scheme::Su => {
            let part = su.expect("su partition");
            let merged: usize = part.i.iter().map(|&x| sc.levels[x].n_files).sum();
            let mem = m.min(Rational::from_integer(merged as i128));
            if !man_small(merged, sc.n_caches, mem) {
                return too_big(format!("C({}, t) subfiles per file", sc.n_caches));
            }
            let plan = SuPlan::new(&sc.levels, m, part.clone())?;
            let multiple = plan.file_size_multiple();
            bytes(Runner::Su(plan), multiple, "")?
        }
        Scheme::Mu => {
            let plan = MuPlan::new(
                &sc.levels,
                sc.n_caches,
                m,
                mu.expect("mu partition").clone(),
            )?;
            let small = plan
                .level_memory()
                .iter()
                .zip(&sc.levels)
                .all(|(mem, l)| man_small(l.n_files, sc.n_caches, *mem));
            if !small {
                return too_big(format!("C({}, t) subfiles per file", sc.n_caches));
            }
            let multiple = plan.file_size_multiple();
            bytes(Runner::Mu(plan), multiple, "")?
        }
        Scheme::Pcd | Scheme::Pam | Scheme::Hcm => {
            let model = cluster_model(sc)?;
            let scheme = adaptive_scheme(sc);
            let counted = Prepared {
                runner: Runner::Adaptive {
                    scheme,
                    model,
                    count: true,
                },
                m,
                file_size: 0,
                note: "exec=count",
            };
            if sc.exec == Exec::Count {
                return Ok(Some(counted));
            }
            let small = match scheme {
                AdaptiveScheme::Pam => true,
                _ => {
                    let colors = match scheme {
                        AdaptiveScheme::Hcm(t) => chi(&model.params(), t).min(sc.d),
                        _ => 1,
                    };
                    if colors == 0 {
                        return Err(CoreError::DegenerateColoring.into());
                    }
                    let class = sc.n_caches.div_ceil(colors);
                    let padded = sc.n_files.div_ceil(colors);
                    man_small(padded, class, m.min(Rational::from_integer(padded as i128)))
                }
            };
            let fits = small && {
                let multiple = adaptive::file_size_multiple(scheme, &model, m)?;
                requested_size(sc, multiple).saturating_mul(n_total) <= MAX_LIBRARY_BYTES
            };
            match (fits, sc.exec) {
                (true, _) => {
                    let multiple = adaptive::file_size_multiple(scheme, &model, m)?;
                    bytes(
                        Runner::Adaptive {
                            scheme,
                            model,
                            count: false,
                        },
                        multiple,
                        "",
                    )?
                }
                (false, Exec::Bytes) => return too_big("exec=bytes".into()),
                (false, _) => Some(counted),
            }
        }
    };
    match prepared {
        Some(p) => Ok(Some(p)),
        None => too_big(format!(
            "library of {} files exceeds {MAX_LIBRARY_BYTES} bytes",
            n_total
        )),
    }
}

fn library(n_files: usize, file_size: usize, seed: u64) -> Result<FileLibrary> {
    Ok(FileLibrary::random(n_files, file_size, seed)?)
}

fn trial_demands(sc: &Scenario, seed: u64) -> Result<DemandVector> {
    let files = if sc.demand_policy == DemandPolicy::Stochastic {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..sc.n_caches)
            .map(|_| rng.random_range(0..sc.n_files))
            .collect()
    } else {
        sc.fixed_demands()
    };
    Ok(DemandVector::from_files(&files, sc.n_files)?)
}

fn outcome(trial: usize, seed: u64, report: RunReport) -> Outcome {
    let rate = big(measured_rate(&report.log, report.file_size));
    Outcome {
        trial,
        seed,
        rate,
        users: report.n_users,
        log: report
            .log
            .entries()
            .iter()
            .map(|t| (t.label.clone(), t.payload.len()))
            .collect(),
        failures: report.failures,
    }
}

fn run_trial(sc: &Scenario, p: &Prepared, trial: usize, opts: &RunOptions) -> Result<Outcome> {
    let seed = derive_seed(sc.seed, trial as u64);
    let f = p.file_size;
    let lib_seed = derive_seed(seed, 0);
    let report = match &p.runner {
        Runner::Man(cfg) => {
            let lib = library(sc.n_files, f, lib_seed)?;
            let demands = trial_demands(sc, derive_seed(seed, 1))?;
            let (mut caches, log) = run_with_sharing(&lib, cfg, &demands)?;
            if opts.fault_inject {
                if let Some(c) = caches.iter_mut().find(|c| !c.is_empty()) {
                    c.inject_fault();
                }
            }
            decode_all(&lib, cfg, &demands, &caches, log)
        }
        Runner::Dec => {
            let lib = library(sc.n_files, f, lib_seed)?;
            let demands = trial_demands(sc, derive_seed(seed, 1))?;
            dec_simulate(&lib, sc.n_caches, p.m, &demands, derive_seed(seed, 2))?.2
        }
        Runner::Ma(plan) => {
            let lib = library(sc.n_files, f, lib_seed)?;
            let demands = trial_demands(sc, derive_seed(seed, 1))?;
            ma_simulate(&lib, plan, &demands)?.1
        }
        Runner::Su(plan) => {
            let libs = level_libraries(&sc.levels, f, lib_seed)?;
            let demands: Vec<(usize, usize)> = sc
                .levels
                .iter()
                .enumerate()
                .flat_map(|(x, l)| (0..l.users).map(move |u| (x, u % l.n_files)))
                .collect();
            su_simulate(&libs, &sc.levels, plan, &demands)?.1
        }
        Runner::Mu(plan) => {
            let libs = level_libraries(&sc.levels, f, lib_seed)?;
            let demands = mu_worst_case_demands(&sc.levels, sc.n_caches);
            ccsim_core::multilevel::mu_simulate(&libs, &sc.levels, plan, &demands)?.1
        }
        Runner::Adaptive {
            scheme,
            model,
            count,
        } => {
            let profile = adaptive::sample_profile(model, seed);
            if *count {
                return Ok(Outcome {
                    trial,
                    seed,
                    rate: adaptive::count_rate(*scheme, model, p.m, &profile)?,
                    users: profile.total_users(),
                    failures: Vec::new(),
                    log: Vec::new(),
                });
            }
            let lib = library(sc.n_files, f, lib_seed)?;
            adaptive::run_bytes(*scheme, &lib, model, p.m, &profile)?.report
        }
    };
    Ok(outcome(trial, seed, report))
}

fn level_libraries(levels: &[Level], file_size: usize, seed: u64) -> Result<Vec<FileLibrary>> {
    levels
        .iter()
        .enumerate()
        .map(|(x, l)| library(l.n_files, file_size, derive_seed(seed, x as u64)))
        .collect()
}

/// A row to fill plus the partition it was computed for.
struct Target {
    row: CurveRow,
    su: Option<LevelPartitionSu>,
    mu: Option<LevelPartitionMu>,
}

fn spec_of_mu(p: &LevelPartitionMu) -> PartitionSpec {
    PartitionSpec {
        h: p.h.clone(),
        i: p.i.clone(),
        j: p.j.clone(),
    }
}

/// Exact rate of the multi-access construction for distinct demands.
fn ma_formula(sc: &Scenario, m: Rational) -> Result<Rational> {
    let plan = MaPlan::new(CyclicAccess::new(sc.n_caches, sc.d)?, sc.n_files, m)?;
    Ok(match plan.regime() {
        MaRegime::SingleCache => r_man(sc.n_files, sc.n_caches, m)?,
        MaRegime::FullCoverage => Rational::zero(),
        MaRegime::Shared => {
            let half = Rational::new(sc.n_files as i128, 2 * sc.d as i128);
            plan.lambda() * r_man(sc.n_files, sc.n_caches, half)?
        }
    })
}

fn targets(sc: &Scenario, m: Rational) -> Result<Vec<Target>> {
    let mf = m.to_f64().unwrap_or(f64::NAN);
    let base = || CurveRow::new(m, sc.scheme.name(), sc.seed);
    let single = |row: CurveRow| {
        vec![Target {
            row,
            su: None,
            mu: None,
        }]
    };
    Ok(match sc.scheme {
        Scheme::Man => {
            let mut row = base();
            row.formula = Some(Value::exact(r_man(sc.n_files, sc.n_caches, m)?));
            row.bound = Some(Value::exact(r_man_ub(sc.n_files, sc.n_caches, m)?));
            single(row)
        }
        Scheme::Decentralized => {
            let mut row = base();
            row.formula = Some(Value::Exact(r_dec(sc.n_files, sc.n_caches, m)?));
            single(row)
        }
        Scheme::Multiaccess => {
            let mut row = base();
            row.formula = Some(Value::exact(ma_formula(sc, m)?));
            row.bound = Some(Value::Approx(r_ma_bound(sc.n_files, sc.n_caches, sc.d, mf)));
            single(row)
        }
        Scheme::Pcd | Scheme::Pam | Scheme::Hcm => {
            let model = cluster_model(sc)?;
            let p = model.params();
            let mut row = base();
            row.bound = Some(Value::Approx(match sc.scheme {
                Scheme::Pcd => pcd_bound(&p, mf),
                Scheme::Pam => pam_bound(&p, mf),
                _ => {
                    row.label = format!("chi={}", chi(&p, sc.t).min(sc.d));
                    hcm_bound(&p, mf, sc.t)?
                }
            }));
            if !model.regular() {
                row.note = "irregular".into();
            }
            single(row)
        }
        Scheme::Su => {
            let parts: Vec<(LevelPartitionSu, &str)> = if sc.partitions.is_empty() {
                vec![(su_partition(&sc.levels, m), "threshold")]
            } else {
                sc.partitions
                    .iter()
                    .map(|p| {
                        (
                            LevelPartitionSu {
                                h: p.h.clone(),
                                i: p.i.clone(),
                            },
                            "",
                        )
                    })
                    .collect()
            };
            parts
                .into_iter()
                .map(|(part, note)| {
                    let mut row = base();
                    row.label = PartitionSpec {
                        h: part.h.clone(),
                        i: part.i.clone(),
                        j: Vec::new(),
                    }
                    .label(false);
                    match r_su_bound(&sc.levels, m, &part) {
                        Ok(v) => {
                            row.formula = Some(Value::exact(v));
                            row.note = note.into();
                        }
                        Err(e) => row.note = e.to_string(),
                    }
                    Target {
                        row,
                        su: Some(part),
                        mu: None,
                    }
                })
                .collect()
        }
        Scheme::Mu => mu_targets(sc, mf)?
            .into_iter()
            .map(|(part, note)| {
                let mut row = base();
                row.label = spec_of_mu(&part).label(true);
                row.note = note;
                match r_mu_bound(&sc.levels, sc.n_caches, mf, &part) {
                    Ok(v) => row.formula = Some(Value::Approx(v)),
                    Err(e) => row.note = e.to_string(),
                }
                Target {
                    row,
                    su: None,
                    mu: Some(part),
                }
            })
            .collect(),
    })
}

fn min_bound(sc: &Scenario, m: f64, ps: Vec<LevelPartitionMu>) -> Option<LevelPartitionMu> {
    ps.into_iter()
        .filter_map(|p| {
            r_mu_bound(&sc.levels, sc.n_caches, m, &p)
                .ok()
                .map(|b| (b, p))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
}

/// Every contiguous (J, I, H) split of the levels sorted by `N_i / U_i`
/// whose bound is defined, ignoring the defining inequalities.
fn contiguous_splits(sc: &Scenario, m: f64, variant: MuVariant) -> Vec<LevelPartitionMu> {
    let lv = &sc.levels;
    let mut order: Vec<usize> = (0..lv.len()).collect();
    order.sort_by(|&a, &b| (lv[a].n_files * lv[b].users).cmp(&(lv[b].n_files * lv[a].users)));
    let sorted = |xs: &[usize]| {
        let mut v = xs.to_vec();
        v.sort_unstable();
        v
    };
    let mut out = Vec::new();
    for j_end in 0..=lv.len() {
        for i_end in j_end..=lv.len() {
            let p = mu_partition_from_sets(
                lv,
                sc.n_caches,
                m,
                sorted(&order[i_end..]),
                sorted(&order[j_end..i_end]),
                sorted(&order[..j_end]),
                variant,
            );
            if let Ok(p) = p {
                if r_mu_bound(lv, sc.n_caches, m, &p).is_ok() {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Partitions for the multi-user scheme: the listed ones, else the unique
/// valid one, else a documented fallback.
fn mu_targets(sc: &Scenario, m: f64) -> Result<Vec<(LevelPartitionMu, String)>> {
    if !sc.partitions.is_empty() {
        return sc
            .partitions
            .iter()
            .map(|p| {
                mu_partition_from_sets(
                    &sc.levels,
                    sc.n_caches,
                    m,
                    p.h.clone(),
                    p.i.clone(),
                    p.j.clone(),
                    sc.variant,
                )
                .map(|x| (x, String::new()))
                .map_err(CliError::from)
            })
            .collect();
    }
    let pick = |variant: MuVariant| -> Result<Option<(LevelPartitionMu, String)>> {
        match mu_partition(&sc.levels, sc.n_caches, m, variant) {
            Ok(p) => Ok(Some((p, String::new()))),
            Err(CoreError::AmbiguousPartition(c)) => {
                let n = c.len();
                Ok(min_bound(sc, m, c)
                    .map(|p| (p, format!("ambiguous: min over {n} valid partitions"))))
            }
            Err(CoreError::NoValidPartition { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    };
    if let Some(p) = pick(sc.variant)? {
        return Ok(vec![p]);
    }
    if sc.variant == MuVariant::Approximate {
        if let Some((p, note)) = pick(MuVariant::Exact)? {
            let note = if note.is_empty() {
                "exact variant".to_string()
            } else {
                format!("exact variant; {note}")
            };
            return Ok(vec![(p, note)]);
        }
    }
    // keep the candidates check so validation errors still surface
    mu_partition_candidates(&sc.levels, sc.n_caches, m, sc.variant)?;
    match min_bound(sc, m, contiguous_splits(sc, m, sc.variant)) {
        Some(p) => Ok(vec![(
            p,
            "fallback: no valid partition, min over contiguous splits".into(),
        )]),
        None => Err(CoreError::NoValidPartition { memory: m }.into()),
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn regularity_warning(sc: &Scenario) -> Result<Option<String>> {
    if !sc.scheme.is_adaptive() {
        return Ok(None);
    }
    let p = cluster_model(sc)?.params();
    if p.regular() {
        return Ok(None);
    }
    Ok(Some(format!(
        "warning: regularity condition fails (d = {} < {}); the adaptive bounds are not guaranteed",
        p.cluster_size,
        sig12(p.regularity_threshold())
    )))
}

/// Formula rows for every grid point, with trials run when requested (or
/// when `force` is set, as for `simulate`).
pub fn evaluate(sc: &Scenario, opts: &RunOptions, force: bool) -> Result<Vec<Point>> {
    if opts.fault_inject && sc.scheme != Scheme::Man {
        return Err(CliError::Usage(
            "--fault-inject supports scheme=man only".into(),
        ));
    }
    let pool = pool(opts.threads)?;
    let mut points = Vec::new();
    for &m in &sc.grid {
        for t in targets(sc, m)? {
            let mut row = t.row;
            let prepared = prepare(sc, m, t.su.as_ref(), t.mu.as_ref(), force)?;
            let (outcomes, file_size) = match prepared {
                None => {
                    if !force && sc.simulate == Simulate::Auto {
                        row.note = join_notes(&row.note, "not simulated: too large");
                    }
                    (Vec::new(), None)
                }
                Some(p) => {
                    if !p.note.is_empty() {
                        row.note = join_notes(&row.note, p.note);
                    }
                    let outcomes = pool.install(|| {
                        (0..sc.trials)
                            .into_par_iter()
                            .map(|r| run_trial(sc, &p, r, opts))
                            .collect::<Result<Vec<_>>>()
                    })?;
                    (outcomes, (p.file_size > 0).then_some(p.file_size))
                }
            };
            if !outcomes.is_empty() {
                let (value, se) = summarize(&outcomes);
                row.measured = Some(value);
                row.std_err = Some(se);
                row.trials = outcomes.len();
            }
            points.push(Point {
                row,
                outcomes,
                file_size,
            });
        }
    }
    Ok(points)
}

fn join_notes(a: &str, b: &str) -> String {
    if a.is_empty() {
        b.to_string()
    } else {
        format!("{a}; {b}")
    }
}

/// Exact value when every trial agrees, else the mean; plus the std err.
fn summarize(outcomes: &[Outcome]) -> (Value, f64) {
    let rates: Vec<f64> = outcomes
        .iter()
        .map(|o| o.rate.to_f64().unwrap_or(f64::NAN))
        .collect();
    let (mean, se) = adaptive::mean_and_std_err(&rates);
    if outcomes.iter().all(|o| o.rate == outcomes[0].rate) {
        (Value::Exact(outcomes[0].rate.clone()), 0.0)
    } else {
        (Value::Approx(mean), se)
    }
}

fn report_failures(points: &[Point], err: &mut dyn Write) -> Result<()> {
    let total: usize = points.iter().map(Point::failures).sum();
    if total == 0 {
        return Ok(());
    }
    for p in points {
        for o in &p.outcomes {
            for f in &o.failures {
                writeln!(
                    err,
                    "decode failure: M={} trial={} user={} file={} reason={}",
                    fmt_rational(p.row.m),
                    o.trial,
                    f.user,
                    f.file,
                    f.reason
                )?;
            }
        }
    }
    Err(CliError::Verification(format!("{total} decode failures")))
}

/// `rate-curve`: one CSV row per grid point (and partition).
pub fn rate_curve(
    sc: &Scenario,
    opts: &RunOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    if let Some(w) = regularity_warning(sc)? {
        writeln!(err, "{w}")?;
    }
    let points = evaluate(sc, opts, false)?;
    let rows: Vec<CurveRow> = points.iter().map(|p| p.row.clone()).collect();
    crate::output::write_curve(&mut *out, &rows)?;
    report_failures(&points, err)
}

/// `simulate`: one CSV row per trial, summaries on `err`.
pub fn simulate(
    sc: &Scenario,
    opts: &RunOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    if sc.simulate == Simulate::Off {
        return config_err("simulate=false contradicts the simulate command");
    }
    if let Some(w) = regularity_warning(sc)? {
        writeln!(err, "{w}")?;
    }
    let points = evaluate(sc, opts, true)?;
    let mut rows = Vec::new();
    for p in &points {
        for o in &p.outcomes {
            rows.push(TrialRow {
                scheme: sc.scheme.name().to_string(),
                m: p.row.m,
                trial: o.trial,
                trial_seed: o.seed,
                rate: o.rate.clone(),
                users: o.users,
                decoded: o.failures.is_empty(),
                label: p.row.label.clone(),
            });
        }
    }
    crate::output::write_trials(&mut *out, &rows)?;
    for p in &points {
        let (value, se) = summarize(&p.outcomes);
        let exact = match &value {
            Value::Exact(r) => fmt_big(r),
            Value::Approx(_) => String::new(),
        };
        writeln!(
            err,
            "summary: scheme={} M={} label={:?} trials={} F={} mean={} mean_exact={} std_err={} decode_failures={}",
            sc.scheme,
            fmt_rational(p.row.m),
            p.row.label,
            p.outcomes.len(),
            p.file_size.map_or("count".to_string(), |f| f.to_string()),
            sig12(value.to_f64()),
            exact,
            sig12(se),
            p.failures()
        )?;
        if sc.trials == 1 {
            for (label, bytes) in &p.outcomes[0].log {
                writeln!(
                    err,
                    "log: M={} label={label} bytes={bytes}",
                    fmt_rational(p.row.m)
                )?;
            }
        }
    }
    report_failures(&points, err)
}

/// Keys that take a comma list and so cannot be varied by `sweep`.
const LIST_KEYS: &[&str] = &[
    "M_grid",
    "levels_N",
    "levels_K",
    "levels_U",
    "demands",
    "partitions",
];

/// Parses `KEY=v1,v2,...`.
pub fn parse_vary(s: &str) -> Result<(String, Vec<String>)> {
    let Some((k, v)) = s.split_once('=') else {
        return Err(CliError::Usage(format!(
            "--vary expects KEY=v1,v2, got {s:?}"
        )));
    };
    let k = k.trim();
    if LIST_KEYS.contains(&k) {
        return Err(CliError::Usage(format!("cannot vary list-valued key {k}")));
    }
    let values: Vec<String> = v
        .split(',')
        .map(|x| x.trim().to_string())
        .filter(|x| !x.is_empty())
        .collect();
    if values.is_empty() {
        return Err(CliError::Usage(format!("--vary {k}: no values")));
    }
    Ok((k.to_string(), values))
}

/// `sweep`: the rate curve for every combination of varied keys, labels
/// prefixed with the assignment.
pub fn sweep(
    base: &crate::config::Config,
    vary: &[(String, Vec<String>)],
    opts: &RunOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    if vary.is_empty() {
        return Err(CliError::Usage(
            "sweep needs at least one --vary KEY=v1,v2".into(),
        ));
    }
    let mut combos: Vec<Vec<(&str, &str)>> = vec![Vec::new()];
    for (k, values) in vary {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push((k.as_str(), v.as_str()));
                    c
                })
            })
            .collect();
    }
    let mut rows = Vec::new();
    let mut points_all = Vec::new();
    for combo in combos {
        let mut cfg = base.clone();
        for (k, v) in &combo {
            cfg.set(k, v)?;
        }
        let sc = Scenario::from_config(&cfg)?;
        if let Some(w) = regularity_warning(&sc)? {
            writeln!(err, "{w}")?;
        }
        let prefix: Vec<String> = combo.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let prefix = prefix.join(" ");
        let points = evaluate(&sc, opts, false)?;
        for p in &points {
            let mut row = p.row.clone();
            row.label = if row.label.is_empty() {
                prefix.clone()
            } else {
                format!("{prefix} {}", row.label)
            };
            rows.push(row);
        }
        points_all.extend(points);
    }
    crate::output::write_curve(&mut *out, &rows)?;
    report_failures(&points_all, err)
}
