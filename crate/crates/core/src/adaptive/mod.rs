//! Clustered caches with adaptive user-to-cache matching.
//!
//! `K` caches form `K/d` clusters of `d`. After demands arrive every user is
//! matched to at most one cache of its own cluster, one user per cache. Three
//! pipelines:
//!
//! * PCD: centralized placement over all caches, any valid matching, coded
//!   delivery to the matched caches.
//! * PAM: whole-file replicas, maximum matching of users to caches holding
//!   their file, nothing coded.
//! * HCM: caches and files split into `chi` colors, one centralized instance
//!   per color, users matched to caches of their file's color.
//!
//! Users left unmatched are served by one uncoded broadcast per distinct file.
//!
//! Every pipeline can also run in counting mode, which computes the exact
//! rate from the matching alone without touching any bytes.

mod matching;

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::analytics::{chi, AdaptiveParams};
use crate::error::{invalid, Error, Result};
use crate::man::{to_big, ManConfig, ManScheme};
use crate::model::{
    derive_seed, lcm, CacheContent, EntryKey, FileLibrary, Piece, Rational, RunReport,
    TransmissionLog,
};

pub use matching::{hopcroft_karp, matching_size};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterModel {
    pub n_files: usize,
    pub n_caches: usize,
    pub cluster_size: usize,
    pub rho: f64,
    pub t0: f64,
}

impl ClusterModel {
    pub fn new(
        n_files: usize,
        n_caches: usize,
        cluster_size: usize,
        rho: f64,
        t0: f64,
    ) -> Result<Self> {
        if n_files == 0 || n_caches == 0 || cluster_size == 0 {
            return invalid("N, K and d must be positive");
        }
        if !n_caches.is_multiple_of(cluster_size) {
            return invalid(format!("d = {cluster_size} does not divide K = {n_caches}"));
        }
        if !(rho > 0.0 && rho < 0.5) {
            return invalid(format!("rho = {rho} outside (0, 1/2)"));
        }
        if !(t0 > 0.0) {
            return invalid("t0 must be positive");
        }
        Ok(Self {
            n_files,
            n_caches,
            cluster_size,
            rho,
            t0,
        })
    }

    pub fn n_clusters(&self) -> usize {
        self.n_caches / self.cluster_size
    }

    pub fn params(&self) -> AdaptiveParams {
        AdaptiveParams {
            n_files: self.n_files,
            n_caches: self.n_caches,
            cluster_size: self.cluster_size,
            rho: self.rho,
            t0: self.t0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.params().alpha()
    }

    pub fn regular(&self) -> bool {
        self.params().regular()
    }

    fn check_memory(&self, m: Rational) -> Result<()> {
        if m < Rational::zero() || m > Rational::from_integer(self.n_files as i128) {
            return invalid(format!("M = {m} outside [0, {}]", self.n_files));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct User {
    pub cluster: usize,
    pub file: usize,
}

/// `counts[n][c]`: users of cluster `c` asking for file `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandProfile {
    counts: Vec<Vec<u32>>,
}

impl DemandProfile {
    pub fn new(counts: Vec<Vec<u32>>) -> Result<Self> {
        let c = counts.first().map_or(0, Vec::len);
        if counts.is_empty() || c == 0 || counts.iter().any(|row| row.len() != c) {
            return invalid("profile must be a nonempty files x clusters matrix");
        }
        Ok(Self { counts })
    }

    pub fn empty(n_files: usize, n_clusters: usize) -> Self {
        Self {
            counts: vec![vec![0; n_clusters]; n_files],
        }
    }

    pub fn count(&self, file: usize, cluster: usize) -> u32 {
        self.counts[file][cluster]
    }

    pub fn counts(&self) -> &[Vec<u32>] {
        &self.counts
    }

    pub fn total_users(&self) -> usize {
        self.counts.iter().flatten().map(|&c| c as usize).sum()
    }

    /// Users in cluster-major order, then by file.
    pub fn users(&self) -> Vec<User> {
        let n_clusters = self.counts[0].len();
        let mut out = Vec::with_capacity(self.total_users());
        for cluster in 0..n_clusters {
            for (file, row) in self.counts.iter().enumerate() {
                out.extend((0..row[cluster]).map(|_| User { cluster, file }));
            }
        }
        out
    }

    fn check(&self, model: &ClusterModel) -> Result<()> {
        if self.counts.len() != model.n_files || self.counts[0].len() != model.n_clusters() {
            return invalid("profile shape does not match the model");
        }
        Ok(())
    }
}

/// Independent `Poisson(rho d / N)` counts per (file, cluster).
pub fn sample_profile(model: &ClusterModel, seed: u64) -> DemandProfile {
    let lambda = model.rho * model.cluster_size as f64 / model.n_files as f64;
    let poisson = Poisson::new(lambda).expect("rho d / N is positive and finite");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![vec![0u32; model.n_clusters()]; model.n_files];
    for c in 0..model.n_clusters() {
        for row in counts.iter_mut() {
            row[c] = poisson.sample(&mut rng) as u32;
        }
    }
    DemandProfile { counts }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MatchingResult {
    /// `(user index, global cache index)`.
    pub assignments: Vec<(usize, usize)>,
    pub unmatched: Vec<usize>,
}

impl MatchingResult {
    /// Distinct files requested by unmatched users.
    pub fn unmatched_files(&self, users: &[User]) -> BTreeSet<usize> {
        self.unmatched.iter().map(|&u| users[u].file).collect()
    }
}

/// Caches and files split into `chi` color classes; cache `c d + i` gets
/// color `i mod chi`, file `n` gets `n mod chi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoringPlan {
    pub chi: usize,
    pub cache_color: Vec<usize>,
    pub file_color: Vec<usize>,
}

impl ColoringPlan {
    pub fn new(model: &ClusterModel, chi: usize) -> Result<Self> {
        if chi == 0 {
            return Err(Error::DegenerateColoring);
        }
        if chi > model.cluster_size {
            return invalid(format!("chi = {chi} exceeds d = {}", model.cluster_size));
        }
        Ok(Self {
            chi,
            cache_color: (0..model.n_caches)
                .map(|g| (g % model.cluster_size) % chi)
                .collect(),
            file_color: (0..model.n_files).map(|n| n % chi).collect(),
        })
    }

    /// `chi = floor(alpha d / (2 (1 + t) ln K))`, capped at `d`.
    pub fn for_model(model: &ClusterModel, t: f64) -> Result<Self> {
        Self::new(model, chi(&model.params(), t).min(model.cluster_size))
    }

    pub fn caches_of(&self, color: usize) -> Vec<usize> {
        (0..self.cache_color.len())
            .filter(|&g| self.cache_color[g] == color)
            .collect()
    }

    pub fn files_of(&self, color: usize) -> Vec<usize> {
        (0..self.file_color.len())
            .filter(|&n| self.file_color[n] == color)
            .collect()
    }

    /// Library size per color after padding: `ceil(N / chi)`.
    pub fn padded_files(&self) -> usize {
        self.file_color.len().div_ceil(self.chi)
    }
}

/// First-come first-served: each user, in order, takes the first free cache
/// of its cluster whose color matches its file.
pub fn fcfs_matching(model: &ClusterModel, plan: &ColoringPlan, users: &[User]) -> MatchingResult {
    let d = model.cluster_size;
    let mut taken = vec![false; model.n_caches];
    let mut out = MatchingResult::default();
    for (u, user) in users.iter().enumerate() {
        let color = plan.file_color[user.file];
        let slot = (user.cluster * d..(user.cluster + 1) * d)
            .find(|&g| !taken[g] && plan.cache_color[g] == color);
        match slot {
            Some(g) => {
                taken[g] = true;
                out.assignments.push((u, g));
            }
            None => out.unmatched.push(u),
        }
    }
    out
}

/// One centralized instance per color.
#[derive(Clone, Debug)]
struct ColorScheme {
    caches: Vec<usize>,
    files: Vec<usize>,
    scheme: ManScheme,
}

fn color_schemes(
    model: &ClusterModel,
    plan: &ColoringPlan,
    m: Rational,
) -> Result<Vec<ColorScheme>> {
    model.check_memory(m)?;
    let padded = plan.padded_files();
    let mem = m.min(Rational::from_integer(padded as i128));
    (0..plan.chi)
        .map(|x| {
            let caches = plan.caches_of(x);
            let cfg = ManConfig::new(padded, caches.len(), mem)?;
            Ok(ColorScheme {
                caches,
                files: plan.files_of(x),
                scheme: ManScheme::new(cfg, format!("color{x}")),
            })
        })
        .collect()
}

/// Smallest file size the coded pipelines accept at this memory.
pub fn coded_file_size_multiple(
    model: &ClusterModel,
    plan: &ColoringPlan,
    m: Rational,
) -> Result<usize> {
    Ok(color_schemes(model, plan, m)?
        .iter()
        .fold(1, |acc, c| lcm(acc, c.scheme.file_size_multiple())))
}

/// Outcome of one adaptive run at byte level.
#[derive(Clone, Debug)]
pub struct AdaptiveRun {
    pub caches: Vec<CacheContent>,
    pub users: Vec<User>,
    pub matching: MatchingResult,
    pub report: RunReport,
}

fn unmatched_label(file: usize) -> String {
    format!("unmatched/file{file}")
}

fn push_unmatched(
    library: &FileLibrary,
    files: &BTreeSet<usize>,
    log: &mut TransmissionLog,
) -> Result<()> {
    for &f in files {
        log.push(unmatched_label(f), library.file(f).to_vec())?;
    }
    Ok(())
}

fn read_unmatched(log: &TransmissionLog, user: usize, file: usize) -> Result<Vec<u8>> {
    log.get(&unmatched_label(file))
        .map(<[u8]>::to_vec)
        .ok_or_else(|| Error::DecodeFailure {
            user,
            missing: unmatched_label(file),
        })
}

fn check_library(library: &FileLibrary, model: &ClusterModel) -> Result<()> {
    if library.n_files() != model.n_files {
        return invalid("library size does not match N");
    }
    Ok(())
}

/// Per color: the matched `(local cache, local file)` demands.
fn color_demands(
    colors: &[ColorScheme],
    plan: &ColoringPlan,
    users: &[User],
    matching: &MatchingResult,
) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new(); colors.len()];
    for &(u, g) in &matching.assignments {
        let x = plan.cache_color[g];
        let local_cache = colors[x]
            .caches
            .binary_search(&g)
            .expect("cache has this color");
        let local_file = colors[x]
            .files
            .binary_search(&users[u].file)
            .expect("file has this color");
        out[x].push((local_cache, local_file));
    }
    out
}

fn coded_run(
    library: &FileLibrary,
    model: &ClusterModel,
    plan: &ColoringPlan,
    m: Rational,
    profile: &DemandProfile,
) -> Result<AdaptiveRun> {
    check_library(library, model)?;
    profile.check(model)?;
    let colors = color_schemes(model, plan, m)?;
    let file_size = library.file_size();
    let zero = vec![0u8; file_size];
    let color_files: Vec<Vec<&[u8]>> = colors
        .iter()
        .map(|c| {
            let mut v: Vec<&[u8]> = c.files.iter().map(|&n| library.file(n)).collect();
            v.resize(plan.padded_files(), &zero);
            v
        })
        .collect();

    let mut caches = CacheContent::empty_set(model.n_caches, m, file_size);
    for (c, files) in colors.iter().zip(&color_files) {
        c.scheme.place(files, &c.caches, &mut caches)?;
    }

    let users = profile.users();
    let matching = fcfs_matching(model, plan, &users);
    let demands = color_demands(&colors, plan, &users, &matching);
    let mut log = TransmissionLog::new();
    for (x, c) in colors.iter().enumerate() {
        c.scheme
            .deliver(&color_files[x], &format!("c{x}"), &demands[x], &mut log)?;
    }
    push_unmatched(library, &matching.unmatched_files(&users), &mut log)?;

    let mut report = RunReport {
        log,
        file_size,
        n_users: 0,
        failures: Vec::new(),
    };
    for &(u, g) in &matching.assignments {
        let x = plan.cache_color[g];
        let c = &colors[x];
        let local_cache = c.caches.binary_search(&g).expect("colored cache");
        let local_file = c.files.binary_search(&users[u].file).expect("colored file");
        let got = c.scheme.decode(
            local_cache,
            local_file,
            file_size,
            &format!("c{x}"),
            &demands[x],
            &caches[g],
            &report.log,
        );
        report.check(u, users[u].file, library.file(users[u].file), got);
    }
    for &u in &matching.unmatched {
        let got = read_unmatched(&report.log, u, users[u].file);
        report.check(u, users[u].file, library.file(users[u].file), got);
    }
    Ok(AdaptiveRun {
        caches,
        users,
        matching,
        report,
    })
}

fn coded_count(
    model: &ClusterModel,
    plan: &ColoringPlan,
    m: Rational,
    profile: &DemandProfile,
) -> Result<BigRational> {
    profile.check(model)?;
    let colors = color_schemes(model, plan, m)?;
    let users = profile.users();
    let matching = fcfs_matching(model, plan, &users);
    let demands = color_demands(&colors, plan, &users, &matching);
    let mut rate = BigRational::from_integer(BigInt::from(matching.unmatched_files(&users).len()));
    for (c, d) in colors.iter().zip(&demands) {
        rate += c.scheme.rate(d.len());
    }
    Ok(rate)
}

/// PCD: the single-color case of the hybrid scheme.
pub fn pcd_run(
    library: &FileLibrary,
    model: &ClusterModel,
    m: Rational,
    profile: &DemandProfile,
) -> Result<AdaptiveRun> {
    coded_run(library, model, &ColoringPlan::new(model, 1)?, m, profile)
}

/// HCM with `chi = floor(alpha d / (2 (1 + t) ln K))` colors.
pub fn hcm_run(
    library: &FileLibrary,
    model: &ClusterModel,
    m: Rational,
    t: f64,
    profile: &DemandProfile,
) -> Result<AdaptiveRun> {
    coded_run(
        library,
        model,
        &ColoringPlan::for_model(model, t)?,
        m,
        profile,
    )
}

/// HCM with an explicit coloring.
pub fn hcm_run_with(
    library: &FileLibrary,
    model: &ClusterModel,
    plan: &ColoringPlan,
    m: Rational,
    profile: &DemandProfile,
) -> Result<AdaptiveRun> {
    coded_run(library, model, plan, m, profile)
}

/// Replicas per file per cluster: `floor(d floor(M) / N)`, so every cache
/// holds at most `floor(M)` whole files.
pub fn pam_replicas(model: &ClusterModel, m: Rational) -> usize {
    let whole = m.floor().to_integer().max(0) as usize;
    (model.cluster_size * whole / model.n_files).min(model.cluster_size)
}

/// Local cache indices (within every cluster) holding a copy of `file`.
fn pam_holders(
    model: &ClusterModel,
    replicas: usize,
    file: usize,
) -> impl Iterator<Item = usize> + '_ {
    (0..replicas).map(move |r| (file * replicas + r) % model.cluster_size)
}

fn pam_key(file: usize) -> EntryKey {
    EntryKey::new("pam", Piece::Replica(file))
}

pub fn pam_placement(
    library: &FileLibrary,
    model: &ClusterModel,
    m: Rational,
) -> Result<Vec<CacheContent>> {
    check_library(library, model)?;
    model.check_memory(m)?;
    let replicas = pam_replicas(model, m);
    let mut caches = CacheContent::empty_set(model.n_caches, m, library.file_size());
    for c in 0..model.n_clusters() {
        for n in 0..model.n_files {
            for i in pam_holders(model, replicas, n) {
                caches[c * model.cluster_size + i].insert(pam_key(n), library.file(n).to_vec())?;
            }
        }
    }
    Ok(caches)
}

/// Maximum matching of users to caches of their cluster holding their file.
pub fn pam_matching(model: &ClusterModel, m: Rational, users: &[User]) -> MatchingResult {
    let d = model.cluster_size;
    let replicas = pam_replicas(model, m);
    let mut out = MatchingResult::default();
    for c in 0..model.n_clusters() {
        let members: Vec<usize> = (0..users.len())
            .filter(|&u| users[u].cluster == c)
            .collect();
        let adj: Vec<Vec<usize>> = members
            .iter()
            .map(|&u| {
                let mut v: Vec<usize> = pam_holders(model, replicas, users[u].file).collect();
                v.sort_unstable();
                v
            })
            .collect();
        let matched = hopcroft_karp(&adj, d);
        for (&u, slot) in members.iter().zip(matched) {
            match slot {
                Some(i) => out.assignments.push((u, c * d + i)),
                None => out.unmatched.push(u),
            }
        }
    }
    out.assignments.sort_unstable();
    out.unmatched.sort_unstable();
    out
}

pub fn pam_run(
    library: &FileLibrary,
    model: &ClusterModel,
    m: Rational,
    profile: &DemandProfile,
) -> Result<AdaptiveRun> {
    profile.check(model)?;
    let caches = pam_placement(library, model, m)?;
    let users = profile.users();
    let matching = pam_matching(model, m, &users);
    let mut log = TransmissionLog::new();
    push_unmatched(library, &matching.unmatched_files(&users), &mut log)?;
    let mut report = RunReport {
        log,
        file_size: library.file_size(),
        n_users: 0,
        failures: Vec::new(),
    };
    for &(u, g) in &matching.assignments {
        let f = users[u].file;
        let got = caches[g]
            .get(&pam_key(f))
            .map(<[u8]>::to_vec)
            .ok_or_else(|| Error::DecodeFailure {
                user: u,
                missing: format!("replica of file {f} at cache {g}"),
            });
        report.check(u, f, library.file(f), got);
    }
    for &u in &matching.unmatched {
        let got = read_unmatched(&report.log, u, users[u].file);
        report.check(u, users[u].file, library.file(users[u].file), got);
    }
    Ok(AdaptiveRun {
        caches,
        users,
        matching,
        report,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AdaptiveScheme {
    Pcd,
    Pam,
    /// Hybrid scheme at parameter `t` (colors from `chi(t)`).
    Hcm(f64),
}

/// Exact rate of one run computed from the matching alone.
pub fn count_rate(
    scheme: AdaptiveScheme,
    model: &ClusterModel,
    m: Rational,
    profile: &DemandProfile,
) -> Result<BigRational> {
    match scheme {
        AdaptiveScheme::Pcd => coded_count(model, &ColoringPlan::new(model, 1)?, m, profile),
        AdaptiveScheme::Hcm(t) => {
            coded_count(model, &ColoringPlan::for_model(model, t)?, m, profile)
        }
        AdaptiveScheme::Pam => {
            profile.check(model)?;
            model.check_memory(m)?;
            let users = profile.users();
            let matching = pam_matching(model, m, &users);
            Ok(BigRational::from_integer(BigInt::from(
                matching.unmatched_files(&users).len(),
            )))
        }
    }
}

/// Runs one scheme at byte level.
pub fn run_bytes(
    scheme: AdaptiveScheme,
    library: &FileLibrary,
    model: &ClusterModel,
    m: Rational,
    profile: &DemandProfile,
) -> Result<AdaptiveRun> {
    match scheme {
        AdaptiveScheme::Pcd => pcd_run(library, model, m, profile),
        AdaptiveScheme::Pam => pam_run(library, model, m, profile),
        AdaptiveScheme::Hcm(t) => hcm_run(library, model, m, t, profile),
    }
}

/// Smallest file size `run_bytes` accepts for this scheme and memory.
pub fn file_size_multiple(
    scheme: AdaptiveScheme,
    model: &ClusterModel,
    m: Rational,
) -> Result<usize> {
    match scheme {
        AdaptiveScheme::Pam => Ok(1),
        AdaptiveScheme::Pcd => coded_file_size_multiple(model, &ColoringPlan::new(model, 1)?, m),
        AdaptiveScheme::Hcm(t) => {
            coded_file_size_multiple(model, &ColoringPlan::for_model(model, t)?, m)
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Execution<'a> {
    /// Place, deliver and decode real bytes.
    Bytes(&'a FileLibrary),
    /// Exact rate from the matching only.
    Count,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub seed: u64,
    pub rate: BigRational,
    pub users: usize,
    /// Always true in counting mode.
    pub decoded: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: Vec<TrialOutcome>,
}

impl Estimate {
    pub fn rates(&self) -> Vec<f64> {
        self.trials
            .iter()
            .map(|t| t.rate.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn all_decoded(&self) -> bool {
        self.trials.iter().all(|t| t.decoded)
    }
}

/// Sample mean and standard error (`s / sqrt(n)`).
pub fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo estimate of the expected rate. Trial `r` draws its profile
/// from `derive_seed(master_seed, r)`, so the result does not depend on
/// `threads`.
pub fn estimate_expected_rate(
    scheme: AdaptiveScheme,
    model: &ClusterModel,
    m: Rational,
    n_trials: usize,
    master_seed: u64,
    exec: Execution<'_>,
    threads: usize,
) -> Result<Estimate> {
    if n_trials < 2 {
        return invalid("need at least two trials");
    }
    let one = |r: usize| -> Result<TrialOutcome> {
        let seed = derive_seed(master_seed, r as u64);
        let profile = sample_profile(model, seed);
        let users = profile.total_users();
        match exec {
            Execution::Count => Ok(TrialOutcome {
                seed,
                rate: count_rate(scheme, model, m, &profile)?,
                users,
                decoded: true,
            }),
            Execution::Bytes(lib) => {
                let run = run_bytes(scheme, lib, model, m, &profile)?;
                Ok(TrialOutcome {
                    seed,
                    rate: to_big(run.report.rate()),
                    users,
                    decoded: run.report.all_decoded(),
                })
            }
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let trials: Vec<TrialOutcome> = pool.install(|| {
        (0..n_trials)
            .into_par_iter()
            .map(one)
            .collect::<Result<Vec<_>>>()
    })?;
    let rates: Vec<f64> = trials
        .iter()
        .map(|t| t.rate.to_f64().unwrap_or(f64::NAN))
        .collect();
    let (mean, std_err) = mean_and_std_err(&rates);
    Ok(Estimate {
        mean,
        std_err,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational;

    fn small() -> ClusterModel {
        ClusterModel::new(16, 16, 4, 0.25, 0.1).unwrap()
    }

    #[test]
    fn model_validation() {
        assert!(ClusterModel::new(8, 10, 4, 0.25, 0.1).is_err());
        assert!(ClusterModel::new(8, 8, 4, 0.5, 0.1).is_err());
        assert!(ClusterModel::new(8, 8, 4, 0.25, 0.0).is_err());
    }

    #[test]
    fn profile_is_seeded() {
        let m = small();
        assert_eq!(sample_profile(&m, 3), sample_profile(&m, 3));
        assert_ne!(sample_profile(&m, 3), sample_profile(&m, 4));
    }

    #[test]
    fn profile_mean_per_cluster() {
        let m = ClusterModel::new(64, 64, 16, 0.25, 0.1).unwrap();
        let mut total = 0usize;
        let draws = 10_000;
        for s in 0..draws {
            total += sample_profile(&m, s).total_users();
        }
        let per_cluster = total as f64 / (draws as f64 * 4.0);
        assert!((per_cluster - 4.0).abs() < 0.2, "{per_cluster}");
    }

    #[test]
    fn coloring_classes_balanced() {
        let m = ClusterModel::new(10, 12, 6, 0.25, 0.1).unwrap();
        let plan = ColoringPlan::new(&m, 4).unwrap();
        for c in 0..2 {
            let mut sizes = [0usize; 4];
            for i in 0..6 {
                sizes[plan.cache_color[c * 6 + i]] += 1;
            }
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
        assert_eq!(plan.padded_files(), 3);
        assert_eq!(ColoringPlan::new(&m, 0), Err(Error::DegenerateColoring));
    }

    #[test]
    fn empty_profile_sends_nothing() {
        let m = small();
        let lib = FileLibrary::random(16, 1820, 1).unwrap();
        let p = DemandProfile::empty(16, 4);
        let run = pcd_run(&lib, &m, rational(4, 1), &p).unwrap();
        assert!(run.report.log.is_empty());
    }

    #[test]
    fn full_memory_rate_zero() {
        let m = small();
        let lib = FileLibrary::random(16, 4, 1).unwrap();
        let mut counts = vec![vec![0u32; 4]; 16];
        counts[3][0] = 2;
        counts[5][0] = 2;
        counts[0][2] = 1;
        let p = DemandProfile::new(counts).unwrap();
        for scheme in [AdaptiveScheme::Pcd, AdaptiveScheme::Pam] {
            let run = run_bytes(scheme, &lib, &m, rational(16, 1), &p).unwrap();
            assert!(run.report.log.is_empty(), "{scheme:?}");
            assert!(run.report.all_decoded());
        }
    }

    #[test]
    fn overflowing_cluster_broadcasts_distinct_files() {
        let m = small();
        let lib = FileLibrary::random(16, 1820, 2).unwrap();
        let mut counts = vec![vec![0u32; 4]; 16];
        counts[7][1] = 6; // six users, four caches
        let p = DemandProfile::new(counts).unwrap();
        let run = pcd_run(&lib, &m, rational(4, 1), &p).unwrap();
        assert_eq!(run.matching.unmatched.len(), 2);
        assert!(run.report.log.get("unmatched/file7").is_some());
        assert!(run.report.all_decoded());
    }

    #[test]
    fn pam_without_replicas_sends_distinct_files() {
        let m = small();
        let lib = FileLibrary::random(16, 8, 2).unwrap();
        let p = sample_profile(&m, 9);
        let users = p.users();
        let distinct: BTreeSet<usize> = users.iter().map(|u| u.file).collect();
        let run = pam_run(&lib, &m, rational(3, 1), &p).unwrap();
        assert_eq!(pam_replicas(&m, rational(3, 1)), 0);
        assert_eq!(run.report.rate(), rational(distinct.len() as i128, 1));
        assert!(run.report.all_decoded());
    }

    #[test]
    fn pam_budget_respected() {
        let m = ClusterModel::new(8, 12, 6, 0.25, 0.1).unwrap();
        let lib = FileLibrary::random(8, 3, 2).unwrap();
        for num in 0..=16 {
            let mem = rational(num, 2);
            let caches = pam_placement(&lib, &m, mem).unwrap();
            assert!(caches.iter().all(|c| c.used_bytes() <= c.budget_bytes()));
        }
    }

    #[test]
    fn count_matches_bytes() {
        let m = small();
        for (scheme, mem) in [
            (AdaptiveScheme::Pcd, rational(4, 1)),
            (AdaptiveScheme::Pcd, rational(6, 1)),
            (AdaptiveScheme::Pam, rational(8, 1)),
        ] {
            let f = file_size_multiple(scheme, &m, mem).unwrap();
            let lib = FileLibrary::random(16, f, 5).unwrap();
            for seed in 0..5 {
                let p = sample_profile(&m, seed);
                let run = run_bytes(scheme, &lib, &m, mem, &p).unwrap();
                assert!(run.report.all_decoded());
                assert_eq!(
                    to_big(run.report.rate()),
                    count_rate(scheme, &m, mem, &p).unwrap()
                );
            }
        }
    }

    #[test]
    fn hcm_with_two_colors_decodes() {
        let m = ClusterModel::new(10, 12, 6, 0.25, 0.1).unwrap();
        let plan = ColoringPlan::new(&m, 2).unwrap();
        let mem = rational(2, 1);
        let f = coded_file_size_multiple(&m, &plan, mem).unwrap();
        let lib = FileLibrary::random(10, f, 3).unwrap();
        for seed in 0..4 {
            let p = sample_profile(&m, seed);
            let run = hcm_run_with(&lib, &m, &plan, mem, &p).unwrap();
            assert!(run.report.all_decoded(), "{:?}", run.report.failures);
            assert!(run
                .caches
                .iter()
                .all(|c| c.used_bytes() <= c.budget_bytes()));
        }
    }

    #[test]
    fn hcm_single_color_is_pcd() {
        let m = small();
        let mem = rational(4, 1);
        let lib = FileLibrary::random(16, 1820, 8).unwrap();
        let p = sample_profile(&m, 1);
        let a = pcd_run(&lib, &m, mem, &p).unwrap();
        let b = hcm_run_with(&lib, &m, &ColoringPlan::new(&m, 1).unwrap(), mem, &p).unwrap();
        assert_eq!(a.report.log, b.report.log);
        assert_eq!(a.matching, b.matching);
    }

    #[test]
    fn estimate_independent_of_threads() {
        let m = small();
        let a = estimate_expected_rate(
            AdaptiveScheme::Pcd,
            &m,
            rational(4, 1),
            8,
            42,
            Execution::Count,
            1,
        )
        .unwrap();
        let b = estimate_expected_rate(
            AdaptiveScheme::Pcd,
            &m,
            rational(4, 1),
            8,
            42,
            Execution::Count,
            4,
        )
        .unwrap();
        assert_eq!(a, b);
        // one cluster of 16 caches: Poisson(4) users never overflow it here
        let wide = ClusterModel::new(16, 16, 16, 0.25, 0.1).unwrap();
        let full = estimate_expected_rate(
            AdaptiveScheme::Pam,
            &wide,
            rational(16, 1),
            4,
            1,
            Execution::Count,
            2,
        )
        .unwrap();
        assert_eq!((full.mean, full.std_err), (0.0, 0.0));
    }

    #[test]
    fn std_err_formula() {
        let (mean, se) = mean_and_std_err(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mean, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    }
}
