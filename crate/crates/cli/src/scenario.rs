//! Typed, validated scenarios built from a [`Config`].

use std::fmt;
use std::str::FromStr;

use ccsim_core::multilevel::{levels_from, Level, MuVariant};
use ccsim_core::Rational;
use clap::ValueEnum;
use num_traits::Zero;

use crate::config::Config;
use crate::error::{config_err, CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Scheme {
    Man,
    Decentralized,
    Su,
    Mu,
    Pcd,
    Pam,
    Hcm,
    Multiaccess,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Man => "man",
            Scheme::Decentralized => "decentralized",
            Scheme::Su => "su",
            Scheme::Mu => "mu",
            Scheme::Pcd => "pcd",
            Scheme::Pam => "pam",
            Scheme::Hcm => "hcm",
            Scheme::Multiaccess => "multiaccess",
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, Scheme::Pcd | Scheme::Pam | Scheme::Hcm)
    }

    /// Whether `key` means something for this scheme.
    fn accepts(self, key: &str) -> bool {
        const COMMON: &[&str] = &["scheme", "M", "M_grid", "F", "seed", "trials", "simulate"];
        let own: &[&str] = match self {
            Scheme::Man | Scheme::Decentralized => &["N", "K", "demand_policy", "demands"],
            Scheme::Multiaccess => &["N", "K", "d", "demand_policy", "demands"],
            Scheme::Su => &["levels_N", "levels_K", "partitions", "demand_policy"],
            Scheme::Mu => &[
                "K",
                "levels_N",
                "levels_U",
                "partitions",
                "variant",
                "demand_policy",
            ],
            Scheme::Pcd | Scheme::Pam => &["N", "K", "d", "rho", "t0", "exec", "demand_policy"],
            Scheme::Hcm => &["N", "K", "d", "rho", "t0", "t", "exec", "demand_policy"],
        };
        COMMON.contains(&key) || own.contains(&key)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        <Scheme as ValueEnum>::from_str(s, true)
            .map_err(|_| CliError::Config(format!("unknown scheme {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DemandPolicy {
    /// Distinct files per user (or per level/row) wherever `N` permits.
    WorstCaseDistinct,
    AllSame,
    Explicit,
    /// Uniform random demands per trial; Poisson profiles for adaptive schemes.
    Stochastic,
}

impl FromStr for DemandPolicy {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "worst_case_distinct" => Ok(DemandPolicy::WorstCaseDistinct),
            "all_same" => Ok(DemandPolicy::AllSame),
            "explicit" => Ok(DemandPolicy::Explicit),
            "stochastic" => Ok(DemandPolicy::Stochastic),
            _ => config_err(format!("unknown demand_policy {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Simulate {
    /// Simulate when the byte-level run fits the size limits.
    Auto,
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Auto,
    Bytes,
    Count,
}

/// One level split, 0-indexed internally.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSpec {
    pub h: Vec<usize>,
    pub i: Vec<usize>,
    pub j: Vec<usize>,
}

impl PartitionSpec {
    /// Label with 1-indexed levels, e.g. `H={3} I={1,2}`.
    pub fn label(&self, with_j: bool) -> String {
        let set = |v: &[usize]| {
            let body: Vec<String> = v.iter().map(|x| (x + 1).to_string()).collect();
            format!("{{{}}}", body.join(","))
        };
        let mut s = format!("H={} I={}", set(&self.h), set(&self.i));
        if with_j {
            s.push_str(&format!(" J={}", set(&self.j)));
        }
        s
    }
}

/// `I=1,2/H=3;I=1,2,3`: splits separated by `;`, sets by `/`, levels
/// 1-indexed. Levels not named land in H.
pub fn parse_partitions(s: &str, n_levels: usize) -> Result<Vec<PartitionSpec>> {
    let mut out = Vec::new();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let mut spec = PartitionSpec {
            h: Vec::new(),
            i: Vec::new(),
            j: Vec::new(),
        };
        let mut seen = vec![false; n_levels];
        for set in part.split('/') {
            let Some((name, body)) = set.split_once('=') else {
                return config_err(format!("partition {part:?}: expected SET=levels"));
            };
            let target = match name.trim() {
                "H" => &mut spec.h,
                "I" => &mut spec.i,
                "J" => &mut spec.j,
                other => return config_err(format!("partition {part:?}: unknown set {other:?}")),
            };
            for l in body.split(',').map(str::trim).filter(|x| !x.is_empty()) {
                let l: usize = l.parse().map_err(|_| {
                    CliError::Config(format!("partition {part:?}: bad level {l:?}"))
                })?;
                if l == 0 || l > n_levels || seen[l - 1] {
                    return config_err(format!(
                        "partition {part:?}: level {l} out of range or repeated"
                    ));
                }
                seen[l - 1] = true;
                target.push(l - 1);
            }
        }
        spec.h.extend((0..n_levels).filter(|&l| !seen[l]));
        for v in [&mut spec.h, &mut spec.i, &mut spec.j] {
            v.sort_unstable();
        }
        out.push(spec);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub scheme: Scheme,
    pub n_files: usize,
    pub n_caches: usize,
    pub grid: Vec<Rational>,
    /// Requested file size in bytes; rounded up to the scheme's multiple.
    pub file_size: Option<usize>,
    pub d: usize,
    pub rho: f64,
    pub t0: f64,
    pub t: f64,
    pub levels: Vec<Level>,
    pub partitions: Vec<PartitionSpec>,
    pub variant: MuVariant,
    pub seed: u64,
    pub trials: usize,
    pub demand_policy: DemandPolicy,
    pub demands: Vec<usize>,
    pub simulate: Simulate,
    pub exec: Exec,
}

/// Default file size of the decentralized scheme, whose minimal size is a
/// single byte and whose rate concentrates only for large `F`.
pub const DEC_DEFAULT_FILE_SIZE: usize = 4096;

impl Scenario {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let scheme: Scheme = cfg
            .get("scheme")
            .ok_or_else(|| CliError::Usage("no scheme given (use --scheme or scheme=...)".into()))?
            .parse()?;
        if let Some(k) = cfg.keys().find(|k| !scheme.accepts(k)) {
            return config_err(format!("key {k:?} does not apply to scheme {scheme}"));
        }
        let require = |key: &str| -> Result<usize> {
            cfg.usize(key)?
                .ok_or_else(|| CliError::Config(format!("scheme {scheme} needs {key}")))
        };

        let grid = cfg
            .grid()?
            .ok_or_else(|| CliError::Usage("no memory grid (set M or M_grid)".into()))?;
        if grid.is_empty() {
            return Err(CliError::Usage("memory grid is empty".into()));
        }
        let mut grid = grid;
        grid.sort();
        grid.dedup();

        let default_policy = if scheme.is_adaptive() {
            DemandPolicy::Stochastic
        } else {
            DemandPolicy::WorstCaseDistinct
        };
        let mut sc = Scenario {
            scheme,
            n_files: 0,
            n_caches: 0,
            grid,
            file_size: cfg.usize("F")?,
            d: 1,
            rho: cfg.f64("rho")?.unwrap_or(0.25),
            t0: cfg.f64("t0")?.unwrap_or(0.1),
            t: 0.0,
            levels: Vec::new(),
            partitions: Vec::new(),
            variant: match cfg.get("variant") {
                None | Some("approximate") => MuVariant::Approximate,
                Some("exact") => MuVariant::Exact,
                Some(v) => return config_err(format!("unknown variant {v:?}")),
            },
            seed: cfg.u64("seed")?.unwrap_or(0),
            trials: cfg
                .usize("trials")?
                .unwrap_or(if scheme.is_adaptive() { 100 } else { 1 }),
            demand_policy: cfg
                .get("demand_policy")
                .map_or(Ok(default_policy), str::parse)?,
            demands: cfg.usize_list("demands")?.unwrap_or_default(),
            simulate: match cfg.get("simulate") {
                None | Some("auto") => Simulate::Auto,
                Some("true") => Simulate::On,
                Some("false") => Simulate::Off,
                Some(v) => {
                    return config_err(format!("simulate must be auto, true or false, got {v:?}"))
                }
            },
            exec: match cfg.get("exec") {
                None | Some("auto") => Exec::Auto,
                Some("bytes") => Exec::Bytes,
                Some("count") => Exec::Count,
                Some(v) => {
                    return config_err(format!("exec must be auto, bytes or count, got {v:?}"))
                }
            },
        };
        sc.t = cfg.f64("t")?.unwrap_or(sc.t0);
        if sc.file_size == Some(0) {
            return config_err("F must be positive");
        }
        if sc.trials == 0 {
            return config_err("trials must be positive");
        }

        match scheme {
            Scheme::Su | Scheme::Mu => {
                let n = cfg
                    .usize_list("levels_N")?
                    .ok_or_else(|| CliError::Config(format!("scheme {scheme} needs levels_N")))?;
                let users_key = if scheme == Scheme::Su {
                    "levels_K"
                } else {
                    "levels_U"
                };
                let u = cfg.usize_list(users_key)?.ok_or_else(|| {
                    CliError::Config(format!("scheme {scheme} needs {users_key}"))
                })?;
                sc.levels = levels_from(&n, &u).map_err(|e| CliError::Config(e.to_string()))?;
                sc.n_files = n.iter().sum();
                sc.n_caches = if scheme == Scheme::Su {
                    u.iter().sum()
                } else {
                    require("K")?
                };
                if let Some(p) = cfg.get("partitions") {
                    sc.partitions = parse_partitions(p, sc.levels.len())?;
                    if scheme == Scheme::Su && sc.partitions.iter().any(|p| !p.j.is_empty()) {
                        return config_err("single-user partitions have no J set");
                    }
                }
                if sc.demand_policy != DemandPolicy::WorstCaseDistinct {
                    return config_err(format!(
                        "scheme {scheme} supports only demand_policy=worst_case_distinct"
                    ));
                }
            }
            _ => {
                sc.n_files = require("N")?;
                sc.n_caches = require("K")?;
            }
        }
        if sc.n_files == 0 || sc.n_caches == 0 {
            return config_err("N and K must be positive");
        }
        if matches!(scheme, Scheme::Multiaccess) || scheme.is_adaptive() {
            sc.d = require("d")?;
            if sc.d == 0 || sc.d > sc.n_caches {
                return config_err(format!("d = {} outside 1..=K", sc.d));
            }
        }
        if scheme.is_adaptive() {
            if !sc.n_caches.is_multiple_of(sc.d) {
                return config_err(format!("d = {} does not divide K = {}", sc.d, sc.n_caches));
            }
            if !(sc.rho > 0.0 && sc.rho < 0.5) {
                return config_err(format!("rho = {} outside (0, 1/2)", sc.rho));
            }
            if sc.t0 <= 0.0 || sc.t <= 0.0 {
                return config_err("t0 and t must be positive");
            }
            if sc.demand_policy != DemandPolicy::Stochastic {
                return config_err(
                    "adaptive schemes draw Poisson profiles: demand_policy must be stochastic",
                );
            }
        } else if sc.exec != Exec::Auto {
            return config_err("exec applies to adaptive schemes only");
        }
        if scheme == Scheme::Decentralized && sc.n_caches > 64 {
            return config_err("decentralized scheme supports K <= 64");
        }
        if sc.demand_policy == DemandPolicy::Explicit {
            if sc.demands.len() != sc.n_caches {
                return config_err(format!("demands must list {} files", sc.n_caches));
            }
            if sc.demands.iter().any(|&f| f >= sc.n_files) {
                return config_err("demanded file out of range");
            }
        } else if !sc.demands.is_empty() {
            return config_err("demands requires demand_policy=explicit");
        }

        let top = Rational::from_integer(sc.n_files as i128);
        if let Some(m) = sc.grid.iter().find(|m| **m < Rational::zero() || **m > top) {
            return config_err(format!("M = {m} outside [0, {}]", sc.n_files));
        }
        Ok(sc)
    }

    /// Demanded file of every user for deterministic policies.
    pub fn fixed_demands(&self) -> Vec<usize> {
        match self.demand_policy {
            DemandPolicy::Explicit => self.demands.clone(),
            DemandPolicy::AllSame => vec![0; self.n_caches],
            _ => (0..self.n_caches).map(|u| u % self.n_files).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> Result<Scenario> {
        Scenario::from_config(&Config::parse(text)?)
    }

    #[test]
    fn man_defaults() {
        let s = scenario("scheme=man\nN=4\nK=4\nM_grid=2,0,1").unwrap();
        assert_eq!(s.grid.len(), 3);
        assert!(s.grid.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s.trials, 1);
        assert_eq!(s.fixed_demands(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn per_scheme_validation() {
        assert!(matches!(
            scenario("scheme=man\nN=4\nK=4\nM_grid="),
            Err(CliError::Usage(_))
        ));
        assert!(scenario("scheme=man\nN=4\nK=4\nM=5").is_err());
        assert!(scenario("scheme=man\nN=4\nK=4\nM=1\nd=2").is_err());
        assert!(scenario("scheme=pcd\nN=8\nK=8\nd=3\nM=1").is_err());
        assert!(scenario("scheme=pam\nN=8\nK=8\nd=4\nM=1\ndemand_policy=all_same").is_err());
        assert!(
            scenario("scheme=man\nN=4\nK=2\nM=1\ndemand_policy=explicit\ndemands=0,4").is_err()
        );
        assert!(scenario("scheme=su\nlevels_N=10,20\nlevels_K=1\nM=1").is_err());
    }

    #[test]
    fn partitions_are_one_indexed() {
        let p = parse_partitions("I=1;I=1,2,3;I=1,2/H=3", 3).unwrap();
        assert_eq!(
            p[0],
            PartitionSpec {
                h: vec![1, 2],
                i: vec![0],
                j: vec![]
            }
        );
        assert_eq!(p[1].i, vec![0, 1, 2]);
        assert_eq!(p[2].label(false), "H={3} I={1,2}");
        assert!(parse_partitions("I=0", 3).is_err());
        assert!(parse_partitions("I=1/H=1", 3).is_err());
    }
}
