//! Cyclic multi-access: user `k` reads caches `k, k+1, ..., k+d-1 (mod K)`.
//!
//! * `dM <= N/2`: ignore the extra caches, run the centralized scheme with
//!   user `k` on cache `k`.
//! * `dM >= N`: cache `i` keeps MDS share `i` of every file; every window
//!   holds `d` distinct shares, so nothing is sent.
//! * in between: a prefix of every file (fraction `2 - 2dM/N`) goes through
//!   the first scheme at memory `N/(2d)`, the rest through the second.
//!
//! With `d = 1` the plan is exactly the centralized scheme for every `M`.

pub mod gf256;
pub mod mds;

use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::man::{ManConfig, ManScheme};
use crate::model::{
    split_multiple, split_point, CacheContent, DemandVector, EntryKey, FileLibrary, Piece,
    Rational, RunReport, TransmissionLog,
};

pub use mds::{mds_decode, mds_encode, MdsShareSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CyclicAccess {
    pub n_caches: usize,
    pub window: usize,
}

impl CyclicAccess {
    pub fn new(n_caches: usize, window: usize) -> Result<Self> {
        if window == 0 || window > n_caches {
            return invalid(format!("window d = {window} outside 1..={n_caches}"));
        }
        if n_caches > 256 {
            return invalid("K > 256 exceeds the GF(2^8) code length");
        }
        Ok(Self { n_caches, window })
    }

    /// Caches read by user `k`, in window order starting at `k`.
    pub fn caches_of(&self, user: usize) -> Vec<usize> {
        (0..self.window)
            .map(|j| (user + j) % self.n_caches)
            .collect()
    }
}

#[derive(Clone, Debug)]
enum Regime {
    /// Plain centralized scheme; `label` is both scope and delivery prefix.
    Single {
        man: ManScheme,
        label: &'static str,
    },
    Mds,
    Shared {
        lambda: Rational,
        man: ManScheme,
    },
}

#[derive(Clone, Debug)]
pub struct MaPlan {
    access: CyclicAccess,
    n_files: usize,
    memory: Rational,
    regime: Regime,
}

/// Which of the three constructions a plan uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaRegime {
    SingleCache,
    Shared,
    FullCoverage,
}

const MDS_SCOPE: &str = "mds";

impl MaPlan {
    pub fn new(access: CyclicAccess, n_files: usize, memory: Rational) -> Result<Self> {
        let n = Rational::from_integer(n_files as i128);
        if n_files == 0 || memory < Rational::zero() || memory > n {
            return invalid(format!("M = {memory} outside [0, {n_files}]"));
        }
        let k = access.n_caches;
        let d = Rational::from_integer(access.window as i128);
        let dm = d * memory;
        let regime = if access.window == 1 {
            Regime::Single {
                man: ManScheme::new(ManConfig::new(n_files, k, memory)?, "man"),
                label: "man",
            }
        } else if dm >= n {
            Regime::Mds
        } else if dm * Rational::from_integer(2) <= n {
            Regime::Single {
                man: ManScheme::new(ManConfig::new(n_files, k, memory)?, "ma"),
                label: "ma",
            }
        } else {
            let lambda = Rational::from_integer(2) - dm * Rational::from_integer(2) / n;
            let half = n / (d * Rational::from_integer(2));
            Regime::Shared {
                lambda,
                man: ManScheme::new(ManConfig::new(n_files, k, half)?, "ma"),
            }
        };
        Ok(Self {
            access,
            n_files,
            memory,
            regime,
        })
    }

    pub fn access(&self) -> CyclicAccess {
        self.access
    }

    pub fn regime(&self) -> MaRegime {
        match self.regime {
            Regime::Single { .. } => MaRegime::SingleCache,
            Regime::Mds => MaRegime::FullCoverage,
            Regime::Shared { .. } => MaRegime::Shared,
        }
    }

    /// Fraction of every file handled by the single-cache scheme.
    pub fn lambda(&self) -> Rational {
        match &self.regime {
            Regime::Single { .. } => Rational::one(),
            Regime::Mds => Rational::zero(),
            Regime::Shared { lambda, .. } => *lambda,
        }
    }

    pub fn file_size_multiple(&self) -> usize {
        let d = self.access.window;
        match &self.regime {
            Regime::Single { man, .. } => man.file_size_multiple(),
            Regime::Mds => d,
            Regime::Shared { lambda, man } => split_multiple(*lambda, man.file_size_multiple(), d),
        }
    }

    /// Prefix length handled by the single-cache scheme.
    fn cut(&self, file_size: usize) -> usize {
        split_point(self.lambda(), file_size)
    }

    fn check_size(&self, file_size: usize) -> Result<()> {
        if !file_size.is_multiple_of(self.file_size_multiple()) {
            return invalid(format!(
                "file size {file_size} is not a multiple of {}",
                self.file_size_multiple()
            ));
        }
        Ok(())
    }
}

fn man_parts(plan: &MaPlan) -> Option<(&ManScheme, &'static str)> {
    match &plan.regime {
        Regime::Single { man, label } => Some((man, label)),
        Regime::Shared { man, .. } => Some((man, "ma")),
        Regime::Mds => None,
    }
}

fn share_key(file: usize, index: usize) -> EntryKey {
    EntryKey::new(MDS_SCOPE, Piece::Share { file, index })
}

pub fn ma_placement(library: &FileLibrary, plan: &MaPlan) -> Result<Vec<CacheContent>> {
    if library.n_files() != plan.n_files {
        return invalid("library size does not match N");
    }
    let size = library.file_size();
    plan.check_size(size)?;
    let k = plan.access.n_caches;
    let cut = plan.cut(size);
    let mut caches = CacheContent::empty_set(k, plan.memory, size);
    if let Some((man, _)) = man_parts(plan) {
        let prefixes: Vec<&[u8]> = library.files().map(|f| &f[..cut]).collect();
        let ids: Vec<usize> = (0..k).collect();
        man.place(&prefixes, &ids, &mut caches)?;
    }
    if cut < size {
        for (n, file) in library.files().enumerate() {
            let set = mds_encode(&file[cut..], k, plan.access.window)?;
            for (i, share) in set.shares.into_iter().enumerate() {
                caches[i].insert(share_key(n, i), share)?;
            }
        }
    }
    Ok(caches)
}

pub fn ma_delivery(
    library: &FileLibrary,
    plan: &MaPlan,
    demands: &DemandVector,
) -> Result<TransmissionLog> {
    if demands
        .as_slice()
        .iter()
        .any(|&(u, _)| u >= plan.access.n_caches)
    {
        return invalid("user index exceeds K");
    }
    let size = library.file_size();
    plan.check_size(size)?;
    let cut = plan.cut(size);
    let mut log = TransmissionLog::new();
    if let Some((man, label)) = man_parts(plan) {
        let prefixes: Vec<&[u8]> = library.files().map(|f| &f[..cut]).collect();
        man.deliver(&prefixes, label, demands.as_slice(), &mut log)?;
    }
    Ok(log)
}

/// Rebuilds `file` for `user` from exactly the caches of its window (in
/// window order) and the broadcast.
pub fn ma_decode(
    user: usize,
    file: usize,
    window: &[&CacheContent],
    log: &TransmissionLog,
    plan: &MaPlan,
    demands: &DemandVector,
    file_size: usize,
) -> Result<Vec<u8>> {
    plan.check_size(file_size)?;
    let expected = plan.access.caches_of(user);
    let got: Vec<usize> = window.iter().map(|c| c.cache_id()).collect();
    if got != expected {
        return invalid(format!(
            "user {user} reads caches {expected:?}, got {got:?}"
        ));
    }
    let cut = plan.cut(file_size);
    let mut out = Vec::with_capacity(file_size);
    if let Some((man, label)) = man_parts(plan) {
        out.extend(man.decode(user, file, cut, label, demands.as_slice(), window[0], log)?);
    }
    if cut < file_size {
        let shares: Vec<(usize, &[u8])> = window
            .iter()
            .filter_map(|c| {
                let i = c.cache_id();
                c.get(&share_key(file, i)).map(|s| (i, s))
            })
            .collect();
        let suffix =
            mds_decode(&shares, plan.access.n_caches, plan.access.window).map_err(|e| match e {
                Error::InsufficientShares { have, need } => Error::DecodeFailure {
                    user,
                    missing: format!("{have} of {need} shares of file {file}"),
                },
                other => other,
            })?;
        out.extend(suffix);
    }
    Ok(out)
}

pub fn ma_simulate(
    library: &FileLibrary,
    plan: &MaPlan,
    demands: &DemandVector,
) -> Result<(Vec<CacheContent>, RunReport)> {
    let caches = ma_placement(library, plan)?;
    let log = ma_delivery(library, plan, demands)?;
    let mut report = RunReport {
        log,
        file_size: library.file_size(),
        n_users: 0,
        failures: Vec::new(),
    };
    for &(u, f) in demands.as_slice() {
        let window: Vec<&CacheContent> = plan
            .access
            .caches_of(u)
            .into_iter()
            .map(|c| &caches[c])
            .collect();
        let got = ma_decode(
            u,
            f,
            &window,
            &report.log,
            plan,
            demands,
            library.file_size(),
        );
        report.check(u, f, library.file(f), got);
    }
    Ok((caches, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::man::man_simulate;
    use crate::model::rational;

    fn run(k: usize, n: usize, d: usize, m: Rational) -> (Vec<CacheContent>, RunReport, MaPlan) {
        let plan = MaPlan::new(CyclicAccess::new(k, d).unwrap(), n, m).unwrap();
        let lib = FileLibrary::random(n, plan.file_size_multiple(), 3).unwrap();
        let demands =
            DemandVector::from_files(&(0..k).map(|u| u % n).collect::<Vec<_>>(), n).unwrap();
        let (caches, report) = ma_simulate(&lib, &plan, &demands).unwrap();
        (caches, report, plan)
    }

    #[test]
    fn windows_wrap() {
        let a = CyclicAccess::new(5, 3).unwrap();
        assert_eq!(a.caches_of(4), vec![4, 0, 1]);
        assert!(CyclicAccess::new(3, 4).is_err());
    }

    #[test]
    fn regimes() {
        let a = CyclicAccess::new(6, 2).unwrap();
        let r = |m| MaPlan::new(a, 6, m).unwrap().regime();
        assert_eq!(r(rational(3, 2)), MaRegime::SingleCache);
        assert_eq!(r(rational(2, 1)), MaRegime::Shared);
        assert_eq!(r(rational(3, 1)), MaRegime::FullCoverage);
        assert_eq!(
            MaPlan::new(a, 6, rational(2, 1)).unwrap().lambda(),
            rational(2, 3)
        );
    }

    #[test]
    fn full_coverage_sends_nothing() {
        let (caches, report, _) = run(5, 5, 3, rational(5, 3));
        assert!(report.log.is_empty());
        assert!(report.all_decoded());
        assert!(caches.iter().all(|c| c.used_bytes() <= c.budget_bytes()));
    }

    #[test]
    fn shared_regime_k6_d2_m2() {
        let (caches, report, _) = run(6, 6, 2, rational(2, 1));
        assert!(report.all_decoded());
        // 2/3 of the file at t = 1.5: 2/3 * 23/12
        assert_eq!(report.rate(), rational(23, 18));
        for c in &caches {
            assert_eq!(c.used_bytes(), c.budget_bytes());
        }
    }

    #[test]
    fn window_one_matches_man() {
        for m in [rational(0, 1), rational(3, 2), rational(4, 1)] {
            let plan = MaPlan::new(CyclicAccess::new(4, 1).unwrap(), 4, m).unwrap();
            let lib = FileLibrary::random(4, plan.file_size_multiple(), 1).unwrap();
            let d = DemandVector::from_files(&[3, 1, 1, 0], 4).unwrap();
            let (c1, r1) = ma_simulate(&lib, &plan, &d).unwrap();
            let (c2, r2) = man_simulate(&lib, &ManConfig::new(4, 4, m).unwrap(), &d).unwrap();
            assert_eq!(c1, c2);
            assert_eq!(r1.log, r2.log);
        }
    }

    #[test]
    fn wrong_window_rejected() {
        let (caches, report, plan) = run(4, 4, 2, rational(2, 1));
        let d = DemandVector::from_files(&[0, 1, 2, 3], 4).unwrap();
        let bad = [&caches[1], &caches[2]];
        assert!(ma_decode(0, 0, &bad, &report.log, &plan, &d, report.file_size).is_err());
    }
}
