//! Centralized placement and coded delivery over `K` caches, with memory
//! sharing between adjacent integral values of `t = KM/N`.
//!
//! Each file is cut into `C(K,t)` parts `W^S` indexed by the `t`-subsets `S`
//! of caches; cache `i` keeps every part whose subset contains `i`. For every
//! `(t+1)`-subset `S` touching at least one demanding cache the server sends
//! `XOR_{j in S, j demanding} W_{d_j}^{S \ {j}}`.

use std::ops::Range;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::model::{
    binomial, fmt_set, split_multiple, split_point, subset_rank, subsets_of_size, CacheContent,
    DemandVector, EntryKey, FileLibrary, Piece, Rational, RunReport, SubfileId, TransmissionLog,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManConfig {
    pub n_files: usize,
    pub n_caches: usize,
    pub memory: Rational,
}

impl ManConfig {
    pub fn new(n_files: usize, n_caches: usize, memory: Rational) -> Result<Self> {
        if n_files == 0 || n_caches == 0 {
            return invalid("N and K must be positive");
        }
        if memory < Rational::zero() || memory > Rational::from_integer(n_files as i128) {
            return invalid(format!("memory {memory} outside [0, {n_files}]"));
        }
        Ok(Self {
            n_files,
            n_caches,
            memory,
        })
    }

    /// `KM/N`, possibly fractional.
    pub fn t_exact(&self) -> Rational {
        self.memory * Rational::new(self.n_caches as i128, self.n_files as i128)
    }

    /// `t` when it is an integer.
    pub fn t(&self) -> Option<usize> {
        let t = self.t_exact();
        t.is_integer().then(|| t.to_integer() as usize)
    }
}

/// How each file is split between the two neighbouring integral schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemorySplit {
    pub t_low: usize,
    pub t_high: usize,
    /// Fraction of every file handled at `t_low`.
    pub lambda: Rational,
}

impl MemorySplit {
    pub fn is_pure(&self) -> bool {
        self.lambda == Rational::one()
    }
}

pub fn memory_split(cfg: &ManConfig) -> MemorySplit {
    let t = cfg.t_exact();
    let t_low = t.floor().to_integer() as usize;
    if t.is_integer() {
        MemorySplit {
            t_low,
            t_high: t_low,
            lambda: Rational::one(),
        }
    } else {
        let t_high = t_low + 1;
        MemorySplit {
            t_low,
            t_high,
            lambda: Rational::from_integer(t_high as i128) - t,
        }
    }
}

#[derive(Clone, Debug)]
struct Segment {
    t: usize,
    range: Range<usize>,
}

/// A centralized instance over a given set of files and caches. Files and
/// caches are addressed by local index; the caller maps them onto global
/// storage.
#[derive(Clone, Debug)]
pub struct ManScheme {
    cfg: ManConfig,
    split: MemorySplit,
    scope: String,
}

impl ManScheme {
    pub fn new(cfg: ManConfig, scope: impl Into<String>) -> Self {
        let split = memory_split(&cfg);
        Self {
            cfg,
            split,
            scope: scope.into(),
        }
    }

    pub fn config(&self) -> &ManConfig {
        &self.cfg
    }

    pub fn split(&self) -> MemorySplit {
        self.split
    }

    /// Every valid file size is a multiple of this.
    pub fn file_size_multiple(&self) -> usize {
        let k = self.cfg.n_caches;
        let parts = |t: usize| binomial(k, t) as usize;
        if self.split.is_pure() {
            parts(self.split.t_low)
        } else {
            split_multiple(
                self.split.lambda,
                parts(self.split.t_low),
                parts(self.split.t_high),
            )
        }
    }

    fn segments(&self, file_size: usize) -> Result<Vec<Segment>> {
        if !file_size.is_multiple_of(self.file_size_multiple()) {
            return invalid(format!(
                "file size {file_size} is not a multiple of {}",
                self.file_size_multiple()
            ));
        }
        if self.split.is_pure() {
            return Ok(vec![Segment {
                t: self.split.t_low,
                range: 0..file_size,
            }]);
        }
        let cut = split_point(self.split.lambda, file_size);
        Ok(vec![
            Segment {
                t: self.split.t_low,
                range: 0..cut,
            },
            Segment {
                t: self.split.t_high,
                range: cut..file_size,
            },
        ])
    }

    fn key_scope(&self, t: usize) -> String {
        format!("{}#{t}", self.scope)
    }

    fn key(&self, t: usize, file: usize, subset: Vec<usize>) -> EntryKey {
        EntryKey::new(
            self.key_scope(t),
            Piece::Subfile(SubfileId::from_sorted(file, subset)),
        )
    }

    fn label(prefix: &str, t: usize, subset: &[usize]) -> String {
        format!("{prefix}#{t}:xor{}", fmt_set(subset))
    }

    fn check_files(&self, files: &[&[u8]]) -> Result<usize> {
        if files.len() != self.cfg.n_files {
            return invalid(format!(
                "scheme expects {} files, got {}",
                self.cfg.n_files,
                files.len()
            ));
        }
        let size = files[0].len();
        if files.iter().any(|f| f.len() != size) {
            return invalid("files differ in length");
        }
        Ok(size)
    }

    /// Stores the placement of `files` into `caches[cache_ids[i]]` for each
    /// local cache `i`.
    pub fn place(
        &self,
        files: &[&[u8]],
        cache_ids: &[usize],
        caches: &mut [CacheContent],
    ) -> Result<()> {
        let k = self.cfg.n_caches;
        if cache_ids.len() != k {
            return invalid(format!("expected {k} cache ids, got {}", cache_ids.len()));
        }
        let size = self.check_files(files)?;
        for seg in self.segments(size)? {
            let subsets = subsets_of_size(k, seg.t)?;
            let part = seg.range.len() / subsets.len();
            for (j, file) in files.iter().enumerate() {
                let bytes = &file[seg.range.clone()];
                for (r, s) in subsets.iter().enumerate() {
                    let piece = &bytes[r * part..(r + 1) * part];
                    for &i in s {
                        caches[cache_ids[i]]
                            .insert(self.key(seg.t, j, s.clone()), piece.to_vec())?;
                    }
                }
            }
        }
        Ok(())
    }

    fn demand_table(&self, demands: &[(usize, usize)]) -> Result<Vec<Option<usize>>> {
        let mut table = vec![None; self.cfg.n_caches];
        for &(u, f) in demands {
            if u >= self.cfg.n_caches {
                return invalid(format!("user {u} has no cache"));
            }
            if f >= self.cfg.n_files {
                return invalid(format!(
                    "user {u} demands file {f} >= N = {}",
                    self.cfg.n_files
                ));
            }
            if table[u].replace(f).is_some() {
                return invalid(format!("user {u} appears twice"));
            }
        }
        Ok(table)
    }

    /// Appends the coded delivery for `demands` (local user = local cache) to
    /// `log`, labelling payloads under `prefix`.
    pub fn deliver(
        &self,
        files: &[&[u8]],
        prefix: &str,
        demands: &[(usize, usize)],
        log: &mut TransmissionLog,
    ) -> Result<()> {
        let k = self.cfg.n_caches;
        let table = self.demand_table(demands)?;
        let size = self.check_files(files)?;
        for seg in self.segments(size)? {
            if seg.t == k {
                continue;
            }
            let part = seg.range.len() / binomial(k, seg.t) as usize;
            for s in subsets_of_size(k, seg.t + 1)? {
                let mut payload: Option<Vec<u8>> = None;
                for (pos, &j) in s.iter().enumerate() {
                    let Some(f) = table[j] else { continue };
                    let mut rest = s.clone();
                    rest.remove(pos);
                    let r = subset_rank(k, &rest);
                    let start = seg.range.start + r * part;
                    let piece = &files[f][start..start + part];
                    match payload.as_mut() {
                        None => payload = Some(piece.to_vec()),
                        Some(p) => p.iter_mut().zip(piece).for_each(|(a, b)| *a ^= b),
                    }
                }
                if let Some(p) = payload {
                    log.push(Self::label(prefix, seg.t, &s), p)?;
                }
            }
        }
        Ok(())
    }

    /// Rebuilds `file` for local user `user` from its own cache and the log.
    pub fn decode(
        &self,
        user: usize,
        file: usize,
        file_size: usize,
        prefix: &str,
        demands: &[(usize, usize)],
        cache: &CacheContent,
        log: &TransmissionLog,
    ) -> Result<Vec<u8>> {
        let k = self.cfg.n_caches;
        let table = self.demand_table(demands)?;
        if table.get(user).copied().flatten() != Some(file) {
            return invalid(format!("user {user} does not demand file {file}"));
        }
        let missing = |what: String| Error::DecodeFailure {
            user,
            missing: what,
        };
        let mut out = Vec::with_capacity(file_size);
        for seg in self.segments(file_size)? {
            let subsets = subsets_of_size(k, seg.t)?;
            let part = seg.range.len() / subsets.len();
            for t_set in subsets {
                if t_set.binary_search(&user).is_ok() {
                    let id = self.key(seg.t, file, t_set);
                    let bytes = cache
                        .get(&id)
                        .ok_or_else(|| missing(format!("{:?}", id.piece)))?;
                    out.extend_from_slice(bytes);
                    continue;
                }
                let mut s = t_set.clone();
                let at = s.binary_search(&user).unwrap_err();
                s.insert(at, user);
                let label = Self::label(prefix, seg.t, &s);
                let mut piece = log
                    .get(&label)
                    .ok_or_else(|| missing(label.clone()))?
                    .to_vec();
                if piece.len() != part {
                    return Err(missing(format!("{label} has wrong length")));
                }
                for (pos, &j) in s.iter().enumerate() {
                    if j == user {
                        continue;
                    }
                    let Some(fj) = table[j] else { continue };
                    let mut rest = s.clone();
                    rest.remove(pos);
                    let id = self.key(seg.t, fj, rest);
                    let side = cache
                        .get(&id)
                        .ok_or_else(|| missing(format!("{:?}", id.piece)))?;
                    piece.iter_mut().zip(side).for_each(|(a, b)| *a ^= b);
                }
                out.extend_from_slice(&piece);
            }
        }
        Ok(out)
    }

    /// Exact rate of [`ManScheme::deliver`] when `n_demanders` caches have a
    /// user, without materialising any bytes.
    pub fn rate(&self, n_demanders: usize) -> BigRational {
        let k = self.cfg.n_caches;
        let lam = to_big(self.split.lambda);
        let low = partial_delivery_rate(k, self.split.t_low, n_demanders);
        if self.split.is_pure() {
            return low;
        }
        let high = partial_delivery_rate(k, self.split.t_high, n_demanders);
        &lam * low + (BigRational::one() - lam) * high
    }
}

pub(crate) fn to_big(r: Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

pub(crate) fn big_binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `[C(K,t+1) - C(K-m,t+1)] / C(K,t)`: payloads touching at least one of `m`
/// demanding caches, each a `1/C(K,t)` fraction of a file.
pub fn partial_delivery_rate(k: usize, t: usize, m: usize) -> BigRational {
    if t >= k || m == 0 {
        return BigRational::zero();
    }
    let m = m.min(k);
    let sent = big_binomial(k, t + 1) - big_binomial(k - m, t + 1);
    BigRational::new(sent, big_binomial(k, t))
}

fn integral_scheme(cfg: &ManConfig) -> Result<ManScheme> {
    if cfg.t().is_none() {
        let t = cfg.t_exact();
        return Err(Error::RequiresMemorySharing {
            numer: *t.numer(),
            denom: *t.denom(),
        });
    }
    Ok(ManScheme::new(cfg.clone(), "man"))
}

fn all_caches(cfg: &ManConfig) -> Vec<usize> {
    (0..cfg.n_caches).collect()
}

/// Placement for integral `t`. `F` must be divisible by `C(K,t)`.
pub fn man_placement(library: &FileLibrary, cfg: &ManConfig) -> Result<Vec<CacheContent>> {
    let scheme = integral_scheme(cfg)?;
    place_all(&scheme, library, cfg)
}

fn place_all(
    scheme: &ManScheme,
    library: &FileLibrary,
    cfg: &ManConfig,
) -> Result<Vec<CacheContent>> {
    check_library(library, cfg)?;
    let mut caches = CacheContent::empty_set(cfg.n_caches, cfg.memory, library.file_size());
    scheme.place(&library.file_refs(), &all_caches(cfg), &mut caches)?;
    Ok(caches)
}

fn check_library(library: &FileLibrary, cfg: &ManConfig) -> Result<()> {
    if library.n_files() != cfg.n_files {
        return invalid(format!(
            "library has {} files, config says {}",
            library.n_files(),
            cfg.n_files
        ));
    }
    Ok(())
}

/// Coded delivery for integral `t`; users are identified with their caches.
pub fn man_delivery(
    library: &FileLibrary,
    demands: &DemandVector,
    cfg: &ManConfig,
) -> Result<TransmissionLog> {
    let scheme = integral_scheme(cfg)?;
    deliver_all(&scheme, library, demands, cfg)
}

fn deliver_all(
    scheme: &ManScheme,
    library: &FileLibrary,
    demands: &DemandVector,
    cfg: &ManConfig,
) -> Result<TransmissionLog> {
    check_library(library, cfg)?;
    let mut log = TransmissionLog::new();
    scheme.deliver(&library.file_refs(), "man", demands.as_slice(), &mut log)?;
    Ok(log)
}

/// Reconstructs `demand` for `user` from its cache and the broadcast only.
pub fn man_decode(
    user: usize,
    demand: usize,
    cache: &CacheContent,
    log: &TransmissionLog,
    demands: &DemandVector,
    cfg: &ManConfig,
    file_size: usize,
) -> Result<Vec<u8>> {
    ManScheme::new(cfg.clone(), "man").decode(
        user,
        demand,
        file_size,
        "man",
        demands.as_slice(),
        cache,
        log,
    )
}

/// Placement and delivery for any `M` in `[0, N]`, memory-shared between the
/// two neighbouring integral schemes. `F` must be a multiple of
/// [`ManScheme::file_size_multiple`].
pub fn run_with_sharing(
    library: &FileLibrary,
    cfg: &ManConfig,
    demands: &DemandVector,
) -> Result<(Vec<CacheContent>, TransmissionLog)> {
    let scheme = ManScheme::new(cfg.clone(), "man");
    let caches = place_all(&scheme, library, cfg)?;
    let log = deliver_all(&scheme, library, demands, cfg)?;
    Ok((caches, log))
}

/// Full round trip: place, deliver, and let every demanding user decode.
pub fn man_simulate(
    library: &FileLibrary,
    cfg: &ManConfig,
    demands: &DemandVector,
) -> Result<(Vec<CacheContent>, RunReport)> {
    let (caches, log) = run_with_sharing(library, cfg, demands)?;
    let report = decode_all(library, cfg, demands, &caches, log);
    Ok((caches, report))
}

/// Decodes every demanding user against possibly tampered caches.
pub fn decode_all(
    library: &FileLibrary,
    cfg: &ManConfig,
    demands: &DemandVector,
    caches: &[CacheContent],
    log: TransmissionLog,
) -> RunReport {
    let mut report = RunReport {
        log,
        file_size: library.file_size(),
        n_users: 0,
        failures: Vec::new(),
    };
    for &(user, file) in demands.as_slice() {
        let got = man_decode(
            user,
            file,
            &caches[user],
            &report.log,
            demands,
            cfg,
            library.file_size(),
        );
        report.check(user, file, library.file(file), got);
    }
    report
}
