//! Shared data model: file libraries, cache contents, demands and the
//! broadcast log every scheme writes into.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

/// Exact rational used for memory sizes and rates.
pub type Rational = Ratio<i128>;

pub fn rational(numer: i128, denom: i128) -> Rational {
    Rational::new(numer, denom)
}

/// The `N` equal-size files of the content library.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileLibrary {
    file_size: usize,
    files: Vec<Vec<u8>>,
}

impl FileLibrary {
    pub fn new(files: Vec<Vec<u8>>) -> Result<Self> {
        let Some(first) = files.first() else {
            return invalid("library needs at least one file");
        };
        let file_size = first.len();
        if file_size == 0 {
            return invalid("file size must be at least 1 byte");
        }
        if files.iter().any(|f| f.len() != file_size) {
            return invalid("all files must have the same length");
        }
        Ok(Self { file_size, files })
    }

    /// Library of pseudo-random files, reproducible from `seed`.
    pub fn random(n_files: usize, file_size: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let files = (0..n_files)
            .map(|_| {
                let mut f = vec![0u8; file_size];
                rng.fill_bytes(&mut f);
                f
            })
            .collect();
        Self::new(files)
    }

    pub fn n_files(&self) -> usize {
        self.files.len()
    }

    pub fn file_size(&self) -> usize {
        self.file_size
    }

    pub fn file(&self, index: usize) -> &[u8] {
        &self.files[index]
    }

    pub fn files(&self) -> impl Iterator<Item = &[u8]> {
        self.files.iter().map(Vec::as_slice)
    }

    pub fn file_refs(&self) -> Vec<&[u8]> {
        self.files().collect()
    }

    /// Zero-pads every file up to the least multiple of `multiple` that is at
    /// least the current size.
    pub fn padded_to_multiple(&self, multiple: usize) -> Self {
        let size = padded_size(self.file_size, multiple);
        self.padded_to(size)
    }

    pub fn padded_to(&self, size: usize) -> Self {
        let size = size.max(self.file_size);
        let files = self
            .files
            .iter()
            .map(|f| {
                let mut f = f.clone();
                f.resize(size, 0);
                f
            })
            .collect();
        Self {
            file_size: size,
            files,
        }
    }

    /// Sub-library made of the given file indices, in order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_files()) {
            return invalid(format!("file {bad} out of range"));
        }
        Self::new(indices.iter().map(|&i| self.files[i].clone()).collect())
    }
}

/// Least multiple of `multiple` that is `>= size` (and at least `multiple`).
pub fn padded_size(size: usize, multiple: usize) -> usize {
    let multiple = multiple.max(1);
    size.max(1).div_ceil(multiple) * multiple
}

/// Label of one piece `W_i^S` of the centralized placement.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubfileId {
    pub file: usize,
    subset: Vec<usize>,
}

impl SubfileId {
    pub fn new(file: usize, mut subset: Vec<usize>, n_caches: usize) -> Result<Self> {
        subset.sort_unstable();
        if subset.windows(2).any(|w| w[0] == w[1]) {
            return invalid("subset elements must be distinct");
        }
        if subset.last().is_some_and(|&c| c >= n_caches) {
            return invalid("subset element out of range");
        }
        Ok(Self { file, subset })
    }

    pub(crate) fn from_sorted(file: usize, subset: Vec<usize>) -> Self {
        debug_assert!(subset.windows(2).all(|w| w[0] < w[1]));
        Self { file, subset }
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }
}

impl fmt::Display for SubfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "W{}^{}", self.file, fmt_set(&self.subset))
    }
}

/// `{0,2,3}`
pub fn fmt_set(set: &[usize]) -> String {
    let body: Vec<String> = set.iter().map(ToString::to_string).collect();
    format!("{{{}}}", body.join(","))
}

/// What a cache entry holds.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Piece {
    Subfile(SubfileId),
    /// A complete copy of a file.
    Replica(usize),
    /// One erasure-coded share of a file.
    Share {
        file: usize,
        index: usize,
    },
    /// Packed bits sampled by decentralized placement, all files concatenated.
    Bits,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntryKey {
    pub scope: String,
    pub piece: Piece,
}

impl EntryKey {
    pub fn new(scope: impl Into<String>, piece: Piece) -> Self {
        Self {
            scope: scope.into(),
            piece,
        }
    }
}

/// Content of one cache, with a hard byte budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheContent {
    cache_id: usize,
    budget_bytes: usize,
    used_bytes: usize,
    entries: BTreeMap<EntryKey, Vec<u8>>,
}

impl CacheContent {
    pub fn new(cache_id: usize, budget_bytes: usize) -> Self {
        Self {
            cache_id,
            budget_bytes,
            used_bytes: 0,
            entries: BTreeMap::new(),
        }
    }

    /// `K` empty caches with budget `floor(M * F)` bytes each.
    pub fn empty_set(n_caches: usize, memory: Rational, file_size: usize) -> Vec<Self> {
        let budget = budget_bytes(memory, file_size);
        (0..n_caches).map(|c| Self::new(c, budget)).collect()
    }

    pub fn insert(&mut self, key: EntryKey, bytes: Vec<u8>) -> Result<()> {
        let used = self.used_bytes + bytes.len();
        if used > self.budget_bytes {
            return Err(Error::BudgetExceeded {
                cache: self.cache_id,
                used,
                budget: self.budget_bytes,
            });
        }
        if self.entries.contains_key(&key) {
            return invalid(format!("cache {} already holds {key:?}", self.cache_id));
        }
        self.used_bytes = used;
        self.entries.insert(key, bytes);
        Ok(())
    }

    pub fn get(&self, key: &EntryKey) -> Option<&[u8]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn cache_id(&self) -> usize {
        self.cache_id
    }

    pub fn budget_bytes(&self) -> usize {
        self.budget_bytes
    }

    pub fn used_bytes(&self) -> usize {
        self.used_bytes
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&EntryKey, &[u8])> {
        self.entries.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// Flips one bit of the first non-empty entry. Returns false when the
    /// cache holds no bytes at all.
    pub fn inject_fault(&mut self) -> bool {
        match self.entries.values_mut().find(|v| !v.is_empty()) {
            Some(v) => {
                v[0] ^= 0x01;
                true
            }
            None => false,
        }
    }
}

/// `floor(M * F)`.
pub fn budget_bytes(memory: Rational, file_size: usize) -> usize {
    let b = (memory * Rational::from_integer(file_size as i128)).floor();
    b.to_integer().max(0) as usize
}

/// Which file each user asks for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandVector {
    demands: Vec<(usize, usize)>,
}

impl DemandVector {
    pub fn new(demands: Vec<(usize, usize)>, n_files: usize) -> Result<Self> {
        if let Some(&(u, f)) = demands.iter().find(|&&(_, f)| f >= n_files) {
            return invalid(format!("user {u} demands file {f} >= N = {n_files}"));
        }
        let mut users: Vec<usize> = demands.iter().map(|&(u, _)| u).collect();
        users.sort_unstable();
        if users.windows(2).any(|w| w[0] == w[1]) {
            return invalid("a user appears twice in the demand vector");
        }
        Ok(Self { demands })
    }

    /// User `k` asks for `files[k]`.
    pub fn from_files(files: &[usize], n_files: usize) -> Result<Self> {
        Self::new(files.iter().copied().enumerate().collect(), n_files)
    }

    pub fn as_slice(&self) -> &[(usize, usize)] {
        &self.demands
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    pub fn file_of(&self, user: usize) -> Option<usize> {
        self.demands
            .iter()
            .find(|&&(u, _)| u == user)
            .map(|&(_, f)| f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transmission {
    pub label: String,
    pub payload: Vec<u8>,
}

/// Ordered broadcast payloads. Labels are unique.
#[derive(Clone, Debug, Default)]
pub struct TransmissionLog {
    entries: Vec<Transmission>,
    index: HashMap<String, usize>,
    total_bytes: usize,
}

impl PartialEq for TransmissionLog {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Eq for TransmissionLog {}

impl TransmissionLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, label: impl Into<String>, payload: Vec<u8>) -> Result<()> {
        let label = label.into();
        if self.index.contains_key(&label) {
            return invalid(format!("duplicate transmission label {label}"));
        }
        self.total_bytes += payload.len();
        self.index.insert(label.clone(), self.entries.len());
        self.entries.push(Transmission { label, payload });
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&[u8]> {
        self.index
            .get(label)
            .map(|&i| self.entries[i].payload.as_slice())
    }

    pub fn append(&mut self, other: TransmissionLog) -> Result<()> {
        for t in other.entries {
            self.push(t.label, t.payload)?;
        }
        Ok(())
    }

    pub fn entries(&self) -> &[Transmission] {
        &self.entries
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|t| t.label.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_bytes(&self) -> usize {
        self.total_bytes
    }
}

/// `total_bytes / F`, exact.
pub fn measured_rate(log: &TransmissionLog, file_size: usize) -> Rational {
    assert!(file_size >= 1, "file size must be positive");
    rational(log.total_bytes() as i128, file_size as i128)
}

/// Byte-wise XOR of all parts; shorter parts are zero-padded to the longest.
pub fn xor_bytes(parts: &[&[u8]]) -> Result<Vec<u8>> {
    if parts.is_empty() {
        return invalid("xor of an empty list");
    }
    let len = parts.iter().map(|p| p.len()).max().unwrap_or(0);
    let mut out = vec![0u8; len];
    for p in parts {
        xor_into(&mut out, p);
    }
    Ok(out)
}

/// `dst ^= src`, growing `dst` with zeros if `src` is longer.
pub fn xor_into(dst: &mut Vec<u8>, src: &[u8]) {
    if dst.len() < src.len() {
        dst.resize(src.len(), 0);
    }
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// All `C(k, t)` subsets of `{0..k-1}` in lexicographic order of their sorted
/// element lists.
pub fn subsets_of_size(k: usize, t: usize) -> Result<Vec<Vec<usize>>> {
    if t > k {
        return invalid(format!("subset size {t} exceeds ground set {k}"));
    }
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..t).collect();
    loop {
        out.push(current.clone());
        // rightmost position that can still move
        let Some(pos) = (0..t).rev().find(|&i| current[i] < k - t + i) else {
            break;
        };
        current[pos] += 1;
        for i in pos + 1..t {
            current[i] = current[i - 1] + 1;
        }
    }
    Ok(out)
}

/// Position of `subset` in the order produced by [`subsets_of_size`].
pub fn subset_rank(k: usize, subset: &[usize]) -> usize {
    let t = subset.len();
    let mut rank = 0;
    let mut start = 0;
    for (i, &c) in subset.iter().enumerate() {
        for j in start..c {
            rank += binomial(k - j - 1, t - i - 1) as usize;
        }
        start = c + 1;
    }
    rank
}

/// `C(n, k)`; 0 when `k > n`. Panics on `u128` overflow.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiply
        let num = acc
            .checked_mul((n - i) as u128)
            .expect("binomial coefficient overflows u128");
        acc = num / (i as u128 + 1);
    }
    acc
}

pub fn lcm(a: usize, b: usize) -> usize {
    a.lcm(&b)
}

/// Least `F` such that a split `lambda*F | (1-lambda)*F` leaves a prefix
/// divisible by `prefix_multiple` and a suffix divisible by
/// `suffix_multiple`. Every multiple of the result has the same property.
pub fn split_multiple(lambda: Rational, prefix_multiple: usize, suffix_multiple: usize) -> usize {
    let (p, q) = (*lambda.numer() as usize, *lambda.denom() as usize);
    if p == 0 {
        return suffix_multiple.max(1);
    }
    if p == q {
        return prefix_multiple.max(1);
    }
    // F = q * m, prefix = p * m, suffix = (q - p) * m
    let m1 = prefix_multiple / prefix_multiple.gcd(&p);
    let m2 = suffix_multiple / suffix_multiple.gcd(&(q - p));
    q * m1.lcm(&m2)
}

/// Prefix length `lambda * len`; exact when `len` satisfies [`split_multiple`].
pub fn split_point(lambda: Rational, len: usize) -> usize {
    let v = lambda * Rational::from_integer(len as i128);
    v.floor().to_integer() as usize
}

/// Deterministic per-index seed derived from a master seed (SplitMix64
/// finalizer over the pair).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Outcome of running one scheme end to end: the broadcast plus the users
/// that failed to reconstruct their file.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub log: TransmissionLog,
    pub file_size: usize,
    pub n_users: usize,
    pub failures: Vec<UserFailure>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserFailure {
    pub user: usize,
    pub file: usize,
    pub reason: String,
}

impl RunReport {
    pub fn rate(&self) -> Rational {
        measured_rate(&self.log, self.file_size)
    }

    pub fn all_decoded(&self) -> bool {
        self.failures.is_empty()
    }

    /// Records the outcome of one user's decode attempt.
    pub(crate) fn check(
        &mut self,
        user: usize,
        file: usize,
        expected: &[u8],
        got: Result<Vec<u8>>,
    ) {
        self.n_users += 1;
        match got {
            Ok(bytes) if bytes == expected => {}
            Ok(_) => self.failures.push(UserFailure {
                user,
                file,
                reason: "decoded bytes differ".into(),
            }),
            Err(e) => self.failures.push(UserFailure {
                user,
                file,
                reason: e.to_string(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_small_cases() {
        assert_eq!(
            subsets_of_size(3, 2).unwrap(),
            vec![vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        assert_eq!(subsets_of_size(4, 0).unwrap(), vec![Vec::<usize>::new()]);
        let s = subsets_of_size(6, 3).unwrap();
        assert_eq!(s.len(), 20);
        assert_eq!(s[0], vec![0, 1, 2]);
        assert!(subsets_of_size(2, 3).is_err());
    }

    #[test]
    fn subset_rank_inverts_enumeration() {
        for k in 0..=8 {
            for t in 0..=k {
                for (i, s) in subsets_of_size(k, t).unwrap().iter().enumerate() {
                    assert_eq!(subset_rank(k, s), i);
                }
            }
        }
    }

    #[test]
    fn xor_cases() {
        assert_eq!(xor_bytes(&[&[0xFF], &[0x0F]]).unwrap(), vec![0xF0]);
        assert_eq!(xor_bytes(&[&[1, 2, 3]]).unwrap(), vec![1, 2, 3]);
        assert_eq!(xor_bytes(&[&[1, 2, 3], &[1]]).unwrap(), vec![0, 2, 3]);
        assert!(xor_bytes(&[]).is_err());
    }

    #[test]
    fn measured_rate_cases() {
        let mut log = TransmissionLog::new();
        assert_eq!(measured_rate(&log, 1024), rational(0, 1));
        log.push("half", vec![0; 512]).unwrap();
        assert_eq!(measured_rate(&log, 1024), rational(1, 2));
        assert!(log.push("half", vec![]).is_err());
    }

    #[test]
    fn cache_budget_is_hard() {
        let mut c = CacheContent::new(0, 4);
        c.insert(EntryKey::new("", Piece::Replica(0)), vec![0; 3])
            .unwrap();
        let err = c
            .insert(EntryKey::new("", Piece::Replica(1)), vec![0; 2])
            .unwrap_err();
        assert!(matches!(
            err,
            Error::BudgetExceeded {
                used: 5,
                budget: 4,
                ..
            }
        ));
        assert_eq!(c.used_bytes(), 3);
    }

    #[test]
    fn library_validation_and_padding() {
        assert!(FileLibrary::new(vec![]).is_err());
        assert!(FileLibrary::new(vec![vec![]]).is_err());
        assert!(FileLibrary::new(vec![vec![1, 2], vec![3]]).is_err());
        let lib = FileLibrary::new(vec![vec![1, 2, 3], vec![4, 5, 6]]).unwrap();
        let p = lib.padded_to_multiple(4);
        assert_eq!(p.file_size(), 4);
        assert_eq!(p.file(1), &[4, 5, 6, 0]);
        assert_eq!(padded_size(6, 4), 8);
        assert_eq!(padded_size(8, 4), 8);
    }

    #[test]
    fn demand_vector_validation() {
        assert!(DemandVector::new(vec![(0, 2)], 2).is_err());
        assert!(DemandVector::new(vec![(0, 1), (0, 0)], 2).is_err());
        let d = DemandVector::from_files(&[1, 0], 2).unwrap();
        assert_eq!(d.file_of(0), Some(1));
    }

    #[test]
    fn split_multiple_divides_both_sides() {
        for (p, q) in [(1, 2), (1, 3), (2, 3), (3, 7), (5, 12)] {
            for (a, b) in [(4, 6), (3, 3), (10, 5), (1, 7)] {
                let lam = rational(p, q);
                let f = split_multiple(lam, a, b);
                for mult in 1..4 {
                    let f = f * mult;
                    let pre = split_point(lam, f);
                    assert_eq!(pre % a, 0);
                    assert_eq!((f - pre) % b, 0);
                    assert_eq!(Rational::from_integer(pre as i128), lam * (f as i128));
                }
            }
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(60, 30), 118264581564861424);
    }
}
