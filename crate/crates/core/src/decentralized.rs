//! Random placement (each cache samples a fixed number of bits of every file
//! independently) and the subset-XOR delivery that goes with it.
//!
//! Files are `F` bytes, i.e. `8F` bits. Bit `i` of a file is bit `7 - i % 8`
//! of byte `i / 8`. Cache masks are `u64`, so `K <= 64`.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::model::{
    budget_bytes, derive_seed, fmt_set, CacheContent, DemandVector, EntryKey, FileLibrary, Piece,
    Rational, RunReport, TransmissionLog,
};

const SCOPE: &str = "dec";

/// Which caches hold each bit of each file. Public side information: the
/// server and every user know it after placement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitOwnershipIndex {
    n_caches: usize,
    bits_per_cache_file: usize,
    // [cache][file] -> sorted bit positions
    stored: Vec<Vec<Vec<u32>>>,
    // [file][bit] -> cache mask
    masks: Vec<Vec<u64>>,
}

impl BitOwnershipIndex {
    pub fn n_caches(&self) -> usize {
        self.n_caches
    }

    /// Bits of every file held by every cache.
    pub fn bits_per_cache_file(&self) -> usize {
        self.bits_per_cache_file
    }

    pub fn mask(&self, file: usize, bit: usize) -> u64 {
        self.masks[file][bit]
    }

    pub fn stored_bits(&self, cache: usize, file: usize) -> &[u32] {
        &self.stored[cache][file]
    }

    /// Offset of `(file, bit)` in the packed bit stream of `cache`.
    fn position(&self, cache: usize, file: usize, bit: usize) -> Option<usize> {
        let list = &self.stored[cache][file];
        list.binary_search(&(bit as u32))
            .ok()
            .map(|r| file * self.bits_per_cache_file + r)
    }
}

fn get_bit(bytes: &[u8], i: usize) -> bool {
    (bytes[i / 8] >> (7 - i % 8)) & 1 == 1
}

fn set_bit(bytes: &mut [u8], i: usize) {
    bytes[i / 8] |= 1 << (7 - i % 8);
}

fn pack(bits: impl Iterator<Item = bool>, len: usize) -> Vec<u8> {
    let mut out = vec![0u8; len.div_ceil(8)];
    for (i, b) in bits.enumerate() {
        if b {
            set_bit(&mut out, i);
        }
    }
    out
}

fn cache_key() -> EntryKey {
    EntryKey::new(SCOPE, Piece::Bits)
}

/// Every cache stores `⌊8⌊MF⌋/N⌋` uniformly chosen bits of each file,
/// independently across caches and files. Deterministic in `seed`.
pub fn dec_placement(
    library: &FileLibrary,
    n_caches: usize,
    memory: Rational,
    seed: u64,
) -> Result<(Vec<CacheContent>, BitOwnershipIndex)> {
    let n = library.n_files();
    if n_caches == 0 || n_caches > 64 {
        return invalid(format!("K = {n_caches} outside 1..=64"));
    }
    if memory < Rational::from_integer(0) || memory > Rational::from_integer(n as i128) {
        return invalid(format!("memory {memory} outside [0, {n}]"));
    }
    let file_bits = 8 * library.file_size();
    if file_bits > u32::MAX as usize {
        return invalid("file too large for bit indexing");
    }
    let budget = budget_bytes(memory, library.file_size());
    let per_file = (8 * budget / n).min(file_bits);

    let mut stored = Vec::with_capacity(n_caches);
    let mut masks = vec![vec![0u64; file_bits]; n];
    let mut caches = Vec::with_capacity(n_caches);
    for k in 0..n_caches {
        let mut row = Vec::with_capacity(n);
        let mut stream = vec![0u8; (n * per_file).div_ceil(8)];
        for (j, file) in library.files().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, (k * n + j) as u64));
            let mut picked: Vec<u32> = rand::seq::index::sample(&mut rng, file_bits, per_file)
                .into_iter()
                .map(|b| b as u32)
                .collect();
            picked.sort_unstable();
            for (r, &b) in picked.iter().enumerate() {
                masks[j][b as usize] |= 1 << k;
                if get_bit(file, b as usize) {
                    set_bit(&mut stream, j * per_file + r);
                }
            }
            row.push(picked);
        }
        let mut cache = CacheContent::new(k, budget);
        if !stream.is_empty() {
            cache.insert(cache_key(), stream)?;
        }
        caches.push(cache);
        stored.push(row);
    }
    let index = BitOwnershipIndex {
        n_caches,
        bits_per_cache_file: per_file,
        stored,
        masks,
    };
    Ok((caches, index))
}

/// Order of delivery rounds: larger subsets first, then lexicographic.
type SubsetKey = (Reverse<u32>, Vec<usize>);

/// `(S, k) -> bits of d_k held by exactly S \ {k} among the demanders.`
type Groups = BTreeMap<SubsetKey, Vec<(usize, Vec<u32>)>>;

fn members(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

fn demand_table(
    index: &BitOwnershipIndex,
    demands: &DemandVector,
) -> Result<(Vec<Option<usize>>, u64)> {
    let mut table = vec![None; index.n_caches];
    let mut dmask = 0u64;
    for &(u, f) in demands.as_slice() {
        if u >= index.n_caches {
            return invalid(format!("user {u} has no cache"));
        }
        if f >= index.masks.len() {
            return invalid(format!("file {f} out of range"));
        }
        table[u] = Some(f);
        dmask |= 1 << u;
    }
    Ok((table, dmask))
}

fn groups(index: &BitOwnershipIndex, table: &[Option<usize>], dmask: u64) -> Groups {
    let mut by_mask: BTreeMap<u64, Vec<(usize, Vec<u32>)>> = BTreeMap::new();
    for (k, f) in table.iter().enumerate() {
        let Some(f) = *f else { continue };
        let mut per_subset: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
        for (bit, &m) in index.masks[f].iter().enumerate() {
            if m >> k & 1 == 1 {
                continue;
            }
            per_subset
                .entry((m & dmask) | 1 << k)
                .or_default()
                .push(bit as u32);
        }
        for (s, bits) in per_subset {
            by_mask.entry(s).or_default().push((k, bits));
        }
    }
    by_mask
        .into_iter()
        .map(|(s, g)| ((Reverse(s.count_ones()), members(s)), g))
        .collect()
}

fn label(subset: &[usize]) -> String {
    format!("{SCOPE}/xor{}", fmt_set(subset))
}

/// For each subset `S` of demanding users, largest first, sends the
/// zero-padded XOR over `k in S` of the bits of `W_{d_k}` held by exactly
/// the demanders in `S \ {k}`.
pub fn dec_delivery(
    library: &FileLibrary,
    index: &BitOwnershipIndex,
    demands: &DemandVector,
) -> Result<TransmissionLog> {
    let (table, dmask) = demand_table(index, demands)?;
    let mut log = TransmissionLog::new();
    for ((_, subset), group) in groups(index, &table, dmask) {
        let len = group.iter().map(|(_, b)| b.len()).max().unwrap_or(0);
        let mut payload = vec![0u8; len.div_ceil(8)];
        for (k, bits) in &group {
            let file = library.file(table[*k].expect("grouped users demand"));
            let packed = pack(bits.iter().map(|&b| get_bit(file, b as usize)), bits.len());
            payload.iter_mut().zip(&packed).for_each(|(a, b)| *a ^= b);
        }
        if !payload.is_empty() {
            log.push(label(&subset), payload)?;
        }
    }
    Ok(log)
}

/// Rebuilds `demand` for `user` from its cache, the public index and the log.
pub fn dec_decode(
    user: usize,
    demand: usize,
    cache: &CacheContent,
    index: &BitOwnershipIndex,
    demands: &DemandVector,
    log: &TransmissionLog,
    file_size: usize,
) -> Result<Vec<u8>> {
    let (table, dmask) = demand_table(index, demands)?;
    if table.get(user).copied().flatten() != Some(demand) {
        return invalid(format!("user {user} does not demand file {demand}"));
    }
    let failure = |what: String| Error::DecodeFailure {
        user,
        missing: what,
    };
    let stream = cache.get(&cache_key()).unwrap_or(&[]);
    let read = |file: usize, bit: usize| -> Result<bool> {
        let pos = index
            .position(user, file, bit)
            .ok_or_else(|| failure(format!("bit {bit} of file {file}")))?;
        if pos / 8 >= stream.len() {
            return Err(failure("cache stream truncated".into()));
        }
        Ok(get_bit(stream, pos))
    };

    let mut out = vec![0u8; file_size];
    for &b in index.stored_bits(user, demand) {
        if read(demand, b as usize)? {
            set_bit(&mut out, b as usize);
        }
    }
    for ((_, subset), group) in groups(index, &table, dmask) {
        if subset.binary_search(&user).is_err() {
            continue;
        }
        let Some((_, mine)) = group.iter().find(|(k, _)| *k == user) else {
            continue;
        };
        let tag = label(&subset);
        let payload = log.get(&tag).ok_or_else(|| failure(tag.clone()))?;
        for (i, &b) in mine.iter().enumerate() {
            if i / 8 >= payload.len() {
                return Err(failure(format!("{tag} too short")));
            }
            let mut v = get_bit(payload, i);
            for (k, bits) in &group {
                if *k == user || i >= bits.len() {
                    continue;
                }
                let f = table[*k].expect("grouped users demand");
                v ^= read(f, bits[i] as usize)?;
            }
            if v {
                set_bit(&mut out, b as usize);
            }
        }
    }
    Ok(out)
}

/// Placement, delivery and decode of every demanding user.
pub fn dec_simulate(
    library: &FileLibrary,
    n_caches: usize,
    memory: Rational,
    demands: &DemandVector,
    seed: u64,
) -> Result<(Vec<CacheContent>, BitOwnershipIndex, RunReport)> {
    let (caches, index) = dec_placement(library, n_caches, memory, seed)?;
    let log = dec_delivery(library, &index, demands)?;
    let mut report = RunReport {
        log,
        file_size: library.file_size(),
        n_users: 0,
        failures: Vec::new(),
    };
    for &(u, f) in demands.as_slice() {
        let got = dec_decode(
            u,
            f,
            &caches[u],
            &index,
            demands,
            &report.log,
            library.file_size(),
        );
        report.check(u, f, library.file(f), got);
    }
    Ok((caches, index, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational;

    #[test]
    fn zero_memory_is_empty() {
        let lib = FileLibrary::random(2, 16, 1).unwrap();
        let (caches, idx) = dec_placement(&lib, 3, rational(0, 1), 5).unwrap();
        assert!(caches.iter().all(CacheContent::is_empty));
        assert_eq!(idx.bits_per_cache_file(), 0);
    }

    #[test]
    fn full_memory_stores_everything_and_sends_nothing() {
        let lib = FileLibrary::random(3, 16, 1).unwrap();
        let d = DemandVector::from_files(&[0, 1], 3).unwrap();
        let (caches, idx, report) = dec_simulate(&lib, 2, rational(3, 1), &d, 5).unwrap();
        assert_eq!(idx.bits_per_cache_file(), 128);
        assert!(caches.iter().all(|c| c.used_bytes() == 48));
        assert!(report.log.is_empty());
        assert!(report.all_decoded());
    }

    #[test]
    fn single_user_gets_uncached_bits() {
        let lib = FileLibrary::random(2, 1000, 3).unwrap();
        let d = DemandVector::from_files(&[1], 2).unwrap();
        let (_, _, report) = dec_simulate(&lib, 1, rational(1, 1), &d, 9).unwrap();
        assert!(report.all_decoded());
        // exactly half of the 8000 bits are cached
        assert_eq!(report.log.total_bytes(), 500);
    }

    #[test]
    fn coverage_close_to_half() {
        let lib = FileLibrary::random(2, 10_000, 3).unwrap();
        let (_, idx) = dec_placement(&lib, 3, rational(1, 1), 11).unwrap();
        for k in 0..3 {
            for j in 0..2 {
                let frac = idx.stored_bits(k, j).len() as f64 / 80_000.0;
                assert!((frac - 0.5).abs() < 0.02);
            }
        }
        let covered = (0..80_000).filter(|&b| idx.mask(0, b) & 1 == 1).count();
        assert_eq!(covered, 40_000);
    }

    #[test]
    fn decodes_partial_and_repeated_demands() {
        let lib = FileLibrary::random(3, 64, 2).unwrap();
        for demands in [
            vec![(0, 1), (2, 1)],
            vec![(1, 0)],
            vec![(0, 2), (1, 2), (2, 2), (3, 0)],
        ] {
            let d = DemandVector::new(demands, 3).unwrap();
            for seed in 0..5 {
                let (_, _, r) = dec_simulate(&lib, 4, rational(3, 2), &d, seed).unwrap();
                assert!(r.all_decoded(), "{:?}", r.failures);
            }
        }
    }

    #[test]
    fn placement_is_seed_deterministic() {
        let lib = FileLibrary::random(2, 32, 2).unwrap();
        let a = dec_placement(&lib, 3, rational(1, 1), 42).unwrap();
        let b = dec_placement(&lib, 3, rational(1, 1), 42).unwrap();
        let c = dec_placement(&lib, 3, rational(1, 1), 43).unwrap();
        assert_eq!(a.1, b.1);
        assert_ne!(a.1, c.1);
    }
}
