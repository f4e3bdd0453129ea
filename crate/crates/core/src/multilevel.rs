//! Files grouped into popularity levels.
//!
//! Single-user mode (one user per cache, `K_i` users of level `i`): levels
//! popular enough are merged into one library served by a centralized
//! scheme, the rest are broadcast uncoded.
//!
//! Multi-user mode (`U_i` users of level `i` at every cache): cache memory is
//! split across levels, level `i` getting roughly `M_I * sqrt(N_i U_i) / S_I`,
//! and every row of users runs its own centralized delivery.

use std::collections::BTreeSet;

use num_traits::{ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::man::{ManConfig, ManScheme};
use crate::model::{
    budget_bytes, lcm, CacheContent, FileLibrary, Rational, RunReport, TransmissionLog,
};

/// One popularity level. `users` is `K_i` (total users) in single-user mode
/// and `U_i` (users per cache) in multi-user mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Level {
    pub n_files: usize,
    pub users: usize,
}

impl Level {
    pub fn new(n_files: usize, users: usize) -> Self {
        Self { n_files, users }
    }
}

pub fn levels_from(n_files: &[usize], users: &[usize]) -> Result<Vec<Level>> {
    if n_files.len() != users.len() || n_files.is_empty() {
        return invalid("level file counts and user counts must be nonempty and equal length");
    }
    if n_files.contains(&0) {
        return invalid("every level needs at least one file");
    }
    Ok(n_files
        .iter()
        .zip(users)
        .map(|(&n, &u)| Level::new(n, u))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelPartitionSu {
    pub h: Vec<usize>,
    pub i: Vec<usize>,
}

/// `h` goes to H iff `K_h / N_h < 1/M`; ties stay in I. With `M = 0` every
/// level is in H.
pub fn su_partition(levels: &[Level], memory: Rational) -> LevelPartitionSu {
    let mut part = LevelPartitionSu {
        h: Vec::new(),
        i: Vec::new(),
    };
    for (idx, l) in levels.iter().enumerate() {
        let lhs = Rational::from_integer(l.users as i128) * memory;
        if memory.is_zero() || lhs < Rational::from_integer(l.n_files as i128) {
            part.h.push(idx);
        } else {
            part.i.push(idx);
        }
    }
    part
}

/// `max{sum_I N_i / M - 1, 0} + sum_H K_h` for any split of the levels.
pub fn su_rate_bound(
    levels: &[Level],
    memory: Rational,
    partition: &LevelPartitionSu,
) -> Result<Rational> {
    check_cover(levels.len(), &[&partition.h, &partition.i])?;
    let unicast: usize = partition.h.iter().map(|&h| levels[h].users).sum();
    let merged: usize = partition.i.iter().map(|&i| levels[i].n_files).sum();
    let coded = if partition.i.is_empty() {
        Rational::zero()
    } else if memory.is_zero() {
        return invalid("coded levels need M > 0");
    } else {
        let v = Rational::from_integer(merged as i128) / memory - Rational::from_integer(1);
        v.max(Rational::zero())
    };
    Ok(coded + Rational::from_integer(unicast as i128))
}

fn check_cover(n_levels: usize, parts: &[&Vec<usize>]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for p in parts {
        for &l in p.iter() {
            if l >= n_levels || !seen.insert(l) {
                return invalid(format!("level {l} missing or repeated in partition"));
            }
        }
    }
    if seen.len() != n_levels {
        return invalid("partition does not cover every level");
    }
    Ok(())
}

/// Layout of a single-user run: which levels are merged and the scheme used
/// on the merged library.
#[derive(Clone, Debug)]
pub struct SuPlan {
    pub partition: LevelPartitionSu,
    merged: Vec<(usize, usize)>,
    scheme: Option<ManScheme>,
    n_caches: usize,
    memory: Rational,
}

impl SuPlan {
    pub fn new(levels: &[Level], memory: Rational, partition: LevelPartitionSu) -> Result<Self> {
        check_cover(levels.len(), &[&partition.h, &partition.i])?;
        let n_caches: usize = levels.iter().map(|l| l.users).sum();
        if n_caches == 0 {
            return invalid("no users");
        }
        let mut merged = Vec::new();
        for &i in &partition.i {
            merged.extend((0..levels[i].n_files).map(|f| (i, f)));
        }
        let scheme = if merged.is_empty() {
            None
        } else {
            let n = merged.len();
            let m = memory.min(Rational::from_integer(n as i128));
            Some(ManScheme::new(ManConfig::new(n, n_caches, m)?, "su"))
        };
        Ok(Self {
            partition,
            merged,
            scheme,
            n_caches,
            memory,
        })
    }

    pub fn file_size_multiple(&self) -> usize {
        self.scheme
            .as_ref()
            .map_or(1, ManScheme::file_size_multiple)
    }

    pub fn n_caches(&self) -> usize {
        self.n_caches
    }
}

/// Runs the single-user scheme. `demands[u] = (level, file within level)` for
/// the user at cache `u`; level `i` must appear exactly `K_i` times.
pub fn su_simulate(
    libraries: &[FileLibrary],
    levels: &[Level],
    plan: &SuPlan,
    demands: &[(usize, usize)],
) -> Result<(Vec<CacheContent>, RunReport)> {
    let file_size = check_libraries(libraries, levels)?;
    if demands.len() != plan.n_caches {
        return invalid(format!(
            "expected {} demands, got {}",
            plan.n_caches,
            demands.len()
        ));
    }
    let mut per_level = vec![0usize; levels.len()];
    for &(l, f) in demands {
        if l >= levels.len() || f >= levels[l].n_files {
            return invalid(format!("demand ({l}, {f}) out of range"));
        }
        per_level[l] += 1;
    }
    if per_level.iter().zip(levels).any(|(&c, l)| c != l.users) {
        return invalid("demand counts per level do not match K_i");
    }

    let mut caches = CacheContent::empty_set(plan.n_caches, plan.memory, file_size);
    let mut log = TransmissionLog::new();
    let coded_demands: Vec<(usize, usize)> = demands
        .iter()
        .enumerate()
        .map(|(u, &(l, f))| {
            let merged = plan.merged.iter().position(|&x| x == (l, f));
            (u, merged.unwrap_or(0))
        })
        .collect();
    let merged_files: Vec<&[u8]> = plan
        .merged
        .iter()
        .map(|&(l, f)| libraries[l].file(f))
        .collect();
    let cache_ids: Vec<usize> = (0..plan.n_caches).collect();
    if let Some(scheme) = &plan.scheme {
        scheme.place(&merged_files, &cache_ids, &mut caches)?;
        scheme.deliver(&merged_files, "su", &coded_demands, &mut log)?;
    }
    let uncoded: BTreeSet<(usize, usize)> = demands
        .iter()
        .copied()
        .filter(|(l, _)| plan.partition.h.contains(l))
        .collect();
    for &(l, f) in &uncoded {
        log.push(unicast_label(l, f), libraries[l].file(f).to_vec())?;
    }

    let mut report = RunReport {
        log,
        file_size,
        n_users: 0,
        failures: Vec::new(),
    };
    for (u, &(l, f)) in demands.iter().enumerate() {
        let got = if plan.partition.h.contains(&l) {
            report
                .log
                .get(&unicast_label(l, f))
                .map(<[u8]>::to_vec)
                .ok_or_else(|| Error::DecodeFailure {
                    user: u,
                    missing: unicast_label(l, f),
                })
        } else {
            let scheme = plan.scheme.as_ref().expect("I nonempty");
            scheme.decode(
                u,
                coded_demands[u].1,
                file_size,
                "su",
                &coded_demands,
                &caches[u],
                &report.log,
            )
        };
        report.check(u, f, libraries[l].file(f), got);
    }
    Ok((caches, report))
}

fn unicast_label(level: usize, file: usize) -> String {
    format!("unicast/L{level}/file{file}")
}

fn check_libraries(libraries: &[FileLibrary], levels: &[Level]) -> Result<usize> {
    if libraries.len() != levels.len() {
        return invalid("one library per level required");
    }
    let size = libraries[0].file_size();
    for (lib, l) in libraries.iter().zip(levels) {
        if lib.n_files() != l.n_files {
            return invalid("library size does not match level");
        }
        if lib.file_size() != size {
            return invalid("all levels must share one file size");
        }
    }
    Ok(size)
}

/// How the partition's effective memory `M~` is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MuVariant {
    /// `(M - T_J) / S_I`, allocation `M~ sqrt(N_i U_i)`.
    #[default]
    Approximate,
    /// `(M - T_J + V_I) / S_I`, allocation `M~ sqrt(N_i U_i) - N_i / K`.
    Exact,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelPartitionMu {
    pub h: Vec<usize>,
    pub i: Vec<usize>,
    pub j: Vec<usize>,
    pub tilde_m: f64,
    /// Memory fraction per level, clamped to `[0, 1]`.
    pub alphas: Vec<f64>,
}

impl LevelPartitionMu {
    /// Memory per cache given to each level, `alpha_i M`.
    pub fn level_memory(&self, memory: f64) -> Vec<f64> {
        self.alphas.iter().map(|a| a * memory).collect()
    }
}

fn sqrt_nu(l: &Level) -> f64 {
    ((l.n_files * l.users) as f64).sqrt()
}

fn sqrt_n_over_u(l: &Level) -> f64 {
    if l.users == 0 {
        f64::INFINITY
    } else {
        (l.n_files as f64 / l.users as f64).sqrt()
    }
}

/// Builds the partition `(H, I, J)` as given, computing `M~` and the
/// allocation without checking the defining inequalities.
pub fn mu_partition_from_sets(
    levels: &[Level],
    n_caches: usize,
    memory: f64,
    h: Vec<usize>,
    i: Vec<usize>,
    j: Vec<usize>,
    variant: MuVariant,
) -> Result<LevelPartitionMu> {
    check_cover(levels.len(), &[&h, &i, &j])?;
    if n_caches == 0 {
        return invalid("K must be positive");
    }
    let t_j: f64 = j.iter().map(|&x| levels[x].n_files as f64).sum();
    if memory + 1e-9 < t_j {
        return invalid(format!(
            "M = {memory} cannot hold the J levels ({t_j} files)"
        ));
    }
    let left = (memory - t_j).max(0.0);
    let k = n_caches as f64;
    let tilde_m = if !i.is_empty() {
        let s_i: f64 = i.iter().map(|&x| sqrt_nu(&levels[x])).sum();
        let v_i: f64 = i.iter().map(|&x| levels[x].n_files as f64 / k).sum();
        match variant {
            MuVariant::Approximate => left / s_i,
            MuVariant::Exact => (left + v_i) / s_i,
        }
    } else if let Some(&first) = h
        .iter()
        .min_by(|&&a, &&b| sqrt_n_over_u(&levels[a]).total_cmp(&sqrt_n_over_u(&levels[b])))
    {
        left / sqrt_nu(&levels[first])
    } else {
        f64::INFINITY
    };
    let mut alphas = vec![0.0; levels.len()];
    if memory > 0.0 {
        for &x in &j {
            alphas[x] = levels[x].n_files as f64 / memory;
        }
        for &x in &i {
            let l = &levels[x];
            let m_i = match variant {
                MuVariant::Approximate => tilde_m * sqrt_nu(l),
                MuVariant::Exact => tilde_m * sqrt_nu(l) - l.n_files as f64 / k,
            };
            alphas[x] = (m_i / memory).clamp(0.0, l.n_files as f64 / memory);
        }
    }
    for a in &mut alphas {
        *a = a.clamp(0.0, 1.0);
    }
    Ok(LevelPartitionMu {
        h,
        i,
        j,
        tilde_m,
        alphas,
    })
}

fn satisfies(levels: &[Level], n_caches: usize, p: &LevelPartitionMu) -> bool {
    let k = n_caches as f64;
    let m = p.tilde_m;
    p.h.iter().all(|&x| m < sqrt_n_over_u(&levels[x]) / k)
        && p.i.iter().all(|&x| {
            let r = sqrt_n_over_u(&levels[x]);
            r / k <= m && m <= (1.0 + 1.0 / k) * r
        })
        && p.j
            .iter()
            .all(|&x| (1.0 + 1.0 / k) * sqrt_n_over_u(&levels[x]) < m)
}

/// Every contiguous split (J prefix, I middle, H suffix) of the levels sorted
/// by `N_i / U_i` that satisfies the defining inequalities.
pub fn mu_partition_candidates(
    levels: &[Level],
    n_caches: usize,
    memory: f64,
    variant: MuVariant,
) -> Result<Vec<LevelPartitionMu>> {
    validate_mu(levels, n_caches, memory)?;
    let total: usize = levels.iter().map(|l| l.n_files).sum();
    let mut order: Vec<usize> = (0..levels.len()).collect();
    // N_a/U_a < N_b/U_b  <=>  N_a U_b < N_b U_a
    order.sort_by_key(|&x| x);
    order.sort_by(|&a, &b| {
        let (la, lb) = (&levels[a], &levels[b]);
        (la.n_files * lb.users).cmp(&(lb.n_files * la.users))
    });
    if memory >= total as f64 {
        let p = mu_partition_from_sets(levels, n_caches, memory, vec![], vec![], order, variant)?;
        return Ok(vec![p]);
    }
    let l = levels.len();
    let mut out = Vec::new();
    let mut t_j = 0.0;
    for j_end in 0..=l {
        if j_end > 0 {
            t_j += levels[order[j_end - 1]].n_files as f64;
        }
        if t_j > memory {
            break;
        }
        for i_end in j_end..=l {
            let j = sorted(&order[..j_end]);
            let i = sorted(&order[j_end..i_end]);
            let h = sorted(&order[i_end..]);
            if !i.is_empty() && memory <= t_j {
                continue;
            }
            let p = mu_partition_from_sets(levels, n_caches, memory, h, i, j, variant)?;
            if satisfies(levels, n_caches, &p) {
                out.push(p);
            }
        }
    }
    Ok(out)
}

fn sorted(xs: &[usize]) -> Vec<usize> {
    let mut v = xs.to_vec();
    v.sort_unstable();
    v
}

fn validate_mu(levels: &[Level], n_caches: usize, memory: f64) -> Result<()> {
    if levels.is_empty() || n_caches == 0 {
        return invalid("need at least one level and one cache");
    }
    let total: usize = levels.iter().map(|l| l.n_files).sum();
    if !(0.0..=total as f64).contains(&memory) {
        return invalid(format!("M = {memory} outside [0, {total}]"));
    }
    for (x, l) in levels.iter().enumerate() {
        if l.users == 0 {
            return invalid(format!("level {x} has no users"));
        }
        if l.n_files < n_caches * l.users {
            return invalid(format!("level {x}: N_i < K U_i"));
        }
    }
    Ok(())
}

/// The unique valid partition, or an error listing what was found instead.
pub fn mu_partition(
    levels: &[Level],
    n_caches: usize,
    memory: f64,
    variant: MuVariant,
) -> Result<LevelPartitionMu> {
    let mut c = mu_partition_candidates(levels, n_caches, memory, variant)?;
    match c.len() {
        0 => Err(Error::NoValidPartition { memory }),
        1 => Ok(c.remove(0)),
        _ => Err(Error::AmbiguousPartition(c)),
    }
}

/// `sum_H K U_h + S_I^2 / (M - T_J) - sum_I U_i`.
pub fn mu_rate_bound(
    levels: &[Level],
    n_caches: usize,
    memory: f64,
    p: &LevelPartitionMu,
) -> Result<f64> {
    check_cover(levels.len(), &[&p.h, &p.i, &p.j])?;
    let k = n_caches as f64;
    let uncoded: f64 = p.h.iter().map(|&x| k * levels[x].users as f64).sum();
    if p.i.is_empty() {
        return Ok(uncoded);
    }
    let t_j: f64 = p.j.iter().map(|&x| levels[x].n_files as f64).sum();
    if memory <= t_j {
        return invalid("M - T_J must be positive when I is nonempty");
    }
    let s_i: f64 = p.i.iter().map(|&x| sqrt_nu(&levels[x])).sum();
    let u_i: f64 = p.i.iter().map(|&x| levels[x].users as f64).sum();
    Ok(uncoded + s_i * s_i / (memory - t_j) - u_i)
}

/// `sum_i U_i min{K, max{N_i / (alpha_i M) - 1, 0}}`.
pub fn mu_rate_per_level(
    levels: &[Level],
    n_caches: usize,
    memory: f64,
    p: &LevelPartitionMu,
) -> f64 {
    let k = n_caches as f64;
    levels
        .iter()
        .zip(&p.alphas)
        .map(|(l, a)| {
            let m = a * memory;
            let per_row = if m <= 0.0 {
                k
            } else {
                (l.n_files as f64 / m - 1.0).max(0.0).min(k)
            };
            l.users as f64 * per_row
        })
        .sum()
}

/// Denominator used to turn the real-valued per-level memory into an exact
/// rational before running the byte-level scheme.
pub const MU_MEMORY_QUANTUM: i128 = 16;

/// Per-level memory rounded down to a multiple of `1/MU_MEMORY_QUANTUM`.
pub fn quantize_memory(m: f64, n_files: usize) -> Rational {
    let q = (m * MU_MEMORY_QUANTUM as f64 + 1e-9).floor().max(0.0) as i128;
    Rational::new(q, MU_MEMORY_QUANTUM).min(Rational::from_integer(n_files as i128))
}

#[derive(Clone, Debug)]
pub struct MuPlan {
    pub partition: LevelPartitionMu,
    n_caches: usize,
    memory: Rational,
    schemes: Vec<Option<ManScheme>>,
}

impl MuPlan {
    pub fn new(
        levels: &[Level],
        n_caches: usize,
        memory: Rational,
        partition: LevelPartitionMu,
    ) -> Result<Self> {
        let m = memory.to_f64().unwrap_or(0.0);
        let mut schemes = Vec::with_capacity(levels.len());
        for (x, l) in levels.iter().enumerate() {
            let scheme = if partition.h.contains(&x) {
                None
            } else if partition.j.contains(&x) {
                let cfg = ManConfig::new(
                    l.n_files,
                    n_caches,
                    Rational::from_integer(l.n_files as i128),
                )?;
                Some(ManScheme::new(cfg, format!("L{x}")))
            } else {
                let mi = quantize_memory(partition.alphas[x] * m, l.n_files);
                Some(ManScheme::new(
                    ManConfig::new(l.n_files, n_caches, mi)?,
                    format!("L{x}"),
                ))
            };
            schemes.push(scheme);
        }
        Ok(Self {
            partition,
            n_caches,
            memory,
            schemes,
        })
    }

    pub fn file_size_multiple(&self) -> usize {
        self.schemes
            .iter()
            .flatten()
            .fold(1, |acc, s| lcm(acc, s.file_size_multiple()))
    }

    /// Exact memory per cache used by each level.
    pub fn level_memory(&self) -> Vec<Rational> {
        self.schemes
            .iter()
            .map(|s| s.as_ref().map_or(Rational::zero(), |s| s.config().memory))
            .collect()
    }
}

/// Demand of row `r` of level `i` at cache `k` in the default worst case:
/// file `(r K + k) mod N_i`, all distinct when `N_i >= K U_i`.
pub fn mu_worst_case_demands(levels: &[Level], n_caches: usize) -> Vec<Vec<Vec<usize>>> {
    levels
        .iter()
        .map(|l| {
            (0..l.users)
                .map(|r| {
                    (0..n_caches)
                        .map(|k| (r * n_caches + k) % l.n_files)
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Runs the multi-user scheme. `demands[i][r][k]` is the file of level `i`
/// wanted by the user in row `r` at cache `k`.
pub fn mu_simulate(
    libraries: &[FileLibrary],
    levels: &[Level],
    plan: &MuPlan,
    demands: &[Vec<Vec<usize>>],
) -> Result<(Vec<CacheContent>, RunReport)> {
    let file_size = check_libraries(libraries, levels)?;
    let k = plan.n_caches;
    if demands.len() != levels.len() {
        return invalid("demands must list every level");
    }
    for (x, (rows, l)) in demands.iter().zip(levels).enumerate() {
        if rows.len() != l.users || rows.iter().any(|r| r.len() != k) {
            return invalid(format!(
                "level {x}: expected {} rows of {k} demands",
                l.users
            ));
        }
        if rows.iter().flatten().any(|&f| f >= l.n_files) {
            return invalid(format!("level {x}: demanded file out of range"));
        }
    }
    let budget = budget_bytes(plan.memory, file_size);
    let mut caches: Vec<CacheContent> = (0..k).map(|c| CacheContent::new(c, budget)).collect();
    let cache_ids: Vec<usize> = (0..k).collect();
    let mut log = TransmissionLog::new();
    let row_demands = |x: usize, r: usize| -> Vec<(usize, usize)> {
        demands[x][r].iter().copied().enumerate().collect()
    };
    for (x, scheme) in plan.schemes.iter().enumerate() {
        let files = libraries[x].file_refs();
        match scheme {
            Some(s) => {
                s.place(&files, &cache_ids, &mut caches)?;
                for r in 0..levels[x].users {
                    s.deliver(&files, &format!("L{x}/r{r}"), &row_demands(x, r), &mut log)?;
                }
            }
            None => {
                let distinct: BTreeSet<usize> = demands[x].iter().flatten().copied().collect();
                for f in distinct {
                    log.push(unicast_label(x, f), files[f].to_vec())?;
                }
            }
        }
    }

    let mut report = RunReport {
        log,
        file_size,
        n_users: 0,
        failures: Vec::new(),
    };
    for (x, scheme) in plan.schemes.iter().enumerate() {
        for r in 0..levels[x].users {
            let rd = row_demands(x, r);
            for &(c, f) in &rd {
                let got = match scheme {
                    Some(s) => s.decode(
                        c,
                        f,
                        file_size,
                        &format!("L{x}/r{r}"),
                        &rd,
                        &caches[c],
                        &report.log,
                    ),
                    None => report
                        .log
                        .get(&unicast_label(x, f))
                        .map(<[u8]>::to_vec)
                        .ok_or_else(|| Error::DecodeFailure {
                            user: c,
                            missing: unicast_label(x, f),
                        }),
                };
                report.check(c, f, libraries[x].file(f), got);
            }
        }
    }
    Ok((caches, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational;

    fn su_example() -> Vec<Level> {
        levels_from(&[100, 500, 1000], &[100, 50, 5]).unwrap()
    }

    fn mu_example() -> Vec<Level> {
        levels_from(&[100, 200, 300], &[10, 5, 1]).unwrap()
    }

    #[test]
    fn su_example_threshold_and_bounds() {
        let lv = su_example();
        let m = rational(100, 1);
        let p = su_partition(&lv, m);
        assert_eq!(
            p,
            LevelPartitionSu {
                h: vec![2],
                i: vec![0, 1]
            }
        );
        let bound = |i: Vec<usize>, h: Vec<usize>| {
            su_rate_bound(&lv, m, &LevelPartitionSu { h, i }).unwrap()
        };
        assert_eq!(bound(vec![0], vec![1, 2]), rational(55, 1));
        assert_eq!(bound(vec![0, 1, 2], vec![]), rational(15, 1));
        assert_eq!(bound(vec![0, 1], vec![2]), rational(10, 1));
    }

    #[test]
    fn su_ties_go_to_i_and_zero_memory_to_h() {
        let lv = levels_from(&[10, 10], &[1, 2]).unwrap();
        // K_1/N_1 = 1/10 = 1/M
        assert_eq!(su_partition(&lv, rational(10, 1)).i, vec![0, 1]);
        assert_eq!(su_partition(&lv, rational(0, 1)).h, vec![0, 1]);
    }

    #[test]
    fn su_scaled_example_runs() {
        let lv = levels_from(&[10, 50, 100], &[10, 5, 1]).unwrap();
        let m = rational(10, 1);
        let plan = SuPlan::new(&lv, m, su_partition(&lv, m)).unwrap();
        assert_eq!(plan.partition.h, vec![2]);
        let f = plan.file_size_multiple();
        let libs: Vec<FileLibrary> = lv
            .iter()
            .enumerate()
            .map(|(x, l)| FileLibrary::random(l.n_files, f, x as u64).unwrap())
            .collect();
        let mut demands = Vec::new();
        for (x, l) in lv.iter().enumerate() {
            demands.extend((0..l.users).map(|u| (x, u)));
        }
        let (caches, report) = su_simulate(&libs, &lv, &plan, &demands).unwrap();
        assert!(report.all_decoded(), "{:?}", report.failures);
        let bound = su_rate_bound(&lv, m, &plan.partition).unwrap();
        assert!(report.rate() <= bound + rational(1, 1));
        assert!(caches.iter().all(|c| c.used_bytes() <= c.budget_bytes()));
    }

    #[test]
    fn mu_example_bounds() {
        let lv = mu_example();
        let p1 = mu_partition_from_sets(
            &lv,
            10,
            100.0,
            vec![1, 2],
            vec![],
            vec![0],
            MuVariant::Approximate,
        )
        .unwrap();
        assert_eq!(mu_rate_bound(&lv, 10, 100.0, &p1).unwrap(), 60.0);
        let p2 = mu_partition_from_sets(
            &lv,
            10,
            100.0,
            vec![],
            vec![0, 1, 2],
            vec![],
            MuVariant::Approximate,
        )
        .unwrap();
        assert!((mu_rate_bound(&lv, 10, 100.0, &p2).unwrap() - 48.909).abs() < 1e-3);
        let p3 = mu_partition_from_sets(
            &lv,
            10,
            100.0,
            vec![2],
            vec![0, 1],
            vec![],
            MuVariant::Approximate,
        )
        .unwrap();
        assert!((mu_rate_bound(&lv, 10, 100.0, &p3).unwrap() - 35.0).abs() < 1e-9);
        assert!((p3.alphas[0] - 0.5).abs() < 1e-12 && (p3.alphas[1] - 0.5).abs() < 1e-12);
        assert!((mu_rate_per_level(&lv, 10, 100.0, &p3) - 35.0).abs() < 1e-9);
    }

    #[test]
    fn mu_example_partition_is_unique() {
        let p = mu_partition(&mu_example(), 10, 100.0, MuVariant::Approximate).unwrap();
        assert_eq!(
            (p.h.clone(), p.i.clone(), p.j.clone()),
            (vec![2], vec![0, 1], vec![])
        );
        assert!((p.tilde_m - 100.0 / (2.0 * 1000f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn mu_full_memory_is_all_j() {
        let lv = mu_example();
        let p = mu_partition(&lv, 10, 600.0, MuVariant::Approximate).unwrap();
        assert_eq!(p.j, vec![0, 1, 2]);
        assert_eq!(mu_rate_bound(&lv, 10, 600.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn mu_single_level_reduces_to_man() {
        let lv = levels_from(&[8], &[2]).unwrap();
        let p =
            mu_partition_from_sets(&lv, 4, 4.0, vec![], vec![0], vec![], MuVariant::Approximate)
                .unwrap();
        let plan = MuPlan::new(&lv, 4, rational(4, 1), p).unwrap();
        assert_eq!(plan.level_memory(), vec![rational(4, 1)]);
        let f = plan.file_size_multiple();
        let libs = vec![FileLibrary::random(8, f, 3).unwrap()];
        let demands = mu_worst_case_demands(&lv, 4);
        let (_, report) = mu_simulate(&libs, &lv, &plan, &demands).unwrap();
        assert!(report.all_decoded());
        // two rows, each at t = 2: (4-2)/3
        assert_eq!(report.rate(), rational(4, 3));
    }

    #[test]
    fn mu_desk_scale_within_slack() {
        let lv = levels_from(&[8, 16], &[2, 1]).unwrap();
        let m = 8.0;
        let p = mu_partition(&lv, 4, m, MuVariant::Approximate).unwrap();
        assert_eq!(p.i, vec![0, 1]);
        let bound = mu_rate_bound(&lv, 4, m, &p).unwrap();
        let plan = MuPlan::new(&lv, 4, rational(8, 1), p).unwrap();
        let f = plan.file_size_multiple();
        let libs: Vec<FileLibrary> = lv
            .iter()
            .map(|l| FileLibrary::random(l.n_files, f, 1).unwrap())
            .collect();
        let (caches, report) =
            mu_simulate(&libs, &lv, &plan, &mu_worst_case_demands(&lv, 4)).unwrap();
        assert!(report.all_decoded());
        assert!(report.rate().to_f64().unwrap() <= bound + 2.0);
        assert!(caches.iter().all(|c| c.used_bytes() <= c.budget_bytes()));
    }

    #[test]
    fn all_j_sends_nothing() {
        let lv = levels_from(&[4, 4], &[1, 1]).unwrap();
        let p = mu_partition(&lv, 2, 8.0, MuVariant::Approximate).unwrap();
        let plan = MuPlan::new(&lv, 2, rational(8, 1), p).unwrap();
        let libs: Vec<FileLibrary> = (0..2)
            .map(|s| FileLibrary::random(4, 2, s).unwrap())
            .collect();
        let (_, report) = mu_simulate(&libs, &lv, &plan, &mu_worst_case_demands(&lv, 2)).unwrap();
        assert!(report.log.is_empty() && report.all_decoded());
    }
}
