//! Systematic `(K, d)` erasure code over GF(2^8): a file is cut into `d`
//! shards; share `i` is row `i` of `V * V_top^{-1}` applied to the shards,
//! where `V[i][j] = i^j` is a `K x d` Vandermonde matrix. The first `d`
//! shares are the plain shards and any `d` shares determine the file.

use super::gf256;
use crate::error::{invalid, Error, Result};

/// `K` shares of `F/d` bytes each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MdsShareSet {
    pub d: usize,
    pub shares: Vec<Vec<u8>>,
}

/// `K x d` generator whose top `d x d` block is the identity.
pub fn generator(k: usize, d: usize) -> Result<Vec<Vec<u8>>> {
    if d == 0 || d > k || k > 256 {
        return invalid(format!("need 1 <= d <= K <= 256, got K = {k}, d = {d}"));
    }
    let vander: Vec<Vec<u8>> = (0..k)
        .map(|i| (0..d).map(|j| gf256::pow(i as u8, j)).collect())
        .collect();
    let top_inv =
        gf256::invert(&vander[..d]).expect("Vandermonde on distinct points is invertible");
    Ok(vander
        .iter()
        .map(|row| {
            (0..d)
                .map(|j| (0..d).fold(0u8, |acc, l| acc ^ gf256::mul(row[l], top_inv[l][j])))
                .collect()
        })
        .collect())
}

pub fn mds_encode(file: &[u8], k: usize, d: usize) -> Result<MdsShareSet> {
    let g = generator(k, d)?;
    if !file.len().is_multiple_of(d) {
        return invalid(format!("file size {} not divisible by d = {d}", file.len()));
    }
    let len = file.len() / d;
    let shards: Vec<&[u8]> = file.chunks(len.max(1)).take(d).collect();
    let shares = g
        .iter()
        .map(|row| {
            let mut out = vec![0u8; len];
            if len > 0 {
                for (c, shard) in row.iter().zip(&shards) {
                    gf256::mul_acc(&mut out, shard, *c);
                }
            }
            out
        })
        .collect();
    Ok(MdsShareSet { d, shares })
}

/// Rebuilds the file from at least `d` shares given as `(share index, bytes)`.
pub fn mds_decode(shares: &[(usize, &[u8])], k: usize, d: usize) -> Result<Vec<u8>> {
    let g = generator(k, d)?;
    let mut ids: Vec<usize> = shares.iter().map(|s| s.0).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return invalid("duplicate share index");
    }
    if ids.iter().any(|&i| i >= k) {
        return invalid("share index out of range");
    }
    if shares.len() < d {
        return Err(Error::InsufficientShares {
            have: shares.len(),
            need: d,
        });
    }
    let used = &shares[..d];
    let len = used[0].1.len();
    if used.iter().any(|s| s.1.len() != len) {
        return invalid("shares differ in length");
    }
    let sub: Vec<Vec<u8>> = used.iter().map(|s| g[s.0].clone()).collect();
    let inv = gf256::invert(&sub).expect("any d rows of the generator are independent");
    let mut out = vec![0u8; len * d];
    for (j, shard) in out.chunks_mut(len.max(1)).take(d).enumerate() {
        for (l, s) in used.iter().enumerate() {
            gf256::mul_acc(shard, s.1, inv[j][l]);
        }
    }
    out.truncate(len * d);
    Ok(out)
}
