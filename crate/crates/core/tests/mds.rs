use ccsim_core::model::subsets_of_size;
use ccsim_core::multiaccess::{mds_decode, mds_encode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn every_d_subset_reconstructs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 1..=8usize {
        for d in 1..=k {
            let file: Vec<u8> = (0..d * 37).map(|_| rng.random()).collect();
            let set = mds_encode(&file, k, d).unwrap();
            assert!(set.shares.iter().all(|s| s.len() == 37));
            for ids in subsets_of_size(k, d).unwrap() {
                let shares: Vec<(usize, &[u8])> =
                    ids.iter().map(|&i| (i, &set.shares[i][..])).collect();
                assert_eq!(
                    mds_decode(&shares, k, d).unwrap(),
                    file,
                    "K={k} d={d} {ids:?}"
                );
            }
        }
    }
}

#[test]
fn k6_d3_300_bytes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let file: Vec<u8> = (0..300).map(|_| rng.random()).collect();
    let set = mds_encode(&file, 6, 3).unwrap();
    let triples = subsets_of_size(6, 3).unwrap();
    assert_eq!(triples.len(), 20);
    for ids in triples {
        let shares: Vec<(usize, &[u8])> = ids.iter().map(|&i| (i, &set.shares[i][..])).collect();
        assert_eq!(mds_decode(&shares, 6, 3).unwrap(), file);
    }
}
