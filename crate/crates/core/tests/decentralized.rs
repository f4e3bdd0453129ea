use ccsim_core::analytics::{r_dec, r_man, to_f64};
use ccsim_core::decentralized::{dec_placement, dec_simulate};
use ccsim_core::model::rational;
use ccsim_core::{DemandVector, FileLibrary};
use num_traits::ToPrimitive;

#[test]
fn decodes_for_every_seed_and_demand() {
    let lib = FileLibrary::random(4, 4096, 17).unwrap();
    let mut vectors = vec![
        vec![0, 0, 0, 0],
        vec![0, 1, 2, 3],
        vec![3, 3, 1, 0],
        vec![2, 1],
    ];
    vectors.push(vec![1]);
    for seed in 0..50u64 {
        let files = &vectors[seed as usize % vectors.len()];
        let k = 4.min(files.len().max(1));
        let d = DemandVector::from_files(files, 4).unwrap();
        let (caches, _, report) = dec_simulate(
            &lib,
            k.max(files.len()),
            rational(1 + seed as i128 % 3, 1),
            &d,
            seed,
        )
        .unwrap();
        assert!(report.all_decoded(), "seed {seed}: {:?}", report.failures);
        assert!(caches.iter().all(|c| c.used_bytes() <= c.budget_bytes()));
    }
}

#[test]
fn placement_ignores_demands() {
    let lib = FileLibrary::random(3, 256, 2).unwrap();
    let a = dec_simulate(
        &lib,
        3,
        rational(1, 1),
        &DemandVector::from_files(&[0, 1, 2], 3).unwrap(),
        9,
    )
    .unwrap();
    let b = dec_simulate(
        &lib,
        3,
        rational(1, 1),
        &DemandVector::from_files(&[2, 2, 2], 3).unwrap(),
        9,
    )
    .unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, dec_placement(&lib, 3, rational(1, 1), 9).unwrap().1);
}

#[test]
fn error_shrinks_with_file_size() {
    let want = to_f64(&r_dec(4, 4, rational(1, 1)).unwrap());
    let d = DemandVector::from_files(&[0, 1, 2, 3], 4).unwrap();
    let err = |f: usize| {
        let lib = FileLibrary::random(4, f, 1).unwrap();
        let mut total = 0.0;
        for seed in 0..4 {
            let (_, _, r) = dec_simulate(&lib, 4, rational(1, 1), &d, seed).unwrap();
            total += r.rate().to_f64().unwrap();
        }
        (total / 4.0 - want).abs() / want
    };
    let (e3, e5) = (err(1_000), err(100_000));
    assert!(e5 < 0.02, "{e5}");
    assert!(e5 <= e3 + 1e-3, "{e3} {e5}");
}

#[test]
fn decentralized_never_beats_centralized_formula() {
    // the centralized formula is the distinct-demand rate, so N >= K
    for k in 1..=10usize {
        for n in k..=10usize {
            for t in 0..=k {
                let m = rational((t * n) as i128, k as i128);
                let dec = to_f64(&r_dec(n, k, m).unwrap());
                let man = r_man(n, k, m).unwrap().to_f64().unwrap();
                assert!(dec >= man - 1e-12, "K={k} N={n} t={t}");
            }
        }
    }
}
