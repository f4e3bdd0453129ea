use ccsim_core::analytics::{convex_envelope, r_man};
use ccsim_core::man::{man_placement, man_simulate, run_with_sharing, ManConfig, ManScheme};
use ccsim_core::model::{binomial, measured_rate, rational, subsets_of_size};
use ccsim_core::{DemandVector, FileLibrary, Rational};
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn all_demands(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..n).map(move |f| {
                    let mut w = v.clone();
                    w.push(f);
                    w
                })
            })
            .collect();
    }
    out
}

#[test]
fn exact_rate_law_exhaustive_small() {
    for k in 1..=4usize {
        for n in 1..=4usize {
            for t in 0..=k {
                let cfg = ManConfig::new(n, k, rational((t * n) as i128, k as i128)).unwrap();
                let f = binomial(k, t) as usize * 2;
                let lib = FileLibrary::random(n, f, (k * 100 + n * 10 + t) as u64).unwrap();
                let want = rational((k - t) as i128, (t + 1) as i128);
                for files in all_demands(k, n) {
                    let d = DemandVector::from_files(&files, n).unwrap();
                    let (_, report) = man_simulate(&lib, &cfg, &d).unwrap();
                    assert_eq!(report.rate(), want, "K={k} N={n} t={t} d={files:?}");
                    assert!(report.all_decoded(), "K={k} N={n} t={t} d={files:?}");
                }
            }
        }
    }
}

#[test]
fn n3_k3_all_27_demands_decode() {
    let cfg = ManConfig::new(3, 3, rational(1, 1)).unwrap();
    let lib = FileLibrary::random(3, 3, 5).unwrap();
    let vectors = all_demands(3, 3);
    assert_eq!(vectors.len(), 27);
    for files in vectors {
        let d = DemandVector::from_files(&files, 3).unwrap();
        assert!(man_simulate(&lib, &cfg, &d).unwrap().1.all_decoded());
    }
}

#[test]
fn sharing_rate_on_chord_and_above_envelope() {
    for k in 2..=5usize {
        let n = k + 1;
        let grid: Vec<(f64, f64)> = (0..=k)
            .map(|t| {
                let m = (t * n) as f64 / k as f64;
                (m, (k - t) as f64 / (t + 1) as f64)
            })
            .collect();
        let env = convex_envelope(&grid).unwrap();
        for num in 0..=(2 * n) {
            let m = rational(num as i128, 2);
            let cfg = ManConfig::new(n, k, m).unwrap();
            let scheme = ManScheme::new(cfg.clone(), "man");
            let lib = FileLibrary::random(n, scheme.file_size_multiple(), 1).unwrap();
            let d =
                DemandVector::from_files(&(0..k).map(|u| u % n).collect::<Vec<_>>(), n).unwrap();
            let (caches, log) = run_with_sharing(&lib, &cfg, &d).unwrap();
            let rate = measured_rate(&log, lib.file_size());
            assert_eq!(rate, r_man(n, k, m).unwrap());
            let mf = m.to_f64().unwrap();
            assert!(rate.to_f64().unwrap() >= env.eval(mf) - 1e-12);
            for c in &caches {
                assert_eq!(c.used_bytes(), c.budget_bytes());
            }
        }
    }
}

#[test]
fn subset_counts() {
    for k in 0..=10usize {
        let mut total = 0;
        for t in 0..=k {
            let s = subsets_of_size(k, t).unwrap();
            assert_eq!(s.len() as u128, binomial(k, t));
            total += s.len();
        }
        assert_eq!(total, 1 << k);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn placement_ignores_demands(k in 1usize..6, n in 1usize..6, t_frac in 0usize..6, seed: u64,
                                 a in proptest::collection::vec(0usize..6, 6),
                                 b in proptest::collection::vec(0usize..6, 6)) {
        let t = t_frac % (k + 1);
        let cfg = ManConfig::new(n, k, Rational::new((t * n) as i128, k as i128)).unwrap();
        let lib = FileLibrary::random(n, binomial(k, t) as usize, seed).unwrap();
        let da = DemandVector::from_files(&a[..k].iter().map(|f| f % n).collect::<Vec<_>>(), n).unwrap();
        let db = DemandVector::from_files(&b[..k].iter().map(|f| f % n).collect::<Vec<_>>(), n).unwrap();
        let (ca, ra) = man_simulate(&lib, &cfg, &da).unwrap();
        let (cb, rb) = man_simulate(&lib, &cfg, &db).unwrap();
        prop_assert_eq!(&ca, &cb);
        prop_assert_eq!(ca, man_placement(&lib, &cfg).unwrap());
        prop_assert!(ra.all_decoded() && rb.all_decoded());
    }

    #[test]
    fn budget_never_exceeded(k in 1usize..6, n in 1usize..6, num in 0i128..24, seed: u64) {
        let m = Rational::new(num % (4 * n as i128 + 1), 4);
        let cfg = ManConfig::new(n, k, m).unwrap();
        let scheme = ManScheme::new(cfg.clone(), "man");
        let lib = FileLibrary::random(n, scheme.file_size_multiple(), seed).unwrap();
        let d = DemandVector::from_files(&vec![0; k], n).unwrap();
        let (caches, report) = man_simulate(&lib, &cfg, &d).unwrap();
        prop_assert!(caches.iter().all(|c| c.used_bytes() <= c.budget_bytes()));
        prop_assert!(report.all_decoded());
    }
}
