use ccsim_core::analytics::r_ma_bound;
use ccsim_core::multiaccess::{ma_simulate, CyclicAccess, MaPlan};
use ccsim_core::{rational, DemandVector, FileLibrary, Rational};
use num_traits::{ToPrimitive, Zero};

fn all_demands(k: usize, n: usize) -> Vec<Vec<usize>> {
    (0..n.pow(k as u32))
        .map(|mut x| {
            (0..k)
                .map(|_| {
                    let f = x % n;
                    x /= n;
                    f
                })
                .collect()
        })
        .collect()
}

fn grid(n: usize, d: usize) -> Vec<Rational> {
    // steps of 1/(2d) up to N/d
    (0..=2 * n)
        .map(|i| Rational::new(i as i128, 2 * d as i128))
        .collect()
}

#[test]
fn exhaustive_decode_small() {
    for k in 2..=5usize {
        for d in 1..=3usize.min(k) {
            let n = k;
            for m in grid(n, d).into_iter().step_by(2) {
                let plan = MaPlan::new(CyclicAccess::new(k, d).unwrap(), n, m).unwrap();
                let lib = FileLibrary::random(n, plan.file_size_multiple(), 5).unwrap();
                let vectors = all_demands(k, n);
                let step = (vectors.len() / 40).max(1);
                for files in vectors.iter().step_by(step) {
                    let dv = DemandVector::from_files(files, n).unwrap();
                    let (_, r) = ma_simulate(&lib, &plan, &dv).unwrap();
                    assert!(r.all_decoded(), "K={k} d={d} M={m} {files:?}");
                }
            }
        }
    }
}

#[test]
fn rate_zero_monotone_and_bounded() {
    for k in [4usize, 5, 6] {
        for d in 1..=3usize {
            let n = k;
            let mut last: Option<Rational> = None;
            for m in grid(n, d) {
                let plan = MaPlan::new(CyclicAccess::new(k, d).unwrap(), n, m).unwrap();
                let lib = FileLibrary::random(n, plan.file_size_multiple(), 2).unwrap();
                let dv = DemandVector::from_files(&(0..k).collect::<Vec<_>>(), n).unwrap();
                let (caches, r) = ma_simulate(&lib, &plan, &dv).unwrap();
                assert!(r.all_decoded());
                assert!(caches.iter().all(|c| c.used_bytes() <= c.budget_bytes()));
                let rate = r.rate();
                let mf = m.to_f64().unwrap();
                if (d as f64) * mf >= n as f64 {
                    assert!(rate.is_zero());
                } else {
                    assert!(
                        rate.to_f64().unwrap() <= r_ma_bound(n, k, d, mf) + 1e-12,
                        "K={k} d={d} M={m}"
                    );
                }
                if let Some(prev) = last {
                    assert!(rate <= prev, "K={k} d={d} M={m}: {rate} > {prev}");
                }
                last = Some(rate);
            }
        }
    }
    assert!(rational(0, 1).is_zero());
}
