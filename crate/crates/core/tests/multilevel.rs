use ccsim_core::model::rational;
use ccsim_core::multilevel::{
    levels_from, mu_partition_candidates, su_partition, Level, MuVariant,
};
use ccsim_core::Rational;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn su_partition_is_label_equivariant(
        levels in proptest::collection::vec((1usize..50, 1usize..20), 1..5),
        m_num in 0i128..200,
        rot in 0usize..5,
    ) {
        let lv: Vec<Level> = levels.iter().map(|&(n, k)| Level::new(n, k)).collect();
        let m = Rational::new(m_num, 4);
        let p = su_partition(&lv, m);
        let r = rot % lv.len();
        let mut rotated = lv.clone();
        rotated.rotate_left(r);
        let q = su_partition(&rotated, m);
        let back = |xs: &[usize]| {
            let mut v: Vec<usize> = xs.iter().map(|&x| (x + r) % lv.len()).collect();
            v.sort_unstable();
            v
        };
        prop_assert_eq!(back(&q.h), p.h);
        prop_assert_eq!(back(&q.i), p.i);
    }

    #[test]
    fn mu_partitions_ordered_and_allocations_valid(
        levels in proptest::collection::vec((1usize..4, 1usize..4), 1..4),
        k in 1usize..5,
        m_frac in 0.0f64..1.0,
    ) {
        let lv: Vec<Level> = levels.iter().map(|&(scale, u)| Level::new(scale * k * u + u, u)).collect();
        let total: usize = lv.iter().map(|l| l.n_files).sum();
        let m = m_frac * total as f64;
        for variant in [MuVariant::Approximate, MuVariant::Exact] {
            for p in mu_partition_candidates(&lv, k, m, variant).unwrap() {
                let ratio = |x: usize| lv[x].n_files as f64 / lv[x].users as f64;
                for &j in &p.j {
                    for &i in p.i.iter().chain(&p.h) {
                        prop_assert!(ratio(j) <= ratio(i));
                    }
                }
                for &i in &p.i {
                    for &h in &p.h {
                        prop_assert!(ratio(i) <= ratio(h));
                    }
                }
                prop_assert!(p.alphas.iter().all(|a| (0.0..=1.0).contains(a)));
                for &h in &p.h {
                    prop_assert_eq!(p.alphas[h], 0.0);
                }
                let used: f64 = p.alphas.iter().sum::<f64>() * m;
                prop_assert!(used <= m + 1e-9);
                if variant == MuVariant::Exact && !p.i.is_empty() {
                    prop_assert!((used - m).abs() < 1e-6, "{} vs {}", used, m);
                }
            }
        }
    }
}

#[test]
fn single_level_is_i_when_popular() {
    let lv = levels_from(&[20], &[4]).unwrap();
    assert_eq!(su_partition(&lv, rational(5, 1)).i, vec![0]);
    assert_eq!(su_partition(&lv, rational(4, 1)).h, vec![0]);
}
