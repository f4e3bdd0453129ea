use ccsim::config::Config;
use ccsim::harness::{evaluate, RunOptions};
use ccsim::scenario::Scenario;
use ccsim_core::adaptive::{sample_profile, ClusterModel};
use ccsim_core::model::derive_seed;
use num_bigint::BigInt;
use num_rational::BigRational;

fn scenario(lines: &str) -> Scenario {
    Scenario::from_config(&Config::parse(lines).unwrap()).unwrap()
}

/// Files requested by at least one user, and the number of users, counted
/// straight from the profile.
fn distinct_and_users(model: &ClusterModel, seed: u64) -> (usize, usize) {
    let counts = sample_profile(model, seed).counts().to_vec();
    let distinct = counts.iter().filter(|row| row.iter().any(|&c| c > 0)).count();
    let users = counts.iter().flatten().map(|&c| c as usize).sum();
    (distinct, users)
}

fn int(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[test]
fn empty_caches_rate() {
    let model = ClusterModel::new(16, 16, 4, 0.25, 0.1).unwrap();
    let mut saw_repeat = false;
    for scheme in ["pcd", "pam"] {
        for exec in ["bytes", "count"] {
            let sc = scenario(&format!(
                "scheme={scheme}\nN=16\nK=16\nd=4\nrho=0.25\nt0=0.1\nM=0\ntrials=12\nseed=9\nexec={exec}\nF=64\n"
            ));
            let opts = RunOptions {
                threads: 2,
                fault_inject: false,
            };
            let points = evaluate(&sc, &opts, true).unwrap();
            assert_eq!(points.len(), 1);
            for o in &points[0].outcomes {
                assert_eq!(o.seed, derive_seed(9, o.trial as u64));
                let (distinct, users) = distinct_and_users(&model, o.seed);
                saw_repeat |= distinct < users;
                // coded delivery with t = 0 sends one segment per user; pure
                // matching sends each requested file once
                let want = if scheme == "pcd" { users } else { distinct };
                assert_eq!(o.rate, int(want), "{scheme} {exec} trial {}", o.trial);
            }
        }
    }
    assert!(saw_repeat, "seed no longer exercises repeated requests");
}

#[test]
fn count_and_bytes_modes_agree() {
    for scheme in ["pcd", "pam"] {
        let run = |exec: &str| {
            let sc = scenario(&format!(
                "scheme={scheme}\nN=16\nK=16\nd=4\nrho=0.25\nt0=0.1\nM_grid=2,4,8,16\ntrials=6\nseed=3\nexec={exec}\nF=64\n"
            ));
            let opts = RunOptions {
                threads: 1,
                fault_inject: false,
            };
            evaluate(&sc, &opts, true)
                .unwrap()
                .into_iter()
                .flat_map(|p| p.outcomes.into_iter().map(|o| o.rate))
                .collect::<Vec<_>>()
        };
        assert_eq!(run("bytes"), run("count"), "{scheme}");
    }
}
