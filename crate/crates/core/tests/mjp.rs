mod oracles;

use jumpmeans::simulate::sample_trajectory;
use jumpmeans::{MjpParams, Trajectory};
use oracles::random_params;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Log of the product of the path's factors, taken one at a time.
fn naive_log_prob(traj: &Trajectory, params: &MjpParams) -> f64 {
    let s = traj.states();
    let mut logs = 0.0;
    for (k, &t) in traj.dwell_times().iter().enumerate() {
        let rate = params.rates[s[k]];
        logs += (rate * (-rate * t).exp() * params.transition[s[k]][s[k + 1]]).ln();
    }
    params.initial[s[0]].ln() + logs - params.rates[*s.last().unwrap()] * traj.final_time()
}

proptest! {
    #[test]
    fn log_prob_matches_factor_product(seed in any::<u64>(), m in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = random_params(&mut rng, m);
        let traj = sample_trajectory(&params, 4.0, &mut rng).unwrap();
        let got = traj.log_prob(&params).unwrap();
        let want = naive_log_prob(&traj, &params);
        prop_assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn state_at_is_right_continuous(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = random_params(&mut rng, 3);
        let traj = sample_trajectory(&params, 6.0, &mut rng).unwrap();
        let jumps = traj.jump_times();
        prop_assert_eq!(traj.state_at(0.0).unwrap(), traj.states()[0]);
        for (k, &u) in jumps.iter().enumerate() {
            prop_assert_eq!(traj.state_at(u).unwrap(), traj.states()[k + 1]);
        }
        prop_assert!(traj.state_at(6.5).is_err());
    }

    #[test]
    fn lowering_a_used_jump_probability_lowers_the_path(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = random_params(&mut rng, 3);
        let traj = sample_trajectory(&params, 6.0, &mut rng).unwrap();
        prop_assume!(traj.num_jumps() > 0);
        let (a, b) = (traj.states()[0], traj.states()[1]);
        let c = 3 - a - b;
        prop_assume!(!traj.states().windows(2).any(|w| w == [a, c]));
        let mut q = params.clone();
        let moved = 0.5 * q.transition[a][b];
        q.transition[a][b] -= moved;
        q.transition[a][c] += moved;
        prop_assert!(traj.log_prob(&q).unwrap() < traj.log_prob(&params).unwrap());
    }
}
