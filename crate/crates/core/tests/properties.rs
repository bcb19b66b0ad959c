use p300_fsc::channel::{fsm_run, responses};
use p300_fsc::rate::{fixed_point_a, noiseless_rate, rll_capacity_perron};
use p300_fsc::{ChannelState, Trellis};
use proptest::prelude::*;

/// A flash registers iff none of the previous `L` inputs was a 1 (Ground start).
fn gated(x: &[u8], l: usize) -> Vec<u8> {
    (0..x.len())
        .map(|t| u8::from(x[t] == 1 && x[t.saturating_sub(l)..t].iter().all(|&b| b == 0)))
        .collect()
}

fn input(max_len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 0..=max_len)
}

proptest! {
    #[test]
    fn fsm_matches_window_rule(x in input(12), l in 0usize..=3) {
        prop_assert_eq!(responses(&x, ChannelState::Ground, l).unwrap(), gated(&x, l));
    }

    #[test]
    fn states_stay_in_range(x in input(12), l in 1usize..=3) {
        let (_, states) = fsm_run(&x, ChannelState::Ground, l).unwrap();
        for s in states {
            prop_assert!(s.validate(l).is_ok());
        }
    }

    #[test]
    fn responses_obey_the_run_length_constraint(x in input(12), l in 0usize..=3) {
        let z = responses(&x, ChannelState::Ground, l).unwrap();
        let ones: Vec<usize> = z.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i).collect();
        for w in ones.windows(2) {
            prop_assert!(w[1] - w[0] > l);
        }
    }

    #[test]
    fn constrained_inputs_pass_unchanged(x in input(12), l in 0usize..=3) {
        let z = gated(&x, l);
        prop_assert_eq!(responses(&z, ChannelState::Ground, l).unwrap(), z);
    }

    #[test]
    fn trellis_walk_agrees_with_fsm(x in input(12), l in 0usize..=3, extra in 0usize..=2) {
        let trellis = Trellis::new((l + extra).max(1), l).unwrap();
        prop_assert_eq!(trellis.walk(0, &x), responses(&x, ChannelState::Ground, l).unwrap());
    }

    #[test]
    fn rate_never_beats_capacity(a in 0.0f64..=1.0, l in 0usize..=6) {
        let r = p300_fsc::rate::constrained_rate(l, a);
        prop_assert!(r <= noiseless_rate(l).rate + 1e-12);
    }
}

#[test]
fn rate_decreases_with_refractory_length() {
    let rates: Vec<f64> = (0..=10).map(|l| noiseless_rate(l).rate).collect();
    assert!(rates.windows(2).all(|w| w[1] < w[0]));
    let a: Vec<f64> = (0..=10).map(fixed_point_a).collect();
    assert!(a.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn perron_capacity_counts_constrained_words() {
    // log2 of the number of (L, inf) words of length n, divided by n, tends to the capacity
    for l in 1..=3 {
        let n = 400;
        let mut words = vec![0f64; n + 1];
        for len in 0..=n {
            words[len] = if len <= l { len as f64 + 1.0 } else { words[len - 1] + words[len - 1 - l] };
        }
        let empirical = (words[n] / words[n - 1]).log2();
        let perron = rll_capacity_perron(l).unwrap().rate;
        assert!((empirical - perron).abs() < 1e-9, "L={l}: {empirical} vs {perron}");
    }
}
