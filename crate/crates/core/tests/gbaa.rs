use p300_fsc::gbaa::{estimate_rate, gbaa_optimize};
use p300_fsc::rate::{brute_force_mi, maxentropic_source, noiseless_rate};
use p300_fsc::{ChannelSpec, ChannelState, GbaaConfig, MarkovSource};

#[test]
fn bsc_zero_recovers_noiseless_rate_at_l2() {
    let channel = ChannelSpec::bsc(2, 0.0).unwrap();
    let out = gbaa_optimize(&channel, &GbaaConfig::new(2, 21)).unwrap();
    let target = noiseless_rate(2).rate;
    assert!((out.rate.rate - target).abs() / target < 0.01, "{} vs {target}", out.rate.rate);
}

#[test]
fn swamped_channel_carries_nothing() {
    let channel = ChannelSpec::awgn(1, 1e3).unwrap();
    for seed in [22, 23, 24] {
        let out = gbaa_optimize(&channel, &GbaaConfig::new(1, seed)).unwrap();
        assert!(out.rate.rate < 0.01, "seed {seed}: {:?}", out.rate);
    }
}

#[test]
fn trace_is_nondecreasing_up_to_noise() {
    let channel = ChannelSpec::awgn(1, 0.5).unwrap();
    let cfg = GbaaConfig {
        sample_len: 50_000,
        max_iters: 15,
        rate_tol: 1e-6,
        ..GbaaConfig::new(1, 23)
    };
    let out = gbaa_optimize(&channel, &cfg).unwrap();
    for w in out.trace.windows(2) {
        assert!(w[1].rate >= w[0].rate - 3.0 * w[0].std_err, "{:?}", out.trace);
    }
    assert_eq!(out.rate, out.trace[out.best_iter]);
}

#[test]
fn optimized_source_beats_noiseless_optimum_on_a_noisy_channel() {
    let channel = ChannelSpec::awgn(1, 1.0).unwrap();
    let out = gbaa_optimize(&channel, &GbaaConfig::new(1, 24)).unwrap();
    let maxent = estimate_rate(&maxentropic_source(1).unwrap(), &channel, 100_000, 24).unwrap();
    assert!(out.rate.rate >= maxent.rate - 3.0 * maxent.std_err);
}

#[test]
fn estimate_respects_the_noiseless_bound() {
    for (i, p) in [0.2, 0.5, 0.8].into_iter().enumerate() {
        let s = MarkovSource::new(2, vec![p, 1.0 - p, p / 2.0, 0.5]).unwrap();
        let est = estimate_rate(&s, &ChannelSpec::awgn(2, 0.3).unwrap(), 50_000, i as u64).unwrap();
        assert!(est.rate <= noiseless_rate(2).rate + 3.0 * est.std_err);
    }
}

#[test]
fn estimate_tracks_brute_force_on_bsc() {
    let s = maxentropic_source(1).unwrap();
    let channel = ChannelSpec::bsc(1, 0.05).unwrap();
    let est = estimate_rate(&s, &channel, 200_000, 25).unwrap();
    let i12 = brute_force_mi(&s, &channel, 12, ChannelState::Ground).unwrap();
    let i11 = brute_force_mi(&s, &channel, 11, ChannelState::Ground).unwrap();
    let increment = 12.0 * i12 - 11.0 * i11;
    assert!((est.rate - increment).abs() < 0.01, "{} vs {increment}", est.rate);
}
