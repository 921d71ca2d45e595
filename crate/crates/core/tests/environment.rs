use proptest::prelude::*;
use ransched::env::{reward, ChannelConfig, Env, EnvConfig};
use ransched::sched::SchedulerKind;

fn scheduler() -> impl Strategy<Value = SchedulerKind> {
    prop_oneof![
        Just(SchedulerKind::Proportional),
        Just(SchedulerKind::Greedy),
        Just(SchedulerKind::RoundRobin),
    ]
}

fn config(n_ues: usize, sinr_mean_db: f64, steps: usize) -> EnvConfig {
    let mut cfg = EnvConfig {
        n_ues,
        steps_per_episode: steps,
        ..EnvConfig::default()
    };
    cfg.channel.sinr_mean_db = sinr_mean_db;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bits_are_conserved(
        n in 1usize..5,
        sinr in -8.0f64..20.0,
        kind in scheduler(),
        seed in any::<u64>(),
        actions in prop::collection::vec(1u32..=3, 8 * 4),
    ) {
        let mut env = Env::new(config(n, sinr, 8), kind).unwrap();
        env.reset(seed);
        for step in 0..8 {
            env.step(&actions[step * 4..step * 4 + n]).unwrap();
            for (ue, totals) in env.ues().iter().zip(env.totals()) {
                prop_assert_eq!(totals.generated, totals.drained + ue.buffer_bits());
            }
        }
    }

    #[test]
    fn latencies_and_rewards_are_consistent(
        n in 1usize..5,
        sinr in -8.0f64..20.0,
        kind in scheduler(),
        seed in any::<u64>(),
    ) {
        let mut env = Env::new(config(n, sinr, 6), kind).unwrap();
        env.reset(seed);
        let tau = env.config().latency_threshold_ms;
        let wired = env.config().wired_delay_ms;
        while !env.is_done() {
            let out = env.step(&vec![2; n]).unwrap();
            for f in &out.info.delivered {
                prop_assert!(f.latency_ms >= wired);
            }
            for (ue, r) in out.rewards.iter().enumerate() {
                prop_assert!(*r <= 1.0);
                match out.info.step_latency_ms[ue] {
                    Some(l) => prop_assert_eq!(*r, reward(l, tau)),
                    None => prop_assert_eq!(*r, 1.0),
                }
            }
            for o in &out.observations {
                prop_assert!(o.0.iter().all(|v| v.is_finite()));
            }
            let used: u64 = out.info.allocated_symbols.iter().sum();
            prop_assert!(used <= out.info.slots * u64::from(env.config().symbols_per_slot));
        }
        for f in env.pending_latencies() {
            prop_assert!(f.latency_ms >= wired);
        }
    }

    #[test]
    fn episodes_replay_exactly(
        n in 1usize..4,
        kind in scheduler(),
        seed in any::<u64>(),
    ) {
        let run = || {
            let mut env = Env::new(config(n, 5.0, 5), kind).unwrap();
            let first = env.reset(seed);
            let mut outs = Vec::new();
            while !env.is_done() {
                outs.push(env.step(&vec![1; n]).unwrap());
            }
            (first, outs)
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn bigger_frames_never_arrive_sooner(
        small in 1_000.0f64..40_000.0,
        extra in 0.0f64..40_000.0,
        sinr in 0.0f64..20.0,
        kind in scheduler(),
    ) {
        let latency = |bytes: f64| {
            let mut cfg = config(1, sinr, 1);
            cfg.channel = ChannelConfig::constant(sinr);
            cfg.compression.mean_frame_bytes = bytes;
            cfg.compression.frame_size_jitter = 0.0;
            let mut env = Env::new(cfg, kind).unwrap();
            let out = env.step(&[1]).unwrap();
            out.info.step_latency_ms[0].unwrap()
        };
        prop_assert!(latency(small + extra) >= latency(small));
    }
}

#[test]
fn reset_reproduces_a_fresh_environment() {
    let cfg = config(3, 5.0, 4);
    let mut reused = Env::new(cfg.clone(), SchedulerKind::Greedy).unwrap();
    for _ in 0..3 {
        reused.step(&[3, 2, 1]).unwrap();
    }
    let a = reused.reset(77);
    let mut fresh = Env::new(cfg, SchedulerKind::Greedy).unwrap();
    let b = fresh.reset(77);
    assert_eq!(a, b);
    for _ in 0..4 {
        assert_eq!(reused.step(&[1, 2, 3]).unwrap(), fresh.step(&[1, 2, 3]).unwrap());
    }
}

#[test]
fn different_seeds_draw_different_channels() {
    let mut env = Env::new(config(3, 5.0, 4), SchedulerKind::Greedy).unwrap();
    env.reset(1);
    let a: Vec<f64> = env.ues().iter().map(|u| u.mean_sinr_db).collect();
    env.reset(2);
    let b: Vec<f64> = env.ues().iter().map(|u| u.mean_sinr_db).collect();
    assert_ne!(a, b);
}

#[test]
fn symmetric_ues_under_proportional_allocation_tie() {
    let mut cfg = config(2, 12.0, 10);
    cfg.channel = ChannelConfig::constant(12.0);
    cfg.compression.frame_size_jitter = 0.0;
    let mut env = Env::new(cfg, SchedulerKind::Proportional).unwrap();
    while !env.is_done() {
        let out = env.step(&[2, 2]).unwrap();
        assert_eq!(out.rewards[0], out.rewards[1]);
        assert_eq!(out.info.step_latency_ms[0], out.info.step_latency_ms[1]);
    }
}
