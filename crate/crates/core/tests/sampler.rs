mod common;

use common::split_last_sessions;
use swa_core::analysis::{compute_log_posteriors, top_artists_for_topic, user_posterior_report};
use swa_core::evaluation::perplexity;
use swa_core::model::{
    load_checkpoint, resume, save_checkpoint, train, Hyperparameters, ModelState, Schedule, Variant,
};
use swa_core::synth::{generate_dataset, LambdaPrior, SynthConfig};

fn small(seed: u64, lambda: LambdaPrior, sessions: usize) -> swa_core::synth::SynthData {
    let config = SynthConfig {
        users: 40,
        artists: 80,
        topics: 5,
        sessions_per_user: sessions,
        lambda,
        ..SynthConfig::default()
    };
    let truth = config.sample_truth(seed).unwrap();
    generate_dataset(&truth, seed + 1).unwrap()
}

#[test]
fn log_joint_rises_from_random_start() {
    let data = small(3, LambdaPrior::Beta { a: 0.5, b: 0.5 }, 15);
    let hp = Hyperparameters::with_defaults(5, data.dataset.num_artists(), Variant::Swa);
    let out = train(&data.dataset, hp, Schedule::new(200, 100).unwrap(), 4).unwrap();
    let avg = |r: std::ops::Range<usize>| {
        let n = r.len() as f64;
        out.trace[r].iter().map(|t| t.log_joint).sum::<f64>() / n
    };
    let (early, late) = (avg(0..10), avg(150..200));
    assert!(late > early + 100.0, "early {early}, late {late}");
    assert!(avg(0..50) < avg(50..100) && avg(50..100) < avg(100..200));
}

#[test]
fn posterior_ratios_converge_to_lambda_for_heavy_users() {
    let data = small(13, LambdaPrior::Beta { a: 2.0, b: 2.0 }, 90);
    let hp = Hyperparameters::with_defaults(5, data.dataset.num_artists(), Variant::Swa);
    let out = train(&data.dataset, hp, Schedule::new(300, 200).unwrap(), 14).unwrap();
    let post = compute_log_posteriors(&out.state).unwrap();
    let report = user_posterior_report(&out.state, &post);
    let mut heavy = 0;
    for (u, entry) in report.entries.iter().enumerate() {
        if entry.support >= 500 {
            heavy += 1;
            let l1 = out.estimates.lambda[u][1];
            assert!(
                (entry.addiction_ratio - l1).abs() < 0.05,
                "{}: {} vs {l1}",
                entry.key,
                entry.addiction_ratio
            );
        }
    }
    assert!(heavy >= 10, "only {heavy} users with 500+ logs");
}

#[test]
fn generated_flag_frequency_matches_lambda() {
    let lambda = 0.3;
    let data = small(21, LambdaPrior::Fixed(lambda), 450);
    let flags: Vec<u8> = data.true_flags.iter().flatten().flatten().copied().collect();
    let n = flags.len() as f64;
    assert!(n >= 1e5, "{n} logs");
    let freq = flags.iter().map(|&f| f as f64).sum::<f64>() / n;
    let se = (lambda * (1.0 - lambda) / n).sqrt();
    assert!((freq - lambda).abs() < 3.0 * se, "{freq} vs {lambda} (se {se})");
}

#[test]
fn top_artists_match_selection_oracle() {
    let data = small(5, LambdaPrior::Fixed(0.2), 10);
    let hp = Hyperparameters::with_defaults(5, data.dataset.num_artists(), Variant::Swa);
    let out = train(&data.dataset, hp, Schedule::new(30, 10).unwrap(), 6).unwrap();
    let est = &out.estimates;
    for k in 0..5 {
        // repeated arg-max, lowest index wins ties
        let mut remaining: Vec<usize> = (0..est.num_artists()).collect();
        let mut oracle = Vec::new();
        while oracle.len() < 12 {
            let best = remaining
                .iter()
                .copied()
                .fold(None, |acc: Option<usize>, a| match acc {
                    Some(b) if est.phi(k, b) >= est.phi(k, a) => Some(b),
                    _ => Some(a),
                })
                .unwrap();
            remaining.retain(|&a| a != best);
            oracle.push(best);
        }
        let (top, flagged) = top_artists_for_topic(est, k, 12).unwrap();
        assert_eq!(top, oracle);
        assert!(!flagged);
    }
    let (all, flagged) = top_artists_for_topic(est, 0, est.num_artists() + 5).unwrap();
    assert_eq!(all.len(), est.num_artists());
    assert!(flagged);
}

#[test]
fn checkpoint_resume_matches_uninterrupted_run() {
    let data = small(8, LambdaPrior::Fixed(0.4), 8);
    let hp = Hyperparameters::with_defaults(3, data.dataset.num_artists(), Variant::Swa);
    let full = train(&data.dataset, hp, Schedule::new(40, 20).unwrap(), 2).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("half.bin");
    let half = train(&data.dataset, hp, Schedule::new(15, 5).unwrap(), 2).unwrap();
    save_checkpoint(&path, &half.state, "test").unwrap();
    let (state, prov) = load_checkpoint(&path).unwrap();
    assert_eq!(prov, "test");
    let resumed = resume(state, Schedule::new(40, 20).unwrap()).unwrap();
    assert_eq!(resumed.state.topics_assigned(), full.state.topics_assigned());
    assert_eq!(resumed.state.flags(), full.state.flags());
    assert_eq!(resumed.estimates, full.estimates);
}

#[test]
fn swa_with_clamped_flags_reproduces_session_model_chain() {
    let data = small(9, LambdaPrior::Fixed(0.0), 6);
    let (train_ds, test_ds) = split_last_sessions(&data.dataset, 1);
    let hp = Hyperparameters::with_defaults(4, train_ds.num_artists(), Variant::Session);
    let session = ModelState::init(&train_ds, hp, 1).unwrap();
    let mut swa = ModelState::init(
        &train_ds,
        Hyperparameters {
            variant: Variant::Swa,
            ..hp
        },
        1,
    )
    .unwrap();
    swa.clamp_flags(0).unwrap();
    for (s, &k) in session.topics_assigned().iter().enumerate() {
        swa.reassign_topic(s, k).unwrap();
    }
    for s in 0..train_ds.num_sessions() {
        let a = session.topic_distribution_at(s);
        let b = swa.topic_distribution_at(s);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
    let out = train(&train_ds, hp, Schedule::new(20, 10).unwrap(), 1).unwrap();
    let p = perplexity(&test_ds, &out.estimates).unwrap();
    assert!(p.perplexity.is_finite() && p.perplexity > 1.0);
}
