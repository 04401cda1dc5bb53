use super::*;
use crate::rewards::{score_response, RewardWeights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn single(logits: Vec<f64>) -> ToyPolicy {
    ToyPolicy::from_logits([("t".to_string(), logits)].into_iter().collect(), 1.0)
}

fn group(indices: Vec<usize>, rewards: Vec<f64>, policy: &ToyPolicy, reference: &ToyPolicy) -> Group {
    let lp = policy.log_probs("t").unwrap();
    let lq = reference.log_probs("t").unwrap();
    Group {
        task_id: "t".into(),
        logp: indices.iter().map(|&i| lp[i]).collect(),
        ref_logp: indices.iter().map(|&i| lq[i]).collect(),
        indices,
        rewards,
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn advantages_hand_values() {
    assert!(close(&compute_advantages(&[1.0, 0.0, 1.0, 0.0], 1e-8), &[1.0, -1.0, 1.0, -1.0], 1e-12));
    assert!(close(&compute_advantages(&[1.0, 0.0, 0.0, 0.0, 0.0], 1e-8), &[2.0, -0.5, -0.5, -0.5, -0.5], 1e-12));
    assert_eq!(compute_advantages(&[0.3; 5], 1e-8), vec![0.0; 5]);
}

#[test]
fn sft_single_step_matches_softmax_gradient() {
    let demos = [("t".to_string(), 0)].into_iter().collect();
    let out = sft_warmup(&single(vec![0.0, 0.0]), &demos, 1, 1.0).unwrap();
    assert!(close(out.logits("t").unwrap(), &[0.5, -0.5], 1e-15));
    let sigma1 = 1.0 / (1.0 + (-1.0f64).exp());
    assert!((out.probs("t").unwrap()[0] - sigma1).abs() < 1e-12);
    assert!((sigma1 - 0.7310586).abs() < 1e-7);
}

#[test]
fn sft_saturated_gold_barely_moves() {
    let demos = [("t".to_string(), 0)].into_iter().collect();
    let before = single(vec![20.0, 0.0]);
    let after = sft_warmup(&before, &demos, 1, 1.0).unwrap();
    let change: f64 = before.logits("t").unwrap().iter().zip(after.logits("t").unwrap()).map(|(a, b)| (a - b).abs()).sum();
    assert!(change < 1e-6);
}

#[test]
fn sft_errors() {
    let p = single(vec![0.0, 0.0]);
    let bad_task = [("x".to_string(), 0)].into_iter().collect();
    assert_eq!(sft_warmup(&p, &bad_task, 1, 1.0), Err(GrpoError::UnknownTask("x".into())));
    let bad_idx = [("t".to_string(), 2)].into_iter().collect();
    assert_eq!(sft_warmup(&p, &bad_idx, 1, 1.0), Err(GrpoError::UnknownCandidate { task: "t".into(), index: 2 }));
}

#[test]
fn sft_nll_non_increasing_on_toy_suite() {
    let tasks = toy_suite(10, 0).unwrap();
    let mut policy = ToyPolicy::uniform(tasks.iter().map(|t| (t.sample.task_id.as_str(), t.candidates.len())), 1.0);
    let demos: BTreeMap<String, usize> = tasks.iter().map(|t| (t.sample.task_id.clone(), t.gold)).collect();
    let mut prev = sft_nll(&policy, &demos).unwrap();
    for _ in 0..50 {
        policy = sft_warmup(&policy, &demos, 1, 0.5).unwrap();
        let nll = sft_nll(&policy, &demos).unwrap();
        assert!(nll <= prev);
        prev = nll;
    }
}

#[test]
fn sampling_frequencies_within_binomial_bounds() {
    let p = single(vec![0.0; 4]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = sample_group(&p, &p, "t", 4000, &mut rng).unwrap();
    let sigma = (4000.0 * 0.25 * 0.75f64).sqrt();
    for c in 0..4 {
        let count = g.indices.iter().filter(|&&i| i == c).count() as f64;
        assert!((count - 1000.0).abs() <= 3.0 * sigma, "candidate {c}: {count}");
    }
    let degenerate = single(vec![100.0, 0.0, 0.0]);
    let g = sample_group(&degenerate, &degenerate, "t", 5, &mut rng).unwrap();
    assert_eq!(g.indices, vec![0; 5]);
    assert_eq!(sample_group(&p, &p, "nope", 5, &mut rng), Err(GrpoError::UnknownTask("nope".into())));
}

#[test]
fn rewarded_candidate_gains_probability() {
    let mut p = single(vec![0.0; 3]);
    let reference = p.clone();
    let g = group(vec![0, 1, 2, 1, 2], vec![1.0, 0.0, 0.0, 0.0, 0.0], &p, &reference);
    let before = p.probs("t").unwrap()[0];
    grpo_step(&mut p, &reference, &g, 0.0, 0.1, 1e-8).unwrap();
    assert!(p.probs("t").unwrap()[0] > before);
    assert!((p.probs("t").unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn kl_gradient_vanishes_at_reference() {
    let p = single(vec![0.3, -1.0, 2.0]);
    let g = group(vec![0, 1, 2], vec![0.5, 0.5, 0.5], &p, &p);
    let grad = grpo_gradient(&p, &p, &g, 1e6, 1e-8).unwrap();
    assert!(grad.iter().all(|x| x.abs() < 1e-9));
}

#[test]
fn strong_kl_anchor_keeps_policy_at_reference() {
    let reference = single(vec![0.2, -0.4, 0.1, 0.0]);
    let g = group(vec![0, 1, 2, 3, 0], vec![1.0, 0.0, 0.0, 0.0, 1.0], &reference, &reference);
    let drift = |lambda: f64, lr: f64, steps: usize| {
        let mut p = reference.clone();
        for _ in 0..steps {
            grpo_step(&mut p, &reference, &g, lambda, lr, 1e-8).unwrap();
        }
        p.probs("t").unwrap().iter().zip(reference.probs("t").unwrap()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let free = drift(0.0, 0.1, 500);
    let anchored: Vec<f64> = [1e2, 1e4, 1e6].iter().map(|&lambda| drift(lambda, 1.0 / lambda, 2000)).collect();
    assert!(free > 0.1, "free drift {free}");
    assert!(anchored[0] > anchored[1] && anchored[1] > anchored[2], "{anchored:?}");
    assert!(anchored[2] < 1e-5, "{anchored:?}");
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let n = 6;
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let zq: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let t = rng.gen_range(0.5..2.0);
        let p = ToyPolicy::from_logits([("t".to_string(), z.clone())].into_iter().collect(), t);
        let q = ToyPolicy::from_logits([("t".to_string(), zq)].into_iter().collect(), t);
        let indices: Vec<usize> = (0..5).map(|_| rng.gen_range(0..n)).collect();
        let rewards: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
        let g = group(indices, rewards, &p, &q);
        let lambda = rng.gen_range(0.0..1.0);
        let analytic = grpo_gradient(&p, &q, &g, lambda, 1e-8).unwrap();
        let h = 1e-5;
        let j_at = |zz: Vec<f64>| {
            let pp = ToyPolicy::from_logits([("t".to_string(), zz)].into_iter().collect(), t);
            grpo_objective(&pp, &q, &g, lambda, 1e-8).unwrap()
        };
        let scale = analytic.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-8);
        for j in 0..n {
            let mut up = z.clone();
            up[j] += h;
            let mut down = z.clone();
            down[j] -= h;
            let fd = (j_at(up) - j_at(down)) / (2.0 * h);
            assert!((fd - analytic[j]).abs() / scale < 1e-4, "component {j}: {fd} vs {}", analytic[j]);
        }
    }
}

#[test]
fn zero_variance_group_leaves_policy_unchanged() {
    let mut p = single(vec![0.1, 0.2, 0.3]);
    let reference = p.clone();
    let g = group(vec![0, 1, 2, 0, 1], vec![0.7; 5], &p, &reference);
    grpo_step(&mut p, &reference, &g, 0.01, 1.0, 1e-8).unwrap();
    assert_eq!(p, reference);
}

#[test]
fn dimension_mismatch_is_reported() {
    let mut p = single(vec![0.0; 3]);
    let reference = single(vec![0.0; 4]);
    let g = group(vec![0, 1], vec![1.0, 0.0], &p, &p);
    assert_eq!(grpo_step(&mut p, &reference, &g, 0.01, 0.1, 1e-8), Err(GrpoError::DimensionMismatch("t".into())));
    let out_of_range = Group { indices: vec![0, 7], ..g.clone() };
    let same = p.clone();
    assert!(grpo_step(&mut p, &same, &out_of_range, 0.01, 0.1, 1e-8).is_err());
}

#[test]
fn config_validation() {
    assert!(TrainConfig::default().validate().is_ok());
    assert!(TrainConfig { group_size: 1, ..TrainConfig::default() }.validate().is_err());
    assert!(TrainConfig { kl_coefficient: -1.0, ..TrainConfig::default() }.validate().is_err());
    assert!(TrainConfig { epsilon: 0.0, ..TrainConfig::default() }.validate().is_err());
    let d = TrainConfig::default();
    assert_eq!((d.group_size, d.kl_coefficient), (5, 0.01));
}

#[test]
fn toy_suite_reward_structure() {
    let tasks = toy_suite(10, 0).unwrap();
    assert_eq!(tasks.len(), 10);
    let w = RewardWeights::default();
    for task in &tasks {
        let on: Vec<f64> = task.candidates.iter().map(|c| score_response(&task.sample, &c.response, w, true).total).collect();
        let off: Vec<f64> = task.candidates.iter().map(|c| score_response(&task.sample, &c.response, w, false).total).collect();
        assert!(close(&on, &[1.0, 0.1, 0.0, 0.0], 1e-12), "{}: {on:?}", task.sample.task_id);
        assert!(close(&off, &[1.0, 1.0, 0.0, 0.0], 1e-12), "{}: {off:?}", task.sample.task_id);
    }
}

#[test]
fn constant_reward_leaves_policy_unchanged() {
    let tasks = toy_suite(3, 1).unwrap();
    let p = ToyPolicy::uniform(tasks.iter().map(|t| (t.sample.task_id.as_str(), t.candidates.len())), 1.0);
    let constant = |_: &crate::domain::Sample, _: &str| crate::rewards::RewardBreakdown::new(1.0, 0.5, RewardWeights::default());
    let cfg = TrainConfig { iterations: 20, ..TrainConfig::default() };
    let out = train(&p, &tasks, constant, &cfg).unwrap();
    assert_eq!(out.policy, p);
    assert!(out.curve.iter().all(|c| c.kl == 0.0));
}

#[test]
fn curve_csv_has_header_and_rows() {
    let tasks = toy_suite(2, 2).unwrap();
    let p = ToyPolicy::uniform(tasks.iter().map(|t| (t.sample.task_id.as_str(), t.candidates.len())), 1.0);
    let w = RewardWeights::default();
    let cfg = TrainConfig { iterations: 3, ..TrainConfig::default() };
    let out = train(&p, &tasks, |s, r| score_response(s, r, w, true), &cfg).unwrap();
    let csv = curve_to_csv(&out.curve);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "iteration,mean_reward,mean_format_reward,kl,expected_reward");
    assert_eq!(lines.len(), 4);
    assert!((out.curve[0].expected_reward - 0.275).abs() < 1e-12);
}
