mod common;

use common::oracle::{evaluate, Instance, OracleResult};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sure_core::{
    parse_questionnaire, parse_responses, parse_structure, score_all, AggregateScores,
    MissingPolicy, ParticipantScore, ScoringError,
};

const TOL: f64 = 1e-12;

fn run_engine(
    inst: &Instance,
    policy: MissingPolicy,
) -> Result<(Vec<ParticipantScore>, AggregateScores), ScoringError> {
    let gs = parse_structure(inst.structure_json().as_bytes()).unwrap();
    let q = parse_questionnaire(inst.questionnaire_json().as_bytes()).unwrap();
    let rs = parse_responses(inst.csv().as_bytes(), &q, &[], policy).unwrap();
    score_all(&rs, &q, &gs)
}

fn assert_matches(
    inst: &Instance,
    scores: &[ParticipantScore],
    agg: &AggregateScores,
    expected: &OracleResult,
) {
    assert_eq!(scores.len(), expected.participants.len());
    for (s, e) in scores.iter().zip(&expected.participants) {
        assert_eq!(s.participant_id, format!("r{}", e.row));
        assert!(
            (s.overall - e.overall).abs() <= TOL,
            "{} vs {}",
            s.overall,
            e.overall
        );
        for (i, subs) in inst.shape.iter().enumerate() {
            let k = s.key_goal_scores[&Instance::key_id(i)];
            assert!((k - e.key[i]).abs() <= TOL, "key {i}: {k} vs {}", e.key[i]);
            for j in 0..subs.len() {
                let v = s.sub_goal_scores[&Instance::sub_id(i, j)];
                assert!((v - e.sub[i][j]).abs() <= TOL);
            }
        }
    }
    assert!((agg.general - expected.general).abs() <= TOL);
    for (i, subs) in inst.shape.iter().enumerate() {
        assert!((agg.key_goal[&Instance::key_id(i)] - expected.key[i]).abs() <= TOL);
        for j in 0..subs.len() {
            assert!((agg.sub_goal[&Instance::sub_id(i, j)] - expected.sub[i][j]).abs() <= TOL);
        }
    }
    assert_eq!(agg.n_participants, expected.participants.len());
    assert_eq!(agg.n_overall_max, expected.n_max);
    assert_eq!(agg.n_overall_zero, expected.n_zero);
}

#[test]
fn engine_matches_naive_evaluator() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for round in 0..150 {
        let inst = Instance::random(&mut rng, round % 2 == 0);
        for (policy, zero_fill) in [
            (MissingPolicy::ExcludeParticipant, false),
            (MissingPolicy::TreatAsZero, true),
        ] {
            match (run_engine(&inst, policy), evaluate(&inst, zero_fill)) {
                (Ok((scores, agg)), Some(expected)) => {
                    assert_matches(&inst, &scores, &agg, &expected)
                }
                (Err(ScoringError::NoData), None) => {}
                (got, want) => panic!("round {round}: engine {got:?}, oracle {want:?}"),
            }
        }
    }
}

#[test]
fn scores_do_not_depend_on_ordering() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..30 {
        let inst = Instance::random(&mut rng, false);
        let (base_p, base) = run_engine(&inst, MissingPolicy::ExcludeParticipant).unwrap();

        // permute participants, then key goals and sub goals (carrying answer columns along)
        let mut order: Vec<usize> = (0..inst.rows.len()).collect();
        order.shuffle(&mut rng);
        let mut key_order: Vec<usize> = (0..inst.shape.len()).collect();
        key_order.shuffle(&mut rng);
        let sub_orders: Vec<Vec<usize>> = inst
            .shape
            .iter()
            .map(|subs| {
                let mut o: Vec<usize> = (0..subs.len()).collect();
                o.shuffle(&mut rng);
                o
            })
            .collect();

        // column ranges of each (key, sub) in the original layout
        let mut ranges = Vec::new();
        let mut cursor = 0;
        for subs in &inst.shape {
            let mut r = Vec::new();
            for count in subs {
                r.push(cursor..cursor + count);
                cursor += count;
            }
            ranges.push(r);
        }
        let shape: Vec<Vec<usize>> = key_order
            .iter()
            .map(|&i| sub_orders[i].iter().map(|&j| inst.shape[i][j]).collect())
            .collect();
        let ranges = &ranges;
        let sub_orders_ref = &sub_orders;
        let rows: Vec<Vec<Option<u32>>> = order
            .iter()
            .map(|&r| {
                key_order
                    .iter()
                    .flat_map(|&i| {
                        sub_orders_ref[i]
                            .iter()
                            .flat_map(move |&j| ranges[i][j].clone())
                    })
                    .map(|c| inst.rows[r][c])
                    .collect()
            })
            .collect();
        let permuted = Instance { shape, rows };
        let (perm_p, perm) = run_engine(&permuted, MissingPolicy::ExcludeParticipant).unwrap();

        assert!((perm.general - base.general).abs() <= TOL);
        for (new_i, &old_i) in key_order.iter().enumerate() {
            let a = perm.key_goal[&Instance::key_id(new_i)];
            let b = base.key_goal[&Instance::key_id(old_i)];
            assert!((a - b).abs() <= TOL);
            for (new_j, &old_j) in sub_orders[old_i].iter().enumerate() {
                let a = perm.sub_goal[&Instance::sub_id(new_i, new_j)];
                let b = base.sub_goal[&Instance::sub_id(old_i, old_j)];
                assert!((a - b).abs() <= TOL);
            }
        }
        for (new_r, &old_r) in order.iter().enumerate() {
            let a = &perm_p[new_r];
            let b = &base_p[old_r];
            assert_eq!(a.participant_id, format!("r{new_r}"));
            assert!((a.overall - b.overall).abs() <= TOL);
        }
        assert_eq!(perm.n_overall_max, base.n_overall_max);
        assert_eq!(perm.n_overall_zero, base.n_overall_zero);
    }
}

#[test]
fn every_score_is_a_unit_value_and_structural_inequalities_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let inst = Instance::random(&mut rng, false);
        let (scores, agg) = run_engine(&inst, MissingPolicy::ExcludeParticipant).unwrap();
        for s in &scores {
            let all = s.sub_goal_scores.values().chain(s.key_goal_scores.values());
            assert!(all.chain([&s.overall]).all(|v| (0.0..=1.0).contains(v)));
            for (i, subs) in inst.shape.iter().enumerate() {
                let k = s.key_goal_scores[&Instance::key_id(i)];
                assert!(s.overall <= k);
                for j in 0..subs.len() {
                    assert!(k >= s.sub_goal_scores[&Instance::sub_id(i, j)]);
                }
            }
        }
        let min_key = agg.key_goal.values().copied().fold(f64::INFINITY, f64::min);
        assert!(agg.general <= min_key);
        for (i, subs) in inst.shape.iter().enumerate() {
            let k = agg.key_goal[&Instance::key_id(i)];
            for j in 0..subs.len() {
                assert!(k >= agg.sub_goal[&Instance::sub_id(i, j)]);
            }
        }
        assert!(agg.n_overall_max + agg.n_overall_zero <= agg.n_participants);
    }
}
