use std::collections::BTreeSet;

use aft::datagen::{self, DatagenConfig, GeneratedDataset};
use aft::experiment::{
    run_experiment, softmax_m0, Criterion, Experiment, ExperimentSetup, Method, StopRule, StrategyConfig,
};
use aft::learner::{FitStart, Origin, SoftmaxModel, TrainConfig};
use aft::pool::CandidateId;
use proptest::prelude::*;

fn small_data(seed: u64, n: usize) -> GeneratedDataset {
    datagen::generate(&DatagenConfig {
        train_candidates: n,
        test_candidates: 40,
        ..DatagenConfig::standard(seed)
    })
    .unwrap()
}

fn strategy(method: Method, criterion: &str, batch: usize) -> StrategyConfig {
    let criterion = (method != Method::Rft).then(|| criterion.parse::<Criterion>().unwrap());
    StrategyConfig::preset(method, criterion, batch).unwrap()
}

fn setup(strategy: StrategyConfig, budget: Option<usize>, seed: u64) -> ExperimentSetup {
    ExperimentSetup {
        strategy,
        train: TrainConfig::default(),
        stop: StopRule {
            budget,
            target_auc: None,
        },
        oracle: Default::default(),
        positive_class: 0,
        seed,
    }
}

fn experiment<'a>(
    data: &'a GeneratedDataset,
    s: StrategyConfig,
    budget: Option<usize>,
    seed: u64,
) -> Experiment<'a, SoftmaxModel> {
    let m0 = softmax_m0(data.config.feature_dim, 2, seed).unwrap();
    Experiment::new(setup(s, budget, seed), &data.train, &data.test, m0).unwrap()
}

#[test]
fn random_selection_scores_nothing() {
    let data = small_data(1, 80);
    let m0 = softmax_m0(10, 2, 1).unwrap();
    let rft = run_experiment(
        setup(strategy(Method::Rft, "", 20), Some(60), 1),
        &data.train,
        &data.test,
        m0.clone(),
    )
    .unwrap();
    assert_eq!(rft.counters.candidates_scored, 0);
    let active = run_experiment(
        setup(strategy(Method::AftStar, "entropy^α_ω", 20), Some(60), 1),
        &data.train,
        &data.test,
        m0,
    )
    .unwrap();
    // 80 + 60 + 40 unlabeled candidates scored over three steps.
    assert_eq!(active.counters.candidates_scored, 180);
}

#[test]
fn restart_strategies_refit_from_m0_every_step() {
    let data = small_data(2, 80);
    let mut exp = experiment(&data, strategy(Method::Aft, "diversity^α_ω", 20), None, 2);
    while exp.step(None).unwrap().is_some() {
        let model = exp.model();
        assert_eq!(model.last_start(), Some(FitStart::Pretrained));
        assert_eq!(model.trained_steps(), 1);
        assert_eq!(model.origin(), Origin::Finetuned);
        assert_eq!(model.pretrained_weights(), softmax_m0(10, 2, 2).unwrap().weights());
    }
}

#[test]
fn continue_strategies_accumulate_fits() {
    let data = small_data(3, 80);
    let mut exp = experiment(&data, strategy(Method::AftDoublePrime, "entropy", 20), None, 3);
    let mut steps = 0;
    while exp.step(None).unwrap().is_some() {
        steps += 1;
        assert_eq!(exp.model().last_start(), Some(FitStart::Previous));
        assert_eq!(exp.model().trained_steps(), steps);
    }
    assert_eq!(steps, 4);
}

#[test]
fn hard_example_strategy_trains_on_h_union_q() {
    let data = small_data(4, 120);
    let mut exp = experiment(&data, strategy(Method::AftStar, "entropy^α_ω", 20), None, 4);
    let mut saw_hard = false;
    while let Some(report) = exp.step(None).unwrap() {
        let q: BTreeSet<CandidateId> = report.batch.iter().cloned().collect();
        assert!(report.misclassified.is_disjoint(&q));
        let expected: BTreeSet<CandidateId> = report.misclassified.union(&q).cloned().collect();
        assert_eq!(report.training_set, expected);
        assert_eq!(report.training_set.len(), report.misclassified.len() + q.len());
        assert_eq!(report.audit.training_set_size, report.training_set.len());
        saw_hard |= !report.misclassified.is_empty();
    }
    assert!(saw_hard, "no step had hard examples; the check above is vacuous");
}

#[test]
fn zero_budget_records_only_the_baseline() {
    let data = small_data(5, 40);
    let m0 = softmax_m0(10, 2, 5).unwrap();
    let out = run_experiment(
        setup(strategy(Method::AftStar, "entropy", 10), Some(0), 5),
        &data.train,
        &data.test,
        m0,
    )
    .unwrap();
    assert_eq!(out.curve.records.len(), 1);
    let r = &out.curve.records[0];
    assert_eq!((r.step, r.queries_cum, r.labeled_count), (0, 0, 0));
    assert!(r.selected_positive_fraction.is_none());
    assert!(out.labeled.is_empty());
}

#[test]
fn exhaustion_labels_every_candidate() {
    let data = small_data(6, 60);
    for method in Method::ALL {
        let m0 = softmax_m0(10, 2, 6).unwrap();
        let out = run_experiment(
            setup(strategy(method, "diversity", 20), Some(1000), 6),
            &data.train,
            &data.test,
            m0,
        )
        .unwrap();
        assert_eq!(out.labeled.len(), 60, "{method}");
        assert_eq!(out.curve.records.len(), 4);
    }
}

#[test]
fn budget_caps_the_last_batch() {
    let data = small_data(7, 60);
    let m0 = softmax_m0(10, 2, 7).unwrap();
    let out = run_experiment(
        setup(strategy(Method::AftStar, "entropy", 20), Some(50), 7),
        &data.train,
        &data.test,
        m0,
    )
    .unwrap();
    let queries: Vec<usize> = out.curve.records.iter().map(|r| r.queries_cum).collect();
    assert_eq!(queries, [0, 20, 40, 50]);
}

#[test]
fn target_auc_stops_early() {
    let data = small_data(8, 200);
    let m0 = softmax_m0(10, 2, 8).unwrap();
    let mut s = setup(strategy(Method::Rft, "", 20), Some(200), 8);
    s.stop.target_auc = Some(0.9);
    let out = run_experiment(s, &data.train, &data.test, m0).unwrap();
    let last = out.curve.records.last().unwrap();
    assert!(last.test_auc >= 0.9);
    assert!(out.curve.records[..out.curve.records.len() - 1]
        .iter()
        .all(|r| r.test_auc < 0.9));
    assert!(last.queries_cum < 200);
}

#[test]
fn oracle_sees_only_selected_batches() {
    let data = small_data(9, 80);
    let mut exp = experiment(&data, strategy(Method::AftStar, "diversity^α_ω", 15), Some(60), 9);
    let mut batches = Vec::new();
    let mut queries = 0;
    while let Some(report) = exp.step(Some(60 - queries)).unwrap() {
        assert_eq!(report.record.queries_cum, queries + report.batch.len());
        queries = report.record.queries_cum;
        assert_eq!(report.record.labeled_count, queries);
        batches.extend(report.batch);
    }
    assert_eq!(exp.oracle().access_log(), batches.as_slice());
    assert_eq!(exp.oracle().query_count(), exp.pool().labeled().len());
}

#[test]
fn full_data_limit_trains_on_the_same_set() {
    let data = small_data(10, 60);
    let mut sets = Vec::new();
    for method in [Method::Aft, Method::Rft] {
        let mut exp = experiment(&data, strategy(method, "entropy^α_ω", 20), None, 10);
        let mut last = None;
        while let Some(report) = exp.step(None).unwrap() {
            last = Some(report.training_set);
        }
        sets.push(last.unwrap());
    }
    assert_eq!(sets[0], sets[1]);
    assert_eq!(sets[0].len(), 60);
}

#[test]
fn runs_are_deterministic() {
    let data = small_data(11, 100);
    let run = || {
        let m0 = softmax_m0(10, 2, 11).unwrap();
        let out = run_experiment(
            setup(strategy(Method::AftStar, "entropy^α_ω", 10), Some(60), 11),
            &data.train,
            &data.test,
            m0,
        )
        .unwrap();
        (out.curve.to_csv(), out.labeled, out.model.weights().to_vec())
    };
    assert_eq!(run(), run());
}

fn any_method() -> impl Strategy<Value = Method> {
    prop::sample::select(Method::ALL.to_vec())
}

fn any_criterion() -> impl Strategy<Value = Criterion> {
    prop::sample::select(Criterion::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn loop_bookkeeping_holds(
        method in any_method(),
        criterion in any_criterion(),
        seed in 0u64..1000,
        n in 5usize..40,
        batch in 1usize..12,
        budget in 0usize..50,
    ) {
        let data = small_data(seed, n);
        let strategy = StrategyConfig::preset(method, (method != Method::Rft).then_some(criterion), batch).unwrap();
        let m0 = softmax_m0(10, 2, seed).unwrap();
        let out = run_experiment(setup(strategy, Some(budget), seed), &data.train, &data.test, m0).unwrap();
        let records = &out.curve.records;
        prop_assert_eq!(records.len(), out.audit.len() + 1);
        for (i, r) in records.iter().enumerate() {
            prop_assert_eq!(r.step, i);
            prop_assert_eq!(r.queries_cum, r.labeled_count);
            prop_assert!((0.0..=1.0).contains(&r.test_auc));
        }
        for (w, a) in records.windows(2).zip(&out.audit) {
            prop_assert_eq!(w[1].queries_cum - w[0].queries_cum, a.batch.len());
            prop_assert!(!a.batch.is_empty() && a.batch.len() <= batch);
        }
        let total = records.last().unwrap().queries_cum;
        prop_assert_eq!(total, budget.min(n));
        prop_assert_eq!(out.labeled.len(), total);
        prop_assert!((0.0..=1.0).contains(&out.curve.alc));
    }
}
