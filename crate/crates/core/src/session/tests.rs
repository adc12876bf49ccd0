use proptest::prelude::*;

use super::*;
use crate::params::Fitness;

fn c(d: u64, h: u64, r: u64) -> GenotypeCounts {
    GenotypeCounts::new(d, h, r)
}

fn ideal(kind: ExperimentKind) -> ExperimentSession {
    ExperimentSession::create(kind, SimulationParams::new(kind).with_seed(42).with_n(100)).unwrap()
}

#[test]
fn new_ideal_session_has_one_pending_row() {
    let s = ideal(ExperimentKind::IdealSqrt);
    assert_eq!(s.records().len(), 1);
    assert!(!s.records()[0].is_complete());
    assert_eq!(s.instruction_step(), 0);
    assert_eq!(s.params().n, 100);
    assert_eq!(s.kind().headline(), Estimator::SqrtMethod);
    assert_eq!(s.id().as_str().len(), 32);
}

#[test]
fn automated_session_builds_parental_row() {
    let params = SimulationParams::new(ExperimentKind::Automated).with_initial_p(0.5);
    let s = ExperimentSession::create(ExperimentKind::Automated, params).unwrap();
    let first = &s.records()[0];
    assert_eq!(first.counts(), Some(&c(13, 25, 12)));
    assert_eq!(first.source(), Source::Automatic);
    assert_eq!(s.next_generation(), Some(1));
}

#[test]
fn invalid_fitness_rejected_at_creation() {
    let params = SimulationParams::new(ExperimentKind::Selection).with_fitness(Fitness::new(1.0, 1.0, -0.1));
    let err = ExperimentSession::create(ExperimentKind::Selection, params).unwrap_err();
    let Error::Validation(fields) = err else {
        panic!("{err:?}")
    };
    assert_eq!(fields.0[0].field, "fitness.waa");
}

#[test]
fn manual_entry_derives_both_estimators() {
    let mut s = ideal(ExperimentKind::IdealSqrt);
    let rec = s.record_manual_counts(0, c(25, 50, 25), None).unwrap();
    let d = rec.derived().unwrap();
    assert_eq!((d.gene_counting.p, d.gene_counting.q), (0.5, 0.5));
    assert_eq!((d.sqrt_method.p, d.sqrt_method.q), (0.5, 0.5));
    assert_eq!(d.chi_square.statistic, 0.0);
    assert_eq!(s.next_generation(), Some(1));
    assert_eq!(s.instruction_step(), 1);
}

#[test]
fn wrong_total_and_sequencing_errors() {
    let mut s = ideal(ExperimentKind::IdealCounting);
    let err = s.record_manual_counts(0, c(25, 50, 24), None).unwrap_err();
    assert_eq!(err.to_string(), "expected N=100 individuals, got 99");
    let err = s.record_manual_counts(2, c(25, 50, 25), None).unwrap_err();
    assert!(matches!(err, Error::Sequencing { expected: 0, got: 2 }));
    s.record_manual_counts(0, c(25, 50, 25), None).unwrap();
    assert!(matches!(
        s.record_manual_counts(2, c(25, 50, 25), None),
        Err(Error::Sequencing { expected: 1, got: 2 })
    ));
}

#[test]
fn selection_permits_attrition() {
    let kind = ExperimentKind::Selection;
    let mut s = ExperimentSession::create(
        kind,
        SimulationParams::new(kind).with_fitness(Fitness::new(1.0, 1.0, 0.0)),
    )
    .unwrap();
    s.record_manual_counts(0, c(12, 26, 12), None).unwrap();
    s.record_manual_counts(1, c(14, 24, 0), None).unwrap();
    assert!(matches!(
        s.record_manual_counts(2, c(30, 30, 0), None),
        Err(Error::WrongTotal { .. })
    ));
}

#[test]
fn ideal_miscount_is_flagged_not_rejected() {
    let mut s = ideal(ExperimentKind::IdealSqrt);
    s.record_manual_counts(0, c(25, 50, 25), None).unwrap();
    let ok = s.record_manual_counts(1, c(24, 52, 24), None).unwrap();
    assert!(ok.warnings().is_empty());
    let off = s.record_manual_counts(2, c(30, 40, 30), None).unwrap();
    assert!(off.warnings().is_empty(), "same allele counts, different genotypes");
    let miscount = s.record_manual_counts(3, c(27, 48, 25), None).unwrap();
    assert_eq!(miscount.warnings().len(), 1);
    assert!(miscount.warnings()[0].starts_with("conservation warning"));
    // correcting generation 0 re-evaluates every row
    s.record_manual_counts(0, c(27, 48, 25), None).unwrap();
    assert!(s.record(3).unwrap().warnings().is_empty());
    assert_eq!(s.record(1).unwrap().warnings().len(), 1);
}

#[test]
fn auto_step_needs_a_parental_row() {
    let mut s = ideal(ExperimentKind::IdealSqrt);
    assert!(matches!(s.auto_step(), Err(Error::NoParental)));
}

#[test]
fn ideal_auto_steps_conserve_gene_counting_estimate() {
    for kind in [ExperimentKind::IdealSqrt, ExperimentKind::IdealCounting] {
        for mode in [Mode::Stochastic, Mode::Deterministic] {
            let mut s =
                ExperimentSession::create(kind, SimulationParams::new(kind).with_seed(3).with_mode(mode)).unwrap();
            s.record_manual_counts(0, c(9, 22, 19), None).unwrap();
            for _ in 0..15 {
                s.auto_step().unwrap();
            }
            let p0 = s.records()[0].derived().unwrap().gene_counting.p;
            for r in s.complete_records() {
                assert_eq!(r.derived().unwrap().gene_counting.p.to_bits(), p0.to_bits());
            }
        }
    }
}

#[test]
fn drift_replay_is_identical() {
    let run = || {
        let kind = ExperimentKind::Drift;
        let mut s = ExperimentSession::create(kind, SimulationParams::new(kind).with_seed(99)).unwrap();
        s.record_manual_counts(0, c(12, 26, 12), None).unwrap();
        let mut out = Vec::new();
        for _ in 0..30 {
            match s.auto_step() {
                Ok(r) => out.push(r),
                Err(Error::Terminated(_)) => break,
                Err(e) => panic!("{e}"),
            }
        }
        out
    };
    assert_eq!(run(), run());
}

#[test]
fn deterministic_lethal_selection_step() {
    let kind = ExperimentKind::Selection;
    let params = SimulationParams::new(kind)
        .with_fitness(Fitness::new(1.0, 1.0, 0.0))
        .with_mode(Mode::Deterministic)
        .with_n(100);
    let mut s = ExperimentSession::create(kind, params).unwrap();
    s.record_manual_counts(0, c(25, 50, 25), None).unwrap();
    let rec = s.auto_step().unwrap();
    assert!((rec.model().unwrap().q - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn fixation_terminates_session() {
    let kind = ExperimentKind::Selection;
    let params = SimulationParams::new(kind)
        .with_fitness(Fitness::new(0.0, 0.0, 1.0))
        .with_mode(Mode::Deterministic);
    let mut s = ExperimentSession::create(kind, params).unwrap();
    s.record_manual_counts(0, c(12, 26, 12), None).unwrap();
    let rec = s.auto_step().unwrap();
    assert_eq!(rec.model().unwrap().q, 1.0);
    assert!(s.is_terminal());
    assert_eq!(s.next_generation(), None);
    assert!(matches!(s.auto_step(), Err(Error::Terminated(_))));
    assert!(matches!(
        s.record_manual_counts(2, c(0, 0, 50), None),
        Err(Error::Terminated(_))
    ));
}

#[test]
fn extinction_appends_empty_row() {
    let kind = ExperimentKind::Selection;
    let params = SimulationParams::new(kind).with_fitness(Fitness::new(0.0, 0.0, 0.0));
    let mut s = ExperimentSession::create(kind, params).unwrap();
    s.record_manual_counts(0, c(12, 26, 12), None).unwrap();
    let rec = s.auto_step().unwrap();
    assert_eq!(rec.counts(), Some(&c(0, 0, 0)));
    assert!(rec.derived().is_none());
    assert_eq!(rec.warnings(), ["population extinct under selection"]);
    assert_eq!(
        s.status(),
        &SessionStatus::Terminal {
            outcome: TerminalStatus::Extinct { generation: 1 }
        }
    );
    let csv = String::from_utf8(s.export_csv().unwrap()).unwrap();
    assert_eq!(csv.lines().nth(2).unwrap(), "1,0,0,0,0,,,,,,,,,,,automatic,");
}

#[test]
fn deterministic_gene_flow_converges_geometrically() {
    let kind = ExperimentKind::GeneFlow;
    let params = SimulationParams::new(kind)
        .with_migration(0.15, 0.9)
        .with_mode(Mode::Deterministic);
    let mut s = ExperimentSession::create(kind, params).unwrap();
    s.record_manual_counts(0, c(4, 12, 34), None).unwrap();
    let p0 = 0.2;
    for t in 1..=25 {
        let p = s.auto_step().unwrap().model().unwrap().p;
        let want = 0.85f64.powi(t) * (p0 - 0.9f64).abs();
        assert!(((p - 0.9).abs() - want).abs() <= 1e-12);
    }
}

#[test]
fn charts_need_data() {
    let s = ideal(ExperimentKind::IdealSqrt);
    assert!(matches!(s.chart_series(ChartVariant::LineGraph), Err(Error::NoData)));
}

#[test]
fn chart_variants() {
    let mut s = ideal(ExperimentKind::IdealSqrt);
    s.record_manual_counts(0, c(25, 50, 25), None).unwrap();
    let stacked = s.chart_series(ChartVariant::StackedLabeled).unwrap();
    let ChartBody::StackedLabeled { columns } = &stacked.body else {
        panic!()
    };
    let values: Vec<f64> = columns[0].genotypes.iter().map(|g| g.value).collect();
    assert_eq!(values, [0.25, 0.5, 0.25]);
    let labels: Vec<&str> = columns[0].genotypes.iter().map(|g| g.label.as_str()).collect();
    assert_eq!(labels, ["0.2500", "0.5000", "0.2500"]);

    for _ in 0..6 {
        s.auto_step().unwrap();
    }
    let lines = s.chart_series(ChartVariant::LineGraph).unwrap();
    let ChartBody::LineGraph { lines } = &lines.body else {
        panic!()
    };
    let p = &lines.iter().find(|l| l.key == "p").unwrap().values;
    assert_eq!(p.len(), 7);
    assert!(p.iter().all(|&x| x == 0.5));

    let nested = s.chart_series(ChartVariant::NestedColumns).unwrap();
    let ChartBody::NestedColumns { groups } = &nested.body else {
        panic!()
    };
    assert_eq!(groups.len(), 5);
    for g in groups {
        assert_eq!(g.columns.len(), 7);
        assert!(g.columns.windows(2).all(|w| w[0].width < w[1].width));
        assert_eq!(g.columns[0].generation, 0);
        assert_eq!(g.columns.last().unwrap().width, 1.0);
    }
}

#[test]
fn csv_layout() {
    let mut s = ideal(ExperimentKind::IdealCounting);
    s.record_manual_counts(0, c(30, 40, 30), None).unwrap();
    s.record_manual_counts(1, c(25, 50, 25), Some("second draw, mixed well".into()))
        .unwrap();
    let text = String::from_utf8(s.export_csv().unwrap()).unwrap();
    let lines: Vec<&str> = text.split('\n').collect();
    assert_eq!(lines[0], SESSION_CSV_HEADER);
    assert_eq!(
        lines[1],
        "0,30,40,30,100,0.5,0.5,0.547722557505,0.547722557505,0.0954451150103,0.3,0.4,0.3,4,0.0455002638964,manual,"
    );
    assert_eq!(
        lines[2],
        "1,25,50,25,100,0.5,0.5,0.5,0.5,0,0.25,0.5,0.25,0,1,manual,\"second draw, mixed well\""
    );
    assert_eq!(lines[3], "");
    assert_eq!(lines.len(), 4);
    assert!(!text.contains('\r'));
}

#[test]
fn csv_round_trip() {
    let kind = ExperimentKind::Drift;
    let mut s = ExperimentSession::create(kind, SimulationParams::new(kind).with_seed(5)).unwrap();
    s.record_manual_counts(0, c(10, 20, 20), Some("start".into())).unwrap();
    for _ in 0..8 {
        if s.auto_step().is_err() {
            break;
        }
    }
    let bytes = s.export_csv().unwrap();
    let rows = import_csv(&bytes).unwrap();
    let complete: Vec<_> = s.complete_records().collect();
    assert_eq!(rows.len(), complete.len());
    for (row, rec) in rows.iter().zip(&complete) {
        assert_eq!(&row.counts, rec.counts().unwrap());
        let d = rec.derived().unwrap();
        assert!((row.p_counting.unwrap() - d.gene_counting.p).abs() < 1e-9);
        assert!((row.p_sqrt.unwrap() - d.sqrt_method.p).abs() < 1e-9);
        assert!((row.chi2_p.unwrap() - d.chi_square.p_value).abs() < 1e-9);
    }
    let rebuilt = ExperimentSession::from_csv(kind, s.params().clone(), &bytes).unwrap();
    let counts = |x: &ExperimentSession| x.complete_records().map(|r| *r.counts().unwrap()).collect::<Vec<_>>();
    assert_eq!(counts(&rebuilt), counts(&s));
    assert_eq!(rebuilt.export_csv().unwrap(), bytes);
}

#[test]
fn csv_import_rejects_bad_header() {
    assert!(matches!(import_csv(b"generation,D\n0,1\n"), Err(Error::Integrity(_))));
}

#[test]
fn document_round_trip_and_resume() {
    let kind = ExperimentKind::GeneFlow;
    let params = SimulationParams::new(kind).with_migration(0.1, 0.8).with_seed(1234);
    let mut s = ExperimentSession::create(kind, params).unwrap();
    s.record_manual_counts(0, c(5, 20, 25), Some("parental".into()))
        .unwrap();
    for _ in 0..4 {
        s.auto_step().unwrap();
    }
    let loaded = ExperimentSession::from_document(&s.to_document()).unwrap();
    assert_eq!(loaded, s);

    let mut a = s.clone();
    let mut b = loaded;
    for _ in 0..5 {
        assert_eq!(a.auto_step().unwrap(), b.auto_step().unwrap());
    }
}

#[test]
fn future_schema_version_refused() {
    let s = ideal(ExperimentKind::IdealSqrt);
    let doc = s
        .to_document()
        .replacen("\"schema_version\": 1", "\"schema_version\": 2", 1);
    assert!(matches!(
        ExperimentSession::from_document(&doc),
        Err(Error::UnsupportedSchema { found: 2, supported: 1 })
    ));
}

#[test]
fn corrupted_documents_refused() {
    let mut s = ideal(ExperimentKind::IdealSqrt);
    s.record_manual_counts(0, c(25, 50, 25), None).unwrap();
    let doc = s.to_document();
    assert!(matches!(
        ExperimentSession::from_document(&doc[..doc.len() / 2]),
        Err(Error::Integrity(_))
    ));
    let no_version = doc.replacen("\"schema_version\": 1,", "", 1);
    assert!(matches!(
        ExperimentSession::from_document(&no_version),
        Err(Error::Integrity(_))
    ));
    let gap = doc.replacen("\"t\": 1", "\"t\": 7", 1);
    assert!(matches!(
        ExperimentSession::from_document(&gap),
        Err(Error::Integrity(_))
    ));
}

#[test]
fn store_round_trip_in_directory() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::with_directory(dir.path()).unwrap();
    let mut s = ideal(ExperimentKind::IdealSqrt);
    s.record_manual_counts(0, c(25, 50, 25), None).unwrap();
    store.save_session(&s).unwrap();

    let fresh = SessionStore::with_directory(dir.path()).unwrap();
    assert_eq!(fresh.load_session(s.id().as_str()).unwrap(), s);
    assert!(matches!(fresh.load_session("0123abcd"), Err(Error::NotFound(_))));
    assert!(matches!(fresh.load_session("../etc/passwd"), Err(Error::NotFound(_))));

    let rec = fresh.update(s.id().as_str(), |x| x.auto_step()).unwrap();
    let again = SessionStore::with_directory(dir.path()).unwrap();
    assert_eq!(again.load_session(s.id().as_str()).unwrap().record(1).unwrap(), &rec);
}

#[test]
fn in_memory_store_unknown_id() {
    let store = SessionStore::in_memory();
    assert!(matches!(store.load_session("nope"), Err(Error::NotFound(_))));
}

fn genotypes(n: u64) -> impl Strategy<Value = GenotypeCounts> {
    (0..=n).prop_flat_map(move |d| (0..=n - d).prop_map(move |h| c(d, h, n - d - h)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derived_rows_stay_fresh(edits in prop::collection::vec((0usize..6, genotypes(100)), 1..30)) {
        let mut s = ideal(ExperimentKind::IdealCounting);
        for t in 0..6 {
            s.record_manual_counts(t, c(25, 50, 25), None).unwrap();
        }
        for (t, counts) in edits {
            s.record_manual_counts(t, counts, None).unwrap();
            let rec = s.record(t).unwrap();
            let expect = Derived::compute(&counts, Estimator::GeneCounting).unwrap();
            prop_assert_eq!(rec.derived().unwrap(), &expect);
            for r in s.complete_records() {
                let fresh = Derived::compute(r.counts().unwrap(), Estimator::GeneCounting).unwrap();
                prop_assert_eq!(r.derived().unwrap(), &fresh);
            }
        }
    }

    #[test]
    fn stacked_segments_sum_to_one(rows in prop::collection::vec(genotypes(50), 1..12)) {
        let kind = ExperimentKind::Drift;
        let mut s = ExperimentSession::create(kind, SimulationParams::new(kind)).unwrap();
        for (t, counts) in rows.iter().enumerate() {
            s.record_manual_counts(t, *counts, None).unwrap();
        }
        let chart = s.chart_series(ChartVariant::StackedLabeled).unwrap();
        let ChartBody::StackedLabeled { columns } = chart.body else { unreachable!() };
        prop_assert_eq!(columns.len(), rows.len());
        for col in columns {
            let g: f64 = col.genotypes.iter().map(|x| x.value).sum();
            let a: f64 = col.alleles.iter().map(|x| x.value).sum();
            prop_assert!((g - 1.0).abs() <= 1e-9);
            prop_assert!((a - 1.0).abs() <= 1e-9);
        }
    }
}
