use chan_em::config::{ParamsSpec, Preset, ScheduleSpec, StartsSpec, TrueParams};
use chan_em::experiment::realize;
use chan_em::io::{
    read_dataset, read_sequence, write_dataset, write_sequence, write_trajectory, Provenance,
};
use chan_em::ExperimentConfig;
use chan_em_core::{run_em, ChannelParams, EmConfig, ObservationSchedule, ObservedDataset, SlotState};

fn small_config(schedule: ScheduleSpec, k: usize) -> ExperimentConfig {
    let mut config = Preset::PaperTable1.config();
    config.true_params = TrueParams::One(ParamsSpec::new(0.3, 0.6));
    config.schedule = schedule;
    config.observed_slots = k;
    config.starts = StartsSpec::List(vec![ParamsSpec::new(0.5, 0.5)]);
    config
}

#[test]
fn dataset_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let schedule = ScheduleSpec::RandomUniform { support: vec![1, 2, 3, 4, 5, 6], seed: None };
    let config = small_config(schedule, 500);
    let r = realize(&config, 0).unwrap();
    let meta = Provenance::new("simulate", &config);

    let path = dir.path().join("observed.csv");
    write_dataset(&path, &meta, &r.dataset).unwrap();
    assert_eq!(read_dataset(&path).unwrap(), r.dataset);

    let path = dir.path().join("sequence.csv");
    write_sequence(&path, &meta, &r.sequence).unwrap();
    assert_eq!(read_sequence(&path).unwrap(), r.sequence);
}

#[test]
fn full_observation_dataset_equals_sequence() {
    let config = small_config(ScheduleSpec::Fixed { skip: 0 }, 300);
    let r = realize(&config, 0).unwrap();
    assert_eq!(r.sequence.len(), 300);
    assert_eq!(r.dataset.states(), r.sequence.states());
    assert_eq!(r.dataset.times(), (1..=300).collect::<Vec<u64>>());
}

#[test]
fn files_start_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(ScheduleSpec::Fixed { skip: 4 }, 10);
    let r = realize(&config, 0).unwrap();
    let path = dir.path().join("observed.csv");
    write_dataset(&path, &Provenance::new("simulate", &config), &r.dataset).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    let first = lines.next().unwrap();
    assert!(first.starts_with("# chan-em "), "{first}");
    assert!(first.contains("master_seed=1") && first.contains("config_sha256="));
    assert_eq!(lines.next(), Some("slot_index,state"));
    let slots: Vec<u64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(slots, [1, 6, 11, 16, 21, 26, 31, 36, 41, 46]);
}

#[test]
fn malformed_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("bad_state.csv", "slot_index,state\n1,0\n2,2\n"),
        ("not_first.csv", "slot_index,state\n2,0\n3,1\n"),
        ("decreasing.csv", "slot_index,state\n1,0\n3,1\n2,1\n"),
        ("garbage.csv", "slot_index,state\n1,zero\n"),
    ];
    for (name, body) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        let err = read_dataset(&path).unwrap_err();
        assert_eq!(err.exit_code(), 4, "{name}: {err}");
    }
    let path = dir.path().join("holes.csv");
    std::fs::write(&path, "slot_index,state\n1,0\n3,1\n").unwrap();
    assert!(read_sequence(&path).is_err());
    assert!(read_dataset(&path).is_ok());
}

#[test]
fn trajectory_csv_has_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let ds = ObservedDataset::new(
        vec![1, 3, 6, 8, 9],
        vec![SlotState::Occupied, SlotState::Idle, SlotState::Idle, SlotState::Occupied, SlotState::Idle],
    )
    .unwrap();
    let config = EmConfig { max_iterations: 1, record_trajectory: true, ..EmConfig::default() };
    let report = run_em(&ds, ChannelParams::new(0.5, 0.5).unwrap(), &config).unwrap();
    let path = dir.path().join("t.csv");
    let meta = Provenance::new("trajectories", &Preset::PaperFig3.config());
    write_trajectory(&path, &meta, report.trajectory.as_ref().unwrap()).unwrap();

    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(&path).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["p", "alpha", "beta", "loglik"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "0");
    assert_eq!(&rows[1][0], "1");
    let alpha: f64 = rows[1][1].parse().unwrap();
    assert_eq!(alpha, report.estimate.alpha());
}

#[test]
fn schedule_seed_is_derived_per_channel() {
    let mut config = small_config(
        ScheduleSpec::RandomUniform { support: vec![1, 2, 3], seed: None },
        50,
    );
    config.true_params = TrueParams::Many(vec![ParamsSpec::new(0.3, 0.6), ParamsSpec::new(0.3, 0.6)]);
    let a = realize(&config, 0).unwrap();
    let b = realize(&config, 1).unwrap();
    assert_ne!(a.dataset.times(), b.dataset.times());
    assert_ne!(a.sequence, b.sequence);
    match config.schedule_for(1).unwrap() {
        ObservationSchedule::RandomUniform { seed, .. } => {
            assert_eq!(seed, chan_em_core::seed::derive_seed(1, 2, 1))
        }
        other => panic!("{other:?}"),
    }
}
