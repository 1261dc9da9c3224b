//! End-to-end tests of the `sbs` binary over the shared fixture corpus.

mod common;

use std::collections::BTreeSet;

use common::*;

use sbs_cli::report::{read_forecast_report, read_plot_csv};
use sbs_core::ingest::WeekWindow;
use sbs_core::sbs::read_timeseries_csv;

fn voting_day() -> chrono::NaiveDate {
    chrono::NaiveDate::parse_from_str(VOTING_DAY, "%Y-%m-%d").unwrap()
}

#[test]
fn score_writes_table_and_summary() {
    let fixture = build_fixture(FixtureOptions::default());
    let config = fixture.config_path.to_str().unwrap();
    let output = run_sbs(&["score", "--config", config]);
    assert_success(&output);

    let out = fixture.dir.path().join("out");
    let table = read_timeseries_csv(&out.join("sbs_timeseries.csv"), voting_day()).unwrap();
    // All three analysis weeks scored, both brands present in each.
    let weeks: Vec<&WeekWindow> = table.scored_weeks().collect();
    assert_eq!(weeks.len(), 3);
    for week in weeks {
        let scores = table.scored(week).unwrap();
        assert!(scores.contains_key("rossi"), "rossi missing in {week}");
        assert!(scores.contains_key("bianchi"));
    }
    let lags: BTreeSet<i64> = table.scored_weeks().map(|w| w.lag).collect();
    assert_eq!(lags, [0i64, 1, 2].into());

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("sbs_summary.json")).unwrap())
            .unwrap();
    // 9 in-period articles of 11 total; the parameter block pins defaults.
    assert_eq!(summary["article_count"], 9);
    assert_eq!(summary["parameters"]["window"], 7);
    assert_eq!(summary["parameters"]["prune_min"], 2);
    assert_eq!(summary["parameters"]["truncate_fraction"], 0.3);
}

#[test]
fn score_is_deterministic_across_runs_and_jobs() {
    let fixture = build_fixture(FixtureOptions::default());
    let config = fixture.config_path.to_str().unwrap();
    let out1 = fixture.dir.path().join("run1");
    let out2 = fixture.dir.path().join("run2");
    let out8 = fixture.dir.path().join("run8");

    for (out, jobs) in [(&out1, "1"), (&out2, "1"), (&out8, "8")] {
        let output = run_sbs(&[
            "score",
            "--config",
            config,
            "--out",
            out.to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        assert_success(&output);
    }
    for file in ["sbs_timeseries.csv", "sbs_summary.json"] {
        let bytes1 = read_bytes(&out1.join(file));
        assert_eq!(
            bytes1,
            read_bytes(&out2.join(file)),
            "{file} differs between runs"
        );
        assert_eq!(
            bytes1,
            read_bytes(&out8.join(file)),
            "{file} differs across --jobs"
        );
    }
}

#[test]
fn empty_corpus_exits_with_code_two() {
    // Only out-of-period articles remain.
    let corpus = r#"{"id":"x1","published":"2015-01-01","title":"old","body":"news"}"#;
    let fixture = build_fixture(FixtureOptions {
        corpus: Some(format!("{corpus}\n")),
        ..Default::default()
    });
    let output = run_sbs(&["score", "--config", fixture.config_path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("no articles in analysis period"),
        "stderr: {stderr}"
    );
}

#[test]
fn forecast_emits_all_bases_and_evaluations() {
    let fixture = build_fixture(FixtureOptions::default());
    let config = fixture.config_path.to_str().unwrap();
    assert_success(&run_sbs(&["score", "--config", config]));
    assert_success(&run_sbs(&["forecast", "--config", config, "--lag", "1"]));

    let out = fixture.dir.path().join("out");
    let report = read_forecast_report(&out, 1).unwrap();
    let bases: Vec<&str> = report.forecasts.keys().map(String::as_str).collect();
    // Week 21 has a poll, so all five bases produce a forecast.
    assert_eq!(
        bases,
        vec![
            "connectivity",
            "diversity",
            "poll_average",
            "prevalence",
            "sbs"
        ]
    );
    assert_eq!(report.week.lag, 1);
    for share in report.forecasts.values() {
        let total: f64 = share.shares.values().sum();
        assert!(
            (total - 1.0).abs() < 1e-9,
            "{} sums to {total}",
            share.basis
        );
    }
    // Official results are configured, so every basis gets an evaluation
    // and its CSV.
    assert_eq!(report.evaluations.len(), report.forecasts.len());
    for basis in &bases {
        assert!(out.join(format!("eval_lag1_{basis}.csv")).exists());
        let eval = &report.evaluations[*basis];
        // Adjusted actuals: 0.42/0.80 and 0.38/0.80.
        let rossi = eval.rows.iter().find(|r| r.option == "rossi").unwrap();
        assert!((rossi.adjusted_actual - 0.525).abs() < 1e-9);
    }
}

#[test]
fn forecast_without_polls_omits_poll_basis() {
    let fixture = build_fixture(FixtureOptions {
        with_polls: false,
        ..Default::default()
    });
    let config = fixture.config_path.to_str().unwrap();
    assert_success(&run_sbs(&["score", "--config", config]));
    assert_success(&run_sbs(&["forecast", "--config", config, "--lag", "1"]));
    let report = read_forecast_report(&fixture.dir.path().join("out"), 1).unwrap();
    assert!(!report.forecasts.contains_key("poll_average"));
    assert!(report.forecasts.contains_key("sbs"));
}

#[test]
fn forecast_missing_lag_lists_available_weeks() {
    let fixture = build_fixture(FixtureOptions::default());
    let config = fixture.config_path.to_str().unwrap();
    assert_success(&run_sbs(&["score", "--config", config]));
    let output = run_sbs(&["forecast", "--config", config, "--lag", "9"]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("no scored week at lag 9"),
        "stderr: {stderr}"
    );
    assert!(stderr.contains("2016-W21"), "stderr: {stderr}");
}

#[test]
fn forecast_rejects_unknown_basis() {
    let fixture = build_fixture(FixtureOptions::default());
    let config = fixture.config_path.to_str().unwrap();
    assert_success(&run_sbs(&["score", "--config", config]));
    let output = run_sbs(&["forecast", "--config", config, "--basis", "tea_leaves"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("unknown basis"));
}

#[test]
fn forecast_single_basis_filter() {
    let fixture = build_fixture(FixtureOptions::default());
    let config = fixture.config_path.to_str().unwrap();
    assert_success(&run_sbs(&["score", "--config", config]));
    assert_success(&run_sbs(&[
        "forecast", "--config", config, "--lag", "1", "--basis", "sbs",
    ]));
    let report = read_forecast_report(&fixture.dir.path().join("out"), 1).unwrap();
    assert_eq!(report.forecasts.len(), 1);
    assert!(report.forecasts.contains_key("sbs"));
}

#[test]
fn evaluate_rewrites_reports_from_forecast_file() {
    let fixture = build_fixture(FixtureOptions::default());
    let config = fixture.config_path.to_str().unwrap();
    assert_success(&run_sbs(&["score", "--config", config]));
    assert_success(&run_sbs(&["forecast", "--config", config, "--lag", "1"]));
    let output = run_sbs(&["evaluate", "--config", config, "--lag", "1"]);
    assert_success(&output);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("sbs: MAPE"), "stdout: {stdout}");
}

#[test]
fn evaluate_requires_official_results() {
    let fixture = build_fixture(FixtureOptions {
        with_official: false,
        ..Default::default()
    });
    let config = fixture.config_path.to_str().unwrap();
    assert_success(&run_sbs(&["score", "--config", config]));
    assert_success(&run_sbs(&["forecast", "--config", config, "--lag", "1"]));
    let output = run_sbs(&["evaluate", "--config", config, "--lag", "1"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn plot_data_round_trips_against_the_table() {
    let fixture = build_fixture(FixtureOptions::default());
    let config = fixture.config_path.to_str().unwrap();
    assert_success(&run_sbs(&["score", "--config", config]));
    assert_success(&run_sbs(&["plot-data", "--config", config]));

    let out = fixture.dir.path().join("out");
    let table = read_timeseries_csv(&out.join("sbs_timeseries.csv"), voting_day()).unwrap();
    let series = read_plot_csv(&out.join("plot_data.csv")).unwrap();

    // 2 brands x 3 scored weeks x 4 measures.
    assert_eq!(series.len(), 24);
    for week in table.scored_weeks() {
        let scores = table.scored(week).unwrap();
        for (brand, score) in scores {
            let key = |m: &str| (week.label(), brand.clone(), m.to_string());
            assert_eq!(series[&key("sbs")], score.sbs);
            assert_eq!(series[&key("prevalence")], score.z_prevalence);
            assert_eq!(series[&key("diversity")], score.z_diversity);
            assert_eq!(series[&key("connectivity")], score.z_connectivity);
        }
    }
}

#[test]
fn score_dumps_weekly_networks_when_asked() {
    let fixture = build_fixture(FixtureOptions::default());
    let mut config: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&fixture.config_path).unwrap()).unwrap();
    config["dump_networks"] = true.into();
    std::fs::write(&fixture.config_path, config.to_string()).unwrap();

    assert_success(&run_sbs(&[
        "score",
        "--config",
        fixture.config_path.to_str().unwrap(),
    ]));
    let out = fixture.dir.path().join("out");
    for week in ["2016-W20", "2016-W21", "2016-W22"] {
        let path = out.join(format!("network_{week}.csv"));
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("source,target,weight"));
        // Rows are source,target,weight with source < target, sorted.
        let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
        assert!(!rows.is_empty(), "{week} network is empty");
        for pair in rows.windows(2) {
            assert!(pair[0][..2] <= pair[1][..2], "{week} rows out of order");
        }
        for row in &rows {
            assert!(row[0] < row[1], "{week}: pair not in lexicographic order");
            assert!(row[2].parse::<u32>().unwrap() >= 2, "{week}: pruned weight");
        }
    }
}

#[test]
fn no_clamp_flag_matches_default_when_scores_are_positive() {
    // Both tracked brands sit above the relevant-set mean in the fixture,
    // so clamping never engages and the flag must not change outputs.
    let fixture = build_fixture(FixtureOptions::default());
    let config = fixture.config_path.to_str().unwrap();
    assert_success(&run_sbs(&["score", "--config", config]));

    let out_a = fixture.dir.path().join("clamped");
    let out_b = fixture.dir.path().join("unclamped");
    // forecast reads the table from the configured out dir; copy it.
    for out in [&out_a, &out_b] {
        std::fs::create_dir_all(out).unwrap();
        std::fs::copy(
            fixture.dir.path().join("out/sbs_timeseries.csv"),
            out.join("sbs_timeseries.csv"),
        )
        .unwrap();
    }
    assert_success(&run_sbs(&[
        "forecast",
        "--config",
        config,
        "--lag",
        "1",
        "--out",
        out_a.to_str().unwrap(),
    ]));
    assert_success(&run_sbs(&[
        "forecast",
        "--config",
        config,
        "--lag",
        "1",
        "--no-clamp",
        "--out",
        out_b.to_str().unwrap(),
    ]));
    let report_a = read_forecast_report(&out_a, 1).unwrap();
    let report_b = read_forecast_report(&out_b, 1).unwrap();
    assert_eq!(report_a.forecasts, report_b.forecasts);
}

#[test]
fn fetch_without_api_key_is_a_usage_error() {
    let fixture = build_fixture(FixtureOptions::default());
    // Add fetch settings to the config.
    let mut config: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&fixture.config_path).unwrap()).unwrap();
    config["fetch"] = serde_json::json!({"endpoint": "http://127.0.0.1:1"});
    std::fs::write(&fixture.config_path, config.to_string()).unwrap();

    let output = sbs_cmd()
        .args(["fetch", "--config", fixture.config_path.to_str().unwrap()])
        .env_remove("SBS_NEWS_API_KEY")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("SBS_NEWS_API_KEY"));
}

#[test]
fn reference_component_values_reproduce_runoff_forecast_column() {
    // Inject a hand-written score table carrying the published runoff
    // component values as z-scores, then check the forecast column against
    // the exact quotients of those inputs.
    let lexicon = serde_json::json!({
        "raggi": ["virginia raggi", "raggi"],
        "giachetti": ["roberto giachetti", "giachetti"],
    })
    .to_string();
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    std::fs::write(base.join("lexicon.json"), lexicon).unwrap();
    std::fs::write(
        base.join("corpus.jsonl"),
        "{\"id\":\"a1\",\"published\":\"2016-06-10\",\"title\":\"t\",\"body\":\"b\"}\n",
    )
    .unwrap();
    let config = serde_json::json!({
        "event": {
            "voting_day": "2016-06-19",
            "analysis_start": "2016-06-06",
            "analysis_end": "2016-06-18",
            "tracked_brands": ["raggi", "giachetti"],
        },
        "prep": {"stemmer_language": "italian"},
        "lexicon_path": "lexicon.json",
        "corpus_path": "corpus.jsonl",
        "output_dir": "out",
    });
    let config_path = base.join("config.json");
    std::fs::write(&config_path, config.to_string()).unwrap();

    // Week 23 of 2016 is lag 1 before the 2016-06-19 vote.
    let out = base.join("out");
    std::fs::create_dir_all(&out).unwrap();
    let table = "week_iso,brand,prevalence,diversity,connectivity,z_prevalence,z_diversity,z_connectivity,sbs\n\
        2016-W23,giachetti,100,10,1.0,15.90,10.30,3.76,29.95\n\
        2016-W23,raggi,200,20,2.0,28.74,14.87,16.03,59.64\n";
    std::fs::write(out.join("sbs_timeseries.csv"), table).unwrap();

    assert_success(&run_sbs(&[
        "forecast",
        "--config",
        config_path.to_str().unwrap(),
        "--lag",
        "1",
    ]));
    let report = read_forecast_report(&out, 1).unwrap();
    let expect = [
        ("sbs", 59.64 / (59.64 + 29.95)),
        ("prevalence", 28.74 / (28.74 + 15.90)),
        ("diversity", 14.87 / (14.87 + 10.30)),
        ("connectivity", 16.03 / (16.03 + 3.76)),
    ];
    for (basis, share) in expect {
        let got = report.forecasts[basis].shares["raggi"];
        assert!(
            (got - share).abs() < 1e-9,
            "{basis}: got {got}, expected {share}"
        );
    }
}
