//! Subcommand implementations: fetch, score, forecast, evaluate and
//! plot-data, glued together through the files under the output
//! directory so each stage can run (and be rerun) on its own.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use sbs_core::basis::{BasisContext, BasisRegistry};
use sbs_core::fetch::{DateRange, NewsClient, API_KEY_ENV};
use sbs_core::forecast::{adjust_actuals, evaluate, ClampPolicy, EvalReport, ForecastShare};
use sbs_core::graph::{build_cooccurrence, prune};
use sbs_core::ingest::{
    analysis_weeks, filter_period, group_by_week, read_jsonl, Article, WeekWindow,
};
use sbs_core::sbs::{
    read_timeseries_csv, sbs_timeseries, write_timeseries_csv, SbsTable, WeekEntry,
};
use sbs_core::textprep::{Preprocessor, TokenDoc};

use crate::config::{LoadedConfig, ReportParameters};
use crate::report::{
    read_forecast_report, write_eval_csv, write_forecast_report, write_plot_csv, ForecastReport,
};
use crate::CliError;

pub fn ensure_out_dir(config: &LoadedConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&config.run.output_dir).map_err(|e| {
        CliError::usage(format!(
            "cannot create output dir {}: {e}",
            config.run.output_dir.display()
        ))
    })
}

/// `sbs fetch`: query the news API over the analysis period and cache the
/// matching articles as the corpus JSONL.
pub fn run_fetch(config: &LoadedConfig) -> Result<(), CliError> {
    let fetch = config
        .run
        .fetch
        .as_ref()
        .ok_or_else(|| CliError::usage("config has no fetch settings"))?;
    if config.run.event.keywords.is_empty() {
        return Err(CliError::usage("config: fetch needs non-empty keywords"));
    }
    let api_key = std::env::var(API_KEY_ENV)
        .map_err(|_| CliError::usage(format!("{API_KEY_ENV} is not set")))?;
    let cache = config.corpus_path()?;

    let mut client =
        NewsClient::new(&fetch.endpoint, &api_key).with_language(fetch.language.clone());
    if let Some(page_size) = fetch.page_size {
        client = client.with_page_size(page_size);
    }
    let range = DateRange {
        start: config.run.event.analysis_start,
        end: config.run.event.analysis_end,
    };
    let articles = client
        .fetch_news(&config.run.event.keywords, range, cache)
        .map_err(|e| CliError::compute(format!("fetch: {e}")))?;
    println!(
        "fetched {} articles into {}",
        articles.len(),
        cache.display()
    );
    Ok(())
}

/// Load the corpus, restrict it to the analysis period and preprocess it
/// into weekly token-doc buckets.
fn weekly_token_docs(
    config: &LoadedConfig,
) -> Result<(BTreeMap<WeekWindow, Vec<TokenDoc>>, Vec<WeekWindow>, usize), CliError> {
    let corpus = config.corpus_path()?;
    let articles = read_jsonl(corpus).map_err(|e| CliError::usage(format!("score: {e}")))?;
    let kept = filter_period(&articles, &config.run.event);
    if kept.is_empty() {
        return Err(CliError::empty("no articles in analysis period"));
    }
    let article_count = kept.len();

    let preprocessor = Preprocessor::new(config.lexicon.clone(), config.prep.clone())
        .map_err(|e| CliError::usage(format!("preprocess: {e}")))?;
    let buckets = group_by_week(&kept, &config.run.event);
    let weekly: BTreeMap<WeekWindow, Vec<TokenDoc>> = buckets
        .into_iter()
        .map(|(week, articles)| {
            let docs: Vec<TokenDoc> = articles
                .par_iter()
                .map(|a: &Article| preprocessor.preprocess(a, week))
                .collect();
            (week, docs)
        })
        .collect();
    let weeks = analysis_weeks(&config.run.event);
    Ok((weekly, weeks, article_count))
}

#[derive(Serialize)]
struct WeekSummary {
    week: String,
    lag: i64,
    articles: usize,
    status: &'static str,
}

#[derive(Serialize)]
struct ScoreSummary {
    parameters: ReportParameters,
    article_count: usize,
    weeks: Vec<WeekSummary>,
}

/// `sbs score`: the full corpus-to-table pipeline, writing
/// `sbs_timeseries.csv` and `sbs_summary.json`.
pub fn run_score(config: &LoadedConfig) -> Result<(), CliError> {
    ensure_out_dir(config)?;
    let (weekly, weeks, article_count) = weekly_token_docs(config)?;
    let table = sbs_timeseries(
        &weekly,
        &weeks,
        &config.run.event.tracked_brands,
        &config.run.graph,
    )
    .map_err(|e| CliError::compute(format!("score: {e}")))?;

    let csv_path = config.run.output_dir.join("sbs_timeseries.csv");
    write_timeseries_csv(&table, &csv_path)
        .map_err(|e| CliError::compute(format!("score: {e}")))?;

    if config.run.dump_networks {
        for (week, docs) in &weekly {
            let network = prune(
                &build_cooccurrence(docs, config.run.graph.window),
                config.run.graph.prune_min,
            );
            let path = config
                .run
                .output_dir
                .join(format!("network_{}.csv", week.label()));
            network
                .write_csv(&path)
                .map_err(|e| CliError::compute(format!("score: {e}")))?;
        }
    }

    let summary = ScoreSummary {
        parameters: ReportParameters::from_config(config, config.run.clamp_scores),
        article_count,
        weeks: weeks
            .iter()
            .map(|week| WeekSummary {
                week: week.label(),
                lag: week.lag,
                articles: weekly.get(week).map_or(0, Vec::len),
                status: match table.rows.get(week) {
                    Some(WeekEntry::Scored(_)) => "scored",
                    _ => "absent",
                },
            })
            .collect(),
    };
    let summary_path = config.run.output_dir.join("sbs_summary.json");
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::compute(format!("score: {e}")))?;
    std::fs::write(&summary_path, json + "\n")
        .map_err(|e| CliError::compute(format!("score: cannot write summary: {e}")))?;

    println!(
        "scored {} weeks ({} articles) into {}",
        summary
            .weeks
            .iter()
            .filter(|w| w.status == "scored")
            .count(),
        article_count,
        config.run.output_dir.display()
    );
    Ok(())
}

fn load_table(config: &LoadedConfig) -> Result<SbsTable, CliError> {
    let path = config.run.output_dir.join("sbs_timeseries.csv");
    if !path.exists() {
        return Err(CliError::usage(format!(
            "{} does not exist; run `sbs score` first",
            path.display()
        )));
    }
    read_timeseries_csv(&path, config.run.event.voting_day)
        .map_err(|e| CliError::compute(format!("forecast: {e}")))
}

fn clamp_policy(config: &LoadedConfig, no_clamp: bool) -> ClampPolicy {
    if no_clamp || !config.run.clamp_scores {
        ClampPolicy::Error
    } else {
        ClampPolicy::Floor
    }
}

/// Forecast every requested basis at one lag week.
fn forecasts_at_lag(
    config: &LoadedConfig,
    table: &SbsTable,
    lag: i64,
    basis_filter: Option<&str>,
    clamp: ClampPolicy,
) -> Result<(WeekWindow, BTreeMap<String, ForecastShare>), CliError> {
    let Some((week, _)) = table.at_lag(lag) else {
        let available: Vec<String> = table
            .scored_weeks()
            .map(|w| format!("{} (lag {})", w.label(), w.lag))
            .collect();
        return Err(CliError::empty(format!(
            "no scored week at lag {lag}; available: {}",
            available.join(", ")
        )));
    };
    let week = *week;

    let registry = BasisRegistry::with_defaults();
    if let Some(name) = basis_filter {
        if registry.get(name).is_none() {
            return Err(CliError::usage(format!(
                "unknown basis {name:?}; available: {}",
                registry.names().join(", ")
            )));
        }
    }
    let tracked: BTreeSet<String> = config.run.event.tracked_brands.iter().cloned().collect();
    let polls = config.run.event.poll_records.clone().unwrap_or_default();
    let ctx = BasisContext {
        table,
        tracked: &tracked,
        polls: &polls,
        clamp,
    };

    let mut forecasts = BTreeMap::new();
    for basis in registry.iter() {
        if basis_filter.is_some_and(|name| name != basis.name()) {
            continue;
        }
        let share = basis
            .forecast(&ctx, &week)
            .map_err(|e| CliError::compute(format!("forecast ({}): {e}", basis.name())))?;
        if let Some(share) = share {
            forecasts.insert(basis.name().to_string(), share);
        }
    }
    Ok((week, forecasts))
}

fn evaluations_for(
    config: &LoadedConfig,
    forecasts: &BTreeMap<String, ForecastShare>,
) -> Result<BTreeMap<String, EvalReport>, CliError> {
    let Some(official) = &config.run.official_results else {
        return Ok(BTreeMap::new());
    };
    let tracked: BTreeSet<String> = config.run.event.tracked_brands.iter().cloned().collect();
    let outcome = adjust_actuals(official, &tracked)
        .map_err(|e| CliError::compute(format!("evaluate: {e}")))?;
    let mut evaluations = BTreeMap::new();
    for (name, forecast) in forecasts {
        let report = evaluate(&outcome, forecast)
            .map_err(|e| CliError::compute(format!("evaluate ({name}): {e}")))?;
        evaluations.insert(name.clone(), report);
    }
    Ok(evaluations)
}

/// `sbs forecast`: emit per-basis shares at the lag week, plus evaluation
/// reports when official results are configured.
pub fn run_forecast(
    config: &LoadedConfig,
    lag: i64,
    basis_filter: Option<&str>,
    no_clamp: bool,
) -> Result<(), CliError> {
    ensure_out_dir(config)?;
    let table = load_table(config)?;
    let clamp = clamp_policy(config, no_clamp);
    let (week, forecasts) = forecasts_at_lag(config, &table, lag, basis_filter, clamp)?;
    if forecasts.is_empty() {
        return Err(CliError::empty(format!(
            "no basis produced a forecast for {} (lag {lag})",
            week.label()
        )));
    }
    let evaluations = evaluations_for(config, &forecasts)?;
    let report = ForecastReport {
        parameters: Some(ReportParameters::from_config(
            config,
            clamp == ClampPolicy::Floor,
        )),
        week,
        lag,
        forecasts,
        evaluations,
    };
    write_forecast_report(&config.run.output_dir, &report)?;
    println!(
        "forecast for {} (lag {lag}): {} bases -> {}",
        week.label(),
        report.forecasts.len(),
        config.run.output_dir.display()
    );
    Ok(())
}

/// `sbs evaluate`: re-evaluate an existing forecast report against the
/// configured official results.
pub fn run_evaluate(config: &LoadedConfig, lag: i64) -> Result<(), CliError> {
    if config.run.official_results.is_none() {
        return Err(CliError::usage(
            "evaluate requires official_results in the config",
        ));
    }
    let mut report = read_forecast_report(&config.run.output_dir, lag)?;
    report.evaluations = evaluations_for(config, &report.forecasts)?;
    report.parameters = Some(ReportParameters::from_config(
        config,
        config.run.clamp_scores,
    ));
    write_forecast_report(&config.run.output_dir, &report)?;
    for (basis, eval) in &report.evaluations {
        write_eval_csv(&config.run.output_dir, lag, basis, eval)?;
        println!(
            "{basis}: MAPE {:.2}% MAE {:.2} pp, {} misranked",
            eval.mape * 100.0,
            eval.mae_pp,
            eval.n_misranked
        );
    }
    Ok(())
}

/// `sbs plot-data`: long-format per-brand series for external plotting.
pub fn run_plot_data(config: &LoadedConfig) -> Result<(), CliError> {
    ensure_out_dir(config)?;
    let table = load_table(config)?;
    if table.scored_weeks().next().is_none() {
        return Err(CliError::empty("time series has no scored weeks"));
    }
    let path = config.run.output_dir.join("plot_data.csv");
    write_plot_csv(&table, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
