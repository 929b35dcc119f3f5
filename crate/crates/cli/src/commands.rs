use ccn_agg::catalog::DENSE_LIMIT;
use ccn_agg::sim::{run_simulation, SimStats};
use ccn_agg::{analyze_tree, system_load, AnalysisOptions, TreeScenario, TreeSolution};
use rayon::prelude::*;

use crate::error::CliError;
use crate::scenario::ScenarioFile;
use crate::table::{ResultRow, ResultTable};

/// z-value of a two-sided 95% interval.
const Z95: f64 = 1.96;

/// Settings shared by all subcommands; `None` defers to the scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub analysis: AnalysisOptions,
    pub seed: Option<u64>,
    pub replications: Option<u32>,
}

fn model_row(sweep: Option<f64>, level: u32, metric: &str, value: f64) -> ResultRow {
    ResultRow { sweep_value: sweep, level, metric: metric.into(), model: Some(value), sim: None, sim_halfwidth: None }
}

fn model_rows(sweep: Option<f64>, tree: &TreeScenario, sol: &TreeSolution) -> Result<Vec<ResultRow>, CliError> {
    let mut rows = vec![
        model_row(sweep, 0, "cumulative_aggregation_percentage", sol.cumulative_aggregation_percentage()),
        model_row(sweep, 0, "response_time", sol.consumer_response_time()),
        model_row(sweep, 0, "system_load", system_load(tree.consumer_rate, tree.link_rtt)),
        model_row(sweep, 0, "iterations", sol.iterations as f64),
    ];
    for lv in &sol.levels {
        let l = lv.level;
        rows.extend([
            model_row(sweep, l, "characteristic_time", lv.characteristic_time),
            model_row(sweep, l, "hit_probability", lv.hit_probability()),
            model_row(sweep, l, "aggregation_probability", lv.aggregation_probability()),
            model_row(sweep, l, "aggregation_percentage", sol.aggregation_percentage(l)?),
            model_row(sweep, l, "response_time", lv.response_time),
        ]);
    }
    Ok(rows)
}

fn analyze_point(s: &ScenarioFile, sweep: Option<f64>, opts: &RunOptions) -> Result<Vec<ResultRow>, CliError> {
    let tree = s.tree_scenario()?;
    let sol = analyze_tree(&tree, &opts.analysis)?;
    model_rows(sweep, &tree, &sol)
}

/// Sample mean and 95% half-width; the half-width needs two samples.
fn mean_halfwidth(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some(Z95 * (var / n).sqrt()))
}

fn sim_metrics(stats: &SimStats) -> Vec<(u32, &'static str, Option<f64>)> {
    let mut out = vec![
        (0, "cumulative_aggregation_percentage", Some(stats.cumulative_aggregation_percentage())),
        (0, "response_time", stats.mean_response_time),
    ];
    for lv in &stats.levels {
        out.extend([
            (lv.level, "hit_probability", Some(lv.hit_probability)),
            (lv.level, "aggregation_probability", Some(lv.aggregation_probability)),
            (lv.level, "aggregation_percentage", Some(lv.aggregation_percentage)),
        ]);
    }
    out
}

fn simulate_point(s: &ScenarioFile, sweep: Option<f64>, opts: &RunOptions) -> Result<Vec<ResultRow>, CliError> {
    let section = s.sim_section();
    let seed = opts.seed.unwrap_or(section.seed);
    let replications = opts.replications.unwrap_or(section.replications).max(1);
    if s.n_objects > DENSE_LIMIT {
        return Err(CliError::Validation(vec![format!("simulation needs n_objects <= {DENSE_LIMIT}, got {}", s.n_objects)]));
    }
    let tree = s.tree_scenario()?;
    let runs = (0..replications)
        .into_par_iter()
        .map(|r| {
            let cfg = s.sim_config(tree.clone(), seed.wrapping_add(r as u64))?;
            Ok(run_simulation(&cfg)?)
        })
        .collect::<Result<Vec<SimStats>, CliError>>()?;

    let keys = sim_metrics(&runs[0]);
    let mut rows = Vec::with_capacity(keys.len());
    for (i, (level, metric, _)) in keys.iter().enumerate() {
        let samples: Vec<f64> = runs.iter().filter_map(|st| sim_metrics(st)[i].2).collect();
        if samples.is_empty() {
            continue;
        }
        let (mean, hw) = mean_halfwidth(&samples);
        rows.push(ResultRow {
            sweep_value: sweep,
            level: *level,
            metric: (*metric).into(),
            model: None,
            sim: Some(mean),
            sim_halfwidth: hw,
        });
    }
    Ok(rows)
}

/// Joins simulation rows onto model rows with the same key.
fn merge(mut model: Vec<ResultRow>, sim: Vec<ResultRow>) -> Vec<ResultRow> {
    for s in sim {
        match model.iter_mut().find(|m| m.level == s.level && m.metric == s.metric) {
            Some(m) => {
                m.sim = s.sim;
                m.sim_halfwidth = s.sim_halfwidth;
            }
            None => model.push(s),
        }
    }
    model
}

fn compare_point(s: &ScenarioFile, sweep: Option<f64>, opts: &RunOptions) -> Result<Vec<ResultRow>, CliError> {
    let model = analyze_point(s, sweep, opts)?;
    let sim = simulate_point(s, sweep, opts)?;
    Ok(merge(model, sim))
}

/// Model metrics per level plus network-wide rows at level 0.
pub fn cmd_analyze(s: &ScenarioFile, opts: &RunOptions) -> Result<ResultTable, CliError> {
    ResultTable::from_rows(analyze_point(s, None, opts)?)
}

/// Mean and 95% half-width of simulated metrics over replications.
pub fn cmd_simulate(s: &ScenarioFile, opts: &RunOptions) -> Result<ResultTable, CliError> {
    ResultTable::from_rows(simulate_point(s, None, opts)?)
}

/// Model and simulation side by side.
pub fn cmd_compare(s: &ScenarioFile, opts: &RunOptions) -> Result<ResultTable, CliError> {
    ResultTable::from_rows(compare_point(s, None, opts)?)
}

/// Evaluates every sweep point; simulates too when the scenario has a
/// `[sim]` table. Rows are ordered by sweep value, then level.
pub fn cmd_sweep(s: &ScenarioFile, opts: &RunOptions) -> Result<ResultTable, CliError> {
    let point = |file: &ScenarioFile, value: Option<f64>| {
        if file.sim.is_some() {
            compare_point(file, value, opts)
        } else {
            analyze_point(file, value, opts)
        }
    };
    let Some(sweep) = s.sweep.as_ref().filter(|w| !w.values.is_empty()) else {
        return ResultTable::from_rows(point(s, None)?);
    };
    let mut values = sweep.values.clone();
    values.sort_by(f64::total_cmp);
    let files = values
        .iter()
        .map(|&v| s.with_parameter(sweep.parameter, v))
        .collect::<Result<Vec<_>, _>>()?;

    // Large catalogs hold several GB of state per point; run those one at a time.
    let run = |(file, &v): (&ScenarioFile, &f64)| point(file, Some(v));
    let per_point: Vec<Vec<ResultRow>> = if s.n_objects <= DENSE_LIMIT {
        files.par_iter().zip(&values).map(run).collect::<Result<_, _>>()?
    } else {
        files.iter().zip(&values).map(run).collect::<Result<_, _>>()?
    };
    let mut rows: Vec<ResultRow> = per_point.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        a.sweep_value.unwrap_or(f64::NAN).total_cmp(&b.sweep_value.unwrap_or(f64::NAN)).then(a.level.cmp(&b.level))
    });
    ResultTable::from_rows(rows)
}

/// Human-readable remarks about how the scenario was resolved.
pub fn notes(s: &ScenarioFile) -> Vec<String> {
    let plan = s.capacity_plan();
    let mut out = Vec::new();
    if plan.remainder > 0 {
        out.push(format!(
            "caching budget leaves {} objects unassigned after per-node rounding (capacities {:?})",
            plan.remainder, plan.capacities
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Sweep, SweepParameter};

    fn small() -> ScenarioFile {
        ScenarioFile::from_toml(
            "n_objects = 100\nalpha = 1.0\nconsumer_rate = 100.0\nlink_rtt = 0.02\ncaching_budget = 11100\n\
             [sim]\ntotal_requests = 200000\nreplications = 3\n",
        )
        .unwrap()
    }

    #[test]
    fn analyze_emits_every_level() {
        let t = cmd_analyze(&small(), &RunOptions::default()).unwrap();
        for l in 1..=3 {
            assert!(t.get(None, l, "aggregation_probability").unwrap().model.unwrap() > 0.0);
            assert_eq!(t.get(None, l, "characteristic_time").unwrap().sim, None);
        }
        let load = t.get(None, 0, "system_load").unwrap().model.unwrap();
        assert!((load - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_delay_has_no_aggregation_in_either_column() {
        let s = ScenarioFile { link_rtt: 0.0, ..small() };
        let t = cmd_compare(&s, &RunOptions::default()).unwrap();
        for r in t.rows().iter().filter(|r| r.metric.starts_with("aggregation") || r.metric.starts_with("cumulative")) {
            assert_eq!(r.model, Some(0.0), "{r:?}");
            assert_eq!(r.sim, Some(0.0), "{r:?}");
        }
    }

    #[test]
    fn compare_matches_separate_runs() {
        let s = small();
        let opts = RunOptions { seed: Some(9), ..Default::default() };
        let (a, m, c) = (cmd_analyze(&s, &opts).unwrap(), cmd_simulate(&s, &opts).unwrap(), cmd_compare(&s, &opts).unwrap());
        for r in c.rows() {
            assert_eq!(r.model, a.get(None, r.level, &r.metric).and_then(|x| x.model));
            let sim = m.get(None, r.level, &r.metric);
            assert_eq!(r.sim, sim.and_then(|x| x.sim));
            assert_eq!(r.sim_halfwidth, sim.and_then(|x| x.sim_halfwidth));
        }
        assert!(c.get(None, 2, "aggregation_probability").unwrap().sim_halfwidth.unwrap() > 0.0);
    }

    #[test]
    fn sweep_is_ordered_and_empty_sweep_is_one_point() {
        let mut s = small();
        s.sim = None;
        s.sweep = Some(Sweep { parameter: SweepParameter::Delta, values: vec![0.06, 0.02, 0.04] });
        let t = cmd_sweep(&s, &RunOptions::default()).unwrap();
        let values: Vec<f64> = t.rows().iter().map(|r| r.sweep_value.unwrap()).collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let a = |v: f64| t.get(Some(v), 3, "aggregation_probability").unwrap().model.unwrap();
        assert!(a(0.02) < a(0.04) && a(0.04) < a(0.06));

        s.sweep = Some(Sweep { parameter: SweepParameter::Delta, values: vec![] });
        let single = cmd_sweep(&s, &RunOptions::default()).unwrap();
        assert_eq!(single, cmd_analyze(&s, &RunOptions::default()).unwrap());
    }

    #[test]
    fn mean_and_halfwidth() {
        assert_eq!(mean_halfwidth(&[2.0]), (2.0, None));
        let (m, hw) = mean_halfwidth(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((hw.unwrap() - 1.96).abs() < 1e-12);
    }

    #[test]
    fn unconverged_analysis_is_an_error() {
        let opts = RunOptions {
            analysis: AnalysisOptions { max_iterations: 1, ..Default::default() },
            ..Default::default()
        };
        let err = cmd_analyze(&small(), &opts).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
