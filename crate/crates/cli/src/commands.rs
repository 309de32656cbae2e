use std::path::{Path, PathBuf};

use serde::Serialize;

use rulegraph::learner::cv::{cross_validate, default_grid, CvConfig};
use rulegraph::learner::importance::{
    gini_importance, graph_importance, permutation_importance, ImportanceMethod, ImportanceReport, RuleSetPredictor,
};
use rulegraph::learner::selection::topk_evaluation;
use rulegraph::learner::stability::{stability_report, StabilityDesign};
use rulegraph::learner::tree::{DecisionTree, TreeParams};
use rulegraph::synth::{self, ManifestEntry, SynthSpec};
use rulegraph::{
    build_graph, export_graph, graph_distance, load_csv, parse_rules, rules_from_json, rules_to_json, tree_to_rules,
    Dataset, ExportOptions, FeatureGraph, GraphFormat, LoadOptions, MetricTags, RuleSet,
};

use crate::output::{csv_field, emit, read_file, to_json, usage, write_file, CliResult, Failure};
use crate::{Cli, Command, DataArgs, Format, MetricArgs};

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Train { data, grid, folds, inner_folds } => train(cli, data, grid.as_deref(), *folds, *inner_folds),
        Command::Graph { data, rules, class, omit_self_edges, metrics } => {
            graph(cli, data, rules, class.as_deref(), *omit_self_edges, metrics)
        }
        Command::Compare { data, rules, class, metrics } => compare(cli, data, rules, class.as_deref(), metrics),
        Command::Importance { data, rules, model, method, topk, repeats } => {
            importance(cli, data, rules.as_deref(), model.as_deref(), method, topk, *repeats)
        }
        Command::Synth { config, preset } => synth_cmd(cli, config.as_deref(), preset.as_deref()),
        Command::Stability { data, depths, folds, methods } => stability(cli, data, depths.as_deref(), *folds, methods),
    }
}

fn seed(cli: &Cli) -> u64 {
    cli.seed.unwrap_or(0)
}

fn pick_format(cli: &Cli, allowed: &[Format], default: Format, cmd: &str) -> CliResult<Format> {
    let f = cli.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        let names: Vec<String> = allowed.iter().map(|f| format!("{f:?}").to_lowercase()).collect();
        usage(format!("{cmd} supports --format {}", names.join(", ")))
    }
}

fn load(data: &DataArgs) -> CliResult<Dataset> {
    let opts = LoadOptions { strict: data.strict, ..Default::default() };
    let (ds, report) =
        load_csv(&data.data, &data.target, &opts).map_err(|e| Failure::Run(format!("{}: {e}", data.data.display())))?;
    if report.dropped_rows > 0 {
        log::warn!("{}: dropped {} row(s) with missing values", data.data.display(), report.dropped_rows);
    }
    Ok(ds)
}

fn load_rules(path: &Path) -> CliResult<RuleSet> {
    let text = read_file(path)?;
    let parsed = if path.extension().is_some_and(|e| e == "json") { rules_from_json(&text) } else { parse_rules(&text) };
    parsed.map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

fn metric_tags(m: &MetricArgs) -> CliResult<MetricTags> {
    let feature = m.feature_metric.parse().map_err(|e: rulegraph::Error| Failure::Usage(e.to_string()))?;
    let rule = m.rule_metric.parse().map_err(|e: rulegraph::Error| Failure::Usage(e.to_string()))?;
    Ok(MetricTags { feature, rule })
}

fn out_dir(cli: &Cli, cmd: &str) -> CliResult<PathBuf> {
    let Some(dir) = cli.out.clone() else {
        return usage(format!("{cmd} requires --out <DIR>"));
    };
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Run(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

/// Parses "depth=3,4,none;leaf=1,5" into the cartesian grid.
fn parse_grid(spec: &str) -> CliResult<Vec<TreeParams>> {
    let mut depths: Vec<Option<usize>> = vec![Some(3), Some(4), Some(5), Some(6), Some(8), None];
    let mut leaves: Vec<usize> = vec![1, 5, 10];
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((key, values)) = part.split_once('=') else {
            return usage(format!("--grid: expected key=values, found '{part}'"));
        };
        let values: Vec<&str> = values.split(',').map(str::trim).collect();
        match key.trim() {
            "depth" => {
                depths = values
                    .iter()
                    .map(|v| match *v {
                        "none" => Ok(None),
                        v => v.parse().map(Some).map_err(|_| Failure::Usage(format!("--grid: bad depth '{v}'"))),
                    })
                    .collect::<CliResult<_>>()?
            }
            "leaf" => {
                leaves = values
                    .iter()
                    .map(|v| v.parse().map_err(|_| Failure::Usage(format!("--grid: bad leaf size '{v}'"))))
                    .collect::<CliResult<_>>()?
            }
            other => return usage(format!("--grid: unknown key '{other}' (expected depth or leaf)")),
        }
    }
    if depths.is_empty() || leaves.is_empty() || leaves.contains(&0) {
        return usage("--grid: empty value list or zero leaf size");
    }
    Ok(depths
        .iter()
        .flat_map(|&d| leaves.iter().map(move |&l| TreeParams { max_depth: d, min_samples_leaf: l, min_impurity_decrease: 0.0 }))
        .collect())
}

#[derive(Serialize)]
struct FoldSummary {
    fold: usize,
    params: TreeParams,
    inner_accuracy: f64,
    accuracy: f64,
    n_train: usize,
    n_test: usize,
    n_rules: usize,
    rules_file: String,
    rules_json_file: String,
    model_file: String,
}

#[derive(Serialize)]
struct TrainSummary {
    data: String,
    target: String,
    seed: u64,
    outer_folds: usize,
    inner_folds: usize,
    grid_size: usize,
    mean_accuracy: f64,
    folds: Vec<FoldSummary>,
}

fn train(cli: &Cli, data: &DataArgs, grid: Option<&str>, folds: usize, inner_folds: usize) -> CliResult<()> {
    let dir = out_dir(cli, "train")?;
    let ds = load(data)?;
    let grid = match grid {
        Some(spec) => parse_grid(spec)?,
        None => default_grid(),
    };
    let cfg = CvConfig { grid, outer_folds: folds, inner_folds, seed: seed(cli) };
    let cv = cross_validate(&ds, &cfg)?;
    let mut summaries = Vec::new();
    for f in &cv.folds {
        let stem = format!("fold{}", f.fold + 1);
        let (rules_file, rules_json_file, model_file) =
            (format!("{stem}.rules"), format!("{stem}.rules.json"), format!("{stem}.tree.json"));
        write_file(&dir.join(&rules_file), &f.rules.to_dsl())?;
        write_file(&dir.join(&rules_json_file), &rules_to_json(&f.rules))?;
        write_file(&dir.join(&model_file), &f.tree.to_json())?;
        summaries.push(FoldSummary {
            fold: f.fold + 1,
            params: f.params,
            inner_accuracy: f.inner_accuracy,
            accuracy: f.accuracy,
            n_train: f.train.len(),
            n_test: f.test.len(),
            n_rules: f.rules.len(),
            rules_file,
            rules_json_file,
            model_file,
        });
    }
    let summary = TrainSummary {
        data: data.data.display().to_string(),
        target: data.target.clone(),
        seed: cfg.seed,
        outer_folds: cfg.outer_folds,
        inner_folds: cfg.inner_folds,
        grid_size: cfg.grid.len(),
        mean_accuracy: cv.mean_accuracy(),
        folds: summaries,
    };
    write_file(&dir.join("summary.json"), &to_json(&summary))?;
    if !cli.quiet {
        println!("{:<6}{:>7}{:>6}{:>8}{:>10}", "fold", "depth", "leaf", "rules", "accuracy");
        for f in &summary.folds {
            let depth = f.params.max_depth.map_or("none".to_string(), |d| d.to_string());
            println!("{:<6}{:>7}{:>6}{:>8}{:>10.4}", f.fold, depth, f.params.min_samples_leaf, f.n_rules, f.accuracy);
        }
        println!("mean accuracy {:.4}", summary.mean_accuracy);
    }
    Ok(())
}

fn ranking_text(report: &ImportanceReport) -> String {
    let mut s = format!("{:<6}{:<24}{:>12}\n", "rank", "feature", "score");
    for (pos, &f) in report.ranking.iter().enumerate() {
        s.push_str(&format!("{:<6}{:<24}{:>12.6}\n", pos + 1, report.feature_names[f], report.scores[f]));
    }
    s
}

fn graph(
    cli: &Cli,
    data: &DataArgs,
    rules: &Path,
    class: Option<&str>,
    omit_self_edges: bool,
    metrics: &MetricArgs,
) -> CliResult<()> {
    let format = match pick_format(cli, &[Format::Dot, Format::Graphml, Format::Json, Format::Csv], Format::Dot, "graph")? {
        Format::Dot => GraphFormat::Dot,
        Format::Graphml => GraphFormat::GraphMl,
        Format::Json => GraphFormat::Json,
        _ => GraphFormat::Csv,
    };
    let ds = load(data)?;
    let rs = load_rules(rules)?;
    let g = build_graph(&ds, &rs, class, metric_tags(metrics)?)?;
    if g.zero {
        log::warn!("the graph has no weight: no rule carries positive relevance");
    }
    let text = export_graph(&g, format, ExportOptions { omit_self_edges })?;
    emit(cli.out.as_deref(), &text)?;
    if !cli.quiet {
        let ranking = ranking_text(&graph_importance(&g));
        if cli.out.is_some() {
            print!("{ranking}");
        } else {
            eprint!("{ranking}");
        }
    }
    Ok(())
}

/// Short labels for rule files: file names, or full paths when names clash.
fn labels(paths: &[PathBuf]) -> Vec<String> {
    let names: Vec<String> = paths
        .iter()
        .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned()))
        .collect();
    let unique = names.iter().enumerate().all(|(i, n)| !names[..i].contains(n));
    if unique {
        names
    } else {
        paths.iter().map(|p| p.display().to_string()).collect()
    }
}

#[derive(Serialize)]
struct DistanceMatrix {
    labels: Vec<String>,
    distances: Vec<Vec<f64>>,
}

fn compare(cli: &Cli, data: &DataArgs, rules: &[PathBuf], class: Option<&str>, metrics: &MetricArgs) -> CliResult<()> {
    let format = pick_format(cli, &[Format::Csv, Format::Json, Format::Text], Format::Csv, "compare")?;
    let ds = load(data)?;
    let tags = metric_tags(metrics)?;
    let graphs: Vec<FeatureGraph> = rules
        .iter()
        .map(|p| {
            let rs = load_rules(p)?;
            build_graph(&ds, &rs, class, tags).map_err(|e| Failure::Run(format!("{}: {e}", p.display())))
        })
        .collect::<CliResult<_>>()?;
    let k = graphs.len();
    let mut distances = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let d = graph_distance(&graphs[i], &graphs[j])?;
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    let m = DistanceMatrix { labels: labels(rules), distances };
    let text = match format {
        Format::Json => to_json(&m),
        Format::Text => {
            let width = m.labels.iter().map(|l| l.len()).max().unwrap_or(0).max(10) + 2;
            let mut s = format!("{:<width$}", "");
            for l in &m.labels {
                s.push_str(&format!("{l:>width$}"));
            }
            s.push('\n');
            for (l, row) in m.labels.iter().zip(&m.distances) {
                s.push_str(&format!("{l:<width$}"));
                for d in row {
                    s.push_str(&format!("{d:>width$.4}"));
                }
                s.push('\n');
            }
            s
        }
        _ => {
            let mut s = String::from("ruleset");
            for l in &m.labels {
                s.push(',');
                s.push_str(&csv_field(l));
            }
            s.push('\n');
            for (l, row) in m.labels.iter().zip(&m.distances) {
                s.push_str(&csv_field(l));
                for d in row {
                    s.push_str(&format!(",{d}"));
                }
                s.push('\n');
            }
            s
        }
    };
    emit(cli.out.as_deref(), &text)
}

#[derive(Serialize)]
struct ImportanceOutput<'a> {
    importance: &'a ImportanceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    topk: Option<&'a rulegraph::learner::selection::TopKReport>,
}

fn importance(
    cli: &Cli,
    data: &DataArgs,
    rules: Option<&Path>,
    model: Option<&Path>,
    method: &str,
    topk: &[usize],
    repeats: usize,
) -> CliResult<()> {
    let format = pick_format(cli, &[Format::Text, Format::Csv, Format::Json], Format::Text, "importance")?;
    let method: ImportanceMethod = method.parse().map_err(|e: rulegraph::Error| Failure::Usage(e.to_string()))?;
    if topk.contains(&0) {
        return usage("--topk values must be at least 1");
    }
    let ds = load(data)?;
    let tree: Option<DecisionTree> = match model {
        Some(p) => Some(DecisionTree::from_json(&read_file(p)?).map_err(|e| Failure::Run(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let rs: Option<RuleSet> = match (rules, &tree) {
        (Some(p), _) => Some(load_rules(p)?),
        (None, Some(t)) => Some(tree_to_rules(t)),
        (None, None) => return usage("importance requires --rules <FILE> or --model <FILE>"),
    };
    if let Some(t) = &tree {
        if t.feature_names != ds.feature_names() {
            return Err(Failure::Run(format!(
                "model features [{}] do not match dataset features [{}]",
                t.feature_names.join(", "),
                ds.feature_names().join(", ")
            )));
        }
    }
    let report = match method {
        ImportanceMethod::GraphCentrality => {
            let rs = rs.as_ref().expect("rules or model present");
            graph_importance(&build_graph(&ds, rs, None, MetricTags::default())?)
        }
        ImportanceMethod::Gini => match &tree {
            Some(t) => gini_importance(t),
            None => return usage("gini importance requires a tree: pass --model <FILE>"),
        },
        ImportanceMethod::Permutation => match &tree {
            Some(t) => permutation_importance(t, &ds, repeats, seed(cli))?,
            None => {
                let predictor = RuleSetPredictor::fit(rs.as_ref().expect("rules present"), &ds)?;
                permutation_importance(&predictor, &ds, repeats, seed(cli))?
            }
        },
    };
    let topk_report = if topk.is_empty() {
        None
    } else {
        let cfg = CvConfig { seed: seed(cli), ..Default::default() };
        Some(topk_evaluation(&ds, &[method], topk, &cfg)?)
    };
    let text = match format {
        Format::Json => to_json(&ImportanceOutput { importance: &report, topk: topk_report.as_ref() }),
        Format::Csv => {
            let mut s = report.to_csv()?;
            if let Some(t) = &topk_report {
                s.push_str("\nmethod,k,k_used,mean_accuracy\n");
                for r in &t.rows {
                    s.push_str(&format!("{},{},{},{}\n", r.method, r.k, r.k_used, r.mean_accuracy));
                }
                s.push_str(&format!("all-features,,,{}\n", t.full_feature_accuracy));
            }
            s
        }
        _ => {
            let mut s = format!("{} importance\n", report.method);
            s.push_str(&ranking_text(&report));
            if let Some(t) = &topk_report {
                s.push_str("\ntop-k evaluation (cross-validated accuracy)\n");
                s.push_str(&t.to_text());
            }
            s
        }
    };
    emit(cli.out.as_deref(), &text)
}

fn write_dataset(dir: &Path, name: &str, ds: &Dataset) -> CliResult<String> {
    let file = format!("{name}.csv");
    let mut buf = Vec::new();
    ds.write_csv(&mut buf, synth::TARGET_NAME)?;
    std::fs::write(dir.join(&file), buf).map_err(|e| Failure::Run(format!("{}: {e}", dir.join(&file).display())))?;
    Ok(file)
}

fn synth_cmd(cli: &Cli, config: Option<&Path>, preset: Option<&str>) -> CliResult<()> {
    let dir = out_dir(cli, "synth")?;
    let mut manifest = Vec::new();
    match (config, preset) {
        (Some(path), _) => {
            let mut spec: SynthSpec = serde_json::from_str(&read_file(path)?)
                .map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let ds = synth::generate(&spec)?;
            let stem = path.file_stem().map_or("synth".into(), |s| s.to_string_lossy().into_owned());
            let file = write_dataset(&dir, &stem, &ds)?;
            let n_relevant = spec.relevant.len();
            let has = |m| spec.relevant.iter().any(|r| r.mode == m);
            let mode = match (has(synth::FeatureMode::Independent), has(synth::FeatureMode::Combined)) {
                (true, true) => synth::SuiteMode::Mixed,
                (false, true) => synth::SuiteMode::Combined,
                _ => synth::SuiteMode::Independent,
            };
            manifest.push(ManifestEntry { file, mode, n_relevant, spec });
        }
        _ => {
            for entry in synth::preset_suite(seed(cli))? {
                let file = write_dataset(&dir, &entry.name, &entry.dataset)?;
                manifest.push(ManifestEntry { file, mode: entry.mode, n_relevant: entry.n_relevant, spec: entry.spec });
            }
        }
    }
    write_file(&dir.join("manifest.json"), &to_json(&manifest))?;
    if !cli.quiet {
        println!("wrote {} dataset(s) and manifest.json to {}", manifest.len(), dir.display());
    }
    Ok(())
}

/// Accepts "3..8" (inclusive) or "3,5,8".
fn parse_depths(spec: &str) -> CliResult<Vec<usize>> {
    let bad = || Failure::Usage(format!("--depths: expected a range like 3..8 or a list like 3,5,8, found '{spec}'"));
    if let Some((a, b)) = spec.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect()
}

fn stability(cli: &Cli, data: &DataArgs, depths: Option<&str>, folds: Option<usize>, methods: &[String]) -> CliResult<()> {
    let format = pick_format(cli, &[Format::Text, Format::Csv, Format::Json], Format::Text, "stability")?;
    let methods: Vec<ImportanceMethod> = methods
        .iter()
        .map(|m| m.parse().map_err(|e: rulegraph::Error| Failure::Usage(e.to_string())))
        .collect::<CliResult<_>>()?;
    let design = match (depths, folds) {
        (Some(d), _) => StabilityDesign::Depths(parse_depths(d)?),
        (None, Some(k)) => StabilityDesign::Folds(k),
        (None, None) => return usage("stability requires --depths or --folds"),
    };
    let ds = load(data)?;
    let report = stability_report(&ds, &design, &methods, seed(cli))?;
    let text = match format {
        Format::Json => to_json(&report),
        Format::Csv => report.to_csv(),
        _ => report.to_text(),
    };
    emit(cli.out.as_deref(), &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("").unwrap().len(), 18);
        let g = parse_grid("depth=2,none;leaf=3").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[1].max_depth, None);
        assert_eq!(g[0].min_samples_leaf, 3);
        assert!(parse_grid("depth=x").is_err());
        assert!(parse_grid("width=3").is_err());
        assert!(parse_grid("leaf=0").is_err());
    }

    #[test]
    fn depth_parsing() {
        assert_eq!(parse_depths("3..8").unwrap(), vec![3, 4, 5, 6, 7, 8]);
        assert_eq!(parse_depths("3..=4").unwrap(), vec![3, 4]);
        assert_eq!(parse_depths("2,5").unwrap(), vec![2, 5]);
        assert!(parse_depths("8..3").is_err());
        assert!(parse_depths("a").is_err());
    }

    #[test]
    fn label_disambiguation() {
        let a = labels(&[PathBuf::from("x/a.rules"), PathBuf::from("b.rules")]);
        assert_eq!(a, vec!["a.rules", "b.rules"]);
        let b = labels(&[PathBuf::from("x/a.rules"), PathBuf::from("y/a.rules")]);
        assert_eq!(b, vec!["x/a.rules", "y/a.rules"]);
    }
}
