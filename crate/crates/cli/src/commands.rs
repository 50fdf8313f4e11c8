use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use cfshap::background::seeded_sample;
use cfshap::model::{select_threshold_roc, sigmoid, ThresholdObjective};
use cfshap::recourse::{
    plot_csv, run_benchmark, BenchmarkConfig, DirectionConvention, Method, Metric,
};
use cfshap::timing::{explanation_latency, DEFAULT_REPEATS};
use cfshap::{
    parse_model_json, to_native_json, BackgroundSpec, Dataset, Error, Explainer, Explanation,
    QuantileTransform, TreeEnsemble,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{MethodEntry, RunConfig};
use crate::{BenchArgs, Command, CommonArgs, EvalArgs, ExplainArgs, Failure, ThresholdArgs};

type CmdResult<T> = std::result::Result<T, Failure>;

const DEFAULT_EXPLAIN_METHODS: &[&str] = &["knn:K=100"];
const DEFAULT_EVAL_METHODS: &[&str] = &["knn:K=100", "train:n=100", "dlab:n=100", "dpred:n=100"];
const DEFAULT_BENCH_METHODS: &[&str] = &["knn:K=100", "dpred:n=100"];
const DEFAULT_BENCH_SAMPLES: usize = 100;

pub fn execute(command: Command, stdout: &mut dyn Write) -> CmdResult<()> {
    match command {
        Command::Explain(args) => explain(args, stdout),
        Command::Eval(args) => eval(args, stdout),
        Command::Bench(args) => bench(args, stdout),
        Command::Threshold(args) => threshold(args, stdout),
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Error::InvalidSpec(message.into()).into()
}

fn io_error(path: &Path, source: std::io::Error) -> Failure {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
    .into()
}

fn write_file(path: &Path, contents: &str) -> CmdResult<()> {
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

/// Configuration with flags applied on top of the optional config file.
struct Resolved {
    config: RunConfig,
    common: CommonArgs,
}

impl Resolved {
    fn new(common: CommonArgs) -> CmdResult<Self> {
        let config = match &common.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(Self { config, common })
    }

    fn model_path(&self) -> CmdResult<PathBuf> {
        self.common
            .model
            .clone()
            .or_else(|| self.config.model_path.clone())
            .ok_or_else(|| invalid("missing --model"))
    }

    fn train_path(&self) -> CmdResult<PathBuf> {
        self.common
            .train
            .clone()
            .or_else(|| self.config.train_csv.clone())
            .ok_or_else(|| invalid("missing --train"))
    }

    fn label(&self) -> Option<String> {
        self.common
            .label
            .clone()
            .or_else(|| self.config.label_column.clone())
    }

    fn threads(&self) -> Option<usize> {
        self.common.threads.or(self.config.threads)
    }

    fn methods(&self, defaults: &[&str]) -> CmdResult<Vec<Method>> {
        let entries: Vec<MethodEntry> = if !self.common.methods.is_empty() {
            self.common
                .methods
                .iter()
                .cloned()
                .map(MethodEntry::Spec)
                .collect()
        } else if let Some(m) = &self.config.methods {
            m.clone()
        } else {
            defaults
                .iter()
                .map(|s| MethodEntry::Spec(s.to_string()))
                .collect()
        };
        if entries.is_empty() {
            return Err(invalid("no methods given"));
        }
        let mut methods: Vec<Method> = Vec::with_capacity(entries.len());
        for entry in entries {
            let (name, spec) = match entry {
                MethodEntry::Spec(s) => (None, s),
                MethodEntry::Named { name, spec } => (Some(name), spec),
            };
            let spec: BackgroundSpec = spec.parse()?;
            let base = name.unwrap_or_else(|| spec.display_name());
            let mut name = base.clone();
            let mut copy = 2;
            while methods.iter().any(|m| m.name == name) {
                name = format!("{base} #{copy}");
                copy += 1;
            }
            methods.push(Method { name, spec });
        }
        Ok(methods)
    }

    fn load_model(&self) -> CmdResult<TreeEnsemble> {
        let path = self.model_path()?;
        let text = std::fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
        let mut e = parse_model_json(&text)
            .map_err(|err| Failure::from(err).at(path.display().to_string()))?;
        if let Some(b) = self.common.base_score.or(self.config.base_score) {
            e = e.with_base_score(b)?;
        }
        if let Some(t) = self.common.threshold.or(self.config.threshold) {
            e = e.with_threshold(t)?;
        }
        Ok(e)
    }

    fn load_csv(&self, path: &Path, label: Option<&str>) -> CmdResult<Dataset> {
        Dataset::load_csv(path, label)
            .map_err(|err| Failure::from(err).at(path.display().to_string()))
    }

    /// Model and training data, with the model widened to the data's width
    /// when its splits do not reach the last columns.
    fn load_inputs(&self) -> CmdResult<(TreeEnsemble, Dataset)> {
        let e = self.load_model()?;
        let train = self.load_csv(&self.train_path()?, self.label().as_deref())?;
        let e = if e.n_features() < train.n_features() {
            e.with_n_features(train.n_features())?
        } else {
            e
        };
        if e.n_features() != train.n_features() {
            return Err(Error::DimensionMismatch {
                expected: e.n_features(),
                found: train.n_features(),
            }
            .into());
        }
        Ok((e, train))
    }

    /// Loads a second CSV over the training columns; its label column is
    /// dropped when present.
    fn load_queries(&self, path: &Path, train: &Dataset) -> CmdResult<Dataset> {
        let queries = match self.label() {
            Some(label) => match Dataset::load_csv(path, Some(&label)) {
                Err(Error::MissingColumn(_)) => self.load_csv(path, None)?,
                other => other.map_err(|err| Failure::from(err).at(path.display().to_string()))?,
            },
            None => self.load_csv(path, None)?,
        };
        if queries.feature_names() != train.feature_names() {
            return Err(Failure::from(Error::DimensionMismatch {
                expected: train.n_features(),
                found: queries.n_features(),
            })
            .at(format!(
                "{}: columns differ from the training CSV",
                path.display()
            )));
        }
        Ok(queries)
    }
}

fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> CmdResult<R> {
    match threads {
        Some(0) => Err(invalid("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| invalid(format!("cannot start thread pool: {e}"))),
        None => Ok(f()),
    }
}

#[derive(Serialize)]
struct ExplainLine<'a> {
    query: usize,
    method: &'a str,
    #[serde(flatten)]
    explanation: &'a Explanation,
}

fn explain(args: ExplainArgs, stdout: &mut dyn Write) -> CmdResult<()> {
    let r = Resolved::new(args.common)?;
    let (e, train) = r.load_inputs()?;
    let methods = r.methods(DEFAULT_EXPLAIN_METHODS)?;
    let queries: Vec<(usize, Vec<f64>)> = match (args.row, &args.csv) {
        (Some(i), _) => {
            if i >= train.n_rows() {
                return Err(invalid(format!(
                    "--row {i} out of range (training set has {} rows)",
                    train.n_rows()
                )));
            }
            vec![(i, train.row(i).to_vec())]
        }
        (None, Some(path)) => {
            let q = r.load_queries(path, &train)?;
            q.rows().map(<[f64]>::to_vec).enumerate().collect()
        }
        (None, None) => return Err(invalid("give --row or --csv")),
    };
    let qt = QuantileTransform::fit(&train)?;
    let explainer = Explainer::new(&e, &train, &qt)?;

    let results: Vec<CmdResult<Vec<Explanation>>> = with_threads(r.threads(), || {
        queries
            .par_iter()
            .map(|(i, x)| {
                methods
                    .iter()
                    .map(|m| explainer.explain(x, &m.spec))
                    .collect::<cfshap::Result<Vec<_>>>()
                    .map_err(|err| Failure::from(err).at(format!("query {i}")))
            })
            .collect()
    })?;

    let mut text = String::new();
    for ((i, _), result) in queries.iter().zip(results) {
        for (method, explanation) in methods.iter().zip(result?) {
            let line = ExplainLine {
                query: *i,
                method: &method.name,
                explanation: &explanation,
            };
            text.push_str(&serde_json::to_string(&line).expect("explanation serializes"));
            text.push('\n');
        }
    }
    match &args.out {
        Some(path) => write_file(path, &text),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn parse_list<T: std::str::FromStr<Err = Error>>(values: &[String]) -> CmdResult<Vec<T>> {
    values
        .iter()
        .map(|v| v.parse::<T>().map_err(Failure::from))
        .collect()
}

fn benchmark_config(args: &EvalArgs, cfg: &RunConfig) -> CmdResult<BenchmarkConfig> {
    let defaults = BenchmarkConfig::default();
    let eval = &cfg.eval;
    let convention = match &args.convention {
        Some(c) => match c.as_str() {
            "trend_aligned" | "trend-aligned" => DirectionConvention::TrendAligned,
            "negated" => DirectionConvention::Negated,
            other => return Err(invalid(format!("unknown convention '{other}'"))),
        },
        None => eval.convention.unwrap_or(defaults.convention),
    };
    Ok(BenchmarkConfig {
        k_values: if args.k_values.is_empty() {
            eval.k_values.clone().unwrap_or(defaults.k_values)
        } else {
            args.k_values.clone()
        },
        actions: if args.actions.is_empty() {
            eval.action_kinds.clone().unwrap_or(defaults.actions)
        } else {
            parse_list(&args.actions)?
        },
        costs: if args.costs.is_empty() {
            eval.cost_norms.clone().unwrap_or(defaults.costs)
        } else {
            parse_list(&args.costs)?
        },
        n_samples: args
            .samples
            .or(eval.n_samples)
            .unwrap_or(defaults.n_samples),
        seed: args.seed.or(eval.seed).unwrap_or(defaults.seed),
        convention,
        plausibility_pool: defaults.plausibility_pool,
        timing: args.timing,
    })
}

fn eval(args: EvalArgs, _stdout: &mut dyn Write) -> CmdResult<()> {
    let r = Resolved::new(args.common.clone())?;
    let config = benchmark_config(&args, &r.config)?;
    let methods = r.methods(DEFAULT_EVAL_METHODS)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| r.config.output_dir.clone())
        .ok_or_else(|| invalid("missing --out"))?;
    let test_path = args
        .test
        .clone()
        .or_else(|| r.config.test_csv.clone())
        .ok_or_else(|| invalid("missing --test"))?;
    let (e, train) = r.load_inputs()?;
    let test = r.load_queries(&test_path, &train)?;
    let qt = QuantileTransform::fit(&train)?;
    let explainer = Explainer::new(&e, &train, &qt)?;

    let mut report = with_threads(r.threads(), || {
        run_benchmark(&explainer, &methods, &test, &config)
    })??;
    let timing = report.timing_us.take();

    std::fs::create_dir_all(&out_dir).map_err(|e| io_error(&out_dir, e))?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_file(&out_dir.join("report.json"), &json)?;

    let mut lines = String::new();
    for rec in &report.records {
        lines.push_str(&serde_json::to_string(rec).expect("record serializes"));
        lines.push('\n');
    }
    write_file(&out_dir.join("records.jsonl"), &lines)?;

    for &action in &config.actions {
        for &cost in &config.costs {
            let stem = format!("{}_{}", action.as_str(), cost.as_str());
            write_file(
                &out_dir.join(format!("improvement_{stem}.csv")),
                &plot_csv(&report, action, cost, Metric::CfAbility),
            )?;
            write_file(
                &out_dir.join(format!("plausibility_{stem}.csv")),
                &plot_csv(&report, action, cost, Metric::Plausibility),
            )?;
        }
    }
    if let Some(timing) = timing {
        let mut json = serde_json::to_string_pretty(&serde_json::json!({ "timing_us": timing }))
            .expect("timing serializes");
        json.push('\n');
        write_file(&out_dir.join("timing.json"), &json)?;
    }
    Ok(())
}

fn bench(args: BenchArgs, stdout: &mut dyn Write) -> CmdResult<()> {
    let r = Resolved::new(args.common.clone())?;
    let methods = r.methods(DEFAULT_BENCH_METHODS)?;
    let (e, train) = r.load_inputs()?;
    let source = match args.test.clone().or_else(|| r.config.test_csv.clone()) {
        Some(path) => r.load_queries(&path, &train)?,
        None => train.clone(),
    };
    let rejected: Vec<usize> = (0..source.n_rows())
        .filter(|&i| e.class_of(source.row(i)) == 1)
        .collect();
    if rejected.is_empty() {
        return Err(Error::NoRejectedSamples.into());
    }
    let samples = args
        .samples
        .or(r.config.eval.n_samples)
        .unwrap_or(DEFAULT_BENCH_SAMPLES);
    let seed = args.seed.or(r.config.eval.seed).unwrap_or(0);
    let queries: Vec<Vec<f64>> = seeded_sample(rejected.len(), samples, seed)
        .into_iter()
        .map(|i| source.row(rejected[i]).to_vec())
        .collect();
    let qt = QuantileTransform::fit(&train)?;
    let explainer = Explainer::new(&e, &train, &qt)?;

    let mut timing = BTreeMap::new();
    let mut table = format!("{:<32} {:>14}\n", "method", "latency_us");
    for method in &methods {
        let t = explanation_latency(&explainer, &method.spec, &queries, DEFAULT_REPEATS)?;
        let us = t.as_secs_f64() * 1e6;
        let _ = writeln!(table, "{:<32} {:>14.1}", method.name, us);
        timing.insert(method.name.clone(), us);
    }
    let json = serde_json::json!({ "n_queries": queries.len(), "timing_us": timing });
    let _ = writeln!(table, "{json}");
    stdout
        .write_all(table.as_bytes())
        .map_err(|e| io_error(Path::new("<stdout>"), e))?;
    if let Some(path) = &args.out {
        write_file(path, &format!("{json}\n"))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ThresholdOutput {
    mode: &'static str,
    threshold_margin: f64,
    threshold_probability: f64,
    objective_value: f64,
    tpr: f64,
    fpr: f64,
    degenerate: bool,
}

fn threshold(args: ThresholdArgs, stdout: &mut dyn Write) -> CmdResult<()> {
    let objective: ThresholdObjective = args.mode.parse()?;
    let r = Resolved::new(args.common)?;
    if r.label().is_none() {
        return Err(Error::MissingLabels.into());
    }
    let (e, train) = r.load_inputs()?;
    let sel = select_threshold_roc(&e, &train, objective)?;
    let out = ThresholdOutput {
        mode: match objective {
            ThresholdObjective::Youden => "youden",
            ThresholdObjective::Literal => "literal",
        },
        threshold_margin: sel.threshold,
        threshold_probability: sigmoid(sel.threshold),
        objective_value: sel.objective_value,
        tpr: sel.tpr,
        fpr: sel.fpr,
        degenerate: sel.degenerate,
    };
    let text = format!(
        "{}\n",
        serde_json::to_string(&out).expect("threshold serializes")
    );
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| io_error(Path::new("<stdout>"), e))?;
    if let Some(path) = &args.write_model {
        let updated = e.with_threshold(sel.threshold)?;
        write_file(path, &format!("{}\n", to_native_json(&updated)))?;
    }
    Ok(())
}
