//! `scopekg` command-line interface.
//!
//! Exit codes: 0 success, 1 configuration or I/O failure, 2 bad input
//! (query syntax, unknown park, malformed dataset), 3 search ended without
//! an answer.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};

use scopekg::builder::{build_graph, load_overrides, IndicatorRegistry, RawTables};
use scopekg::eval::{generate_benchmark, read_dataset, run_benchmark, write_dataset, DatasetError};
use scopekg::planner::{plan_park, PlanError, Planner, SearchOutcome};
use scopekg::policy::{
    Action, DegeneratePolicy, DiversifyingPolicy, Evaluator, FewShot, Policy, PromptContext,
    QuestionPolicy, RemoteConfig, RemoteEvaluator, RemotePolicy, RubricEvaluator,
};
use scopekg::synth::{self, SynthConfig};
use scopekg::tools::{Gazetteer, Toolbox, RANK_MASTER};
use scopekg::PropertyGraph;

use config::{Format, PolicyMode, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "scopekg", version, about = "Industrial-park knowledge graph and planning engine")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for `bench`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct GraphArgs {
    /// Graph file written by `build`.
    #[arg(long)]
    graph: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
struct PlannerArgs {
    /// Address gazetteer CSV (`address,grid_id`); defaults to POI addresses.
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    /// Indicator registry (TOML or JSON); defaults to the bundled one.
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Directory of few-shot example files.
    #[arg(long)]
    fewshot_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    policy: Option<PolicyMode>,
    /// Directory for traces and reports.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the knowledge graph from a tables directory.
    Build {
        /// Directory with parks.csv, grids.csv, pois.jsonl, enterprises.jsonl.
        #[arg(long)]
        tables: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        registry: Option<PathBuf>,
        /// Grid-function overrides: a JSON object or TOML table of grid id to function.
        #[arg(long)]
        overrides: Option<PathBuf>,
    },
    /// Run a graph query.
    Query {
        #[command(flatten)]
        graph: GraphArgs,
        /// Query text, e.g. `MATCH (p:Park) RETURN p.id`.
        text: String,
        /// Rows shown in table format.
        #[arg(long, default_value_t = 50)]
        max_rows: usize,
    },
    /// Answer a site-recommendation question with the tree search.
    Recommend {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        planner: PlannerArgs,
        question: String,
        /// Trace file; defaults to `<out_dir>/recommend_trace.json`.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Propose a function for every grid of a park.
    Plan {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        planner: PlannerArgs,
        #[arg(long)]
        park: String,
    },
    /// Run the site-recommendation benchmark.
    Bench {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        planner: PlannerArgs,
        /// JSONL dataset to evaluate.
        #[arg(long, conflicts_with = "generate")]
        dataset: Option<PathBuf>,
        /// Generate this many items instead of reading a dataset.
        #[arg(long)]
        generate: Option<usize>,
        /// Where to save a generated dataset.
        #[arg(long)]
        dataset_out: Option<PathBuf>,
    },
    /// Generate synthetic tables and a gazetteer.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        park_rows: u32,
        #[arg(long, default_value_t = 3)]
        park_cols: u32,
        #[arg(long, default_value_t = 10)]
        block_rows: u32,
        #[arg(long, default_value_t = 8)]
        block_cols: u32,
    },
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

type Outcome = Result<(), Failure>;

trait WithCode<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> WithCode<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            error: e.into(),
        })
    }
}

fn fail(code: u8, error: anyhow::Error) -> Failure {
    Failure { code, error }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).code(1)?,
        None => RunConfig::default(),
    };
    if cli.format.is_some() {
        cfg.format = cli.format;
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    match cli.command {
        Command::Build {
            tables,
            out,
            registry,
            overrides,
        } => {
            cfg.registry = registry.or(cfg.registry);
            cfg.overrides = overrides.or(cfg.overrides);
            cfg.check_inputs().code(1)?;
            cmd_build(&cfg, &tables, &out)
        }
        Command::Query { graph, text, max_rows } => {
            apply_graph(&mut cfg, graph);
            cfg.check_inputs().code(1)?;
            cmd_query(&cfg, &text, max_rows)
        }
        Command::Recommend {
            graph,
            planner,
            question,
            trace,
        } => {
            apply_graph(&mut cfg, graph);
            apply_planner(&mut cfg, planner);
            cfg.check_inputs().code(1)?;
            cmd_recommend(&cfg, &question, trace)
        }
        Command::Plan { graph, planner, park } => {
            apply_graph(&mut cfg, graph);
            apply_planner(&mut cfg, planner);
            cfg.check_inputs().code(1)?;
            cmd_plan(&cfg, &park)
        }
        Command::Bench {
            graph,
            planner,
            dataset,
            generate,
            dataset_out,
        } => {
            apply_graph(&mut cfg, graph);
            apply_planner(&mut cfg, planner);
            cfg.check_inputs().code(1)?;
            cmd_bench(&cfg, dataset, generate, dataset_out)
        }
        Command::Gen {
            out,
            park_rows,
            park_cols,
            block_rows,
            block_cols,
        } => {
            let sc = SynthConfig {
                seed: cfg.seed.unwrap_or(SynthConfig::default().seed),
                park_rows,
                park_cols,
                block_rows,
                block_cols,
                ..SynthConfig::default()
            };
            cmd_gen(&cfg, &sc, &out)
        }
    }
}

fn apply_graph(cfg: &mut RunConfig, args: GraphArgs) {
    cfg.graph = args.graph.or(cfg.graph.take());
}

fn apply_planner(cfg: &mut RunConfig, args: PlannerArgs) {
    cfg.gazetteer = args.gazetteer.or(cfg.gazetteer.take());
    cfg.registry = args.registry.or(cfg.registry.take());
    cfg.fewshot_dir = args.fewshot_dir.or(cfg.fewshot_dir.take());
    cfg.policy = args.policy.or(cfg.policy);
    cfg.out_dir = args.out_dir.or(cfg.out_dir.take());
}

fn format(cfg: &RunConfig) -> Format {
    cfg.format.unwrap_or(Format::Table)
}

fn print_json(value: &Json) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn registry(cfg: &RunConfig) -> Result<IndicatorRegistry, Failure> {
    match &cfg.registry {
        Some(p) => IndicatorRegistry::load(p).code(1),
        None => Ok(IndicatorRegistry::default()),
    }
}

fn load_graph(cfg: &RunConfig) -> Result<PropertyGraph, Failure> {
    let path = cfg
        .graph
        .as_ref()
        .ok_or_else(|| fail(1, anyhow!("no graph file given (use --graph or `graph` in --config)")))?;
    PropertyGraph::load(path)
        .with_context(|| format!("loading graph {}", path.display()))
        .code(1)
}

fn ensure_parent(path: &Path) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .code(1)?;
    }
    Ok(())
}

fn write_json(path: &Path, value: &Json) -> Result<(), Failure> {
    ensure_parent(path)?;
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    std::fs::write(path, text + "\n")
        .with_context(|| format!("writing {}", path.display()))
        .code(1)
}

#[derive(Clone, Copy)]
enum Task {
    Site,
    Plan,
}

fn make_planner(cfg: &RunConfig, graph: PropertyGraph, task: Task) -> Result<Planner, Failure> {
    let registry = registry(cfg)?;
    let gazetteer = match &cfg.gazetteer {
        Some(p) => Gazetteer::from_csv(p).map_err(|e| fail(1, anyhow!(e)))?,
        None => Gazetteer::from_graph(&graph),
    };
    let mut prompt = PromptContext::new(&graph);
    if let Some(dir) = &cfg.fewshot_dir {
        prompt = prompt.with_fewshot(FewShot::load_dir(dir).code(1)?);
    }
    let seed = cfg.seed.unwrap_or(0);
    let (policy, evaluator): (Arc<dyn Policy>, Arc<dyn Evaluator>) =
        match cfg.policy.unwrap_or(PolicyMode::Scripted) {
            PolicyMode::Scripted => {
                let p: Arc<dyn Policy> = match task {
                    Task::Site => Arc::new(QuestionPolicy::new()),
                    Task::Plan => Arc::new(DiversifyingPolicy),
                };
                (p, Arc::new(RubricEvaluator::default()))
            }
            PolicyMode::Degenerate => (
                Arc::new(DegeneratePolicy::new(&graph, seed)),
                Arc::new(RubricEvaluator::default()),
            ),
            PolicyMode::Remote => {
                let mut rc = RemoteConfig::from_env().code(1)?;
                rc.tool_temperature = cfg.search.temperature;
                (
                    Arc::new(RemotePolicy { config: rc.clone() }),
                    Arc::new(RemoteEvaluator { config: rc }),
                )
            }
        };
    let toolbox = Toolbox::new(graph.freeze(), registry).with_gazetteer(gazetteer);
    Ok(Planner::new(toolbox, policy, evaluator)
        .with_prompt(prompt)
        .with_config(cfg.search.clone()))
}

fn cmd_build(cfg: &RunConfig, tables: &Path, out: &Path) -> Outcome {
    let registry = registry(cfg)?;
    let overrides = match &cfg.overrides {
        Some(p) => Some(load_overrides(p).code(1)?),
        None => None,
    };
    let raw = RawTables::load_dir(tables).code(1)?;
    let (graph, report) = build_graph(&raw, &registry, overrides.as_ref(), &cfg.build).code(1)?;
    graph
        .save(out)
        .with_context(|| format!("writing {}", out.display()))
        .code(1)?;
    let stats = graph.stats();
    match format(cfg) {
        Format::Json => print_json(&json!({"graph": out, "stats": stats, "report": report})),
        Format::Table => {
            let mut s = format!(
                "wrote {}\nentities {}\ntriples  {}\nattributes {}\n",
                out.display(),
                stats.entities,
                stats.triples,
                stats.attributes
            );
            for (k, n) in &stats.entities_by_kind {
                let _ = writeln!(s, "  {k:<22} {n}");
            }
            for (r, n) in &stats.triples_by_relation {
                let _ = writeln!(s, "  {r:<22} {n}");
            }
            let _ = writeln!(
                s,
                "similar-to edges {}, related-to edges {}, missing indicator values {}",
                report.similarity.added,
                report.correlation.added,
                report.missing_indicators.len()
            );
            print!("{s}");
        }
    }
    Ok(())
}

fn cmd_query(cfg: &RunConfig, text: &str, max_rows: usize) -> Outcome {
    let graph = load_graph(cfg)?;
    let table = scopekg::query::run(text, &graph).code(2)?;
    match format(cfg) {
        Format::Json => print_json(&serde_json::to_value(&table).expect("tables serialize")),
        Format::Table => println!("{}\n{} rows", table.render(max_rows), table.rows.len()),
    }
    Ok(())
}

fn criteria_used(outcome: &SearchOutcome) -> Vec<String> {
    outcome
        .trajectory
        .state
        .steps
        .iter()
        .rev()
        .find_map(|s| match &s.action {
            Action::Tool(t) if t.tool == RANK_MASTER => t.args.get("criteria").and_then(|c| {
                c.as_array()
                    .map(|a| a.iter().filter_map(|v| v.as_str().map(str::to_string)).collect())
            }),
            _ => None,
        })
        .unwrap_or_default()
}

fn trajectory_lines(outcome: &SearchOutcome) -> Vec<String> {
    outcome
        .trajectory
        .state
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let what = match &s.action {
                Action::Tool(t) => t.tool.clone(),
                Action::Answer { text } => format!("answer: {}", text.trim()),
            };
            let status = match &s.observation {
                Some(o) if o.success => " [ok]",
                Some(_) => " [failed]",
                None => "",
            };
            format!("{}. {what}{status}", i + 1)
        })
        .collect()
}

fn cmd_recommend(cfg: &RunConfig, question: &str, trace: Option<PathBuf>) -> Outcome {
    let graph = load_graph(cfg)?;
    let planner = make_planner(cfg, graph, Task::Site)?;
    let outcome = planner.search(question);
    let trace = trace.unwrap_or_else(|| cfg.out_dir().join("recommend_trace.json"));
    write_json(&trace, &outcome.to_json())?;

    let ids = outcome
        .trajectory
        .answer
        .as_deref()
        .and_then(scopekg::policy::parse_answer_ids)
        .unwrap_or_default();
    let criteria = criteria_used(&outcome);
    match format(cfg) {
        Format::Json => print_json(&json!({
            "answer": outcome.trajectory.answer,
            "sites": ids,
            "criteria": criteria,
            "value": outcome.trajectory.value,
            "iterations": outcome.iterations,
            "stop": outcome.stop,
            "trajectory": trajectory_lines(&outcome),
            "trace": trace,
        })),
        Format::Table => {
            if ids.is_empty() {
                println!("no answer");
            }
            for (i, id) in ids.iter().enumerate() {
                println!("{}. {id}", i + 1);
            }
            if !criteria.is_empty() {
                println!("criteria: {}", criteria.join(", "));
            }
            println!(
                "search: {} iterations, stop {:?}, value {:.3}",
                outcome.iterations, outcome.stop, outcome.trajectory.value
            );
            for line in trajectory_lines(&outcome) {
                println!("  {line}");
            }
            println!("trace: {}", trace.display());
        }
    }
    if outcome.trajectory.answerless {
        return Err(fail(3, anyhow!("search ended without an answer; partial trace in {}", trace.display())));
    }
    Ok(())
}

fn cmd_plan(cfg: &RunConfig, park: &str) -> Outcome {
    let graph = load_graph(cfg)?;
    let planner = make_planner(cfg, graph, Task::Plan)?;
    let park_id = scopekg::EntityId::new(park);
    let plan = match plan_park(&planner, &park_id) {
        Ok(p) => p,
        Err(e @ (PlanError::UnknownPark(_) | PlanError::EmptyPark(_))) => return Err(fail(2, e.into())),
        Err(e) => return Err(fail(1, e.into())),
    };
    let doc = serde_json::to_value(&plan).expect("plans serialize");
    let path = cfg.out_dir().join(format!("plan_{}.json", park.replace([':', '/', '\\'], "_")));
    write_json(&path, &doc)?;
    match format(cfg) {
        Format::Json => print_json(&doc),
        Format::Table => {
            let g = planner.toolbox.graph();
            for (grid, f) in &plan.assignments {
                let was = g.text(grid, scopekg::builder::attr::DOMINANT_FUNCTION).unwrap_or("-");
                println!("{grid:<16} {was:<22} -> {f}");
            }
            println!("\n            H0      H1      H2");
            for (name, p) in [("as-is", &plan.current), ("proposed", &plan.proposed)] {
                println!("{name:<10} {:>6.3}  {:>6.3}  {:>6.3}", p.h0, p.h1, p.h2);
            }
            if !plan.fallbacks.is_empty() {
                println!("{} grids kept their current function", plan.fallbacks.len());
            }
            println!("plan: {}", path.display());
        }
    }
    Ok(())
}

fn cmd_bench(
    cfg: &RunConfig,
    dataset: Option<PathBuf>,
    generate: Option<usize>,
    dataset_out: Option<PathBuf>,
) -> Outcome {
    let graph = load_graph(cfg)?;
    let items = match (dataset, generate) {
        (Some(path), _) => read_dataset(&path).map_err(|e| match e {
            DatasetError::Line { .. } => fail(2, anyhow!("{}: {e}", path.display())),
            other => fail(1, other.into()),
        })?,
        (None, Some(n)) => {
            let mut bc = cfg.benchmark.clone();
            bc.count = n;
            bc.seed = cfg.seed.unwrap_or(bc.seed);
            let registry = registry(cfg)?;
            let items = generate_benchmark(&graph, &registry, &bc).code(2)?;
            if let Some(out) = &dataset_out {
                ensure_parent(out)?;
                write_dataset(out, &items).code(1)?;
            }
            items
        }
        (None, None) => return Err(fail(1, anyhow!("give --dataset or --generate"))),
    };
    let planner = make_planner(cfg, graph, Task::Site)?;
    let out_dir = cfg.out_dir();
    let traces = out_dir.join("traces");
    let run = || run_benchmark(&items, &planner, Some(&traces));
    let report = match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .code(1)?
            .install(run),
        None => run(),
    }
    .code(1)?;
    let doc = serde_json::to_value(&report).expect("reports serialize");
    write_json(&out_dir.join("report.json"), &doc)?;
    match format(cfg) {
        Format::Json => print_json(&doc),
        Format::Table => print!("{}", report.render()),
    }
    Ok(())
}

fn cmd_gen(cfg: &RunConfig, sc: &SynthConfig, out: &Path) -> Outcome {
    if sc.park_count() == 0 || sc.block_rows == 0 || sc.block_cols == 0 {
        return Err(fail(2, anyhow!("park and block dimensions must be positive")));
    }
    let data = synth::generate(sc);
    data.tables.write_dir(out).code(1)?;
    let gaz = out.join("gazetteer.csv");
    data.gazetteer.write_csv(&gaz).map_err(|e| fail(1, anyhow!(e)))?;
    let summary = json!({
        "out": out,
        "seed": sc.seed,
        "parks": data.tables.parks.len(),
        "grids": data.tables.grids.len(),
        "pois": data.tables.pois.len(),
        "enterprises": data.tables.enterprises.len(),
        "gazetteer": gaz,
    });
    match format(cfg) {
        Format::Json => print_json(&summary),
        Format::Table => println!(
            "wrote {}: {} parks, {} grids, {} POIs, {} enterprises (seed {})",
            out.display(),
            data.tables.parks.len(),
            data.tables.grids.len(),
            data.tables.pois.len(),
            data.tables.enterprises.len(),
            sc.seed
        ),
    }
    Ok(())
}
