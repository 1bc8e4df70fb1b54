use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use klpeg::agents::{collect_exploration_corpus, CuriosityConfig};
use klpeg::env::{EnvName, Environment};
use klpeg::extract::{build_graph, LogEvent};
use klpeg::harness::{make_gateway, report, run_experiment, write_archive, ExperimentConfig, ExperimentResult, HarnessError, LlmConfig};
use klpeg::kg::{load_graph, save_graph, Direction, KnowledgeGraph, NodeId, TraversalPolicy};
use klpeg::llm::Gateway;
use klpeg::pipeline::{derive_delta, run_pipeline, sync_graph, GenerationMode, PipelineConfig};

#[derive(Parser)]
#[command(name = "klpeg", version, about = "Knowledge-graph guided playtesting for evolving games")]
struct Cli {
    /// `mock`, or a TOML file describing an HTTP provider.
    #[arg(long, global = true, default_value = "mock")]
    gateway: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explore the base version and write the event corpus as JSON lines.
    Explore {
        #[arg(long)]
        env: EnvName,
        #[arg(long = "seed", value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract a knowledge graph from a corpus, or from a fresh exploration.
    BuildGraph {
        #[arg(long)]
        env: EnvName,
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Rules and scripts only; skip the LLM extractor.
        #[arg(long)]
        no_llm: bool,
        #[arg(long)]
        out: PathBuf,
        /// Also write the extracted triples, one per line.
        #[arg(long)]
        golden: Option<PathBuf>,
    },
    /// Apply one update log to a graph.
    Update {
        #[arg(long)]
        env: EnvName,
        #[arg(long)]
        graph: PathBuf,
        /// 1-based update number.
        #[arg(long)]
        update: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the hop distance of every node impacted by an item.
    Impact {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        item: String,
        #[arg(long = "k", default_value_t = 2)]
        hops: usize,
        #[arg(long, default_value = "both")]
        direction: Direction,
    },
    /// Run the pipeline over every update and write the test cases.
    GenTests {
        #[arg(long)]
        env: EnvName,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value = "klpeg")]
        mode: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment from a TOML config and archive it.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        keep_traces: bool,
    },
    /// Summarise archived results.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
}

fn usage(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn gateway(choice: &str, env: EnvName) -> Result<Gateway, HarnessError> {
    let llm = if choice == "mock" {
        LlmConfig::Mock
    } else {
        let text = fs::read_to_string(choice).map_err(|e| usage(format!("{choice}: {e}")))?;
        LlmConfig::Http(toml::from_str(&text).map_err(|e| usage(e.to_string()))?)
    };
    Ok(make_gateway(&llm, env))
}

fn read_graph(path: &Path) -> Result<KnowledgeGraph, HarnessError> {
    Ok(load_graph(BufReader::new(File::open(path)?))?)
}

fn write_graph(graph: &KnowledgeGraph, path: &Path) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    save_graph(graph, &mut w)?;
    w.flush()?;
    Ok(())
}

fn read_corpus(path: &Path) -> Result<Vec<LogEvent>, HarnessError> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Explore { env, seeds, steps, out } => {
            let env = Environment::load(env)?;
            let cfg = CuriosityConfig {
                max_steps: steps,
                ..Default::default()
            };
            let corpus = collect_exploration_corpus(&env, env.base_version(), &cfg, &seeds)?;
            let mut w = BufWriter::new(File::create(&out)?);
            for e in &corpus {
                writeln!(w, "{}", serde_json::to_string(e)?)?;
            }
            w.flush()?;
            println!("{} events written to {}", corpus.len(), out.display());
        }
        Command::BuildGraph {
            env: name,
            corpus,
            no_llm,
            out,
            golden,
        } => {
            let env = Environment::load(name)?;
            let events = match corpus {
                Some(p) => read_corpus(&p)?,
                None => collect_exploration_corpus(&env, env.base_version(), &CuriosityConfig::default(), &[0, 1, 2])?,
            };
            let gw = gateway(&cli.gateway, name)?;
            let (graph, batch) = build_graph(name, env.base_version(), (!no_llm).then_some(&gw), &events);
            for (idx, e) in &batch.errors {
                log::warn!("event {idx}: {e}");
            }
            write_graph(&graph, &out)?;
            if let Some(g) = golden {
                fs::write(g, batch.golden_lines())?;
            }
            println!(
                "{} triples in {} categories; {} nodes, {} edges written to {}",
                batch.len(),
                batch.categories().len(),
                graph.node_count(),
                graph.edge_count(),
                out.display()
            );
        }
        Command::Update { env: name, graph, update, out } => {
            let env = Environment::load(name)?;
            let log = update
                .checked_sub(1)
                .and_then(|i| env.catalog.updates.get(i))
                .ok_or_else(|| usage(format!("no update {update}; {} available", env.catalog.updates.len())))?;
            let mut g = read_graph(&graph)?;
            let gw = gateway(&cli.gateway, name)?;
            let vocab = klpeg::extract::RuleConfig::shipped(name).relations;
            let (delta, _) = derive_delta(&gw, &g, log, &vocab)?;
            for c in &delta.changes {
                println!("{:?} {}", c.op, c.triple);
            }
            let report = sync_graph(&mut g, &delta, &log.to_version);
            for (t, why) in &report.rejected {
                eprintln!("rejected {t}: {why}");
            }
            write_graph(&g, &out)?;
            println!("inserted {}, removed {}; graph now at {}", report.inserted, report.removed, g.version_tag);
        }
        Command::Impact {
            graph,
            item,
            hops,
            direction,
        } => {
            let g = read_graph(&graph)?;
            let policy = TraversalPolicy::new(hops, direction)?;
            let start = NodeId::new(&item)?;
            let mut by_hop: Vec<(usize, NodeId)> = g.impact_distances(&start, &policy)?.into_iter().map(|(n, d)| (d, n)).collect();
            by_hop.sort();
            let items: Vec<&str> = by_hop.iter().map(|(_, n)| n.as_str()).collect();
            let reply = serde_json::json!({"input_item": start.as_str(), "inferred_related_items": items});
            println!("{}", serde_json::to_string_pretty(&reply)?);
        }
        Command::GenTests { env: name, graph, mode, out } => {
            let env = Environment::load(name)?;
            let mode = match mode.as_str() {
                "klpeg" => GenerationMode::Klpeg,
                "no_kg" | "klpeg_no_kg" => GenerationMode::NoKg,
                other => return Err(usage(format!("unknown mode `{other}`"))),
            };
            let g = read_graph(&graph)?;
            let gw = gateway(&cli.gateway, name)?;
            let cfg = PipelineConfig {
                mode,
                ..Default::default()
            };
            let (outcomes, _) = run_pipeline(&env, &g, &gw, &cfg)?;
            let tests: Vec<_> = outcomes.iter().flat_map(|o| &o.tests).collect();
            fs::write(&out, serde_json::to_string_pretty(&tests)? + "\n")?;
            println!("{} test cases written to {}", tests.len(), out.display());
        }
        Command::Run { config, out, keep_traces } => {
            let cfg = ExperimentConfig::load(&config)?;
            let started = Instant::now();
            let exp = run_experiment(&cfg, None)?;
            write_archive(&out, &exp, keep_traces)?;
            print!("{}", report::markdown(std::slice::from_ref(&exp.result)));
            println!("finished in {:.1}s; archive at {}", started.elapsed().as_secs_f64(), out.display());
        }
        Command::Report { dirs, csv } => {
            let mut results = Vec::new();
            for d in dirs {
                let text = fs::read_to_string(d.join("result.json"))?;
                results.push(serde_json::from_str::<ExperimentResult>(&text)?);
            }
            let text = if csv { report::csv(&results) } else { report::markdown(&results) };
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
