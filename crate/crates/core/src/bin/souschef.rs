use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use souschef::api::{RecipeStore, Service};
use souschef::labeling::{
    balance_dataset, export_manifest, load_corpus, session_stats, BalancePolicy,
};
use souschef::plant::SimScript;
use souschef::recipe::{diagnose, RecipeDocument};
use souschef::runtime::{run_corpus, run_recipe_script};
use souschef::{assets, Config};

#[derive(Parser)]
#[command(name = "souschef", version, about = "Cooking automation runtime over a simulated hob")]
struct Cli {
    /// TOML configuration; SOUSCHEF__SECTION__KEY variables override it.
    #[arg(long, short, global = true, env = "SOUSCHEF_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a recipe headless against a plant script and print the report.
    Run(RunArgs),
    /// Serve the HTTP API with the control loop running.
    Serve(ServeArgs),
    #[command(subcommand)]
    Recipe(RecipeCmd),
    /// Capture sessions on a running server.
    #[command(subcommand)]
    Session(SessionCmd),
    /// Active label on a running server.
    #[command(subcommand)]
    Label(LabelCmd),
    /// Post a raw command JSON to a running server.
    Command {
        json: String,
        #[command(flatten)]
        server: ServerArg,
    },
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Print the effective configuration as TOML.
    Config,
    /// Replay a bundled capture corpus into a dataset directory.
    Corpus {
        #[arg(long, default_value = "pasta")]
        recipe: String,
        #[arg(long, default_value = "data")]
        root: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "pasta_tomato_sauce")]
    recipe: String,
    /// Recipe JSON file to load in addition to the bundled ones.
    #[arg(long)]
    recipe_file: Option<PathBuf>,
    /// Plant script; the bundled validation script when omitted.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    max_time: Option<f64>,
    /// Write the event log here (JSONL).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    host: Option<String>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    speedup: Option<f64>,
}

#[derive(Subcommand)]
enum RecipeCmd {
    /// Check a recipe file and print every diagnostic.
    Validate { file: PathBuf },
    List,
    /// Print a bundled recipe.
    Show { id: String },
}

#[derive(Args)]
struct ServerArg {
    #[arg(long, default_value = "http://127.0.0.1:8080", env = "SOUSCHEF_SERVER")]
    server: String,
}

#[derive(Subcommand)]
enum SessionCmd {
    Start {
        #[arg(long)]
        id: Option<String>,
        #[command(flatten)]
        server: ServerArg,
    },
    Stop {
        #[command(flatten)]
        server: ServerArg,
    },
}

#[derive(Subcommand)]
enum LabelCmd {
    Set {
        label: String,
        #[command(flatten)]
        server: ServerArg,
    },
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Undersample to the target ratio and write a balanced manifest.
    Balance {
        #[arg(long, default_value = "data")]
        root: PathBuf,
        #[arg(long, default_value_t = 1.1)]
        ratio: f64,
        #[arg(long, default_value_t = 2045)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the balancing report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write the full manifest of every labelled frame.
    Export {
        #[arg(long, default_value = "data")]
        root: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Stats {
        #[arg(long, default_value = "data")]
        root: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    Config::load(path).context("loading configuration")
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn post(server: &ServerArg, path: &str, body: Value) -> Result<bool> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into();
    let url = format!("{}{path}", server.server.trim_end_matches('/'));
    let mut resp = agent
        .post(&url)
        .send_json(&body)
        .with_context(|| format!("POST {url}"))?;
    let ok = resp.status().is_success();
    println!("{}", resp.body_mut().read_to_string()?);
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    let config_path = cli.config.as_deref();
    match cli.command {
        Cmd::Run(args) => {
            let mut config = load_config(config_path)?;
            if args.log.is_some() {
                config.log.path = args.log;
            }
            let store = RecipeStore::with_bundled();
            if let Some(f) = &args.recipe_file {
                store
                    .put_json(&fs::read_to_string(f)?, None)
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
            }
            let script = match &args.script {
                Some(p) => SimScript::from_json(&fs::read_to_string(p)?)?,
                None => assets::validation_script(),
            };
            let (mut rt, report) =
                run_recipe_script(config, store, &args.recipe, script, args.max_time)?;
            rt.shutdown();
            print_json(&report)?;
            Ok(report.complete)
        }
        Cmd::Serve(args) => {
            let mut config = load_config(config_path)?;
            if let Some(h) = args.host {
                config.service.host = h;
            }
            if let Some(p) = args.port {
                config.service.port = p;
            }
            if let Some(s) = args.speedup {
                config.sim.speedup = s;
            }
            config.validate()?;
            let service = Service::from_config(config)?;
            log::info!("listening on http://{}", service.addr);
            eprintln!("listening on http://{}", service.addr);
            let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
            rt.block_on(tokio::signal::ctrl_c())?;
            service.stop();
            Ok(true)
        }
        Cmd::Recipe(RecipeCmd::Validate { file }) => {
            let text = fs::read_to_string(&file)?;
            let diagnostics = match serde_json::from_str::<RecipeDocument>(&text) {
                Ok(doc) => diagnose(&doc),
                Err(e) => {
                    println!("malformed: {e}");
                    return Ok(false);
                }
            };
            for d in &diagnostics {
                println!("{d}");
            }
            if diagnostics.is_empty() {
                println!("ok");
            }
            Ok(diagnostics.is_empty())
        }
        Cmd::Recipe(RecipeCmd::List) => {
            print_json(&RecipeStore::with_bundled().list())?;
            Ok(true)
        }
        Cmd::Recipe(RecipeCmd::Show { id }) => match RecipeStore::with_bundled().get(&id) {
            Some(r) => {
                println!("{}", r.to_json());
                Ok(true)
            }
            None => bail!("unknown recipe `{id}`"),
        },
        Cmd::Session(SessionCmd::Start { id, server }) => {
            post(&server, "/v1/session/start", json!({ "session_id": id, "issued_by": "cli" }))
        }
        Cmd::Session(SessionCmd::Stop { server }) => {
            post(&server, "/v1/session/stop", json!({ "issued_by": "cli" }))
        }
        Cmd::Label(LabelCmd::Set { label, server }) => {
            post(&server, "/v1/session/label", json!({ "label": label, "issued_by": "cli" }))
        }
        Cmd::Command { json, server } => {
            let body: Value = serde_json::from_str(&json).context("command is not JSON")?;
            post(&server, "/v1/command", body)
        }
        Cmd::Dataset(DatasetCmd::Balance { root, ratio, seed, out, report }) => {
            let records = load_corpus(&root)?;
            let policy = BalancePolicy {
                target_ratio: ratio,
                seed,
                labels: None,
            };
            let outcome = balance_dataset(&records, &policy)?;
            export_manifest(&outcome.subset, &out)?;
            if let Some(p) = report {
                fs::write(p, serde_json::to_string_pretty(&outcome.report)?)?;
            }
            print_json(&outcome.report)?;
            Ok(true)
        }
        Cmd::Dataset(DatasetCmd::Export { root, out }) => {
            let records = load_corpus(&root)?;
            let manifest = export_manifest(&records, &out)?;
            println!("{} rows -> {}", manifest.rows.len(), out.display());
            Ok(true)
        }
        Cmd::Dataset(DatasetCmd::Stats { root }) => {
            let config = load_config(config_path)?;
            let records = load_corpus(&root)?;
            print_json(&session_stats(&records, config.labeling.cadence))?;
            Ok(true)
        }
        Cmd::Config => {
            let config = load_config(config_path)?;
            print!("{}", config.to_toml());
            Ok(true)
        }
        Cmd::Corpus { recipe, root } => {
            let config = load_config(config_path)?;
            let Some(spec) = assets::corpus(&recipe) else {
                bail!("no bundled corpus for `{recipe}`");
            };
            let summaries = run_corpus(&spec, &config, &RecipeStore::with_bundled(), &root)?;
            print_json(&summaries)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
