use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use securetrack_backend::{Notifier, ServeConfig, Server};
use securetrack_core::crypto::{derive_key, ContactCipher};
use securetrack_core::dump;
use securetrack_core::memory::{memory_estimate, ContactHistogram};
use securetrack_core::sim::{
    compare, compare_banded, decrypt_dumps, oracle_contacts, oracle_contacts_with_radius, run,
    DetectionReport, Scenario, TraceFormat,
};
use securetrack_core::NodeId;

#[derive(Parser)]
#[command(
    name = "securetrack",
    version,
    about = "SecureTrack simulator, tools and health-center service"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run or check simulated scenarios.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Storage needed for 14 days of contacts.
    EstimateMemory(EstimateArgs),
    /// Inspect device store dumps.
    #[command(subcommand)]
    Device(DeviceCommand),
    /// Run the health-center HTTP service.
    Serve(ServeArgs),
}

#[derive(Subcommand)]
enum SimCommand {
    /// Simulate a scenario and write the trace, store dumps and a summary.
    Run {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Records)]
        format: Format,
    },
    /// Compare device stores with the geometric ground truth.
    Verify {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Check the dumps in this directory instead of running the scenario.
        #[arg(long)]
        from: Option<PathBuf>,
        /// Shortest true contact, in seconds, that must be detected.
        #[arg(long, default_value_t = 120)]
        min_overlap: u64,
        /// Half-width in feet of the ignored band around the contact radius.
        #[arg(long, default_value_t = 0.0)]
        band: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Records,
}

impl From<Format> for TraceFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => TraceFormat::Text,
            Format::Records => TraceFormat::Records,
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct EstimateArgs {
    /// Same number of contacts on every day.
    #[arg(long)]
    uniform: Option<u64>,
    /// Fourteen comma-separated daily counts.
    #[arg(long, value_delimiter = ',')]
    days: Option<Vec<u64>>,
}

#[derive(Subcommand)]
enum DeviceCommand {
    /// Decrypt a dump with the key of the given node.
    Decrypt {
        dump: PathBuf,
        #[arg(long)]
        node_id: NodeId,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "SECURETRACK_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    #[arg(long, env = "SECURETRACK_DB")]
    db: PathBuf,
    /// stdout, file:<path> or webhook:<url>.
    #[arg(long, env = "SECURETRACK_NOTIFIER", default_value = "stdout")]
    notifier: Notifier,
    /// Directory of `<node>.strk` dumps exposed under /devices.
    #[arg(long, env = "SECURETRACK_DEVICE_DIR")]
    device_dir: Option<PathBuf>,
    /// Send permissive CORS headers.
    #[arg(long)]
    cors: bool,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

type Outcome = Result<ExitCode, Failure>;

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let result = match cli.command {
        Command::Sim(SimCommand::Run {
            config,
            out,
            seed,
            format,
        }) => sim_run(&config, &out, seed, format),
        Command::Sim(SimCommand::Verify {
            config,
            seed,
            from,
            min_overlap,
            band,
        }) => sim_verify(&config, seed, from.as_deref(), min_overlap, band),
        Command::EstimateMemory(args) => estimate(args),
        Command::Device(DeviceCommand::Decrypt { dump, node_id }) => device_decrypt(&dump, node_id),
        Command::Serve(args) => serve(args),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut scenario =
        Scenario::from_toml(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    scenario
        .validate()
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(scenario)
}

fn sim_run(config: &Path, out: &Path, seed: Option<u64>, format: Format) -> Outcome {
    let scenario = load_scenario(config, seed)?;
    let result = run(&scenario).map_err(runtime)?;
    let contacts = result.contacts().map_err(runtime)?;

    fs::create_dir_all(out).map_err(|e| runtime(format!("{}: {e}", out.display())))?;
    let write = |name: &str, bytes: &[u8]| {
        let path = out.join(name);
        fs::write(&path, bytes).map_err(|e| runtime(format!("{}: {e}", path.display())))
    };
    let trace_name = match format {
        Format::Text => "trace.txt",
        Format::Records => "trace.jsonl",
    };
    write(trace_name, result.trace_text(format.into()).as_bytes())?;
    for (node, bytes) in &result.stores {
        write(&format!("{node}.strk"), bytes)?;
    }

    let mut events: BTreeMap<&str, usize> = BTreeMap::new();
    for rec in &result.trace {
        *events.entry(rec.event.as_str()).or_default() += 1;
    }
    let stores: serde_json::Map<_, _> = contacts
        .iter()
        .map(|(node, peers)| {
            let entry = json!({
                "size": peers.len(),
                "peers": peers.keys().map(|p| p.get()).collect::<Vec<_>>(),
                "bytes": result.stores[node].len(),
            });
            (node.to_string(), entry)
        })
        .collect();
    let summary = json!({
        "seed": scenario.seed,
        "duration": scenario.duration,
        "devices": scenario.devices.len(),
        "trace": trace_name,
        "events": events,
        "stores": stores,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write("summary.json", text.as_bytes())?;
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn sim_verify(config: &Path, seed: Option<u64>, from: Option<&Path>, min_overlap: u64, band: f64) -> Outcome {
    let scenario = load_scenario(config, seed)?;
    if !(band.is_finite() && band >= 0.0 && band < scenario.contact_radius) {
        return Err(Failure::Usage(format!(
            "band must be in [0, {})",
            scenario.contact_radius
        )));
    }
    let contacts = match from {
        None => run(&scenario).map_err(runtime)?.contacts().map_err(runtime)?,
        Some(dir) => {
            let mut dumps = Vec::new();
            for d in &scenario.devices {
                let path = dir.join(format!("{}.strk", d.id));
                let bytes = fs::read(&path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
                dumps.push((d.id, bytes));
            }
            decrypt_dumps(dumps.iter().map(|(id, b)| (*id, b.as_slice()))).map_err(runtime)?
        }
    };
    let report: DetectionReport = if band == 0.0 {
        compare(
            &contacts,
            &oracle_contacts(&scenario).map_err(runtime)?,
            min_overlap,
        )
    } else {
        let r = scenario.contact_radius;
        let inner = oracle_contacts_with_radius(&scenario, r - band).map_err(runtime)?;
        let outer = oracle_contacts_with_radius(&scenario, r + band).map_err(runtime)?;
        compare_banded(&contacts, &inner, &outer, min_overlap)
    };
    println!("detected {}", report.detected.len());
    println!("missed {}", report.missed.len());
    println!("spurious {}", report.spurious.len());
    for (a, b) in &report.missed {
        println!("missed {a} {b}");
    }
    for (owner, peer) in &report.spurious {
        println!("spurious {owner} {peer}");
    }
    Ok(if report.is_clean() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn estimate(args: EstimateArgs) -> Outcome {
    let hist = match (args.uniform, args.days) {
        (Some(n), _) => ContactHistogram::uniform(n),
        (None, Some(days)) => {
            ContactHistogram::try_from(days.as_slice()).map_err(|e| Failure::Usage(e.to_string()))?
        }
        (None, None) => unreachable!("clap requires one of the flags"),
    };
    println!("{}", memory_estimate(&hist));
    Ok(ExitCode::SUCCESS)
}

fn device_decrypt(path: &Path, node: NodeId) -> Outcome {
    let bytes = fs::read(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let owner = dump::peek_owner(&bytes).map_err(runtime)?;
    if owner != node {
        eprintln!("warning: dump is owned by node {owner}, decrypting with the key of node {node}");
    }
    // load() checks the owner field, so decrypt as the owner but with the requested key
    let store = dump::load(&bytes, owner).map_err(runtime)?;
    let cipher = ContactCipher::new(&derive_key(node));
    let mut rows = Vec::new();
    for rec in store.records() {
        let peer = cipher
            .decrypt(&rec.ciphertext)
            .map_err(|e| runtime(format!("PadError: {e}")))?;
        rows.push((peer, rec.last_seen));
    }
    rows.sort();
    for (peer, last_seen) in rows {
        println!("{peer}\t{last_seen}");
    }
    Ok(ExitCode::SUCCESS)
}

fn serve(args: ServeArgs) -> Outcome {
    let rt = tokio::runtime::Runtime::new().map_err(runtime)?;
    rt.block_on(async {
        let config = ServeConfig {
            listen: args.listen,
            db_path: args.db,
            notifier: args.notifier,
            device_dir: args.device_dir,
            cors: args.cors,
        };
        let server = Server::bind(config).await.map_err(runtime)?;
        if let Ok(addr) = server.local_addr() {
            println!("listening on http://{addr}");
        }
        server.run(shutdown_signal()).await.map_err(runtime)?;
        Ok(ExitCode::SUCCESS)
    })
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        let mut term = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate())
            .expect("install SIGTERM handler");
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    tokio::signal::ctrl_c().await.ok();
}
