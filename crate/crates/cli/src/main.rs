mod spec;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use openprobe::bn;
use openprobe::experiments::{self, Scenario, SWEEP_BIASES};
use openprobe::kb::{generate_synthetic_ctslike, load_kb, save_kb, to_canonical_json, KnowledgeBase, SyntheticConfig};
use openprobe::severity::SeverityLink;
use openprobe_service::AppState;

use spec::{parse_evidence, parse_reported, sig6};

#[derive(Parser)]
#[command(
    name = "openprobe",
    version,
    about = "Diagnostic inference with open-probe report nodes"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Knowledge-base file (also accepted positionally).
    #[arg(long, global = true)]
    kb: Option<PathBuf>,
    /// Emit CSV instead of an aligned table.
    #[arg(long, global = true)]
    csv: bool,
    /// Write output to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the synthetic knowledge base used when no KB file is given.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Posterior marginals given evidence.
    Infer {
        kb_file: Option<PathBuf>,
        /// Comma-separated `var=state` and `var~w1:w2` terms.
        #[arg(long, default_value = "")]
        evidence: String,
        /// Comma-separated query variables; defaults to the disorders.
        #[arg(long)]
        query: Option<String>,
    },
    /// Differential after the open probe as the global reporting bias varies.
    SweepBias {
        kb_file: Option<PathBuf>,
        /// Reported symptoms, `S` or `S=state`; defaults to three symptoms of `--disorder`.
        #[arg(long)]
        reported: Option<String>,
        /// Disorder whose first three symptoms are reported by default.
        #[arg(long)]
        disorder: Option<String>,
        #[arg(long, value_delimiter = ',', default_values_t = SWEEP_BIASES.to_vec())]
        biases: Vec<f64>,
        #[arg(long, default_value_t = 0.9)]
        reportability: f64,
        /// Append a row with the closed-probe-only differential.
        #[arg(long)]
        baseline: bool,
    },
    /// Posterior expectations of the global reporting parameters.
    LearnDemo {
        kb_file: Option<PathBuf>,
        /// Scenario as reported symptoms (`S`, `S=absent`, ...); repeatable.
        /// Defaults to 0-3 present reports and 1-3 absent reports.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
    },
    /// The two-disease severity example.
    SeverityDemo {
        /// Number of midpoints in the grid over P_Minor.
        #[arg(long, default_value_t = 1000)]
        grid: usize,
        #[arg(long, default_value = "quadratic")]
        link: String,
    },
    /// Write the synthetic knowledge base.
    GenerateKb {
        #[arg(long, default_value_t = 5)]
        disorders: usize,
        #[arg(long, default_value_t = 4)]
        symptoms: usize,
        #[arg(long, default_value_t = 0.25)]
        overlap: f64,
        #[arg(long, default_value_t = 0.9)]
        reportability: f64,
        #[arg(long, default_value_t = 5.0)]
        bias: f64,
    },
    /// Run the HTTP session service.
    Serve {
        /// Knowledge bases to load, named by file stem.
        kb_files: Vec<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory for session snapshots.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
}

enum CliError {
    Input(String),
    Environment(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Environment(_) => 3,
        }
    }
}

fn input(e: impl ToString) -> CliError {
    CliError::Input(e.to_string())
}

type Table = (Vec<String>, Vec<Vec<String>>);

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DX_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Input(msg) | CliError::Environment(msg)) = &e;
            eprintln!("error: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn pick_kb_path(common: &Common, positional: Option<PathBuf>) -> Result<Option<PathBuf>, CliError> {
    match (positional, common.kb.clone()) {
        (Some(a), Some(b)) if a != b => Err(input("knowledge base given both positionally and with --kb")),
        (a, b) => Ok(a.or(b)),
    }
}

fn open_kb(path: &Path) -> Result<KnowledgeBase, CliError> {
    load_kb(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

/// The named file, or the seeded synthetic knowledge base.
fn kb_or_synthetic(common: &Common, positional: Option<PathBuf>) -> Result<KnowledgeBase, CliError> {
    match pick_kb_path(common, positional)? {
        Some(p) => open_kb(&p),
        None => generate_synthetic_ctslike(&SyntheticConfig {
            seed: common.seed,
            ..SyntheticConfig::default()
        })
        .map_err(input),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = &cli.common;
    let table = match cli.command {
        Command::Infer {
            kb_file,
            evidence,
            query,
        } => {
            let path = pick_kb_path(common, kb_file)?.ok_or_else(|| input("infer needs a knowledge base"))?;
            infer(&open_kb(&path)?, &evidence, query.as_deref())?
        }
        Command::SweepBias {
            kb_file,
            reported,
            disorder,
            biases,
            reportability,
            baseline,
        } => {
            let kb = kb_or_synthetic(common, kb_file)?;
            sweep(
                &kb,
                reported.as_deref(),
                disorder.as_deref(),
                &biases,
                reportability,
                baseline,
            )?
        }
        Command::LearnDemo { kb_file, scenarios } => learn(Arc::new(kb_or_synthetic(common, kb_file)?), &scenarios)?,
        Command::SeverityDemo { grid, link } => severity(grid, &link)?,
        Command::GenerateKb {
            disorders,
            symptoms,
            overlap,
            reportability,
            bias,
        } => {
            let config = SyntheticConfig {
                seed: common.seed,
                n_disorders: disorders,
                symptoms_per_disorder: symptoms,
                overlap_fraction: overlap,
                reportability,
                bias,
            };
            let kb = generate_synthetic_ctslike(&config).map_err(input)?;
            return match &common.out {
                Some(path) => save_kb(&kb, path).map_err(|e| CliError::Environment(e.to_string())),
                None => write_out(None, &to_canonical_json(&kb)),
            };
        }
        Command::Serve {
            kb_files,
            port,
            host,
            snapshots,
        } => return serve(common, kb_files, &host, port, snapshots),
    };
    let text = if common.csv || !matches!(table.0.first().map(String::as_str), Some("variable" | "case")) {
        to_csv(&table)?
    } else {
        to_aligned(&table)
    };
    write_out(common.out.as_deref(), &text)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let result = match path {
        Some(p) => File::create(p).and_then(|mut f| f.write_all(text.as_bytes())),
        None => io::stdout().write_all(text.as_bytes()),
    };
    result.map_err(|e| CliError::Environment(format!("cannot write output: {e}")))
}

fn to_csv((header, rows): &Table) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| CliError::Environment(e.to_string()))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::Environment(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Environment(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn to_aligned((header, rows): &Table) -> String {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(header).chain(rows) {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn infer(kb: &KnowledgeBase, evidence: &str, query: Option<&str>) -> Result<Table, CliError> {
    let ev = parse_evidence(evidence).map_err(input)?;
    let queries: Vec<String> = match query {
        Some(q) => q
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
        None => kb.disorders().to_vec(),
    };
    let posts = bn::posteriors(kb.network(), &queries, &ev).map_err(input)?;
    let rows = posts
        .iter()
        .flat_map(|p| {
            p.states
                .iter()
                .zip(&p.probabilities)
                .map(|(s, x)| vec![p.variable.clone(), s.clone(), sig6(*x)])
        })
        .collect();
    Ok((vec!["variable".into(), "state".into(), "probability".into()], rows))
}

fn sweep(
    kb: &KnowledgeBase,
    reported: Option<&str>,
    disorder: Option<&str>,
    biases: &[f64],
    reportability: f64,
    baseline: bool,
) -> Result<Table, CliError> {
    let reported = match reported {
        Some(spec) => parse_reported(spec).map_err(input)?,
        None => {
            let d = disorder.unwrap_or(&kb.disorders()[0]);
            if !kb.disorders().iter().any(|x| x == d) {
                return Err(input(format!("unknown disorder `{d}`")));
            }
            kb.symptoms_of(d)
                .into_iter()
                .take(3)
                .map(|s| (s.to_string(), "present".to_string()))
                .collect()
        }
    };
    log::info!("sweeping bias with reported {:?}", reported.keys().collect::<Vec<_>>());
    let table = experiments::bias_sweep(kb, &reported, reportability, biases).map_err(input)?;
    let mut header = vec!["bias".to_string()];
    header.extend(table.disorders.iter().cloned());
    let mut rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            std::iter::once(sig6(r.bias))
                .chain(r.presence.iter().map(|x| sig6(*x)))
                .collect()
        })
        .collect();
    if baseline {
        rows.push(
            std::iter::once("closed-only".to_string())
                .chain(table.closed_probe_only.iter().map(|x| sig6(*x)))
                .collect(),
        );
    }
    Ok((header, rows))
}

fn learn(kb: Arc<KnowledgeBase>, specs: &[String]) -> Result<Table, CliError> {
    let scenarios = if specs.is_empty() {
        let mut out = Vec::new();
        for (p, a) in [(0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (0, 2), (0, 3)] {
            out.push(Scenario::counts(&kb, p, a).map_err(input)?);
        }
        out
    } else {
        specs
            .iter()
            .map(|s| {
                Ok(Scenario {
                    label: s.clone(),
                    reported: parse_reported(s).map_err(input)?,
                })
            })
            .collect::<Result<_, CliError>>()?
    };
    let rows = experiments::learning_scenarios(&kb, &scenarios).map_err(input)?;
    let header = [
        "scenario",
        "present_reports",
        "absent_reports",
        "E[P_Global]",
        "E[B_Global]",
    ]
    .map(String::from)
    .to_vec();
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                r.present_reports.to_string(),
                r.absent_reports.to_string(),
                sig6(r.expected_reportability),
                sig6(r.expected_bias),
            ]
        })
        .collect();
    Ok((header, rows))
}

fn severity(grid: usize, link: &str) -> Result<Table, CliError> {
    let link = SeverityLink::by_name(link).map_err(input)?;
    let demo = experiments::severity_demo(grid, &link).map_err(input)?;
    let closed = demo.closed_form;
    let row = |case: &str, value: f64, exact: Option<f64>| {
        vec![case.to_string(), sig6(value), exact.map(sig6).unwrap_or_default()]
    };
    Ok((
        ["case", "posterior", "closed_form"].map(String::from).to_vec(),
        vec![
            row(
                "P(HeartAttack | Rash reported)",
                demo.heart_attack_given_rash,
                closed.map(|c| c.0),
            ),
            row(
                "P(RashDisease | ChestPain reported)",
                demo.rash_disease_given_chest_pain,
                closed.map(|c| c.1),
            ),
        ],
    ))
}

fn serve(
    common: &Common,
    mut kb_files: Vec<PathBuf>,
    host: &str,
    port: u16,
    snapshots: Option<PathBuf>,
) -> Result<(), CliError> {
    if let Some(kb) = &common.kb {
        kb_files.push(kb.clone());
    }
    let mut kbs = BTreeMap::new();
    if kb_files.is_empty() {
        let kb = generate_synthetic_ctslike(&SyntheticConfig {
            seed: common.seed,
            ..SyntheticConfig::default()
        })
        .map_err(input)?;
        kbs.insert("synthetic".to_string(), Arc::new(kb));
    }
    for path in &kb_files {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| input(format!("cannot name knowledge base {}", path.display())))?;
        kbs.insert(name, Arc::new(open_kb(path)?));
    }
    let mut state = AppState::new(kbs);
    if let Some(dir) = snapshots {
        let (restored, n) = state
            .with_snapshots(&dir)
            .map_err(|e| CliError::Environment(format!("{}: {e}", dir.display())))?;
        log::info!("restored {n} sessions from {}", dir.display());
        state = restored;
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Environment(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| CliError::Environment(format!("cannot bind {host}:{port}: {e}")))?;
        let addr = listener
            .local_addr()
            .map_err(|e| CliError::Environment(e.to_string()))?;
        println!("listening on http://{addr}");
        io::stdout().flush().ok();
        openprobe_service::serve(listener, Arc::new(state))
            .await
            .map_err(|e| CliError::Environment(e.to_string()))
    })
}
