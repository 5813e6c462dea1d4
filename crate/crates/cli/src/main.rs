use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use setcsp::acac::{materialize, GraphFile};
use setcsp::oracle::{
    conductance, decide_satisfiable, min_set_unsat_components, min_set_unsat_exhaustive,
};
use setcsp::rational::{self, Rational};
use setcsp::walk::{check_escape_lemma, ma_verify, EscapeStatus, VerifierParams, WalkConfig};
use setcsp::{
    compile, embed_csp, reduce, set_unsat, AcacInstance, BitString, ClassicalCsp, MaCircuitSpec,
    SetCspInstance, StringSet,
};

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "setcsp",
    version,
    about = "SetCSP compiler, reductions and exact checkers"
)]
struct Cli {
    /// Seed for randomized subcommands.
    #[arg(long, global = true, env = "SETCSP_SEED")]
    seed: Option<u64>,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Write a JSON run manifest here.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Compile a reversible verification circuit into a SetCSP instance.
    Compile {
        circuit: PathBuf,
        /// Also write one label per constraint (clock:t, aux:j, rand:j, prop:t, out).
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Turn a classical CSP into a SetCSP instance with singleton groups.
    Embed { csp: PathBuf },
    /// Bad/longing counts and set-unsat of a set of strings.
    Eval { instance: PathBuf, set: PathBuf },
    /// Decide satisfiability exactly via the constraint graph (exit 1 if unsatisfiable).
    Decide { instance: PathBuf },
    /// Minimum set-unsat by brute force.
    Brutemin {
        instance: PathBuf,
        /// Search unions of connected components only (an upper bound).
        #[arg(long)]
        components: bool,
    },
    /// Reduce a SetCSP instance to an explicit marked graph.
    Reduce { instance: PathBuf },
    /// Run the random-walk verifier (exit 1 on reject).
    Verify(VerifyArgs),
    /// Exact conductance of an explicit graph.
    Conductance { graph: PathBuf },
    /// Check the escape bound from a vertex set with exact hitting probabilities.
    EscapeCheck {
        graph: PathBuf,
        /// Comma-separated vertices of A; defaults to the unmarked vertices.
        #[arg(long, value_delimiter = ',')]
        set: Option<Vec<u32>>,
        /// Degree bound d; defaults to the maximum degree.
        #[arg(long)]
        degree_bound: Option<usize>,
    },
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    /// SetCSP instance JSON (reduced on the fly) or graph JSON.
    input: PathBuf,
    #[arg(long)]
    witness: String,
    #[arg(long, value_parser = parse_epsilon)]
    #[serde(serialize_with = "ser_opt_rational")]
    epsilon: Option<Rational>,
    #[arg(long)]
    trials_override: Option<u64>,
    #[arg(long)]
    steps_override: Option<u64>,
    /// Run every trial even after a hit.
    #[arg(long)]
    audit: bool,
}

fn parse_epsilon(s: &str) -> Result<Rational, String> {
    rational::parse_epsilon(s).map_err(|e| e.to_string())
}

fn ser_opt_rational<S: serde::Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_some(&rational::format(r)),
        None => s.serialize_none(),
    }
}

/// A subcommand's result: the JSON to emit and whether the answer is "yes".
struct Report {
    body: Value,
    yes: bool,
}

impl Report {
    fn ok(body: Value) -> Self {
        Self { body, yes: true }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_instance(path: &Path) -> anyhow::Result<SetCspInstance> {
    Ok(SetCspInstance::from_json(&read(path)?)?)
}

fn set_json(set: &StringSet) -> Value {
    json!(set.iter().map(|x| x.to_string()).collect::<Vec<_>>())
}

fn run(cli: &Cli) -> anyhow::Result<Report> {
    match &cli.command {
        Command::Compile { circuit, labels } => {
            let spec: MaCircuitSpec = read(circuit)?.parse()?;
            let compiled = compile(&spec)?;
            if let Some(path) = labels {
                fs::write(path, compiled.labels_json() + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(Report::ok(serde_json::from_str(
                &compiled.instance.to_json(),
            )?))
        }
        Command::Embed { csp } => {
            let csp = ClassicalCsp::from_json(&read(csp)?)?;
            Ok(Report::ok(serde_json::from_str(
                &embed_csp(&csp)?.to_json(),
            )?))
        }
        Command::Eval { instance, set } => {
            let inst = load_instance(instance)?;
            let set = StringSet::parse_lines(&read(set)?)?;
            Ok(Report::ok(set_unsat(&inst, &set)?.to_json()))
        }
        Command::Decide { instance } => {
            let sat = decide_satisfiable(&load_instance(instance)?)?;
            let result = if sat.satisfiable {
                "satisfiable"
            } else {
                "unsatisfiable"
            };
            Ok(Report {
                body: json!({
                    "result": result,
                    "clean_components": sat.clean_components,
                    "witness": sat.witness.as_ref().map(set_json),
                }),
                yes: sat.satisfiable,
            })
        }
        Command::Brutemin {
            instance,
            components,
        } => {
            let inst = load_instance(instance)?;
            let (res, method) = if *components {
                (min_set_unsat_components(&inst)?, "component-unions")
            } else {
                (min_set_unsat_exhaustive(&inst)?, "exhaustive")
            };
            Ok(Report::ok(json!({
                "method": method,
                "min": rational::format(&res.min_value),
                "argmin": set_json(&res.argmin),
                "subsets_examined": res.subsets_examined,
            })))
        }
        Command::Reduce { instance } => {
            let acac = reduce(&load_instance(instance)?);
            let g = materialize(&acac)?;
            let file = GraphFile::from_graph(&g, acac.epsilon(), Some(acac.degree_bound()));
            Ok(Report::ok(serde_json::from_str(&file.to_json())?))
        }
        Command::Verify(args) => verify(cli, args),
        Command::Conductance { graph } => {
            let (g, _) = GraphFile::parse(&read(graph)?)?.into_graph()?;
            let phi = conductance(&g)?;
            Ok(Report::ok(json!({
                "conductance": rational::format(&phi.value),
                "connected": phi.connected,
            })))
        }
        Command::EscapeCheck {
            graph,
            set,
            degree_bound,
        } => {
            let (g, _) = GraphFile::parse(&read(graph)?)?.into_graph()?;
            let a: Vec<u32> = match set {
                Some(a) => a.clone(),
                None => (0..g.vertex_count() as u32)
                    .filter(|&v| !g.is_marked(v as usize))
                    .collect(),
            };
            let d = degree_bound.unwrap_or_else(|| g.max_degree());
            let report = check_escape_lemma(&g, &a, d)?;
            let yes = !matches!(report.status, EscapeStatus::Violated { .. });
            Ok(Report {
                body: report.to_json(),
                yes,
            })
        }
    }
}

fn verify(cli: &Cli, args: &VerifyArgs) -> anyhow::Result<Report> {
    let seed = cli
        .seed
        .ok_or_else(|| anyhow!("verify is randomized; pass --seed or set SETCSP_SEED"))?;
    let text = read(&args.input)?;
    let value: Value = serde_json::from_str(&text).context("input is not JSON")?;
    let acac = if value.get("constraints").is_some() {
        reduce(&SetCspInstance::from_json(&text)?)
    } else if value.get("edges").is_some() {
        let file = GraphFile::parse(&text)?;
        let declared = file.degree_bound;
        let (g, eps) = file.into_graph()?;
        let bits = g.bits();
        let d = declared.unwrap_or_else(|| g.max_degree());
        AcacInstance::new(Arc::new(g), bits, d, eps)
    } else {
        bail!("input is neither an instance (\"constraints\") nor a graph (\"edges\")");
    };
    let witness: BitString = args.witness.parse()?;
    let params = VerifierParams::for_instance(&acac, args.epsilon)?;
    let mut config = WalkConfig::from_params(&params, seed);
    config.trials = args.trials_override.unwrap_or(config.trials);
    config.steps = args.steps_override.unwrap_or(config.steps);
    config.audit = args.audit;
    let verdict = ma_verify(&acac, &witness, &config)?;
    let mut body = verdict.to_json();
    body["epsilon"] = json!(rational::format(&params.epsilon));
    body["degree_bound"] = json!(params.degree_bound);
    body["q1"] = json!(params.q1);
    body["q2"] = json!(params.q2);
    if args.audit {
        body["hit_rate_estimate"] = json!(format!(
            "{:.6}",
            verdict.hits as f64 / verdict.trials as f64
        ));
    }
    Ok(Report {
        body,
        yes: verdict.accepted,
    })
}

fn emit(cli: &Cli, body: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(body)? + "\n";
    match &cli.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_manifest(cli: &Cli, path: &Path, exit: u8, millis: u128) -> anyhow::Result<()> {
    let command = serde_json::to_value(&cli.command)?;
    let (subcommand, parameters) = match command {
        Value::Object(map) => map.into_iter().next().expect("one variant"),
        Value::String(name) => (name, Value::Null),
        other => ("unknown".into(), other),
    };
    let manifest = json!({
        "subcommand": subcommand,
        "parameters": parameters,
        "seed": cli.seed,
        "output": cli.output,
        "argv": std::env::args().collect::<Vec<_>>(),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "exit_code": exit,
        "wall_time_ms": millis,
    });
    fs::write(path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let code = match run(&cli).and_then(|r| emit(&cli, &r.body).map(|_| r.yes)) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    if let Some(path) = &cli.manifest {
        if let Err(e) = write_manifest(&cli, path, code, started.elapsed().as_millis()) {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code)
}
