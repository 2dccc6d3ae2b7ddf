use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rdma_robust::checker::CheckerConfig;
use rdma_robust::corpus::{load_case, run_case, run_corpus, Engine, LitmusReport, RunConfig, Status};
use rdma_robust::gen::{gen_abp_pair, gen_pcp, gen_vass, PcpInstance, VassSpec};
use rdma_robust::normal_form::{normalize_violation, verify_normal_form};
use rdma_robust::oracle::Bounds;
use rdma_robust::program::{parse_program, Expectation, Value};
use rdma_robust::trace::{sc_cycle, trace_from_linearisation};
use rdma_robust::trace::format::parse_linearisation;
use rdma_robust::witness::{self, trace_from_json, witness_to_json, WitnessJson};

const PASS: u8 = 0;
const FAIL: u8 = 1;
const USAGE: u8 = 2;
const INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(name = "rdmarobust", version, about = "Consistency and robustness checks for RDMA programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide robustness of a litmus file.
    CheckRobustness {
        file: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        /// Write the normal-form witness here when one is found.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check a linearisation against a program and the consistency models.
    CheckConsistency { program: PathBuf, trace: PathBuf },
    /// Bring the trace of a witness file into normal form.
    Normalize {
        witness: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Emit a generated program in the litmus syntax.
    Gen {
        #[command(subcommand)]
        what: GenCmd,
        #[arg(short, long, global = true)]
        output: Option<PathBuf>,
    },
    /// Corpus operations.
    Corpus {
        #[command(subcommand)]
        what: CorpusCmd,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    /// Leader program for a VASS given as JSON.
    Vass {
        spec: PathBuf,
        #[arg(long)]
        gadget: bool,
    },
    /// PCP program for an instance given as JSON `{"u": [[..]], "v": [[..]]}`.
    Pcp { instance: PathBuf },
    /// Alternating bit protocol; words are comma separated, read right to left.
    Abp {
        word: String,
        /// Word the receiver expects, defaults to the sent word.
        #[arg(long)]
        expect: Option<String>,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Run every `.lit` file below a directory.
    Run {
        dir: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        /// Write all reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Oracle,
    Checker,
    Both,
}

#[derive(Args)]
struct EngineArgs {
    #[arg(long, value_enum, default_value = "both")]
    engine: EngineArg,
    #[arg(long, default_value_t = CheckerConfig::default().counter_bound)]
    counter_bound: usize,
    #[arg(long, default_value_t = Bounds::default().loop_bound)]
    loop_bound: usize,
    #[arg(long, default_value_t = CheckerConfig::default().max_states)]
    max_states: usize,
}

impl EngineArgs {
    fn config(&self) -> RunConfig {
        let engine = match self.engine {
            EngineArg::Oracle => Engine::Oracle,
            EngineArg::Checker => Engine::Checker,
            EngineArg::Both => Engine::Both,
        };
        RunConfig {
            engine,
            bounds: Bounds { loop_bound: self.loop_bound, ..Bounds::default() },
            checker: CheckerConfig {
                counter_bound: self.counter_bound,
                max_states: self.max_states,
                loop_bound: Some(self.loop_bound),
                max_cycle_len: None,
            },
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_json(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn verdict(r: Option<bool>) -> &'static str {
    match r {
        Some(true) => "robust",
        Some(false) => "not-robust",
        None => "inconclusive",
    }
}

fn status_code(s: Status) -> u8 {
    match s {
        Status::Pass => PASS,
        Status::ExpectationMismatch | Status::Disagreement => FAIL,
        Status::Inconclusive => INCONCLUSIVE,
    }
}

fn print_witness(w: &WitnessJson) {
    println!("sc cycle:");
    for e in &w.sc_cycle {
        println!("  {} -{}-> {}", e.from, e.rel, e.to);
    }
    println!("witness (tid iota kind loc v_r v_w nbar part):");
    let opt = |v: Option<Value>| v.map_or("-".to_string(), |v| v.to_string());
    for e in &w.events {
        let part = e.part.map_or("-".to_string(), |p| format!("{p:?}"));
        let pivot = if w.pivot.is_some_and(|p| p.tid == e.tid && p.iota == e.iota) { " pivot" } else { "" };
        println!(
            "  {} {} {} {} {} {} {} {}{}",
            e.tid,
            e.iota,
            e.kind,
            e.loc.as_deref().unwrap_or("-"),
            opt(e.v_r),
            opt(e.v_w),
            e.nbar.as_deref().unwrap_or("-"),
            part,
            pivot
        );
    }
}

fn print_report(r: &LitmusReport) {
    println!("file: {}", r.path.display());
    if let Some(o) = r.oracle {
        println!("oracle: {}", verdict(Some(o)));
    }
    if r.checker_states > 0 {
        println!("checker: {} ({} states)", verdict(r.checker), r.checker_states);
    }
    if let Some(e) = r.expectation {
        println!("expect: {}", verdict(Some(e == Expectation::Robust)));
    }
    println!("status: {}", r.status);
}

fn check_robustness(file: &Path, args: &EngineArgs, json: Option<&Path>) -> Result<u8> {
    let case = load_case(file)?;
    let r = run_case(&case, &args.config());
    print_report(&r);
    if let Some(w) = &r.witness {
        print_witness(w);
        if let Some(out) = json {
            write_json(out, &witness::to_string_pretty(w))?;
        }
    }
    Ok(status_code(r.status))
}

fn check_consistency(program: &Path, trace: &Path) -> Result<u8> {
    let p = parse_program(&read(program)?).with_context(|| format!("parsing {}", program.display()))?;
    let tau = parse_linearisation(&read(trace)?, &p).with_context(|| format!("parsing {}", trace.display()))?;
    let mut ok = true;
    for tid in p.thread_ids() {
        let mut own: Vec<_> = tau.iter().filter(|e| e.tid == tid).collect();
        own.sort_by_key(|e| e.iota);
        let labels: Vec<_> = own.iter().map(|e| e.label).collect();
        if !p.accepts_prefix(tid, &labels) {
            println!("thread {} ({}): events are not a path prefix", tid, p.thread(tid).name);
            ok = false;
        }
    }
    if let Some(e) = tau.iter().find(|e| e.tid > p.threads().len()) {
        println!("event {} belongs to no thread", e.id());
        ok = false;
    }
    let t = match trace_from_linearisation(&tau) {
        Ok(t) => t,
        Err(m) => {
            println!("malformed: {m}");
            return Ok(FAIL);
        }
    };
    let rdma = t.is_rdma_consistent();
    let sc = t.is_sc_consistent();
    println!("events: {}", t.len());
    println!("rdma-consistent: {rdma}");
    println!("sc-consistent: {sc}");
    if let Some(cycle) = sc_cycle(&t) {
        println!("sc cycle:");
        for c in cycle {
            println!("  {} -{}-> {}", t.event(c.from).id(), c.rel, t.event(c.to).id());
        }
    }
    Ok(if ok && rdma { PASS } else { FAIL })
}

fn normalize(path: &Path, json: Option<&Path>) -> Result<u8> {
    let input = witness::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let mut sym = Default::default();
    let t = trace_from_json(&input, &mut sym)?;
    let n = match normalize_violation(&t) {
        Ok(n) => n,
        Err(e) => {
            println!("cannot normalize: {e}");
            return Ok(FAIL);
        }
    };
    let out = witness_to_json(&n.witness, &sym);
    print_witness(&out);
    let v = verify_normal_form(&n.witness);
    for d in &v.diagnostics {
        println!("violation: {d}");
    }
    println!("verified: {}", v.ok);
    if let Some(o) = json {
        write_json(o, &witness::to_string_pretty(&out))?;
    }
    Ok(if v.ok { PASS } else { FAIL })
}

fn parse_word(s: &str) -> Result<Vec<Value>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<Value>().with_context(|| format!("bad letter `{x}`")))
        .collect()
}

fn generate(what: &GenCmd, output: Option<&Path>) -> Result<u8> {
    let p = match what {
        GenCmd::Vass { spec, gadget } => {
            let spec: VassSpec = serde_json::from_str(&read(spec)?).context("parsing VASS spec")?;
            gen_vass(&spec, *gadget)?
        }
        GenCmd::Pcp { instance } => {
            let inst: PcpInstance = serde_json::from_str(&read(instance)?).context("parsing PCP instance")?;
            gen_pcp(&inst)?
        }
        GenCmd::Abp { word, expect } => {
            let sent = parse_word(word)?;
            let expected = match expect {
                Some(e) => parse_word(e)?,
                None => sent.clone(),
            };
            if sent.iter().chain(&expected).any(|&v| v <= 0) {
                bail!("letters must be positive");
            }
            gen_abp_pair(&sent, &expected)
        }
    };
    let text = p.to_dsl();
    match output {
        Some(o) => fs::write(o, text).with_context(|| format!("writing {}", o.display()))?,
        None => print!("{text}"),
    }
    Ok(PASS)
}

fn corpus_run(dir: &Path, args: &EngineArgs, json: Option<&Path>) -> Result<u8> {
    let reports = run_corpus(dir, &args.config())?;
    let mut worst = PASS;
    for r in &reports {
        println!(
            "{:<21} oracle={:<12} checker={:<12} {}",
            r.status.to_string(),
            r.oracle.map_or("-", |o| verdict(Some(o))),
            if r.checker_states > 0 { verdict(r.checker) } else { "-" },
            r.path.display()
        );
        worst = match (worst, status_code(r.status)) {
            (FAIL, _) | (_, FAIL) => FAIL,
            (a, b) => a.max(b),
        };
    }
    let count = |s: Status| reports.iter().filter(|r| r.status == s).count();
    println!(
        "{} cases: {} pass, {} expectation mismatch, {} disagreement, {} inconclusive",
        reports.len(),
        count(Status::Pass),
        count(Status::ExpectationMismatch),
        count(Status::Disagreement),
        count(Status::Inconclusive)
    );
    if let Some(o) = json {
        write_json(o, &serde_json::to_string_pretty(&reports)?)?;
    }
    Ok(worst)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.cmd {
        Cmd::CheckRobustness { file, engine, json } => check_robustness(file, engine, json.as_deref()),
        Cmd::CheckConsistency { program, trace } => check_consistency(program, trace),
        Cmd::Normalize { witness, json } => normalize(witness, json.as_deref()),
        Cmd::Gen { what, output } => generate(what, output.as_deref()),
        Cmd::Corpus { what: CorpusCmd::Run { dir, engine, json } } => corpus_run(dir, engine, json.as_deref()),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE)
        }
    }
}
