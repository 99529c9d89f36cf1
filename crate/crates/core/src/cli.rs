//! Command-line front end. `run` parses arguments, dispatches, and returns
//! the process exit code:
//!
//! * 0: feasible, consistent, or passed
//! * 3: infeasible or an inconsistency was found
//! * 2: invalid input or usage
//! * 1: internal error or exhausted budget

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::behavior::{
    chsh_value, enumerate_deterministic_vertices, validate_behavior, Behavior, Scenario, DEFAULT_VERTEX_CAP,
};
use crate::certificate::CertificateFile;
use crate::duplication::{
    check_cp_consistency, credence_outcome, credence_via_binomial, heads_count_distribution, self_locate,
    simulate_betting, AgentRole, BuyPolicy, CredenceRule, DuplicationExperiment,
};
use crate::induction::{
    bb_credence, conditional_m, estimate_m, format_bits, parse_bits, random_bits, AlgProbEstimate, BbRule,
    ToyMachineConfig,
};
use crate::io::{read_behavior, read_behavior_file, BehaviorFile};
use crate::membership::{
    check, extract_inequality, ld_sw_equivalence_test, Inequality, Membership, MembershipError, MembershipTest,
    SequentialScenario,
};
use crate::quantum::{
    born_behavior, chsh_optimize, lf_violation_search, reverse_check, EwfsProtocol, ProtocolParams, QuantumError,
    StateFamily,
};
use crate::rational::{format_rational, parse_rational, to_f64, Rational, RationalizeOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_FOUND: i32 = 3;

/// Denominator cap for Born tables when `--den-cap` is not given.
pub const DEFAULT_QUANTUM_DEN_CAP: u64 = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "jointprob", version, about = "Exact joint-description checks, duplication credences and a toy induction estimator")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Global {
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long = "vertex-cap", global = true, default_value_t = DEFAULT_VERTEX_CAP)]
    pub vertex_cap: u64,
    /// Denominator cap: rounds decimal inputs, and Born tables (default 10^6).
    #[arg(long = "den-cap", visible_alias = "rationalize-max-den", global = true)]
    pub den_cap: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long = "settings-a", default_value_t = 2)]
    pub settings_a: usize,
    #[arg(long = "settings-b", default_value_t = 2)]
    pub settings_b: usize,
    #[arg(long = "outcomes-a", default_value_t = 2)]
    pub outcomes_a: usize,
    #[arg(long = "outcomes-b", default_value_t = 2)]
    pub outcomes_b: usize,
    #[arg(long = "friend-a")]
    pub friend_a: bool,
    #[arg(long = "friend-b")]
    pub friend_b: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check normalization, nonnegativity and no-signalling.
    Validate { file: PathBuf },
    /// List the deterministic strategies of a scenario.
    Vertices(ScenarioArgs),
    /// CHSH value of a binary 2x2 table (exit 3 above 2).
    Chsh { file: PathBuf },
    /// Joint distribution over all settings' outcomes.
    CheckJoint { file: PathBuf },
    /// Mixture of deterministic strategies.
    CheckLd { file: PathBuf },
    /// Local Friendliness with the friend's outcome as a hidden variable.
    CheckLf { file: PathBuf },
    /// Sequential reverse-and-remeasure scenario.
    CheckSw {
        file: PathBuf,
        /// Defaults to settings_a - 1.
        #[arg(long)]
        reversals: Option<usize>,
    },
    /// Compare LD and sequential verdicts on vertices and random mixtures.
    LdSwTest {
        #[arg(long = "settings-a", default_value_t = 2)]
        settings_a: usize,
        #[arg(long = "settings-b", default_value_t = 2)]
        settings_b: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Separating inequality from an infeasibility certificate.
    ExtractIneq {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = TestArg::Ld)]
        test: TestArg,
    },
    /// Three-qubit friend protocols: Born tables, CHSH optimizer, LF search.
    #[command(subcommand)]
    Quantum(QuantumCmd),
    /// Duplication experiments: credences, simulation, consistency.
    #[command(subcommand)]
    Dup(DupCmd),
    /// Algorithmic-probability estimates on the toy machine.
    #[command(subcommand)]
    Induct(InductCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TestArg {
    Joint,
    Ld,
    Lf,
    Sw,
}

impl From<TestArg> for MembershipTest {
    fn from(t: TestArg) -> Self {
        match t {
            TestArg::Joint => Self::Joint,
            TestArg::Ld => Self::Ld,
            TestArg::Lf => Self::Lf,
            TestArg::Sw => Self::Sw,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum QuantumCmd {
    /// Born table of a protocol; emits a behavior file with the protocol.
    Behavior {
        /// Behavior file whose `protocol` object defines the run.
        #[arg(long)]
        protocol: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        schmidt: Option<f64>,
        #[arg(long = "system-rotation", allow_hyphen_values = true, default_value_t = 0.0)]
        system_rotation: f64,
        /// Angles for Alice's settings 2, 3, ... (comma separated).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alice: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        bob: Vec<f64>,
    },
    /// Maximize CHSH over Schmidt angle and measurement angles.
    Optimize {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20_000)]
        iterations: usize,
        /// Restrict to product states.
        #[arg(long)]
        product: bool,
    },
    /// Search protocols for a certified Local Friendliness violation.
    LfSearch {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long = "settings-a", default_value_t = 3)]
        settings_a: usize,
        #[arg(long = "settings-b", default_value_t = 3)]
        settings_b: usize,
        /// Also write the violating behavior file (with protocol) here.
        #[arg(long = "behavior-out")]
        behavior_out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct DupArgs {
    #[arg(long = "N", default_value_t = 1)]
    pub n: u64,
    #[arg(long = "M", default_value_t = 2)]
    pub m: u64,
    /// Probability of Heads.
    #[arg(long, default_value = "1/2")]
    pub q: String,
}

#[derive(Debug, Subcommand)]
pub enum DupCmd {
    /// Single-lab credence, or self-location with --counts.
    Credence {
        #[command(flatten)]
        args: DupArgs,
        #[arg(long, default_value = "elga")]
        rule: String,
        #[arg(long, value_enum, default_value_t = RoleArg::Freya)]
        role: RoleArg,
        /// label=count pairs, comma separated.
        #[arg(long)]
        counts: Option<String>,
    },
    /// Copy-weighted binomial credence for N labs.
    Binomial {
        #[command(flatten)]
        args: DupArgs,
    },
    /// Seeded betting simulation.
    Simulate {
        #[command(flatten)]
        args: DupArgs,
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "1/20")]
        eps: String,
        /// Defaults to the duplicated agent's Heads credence minus eps.
        #[arg(long)]
        price: Option<String>,
        #[arg(long, value_enum, default_value_t = PolicyArg::Always)]
        policy: PolicyArg,
        /// Per-lab rows CSV.
        #[arg(long = "rows-out")]
        rows_out: Option<PathBuf>,
    },
    /// Whether two rules agree on the shared Tails event with one lab.
    CpCheck {
        #[command(flatten)]
        args: DupArgs,
        #[arg(long = "rule-f", default_value = "elga")]
        rule_f: String,
        #[arg(long = "rule-w", default_value = "elga")]
        rule_w: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RoleArg {
    Freya,
    Wigner,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    Always,
    Never,
    /// Buy when the copy-weighted Heads credence exceeds the price.
    Favorable,
}

#[derive(Debug, Args)]
pub struct MachineArgs {
    #[arg(long = "max-len", default_value_t = 14)]
    pub max_len: u32,
    #[arg(long, default_value_t = 10_000)]
    pub steps: u64,
}

#[derive(Debug, Subcommand)]
pub enum InductCmd {
    /// Lower bound on M(x).
    M {
        x: String,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// M(xy) / M(x).
    Cond {
        x: String,
        y: String,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Ordinary vs thermal continuation credence.
    Bb {
        #[arg(long)]
        x: String,
        #[arg(long = "y-oo")]
        y_oo: String,
        /// Thermal continuation; drawn from --seed when omitted.
        #[arg(long = "y-bb")]
        y_bb: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "n-oo", default_value_t = 1)]
        n_oo: u64,
        #[arg(long = "n-bb", default_value_t = 1000)]
        n_bb: u64,
        #[arg(long, value_enum, default_value_t = BbRuleArg::Induction)]
        rule: BbRuleArg,
        #[command(flatten)]
        machine: MachineArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BbRuleArg {
    Indifference,
    Induction,
}

/// A failed command: message plus exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn input(msg: impl ToString) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: msg.to_string(),
    }
}

fn internal(msg: impl ToString) -> Failure {
    Failure {
        code: EXIT_INTERNAL,
        message: msg.to_string(),
    }
}

impl From<MembershipError> for Failure {
    fn from(e: MembershipError) -> Self {
        match e {
            MembershipError::Lp(_) | MembershipError::Verify(_) => internal(e),
            _ => input(e),
        }
    }
}

/// What a command produced, in every format.
pub struct Report {
    pub code: i32,
    pub human: String,
    pub csv: String,
    pub json: Value,
}

impl Report {
    fn render(&self, f: Format) -> String {
        match f {
            Format::Human => self.human.clone(),
            Format::Csv => self.csv.clone(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("json values serialize");
                s.push('\n');
                s
            }
        }
    }
}

/// Parses `args` (program name first), runs the command, and writes the
/// report to `stdout` (or `--out`) and diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind::*;
            let code = match e.kind() {
                DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand => EXIT_OK,
                _ => EXIT_INPUT,
            };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(report) => {
            let text = report.render(cli.global.format);
            let written = match &cli.global.out {
                Some(path) => write_file(path, &text),
                None => stdout.write_all(text.as_bytes()).map_err(internal),
            };
            match written {
                Ok(()) => report.code,
                Err(f) => {
                    let _ = writeln!(stderr, "error: {}", f.message);
                    f.code
                }
            }
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| internal(format!("cannot write {}: {e}", path.display())))
}

pub fn dispatch(cli: &Cli) -> Result<Report, Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Validate { file } => cmd_validate(&load(file, g)?),
        Command::Vertices(s) => cmd_vertices(s, g),
        Command::Chsh { file } => cmd_chsh(&load(file, g)?),
        Command::CheckJoint { file } => cmd_check(MembershipTest::Joint, &load(file, g)?, None, g),
        Command::CheckLd { file } => cmd_check(MembershipTest::Ld, &load(file, g)?, None, g),
        Command::CheckLf { file } => cmd_check(MembershipTest::Lf, &load(file, g)?, None, g),
        Command::CheckSw { file, reversals } => cmd_check(MembershipTest::Sw, &load(file, g)?, *reversals, g),
        Command::LdSwTest {
            settings_a,
            settings_b,
            samples,
            seed,
        } => cmd_ld_sw(*settings_a, *settings_b, *samples, *seed, g),
        Command::ExtractIneq { file, test } => cmd_extract(MembershipTest::from(*test), &load(file, g)?, g),
        Command::Quantum(q) => cmd_quantum(q, g),
        Command::Dup(d) => cmd_dup(d),
        Command::Induct(i) => cmd_induct(i),
    }
}

fn load(path: &Path, g: &Global) -> Result<Behavior, Failure> {
    let opts = RationalizeOptions {
        max_den: g.den_cap,
        ..RationalizeOptions::default()
    };
    read_behavior(path, &opts).map_err(input)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_validate(b: &Behavior) -> Result<Report, Failure> {
    let r = validate_behavior(b);
    let mut human = format!(
        "scenario: {}\nnormalization: {}\nnonnegativity: {}\nno-signalling (Alice): {}\nno-signalling (Bob): {}\n",
        b.scenario(),
        ok(r.normalization_ok),
        ok(r.nonnegativity_ok),
        ok(r.no_signalling_a_ok),
        ok(r.no_signalling_b_ok)
    );
    let mut csv = String::from("violation\n");
    for v in &r.violations {
        let text = serde_json::to_string(v).expect("serializable");
        let _ = writeln!(human, "  {text}");
        let _ = writeln!(csv, "{}", csv_field(&text));
    }
    Ok(Report {
        code: if r.is_valid() { EXIT_OK } else { EXIT_FOUND },
        human,
        csv,
        json: serde_json::to_value(&r).expect("serializable"),
    })
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_vertices(s: &ScenarioArgs, g: &Global) -> Result<Report, Failure> {
    let mut sc = Scenario::new(s.settings_a, s.settings_b, s.outcomes_a, s.outcomes_b).map_err(input)?;
    if s.friend_a {
        sc = sc.with_friend_a();
    }
    if s.friend_b {
        sc = sc.with_friend_b();
    }
    let verts = enumerate_deterministic_vertices(&sc, g.vertex_cap).map_err(input)?;
    let mut human = format!("{} deterministic strategies for {sc}\n", verts.len());
    let mut csv = String::from("index,alice,bob\n");
    for (i, v) in verts.iter().enumerate() {
        let _ = writeln!(human, "{i:>6}  A: {}  B: {}", join(&v.alice), join(&v.bob));
        let _ = writeln!(csv, "{i},{},{}", join(&v.alice), join(&v.bob));
    }
    Ok(Report {
        code: EXIT_OK,
        human,
        csv,
        json: json!({
            "scenario": serde_json::to_value(sc).expect("serializable"),
            "count": verts.len(),
            "vertices": verts,
        }),
    })
}

fn cmd_chsh(b: &Behavior) -> Result<Report, Failure> {
    let v = chsh_value(b).map_err(input)?;
    let text = format_rational(&v);
    let violated = v > Rational::from_integer(2.into());
    Ok(Report {
        code: if violated { EXIT_FOUND } else { EXIT_OK },
        human: format!("CHSH = {text} ({:.12}); local bound 2\n", to_f64(&v)),
        csv: format!("chsh,local_bound,violated\n{text},2/1,{violated}\n"),
        json: json!({ "chsh": text, "local_bound": "2/1", "violated": violated }),
    })
}

fn rationals(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

fn certificate_report(m: &Membership) -> Result<Report, Failure> {
    m.verify()
        .map_err(|e| internal(format!("certificate failed independent verification: {e}")))?;
    let p = &m.encoding.problem;
    let cert = CertificateFile::from(&m.certificate);
    let (kind, values) = match &cert {
        CertificateFile::Feasible { witness } => ("witness", witness),
        CertificateFile::Infeasible { functional } => ("functional", functional),
    };
    let verdict = m.certificate.verdict();
    let mut human = format!(
        "test: {}\nscenario: {}\nverdict: {verdict}\nvariables: {}, constraints: {}\ncertificate: verified\n{kind}:",
        m.encoding.test.name(),
        m.encoding.behavior.scenario(),
        p.variable_count(),
        p.rows().len()
    );
    let nonzero: Vec<(usize, &String)> = values.iter().enumerate().filter(|(_, v)| v.as_str() != "0/1").collect();
    for (i, v) in &nonzero {
        let _ = write!(human, " [{i}]={v}");
    }
    human.push('\n');
    let mut csv = format!("test,verdict,kind,index,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(csv, "{},{verdict},{kind},{i},{v}", m.encoding.test.name());
    }
    Ok(Report {
        code: if m.is_member() { EXIT_OK } else { EXIT_FOUND },
        human,
        csv,
        json: json!({
            "test": m.encoding.test.name(),
            "variables": p.variable_count(),
            "constraints": p.rows().len(),
            "verified": true,
            "certificate": serde_json::to_value(&cert).expect("serializable"),
        }),
    })
}

fn membership(test: MembershipTest, b: &Behavior, reversals: Option<usize>, g: &Global) -> Result<Membership, Failure> {
    Ok(match (test, reversals) {
        (MembershipTest::Sw, Some(r)) => {
            let seq = SequentialScenario {
                base: *b.scenario(),
                reversals: r,
            };
            crate::membership::check_sw_sequential(b, &seq, g.vertex_cap)?
        }
        _ => check(test, b, g.vertex_cap)?,
    })
}

fn cmd_check(test: MembershipTest, b: &Behavior, reversals: Option<usize>, g: &Global) -> Result<Report, Failure> {
    certificate_report(&membership(test, b, reversals, g)?)
}

fn cmd_ld_sw(sa: usize, sb: usize, samples: usize, seed: u64, g: &Global) -> Result<Report, Failure> {
    let r = ld_sw_equivalence_test(sa, sb, samples, seed, g.vertex_cap)?;
    let mut human = format!(
        "LD vs sequential ({} reversals) on binary {sa}x{sb}\nvertices: {}\nsamples: {} (seed {seed})\ninfeasible under both: {}\ndisagreements: {}\n",
        r.reversals,
        r.vertices_checked,
        r.samples_checked,
        r.infeasible_cases,
        r.disagreements.len()
    );
    let mut csv = String::from("case,index,ld_feasible,sw_feasible\n");
    for d in &r.disagreements {
        let (case, i) = match d.case {
            crate::membership::CaseId::Vertex(i) => ("vertex", i),
            crate::membership::CaseId::Sample(i) => ("sample", i),
        };
        let _ = writeln!(human, "  {case} {i}: ld {} sw {}", d.ld_feasible, d.sw_feasible);
        let _ = writeln!(csv, "{case},{i},{},{}", d.ld_feasible, d.sw_feasible);
    }
    Ok(Report {
        code: if r.passed() { EXIT_OK } else { EXIT_FOUND },
        human,
        csv,
        json: serde_json::to_value(&r).expect("serializable"),
    })
}

fn inequality_json(q: &Inequality, s: &Scenario) -> Value {
    let mut table = BTreeMap::new();
    for (x, y) in s.cells() {
        let cell = &q.coefficients[s.cell(x, y)];
        let rows: Vec<Vec<String>> = (0..s.outcomes_a)
            .map(|a| (0..s.outcomes_b).map(|b| format_rational(&cell[s.entry(a, b)])).collect())
            .collect();
        table.insert(format!("{x},{y}"), rows);
    }
    json!({ "coefficients": table, "bound": format_rational(&q.bound) })
}

fn inequality_text(q: &Inequality, s: &Scenario) -> String {
    let mut terms = Vec::new();
    for (x, y) in s.cells() {
        for a in 0..s.outcomes_a {
            for b in 0..s.outcomes_b {
                let c = &q.coefficients[s.cell(x, y)][s.entry(a, b)];
                if *c != Rational::from_integer(0.into()) {
                    terms.push(format!("({}) p({a}{b}|{x}{y})", format_rational(c)));
                }
            }
        }
    }
    format!("{} <= {}", terms.join(" + "), format_rational(&q.bound))
}

fn cmd_extract(test: MembershipTest, b: &Behavior, g: &Global) -> Result<Report, Failure> {
    let m = membership(test, b, None, g)?;
    m.verify()
        .map_err(|e| internal(format!("certificate failed independent verification: {e}")))?;
    if m.is_member() {
        return Ok(Report {
            code: EXIT_OK,
            human: format!("behavior passes {}; no separating inequality\n", test.name()),
            csv: "test,verdict\n".to_string() + test.name() + ",feasible\n",
            json: json!({ "test": test.name(), "verdict": "feasible" }),
        });
    }
    let rep = extract_inequality(&m, g.vertex_cap)?;
    let s = rep.scenario;
    let mut human = format!(
        "test: {}\nraw inequality: {}\nvalue on input: {}\n",
        test.name(),
        inequality_text(&rep.raw, &s),
        format_rational(&rep.raw_value)
    );
    let mut csv = String::from("form,x,y,a,b,coefficient\n");
    let mut forms = vec![("raw", &rep.raw)];
    if let Some(t) = &rep.tight_bound {
        let _ = writeln!(human, "max over deterministic strategies: {}", format_rational(t));
    }
    if let (Some(n), Some(v)) = (&rep.normalized, &rep.normalized_value) {
        let _ = writeln!(
            human,
            "normalized: {}\nnormalized value on input: {}",
            inequality_text(n, &s),
            format_rational(v)
        );
        forms.push(("normalized", n));
    }
    for (name, q) in &forms {
        for (x, y) in s.cells() {
            for a in 0..s.outcomes_a {
                for b in 0..s.outcomes_b {
                    let _ = writeln!(
                        csv,
                        "{name},{x},{y},{a},{b},{}",
                        format_rational(&q.coefficients[s.cell(x, y)][s.entry(a, b)])
                    );
                }
            }
        }
        let _ = writeln!(csv, "{name},,,,,bound={}", format_rational(&q.bound));
    }
    let opt = |r: &Option<Rational>| r.as_ref().map(format_rational);
    Ok(Report {
        code: EXIT_FOUND,
        human,
        csv,
        json: json!({
            "test": test.name(),
            "verdict": "infeasible",
            "raw": inequality_json(&rep.raw, &s),
            "raw_value": format_rational(&rep.raw_value),
            "tight_bound": opt(&rep.tight_bound),
            "normalized": rep.normalized.as_ref().map(|n| inequality_json(n, &s)),
            "normalized_value": opt(&rep.normalized_value),
        }),
    })
}

fn quantum_failure(e: QuantumError) -> Failure {
    match e {
        QuantumError::NotFound { .. } => internal(e),
        QuantumError::Unnormalized(_) | QuantumError::NonUnitary(_) | QuantumError::Dimension { .. } | QuantumError::BadSearch => input(e),
        _ => internal(e),
    }
}

fn behavior_file_with(b: &Behavior, p: &EwfsProtocol) -> BehaviorFile {
    let mut f = BehaviorFile::from_behavior(b);
    f.protocol = Some(serde_json::to_value(p.params()).expect("serializable"));
    f
}

fn cmd_quantum(q: &QuantumCmd, g: &Global) -> Result<Report, Failure> {
    let den = g.den_cap.unwrap_or(DEFAULT_QUANTUM_DEN_CAP);
    match q {
        QuantumCmd::Behavior {
            protocol,
            schmidt,
            system_rotation,
            alice,
            bob,
        } => {
            let p = match protocol {
                Some(path) => {
                    let f = read_behavior_file(path).map_err(input)?;
                    let v = f.protocol.ok_or_else(|| input("file has no protocol object"))?;
                    let params: ProtocolParams = serde_json::from_value(v).map_err(input)?;
                    EwfsProtocol::from_params(&params).map_err(input)?
                }
                None if schmidt.is_none() && alice.is_empty() && bob.is_empty() => EwfsProtocol::default_protocol(),
                None => {
                    if alice.is_empty() || bob.len() < 2 {
                        return Err(input("give --alice (settings 2..) and at least two --bob angles"));
                    }
                    EwfsProtocol::new(schmidt.unwrap_or(std::f64::consts::FRAC_PI_4), *system_rotation, alice, bob)
                        .map_err(quantum_failure)?
                }
            };
            let born = born_behavior(&p, den).map_err(quantum_failure)?;
            let file = behavior_file_with(&born.exact, &p);
            let s = born.exact.scenario();
            let mut human = format!(
                "protocol: {}\nreversal check: {}\nmax normalization error: {:e}\nmax signalling: {:e}\n",
                serde_json::to_string(&p.params()).expect("serializable"),
                ok(reverse_check(&p)),
                born.float.max_normalization_error(),
                born.float.max_signalling()
            );
            let mut csv = String::from("x,y,a,b,float,exact\n");
            for (x, y) in s.cells() {
                for a in 0..2 {
                    for b in 0..2 {
                        let e = format_rational(born.exact.p(x, y, a, b));
                        let f = born.float.p(x, y, a, b);
                        let _ = writeln!(human, "p({a}{b}|{x}{y}) = {f:.15} ~ {e}");
                        let _ = writeln!(csv, "{x},{y},{a},{b},{f:?},{e}");
                    }
                }
            }
            Ok(Report {
                code: EXIT_OK,
                human,
                csv,
                json: serde_json::to_value(&file).expect("serializable"),
            })
        }
        QuantumCmd::Optimize {
            seed,
            iterations,
            product,
        } => {
            let family = if *product { StateFamily::Product } else { StateFamily::Entangled };
            let o = chsh_optimize(*seed, *iterations, family);
            let human = format!(
                "family: {family:?}\nseed: {seed}\niterations: {iterations}\nCHSH: {:.12}\nschmidt angle: {:?}\nalice: {:?}, {:?}\nbob: {:?}, {:?}\n",
                o.value, o.schmidt_angle, o.alice[0], o.alice[1], o.bob[0], o.bob[1]
            );
            let csv = format!(
                "seed,iterations,family,value,schmidt_angle,alice1,alice2,bob1,bob2\n{seed},{iterations},{family:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
                o.value, o.schmidt_angle, o.alice[0], o.alice[1], o.bob[0], o.bob[1]
            );
            let mut json = serde_json::to_value(&o).expect("serializable");
            json["seed"] = json!(seed);
            json["family"] = serde_json::to_value(family).expect("serializable");
            Ok(Report {
                code: EXIT_OK,
                human,
                csv,
                json,
            })
        }
        QuantumCmd::LfSearch {
            seed,
            budget,
            settings_a,
            settings_b,
            behavior_out,
        } => {
            let r = lf_violation_search(*settings_a, *settings_b, *seed, *budget, den).map_err(quantum_failure)?;
            r.membership
                .verify()
                .map_err(|e| internal(format!("certificate failed independent verification: {e}")))?;
            let file = behavior_file_with(&r.born.exact, &r.protocol);
            if let Some(path) = behavior_out {
                write_file(path, &file.to_json())?;
            }
            let cert = certificate_report(&r.membership)?;
            let human = format!(
                "found at candidate {} of {budget} (seed {seed})\nprotocol: {}\n{}",
                r.index,
                serde_json::to_string(&r.protocol.params()).expect("serializable"),
                cert.human
            );
            let mut csv = String::from("index,outcome,params\n");
            for t in &r.trace {
                let _ = writeln!(
                    csv,
                    "{},{},{}",
                    t.index,
                    csv_field(&t.outcome),
                    csv_field(&serde_json::to_string(&t.params).expect("serializable"))
                );
            }
            Ok(Report {
                code: EXIT_FOUND,
                human,
                csv,
                json: json!({
                    "seed": seed,
                    "budget": budget,
                    "index": r.index,
                    "behavior": serde_json::to_value(&file).expect("serializable"),
                    "check": cert.json,
                    "trace": r.trace,
                }),
            })
        }
    }
}

fn parse_q(s: &str) -> Result<Rational, Failure> {
    parse_rational(s, &RationalizeOptions::default()).map_err(input)
}

/// `elga`, `reflection`, or `custom:heads=1,tails=3`.
pub fn parse_rule(s: &str) -> Result<CredenceRule, Failure> {
    match s {
        "elga" | "elga-nui" => Ok(CredenceRule::ElgaNui),
        "reflection" => Ok(CredenceRule::Reflection),
        _ => {
            let body = s
                .strip_prefix("custom:")
                .ok_or_else(|| input(format!("unknown rule {s:?}; use elga, reflection or custom:label=w,...")))?;
            let mut w = BTreeMap::new();
            for part in body.split(',') {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| input(format!("bad weight {part:?}")))?;
                w.insert(k.trim().to_string(), parse_q(v)?);
            }
            Ok(CredenceRule::CustomWeights(w))
        }
    }
}

fn dup_failure(e: crate::duplication::DupError) -> Failure {
    input(e)
}

fn cmd_dup(d: &DupCmd) -> Result<Report, Failure> {
    match d {
        DupCmd::Credence {
            args,
            rule,
            role,
            counts,
        } => {
            let rule = parse_rule(rule)?;
            if let Some(c) = counts {
                let mut map = BTreeMap::new();
                for part in c.split(',') {
                    let (k, v) = part
                        .split_once('=')
                        .ok_or_else(|| input(format!("bad count {part:?}")))?;
                    map.insert(k.trim().to_string(), v.trim().parse::<u64>().map_err(input)?);
                }
                let dist = self_locate(&map, &rule).map_err(dup_failure)?;
                let mut human = format!("rule: {}\n", rule.name());
                let mut csv = String::from("label,credence\n");
                for (k, v) in &dist {
                    let _ = writeln!(human, "P({k}) = {}", format_rational(v));
                    let _ = writeln!(csv, "{},{}", csv_field(k), format_rational(v));
                }
                let json: BTreeMap<&String, String> = dist.iter().map(|(k, v)| (k, format_rational(v))).collect();
                return Ok(Report {
                    code: EXIT_OK,
                    human,
                    csv,
                    json: json!({ "rule": rule.name(), "credence": json }),
                });
            }
            let q = parse_q(&args.q)?;
            let e = DuplicationExperiment::with_offer(args.n, args.m, q, Rational::new(1.into(), 100.into()))
                .map_err(dup_failure)?;
            let role = match role {
                RoleArg::Freya => AgentRole::Freya,
                RoleArg::Wigner => AgentRole::Wigner,
            };
            let c = credence_outcome(&rule, &e, role).map_err(dup_failure)?;
            let (h, t) = (format_rational(&c.heads), format_rational(&c.tails));
            Ok(Report {
                code: EXIT_OK,
                human: format!("rule: {}\nrole: {}\nM = {}\nP(H) = {h}\nP(T) = {t}\n", rule.name(), role.name(), args.m),
                csv: format!("rule,role,M,q,heads,tails\n{},{},{},{},{h},{t}\n", rule.name(), role.name(), args.m, format_rational(&e.q)),
                json: json!({ "rule": rule.name(), "role": role.name(), "M": args.m, "heads": h, "tails": t }),
            })
        }
        DupCmd::Binomial { args } => {
            let q = parse_q(&args.q)?;
            let b = credence_via_binomial(args.n, args.m, &q).map_err(dup_failure)?;
            let dist = heads_count_distribution(args.n, args.m, &q);
            let (h, t, c) = (format_rational(&b.heads), format_rational(&b.tails), format_rational(&b.c));
            let mut human = format!(
                "N = {}, M = {}, q = {}\nP(H) = {h}\nP(T) = {t}\nc = {c}\n",
                args.n,
                args.m,
                format_rational(&q)
            );
            let mut csv = String::from("k,weight\n");
            for (k, p) in dist.iter().enumerate() {
                let _ = writeln!(human, "P_F(k={k}) = {}", format_rational(p));
                let _ = writeln!(csv, "{k},{}", format_rational(p));
            }
            let _ = writeln!(csv, "heads,{h}\ntails,{t}\nc,{c}");
            Ok(Report {
                code: EXIT_OK,
                human,
                csv,
                json: json!({
                    "N": args.n, "M": args.m, "q": format_rational(&q),
                    "heads": h, "tails": t, "c": c,
                    "distribution": rationals(&dist),
                }),
            })
        }
        DupCmd::Simulate {
            args,
            runs,
            seed,
            eps,
            price,
            policy,
            rows_out,
        } => {
            let q = parse_q(&args.q)?;
            let eps = parse_q(eps)?;
            let e = match price {
                Some(p) => DuplicationExperiment::new(args.n, args.m, q, parse_q(p)?, eps),
                None => DuplicationExperiment::with_offer(args.n, args.m, q, eps),
            }
            .map_err(dup_failure)?;
            let policy = match policy {
                PolicyArg::Always => BuyPolicy::Always,
                PolicyArg::Never => BuyPolicy::Never,
                PolicyArg::Favorable => BuyPolicy::IfFavorable(CredenceRule::ElgaNui),
            };
            let r = simulate_betting(&e, *runs, *seed, &policy).map_err(dup_failure)?;
            if let Some(path) = rows_out {
                write_file(path, &r.rows_csv())?;
            }
            let mut human = format!(
                "N = {}, M = {}, q = {}, price = {}, runs = {runs}, seed = {seed}\ntickets pay 1 on Heads\n",
                e.labs,
                e.factor,
                format_rational(&e.q),
                format_rational(&e.price)
            );
            for est in &r.estimates {
                let _ = writeln!(
                    human,
                    "{:<7} {:<15} exact {:>10} ({:.6})  empirical {:.6} ± {:.6}  z = {:.2}",
                    est.role.name(),
                    est.quantity,
                    format_rational(&est.exact),
                    to_f64(&est.exact),
                    est.empirical,
                    est.std_error,
                    est.z()
                );
            }
            let estimates: Vec<Value> = r
                .estimates
                .iter()
                .map(|e| {
                    json!({
                        "role": e.role.name(), "quantity": e.quantity, "exact": format_rational(&e.exact),
                        "empirical": e.empirical, "std_error": e.std_error, "z": e.z(),
                    })
                })
                .collect();
            Ok(Report {
                code: EXIT_OK,
                human,
                csv: r.summary_csv(),
                json: json!({
                    "N": e.labs, "M": e.factor, "q": format_rational(&e.q), "price": format_rational(&e.price),
                    "runs": runs, "seed": seed, "buys": { "freya": r.buys[0], "wigner": r.buys[1] },
                    "estimates": estimates,
                }),
            })
        }
        DupCmd::CpCheck { args, rule_f, rule_w } => {
            let q = parse_q(&args.q)?;
            let r = check_cp_consistency(&parse_rule(rule_f)?, &parse_rule(rule_w)?, args.m, &q).map_err(dup_failure)?;
            let (f, w) = (format_rational(&r.freya_tails), format_rational(&r.wigner_tails));
            let verdict = if r.consistent { "consistent" } else { "inconsistent" };
            let rel = if r.consistent { "=" } else { "vs" };
            Ok(Report {
                code: if r.consistent { EXIT_OK } else { EXIT_FOUND },
                human: format!(
                    "M = {}, one lab\nFreya ({}) P(T) = {f}\nWigner ({}) P(T) = {w}\n{verdict}: {f} {rel} {w}\n",
                    r.factor, r.rule_f, r.rule_w
                ),
                csv: format!("M,rule_f,rule_w,freya_tails,wigner_tails,consistent\n{},{},{},{f},{w},{}\n", r.factor, r.rule_f, r.rule_w, r.consistent),
                json: serde_json::to_value(&r).expect("serializable"),
            })
        }
    }
}

fn machine(m: &MachineArgs) -> Result<ToyMachineConfig, Failure> {
    ToyMachineConfig::new(m.max_len, m.steps).map_err(input)
}

fn bits(s: &str) -> Result<Vec<bool>, Failure> {
    parse_bits(s).map_err(input)
}

const M_HEADER: &str = "string,L,T,mass_num,mass_den,programs_counted,truncated\n";

fn m_row(x: &[bool], cfg: &ToyMachineConfig, e: &AlgProbEstimate) -> String {
    let m = e.mass();
    format!(
        "{},{},{},{},{},{},{}\n",
        format_bits(x),
        cfg.max_program_bits,
        cfg.step_budget,
        m.numer(),
        m.denom(),
        e.programs_counted,
        e.truncated
    )
}

fn m_json(x: &[bool], e: &AlgProbEstimate) -> Value {
    json!({
        "string": format_bits(x), "mass": format_rational(&e.mass()),
        "programs_counted": e.programs_counted, "truncated": e.truncated,
    })
}

fn cmd_induct(i: &InductCmd) -> Result<Report, Failure> {
    let failure = |e: crate::induction::InductionError| match e {
        crate::induction::InductionError::ZeroBase => internal(e),
        _ => input(e),
    };
    match i {
        InductCmd::M { x, machine: m } => {
            let cfg = machine(m)?;
            let x = bits(x)?;
            let e = estimate_m(&x, &cfg).map_err(failure)?;
            Ok(Report {
                code: EXIT_OK,
                human: format!(
                    "machine: {}\nM({}) >= {}\nprograms counted: {}\ntruncated: {}\n",
                    cfg.machine,
                    format_bits(&x),
                    format_rational(&e.mass()),
                    e.programs_counted,
                    e.truncated
                ),
                csv: format!("{M_HEADER}{}", m_row(&x, &cfg, &e)),
                json: json!({ "machine": cfg.machine, "L": cfg.max_program_bits, "T": cfg.step_budget, "estimate": m_json(&x, &e) }),
            })
        }
        InductCmd::Cond { x, y, machine: m } => {
            let cfg = machine(m)?;
            let (x, y) = (bits(x)?, bits(y)?);
            let c = conditional_m(&x, &y, &cfg).map_err(failure)?;
            let xy: Vec<bool> = x.iter().chain(&y).copied().collect();
            Ok(Report {
                code: EXIT_OK,
                human: format!(
                    "machine: {}\nM({} | {}) = {} ({:.6})\n",
                    cfg.machine,
                    format_bits(&y),
                    format_bits(&x),
                    format_rational(&c.value),
                    to_f64(&c.value)
                ),
                csv: format!("{M_HEADER}{}{}", m_row(&x, &cfg, &c.base), m_row(&xy, &cfg, &c.extended)),
                json: json!({
                    "machine": cfg.machine, "L": cfg.max_program_bits, "T": cfg.step_budget,
                    "conditional": format_rational(&c.value),
                    "base": m_json(&x, &c.base), "extended": m_json(&xy, &c.extended),
                }),
            })
        }
        InductCmd::Bb {
            x,
            y_oo,
            y_bb,
            seed,
            n_oo,
            n_bb,
            rule,
            machine: m,
        } => {
            let cfg = machine(m)?;
            let (x, y_oo) = (bits(x)?, bits(y_oo)?);
            let y_bb = match (y_bb, seed) {
                (Some(s), _) => bits(s)?,
                (None, Some(seed)) => random_bits(y_oo.len(), *seed),
                (None, None) => return Err(input("give --y-bb or a --seed to draw it")),
            };
            let rule = match rule {
                BbRuleArg::Indifference => BbRule::Indifference,
                BbRuleArg::Induction => BbRule::Induction,
            };
            let c = bb_credence(&x, &y_oo, &y_bb, *n_oo, *n_bb, rule, &cfg).map_err(failure)?;
            let (po, pb) = (format_rational(&c.ordinary), format_rational(&c.thermal));
            let mut human = format!(
                "rule: {rule:?}\nx = {}\ny_OO = {}\ny_BB = {}\ncopies: OO {n_oo}, BB {n_bb}\nP(OO) = {po}\nP(BB) = {pb}\n",
                format_bits(&x),
                format_bits(&y_oo),
                format_bits(&y_bb)
            );
            let conds = c.conditionals.as_ref().map(|(o, b)| {
                let _ = writeln!(
                    human,
                    "M(y_OO|x) = {}\nM(y_BB|x) = {}",
                    format_rational(&o.value),
                    format_rational(&b.value)
                );
                json!({ "oo": format_rational(&o.value), "bb": format_rational(&b.value) })
            });
            Ok(Report {
                code: EXIT_OK,
                human,
                csv: format!(
                    "rule,x,y_oo,y_bb,n_oo,n_bb,p_oo,p_bb\n{rule:?},{},{},{},{n_oo},{n_bb},{po},{pb}\n",
                    format_bits(&x),
                    format_bits(&y_oo),
                    format_bits(&y_bb)
                ),
                json: json!({
                    "rule": rule, "x": format_bits(&x), "y_oo": format_bits(&y_oo), "y_bb": format_bits(&y_bb),
                    "n_oo": n_oo, "n_bb": n_bb, "p_oo": po, "p_bb": pb, "conditionals": conds,
                    "L": cfg.max_program_bits, "T": cfg.step_budget,
                }),
            })
        }
    }
}
