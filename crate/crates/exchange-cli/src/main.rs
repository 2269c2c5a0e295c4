//! Command-line front end for the exchange library.
//!
//! Exit codes: 0 all checks pass, 1 a property failed (a witness is
//! reported), 2 usage, parse, or capability errors.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use exchange::audit::{audit_rule, reproduce, Property};
use exchange::core::{parse_profile, LinearOrder, Profile};
use exchange::domains::{
    derive_single_peaked_order, enumerate_single_peaked, is_rich, is_single_peaked, parse_domain,
    Domain, ProfileSpace,
};
use exchange::games::{
    build_designator_game, greedy_plans, parse_game, prune, verify_osp_implementation, GameForm,
};
use exchange::rules::Rule;

#[derive(Parser)]
#[command(
    name = "exchange",
    about = "Exchange rules over indivisible objects: solve, trace, audit, verify",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleName {
    Ttc,
    Crawler,
    Designator,
}

#[derive(Subcommand)]
enum Command {
    /// Run a rule on a profile and print the allocation as a JSON array.
    Solve(SolveArgs),
    /// Run the crawler or designator and print its step trace.
    Trace(TraceArgs),
    /// Audit properties of a rule over a whole profile space.
    Audit(AuditArgs),
    /// Check a preference domain: richness and single-peakedness.
    DomainCheck(DomainCheckArgs),
    /// Verify that a game plus greedy plans implements a rule.
    OspVerify(OspVerifyArgs),
    /// Re-run a bundled verification case and diff its report.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    rule: RuleName,
    /// Profile JSON: {"n": int, "order": [...]?, "preferences": [[...],...]}.
    #[arg(long)]
    profile: String,
    /// Object order JSON array, smallest first; overrides the profile's.
    #[arg(long)]
    order: Option<String>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long, value_enum)]
    rule: RuleName,
    #[arg(long)]
    profile: String,
    #[arg(long)]
    order: Option<String>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, value_enum)]
    rule: RuleName,
    /// `single-peaked` (with --n) or a domain JSON file shared by all
    /// agents.
    #[arg(long)]
    domain: String,
    /// Number of agents for the built-in single-peaked domain.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated properties: ir,eff,sp,eua,eba,eba_plus,dyn_ir.
    #[arg(long, default_value = "")]
    props: String,
    /// Collect every witness instead of stopping at the first.
    #[arg(long)]
    exhaustive: bool,
    /// Parallelism hint for the profile sweep.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    order: Option<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct DomainCheckArgs {
    /// Domain JSON: {"n": int, "prefs": [[...],...]}.
    #[arg(long)]
    domain: String,
    /// Check single-peakedness against this order instead of recovering
    /// one.
    #[arg(long)]
    order: Option<String>,
}

#[derive(Args)]
struct OspVerifyArgs {
    /// `designator` (built in memory, needs --n) or a game JSON file.
    #[arg(long)]
    game: String,
    #[arg(long)]
    n: Option<usize>,
    /// Rule the game should implement; defaults to designator for the
    /// built-in game.
    #[arg(long, value_enum)]
    rule: Option<RuleName>,
    /// Domain JSON shared by all agents; defaults to the full single-peaked
    /// domain of the game's order.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    order: Option<String>,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long)]
    case: String,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn read_order_file(path: &str) -> Result<LinearOrder, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let raw: Vec<usize> =
        serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
    LinearOrder::from_indices(&raw).map_err(|e| format!("{path}: {e}"))
}

fn load_profile(
    profile_path: &str,
    order_path: Option<&str>,
) -> Result<(Profile, LinearOrder), String> {
    let text = fs::read_to_string(profile_path).map_err(|e| format!("{profile_path}: {e}"))?;
    let (profile, embedded) = parse_profile(&text).map_err(|e| e.to_string())?;
    let order = match order_path {
        Some(p) => read_order_file(p)?,
        None => embedded.unwrap_or_else(|| LinearOrder::identity(profile.n())),
    };
    if order.n() != profile.n() {
        return Err(format!(
            "order covers {} objects but the profile ranks {}",
            order.n(),
            profile.n()
        ));
    }
    Ok((profile, order))
}

fn make_rule(name: RuleName, order: &LinearOrder) -> Rule {
    match name {
        RuleName::Ttc => Rule::Ttc,
        RuleName::Crawler => Rule::Crawler(order.clone()),
        RuleName::Designator => Rule::Designator(order.clone()),
    }
}

fn run_solve(args: &SolveArgs) -> ExitCode {
    let (profile, order) = match load_profile(&args.profile, args.order.as_deref()) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    let rule = make_rule(args.rule, &order);
    match rule.apply(&profile) {
        Ok(alloc) => {
            println!(
                "{}",
                serde_json::to_string(&alloc.indices()).expect("array serialization")
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn run_trace(args: &TraceArgs) -> ExitCode {
    let (profile, order) = match load_profile(&args.profile, args.order.as_deref()) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    let rule = make_rule(args.rule, &order);
    match rule.apply_traced(&profile) {
        Ok((alloc, Some(trace))) => {
            let text = trace.human();
            if !text.is_empty() {
                println!("{text}");
            }
            println!(
                "allocation={}",
                serde_json::to_string(&alloc.indices()).expect("array serialization")
            );
            ExitCode::SUCCESS
        }
        Ok((_, None)) => fail("this rule records no trace; use crawler or designator"),
        Err(e) => fail(e),
    }
}

fn load_shared_domain(
    selector: &str,
    n: Option<usize>,
    order: &Option<String>,
) -> Result<(ProfileSpace, LinearOrder), String> {
    if selector == "single-peaked" {
        let n = n.ok_or("--domain single-peaked needs --n")?;
        if n == 0 {
            return Err("--n must be positive".into());
        }
        let order = match order {
            Some(p) => read_order_file(p)?,
            None => LinearOrder::identity(n),
        };
        if order.n() != n {
            return Err(format!("order covers {} objects, expected {n}", order.n()));
        }
        Ok((ProfileSpace::shared(enumerate_single_peaked(&order)), order))
    } else {
        let text = fs::read_to_string(selector).map_err(|e| format!("{selector}: {e}"))?;
        let dom = parse_domain(&text).map_err(|e| e.to_string())?;
        let order = match order {
            Some(p) => read_order_file(p)?,
            None => LinearOrder::identity(dom.n()),
        };
        if order.n() != dom.n() {
            return Err(format!(
                "order covers {} objects but the domain ranks {}",
                order.n(),
                dom.n()
            ));
        }
        Ok((ProfileSpace::shared(dom), order))
    }
}

fn run_audit(args: &AuditArgs) -> ExitCode {
    let properties = match Property::parse_list(&args.props) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let (space, order) = match load_shared_domain(&args.domain, args.n, &args.order) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    let rule = make_rule(args.rule, &order);
    let report = match audit_rule(&rule, &space, &properties, args.exhaustive, args.jobs) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    eprintln!(
        "audited {} profiles in {:.3}s",
        report.profiles,
        report.elapsed.as_secs_f64()
    );
    let json = report.to_json();
    match &args.out {
        None => println!("{json}"),
        Some(path) => {
            if let Err(e) = fs::write(path, json) {
                return fail(format!("{path}: {e}"));
            }
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run_domain_check(args: &DomainCheckArgs) -> ExitCode {
    let text = match fs::read_to_string(&args.domain) {
        Ok(t) => t,
        Err(e) => return fail(format!("{}: {e}", args.domain)),
    };
    let dom = match parse_domain(&text) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    println!("n = {}", dom.n());
    println!("preferences = {}", dom.len());
    println!("rich = {}", is_rich(&dom));
    match &args.order {
        Some(path) => {
            let order = match read_order_file(path) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            if order.n() != dom.n() {
                return fail("order and domain cover different universes");
            }
            let violations: Vec<String> = dom
                .iter()
                .filter(|p| !is_single_peaked(p, &order))
                .map(|p| {
                    let parts: Vec<String> =
                        p.ranking().iter().map(|o| o.to_string()).collect();
                    format!("[{}]", parts.join(" > "))
                })
                .collect();
            if violations.is_empty() {
                println!("single-peaked under the given order = true");
                ExitCode::SUCCESS
            } else {
                println!("single-peaked under the given order = false");
                for v in violations {
                    println!("violating preference: {v}");
                }
                ExitCode::from(1)
            }
        }
        None => match derive_single_peaked_order(&dom) {
            Ok(order) => {
                let names: Vec<String> =
                    order.objects_in_order().iter().map(|o| o.to_string()).collect();
                println!("single-peaked = true");
                println!("recovered order: {}", names.join(" < "));
                ExitCode::SUCCESS
            }
            Err(witness) => {
                println!("single-peaked = false");
                println!("witness: {witness}");
                ExitCode::from(1)
            }
        },
    }
}

fn verify_game(
    game: &GameForm,
    rule: &Rule,
    domains: &[Domain],
) -> Result<ExitCode, String> {
    let plans = greedy_plans(game, domains).map_err(|e| e.to_string())?;
    let pruned = prune(game, &plans).map_err(|e| e.to_string())?;
    let pruned_plans = greedy_plans(&pruned, domains).map_err(|e| e.to_string())?;
    let report = verify_osp_implementation(
        &pruned,
        &pruned_plans,
        |p| rule.apply(p),
        domains,
    )
    .map_err(|e| e.to_string())?;
    println!("game nodes = {} ({} after pruning)", game.len(), pruned.len());
    println!(
        "outcome equality: {}/{} profiles",
        report.profiles_checked - report.outcome_mismatches.len(),
        report.profiles_checked
    );
    println!(
        "obvious dominance: {}/{} strategies",
        report.dominance_checks - report.dominance_violations.len(),
        report.dominance_checks
    );
    for (key, played, direct) in report.outcome_mismatches.iter().take(5) {
        println!(
            "mismatch at key {key:?}: played {} but rule gives {}",
            played.human(),
            direct.human()
        );
    }
    for (agent, pref, violation) in report.dominance_violations.iter().take(5) {
        let parts: Vec<String> = pref.ranking().iter().map(|o| o.to_string()).collect();
        println!(
            "dominance violation: agent {agent}, preference [{}], node {}, action {}: deviation best {} beats truthful worst {}",
            parts.join(" > "),
            violation.node.0,
            violation.action,
            violation.deviation_best,
            violation.truthful_worst,
        );
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_osp_verify(args: &OspVerifyArgs) -> ExitCode {
    if args.game == "designator" {
        let Some(n) = args.n else {
            return fail("--game designator needs --n");
        };
        let order = match &args.order {
            Some(p) => match read_order_file(p) {
                Ok(o) => o,
                Err(e) => return fail(e),
            },
            None => LinearOrder::identity(n),
        };
        if order.n() != n {
            return fail("order size disagrees with --n");
        }
        let game = match build_designator_game(n, &order) {
            Ok(g) => g,
            Err(e) => return fail(e),
        };
        let domains = vec![enumerate_single_peaked(&order); n];
        let rule = match args.rule.unwrap_or(RuleName::Designator) {
            RuleName::Designator => Rule::Designator(order.clone()),
            other => make_rule(other, &order),
        };
        match verify_game(&game, &rule, &domains) {
            Ok(code) => code,
            Err(e) => fail(e),
        }
    } else {
        let text = match fs::read_to_string(&args.game) {
            Ok(t) => t,
            Err(e) => return fail(format!("{}: {e}", args.game)),
        };
        let game = match parse_game(&text) {
            Ok(g) => g,
            Err(e) => return fail(e),
        };
        let Some(rule_name) = args.rule else {
            return fail("--game <file> needs --rule");
        };
        let Some(domain_path) = &args.domain else {
            return fail("--game <file> needs --domain");
        };
        let dom_text = match fs::read_to_string(domain_path) {
            Ok(t) => t,
            Err(e) => return fail(format!("{domain_path}: {e}")),
        };
        let dom = match parse_domain(&dom_text) {
            Ok(d) => d,
            Err(e) => return fail(e),
        };
        let order = match &args.order {
            Some(p) => match read_order_file(p) {
                Ok(o) => o,
                Err(e) => return fail(e),
            },
            None => LinearOrder::identity(dom.n()),
        };
        let domains = vec![dom; game.players()];
        let rule = make_rule(rule_name, &order);
        match verify_game(&game, &rule, &domains) {
            Ok(code) => code,
            Err(e) => fail(e),
        }
    }
}

fn run_reproduce(args: &ReproduceArgs) -> ExitCode {
    match reproduce(&args.case) {
        Ok(report) => {
            print!("{}", report.actual);
            if report.passed() {
                println!("case {}: ok", report.case);
                ExitCode::SUCCESS
            } else {
                eprintln!("case {} drifted from its expected output:", report.case);
                eprint!("{}", report.diff());
                ExitCode::from(1)
            }
        }
        Err(e) => fail(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Trace(args) => run_trace(args),
        Command::Audit(args) => run_audit(args),
        Command::DomainCheck(args) => run_domain_check(args),
        Command::OspVerify(args) => run_osp_verify(args),
        Command::Reproduce(args) => run_reproduce(args),
    }
}
