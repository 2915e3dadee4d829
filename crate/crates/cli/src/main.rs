//! Command-line front end: feasibility reports, equilibria, centrality
//! rankings, the three intervention solvers, figure-style sweeps, oracle
//! cross-checks, and policy recommendations.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use canopy_core::error::Error;
use canopy_core::game::{
    self, aggregate_unsustainable, leontief_bundle, nonneg_equilibrium, GameParams,
    PriceProfile,
};
use canopy_core::network::Network;
use canopy_core::oracle;
use canopy_core::scenario_io::{
    load_scenario, results_to_csv, write_results, ProblemConfig, ProblemKind, ResultRecord,
    ScenarioConfig,
};
use canopy_core::solver_componentwise::{solve_ptilde, ProblemPtilde};
use canopy_core::solver_p::{solve_p, PolicyResult, ProblemP, SolveOpts};
use canopy_core::solver_redistribution::{
    budget_penalty_check, solve_pr, vanish_penalty, vanish_penalty_paper_literal, ProblemPR,
};
use canopy_core::sweep::{run_sweep, SweepProblem, SweepSpec};

// Output goes through these so that a closed pipe (e.g. `canopy centrality
// | head`) ends the run quietly instead of panicking.
macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if writeln!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(0);
        }
    }};
}

macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let mut stdout = std::io::stdout();
        if write!(stdout, $($arg)*).and_then(|_| stdout.flush()).is_err() {
            std::process::exit(0);
        }
    }};
}

#[derive(Parser)]
#[command(
    name = "canopy",
    about = "Coupled-activity network games: equilibria, centrality, and price interventions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Network file overriding the config's network source.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Output CSV path (sweep/solve); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the heterogeneous-bounds jitter.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exact extreme-point search cap.
    #[arg(long, default_value_t = 15)]
    bruteforce_limit: usize,
    /// Check the commonly quoted but incorrect vanish-penalty formula
    /// instead of the working one.
    #[arg(long, default_value_t = false)]
    paper_literal: bool,
    /// Constraint tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveWhich {
    P,
    Pr,
    Ptilde,
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    Welfare,
    Effort,
}

#[derive(Subcommand)]
enum Command {
    /// Classify whether price raises can reduce unsustainable effort.
    Feasibility(Common),
    /// Equilibrium efforts at the scenario's pre-intervention prices.
    Equilibrium(Common),
    /// Agents ranked by their price-raise leverage on aggregate
    /// unsustainable effort.
    Centrality(Common),
    /// Solve an intervention design problem.
    Solve {
        which: SolveWhich,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the network-average maximum price and emit plot-ready CSV.
    Sweep(Common),
    /// Run brute-force oracle cross-checks against the solvers.
    Verify(Common),
    /// Policy recommendation from the budget-penalty sufficiency test.
    Recommend {
        #[arg(long, value_enum, default_value_t = Objective::Welfare)]
        objective: Objective,
        #[command(flatten)]
        common: Common,
    },
}

struct Loaded {
    config: ScenarioConfig,
    g: Network,
    params: GameParams,
    p_a0: Vec<f64>,
    p_b0: Vec<f64>,
}

fn load(common: &Common) -> Result<Loaded, Error> {
    let config = load_scenario(&common.config)?;
    let g = match &common.network {
        Some(path) => canopy_core::network::load_network_file(path, config.network.n)?,
        None => config.load_network()?,
    };
    let params = config.game_params()?;
    let (p_a0, p_b0) = config.base_prices(g.n())?;
    Ok(Loaded {
        config,
        g,
        params,
        p_a0,
        p_b0,
    })
}

fn require_tau(problem: &ProblemConfig) -> Result<f64, Error> {
    problem
        .tau_b
        .ok_or_else(|| Error::Config("missing field problem.tau_b".into()))
}

fn problem_p(loaded: &Loaded) -> Result<ProblemP, Error> {
    let problem = loaded.config.require_problem()?;
    let p_max = problem
        .p_max
        .as_ref()
        .ok_or_else(|| Error::Config("missing field problem.p_max".into()))?
        .expand(loaded.g.n(), "problem.p_max")?;
    Ok(ProblemP {
        p_a0: loaded.p_a0.clone(),
        p_max,
        p_b0: loaded.p_b0.clone(),
        tau_b: require_tau(problem)?,
    })
}

fn problem_pr(loaded: &Loaded) -> Result<ProblemPR, Error> {
    let problem = loaded.config.require_problem()?;
    let n = loaded.g.n();
    let rho_max = problem
        .rho_max
        .as_ref()
        .ok_or_else(|| Error::Config("missing field problem.rho_max".into()))?
        .expand(n, "problem.rho_max")?;
    let budget = match &problem.budget {
        Some(b) => b.expand(n, "problem.budget")?,
        None => vec![0.0; n],
    };
    Ok(ProblemPR {
        p_a0: loaded.p_a0.clone(),
        p_b0: loaded.p_b0.clone(),
        rho_max,
        budget,
        tau_b: require_tau(problem)?,
    })
}

fn problem_ptilde(loaded: &Loaded) -> Result<ProblemPtilde, Error> {
    let problem = loaded.config.require_problem()?;
    let c = loaded.g.connected_components().count();
    let p_max = problem
        .p_max
        .as_ref()
        .ok_or_else(|| Error::Config("missing field problem.p_max".into()))?
        .expand(c, "problem.p_max (one entry per component)")?;
    Ok(ProblemPtilde {
        p_a0: loaded.p_a0.clone(),
        p_b0: loaded.p_b0.clone(),
        p_max,
        tau_b: require_tau(problem)?,
    })
}

fn print_policy(label: &str, result: &PolicyResult) {
    outln!("{label}");
    outln!("  certificate        {}", result.certificate);
    outln!("  optimality_exact   {}", result.optimality_exact);
    outln!("  welfare            {}", result.welfare);
    outln!("  agg_unsustainable  {}", result.agg_unsustainable);
    outln!("  policy_a           {:?}", result.policy_a);
    outln!("  policy_b           {:?}", result.policy_b);
}

fn scenario_label(config: &ScenarioConfig) -> String {
    config
        .scenario_id
        .clone()
        .unwrap_or_else(|| "scenario".to_string())
}

fn pbar_of(policy: &[f64]) -> f64 {
    policy.iter().sum::<f64>() / policy.len() as f64
}

fn solve_record(
    loaded: &Loaded,
    label: &str,
    result: &PolicyResult,
) -> Result<ResultRecord, Error> {
    let pre = PriceProfile::new(loaded.p_a0.clone(), loaded.p_b0.clone())?;
    let bundle = leontief_bundle(&loaded.g, &loaded.params, &loaded.p_b0)?;
    let (welfare0, agg0, _) = game::welfare_at(&loaded.g, &bundle, &pre)?;
    Ok(ResultRecord {
        scenario_id: scenario_label(&loaded.config),
        problem: label.to_string(),
        pbar_max: pbar_of(&result.policy_a),
        welfare: result.welfare,
        welfare_gain_pct: 100.0 * (result.welfare - welfare0) / welfare0,
        agg_xb: result.agg_unsustainable,
        agg_xb_reduction_pct: if agg0 > 0.0 {
            100.0 * (agg0 - result.agg_unsustainable) / agg0
        } else {
            0.0
        },
        certificate: result.certificate.to_string(),
    })
}

fn emit_records(common: &Common, config: &ScenarioConfig, records: &[ResultRecord]) -> Result<(), Error> {
    let out = common.out.clone().or_else(|| config.output.clone());
    match out {
        Some(path) => {
            write_results(records, &path)?;
            outln!("wrote {} rows to {}", records.len(), path.display());
        }
        None => out!("{}", results_to_csv(records)?),
    }
    Ok(())
}

fn cmd_feasibility(common: &Common) -> Result<(), Error> {
    let loaded = load(common)?;
    let problem = loaded.config.problem.as_ref();
    let rho_max = match problem {
        Some(p) => match &p.rho_max {
            Some(r) => Some(r.expand(loaded.g.n(), "problem.rho_max")?),
            None => None,
        },
        None => None,
    };
    let report = canopy_core::feasibility::classify_regime(
        &loaded.g,
        &loaded.params,
        rho_max.as_deref(),
    )?;
    outln!("regime                  {:?}", report.regime);
    outln!("triggered_condition     {}", report.triggered_condition);
    outln!("essentially_feasible_p  {}", report.essentially_feasible_p);
    outln!("essentially_feasible_pr {}", report.essentially_feasible_pr);
    outln!("per_component           {:?}", report.per_component);
    outln!("b_delta_signs           {:?}", report.b_delta_signs);
    Ok(())
}

fn cmd_equilibrium(common: &Common) -> Result<(), Error> {
    let loaded = load(common)?;
    let prices = PriceProfile::new(loaded.p_a0.clone(), loaded.p_b0.clone())?;
    let (eq, cert) = nonneg_equilibrium(&loaded.g, &loaded.params, &prices, None)?;
    outln!("branch        {:?}", cert.branch);
    outln!("active_set    {:?}", cert.active_set);
    outln!("kkt_residual  {:e}", cert.kkt_residual);
    outln!("agg_xb        {}", aggregate_unsustainable(&eq));
    outln!("x_a           {:?}", eq.x_a);
    outln!("x_b           {:?}", eq.x_b);
    Ok(())
}

fn cmd_centrality(common: &Common) -> Result<(), Error> {
    let loaded = load(common)?;
    let bundle = leontief_bundle(&loaded.g, &loaded.params, &loaded.p_b0)?;
    let b_delta = game::centrality(&bundle);
    let mut ranked: Vec<(usize, f64)> = b_delta.iter().cloned().enumerate().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    outln!("agent,b_delta");
    for (agent, value) in ranked {
        outln!("{agent},{value}");
    }
    Ok(())
}

fn cmd_solve(which: SolveWhich, common: &Common) -> Result<(), Error> {
    let loaded = load(common)?;
    let opts = SolveOpts {
        bruteforce_limit: common.bruteforce_limit,
        tol: common.tol,
    };
    let (label, result) = match which {
        SolveWhich::P => {
            let p = problem_p(&loaded)?;
            ("p", solve_p(&loaded.g, &loaded.params, &p, &opts)?)
        }
        SolveWhich::Pr => {
            let p = problem_pr(&loaded)?;
            let (result, report) = solve_pr(&loaded.g, &loaded.params, &p)?;
            outln!(
                "budget_penalty_sufficient  {} (per-agent {:?})",
                report.eq13.all, report.eq13.per_agent
            );
            outln!(
                "utility_non_decrease_guaranteed {}",
                report.utility_non_decrease_guaranteed
            );
            let min_change = report
                .per_agent_utility_change
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            outln!("min_utility_change         {min_change}");
            ("pr", result)
        }
        SolveWhich::Ptilde => {
            let p = problem_ptilde(&loaded)?;
            let (result, relax) = solve_ptilde(&loaded.g, &loaded.params, &p)?;
            outln!("relaxation_exact   {}", relax.exact);
            outln!("upper_bound        {}", relax.upper_bound);
            if let Some(tau) = relax.suggested_tau_b {
                outln!("suggested_tau_b    {tau}");
            }
            ("ptilde", result)
        }
    };
    print_policy(&format!("solve {label}"), &result);
    let record = solve_record(&loaded, label, &result)?;
    emit_records(common, &loaded.config, &[record])?;
    Ok(())
}

fn cmd_sweep(common: &Common) -> Result<(), Error> {
    let loaded = load(common)?;
    let sweep_cfg = loaded
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing sweep section".into()))?;
    let problem = loaded.config.require_problem()?;
    let tau_b = require_tau(problem)?;
    let problems = match problem.kind {
        ProblemKind::P => vec![SweepProblem::P],
        ProblemKind::Pr => vec![SweepProblem::Pr],
        ProblemKind::Ptilde => vec![SweepProblem::Ptilde],
    };
    let spec = SweepSpec {
        start: sweep_cfg.start,
        end: sweep_cfg.end,
        steps: sweep_cfg.steps,
        seed: common.seed,
        jitter: sweep_cfg.jitter.unwrap_or(0.5),
        problems,
        fixed_rho_max: match &problem.rho_max {
            Some(r) => Some(r.expand(loaded.g.n(), "problem.rho_max")?),
            None => None,
        },
        bruteforce_limit: common.bruteforce_limit,
    };
    let records = run_sweep(
        &loaded.g,
        &loaded.params,
        &loaded.p_a0,
        &loaded.p_b0,
        tau_b,
        &scenario_label(&loaded.config),
        &spec,
    )?;
    emit_records(common, &loaded.config, &records)?;
    Ok(())
}

fn check(name: &str, pass: bool, detail: String, failures: &mut usize) {
    if pass {
        outln!("PASS {name}: {detail}");
    } else {
        outln!("FAIL {name}: {detail}");
        *failures += 1;
    }
}

fn cmd_verify(common: &Common) -> Result<(), Error> {
    let loaded = load(common)?;
    let mut failures = 0usize;

    // Equilibrium vs projected best-response fixed point.
    let prices = PriceProfile::new(loaded.p_a0.clone(), loaded.p_b0.clone())?;
    let (eq, cert) = nonneg_equilibrium(&loaded.g, &loaded.params, &prices, None)?;
    let (br, trace) = oracle::best_response_fixed_point(
        &loaded.g,
        &loaded.params,
        &prices,
        &oracle::BrOpts::default(),
    )?;
    if trace.converged {
        let diff = canopy_core::linalg::sup_norm_diff(&eq.x_a, &br.x_a)
            .max(canopy_core::linalg::sup_norm_diff(&eq.x_b, &br.x_b));
        check(
            "equilibrium-vs-best-response",
            diff < 1e-7,
            format!("sup diff {diff:.3e} (branch {:?})", cert.branch),
            &mut failures,
        );
    } else {
        check(
            "equilibrium-vs-best-response",
            false,
            format!(
                "best-response iteration did not converge (residual {:.3e})",
                trace.final_residual
            ),
            &mut failures,
        );
    }
    check(
        "kkt-residual",
        cert.kkt_residual <= 1e-8,
        format!("{:.3e}", cert.kkt_residual),
        &mut failures,
    );

    // Vanish-penalty system check, zero budget.
    let bundle = leontief_bundle(&loaded.g, &loaded.params, &loaded.p_b0)?;
    let zeros = vec![0.0; loaded.g.n()];
    if common.paper_literal {
        let rho = vanish_penalty_paper_literal(&bundle, &loaded.p_a0, &zeros)?;
        let p_a: Vec<f64> = loaded.p_a0.iter().zip(&rho).map(|(a, r)| a + r).collect();
        let p_b: Vec<f64> = loaded.p_b0.iter().zip(&rho).map(|(b, r)| b - r).collect();
        let xb = canopy_core::solver_redistribution::interior_xb_at(&bundle, &p_a, &p_b)?;
        let residual = xb.iter().map(|x| x.abs()).fold(0.0, f64::max);
        check(
            "vanish-penalty (paper-literal form)",
            residual <= 1e-8,
            format!("max |x_b| = {residual:.3e}"),
            &mut failures,
        );
    } else {
        match vanish_penalty(&bundle, &loaded.p_a0, &zeros) {
            Ok(v) => check(
                "vanish-penalty",
                v.residual <= 1e-8,
                format!("max |x_b| = {:.3e}, negative entries: {}", v.residual, v.has_negative),
                &mut failures,
            ),
            Err(e) => check("vanish-penalty", false, e.to_string(), &mut failures),
        }
    }

    // Solver vs brute force, when a problem is configured and small enough.
    if let Some(problem) = &loaded.config.problem {
        match problem.kind {
            ProblemKind::P if loaded.g.n() <= common.bruteforce_limit.min(15) => {
                let p = problem_p(&loaded)?;
                let opts = SolveOpts {
                    bruteforce_limit: common.bruteforce_limit,
                    tol: common.tol,
                };
                let fast = solve_p(&loaded.g, &loaded.params, &p, &opts)?;
                let brute = oracle::vertex_enumeration_p(&loaded.g, &loaded.params, &p)?;
                check(
                    "solve-p-vs-vertex-enumeration",
                    fast.welfare >= brute.welfare - 1e-8,
                    format!(
                        "solver {} ({}), brute force {}",
                        fast.welfare, fast.certificate, brute.welfare
                    ),
                    &mut failures,
                );
            }
            ProblemKind::Ptilde => {
                let p = problem_ptilde(&loaded)?;
                let agg =
                    canopy_core::solver_componentwise::component_aggregates(&loaded.g, &loaded.params, &p)?;
                if agg.count() <= 20 {
                    let (result, relax) = solve_ptilde(&loaded.g, &loaded.params, &p)?;
                    let (_, brute_welfare) = oracle::vertex_enumeration_ptilde(&agg)?;
                    let pass = if relax.exact {
                        (result.welfare - brute_welfare).abs() <= 1e-8
                    } else {
                        brute_welfare <= relax.upper_bound + 1e-8
                    };
                    check(
                        "solve-ptilde-vs-vertex-enumeration",
                        pass,
                        format!(
                            "solver {} (exact {}), brute force {}, upper bound {}",
                            result.welfare, relax.exact, brute_welfare, relax.upper_bound
                        ),
                        &mut failures,
                    );
                }
            }
            ProblemKind::Pr => {
                let p = problem_pr(&loaded)?;
                let (result, _) = solve_pr(&loaded.g, &loaded.params, &p)?;
                let grid = oracle::grid_search_pr(&loaded.g, &loaded.params, &p, 21)?;
                check(
                    "solve-pr-vs-grid",
                    result.welfare >= grid.welfare - 1e-6 || !result.optimality_exact,
                    format!("solver {}, grid {}", result.welfare, grid.welfare),
                    &mut failures,
                );
            }
            _ => {}
        }
    }

    if failures > 0 {
        return Err(Error::Numerical(format!("{failures} verification check(s) failed")));
    }
    outln!("all checks passed");
    Ok(())
}

fn cmd_recommend(objective: Objective, common: &Common) -> Result<(), Error> {
    let loaded = load(common)?;
    let p = problem_pr(&loaded)?;
    let eq13 = budget_penalty_check(&p);
    let (max_a, max_b) = p.maximal_policy();
    match objective {
        Objective::Effort => {
            outln!("objective: unsustainable-effort reduction");
            outln!("recommendation: set (p_a, p_b) = (p_a0 + rho_max + budget, p_b0 - rho_max)");
            outln!("p_a = {max_a:?}");
            outln!("p_b = {max_b:?}");
            outln!("(minimizes aggregate unsustainable effort over all feasible policies)");
        }
        Objective::Welfare => {
            outln!("objective: welfare improvement");
            if eq13.all {
                outln!("budget-penalty sufficiency holds (rho_max + budget/2 >= p_b0 - p_a0)");
                outln!(
                    "recommendation: set (p_a, p_b) = (p_a0 + rho_max + budget, p_b0 - rho_max)"
                );
                outln!("p_a = {max_a:?}");
                outln!("p_b = {max_b:?}");
                outln!("(welfare-optimal; no agent's utility decreases)");
            } else {
                outln!("budget-penalty sufficiency fails; solving the premium-only problem");
                let bounded = ProblemP {
                    p_a0: p.p_a0.clone(),
                    p_max: p
                        .p_a0
                        .iter()
                        .zip(&p.budget)
                        .map(|(a, b)| a + b)
                        .collect(),
                    p_b0: p.p_b0.clone(),
                    tau_b: p.tau_b,
                };
                let opts = SolveOpts {
                    bruteforce_limit: common.bruteforce_limit,
                    tol: common.tol,
                };
                let star = solve_p(&loaded.g, &loaded.params, &bounded, &opts)?;
                let recheck = (0..loaded.g.n()).all(|i| {
                    p.rho_max[i] + 0.5 * p.budget[i] >= p.p_b0[i] - star.policy_a[i]
                });
                if recheck {
                    outln!(
                        "sufficiency holds against the improved baseline; \
                         recommendation: maximum penalties plus the full budget"
                    );
                    outln!("p_a = {max_a:?}");
                    outln!("p_b = {max_b:?}");
                } else {
                    outln!("recommendation: apply the premium-only policy, no penalties");
                    print_policy("premium-only policy", &star);
                }
            }
        }
    }
    Ok(())
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Feasibility(common) => cmd_feasibility(common),
        Command::Equilibrium(common) => cmd_equilibrium(common),
        Command::Centrality(common) => cmd_centrality(common),
        Command::Solve { which, common } => cmd_solve(*which, common),
        Command::Sweep(common) => cmd_sweep(common),
        Command::Verify(common) => cmd_verify(common),
        Command::Recommend { objective, common } => cmd_recommend(*objective, common),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Infeasible(_) => 2,
                Error::AssumptionViolation(_) => 3,
                Error::Numerical(_) => 4,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
