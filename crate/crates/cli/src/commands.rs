use std::collections::BTreeMap;

use serde_json::{json, Value};
use teamdp::dp::{compare_solutions, solve_manager, solve_member, CompareOptions, DEFAULT_NODE_BUDGET};
use teamdp::gaussian::{
    closed_form, dp_walkthrough, j_sections, linear_search, mc_verify, Axis, GaussianInstance, Grid, LinearStrategy,
};
use teamdp::oracle::{enumerate_centralized, enumerate_decentralized, exact_cost, DEFAULT_ENUMERATION_BUDGET};
use teamdp::sim::{estimate_cost, SimConfig};
use teamdp::Strategy;

use crate::error::CliError;
use crate::report::CommandInfo;
use crate::scenario::{self, Scenario};
use crate::{Cli, Command};

pub struct Output {
    pub results: Value,
    pub diagnostics: BTreeMap<String, Value>,
    pub table: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
    pub exit_code: i32,
}

impl Output {
    fn new(results: Value) -> Self {
        Self {
            results,
            diagnostics: BTreeMap::new(),
            table: None,
            exit_code: 0,
        }
    }

    fn diag(mut self, key: &str, value: Value) -> Self {
        self.diagnostics.insert(key.into(), value);
        self
    }
}

const DEFAULT_SIM_SAMPLES: usize = 10_000;
const DEFAULT_GAUSSIAN_SAMPLES: usize = 1_000_000;
const DEFAULT_COVARIANCE: f64 = -0.5;
const DEFAULT_GRID: &str = "0:2:0.01,0:1:0.01,-1:0:0.01";

/// The optimum of the worked example as usually stated: `U_2^2 = ½ X_0^2`,
/// `U_3^1 = ½ (X_0^1 + X_0^2) - ¼ X_0^2`.
const STATED: LinearStrategy = LinearStrategy {
    a: 0.5,
    b: 0.5,
    d: -0.25,
};

pub fn dispatch(cli: &Cli, info: &mut CommandInfo) -> Result<Output, CliError> {
    reject_unused(cli)?;
    if cli.command == Command::GaussianExample {
        return gaussian_example(cli, info);
    }
    let path = cli
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("{} needs --scenario", info.name)))?;
    let sc = scenario::load(path)?;
    info.scenario_hash = Some(sc.hash.clone());
    let violations = scenario::violations(&sc.model, &sc.structure);
    if cli.command == Command::Validate {
        let mut out = Output::new(json!({
            "valid": violations.is_empty(),
            "violations": violations,
        }));
        out.exit_code = if violations.is_empty() { 0 } else { 2 };
        return Ok(out);
    }
    if !violations.is_empty() {
        return Err(CliError::Invalid(violations));
    }
    let node_budget = cli.node_budget.unwrap_or(DEFAULT_NODE_BUDGET);
    info.parameters.insert("node_budget".into(), json!(node_budget));
    info.parameters.insert("information_structure".into(), json!(sc.structure.name()));
    match cli.command {
        Command::SolveManager => manager(&sc, node_budget),
        Command::SolveMember => member(cli, &sc, node_budget),
        Command::OracleCentralized | Command::OracleDecentralized => {
            let budget = cli.enumeration_budget.unwrap_or(DEFAULT_ENUMERATION_BUDGET);
            info.parameters.insert("enumeration_budget".into(), json!(budget));
            oracle(cli.command, &sc, budget)
        }
        Command::Compare => {
            let budget = cli.enumeration_budget.unwrap_or(DEFAULT_ENUMERATION_BUDGET);
            info.parameters.insert("enumeration_budget".into(), json!(budget));
            compare(&sc, node_budget, budget)
        }
        Command::Simulate => {
            let config = SimConfig {
                samples: cli.samples.unwrap_or(DEFAULT_SIM_SAMPLES),
                seed: cli.seed.unwrap_or(0),
            };
            info.seed = Some(config.seed);
            info.parameters.insert("samples".into(), json!(config.samples));
            simulate(&sc, node_budget, config)
        }
        Command::Validate | Command::GaussianExample => unreachable!("handled above"),
    }
}

fn reject_unused(cli: &Cli) -> Result<(), CliError> {
    let gaussian = cli.command == Command::GaussianExample;
    let mut unused = Vec::new();
    if gaussian {
        for (flag, set) in [
            ("--scenario", cli.scenario.is_some()),
            ("--member", cli.member.is_some()),
            ("--node-budget", cli.node_budget.is_some()),
            ("--enumeration-budget", cli.enumeration_budget.is_some()),
        ] {
            if set {
                unused.push(flag);
            }
        }
    } else {
        if cli.covariance.is_some() {
            unused.push("--covariance");
        }
        if cli.grid.is_some() {
            unused.push("--grid");
        }
        let sampling = cli.command == Command::Simulate;
        if !sampling && cli.samples.is_some() {
            unused.push("--samples");
        }
        if !sampling && cli.seed.is_some() {
            unused.push("--seed");
        }
        if cli.command != Command::SolveMember && cli.member.is_some() {
            unused.push("--member");
        }
    }
    if unused.is_empty() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("not used by this command: {}", unused.join(", "))))
    }
}

fn strategy_json(s: &Strategy) -> Value {
    json!({ "kind": s.kind(), "entries": s.entries() })
}

fn strategy_table(s: &Strategy) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let join = |v: &[String]| v.join(" ");
    let rows = s
        .entries()
        .into_iter()
        .map(|e| {
            vec![
                e.key,
                e.member.map(|m| m.to_string()).unwrap_or_default(),
                join(&e.action.iter().map(ToString::to_string).collect::<Vec<_>>()),
                e.belief
                    .map(|b| join(&b.iter().map(ToString::to_string).collect::<Vec<_>>()))
                    .unwrap_or_default(),
            ]
        })
        .collect();
    (vec!["key", "member", "action", "belief"], rows)
}

fn per_stage<T>(stages: &[BTreeMap<impl Ord, T>]) -> Value {
    json!(stages.iter().map(BTreeMap::len).collect::<Vec<_>>())
}

fn manager(sc: &Scenario, node_budget: usize) -> Result<Output, CliError> {
    let sol = solve_manager(&sc.model, &sc.structure, node_budget)?;
    let strategy = Strategy::SeparatedTeam(sol.strategy());
    let mut out = Output::new(json!({
        "root_value": sol.root_value,
        "strategy": strategy_json(&strategy),
    }))
    .diag("node_count", json!(sol.node_count()))
    .diag("nodes_per_stage", per_stage(&sol.stages));
    out.table = Some(strategy_table(&strategy));
    Ok(out)
}

fn member(cli: &Cli, sc: &Scenario, node_budget: usize) -> Result<Output, CliError> {
    let k = cli
        .member
        .ok_or_else(|| CliError::Usage("solve-member needs --member".into()))?;
    if k >= sc.model.num_members {
        return Err(CliError::Usage(format!(
            "--member {k} out of range: the team has {} members (0-based)",
            sc.model.num_members
        )));
    }
    let manager = solve_manager(&sc.model, &sc.structure, node_budget)?;
    let sol = solve_member(&sc.model, &sc.structure, k, &manager.strategy(), node_budget)?;
    let strategy = Strategy::MemberSeparated(sol.strategy());
    let mut out = Output::new(json!({
        "member": k,
        "co_strategy": "manager",
        "root_value": sol.root_value,
        "manager_value": manager.root_value,
        "strategy": strategy_json(&strategy),
    }))
    .diag("node_count", json!(sol.node_count()))
    .diag("nodes_per_stage", per_stage(&sol.stages))
    .diag("manager_node_count", json!(manager.node_count()));
    out.table = Some(strategy_table(&strategy));
    Ok(out)
}

fn oracle(command: Command, sc: &Scenario, budget: u64) -> Result<Output, CliError> {
    let found = if command == Command::OracleCentralized {
        enumerate_centralized(&sc.model, &sc.structure, budget)?
    } else {
        enumerate_decentralized(&sc.model, &sc.structure, budget)?
    };
    let mut out = Output::new(json!({
        "cost": found.cost,
        "strategy": strategy_json(&found.strategy),
    }))
    .diag("candidates", json!(found.count));
    out.table = Some(strategy_table(&found.strategy));
    Ok(out)
}

fn compare(sc: &Scenario, node_budget: usize, enumeration_budget: u64) -> Result<Output, CliError> {
    let report = compare_solutions(
        &sc.model,
        &sc.structure,
        CompareOptions {
            node_budget,
            enumeration_budget,
        },
    )?;
    let rows = report
        .nodes
        .iter()
        .map(|n| {
            vec![
                n.time.to_string(),
                n.member.to_string(),
                n.history.clone(),
                n.manager_action.to_string(),
                n.member_action.to_string(),
                n.agree.to_string(),
                n.manager_value.to_string(),
                n.member_value.to_string(),
            ]
        })
        .collect();
    let header = vec![
        "time",
        "member",
        "history",
        "manager_action",
        "member_action",
        "agree",
        "manager_value",
        "member_value",
    ];
    let mut out = Output::new(serde_json::to_value(&report).expect("report serializes"))
        .diag("manager_node_count", json!(report.manager_nodes))
        .diag(
            "member_node_counts",
            json!(report.members.iter().map(|m| m.member_nodes).collect::<Vec<_>>()),
        );
    out.table = Some((header, rows));
    Ok(out)
}

fn simulate(sc: &Scenario, node_budget: usize, config: SimConfig) -> Result<Output, CliError> {
    if config.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let sol = solve_manager(&sc.model, &sc.structure, node_budget)?;
    let policy = sol.strategy();
    let est = estimate_cost(&sc.model, &sc.structure, &policy, config).map_err(|e| CliError::Solver(e.to_string()))?;
    let exact = exact_cost(&sc.model, &sc.structure, &policy)?;
    let z = if est.std_error > 0.0 {
        (est.mean - exact) / est.std_error
    } else {
        0.0
    };
    Ok(Output::new(json!({
        "policy": "manager",
        "estimate": est,
        "exact_cost": exact,
        "standardized_error": z,
    }))
    .diag("node_count", json!(sol.node_count())))
}

fn parse_axis(text: &str) -> Result<Axis, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(CliError::Usage(format!("grid axis `{text}` is not start:stop:step")));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("grid axis `{text}`: `{s}` is not a number")))
    };
    Ok(Axis {
        start: num(start)?,
        stop: num(stop)?,
        step: num(step)?,
    })
}

pub fn parse_grid(text: &str) -> Result<Grid, CliError> {
    let axes = text.split(',').map(parse_axis).collect::<Result<Vec<_>, _>>()?;
    let [a, b, d] = axes.as_slice() else {
        return Err(CliError::Usage("--grid needs three axes: a0:a1:step,b0:b1:step,d0:d1:step".into()));
    };
    Ok(Grid { a: *a, b: *b, d: *d })
}

fn close(x: &LinearStrategy, y: &LinearStrategy) -> bool {
    (x.a - y.a).abs() <= 1e-12 && (x.b - y.b).abs() <= 1e-12 && (x.d - y.d).abs() <= 1e-12
}

fn gaussian_run(c: f64, grid: &Grid, config: SimConfig) -> Result<(Value, GaussianInstance), CliError> {
    let inst = GaussianInstance::new(c).map_err(|e| CliError::Usage(e.to_string()))?;
    let (opt, j) = closed_form(&inst);
    let walk = dp_walkthrough(&inst);
    let (found, found_cost) = linear_search(&inst, grid).map_err(|e| CliError::Usage(e.to_string()))?;
    let mc = mc_verify(&inst, &opt, config);
    let run = json!({
        "covariance": c,
        "closed_form": { "strategy": opt, "cost": j },
        "walkthrough": walk,
        "linear_search": {
            "strategy": found,
            "cost": found_cost,
            "gap": found_cost - j,
        },
        "monte_carlo": {
            "estimate": mc,
            "standardized_error": (mc.mean - j) / mc.std_error,
        },
        "reproduces_stated_strategy": close(&opt, &STATED),
    });
    Ok((run, inst))
}

fn gaussian_example(cli: &Cli, info: &mut CommandInfo) -> Result<Output, CliError> {
    let c = cli.covariance.unwrap_or(DEFAULT_COVARIANCE);
    let grid_text = cli.grid.as_deref().unwrap_or(DEFAULT_GRID);
    let grid = parse_grid(grid_text)?;
    let config = SimConfig {
        samples: cli.samples.unwrap_or(DEFAULT_GAUSSIAN_SAMPLES),
        seed: cli.seed.unwrap_or(0),
    };
    if config.samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    info.seed = Some(config.seed);
    info.parameters.insert("covariance".into(), json!(c));
    info.parameters.insert("samples".into(), json!(config.samples));
    info.parameters.insert("grid".into(), json!(grid));

    let (primary, inst) = gaussian_run(c, &grid, config)?;
    let (mirrored, mirror_inst) = gaussian_run(-c, &grid, config)?;
    let reproducing: Vec<f64> = [c, -c]
        .into_iter()
        .filter(|&v| GaussianInstance::new(v).is_ok_and(|i| close(&closed_form(&i).0, &STATED)))
        .collect();
    let a_values = grid.a.points();
    let mut rows = Vec::new();
    let mut sections = Vec::new();
    for (cov, inst) in [(c, &inst), (-c, &mirror_inst)] {
        for s in j_sections(inst, &a_values) {
            rows.push(vec![
                cov.to_string(),
                s.a.to_string(),
                s.j_fixed_bd.to_string(),
                s.j_best_bd.to_string(),
            ]);
            sections.push(json!({ "covariance": cov, "a": s.a, "j_fixed_bd": s.j_fixed_bd, "j_best_bd": s.j_best_bd }));
        }
    }
    let mut out = Output::new(json!({
        "runs": [primary, mirrored],
        "sign_check": {
            "stated_strategy": STATED,
            "reproduced_by_covariance": reproducing,
            "note": "E[X_0^1 + X_0^2 | X_0^2] = (1 + c) X_0^2, so the stated coefficient 0.5 on X_0^2 holds only for c = -0.5; \
c = +0.5 gives 1.5. The optimal cost (1 - c^2)/4 is the same for both signs.",
        },
        "sections": sections,
    }))
    .diag("grid_points", json!(grid.a.points().len() * grid.b.points().len() * grid.d.points().len()));
    out.table = Some((vec!["covariance", "a", "j_fixed_bd", "j_best_bd"], rows));
    Ok(out)
}
