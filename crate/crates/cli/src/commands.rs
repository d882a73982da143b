use mabinogion::apolicy::{expected_final_black_a, expected_time_a};
use mabinogion::asymptotics::{audit, AuditQuantity, ApproxReport};
use mabinogion::exact::{to_real, ExactRational};
use mabinogion::identities::{verify_identities, Identity};
use mabinogion::mprocess::{
    absorb_prob_black, conditional_expected_time, expected_final_black, expected_time, expected_time_symmetric,
    uncontrolled_chain,
};
use mabinogion::output::{decimal15, opt_decimal, rational_cells, OutputEnvelope};
use mabinogion::recursion::{brute_force_values, ChainQuantity};
use mabinogion::sim::{
    sample_paths, scan_q, simulate, simulate_table1, SimConfig, SimulationSummary, Table1Config,
};
use mabinogion::strategy::{
    brute_force_under_strategy, exact_value_under_strategy, final_black_under, time_under, StrategySpec,
    StrategyValue,
};
use mabinogion::{Error, UrnState};
use num_traits::Zero;

use crate::args::{self, ExactQuantity, Process};
use crate::{
    AuditArgs, Command, ExactArgs, Failure, OracleArgs, PathsArgs, ScanArgs, SimulateArgs, Table1Args, VerifyArgs,
};

type CmdError = (Option<Box<OutputEnvelope>>, Failure);
type Outcome = Result<OutputEnvelope, CmdError>;

fn usage(msg: impl Into<String>) -> CmdError {
    (None, Failure::Usage(msg.into()))
}

fn lib(e: Error) -> CmdError {
    (None, e.into())
}

pub fn run(command: &Command) -> Outcome {
    match command {
        Command::Exact(a) => exact(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::ScanQ(a) => scan(a),
        Command::Table1(a) => table1(a),
        Command::Verify(a) => verify(a),
        Command::Audit(a) => audit_cmd(a),
        Command::Paths(a) => paths(a),
        Command::Oracle(a) => oracle(a),
    }
}

fn value_cells(v: &StrategyValue) -> [String; 2] {
    match v {
        StrategyValue::Exact(x) => rational_cells(x),
        StrategyValue::Real(x) => [String::new(), decimal15(*x)],
    }
}

fn exact(a: &ExactArgs) -> Outcome {
    let state = UrnState::new(a.state.white, a.state.black);
    let process_label = match &a.process {
        Process::Uncontrolled => "m".to_string(),
        Process::PolicyA => "a".to_string(),
        Process::Controlled(s) => s.label(),
        Process::Conditional => "conditional".to_string(),
    };
    let strategy_value = |strategy: &StrategySpec| -> Result<StrategyValue, CmdError> {
        let q = a.quantity.to_strategy_quantity().map_err(usage)?;
        exact_value_under_strategy(state, strategy, q).map_err(lib)
    };
    let value = match (&a.process, &a.quantity) {
        (Process::Uncontrolled, ExactQuantity::Time) => StrategyValue::Exact(expected_time(state).map_err(lib)?),
        (Process::Uncontrolled, ExactQuantity::FinalBlack) => {
            StrategyValue::Exact(expected_final_black(state).map_err(lib)?)
        }
        (Process::Uncontrolled, ExactQuantity::AbsorbProb) => {
            StrategyValue::Exact(absorb_prob_black(state).map_err(lib)?)
        }
        (Process::Uncontrolled, ExactQuantity::Discounted(_)) => strategy_value(&StrategySpec::None)?,
        (Process::PolicyA, ExactQuantity::Time) => StrategyValue::Exact(expected_time_a(state).map_err(lib)?),
        (Process::PolicyA, ExactQuantity::FinalBlack) => {
            StrategyValue::Exact(expected_final_black_a(state).map_err(lib)?)
        }
        (Process::PolicyA, _) => strategy_value(&StrategySpec::PolicyA)?,
        (Process::Controlled(s), _) => strategy_value(s)?,
        (Process::Conditional, ExactQuantity::Time) => {
            StrategyValue::Exact(conditional_expected_time(state).map_err(lib)?)
        }
        (Process::Conditional, q) => {
            return Err(usage(format!("the conditional process supports only time, not {}", q.label())))
        }
    };
    let mut env = OutputEnvelope::new("exact", &["process", "white", "black", "quantity", "value", "decimal"])
        .param("process", &process_label)
        .param("quantity", a.quantity.label());
    let [frac, dec] = value_cells(&value);
    env.push(vec![
        process_label,
        state.white.to_string(),
        state.black.to_string(),
        a.quantity.label(),
        frac,
        dec,
    ]);
    Ok(env)
}

const SUMMARY_COLUMNS: [&str; 8] = [
    "mean_h",
    "stderr_h",
    "mean_final_black",
    "stderr_final_black",
    "mean_discounted",
    "stderr_discounted",
    "prob_all_black",
    "runs",
];

fn summary_cells(s: &SimulationSummary) -> Vec<String> {
    vec![
        decimal15(s.mean_h),
        decimal15(s.stderr_h),
        decimal15(s.mean_final_black),
        decimal15(s.stderr_final_black),
        opt_decimal(s.mean_discounted),
        opt_decimal(s.stderr_discounted),
        decimal15(s.prob_all_black),
        s.runs.to_string(),
    ]
}

fn columns(prefix: &[&'static str]) -> Vec<&'static str> {
    prefix.iter().chain(SUMMARY_COLUMNS.iter()).copied().collect()
}

fn need_state(white: Option<u64>, black: Option<u64>) -> Result<UrnState, CmdError> {
    match (white, black) {
        (Some(w), Some(b)) => Ok(UrnState::new(w, b)),
        _ => Err(usage("a start state needs both -w and -b")),
    }
}

fn simulate_cmd(a: &SimulateArgs) -> Outcome {
    if a.table1 {
        return table1(&Table1Args {
            runs: a.runs,
            large_runs: a.large_runs,
            large_from: 200_000,
            seed: a.seed,
            totals: None,
            fractions: None,
        });
    }
    let start = need_state(a.white, a.black)?;
    if let Some(q) = &a.scan_q {
        let q = args::grid_arg(q).map_err(usage)?;
        let mu = args::grid_arg(a.mu.as_deref().unwrap_or("0")).map_err(usage)?;
        return scan(&ScanArgs {
            state: crate::StateArgs { white: start.white, black: start.black },
            q,
            mu,
            runs: a.runs,
            seed: a.seed,
        });
    }
    let mut config = SimConfig::new(start, a.strategy.clone())
        .runs(a.runs)
        .seed(a.seed)
        .conditional(a.conditional)
        .batch_size(a.batch_size);
    if let Some(mu) = &a.mu {
        config = config.mu(args::real(mu).map_err(usage)?);
    }
    let summary = simulate(&config).map_err(lib)?;
    let mut env = OutputEnvelope::new("simulate", &columns(&["white", "black", "strategy", "conditional", "seed"]))
        .param("runs", a.runs)
        .param("seed", a.seed)
        .param("batch_size", a.batch_size);
    let mut row = vec![
        start.white.to_string(),
        start.black.to_string(),
        a.strategy.label(),
        a.conditional.to_string(),
        a.seed.to_string(),
    ];
    row.extend(summary_cells(&summary));
    env.push(row);
    Ok(env)
}

fn scan(a: &ScanArgs) -> Outcome {
    if a.q.0.is_empty() {
        return Err(usage("--q needs at least one value"));
    }
    let start = UrnState::new(a.state.white, a.state.black);
    let mus: Vec<f64> = a.mu.0.iter().map(to_real).collect::<Result<_, _>>().map_err(lib)?;
    let cells = scan_q(start, &a.q.0, a.runs, &mus, a.seed, None).map_err(lib)?;
    let mut env = OutputEnvelope::new("scan-q", &columns(&["strategy", "q", "mu"]))
        .param("white", start.white)
        .param("black", start.black)
        .param("runs", a.runs)
        .param("seed", a.seed);
    let mu_labels: Vec<String> = a.mu.0.iter().map(|m| m.to_string()).collect();
    for (i, cell) in cells.iter().enumerate() {
        let q = &a.q.0[i / mus.len()];
        let mut row = vec![cell.strategy.clone(), decimal15(to_real(q).map_err(lib)?), mu_labels[i % mus.len()].clone()];
        row.extend(summary_cells(&cell.summary));
        env.push(row);
    }
    Ok(env)
}

fn table1(a: &Table1Args) -> Outcome {
    let mut config = Table1Config {
        runs: a.runs,
        large_runs: a.large_runs,
        large_from: a.large_from,
        seed: a.seed,
        ..Default::default()
    };
    if let Some(t) = &a.totals {
        config.totals = t.clone();
    }
    if let Some(f) = &a.fractions {
        config.fractions = f.0.clone();
    }
    let cells = simulate_table1(&config).map_err(lib)?;
    let mut env = OutputEnvelope::new("table1", &columns(&["total", "x", "white", "black"]))
        .param("runs", a.runs)
        .param("seed", a.seed);
    for c in &cells {
        let mut row = vec![c.total.to_string(), c.fraction.clone(), c.start.white.to_string(), c.start.black.to_string()];
        row.extend(summary_cells(&c.summary));
        env.push(row);
    }
    Ok(env)
}

struct Checks {
    env: OutputEnvelope,
    failed: Vec<String>,
}

impl Checks {
    fn add(&mut self, check: &str, parameter: String, failures: Vec<String>, cases: usize) {
        let status = if failures.is_empty() { "pass" } else { "fail" };
        let detail = if failures.is_empty() {
            format!("{cases} cases")
        } else {
            let shown: Vec<&str> = failures.iter().take(5).map(String::as_str).collect();
            format!("{} of {cases} failed: {}", failures.len(), shown.join("; "))
        };
        if !failures.is_empty() {
            self.failed.push(check.to_string());
        }
        self.env.push(vec![check.to_string(), parameter, status.to_string(), detail]);
    }
}

fn verify(a: &VerifyArgs) -> Outcome {
    let all = !(a.identities || a.oracle || a.asymptotics);
    let mut checks = Checks {
        env: OutputEnvelope::new("verify", &["check", "parameter", "status", "detail"]),
        failed: Vec::new(),
    };
    if all || a.identities {
        if a.max_n == 0 {
            return Err(usage("--max-n must be at least 1"));
        }
        let reports = verify_identities(a.max_n);
        for identity in [Identity::CentralRow, Identity::OffCentralRow] {
            let mine: Vec<_> = reports.iter().filter(|r| r.identity == identity).collect();
            let bad = mine.iter().filter(|r| !r.holds).map(|r| format!("n={}", r.n)).collect();
            let name = format!("identity-{}", identity.label().replace('_', "-"));
            checks.add(&name, format!("n<={}", a.max_n), bad, mine.len());
        }
    }
    if all || a.oracle {
        verify_oracle(&mut checks, a.max_total).map_err(lib)?;
    }
    if all || a.asymptotics {
        if a.k_min == 0 {
            return Err(usage("--k-min must be at least 1"));
        }
        let ks: Vec<u64> = (a.k_min..=a.k_max).collect();
        for (name, q) in [("bound-v-a", AuditQuantity::PolicyAValue), ("bound-t-a", AuditQuantity::PolicyATime)] {
            let reports = audit(&q, &ks).map_err(lib)?;
            let abs_bad = reports
                .iter()
                .filter(|r| r.abs_err.is_none_or(|e| e >= 0.1))
                .map(|r| format!("k={}", r.parameter))
                .collect();
            checks.add(&format!("{name}-abs"), format!("{}<=k<={}", a.k_min, a.k_max), abs_bad, reports.len());
            if reports.is_empty() {
                continue;
            }
            let rel: Vec<&ApproxReport> = reports.iter().filter(|r| r.parameter > 25).collect();
            let rel_bad = rel
                .iter()
                .filter(|r| r.rel_err.is_none_or(|e| e >= 1e-3))
                .map(|r| format!("k={}", r.parameter))
                .collect();
            checks.add(&format!("{name}-rel"), format!("25<k<={}", a.k_max), rel_bad, rel.len());
        }
    }
    if checks.failed.is_empty() {
        Ok(checks.env)
    } else {
        let msg = checks.failed.join(", ");
        Err((Some(Box::new(checks.env)), Failure::Verification(msg)))
    }
}

fn verify_oracle(checks: &mut Checks, max_total: u64) -> Result<(), Error> {
    let param = format!("N<={max_total}");
    let (mut absorb, mut final_black, mut time, mut cases) = (Vec::new(), Vec::new(), Vec::new(), 0);
    for n in 1..=max_total {
        let chain = uncontrolled_chain(n)?;
        let payoff = brute_force_values(&chain, ChainQuantity::TerminalPayoff)?;
        let cost = brute_force_values(&chain, ChainQuantity::TotalCost)?;
        for b in 0..=n {
            let st = UrnState::new(n - b, b);
            cases += 1;
            let fb = &payoff[b as usize];
            if &expected_final_black(st)? != fb {
                final_black.push(st.to_string());
            }
            if absorb_prob_black(st)? * ExactRational::from_integer(n.into()) != *fb {
                absorb.push(st.to_string());
            }
            if expected_time(st)? != cost[b as usize] {
                time.push(st.to_string());
            }
        }
    }
    checks.add("m-absorb-prob", param.clone(), absorb, cases);
    checks.add("m-final-black", param.clone(), final_black, cases);
    checks.add("m-time", param.clone(), time, cases);

    let (mut va, mut ta, mut cases) = (Vec::new(), Vec::new(), 0);
    for n in 1..=max_total {
        for b in 0..=n {
            let st = UrnState::new(n - b, b);
            cases += 1;
            if expected_final_black_a(st)? != final_black_under(st, &StrategySpec::PolicyA)? {
                va.push(st.to_string());
            }
            if expected_time_a(st)? != time_under(st, &StrategySpec::PolicyA)? {
                ta.push(st.to_string());
            }
        }
    }
    checks.add("a-final-black", param.clone(), va, cases);
    checks.add("a-time", param.clone(), ta, cases);

    let mut cond = Vec::new();
    let k_max = max_total / 2;
    for k in 1..=k_max {
        if conditional_expected_time(UrnState::new(k, k))? != expected_time_symmetric(k) {
            cond.push(format!("k={k}"));
        }
    }
    checks.add("conditional-time-symmetric", format!("k<={k_max}"), cond, k_max as usize);

    let mut disc = Vec::new();
    let strategies = [StrategySpec::None, StrategySpec::PolicyA, StrategySpec::PolicyR, "q:2/3".parse()?];
    let mut cases = 0;
    for strategy in &strategies {
        for n in 1..=max_total {
            for b in 0..=n {
                let st = UrnState::new(n - b, b);
                cases += 1;
                let zero = exact_value_under_strategy(st, strategy, mabinogion::strategy::Quantity::Discounted(0.0))?;
                if zero.exact() != Some(&final_black_under(st, strategy)?) {
                    disc.push(format!("{strategy} {st}"));
                }
            }
        }
    }
    checks.add("zero-rate-discount", param, disc, cases);
    Ok(())
}

fn audit_cmd(a: &AuditArgs) -> Outcome {
    let quantity: AuditQuantity = a.quantity.parse().map_err(lib)?;
    if a.k_min == 0 || a.k_min > a.k_max || a.step == 0 {
        return Err(usage("need 1 <= --k-min <= --k-max and --step >= 1"));
    }
    let params: Vec<u64> = (a.k_min..=a.k_max).step_by(a.step as usize).collect();
    let reports = audit(&quantity, &params).map_err(lib)?;
    let mut env = OutputEnvelope::new("audit", &ApproxReport::CSV_HEADER).param("quantity", quantity.label());
    for r in &reports {
        env.push(r.csv_record().to_vec());
    }
    Ok(env)
}

fn paths(a: &PathsArgs) -> Outcome {
    let start = UrnState::new(a.state.white, a.state.black);
    let records = sample_paths(start, &a.strategy, a.conditional, a.n_paths, a.seed).map_err(lib)?;
    let mut env = OutputEnvelope::new("paths", &["path", "step", "black"])
        .param("white", start.white)
        .param("black", start.black)
        .param("strategy", a.strategy.label())
        .param("seed", a.seed);
    for (i, p) in records.iter().enumerate() {
        for pt in &p.points {
            env.push(vec![i.to_string(), pt.step.to_string(), pt.black.to_string()]);
        }
    }
    Ok(env)
}

fn oracle(a: &OracleArgs) -> Outcome {
    let state = UrnState::new(a.state.white, a.state.black);
    let quantity = match a.quantity {
        ExactQuantity::Time => ChainQuantity::TotalCost,
        ExactQuantity::FinalBlack => ChainQuantity::TerminalPayoff,
        ExactQuantity::Discounted(ref mu) if mu.is_zero() => ChainQuantity::TerminalPayoff,
        _ => return Err(usage("the oracle supports time and final-black (use --discount-factor to discount)")),
    };
    if a.discount_factor.is_some() && quantity == ChainQuantity::TotalCost {
        return Err(usage("--discount-factor applies to final-black only"));
    }
    let value = brute_force_under_strategy(state, &a.strategy, quantity, a.discount_factor.as_ref()).map_err(lib)?;
    let mut env = OutputEnvelope::new("oracle", &["white", "black", "strategy", "quantity", "value", "decimal"])
        .param("strategy", a.strategy.label());
    if let Some(d) = &a.discount_factor {
        env = env.param("discount_factor", d);
    }
    let [frac, dec] = rational_cells(&value);
    env.push(vec![
        state.white.to_string(),
        state.black.to_string(),
        a.strategy.label(),
        a.quantity.label(),
        frac,
        dec,
    ]);
    Ok(env)
}
