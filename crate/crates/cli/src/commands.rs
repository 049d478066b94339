use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use covering::asymptotics::{
    atypicality_bound, asymptotic_constants, boundary_scan, converse_check, direct_check, direct_slack_coefficient,
    epsilon_schedule, exponent_report, subset_information, ExponentKind, RateTuple,
};
use covering::bounds::{
    default_epsilon_grid, event_probability, sweep_epsilon, tightest_constants, typical_set, EpsilonSweep,
};
use covering::dist::MAX_TABLE_LEN;
use covering::sim::{
    assumption_audit, estimate_cover_probability, exact_oracle, generate_instance, parse_snapshot, search_typical_tuple,
    write_snapshot, AliasedCodewords, IndependentStreams, SimOptions, Strategy, StreamLayout,
};
use covering::{CodebookSizes, Error, EventSet, JointPmf, VarSet};

use crate::config::{Config, ConfigError, ConstantsKind, EventSpec, LayoutKind, StrategyKind};
use crate::output::{Cell, Report, Table};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Guard(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Guard(_) => 3,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Guard(m) => write!(f, "guard exceeded: {m}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

/// Attributes a library error to a config field; guard overflows keep
/// their own exit code.
fn at(field: &'static str) -> impl Fn(Error) -> RunError {
    move |e| match e {
        Error::GuardExceeded { .. } => RunError::Guard(format!("{e} (field `{field}`)")),
        other => RunError::Config(ConfigError::new(field, other.to_string())),
    }
}

/// Options that only some subcommands read.
#[derive(Debug, Clone, Default)]
pub struct Extra {
    pub snapshot_out: Option<PathBuf>,
    pub snapshot_trial: u64,
    pub replay: Option<PathBuf>,
}

pub struct Ctx<'a> {
    pub cfg: &'a Config,
    pub p: JointPmf,
    /// Output scale for entropies and rates: 1 in nats, 1/ln 2 in bits.
    pub scale: f64,
}

impl<'a> Ctx<'a> {
    pub fn new(cfg: &'a Config) -> Result<Self, RunError> {
        let p = JointPmf::new(
            cfg.probs.clone(),
            cfg.alphabet_sizes.clone(),
            cfg.tolerance.expect("resolved"),
        )
        .map_err(at("probs"))?;
        let scale = if cfg.bits == Some(true) { 1.0 / std::f64::consts::LN_2 } else { 1.0 };
        Ok(Ctx { cfg, p, scale })
    }

    fn sizes_at(&self, n: usize) -> Result<CodebookSizes, RunError> {
        match (&self.cfg.m, self.cfg.rates_nats()) {
            (Some(m), _) => Ok(CodebookSizes::from_counts(m)),
            (None, Some(r)) => CodebookSizes::from_rates(&r, n).map_err(at("R")),
            (None, None) => Err(ConfigError::new("M", "one of `M` and `R` is required").into()),
        }
    }

    fn counts_at(&self, n: usize) -> Result<Vec<u64>, RunError> {
        let sizes = self.sizes_at(n)?;
        sizes.exact().map(<[u64]>::to_vec).ok_or_else(|| {
            ConfigError::new("R", format!("codebooks at n = {n} are too large to enumerate")).into()
        })
    }

    /// The block distribution `p^n` and the configured event over it.
    fn event_at(&self, n: usize) -> Result<(JointPmf, EventSet), RunError> {
        match self.cfg.event.clone().unwrap_or(EventSpec::Typical) {
            EventSpec::Typical => typical_set(&self.p, n, self.cfg.delta()?).map_err(at("n")),
            EventSpec::Equal { vars } => {
                let block = self.p.power(n).map_err(at("n"))?;
                let f = EventSet::from_predicate(&block, |t| vars.iter().all(|&v| t[v] == t[vars[0]]));
                Ok((block, f))
            }
            EventSpec::Explicit { members } => {
                let block = self.p.power(n).map_err(at("n"))?;
                let f = EventSet::from_members(&block, &members).map_err(at("event"))?;
                Ok((block, f))
            }
        }
    }
}

fn set_label(s: VarSet) -> String {
    s.to_string()
}

fn varset(vars: &[usize]) -> VarSet {
    vars.iter().copied().collect()
}

pub fn entropy(ctx: &Ctx) -> Result<Report, RunError> {
    #[derive(Serialize)]
    struct Row {
        set: VarSet,
        given: VarSet,
        entropy: f64,
    }
    let queries: Vec<(VarSet, VarSet)> = match &ctx.cfg.entropy_queries {
        Some(qs) => qs.iter().map(|q| (varset(&q.set), varset(&q.given))).collect(),
        None => ctx
            .p
            .all_vars()
            .nonempty_subsets()
            .map(|s| (s, VarSet::EMPTY))
            .collect(),
    };
    let mut table = Table::new("entropy", &["set", "given", "entropy"]);
    let mut rows = Vec::new();
    for (s, t) in queries {
        let h = ctx.p.cond_entropy(s, t).map_err(at("entropy_queries"))? * ctx.scale;
        table.push(vec![set_label(s).into(), set_label(t).into(), h.into()]);
        rows.push(Row { set: s, given: t, entropy: h });
    }
    Ok(Report::new(vec![table], json!({ "unit": unit(ctx), "entropies": rows })))
}

fn unit(ctx: &Ctx) -> &'static str {
    if ctx.scale == 1.0 {
        "nats"
    } else {
        "bits"
    }
}

fn epsilon_grid(cfg: &Config) -> Vec<f64> {
    match (&cfg.epsilon, &cfg.epsilon_grid) {
        (Some(e), _) => vec![*e],
        (None, Some(g)) => g.clone(),
        (None, None) => default_epsilon_grid(),
    }
}

pub fn bounds(ctx: &Ctx) -> Result<Report, RunError> {
    #[derive(Serialize)]
    struct PerN {
        n: usize,
        constants: covering::SubsetConstants,
        p_f_complement_source: &'static str,
        sweep: EpsilonSweep,
    }
    let grid = epsilon_grid(ctx.cfg);
    let mut rows = Table::new(
        "bounds",
        &[
            "n",
            "epsilon",
            "p_f_complement",
            "lower_raw",
            "lower",
            "upper_chebyshev_raw",
            "upper_chebyshev",
            "upper_cauchy_schwarz_raw",
            "upper_cauchy_schwarz",
        ],
    );
    let mut best = Table::new(
        "best",
        &[
            "n",
            "best_chebyshev_epsilon",
            "best_chebyshev",
            "best_cauchy_schwarz_epsilon",
            "best_cauchy_schwarz",
        ],
    );
    let mut out = Vec::new();
    for n in ctx.cfg.lengths()? {
        let sizes = ctx.sizes_at(n)?;
        let (constants, p_fc, source) = match ctx.cfg.constants.unwrap_or(ConstantsKind::Tightest) {
            ConstantsKind::Tightest => {
                let (block, f) = ctx.event_at(n)?;
                let c = tightest_constants(&block, &f).map_err(at("event"))?;
                (c, 1.0 - event_probability(&block, &f).map_err(at("event"))?, "exact")
            }
            ConstantsKind::Asymptotic => {
                if !matches!(ctx.cfg.event, None | Some(EventSpec::Typical)) {
                    return Err(ConfigError::new("constants", "`asymptotic` constants hold for the typical set only").into());
                }
                let delta = ctx.cfg.delta()?;
                let c = asymptotic_constants(&ctx.p, n, delta).map_err(at("delta"))?;
                let len = (ctx.p.len() as f64).powi(n as i32);
                if len <= (MAX_TABLE_LEN as f64).min(ctx.cfg.guard.expect("resolved")) {
                    let (block, f) = typical_set(&ctx.p, n, delta).map_err(at("n"))?;
                    (c, 1.0 - event_probability(&block, &f).map_err(at("event"))?, "exact")
                } else {
                    let b = atypicality_bound(&ctx.p, delta, n).map_err(at("delta"))?;
                    (c, b.min(1.0), "chernoff")
                }
            }
        };
        let sweep = sweep_epsilon(&sizes, &constants, p_fc, &grid).map_err(|e| match e {
            Error::EmptyCodebook => RunError::Config(ConfigError::new("M", e.to_string())),
            other => at("epsilon_grid")(other),
        })?;
        for r in &sweep.reports {
            rows.push(vec![
                n.into(),
                r.epsilon.into(),
                r.p_f_complement.into(),
                r.lower_raw.into(),
                r.lower.into(),
                r.upper_chebyshev_raw.into(),
                r.upper_chebyshev.into(),
                r.upper_cauchy_schwarz_raw.into(),
                r.upper_cauchy_schwarz.into(),
            ]);
        }
        best.push(vec![
            n.into(),
            sweep.best_chebyshev_epsilon.into(),
            sweep.best_chebyshev.into(),
            sweep.best_cauchy_schwarz_epsilon.into(),
            sweep.best_cauchy_schwarz.into(),
        ]);
        out.push(PerN {
            n,
            constants,
            p_f_complement_source: source,
            sweep,
        });
    }
    Ok(Report::new(vec![rows, best], out))
}

pub fn rates(ctx: &Ctx) -> Result<Report, RunError> {
    let delta = ctx.cfg.delta()?;
    let k = ctx.p.k();
    let s = ctx.scale;
    let mut thresholds = Table::new("thresholds", &["subset", "information", "direct_threshold", "converse_threshold"]);
    let mut thr_json = Vec::new();
    for sub in VarSet::codebooks(k).nonempty_subsets() {
        let info = subset_information(&ctx.p, sub).map_err(at("probs"))?;
        let direct = info + direct_slack_coefficient(k, sub) * delta;
        let converse = info - 2.0 * (sub.len() as f64 + 1.0) * delta;
        thresholds.push(vec![set_label(sub).into(), (info * s).into(), (direct * s).into(), (converse * s).into()]);
        thr_json.push(json!({
            "subset": sub,
            "information": info * s,
            "direct_threshold": direct * s,
            "converse_threshold": converse * s,
        }));
    }
    let mut tables = vec![thresholds];
    let mut result = json!({ "unit": unit(ctx), "delta": delta, "thresholds": thr_json });

    if let Some(r) = ctx.cfg.rates_nats() {
        let rates = RateTuple::new(r).map_err(at("R"))?;
        let d = direct_check(&ctx.p, &rates, delta).map_err(at("R"))?;
        let c = converse_check(&ctx.p, &rates, delta).map_err(at("R"))?;
        let mut t = Table::new(
            "check",
            &["subset", "rate_sum", "direct_rhs", "direct_slack", "converse_rhs", "converse_slack"],
        );
        for (a, b) in d.per_subset.iter().zip(&c.per_subset) {
            t.push(vec![
                set_label(a.subset).into(),
                (a.lhs * s).into(),
                (a.rhs * s).into(),
                (a.slack * s).into(),
                (b.rhs * s).into(),
                (b.slack * s).into(),
            ]);
        }
        let mut v = Table::new("verdict", &["direct", "direct_binding", "converse", "converse_binding"]);
        v.push(vec![
            d.satisfied.into(),
            set_label(d.binding_subset).into(),
            c.satisfied.into(),
            set_label(c.binding_subset).into(),
        ]);
        tables.push(t);
        tables.push(v);
        let scale_verdict = |mut v: serde_json::Value| {
            for row in v["per_subset"].as_array_mut().expect("rows") {
                for key in ["lhs", "rhs", "slack"] {
                    row[key] = json!(row[key].as_f64().expect("number") * s);
                }
            }
            v
        };
        result["direct"] = scale_verdict(crate::output::to_value(&d));
        result["converse"] = scale_verdict(crate::output::to_value(&c));
    }

    if let Some(grid) = &ctx.cfg.rate_grid {
        let to_nats = 1.0 / s;
        let grid_nats: Vec<Vec<f64>> = grid.iter().map(|axis| axis.iter().map(|x| x * to_nats).collect()).collect();
        let rows = boundary_scan(&ctx.p, delta, &grid_nats).map_err(at("rate_grid"))?;
        let mut header: Vec<String> = (1..=k).map(|j| format!("R{j}")).collect();
        header.push("direct".into());
        header.push("converse".into());
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut t = Table::new("scan", &header_refs);
        let mut scan_json = Vec::new();
        for row in &rows {
            let shown: Vec<f64> = row.rates.iter().map(|x| x * s).collect();
            let mut cells: Vec<Cell> = shown.iter().map(|&x| x.into()).collect();
            cells.push(row.direct.into());
            cells.push(row.converse.into());
            t.push(cells);
            scan_json.push(json!({ "rates": shown, "direct": row.direct, "converse": row.converse }));
        }
        tables.push(t);
        result["scan"] = json!(scan_json);
    }
    Ok(Report { tables, result })
}

fn kind_label(k: ExponentKind) -> &'static str {
    match k {
        ExponentKind::Finite => "finite",
        ExponentKind::Unbounded => "unbounded",
        ExponentKind::Capped => "capped",
    }
}

pub fn exponent(ctx: &Ctx) -> Result<Report, RunError> {
    let grid = match (&ctx.cfg.epsilon, &ctx.cfg.epsilon_grid) {
        (Some(e), _) => vec![*e],
        (None, Some(g)) => g.clone(),
        (None, None) => return Err(ConfigError::new("epsilon", "required for this subcommand").into()),
    };
    let scope = match &ctx.cfg.scope {
        Some(v) => varset(v),
        None => ctx.p.all_vars(),
    };
    let lengths = match (&ctx.cfg.n, &ctx.cfg.n_sweep) {
        (None, None) => Vec::new(),
        _ => ctx.cfg.lengths()?,
    };
    let s = ctx.scale;
    let mut per = Table::new(
        "exponents",
        &["epsilon", "subset", "entropy", "upper", "upper_t", "upper_kind", "lower", "lower_t", "lower_kind"],
    );
    let mut summary = Table::new("summary", &["epsilon", "overall", "prefactor"]);
    let mut bound = Table::new("bound", &["epsilon", "n", "bound"]);
    let mut reports = Vec::new();
    for &eps in &grid {
        let r = exponent_report(&ctx.p, scope, eps).map_err(at("epsilon"))?;
        for e in &r.per_subset {
            per.push(vec![
                eps.into(),
                set_label(e.subset).into(),
                (e.entropy * s).into(),
                (e.upper.value * s).into(),
                e.upper.t_star.into(),
                kind_label(e.upper.kind).into(),
                (e.lower.value * s).into(),
                e.lower.t_star.into(),
                kind_label(e.lower.kind).into(),
            ]);
        }
        summary.push(vec![eps.into(), (r.overall * s).into(), r.prefactor.into()]);
        let bounds: Vec<serde_json::Value> = lengths
            .iter()
            .map(|&n| {
                let b = r.bound(n);
                bound.push(vec![eps.into(), n.into(), b.into()]);
                json!({ "n": n, "bound": b })
            })
            .collect();
        reports.push(json!({
            "epsilon": eps,
            "scope": r.scope,
            "overall": r.overall * s,
            "prefactor": r.prefactor,
            "per_subset": r.per_subset.iter().map(|e| json!({
                "subset": e.subset,
                "entropy": e.entropy * s,
                "upper": { "value": e.upper.value * s, "t_star": e.upper.t_star, "kind": kind_label(e.upper.kind) },
                "lower": { "value": e.lower.value * s, "t_star": e.lower.t_star, "kind": kind_label(e.lower.kind) },
            })).collect::<Vec<_>>(),
            "bounds": bounds,
        }));
    }
    let mut tables = vec![per, summary];
    if !lengths.is_empty() {
        tables.push(bound);
    }
    let mut result = json!({ "unit": unit(ctx), "reports": reports });
    if let (Some(delta), false) = (ctx.cfg.delta, lengths.is_empty()) {
        let mut t = Table::new("schedule", &["n", "epsilon_n", "exponent", "flagged"]);
        let mut rows = Vec::new();
        for &n in &lengths {
            let sched = epsilon_schedule(&ctx.p, delta, n).map_err(at("delta"))?;
            t.push(vec![n.into(), sched.epsilon.into(), (sched.exponent * s).into(), sched.flagged.into()]);
            rows.push(json!({ "n": n, "epsilon_n": sched.epsilon, "exponent": sched.exponent * s, "flagged": sched.flagged }));
        }
        tables.push(t);
        result["schedule"] = json!(rows);
    }
    Ok(Report { tables, result })
}

fn strategy(kind: Option<StrategyKind>) -> Strategy {
    match kind.unwrap_or(StrategyKind::Auto) {
        StrategyKind::Auto => Strategy::Auto,
        StrategyKind::Explicit => Strategy::Explicit,
        StrategyKind::Collapsed => Strategy::Collapsed,
    }
}

fn strategy_label(s: Strategy) -> &'static str {
    match s {
        Strategy::Auto => "auto",
        Strategy::Explicit => "explicit",
        Strategy::Collapsed => "collapsed",
    }
}

pub const DEFAULT_TRIALS: u64 = 100;

pub fn simulate(ctx: &Ctx, extra: &Extra) -> Result<Report, RunError> {
    if let Some(path) = &extra.replay {
        return replay(ctx, path);
    }
    let delta = ctx.cfg.delta()?;
    let trials = ctx.cfg.trials.unwrap_or(DEFAULT_TRIALS);
    let seed = ctx.cfg.seed.expect("resolved");
    let opts = SimOptions {
        strategy: strategy(ctx.cfg.strategy),
        guard: ctx.cfg.guard.expect("resolved"),
        confidence: ctx.cfg.confidence.expect("resolved"),
        ..SimOptions::default()
    };
    let law = ctx.p.generation_law();
    let mut table = Table::new(
        "simulate",
        &["n", "ln_codebook_sizes", "trials", "successes", "p_hat", "ci_low", "ci_high", "confidence", "seed", "strategy"],
    );
    let mut results = Vec::new();
    for n in ctx.cfg.lengths()? {
        let sizes = ctx.sizes_at(n)?;
        let est = estimate_cover_probability(&law, &ctx.p, n, &sizes, delta, trials, seed, &opts).map_err(|e| match e {
            Error::Unsupported(_) => RunError::Config(ConfigError::new("strategy", e.to_string())),
            other => at("guard")(other),
        })?;
        let ln_sizes: Vec<String> = (1..=ctx.p.k()).map(|j| crate::output::format_g(sizes.ln_size(j), 12)).collect();
        table.push(vec![
            n.into(),
            ln_sizes.join(" ").into(),
            est.trials.into(),
            est.successes.into(),
            est.p_hat.into(),
            est.ci_low.into(),
            est.ci_high.into(),
            est.confidence.into(),
            est.seed.into(),
            strategy_label(est.strategy).into(),
        ]);
        let ln: Vec<f64> = (1..=ctx.p.k()).map(|j| sizes.ln_size(j)).collect();
        results.push(json!({ "n": n, "ln_codebook_sizes": ln, "estimate": est }));
    }
    if let Some(path) = &extra.snapshot_out {
        let n = ctx.cfg.lengths()?[0];
        let counts = ctx.counts_at(n)?;
        let symbols = counts.iter().sum::<u64>() as f64 * n as f64;
        let guard = ctx.cfg.guard.expect("resolved");
        if symbols > guard {
            return Err(RunError::Guard(format!("snapshot needs {symbols} symbols, guard is {guard}")));
        }
        let inst = generate_instance(
            &law,
            n,
            &counts,
            covering::sim::TrialSeed { master: seed, trial: extra.snapshot_trial },
        )
        .map_err(at("n"))?;
        std::fs::write(path, write_snapshot(&inst))
            .map_err(|e| ConfigError::new("--snapshot-out", e.to_string()))?;
    }
    Ok(Report::new(vec![table], json!({ "delta": delta, "runs": results })))
}

fn replay(ctx: &Ctx, path: &PathBuf) -> Result<Report, RunError> {
    let delta = ctx.cfg.delta()?;
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("--replay", e.to_string()))?;
    let inst = parse_snapshot(&text).map_err(at("--replay"))?;
    if inst.k() != ctx.p.k() {
        return Err(ConfigError::new("--replay", format!("snapshot has k = {}, config has k = {}", inst.k(), ctx.p.k())).into());
    }
    let sizes = ctx.p.sizes();
    let in_range = |var: usize, seq: &[usize]| seq.iter().all(|&s| s < sizes[var]);
    let ok = in_range(0, &inst.common)
        && in_range(ctx.p.side(), &inst.side)
        && inst.codebooks.iter().enumerate().all(|(j, b)| b.iter().all(|cw| in_range(j + 1, cw)));
    if !ok {
        return Err(ConfigError::new("--replay", "snapshot symbols exceed the configured alphabets").into());
    }
    let regenerated = generate_instance(&ctx.p.generation_law(), inst.n, &inst.counts(), inst.seed).map_err(at("--replay"))?;
    let witness = search_typical_tuple(&inst, &ctx.p, delta);
    let mut t = Table::new("replay", &["n", "seed", "trial", "covered", "witness", "regenerated_matches"]);
    let w = witness
        .as_ref()
        .map(|w| w.iter().map(u64::to_string).collect::<Vec<_>>().join(" "))
        .unwrap_or_default();
    t.push(vec![
        inst.n.into(),
        inst.seed.master.into(),
        inst.seed.trial.into(),
        witness.is_some().into(),
        w.into(),
        (regenerated == inst).into(),
    ]);
    Ok(Report::new(
        vec![t],
        json!({
            "n": inst.n,
            "seed": inst.seed.master,
            "trial": inst.seed.trial,
            "covered": witness.is_some(),
            "witness": witness,
            "regenerated_matches": regenerated == inst,
        }),
    ))
}

pub fn oracle(ctx: &Ctx) -> Result<Report, RunError> {
    let guard = ctx.cfg.guard.expect("resolved");
    let mut table = Table::new("oracle", &["n", "codebook_sizes", "p_miss", "p_cover"]);
    let mut rows = Vec::new();
    for n in ctx.cfg.lengths()? {
        let counts = ctx.counts_at(n)?;
        let (block, f) = ctx.event_at(n)?;
        let miss = exact_oracle(&block, &counts, &f, guard).map_err(at("guard"))?;
        let label = counts.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
        table.push(vec![n.into(), label.into(), miss.into(), (1.0 - miss).into()]);
        rows.push(json!({ "n": n, "codebook_sizes": counts, "p_miss": miss, "p_cover": 1.0 - miss }));
    }
    Ok(Report::new(vec![table], rows))
}

pub fn audit(ctx: &Ctx) -> Result<Report, RunError> {
    let counts = match &ctx.cfg.m {
        Some(m) => m.clone(),
        None => vec![2; ctx.p.k()],
    };
    let kind = ctx.cfg.layout.unwrap_or(LayoutKind::Independent);
    let layout: &dyn StreamLayout = match kind {
        LayoutKind::Independent => &IndependentStreams,
        LayoutKind::Aliased => &AliasedCodewords,
    };
    let r = assumption_audit(&ctx.p, &counts, layout, ctx.cfg.guard.expect("resolved")).map_err(at("M"))?;
    let label = match kind {
        LayoutKind::Independent => "independent",
        LayoutKind::Aliased => "aliased",
    };
    let mut t = Table::new("audit", &["layout", "passed", "max_abs_error", "pairs_checked", "patterns"]);
    t.push(vec![
        label.into(),
        r.passed.into(),
        r.max_abs_error.into(),
        r.pairs_checked.into(),
        r.patterns.into(),
    ]);
    Ok(Report::new(vec![t], json!({ "layout": label, "report": r })))
}
