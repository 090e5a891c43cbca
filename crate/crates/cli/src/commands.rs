//! The computations behind each subcommand. Every command returns a [`Record`] and the
//! table written in CSV mode.

use crate::record::{cell, Record, Table};
use crate::selftest::{self, Outcome, Suite, HP_GRID};
use anyhow::{bail, Context, Result};
use kpz_core::bounds::{
    b_monotone, b_monotone_violations, check_t_bound, contour_distance_check, envelope_sums, exponent_bound_check,
    four_power_violations,
};
use kpz_core::conditional::{
    conditional_tail_detailed, expansion_prediction, expansion_report, two_point_expansion_check, two_point_ratio,
    ExpansionReport,
};
use kpz_core::series::{engine_evaluations, one_point_tail, two_point_tail, EvalResult, SeriesConfig, DEFAULT_BUDGET};
use kpz_core::tracy_widom::{scaled_argument, scaled_cdf, TWEvaluator, TwMethod};
use kpz_core::{ConditionalParams, KernelParams};
use serde::Serialize;
use serde_json::{json, Value};

/// Environment variable capping kernel evaluations per series evaluation.
pub const BUDGET_ENV: &str = "KPZ_ORACLE_BUDGET";

/// Series overrides shared by the series commands. `None` keeps the library default.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SeriesOverrides {
    pub n1_max: Option<usize>,
    pub n2_max: Option<usize>,
    pub z_radius: Option<f64>,
    pub nodes_l1: Option<usize>,
    pub nodes_l2: Option<usize>,
    pub z_nodes: Option<usize>,
    pub epsilon: Option<f64>,
}

impl SeriesOverrides {
    pub fn apply(&self, base: SeriesConfig) -> Result<SeriesConfig> {
        let cfg = SeriesConfig {
            n1_max: self.n1_max.unwrap_or(base.n1_max),
            n2_max: self.n2_max.unwrap_or(base.n2_max),
            z_radius: self.z_radius.unwrap_or(base.z_radius),
            level1_nodes: self.nodes_l1.unwrap_or(base.level1_nodes),
            level2_nodes: self.nodes_l2.unwrap_or(base.level2_nodes),
            z_nodes: self.z_nodes.unwrap_or(base.z_nodes),
            epsilon: self.epsilon.unwrap_or(base.epsilon),
            budget: budget_from_env()?,
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The evaluation budget from [`BUDGET_ENV`], or the library default.
pub fn budget_from_env() -> Result<f64> {
    match std::env::var(BUDGET_ENV) {
        Ok(s) => {
            let b: f64 = s.trim().parse().with_context(|| format!("{BUDGET_ENV}='{s}' is not a number"))?;
            if !(b > 0.0) {
                bail!("{BUDGET_ENV} must be positive, got {b}");
            }
            Ok(b)
        }
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_BUDGET),
        Err(e) => Err(e.into()),
    }
}

/// Two-time parameters: level 1 at (x', tau', h'), level 2 at (x, tau, h).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PointArgs {
    pub x: f64,
    pub xp: f64,
    pub tau: f64,
    pub taup: f64,
    pub h: f64,
    pub hp: f64,
}

impl PointArgs {
    pub fn conditional(&self) -> Result<ConditionalParams> {
        Ok(ConditionalParams::new(self.x, self.xp, self.tau, self.taup, self.h, self.hp)?)
    }
}

fn eval_json(r: &EvalResult, ledger: bool) -> Value {
    let mut v = json!({
        "value": r.value,
        "imag_residual": r.imag_residual,
        "quad_error_est": r.quad_error_est,
        "truncation_bound": r.truncation_bound,
        "mantissa": r.mantissa,
        "log_scale": r.log_scale,
    });
    if ledger {
        v["term_ledger"] = json!(r.term_ledger);
    }
    v
}

fn ledger_table(r: &EvalResult) -> Table {
    let mut t = Table::new(&["n1", "n2", "re", "im"]);
    for e in &r.term_ledger {
        t.push([e.n1.to_string(), e.n2.to_string(), cell(e.re), cell(e.im)]);
    }
    t
}

/// `tw`: F_GUE, F' and F'' at s, or the one-point law at (h, x, tau).
pub fn tw(s: Option<f64>, hxt: Option<(f64, f64, f64)>, method: TwMethod) -> Result<(Record, Table)> {
    let ev = TWEvaluator::new(method)?;
    let (arg, scale, echo) = match (s, hxt) {
        (Some(s), None) => (s, 1.0, json!({ "s": s, "method": method.name() })),
        (None, Some((h, x, tau))) => {
            let arg = scaled_argument(h, x, tau)?;
            (arg, tau.powf(-1.0 / 3.0), json!({ "h": h, "x": x, "tau": tau, "method": method.name() }))
        }
        _ => bail!("give either --s or all of --h, --x, --tau"),
    };
    let (f, fp, fpp) = ev.all(arg)?;
    let results = json!({
        "s": arg,
        "cdf": f,
        "pdf": fp * scale,
        "dd": fpp * scale * scale,
        "method": method.name(),
    });
    let mut table = Table::new(&["s", "cdf", "pdf", "dd", "method"]);
    table.push([cell(arg), cell(f), cell(fp * scale), cell(fpp * scale * scale), method.name().to_string()]);
    Ok((Record::new("tw", echo, results, json!({})), table))
}

/// `one-point`: P(H(x, tau) >= h) from the series, optionally against the Fredholm oracle.
pub fn one_point(x: f64, tau: f64, h: f64, o: &SeriesOverrides, against: Option<&str>) -> Result<(Record, Table)> {
    let cfg = o.apply(SeriesConfig::one_point())?;
    let r = one_point_tail(x, tau, h, &cfg)?;
    let mut results = eval_json(&r, true);
    if let Some(a) = against {
        if a != "fredholm" {
            bail!("unknown oracle '{a}' (fredholm)");
        }
        let oracle = 1.0 - scaled_cdf(&TWEvaluator::new(TwMethod::FredholmOracle)?, h, x, tau)?;
        results["oracle"] = json!({ "name": "fredholm", "value": oracle, "discrepancy": r.value - oracle });
    }
    let config = json!({ "x": x, "tau": tau, "h": h, "series": cfg, "against": against });
    Ok((Record::new("one-point", config, results, json!({})), ledger_table(&r)))
}

/// `two-point`: the joint tail P(H(x', tau') >= h', H(x + x', tau + tau') >= h + h').
pub fn two_point(p: &PointArgs, o: &SeriesOverrides) -> Result<(Record, Table)> {
    let cfg = o.apply(SeriesConfig::default())?;
    let cp = p.conditional()?;
    let kp: KernelParams = cp.kernel();
    let r = two_point_tail(&kp, &cfg)?;
    let ratio = two_point_ratio(&cp, &cfg)?;
    let results = json!({
        "joint": eval_json(&r, true),
        "ratio_to_marginal": ratio.ratio,
        "ratio_error": ratio.error,
    });
    let diagnostics = json!({ "kernel_evaluations": engine_evaluations(&kp, &cfg)?, "kernel": kp });
    let config = json!({ "params": p, "series": cfg });
    Ok((Record::new("two-point", config, results, diagnostics), ledger_table(&r)))
}

/// `conditional`: the law of H(x + x', tau + tau') - H(x', tau') given H(x', tau') = h'.
pub fn conditional(p: &PointArgs, o: &SeriesOverrides) -> Result<(Record, Table)> {
    let cfg = o.apply(SeriesConfig::default())?;
    let cp = p.conditional()?;
    let c = conditional_tail_detailed(&cp, &cfg)?;
    let prediction = expansion_prediction(&cp, &TWEvaluator::new(TwMethod::FredholmOracle)?)?;
    let results = json!({
        "tail": c.tail,
        "cdf": c.cdf(),
        "quad_error_est": c.quad_error_est,
        "truncation_bound": c.truncation_bound,
        "prediction": prediction,
    });
    let diagnostics = json!({
        "numerator": eval_json(&c.numerator, true),
        "denominator": eval_json(&c.denominator, true),
        "h_star": cp.h_star(),
    });
    let mut table = Table::new(&["tail", "cdf", "prediction", "quad_error_est", "truncation_bound"]);
    table.push([c.tail, c.cdf(), prediction, c.quad_error_est, c.truncation_bound].map(cell));
    let config = json!({ "params": p, "series": cfg });
    Ok((Record::new("conditional", config, results, diagnostics), table))
}

/// Fixed CSV columns of `expansion`.
pub const EXPANSION_COLUMNS: [&str; 6] = ["hp", "value", "error", "r0", "r1", "r2"];

fn expansion_table(r: &ExpansionReport) -> Table {
    let mut t = Table::new(&EXPANSION_COLUMNS);
    for i in 0..r.hp_samples.len() {
        t.push([r.hp_samples[i], r.conditional_values[i], r.value_errors[i], r.r0[i], r.r1[i], r.r2[i]].map(cell));
    }
    t
}

/// `expansion`: residuals of the large-h' expansion over `hp_list`.
pub fn expansion(p: &PointArgs, hp_list: &[f64], two_point: bool, o: &SeriesOverrides) -> Result<(Record, Table)> {
    let cfg = o.apply(SeriesConfig::default())?;
    let base = p.conditional()?;
    let tw = TWEvaluator::new(TwMethod::FredholmOracle)?;
    let hp = if hp_list.is_empty() { HP_GRID.to_vec() } else { hp_list.to_vec() };
    let r = if two_point {
        two_point_expansion_check(&base, &hp, &cfg, &tw)?
    } else {
        expansion_report(&base, &hp, &cfg, &tw)?
    };
    let config = json!({ "params": p, "hp": hp, "two_point": two_point, "series": cfg });
    let diagnostics = json!({ "slopes_within_0.3": r.slopes_within(0.3) });
    Ok((Record::new("expansion", config, json!(r), diagnostics), expansion_table(&r)))
}

/// `bounds`: the envelope, combinatorial and distance checks.
pub fn bounds(h: &[f64], epsilon: Option<f64>, seed: u64) -> Result<(Record, Table)> {
    let cfg = SeriesOverrides { epsilon, ..Default::default() }.apply(SeriesConfig::default())?;
    let grid: Vec<KernelParams> = if h.is_empty() { vec![4.0, 6.0, 9.0] } else { h.to_vec() }
        .into_iter()
        .map(|h1| Ok(KernelParams::new(0.0, 0.0, 1.0, 1.0, h1, 0.0)?))
        .collect::<Result<_>>()?;
    let records = check_t_bound(&grid, &cfg)?;
    let c = records.first().map(|r| r.calibrated_c).unwrap_or(f64::NAN);
    let (head, tail) = envelope_sums(&grid[0], c, cfg.epsilon, (cfg.n1_max, cfg.n2_max), 50, false)?;
    let exponent = exponent_bound_check(&KernelParams::new(0.0, 0.0, 1.0, 1.0, 4.0, 4.0)?, cfg.epsilon, 200, seed)?;
    let mut monotone = Vec::new();
    let mut four = Vec::new();
    for n1 in 2..=12 {
        for n2 in 2..=12 {
            if !b_monotone(n1, n2)? {
                monotone.push(json!({ "n1": n1, "n2": n2, "violations": b_monotone_violations(n1, n2) }));
            }
            if !four_power_violations(n1, n2).is_empty() {
                four.push([n1, n2]);
            }
        }
    }
    let distance: Vec<Value> = [(10.0, 1.0), (20.0, 1.0), (20.0, 5.0)]
        .iter()
        .map(|(hs, ht)| Ok(json!({ "h_star": hs, "h_tilde": ht, "min_ratio": contour_distance_check(*hs, *ht, 3000, seed)? })))
        .collect::<Result<_>>()?;
    let results = json!({
        "envelope_records": records,
        "summability": { "c": c, "head": head, "tail": tail },
        "exponent": exponent,
        "b_monotone_failures": monotone,
        "four_power_failures": four,
        "distance": distance,
    });
    let mut table = Table::new(&["h1", "n1", "n2", "sup_t", "envelope", "ratio", "pass"]);
    for r in &records {
        table.push([
            cell(r.params.h1),
            r.n1.to_string(),
            r.n2.to_string(),
            cell(r.term_magnitude),
            cell(r.envelope),
            cell(r.ratio),
            r.pass().to_string(),
        ]);
    }
    let config = json!({ "h1": grid.iter().map(|p| p.h1).collect::<Vec<_>>(), "seed": seed, "series": cfg });
    Ok((Record::new("bounds", config, results, json!({})), table))
}

/// `selftest`: the acceptance suite.
pub fn selftest(suite: Suite, seed: u64) -> Result<(Record, Table, Vec<Outcome>)> {
    let outcomes = selftest::run_suite(suite, seed)?;
    let passed = outcomes.iter().filter(|o| o.pass).count();
    let results = json!({ "criteria": outcomes });
    let diagnostics = json!({ "passed": passed, "failed": outcomes.len() - passed });
    let mut table = Table::new(&["id", "name", "pass"]);
    for o in &outcomes {
        table.push([o.id.to_string(), o.name.to_string(), o.pass.to_string()]);
    }
    let config = json!({ "suite": suite, "seed": seed });
    Ok((Record::new("selftest", config, results, diagnostics), table, outcomes))
}

