//! Report structures and rendering. Every certificate is recomputed from the
//! output through the library checkers, never copied from solver state.

use envy_subsidy::{
    beta_bounds, is_ef1, is_envy_free_with_subsidy, weight_matrix, ImprovementTrace,
    Instance, Rat, SubsidizedAllocation, SubsidyViolation,
};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::format::{RatStr, SCHEMA_VERSION};

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct BoundLine {
    pub name: String,
    pub value: RatStr,
    pub bound: RatStr,
    pub pass: bool,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct BoundsBlock {
    pub lines: Vec<BoundLine>,
    /// Rank certificates: the r-th largest payment is bounded by entry r-1.
    pub beta_rank_bounds: Vec<RatStr>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct Certificates {
    pub envy_free_with_subsidy: bool,
    pub pre_subsidy_ef1: bool,
    pub beta: Vec<RatStr>,
    pub rank_bounds_respected: bool,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct TraceBlock {
    pub triggered: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longest_path: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_star: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<RatStr>>,
    pub chosen: String,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct ResultReport {
    pub schema_version: String,
    pub mode: String,
    pub n: usize,
    pub m: usize,
    pub instance_class: String,
    pub ef1_source: String,
    pub allocation: Vec<Vec<usize>>,
    pub subsidy: Vec<RatStr>,
    pub total_subsidy: RatStr,
    pub max_subsidy: RatStr,
    pub permutation: Vec<usize>,
    pub bounds: BoundsBlock,
    pub certificates: Certificates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceBlock>,
}

impl ResultReport {
    pub fn all_pass(&self) -> bool {
        self.bounds.lines.iter().all(|line| line.pass)
            && self.certificates.envy_free_with_subsidy
            && self.certificates.rank_bounds_respected
    }
}

fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn build_report(
    inst: &Instance<Rat>,
    mode: &str,
    ef1_source: &str,
    solution: &SubsidizedAllocation<Rat>,
    trace: Option<&ImprovementTrace<Rat>>,
) -> CliResult<ResultReport> {
    let n = inst.n() as i64;
    let total = solution.total_subsidy();
    let max = solution.max_subsidy();

    let mut lines = vec![
        BoundLine {
            name: "max_per_agent".into(),
            value: RatStr(max.clone()),
            bound: RatStr(ratio(n - 1, 1)),
            pass: max <= ratio(n - 1, 1),
        },
        BoundLine {
            name: "total".into(),
            value: RatStr(total.clone()),
            bound: RatStr(ratio(n * (n - 1), 2)),
            pass: total <= ratio(n * (n - 1), 2),
        },
    ];
    if mode == "improved" {
        lines.push(BoundLine {
            name: "improved_max_per_agent".into(),
            value: RatStr(max.clone()),
            bound: RatStr(ratio(2 * n - 3, 2)),
            pass: max <= ratio(2 * n - 3, 2),
        });
        lines.push(BoundLine {
            name: "improved_total".into(),
            value: RatStr(total.clone()),
            bound: RatStr(ratio(n * n - n - 1, 2)),
            pass: total <= ratio(n * n - n - 1, 2),
        });
    }

    // Rank certificates of the final arrangement: its payments are exactly
    // the minimum subsidies of its own weight matrix.
    let w_final = weight_matrix(inst, &solution.allocation)?;
    let bb = beta_bounds(&w_final);
    let sorted = solution.subsidy.sorted_desc();
    let rank_ok = sorted
        .iter()
        .zip(bb.rank_bounds.iter())
        .all(|(value, bound)| value <= bound);

    let certificates = Certificates {
        envy_free_with_subsidy: is_envy_free_with_subsidy(
            inst,
            &solution.allocation,
            &solution.subsidy,
        )?,
        pre_subsidy_ef1: is_ef1(inst, &solution.allocation)?,
        beta: bb.beta.into_iter().map(RatStr).collect(),
        rank_bounds_respected: rank_ok,
    };

    let trace = trace.map(|t| TraceBlock {
        triggered: t.triggered,
        longest_path: t.longest_path.clone(),
        e_star: t.e_star,
        s: t.s
            .as_ref()
            .map(|s| s.iter().cloned().map(RatStr).collect()),
        chosen: t.chosen.as_str().into(),
    });

    Ok(ResultReport {
        schema_version: SCHEMA_VERSION.into(),
        mode: mode.into(),
        n: inst.n(),
        m: inst.m(),
        instance_class: inst.class().as_str().into(),
        ef1_source: ef1_source.into(),
        allocation: solution.allocation.bundles().to_vec(),
        subsidy: solution.subsidy.iter().cloned().map(RatStr).collect(),
        total_subsidy: RatStr(total),
        max_subsidy: RatStr(max),
        permutation: solution.sigma.as_slice().to_vec(),
        bounds: BoundsBlock {
            lines,
            beta_rank_bounds: bb.rank_bounds.into_iter().map(RatStr).collect(),
        },
        certificates,
        trace,
    })
}

pub fn render_result(report: &ResultReport) -> String {
    let mut out = String::new();
    let line = |out: &mut String, s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(
        &mut out,
        format!(
            "instance: n={} m={} class={}",
            report.n, report.m, report.instance_class
        ),
    );
    line(
        &mut out,
        format!("mode: {} (ef1: {})", report.mode, report.ef1_source),
    );
    line(&mut out, "allocation:".into());
    for (agent, bundle) in report.allocation.iter().enumerate() {
        let items: Vec<String> = bundle.iter().map(|i| i.to_string()).collect();
        line(&mut out, format!("  agent {agent}: {{{}}}", items.join(", ")));
    }
    line(
        &mut out,
        format!(
            "subsidy: ({})  total={}  max={}",
            join_rats(&report.subsidy),
            report.total_subsidy,
            report.max_subsidy
        ),
    );
    let perm: Vec<String> = report.permutation.iter().map(|v| v.to_string()).collect();
    line(&mut out, format!("permutation: ({})", perm.join(", ")));
    line(&mut out, "bounds:".into());
    for b in &report.bounds.lines {
        let label = b.name.replace('_', " ");
        line(
            &mut out,
            format!(
                "  {label} {} <= {} {}",
                b.value,
                b.bound,
                if b.pass { "PASS" } else { "FAIL" }
            ),
        );
    }
    line(
        &mut out,
        format!(
            "  rank bounds: ({})",
            join_rats(&report.bounds.beta_rank_bounds)
        ),
    );
    line(&mut out, "certificates:".into());
    line(
        &mut out,
        format!(
            "  envy-free with subsidy: {}",
            yes_no(report.certificates.envy_free_with_subsidy)
        ),
    );
    line(
        &mut out,
        format!(
            "  pre-subsidy allocation EF1: {}",
            yes_no(report.certificates.pre_subsidy_ef1)
        ),
    );
    line(
        &mut out,
        format!("  beta: ({})", join_rats(&report.certificates.beta)),
    );
    line(
        &mut out,
        format!(
            "  rank bounds respected: {}",
            yes_no(report.certificates.rank_bounds_respected)
        ),
    );
    if let Some(trace) = &report.trace {
        line(&mut out, "trace:".into());
        line(&mut out, format!("  triggered: {}", yes_no(trace.triggered)));
        if let Some(path) = &trace.longest_path {
            let path: Vec<String> = path.iter().map(|v| v.to_string()).collect();
            line(&mut out, format!("  longest path: {}", path.join(" -> ")));
        }
        if let Some(e) = trace.e_star {
            line(&mut out, format!("  moved item: {e}"));
        }
        if let Some(s) = &trace.s {
            line(&mut out, format!("  s: ({})", join_rats(s)));
        }
        line(&mut out, format!("  chosen: {}", trace.chosen));
    }
    out
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct ViolationLine {
    pub envious: usize,
    pub envied: usize,
    pub amount: RatStr,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct CheckReport {
    pub schema_version: String,
    pub n: usize,
    pub m: usize,
    pub envy_free: bool,
    pub total_subsidy: RatStr,
    pub max_subsidy: RatStr,
    pub violations: Vec<ViolationLine>,
}

pub fn build_check_report(
    inst: &Instance<Rat>,
    total: Rat,
    max: Rat,
    violations: Vec<SubsidyViolation<Rat>>,
) -> CheckReport {
    CheckReport {
        schema_version: SCHEMA_VERSION.into(),
        n: inst.n(),
        m: inst.m(),
        envy_free: violations.is_empty(),
        total_subsidy: RatStr(total),
        max_subsidy: RatStr(max),
        violations: violations
            .into_iter()
            .map(|v| ViolationLine {
                envious: v.envious,
                envied: v.envied,
                amount: RatStr(v.amount),
            })
            .collect(),
    }
}

pub fn render_check(report: &CheckReport) -> String {
    let mut out = format!(
        "instance: n={} m={}\nsubsidy: total={} max={}\n",
        report.n, report.m, report.total_subsidy, report.max_subsidy
    );
    if report.envy_free {
        out.push_str("envy-free with subsidy: yes\n");
    } else {
        out.push_str("envy-free with subsidy: NO\n");
        for v in &report.violations {
            out.push_str(&format!(
                "  agent {} envies agent {} by {}\n",
                v.envious, v.envied, v.amount
            ));
        }
    }
    out
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct SubsidyCheck {
    pub solver_subsidy: Vec<RatStr>,
    pub oracle_subsidy: Vec<RatStr>,
    pub subsidies_equal: bool,
    pub solver_total_weight: RatStr,
    pub oracle_total_weight: RatStr,
    pub totals_equal: bool,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct GlobalSection {
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_total: Option<RatStr>,
    pub basic_total: RatStr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basic_gap: Option<RatStr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub improved_total: Option<RatStr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub improved_gap: Option<RatStr>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct OracleReport {
    pub schema_version: String,
    pub n: usize,
    pub m: usize,
    pub subsidy_check: SubsidyCheck,
    pub global_minimum: GlobalSection,
}

pub fn render_oracle(report: &OracleReport) -> String {
    let sc = &report.subsidy_check;
    let mut out = format!(
        "instance: n={} m={}\nsubsidy check:\n  solver: ({})\n  oracle: ({})\n  equal: {}\n  \
         matching totals equal: {}\n",
        report.n,
        report.m,
        join_rats(&sc.solver_subsidy),
        join_rats(&sc.oracle_subsidy),
        yes_no(sc.subsidies_equal),
        yes_no(sc.totals_equal),
    );
    let g = &report.global_minimum;
    out.push_str(&format!("global minimum: {}\n", g.status));
    if let Some(total) = &g.oracle_total {
        out.push_str(&format!("  oracle total: {total}\n"));
    }
    out.push_str(&format!("  solver basic total: {}\n", g.basic_total));
    if let Some(gap) = &g.basic_gap {
        out.push_str(&format!("  basic gap: {gap}\n"));
    }
    if let Some(total) = &g.improved_total {
        out.push_str(&format!("  solver improved total: {total}\n"));
    }
    if let Some(gap) = &g.improved_gap {
        out.push_str(&format!("  improved gap: {gap}\n"));
    }
    out
}

fn join_rats(values: &[RatStr]) -> String {
    let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    parts.join(", ")
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}
