//! Subcommand implementations. Each returns the process exit code.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use envy_subsidy::{
    brute_max_weight_perm, brute_min_subsidy, brute_min_total_subsidy, envy_violations, find_ef1,
    improved_solve_from, is_ef1, max_weight_permutation, min_subsidy, solve_given_allocation,
    weight_matrix, Ef1Method, Instance, InstanceClass, OracleBudget, Rat,
};

use crate::error::{CliError, CliResult};
use crate::format::{
    read_json, to_json_string, write_atomic, AllocationFile, InstanceFile, RatStr,
};
use crate::gen;
use crate::report::{
    build_check_report, build_report, render_check, render_oracle, render_result, GlobalSection,
    OracleReport, ResultReport, SubsidyCheck,
};

#[derive(Parser, Debug)]
#[command(
    name = "envy-subsidy",
    version,
    about = "Envy-free division of indivisible items with bounded money payments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    /// Tight chain instance: payments 0..n-1 under the direct pipeline.
    Example1,
    /// One item valued 1 by every agent.
    SingleItem,
    /// Additive values in {0, 1/10, ..., 1}.
    RandomAdditiveGoods,
    /// Additive values in {-1, ..., 1}; doubly monotone.
    RandomMixed,
    /// Monotone non-additive value tables (capped sums).
    RandomTable,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Basic,
    Improved,
    Auto,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    EnvyCycles,
    DoubleRoundRobin,
    Exhaustive,
}

impl MethodArg {
    fn to_method(self) -> Ef1Method {
        match self {
            MethodArg::Auto => Ef1Method::Auto,
            MethodArg::EnvyCycles => Ef1Method::EnvyCycles,
            MethodArg::DoubleRoundRobin => Ef1Method::DoubleRoundRobin,
            MethodArg::Exhaustive => Ef1Method::Exhaustive,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an instance file from a named family.
    Gen {
        #[arg(value_enum)]
        family: FamilyArg,
        /// Number of agents.
        n: usize,
        /// Number of items (random families only).
        m: Option<usize>,
        /// Random seed (random families only).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the instance here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the family's canonical allocation (example1 and
        /// single-item only).
        #[arg(long)]
        allocation_out: Option<PathBuf>,
    },
    /// Solve an instance: construct an EF1 allocation, rearrange it, and pay
    /// minimum subsidies.
    Solve {
        /// Instance file, or a directory of instance files with --batch.
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        /// EF1 construction when no allocation is supplied.
        #[arg(long = "ef1-method", value_enum, default_value_t = MethodArg::Auto)]
        ef1_method: MethodArg,
        /// Solve this allocation instead of constructing one.
        #[arg(long)]
        allocation: Option<PathBuf>,
        /// Write the JSON report here (human-readable text goes to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Treat INSTANCE as a directory and solve every *.json file in it.
        #[arg(long)]
        batch: bool,
        /// Report directory for --batch.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Verify an allocation-and-subsidy file: exit 0 iff envy-free.
    Check {
        instance: PathBuf,
        /// Allocation file (solver reports are accepted too).
        allocation: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the solver and the brute-force oracle side by side.
    Oracle {
        instance: PathBuf,
        /// Compare on this allocation instead of a constructed one.
        #[arg(long)]
        allocation: Option<PathBuf>,
        /// Allocation-enumeration cap for the global-minimum section.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Gen {
            family,
            n,
            m,
            seed,
            out,
            allocation_out,
        } => run_gen(family, n, m, seed, out.as_deref(), allocation_out.as_deref()),
        Command::Solve {
            instance,
            mode,
            ef1_method,
            allocation,
            out,
            batch,
            out_dir,
        } => {
            if batch {
                run_solve_batch(&instance, mode, ef1_method, out_dir.as_deref())
            } else {
                let (report, code) =
                    solve_one(&instance, mode, ef1_method, allocation.as_deref())?;
                print!("{}", render_result(&report));
                if let Some(path) = out.as_deref() {
                    write_atomic(path, &to_json_string(&report)?)?;
                }
                Ok(code)
            }
        }
        Command::Check {
            instance,
            allocation,
            out,
        } => run_check(&instance, &allocation, out.as_deref()),
        Command::Oracle {
            instance,
            allocation,
            budget,
            out,
        } => run_oracle(&instance, allocation.as_deref(), budget, out.as_deref()),
    }
}

fn run_gen(
    family: FamilyArg,
    n: usize,
    m: Option<usize>,
    seed: u64,
    out: Option<&Path>,
    allocation_out: Option<&Path>,
) -> CliResult<u8> {
    let need_m = || {
        m.ok_or_else(|| CliError::Input("this family needs an item count: gen <family> N M".into()))
    };
    let (inst, canonical) = match family {
        FamilyArg::Example1 => {
            let (inst, alloc) = gen::tight_chain(n)?;
            (inst, Some(alloc))
        }
        FamilyArg::SingleItem => {
            let (inst, alloc) = gen::single_item(n)?;
            (inst, Some(alloc))
        }
        FamilyArg::RandomAdditiveGoods => (gen::random_additive_goods(n, need_m()?, seed)?, None),
        FamilyArg::RandomMixed => (gen::random_mixed(n, need_m()?, seed)?, None),
        FamilyArg::RandomTable => (gen::random_table(n, need_m()?, seed)?, None),
    };
    let file = InstanceFile::from_instance(&inst)?;
    let text = to_json_string(&file)?;
    match out {
        Some(path) => write_atomic(path, &text)?,
        None => print!("{text}"),
    }
    if let Some(path) = allocation_out {
        let canonical = canonical.ok_or_else(|| {
            CliError::Input("this family has no canonical allocation".into())
        })?;
        let text = to_json_string(&AllocationFile::new(&canonical, None))?;
        write_atomic(path, &text)?;
    }
    Ok(0)
}

fn load_instance(path: &Path) -> CliResult<Instance<Rat>> {
    let file: InstanceFile = read_json(path)?;
    file.to_instance()
}

fn solve_one(
    instance_path: &Path,
    mode: ModeArg,
    method: MethodArg,
    allocation_path: Option<&Path>,
) -> CliResult<(ResultReport, u8)> {
    let inst = load_instance(instance_path)?;
    let (alloc, ef1_source) = match allocation_path {
        Some(path) => {
            let file: AllocationFile = read_json(path)?;
            (file.to_allocation(&inst)?, "given-allocation".to_string())
        }
        None => {
            let alloc = find_ef1(&inst, method.to_method()).map_err(|e| {
                CliError::Input(format!(
                    "{e}; pick another --ef1-method or supply --allocation"
                ))
            })?;
            let source = match method {
                MethodArg::Auto => "auto",
                MethodArg::EnvyCycles => "envy-cycles",
                MethodArg::DoubleRoundRobin => "double-round-robin",
                MethodArg::Exhaustive => "exhaustive",
            };
            (alloc, source.to_string())
        }
    };
    let improved_eligible = inst.class() == InstanceClass::Monotone
        && inst.n() >= 3
        && is_ef1(&inst, &alloc).map_err(CliError::from)?;
    let resolved = match mode {
        ModeArg::Basic => "basic",
        ModeArg::Improved => "improved",
        ModeArg::Auto => {
            if improved_eligible {
                "improved"
            } else {
                "basic"
            }
        }
    };
    let report = if resolved == "improved" {
        let (solution, trace) = improved_solve_from(&inst, alloc).map_err(|e| {
            CliError::Input(format!(
                "{e}; improved mode needs a monotone instance with n >= 3 and an EF1 allocation"
            ))
        })?;
        build_report(&inst, "improved", &ef1_source, &solution, Some(&trace))?
    } else {
        let solution = solve_given_allocation(&inst, &alloc)?;
        build_report(&inst, "basic", &ef1_source, &solution, None)?
    };
    let code = if report.all_pass() { 0 } else { 1 };
    Ok((report, code))
}

fn run_solve_batch(
    dir: &Path,
    mode: ModeArg,
    method: MethodArg,
    out_dir: Option<&Path>,
) -> CliResult<u8> {
    let out_dir =
        out_dir.ok_or_else(|| CliError::Input("--batch requires --out-dir".into()))?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|path| path.extension().is_some_and(|ext| ext == "json"))
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(CliError::Input(format!(
            "no .json instances in {}",
            dir.display()
        )));
    }
    let mut worst = 0u8;
    for path in entries {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("instance");
        match solve_one(&path, mode, method, None) {
            Ok((report, code)) => {
                let out = out_dir.join(format!("{stem}.report.json"));
                write_atomic(&out, &to_json_string(&report)?)?;
                println!(
                    "{}: {} (total={}, max={})",
                    path.display(),
                    if code == 0 { "ok" } else { "BOUND FAILURE" },
                    report.total_subsidy,
                    report.max_subsidy
                );
                worst = worst.max(code);
            }
            Err(e) => {
                println!("{}: error: {e}", path.display());
                worst = worst.max(e.exit_code());
            }
        }
    }
    Ok(worst)
}

fn run_check(instance: &Path, allocation: &Path, out: Option<&Path>) -> CliResult<u8> {
    let inst = load_instance(instance)?;
    let file: AllocationFile = read_json(allocation)?;
    let alloc = file.to_allocation(&inst)?;
    let p = file.to_subsidy(inst.n())?;
    let violations = envy_violations(&inst, &alloc, &p).map_err(CliError::from)?;
    let report = build_check_report(&inst, p.total(), p.max(), violations);
    print!("{}", render_check(&report));
    if let Some(path) = out {
        write_atomic(path, &to_json_string(&report)?)?;
    }
    Ok(if report.envy_free { 0 } else { 1 })
}

fn run_oracle(
    instance: &Path,
    allocation: Option<&Path>,
    budget: Option<u64>,
    out: Option<&Path>,
) -> CliResult<u8> {
    let inst = load_instance(instance)?;
    let alloc = match allocation {
        Some(path) => {
            let file: AllocationFile = read_json(path)?;
            file.to_allocation(&inst)?
        }
        None => find_ef1(&inst, Ef1Method::Auto).map_err(CliError::from)?,
    };
    let mut oracle_budget = OracleBudget::default();
    if let Some(cap) = budget {
        oracle_budget.max_allocations = cap;
    }

    let w = weight_matrix(&inst, &alloc).map_err(CliError::from)?;
    let sigma = max_weight_permutation(&w);
    let p_solver = min_subsidy(&w, &sigma).map_err(CliError::from)?;
    let (brute_sigma, brute_total) = brute_max_weight_perm(&w, &oracle_budget)?;
    let p_oracle = brute_min_subsidy(&w, &brute_sigma, &oracle_budget)?;
    let subsidy_check = SubsidyCheck {
        solver_subsidy: p_solver.iter().cloned().map(RatStr).collect(),
        oracle_subsidy: p_oracle.iter().cloned().map(RatStr).collect(),
        subsidies_equal: p_solver == p_oracle,
        solver_total_weight: RatStr(w.total_under(&sigma)),
        oracle_total_weight: RatStr(brute_total.clone()),
        totals_equal: w.total_under(&sigma) == brute_total,
    };

    let basic_total = p_solver.total();
    let improved_total = if inst.class() == InstanceClass::Monotone
        && inst.n() >= 3
        && is_ef1(&inst, &alloc).map_err(CliError::from)?
    {
        Some(improved_solve_from(&inst, alloc.clone())?.0.total_subsidy())
    } else {
        None
    };
    let global_minimum = match brute_min_total_subsidy(&inst, &oracle_budget) {
        Ok((_, p_global)) => {
            let oracle_total = p_global.total();
            GlobalSection {
                status: "ok".into(),
                oracle_total: Some(RatStr(oracle_total.clone())),
                basic_total: RatStr(basic_total.clone()),
                basic_gap: Some(RatStr(basic_total.clone() - oracle_total.clone())),
                improved_total: improved_total.clone().map(RatStr),
                improved_gap: improved_total
                    .clone()
                    .map(|t| RatStr(t - oracle_total.clone())),
            }
        }
        Err(envy_subsidy::Error::BudgetExceeded(reason)) => GlobalSection {
            status: format!("skipped: {reason}"),
            oracle_total: None,
            basic_total: RatStr(basic_total.clone()),
            basic_gap: None,
            improved_total: improved_total.map(RatStr),
            improved_gap: None,
        },
        Err(e) => return Err(e.into()),
    };

    let report = OracleReport {
        schema_version: crate::format::SCHEMA_VERSION.into(),
        n: inst.n(),
        m: inst.m(),
        subsidy_check,
        global_minimum,
    };
    print!("{}", render_oracle(&report));
    if let Some(path) = out {
        write_atomic(path, &to_json_string(&report)?)?;
    }
    Ok(
        if report.subsidy_check.subsidies_equal && report.subsidy_check.totals_equal {
            0
        } else {
            1
        },
    )
}
