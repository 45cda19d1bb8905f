use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use nearcol::attack::{parse_leak, run_attack, AttackKind};
use nearcol::bounds::{capacity_report, curves_csv, emit_curves, CurveConfig, EpsilonSpec};
use nearcol::cover::exact::DEFAULT_NODE_BUDGET;
use nearcol::cover::sann::DEFAULT_MAX_ITERS;
use nearcol::cover::{find_cover, CoverSolver, CoverStatus, ExactConfig, SannConfig, ScheduleKind};
use nearcol::experiments::{
    bench_csv, run_cooling_bench, run_partition_bench, run_sann_bench, sann_csv, BenchConfig, SannBenchConfig,
};
use nearcol::partition::{
    add_user, partition_database, partition_greedy, remove_user, AddOutcome, MasterTemplateSet, RemovalLedger,
};
use nearcol::{random_database, Template, TemplateDatabase};

#[derive(Parser)]
#[command(name = "nearcol", version, about = "Near-collision analysis of binary template databases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random database of distinct templates.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        clients: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Partition a database into a master-template set.
    Partition {
        db: PathBuf,
        #[arg(long)]
        epsilon: EpsilonSpec,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the master-template set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy baseline partition.
    Greedy {
        db: PathBuf,
        #[arg(long)]
        epsilon: EpsilonSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search one template within epsilon of every member.
    Cover {
        db: PathBuf,
        #[arg(long)]
        epsilon: EpsilonSpec,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Partitioning vs greedy on random databases, as CSV.
    Bench {
        #[command(flatten)]
        sweep: Sweep,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Annealing miss rate on planted instances, as CSV.
    SannBench {
        #[command(flatten)]
        sweep: Sweep,
        #[arg(long, value_enum, default_value_t = Schedule::Additive)]
        schedule: Schedule,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: u64,
    },
    /// Annealing miss rate for every cooling schedule, as CSV.
    CoolingBench {
        #[command(flatten)]
        sweep: Sweep,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: u64,
    },
    /// Ball volume and capacity bounds.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        epsilon: EpsilonSpec,
        /// Database size to assess.
        #[arg(long)]
        k: Option<u64>,
    },
    /// Capacity curves as CSV.
    Curves {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Masterkey or master-feature set from a leak file.
    Attack {
        leak: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        /// Verifier threshold.
        #[arg(long)]
        tau: usize,
        /// Report one item per record instead of partitioning.
        #[arg(long)]
        no_partition: bool,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Enroll a template and attach it to the master-template set.
    AddUser {
        db: PathBuf,
        mts: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        template: Template,
        #[arg(long)]
        epsilon: EpsilonSpec,
    },
    /// Revoke a user and list the users whose acceptance balls overlap.
    RemoveUser {
        db: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        epsilon: EpsilonSpec,
        /// Users removed before this one.
        #[arg(long, default_value_t = 0)]
        removed: u64,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = Solver::Exact)]
    solver: Solver,
    /// Cooling schedule for the annealer.
    #[arg(long, value_enum, default_value_t = Schedule::Additive)]
    schedule: Schedule,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: u64,
}

impl SolverArgs {
    fn build(&self) -> CoverSolver {
        match self.solver {
            Solver::Exact => CoverSolver::Exact(ExactConfig {
                node_budget: self.node_budget,
            }),
            Solver::Sann => CoverSolver::Sann(SannConfig {
                schedule: self.schedule.into(),
                max_iters: self.max_iters,
                seed: 0,
            }),
        }
    }
}

#[derive(Args)]
struct Sweep {
    /// Dimensions, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long)]
    epsilon: EpsilonSpec,
    /// Database sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    clients: Vec<usize>,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Sweep {
    fn grid(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.n
            .iter()
            .flat_map(move |&n| self.clients.iter().map(move |&k| (n, self.epsilon.resolve(n), k)))
    }

    fn comment(&self, extra: &[(&str, String)]) -> String {
        let mut lines = vec![
            format!("n={}", join(&self.n)),
            format!("epsilon={}", self.epsilon),
            format!("clients={}", join(&self.clients)),
            format!("reps={}", self.reps),
            format!("seed={}", self.seed),
        ];
        lines.extend(extra.iter().map(|(k, v)| format!("{k}={v}")));
        lines.join("\n")
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Exact,
    Sann,
}

#[derive(Clone, Copy, ValueEnum)]
enum Schedule {
    Additive,
    LinearMultiplicative,
    Exponential,
    Logarithmic,
}

impl From<Schedule> for ScheduleKind {
    fn from(s: Schedule) -> Self {
        match s {
            Schedule::Additive => ScheduleKind::Additive,
            Schedule::LinearMultiplicative => ScheduleKind::LinearMultiplicative,
            Schedule::Exponential => ScheduleKind::Exponential,
            Schedule::Logarithmic => ScheduleKind::Logarithmic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    MasterFeature,
    Masterkey,
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn read_db(path: &Path) -> CliResult<TemplateDatabase> {
    Ok(TemplateDatabase::parse(&read(path)?)?)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value"));
}

fn check_epsilon(eps: usize, n: usize) -> CliResult<usize> {
    if eps > n {
        return Err(format!("epsilon {eps} exceeds dimension {n}").into());
    }
    Ok(eps)
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Gen { n, clients, seed, out } => {
            let db = random_database(n, clients, seed)?;
            emit(out.as_deref(), &db.to_text())
        }
        Command::Partition {
            db,
            epsilon,
            solver,
            seed,
            out,
        } => {
            let db = read_db(&db)?;
            let eps = check_epsilon(epsilon.resolve(db.dim()), db.dim())?;
            let start = Instant::now();
            let mts = partition_database(&db, eps, &solver.build(), seed)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            finish_partition(&db, &mts, out.as_deref(), "algorithm", ms)
        }
        Command::Greedy { db, epsilon, seed, out } => {
            let db = read_db(&db)?;
            let eps = check_epsilon(epsilon.resolve(db.dim()), db.dim())?;
            let start = Instant::now();
            let mts = partition_greedy(&db, eps, seed);
            let ms = start.elapsed().as_secs_f64() * 1e3;
            finish_partition(&db, &mts, out.as_deref(), "greedy", ms)
        }
        Command::Cover {
            db,
            epsilon,
            solver,
            seed,
        } => {
            let db = read_db(&db)?;
            let eps = check_epsilon(epsilon.resolve(db.dim()), db.dim())?;
            let res = find_cover(db.members(), eps, &solver.build(), seed)?;
            let (status, center) = match &res.status {
                CoverStatus::Found(c) => ("found", Some(c.to_string())),
                CoverStatus::NotFound => ("not-found", None),
                CoverStatus::Unknown => ("unknown", None),
            };
            print_json(&json!({
                "status": status,
                "center": center,
                "solver": res.solver,
                "epsilon": eps,
                "members": db.len(),
                "iterations": res.stats.iterations,
                "elapsed_ms": res.stats.elapsed.as_secs_f64() * 1e3,
            }));
            Ok(())
        }
        Command::Bench { sweep, solver } => {
            let built = solver.build();
            let mut rows = Vec::new();
            for (n, eps, clients) in sweep.grid() {
                check_epsilon(eps, n)?;
                rows.push(run_partition_bench(&BenchConfig {
                    n,
                    epsilon: eps,
                    clients,
                    reps: sweep.reps as usize,
                    solver: built,
                    seed: sweep.seed,
                })?);
            }
            let comment = sweep.comment(&[("solver", format!("{:?}", built.kind()).to_lowercase())]);
            emit(sweep.out.as_deref(), &bench_csv(&comment, &rows))
        }
        Command::SannBench {
            sweep,
            schedule,
            max_iters,
        } => {
            let schedule: ScheduleKind = schedule.into();
            let mut rows = Vec::new();
            for (n, eps, clients) in sweep.grid() {
                check_epsilon(eps, n)?;
                rows.push(run_sann_bench(&SannBenchConfig {
                    n,
                    epsilon: eps,
                    clients,
                    reps: sweep.reps as usize,
                    schedule,
                    max_iters,
                    seed: sweep.seed,
                }));
            }
            let comment = sweep.comment(&[("schedule", schedule.to_string()), ("max_iters", max_iters.to_string())]);
            emit(sweep.out.as_deref(), &sann_csv(&comment, &rows))
        }
        Command::CoolingBench { sweep, max_iters } => {
            let mut rows = Vec::new();
            for (n, eps, clients) in sweep.grid() {
                check_epsilon(eps, n)?;
                rows.extend(run_cooling_bench(&SannBenchConfig {
                    n,
                    epsilon: eps,
                    clients,
                    reps: sweep.reps as usize,
                    schedule: ScheduleKind::Additive,
                    max_iters,
                    seed: sweep.seed,
                }));
            }
            let comment = sweep.comment(&[("max_iters", max_iters.to_string())]);
            emit(sweep.out.as_deref(), &sann_csv(&comment, &rows))
        }
        Command::Bounds { n, epsilon, k } => {
            let report = capacity_report(n, epsilon.resolve(n), k)?;
            print_json(&serde_json::to_value(report)?);
            Ok(())
        }
        Command::Curves { out } => {
            let config = CurveConfig::default();
            let points = emit_curves(&config)?;
            emit(out.as_deref(), &curves_csv(&config, &points))
        }
        Command::Attack {
            leak,
            kind,
            tau,
            no_partition,
            solver,
            seed,
        } => {
            let leak = parse_leak(&read(&leak)?)?;
            let kind = match kind {
                Kind::MasterFeature => AttackKind::MasterFeatureSet,
                Kind::Masterkey => AttackKind::MasterkeySet,
            };
            let res = run_attack(kind, &leak, tau, !no_partition, &solver.build(), seed)?;
            print_json(&serde_json::to_value(res)?);
            Ok(())
        }
        Command::AddUser {
            db: db_path,
            mts: mts_path,
            id,
            template,
            epsilon,
        } => {
            let mut db = read_db(&db_path)?;
            let eps = check_epsilon(epsilon.resolve(db.dim()), db.dim())?;
            let mut mts = MasterTemplateSet::parse(&read(&mts_path)?, &db, eps)?;
            let outcome = add_user(&mut mts, &mut db, id.clone(), template)?;
            fs::write(&db_path, db.to_text())?;
            fs::write(&mts_path, mts.to_text(&db))?;
            let (action, entry, distance) = match outcome {
                AddOutcome::Attached { entry, distance } => ("attached", entry, Some(distance)),
                AddOutcome::NewEntry { entry } => ("new-entry", entry, None),
            };
            print_json(&json!({
                "id": id,
                "action": action,
                "entry": entry,
                "distance": distance,
                "entries": mts.len(),
            }));
            Ok(())
        }
        Command::RemoveUser {
            db: db_path,
            id,
            epsilon,
            removed,
        } => {
            let mut db = read_db(&db_path)?;
            let eps = check_epsilon(epsilon.resolve(db.dim()), db.dim())?;
            let index = db
                .position_of_id(&id)
                .ok_or_else(|| format!("user `{id}` is not enrolled"))?;
            let t = db.members()[index].clone();
            let mut ledger = RemovalLedger { removed };
            let report = remove_user(&mut db, &t, eps, &mut ledger)?;
            fs::write(&db_path, db.to_text())?;
            let affected: Vec<Value> = report
                .affected
                .iter()
                .map(|a| json!({"id": a.id, "distance": a.distance, "overlap": a.overlap.to_string()}))
                .collect();
            print_json(&json!({
                "removed_id": report.removed_id,
                "removed": report.removed.to_string(),
                "affected": affected,
                "removed_volume": report.removed_volume.to_string(),
                "removed_total": report.removed_total,
                "capacity_breach": report.capacity_breach,
            }));
            Ok(())
        }
    }
}

fn finish_partition(
    db: &TemplateDatabase,
    mts: &MasterTemplateSet,
    out: Option<&Path>,
    method: &str,
    ms: f64,
) -> CliResult<()> {
    mts.verify(db)?;
    if let Some(p) = out {
        fs::write(p, mts.to_text(db)).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    print_json(&json!({
        "method": method,
        "members": db.len(),
        "epsilon": mts.epsilon,
        "entries": mts.len(),
        "time_ms": ms,
        "out": out.map(|p| p.display().to_string()),
    }));
    Ok(())
}
