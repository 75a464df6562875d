use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use hecke3::cache::Cache;
use hecke3::cyclolinalg::{DenseMat, Rat};
use hecke3::heckeops::{
    anchor_alpha, candidate, eigenreport_with, gamma0_generators, known_reps, local_generators, report_operators,
    verify_decomposition, ActionConvention, HeckeElement, HeckeOptions,
};
use hecke3::matrix::{IMat3, RMat3};
use hecke3::projspace::{brute_force_count, enumerate, lift_point, normalize};
use hecke3::relspace::{build_relations, check_membership, solve_model, ModelBasis};
use hecke3::repaudit::{self, AuditCheck, PsiConvention};
use hecke3::symreduce::{pair_rational, pair_rational_with, random_symbol, reduce_with, ModularSymbol, ALL_STRATEGIES};
use hecke3::{Error, Level, Result, FORMAT_VERSION};

#[derive(Parser)]
#[command(name = "hecke3", version, about = "Exact Hecke eigenvalues on H3(Gamma0(N)) via modular symbols")]
struct Cli {
    /// Worker threads for Hecke images (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print reduction trees for the first coset image to stderr.
    #[arg(long, global = true)]
    trace_reduction: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the relation model and write the basis artifact.
    Basis {
        #[arg(long)]
        level: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verified right-coset decomposition of K·alpha·K, as JSON.
    Cosets {
        #[arg(long)]
        level: u64,
        /// Rows separated by ';', entries by ','; rationals allowed.
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
    },
    /// Matrix of T_alpha on a basis artifact.
    Hecke {
        #[arg(long)]
        level: u64,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Anchor eigenvector and the seven operator eigenvalues.
    Eigenreport {
        #[arg(long, default_value_t = 128)]
        level: u64,
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run property suites; exits nonzero on any failure.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Model,
    Reduce,
    Cosets,
    Rep,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn options(cli: &Cli) -> HeckeOptions {
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    HeckeOptions {
        workers,
        ..HeckeOptions::default()
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_basis(path: &Path, level: Level) -> Result<ModelBasis> {
    let basis = ModelBasis::read_artifact(BufReader::new(File::open(path)?))?;
    if basis.level != level {
        return Err(Error::InconsistentInputs(format!(
            "basis artifact is for level {}, not {level}",
            basis.level
        )));
    }
    Ok(basis)
}

fn header(format: &str, fields: serde_json::Value) -> Result<String> {
    let mut v = json!({ "format": format, "version": FORMAT_VERSION });
    if let (Some(obj), serde_json::Value::Object(extra)) = (v.as_object_mut(), fields) {
        obj.extend(extra);
    }
    Ok(serde_json::to_string(&v)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let opts = options(&cli);
    let cache = Cache::from_env();
    match &cli.cmd {
        Cmd::Basis { level, out } => {
            let level = Level::new(*level)?;
            let (table, basis, _) = cache.basis(level)?;
            let mut w = BufWriter::new(File::create(out)?);
            basis.write_artifact(&mut w, table.len())?;
            w.flush()?;
            println!("level {level} points {} dim {} sha256 {}", table.len(), basis.dim, basis.content_hash());
        }
        Cmd::Cosets { level, alpha } => {
            let level = Level::new(*level)?;
            let alpha = HeckeElement::parse(alpha)?;
            let (d, _) = cache.decomposition(&alpha, level)?;
            let v = json!({
                "format": "hecke3-cosets",
                "version": FORMAT_VERSION,
                "level": level.modulus(),
                "alpha": alpha.to_string(),
                "count": d.len(),
                "verified": d.verified,
                "scope": d.scope,
                "primes": d.primes,
                "reps": d.reps.iter().map(|r| r.canonical_string()).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Cmd::Hecke { level, alpha, basis, out } => {
            let level = Level::new(*level)?;
            let alpha = HeckeElement::parse(alpha)?;
            let basis = read_basis(basis, level)?;
            let table = enumerate(level);
            let (d, _) = cache.decomposition(&alpha, level)?;
            if cli.trace_reduction {
                trace_first_coset(&basis, &table, &d.reps, opts.convention)?;
            }
            let (m, _) = cache.hecke_matrix(&basis, &table, &alpha, &opts)?;
            let mut w = sink(out)?;
            writeln!(
                w,
                "{}",
                header(
                    "hecke3-hecke-matrix",
                    json!({
                        "level": level.modulus(),
                        "alpha": alpha.to_string(),
                        "cosets": d.len(),
                        "dim": basis.dim,
                        "action": format!("{:?}", opts.convention),
                        "basis_sha256": basis.content_hash(),
                    })
                )?
            )?;
            write_matrix(&mut w, &m)?;
            w.flush()?;
        }
        Cmd::Eigenreport { level, basis, out } => {
            let level = Level::new(*level)?;
            let basis = read_basis(basis, level)?;
            let table = enumerate(level);
            let report = eigenreport_with(&basis, &table, &opts, &mut |a| cache.decomposition(a, level).map(|x| x.0))?;
            let (anchor, lambda) = &report.anchor;
            let conjugated = lambda.im < Rat::from_integer(0.into());
            let chain = match repaudit::lambda_chain(&report, PsiConvention::Standard) {
                Ok(c) => json!({
                    "chi2": c.chi2.to_string(),
                    "D": c.d,
                    "lambda_u": c.lambda_u.to_string(),
                    "lambda_w": c.lambda_w.to_string(),
                }),
                Err(e) => json!({ "error": e.to_string() }),
            };
            let mut w = sink(out)?;
            writeln!(
                w,
                "{}",
                header(
                    "hecke3-eigenreport",
                    json!({
                        "level": level.modulus(),
                        "dim": basis.dim,
                        "basis_sha256": basis.content_hash(),
                        "convention": {
                            "i": "i = sqrt(-1), scalars printed as a/b+c/d*i",
                            "psi": "psi(1/2) = sqrt(-1)",
                            "action": format!("{:?}", opts.convention),
                            "anchor": anchor.to_string(),
                            "anchor_eigenvalue": lambda.to_string(),
                            "globally_conjugated": conjugated,
                        },
                        "lambda_chain": chain,
                    })
                )?
            )?;
            writeln!(w, "label,alpha,cosets,eigenvalue")?;
            for l in report.to_lines() {
                writeln!(w, "{},\"{}\",{},{}", l.label, l.alpha, l.cosets, l.eigenvalue)?;
            }
            w.flush()?;
        }
        Cmd::Verify { suite, seed } => {
            let mut checks = Vec::new();
            let all = *suite == Suite::All;
            if all || *suite == Suite::Model {
                checks.extend(suite_model(*seed)?);
            }
            if all || *suite == Suite::Reduce {
                checks.extend(suite_reduce(*seed)?);
            }
            if all || *suite == Suite::Cosets {
                checks.extend(suite_cosets(&cache)?);
            }
            if all || *suite == Suite::Rep {
                checks.extend(repaudit::run_rep_suite(*seed)?);
                checks.extend(repaudit::run_dyadic_suite(*seed)?);
            }
            let mut out = io::stdout().lock();
            for c in &checks {
                writeln!(out, "{}", serde_json::to_string(c)?)?;
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            #[derive(Serialize)]
            struct Summary {
                checks: usize,
                failed: usize,
                passed: bool,
            }
            let s = Summary {
                checks: checks.len(),
                failed,
                passed: failed == 0,
            };
            writeln!(out, "{}", serde_json::to_string(&s)?)?;
            return Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_matrix(w: &mut dyn Write, m: &DenseMat<Rat>) -> Result<()> {
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

fn trace_first_coset(
    basis: &ModelBasis,
    table: &hecke3::PointTable,
    reps: &[RMat3],
    conv: ActionConvention,
) -> Result<()> {
    let (Some(&pivot), Some(g)) = (basis.pivots.first(), reps.first()) else {
        return Ok(());
    };
    let u = lift_point(table.point(pivot), table.level()).to_rat();
    let m = match conv {
        ActionConvention::LiftRep => u.mul(g),
        ActionConvention::RepLift => g.mul(&u),
        ActionConvention::LiftRepTranspose => u.mul(&g.transpose()),
        ActionConvention::RepTransposeLift => g.transpose().mul(&u),
    };
    let s = ModularSymbol::from_rational(&m)?;
    let mut trace = Vec::new();
    reduce_with(&s, Default::default(), Some(&mut trace))?;
    eprintln!("reduction of {s} (point {pivot}, coset {g}):");
    for line in trace {
        eprintln!("{line}");
    }
    Ok(())
}

fn check(name: &str, count: usize, bad: Option<String>) -> AuditCheck {
    AuditCheck::new(name, count, bad)
}

fn suite_model(seed: u64) -> Result<Vec<AuditCheck>> {
    let mut out = Vec::new();
    let mut bad = None;
    for n in 1..=16u64 {
        let level = Level::new(n)?;
        let (e, b, f) = (enumerate(level).len(), brute_force_count(level), level.point_count() as usize);
        if e != b || e != f {
            bad = Some(format!("N={n}: enumerate {e}, brute force {b}, formula {f}"));
        }
    }
    out.push(check("point_counts_n_le_16", 16, bad));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = None;
    for _ in 0..1000 {
        let n = [8u64, 12, 128][rng.gen_range(0..3)];
        let level = Level::new(n)?;
        let t = [(); 3].map(|_| rng.gen_range(-500i64..500));
        let u = level.units()[rng.gen_range(0..level.units().len())] as i64;
        let a = normalize(t[0], t[1], t[2], level).ok();
        let b = normalize(u * t[0], u * t[1], u * t[2], level).ok();
        if a != b {
            bad = Some(format!("{t:?} * {u} at N={n}"));
        }
    }
    out.push(check("normalize_unit_invariance", 1000, bad));

    let mut bad = None;
    for n in [2u64, 3, 4, 5, 6, 8, 9] {
        let table = enumerate(Level::new(n)?);
        let sys = build_relations(&table)?;
        let basis = solve_model(&sys);
        let dense = sys.matrix.to_dense().kernel();
        if basis.vectors != dense || !basis.vectors.iter().all(|v| check_membership(v, &sys)) {
            bad = Some(format!("N={n}"));
        }
    }
    out.push(check("kernel_matches_dense_oracle", 7, bad));

    let table = enumerate(Level::new(16)?);
    let basis = solve_model(&build_relations(&table)?);
    let mut buf = Vec::new();
    basis.write_artifact(&mut buf, table.len())?;
    let back = ModelBasis::read_artifact(&buf[..])?;
    out.push(check("basis_artifact_round_trip", 1, (back != basis).then(|| "N=16".into())));
    Ok(out)
}

fn random_gamma0(rng: &mut ChaCha8Rng, level: Level) -> IMat3 {
    let gens = gamma0_generators(level);
    let mut g = IMat3::identity();
    for _ in 0..6 {
        let h = &gens[rng.gen_range(0..gens.len())];
        let h = if rng.gen_bool(0.5) { h.adjugate() } else { h.clone() };
        g = g.mul(&h);
    }
    g
}

fn suite_reduce(seed: u64) -> Result<Vec<AuditCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut bad = None;
    let mut count = 0;
    for n in [2u64, 4, 8] {
        let table = enumerate(Level::new(n)?);
        let basis = solve_model(&build_relations(&table)?);
        for _ in 0..100 {
            let s = random_symbol(&mut rng, 60);
            count += 1;
            for f in &basis.vectors {
                let vals = ALL_STRATEGIES
                    .iter()
                    .map(|st| pair_rational_with(f, &s, &table, *st))
                    .collect::<Result<Vec<_>>>()?;
                if vals.windows(2).any(|w| w[0] != w[1]) {
                    bad = Some(format!("{s} at N={n}"));
                }
            }
        }
    }
    out.push(check("strategies_agree", count, bad));

    let level = Level::new(8)?;
    let table = enumerate(level);
    let basis = solve_model(&build_relations(&table)?);
    let mut bad = None;
    for _ in 0..100 {
        let s = random_symbol(&mut rng, 60);
        let g = random_gamma0(&mut rng, level);
        let moved = s.mul_right(&g.0);
        let swapped = s.swap_rows(0, 1);
        for f in &basis.vectors {
            let v = pair_rational(f, &s, &table)?;
            if pair_rational(f, &moved, &table)? != v || pair_rational(f, &swapped, &table)? != -v.clone() {
                bad = Some(format!("{s} g={:?}", g.0));
            }
        }
    }
    out.push(check("gamma0_invariance_and_antisymmetry", 100, bad));
    Ok(out)
}

fn suite_cosets(cache: &Cache) -> Result<Vec<AuditCheck>> {
    let level = Level::new(128)?;
    let expected = [6usize, 4, 3, 48, 384, 192, 1];
    let mut out = Vec::new();
    let mut ops = report_operators();
    ops.push(("diag(3,1,1)", anchor_alpha()));
    for ((label, alpha), want) in ops.iter().zip(expected.iter().chain([13].iter())) {
        let (d, _) = cache.decomposition(alpha, level)?;
        let bad = (d.len() != *want || !d.verified).then(|| format!("{} cosets, verified {}", d.len(), d.verified));
        out.push(check(&format!("cosets_{label}"), d.len(), bad));
    }
    let listed = [
        (ops[0].1.clone(), known_reps::diag221()),
        (ops[1].1.clone(), known_reps::diag211()),
        (ops[2].1.clone(), known_reps::lower64()),
        (ops[3].1.clone(), known_reps::sl2_mod4()),
        (ops[5].1.clone(), known_reps::weyl128()),
    ];
    let mut bad = None;
    for (alpha, reps) in listed {
        let gens = local_generators(level, &alpha.relevant_primes(level));
        let full = candidate(&alpha, level, reps.clone());
        if !verify_decomposition(&full, &gens) {
            bad = Some(format!("listed reps for {alpha} rejected"));
        }
        let mut short = reps;
        short.pop();
        if verify_decomposition(&candidate(&alpha, level, short), &gens) {
            bad = Some(format!("list missing one rep accepted for {alpha}"));
        }
    }
    out.push(check("listed_decompositions_and_tampering", 10, bad));
    Ok(out)
}
