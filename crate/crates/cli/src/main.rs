//! `simflow`: command-line front end for analysis of dynamics on oriented
//! simplicial complexes.
//!
//! Exit codes: 0 success, 2 input error, 3 verification failure, 4 size
//! guard exceeded. All numeric output uses 12 significant digits and runs
//! are deterministic for fixed inputs and seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sha2::{Digest, Sha256};

use simplicial_flows::coloring::{
    enumerate_balanced, invariance_oracle, is_balanced, SimplexPartition,
};
use simplicial_flows::complex::{
    diamond, diamond_relabeled, random_complex, tetrahedron, OrientedComplex,
};
use simplicial_flows::dynamics::{
    assemble, realize, realize_with_basis, AssembledField, CouplingFunction, Direction, VectorMap,
};
use simplicial_flows::expr::ScalarFunction;
use simplicial_flows::files::{
    coloring_to_entries, format_sig12, read_coloring, read_matrix_csv, read_partition,
    save_matrix_csv, save_trajectory_csv, write_field_spec, ComplexFile, FieldSpecFile,
    RealizeTargetFile,
};
use simplicial_flows::hodge::{max_norm, to_f64, triple_decomposition, DecompositionReport};
use simplicial_flows::relabel::{
    commutation_witness, find_symmetries, relabel_map_t, symmetry_map_s, symmetry_map_s_tilde,
    verify_symmetry, Permutation,
};
use simplicial_flows::simulate::{
    inertia, inertia_of_product, integrate, map_states, scenario_guckenheimer_holmes,
    scenario_lorenz_selkov, GhParams, LsParams,
};
use simplicial_flows::{Error, Result};

#[derive(Parser)]
#[command(
    name = "simflow",
    version,
    about = "Dynamics on oriented simplicial complexes: chain-space decomposition, \
             flow realization, simulation, symmetry and coloring analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print ranks and conjugacy type of the chain-space decomposition
    Decompose(DecomposeArgs),
    /// Realize target dynamics on the decomposition summands as a flow
    Realize(RealizeArgs),
    /// Integrate a field specification and write trajectory CSV files
    Simulate(SimulateArgs),
    /// List complex symmetries and optionally verify field equivariance
    Symmetries(SymmetriesArgs),
    /// Enumerate balanced anti-colorings, or check a given one
    Colorings(ColoringsArgs),
    /// Run the built-in verification suite
    VerifyAll(VerifyAllArgs),
}

#[derive(Args)]
struct DecomposeArgs {
    /// Complex file path or built-in name (diamond, diamond-relabeled, tetrahedron)
    #[arg(long)]
    complex: String,
    /// Chain dimension d
    #[arg(long)]
    dim: usize,
    /// Directory for the JSON report
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include the three projection matrices in the report
    #[arg(long)]
    projections: bool,
}

#[derive(Args)]
struct RealizeArgs {
    /// Complex file path or built-in name
    #[arg(long)]
    complex: String,
    /// Chain dimension d
    #[arg(long)]
    dim: usize,
    /// Realization target file: down/up map specs, optional explicit basis
    #[arg(long)]
    spec: PathBuf,
    /// Output directory for the field spec, M and M^-1 CSV, and report
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for the sampled conjugacy-residual points
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum allowed conjugacy residual at the sampled points
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Field specification file
    #[arg(long)]
    spec: PathBuf,
    /// Complex file path or built-in name
    #[arg(long)]
    complex: String,
    /// Initial state, comma-separated values
    #[arg(long)]
    x0: String,
    /// Integration step size
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    /// Final time
    #[arg(long = "T", default_value_t = 10.0)]
    t_end: f64,
    /// Matrix CSV file: additionally write the transformed series
    #[arg(long)]
    transform: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SymmetriesArgs {
    /// Complex file path or built-in name
    #[arg(long)]
    complex: String,
    /// Field specification; verify equivariance under each symmetry
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Seed for the sampled commutation points
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative tolerance for the commutation residuals
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Directory for the JSON report
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Down,
    Up,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Direction {
        match d {
            DirectionArg::Down => Direction::Down,
            DirectionArg::Up => Direction::Up,
        }
    }
}

#[derive(Args)]
struct ColoringsArgs {
    /// Complex file path or built-in name
    #[arg(long)]
    complex: String,
    /// Dimension of the colored simplices
    #[arg(long)]
    dim: usize,
    /// Partition file for the coupling-level simplices (default: trivial)
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Coupling direction relative to the colored dimension
    #[arg(long, value_enum, default_value_t = DirectionArg::Down)]
    direction: DirectionArg,
    /// Check this one coloring file instead of enumerating
    #[arg(long)]
    check: Option<PathBuf>,
    /// Cross-check each balanced class against the random-coupling oracle
    #[arg(long)]
    oracle: bool,
    /// Override the enumeration size guard
    #[arg(long)]
    guard: Option<usize>,
    /// Seed for the oracle couplings
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the JSON report
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyAllArgs {
    /// Seed for all randomized checks
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Max-norm tolerance for the algebraic identities
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Directory for the JSON report
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decompose(args) => cmd_decompose(args),
        Command::Realize(args) => cmd_realize(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Symmetries(args) => cmd_symmetries(args),
        Command::Colorings(args) => cmd_colorings(args),
        Command::VerifyAll(args) => cmd_verify_all(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::VerificationFailure(_) | Error::RankDisagreement { .. } => 3,
        Error::GuardExceeded { .. } => 4,
        _ => 2,
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Loads a complex from a file path or a built-in name, returning the
/// complex, any relabeling the file requested, and a content hash.
fn load_complex(arg: &str) -> Result<(OrientedComplex, Option<Permutation>, String)> {
    match arg {
        "diamond" => Ok((diamond(), None, sha256_hex(b"builtin:diamond"))),
        "diamond-relabeled" => Ok((
            diamond_relabeled(),
            None,
            sha256_hex(b"builtin:diamond-relabeled"),
        )),
        "tetrahedron" => Ok((tetrahedron(), None, sha256_hex(b"builtin:tetrahedron"))),
        path => {
            let text = fs::read_to_string(path)?;
            let hash = sha256_hex(text.as_bytes());
            let (x, sigma) = ComplexFile::from_json(&text)?.build()?;
            Ok((x, sigma, hash))
        }
    }
}

fn meta_json(inputs: &[(&str, String)], seed: Option<u64>) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    map.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    let mut ins = serde_json::Map::new();
    for (name, hash) in inputs {
        ins.insert((*name).into(), json!(format!("sha256:{hash}")));
    }
    map.insert("inputs".into(), ins.into());
    if let Some(s) = seed {
        map.insert("seed".into(), json!(s));
    }
    map.into()
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn parse_vector(text: &str) -> Result<DVector<f64>> {
    let values = text
        .split(',')
        .map(|cell| {
            cell.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {cell:?} in initial state")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DVector::from_vec(values))
}

fn cmd_decompose(args: DecomposeArgs) -> Result<()> {
    let (x, _, hash) = load_complex(&args.complex)?;
    let dec = triple_decomposition(&x, args.dim)?;
    println!(
        "n_{} = {}, r_down = {}, r_up = {}, harmonic dimension = {}",
        args.dim, dec.n, dec.r_down, dec.r_up, dec.w
    );
    println!("conjugacy type: ({}, {}, {})", dec.r_down, dec.r_up, dec.n);
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        let report = DecompositionReport::from_decomposition(&dec, args.projections);
        let mut value = serde_json::to_value(&report)?;
        value["meta"] = meta_json(&[("complex", hash)], None);
        let path = dir.join("decomposition.json");
        write_json(&path, &value)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_realize(args: RealizeArgs) -> Result<()> {
    let (x, _, complex_hash) = load_complex(&args.complex)?;
    let target_text = fs::read_to_string(&args.spec)?;
    let target_hash = sha256_hex(target_text.as_bytes());
    let target = RealizeTargetFile::from_json(&target_text)?;
    let dec = triple_decomposition(&x, args.dim)?;
    let h_down = match &target.down {
        Some(spec) => spec.to_map()?,
        None => VectorMap::zero(dec.r_down),
    };
    let h_up = match &target.up {
        Some(spec) => spec.to_map()?,
        None => VectorMap::zero(dec.r_up),
    };
    let realization = match &target.m_inv {
        Some(rows) => {
            let nrows = rows.len();
            let ncols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != ncols) {
                return Err(Error::InvalidInput("m_inv rows have unequal lengths".into()));
            }
            let m_inv = DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
            realize_with_basis(&x, args.dim, h_down, h_up, m_inv)?
        }
        None => realize(&x, args.dim, h_down, h_up)?,
    };
    let field = assemble(&x, &realization.spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut residual: f64 = 0.0;
    for _ in 0..25 {
        let theta = DVector::from_fn(dec.n, |_, _| rng.random_range(-1.0..1.0));
        residual = residual.max(realization.conjugacy_residual(&field, &theta));
    }
    println!(
        "ranks: r_down = {}, r_up = {}, harmonic = {}",
        realization.r_down, realization.r_up, realization.w
    );
    println!("conjugacy residual over 25 points: {}", format_sig12(residual));
    fs::create_dir_all(&args.out)?;
    write_field_spec(&args.out.join("realized_spec.json"), &realization.spec)?;
    save_matrix_csv(&args.out.join("m.csv"), &realization.m)?;
    save_matrix_csv(&args.out.join("m_inv.csv"), &realization.m_inv)?;
    let report = json!({
        "meta": meta_json(&[("complex", complex_hash), ("target", target_hash)], Some(args.seed)),
        "d": args.dim,
        "r_down": realization.r_down,
        "r_up": realization.r_up,
        "harmonic_dimension": realization.w,
        "conjugacy_residual": residual,
        "sample_points": 25,
        "files": {"spec": "realized_spec.json", "m": "m.csv", "m_inv": "m_inv.csv"},
    });
    write_json(&args.out.join("realize_report.json"), &report)?;
    println!(
        "wrote realized_spec.json, m.csv, m_inv.csv, realize_report.json in {}",
        args.out.display()
    );
    if residual > args.tol {
        return Err(Error::VerificationFailure(format!(
            "conjugacy residual {} exceeds tolerance {}",
            format_sig12(residual),
            format_sig12(args.tol)
        )));
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let (x, _, complex_hash) = load_complex(&args.complex)?;
    let spec_text = fs::read_to_string(&args.spec)?;
    let spec_hash = sha256_hex(spec_text.as_bytes());
    let spec = FieldSpecFile::from_json(&spec_text)?.to_spec()?;
    let field = assemble(&x, &spec)?;
    let x0 = parse_vector(&args.x0)?;
    if x0.len() != field.dim() {
        return Err(Error::InvalidInput(format!(
            "initial state has {} entries but the field acts on {} coordinates",
            x0.len(),
            field.dim()
        )));
    }
    let traj = integrate(&field, &x0, args.h, args.t_end)?;
    fs::create_dir_all(&args.out)?;
    save_trajectory_csv(&args.out.join("trajectory.csv"), &traj)?;
    let mut inputs = vec![("complex", complex_hash), ("spec", spec_hash)];
    let mut transformed_name = serde_json::Value::Null;
    if let Some(mpath) = &args.transform {
        inputs.push(("transform", sha256_hex(&fs::read(mpath)?)));
        let m = read_matrix_csv(mpath)?;
        if m.ncols() != traj.dim() {
            return Err(Error::InvalidInput(format!(
                "transform matrix has {} columns but the trajectory has {} coordinates",
                m.ncols(),
                traj.dim()
            )));
        }
        save_trajectory_csv(&args.out.join("transformed.csv"), &map_states(&traj, &m))?;
        transformed_name = json!("transformed.csv");
    }
    let last_time = traj.times.last().copied();
    let metadata = json!({
        "meta": meta_json(&inputs, None),
        "h": traj.h,
        "t_end": args.t_end,
        "rows": traj.len(),
        "dim": traj.dim(),
        "aborted_at_step": traj.aborted_at,
        "last_time": last_time,
        "files": {"trajectory": "trajectory.csv", "transformed": transformed_name},
    });
    write_json(&args.out.join("trajectory.json"), &metadata)?;
    println!(
        "wrote {} rows to {}",
        traj.len(),
        args.out.join("trajectory.csv").display()
    );
    if let Some(step) = traj.aborted_at {
        let last = last_time.map_or_else(|| "none".to_string(), format_sig12);
        return Err(Error::VerificationFailure(format!(
            "integration aborted at step {step}: state became non-finite; last valid time {last}"
        )));
    }
    Ok(())
}

fn cmd_symmetries(args: SymmetriesArgs) -> Result<()> {
    let (x, _, complex_hash) = load_complex(&args.complex)?;
    let symmetries = find_symmetries(&x);
    println!("automorphism group order: {}", symmetries.len());
    for sigma in &symmetries {
        println!("  {sigma}");
    }
    let mut inputs = vec![("complex", complex_hash)];
    let mut checks = Vec::new();
    let mut failures = 0usize;
    if let Some(spec_path) = &args.spec {
        let text = fs::read_to_string(spec_path)?;
        inputs.push(("spec", sha256_hex(text.as_bytes())));
        let spec = FieldSpecFile::from_json(&text)?.to_spec()?;
        let field = assemble(&x, &spec)?;
        let n = field.dim();
        for sigma in &symmetries {
            let s = to_f64(&symmetry_map_s(&x, sigma, spec.d)?);
            match commutation_witness(&s, |p| field.eval(p), n, 25, args.seed, args.tol) {
                None => {
                    println!("S_{sigma} commutes with the field: PASS");
                    checks.push(json!({"sigma": sigma.as_map(), "commutes": true}));
                }
                Some((point, residual)) => {
                    failures += 1;
                    let coords: Vec<f64> = point.iter().copied().collect();
                    println!(
                        "S_{sigma} commutes with the field: FAIL (residual {})",
                        format_sig12(residual)
                    );
                    checks.push(json!({
                        "sigma": sigma.as_map(),
                        "commutes": false,
                        "residual": residual,
                        "witness_point": coords,
                    }));
                }
            }
        }
    }
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        let mut listed = Vec::new();
        for sigma in &symmetries {
            listed.push(serde_json::to_value(sigma.as_map())?);
        }
        let report = json!({
            "meta": meta_json(&inputs, Some(args.seed)),
            "order": symmetries.len(),
            "symmetries": listed,
            "equivariance": checks,
        });
        write_json(&dir.join("symmetries.json"), &report)?;
    }
    if failures > 0 {
        return Err(Error::VerificationFailure(format!(
            "{failures} symmetry commutation check(s) failed"
        )));
    }
    Ok(())
}

fn cmd_colorings(args: ColoringsArgs) -> Result<()> {
    let (x, _, complex_hash) = load_complex(&args.complex)?;
    let d = args.dim;
    let direction = Direction::from(args.direction);
    let level = match direction {
        Direction::Down => d.checked_sub(1).ok_or_else(|| {
            Error::InvalidInput("down coupling requires dimension >= 1".into())
        })?,
        Direction::Up => d + 1,
    };
    let mut inputs = vec![("complex", complex_hash)];
    let partition = match &args.partition {
        Some(path) => {
            inputs.push(("partition", sha256_hex(&fs::read(path)?)));
            read_partition(path, &x, level)?
        }
        None => SimplexPartition::trivial(x.size(level)),
    };

    if let Some(check_path) = &args.check {
        inputs.push(("coloring", sha256_hex(&fs::read(check_path)?)));
        let coloring = read_coloring(check_path, &x, d)?;
        let result = is_balanced(&x, &coloring, &partition, direction)?;
        let witness_value = match &result.witness {
            None => serde_json::Value::Null,
            Some(w) => {
                println!("balanced: no");
                println!(
                    "witness: class {}, induced value {}, mapped-back image {:?} ({:?})",
                    w.class_index,
                    w.representative.display_with(coloring.colors()),
                    w.image,
                    w.violation
                );
                json!({
                    "class_index": w.class_index,
                    "representative": w.representative.display_with(coloring.colors()),
                    "image": w.image,
                    "violation": format!("{:?}", w.violation),
                })
            }
        };
        if result.balanced {
            println!("balanced: yes");
        }
        if let Some(dir) = &args.out {
            fs::create_dir_all(dir)?;
            let report = json!({
                "meta": meta_json(&inputs, Some(args.seed)),
                "d": d,
                "direction": match direction { Direction::Down => "down", Direction::Up => "up" },
                "balanced": result.balanced,
                "witness": witness_value,
            });
            write_json(&dir.join("coloring_check.json"), &report)?;
        }
        return Ok(());
    }

    let balanced = enumerate_balanced(&x, d, &partition, direction, args.guard)?;
    println!("balanced anti-colorings: {}", balanced.len());
    let mut listed = Vec::new();
    for (i, coloring) in balanced.iter().enumerate() {
        let entries = coloring_to_entries(&x, coloring)?;
        println!("  class {}: {}", i + 1, serde_json::to_string(&entries)?);
        listed.push(serde_json::to_value(entries)?);
    }
    let mut oracle_value = serde_json::Value::Null;
    let mut oracle_disagreements = 0usize;
    if args.oracle {
        let mut agreements = 0usize;
        for coloring in &balanced {
            if invariance_oracle(&x, coloring, &partition, direction, 100, args.seed)? {
                agreements += 1;
            }
        }
        oracle_disagreements = balanced.len() - agreements;
        println!("oracle agreement: {agreements}/{}", balanced.len());
        oracle_value = json!({
            "trials": 100,
            "agreements": agreements,
            "classes": balanced.len(),
        });
    }
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        let report = json!({
            "meta": meta_json(&inputs, Some(args.seed)),
            "d": d,
            "direction": match direction { Direction::Down => "down", Direction::Up => "up" },
            "partition_classes": partition.classes(),
            "count": balanced.len(),
            "balanced": listed,
            "oracle": oracle_value,
        });
        write_json(&dir.join("colorings.json"), &report)?;
    }
    if oracle_disagreements > 0 {
        return Err(Error::VerificationFailure(format!(
            "{oracle_disagreements} balanced class(es) failed the invariance oracle"
        )));
    }
    Ok(())
}

type CheckResult = std::result::Result<String, String>;

fn cmd_verify_all(args: VerifyAllArgs) -> Result<()> {
    let checks: Vec<(&str, CheckResult)> = vec![
        ("boundary exactness on random complexes", check_boundary_exactness(args.seed)),
        ("decomposition identities on random complexes", check_decomposition_identities(args.seed, args.tol)),
        ("reference boundary matrices", check_reference_matrices()),
        ("relabeling chain maps", check_relabel_maps()),
        ("symmetry equivariance in both directions", check_symmetry_equivariance()),
        ("unsigned symmetry map fails", check_unsigned_map_fails(args.seed, args.tol)),
        ("balanced anti-coloring classes", check_balanced_classes()),
        ("inertia preservation under positive weights", check_inertia(args.seed)),
        ("integrator convergence order", check_rk4_order()),
        ("realized cycle dynamics", check_gh_scenario(args.seed)),
        ("realized mixed-block dynamics", check_ls_scenario(args.seed)),
    ];
    let mut failures = 0usize;
    let mut listed = Vec::new();
    for (name, result) in &checks {
        match result {
            Ok(detail) => {
                println!("ok   {name} ({detail})");
                listed.push(json!({"name": name, "ok": true, "detail": detail}));
            }
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
                listed.push(json!({"name": name, "ok": false, "detail": detail}));
            }
        }
    }
    println!("{} of {} checks passed", checks.len() - failures, checks.len());
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        let report = json!({
            "meta": meta_json(&[], Some(args.seed)),
            "checks": listed,
            "passed": checks.len() - failures,
            "total": checks.len(),
        });
        write_json(&dir.join("verify_report.json"), &report)?;
    }
    if failures > 0 {
        return Err(Error::VerificationFailure(format!(
            "{failures} of {} verification checks failed",
            checks.len()
        )));
    }
    Ok(())
}

fn check_boundary_exactness(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut products = 0usize;
    for _ in 0..30 {
        let x = random_complex(&mut rng, 6, 4, 4);
        for d in 1..x.d_max() {
            let bd = x.boundary_or_zero(d);
            let bup = x.boundary_or_zero(d + 1);
            if &bd * &bup != DMatrix::zeros(bd.nrows(), bup.ncols()) {
                return Err(format!("B_{d} * B_{} is nonzero", d + 1));
            }
            products += 1;
        }
    }
    Ok(format!("{products} exact integer products over 30 complexes"))
}

fn check_decomposition_identities(seed: u64, tol: f64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = random_complex(&mut rng, 6, 4, 4);
        for d in 0..=x.d_max() {
            let dec = triple_decomposition(&x, d).map_err(|e| e.to_string())?;
            let eye = DMatrix::identity(dec.n, dec.n);
            worst = worst.max(max_norm(&(&dec.p + &dec.q + &dec.r - &eye)));
            worst = worst.max(max_norm(&(&dec.p * &dec.p - &dec.p)));
            worst = worst.max(max_norm(&(&dec.q * &dec.q - &dec.q)));
            worst = worst.max(max_norm(&(&dec.r * &dec.r - &dec.r)));
            worst = worst.max(max_norm(&(&dec.p * &dec.q)));
            worst = worst.max(max_norm(&(&dec.p * &dec.r)));
            worst = worst.max(max_norm(&(&dec.q * &dec.r)));
            if d >= 1 {
                let bdt = to_f64(&x.boundary_or_zero(d)).transpose();
                worst = worst.max(max_norm(&(&dec.p * &bdt - &bdt)));
            }
            let bup = to_f64(&x.boundary_or_zero(d + 1));
            if bup.ncols() > 0 {
                worst = worst.max(max_norm(&(&dec.q * &bup - &bup)));
            }
        }
    }
    if worst <= tol {
        Ok(format!("worst identity residual {}", format_sig12(worst)))
    } else {
        Err(format!("identity residual {} exceeds {}", format_sig12(worst), format_sig12(tol)))
    }
}

fn check_reference_matrices() -> CheckResult {
    let b2 = diamond().boundary_matrix(2).map_err(|e| e.to_string())?;
    let expected = DMatrix::from_row_slice(5, 2, &[1, 0, 1, 0, -1, 1, 0, -1, 0, 1]);
    if b2 != expected {
        return Err("diamond triangle boundary differs from the reference".into());
    }
    let b2_relabeled = diamond_relabeled().boundary_matrix(2).map_err(|e| e.to_string())?;
    let expected_relabeled = DMatrix::from_row_slice(5, 2, &[1, 0, 1, 0, -1, -1, 0, 1, 0, 1]);
    if b2_relabeled != expected_relabeled {
        return Err("relabeled diamond triangle boundary differs from the reference".into());
    }
    Ok("both diamond labellings match bit-exactly".into())
}

fn check_relabel_maps() -> CheckResult {
    let x = diamond();
    let sigma = Permutation::from_map(
        [(1, 1), (2, 3), (3, 4), (4, 2)].into_iter().collect(),
    )
    .map_err(|e| e.to_string())?;
    let t1 = relabel_map_t(&x, &sigma, 1).map_err(|e| e.to_string())?;
    let mut expected_t1 = DMatrix::identity(5, 5);
    expected_t1[(4, 4)] = -1;
    if t1 != expected_t1 {
        return Err("edge-level chain map is not diag(1,1,1,1,-1)".into());
    }
    let t2 = relabel_map_t(&x, &sigma, 2).map_err(|e| e.to_string())?;
    let mut expected_t2 = DMatrix::identity(2, 2);
    expected_t2[(1, 1)] = -1;
    if t2 != expected_t2 {
        return Err("triangle-level chain map is not diag(1,-1)".into());
    }
    Ok("edge and triangle chain maps match".into())
}

fn check_symmetry_equivariance() -> CheckResult {
    let x = diamond();
    let sigma = Permutation::from_cycles(&[1, 2, 3, 4], &[vec![1, 3]]).map_err(|e| e.to_string())?;
    let odd = ScalarFunction::parse("2*x - 0.3*x^3").map_err(|e| e.to_string())?;
    let down_ok = verify_symmetry(
        &x,
        &sigma,
        &CouplingFunction::uniform(4, odd.clone()),
        1,
        Direction::Down,
    )
    .map_err(|e| e.to_string())?;
    let up_ok = verify_symmetry(
        &x,
        &sigma,
        &CouplingFunction::uniform(2, odd),
        2,
        Direction::Up,
    )
    .map_err(|e| e.to_string())?;
    if down_ok && up_ok {
        Ok("signed vertex swap commutes with down and up couplings".into())
    } else {
        Err(format!("commutation failed (down: {down_ok}, up: {up_ok})"))
    }
}

fn check_unsigned_map_fails(seed: u64, tol: f64) -> CheckResult {
    let x = diamond();
    let sigma = Permutation::from_cycles(&[1, 2, 3, 4], &[vec![1, 3]]).map_err(|e| e.to_string())?;
    let mut spec = simplicial_flows::dynamics::VectorFieldSpec::new(1);
    spec.up = Some(CouplingFunction::uniform(
        2,
        ScalarFunction::parse("2*x - 0.3*x^3").map_err(|e| e.to_string())?,
    ));
    let field = assemble(&x, &spec).map_err(|e| e.to_string())?;
    let s = to_f64(&symmetry_map_s(&x, &sigma, 1).map_err(|e| e.to_string())?);
    if commutation_witness(&s, |p| field.eval(p), 5, 25, seed, tol).is_some() {
        return Err("signed map unexpectedly fails to commute".into());
    }
    let s_tilde = to_f64(&symmetry_map_s_tilde(&x, &sigma, 1).map_err(|e| e.to_string())?);
    match commutation_witness(&s_tilde, |p| field.eval(p), 5, 25, seed, tol) {
        Some((_, residual)) => Ok(format!(
            "unsigned map fails with residual {}",
            format_sig12(residual)
        )),
        None => Err("unsigned map unexpectedly commutes".into()),
    }
}

fn check_balanced_classes() -> CheckResult {
    let x = diamond();
    let trivial = SimplexPartition::trivial(5);
    let classes = enumerate_balanced(&x, 2, &trivial, Direction::Down, None)
        .map_err(|e| e.to_string())?;
    if classes.len() != 4 {
        return Err(format!("trivial partition gives {} classes, expected 4", classes.len()));
    }
    let split = SimplexPartition::new(5, vec![vec![0], vec![1, 2, 3, 4]])
        .map_err(|e| e.to_string())?;
    let split_classes = enumerate_balanced(&x, 2, &split, Direction::Down, None)
        .map_err(|e| e.to_string())?;
    if split_classes.len() != 2 {
        return Err(format!(
            "split partition gives {} classes, expected 2",
            split_classes.len()
        ));
    }
    Ok("4 classes for the trivial partition, 2 after splitting one edge".into())
}

fn check_inertia(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    for trial in 0..25 {
        let n = rng.random_range(1..=6);
        let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = (&raw + raw.transpose()) * 0.5;
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let l = &g * g.transpose() + DMatrix::identity(n, n) * 0.1;
        let direct = inertia(&a, 1e-9).map_err(|e| e.to_string())?;
        let weighted = inertia_of_product(&l, &a, 1e-9).map_err(|e| e.to_string())?;
        if direct != weighted {
            return Err(format!("sign counts differ on trial {trial} (dim {n})"));
        }
    }
    Ok("25 random weighted pairs preserve sign counts".into())
}

fn check_rk4_order() -> CheckResult {
    let decay = CouplingFunction::uniform(1, ScalarFunction::parse("-x").expect("parses"));
    let field = AssembledField::from_parts(1, Some(decay), None, None).map_err(|e| e.to_string())?;
    let x0 = DVector::from_vec(vec![1.0]);
    let exact = (-1.0f64).exp();
    let endpoint_error = |h: f64| -> std::result::Result<f64, String> {
        let traj = integrate(&field, &x0, h, 1.0).map_err(|e| e.to_string())?;
        Ok((traj.final_state()[0] - exact).abs())
    };
    let coarse = endpoint_error(0.01)?;
    let fine = endpoint_error(0.005)?;
    let ratio = coarse / fine;
    if (12.0..=20.0).contains(&ratio) {
        Ok(format!("error ratio {} for halved step", format_sig12(ratio)))
    } else {
        Err(format!("error ratio {} outside [12, 20]", format_sig12(ratio)))
    }
}

fn check_gh_scenario(seed: u64) -> CheckResult {
    let run = scenario_guckenheimer_holmes(&GhParams::default(), 1e-3, 5.0, seed)
        .map_err(|e| e.to_string())?;
    if run.max_conjugacy_residual > 1e-8 {
        return Err(format!(
            "conjugacy residual {} exceeds 1e-8",
            format_sig12(run.max_conjugacy_residual)
        ));
    }
    let third = 1.0 / 3.0;
    for k in 0..run.transformed.len() {
        if (run.transformed.states[(k, 3)] - third).abs() > 1e-7 {
            return Err(format!("adjoined coordinate drifts from 1/3 at row {k}"));
        }
    }
    Ok(format!(
        "conjugacy residual {}, adjoined coordinate pinned at 1/3",
        format_sig12(run.max_conjugacy_residual)
    ))
}

fn check_ls_scenario(seed: u64) -> CheckResult {
    let run = scenario_lorenz_selkov(&LsParams::default(), 1e-3, 5.0, seed)
        .map_err(|e| e.to_string())?;
    if run.max_conjugacy_residual > 1e-8 {
        return Err(format!(
            "conjugacy residual {} exceeds 1e-8",
            format_sig12(run.max_conjugacy_residual)
        ));
    }
    Ok(format!(
        "conjugacy residual {}",
        format_sig12(run.max_conjugacy_residual)
    ))
}
