//! `bcartan`: decompose bipartite unitaries into recursive Cartan factors,
//! check stored reports and list the torus bases of a split.

pub mod format;
pub mod report;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use bipartite_cartan::bases::{cartan_a_dprime, cartan_a_prime, SubspaceBasis};
use bipartite_cartan::{
    recursive_decompose, tensor_expand, BipartiteShape, Matrix, SplitPlan, SplitStrategy, Tolerance,
};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

pub use bipartite_cartan::sample::random_unitary as gen_random_unitary;
pub use report::{verify, Report, Verification, VerifyError};

#[derive(Debug, Parser)]
#[command(
    name = "bcartan",
    version,
    about = "Recursive Cartan factorization of bipartite unitaries"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Factor a unitary and write the report.
    Decompose(DecomposeArgs),
    /// Re-multiply the factors of a report and compare with its residual.
    Verify { report: PathBuf },
    /// Print the torus bases a′ and a″ of one split.
    Bases {
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        d2: usize,
        #[arg(long, value_parser = parse_split)]
        split: Option<SplitPlan>,
    },
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Matrix file (see `format::MATRIX_HEADER`).
    #[arg(required_unless_present_any = ["swap", "random"])]
    pub input: Option<PathBuf>,
    /// Use the SWAP-type permutation on C2 ⊗ C4.
    #[arg(long, conflicts_with_all = ["input", "random"])]
    pub swap: bool,
    /// Use a Haar-random unitary from this seed.
    #[arg(long, conflicts_with = "input")]
    pub random: Option<u64>,
    #[arg(long)]
    pub d1: Option<usize>,
    #[arg(long)]
    pub d2: Option<usize>,
    /// `r1,q1,r2,q2` for one recursion level; repeat for deeper levels.
    #[arg(long = "split", value_parser = parse_split)]
    pub splits: Vec<SplitPlan>,
    /// Reconstruction tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_split(s: &str) -> Result<SplitPlan, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|w| w.trim().parse::<usize>().map_err(|_| format!("`{w}` is not a count")))
        .collect::<Result<_, _>>()?;
    if parts.len() != 4 {
        return Err("expected r1,q1,r2,q2".into());
    }
    SplitPlan::new(parts[0], parts[1], parts[2], parts[3]).map_err(|e| e.to_string())
}

/// The permutation `|i j k⟩ → |j k i⟩` on C2 ⊗ C2 ⊗ C2, read as a
/// `2 × 4` bipartite operator.
pub fn gen_swap() -> Matrix {
    let mut m = Matrix::zeros(8, 8);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                m[(k * 4 + i * 2 + j, i * 4 + j * 2 + k)] = Complex64::new(1.0, 0.0);
            }
        }
    }
    m
}

pub fn decompose_report(
    x: &Matrix,
    shape: BipartiteShape,
    strategy: &SplitStrategy,
    tol: &Tolerance,
) -> Result<Report> {
    let start = Instant::now();
    let tree = recursive_decompose(x, shape, strategy, tol)?;
    let elapsed = start.elapsed();
    Ok(Report::from_tree(&tree, tol, elapsed)?)
}

fn resolve_shape(
    given: (Option<usize>, Option<usize>),
    from_input: Option<(usize, usize)>,
    n: usize,
) -> Result<BipartiteShape> {
    let (d1, d2) = match (given, from_input) {
        ((Some(a), Some(b)), Some((fa, fb))) if (a, b) != (fa, fb) => {
            bail!("--d1 {a} --d2 {b} contradicts the file shape {fa}x{fb}")
        }
        ((Some(a), Some(b)), _) => (a, b),
        ((None, None), Some(s)) => s,
        ((Some(a), None), _) if a > 0 && n.is_multiple_of(a) => (a, n / a),
        ((None, Some(b)), _) if b > 0 && n.is_multiple_of(b) => (n / b, b),
        _ => bail!("give both --d1 and --d2"),
    };
    if d1 * d2 != n {
        bail!("shape {d1}x{d2} does not match a {n}x{n} matrix");
    }
    Ok(BipartiteShape::new(d1, d2)?)
}

fn decompose(args: DecomposeArgs, out: &mut dyn Write) -> Result<()> {
    let (x, shape) = if args.swap {
        let x = gen_swap();
        let shape = resolve_shape((args.d1.or(Some(2)), args.d2.or(Some(4))), None, 8)?;
        (x, shape)
    } else if let Some(seed) = args.random {
        let (Some(d1), Some(d2)) = (args.d1, args.d2) else {
            bail!("--random needs --d1 and --d2");
        };
        (gen_random_unitary(d1 * d2, seed), BipartiteShape::new(d1, d2)?)
    } else {
        let path = args.input.expect("clap enforces an input");
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let (x, d1, d2) = format::read_matrix_file(&text).with_context(|| format!("parsing {}", path.display()))?;
        let shape = resolve_shape((args.d1, args.d2), Some((d1, d2)), x.rows())?;
        (x, shape)
    };
    let mut tol = Tolerance::default();
    if let Some(t) = args.tol {
        tol.reconstruction = t;
    }
    tol.validate()?;
    let strategy = if args.splits.is_empty() {
        SplitStrategy::Balanced
    } else {
        SplitStrategy::Explicit(args.splits)
    };
    let report = decompose_report(&x, shape, &strategy, &tol)?;
    match args.out {
        Some(path) => {
            fs::write(&path, report.to_text()).with_context(|| format!("writing {}", path.display()))?;
            write_summary(&report, out)?;
            writeln!(out, "report written to {}", path.display())?;
        }
        None => out.write_all(report.to_text().as_bytes())?,
    }
    Ok(())
}

fn write_summary(r: &Report, out: &mut dyn Write) -> Result<()> {
    let entangling = r
        .factors
        .iter()
        .filter(|f| f.locality == bipartite_cartan::recursion::Locality::Entangling)
        .count();
    writeln!(out, "shape {}x{}, strategy {}", r.d1, r.d2, r.strategy)?;
    writeln!(out, "factors {} ({} entangling)", r.factors.len(), entangling)?;
    writeln!(out, "residual {:.3e}", r.residual)?;
    for e in &r.inventory {
        writeln!(out, "family {} x{}", e.family, e.count)?;
    }
    Ok(())
}

fn write_basis(name: &str, basis: &SubspaceBasis, shape: BipartiteShape, out: &mut dyn Write) -> Result<()> {
    let tol = Tolerance::default();
    writeln!(out, "{name}: {} elements", basis.dim())?;
    for (i, b) in basis.elements.iter().enumerate() {
        let g = if b.is_skew_hermitian(tol.zero) {
            b.clone()
        } else {
            b.scale(Complex64::new(0.0, 1.0))
        };
        let c = tensor_expand(&g, shape, &tol)?;
        let terms: Vec<String> = c
            .terms
            .iter()
            .map(|t| {
                format!(
                    "({}) {}⊗{}",
                    format::complex(t.coefficient).replace(' ', ", "),
                    t.left,
                    t.right
                )
            })
            .collect();
        writeln!(out, "  {}: {}", i + 1, terms.join(" + "))?;
    }
    Ok(())
}

fn bases(d1: usize, d2: usize, split: Option<SplitPlan>, out: &mut dyn Write) -> Result<()> {
    let shape = BipartiteShape::new(d1, d2)?;
    let split = match split {
        Some(s) if !s.fits(shape) => bail!("split {},{},{},{} does not fit {d1}x{d2}", s.r1, s.q1, s.r2, s.q2),
        Some(s) => s,
        None => SplitPlan::balanced(shape)?,
    };
    writeln!(out, "split {},{},{},{}", split.r1, split.q1, split.r2, split.q2)?;
    write_basis("a'", &cartan_a_prime(split), shape, out)?;
    write_basis("a''", &cartan_a_dprime(split), shape, out)?;
    Ok(())
}

/// Runs one command line (`args[0]` is the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    match cli.command {
        Command::Decompose(a) => decompose(a, out),
        Command::Verify { report } => {
            let text = fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            let r = Report::parse(&text).with_context(|| format!("parsing {}", report.display()))?;
            let v = verify(&r)?;
            writeln!(
                out,
                "ok: {} factors, residual {:.3e}, generator defect {:.3e}",
                r.factors.len(),
                v.recomputed,
                v.generator_defect
            )?;
            Ok(())
        }
        Command::Bases { d1, d2, split } => bases(d1, d2, split, out),
    }
}
