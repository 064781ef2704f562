//! Batch front end for the commlab laboratory.
//!
//! Exit codes: 0 ok, 1 exact-check violation, 2 configuration or usage
//! error, 3 numerical error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use commlab::commutators::{
    commutator_contour, commutator_contour_multi, commutator_direct, commutator_multilinear_direct,
    default_delta, default_delta_vector, ContourSpec,
};
use commlab::grid::{CubeFamily, FamilyKind, Grid, GridFn};
use commlab::io::{read_gridfn, to_json, write_gridfn};
use commlab::numeric::rel_err;
use commlab::operators::{
    maximal, weighted_norm, BilinearKernelOp, BilinearKind, LinearKernelOp,
};
use commlab::oscillation::{generate_bmo, script_bmo_norm, BmoFn, BmoKind};
use commlab::verify::{run_suite, SuiteConfig, SuiteKind, SuiteReport, SuiteSize};
use commlab::weights::{
    a_pr_constant, a_pq_vector_constant, a_vector_constant, ap_constant, apq_constant, exp_of,
    membership_restricted, rh_constant, ExponentProfile, VectorWeight, Weight,
};
use commlab::{LabError, Result, VERSION};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Serialize, Debug)]
#[command(name = "commlab", version, about = "Weights, BMO norms, operators and commutators on discrete grids")]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "COMMLAB_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize, Debug)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Weight-class constant of a weight (or vector weight).
    Constant(ConstantArgs),
    /// Weighted operator norm.
    Norm(NormArgs),
    /// Apply an operator to a grid function.
    Operator(OperatorArgs),
    /// Apply an iterated commutator.
    Commutator(CommutatorArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Summarize a suite report.
    Report(ReportArgs),
}

/// Inline weight generators.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum WeightSpec {
    Ones,
    /// 1 on the left half, `a` on the right half.
    TwoValue { a: f64 },
    /// `|x − ½|^a` clipped at half a cell.
    Power { a: f64 },
    /// `e^{λ b}` for a generated symbol.
    Exp {
        symbol: BmoKind,
        #[serde(default = "one")]
        lambda: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Args, Serialize, Debug, Clone)]
struct GridArgs {
    /// Points per axis (power of two); required with generators.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
}

impl GridArgs {
    fn grid(&self) -> Result<Grid> {
        let n = self.n.ok_or_else(|| LabError::Config("--n is required with a generator".into()))?;
        Grid::new(self.dim, n).map_err(config)
    }

    /// A file's grid must agree with `--n/--dim` when those are given.
    fn check(&self, f: &GridFn) -> Result<()> {
        if let Some(n) = self.n {
            if f.grid.n_points != n || f.grid.dim != self.dim {
                return Err(LabError::Config(format!(
                    "file grid is {}D N={} but --dim {} --n {n} was given",
                    f.grid.dim, f.grid.n_points, self.dim
                )));
            }
        }
        Ok(())
    }
}

#[derive(Args, Serialize, Debug, Clone)]
struct WeightArgs {
    /// Weight file (JSON or .csv); repeat for the parts of a vector weight.
    #[arg(long = "weight")]
    weight: Vec<PathBuf>,
    /// Inline generator such as '{"kind":"two_value","a":4}'; repeatable.
    #[arg(long = "weight-gen")]
    weight_gen: Vec<String>,
    #[command(flatten)]
    grid: GridArgs,
}

impl WeightArgs {
    fn load(&self) -> Result<Vec<Weight>> {
        let mut out = Vec::new();
        for p in &self.weight {
            let f = read_gridfn(p)?;
            self.grid.check(&f)?;
            out.push(Weight::new(f).map_err(config)?);
        }
        for s in &self.weight_gen {
            let spec: WeightSpec =
                serde_json::from_str(s).map_err(|e| LabError::Config(format!("weight generator: {e}")))?;
            let g = self.grid.grid()?;
            let w = match spec {
                WeightSpec::Ones => Weight::ones(g),
                WeightSpec::TwoValue { a } => commlab::verify::two_value_weight(g, a).map_err(config)?,
                WeightSpec::Power { a } => commlab::verify::power_weight(g, a).map_err(config)?,
                WeightSpec::Exp { symbol, lambda } => exp_of(generate_bmo(&symbol, g)?.as_gridfn(), lambda)?,
            };
            out.push(w);
        }
        if out.is_empty() {
            return Err(LabError::Config("no weight given (--weight or --weight-gen)".into()));
        }
        Ok(out)
    }

    fn single(&self) -> Result<Weight> {
        let mut v = self.load()?;
        if v.len() != 1 {
            return Err(LabError::Config(format!("expected one weight, got {}", v.len())));
        }
        Ok(v.remove(0))
    }
}

#[derive(Args, Serialize, Debug, Clone)]
struct SymbolArgs {
    /// Symbol file; repeat for multilinear commutators.
    #[arg(long = "symbol")]
    symbol: Vec<PathBuf>,
    /// Inline generator such as '{"kind":"log_singularity"}'; repeatable.
    #[arg(long = "symbol-gen")]
    symbol_gen: Vec<String>,
}

impl SymbolArgs {
    fn load(&self, grid: &GridArgs) -> Result<Vec<BmoFn>> {
        let mut out = Vec::new();
        for p in &self.symbol {
            let f = read_gridfn(p)?;
            grid.check(&f)?;
            out.push(BmoFn::new(f));
        }
        for s in &self.symbol_gen {
            let k: BmoKind =
                serde_json::from_str(s).map_err(|e| LabError::Config(format!("symbol generator: {e}")))?;
            out.push(generate_bmo(&k, grid.grid()?)?);
        }
        if out.is_empty() {
            return Err(LabError::Config("no symbol given (--symbol or --symbol-gen)".into()));
        }
        Ok(out)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum ConstantClass {
    #[value(name = "a_p")]
    Ap,
    #[value(name = "rh")]
    Rh,
    #[value(name = "a_pq")]
    Apq,
    #[value(name = "a_vector")]
    AVector,
    #[value(name = "a_pq_vector")]
    APqVector,
    #[value(name = "a_pr")]
    APr,
    #[value(name = "membership")]
    Membership,
}

#[derive(Args, Serialize, Debug)]
struct ConstantArgs {
    #[arg(long, value_enum)]
    class: ConstantClass,
    #[arg(long)]
    p: Option<f64>,
    /// Second exponent: q for A_{p,q}, RH and A_{P,q}.
    #[arg(long)]
    q: Option<f64>,
    /// Exponents p_1,…,p_m of a vector weight; defaults to 2 for each part.
    #[arg(long, value_delimiter = ',')]
    p_list: Vec<f64>,
    /// r_1,…,r_{m+1} for A_{P,R}.
    #[arg(long, value_delimiter = ',')]
    r_list: Vec<f64>,
    #[arg(long)]
    r_minus: Option<f64>,
    #[arg(long)]
    r_plus: Option<f64>,
    #[arg(long, default_value = "all_intervals")]
    family: String,
    #[command(flatten)]
    weights: WeightArgs,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
enum LinearName {
    Hilbert,
    HilbertDirect,
    Riesz,
    DoubleHilbert,
    Maximal,
}

#[derive(Args, Serialize, Debug)]
struct NormArgs {
    #[arg(long, value_enum)]
    operator: LinearName,
    /// Order of the Riesz potential.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
enum OperatorName {
    Hilbert,
    HilbertDirect,
    Riesz,
    DoubleHilbert,
    Maximal,
    Bht,
    BiS,
    BilinearCz,
}

impl OperatorName {
    fn bilinear(&self) -> Option<BilinearKind> {
        Some(match self {
            OperatorName::Bht => BilinearKind::Bht,
            OperatorName::BilinearCz => BilinearKind::BilinearCz,
            OperatorName::BiS => BilinearKind::BiS { s: f64::NAN },
            _ => return None,
        })
    }
}

#[derive(Args, Serialize, Debug)]
struct OperatorArgs {
    #[arg(long, value_enum)]
    operator: OperatorName,
    #[arg(long)]
    input: PathBuf,
    /// Second argument of a bilinear operator.
    #[arg(long)]
    input2: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Order of the bilinear fractional integral.
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    /// Family for the maximal function.
    #[arg(long, default_value = "all_intervals")]
    family: String,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum Method {
    Direct,
    Contour,
    Both,
}

#[derive(Args, Serialize, Debug)]
struct CommutatorArgs {
    #[arg(long, value_enum)]
    operator: OperatorName,
    /// Order k of a linear commutator.
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Multi-index of a bilinear commutator, e.g. 1,1.
    #[arg(long, value_delimiter = ',')]
    multi_index: Vec<usize>,
    #[command(flatten)]
    symbols: SymbolArgs,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    input2: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Direct)]
    method: Method,
    /// Contour radius; derived from the symbol norm when absent.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 64)]
    m_nodes: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum SuiteArg {
    Exact,
    Empirical,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum SizeArg {
    Smoke,
    Default,
    Full,
}

#[derive(Args, Serialize, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    suite: SuiteArg,
    #[arg(long, value_enum, default_value_t = SizeArg::Smoke)]
    size: SizeArg,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Override the weight-corpus size.
    #[arg(long)]
    weights: Option<usize>,
    /// Override the symbol-corpus size.
    #[arg(long)]
    symbols: Option<usize>,
    /// Directory for `verify_report.json` and `verify_report.csv`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize, Debug)]
struct ReportArgs {
    /// A JSON report written by `verify`.
    #[arg(long)]
    input: PathBuf,
    /// Also write the CSV table here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    version: &'static str,
    config: &'a Cli,
    result: T,
}

fn config(e: LabError) -> LabError {
    match e {
        LabError::Domain(m) | LabError::Unsupported(m) => LabError::Config(m),
        other => other,
    }
}

fn family(name: &str, grid: Grid) -> Result<CubeFamily> {
    let kind: FamilyKind = name.parse()?;
    CubeFamily::new(kind, grid).map_err(config)
}

fn emit<T: Serialize>(cli: &Cli, out: Option<&Path>, result: T) -> Result<()> {
    let s = to_json(&Report { version: VERSION, config: cli, result });
    match out {
        Some(p) => std::fs::write(p, s + "\n").map_err(|e| LabError::Config(format!("{}: {e}", p.display()))),
        None => {
            println!("{s}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct ConstantResult {
    class: ConstantClass,
    value: f64,
    argmax: String,
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    membership: Option<commlab::weights::Membership>,
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| LabError::Config(format!("--{name} is required for this class")))
}

fn cmd_constant(cli: &Cli, a: &ConstantArgs) -> Result<()> {
    let ws = a.weights.load()?;
    let grid = ws[0].grid();
    let fam = family(&a.family, grid)?;
    let vector = |ws: &[Weight]| -> Result<VectorWeight> {
        let pl = if a.p_list.is_empty() { vec![2.0; ws.len()] } else { a.p_list.clone() };
        let mut prof = ExponentProfile::multilinear(pl).map_err(config)?;
        if !a.r_list.is_empty() {
            prof = prof.with_r(a.r_list.clone()).map_err(config)?;
        }
        VectorWeight::new(ws.to_vec(), prof).map_err(config)
    };
    let single = || -> Result<&Weight> {
        if ws.len() != 1 {
            return Err(LabError::Config("this class takes exactly one weight".into()));
        }
        Ok(&ws[0])
    };
    let mut membership = None;
    let e = match a.class {
        ConstantClass::Ap => ap_constant(single()?, need(a.p, "p")?, &fam),
        ConstantClass::Rh => rh_constant(single()?, need(a.q, "q")?, &fam),
        ConstantClass::Apq => apq_constant(single()?, need(a.p, "p")?, need(a.q, "q")?, &fam),
        ConstantClass::AVector => a_vector_constant(&vector(&ws)?, &fam),
        ConstantClass::APqVector => a_pq_vector_constant(&vector(&ws)?, need(a.q, "q")?, &fam),
        ConstantClass::APr => {
            if a.r_list.is_empty() {
                return Err(LabError::Config("--r-list is required for a_pr".into()));
            }
            a_pr_constant(&vector(&ws)?, &fam)
        }
        ConstantClass::Membership => {
            let m = membership_restricted(
                single()?,
                need(a.p, "p")?,
                need(a.r_minus, "r-minus")?,
                a.r_plus.unwrap_or(f64::INFINITY),
                &fam,
            )
            .map_err(config)?;
            let e = commlab::grid::Extremum { value: m.constant, cube: grid.whole() };
            membership = Some(m);
            Ok(e)
        }
    }
    .map_err(config)?;
    emit(
        cli,
        a.out.as_deref(),
        ConstantResult {
            class: a.class,
            value: e.value,
            argmax: if membership.is_some() { String::new() } else { e.cube.to_string() },
            family: fam.kind.name().to_string(),
            membership,
        },
    )
}

fn linear_op(name: LinearName, grid: Grid, alpha: f64) -> Result<LinearKernelOp> {
    match name {
        LinearName::Hilbert | LinearName::HilbertDirect => LinearKernelOp::hilbert(grid),
        LinearName::Riesz => LinearKernelOp::riesz(grid, alpha),
        LinearName::DoubleHilbert => LinearKernelOp::double_hilbert(grid),
        LinearName::Maximal => Err(LabError::Config("the maximal function is not linear".into())),
    }
    .map_err(config)
}

fn cmd_norm(cli: &Cli, a: &NormArgs) -> Result<()> {
    let w = a.weights.single()?;
    let op = linear_op(a.operator, w.grid(), a.alpha)?;
    let est = weighted_norm(&op, &w, a.p, a.q).map_err(config)?;
    emit(cli, a.out.as_deref(), est)
}

fn bilinear_op(name: OperatorName, grid: Grid, s: f64) -> Result<Option<BilinearKernelOp>> {
    Ok(match name.bilinear() {
        Some(BilinearKind::BiS { .. }) => Some(BilinearKernelOp::new(BilinearKind::BiS { s }, grid).map_err(config)?),
        Some(k) => Some(BilinearKernelOp::new(k, grid).map_err(config)?),
        None => None,
    })
}

fn as_linear(name: OperatorName) -> LinearName {
    match name {
        OperatorName::Hilbert => LinearName::Hilbert,
        OperatorName::HilbertDirect => LinearName::HilbertDirect,
        OperatorName::Riesz => LinearName::Riesz,
        OperatorName::DoubleHilbert => LinearName::DoubleHilbert,
        _ => LinearName::Maximal,
    }
}

#[derive(Serialize)]
struct ApplyResult {
    output: PathBuf,
    max_abs: f64,
}

fn second_input(p: &Option<PathBuf>, f: &GridFn) -> Result<GridFn> {
    let p = p.as_ref().ok_or_else(|| LabError::Config("--input2 is required for bilinear operators".into()))?;
    let g = read_gridfn(p)?;
    if g.grid != f.grid {
        return Err(LabError::Config("inputs live on different grids".into()));
    }
    Ok(g)
}

fn cmd_operator(cli: &Cli, a: &OperatorArgs) -> Result<()> {
    let f = read_gridfn(&a.input)?;
    let out = if let Some(op) = bilinear_op(a.operator, f.grid, a.s)? {
        op.apply(&f, &second_input(&a.input2, &f)?).map_err(config)?
    } else {
        match a.operator {
            OperatorName::Hilbert => commlab::operators::hilbert(&f),
            OperatorName::HilbertDirect => commlab::operators::hilbert_direct(&f),
            OperatorName::Riesz => commlab::operators::riesz(&f, a.alpha),
            OperatorName::DoubleHilbert => commlab::operators::double_hilbert(&f),
            _ => maximal(&f, &family(&a.family, f.grid)?),
        }
        .map_err(config)?
    };
    write_gridfn(&a.output, &out)?;
    if a.report.is_some() {
        emit(cli, a.report.as_deref(), ApplyResult { output: a.output.clone(), max_abs: out.max_abs() })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CommutatorResult {
    output: PathBuf,
    method: Method,
    symbol_norms: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    imag_residue: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contour_warning: Option<bool>,
    /// Relative ℓ² gap between the direct and contour results.
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_error: Option<f64>,
}

fn cmd_commutator(cli: &Cli, a: &CommutatorArgs) -> Result<()> {
    let f = read_gridfn(&a.input)?;
    let grid_args = GridArgs { n: Some(f.grid.n_points), dim: f.grid.dim };
    let syms = a.symbols.load(&grid_args)?;
    let norm_family = match f.grid.dim {
        1 => FamilyKind::AllIntervals,
        _ => FamilyKind::DyadicRectangles,
    };
    let fam = CubeFamily::new(norm_family, f.grid)?;
    let norms: Vec<f64> = syms.iter().map(|b| script_bmo_norm(b, &fam).map(|e| e.value)).collect::<Result<_>>()?;
    let mut res = CommutatorResult {
        output: a.output.clone(),
        method: a.method,
        symbol_norms: norms.clone(),
        delta: None,
        imag_residue: None,
        contour_warning: None,
        relative_error: None,
    };
    let (direct, contour) = if let Some(op) = bilinear_op(a.operator, f.grid, a.s)? {
        let g = second_input(&a.input2, &f)?;
        if a.multi_index.len() != 2 || syms.len() != 2 {
            return Err(LabError::Config("bilinear commutators need --multi-index i,j and two symbols".into()));
        }
        let alpha = [a.multi_index[0], a.multi_index[1]];
        let direct = match a.method {
            Method::Contour => None,
            _ => Some(commutator_multilinear_direct(&op, (&syms[0], &syms[1]), alpha, &f, &g).map_err(config)?),
        };
        let contour = match a.method {
            Method::Direct => None,
            _ => {
                let deltas = match a.delta {
                    Some(d) => vec![d, d],
                    None => {
                        let prof = ExponentProfile::multilinear(vec![2.0, 2.0])?;
                        let bn: Vec<f64> = norms.iter().map(|v| v.max(f64::MIN_POSITIVE)).collect();
                        default_delta_vector(&prof, &bn, 1.0)?
                    }
                };
                let spec = [ContourSpec::new(deltas[0], a.m_nodes)?, ContourSpec::new(deltas[1], a.m_nodes)?];
                let r = commutator_contour_multi(&op, (&syms[0], &syms[1]), alpha, &f, &g, spec)?;
                res.delta = Some(deltas);
                Some(r)
            }
        };
        (direct, contour)
    } else {
        let op = linear_op(as_linear(a.operator), f.grid, a.alpha)?;
        if syms.len() != 1 {
            return Err(LabError::Config("linear commutators take one symbol".into()));
        }
        let b = &syms[0];
        let direct = match a.method {
            Method::Contour => None,
            _ => Some(commutator_direct(&op, b, a.order, &f).map_err(config)?),
        };
        let contour = match a.method {
            Method::Direct => None,
            _ => {
                let d = match a.delta {
                    Some(d) => d,
                    None => default_delta(
                        &ExponentProfile::linear(2.0, 2.0, 2.0, 1.0, 2.0)?,
                        norms[0].max(f64::MIN_POSITIVE),
                    )?,
                };
                let r = commutator_contour(&op, b, a.order, &f, &ContourSpec::new(d, a.m_nodes).map_err(config)?)?;
                res.delta = Some(vec![d]);
                Some(r)
            }
        };
        (direct, contour)
    };
    if let Some(c) = &contour {
        res.imag_residue = Some(c.imag_residue);
        res.contour_warning = Some(c.warning);
    }
    if let (Some(d), Some(c)) = (&direct, &contour) {
        res.relative_error = Some(rel_err(&c.values.values, &d.values, 0.0));
    }
    let out = direct.or(contour.map(|c| c.values)).expect("one method ran");
    write_gridfn(&a.output, &out)?;
    emit(cli, a.report.as_deref(), res)
}

fn cmd_verify(a: &VerifyArgs) -> Result<SuiteReport> {
    let kind = match a.suite {
        SuiteArg::Exact => SuiteKind::Exact,
        SuiteArg::Empirical => SuiteKind::Empirical,
        SuiteArg::All => SuiteKind::All,
    };
    let size = match a.size {
        SizeArg::Smoke => SuiteSize::Smoke,
        SizeArg::Default => SuiteSize::Default,
        SizeArg::Full => SuiteSize::Full,
    };
    let mut cfg = SuiteConfig::new(kind, size, a.seed);
    if let Some(w) = a.weights {
        cfg.weights = w;
    }
    if let Some(s) = a.symbols {
        cfg.symbols = s;
    }
    let report = run_suite(&cfg)?;
    std::fs::create_dir_all(&a.out).map_err(|e| LabError::Config(format!("{}: {e}", a.out.display())))?;
    let write = |name: &str, s: String| {
        let p = a.out.join(name);
        std::fs::write(&p, s).map_err(|e| LabError::Config(format!("{}: {e}", p.display())))
    };
    write("verify_report.json", to_json(&report) + "\n")?;
    write("verify_report.csv", report.to_csv())?;
    for o in &report.outcomes {
        println!("{}", o.summary_line());
    }
    println!("exact violations: {}", report.exact_violations);
    Ok(report)
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let s = std::fs::read_to_string(&a.input).map_err(|e| LabError::Parse(format!("{}: {e}", a.input.display())))?;
    let r: SuiteReport = serde_json::from_str(&s)
        .map_err(|e| LabError::Parse(format!("{} line {} column {}: {e}", a.input.display(), e.line(), e.column())))?;
    println!("commlab {} seed {} suite {:?} size {:?}", r.version, r.config.seed, r.config.kind, r.config.size);
    for o in &r.outcomes {
        println!("{}", o.summary_line());
    }
    println!("exact violations: {}", r.exact_violations);
    if let Some(p) = &a.csv {
        std::fs::write(p, r.to_csv()).map_err(|e| LabError::Config(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn exit_code(e: &LabError) -> u8 {
    match e {
        LabError::Numerical { .. } | LabError::Range(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let r = match &cli.command {
        Command::Constant(a) => cmd_constant(&cli, a),
        Command::Norm(a) => cmd_norm(&cli, a),
        Command::Operator(a) => cmd_operator(&cli, a),
        Command::Commutator(a) => cmd_commutator(&cli, a),
        Command::Verify(a) => match cmd_verify(a) {
            Ok(rep) if rep.exact_violations > 0 => return ExitCode::from(1),
            Ok(_) => Ok(()),
            Err(e) => Err(e),
        },
        Command::Report(a) => cmd_report(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
