//! Suite configuration and runner.

use super::corpus::{probes, SymbolCorpus, WeightCorpus};
use super::empirical::{
    check_converse_bilinear, check_converse_linear, check_crw_quantitative, check_double_hilbert_commutator,
    check_fractional, check_john_nirenberg, check_main_linear, check_multilinear, check_perez_rh,
    check_rect_reverse, CrwConfig, MultilinearConfig,
};
use super::exact::{
    check_ap_algebra, check_bmo_rect_equivalence, check_bmo_vs_script, check_fractional_identity,
    check_lemma_bmo_to_ap, check_lemma_product, check_prop21,
};
use super::{CheckOutcome, Classification};
use crate::grid::{CubeFamily, FamilyKind, Grid};
use crate::operators::{BoydOptions, LinearKernelOp};
use crate::weights::ExponentProfile;
use crate::{LabError, Result, VERSION};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Exact,
    Empirical,
    All,
}

impl FromStr for SuiteKind {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SuiteKind::Exact),
            "empirical" => Ok(SuiteKind::Empirical),
            "all" => Ok(SuiteKind::All),
            _ => Err(LabError::Config(format!("unknown suite '{s}' (exact, empirical, all)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteSize {
    /// Small grids and corpora for CI.
    Smoke,
    /// The documented default corpus.
    Default,
    /// Default plus the η sweep and the larger operator grids.
    Full,
}

impl FromStr for SuiteSize {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoke" => Ok(SuiteSize::Smoke),
            "default" => Ok(SuiteSize::Default),
            "full" => Ok(SuiteSize::Full),
            _ => Err(LabError::Config(format!("unknown size '{s}' (smoke, default, full)"))),
        }
    }
}

/// Every knob of a suite run; embedded verbatim in the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub kind: SuiteKind,
    pub size: SuiteSize,
    pub seed: u64,
    pub n_1d: usize,
    pub n_2d: usize,
    pub weights: usize,
    pub symbols: usize,
    pub symbols_2d: usize,
    pub probes: usize,
    pub etas: Vec<f64>,
    pub lambda_factors: Vec<f64>,
    pub perez_n: usize,
    pub perez_weights: usize,
    pub linear_n: usize,
    pub linear_weights: usize,
    pub linear_symbols: usize,
    pub fractional_n: usize,
    pub fractional_weights: usize,
    pub fractional_symbols: usize,
    pub crw: CrwConfig,
    pub multilinear: MultilinearConfig,
    pub multilinear_sizes: Vec<usize>,
    pub converse_n: usize,
    pub converse_symbols: usize,
    pub converse_bilinear_n: usize,
    pub double_hilbert_sizes: Vec<usize>,
    pub double_hilbert_symbols: usize,
}

impl SuiteConfig {
    pub fn new(kind: SuiteKind, size: SuiteSize, seed: u64) -> Self {
        match size {
            SuiteSize::Smoke => SuiteConfig {
                kind,
                size,
                seed,
                n_1d: 64,
                n_2d: 16,
                weights: 24,
                symbols: 8,
                symbols_2d: 4,
                probes: 8,
                etas: vec![2.0],
                lambda_factors: vec![0.0, -1.0, -0.5, 0.5, 1.0],
                perez_n: 128,
                perez_weights: 12,
                linear_n: 64,
                linear_weights: 6,
                linear_symbols: 3,
                fractional_n: 32,
                fractional_weights: 4,
                fractional_symbols: 2,
                crw: CrwConfig { n: 64, a2_targets: vec![1.0, 4.0, 16.0], symbols: 2, ..CrwConfig::default() },
                multilinear: MultilinearConfig { n: 32, vector_weights: 3, symbols: 2, starts: 3, rounds: 4, ..MultilinearConfig::default() },
                multilinear_sizes: vec![32],
                converse_n: 64,
                converse_symbols: 3,
                converse_bilinear_n: 16,
                double_hilbert_sizes: vec![16],
                double_hilbert_symbols: 2,
            },
            SuiteSize::Default | SuiteSize::Full => {
                let full = size == SuiteSize::Full;
                SuiteConfig {
                    kind,
                    size,
                    seed,
                    n_1d: 512,
                    n_2d: 64,
                    weights: 200,
                    symbols: 50,
                    symbols_2d: 50,
                    probes: 20,
                    etas: if full { vec![4.0 / 3.0, 2.0, 4.0] } else { vec![2.0] },
                    lambda_factors: vec![0.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0],
                    perez_n: 1024,
                    perez_weights: 100,
                    linear_n: 256,
                    linear_weights: if full { 48 } else { 24 },
                    linear_symbols: if full { 16 } else { 8 },
                    fractional_n: 128,
                    fractional_weights: 12,
                    fractional_symbols: 4,
                    crw: CrwConfig::default(),
                    multilinear: MultilinearConfig::default(),
                    multilinear_sizes: if full { vec![64, 128, 256] } else { vec![64] },
                    converse_n: 256,
                    converse_symbols: 20,
                    converse_bilinear_n: 32,
                    double_hilbert_sizes: if full { vec![32, 64, 128] } else { vec![32, 64] },
                    double_hilbert_symbols: 4,
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("weights", self.weights),
            ("symbols", self.symbols),
            ("symbols_2d", self.symbols_2d),
            ("probes", self.probes),
            ("perez_weights", self.perez_weights),
            ("linear_weights", self.linear_weights),
            ("linear_symbols", self.linear_symbols),
            ("fractional_weights", self.fractional_weights),
            ("fractional_symbols", self.fractional_symbols),
            ("converse_symbols", self.converse_symbols),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, c)| *c == 0) {
            return Err(LabError::Config(format!("empty corpus: {name} = 0")));
        }
        if self.etas.is_empty() || self.etas.iter().any(|e| !(*e > 1.0 && e.is_finite())) {
            return Err(LabError::Config("eta values must lie in (1, inf)".into()));
        }
        for n in [self.n_1d, self.perez_n, self.linear_n, self.fractional_n, self.converse_n, self.converse_bilinear_n] {
            Grid::d1(n).map_err(|e| LabError::Config(e.to_string()))?;
        }
        Grid::d2(self.n_2d).map_err(|e| LabError::Config(e.to_string()))?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub version: String,
    pub config: SuiteConfig,
    pub outcomes: Vec<CheckOutcome>,
    pub exact_violations: usize,
    pub passed: bool,
}

impl SuiteReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("check_id,classification,instances_run,violations,nonfinite,max_ratio,harness_sanity,passed,argmax\n");
        for o in &self.outcomes {
            let class = match o.classification {
                Classification::Exact => "exact_discrete",
                Classification::Empirical => "empirical",
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},\"{}\"",
                o.check_id,
                class,
                o.instances_run,
                o.violations,
                o.nonfinite,
                crate::io::format_float(o.max_ratio),
                o.harness_sanity,
                o.passed,
                o.argmax.replace('"', "'")
            );
        }
        s
    }
}

/// Runs the selected suite. The only error is a rejected configuration;
/// failures inside a check are recorded in its outcome.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let exact = matches!(cfg.kind, SuiteKind::Exact | SuiteKind::All);
    let empirical = matches!(cfg.kind, SuiteKind::Empirical | SuiteKind::All);
    let seed = cfg.seed;
    let mut out = Vec::new();

    let g1 = Grid::d1(cfg.n_1d)?;
    let all = CubeFamily::new(FamilyKind::AllIntervals, g1)?;
    let weights = WeightCorpus::new(g1, seed).take(cfg.weights)?;
    let symbols = SymbolCorpus::new(g1, seed).take(cfg.symbols, &all)?;
    let g2 = Grid::d2(cfg.n_2d)?;
    let sc2 = SymbolCorpus::new(g2, seed);
    let (sym2, names2): (Vec<_>, Vec<_>) = (0..cfg.symbols_2d).map(|i| sc2.get(i)).collect::<Result<Vec<_>>>()?.into_iter().unzip();

    if exact {
        out.push(check_lemma_bmo_to_ap(&symbols, &all, &cfg.lambda_factors));
        out.push(check_lemma_product(&weights, &symbols, &all, &[1.5, 2.0, 3.0], &cfg.etas, &cfg.lambda_factors));
        out.push(check_ap_algebra(&weights, &all, &[[2.0, 2.0], [4.0, 4.0], [3.0, 6.0], [1.5, 4.0]]));
        out.push(check_prop21(&weights, &all));
        out.push(check_bmo_vs_script(&symbols, &all));
        out.push(check_fractional_identity(&weights, &all, 0.25, 2.0));
        out.push(check_bmo_rect_equivalence(&sym2, &names2));
    }
    if empirical {
        let gp = Grid::d1(cfg.perez_n)?;
        let pw = WeightCorpus::new(gp, seed).take(cfg.perez_weights)?;
        out.push(check_perez_rh(&pw, &CubeFamily::new(FamilyKind::AllIntervals, gp)?, 2.0));
        out.push(check_john_nirenberg(&symbols, &all));
        out.push(check_rect_reverse(&sym2, &names2));

        let gl = Grid::d1(cfg.linear_n)?;
        let fl = CubeFamily::new(FamilyKind::AllIntervals, gl)?;
        let lw = WeightCorpus::new(gl, seed).take(cfg.linear_weights)?;
        let ls = SymbolCorpus::new(gl, seed).take(cfg.linear_symbols, &fl)?;
        let pr = probes(gl, cfg.probes, seed)?;
        let h = LinearKernelOp::hilbert(gl)?;
        for &eta in &cfg.etas {
            let prof = ExponentProfile::linear(2.0, 2.0, 2.0, 1.0, eta)?;
            let mut res = check_main_linear(&h, &lw, &ls, &pr, &prof, &fl, &[1, 2]);
            if cfg.etas.len() > 1 {
                for o in res.iter_mut() {
                    o.check_id = format!("{}[eta={eta:.4}]", o.check_id);
                }
            }
            out.extend(res);
        }
        out.push(check_crw_quantitative(&cfg.crw));

        let gf = Grid::d1(cfg.fractional_n)?;
        let ff = CubeFamily::new(FamilyKind::AllIntervals, gf)?;
        let fw = WeightCorpus::new(gf, seed).take(cfg.fractional_weights)?;
        let fs = SymbolCorpus::new(gf, seed).take(cfg.fractional_symbols, &ff)?;
        let boyd = BoydOptions { max_iter: 100, ..BoydOptions::default() };
        out.extend(check_fractional(&fw, &fs, &ff, 0.25, 2.0, &[1, 2], &boyd));

        for &n in &cfg.multilinear_sizes {
            out.push(check_multilinear(&MultilinearConfig { n, seed, ..cfg.multilinear.clone() }));
        }

        let gc = Grid::d1(cfg.converse_n)?;
        let fc = CubeFamily::new(FamilyKind::AllIntervals, gc)?;
        let cs = SymbolCorpus::new(gc, seed).take(cfg.converse_symbols, &fc)?;
        let hc = LinearKernelOp::hilbert(gc)?;
        out.extend(check_converse_linear(&hc, &cs, 0.5, 8, &[0.0, 0.1, 0.2, 0.3, 0.4]));
        out.push(check_converse_bilinear(cfg.converse_bilinear_n, [4.0, 4.0], 0.5, 2, 3, seed));
        out.push(check_double_hilbert_commutator(&cfg.double_hilbert_sizes, cfg.double_hilbert_symbols, seed));
    }
    let exact_violations = out
        .iter()
        .filter(|o| o.classification == Classification::Exact)
        .map(|o| o.violations)
        .sum();
    let passed = out.iter().all(|o| o.passed);
    Ok(SuiteReport { version: VERSION.to_string(), config: cfg.clone(), outcomes: out, exact_violations, passed })
}
