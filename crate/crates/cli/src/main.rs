//! Command-line driver: parses one JSON config, dispatches to the kernel,
//! writes deterministic JSON/CSV artifacts into the output directory.
//!
//! Exit codes: 0 all checks clean; 1 a residual check failed; 2 config
//! error; 3 computation error.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use num::complex::Complex;
use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use berk_core::dendrite::{classify, enumerate_cylinders, is_admissible, Word};
use berk_core::padic::{rat_to_f64, Rat};
use berk_core::schottky::{
    critical_exponent_estimate, documented_kms_pair, hamiltonian_conjugation_residual,
    hamiltonian_eigenvalues, kms_residual, poincare_series, ps_measure_estimate,
    quasiconformality_report, GroupWord, HamiltonianBasis, PoincareMode,
};
use berk_core::shiftops::{
    cyclic_isometry_check, partition_identity, perron_frobenius_apply, pvm_consistency,
    spectral_integral, verify_relations, TruncatedBasis,
};
use berk_core::spectral::{
    assemble_triple, check_even_triple, check_morphism, crat, tower_resolvent_profile,
    triple_morphism, CRat,
};
use berk_core::tree::build_graph_of_discs;

use config::{parse_rat, RunConfig};

#[derive(Parser)]
#[command(name = "berk", about = "Berkovich-line computational kernel")]
struct Cli {
    /// Path to the JSON run configuration
    #[arg(long, global = true, default_value = "config.json")]
    config: PathBuf,
    /// Output directory for artifacts
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (orbit enumeration only)
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Seed for sampled checks
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Graphs of discs and their spectral triples
    Tree {
        #[command(subcommand)]
        sub: TreeCmd,
    },
    /// Symbolic dendrite coordinates
    Dendrite {
        #[command(subcommand)]
        sub: DendriteCmd,
    },
    /// Truncated shift-operator representation
    Shift {
        #[command(subcommand)]
        sub: ShiftCmd,
    },
    /// Schottky-group boundary dynamics
    Group {
        #[command(subcommand)]
        sub: GroupCmd,
    },
}

#[derive(Subcommand)]
enum TreeCmd {
    /// Build the graph of discs and write it as JSON
    Build,
    /// Dirac spectrum as CSV, cross-checked against the eigensolver
    Spectrum,
    /// Even-triple axiom residuals on seeded random functions
    Axioms,
    /// Morphism identities for a leaf extension of trees
    Morphism,
    /// Resolvent-norm profile of a tower of trees
    Tower,
}

#[derive(Subcommand)]
enum DendriteCmd {
    /// Classify configured symbolic points into types I-IV
    Classify,
    /// Check admissibility of configured words
    Admissible,
}

#[derive(Subcommand)]
enum ShiftCmd {
    /// Defining relations of the subshift algebra
    VerifyRelations,
    /// Σ_q S_q S_q* against the letter-start projection
    Partition,
    /// Apply the Perron-Frobenius operator to a basis vector
    Pf,
    /// Projection-valued-measure refinement and orthogonality
    Pvm,
    /// Spectral integral of a configured simple function
    SpectralIntegral,
    /// Cyclic-vector isometry residuals
    Cyclic,
}

#[derive(Subcommand)]
enum GroupCmd {
    /// Reduced-word orbit of the Gauss point
    Orbit,
    /// Critical-exponent estimate from orbital counting
    Delta,
    /// Poincaré series partial sums
    Poincare,
    /// Orbital-counting boundary measure
    PsMeasure,
    /// Quasiconformality residuals of the sampled measure
    Quasiconformal,
    /// KMS residual at the configured inverse temperature
    Kms,
    /// Hamiltonian eigenvalues and conjugation residual
    Hamiltonian,
}

/// 15 significant digits, deterministic across runs.
fn fmt_f64(x: f64) -> String {
    format!("{x:.14e}")
}

fn write_json(out: &Path, name: &str, mut value: Value) -> anyhow::Result<()> {
    if let Some(obj) = value.as_object_mut() {
        obj.insert("schema".into(), json!("berkline/1"));
    }
    let path = out.join(name);
    let mut file = std::fs::File::create(&path)
        .with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut file, &value)?;
    file.write_all(b"\n")?;
    Ok(())
}

fn write_text(out: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    let path = out.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

/// Outcome of a subcommand: whether every residual check passed.
struct Outcome {
    clean: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match RunConfig::load(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("cannot create output directory: {e}");
        return ExitCode::from(2);
    }
    let seed = cli.seed.unwrap_or(cfg.seed);
    match run(&cli, &cfg, seed) {
        Ok(Outcome { clean: true }) => ExitCode::SUCCESS,
        Ok(Outcome { clean: false }) => {
            eprintln!("residual checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("computation error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli, cfg: &RunConfig, seed: u64) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Tree { sub } => run_tree(cli, cfg, seed, sub),
        Command::Dendrite { sub } => run_dendrite(cli, cfg, sub),
        Command::Shift { sub } => run_shift(cli, cfg, sub),
        Command::Group { sub } => run_group(cli, cfg, sub),
    }
}

fn configured_tree(cfg: &RunConfig) -> anyhow::Result<berk_core::tree::FiniteTree> {
    let ctx = cfg.ctx()?;
    let disks: Vec<_> = cfg
        .disks
        .iter()
        .map(|d| d.to_point())
        .collect::<anyhow::Result<_>>()?;
    build_graph_of_discs(&ctx, &disks).map_err(|e| anyhow!("{e}"))
}

fn run_tree(cli: &Cli, cfg: &RunConfig, seed: u64, sub: &TreeCmd) -> anyhow::Result<Outcome> {
    match sub {
        TreeCmd::Build => {
            let tree = configured_tree(cfg)?;
            let value = serde_json::to_value(&tree)?;
            write_json(&cli.out, "tree.json", value)?;
            Ok(Outcome { clean: true })
        }
        TreeCmd::Spectrum => {
            let tree = configured_tree(cfg)?;
            let st = assemble_triple(tree);
            let analytic = st.analytic_spectrum();
            let eig = st.eigenvalues().map_err(|e| anyhow!("{e}"))?;
            // cross-check the eigensolver against the exact block spectrum
            let mut expected: Vec<f64> = Vec::new();
            for (v, m) in &analytic {
                for _ in 0..*m {
                    expected.push(rat_to_f64(v));
                }
            }
            let mut clean = expected.len() == eig.len();
            if clean {
                clean = expected
                    .iter()
                    .zip(&eig)
                    .all(|(a, b)| (a - b).abs() <= 1e-9);
            }
            let mut csv = String::from("eigenvalue,eigenvalue_float,multiplicity\n");
            for (v, m) in &analytic {
                csv.push_str(&format!("{v},{},{m}\n", fmt_f64(rat_to_f64(v))));
            }
            write_text(&cli.out, "spectrum.csv", &csv)?;
            Ok(Outcome { clean })
        }
        TreeCmd::Axioms => {
            let tree = configured_tree(cfg)?;
            let nv = tree.vertex_count();
            let st = assemble_triple(tree);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fs: Vec<Vec<CRat>> = (0..4)
                .map(|_| {
                    (0..nv)
                        .map(|_| {
                            let num = rng.gen_range(-12i64..=12);
                            let den = rng.gen_range(1i64..=9);
                            CRat::new(
                                Rat::new(num.into(), den.into()),
                                Rat::new(
                                    rng.gen_range(-12i64..=12).into(),
                                    rng.gen_range(1i64..=9).into(),
                                ),
                            )
                        })
                        .collect()
                })
                .collect();
            let report = check_even_triple(&st, &fs).map_err(|e| anyhow!("{e}"))?;
            let clean = report.all_zero();
            // commutator bound against the Lipschitz constant per function
            let mut bound_ok = true;
            let mut commutators = Vec::new();
            for f in &fs {
                let cn = st.commutator_norm(f);
                let lip = st.lipschitz_constant(f);
                bound_ok &= cn <= lip + 1e-9;
                commutators.push(json!({
                    "commutator_norm": fmt_f64(cn),
                    "lipschitz_constant": fmt_f64(lip),
                }));
            }
            write_json(
                &cli.out,
                "axioms_report.json",
                json!({
                    "even_triple": serde_json::to_value(&report)?,
                    "commutator_bound": commutators,
                    "operator_norm": st.operator_norm().to_string(),
                }),
            )?;
            Ok(Outcome {
                clean: clean && bound_ok,
            })
        }
        TreeCmd::Morphism => {
            let ctx = cfg.ctx()?;
            let spec = cfg
                .morphism
                .as_ref()
                .ok_or_else(|| anyhow!("config block \"morphism\" is required"))?;
            let to_points = |ds: &Vec<config::DiskSpec>| -> anyhow::Result<Vec<_>> {
                ds.iter().map(|d| d.to_point()).collect()
            };
            let source = build_graph_of_discs(&ctx, &to_points(&spec.source_disks)?)
                .map_err(|e| anyhow!("{e}"))?;
            let target = build_graph_of_discs(&ctx, &to_points(&spec.target_disks)?)
                .map_err(|e| anyhow!("{e}"))?;
            let s_triple = assemble_triple(source);
            let t_triple = assemble_triple(target);
            let m = triple_morphism(&s_triple, &t_triple).map_err(|e| anyhow!("{e}"))?;
            let nv = s_triple.tree().vertex_count();
            let f: Vec<CRat> = (0..nv)
                .map(|k| crat(Rat::new((2 * k as i64 + 1).into(), 3.into())))
                .collect();
            let mut clean = true;
            let mut reports = Vec::new();
            for k in 0..s_triple.dim() {
                let mut psi = vec![CRat::zero(); s_triple.dim()];
                psi[k] = crat(Rat::new(1.into(), 1.into()));
                let r = check_morphism(&m, &f, &psi).map_err(|e| anyhow!("{e}"))?;
                clean &= r.all_zero();
                reports.push(serde_json::to_value(&r)?);
            }
            write_json(
                &cli.out,
                "morphism_report.json",
                json!({ "per_basis_vector": reports }),
            )?;
            Ok(Outcome { clean })
        }
        TreeCmd::Tower => {
            let ctx = cfg.ctx()?;
            let spec = cfg
                .tower
                .as_ref()
                .ok_or_else(|| anyhow!("config block \"tower\" is required"))?;
            let mut stages = Vec::new();
            for stage in &spec.stages {
                let disks: Vec<_> = stage
                    .iter()
                    .map(|d| d.to_point())
                    .collect::<anyhow::Result<_>>()?;
                stages.push(assemble_triple(
                    build_graph_of_discs(&ctx, &disks).map_err(|e| anyhow!("{e}"))?,
                ));
            }
            let lambda = Complex::new(spec.lambda_re, spec.lambda_im);
            let profile =
                tower_resolvent_profile(&stages, lambda).map_err(|e| anyhow!("{e}"))?;
            write_json(
                &cli.out,
                "tower_profile.json",
                json!({
                    "lambda": {"re": fmt_f64(lambda.re), "im": fmt_f64(lambda.im)},
                    "norms": stages
                        .iter()
                        .map(|t| t.operator_norm().to_string())
                        .collect::<Vec<_>>(),
                    "profile": profile.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>(),
                }),
            )?;
            Ok(Outcome { clean: true })
        }
    }
}

fn run_dendrite(cli: &Cli, cfg: &RunConfig, sub: &DendriteCmd) -> anyhow::Result<Outcome> {
    let (cs, n_letters, depth, _) = cfg.comb_system()?;
    let spec = cfg.dendrite.as_ref();
    match sub {
        DendriteCmd::Classify => {
            let points = spec
                .map(|s| s.points.as_slice())
                .unwrap_or(&[])
                .iter()
                .map(|p| p.to_point(&cs))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let mut rows = Vec::new();
            for p in &points {
                let class = classify(&cs, p).map_err(|e| anyhow!("{e}"))?;
                rows.push(json!({
                    "point": p.to_json(&cs),
                    "type": class.to_string(),
                }));
            }
            write_json(&cli.out, "classification.json", json!({ "points": rows }))?;
            Ok(Outcome { clean: true })
        }
        DendriteCmd::Admissible => {
            let words = spec.map(|s| s.words.as_slice()).unwrap_or(&[]);
            let mut rows = Vec::new();
            for w in words {
                let word = Word::parse(&cs, w).map_err(|e| anyhow!("{e}"))?;
                let ok = is_admissible(&cs, &word).map_err(|e| anyhow!("{e}"))?;
                rows.push(json!({ "word": word.display(&cs), "admissible": ok }));
            }
            // also report the enumerated truncation for reference
            let all = enumerate_cylinders(&cs, n_letters, depth)
                .map_err(|e| anyhow!("{e}"))?;
            write_json(
                &cli.out,
                "admissibility.json",
                json!({
                    "queries": rows,
                    "enumerated": all.iter().map(|w| w.display(&cs)).collect::<Vec<_>>(),
                }),
            )?;
            Ok(Outcome { clean: true })
        }
    }
}

const BASIS_CAP: usize = 50_000;

fn configured_basis(cfg: &RunConfig) -> anyhow::Result<TruncatedBasis> {
    let (cs, n_letters, depth, extras) = cfg.comb_system()?;
    let tb = TruncatedBasis::new(cs, n_letters, depth, extras).map_err(|e| anyhow!("{e}"))?;
    if tb.len() > BASIS_CAP {
        return Err(anyhow!(
            "truncated basis has {} points, cap is {BASIS_CAP}",
            tb.len()
        ));
    }
    Ok(tb)
}


fn run_shift(cli: &Cli, cfg: &RunConfig, sub: &ShiftCmd) -> anyhow::Result<Outcome> {
    let tb = configured_basis(cfg)?;
    let spec = cfg.shift.as_ref();
    match sub {
        ShiftCmd::VerifyRelations => {
            let report = verify_relations(&tb).map_err(|e| anyhow!("{e}"))?;
            let clean = report.all_zero();
            write_json(
                &cli.out,
                "relations_report.json",
                json!({
                    "basis_points": tb.len(),
                    "total_mismatches": report.total_mismatches(),
                    "checks": serde_json::to_value(&report.checks)?,
                }),
            )?;
            Ok(Outcome { clean })
        }
        ShiftCmd::Partition => {
            let report = partition_identity(&tb).map_err(|e| anyhow!("{e}"))?;
            let clean = report.residual == 0;
            write_json(&cli.out, "partition_report.json", serde_json::to_value(&report)?)?;
            Ok(Outcome { clean })
        }
        ShiftCmd::Pf => {
            let word_str = spec
                .and_then(|s| s.pf_word.as_deref())
                .ok_or_else(|| anyhow!("shift.pf_word is required"))?;
            let word = Word::parse(tb.comb(), word_str).map_err(|e| anyhow!("{e}"))?;
            if word.is_empty() {
                return Err(anyhow!("pf_word must be nonempty"));
            }
            let target = berk_core::dendrite::SymbolicPoint::new(
                tb.comb(),
                word.clone(),
                berk_core::dendrite::Tail::Letter(word.last_letter().unwrap()),
            )
            .map_err(|e| anyhow!("{e}"))?;
            let idx = (0..tb.len())
                .find(|&i| tb.point(i) == &target)
                .ok_or_else(|| anyhow!("closure of {} is outside the basis", word_str))?;
            let mut v = vec![CRat::zero(); tb.len()];
            v[idx] = crat(Rat::new(1.into(), 1.into()));
            let out = perron_frobenius_apply(&tb, &v).map_err(|e| anyhow!("{e}"))?;
            let entries: Vec<Value> = out
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.re.is_zero() || !c.im.is_zero())
                .map(|(i, c)| {
                    json!({
                        "point": tb.point(i).to_json(tb.comb()),
                        "re": c.re.to_string(),
                        "im": c.im.to_string(),
                    })
                })
                .collect();
            write_json(
                &cli.out,
                "pf_vector.json",
                json!({ "input": word.display(tb.comb()), "output": entries }),
            )?;
            Ok(Outcome { clean: true })
        }
        ShiftCmd::Pvm => {
            let report = pvm_consistency(&tb).map_err(|e| anyhow!("{e}"))?;
            let clean = report.all_zero();
            write_json(&cli.out, "pvm_report.json", serde_json::to_value(&report)?)?;
            Ok(Outcome { clean })
        }
        ShiftCmd::SpectralIntegral => {
            let terms_spec = spec
                .map(|s| s.simple_function.as_slice())
                .unwrap_or(&[]);
            if terms_spec.is_empty() {
                return Err(anyhow!("shift.simple_function is required"));
            }
            let mut terms = Vec::new();
            for t in terms_spec {
                let word = Word::parse(tb.comb(), &t.word).map_err(|e| anyhow!("{e}"))?;
                terms.push((crat(parse_rat(&t.coeff)?), word));
            }
            let op = spectral_integral(&tb, &terms).map_err(|e| anyhow!("{e}"))?;
            // multiplicativity and the sup-norm bound
            let prod = berk_core::shiftops::simple_product(&tb, &terms, &terms);
            let lhs = spectral_integral(&tb, &prod).map_err(|e| anyhow!("{e}"))?;
            let rhs = op.compose(&op);
            let mult_residual = lhs.max_entry_diff(&rhs);
            let sup: f64 = op.norm();
            let clean = mult_residual.is_zero();
            let mut csv = String::from("row,col,re,im\n");
            for (i, c) in op.diag.iter().enumerate() {
                if !c.re.is_zero() || !c.im.is_zero() {
                    csv.push_str(&format!("{i},{i},{},{}\n", c.re, c.im));
                }
            }
            write_text(&cli.out, "spectral_integral.csv", &csv)?;
            write_json(
                &cli.out,
                "spectral_integral.json",
                json!({
                    "norm": fmt_f64(sup),
                    "multiplicativity_residual": mult_residual.to_string(),
                }),
            )?;
            Ok(Outcome { clean })
        }
        ShiftCmd::Cyclic => {
            let choice = spec.and_then(|s| s.cyclic.as_ref());
            let mut f = vec![CRat::zero(); tb.len()];
            match choice {
                None | Some(config::CyclicSpec::Uniform) => {
                    for i in 0..tb.len() {
                        if tb.point_depth(i) == 1 {
                            f[i] = crat(Rat::new(1.into(), 1.into()));
                        }
                    }
                }
                Some(config::CyclicSpec::Delta { word }) => {
                    let w = Word::parse(tb.comb(), word).map_err(|e| anyhow!("{e}"))?;
                    let last = w
                        .last_letter()
                        .ok_or_else(|| anyhow!("delta word must be nonempty"))?;
                    let target = berk_core::dendrite::SymbolicPoint::new(
                        tb.comb(),
                        w,
                        berk_core::dendrite::Tail::Letter(last),
                    )
                    .map_err(|e| anyhow!("{e}"))?;
                    let idx = (0..tb.len())
                        .find(|&i| tb.point(i) == &target)
                        .ok_or_else(|| anyhow!("point outside basis"))?;
                    f[idx] = crat(Rat::new(1.into(), 1.into()));
                }
            }
            let report = cyclic_isometry_check(&tb, &f).map_err(|e| anyhow!("{e}"))?;
            let clean = report.max_residual <= 1e-12;
            write_json(
                &cli.out,
                "cyclic_report.json",
                json!({
                    "max_residual": fmt_f64(report.max_residual),
                    "checks": serde_json::to_value(&report.checks)?,
                }),
            )?;
            Ok(Outcome { clean })
        }
    }
}

fn run_group(cli: &Cli, cfg: &RunConfig, sub: &GroupCmd) -> anyhow::Result<Outcome> {
    let (group, spec) = cfg.schottky()?;
    let entries = group
        .orbit_with_threads(spec.length, cli.threads)
        .map_err(|e| anyhow!("{e}"))?;
    match sub {
        GroupCmd::Orbit => {
            let mut csv = String::from("word,length,distance\n");
            for e in &entries {
                csv.push_str(&format!("{},{},{}\n", e.word, e.word.len(), e.dist));
            }
            write_text(&cli.out, "orbit.csv", &csv)?;
            Ok(Outcome { clean: true })
        }
        GroupCmd::Delta => {
            let est = critical_exponent_estimate(&entries).map_err(|e| anyhow!("{e}"))?;
            write_json(
                &cli.out,
                "delta_report.json",
                json!({
                    "delta": fmt_f64(est.delta),
                    "residual": fmt_f64(est.residual),
                    "grid": est
                        .grid
                        .iter()
                        .map(|(r, n)| json!({"radius": fmt_f64(*r), "count": n}))
                        .collect::<Vec<_>>(),
                }),
            )?;
            Ok(Outcome { clean: true })
        }
        GroupCmd::Poincare => {
            let mode = match spec.poincare_mode.as_deref() {
                None | Some("rho") => PoincareMode::Rho,
                Some("diam") => PoincareMode::DiamLiteral,
                Some(other) => return Err(anyhow!("unknown poincare mode {other:?}")),
            };
            let s = match spec.s {
                Some(s) => s,
                None => critical_exponent_estimate(&entries)
                    .map_err(|e| anyhow!("{e}"))?
                    .delta,
            };
            let sum = poincare_series(&group, &entries, s, mode);
            write_json(
                &cli.out,
                "poincare.json",
                json!({
                    "s": fmt_f64(sum.s),
                    "mode": format!("{:?}", sum.mode),
                    "partial": fmt_f64(sum.partial),
                    "shells": sum.shells.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>(),
                    "tail_estimate": if sum.tail_estimate.is_finite() {
                        json!(fmt_f64(sum.tail_estimate))
                    } else {
                        json!("divergent")
                    },
                }),
            )?;
            Ok(Outcome { clean: true })
        }
        GroupCmd::PsMeasure => {
            let s = effective_s(spec, &entries)?;
            let sample = ps_measure_estimate(&group, &entries, s, &cfg.depth_rat()?)
                .map_err(|e| anyhow!("{e}"))?;
            let mut csv = String::from("cylinder,representative,weight\n");
            for atom in &sample.atoms {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    atom.cylinder.label,
                    atom.cylinder.rep,
                    fmt_f64(atom.weight)
                ));
            }
            write_text(&cli.out, "ps_measure.csv", &csv)?;
            Ok(Outcome { clean: true })
        }
        GroupCmd::Quasiconformal => {
            let s = effective_s(spec, &entries)?;
            let sample = ps_measure_estimate(&group, &entries, s, &cfg.depth_rat()?)
                .map_err(|e| anyhow!("{e}"))?;
            if spec.qc_generator == 0 || spec.qc_generator > group.rank() {
                return Err(anyhow!("qc_generator out of range"));
            }
            let gamma = group.generator(spec.qc_generator - 1).clone();
            let report = quasiconformality_report(&group, &sample, s, &gamma)
                .map_err(|e| anyhow!("{e}"))?;
            write_json(
                &cli.out,
                "quasiconformal_report.json",
                json!({
                    "delta": fmt_f64(s),
                    "max_relative_deviation": fmt_f64(report.max_relative_deviation),
                    "checks": report
                        .checks
                        .iter()
                        .map(|c| {
                            json!({
                                "label": c.label,
                                "mass": fmt_f64(c.mass),
                                "pulled_mass": fmt_f64(c.pulled_mass),
                                "log_ratio": fmt_f64(c.log_ratio),
                                "expected_log": fmt_f64(c.expected_log),
                                "relative_deviation": fmt_f64(c.relative_deviation),
                            })
                        })
                        .collect::<Vec<_>>(),
                }),
            )?;
            Ok(Outcome { clean: true })
        }
        GroupCmd::Kms => {
            let delta = critical_exponent_estimate(&entries)
                .map_err(|e| anyhow!("{e}"))?
                .delta;
            let beta = spec.beta.unwrap_or(delta);
            let s = spec.s.unwrap_or(beta);
            let sample = ps_measure_estimate(&group, &entries, s, &cfg.depth_rat()?)
                .map_err(|e| anyhow!("{e}"))?;
            let (a, b) = documented_kms_pair(&group).map_err(|e| anyhow!("{e}"))?;
            let report = kms_residual(&group, &sample, &a, &b, beta).map_err(|e| anyhow!("{e}"))?;
            let half = kms_residual(&group, &sample, &a, &b, beta / 2.0)
                .map_err(|e| anyhow!("{e}"))?;
            write_json(
                &cli.out,
                "kms_report.json",
                json!({
                    "beta": fmt_f64(beta),
                    "residual": fmt_f64(report.residual),
                    "residual_at_half_beta": fmt_f64(half.residual),
                    "lhs": {"re": fmt_f64(report.lhs.0), "im": fmt_f64(report.lhs.1)},
                    "rhs": {"re": fmt_f64(report.rhs.0), "im": fmt_f64(report.rhs.1)},
                }),
            )?;
            Ok(Outcome { clean: true })
        }
        GroupCmd::Hamiltonian => {
            let delta = critical_exponent_estimate(&entries)
                .map_err(|e| anyhow!("{e}"))?
                .delta;
            let s = spec.s.unwrap_or(delta);
            let sample = ps_measure_estimate(&group, &entries, s, &cfg.depth_rat()?)
                .map_err(|e| anyhow!("{e}"))?;
            let (a, _) = documented_kms_pair(&group).map_err(|e| anyhow!("{e}"))?;
            let mut words = vec![GroupWord::identity()];
            for e in entries.iter().filter(|e| e.word.len() <= 2) {
                if !e.word.is_empty() {
                    words.push(e.word.clone());
                }
            }
            let atoms: Vec<_> = sample
                .atoms
                .iter()
                .map(|at| at.cylinder.clone())
                .filter(|cyl| {
                    words.iter().all(|w| {
                        berk_core::group::busemann_gauss(group.ctx(), &group.word_matrix(w), &cyl.rep)
                            .is_ok()
                    })
                })
                .collect();
            let basis = HamiltonianBasis { atoms, words };
            let eig = hamiltonian_eigenvalues(&group, &basis).map_err(|e| anyhow!("{e}"))?;
            let mut tests = vec![vec![Complex::new(1.0, 0.0); basis.dim()]];
            for k in [0usize, basis.dim() / 2, basis.dim().saturating_sub(1)] {
                let mut v = vec![Complex::new(0.0, 0.0); basis.dim()];
                if k < basis.dim() {
                    v[k] = Complex::new(1.0, 0.0);
                    tests.push(v);
                }
            }
            let residual = hamiltonian_conjugation_residual(&group, &basis, &a, 0.7, &tests)
                .map_err(|e| anyhow!("{e}"))?;
            let clean = residual <= 1e-12;
            write_json(
                &cli.out,
                "hamiltonian_report.json",
                json!({
                    "dimension": basis.dim(),
                    "eigenvalues": eig.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>(),
                    "conjugation_residual": fmt_f64(residual),
                }),
            )?;
            Ok(Outcome { clean })
        }
    }
}

fn effective_s(
    spec: &config::GroupSpec,
    entries: &[berk_core::schottky::OrbitEntry],
) -> anyhow::Result<f64> {
    Ok(match spec.s {
        Some(s) => s,
        None => {
            critical_exponent_estimate(entries)
                .map_err(|e| anyhow!("{e}"))?
                .delta
        }
    })
}
