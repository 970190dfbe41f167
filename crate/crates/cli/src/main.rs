//! infrew: a workbench for infinitary rewriting over weakly orthogonal
//! systems. Loads rule files, classifies systems and infinite {P,S}-words,
//! runs the cluster/orthogonalization constructions, compresses staged
//! reductions, and replays the counterexample demos.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use infrew_core::clusters::{
    bullet, clusters, develop, diamond_join, invariant_holds, orthogonalize_trace, PeriodicFamily,
    RedexSet,
};
use infrew_core::lambda;
use infrew_core::reductions::{
    compress, join_bounded, parallel_moves, serialize_trace, spiral_omega, ParallelStep,
    ReductionTarget, Stage, StagedReduction,
};
use infrew_core::spwords::{letters_to_string, Letter, SpWord};
use infrew_core::term::{Position, Term};
use infrew_core::testgen;
use infrew_core::trs::{
    classify_orthogonality, critical_pairs, find_redexes, parse_with_rules, rewrite_at, MultiRedex,
    OrthoClass, Redex, Trs,
};

#[derive(Parser)]
#[command(name = "infrew", version, about = "infinitary rewriting workbench")]
struct Cli {
    /// Output format: text or json.
    #[arg(long, global = true, default_value = "text")]
    format: String,
    /// Depth bound for redex search and unfoldings.
    #[arg(long, global = true, default_value_t = 16)]
    depth: u32,
    /// Number of witness segments to construct.
    #[arg(long, global = true, default_value_t = 8)]
    segments: usize,
    /// Seed for randomized property-test verbs.
    #[arg(long, global = true, default_value_t = 20100616)]
    seed: u64,
    /// Iteration cap for joining constructions.
    #[arg(long, global = true, default_value_t = 32)]
    budget: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Checks orthogonality classes of a rule file.
    Check {
        /// `wo` (weakly orthogonal) or `ortho` (orthogonal).
        mode: String,
        file: PathBuf,
    },
    /// Lists all critical pairs of a rule file.
    CriticalPairs { file: PathBuf },
    /// Lists redexes of a term up to the depth bound.
    Redexes {
        file: PathBuf,
        #[arg(long)]
        term: String,
    },
    /// Reports the clusters of a term's redexes.
    Clusters {
        file: PathBuf,
        #[arg(long)]
        term: String,
        /// Periodic redex family `root:rule:loop` on a rational term.
        #[arg(long)]
        family: Option<String>,
    },
    /// Runs the orthogonalization algorithm and dumps the map.
    Orthogonalize {
        file: PathBuf,
        #[arg(long)]
        term: String,
        /// Explicit redex list `pos:rule,...`; defaults to all redexes.
        #[arg(long)]
        redexes: Option<String>,
        /// Run the randomized invariant suite over N subjects instead.
        #[arg(long)]
        random: Option<usize>,
    },
    /// Develops a multi-redex completely.
    Develop {
        file: PathBuf,
        #[arg(long)]
        term: String,
        #[arg(long)]
        redexes: String,
    },
    /// The triangle map target of a term.
    Bullet {
        file: PathBuf,
        #[arg(long)]
        term: String,
        /// Periodic redex family `root:rule:loop` instead of finite search.
        #[arg(long)]
        family: Option<String>,
    },
    /// Checks the triangle property over all multi-redexes of a term.
    TriangleTest {
        file: PathBuf,
        #[arg(long)]
        term: String,
    },
    /// Joins two multi-steps via orthogonalization.
    DiamondJoin {
        file: PathBuf,
        #[arg(long)]
        term: String,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
    },
    /// Compresses a staged reduction to length at most omega.
    Compress {
        /// Builtin fixture: `fg-omega` or a rule file with --term/--steps.
        #[arg(long)]
        fixture: Option<String>,
        file: Option<PathBuf>,
        #[arg(long)]
        term: Option<String>,
        /// Finite steps `pos:rule,...`.
        #[arg(long)]
        steps: Option<String>,
    },
    /// Projects a reduction and a parallel step across each other.
    Pml {
        #[arg(long)]
        fixture: Option<String>,
        file: Option<PathBuf>,
        #[arg(long)]
        term: Option<String>,
        #[arg(long)]
        steps: Option<String>,
        #[arg(long)]
        parallel: Option<String>,
    },
    /// Joins two finite reductions to frontier agreement depth.
    Join {
        file: PathBuf,
        #[arg(long)]
        term: String,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long, default_value_t = 8)]
        agree_depth: u32,
    },
    /// {P,S}-word analysis.
    Sp {
        #[command(subcommand)]
        cmd: SpCmd,
    },
    /// Lambda-side translation and checks.
    Lambda {
        #[command(subcommand)]
        cmd: LambdaCmd,
    },
    /// Counterexample demos.
    Demo {
        /// `un-failure` or `collapse`.
        which: String,
    },
}

#[derive(Subcommand)]
enum SpCmd {
    /// Classifies an infinite word spec.
    Classify { spec: String },
    /// Builds reduction witnesses towards a normal form or word.
    Witness {
        spec: String,
        /// `s`, `p`, or a word spec.
        #[arg(long)]
        to: String,
    },
    /// Normal form of a finite word.
    Nf { word: String },
}

#[derive(Subcommand)]
enum LambdaCmd {
    /// Translates a word spec into a lambda term.
    Translate {
        spec: String,
        #[arg(long, default_value_t = 0)]
        index: i64,
    },
    /// Checks the commuting square for the factor at a letter position.
    Square {
        spec: String,
        #[arg(long)]
        pos: u64,
        #[arg(long, default_value_t = 0)]
        index: i64,
    },
    /// Runs the scripted finite-term demo.
    Wwi,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

struct Out {
    json: bool,
}

impl Out {
    fn line(&self, text: &str, value: serde_json::Value) {
        if self.json {
            println!("{value}");
        } else {
            println!("{text}");
        }
    }
}

fn load(file: &PathBuf) -> Result<Trs> {
    let text =
        std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    Ok(Trs::parse(&text)?)
}

fn parse_term(trs: &Trs, s: &str) -> Result<Term> {
    Ok(parse_with_rules(trs, s)?)
}

/// Parses `pos:rule,pos:rule`.
fn parse_redexes(trs: &Trs, s: &str) -> Result<Vec<Redex>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (pos, rule) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("expected pos:rule, got `{part}`"))?;
        out.push(Redex::new(
            Position::parse(pos.trim())?,
            trs.rule_index(rule.trim())?,
        ));
    }
    Ok(out)
}

fn parse_family(trs: &Trs, s: &str) -> Result<PeriodicFamily> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("expected root:rule:loop, got `{s}`");
    }
    Ok(PeriodicFamily::new(
        Redex::new(Position::parse(parts[0])?, trs.rule_index(parts[1])?),
        Position::parse(parts[2])?,
    ))
}

fn run(cli: &Cli) -> Result<()> {
    let out = Out {
        json: cli.format == "json",
    };
    match &cli.cmd {
        Cmd::Check { mode, file } => {
            let trs = load(file)?;
            let class = classify_orthogonality(&trs);
            let cps = critical_pairs(&trs)?;
            let trivial = cps.iter().filter(|c| c.trivial).count();
            let summary = if cps.is_empty() {
                format!("{class}, 0 critical pairs")
            } else if trivial == cps.len() {
                format!("{class}, {} critical pairs, all trivial", cps.len())
            } else {
                format!(
                    "{class}, {} critical pairs, {} non-trivial",
                    cps.len(),
                    cps.len() - trivial
                )
            };
            out.line(
                &summary,
                json!({"class": class.to_string(), "critical_pairs": cps.len(), "trivial": trivial}),
            );
            let ok = match mode.as_str() {
                "wo" => matches!(class, OrthoClass::WeaklyOrthogonal | OrthoClass::Orthogonal),
                "ortho" => matches!(class, OrthoClass::Orthogonal),
                other => bail!("unknown check mode `{other}` (use wo|ortho)"),
            };
            if !ok {
                bail!(
                    "system is not {}",
                    if mode == "wo" {
                        "weakly orthogonal"
                    } else {
                        "orthogonal"
                    }
                );
            }
            Ok(())
        }
        Cmd::CriticalPairs { file } => {
            let trs = load(file)?;
            let cps = critical_pairs(&trs)?;
            for cp in &cps {
                out.line(
                    &format!(
                        "outer={} inner={} pos={} left={} right={} trivial={}",
                        trs.rule(cp.outer).name,
                        trs.rule(cp.inner).name,
                        cp.pos,
                        cp.left,
                        cp.right,
                        cp.trivial
                    ),
                    json!({
                        "outer": trs.rule(cp.outer).name,
                        "inner": trs.rule(cp.inner).name,
                        "pos": cp.pos.to_string(),
                        "left": cp.left.to_string(),
                        "right": cp.right.to_string(),
                        "trivial": cp.trivial,
                    }),
                );
            }
            if cps.is_empty() {
                out.line("no critical pairs", json!({"critical_pairs": 0}));
            }
            Ok(())
        }
        Cmd::Redexes { file, term } => {
            let trs = load(file)?;
            let t = parse_term(&trs, term)?;
            for r in find_redexes(&t, &trs, cli.depth) {
                out.line(
                    &format!("pos={} rule={}", r.root, trs.rule(r.rule).name),
                    json!({"pos": r.root.to_string(), "rule": trs.rule(r.rule).name}),
                );
            }
            Ok(())
        }
        Cmd::Clusters { file, term, family } => {
            let trs = load(file)?;
            let t = parse_term(&trs, term)?;
            let mut set = RedexSet::finite(find_redexes(&t, &trs, cli.depth));
            if let Some(f) = family {
                let fam = parse_family(&trs, f)?;
                // Members of the family are covered by the family itself.
                let spine: Vec<Redex> = (0..=cli.depth as usize).map(|k| fam.instance(k)).collect();
                set.finite.retain(|r| !spine.contains(r));
                set.families.push(fam);
            }
            for c in clusters(&trs, &t, &set)? {
                out.line(
                    &c.to_string(),
                    json!({
                        "kind": match c.kind { infrew_core::clusters::ClusterKind::I => "I", _ => "Y" },
                        "extent": match c.extent { infrew_core::clusters::Extent::Finite(_) => "fin", _ => "inf" },
                        "root": c.root.to_string(),
                        "size": c.size_label(),
                        "trivial": infrew_core::clusters::is_trivial(&c),
                    }),
                );
            }
            Ok(())
        }
        Cmd::Orthogonalize {
            file,
            term,
            redexes,
            random,
        } => {
            let trs = load(file)?;
            if let Some(n) = random {
                let mut rng = testgen::rng_from_seed(cli.seed);
                let mut checked = 0usize;
                for _ in 0..*n {
                    let (subject, w) = testgen::random_subject(&trs, &mut rng, 8);
                    let (_, snaps) = orthogonalize_trace(&trs, &subject, &w)?;
                    for snap in &snaps {
                        if !invariant_holds(&trs, snap) {
                            bail!("invariant violated on {subject}");
                        }
                        checked += 1;
                    }
                }
                out.line(
                    &format!("{n} random subjects, {checked} loop iterations, invariant holds"),
                    json!({"subjects": n, "iterations": checked, "invariant": "holds"}),
                );
                return Ok(());
            }
            let t = parse_term(&trs, term)?;
            let w = match redexes {
                Some(list) => parse_redexes(&trs, list)?,
                None => find_redexes(&t, &trs, cli.depth),
            };
            let (map, _) = orthogonalize_trace(&trs, &t, &w)?;
            for line in map.display(&trs).lines() {
                out.line(line, json!({"entry": line}));
            }
            Ok(())
        }
        Cmd::Develop {
            file,
            term,
            redexes,
        } => {
            let trs = load(file)?;
            let t = parse_term(&trs, term)?;
            let mr = MultiRedex::new(&trs, parse_redexes(&trs, redexes)?)?;
            let result = develop(&trs, &t, &mr)?;
            out.line(&result.to_string(), json!({"result": result.to_string()}));
            Ok(())
        }
        Cmd::Bullet { file, term, family } => {
            let trs = load(file)?;
            let t = parse_term(&trs, term)?;
            let set = match family {
                Some(f) => RedexSet::family(parse_family(&trs, f)?),
                None => RedexSet::finite(find_redexes(&t, &trs, cli.depth)),
            };
            let result = bullet(&trs, &t, &set)?;
            out.line(&result.to_string(), json!({"bullet": result.to_string()}));
            Ok(())
        }
        Cmd::TriangleTest { file, term } => {
            let trs = load(file)?;
            let t = parse_term(&trs, term)?;
            let set = RedexSet::finite(find_redexes(&t, &trs, cli.depth));
            let target = bullet(&trs, &t, &set)?;
            let mrs = all_multiredexes(&trs, &t, cli.depth)?;
            for u in &mrs {
                let s = develop(&trs, &t, u)?;
                let ok = all_multiredexes(&trs, &s, cli.depth)?.iter().any(|v| {
                    develop(&trs, &s, v)
                        .map(|r| r.bisim_equal(&target))
                        .unwrap_or(false)
                });
                if !ok {
                    bail!("triangle fails for {u:?}");
                }
            }
            out.line(
                &format!(
                    "triangle holds: {} multi-steps all reach bullet = {}",
                    mrs.len(),
                    target
                ),
                json!({"multi_steps": mrs.len(), "bullet": target.to_string()}),
            );
            Ok(())
        }
        Cmd::DiamondJoin {
            file,
            term,
            left,
            right,
        } => {
            let trs = load(file)?;
            let t = parse_term(&trs, term)?;
            let u = MultiRedex::new(&trs, parse_redexes(&trs, left)?)?;
            let v = MultiRedex::new(&trs, parse_redexes(&trs, right)?)?;
            let (join_u, join_v, common) = diamond_join(&trs, &t, &u, &v)?;
            let fmt = |m: &MultiRedex| {
                m.redexes()
                    .iter()
                    .map(|r| r.display(&trs))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            out.line(
                &format!(
                    "join-left={} join-right={} common={}",
                    fmt(&join_u),
                    fmt(&join_v),
                    common
                ),
                json!({"join_left": fmt(&join_u), "join_right": fmt(&join_v), "common": common.to_string()}),
            );
            Ok(())
        }
        Cmd::Compress {
            fixture,
            file,
            term,
            steps,
        } => {
            let (trs, red) = build_reduction(fixture.as_deref(), file, term, steps)?;
            let input_min = red.min_depth()?;
            let output = compress(&trs, &red)?;
            output.validate(&trs, 32)?;
            let min = output.min_depth()?;
            let count = min.map(|d| output.count_at_depth(d)).transpose()?;
            let target = output
                .target_term()
                .map(|t| t.display_truncated(8))
                .unwrap_or_else(|| "divergent".into());
            out.line(
                &format!(
                    "compressed: min-depth={:?} steps-at-min={:?} target={}",
                    min, count, target
                ),
                json!({"min_depth": min, "steps_at_min": count, "target": target}),
            );
            if input_min != min {
                bail!("compression changed the minimal depth");
            }
            if !out.json {
                print!("{}", serialize_trace(&trs, &output, 4));
            }
            Ok(())
        }
        Cmd::Pml {
            fixture,
            file,
            term,
            steps,
            parallel,
        } => {
            let (trs, kappa, phi) = build_pml(fixture.as_deref(), file, term, steps, parallel)?;
            let (xi, psi) = parallel_moves(&trs, &kappa, &phi, cli.depth)?;
            let psi_str = psi
                .redexes
                .iter()
                .map(|r| r.display(&trs))
                .collect::<Vec<_>>()
                .join(",");
            out.line(
                &format!(
                    "xi: min-depth={:?} target={} | psi: [{}] target={}",
                    xi.min_depth()?,
                    xi.target_term()
                        .map(|t| t.display_truncated(8))
                        .unwrap_or_default(),
                    psi_str,
                    psi.target.display_truncated(8)
                ),
                json!({
                    "xi_min_depth": xi.min_depth()?,
                    "xi_target": xi.target_term().map(|t| t.display_truncated(8)),
                    "psi": psi_str,
                    "psi_target": psi.target.display_truncated(8),
                }),
            );
            Ok(())
        }
        Cmd::Join {
            file,
            term,
            left,
            right,
            agree_depth,
        } => {
            let trs = load(file)?;
            let t = parse_term(&trs, term)?;
            let kappa = StagedReduction::finite(&trs, t.clone(), parse_redexes(&trs, left)?)?;
            let xi = StagedReduction::finite(&trs, t, parse_redexes(&trs, right)?)?;
            let (c1, c2) = join_bounded(&trs, &kappa, &xi, *agree_depth, cli.budget)?;
            let show = |r: &StagedReduction| {
                let steps = r.prefix_steps(64);
                steps
                    .iter()
                    .map(|s| s.display(&trs))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            out.line(
                &format!(
                    "joined to depth {}: left-continuation=[{}] right-continuation=[{}]",
                    agree_depth,
                    show(&c1),
                    show(&c2)
                ),
                json!({"agree_depth": agree_depth, "left": show(&c1), "right": show(&c2)}),
            );
            Ok(())
        }
        Cmd::Sp { cmd } => run_sp(cli, &out, cmd),
        Cmd::Lambda { cmd } => run_lambda(cli, &out, cmd),
        Cmd::Demo { which } => run_demo(cli, &out, which),
    }
}

fn all_multiredexes(trs: &Trs, t: &Term, depth: u32) -> Result<Vec<MultiRedex>> {
    let redexes = find_redexes(t, trs, depth);
    if redexes.len() > 16 {
        bail!(
            "too many redexes ({}) for exhaustive enumeration",
            redexes.len()
        );
    }
    let mut mrs = Vec::new();
    for mask in 0u64..(1u64 << redexes.len()) {
        let subset: Vec<Redex> = (0..redexes.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| redexes[i].clone())
            .collect();
        if let Ok(mr) = MultiRedex::new(trs, subset) {
            mrs.push(mr);
        }
    }
    Ok(mrs)
}

fn fg_system() -> Trs {
    Trs::parse("grow: a -> g(a)\nwrap: f(x) -> h(x)").expect("fixture system")
}

fn build_reduction(
    fixture: Option<&str>,
    file: &Option<PathBuf>,
    term: &Option<String>,
    steps: &Option<String>,
) -> Result<(Trs, StagedReduction)> {
    match fixture {
        Some("fg-omega") => {
            let trs = fg_system();
            let g_omega = Term::parse("rec g1 = g(g1)").expect("rational term");
            let mut red = spiral_omega(
                &trs,
                Term::parse("f(a)").unwrap(),
                Position::from_slice(&[1]),
                "grow",
                Term::fun("f", vec![g_omega.clone()]),
            );
            let wrap = trs.rule_index("wrap")?;
            red.stages
                .push(Stage::Finite(vec![Redex::new(Position::root(), wrap)]));
            red.target = ReductionTarget::Term(Term::fun("h", vec![g_omega]));
            Ok((trs, red))
        }
        Some(other) => bail!("unknown fixture `{other}` (available: fg-omega)"),
        None => {
            let file = file
                .as_ref()
                .ok_or_else(|| anyhow!("need --fixture or a rule file"))?;
            let trs = load(file)?;
            let term = term.as_ref().ok_or_else(|| anyhow!("need --term"))?;
            let steps = steps.as_ref().ok_or_else(|| anyhow!("need --steps"))?;
            let t = parse_term(&trs, term)?;
            let red = StagedReduction::finite(&trs, t, parse_redexes(&trs, steps)?)?;
            Ok((trs, red))
        }
    }
}

fn build_pml(
    fixture: Option<&str>,
    file: &Option<PathBuf>,
    term: &Option<String>,
    steps: &Option<String>,
    parallel: &Option<String>,
) -> Result<(Trs, StagedReduction, ParallelStep)> {
    match fixture {
        Some("fg-omega") => {
            let trs = fg_system();
            let g_omega = Term::parse("rec g1 = g(g1)").expect("rational term");
            let kappa = spiral_omega(
                &trs,
                Term::parse("f(a)").unwrap(),
                Position::from_slice(&[1]),
                "grow",
                Term::fun("f", vec![g_omega]),
            );
            let phi = ParallelStep::new(
                &trs,
                Term::parse("f(a)").unwrap(),
                vec![Redex::new(Position::root(), trs.rule_index("wrap")?)],
            )?;
            Ok((trs, kappa, phi))
        }
        Some(other) => bail!("unknown fixture `{other}` (available: fg-omega)"),
        None => {
            let file = file
                .as_ref()
                .ok_or_else(|| anyhow!("need --fixture or a rule file"))?;
            let trs = load(file)?;
            let term = term.as_ref().ok_or_else(|| anyhow!("need --term"))?;
            let t = parse_term(&trs, term)?;
            let steps = steps.as_ref().ok_or_else(|| anyhow!("need --steps"))?;
            let parallel = parallel
                .as_ref()
                .ok_or_else(|| anyhow!("need --parallel"))?;
            let kappa = StagedReduction::finite(&trs, t.clone(), parse_redexes(&trs, steps)?)?;
            let phi = ParallelStep::new(&trs, t, parse_redexes(&trs, parallel)?)?;
            Ok((trs, kappa, phi))
        }
    }
}

fn run_sp(cli: &Cli, out: &Out, cmd: &SpCmd) -> Result<()> {
    match cmd {
        SpCmd::Classify { spec } => {
            let w = SpWord::parse_spec(spec)?;
            let c = w.classify()?;
            out.line(
                &format!(
                    "word: {w}\nsnorm={} pnorm={}\nreduces-to-S^w={} reduces-to-P^w={}\nroot-active={} SN-inf={} WN-inf={}\nvenn-region={}",
                    c.snorm, c.pnorm, c.reduces_to_s_omega, c.reduces_to_p_omega,
                    c.root_active, c.sn_inf, c.wn_inf, c.venn_region
                ),
                json!({
                    "word": w.to_string(),
                    "snorm": c.snorm.to_string(),
                    "pnorm": c.pnorm.to_string(),
                    "reduces_to_s_omega": c.reduces_to_s_omega,
                    "reduces_to_p_omega": c.reduces_to_p_omega,
                    "root_active": c.root_active,
                    "sn_inf": c.sn_inf,
                    "wn_inf": c.wn_inf,
                    "venn_region": c.venn_region.to_string(),
                }),
            );
            Ok(())
        }
        SpCmd::Witness { spec, to } => {
            let w = SpWord::parse_spec(spec)?;
            let segs = match to.as_str() {
                "s" | "S" => w.witness_to(Letter::S, cli.segments)?,
                "p" | "P" => w.witness_to(Letter::P, cli.segments)?,
                other => {
                    let u = SpWord::parse_spec(other)?;
                    w.witness_to_word(&u, cli.segments)?
                }
            };
            for (i, seg) in segs.iter().enumerate() {
                let steps: Vec<String> = seg
                    .steps
                    .iter()
                    .map(|(ix, pair)| format!("({ix},{}{})", pair[0], pair[1]))
                    .collect();
                out.line(
                    &format!(
                        "w{}={} sum={:+} steps=[{}] nf={}",
                        i + 1,
                        letters_to_string(&seg.letters),
                        seg.sum,
                        steps.join(","),
                        letters_to_string(&seg.normal_form)
                    ),
                    json!({
                        "segment": i + 1,
                        "letters": letters_to_string(&seg.letters),
                        "sum": seg.sum,
                        "steps": steps,
                        "nf": letters_to_string(&seg.normal_form),
                    }),
                );
            }
            Ok(())
        }
        SpCmd::Nf { word } => {
            let letters = infrew_core::spwords::parse_letters(word)?;
            let w = SpWord::finite(letters);
            let nf = w.nf_finite()?;
            let shown = if nf.is_empty() {
                "(empty)".to_string()
            } else {
                letters_to_string(&nf)
            };
            out.line(&shown, json!({"nf": letters_to_string(&nf)}));
            Ok(())
        }
    }
}

fn run_lambda(cli: &Cli, out: &Out, cmd: &LambdaCmd) -> Result<()> {
    match cmd {
        LambdaCmd::Translate { spec, index } => {
            let w = SpWord::parse_spec(spec)?;
            let t = lambda::translate(&w, *index, cli.depth);
            out.line(&lambda::pretty(&t), json!({"term": lambda::pretty(&t)}));
            Ok(())
        }
        LambdaCmd::Square { spec, pos, index } => {
            let w = SpWord::parse_spec(spec)?;
            let ok = lambda::check_commuting_square(&w, *index, *pos, cli.depth)?;
            out.line(
                &format!(
                    "square at letter {pos}: {}",
                    if ok { "commutes" } else { "FAILS" }
                ),
                json!({"pos": pos, "commutes": ok}),
            );
            if !ok {
                bail!("square does not commute");
            }
            Ok(())
        }
        LambdaCmd::Wwi => {
            let report = lambda::wwi_demo();
            for l in &report.lines {
                out.line(
                    &format!(
                        "-> {} [{} {} steps] {}",
                        l.label,
                        l.steps_from_previous,
                        if l.rule.is_empty() { "start," } else { l.rule },
                        if l.matches_display { "ok" } else { "MISMATCH" }
                    ),
                    json!({"line": l.label, "steps": l.steps_from_previous, "rule": l.rule, "ok": l.matches_display}),
                );
            }
            for l in &report.eta_branch {
                out.line(
                    &format!(
                        "eta branch -> {} [{} eta steps] {}",
                        l.label,
                        l.steps_from_previous,
                        if l.matches_display { "ok" } else { "MISMATCH" }
                    ),
                    json!({"line": l.label, "steps": l.steps_from_previous, "rule": "eta", "ok": l.matches_display}),
                );
            }
            if !report.ok {
                bail!("demo mismatch");
            }
            Ok(())
        }
    }
}

fn run_demo(cli: &Cli, out: &Out, which: &str) -> Result<()> {
    match which {
        "un-failure" => {
            let psi = SpWord::parse_spec("psi").unwrap();
            let c = psi.classify()?;
            out.line(
                &format!("psi: snorm={} pnorm={} venn-region={}", c.snorm, c.pnorm, c.venn_region),
                json!({"snorm": c.snorm.to_string(), "pnorm": c.pnorm.to_string(), "venn": c.venn_region.to_string()}),
            );
            for target in [Letter::S, Letter::P] {
                let segs = psi.witness_to(target, cli.segments)?;
                let ok = segs.iter().all(|s| {
                    infrew_core::spwords::replay_segment(s)
                        .map(|r| r == s.normal_form)
                        .unwrap_or(false)
                });
                out.line(
                    &format!(
                        "witness towards {}^w: {} segments, sums {:+}, replay {}",
                        target,
                        segs.len(),
                        target.delta(),
                        if ok { "valid" } else { "INVALID" }
                    ),
                    json!({"target": target.to_string(), "segments": segs.len(), "valid": ok}),
                );
                if !ok {
                    bail!("invalid witness");
                }
            }
            let s_omega = SpWord::parse_spec("s_omega").unwrap().to_trs_term(None)?;
            let p_omega = SpWord::parse_spec("p_omega").unwrap().to_trs_term(None)?;
            let distinct = !s_omega.bisim_equal(&p_omega);
            out.line(
                &format!(
                    "normal forms {} and {} are bisimulation-distinct: {}",
                    s_omega, p_omega, distinct
                ),
                json!({"s_omega": s_omega.to_string(), "p_omega": p_omega.to_string(), "distinct": distinct}),
            );
            if !distinct {
                bail!("normal forms not distinct");
            }
            out.line(
                "two distinct normal forms reachable from one word: uniqueness fails",
                json!({"un_inf": false}),
            );
            Ok(())
        }
        "collapse" => {
            let trs = infrew_core::trs::collapse_system();
            let s = Term::parse("rec s = f(f(s, b), a)").unwrap();
            let t1_expected = Term::parse("rec t1 = f(t1, a)").unwrap();
            let t2_expected = Term::parse("rec t2 = f(t2, b)").unwrap();
            let depth = cli.depth.max(8);
            let mut cur = s.clone();
            for k in 1..=depth as usize {
                cur = rewrite_at(&cur, &trs, &Redex::new(Position(vec![1; k]), 0))?;
            }
            let ok1 = cur.agrees_to_depth(&t1_expected, depth);
            let mut cur = s.clone();
            for k in 0..=depth as usize {
                cur = rewrite_at(&cur, &trs, &Redex::new(Position(vec![1; k]), 0))?;
            }
            let ok2 = cur.agrees_to_depth(&t2_expected, depth);
            let distinct = !t1_expected.bisim_equal(&t2_expected);
            out.line(
                &format!(
                    "s = {s}\nroute 1 limit: {t1_expected} (prefix verified: {ok1})\nroute 2 limit: {t2_expected} (prefix verified: {ok2})\nbisim-distinct: {distinct}"
                ),
                json!({"t1": t1_expected.to_string(), "t2": t2_expected.to_string(), "verified": ok1 && ok2, "distinct": distinct}),
            );
            if !(ok1 && ok2 && distinct) {
                bail!("collapse demo failed");
            }
            let dummy = StagedReduction::finite(&trs, s, vec![])?;
            match join_bounded(&trs, &dummy, &dummy, 4, 4) {
                Err(e @ infrew_core::reductions::ReductionError::CollapsingRulesPresent(_)) => {
                    out.line(
                        &format!("join refused: {e}"),
                        json!({"join": "refused", "reason": e.to_string()}),
                    );
                    Ok(())
                }
                other => bail!("expected the join to refuse, got {other:?}"),
            }
        }
        other => bail!("unknown demo `{other}` (available: un-failure, collapse)"),
    }
}
