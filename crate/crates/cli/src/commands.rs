use std::error::Error as StdError;
use std::path::Path;

use privmax::applications::{
    basket_neighbor_pair, empirical_quality, itemset_quality, load_baskets, shell_decomposition,
    t_star, BasketDataset, SyntheticClassSpec, UniverseSource,
};
use privmax::audit::{
    build_lb2_family, check_approx_dp, check_approx_dp_exact, check_group_privacy,
    margin_boundary_pairs, threshold_example_pair, AuditReport, AuditSettings, NeighborPair,
};
use privmax::trials;
use privmax::{
    utility_gap, Mechanism, MechanismKind, NoiseMode, NoiseSource, OutcomeRecord, PrivacyBudget,
    QualityUniverse, Release,
};
use serde_json::{json, Value};

use crate::args::{AuditArgs, BenchRangeArgs, FimArgs, Format, Generator, PacArgs, RunConfig};
use crate::output::{write_output, Csv};

pub type CliResult<T> = Result<T, Box<dyn StdError>>;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const ERROR: u8 = 1;
    pub const FAIL_OUTCOME: u8 = 3;
    pub const UNCERTIFIED: u8 = 4;
    pub const AUDIT_VIOLATION: u8 = 5;
}

// Keeps the synthetic class generator off the noise stream of the same seed.
const CLASS_SEED_OFFSET: u64 = 0x5851_F42D_4C95_7F2D;

fn mode(run: &RunConfig) -> NoiseMode {
    if run.zero_noise {
        NoiseMode::ZeroOverride
    } else {
        NoiseMode::Sampled
    }
}

fn single_mechanism(run: &RunConfig) -> CliResult<MechanismKind> {
    match run.mechanism.as_slice() {
        [kind] => Ok(*kind),
        _ => Err("this command takes exactly one --mechanism".into()),
    }
}

fn build_mechanism(run: &RunConfig, kind: MechanismKind) -> CliResult<Mechanism> {
    let budget = match kind {
        MechanismKind::Em | MechanismKind::Mol => PrivacyBudget::pure(run.alpha)?,
        MechanismKind::St13 | MechanismKind::Lmm => {
            PrivacyBudget::approximate(run.alpha, run.delta)?
        }
    };
    Ok(Mechanism::from_kind(kind, budget, run.cap))
}

fn trials_or(run: &RunConfig, default: u64) -> CliResult<u64> {
    match run.trials.unwrap_or(default) {
        0 => Err("--trials must be at least 1".into()),
        t => Ok(t),
    }
}

fn require_input(run: &RunConfig) -> CliResult<&Path> {
    run.input
        .as_deref()
        .ok_or_else(|| "--in is required for this command".into())
}

fn exit_code_for(release: &Release) -> u8 {
    match release {
        Release::Fail => exit::FAIL_OUTCOME,
        Release::Selected(o) if !o.certified => exit::UNCERTIFIED,
        Release::Selected(_) => exit::OK,
    }
}

fn record(release: &Release, seed: u64) -> Option<OutcomeRecord> {
    release.outcome().map(|o| o.to_record(seed))
}

/// A quality gap in raw score units and in multiples of `1/(n alpha)`.
fn gap_fields(gap: f64, n: u64, alpha: f64) -> Value {
    json!({ "raw": gap, "units_of_1_over_n_alpha": gap * n as f64 * alpha })
}

pub fn select(run: &RunConfig) -> CliResult<u8> {
    let kind = single_mechanism(run)?;
    let mech = build_mechanism(run, kind)?;
    let u = QualityUniverse::from_json_file(require_input(run)?)?;
    let release = mech.run(&u, &mut NoiseSource::new(run.seed, mode(run)))?;
    let rec = record(&release, run.seed);

    let payload = json!({
        "mechanism": kind,
        "k": u.k(),
        "n": u.n(),
        "fail": release == Release::Fail,
        "outcome": rec,
    });
    let mut csv = Csv::new([
        "mechanism",
        "item",
        "m",
        "ell",
        "certified",
        "alpha",
        "delta",
        "seed",
    ]);
    let cell = |v: Option<String>| v.unwrap_or_default();
    match rec {
        Some(r) => csv.row([
            kind.to_string(),
            r.item.to_string(),
            cell(r.m.map(|m| m.to_string())),
            cell(r.ell.map(|l| l.to_string())),
            r.certified.to_string(),
            r.alpha.to_string(),
            r.delta.to_string(),
            r.seed.to_string(),
        ]),
        None => csv.row([
            kind.to_string(),
            "fail".into(),
            String::new(),
            String::new(),
            String::new(),
            mech.budget().alpha.to_string(),
            mech.budget().delta.to_string(),
            run.seed.to_string(),
        ]),
    }
    write_output(run, Format::Json, payload, &csv)?;
    Ok(exit_code_for(&release))
}

pub fn bench_range(run: &RunConfig, args: &BenchRangeArgs) -> CliResult<u8> {
    let trials = trials_or(run, 1000)?;
    if args.n == 0 {
        return Err("--n must be at least 1".into());
    }
    let mut csv = Csv::new([
        "mechanism",
        "K",
        "n",
        "alpha",
        "trials",
        "success_rate",
        "mean_quality",
    ]);
    let mut rows = Vec::new();
    for &kind in &run.mechanism {
        let mech = build_mechanism(run, kind)?;
        for &k in &args.k_values {
            // All-ones instance: item 1 scores 1, every other item 0.
            let u = QualityUniverse::sparse_ranked(k, args.n, vec![1.0], 0.0)?;
            let picks = trials::collect(trials, run.seed, mode(run), |src| {
                Ok(mech.run(&u, src)?.item())
            })?;
            let success = picks.iter().filter(|&&p| p == Some(1)).count() as f64 / trials as f64;
            // A Fail contributes quality 0.
            let quality: f64 = picks
                .iter()
                .map(|p| p.map_or(Ok(0.0), |i| u.value(i)))
                .sum::<privmax::Result<f64>>()?;
            let mean_quality = quality / trials as f64;
            csv.row([
                kind.to_string(),
                k.to_string(),
                args.n.to_string(),
                run.alpha.to_string(),
                trials.to_string(),
                success.to_string(),
                mean_quality.to_string(),
            ]);
            rows.push(json!({
                "mechanism": kind, "K": k, "n": args.n, "alpha": run.alpha, "trials": trials,
                "success_rate": success, "mean_quality": mean_quality,
            }));
        }
    }
    write_output(run, Format::Csv, json!({ "rows": rows }), &csv)?;
    Ok(exit::OK)
}

enum AuditJob {
    Pair(NeighborPair),
    Group {
        far: QualityUniverse,
        near: QualityUniverse,
        k: u64,
        provenance: String,
    },
}

fn required<T: Copy>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| format!("--{flag} is required for this generator").into())
}

fn pick<T>(mut items: Vec<T>, which: Option<usize>) -> CliResult<Vec<T>> {
    match which {
        None => Ok(items),
        Some(i) if i < items.len() => Ok(vec![items.swap_remove(i)]),
        Some(i) => Err(format!("--pair {i} out of range (0..{})", items.len()).into()),
    }
}

fn audit_jobs(run: &RunConfig, args: &AuditArgs) -> CliResult<Vec<AuditJob>> {
    if let (Some(left), Some(right)) = (&args.left, &args.right) {
        let pair = NeighborPair::new(
            QualityUniverse::from_json_file(left)?,
            QualityUniverse::from_json_file(right)?,
            args.provenance.clone(),
        )?;
        return Ok(vec![AuditJob::Pair(pair)]);
    }
    let generator = args.generator.ok_or("give --left/--right or --generator")?;
    let jobs = match generator {
        Generator::ThresholdExample => {
            let k = required(args.k, "k")?;
            let replacement: u64 = args
                .replacement
                .as_deref()
                .ok_or("--replacement is required")?
                .trim()
                .parse()?;
            vec![AuditJob::Pair(threshold_example_pair(
                k,
                &args.entries,
                args.index,
                replacement,
            )?)]
        }
        Generator::Lb2Family => {
            let ell = required(args.ell, "ell")?;
            let n = required(args.n, "n")?;
            let fam = build_lb2_family(ell, n, run.alpha, args.k.unwrap_or(ell))?;
            let jobs = (2..=ell)
                .map(|j| AuditJob::Group {
                    far: fam.member(1).clone(),
                    near: fam.member(j).clone(),
                    k: fam.m,
                    provenance: format!("lb2 family: D^1 vs D^{j}, {} records apart", fam.m),
                })
                .collect();
            pick(jobs, args.pair)?
        }
        Generator::BasketNeighbor => {
            let data = load_baskets(require_input(run)?)?;
            let replacement: Vec<&str> = args
                .replacement
                .as_deref()
                .ok_or("--replacement is required")?
                .split_whitespace()
                .collect();
            vec![AuditJob::Pair(basket_neighbor_pair(
                &data,
                args.index,
                &replacement,
                args.r,
            )?)]
        }
        Generator::MarginBoundary => {
            let budget = PrivacyBudget::approximate(run.alpha, run.delta)?;
            let pairs = margin_boundary_pairs(args.n.unwrap_or(10), &budget)?;
            pick(pairs.into_iter().map(AuditJob::Pair).collect(), args.pair)?
        }
    };
    Ok(jobs)
}

pub fn audit(run: &RunConfig, args: &AuditArgs) -> CliResult<u8> {
    let kind = single_mechanism(run)?;
    let mech = build_mechanism(run, kind)?;
    let claimed = PrivacyBudget {
        alpha: args.claimed_alpha.unwrap_or(run.alpha),
        delta: args.claimed_delta.unwrap_or(mech.budget().delta),
    };
    let trials = trials_or(run, 100_000)?;
    let mut settings = AuditSettings::new(trials, run.seed);
    settings.confidence = args.confidence;
    if run.zero_noise {
        return Err("audits need sampled noise; drop --zero-noise".into());
    }

    let mut reports: Vec<AuditReport> = Vec::new();
    for job in audit_jobs(run, args)? {
        let report = match (&job, args.exact) {
            (AuditJob::Pair(pair), false) => check_approx_dp(pair, &mech, &claimed, &settings)?,
            (AuditJob::Pair(pair), true) => check_approx_dp_exact(pair, &mech, &claimed)?,
            (
                AuditJob::Group {
                    far,
                    near,
                    k,
                    provenance,
                },
                false,
            ) => check_group_privacy(far, near, *k, &mech, &claimed, &settings, provenance)?,
            (AuditJob::Group { .. }, true) => {
                return Err("--exact is not available for group-privacy audits".into())
            }
        };
        reports.push(report);
    }

    let violations: usize = reports.iter().map(|r| r.violations().count()).sum();
    let mut csv = Csv::new([
        "pair", "outcome", "p_left", "p_right", "bound", "slack", "pass",
    ]);
    for (i, report) in reports.iter().enumerate() {
        for row in &report.rows {
            csv.row([
                i.to_string(),
                row.outcome.to_string(),
                row.p_left.to_string(),
                row.p_right.to_string(),
                row.bound.to_string(),
                row.slack.to_string(),
                row.pass.to_string(),
            ]);
        }
    }
    let payload = json!({
        "claimed": claimed,
        "violations": violations,
        "insufficient_trials": reports.iter().any(|r| r.insufficient_trials),
        "reports": reports,
    });
    match &run.out {
        // Reports always go out in both formats when written to disk.
        Some(out) => {
            let mut both = run.clone();
            both.out = Some(out.with_extension("csv"));
            write_output(&both, Format::Csv, payload.clone(), &csv)?;
            both.out = Some(out.with_extension("json"));
            both.format = Some(Format::Json);
            write_output(&both, Format::Json, payload, &csv)?;
        }
        None => write_output(run, Format::Json, payload, &csv)?,
    }
    Ok(if violations > 0 {
        exit::AUDIT_VIOLATION
    } else {
        exit::OK
    })
}

struct Selection {
    first: Release,
    /// Quality of each trial's selection; a Fail scores `None`.
    qualities: Vec<Option<f64>>,
}

fn run_trials(
    run: &RunConfig,
    mech: &Mechanism,
    u: &QualityUniverse,
    trials: u64,
) -> CliResult<Selection> {
    let releases = trials::collect(trials, run.seed, mode(run), |src| mech.run(u, src))?;
    let qualities = releases
        .iter()
        .map(|r| r.item().map(|i| u.value(i)).transpose())
        .collect::<privmax::Result<_>>()?;
    let first = releases.into_iter().next().expect("at least one trial");
    Ok(Selection { first, qualities })
}

/// Summary over repeated runs: mean gap (Fail counts as the full `f_max`)
/// and how often an exact maximizer was returned.
fn summary(sel: &Selection, f_max: f64, n: u64, alpha: f64) -> Value {
    let t = sel.qualities.len() as f64;
    let mean_gap = sel
        .qualities
        .iter()
        .map(|q| f_max - q.unwrap_or(0.0))
        .sum::<f64>()
        / t;
    let top = sel.qualities.iter().filter(|q| **q == Some(f_max)).count() as f64 / t;
    let fails = sel.qualities.iter().filter(|q| q.is_none()).count() as f64 / t;
    json!({
        "trials": sel.qualities.len(),
        "mean_gap": gap_fields(mean_gap, n, alpha),
        "argmax_frequency": top,
        "fail_frequency": fails,
    })
}

fn read_vocabulary(path: &Path) -> CliResult<Vec<String>> {
    Ok(std::fs::read_to_string(path)?
        .split_whitespace()
        .map(str::to_string)
        .collect())
}

pub fn fim(run: &RunConfig, args: &FimArgs) -> CliResult<u8> {
    let kind = single_mechanism(run)?;
    let mech = build_mechanism(run, kind)?;
    let trials = trials_or(run, 1)?;
    let mut data = load_baskets(require_input(run)?)?;
    if let Some(vocab) = &args.vocabulary {
        data = BasketDataset::with_vocabulary(data.baskets().to_vec(), read_vocabulary(vocab)?)?;
    }
    data = data.with_unused_tokens(args.unused_tokens);
    let q = itemset_quality(&data, args.r)?;
    let u = &q.universe;
    let (n, l, f_max) = (u.n(), q.support_len(), u.max_value());

    let sel = run_trials(run, &mech, u, trials)?;
    let decoded = sel.first.item().map(|i| q.decode(i)).transpose()?;
    let quality = sel.qualities[0];
    let caveat = (kind == MechanismKind::Em && q.source == UniverseSource::DataDerived).then_some(
        "the exponential mechanism needs the itemset universe fixed in advance; with a data-derived vocabulary this run is not end-to-end private",
    );
    let payload = json!({
        "mechanism": kind,
        "r": args.r,
        "n": n,
        "k": u.k(),
        "vocabulary_size": data.vocabulary().len(),
        "support_size": l,
        "no_support": q.no_support,
        "universe_source": q.source,
        "privacy_caveat": caveat,
        "f_max": f_max,
        "outcome": record(&sel.first, run.seed),
        "decode": decoded,
        "quality": quality,
        "gap": quality.map(|f| gap_fields(f_max - f, n, run.alpha)),
        "utility_bound": if l > 0 { Some(gap_fields(utility_gap(n, run.alpha, run.eta, l)?, n, run.alpha)) } else { None },
        "summary": (trials > 1).then(|| summary(&sel, f_max, n, run.alpha)),
    });
    let mut csv = Csv::new([
        "mechanism",
        "item",
        "itemset",
        "quality",
        "gap",
        "gap_units",
        "certified",
        "ell",
    ]);
    let outcome = sel.first.outcome();
    csv.row([
        kind.to_string(),
        sel.first.item().map_or("fail".into(), |i| i.to_string()),
        decoded.map(|d| d.join(" ")).unwrap_or_default(),
        quality.map(|f| f.to_string()).unwrap_or_default(),
        quality.map(|f| (f_max - f).to_string()).unwrap_or_default(),
        quality
            .map(|f| ((f_max - f) * n as f64 * run.alpha).to_string())
            .unwrap_or_default(),
        outcome.map(|o| o.certified.to_string()).unwrap_or_default(),
        outcome
            .and_then(|o| o.ell)
            .map(|e| e.to_string())
            .unwrap_or_default(),
    ]);
    write_output(run, Format::Json, payload, &csv)?;
    Ok(exit_code_for(&sel.first))
}

pub fn pac(run: &RunConfig, args: &PacArgs) -> CliResult<u8> {
    let kind = single_mechanism(run)?;
    let mech = build_mechanism(run, kind)?;
    let trials = trials_or(run, 1)?;
    let spec = SyntheticClassSpec::from_json_file(require_input(run)?)?;
    let class = spec.generate(run.seed.wrapping_add(CLASS_SEED_OFFSET))?;
    let u = empirical_quality(&class)?;
    let n = u.n();
    let empirical = class.empirical_errors();
    let errors = if args.empirical_shells {
        &empirical
    } else {
        &spec.error_profile
    };
    let shells = shell_decomposition(errors, class.d() as f64, n, args.delta0, args.c0)?;
    let t = t_star(
        &shells,
        &PrivacyBudget::approximate(run.alpha, run.delta)?,
        args.c,
    )?;

    let f_max = u.max_value();
    let sel = run_trials(run, &mech, &u, trials)?;
    let chosen = sel.first.item();
    let quality = sel.qualities[0];
    let table: Vec<Value> = shells
        .shell_sizes
        .iter()
        .enumerate()
        .map(|(t, &size)| json!({ "t": t, "radius": shells.min_err + t as f64 * shells.width, "size": size }))
        .collect();
    let payload = json!({
        "mechanism": kind,
        "num_hypotheses": class.len(),
        "n": n,
        "d": class.d(),
        "outcome": record(&sel.first, run.seed),
        "decode": chosen.map(|i| json!({ "hypothesis": i - 1, "empirical_error": empirical[(i - 1) as usize], "true_error": spec.error_profile[(i - 1) as usize] })),
        "quality": quality,
        "gap": quality.map(|f| gap_fields(f_max - f, n, run.alpha)),
        "summary": (trials > 1).then(|| summary(&sel, f_max, n, run.alpha)),
        "shells": {
            "width": shells.width, "min_err": shells.min_err, "c0": shells.c0, "delta0": shells.delta0,
            "R": shells.r, "error_source": if args.empirical_shells { "empirical" } else { "true" }, "table": table,
        },
        "t_star": t,
    });
    let mut csv = Csv::new(["t", "radius", "size"]);
    for row in &table {
        csv.row([
            row["t"].to_string(),
            row["radius"].to_string(),
            row["size"].to_string(),
        ]);
    }
    csv.comment(format!(
        "selection: hypothesis {} quality {} t_star {}{}",
        chosen.map_or("fail".into(), |i| (i - 1).to_string()),
        quality.map(|q| q.to_string()).unwrap_or_default(),
        t.t,
        if t.exhausted { " (exhausted)" } else { "" }
    ));
    write_output(run, Format::Json, payload, &csv)?;
    Ok(exit_code_for(&sel.first))
}
