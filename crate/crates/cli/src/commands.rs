use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use coordlab::coordination::{coordination_profile, CoordinationConfig, GroupProfile, Thresholds};
use coordlab::corpus::{derive_exchanges, filter_exchanges_with_stats, load_corpus_files, Corpus, FilterSpec, LoadOptions};
use coordlab::lexicon::{load_lexicon, Lexicon};
use coordlab::prediction::{
    build_pairs, export_dataset, prediction_grid, BowVocabulary, CellStatus, DomainData, EvalOptions, FeatureKind,
    PairOptions, PairStats, Pairing, SvmParams, BOW_BLOCK_SIZE,
};
use coordlab::report::{self, Series};
use coordlab::stats::{
    compare_groups, evaluate_hypotheses, timeline, CompareOptions, Direction, HypothesisOptions, Tails, TestKind,
    TimelineOptions,
};
use coordlab::synth::{generate, oracle, GenSpec};
use coordlab::{Error, Parallelism};

use crate::args::{Cli, Command, Common, DirectionArg, SideArg, TailsArg, TestArg};
use crate::select;
use crate::CliError;

// Terminal output; a closed pipe is not an error.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}
macro_rules! outp {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout().lock(), $($t)*);
    }};
}

type CliResult<T = ()> = Result<T, CliError>;

/// Everything a run depends on, written as `config.json` next to its outputs.
#[derive(Serialize)]
struct RunConfig<'a> {
    tool_version: &'a str,
    lexicon_source: String,
    seed: u64,
    filters: &'a FilterSpec,
    parallel: bool,
    #[serde(flatten)]
    common: &'a Common,
    #[serde(flatten)]
    command: &'a Command,
}

struct Ctx {
    common: Common,
    lexicon: Lexicon,
    filters: FilterSpec,
    seed: u64,
    parallelism: Parallelism,
}

impl Ctx {
    fn thresholds(&self) -> Thresholds {
        Thresholds {
            min_exhibits: self.common.min_exhibits,
            min_exchanges: self.common.min_exchanges,
        }
    }

    fn coordination(&self) -> CoordinationConfig {
        CoordinationConfig {
            thresholds: self.thresholds(),
            parallelism: self.parallelism,
        }
    }

    fn compare_options(&self) -> CompareOptions {
        CompareOptions {
            tails: match self.common.tails {
                TailsArg::One => Tails::One,
                TailsArg::Two => Tails::Two,
            },
            kind: match self.common.test {
                TestArg::Student => TestKind::Student,
                TestArg::Welch => TestKind::Welch,
            },
            resamples: self.common.resamples,
            seed: self.seed,
            parallelism: self.parallelism,
        }
    }

    fn load_corpus(&self) -> CliResult<Corpus> {
        let path = self
            .common
            .corpus
            .as_deref()
            .ok_or_else(|| CliError::usage("--corpus is required for this command"))?;
        Ok(load_corpus_files(
            path,
            self.common.participants.as_deref(),
            self.common.cases.as_deref(),
            &self.lexicon,
            LoadOptions {
                identity_per_case: self.common.identity_per_case,
            },
        )?)
    }

    fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> CliResult {
        let path = self.common.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::Io {
                path: dir.display().to_string(),
                source: e,
            })?;
        }
        fs::write(&path, contents).map_err(|e| {
            CliError::from(Error::Io {
                path: path.display().to_string(),
                source: e,
            })
        })
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult {
        let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
        text.push('\n');
        self.write(name, text)
    }
}

fn parse_filters(arg: Option<&str>) -> CliResult<FilterSpec> {
    let Some(text) = arg else { return Ok(FilterSpec::default()) };
    let text = match text.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_string(),
            source: e,
        })?,
        None => text.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| CliError {
        kind: "InvalidFilters".into(),
        message: format!("--filters: {e}"),
        code: 2,
    })
}

pub fn run(cli: Cli) -> CliResult {
    let common = cli.common;
    let lexicon = match &common.lexicon {
        Some(p) => load_lexicon(p)?,
        None => Lexicon::shipped(),
    };
    let ctx = Ctx {
        filters: parse_filters(common.filters.as_deref())?,
        seed: common.seed.unwrap_or(0),
        parallelism: if common.sequential {
            Parallelism::Sequential
        } else {
            Parallelism::default()
        },
        lexicon,
        common,
    };
    let config = RunConfig {
        tool_version: env!("CARGO_PKG_VERSION"),
        lexicon_source: ctx.lexicon.source_id().to_string(),
        seed: ctx.seed,
        filters: &ctx.filters,
        parallel: ctx.parallelism.is_parallel(),
        common: &ctx.common,
        command: &cli.command,
    };
    ctx.write_json("config.json", &config)?;

    match &cli.command {
        Command::Coordinate { speakers, targets } => coordinate(&ctx, speakers, targets),
        Command::Compare {
            a,
            b,
            side,
            counterpart,
            direction,
        } => compare(&ctx, a, b, *side, counterpart, *direction),
        Command::Hypotheses { high, low, universe } => hypotheses(&ctx, high, low, universe),
        Command::Timeline {
            users,
            role,
            window,
            min_population,
        } => run_timeline(&ctx, users, role, *window, *min_population),
        Command::Predict {
            domains,
            tag,
            high,
            low,
            kinds,
            folds,
            c,
            export_datasets,
        } => predict(&ctx, domains.as_deref(), tag, high.as_deref(), low.as_deref(), kinds, *folds, *c, *export_datasets),
        Command::Simulate { spec } => simulate(&ctx, spec),
        Command::Validate { spec } => validate(&ctx, spec.as_deref()),
    }
}

fn profile_outputs(ctx: &Ctx, stem: &str, p: &GroupProfile) -> CliResult {
    ctx.write(&format!("{stem}.csv"), report::profile_csv(p)?)?;
    ctx.write_json(&format!("{stem}.json"), p)?;
    Ok(())
}

fn coordinate(ctx: &Ctx, speakers: &str, targets: &str) -> CliResult {
    let corpus = ctx.load_corpus()?;
    let s = select::resolve(&corpus, speakers)?;
    let t = select::resolve(&corpus, targets)?;
    let p = coordination_profile(&corpus, &ctx.lexicon, &s, &t, &ctx.filters, ctx.coordination())?;
    profile_outputs(ctx, "profile", &p)?;
    if ctx.common.svg {
        let xs: Vec<String> = coordlab::coordination::Metric::all().map(|m| m.name().to_string()).collect();
        let series = Series {
            name: format!("{} -> {}", p.speaker_group, p.target_group),
            values: coordlab::coordination::Metric::all().map(|m| p.value(m).mean).collect(),
            errors: vec![],
        };
        let title = "Coordination by marker";
        ctx.write("profile.svg", report::bar_chart_svg(title, &xs, &[series], &[], ctx.common.percent))?;
    }
    outp!("{}", report::display_profile(&p, ctx.common.percent));
    Ok(())
}

fn direction_of(d: DirectionArg) -> (Direction, bool) {
    match d {
        DirectionArg::Greater => (Direction::Greater, true),
        DirectionArg::Less => (Direction::Less, true),
        DirectionArg::None => (Direction::Greater, false),
    }
}

fn compare(ctx: &Ctx, a: &str, b: &str, side: SideArg, counterpart: &str, direction: DirectionArg) -> CliResult {
    let corpus = ctx.load_corpus()?;
    let ga = select::resolve(&corpus, a)?;
    let gb = select::resolve(&corpus, b)?;
    let other = select::resolve(&corpus, counterpart)?;
    let profile = |g| match side {
        SideArg::Speakers => coordination_profile(&corpus, &ctx.lexicon, g, &other, &ctx.filters, ctx.coordination()),
        SideArg::Targets => coordination_profile(&corpus, &ctx.lexicon, &other, g, &ctx.filters, ctx.coordination()),
    };
    let pa = profile(&ga)?;
    let pb = profile(&gb)?;
    let (dir, directional) = direction_of(direction);
    let mut options = ctx.compare_options();
    if !directional {
        options.tails = Tails::Two;
    }
    let r = compare_groups(&pa, &pb, dir, options);
    ctx.write("comparison.csv", report::comparison_csv(&r)?)?;
    ctx.write_json("comparison.json", &r)?;
    let (xs, series) = report::comparison_series(&r);
    ctx.write("comparison_plot.csv", report::plot_data_csv("metric", &xs, &series)?)?;
    if ctx.common.svg {
        let stars: Vec<u8> = r.entries.iter().map(|e| e.test.as_ref().map_or(0, |t| t.stars)).collect();
        let title = format!("{} vs {}", r.group_a, r.group_b);
        ctx.write("comparison.svg", report::bar_chart_svg(&title, &xs, &series, &stars, ctx.common.percent))?;
    }
    outp!("{}", report::display_comparison(&r, ctx.common.percent));
    Ok(())
}

fn hypotheses(ctx: &Ctx, high: &str, low: &str, universe: &str) -> CliResult {
    let corpus = ctx.load_corpus()?;
    let gh = select::resolve(&corpus, high)?;
    let gl = select::resolve(&corpus, low)?;
    let gu = select::resolve(&corpus, universe)?;
    let options = HypothesisOptions {
        compare: ctx.compare_options(),
        coordination: ctx.coordination(),
        ..Default::default()
    };
    let r = evaluate_hypotheses(&corpus, &ctx.lexicon, &gh, &gl, &gu, &ctx.filters, &options)?;
    ctx.write_json("hypotheses.json", &r)?;
    for (name, h) in [("p_target", &r.p_target), ("p_speaker", &r.p_speaker)] {
        ctx.write(&format!("{name}.csv"), report::comparison_csv(&h.comparison)?)?;
        let (xs, series) = report::comparison_series(&h.comparison);
        ctx.write(&format!("{name}_plot.csv"), report::plot_data_csv("metric", &xs, &series)?)?;
        if ctx.common.svg {
            let stars: Vec<u8> = h.comparison.entries.iter().map(|e| e.test.as_ref().map_or(0, |t| t.stars)).collect();
            let svg = report::bar_chart_svg(name, &xs, &series, &stars, ctx.common.percent);
            ctx.write(&format!("{name}.svg"), svg)?;
        }
        let verdict = serde_json::to_value(h.verdict).map_err(Error::from)?;
        out!("{name}: {} ({} vs {})", verdict.as_str().unwrap_or_default(), h.high_group, h.low_group);
        outp!("{}", report::display_comparison(&h.comparison, ctx.common.percent));
    }
    Ok(())
}

fn run_timeline(ctx: &Ctx, users: &str, role: &str, window: i64, min_population: usize) -> CliResult {
    if window < 0 {
        return Err(CliError::usage("--window must be non-negative"));
    }
    let corpus = ctx.load_corpus()?;
    let group = select::resolve(&corpus, users)?;
    let all = derive_exchanges(&corpus);
    let (kept, _) = filter_exchanges_with_stats(&all, &ctx.filters, &corpus, &ctx.lexicon);
    let options = TimelineOptions {
        window_months: window,
        min_population,
        thresholds: ctx.thresholds(),
        ..TimelineOptions::new(role)
    };
    let s = timeline(&corpus, &kept.exchanges, group.members.iter().map(String::as_str), &options);
    if s.users == 0 {
        return Err(Error::InsufficientMetadata(format!("no member of `{users}` has a `{role}` promotion")).into());
    }
    ctx.write("timeline.csv", report::timeline_csv(&s)?)?;
    ctx.write_json("timeline.json", &s)?;
    if ctx.common.svg {
        let xs: Vec<String> = s.buckets.iter().map(|b| b.bucket.to_string()).collect();
        let series = vec![
            Series {
                name: "as speaker".into(),
                values: s.buckets.iter().map(|b| b.as_speaker).collect(),
                errors: vec![],
            },
            Series {
                name: "as target".into(),
                values: s.buckets.iter().map(|b| b.as_target).collect(),
                errors: vec![],
            },
        ];
        let svg = report::bar_chart_svg("Coordination by month from event", &xs, &series, &[], ctx.common.percent);
        ctx.write("timeline.svg", svg)?;
    }
    let scale = if ctx.common.percent { 100.0 } else { 1.0 };
    let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{:.4}", x * scale));
    out!("bucket  as_speaker  as_target  (users: {}, excluded: {})", s.users, s.excluded_no_event);
    for b in &s.buckets {
        out!("{:>6}  {:>10}  {:>9}", b.bucket, show(b.as_speaker), show(b.as_target));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainEntry {
    tag: String,
    corpus: PathBuf,
    #[serde(default)]
    participants: Option<PathBuf>,
    #[serde(default)]
    cases: Option<PathBuf>,
    high: String,
    low: String,
    #[serde(default)]
    filters: Option<FilterSpec>,
    #[serde(default)]
    identity_per_case: bool,
}

#[derive(Serialize)]
struct DomainSummary {
    tag: String,
    all_pairs: PairStats,
    coordination_pairs: PairStats,
}

fn load_domains(ctx: &Ctx, path: Option<&Path>, tag: &str, high: Option<&str>, low: Option<&str>) -> CliResult<Vec<DomainEntry>> {
    let Some(path) = path else {
        let corpus = ctx
            .common
            .corpus
            .clone()
            .ok_or_else(|| CliError::usage("predict needs --domains or --corpus"))?;
        let (Some(high), Some(low)) = (high, low) else {
            return Err(CliError::usage("predict without --domains needs --high and --low labels"));
        };
        return Ok(vec![DomainEntry {
            tag: tag.to_string(),
            corpus,
            participants: ctx.common.participants.clone(),
            cases: ctx.common.cases.clone(),
            high: high.to_string(),
            low: low.to_string(),
            filters: None,
            identity_per_case: ctx.common.identity_per_case,
        }]);
    };
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut entries: Vec<DomainEntry> = serde_json::from_str(&text).map_err(|e| CliError {
        kind: "InvalidDomains".into(),
        message: format!("{}: {e}", path.display()),
        code: 2,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    for d in &mut entries {
        d.corpus = base.join(&d.corpus);
        d.participants = d.participants.as_ref().map(|p| base.join(p));
        d.cases = d.cases.as_ref().map(|p| base.join(p));
    }
    if entries.is_empty() {
        return Err(CliError::usage("the domains file lists no domain"));
    }
    Ok(entries)
}

#[allow(clippy::too_many_arguments)]
fn predict(
    ctx: &Ctx,
    domains_path: Option<&Path>,
    tag: &str,
    high: Option<&str>,
    low: Option<&str>,
    kinds: &str,
    folds: usize,
    c: f64,
    export: bool,
) -> CliResult {
    let kinds: Vec<FeatureKind> = kinds
        .split(',')
        .map(|k| FeatureKind::from_name(k.trim()).ok_or_else(|| CliError::usage(format!("unknown feature kind `{k}`"))))
        .collect::<CliResult<_>>()?;
    let entries = load_domains(ctx, domains_path, tag, high, low)?;
    let mut data = Vec::new();
    let mut summaries = Vec::new();
    for d in &entries {
        let corpus = load_corpus_files(
            &d.corpus,
            d.participants.as_deref(),
            d.cases.as_deref(),
            &ctx.lexicon,
            LoadOptions {
                identity_per_case: d.identity_per_case,
            },
        )?;
        let filters = d.filters.clone().unwrap_or_else(|| ctx.filters.clone());
        let pairing = Pairing {
            high_label: d.high.clone(),
            low_label: d.low.clone(),
        };
        let mut options = PairOptions {
            seed: ctx.seed,
            require_full_coordination: false,
            thresholds: ctx.thresholds(),
        };
        let (pairs, all_stats) = build_pairs(&corpus, &ctx.lexicon, &pairing, &d.tag, &filters, &options)?;
        options.require_full_coordination = true;
        let (coordination_pairs, coord_stats) = match build_pairs(&corpus, &ctx.lexicon, &pairing, &d.tag, &filters, &options) {
            Ok(r) => r,
            Err(Error::NoPairs(_)) => (Vec::new(), PairStats::default()),
            Err(e) => return Err(e.into()),
        };
        summaries.push(DomainSummary {
            tag: d.tag.clone(),
            all_pairs: all_stats,
            coordination_pairs: coord_stats,
        });
        data.push(DomainData {
            tag: d.tag.clone(),
            pairs,
            coordination_pairs,
        });
    }

    let options = EvalOptions {
        svm: SvmParams {
            c,
            seed: ctx.seed,
            ..Default::default()
        },
        thresholds: ctx.thresholds(),
        vocab_size: BOW_BLOCK_SIZE,
        parallelism: ctx.parallelism,
    };
    let grid = prediction_grid(&data, &kinds, folds, ctx.seed, &options);
    ctx.write_json("grid.json", &grid)?;
    ctx.write_json("pairs.json", &summaries)?;
    ctx.write("grid.csv", report::grid_csv(&grid)?)?;

    if export {
        for d in &data {
            for &k in &kinds {
                let pairs = d.for_kind(k);
                // Exported bag-of-words uses a vocabulary over the whole domain.
                let vocab = (k == FeatureKind::Bow).then(|| BowVocabulary::build(pairs.iter(), BOW_BLOCK_SIZE));
                let mut buf = Vec::new();
                export_dataset(&mut buf, pairs, k, vocab.as_ref(), ctx.thresholds())?;
                ctx.write(&format!("datasets/{}_{}.jsonl", d.tag, k.name()), buf)?;
            }
        }
    }

    let scale = if ctx.common.percent { 100.0 } else { 1.0 };
    out!("{:<14} {:<14} {:<13} {:>9} {:>6}  sig", "train", "test", "features", "accuracy", "n");
    for cell in &grid.cells {
        let acc = cell.accuracy.map_or("-".into(), |a| format!("{:.3}", a * scale));
        let test = cell.test.as_deref().unwrap_or("(absent)");
        let note = match cell.status {
            CellStatus::Ok => "*".repeat(cell.stars as usize),
            CellStatus::Absent => "absent".into(),
            CellStatus::Failed => cell.error.clone().unwrap_or_default(),
        };
        out!("{:<14} {:<14} {:<13} {:>9} {:>6}  {note}", cell.train, test, cell.kind.name(), acc, cell.n);
    }
    if grid.cells.iter().all(|c| c.status != CellStatus::Ok) {
        let first = grid.cells.iter().find_map(|c| c.error.clone()).unwrap_or_default();
        return Err(CliError {
            kind: "NoEvaluableCell".into(),
            message: format!("no grid cell could be evaluated: {first}"),
            code: 3,
        });
    }
    Ok(())
}

fn simulate(ctx: &Ctx, spec_path: &Path) -> CliResult {
    let mut spec = GenSpec::load(spec_path)?;
    if let Some(seed) = ctx.common.seed {
        spec.seed = seed;
    }
    let g = generate(&spec, &ctx.lexicon, ctx.parallelism)?;
    let mut utts = Vec::new();
    g.write_utterances(&mut utts)?;
    let mut parts = Vec::new();
    g.write_participants(&mut parts)?;
    ctx.write("utterances.jsonl", utts)?;
    ctx.write("participants.jsonl", parts)?;
    ctx.write_json("oracle.json", &oracle(&spec)?)?;
    ctx.write_json("spec.resolved.json", &spec)?;
    out!(
        "{} utterances, {} exchanges, {} participants",
        g.utterances.len(),
        g.n_exchanges(),
        g.participants.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct Validation {
    lexicon_source: String,
    lexicon_lexemes: usize,
    corpus: Option<coordlab::corpus::LoadStats>,
    exchanges: Option<usize>,
    participants: Option<usize>,
    labels: Option<std::collections::BTreeMap<String, usize>>,
    spec_valid: Option<bool>,
}

fn validate(ctx: &Ctx, spec: Option<&Path>) -> CliResult {
    if ctx.common.corpus.is_none() && spec.is_none() {
        return Err(CliError::usage("validate needs --corpus and/or --spec"));
    }
    let mut v = Validation {
        lexicon_source: ctx.lexicon.source_id().to_string(),
        lexicon_lexemes: ctx.lexicon.total_lexemes(),
        corpus: None,
        exchanges: None,
        participants: None,
        labels: None,
        spec_valid: None,
    };
    if ctx.common.corpus.is_some() {
        let corpus = ctx.load_corpus()?;
        let mut labels = std::collections::BTreeMap::new();
        for p in corpus.participants().values() {
            for l in &p.group_labels {
                *labels.entry(l.clone()).or_insert(0) += 1;
            }
        }
        v.corpus = Some(corpus.stats());
        v.exchanges = Some(derive_exchanges(&corpus).len());
        v.participants = Some(corpus.participants().len());
        v.labels = Some(labels);
    }
    if let Some(path) = spec {
        GenSpec::load(path)?.validate(&ctx.lexicon)?;
        v.spec_valid = Some(true);
    }
    ctx.write_json("validation.json", &v)?;
    out!("{}", serde_json::to_string_pretty(&v).map_err(Error::from)?);
    Ok(())
}
