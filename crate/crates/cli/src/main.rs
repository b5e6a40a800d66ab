use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use ttrose_core::census::{
    census_row, entropy_from_census, spectrum_row, upper_bound_experiment, CensusOptions, CensusRow, EntropyAxis,
    WordMode,
};
use ttrose_core::family::{build_family_map, certify_map, family_factors, wrap_word, PipelineOptions, PnpStatus};
use ttrose_core::folds::{fold_count_report, fold_line_roses, stallings_decomposition_with, unmarked_representatives, FoldGranularity};
use ttrose_core::nielsen::{unfolding_inp_search, SearchOptions, SearchOutcome};
use ttrose_core::{Certificate, FullWord, RoseMap};

const EXIT_INCONCLUSIVE: u8 = 2;

#[derive(Parser)]
#[command(name = "ttrose", version, about = "Train-track maps on roses: certification and counting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 3)]
    rank: usize,
    /// Inner word length, `n` or a range `a..b` (inclusive).
    #[arg(long)]
    len: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
    mode: Mode,
    /// Words per length in sample mode.
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exhaustive,
    Sample,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    WordSpace,
    LogLambda,
}

#[derive(Clone, Copy, ValueEnum)]
enum Granularity {
    Maximal,
    SingleLetter,
}

#[derive(Args, Clone)]
struct MapInput {
    /// Inner full word over subscripts 2..r, e.g. 23322.
    #[arg(long)]
    word: Option<String>,
    /// Map file: a `rank: r` line, then `<letter> -> <path>` lines.
    map: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the lone-axis pipeline on a family word or a map file.
    Certify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: MapInput,
        /// Largest period searched for Nielsen paths.
        #[arg(long)]
        r_max: Option<usize>,
    },
    /// Conjugacy-class census of the family per inner word length.
    Census {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
    },
    /// Distinct transition matrices, characteristic polynomials and λ.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
    },
    /// Enumerate positive rose maps up to a norm and check the entry bound.
    Upper {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        norm: usize,
    },
    /// Entropy regression on census output (JSON lines).
    Entropy {
        #[command(flatten)]
        common: Common,
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Axis::WordSpace)]
        axis: Axis,
    },
    /// Stallings fold decomposition and unmarked representatives.
    Folds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: MapInput,
        #[arg(long, value_enum, default_value_t = Granularity::Maximal)]
        granularity: Granularity,
        /// Also write the final graph of each rose along the period as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Unfolding search for indivisible Nielsen paths of g^p.
    Inp {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: MapInput,
        #[arg(long, default_value_t = 1)]
        period: usize,
        /// Bound on |ρ1| + |ρ2|.
        #[arg(long)]
        max_depth: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Certify { common, input, r_max } => cmd_certify(&common, &input, r_max),
        Command::Census { common, budget } => cmd_census(&common, budget),
        Command::Spectrum { common, budget } => cmd_spectrum(&common, budget),
        Command::Upper { common, norm } => cmd_upper(&common, norm),
        Command::Entropy { common, input, axis } => cmd_entropy(&common, &input, axis),
        Command::Folds {
            common,
            input,
            granularity,
            dot,
        } => cmd_folds(&common, &input, granularity, dot.as_deref()),
        Command::Inp {
            common,
            input,
            period,
            max_depth,
        } => cmd_inp(&common, &input, period, max_depth),
    }
}

fn parse_lengths(text: Option<&str>) -> Result<RangeInclusive<usize>> {
    let text = text.context("--len is required")?;
    let range = if let Some((a, b)) = text.split_once("..") {
        let b = b.trim_start_matches('=');
        a.trim().parse()?..=b.trim().parse()?
    } else {
        let n = text.trim().parse()?;
        n..=n
    };
    if range.is_empty() {
        bail!("empty length range {text}");
    }
    Ok(range)
}

fn write_output(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn json_pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// The map and, for a family word, its factors and wrapped word.
struct Loaded {
    map: RoseMap,
    factors: Option<Vec<RoseMap>>,
    word: Option<FullWord>,
}

fn load(common: &Common, input: &MapInput) -> Result<Loaded> {
    match (&input.word, &input.map) {
        (Some(z), None) => {
            let r = common.rank;
            let z = FullWord::parse(r, z)?;
            let w = wrap_word(r, &z)?;
            Ok(Loaded {
                map: build_family_map(r, &w)?,
                factors: Some(family_factors(r, &w)?),
                word: Some(w),
            })
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let map = RoseMap::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
            Ok(Loaded {
                map,
                factors: None,
                word: None,
            })
        }
        (Some(_), Some(_)) => bail!("give either --word or a map file, not both"),
        (None, None) => bail!("give --word or a map file"),
    }
}

fn search_options(common: &Common, max_depth: Option<usize>) -> SearchOptions {
    let mut s = SearchOptions::default();
    if let Some(t) = common.tol {
        s.tol = t;
    }
    s.max_depth = max_depth;
    s
}

fn summary(c: &Certificate) -> String {
    if !c.train_track {
        return "not a train track map".into();
    }
    if !c.expanding {
        return "fails expanding".into();
    }
    if !c.irreducible {
        return "fails irreducible".into();
    }
    if !c.primitive {
        return "transition matrix is not primitive".into();
    }
    if !c.lw_connected {
        return "local Whitehead graph is disconnected".into();
    }
    match &c.pnp {
        PnpStatus::Found { .. } => "fully irreducible: criteria passed except PNP-free; iNP found".into(),
        PnpStatus::Inconclusive { reason } => format!("inconclusive: {reason}"),
        PnpStatus::Free { .. } => {
            let index = c.index.map(|i| i.to_string()).unwrap_or_default();
            if c.lone_axis {
                format!("lone-axis ageometric fully irreducible, index {index}")
            } else {
                format!("ageometric fully irreducible, not lone axis (index {index})")
            }
        }
    }
}

fn cmd_certify(common: &Common, input: &MapInput, r_max: Option<usize>) -> Result<u8> {
    let loaded = load(common, input)?;
    let options = PipelineOptions {
        r_max,
        search: search_options(common, None),
    };
    let mut cert = certify_map(&loaded.map, loaded.factors.as_deref(), &options)?;
    cert.word = loaded.word;
    let text = summary(&cert);
    eprintln!("{text}");
    let content = match common.format {
        Format::Json => json_pretty(&json!({ "schema": 1, "summary": text, "certificate": cert }))?,
        Format::Csv => {
            let opt = |v: Option<String>| v.unwrap_or_default();
            csv_string(
                &[
                    "rank", "word", "norm", "train_track", "expanding", "irreducible", "primitive", "lambda",
                    "lw_connected", "pnp_free", "index", "cut_vertex_free", "ageometric_fully_irreducible",
                    "lone_axis", "inconclusive",
                ],
                &[vec![
                    cert.rank.to_string(),
                    opt(cert.word.as_ref().map(|w| w.to_string())),
                    cert.norm.to_string(),
                    cert.train_track.to_string(),
                    cert.expanding.to_string(),
                    cert.irreducible.to_string(),
                    cert.primitive.to_string(),
                    opt(cert.lambda.map(|l| l.to_string())),
                    cert.lw_connected.to_string(),
                    cert.pnp.is_free().to_string(),
                    opt(cert.index.map(|i| i.to_string())),
                    opt(cert.cut_vertex_free.map(|b| b.to_string())),
                    cert.ageometric_fully_irreducible.to_string(),
                    cert.lone_axis.to_string(),
                    cert.inconclusive.to_string(),
                ]],
            )?
        }
    };
    write_output(common.out.as_deref(), &content)?;
    Ok(if cert.inconclusive { EXIT_INCONCLUSIVE } else { 0 })
}

fn census_options(common: &Common, budget: usize) -> CensusOptions {
    let mode = match common.mode {
        Mode::Exhaustive => WordMode::Exhaustive,
        Mode::Sample => WordMode::Sample {
            count: common.count,
            seed: common.seed,
        },
    };
    let mut options = CensusOptions {
        mode,
        budget,
        ..CensusOptions::default()
    };
    if let Some(t) = common.tol {
        options.tol = t;
    }
    options
}

fn mode_cells(mode: &WordMode) -> [String; 3] {
    match mode {
        WordMode::Exhaustive => ["exhaustive".into(), String::new(), String::new()],
        WordMode::Sample { count, seed } => ["sample".into(), count.to_string(), seed.to_string()],
    }
}

fn json_lines<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut s = String::new();
    for row in rows {
        s.push_str(&serde_json::to_string(row)?);
        s.push('\n');
    }
    Ok(s)
}

fn cmd_census(common: &Common, budget: usize) -> Result<u8> {
    let lengths = parse_lengths(common.len.as_deref())?;
    let options = census_options(common, budget);
    let mut rows = Vec::new();
    for n in lengths {
        let row = census_row(common.rank, n, &options)?;
        eprintln!(
            "n={n}: {} certified of {}, {} classes ({:.2?})",
            row.words_certified, row.words_tested, row.classes, row.elapsed
        );
        rows.push(row);
    }
    let content = match common.format {
        Format::Json => json_lines(&rows)?,
        Format::Csv => csv_string(
            &[
                "rank", "n", "mode", "count", "seed", "words_tested", "words_certified", "inconclusive",
                "distinct_matrices", "distinct_lambda_buckets", "classes", "max_log_lambda", "max_norm",
                "class_lower_bound", "bound_holds", "partial",
            ],
            &rows
                .iter()
                .map(|r| {
                    let [mode, count, seed] = mode_cells(&r.mode);
                    vec![
                        r.rank.to_string(),
                        r.n.to_string(),
                        mode,
                        count,
                        seed,
                        r.words_tested.to_string(),
                        r.words_certified.to_string(),
                        r.inconclusive.to_string(),
                        r.distinct_matrices.to_string(),
                        r.distinct_lambda_buckets.to_string(),
                        r.classes.to_string(),
                        r.max_log_lambda.map(|x| x.to_string()).unwrap_or_default(),
                        r.max_norm.map(|x| x.to_string()).unwrap_or_default(),
                        r.class_lower_bound.to_string(),
                        r.bound_holds.to_string(),
                        r.partial.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
    };
    write_output(common.out.as_deref(), &content)?;
    let inconclusive = rows.iter().any(|r| r.inconclusive > 0);
    Ok(if inconclusive { EXIT_INCONCLUSIVE } else { 0 })
}

fn cmd_spectrum(common: &Common, budget: usize) -> Result<u8> {
    let lengths = parse_lengths(common.len.as_deref())?;
    let options = census_options(common, budget);
    let mut rows = Vec::new();
    for n in lengths {
        let row = spectrum_row(common.rank, n, &options)?;
        eprintln!(
            "n={n}: {} matrices, {} polynomials, {} λ buckets ({:.2?})",
            row.distinct_matrices, row.distinct_char_polys, row.lambda_buckets, row.elapsed
        );
        rows.push(row);
    }
    let content = match common.format {
        Format::Json => json_lines(&rows)?,
        Format::Csv => csv_string(
            &[
                "rank", "n", "mode", "count", "seed", "words_tested", "words_certified", "distinct_matrices",
                "distinct_char_polys", "lambda_buckets", "composition_bound", "positive_words", "partial",
            ],
            &rows
                .iter()
                .map(|r| {
                    let [mode, count, seed] = mode_cells(&r.mode);
                    vec![
                        r.rank.to_string(),
                        r.n.to_string(),
                        mode,
                        count,
                        seed,
                        r.words_tested.to_string(),
                        r.words_certified.to_string(),
                        r.distinct_matrices.to_string(),
                        r.distinct_char_polys.to_string(),
                        r.lambda_buckets.to_string(),
                        r.composition_bound.to_string(),
                        r.positive_words.to_string(),
                        r.partial.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
    };
    write_output(common.out.as_deref(), &content)?;
    Ok(0)
}

fn cmd_upper(common: &Common, norm: usize) -> Result<u8> {
    let report = upper_bound_experiment(common.rank, norm, common.tol.unwrap_or(1e-9))?;
    eprintln!(
        "{} maps, {} expanding irreducible, {} bound violations",
        report.maps_enumerated, report.expanding_irreducible, report.bound_violations
    );
    let content = match common.format {
        Format::Json => json_pretty(&report)?,
        Format::Csv => csv_string(
            &["rank", "norm_budget", "ceil_log_lambda", "count"],
            &report
                .buckets
                .iter()
                .map(|(b, c)| vec![report.rank.to_string(), norm.to_string(), b.to_string(), c.to_string()])
                .collect::<Vec<_>>(),
        )?,
    };
    write_output(common.out.as_deref(), &content)?;
    Ok(if report.bound_violations > 0 { 1 } else { 0 })
}

fn cmd_entropy(common: &Common, input: &Path, axis: Axis) -> Result<u8> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let rows = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str::<CensusRow>(l).with_context(|| format!("line {}", i + 1)))
        .collect::<Result<Vec<_>>>()?;
    let axis = match axis {
        Axis::WordSpace => EntropyAxis::WordSpace,
        Axis::LogLambda => EntropyAxis::LogLambda,
    };
    let est = entropy_from_census(&rows, axis)?;
    eprintln!(
        "slope {:.6} (residual {:.3e}); desk-scale data cannot certify the limsup",
        est.log_principal, est.principal_residual
    );
    let content = match common.format {
        Format::Json => json_pretty(&est)?,
        Format::Csv => csv_string(
            &[
                "log_principal", "principal", "principal_residual", "log_secondary", "secondary",
                "secondary_residual", "points_used", "t_min", "t_max",
            ],
            &[vec![
                est.log_principal.to_string(),
                est.principal.to_string(),
                est.principal_residual.to_string(),
                est.log_secondary.to_string(),
                est.secondary.to_string(),
                est.secondary_residual.to_string(),
                est.points_used.to_string(),
                est.t_min.to_string(),
                est.t_max.to_string(),
            ]],
        )?,
    };
    write_output(common.out.as_deref(), &content)?;
    Ok(0)
}

fn cmd_folds(common: &Common, input: &MapInput, granularity: Granularity, dot: Option<&Path>) -> Result<u8> {
    let loaded = load(common, input)?;
    let g = &loaded.map;
    let granularity = match granularity {
        Granularity::Maximal => FoldGranularity::Maximal,
        Granularity::SingleLetter => FoldGranularity::SingleLetter,
    };
    let seq = stallings_decomposition_with(g, granularity)?;
    let counts = fold_count_report(g)?;
    let cert = certify_map(g, loaded.factors.as_deref(), &PipelineOptions::default())?;
    let unmarked = if cert.lone_axis {
        Some(unmarked_representatives(g, Some(&cert))?)
    } else {
        None
    };
    if let Some(path) = dot {
        let mut s = String::new();
        for (i, m) in fold_line_roses(&seq)?.iter().enumerate() {
            s.push_str(&format!("// rose {} after {} steps\n", i, seq.rose_indices[i]));
            s.push_str(&ttrose_core::folds::LabeledGraph::from_map(m).to_dot());
        }
        fs::write(path, s).with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!(
        "{} folds ({} maximal, {} single-letter, ‖g‖/2 = {})",
        seq.fold_count(),
        counts.maximal,
        counts.single_letter,
        counts.half_norm
    );
    let content = match common.format {
        Format::Json => json_pretty(&json!({
            "schema": 1,
            "fold_count": seq.fold_count(),
            "counts": counts,
            "sequence": seq,
            "unmarked": unmarked,
        }))?,
        Format::Csv => csv_string(
            &["step", "kind", "vertex", "germ1", "germ2", "length"],
            &seq.steps
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let germ = |l: ttrose_core::folds::GraphLetter| format!("{}{}", if l.forward { "+" } else { "-" }, l.edge);
                    vec![
                        (i + 1).to_string(),
                        serde_json::to_value(s.kind).unwrap().as_str().unwrap_or_default().to_string(),
                        s.vertex.to_string(),
                        germ(s.germ1),
                        germ(s.germ2),
                        s.length.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
    };
    write_output(common.out.as_deref(), &content)?;
    Ok(if cert.inconclusive { EXIT_INCONCLUSIVE } else { 0 })
}

fn cmd_inp(common: &Common, input: &MapInput, period: usize, max_depth: Option<usize>) -> Result<u8> {
    let loaded = load(common, input)?;
    let report = unfolding_inp_search(&loaded.map, period, &search_options(common, max_depth))?;
    let code = match &report.outcome {
        SearchOutcome::Found { candidates } => {
            for c in candidates {
                eprintln!("iNP of period {}: {}", c.period, c.path());
            }
            0
        }
        SearchOutcome::CertifiedEmpty => {
            eprintln!("no indivisible Nielsen path of period {period}");
            0
        }
        SearchOutcome::Inconclusive { reason } => {
            eprintln!("inconclusive: {reason}");
            EXIT_INCONCLUSIVE
        }
    };
    let content = match common.format {
        Format::Json => json_pretty(&json!({ "schema": 1, "report": report }))?,
        Format::Csv => {
            let rows = match &report.outcome {
                SearchOutcome::Found { candidates } => candidates
                    .iter()
                    .map(|c| {
                        vec![
                            c.period.to_string(),
                            c.path().to_string(),
                            format!("{{{},{}}}", c.base_turn.first(), c.base_turn.second()),
                            c.half_length.to_string(),
                        ]
                    })
                    .collect(),
                _ => Vec::new(),
            };
            csv_string(&["period", "path", "base_turn", "half_length"], &rows)?
        }
    };
    write_output(common.out.as_deref(), &content)?;
    Ok(code)
}
