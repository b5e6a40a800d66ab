//! Counting experiments over the family: conjugacy-class census, stretch
//! factor spectrum, the small-norm upper-bound enumeration and entropy
//! regression.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{
    certify_with, enumerate_full_words, sample_full_words, wrap_word, Certificate, FullWord, PipelineOptions,
};
use crate::folds::{unmarked_representatives, UnmarkedRep};
use crate::map::RoseMap;
use crate::path::{EdgePath, OrientedEdge};
use crate::spectral::{CharPoly, TransitionMatrix, DEFAULT_TOL};

/// Word selection for a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum WordMode {
    Exhaustive,
    Sample { count: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct CensusOptions {
    pub mode: WordMode,
    /// Most words examined per row; exhaustive rows beyond it are truncated
    /// and flagged partial.
    pub budget: usize,
    /// λ values closer than this share a bucket.
    pub tol: f64,
    pub pipeline: PipelineOptions,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            mode: WordMode::Exhaustive,
            budget: 100_000,
            tol: 1e-9,
            pipeline: PipelineOptions::default(),
        }
    }
}

/// Inner words of length `n`, and whether the budget cut them short.
pub fn select_words(r: usize, n: usize, options: &CensusOptions) -> Result<(Vec<FullWord>, bool)> {
    match options.mode {
        WordMode::Exhaustive => {
            let space = (r as f64 - 1.0).powi(n as i32);
            if space > 1e8 {
                return Err(Error::Budget(format!(
                    "exhaustive enumeration of {space:.0} words at length {n}"
                )));
            }
            let mut words = enumerate_full_words(r, n);
            let partial = words.len() > options.budget;
            words.truncate(options.budget);
            Ok((words, partial))
        }
        WordMode::Sample { count, seed } => {
            let count_used = count.min(options.budget);
            // one stream per length so rows do not depend on the range
            let words = sample_full_words(r, n, count_used, seed.wrapping_add(n as u64))?;
            Ok((words, count_used < count))
        }
    }
}

/// Everything the counting commands need about one word.
#[derive(Debug, Clone)]
pub struct WordReport {
    pub inner: FullWord,
    pub certificate: Certificate,
    pub matrix: TransitionMatrix,
    pub char_poly: CharPoly,
    pub unmarked: Option<BTreeSet<UnmarkedRep>>,
}

/// Certifies each inner word in parallel; results keep the input order.
pub fn analyze_words(r: usize, words: &[FullWord], with_unmarked: bool, pipeline: &PipelineOptions) -> Result<Vec<WordReport>> {
    words
        .par_iter()
        .map(|z| {
            let w = wrap_word(r, z)?;
            let certificate = certify_with(r, &w, pipeline)?;
            let g = RoseMap::parse(&certificate.map)?;
            let matrix = g.transition_matrix();
            let char_poly = matrix.char_poly();
            let unmarked = if with_unmarked && certificate.lone_axis {
                Some(unmarked_representatives(&g, Some(&certificate))?)
            } else {
                None
            };
            Ok(WordReport {
                inner: z.clone(),
                certificate,
                matrix,
                char_poly,
                unmarked,
            })
        })
        .collect()
}

/// Partition of the certified words: two words share a class when their
/// unmarked representative sets meet.
pub fn partition_by_unmarked(sets: &[&BTreeSet<UnmarkedRep>]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..sets.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut owner: BTreeMap<&UnmarkedRep, usize> = BTreeMap::new();
    for (i, set) in sets.iter().enumerate() {
        for rep in set.iter() {
            match owner.get(rep) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
                None => {
                    owner.insert(rep, i);
                }
            }
        }
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..sets.len() {
        let root = find(&mut parent, i);
        classes.entry(root).or_default().push(i);
    }
    classes.into_values().collect()
}

/// Groups sorted values whose consecutive gaps are at most `tol`.
pub fn float_buckets(values: &[f64], tol: f64) -> usize {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mut count = 0;
    let mut last: Option<f64> = None;
    for x in v {
        if last.is_none_or(|l| x - l > tol) {
            count += 1;
        }
        last = Some(x);
    }
    count
}

/// One census row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusRow {
    pub schema: u32,
    pub rank: usize,
    pub n: usize,
    #[serde(flatten)]
    pub mode: WordMode,
    pub words_tested: usize,
    pub words_certified: usize,
    pub inconclusive: usize,
    pub distinct_matrices: usize,
    pub distinct_lambda_buckets: usize,
    pub classes: usize,
    /// Least inner word of each class, classes ordered by that word.
    pub class_representatives: Vec<String>,
    pub max_log_lambda: Option<f64>,
    pub max_norm: Option<usize>,
    /// `certified / (2^r · r! · max‖f_w‖)`.
    pub class_lower_bound: f64,
    pub bound_holds: bool,
    pub partial: bool,
    #[serde(skip)]
    pub elapsed: Duration,
}

fn symmetry_order(r: usize) -> usize {
    (1..=r).product::<usize>() << r
}

pub fn census_row(r: usize, n: usize, options: &CensusOptions) -> Result<CensusRow> {
    let start = Instant::now();
    let (words, partial) = select_words(r, n, options)?;
    let reports = analyze_words(r, &words, true, &options.pipeline)?;
    let certified: Vec<&WordReport> = reports.iter().filter(|w| w.certificate.lone_axis).collect();
    let inconclusive = reports.iter().filter(|w| w.certificate.inconclusive).count();
    let sets: Vec<&BTreeSet<UnmarkedRep>> = certified.iter().map(|w| w.unmarked.as_ref().unwrap()).collect();
    let classes = partition_by_unmarked(&sets);
    let mut class_representatives: Vec<String> = classes
        .iter()
        .map(|c| c.iter().map(|&i| certified[i].inner.to_string()).min().unwrap())
        .collect();
    class_representatives.sort();
    let matrices: BTreeSet<&TransitionMatrix> = certified.iter().map(|w| &w.matrix).collect();
    let lambdas: Vec<f64> = certified.iter().filter_map(|w| w.certificate.lambda).collect();
    let max_norm = certified.iter().map(|w| w.certificate.norm).max();
    let class_lower_bound = match max_norm {
        Some(m) => certified.len() as f64 / (symmetry_order(r) * m) as f64,
        None => 0.0,
    };
    Ok(CensusRow {
        schema: 1,
        rank: r,
        n,
        mode: options.mode,
        words_tested: words.len(),
        words_certified: certified.len(),
        inconclusive,
        distinct_matrices: matrices.len(),
        distinct_lambda_buckets: float_buckets(&lambdas, options.tol),
        classes: classes.len(),
        class_representatives,
        max_log_lambda: lambdas.iter().copied().map(f64::ln).reduce(f64::max),
        max_norm,
        class_lower_bound,
        bound_holds: classes.len() as f64 >= class_lower_bound,
        partial,
        elapsed: start.elapsed(),
    })
}

pub fn census(r: usize, lengths: impl IntoIterator<Item = usize>, options: &CensusOptions) -> Result<Vec<CensusRow>> {
    lengths.into_iter().map(|n| census_row(r, n, options)).collect()
}

/// One spectrum row.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub schema: u32,
    pub rank: usize,
    pub n: usize,
    #[serde(flatten)]
    pub mode: WordMode,
    pub words_tested: usize,
    pub words_certified: usize,
    pub distinct_matrices: usize,
    /// Upper bound for the number of distinct λ.
    pub distinct_char_polys: usize,
    pub lambda_buckets: usize,
    /// Letter-multiplicity vectors of an inner word of length n.
    pub composition_bound: u64,
    /// `(r-1)^n`.
    pub positive_words: f64,
    pub partial: bool,
    #[serde(skip)]
    pub elapsed: Duration,
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

pub fn spectrum_row(r: usize, n: usize, options: &CensusOptions) -> Result<SpectrumRow> {
    let start = Instant::now();
    let (words, partial) = select_words(r, n, options)?;
    let reports = analyze_words(r, &words, false, &options.pipeline)?;
    let certified: Vec<&WordReport> = reports.iter().filter(|w| w.certificate.lone_axis).collect();
    let matrices: BTreeSet<&TransitionMatrix> = certified.iter().map(|w| &w.matrix).collect();
    let polys: BTreeSet<&CharPoly> = certified.iter().map(|w| &w.char_poly).collect();
    let lambdas: Vec<f64> = certified.iter().filter_map(|w| w.certificate.lambda).collect();
    Ok(SpectrumRow {
        schema: 1,
        rank: r,
        n,
        mode: options.mode,
        words_tested: words.len(),
        words_certified: certified.len(),
        distinct_matrices: matrices.len(),
        distinct_char_polys: polys.len(),
        lambda_buckets: float_buckets(&lambdas, options.tol),
        composition_bound: binomial((n + r - 2) as u64, (r - 2) as u64),
        positive_words: (r as f64 - 1.0).powi(n as i32),
        partial,
        elapsed: start.elapsed(),
    })
}

pub fn spectrum(r: usize, lengths: impl IntoIterator<Item = usize>, options: &CensusOptions) -> Result<Vec<SpectrumRow>> {
    lengths.into_iter().map(|n| spectrum_row(r, n, options)).collect()
}

/// Result of the small-norm enumeration.
#[derive(Debug, Clone, Serialize)]
pub struct UpperReport {
    pub schema: u32,
    pub rank: usize,
    pub norm_budget: usize,
    pub maps_enumerated: usize,
    pub expanding_irreducible: usize,
    /// Count per `⌈log λ⌉`.
    pub buckets: BTreeMap<i64, usize>,
    /// Maps with `max m_ij > k·λ^(k+1)`.
    pub bound_violations: usize,
    /// Largest `max m_ij / (k·λ^(k+1))` seen.
    pub worst_ratio: f64,
}

/// Limit on the number of maps `cmd_upper` will enumerate.
pub const UPPER_MAX_MAPS: u128 = 50_000_000;

/// Number of positive rose maps of rank `r` with norm at most `b`.
pub fn positive_map_count(r: usize, b: usize) -> u128 {
    // ways[s] = tuples of the first i images with total length s
    let mut ways = vec![0u128; b + 1];
    ways[0] = 1;
    for _ in 0..r {
        let mut next = vec![0u128; b + 1];
        for (s, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            let mut words = 1u128;
            for len in 1..=b - s {
                words *= r as u128;
                next[s + len] += w * words;
            }
        }
        ways = next;
    }
    ways.iter().sum()
}

fn positive_words(r: usize, len: usize) -> Vec<Vec<OrientedEdge>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (1..=r).map(move |i| {
                    let mut v = w.clone();
                    v.push(OrientedEdge::forward(i));
                    v
                })
            })
            .collect();
    }
    out
}

/// Enumerates positive rose maps of norm at most `b` and checks the entry
/// bound on every expanding irreducible one.
pub fn upper_bound_experiment(r: usize, b: usize, tol: f64) -> Result<UpperReport> {
    if !(2..=3).contains(&r) {
        return Err(Error::Precondition("the upper-bound experiment runs for rank 2 or 3".into()));
    }
    let total = positive_map_count(r, b);
    if total > UPPER_MAX_MAPS {
        return Err(Error::Budget(format!("{total} maps at norm {b}")));
    }
    let mut report = UpperReport {
        schema: 1,
        rank: r,
        norm_budget: b,
        maps_enumerated: total as usize,
        expanding_irreducible: 0,
        buckets: BTreeMap::new(),
        bound_violations: 0,
        worst_ratio: 0.0,
    };
    if b < r {
        return Ok(report);
    }
    let words: Vec<Vec<Vec<OrientedEdge>>> = (0..=b - r + 1).map(|len| positive_words(r, len)).collect();
    let mut choice: Vec<&[OrientedEdge]> = Vec::with_capacity(r);
    let mut results = Vec::new();
    enumerate_maps(r, b, &words, &mut choice, &mut results, tol)?;
    for (lambda, ratio) in results {
        report.expanding_irreducible += 1;
        *report.buckets.entry(lambda.ln().ceil() as i64).or_default() += 1;
        if ratio > 1.0 {
            report.bound_violations += 1;
        }
        report.worst_ratio = report.worst_ratio.max(ratio);
    }
    Ok(report)
}

fn enumerate_maps<'a>(
    r: usize,
    remaining: usize,
    words: &'a [Vec<Vec<OrientedEdge>>],
    choice: &mut Vec<&'a [OrientedEdge]>,
    out: &mut Vec<(f64, f64)>,
    tol: f64,
) -> Result<()> {
    if choice.len() == r {
        let images = choice
            .iter()
            .map(|w| EdgePath::new(r, w.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let g = RoseMap::new(r, images)?;
        if g.is_expanding() && g.is_irreducible() {
            let m = g.transition_matrix();
            let lambda = m.pf_eigenvalue_irreducible(DEFAULT_TOL)?.lambda;
            let k = r as i32;
            let bound = k as f64 * (lambda + tol).powi(k + 1);
            out.push((lambda, m.max_entry() as f64 / bound));
        }
        return Ok(());
    }
    let left_after = r - choice.len() - 1;
    for len in 1..=remaining - left_after {
        for w in &words[len] {
            choice.push(w);
            enumerate_maps(r, remaining - len, words, choice, out, tol)?;
            choice.pop();
        }
    }
    Ok(())
}

/// Regression estimates of the two entropies of a doubly exponential
/// counting function.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyEstimate {
    pub schema: u32,
    /// Slope of `log log ω` against `t`, estimating `log b`.
    pub log_principal: f64,
    pub principal: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the principal fit.
    pub principal_residual: f64,
    /// Slope of `log ω` against `b^t` through the origin, estimating `log a`.
    pub log_secondary: f64,
    pub secondary: f64,
    pub secondary_residual: f64,
    pub points_used: usize,
    pub t_min: f64,
    pub t_max: f64,
}

/// Fits `(t, ω(t))` samples; points with `ω ≤ 1` carry no information
/// about `log log ω` and are dropped.
pub fn estimate_entropy(points: &[(f64, f64)]) -> Result<EntropyEstimate> {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(t, w)| (t, w.ln())).collect();
    estimate_entropy_logs(&logs)
}

/// Same fit from `(t, log ω(t))`, for counts beyond floating range.
pub fn estimate_entropy_logs(points: &[(f64, f64)]) -> Result<EntropyEstimate> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(t, lw)| t.is_finite() && lw.is_finite() && lw > 0.0)
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 points with count above 1, got {}",
            pts.len()
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all points share one t".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = |r: f64| (r / n).sqrt();
    let principal_residual = rms(xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum());

    // log ω(t) ≈ log a · b^t
    let us: Vec<f64> = xs.iter().map(|x| (slope * x).exp()).collect();
    let vs: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let suu: f64 = us.iter().map(|u| u * u).sum();
    let log_secondary = us.iter().zip(&vs).map(|(u, v)| u * v).sum::<f64>() / suu;
    let secondary_residual = rms(us.iter().zip(&vs).map(|(u, v)| (v - log_secondary * u).powi(2)).sum());
    Ok(EntropyEstimate {
        schema: 1,
        log_principal: slope,
        principal: slope.exp(),
        intercept,
        principal_residual,
        log_secondary,
        secondary: log_secondary.exp(),
        secondary_residual,
        points_used: pts.len(),
        t_min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        t_max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Which quantity of a census row plays the role of `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntropyAxis {
    /// `log` of the number of positive inner words, `n·log(r-1)`.
    #[default]
    WordSpace,
    /// Largest `log λ` among certified words.
    LogLambda,
}

pub fn entropy_from_census(rows: &[CensusRow], axis: EntropyAxis) -> Result<EntropyEstimate> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.classes > 0)
        .filter_map(|row| {
            let t = match axis {
                EntropyAxis::WordSpace => Some(row.n as f64 * (row.rank as f64 - 1.0).ln()),
                EntropyAxis::LogLambda => row.max_log_lambda,
            }?;
            Some((t, row.classes as f64))
        })
        .collect();
    estimate_entropy(&points)
}
