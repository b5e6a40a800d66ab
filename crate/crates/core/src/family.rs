//! The explicit family `f_w = g_w ∘ g_{12,1}` of rose maps and its
//! certification as lone-axis ageometric fully irreducible.

use std::fmt;

use num_rational::Ratio;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::RoseMap;
use crate::nielsen::{
    factorization_pnp_certifier, unfolding_inp_search, CertificateMethod, CertifierOptions, FactorizationOutcome,
    InpCandidate, PnpFreeCertificate, SearchOptions, SearchOutcome, DEFAULT_R_MAX,
};
use crate::spectral::DEFAULT_TOL;
use crate::whitehead::{ideal_whitehead_graph, local_whitehead_graph, rotationless_index, WhiteheadGraph, WhiteheadKind};
use crate::path::{EdgePath, OrientedEdge, Turn, MAX_RANK};
use crate::turns::prenull_turns;

fn check_rank(r: usize) -> Result<()> {
    if !(3..=MAX_RANK).contains(&r) {
        return Err(Error::Precondition(format!(
            "family maps need 3 <= rank <= {MAX_RANK}, got {r}"
        )));
    }
    Ok(())
}

/// Elementary map `x_i ↦ x_i x_j`, all other petals fixed.
fn elementary(r: usize, i: usize, j: usize) -> RoseMap {
    let images = (1..=r)
        .map(|k| {
            let mut letters = vec![OrientedEdge::forward(k)];
            if k == i {
                letters.push(OrientedEdge::forward(j));
            }
            EdgePath::new(r, letters).expect("valid letters")
        })
        .collect();
    RoseMap::new(r, images).expect("valid map")
}

/// The generator `g_k`, `k ∈ 1..=12`; `g_{k+6}` repeats `g_k`.
pub fn gen_elementary(r: usize, k: usize) -> Result<RoseMap> {
    check_rank(r)?;
    if !(1..=12).contains(&k) {
        return Err(Error::Precondition(format!("generator index must be in 1..=12, got {k}")));
    }
    let (i, j) = match (k - 1) % 6 + 1 {
        1 => (1, r),
        2 => (r, 1),
        3 => (r, r - 1),
        4 => (r - 1, r),
        5 => (r - 1, 1),
        _ => (1, r - 1),
    };
    Ok(elementary(r, i, j))
}

/// `g_{12,1} = g_12 ∘ ... ∘ g_1`.
pub fn gen_g12_1(r: usize) -> Result<RoseMap> {
    let gens = (1..=12).map(|k| gen_elementary(r, k)).collect::<Result<Vec<_>>>()?;
    RoseMap::compose_all(&gens)
}

/// The factors `g_1, ..., g_12, g_w` in order of application.
pub fn family_factors(r: usize, w: &FullWord) -> Result<Vec<RoseMap>> {
    let mut factors = (1..=12).map(|k| gen_elementary(r, k)).collect::<Result<Vec<_>>>()?;
    factors.push(gen_gw(r, w)?);
    Ok(factors)
}

/// Checks the generator indexing against the illegal turns the construction
/// relies on: `g_3: {x̄_r, x̄_{r-1}}`, `g_4: {x̄_{r-1}, x̄_r}`,
/// `g_5: {x̄_{r-1}, x̄_1}`, `g_7: {x̄_1, x̄_r}`.
pub fn verify_generator_indexing(r: usize) -> Result<()> {
    let bar = OrientedEdge::reverse;
    let expected = [
        (3, Turn::new(bar(r), bar(r - 1))),
        (4, Turn::new(bar(r - 1), bar(r))),
        (5, Turn::new(bar(r - 1), bar(1))),
        (7, Turn::new(bar(1), bar(r))),
    ];
    for (k, turn) in expected {
        let found = prenull_turns(&gen_elementary(r, k)?);
        if found.len() != 1 || !found.contains(&turn) {
            let found: Vec<String> = found.iter().map(|t| t.to_string()).collect();
            return Err(Error::Precondition(format!(
                "generator indexing check failed: g_{k} should have the single prenull turn {turn}, found [{}]",
                found.join(", ")
            )));
        }
    }
    Ok(())
}

/// A positive word in `x_2, ..., x_r`, stored by subscript.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FullWord {
    rank: usize,
    letters: Vec<u8>,
}

impl FullWord {
    /// A positive word over `x_2..x_r`; fullness is checked separately.
    pub fn new(rank: usize, letters: Vec<u8>) -> Result<Self> {
        check_rank(rank)?;
        if letters.is_empty() {
            return Err(Error::Precondition("word must be nonempty".into()));
        }
        if let Some(&bad) = letters.iter().find(|&&l| !(2..=rank as u8).contains(&l)) {
            return Err(Error::Precondition(format!(
                "letter x{bad} is outside x2..x{rank}"
            )));
        }
        Ok(FullWord { rank, letters })
    }

    /// Subscripts as digits (`"23322"`), or comma separated when some
    /// subscript has two digits (`"2,10,10"`).
    pub fn parse(rank: usize, text: &str) -> Result<Self> {
        let text = text.trim();
        let parsed: Option<Vec<u8>> = if text.contains(',') {
            text.split(',').map(|s| s.trim().parse::<u8>().ok()).collect()
        } else {
            text.chars().map(|c| c.to_digit(10).map(|d| d as u8)).collect()
        };
        let letters = parsed.ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("invalid word {text:?}: expected subscripts such as 23322"),
        })?;
        FullWord::new(rank, letters)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_full(&self) -> bool {
        is_full(self.rank, &self.letters)
    }

    fn to_path(&self) -> Vec<OrientedEdge> {
        self.letters
            .iter()
            .map(|&l| OrientedEdge::forward(l as usize))
            .collect()
    }
}

impl fmt::Display for FullWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.rank > 9 { "," } else { "" };
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(sep))
    }
}

impl Serialize for FullWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FullWord {
    fn deserialize<D: serde::Deserializer<'de>>(_d: D) -> std::result::Result<Self, D::Error> {
        Err(serde::de::Error::custom(
            "a word needs its rank; use FullWord::parse",
        ))
    }
}

/// Every two-letter word `x_i x_j` with `2 <= i, j <= r` occurs in `letters`.
pub fn is_full(r: usize, letters: &[u8]) -> bool {
    if r < 2 {
        return false;
    }
    let m = r - 1;
    let mut seen = vec![false; m * m];
    for w in letters.windows(2) {
        let (a, b) = (w[0] as usize, w[1] as usize);
        if (2..=r).contains(&a) && (2..=r).contains(&b) {
            seen[(a - 2) * m + (b - 2)] = true;
        }
    }
    seen.into_iter().all(|b| b)
}

/// Shortest possible length of a full word: `(r-1)^2 + 1`.
pub fn min_full_length(r: usize) -> usize {
    (r - 1) * (r - 1) + 1
}

/// All full words of length `n` in lexicographic order.
pub fn enumerate_full_words(r: usize, n: usize) -> Vec<FullWord> {
    if r < 3 || n < min_full_length(r) {
        return Vec::new();
    }
    let base = (r - 1) as u64;
    let total = base.checked_pow(n as u32).expect("enumeration size overflows u64");
    let mut out = Vec::new();
    let mut letters = vec![2u8; n];
    for code in 0..total {
        let mut c = code;
        for slot in letters.iter_mut().rev() {
            *slot = 2 + (c % base) as u8;
            c /= base;
        }
        if is_full(r, &letters) {
            out.push(FullWord {
                rank: r,
                letters: letters.clone(),
            });
        }
    }
    out
}

/// Uniform samples (with replacement) from the full words of length `n`,
/// drawn by rejection from all positive words. Deterministic in `seed`.
pub fn sample_full_words(r: usize, n: usize, count: usize, seed: u64) -> Result<Vec<FullWord>> {
    check_rank(r)?;
    if n < min_full_length(r) {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = (count as u64).saturating_mul(10_000_000);
    let mut attempts = 0u64;
    let mut out = Vec::with_capacity(count);
    let mut letters = vec![0u8; n];
    while out.len() < count {
        attempts += 1;
        if attempts > budget {
            return Err(Error::Budget(format!(
                "rejection sampling found only {} of {count} full words of length {n}",
                out.len()
            )));
        }
        for slot in letters.iter_mut() {
            *slot = rng.gen_range(2..=r as u8);
        }
        if is_full(r, &letters) {
            out.push(FullWord {
                rank: r,
                letters: letters.clone(),
            });
        }
    }
    Ok(out)
}

/// `w = x_{r-1} z x_2`.
pub fn wrap_word(r: usize, z: &FullWord) -> Result<FullWord> {
    if z.rank != r {
        return Err(Error::RankMismatch {
            expected: r,
            found: z.rank,
        });
    }
    if !z.is_full() {
        return Err(Error::Precondition(format!("inner word {z} is not full")));
    }
    let mut letters = Vec::with_capacity(z.len() + 2);
    letters.push((r - 1) as u8);
    letters.extend_from_slice(&z.letters);
    letters.push(2);
    FullWord::new(r, letters)
}

/// `g_w`: `x_k ↦ x_{k+1}` for `k < r` and `x_r ↦ x_1 w`.
pub fn gen_gw(r: usize, w: &FullWord) -> Result<RoseMap> {
    check_rank(r)?;
    if w.rank != r {
        return Err(Error::RankMismatch {
            expected: r,
            found: w.rank,
        });
    }
    if !w.is_full() {
        return Err(Error::Precondition(format!("word {w} is not full")));
    }
    if w.letters[0] as usize != r - 1 {
        return Err(Error::Precondition(format!("word {w} must start with x{}", r - 1)));
    }
    if *w.letters.last().expect("nonempty") != 2 {
        return Err(Error::Precondition(format!("word {w} must end with x2")));
    }
    let mut images: Vec<EdgePath> = (1..r)
        .map(|k| EdgePath::new(r, vec![OrientedEdge::forward(k + 1)]).expect("valid"))
        .collect();
    let mut last = vec![OrientedEdge::forward(1)];
    last.extend(w.to_path());
    images.push(EdgePath::new(r, last)?);
    RoseMap::new(r, images)
}

/// `f_w = g_w ∘ g_{12,1}`.
pub fn build_family_map(r: usize, w: &FullWord) -> Result<RoseMap> {
    gen_gw(r, w)?.compose(&gen_g12_1(r)?)
}

/// True when the cyclic words `x_1 w` and `x_1 w'` differ.
pub fn distinct_outer_classes(w: &FullWord, w2: &FullWord) -> bool {
    if w.rank != w2.rank || w.len() != w2.len() {
        return true;
    }
    let a: Vec<u8> = std::iter::once(1).chain(w.letters.iter().copied()).collect();
    let b: Vec<u8> = std::iter::once(1).chain(w2.letters.iter().copied()).collect();
    let n = a.len();
    !(0..n).any(|s| (0..n).all(|i| a[(i + s) % n] == b[i]))
}

/// Outcome of the periodic Nielsen path checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PnpStatus {
    /// `factorization` is present when factors were supplied and the
    /// propagation closed; `unfolding_periods` lists the periods the
    /// unfolding search emptied.
    Free {
        factorization: Option<PnpFreeCertificate>,
        unfolding_periods: Vec<usize>,
    },
    Found { inp: InpCandidate },
    Inconclusive { reason: String },
}

impl PnpStatus {
    pub fn is_free(&self) -> bool {
        matches!(self, PnpStatus::Free { .. })
    }

    fn certificate(&self) -> Option<PnpFreeCertificate> {
        match self {
            PnpStatus::Free {
                factorization: Some(c), ..
            } => Some(c.clone()),
            PnpStatus::Free {
                factorization: None,
                unfolding_periods,
            } => Some(PnpFreeCertificate {
                method: CertificateMethod::UnfoldingSearch,
                periods: unfolding_periods.clone(),
                all_periods: false,
                contradiction_stage: 1,
                forced: Vec::new(),
                strict_rule: None,
                trace: Vec::new(),
            }),
            _ => None,
        }
    }
}

fn ratio_string<S: serde::Serializer>(v: &Option<Ratio<i64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(q) => s.serialize_some(&q.to_string()),
        None => s.serialize_none(),
    }
}

/// Every sub-result of the lone-axis pipeline for one map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub rank: usize,
    pub word: Option<FullWord>,
    pub map: String,
    pub norm: usize,
    pub train_track: bool,
    pub expanding: bool,
    pub irreducible: bool,
    pub primitive: bool,
    pub lambda: Option<f64>,
    pub lw_connected: bool,
    pub local_graph: Option<WhiteheadGraph>,
    pub pnp: PnpStatus,
    pub ideal_graph: Option<WhiteheadGraph>,
    #[serde(serialize_with = "ratio_string")]
    pub index: Option<Ratio<i64>>,
    pub iw_components: Option<usize>,
    pub cut_vertex_free: Option<bool>,
    /// Train track, primitive and connected local Whitehead graph.
    pub fic_passed: bool,
    pub ageometric_fully_irreducible: bool,
    pub lone_axis: bool,
    pub inconclusive: bool,
}

/// Pipeline options.
#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub r_max: Option<usize>,
    pub search: SearchOptions,
}

/// Full pipeline on the family map of the wrapped word `w`.
pub fn certify(r: usize, w: &FullWord) -> Result<Certificate> {
    certify_with(r, w, &PipelineOptions::default())
}

pub fn certify_with(r: usize, w: &FullWord, options: &PipelineOptions) -> Result<Certificate> {
    let factors = family_factors(r, w)?;
    let g = RoseMap::compose_all(&factors)?;
    let mut cert = certify_map(&g, Some(&factors), options)?;
    cert.word = Some(w.clone());
    Ok(cert)
}

/// Full pipeline on an arbitrary rose map; `factors`, when given, must be
/// positive and compose to `g`.
pub fn certify_map(g: &RoseMap, factors: Option<&[RoseMap]>, options: &PipelineOptions) -> Result<Certificate> {
    let r = g.rank();
    let m = g.transition_matrix();
    let mut cert = Certificate {
        rank: r,
        word: None,
        map: g.serialize(),
        norm: g.norm(),
        train_track: g.is_train_track(),
        expanding: g.is_expanding(),
        irreducible: g.is_irreducible(),
        primitive: m.is_primitive_auto(),
        lambda: None,
        lw_connected: false,
        local_graph: None,
        pnp: PnpStatus::Inconclusive {
            reason: "not run".into(),
        },
        ideal_graph: None,
        index: None,
        iw_components: None,
        cut_vertex_free: None,
        fic_passed: false,
        ageometric_fully_irreducible: false,
        lone_axis: false,
        inconclusive: false,
    };
    if !(cert.train_track && cert.expanding && cert.irreducible && cert.primitive) {
        cert.pnp = PnpStatus::Inconclusive {
            reason: "map is not a primitive expanding train track map".into(),
        };
        return Ok(cert);
    }
    cert.lambda = Some(m.pf_eigenvalue(DEFAULT_TOL)?.lambda);
    let lw = local_whitehead_graph(g)?;
    cert.lw_connected = lw.is_connected();
    cert.local_graph = Some(lw);
    cert.fic_passed = cert.lw_connected;

    cert.pnp = pnp_status(g, factors, options)?;
    if let PnpStatus::Inconclusive { .. } = cert.pnp {
        cert.inconclusive = true;
    }
    cert.ageometric_fully_irreducible = cert.fic_passed && cert.pnp.is_free();
    if let Some(pnp_cert) = cert.pnp.certificate() {
        let iw = ideal_whitehead_graph(g, Some(&pnp_cert))?;
        let index = rotationless_index(&iw);
        cert.index = Some(index);
        cert.iw_components = Some(iw.component_count());
        let cut_free = iw.components().iter().all(|c| {
            iw.induced(WhiteheadKind::Ideal, c).cut_vertices().is_empty()
        });
        cert.cut_vertex_free = Some(cut_free);
        cert.lone_axis = cert.ageometric_fully_irreducible && cut_free && index == Ratio::new(3 - 2 * r as i64, 2);
        cert.ideal_graph = Some(iw);
    }
    Ok(cert)
}

fn pnp_status(g: &RoseMap, factors: Option<&[RoseMap]>, options: &PipelineOptions) -> Result<PnpStatus> {
    let r_max = options.r_max.unwrap_or(DEFAULT_R_MAX);
    let mut unfolding_periods = Vec::new();
    let mut reasons = Vec::new();
    for period in 1..=r_max {
        match unfolding_inp_search(g, period, &options.search)?.outcome {
            SearchOutcome::Found { mut candidates } => {
                return Ok(PnpStatus::Found {
                    inp: candidates.remove(0),
                })
            }
            SearchOutcome::CertifiedEmpty => unfolding_periods.push(period),
            SearchOutcome::Inconclusive { reason } => reasons.push(format!("period {period}: {reason}")),
        }
    }
    let mut factorization = None;
    if let Some(factors) = factors {
        if RoseMap::compose_all(factors)? != *g {
            return Err(Error::Precondition("factors do not compose to the map".into()));
        }
        let opts = CertifierOptions {
            r_max,
            max_depth: options.search.max_depth,
        };
        match factorization_pnp_certifier(factors, &opts)? {
            FactorizationOutcome::Certificate(c) => factorization = Some(c),
            FactorizationOutcome::Surviving(_) => reasons.push("factorization propagation left a survivor".into()),
        }
    }
    let unfolding_complete = unfolding_periods.len() == r_max;
    // both methods must agree when both ran
    let free = match (factors.is_some(), factorization.is_some()) {
        (true, true) => unfolding_complete,
        (true, false) => false,
        (false, _) => unfolding_complete,
    };
    if free {
        Ok(PnpStatus::Free {
            factorization,
            unfolding_periods,
        })
    } else {
        Ok(PnpStatus::Inconclusive {
            reason: reasons.join("; "),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::DirectionMap;
    use crate::path::OrientedEdge as E;

    fn words(r: usize, ws: &[&str]) -> Vec<FullWord> {
        ws.iter().map(|w| FullWord::parse(r, w).unwrap()).collect()
    }

    #[test]
    fn generator_examples() {
        assert_eq!(gen_elementary(3, 1).unwrap(), RoseMap::from_strs(3, &["ac", "b", "c"]).unwrap());
        for r in 3..=5 {
            for k in 1..=12 {
                assert_eq!(gen_elementary(r, k).unwrap().norm(), r + 1);
            }
            assert_eq!(gen_elementary(r, 7).unwrap(), gen_elementary(r, 1).unwrap());
            verify_generator_indexing(r).unwrap();
        }
        assert!(gen_elementary(2, 1).is_err());
        assert!(gen_elementary(3, 13).is_err());
    }

    #[test]
    fn g12_direction_map_and_images() {
        for r in 3..=5 {
            let g = gen_g12_1(r).unwrap();
            let mut targets: Vec<E> = E::all(r).collect();
            targets[E::reverse(1).code()] = E::reverse(r);
            let dg = g.direction_map();
            for d in E::all(r) {
                assert_eq!(dg.apply(d), targets[d.code()], "r={r} d={d}");
            }
            assert_ne!(dg, DirectionMap::identity(r));
            // every petal among x_1, x_{r-1}, x_r crosses all three; the rest are fixed
            let moved = [1, r - 1, r];
            for i in 1..=r {
                if moved.contains(&i) {
                    assert!(moved.iter().all(|&j| g.image(i).count(j) > 0));
                } else {
                    assert_eq!(g.image(i).letters(), &[E::forward(i)]);
                }
            }
        }
    }

    #[test]
    fn full_words_small() {
        assert!(enumerate_full_words(3, 4).is_empty());
        let five: Vec<String> = enumerate_full_words(3, 5).iter().map(|w| w.to_string()).collect();
        let mut expected = vec!["22332", "23322", "33223", "32233"];
        expected.sort();
        assert_eq!(five, expected);
        assert_eq!(min_full_length(4), 10);
        assert!(enumerate_full_words(4, 9).is_empty());
        assert!(!enumerate_full_words(4, 10).is_empty());
    }

    #[test]
    fn full_fraction_grows() {
        let frac = |n: usize| enumerate_full_words(3, n).len() as f64 / 2f64.powi(n as i32);
        let fs: Vec<f64> = (5..=14).map(frac).collect();
        assert!(fs.windows(2).all(|w| w[0] <= w[1]), "{fs:?}");
        assert!(fs[fs.len() - 1] > 0.5);
    }

    #[test]
    fn sampling_is_deterministic_and_full() {
        let a = sample_full_words(3, 8, 50, 7).unwrap();
        let b = sample_full_words(3, 8, 50, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|w| w.is_full() && w.len() == 8));
        assert!(sample_full_words(3, 4, 10, 1).unwrap().is_empty());
    }

    #[test]
    fn gw_example() {
        let z = FullWord::parse(3, "23322").unwrap();
        let w = wrap_word(3, &z).unwrap();
        assert_eq!(w.to_string(), "2233222");
        let g = gen_gw(3, &w).unwrap();
        assert_eq!(g, RoseMap::from_strs(3, &["b", "c", "abbccbbb"]).unwrap());
        assert_eq!(g.norm(), 3 + w.len());
        assert!(gen_gw(3, &FullWord::parse(3, "22").unwrap()).is_err());
        assert!(gen_gw(3, &FullWord::parse(3, "33223").unwrap()).is_err());
        assert!(gen_gw(3, &FullWord::parse(3, "2233223").unwrap()).is_err());
    }

    #[test]
    fn family_map_properties() {
        let k = gen_g12_1(3).unwrap().norm();
        for z in enumerate_full_words(3, 5) {
            let w = wrap_word(3, &z).unwrap();
            let f = build_family_map(3, &w).unwrap();
            assert!(f.is_positive() && f.is_train_track());
            assert!(f.transition_matrix().is_primitive());
            assert!(f.norm() <= k * (w.len() + 3));
        }
    }

    #[test]
    fn distinct_classes() {
        let ws: Vec<FullWord> = enumerate_full_words(3, 5)
            .iter()
            .map(|z| wrap_word(3, z).unwrap())
            .collect();
        for (i, a) in ws.iter().enumerate() {
            assert!(!distinct_outer_classes(a, a));
            for b in &ws[i + 1..] {
                assert!(distinct_outer_classes(a, b));
            }
        }
        let rot = words(3, &["2323", "3232"]);
        assert!(distinct_outer_classes(&rot[0], &rot[1]));
    }

    #[test]
    fn certify_family_words() {
        for z in enumerate_full_words(3, 5) {
            let w = wrap_word(3, &z).unwrap();
            let c = certify(3, &w).unwrap();
            assert!(c.lone_axis, "{}", serde_json::to_string(&c).unwrap());
            assert_eq!(c.index, Some(Ratio::new(-3, 2)));
            assert_eq!(c.iw_components, Some(1));
            assert!(matches!(&c.pnp, PnpStatus::Free { factorization: Some(_), unfolding_periods } if unfolding_periods.len() == DEFAULT_R_MAX));
            assert!(c.lambda.unwrap() <= c.norm as f64);
        }
        let z = enumerate_full_words(4, 10).remove(0);
        let c = certify(4, &wrap_word(4, &z).unwrap()).unwrap();
        assert!(c.lone_axis);
        assert_eq!(c.index, Some(Ratio::new(-5, 2)));
        assert_eq!(c.ideal_graph.unwrap().vertex_count(), 7);
    }

    #[test]
    fn golden_map_is_not_ageometric() {
        let g = RoseMap::from_strs(2, &["b", "ba"]).unwrap();
        let c = certify_map(&g, None, &PipelineOptions::default()).unwrap();
        assert!(c.fic_passed);
        assert!(matches!(c.pnp, PnpStatus::Found { .. }));
        assert!(!c.ageometric_fully_irreducible);
        assert!(!c.lone_axis);
        assert!(c.index.is_none());
    }

    #[test]
    fn non_train_track_stops_early() {
        let g = RoseMap::from_strs(2, &["ab", "a"]).unwrap();
        let c = certify_map(&RoseMap::identity(2), None, &PipelineOptions::default()).unwrap();
        assert!(!c.expanding && !c.lone_axis && c.local_graph.is_none());
        assert!(certify_map(&g, None, &PipelineOptions::default()).is_ok());
    }

    #[test]
    fn certificate_json_shape() {
        let z = enumerate_full_words(3, 5).remove(0);
        let c = certify(3, &wrap_word(3, &z).unwrap()).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["index"], "-3/2");
        assert_eq!(v["word"], "2223322");
        assert_eq!(v["pnp"]["status"], "free");
    }
}
