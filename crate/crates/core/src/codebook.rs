//! Stimulus codebooks: memory-based (MBC) and the RCP, CBP and max-min
//! Hamming distance baselines.
//!
//! A codebook is a `W x N` binary matrix; row `w` is the flash pattern of
//! character `w` and column `n` is the `n`-th flash group.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::channel::{responses, ChannelState};
use crate::rng;
use crate::source::MarkovSource;
use crate::{Error, Result};

/// Draw attempts allowed per MBC row before giving up.
const MBC_ROW_RETRIES: usize = 1000;
/// Restarts allowed per CBP cycle.
const CBP_RESTARTS: usize = 500;

/// Character grid, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLayout {
    pub rows: usize,
    pub cols: usize,
}

impl Default for GridLayout {
    fn default() -> Self {
        Self { rows: 6, cols: 6 }
    }
}

impl GridLayout {
    pub fn size(&self) -> usize {
        self.rows * self.cols
    }

    pub fn position(&self, w: usize) -> (usize, usize) {
        (w / self.cols, w % self.cols)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CodebookKind {
    Mbc { order: usize, source: MarkovSource },
    Rcp,
    Cbp { min_gap: usize },
    MinDist { weight: usize, min_distance: usize },
    Imported { label: String },
}

impl CodebookKind {
    /// Single-token name used in file headers and result tables.
    pub fn label(&self) -> String {
        match self {
            CodebookKind::Mbc { order, .. } => format!("mbc-L{order}"),
            CodebookKind::Rcp => "rcp".into(),
            CodebookKind::Cbp { min_gap } => format!("cbp-g{min_gap}"),
            CodebookKind::MinDist { weight, .. } => format!("mindist-w{weight}"),
            CodebookKind::Imported { label } => label.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    rows: Vec<Vec<u8>>,
    pub kind: CodebookKind,
    pub seed: u64,
}

impl Codebook {
    /// Wraps a matrix; checks it is non-empty, rectangular and binary.
    pub fn new(rows: Vec<Vec<u8>>, kind: CodebookKind, seed: u64) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n == 0 {
            return Err(Error::InvalidParameter("codebook must be non-empty".into()));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("codebook rows differ in length".into()));
        }
        if rows.iter().flatten().any(|&b| b > 1) {
            return Err(Error::InvalidParameter("codebook entries must be 0 or 1".into()));
        }
        Ok(Self { rows, kind, seed })
    }

    /// Number of characters `W`.
    pub fn num_chars(&self) -> usize {
        self.rows.len()
    }

    /// Number of flash groups `N`.
    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn row(&self, w: usize) -> &[u8] {
        &self.rows[w]
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn column(&self, n: usize) -> Vec<u8> {
        self.rows.iter().map(|r| r[n]).collect()
    }

    /// Pairs `(i, j)`, `i < j`, of identical rows.
    pub fn duplicate_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.rows.len() {
            for j in i + 1..self.rows.len() {
                if self.rows[i] == self.rows[j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Intermediate outputs `z(w)` of every row on an `L`-state channel.
    pub fn responses(&self, refractory_len: usize, s0: ChannelState) -> Result<Vec<Vec<u8>>> {
        self.rows.iter().map(|r| responses(r, s0, refractory_len)).collect()
    }

    /// Whether all characters elicit different noiseless responses.
    pub fn distinct_responses(&self, refractory_len: usize, s0: ChannelState) -> Result<bool> {
        let z = self.responses(refractory_len, s0)?;
        let set: HashSet<&Vec<u8>> = z.iter().collect();
        Ok(set.len() == z.len())
    }

    /// Smallest pairwise Hamming distance between rows.
    pub fn min_distance(&self) -> usize {
        min_pairwise_distance(&self.rows)
    }

    /// CSV text: `# W=<int> N=<int> kind=<label> seed=<int>` followed by
    /// one comma-separated row per character.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# W={} N={} kind={} seed={}\n",
            self.num_chars(),
            self.len(),
            self.kind.label(),
            self.seed
        );
        for row in &self.rows {
            let line: Vec<&str> = row.iter().map(|&b| if b == 1 { "1" } else { "0" }).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    /// Parses [`Codebook::to_csv`] output. The kind is kept verbatim as an
    /// imported label; duplicate rows are allowed (see
    /// [`Codebook::duplicate_pairs`]).
    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format(path, 1, "empty codebook file"))?;
        let header = header
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::format(path, 1, "missing `# W=.. N=.. kind=.. seed=..` header"))?;
        let (mut w, mut n, mut kind, mut seed) = (None, None, None, None);
        for token in header.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::format(path, 1, format!("bad header field `{token}`")))?;
            let bad = || Error::format(path, 1, format!("bad value in `{token}`"));
            match key {
                "W" => w = Some(value.parse::<usize>().map_err(|_| bad())?),
                "N" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
                "kind" => kind = Some(value.to_string()),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad())?),
                _ => return Err(Error::format(path, 1, format!("unknown header field `{key}`"))),
            }
        }
        let missing = |f: &str| Error::format(path, 1, format!("header lacks `{f}`"));
        let w = w.ok_or_else(|| missing("W"))?;
        let n = n.ok_or_else(|| missing("N"))?;
        let kind = kind.ok_or_else(|| missing("kind"))?;
        let seed = seed.ok_or_else(|| missing("seed"))?;

        let mut rows = Vec::with_capacity(w);
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let row = line
                .trim()
                .split(',')
                .map(|cell| match cell.trim() {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(Error::format(path, lineno, format!("non-binary entry `{other}`"))),
                })
                .collect::<Result<Vec<u8>>>()?;
            if row.len() != n {
                return Err(Error::format(
                    path,
                    lineno,
                    format!("row has {} entries, header says N={n}", row.len()),
                ));
            }
            rows.push(row);
        }
        if rows.len() != w {
            return Err(Error::format(
                path,
                1,
                format!("body has {} rows, header says W={w}", rows.len()),
            ));
        }
        Codebook::new(rows, CodebookKind::Imported { label: kind }, seed)
            .map_err(|e| Error::format(path, 1, e.to_string()))
    }
}

pub fn export_codebook(book: &Codebook, path: &Path) -> Result<()> {
    std::fs::write(path, book.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn import_codebook(path: &Path) -> Result<Codebook> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Codebook::from_csv(&text, path)
}

fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn min_pairwise_distance(rows: &[Vec<u8>]) -> usize {
    let mut best = usize::MAX;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            best = best.min(hamming(&rows[i], &rows[j]));
        }
    }
    if best == usize::MAX {
        rows.first().map_or(0, Vec::len)
    } else {
        best
    }
}

/// Memory-based codebook: rows are independent realizations of `source`,
/// each started from its stationary history distribution.
///
/// A row is redrawn when its response on the channel with `L` equal to the
/// source order (started at Ground) matches an earlier row's, so distinct
/// rows also stay distinguishable on a noiseless channel.
pub fn gen_mbc(source: &MarkovSource, num_chars: usize, len: usize, seed: u64) -> Result<Codebook> {
    if num_chars == 0 || len == 0 {
        return Err(Error::InvalidParameter("MBC needs W >= 1 and N >= 1".into()));
    }
    let pi = source.stationary()?;
    let mut rng = rng::stream(seed, 0);
    let mut seen = HashSet::with_capacity(num_chars);
    let mut rows = Vec::with_capacity(num_chars);
    while rows.len() < num_chars {
        let (row, z) = (0..MBC_ROW_RETRIES)
            .map(|_| {
                let start = MarkovSource::sample_history(&pi, &mut rng);
                let row = source.sample_from(start, len, &mut rng);
                let z = responses(&row, ChannelState::Ground, source.order()).expect("Ground is valid");
                (row, z)
            })
            .find(|(_, z)| !seen.contains(z))
            .ok_or(Error::RetryBudget {
                wanted: num_chars,
                attempts: MBC_ROW_RETRIES,
            })?;
        seen.insert(z);
        rows.push(row);
    }
    Codebook::new(
        rows,
        CodebookKind::Mbc {
            order: source.order(),
            source: source.clone(),
        },
        seed,
    )
}

/// Row-column paradigm: every block of `rows + cols` flash groups is a random
/// permutation of the grid's row and column groups.
pub fn gen_rcp(grid: GridLayout, len: usize, seed: u64) -> Result<Codebook> {
    let block = grid.rows + grid.cols;
    if grid.size() == 0 || len == 0 || !len.is_multiple_of(block) {
        return Err(Error::InvalidParameter(format!(
            "RCP length {len} must be a positive multiple of {block}"
        )));
    }
    let mut rng = rng::stream(seed, 0);
    let mut rows = vec![Vec::with_capacity(len); grid.size()];
    let groups: Vec<Vec<usize>> = (0..grid.rows)
        .map(|r| (0..grid.cols).map(|c| grid.index(r, c)).collect())
        .chain((0..grid.cols).map(|c| (0..grid.rows).map(|r| grid.index(r, c)).collect()))
        .collect();
    let mut order: Vec<usize> = (0..block).collect();
    for _ in 0..len / block {
        order.shuffle(&mut rng);
        for &g in &order {
            push_column(&mut rows, &groups[g]);
        }
    }
    Codebook::new(rows, CodebookKind::Rcp, seed)
}

fn push_column(rows: &mut [Vec<u8>], lit: &[usize]) {
    let col = rows[0].len();
    rows.iter_mut().for_each(|r| r.push(0));
    for &w in lit {
        rows[w][col] = 1;
    }
}

/// Checkerboard paradigm on the 6x6 grid.
///
/// The grid is split checkerboard-style into two halves of 18 characters.
/// Every cycle of 18 flash groups re-arranges each half at random into a 3x6
/// virtual matrix and flashes its 3 virtual rows and 6 virtual columns, so
/// each character is lit exactly twice per cycle. Groups are ordered by a
/// randomized search that keeps at least `min_gap` dark flashes between two
/// flashes of the same character; the result is re-checked before return.
pub fn gen_cbp(len: usize, min_gap: usize, seed: u64) -> Result<Codebook> {
    let grid = GridLayout::default();
    if len == 0 || min_gap == 0 {
        return Err(Error::InvalidParameter("CBP needs N >= 1 and min_gap >= 1".into()));
    }
    let halves: [Vec<usize>; 2] = [0, 1].map(|parity| {
        (0..grid.size())
            .filter(|&w| {
                let (r, c) = grid.position(w);
                (r + c) % 2 == parity
            })
            .collect()
    });
    let mut rng = rng::stream(seed, 0);
    let mut rows = vec![Vec::with_capacity(len); grid.size()];
    // position of each character's latest flash
    let mut last: Vec<Option<usize>> = vec![None; grid.size()];

    while rows[0].len() < len {
        let cycle_start = rows[0].len();
        let needed = (len - cycle_start).min(18);
        let mut placed = None;
        for _ in 0..CBP_RESTARTS {
            let mut pool = Vec::with_capacity(18);
            for half in &halves {
                let mut chars = half.clone();
                chars.shuffle(&mut rng);
                // virtual 3x6 matrix, row-major
                pool.extend((0..3).map(|r| chars[r * 6..r * 6 + 6].to_vec()));
                pool.extend((0..6).map(|c| (0..3).map(|r| chars[r * 6 + c]).collect::<Vec<_>>()));
            }
            let mut trial_last = last.clone();
            let mut order = Vec::with_capacity(needed);
            for step in 0..needed {
                let pos = cycle_start + step;
                let ok: Vec<usize> = (0..pool.len())
                    .filter(|&g| {
                        pool[g]
                            .iter()
                            .all(|&w| trial_last[w].is_none_or(|p| pos - p > min_gap))
                    })
                    .collect();
                if ok.is_empty() {
                    break;
                }
                let g = pool.swap_remove(ok[rng.random_range(0..ok.len())]);
                g.iter().for_each(|&w| trial_last[w] = Some(pos));
                order.push(g);
            }
            if order.len() == needed {
                placed = Some((order, trial_last));
                break;
            }
        }
        let (order, new_last) = placed.ok_or_else(|| {
            Error::Infeasible(format!(
                "no CBP schedule with min_gap={min_gap} found at column {cycle_start}"
            ))
        })?;
        for g in &order {
            push_column(&mut rows, g);
        }
        last = new_last;
    }
    let book = Codebook::new(rows, CodebookKind::Cbp { min_gap }, seed)?;
    if book.rows().iter().any(|r| min_gap_of(r).is_some_and(|g| g < min_gap)) {
        return Err(Error::Infeasible("emitted CBP matrix violates its gap".into()));
    }
    Ok(book)
}

/// Smallest number of zeros between two consecutive ones, if any pair exists.
pub fn min_gap_of(row: &[u8]) -> Option<usize> {
    let ones: Vec<usize> = row.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i).collect();
    ones.windows(2).map(|w| w[1] - w[0] - 1).min()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Max-min Hamming distance baseline: best of `trials` random constant-weight
/// codebooks. Candidate `k` uses stream `k` of `seed`, so raising `trials`
/// never lowers the result.
pub fn gen_min_dist(num_chars: usize, len: usize, weight: usize, trials: usize, seed: u64) -> Result<Codebook> {
    if weight > len || len == 0 || num_chars == 0 || trials == 0 {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= N, weight <= N and trials >= 1 (N={len}, weight={weight})"
        )));
    }
    if num_chars as f64 > binomial(len, weight) {
        return Err(Error::InvalidParameter(format!(
            "only {} words of length {len} and weight {weight} exist, {num_chars} requested",
            binomial(len, weight)
        )));
    }
    let mut best: Option<(usize, Vec<Vec<u8>>)> = None;
    let positions: Vec<usize> = (0..len).collect();
    for k in 0..trials {
        let mut rng = rng::stream(seed, k as u64);
        let mut seen = HashSet::with_capacity(num_chars);
        let mut rows = Vec::with_capacity(num_chars);
        while rows.len() < num_chars {
            let mut row = vec![0u8; len];
            for &p in positions.choose_multiple(&mut rng, weight) {
                row[p] = 1;
            }
            if seen.insert(row.clone()) {
                rows.push(row);
            }
        }
        let d = min_pairwise_distance(&rows);
        if best.as_ref().is_none_or(|(bd, _)| d > *bd) {
            best = Some((d, rows));
        }
    }
    let (min_distance, rows) = best.expect("trials >= 1");
    Codebook::new(rows, CodebookKind::MinDist { weight, min_distance }, seed)
}
