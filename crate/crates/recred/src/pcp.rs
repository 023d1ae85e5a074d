//! Post Correspondence Problem instances, solutions, and a bounded
//! brute-force solving oracle with prefix pruning.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::ValidationReport;

/// Characters used to display symbol ids in the text format.
const DISPLAY_ALPHABET: &str = "0123456789abcdefghijklmnopqrstuvwxyz";

/// Dense symbol identifier in `0..alphabet_size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymbolId(pub u8);

impl SymbolId {
    pub fn display(self) -> char {
        DISPLAY_ALPHABET
            .chars()
            .nth(self.0 as usize)
            .unwrap_or('?')
    }

    pub fn from_display(c: char) -> Option<SymbolId> {
        DISPLAY_ALPHABET
            .find(c.to_ascii_lowercase())
            .map(|i| SymbolId(i as u8))
    }
}

/// One domino with a top and a bottom string of symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Domino {
    pub top: Vec<SymbolId>,
    pub bottom: Vec<SymbolId>,
}

impl Domino {
    pub fn new(top: Vec<SymbolId>, bottom: Vec<SymbolId>) -> Domino {
        Domino { top, bottom }
    }
}

impl fmt::Display for Domino {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: &[SymbolId]| -> String {
            if s.is_empty() {
                "-".to_string()
            } else {
                s.iter().map(|x| x.display()).collect()
            }
        };
        write!(f, "<{}|{}>", side(&self.top), side(&self.bottom))
    }
}

/// A PCP instance: dominoes `D_0..D_{k-1}` over a dense alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcpInstance {
    pub dominoes: Vec<Domino>,
    pub alphabet_size: u8,
}

/// A candidate solution: a nonempty sequence of domino indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcpSolution {
    pub indices: Vec<usize>,
}

impl PcpInstance {
    pub fn new(dominoes: Vec<Domino>, alphabet_size: u8) -> PcpInstance {
        PcpInstance {
            dominoes,
            alphabet_size,
        }
    }

    /// The two-domino demo instance `D0=<01|0>, D1=<0|10>`.
    pub fn demo() -> PcpInstance {
        PcpInstance::new(
            vec![
                Domino::new(vec![SymbolId(0), SymbolId(1)], vec![SymbolId(0)]),
                Domino::new(vec![SymbolId(0)], vec![SymbolId(1), SymbolId(0)]),
            ],
            2,
        )
    }

    pub fn total_top_len(&self) -> usize {
        self.dominoes.iter().map(|d| d.top.len()).sum()
    }

    pub fn total_bottom_len(&self) -> usize {
        self.dominoes.iter().map(|d| d.bottom.len()).sum()
    }

    /// Parses the text format: first line `k s`, then `k` lines
    /// `top bottom` in display characters with `-` for an empty half.
    pub fn parse_text(input: &str) -> Result<PcpInstance, PcpParseError> {
        let mut lines = input
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or(PcpParseError::Empty)?;
        let mut parts = header.split_whitespace();
        let k: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| PcpParseError::BadHeader(header.to_string()))?;
        let s: u8 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| PcpParseError::BadHeader(header.to_string()))?;
        let mut dominoes = Vec::with_capacity(k);
        for i in 0..k {
            let line = lines.next().ok_or(PcpParseError::MissingDomino(i))?;
            let mut halves = line.split_whitespace();
            let top = halves.next().ok_or(PcpParseError::MissingDomino(i))?;
            let bottom = halves
                .next()
                .ok_or_else(|| PcpParseError::BadDomino(i, line.to_string()))?;
            let parse_half = |h: &str| -> Result<Vec<SymbolId>, PcpParseError> {
                if h == "-" {
                    return Ok(vec![]);
                }
                h.chars()
                    .map(|c| {
                        SymbolId::from_display(c).ok_or(PcpParseError::BadSymbol(i, c))
                    })
                    .collect()
            };
            dominoes.push(Domino::new(parse_half(top)?, parse_half(bottom)?));
        }
        Ok(PcpInstance::new(dominoes, s))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.dominoes.len(), self.alphabet_size);
        for d in &self.dominoes {
            let side = |s: &[SymbolId]| -> String {
                if s.is_empty() {
                    "-".to_string()
                } else {
                    s.iter().map(|x| x.display()).collect()
                }
            };
            out.push_str(&format!("{} {}\n", side(&d.top), side(&d.bottom)));
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PcpParseError {
    #[error("empty input")]
    Empty,
    #[error("bad header line {0:?}, expected `k s`")]
    BadHeader(String),
    #[error("missing domino line {0}")]
    MissingDomino(usize),
    #[error("bad domino line {0}: {1:?}")]
    BadDomino(usize, String),
    #[error("domino {0}: symbol {1:?} not in display alphabet")]
    BadSymbol(usize, char),
}

/// Reports every invariant violation; empty iff the instance is well-formed.
pub fn validate_instance(inst: &PcpInstance) -> ValidationReport {
    let mut report = ValidationReport::new();
    if inst.dominoes.is_empty() {
        report.push("instance has no dominoes");
    }
    if inst.alphabet_size == 0 {
        report.push("alphabet size is zero");
    }
    for (i, d) in inst.dominoes.iter().enumerate() {
        if d.top.is_empty() && d.bottom.is_empty() {
            report.push(format!("domino {i} has both halves empty"));
        }
        for sym in d.top.iter().chain(&d.bottom) {
            if sym.0 >= inst.alphabet_size {
                report.push(format!(
                    "domino {i} uses symbol {} outside alphabet of size {}",
                    sym.0, inst.alphabet_size
                ));
            }
        }
    }
    report
}

/// True iff the concatenated tops equal the concatenated bottoms and the
/// sequence honors the forced-first rule (when enabled).
pub fn validate_solution(inst: &PcpInstance, sol: &PcpSolution) -> bool {
    validate_solution_with(inst, sol, true)
}

pub fn validate_solution_with(inst: &PcpInstance, sol: &PcpSolution, forced_first: bool) -> bool {
    if sol.indices.is_empty() {
        return false;
    }
    if forced_first && sol.indices[0] != 0 {
        return false;
    }
    let mut top = Vec::new();
    let mut bottom = Vec::new();
    for &i in &sol.indices {
        let Some(d) = inst.dominoes.get(i) else {
            return false;
        };
        top.extend_from_slice(&d.top);
        bottom.extend_from_slice(&d.bottom);
    }
    !top.is_empty() && top == bottom
}

/// Partial-match state during search: the unmatched suffix of whichever
/// string is currently longer.
#[derive(Clone, PartialEq, Eq, Hash)]
struct Overhang {
    /// True if the top string is ahead (suffix belongs to the top).
    top_ahead: bool,
    suffix: Vec<SymbolId>,
}

/// Extends a prefix-compatible state by one domino. Returns `None` when the
/// result is no longer prefix-compatible (the branch can be pruned).
fn extend(state: &Overhang, d: &Domino) -> Option<Overhang> {
    // Normalize so `lead` is the side that is ahead.
    let (lead_suffix, lead_add, trail_add) = if state.top_ahead {
        (&state.suffix, &d.top, &d.bottom)
    } else {
        (&state.suffix, &d.bottom, &d.top)
    };
    let mut lead: Vec<SymbolId> = lead_suffix.clone();
    lead.extend_from_slice(lead_add);
    // The trailing side must consume the lead's prefix.
    let consumed = trail_add.len().min(lead.len());
    if lead[..consumed] != trail_add[..consumed] {
        return None;
    }
    if trail_add.len() <= lead.len() {
        Some(Overhang {
            top_ahead: state.top_ahead,
            suffix: lead[consumed..].to_vec(),
        })
    } else {
        // The trailing side overtakes: remaining trail must itself be matched
        // from the lead side later, so the roles flip.
        let rest = &trail_add[consumed..];
        Some(Overhang {
            top_ahead: !state.top_ahead,
            suffix: rest.to_vec(),
        })
    }
}

fn is_solved(state: &Overhang) -> bool {
    state.suffix.is_empty()
}

/// How inner loops should run. `Sequential` is always available; `Parallel`
/// uses rayon and requires the `parallel` feature (the default).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Parallelism {
    #[cfg(feature = "parallel")]
    fn default() -> Self {
        Parallelism::Parallel
    }
    #[cfg(not(feature = "parallel"))]
    fn default() -> Self {
        Parallelism::Sequential
    }
}

/// Searches for a shortest solution using at most `max_dominoes` dominoes.
///
/// Enumerates index sequences breadth-first with prefix pruning: any branch
/// where neither string is a prefix of the other is abandoned. Ties between
/// equal-length solutions break toward the lexicographically smallest index
/// sequence, so the result is deterministic.
pub fn bounded_solve(inst: &PcpInstance, max_dominoes: usize) -> Option<PcpSolution> {
    bounded_solve_with(inst, max_dominoes, true, Parallelism::default())
}

pub fn bounded_solve_with(
    inst: &PcpInstance,
    max_dominoes: usize,
    forced_first: bool,
    par: Parallelism,
) -> Option<PcpSolution> {
    if inst.dominoes.is_empty() || max_dominoes == 0 {
        return None;
    }
    let empty = Overhang {
        top_ahead: true,
        suffix: vec![],
    };
    // Seed the frontier with the allowed first dominoes, in index order.
    let firsts: Vec<usize> = if forced_first {
        vec![0]
    } else {
        (0..inst.dominoes.len()).collect()
    };
    let mut frontier: Vec<(Vec<usize>, Overhang)> = Vec::new();
    for i in firsts {
        let d = &inst.dominoes[i];
        if let Some(next) = extend(&empty, d) {
            if is_solved(&next) && !(d.top.is_empty() && d.bottom.is_empty()) {
                return Some(PcpSolution { indices: vec![i] });
            }
            frontier.push((vec![i], next));
        }
    }
    for _depth in 1..max_dominoes {
        if frontier.is_empty() {
            return None;
        }
        let expand_one = |(seq, state): &(Vec<usize>, Overhang)| {
            let mut out: Vec<(Vec<usize>, Overhang)> = Vec::new();
            for (i, d) in inst.dominoes.iter().enumerate() {
                if let Some(next) = extend(state, d) {
                    let mut s = seq.clone();
                    s.push(i);
                    out.push((s, next));
                }
            }
            out
        };
        let next_frontier: Vec<(Vec<usize>, Overhang)> = match par {
            Parallelism::Sequential => frontier.iter().flat_map(|n| expand_one(n)).collect(),
            #[cfg(feature = "parallel")]
            Parallelism::Parallel => {
                use rayon::prelude::*;
                frontier.par_iter().flat_map_iter(|n| expand_one(n)).collect()
            }
        };
        // Frontier order is index-lexicographic because expansion preserves
        // order; the first solved entry is the lexicographically smallest.
        if let Some((seq, _)) = next_frontier.iter().find(|(_, st)| is_solved(st)) {
            return Some(PcpSolution {
                indices: seq.clone(),
            });
        }
        frontier = next_frontier;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(top: &str, bottom: &str) -> Domino {
        let half = |s: &str| {
            s.chars()
                .filter(|c| *c != '-')
                .map(|c| SymbolId::from_display(c).unwrap())
                .collect()
        };
        Domino::new(half(top), half(bottom))
    }

    #[test]
    fn demo_instance_is_valid() {
        assert!(validate_instance(&PcpInstance::demo()).is_empty());
    }

    #[test]
    fn both_empty_domino_rejected() {
        let inst = PcpInstance::new(vec![dom("-", "-")], 1);
        assert!(!validate_instance(&inst).is_empty());
    }

    #[test]
    fn out_of_range_symbol_rejected() {
        let inst = PcpInstance::new(vec![dom("01", "0")], 1);
        assert!(!validate_instance(&inst).is_empty());
    }

    #[test]
    fn demo_solution_checks() {
        let demo = PcpInstance::demo();
        assert!(validate_solution(&demo, &PcpSolution { indices: vec![0, 1] }));
        assert!(!validate_solution(&demo, &PcpSolution { indices: vec![0] }));
        assert!(!validate_solution(&demo, &PcpSolution { indices: vec![1, 0] }));
        assert!(!validate_solution(&demo, &PcpSolution { indices: vec![0, 7] }));
    }

    #[test]
    fn bounded_solve_finds_demo_solution() {
        let demo = PcpInstance::demo();
        let sol = bounded_solve(&demo, 4).expect("demo solvable in <= 4");
        assert_eq!(sol.indices, vec![0, 1]);
        assert!(validate_solution(&demo, &sol));
    }

    #[test]
    fn bounded_solve_respects_bound() {
        let demo = PcpInstance::demo();
        assert_eq!(bounded_solve(&demo, 1), None);
    }

    #[test]
    fn mismatched_first_symbols_unsolvable() {
        let inst = PcpInstance::new(vec![dom("0", "1")], 2);
        assert_eq!(bounded_solve(&inst, 6), None);
    }

    #[test]
    fn text_format_round_trips() {
        let demo = PcpInstance::demo();
        let text = demo.to_text();
        assert_eq!(PcpInstance::parse_text(&text).unwrap(), demo);
        let with_empty = PcpInstance::new(vec![dom("0", "-")], 1);
        let text = with_empty.to_text();
        assert_eq!(PcpInstance::parse_text(&text).unwrap(), with_empty);
    }

    /// Independent oracle: exhaustively enumerate index sequences without any
    /// pruning and check each with validate_solution.
    fn brute_force_no_pruning(
        inst: &PcpInstance,
        max_len: usize,
        forced_first: bool,
    ) -> Option<Vec<usize>> {
        let k = inst.dominoes.len();
        for len in 1..=max_len {
            let mut seq = vec![0usize; len];
            loop {
                let candidate = PcpSolution {
                    indices: seq.clone(),
                };
                if validate_solution_with(inst, &candidate, forced_first) {
                    return Some(seq);
                }
                // Odometer increment (lexicographic order).
                let mut pos = len;
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    seq[pos] += 1;
                    if seq[pos] < k {
                        break;
                    }
                    seq[pos] = 0;
                }
                if seq.iter().all(|&x| x == 0) {
                    break;
                }
            }
        }
        None
    }

    #[test]
    fn pruned_search_agrees_with_unpruned_enumeration() {
        // Small instance pool: k <= 3, halves <= 2 symbols, alphabet <= 2.
        let pool = [
            PcpInstance::demo(),
            PcpInstance::new(vec![dom("0", "1")], 2),
            PcpInstance::new(vec![dom("0", "00"), dom("00", "0")], 1),
            PcpInstance::new(vec![dom("1", "11"), dom("11", "1"), dom("0", "1")], 2),
            PcpInstance::new(vec![dom("01", "01")], 2),
            PcpInstance::new(vec![dom("0", "-"), dom("-", "0")], 1),
        ];
        for inst in &pool {
            for n in 1..=4 {
                let fast = bounded_solve_with(inst, n, true, Parallelism::Sequential)
                    .map(|s| s.indices);
                let slow = brute_force_no_pruning(inst, n, true);
                assert_eq!(fast, slow, "instance {inst:?} bound {n}");
            }
        }
    }

    #[test]
    fn solutions_returned_always_validate() {
        let pool = [
            PcpInstance::demo(),
            PcpInstance::new(vec![dom("0", "00"), dom("00", "0")], 1),
            PcpInstance::new(vec![dom("-", "0"), dom("0", "-")], 1),
        ];
        for inst in &pool {
            if let Some(sol) = bounded_solve(inst, 5) {
                assert!(validate_solution(inst, &sol), "{inst:?}");
            }
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_agree() {
        let pool = [
            PcpInstance::demo(),
            PcpInstance::new(vec![dom("1", "11"), dom("11", "1"), dom("0", "1")], 2),
        ];
        for inst in &pool {
            for n in 1..=5 {
                assert_eq!(
                    bounded_solve_with(inst, n, true, Parallelism::Sequential),
                    bounded_solve_with(inst, n, true, Parallelism::Parallel),
                );
            }
        }
    }
}
