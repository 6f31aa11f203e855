//! Regular LDPC codes: progressive-edge-growth construction, systematic
//! encoding through GF(2) elimination, and alist serialization.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_CONSTRUCTION_ATTEMPTS: usize = 16;

/// Dense GF(2) row stored as 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn zeros(n: usize) -> Self {
        Self(vec![0; n.div_ceil(64)])
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        (self.0[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    fn xor_assign(&mut self, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }
}

/// A binary LDPC code with its Tanner graph and a systematic encoder.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    n: usize,
    /// Variable indices of each check (row of `H_c`), sorted.
    check_vars: Vec<Vec<usize>>,
    /// Check indices of each variable (column of `H_c`), sorted.
    var_checks: Vec<Vec<usize>>,
    /// Codeword positions carrying message bits, in message order.
    info_positions: Vec<usize>,
    /// Remaining positions (parity and frozen-to-zero free positions).
    parity_positions: Vec<usize>,
    /// Generator rows as packed codewords, one per message bit.
    generator: Vec<BitRow>,
    rank: usize,
}

impl LdpcCode {
    /// Builds a code from its check-node adjacency. `message_len` message bits
    /// are placed on free columns of the reduced parity-check matrix; surplus
    /// free columns (when `H_c` is rank deficient) are frozen to zero.
    pub fn from_checks(n: usize, check_vars: Vec<Vec<usize>>, message_len: usize) -> Result<Self> {
        let mut var_checks = vec![Vec::new(); n];
        for (j, vars) in check_vars.iter().enumerate() {
            for &v in vars {
                if v >= n {
                    return Err(Error::InvalidDimensions(format!(
                        "check {j} references variable {v} >= n = {n}"
                    )));
                }
                var_checks[v].push(j);
            }
        }
        let mut check_vars = check_vars;
        for c in &mut check_vars {
            c.sort_unstable();
            c.dedup();
        }
        for v in &mut var_checks {
            v.sort_unstable();
            v.dedup();
        }

        // reduced row echelon form over GF(2)
        let mut rows: Vec<BitRow> = check_vars
            .iter()
            .map(|vars| {
                let mut r = BitRow::zeros(n);
                vars.iter().for_each(|&v| r.set(v));
                r
            })
            .collect();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..n {
            let Some(p) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign(&pivot);
                }
            }
            pivots.push(col);
            rank += 1;
        }
        let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        if free.len() < message_len {
            return Err(Error::InvalidDimensions(format!(
                "code dimension {} is smaller than message length {message_len}",
                free.len()
            )));
        }
        let info_positions: Vec<usize> = free[..message_len].to_vec();
        let mut parity_positions: Vec<usize> = pivots.clone();
        parity_positions.extend_from_slice(&free[message_len..]);
        parity_positions.sort_unstable();

        let generator = info_positions
            .iter()
            .map(|&info| {
                let mut g = BitRow::zeros(n);
                g.set(info);
                for (r, &p) in pivots.iter().enumerate() {
                    if rows[r].get(info) {
                        g.set(p);
                    }
                }
                g
            })
            .collect();

        Ok(Self {
            n,
            check_vars,
            var_checks,
            info_positions,
            parity_positions,
            generator,
            rank,
        })
    }

    /// Progressive-edge-growth construction of a `(dv, dc)`-regular code.
    pub fn peg_regular(n: usize, var_degree: usize, check_degree: usize, seed: u64) -> Result<Self> {
        if n == 0 || var_degree == 0 || check_degree == 0 || (n * var_degree) % check_degree != 0 {
            return Err(Error::InvalidDimensions(format!(
                "cannot build a ({var_degree},{check_degree})-regular code of length {n}"
            )));
        }
        let m = n * var_degree / check_degree;
        if m >= n || var_degree > m {
            return Err(Error::InvalidDimensions(format!(
                "degenerate ({var_degree},{check_degree}) code of length {n}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_CONSTRUCTION_ATTEMPTS {
            let check_vars = peg_attempt(n, m, var_degree, check_degree, &mut rng);
            let regular = check_vars.iter().all(|c| c.len() == check_degree);
            if !regular {
                continue;
            }
            let code = Self::from_checks(n, check_vars, n - m)?;
            if code.var_checks.iter().all(|v| v.len() == var_degree) && !code.has_four_cycle() {
                return Ok(code);
            }
        }
        Err(Error::ConstructionFailed {
            attempts: MAX_CONSTRUCTION_ATTEMPTS,
        })
    }

    /// Rate-`rate` code of length `n` with column weight 3, reproducible from
    /// `(n, rate, seed)`. Only rate 1/2, i.e. the (3,6)-regular ensemble, is
    /// supported.
    pub fn construct(n: usize, rate: f64, seed: u64) -> Result<Self> {
        if (rate - 0.5).abs() > 1e-12 || n % 2 != 0 {
            return Err(Error::InvalidDimensions(format!(
                "only even-length rate-1/2 codes are supported, got n={n}, rate={rate}"
            )));
        }
        Self::peg_regular(n, 3, 6, seed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of parity checks (rows of `H_c`).
    pub fn m(&self) -> usize {
        self.check_vars.len()
    }

    /// Number of message bits carried per codeword.
    pub fn k(&self) -> usize {
        self.info_positions.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn check_vars(&self) -> &[Vec<usize>] {
        &self.check_vars
    }

    pub fn var_checks(&self) -> &[Vec<usize>] {
        &self.var_checks
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn parity_positions(&self) -> &[usize] {
        &self.parity_positions
    }

    /// Column permutation placing message positions first.
    pub fn permutation(&self) -> Vec<usize> {
        self.info_positions
            .iter()
            .chain(&self.parity_positions)
            .copied()
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.check_vars.iter().map(Vec::len).sum()
    }

    /// Generator row `i` as an unpacked codeword.
    pub fn generator_row(&self, i: usize) -> Vec<u8> {
        (0..self.n).map(|c| self.generator[i].get(c) as u8).collect()
    }

    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.k() {
            return Err(Error::DimensionMismatch {
                context: "message length",
                expected: self.k(),
                found: message.len(),
            });
        }
        let mut acc = BitRow::zeros(self.n);
        for (bit, row) in message.iter().zip(&self.generator) {
            if bit & 1 == 1 {
                acc.xor_assign(row);
            }
        }
        Ok((0..self.n).map(|c| acc.get(c) as u8).collect())
    }

    pub fn extract_message(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| codeword[p]).collect()
    }

    pub fn syndrome(&self, word: &[u8]) -> Vec<u8> {
        self.check_vars
            .iter()
            .map(|vars| vars.iter().fold(0u8, |acc, &v| acc ^ (word[v] & 1)))
            .collect()
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        word.len() == self.n
            && self
                .check_vars
                .iter()
                .all(|vars| vars.iter().fold(0u8, |acc, &v| acc ^ (word[v] & 1)) == 0)
    }

    fn has_four_cycle(&self) -> bool {
        let mut seen = vec![usize::MAX; self.n];
        for (v, checks) in self.var_checks.iter().enumerate() {
            for &c in checks {
                for &u in &self.check_vars[c] {
                    if u == v {
                        continue;
                    }
                    if seen[u] == v {
                        return true;
                    }
                    seen[u] = v;
                }
            }
        }
        false
    }

    /// Length of the shortest cycle in the Tanner graph (`usize::MAX` if acyclic).
    pub fn girth(&self) -> usize {
        // nodes: variables 0..n, checks n..n+m
        let total = self.n + self.m();
        let neighbors = |node: usize| -> &[usize] {
            if node < self.n {
                &self.var_checks[node]
            } else {
                &self.check_vars[node - self.n]
            }
        };
        let mut best = usize::MAX;
        let mut dist = vec![usize::MAX; total];
        let mut parent = vec![usize::MAX; total];
        for start in 0..self.n {
            dist.fill(usize::MAX);
            parent.fill(usize::MAX);
            dist[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                if 2 * dist[u] >= best {
                    break;
                }
                for &raw in neighbors(u) {
                    let w = if u < self.n { raw + self.n } else { raw };
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        parent[w] = u;
                        queue.push_back(w);
                    } else if parent[u] != w {
                        best = best.min(dist[u] + dist[w] + 1);
                    }
                }
            }
        }
        best
    }

    /// Serializes `H_c` in alist format.
    pub fn to_alist(&self) -> String {
        let mut s = String::new();
        let max_col = self.var_checks.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.check_vars.iter().map(Vec::len).max().unwrap_or(0);
        let _ = writeln!(s, "{} {}", self.n, self.m());
        let _ = writeln!(s, "{max_col} {max_row}");
        let join = |v: &mut dyn Iterator<Item = usize>| {
            v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(s, "{}", join(&mut self.var_checks.iter().map(Vec::len)));
        let _ = writeln!(s, "{}", join(&mut self.check_vars.iter().map(Vec::len)));
        for checks in &self.var_checks {
            let mut entries: Vec<usize> = checks.iter().map(|c| c + 1).collect();
            entries.resize(max_col, 0);
            let _ = writeln!(s, "{}", join(&mut entries.into_iter()));
        }
        for vars in &self.check_vars {
            let mut entries: Vec<usize> = vars.iter().map(|v| v + 1).collect();
            entries.resize(max_row, 0);
            let _ = writeln!(s, "{}", join(&mut entries.into_iter()));
        }
        s
    }

    /// Parses an alist description. The message length is `n - rank(H_c)`
    /// unless `message_len` is given.
    pub fn from_alist(text: &str, message_len: Option<usize>) -> Result<Self> {
        let mut tokens = text.split_whitespace().map(|t| {
            t.parse::<usize>()
                .map_err(|e| Error::Parse(format!("alist token `{t}`: {e}")))
        });
        let mut next = || -> Result<usize> {
            tokens
                .next()
                .unwrap_or_else(|| Err(Error::Parse("alist ended early".into())))
        };
        let n = next()?;
        let m = next()?;
        let max_col = next()?;
        let max_row = next()?;
        let col_weights: Vec<usize> = (0..n).map(|_| next()).collect::<Result<_>>()?;
        let row_weights: Vec<usize> = (0..m).map(|_| next()).collect::<Result<_>>()?;
        // column lists are redundant with the row lists; read and discard
        for _ in 0..n * max_col {
            next()?;
        }
        let mut check_vars = Vec::with_capacity(m);
        for (j, &w) in row_weights.iter().enumerate() {
            let mut vars = Vec::with_capacity(w);
            for _ in 0..max_row {
                let v = next()?;
                if v != 0 {
                    if v > n {
                        return Err(Error::Parse(format!("check {j} lists variable {v} > n")));
                    }
                    vars.push(v - 1);
                }
            }
            if vars.len() != w {
                return Err(Error::Parse(format!(
                    "check {j} weight {} does not match header {w}",
                    vars.len()
                )));
            }
            check_vars.push(vars);
        }
        let probe = Self::from_checks(n, check_vars.clone(), 0)?;
        for (v, &w) in col_weights.iter().enumerate() {
            if probe.var_checks[v].len() != w {
                return Err(Error::Parse(format!("column {v} weight mismatch")));
            }
        }
        let k = message_len.unwrap_or(n - probe.rank);
        Self::from_checks(n, check_vars, k)
    }

    pub fn write_alist(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_alist())?;
        Ok(())
    }

    pub fn read_alist(path: impl AsRef<Path>, message_len: Option<usize>) -> Result<Self> {
        Self::from_alist(&std::fs::read_to_string(path)?, message_len)
    }
}

fn peg_attempt<R: Rng>(n: usize, m: usize, dv: usize, dc: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut check_vars: Vec<Vec<usize>> = vec![Vec::with_capacity(dc); m];
    let mut var_checks: Vec<Vec<usize>> = vec![Vec::with_capacity(dv); n];
    let mut reached = vec![usize::MAX; m];
    let mut var_seen = vec![usize::MAX; n];
    let mut stamp = 0usize;

    let pick = |candidates: &[usize], check_vars: &[Vec<usize>], rng: &mut R| -> Option<usize> {
        let min = candidates.iter().map(|&c| check_vars[c].len()).min()?;
        let best: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&c| check_vars[c].len() == min)
            .collect();
        Some(best[rng.random_range(0..best.len())])
    };

    for v in 0..n {
        for edge in 0..dv {
            let open: Vec<usize> = (0..m)
                .filter(|&c| check_vars[c].len() < dc && !var_checks[v].contains(&c))
                .collect();
            let chosen = if edge == 0 {
                pick(&open, &check_vars, rng)
            } else {
                // breadth-first expansion of the tree rooted at v
                stamp += 1;
                let mut frontier_vars = vec![v];
                var_seen[v] = stamp;
                for &c in &var_checks[v] {
                    reached[c] = stamp;
                }
                let mut frontier_checks: Vec<usize> = var_checks[v].clone();
                let mut reached_count = frontier_checks.len();
                let mut previous_unreached: Vec<usize> =
                    open.iter().copied().filter(|&c| reached[c] != stamp).collect();
                loop {
                    frontier_vars.clear();
                    for &c in &frontier_checks {
                        for &u in &check_vars[c] {
                            if var_seen[u] != stamp {
                                var_seen[u] = stamp;
                                frontier_vars.push(u);
                            }
                        }
                    }
                    let mut next_checks = Vec::new();
                    for &u in &frontier_vars {
                        for &c in &var_checks[u] {
                            if reached[c] != stamp {
                                reached[c] = stamp;
                                next_checks.push(c);
                            }
                        }
                    }
                    let unreached: Vec<usize> =
                        open.iter().copied().filter(|&c| reached[c] != stamp).collect();
                    if next_checks.is_empty() {
                        // the tree stopped growing; unreached checks add no cycle
                        break pick(&unreached, &check_vars, rng)
                            .or_else(|| pick(&previous_unreached, &check_vars, rng));
                    }
                    reached_count += next_checks.len();
                    if unreached.is_empty() || reached_count >= m {
                        break pick(&previous_unreached, &check_vars, rng)
                            .or_else(|| pick(&open, &check_vars, rng));
                    }
                    previous_unreached = unreached;
                    frontier_checks = next_checks;
                }
            };
            let Some(c) = chosen.or_else(|| pick(&open, &check_vars, rng)) else {
                continue;
            };
            check_vars[c].push(v);
            var_checks[v].push(c);
        }
    }
    check_vars
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code() -> LdpcCode {
        LdpcCode::construct(512, 0.5, 1).unwrap()
    }

    #[test]
    fn construction_is_regular_and_deterministic() {
        let a = code();
        let b = code();
        assert_eq!(a.check_vars(), b.check_vars());
        assert_eq!(a.edge_count(), 1536);
        assert!(a.var_checks().iter().all(|v| v.len() == 3));
        assert!(a.check_vars().iter().all(|c| c.len() == 6));
        assert_eq!(a.k(), 256);
        assert!(a.girth() >= 6);
    }

    #[test]
    fn generator_rows_are_codewords() {
        let c = code();
        for i in 0..c.k() {
            let row = c.generator_row(i);
            assert!(c.is_codeword(&row), "row {i}");
            let mut unit = vec![0u8; c.k()];
            unit[i] = 1;
            assert_eq!(c.encode(&unit).unwrap(), row);
        }
    }

    #[test]
    fn encoding_is_systematic() {
        let c = code();
        assert_eq!(c.encode(&vec![0; 256]).unwrap(), vec![0; 512]);
        let msg: Vec<u8> = (0..256).map(|i| ((i * 7 + 3) % 5 == 0) as u8).collect();
        let cw = c.encode(&msg).unwrap();
        assert!(c.syndrome(&cw).iter().all(|&s| s == 0));
        assert_eq!(c.extract_message(&cw), msg);
        assert!(c.encode(&msg[..10]).is_err());
    }

    #[test]
    fn alist_round_trip() {
        let c = code();
        let text = c.to_alist();
        let back = LdpcCode::from_alist(&text, Some(c.k())).unwrap();
        assert_eq!(back.check_vars(), c.check_vars());
        assert_eq!(back.info_positions(), c.info_positions());
        assert!(LdpcCode::from_alist("4 2\n2", None).is_err());
    }

    #[test]
    fn small_code_girth_and_alist() {
        // (7,4) Hamming code has 4-cycles
        let checks = vec![vec![0, 1, 2, 4], vec![1, 2, 3, 5], vec![0, 2, 3, 6]];
        let h = LdpcCode::from_checks(7, checks, 4).unwrap();
        assert_eq!(h.girth(), 4);
        assert_eq!(h.rank(), 3);
        let cw = h.encode(&[1, 0, 1, 1]).unwrap();
        assert!(h.is_codeword(&cw));
    }

    #[test]
    fn rejects_unsupported_rate() {
        assert!(LdpcCode::construct(512, 0.75, 1).is_err());
        assert!(LdpcCode::construct(511, 0.5, 1).is_err());
    }
}
