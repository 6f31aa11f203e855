//! Flooding box-plus sum-product decoding with optional quasi-uniform message
//! quantization.

use super::code::LdpcCode;
use super::quantizer::QuasiUniformQuantizer;

/// Exact pairwise check-node combination
/// `log((1 + e^{x+y}) / (e^x + e^y))`, evaluated as
/// `sign(x) sign(y) min(|x|, |y|) + log(1 + e^{-|x+y|}) - log(1 + e^{-|x-y|})`.
#[inline]
pub fn box_plus(x: f64, y: f64) -> f64 {
    if x.is_infinite() || y.is_infinite() {
        return match (x.is_infinite(), y.is_infinite()) {
            (true, true) => x.signum() * y.signum() * f64::INFINITY,
            (true, false) => x.signum() * y,
            _ => y.signum() * x,
        };
    }
    let sign = if (x < 0.0) != (y < 0.0) { -1.0 } else { 1.0 };
    sign * x.abs().min(y.abs()) + (-(x + y).abs()).exp().ln_1p() - (-(x - y).abs()).exp().ln_1p()
}

/// Check-to-variable message: left fold of [`box_plus`] over the incoming
/// variable-to-check messages (the target edge already excluded).
pub fn cn_update(incoming: &[f64]) -> f64 {
    let mut it = incoming.iter().copied();
    match it.next() {
        Some(first) => it.fold(first, box_plus),
        None => f64::INFINITY,
    }
}

/// Variable-to-check message before quantization: channel LLR plus the
/// incoming check-to-variable messages (the target edge already excluded).
pub fn vn_update(channel: f64, incoming: &[f64]) -> f64 {
    channel + incoming.iter().sum::<f64>()
}

/// Result of one decoder run.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    /// Posterior minus input LLR, per code bit.
    pub extrinsic: Vec<f64>,
    pub posterior: Vec<f64>,
    pub hard_bits: Vec<u8>,
    /// Zero syndrome with no undecided (exactly zero) posterior.
    pub converged: bool,
    pub iterations: usize,
}

/// Precomputed Tanner-graph layout for message passing.
#[derive(Debug, Clone)]
pub struct SpaDecoder {
    n: usize,
    /// Edges are stored check-major; `check_offsets[j]..check_offsets[j+1]`.
    check_offsets: Vec<usize>,
    edge_var: Vec<usize>,
    /// Edge indices grouped by variable.
    var_offsets: Vec<usize>,
    var_edges: Vec<usize>,
}

impl SpaDecoder {
    pub fn new(code: &LdpcCode) -> Self {
        let n = code.n();
        let mut check_offsets = vec![0];
        let mut edge_var = Vec::with_capacity(code.edge_count());
        let mut per_var: Vec<Vec<usize>> = vec![Vec::new(); n];
        for vars in code.check_vars() {
            for &v in vars {
                per_var[v].push(edge_var.len());
                edge_var.push(v);
            }
            check_offsets.push(edge_var.len());
        }
        let mut var_offsets = vec![0];
        let mut var_edges = Vec::with_capacity(edge_var.len());
        for edges in per_var {
            var_edges.extend(edges);
            var_offsets.push(var_edges.len());
        }
        Self {
            n,
            check_offsets,
            edge_var,
            var_offsets,
            var_edges,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Decodes channel LLRs `lc` (positive favours bit 0). When `quantizer`
    /// is set, every variable-to-check message is quantized. Check-to-variable
    /// messages are box-plus outputs of quantized inputs and stay exact.
    pub fn decode(
        &self,
        lc: &[f64],
        quantizer: Option<&QuasiUniformQuantizer>,
        max_iterations: usize,
    ) -> DecodeOutput {
        assert_eq!(lc.len(), self.n, "channel LLR length must equal code length");
        let q = |v: f64| quantizer.map_or(v, |qz| qz.quantize(v));
        let edges = self.edge_var.len();
        let mut v2c: Vec<f64> = self.edge_var.iter().map(|&v| q(lc[v])).collect();
        let mut c2v = vec![0.0; edges];
        let mut posterior = lc.to_vec();
        let mut hard = vec![0u8; self.n];
        let mut prefix = Vec::new();
        let mut converged = false;
        let mut iterations = 0;

        while iterations < max_iterations {
            iterations += 1;
            // check nodes: extrinsic fold via prefix/suffix accumulation
            for j in 0..self.check_offsets.len() - 1 {
                let (s, e) = (self.check_offsets[j], self.check_offsets[j + 1]);
                let msgs = &v2c[s..e];
                let d = msgs.len();
                if d == 1 {
                    c2v[s] = 0.0;
                    continue;
                }
                prefix.clear();
                prefix.push(msgs[0]);
                for i in 1..d - 1 {
                    let p = box_plus(prefix[i - 1], msgs[i]);
                    prefix.push(p);
                }
                let mut suffix = msgs[d - 1];
                c2v[s + d - 1] = prefix[d - 2];
                for i in (1..d - 1).rev() {
                    c2v[s + i] = box_plus(prefix[i - 1], suffix);
                    suffix = box_plus(msgs[i], suffix);
                }
                c2v[s] = suffix;
            }
            // variable nodes
            for v in 0..self.n {
                let ids = &self.var_edges[self.var_offsets[v]..self.var_offsets[v + 1]];
                let total = lc[v] + ids.iter().map(|&e| c2v[e]).sum::<f64>();
                posterior[v] = total;
                hard[v] = (total < 0.0) as u8;
                for &e in ids {
                    v2c[e] = q(total - c2v[e]);
                }
            }
            if posterior.iter().all(|&p| p != 0.0) && self.syndrome_ok(&hard) {
                converged = true;
                break;
            }
        }
        if iterations == 0 {
            for (h, &l) in hard.iter_mut().zip(lc) {
                *h = (l < 0.0) as u8;
            }
        }

        let extrinsic = posterior.iter().zip(lc).map(|(p, l)| p - l).collect();
        DecodeOutput {
            extrinsic,
            posterior,
            hard_bits: hard,
            converged,
            iterations,
        }
    }

    fn syndrome_ok(&self, hard: &[u8]) -> bool {
        (0..self.check_offsets.len() - 1).all(|j| {
            self.edge_var[self.check_offsets[j]..self.check_offsets[j + 1]]
                .iter()
                .fold(0u8, |acc, &v| acc ^ hard[v])
                == 0
        })
    }
}

/// One-shot decode; builds the edge layout on every call.
pub fn spa_decode(
    lc: &[f64],
    code: &LdpcCode,
    quantizer: Option<&QuasiUniformQuantizer>,
    max_iterations: usize,
) -> DecodeOutput {
    SpaDecoder::new(code).decode(lc, quantizer, max_iterations)
}
