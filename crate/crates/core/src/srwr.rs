//! Signed random walk with restart and the thresholded diffusion matrix.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Sign, SignedGraph};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrwrConfig {
    pub restart_c: f64,
    /// Attenuation of "the enemy of my enemy is my friend".
    pub beta: f64,
    /// Attenuation of "the friend of my enemy is my enemy".
    pub gamma: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub threshold_p: f64,
    pub threshold_n: f64,
}

impl Default for SrwrConfig {
    fn default() -> Self {
        Self {
            restart_c: 0.15,
            beta: 0.5,
            gamma: 0.5,
            tol: 1e-9,
            max_iters: 1000,
            threshold_p: 1e-4,
            threshold_n: -1e-4,
        }
    }
}

impl SrwrConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.restart_c > 0.0 && self.restart_c < 1.0) {
            return bad(format!("restart probability {} not in (0, 1)", self.restart_c));
        }
        if !(0.0..=1.0).contains(&self.beta) || !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("beta {} and gamma {} must lie in [0, 1]", self.beta, self.gamma));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tolerance {} must be positive", self.tol));
        }
        if !(self.threshold_n < 0.0 && self.threshold_p > 0.0) {
            return bad(format!(
                "thresholds need n < 0 < p, got n = {}, p = {}",
                self.threshold_n, self.threshold_p
            ));
        }
        Ok(())
    }
}

/// `D⁻¹A` split into its positive part and the magnitude of its negative
/// part, stored as per-source out-lists. `D` is the out-degree of `|A|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiRowNormalized {
    pub plus: Vec<Vec<(usize, f64)>>,
    pub minus: Vec<Vec<(usize, f64)>>,
}

impl SemiRowNormalized {
    pub fn num_nodes(&self) -> usize {
        self.plus.len()
    }

    pub fn is_dangling(&self, node: usize) -> bool {
        self.plus[node].is_empty() && self.minus[node].is_empty()
    }

    /// Row `u` of the positive part as a dense vector.
    pub fn plus_row(&self, u: usize) -> Vec<f64> {
        dense(&self.plus[u], self.num_nodes())
    }

    pub fn minus_row(&self, u: usize) -> Vec<f64> {
        dense(&self.minus[u], self.num_nodes())
    }
}

fn dense(entries: &[(usize, f64)], n: usize) -> Vec<f64> {
    let mut row = vec![0.0; n];
    for &(v, w) in entries {
        row[v] = w;
    }
    row
}

pub fn semi_row_normalize(g: &SignedGraph) -> SemiRowNormalized {
    let n = g.num_nodes();
    let mut plus = vec![Vec::new(); n];
    let mut minus = vec![Vec::new(); n];
    for u in 0..n {
        let out = g.out_neighbors(u);
        if out.is_empty() {
            continue;
        }
        let w = 1.0 / out.len() as f64;
        for &(v, s) in out {
            match s {
                Sign::Positive => plus[u].push((v, w)),
                Sign::Negative => minus[u].push((v, w)),
            }
        }
    }
    SemiRowNormalized { plus, minus }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrwrScores {
    pub r_plus: Vec<f64>,
    pub r_minus: Vec<f64>,
    pub iterations: usize,
    /// L1 change of `(r⁺, r⁻)` at each iteration.
    pub residuals: Vec<f64>,
}

/// Power iteration for the attenuated signed RWR from `seed`.
///
/// Mass that lands on a node without out-edges is returned to the seed, so
/// `‖r⁺‖₁ + ‖r⁻‖₁ = 1` for any `β, γ`.
pub fn srwr_rank(norm: &SemiRowNormalized, seed: usize, cfg: &SrwrConfig) -> Result<SrwrScores> {
    cfg.validate()?;
    let n = norm.num_nodes();
    if seed >= n {
        return Err(Error::InvalidParameter(format!("seed {seed} outside {n} nodes")));
    }
    let c = cfg.restart_c;
    let (beta, gamma) = (cfg.beta, cfg.gamma);
    let mut rp = vec![0.0; n];
    let mut rm = vec![0.0; n];
    rp[seed] = 1.0;
    let mut np = vec![0.0; n];
    let mut nm = vec![0.0; n];
    let mut residuals = Vec::new();
    for iter in 1..=cfg.max_iters {
        np.iter_mut().for_each(|v| *v = 0.0);
        nm.iter_mut().for_each(|v| *v = 0.0);
        let mut dangling = 0.0;
        for u in 0..n {
            let (p, m) = (rp[u], rm[u]);
            if p == 0.0 && m == 0.0 {
                continue;
            }
            if norm.is_dangling(u) {
                dangling += p + m;
                continue;
            }
            for &(v, w) in &norm.plus[u] {
                np[v] += w * (p + (1.0 - gamma) * m);
                nm[v] += w * gamma * m;
            }
            for &(v, w) in &norm.minus[u] {
                np[v] += w * beta * m;
                nm[v] += w * (p + (1.0 - beta) * m);
            }
        }
        for v in np.iter_mut().chain(nm.iter_mut()) {
            *v *= 1.0 - c;
        }
        np[seed] += c + (1.0 - c) * dangling;
        let residual: f64 = np
            .iter()
            .zip(&rp)
            .chain(nm.iter().zip(&rm))
            .map(|(a, b)| (a - b).abs())
            .sum();
        std::mem::swap(&mut rp, &mut np);
        std::mem::swap(&mut rm, &mut nm);
        residuals.push(residual);
        if residual < cfg.tol {
            return Ok(SrwrScores {
                r_plus: rp,
                r_minus: rm,
                iterations: iter,
                residuals,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iters,
        residual: residuals.last().copied().unwrap_or(f64::INFINITY),
    })
}

/// Symmetric sparse `{−1, 0, +1}` matrix with the score behind each entry.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix {
    /// Per node, `(other, sign, r_d)` sorted by `other`; mirrored on both ends.
    rows: Vec<Vec<(usize, Sign, f64)>>,
}

impl DiffusionMatrix {
    pub fn empty(n: usize) -> Self {
        Self { rows: vec![Vec::new(); n] }
    }

    /// Builds from `(i, j, sign, score)` entries with `i < j`.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize, Sign, f64)>) -> Result<Self> {
        let mut rows = vec![Vec::new(); n];
        for (i, j, s, score) in entries {
            if i >= j || j >= n {
                return Err(Error::InvalidParameter(format!(
                    "diffusion entry ({i}, {j}) must satisfy i < j < {n}"
                )));
            }
            rows[i].push((j, s, score));
            rows[j].push((i, s, score));
        }
        for r in &mut rows {
            r.sort_by_key(|e| e.0);
            if r.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidParameter("duplicate diffusion entry".into()));
            }
        }
        Ok(Self { rows })
    }

    pub fn num_nodes(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entry(i, j).map_or(0, |(s, _)| s.value())
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<(Sign, f64)> {
        let row = self.rows.get(i)?;
        row.binary_search_by_key(&j, |e| e.0)
            .ok()
            .map(|k| (row[k].1, row[k].2))
    }

    pub fn row(&self, i: usize) -> &[(usize, Sign, f64)] {
        &self.rows[i]
    }

    /// Nodes `j` with `S(i, j) = sign`, ascending.
    pub fn with_sign(&self, i: usize, sign: Sign) -> Vec<usize> {
        self.rows[i]
            .iter()
            .filter(|e| e.1 == sign)
            .map(|e| e.0)
            .collect()
    }

    /// Upper-triangle entries `(i, j, sign, score)` with `i < j`, row-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Sign, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, r)| {
            r.iter()
                .filter(move |e| e.0 > i)
                .map(move |&(j, s, score)| (i, j, s, score))
        })
    }

    pub fn count(&self, sign: Sign) -> usize {
        self.entries().filter(|e| e.2 == sign).count()
    }
}

/// Sign for a symmetrized score under thresholds `p > 0 > n`.
pub fn threshold_score(score: f64, cfg: &SrwrConfig) -> Option<Sign> {
    if score > 0.0 && score >= cfg.threshold_p {
        Some(Sign::Positive)
    } else if score < 0.0 && score <= cfg.threshold_n {
        Some(Sign::Negative)
    } else {
        None
    }
}

/// Runs SRWR from every node and thresholds the symmetrized difference
/// `max(r_p(u,v), r_p(v,u)) − max(r_n(u,v), r_n(v,u))`. The diagonal is zero.
pub fn build_diffusion_matrix(g: &SignedGraph, cfg: &SrwrConfig) -> Result<DiffusionMatrix> {
    cfg.validate()?;
    let n = g.num_nodes();
    let norm = semi_row_normalize(g);
    let ranks: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|s| srwr_rank(&norm, s, cfg).map(|r| (r.r_plus, r.r_minus)))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<(usize, Sign, f64)>> = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut row = Vec::new();
            for v in 0..n {
                if v == u {
                    continue;
                }
                let p = ranks[u].0[v].max(ranks[v].0[u]);
                let m = ranks[u].1[v].max(ranks[v].1[u]);
                let score = p - m;
                if let Some(s) = threshold_score(score, cfg) {
                    row.push((v, s, score));
                }
            }
            row
        })
        .collect();
    Ok(DiffusionMatrix { rows })
}

/// Writes upper-triangle entries as `i\tj\tsign\tscore` under a
/// `# config_hash` header line.
pub fn write_diffusion(path: impl AsRef<Path>, s: &DiffusionMatrix, config_hash: &str) -> Result<()> {
    let mut out = format!("# config_hash {config_hash}\n# nodes {}\n", s.num_nodes());
    for (i, j, sign, score) in s.entries() {
        writeln!(out, "{i}\t{j}\t{}\t{score:e}", sign.value()).expect("write to string");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a file written by [`write_diffusion`], returning the matrix and the
/// stored config hash.
pub fn read_diffusion(path: impl AsRef<Path>) -> Result<(DiffusionMatrix, String)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut hash = None;
    let mut nodes = None;
    let mut entries = Vec::new();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    for (k, line) in text.lines().enumerate() {
        let lineno = k + 1;
        if let Some(rest) = line.strip_prefix("# config_hash ") {
            hash = Some(rest.trim().to_string());
            continue;
        }
        if let Some(rest) = line.strip_prefix("# nodes ") {
            nodes = Some(
                rest.trim()
                    .parse::<usize>()
                    .map_err(|e| parse_err(lineno, e.to_string()))?,
            );
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(parse_err(lineno, format!("expected 4 fields, found {}", f.len())));
        }
        let i: usize = f[0].parse().map_err(|_| parse_err(lineno, "bad node id".into()))?;
        let j: usize = f[1].parse().map_err(|_| parse_err(lineno, "bad node id".into()))?;
        let sign = f[2]
            .parse::<i64>()
            .ok()
            .and_then(Sign::from_value)
            .ok_or_else(|| parse_err(lineno, format!("bad sign {:?}", f[2])))?;
        let score: f64 = f[3].parse().map_err(|_| parse_err(lineno, "bad score".into()))?;
        entries.push((i, j, sign, score));
    }
    let hash = hash.ok_or_else(|| Error::Format("diffusion file lacks a config_hash header".into()))?;
    let n = nodes.ok_or_else(|| Error::Format("diffusion file lacks a nodes header".into()))?;
    Ok((DiffusionMatrix::from_entries(n, entries)?, hash))
}
