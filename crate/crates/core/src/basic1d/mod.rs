//! One-dimensional basic processes as randomized block factors of an i.i.d.
//! Bernoulli driver.
//!
//! A process is `(w, p, q)`: the driver `X_i ~ Bernoulli(p)` is i.i.d., and
//! given the driver each site is occupied independently with probability
//! `q(X_i, …, X_{i+w−1})`. Windows that do not overlap are independent, so
//! every correlation at lag `≥ w` equals `γ²` exactly and lags `< w` are
//! finite sums over `2^(w+lag)` driver patterns.

mod synth;

pub use synth::{synthesize, SynthMode, SynthOptions, SynthReport};

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::format::fmt17;
use crate::rng::stream;

/// Largest supported window. Keeps the full profile (lags up to `w − 1`)
/// inside the enumeration limit.
pub const MAX_WINDOW: usize = 15;

/// Largest number of driver bits the enumeration oracle will sum over.
pub const MAX_ENUMERATION_BITS: usize = 30;

/// Randomized block factor of an i.i.d. Bernoulli driver.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFactorProcess1D {
    window: usize,
    driver_p: f64,
    /// Indexed by the driver pattern, bit `j` = `X_{i+j}`.
    response: Vec<f64>,
}

impl BlockFactorProcess1D {
    pub fn new(window: usize, driver_p: f64, response: Vec<f64>) -> Result<Self> {
        if window == 0 || window > MAX_WINDOW {
            return Err(invalid(format!(
                "window must lie in 1..={MAX_WINDOW}, got {window}"
            )));
        }
        if !(0.0..=1.0).contains(&driver_p) {
            return Err(invalid(format!(
                "driver_p must lie in [0,1], got {driver_p}"
            )));
        }
        if response.len() != 1 << window {
            return Err(invalid(format!(
                "response table needs {} entries, got {}",
                1usize << window,
                response.len()
            )));
        }
        if let Some(q) = response.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(invalid(format!(
                "response entries must lie in [0,1], got {q}"
            )));
        }
        Ok(Self {
            window,
            driver_p,
            response,
        })
    }

    /// Constant response; `value = 1` is the full lattice, `0` the empty process.
    pub fn constant(window: usize, driver_p: f64, value: f64) -> Result<Self> {
        if window == 0 || window > MAX_WINDOW {
            return Err(invalid(format!(
                "window must lie in 1..={MAX_WINDOW}, got {window}"
            )));
        }
        Self::new(window, driver_p, vec![value; 1 << window])
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn driver_p(&self) -> f64 {
        self.driver_p
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    /// `γ = Σ_b P(b) q(b)`.
    pub fn exact_density(&self) -> f64 {
        density_raw(self.driver_p, &self.response, self.window)
    }

    /// `⟨A_0 A_lag⟩` by exhaustive enumeration of the driver.
    pub fn exact_lag_correlation(&self, lag: usize) -> Result<f64> {
        lag_raw(self.driver_p, &self.response, self.window, lag)
    }

    pub fn profile(&self) -> Result<CorrelationProfile1D> {
        let density = self.exact_density();
        let lags = (1..self.window)
            .map(|k| self.exact_lag_correlation(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(CorrelationProfile1D {
            window: self.window,
            density,
            lags,
        })
    }

    /// Independent thinning: keep each occupied site with probability `t`.
    pub fn thin(&self, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(invalid(format!(
                "thinning probability must lie in [0,1], got {t}"
            )));
        }
        Ok(Self {
            window: self.window,
            driver_p: self.driver_p,
            response: self.response.iter().map(|q| q * t).collect(),
        })
    }

    pub fn sample_path(&self, n: usize, seed: u64) -> Result<Vec<u8>> {
        if n == 0 {
            return Err(invalid("path length must be >= 1"));
        }
        Ok(self.sample_path_with(n, &mut stream(seed, &[])))
    }

    /// Draws `n + w − 1` driver bits, then one uniform decision per site.
    pub fn sample_path_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u8> {
        let w = self.window;
        let driver: Vec<usize> = (0..n + w - 1)
            .map(|_| usize::from(rng.gen::<f64>() < self.driver_p))
            .collect();
        let mut idx = driver[..w]
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, &x)| acc | (x << j));
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                idx = (idx >> 1) | (driver[i + w - 1] << (w - 1));
            }
            out.push(u8::from(rng.gen::<f64>() < self.response[idx]));
        }
        out
    }

    /// Flat text record: `w driver_p`, then one `pattern value` line per
    /// pattern, bits little-endian within the window, 17 significant digits.
    pub fn to_record(&self) -> String {
        let mut s = format!("{} {}\n", self.window, fmt17(self.driver_p));
        for (idx, q) in self.response.iter().enumerate() {
            s.push_str(&pattern_string(idx, self.window));
            s.push(' ');
            s.push_str(&fmt17(*q));
            s.push('\n');
        }
        s
    }

    /// Parses [`to_record`](Self::to_record) output. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse_record(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, head) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "empty process record".into(),
        })?;
        let mut tok = head.split_whitespace();
        let window: usize = parse_tok(tok.next(), ln, "window")?;
        let driver_p: f64 = parse_tok(tok.next(), ln, "driver_p")?;
        if tok.next().is_some() {
            return Err(parse_err(ln, "trailing tokens in header"));
        }
        if window == 0 || window > MAX_WINDOW {
            return Err(parse_err(ln, format!("window {window} out of range")));
        }
        let mut response = vec![f64::NAN; 1 << window];
        let mut seen = vec![false; 1 << window];
        for (ln, line) in lines {
            let mut tok = line.split_whitespace();
            let bits = tok.next().ok_or_else(|| parse_err(ln, "missing pattern"))?;
            if bits.len() != window || !bits.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(parse_err(ln, format!("bad pattern {bits:?}")));
            }
            let idx = bits
                .bytes()
                .enumerate()
                .fold(0usize, |acc, (j, b)| acc | (usize::from(b == b'1') << j));
            if seen[idx] {
                return Err(parse_err(ln, format!("duplicate pattern {bits}")));
            }
            seen[idx] = true;
            response[idx] = parse_tok(tok.next(), ln, "response value")?;
            if tok.next().is_some() {
                return Err(parse_err(ln, "trailing tokens"));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(parse_err(
                0,
                format!("pattern {} missing", pattern_string(missing, window)),
            ));
        }
        Self::new(window, driver_p, response).map_err(|e| parse_err(0, e.to_string()))
    }
}

fn pattern_string(idx: usize, w: usize) -> String {
    (0..w)
        .map(|j| if idx >> j & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} from {tok:?}")))
}

/// The deterministic factor `A_i = X_i (1 − X_{i+1})`, realizing
/// `(γ = p(1−p), g^(0))`.
pub fn alpha0_exclusion_factor(p: f64) -> Result<BlockFactorProcess1D> {
    // pattern (X_i, X_{i+1}) = (1, 0) has index 1
    BlockFactorProcess1D::new(2, p, vec![0.0, 1.0, 0.0, 0.0])
}

/// Exact density and lag table of a basic process.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile1D {
    pub window: usize,
    pub density: f64,
    /// `⟨A_0 A_k⟩` for `k = 1, …, w − 1`.
    pub lags: Vec<f64>,
}

impl CorrelationProfile1D {
    /// `⟨A_0 A_k⟩` for any `k`; `k ≥ w` is `γ²`.
    pub fn lag(&self, k: usize) -> f64 {
        match k {
            0 => self.density,
            k if k < self.window => self.lags[k - 1],
            _ => self.density * self.density,
        }
    }

    /// `α̂ = ⟨A_0 A_1⟩ / γ²`, absent when `γ = 0`.
    pub fn alpha_hat(&self) -> Option<f64> {
        let g2 = self.density * self.density;
        (g2 > 0.0).then(|| self.lag(1) / g2)
    }

    /// `max_{2 ≤ k < w} |⟨A_0 A_k⟩ − γ²|`.
    pub fn residual(&self) -> f64 {
        let g2 = self.density * self.density;
        (2..self.window)
            .map(|k| (self.lag(k) - g2).abs())
            .fold(0.0, f64::max)
    }
}

/// Neumaier-compensated sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Bernoulli weights indexed by popcount for `n` driver bits.
fn weights_by_ones(p: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
        .collect()
}

pub(crate) fn density_raw(p: f64, q: &[f64], w: usize) -> f64 {
    let weights = weights_by_ones(p, w);
    let mut acc = CompensatedSum::default();
    for (b, &qb) in q.iter().enumerate() {
        acc.add(weights[b.count_ones() as usize] * qb);
    }
    acc.value()
}

pub(crate) fn lag_raw(p: f64, q: &[f64], w: usize, lag: usize) -> Result<f64> {
    if lag == 0 {
        return Ok(density_raw(p, q, w));
    }
    if lag >= w {
        let g = density_raw(p, q, w);
        return Ok(g * g);
    }
    let bits = w + lag;
    if bits > MAX_ENUMERATION_BITS {
        return Err(Error::EnumerationTooLarge {
            bits,
            limit: MAX_ENUMERATION_BITS,
        });
    }
    let weights = weights_by_ones(p, bits);
    let mask = (1usize << w) - 1;
    let mut acc = CompensatedSum::default();
    for pattern in 0..1usize << bits {
        let a = q[pattern & mask];
        if a == 0.0 {
            continue;
        }
        let b = q[(pattern >> lag) & mask];
        acc.add(weights[pattern.count_ones() as usize] * a * b);
    }
    Ok(acc.value())
}
