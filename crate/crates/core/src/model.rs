//! Problem instance, associated-channel alphabet, pmfs and the precoding map.
//!
//! Index conventions: constellation indices `i` and state indices `q` are
//! 1-based (`1..=M`, `1..=Q`); message indices are 0-based (`0..M`).

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities at or below this value are treated as zero when counting support.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;

/// Largest associated alphabet (`M^Q`) the dense solvers accept.
pub const MAX_DENSE_SYMBOLS: usize = 10_000_000;

const PROB_SUM_TOL: f64 = 1e-12;
const PMF_SUM_TOL: f64 = 1e-9;

/// One instance of `Y = X + S + N`: constellation, interference alphabet and
/// statistics, and Gaussian noise variance.
///
/// Interference levels are kept sorted ascending; the constructor re-sorts them
/// and permutes the probabilities to match.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSpec {
    constellation: Vec<f64>,
    interference_levels: Vec<f64>,
    interference_probs: Vec<f64>,
    noise_power: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    constellation: Option<Vec<f64>>,
    interference_levels: Option<Vec<f64>>,
    interference_probs: Option<Vec<f64>>,
    noise_power: Option<f64>,
}

impl ChannelSpec {
    pub fn new(
        constellation: Vec<f64>,
        interference_levels: Vec<f64>,
        interference_probs: Vec<f64>,
        noise_power: f64,
    ) -> Result<Self> {
        let m = constellation.len();
        if m < 2 {
            return Err(invalid("constellation", format!("need at least 2 points, got {m}")));
        }
        if let Some(x) = constellation.iter().find(|x| !x.is_finite()) {
            return Err(invalid("constellation", format!("non-finite point {x}")));
        }
        for a in 0..m {
            for b in a + 1..m {
                if constellation[a] == constellation[b] {
                    return Err(invalid(
                        "constellation",
                        format!("duplicate point {}", constellation[a]),
                    ));
                }
            }
        }

        let q = interference_levels.len();
        if q < 1 {
            return Err(invalid("interference_levels", "need at least one level".into()));
        }
        if let Some(s) = interference_levels.iter().find(|s| !s.is_finite()) {
            return Err(invalid("interference_levels", format!("non-finite level {s}")));
        }
        if interference_probs.len() != q {
            return Err(invalid(
                "interference_probs",
                format!("expected {q} probabilities, got {}", interference_probs.len()),
            ));
        }
        if let Some(r) = interference_probs.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(invalid("interference_probs", format!("probability {r} is not positive")));
        }
        let total: f64 = interference_probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(invalid("interference_probs", format!("probabilities sum to {total}, not 1")));
        }
        if !(noise_power.is_finite() && noise_power >= 0.0) {
            return Err(invalid("noise_power", format!("{noise_power} is not a nonnegative real")));
        }

        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&a, &b| interference_levels[a].total_cmp(&interference_levels[b]));
        let levels: Vec<f64> = order.iter().map(|&j| interference_levels[j]).collect();
        let probs: Vec<f64> = order.iter().map(|&j| interference_probs[j]).collect();
        if let Some(w) = levels.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid("interference_levels", format!("duplicate level {}", w[0])));
        }

        let size = (m as u128).checked_pow(q as u32).unwrap_or(u128::MAX);
        if size > MAX_DENSE_SYMBOLS as u128 {
            return Err(Error::AlphabetTooLarge { size, limit: MAX_DENSE_SYMBOLS });
        }

        Ok(Self {
            constellation,
            interference_levels: levels,
            interference_probs: probs,
            noise_power,
        })
    }

    /// Parses the TOML spec-file format:
    ///
    /// ```toml
    /// constellation = [-1.0, 1.0]
    /// interference_levels = [-1.0, 1.0]
    /// interference_probs = [0.5, 0.5]
    /// noise_power = 0.1
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(
            raw.constellation.ok_or_else(|| missing("constellation"))?,
            raw.interference_levels.ok_or_else(|| missing("interference_levels"))?,
            raw.interference_probs.ok_or_else(|| missing("interference_probs"))?,
            raw.noise_power.ok_or_else(|| missing("noise_power"))?,
        )
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("spec fields are plain floats")
    }

    pub fn m(&self) -> usize {
        self.constellation.len()
    }

    pub fn q(&self) -> usize {
        self.interference_levels.len()
    }

    /// `M^Q`, the size of the associated-channel input alphabet.
    pub fn num_symbols(&self) -> usize {
        self.m().pow(self.q() as u32)
    }

    pub fn constellation(&self) -> &[f64] {
        &self.constellation
    }

    pub fn interference_levels(&self) -> &[f64] {
        &self.interference_levels
    }

    pub fn interference_probs(&self) -> &[f64] {
        &self.interference_probs
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn sigma(&self) -> f64 {
        self.noise_power.sqrt()
    }

    /// `x_i` for a 1-based constellation index.
    pub fn point(&self, i: usize) -> f64 {
        self.constellation[i - 1]
    }

    /// `s_q` for a 1-based state index.
    pub fn level(&self, q: usize) -> f64 {
        self.interference_levels[q - 1]
    }

    pub fn with_noise_power(&self, noise_power: f64) -> Result<Self> {
        if !(noise_power.is_finite() && noise_power >= 0.0) {
            return Err(invalid("noise_power", format!("{noise_power} is not a nonnegative real")));
        }
        Ok(Self { noise_power, ..self.clone() })
    }

    /// Mean constellation energy under a uniform input, `(1/M) Σ x_i²`.
    pub fn signal_power(&self) -> f64 {
        self.constellation.iter().map(|x| x * x).sum::<f64>() / self.m() as f64
    }

    /// SNR in dB: uniform-input signal power over the noise power.
    /// Interference power does not enter.
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.signal_power() / self.noise_power).log10()
    }

    /// Copy of this spec with the noise power set to hit `snr_db`.
    pub fn with_snr_db(&self, snr_db: f64) -> Result<Self> {
        self.with_noise_power(self.signal_power() / 10f64.powf(snr_db / 10.0))
    }
}

fn invalid(key: &'static str, reason: String) -> Error {
    Error::InvalidSpec { key, reason }
}

fn missing(key: &'static str) -> Error {
    invalid(key, "missing key".into())
}

/// One input letter of the associated channel: `indices[q-1] = i_q` means
/// "send `x_{i_q}` when the interference is `s_q`".
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AssociatedSymbol {
    indices: Vec<usize>,
}

impl AssociatedSymbol {
    /// Builds a symbol from 1-based constellation indices, checking each is in `1..=m`.
    pub fn new(indices: Vec<usize>, m: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidCode("symbol has no components".into()));
        }
        if let Some(&i) = indices.iter().find(|&&i| i < 1 || i > m) {
            return Err(Error::IndexOutOfRange {
                what: "constellation index",
                value: i,
                range: format!("1..={m}"),
            });
        }
        Ok(Self { indices })
    }

    /// Inverse of [`AssociatedSymbol::rank`].
    pub fn from_rank(mut rank: usize, m: usize, q: usize) -> Self {
        let mut indices = vec![0; q];
        for slot in indices.iter_mut().rev() {
            *slot = rank % m + 1;
            rank /= m;
        }
        Self { indices }
    }

    /// Position in lexicographic order of `(i_1, …, i_Q)`, in `0..M^Q`.
    pub fn rank(&self, m: usize) -> usize {
        self.indices.iter().fold(0, |acc, &i| acc * m + (i - 1))
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// `i_q` for a 1-based state index.
    pub fn index(&self, q: usize) -> usize {
        self.indices[q - 1]
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Mean of the output for each state, `x_{i_q} + s_q`.
    pub fn output_means(&self, spec: &ChannelSpec) -> Vec<f64> {
        self.indices
            .iter()
            .zip(spec.interference_levels())
            .map(|(&i, s)| spec.point(i) + s)
            .collect()
    }
}

impl fmt::Display for AssociatedSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, ")")
    }
}

/// All `M^Q` associated symbols in lexicographic order.
pub fn enumerate_symbols(spec: &ChannelSpec) -> Vec<AssociatedSymbol> {
    let (m, q) = (spec.m(), spec.q());
    (0..spec.num_symbols())
        .map(|r| AssociatedSymbol::from_rank(r, m, q))
        .collect()
}

/// Dense pmf over the associated alphabet, indexed by symbol rank.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    m: usize,
    q: usize,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(m: usize, q: usize, probs: Vec<f64>) -> Result<Self> {
        let size = m.pow(q as u32);
        if probs.len() != size {
            return Err(Error::InvalidPmf(format!(
                "expected {size} entries, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidPmf(format!("entry {p} is negative or non-finite")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidPmf(format!("entries sum to {total}")));
        }
        Ok(Self { m, q, probs })
    }

    pub fn uniform(m: usize, q: usize) -> Self {
        let size = m.pow(q as u32);
        Self { m, q, probs: vec![1.0 / size as f64; size] }
    }

    pub fn point_mass(symbol: &AssociatedSymbol, m: usize) -> Self {
        Self::uniform_over(std::slice::from_ref(symbol), m)
    }

    /// Equal weight on each listed symbol (repeats accumulate).
    pub fn uniform_over(symbols: &[AssociatedSymbol], m: usize) -> Self {
        let q = symbols[0].len();
        let mut probs = vec![0.0; m.pow(q as u32)];
        let w = 1.0 / symbols.len() as f64;
        for s in symbols {
            probs[s.rank(m)] += w;
        }
        Self { m, q, probs }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, symbol: &AssociatedSymbol) -> f64 {
        self.probs[symbol.rank(self.m)]
    }

    /// Symbols carrying probability above [`SUPPORT_THRESHOLD`], in rank order.
    pub fn support(&self) -> Vec<AssociatedSymbol> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > SUPPORT_THRESHOLD)
            .map(|(r, _)| AssociatedSymbol::from_rank(r, self.m, self.q))
            .collect()
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > SUPPORT_THRESHOLD).count()
    }

    pub fn marginals(&self) -> MarginalSet {
        let (m, q) = (self.m, self.q);
        let mut rows = vec![vec![0.0; m]; q];
        for (r, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut rest = r;
            for row in rows.iter_mut().rev() {
                row[rest % m] += p;
                rest /= m;
            }
        }
        MarginalSet { rows }
    }
}

/// Distribution of `X_q` for each state `q`; `rows[q-1][i-1] = P(X_q = x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSet {
    rows: Vec<Vec<f64>>,
}

impl MarginalSet {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidPmf("no marginal rows".into()));
        }
        let m = rows[0].len();
        for (q, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidPmf(format!("row {} has length {}", q + 1, row.len())));
            }
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::InvalidPmf(format!("row {} has a negative entry", q + 1)));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > PMF_SUM_TOL {
                return Err(Error::InvalidPmf(format!("row {} sums to {total}", q + 1)));
            }
        }
        Ok(Self { rows })
    }

    pub fn uniform(m: usize, q: usize) -> Self {
        Self { rows: vec![vec![1.0 / m as f64; m]; q] }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn m(&self) -> usize {
        self.rows[0].len()
    }

    pub fn q(&self) -> usize {
        self.rows.len()
    }
}

/// Per-state marginals of `p`. Only the alphabet sizes of `spec` are used.
pub fn marginals_of(p: &JointPmf, spec: &ChannelSpec) -> MarginalSet {
    debug_assert_eq!((p.m(), p.q()), (spec.m(), spec.q()));
    p.marginals()
}

/// A deployable one-shot precoder: message `m` is sent as `symbols[m]`,
/// each message used with probability `1/M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecoderCode {
    symbols: Vec<AssociatedSymbol>,
}

impl PrecoderCode {
    /// Checks that there are exactly `M` pairwise-distinct symbols of length `Q`.
    pub fn new(symbols: Vec<AssociatedSymbol>, spec: &ChannelSpec) -> Result<Self> {
        if symbols.len() != spec.m() {
            return Err(Error::InvalidCode(format!(
                "expected {} symbols, got {}",
                spec.m(),
                symbols.len()
            )));
        }
        let code = Self::new_unchecked(symbols);
        code.check_shape(spec)?;
        let mut seen = HashSet::new();
        for s in &code.symbols {
            if !seen.insert(s) {
                return Err(Error::InvalidCode(format!("symbol {s} appears twice")));
            }
        }
        Ok(code)
    }

    /// Skips the count and distinctness checks. Degenerate codebooks are
    /// still usable by the simulator, e.g. to measure a collision floor.
    pub fn new_unchecked(symbols: Vec<AssociatedSymbol>) -> Self {
        Self { symbols }
    }

    fn check_shape(&self, spec: &ChannelSpec) -> Result<()> {
        for s in &self.symbols {
            if s.len() != spec.q() {
                return Err(Error::InvalidCode(format!(
                    "symbol {s} has {} components, expected {}",
                    s.len(),
                    spec.q()
                )));
            }
            AssociatedSymbol::new(s.indices.clone(), spec.m())?;
        }
        Ok(())
    }

    pub fn symbols(&self) -> &[AssociatedSymbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Uniform pmf over the code's symbols.
    pub fn pmf(&self, m: usize) -> JointPmf {
        JointPmf::uniform_over(&self.symbols, m)
    }

    /// Parses the text certificate: one line per message, `Q` whitespace- or
    /// comma-separated 1-based indices. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, spec: &ChannelSpec) -> Result<Self> {
        let mut symbols = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let indices = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<usize>().map_err(|_| {
                        Error::Parse(format!("line {}: `{t}` is not an index", lineno + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            symbols.push(AssociatedSymbol::new(indices, spec.m())?);
        }
        Self::new(symbols, spec)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.symbols {
            let line: Vec<String> = s.indices().iter().map(|i| i.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Channel input for `message` (0-based) when the interference is `s_{state}`
/// (1-based): `x_{i_state}` of the message's symbol.
pub fn precode(
    code: &PrecoderCode,
    message: usize,
    state: usize,
    spec: &ChannelSpec,
) -> Result<f64> {
    let symbol = code.symbols.get(message).ok_or_else(|| Error::IndexOutOfRange {
        what: "message",
        value: message,
        range: format!("0..{}", code.len()),
    })?;
    if state < 1 || state > symbol.len() {
        return Err(Error::IndexOutOfRange {
            what: "state index",
            value: state,
            range: format!("1..={}", symbol.len()),
        });
    }
    Ok(spec.point(symbol.index(state)))
}
