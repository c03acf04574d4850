//! Monte Carlo validation of a one-shot precoder over `Y = X + S + N`.
//!
//! Trial `k` draws from its own ChaCha8 stream (`key = f(seed)`, `stream = k`),
//! so a report depends only on `(seed, trials)`; trials are processed in
//! fixed-size chunks whose partial sums are merged in chunk order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::erf::erfc_inv;

use crate::entropy::Mixture;
use crate::error::{Error, Result};
use crate::model::{precode, ChannelSpec, PrecoderCode};
use crate::noisefree::{decode_noiseless, ZeroErrorCode};
use crate::numfmt;

const CHUNK: usize = 4096;

/// Header matching [`SimReport::csv_row`].
pub const SIM_CSV_HEADER: &str = "seed,trials,snr_db,ser,empirical_mi_bits";

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub trials: u64,
    pub symbol_errors: u64,
    pub ser: f64,
    /// `log2 M` minus the mean entropy of the exact message posterior.
    pub empirical_mi_bits: f64,
    pub seed: u64,
    pub snr_db: f64,
}

impl SimReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.seed,
            self.trials,
            numfmt::sig(self.snr_db, 12),
            numfmt::sig(self.ser, 12),
            numfmt::sig(self.empirical_mi_bits, 12)
        )
    }
}

/// Standard normal quantile.
pub fn normal_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

/// Uniform draw on the open interval `(0, 1)` from 53 random bits.
fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Sum {
    total: f64,
    comp: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.total + x;
        if self.total.abs() >= x.abs() {
            self.comp += (self.total - t) + x;
        } else {
            self.comp += (x - t) + self.total;
        }
        self.total = t;
    }

    fn value(&self) -> f64 {
        self.total + self.comp
    }
}

struct Decoder {
    mixtures: Vec<Mixture>,
}

impl Decoder {
    fn new(code: &PrecoderCode, spec: &ChannelSpec) -> Result<Self> {
        let mixtures = code
            .symbols()
            .iter()
            .map(|t| Mixture::for_symbol(t, spec))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { mixtures })
    }

    /// ML message (smallest index on ties) and the posterior entropy in bits.
    fn decide(&self, y: f64) -> (usize, f64) {
        let ll: Vec<f64> = self.mixtures.iter().map(|m| m.ln_pdf(y)).collect();
        let mut best = 0;
        for (k, &v) in ll.iter().enumerate() {
            if v > ll[best] {
                best = k;
            }
        }
        let top = ll[best];
        let z: f64 = ll.iter().map(|v| (v - top).exp()).sum();
        let ln_z = z.ln();
        let h: f64 = ll
            .iter()
            .map(|v| {
                let lp = v - top - ln_z;
                if lp.is_finite() {
                    -lp.exp() * lp
                } else {
                    0.0
                }
            })
            .sum();
        (best, h / std::f64::consts::LN_2)
    }
}

/// `argmax_m f_{Y|T}(y | code[m])`, ties to the smallest message index.
pub fn decode(y: f64, code: &PrecoderCode, spec: &ChannelSpec) -> Result<usize> {
    Ok(Decoder::new(code, spec)?.decide(y).0)
}

/// Runs `trials` independent uses of the channel on the current rayon pool.
pub fn simulate(code: &PrecoderCode, spec: &ChannelSpec, trials: u64, seed: u64) -> Result<SimReport> {
    if trials == 0 {
        return Err(Error::InvalidCode("need at least one trial".into()));
    }
    if spec.noise_power() <= 0.0 {
        return Err(Error::DegenerateNoise);
    }
    if code.is_empty() {
        return Err(Error::InvalidCode("empty code".into()));
    }
    for s in code.symbols() {
        if s.len() != spec.q() || s.indices().iter().any(|&i| i < 1 || i > spec.m()) {
            return Err(Error::InvalidCode(format!("symbol {s} does not fit the spec")));
        }
    }
    let decoder = Decoder::new(code, spec)?;
    let key = ChaCha8Rng::seed_from_u64(seed).get_seed();
    let sigma = spec.sigma();
    let messages = code.len();
    let cum: Vec<f64> = spec
        .interference_probs()
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect();

    let chunks = trials.div_ceil(CHUNK as u64);
    let partials: Vec<(u64, Sum)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK as u64;
            let end = (start + CHUNK as u64).min(trials);
            let mut errors = 0u64;
            let mut h = Sum::default();
            for trial in start..end {
                let mut rng = ChaCha8Rng::from_seed(key);
                rng.set_stream(trial);
                let message = rng.random_range(0..messages);
                let u = open_unit(&mut rng);
                let state = cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1) + 1;
                let z = normal_quantile(open_unit(&mut rng));
                let x = precode(code, message, state, spec).expect("validated above");
                let y = x + spec.level(state) + sigma * z;
                let (guess, hpost) = decoder.decide(y);
                if guess != message {
                    errors += 1;
                }
                h.add(hpost);
            }
            (errors, h)
        })
        .collect();

    let mut symbol_errors = 0;
    let mut h = Sum::default();
    for (e, part) in partials {
        symbol_errors += e;
        h.add(part.total);
        h.add(part.comp);
    }
    let mean_h = h.value() / trials as f64;
    Ok(SimReport {
        trials,
        symbol_errors,
        ser: symbol_errors as f64 / trials as f64,
        empirical_mi_bits: (messages as f64).log2() - mean_h,
        seed,
        snr_db: spec.snr_db(),
    })
}

/// Noise-free check over every `(message, state)` pair by table lookup.
/// Returns the number of pairs that decode to the wrong message.
pub fn noiseless_error_count(code: &ZeroErrorCode, spec: &ChannelSpec) -> usize {
    let mut errors = 0;
    for message in 0..code.code.len() {
        for state in 1..=spec.q() {
            let x = precode(&code.code, message, state, spec).expect("code fits spec");
            if decode_noiseless(x + spec.level(state), code) != Some(message) {
                errors += 1;
            }
        }
    }
    errors
}
