//! SC PHY frame assembly at symbol rate.
//!
//! Layout of one frame: `[STF | CEF | header | payload]`, `K` symbols total.
//!
//! * STF: sixteen copies of `a128` followed by `-a128` (2176 symbols).
//! * CEF: `[Gu Gv -b128]` (1152 symbols) with `Gu = [-b128 -a128 b128 -a128]`
//!   and `Gv = [-b128 a128 -b128 -a128]`. `Gu`/`Gv` form a length-512
//!   complementary pair whose 128-symbol tails match the STF tail, so the
//!   last STF block acts as a cyclic prefix for the CEF correlator.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::golay::{generate_golay_pair, GolayPair, GolaySeq};
use crate::seed::derive_seed;

pub const SHORT_LEN: usize = 128;
pub const STF_REPS: usize = 16;
pub const STF_LEN: usize = SHORT_LEN * (STF_REPS + 1);
pub const CEF_PAIR_LEN: usize = 512;
pub const CEF_LEN: usize = 2 * CEF_PAIR_LEN + SHORT_LEN;
pub const PREAMBLE_LEN: usize = STF_LEN + CEF_LEN;
/// Cyclic prefix length of the CEF correlator.
pub const N_CP: usize = SHORT_LEN;
pub const DEFAULT_HEADER_LEN: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLayout {
    pub k: usize,
    pub header_len: usize,
}

impl FrameLayout {
    pub fn new(k: usize, header_len: usize) -> Result<Self> {
        if k < PREAMBLE_LEN + header_len {
            return invalid(format!(
                "frame length {k} shorter than preamble ({PREAMBLE_LEN}) plus header ({header_len})"
            ));
        }
        Ok(Self { k, header_len })
    }

    pub fn stf_len(&self) -> usize {
        STF_LEN
    }

    pub fn cef_len(&self) -> usize {
        CEF_LEN
    }

    pub fn preamble_len(&self) -> usize {
        PREAMBLE_LEN
    }

    pub fn payload_len(&self) -> usize {
        self.k - PREAMBLE_LEN - self.header_len
    }

    /// Offset of the CEF within the frame.
    pub fn cef_start(&self) -> usize {
        STF_LEN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpiConfig {
    pub m: usize,
    pub k: usize,
    pub ts: f64,
}

impl CpiConfig {
    pub fn new(m: usize, k: usize, ts: f64) -> Result<Self> {
        if m == 0 {
            return invalid("a CPI needs at least one frame");
        }
        if !(ts > 0.0 && ts.is_finite()) {
            return invalid(format!("symbol period must be positive, got {ts}"));
        }
        Ok(Self { m, k, ts })
    }

    /// `T = M·K·Ts`.
    pub fn duration(&self) -> f64 {
        self.m as f64 * self.k as f64 * self.ts
    }

    /// Frame repetition interval `K·Ts`.
    pub fn frame_interval(&self) -> f64 {
        self.k as f64 * self.ts
    }

    pub fn total_symbols(&self) -> usize {
        self.m * self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    #[default]
    Bpsk,
    Qpsk,
}

impl Modulation {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match self {
            Modulation::Bpsk => Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0),
            Modulation::Qpsk => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let re = if rng.random::<bool>() { s } else { -s };
                let im = if rng.random::<bool>() { s } else { -s };
                Complex64::new(re, im)
            }
        }
    }
}

/// The fixed training part of every frame together with its correlator references.
#[derive(Debug, Clone)]
pub struct Preamble {
    short: GolayPair,
    cef_pair: GolayPair,
    rotated: bool,
    symbols: Vec<Complex64>,
}

impl Preamble {
    /// Preamble from the recursively generated length-128 pair.
    pub fn standard() -> Self {
        Self::from_short_pair(generate_golay_pair(SHORT_LEN).expect("128 is a power of two"), false)
            .expect("generated pair has the right length")
    }

    /// Builds the preamble from a length-128 pair (e.g. loaded from a file).
    /// `rotated` applies the π/2 rotation `s[n]·jⁿ` to every preamble symbol.
    pub fn from_short_pair(short: GolayPair, rotated: bool) -> Result<Self> {
        if short.len() != SHORT_LEN {
            return invalid(format!("preamble needs a length-{SHORT_LEN} pair, got {}", short.len()));
        }
        let (a, b) = (&short.a, &short.b);
        let (na, nb) = (a.negated(), b.negated());
        let gu = GolaySeq::concat(&[&nb, &na, b, &na]);
        let gv = GolaySeq::concat(&[&nb, a, &nb, &na]);
        let cef_pair = GolayPair::new(gu, gv)?;

        let mut raw: Vec<i8> = Vec::with_capacity(PREAMBLE_LEN);
        for _ in 0..STF_REPS {
            raw.extend_from_slice(a.values());
        }
        raw.extend_from_slice(na.values());
        raw.extend_from_slice(cef_pair.a.values());
        raw.extend_from_slice(cef_pair.b.values());
        raw.extend_from_slice(nb.values());
        let symbols = raw.iter().enumerate().map(|(n, &v)| rotate(Complex64::new(v as f64, 0.0), n, rotated)).collect();
        Ok(Self { short, cef_pair, rotated, symbols })
    }

    pub fn with_rotation(&self, rotated: bool) -> Self {
        Self::from_short_pair(self.short.clone(), rotated).expect("pair already validated")
    }

    pub fn rotated(&self) -> bool {
        self.rotated
    }

    pub fn short_pair(&self) -> &GolayPair {
        &self.short
    }

    /// The length-512 pair `(Gu, Gv)` carried by the CEF.
    pub fn cef_pair(&self) -> &GolayPair {
        &self.cef_pair
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn stf(&self) -> &[Complex64] {
        &self.symbols[..STF_LEN]
    }

    pub fn cef(&self) -> &[Complex64] {
        &self.symbols[STF_LEN..]
    }

    /// `a128` reference as transmitted (rotation included). Because 128 is a
    /// multiple of 4 the same reference matches every STF repetition.
    pub fn stf_reference(&self) -> Vec<Complex64> {
        self.symbols[..SHORT_LEN].to_vec()
    }

    /// `(Gu, Gv)` references as transmitted.
    pub fn cef_references(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let u = STF_LEN;
        (self.symbols[u..u + CEF_PAIR_LEN].to_vec(), self.symbols[u + CEF_PAIR_LEN..u + 2 * CEF_PAIR_LEN].to_vec())
    }
}

impl Default for Preamble {
    fn default() -> Self {
        Self::standard()
    }
}

fn rotate(s: Complex64, n: usize, on: bool) -> Complex64 {
    if !on {
        return s;
    }
    match n % 4 {
        0 => s,
        1 => Complex64::new(-s.im, s.re),
        2 => -s,
        _ => Complex64::new(s.im, -s.re),
    }
}

/// `[STF, CEF, header, payload]` with header and payload drawn from `rng`.
pub fn assemble_frame<R: Rng + ?Sized>(
    layout: &FrameLayout,
    preamble: &Preamble,
    modulation: Modulation,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let layout = FrameLayout::new(layout.k, layout.header_len)?;
    let mut out = Vec::with_capacity(layout.k);
    out.extend_from_slice(preamble.symbols());
    // The header is never decoded; unit-energy BPSK is enough.
    for _ in 0..layout.header_len {
        out.push(Modulation::Bpsk.draw(rng));
    }
    for _ in 0..layout.payload_len() {
        out.push(modulation.draw(rng));
    }
    Ok(out)
}

/// Transmitted symbols of a CPI, generated frame by frame on demand.
///
/// Frame `m` draws its header/payload from a stream seeded by `(seed, m)`, so
/// any window of the CPI can be produced without materializing `M·K` symbols.
#[derive(Debug, Clone)]
pub struct CpiSymbols {
    pub cfg: CpiConfig,
    pub layout: FrameLayout,
    pub preamble: Preamble,
    pub modulation: Modulation,
    pub seed: u64,
}

impl CpiSymbols {
    pub fn new(
        cfg: CpiConfig,
        layout: FrameLayout,
        preamble: Preamble,
        modulation: Modulation,
        seed: u64,
    ) -> Result<Self> {
        if cfg.k != layout.k {
            return invalid(format!("CPI frame length {} differs from layout {}", cfg.k, layout.k));
        }
        FrameLayout::new(layout.k, layout.header_len)?;
        Ok(Self { cfg, layout, preamble, modulation, seed })
    }

    pub fn frame(&self, m: usize) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[m as u64]));
        assemble_frame(&self.layout, &self.preamble, self.modulation, &mut rng)
            .expect("layout validated on construction")
    }

    /// Symbols `start..start+len` of the CPI; indices outside `0..M·K` are zero.
    pub fn window(&self, start: i64, len: usize) -> Vec<Complex64> {
        let total = self.cfg.total_symbols() as i64;
        let k = self.cfg.k as i64;
        let mut out = vec![Complex64::default(); len];
        let lo = start.max(0);
        let hi = (start + len as i64).min(total);
        let mut idx = lo;
        while idx < hi {
            let m = idx / k;
            let frame = self.frame(m as usize);
            let frame_end = ((m + 1) * k).min(hi);
            for g in idx..frame_end {
                out[(g - start) as usize] = frame[(g - m * k) as usize];
            }
            idx = frame_end;
        }
        out
    }
}

/// All `M·K` symbols of a CPI.
pub fn assemble_cpi(
    cfg: &CpiConfig,
    layout: &FrameLayout,
    preamble: &Preamble,
    modulation: Modulation,
    seed: u64,
) -> Result<Vec<Complex64>> {
    let src = CpiSymbols::new(*cfg, *layout, preamble.clone(), modulation, seed)?;
    let mut out = Vec::with_capacity(cfg.total_symbols());
    for m in 0..cfg.m {
        out.extend(src.frame(m));
    }
    Ok(out)
}
