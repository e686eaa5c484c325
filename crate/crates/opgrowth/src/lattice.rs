//! Bit-packed site configurations in fixed-charge sectors.

use crate::error::{Error, Result};
use crate::stream::RngStream;
use rand::Rng;

const WORD_BITS: usize = 64;

/// An `N`-site configuration of empty/occupied two-level sites, packed into
/// machine words so that `N = 20000` is cheap to copy and evolve.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitState {
    words: Vec<u64>,
    n_sites: usize,
}

impl BitState {
    pub fn zeros(n_sites: usize) -> Self {
        assert!(n_sites > 0, "n_sites must be positive");
        BitState {
            words: vec![0; n_sites.div_ceil(WORD_BITS)],
            n_sites,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = BitState::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.set(i, true);
            }
        }
        s
    }

    /// Parse e.g. "0110"; site 0 is the leftmost character.
    pub fn from_str_bits(s: &str) -> Self {
        BitState::from_bits(&s.chars().map(|c| c == '1').collect::<Vec<_>>())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.n_sites);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.n_sites);
        let mask = 1u64 << (i % WORD_BITS);
        if v {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.n_sites);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    /// Number of occupied sites.
    pub fn charge(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of sites at which `self` and `other` differ.
    pub fn hamming(&self, other: &BitState) -> usize {
        debug_assert_eq!(self.n_sites, other.n_sites);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Iterator over sites at which `self` and `other` differ.
    pub fn diff_sites<'a>(&'a self, other: &'a BitState) -> impl Iterator<Item = usize> + 'a {
        self.words
            .iter()
            .zip(&other.words)
            .enumerate()
            .flat_map(|(w, (a, b))| {
                let mut x = a ^ b;
                std::iter::from_fn(move || {
                    if x == 0 {
                        None
                    } else {
                        let bit = x.trailing_zeros() as usize;
                        x &= x - 1;
                        Some(w * WORD_BITS + bit)
                    }
                })
            })
    }

    /// Pack into a u64 bitmask (small systems only).
    pub fn to_mask(&self) -> u64 {
        assert!(self.n_sites <= 64);
        self.words[0]
    }
}

/// The subspace of states with a fixed number of occupied sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChargeSector {
    pub n_sites: usize,
    pub n_up: usize,
    pub convention: FillingConvention,
}

/// Which fraction the reported density n̄ refers to. All-to-all experiments
/// report the up fraction; chain experiments report the down fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FillingConvention {
    UpFraction,
    DownFraction,
}

impl ChargeSector {
    pub fn new(n_sites: usize, n_up: usize, convention: FillingConvention) -> Result<Self> {
        if n_up > n_sites || n_sites == 0 {
            return Err(Error::ChargeOutOfRange { n_up, n_sites });
        }
        Ok(ChargeSector { n_sites, n_up, convention })
    }

    /// Reported density under this sector's filling convention.
    pub fn density(&self) -> f64 {
        match self.convention {
            FillingConvention::UpFraction => self.n_up as f64 / self.n_sites as f64,
            FillingConvention::DownFraction => {
                (self.n_sites - self.n_up) as f64 / self.n_sites as f64
            }
        }
    }
}

/// log C(n_sites, n_up), exact for small arguments and overflow-free for
/// large ones (C(20000, 2000) fits in no fixed-width integer).
pub fn sector_dimension(n_sites: usize, n_up: usize) -> Result<f64> {
    if n_up > n_sites {
        return Err(Error::ChargeOutOfRange { n_up, n_sites });
    }
    let ln_gamma = statrs::function::gamma::ln_gamma;
    Ok(ln_gamma(n_sites as f64 + 1.0)
        - ln_gamma(n_up as f64 + 1.0)
        - ln_gamma((n_sites - n_up) as f64 + 1.0))
}

/// Uniform draw over all C(N, N_up) configurations: Fisher-Yates shuffle of a
/// template with n_up leading ones.
pub fn sample_sector_state(sector: &ChargeSector, stream: &RngStream) -> BitState {
    let mut rng = stream.rng();
    sample_sector_state_rng(sector, &mut rng)
}

pub fn sample_sector_state_rng(sector: &ChargeSector, rng: &mut impl Rng) -> BitState {
    let n = sector.n_sites;
    let mut sites: Vec<u32> = (0..n as u32).collect();
    // Partial Fisher-Yates: after n_up swaps the prefix is a uniform
    // n_up-subset of sites.
    let mut state = BitState::zeros(n);
    for i in 0..sector.n_up {
        let j = rng.gen_range(i..n);
        sites.swap(i, j);
        state.set(sites[i] as usize, true);
    }
    state
}

/// Toggle one site; the charge changes by exactly one.
pub fn flip_bit(state: &BitState, i: usize) -> Result<BitState> {
    if i >= state.n_sites {
        return Err(Error::SiteOutOfRange { index: i, n_sites: state.n_sites });
    }
    let mut out = state.clone();
    out.toggle(i);
    Ok(out)
}
