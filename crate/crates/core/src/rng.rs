//! Seeded random substreams.
//!
//! Every random draw in a run descends from the scenario seed. Each
//! consumer (a mote's chip noise, the carrier noise, ...) asks for its own
//! [`Substream`], so adding a mote never shifts another mote's noise.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Labels of the independent noise sources in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    CarrierWhite,
    CarrierFlicker,
    ChipWhite(usize),
    ChipFlicker(usize),
    Autozero(usize),
    Custom(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::CarrierWhite => 1,
            Stream::CarrierFlicker => 2,
            Stream::ChipWhite(i) => 0x100 + 3 * i as u64,
            Stream::ChipFlicker(i) => 0x101 + 3 * i as u64,
            Stream::Autozero(i) => 0x102 + 3 * i as u64,
            Stream::Custom(k) => 0x1_0000_0000 + k,
        }
    }
}

/// One deterministic generator derived from `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct Substream {
    rng: ChaCha8Rng,
}

impl Substream {
    pub fn new(seed: u64, stream: Stream) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream.id());
        Substream { rng }
    }

    /// Standard normal draw.
    pub fn gaussian(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Fills `out` with independent `N(0, sigma²)` draws.
    pub fn fill_gaussian(&mut self, out: &mut [f64], sigma: f64) {
        for x in out {
            *x = sigma * self.gaussian();
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let mut a = Substream::new(7, Stream::ChipWhite(0));
        let mut b = Substream::new(7, Stream::ChipWhite(0));
        for _ in 0..100 {
            assert_eq!(a.gaussian().to_bits(), b.gaussian().to_bits());
        }
    }

    #[test]
    fn substreams_are_uncorrelated() {
        let n = 100_000;
        let mut a = Substream::new(7, Stream::ChipWhite(0));
        let mut b = Substream::new(7, Stream::ChipWhite(1));
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let (x, y) = (a.gaussian(), b.gaussian());
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        let rho = sab / (saa * sbb).sqrt();
        assert!(rho.abs() < 0.05, "{rho}");
    }
}
