//! 64-bit FNV-1a, used for compact trace digests so that determinism can be
//! asserted on runs too long to record in full.

use crate::dyadic::Dyadic;

pub(crate) struct Fnv64(u64);

impl Fnv64 {
    pub fn new() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub fn write_dyadic(&mut self, d: &Dyadic) {
        self.write(&d.mantissa().to_bytes_le());
        self.write_u64(d.scale());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}
