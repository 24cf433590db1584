//! Exact sums of products of doubles, rounded once at the end.
//!
//! Every finite double is `m · 2^e` with `|m| < 2^53` and `e ≥ −1074`, so a
//! product is an integer multiple of `2^−2148`. Products are binned by
//! exponent in `i128` slots and spilled into a big integer before a slot can
//! overflow. The result is the correctly rounded value of the exact sum, so
//! it does not depend on the order of accumulation.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

const SCALE: i32 = 2 * 1074;
const SPILL_AT: i128 = 1 << 124;

#[derive(Debug, Clone, Default)]
pub struct ProductSum {
    slots: BTreeMap<i32, i128>,
    // in units of 2^-SCALE
    spill: BigInt,
}

fn decompose(x: f64) -> (i64, i32) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1 << 52) - 1)) as i64;
    let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | 1 << 52, exp - 1075) };
    (if x.is_sign_negative() { -m } else { m }, e)
}

fn pow2(e: i32) -> f64 {
    f64::from_bits(((e + 1023) as u64) << 52)
}

// x · 2^e; exact whenever the result is representable
fn ldexp(mut x: f64, mut e: i32) -> f64 {
    while e > 1000 {
        x *= pow2(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= pow2(-1000);
        e += 1000;
    }
    x * pow2(e)
}

// nearest double to n · 2^-scale, ties to even
fn round_scaled(n: &BigInt, scale: i32) -> f64 {
    if n.is_zero() {
        return 0.0;
    }
    let mag = n.magnitude();
    let bits = mag.bits() as i64;
    let shift = (bits - 53).max(scale as i64 - 1074).max(0);
    let q = if shift == 0 {
        mag.to_u64().expect("at most 53 bits")
    } else {
        let q = mag >> shift as usize;
        let rem = mag - (&q << shift as usize);
        let half = num_bigint::BigUint::from(1u8) << (shift - 1) as usize;
        let mut q = q.to_u64().expect("at most 54 bits");
        if rem > half || (rem == half && q & 1 == 1) {
            q += 1;
        }
        q
    };
    let v = ldexp(q as f64, (shift - scale as i64).clamp(-5000, 5000) as i32);
    if n.is_negative() {
        -v
    } else {
        v
    }
}

impl ProductSum {
    pub fn new() -> Self {
        Self::default()
    }

    fn add_scaled(&mut self, m: i128, e: i32) {
        let slot = self.slots.entry(e).or_insert(0);
        *slot += m;
        if slot.abs() >= SPILL_AT {
            let v = std::mem::take(slot);
            self.spill += BigInt::from(v) << (e + SCALE) as usize;
        }
    }

    /// Adds `a · b` exactly. Both factors must be finite.
    pub fn add_product(&mut self, a: f64, b: f64) {
        debug_assert!(a.is_finite() && b.is_finite());
        if a == 0.0 || b == 0.0 {
            return;
        }
        let ((ma, ea), (mb, eb)) = (decompose(a), decompose(b));
        self.add_scaled(ma as i128 * mb as i128, ea + eb);
    }

    pub fn add(&mut self, x: f64) {
        self.add_product(x, 1.0);
    }

    pub fn merge(&mut self, other: ProductSum) {
        for (e, m) in other.slots {
            self.add_scaled(m, e);
        }
        self.spill += other.spill;
    }

    /// The exact sum, rounded to nearest.
    pub fn value(&self) -> f64 {
        let mut total = self.spill.clone();
        for (&e, &m) in &self.slots {
            if m != 0 {
                total += BigInt::from(m) << (e + SCALE) as usize;
            }
        }
        round_scaled(&total, SCALE)
    }
}
