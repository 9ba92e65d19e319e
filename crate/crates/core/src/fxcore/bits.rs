//! Raw two's-complement kernels shared by the typed API and the MAC datapaths.
//!
//! Every function here works on the raw integer of a word; the binary point is
//! tracked by the caller. Widths are in bits and must be in `1..=127`.

use super::{RngStream, RoundingMethod};

#[inline]
pub fn min_of(bits: u32) -> i128 {
    -(1i128 << (bits - 1))
}

#[inline]
pub fn max_of(bits: u32) -> i128 {
    (1i128 << (bits - 1)) - 1
}

#[inline]
pub fn fits(raw: i128, bits: u32) -> bool {
    raw >= min_of(bits) && raw <= max_of(bits)
}

/// Keep the low `bits` bits and reinterpret them as signed.
#[inline]
pub fn wrap(raw: i128, bits: u32) -> i128 {
    let unused = 128 - bits;
    (raw << unused) >> unused
}

#[inline]
pub fn saturate(raw: i128, bits: u32) -> i128 {
    raw.clamp(min_of(bits), max_of(bits))
}

/// Drop the `k` least significant bits of `raw`, rounding per `method`.
///
/// Truncation is an arithmetic shift (floor toward minus infinity). With
/// `floor = raw >> k` and `excess = raw mod 2^k`:
///
/// * round-to-nearest adds one when `excess >= 2^(k-1)` (ties go up);
/// * ROM rounding behaves like round-to-nearest when `floor` is even and like
///   truncation when `floor` is odd;
/// * stochastic rounding draws `r` uniform in `[0, 2^k)` and adds one when
///   `r < excess`. It draws on every call with `k > 0`, whatever the excess.
///
/// `k` must be at most 126. The result may exceed the source width by one
/// carry bit.
#[inline]
pub fn round_off(raw: i128, k: u32, method: RoundingMethod, rng: &mut RngStream) -> i128 {
    if k == 0 {
        return raw;
    }
    debug_assert!(k <= 126, "cannot drop {k} bits");
    let floor = raw >> k;
    let excess = raw & ((1i128 << k) - 1);
    let half = 1i128 << (k - 1);
    let up = match method {
        RoundingMethod::Truncate => false,
        RoundingMethod::RoundToNearest => excess >= half,
        RoundingMethod::Rom => floor & 1 == 0 && excess >= half,
        RoundingMethod::Stochastic => rng.bits(k) < excess as u128,
    };
    floor + up as i128
}

/// Move the binary point: `k > 0` drops `k` bits with rounding, `k <= 0`
/// shifts left by `-k`, exactly. Left shifts that would leave the `i128`
/// range clamp to it; callers saturate to their own width afterwards.
#[inline]
pub fn rescale(raw: i128, k: i32, method: RoundingMethod, rng: &mut RngStream) -> i128 {
    if k >= 0 {
        round_off(raw, k as u32, method, rng)
    } else {
        let s = k.unsigned_abs();
        if s >= 126 || raw.unsigned_abs() >= (1u128 << (126 - s)) {
            if raw == 0 {
                0
            } else if raw > 0 {
                i128::MAX >> 1
            } else {
                i128::MIN >> 1
            }
        } else {
            raw << s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rng() -> RngStream {
        RngStream::new(1)
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap(900, 8), -124);
        assert_eq!(wrap(127, 8), 127);
        assert_eq!(wrap(128, 8), -128);
        assert_eq!(wrap(-129, 8), 127);
        assert_eq!(wrap(-1, 8), -1);
    }

    #[test]
    fn saturate_examples() {
        assert_eq!(saturate(900, 8), 127);
        assert_eq!(saturate(-900, 8), -128);
        assert_eq!(saturate(5, 8), 5);
    }

    #[test]
    fn round_off_examples() {
        let mut r = rng();
        // 33/256 -> FR 4: excess 1/256 < half step.
        assert_eq!(round_off(33, 4, RoundingMethod::RoundToNearest, &mut r), 2);
        // 40/256: excess exactly half a step, ties go up.
        assert_eq!(round_off(40, 4, RoundingMethod::RoundToNearest, &mut r), 3);
        // 58/256: floor 3 is odd, ROM keeps it; RN goes to 4.
        assert_eq!(round_off(58, 4, RoundingMethod::Rom, &mut r), 3);
        assert_eq!(round_off(58, 4, RoundingMethod::RoundToNearest, &mut r), 4);
        // Floor toward minus infinity for negatives.
        assert_eq!(round_off(-1, 4, RoundingMethod::Truncate, &mut r), -1);
        assert_eq!(round_off(-17, 4, RoundingMethod::Truncate, &mut r), -2);
        assert_eq!(round_off(-24, 4, RoundingMethod::RoundToNearest, &mut r), -1);
    }

    #[test]
    fn rescale_left_is_exact() {
        let mut r = rng();
        assert_eq!(rescale(3, -2, RoundingMethod::Truncate, &mut r), 12);
        assert_eq!(rescale(-3, -2, RoundingMethod::Truncate, &mut r), -12);
        assert_eq!(rescale(0, -130, RoundingMethod::Truncate, &mut r), 0);
        assert!(rescale(1, -130, RoundingMethod::Truncate, &mut r) > 0);
    }

    proptest! {
        #[test]
        fn truncation_bound(raw in -(1i128 << 60)..(1i128 << 60), k in 1u32..40) {
            let t = round_off(raw, k, RoundingMethod::Truncate, &mut rng());
            let diff = raw - (t << k);
            prop_assert!(diff >= 0 && diff < (1i128 << k));
        }

        #[test]
        fn nearest_is_within_half_step(raw in -(1i128 << 60)..(1i128 << 60), k in 1u32..40) {
            let n = round_off(raw, k, RoundingMethod::RoundToNearest, &mut rng());
            let err = (n << k) - raw;
            // |err| <= half a step, and exact ties resolve upward.
            prop_assert!(err.abs() <= 1i128 << (k - 1));
            if err.abs() == 1i128 << (k - 1) {
                prop_assert!(err > 0);
            }
        }

        #[test]
        fn rom_couples_to_rn_and_trunc(raw in -(1i128 << 60)..(1i128 << 60), k in 1u32..40) {
            let mut r = rng();
            let t = round_off(raw, k, RoundingMethod::Truncate, &mut r);
            let n = round_off(raw, k, RoundingMethod::RoundToNearest, &mut r);
            let m = round_off(raw, k, RoundingMethod::Rom, &mut r);
            if t & 1 == 0 { prop_assert_eq!(m, n); } else { prop_assert_eq!(m, t); }
        }

        #[test]
        fn stochastic_picks_a_neighbour(raw in -(1i128 << 60)..(1i128 << 60), k in 1u32..40, seed in any::<u64>()) {
            let s = round_off(raw, k, RoundingMethod::Stochastic, &mut RngStream::new(seed));
            let t = raw >> k;
            prop_assert!(s == t || s == t + 1);
            if raw & ((1i128 << k) - 1) == 0 { prop_assert_eq!(s, t); }
        }

        #[test]
        fn wrap_is_congruent(raw in any::<i64>(), bits in 2u32..40) {
            let w = wrap(raw as i128, bits);
            prop_assert!(fits(w, bits));
            prop_assert_eq!((raw as i128 - w).rem_euclid(1i128 << bits), 0);
        }
    }
}
