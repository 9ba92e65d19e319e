#![allow(dead_code)]

use std::path::PathBuf;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

use fixsim::fxcore::{adjust, full_multiply, AdjustMethod, FxFormat, FxWord, RngStream, RoundingMethod};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn lenet_manifest() -> PathBuf {
    repo_root().join("models/lenet5/manifest.json")
}

/// MNIST directory from FIXSIM_DATA_DIR or `<repo>/data/mnist`, if present.
pub fn mnist_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("FIXSIM_DATA_DIR").map(PathBuf::from).unwrap_or_else(|| repo_root().join("data/mnist"));
    let ok = ["t10k-images-idx3-ubyte", "t10k-images"].iter().any(|f| dir.join(f).exists());
    ok.then_some(dir)
}

fn pow2(k: u32) -> BigInt {
    BigInt::one() << k as usize
}

/// Independent model of `adjust(full_multiply(a, b))` in exact rationals.
///
/// The product `a * b` is divided by `2^shift` (Norm), rounded onto the
/// `2^-FR` grid by the method's definition on real numbers, then reduced to
/// N bits: modulo `2^N` for NBC, clamped otherwise.
pub fn oracle(a: i64, b: i64, fmt: FxFormat, rounding: RoundingMethod, method: AdjustMethod) -> i64 {
    let fr = fmt.frac_bits();
    let n = fmt.total_bits();
    let shift = match method {
        AdjustMethod::Norm { shift } => shift,
        _ => 0,
    };
    // Value of the product in units of the target grid.
    let q = BigRational::new(BigInt::from(a) * BigInt::from(b), pow2(fr + shift));
    let floor = q.floor();
    let excess = &q - &floor;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let floor_int = floor.to_integer();
    let up = match rounding {
        RoundingMethod::Truncate => false,
        RoundingMethod::RoundToNearest => excess >= half,
        RoundingMethod::Rom => excess >= half && (&floor_int % BigInt::from(2)).is_zero(),
        RoundingMethod::Stochastic => unreachable!("no deterministic oracle"),
    };
    let r = if up { floor_int + 1 } else { floor_int };
    let modulus = pow2(n);
    let max = pow2(n - 1) - 1;
    let min = -pow2(n - 1);
    let out = match method {
        AdjustMethod::Nbc => {
            let m = ((r % &modulus) + &modulus) % &modulus;
            if m > max {
                m - modulus
            } else {
                m
            }
        }
        _ => {
            if r > max {
                max
            } else if r < min {
                min
            } else {
                r
            }
        }
    };
    out.to_i64().expect("fits")
}

/// Run the exhaustive comparison for one width. Returns (cases, mismatches).
pub fn exhaustive(n: u32) -> (u64, u64) {
    let fmt = FxFormat::half_split(n).unwrap();
    let methods: Vec<AdjustMethod> = [AdjustMethod::Nbc, AdjustMethod::Bc]
        .into_iter()
        .chain((0..=4).map(|shift| AdjustMethod::Norm { shift }))
        .collect();
    let roundings = [RoundingMethod::Truncate, RoundingMethod::RoundToNearest, RoundingMethod::Rom];
    let mut rng = RngStream::new(0);
    let (mut cases, mut bad) = (0u64, 0u64);
    for a in fmt.min_raw()..=fmt.max_raw() {
        for b in fmt.min_raw()..=fmt.max_raw() {
            let p = full_multiply(FxWord::from_raw(a, fmt).unwrap(), FxWord::from_raw(b, fmt).unwrap()).unwrap();
            for &r in &roundings {
                for &m in &methods {
                    let got = adjust(p, fmt, r, m, &mut rng).unwrap().raw();
                    cases += 1;
                    if got != oracle(a, b, fmt, r, m) {
                        bad += 1;
                    }
                }
            }
        }
    }
    (cases, bad)
}
