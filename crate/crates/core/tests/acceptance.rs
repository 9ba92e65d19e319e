//! Acceptance runner. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero when any criterion fails.

mod common;

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use fixsim::engine::{Arithmetic, FxConfig, MacPosition};
use fixsim::fxcore::{quantize, round_excess, AdjustMethod, FxFormat, RngStream, RoundingMethod, WideFormat, WideWord};
use fixsim::harness::{sweep, write_csv, EvalResult, Experiment, SweepGrid};
use fixsim::hwcost::{self, Platform, Scope};
use fixsim::model_io::{load_manifest, load_mnist, Split};

use AdjustMethod::{Bc, Nbc};
use MacPosition::{Rmac, Rmult};
use RoundingMethod::{RoundToNearest as Rn, Stochastic as Sr, Truncate as Trunc};

const NORM: AdjustMethod = AdjustMethod::Norm { shift: 0 };

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

struct Evals {
    exp: Experiment,
    cache: HashMap<String, EvalResult>,
}

impl Evals {
    fn load() -> Result<Self, String> {
        let dir = common::mnist_dir().ok_or("MNIST not found; run scripts/fetch_mnist.sh or set FIXSIM_DATA_DIR")?;
        let model = load_manifest(common::lenet_manifest()).map_err(|e| e.to_string())?;
        let test = load_mnist(&dir, Split::Test).map_err(|e| e.to_string())?;
        let train = load_mnist(&dir, Split::Train).ok();
        let exp = Experiment::new(model, test, train).map_err(|e| e.to_string())?;
        Ok(Self { exp, cache: HashMap::new() })
    }

    /// Accuracy in percentage points over the whole test set.
    fn acc(&mut self, a: &Arithmetic) -> Result<f64, String> {
        let key = match a {
            Arithmetic::Real => "real".to_string(),
            Arithmetic::Fixed(c) => format!("{c}"),
        };
        if let Some(r) = self.cache.get(&key) {
            return Ok(100.0 * r.accuracy);
        }
        let r = self.exp.run_eval(a, None).map_err(|e| e.to_string())?;
        let acc = 100.0 * r.accuracy;
        self.cache.insert(key, r);
        Ok(acc)
    }

    fn fixed(&mut self, n: u32, r: RoundingMethod, m: AdjustMethod, p: MacPosition) -> Result<f64, String> {
        self.acc(&Arithmetic::Fixed(cfg(n, r, m, p)))
    }
}

fn cfg(n: u32, r: RoundingMethod, m: AdjustMethod, p: MacPosition) -> FxConfig {
    FxConfig::new(FxFormat::half_split(n).unwrap(), r, m, p)
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn oracle_equivalence() -> Verdict {
    let t = Instant::now();
    let (mut cases, mut bad) = (0, 0);
    for n in 4..=6 {
        let (c, b) = common::exhaustive(n);
        cases += c;
        bad += b;
    }
    let secs = t.elapsed().as_secs_f64();
    check(bad == 0 && secs < 120.0, format!("{cases} cases, {bad} mismatches, {secs:.1}s"))
}

/// Mean of `m` draws must sit within 4 standard errors of `exact`, where a
/// single draw is `lo` or `lo + eps` with probability `p` of the upper value.
fn within_4se(mean: f64, exact: f64, eps: f64, p: f64, m: usize) -> bool {
    let se = eps * (p * (1.0 - p) / m as f64).sqrt();
    (mean - exact).abs() <= 4.0 * se + 1e-12
}

fn sr_unbiased() -> Verdict {
    const DRAWS: usize = 100_000;
    let t = Instant::now();
    let mut gen = RngStream::new(2024);
    let mut failures = Vec::new();
    for case in 0..100u64 {
        let n = 4 + gen.bits(4) as u32 % 13; // 4..=16
        let fmt = FxFormat::new(n, 1 + gen.bits(8) as u32 % n).unwrap();
        // A value strictly inside the range so saturation never engages.
        let span = fmt.max_value() - fmt.min_value() - 2.0 * fmt.epsilon();
        let x = fmt.min_value() + fmt.epsilon() + gen.unit() * span;
        let lo = (x / fmt.epsilon()).floor() * fmt.epsilon();
        let p = (x - lo) / fmt.epsilon();
        let mut rng = RngStream::derive(7, case);
        let sum: f64 = (0..DRAWS).map(|_| quantize(x, fmt, Sr, &mut rng).unwrap().value()).sum();
        if !within_4se(sum / DRAWS as f64, x, fmt.epsilon(), p, DRAWS) {
            failures.push(format!("quantize {x} in {fmt}"));
        }

        // The same property for the word-level rounding used inside the MAC.
        let k = 1 + gen.bits(4) as u32 % 12;
        let wide = WideFormat::new(12, 8 + k).unwrap();
        let raw = gen.bits(20) as i128 - (1 << 19);
        let w = WideWord::from_raw(raw, wide).unwrap();
        let exact = raw as f64 / (k as f64).exp2();
        let p = exact - exact.floor();
        let sum: f64 = (0..DRAWS).map(|_| round_excess(w, 8, Sr, &mut rng).unwrap().raw() as f64).sum();
        if !within_4se(sum / DRAWS as f64, exact, 1.0, p, DRAWS) {
            failures.push(format!("round_excess raw {raw} by {k} bits"));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        failures.is_empty() && secs < 60.0,
        format!("200 cases x {DRAWS} draws, {} outside 4 SE, {secs:.1}s {failures:?}", failures.len()),
    )
}

fn float_parity(ev: &mut Evals) -> Result<Verdict, String> {
    let real = ev.acc(&Arithmetic::Real)?;
    let mut worst: (f64, String) = (0.0, String::new());
    for r in RoundingMethod::ALL {
        for m in [Nbc, Bc, NORM] {
            for p in MacPosition::ALL {
                let a = ev.fixed(16, r, m, p)?;
                if (a - real).abs() >= worst.0 {
                    worst = ((a - real).abs(), cfg(16, r, m, p).to_string());
                }
            }
        }
    }
    Ok(check(worst.0 <= 0.5, format!("real {real:.2}%, 24 configs, worst gap {:.2} points at {}", worst.0, worst.1)))
}

fn truncation_collapse(ev: &mut Evals) -> Result<Verdict, String> {
    let nbc = ev.fixed(4, Trunc, Nbc, Rmult)?;
    let bc = ev.fixed(4, Trunc, Bc, Rmult)?;
    Ok(check(nbc <= 20.0 && bc <= 20.0, format!("NBC {nbc:.2}%, BC {bc:.2}% (limit 20%)")))
}

fn rounding_uplift(ev: &mut Evals) -> Result<Verdict, String> {
    let mut detail = Vec::new();
    let mut ok = true;
    for (p, need) in [(Rmac, 10.0), (Rmult, 40.0)] {
        let mut best = (f64::NEG_INFINITY, Nbc);
        for m in [Nbc, Bc, NORM] {
            let gain = ev.fixed(4, Rn, m, p)? - ev.fixed(4, Trunc, m, p)?;
            if gain > best.0 {
                best = (gain, m);
            }
        }
        ok &= best.0 >= need;
        detail.push(format!("{}: best {:+.2} points with {} (need {need:+})", p.label(), best.0, best.1));
    }
    Ok(check(ok, detail.join("; ")))
}

fn norm_near_float(ev: &mut Evals) -> Result<Verdict, String> {
    let real = ev.acc(&Arithmetic::Real)?;
    let norm = ev.fixed(4, Rn, NORM, Rmac)?;
    Ok(check(real - norm <= 3.0, format!("real {real:.2}%, Norm RN RMAC 4-bit {norm:.2}%")))
}

fn overflow_ablation(ev: &mut Evals) -> Result<Verdict, String> {
    let with = ev.fixed(4, Rn, NORM, Rmac)?;
    let without = ev.acc(&Arithmetic::Fixed(cfg(4, Rn, NORM, Rmac).with_norm_overflow_bits(0)))?;
    Ok(check(with - without >= 5.0, format!("o=2 {with:.2}%, o=0 {without:.2}%")))
}

/// Full default grid on the first 100 test images per cell, run twice with
/// different worker counts.
fn grid_completeness(ev: &Evals) -> Result<Verdict, String> {
    let grid = SweepGrid { limit: Some(100), ..SweepGrid::default() };
    let run = |threads: usize| -> Result<Vec<u8>, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        pool.install(|| {
            let cells = sweep(&ev.exp, &grid, |_, _, _| {}).map_err(|e| e.to_string())?;
            let mut buf = Vec::new();
            write_csv(&cells, &mut buf).map_err(|e| e.to_string())?;
            Ok(buf)
        })
    };
    let a = run(1)?;
    let b = run(3)?;
    let rows = String::from_utf8_lossy(&a).lines().count() - 1;
    Ok(check(rows == 120 && a == b, format!("{rows} rows, identical: {}", a == b)))
}

fn hwcost_golden() -> Verdict {
    let single = |r, area: f64, power: f64, freq: f64| {
        let rec = hwcost::lookup(Scope::SingleMult8bit, Platform::Asic, r, None).ok()?;
        Some(rec.area == Some(area) && rec.power == Some(power) && rec.freq_mhz == Some(freq))
    };
    let lut = |r, lut: u32, ff: u32| {
        let rec = hwcost::lookup(Scope::SingleMult8bit, Platform::Fpga, r, None).ok()?;
        Some(rec.lut == Some(lut) && rec.ff == Some(ff))
    };
    let dn = |r, p, area: f64, power: f64| {
        let rec = hwcost::lookup(Scope::Diannao16bit, Platform::Asic, r, Some(p)).ok()?;
        Some(rec.area == Some(area) && rec.power == Some(power) && rec.freq_mhz == Some(250.0))
    };
    use RoundingMethod::Rom;
    let rows = [
        single(Trunc, 437.03, 9.02, 869.56),
        single(Sr, 601.42, 13.05, 819.67),
        single(Rn, 576.15, 13.08, 833.33),
        single(Rom, 440.49, 9.53, 869.56),
        lut(Trunc, 70, 8),
        lut(Sr, 82, 16),
        lut(Rn, 78, 8),
        lut(Rom, 71, 8),
        dn(Trunc, Rmult, 482.88, 106.41),
        dn(Sr, Rmult, 533.86, 119.78),
        dn(Rn, Rmult, 498.70, 111.17),
        dn(Rom, Rmult, 483.333, 106.49),
        dn(Trunc, Rmac, 530.83, 123.15),
        dn(Sr, Rmac, 533.891, 123.45),
        dn(Rn, Rmac, 532.71, 123.00),
        dn(Rom, Rmac, 530.81, 122.36),
    ];
    let matched = rows.iter().filter(|r| **r == Some(true)).count();
    let ratio = hwcost::compare(Rn, Trunc, Scope::SingleMult8bit, Platform::Asic, None)
        .map(|c| c.area_ratio)
        .unwrap_or(f64::NAN);
    let ok = matched == 16 && hwcost::records().len() == 16 && ((ratio - 1.31) / 1.31).abs() <= 0.01;
    check(ok, format!("{matched}/16 rows verbatim, RN/Trunc area ratio {ratio:.4}"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, v: Verdict| {
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("{tag} {id:>2} {name}: {detail}");
    };

    report(1, "oracle equivalence", oracle_equivalence());
    report(2, "SR unbiasedness", sr_unbiased());

    type Check = fn(&mut Evals) -> Result<Verdict, String>;
    let mnist: [(u32, &str, Check); 6] = [
        (3, "16-bit float parity", float_parity),
        (4, "4-bit RMULT truncation collapse", truncation_collapse),
        (5, "4-bit rounding uplift", rounding_uplift),
        (6, "4-bit Norm RN RMAC near float", norm_near_float),
        (7, "Norm overflow-bit ablation", overflow_ablation),
        (8, "grid completeness", |ev| grid_completeness(ev)),
    ];
    match Evals::load() {
        Ok(mut ev) => {
            for (id, name, f) in mnist {
                let t = Instant::now();
                let v = f(&mut ev).unwrap_or_else(Verdict::Fail);
                report(id, &format!("{name} [{:.0}s]", t.elapsed().as_secs_f64()), v);
            }
        }
        Err(e) => {
            for (id, name, _) in mnist {
                report(id, name, Verdict::Fail(e.clone()));
            }
        }
    }

    report(9, "hwcost golden", hwcost_golden());
    report(10, "CIFAR-10 trend", Verdict::Skip("optional; no locally trained CIFAR-10 weights".into()));

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
