//! Acceptance gate: runs the ten criteria and prints one PASS/FAIL line
//! each. Exits non-zero when a criterion fails for a reason other than
//! the machine having too few CPUs for a parallel-efficiency measurement.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use molcurriculum::descriptors::{descriptor_record, prepare};
use molcurriculum::fg::{atom_features, FunctionalGroupLibrary};
use molcurriculum::losses::{
    distance_correlation_on_pairs, hybrid_loss, nt_xent, pairwise_distance_correlation, siglip_loss, spearman,
    EmbeddingMatrix, LinearMap, LossParams,
};
use molcurriculum::pipeline::{cmd_annotate, cmd_bench, cmd_schedule, PipelineConfig, ScheduleSource};
use molcurriculum::scheduler::{sample_epoch, Budget, Regime, ScheduleSpec, TierIndex};
use molcurriculum::smiles::{parse_bytes, parse_smiles, write_smiles};
use molcurriculum::synth::synthetic_corpus;
use molcurriculum::tiering::{assign_tier, RuleTrace, Tier, TierConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
    /// Failure caused only by the host having fewer CPUs than the
    /// measurement needs.
    hardware_limited: bool,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Outcome {
        Outcome {
            pass,
            detail: detail.into(),
            hardware_limited: false,
        }
    }
}

fn within(limit: Duration, elapsed: Duration) -> bool {
    elapsed <= limit
}

fn budget_arithmetic() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        output_dir: dir.path().to_path_buf(),
        ..Default::default()
    };
    let start = Instant::now();
    let report = cmd_schedule(
        &cfg,
        &ScheduleSource::Counts([268, 107_370, 153_955, 703_283, 35_124]),
        false,
    )
    .unwrap();
    let elapsed = start.elapsed();
    let pass = report.regime == Regime::Staged10
        && report.total == Budget::Exact(5_740_728)
        && report.baseline == 10_000_000
        && report.ratio_text() == "0.5741"
        && within(Duration::from_secs(1), elapsed);
    Outcome::new(
        pass,
        format!(
            "total={} baseline={} ratio={} in {:.3}s",
            report.total,
            report.baseline,
            report.ratio_text(),
            elapsed.as_secs_f64()
        ),
    )
}

fn tier_suite() -> Outcome {
    let table = common::suite_table();
    let top = common::top_six();
    let start = Instant::now();
    let mut correct = 0;
    let mut misses = Vec::new();
    for (i, (smiles, tier, trace)) in common::TIER_SUITE.iter().enumerate() {
        let record = descriptor_record(&parse_smiles(smiles).unwrap(), &table).unwrap();
        let mut cfg = TierConfig::default();
        if i == common::COMPLEXITY_CASE {
            // the default clause needs CT/n_ha > 50; see the complexity note
            let default = assign_tier(&record, &top, &cfg);
            if (default.tier, default.trace) != (Tier::T2, RuleTrace::FallbackMid) {
                misses.push(format!("#{} default threshold gave {:?}", i + 1, default));
            }
            cfg.ct_per_ha_threshold = common::COMPLEXITY_THRESHOLD;
        }
        let label = assign_tier(&record, &top, &cfg);
        if label.tier == *tier && label.trace == *trace {
            correct += 1;
        } else {
            misses.push(format!("#{} {smiles}: got {:?}", i + 1, label));
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        correct == 20 && misses.is_empty() && within(Duration::from_secs(1), elapsed),
        format!("{correct}/20 in {:.3}s {}", elapsed.as_secs_f64(), misses.join("; ")),
    )
}

fn descriptor_oracles() -> Outcome {
    let table = common::suite_table();
    let library = FunctionalGroupLibrary::default_library();
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    for (smiles, _, _) in common::TIER_SUITE {
        let parsed = parse_smiles(smiles).unwrap();
        let record = descriptor_record(&parsed, &table).unwrap();
        let g = prepare(&parsed).0;
        let features = atom_features(&g);
        for pattern in library.patterns() {
            let mut fast = pattern.embeddings(&g, &features);
            let mut slow = common::brute_embeddings(&g, pattern);
            fast.sort();
            slow.sort();
            if fast != slow {
                problems.push(format!("{smiles} {}: {} vs {} embeddings", pattern.name, fast.len(), slow.len()));
            }
        }
        let groups = common::brute_groups(&g, &library);
        let mut names = record.fg_names.clone();
        names.sort();
        if names != groups {
            problems.push(format!("{smiles}: groups {names:?} vs {groups:?}"));
        }
        for (what, got, want) in [
            ("d_scaf", record.d_scaf, common::d_scaf(&g)),
            ("rarity", record.rarity, common::rarity(&groups, &table)),
            ("bertz_ct", record.bertz_ct, common::bertz(&g)),
        ] {
            let err = (got - want).abs();
            worst = worst.max(err);
            if err > 1e-12 {
                problems.push(format!("{smiles} {what}: {got} vs {want}"));
            }
        }
        for (what, got, want) in [
            ("conjugation", record.conjugation, common::conjugation(&g)),
            ("arom_sub", record.arom_sub, common::arom_sub(&g)),
        ] {
            if got != want {
                problems.push(format!("{smiles} {what}: {got} vs {want}"));
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        problems.is_empty() && within(Duration::from_secs(10), elapsed),
        format!(
            "20 molecules, worst real error {worst:.1e}, {} mismatches in {:.3}s {}",
            problems.len(),
            elapsed.as_secs_f64(),
            problems.join("; ")
        ),
    )
}

fn unit_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for row in v.chunks_mut(d) {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        row.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

fn matrix(n: usize, d: usize, v: &[f64]) -> EmbeddingMatrix {
    EmbeddingMatrix::new(n, d, v.to_vec()).unwrap()
}

fn gradient_checks() -> Outcome {
    const H: f64 = 1e-5;
    let start = Instant::now();
    let mut worst = [0.0f64; 3];
    let mut cases = 0;
    for seed in 0..100u64 {
        for n in [2, 4, 8] {
            for d in [4, 8] {
                cases += 1;
                let mut rng = ChaCha8Rng::seed_from_u64(seed * 100 + n as u64 * 10 + d as u64);
                let params = LossParams {
                    check_normalized: false,
                    scale: rng.gen_range(0.5..4.0),
                    bias: rng.gen_range(-1.5..1.5),
                    ..LossParams::default()
                };
                let a = unit_matrix(&mut rng, n, d);
                let b = unit_matrix(&mut rng, n, d);
                let ab = [a.clone(), b.clone()].concat();

                let out = nt_xent(&matrix(n, d, &a), &matrix(n, d, &b), &params).unwrap();
                let numeric = common::numeric_gradient(&ab, H, |x| {
                    nt_xent(&matrix(n, d, &x[..n * d]), &matrix(n, d, &x[n * d..]), &params).unwrap().loss
                });
                worst[0] = worst[0].max(common::max_relative_error(&[out.grad_a, out.grad_b].concat(), &numeric));

                let out = siglip_loss(&matrix(n, d, &a), &matrix(n, d, &b), &params).unwrap();
                let x0 = [ab.clone(), vec![params.scale, params.bias]].concat();
                let numeric = common::numeric_gradient(&x0, H, |x| {
                    let p = LossParams {
                        scale: x[2 * n * d],
                        bias: x[2 * n * d + 1],
                        ..params.clone()
                    };
                    siglip_loss(&matrix(n, d, &x[..n * d]), &matrix(n, d, &x[n * d..2 * n * d]), &p).unwrap().loss
                });
                let analytic = [out.grad_v, out.grad_t, vec![out.grad_scale, out.grad_bias]].concat();
                worst[1] = worst[1].max(common::max_relative_error(&analytic, &numeric));

                let dg = 3;
                let g: Vec<f64> = (0..n * dg).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let w: Vec<f64> = (0..d * dg + d).map(|_| rng.gen_range(-0.8..0.8)).collect();
                let hw: Vec<f64> = (0..d + 1).map(|_| rng.gen_range(-0.8..0.8)).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let eval = |x: &[f64]| {
                    let v = matrix(n, d, &x[..n * d]);
                    let o = n * d;
                    let proj = LinearMap::new(d, dg, x[o..o + d * dg].to_vec(), x[o + d * dg..o + d * dg + d].to_vec()).unwrap();
                    let o = o + d * dg + d;
                    let head = LinearMap::new(1, d, x[o..o + d].to_vec(), vec![x[o + d]]).unwrap();
                    hybrid_loss(&v, &matrix(n, dg, &g), &proj, &head, &y, &params).unwrap()
                };
                let x0 = [a.clone(), w, hw].concat();
                let out = eval(&x0);
                let numeric = common::numeric_gradient(&x0, H, |x| eval(x).loss);
                let analytic = [
                    out.grad_v,
                    out.grad_proj.weight,
                    out.grad_proj.bias,
                    out.grad_head.weight,
                    out.grad_head.bias,
                ]
                .concat();
                worst[2] = worst[2].max(common::max_relative_error(&analytic, &numeric));
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst.iter().all(|&w| w <= 1e-5) && within(Duration::from_secs(30), elapsed),
        format!(
            "{cases} cases per loss, worst relative error nt_xent {:.1e} siglip {:.1e} hybrid {:.1e} in {:.2}s",
            worst[0],
            worst[1],
            worst[2],
            elapsed.as_secs_f64()
        ),
    )
}

fn hybrid_identity() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, d) = (6, 5);
        let v = matrix(n, d, &unit_matrix(&mut rng, n, d));
        let mut eye = vec![0.0; d * d];
        for k in 0..d {
            eye[k * d + k] = 1.0;
        }
        let proj = LinearMap::new(d, d, eye, vec![0.0; d]).unwrap();
        let head = LinearMap::new(1, d, (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect(), vec![0.3]).unwrap();
        let y: Vec<f64> = (0..n).map(|i| head.apply(v.row(i))[0]).collect();
        let params = LossParams {
            scale: 2.0,
            bias: -0.5,
            ..LossParams::default()
        };
        let h = hybrid_loss(&v, &v, &proj, &head, &y, &params).unwrap();
        let s = siglip_loss(&v, &v, &params).unwrap();
        worst = worst.max((h.loss - s.loss).abs());
    }
    Outcome::new(worst <= 1e-12, format!("20 seeds, max |hybrid - siglip(V,V)| = {worst:.1e}"))
}

fn correlation_kernel() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (n, d) = (40, 6);
    let a: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    // product of Givens rotations
    let mut rotated = a.clone();
    for _ in 0..10 {
        let (i, j) = (rng.gen_range(0..d), rng.gen_range(0..d));
        if i == j {
            continue;
        }
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        for row in rotated.chunks_mut(d) {
            let (x, y) = (row[i], row[j]);
            row[i] = t.cos() * x - t.sin() * y;
            row[j] = t.sin() * x + t.cos() * y;
        }
    }
    let ma = matrix(n, d, &a);
    for other in [matrix(n, d, &a), matrix(n, d, &rotated)] {
        let (rho, r) = pairwise_distance_correlation(&ma, &other, 300, 3).unwrap();
        worst = worst.max((rho - 1.0).abs()).max((r - 1.0).abs());
    }

    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // integer-valued data forces ties
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(0..4) as f64).collect();
        let y: Vec<f64> = (0..5).map(|_| rng.gen_range(0..4) as f64).collect();
        let oracle = common::spearman(&x, &y);
        match spearman(&x, &y) {
            Some(rho) => worst = worst.max((rho - oracle).abs()),
            None if oracle.is_nan() => {}
            None => worst = f64::INFINITY,
        }

        let pa = matrix(5, 3, &(0..15).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>());
        let pb = matrix(5, 2, &(0..10).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>());
        let pairs: Vec<(usize, usize)> = (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j))).collect();
        let dist = |m: &EmbeddingMatrix, i: usize, j: usize| {
            m.row(i).iter().zip(m.row(j)).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
        };
        let da: Vec<f64> = pairs.iter().map(|&(i, j)| dist(&pa, i, j)).collect();
        let db: Vec<f64> = pairs.iter().map(|&(i, j)| dist(&pb, i, j)).collect();
        let (rho, r) = distance_correlation_on_pairs(&pa, &pb, &pairs).unwrap();
        worst = worst
            .max((rho - common::spearman(&da, &db)).abs())
            .max((r - common::pearson(&da, &db)).abs());
    }
    Outcome::new(
        worst <= 1e-12,
        format!("identity, rotation and 200 five-point oracle cases, max deviation {worst:.1e}"),
    )
}

fn write_corpus(dir: &std::path::Path, n: usize) -> std::path::PathBuf {
    let path = dir.join("corpus.smi");
    let mut text = synthetic_corpus(n, 2024).join("\n");
    text.push('\n');
    std::fs::write(&path, text).unwrap();
    path
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let input = write_corpus(dir.path(), 10_000);
    let start = Instant::now();
    let run = |workers: usize| {
        let cfg = PipelineConfig {
            input: Some(input.clone()),
            workers,
            output_dir: dir.path().join(format!("w{workers}")),
            ..Default::default()
        };
        let report = cmd_annotate(&cfg).unwrap();
        (report.written, std::fs::read(report.output).unwrap())
    };
    let (n1, one) = run(1);
    let (n16, sixteen) = run(16);
    let elapsed = start.elapsed();
    Outcome::new(
        one == sixteen && n1 == n16 && n1 > 0 && within(Duration::from_secs(60), elapsed),
        format!(
            "{n1} records, {} bytes, identical={} in {:.2}s",
            one.len(),
            one == sixteen,
            elapsed.as_secs_f64()
        ),
    )
}

fn throughput() -> Outcome {
    let cfg = PipelineConfig {
        workers: 8,
        seed: 2024,
        ..Default::default()
    };
    let start = Instant::now();
    let r = cmd_bench(&cfg, 10_000).unwrap();
    let elapsed = start.elapsed();
    let single_ok = r.single.mol_per_sec >= 2308.0 && r.single.molecules == 10_000;
    let efficiency_ok = r.efficiency >= 0.5;
    let timely = within(Duration::from_secs(120), elapsed);
    let mut outcome = Outcome::new(
        single_ok && efficiency_ok && timely,
        format!(
            "single {:.0} mol/s ({:.4} ms/mol), 8 workers {:.0} mol/s, efficiency {:.2}, {} CPU(s) available, {:.1}s",
            r.single.mol_per_sec,
            r.single.ms_per_mol,
            r.parallel.mol_per_sec,
            r.efficiency,
            r.available_cpus,
            elapsed.as_secs_f64()
        ),
    );
    if single_ok && timely && !efficiency_ok && r.available_cpus < 8 {
        outcome.hardware_limited = true;
        outcome.detail.push_str("; efficiency needs 8 CPUs");
    }
    outcome
}

fn mixed_statistics() -> Outcome {
    let index = TierIndex::from_counts(&[0, 0, 0, 100_000, 0]);
    let spec = ScheduleSpec {
        regime: Regime::Mixed,
        epochs: 10,
        hard_start: 0.1,
        seed: 0,
    };
    let first = sample_epoch(&index, &spec, 0).unwrap().size() as f64;
    let last = sample_epoch(&index, &spec, 9).unwrap().size();
    let sigma = (100_000.0f64 * 0.1 * 0.9).sqrt();
    let z = (first - 10_000.0) / sigma;
    Outcome::new(
        z.abs() <= 3.0 && last == 100_000,
        format!("epoch 0: {first} (z={z:.2}), epoch 9: {last}"),
    )
}

const SMILES_ALPHABET: &[u8] = b"CCCCNNOOSPFIBrclnos()()[]==#-+:/\\@@%0123456789..Hh";

fn parser_fuzz() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let previous = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut panics = 0;
    let mut accepted = 0;
    let mut bad_round_trips = 0;
    let mut buf = Vec::with_capacity(64);
    for i in 0..1_000_000u32 {
        buf.clear();
        let len = rng.gen_range(0..48);
        for _ in 0..len {
            let byte = if i % 2 == 0 {
                rng.gen::<u8>()
            } else {
                SMILES_ALPHABET[rng.gen_range(0..SMILES_ALPHABET.len())]
            };
            buf.push(byte);
        }
        let result = catch_unwind(AssertUnwindSafe(|| {
            parse_bytes(&buf).ok().map(|g| {
                let again = parse_smiles(&write_smiles(&g));
                again.is_ok_and(|h| common::isomorphic(&g, &h))
            })
        }));
        match result {
            Err(_) => panics += 1,
            Ok(Some(true)) => accepted += 1,
            Ok(Some(false)) => {
                accepted += 1;
                bad_round_trips += 1;
            }
            Ok(None) => {}
        }
    }
    std::panic::set_hook(previous);

    let mut corpus: Vec<String> = common::SUBSET_CORPUS.iter().map(|s| s.to_string()).collect();
    corpus.extend(synthetic_corpus(2000, 5));
    let mut corpus_failures = Vec::new();
    for s in &corpus {
        let ok = parse_smiles(s).is_ok_and(|g| parse_smiles(&write_smiles(&g)).is_ok_and(|h| common::isomorphic(&g, &h)));
        if !ok {
            corpus_failures.push(s.clone());
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        panics == 0 && bad_round_trips == 0 && corpus_failures.is_empty() && within(Duration::from_secs(300), elapsed),
        format!(
            "1000000 inputs, {panics} panics, {accepted} accepted ({bad_round_trips} bad round-trips), {} corpus lines, {} failures {:?} in {:.1}s",
            corpus.len(),
            corpus_failures.len(),
            corpus_failures.iter().take(5).collect::<Vec<_>>(),
            elapsed.as_secs_f64()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("budget arithmetic", budget_arithmetic),
        ("tier rule suite", tier_suite),
        ("descriptor oracles", descriptor_oracles),
        ("loss gradient checks", gradient_checks),
        ("hybrid degenerate identity", hybrid_identity),
        ("correlation kernel", correlation_kernel),
        ("annotation determinism", determinism),
        ("throughput", throughput),
        ("mixed-schedule statistics", mixed_statistics),
        ("parser fuzz and round-trip", parser_fuzz),
    ];
    let mut hard_failures = 0;
    let mut passed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        println!("[{status}] {:>2}. {name}: {}", i + 1, outcome.detail);
        if outcome.pass {
            passed += 1;
        } else if !outcome.hardware_limited {
            hard_failures += 1;
        }
    }
    println!("acceptance: {passed}/10 passed");
    if hard_failures > 0 {
        std::process::exit(1);
    }
}
