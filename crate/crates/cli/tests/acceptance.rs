//! End-to-end acceptance checks, one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use irrlab::dimension::{
    box_dimension, horseshoe_dimension, ifs_attractor, moran_dimension, product_points,
    shift_metric_dimension, HorseshoeSpec, MoranSystem,
};
use irrlab::exact;
use irrlab::interval::{
    entropy_lower_bound, find_strict_horseshoe, identity, quadratic, tent, verify_certificate,
};
use irrlab::irregular::{
    build_psi, build_schedule, construct_irregular_point, flow_time_average_exact, iota_quadrature,
    naive_ratio, return_times, suspension_entropy, weighted_ratio_at_checkpoints, FlowObservable,
    RoofFunction, SuspensionSpace, WindowFunction,
};
use irrlab::lorenz::{
    flow_integrate, lorenz_irregular_demo, poincare_map, roof, FlowState, LorenzDemoConfig,
    LorenzModel, PoincareState,
};
use irrlab::skewprod::{
    invariant_graph, lift_irregular_check, spine, trivial_fraction, GraphSkewProduct,
    PorcupineModel,
};
use irrlab::symbolic::{
    mixing_time, power_spec, sft_entropy, BiSequence, PeriodicPoint, SubshiftSpec, Symbol,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Snapshot = Vec<(String, Vec<u8>)>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(2024);
    r.set_stream(stream);
    r
}

fn random_word(r: &mut ChaCha8Rng, len: usize) -> Vec<Symbol> {
    (0..len).map(|_| r.gen_range(0..2)).collect()
}

/// Roof `11/10 + mean(0, -1/5)` over windows of radius 1, valued in `[0.9, 1.1]`.
fn canonical_roof(full: &SubshiftSpec) -> Result<RoofFunction, String> {
    ok(RoofFunction::symbol_average(
        full,
        1,
        &exact::ratio(11, 10),
        &[exact::int(0), exact::ratio(-1, 5)],
    ))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let full = SubshiftSpec::full_shift(2);
    let p0 = ok(PeriodicPoint::new(&full, vec![0]))?;
    let p1 = ok(PeriodicPoint::new(&full, vec![1]))?;
    let psi = ok(build_psi(&full, &p0, &p1, 2))?;
    let rho = canonical_roof(&full)?;
    ensure!(rho.within(1.2), "roof leaves [1/1.2, 1.2]");
    let gap = ok(mixing_time(&full))? as u64;
    let schedule = ok(build_schedule(gap, 1, 1, 1.2, 12, 0.01))?;
    let point = ok(construct_irregular_point(&full, &p0, &p1, &schedule))?;
    let report = ok(weighted_ratio_at_checkpoints(&point, &psi, &rho))?;
    let elapsed = start.elapsed().as_secs_f64();
    let bound = 2.0 / (3.0 * 1.2);
    for cp in &report.checkpoints {
        let separated = if cp.j % 2 == 1 {
            cp.ratio > bound
        } else {
            cp.ratio < bound
        };
        ensure!(
            separated,
            "checkpoint j = {} ratio {} vs {bound}",
            cp.j,
            cp.ratio
        );
    }
    ensure!(report.verdict, "verdict false");
    for cp in &report.checkpoints[..5] {
        let naive = ok(naive_ratio(point.sequence(), &psi, &rho, cp.n))?;
        ensure!(naive == cp.exact, "naive sum differs at N = {}", cp.n);
    }
    ensure!(elapsed < 1.0, "took {elapsed:.3} s");
    Ok(format!(
        "N_12 = {}, gap = {:.4}, {elapsed:.3} s",
        report.checkpoints[11].n,
        report.gap.unwrap_or(f64::NAN)
    ))
}

fn random_irreducible(r: &mut ChaCha8Rng) -> SubshiftSpec {
    loop {
        let n = r.gen_range(2..=6);
        let density = r.gen_range(0.3..0.8);
        let m: Vec<Vec<bool>> = (0..n)
            .map(|_| (0..n).map(|_| r.gen_bool(density)).collect())
            .collect();
        if let Ok(spec) = SubshiftSpec::new("random", m) {
            if spec.is_irreducible() {
                return spec;
            }
        }
    }
}

fn criterion_2() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let spec = random_irreducible(&mut r);
        let h = sft_entropy(&spec);
        for k in 1..=5 {
            let power = ok(power_spec(&spec, k))?;
            let defect = (sft_entropy(&power) - k as f64 * h).abs();
            worst = worst.max(defect);
            ensure!(defect < 1e-9, "defect {defect:e} at k = {k} for {spec:?}");
        }
    }
    Ok(format!("worst defect {worst:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut specs = vec![
        SubshiftSpec::full_shift(2),
        SubshiftSpec::full_shift(3),
        SubshiftSpec::golden_mean(),
    ];
    let mut r = rng(3);
    specs.extend((0..3).map(|_| random_irreducible(&mut r)));
    let mut worst: f64 = 0.0;
    for spec in &specs {
        let h = sft_entropy(spec);
        for c in [0.5, 1.0, 2.0, std::f64::consts::PI] {
            let s = ok(suspension_entropy(spec, &vec![c; spec.alphabet_size()]))?;
            worst = worst.max((s - h / c).abs());
            ensure!((s - h / c).abs() < 1e-9, "roof {c}: {s} vs {}", h / c);
        }
    }
    let s = ok(suspension_entropy(
        &SubshiftSpec::full_shift(3),
        &[1.0, 1.0, 2.0],
    ))?;
    let expected = (1.0 + 2f64.sqrt()).ln();
    ensure!((s - expected).abs() < 1e-8, "roof (1, 1, 2): {s}");
    Ok(format!(
        "worst constant-roof defect {worst:.2e}, (1,1,2) -> {s:.10}"
    ))
}

fn criterion_4() -> Outcome {
    let ln2 = 2f64.ln();
    let f = ok(tent(2.0))?;
    let cert = ok(find_strict_horseshoe(&f, 1, 2))?.ok_or("no certificate for tent 2")?;
    ensure!(
        (cert.k, cert.p) == (1, 2),
        "tent 2 certificate ({}, {})",
        cert.k,
        cert.p
    );
    ensure!(
        cert.bound_nats >= ln2 - 1e-12,
        "tent 2 bound {}",
        cert.bound_nats
    );
    ensure!(
        verify_certificate(&f, &cert),
        "tent 2 certificate fails verification"
    );
    let mut detail = Vec::new();
    for s in [1.3, 1.7, 2.0] {
        let b = ok(entropy_lower_bound(&ok(tent(s))?, 10))?;
        ensure!((b - s.ln()).abs() <= 0.15, "tent {s}: {b} vs {}", s.ln());
        detail.push(format!("tent {s} -> {b:.4}"));
    }
    let q = ok(quadratic(-2.0))?;
    let b = ok(entropy_lower_bound(&q, 10))?;
    ensure!(b >= ln2 - 1e-12, "quadratic -2: {b}");
    let id = ok(entropy_lower_bound(&ok(identity())?, 10))?;
    ensure!(id == 0.0, "identity: {id}");
    Ok(format!(
        "{}, quadratic -2 -> {b:.4}, identity -> 0",
        detail.join(", ")
    ))
}

fn criterion_5() -> Outcome {
    let third = ok(moran_dimension(&[1.0 / 3.0, 1.0 / 3.0]))?;
    let expected = 2f64.ln() / 3f64.ln();
    ensure!((third - expected).abs() < 1e-10, "(1/3, 1/3): {third}");
    let mixed = ok(moran_dimension(&[0.5, 0.25]))?;
    ensure!((mixed - 0.694242).abs() < 1e-6, "(1/2, 1/4): {mixed}");
    let system = MoranSystem::middle_third();
    let points: Vec<Vec<f64>> = ok(ifs_attractor(&system, 12))?
        .into_iter()
        .map(|x| vec![x])
        .collect();
    let line = ok(box_dimension(&points, (3f64.powi(-11), 1.0 / 3.0), 11))?;
    ensure!(
        (line.slope - expected).abs() < 0.02,
        "box slope {}",
        line.slope
    );
    let cantor = ok(ifs_attractor(&system, 10))?;
    let plane = product_points(&cantor, &cantor);
    let prod = ok(box_dimension(&plane, (3f64.powi(-9), 1.0 / 3.0), 9))?;
    let horseshoe = ok(horseshoe_dimension(&ok(HorseshoeSpec::new(
        3.0,
        1.0 / 3.0,
        2,
    ))?))?;
    ensure!(
        (prod.slope - 1.26186).abs() < 0.05,
        "product slope {}",
        prod.slope
    );
    ensure!(
        (horseshoe.total - 1.26186).abs() < 1e-5,
        "horseshoe total {}",
        horseshoe.total
    );
    Ok(format!(
        "box slope {:.4}, product slope {:.4}",
        line.slope, prod.slope
    ))
}

fn criterion_6() -> Outcome {
    let full = ok(shift_metric_dimension(
        &SubshiftSpec::full_shift(2),
        (5, 30),
    ))?;
    ensure!((full - 2.0).abs() <= 0.02, "full 2-shift {full}");
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let golden = ok(shift_metric_dimension(
        &SubshiftSpec::golden_mean(),
        (5, 30),
    ))?;
    let expected = 2.0 * phi.ln() / 2f64.ln();
    ensure!(
        (golden - expected).abs() <= 0.02,
        "golden mean {golden} vs {expected}"
    );
    let mut r = rng(6);
    let mut specs = vec![SubshiftSpec::full_shift(3)];
    specs.extend((0..5).map(|_| random_irreducible(&mut r)));
    for spec in &specs {
        let d = ok(shift_metric_dimension(spec, (5, 30)))?;
        let predicted = 2.0 * sft_entropy(spec) / 2f64.ln();
        ensure!(
            (d - predicted).abs() <= 0.02,
            "{spec:?}: {d} vs {predicted}"
        );
    }
    Ok(format!("full {full:.4}, golden {golden:.4}"))
}

fn criterion_7() -> Outcome {
    let full = SubshiftSpec::full_shift(2);
    let p0 = ok(PeriodicPoint::new(&full, vec![0]))?;
    let p1 = ok(PeriodicPoint::new(&full, vec![1]))?;
    let phi = FlowObservable {
        psi: ok(build_psi(&full, &p0, &p1, 2))?,
    };
    let rho = canonical_roof(&full)?;
    let space = SuspensionSpace {
        base: full.clone(),
        roof: rho.clone(),
    };
    let w = (phi.psi.radius() + 1).max(rho.radius());
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let left_len = 1 + r.gen_range(0..4);
        let left = random_word(&mut r, left_len);
        let len = r.gen_range(1..60);
        let middle = random_word(&mut r, len);
        let right_len = 1 + r.gen_range(0..4);
        let right = random_word(&mut r, right_len);
        let x = ok(BiSequence::with_tails(left, middle, right))?;
        let n = r.gen_range(1..=1000);
        let t = ok(return_times(&rho, &x, n))?
            .pop()
            .ok_or("no return time")?;
        let flow = exact::to_f64(&ok(flow_time_average_exact(&space, &phi, &x, &t))?);
        // independent route: quadrature fiber integrals over float roof sums
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..n as i64 {
            num += ok(iota_quadrature(&phi, &rho, &x.window(j, w)))?;
            den += exact::to_f64(ok(rho.value(&x.window(j, rho.radius())))?);
        }
        let diff = (flow - num / den).abs();
        worst = worst.max(diff);
        ensure!(diff < 1e-12, "n = {n}: {flow} vs {}", num / den);
    }
    Ok(format!("worst difference {worst:.2e}"))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let model = LorenzModel::default();
    let flags = ok(model.validate())?;
    ensure!(
        flags.regular && flags.beta_c == 3.0 && flags.alpha == 0.5,
        "flags {flags:?}"
    );
    ensure!(
        LorenzModel::new(1.0, -0.5, -0.5, 1.9, 0.25, 1.0).is_err(),
        "broken chain accepted"
    );
    let mut worst: f64 = 0.0;
    for &(x, y) in &[
        (0.5, 0.0),
        (-0.3, 0.7),
        (0.9, -1.0),
        (-0.01, 0.2),
        (0.002, 0.5),
    ] {
        let end = ok(flow_integrate(
            &model,
            FlowState::Cube { p: [x, y, 1.0] },
            ok(roof(&model, x))?,
        ))?
        .position(&model);
        let p = ok(poincare_map(&model, ok(PoincareState::new(x, y))?))?;
        let d = (end[0] - p.x)
            .abs()
            .max((end[1] - p.y).abs())
            .max((end[2] - 1.0).abs());
        worst = worst.max(d);
        ensure!(d < 1e-10, "flow vs map at ({x}, {y}): {d:e}");
    }
    let demo = ok(lorenz_irregular_demo(&model, &LorenzDemoConfig::default()))?;
    let gap = demo.report.gap.unwrap_or(f64::NAN);
    ensure!(
        demo.report.verdict && gap > 0.0,
        "verdict {} gap {gap}",
        demo.report.verdict
    );
    ensure!(
        (gap - 0.057057493784193905).abs() < 1e-9,
        "gap {gap} drifted"
    );
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(elapsed < 10.0, "took {elapsed:.2} s");
    Ok(format!(
        "flow defect {worst:.1e}, gap {gap:.6}, {elapsed:.2} s"
    ))
}

fn criterion_9() -> Outcome {
    let model = PorcupineModel::default();
    let mut r = rng(9);
    for _ in 0..1000 {
        let depth = r.gen_range(0..120);
        let past = random_word(&mut r, depth);
        let ext = r.gen_range(1..60);
        let mut longer = past.clone();
        longer.extend(random_word(&mut r, ext));
        let (a, b) = (ok(spine(&model, &past))?, ok(spine(&model, &longer))?);
        ensure!(a.contains(&b), "nesting fails for past of length {depth}");
    }
    let depth = 60;
    let ones = ok(spine(&model, &vec![1; depth]))?;
    let t = ok(exact::from_f64(model.t))?;
    let mut expected = exact::int(1);
    for _ in 0..depth {
        expected *= &t;
    }
    ensure!(
        ones.length() == expected,
        "all-1 spine length {}",
        ones.length_f64()
    );
    let v: Vec<f64> = [10, 30, 60]
        .iter()
        .map(|&d| ok(trivial_fraction(&model, d, 10_000, 1)))
        .collect::<Result<_, _>>()?;
    ensure!(v[0] <= v[1] && v[1] <= v[2], "not monotone: {v:?}");
    ensure!(v[2] == 0.9929, "depth 60 value {}", v[2]);
    Ok(format!("fractions {v:?}"))
}

fn criterion_10() -> Outcome {
    let full = SubshiftSpec::full_shift(2);
    let halving = ok(GraphSkewProduct::new(
        full.clone(),
        vec![0.5, 0.5],
        vec![0.0, 1.0],
    ))?;
    let p0 = ok(PeriodicPoint::new(&full, vec![0]))?;
    let p1 = ok(PeriodicPoint::new(&full, vec![1]))?;
    let psi = ok(build_psi(&full, &p0, &p1, 2))?;
    let rho = canonical_roof(&full)?;
    // the orbit walk stops at N_8; later checkpoints exceed its budget
    let schedule = ok(build_schedule(1, 1, 1, 1.2, 8, 0.01))?;
    let point = ok(construct_irregular_point(&full, &p0, &p1, &schedule))?;
    let fibers = [-1.0, 0.0, 0.5, 1.0];
    ensure!(
        ok(lift_irregular_check(&halving, &point, &psi, &rho, &fibers))?,
        "lifted reports differ"
    );
    let skews = [
        halving,
        ok(GraphSkewProduct::new(
            full.clone(),
            vec![0.7, -0.6],
            vec![0.3, -1.2],
        ))?,
    ];
    let mut r = rng(10);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let past = random_word(&mut r, 40);
        for skew in &skews {
            for depth in [8, 16, 32] {
                let (v, bound) = ok(invariant_graph(skew, &past, depth))?;
                let (shifted, _) = ok(invariant_graph(skew, &past[1..], depth))?;
                let defect = (skew.fiber_map(past[0], shifted) - v).abs();
                worst = worst.max(defect / bound);
                ensure!(defect <= 2.0 * bound, "defect {defect:e} > 2 * {bound:e}");
            }
        }
    }
    Ok(format!(
        "lift identical on 4 fibers, worst defect/bound {worst:.3}"
    ))
}

const CLI_RUNS: &[(&str, &str)] = &[
    ("irregular construct", "{}"),
    ("irregular trace", "{}"),
    ("entropy sft", "{}"),
    (
        "entropy interval",
        r#"{"model": "tent", "params": {"s": 1.7}, "k_max": 6, "birkhoff": {"n": 2000}}"#,
    ),
    ("entropy suspension", r#"{"roof": [1.0, 2.0]}"#),
    ("entropy scaling", r#"{"k": 3}"#),
    ("dim moran", r#"{"ratios": [0.5, 0.25]}"#),
    ("dim box", r#"{"depth": 10}"#),
    ("dim shift-metric", "{}"),
    (
        "dim horseshoe",
        r#"{"lambda_u": 3.0, "mu_s": 0.3333333333333333, "branches": 2}"#,
    ),
    ("lorenz map", "{}"),
    ("lorenz demo", "{}"),
    ("lorenz validate", "{}"),
    ("porcupine spines", "{}"),
    (
        "porcupine fraction",
        r#"{"depths": [10, 30], "samples": 2000}"#,
    ),
    ("skew graph", "{}"),
    ("skew lift-check", "{}"),
];

fn run_cli(
    command: &str,
    input: &str,
    dir: &Path,
    threads: usize,
    format: &str,
) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_irrlab"))
        .args(command.split(' '))
        .args(["--input", input, "--seed", "7", "--format", format])
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--output-dir")
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "`{command}` exited with {}: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout)
    );
    Ok(out.stdout)
}

fn snapshot(dir: &Path) -> Result<Snapshot, String> {
    let mut files = Vec::new();
    for entry in ok(std::fs::read_dir(dir))? {
        let path = ok(entry)?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        files.push((name, ok(std::fs::read(&path))?));
    }
    files.sort();
    Ok(files)
}

fn criterion_11() -> Outcome {
    let root = ok(tempfile::tempdir())?;
    let mut compared = 0;
    let mut jobs: Vec<(&str, &str, &str)> = CLI_RUNS.iter().map(|&(c, i)| (c, i, "csv")).collect();
    jobs.push(("irregular trace", "{}", "json"));
    jobs.push(("dim box", r#"{"depth": 10}"#, "svg"));
    for (idx, (command, input, format)) in jobs.into_iter().enumerate() {
        let mut seen: Option<(Vec<u8>, Snapshot)> = None;
        for (run, threads) in [1usize, 1, 4].into_iter().enumerate() {
            let dir = root.path().join(format!("{idx}-{run}"));
            let stdout = run_cli(command, input, &dir, threads, format)?;
            let files = snapshot(&dir)?;
            ensure!(!files.is_empty(), "`{command}` wrote no files");
            match &seen {
                None => seen = Some((stdout, files)),
                Some((s, f)) => {
                    ensure!(
                        *s == stdout,
                        "`{command}` stdout differs (threads {threads})"
                    );
                    ensure!(*f == files, "`{command}` files differ (threads {threads})");
                }
            }
        }
        compared += 1;
    }
    Ok(format!("{compared} invocations identical across 3 runs"))
}

fn main() {
    type Criterion = (u32, &'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        (1, "canonical irregular point", criterion_1),
        (2, "entropy of iterates", criterion_2),
        (3, "suspension entropy", criterion_3),
        (4, "horseshoe entropy bounds", criterion_4),
        (5, "Moran and box dimensions", criterion_5),
        (6, "shift metric dimension", criterion_6),
        (7, "suspension time averages", criterion_7),
        (8, "Lorenz model", criterion_8),
        (9, "porcupine spines", criterion_9),
        (10, "lift and invariant graphs", criterion_10),
        (11, "CLI determinism", criterion_11),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        let outcome =
            std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {why}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
