//! Acceptance suite. Prints one PASS / FAIL / NOT RUN line per criterion and
//! exits nonzero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::env;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use morse_smale::gradient::validate_gradient;
use morse_smale::msc::{compute_pipeline, ComputeOptions, MsComplex, Pipeline};
use morse_smale::path_matrix::count_paths;
use morse_smale::saddle_graph::{build_minor, mark_reachable};
use morse_smale::synth::{generate, FieldKind};
use morse_smale::volume::{Dtype, VolumeSpec};
use morse_smale::{CellId, GridDims, ScalarField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

const EULER_TIME_LIMIT: Duration = Duration::from_secs(60);
const PATH_ORACLE_TIME_LIMIT: Duration = Duration::from_secs(120);
const LARGE_FIELD_TIME_LIMIT: Duration = Duration::from_secs(60);
const TABLE1_BAND: f64 = 0.25;
const PATH_STEP_BUDGET: u64 = 50_000_000;
const MINOR_WEIGHT_CAP: u128 = 1_000_000;

enum Outcome {
    Pass(String),
    Fail(String),
    NotRun(String),
}

/// Fields shared by criteria 1, 4, 5 and 6.
struct Suite {
    random: Vec<(String, ScalarField, Pipeline)>,
    synthetic: Vec<(String, ScalarField, Pipeline)>,
    elapsed: Duration,
}

fn build_suite() -> Suite {
    let clock = Instant::now();
    let opts = ComputeOptions::default();
    let mut random = Vec::new();
    for n in [8usize, 16, 32] {
        for seed in 0..100u64 {
            let f = random_field([n, n, n], 1000 * n as u64 + seed);
            let p = compute_pipeline(&f, opts).expect("pipeline");
            random.push((format!("random {n}^3 seed {seed}"), f, p));
        }
    }
    let mut synthetic = Vec::new();
    for kind in FieldKind::ALL {
        for n in [8usize, 16, 32] {
            let d = GridDims::new(n, n, n).unwrap();
            let f = generate(kind, d, 7).unwrap();
            let p = compute_pipeline(&f, opts).expect("pipeline");
            synthetic.push((format!("{kind} {n}^3"), f, p));
        }
    }
    Suite {
        random,
        synthetic,
        elapsed: clock.elapsed(),
    }
}

fn all(s: &Suite) -> impl Iterator<Item = &(String, ScalarField, Pipeline)> {
    s.random.iter().chain(&s.synthetic)
}

fn criterion_1(s: &Suite) -> Outcome {
    let bad: Vec<String> = all(s)
        .filter(|(_, _, p)| p.critical.euler() != 1 || p.complex.euler() != 1)
        .map(|(name, _, p)| format!("{name}: {:?}", p.critical.counts()))
        .collect();
    let n = s.random.len() + s.synthetic.len();
    if !bad.is_empty() {
        return Outcome::Fail(format!(
            "{} of {n} fields violate c0-c1+c2-c3 = 1, e.g. {}",
            bad.len(),
            bad[0]
        ));
    }
    if s.elapsed > EULER_TIME_LIMIT {
        return Outcome::Fail(format!(
            "took {:.1} s, limit {:?}",
            s.elapsed.as_secs_f64(),
            EULER_TIME_LIMIT
        ));
    }
    Outcome::Pass(format!("{n} fields, {:.1} s", s.elapsed.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut pairs = 0usize;
    for i in 0..50u64 {
        let n = [
            8 + (i % 9) as usize,
            8 + (i * 5 % 9) as usize,
            8 + (i * 7 % 9) as usize,
        ];
        let f = random_field(n, 5000 + i);
        let p = compute_pipeline(&f, ComputeOptions::default()).expect("pipeline");
        let oracle = enumerate_gradient_paths(&p.gradient, &p.critical.saddles1, PATH_STEP_BUDGET);
        if p.path_counts.to_map() != oracle {
            return Outcome::Fail(format!(
                "field {i} ({n:?}): matrix counts differ from path enumeration"
            ));
        }
        pairs += oracle.len();
    }

    let mut minors = 0;
    while minors < 200 {
        let m = random_minor(&mut rng, 30);
        if minor_path_weight(&m) > MINOR_WEIGHT_CAP {
            continue;
        }
        let got = match count_paths(&m) {
            Ok(c) => c.to_map(),
            Err(e) => return Outcome::Fail(format!("minor {minors}: {e}")),
        };
        if got != enumerate_minor(&m) {
            return Outcome::Fail(format!(
                "minor {minors}: counts differ from enumeration: {m:?}"
            ));
        }
        minors += 1;
    }

    let mut dags = 0;
    while dags < 200 {
        let d = RandomDag::generate(&mut rng, 30);
        if d.path_total() > MINOR_WEIGHT_CAP {
            continue;
        }
        let sources: Vec<CellId> = d.sources.iter().map(|&s| CellId(s)).collect();
        let dag = d.to_explicit();
        let marked = mark_reachable(&dag, &sources);
        let got = build_minor(&dag, &marked)
            .and_then(|m| count_paths(&m))
            .map(|c| c.to_map());
        match got {
            Ok(got) if got == d.enumerate() => {}
            Ok(_) => {
                return Outcome::Fail(format!("dag {dags}: counts differ from enumeration: {d:?}"))
            }
            Err(e) => return Outcome::Fail(format!("dag {dags}: {e}")),
        }
        dags += 1;
    }

    let t = clock.elapsed();
    if t > PATH_ORACLE_TIME_LIMIT {
        return Outcome::Fail(format!(
            "took {:.1} s, limit {:?}",
            t.as_secs_f64(),
            PATH_ORACLE_TIME_LIMIT
        ));
    }
    Outcome::Pass(format!(
        "50 fields ({pairs} saddle pairs), {minors} minors, {dags} DAGs match enumeration, {:.1} s",
        t.as_secs_f64()
    ))
}

fn criterion_3() -> Outcome {
    let direct = count_paths(&merge_split_minor()).map(|c| c.to_map());
    let dag = merge_split_dag();
    let marked = mark_reachable(&dag, &[CellId(0)]);
    let traced = build_minor(&dag, &marked)
        .and_then(|m| count_paths(&m))
        .map(|c| c.to_map());
    let want = BTreeMap::from([((CellId(0), CellId(7)), 4u64)]);
    match (direct, traced) {
        (Ok(a), Ok(b)) if a == want && b == want => {
            Outcome::Pass("merge-split minor and its uncontracted DAG both count 4".into())
        }
        (a, b) => Outcome::Fail(format!("minor gave {a:?}, DAG gave {b:?}")),
    }
}

fn criterion_4(s: &Suite) -> Outcome {
    let mut checked = 0;
    for (name, f, p) in all(s) {
        let [nx, ny, nz] = f.dims().vertex_counts();
        if nx.max(ny).max(nz) > 16 {
            continue;
        }
        let r = validate_gradient(&p.gradient);
        if !r.vpaths_checked {
            return Outcome::Fail(format!("{name}: closed V-path search skipped"));
        }
        if !r.is_valid() {
            return Outcome::Fail(format!(
                "{name}: {} matching violations, closed V-paths {:?}",
                r.matching_violations.len(),
                r.closed_vpaths
            ));
        }
        checked += 1;
    }
    Outcome::Pass(format!(
        "{checked} gradients, no matching violations or closed V-paths"
    ))
}

fn criterion_5(s: &Suite) -> Outcome {
    let mut n = 0;
    for (name, _, p) in all(s) {
        let r = p.complex.boundary_check();
        if !r.is_clean() {
            return Outcome::Fail(format!(
                "{name}: {} violations, first {:?}",
                r.violations.len(),
                r.violations[0]
            ));
        }
        n += 1;
    }
    Outcome::Pass(format!("{n} complexes, zero mod-2 violations"))
}

/// Multiplicity sums of arcs from each saddle down to minima (index 1) or up
/// to maxima (index 2), over saddles not on the domain boundary.
fn degree_failures(m: &MsComplex, dims: GridDims, index: u8) -> (usize, usize) {
    let other = if index == 1 { 0 } else { 3 };
    let sums = m.degree_sums();
    let mut total = 0;
    let mut bad = 0;
    for p in m
        .critical_points
        .iter()
        .filter(|p| p.index == index && !dims.on_boundary(p.cell))
    {
        total += 1;
        if sums.get(&(p.id, other)).copied().unwrap_or(0) != 2 {
            bad += 1;
        }
    }
    (total, bad)
}

fn criterion_6(s: &Suite) -> Outcome {
    let (mut t1, mut b1, mut t2, mut b2) = (0, 0, 0, 0);
    for (_, f, p) in all(s) {
        let (t, b) = degree_failures(&p.complex, f.dims(), 1);
        t1 += t;
        b1 += b;
        let (t, b) = degree_failures(&p.complex, f.dims(), 2);
        t2 += t;
        b2 += b;
    }
    let detail = format!(
        "interior 1-saddles {t1} ({b1} not summing to 2), interior 2-saddles {t2} ({b2} not summing to 2)"
    );
    if b1 == 0 && b2 == 0 {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn msc_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_msc"))
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("smooth64.raw");
    let status = Command::new(msc_bin())
        .args([
            "generate",
            "--kind",
            "random-smooth",
            "--dims",
            "64",
            "64",
            "64",
            "--seed",
            "64",
            "--dtype",
            "f32",
        ])
        .arg("--out")
        .arg(&input)
        .status()
        .unwrap();
    if !status.success() {
        return Outcome::Fail("generator failed".into());
    }
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut outputs = Vec::new();
    for threads in [1, max, max.max(4)] {
        let out = dir.path().join(format!("t{threads}.json"));
        let run = Command::new(msc_bin())
            .arg("--input")
            .arg(&input)
            .args([
                "--dims",
                "64",
                "64",
                "64",
                "--dtype",
                "f32",
                "--threads",
                &threads.to_string(),
            ])
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        if !run.status.success() {
            return Outcome::Fail(format!("--threads {threads} exited with {}", run.status));
        }
        outputs.push((threads, std::fs::read(&out).unwrap()));
    }
    let (_, first) = &outputs[0];
    for (t, o) in &outputs[1..] {
        if o != first {
            return Outcome::Fail(format!("--threads 1 and --threads {t} outputs differ"));
        }
    }
    let threads: Vec<usize> = outputs.iter().map(|(t, _)| *t).collect();
    Outcome::Pass(format!(
        "seeded 64^3 field, threads {threads:?}: {} identical JSON bytes",
        first.len()
    ))
}

fn criterion_8() -> Vec<(String, Outcome)> {
    let datasets = [
        ("Fuel", "fuel_64x64x64_uint8.raw", 64, 783usize),
        ("Neghip", "neghip_64x64x64_uint8.raw", 64, 6193),
        (
            "Hydrogen",
            "hydrogen_atom_128x128x128_uint8.raw",
            128,
            26725,
        ),
    ];
    let dir = env::var_os("MSC_DATA_DIR").map(PathBuf::from);
    datasets
        .iter()
        .map(|&(name, file, n, reference)| {
            let label = format!("{name} {n}^3 vs {reference}");
            let Some(path) = dir.as_ref().map(|d| d.join(file)).filter(|p| p.exists()) else {
                return (
                    label,
                    Outcome::NotRun(format!(
                        "dataset missing; set MSC_DATA_DIR to a directory with {file}"
                    )),
                );
            };
            let dims = GridDims::new(n, n, n).unwrap();
            let f = match VolumeSpec::new(path, dims, Dtype::U8).read() {
                Ok(f) => f,
                Err(e) => return (label, Outcome::Fail(e.to_string())),
            };
            let p = compute_pipeline(
                &f,
                ComputeOptions {
                    dtype: Dtype::U8,
                    ..Default::default()
                },
            )
            .unwrap();
            let total = p.critical.total();
            let dev = (total as f64 - reference as f64) / reference as f64;
            let detail = format!(
                "{total} critical points {:?}, deviation {:+.1}%",
                p.critical.counts(),
                100.0 * dev
            );
            if p.critical.euler() != 1 {
                (
                    label,
                    Outcome::Fail(format!("Euler sum {} ; {detail}", p.critical.euler())),
                )
            } else if dev.abs() <= TABLE1_BAND {
                (label, Outcome::Pass(detail))
            } else {
                // outside the band is reported, not failed
                (
                    label,
                    Outcome::Pass(format!(
                        "{detail}; outside the {:.0}% band, reported",
                        100.0 * TABLE1_BAND
                    )),
                )
            }
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("smooth128.raw");
    let out = dir.path().join("smooth128.json");
    let clock = Instant::now();
    let status = Command::new(msc_bin())
        .args([
            "generate",
            "--kind",
            "random-smooth",
            "--dims",
            "128",
            "128",
            "128",
            "--seed",
            "128",
        ])
        .arg("--out")
        .arg(&input)
        .status()
        .unwrap();
    if !status.success() {
        return Outcome::Fail("generator failed".into());
    }
    let run = Command::new(msc_bin())
        .arg("--input")
        .arg(&input)
        .args(["--dims", "128", "128", "128", "--dtype", "f32"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    let t = clock.elapsed();
    if !run.status.success() {
        return Outcome::Fail(format!("pipeline exited with {}", run.status));
    }
    let table = String::from_utf8_lossy(&run.stderr);
    for line in table.lines() {
        println!("      {line}");
    }
    let stages = [
        "gradient",
        "critical",
        "extrema",
        "reachability",
        "counting",
    ];
    if let Some(missing) = stages
        .iter()
        .find(|s| !table.lines().any(|l| l.starts_with(*s)))
    {
        return Outcome::Fail(format!("stage timing for {missing} not reported"));
    }
    if t > LARGE_FIELD_TIME_LIMIT {
        return Outcome::Fail(format!(
            "took {:.1} s, limit {:?}",
            t.as_secs_f64(),
            LARGE_FIELD_TIME_LIMIT
        ));
    }
    Outcome::Pass(format!(
        "128^3 random-smooth end to end in {:.1} s",
        t.as_secs_f64()
    ))
}

fn report(id: &str, title: &str, outcome: Outcome, failed: &mut usize) {
    let (tag, detail) = match outcome {
        Outcome::Pass(d) => ("PASS", d),
        Outcome::Fail(d) => {
            *failed += 1;
            ("FAIL", d)
        }
        Outcome::NotRun(d) => ("NOT RUN", d),
    };
    println!("[{tag}] {id} {title}: {detail}");
}

fn main() {
    // honour libtest's listing probe so `cargo test -- --list` works
    if env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut failed = 0;
    println!("acceptance criteria");
    let suite = build_suite();
    report(
        "1",
        "Morse-Euler invariant",
        criterion_1(&suite),
        &mut failed,
    );
    report(
        "2",
        "path counts equal path enumeration",
        criterion_2(),
        &mut failed,
    );
    report("3", "merge-split fixture", criterion_3(), &mut failed);
    report("4", "gradient validity", criterion_4(&suite), &mut failed);
    report(
        "5",
        "mod-2 boundary consistency",
        criterion_5(&suite),
        &mut failed,
    );
    report(
        "6",
        "saddle-extremum arc degrees",
        criterion_6(&suite),
        &mut failed,
    );
    report(
        "7",
        "determinism across thread counts",
        criterion_7(),
        &mut failed,
    );
    for (label, outcome) in criterion_8() {
        report(
            "8",
            &format!("reference counts, {label}"),
            outcome,
            &mut failed,
        );
    }
    report("9", "128^3 end-to-end time", criterion_9(), &mut failed);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
