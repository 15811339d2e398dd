//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rfm_core::covop::pairwise_hs_distance;
use rfm_core::depth::{deepest, depth_profile, spatial_depth, Candidate, CandidateSet};
use rfm_core::io::write_rows;
use rfm_core::sim::{
    breakdown_mc, cluster_study, covop_study, efficiency_study, gen_contaminated_gaussian, gen_kraus,
    gen_three_clusters, location_study, scatter_study, ClusterStudy, ContaminatedGaussianSpec,
    CovopStudy, KrausModelSpec, MultivariateStudy, ThreeClusterSpec,
};
use rfm_core::tkm::{itkm, ITkMConfig};
use rfm_core::{CovKernel, Dataset, FuncData, Grid, SymMatrix, VectorObs};

type Check = fn() -> Verdict;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

#[derive(Clone, Copy)]
enum Kind {
    Vector,
    Matrix,
    Kernel,
}

/// Trapezoid weights computed from the grid points.
fn trapezoid(points: &[f64]) -> Vec<f64> {
    let t = points.len();
    (0..t)
        .map(|i| {
            let left = if i > 0 { points[i] - points[i - 1] } else { 0.0 };
            let right = if i + 1 < t { points[i + 1] - points[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

fn oracle_norm(kind: Kind, diff: &[f64], dim: usize, w: &[f64]) -> f64 {
    match kind {
        Kind::Vector => diff.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Kind::Matrix => {
            let mut best = 0.0f64;
            for i in 0..dim {
                let mut s = 0.0;
                for j in 0..dim {
                    s += diff[i * dim + j].abs();
                }
                best = best.max(s);
            }
            best
        }
        Kind::Kernel => {
            let mut s = 0.0;
            for a in 0..dim {
                for b in 0..dim {
                    s += w[a] * w[b] * diff[a * dim + b] * diff[a * dim + b];
                }
            }
            s.sqrt()
        }
    }
}

/// `1 − ‖(1/m) Σ (X_i − x)/‖X_i − x‖‖`, skipping members equal to `x`.
fn oracle_depth(kind: Kind, x: &[f64], members: &[Vec<f64>], dim: usize, w: &[f64]) -> f64 {
    let mut acc = vec![0.0; x.len()];
    for y in members {
        let diff: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let r = oracle_norm(kind, &diff, dim, w);
        if r > 0.0 {
            for (a, d) in acc.iter_mut().zip(&diff) {
                *a += d / r;
            }
        }
    }
    let m = members.len() as f64;
    let mean: Vec<f64> = acc.iter().map(|a| a / m).collect();
    (1.0 - oracle_norm(kind, &mean, dim, w)).max(0.0)
}

fn random_members(rng: &mut ChaCha8Rng, kind: Kind, m: usize, dim: usize) -> Vec<Vec<f64>> {
    let len = match kind {
        Kind::Vector => dim,
        _ => dim * dim,
    };
    (0..m)
        .map(|_| {
            let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
            if !matches!(kind, Kind::Vector) {
                for i in 0..dim {
                    for j in 0..i {
                        v[i * dim + j] = v[j * dim + i];
                    }
                }
            }
            v
        })
        .collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Relative error for depths; values below 1e-3 (exactly 0 when a lone
/// member is probed from outside) are compared on the 1e-3 scale.
fn depth_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-3)
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut argmax_mismatch = 0;
    let kinds = [Kind::Vector, Kind::Matrix, Kind::Kernel];
    for set_idx in 0..200 {
        let kind = kinds[set_idx % 3];
        let m = rng.random_range(1..=50);
        let d = rng.random_range(1..=5);
        let (dim, grid) = match kind {
            Kind::Kernel => {
                let t = d + 1;
                let mut pts: Vec<f64> = (0..t).map(|_| rng.random_range(0.0..1.0)).collect();
                pts.sort_by(f64::total_cmp);
                (t, Some(Arc::new(Grid::new(pts).unwrap())))
            }
            _ => (d, None),
        };
        let w = grid.as_ref().map(|g| trapezoid(g.points())).unwrap_or_default();
        let members = random_members(&mut rng, kind, m, dim);
        let wrap = |v: &Vec<f64>| match kind {
            Kind::Vector => Candidate::Vector(VectorObs::new(v.clone()).unwrap()),
            Kind::Matrix => Candidate::Matrix(SymMatrix::new(dim, v.clone()).unwrap()),
            Kind::Kernel => Candidate::Kernel(CovKernel::new(grid.clone().unwrap(), v.clone()).unwrap()),
        };
        let set = CandidateSet::new(members.iter().map(wrap).collect()).unwrap();

        let expected: Vec<f64> = members.iter().map(|x| oracle_depth(kind, x, &members, dim, &w)).collect();
        for (got, want) in depth_profile(&set).iter().zip(&expected) {
            worst = worst.max(depth_err(*got, *want));
        }
        let probe = random_members(&mut rng, kind, 1, dim).pop().unwrap();
        let got = spatial_depth(&wrap(&probe), &set).unwrap();
        let want = oracle_depth(kind, &probe, &members, dim, &w);
        worst = worst.max(depth_err(got, want));

        let mut best = 0;
        for i in 1..m {
            if expected[i] > expected[best] {
                best = i;
            }
        }
        if deepest(&set).0 != best {
            argmax_mismatch += 1;
        }
    }
    verdict(
        worst <= 1e-12 && argmax_mismatch == 0,
        format!("max rel err {worst:.2e} (limit 1e-12), argmax mismatches {argmax_mismatch}/200"),
    )
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let grid = Arc::new(Grid::uniform(0.0, 1.0, 20).unwrap());
    let w = trapezoid(grid.points());
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a: Vec<f64> = (0..20).map(|_| rng.random_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..20).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x = FuncData::new(grid.clone(), 2, [a.clone(), b.clone()].concat()).unwrap();
        let formula = pairwise_hs_distance(&x).distance(0, 1);
        let mut s = 0.0;
        for i in 0..20 {
            for j in 0..20 {
                let diff = a[i] * a[j] - b[i] * b[j];
                s += w[i] * w[j] * diff * diff;
            }
        }
        worst = worst.max(rel_err(formula, s.sqrt()));
    }
    verdict(worst < 1e-10, format!("max rel err {worst:.2e} (limit 1e-10)"))
}

fn criterion_3() -> Verdict {
    let e = efficiency_study(20, 200, 2000, 7).unwrap();
    verdict(
        (0.55..=0.72).contains(&e.ratio),
        format!("ratio {:.4} (band [0.55, 0.72], 2/pi = {:.4})", e.ratio, 2.0 / std::f64::consts::PI),
    )
}

fn criterion_4() -> Verdict {
    let t = breakdown_mc(30_000, &[5, 150], &[0.45, 0.495, 0.499], 5000, 1).unwrap();
    let checks = [
        (0, 0, 0.0, 0.002, "m=5 p=0.45"),
        (0, 1, 0.082, 0.025, "m=5 p=0.495"),
        (1, 2, 0.678, 0.04, "m=150 p=0.499"),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, j, want, tol, label) in checks {
        let got = t.freq[i][j];
        pass &= (got - want).abs() <= tol;
        parts.push(format!("{label}: {got:.4} (target {want} +/- {tol})"));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_5() -> Verdict {
    let e = location_study(&MultivariateStudy::new(100_000, 100, 0.2, 5, 11)).unwrap();
    let (rfm, rfm1, mle) = (e.rfm.unwrap(), e.rfm1.unwrap(), e.mle.unwrap());
    verdict(
        rfm < 0.1 && rfm1 < 0.05 && mle > 10.0,
        format!(
            "mean squared errors: RFM {rfm:.3e} (< 0.1), RFM1 {rfm1:.3e} (< 0.05), MLE {mle:.1} (> 10); ROB {:.3e}, avROB {:.3e}",
            e.rob.unwrap(),
            e.avrob.unwrap()
        ),
    )
}

fn criterion_6() -> Verdict {
    let e = scatter_study(&MultivariateStudy::new(100_000, 100, 0.2, 5, 11)).unwrap();
    let (rfm, mle) = (e.rfm.unwrap(), e.mle.unwrap());
    verdict(
        rfm < 1.0 && mle > 1e3,
        format!(
            "mean squared row-sum errors: RFM {rfm:.4} (< 1.0), MLE {mle:.3e} (> 1e3); ROB {:.4}",
            e.rob.unwrap()
        ),
    )
}

fn criterion_7() -> Verdict {
    let e = covop_study(&CovopStudy::new(50_000, 20, 0.2, 0.25, 5, 13)).unwrap();
    let (rfm, avrob, mle) = (e.hs.rfm.unwrap(), e.hs.avrob.unwrap(), e.hs.mle.unwrap());
    let g = &e.grid;
    verdict(
        rfm < 3.0 && mle > 20.0 && rfm < avrob,
        format!(
            "mean squared HS errors: RFM {rfm:.4} (< 3.0), MLE {mle:.4} (> 20), avROB {avrob:.4} (> RFM); \
             root: RFM {:.4}, MLE {:.4}, avROB {:.4}; grid Frobenius diagnostics: RFM {:.3}, MLE {:.3}, avROB {:.3}",
            rfm.sqrt(),
            mle.sqrt(),
            avrob.sqrt(),
            g.rfm.unwrap(),
            g.mle.unwrap(),
            g.avrob.unwrap()
        ),
    )
}

/// Best trimmed within-cluster mean squared distance over every trim set
/// and every 2-partition of the retained points.
fn exhaustive_itkm(x: &Dataset, trim: usize) -> f64 {
    let n = x.n();
    let d = x.d();
    let keep = n - trim;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != keep {
            continue;
        }
        let kept: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        for split in 0u32..(1 << (keep - 1)) {
            let mut sse = 0.0;
            for side in 0..2 {
                let members: Vec<usize> = kept
                    .iter()
                    .enumerate()
                    .filter(|(pos, _)| ((split >> pos) & 1) as usize == side)
                    .map(|(_, &i)| i)
                    .collect();
                if members.is_empty() {
                    continue;
                }
                for c in 0..d {
                    let mean = members.iter().map(|&i| x.row(i)[c]).sum::<f64>() / members.len() as f64;
                    sse += members.iter().map(|&i| (x.row(i)[c] - mean).powi(2)).sum::<f64>();
                }
            }
            best = best.min(sse / keep as f64);
        }
    }
    best
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let (mut matched, mut below) = (0, 0);
    for inst in 0..50u64 {
        let d = if inst % 2 == 0 { 1 } else { 2 };
        let v: Vec<f64> = (0..8 * d).map(|_| rng.random_range(-10.0..10.0)).collect();
        let x = Dataset::new(8, d, v).unwrap();
        let opt = exhaustive_itkm(&x, 2);
        let cfg = ITkMConfig { n_starts: 50, max_iter: 100, seed: inst };
        let got = itkm(&x, 2, 0.25, &cfg).unwrap().objective;
        let tol = 1e-9 * opt.max(1.0);
        if (got - opt).abs() <= tol {
            matched += 1;
        } else if got < opt - tol {
            below += 1;
        }
    }
    verdict(
        matched >= 48 && below == 0,
        format!("optimum reached in {matched}/50 (need >= 48), below optimum {below}"),
    )
}

fn criterion_9() -> Verdict {
    let e = cluster_study(&ClusterStudy::new(10, 10, 0.35, 0.1, 5, 17)).unwrap();
    verdict(
        (0.09..=0.18).contains(&e.me2) && (0.08..=0.17).contains(&e.me1),
        format!("ME2 {:.4} (band [0.09, 0.18]), ME1 {:.4} (band [0.08, 0.17])", e.me2, e.me1),
    )
}

fn write_inputs(dir: &Path) {
    let (x, _) = gen_contaminated_gaussian(&ContaminatedGaussianSpec::standard(20_000, 0.2, 5)).unwrap();
    write_rows(std::fs::File::create(dir.join("mv.csv")).unwrap(), x.values(), x.d()).unwrap();

    let (f, _) = gen_kraus(&KrausModelSpec::new(20, 4000, 0.2, 6)).unwrap();
    let mut file = std::fs::File::create(dir.join("func.csv")).unwrap();
    write_rows(&mut file, f.grid().points(), f.grid().len()).unwrap();
    write_rows(&mut file, f.values(), f.grid().len()).unwrap();

    let (c, _) = gen_three_clusters(&ThreeClusterSpec { fac: 6, seed: 7 }).unwrap();
    write_rows(std::fs::File::create(dir.join("clusters.csv")).unwrap(), c.values(), c.d()).unwrap();
}

fn criterion_10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (mv, func, clusters) = (p("mv.csv"), p("func.csv"), p("clusters.csv"));
    let commands: Vec<Vec<&str>> = vec![
        vec!["estimate-location", "--input", &mv, "--m", "20", "--seed", "3"],
        vec!["estimate-location", "--input", &mv, "--m", "20", "--fuse", "deepest40"],
        vec!["estimate-scatter", "--input", &mv, "--m", "20", "--seed", "3"],
        vec!["estimate-covop", "--input", &func, "--m", "8", "--seed", "4"],
        vec!["cluster", "--input", &clusters, "--m", "6", "--alpha1", "0.35", "--alpha2", "0.1", "--seed", "5"],
        vec!["simulate-location", "--n", "20000", "--m", "20", "--reps", "2", "--seed", "6"],
        vec!["simulate-scatter", "--n", "20000", "--m", "20", "--reps", "2", "--seed", "6"],
        vec!["simulate-covop", "--n", "4000", "--m", "8", "--reps", "2", "--seed", "6"],
        vec!["simulate-cluster", "--fac", "4", "--m", "4", "--reps", "2", "--seed", "6"],
        vec!["breakdown", "--n", "3000", "--reps", "500", "--seed", "6"],
        vec!["efficiency", "--reps", "200", "--seed", "6"],
        vec!["plan-split", "--n", "100000", "--a", "1", "--b", "2"],
    ];
    let mut differing = Vec::new();
    for (fmt, args) in ["csv", "json"].iter().flat_map(|f| commands.iter().map(move |c| (f, c))) {
        let run = |threads: &str| {
            let mut full = vec!["rfm", "--threads", threads, "--format", fmt];
            full.extend(args.iter().copied());
            rfm_cli::execute(full)
        };
        let (one, eight) = (run("1"), run("8"));
        if one.code != 0 || eight.code != 0 || one.stdout != eight.stdout {
            differing.push(format!("{} ({fmt}): {}{}", args[0], one.stderr.trim(), eight.stderr.trim()));
        }
    }
    verdict(
        differing.is_empty(),
        format!("{} runs compared at 1 vs 8 threads; differing: {:?}", commands.len() * 2, differing),
    )
}

fn main() {
    let criteria: [(&str, Duration, Check); 10] = [
        ("depth oracle", Duration::from_secs(5), criterion_1),
        ("rank-one distance oracle", Duration::from_secs(2), criterion_2),
        ("median-of-medians efficiency", Duration::from_secs(60), criterion_3),
        ("breakdown table", Duration::from_secs(300), criterion_4),
        ("location fusion", Duration::from_secs(600), criterion_5),
        ("scatter fusion", Duration::from_secs(600), criterion_6),
        ("covariance operator", Duration::from_secs(900), criterion_7),
        ("trimmed k-means exhaustive", Duration::from_secs(120), criterion_8),
        ("clustering matching error", Duration::from_secs(300), criterion_9),
        ("parallel determinism", Duration::from_secs(300), criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed < *limit;
        println!(
            "criterion {:>2} {}: {name}: {} [{:.2} s, limit {} s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
