//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rhochart::builder::{build_commutant, build_density, jacobian_rank, CommutantSpec, DensityChart};
use rhochart::charts::{fit_chart, EigenChart};
use rhochart::decompose::{decompose, reconstruct};
use rhochart::degeneracy::{all_partitions, DegeneracyPattern};
use rhochart::numerics::{phase, random_unitary, ComplexMatrix, ComplexScalar};
use rhochart::words::{normalize, Atom, PhaseAtom, Word, WordForm};
use rhochart::Error;

const REWRITE_TOL: f64 = 1e-12;
const ROUND_TRIP_TOL: f64 = 1e-10;
const INVARIANCE_TOL: f64 = 1e-12;
const COMMUTATOR_TOL: f64 = 1e-13;
const WORKED_EXAMPLE_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-15;
const FIT_TOL: f64 = 1e-12;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn pattern(m: &[usize]) -> DegeneracyPattern {
    DegeneracyPattern::from_multiplicities(m).unwrap()
}

fn counting_golden_values() -> Outcome {
    let cases = [(vec![2, 1, 1], 7), (vec![3, 1], 3), (vec![1, 1, 1, 1], 9)];
    let mut bad = Vec::new();
    for (m, want) in &cases {
        let got = pattern(m).internal_params();
        if got != *want {
            bad.push(format!("{m:?}: {got} != {want}"));
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { "7, 3, 9".into() } else { bad.join("; ") })
}

fn formula_sweep() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for n in 2..=6 {
        for m in all_partitions(n) {
            let p = pattern(&m);
            let sq = ((n - 1) * (n - 1)) as i64;
            if p.internal_params() + p.redundant_params() as i64 != sq
                || p.redundant_params() != 2 * p.degrees_of_degeneracy()
            {
                bad.push(format!("{m:?}"));
            }
            checked += 1;
        }
    }
    outcome(bad.is_empty(), format!("{checked} partitions; failures: {bad:?}"))
}

fn jacobian_oracle(rng: &mut ChaCha8Rng) -> Outcome {
    let mut total = 0;
    let mut bad = Vec::new();
    for n in 2..=5 {
        for m in all_partitions(n) {
            let p = pattern(&m);
            let sum_sq: usize = m.iter().map(|d| d * d).sum();
            for _ in 0..3 {
                let chart = DensityChart::random_interior(p.clone(), 0.1, rng);
                total += 1;
                match jacobian_rank(&chart, false) {
                    Ok(r) if r == p.orbit_dim() && r == n * n - sum_sq => {}
                    other => bad.push(format!("{m:?}: {other:?} vs {}", p.orbit_dim())),
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{}/{total} charts at full rank; failures: {bad:?}", total - bad.len()))
}

fn random_word(rng: &mut ChaCha8Rng) -> Word {
    let n = rng.random_range(2..=6);
    let len = rng.random_range(0..=20);
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    pairs.shuffle(rng);
    // half the words may repeat rotation pairs, which makes them unreachable
    let repeat = rng.random_bool(0.5);
    let mut atoms = Vec::with_capacity(len);
    for _ in 0..len {
        let want_rotation = rng.random_bool(0.5);
        let pair = if !want_rotation {
            None
        } else if repeat {
            Some(pairs[rng.random_range(0..pairs.len())])
        } else {
            pairs.pop()
        };
        match pair {
            Some((a, b)) => {
                let (a, b) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
                atoms.push(Atom::rotation(a, b, rng.random_range(-7.0..7.0)));
            }
            None => {
                let k = rng.random_range(1..=n);
                let mut idx: Vec<usize> = (0..n).collect();
                idx.shuffle(rng);
                let deltas = idx[..k].iter().map(|&i| (i, rng.random_range(-10.0..10.0))).collect();
                atoms.push(Atom::Phase(PhaseAtom::new(deltas)));
            }
        }
    }
    Word::new(n, atoms).unwrap()
}

fn rewrite_preservation(rng: &mut ChaCha8Rng) -> Outcome {
    let (mut reachable, mut unreachable, mut worst) = (0, 0, 0.0f64);
    let mut bad = Vec::new();
    for i in 0..1000 {
        let w = random_word(rng);
        match normalize(&w, WordForm::OnePhaseOneRotation) {
            Ok(out) => {
                reachable += 1;
                let d = w.evaluate().max_abs_diff(&out.evaluate()).unwrap();
                worst = worst.max(d);
                if !(d < REWRITE_TOL) || !out.is_opor() {
                    bad.push(i);
                }
            }
            Err(Error::Unreachable(_)) if !w.has_distinct_pairs() => unreachable += 1,
            Err(_) => bad.push(i),
        }
    }
    outcome(
        bad.is_empty() && reachable > 0,
        format!("{reachable} normalized, {unreachable} unreachable; max diff {worst:.2e}; failures {bad:?}"),
    )
}

fn km_phase_count(rng: &mut ChaCha8Rng) -> Outcome {
    let mut bad = Vec::new();
    let mut counts = Vec::new();
    for n in 3..=6 {
        let want = (n - 1) * (n - 2) / 2;
        for trial in 0..50 {
            let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
            // the first trial uses the plain sequence R12 R23 … then the rest
            if trial > 0 {
                pairs.shuffle(rng);
            }
            let full = |rng: &mut ChaCha8Rng| {
                Atom::phase_full(&(0..n).map(|_| rng.random_range(0.0..TAU)).collect::<Vec<_>>())
            };
            let mut atoms = vec![full(rng)];
            for &(a, b) in &pairs {
                atoms.push(Atom::rotation(a, b, rng.random_range(0.0..TAU)));
                atoms.push(full(rng));
            }
            let w = Word::new(n, atoms).unwrap();
            let km = normalize(&w, WordForm::Km).unwrap();
            let internal = km.count_phases().map(|c| c.internal);
            let d = w.evaluate().max_abs_diff(&km.evaluate()).unwrap();
            if internal != Ok(want) || !(d < REWRITE_TOL) {
                bad.push(format!("n={n} trial {trial}: {internal:?}, diff {d:.2e}"));
            }
            if trial == 0 {
                counts.push(internal.unwrap_or(usize::MAX));
            }
        }
    }
    outcome(bad.is_empty(), format!("internal phases {counts:?}; failures {bad:?}"))
}

fn in_canonical_ranges(w: &Word) -> bool {
    w.atoms().iter().all(|a| match a {
        Atom::Rotation(r) => (0.0..=FRAC_PI_2).contains(&r.theta),
        Atom::Phase(p) => p.deltas().values().all(|d| (0.0..TAU).contains(d)),
    })
}

fn surjectivity(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for n in 2..=8 {
        for i in 0..500 {
            let u = random_unitary(n, rng);
            match decompose(&u) {
                Ok(r) => {
                    let err = reconstruct(&r).max_abs_diff(&u).unwrap();
                    worst = worst.max(err);
                    if !(err < ROUND_TRIP_TOL) || !r.word.is_opor() || !in_canonical_ranges(&r.word) {
                        bad.push(format!("n={n} #{i}: {err:.2e}"));
                    }
                }
                Err(e) => bad.push(format!("n={n} #{i}: {e}")),
            }
        }
    }
    outcome(bad.is_empty(), format!("3500 unitaries, max error {worst:.2e}; failures {bad:?}"))
}

fn class_projectors(p: &DegeneracyPattern) -> Vec<ComplexMatrix> {
    p.classes()
        .iter()
        .map(|class| {
            let diag: Vec<f64> = (0..p.n()).map(|i| if class.contains(&i) { 1.0 } else { 0.0 }).collect();
            ComplexMatrix::real_diagonal(&diag)
        })
        .collect()
}

fn commutant_invariance(rng: &mut ChaCha8Rng) -> Outcome {
    let (mut worst_rho, mut worst_comm) = (0.0f64, 0.0f64);
    let mut count = 0;
    for n in 2..=5 {
        let parts = all_partitions(n);
        for _ in 0..200 {
            let p = pattern(&parts[rng.random_range(0..parts.len())]);
            let chart = DensityChart::random(p.clone(), rng);
            let spec = CommutantSpec::random(p.clone(), rng);
            let d = chart.eigen().eigen_matrix();
            let c = build_commutant(&spec);
            let u = &chart.kept_word().evaluate() * &c;
            let rho = &(&u * &d) * &u.adjoint();
            worst_rho = worst_rho.max(rho.max_abs_diff(&build_density(&chart)).unwrap());
            // commuting with every class projector means commuting with
            // every diagonal that is constant on the classes
            let mut diagonals = class_projectors(&p);
            diagonals.push(d);
            for dm in diagonals {
                let comm = c.commutator(&dm).unwrap();
                worst_comm = worst_comm.max(comm.max_abs_diff(&ComplexMatrix::zeros(n)).unwrap());
            }
            count += 1;
        }
    }
    outcome(
        worst_rho < INVARIANCE_TOL && worst_comm < COMMUTATOR_TOL,
        format!("{count} triples; max ρ change {worst_rho:.2e}, max commutator {worst_comm:.2e}"),
    )
}

fn cx(re: f64) -> ComplexScalar {
    ComplexScalar::new(re, 0.0)
}

fn product(factors: &[ComplexMatrix]) -> ComplexMatrix {
    factors[1..].iter().fold(factors[0].clone(), |acc, f| &acc * f)
}

fn real3(rows: [[f64; 3]; 3]) -> ComplexMatrix {
    ComplexMatrix::from_fn(3, |i, j| cx(rows[i][j]))
}

fn r31(t: f64) -> ComplexMatrix {
    let (s, c) = t.sin_cos();
    real3([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
}

fn r23(t: f64) -> ComplexMatrix {
    let (s, c) = t.sin_cos();
    real3([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])
}

fn r12(t: f64) -> ComplexMatrix {
    let (s, c) = t.sin_cos();
    real3([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
}

fn p_at(k: usize, delta: f64) -> ComplexMatrix {
    let mut d = [cx(1.0); 3];
    d[k] = phase(delta);
    ComplexMatrix::diagonal(&d)
}

fn conj(factors: &[ComplexMatrix], d: &ComplexMatrix) -> ComplexMatrix {
    let u = product(factors);
    &(&u * d) * &u.adjoint()
}

fn worked_example(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let eta: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..TAU)).collect();
        let q = ComplexMatrix::phases(&eta);
        let (d1, t12) = (rng.random_range(0.0..TAU), rng.random_range(0.0..=FRAC_PI_2));

        // λ1 = λ2: kept blocks (3,1), (2,3)
        let chart = DensityChart::random(pattern(&[2, 1]), rng);
        let b = chart.unitary_params();
        let (d3, t31, d2, t23) = (b[0].delta, b[0].theta, b[1].delta, b[1].theta);
        let th = chart.eigen().angles()[0];
        let (st2, ct2) = (th.sin().powi(2), th.cos().powi(2));
        let d = ComplexMatrix::real_diagonal(&[st2 / 2.0, st2 / 2.0, ct2]);
        let displayed = product(&[
            p_at(2, d3),
            r31(t31),
            p_at(1, d2),
            r23(t23),
            d.clone(),
            r23(t23).adjoint(),
            p_at(1, -d2),
            r31(t31).adjoint(),
            p_at(2, -d3),
        ]);
        let full = conj(&[p_at(2, d3), r31(t31), p_at(1, d2), r23(t23), p_at(0, d1), r12(t12), q.clone()], &d);
        let rho = build_density(&chart);
        worst = worst.max(rho.max_abs_diff(&displayed).unwrap());
        worst = worst.max(rho.max_abs_diff(&full).unwrap());

        // λ2 = λ3: kept blocks (3,1), (1,2)
        let chart = DensityChart::random(pattern(&[1, 2]), rng);
        let b = chart.unitary_params();
        let (d3, t31, d1, t12) = (b[0].delta, b[0].theta, b[1].delta, b[1].theta);
        let (d2, t23) = (rng.random_range(0.0..TAU), rng.random_range(0.0..=FRAC_PI_2));
        let th = chart.eigen().angles()[0];
        let (st2, ct2) = (th.sin().powi(2), th.cos().powi(2));
        let d = ComplexMatrix::real_diagonal(&[st2, ct2 / 2.0, ct2 / 2.0]);
        // written out with e^{-iδ₁} on the left of R₁₂, so the chart's δ₁
        // enters with a flipped sign; the right factor is its conjugate
        let shown = -d1;
        let displayed = product(&[
            p_at(2, d3),
            r31(t31),
            p_at(0, -shown),
            r12(t12),
            d.clone(),
            r12(t12).adjoint(),
            p_at(0, shown),
            r31(t31).adjoint(),
            p_at(2, -d3),
        ]);
        let full = conj(&[p_at(2, d3), r31(t31), p_at(0, d1), r12(t12), p_at(1, d2), r23(t23), q], &d);
        let rho = build_density(&chart);
        worst = worst.max(rho.max_abs_diff(&displayed).unwrap());
        worst = worst.max(rho.max_abs_diff(&full).unwrap());
    }
    outcome(worst < WORKED_EXAMPLE_TOL, format!("100 charts, max entry difference {worst:.2e}"))
}

fn eigen_charts(rng: &mut ChaCha8Rng) -> Outcome {
    let (mut worst_trace, mut min_eig, mut worst_fit) = (0.0f64, f64::INFINITY, 0.0f64);
    let mut unequal = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let parts = all_partitions(n);
        let mut m = parts[rng.random_range(0..parts.len())].clone();
        m.shuffle(rng);
        let chart = EigenChart::random(pattern(&m), rng);
        let values = chart.eigenvalues();
        worst_trace = worst_trace.max((values.iter().sum::<f64>() - 1.0).abs());
        min_eig = values.iter().copied().fold(min_eig, f64::min);
        for class in chart.pattern().classes() {
            if class.iter().any(|&i| values[i].to_bits() != values[class[0]].to_bits()) {
                unequal += 1;
            }
        }
        match fit_chart(&values, chart.pattern()) {
            Ok(fitted) => {
                for (a, b) in fitted.eigenvalues().iter().zip(&values) {
                    worst_fit = worst_fit.max((a - b).abs());
                }
            }
            Err(_) => worst_fit = f64::INFINITY,
        }
    }
    outcome(
        worst_trace <= TRACE_TOL && min_eig >= 0.0 && unequal == 0 && worst_fit < FIT_TOL,
        format!(
            "trace error {worst_trace:.2e}, min eigenvalue {min_eig:.2e}, unequal classes {unequal}, fit error {worst_fit:.2e}"
        ),
    )
}

fn main() -> ExitCode {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let second = Duration::from_secs(1);
    let minute = Duration::from_secs(60);
    let criteria: Vec<(&str, Duration, Box<dyn FnOnce(&mut ChaCha8Rng) -> Outcome>)> = vec![
        ("counting golden values", second, Box::new(|_| counting_golden_values())),
        ("formula consistency sweep", second, Box::new(|_| formula_sweep())),
        ("jacobian rank oracle", minute, Box::new(jacobian_oracle)),
        ("rewrite preservation", minute, Box::new(rewrite_preservation)),
        ("km phase count", minute, Box::new(km_phase_count)),
        ("surjectivity round trip", minute, Box::new(surjectivity)),
        ("commutant invariance", minute, Box::new(commutant_invariance)),
        ("worked n=3 reproduction", minute, Box::new(worked_example)),
        ("eigen chart", minute, Box::new(eigen_charts)),
    ];
    let mut failures = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = run(&mut rng);
        let elapsed = start.elapsed();
        let passed = result.passed && elapsed < limit;
        if !passed {
            failures += 1;
        }
        println!(
            "{} [{}] {name}: {} ({:.2?})",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            elapsed
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
