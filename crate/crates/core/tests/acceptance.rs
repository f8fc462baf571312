//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.
//!
//! Pass a substring as the first argument to run only matching criteria
//! (`cargo test --test acceptance -- fit`). The process exits non-zero on a
//! FAIL only when `INJNORM_ACCEPTANCE_STRICT` is set.

use std::time::{Duration, Instant};

use statrs::distribution::{ContinuousCDF, StudentsT};

use injnorm::bench::{run_experiment, ExperimentConfig, ResultRecord};
use injnorm::candidate::ProductCandidate;
use injnorm::fit::{fit_mps_surface, fit_sqrt_inverse, FitModel};
use injnorm::random::{sample, ModelKind, ModelSpec, Seed};
use injnorm::states::{build_antisym, build_dicke, gme_antisym, gme_dicke, AntisymSpec, DickeSpec};
use injnorm::{
    estimate_injective_norm, gradient, loss, operator_norm_order2, Algorithm, Field,
    OptimizerConfig,
};

/// Symmetrized real order-3 row of the published scaling fit.
const SYM_REAL_3: [f64; 2] = [2.298387, -1.282205];
const SYM_REAL_3_ASYMPTOTE: f64 = 2.343334;
const SCALING_ROWS: [[f64; 2]; 8] = [
    [2.036622, -0.778882],
    [2.025294, -0.707102],
    [2.877074, -1.359782],
    [2.880638, -1.410324],
    [2.298387, -1.282205],
    [2.299760, -1.011110],
    [4.005698, -2.109307],
    [4.012523, -2.203664],
];
const MPS_WITHOUT_TI: [f64; 6] = [
    1.69994199,
    -0.03882001,
    -0.82983861,
    -0.36124267,
    1.31707097,
    -1.45831905,
];
const MPS_WITH_TI: [f64; 6] = [
    1.65580515,
    -0.0429994,
    -0.54116976,
    -0.2760215,
    1.28341448,
    -2.24584066,
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn minutes(t: Duration) -> f64 {
    t.as_secs_f64() / 60.0
}

/// p-value of the one-sided paired t-test for mean(a − b) > 0.
fn paired_greater_p(a: &[f64], b: &[f64]) -> f64 {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len() as f64;
    let m = mean(&diffs);
    let var = diffs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return if m > 0.0 { 0.0 } else { 1.0 };
    }
    let t = m / (var / n).sqrt();
    1.0 - StudentsT::new(0.0, 1.0, n - 1.0).expect("n ≥ 2").cdf(t)
}

fn experiment(
    kind: ModelKind,
    field: Field,
    d_grid: Vec<usize>,
    q_grid: Vec<usize>,
) -> ExperimentConfig {
    let q = q_grid.first().copied();
    let mut spec = ModelSpec::new(kind, field, 3, d_grid[0]);
    spec.q = q.map(Into::into);
    let mut cfg = ExperimentConfig::new(spec);
    cfg.d_grid = d_grid;
    cfg.q_grid = q_grid;
    cfg.samples = 20;
    cfg.seed = 20240611;
    cfg
}

fn column(
    rows: &[ResultRecord],
    algorithm: Algorithm,
    f: impl Fn(&ResultRecord) -> Option<f64>,
) -> Vec<f64> {
    let mut picked: Vec<&ResultRecord> = rows
        .iter()
        .filter(|r| r.algorithm == algorithm.as_str())
        .collect();
    picked.sort_by_key(|r| r.sample_index);
    picked
        .iter()
        .map(|r| f(r).expect("estimate present"))
        .collect()
}

fn order_two_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for field in [Field::Real, Field::Complex] {
        for i in 0..50u64 {
            let d = 4 + (i as usize * 60) / 49;
            let t = sample(
                &ModelSpec::new(ModelKind::Gaussian, field, 2, d),
                Seed(31),
                i,
            )
            .unwrap();
            let oracle = operator_norm_order2(&t).unwrap();
            for alg in [Algorithm::Ngd, Algorithm::Als] {
                let cfg = OptimizerConfig::new(alg).with_seed(Seed(32).derive(&[i]));
                let e = estimate_injective_norm(&t, &cfg).unwrap();
                worst = worst.max(rel(e.injective_norm, oracle));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-6 && elapsed < Duration::from_secs(300),
        format!(
            "max relative error {worst:.2e}, {:.1} min",
            minutes(elapsed)
        ),
    )
}

fn deterministic_states() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    // symmetric product states are orthogonal to antisymmetric tensors, so
    // only the general-product algorithms apply here
    for alg in [Algorithm::Ngd, Algorithm::Als] {
        let cfg = OptimizerConfig::new(alg).with_seed(41u64);
        let w = build_dicke(&DickeSpec::new(3, 2, vec![1, 2]).unwrap()).unwrap();
        let w_err = (estimate_injective_norm(&w, &cfg).unwrap().normalized - 2.0 / 3.0).abs();
        let mut worst_bits: f64 = 0.0;
        for n in 2..=4 {
            let s = AntisymSpec::new(n, n).unwrap();
            let e = estimate_injective_norm(&build_antisym(&s).unwrap(), &cfg).unwrap();
            worst_bits = worst_bits.max((e.gme_bits - gme_antisym(&s).unwrap()).abs());
        }
        for s in DickeSpec::all(10, 2) {
            let e = estimate_injective_norm(&build_dicke(&s).unwrap(), &cfg).unwrap();
            worst_bits = worst_bits.max((e.gme_bits - gme_dicke(&s).unwrap()).abs());
        }
        pass &= w_err <= 1e-4 && worst_bits <= 1e-3;
        notes.push(format!("{alg}: W {w_err:.1e}, bits {worst_bits:.1e}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(600);
    outcome(
        pass,
        format!("{}; {:.1} min", notes.join("; "), minutes(elapsed)),
    )
}

fn symmetrized_asymptote() -> Outcome {
    let start = Instant::now();
    let grid = vec![16, 25, 36, 49, 64, 100];
    let cfg = experiment(
        ModelKind::GaussianSymmetrized,
        Field::Real,
        grid.clone(),
        vec![],
    );
    let rows = run_experiment(&cfg).unwrap();
    let points: Vec<(f64, f64)> = grid
        .iter()
        .map(|&d| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.d == d)
                .filter_map(|r| r.injective_estimate)
                .collect();
            (d as f64, mean(&v))
        })
        .collect();
    let f = fit_sqrt_inverse(&points).unwrap();
    let c1_err = rel(f.constants[0], SYM_REAL_3_ASYMPTOTE);
    let point_errs: Vec<f64> = points
        .iter()
        .map(|&(d, y)| rel(y, FitModel::SqrtInverse.evaluate(&SYM_REAL_3, d, f64::NAN)))
        .collect();
    let worst = point_errs.iter().copied().fold(0.0, f64::max);
    let means: Vec<String> = points.iter().map(|(d, y)| format!("{d}:{y:.4}")).collect();
    outcome(
        c1_err <= 0.02 && worst <= 0.05,
        format!(
            "C1 {:.4} ({:.2}% from asymptote), C2 {:.4}, worst point {:.2}% [{}], {:.1} min",
            f.constants[0],
            100.0 * c1_err,
            f.constants[1],
            100.0 * worst,
            means.join(" "),
            minutes(start.elapsed())
        ),
    )
}

fn algorithm_means(normalize: bool) -> (Vec<Vec<f64>>, Duration) {
    let start = Instant::now();
    let mut cfg = experiment(
        ModelKind::GaussianSymmetrized,
        Field::Real,
        vec![64],
        vec![],
    );
    cfg.algorithms = Algorithm::ALL.to_vec();
    cfg.normalize_input = normalize;
    let rows = run_experiment(&cfg).unwrap();
    let cols = Algorithm::ALL
        .iter()
        .map(|&a| column(&rows, a, |r| r.injective_estimate))
        .collect();
    (cols, start.elapsed())
}

fn algorithm_ordering() -> Outcome {
    let (cols, elapsed) = algorithm_means(false);
    let [ngd, sgd, als, pim] = [&cols[0], &cols[1], &cols[2], &cols[3]];
    let close = rel(mean(ngd), mean(sgd)) <= 0.01;
    let ps = [
        paired_greater_p(ngd, als),
        paired_greater_p(ngd, pim),
        paired_greater_p(sgd, als),
        paired_greater_p(sgd, pim),
    ];
    let significant = ps.iter().all(|&p| p < 0.05);
    outcome(
        close && significant,
        format!(
            "means ngd {:.4} sgd {:.4} als {:.4} pim {:.4}; p(ngd>als) {:.3} p(ngd>pim) {:.3} p(sgd>als) {:.3} p(sgd>pim) {:.3}; {:.1} min",
            mean(ngd),
            mean(sgd),
            mean(als),
            mean(pim),
            ps[0],
            ps[1],
            ps[2],
            ps[3],
            minutes(elapsed)
        ),
    )
}

fn normalized_parity() -> Outcome {
    let (cols, elapsed) = algorithm_means(true);
    let means: Vec<f64> = cols.iter().map(|c| mean(c)).collect();
    let hi = means.iter().copied().fold(f64::MIN, f64::max);
    let lo = means.iter().copied().fold(f64::MAX, f64::min);
    let spread = hi / lo - 1.0;
    outcome(
        spread <= 0.01,
        format!(
            "means ngd {:.5} sgd {:.5} als {:.5} pim {:.5}; spread {:.2}%; {:.1} min",
            means[0],
            means[1],
            means[2],
            means[3],
            100.0 * spread,
            minutes(elapsed)
        ),
    )
}

fn symmetrization_reduces_entanglement() -> Outcome {
    let start = Instant::now();
    let mut out = Vec::new();
    for kind in [ModelKind::Gaussian, ModelKind::GaussianSymmetrized] {
        let rows = run_experiment(&experiment(kind, Field::Complex, vec![50], vec![])).unwrap();
        out.push(mean(&column(&rows, Algorithm::Ngd, |r| {
            r.normalized_estimate
        })));
    }
    outcome(
        out[1] >= out[0],
        format!(
            "normalized: symmetrized {:.5}, plain {:.5}; {:.1} min",
            out[1],
            out[0],
            minutes(start.elapsed())
        ),
    )
}

fn mps_norms_and_limits() -> Outcome {
    let start = Instant::now();
    let spec = ModelSpec::mps(false, Field::Real, 3, 10, 10);
    let norm2 = (0..100)
        .map(|i| sample(&spec, Seed(51), i).unwrap().norm_sqr())
        .sum::<f64>()
        / 100.0;
    let norm_ok = rel(norm2, 8.0) <= 0.10;
    let mut pass = norm_ok;
    let mut notes = vec![format!("mean ‖X‖² {norm2:.3}")];
    for (mps, dense) in [
        (ModelKind::Mps, ModelKind::Gaussian),
        (
            ModelKind::MpsTranslationInvariant,
            ModelKind::GaussianCyclic,
        ),
    ] {
        let mps_rows =
            run_experiment(&experiment(mps, Field::Complex, vec![10], vec![64])).unwrap();
        let dense_rows =
            run_experiment(&experiment(dense, Field::Complex, vec![10], vec![])).unwrap();
        let m = mean(&column(&mps_rows, Algorithm::Ngd, |r| {
            r.normalized_estimate
        }));
        let g = mean(&column(&dense_rows, Algorithm::Ngd, |r| {
            r.normalized_estimate
        }));
        pass &= rel(m, g) <= 0.05;
        notes.push(format!(
            "{mps} q=64 {m:.4} vs {dense} {g:.4} ({:.2}%)",
            100.0 * rel(m, g)
        ));
    }
    notes.push(format!("{:.1} min", minutes(start.elapsed())));
    outcome(pass, notes.join("; "))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn fit_exactness() -> Outcome {
    let ds = [4.0, 9.0, 16.0, 25.0, 36.0, 49.0, 64.0, 100.0];
    let mut worst: f64 = 0.0;
    let synthetic: [[f64; 2]; 2] = [[1.5, 0.25], [-3.0, 7.0]];
    for c in synthetic.iter().chain(&SCALING_ROWS) {
        let pts: Vec<(f64, f64)> = ds
            .iter()
            .map(|&d| (d, FitModel::SqrtInverse.evaluate(c, d, f64::NAN)))
            .collect();
        worst = worst.max(max_abs_diff(&fit_sqrt_inverse(&pts).unwrap().constants, c));
    }
    let dq: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0, 32.0]
        .iter()
        .flat_map(|&d| [2.0, 4.0, 8.0, 16.0, 32.0, 64.0].map(move |q| (d, q)))
        .collect();
    let synthetic: [f64; 6] = [1.0, 0.5, -0.25, 0.125, 0.75, -0.5];
    for c in [synthetic, MPS_WITHOUT_TI, MPS_WITH_TI] {
        let pts: Vec<(f64, f64, f64)> = dq
            .iter()
            .map(|&(d, q)| (d, q, FitModel::MpsSurface.evaluate(&c, d, q)))
            .collect();
        worst = worst.max(max_abs_diff(&fit_mps_surface(&pts).unwrap().constants, &c));
    }
    outcome(worst <= 1e-8, format!("max constant error {worst:.2e}"))
}

fn gradient_correctness() -> Outcome {
    use rand::{Rng, SeedableRng};
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for case in 0..20u64 {
        let field = if case < 10 {
            Field::Real
        } else {
            Field::Complex
        };
        let n = 2 + (case % 2) as usize;
        let d = 2 + (case / 2 % 4) as usize;
        let psi = sample(
            &ModelSpec::new(ModelKind::Gaussian, field, n, d),
            Seed(61),
            case,
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(case);
        let mut draw = || match field {
            Field::Real => num_complex::Complex64::new(rng.random_range(-1.0..1.0), 0.0),
            Field::Complex => num_complex::Complex64::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ),
        };
        let cores: Vec<Vec<_>> = (0..n).map(|_| (0..d).map(|_| draw()).collect()).collect();
        let cand = ProductCandidate::new(field, vec![cores.clone()]).unwrap();
        for k in 0..n {
            let g = gradient(&psi, &cand, k, 0).unwrap();
            let mut fd = vec![num_complex::Complex64::new(0.0, 0.0); d];
            for (j, slot) in fd.iter_mut().enumerate() {
                let shifted = |delta: num_complex::Complex64| {
                    let mut c = cores.clone();
                    c[k][j] += delta;
                    loss(&psi, &ProductCandidate::new(field, vec![c]).unwrap()).unwrap()
                };
                slot.re = (shifted(h.into()) - shifted((-h).into())) / (2.0 * h);
                if field == Field::Complex {
                    let ih = num_complex::Complex64::new(0.0, h);
                    slot.im = (shifted(ih) - shifted(-ih)) / (2.0 * h);
                }
            }
            let diff = g
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let scale = fd.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(diff / scale);
        }
    }
    outcome(worst <= 1e-4, format!("max relative error {worst:.2e}"))
}

fn main() {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("order2-oracle", order_two_oracle),
        ("deterministic-states", deterministic_states),
        ("symmetrized-asymptote", symmetrized_asymptote),
        ("algorithm-ordering", algorithm_ordering),
        ("normalized-parity", normalized_parity),
        (
            "symmetrization-reduces-entanglement",
            symmetrization_reduces_entanglement,
        ),
        ("mps-norms-and-limits", mps_norms_and_limits),
        ("fit-exactness", fit_exactness),
        ("gradient-correctness", gradient_correctness),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        ran += 1;
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 && std::env::var_os("INJNORM_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
