use levyflux::density::marginal;
use levyflux::model::{inverse_laplace_exponent, SizeDist, SpectrallyPositiveModel, SubordinatorModel};
use levyflux::path_sim::{kendall_cell_mass, run_samples, sample_path_with, McEstimate, Welford};
use levyflux::quadrature::{integrate, Tolerance};
use levyflux::subordinator::{simulate_time_change, time_changed_density, TimeChangeSpec, DEFAULT_TRUNCATION};

const SEED: u64 = 7;

fn estimate(n: u64, seed: u64, f: impl Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync) -> McEstimate {
    run_samples(n, seed, Welford::default, |w, rng, _| w.push(f(rng)), |a, b| a.merge(&b)).into()
}

#[test]
fn compound_poisson_endpoint_mean() {
    let c = 2.0;
    let m = SpectrallyPositiveModel::compound_poisson_minus_drift(c, 1.0, SizeDist::Exponential { mean: 1.0 }).unwrap();
    let e = estimate(100_000, SEED, |rng| sample_path_with(&m, 10.0, rng).unwrap().end_value());
    assert!(e.z_score(10.0 * (1.0 - c)) < 3.0, "{e:?}");
}

#[test]
fn first_passage_cloud_matches_its_density() {
    let m = SpectrallyPositiveModel::gamma_minus_drift(1.0, 1.0, 1.0).unwrap();
    let c = 1.0;
    let t_max = 30.0;
    let k = 1.0 + 1.0 / c;
    // ∫ e^{−T_x − x} dx and ∫ 1{T_x ≤ 1, x ≤ 1} dx along each path
    let acc = run_samples(
        100_000,
        SEED,
        || [Welford::default(); 2],
        |acc, rng, _| {
            let path = sample_path_with(&m, t_max, rng).unwrap();
            let smooth: f64 = path
                .passage_profile()
                .iter()
                .map(|&(x0, x1, t0)| (-t0 - x0).exp() * -(-k * (x1 - x0)).exp_m1() / k)
                .sum();
            let boxed = (path.start - path.running_inf(1.0).unwrap()).min(1.0);
            acc[0].push(smooth);
            acc[1].push(boxed);
        },
        |a, b| {
            a[0].merge(&b[0]);
            a[1].merge(&b[1]);
        },
    );
    let smooth = McEstimate::from(acc[0]);
    let boxed = McEstimate::from(acc[1]);

    // ∫∫ e^{−t−x} (x/t) p_t(−x) dx dt, and its closed form 1/(1 + Φ(1))
    let tol = Tolerance::with_abs(1e-11);
    let inner = |t: f64| -marginal(&m, t).unwrap().exp_moment_in(1, 1.0, f64::NEG_INFINITY, 0.0).unwrap() * (-t).exp() / t;
    let quad = integrate(inner, 0.0, 1.0, &tol).unwrap().value + integrate(inner, 1.0, t_max, &tol).unwrap().value;
    let closed = 1.0 / (1.0 + inverse_laplace_exponent(&m, 1.0).unwrap());
    assert!((quad - closed).abs() < 1e-8, "{quad} vs {closed}");
    assert!(smooth.z_score(quad) < 3.0, "{smooth:?} vs {quad}");

    let cell = kendall_cell_mass(&m, 0.0, 1.0, 0.0, 1.0).unwrap();
    assert!(boxed.z_score(cell) < 3.0, "{boxed:?} vs {cell}");
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn reversed_paths_have_the_dual_supremum_law() {
    let m = SpectrallyPositiveModel::gamma_minus_drift(1.5, 1.0, 1.0).unwrap();
    let t = 2.0;
    let n = 10_000u64;
    let collect = |seed: u64, f: fn(&levyflux::path_sim::BVPath) -> f64| {
        run_samples(n, seed, Vec::new, |v, rng, _| v.push(f(&sample_path_with(&m, t, rng).unwrap())), |a, mut b| {
            a.append(&mut b)
        })
    };
    let reversed = collect(SEED, |p| p.time_reverse().running_sup(p.horizon).unwrap() - p.start);
    let rise = collect(SEED + 1, |p| p.end_value() - p.running_inf(p.horizon).unwrap());
    let critical = 1.358 * (2.0 / n as f64).sqrt();
    let d = ks(reversed, rise);
    assert!(d < 3.0 * critical, "KS {d} vs {critical}");
}

#[test]
fn time_changed_histogram_matches_density() {
    let spec = TimeChangeSpec::new(SubordinatorModel::gamma(1.0, 1.0).unwrap(), vec![0.5]).unwrap();
    let t = 1.0;
    let n = 100_000u64;
    let draws = simulate_time_change(&spec, t, n, SEED, DEFAULT_TRUNCATION, None).unwrap();
    assert_eq!(draws.support_defect(&spec), 0.0);
    assert!(draws.y.iter().all(|y| y[0] >= 0.0));
    assert!(draws.tau.iter().all(|&tau| tau >= t));

    let width = 0.2;
    let mut counts = [0u64; 30];
    for y in &draws.y {
        let b = (y[0] / width) as usize;
        if b < counts.len() {
            counts[b] += 1;
        }
    }
    let tol = Tolerance::with_abs(1e-12);
    for (b, &count) in counts.iter().enumerate() {
        let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
        let p = integrate(|y| time_changed_density(&spec, t, &[y]).unwrap(), lo, hi, &tol).unwrap().value;
        let freq = count as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "bin {b}: {freq} vs {p} ({se})");
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let m = SpectrallyPositiveModel::gamma_minus_drift(1.0, 1.0, 1.0).unwrap();
    let run = || estimate(5_000, SEED, |rng| sample_path_with(&m, 2.0, rng).unwrap().running_inf(2.0).unwrap());
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(run);
    assert_eq!(single, many);
}
