use proptest::prelude::*;
use tw_tail::ensemble::{
    empirical_tail, largest_eigenvalue, read_batch_csv, sample_tridiagonal, tw_rescale, tw_sample_batch,
    write_batch_csv, TridiagonalMatrix,
};
use tw_tail::rng::{derive_stream, StreamDomain};

/// Characteristic polynomial `det(x I - T)` by the three-term recurrence,
/// as coefficients in increasing degree.
fn charpoly(m: &TridiagonalMatrix) -> Vec<f64> {
    let mut prev = vec![1.0];
    let mut cur = vec![-m.diag[0], 1.0];
    for i in 1..m.n() {
        let b2 = m.offdiag[i - 1] * m.offdiag[i - 1];
        let mut next = vec![0.0; cur.len() + 1];
        for (k, &c) in cur.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= m.diag[i] * c;
        }
        for (k, &c) in prev.iter().enumerate() {
            next[k] -= b2 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Largest root by Newton from above. All roots are real, so the iterates
/// decrease monotonically onto the top one.
fn top_root(p: &[f64], start: f64) -> f64 {
    let eval = |x: f64| {
        let (mut v, mut dv) = (0.0, 0.0);
        for &c in p.iter().rev() {
            dv = dv * x + v;
            v = v * x + c;
        }
        (v, dv)
    };
    let mut x = start + 1.0;
    for _ in 0..500 {
        let (v, dv) = eval(x);
        if dv == 0.0 {
            break;
        }
        let step = v / dv;
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

fn random_matrix(n: usize, seed: u64) -> TridiagonalMatrix {
    let mut r = derive_stream(seed, 0);
    let diag = (0..n).map(|_| 4.0 * r.uniform() - 2.0).collect();
    let offdiag = (1..n).map(|_| 3.0 * r.uniform() - 1.5).collect();
    TridiagonalMatrix::new(diag, offdiag).unwrap()
}

#[test]
fn bisection_matches_characteristic_polynomial() {
    for seed in 0..1_000u64 {
        let n = 1 + (seed % 5) as usize;
        let m = random_matrix(n, seed);
        let exact = top_root(&charpoly(&m), m.gershgorin().1);
        let got = largest_eigenvalue(&m);
        assert!((got - exact).abs() <= 1e-8, "seed {seed}: {got} vs {exact}");
    }
}

#[test]
fn two_by_two_closed_form() {
    let m = TridiagonalMatrix::new(vec![1.0, -0.5], vec![2.0]).unwrap();
    let exact = 0.25 + (0.75f64 * 0.75 + 4.0).sqrt();
    assert!((largest_eigenvalue(&m) - exact).abs() < 1e-10);
    assert_eq!(m.count_below(exact + 1e-6), 2);
    assert_eq!(m.count_below(exact - 1e-6), 1);
}

#[test]
fn constructor_rejects_bad_shapes() {
    assert!(TridiagonalMatrix::new(vec![], vec![]).is_err());
    assert!(TridiagonalMatrix::new(vec![1.0, 2.0], vec![]).is_err());
    assert!(TridiagonalMatrix::new(vec![1.0], vec![f64::NAN]).is_err());
    assert!(TridiagonalMatrix::new(vec![f64::INFINITY], vec![]).is_err());
}

#[test]
fn one_by_one_is_a_gaussian_of_variance_two_over_beta() {
    for &beta in &[1.0, 2.0, 4.0] {
        let root = derive_stream(41, 0);
        let n = 40_000;
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                largest_eigenvalue(&sample_tridiagonal(1, beta, &mut root.split(StreamDomain::Ensemble, i)).unwrap())
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let target = 2.0 / beta;
        // sd of the sample variance of a Gaussian is var sqrt(2/(n-1))
        let se = target * (2.0 / (n - 1) as f64).sqrt();
        assert!((var - target).abs() < 4.0 * se, "beta {beta}: {var} vs {target}");
        assert!(mean.abs() < 4.0 * (target / n as f64).sqrt());
    }
}

#[test]
fn off_diagonal_second_moments() {
    // E b_j^2 = chi^2_{(n-j) beta} / beta has mean n - j and variance 2 (n - j) / beta
    let (n, beta) = (50usize, 2.0);
    let root = derive_stream(42, 0);
    let reps = 4_000;
    let mut sums = vec![0.0; n - 1];
    let mut diag_sq = 0.0;
    for i in 0..reps {
        let m = sample_tridiagonal(n, beta, &mut root.split(StreamDomain::Ensemble, i)).unwrap();
        for (s, b) in sums.iter_mut().zip(&m.offdiag) {
            *s += b * b;
        }
        diag_sq += m.diag.iter().map(|d| d * d).sum::<f64>();
    }
    for (j, s) in sums.iter().enumerate() {
        let k = (n - 1 - j) as f64;
        let mean = s / reps as f64;
        let se = (2.0 * k / beta / reps as f64).sqrt();
        assert!((mean - k).abs() < 5.0 * se, "j {}: {mean} vs {k}", j + 1);
    }
    let d = diag_sq / (reps * n as u64) as f64;
    assert!((d - 2.0 / beta).abs() < 0.02, "{d}");
}

#[test]
fn scaled_top_eigenvalue_at_n_400() {
    let b = tw_sample_batch(400, 2.0, 5_000, &derive_stream(43, 0)).unwrap();
    // TW2 mean -1.7711, sd 0.9018; finite n shifts the mean by a few 1e-2
    assert!((b.mean() + 1.7711).abs() < 0.08, "mean {}", b.mean());
    assert!(
        (b.variance().sqrt() - 0.9018).abs() < 0.06,
        "sd {}",
        b.variance().sqrt()
    );
    let t = empirical_tail(&b, 0.0).unwrap();
    assert!(t.p_hat > 0.02 && t.p_hat < 0.07, "{}", t.p_hat);
}

#[test]
fn spread_shrinks_with_beta() {
    let root = derive_stream(44, 0);
    let sds: Vec<f64> = [1.0, 2.0, 4.0]
        .iter()
        .map(|&beta| tw_sample_batch(200, beta, 3_000, &root).unwrap().variance().sqrt())
        .collect();
    assert!(sds[0] > sds[1] && sds[1] > sds[2], "{sds:?}");
}

#[test]
fn doubling_n_barely_moves_the_mean() {
    let a = tw_sample_batch(400, 2.0, 3_000, &derive_stream(45, 0)).unwrap();
    let b = tw_sample_batch(800, 2.0, 3_000, &derive_stream(46, 0)).unwrap();
    let se = (a.stderr_of_mean().powi(2) + b.stderr_of_mean().powi(2)).sqrt();
    assert!(
        (a.mean() - b.mean()).abs() < 0.05 + 3.0 * se,
        "{} vs {}",
        a.mean(),
        b.mean()
    );
}

#[test]
fn rescale_centres_the_edge() {
    assert_eq!(tw_rescale(2.0 * 10.0, 100), 0.0);
    assert!((tw_rescale(21.0, 100) - 100f64.powf(1.0 / 6.0)).abs() < 1e-12);
}

#[test]
fn batches_are_reproducible_and_round_trip() {
    let rng = derive_stream(47, 0);
    let a = tw_sample_batch(30, 2.0, 200, &rng).unwrap();
    let b = tw_sample_batch(30, 2.0, 200, &rng).unwrap();
    assert_eq!(a.samples, b.samples);
    let mut buf = Vec::new();
    write_batch_csv(&mut buf, &a).unwrap();
    let back = read_batch_csv(buf.as_slice()).unwrap();
    assert_eq!(back.samples, a.samples);
    assert_eq!((back.beta, back.n, back.master_seed), (a.beta, a.n, a.master_seed));
    assert!(tw_sample_batch(1, 2.0, 10, &rng).is_err());
}

#[test]
fn reader_rejects_malformed_files() {
    for text in [
        "",
        "beta,n\n2,10\nsample\n",
        "beta,n,master_seed\n2,10\nsample\n",
        "beta,n,master_seed\n-2,10,0\nsample\n",
        "beta,n,master_seed\n2,10,0\nvalue\n",
        "beta,n,master_seed\n2,10,0\nsample\n1.0\nabc\n",
        "beta,n,master_seed\n2,10,0\nsample\nNaN\n",
        "beta,n,master_seed\n2,x,0\nsample\n",
    ] {
        assert!(read_batch_csv(text.as_bytes()).is_err(), "{text:?}");
    }
    let ok = read_batch_csv("beta,n,master_seed\r\n2,10,7\r\nsample\r\n\r\n-1.5\r\n".as_bytes()).unwrap();
    assert_eq!(ok.samples, vec![-1.5]);
}

proptest! {
    #[test]
    fn bisection_matches_characteristic_polynomial_prop(
        diag in prop::collection::vec(-5.0f64..5.0, 1..=5),
        off in prop::collection::vec(-3.0f64..3.0, 4),
    ) {
        let n = diag.len();
        let m = TridiagonalMatrix::new(diag, off[..n - 1].to_vec()).unwrap();
        let exact = top_root(&charpoly(&m), m.gershgorin().1);
        prop_assert!((largest_eigenvalue(&m) - exact).abs() <= 1e-8);
    }

    #[test]
    fn sturm_count_is_monotone(seed in any::<u64>(), n in 1usize..40, x in -20.0f64..20.0, dx in 0.0f64..5.0) {
        let m = sample_tridiagonal(n, 2.0, &mut derive_stream(seed, 0)).unwrap();
        prop_assert!(m.count_below(x) <= m.count_below(x + dx));
        let (lo, hi) = m.gershgorin();
        prop_assert_eq!(m.count_below(lo - 1e-9), 0);
        prop_assert_eq!(m.count_below(hi + 1e-9), n);
    }
}
