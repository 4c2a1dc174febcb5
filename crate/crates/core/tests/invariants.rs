use itercur::adaptive::{
    cadp_cur, cadp_cx, cadp_cx_lvg, dadp_cur, dadp_cx, dadp_cx_large, AdaptiveOutcome, Backend,
};
use itercur::matrix::{read_matrix_market, synth_sparse, write_matrix_market, Matrix, SynthParams};
use itercur::rng;
use itercur::verify::{run, Status, VerifyOptions};

fn no_duplicates(out: &AdaptiveOutcome) -> bool {
    let unique = |v: &[usize]| {
        let mut s = v.to_vec();
        s.sort_unstable();
        s.dedup();
        s.len() == v.len()
    };
    unique(out.factorization.p.as_slice()) && unique(out.factorization.s.as_slice())
}

#[test]
fn no_method_ever_repeats_an_index() {
    let mut runs = 0;
    for seed in 0..25u64 {
        let su = seed as usize;
        let a = Matrix::Dense(rng::gaussian_matrix(&mut rng::seeded(seed), 20 + su % 6, 15 + su % 4));
        let k = 4 + su % 5;
        let outs = [
            cadp_cx(&a, k, 2, Backend::Dense).unwrap(),
            cadp_cx(&a, k, 3, Backend::Krylov).unwrap(),
            dadp_cx(&a, k, 0.8, 2, Backend::Dense).unwrap(),
            dadp_cx_large(&a, k, 1.0, 1, 1e-10, seed).unwrap(),
            cadp_cur(&a, k, 2, Backend::Dense).unwrap(),
            dadp_cur(&a, k, 0.8, 2, Backend::Krylov).unwrap(),
            dadp_cur(&a, k, 0.5, 3, Backend::Dense).unwrap(),
            cadp_cx_lvg(&a, k, 2, seed).unwrap(),
        ];
        for out in &outs {
            runs += 1;
            assert!(no_duplicates(out), "seed {seed}");
            let total: usize = out.column_rounds.iter().map(|t| t.count).sum();
            assert_eq!(total, k);
        }
    }
    assert_eq!(runs, 200);
}

#[test]
fn decay_rounds_respect_the_cap() {
    let a = Matrix::Dense(rng::gaussian_matrix(&mut rng::seeded(9), 30, 25));
    for out in [
        dadp_cx(&a, 10, 0.5, 3, Backend::Dense).unwrap(),
        dadp_cur(&a, 10, 0.5, 3, Backend::Dense).unwrap(),
    ] {
        assert!(out.rounds().all(|t| t.count <= 3));
    }
}

#[test]
fn two_sided_rounds_are_fresh() {
    let a = Matrix::Sparse(synth_sparse(&SynthParams::new(120, 40, 0.1, 3)).unwrap());
    let out = cadp_cur(&a, 12, 3, Backend::Krylov).unwrap();
    let (mut p, mut s) = (Vec::new(), Vec::new());
    for t in &out.column_rounds {
        assert!(t.columns.iter().all(|j| !p.contains(j)));
        assert!(t.rows.iter().all(|i| !s.contains(i)));
        p.extend(&t.columns);
        s.extend(&t.rows);
    }
}

#[test]
fn file_roundtrip_preserves_decomposition() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.mtx");
    let a = Matrix::Sparse(synth_sparse(&SynthParams::new(60, 30, 0.2, 1)).unwrap());
    write_matrix_market(&a, &path).unwrap();
    let b = read_matrix_market(&path).unwrap();
    let x = dadp_cx(&a, 6, 0.8, 2, Backend::Dense).unwrap();
    let y = dadp_cx(&b, 6, 0.8, 2, Backend::Dense).unwrap();
    assert_eq!(x.factorization.p, y.factorization.p);
    assert_eq!(x.factorization.s, y.factorization.s);
}

#[test]
fn tampered_tolerance_fails() {
    let opts = VerifyOptions {
        tolerance_scale: -1.0,
        data_dir: None,
    };
    assert_eq!(run(1, &opts).status, Status::Fail);
    assert_eq!(run(7, &opts).status, Status::Fail);
}
