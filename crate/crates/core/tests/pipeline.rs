use hardy_core::decompose::{atomic_decomposition, reconstruction_error};
use hardy_core::maximal::grand_maximal;
use hardy_core::operators::{extension_check_on, hp_extension_check, uniform_atom_bound, BoundMode};
use hardy_core::{builtin, BuiltinSpec, Error, Grid, MollifierFamily, OperatorKind, OperatorSpec, SampledFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(name: &str, m: usize, p: f64) -> (SampledFunction, MollifierFamily) {
    let g = Grid::new(1, 1.0, m).unwrap();
    (builtin(g, &BuiltinSpec::named(name)).unwrap(), MollifierFamily::standard(g, p).unwrap())
}

#[test]
fn haar_decomposition_passes_all_invariants() {
    let (f, fam) = setup("haar", 1024, 1.0);
    let d = atomic_decomposition(&f, 1.0, 2.0, &fam).unwrap();
    assert!(d.checks.invariants_pass(), "{:?}", d.checks);
    assert!(d.lemma4.pass());
    assert!(d.relative_floor() <= 0.02);
    assert!(d.c_lambda().is_finite() && d.c_lambda() > 0.0);
    let floor = reconstruction_error(&f, &d, d.j_min, 2.0).unwrap();
    assert!((floor - d.reconstruction_floor()).abs() <= 1e-12 * d.f_norm_s);
}

#[test]
fn doubling_f_scales_lambda_sum_by_two_to_the_p() {
    for p in [1.0, 2.0 / 3.0] {
        let (f, fam) = setup("mexican_hat", 1024, p);
        let a = atomic_decomposition(&f, p, 2.0, &fam).unwrap();
        let b = atomic_decomposition(&f.scaled(2.0), p, 2.0, &fam).unwrap();
        assert_eq!(b.j_max, a.j_max + 1);
        let want = a.sum_lambda_p * 2f64.powf(p);
        assert!((b.sum_lambda_p - want).abs() <= 1e-12 * want, "{p}");
        assert!((b.c_lambda() - a.c_lambda()).abs() <= 1e-12 * a.c_lambda());
    }
}

#[test]
fn zero_function_is_rejected() {
    let g = Grid::new(1, 1.0, 256).unwrap();
    let fam = MollifierFamily::standard(g, 1.0).unwrap();
    let err = atomic_decomposition(&SampledFunction::zeros(g), 1.0, 2.0, &fam).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
}

#[test]
fn scaled_atom_is_reproduced() {
    let (f, fam) = setup("atom", 2048, 0.5);
    let d = atomic_decomposition(&f, 0.5, 2.0, &fam).unwrap();
    assert!(d.checks.invariants_pass());
    assert!(d.relative_floor() <= 0.02, "{}", d.relative_floor());
}

#[test]
fn extension_chain_for_identity_and_hilbert() {
    let (f, fam) = setup("haar", 1024, 1.0);
    let d = atomic_decomposition(&f, 1.0, 2.0, &fam).unwrap();
    for kind in [OperatorKind::Identity, OperatorKind::TruncatedHilbert { cutoff: None }] {
        let t = OperatorSpec::new(kind, 2.0).unwrap();
        let r = extension_check_on(&t, &f, &d, &fam, BoundMode::Lp).unwrap();
        assert!(r.pass, "{:?}", r.margins);
        if t.kind == OperatorKind::Identity {
            assert!(r.sup_atom_bound <= 1.0 + 1e-9);
        }
    }
}

#[test]
fn extension_ratios_are_invariant_under_scaling_f() {
    let (f, fam) = setup("dipole", 1024, 1.0);
    let t = OperatorSpec::new(OperatorKind::TruncatedHilbert { cutoff: None }, 2.0).unwrap();
    let base = {
        let d = atomic_decomposition(&f, 1.0, 2.0, &fam).unwrap();
        extension_check_on(&t, &f, &d, &fam, BoundMode::Lp).unwrap()
    };
    for c in [-1.0, 2.0] {
        let g = f.scaled(c);
        let d = atomic_decomposition(&g, 1.0, 2.0, &fam).unwrap();
        let r = extension_check_on(&t, &g, &d, &fam, BoundMode::Lp).unwrap();
        assert_eq!(r.pass, base.pass);
        for (a, b) in r.margins.iter().zip(&base.margins) {
            assert!((a.ratio - b.ratio).abs() <= 1e-9 * b.ratio.max(1e-300), "{} {c}", a.label);
        }
    }
    let three = OperatorSpec::new(OperatorKind::Scalar(3.0), 2.0).unwrap();
    let d = atomic_decomposition(&f, 1.0, 2.0, &fam).unwrap();
    let r = extension_check_on(&three, &f, &d, &fam, BoundMode::Lp).unwrap();
    let one = extension_check_on(&OperatorSpec::new(OperatorKind::Identity, 2.0).unwrap(), &f, &d, &fam, BoundMode::Lp)
        .unwrap();
    assert_eq!(r.pass, one.pass);
    let q = r.margin("quasi_norm").unwrap();
    let q1 = one.margin("quasi_norm").unwrap();
    assert!((q.lhs / q1.lhs - 3.0).abs() < 1e-9 && (q.rhs / q1.rhs - 3.0).abs() < 1e-9);
}

#[test]
fn hp_chain_holds_and_zero_operator_vanishes() {
    let (f, fam) = setup("chirp", 1024, 1.0);
    let t = OperatorSpec::new(OperatorKind::TruncatedHilbert { cutoff: None }, 2.0).unwrap();
    let r = hp_extension_check(&t, &f, 1.0, 2.0, &fam).unwrap();
    assert!(r.pass, "{:?}", r.margins);
    let zero = OperatorSpec::new(OperatorKind::Zero, 2.0).unwrap();
    let r = hp_extension_check(&zero, &f, 1.0, 2.0, &fam).unwrap();
    assert!(r.pass);
    assert!(r.margins.iter().all(|m| m.lhs == 0.0 && m.rhs == 0.0));
}

#[test]
fn maximal_function_is_subadditive_cellwise() {
    let g = Grid::new(1, 1.0, 512).unwrap();
    let fam = MollifierFamily::standard(g, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let parts: Vec<SampledFunction> = (0..4)
        .map(|_| {
            let a = rng.gen_range(-0.8..0.0);
            let b = rng.gen_range(0.0..0.8);
            let c: f64 = rng.gen_range(-2.0..2.0);
            SampledFunction::from_fn(g, |x| if x[0] > a && x[0] < b { c * (7.0 * x[0]).sin() } else { 0.0 }).unwrap()
        })
        .collect();
    let mut total = SampledFunction::zeros(g);
    let mut bound = vec![0.0; g.len()];
    for part in &parts {
        total = total.add(part).unwrap();
        for (b, v) in bound.iter_mut().zip(grand_maximal(part, &fam).unwrap().values()) {
            *b += v;
        }
    }
    let m = grand_maximal(&total, &fam).unwrap();
    let scale = bound.iter().fold(0.0f64, |a, b| a.max(*b));
    for (v, b) in m.values().iter().zip(&bound) {
        assert!(*v <= b + 1e-12 * scale);
    }
}

#[test]
fn hilbert_atom_bound_is_finite() {
    let g = Grid::new(1, 1.0, 1024).unwrap();
    let fam = MollifierFamily::standard(g, 1.0).unwrap();
    let t = OperatorSpec::new(OperatorKind::TruncatedHilbert { cutoff: None }, 2.0).unwrap();
    let r = uniform_atom_bound(&t, 1.0, 40, 1, BoundMode::Lp, &fam).unwrap();
    assert!(r.sup_atom_bound.is_finite() && r.sup_atom_bound > 0.0);
}
