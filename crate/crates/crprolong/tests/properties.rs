use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crprolong::algebra::{AlgebraJson, BigradedAlgebra};
use crprolong::classify::{canonical_families, classify, emit_normal_form_matrices, Family};
use crprolong::identify::identify_real_form;
use crprolong::linalg::{hermitian_inertia, nullspace, rat, rref, Matrix, GR};
use crprolong::prolong::{assemble, ProlongationResult};
use crprolong::symbol::{alpha_of, build_symbol, SymbolInput};

fn gauss_int() -> impl Strategy<Value = GR> {
    (-3i64..=3, -3i64..=3).prop_map(|(a, b)| GR::from_ints(a, b))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(gauss_int(), rows * cols).prop_map(move |entries| Matrix { rows, cols, entries })
}

fn any_matrix() -> impl Strategy<Value = Matrix> {
    (1usize..=4, 1usize..=5).prop_flat_map(|(r, c)| matrix(r, c))
}

fn hermitian(n: usize) -> impl Strategy<Value = Matrix> {
    matrix(n, n).prop_map(|m| &m + &m.conj_transpose())
}

/// Upper triangular with nonzero diagonal, hence invertible.
fn invertible(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut small = |nonzero: bool| loop {
        let z = GR::from_ints(rng.gen_range(-2..=2), rng.gen_range(-2..=2));
        if !nonzero || z != GR::from_int(0) {
            break z;
        }
    };
    let mut g = Matrix::identity(n);
    for i in 0..n {
        g[(i, i)] = small(true);
        for j in i + 1..n {
            g[(i, j)] = small(false);
        }
    }
    g
}

fn random_change(rng: &mut ChaCha8Rng, n: usize) -> (Matrix, GR, GR) {
    let g = invertible(rng, n);
    let k = rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 };
    let r = GR::from_rational(rat(k, rng.gen_range(1..=3)));
    let c = loop {
        let z = GR::from_ints(rng.gen_range(-2..=2), rng.gen_range(-2..=2));
        if z != GR::from_int(0) {
            break z;
        }
    };
    (g, r, c)
}

fn run(f: &Family) -> ProlongationResult {
    assemble(&build_symbol(&emit_normal_form_matrices(f).unwrap()).unwrap()).unwrap()
}

fn families_up_to(n: usize) -> Vec<Family> {
    (1..=n).flat_map(canonical_families).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rref_is_idempotent(m in any_matrix()) {
        let (r, piv) = rref(&m);
        let (r2, piv2) = rref(&r);
        prop_assert_eq!(&r, &r2);
        prop_assert_eq!(piv, piv2);
    }

    #[test]
    fn nullspace_is_killed_and_has_full_size(m in any_matrix()) {
        let ns = nullspace(&m);
        prop_assert_eq!(ns.len(), m.cols - m.rank());
        for v in &ns {
            prop_assert!(m.mul_vec(v).iter().all(|x| *x == GR::from_int(0)));
        }
    }

    #[test]
    fn inertia_is_a_congruence_invariant(h in hermitian(3), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = invertible(&mut rng, 3);
        let moved = &(&g.conj_transpose() * &h) * &g;
        prop_assert_eq!(hermitian_inertia(&h).unwrap(), hermitian_inertia(&moved).unwrap());
    }

    #[test]
    fn alpha_scales_by_norm(c in gauss_int(), idx in 0usize..64) {
        prop_assume!(c != GR::from_int(0));
        let fams: Vec<Family> = families_up_to(3).into_iter().filter(|f| !matches!(f, Family::Nilpotent { .. })).collect();
        let f = &fams[idx % fams.len()];
        let m = emit_normal_form_matrices(f).unwrap().operators[0].clone();
        let a = alpha_of(&m).unwrap().unwrap();
        let scaled = alpha_of(&m.scale(&c)).unwrap().unwrap();
        prop_assert_eq!(scaled, a * c.norm_sq());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn classification_survives_basis_changes(seed in any::<u64>(), idx in 0usize..256) {
        let fams = families_up_to(3);
        let f = &fams[idx % fams.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, r, c) = random_change(&mut rng, f.n());
        let moved = emit_normal_form_matrices(f).unwrap().transform(&g, &r, &c).unwrap();
        prop_assert_eq!(&classify(&moved).unwrap().family, f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn killing_signature_survives_basis_changes(seed in any::<u64>(), idx in 0usize..3) {
        let f = [Family::TypeI { p: 2, q: 0 }, Family::TypeI { p: 1, q: 1 }, Family::TypeII { p: 1 }][idx].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, r, c) = random_change(&mut rng, 2);
        let moved: SymbolInput = emit_normal_form_matrices(&f).unwrap().transform(&g, &r, &c).unwrap();
        let res = assemble(&build_symbol(&moved).unwrap()).unwrap();
        prop_assert_eq!(res.killing.inertia, run(&f).killing.inertia);
        prop_assert_eq!(identify_real_form(&res).name, identify_real_form(&run(&f)).name);
    }
}

#[test]
fn emitted_algebras_round_trip() {
    for f in families_up_to(3) {
        let res = run(&f);
        let text = res.algebra.to_json_string();
        let back = BigradedAlgebra::from_json_str(&text).unwrap();
        assert_eq!(back.to_json_string(), text, "{f}");
        assert!(back.jacobi_check().is_empty(), "{f}");
        assert!(back.involution_check().is_empty(), "{f}");
    }
}

#[test]
fn negated_constant_breaks_jacobi() {
    let res = run(&Family::TypeI { p: 1, q: 0 });
    let mut j: AlgebraJson = res.algebra.to_json_struct();
    let k = j.brackets.iter().position(|b| b.a[0] == 0 && b.b[0] == 1).expect("a (0,1) bracket");
    for t in &mut j.brackets[k].value {
        t.re = if t.re.starts_with('-') { t.re[1..].to_string() } else { format!("-{}", t.re) };
        t.im = if t.im.starts_with('-') { t.im[1..].to_string() } else { format!("-{}", t.im) };
    }
    let broken = BigradedAlgebra::from_json_struct(&j).unwrap();
    assert!(!broken.jacobi_check().is_empty());
}

#[test]
fn type_i_and_ii_real_forms_up_to_n5() {
    for n in 1..=5 {
        for q in 0..=n / 2 {
            let p = n - q;
            let id = identify_real_form(&run(&Family::TypeI { p, q }));
            assert_eq!(id.name, format!("so({},{})", p + 2, q + 2));
            assert!(id.matched_golden, "I({p},{q})");
        }
    }
    let id = identify_real_form(&run(&Family::TypeII { p: 2 }));
    assert_eq!(id.name, "so*(8)");
    assert!(id.matched_golden);
}
