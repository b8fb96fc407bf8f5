use nearsym_core::forms::form::MultiIndex;
use nearsym_core::forms::json::{form_from_str, form_to_string};
use nearsym_core::forms::{
    center_projection, homotopy_operator, homotopy_residual, rat, rat_int, Coefficient,
    DifferentialForm, Poly4, SmoothMap,
};
use proptest::prelude::*;

fn poly() -> impl Strategy<Value = Poly4> {
    prop::collection::vec(([0u32..=3, 0u32..=3, 0u32..=3, 0u32..=3], -9i64..=9), 0..4)
        .prop_map(|terms| Poly4::from_terms(terms.into_iter().map(|(e, c)| (e, rat_int(c)))))
}

fn form(degree: usize) -> impl Strategy<Value = DifferentialForm> {
    let idx = MultiIndex::all_of_degree(degree);
    prop::collection::vec(poly(), idx.len()).prop_map(move |ps| {
        DifferentialForm::from_terms(
            degree,
            idx.iter().zip(ps).map(|(m, p)| (*m, Coefficient::Exact(p))).collect(),
        )
    })
}

fn any_form() -> impl Strategy<Value = DifferentialForm> {
    (0usize..=4).prop_flat_map(form)
}

fn fiber() -> impl Strategy<Value = [bool; 4]> {
    prop::array::uniform4(any::<bool>())
}

fn nonempty_fiber() -> impl Strategy<Value = [bool; 4]> {
    fiber().prop_filter("needs a fiber coordinate", |f| f.iter().any(|&b| b))
}

fn same(a: &DifferentialForm, b: &DifferentialForm) -> bool {
    a.exact_eq(b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn d_squared_vanishes(a in (0usize..=3).prop_flat_map(form)) {
        let dd = a.exterior_derivative().unwrap().exterior_derivative().unwrap();
        prop_assert!(dd.is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn homotopy_identity(a in any_form(), f in fiber()) {
        prop_assert!(homotopy_residual(&a, &f).unwrap().is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wedge_graded_commutative((a, b) in (0usize..=4).prop_flat_map(|p| (form(p), (0..=4 - p).prop_flat_map(form)))) {
        let sign = if a.degree() * b.degree() % 2 == 0 { 1 } else { -1 };
        prop_assert!(same(&a.wedge(&b).unwrap(), &b.wedge(&a).unwrap().scale_int(sign)));
    }

    #[test]
    fn hodge_star_is_involution_on_two_forms(a in form(2)) {
        let ss = a.hodge_star().hodge_star();
        prop_assert!(same(&ss, &a));
        let half = rat(1, 2);
        let plus = a.add(&a.hodge_star()).scale(&half);
        let plus2 = plus.add(&plus.hodge_star()).scale(&half);
        prop_assert!(same(&plus, &plus2));
    }

    #[test]
    fn second_order_vanishing(a in (1usize..=4).prop_flat_map(form), f in nonempty_fiber(), k in 0usize..4) {
        // Multiply every coefficient by a fiber coordinate so that a vanishes
        // on the center.
        let fiber_vars: Vec<usize> = (0..4).filter(|&i| f[i]).collect();
        let v = Poly4::var(fiber_vars[k % fiber_vars.len()]);
        let a = a.mul_function(&Coefficient::Exact(v));
        prop_assert!(center_projection(&a, &f).unwrap().is_zero());
        let h = homotopy_operator(&a, &f).unwrap();
        for (_, c) in h.terms() {
            prop_assert!(c.as_poly().unwrap().in_ideal_power(&f, 2));
        }
    }

    #[test]
    fn pullback_commutes_with_d(a in (0usize..=3).prop_flat_map(form), m in prop::array::uniform4(poly())) {
        let map = SmoothMap::polynomial(m);
        let lhs = a.pullback(&map).unwrap().exterior_derivative().unwrap();
        let rhs = a.exterior_derivative().unwrap().pullback(&map).unwrap();
        prop_assert!(same(&lhs, &rhs));
    }

    #[test]
    fn json_round_trip(a in any_form()) {
        let s = form_to_string(&a).unwrap();
        prop_assert!(same(&form_from_str(&s).unwrap(), &a));
    }
}
