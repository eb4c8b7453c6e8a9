//! Set-algebra laws of feature expressions, checked on a simulated population.

use std::sync::OnceLock;

use proptest::prelude::*;

use demosim_core::config::SimulationConfig;
use demosim_core::engine::Simulation;
use demosim_core::features::{just, pre, Cmp, EvalContext, Feature, FeatureExpr};
use demosim_core::params::{DataTables, ModelParameters};
use demosim_core::population::{MaritalStatus, PersonId};
use demosim_core::space::{HouseId, TownId};
use demosim_core::stochastics::ClockSpec;

fn world() -> &'static Simulation {
    static WORLD: OnceLock<Simulation> = OnceLock::new();
    WORLD.get_or_init(|| {
        let config = SimulationConfig { t_final: 2040, clock: ClockSpec::monthly(), seed: 11, ..Default::default() };
        let params = ModelParameters {
            initial_pop: 400,
            basic_divorce_rate: 0.3,
            base_die_rate: 0.02,
            ..Default::default()
        };
        let mut sim = Simulation::new(config, params, DataTables::default()).unwrap();
        for _ in 0..60 {
            sim.step().unwrap();
        }
        sim
    })
}

fn ctx() -> EvalContext<'static> {
    let w = world();
    EvalContext::new(w.store(), w.space(), w.previous_snapshot())
}

fn leaf() -> impl Strategy<Value = FeatureExpr> {
    let cmp = prop_oneof![Just(Cmp::Lt), Just(Cmp::Le), Just(Cmp::Eq), Just(Cmp::Ge), Just(Cmp::Gt)];
    let status = prop_oneof![
        Just(MaritalStatus::Single),
        Just(MaritalStatus::Married),
        Just(MaritalStatus::Divorced),
        Just(MaritalStatus::Widowed)
    ];
    let houses = world().space().house_count() as u32;
    prop_oneof![
        Just(Feature::True),
        Just(Feature::False),
        Just(Feature::Male),
        Just(Feature::Female),
        Just(Feature::Alive),
        Just(Feature::Married),
        Just(Feature::Unmarried),
        status.prop_map(Feature::Status),
        (cmp, 0u32..90).prop_map(|(c, a)| Feature::Age(c, a as f64)),
        Just(Feature::HasChildren),
        Just(Feature::HasAliveChildren),
        Just(Feature::HasAliveSibling),
        Just(Feature::HasAliveOlderSibling),
        Just(Feature::Orphan),
        Just(Feature::LivesAlone),
        (0u32..5).prop_map(|y| Feature::YoungestChildOlderThan(y as f64)),
        (0usize..96).prop_map(|i| Feature::InTown(TownId::from_index(i))),
        (0..houses).prop_map(|h| Feature::InHouse(HouseId(h))),
    ]
    .prop_map(FeatureExpr::from)
}

fn expr() -> impl Strategy<Value = FeatureExpr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a | b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a & b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.compose(b)),
            inner.clone().prop_map(|a| !a),
            inner.clone().prop_map(just),
            inner.prop_map(pre),
        ]
    })
}

fn set(e: &FeatureExpr) -> Vec<PersonId> {
    ctx().subpopulation(e)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn de_morgan(a in expr(), b in expr()) {
        prop_assert_eq!(set(&!(a.clone() | b.clone())), set(&(!a.clone() & !b.clone())));
        prop_assert_eq!(set(&!(a.clone() & b.clone())), set(&(!a | !b)));
    }

    #[test]
    fn double_negation(a in expr()) {
        prop_assert_eq!(set(&!!a.clone()), set(&a));
    }

    #[test]
    fn difference_is_intersection_with_complement(a in expr(), b in expr()) {
        prop_assert_eq!(set(&(a.clone() - b.clone())), set(&(a & !b)));
    }

    #[test]
    fn composition_is_intersection(a in expr(), b in expr()) {
        prop_assert_eq!(set(&a.clone().compose(b.clone())), set(&(a & b)));
    }

    #[test]
    fn just_is_now_and_not_before(a in expr()) {
        prop_assert_eq!(set(&just(a.clone())), set(&(a.clone() & !pre(a))));
    }

    #[test]
    fn complement_partitions_population(a in expr()) {
        let yes = set(&a);
        let no = set(&!a);
        prop_assert!(yes.iter().all(|p| !no.contains(p)));
        prop_assert_eq!(yes.len() + no.len(), world().store().len());
    }

    #[test]
    fn union_and_intersection_commute(a in expr(), b in expr()) {
        prop_assert_eq!(set(&(a.clone() | b.clone())), set(&(b.clone() | a.clone())));
        prop_assert_eq!(set(&(a.clone() & b.clone())), set(&(b & a)));
    }

    #[test]
    fn pre_distributes_over_connectives(a in expr(), b in expr()) {
        prop_assert_eq!(set(&pre(a.clone() | b.clone())), set(&(pre(a.clone()) | pre(b.clone()))));
        prop_assert_eq!(set(&pre(a.clone() & b.clone())), set(&(pre(a.clone()) & pre(b))));
        // negation commutes with pre for everyone who existed at the boundary
        let snap = world().previous_snapshot();
        let c = ctx();
        for p in world().store().ids().filter(|&p| snap.contains(p)) {
            prop_assert_eq!(c.eval(&pre(!a.clone()), p), !c.eval(&pre(a.clone()), p));
        }
    }
}

#[test]
fn fixture_has_history() {
    let c = ctx();
    let w = world();
    assert!(w.store().len() > w.store().alive_count(), "some deaths");
    assert!(!c.subpopulation(&FeatureExpr::from(Feature::Status(MaritalStatus::Divorced))).is_empty());
    assert!(!c.subpopulation(&FeatureExpr::from(Feature::HasChildren)).is_empty());
}
