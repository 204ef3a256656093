//! Randomised invariants of the field algebra, the optimal flows and the
//! diagnostics.

use optmix::diagnostics::{fit_decay_rate, DiagnosticsRecord};
use optmix::fields::{self, Constraint};
use optmix::io::formats::{diagnostics_line, read_diagnostics, write_diagnostics};
use optmix::io::expr::Expr;
use optmix::stirring::{self, EnergyBound};
use optmix::validation::random_cosine_field;
use optmix::{Backend, BoundaryCondition, DealiasRule, RectDomain, ScalarField, SpectralWorkspace};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: usize = 33;

fn domain() -> RectDomain {
    RectDomain::square(N, BoundaryCondition::NoFlux).unwrap()
}

fn field(seed: u64) -> ScalarField {
    random_cosine_field(domain(), &mut ChaCha8Rng::seed_from_u64(seed), 4, 5)
}

fn grid_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, N * N)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inner_product_is_symmetric_and_bilinear(a in grid_values(), b in grid_values(), s in -5.0..5.0f64) {
        let f = ScalarField::new(domain(), a).unwrap();
        let g = ScalarField::new(domain(), b).unwrap();
        let fg = fields::inner_product(&f, &g).unwrap();
        prop_assert!((fg - fields::inner_product(&g, &f).unwrap()).abs() <= 1e-12 * (1.0 + fg.abs()));
        let lhs = fields::inner_product(&f.add_scaled(s, &g).unwrap(), &g).unwrap();
        let rhs = fg + s * fields::inner_product(&g, &g).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn subtract_mean_is_idempotent(a in grid_values()) {
        let f = fields::subtract_mean(&ScalarField::new(domain(), a).unwrap());
        prop_assert!(f.mean().abs() <= 1e-12);
        let g = fields::subtract_mean(&f);
        for (x, y) in f.values().iter().zip(g.values()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn norms_are_absolutely_homogeneous(a in grid_values(), s in -20.0..20.0f64) {
        let f = ScalarField::new(domain(), a).unwrap();
        let fs = f.scaled(s);
        let (l2, l2s) = (fields::l2_norm(&f).unwrap(), fields::l2_norm(&fs).unwrap());
        prop_assert!((l2s - s.abs() * l2).abs() <= 1e-10 * (1.0 + l2s));
        prop_assert_eq!(fields::linf_norm(&fs).unwrap(), s.abs() * fields::linf_norm(&f).unwrap());
    }

    #[test]
    fn diagnostics_line_round_trips(v in prop::array::uniform10(-1e6..1e6f64)) {
        let r = DiagnosticsRecord::from_values(v);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        write_diagnostics(&p, std::slice::from_ref(&r)).unwrap();
        let back = read_diagnostics(&p).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(back[0].values().map(f64::to_bits), v.map(f64::to_bits));
        prop_assert!(diagnostics_line(&r).split(',').count() == 10);
    }

    #[test]
    fn expression_numbers_round_trip(c in -1e3..1e3f64, x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let e = Expr::parse(&format!("({c:?}) * x + y^2")).unwrap();
        let want = c * x + y * y;
        prop_assert!((e.eval(x, y) - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mix_norm_is_absolutely_homogeneous(seed in any::<u64>(), s in -10.0..10.0f64) {
        let mut ws = SpectralWorkspace::new(domain(), DealiasRule::Half);
        let f = field(seed);
        let m = ws.mix_norm(&f).unwrap();
        let ms = ws.mix_norm(&f.scaled(s)).unwrap();
        prop_assert!((ms - s.abs() * m).abs() <= 1e-10 * (1.0 + ms));
        prop_assert!(m <= fields::l2_norm(&f).unwrap() / domain().lambda1().sqrt() * (1.0 + 1e-10));
    }

    #[test]
    fn energy_flow_meets_budget_and_ignores_amplitude(seed in any::<u64>(), s in 0.1..10.0f64, u in 0.1..5.0f64) {
        let mut ws = SpectralWorkspace::new(domain(), DealiasRule::Half);
        let f = field(seed);
        let a = stirring::optimal_energy_flow(&mut ws, &f, u).unwrap();
        prop_assume!(!a.stagnated);
        let area = domain().area();
        prop_assert!((fields::energy(&a.u) - u * u * area).abs() <= 1e-9 * u * u * area);
        let b = stirring::optimal_energy_flow(&mut ws, &f.scaled(s), u).unwrap();
        let d = b.u.add_scaled(-1.0, &a.u).unwrap();
        prop_assert!(d.max_speed() <= 1e-9 * (1.0 + a.u.max_speed()));
        prop_assert!(stirring::decay_rate(&a).unwrap() <= 0.0);
    }

    #[test]
    fn enstrophy_flow_meets_budget_and_scales(seed in any::<u64>(), s in 0.1..10.0f64, k in 1.0..30.0f64) {
        let mut ws = SpectralWorkspace::new(domain(), DealiasRule::TwoThirds);
        let f = field(seed);
        let a = stirring::optimal_enstrophy_flow(&mut ws, &f, k).unwrap();
        prop_assume!(!a.stagnated);
        let target = k * k * domain().area();
        let ens = ws.enstrophy(&a.u).unwrap();
        prop_assert!((ens - target).abs() <= 1e-9 * target);
        let b = stirring::optimal_enstrophy_flow(&mut ws, &f.scaled(s), k).unwrap();
        let d = b.u.add_scaled(-1.0, &a.u).unwrap();
        prop_assert!(d.max_speed() <= 1e-9 * (1.0 + a.u.max_speed()));
        prop_assert!(stirring::decay_rate(&a).unwrap() <= 0.0);
    }

    #[test]
    fn energy_bound_is_monotone(seed in any::<u64>(), u in 0.1..5.0f64, t in 0.0..2.0f64, dt in 0.0..1.0f64) {
        let mut ws = SpectralWorkspace::new(domain(), DealiasRule::Half);
        let b = EnergyBound::new(&mut ws, &field(seed), u).unwrap();
        prop_assert!(b.at(t + dt) <= b.at(t));
        prop_assert!(b.at(t) >= 0.0 && b.at(0.0) == b.mix0);
    }
}

proptest! {
    #[test]
    fn enstrophy_bound_is_monotone(g in prop::collection::vec(0.0..50.0f64, 2..20), t in 0.0..3.0f64, dt in 0.0..1.0f64) {
        let gamma: Vec<(f64, f64)> = g.iter().enumerate().map(|(k, &v)| (0.1 * k as f64, v)).collect();
        let a = stirring::lower_bound_enstrophy(0.2, &gamma, t).unwrap();
        let b = stirring::lower_bound_enstrophy(0.2, &gamma, t + dt).unwrap();
        prop_assert!(b <= a && a <= 0.2 && b >= 0.0);
    }

    #[test]
    fn rate_fit_recovers_exponentials(a in -20.0..20.0f64, b in -5.0..5.0f64, shift in -3.0..3.0f64, c in 0.01..100.0f64) {
        let series: Vec<(f64, f64)> = (0..41).map(|k| {
            let t = 0.025 * k as f64;
            (t, (a * t + b).exp())
        }).collect();
        let fit = fit_decay_rate(&series, None).unwrap();
        prop_assert!((fit.a - a).abs() <= 1e-8 * (1.0 + a.abs()));
        prop_assert!((fit.b - b).abs() <= 1e-8 * (1.0 + b.abs() + a.abs()));
        prop_assert!(fit.r_squared >= 1.0 - 1e-12);
        let moved: Vec<(f64, f64)> = series.iter().map(|&(t, m)| (t + shift, c * m)).collect();
        let g = fit_decay_rate(&moved, None).unwrap();
        prop_assert!((g.a - fit.a).abs() <= 1e-8 * (1.0 + a.abs()));
    }
}

#[test]
fn constraint_constructors_reject_nonpositive_budgets() {
    for v in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(Constraint::energy(v).is_err());
        assert!(Constraint::enstrophy(v).is_err());
    }
}
