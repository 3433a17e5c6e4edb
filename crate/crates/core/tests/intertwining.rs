use ipsdual::duality::{mid_column, right_column, Family, SingleSiteDuality};
use ipsdual::intertwine::*;
use ipsdual::kernel::RateKernel;
use ipsdual::rational::{int, ratio, Rational};
use ipsdual::series::TruncatedSeries;
use ipsdual::systems::{enumerate_configurations, DiffusionSystem, ParticleSystem};

fn grid() -> Vec<DiffusionSystem> {
    [(0, 1), (1, 1), (1, 2), (-1, 1), (-1, 2)]
        .into_iter()
        .map(|(s, b)| DiffusionSystem::new(int(s), int(b)).unwrap())
        .collect()
}

fn kernels() -> Vec<RateKernel> {
    vec![RateKernel::path(2).unwrap(), RateKernel::path(3).unwrap(), RateKernel::cycle(4).unwrap()]
}

fn sample_fns(nsites: usize) -> Vec<FinSupportFn> {
    let mut out = Vec::new();
    let configs = enumerate_configurations(nsites, 3, Some(4));
    for (i, c) in configs.iter().enumerate().step_by(7) {
        out.push(FinSupportFn::delta(c));
        let other = &configs[(i * 5 + 3) % configs.len()];
        out.push(FinSupportFn::from_pairs(nsites, [(c.clone(), ratio(2, 3)), (other.clone(), int(-5))]));
    }
    out
}

fn sample_polys(nsites: usize) -> Vec<TruncatedSeries> {
    let mut out = vec![TruncatedSeries::one(nsites), TruncatedSeries::var(nsites, 0)];
    let mut g = TruncatedSeries::zero(nsites);
    g.add_term((0..nsites).map(|i| if i == 0 { 2 } else { 1 }).collect(), ratio(3, 7));
    let mut m = vec![0u32; nsites];
    m[nsites - 1] = 3;
    g.add_term(m, int(-2));
    out.push(g);
    out
}

#[test]
fn forward_intertwining_on_grid() {
    for dsys in grid() {
        for kernel in kernels() {
            for f in sample_fns(kernel.len()) {
                let r = check_intertwining(&dsys, &kernel, &f).unwrap();
                assert!(r.is_zero(), "{dsys:?} residual {r}");
            }
        }
    }
}

#[test]
fn inverse_intertwining_on_grid() {
    for dsys in grid() {
        for kernel in kernels() {
            for g in sample_polys(kernel.len()) {
                assert!(check_inverse_intertwining(&dsys, &kernel, &g, 5).unwrap().is_zero());
                assert!(check_hbar_intertwining(&dsys, &kernel, &g, 5).unwrap().is_zero());
                assert!(check_h_factorization(&g, 5).unwrap().is_zero());
            }
        }
    }
}

#[test]
fn binomial_transform_is_a_symmetry() {
    let kernel = RateKernel::path(3).unwrap();
    let configs = enumerate_configurations(3, 3, Some(5));
    for dsys in grid() {
        for f in sample_fns(3) {
            assert!(check_symmetry_lattice(&dsys, &kernel, &f, &configs).unwrap().is_zero());
        }
    }
    for sys in [ParticleSystem::irw(), ParticleSystem::sip(int(1)).unwrap()] {
        for f in sample_fns(3) {
            assert!(check_symmetry(&sys, &kernel, &f, &configs).unwrap().is_zero());
        }
    }
}

#[test]
fn round_trips() {
    let configs = enumerate_configurations(1, 10, None);
    let f = FinSupportFn::from_pairs(
        1,
        configs.iter().map(|c| (c.clone(), Rational::from_integer((c[0] as i64 * 3 - 7).into()))),
    );
    let g = g_bar(&f);
    for c in &configs {
        assert_eq!(h_bar(&g, c), f.get(c));
    }
    let p = TruncatedSeries::univariate((0..=10).map(|i| ratio(i - 4, i + 1)));
    let h = h_apply(&p, 10).unwrap();
    // G H p = p: the H-values on 0..=10 determine the degree-10 polynomial
    let gh = g_bar(&FinSupportFn::from_pairs(1, (0..=10).map(|n| (vec![n], h.get(&[n])))));
    let recovered = (TruncatedSeries::exp_linear(&[int(-1)], 11).mul(&gh)).with_order(11);
    assert_eq!(recovered, p.clone().with_order(11));
}

fn systems() -> Vec<ParticleSystem> {
    vec![
        ParticleSystem::irw(),
        ParticleSystem::sip(ratio(1, 2)).unwrap(),
        ParticleSystem::sip(int(2)).unwrap(),
        ParticleSystem::sep(1).unwrap(),
        ParticleSystem::sep(3).unwrap(),
    ]
}

fn families() -> Vec<Family> {
    vec![
        Family::Classical,
        Family::Orthogonal { a: int(1), b: int(-1) },
        Family::Orthogonal { a: ratio(-1, 2), b: ratio(1, 2) },
        Family::Cheap { lambda: ratio(1, 4) },
        Family::Trivial { a: ratio(3, 2) },
    ]
}

#[test]
fn lifts_reproduce_tables() {
    let order = 12u32;
    for sys in systems() {
        for fam in families() {
            let d = SingleSiteDuality::discrete(&sys, fam.clone()).unwrap();
            let Lifted::Mid(rows) = lift_duality(&d, LiftSide::Right, 6).unwrap() else { panic!() };
            for (k, row) in rows.iter().enumerate() {
                let t = mid_column(&sys, &fam, k).unwrap();
                assert_eq!(row.body, t.body, "{} {fam:?} k={k}", sys.name());
                assert_eq!(row.exponent, t.exponent);
                assert!(row.prefactor.overlaps(&t.prefactor));
            }
            let Lifted::Right(r) = lift_duality(&d, LiftSide::Left, order as usize).unwrap() else {
                panic!()
            };
            let t = right_column(&sys, &fam, order).unwrap();
            assert_eq!(r.expanded(order), t.expanded(order), "{} {fam:?}", sys.name());
            assert!(r.prefactor.overlaps(&t.prefactor));
        }
    }
}
