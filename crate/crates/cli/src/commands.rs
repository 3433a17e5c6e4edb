//! One function per subcommand. Each returns `Ok(true)` when every check
//! it ran passed.

use ipsdual::duality::{laplace_recover, Family, Marked, Signature, SingleSiteDuality};
use ipsdual::intertwine::{
    check_intertwining, check_inverse_intertwining, check_symmetry_lattice, FinSupportFn, ResidualTable,
};
use ipsdual::measures::MarginalFamily;
use ipsdual::rational::{binomial, exp_bracket, int, ratio, Bracket, Rational};
use ipsdual::series::TruncatedSeries;
use ipsdual::systems::{
    diffusion_path, enumerate_configurations, gillespie_simulate, EnergyConfiguration, ParticleSystem,
};
use ipsdual::verify::{
    characterize_continuum_first_dual, characterize_selfduality, duality_residual_mixed, has_affine_form,
    mid_rows, scaling_limit_check, selfduality_residual_continuum, stationary_relation_check,
    stochastic_duality_check, sweep_discrete, ContinuumFamily, ContinuumMode, SelfDualityTables,
};
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::output::{
    bracket_cells, bracket_json, join, rat, residual_line, status, OutDir, EXACT, MONTE_CARLO,
};
use crate::params::{self, int_list, rational_list, rational_or};
use crate::{CliError, Command, Globals};

fn inadmissible(e: impl std::fmt::Display) -> CliError {
    CliError::Inadmissible(e.to_string())
}

pub fn dispatch(cmd: &Command, g: &Globals) -> Result<bool, CliError> {
    let cfg = &g.config;
    match cmd {
        Command::Tables { system, family, kmax, nmax, z, v, lambdas, order } => {
            let t = &cfg.tables;
            let sys = params::particle_system(system, cfg)?;
            let families = match params::family(family, cfg)? {
                Some(f) => vec![f],
                None => {
                    let a = rational_or(&family.a, &cfg.family.a, "a", int(1))?;
                    let b = rational_or(&family.b, &cfg.family.b, "b", int(1))?;
                    let lambda = params::family_lambda(family, cfg)?.unwrap_or(ratio(1, 2));
                    vec![Family::Classical, Family::Orthogonal { a, b }, Family::Cheap { lambda }]
                }
            };
            let zs = rational_list(z, &t.z, "z")?.unwrap_or_else(|| vec![ratio(1, 2), int(1)]);
            let vs = rational_list(v, &t.v, "v")?.unwrap_or_else(|| vec![ratio(1, 2), int(1)]);
            let lambdas = rational_list(lambdas, &t.lambda, "lambdas")?
                .unwrap_or_else(|| vec![ratio(1, 4), ratio(1, 2)]);
            let opts = TableOpts {
                kmax: kmax.or(t.kmax).unwrap_or(4),
                nmax: nmax.or(t.nmax).unwrap_or(4),
                order: order.or(t.order).unwrap_or(8),
                zs,
                vs,
                lambdas,
            };
            tables(g, &sys, &families, &opts)
        }
        Command::VerifyDuality { system, kernel, family, mode, max_dual_total, max_entry } => {
            let s = &cfg.verify_duality;
            let sys = params::particle_system(system, cfg)?;
            let kernel = params::kernel(kernel, cfg, 2)?;
            let fam = params::family(family, cfg)?.unwrap_or(Family::Classical);
            let max_dual_total = max_dual_total.or(s.max_dual_total).unwrap_or(3);
            let max_entry = max_entry.or(s.max_entry).unwrap_or(4);
            match mode.clone().or(s.mode.clone()).as_deref().unwrap_or("discrete") {
                "discrete" => verify_discrete(g, &sys, &kernel, fam, max_dual_total, max_entry),
                "mixed" => verify_mixed(g, &sys, &kernel, fam, max_dual_total),
                other => Err(CliError::Usage(format!("unknown mode {other:?} (discrete | mixed)"))),
            }
        }
        Command::VerifyIntertwining { system, kernel, max_total } => {
            let dsys = params::diffusion_system(system, cfg)?;
            let kernel = params::kernel(kernel, cfg, 2)?;
            let max_total = max_total.or(cfg.verify_intertwining.max_total).unwrap_or(4);
            verify_intertwining(g, &dsys, &kernel, max_total)
        }
        Command::VerifyContinuum { system, kernel, c, order, continuum_family } => {
            let s = &cfg.verify_continuum;
            let dsys = params::diffusion_system(system, cfg)?;
            let kernel = params::kernel(kernel, cfg, 2)?;
            let c = rational_or(c, &s.c, "c", int(1))?;
            let order = order.or(s.order).unwrap_or(10);
            let fam = match continuum_family.clone().or(s.family.clone()).as_deref().unwrap_or("standard") {
                "standard" => ContinuumFamily::Standard,
                "regularized" => ContinuumFamily::Regularized,
                other => return Err(CliError::Usage(format!("unknown continuum family {other:?}"))),
            };
            verify_continuum(g, &dsys, &kernel, fam, &c, order)
        }
        Command::StationaryCheck { system, kernel, family, max_total } => {
            let sys = params::particle_system(system, cfg)?;
            let kernel = params::kernel(kernel, cfg, 2)?;
            let fam = params::family(family, cfg)?.unwrap_or(Family::Classical);
            let lambda = match &fam {
                Family::Cheap { lambda } => lambda.clone(),
                _ => rational_or(&family.lambda, &cfg.stationary.lambda, "lambda", ratio(1, 2))?,
            };
            let max_total = max_total.or(cfg.stationary.max_total).unwrap_or(3);
            stationary(g, &sys, kernel.len(), fam, &lambda, max_total)
        }
        Command::Characterize { system, mode, u, v, cap, size, degree } => {
            let s = &cfg.characterize;
            match mode.clone().or(s.mode.clone()).as_deref().unwrap_or("discrete") {
                "discrete" => {
                    let us = rational_list(u, &s.u, "u")?;
                    let vs = rational_list(v, &s.v, "v")?;
                    let tables = match (us, vs) {
                        (Some(u), Some(v)) => {
                            let t = SelfDualityTables::new(u, v);
                            match cap.or(s.cap) {
                                Some(c) => t.with_cap(c),
                                None => t,
                            }
                        }
                        (None, None) => {
                            let sys = params::particle_system(system, cfg)?;
                            rate_tables(&sys, size.or(s.size).unwrap_or(6))?
                        }
                        _ => return Err(CliError::Usage("give both --u and --v, or neither".into())),
                    };
                    characterize_discrete(g, &tables)
                }
                m @ ("continuum-full" | "continuum-diagonal") => {
                    let alpha = params::bep_alpha(system, cfg)?;
                    let mode =
                        if m == "continuum-full" { ContinuumMode::FullEdge } else { ContinuumMode::Diagonal };
                    characterize_continuum(g, &alpha, degree.or(s.degree).unwrap_or(6), mode)
                }
                other => Err(CliError::Usage(format!(
                    "unknown mode {other:?} (discrete | continuum-full | continuum-diagonal)"
                ))),
            }
        }
        Command::Simulate {
            system,
            kernel,
            family,
            t,
            eta,
            xi,
            z,
            samples,
            dt,
            record_every,
            z_threshold,
        } => {
            let s = &cfg.simulate;
            let t = t.or(s.t).unwrap_or(1.0);
            if !(t >= 0.0 && t.is_finite()) {
                return Err(CliError::Inadmissible(format!("t = {t}")));
            }
            if params::is_diffusion(system, cfg)? {
                let alpha = params::bep_alpha(system, cfg)?;
                let z0 = rational_list(z, &s.z, "z")?
                    .ok_or_else(|| CliError::Usage("simulate for bep needs --z".into()))?;
                let kernel = params::kernel(kernel, cfg, z0.len())?;
                let dt = dt.or(s.dt).unwrap_or(0.01);
                let every = record_every.or(s.record_every).unwrap_or(t / 100.0);
                simulate_bep(g, &alpha, &kernel, &z0, t, dt, every)
            } else {
                let sys = params::particle_system(system, cfg)?;
                let eta0: Vec<usize> = int_list(eta, &s.eta, "eta")?
                    .ok_or_else(|| CliError::Usage("simulate needs --eta".into()))?;
                let kernel = params::kernel(kernel, cfg, eta0.len())?;
                let xi0: Option<Vec<usize>> = int_list(xi, &s.xi, "xi")?;
                let fam = params::family(family, cfg)?.unwrap_or(Family::Classical);
                let opts = McOpts {
                    t,
                    samples: samples.or(s.samples).unwrap_or(10_000),
                    threshold: z_threshold.or(s.z_threshold).unwrap_or(4.0),
                };
                simulate_particles(g, &sys, &kernel, &eta0, xi0.as_deref(), fam, &opts)
            }
        }
        Command::ScalingCheck { kernel, gamma, exponents, point, ns } => {
            let s = &cfg.scaling;
            let gamma = rational_or(gamma, &s.gamma, "gamma", int(1))?;
            let exps: Vec<u32> =
                int_list(exponents, &s.exponents, "exponents")?.unwrap_or_else(|| vec![1, 1]);
            let kernel = params::kernel(kernel, cfg, exps.len())?;
            let point = rational_list(point, &s.point, "point")?.unwrap_or_else(|| vec![int(1); exps.len()]);
            let ns: Vec<u64> = int_list(ns, &s.ns, "ns")?.unwrap_or_else(|| vec![100, 1000, 10_000]);
            scaling(g, &gamma, &kernel, &exps, &point, &ns)
        }
    }
}

struct TableOpts {
    kmax: usize,
    nmax: usize,
    order: u32,
    zs: Vec<Rational>,
    vs: Vec<Rational>,
    lambdas: Vec<Rational>,
}

/// `prefactor · e^{exponent·x} · body(x)` for a polynomial body.
fn eval_marked(m: &Marked, point: &[Rational]) -> Option<Bracket> {
    if !m.body.is_polynomial() {
        return None;
    }
    let lin: Rational = m.exponent.iter().zip(point).map(|(c, x)| c * x).sum();
    let e = if lin.is_zero() { Bracket::exact(Rational::one()) } else { exp_bracket(&lin) };
    Some(m.prefactor.mul(&e).scale(&m.body.eval(point)))
}

fn tables(g: &Globals, sys: &ParticleSystem, families: &[Family], o: &TableOpts) -> Result<bool, CliError> {
    let mut out = OutDir::create(&g.out)?;
    let mut skipped = Vec::new();
    let mut discrete = Vec::new();
    let mut mid = Vec::new();
    let mut right = Vec::new();
    let mut right_values = Vec::new();
    let kmax = sys.cap().map_or(o.kmax, |c| o.kmax.min(c));
    let nmax = sys.cap().map_or(o.nmax, |c| o.nmax.min(c));
    for fam in families {
        let label = fam.label();
        let d = match SingleSiteDuality::discrete(sys, fam.clone()) {
            Ok(d) => d,
            Err(e) => {
                skipped.push(format!("{label}: {e}"));
                continue;
            }
        };
        for k in 0..=kmax {
            for n in 0..=nmax {
                let [value, lo, hi, prov] = bracket_cells(&d.eval(k, n).map_err(inadmissible)?);
                discrete.push(vec![label.clone(), k.to_string(), n.to_string(), value, lo, hi, prov]);
            }
        }
        let dm = d.with_signature(Signature::DiscreteContinuum);
        for k in 0..=kmax {
            let m = dm.eval_mid(k).map_err(inadmissible)?;
            for z in &o.zs {
                let [value, lo, hi, prov] =
                    bracket_cells(&eval_marked(&m, std::slice::from_ref(z)).expect("polynomial"));
                mid.push(vec![label.clone(), k.to_string(), m.to_string(), rat(z), value, lo, hi, prov]);
            }
        }
        let r = d.with_signature(Signature::Continuum).eval_right(o.order).map_err(inadmissible)?;
        right.push(vec![label.clone(), o.order.to_string(), r.to_string()]);
        for v in &o.vs {
            for z in &o.zs {
                if let Some(b) = eval_marked(&r, &[v.clone(), z.clone()]) {
                    let [value, lo, hi, prov] = bracket_cells(&b);
                    right_values.push(vec![label.clone(), rat(v), rat(z), value, lo, hi, prov]);
                }
            }
        }
    }

    let marg = MarginalFamily::new(sys);
    let mut nu = Vec::new();
    let mut theta = Vec::new();
    for lambda in &o.lambdas {
        if let Err(e) = marg.check_lambda(lambda) {
            skipped.push(format!("lambda={}: {e}", rat(lambda)));
            continue;
        }
        for n in 0..=nmax {
            let [value, lo, hi, prov] = bracket_cells(&marg.nu(lambda, n).map_err(inadmissible)?);
            nu.push(vec![rat(lambda), n.to_string(), value, lo, hi, prov]);
        }
        for fam in families {
            let ab = match fam {
                Family::Classical => {
                    sys.sigma_beta_params().map(|(_, beta)| (Rational::zero(), beta.recip()))
                }
                Family::Orthogonal { a, b } => Some((a.clone(), b.clone())),
                _ => None,
            };
            if let Some((a, b)) = ab {
                let [value, lo, hi, prov] = bracket_cells(&marg.theta(&a, &b, lambda).map_err(inadmissible)?);
                theta.push(vec![rat(lambda), fam.label(), value, lo, hi, prov]);
            }
        }
    }

    let cells = ["value", "lo", "hi", "provenance"];
    let with =
        |head: &[&'static str]| -> Vec<&'static str> { head.iter().chain(cells.iter()).copied().collect() };
    out.csv("duality_discrete.csv", &with(&["family", "k", "n"]), &discrete)?;
    out.csv("duality_mixed.csv", &with(&["family", "k", "expression", "z"]), &mid)?;
    out.csv("duality_continuum.csv", &["family", "order", "expression"], &right)?;
    out.csv("duality_continuum_values.csv", &with(&["family", "v", "z"]), &right_values)?;
    out.csv("marginals.csv", &with(&["lambda", "n"]), &nu)?;
    out.csv("theta.csv", &with(&["lambda", "family"]), &theta)?;
    out.finish(json!({
        "command": "tables",
        "system": sys.name(),
        "families": families.iter().map(Family::label).collect::<Vec<_>>(),
        "rows": {
            "discrete": discrete.len(),
            "mixed": mid.len(),
            "continuum": right.len(),
            "continuum_values": right_values.len(),
            "marginals": nu.len(),
            "theta": theta.len(),
        },
        "skipped": skipped,
        "status": "pass",
        "seed": g.seed,
    }))?;
    Ok(true)
}

fn verify_discrete(
    g: &Globals,
    sys: &ParticleSystem,
    kernel: &ipsdual::kernel::RateKernel,
    fam: Family,
    max_dual_total: usize,
    max_entry: usize,
) -> Result<bool, CliError> {
    let d = SingleSiteDuality::discrete(sys, fam.clone()).map_err(inadmissible)?;
    let r = sweep_discrete(sys, kernel, &d, max_dual_total, max_entry).map_err(inadmissible)?;
    let out = OutDir::create(&g.out)?;
    out.finish(json!({
        "command": "verify-duality",
        "mode": "discrete",
        "system": sys.name(),
        "family": fam.label(),
        "sites": kernel.len(),
        "max_dual_total": max_dual_total,
        "max_entry": max_entry,
        "checked": r.checked,
        "nonzero": r.nonzero,
        "summary": residual_line(r.nonzero, r.checked),
        "status": status(r.passed()),
        "seed": g.seed,
    }))?;
    Ok(r.passed())
}

fn verify_mixed(
    g: &Globals,
    sys: &ParticleSystem,
    kernel: &ipsdual::kernel::RateKernel,
    fam: Family,
    kmax: usize,
) -> Result<bool, CliError> {
    let (sigma, alpha) = sys.sigma_beta_params().filter(|(s, _)| s.is_one()).ok_or_else(|| {
        CliError::Inadmissible("mixed mode needs an inclusion process (SIP/BEP pair)".into())
    })?;
    debug_assert!(sigma.is_one());
    let dsys = ipsdual::systems::DiffusionSystem::bep(alpha.clone()).map_err(inadmissible)?;
    let rows = match &fam {
        Family::Classical => {
            let d = SingleSiteDuality::new(sys, fam.clone(), Signature::DiscreteContinuum)
                .map_err(inadmissible)?;
            mid_rows(&d, kmax).map_err(inadmissible)?
        }
        Family::Orthogonal { a, b } => (0..=kmax)
            .map(|k| laplace_recover(&alpha, a, b, k))
            .collect::<Result<Vec<_>, _>>()
            .map_err(inadmissible)?,
        other => {
            return Err(CliError::Inadmissible(format!(
                "mixed mode supports classical and orthogonal families, not {}",
                other.label()
            )))
        }
    };
    let mut nonzero = Vec::new();
    let configs = enumerate_configurations(kernel.len(), kmax, Some(kmax));
    for xi in &configs {
        let r = duality_residual_mixed(sys, &dsys, kernel, &rows, xi).map_err(inadmissible)?;
        if !r.is_zero() {
            nonzero.push(vec![join(xi), r.to_string(), EXACT.to_string()]);
        }
    }
    let mut out = OutDir::create(&g.out)?;
    out.csv("mixed_residuals.csv", &["xi", "residual", "provenance"], &nonzero)?;
    let ok = nonzero.is_empty();
    out.finish(json!({
        "command": "verify-duality",
        "mode": "mixed",
        "system": sys.name(),
        "family": fam.label(),
        "sites": kernel.len(),
        "max_dual_total": kmax,
        "checked": configs.len(),
        "nonzero": nonzero.len(),
        "summary": residual_line(nonzero.len(), configs.len()),
        "status": status(ok),
        "seed": g.seed,
    }))?;
    Ok(ok)
}

fn table_json(t: &ResidualTable) -> Value {
    serde_json::to_value(t).expect("residual table serializes")
}

fn verify_intertwining(
    g: &Globals,
    dsys: &ipsdual::systems::DiffusionSystem,
    kernel: &ipsdual::kernel::RateKernel,
    max_total: usize,
) -> Result<bool, CliError> {
    let n = kernel.len();
    let configs = enumerate_configurations(n, max_total, Some(max_total));
    let mut forward = ResidualTable::default();
    let mut inverse = ResidualTable::default();
    let mut symmetry = ResidualTable::default();
    let mut forward_fail = Vec::new();
    for c in &configs {
        let f = FinSupportFn::delta(c);
        let series = check_intertwining(dsys, kernel, &f).map_err(inadmissible)?;
        forward.checked += 1;
        if !series.is_zero() {
            forward_fail.push(json!({ "f": c, "residual": series.to_string() }));
        }
        let mut mono = TruncatedSeries::zero(n);
        mono.add_term(c.iter().map(|&e| e as u32).collect(), Rational::one());
        inverse.merge(check_inverse_intertwining(dsys, kernel, &mono, max_total + 1).map_err(inadmissible)?);
        symmetry.merge(check_symmetry_lattice(dsys, kernel, &f, &configs).map_err(inadmissible)?);
    }
    let forward_nonzero = forward_fail.len();
    let total_checked = forward.checked + inverse.checked + symmetry.checked;
    let total_nonzero = forward_nonzero + inverse.nonzero.len() + symmetry.nonzero.len();
    let ok = total_nonzero == 0;
    let mut out = OutDir::create(&g.out)?;
    out.json(
        "intertwining.json",
        &json!({
            "forward": { "checked": forward.checked, "nonzero": forward_fail },
            "inverse": table_json(&inverse),
            "symmetry": table_json(&symmetry),
        }),
    )?;
    out.finish(json!({
        "command": "verify-intertwining",
        "sigma": rat(&dsys.sigma),
        "beta": rat(&dsys.beta),
        "sites": n,
        "max_total": max_total,
        "checks": {
            "forward": { "checked": forward.checked, "nonzero": forward_nonzero },
            "inverse": { "checked": inverse.checked, "nonzero": inverse.nonzero.len() },
            "symmetry": { "checked": symmetry.checked, "nonzero": symmetry.nonzero.len() },
        },
        "checked": total_checked,
        "nonzero": total_nonzero,
        "summary": residual_line(total_nonzero, total_checked),
        "status": status(ok),
        "seed": g.seed,
    }))?;
    Ok(ok)
}

fn verify_continuum(
    g: &Globals,
    dsys: &ipsdual::systems::DiffusionSystem,
    kernel: &ipsdual::kernel::RateKernel,
    fam: ContinuumFamily,
    c: &Rational,
    order: u32,
) -> Result<bool, CliError> {
    let r = selfduality_residual_continuum(dsys, kernel, fam, c, order).map_err(inadmissible)?;
    let nvars = 2 * kernel.len();
    // monomials of total degree < order in 2|V| variables
    let checked = binomial(order as usize + nvars - 1, nvars).to_integer();
    let rows: Vec<Vec<String>> = r.terms().map(|(m, c)| vec![join(m), rat(c), EXACT.to_string()]).collect();
    let mut out = OutDir::create(&g.out)?;
    out.csv("continuum_residual.csv", &["exponents", "coefficient", "provenance"], &rows)?;
    let ok = rows.is_empty();
    out.finish(json!({
        "command": "verify-continuum",
        "sigma": rat(&dsys.sigma),
        "beta": rat(&dsys.beta),
        "family": match fam { ContinuumFamily::Standard => "standard", ContinuumFamily::Regularized => "regularized" },
        "c": rat(c),
        "order": order,
        "sites": kernel.len(),
        "checked": checked.to_string(),
        "nonzero": rows.len(),
        "summary": format!("residuals: {} nonzero / {checked} checked", rows.len()),
        "status": status(ok),
        "seed": g.seed,
    }))?;
    Ok(ok)
}

fn stationary(
    g: &Globals,
    sys: &ParticleSystem,
    nsites: usize,
    fam: Family,
    lambda: &Rational,
    max_total: usize,
) -> Result<bool, CliError> {
    let d = SingleSiteDuality::discrete(sys, fam.clone()).map_err(inadmissible)?;
    let max_entry = sys.cap().map_or(max_total, |c| c.min(max_total));
    let mut rows = Vec::new();
    let mut failures = 0;
    for xi in enumerate_configurations(nsites, max_entry, Some(max_total)) {
        let r = stationary_relation_check(&d, lambda, &xi).map_err(inadmissible)?;
        failures += usize::from(!r.agrees);
        let [_, ilo, ihi, iprov] = bracket_cells(&r.integral);
        let [_, tlo, thi, tprov] = bracket_cells(&r.theta_power);
        let prov = if iprov == EXACT && tprov == EXACT { iprov } else { crate::output::BRACKET.to_string() };
        rows.push(vec![join(&xi), ilo, ihi, tlo, thi, r.agrees.to_string(), prov]);
    }
    let theta = ipsdual::verify::theta_of(&d, lambda).map_err(inadmissible)?;
    let mut out = OutDir::create(&g.out)?;
    out.csv(
        "stationary.csv",
        &["xi", "integral_lo", "integral_hi", "theta_power_lo", "theta_power_hi", "agrees", "provenance"],
        &rows,
    )?;
    let ok = failures == 0;
    out.finish(json!({
        "command": "stationary-check",
        "system": sys.name(),
        "family": fam.label(),
        "lambda": rat(lambda),
        "theta": bracket_json(&theta),
        "sites": nsites,
        "max_total": max_total,
        "checked": rows.len(),
        "nonzero": failures,
        "summary": format!("disagreements: {failures} / {} checked", rows.len()),
        "status": status(ok),
        "seed": g.seed,
    }))?;
    Ok(ok)
}

/// `u(0..=m)`, `v(0..=m)` of a preset, zero past the cap.
fn rate_tables(sys: &ParticleSystem, m: usize) -> Result<SelfDualityTables, CliError> {
    let at = |f: &dyn Fn(usize) -> Option<Rational>, n: usize| -> Result<Rational, CliError> {
        match f(n) {
            Some(x) => Ok(x),
            None if sys.cap().is_some_and(|c| n > c) => Ok(Rational::zero()),
            None => Err(CliError::Inadmissible(format!("rate undefined at n = {n}"))),
        }
    };
    let u = (0..=m).map(|n| at(&|k| sys.u(k), n)).collect::<Result<Vec<_>, _>>()?;
    let v = (0..=m).map(|n| at(&|k| sys.v(k), n)).collect::<Result<Vec<_>, _>>()?;
    let t = SelfDualityTables::new(u, v);
    Ok(match sys.cap() {
        Some(c) => t.with_cap(c),
        None => t,
    })
}

fn characterize_discrete(g: &Globals, t: &SelfDualityTables) -> Result<bool, CliError> {
    let ch = characterize_selfduality(t).map_err(inadmissible)?;
    let affine = has_affine_form(t);
    let expected = if affine { 2 } else { 1 };
    let mut out = OutDir::create(&g.out)?;
    let ch_json = serde_json::to_value(&ch).expect("characterization serializes");
    out.json("characterization.json", &ch_json)?;
    let ok = ch.dimension == expected;
    out.finish(json!({
        "command": "characterize",
        "mode": "discrete",
        "u": t.u.iter().map(rat).collect::<Vec<_>>(),
        "v": t.v.iter().map(rat).collect::<Vec<_>>(),
        "cap": t.cap,
        "dimension": ch.dimension,
        "affine_form": affine,
        "expected_dimension": expected,
        "status": status(ok),
        "seed": g.seed,
    }))?;
    Ok(ok)
}

fn characterize_continuum(
    g: &Globals,
    alpha: &Rational,
    degree: usize,
    mode: ContinuumMode,
) -> Result<bool, CliError> {
    let ch = characterize_continuum_first_dual(alpha, degree, mode).map_err(inadmissible)?;
    let mut out = OutDir::create(&g.out)?;
    out.json("characterization.json", &serde_json::to_value(&ch).expect("characterization serializes"))?;
    let ok = ch.dimension == 2;
    out.finish(json!({
        "command": "characterize",
        "mode": match mode { ContinuumMode::FullEdge => "continuum-full", ContinuumMode::Diagonal => "continuum-diagonal" },
        "alpha": rat(alpha),
        "degree": degree,
        "dimension": ch.dimension,
        "expected_dimension": 2,
        "status": status(ok),
        "seed": g.seed,
    }))?;
    Ok(ok)
}

struct McOpts {
    t: f64,
    samples: usize,
    threshold: f64,
}

fn simulate_particles(
    g: &Globals,
    sys: &ParticleSystem,
    kernel: &ipsdual::kernel::RateKernel,
    eta0: &[usize],
    xi0: Option<&[usize]>,
    fam: Family,
    o: &McOpts,
) -> Result<bool, CliError> {
    let (end, traj) = gillespie_simulate(sys, kernel, eta0, o.t, g.seed, true).map_err(inadmissible)?;
    let traj = traj.expect("trajectory requested");
    let total: usize = eta0.iter().sum();
    let conserved = traj.states.iter().all(|s| s.iter().sum::<usize>() == total);
    let rows: Vec<Vec<String>> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| {
            let mut r = vec![format!("{t}")];
            r.extend(s.iter().map(|n| n.to_string()));
            r.push(MONTE_CARLO.to_string());
            r
        })
        .collect();
    let mut header: Vec<String> = vec!["time".into()];
    header.extend(kernel.labels().iter().map(|l| format!("site_{l}")));
    header.push("provenance".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = OutDir::create(&g.out)?;
    out.csv("trajectory.csv", &header, &rows)?;
    let mut ok = conserved;
    let mut summary = json!({
        "command": "simulate",
        "system": sys.name(),
        "sites": kernel.len(),
        "t": o.t,
        "eta0": eta0,
        "final": end,
        "jumps": traj.states.len() - 1,
        "conserved": conserved,
        "seed": g.seed,
    });
    if let Some(xi0) = xi0 {
        let d = SingleSiteDuality::discrete(sys, fam.clone()).map_err(inadmissible)?;
        let r = stochastic_duality_check(sys, kernel, &d, xi0, eta0, o.t, o.samples, g.seed)
            .map_err(inadmissible)?;
        let within = r.z_lhs_exact.abs() < o.threshold && r.z_rhs_exact.abs() < o.threshold;
        ok &= within;
        let report = serde_json::to_value(&r).expect("report serializes");
        out.json("stochastic.json", &report)?;
        summary["duality"] = json!({
            "family": fam.label(),
            "xi0": xi0,
            "samples": o.samples,
            "z_score": r.z_score,
            "z_lhs_exact": r.z_lhs_exact,
            "z_rhs_exact": r.z_rhs_exact,
            "threshold": o.threshold,
            "provenance": MONTE_CARLO,
        });
    }
    summary["status"] = Value::from(status(ok));
    out.finish(summary)?;
    Ok(ok)
}

fn simulate_bep(
    g: &Globals,
    alpha: &Rational,
    kernel: &ipsdual::kernel::RateKernel,
    z0: &[Rational],
    t: f64,
    dt: f64,
    every: f64,
) -> Result<bool, CliError> {
    if !(every > 0.0 && every.is_finite()) {
        return Err(CliError::Inadmissible(format!("record_every = {every}")));
    }
    if z0.len() != kernel.len() {
        return Err(CliError::Usage(format!("{} energies for {} sites", z0.len(), kernel.len())));
    }
    let dsys = ipsdual::systems::DiffusionSystem::bep(alpha.clone()).map_err(inadmissible)?;
    let mut z = EnergyConfiguration::from_rationals(z0).map_err(inadmissible)?;
    let ticks = z.total_ticks();
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let row = |time: f64, z: &EnergyConfiguration| -> Vec<String> {
        let mut r = vec![format!("{time}")];
        r.extend(z.to_f64().iter().map(|x| format!("{x}")));
        r.push(MONTE_CARLO.to_string());
        r
    };
    let mut rows = vec![row(0.0, &z)];
    let mut now = 0.0;
    let mut conserved = true;
    while now < t {
        let step = every.min(t - now);
        diffusion_path(&dsys, kernel, &mut z, step, dt, &mut rng).map_err(inadmissible)?;
        now += step;
        conserved &= z.total_ticks() == ticks;
        rows.push(row(now, &z));
    }
    let mut header: Vec<String> = vec!["time".into()];
    header.extend(kernel.labels().iter().map(|l| format!("site_{l}")));
    header.push("provenance".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = OutDir::create(&g.out)?;
    out.csv("trajectory.csv", &header, &rows)?;
    out.finish(json!({
        "command": "simulate",
        "system": format!("BEP({})", rat(alpha)),
        "sites": kernel.len(),
        "t": t,
        "dt": dt,
        "z0": z0.iter().map(rat).collect::<Vec<_>>(),
        "final": z.to_f64(),
        "conserved": conserved,
        "status": status(conserved),
        "seed": g.seed,
    }))?;
    Ok(conserved)
}

fn scaling(
    g: &Globals,
    gamma: &Rational,
    kernel: &ipsdual::kernel::RateKernel,
    exps: &[u32],
    point: &[Rational],
    ns: &[u64],
) -> Result<bool, CliError> {
    let f = TruncatedSeries::monomial(exps.len(), exps.to_vec(), Rational::one());
    let r = scaling_limit_check(gamma, kernel, &f, point, ns).map_err(inadmissible)?;
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|row| {
            vec![row.n.to_string(), row.lattice.clone(), row.limit.clone(), row.error.clone(), EXACT.into()]
        })
        .collect();
    let exact = r.rows.iter().all(|row| row.error_f64 == 0.0);
    let ok = exact || r.order.is_some_and(|o| (o - 1.0).abs() <= 0.2);
    let mut out = OutDir::create(&g.out)?;
    out.csv("scaling.csv", &["n", "lattice", "limit", "error", "provenance"], &rows)?;
    out.finish(json!({
        "command": "scaling-check",
        "gamma": rat(gamma),
        "exponents": exps,
        "point": point.iter().map(rat).collect::<Vec<_>>(),
        "ns": ns,
        "empirical_order": r.order,
        "exact_at_every_n": exact,
        "status": status(ok),
        "seed": g.seed,
    }))?;
    Ok(ok)
}
