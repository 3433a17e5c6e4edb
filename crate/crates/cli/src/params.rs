//! Merging flags over config values and building engine objects.

use ipsdual::duality::Family;
use ipsdual::kernel::{KernelSpec, RateKernel};
use ipsdual::rational::{parse_rational, Rational};
use ipsdual::systems::{DiffusionSystem, ParticleSystem};
use num_traits::ToPrimitive;

use crate::config::{Config, RationalText};
use crate::{CliError, FamilyArgs, KernelArgs, SystemArgs};

/// Where a value came from; decides the exit code of a parse error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Flag,
    Config,
}

fn parse_error(src: Source, name: &str, text: &str) -> CliError {
    let msg = format!("{name}: cannot parse {text:?} as a rational");
    match src {
        Source::Flag => CliError::Usage(msg),
        Source::Config => CliError::Config(msg),
    }
}

/// `flag`, else the config value, parsed as a rational.
pub fn rational(
    flag: &Option<String>,
    cfg: &Option<RationalText>,
    name: &str,
) -> Result<Option<Rational>, CliError> {
    if let Some(s) = flag {
        return parse_rational(s).map(Some).map_err(|_| parse_error(Source::Flag, name, s));
    }
    if let Some(c) = cfg {
        let s = c.text();
        return parse_rational(&s).map(Some).map_err(|_| parse_error(Source::Config, name, &s));
    }
    Ok(None)
}

pub fn rational_or(
    flag: &Option<String>,
    cfg: &Option<RationalText>,
    name: &str,
    default: Rational,
) -> Result<Rational, CliError> {
    Ok(rational(flag, cfg, name)?.unwrap_or(default))
}

/// Comma-separated rationals from a flag, else a config list.
pub fn rational_list(
    flag: &Option<String>,
    cfg: &Option<Vec<RationalText>>,
    name: &str,
) -> Result<Option<Vec<Rational>>, CliError> {
    if let Some(s) = flag {
        return s
            .split(',')
            .map(|t| {
                let t = t.trim();
                parse_rational(t).map_err(|_| parse_error(Source::Flag, name, t))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some);
    }
    if let Some(list) = cfg {
        return list
            .iter()
            .map(|c| {
                let t = c.text();
                parse_rational(&t).map_err(|_| parse_error(Source::Config, name, &t))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some);
    }
    Ok(None)
}

/// Comma-separated integers from a flag, else a config list.
pub fn int_list<T: std::str::FromStr + Clone>(
    flag: &Option<String>,
    cfg: &Option<Vec<T>>,
    name: &str,
) -> Result<Option<Vec<T>>, CliError> {
    if let Some(s) = flag {
        return s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<T>()
                    .map_err(|_| CliError::Usage(format!("{name}: cannot parse {t:?} as an integer")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some);
    }
    Ok(cfg.clone())
}

fn system_name(args: &SystemArgs, cfg: &Config) -> Result<(String, Source), CliError> {
    match (&args.system, &cfg.system.name) {
        (Some(s), _) => Ok((s.to_ascii_lowercase(), Source::Flag)),
        (None, Some(s)) => Ok((s.to_ascii_lowercase(), Source::Config)),
        (None, None) => Err(CliError::Usage("no system given (--system or [system].name)".into())),
    }
}

fn unknown(src: Source, what: &str, name: &str) -> CliError {
    let msg = format!("unknown {what} {name:?}");
    match src {
        Source::Flag => CliError::Usage(msg),
        Source::Config => CliError::Config(msg),
    }
}

fn inadmissible(e: impl std::fmt::Display) -> CliError {
    CliError::Inadmissible(e.to_string())
}

fn gamma_usize(g: &Rational) -> Result<usize, CliError> {
    if g.is_integer() {
        if let Some(n) = g.to_integer().to_usize() {
            return Ok(n);
        }
    }
    Err(CliError::Inadmissible(format!("SEP capacity must be a nonnegative integer, got {g}")))
}

fn one() -> Rational {
    Rational::from_integer(1.into())
}

/// Canonical parameters shared by both kinds of system.
struct SystemParams {
    name: String,
    src: Source,
    alpha: Rational,
    gamma: Rational,
    sigma: Option<Rational>,
    beta: Option<Rational>,
}

fn system_params(args: &SystemArgs, cfg: &Config) -> Result<SystemParams, CliError> {
    let (name, src) = system_name(args, cfg)?;
    let s = &cfg.system;
    Ok(SystemParams {
        name,
        src,
        alpha: rational_or(&args.alpha, &s.alpha, "alpha", one())?,
        gamma: rational_or(&args.gamma, &s.gamma, "gamma", one())?,
        sigma: rational(&args.sigma, &s.sigma, "sigma")?,
        beta: rational(&args.beta, &s.beta, "beta")?,
    })
}

fn sigma_beta(p: &SystemParams) -> Result<(Rational, Rational), CliError> {
    match (&p.sigma, &p.beta) {
        (Some(s), Some(b)) => Ok((s.clone(), b.clone())),
        _ => Err(CliError::Usage("sigma-beta needs both --sigma and --beta".into())),
    }
}

pub fn particle_system(args: &SystemArgs, cfg: &Config) -> Result<ParticleSystem, CliError> {
    let p = system_params(args, cfg)?;
    match p.name.as_str() {
        "irw" => Ok(ParticleSystem::irw()),
        "sip" => ParticleSystem::sip(p.alpha.clone()).map_err(inadmissible),
        "sep" => ParticleSystem::sep(gamma_usize(&p.gamma)?).map_err(inadmissible),
        "sigma-beta" => {
            let (s, b) = sigma_beta(&p)?;
            ParticleSystem::sigma_beta(s, b).map_err(inadmissible)
        }
        "bep" => {
            Err(CliError::Inadmissible("bep is a diffusion; this command needs a particle system".into()))
        }
        other => Err(unknown(p.src, "system", other)),
    }
}

/// The diffusion limit named by the system: `irw`, `sip`/`bep` (BEP(α)),
/// `sep` (exclusion limit with capacity γ) or `sigma-beta`.
pub fn diffusion_system(args: &SystemArgs, cfg: &Config) -> Result<DiffusionSystem, CliError> {
    let p = system_params(args, cfg)?;
    match p.name.as_str() {
        "irw" => Ok(DiffusionSystem::irw_limit()),
        "sip" | "bep" => DiffusionSystem::bep(p.alpha.clone()).map_err(inadmissible),
        "sep" => DiffusionSystem::sep_limit(p.gamma.clone()).map_err(inadmissible),
        "sigma-beta" => {
            let (s, b) = sigma_beta(&p)?;
            DiffusionSystem::new(s, b).map_err(inadmissible)
        }
        other => Err(unknown(p.src, "system", other)),
    }
}

/// True when the configured system is simulated as a diffusion.
pub fn is_diffusion(args: &SystemArgs, cfg: &Config) -> Result<bool, CliError> {
    Ok(system_name(args, cfg)?.0 == "bep")
}

pub fn bep_alpha(args: &SystemArgs, cfg: &Config) -> Result<Rational, CliError> {
    Ok(system_params(args, cfg)?.alpha)
}

pub fn kernel(args: &KernelArgs, cfg: &Config, default_sites: usize) -> Result<RateKernel, CliError> {
    let spec = if args.geometry.is_some() || args.sites.is_some() {
        let base = cfg.kernel.clone().unwrap_or_default();
        KernelSpec {
            geometry: Some(args.geometry.clone().or(base.geometry).unwrap_or_else(|| "path".into())),
            sites: args.sites.or(base.sites).or(Some(default_sites)),
            labels: None,
            edges: None,
        }
    } else {
        cfg.kernel.clone().unwrap_or(KernelSpec {
            geometry: Some("path".into()),
            sites: Some(default_sites),
            labels: None,
            edges: None,
        })
    };
    let from_flags = args.geometry.is_some() || args.sites.is_some();
    spec.build().map_err(|e| {
        if from_flags {
            CliError::Usage(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    })
}

/// The family selected by flags/config, or `None` when neither names one.
pub fn family(args: &FamilyArgs, cfg: &Config) -> Result<Option<Family>, CliError> {
    let f = &cfg.family;
    let (name, src) = match (&args.family, &f.name) {
        (Some(s), _) => (s.to_ascii_lowercase(), Source::Flag),
        (None, Some(s)) => (s.to_ascii_lowercase(), Source::Config),
        (None, None) => return Ok(None),
    };
    let a = rational_or(&args.a, &f.a, "a", one())?;
    let b = rational_or(&args.b, &f.b, "b", one())?;
    let lambda = rational_or(&args.lambda, &f.lambda, "lambda", Rational::new(1.into(), 2.into()))?;
    Ok(Some(match name.as_str() {
        "classical" => Family::Classical,
        "orthogonal" => Family::Orthogonal { a, b },
        "cheap" => Family::Cheap { lambda },
        "trivial" => Family::Trivial { a },
        other => return Err(unknown(src, "family", other)),
    }))
}

/// λ given with the family flags, if any.
pub fn family_lambda(args: &FamilyArgs, cfg: &Config) -> Result<Option<Rational>, CliError> {
    rational(&args.lambda, &cfg.family.lambda, "lambda")
}
