use std::path::Path;

use super::{
    dyn_equivalent, Altruism, BenefitRule, BestReply, Coalition, EpsilonNash, Incentive, Logit,
    MarginOfVictory, MeanDynamics, Nash, Pareto, Projection, Replicator, Rival, RivalVariant,
    SimultaneousUpdate, Smith, StrategicUpdate, SwitchRateTable, Translation, Zero,
};
use crate::error::{Error, Result};

/// Accepted incentive spec strings, one per line.
pub const SPEC_GRAMMAR: &str = "\
nash
replicator[:g=neg_u|g=const:<v>|g=shift]
projection
best-reply
logit:eta=<v>
smith
zero
eps-nash[:eps=<v>]
su
ssu[:gamma-dependent]
altruism
pareto
coalition
margin
rival[:perm=<images>][:variant=hurt|margin]
mean:rho=<file>
dyn-equiv:<spec>";

fn unknown(spec: &str, why: &str) -> Error {
    Error::Parse(format!(
        "invalid incentive spec `{spec}`: {why}\nvalid specs:\n{SPEC_GRAMMAR}"
    ))
}

fn number(spec: &str, text: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| unknown(spec, &format!("`{text}` is not a number")))
}

fn no_params(spec: &str, params: Option<&str>) -> Result<()> {
    match params {
        None => Ok(()),
        Some(p) => Err(unknown(spec, &format!("unexpected parameters `{p}`"))),
    }
}

/// Parses an incentive spec string. Files named by `mean:rho=<file>` are
/// read relative to the working directory.
pub fn parse_spec(spec: &str) -> Result<Box<dyn Incentive>> {
    let spec = spec.trim();
    let (name, params) = match spec.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (spec, None),
    };
    let incentive: Box<dyn Incentive> = match name {
        "nash" => no_params(spec, params).map(|_| Box::new(Nash) as _)?,
        "projection" => no_params(spec, params).map(|_| Box::new(Projection) as _)?,
        "best-reply" => no_params(spec, params).map(|_| Box::new(BestReply) as _)?,
        "smith" => no_params(spec, params).map(|_| Box::new(Smith) as _)?,
        "zero" => no_params(spec, params).map(|_| Box::new(Zero) as _)?,
        "su" => no_params(spec, params).map(|_| Box::new(SimultaneousUpdate) as _)?,
        "altruism" => no_params(spec, params).map(|_| Box::new(Altruism) as _)?,
        "pareto" => no_params(spec, params).map(|_| Box::new(Pareto) as _)?,
        "coalition" => no_params(spec, params).map(|_| Box::new(Coalition) as _)?,
        "margin" => no_params(spec, params).map(|_| Box::new(MarginOfVictory) as _)?,
        "replicator" => {
            let translation = match params {
                None | Some("g=neg_u") => Translation::NegUtility,
                Some("g=shift") => Translation::ShiftMin,
                Some(p) => match p.strip_prefix("g=const:") {
                    Some(v) => Translation::Constant(number(spec, v)?),
                    None => return Err(unknown(spec, "expected g=neg_u, g=const:<v> or g=shift")),
                },
            };
            Box::new(Replicator::new(translation))
        }
        "logit" => {
            let eta = params
                .and_then(|p| p.strip_prefix("eta="))
                .ok_or_else(|| unknown(spec, "logit needs eta=<v>"))?;
            Box::new(Logit::new(number(spec, eta)?)?)
        }
        "eps-nash" => match params {
            None => Box::new(EpsilonNash::with_default_epsilon()),
            Some(p) => {
                let eps = p
                    .strip_prefix("eps=")
                    .ok_or_else(|| unknown(spec, "expected eps=<v>"))?;
                Box::new(EpsilonNash::new(number(spec, eps)?)?)
            }
        },
        "ssu" => {
            let rule = match params {
                None => BenefitRule::MixedProfile,
                Some("gamma-dependent") => BenefitRule::PureProfile,
                Some("always") => BenefitRule::Always,
                Some("never") => BenefitRule::Never,
                Some(p) => return Err(unknown(spec, &format!("unknown ssu rule `{p}`"))),
            };
            Box::new(StrategicUpdate::new(rule))
        }
        "rival" => {
            let mut perm = None;
            let mut variant = RivalVariant::Hurt;
            for part in params.into_iter().flat_map(|p| p.split(':')) {
                if let Some(images) = part.strip_prefix("perm=") {
                    let parsed = images
                        .split(',')
                        .map(|t| match t.trim().parse::<usize>() {
                            Ok(k) if k >= 1 => Ok(k - 1),
                            _ => Err(unknown(spec, &format!("bad player `{t}` in perm"))),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    perm = Some(parsed);
                } else if let Some(v) = part.strip_prefix("variant=") {
                    variant = match v {
                        "hurt" => RivalVariant::Hurt,
                        "margin" => RivalVariant::Margin,
                        _ => return Err(unknown(spec, "variant must be hurt or margin")),
                    };
                } else {
                    return Err(unknown(spec, &format!("unknown rival parameter `{part}`")));
                }
            }
            Box::new(Rival::new(perm, variant)?)
        }
        "mean" => {
            let path = params
                .and_then(|p| p.strip_prefix("rho="))
                .ok_or_else(|| unknown(spec, "mean needs rho=<file>"))?;
            let table = SwitchRateTable::load(Path::new(path))?;
            Box::new(MeanDynamics::new(table).with_source(path))
        }
        "dyn-equiv" => {
            let inner = params.ok_or_else(|| unknown(spec, "dyn-equiv needs an inner spec"))?;
            Box::new(dyn_equivalent(parse_spec(inner)?))
        }
        _ => return Err(unknown(spec, &format!("unknown incentive `{name}`"))),
    };
    Ok(incentive)
}
