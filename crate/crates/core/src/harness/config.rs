//! `key = value` sweep configuration files.
//!
//! ```text
//! # 1D setup
//! geometry = 8,4,1            # n,r,d  or  n1,n2,r1,r2,d1,d2
//! teacher = adversarial       # adversarial | random:SEED | explicit:w1,w2,...
//! inputs = gaussian           # gaussian | rademacher | sphere
//! covariance = identity       # identity | random:CONDITION:SEED
//! normalize = true
//! noise = none                # none | gaussian:STD | rademacher:SCALE
//! alpha = 0
//! eta_grid = 0.01,1.0,0.01    # start,stop,step
//! trials_per_eta = 50
//! theta = 0.1
//! iterations = 6000
//! algorithms = convotron,sgd
//! base_seed = 0
//! ```
//!
//! Missing keys take the [`SweepConfig::default`] value. `covariance` and
//! `normalize` only apply to Gaussian inputs.

use std::collections::HashSet;
use std::str::FromStr;

use super::{CovarianceSpec, EtaGrid, Geometry, SamplerSpec, SweepConfig, TeacherSpec};
use crate::distributions::NoiseModel;
use crate::error::{Error, Result};
use crate::learners::Algorithm;

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn num<T: FromStr>(s: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse::<T>().map_err(|e| err(line, format!("bad value {s:?}: {e}")))
}

fn list<T: FromStr>(s: &str, line: usize) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',').map(|v| num(v, line)).collect()
}

pub fn parse(text: &str) -> Result<SweepConfig> {
    let mut cfg = SweepConfig::default();
    let mut seen = HashSet::new();
    let mut inputs = "gaussian".to_string();
    let mut covariance = CovarianceSpec::Identity;
    let mut normalize = true;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| err(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(err(line, format!("duplicate key {key:?}")));
        }
        match key {
            "geometry" => {
                cfg.geometry = match list::<usize>(value, line)?[..] {
                    [n, r, d] => Geometry::Stride1D { n, r, d },
                    [n1, n2, r1, r2, d1, d2] => Geometry::Stride2D { n1, n2, r1, r2, d1, d2 },
                    _ => return Err(err(line, "geometry takes 3 or 6 integers")),
                }
            }
            "teacher" => {
                cfg.teacher = match value.split_once(':') {
                    None if value == "adversarial" => TeacherSpec::Adversarial1D,
                    Some(("random", seed)) => TeacherSpec::RandomUnit(num(seed, line)?),
                    Some(("explicit", w)) => TeacherSpec::Explicit(list(w, line)?),
                    _ => return Err(err(line, format!("unknown teacher {value:?}"))),
                }
            }
            "inputs" => {
                if !matches!(value, "gaussian" | "rademacher" | "sphere") {
                    return Err(err(line, format!("unknown inputs {value:?}")));
                }
                inputs = value.to_string();
            }
            "covariance" => {
                covariance = match value.split(':').collect::<Vec<_>>()[..] {
                    ["identity"] => CovarianceSpec::Identity,
                    ["random", c, s] => CovarianceSpec::Random { condition: num(c, line)?, seed: num(s, line)? },
                    _ => return Err(err(line, format!("unknown covariance {value:?}"))),
                }
            }
            "normalize" => normalize = num(value, line)?,
            "noise" => {
                cfg.noise = match value.split_once(':') {
                    None if value == "none" => NoiseModel::None,
                    Some(("gaussian", s)) => NoiseModel::Gaussian { std: num(s, line)? },
                    Some(("rademacher", s)) => NoiseModel::ScaledRademacher { scale: num(s, line)? },
                    _ => return Err(err(line, format!("unknown noise {value:?}"))),
                }
            }
            "alpha" => cfg.alpha = num(value, line)?,
            "eta_grid" => {
                cfg.eta_grid = match list::<f64>(value, line)?[..] {
                    [start, stop, step] => EtaGrid { start, stop, step },
                    _ => return Err(err(line, "eta_grid takes start,stop,step")),
                }
            }
            "trials_per_eta" => cfg.trials_per_eta = num(value, line)?,
            "theta" => cfg.theta = num(value, line)?,
            "iterations" => cfg.iterations = num(value, line)?,
            "algorithms" => {
                cfg.algorithms = if value.is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|a| a.parse().map_err(|e: Error| err(line, e.to_string())))
                        .collect::<Result<_>>()?
                }
            }
            "base_seed" => cfg.base_seed = num(value, line)?,
            other => return Err(err(line, format!("unknown key {other:?}"))),
        }
    }

    cfg.sampler = match inputs.as_str() {
        "rademacher" => SamplerSpec::Rademacher,
        "sphere" => SamplerSpec::UniformSphere,
        _ => SamplerSpec::Gaussian { covariance, normalize },
    };
    cfg.validate()?;
    Ok(cfg)
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

pub fn to_text(cfg: &SweepConfig) -> String {
    let geometry = match cfg.geometry {
        Geometry::Stride1D { n, r, d } => join(&[n, r, d]),
        Geometry::Stride2D { n1, n2, r1, r2, d1, d2 } => join(&[n1, n2, r1, r2, d1, d2]),
    };
    let teacher = match &cfg.teacher {
        TeacherSpec::Adversarial1D => "adversarial".to_string(),
        TeacherSpec::RandomUnit(seed) => format!("random:{seed}"),
        TeacherSpec::Explicit(w) => format!("explicit:{}", join(w)),
    };
    let mut sampler = match cfg.sampler {
        SamplerSpec::Gaussian { covariance, normalize } => {
            let cov = match covariance {
                CovarianceSpec::Identity => "identity".to_string(),
                CovarianceSpec::Random { condition, seed } => format!("random:{condition}:{seed}"),
            };
            format!("inputs = gaussian\ncovariance = {cov}\nnormalize = {normalize}\n")
        }
        SamplerSpec::Rademacher => "inputs = rademacher\n".to_string(),
        SamplerSpec::UniformSphere => "inputs = sphere\n".to_string(),
    };
    let noise = match cfg.noise {
        NoiseModel::None => "none".to_string(),
        NoiseModel::Gaussian { std } => format!("gaussian:{std}"),
        NoiseModel::ScaledRademacher { scale } => format!("rademacher:{scale}"),
    };
    let g = cfg.eta_grid;
    let algorithms: Vec<&str> = cfg.algorithms.iter().map(Algorithm::name).collect();
    sampler.insert_str(0, &format!("geometry = {geometry}\nteacher = {teacher}\n"));
    sampler
        + &format!(
            "noise = {noise}\nalpha = {}\neta_grid = {},{},{}\ntrials_per_eta = {}\ntheta = {}\niterations = {}\nalgorithms = {}\nbase_seed = {}\n",
            cfg.alpha,
            g.start,
            g.stop,
            g.step,
            cfg.trials_per_eta,
            cfg.theta,
            cfg.iterations,
            algorithms.join(","),
            cfg.base_seed
        )
}
