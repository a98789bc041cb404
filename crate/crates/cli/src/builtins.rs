//! Built-in problems, stored as canonical expression templates so a run's
//! manifest always contains a parseable form of what was solved.

use std::collections::BTreeMap;

/// A fully resolved problem definition: expression sources with all
/// parameters substituted as literals, plus the defaults that produced them.
#[derive(Debug, Clone)]
pub struct ResolvedProblem {
    pub source: String,
    pub drift_src: String,
    pub diffusion_src: String,
    pub x0: f64,
    pub parameters: BTreeMap<String, f64>,
}

pub const BUILTIN_NAMES: [&str; 3] = ["eg1", "eg2", "eg3"];

/// Resolve a built-in with optional parameter and x0 overrides.
///
/// * `eg1`: drift a·x, diffusion b·t^υ (a=0.6, b=1, υ=2, x0=0.5)
/// * `eg2`: drift a·(μ−x), diffusion σ·√x (a=1.2, μ=0.05, σ=0.04, x0=0)
/// * `eg3`: drift √(x−1), diffusion (1−t) (x0=3)
pub fn resolve(
    name: &str,
    overrides: &BTreeMap<String, f64>,
    x0_override: Option<f64>,
) -> Result<ResolvedProblem, String> {
    let (defaults, default_x0): (&[(&str, f64)], f64) = match name {
        "eg1" => (&[("a", 0.6), ("b", 1.0), ("upsilon", 2.0)], 0.5),
        "eg2" => (&[("a", 1.2), ("mu", 0.05), ("sigma", 0.04)], 0.0),
        "eg3" => (&[], 3.0),
        _ => {
            return Err(format!(
                "unknown builtin '{name}' (expected one of {BUILTIN_NAMES:?})"
            ))
        }
    };
    let mut params: BTreeMap<String, f64> =
        defaults.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    for (k, v) in overrides {
        if !params.contains_key(k) {
            return Err(format!("builtin '{name}' has no parameter '{k}'"));
        }
        params.insert(k.clone(), *v);
    }
    let (drift_src, diffusion_src) = match name {
        "eg1" => (
            format!("{}*x", params["a"]),
            format!("{}*t^{}", params["b"], params["upsilon"]),
        ),
        "eg2" => (
            format!("{}*({}-x)", params["a"], params["mu"]),
            format!("{}*sqrt(x)", params["sigma"]),
        ),
        "eg3" => ("sqrt(x-1)".to_string(), "(1-t)".to_string()),
        _ => unreachable!(),
    };
    Ok(ResolvedProblem {
        source: format!("builtin:{name}"),
        drift_src,
        diffusion_src,
        x0: x0_override.unwrap_or(default_x0),
        parameters: params,
    })
}
