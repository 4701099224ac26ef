//! Run configuration: short-form parsers, JSON config files, and defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use fk_core::entropy::{FitWindow, GrowthScale, SetKind};
use fk_core::matching::Resolution;
use fk_core::systems::PartitionKind;
use fk_core::{MeasureSpec, MetricKind, Partition, Point, System, SystemSpec};
use serde::{Deserialize, Deserializer, Serialize};

use crate::CliError;

/// Values that can be written either as a compact string or as full JSON.
pub trait ShortForm: Sized {
    fn parse_short(s: &str) -> Result<Self, String>;
}

fn parse_json<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T, String> {
    serde_json::from_str(s).map_err(|e| format!("invalid JSON '{s}': {e}"))
}

fn number<T: FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("invalid {what} '{s}'"))
}

impl ShortForm for SystemSpec {
    /// `full_shift:K[:H]`, `rotation:A`, `doubling[:H]`, `tent[:H]`,
    /// `logistic`, `two_fixed_points`, or a JSON object.
    fn parse_short(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.starts_with('{') {
            return parse_json(s);
        }
        let parts: Vec<&str> = s.split(':').collect();
        let horizon = |i: usize| parts.get(i).map(|h| number::<usize>(h, "horizon")).transpose();
        let arity = |max: usize| {
            if parts.len() > max {
                Err(format!("too many parameters in system '{s}'"))
            } else {
                Ok(())
            }
        };
        let spec = match parts[0] {
            "full_shift" | "shift" => {
                arity(3)?;
                let k = parts.get(1).ok_or_else(|| format!("system '{s}' needs an alphabet size"))?;
                SystemSpec::FullShift { k: number(k, "alphabet size")?, horizon: horizon(2)? }
            }
            "rotation" => {
                arity(2)?;
                let a = parts.get(1).ok_or_else(|| format!("system '{s}' needs a rotation number"))?;
                SystemSpec::Rotation { alpha: number(a, "rotation number")? }
            }
            "doubling" => {
                arity(2)?;
                SystemSpec::Doubling { horizon: horizon(1)? }
            }
            "tent" => {
                arity(2)?;
                SystemSpec::Tent { horizon: horizon(1)? }
            }
            "logistic" => {
                arity(1)?;
                SystemSpec::Logistic
            }
            "two_fixed_points" => {
                arity(1)?;
                SystemSpec::TwoComponent {
                    a: Box::new(SystemSpec::Rotation { alpha: 0.0 }),
                    b: Box::new(SystemSpec::Rotation { alpha: 0.0 }),
                    weight_a: 0.5,
                }
            }
            other => return Err(format!("unknown system '{other}'")),
        };
        Ok(spec)
    }
}

impl ShortForm for MeasureSpec {
    /// `bernoulli:p0,p1,...`, `lebesgue`, `arcsine`, or a JSON object.
    fn parse_short(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.starts_with('{') {
            return parse_json(s);
        }
        let measure = match s.split_once(':') {
            Some(("bernoulli", probs)) => MeasureSpec::Bernoulli { probs: parse_list(probs, "probability")? },
            None if s == "lebesgue" => MeasureSpec::Lebesgue,
            None if s == "arcsine" => MeasureSpec::Arcsine,
            _ => return Err(format!("unknown measure '{s}'")),
        };
        measure.validate().map_err(|e| e.to_string())?;
        Ok(measure)
    }
}

impl ShortForm for Partition {
    /// `zero` (zero-coordinate partition), `bins:K`, or a JSON object.
    fn parse_short(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.starts_with('{') {
            return parse_json(s);
        }
        match s.split_once(':') {
            None if s == "zero" => Ok(Partition { kind: PartitionKind::ZeroCoordinate, cells: 0 }),
            Some(("bins", k)) => Partition::bins(number(k, "bin count")?).map_err(|e| e.to_string()),
            _ => Err(format!("unknown partition '{s}'")),
        }
    }
}

impl ShortForm for FitWindow {
    /// `resolved[:FRACTION]`, `top_half`, `all`, or `LO..HI`.
    fn parse_short(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some((lo, hi)) = s.split_once("..") {
            return Ok(FitWindow::Range(number(lo, "window bound")?, number(hi, "window bound")?));
        }
        match s.split_once(':') {
            Some(("resolved", f)) => {
                let saturation: f64 = number(f, "saturation fraction")?;
                if !(saturation > 0.0 && saturation <= 1.0) {
                    return Err(format!("saturation fraction must lie in (0,1], got {saturation}"));
                }
                Ok(FitWindow::Resolved { saturation })
            }
            None if s == "resolved" => Ok(FitWindow::default()),
            None if s == "top_half" => Ok(FitWindow::TopHalf),
            None if s == "all" => Ok(FitWindow::All),
            _ => Err(format!("unknown fit window '{s}'")),
        }
    }
}

impl ShortForm for GrowthScale {
    fn parse_short(s: &str) -> Result<Self, String> {
        s.parse().map_err(|e: fk_core::Error| e.to_string())
    }
}

impl ShortForm for MetricKind {
    fn parse_short(s: &str) -> Result<Self, String> {
        s.parse().map_err(|e: fk_core::Error| e.to_string())
    }
}

impl ShortForm for SetKind {
    fn parse_short(s: &str) -> Result<Self, String> {
        match s.trim() {
            "spanning" => Ok(SetKind::Spanning),
            "separated" => Ok(SetKind::Separated),
            other => Err(format!("unknown set kind '{other}'")),
        }
    }
}

/// Comma-separated numbers.
pub fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',').map(|t| number(t, what)).collect()
}

/// `A..B` (inclusive), `A..B:STEP`, a comma list, or a single value.
pub fn parse_n_range(s: &str) -> Result<Vec<usize>, String> {
    let s = s.trim();
    if let Some((lo, rest)) = s.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (hi, number::<usize>(step, "step")?),
            None => (rest, 1),
        };
        let (lo, hi): (usize, usize) = (number(lo, "n")?, number(hi, "n")?);
        if step == 0 || lo > hi {
            return Err(format!("empty n range '{s}'"));
        }
        return Ok((lo..=hi).step_by(step).collect());
    }
    parse_list(s, "n")
}

/// Either a short-form string or the full JSON value.
#[derive(Deserialize)]
#[serde(untagged)]
enum Written<T> {
    Short(String),
    Full(T),
}

fn short_or_full<'de, D, T>(d: D) -> Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: ShortForm + Deserialize<'de>,
{
    match Option::<Written<T>>::deserialize(d)? {
        None => Ok(None),
        Some(Written::Full(v)) => Ok(Some(v)),
        Some(Written::Short(s)) => T::parse_short(&s).map(Some).map_err(serde::de::Error::custom),
    }
}

fn n_range_field<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<usize>>, D::Error> {
    match Option::<Written<Vec<usize>>>::deserialize(d)? {
        None => Ok(None),
        Some(Written::Full(v)) => Ok(Some(v)),
        Some(Written::Short(s)) => parse_n_range(&s).map(Some).map_err(serde::de::Error::custom),
    }
}

/// Everything a command can be configured with. Unset fields take
/// command-specific defaults in [`RunConfig::resolve`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(deserialize_with = "short_or_full", skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    /// Measure for `μ̂`.
    #[serde(deserialize_with = "short_or_full", skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    /// Measure the topological sample is drawn from.
    #[serde(deserialize_with = "short_or_full", skip_serializing_if = "Option::is_none")]
    pub sampler: Option<MeasureSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[serde(deserialize_with = "n_range_field", skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(deserialize_with = "short_or_full", skip_serializing_if = "Option::is_none")]
    pub kind: Option<MetricKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// `N`, the topological sample size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    /// `M`, the size of `μ̂`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate_count: Option<usize>,
    /// Number of base points for local entropy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(deserialize_with = "short_or_full", skip_serializing_if = "Option::is_none")]
    pub set: Option<SetKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
    #[serde(deserialize_with = "short_or_full", skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitWindow>,
    #[serde(deserialize_with = "short_or_full", skip_serializing_if = "Option::is_none")]
    pub partition: Option<Partition>,
    #[serde(deserialize_with = "short_or_full", skip_serializing_if = "Option::is_none")]
    pub scale: Option<GrowthScale>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RunConfig) -> RunConfig {
        overlay!(self, top; system, measure, sampler, x, y, n, eps, delta, tol, kind, seed, sample_size,
            measure_size, pair_count, candidate_count, base_count, trials, set, exact, fit, partition,
            scale, threshold, suite, out);
        self
    }
}

/// A validated configuration with every field a command needs filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    /// The effective configuration, recorded in output headers.
    pub config: RunConfig,
    pub system: Option<System>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Which inputs a command reads, for defaults and validation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub system: bool,
    pub n: bool,
    pub eps: bool,
    pub delta: bool,
}

impl RunConfig {
    /// Fills defaults and checks ranges. Sample-size and threshold defaults
    /// are filled only when `needs` says the command uses them, so headers
    /// record exactly the inputs that shaped the output.
    pub fn resolve(mut self, command: &str, needs: Needs) -> Result<Resolved, CliError> {
        let positive = |v: Option<usize>, name: &str| match v {
            Some(0) => Err(config_err(format!("{name} must be positive"))),
            _ => Ok(()),
        };
        for (v, name) in [
            (self.sample_size, "N"),
            (self.measure_size, "M"),
            (self.pair_count, "pair count"),
            (self.candidate_count, "candidate count"),
            (self.base_count, "base count"),
            (self.trials, "trials"),
        ] {
            positive(v, name)?;
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(config_err(format!("tol must be positive, got {tol}")));
            }
        }
        self.seed.get_or_insert(0);

        let system = if needs.system {
            let spec = self.system.clone().ok_or_else(|| config_err(format!("{command} needs --system")))?;
            let n_max = self.n.as_ref().and_then(|n| n.iter().copied().max()).unwrap_or(1);
            let system = System::new(spec.with_horizon_for(n_max))?;
            self.system = Some(system.spec().clone());
            Some(system)
        } else {
            None
        };

        if needs.n {
            let n = self.n.as_ref().ok_or_else(|| config_err(format!("{command} needs --n")))?;
            if n.is_empty() || n.contains(&0) {
                return Err(config_err("n values must be positive"));
            }
            if let (Some(h), Some(&max)) = (system.as_ref().and_then(System::horizon), n.iter().max()) {
                if max > h {
                    return Err(fk_core::Error::Horizon { n: max, horizon: h }.into());
                }
            }
        }
        let diameter = system.as_ref().map_or(1.0, System::diameter);
        for (list, needed, name) in [(&self.eps, needs.eps, "eps"), (&self.delta, needs.delta, "delta")] {
            match list {
                None if needed => return Err(config_err(format!("{command} needs --{name}"))),
                Some(v) if needed => {
                    if v.is_empty() {
                        return Err(config_err(format!("--{name} needs at least one value")));
                    }
                    if let Some(bad) = v.iter().find(|&&e| !(e > 0.0 && e <= diameter)) {
                        return Err(config_err(format!("{name} {bad} outside (0, {diameter}]")));
                    }
                }
                _ => {}
            }
        }
        if let Some(system) = &system {
            if self.measure.is_none() {
                self.measure = Some(system.natural_measure());
            }
        }
        Ok(Resolved { config: self, system })
    }
}

impl Resolved {
    pub fn system(&self) -> &System {
        self.system.as_ref().expect("command resolved with a system")
    }

    pub fn seed(&self) -> u64 {
        self.config.seed.unwrap_or(0)
    }

    pub fn n(&self) -> &[usize] {
        self.config.n.as_deref().unwrap_or(&[])
    }

    pub fn eps(&self) -> &[f64] {
        self.config.eps.as_deref().unwrap_or(&[])
    }

    pub fn delta(&self) -> &[f64] {
        self.config.delta.as_deref().unwrap_or(&[])
    }

    pub fn measure(&self) -> MeasureSpec {
        self.config.measure.clone().unwrap_or(MeasureSpec::Lebesgue)
    }

    pub fn kind(&mut self) -> MetricKind {
        *self.config.kind.get_or_insert(MetricKind::FK)
    }

    pub fn tol(&mut self) -> f64 {
        let diameter = self.system.as_ref().map_or(1.0, System::diameter);
        let Resolution::Bisection(default) = Resolution::default_for(diameter) else { unreachable!() };
        *self.config.tol.get_or_insert(default)
    }

    /// Returns the configured value, recording `default` when unset.
    pub fn get_or<T: Clone>(field: &mut Option<T>, default: T) -> T {
        field.get_or_insert(default).clone()
    }

    /// Builds a point of the configured system from `--x`/`--y` text: a real
    /// coordinate, a symbol string such as `0110` for shifts, or `a:X` /
    /// `b:X` for a point of one component of a two-component system.
    pub fn point(&self, text: &str) -> Result<Point, CliError> {
        parse_point(self.system(), text)
    }
}

pub fn parse_point(system: &System, text: &str) -> Result<Point, CliError> {
    let text = text.trim();
    if let SystemSpec::TwoComponent { a, b, .. } = system.spec() {
        let (index, inner) = match text.split_once(':') {
            Some(("a", rest)) => (0u8, (a, rest)),
            Some(("b", rest)) => (1u8, (b, rest)),
            _ => return Err(config_err(format!("two-component points are written a:X or b:X, got '{text}'"))),
        };
        let part = System::new((**inner.0).clone())?;
        let point = Point::Component { index, inner: Box::new(parse_point(&part, inner.1)?) };
        system.check_point(&point)?;
        return Ok(point);
    }
    if let Some(k) = system.alphabet() {
        let symbols: Vec<u8> = text
            .chars()
            .map(|c| c.to_digit(10).filter(|&d| d < k as u32).map(|d| d as u8))
            .collect::<Option<_>>()
            .ok_or_else(|| config_err(format!("'{text}' is not a word over {k} symbols")))?;
        return Ok(system.symbol_point(&symbols)?);
    }
    let x: f64 = text.parse().map_err(|_| config_err(format!("'{text}' is not a real coordinate")))?;
    Ok(system.real_point(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_forms() {
        assert_eq!(SystemSpec::parse_short("rotation:0.5").unwrap(), SystemSpec::Rotation { alpha: 0.5 });
        assert_eq!(
            SystemSpec::parse_short("full_shift:2:40").unwrap(),
            SystemSpec::FullShift { k: 2, horizon: Some(40) }
        );
        assert_eq!(
            SystemSpec::parse_short(r#"{"kind":"doubling","horizon":80}"#).unwrap(),
            SystemSpec::Doubling { horizon: Some(80) }
        );
        assert!(SystemSpec::parse_short("rotation").is_err());
        assert!(SystemSpec::parse_short("logistic:3").is_err());
        assert_eq!(
            MeasureSpec::parse_short("bernoulli:0.25,0.75").unwrap(),
            MeasureSpec::Bernoulli { probs: vec![0.25, 0.75] }
        );
        assert!(MeasureSpec::parse_short("bernoulli:0.2,0.2").is_err());
        assert_eq!(parse_n_range("4..7").unwrap(), vec![4, 5, 6, 7]);
        assert_eq!(parse_n_range("4..16:4").unwrap(), vec![4, 8, 12, 16]);
        assert_eq!(parse_n_range("4,8,64").unwrap(), vec![4, 8, 64]);
        assert!(parse_n_range("9..4").is_err());
        assert_eq!(FitWindow::parse_short("5..9").unwrap(), FitWindow::Range(5, 9));
        assert_eq!(Partition::parse_short("bins:4").unwrap(), Partition::bins(4).unwrap());
    }

    #[test]
    fn file_values_accept_both_forms() {
        let c: RunConfig = serde_json::from_str(
            r#"{"system": "full_shift:2", "measure": {"kind": "bernoulli", "probs": [0.5, 0.5]},
                "n": "4..6", "eps": [0.1], "kind": "fk", "seed": 7}"#,
        )
        .unwrap();
        assert_eq!(c.system, Some(SystemSpec::FullShift { k: 2, horizon: None }));
        assert_eq!(c.n, Some(vec![4, 5, 6]));
        assert!(serde_json::from_str::<RunConfig>(r#"{"sistem": "tent"}"#).is_err());
        let top = RunConfig { seed: Some(9), ..Default::default() };
        let merged = c.overlay(top);
        assert_eq!((merged.seed, merged.n), (Some(9), Some(vec![4, 5, 6])));
    }

    #[test]
    fn resolve_validates() {
        let needs = Needs { system: true, n: true, eps: true, delta: false };
        let base = RunConfig {
            system: Some(SystemSpec::Rotation { alpha: 0.5 }),
            n: Some(vec![4]),
            eps: Some(vec![0.1]),
            ..Default::default()
        };
        assert!(base.clone().resolve("span", needs).is_ok());
        let wide = RunConfig { eps: Some(vec![0.6]), ..base.clone() };
        assert!(matches!(wide.resolve("span", needs), Err(CliError::Config(_))));
        let bad_h = RunConfig {
            system: Some(SystemSpec::FullShift { k: 2, horizon: Some(8) }),
            n: Some(vec![16]),
            ..base.clone()
        };
        assert!(bad_h.resolve("span", needs).is_err());
        let zero = RunConfig { measure_size: Some(0), ..base };
        assert!(zero.resolve("span", needs).is_err());
    }

    #[test]
    fn points() {
        let shift = System::new(SystemSpec::FullShift { k: 2, horizon: Some(8) }).unwrap();
        assert_eq!(parse_point(&shift, "011").unwrap(), Point::Symbols(vec![0, 1, 1, 0, 0, 0, 0, 0]));
        assert!(parse_point(&shift, "012").is_err());
        let two = System::new(SystemSpec::parse_short("two_fixed_points").unwrap()).unwrap();
        assert!(matches!(parse_point(&two, "b:0.3").unwrap(), Point::Component { index: 1, .. }));
        assert!(parse_point(&two, "0.3").is_err());
    }
}
