//! Typed access to experiment parameters.
//!
//! Every value read is recorded with its default filled in, so the
//! `param_json` column describes the run completely. Supplied keys that the
//! experiment never reads are rejected.

use std::cell::RefCell;
use std::collections::BTreeMap;

use gcrm::dirichlet::BaseDistribution;
use gcrm::kernels::{ConstantLaw, CorrelationIndex, DirectingKernel, PartitionSpec};
use gcrm::subordination::JumpLaw;
use serde_json::Value;

use crate::CliError;

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Config(format!("parameter {key}: cannot parse '{value}' as {what}"))
}

/// A finite real, or `logK` for `ln K`.
pub fn parse_real(text: &str) -> Option<f64> {
    let text = text.trim();
    let v = match text.strip_prefix("log") {
        Some(rest) => rest.parse::<f64>().ok().filter(|k| *k > 0.0)?.ln(),
        None => text.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

fn parse_reals(text: &str) -> Option<Vec<f64>> {
    text.split(',').map(parse_real).collect()
}

/// Atoms `x:w,x:w,...`, `point:z`, or `beta-two-point:a,b` (the two-point
/// law matching three moments of Beta(a, b)).
pub fn parse_base(text: &str) -> Result<BaseDistribution, String> {
    let text = text.trim();
    if let Some(z) = text.strip_prefix("point:") {
        let z = parse_real(z).ok_or("bad point mass")?;
        return BaseDistribution::point_mass(z).map_err(|e| e.to_string());
    }
    if let Some(ab) = text.strip_prefix("beta-two-point:") {
        let v = parse_reals(ab).filter(|v| v.len() == 2).ok_or("expected beta-two-point:a,b")?;
        return BaseDistribution::beta_two_point(v[0], v[1]).map_err(|e| e.to_string());
    }
    let atoms = text
        .split(',')
        .map(|atom| {
            let (x, w) = atom.split_once(':')?;
            Some((parse_real(x)?, parse_real(w)?))
        })
        .collect::<Option<Vec<_>>>()
        .ok_or("expected atoms x:w,x:w,...")?;
    BaseDistribution::new(atoms).map_err(|e| e.to_string())
}

/// `beta:a,b` for an exact beta law, otherwise a base distribution.
pub fn parse_law(text: &str) -> Result<ConstantLaw, String> {
    match text.trim().strip_prefix("beta:") {
        Some(ab) => {
            let v = parse_reals(ab).filter(|v| v.len() == 2).ok_or("expected beta:a,b")?;
            ConstantLaw::beta(v[0], v[1]).map_err(|e| e.to_string())
        }
        None => parse_base(text).map(ConstantLaw::Finite),
    }
}

/// Jump sizes `h:w,h:w,...`, or a single size `h` with weight one.
pub fn parse_jumps(text: &str) -> Result<JumpLaw, String> {
    if let Some(h) = parse_real(text) {
        return JumpLaw::single(h).map_err(|e| e.to_string());
    }
    let atoms = text
        .split(',')
        .map(|atom| {
            let (h, w) = atom.split_once(':')?;
            Some((parse_real(h)?, parse_real(w)?))
        })
        .collect::<Option<Vec<_>>>()
        .ok_or("expected a jump size or h:w,h:w,...")?;
    JumpLaw::new(atoms).map_err(|e| e.to_string())
}

/// Indices separated by `;`, components by `,`. In one dimension a plain
/// comma list `1,2,3` lists degrees.
pub fn parse_indices(text: &str, dim: usize) -> Option<Vec<CorrelationIndex>> {
    let parts: Vec<&str> = text.split(';').collect();
    let to_counts = |s: &str| s.split(',').map(|c| c.trim().parse::<usize>().ok()).collect::<Option<Vec<_>>>();
    if dim == 1 && parts.len() == 1 {
        return Some(to_counts(parts[0])?.into_iter().map(|n| CorrelationIndex::new(vec![n])).collect());
    }
    parts.into_iter().map(|p| to_counts(p).filter(|v| v.len() == dim).map(CorrelationIndex::new)).collect()
}

pub struct Params {
    raw: BTreeMap<String, String>,
    used: RefCell<BTreeMap<String, Value>>,
}

impl Params {
    pub fn new(raw: BTreeMap<String, String>) -> Self {
        Self { raw, used: RefCell::new(BTreeMap::new()) }
    }

    pub fn record(&self, key: &str, value: impl Into<Value>) {
        self.used.borrow_mut().insert(key.to_string(), value.into());
    }

    fn lookup(&self, key: &str, default: Option<&str>) -> Result<String, CliError> {
        match self.raw.get(key).map(String::as_str).or(default) {
            Some(v) => Ok(v.trim().to_string()),
            None => Err(CliError::Config(format!("missing required parameter {key}"))),
        }
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.raw.contains_key(key)
    }

    pub fn real(&self, key: &str, default: Option<&str>) -> Result<f64, CliError> {
        let text = self.lookup(key, default)?;
        let v = parse_real(&text).ok_or_else(|| bad(key, &text, "a real number"))?;
        self.record(key, v);
        Ok(v)
    }

    pub fn reals(&self, key: &str, default: Option<&str>) -> Result<Vec<f64>, CliError> {
        let text = self.lookup(key, default)?;
        let v = parse_reals(&text).ok_or_else(|| bad(key, &text, "a comma-separated list of reals"))?;
        self.record(key, v.clone());
        Ok(v)
    }

    /// A list with one entry per cell; a single entry is repeated.
    pub fn per_cell(&self, key: &str, default: Option<&str>, dim: usize) -> Result<Vec<f64>, CliError> {
        let v = self.reals(key, default)?;
        match v.len() {
            1 => Ok(vec![v[0]; dim]),
            n if n == dim => Ok(v),
            n => Err(CliError::Config(format!("parameter {key}: {n} values for {dim} cells"))),
        }
    }

    pub fn count(&self, key: &str, default: Option<&str>) -> Result<usize, CliError> {
        let text = self.lookup(key, default)?;
        let v = text.parse::<usize>().map_err(|_| bad(key, &text, "a nonnegative integer"))?;
        self.record(key, v);
        Ok(v)
    }

    pub fn text(&self, key: &str, default: Option<&str>) -> Result<String, CliError> {
        let text = self.lookup(key, default)?;
        self.record(key, text.clone());
        Ok(text)
    }

    pub fn choice(&self, key: &str, default: Option<&str>, options: &[&str]) -> Result<String, CliError> {
        let text = self.text(key, default)?;
        if !options.contains(&text.as_str()) {
            return Err(CliError::Config(format!("parameter {key}: '{text}' is not one of {}", options.join("|"))));
        }
        Ok(text)
    }

    fn structured<T>(
        &self,
        key: &str,
        default: Option<&str>,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, CliError> {
        let text = self.text(key, default)?;
        parse(&text).map_err(|e| CliError::Config(format!("parameter {key}: {e}")))
    }

    pub fn base(&self, key: &str, default: Option<&str>) -> Result<BaseDistribution, CliError> {
        self.structured(key, default, parse_base)
    }

    pub fn law(&self, key: &str, default: Option<&str>) -> Result<ConstantLaw, CliError> {
        self.structured(key, default, parse_law)
    }

    pub fn jumps(&self, key: &str, default: Option<&str>) -> Result<JumpLaw, CliError> {
        self.structured(key, default, parse_jumps)
    }

    /// Cell shapes from `alphas` and the total mass from `total-mass`
    /// (default: the sum of the shapes).
    pub fn partition(&self, default_alphas: &str, with_mass: bool) -> Result<PartitionSpec, CliError> {
        let alphas = self.reals("alphas", Some(default_alphas))?;
        let part = if with_mass && self.is_set("total-mass") {
            PartitionSpec::new(alphas, self.real("total-mass", None)?)
        } else {
            PartitionSpec::exhaustive(alphas)
        };
        part.map_err(|e| CliError::Config(format!("partition: {e}")))
    }

    /// Directing kernel from `kernel` and its own parameter.
    pub fn kernel(&self, dim: usize) -> Result<DirectingKernel, CliError> {
        let kind = self.choice("kernel", None, &["constant", "per-cell", "random", "common"])?;
        Ok(match kind.as_str() {
            "constant" => DirectingKernel::DegenerateConstant(self.real("z", None)?),
            "per-cell" => {
                let bases = self
                    .structured("bases", None, |text| text.split(';').map(parse_base).collect::<Result<Vec<_>, _>>())?;
                match bases.len() {
                    1 => DirectingKernel::PerCellDistribution(vec![bases[0].clone(); dim]),
                    n if n == dim => DirectingKernel::PerCellDistribution(bases),
                    n => return Err(CliError::Config(format!("parameter bases: {n} bases for {dim} cells"))),
                }
            }
            "random" => DirectingKernel::RandomConstant(self.law("law", None)?),
            _ => DirectingKernel::CommonComponent(self.real("eta", None)?),
        })
    }

    /// Indices from `n`, or every index with `1 <= |n| <= max-total`.
    pub fn indices(&self, dim: usize, default_max_total: usize) -> Result<Vec<CorrelationIndex>, CliError> {
        if self.is_set("n") {
            let text = self.text("n", None)?;
            return parse_indices(&text, dim).ok_or_else(|| bad("n", &text, &format!("indices of dimension {dim}")));
        }
        let max_total = self.count("max-total", Some(&default_max_total.to_string()))?;
        Ok(CorrelationIndex::all_up_to(dim, max_total).into_iter().filter(|n| n.total() > 0).collect())
    }

    /// Sorted JSON of everything read. Fails if a supplied key was never read.
    pub fn finish(self) -> Result<String, CliError> {
        let used = self.used.into_inner();
        if let Some(key) = self.raw.keys().find(|k| !used.contains_key(*k)) {
            return Err(CliError::Config(format!("parameter {key} is not used by this experiment")));
        }
        Ok(serde_json::to_string(&used).expect("string keys serialize"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_and_logs() {
        assert_eq!(parse_real(" 1.5 "), Some(1.5));
        assert_eq!(parse_real("log4"), Some(4f64.ln()));
        assert_eq!(parse_real("log-1"), None);
        assert_eq!(parse_real("nan"), None);
        assert_eq!(parse_real("x"), None);
    }

    #[test]
    fn structured_values() {
        assert_eq!(parse_base("0:0.5,1:0.5").unwrap().atoms(), &[(0.0, 0.5), (1.0, 0.5)]);
        assert_eq!(parse_base("point:0.3").unwrap().atoms(), &[(0.3, 1.0)]);
        assert!(parse_base("beta-two-point:1,1").unwrap().atoms().len() == 2);
        assert!(parse_base("0:0.5").is_err());
        assert!(matches!(parse_law("beta:1,2").unwrap(), ConstantLaw::Beta { .. }));
        assert!(matches!(parse_law("point:0.5").unwrap(), ConstantLaw::Finite(_)));
        assert_eq!(parse_jumps("log4").unwrap().atoms(), &[(4f64.ln(), 1.0)]);
        assert_eq!(parse_jumps("1:0.25,2:0.75").unwrap().atoms().len(), 2);
    }

    #[test]
    fn index_lists() {
        let one = parse_indices("1,2,3", 1).unwrap();
        assert_eq!(one.iter().map(|n| n.total()).collect::<Vec<_>>(), vec![1, 2, 3]);
        let two = parse_indices("1,0;0,2", 2).unwrap();
        assert_eq!(two[1].as_slice(), &[0, 2]);
        assert!(parse_indices("1,0,1", 2).is_none());
        assert_eq!(parse_indices("2,1", 2).unwrap().len(), 1);
    }

    #[test]
    fn unused_keys_are_rejected_and_json_is_sorted() {
        let raw: BTreeMap<_, _> = [("b".to_string(), "2".to_string()), ("a".to_string(), "1".to_string())].into();
        let p = Params::new(raw.clone());
        p.real("b", None).unwrap();
        assert!(p.finish().is_err());
        let p = Params::new(raw);
        p.real("b", None).unwrap();
        p.count("a", None).unwrap();
        p.real("c", Some("0.5")).unwrap();
        assert_eq!(p.finish().unwrap(), r#"{"a":1,"b":2.0,"c":0.5}"#);
    }
}
