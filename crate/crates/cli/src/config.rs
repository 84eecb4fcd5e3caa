use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgMatches, Command};

use crate::CliError;

/// Keys accepted by every subcommand.
const COMMON_KEYS: [&str; 3] = ["seed", "samples", "out"];

/// Subcommand names, one-line descriptions and experiment parameter keys.
pub const SUBCOMMANDS: [(&str, &str, &[&str]); 10] = [
    ("orthogonality", "Quadrature check of Laguerre orthogonality", &["alpha", "max-degree", "points"]),
    (
        "genfun-check",
        "Laguerre generating function partial sums against the closed form",
        &["alpha", "x", "r", "terms"],
    ),
    (
        "pair-corr",
        "Canonical correlations of a pair sampler (a1|a2|a3|a4|dw|general)",
        &[
            "sampler",
            "alpha",
            "alphas",
            "b",
            "pstar-prob",
            "law",
            "total-mass",
            "z",
            "kernel",
            "bases",
            "eta",
            "construction",
            "n",
            "max-total",
        ],
    ),
    (
        "merge-check",
        "Merged-cell correlations against the beta-binomial mixture",
        &["alphas", "total-mass", "kernel", "z", "bases", "law", "eta", "i", "j", "max-n"],
    ),
    (
        "dirichlet-moments",
        "Stick-breaking moments of a Dirichlet mean against the recursion",
        &["theta", "base", "max-order", "eps"],
    ),
    ("stieltjes-check", "Markov-Krein identity for a Dirichlet mean", &["theta", "base", "lambda"]),
    (
        "density-check",
        "Quadrature mass and first correlation of the extreme pair density",
        &["alpha", "z", "upper", "panels", "points"],
    ),
    (
        "laplace-ratio",
        "Truncated joint Laplace-ratio series against its closed form",
        &["alphas", "total-mass", "kernel", "z", "bases", "law", "eta", "s", "t", "trunc"],
    ),
    (
        "subordinate",
        "Subordinated DW pairs (marginal|semigroup|factorization)",
        &["mode", "drift", "rate", "jump", "alphas", "t", "split", "n", "max-total"],
    ),
    (
        "poisson-embed",
        "Poisson-clock DW chain against the embedded correlation",
        &["alphas", "gamma-rate", "z-step", "t", "n", "max-total"],
    ),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// Experiment parameters as given, before typing.
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    /// `None` selects the experiment's default sample count.
    pub samples: Option<usize>,
    /// `None` writes the report to standard output.
    pub out: Option<PathBuf>,
}

fn keys_for(name: &str) -> Option<&'static [&'static str]> {
    SUBCOMMANDS.iter().find(|s| s.0 == name).map(|s| s.2)
}

pub fn command() -> Command {
    let mut cmd = Command::new("gcrm")
        .about("Seeded verification experiments for canonically correlated gamma pairs")
        .subcommand_required(true);
    for (name, about, keys) in SUBCOMMANDS {
        let mut sub = Command::new(name)
            .about(about)
            .arg(Arg::new("config").long("config").value_name("FILE").help("key=value file; flags win on conflict"));
        for key in COMMON_KEYS.iter().chain(keys.iter()) {
            sub = sub.arg(Arg::new(*key).long(*key).value_name("VALUE").allow_hyphen_values(true));
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

/// Parses a `key=value` file. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse_config_file(text: &str, allowed: &[&str]) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!("config line {}: expected key=value", lineno + 1)));
        };
        let key = key.trim();
        if !allowed.contains(&key) {
            return Err(CliError::Config(format!("config line {}: unknown key '{key}'", lineno + 1)));
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("config line {}: duplicate key '{key}'", lineno + 1)));
        }
    }
    Ok(map)
}

fn read_config_file(path: &Path, allowed: &[&str]) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_file(&text, allowed)
}

/// Builds the configuration from parsed arguments. `env_seed` is the value
/// of `GCRM_SEED`, used when neither flags nor the file give a seed.
pub fn from_matches(matches: &ArgMatches, env_seed: Option<&str>) -> Result<ExperimentConfig, CliError> {
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let keys = keys_for(name).expect("subcommands come from the table");
    let allowed: Vec<&str> = COMMON_KEYS.iter().chain(keys.iter()).copied().collect();

    let mut values = match sub.get_one::<String>("config") {
        Some(path) => read_config_file(Path::new(path), &allowed)?,
        None => BTreeMap::new(),
    };
    for key in &allowed {
        if let Some(v) = sub.get_one::<String>(key) {
            values.insert(key.to_string(), v.clone());
        }
    }

    let seed_text = values.remove("seed").or_else(|| env_seed.map(str::to_string));
    let seed = match seed_text {
        Some(s) => s
            .trim()
            .parse::<u64>()
            .map_err(|_| CliError::Config(format!("seed must be a 64-bit unsigned integer, got '{s}'")))?,
        None => 0,
    };
    let samples = match values.remove("samples") {
        Some(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Some(n),
            _ => return Err(CliError::Config(format!("samples must be a positive integer, got '{s}'"))),
        },
        None => None,
    };
    let out = values.remove("out").map(PathBuf::from);
    Ok(ExperimentConfig { experiment: name.to_string(), params: values, seed, samples, out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str], env: Option<&str>) -> Result<ExperimentConfig, CliError> {
        let m = command().try_get_matches_from(args).unwrap();
        from_matches(&m, env)
    }

    #[test]
    fn table_builds_a_valid_command() {
        command().debug_assert();
    }

    #[test]
    fn file_parsing() {
        let map = parse_config_file("# c\n\nalpha = 2\nseed=3\n", &["alpha", "seed"]).unwrap();
        assert_eq!(map["alpha"], "2");
        assert_eq!(map["seed"], "3");
        assert!(parse_config_file("alpha", &["alpha"]).is_err());
        assert!(parse_config_file("beta=1", &["alpha"]).is_err());
        assert!(parse_config_file("alpha=1\nalpha=2", &["alpha"]).is_err());
    }

    #[test]
    fn flags_win_over_file_and_env_is_a_default() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        std::fs::write(&path, "alpha=2\nmax-degree=4\nseed=9\n").unwrap();
        let p = path.to_str().unwrap();
        let c = config(&["gcrm", "orthogonality", "--config", p, "--alpha", "0.5"], Some("11")).unwrap();
        assert_eq!(c.params["alpha"], "0.5");
        assert_eq!(c.params["max-degree"], "4");
        assert_eq!(c.seed, 9);
        let c = config(&["gcrm", "orthogonality"], Some("11")).unwrap();
        assert_eq!(c.seed, 11);
        assert_eq!(config(&["gcrm", "orthogonality"], None).unwrap().seed, 0);
    }

    #[test]
    fn rejects_bad_seed_and_samples() {
        assert!(config(&["gcrm", "orthogonality", "--seed", "-1"], None).is_err());
        assert!(config(&["gcrm", "orthogonality"], Some("x")).is_err());
        assert!(config(&["gcrm", "pair-corr", "--samples", "0"], None).is_err());
    }
}
