//! Run configuration: a TOML file, command-line overrides, and the
//! `METRIC_AUDIT_SEED` fallback. Relative paths in the file resolve against
//! the file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::ablate::Variant;
use crate::audit::ShortcutThresholds;
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_TRIALS;
use crate::stats::{PValueMode, Thresholds, DEFAULT_RESAMPLES};
use crate::textprops::YngveAggregate;
use crate::visprops::MissingWordPolicy;

pub const SEED_ENV: &str = "METRIC_AUDIT_SEED";
pub const DEFAULT_ABLATION_DROP: f64 = 0.05;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsFile {
    pub prompts: Option<PathBuf>,
    pub parses: Option<PathBuf>,
    pub questions: Option<PathBuf>,
    pub answers: Option<PathBuf>,
    pub similarities: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub concreteness: Option<PathBuf>,
    pub imageability: Option<PathBuf>,
    pub classes: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationFiles {
    pub answers: Option<PathBuf>,
    pub similarities: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShortcutFile {
    pub yes_pct: Option<f64>,
    pub first_pct: Option<f64>,
    pub count_rho: Option<f64>,
}

/// The config file as written.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub missing_word_policy: Option<String>,
    pub yngve: Option<String>,
    pub derangement: Option<bool>,
    pub exact_p: Option<bool>,
    pub random_trials: Option<usize>,
    pub permutation_resamples: Option<usize>,
    pub ablation_drop: Option<f64>,
    pub figures: Option<bool>,
    #[serde(default)]
    pub shortcuts: ShortcutFile,
    #[serde(default)]
    pub paths: PathsFile,
    /// Answer and similarity files produced on ablated inputs, keyed by
    /// variant name.
    #[serde(default)]
    pub ablations: BTreeMap<String, AblationFiles>,
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![format!("{origin}: {e}")]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// Values given on the command line; each wins over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub missing_policy: Option<String>,
    pub derangement: bool,
    pub exact_p: bool,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Paths {
    pub prompts: Option<PathBuf>,
    pub parses: Option<PathBuf>,
    pub questions: Option<PathBuf>,
    pub answers: Option<PathBuf>,
    pub similarities: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub concreteness: Option<PathBuf>,
    pub imageability: Option<PathBuf>,
    pub classes: Option<PathBuf>,
}

impl Paths {
    /// (role, path) for every configured input, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, &Path)> {
        [
            ("prompts", &self.prompts),
            ("parses", &self.parses),
            ("questions", &self.questions),
            ("answers", &self.answers),
            ("similarities", &self.similarities),
            ("images", &self.images),
            ("stopwords", &self.stopwords),
            ("concreteness", &self.concreteness),
            ("imageability", &self.imageability),
            ("classes", &self.classes),
        ]
        .into_iter()
        .filter_map(|(role, p)| p.as_deref().map(|p| (role, p)))
        .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AblationPaths {
    pub answers: Option<PathBuf>,
    pub similarities: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub paths: Paths,
    pub ablations: BTreeMap<Variant, AblationPaths>,
    pub seed: Option<u64>,
    pub thresholds: Thresholds,
    pub shortcuts: ShortcutThresholds,
    pub missing_word_policy: MissingWordPolicy,
    pub yngve: YngveAggregate,
    pub derangement: bool,
    pub exact_p: bool,
    pub random_trials: usize,
    pub permutation_resamples: usize,
    pub ablation_drop: f64,
    pub figures: bool,
    pub out: PathBuf,
}

fn parse_yngve(s: &str) -> std::result::Result<YngveAggregate, String> {
    match s {
        "mean" => Ok(YngveAggregate::Mean),
        "max" => Ok(YngveAggregate::Max),
        other => Err(format!("unknown yngve aggregate `{other}` (expected mean or max)")),
    }
}

fn parse_variant(s: &str) -> Option<Variant> {
    Variant::ALL
        .into_iter()
        .find(|v| *v != Variant::Original && v.as_str() == s)
}

impl RunConfig {
    /// Merges file, flags and environment, and checks every value and path.
    /// All problems are reported together.
    pub fn resolve(
        file: Option<(ConfigFile, PathBuf)>,
        overrides: Overrides,
        env_seed: Option<String>,
    ) -> Result<Self> {
        let (file, base) = file.unwrap_or_default();
        let mut problems = Vec::new();
        let resolve = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });

        let seed = match (overrides.seed, file.seed, env_seed) {
            (Some(s), _, _) | (None, Some(s), _) => Some(s),
            (None, None, Some(env)) => match env.trim().parse::<u64>() {
                Ok(s) => Some(s),
                Err(_) => {
                    problems.push(format!("{SEED_ENV}=`{env}` is not a non-negative integer"));
                    None
                }
            },
            (None, None, None) => None,
        };

        let alpha = overrides.alpha.or(file.alpha).unwrap_or(crate::stats::DEFAULT_ALPHA);
        if !(alpha > 0.0 && alpha < 1.0) {
            problems.push(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        let tau = overrides.tau.or(file.tau).unwrap_or(crate::stats::DEFAULT_TAU);
        if !(0.0..=1.0).contains(&tau) {
            problems.push(format!("tau must lie in [0, 1], got {tau}"));
        }

        let defaults = ShortcutThresholds::default();
        let shortcuts = ShortcutThresholds {
            yes_pct: file.shortcuts.yes_pct.unwrap_or(defaults.yes_pct),
            first_pct: file.shortcuts.first_pct.unwrap_or(defaults.first_pct),
            count_rho: file.shortcuts.count_rho.unwrap_or(defaults.count_rho),
        };
        for (name, v) in [
            ("shortcuts.yes_pct", shortcuts.yes_pct),
            ("shortcuts.first_pct", shortcuts.first_pct),
        ] {
            if !(0.0..=100.0).contains(&v) {
                problems.push(format!("{name} must lie in [0, 100], got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&shortcuts.count_rho) {
            problems.push(format!(
                "shortcuts.count_rho must lie in [0, 1], got {}",
                shortcuts.count_rho
            ));
        }

        let missing_word_policy = match overrides.missing_policy.or(file.missing_word_policy) {
            Some(s) => s.parse().unwrap_or_else(|e: String| {
                problems.push(e);
                MissingWordPolicy::default()
            }),
            None => MissingWordPolicy::default(),
        };
        let yngve = match file.yngve.as_deref() {
            Some(s) => parse_yngve(s).unwrap_or_else(|e| {
                problems.push(e);
                YngveAggregate::default()
            }),
            None => YngveAggregate::default(),
        };

        let random_trials = file.random_trials.unwrap_or(DEFAULT_TRIALS);
        if random_trials == 0 {
            problems.push("random_trials must be positive".into());
        }
        let permutation_resamples = file.permutation_resamples.unwrap_or(DEFAULT_RESAMPLES);
        if permutation_resamples == 0 {
            problems.push("permutation_resamples must be positive".into());
        }
        let ablation_drop = file.ablation_drop.unwrap_or(DEFAULT_ABLATION_DROP);
        if !ablation_drop.is_finite() || ablation_drop < 0.0 {
            problems.push(format!(
                "ablation_drop must be a non-negative number, got {ablation_drop}"
            ));
        }

        let pf = file.paths;
        let paths = Paths {
            prompts: resolve(pf.prompts),
            parses: resolve(pf.parses),
            questions: resolve(pf.questions),
            answers: resolve(pf.answers),
            similarities: resolve(pf.similarities),
            images: resolve(pf.images),
            stopwords: resolve(pf.stopwords),
            concreteness: resolve(pf.concreteness),
            imageability: resolve(pf.imageability),
            classes: resolve(pf.classes),
        };
        if paths.prompts.is_none() {
            problems.push("paths.prompts is required".into());
        }
        for (role, p) in paths.entries() {
            if !p.is_file() {
                problems.push(format!("paths.{role}: `{}` does not exist", p.display()));
            }
        }

        let mut ablations = BTreeMap::new();
        for (name, files) in file.ablations {
            let Some(variant) = parse_variant(&name) else {
                problems.push(format!(
                    "ablations.{name}: unknown variant (expected shuffled_images, shuffled_text, retrieval_qa or text_only_qa)"
                ));
                continue;
            };
            let entry = AblationPaths {
                answers: resolve(files.answers),
                similarities: resolve(files.similarities),
            };
            for (role, p) in [("answers", &entry.answers), ("similarities", &entry.similarities)] {
                if let Some(p) = p {
                    if !p.is_file() {
                        problems.push(format!("ablations.{name}.{role}: `{}` does not exist", p.display()));
                    }
                }
            }
            ablations.insert(variant, entry);
        }

        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        Ok(RunConfig {
            paths,
            ablations,
            seed,
            thresholds: Thresholds { alpha, tau },
            shortcuts,
            missing_word_policy,
            yngve,
            derangement: overrides.derangement || file.derangement.unwrap_or(false),
            exact_p: overrides.exact_p || file.exact_p.unwrap_or(false),
            random_trials,
            permutation_resamples,
            ablation_drop,
            figures: file.figures.unwrap_or(true),
            out: overrides
                .out
                .or(file.out.map(|o| base.join(o)))
                .unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    /// Loads `path` if given and resolves it with the overrides and the
    /// environment seed.
    pub fn from_sources(config: Option<&Path>, overrides: Overrides) -> Result<Self> {
        let file = match config {
            Some(p) => {
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                Some((ConfigFile::load(p)?, base))
            }
            None => None,
        };
        Self::resolve(file, overrides, std::env::var(SEED_ENV).ok())
    }

    pub fn require_seed(&self, what: &str) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::Config(vec![format!(
                "{what} needs a seed: pass --seed, set `seed` in the config, or set {SEED_ENV}"
            )])
        })
    }

    pub fn require_path<'a>(&self, role: &str, path: &'a Option<PathBuf>) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::Config(vec![format!("paths.{role} is required for this command")]))
    }

    /// p-value mode; permutation tests need the seed.
    pub fn p_value_mode(&self) -> Result<PValueMode> {
        if self.exact_p {
            Ok(PValueMode::Permutation {
                seed: self.require_seed("--exact-p")?,
                resamples: self.permutation_resamples,
            })
        } else {
            Ok(PValueMode::TApproximation)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file_with(text: &str) -> ConfigFile {
        ConfigFile::parse(text, "test.toml").unwrap()
    }

    fn touch(dir: &Path, name: &str) {
        std::fs::write(dir.join(name), "").unwrap();
    }

    #[test]
    fn flags_win_over_file_and_env() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "p.jsonl");
        let file = file_with("seed = 1\nalpha = 0.01\n[paths]\nprompts = \"p.jsonl\"\n");
        let cfg = RunConfig::resolve(
            Some((file.clone(), dir.path().to_path_buf())),
            Overrides {
                seed: Some(9),
                tau: Some(0.5),
                ..Overrides::default()
            },
            Some("3".into()),
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.thresholds, Thresholds { alpha: 0.01, tau: 0.5 });
        assert_eq!(cfg.paths.prompts.as_deref(), Some(dir.path().join("p.jsonl").as_path()));

        let cfg = RunConfig::resolve(
            Some((file, dir.path().to_path_buf())),
            Overrides::default(),
            Some("3".into()),
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(1));
    }

    #[test]
    fn env_seed_is_fallback() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "p.jsonl");
        let file = file_with("[paths]\nprompts = \"p.jsonl\"\n");
        let cfg = RunConfig::resolve(
            Some((file.clone(), dir.path().into())),
            Overrides::default(),
            Some("42".into()),
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(42));
        let cfg = RunConfig::resolve(Some((file, dir.path().into())), Overrides::default(), None).unwrap();
        assert!(cfg.require_seed("ablate").is_err());
    }

    #[test]
    fn every_problem_is_listed() {
        let file = file_with(
            "alpha = 2.0\ntau = -1.0\nmissing_word_policy = \"guess\"\n[paths]\nquestions = \"nope.jsonl\"\n[ablations.bogus]\n",
        );
        match RunConfig::resolve(
            Some((file, PathBuf::from("/nonexistent"))),
            Overrides::default(),
            Some("x".into()),
        ) {
            Err(Error::Config(problems)) => {
                assert_eq!(problems.len(), 7, "{problems:#?}");
                assert_eq!(Error::Config(problems).category().exit_code(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(ConfigFile::parse("sede = 3\n", "t"), Err(Error::Config(_))));
    }
}
