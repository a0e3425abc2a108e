//! Benchmark suites and evidence generation.

use crate::BenchError;
use pgplang::gof::Metric;
use pgplang::typecheck::{infer, TypingContext};
use pgplang::{parse_program, Expr, RngStream, SampleSet};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// One benchmark test: a ground-truth program or pre-sampled evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSuite {
    #[serde(default = "default_name")]
    pub name: String,
    /// Evidence points drawn per ground-truth program.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Seed used to draw evidence from ground-truth programs.
    #[serde(default)]
    pub evidence_seed: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_budgets")]
    pub budgets: Vec<usize>,
    /// Seconds per (test, seed, mode, budget) cell.
    #[serde(default)]
    pub time_limit: Option<f64>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default = "default_n_candidate")]
    pub n_candidate: usize,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default, rename = "test")]
    pub tests: Vec<TestCase>,
    /// Directory that relative test paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// The configuration text the suite was loaded from.
    #[serde(skip)]
    pub source_text: String,
}

fn default_name() -> String {
    "suite".into()
}
fn default_samples() -> usize {
    10_000
}
fn default_seeds() -> Vec<u64> {
    (0..20).collect()
}
fn default_budgets() -> Vec<usize> {
    vec![31]
}
fn default_n_candidate() -> usize {
    1000
}

/// A loaded test ready for evidence generation.
#[derive(Debug, Clone)]
pub enum TestSource {
    Program(Expr),
    Evidence(SampleSet),
}

impl BenchSuite {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<BenchSuite, BenchError> {
        let mut suite: BenchSuite = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        suite.base_dir = base_dir.into();
        suite.source_text = text.to_string();
        suite.check_ids()?;
        Ok(suite)
    }

    pub fn load(path: &Path) -> Result<BenchSuite, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        BenchSuite::parse(&text, dir)
    }

    /// A suite with one test per `.pgp` file in `dir`, sorted by file name.
    pub fn from_corpus_dir(dir: &Path) -> Result<BenchSuite, BenchError> {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| BenchError::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "pgp"))
            .collect();
        files.sort();
        let tests = files
            .iter()
            .map(|p| TestCase {
                id: p.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                program: p.file_name().map(PathBuf::from),
                evidence: None,
            })
            .collect();
        let mut suite = BenchSuite::parse("", dir)?;
        suite.name = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        suite.tests = tests;
        suite.check_ids()?;
        Ok(suite)
    }

    fn check_ids(&self) -> Result<(), BenchError> {
        let mut seen = HashSet::new();
        for t in &self.tests {
            if !seen.insert(t.id.as_str()) {
                return Err(BenchError::Config(format!("duplicate test id {:?}", t.id)));
            }
            if t.program.is_some() == t.evidence.is_some() {
                return Err(BenchError::Config(format!("test {:?} needs exactly one of program or evidence", t.id)));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Reads a test's file. Ground-truth programs must typecheck.
    pub fn load_test(&self, t: &TestCase) -> Result<TestSource, BenchError> {
        if let Some(p) = &t.program {
            let path = self.resolve(p);
            let e = read_program(&path)?;
            infer(&TypingContext::new(), &e).map_err(|err| BenchError::IllTyped { id: t.id.clone(), detail: err.to_string() })?;
            Ok(TestSource::Program(e))
        } else {
            let path = self.resolve(t.evidence.as_ref().expect("checked when loading"));
            Ok(TestSource::Evidence(read_samples(&path)?))
        }
    }

    /// Loads every test and reports the first problem.
    pub fn validate(&self) -> Result<(), BenchError> {
        self.tests.iter().try_for_each(|t| self.load_test(t).map(|_| ()))
    }

    /// Evidence for test `index`: the bundled samples, or `samples` draws of
    /// the program from substream `index` of `seed`.
    pub fn evidence_for(&self, index: usize, seed: u64) -> Result<SampleSet, BenchError> {
        let t = &self.tests[index];
        match self.load_test(t)? {
            TestSource::Evidence(s) => Ok(s),
            TestSource::Program(e) => {
                let mut rng = RngStream::new(seed).substream(index as u64);
                let (s, errors) = pgplang::sample_many(&e, self.samples, &mut rng);
                if errors > 0 {
                    return Err(BenchError::IllTyped { id: t.id.clone(), detail: format!("{errors} runtime errors while sampling") });
                }
                Ok(SampleSet::new(s.into_values(), t.id.clone()))
            }
        }
    }
}

pub fn read_program(path: &Path) -> Result<Expr, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_program(&text).map_err(|e| BenchError::Parse { path: path.to_path_buf(), detail: e.to_string() })
}

pub fn read_samples(path: &Path) -> Result<SampleSet, BenchError> {
    let f = fs::File::open(path).map_err(|e| BenchError::io(path, e))?;
    SampleSet::read_from(BufReader::new(f), path.display().to_string())
        .map_err(|e| BenchError::Parse { path: path.to_path_buf(), detail: e.to_string() })
}

pub fn write_samples(path: &Path, s: &SampleSet) -> Result<(), BenchError> {
    let f = fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
    let mut w = BufWriter::new(f);
    s.write_to(&mut w).and_then(|_| w.flush()).map_err(|e| BenchError::io(path, e))
}

/// Result of writing evidence files for a suite.
#[derive(Debug, Default)]
pub struct EvidenceOutcome {
    pub written: Vec<PathBuf>,
    /// Tests that could not produce evidence, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Writes `<out>/<id>.samples` for every test.
pub fn make_evidence(suite: &BenchSuite, out: &Path, seed: u64) -> Result<EvidenceOutcome, BenchError> {
    fs::create_dir_all(out).map_err(|e| BenchError::io(out, e))?;
    let mut outcome = EvidenceOutcome::default();
    for (i, t) in suite.tests.iter().enumerate() {
        match suite.evidence_for(i, seed) {
            Ok(s) => {
                let path = out.join(format!("{}.samples", t.id));
                write_samples(&path, &s)?;
                outcome.written.push(path);
            }
            Err(e) => outcome.skipped.push((t.id.clone(), e.to_string())),
        }
    }
    Ok(outcome)
}
