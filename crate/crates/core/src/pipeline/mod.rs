//! Experiment orchestration.
//!
//! An experiment directory holds one subdirectory per target dataset with
//! `phase1` .. `phase6` inside, `comparison/` for cross-dataset tables,
//! `<dataset>/replication/<name>/` per replication file, `summary/` for the
//! reports and `runtime.csv` at the root. Each phase directory carries a
//! completion marker with content hashes of its outputs and inputs, so a
//! rerun skips phases whose outputs and upstream artifacts are unchanged.

mod phases;
mod report;
pub mod seed;
pub mod store;
mod tables;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::data::Config;
use crate::error::{Error, Result};
use crate::models::AlgorithmId;

pub use seed::{derive_seed, SeedLabels};
use store::{hash_dir, hash_file, read_marker, sha256_hex, write_json, Marker, Table, MARKER_FILE};

pub const LAYOUT_VERSION: u32 = 1;
pub const EXPERIMENT_SCOPE: &str = "experiment";

/// Keys that do not affect phases 1 to 7: paths are tracked by content
/// hashes instead, replication keys only matter from phase 8 on.
const LOCATION_KEYS: [&str; 4] = ["experiment_path", "datasets", "replication_data", "dataset_for_rep"];

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetEntry {
    pub name: String,
    pub path: PathBuf,
}

/// Restricts a phase to a subset of its job units.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Filter {
    pub dataset: Option<String>,
    pub fold: Option<usize>,
    pub algorithm: Option<AlgorithmId>,
}

impl Filter {
    pub fn is_empty(&self) -> bool {
        self.dataset.is_none() && self.fold.is_none() && self.algorithm.is_none()
    }

    fn partial(&self) -> bool {
        self.fold.is_some() || self.algorithm.is_some()
    }

    fn takes_fold(&self, f: usize) -> bool {
        self.fold.is_none_or(|x| x == f)
    }

    fn takes_algorithm(&self, a: AlgorithmId) -> bool {
        self.algorithm.is_none_or(|x| x == a)
    }
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: Config,
    pub root: PathBuf,
    pub datasets: Vec<DatasetEntry>,
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

impl Experiment {
    /// Validates the configuration and the input paths.
    pub fn new(config: Config) -> Result<Experiment> {
        let mut problems = config.problems();
        if config.datasets.is_empty() {
            problems.push("datasets: at least one dataset is required".to_string());
        }
        let mut names = BTreeSet::new();
        let mut datasets = Vec::new();
        for p in &config.datasets {
            if !p.is_file() {
                problems.push(format!("datasets: file {} does not exist", p.display()));
            }
            let name = stem(p);
            if !names.insert(name.clone()) {
                problems.push(format!("datasets: more than one dataset is named '{name}'"));
            }
            datasets.push(DatasetEntry { name, path: p.clone() });
        }
        let mut reps = BTreeSet::new();
        for p in &config.replication_data {
            if !p.is_file() {
                problems.push(format!("replication_data: file {} does not exist", p.display()));
            }
            if !reps.insert(stem(p)) {
                problems.push(format!("replication_data: more than one file is named '{}'", stem(p)));
            }
        }
        match &config.dataset_for_rep {
            Some(d) if !names.contains(d) => {
                problems.push(format!("dataset_for_rep: '{d}' is not one of the target datasets"));
            }
            None if !config.replication_data.is_empty() && datasets.len() > 1 => {
                problems.push("dataset_for_rep: required when replicating with several target datasets".to_string());
            }
            _ => {}
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        Ok(Experiment {
            root: config.experiment_path.clone(),
            config,
            datasets,
        })
    }

    pub fn from_file(path: &Path, overrides: &[(String, String)]) -> Result<Experiment> {
        let text = store::read_text(path).map_err(|_| Error::Config(vec![format!("cannot read config file {}", path.display())]))?;
        let mut config = Config::parse(&text)?;
        let errors: Vec<String> = overrides.iter().filter_map(|(k, v)| config.set(k, v).err()).collect();
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        Experiment::new(config)
    }

    pub fn phase_dir(&self, dataset: &str, phase: u8) -> PathBuf {
        self.root.join(dataset).join(format!("phase{phase}"))
    }

    pub fn comparison_dir(&self) -> PathBuf {
        self.root.join("comparison")
    }

    pub fn replication_dir(&self, dataset: &str, rep: &str) -> PathBuf {
        self.root.join(dataset).join("replication").join(rep)
    }

    pub fn summary_dir(&self) -> PathBuf {
        self.root.join("summary")
    }

    /// Target dataset for replication.
    pub fn replication_target(&self) -> &str {
        self.config
            .dataset_for_rep
            .as_deref()
            .unwrap_or(self.datasets[0].name.as_str())
    }

    pub fn replication_names(&self) -> Vec<(String, PathBuf)> {
        self.config.replication_data.iter().map(|p| (stem(p), p.clone())).collect()
    }

    fn config_hash(&self, phase: u8) -> String {
        let text: String = self
            .config
            .to_text()
            .lines()
            .filter(|l| {
                let key = l.split('=').next().unwrap_or("").trim();
                key != "experiment_path" && (phase >= 8 || !LOCATION_KEYS.contains(&key))
            })
            .map(|l| format!("{l}\n"))
            .collect();
        sha256_hex(text.as_bytes())
    }

    /// Directory of phase `phase` for scope `scope`.
    fn scope_dir(&self, phase: u8, scope: &str) -> PathBuf {
        match phase {
            1..=6 => self.phase_dir(scope, phase),
            7 => self.comparison_dir(),
            8 => {
                let (ds, rep) = scope.split_once('/').expect("replication scope is dataset/name");
                self.replication_dir(ds, rep)
            }
            _ => self.summary_dir(),
        }
    }

    /// Upstream identifiers mapped to current hashes: prerequisite phase
    /// markers' output hashes and raw input file hashes.
    fn current_inputs(&self, phase: u8, scope: &str) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        let need = |ph: u8, sc: &str, out: &mut BTreeMap<String, String>| -> Result<()> {
            let dir = self.scope_dir(ph, sc);
            let m = read_marker(&dir)
                .ok_or_else(|| Error::Prerequisite(format!("phase {ph} has not completed for {sc}")))?;
            out.insert(format!("phase{ph}:{sc}"), m.outputs);
            Ok(())
        };
        match phase {
            1 => {
                let entry = self
                    .datasets
                    .iter()
                    .find(|d| d.name == scope)
                    .ok_or_else(|| Error::Config(vec![format!("unknown dataset '{scope}'")]))?;
                out.insert("data".to_string(), hash_file(&entry.path)?);
            }
            2..=6 => need(phase - 1, scope, &mut out)?,
            7 => {
                for d in &self.datasets {
                    need(6, &d.name, &mut out)?;
                }
            }
            8 => {
                let (ds, rep) = scope.split_once('/').expect("replication scope");
                for ph in [1, 2, 4, 5] {
                    need(ph, ds, &mut out)?;
                }
                let (_, path) = self
                    .replication_names()
                    .into_iter()
                    .find(|(n, _)| n == rep)
                    .ok_or_else(|| Error::Config(vec![format!("unknown replication data '{rep}'")]))?;
                out.insert("replication".to_string(), hash_file(&path)?);
            }
            _ => {
                for d in &self.datasets {
                    need(6, &d.name, &mut out)?;
                }
                if self.datasets.len() >= 2 {
                    if let Some(m) = read_marker(&self.comparison_dir()) {
                        out.insert(format!("phase7:{EXPERIMENT_SCOPE}"), m.outputs);
                    }
                }
                for s in self.replication_scopes() {
                    need(8, &s, &mut out)?;
                }
            }
        }
        Ok(out)
    }

    fn replication_scopes(&self) -> Vec<String> {
        let target = self.replication_target();
        self.replication_names()
            .into_iter()
            .map(|(n, _)| format!("{target}/{n}"))
            .collect()
    }

    /// True when the marker exists and every hash it records still holds.
    pub fn is_current(&self, phase: u8, scope: &str) -> bool {
        let dir = self.scope_dir(phase, scope);
        let Some(m) = read_marker(&dir) else { return false };
        let Ok(inputs) = self.current_inputs(phase, scope) else { return false };
        m.config_hash == self.config_hash(phase)
            && m.inputs == inputs
            && hash_dir(&dir, &[]).is_ok_and(|h| h == m.outputs)
    }

    fn execute(&self, phase: u8, scope: &str, filter: &Filter) -> Result<()> {
        let inputs = self.current_inputs(phase, scope)?;
        let dir = self.scope_dir(phase, scope);
        if !filter.partial() && dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        log::info!("phase {phase}: {scope}");
        let start = Instant::now();
        match phase {
            1 => phases::phase1(self, scope)?,
            2 => phases::phase2(self, scope, filter)?,
            3 => phases::phase3(self, scope, filter)?,
            4 => phases::phase4(self, scope, filter)?,
            5 => phases::phase5(self, scope, filter)?,
            6 => phases::phase6(self, scope)?,
            7 => phases::phase7(self)?,
            8 => phases::phase8(self, scope)?,
            _ => report::phase9(self)?,
        }
        let marker = Marker {
            phase,
            scope: scope.to_string(),
            config_hash: self.config_hash(phase),
            inputs,
            outputs: hash_dir(&dir, &[])?,
            seconds: start.elapsed().as_secs_f64(),
        };
        write_json(&dir.join(MARKER_FILE), &marker)
    }

    fn write_header_files(&self) -> Result<()> {
        store::write_text(&self.root.join("layout_version.txt"), &format!("{LAYOUT_VERSION}\n"))?;
        store::write_text(&self.root.join("config.txt"), &self.config.to_text())
    }

    /// Runs every applicable phase, skipping those that are current.
    pub fn run(&self) -> Result<()> {
        self.write_header_files()?;
        for d in &self.datasets {
            for phase in 1..=6 {
                if !self.is_current(phase, &d.name) {
                    self.execute(phase, &d.name, &Filter::default())?;
                }
            }
        }
        if self.datasets.len() >= 2 && !self.is_current(7, EXPERIMENT_SCOPE) {
            self.execute(7, EXPERIMENT_SCOPE, &Filter::default())?;
        }
        for s in self.replication_scopes() {
            if !self.is_current(8, &s) {
                self.execute(8, &s, &Filter::default())?;
            }
        }
        if !self.is_current(9, EXPERIMENT_SCOPE) {
            self.execute(9, EXPERIMENT_SCOPE, &Filter::default())?;
        }
        self.write_runtime()
    }

    /// Runs one phase unconditionally for the filtered scope. Prerequisite
    /// phases must have completed.
    pub fn run_phase(&self, phase: u8, filter: &Filter) -> Result<()> {
        if !(1..=9).contains(&phase) {
            return Err(Error::Config(vec![format!("phase must lie in 1..=9, got {phase}")]));
        }
        if let Some(d) = &filter.dataset {
            if !self.datasets.iter().any(|e| &e.name == d) {
                return Err(Error::Config(vec![format!("unknown dataset '{d}'")]));
            }
        }
        self.write_header_files()?;
        match phase {
            1..=6 => {
                for d in &self.datasets {
                    if filter.dataset.as_ref().is_none_or(|x| *x == d.name) {
                        self.check_prerequisite(phase, &d.name)?;
                        self.execute(phase, &d.name, filter)?;
                    }
                }
            }
            7 => {
                if self.datasets.len() < 2 {
                    return Err(Error::Prerequisite("dataset comparison needs at least two datasets".to_string()));
                }
                self.check_prerequisite(7, EXPERIMENT_SCOPE)?;
                self.execute(7, EXPERIMENT_SCOPE, filter)?;
            }
            8 => {
                if self.config.replication_data.is_empty() {
                    return Err(Error::Prerequisite("no replication_data configured".to_string()));
                }
                for s in self.replication_scopes() {
                    self.check_prerequisite(8, &s)?;
                    self.execute(8, &s, filter)?;
                }
            }
            _ => {
                self.check_prerequisite(9, EXPERIMENT_SCOPE)?;
                self.execute(9, EXPERIMENT_SCOPE, filter)?;
            }
        }
        self.write_runtime()
    }

    /// Upstream phases must be current, since stale inputs would silently
    /// mix artifacts from different runs.
    fn check_prerequisite(&self, phase: u8, scope: &str) -> Result<()> {
        let upstream: Vec<(u8, String)> = match phase {
            1 => vec![],
            2..=6 => vec![(phase - 1, scope.to_string())],
            7 => self.datasets.iter().map(|d| (6, d.name.clone())).collect(),
            8 => {
                let ds = scope.split_once('/').map_or(scope, |(d, _)| d);
                [1, 2, 4, 5].iter().map(|&p| (p, ds.to_string())).collect()
            }
            _ => {
                let mut v: Vec<(u8, String)> = self.datasets.iter().map(|d| (6, d.name.clone())).collect();
                v.extend(self.replication_scopes().into_iter().map(|s| (8, s)));
                v
            }
        };
        for (p, s) in upstream {
            if !self.is_current(p, &s) {
                return Err(Error::Prerequisite(format!(
                    "phase {p} is missing or out of date for {s}; run it before phase {phase}"
                )));
            }
        }
        Ok(())
    }

    /// Runs phase 8 for one replication file and refreshes the reports.
    pub fn replicate(&self, path: &Path) -> Result<()> {
        let mut config = self.config.clone();
        if !config.replication_data.iter().any(|p| p == path) {
            config.replication_data.push(path.to_path_buf());
        }
        let exp = Experiment::new(config)?;
        exp.write_header_files()?;
        let scope = format!("{}/{}", exp.replication_target(), stem(path));
        exp.check_prerequisite(8, &scope)?;
        exp.execute(8, &scope, &Filter::default())?;
        let all_current = exp.replication_scopes().iter().all(|s| exp.is_current(8, s));
        if all_current {
            exp.execute(9, EXPERIMENT_SCOPE, &Filter::default())?;
        }
        exp.write_runtime()
    }

    /// Regenerates the reports from persisted artifacts.
    pub fn report(&self) -> Result<PathBuf> {
        self.run_phase(9, &Filter::default())?;
        Ok(self.summary_dir().join(report::REPORT_FILE))
    }

    /// Markers in phase order: (phase, scope, seconds).
    pub fn runtimes(&self) -> Vec<(u8, String, f64)> {
        let mut out = Vec::new();
        for phase in 1..=9u8 {
            let scopes: Vec<String> = match phase {
                1..=6 => self.datasets.iter().map(|d| d.name.clone()).collect(),
                8 => self.replication_scopes(),
                _ => vec![EXPERIMENT_SCOPE.to_string()],
            };
            for s in scopes {
                if let Some(m) = read_marker(&self.scope_dir(phase, &s)) {
                    out.push((phase, s, m.seconds));
                }
            }
        }
        out
    }

    fn write_runtime(&self) -> Result<()> {
        let mut t = Table::new(&["phase", "scope", "seconds"]);
        for (p, s, secs) in self.runtimes() {
            t.push(vec![p.to_string(), s, format!("{secs:.3}")]);
        }
        t.write(&self.root.join("runtime.csv"))
    }
}
