use sha2::{Digest, Sha256};

/// Labels identifying one unit of seeded work.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SeedLabels<'a> {
    pub dataset: &'a str,
    pub phase: u8,
    pub fold: Option<usize>,
    pub algorithm: Option<&'a str>,
    pub trial: Option<usize>,
}

impl<'a> SeedLabels<'a> {
    pub fn new(dataset: &'a str, phase: u8) -> Self {
        SeedLabels {
            dataset,
            phase,
            ..Default::default()
        }
    }

    pub fn fold(mut self, fold: usize) -> Self {
        self.fold = Some(fold);
        self
    }

    pub fn algorithm(mut self, algorithm: &'a str) -> Self {
        self.algorithm = Some(algorithm);
        self
    }

    pub fn trial(mut self, trial: usize) -> Self {
        self.trial = Some(trial);
        self
    }
}

/// First 8 bytes (little endian) of SHA-256 over the experiment seed and the
/// labels, separated by unit separators; absent labels hash as `-`.
pub fn derive_seed(experiment_seed: u64, labels: &SeedLabels<'_>) -> u64 {
    let opt = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |x| x.to_string());
    let text = format!(
        "{experiment_seed}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{}",
        labels.dataset,
        labels.phase,
        opt(labels.fold),
        labels.algorithm.unwrap_or("-"),
        opt(labels.trial),
    );
    let digest = Sha256::digest(text.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
