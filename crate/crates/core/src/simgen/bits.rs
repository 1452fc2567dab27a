use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Column, Dataset, FeatureKind};
use crate::error::{Error, Result};

pub const MULTIPLEXER_SIZES: [usize; 6] = [6, 11, 20, 37, 70, 135];

/// Address bit count `k` with `k + 2^k == x_bits`.
pub fn address_bits(x_bits: usize) -> Result<usize> {
    (1..8)
        .find(|&k| k + (1 << k) == x_bits)
        .filter(|_| MULTIPLEXER_SIZES.contains(&x_bits))
        .ok_or_else(|| Error::data(format!("{x_bits} is not a supported multiplexer size {MULTIPLEXER_SIZES:?}")))
}

/// Register index selected by the address bits; bit 0 is the most significant.
pub fn multiplexer_output(address: &[u8], register: &[u8]) -> u8 {
    let idx = address.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
    register[idx]
}

pub(crate) fn instance_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("i{i}")).collect()
}

fn binary_dataset(names: Vec<String>, rows: Vec<Vec<u8>>, y: Vec<u8>) -> Dataset {
    let columns = names
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            Column::numeric(
                name,
                FeatureKind::Categorical,
                rows.iter().map(|r| Some(f64::from(r[j]))).collect(),
            )
        })
        .collect();
    Dataset {
        outcome_name: "Class".to_string(),
        instance_ids: instance_ids(y.len()),
        outcome: y.into_iter().map(Some).collect(),
        columns,
        group_labels: None,
    }
}

/// Uniform random bits named `A_0..` (address) then `R_0..` (register).
pub fn gen_multiplexer(x_bits: usize, n_instances: usize, seed: u64) -> Result<Dataset> {
    let k = address_bits(x_bits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n_instances);
    let mut y = Vec::with_capacity(n_instances);
    for _ in 0..n_instances {
        let bits: Vec<u8> = (0..x_bits).map(|_| rng.random_range(0..2u8)).collect();
        y.push(multiplexer_output(&bits[..k], &bits[k..]));
        rows.push(bits);
    }
    let names = (0..k)
        .map(|i| format!("A_{i}"))
        .chain((0..(1 << k)).map(|i| format!("R_{i}")))
        .collect();
    Ok(binary_dataset(names, rows, y))
}

/// Outcome is the parity of the first `order` features (`M0P0..`); the rest
/// (`N0..`) are noise.
pub fn gen_xor(order: usize, n_features: usize, n_instances: usize, seed: u64) -> Result<Dataset> {
    if order < 2 || order > n_features {
        return Err(Error::data(format!(
            "XOR order must lie in 2..={n_features}, got {order}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n_instances);
    let mut y = Vec::with_capacity(n_instances);
    for _ in 0..n_instances {
        let bits: Vec<u8> = (0..n_features).map(|_| rng.random_range(0..2u8)).collect();
        y.push(bits[..order].iter().fold(0, |a, b| a ^ b));
        rows.push(bits);
    }
    let names = (0..order)
        .map(|i| format!("M0P{i}"))
        .chain((0..n_features - order).map(|j| format!("N{j}")))
        .collect();
    Ok(binary_dataset(names, rows, y))
}
