use std::ops::Range;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::NetworkDef;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub start: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len()
    }
}

/// Named blocks covering the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Layout {
    pub blocks: Vec<Block>,
}

impl Layout {
    pub fn from_shapes(shapes: impl IntoIterator<Item = (String, (usize, usize))>) -> Self {
        let mut start = 0;
        let blocks = shapes
            .into_iter()
            .map(|(name, (rows, cols))| {
                let b = Block {
                    name,
                    start,
                    rows,
                    cols,
                };
                start += b.len();
                b
            })
            .collect();
        Self { blocks }
    }

    pub fn total(&self) -> usize {
        self.blocks.iter().map(Block::len).sum()
    }

    pub fn get(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn push(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> Range<usize> {
        let start = self.total();
        self.blocks.push(Block {
            name: name.into(),
            start,
            rows,
            cols,
        });
        start..start + rows * cols
    }

    /// Blocks must tile `0..total()` in order, without overlap or gaps.
    pub fn check_partition(&self) -> Result<()> {
        let mut cursor = 0;
        for b in &self.blocks {
            if b.start != cursor {
                return Err(Error::contract(format!(
                    "block {} starts at {} but previous block ended at {cursor}",
                    b.name, b.start
                )));
            }
            cursor += b.len();
        }
        Ok(())
    }
}

/// Flat trainable parameters with their block layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub values: Vec<f64>,
    pub layout: Layout,
}

impl ParameterSet {
    pub fn new(values: Vec<f64>, layout: Layout) -> Result<Self> {
        layout.check_partition()?;
        if layout.total() != values.len() {
            return Err(Error::contract(format!(
                "layout covers {} slots but {} values were given",
                layout.total(),
                values.len()
            )));
        }
        Ok(Self { values, layout })
    }

    pub fn zeros(def: &NetworkDef) -> Self {
        Self {
            values: vec![0.0; def.param_count()],
            layout: def.layout(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, name: &str) -> Option<&[f64]> {
        self.layout.get(name).map(|b| &self.values[b.range()])
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let range = self.layout.get(name)?.range();
        Some(&mut self.values[range])
    }

    /// Appends a new block initialized to `init` and returns its slot range.
    pub fn append_block(&mut self, name: &str, init: &[f64]) -> Range<usize> {
        let range = self.layout.push(name, init.len(), 1);
        self.values.extend_from_slice(init);
        range
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let raw: ParameterSet = serde_json::from_reader(file)?;
        Self::new(raw.values, raw.layout)
    }
}

/// Glorot-normal weights, zero biases; deterministic for a given seed.
pub fn init_params(def: &NetworkDef, seed: u64) -> ParameterSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = def.layout();
    let mut values = vec![0.0; layout.total()];
    for block in &layout.blocks {
        if block.name.ends_with(".weight") {
            // (out, in) blocks: fan_out = rows, fan_in = cols
            let std = (2.0 / (block.rows + block.cols) as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("finite std");
            for v in &mut values[block.range()] {
                *v = normal.sample(&mut rng);
            }
        }
    }
    ParameterSet { values, layout }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::ArchKind;

    #[test]
    fn same_seed_same_parameters() {
        let def = NetworkDef::new(ArchKind::Improved, 2, 1, 3, 20).unwrap();
        assert_eq!(init_params(&def, 7), init_params(&def, 7));
        assert_ne!(init_params(&def, 7).values, init_params(&def, 8).values);
    }

    #[test]
    fn biases_start_at_zero() {
        let def = NetworkDef::new(ArchKind::Improved, 2, 3, 2, 8).unwrap();
        let p = init_params(&def, 1);
        for b in p.layout.blocks.iter().filter(|b| b.name.ends_with(".bias")) {
            assert!(p.values[b.range()].iter().all(|&v| v == 0.0), "{}", b.name);
        }
    }

    #[test]
    fn glorot_std_on_square_block() {
        let def = NetworkDef::new(ArchKind::Plain, 2, 1, 5, 50).unwrap();
        let p = init_params(&def, 2024);
        // four 50x50 blocks = 10^4 samples
        let samples: Vec<f64> = (1..5)
            .flat_map(|l| p.block(&format!("hidden.{l}.weight")).unwrap().to_vec())
            .collect();
        assert_eq!(samples.len(), 10_000);
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let expected = (2.0f64 / 100.0).sqrt();
        assert!(
            (std - expected).abs() / expected < 0.1,
            "std {std} vs {expected}"
        );
    }

    #[test]
    fn checkpoint_round_trip_is_lossless() {
        let def = NetworkDef::new(ArchKind::Improved, 2, 1, 2, 6).unwrap();
        let mut p = init_params(&def, 3);
        p.append_block("uncertainty", &[-0.01005033585350145, 1e-300, -7.25]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.json");
        p.save_json(&path).unwrap();
        let back = ParameterSet::load_json(&path).unwrap();
        assert_eq!(back, p);
        assert!(back
            .values
            .iter()
            .zip(&p.values)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn mismatched_layout_rejected() {
        let layout = Layout::from_shapes([("w".to_string(), (2, 2))]);
        assert!(ParameterSet::new(vec![0.0; 3], layout).is_err());
    }
}
