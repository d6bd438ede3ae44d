//! Network definitions: the plain MLP and the encoder-mixing variant, their
//! parameter layout, and evaluation routes.
//!
//! Two evaluation routes exist. [`forward_jet`] is generic over
//! [`Scalar`](crate::autodiff::Scalar) and runs point by point, so it can be
//! recorded on a tape. [`batch`] evaluates whole point sets with the same
//! Taylor propagation and a hand-derived reverse pass; it is the training
//! path.

pub mod batch;
mod forward;
mod params;

use serde::{Deserialize, Serialize};

pub use forward::{eval_jet2, forward, forward_improved, forward_jet, forward_plain};
pub use params::{init_params, Block, Layout, ParameterSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchKind {
    Plain,
    Improved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkDef {
    pub kind: ArchKind,
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_layers: usize,
    pub units: usize,
    #[serde(default)]
    pub activation: Activation,
}

impl NetworkDef {
    pub fn new(
        kind: ArchKind,
        input_dim: usize,
        output_dim: usize,
        hidden_layers: usize,
        units: usize,
    ) -> Result<Self> {
        let def = Self {
            kind,
            input_dim,
            output_dim,
            hidden_layers,
            units,
            activation: Activation::Tanh,
        };
        def.validate()?;
        Ok(def)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.units == 0 {
            return Err(Error::contract(
                "network needs at least one hidden layer and one unit",
            ));
        }
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::contract(
                "network input and output dimensions must be positive",
            ));
        }
        Ok(())
    }

    /// Number of network parameters (uncertainty raws excluded).
    pub fn param_count(&self) -> usize {
        let (d, n, o, l) = (
            self.input_dim,
            self.units,
            self.output_dim,
            self.hidden_layers,
        );
        let encoders = match self.kind {
            ArchKind::Plain => 0,
            ArchKind::Improved => 2 * (d * n + n),
        };
        encoders + (d * n + n) + (l - 1) * (n * n + n) + (n * o + o)
    }

    /// Parameter blocks in storage order. Weight blocks are `(out, in)`
    /// row-major.
    pub fn layout(&self) -> Layout {
        let (d, n, o) = (self.input_dim, self.units, self.output_dim);
        let mut blocks = Vec::new();
        if self.kind == ArchKind::Improved {
            blocks.push(("encoder_u.weight".to_string(), (n, d)));
            blocks.push(("encoder_u.bias".to_string(), (n, 1)));
            blocks.push(("encoder_v.weight".to_string(), (n, d)));
            blocks.push(("encoder_v.bias".to_string(), (n, 1)));
        }
        for l in 0..self.hidden_layers {
            let fan_in = if l == 0 { d } else { n };
            blocks.push((format!("hidden.{l}.weight"), (n, fan_in)));
            blocks.push((format!("hidden.{l}.bias"), (n, 1)));
        }
        blocks.push(("output.weight".to_string(), (o, n)));
        blocks.push(("output.bias".to_string(), (o, 1)));
        Layout::from_shapes(blocks)
    }
}

/// Offsets of one affine map inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Affine {
    pub weight: usize,
    pub bias: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Affine {
    pub fn weight<'a, S>(&self, p: &'a [S]) -> &'a [S] {
        &p[self.weight..self.weight + self.rows * self.cols]
    }

    pub fn bias<'a, S>(&self, p: &'a [S]) -> &'a [S] {
        &p[self.bias..self.bias + self.rows]
    }
}

/// Offsets of every affine map, in evaluation order.
#[derive(Debug, Clone)]
pub(crate) struct Offsets {
    pub encoders: Option<(Affine, Affine)>,
    pub hidden: Vec<Affine>,
    pub output: Affine,
}

impl NetworkDef {
    pub(crate) fn offsets(&self) -> Offsets {
        let (d, n, o) = (self.input_dim, self.units, self.output_dim);
        let mut cursor = 0;
        let mut affine = |rows: usize, cols: usize| {
            let a = Affine {
                weight: cursor,
                bias: cursor + rows * cols,
                rows,
                cols,
            };
            cursor += rows * cols + rows;
            a
        };
        let encoders = match self.kind {
            ArchKind::Plain => None,
            ArchKind::Improved => Some((affine(n, d), affine(n, d))),
        };
        let hidden = (0..self.hidden_layers)
            .map(|l| affine(n, if l == 0 { d } else { n }))
            .collect();
        let output = affine(o, n);
        Offsets {
            encoders,
            hidden,
            output,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_count_matches_shape_arithmetic() {
        let def = NetworkDef::new(ArchKind::Plain, 2, 1, 7, 50).unwrap();
        assert_eq!(def.param_count(), 2 * 50 + 50 + 6 * (50 * 50 + 50) + 50 + 1);
    }

    #[test]
    fn layout_partitions_parameter_vector() {
        for kind in [ArchKind::Plain, ArchKind::Improved] {
            for layers in [3, 5, 7] {
                for units in [30, 50, 70, 90] {
                    let def = NetworkDef::new(kind, 2, 1, layers, units).unwrap();
                    let layout = def.layout();
                    assert_eq!(layout.total(), def.param_count());
                    layout.check_partition().unwrap();
                    let off = def.offsets();
                    assert_eq!(off.output.bias + 1, def.param_count());
                }
            }
        }
    }

    #[test]
    fn rejects_empty_network() {
        assert!(NetworkDef::new(ArchKind::Plain, 2, 1, 0, 10).is_err());
        assert!(NetworkDef::new(ArchKind::Plain, 2, 1, 3, 0).is_err());
    }
}
