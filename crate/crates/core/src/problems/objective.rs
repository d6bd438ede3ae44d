//! Training objective: collocation losses aggregated by a weighting scheme,
//! with gradients over network parameters and raw uncertainties.

use ndarray::Array2;

use super::{Pde, PointBatch, ProblemSpec};
use crate::autodiff::{Jet2, Scalar, Tape, Var};
use crate::error::{Error, Result};
use crate::network::batch::{self, BatchJets, JetRequest};
use crate::network::{forward_jet, NetworkDef};
use crate::weighting::{LossBreakdown, WeightState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Group {
    Interior,
    Boundary,
    Initial,
    Anchor,
}

/// Per-point jets of every network output, grouped by clause.
struct GroupJets<S> {
    interior: Vec<Vec<Jet2<S>>>,
    boundary: Vec<Vec<Jet2<S>>>,
    initial: Vec<Vec<Jet2<S>>>,
    anchor: Vec<Vec<Jet2<S>>>,
}

fn mean_of<S: Scalar>(items: impl IntoIterator<Item = S>) -> Option<S> {
    let mut n = 0usize;
    let sum = items.into_iter().fold(None, |acc: Option<S>, v| {
        n += 1;
        Some(match acc {
            Some(a) => a + v,
            None => v,
        })
    })?;
    Some(sum * (1.0 / n as f64))
}

fn assemble<S: Scalar>(
    pde: &Pde,
    batch: &PointBatch,
    jets: &GroupJets<S>,
) -> Result<LossBreakdown<S>> {
    let r = mean_of(
        jets.interior
            .iter()
            .zip(batch.interior.chunks(2))
            .map(|(outs, x)| {
                pde.residual(outs, x)
                    .into_iter()
                    .map(Scalar::square)
                    .reduce(|a, b| a + b)
                    .expect("residual has components")
            }),
    );
    let bc = mean_of(
        jets.boundary
            .iter()
            .zip(batch.boundary.chunks(2))
            .zip(&batch.boundary_edge)
            .map(|((outs, x), &e)| pde.boundary_mismatch(outs, x, e)),
    );
    let bc = match bc {
        Some(mut bc) => {
            for (outs, (_, output, target)) in jets.anchor.iter().zip(pde.anchors()) {
                bc = bc + (outs[output].value - target).square();
            }
            Some(bc)
        }
        None => None,
    };
    let ic = mean_of(
        jets.initial
            .iter()
            .zip(batch.initial.chunks(2))
            .filter_map(|(outs, x)| pde.initial_mismatch(outs, x)),
    );
    let losses = LossBreakdown { ic, bc, r };
    let expected = pde.terms();
    if losses.terms() != expected {
        return Err(Error::contract(format!(
            "batch is missing points for a declared clause (have {:?}, need {:?})",
            losses.terms(),
            expected
        )));
    }
    Ok(losses)
}

/// Scalar loss, its breakdown, and the gradient over
/// `[network params..., raw uncertainties...]`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub total: f64,
    pub losses: LossBreakdown,
    pub grad: Vec<f64>,
}

pub struct Objective<'a> {
    pub problem: &'a ProblemSpec,
    pub net: &'a NetworkDef,
    pub batch: &'a PointBatch,
    pub weights: &'a WeightState,
    anchors: Vec<f64>,
}

impl<'a> Objective<'a> {
    pub fn new(
        problem: &'a ProblemSpec,
        net: &'a NetworkDef,
        batch: &'a PointBatch,
        weights: &'a WeightState,
    ) -> Result<Self> {
        if net.input_dim != problem.pde.input_dim() || net.output_dim != problem.pde.output_dim() {
            return Err(Error::contract(format!(
                "network maps {}->{} but {} needs {}->{}",
                net.input_dim,
                net.output_dim,
                problem.pde.id().name(),
                problem.pde.input_dim(),
                problem.pde.output_dim()
            )));
        }
        if weights.terms != problem.pde.terms() {
            return Err(Error::contract(
                "weighting terms do not match the problem's loss terms",
            ));
        }
        let anchors = problem
            .pde
            .anchors()
            .iter()
            .flat_map(|(p, _, _)| *p)
            .collect();
        Ok(Self {
            problem,
            net,
            batch,
            weights,
            anchors,
        })
    }

    pub fn n_network(&self) -> usize {
        self.net.param_count()
    }

    /// Length of the full trainable vector.
    pub fn n_params(&self) -> usize {
        self.n_network() + self.n_raw()
    }

    fn n_raw(&self) -> usize {
        if self.weights.is_adaptive() {
            self.weights.terms.len()
        } else {
            0
        }
    }

    fn groups(&self) -> Vec<(Group, &[f64], JetRequest)> {
        let pairs = self.problem.pde.pairs();
        vec![
            (
                Group::Interior,
                &self.batch.interior[..],
                JetRequest::second_order(&pairs),
            ),
            (
                Group::Boundary,
                &self.batch.boundary[..],
                JetRequest::value_only(),
            ),
            (
                Group::Initial,
                &self.batch.initial[..],
                JetRequest::first_order(),
            ),
            (Group::Anchor, &self.anchors[..], JetRequest::value_only()),
        ]
    }

    fn split<'p>(&self, params: &'p [f64]) -> Result<(&'p [f64], &'p [f64])> {
        if params.len() != self.n_params() {
            return Err(Error::contract(format!(
                "expected {} trainable values, got {}",
                self.n_params(),
                params.len()
            )));
        }
        Ok(params.split_at(self.n_network()))
    }

    /// Loss and gradient through the batched jet kernel.
    pub fn evaluate(&self, params: &[f64]) -> Result<Evaluation> {
        self.run(params, true)
    }

    /// Loss without the reverse pass.
    pub fn loss(&self, params: &[f64]) -> Result<(f64, LossBreakdown)> {
        let e = self.run(params, false)?;
        Ok((e.total, e.losses))
    }

    fn run(&self, params: &[f64], with_grad: bool) -> Result<Evaluation> {
        let (net_params, raw) = self.split(params)?;
        let mut evaluated = Vec::new();
        for (group, points, request) in self.groups() {
            if points.is_empty() {
                continue;
            }
            let (jets, trace) = batch::forward(self.net, net_params, points, &request)?;
            evaluated.push((group, jets, trace));
        }

        let tape = Tape::new();
        let raw_vars = tape.params(raw);
        let zero = tape.constant(0.0);
        let leaves: Vec<Vec<Var<'_>>> = evaluated
            .iter()
            .map(|(_, jets, _)| jets.out.iter().map(|&v| tape.input(v)).collect())
            .collect();
        let mut grouped = GroupJets {
            interior: Vec::new(),
            boundary: Vec::new(),
            initial: Vec::new(),
            anchor: Vec::new(),
        };
        for ((group, jets, _), leaves) in evaluated.iter().zip(&leaves) {
            let per_point: Vec<Vec<Jet2<Var<'_>>>> = (0..jets.n)
                .map(|p| {
                    (0..self.net.output_dim)
                        .map(|o| leaf_jet(jets, leaves, o, p, zero))
                        .collect()
                })
                .collect();
            match group {
                Group::Interior => grouped.interior = per_point,
                Group::Boundary => grouped.boundary = per_point,
                Group::Initial => grouped.initial = per_point,
                Group::Anchor => grouped.anchor = per_point,
            }
        }
        let losses = assemble(&self.problem.pde, self.batch, &grouped)?;
        let total = self.weights.total_loss(&losses, &raw_vars)?;
        if !total.value().is_finite() {
            return Err(Error::numeric(
                "loss",
                format!("total loss {}", total.value()),
            ));
        }
        let mut grad = Vec::new();
        if with_grad {
            let adj = tape.backward(total)?;
            grad = vec![0.0; self.n_params()];
            grad[self.n_network()..].copy_from_slice(adj.params());
            for ((_, jets, trace), leaves) in evaluated.iter().zip(&leaves) {
                let out_adj = Array2::from_shape_vec(
                    jets.out.raw_dim(),
                    leaves.iter().map(|&v| adj.of(v)).collect(),
                )
                .expect("leaf count matches output shape");
                batch::backward(self.net, net_params, trace, &out_adj, &mut grad)?;
            }
            if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
                return Err(Error::numeric(
                    "network",
                    format!("gradient slot {i} is {}", grad[i]),
                ));
            }
        }
        Ok(Evaluation {
            total: total.value(),
            losses: losses.values(),
            grad,
        })
    }

    /// Same objective with every network parameter recorded on a scalar tape
    /// and jets propagated point by point. Slow; used as a cross-check of
    /// the batched route.
    pub fn evaluate_on_tape(&self, params: &[f64]) -> Result<Evaluation> {
        let (net_params, raw) = self.split(params)?;
        let tape = Tape::new();
        let net_vars = tape.params(net_params);
        let raw_vars = tape.params(raw);
        let mut grouped = GroupJets {
            interior: Vec::new(),
            boundary: Vec::new(),
            initial: Vec::new(),
            anchor: Vec::new(),
        };
        let pairs = self.problem.pde.pairs();
        for (group, points, request) in self.groups() {
            let req_pairs = if request.pairs.is_empty() {
                &[][..]
            } else {
                &pairs[..]
            };
            let per_point = points
                .chunks(2)
                .map(|x| forward_jet(self.net, &net_vars, x, req_pairs))
                .collect::<Result<Vec<_>>>()?;
            match group {
                Group::Interior => grouped.interior = per_point,
                Group::Boundary => grouped.boundary = per_point,
                Group::Initial => grouped.initial = per_point,
                Group::Anchor => grouped.anchor = per_point,
            }
        }
        let losses = assemble(&self.problem.pde, self.batch, &grouped)?;
        let total = self.weights.total_loss(&losses, &raw_vars)?;
        let grad = tape.grad_params(total)?;
        Ok(Evaluation {
            total: total.value(),
            losses: losses.values(),
            grad,
        })
    }
}

fn leaf_jet<'t>(
    jets: &BatchJets,
    leaves: &[Var<'t>],
    o: usize,
    p: usize,
    zero: Var<'t>,
) -> Jet2<Var<'t>> {
    let width = jets.out.ncols();
    let at = |c: usize| leaves[o * width + jets.column(c, p)];
    let first = jets.request.first;
    let grad = (0..jets.dim)
        .map(|i| if first { at(1 + i) } else { zero })
        .collect();
    let offset = 1 + if first { jets.dim } else { 0 };
    let second = (0..jets.request.pairs.len())
        .map(|k| at(offset + k))
        .collect();
    Jet2 {
        value: at(0),
        grad,
        second,
        pairs: jets.request.pairs.clone(),
    }
}

/// Mean-of-squares losses for the network parameters on a point batch.
pub fn loss_breakdown(
    spec: &ProblemSpec,
    net: &NetworkDef,
    params: &[f64],
    batch: &PointBatch,
) -> Result<LossBreakdown> {
    let pde = &spec.pde;
    let pairs = pde.pairs();
    let anchors: Vec<f64> = pde.anchors().iter().flat_map(|(p, _, _)| *p).collect();
    let eval = |points: &[f64], request: JetRequest| -> Result<Vec<Vec<Jet2>>> {
        if points.is_empty() {
            return Ok(Vec::new());
        }
        let (jets, _) = batch::forward(net, params, points, &request)?;
        Ok((0..jets.n)
            .map(|p| (0..net.output_dim).map(|o| jets.jet(o, p)).collect())
            .collect())
    };
    let grouped = GroupJets {
        interior: eval(&batch.interior, JetRequest::second_order(&pairs))?,
        boundary: eval(&batch.boundary, JetRequest::value_only())?,
        initial: eval(&batch.initial, JetRequest::first_order())?,
        anchor: eval(&anchors, JetRequest::value_only())?,
    };
    assemble(pde, batch, &grouped)
}
