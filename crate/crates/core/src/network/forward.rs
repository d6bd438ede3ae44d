use super::{Affine, ArchKind, NetworkDef};
use crate::autodiff::{validate_pairs, Jet2, Scalar};
use crate::error::{Error, Result};

fn check_dims(def: &NetworkDef, params_len: usize, x: &[f64]) -> Result<()> {
    if x.len() != def.input_dim {
        return Err(Error::contract(format!(
            "input has {} coordinates, network expects {}",
            x.len(),
            def.input_dim
        )));
    }
    if params_len != def.param_count() {
        return Err(Error::contract(format!(
            "parameter vector has {params_len} slots, network expects {}",
            def.param_count()
        )));
    }
    Ok(())
}

fn affine_f64(a: &Affine, p: &[f64], input: &[f64]) -> Vec<f64> {
    let w = a.weight(p);
    let b = a.bias(p);
    (0..a.rows)
        .map(|r| {
            let mut acc = b[r];
            for (c, &x) in input.iter().enumerate() {
                acc = acc + w[r * a.cols + c] * x;
            }
            acc
        })
        .collect()
}

/// Standard MLP: tanh hidden layers, affine output.
pub fn forward_plain(def: &NetworkDef, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if def.kind != ArchKind::Plain {
        return Err(Error::contract(
            "forward_plain called on an improved network",
        ));
    }
    forward(def, params, x)
}

/// Encoder-mixing MLP: every hidden activation `h` is replaced by
/// `(1 - h) * U + h * V` with `U`, `V` tanh encodings of the input.
pub fn forward_improved(def: &NetworkDef, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if def.kind != ArchKind::Improved {
        return Err(Error::contract(
            "forward_improved called on a plain network",
        ));
    }
    forward(def, params, x)
}

/// Plain `f64` evaluation for either architecture.
pub fn forward(def: &NetworkDef, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_dims(def, params.len(), x)?;
    let off = def.offsets();
    let encoders = off.encoders.map(|(u, v)| {
        let u: Vec<f64> = affine_f64(&u, params, x)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let v: Vec<f64> = affine_f64(&v, params, x)
            .into_iter()
            .map(f64::tanh)
            .collect();
        (u, v)
    });
    let mut a = x.to_vec();
    for layer in &off.hidden {
        let mut h: Vec<f64> = affine_f64(layer, params, &a)
            .into_iter()
            .map(f64::tanh)
            .collect();
        if let Some((u, v)) = &encoders {
            for ((h, &u), &v) in h.iter_mut().zip(u).zip(v) {
                *h = (1.0 - *h) * u + *h * v;
            }
        }
        a = h;
    }
    Ok(affine_f64(&off.output, params, &a))
}

fn affine_jet<S: Scalar>(a: &Affine, p: &[S], input: &[Jet2<S>]) -> Vec<Jet2<S>> {
    let w = a.weight(p);
    let b = a.bias(p);
    let (dim, pairs) = (input[0].dim(), input[0].pairs.clone());
    (0..a.rows)
        .map(|r| {
            let mut acc = Jet2::constant(b[r], dim, &pairs);
            for (c, x) in input.iter().enumerate() {
                acc = acc.add(&x.scale(w[r * a.cols + c]));
            }
            acc
        })
        .collect()
}

/// Point evaluation carrying second-order jets in the inputs, generic over
/// the scalar type. With `S = Var` every jet component is a tape node.
pub fn forward_jet<S: Scalar>(
    def: &NetworkDef,
    params: &[S],
    x: &[f64],
    pairs: &[(usize, usize)],
) -> Result<Vec<Jet2<S>>> {
    check_dims(def, params.len(), x)?;
    validate_pairs(pairs, def.input_dim)?;
    let anchor = params[0];
    let dim = def.input_dim;
    let input: Vec<Jet2<S>> = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| Jet2::variable(anchor.lift(xi), i, dim, pairs))
        .collect();
    let off = def.offsets();
    let encoders = off.encoders.map(|(u, v)| {
        let u: Vec<_> = affine_jet(&u, params, &input)
            .iter()
            .map(Jet2::tanh)
            .collect();
        let v: Vec<_> = affine_jet(&v, params, &input)
            .iter()
            .map(Jet2::tanh)
            .collect();
        (u, v)
    });
    let one = anchor.lift(1.0);
    let minus_one = anchor.lift(-1.0);
    let mut a = input;
    for layer in &off.hidden {
        let mut h: Vec<_> = affine_jet(layer, params, &a)
            .iter()
            .map(Jet2::tanh)
            .collect();
        if let Some((u, v)) = &encoders {
            for ((h, u), v) in h.iter_mut().zip(u).zip(v) {
                let keep = h.scale(minus_one).add_scalar(one);
                *h = keep.mul(u).add(&h.mul(v));
            }
        }
        a = h;
    }
    Ok(affine_jet(&off.output, params, &a))
}

/// Value, input gradient and requested second derivatives of every network
/// output at `x`.
pub fn eval_jet2(
    def: &NetworkDef,
    params: &[f64],
    x: &[f64],
    pairs: &[(usize, usize)],
) -> Result<Vec<Jet2>> {
    forward_jet(def, params, x, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::init_params;

    fn single_neuron(kind: ArchKind) -> NetworkDef {
        NetworkDef::new(kind, 1, 1, 1, 1).unwrap()
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        for kind in [ArchKind::Plain, ArchKind::Improved] {
            let def = NetworkDef::new(kind, 2, 3, 4, 7).unwrap();
            let p = vec![0.0; def.param_count()];
            for x in [[0.3, -0.8], [5.0, 2.0]] {
                assert_eq!(forward(&def, &p, &x).unwrap(), vec![0.0; 3]);
            }
        }
    }

    #[test]
    fn single_unit_tanh() {
        let def = single_neuron(ArchKind::Plain);
        // hidden w, b, output w, b
        let p = [1.0, 0.0, 1.0, 0.0];
        assert_eq!(forward_plain(&def, &p, &[0.0]).unwrap(), vec![0.0]);
        let jet = &eval_jet2(&def, &p, &[0.0], &[(0, 0)]).unwrap()[0];
        assert_eq!((jet.value, jet.grad[0], jet.second[0]), (0.0, 1.0, 0.0));
    }

    #[test]
    fn kind_mismatch_rejected() {
        let def = single_neuron(ArchKind::Plain);
        assert!(forward_improved(&def, &[0.0; 4], &[0.0]).is_err());
        assert!(forward_plain(&def, &[0.0; 4], &[0.0, 1.0]).is_err());
        assert!(eval_jet2(&def, &[0.0; 4], &[0.0], &[(0, 1)]).is_err());
    }

    #[test]
    fn identical_encoders_pin_hidden_state() {
        let def = NetworkDef::new(ArchKind::Improved, 2, 1, 3, 5).unwrap();
        let mut p = init_params(&def, 11);
        let u_w = p.block("encoder_u.weight").unwrap().to_vec();
        p.block_mut("encoder_v.weight")
            .unwrap()
            .copy_from_slice(&u_w);
        let base = forward(&def, &p.values, &[0.2, -0.4]).unwrap();
        // scrambling hidden layers must not change the output
        let mut q = p.clone();
        for l in 0..3 {
            for v in q.block_mut(&format!("hidden.{l}.weight")).unwrap() {
                *v = -3.0 * *v + 0.5;
            }
            for v in q.block_mut(&format!("hidden.{l}.bias")).unwrap() {
                *v += 1.7;
            }
        }
        let out = forward(&def, &q.values, &[0.2, -0.4]).unwrap();
        assert!((out[0] - base[0]).abs() < 1e-14);
    }

    #[test]
    fn jet_value_matches_forward_bitwise() {
        for kind in [ArchKind::Plain, ArchKind::Improved] {
            let def = NetworkDef::new(kind, 2, 2, 3, 6).unwrap();
            let p = init_params(&def, 5);
            let x = [0.37, -0.91];
            let y = forward(&def, &p.values, &x).unwrap();
            let jets = eval_jet2(&def, &p.values, &x, &[(0, 0), (1, 1)]).unwrap();
            for (j, v) in jets.iter().zip(&y) {
                assert_eq!(j.value.to_bits(), v.to_bits());
            }
        }
    }
}
