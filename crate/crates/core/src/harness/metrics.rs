use crate::error::{Error, Result};
use crate::network::batch::{self, JetRequest};
use crate::network::NetworkDef;
use crate::problems::Pde;

/// `||pred - truth||_2 / ||truth||_2`.
pub fn relative_l2(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::contract(format!(
            "prediction has {} entries, truth has {}",
            pred.len(),
            truth.len()
        )));
    }
    let norm = truth.iter().map(|t| t * t).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::contract("truth field has zero norm"));
    }
    let diff = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}

/// Network outputs at `points`, one `Vec` per output.
pub fn predict(def: &NetworkDef, params: &[f64], points: &[f64]) -> Result<Vec<Vec<f64>>> {
    let out = batch::values(def, params, points)?;
    Ok(out.outer_iter().map(|row| row.to_vec()).collect())
}

/// Differential operator of a scalar problem applied to the network at
/// `points`, without the forcing. `None` for problems without one.
pub fn operator_field(
    pde: &Pde,
    def: &NetworkDef,
    params: &[f64],
    points: &[f64],
) -> Result<Option<Vec<f64>>> {
    if matches!(pde, Pde::Cavity(_)) {
        return Ok(None);
    }
    let request = JetRequest::second_order(&pde.pairs());
    let mut out = Vec::with_capacity(points.len() / 2);
    for chunk in points.chunks(2 * 1024) {
        let (jets, _) = batch::forward(def, params, chunk, &request)?;
        for p in 0..jets.n {
            out.push(pde.operator_lhs(&jets.jet(0, p)).expect("scalar problem"));
        }
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases() {
        let t = [1.0, -2.0, 3.0];
        assert_eq!(relative_l2(&t, &t).unwrap(), 0.0);
        assert_eq!(relative_l2(&[0.0; 3], &t).unwrap(), 1.0);
        let twice: Vec<f64> = t.iter().map(|x| 2.0 * x).collect();
        assert!((relative_l2(&twice, &t).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn contract_violations() {
        assert!(relative_l2(&[1.0], &[0.0]).is_err());
        assert!(relative_l2(&[1.0, 2.0], &[1.0]).is_err());
    }
}
