//! Dense contraction of a small finite PEPS into a state vector.

use crate::error::{Error, Result};
use crate::peps::{Direction, PepsTensor};
use crate::tensor::{contract, Tensor};

const STATE_LIMIT: u128 = 1 << 24;

/// State vector of an `n x n` PEPS, sites row-major, each site contributing a
/// `(spin, ancilla)` digit with the spin as the high bit.
///
/// Fails with [`Error::SizeLimit`] if the vector or any intermediate exceeds
/// `2^24` entries.
pub fn exact_contract(n: usize, sites: &[PepsTensor]) -> Result<Vec<f64>> {
    if sites.len() != n * n || n == 0 {
        return Err(Error::dim(format_args!(
            "{} site tensors for a {n}x{n} lattice",
            sites.len()
        )));
    }
    // axis 0 is the fused physical index so far, then one axis per open leg
    let mut state = Tensor::from_vec(&[1], vec![1.0])?;
    let mut open: Vec<(usize, Direction)> = Vec::new();
    for s in 0..n * n {
        let (r, c) = (s / n, s % n);
        let t = sites[s].tensor();
        let p = t.dim(0) * t.dim(1);
        let site = t.clone().reshape(&[p, t.dim(2), t.dim(3), t.dim(4), t.dim(5)])?;

        let mut pairs = Vec::new();
        if r > 0 {
            let k = open
                .iter()
                .position(|&x| x == (s - n, Direction::Down))
                .expect("frontier");
            pairs.push((1 + k, 1 + Direction::Up.index()));
        }
        if c > 0 {
            let k = open
                .iter()
                .position(|&x| x == (s - 1, Direction::Right))
                .expect("frontier");
            pairs.push((1 + k, 1 + Direction::Left.index()));
        }
        let keep_old: Vec<usize> = (0..open.len())
            .filter(|k| !pairs.iter().any(|p| p.0 == 1 + k))
            .collect();
        let new_legs: Vec<Direction> = Direction::ALL
            .into_iter()
            .filter(|d| !pairs.iter().any(|p| p.1 == 1 + d.index()))
            .collect();

        let requested: u128 = state.dims()[0] as u128
            * p as u128
            * keep_old.iter().map(|&k| state.dim(1 + k) as u128).product::<u128>()
            * new_legs
                .iter()
                .map(|d| site.dim(1 + d.index()) as u128)
                .product::<u128>();
        if requested > STATE_LIMIT {
            return Err(Error::SizeLimit {
                what: "exact PEPS contraction",
                requested,
                limit: STATE_LIMIT,
            });
        }

        // [P, kept old legs.., p, new legs..]
        let next = contract(&state, &site, &pairs)?;
        let k = keep_old.len();
        let mut perm = vec![0, 1 + k];
        perm.extend(1..1 + k);
        perm.extend(2 + k..2 + k + new_legs.len());
        let next = next.permute(&perm)?;
        let mut dims = vec![next.dim(0) * next.dim(1)];
        dims.extend_from_slice(&next.dims()[2..]);
        state = next.reshape(&dims)?;

        open = keep_old
            .iter()
            .map(|&k| open[k])
            .chain(new_legs.into_iter().map(|d| (s, d)))
            .collect();
    }
    if let Some(k) = (0..open.len()).find(|&k| state.dim(1 + k) != 1) {
        return Err(Error::dim(format_args!(
            "boundary leg {:?} has extent {}",
            open[k],
            state.dim(1 + k)
        )));
    }
    Ok(state.into_data())
}

/// `<phi|psi>` of two state vectors.
pub fn overlap(phi: &[f64], psi: &[f64]) -> f64 {
    phi.iter().zip(psi).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{dot, purified_initial, Geometry};
    use crate::peps::initial_tensor;

    #[test]
    fn single_site_is_the_tensor() {
        let t = Tensor::from_fn(&[2, 2, 1, 1, 1, 1], |ix| (1 + ix[0] * 2 + ix[1]) as f64);
        let v = exact_contract(1, &[PepsTensor::new(t.clone()).unwrap()]).unwrap();
        assert_eq!(v, t.into_data());
    }

    #[test]
    fn initial_state_matches_oracle() {
        for n in [2, 3] {
            let v = exact_contract(n, &vec![initial_tensor(); n * n]).unwrap();
            let o = purified_initial(Geometry::square(n)).unwrap();
            assert_eq!(v, o);
            assert_eq!(dot(&v, &v), (1u64 << (n * n)) as f64);
        }
    }

    #[test]
    fn size_limit_is_enforced() {
        let err = exact_contract(4, &vec![initial_tensor(); 16]).unwrap_err();
        assert!(matches!(err, Error::SizeLimit { .. }));
    }
}
