//! Seeded generators for bistochastic and sub-bistochastic channels.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{c, CMatrix, CpMap};

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn permutation_matrix(perm: &[usize]) -> CMatrix {
    let mut p = CMatrix::zeros(perm.len(), perm.len());
    for (from, &to) in perm.iter().enumerate() {
        p[(to, from)] = c(1.0, 0.0);
    }
    p
}

/// Orthogonal measurement: projectors onto random groups of the columns of a
/// Haar unitary.
pub fn random_measurement<R: Rng>(dim: usize, rng: &mut R) -> CpMap {
    let u = haar_unitary(dim, rng);
    let blocks = rng.random_range(1..=dim.max(1));
    let mut labels: Vec<usize> = (0..dim).map(|i| i % blocks).collect();
    labels.shuffle(rng);
    let kraus = (0..blocks)
        .map(|b| {
            let mut p = CMatrix::zeros(dim, dim);
            for (j, _) in labels.iter().enumerate().filter(|(_, &l)| l == b) {
                let col = u.column(j);
                p += col * col.adjoint();
            }
            p
        })
        .collect();
    CpMap::new(kraus).expect("nonempty family")
}

/// `{sqrt(w_k) P_k}` for random permutations and random convex weights.
pub fn random_permutation_mixture<R: Rng>(dim: usize, terms: usize, rng: &mut R) -> CpMap {
    let raw: Vec<f64> = (0..terms.max(1)).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let kraus = raw
        .iter()
        .map(|w| {
            let mut perm: Vec<usize> = (0..dim).collect();
            perm.shuffle(rng);
            permutation_matrix(&perm) * c((w / total).sqrt(), 0.0)
        })
        .collect();
    CpMap::new(kraus).expect("nonempty family")
}

/// One of: a unitary channel, a measurement, a permutation mixture, or a
/// composition of a unitary, a measurement and a mixture.
pub fn random_bistochastic<R: Rng>(dim: usize, rng: &mut R) -> CpMap {
    match rng.random_range(0..4) {
        0 => CpMap::unitary(haar_unitary(dim, rng)).expect("square"),
        1 => random_measurement(dim, rng),
        2 => random_permutation_mixture(dim, rng.random_range(1..=3), rng),
        _ => {
            let u = CpMap::unitary(haar_unitary(dim, rng)).expect("square");
            let m = random_measurement(dim, rng);
            let p = random_permutation_mixture(dim, 2, rng);
            u.compose(&m).and_then(|x| x.compose(&p)).expect("matching dims")
        }
    }
}

/// A bistochastic map scaled by `t` in `(0, 1]` (`t = 1` with probability 1/2).
pub fn random_sub_bistochastic<R: Rng>(dim: usize, rng: &mut R) -> CpMap {
    let map = random_bistochastic(dim, rng);
    if rng.random_bool(0.5) {
        map
    } else {
        let t: f64 = rng.random_range(0.05..1.0);
        map.scaled(t.sqrt())
    }
}

/// Superoperator of `Phi^omega` for a random bistochastic channel.
pub fn random_idempotent<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let map = random_bistochastic(dim, rng);
    super::omega_limit(&map, &super::OmegaOptions::default())
        .expect("bistochastic input")
        .superoperator
}
