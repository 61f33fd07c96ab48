//! Seeded random instances.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::HermitianMatrix;

/// Largest supported instance dimension.
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    /// `GG†/dim + 10⁻³·I`.
    Pd,
    /// `GG†/dim` with square `G`.
    PsdFullRank,
    /// `G_k G_k†/dim` with `G_k` of width `k`.
    PsdRankDeficient(usize),
    /// `(G + G†)/(2√dim)`.
    Hermitian,
    /// Hermitian with the trace removed.
    TracelessHermitian,
}

/// What to draw: every output is multiplied by `scale`, and `G` is a matrix of
/// i.i.d. standard complex Gaussians (`E|g|² = 1`) drawn from `seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub dim: usize,
    pub kind: InstanceKind,
    pub scale: f64,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn new(dim: usize, kind: InstanceKind, scale: f64, seed: u64) -> Self {
        Self { dim, kind, scale, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_DIM).contains(&self.dim) {
            return Err(Error::input(format!("instance dimension {} outside 1..={MAX_DIM}", self.dim)));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::input(format!("instance scale {} must be positive", self.scale)));
        }
        if let InstanceKind::PsdRankDeficient(k) = self.kind {
            if k > self.dim {
                return Err(Error::input(format!("rank {k} exceeds dimension {}", self.dim)));
            }
        }
        Ok(())
    }
}

fn complex_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Draws the matrix described by `spec`; identical specs give identical matrices.
pub fn gen_instance(spec: &InstanceSpec) -> Result<HermitianMatrix> {
    spec.validate()?;
    let n = spec.dim;
    let nf = n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gram = |g: &DMatrix<Complex64>| HermitianMatrix::symmetrized(g * g.adjoint()).scale(spec.scale / nf);
    let m = match spec.kind {
        InstanceKind::Pd => {
            let g = complex_gaussian(&mut rng, n, n);
            gram(&g).add_scaled(&HermitianMatrix::identity(n), 1e-3 * spec.scale)
        }
        InstanceKind::PsdFullRank => gram(&complex_gaussian(&mut rng, n, n)),
        InstanceKind::PsdRankDeficient(0) => HermitianMatrix::zeros(n),
        InstanceKind::PsdRankDeficient(k) => gram(&complex_gaussian(&mut rng, n, k)),
        InstanceKind::Hermitian | InstanceKind::TracelessHermitian => {
            let g = complex_gaussian(&mut rng, n, n);
            let h = HermitianMatrix::symmetrized(&g + g.adjoint()).scale(spec.scale / (2.0 * nf.sqrt()));
            if spec.kind == InstanceKind::TracelessHermitian {
                let shift = -h.trace() / nf;
                h.add_scaled(&HermitianMatrix::identity(n), shift)
            } else {
                h
            }
        }
    };
    Ok(m)
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Bits of a trial seed that carry the instance dimension.
const DIM_BITS: u32 = 5;

/// Per-trial seed: a hash of `(master, check, index)` whose low five bits are
/// replaced by `dim`, so a recorded seed alone reproduces the trial.
pub fn trial_seed(master: u64, check: &str, index: u64, dim: usize) -> u64 {
    debug_assert!(dim <= MAX_DIM);
    let h = splitmix(splitmix(master ^ fnv1a(check.as_bytes())) ^ index);
    (h & !((1 << DIM_BITS) - 1)) | dim as u64
}

/// Dimension encoded in a trial seed.
pub fn seed_dim(seed: u64) -> usize {
    (seed & ((1 << DIM_BITS) - 1)) as usize
}

/// Randomness for one trial: sub-seeds for instances and scalar draws.
pub(crate) struct TrialRng {
    rng: ChaCha8Rng,
    pub dim: usize,
    pub seed: u64,
}

impl TrialRng {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            dim: seed_dim(seed),
            seed,
        }
    }

    pub fn matrix(&mut self, kind: InstanceKind, scale: f64) -> Result<HermitianMatrix> {
        let spec = InstanceSpec::new(self.dim, kind, scale, self.rng.random());
        gen_instance(&spec)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    pub fn sign(&mut self) -> f64 {
        if self.rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    /// Rank in `1..=dim` derived from the seed, so every rank is exercised.
    pub fn rank(&self) -> usize {
        1 + ((self.seed >> DIM_BITS) % self.dim as u64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eig_hermitian;

    #[test]
    fn deterministic_in_seed() {
        let spec = InstanceSpec::new(3, InstanceKind::Pd, 1.0, 1234);
        assert_eq!(gen_instance(&spec).unwrap(), gen_instance(&spec).unwrap());
        let other = InstanceSpec { seed: 1235, ..spec };
        assert_ne!(gen_instance(&spec).unwrap(), gen_instance(&other).unwrap());
    }

    #[test]
    fn rank_deficient_has_null_space() {
        for seed in 0..20 {
            let m = gen_instance(&InstanceSpec::new(3, InstanceKind::PsdRankDeficient(1), 1.0, seed)).unwrap();
            let eig = eig_hermitian(&m).unwrap();
            let thr = eig.zero_threshold();
            let small = eig.eigenvalues.iter().filter(|l| l.abs() <= thr).count();
            assert_eq!(small, 2, "seed {seed}: {:?}", eig.eigenvalues);
        }
    }

    #[test]
    fn kinds_have_expected_structure() {
        for seed in 0..10 {
            let h = gen_instance(&InstanceSpec::new(4, InstanceKind::Hermitian, 2.0, seed)).unwrap();
            assert_eq!(h.as_matrix().adjoint(), *h.as_matrix());
            let t = gen_instance(&InstanceSpec::new(4, InstanceKind::TracelessHermitian, 2.0, seed)).unwrap();
            assert!(t.trace().abs() < 1e-14);
            let p = gen_instance(&InstanceSpec::new(4, InstanceKind::Pd, 2.0, seed)).unwrap();
            assert!(eig_hermitian(&p).unwrap().min_eigenvalue() >= 2e-3 * (1.0 - 1e-12));
            let f = gen_instance(&InstanceSpec::new(4, InstanceKind::PsdFullRank, 2.0, seed)).unwrap();
            assert!(eig_hermitian(&f).unwrap().min_eigenvalue() > 0.0);
        }
        let z = gen_instance(&InstanceSpec::new(2, InstanceKind::PsdRankDeficient(0), 1.0, 0)).unwrap();
        assert_eq!(z, HermitianMatrix::zeros(2));
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(gen_instance(&InstanceSpec::new(0, InstanceKind::Pd, 1.0, 0)).is_err());
        assert!(gen_instance(&InstanceSpec::new(17, InstanceKind::Pd, 1.0, 0)).is_err());
        assert!(gen_instance(&InstanceSpec::new(2, InstanceKind::Pd, 0.0, 0)).is_err());
        assert!(gen_instance(&InstanceSpec::new(2, InstanceKind::PsdRankDeficient(3), 1.0, 0)).is_err());
    }

    #[test]
    fn trial_seeds_encode_dim_and_differ() {
        let a = trial_seed(42, "lipschitz", 0, 3);
        let b = trial_seed(42, "lipschitz", 1, 3);
        let c = trial_seed(42, "self_adjointness", 0, 3);
        assert_eq!(seed_dim(a), 3);
        assert_eq!(seed_dim(trial_seed(7, "x", 9, 16)), 16);
        assert!(a != b && a != c && b != c);
        assert_eq!(a, trial_seed(42, "lipschitz", 0, 3));
    }
}
