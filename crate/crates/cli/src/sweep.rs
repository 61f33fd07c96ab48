//! γ-grids of the hockey-stick divergence, the Frenkel integrand and the
//! rank of `{A > γB}`.

use clap::ValueEnum;
use opcake_core::divergences::hockey_stick_unchecked;
use opcake_core::spectral::{check_psd, projection_gt};
use opcake_core::{HermitianMatrix, PositiveDefinite};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    /// `E_γ(A‖B)`.
    HockeyStick,
    /// `E_γ(A‖B)/γ + E_γ(B‖A)/γ²`.
    FrenkelIntegrand,
    /// Rank of the projection `{A > γB}`.
    ProjectionRank,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub value: f64,
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(CliError::Usage(format!("need finite gamma-min < gamma-max, got [{lo}, {hi}]")));
    }
    if points < 2 {
        return Err(CliError::Usage(format!("need at least 2 points, got {points}")));
    }
    let last = (points - 1) as f64;
    let g: Vec<f64> = (0..points)
        .map(|i| if i + 1 == points { hi } else { lo + (hi - lo) * (i as f64 / last) })
        .collect();
    if g.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage(format!("[{lo}, {hi}] is too narrow for {points} distinct points")));
    }
    Ok(g)
}

/// Evaluates `quantity` on `points` equally spaced values of γ in `[lo, hi]`.
pub fn sweep_rows(
    a: &HermitianMatrix,
    b: &PositiveDefinite,
    quantity: Quantity,
    lo: f64,
    hi: f64,
    points: usize,
) -> Result<Vec<SweepRow>, CliError> {
    if a.dim() != b.dim() {
        return Err(CliError::Usage(format!("dimension mismatch: A is {}, B is {}", a.dim(), b.dim())));
    }
    let gammas = grid(lo, hi, points)?;
    match quantity {
        Quantity::HockeyStick if lo < 0.0 => {
            return Err(CliError::Usage(format!("hockey-stick needs gamma >= 0, got {lo}")));
        }
        Quantity::FrenkelIntegrand if lo <= 0.0 => {
            return Err(CliError::Usage(format!("frenkel-integrand needs gamma > 0, got {lo}")));
        }
        _ => {}
    }
    if quantity != Quantity::ProjectionRank {
        check_psd(a, "A")?;
    }
    let bm = b.matrix();
    gammas
        .into_iter()
        .map(|gamma| {
            let value = match quantity {
                Quantity::HockeyStick => hockey_stick_unchecked(a, bm, gamma)?,
                Quantity::FrenkelIntegrand => {
                    hockey_stick_unchecked(a, bm, gamma)? / gamma + hockey_stick_unchecked(bm, a, gamma)? / (gamma * gamma)
                }
                Quantity::ProjectionRank => projection_gt(a, b, gamma)?.rank() as f64,
            };
            Ok(SweepRow { gamma, value })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_and_validation() {
        assert_eq!(grid(0.0, 1.0, 2).unwrap(), vec![0.0, 1.0]);
        let g = grid(0.0, 3.0, 7).unwrap();
        assert_eq!((g[0], g[6], g.len()), (0.0, 3.0, 7));
        assert!(grid(1.0, 1.0, 3).is_err());
        assert!(grid(2.0, 1.0, 3).is_err());
        assert!(grid(0.0, 1.0, 1).is_err());
        assert!(grid(0.0, f64::NAN, 3).is_err());
        assert!(grid(1.0, 1.0 + 1e-16 * 4.0, 100).is_err());
    }

    #[test]
    fn diagonal_rank_steps() {
        let a = HermitianMatrix::from_diagonal(&[2.0, 2.0]);
        let b = PositiveDefinite::new(HermitianMatrix::from_diagonal(&[1.0, 2.0])).unwrap();
        let rows = sweep_rows(&a, &b, Quantity::ProjectionRank, 0.0, 3.0, 7).unwrap();
        let ranks: Vec<f64> = rows.iter().map(|r| r.value).collect();
        // γ = 0, 0.5, 1, 1.5, 2, 2.5, 3; the projection is strict.
        assert_eq!(ranks, vec![2.0, 2.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn hockey_stick_of_equal_arguments() {
        let b = PositiveDefinite::new(HermitianMatrix::from_real(2, &[2.0, 0.5, 0.5, 1.0]).unwrap()).unwrap();
        let rows = sweep_rows(b.matrix(), &b, Quantity::HockeyStick, 0.0, 2.0, 9).unwrap();
        for r in rows {
            let expected = (1.0 - r.gamma).max(0.0) * 3.0;
            assert!((r.value - expected).abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn rejects_gamma_out_of_domain() {
        let b = PositiveDefinite::new(HermitianMatrix::identity(2)).unwrap();
        assert!(sweep_rows(b.matrix(), &b, Quantity::HockeyStick, -1.0, 1.0, 3).is_err());
        assert!(sweep_rows(b.matrix(), &b, Quantity::FrenkelIntegrand, 0.0, 1.0, 3).is_err());
        assert!(sweep_rows(&HermitianMatrix::identity(3), &b, Quantity::HockeyStick, 0.0, 1.0, 3).is_err());
    }
}
