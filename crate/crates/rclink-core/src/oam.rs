//! Transmit-side mode mixing.
//!
//! A mode-multiplexing surface inserted between the data streams and the
//! transmit aperture acts, per frequency, as a matrix `M(f)` on the transmit
//! vector; an ideal surface is unitary, a real one adds a scalar insertion
//! loss and mild frequency dependence. Because `M(f)` is unitary, the
//! per-frequency Gram matrix `E{H M (H M)†} = E{H H†}` is unchanged, which is
//! what makes the mixed and unmixed links statistically equivalent.

use crate::channel::{ChannelSet, FrequencyGrid};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::rng::{self, domain};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Spectral-angle budget of the frequency-dependent mixing family, in
/// radians: the generator's eigenvalues stay within +-0.3 of zero, a mild
/// ripple consistent with an imperfect but functional surface.
const FREQUENCY_RIPPLE_RAD: f64 = 0.3;

/// Which modes a mixing surface multiplexes, and how lossy it is.
#[derive(Debug, Clone, PartialEq)]
pub struct OamModeSpec {
    modes: Vec<i32>,
    insertion_loss_db: f64,
    frequency_dependent: bool,
}

impl OamModeSpec {
    /// `modes` are distinct topological charges, one per transmit stream
    /// (they are carried as labels only; the mixing matrix does not depend
    /// on their values).
    pub fn new(modes: Vec<i32>, insertion_loss_db: f64, frequency_dependent: bool) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidParameter("mode list must not be empty".into()));
        }
        for (i, a) in modes.iter().enumerate() {
            if modes[i + 1..].contains(a) {
                return Err(Error::InvalidParameter(format!(
                    "mode charges must be distinct, {a} repeats"
                )));
            }
        }
        if !(insertion_loss_db >= 0.0 && insertion_loss_db.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "insertion loss must be a finite non-negative dB value, got {insertion_loss_db}"
            )));
        }
        Ok(OamModeSpec {
            modes,
            insertion_loss_db,
            frequency_dependent,
        })
    }

    pub fn modes(&self) -> &[i32] {
        &self.modes
    }

    pub fn insertion_loss_db(&self) -> f64 {
        self.insertion_loss_db
    }

    pub fn frequency_dependent(&self) -> bool {
        self.frequency_dependent
    }

    /// Number of multiplexed streams = matrix dimension.
    pub fn dim(&self) -> usize {
        self.modes.len()
    }
}

/// Per-frequency transmit mixing: `loss_scalar * M(f)` with `M(f)` unitary.
///
/// A frequency-flat surface stores a single matrix; a frequency-dependent
/// one stores one matrix per grid point together with the grid it was built
/// for. The insertion loss is kept as a separate real amplitude so it can be
/// calibrated out exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    modes: Vec<i32>,
    grid: Option<FrequencyGrid>,
    matrices: Vec<CMat>,
    loss_scalar: f64,
}

impl MixingMatrix {
    pub fn dim(&self) -> usize {
        self.matrices[0].rows()
    }

    pub fn modes(&self) -> &[i32] {
        &self.modes
    }

    pub fn loss_scalar(&self) -> f64 {
        self.loss_scalar
    }

    pub fn is_frequency_dependent(&self) -> bool {
        self.grid.is_some()
    }

    pub fn grid(&self) -> Option<&FrequencyGrid> {
        self.grid.as_ref()
    }

    /// The unitary part at grid index `freq` (index ignored when flat).
    pub fn unitary_at(&self, freq: usize) -> &CMat {
        if self.matrices.len() == 1 {
            &self.matrices[0]
        } else {
            &self.matrices[freq]
        }
    }

    /// `loss_scalar * M(f)` — what the transmit vector actually passes
    /// through.
    pub fn effective_at(&self, freq: usize) -> CMat {
        self.unitary_at(freq).scale(Complex64::new(self.loss_scalar, 0.0))
    }

    /// Copy with the insertion loss divided back out (`loss_scalar = 1`
    /// exactly; the unitary part is untouched).
    pub fn calibrated(&self) -> MixingMatrix {
        let mut out = self.clone();
        out.loss_scalar = 1.0;
        out
    }

    /// Worst `‖M†M − I‖_max` across all stored frequencies.
    pub fn max_unitarity_defect(&self) -> f64 {
        self.matrices
            .iter()
            .map(|m| m.unitarity_defect())
            .fold(0.0, f64::max)
    }
}

/// Draw an `n x n` Haar-distributed unitary: modified Gram-Schmidt QR of an
/// iid complex Gaussian matrix, with the `R` diagonal real and positive.
fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> CMat {
    loop {
        let mut cols: Vec<Vec<Complex64>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(re, im)
                    })
                    .collect()
            })
            .collect();
        let mut ok = true;
        'gs: for j in 0..n {
            for i in 0..j {
                let proj: Complex64 = (0..n).map(|k| cols[i][k].conj() * cols[j][k]).sum();
                for k in 0..n {
                    let c = cols[i][k];
                    cols[j][k] -= proj * c;
                }
            }
            let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-9 {
                // numerically dependent draw (measure zero); redraw the matrix
                ok = false;
                break 'gs;
            }
            let inv = 1.0 / norm;
            for v in &mut cols[j] {
                *v *= inv;
            }
        }
        if !ok {
            continue;
        }
        let mut q = CMat::zeros(n, n);
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                q[(i, j)] = *v;
            }
        }
        return q;
    }
}

/// Draw an `n x n` Hermitian matrix with spectral norm `radius`.
fn random_hermitian_with_radius<R: Rng>(n: usize, radius: f64, rng: &mut R) -> CMat {
    let mut b = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            b[(i, j)] = Complex64::new(re, im);
        }
    }
    let mut a = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = 0.5 * (b[(i, j)] + b[(j, i)].conj());
        }
    }
    let spectral = a
        .hermitian_eigenvalues()
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max);
    if spectral == 0.0 {
        return a;
    }
    a.scale(Complex64::new(radius / spectral, 0.0))
}

/// Build the mixing matrix family for a mode surface.
///
/// The base matrix is a seeded Haar-random unitary. When the spec is
/// frequency-dependent, the family is `M(f) = U_base * exp(j A(t))` with
/// `A(t)` interpolating linearly between two random Hermitian generators of
/// spectral norm [`FREQUENCY_RIPPLE_RAD`] as `t` runs 0..1 across the grid —
/// smoothly varying, unitary at every frequency. The insertion loss becomes
/// `loss_scalar = 10^(-insertion_loss_db / 20)`.
pub fn make_oam_mixing(spec: &OamModeSpec, grid: &FrequencyGrid, seed: u64) -> MixingMatrix {
    let n = spec.dim();
    let mut base_rng = rng::stream_rng(seed, domain::MIXING, 0, 0, 0);
    let base = haar_unitary(n, &mut base_rng);
    let loss_scalar = 10f64.powf(-spec.insertion_loss_db() / 20.0);

    if !spec.frequency_dependent() {
        return MixingMatrix {
            modes: spec.modes().to_vec(),
            grid: None,
            matrices: vec![base],
            loss_scalar,
        };
    }

    let mut gen_rng = rng::stream_rng(seed, domain::MIXING, 1, 0, 0);
    let a0 = random_hermitian_with_radius(n, FREQUENCY_RIPPLE_RAD, &mut gen_rng);
    let a1 = random_hermitian_with_radius(n, FREQUENCY_RIPPLE_RAD, &mut gen_rng);
    let count = grid.count();
    let matrices: Vec<CMat> = (0..count)
        .map(|f| {
            let t = f as f64 / (count - 1) as f64;
            let mut a = CMat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = (1.0 - t) * a0[(i, j)] + t * a1[(i, j)];
                }
            }
            base.mul(&a.exp_j_hermitian())
        })
        .collect();

    MixingMatrix {
        modes: spec.modes().to_vec(),
        grid: Some(*grid),
        matrices,
        loss_scalar,
    }
}

/// Cascade a channel ensemble with transmit-side mixing:
/// `H'(s,f) = H(s,f) * (loss_scalar * M(f))`. The output label is
/// `"with_oam"`.
pub fn apply_mixing(set: &ChannelSet, m: &MixingMatrix) -> Result<ChannelSet> {
    if m.dim() != set.n_tx() {
        return Err(Error::DimensionMismatch(format!(
            "mixing matrix is {}x{} but the channel has {} transmit ports",
            m.dim(),
            m.dim(),
            set.n_tx()
        )));
    }
    if let Some(g) = m.grid() {
        if g != set.grid() {
            return Err(Error::DimensionMismatch(
                "frequency-dependent mixing was built for a different grid".into(),
            ));
        }
    }
    let n_freq = set.grid().count();
    let mut data = Vec::with_capacity(set.data().len());
    for s in 0..set.n_samples() {
        for f in 0..n_freq {
            let h = set.matrix_at(s, f);
            let mixed = h.mul(&m.effective_at(f));
            data.extend_from_slice(mixed.data());
        }
    }
    ChannelSet::from_parts(
        *set.grid(),
        set.n_samples(),
        set.n_rx(),
        set.n_tx(),
        data,
        "with_oam",
    )
}

/// Outcome of comparing two ensembles' per-frequency Gram matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct GramInvarianceReport {
    pub max_deviation: f64,
    pub worst_freq_hz: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compare the ensemble-averaged Gram matrix `E{H H†}` of two channel sets
/// per frequency and report the largest entrywise deviation.
pub fn gram_invariance_check(
    a: &ChannelSet,
    b: &ChannelSet,
    tol: f64,
) -> Result<GramInvarianceReport> {
    if a.grid() != b.grid()
        || a.n_samples() != b.n_samples()
        || a.n_rx() != b.n_rx()
        || a.n_tx() != b.n_tx()
    {
        return Err(Error::DimensionMismatch(
            "gram invariance check needs matching grids and dimensions".into(),
        ));
    }
    let n_freq = a.grid().count();
    let inv_s = 1.0 / a.n_samples() as f64;
    let mut max_deviation = 0.0_f64;
    let mut worst_freq_hz = a.grid().value_hz(0);
    for f in 0..n_freq {
        let mut ga = CMat::zeros(a.n_rx(), a.n_rx());
        let mut gb = CMat::zeros(a.n_rx(), a.n_rx());
        for s in 0..a.n_samples() {
            ga = ga.add(&a.matrix_at(s, f).outer_gram().scale(Complex64::new(inv_s, 0.0)));
            gb = gb.add(&b.matrix_at(s, f).outer_gram().scale(Complex64::new(inv_s, 0.0)));
        }
        let dev = ga.max_abs_diff(&gb);
        if dev > max_deviation {
            max_deviation = dev;
            worst_freq_hz = a.grid().value_hz(f);
        }
    }
    Ok(GramInvarianceReport {
        max_deviation,
        worst_freq_hz,
        tolerance: tol,
        passed: max_deviation <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{synth_channel, PowerDelayProfile, StirringPlan};

    fn grid() -> FrequencyGrid {
        FrequencyGrid::new(5.0e9, 1.0e6, 21).unwrap()
    }

    fn spec_flat(loss_db: f64) -> OamModeSpec {
        OamModeSpec::new(vec![1, 2], loss_db, false).unwrap()
    }

    #[test]
    fn spec_rejects_bad_input() {
        assert!(OamModeSpec::new(vec![], 0.0, false).is_err());
        assert!(OamModeSpec::new(vec![1, 1], 0.0, false).is_err());
        assert!(OamModeSpec::new(vec![1, 2], -0.5, false).is_err());
        assert!(OamModeSpec::new(vec![1, 2], f64::NAN, false).is_err());
    }

    #[test]
    fn lossless_mixing_is_unitary_everywhere() {
        for freq_dep in [false, true] {
            let spec = OamModeSpec::new(vec![1, 2], 0.0, freq_dep).unwrap();
            let m = make_oam_mixing(&spec, &grid(), 7);
            assert!(
                m.max_unitarity_defect() < 1e-12,
                "defect {} (freq_dep={freq_dep})",
                m.max_unitarity_defect()
            );
            assert_eq!(m.loss_scalar(), 1.0);
        }
    }

    #[test]
    fn two_db_loss_gives_expected_column_norms() {
        let m = make_oam_mixing(&spec_flat(2.0), &grid(), 7);
        let expected = 10f64.powf(-0.1);
        let eff = m.effective_at(0);
        for j in 0..eff.cols() {
            let norm: f64 = (0..eff.rows()).map(|i| eff[(i, j)].norm_sqr()).sum::<f64>().sqrt();
            assert!((norm - expected).abs() < 1e-12, "column {j} norm {norm}");
        }
    }

    #[test]
    fn same_seed_reproduces_family() {
        for freq_dep in [false, true] {
            let spec = OamModeSpec::new(vec![1, 2], 1.0, freq_dep).unwrap();
            let a = make_oam_mixing(&spec, &grid(), 31);
            let b = make_oam_mixing(&spec, &grid(), 31);
            assert_eq!(a, b);
            let c = make_oam_mixing(&spec, &grid(), 32);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn frequency_family_varies_smoothly() {
        let spec = OamModeSpec::new(vec![1, 2], 0.0, true).unwrap();
        let m = make_oam_mixing(&spec, &grid(), 5);
        let count = grid().count();
        // neighbors are close...
        for f in 1..count {
            let step = m.unitary_at(f).max_abs_diff(m.unitary_at(f - 1));
            assert!(step < 0.05, "step {step} at {f}");
        }
        // ...but the family is not constant end to end
        let total = m.unitary_at(count - 1).max_abs_diff(m.unitary_at(0));
        assert!(total > 1e-3, "family looks frozen, total drift {total}");
    }

    #[test]
    fn identity_mixing_is_a_no_op() {
        let set = synth_channel(
            grid(),
            StirringPlan::new(2, 2).unwrap(),
            PowerDelayProfile::new(5.0e-9, 8, 137.8e-9).unwrap(),
            2,
            2,
            3,
        )
        .unwrap();
        let m = MixingMatrix {
            modes: vec![1, 2],
            grid: None,
            matrices: vec![CMat::identity(2)],
            loss_scalar: 1.0,
        };
        let mixed = apply_mixing(&set, &m).unwrap();
        assert_eq!(mixed.label(), "with_oam");
        for (a, b) in mixed.data().iter().zip(set.data()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn identity_channel_passes_mixing_through() {
        let g = FrequencyGrid::new(1.0e9, 1.0e6, 2).unwrap();
        let ident: Vec<Complex64> = (0..2 * g.count())
            .flat_map(|_| CMat::identity(2).data().to_vec())
            .collect();
        let set = ChannelSet::from_parts(g, 2, 2, 2, ident, "x").unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let m = MixingMatrix {
            modes: vec![1, 2],
            grid: None,
            matrices: vec![CMat::from_row_major(
                2,
                2,
                &[
                    Complex64::new(r, 0.0),
                    Complex64::new(r, 0.0),
                    Complex64::new(r, 0.0),
                    Complex64::new(-r, 0.0),
                ],
            )],
            loss_scalar: 1.0,
        };
        let mixed = apply_mixing(&set, &m).unwrap();
        for s in 0..2 {
            for f in 0..g.count() {
                let hp = mixed.matrix_at(s, f);
                assert!(hp.max_abs_diff(&m.matrices[0]) < 1e-15);
            }
        }
    }

    #[test]
    fn mixing_rejects_mismatched_dimensions() {
        let set = synth_channel(
            grid(),
            StirringPlan::new(1, 2).unwrap(),
            PowerDelayProfile::new(5.0e-9, 4, 137.8e-9).unwrap(),
            2,
            3,
            3,
        )
        .unwrap();
        let m = make_oam_mixing(&spec_flat(0.0), &grid(), 1);
        assert!(apply_mixing(&set, &m).is_err());

        // frequency-dependent mixing built for a different grid
        let other = FrequencyGrid::new(5.0e9, 2.0e6, 21).unwrap();
        let spec = OamModeSpec::new(vec![1, 2], 0.0, true).unwrap();
        let m2 = make_oam_mixing(&spec, &other, 1);
        let set22 = synth_channel(
            grid(),
            StirringPlan::new(1, 2).unwrap(),
            PowerDelayProfile::new(5.0e-9, 4, 137.8e-9).unwrap(),
            2,
            2,
            3,
        )
        .unwrap();
        assert!(apply_mixing(&set22, &m2).is_err());
    }

    #[test]
    fn gram_matrices_survive_unitary_mixing() {
        let set = synth_channel(
            grid(),
            StirringPlan::new(2, 3).unwrap(),
            PowerDelayProfile::new(5.0e-9, 8, 137.8e-9).unwrap(),
            2,
            2,
            17,
        )
        .unwrap();
        for freq_dep in [false, true] {
            let spec = OamModeSpec::new(vec![1, 2], 0.0, freq_dep).unwrap();
            let m = make_oam_mixing(&spec, &grid(), 23);
            let mixed = apply_mixing(&set, &m).unwrap();
            let report = gram_invariance_check(&set, &mixed, 1e-12).unwrap();
            assert!(report.passed, "deviation {}", report.max_deviation);
        }
    }

    #[test]
    fn gram_deviation_under_loss_matches_scalar_factoring() {
        // 3-sample fixture: E{H'H'†} = 10^(-0.2) E{HH†}, so the entrywise
        // deviation is (1 - 10^(-0.2)) |E{HH†}| and the reported maximum is
        // that factor times the largest Gram entry.
        let g = FrequencyGrid::new(1.0e9, 1.0e6, 2).unwrap();
        let set = synth_channel(
            g,
            StirringPlan::new(1, 3).unwrap(),
            PowerDelayProfile::new(5.0e-9, 2, 137.8e-9).unwrap(),
            2,
            2,
            9,
        )
        .unwrap();
        let m = make_oam_mixing(&spec_flat(2.0), &g, 4);
        let mixed = apply_mixing(&set, &m).unwrap();

        let inv_s = Complex64::new(1.0 / 3.0, 0.0);
        let mut largest = 0.0_f64;
        for f in 0..2 {
            let mut gram = CMat::zeros(2, 2);
            for s in 0..3 {
                gram = gram.add(&set.matrix_at(s, f).outer_gram().scale(inv_s));
            }
            largest = largest.max(gram.data().iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        let expected = (1.0 - 10f64.powf(-0.2)) * largest;

        let report = gram_invariance_check(&set, &mixed, 1e-12).unwrap();
        assert!(!report.passed);
        assert!(
            (report.max_deviation - expected).abs() < 1e-12 * expected.max(1.0),
            "deviation {} expected {expected}",
            report.max_deviation
        );
    }

    #[test]
    fn set_compared_with_itself_deviates_zero() {
        let set = synth_channel(
            grid(),
            StirringPlan::new(1, 4).unwrap(),
            PowerDelayProfile::new(5.0e-9, 8, 137.8e-9).unwrap(),
            2,
            2,
            2,
        )
        .unwrap();
        let report = gram_invariance_check(&set, &set, 0.0).unwrap();
        assert_eq!(report.max_deviation, 0.0);
        assert!(report.passed);
    }

    #[test]
    fn calibrated_removes_loss_exactly() {
        let m = make_oam_mixing(&spec_flat(2.0), &grid(), 7);
        assert!(m.loss_scalar() < 1.0);
        let cal = m.calibrated();
        assert_eq!(cal.loss_scalar(), 1.0);
        assert_eq!(cal.unitary_at(0), m.unitary_at(0));
    }

    #[test]
    fn haar_rotation_angles_are_not_degenerate() {
        // A 2x2 Haar draw almost surely has all entries of comparable, nonzero
        // magnitude; verify the sampler is not collapsing to a permutation.
        let mut rng = rng::stream_rng(123, domain::MIXING, 0, 0, 0);
        let mut nontrivial = 0;
        for _ in 0..32 {
            let u = haar_unitary(2, &mut rng);
            assert!(u.unitarity_defect() < 1e-12);
            if u.data().iter().all(|z| z.norm() > 0.05) {
                nontrivial += 1;
            }
        }
        assert!(nontrivial >= 24, "only {nontrivial}/32 draws mixed both ports");
    }
}
