//! State families: the two-scale "superbandwidth" superposition, the plain
//! Gaussian (its `alpha = 0` limit), and the chirped Gaussian, in both
//! representations, plus grid-free closed-form evaluators of the freely
//! evolved field.
//!
//! The momentum profile is
//! `phi0(kappa) = N^{-1} (e^{-u^2} - alpha e^{-4 u^2})`,
//! `u = (kappa - kappa0) / delta_kappa`: a wide Gaussian minus a depth-alpha
//! copy of half the width. Squaring and integrating term by term gives
//! `N^2 = sqrt(pi) dk (1/sqrt2 - 2 alpha/sqrt5 + alpha^2/(2 sqrt2))`, i.e.
//! `N = (pi/4)^{1/4} sqrt(dk (sqrt2 - 4 alpha/sqrt5 + alpha^2/sqrt2))`.
//! The radicand is positive for every real alpha (discriminant
//! `16/5 - 4 < 0`), so the profile is normalizable at any depth; parameter
//! validation still rejects pathological widths and signs.
//!
//! Since each term stays Gaussian under free evolution, completing the
//! square in the propagation integral yields an exact closed form for
//! `psi(x, t)` and its spatial derivative at arbitrary `(x, t)` — no grid,
//! no quadrature. That evaluator is the designated oracle for off-grid
//! queries (trajectory integration); the spectral route in [`crate::grid`]
//! is the oracle for norm and flux bookkeeping. The two must agree to 1e-9;
//! tests enforce it.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{MomentumSpectrum, SimGrid, WaveField};

/// Parameters of a state family: carrier `kappa0`, spectral width
/// `delta_kappa`, depth `alpha`, particle constants, optional chirp time.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisParams {
    pub kappa0: f64,
    pub delta_kappa: f64,
    pub alpha: f64,
    pub mass: f64,
    pub hbar: f64,
    /// Quadratic-spectral-phase time constant for the chirped Gaussian
    /// family; `None` means unchirped.
    pub gamma: Option<f64>,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        Self {
            kappa0: 2.0 * PI,
            delta_kappa: 0.5,
            alpha: 1.0,
            mass: 1.0,
            hbar: 1.0,
            gamma: None,
        }
    }
}

impl SynthesisParams {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_kappa > 0.0) || !self.delta_kappa.is_finite() {
            return Err(Error::InvalidParams("delta_kappa must be positive"));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParams("alpha must be nonnegative"));
        }
        if !(self.mass > 0.0) || !(self.hbar > 0.0) {
            return Err(Error::InvalidParams("mass and hbar must be positive"));
        }
        if !(self.kappa0 > 0.0) {
            return Err(Error::InvalidParams("kappa0 must be positive"));
        }
        if let Some(g) = self.gamma {
            if !(g >= 0.0) {
                return Err(Error::InvalidParams("gamma must be nonnegative"));
            }
        }
        if !(normalization_radicand(self.alpha) > 0.0) {
            return Err(Error::InvalidParams("normalization radicand not positive"));
        }
        Ok(())
    }

    /// `hbar kappa0 / mass`, the carrier group velocity.
    pub fn carrier_velocity(&self) -> f64 {
        self.hbar * self.kappa0 / self.mass
    }
}

fn normalization_radicand(alpha: f64) -> f64 {
    let sqrt2 = core::f64::consts::SQRT_2;
    sqrt2 - 4.0 * alpha / 5.0_f64.sqrt() + alpha * alpha / sqrt2
}

/// Closed-form L2 normalization constant of the two-scale profile.
pub fn normalization_constant(params: &SynthesisParams) -> Result<f64> {
    params.validate()?;
    let radicand = params.delta_kappa * normalization_radicand(params.alpha);
    Ok((PI / 4.0).powf(0.25) * radicand.sqrt())
}

/// Unnormalized-free profile value `N^{-1}(e^{-u^2} - alpha e^{-4 u^2})`.
pub fn momentum_amplitude(params: &SynthesisParams, kappa: f64) -> Result<f64> {
    let n = normalization_constant(params)?;
    let u = (kappa - params.kappa0) / params.delta_kappa;
    Ok(((-u * u).exp() - params.alpha * (-4.0 * u * u).exp()) / n)
}

/// `log10 |phi0(kappa)|^2`, evaluated in log space so tail weights on the
/// order of 1e-123 come out exact to the last digit rather than rounding
/// through a squared subnormal.
pub fn spectrum_weight_log10(params: &SynthesisParams, kappa: f64) -> Result<f64> {
    let n = normalization_constant(params)?;
    let u = (kappa - params.kappa0) / params.delta_kappa;
    // phi0 = N^{-1} e^{-u^2} (1 - alpha e^{-3 u^2})
    let ln_abs = -u * u + (1.0 - params.alpha * (-3.0 * u * u).exp()).abs().ln() - n.ln();
    Ok(2.0 * ln_abs / core::f64::consts::LN_10)
}

/// Samples `phi0` on the grid's wavenumber samples.
pub fn momentum_distribution(
    params: &SynthesisParams,
    grid: &Arc<SimGrid>,
) -> Result<MomentumSpectrum> {
    grid.check_headroom(params)?;
    let n = normalization_constant(params)?;
    let amps: Vec<Complex64> = (0..grid.len())
        .map(|k| {
            let u = (grid.kappa(k) - params.kappa0) / params.delta_kappa;
            let v = ((-u * u).exp() - params.alpha * (-4.0 * u * u).exp()) / n;
            Complex64::new(v, 0.0)
        })
        .collect();
    MomentumSpectrum::new(Arc::clone(grid), amps, 0.0)
}

/// Closed-form initial field
/// `N^{-1}(dk/sqrt2)(e^{i kappa0 x} e^{-(dk x/2)^2} - (alpha/2) e^{i kappa0 x} e^{-(dk x/4)^2})`.
pub fn initial_wavefunction(params: &SynthesisParams, grid: &Arc<SimGrid>) -> Result<WaveField> {
    grid.check_headroom(params)?;
    let n = normalization_constant(params)?;
    let dk = params.delta_kappa;
    let pref = dk / (core::f64::consts::SQRT_2 * n);
    let amps: Vec<Complex64> = (0..grid.len())
        .map(|j| {
            let x = grid.x(j);
            let phase = params.kappa0 * x;
            let env = (-(dk * x / 2.0) * (dk * x / 2.0)).exp()
                - 0.5 * params.alpha * (-(dk * x / 4.0) * (dk * x / 4.0)).exp();
            Complex64::new(phase.cos(), phase.sin()) * (pref * env)
        })
        .collect();
    WaveField::new(Arc::clone(grid), amps, 0.0)
}

/// Gaussian spectrum carrying the quadratic spectral phase
/// `e^{+i hbar kappa^2 gamma / (2 m)}`; free evolution by `t` then behaves
/// like the unchirped Gaussian at `t - gamma` (transient focusing).
pub fn chirped_gaussian_spectrum(
    params: &SynthesisParams,
    grid: &Arc<SimGrid>,
) -> Result<MomentumSpectrum> {
    let gamma = params.gamma.unwrap_or(0.0);
    let gauss = SynthesisParams {
        alpha: 0.0,
        gamma: None,
        ..params.clone()
    };
    grid.check_headroom(&gauss)?;
    let n = normalization_constant(&gauss)?;
    let c = params.hbar * gamma / (2.0 * params.mass);
    let amps: Vec<Complex64> = (0..grid.len())
        .map(|k| {
            let kappa = grid.kappa(k);
            let u = (kappa - params.kappa0) / params.delta_kappa;
            let mag = (-u * u).exp() / n;
            let phase = c * kappa * kappa;
            Complex64::new(phase.cos(), phase.sin()) * mag
        })
        .collect();
    MomentumSpectrum::new(Arc::clone(grid), amps, 0.0)
}

/// Density-profile width of the `alpha = 0` state: `sqrt2 / delta_kappa`,
/// twice the position standard deviation.
pub fn gaussian_density_width(params: &SynthesisParams) -> f64 {
    core::f64::consts::SQRT_2 / params.delta_kappa
}

/// Closed-form freely evolved Gaussian density
/// `pi^{-1/2} w_t^{-1} exp(-(x - v t)^2 / w_t^2)` with
/// `w_t = w sqrt(1 + (hbar t / (m w^2))^2)` and `w = sqrt2 / delta_kappa`.
pub fn analytic_gaussian_density(params: &SynthesisParams, x: f64, t: f64) -> f64 {
    let w = gaussian_density_width(params);
    let r = params.hbar * t / (params.mass * w * w);
    let wt = w * (1.0 + r * r).sqrt();
    let arg = (x - params.carrier_velocity() * t) / wt;
    (-arg * arg).exp() / (PI.sqrt() * wt)
}

/// One Gaussian term of the evolved field and its x-derivative, from
/// completing the square in the free propagation integral:
/// with `A = 1/sigma^2 + i hbar t/(2m)`, `B = 2 kappa0/sigma^2 + i x`,
/// `C = -kappa0^2/sigma^2`, the term is `(2A)^{-1/2} e^{B^2/(4A) + C}` and
/// its derivative is the term times `iB/(2A)`.
fn evolved_term(params: &SynthesisParams, sigma: f64, x: f64, t: f64) -> (Complex64, Complex64) {
    let inv_s2 = 1.0 / (sigma * sigma);
    let a = Complex64::new(inv_s2, params.hbar * t / (2.0 * params.mass));
    let b = Complex64::new(2.0 * params.kappa0 * inv_s2, x);
    let c = -params.kappa0 * params.kappa0 * inv_s2;
    let value = (2.0 * a).sqrt().inv() * (b * b / (4.0 * a) + c).exp();
    let dvalue = value * Complex64::new(0.0, 1.0) * b / (2.0 * a);
    (value, dvalue)
}

/// Exact freely evolved field at one off-grid point.
pub fn analytic_superband_point(params: &SynthesisParams, x: f64, t: f64) -> Result<Complex64> {
    let n = normalization_constant(params)?;
    let (wide, _) = evolved_term(params, params.delta_kappa, x, t);
    let (narrow, _) = evolved_term(params, params.delta_kappa / 2.0, x, t);
    Ok((wide - params.alpha * narrow) / n)
}

/// Exact freely evolved field and spatial derivative at one point; the
/// derivative feeds the guiding-velocity evaluation without any grid.
pub fn analytic_superband_point_with_derivative(
    params: &SynthesisParams,
    x: f64,
    t: f64,
) -> Result<(Complex64, Complex64)> {
    let n = normalization_constant(params)?;
    let (wide, dwide) = evolved_term(params, params.delta_kappa, x, t);
    let (narrow, dnarrow) = evolved_term(params, params.delta_kappa / 2.0, x, t);
    Ok((
        (wide - params.alpha * narrow) / n,
        (dwide - params.alpha * dnarrow) / n,
    ))
}

/// Vectorized [`analytic_superband_point`] over arbitrary sample positions.
pub fn analytic_superband_field(
    params: &SynthesisParams,
    xs: &[f64],
    t: f64,
) -> Result<Vec<Complex64>> {
    let n = normalization_constant(params)?;
    Ok(xs
        .iter()
        .map(|&x| {
            let (wide, _) = evolved_term(params, params.delta_kappa, x, t);
            let (narrow, _) = evolved_term(params, params.delta_kappa / 2.0, x, t);
            (wide - params.alpha * narrow) / n
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::kahan_sum;

    fn grid() -> Arc<SimGrid> {
        Arc::new(SimGrid::new(-128.0, 128.0, 1 << 14).unwrap())
    }

    #[test]
    fn normalization_closed_form_alpha_zero() {
        let p = SynthesisParams::with_alpha(0.0);
        let want = (PI / 4.0).powf(0.25) * (0.5 * core::f64::consts::SQRT_2).sqrt();
        assert!((normalization_constant(&p).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn normalization_value_alpha_one() {
        let p = SynthesisParams::default();
        assert!((normalization_constant(&p).unwrap() - 0.383_823_062_706_532_8).abs() < 1e-12);
    }

    #[test]
    fn spectra_are_unit_normalized() {
        let g = grid();
        for &alpha in &[0.0, 1.0, 1.8] {
            for &dk in &[0.25, 0.5, 1.0] {
                let p = SynthesisParams {
                    alpha,
                    delta_kappa: dk,
                    ..SynthesisParams::default()
                };
                let spec = momentum_distribution(&p, &g).unwrap();
                assert!(
                    (spec.norm_sq() - 1.0).abs() < 1e-10,
                    "alpha={alpha} dk={dk}"
                );
            }
        }
    }

    #[test]
    fn profile_cancels_at_carrier_for_unit_depth() {
        let p = SynthesisParams::default();
        assert!(momentum_amplitude(&p, p.kappa0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn zeros_of_deep_profile() {
        let p = SynthesisParams::with_alpha(1.8);
        let off = p.delta_kappa * (1.8_f64.ln() / 3.0).sqrt();
        for kappa in [p.kappa0 - off, p.kappa0 + off] {
            assert!(momentum_amplitude(&p, kappa).unwrap().abs() < 1e-14);
        }
        // sign pattern: positive outside the zeros, negative between
        assert!(momentum_amplitude(&p, p.kappa0).unwrap() < 0.0);
        assert!(momentum_amplitude(&p, p.kappa0 + 2.0 * off).unwrap() > 0.0);
    }

    #[test]
    fn log_weight_matches_direct_value_in_representable_range() {
        let p = SynthesisParams::default();
        let kappa = p.kappa0 + 3.0 * p.delta_kappa;
        let direct = momentum_amplitude(&p, kappa).unwrap();
        let want = (direct * direct).log10();
        assert!((spectrum_weight_log10(&p, kappa).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn log_weight_reaches_tail_exponents() {
        let p = SynthesisParams::default();
        // |phi0|^2 at u ~ 11.8 is around 1e-123; must stay finite and exact
        let lw = spectrum_weight_log10(&p, 1.95 * p.kappa0).unwrap();
        assert!(lw < -100.0 && lw.is_finite());
    }

    #[test]
    fn closed_form_matches_transform_route() {
        let g = grid();
        let p = SynthesisParams::default();
        let direct = initial_wavefunction(&p, &g).unwrap();
        let via_fft = momentum_distribution(&p, &g).unwrap().to_position().unwrap();
        for (a, b) in direct.amplitudes().iter().zip(via_fft.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn node_at_origin_for_depth_two() {
        let g = grid();
        let p = SynthesisParams::with_alpha(2.0);
        let field = initial_wavefunction(&p, &g).unwrap();
        assert!(field.amplitudes()[g.index_of(0.0)].norm() < 1e-12);
    }

    #[test]
    fn analytic_field_reduces_to_initial_form_at_t_zero() {
        let g = grid();
        let p = SynthesisParams::default();
        let direct = initial_wavefunction(&p, &g).unwrap();
        let closed = analytic_superband_field(&p, &g.x_values(), 0.0).unwrap();
        for (a, b) in direct.amplitudes().iter().zip(&closed) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn analytic_field_matches_spectral_propagation() {
        let g = Arc::new(SimGrid::new(-512.0, 512.0, 1 << 16).unwrap());
        for &alpha in &[0.0, 1.0, 1.8] {
            let mut p = SynthesisParams::with_alpha(alpha);
            p.delta_kappa = 0.25;
            let spec = momentum_distribution(&p, &g).unwrap();
            for &t in &[0.0, 1.0, 2.0, 5.0, 50.0] {
                let field = spec.propagate(&p, t).unwrap();
                let closed = analytic_superband_field(&p, &g.x_values(), t).unwrap();
                let worst = field
                    .amplitudes()
                    .iter()
                    .zip(&closed)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0_f64, f64::max);
                assert!(worst < 1e-9, "alpha={alpha} t={t}: {worst:e}");
            }
        }
    }

    #[test]
    fn analytic_gaussian_density_peak_and_drift() {
        let p = SynthesisParams::with_alpha(0.0);
        let w = gaussian_density_width(&p);
        assert!((analytic_gaussian_density(&p, 0.0, 0.0) - 1.0 / (PI.sqrt() * w)).abs() < 1e-15);
        // peak rides the carrier velocity
        for &t in &[1.0, 3.0] {
            let xc = p.carrier_velocity() * t;
            let at_peak = analytic_gaussian_density(&p, xc, t);
            assert!(analytic_gaussian_density(&p, xc + 0.1, t) < at_peak);
            assert!(analytic_gaussian_density(&p, xc - 0.1, t) < at_peak);
        }
    }

    #[test]
    fn analytic_gaussian_density_matches_closed_field() {
        let p = SynthesisParams::with_alpha(0.0);
        for &t in &[0.0, 1.0, 3.0] {
            for &x in &[-2.0, 0.0, 4.0, 6.3, 20.0] {
                let psi = analytic_superband_point(&p, x, t).unwrap();
                let want = analytic_gaussian_density(&p, x, t);
                assert!((psi.norm_sqr() - want).abs() < 1e-12, "x={x} t={t}");
            }
        }
    }

    #[test]
    fn chirped_spectrum_is_gaussian_at_zero_gamma() {
        let g = grid();
        let mut p = SynthesisParams::with_alpha(0.0);
        p.gamma = Some(0.0);
        let chirped = chirped_gaussian_spectrum(&p, &g).unwrap();
        let plain = momentum_distribution(&SynthesisParams::with_alpha(0.0), &g).unwrap();
        for (a, b) in chirped.amplitudes().iter().zip(plain.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn chirp_shifts_the_time_origin() {
        let g = grid();
        let mut p = SynthesisParams::with_alpha(0.0);
        p.gamma = Some(2.0);
        let chirped = chirped_gaussian_spectrum(&p, &g).unwrap();
        let plain = momentum_distribution(&SynthesisParams::with_alpha(0.0), &g).unwrap();
        for &s in &[-1.0, 0.0, 1.0] {
            let a = chirped.propagate(&p, 2.0 + s).unwrap();
            let b = plain.propagate(&p, s).unwrap();
            let worst = a
                .density()
                .iter()
                .zip(b.density())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0_f64, f64::max);
            assert!(worst < 1e-9, "s={s}: {worst:e}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = SynthesisParams::default();
        p.delta_kappa = 0.0;
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
        let mut p = SynthesisParams::default();
        p.alpha = -0.5;
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
        let mut p = SynthesisParams::default();
        p.gamma = Some(-1.0);
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn quadrature_confirms_normalization() {
        // trapezoid over a fine off-grid lattice, independent of the
        // transform machinery
        let p = SynthesisParams::default();
        let dk = 1e-4;
        let lo = p.kappa0 - 10.0;
        let steps = (20.0 / dk) as usize;
        let total = kahan_sum((0..=steps).map(|i| {
            let kappa = lo + i as f64 * dk;
            let v = momentum_amplitude(&p, kappa).unwrap();
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            w * v * v * dk
        }));
        assert!((total - 1.0).abs() < 1e-10, "integral = {total}");
    }
}
