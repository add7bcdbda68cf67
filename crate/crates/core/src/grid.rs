//! Spatial/wavenumber grids, the transform convention, and the exact
//! spectral free-particle propagator.
//!
//! The convention is fixed throughout: the momentum-to-position direction is
//! `psi(x) = (2 pi)^{-1/2} integral phi(kappa) e^{+i kappa x} d kappa`, the
//! unitary angular-wavenumber pair. With this choice a unit-normalized
//! momentum-space Gaussian of 1/e half-width `dk` maps to a position
//! wavefunction with prefactor `dk / sqrt(2)`, which is what all closed-form
//! evaluators in [`crate::synthesis`] assume; the pairing is locked by tests.
//!
//! Free evolution is a single phase multiplication
//! `phi(kappa) -> e^{-i hbar kappa^2 t / (2 m)} phi(kappa)` followed by the
//! inverse transform, so there is no time-discretization error and negative
//! times are as exact as positive ones.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Radix2Plan;
use crate::synthesis::SynthesisParams;
use crate::util::kahan_sum;

/// Tolerance for unit-norm checks on fields and spectra.
pub const NORM_TOL: f64 = 1e-10;

/// Required ratio between the Nyquist wavenumber and the outer edge of the
/// configured spectral band `kappa0 + 4 delta_kappa`.
pub const HEADROOM_FACTOR: f64 = 8.0;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Uniform spatial grid on `[x_min, x_max)` with its conjugate wavenumber
/// samples and a cached transform plan.
#[derive(Debug)]
pub struct SimGrid {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
    dkappa: f64,
    plan: Radix2Plan,
}

impl SimGrid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_max > x_min) {
            return Err(Error::EmptyDomain { x_min, x_max });
        }
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n_points));
        }
        let dx = (x_max - x_min) / n_points as f64;
        let dkappa = 2.0 * PI / (x_max - x_min);
        Ok(Self {
            x_min,
            x_max,
            n: n_points,
            dx,
            dkappa,
            plan: Radix2Plan::new(n_points),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dkappa(&self) -> f64 {
        self.dkappa
    }

    /// Spatial sample `x_j = x_min + j dx`.
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn x_values(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Wavenumber sample in transform order: non-negative frequencies first,
    /// then the negative half.
    pub fn kappa(&self, k: usize) -> f64 {
        let s = if k < self.n / 2 {
            k as f64
        } else {
            k as f64 - self.n as f64
        };
        s * self.dkappa
    }

    pub fn kappa_values(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.kappa(k)).collect()
    }

    /// Largest resolvable |kappa|, `pi / dx`.
    pub fn kappa_nyquist(&self) -> f64 {
        PI / self.dx
    }

    /// Nearest grid index to `x` (clamped to the domain).
    pub fn index_of(&self, x: f64) -> usize {
        let j = ((x - self.x_min) / self.dx).round();
        (j.max(0.0) as usize).min(self.n - 1)
    }

    /// Spectral derivative of an arbitrary real sample array on this grid
    /// (periodic extension implied).
    pub fn derivative_of_samples(&self, samples: &[f64]) -> Vec<f64> {
        assert_eq!(samples.len(), self.n);
        let mut buf: Vec<Complex64> = samples
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.plan.forward(&mut buf);
        for (k, z) in buf.iter_mut().enumerate() {
            *z *= Complex64::new(0.0, self.kappa(k));
        }
        self.plan.inverse(&mut buf);
        let inv_n = 1.0 / self.n as f64;
        buf.iter().map(|z| z.re * inv_n).collect()
    }

    /// Checks the bandwidth-headroom invariant for a state family.
    pub fn check_headroom(&self, params: &SynthesisParams) -> Result<()> {
        let required = HEADROOM_FACTOR * (params.kappa0 + 4.0 * params.delta_kappa);
        let available = self.kappa_nyquist();
        if available < required {
            return Err(Error::InsufficientHeadroom {
                available,
                required,
            });
        }
        Ok(())
    }
}

/// Builds a grid and validates the headroom invariant for `params`.
pub fn make_grid(
    x_min: f64,
    x_max: f64,
    n_points: usize,
    params: &SynthesisParams,
) -> Result<Arc<SimGrid>> {
    params.validate()?;
    let grid = SimGrid::new(x_min, x_max, n_points)?;
    grid.check_headroom(params)?;
    Ok(Arc::new(grid))
}

fn check_unit(norm_sq: f64) -> Result<()> {
    if (norm_sq - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm_sq });
    }
    Ok(())
}

/// Position-space state `psi(x)` on a grid, stamped with its time.
#[derive(Clone)]
pub struct WaveField {
    grid: Arc<SimGrid>,
    amplitudes: Vec<Complex64>,
    time: f64,
}

impl WaveField {
    /// Wraps amplitudes after checking the unit-norm invariant.
    pub fn new(grid: Arc<SimGrid>, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        assert_eq!(amplitudes.len(), grid.len());
        let field = Self {
            grid,
            amplitudes,
            time,
        };
        check_unit(field.norm_sq())?;
        Ok(field)
    }

    pub fn grid(&self) -> &Arc<SimGrid> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// `sum |psi_j|^2 dx`, compensated.
    pub fn norm_sq(&self) -> f64 {
        kahan_sum(self.amplitudes.iter().map(|z| z.norm_sqr())) * self.grid.dx
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Probability mass in the outer `frac` of the domain (both edges);
    /// nonzero values signal that the packet reached the boundary.
    pub fn boundary_mass(&self, frac: f64) -> f64 {
        let edge = ((self.grid.len() as f64 * frac / 2.0) as usize).max(1);
        let d = self.density();
        let left = kahan_sum(d[..edge].iter().copied());
        let right = kahan_sum(d[d.len() - edge..].iter().copied());
        (left + right) * self.grid.dx
    }

    /// Transforms to the momentum representation.
    pub fn to_momentum(&self) -> Result<MomentumSpectrum> {
        let grid = &self.grid;
        let mut buf = self.amplitudes.clone();
        grid.plan.forward(&mut buf);
        let scale = grid.dx * INV_SQRT_2PI;
        for (k, z) in buf.iter_mut().enumerate() {
            let phase = -grid.kappa(k) * grid.x_min;
            *z *= Complex64::new(phase.cos(), phase.sin()) * scale;
        }
        MomentumSpectrum::new(Arc::clone(grid), buf, self.time)
    }

    /// `d psi / d x` by multiplying the momentum representation with
    /// `i kappa`; exact for band-limited fields.
    pub fn spectral_derivative(&self) -> Vec<Complex64> {
        let grid = &self.grid;
        let mut buf = self.amplitudes.clone();
        grid.plan.forward(&mut buf);
        for (k, z) in buf.iter_mut().enumerate() {
            *z *= Complex64::new(0.0, grid.kappa(k));
        }
        grid.plan.inverse(&mut buf);
        let inv_n = 1.0 / grid.len() as f64;
        for z in buf.iter_mut() {
            *z *= inv_n;
        }
        buf
    }
}

/// Momentum-space state `phi(kappa)` on the conjugate grid, in transform
/// order, stamped with its time.
#[derive(Clone)]
pub struct MomentumSpectrum {
    grid: Arc<SimGrid>,
    amplitudes: Vec<Complex64>,
    time: f64,
}

impl MomentumSpectrum {
    pub fn new(grid: Arc<SimGrid>, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        assert_eq!(amplitudes.len(), grid.len());
        let spectrum = Self {
            grid,
            amplitudes,
            time,
        };
        check_unit(spectrum.norm_sq())?;
        Ok(spectrum)
    }

    pub fn grid(&self) -> &Arc<SimGrid> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// `sum |phi_k|^2 dkappa`, compensated.
    pub fn norm_sq(&self) -> f64 {
        kahan_sum(self.amplitudes.iter().map(|z| z.norm_sqr())) * self.grid.dkappa
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Transforms to the position representation.
    pub fn to_position(&self) -> Result<WaveField> {
        let field = self.position_transform(|_, z| z);
        WaveField::new(Arc::clone(&self.grid), field, self.time)
    }

    /// Evolves freely for a duration `dt` (may be negative or zero) and
    /// returns the position-space field at `self.time() + dt`.
    pub fn propagate(&self, params: &SynthesisParams, dt: f64) -> Result<WaveField> {
        let c = params.hbar / (2.0 * params.mass);
        let field = self.position_transform(|kappa, z| {
            let phase = -c * kappa * kappa * dt;
            z * Complex64::new(phase.cos(), phase.sin())
        });
        WaveField::new(Arc::clone(&self.grid), field, self.time + dt)
    }

    /// Same as [`propagate`](Self::propagate) but also returns the spatial
    /// derivative of the propagated field, computed from the same spectrum.
    pub fn propagate_with_derivative(
        &self,
        params: &SynthesisParams,
        dt: f64,
    ) -> Result<(WaveField, Vec<Complex64>)> {
        let c = params.hbar / (2.0 * params.mass);
        let field = self.position_transform(|kappa, z| {
            let phase = -c * kappa * kappa * dt;
            z * Complex64::new(phase.cos(), phase.sin())
        });
        let deriv = self.position_transform(|kappa, z| {
            let phase = -c * kappa * kappa * dt;
            z * Complex64::new(phase.cos(), phase.sin()) * Complex64::new(0.0, kappa)
        });
        let field = WaveField::new(Arc::clone(&self.grid), field, self.time + dt)?;
        Ok((field, deriv))
    }

    /// Applies `f(kappa, phi_k)`, then the kappa -> x transform with the
    /// fixed `e^{+i kappa x}` convention, including the domain-offset phase.
    fn position_transform(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Vec<Complex64> {
        let grid = &self.grid;
        let mut buf: Vec<Complex64> = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(k, &z)| {
                let kappa = grid.kappa(k);
                let phase = kappa * grid.x_min;
                f(kappa, z) * Complex64::new(phase.cos(), phase.sin())
            })
            .collect();
        grid.plan.inverse(&mut buf);
        let scale = grid.dkappa * INV_SQRT_2PI;
        for z in buf.iter_mut() {
            *z *= scale;
        }
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn params() -> SynthesisParams {
        SynthesisParams::default()
    }

    #[test]
    fn default_grid_spacing_and_nyquist() {
        let g = SimGrid::new(-512.0, 512.0, 1 << 18).unwrap();
        assert_eq!(g.dx(), 1.0 / 256.0);
        assert!((g.kappa_nyquist() - PI * 256.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert_eq!(
            SimGrid::new(-1.0, 1.0, 3).unwrap_err(),
            Error::NotPowerOfTwo(3)
        );
    }

    #[test]
    fn rejects_insufficient_headroom() {
        let g = SimGrid::new(-4.0, 4.0, 1 << 6).unwrap();
        match g.check_headroom(&params()) {
            Err(Error::InsufficientHeadroom { .. }) => {}
            other => panic!("expected headroom error, got {other:?}"),
        }
    }

    #[test]
    fn kappa_samples_are_conjugate_frequencies() {
        let g = SimGrid::new(-8.0, 8.0, 64).unwrap();
        assert_eq!(g.kappa(0), 0.0);
        assert!((g.kappa(1) - 2.0 * PI / 16.0).abs() < 1e-15);
        assert!((g.kappa(63) + 2.0 * PI / 16.0).abs() < 1e-15);
        assert!((g.kappa(32) + g.kappa_nyquist()).abs() < 1e-12);
    }

    #[test]
    fn real_even_spectrum_gives_real_even_field() {
        let grid = Arc::new(SimGrid::new(-32.0, 32.0, 1 << 10).unwrap());
        // Gaussian centered at kappa = 0, real and even.
        let amps: Vec<Complex64> = (0..grid.len())
            .map(|k| {
                let kappa = grid.kappa(k);
                Complex64::new((-kappa * kappa).exp(), 0.0)
            })
            .collect();
        let norm = kahan_sum(amps.iter().map(|z| z.norm_sqr())) * grid.dkappa();
        let amps: Vec<Complex64> = amps.iter().map(|z| z / norm.sqrt()).collect();
        let spec = MomentumSpectrum::new(Arc::clone(&grid), amps, 0.0).unwrap();
        let field = spec.to_position().unwrap();
        let n = grid.len();
        for j in 0..n {
            assert!(field.amplitudes()[j].im.abs() < 1e-12);
        }
        // even about x = 0 (index n/2): psi(x_j) == psi(x_{n-j})
        for j in 1..n / 2 {
            let a = field.amplitudes()[n / 2 + j].re;
            let b = field.amplitudes()[n / 2 - j].re;
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn transform_round_trip() {
        let grid = Arc::new(SimGrid::new(-64.0, 64.0, 1 << 12).unwrap());
        let p = params();
        let spec = crate::synthesis::momentum_distribution(&p, &grid).unwrap();
        let back = spec.to_position().unwrap().to_momentum().unwrap();
        for (a, b) in back.amplitudes().iter().zip(spec.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn propagate_zero_time_is_identity() {
        let grid = Arc::new(SimGrid::new(-64.0, 64.0, 1 << 12).unwrap());
        let p = params();
        let spec = crate::synthesis::momentum_distribution(&p, &grid).unwrap();
        let a = spec.to_position().unwrap();
        let b = spec.propagate(&p, 0.0).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn propagation_is_unitary_over_long_times() {
        let grid = Arc::new(SimGrid::new(-512.0, 512.0, 1 << 16).unwrap());
        let mut p = params();
        p.delta_kappa = 0.25; // keep the band well inside this coarser grid
        let spec = crate::synthesis::momentum_distribution(&p, &grid).unwrap();
        for &t in &[-50.0, -7.5, 0.0, 1.0, 13.0, 50.0] {
            let field = spec.propagate(&p, t).unwrap();
            assert!((field.norm_sq() - 1.0).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn propagation_composes() {
        let grid = Arc::new(SimGrid::new(-256.0, 256.0, 1 << 15).unwrap());
        let p = params();
        let spec = crate::synthesis::momentum_distribution(&p, &grid).unwrap();
        let direct = spec.propagate(&p, 3.5).unwrap();
        let staged = spec
            .propagate(&p, 1.25)
            .unwrap()
            .to_momentum()
            .unwrap()
            .propagate(&p, 2.25)
            .unwrap();
        assert!((staged.time() - 3.5).abs() < 1e-12);
        for (a, b) in direct.amplitudes().iter().zip(staged.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn derivative_of_windowed_plane_wave() {
        let grid = Arc::new(SimGrid::new(-64.0, 64.0, 1 << 12).unwrap());
        let p = params();
        let spec = crate::synthesis::momentum_distribution(&p, &grid).unwrap();
        let field = spec.to_position().unwrap();
        let deriv = field.spectral_derivative();
        // local momentum at the packet center equals kappa0 for the
        // two-scale state at t=0 (both terms share the same linear phase)
        let j = grid.index_of(0.0);
        let kl = (field.amplitudes()[j].conj() * deriv[j]).im / field.amplitudes()[j].norm_sqr();
        assert!((kl - p.kappa0).abs() < 1e-10, "kl = {kl}");
    }

    #[test]
    fn derivative_of_real_even_gaussian_is_real_odd() {
        let grid = Arc::new(SimGrid::new(-32.0, 32.0, 1 << 10).unwrap());
        let norm = (2.0 / PI).powf(0.25);
        let amps: Vec<Complex64> = (0..grid.len())
            .map(|j| {
                let x = grid.x(j);
                Complex64::new(norm * (-x * x).exp(), 0.0)
            })
            .collect();
        let field = WaveField::new(Arc::clone(&grid), amps, 0.0).unwrap();
        let deriv = field.spectral_derivative();
        let n = grid.len();
        for z in &deriv {
            assert!(z.im.abs() < 1e-12);
        }
        for j in 1..n / 2 {
            assert!((deriv[n / 2 + j].re + deriv[n / 2 - j].re).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_unnormalized_amplitudes() {
        let grid = Arc::new(SimGrid::new(-1.0, 1.0, 4).unwrap());
        let amps = vec![Complex64::new(1.0, 0.0); 4];
        match WaveField::new(grid, amps, 0.0) {
            Err(Error::NotNormalized { .. }) => {}
            other => panic!("expected norm error, got {:?}", other.map(|_| ())),
        }
    }
}
