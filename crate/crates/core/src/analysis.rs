//! Observables: local momentum and its super/sub-oscillatory extrema,
//! probability current and flux bookkeeping, moments and spreading laws,
//! the asymptotic spectrum-shape correspondence, and the critical depth at
//! which the extremum ordering reverses.
//!
//! Local momentum is computed as `Im(psi* psi') / |psi|^2`, which equals the
//! derivative of the phase wherever the density is nonzero but never touches
//! `Arg psi`, so there is nothing to unwrap near quasi-nodes. An amplitude
//! floor (default 1e-7 of the peak density) masks true nodes, where the
//! quotient is meaningless.
//!
//! Flux through a plane is computed along two mathematically identical but
//! numerically independent routes — time quadrature of the current at the
//! plane, and the change of the cumulative spatial probability up to the
//! plane — and their agreement to 1e-6 is enforced as a health check. The
//! cumulative route needs an Euler–Maclaurin endpoint correction
//! `-dx^2/12 * rho'(x_P)` on top of the trapezoid to reach that tolerance;
//! without it the trapezoid's boundary error (~1e-5 at the default spacing)
//! masks genuine disagreements.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{MomentumSpectrum, SimGrid, WaveField};
use crate::synthesis::{
    self, analytic_superband_point_with_derivative, SynthesisParams,
};
use crate::util::{kahan_sum, pearson, refine_extremum};

/// Default amplitude floor, as a fraction of the peak density.
pub const DEFAULT_FLOOR: f64 = 1e-7;

/// Maximum allowed disagreement between the two flux routes.
pub const FLUX_ROUTE_TOL: f64 = 1e-6;

/// Local momentum samples with a validity mask.
pub struct LocalMomentumField {
    grid: Arc<SimGrid>,
    time: f64,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl LocalMomentumField {
    pub fn grid(&self) -> &Arc<SimGrid> {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Momentum values; meaningful only where [`Self::valid`] is true.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    /// (max, min) over the valid mask, with their sample indices.
    pub fn masked_extrema(&self) -> Option<(usize, f64, usize, f64)> {
        let mut best: Option<(usize, f64, usize, f64)> = None;
        for (j, (&v, &ok)) in self.values.iter().zip(&self.valid).enumerate() {
            if !ok {
                continue;
            }
            best = Some(match best {
                None => (j, v, j, v),
                Some((jmax, vmax, jmin, vmin)) => {
                    if v > vmax {
                        (j, v, jmin, vmin)
                    } else if v < vmin {
                        (jmax, vmax, j, v)
                    } else {
                        (jmax, vmax, jmin, vmin)
                    }
                }
            });
        }
        best
    }
}

fn check_floor(floor: f64) -> Result<()> {
    if !(floor > 0.0 && floor <= 1e-3) {
        return Err(Error::InvalidParams("floor must lie in (0, 1e-3]"));
    }
    Ok(())
}

/// Local momentum `Im(psi* psi') / |psi|^2` with an amplitude-floor mask.
pub fn local_momentum(field: &WaveField, floor: f64) -> Result<LocalMomentumField> {
    check_floor(floor)?;
    let deriv = field.spectral_derivative();
    let amps = field.amplitudes();
    let peak = amps.iter().map(|z| z.norm_sqr()).fold(0.0_f64, f64::max);
    let cut = floor * peak;
    let mut values = Vec::with_capacity(amps.len());
    let mut valid = Vec::with_capacity(amps.len());
    for (z, d) in amps.iter().zip(&deriv) {
        let dens = z.norm_sqr();
        if dens >= cut {
            values.push((z.conj() * d).im / dens);
            valid.push(true);
        } else {
            values.push(0.0);
            valid.push(false);
        }
    }
    Ok(LocalMomentumField {
        grid: Arc::clone(field.grid()),
        time: field.time(),
        values,
        valid,
    })
}

/// Which side of the spectral band an extremum sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremumKind {
    /// Local momentum above the whole spectral band.
    Super,
    /// Local momentum below the whole spectral band.
    Sub,
}

/// One located local-momentum extremum with the quantities of interest at
/// its position.
#[derive(Clone, Debug)]
pub struct ExtremumRecord {
    pub kind: ExtremumKind,
    pub kappa_over_kappa0: f64,
    pub x_at: f64,
    pub t: f64,
    /// `|psi(x_at, t)|^2`.
    pub density_at: f64,
    /// `log10 |phi0(kappa_ext)|^2`; kept in log form because tail weights
    /// reach 1e-123.
    pub spectrum_weight_log10: f64,
    /// `sqrt(spectrum_weight / density_at)`.
    pub weight_ratio: f64,
}

/// The super/sub pair of one field snapshot.
#[derive(Clone, Debug)]
pub struct ExtremaPair {
    pub superosc: ExtremumRecord,
    pub subosc: ExtremumRecord,
}

fn build_record(
    params: &SynthesisParams,
    kind: ExtremumKind,
    kappa: f64,
    x_at: f64,
    t: f64,
) -> Result<ExtremumRecord> {
    let (psi, _) = analytic_superband_point_with_derivative(params, x_at, t)?;
    let density_at = psi.norm_sqr();
    let weight_log10 = synthesis::spectrum_weight_log10(params, kappa)?;
    // ratio in log space: sqrt(w / rho) = 10^{(log10 w - log10 rho)/2}
    let ratio = 10.0_f64.powf(0.5 * (weight_log10 - density_at.log10()));
    Ok(ExtremumRecord {
        kind,
        kappa_over_kappa0: kappa / params.kappa0,
        x_at,
        t,
        density_at,
        spectrum_weight_log10: weight_log10,
        weight_ratio: ratio,
    })
}

/// Locates the global maximum and minimum of the local momentum over the
/// valid mask, refines each by a 5-point quadratic fit, and fills in the
/// densities and spectrum weights at the refined positions.
///
/// Fails with [`Error::NoExtremum`] when the maximum does not exceed the
/// carrier (a plain Gaussian's local momentum is affine and has no interior
/// super/sub pair).
pub fn find_special_momenta(
    field: &WaveField,
    params: &SynthesisParams,
    floor: f64,
) -> Result<ExtremaPair> {
    let kl = local_momentum(field, floor)?;
    let (jmax, vmax, jmin, vmin) = kl.masked_extrema().ok_or(Error::NoExtremum)?;
    if vmax <= params.kappa0 || vmin >= params.kappa0 {
        return Err(Error::NoExtremum);
    }
    // a monotone (affine) profile attains its masked max/min at the mask
    // edge; only interior local extrema count
    let interior_max = jmax > 0
        && jmax + 1 < kl.values().len()
        && kl.valid()[jmax - 1]
        && kl.valid()[jmax + 1]
        && kl.values()[jmax] >= kl.values()[jmax - 1]
        && kl.values()[jmax] >= kl.values()[jmax + 1];
    let interior_min = jmin > 0
        && jmin + 1 < kl.values().len()
        && kl.valid()[jmin - 1]
        && kl.valid()[jmin + 1]
        && kl.values()[jmin] <= kl.values()[jmin - 1]
        && kl.values()[jmin] <= kl.values()[jmin + 1];
    if !interior_max || !interior_min {
        return Err(Error::NoExtremum);
    }
    let grid = field.grid();
    let refine = |j: usize| -> (f64, f64) {
        if j < 2 || j + 2 >= grid.len() {
            return (grid.x(j), kl.values()[j]);
        }
        let window = [
            kl.values()[j - 2],
            kl.values()[j - 1],
            kl.values()[j],
            kl.values()[j + 1],
            kl.values()[j + 2],
        ];
        let (offset, value) = refine_extremum(&window);
        (grid.x(j) + offset * grid.dx(), value)
    };
    let (x_super, k_super) = refine(jmax);
    let (x_sub, k_sub) = refine(jmin);
    Ok(ExtremaPair {
        superosc: build_record(params, ExtremumKind::Super, k_super, x_super, field.time())?,
        subosc: build_record(params, ExtremumKind::Sub, k_sub, x_sub, field.time())?,
    })
}

/// Grid-free counterpart of [`find_special_momenta`]: scans the analytic
/// field on a window of half-width `half_span` around the carrier position
/// `v t` and refines both extrema. Used where no spectral grid exists
/// (trajectory tagging, the critical-depth bisection).
pub fn analytic_special_momenta(
    params: &SynthesisParams,
    t: f64,
    half_span: f64,
    samples: usize,
) -> Result<ExtremaPair> {
    if samples < 16 {
        return Err(Error::InvalidParams("analytic scan needs >= 16 samples"));
    }
    let center = params.carrier_velocity() * t;
    let step = 2.0 * half_span / (samples - 1) as f64;
    let mut kl = Vec::with_capacity(samples);
    let mut dens = Vec::with_capacity(samples);
    for i in 0..samples {
        let x = center - half_span + i as f64 * step;
        let (p, d) = analytic_superband_point_with_derivative(params, x, t)?;
        dens.push(p.norm_sqr());
        kl.push((p.conj() * d).im / p.norm_sqr());
    }
    let peak = dens.iter().fold(0.0_f64, |a, &b| a.max(b));
    let cut = DEFAULT_FLOOR * peak;
    let mut jmax = None;
    let mut jmin = None;
    for (j, (&v, &rho)) in kl.iter().zip(&dens).enumerate() {
        if rho < cut {
            continue;
        }
        if jmax.map_or(true, |i: usize| v > kl[i]) {
            jmax = Some(j);
        }
        if jmin.map_or(true, |i: usize| v < kl[i]) {
            jmin = Some(j);
        }
    }
    let (jmax, jmin) = (jmax.ok_or(Error::NoExtremum)?, jmin.ok_or(Error::NoExtremum)?);
    if kl[jmax] <= params.kappa0 || kl[jmin] >= params.kappa0 {
        return Err(Error::NoExtremum);
    }
    let interior = |j: usize, is_max: bool| -> bool {
        j > 0
            && j + 1 < samples
            && dens[j - 1] >= cut
            && dens[j + 1] >= cut
            && if is_max {
                kl[j] >= kl[j - 1] && kl[j] >= kl[j + 1]
            } else {
                kl[j] <= kl[j - 1] && kl[j] <= kl[j + 1]
            }
    };
    if !interior(jmax, true) || !interior(jmin, false) {
        return Err(Error::NoExtremum);
    }
    let refine = |j: usize| -> (f64, f64) {
        let x_of = |i: usize| center - half_span + i as f64 * step;
        if j < 2 || j + 2 >= samples {
            return (x_of(j), kl[j]);
        }
        let window = [kl[j - 2], kl[j - 1], kl[j], kl[j + 1], kl[j + 2]];
        let (offset, value) = refine_extremum(&window);
        (x_of(j) + offset * step, value)
    };
    let (x_super, k_super) = refine(jmax);
    let (x_sub, k_sub) = refine(jmin);
    Ok(ExtremaPair {
        superosc: build_record(params, ExtremumKind::Super, k_super, x_super, t)?,
        subosc: build_record(params, ExtremumKind::Sub, k_sub, x_sub, t)?,
    })
}

/// Probability current `J = (hbar/m) Im(psi* psi')` on the grid.
pub fn probability_current(field: &WaveField, params: &SynthesisParams) -> Vec<f64> {
    let deriv = field.spectral_derivative();
    let c = params.hbar / params.mass;
    field
        .amplitudes()
        .iter()
        .zip(&deriv)
        .map(|(z, d)| c * (z.conj() * d).im)
        .collect()
}

/// Sup-norm residual of the continuity equation `d rho/dt + dJ/dx = 0` at
/// time `t`, with the time derivative taken by a centered difference of
/// exactly propagated snapshots (step `dt_fd`) and the spatial derivative
/// taken spectrally. Second-order in `dt_fd`.
pub fn continuity_residual(
    spectrum0: &MomentumSpectrum,
    params: &SynthesisParams,
    t: f64,
    dt_fd: f64,
) -> Result<f64> {
    if !(dt_fd > 0.0) {
        return Err(Error::InvalidParams("dt_fd must be positive"));
    }
    let grid = spectrum0.grid();
    let minus = spectrum0.propagate(params, t - dt_fd)?;
    let plus = spectrum0.propagate(params, t + dt_fd)?;
    let now = spectrum0.propagate(params, t)?;
    let current = probability_current(&now, params);
    let div_j = grid.derivative_of_samples(&current);
    let mut worst = 0.0_f64;
    for j in 0..grid.len() {
        let drho_dt = (plus.amplitudes()[j].norm_sqr() - minus.amplitudes()[j].norm_sqr())
            / (2.0 * dt_fd);
        worst = worst.max((drho_dt + div_j[j]).abs());
    }
    Ok(worst)
}

/// One plane's flux accounting over a time window, via both routes.
#[derive(Clone, Debug)]
pub struct FluxReport {
    /// Plane position after snapping to the nearest grid node.
    pub x_plane: f64,
    pub t_initial: f64,
    pub t_final: f64,
    /// Simpson time quadrature of `J(x_plane, t)`.
    pub by_current: f64,
    /// Difference of cumulative probabilities up to the plane.
    pub by_probability: f64,
    /// Number of Simpson panels used.
    pub samples: usize,
}

/// Cumulative probability up to grid node `ip`: trapezoid plus the
/// Euler–Maclaurin endpoint correction `-dx^2/12 rho'`, with `rho'` from
/// the spectral derivative (`rho' = 2 Re(psi* psi')`).
fn cumulative_probability(field: &WaveField, deriv: &[num_complex::Complex64], ip: usize) -> f64 {
    let grid = field.grid();
    let amps = field.amplitudes();
    let mut total = kahan_sum((0..=ip).map(|j| {
        let w = if j == 0 || j == ip { 0.5 } else { 1.0 };
        w * amps[j].norm_sqr()
    })) * grid.dx();
    let drho = 2.0 * (amps[ip].conj() * deriv[ip]).re;
    total -= grid.dx() * grid.dx() / 12.0 * drho;
    total
}

/// Time-integrated probability flux through the plane nearest `x_plane`,
/// computed along both lines of the flux identity and cross-checked.
pub fn probability_flux(
    spectrum0: &MomentumSpectrum,
    params: &SynthesisParams,
    x_plane: f64,
    t_initial: f64,
    t_final: f64,
    n_quad: usize,
) -> Result<FluxReport> {
    if !(t_initial <= t_final) {
        return Err(Error::InvalidParams("t_initial must not exceed t_final"));
    }
    if n_quad < 64 {
        return Err(Error::InvalidParams("need at least 64 quadrature panels"));
    }
    let panels = n_quad + n_quad % 2;
    let grid = spectrum0.grid();
    let ip = grid.index_of(x_plane);
    let snapped = grid.x(ip);

    let h = (t_final - t_initial) / panels as f64;
    let current_at = |t: f64| -> Result<f64> {
        let (field, deriv) = spectrum0.propagate_with_derivative(params, t)?;
        Ok(params.hbar / params.mass * (field.amplitudes()[ip].conj() * deriv[ip]).im)
    };
    let mut simpson = current_at(t_initial)? + current_at(t_final)?;
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        simpson += w * current_at(t_initial + k as f64 * h)?;
    }
    let by_current = simpson * h / 3.0;

    let (field_i, deriv_i) = spectrum0.propagate_with_derivative(params, t_initial)?;
    let (field_f, deriv_f) = spectrum0.propagate_with_derivative(params, t_final)?;
    let by_probability =
        cumulative_probability(&field_i, &deriv_i, ip) - cumulative_probability(&field_f, &deriv_f, ip);

    if (by_current - by_probability).abs() > FLUX_ROUTE_TOL {
        return Err(Error::FluxRouteMismatch {
            by_current,
            by_probability,
        });
    }
    Ok(FluxReport {
        x_plane: snapped,
        t_initial,
        t_final,
        by_current,
        by_probability,
        samples: panels,
    })
}

/// Flux difference between two planes and the interval-probability balance.
#[derive(Clone, Debug)]
pub struct FluxDifference {
    pub left: FluxReport,
    pub right: FluxReport,
    /// `F(x_left) - F(x_right)`; positive means probability accumulates
    /// between the planes (localization), negative means it drains.
    pub delta: f64,
    /// Probability between the planes at the window start / end.
    pub p_initial: f64,
    pub p_final: f64,
}

/// Computes both plane fluxes and the interval probability at the window
/// ends; `delta = p_final - p_initial` up to the route tolerance.
pub fn flux_difference(
    spectrum0: &MomentumSpectrum,
    params: &SynthesisParams,
    x_left: f64,
    x_right: f64,
    t_initial: f64,
    t_final: f64,
    n_quad: usize,
) -> Result<FluxDifference> {
    if !(x_left < x_right) {
        return Err(Error::InvalidParams("x_left must be below x_right"));
    }
    let left = probability_flux(spectrum0, params, x_left, t_initial, t_final, n_quad)?;
    let right = probability_flux(spectrum0, params, x_right, t_initial, t_final, n_quad)?;
    let delta = left.by_current - right.by_current;
    let p_initial = interval_probability(
        &spectrum0.propagate(params, t_initial)?,
        left.x_plane,
        right.x_plane,
    )?;
    let p_final = interval_probability(
        &spectrum0.propagate(params, t_final)?,
        left.x_plane,
        right.x_plane,
    )?;
    Ok(FluxDifference {
        left,
        right,
        delta,
        p_initial,
        p_final,
    })
}

/// Trapezoidal probability mass on `[x_left, x_right]` (both snapped to
/// grid nodes).
pub fn interval_probability(field: &WaveField, x_left: f64, x_right: f64) -> Result<f64> {
    if !(x_left <= x_right) {
        return Err(Error::InvalidParams("interval bounds out of order"));
    }
    let grid = field.grid();
    let (i, j) = (grid.index_of(x_left), grid.index_of(x_right));
    if i == j {
        return Ok(0.0);
    }
    let amps = field.amplitudes();
    let total = kahan_sum((i..=j).map(|n| {
        let w = if n == i || n == j { 0.5 } else { 1.0 };
        w * amps[n].norm_sqr()
    })) * grid.dx();
    Ok(total.clamp(0.0, 1.0))
}

/// Mean and standard deviation of the position density.
pub fn position_moments(field: &WaveField) -> (f64, f64) {
    let grid = field.grid();
    let dens = field.density();
    let mean = kahan_sum(dens.iter().enumerate().map(|(j, &d)| grid.x(j) * d)) * grid.dx();
    let var = kahan_sum(dens.iter().enumerate().map(|(j, &d)| {
        let dxm = grid.x(j) - mean;
        dxm * dxm * d
    })) * grid.dx();
    (mean, var.sqrt())
}

/// Mean and standard deviation of the momentum density.
pub fn momentum_moments(spectrum: &MomentumSpectrum) -> (f64, f64) {
    let grid = spectrum.grid();
    let dens = spectrum.density();
    let mean =
        kahan_sum(dens.iter().enumerate().map(|(k, &d)| grid.kappa(k) * d)) * grid.dkappa();
    let var = kahan_sum(dens.iter().enumerate().map(|(k, &d)| {
        let dk = grid.kappa(k) - mean;
        dk * dk * d
    })) * grid.dkappa();
    (mean, var.sqrt())
}

/// Free-spreading law for a Gaussian packet of initial position spread
/// `dx0` (standard deviation): `dx_t = dx0 sqrt(1 + (hbar t / (2 m dx0^2))^2)`.
pub fn gaussian_spread(dx0: f64, t: f64, mass: f64, hbar: f64) -> f64 {
    let r = hbar * t / (2.0 * mass * dx0 * dx0);
    dx0 * (1.0 + r * r).sqrt()
}

/// Interference time from explicit spreads: `m dx / dp`.
pub fn interference_time(dx: f64, dp: f64, mass: f64) -> f64 {
    mass * dx / dp
}

/// Interference time with the `dx dp = hbar` substitution: `m dx^2 / hbar`.
pub fn interference_time_from_width(dx: f64, mass: f64, hbar: f64) -> f64 {
    mass * dx * dx / hbar
}

/// Result of the asymptotic shape comparison.
#[derive(Clone, Debug)]
pub struct ShapeCheck {
    /// Pearson correlation between the late-time density (read as a
    /// function of `kappa = m x / (hbar t)`) and the momentum density.
    pub correlation: f64,
    /// False when `t` is below ten interference times; the comparison is
    /// then made outside its regime of validity.
    pub asymptotic: bool,
}

/// Correlates the density at `t_large` against the momentum density under
/// the stationary-phase map `kappa(x) = m x / (hbar t_large)`, over the
/// region holding all but 1e-6 of the peak density.
pub fn asymptotic_shape_check(
    spectrum0: &MomentumSpectrum,
    params: &SynthesisParams,
    t_large: f64,
) -> Result<ShapeCheck> {
    if !(t_large > 0.0) {
        return Err(Error::InvalidParams("t_large must be positive"));
    }
    let grid = spectrum0.grid();
    let field = spectrum0.propagate(params, t_large)?;
    let dens = field.density();
    let peak = dens.iter().fold(0.0_f64, |a, &b| a.max(b));
    let cut = 1e-6 * peak;
    let mut observed = Vec::new();
    let mut target = Vec::new();
    let n = synthesis::normalization_constant(params)?;
    for (j, &d) in dens.iter().enumerate() {
        if d < cut {
            continue;
        }
        let kappa = params.mass * grid.x(j) / (params.hbar * t_large);
        let u = (kappa - params.kappa0) / params.delta_kappa;
        let phi = ((-u * u).exp() - params.alpha * (-4.0 * u * u).exp()) / n;
        observed.push(d);
        target.push(phi * phi);
    }
    if observed.len() < 8 {
        return Err(Error::NoExtremum);
    }
    let t_i = interference_time_from_width(1.0 / params.delta_kappa, params.mass, params.hbar);
    Ok(ShapeCheck {
        correlation: pearson(&observed, &target),
        asymptotic: t_large >= 10.0 * t_i,
    })
}

/// Least-squares slope of the local momentum across the interference lobe —
/// the stretch between the sub- and super-extremum positions, with 20%
/// trimmed off each end so the fit sees the linear core, not the extrema
/// themselves.
pub fn lobe_slope(params: &SynthesisParams, t: f64) -> Result<f64> {
    let pair = analytic_special_momenta(params, t, 48.0, 65_537)?;
    let (a, b) = if pair.subosc.x_at < pair.superosc.x_at {
        (pair.subosc.x_at, pair.superosc.x_at)
    } else {
        (pair.superosc.x_at, pair.subosc.x_at)
    };
    let span = b - a;
    let lo = a + 0.2 * span;
    let hi = b - 0.2 * span;
    let n = 2001_usize;
    let step = (hi - lo) / (n - 1) as f64;
    // accumulate the normal equations for kl ~ c0 + c1 x
    let (mut sx, mut sxx, mut sy, mut sxy) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..n {
        let x = lo + i as f64 * step;
        let (p, d) = analytic_superband_point_with_derivative(params, x, t)?;
        let kl = (p.conj() * d).im / p.norm_sqr();
        sx += x;
        sxx += x * x;
        sy += kl;
        sxy += x * kl;
    }
    let nf = n as f64;
    Ok((nf * sxy - sx * sy) / (nf * sxx - sx * sx))
}

/// Bisects the sign change of [`lobe_slope`] in depth, starting from the
/// bracket `(1, 1.8)`; returns the critical depth to 1e-4.
pub fn critical_alpha(params: &SynthesisParams, t_probe: f64) -> Result<f64> {
    if !(t_probe > 0.0) {
        return Err(Error::InvalidParams("t_probe must be positive"));
    }
    let slope_at = |alpha: f64| -> Result<f64> {
        let p = SynthesisParams {
            alpha,
            ..params.clone()
        };
        lobe_slope(&p, t_probe)
    };
    let (mut lo, mut hi) = (1.0_f64, 1.8_f64);
    let s_lo = slope_at(lo)?;
    let s_hi = slope_at(hi)?;
    if (s_lo > 0.0) == (s_hi > 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        let s_mid = slope_at(mid)?;
        if (s_mid > 0.0) == (s_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
