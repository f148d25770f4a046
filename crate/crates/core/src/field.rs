//! Real periodic fields on the unit torus, their spectra, and the
//! vorticity-to-velocity inversion.

use std::sync::OnceLock;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::spectral;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Real scalar field sampled at the grid nodes, with lazily cached spectrum
/// and shift autocorrelation. Fields are immutable after construction, so
/// they are safe to share across threads; the caches fill idempotently on
/// first access.
#[derive(Debug)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
    spectrum: OnceLock<Spectrum>,
    autocorr: OnceLock<Vec<f64>>,
}

impl Clone for ScalarField {
    fn clone(&self) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.clone(),
            spectrum: self.spectrum.clone(),
            autocorr: self.autocorr.clone(),
        }
    }
}

impl ScalarField {
    /// Build a field from row-major samples; every value must be finite.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} samples for N={}, got {}",
                grid.len(),
                grid.n(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidField("non-finite sample values".into()));
        }
        Ok(ScalarField {
            grid,
            values,
            spectrum: OnceLock::new(),
            autocorr: OnceLock::new(),
        })
    }

    /// Sample a closure f(x1, x2) at the grid nodes.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: GridSpec, f: F) -> Result<Self> {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            for j in 0..n {
                let x = grid.node(i, j);
                values.push(f(x[0], x[1]));
            }
        }
        Self::from_values(grid, values)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        Self::from_values(grid, vec![c; grid.len()])
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_values(grid, vec![0.0; grid.len()]).expect("zeros are finite")
    }

    /// Synthesize the field whose coefficients are `spectrum`; the input must
    /// be Hermitian-symmetric (it describes a real field).
    pub fn from_spectrum(spectrum: Spectrum) -> Result<Self> {
        let defect = spectrum.hermitian_defect();
        let scale = spectrum.max_abs();
        if defect > 1e-12 * (1.0 + scale) {
            return Err(Error::Precondition(format!(
                "spectrum is not Hermitian-symmetric (defect {defect:.3e}); it does not describe a real field"
            )));
        }
        let n = spectrum.grid.n();
        let synth = spectral::synthesis_of(&spectrum.coeffs, n);
        let values: Vec<f64> = synth.iter().map(|c| c.re).collect();
        let field = Self::from_values(spectrum.grid, values)?;
        let _ = field.spectrum.set(spectrum);
        Ok(field)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    /// Grid mean, which equals the k = 0 Fourier coefficient.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// A field counts as zero-mean when |û(0)| stays below 1e-13 relative to
    /// its magnitude.
    pub fn is_zero_mean(&self) -> bool {
        self.mean().abs() <= 1e-13 * (1.0 + self.max_abs())
    }

    /// Fourier coefficients û(k), computed once and cached.
    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| Spectrum {
            grid: self.grid,
            coeffs: spectral::coefficients_of(&self.values, self.grid.n()),
        })
    }

    fn autocorr_values(&self) -> &[f64] {
        self.autocorr.get_or_init(|| {
            let s = self.spectrum();
            let n = self.grid.n();
            let power: Vec<Complex64> = s
                .coeffs
                .iter()
                .map(|c| Complex64::new(c.norm_sqr(), 0.0))
                .collect();
            spectral::synthesis_of(&power, n)
                .iter()
                .map(|c| c.re)
                .collect()
        })
    }

    /// Shift autocorrelation C_f(z) = ∫ f(x+z) f(x) dx sampled at the grid
    /// displacements, computed spectrally (exact for the grid quadrature).
    /// C_f(0) = ‖f‖²_{L²} and C_f(z) = C_f(−z).
    pub fn autocorrelation(&self) -> ScalarField {
        let values = self.autocorr_values().to_vec();
        ScalarField::from_values(self.grid, values).expect("autocorrelation is finite")
    }

    /// ‖f(·+z) − f‖²_{L²} for the lattice displacement z = (a, b)/N, evaluated
    /// as 2(C_f(0) − C_f(z)).
    pub fn shift_l2_difference(&self, a: usize, b: usize) -> f64 {
        let ac = self.autocorr_values();
        let d = 2.0 * (ac[0] - ac[self.grid.idx(a % self.n(), b % self.n())]);
        d.max(0.0)
    }

    /// Grid quadrature of (∫ |f|^p)^{1/p}; `p = f64::INFINITY` gives the max
    /// norm. Requires p ≥ 1.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("Lp norm requires p >= 1, got {p}")));
        }
        if p.is_infinite() {
            return Ok(self.max_abs());
        }
        let cell = 1.0 / self.values.len() as f64;
        let sum: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        Ok((cell * sum).powf(1.0 / p))
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0).expect("p=2 is valid")
    }

    /// Bilinear interpolation at an arbitrary torus point.
    pub fn bilinear_at(&self, x1: f64, x2: f64) -> f64 {
        let n = self.n();
        let nf = n as f64;
        let p = GridSpec::wrap_coord(x1) * nf;
        let q = GridSpec::wrap_coord(x2) * nf;
        let i0 = p.floor() as usize % n;
        let j0 = q.floor() as usize % n;
        let i1 = (i0 + 1) % n;
        let j1 = (j0 + 1) % n;
        let s = p - p.floor();
        let t = q - q.floor();
        let v00 = self.value(i0, j0);
        let v01 = self.value(i0, j1);
        let v10 = self.value(i1, j0);
        let v11 = self.value(i1, j1);
        v00 * (1.0 - s) * (1.0 - t) + v01 * (1.0 - s) * t + v10 * s * (1.0 - t) + v11 * s * t
    }

    pub fn scaled(&self, factor: f64) -> ScalarField {
        let values = self.values.iter().map(|v| v * factor).collect();
        ScalarField::from_values(self.grid, values).expect("scaling preserves finiteness")
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        if self.grid != other.grid {
            return Err(Error::Mismatch("fields live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a - b)
            .collect();
        ScalarField::from_values(self.grid, values)
    }
}

/// Fourier coefficients û(k) of a real field, in the standard signed FFT
/// layout (bin i ↦ frequency i for i < N/2, i−N otherwise).
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: GridSpec) -> Self {
        Spectrum {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    /// Assemble a spectrum from explicit (k1, k2, û) modes. The caller is
    /// responsible for Hermitian pairing when a real field is intended.
    pub fn from_modes(grid: GridSpec, modes: &[(i64, i64, Complex64)]) -> Result<Self> {
        let half = grid.n() as i64 / 2;
        let mut s = Spectrum::zeros(grid);
        for &(k1, k2, c) in modes {
            if k1 < -half || k1 > half || k2 < -half || k2 > half {
                return Err(Error::Domain(format!(
                    "mode ({k1},{k2}) outside |k_i| <= {half}"
                )));
            }
            let idx = grid.idx(grid.bin(k1), grid.bin(k2));
            s.coeffs[idx] += c;
        }
        Ok(s)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at the signed mode (k1, k2).
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        self.coeffs[self.grid.idx(self.grid.bin(k1), self.grid.bin(k2))]
    }

    pub fn mean_coeff(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Σ_k |û(k)|², which by Parseval equals ‖f‖²_{L²}.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Iterate (k1, k2, û(k)) over every stored mode.
    pub fn iter_modes(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        let n = self.grid.n();
        let grid = self.grid;
        self.coeffs.iter().enumerate().map(move |(idx, &c)| {
            let i = idx / n;
            let j = idx % n;
            (grid.freq(i), grid.freq(j), c)
        })
    }

    /// Max |û(−k) − conj(û(k))| over all modes; zero for real fields.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mi = (n - i) % n;
                let mj = (n - j) % n;
                let a = self.coeffs[self.grid.idx(i, j)];
                let b = self.coeffs[self.grid.idx(mi, mj)];
                defect = defect.max((b - a.conj()).norm());
            }
        }
        defect
    }

    /// Spectral partial derivative ∂_axis f; the unpaired Nyquist line is
    /// zeroed so real fields stay real.
    pub fn derivative(&self, axis: usize) -> Spectrum {
        assert!(axis < 2, "axis must be 0 or 1");
        let n = self.grid.n();
        let mut out = Spectrum::zeros(self.grid);
        for i in 0..n {
            let k1 = self.grid.freq(i);
            for j in 0..n {
                let k2 = self.grid.freq(j);
                if i == n / 2 || j == n / 2 {
                    continue;
                }
                let k = if axis == 0 { k1 } else { k2 };
                let idx = self.grid.idx(i, j);
                out.coeffs[idx] =
                    self.coeffs[idx] * Complex64::new(0.0, TWO_PI * k as f64);
            }
        }
        out
    }

    /// Re-express the spectrum on an N'-grid. Downsampling requires the
    /// discarded band to be empty (relative magnitude below 1e-13); this is
    /// how one and the same band-limited function is carried across
    /// resolutions for convergence studies.
    pub fn resample(&self, n_new: usize) -> Result<Spectrum> {
        let new_grid = GridSpec::new(n_new)?;
        let half_new = n_new as i64 / 2;
        let scale = self.max_abs();
        let mut out = Spectrum::zeros(new_grid);
        for (k1, k2, c) in self.iter_modes() {
            if k1.abs() >= half_new || k2.abs() >= half_new {
                if c.norm() > 1e-13 * (1.0 + scale) {
                    return Err(Error::Domain(format!(
                        "mode ({k1},{k2}) carries energy {:.3e} outside the N={} band",
                        c.norm(),
                        n_new
                    )));
                }
                continue;
            }
            let idx = new_grid.idx(new_grid.bin(k1), new_grid.bin(k2));
            out.coeffs[idx] = c;
        }
        Ok(out)
    }
}

/// Two-component divergence-free velocity field. Produced by
/// [`biot_savart`]; both components are zero-mean.
#[derive(Debug, Clone)]
pub struct VelocityField {
    u1: ScalarField,
    u2: ScalarField,
}

impl VelocityField {
    pub fn zeros(grid: GridSpec) -> Self {
        VelocityField {
            u1: ScalarField::zeros(grid),
            u2: ScalarField::zeros(grid),
        }
    }

    #[cfg(test)]
    pub(crate) fn from_components(u1: ScalarField, u2: ScalarField) -> Self {
        VelocityField { u1, u2 }
    }

    pub fn grid(&self) -> GridSpec {
        self.u1.grid()
    }

    pub fn u1(&self) -> &ScalarField {
        &self.u1
    }

    pub fn u2(&self) -> &ScalarField {
        &self.u2
    }

    /// Max pointwise speed, the quantity entering the CFL bound.
    pub fn max_speed(&self) -> f64 {
        self.u1
            .values()
            .iter()
            .zip(self.u2.values().iter())
            .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }

    /// Max over modes of |k·û(k)| / |û(k)|, skipping negligible modes.
    pub fn divergence_defect(&self) -> f64 {
        let s1 = self.u1.spectrum();
        let s2 = self.u2.spectrum();
        let scale = s1.max_abs().max(s2.max_abs());
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for ((k1, k2, a), (_, _, b)) in s1.iter_modes().zip(s2.iter_modes()) {
            let mag = (a.norm_sqr() + b.norm_sqr()).sqrt();
            if mag <= 1e-14 * scale {
                continue;
            }
            let div = (a * k1 as f64 + b * k2 as f64).norm();
            worst = worst.max(div / mag);
        }
        worst
    }

    pub fn is_divergence_free(&self, tol: f64) -> bool {
        self.divergence_defect() <= tol
    }

    /// Scalar vorticity of the velocity field, in the orientation for which
    /// `vorticity(biot_savart(ω)) = ω`.
    pub fn vorticity(&self) -> Spectrum {
        let s1 = self.u1.spectrum();
        let s2 = self.u2.spectrum();
        let grid = s1.grid();
        let n = grid.n();
        let mut out = Spectrum::zeros(grid);
        for i in 0..n {
            let k1 = grid.freq(i) as f64;
            for j in 0..n {
                if i == n / 2 || j == n / 2 {
                    continue;
                }
                let k2 = grid.freq(j) as f64;
                let idx = grid.idx(i, j);
                let curl = (s1.coeffs[idx] * k2 - s2.coeffs[idx] * k1)
                    * Complex64::new(0.0, TWO_PI);
                out.coeffs[idx] = curl;
            }
        }
        out
    }
}

/// Velocity recovery u = ∇⊥(−Δ)⁻¹ω: û(k) = i k⊥ ω̂(k) / (2π|k|²) with
/// k⊥ = (−k₂, k₁). Requires zero-mean vorticity; the unpaired Nyquist line
/// is zeroed.
pub fn biot_savart(omega: &Spectrum) -> Result<VelocityField> {
    let scale = omega.max_abs();
    if omega.mean_coeff().norm() > 1e-12 * (1.0 + scale) {
        return Err(Error::Precondition(
            "vorticity must have zero mean: the inverse Laplacian is undefined on the k=0 mode"
                .into(),
        ));
    }
    let grid = omega.grid();
    let n = grid.n();
    let mut c1 = vec![Complex64::default(); grid.len()];
    let mut c2 = vec![Complex64::default(); grid.len()];
    for i in 0..n {
        let k1 = grid.freq(i) as f64;
        for j in 0..n {
            if (i == 0 && j == 0) || i == n / 2 || j == n / 2 {
                continue;
            }
            let k2 = grid.freq(j) as f64;
            let ksq = k1 * k1 + k2 * k2;
            let idx = grid.idx(i, j);
            let w = omega.coeffs[idx];
            let factor = Complex64::new(0.0, 1.0 / (TWO_PI * ksq));
            c1[idx] = factor * (-k2) * w;
            c2[idx] = factor * k1 * w;
        }
    }
    let u1 = ScalarField::from_spectrum(Spectrum { grid, coeffs: c1 })?;
    let u2 = ScalarField::from_spectrum(Spectrum { grid, coeffs: c2 })?;
    Ok(VelocityField { u1, u2 })
}
