//! Discretization of R^n with space/frequency lattices commensurate with
//! the integer lattice and the unit cube, plus Fourier transforms in the
//! non-unitary convention (forward carries no prefactor, inverse carries
//! `(2 pi)^{-n}`).
//!
//! Transforms are dense quadrature sums, not periodic FFTs: the 2 pi
//! torus is incommensurate with the integer lattices needed by the
//! amalgam and modulation norms, and at desk scale (n = 1, a few hundred
//! points per axis) the O(N^2) apply is cheap.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{par_collect, seq_collect};

/// Relative spectral-energy cap for a declared Fourier-support radius.
pub const FSUPP_LEAK_CAP: f64 = 1e-8;

/// One sampled axis: `[-halfwidth, halfwidth)` with step `1/inv_step`.
///
/// Both parameters are integers so that unit cubes and integer translates
/// land exactly on sample points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisSpec {
    halfwidth: u32,
    inv_step: u32,
}

impl AxisSpec {
    pub fn new(halfwidth: u32, inv_step: u32) -> Result<Self> {
        if halfwidth == 0 || inv_step == 0 {
            return Err(Error::Grid(format!(
                "axis halfwidth and 1/step must be positive integers, got ({halfwidth}, {inv_step})"
            )));
        }
        Ok(AxisSpec { halfwidth, inv_step })
    }

    /// Validates that `halfwidth` is a positive integer and `1/step` is a
    /// positive integer (the commensurability invariants).
    pub fn from_reals(halfwidth: f64, step: f64) -> Result<Self> {
        if !(halfwidth > 0.0) || !(step > 0.0) {
            return Err(Error::Grid(format!(
                "axis halfwidth {halfwidth} and step {step} must be positive"
            )));
        }
        if (halfwidth.round() - halfwidth).abs() > 1e-9 {
            return Err(Error::Grid(format!(
                "axis halfwidth {halfwidth} is not an integer"
            )));
        }
        let inv = 1.0 / step;
        if (inv.round() - inv).abs() > 1e-9 {
            return Err(Error::Grid(format!(
                "1/step = {inv} is not an integer (step {step} not commensurate with the unit cube)"
            )));
        }
        AxisSpec::new(halfwidth.round() as u32, inv.round() as u32)
    }

    pub fn halfwidth(&self) -> f64 {
        f64::from(self.halfwidth)
    }

    pub fn halfwidth_int(&self) -> i64 {
        i64::from(self.halfwidth)
    }

    pub fn step(&self) -> f64 {
        1.0 / f64::from(self.inv_step)
    }

    /// Samples per unit length (the number of grid points in one cube side).
    pub fn samples_per_unit(&self) -> usize {
        self.inv_step as usize
    }

    /// Number of sample points: `2 * halfwidth * inv_step`, always even.
    pub fn len(&self) -> usize {
        2 * self.halfwidth as usize * self.inv_step as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.halfwidth() + i as f64 * self.step()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.coord(i)).collect()
    }

    /// Exact index of an on-lattice coordinate, if it lies in the axis window.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let raw = (t + self.halfwidth()) * f64::from(self.inv_step);
        let idx = raw.round();
        if (raw - idx).abs() > 1e-9 || idx < 0.0 || idx >= self.len() as f64 {
            None
        } else {
            Some(idx as usize)
        }
    }
}

/// Space/frequency sampling description for dimension `n` in {1, 2}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    space: AxisSpec,
    freq: AxisSpec,
}

/// Validated grid constructor; rejects non-commensurate steps.
pub fn make_grid(
    dim: usize,
    x_halfwidth: f64,
    x_step: f64,
    xi_halfwidth: f64,
    xi_step: f64,
) -> Result<GridSpec> {
    GridSpec::new(dim, x_halfwidth, x_step, xi_halfwidth, xi_step)
}

impl GridSpec {
    pub fn new(
        dim: usize,
        x_halfwidth: f64,
        x_step: f64,
        xi_halfwidth: f64,
        xi_step: f64,
    ) -> Result<Self> {
        if dim == 0 || dim > 2 {
            return Err(Error::Dim { dim, why: "fields support dimension 1 or 2" });
        }
        let space = AxisSpec::from_reals(x_halfwidth, x_step)?;
        let freq = AxisSpec::from_reals(xi_halfwidth, xi_step)?;
        for axis in [&space, &freq] {
            if axis.len() % 2 != 0 {
                return Err(Error::Grid(format!("axis count {} is odd", axis.len())));
            }
        }
        Ok(GridSpec { dim, space, freq })
    }

    /// The default desk-scale grid: n = 1, X = 16, h_x = 1/8, Xi = 8, h_xi = 1/8.
    pub fn desk_default() -> Self {
        GridSpec::new(1, 16.0, 0.125, 8.0, 0.125).expect("desk grid is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space_axis(&self) -> AxisSpec {
        self.space
    }

    pub fn freq_axis(&self) -> AxisSpec {
        self.freq
    }

    /// Total space sample count (`len_per_axis ^ dim`).
    pub fn space_len(&self) -> usize {
        self.space.len().pow(self.dim as u32)
    }

    pub fn freq_len(&self) -> usize {
        self.freq.len().pow(self.dim as u32)
    }

    /// Flattened coordinates, row-major over the axis product: entry `i`
    /// occupies `dim` consecutive slots.
    pub fn space_coords(&self) -> Vec<f64> {
        product_coords(&self.space, self.dim)
    }

    pub fn freq_coords(&self) -> Vec<f64> {
        product_coords(&self.freq, self.dim)
    }

    /// Aliasing-policy threshold: inputs to operators must be band-limited
    /// to half the frequency window.
    pub fn alias_limit(&self) -> f64 {
        self.freq.halfwidth() / 2.0
    }
}

fn product_coords(axis: &AxisSpec, dim: usize) -> Vec<f64> {
    let per = axis.coords();
    match dim {
        1 => per,
        2 => {
            let n = per.len();
            let mut out = Vec::with_capacity(2 * n * n);
            for a in &per {
                for b in &per {
                    out.push(*a);
                    out.push(*b);
                }
            }
            out
        }
        _ => unreachable!("dim validated at construction"),
    }
}

/// Which side of the transform a field's samples live on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Space,
    Frequency,
}

impl Domain {
    fn name(self) -> &'static str {
        match self {
            Domain::Space => "space",
            Domain::Frequency => "frequency",
        }
    }
}

/// Complex samples of a function on a grid, with an optional declared
/// Fourier-support radius.
///
/// A declared radius is checked, not assumed: declaring runs a spectral
/// leakage measurement and fails if more than [`FSUPP_LEAK_CAP`] of the
/// energy sits outside the ball.
///
/// Space-domain fields produced by the frequency-side pipeline (inverse
/// transform, multiplier application) remember the on-grid transform that
/// built them. Consumers use that hat instead of re-transforming, so
/// masked spectra stay exactly masked through chains of operations.
#[derive(Debug, Clone)]
pub struct SampledField {
    grid: GridSpec,
    domain: Domain,
    values: Vec<Complex64>,
    fsupp_radius: Option<f64>,
    hat: Option<Vec<Complex64>>,
}

impl SampledField {
    pub fn from_values(grid: GridSpec, domain: Domain, values: Vec<Complex64>) -> Result<Self> {
        let want = match domain {
            Domain::Space => grid.space_len(),
            Domain::Frequency => grid.freq_len(),
        };
        if values.len() != want {
            return Err(Error::Shape(format!(
                "{} field wants {} values, got {}",
                domain.name(),
                want,
                values.len()
            )));
        }
        Ok(SampledField { grid, domain, values, fsupp_radius: None, hat: None })
    }

    pub fn from_fn<F>(grid: GridSpec, domain: Domain, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let dim = grid.dim();
        let coords = match domain {
            Domain::Space => grid.space_coords(),
            Domain::Frequency => grid.freq_coords(),
        };
        let values = coords.chunks(dim).map(f).collect();
        SampledField { grid, domain, values, fsupp_radius: None, hat: None }
    }

    pub fn zeros(grid: GridSpec, domain: Domain) -> Self {
        let len = match domain {
            Domain::Space => grid.space_len(),
            Domain::Frequency => grid.freq_len(),
        };
        SampledField { grid, domain, values: vec![Complex64::new(0.0, 0.0); len], fsupp_radius: None, hat: None }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Mutable sample access. Mutating invalidates the remembered transform
    /// and any declared support radius.
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        self.hat = None;
        self.fsupp_radius = None;
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn fsupp_radius(&self) -> Option<f64> {
        self.fsupp_radius
    }

    /// The remembered on-grid transform, when this space field was built by
    /// the frequency-side pipeline.
    pub fn known_hat(&self) -> Option<&[Complex64]> {
        self.hat.as_deref()
    }

    pub(crate) fn with_known_hat(mut self, hat: Vec<Complex64>) -> Self {
        self.hat = Some(hat);
        self
    }

    /// Quadrature energy `h^n sum |f|^2` (space) or `h_xi^n sum |F|^2`
    /// (frequency).
    pub fn energy(&self) -> f64 {
        let w = self.quad_weight();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w
    }

    pub(crate) fn quad_weight(&self) -> f64 {
        let step = match self.domain {
            Domain::Space => self.grid.space_axis().step(),
            Domain::Frequency => self.grid.freq_axis().step(),
        };
        step.powi(self.grid.dim() as i32)
    }

    /// Declares (and checks) a Fourier-support radius.
    pub fn with_checked_fsupp(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Param(format!("fsupp radius {radius} must be positive")));
        }
        let leakage = spectral_leakage_field(&self, radius);
        if leakage >= FSUPP_LEAK_CAP {
            return Err(Error::BandLimit { radius, leakage, cap: FSUPP_LEAK_CAP });
        }
        self.fsupp_radius = Some(radius);
        Ok(self)
    }

    pub(crate) fn with_fsupp_unchecked(mut self, radius: f64) -> Self {
        self.fsupp_radius = Some(radius);
        self
    }

    pub fn clear_fsupp(mut self) -> Self {
        self.fsupp_radius = None;
        self
    }

    fn expect_domain(&self, want: Domain) -> Result<()> {
        if self.domain != want {
            return Err(Error::Domain { expected: want.name(), got: self.domain.name() });
        }
        Ok(())
    }
}

/// Builds the space-domain field whose on-grid transform equals `hat`,
/// carrying the exact on-grid support radius of `hat` as its declared
/// Fourier support.
pub fn field_from_hat(grid: GridSpec, hat: Vec<Complex64>) -> Result<SampledField> {
    let hat_field = SampledField::from_values(grid, Domain::Frequency, hat)?;
    let radius = value_support_radius(&hat_field);
    // fourier_inverse remembers the hat on the output.
    let f = fourier_inverse(&hat_field)?;
    Ok(f.with_fsupp_unchecked(radius.max(grid.freq_axis().step())))
}

/// Largest |xi| over nonzero samples of a frequency-domain field.
pub fn value_support_radius(m: &SampledField) -> f64 {
    let dim = m.grid().dim();
    let coords = m.grid().freq_coords();
    let mut r: f64 = 0.0;
    for (i, v) in m.values().iter().enumerate() {
        if v.norm_sqr() > 0.0 {
            let p = &coords[i * dim..(i + 1) * dim];
            let len = p.iter().map(|t| t * t).sum::<f64>().sqrt();
            r = r.max(len);
        }
    }
    r
}

// ---------------------------------------------------------------------------
// Dense quadrature transforms
// ---------------------------------------------------------------------------

/// Table of `exp(i x . xi)` over flattened coordinate lists.
pub(crate) fn phase_table(xs: &[f64], xis: &[f64], dim: usize) -> Vec<Complex64> {
    let nx = xs.len() / dim;
    let nxi = xis.len() / dim;
    par_collect(nx, |m| {
        let x = &xs[m * dim..(m + 1) * dim];
        let mut row = Vec::with_capacity(nxi);
        for j in 0..nxi {
            let xi = &xis[j * dim..(j + 1) * dim];
            let dot: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
            row.push(Complex64::from_polar(1.0, dot));
        }
        row
    })
    .into_iter()
    .flatten()
    .collect()
}

fn transform_sum(
    out_coords: &[f64],
    in_coords: &[f64],
    dim: usize,
    values: &[Complex64],
    sign: f64,
    weight: f64,
    sequential: bool,
) -> Vec<Complex64> {
    let n_out = out_coords.len() / dim;
    let n_in = in_coords.len() / dim;
    let body = |j: usize| {
        let out_p = &out_coords[j * dim..(j + 1) * dim];
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..n_in {
            let in_p = &in_coords[m * dim..(m + 1) * dim];
            let dot: f64 = out_p.iter().zip(in_p).map(|(a, b)| a * b).sum();
            acc += Complex64::from_polar(1.0, sign * dot) * values[m];
        }
        acc * weight
    };
    if sequential {
        seq_collect(n_out, body)
    } else {
        par_collect(n_out, body)
    }
}

/// Forward transform `F f(xi) = h^n sum_m exp(-i xi . x_m) f(x_m)` onto the
/// frequency grid. Fields that remember the hat that built them return it
/// directly.
pub fn fourier_forward(f: &SampledField) -> Result<SampledField> {
    fourier_forward_impl(f, false)
}

/// Sequential reference path of [`fourier_forward`]; always recomputes the
/// quadrature sum.
pub fn fourier_forward_seq(f: &SampledField) -> Result<SampledField> {
    f.expect_domain(Domain::Space)?;
    let grid = *f.grid();
    let dim = grid.dim();
    let h = grid.space_axis().step().powi(dim as i32);
    let values = transform_sum(
        &grid.freq_coords(),
        &grid.space_coords(),
        dim,
        f.values(),
        -1.0,
        h,
        true,
    );
    let mut out = SampledField::from_values(grid, Domain::Frequency, values)?;
    out.fsupp_radius = f.fsupp_radius;
    Ok(out)
}

fn fourier_forward_impl(f: &SampledField, sequential: bool) -> Result<SampledField> {
    f.expect_domain(Domain::Space)?;
    let grid = *f.grid();
    if let Some(hat) = f.known_hat() {
        let mut out = SampledField::from_values(grid, Domain::Frequency, hat.to_vec())?;
        out.fsupp_radius = f.fsupp_radius;
        return Ok(out);
    }
    let dim = grid.dim();
    let h = grid.space_axis().step().powi(dim as i32);
    let values = transform_sum(
        &grid.freq_coords(),
        &grid.space_coords(),
        dim,
        f.values(),
        -1.0,
        h,
        sequential,
    );
    let mut out = SampledField::from_values(grid, Domain::Frequency, values)?;
    out.fsupp_radius = f.fsupp_radius;
    Ok(out)
}

/// The on-grid transform a consumer should read: the remembered hat when
/// present, else one forward quadrature pass.
pub fn hat_of(f: &SampledField) -> Result<Vec<Complex64>> {
    f.expect_domain(Domain::Space)?;
    if let Some(h) = f.known_hat() {
        Ok(h.to_vec())
    } else {
        Ok(fourier_forward(f)?.into_values())
    }
}

/// Inverse transform `(2 pi)^{-n} h_xi^n sum_j exp(i x . xi_j) F(xi_j)` onto
/// the space grid.
pub fn fourier_inverse(big_f: &SampledField) -> Result<SampledField> {
    fourier_inverse_impl(big_f, false)
}

/// Sequential reference path of [`fourier_inverse`].
pub fn fourier_inverse_seq(big_f: &SampledField) -> Result<SampledField> {
    fourier_inverse_impl(big_f, true)
}

fn fourier_inverse_impl(big_f: &SampledField, sequential: bool) -> Result<SampledField> {
    big_f.expect_domain(Domain::Frequency)?;
    let grid = *big_f.grid();
    let dim = grid.dim();
    let w = grid.freq_axis().step().powi(dim as i32)
        / (2.0 * std::f64::consts::PI).powi(dim as i32);
    let values = transform_sum(
        &grid.space_coords(),
        &grid.freq_coords(),
        dim,
        big_f.values(),
        1.0,
        w,
        sequential,
    );
    let mut out = SampledField::from_values(grid, Domain::Space, values)?;
    out.fsupp_radius = big_f.fsupp_radius;
    out.hat = Some(big_f.values().to_vec());
    Ok(out)
}

/// Forward transform of space samples evaluated on an arbitrary tensor
/// lattice (one [`AxisSpec`] replicated over the grid dimension). Used for
/// band checks and support-transfer measurements beyond the standard
/// frequency window.
pub fn fourier_forward_on(f: &SampledField, dual: &AxisSpec) -> Result<Vec<Complex64>> {
    f.expect_domain(Domain::Space)?;
    let grid = *f.grid();
    let dim = grid.dim();
    let h = grid.space_axis().step().powi(dim as i32);
    Ok(transform_sum(
        &product_coords(dual, dim),
        &grid.space_coords(),
        dim,
        f.values(),
        -1.0,
        h,
        false,
    ))
}

/// Enforces the aliasing policy on an operator input.
pub(crate) fn check_alias(f: &SampledField, allow_alias: bool) -> Result<()> {
    if allow_alias {
        return Ok(());
    }
    let limit = f.grid().alias_limit();
    match f.fsupp_radius() {
        Some(r) if r <= limit + 1e-12 => Ok(()),
        got => Err(Error::AliasGuard { limit, got }),
    }
}

/// Fourier multiplier `m(D) f = F^{-1}[m . F f]`.
///
/// `m` is sampled on the frequency grid. If `m` has compact on-grid support
/// of radius `r` and `f` declares radius `R`, the output carries
/// `min(R, r)`.
pub fn multiplier_apply(
    m: &SampledField,
    f: &SampledField,
    allow_alias: bool,
) -> Result<SampledField> {
    m.expect_domain(Domain::Frequency)?;
    f.expect_domain(Domain::Space)?;
    if m.grid() != f.grid() {
        return Err(Error::Shape("multiplier and field grids differ".into()));
    }
    check_alias(f, allow_alias)?;
    let mut hat = hat_of(f)?;
    for (h, mv) in hat.iter_mut().zip(m.values()) {
        *h *= *mv;
    }
    let hat = SampledField::from_values(*f.grid(), Domain::Frequency, hat)?;
    let out = fourier_inverse(&hat)?;
    let r_m = value_support_radius(m);
    let radius = match f.fsupp_radius() {
        Some(r) => r.min(r_m),
        None => r_m,
    };
    Ok(out.with_fsupp_unchecked(radius))
}

// ---------------------------------------------------------------------------
// Band-limit measurement
// ---------------------------------------------------------------------------

/// Relative spectral energy of `f` outside the ball of the given radius.
///
/// The measurement is on-grid: space-domain fields are transformed onto the
/// standard frequency window and the ratio is taken against the spectral
/// total there. This makes exact truncations (multiplier masks) register as
/// leakage zero, which is the support notion every downstream operator
/// actually consumes. Frequency-domain fields are measured directly on
/// their samples.
pub fn spectral_leakage_field(f: &SampledField, radius: f64) -> f64 {
    let ratio_on = |values: &[Complex64], coords: &[f64], dim: usize| {
        let mut inside = 0.0;
        let mut total = 0.0;
        for (i, v) in values.iter().enumerate() {
            let p = &coords[i * dim..(i + 1) * dim];
            let e = v.norm_sqr();
            total += e;
            if norm2(p) <= radius + 1e-12 {
                inside += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            ((total - inside) / total).max(0.0)
        }
    };
    let dim = f.grid().dim();
    let coords = f.grid().freq_coords();
    match f.domain() {
        Domain::Frequency => ratio_on(f.values(), &coords, dim),
        Domain::Space => {
            let hat = hat_of(f).expect("space field");
            ratio_on(&hat, &coords, dim)
        }
    }
}

/// Relative spectral energy of a space-domain field outside the ball
/// `|zeta - center| <= radius`, measured on an integer-commensurate dual
/// lattice wide enough to cover the shifted ball. Meaningful for
/// concentrated fields (the quadrature total is the primal energy).
pub fn spectral_leakage_ball(f: &SampledField, center: &[f64], radius: f64) -> f64 {
    let grid = f.grid();
    let dim = grid.dim();
    let freq = grid.freq_axis();
    let reach = center.iter().fold(0.0f64, |a, c| a.max(c.abs())) + radius;
    let extent = freq.halfwidth().max(reach.ceil() + 4.0) as u32;
    let dual = AxisSpec::new(extent, freq.inv_step).expect("valid dual axis");
    let spectrum = fourier_forward_on(f, &dual).expect("space field");
    let coords = product_coords(&dual, dim);
    let mut inside = 0.0;
    let mut total = 0.0;
    for (i, v) in spectrum.iter().enumerate() {
        let p = &coords[i * dim..(i + 1) * dim];
        let dist: f64 = p
            .iter()
            .zip(center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            .sqrt();
        let e = v.norm_sqr();
        total += e;
        if dist <= radius + 1e-12 {
            inside += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        ((total - inside) / total).max(0.0)
    }
}

fn norm2(p: &[f64]) -> f64 {
    p.iter().map(|t| t * t).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Symbols on the (x, xi1, xi2) product grid
// ---------------------------------------------------------------------------

/// Samples of a symbol on the product grid `(x, xi_1, xi_2)`, row-major with
/// the space index slowest. Declared Fourier-support radii, when present,
/// must lie in `[1, inf)`.
#[derive(Debug, Clone)]
pub struct SampledSymbol {
    grid: GridSpec,
    values: Vec<Complex64>,
    fsupp_radii: Option<[f64; 3]>,
}

impl SampledSymbol {
    pub fn from_values(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        let want = grid.space_len() * grid.freq_len() * grid.freq_len();
        if values.len() != want {
            return Err(Error::Shape(format!(
                "symbol wants {} values, got {}",
                want,
                values.len()
            )));
        }
        Ok(SampledSymbol { grid, values, fsupp_radii: None })
    }

    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &[f64]) -> Complex64 + Sync,
    {
        let dim = grid.dim();
        let xs = grid.space_coords();
        let xis = grid.freq_coords();
        let nx = grid.space_len();
        let nf = grid.freq_len();
        let values = par_collect(nx, |m| {
            let x = &xs[m * dim..(m + 1) * dim];
            let mut block = Vec::with_capacity(nf * nf);
            for j1 in 0..nf {
                let a = &xis[j1 * dim..(j1 + 1) * dim];
                for j2 in 0..nf {
                    let b = &xis[j2 * dim..(j2 + 1) * dim];
                    block.push(f(x, a, b));
                }
            }
            block
        })
        .into_iter()
        .flatten()
        .collect();
        SampledSymbol { grid, values, fsupp_radii: None }
    }

    pub fn constant(grid: GridSpec, c: Complex64) -> Self {
        let len = grid.space_len() * grid.freq_len() * grid.freq_len();
        SampledSymbol { grid, values: vec![c; len], fsupp_radii: None }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn fsupp_radii(&self) -> Option<[f64; 3]> {
        self.fsupp_radii
    }

    /// Shape as (space points, freq points, freq points).
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.grid.space_len(), self.grid.freq_len(), self.grid.freq_len())
    }

    /// Declares radii without a spectral measurement. For symbols whose
    /// support is known analytically (constants, pure phases); random or
    /// data-driven symbols should use [`SampledSymbol::with_checked_radii`].
    pub fn with_declared_radii(mut self, radii: [f64; 3]) -> Result<Self> {
        validate_radii(&radii)?;
        self.fsupp_radii = Some(radii);
        Ok(self)
    }

    /// Declares radii and verifies them with a full three-axis spectral
    /// leakage measurement.
    pub fn with_checked_radii(mut self, radii: [f64; 3]) -> Result<Self> {
        validate_radii(&radii)?;
        let leakage = symbol_spectrum(&self)?.leakage_outside(radii);
        if leakage >= FSUPP_LEAK_CAP {
            return Err(Error::BandLimit {
                radius: radii[0].max(radii[1]).max(radii[2]),
                leakage,
                cap: FSUPP_LEAK_CAP,
            });
        }
        self.fsupp_radii = Some(radii);
        Ok(self)
    }

    pub(crate) fn set_radii_unchecked(&mut self, radii: [f64; 3]) {
        self.fsupp_radii = Some(radii);
    }
}

fn validate_radii(radii: &[f64; 3]) -> Result<()> {
    for (i, r) in radii.iter().enumerate() {
        if !(*r >= 1.0) {
            return Err(Error::Param(format!(
                "symbol Fourier-support radius R_{i} = {r} must lie in [1, inf)"
            )));
        }
    }
    Ok(())
}

/// Two-variable symbol `(x, xi)` for the linear operator.
#[derive(Debug, Clone)]
pub struct LinearSymbol {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl LinearSymbol {
    pub fn from_values(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        let want = grid.space_len() * grid.freq_len();
        if values.len() != want {
            return Err(Error::Shape(format!(
                "linear symbol wants {} values, got {}",
                want,
                values.len()
            )));
        }
        Ok(LinearSymbol { grid, values })
    }

    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> Complex64,
    {
        let dim = grid.dim();
        let xs = grid.space_coords();
        let xis = grid.freq_coords();
        let mut values = Vec::with_capacity(grid.space_len() * grid.freq_len());
        for m in 0..grid.space_len() {
            let x = &xs[m * dim..(m + 1) * dim];
            for j in 0..grid.freq_len() {
                let xi = &xis[j * dim..(j + 1) * dim];
                values.push(f(x, xi));
            }
        }
        LinearSymbol { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

// ---------------------------------------------------------------------------
// Symbol spectra: per-axis quadrature transforms onto integer-commensurate
// dual lattices
// ---------------------------------------------------------------------------

/// Dual lattice for the symbol's space axis.
pub fn symbol_dual_x(grid: &GridSpec) -> AxisSpec {
    let freq = grid.freq_axis();
    AxisSpec::new(freq.halfwidth as u32, freq.inv_step).expect("valid")
}

/// Dual lattice for the symbol's frequency axes (wider: decomposed pieces
/// carry content out to twice the declared radii).
pub fn symbol_dual_xi(grid: &GridSpec) -> AxisSpec {
    let freq = grid.freq_axis();
    AxisSpec::new(freq.halfwidth + 4, freq.inv_step).expect("valid")
}

/// Full three-axis spectrum of a symbol, with exact-enough quadrature on
/// integer-commensurate dual lattices (spacing divides 1, so integer
/// modulations re-index the lattice exactly).
#[derive(Debug, Clone)]
pub struct SymbolSpectrum {
    pub grid: GridSpec,
    pub dual_x: AxisSpec,
    pub dual_xi: AxisSpec,
    /// Row-major (eta0, eta1, eta2).
    pub values: Vec<Complex64>,
}

impl SymbolSpectrum {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.dual_x.len(), self.dual_xi.len(), self.dual_xi.len())
    }

    /// Relative spectral energy outside the product of balls (spectral
    /// total).
    pub fn leakage_outside(&self, radii: [f64; 3]) -> f64 {
        let (n0, n1, n2) = self.dims();
        let c0 = self.dual_x.coords();
        let c1 = self.dual_xi.coords();
        let mut inside = 0.0;
        let mut total = 0.0;
        for a in 0..n0 {
            let in0 = c0[a].abs() <= radii[0] + 1e-12;
            for b in 0..n1 {
                let in1 = c1[b].abs() <= radii[1] + 1e-12;
                for c in 0..n2 {
                    let e = self.values[(a * n1 + b) * n2 + c].norm_sqr();
                    total += e;
                    if in0 && in1 && c1[c].abs() <= radii[2] + 1e-12 {
                        inside += e;
                    }
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            ((total - inside) / total).max(0.0)
        }
    }
}

/// Transform a 3-axis array along one axis: `out = weight * sum_in
/// exp(sign * i * out_coord * in_coord) * v`. Axes are 1-D (symbol spectra
/// are supported for dim-1 grids only).
pub(crate) fn transform_axis3(
    values: &[Complex64],
    dims: (usize, usize, usize),
    axis: usize,
    in_coords: &[f64],
    out_coords: &[f64],
    sign: f64,
    weight: f64,
) -> Vec<Complex64> {
    let (n0, n1, n2) = dims;
    let n_out = out_coords.len();
    // Phase table out x in.
    let table: Vec<Complex64> = par_collect(n_out, |o| {
        let oc = out_coords[o];
        in_coords
            .iter()
            .map(|ic| Complex64::from_polar(weight, sign * oc * ic))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    match axis {
        0 => {
            let out = par_collect(n_out, |o| {
                let row = &table[o * n0..(o + 1) * n0];
                let mut block = vec![Complex64::new(0.0, 0.0); n1 * n2];
                for (i, ph) in row.iter().enumerate() {
                    let src = &values[i * n1 * n2..(i + 1) * n1 * n2];
                    for (dst, s) in block.iter_mut().zip(src) {
                        *dst += *ph * *s;
                    }
                }
                block
            });
            out.into_iter().flatten().collect()
        }
        1 => {
            let out = par_collect(n0, |a| {
                let src = &values[a * n1 * n2..(a + 1) * n1 * n2];
                let mut block = vec![Complex64::new(0.0, 0.0); n_out * n2];
                for o in 0..n_out {
                    let row = &table[o * n1..(o + 1) * n1];
                    let dst = &mut block[o * n2..(o + 1) * n2];
                    for (i, ph) in row.iter().enumerate() {
                        let line = &src[i * n2..(i + 1) * n2];
                        for (d, s) in dst.iter_mut().zip(line) {
                            *d += *ph * *s;
                        }
                    }
                }
                block
            });
            out.into_iter().flatten().collect()
        }
        2 => {
            let out = par_collect(n0 * n1, |ab| {
                let src = &values[ab * n2..(ab + 1) * n2];
                let mut line = vec![Complex64::new(0.0, 0.0); n_out];
                for (o, dst) in line.iter_mut().enumerate() {
                    let row = &table[o * n2..(o + 1) * n2];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (ph, s) in row.iter().zip(src) {
                        acc += *ph * *s;
                    }
                    *dst = acc;
                }
                line
            });
            out.into_iter().flatten().collect()
        }
        _ => unreachable!(),
    }
}

/// Forward three-axis spectrum of a symbol (dim-1 grids).
pub fn symbol_spectrum(sym: &SampledSymbol) -> Result<SymbolSpectrum> {
    let grid = *sym.grid();
    if grid.dim() != 1 {
        return Err(Error::Dim { dim: grid.dim(), why: "symbol spectra support dimension 1" });
    }
    let dual_x = symbol_dual_x(&grid);
    let dual_xi = symbol_dual_xi(&grid);
    let nx = grid.space_len();
    let nf = grid.freq_len();
    let hx = grid.space_axis().step();
    let hxi = grid.freq_axis().step();
    let xs = grid.space_coords();
    let xis = grid.freq_coords();

    let s0 = transform_axis3(sym.values(), (nx, nf, nf), 0, &xs, &dual_x.coords(), -1.0, hx);
    let s1 = transform_axis3(&s0, (dual_x.len(), nf, nf), 1, &xis, &dual_xi.coords(), -1.0, hxi);
    let s2 = transform_axis3(
        &s1,
        (dual_x.len(), dual_xi.len(), nf),
        2,
        &xis,
        &dual_xi.coords(),
        -1.0,
        hxi,
    );
    Ok(SymbolSpectrum { grid, dual_x, dual_xi, values: s2 })
}

/// Inverse of [`symbol_spectrum`] restricted to the dual entries selected by
/// `keep` (everything else treated as zero). Returns a full primal-grid
/// symbol.
pub fn symbol_from_spectrum<K>(spec: &SymbolSpectrum, keep: K) -> SampledSymbol
where
    K: Fn(f64, f64, f64) -> Complex64 + Sync,
{
    let (n0, n1, n2) = spec.dims();
    let c0 = spec.dual_x.coords();
    let c1 = spec.dual_xi.coords();
    // Mask, then find the bounding index ranges that stay nonzero so the
    // inverse passes only touch active dual slabs.
    let mut masked = vec![Complex64::new(0.0, 0.0); spec.values.len()];
    let (mut a_lo, mut a_hi) = (n0, 0usize);
    let (mut b_lo, mut b_hi) = (n1, 0usize);
    let (mut d_lo, mut d_hi) = (n2, 0usize);
    for a in 0..n0 {
        for b in 0..n1 {
            for d in 0..n2 {
                let w = keep(c0[a], c1[b], c1[d]);
                if w.norm_sqr() > 0.0 {
                    let idx = (a * n1 + b) * n2 + d;
                    masked[idx] = spec.values[idx] * w;
                    a_lo = a_lo.min(a);
                    a_hi = a_hi.max(a + 1);
                    b_lo = b_lo.min(b);
                    b_hi = b_hi.max(b + 1);
                    d_lo = d_lo.min(d);
                    d_hi = d_hi.max(d + 1);
                }
            }
        }
    }
    let grid = spec.grid;
    if a_lo >= a_hi {
        return SampledSymbol::constant(grid, Complex64::new(0.0, 0.0));
    }
    // Compact the active block.
    let (ka, kb, kd) = (a_hi - a_lo, b_hi - b_lo, d_hi - d_lo);
    let mut block = Vec::with_capacity(ka * kb * kd);
    for a in a_lo..a_hi {
        for b in b_lo..b_hi {
            for d in d_lo..d_hi {
                block.push(masked[(a * n1 + b) * n2 + d]);
            }
        }
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let w0 = spec.dual_x.step() / two_pi;
    let w1 = spec.dual_xi.step() / two_pi;
    let xs = grid.space_coords();
    let xis = grid.freq_coords();
    let i0 = transform_axis3(&block, (ka, kb, kd), 0, &c0[a_lo..a_hi], &xs, 1.0, w0);
    let i1 = transform_axis3(
        &i0,
        (grid.space_len(), kb, kd),
        1,
        &c1[b_lo..b_hi],
        &xis,
        1.0,
        w1,
    );
    let i2 = transform_axis3(
        &i1,
        (grid.space_len(), grid.freq_len(), kd),
        2,
        &c1[d_lo..d_hi],
        &xis,
        1.0,
        w1,
    );
    SampledSymbol::from_values(grid, i2).expect("shape by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> GridSpec {
        GridSpec::desk_default()
    }

    fn gaussian(grid: GridSpec, inv_two_var: f64) -> SampledField {
        SampledField::from_fn(grid, Domain::Space, |x| {
            Complex64::new((-x[0] * x[0] * inv_two_var).exp(), 0.0)
        })
    }

    #[test]
    fn make_grid_valid_1d() {
        let g = make_grid(1, 16.0, 0.125, 8.0, 0.125).unwrap();
        assert_eq!(g.space_len(), 256);
        assert_eq!(g.freq_len(), 128);
    }

    #[test]
    fn make_grid_rejects_noncommensurate_step() {
        assert!(make_grid(1, 16.0, 0.3, 8.0, 0.125).is_err());
    }

    #[test]
    fn make_grid_valid_2d() {
        let g = make_grid(2, 8.0, 0.25, 4.0, 0.25).unwrap();
        assert_eq!(g.dim(), 2);
        assert_eq!(g.space_len(), 64 * 64);
        assert_eq!(g.freq_len(), 32 * 32);
    }

    #[test]
    fn gaussian_transform_pair() {
        let f = gaussian(desk(), 0.5);
        let hat = fourier_forward(&f).unwrap();
        let xis = desk().freq_coords();
        let scale = (2.0 * std::f64::consts::PI).sqrt();
        for (j, v) in hat.values().iter().enumerate() {
            let xi = xis[j];
            let want = scale * (-xi * xi / 2.0).exp();
            assert!((v.re - want).abs() < 1e-6, "xi={xi} got {} want {want}", v.re);
            assert!(v.im.abs() < 1e-6);
        }
    }

    #[test]
    fn indicator_sinc_within_quadrature_error() {
        let grid = desk();
        let f = SampledField::from_fn(grid, Domain::Space, |x| {
            if (-0.5..0.5).contains(&x[0]) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let hat = fourier_forward(&f).unwrap();
        let h = grid.space_axis().step();
        let xis = grid.freq_coords();
        for (j, v) in hat.values().iter().enumerate() {
            let xi = xis[j];
            // Closed form of the left-endpoint quadrature itself.
            let mut acc = Complex64::new(0.0, 0.0);
            let mut x = -0.5;
            while x < 0.5 - 1e-12 {
                acc += Complex64::from_polar(h, -xi * x);
                x += h;
            }
            assert!((v - acc).norm() < 1e-12);
            // And the analytic transform, within the first-order quadrature bound.
            let want = if xi.abs() < 1e-12 { 1.0 } else { 2.0 * (xi / 2.0).sin() / xi };
            assert!((v.re - want).abs() <= 0.5 * h * xi.abs() + 1e-12);
        }
    }

    #[test]
    fn plancherel_ratio_band_limited() {
        let f = gaussian(desk(), 0.25).with_checked_fsupp(3.0).unwrap();
        let hat = fourier_forward(&f).unwrap();
        let ratio = hat.energy() / ((2.0 * std::f64::consts::PI) * f.energy());
        assert!((ratio - 1.0).abs() < 1e-6, "ratio {ratio}");
    }

    #[test]
    fn round_trip_identity() {
        let f = gaussian(desk(), 0.25);
        let back = fourier_inverse(&fourier_forward(&f).unwrap()).unwrap();
        let num: f64 = f
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-6);
    }

    #[test]
    fn inverse_of_flat_spectrum_is_dirichlet() {
        let grid = desk();
        let ones = SampledField::from_fn(grid, Domain::Frequency, |_| Complex64::new(1.0, 0.0));
        let f = fourier_inverse(&ones).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        let hxi = grid.freq_axis().step();
        let xs = grid.space_coords();
        let xis = grid.freq_coords();
        let mut peak_idx = 0;
        let mut peak = 0.0;
        for (m, v) in f.values().iter().enumerate() {
            let x = xs[m];
            let mut acc = Complex64::new(0.0, 0.0);
            for xi in &xis {
                acc += Complex64::from_polar(1.0, x * xi);
            }
            let want = acc * (hxi / two_pi);
            assert!((v - want).norm() < 1e-10);
            if v.norm() > peak {
                peak = v.norm();
                peak_idx = m;
            }
        }
        assert_eq!(xs[peak_idx], 0.0, "Dirichlet profile peaks at the origin");
    }

    #[test]
    fn inverse_of_unit_mass_spike_is_constant() {
        let grid = desk();
        let hxi = grid.freq_axis().step();
        let mut vals = vec![Complex64::new(0.0, 0.0); grid.freq_len()];
        let j0 = grid.freq_axis().index_of(0.0).unwrap();
        vals[j0] = Complex64::new(1.0 / hxi, 0.0);
        let spike = SampledField::from_values(grid, Domain::Frequency, vals).unwrap();
        let f = fourier_inverse(&spike).unwrap();
        let want = 1.0 / (2.0 * std::f64::consts::PI);
        for v in f.values() {
            assert!((v.re - want).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn multiplier_identity() {
        let grid = desk();
        let f = gaussian(grid, 0.25).with_checked_fsupp(3.0).unwrap();
        let one = SampledField::from_fn(grid, Domain::Frequency, |_| Complex64::new(1.0, 0.0));
        let out = multiplier_apply(&one, &f, false).unwrap();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn multiplier_differentiates_gaussian() {
        let grid = desk();
        let f = gaussian(grid, 0.5);
        let deriv_sym =
            SampledField::from_fn(grid, Domain::Frequency, |xi| Complex64::new(0.0, xi[0]));
        // e^{-x^2/2} carries spectral mass just past the alias threshold, which
        // is exactly what the override flag is for.
        let out = multiplier_apply(&deriv_sym, &f, true).unwrap();
        let xs = grid.space_coords();
        for (m, v) in out.values().iter().enumerate() {
            let x = xs[m];
            let want = -x * (-x * x / 2.0).exp();
            assert!((v.re - want).abs() < 1e-5, "x={x}");
            assert!(v.im.abs() < 1e-5);
        }
    }

    #[test]
    fn multiplier_truncation_passes_band_check() {
        let grid = desk();
        let f = gaussian(grid, 0.25);
        let ball = SampledField::from_fn(grid, Domain::Frequency, |xi| {
            if xi[0].abs() <= 1.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let out = multiplier_apply(&ball, &f, true).unwrap();
        assert!(out.fsupp_radius().unwrap() <= 1.0 + 1e-12);
        let leak = spectral_leakage_field(&out, 1.0 + 0.05);
        assert!(leak < 1e-15, "exact truncation, got leak {leak}");
    }

    #[test]
    fn alias_guard_rejects_undeclared_input() {
        let grid = desk();
        let f = gaussian(grid, 0.25);
        let one = SampledField::from_fn(grid, Domain::Frequency, |_| Complex64::new(1.0, 0.0));
        assert!(matches!(
            multiplier_apply(&one, &f, false),
            Err(Error::AliasGuard { .. })
        ));
    }

    #[test]
    fn transforms_are_linear() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let grid = desk();
        let mut noise = || {
            SampledField::from_values(
                grid,
                Domain::Space,
                (0..grid.space_len())
                    .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect(),
            )
            .unwrap()
        };
        let f = noise();
        let g = noise();
        let a = Complex64::new(0.3, -1.1);
        let b = Complex64::new(-0.7, 0.2);
        let mut combo = SampledField::zeros(grid, Domain::Space);
        for i in 0..grid.space_len() {
            combo.values_mut()[i] = a * f.values()[i] + b * g.values()[i];
        }
        let lhs = fourier_forward(&combo).unwrap();
        let ff = fourier_forward(&f).unwrap();
        let fg = fourier_forward(&g).unwrap();
        for j in 0..grid.freq_len() {
            let want = a * ff.values()[j] + b * fg.values()[j];
            assert!((lhs.values()[j] - want).norm() < 1e-10);
        }
    }

    #[test]
    fn multiplier_composition_is_product() {
        let grid = desk();
        let f = gaussian(grid, 0.25).with_checked_fsupp(3.0).unwrap();
        let m1 = SampledField::from_fn(grid, Domain::Frequency, |xi| {
            Complex64::new((-(xi[0] * xi[0]) / 8.0).exp(), 0.0)
        });
        let m2 = SampledField::from_fn(grid, Domain::Frequency, |xi| {
            Complex64::new(0.2, 0.1 * xi[0])
        });
        let chained = multiplier_apply(&m1, &multiplier_apply(&m2, &f, false).unwrap(), false).unwrap();
        let mut prod = m1.clone();
        for (p, q) in prod.values_mut().iter_mut().zip(m2.values()) {
            *p *= *q;
        }
        let direct = multiplier_apply(&prod, &f, false).unwrap();
        for (a, b) in chained.values().iter().zip(direct.values()) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn checked_fsupp_rejects_wideband() {
        let grid = desk();
        // A narrow spatial spike has wide spectrum.
        let mut vals = vec![Complex64::new(0.0, 0.0); grid.space_len()];
        vals[grid.space_len() / 2] = Complex64::new(1.0, 0.0);
        let f = SampledField::from_values(grid, Domain::Space, vals).unwrap();
        assert!(f.with_checked_fsupp(1.0).is_err());
    }

    #[test]
    fn symbol_radii_must_be_at_least_one() {
        let grid = desk();
        let s = SampledSymbol::constant(grid, Complex64::new(1.0, 0.0));
        assert!(s.with_declared_radii([0.5, 1.0, 1.0]).is_err());
    }

    #[test]
    fn field_from_hat_carries_exact_support() {
        let grid = desk();
        let mut hat = vec![Complex64::new(0.0, 0.0); grid.freq_len()];
        let j = grid.freq_axis().index_of(2.5).unwrap();
        hat[j] = Complex64::new(1.0, 0.5);
        let f = field_from_hat(grid, hat).unwrap();
        assert!((f.fsupp_radius().unwrap() - 2.5).abs() < 1e-12);
    }
}
