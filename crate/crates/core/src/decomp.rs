//! Window constructions: the partition of unity on the unit lattice, the
//! reconstruction pair (kappa, chi) with `sum kappa(. - nu) chi(. - nu) = 1`,
//! the frequency-box operators built from them, and symbol decompositions.
//!
//! All profiles are smooth functions given in closed form and sampled on
//! whatever lattice a caller needs. The construction parameters are fixed
//! here as module constants.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{
    multiplier_apply, spectral_leakage_field, symbol_from_spectrum, symbol_spectrum, AxisSpec,
    Domain, GridSpec, SampledField, SampledSymbol, SymbolSpectrum, FSUPP_LEAK_CAP,
};
use crate::par::par_collect;

/// Half-width of the mollifier bump in frequency; keeps `F chi` inside the
/// unit ball with margin.
pub const MOLLIFIER_HALFWIDTH: f64 = 0.5;
/// Quadrature intervals used to evaluate `chi` from its bump spectrum.
pub const MOLLIFIER_QUAD_INTERVALS: usize = 1024;
/// The transfer cutoff equals one on the ball of this radius...
pub const CUTOFF_FLAT_RADIUS: f64 = 4.0;
/// ...and vanishes outside this one.
pub const CUTOFF_SUPPORT_RADIUS: f64 = 5.0;
/// Pieces carrying less than this fraction of total energy are dropped
/// from active windows.
pub const PIECE_DROP_ENERGY: f64 = 1e-12;

/// The classic smooth bump `exp(-1/(1-t^2))` on `(-1, 1)`.
fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Smooth monotone step: 0 for u <= 0, 1 for u >= 1.
fn smooth_step(u: f64) -> f64 {
    let h = |v: f64| if v > 0.0 { (-1.0 / v).exp() } else { 0.0 };
    let a = h(u);
    let b = h(1.0 - u);
    a / (a + b)
}

fn partition1(t: f64) -> f64 {
    let num = bump(t);
    if num == 0.0 {
        return 0.0;
    }
    let base = t.floor();
    let mut den = 0.0;
    for k in [-1.0, 0.0, 1.0, 2.0] {
        den += bump(t - (base + k));
    }
    num / den
}

/// Partition window handle returned by [`build_partition`].
#[derive(Debug, Clone, Copy)]
pub struct Partition {
    dim: usize,
}

impl Partition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One-dimensional partition window `g(t) / sum_k g(t - k)`.
    pub fn eval1(&self, t: f64) -> f64 {
        partition1(t)
    }

    /// Tensor-product window on the full dimension.
    pub fn eval(&self, p: &[f64]) -> f64 {
        p.iter().map(|t| partition1(*t)).product()
    }
}

/// Builds the partition window: nonnegative, supported in `(-1, 1)^n`, with
/// `sum_k phi(xi - k) = 1` exactly by the quotient construction.
pub fn build_partition(dim: usize) -> Partition {
    Partition { dim }
}

/// Window pair of the uniform frequency decomposition, plus the partition
/// window, the dual window `theta`, and the transfer cutoff.
///
/// `chi` is the inverse transform of a nonnegative bump supported in
/// `B_{1/2}` with unit integral, so its real part stays above
/// `cos(sqrt(n)/2) / (2 pi)^n` on `[-1, 1]^n`. `kappa = phi / chi` there,
/// which makes the lattice reconstruction identity exact by construction.
/// `theta` reuses `chi`: it is bounded below on the unit cube and its
/// transform sits in the unit ball.
#[derive(Debug, Clone)]
pub struct DecompPair {
    dim: usize,
    /// (node, trapezoid weight * psi(node)) pairs over [-1/2, 1/2].
    psi_table: Vec<(f64, f64)>,
    lower_bound_c: f64,
}

/// Builds the reconstruction pair (and everything else the decomposition
/// machinery needs). Fails if the measured lower bound of `|chi|` on
/// `[-1, 1]` degenerates.
pub fn build_sugimoto_pair(dim: usize) -> Result<DecompPair> {
    let n = MOLLIFIER_QUAD_INTERVALS;
    let h = 2.0 * MOLLIFIER_HALFWIDTH / n as f64;
    // Trapezoid nodes/weights; the bump vanishes to all orders at the ends,
    // so the rule is spectrally accurate.
    let mut raw: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let eta = -MOLLIFIER_HALFWIDTH + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 * h } else { h };
            (eta, w * bump(eta / MOLLIFIER_HALFWIDTH))
        })
        .collect();
    let mass: f64 = raw.iter().map(|(_, w)| w).sum();
    if mass <= 0.0 {
        return Err(Error::Window("mollifier bump has no mass".into()));
    }
    for (_, w) in raw.iter_mut() {
        *w /= mass;
    }
    let pair = DecompPair { dim, psi_table: raw, lower_bound_c: 0.0 };
    let mut min_abs = f64::INFINITY;
    let mut t = -1.0;
    while t <= 1.0 + 1e-12 {
        min_abs = min_abs.min(pair.chi1(t).abs());
        t += 1.0 / 64.0;
    }
    if min_abs < 1e-6 {
        return Err(Error::Window(format!(
            "reconstruction window lower bound degenerate: min |chi| = {min_abs:.3e}"
        )));
    }
    Ok(DecompPair { lower_bound_c: min_abs, ..pair })
}

impl DecompPair {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Measured lower bound of `|chi|` on `[-1, 1]`.
    pub fn lower_bound_c(&self) -> f64 {
        self.lower_bound_c
    }

    pub fn phi1(&self, t: f64) -> f64 {
        partition1(t)
    }

    /// `chi(t) = (2 pi)^{-1} integral psi(eta) cos(t eta) d eta`; real and
    /// even because the bump is.
    pub fn chi1(&self, t: f64) -> f64 {
        let s: f64 = self.psi_table.iter().map(|(eta, w)| w * (t * eta).cos()).sum();
        s / (2.0 * std::f64::consts::PI)
    }

    pub fn kappa1(&self, t: f64) -> f64 {
        if t.abs() >= 1.0 {
            0.0
        } else {
            partition1(t) / self.chi1(t)
        }
    }

    /// Dual window on the space side; `chi` already satisfies both of its
    /// requirements.
    pub fn theta1(&self, t: f64) -> f64 {
        self.chi1(t)
    }

    /// Smooth radial plateau: 1 on `B_4`, 0 outside `B_5`. Scaled by the
    /// support radius at call sites.
    pub fn cutoff1(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= CUTOFF_FLAT_RADIUS {
            1.0
        } else if a >= CUTOFF_SUPPORT_RADIUS {
            0.0
        } else {
            smooth_step(CUTOFF_SUPPORT_RADIUS - a)
        }
    }

    pub fn phi(&self, p: &[f64]) -> f64 {
        p.iter().map(|t| self.phi1(*t)).product()
    }

    pub fn kappa(&self, p: &[f64]) -> f64 {
        p.iter().map(|t| self.kappa1(*t)).product()
    }

    pub fn chi(&self, p: &[f64]) -> f64 {
        p.iter().map(|t| self.chi1(*t)).product()
    }

    pub fn theta(&self, p: &[f64]) -> f64 {
        p.iter().map(|t| self.theta1(*t)).product()
    }

    /// Radial cutoff on the full dimension.
    pub fn cutoff(&self, p: &[f64]) -> f64 {
        self.cutoff1(p.iter().map(|t| t * t).sum::<f64>().sqrt())
    }

    /// Frequency-grid sampling of `kappa(. - nu)`.
    pub fn kappa_mask(&self, grid: &GridSpec, nu: &[i64]) -> SampledField {
        self.mask_on_grid(grid, nu, |pair, t| pair.kappa1(t))
    }

    /// Frequency-grid sampling of `chi(. - nu)`.
    pub fn chi_mask(&self, grid: &GridSpec, nu: &[i64]) -> SampledField {
        self.mask_on_grid(grid, nu, |pair, t| pair.chi1(t))
    }

    /// Frequency-grid sampling of the partition window `phi(. - k)`.
    pub fn phi_mask(&self, grid: &GridSpec, k: &[i64]) -> SampledField {
        self.mask_on_grid(grid, k, |pair, t| pair.phi1(t))
    }

    fn mask_on_grid<E>(&self, grid: &GridSpec, shift: &[i64], eval: E) -> SampledField
    where
        E: Fn(&DecompPair, f64) -> f64,
    {
        SampledField::from_fn(*grid, Domain::Frequency, |xi| {
            let mut v = 1.0;
            for (t, s) in xi.iter().zip(shift) {
                v *= eval(self, t - *s as f64);
            }
            Complex64::new(v, 0.0)
        })
    }

    /// Writes the 1-D window profiles over `[-range, range]` as CSV
    /// (`t,phi,kappa,chi,theta,cutoff`) for plotting.
    pub fn write_profiles_csv<W: std::io::Write>(
        &self,
        out: &mut W,
        range: f64,
        step: f64,
    ) -> Result<()> {
        writeln!(out, "t,phi,kappa,chi,theta,cutoff")?;
        let mut t = -range;
        while t <= range + 1e-12 {
            writeln!(
                out,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                t,
                self.phi1(t),
                self.kappa1(t),
                self.chi1(t),
                self.theta1(t),
                self.cutoff1(t)
            )?;
            t += step;
        }
        Ok(())
    }
}

/// The frequency-box operator: `kappa(D - nu)` applied to a space-domain
/// field. The output support metadata covers the box `nu + [-1, 1]^n`.
pub fn box_op(nu: &[i64], f: &SampledField, pair: &DecompPair) -> Result<SampledField> {
    if nu.len() != f.grid().dim() {
        return Err(Error::Shape(format!(
            "lattice point has {} entries for a dim-{} grid",
            nu.len(),
            f.grid().dim()
        )));
    }
    let mask = pair.kappa_mask(f.grid(), nu);
    multiplier_apply(&mask, f, false)
}

/// `chi(D - nu)` companion used in reconstruction identities.
pub fn chi_op(nu: &[i64], f: &SampledField, pair: &DecompPair) -> Result<SampledField> {
    let mask = pair.chi_mask(f.grid(), nu);
    multiplier_apply(&mask, f, false)
}

// ---------------------------------------------------------------------------
// Symbol decomposition over the reconstruction pair
// ---------------------------------------------------------------------------

/// Lazy family `{sigma_nu}`: the piece at `nu = (nu1, nu2)` is
/// `sigma . chi(xi1 - nu1) chi(xi2 - nu2)`; the active window drops pieces
/// below [`PIECE_DROP_ENERGY`].
pub struct SymbolDecomposition<'a> {
    symbol: &'a SampledSymbol,
    /// chi samples per (window index, frequency index), row-major.
    chi_rows: Vec<f64>,
    kappa_rows: Vec<f64>,
    nus: Vec<i64>,
    active: Vec<(i64, i64)>,
    dropped: usize,
}

/// Builds the decomposition of a dim-1 symbol.
pub fn decompose_symbol<'a>(
    symbol: &'a SampledSymbol,
    pair: &DecompPair,
) -> Result<SymbolDecomposition<'a>> {
    let grid = symbol.grid();
    if grid.dim() != 1 {
        return Err(Error::Dim {
            dim: grid.dim(),
            why: "symbol decomposition supports dimension 1",
        });
    }
    let freq = grid.freq_axis();
    let half = freq.halfwidth_int();
    let nus: Vec<i64> = (-half..=half).collect();
    let xis = grid.freq_coords();
    let nf = grid.freq_len();
    let mut chi_rows = Vec::with_capacity(nus.len() * nf);
    let mut kappa_rows = Vec::with_capacity(nus.len() * nf);
    for nu in &nus {
        for xi in &xis {
            chi_rows.push(pair.chi1(xi - *nu as f64));
            kappa_rows.push(pair.kappa1(xi - *nu as f64));
        }
    }
    // Per-piece energy factorizes through the marginal |sigma|^2 table.
    let (nx, _, _) = symbol.dims();
    let mut marg = vec![0.0f64; nf * nf];
    for m in 0..nx {
        let block = &symbol.values()[m * nf * nf..(m + 1) * nf * nf];
        for (t, v) in marg.iter_mut().zip(block) {
            *t += v.norm_sqr();
        }
    }
    let total: f64 = marg.iter().sum();
    let mut active = Vec::new();
    let mut dropped = 0usize;
    for (a, nu1) in nus.iter().enumerate() {
        let r1 = &chi_rows[a * nf..(a + 1) * nf];
        for (b, nu2) in nus.iter().enumerate() {
            let r2 = &chi_rows[b * nf..(b + 1) * nf];
            let mut e = 0.0;
            for j1 in 0..nf {
                let w1 = r1[j1] * r1[j1];
                let row = &marg[j1 * nf..(j1 + 1) * nf];
                let mut acc = 0.0;
                for j2 in 0..nf {
                    acc += row[j2] * r2[j2] * r2[j2];
                }
                e += w1 * acc;
            }
            if total > 0.0 && e / total < PIECE_DROP_ENERGY {
                dropped += 1;
            } else {
                active.push((*nu1, *nu2));
            }
        }
    }
    Ok(SymbolDecomposition { symbol, chi_rows, kappa_rows, nus, active, dropped })
}

impl<'a> SymbolDecomposition<'a> {
    pub fn active(&self) -> &[(i64, i64)] {
        &self.active
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    fn row<'s>(&'s self, table: &'s [f64], nu: i64) -> &'s [f64] {
        let nf = self.symbol.grid().freq_len();
        let a = self
            .nus
            .iter()
            .position(|v| *v == nu)
            .expect("lattice point inside decomposition window");
        &table[a * nf..(a + 1) * nf]
    }

    pub fn chi_row(&self, nu: i64) -> &[f64] {
        self.row(&self.chi_rows, nu)
    }

    pub fn kappa_row(&self, nu: i64) -> &[f64] {
        self.row(&self.kappa_rows, nu)
    }

    /// Materializes the piece `sigma_nu`.
    pub fn piece(&self, nu1: i64, nu2: i64) -> SampledSymbol {
        let nf = self.symbol.grid().freq_len();
        let (nx, _, _) = self.symbol.dims();
        let r1 = self.chi_row(nu1).to_vec();
        let r2 = self.chi_row(nu2).to_vec();
        let src = self.symbol.values();
        let values = par_collect(nx, |m| {
            let block = &src[m * nf * nf..(m + 1) * nf * nf];
            let mut out = Vec::with_capacity(nf * nf);
            for j1 in 0..nf {
                let w1 = r1[j1];
                let row = &block[j1 * nf..(j1 + 1) * nf];
                for j2 in 0..nf {
                    out.push(row[j2] * (w1 * r2[j2]));
                }
            }
            out
        })
        .into_iter()
        .flatten()
        .collect();
        SampledSymbol::from_values(*self.symbol.grid(), values).expect("shape preserved")
    }

    /// `sum_nu sigma_nu kappa(xi1 - nu1) kappa(xi2 - nu2)` over the full
    /// window (the chi-kappa products telescope per axis).
    pub fn reconstruct(&self) -> SampledSymbol {
        let nf = self.symbol.grid().freq_len();
        let (nx, _, _) = self.symbol.dims();
        let mut w1 = vec![0.0f64; nf];
        for a in 0..self.nus.len() {
            let c = &self.chi_rows[a * nf..(a + 1) * nf];
            let k = &self.kappa_rows[a * nf..(a + 1) * nf];
            for j in 0..nf {
                w1[j] += c[j] * k[j];
            }
        }
        let src = self.symbol.values();
        let values = par_collect(nx, |m| {
            let block = &src[m * nf * nf..(m + 1) * nf * nf];
            let mut out = Vec::with_capacity(nf * nf);
            for j1 in 0..nf {
                let row = &block[j1 * nf..(j1 + 1) * nf];
                for j2 in 0..nf {
                    out.push(row[j2] * (w1[j1] * w1[j2]));
                }
            }
            out
        })
        .into_iter()
        .flatten()
        .collect();
        SampledSymbol::from_values(*self.symbol.grid(), values).expect("shape preserved")
    }
}

// ---------------------------------------------------------------------------
// Tensor partition pieces of a symbol (all 3n frequency variables)
// ---------------------------------------------------------------------------

/// Cached spectrum plus per-piece energies for cutting a symbol into
/// frequency-box pieces `phi(D_x - k0) phi(D_xi1 - k1) phi(D_xi2 - k2) sigma`.
pub struct SymbolBoxSet {
    spectrum: SymbolSpectrum,
    energies: Vec<((i64, i64, i64), f64)>,
}

impl SymbolBoxSet {
    pub fn new(symbol: &SampledSymbol) -> Result<Self> {
        let spectrum = symbol_spectrum(symbol)?;
        let energies = piece_energies(&spectrum);
        Ok(SymbolBoxSet { spectrum, energies })
    }

    pub fn spectrum(&self) -> &SymbolSpectrum {
        &self.spectrum
    }

    /// Pieces whose relative spectral energy clears the drop threshold,
    /// descending by energy.
    pub fn active(&self) -> Vec<(i64, i64, i64)> {
        let mut v: Vec<_> = self
            .energies
            .iter()
            .filter(|(_, e)| *e >= PIECE_DROP_ENERGY)
            .cloned()
            .collect();
        v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        v.into_iter().map(|(k, _)| k).collect()
    }

    pub fn dropped(&self) -> usize {
        self.energies.iter().filter(|(_, e)| *e < PIECE_DROP_ENERGY).count()
    }

    pub fn piece_energy(&self, k: (i64, i64, i64)) -> f64 {
        self.energies
            .iter()
            .find(|(kk, _)| *kk == k)
            .map(|(_, e)| *e)
            .unwrap_or(0.0)
    }

    pub fn energies(&self) -> &[((i64, i64, i64), f64)] {
        &self.energies
    }

    /// Materializes the piece at `k`.
    pub fn piece(&self, k: (i64, i64, i64), pair: &DecompPair) -> SampledSymbol {
        let (k0, k1, k2) = k;
        symbol_from_spectrum(&self.spectrum, |e0, e1, e2| {
            let w = pair.phi1(e0 - k0 as f64)
                * pair.phi1(e1 - k1 as f64)
                * pair.phi1(e2 - k2 as f64);
            Complex64::new(w, 0.0)
        })
    }

    /// Sum of all pieces at once: the partition telescopes on the dual
    /// lattice, so this is a single windowed inverse.
    pub fn reconstruct(&self, pair: &DecompPair) -> SampledSymbol {
        // One lattice point past the dual window keeps the partition sum at
        // exactly one across the whole window, edges included.
        let d0 = self.spectrum.dual_x.halfwidth_int() + 1;
        let d1 = self.spectrum.dual_xi.halfwidth_int() + 1;
        let cover = |e: f64, half: i64| -> f64 {
            let mut s = 0.0;
            for k in -half..=half {
                s += pair.phi1(e - k as f64);
            }
            s
        };
        symbol_from_spectrum(&self.spectrum, |e0, e1, e2| {
            Complex64::new(cover(e0, d0) * cover(e1, d1) * cover(e2, d1), 0.0)
        })
    }
}

fn piece_energies(spec: &SymbolSpectrum) -> Vec<((i64, i64, i64), f64)> {
    let part = build_partition(1);
    let (n0, n1, n2) = spec.dims();
    let c0 = spec.dual_x.coords();
    let c1 = spec.dual_xi.coords();
    let h0 = spec.dual_x.halfwidth_int();
    let h1 = spec.dual_xi.halfwidth_int();
    let total: f64 = spec.values.iter().map(|v| v.norm_sqr()).sum();
    let mut out = Vec::new();
    for k0 in -h0..=h0 {
        let m0: Vec<f64> = c0.iter().map(|e| part.eval1(e - k0 as f64)).collect();
        if m0.iter().all(|w| *w == 0.0) {
            continue;
        }
        for k1 in -h1..=h1 {
            let m1: Vec<f64> = c1.iter().map(|e| part.eval1(e - k1 as f64)).collect();
            if m1.iter().all(|w| *w == 0.0) {
                continue;
            }
            for k2 in -h1..=h1 {
                let m2: Vec<f64> = c1.iter().map(|e| part.eval1(e - k2 as f64)).collect();
                let mut e = 0.0;
                for a in 0..n0 {
                    if m0[a] == 0.0 {
                        continue;
                    }
                    for b in 0..n1 {
                        if m1[b] == 0.0 {
                            continue;
                        }
                        let base = (a * n1 + b) * n2;
                        for (c, mc) in m2.iter().enumerate() {
                            if *mc == 0.0 {
                                continue;
                            }
                            let w = m0[a] * m1[b] * mc;
                            e += w * w * spec.values[base + c].norm_sqr();
                        }
                    }
                }
                out.push(((k0, k1, k2), if total > 0.0 { e / total } else { 0.0 }));
            }
        }
    }
    out
}

/// One tensor-partition piece of a symbol; convenience wrapper over
/// [`SymbolBoxSet`] for single-piece callers.
pub fn symbol_box(
    k: (i64, i64, i64),
    symbol: &SampledSymbol,
    pair: &DecompPair,
) -> Result<SampledSymbol> {
    let spectrum = symbol_spectrum(symbol)?;
    let (k0, k1, k2) = k;
    Ok(symbol_from_spectrum(&spectrum, |e0, e1, e2| {
        let w =
            pair.phi1(e0 - k0 as f64) * pair.phi1(e1 - k1 as f64) * pair.phi1(e2 - k2 as f64);
        Complex64::new(w, 0.0)
    }))
}

// ---------------------------------------------------------------------------
// Band-limit checks
// ---------------------------------------------------------------------------

/// Result of a band-limit measurement: the declared support holds iff the
/// relative energy outside is below [`FSUPP_LEAK_CAP`].
#[derive(Debug, Clone, Copy)]
pub struct BandCheck {
    pub ok: bool,
    pub leakage: f64,
}

/// Relative Fourier energy of a field outside `B_radius`.
pub fn band_limit_check(f: &SampledField, radius: f64) -> BandCheck {
    let leakage = spectral_leakage_field(f, radius);
    BandCheck { ok: leakage < FSUPP_LEAK_CAP, leakage }
}

/// Relative spectral energy of a symbol outside `B_r0 x B_r1 x B_r2`.
pub fn band_limit_check_symbol(symbol: &SampledSymbol, radii: [f64; 3]) -> Result<BandCheck> {
    let leakage = symbol_spectrum(symbol)?.leakage_outside(radii);
    Ok(BandCheck { ok: leakage < FSUPP_LEAK_CAP, leakage })
}

/// Relative spectral energy of a symbol outside `B_radius` along one axis
/// (0 = space, 1/2 = the frequency arguments); the other axes are summed by
/// Parseval. Cheaper than the full box check and sufficient for per-axis
/// support claims.
pub fn symbol_axis_leakage(symbol: &SampledSymbol, axis: usize, radius: f64) -> Result<f64> {
    let grid = symbol.grid();
    if grid.dim() != 1 {
        return Err(Error::Dim { dim: grid.dim(), why: "symbol spectra support dimension 1" });
    }
    if axis > 2 {
        return Err(Error::Param(format!("symbol axis {axis} out of range")));
    }
    let dual: AxisSpec = if axis == 0 {
        crate::grid::symbol_dual_x(grid)
    } else {
        crate::grid::symbol_dual_xi(grid)
    };
    let (nx, nf, _) = symbol.dims();
    let (in_coords, step) = if axis == 0 {
        (grid.space_coords(), grid.space_axis().step())
    } else {
        (grid.freq_coords(), grid.freq_axis().step())
    };
    let out = crate::grid::transform_axis3(
        symbol.values(),
        (nx, nf, nf),
        axis,
        &in_coords,
        &dual.coords(),
        -1.0,
        step,
    );
    let coords = dual.coords();
    let n_out = coords.len();
    let (d0, d1, d2) = match axis {
        0 => (n_out, nf, nf),
        1 => (nx, n_out, nf),
        _ => (nx, nf, n_out),
    };
    let mut inside = 0.0;
    let mut total = 0.0;
    for a in 0..d0 {
        for b in 0..d1 {
            let base = (a * d1 + b) * d2;
            for c in 0..d2 {
                let e = out[base + c].norm_sqr();
                total += e;
                let coord = match axis {
                    0 => coords[a],
                    1 => coords[b],
                    _ => coords[c],
                };
                if coord.abs() <= radius + 1e-12 {
                    inside += e;
                }
            }
        }
    }
    Ok(if total == 0.0 { 0.0 } else { ((total - inside) / total).max(0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{field_from_hat, make_grid};

    fn desk() -> GridSpec {
        GridSpec::desk_default()
    }

    fn small() -> GridSpec {
        make_grid(1, 8.0, 0.125, 4.0, 0.125).unwrap()
    }

    #[test]
    fn partition_sums_to_one() {
        let part = build_partition(1);
        let mut xi = -2.0;
        while xi <= 2.0 {
            let s: f64 = (-3..=3).map(|k| part.eval1(xi - k as f64)).sum();
            assert!((s - 1.0).abs() < 1e-10, "xi={xi} sum={s}");
            xi += 1.0 / 64.0;
        }
    }

    #[test]
    fn partition_nonnegative_and_symmetric() {
        let part = build_partition(1);
        let mut t = -1.5;
        while t <= 1.5 {
            assert!(part.eval1(t) >= 0.0);
            assert!((part.eval1(t) - part.eval1(-t)).abs() < 1e-12);
            t += 1.0 / 32.0;
        }
        let s = part.eval1(0.0) + part.eval1(1.0) + part.eval1(-1.0);
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_identity_on_grid() {
        let pair = build_sugimoto_pair(1).unwrap();
        let freq = desk().freq_axis();
        let half = freq.halfwidth_int();
        let mut worst: f64 = 0.0;
        for xi in freq.coords() {
            let mut s = 0.0;
            for nu in -half..=half {
                s += pair.kappa1(xi - nu as f64) * pair.chi1(xi - nu as f64);
            }
            worst = worst.max((s - 1.0).abs());
        }
        assert!(worst < 1e-10, "residual {worst}");
    }

    #[test]
    fn chi_spectrum_inside_unit_ball() {
        let pair = build_sugimoto_pair(1).unwrap();
        // Sample chi on a wide window so its own decay, not the window cut,
        // controls the measurement.
        let wide = AxisSpec::new(512, 2).unwrap();
        let h = wide.step();
        let samples: Vec<f64> = wide.coords().iter().map(|t| pair.chi1(*t)).collect();
        let total: f64 = samples.iter().map(|v| v * v).sum::<f64>() * h;
        let dual = AxisSpec::new(2, 64).unwrap();
        let mut inside = 0.0;
        for eta in dual.coords() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, v) in samples.iter().enumerate() {
                acc += Complex64::from_polar(*v * h, -eta * wide.coord(i));
            }
            if eta.abs() <= 1.0 {
                inside += acc.norm_sqr();
            }
        }
        let inside = inside * dual.step() / (2.0 * std::f64::consts::PI);
        let leak = (1.0 - inside / total).max(0.0);
        assert!(leak < 1e-8, "leak {leak}");
    }

    #[test]
    fn chi_lower_bound_matches_cosine_estimate() {
        let pair = build_sugimoto_pair(1).unwrap();
        let want = (0.5f64).cos() / (2.0 * std::f64::consts::PI);
        assert!(pair.lower_bound_c() >= want - 1e-3, "c = {}", pair.lower_bound_c());
    }

    #[test]
    fn box_reconstruction_through_pair() {
        let pair = build_sugimoto_pair(1).unwrap();
        let grid = desk();
        let f = SampledField::from_fn(grid, Domain::Space, |x| {
            Complex64::new((-x[0] * x[0] / 4.0).exp(), 0.3 * (-x[0] * x[0] / 6.0).exp())
        })
        .with_checked_fsupp(3.0)
        .unwrap();
        let half = grid.freq_axis().halfwidth_int();
        let mut acc = vec![Complex64::new(0.0, 0.0); grid.space_len()];
        for nu in -half..=half {
            let inner = chi_op(&[nu], &f, &pair).unwrap();
            let piece = box_op(&[nu], &inner, &pair).unwrap();
            for (a, b) in acc.iter_mut().zip(piece.values()) {
                *a += *b;
            }
        }
        let num: f64 = acc.iter().zip(f.values()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-8);
    }

    #[test]
    fn box_vanishes_off_support() {
        let pair = build_sugimoto_pair(1).unwrap();
        let grid = desk();
        let mut hat = vec![Complex64::new(0.0, 0.0); grid.freq_len()];
        for (j, xi) in grid.freq_coords().iter().enumerate() {
            if (-0.5..0.5).contains(xi) {
                hat[j] = Complex64::new(1.0, 0.5 * xi);
            }
        }
        let f = field_from_hat(grid, hat).unwrap();
        for nu in [-3i64, -2, 2, 3] {
            let piece = box_op(&[nu], &f, &pair).unwrap();
            let e: f64 = piece.values().iter().map(|v| v.norm_sqr()).sum();
            assert!(e < 1e-24, "nu={nu} energy {e}");
        }
    }

    #[test]
    fn decompose_constant_symbol_reconstructs() {
        let pair = build_sugimoto_pair(1).unwrap();
        let sigma = SampledSymbol::constant(small(), Complex64::new(1.0, 0.0));
        let dec = decompose_symbol(&sigma, &pair).unwrap();
        let rec = dec.reconstruct();
        for (a, b) in rec.values().iter().zip(sigma.values()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn decomposed_piece_support_doubles_radius() {
        let pair = build_sugimoto_pair(1).unwrap();
        let sigma = SampledSymbol::from_fn(desk(), |x, a, b| {
            Complex64::new(
                (-x[0] * x[0] / 4.0 - a[0] * a[0] / 4.0 - b[0] * b[0] / 4.0).exp(),
                0.0,
            )
        })
        .with_checked_radii([3.0, 3.0, 3.0])
        .unwrap();
        let dec = decompose_symbol(&sigma, &pair).unwrap();
        let piece = dec.piece(1, 0);
        let leak = symbol_axis_leakage(&piece, 1, 6.0).unwrap();
        assert!(leak < 1e-8, "leak {leak}");
    }

    #[test]
    fn symbol_box_modulation_covariance() {
        let grid = small();
        let pair = build_sugimoto_pair(1).unwrap();
        let sigma = SampledSymbol::from_fn(grid, |x, a, b| {
            Complex64::new(
                (-x[0] * x[0] / 2.0 - a[0] * a[0] / 2.0 - b[0] * b[0] / 2.0).exp(),
                0.1 * (-x[0] * x[0] / 3.0 - a[0] * a[0] - b[0] * b[0]).exp(),
            )
        });
        let k = (1i64, -1i64, 2i64);
        let lhs = symbol_box(k, &sigma, &pair).unwrap();
        // Right side: demodulate, take the piece at zero, re-modulate.
        let xs = grid.space_coords();
        let xis = grid.freq_coords();
        let nf = grid.freq_len();
        let mut demod = sigma.clone();
        {
            let vals = demod.values_mut();
            for (m, x) in xs.iter().enumerate() {
                for (j1, xi1) in xis.iter().enumerate() {
                    for (j2, xi2) in xis.iter().enumerate() {
                        let phase = -(k.0 as f64 * x + k.1 as f64 * xi1 + k.2 as f64 * xi2);
                        vals[(m * nf + j1) * nf + j2] *= Complex64::from_polar(1.0, phase);
                    }
                }
            }
        }
        let zero_piece = symbol_box((0, 0, 0), &demod, &pair).unwrap();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (m, x) in xs.iter().enumerate() {
            for (j1, xi1) in xis.iter().enumerate() {
                for (j2, xi2) in xis.iter().enumerate() {
                    let idx = (m * nf + j1) * nf + j2;
                    let phase = k.0 as f64 * x + k.1 as f64 * xi1 + k.2 as f64 * xi2;
                    let rhs = Complex64::from_polar(1.0, phase) * zero_piece.values()[idx];
                    worst = worst.max((lhs.values()[idx] - rhs).norm());
                    scale = scale.max(lhs.values()[idx].norm());
                }
            }
        }
        assert!(worst < 1e-8 * scale.max(1.0), "worst {worst} scale {scale}");
    }

    #[test]
    fn symbol_box_tiles_concentrated_symbol() {
        let grid = desk();
        let pair = build_sugimoto_pair(1).unwrap();
        // Widths balanced so both the domain truncation and the dual-window
        // coverage sit below the tolerance.
        let sigma = SampledSymbol::from_fn(grid, |x, a, b| {
            Complex64::new(
                (-x[0] * x[0] / 4.0 - a[0] * a[0] / 2.0 - b[0] * b[0] / 2.0).exp(),
                0.0,
            )
        });
        let set = SymbolBoxSet::new(&sigma).unwrap();
        let rec = set.reconstruct(&pair);
        let peak = sigma.values().iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let mut worst: f64 = 0.0;
        for (a, b) in rec.values().iter().zip(sigma.values()) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-8 * peak, "worst {worst}");
    }

    #[test]
    fn constant_symbol_boxes_concentrate_at_origin() {
        // The truncated constant carries Dirichlet crumbs across the dual
        // window, so far pieces are small individually and in aggregate
        // while the near window holds the bulk.
        let sigma = SampledSymbol::constant(small(), Complex64::new(1.0, 0.0));
        let set = SymbolBoxSet::new(&sigma).unwrap();
        let mut near = 0.0;
        let mut total = 0.0;
        let mut peak: f64 = 0.0;
        let mut far_peak: f64 = 0.0;
        for ((k0, k1, k2), e) in set.energies() {
            total += e;
            peak = peak.max(*e);
            if k0.abs() <= 1 && k1.abs() <= 1 && k2.abs() <= 1 {
                near += e;
            } else {
                far_peak = far_peak.max(*e);
            }
        }
        assert!(near / total > 0.85, "near {near} total {total}");
        assert!(far_peak < 0.02 * peak, "far piece {far_peak} vs peak {peak}");
    }

    #[test]
    fn band_check_examples() {
        let grid = desk();
        let f = SampledField::from_fn(grid, Domain::Space, |x| {
            Complex64::new((-x[0] * x[0] / 4.0).exp(), 0.0)
        });
        assert!(band_limit_check(&f, 3.0).ok);
        let osc = SampledField::from_fn(grid, Domain::Space, |x| {
            Complex64::from_polar((-x[0] * x[0] / 8.0).exp(), 6.0 * x[0])
        });
        let check = band_limit_check(&osc, 2.0);
        assert!(!check.ok && check.leakage > 0.99, "leak {}", check.leakage);
    }
}
