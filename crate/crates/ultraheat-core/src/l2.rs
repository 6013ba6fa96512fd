//! The finite working subspace of `L²(K_N)`: vertex-ball indicators plus
//! oscillating wavelets up to a resolution `R`, with exact transforms between
//! the coefficient view and the piecewise-constant cell view.
//!
//! A function is stored as one complex value per vertex ball (the value the
//! function takes on the ball's mean part) plus a map of wavelet
//! coefficients. Internally wavelet coefficients are kept against the
//! sup-normalized wavelet (unit modulus on its support) rather than the
//! L²-normalized one; the two differ by `p^(r/2)`, and keeping the power of p
//! out of the stored value makes the analysis/synthesis arithmetic exact for
//! dyadic data. Public accessors speak the L²-normalized convention.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::padic::{character_of_fraction, Embedding, PAdicNumber};

/// Index of one wavelet: vertex ball, scale `r` with `N <= r < R`, the
/// sub-ball offset at that scale, and the frequency `j` in `[1, p-1]`.
///
/// The derived order (vertex, scale, offset, j) is the serialization order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct WaveletIndex {
    pub vertex: usize,
    pub scale: i32,
    pub offset: u64,
    pub j: u32,
}

impl WaveletIndex {
    /// The canonical center of the supporting ball `B_{p^-r}(a)`.
    pub fn center(&self, embedding: &Embedding) -> PAdicNumber {
        embedding.subball_center(self.vertex, self.offset)
    }

    /// Integer value of the supporting ball's center.
    pub fn center_value(&self, embedding: &Embedding) -> u128 {
        self.vertex as u128
            + self.offset as u128 * (embedding.prime() as u128).pow(embedding.level() as u32)
    }

    /// Digits `a_N .. a_{r-1}` of the center beyond the vertex digits.
    pub fn center_digits(&self, embedding: &Embedding) -> Vec<u32> {
        let p = embedding.prime();
        let len = (self.scale - embedding.level()).max(0) as usize;
        let mut k = self.offset;
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push((k % p) as u32);
            k /= p;
        }
        out
    }

    fn validate(&self, embedding: &Embedding, resolution: i32) -> Result<()> {
        let p = embedding.prime();
        if self.vertex >= embedding.vertices() {
            return Err(Error::InvalidArgument(format!(
                "wavelet vertex {} out of range",
                self.vertex
            )));
        }
        if self.scale < embedding.level() || self.scale >= resolution {
            return Err(Error::InvalidArgument(format!(
                "wavelet scale {} outside [{}, {})",
                self.scale,
                embedding.level(),
                resolution
            )));
        }
        if self.j == 0 || self.j as u64 >= p {
            return Err(Error::InvalidArgument(format!(
                "wavelet frequency {} outside [1, {})",
                self.j, p
            )));
        }
        let count = (p as u128).pow((self.scale - embedding.level()) as u32);
        if self.offset as u128 >= count {
            return Err(Error::InvalidArgument(format!(
                "wavelet offset {} out of range for scale {}",
                self.offset, self.scale
            )));
        }
        Ok(())
    }
}

/// All wavelet indices supported on `K_N` up to resolution `R`, in
/// serialization order. Per vertex there are `p^(R-N) - 1` of them.
pub fn wavelet_indices(embedding: &Embedding, resolution: i32) -> Vec<WaveletIndex> {
    let p = embedding.prime();
    let mut out = Vec::new();
    for vertex in 0..embedding.vertices() {
        for scale in embedding.level()..resolution {
            let count = (p as u128).pow((scale - embedding.level()) as u32) as u64;
            for offset in 0..count {
                for j in 1..p as u32 {
                    out.push(WaveletIndex {
                        vertex,
                        scale,
                        offset,
                        j,
                    });
                }
            }
        }
    }
    out
}

/// The full Kozyrev wavelet value `p^(r/2) chi_p(p^(-r-1) j x)` on its
/// supporting ball and `0` outside.
pub fn wavelet_eval(
    embedding: &Embedding,
    index: &WaveletIndex,
    x: &PAdicNumber,
) -> Result<Complex64> {
    index.validate(embedding, index.scale + 1)?;
    let center = index.center(embedding);
    let diff = x.sub(&center)?;
    let inside = diff.is_zero() || diff.valuation().unwrap() >= index.scale;
    if !inside {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let amplitude = (embedding.prime() as f64).powf(index.scale as f64 / 2.0);
    let phase = x
        .truncated(index.scale + 1)
        .mul_small(index.j as u64)
        .shifted(-(index.scale + 1))
        .additive_character();
    Ok(phase * amplitude)
}

/// Phase factor of a wavelet on the cell with the given integer center value.
/// This is the sup-normalized wavelet value; multiply by `p^(r/2)` for the
/// L²-normalized one.
fn phase_at(prime: u64, scale: i32, j: u32, center_value: u128) -> Complex64 {
    let denom = (prime as i128).pow((scale + 1) as u32);
    let num = (j as i128 * center_value as i128).rem_euclid(denom);
    character_of_fraction(Ratio::new(num, denom))
}

/// Piecewise-constant view: one value per resolution-`R` cell, ordered by
/// (vertex, ascending sub-ball offset).
#[derive(Clone, Debug, PartialEq)]
pub struct CellVector {
    embedding: Embedding,
    resolution: i32,
    values: Vec<Complex64>,
}

impl CellVector {
    pub fn new(embedding: Embedding, resolution: i32, values: Vec<Complex64>) -> Result<Self> {
        let expected = embedding.vertices() * embedding.cells_per_vertex(resolution);
        if values.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "cell vector length {} does not match {} cells",
                values.len(),
                expected
            )));
        }
        Ok(CellVector {
            embedding,
            resolution,
            values,
        })
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn resolution(&self) -> i32 {
        self.resolution
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn cells_per_vertex(&self) -> usize {
        self.embedding.cells_per_vertex(self.resolution)
    }

    pub fn value(&self, vertex: usize, offset: u64) -> Complex64 {
        self.values[vertex * self.cells_per_vertex() + offset as usize]
    }

    /// Haar volume of one cell, `p^-R`.
    pub fn cell_volume(&self) -> f64 {
        (self.embedding.prime() as f64).powi(-self.resolution)
    }

    /// Integer value of a cell's canonical center.
    pub fn center_value(&self, vertex: usize, offset: u64) -> u128 {
        vertex as u128
            + offset as u128 * (self.embedding.prime() as u128).pow(self.embedding.level() as u32)
    }

    /// Cell quadrature of the L² inner product, `p^-R sum f conj(g)`.
    pub fn inner_product(&self, other: &CellVector) -> Complex64 {
        assert_eq!(self.values.len(), other.values.len());
        let dot: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        dot * self.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.inner_product(self).re.max(0.0).sqrt()
    }
}

/// An element of the resolution-`R` subspace of `L²(K_N)`.
#[derive(Clone, Debug)]
pub struct L2Function {
    embedding: Embedding,
    resolution: i32,
    vertex_values: Vec<Complex64>,
    /// Sup-normalized wavelet coefficients; see the module docs.
    coeffs: BTreeMap<WaveletIndex, Complex64>,
}

impl L2Function {
    pub fn zero(embedding: Embedding, resolution: i32) -> Self {
        L2Function {
            embedding,
            resolution,
            vertex_values: vec![Complex64::new(0.0, 0.0); embedding.vertices()],
            coeffs: BTreeMap::new(),
        }
    }

    /// The indicator of a vertex ball.
    pub fn ball_indicator(embedding: Embedding, resolution: i32, vertex: usize) -> Result<Self> {
        if vertex >= embedding.vertices() {
            return Err(Error::InvalidArgument(format!(
                "vertex {vertex} out of range"
            )));
        }
        let mut f = Self::zero(embedding, resolution);
        f.vertex_values[vertex] = Complex64::new(1.0, 0.0);
        Ok(f)
    }

    /// Constant value one on the whole state space.
    pub fn constant_one(embedding: Embedding, resolution: i32) -> Self {
        let mut f = Self::zero(embedding, resolution);
        for v in f.vertex_values.iter_mut() {
            *v = Complex64::new(1.0, 0.0);
        }
        f
    }

    pub fn from_vertex_values(
        embedding: Embedding,
        resolution: i32,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if values.len() != embedding.vertices() {
            return Err(Error::InvalidArgument(format!(
                "expected {} vertex values, got {}",
                embedding.vertices(),
                values.len()
            )));
        }
        Ok(L2Function {
            embedding,
            resolution,
            vertex_values: values,
            coeffs: BTreeMap::new(),
        })
    }

    /// The L²-normalized wavelet as a function (unit coefficient).
    pub fn from_wavelet(
        embedding: Embedding,
        resolution: i32,
        index: WaveletIndex,
    ) -> Result<Self> {
        let mut f = Self::zero(embedding, resolution);
        f.set_wavelet_coefficient(index, Complex64::new(1.0, 0.0))?;
        Ok(f)
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn resolution(&self) -> i32 {
        self.resolution
    }

    pub fn vertex_values(&self) -> &[Complex64] {
        &self.vertex_values
    }

    pub fn vertex_values_mut(&mut self) -> &mut [Complex64] {
        &mut self.vertex_values
    }

    /// Coefficient against the L²-normalized wavelet.
    pub fn wavelet_coefficient(&self, index: &WaveletIndex) -> Complex64 {
        let amp = (self.embedding.prime() as f64).powf(index.scale as f64 / 2.0);
        self.coeffs
            .get(index)
            .map_or(Complex64::new(0.0, 0.0), |c| c / amp)
    }

    pub fn set_wavelet_coefficient(&mut self, index: WaveletIndex, c: Complex64) -> Result<()> {
        index.validate(&self.embedding, self.resolution)?;
        let amp = (self.embedding.prime() as f64).powf(index.scale as f64 / 2.0);
        if c == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&index);
        } else {
            self.coeffs.insert(index, c * amp);
        }
        Ok(())
    }

    /// Nonzero wavelet coefficients in the sup-normalized convention. Exposed
    /// for the operators that rescale whole balls; most callers want
    /// [`L2Function::wavelet_coefficient`].
    pub fn raw_coefficients(&self) -> &BTreeMap<WaveletIndex, Complex64> {
        &self.coeffs
    }

    pub fn raw_coefficients_mut(&mut self) -> &mut BTreeMap<WaveletIndex, Complex64> {
        &mut self.coeffs
    }

    /// True when the wavelet part vanishes identically.
    pub fn is_vertex_only(&self) -> bool {
        self.coeffs.values().all(|c| c.norm() == 0.0)
    }

    /// Multiplies every wavelet coefficient in ball `I` by `factor(I)`.
    pub fn scale_wavelets_per_vertex(&mut self, factor: impl Fn(usize) -> Complex64) {
        for (index, c) in self.coeffs.iter_mut() {
            *c *= factor(index.vertex);
        }
    }

    /// The projection onto the span of the vertex-ball indicators; the
    /// remainder `f - projection` integrates to zero over every ball.
    pub fn ball_mean_projection(&self) -> L2Function {
        L2Function {
            embedding: self.embedding,
            resolution: self.resolution,
            vertex_values: self.vertex_values.clone(),
            coeffs: BTreeMap::new(),
        }
    }

    /// Reinterprets the function at a finer resolution (the value is
    /// unchanged; higher-scale coefficients are zero).
    pub fn lift_to(&self, resolution: i32) -> L2Function {
        assert!(resolution >= self.resolution, "lifting only refines");
        let mut out = self.clone();
        out.resolution = resolution;
        out
    }

    /// Haar inner product via orthogonality: `p^-N sum_I f_I conj(g_I)` plus
    /// the wavelet coefficient pairing.
    pub fn inner_product(&self, other: &L2Function) -> Complex64 {
        assert_eq!(self.embedding, other.embedding, "mismatched embeddings");
        let p = self.embedding.prime() as f64;
        let ball_volume = p.powi(-self.embedding.level());
        let mut total: Complex64 = self
            .vertex_values
            .iter()
            .zip(&other.vertex_values)
            .map(|(a, b)| a * b.conj())
            .sum();
        total *= ball_volume;
        for (index, c) in &self.coeffs {
            if let Some(d) = other.coeffs.get(index) {
                // <Phi, Phi> = p^-r for the sup-normalized pair.
                total += c * d.conj() * p.powi(-index.scale);
            }
        }
        total
    }

    pub fn norm(&self) -> f64 {
        self.inner_product(self).re.max(0.0).sqrt()
    }

    /// `int_{K_N} f dx = p^-N sum_I f_I`; wavelets carry no mass.
    pub fn integral(&self) -> Complex64 {
        let ball_volume = (self.embedding.prime() as f64).powi(-self.embedding.level());
        self.vertex_values.iter().sum::<Complex64>() * ball_volume
    }

    pub fn add(&self, other: &L2Function) -> L2Function {
        assert_eq!(self.embedding, other.embedding);
        let resolution = self.resolution.max(other.resolution);
        let mut out = self.lift_to(resolution);
        for (a, b) in out.vertex_values.iter_mut().zip(&other.vertex_values) {
            *a += b;
        }
        for (index, c) in &other.coeffs {
            *out.coeffs.entry(*index).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        out
    }

    pub fn sub(&self, other: &L2Function) -> L2Function {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> L2Function {
        let mut out = self.clone();
        for v in out.vertex_values.iter_mut() {
            *v *= factor;
        }
        for c in out.coeffs.values_mut() {
            *c *= factor;
        }
        out
    }

    pub fn distance(&self, other: &L2Function) -> f64 {
        self.sub(other).norm()
    }

    /// Point evaluation. Errors when `x` lies outside the state space.
    pub fn evaluate(&self, x: &PAdicNumber) -> Result<Complex64> {
        let vertex = self
            .embedding
            .locate(x)
            .ok_or_else(|| Error::InvalidArgument("point outside the state space".into()))?;
        let mut value = self.vertex_values[vertex];
        let p = self.embedding.prime();
        for scale in self.embedding.level()..self.resolution {
            // Offset of the scale-r ball containing x.
            let mut offset = 0u64;
            for pos in (self.embedding.level()..scale).rev() {
                offset = offset * p + x.digit_at(pos) as u64;
            }
            for j in 1..p as u32 {
                let index = WaveletIndex {
                    vertex,
                    scale,
                    offset,
                    j,
                };
                if let Some(c) = self.coeffs.get(&index) {
                    let phase = x
                        .truncated(scale + 1)
                        .mul_small(j as u64)
                        .shifted(-(scale + 1))
                        .additive_character();
                    value += c * phase;
                }
            }
        }
        Ok(value)
    }

    /// Synthesis: the piecewise-constant cell view at the function's
    /// resolution.
    pub fn to_cells(&self) -> CellVector {
        let per_vertex = self.embedding.cells_per_vertex(self.resolution);
        let p = self.embedding.prime();
        let level = self.embedding.level();
        let mut values = Vec::with_capacity(self.embedding.vertices() * per_vertex);
        for vertex in 0..self.embedding.vertices() {
            let base = values.len();
            values.extend(std::iter::repeat_n(self.vertex_values[vertex], per_vertex));
            let lo = WaveletIndex {
                vertex,
                scale: i32::MIN,
                offset: 0,
                j: 0,
            };
            let hi = WaveletIndex {
                vertex,
                scale: i32::MAX,
                offset: u64::MAX,
                j: u32::MAX,
            };
            for (index, c) in self.coeffs.range(lo..=hi) {
                let stride = (p as u128).pow((index.scale - level) as u32) as u64;
                let mut cell = index.offset;
                while (cell as usize) < per_vertex {
                    let center = vertex as u128 + cell as u128 * (p as u128).pow(level as u32);
                    let phase = phase_at(p, index.scale, index.j, center);
                    values[base + cell as usize] += c * phase;
                    cell += stride;
                }
            }
        }
        CellVector {
            embedding: self.embedding,
            resolution: self.resolution,
            values,
        }
    }

    /// Analysis: vertex values are ball means and wavelet coefficients come
    /// from level-by-level size-p discrete Fourier transforms of child-cell
    /// means. Exact inverse of [`L2Function::to_cells`].
    pub fn from_cells(cells: &CellVector) -> L2Function {
        let embedding = cells.embedding;
        let resolution = cells.resolution;
        let p = embedding.prime();
        let level = embedding.level();
        let per_vertex = embedding.cells_per_vertex(resolution);
        let mut out = L2Function::zero(embedding, resolution);

        // Roots of unity for the size-p analysis DFT: conj(omega^(j d)).
        let mut conj_roots = vec![Complex64::new(0.0, 0.0); (p * p) as usize];
        for j in 0..p {
            for d in 0..p {
                let q = Ratio::new((j * d % p) as i128, p as i128);
                conj_roots[(j * p + d) as usize] = character_of_fraction(q).conj();
            }
        }

        for vertex in 0..embedding.vertices() {
            let base = vertex * per_vertex;
            let mut means: Vec<Complex64> = cells.values[base..base + per_vertex].to_vec();
            // Coefficients below the roundoff of the input data are DFT dust
            // (for p > 2 the roots of unity do not sum to exactly zero).
            let dust = 1e-14 * means.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
            // Walk scales from the finest ball layer down to the vertex ball.
            for scale in (level..resolution).rev() {
                let balls = (p as u128).pow((scale - level) as u32) as usize;
                let mut coarser = vec![Complex64::new(0.0, 0.0); balls];
                for k in 0..balls {
                    // Children of ball (scale, k) sit at offsets k + d * p^(scale-level).
                    let mut dft = vec![Complex64::new(0.0, 0.0); p as usize];
                    for d in 0..p as usize {
                        let child = means[k + d * balls];
                        for j in 0..p as usize {
                            dft[j] += child * conj_roots[j * p as usize + d];
                        }
                    }
                    coarser[k] = dft[0] / p as f64;
                    let center = vertex as u128 + k as u128 * (p as u128).pow(level as u32);
                    for j in 1..p as u32 {
                        let coeff =
                            dft[j as usize] * phase_at(p, scale, j, center).conj() / p as f64;
                        if coeff.norm() > dust {
                            out.coeffs.insert(
                                WaveletIndex {
                                    vertex,
                                    scale,
                                    offset: k as u64,
                                    j,
                                },
                                coeff,
                            );
                        }
                    }
                }
                means = coarser;
            }
            out.vertex_values[vertex] = means[0];
        }
        out
    }

    /// CSV serialization: one row per vertex value and per nonzero wavelet
    /// coefficient (L²-normalized convention), in index order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,vertex,scale,center_digits,j,re,im\n");
        for (vertex, v) in self.vertex_values.iter().enumerate() {
            s.push_str(&format!(
                "vertex,{vertex},,,,{},{}\n",
                crate::format_float(v.re),
                crate::format_float(v.im)
            ));
        }
        for index in self.coeffs.keys() {
            let c = self.wavelet_coefficient(index);
            let digits: Vec<String> = index
                .center_digits(&self.embedding)
                .iter()
                .map(|d| d.to_string())
                .collect();
            s.push_str(&format!(
                "wavelet,{},{},{},{},{},{}\n",
                index.vertex,
                index.scale,
                digits.join("-"),
                index.j,
                crate::format_float(c.re),
                crate::format_float(c.im)
            ));
        }
        s
    }
}
