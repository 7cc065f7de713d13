//! Hyperfine and Zeeman (Breit–Rabi) structure of a J = 1/2 ion.
//!
//! Energies are kept in Hz; conversion to rad/s happens only in
//! [`transition_frequency`], [`field_independent_point`] and [`QubitPair`].
//!
//! Matrices and eigenvectors use the product basis |mJ, mI⟩ with mJ major
//! (mJ = +1/2 first) and mI descending from +I to −I. The magnetic moment
//! operator is μ = −μ_B (g_J J + g_I I), so the Zeeman Hamiltonian is
//! +μ_B B (g_J J_z + g_I I_z).

pub mod registry;

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::real::{cabs, lit, Real};

/// Largest field increment used when following levels adiabatically from B = 0.
pub const TRACKING_STEP_TESLA: f64 = 1e-4;

const MIN_TRACKING_OVERLAP: f64 = 0.9;

#[derive(Clone, Debug, PartialEq)]
pub struct IonSpecies<T> {
    pub name: String,
    /// Ion mass (kg).
    pub mass: T,
    /// Nuclear spin I (half-integer).
    pub nuclear_spin: T,
    /// Magnetic dipole hyperfine constant A (Hz, signed).
    pub hyperfine_a: T,
    pub g_j: T,
    /// Nuclear g-factor in Bohr-magneton units, signed per μ = −μ_B(g_J J + g_I I).
    pub g_i: T,
}

impl<T: Real> IonSpecies<T> {
    pub fn new(name: impl Into<String>, mass: T, nuclear_spin: T, hyperfine_a: T, g_j: T, g_i: T) -> Result<Self> {
        let species = Self {
            name: name.into(),
            mass,
            nuclear_spin,
            hyperfine_a,
            g_j,
            g_i,
        };
        species.validate()?;
        Ok(species)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > T::zero()) || !self.mass.is_finite() {
            return Err(Error::InvalidInput(format!("{}: mass must be positive", self.name)));
        }
        for (what, v) in [("A", self.hyperfine_a), ("g_J", self.g_j), ("g_I", self.g_i)] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("{}: {what} is not finite", self.name)));
            }
        }
        self.twice_nuclear_spin().map(|_| ())
    }

    /// 2I as an integer; fails unless I is a non-negative half-integer.
    pub fn twice_nuclear_spin(&self) -> Result<u32> {
        let twice = self.nuclear_spin * lit::<T>(2.0);
        let rounded = twice.round();
        if twice < T::zero() || (twice - rounded).abs() > lit(1e-9) {
            return Err(Error::InvalidInput(format!(
                "{}: nuclear spin {} is not a non-negative half-integer",
                self.name, self.nuclear_spin
            )));
        }
        Ok(rounded.to_f64_lossy() as u32)
    }

    /// Dimension (2J+1)(2I+1) of the hyperfine manifold.
    pub fn dimension(&self) -> Result<usize> {
        Ok(2 * (self.twice_nuclear_spin()? as usize + 1))
    }

    pub fn cast<U: Real>(&self) -> IonSpecies<U> {
        IonSpecies {
            name: self.name.clone(),
            mass: U::lit(self.mass.to_f64_lossy()),
            nuclear_spin: U::lit(self.nuclear_spin.to_f64_lossy()),
            hyperfine_a: U::lit(self.hyperfine_a.to_f64_lossy()),
            g_j: U::lit(self.g_j.to_f64_lossy()),
            g_i: U::lit(self.g_i.to_f64_lossy()),
        }
    }
}

/// Adiabatic (F, mF) label, stored as doubled integers so half-integer F works.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelLabel {
    twice_f: u32,
    twice_mf: i32,
}

impl LevelLabel {
    /// Label with integer F and mF.
    pub const fn new(f: u32, mf: i32) -> Self {
        Self {
            twice_f: 2 * f,
            twice_mf: 2 * mf,
        }
    }

    pub fn from_twice(twice_f: u32, twice_mf: i32) -> Result<Self> {
        if twice_mf.unsigned_abs() > twice_f || (twice_f as i32 - twice_mf) % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "invalid level label 2F={twice_f}, 2mF={twice_mf}"
            )));
        }
        Ok(Self { twice_f, twice_mf })
    }

    pub fn twice_f(&self) -> u32 {
        self.twice_f
    }

    pub fn twice_mf(&self) -> i32 {
        self.twice_mf
    }

    pub fn f(&self) -> f64 {
        f64::from(self.twice_f) / 2.0
    }

    pub fn mf(&self) -> f64 {
        f64::from(self.twice_mf) / 2.0
    }
}

fn fmt_half(twice: i64) -> String {
    if twice % 2 == 0 {
        format!("{}", twice / 2)
    } else {
        format!("{twice}/2")
    }
}

impl fmt::Display for LevelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "F={},mF={}",
            fmt_half(i64::from(self.twice_f)),
            fmt_half(i64::from(self.twice_mf))
        )
    }
}

fn parse_twice(s: &str) -> Result<i64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("cannot read angular momentum value '{s}'"));
    if let Some((num, den)) = s.split_once('/') {
        if den.trim() != "2" {
            return Err(bad());
        }
        let n: i64 = num.trim().parse().map_err(|_| bad())?;
        if n % 2 == 0 {
            return Err(bad());
        }
        Ok(n)
    } else if let Ok(n) = s.parse::<i64>() {
        Ok(2 * n)
    } else {
        let v: f64 = s.parse().map_err(|_| bad())?;
        let twice = (2.0 * v).round();
        if (2.0 * v - twice).abs() > 1e-9 {
            return Err(bad());
        }
        Ok(twice as i64)
    }
}

impl FromStr for LevelLabel {
    type Err = Error;

    /// Accepts `F=2,mF=0`, `2,0`, `(2, 0)` and half-integers such as `F=3/2,mF=-1/2`.
    fn from_str(s: &str) -> Result<Self> {
        let cleaned = s.trim().trim_start_matches(['(', '|']).trim_end_matches([')', '>', '⟩']);
        let parts: Vec<&str> = cleaned.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Parse(format!("level label '{s}' must have the form F=..,mF=..")));
        }
        let strip = |p: &str, key: &str| -> String {
            let p = p.trim();
            let lower = p.to_ascii_lowercase();
            if lower.starts_with(&key.to_ascii_lowercase()) {
                p[key.len()..].trim_start().trim_start_matches('=').to_string()
            } else {
                p.to_string()
            }
        };
        let twice_f = parse_twice(&strip(parts[0], "F"))?;
        let twice_mf = parse_twice(&strip(parts[1], "mF"))?;
        if twice_f < 0 {
            return Err(Error::Parse(format!("negative F in '{s}'")));
        }
        LevelLabel::from_twice(twice_f as u32, twice_mf as i32)
    }
}

/// Axis of a magnetic-dipole matrix element (z is the quantization axis).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DipoleAxis {
    X,
    Z,
}

/// One eigenstate of the hyperfine + Zeeman Hamiltonian at a given field.
#[derive(Clone, Debug)]
pub struct ZeemanLevel<T: Real> {
    pub label: LevelLabel,
    /// Energy relative to the hyperfine centroid (Hz).
    pub energy: T,
    /// Unit-norm coefficients over the |mJ, mI⟩ basis.
    pub eigenvector: DVector<Complex<T>>,
    /// Field at which the level was computed (T).
    pub field: T,
}

/// Product-basis states as (2mJ, 2mI), mJ major.
fn basis_states(twice_i: u32) -> Vec<(i32, i32)> {
    let ti = twice_i as i32;
    [1, -1]
        .into_iter()
        .flat_map(|mj| (0..=ti).map(move |k| (mj, ti - 2 * k)))
        .collect()
}

/// √(j(j+1) − m(m+1)) in doubled quantum numbers.
fn raising_coefficient(twice_j: i32, twice_m: i32) -> f64 {
    let v = f64::from(twice_j * (twice_j + 2) - twice_m * (twice_m + 2));
    if v <= 0.0 {
        0.0
    } else {
        v.sqrt() / 2.0
    }
}

/// Dimensionless angular-momentum operators in the product basis.
struct SpinOperators<T: Real> {
    jz: DMatrix<T>,
    iz: DMatrix<T>,
    j_plus: DMatrix<T>,
    i_plus: DMatrix<T>,
}

impl<T: Real> SpinOperators<T> {
    fn new(twice_i: u32) -> Self {
        let states = basis_states(twice_i);
        let n = states.len();
        let ti = twice_i as i32;
        let mut jz = DMatrix::zeros(n, n);
        let mut iz = DMatrix::zeros(n, n);
        let mut j_plus = DMatrix::zeros(n, n);
        let mut i_plus = DMatrix::zeros(n, n);
        let position = |mj: i32, mi: i32| states.iter().position(|&s| s == (mj, mi));
        for (col, &(mj, mi)) in states.iter().enumerate() {
            jz[(col, col)] = lit(f64::from(mj) / 2.0);
            iz[(col, col)] = lit(f64::from(mi) / 2.0);
            if let Some(row) = position(mj + 2, mi) {
                j_plus[(row, col)] = lit(raising_coefficient(1, mj));
            }
            if let Some(row) = position(mj, mi + 2) {
                i_plus[(row, col)] = lit(raising_coefficient(ti, mi));
            }
        }
        Self { jz, iz, j_plus, i_plus }
    }

    fn jx(&self) -> DMatrix<T> {
        (&self.j_plus + self.j_plus.transpose()) * lit::<T>(0.5)
    }

    fn ix(&self) -> DMatrix<T> {
        (&self.i_plus + self.i_plus.transpose()) * lit::<T>(0.5)
    }

    /// I·J = J_z I_z + (J₊I₋ + J₋I₊)/2.
    fn i_dot_j(&self) -> DMatrix<T> {
        let jm = self.j_plus.transpose();
        let im = self.i_plus.transpose();
        &self.jz * &self.iz + (&self.j_plus * &im + &jm * &self.i_plus) * lit::<T>(0.5)
    }
}

fn check_field<T: Real>(b: T) -> Result<()> {
    if !(b >= T::zero()) || !b.is_finite() {
        return Err(Error::InvalidInput(format!("magnetic field must be finite and >= 0, got {b}")));
    }
    Ok(())
}

/// Hyperfine + Zeeman Hamiltonian (Hz) over the |mJ, mI⟩ basis.
///
/// The matrix is real symmetric; it is block diagonal in mF = mJ + mI.
pub fn hyperfine_hamiltonian<T: Real>(species: &IonSpecies<T>, b: T) -> Result<DMatrix<T>> {
    check_field(b)?;
    let twice_i = species.twice_nuclear_spin()?;
    let ops = SpinOperators::<T>::new(twice_i);
    Ok(assemble_hamiltonian(species, &ops, b))
}

fn assemble_hamiltonian<T: Real>(species: &IonSpecies<T>, ops: &SpinOperators<T>, b: T) -> DMatrix<T> {
    let c = PhysicalConstants::<T>::codata();
    let zeeman = c.mu_b * b / c.planck;
    ops.i_dot_j() * species.hyperfine_a + (&ops.jz * species.g_j + &ops.iz * species.g_i) * zeeman
}

/// Zero-field energy of hyperfine level F from the Landé interval rule (Hz).
pub fn interval_rule_energy<T: Real>(species: &IonSpecies<T>, twice_f: u32) -> T {
    let f = lit::<T>(f64::from(twice_f) / 2.0);
    let i = species.nuclear_spin;
    let j = lit::<T>(0.5);
    species.hyperfine_a * lit::<T>(0.5) * (f * (f + T::one()) - i * (i + T::one()) - j * (j + T::one()))
}

struct TrackedBlock<T: Real> {
    labels: Vec<LevelLabel>,
    energies: Vec<T>,
    /// Eigenvectors expressed over the full basis.
    vectors: Vec<DVector<T>>,
}

fn block_eigen<T: Real>(h: &DMatrix<T>, indices: &[usize]) -> (Vec<T>, Vec<DVector<T>>) {
    let k = indices.len();
    let block = DMatrix::from_fn(k, k, |r, c| h[(indices[r], indices[c])]);
    let eig = SymmetricEigen::new(block);
    let values = eig.eigenvalues.iter().copied().collect();
    let vectors = (0..k).map(|q| eig.eigenvectors.column(q).into_owned()).collect();
    (values, vectors)
}

/// Follows the levels of one mF block from B = 0 to `b` by eigenvector overlap.
fn track_block<T: Real>(species: &IonSpecies<T>, ops: &SpinOperators<T>, twice_mf: i32, b: T) -> Result<TrackedBlock<T>> {
    let twice_i = species.twice_nuclear_spin()?;
    let states = basis_states(twice_i);
    let indices: Vec<usize> = states
        .iter()
        .enumerate()
        .filter(|(_, &(mj, mi))| mj + mi == twice_mf)
        .map(|(n, _)| n)
        .collect();
    if indices.is_empty() {
        return Err(Error::LevelNotFound(format!("no states with 2mF = {twice_mf} for I = {}", species.nuclear_spin)));
    }

    // Zero-field labels from the interval rule.
    let h0 = assemble_hamiltonian(species, ops, T::zero());
    let c = PhysicalConstants::<T>::codata();
    let dh_db = (&ops.jz * species.g_j + &ops.iz * species.g_i) * (c.mu_b / c.planck);
    let (values0, vectors0) = block_eigen(&h0, &indices);
    let candidates: Vec<u32> = [twice_i + 1, twice_i.wrapping_sub(1)]
        .into_iter()
        .filter(|&tf| tf <= twice_i + 1 && tf as i32 >= twice_mf.abs())
        .collect();
    let labels: Vec<LevelLabel> = if indices.len() == 1 {
        vec![LevelLabel::from_twice(twice_i + 1, twice_mf)?]
    } else {
        let e_hi = interval_rule_energy(species, candidates[0]);
        let e_lo = interval_rule_energy(species, candidates[1]);
        let gap = (e_hi - e_lo).abs();
        if !(gap > T::zero()) {
            return Err(Error::LabelTracking(format!(
                "hyperfine levels degenerate at zero field for {} (A = 0)",
                species.name
            )));
        }
        let mut out = Vec::with_capacity(2);
        for &e in &values0 {
            let tf = if (e - e_hi).abs() < (e - e_lo).abs() { candidates[0] } else { candidates[1] };
            out.push(LevelLabel::from_twice(tf, twice_mf)?);
        }
        if out[0] == out[1] {
            return Err(Error::LabelTracking(format!("zero-field F assignment ambiguous for 2mF = {twice_mf}")));
        }
        out
    };

    let mut energies = values0;
    let mut vectors = vectors0;
    let steps = (b.to_f64_lossy() / TRACKING_STEP_TESLA).ceil().max(0.0) as usize;
    for s in 1..=steps {
        let field = b * lit::<T>(s as f64 / steps as f64);
        let h = &h0 + &dh_db * field;
        let (new_values, new_vectors) = block_eigen(&h, &indices);
        let k = indices.len();
        let mut assigned = vec![usize::MAX; k];
        for p in 0..k {
            let overlaps: Vec<T> = new_vectors.iter().map(|v| vectors[p].dot(v)).collect();
            let (best, best_overlap) = overlaps
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap_or(std::cmp::Ordering::Equal))
                .map(|(q, o)| (q, *o))
                .expect("non-empty block");
            if best_overlap.abs() < lit(MIN_TRACKING_OVERLAP) || assigned.contains(&best) {
                return Err(Error::LabelTracking(format!(
                    "level {} lost at B = {:.6e} T (best overlap {:.3})",
                    labels[p],
                    field.to_f64_lossy(),
                    best_overlap.abs().to_f64_lossy()
                )));
            }
            assigned[p] = best;
        }
        for p in 0..k {
            let q = assigned[p];
            let mut v = new_vectors[q].clone();
            if vectors[p].dot(&v) < T::zero() {
                v.neg_mut();
            }
            energies[p] = new_values[q];
            vectors[p] = v;
        }
    }

    let n = states.len();
    let full = vectors
        .iter()
        .map(|v| {
            let mut out = DVector::zeros(n);
            for (r, &idx) in indices.iter().enumerate() {
                out[idx] = v[r];
            }
            out
        })
        .collect();
    Ok(TrackedBlock { labels, energies, vectors: full })
}

fn to_level<T: Real>(label: LevelLabel, energy: T, vector: &DVector<T>, field: T) -> ZeemanLevel<T> {
    ZeemanLevel {
        label,
        energy,
        eigenvector: vector.map(|x| Complex::new(x, T::zero())),
        field,
    }
}

/// All Zeeman sublevels at field `b`, sorted by (F, mF).
pub fn breit_rabi_levels<T: Real>(species: &IonSpecies<T>, b: T) -> Result<Vec<ZeemanLevel<T>>> {
    check_field(b)?;
    let twice_i = species.twice_nuclear_spin()?;
    let ops = SpinOperators::<T>::new(twice_i);
    let top = twice_i as i32 + 1;
    let mut levels = Vec::with_capacity(species.dimension()?);
    for twice_mf in (-top..=top).step_by(2) {
        let block = track_block(species, &ops, twice_mf, b)?;
        for ((label, energy), v) in block.labels.iter().zip(&block.energies).zip(&block.vectors) {
            levels.push(to_level(*label, *energy, v, b));
        }
    }
    levels.sort_by_key(|l| l.label);
    Ok(levels)
}

/// A single level, tracking only its own mF block.
pub fn level<T: Real>(species: &IonSpecies<T>, label: LevelLabel, b: T) -> Result<ZeemanLevel<T>> {
    check_field(b)?;
    let ops = SpinOperators::<T>::new(species.twice_nuclear_spin()?);
    let block = track_block(species, &ops, label.twice_mf(), b)?;
    block
        .labels
        .iter()
        .position(|l| *l == label)
        .map(|p| to_level(label, block.energies[p], &block.vectors[p], b))
        .ok_or_else(|| Error::LevelNotFound(format!("{label} does not exist for {}", species.name)))
}

/// dE/dB (Hz/T) of a level, as the expectation value of ∂H/∂B.
pub fn energy_slope<T: Real>(species: &IonSpecies<T>, level: &ZeemanLevel<T>) -> Result<T> {
    let c = PhysicalConstants::<T>::codata();
    let states = basis_states(species.twice_nuclear_spin()?);
    let weight = states
        .iter()
        .zip(level.eigenvector.iter())
        .fold(T::zero(), |acc, (&(mj, mi), a)| {
            acc + a.norm_sqr() * (species.g_j * lit(f64::from(mj) / 2.0) + species.g_i * lit(f64::from(mi) / 2.0))
        });
    Ok(c.mu_b / c.planck * weight)
}

/// Signed transition frequency 2π(E_a − E_b) in rad/s (first label minus second).
pub fn transition_frequency<T: Real>(species: &IonSpecies<T>, a: LevelLabel, b: LevelLabel, field: T) -> Result<T> {
    if a == b {
        return Err(Error::InvalidInput(format!("transition needs two distinct levels, got {a} twice")));
    }
    let ea = level(species, a, field)?.energy;
    let eb = level(species, b, field)?.energy;
    Ok(T::two_pi() * (ea - eb))
}

/// dω/dB (rad/s/T) of the transition a − b.
pub fn transition_slope<T: Real>(species: &IonSpecies<T>, a: LevelLabel, b: LevelLabel, field: T) -> Result<T> {
    let la = level(species, a, field)?;
    let lb = level(species, b, field)?;
    Ok(T::two_pi() * (energy_slope(species, &la)? - energy_slope(species, &lb)?))
}

/// A field-independent operating point of a transition.
#[derive(Clone, Copy, Debug)]
pub struct ClockPoint<T> {
    /// Field B* (T).
    pub field: T,
    /// Transition frequency at B* (rad/s).
    pub omega0: T,
    /// dω₀/dB at B* (rad/s/T); zero up to the bisection resolution.
    pub slope: T,
    /// d²ω₀/dB² at B* (rad/s/T²).
    pub curvature: T,
}

/// Locates the field where dω₀/dB of the pair (a, b) vanishes inside `bracket`.
pub fn field_independent_point<T: Real>(
    species: &IonSpecies<T>,
    pair: (LevelLabel, LevelLabel),
    bracket: (T, T),
) -> Result<ClockPoint<T>> {
    let (a, b) = pair;
    let (mut lo, mut hi) = bracket;
    if !(hi > lo) {
        return Err(Error::InvalidInput("clock-point bracket must satisfy lo < hi".into()));
    }
    check_field(lo)?;
    let slope = |field: T| transition_slope(species, a, b, field);
    let mut f_lo = slope(lo)?;
    let f_hi = slope(hi)?;
    if f_lo * f_hi > T::zero() {
        return Err(Error::NoStationaryPoint {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    let resolution = lit::<T>(1e-13);
    for _ in 0..200 {
        if hi - lo <= resolution {
            break;
        }
        let mid = (lo + hi) * lit::<T>(0.5);
        let f_mid = slope(mid)?;
        if f_mid == T::zero() {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid * f_lo < T::zero() {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    let field = (lo + hi) * lit::<T>(0.5);
    let omega0 = transition_frequency(species, a, b, field)?;
    let s = slope(field)?;
    let tolerance = lit::<T>(1e-6) * omega0.abs();
    if s.abs() >= tolerance {
        return Err(Error::NonConvergence {
            what: "clock-point bisection".into(),
            residual: s.to_f64_lossy(),
        });
    }
    let h = lit::<T>(1e-6);
    let curvature = (slope(field + h)? - slope((field - h).max(T::zero()))?) / (h + h.min(field));
    Ok(ClockPoint {
        field,
        omega0,
        slope: s,
        curvature,
    })
}

/// ⟨a|μ_axis|b⟩ in J/T, with μ = −μ_B(g_J J + g_I I).
pub fn dipole_matrix_element<T: Real>(
    species: &IonSpecies<T>,
    a: &ZeemanLevel<T>,
    b: &ZeemanLevel<T>,
    axis: DipoleAxis,
) -> Result<Complex<T>> {
    let scale = a.field.abs().max(b.field.abs()).max(T::one());
    if (a.field - b.field).abs() > lit::<T>(1e-15) * scale {
        return Err(Error::InvalidInput(format!(
            "levels {} and {} were computed at different fields",
            a.label, b.label
        )));
    }
    let c = PhysicalConstants::<T>::codata();
    let ops = SpinOperators::<T>::new(species.twice_nuclear_spin()?);
    let operator = match axis {
        DipoleAxis::X => ops.jx() * species.g_j + ops.ix() * species.g_i,
        DipoleAxis::Z => &ops.jz * species.g_j + &ops.iz * species.g_i,
    };
    let mu = operator.map(|x| Complex::new(-c.mu_b * x, T::zero()));
    Ok(a.eigenvector.dotc(&(mu * &b.eigenvector)))
}

/// The two levels forming a qubit at bias field B₀.
#[derive(Clone, Debug)]
pub struct QubitPair<T: Real> {
    pub up: ZeemanLevel<T>,
    pub down: ZeemanLevel<T>,
    pub bias_field: T,
    /// ω₀ = 2π(E_↑ − E_↓) (rad/s), positive.
    pub omega0: T,
    pub mu_z_up: T,
    pub mu_z_down: T,
    /// |⟨↓|μ_x|↑⟩| (J/T).
    pub mu_x_updown: T,
}

impl<T: Real> QubitPair<T> {
    /// Builds the pair; `up` must lie above `down` so that ω₀ > 0.
    pub fn new(species: &IonSpecies<T>, up: LevelLabel, down: LevelLabel, bias_field: T) -> Result<Self> {
        if up == down {
            return Err(Error::InvalidInput(format!("qubit levels must differ, got {up} twice")));
        }
        let up_level = level(species, up, bias_field)?;
        let down_level = level(species, down, bias_field)?;
        let omega0 = T::two_pi() * (up_level.energy - down_level.energy);
        if !(omega0 > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "{up} lies below {down} at B = {bias_field} T; swap the qubit labels"
            )));
        }
        let mu_z_up = dipole_matrix_element(species, &up_level, &up_level, DipoleAxis::Z)?.re;
        let mu_z_down = dipole_matrix_element(species, &down_level, &down_level, DipoleAxis::Z)?.re;
        let mu_x_updown = dipole_matrix_element(species, &down_level, &up_level, DipoleAxis::X)?;
        let mu_x_updown = cabs(mu_x_updown);
        Ok(Self {
            up: up_level,
            down: down_level,
            bias_field,
            omega0,
            mu_z_up,
            mu_z_down,
            mu_x_updown,
        })
    }

    /// Rebuilds the pair at a new bias field.
    pub fn at_field(&self, species: &IonSpecies<T>, bias_field: T) -> Result<Self> {
        Self::new(species, self.up.label, self.down.label, bias_field)
    }

    /// μ_eff = (⟨↑|μ_z|↑⟩ − ⟨↓|μ_z|↓⟩)/2, the σ_z coupling moment.
    pub fn mu_effective(&self) -> T {
        (self.mu_z_up - self.mu_z_down) * lit::<T>(0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::registry::SpeciesRegistry;

    fn be9() -> IonSpecies<f64> {
        SpeciesRegistry::builtin().get("9Be+").unwrap().clone()
    }

    #[test]
    fn label_parsing() {
        assert_eq!("F=2,mF=0".parse::<LevelLabel>().unwrap(), LevelLabel::new(2, 0));
        assert_eq!("(1, 1)".parse::<LevelLabel>().unwrap(), LevelLabel::new(1, 1));
        assert_eq!("|F=2, mF=-2>".parse::<LevelLabel>().unwrap(), LevelLabel::new(2, -2));
        let half: LevelLabel = "F=3/2,mF=-1/2".parse().unwrap();
        assert_eq!((half.twice_f(), half.twice_mf()), (3, -1));
        assert_eq!(half.to_string(), "F=3/2,mF=-1/2");
        assert!("F=1,mF=2".parse::<LevelLabel>().is_err());
        assert!("F=1".parse::<LevelLabel>().is_err());
    }

    #[test]
    fn rejects_negative_field_and_bad_spin() {
        let be = be9();
        assert!(hyperfine_hamiltonian(&be, -1e-3).is_err());
        let mut bad = be.clone();
        bad.nuclear_spin = 1.3;
        assert!(matches!(hyperfine_hamiltonian(&bad, 0.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn hamiltonian_shape_and_blocks() {
        let be = be9();
        let h = hyperfine_hamiltonian(&be, 0.0119).unwrap();
        assert_eq!(h.shape(), (8, 8));
        assert!((&h - h.transpose()).amax() == 0.0);
        let states = basis_states(3);
        for r in 0..8 {
            for c in 0..8 {
                let mf_r = states[r].0 + states[r].1;
                let mf_c = states[c].0 + states[c].1;
                if mf_r != mf_c {
                    assert_eq!(h[(r, c)], 0.0);
                }
            }
        }
    }

    #[test]
    fn trace_independent_of_field() {
        let be = be9();
        let t0 = hyperfine_hamiltonian(&be, 0.0).unwrap().trace();
        for b in [1e-3, 0.0119, 0.5, 1.0] {
            let t = hyperfine_hamiltonian(&be, b).unwrap().trace();
            assert!((t - t0).abs() <= 1e-10 * be.hyperfine_a.abs());
        }
    }

    #[test]
    fn zero_field_interval_rule_and_degeneracy() {
        let be = be9();
        let levels = breit_rabi_levels(&be, 0.0).unwrap();
        assert_eq!(levels.len(), 8);
        let f1: Vec<_> = levels.iter().filter(|l| l.label.twice_f() == 2).collect();
        let f2: Vec<_> = levels.iter().filter(|l| l.label.twice_f() == 4).collect();
        assert_eq!((f1.len(), f2.len()), (3, 5));
        let e1 = interval_rule_energy(&be, 2);
        let e2 = interval_rule_energy(&be, 4);
        for l in &f1 {
            assert!((l.energy - e1).abs() < 1e-6);
        }
        for l in &f2 {
            assert!((l.energy - e2).abs() < 1e-6);
        }
        // F=2 ↔ F=1 splitting is 2|A| for I = 3/2.
        assert!(((e1 - e2).abs() - 2.0 * be.hyperfine_a.abs()).abs() < 1e-6);
    }

    #[test]
    fn stretched_states_are_linear_in_field() {
        let be = be9();
        let c = PhysicalConstants::<f64>::codata();
        let e0 = interval_rule_energy(&be, 4);
        for b in [0.0, 0.003, 0.0119, 0.2, 1.0] {
            let up = level(&be, LevelLabel::new(2, 2), b).unwrap();
            let dn = level(&be, LevelLabel::new(2, -2), b).unwrap();
            let slope = c.mu_b / c.planck * (be.g_j / 2.0 + 1.5 * be.g_i);
            assert!((up.energy - (e0 + slope * b)).abs() < 1e-6);
            assert!((dn.energy - (e0 - slope * b)).abs() < 1e-6);
        }
    }

    /// Closed-form Breit–Rabi energies for the 2×2 mF blocks.
    fn breit_rabi_closed_form(be: &IonSpecies<f64>, mf: f64, b: f64, upper_f: bool) -> f64 {
        let c = PhysicalConstants::<f64>::codata();
        let i = be.nuclear_spin;
        let a = be.hyperfine_a;
        let dhfs = a * (i + 0.5);
        let x = (be.g_j - be.g_i) * c.mu_b * b / (c.planck * dhfs);
        let root = (1.0 + 4.0 * mf * x / (2.0 * i + 1.0) + x * x).sqrt();
        let sign = if upper_f { 1.0 } else { -1.0 };
        // Energies relative to the centroid; the F = I + 1/2 branch takes +.
        -dhfs / (2.0 * (2.0 * i + 1.0)) + be.g_i * c.mu_b * mf * b / c.planck + sign * dhfs / 2.0 * root
    }

    #[test]
    fn matches_closed_form_breit_rabi_at_12_mt() {
        let be = be9();
        let b = 0.012;
        for l in breit_rabi_levels(&be, b).unwrap() {
            if l.label.twice_mf().abs() == 4 {
                continue;
            }
            let upper = l.label.twice_f() == 4;
            let expected = breit_rabi_closed_form(&be, l.label.mf(), b, upper);
            assert!(
                ((l.energy - expected) / expected).abs() < 1e-10,
                "{}: {} vs {}",
                l.label,
                l.energy,
                expected
            );
        }
    }

    #[test]
    fn eigenvectors_orthonormal_and_mf_pure() {
        let be = be9();
        let states = basis_states(3);
        for b in [0.0, 0.005, 0.0119, 0.3, 1.0] {
            let levels = breit_rabi_levels(&be, b).unwrap();
            for (p, lp) in levels.iter().enumerate() {
                for (q, lq) in levels.iter().enumerate() {
                    let o = lp.eigenvector.dotc(&lq.eigenvector);
                    let expected = if p == q { 1.0 } else { 0.0 };
                    assert!((o.re - expected).abs() <= 1e-12 && o.im.abs() <= 1e-12);
                }
                for (k, a) in lp.eigenvector.iter().enumerate() {
                    if states[k].0 + states[k].1 != lp.label.twice_mf() {
                        assert_eq!(a.norm(), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn eigenvalue_sum_independent_of_field() {
        let be = be9();
        let sum = |b: f64| breit_rabi_levels(&be, b).unwrap().iter().map(|l| l.energy).sum::<f64>();
        let s0 = sum(0.0);
        for b in [0.01, 0.1, 1.0] {
            assert!((sum(b) - s0).abs() <= 1e-10 * be.hyperfine_a.abs());
        }
    }

    #[test]
    fn transition_frequency_zero_field_limit() {
        let be = be9();
        let w = transition_frequency(&be, LevelLabel::new(1, 1), LevelLabel::new(2, 0), 0.0).unwrap();
        let expected = 2.0 * std::f64::consts::PI * 2.0 * be.hyperfine_a.abs();
        assert!((w - expected).abs() < 1e-6 * expected * 1e-6);
        assert!(transition_frequency(&be, LevelLabel::new(2, 0), LevelLabel::new(2, 0), 0.0).is_err());
    }

    #[test]
    fn transition_frequency_is_continuous() {
        let be = be9();
        let (a, b) = (LevelLabel::new(1, 1), LevelLabel::new(2, 0));
        let eps = 1e-7;
        for k in 0..20 {
            let field = 0.001 * k as f64;
            let w0 = transition_frequency(&be, a, b, field).unwrap();
            let w1 = transition_frequency(&be, a, b, field + eps).unwrap();
            // Bound the slope by the largest Zeeman slope 2π·2μ_B/h.
            let c = PhysicalConstants::<f64>::codata();
            let bound = 2.0 * std::f64::consts::PI * 2.0 * c.mu_b / c.planck;
            assert!((w1 - w0).abs() <= bound * eps);
        }
    }

    #[test]
    fn stretched_pair_microwave_frequency_at_12_mt() {
        let be = be9();
        let w = transition_frequency(&be, LevelLabel::new(2, 2), LevelLabel::new(2, 0), 0.012).unwrap();
        // Oracle: stretched state is linear, |2,0⟩ from the closed form.
        let c = PhysicalConstants::<f64>::codata();
        let e22 = interval_rule_energy(&be, 4) + c.mu_b / c.planck * (be.g_j / 2.0 + 1.5 * be.g_i) * 0.012;
        let e20 = breit_rabi_closed_form(&be, 0.0, 0.012, true);
        let expected = 2.0 * std::f64::consts::PI * (e22 - e20);
        assert!(((w - expected) / expected).abs() < 1e-10);
        assert!(w > 0.0);
    }

    /// Finite-difference bisection oracle for the clock point.
    fn clock_point_oracle(be: &IonSpecies<f64>) -> f64 {
        let (a, b) = (LevelLabel::new(1, 1), LevelLabel::new(2, 0));
        let d = |x: f64| {
            let h = 1e-7;
            let wp = transition_frequency(be, a, b, x + h).unwrap();
            let wm = transition_frequency(be, a, b, x - h).unwrap();
            (wp - wm) / (2.0 * h)
        };
        let (mut lo, mut hi) = (5e-3, 20e-3);
        let mut f_lo = d(lo);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            let f = d(mid);
            if f * f_lo < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                f_lo = f;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn clock_point_near_12_mt() {
        let be = be9();
        let pair = (LevelLabel::new(1, 1), LevelLabel::new(2, 0));
        let cp = field_independent_point(&be, pair, (5e-3, 20e-3)).unwrap();
        assert!((cp.field - 0.012).abs() < 0.5e-3, "{}", cp.field);
        assert!(cp.slope.abs() < 1e-6 * cp.omega0);
        assert!(cp.curvature.abs() > 0.0);
        let oracle = clock_point_oracle(&be);
        assert!((cp.field - oracle).abs() < 1e-8, "{} vs {}", cp.field, oracle);
        assert!((cp.field - 11.96e-3).abs() < 0.05e-3);
    }

    #[test]
    fn clock_point_requires_sign_change() {
        let be = be9();
        let pair = (LevelLabel::new(1, 1), LevelLabel::new(2, 0));
        assert!(matches!(
            field_independent_point(&be, pair, (20e-3, 40e-3)),
            Err(Error::NoStationaryPoint { .. })
        ));
    }

    #[test]
    fn transverse_element_zero_field_clebsch_gordan() {
        let be = be9();
        let a = level(&be, LevelLabel::new(2, 0), 0.0).unwrap();
        let b = level(&be, LevelLabel::new(1, 1), 0.0).unwrap();
        let m = dipole_matrix_element(&be, &a, &b, DipoleAxis::X).unwrap();
        let c = PhysicalConstants::<f64>::codata();
        // Clebsch–Gordan oracle: |2,0⟩ = (|+,-1/2⟩ + |-,+1/2⟩)/√2,
        // |1,1⟩ = -½|+,+1/2⟩ + (√3/2)|-,+3/2⟩, giving ⟨J_x⟩ = -1/(4√2) and ⟨I_x⟩ = -⟨J_x⟩.
        let expected = (be.g_j - be.g_i) * c.mu_b / (4.0 * 2f64.sqrt());
        assert!((m.norm() - expected).abs() < 1e-12 * expected);
        let approx_gj = be.g_j * c.mu_b / (4.0 * 2f64.sqrt());
        assert!((m.norm() / approx_gj - 1.0).abs() < 1e-3);
    }

    #[test]
    fn dipole_elements_hermitian_and_selection_rules() {
        let be = be9();
        let levels = breit_rabi_levels(&be, 0.0119).unwrap();
        for a in &levels {
            for b in &levels {
                let dmf = (a.label.twice_mf() - b.label.twice_mf()).abs();
                let mx = dipole_matrix_element(&be, a, b, DipoleAxis::X).unwrap();
                let mz = dipole_matrix_element(&be, a, b, DipoleAxis::Z).unwrap();
                let mx_rev = dipole_matrix_element(&be, b, a, DipoleAxis::X).unwrap();
                assert!((mx - mx_rev.conj()).norm() < 1e-36);
                if dmf != 2 {
                    assert_eq!(mx.norm(), 0.0);
                }
                if dmf != 0 {
                    assert_eq!(mz.norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn diagonal_moment_is_minus_energy_slope() {
        let be = be9();
        let c = PhysicalConstants::<f64>::codata();
        for label in [LevelLabel::new(2, 2), LevelLabel::new(2, 0), LevelLabel::new(1, 1), LevelLabel::new(1, -1)] {
            for b in [0.002, 0.0119, 0.1] {
                let l = level(&be, label, b).unwrap();
                let mu = dipole_matrix_element(&be, &l, &l, DipoleAxis::Z).unwrap().re;
                let h = 1e-6;
                let ep = level(&be, label, b + h).unwrap().energy;
                let em = level(&be, label, b - h).unwrap().energy;
                let fd = -c.planck * (ep - em) / (2.0 * h);
                assert!(((mu - fd) / mu).abs() < 1e-6, "{label} at {b}: {mu} vs {fd}");
            }
        }
    }

    #[test]
    fn clock_pair_properties() {
        let be = be9();
        let pair = QubitPair::new(&be, LevelLabel::new(1, 1), LevelLabel::new(2, 0), 0.0119446).unwrap();
        assert!(pair.omega0 > 0.0);
        assert!(pair.mu_x_updown > 0.0);
        // Field-insensitive pair: equal diagonal moments.
        assert!(pair.mu_effective().abs() < 1e-3 * pair.mu_z_up.abs());
        assert!(QubitPair::new(&be, LevelLabel::new(2, 0), LevelLabel::new(1, 1), 0.0119).is_err());
        let moved = pair.at_field(&be, 0.005).unwrap();
        assert!(moved.mu_effective().abs() > 1e-26);
    }

    #[test]
    fn works_in_single_precision() {
        let be: IonSpecies<f32> = be9().cast();
        let levels = breit_rabi_levels(&be, 0.0119f32).unwrap();
        assert_eq!(levels.len(), 8);
        let w = transition_frequency(&be, LevelLabel::new(1, 1), LevelLabel::new(2, 0), 0.0119f32).unwrap();
        assert!((w / (2.0 * std::f32::consts::PI) - 1.2075e9).abs() < 1e6);
    }
}
