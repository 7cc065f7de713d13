//! Equilibrium positions and normal modes of a linear ion chain along y.
//!
//! Positions are solved in the dimensionless units of the harmonic + Coulomb
//! potential, with length scale ℓ = (e²/(4πε₀ m ω_y²))^{1/3}.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::real::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn as_char(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::Parse(format!("unknown axis '{other}' (expected x, y or z)"))),
        }
    }

    /// Unit vector of this axis.
    pub fn unit<T: Real>(self) -> nalgebra::Vector3<T> {
        match self {
            Axis::X => nalgebra::Vector3::x(),
            Axis::Y => nalgebra::Vector3::y(),
            Axis::Z => nalgebra::Vector3::z(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainConfig<T> {
    pub n: usize,
    /// Ion mass (kg).
    pub mass: T,
    /// Axial trap frequency ω_y (rad/s).
    pub omega_axial: T,
    pub omega_x: T,
    pub omega_z: T,
}

impl<T: Real> ChainConfig<T> {
    pub fn new(n: usize, mass: T, omega_axial: T, omega_x: T, omega_z: T) -> Result<Self> {
        let cfg = Self {
            n,
            mass,
            omega_axial,
            omega_x,
            omega_z,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("chain needs at least one ion".into()));
        }
        if !(self.mass > T::zero()) {
            return Err(Error::InvalidInput("ion mass must be positive".into()));
        }
        for (name, w) in [("ω_y", self.omega_axial), ("ω_x", self.omega_x), ("ω_z", self.omega_z)] {
            if !(w > T::zero()) || !w.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {w}")));
            }
        }
        Ok(())
    }

    pub fn trap_frequency(&self, axis: Axis) -> T {
        match axis {
            Axis::X => self.omega_x,
            Axis::Y => self.omega_axial,
            Axis::Z => self.omega_z,
        }
    }

    /// ℓ = (e²/(4πε₀ m ω_y²))^{1/3} (m).
    pub fn length_scale(&self) -> T {
        let c = PhysicalConstants::<T>::codata();
        let four_pi = T::two_pi() + T::two_pi();
        (c.elementary_charge * c.elementary_charge / (four_pi * c.epsilon0 * self.mass * self.omega_axial * self.omega_axial))
            .powf(lit(1.0 / 3.0))
    }
}

/// Which transverse mode a target frequency refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeSelection {
    /// Center of mass (the highest transverse mode).
    Com,
    /// Two-ion out-of-phase mode (the second highest transverse mode).
    Rocking,
    /// Mode index in ascending frequency order.
    Index(usize),
}

#[derive(Clone, Debug)]
pub struct Mode<T: Real> {
    /// ω_j (rad/s).
    pub omega: T,
    /// Participation vector b_{j,n}, unit norm; first significant entry positive.
    pub b: DVector<T>,
    /// q̃₀ʲ = √(ħ/(2mω_j)) (m).
    pub q0: T,
}

#[derive(Clone, Debug)]
pub struct ModeDecomposition<T: Real> {
    pub axis: Axis,
    /// Equilibrium positions along y (m).
    pub positions: Vec<T>,
    /// Sorted by ascending ω_j.
    pub modes: Vec<Mode<T>>,
}

impl<T: Real> ModeDecomposition<T> {
    pub fn n_ions(&self) -> usize {
        self.positions.len()
    }

    /// Max |Σₙ b_{j,n} b_{k,n} − δ_jk|.
    pub fn orthonormality_defect(&self) -> T {
        let mut worst = T::zero();
        for (j, a) in self.modes.iter().enumerate() {
            for (k, b) in self.modes.iter().enumerate() {
                let target = if j == k { T::one() } else { T::zero() };
                worst = worst.max((a.b.dot(&b.b) - target).abs());
            }
        }
        worst
    }

    pub fn select(&self, selection: ModeSelection) -> Result<usize> {
        let n = self.modes.len();
        let idx = match selection {
            ModeSelection::Com => n.checked_sub(1),
            ModeSelection::Rocking => n.checked_sub(2),
            ModeSelection::Index(j) => (j < n).then_some(j),
        };
        idx.ok_or_else(|| Error::InvalidInput(format!("mode {selection:?} does not exist for {n} ions")))
    }
}

/// Dimensionless force on each ion: u_n − Σ_m sgn(u_n − u_m)/(u_n − u_m)².
fn chain_force<T: Real>(u: &DVector<T>) -> DVector<T> {
    let n = u.len();
    DVector::from_fn(n, |i, _| {
        let mut f = u[i];
        for m in 0..n {
            if m != i {
                let d = u[i] - u[m];
                f -= d.signum() / (d * d);
            }
        }
        f
    })
}

/// Axial Hessian A: A_nn = 1 + 2Σ 1/|Δ|³, A_nm = −2/|Δ|³.
fn axial_hessian<T: Real>(u: &DVector<T>) -> DMatrix<T> {
    let n = u.len();
    let two = lit::<T>(2.0);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = T::one();
        for m in 0..n {
            if m != i {
                let k = two / (u[i] - u[m]).abs().powi(3);
                a[(i, i)] += k;
                a[(i, m)] = -k;
            }
        }
    }
    a
}

/// Dimensionless equilibrium positions (units of ℓ), ascending.
pub fn dimensionless_equilibrium<T: Real>(n: usize) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::InvalidInput("chain needs at least one ion".into()));
    }
    if n == 1 {
        return Ok(vec![T::zero()]);
    }
    let spacing = lit::<T>(2.0 * (n as f64).powf(-0.56)).max(lit(0.3));
    let mid = lit::<T>((n as f64 - 1.0) / 2.0);
    let mut u = DVector::from_fn(n, |i, _| (lit::<T>(i as f64) - mid) * spacing);
    let tol = lit::<T>(1e-12);
    let mut f = chain_force(&u);
    for _ in 0..200 {
        if f.amax() < tol {
            break;
        }
        let a = axial_hessian(&u);
        let step = a
            .lu()
            .solve(&(-&f))
            .ok_or_else(|| Error::Singular("chain Hessian is singular".into()))?;
        let mut t = T::one();
        loop {
            let trial = &u + &step * t;
            let ordered = (1..n).all(|k| trial[k] > trial[k - 1]);
            if ordered {
                let ft = chain_force(&trial);
                if ft.norm() < f.norm() || t < lit(1e-6) {
                    u = trial;
                    f = ft;
                    break;
                }
            }
            t *= lit(0.5);
            if t < lit(1e-12) {
                return Err(Error::NonConvergence {
                    what: "chain equilibrium line search".into(),
                    residual: f.amax().to_f64_lossy(),
                });
            }
        }
    }
    // Symmetrize about the center to remove round-off asymmetry.
    let sym: Vec<T> = (0..n).map(|i| (u[i] - u[n - 1 - i]) * lit::<T>(0.5)).collect();
    let residual = chain_force(&DVector::from_vec(sym.clone())).amax();
    if residual >= tol {
        return Err(Error::NonConvergence {
            what: "chain equilibrium".into(),
            residual: residual.to_f64_lossy(),
        });
    }
    Ok(sym)
}

/// Equilibrium positions along y (m), antisymmetric about the trap center.
pub fn equilibrium_positions<T: Real>(cfg: &ChainConfig<T>) -> Result<Vec<T>> {
    cfg.validate()?;
    let l = cfg.length_scale();
    Ok(dimensionless_equilibrium::<T>(cfg.n)?.into_iter().map(|u| u * l).collect())
}

/// √(ħ/(2mω)) (m).
pub fn ground_state_extent<T: Real>(mass: T, omega: T) -> Result<T> {
    if !(mass > T::zero()) || !(omega > T::zero()) {
        return Err(Error::InvalidInput(format!("ground-state extent needs m > 0 and ω > 0 (got {mass}, {omega})")));
    }
    let hbar = PhysicalConstants::<T>::codata().hbar;
    Ok((hbar / (lit::<T>(2.0) * mass * omega)).sqrt())
}

/// Dimensionless Hessian (units of m ω_y²) for motion along `axis`.
fn dimensionless_hessian<T: Real>(u: &DVector<T>, axis: Axis, beta: T) -> DMatrix<T> {
    let a = axial_hessian(u);
    match axis {
        Axis::Y => a,
        Axis::X | Axis::Z => {
            let n = u.len();
            let coupling = (a - DMatrix::identity(n, n)) * lit::<T>(0.5);
            DMatrix::identity(n, n) * (beta * beta) - coupling
        }
    }
}

fn fix_sign<T: Real>(mut b: DVector<T>) -> DVector<T> {
    if let Some(first) = b.iter().copied().find(|v| v.abs() > lit(1e-9)) {
        if first < T::zero() {
            b.neg_mut();
        }
    }
    b
}

pub fn normal_modes<T: Real>(cfg: &ChainConfig<T>, axis: Axis) -> Result<ModeDecomposition<T>> {
    cfg.validate()?;
    let u = DVector::from_vec(dimensionless_equilibrium::<T>(cfg.n)?);
    let beta = cfg.trap_frequency(axis) / cfg.omega_axial;
    let hessian = dimensionless_hessian(&u, axis, beta);
    let eig = SymmetricEigen::new(hessian);
    let mut order: Vec<usize> = (0..cfg.n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut modes = Vec::with_capacity(cfg.n);
    for (j, &k) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[k];
        if !(lambda > T::zero()) {
            return Err(Error::Instability {
                axis: axis.as_char(),
                mode: j,
                eigenvalue: lambda.to_f64_lossy(),
            });
        }
        let omega = cfg.omega_axial * lambda.sqrt();
        modes.push(Mode {
            omega,
            b: fix_sign(eig.eigenvectors.column(k).into_owned()),
            q0: ground_state_extent(cfg.mass, omega)?,
        });
    }
    let l = cfg.length_scale();
    Ok(ModeDecomposition {
        axis,
        positions: u.iter().map(|&v| v * l).collect(),
        modes,
    })
}

/// Transverse trap frequency that puts the selected transverse mode at `target` (rad/s).
///
/// Transverse eigenvalues are β² − c_j with c_j the eigenvalues of (A − 1)/2,
/// so β² = (ω_j/ω_y)² + c_j.
pub fn transverse_frequency_for_mode<T: Real>(n: usize, omega_axial: T, target: T, selection: ModeSelection) -> Result<T> {
    if !(omega_axial > T::zero()) || !(target > T::zero()) {
        return Err(Error::InvalidInput("mode frequencies must be positive".into()));
    }
    let u = DVector::from_vec(dimensionless_equilibrium::<T>(n)?);
    let coupling = (axial_hessian(&u) - DMatrix::identity(n, n)) * lit::<T>(0.5);
    let mut c: Vec<T> = SymmetricEigen::new(coupling).eigenvalues.iter().copied().collect();
    // Ascending transverse frequency ⇔ descending c_j.
    c.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let idx = match selection {
        ModeSelection::Com => n.checked_sub(1),
        ModeSelection::Rocking => n.checked_sub(2),
        ModeSelection::Index(j) => (j < n).then_some(j),
    }
    .ok_or_else(|| Error::InvalidInput(format!("mode {selection:?} does not exist for {n} ions")))?;
    let ratio = target / omega_axial;
    let beta2 = ratio * ratio + c[idx];
    // Every other transverse mode must stay real.
    let lowest = beta2 - c[0];
    if !(lowest > T::zero()) {
        return Err(Error::Instability {
            axis: 't',
            mode: 0,
            eigenvalue: lowest.to_f64_lossy(),
        });
    }
    Ok(omega_axial * beta2.sqrt())
}

/// One row of the modes CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeRow {
    pub axis: char,
    pub j: usize,
    pub omega_hz: f64,
    pub q0_m: f64,
    pub b: Vec<f64>,
}

pub fn mode_rows(decomposition: &ModeDecomposition<f64>) -> Vec<ModeRow> {
    decomposition
        .modes
        .iter()
        .enumerate()
        .map(|(j, m)| ModeRow {
            axis: decomposition.axis.as_char(),
            j,
            omega_hz: m.omega / (2.0 * std::f64::consts::PI),
            q0_m: m.q0,
            b: m.b.iter().copied().collect(),
        })
        .collect()
}

/// Columns: axis, j, omega_j_Hz, q0_j_m, b_1..b_N.
pub fn write_modes_csv<W: Write>(writer: W, rows: &[ModeRow]) -> Result<()> {
    let n = rows.first().map_or(0, |r| r.b.len());
    if rows.iter().any(|r| r.b.len() != n) {
        return Err(Error::InvalidInput("mode rows have different ion counts".into()));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["axis".to_string(), "j".into(), "omega_j_Hz".into(), "q0_j_m".into()];
    header.extend((1..=n).map(|k| format!("b_{k}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.axis.to_string(), r.j.to_string(), format!("{:e}", r.omega_hz), format!("{:e}", r.q0_m)];
        rec.extend(r.b.iter().map(|v| format!("{v:e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_modes_csv<R: Read>(reader: R) -> Result<Vec<ModeRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    let bad = |what: &str| Error::Parse(format!("modes CSV: bad {what}"));
    for rec in r.records() {
        let rec = rec?;
        if rec.len() < 4 {
            return Err(bad("row length"));
        }
        let num = |k: usize, what: &str| rec[k].parse::<f64>().map_err(|_| bad(what));
        rows.push(ModeRow {
            axis: rec[0].chars().next().ok_or_else(|| bad("axis"))?,
            j: rec[1].parse().map_err(|_| bad("mode index"))?,
            omega_hz: num(2, "frequency")?,
            q0_m: num(3, "extent")?,
            b: (4..rec.len()).map(|k| num(k, "participation")).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}
