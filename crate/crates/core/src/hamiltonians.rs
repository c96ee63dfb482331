//! NV ground-state, P1 and NVH spin Hamiltonians.
//!
//! Every Hamiltonian is written in a computational frame whose z axis is the
//! magnetic field direction, so electron labels mS refer to the field axis.
//! Defect tensors are axially symmetric about the defect's own ⟨111⟩ axis.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin_core::{Operator, ProductBasis, Spin};

/// μB/h in MHz/G.
pub const BOHR_MAGNETON_MHZ_PER_G: f64 = 1.3996245;
/// μN/h in MHz/G.
pub const NUCLEAR_MAGNETON_MHZ_PER_G: f64 = 0.76226e-3;
/// ¹⁴N nuclear g-factor.
pub const N14_NUCLEAR_G: f64 = 0.40376;

pub const NV_ZERO_FIELD_SPLITTING_MHZ: f64 = 2870.0;
pub const ELECTRON_G: f64 = 2.0024;

pub const P1_A_PAR_MHZ: f64 = 114.0;
pub const P1_A_PERP_MHZ: f64 = 81.0;
pub const P1_Q_PERP_MHZ: f64 = -3.97;

pub const NVH_A_H_PAR_MHZ: f64 = 13.69;
pub const NVH_A_H_PERP_MHZ: f64 = -9.05;
pub const NVH_A_N_PAR_MHZ: f64 = 2.94;
pub const NVH_A_N_PERP_MHZ: f64 = 3.1;

const AXIAL_TOL: f64 = 1e-9;

/// g·μB/h in MHz/G.
pub fn gyromagnetic_mhz_per_gauss(g: f64) -> f64 {
    g * BOHR_MAGNETON_MHZ_PER_G
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    magnitude_gauss: f64,
    direction: [f64; 3],
}

impl FieldConfig {
    /// Field of `magnitude_gauss` along `direction` (normalized here).
    pub fn new(magnitude_gauss: f64, direction: [f64; 3]) -> Result<Self> {
        if !magnitude_gauss.is_finite() || magnitude_gauss < 0.0 {
            return Err(Error::InvalidArgument(format!("field magnitude must be finite and >= 0, got {magnitude_gauss}")));
        }
        let v = Vector3::from(direction);
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidArgument("field direction must be a non-zero finite vector".into()));
        }
        let unit = v / norm;
        Ok(Self { magnitude_gauss, direction: [unit.x, unit.y, unit.z] })
    }

    /// Field along [111].
    pub fn along_111(magnitude_gauss: f64) -> Result<Self> {
        Self::new(magnitude_gauss, [1.0, 1.0, 1.0])
    }

    pub fn magnitude_gauss(&self) -> f64 {
        self.magnitude_gauss
    }

    pub fn direction(&self) -> Vector3<f64> {
        Vector3::from(self.direction)
    }

    /// Orthonormal (x, y, z) lab axes of the computational frame, z along B.
    pub fn frame(&self) -> [Vector3<f64>; 3] {
        let z = self.direction();
        let helper = if z.z.abs() < 0.9 { Vector3::z() } else { Vector3::x() };
        let x = helper.cross(&z).normalize();
        let y = z.cross(&x);
        [x, y, z]
    }

    /// Components of a lab-frame vector in the computational frame.
    pub fn to_frame(&self, v: &Vector3<f64>) -> [f64; 3] {
        let [x, y, z] = self.frame();
        [v.dot(&x), v.dot(&y), v.dot(&z)]
    }
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self::along_111(78.6).expect("valid default field")
    }
}

/// One of the four ⟨111⟩ bond directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub index: usize,
    pub axis: [f64; 3],
    /// cos of the angle between the axis and the field.
    pub projection: f64,
    pub axial: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrientationSet {
    pub orientations: [Orientation; 4],
}

impl OrientationSet {
    pub fn axial_count(&self) -> usize {
        self.orientations.iter().filter(|o| o.axial).count()
    }

    pub fn axial(&self) -> Option<&Orientation> {
        self.orientations.iter().find(|o| o.axial)
    }

    pub fn non_axial(&self) -> impl Iterator<Item = &Orientation> {
        self.orientations.iter().filter(|o| !o.axial)
    }
}

pub fn orientation_vectors() -> [Vector3<f64>; 4] {
    let s = 1.0 / 3.0_f64.sqrt();
    [
        Vector3::new(s, s, s),
        Vector3::new(s, -s, -s),
        Vector3::new(-s, s, -s),
        Vector3::new(-s, -s, s),
    ]
}

/// The four ⟨111⟩ axes tagged against the field direction.
pub fn orientation_axes(field: &FieldConfig) -> OrientationSet {
    let b = field.direction();
    let vs = orientation_vectors();
    let make = |index: usize| {
        let v = vs[index];
        let projection = v.dot(&b);
        Orientation { index, axis: [v.x, v.y, v.z], projection, axial: projection.abs() >= 1.0 - AXIAL_TOL }
    };
    OrientationSet { orientations: [make(0), make(1), make(2), make(3)] }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeciesKind {
    Nv,
    P1,
    Nvh,
}

impl SpeciesKind {
    pub fn name(self) -> &'static str {
        match self {
            SpeciesKind::Nv => "nv",
            SpeciesKind::P1 => "p1",
            SpeciesKind::Nvh => "nvh",
        }
    }
}

impl std::str::FromStr for SpeciesKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nv" => Ok(SpeciesKind::Nv),
            "p1" => Ok(SpeciesKind::P1),
            "nvh" => Ok(SpeciesKind::Nvh),
            other => Err(Error::InvalidArgument(format!("unknown species '{other}' (expected nv, p1 or nvh)"))),
        }
    }
}

/// Hyperfine-coupled nucleus with tensors axial about the defect axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nucleus {
    pub spin: Spin,
    pub a_par_mhz: f64,
    pub a_perp_mhz: f64,
    /// Nuclear g-factor; zero disables the nuclear Zeeman term.
    pub g_n: f64,
    /// Q⊥ in MHz, applied as Q⊥·(Iz′² − I(I+1)/3).
    pub quadrupole_mhz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinSpecies {
    pub kind: SpeciesKind,
    pub electron_spin: Spin,
    pub g: f64,
    pub zero_field_splitting_mhz: f64,
    pub nuclei: Vec<Nucleus>,
    pub axis: [f64; 3],
}

impl SpinSpecies {
    pub fn nv(axis: [f64; 3]) -> Self {
        Self {
            kind: SpeciesKind::Nv,
            electron_spin: Spin::ONE,
            g: ELECTRON_G,
            zero_field_splitting_mhz: NV_ZERO_FIELD_SPLITTING_MHZ,
            nuclei: vec![],
            axis: unit(axis),
        }
    }

    pub fn p1(axis: [f64; 3]) -> Self {
        Self {
            kind: SpeciesKind::P1,
            electron_spin: Spin::HALF,
            g: ELECTRON_G,
            zero_field_splitting_mhz: 0.0,
            nuclei: vec![Nucleus {
                spin: Spin::ONE,
                a_par_mhz: P1_A_PAR_MHZ,
                a_perp_mhz: P1_A_PERP_MHZ,
                g_n: N14_NUCLEAR_G,
                quadrupole_mhz: P1_Q_PERP_MHZ,
            }],
            axis: unit(axis),
        }
    }

    /// Nuclei ordered hydrogen then nitrogen.
    pub fn nvh(axis: [f64; 3]) -> Self {
        Self {
            kind: SpeciesKind::Nvh,
            electron_spin: Spin::HALF,
            g: ELECTRON_G,
            zero_field_splitting_mhz: 0.0,
            nuclei: vec![
                Nucleus { spin: Spin::HALF, a_par_mhz: NVH_A_H_PAR_MHZ, a_perp_mhz: NVH_A_H_PERP_MHZ, g_n: 0.0, quadrupole_mhz: 0.0 },
                Nucleus { spin: Spin::ONE, a_par_mhz: NVH_A_N_PAR_MHZ, a_perp_mhz: NVH_A_N_PERP_MHZ, g_n: 0.0, quadrupole_mhz: 0.0 },
            ],
            axis: unit(axis),
        }
    }

    pub fn default_for(kind: SpeciesKind, axis: [f64; 3]) -> Self {
        match kind {
            SpeciesKind::Nv => Self::nv(axis),
            SpeciesKind::P1 => Self::p1(axis),
            SpeciesKind::Nvh => Self::nvh(axis),
        }
    }

    pub fn with_axis(&self, axis: [f64; 3]) -> Self {
        Self { axis: unit(axis), ..self.clone() }
    }

    pub fn basis(&self) -> ProductBasis {
        let mut spins = vec![self.electron_spin];
        spins.extend(self.nuclei.iter().map(|n| n.spin));
        ProductBasis::new(spins)
    }

    pub fn dim(&self) -> usize {
        self.basis().dim()
    }

    /// Spin Hamiltonian H/h (MHz) in the field frame.
    pub fn hamiltonian(&self, field: &FieldConfig) -> Operator {
        let basis = self.basis();
        let n = field.to_frame(&Vector3::from(self.axis));
        let b = field.magnitude_gauss();
        let s = basis.spin_operators(0);

        let mut h = s.z.scale(gyromagnetic_mhz_per_gauss(self.g) * b);
        if self.zero_field_splitting_mhz != 0.0 {
            let sn = s.along(n);
            h += (&sn * &sn).scale(self.zero_field_splitting_mhz);
        }
        let s_comp = s.components();
        for (k, nucleus) in self.nuclei.iter().enumerate() {
            let i = basis.spin_operators(k + 1);
            let i_comp = i.components();
            let a = hyperfine_tensor(nucleus.a_par_mhz, nucleus.a_perp_mhz, n);
            for (row, s_op) in s_comp.iter().enumerate() {
                for (col, i_op) in i_comp.iter().enumerate() {
                    if a[row][col] != 0.0 {
                        h += (*s_op * *i_op).scale(a[row][col]);
                    }
                }
            }
            if nucleus.g_n != 0.0 {
                h += i.z.scale(nucleus.g_n * NUCLEAR_MAGNETON_MHZ_PER_G * b);
            }
            if nucleus.quadrupole_mhz != 0.0 {
                let spin = nucleus.spin.value();
                let i_n = i.along(n);
                let iz2 = &(&i_n * &i_n) - &Operator::identity(basis.dim()).scale(spin * (spin + 1.0) / 3.0);
                h += iz2.scale(nucleus.quadrupole_mhz);
            }
        }
        h
    }

    /// Electron spin operators in the full space.
    pub fn electron_operators(&self) -> crate::spin_core::SpinOperators {
        self.basis().spin_operators(0)
    }
}

/// A∥·n nᵀ + A⊥·(1 − n nᵀ) in frame coordinates.
fn hyperfine_tensor(a_par: f64, a_perp: f64, n: [f64; 3]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for (r, row) in t.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let delta = if r == c { 1.0 } else { 0.0 };
            *v = a_perp * delta + (a_par - a_perp) * n[r] * n[c];
        }
    }
    t
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = Vector3::from(v).normalize();
    [n.x, n.y, n.z]
}

/// NV ground state, H/h = D·Sz′² + (g μB/h)·B·S, 3×3.
pub fn build_nv_gs(field: &FieldConfig, axis: [f64; 3], zero_field_splitting_mhz: f64) -> Operator {
    SpinSpecies { zero_field_splitting_mhz, ..SpinSpecies::nv(axis) }.hamiltonian(field)
}

/// P1 centre, S = 1/2 ⊗ ¹⁴N I = 1, 6×6.
pub fn build_p1(field: &FieldConfig, axis: [f64; 3]) -> Operator {
    SpinSpecies::p1(axis).hamiltonian(field)
}

/// NVH⁻, S = 1/2 ⊗ I(H) = 1/2 ⊗ I(N) = 1, 12×12.
pub fn build_nvh(field: &FieldConfig, axis: [f64; 3]) -> Operator {
    SpinSpecies::nvh(axis).hamiltonian(field)
}

/// Field magnitude (G) from the two aligned-NV transitions.
pub fn calibrate_field(f_plus_mhz: f64, f_minus_mhz: f64, g: f64) -> Result<f64> {
    if !(f_plus_mhz.is_finite() && f_minus_mhz.is_finite() && g.is_finite()) || g <= 0.0 {
        return Err(Error::InvalidArgument("frequencies and g must be finite, g > 0".into()));
    }
    if f_minus_mhz <= 0.0 {
        return Err(Error::InvalidArgument(format!("f_minus must be positive, got {f_minus_mhz} MHz")));
    }
    if f_plus_mhz < f_minus_mhz {
        return Err(Error::InvalidOrdering { f_plus: f_plus_mhz, f_minus: f_minus_mhz });
    }
    Ok((f_plus_mhz - f_minus_mhz) / (2.0 * gyromagnetic_mhz_per_gauss(g)))
}
