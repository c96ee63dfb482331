use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::PulseBlock;
use crate::error::{Error, Result};
use crate::hamiltonians::{FieldConfig, SpeciesKind, SpinSpecies};
use crate::spin_core::{eigh, Operator, Spin};

/// NV Rabi frequency giving a 150 ns π pulse.
pub const DEFAULT_NV_RABI_MHZ: f64 = 1.0 / 0.3;

/// Bath spin attached to the NV sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BathModel {
    /// Bare spin-1/2 with Larmor frequency `frequency_mhz`.
    Bare { frequency_mhz: f64 },
    /// Electron spin-1/2 species with nuclei, one orientation.
    Species { species: SpinSpecies, field: FieldConfig },
}

/// Bath operators in the bath eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct BathSpin {
    /// Lab-frame eigenenergies, MHz.
    pub energies: Vec<f64>,
    /// Electron manifold of each eigenstate, ±1/2.
    pub manifolds: Vec<f64>,
    /// Electron Sx between states of adjacent manifolds.
    pub drive: Operator,
    /// Electron Sz restricted to within-manifold elements.
    pub coupling: Operator,
}

impl BathSpin {
    pub fn from_model(model: &BathModel) -> Result<Self> {
        match model {
            BathModel::Bare { frequency_mhz } => {
                if !frequency_mhz.is_finite() {
                    return Err(Error::InvalidArgument("bath frequency must be finite".into()));
                }
                let (sx, sz) = spin_ops();
                Self::from_operators(&sz.scale(*frequency_mhz), &sx, &sz)
            }
            BathModel::Species { species, field } => {
                if species.kind == SpeciesKind::Nv || species.electron_spin != Spin::HALF {
                    return Err(Error::InvalidArgument(format!(
                        "bath species must carry an electron spin 1/2, got {}",
                        species.kind.name()
                    )));
                }
                let s = species.electron_operators();
                Self::from_operators(&species.hamiltonian(field), &s.x, &s.z)
            }
        }
    }

    /// Builds the bath from its Hamiltonian and electron Sx, Sz.
    pub fn from_operators(h: &Operator, sx: &Operator, sz: &Operator) -> Result<Self> {
        let eig = eigh(h)?;
        let sx = eig.transform(sx);
        let sz = eig.transform(sz);
        let n = eig.dim();
        let manifolds: Vec<f64> = (0..n).map(|i| if sz.get(i, i).re >= 0.0 { 0.5 } else { -0.5 }).collect();
        let mut drive = Operator::zeros(n);
        let mut coupling = Operator::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if manifolds[i] == manifolds[j] {
                    coupling.set(i, j, sz.get(i, j));
                } else {
                    drive.set(i, j, sx.get(i, j));
                }
            }
        }
        Ok(Self { energies: eig.energies, manifolds, drive, coupling })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }
}

fn spin_ops() -> (Operator, Operator) {
    let s = crate::spin_core::SpinOperators::new(Spin::HALF);
    (s.x, s.z)
}

/// NV two-level sensor ⊗ one bath spin.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSystem {
    /// NV mS = 0 ↔ −1 transition frequency, MHz.
    pub nv_frequency_mhz: f64,
    /// Shift of the NV transition between bath manifolds, MHz.
    pub coupling_mhz: f64,
    /// Rabi frequency of the NV π/2 and π pulses, MHz.
    pub nv_rabi_mhz: f64,
    pub model: BathModel,
    bath: BathSpin,
}

impl PairSystem {
    pub fn new(nv_frequency_mhz: f64, model: BathModel, coupling_mhz: f64) -> Result<Self> {
        if !nv_frequency_mhz.is_finite() || !coupling_mhz.is_finite() {
            return Err(Error::InvalidArgument("NV frequency and coupling must be finite".into()));
        }
        let bath = BathSpin::from_model(&model)?;
        Ok(Self { nv_frequency_mhz, coupling_mhz, nv_rabi_mhz: DEFAULT_NV_RABI_MHZ, model, bath })
    }

    /// Bare spin-1/2 bath.
    pub fn bare(nv_frequency_mhz: f64, bath_frequency_mhz: f64, coupling_mhz: f64) -> Result<Self> {
        Self::new(nv_frequency_mhz, BathModel::Bare { frequency_mhz: bath_frequency_mhz }, coupling_mhz)
    }

    pub fn with_nv_rabi(&self, nv_rabi_mhz: f64) -> Self {
        Self { nv_rabi_mhz, ..self.clone() }
    }

    pub fn with_coupling(&self, coupling_mhz: f64) -> Self {
        Self { coupling_mhz, ..self.clone() }
    }

    pub fn bath(&self) -> &BathSpin {
        &self.bath
    }

    pub fn bath_dim(&self) -> usize {
        self.bath.dim()
    }

    pub fn dim(&self) -> usize {
        2 * self.bath.dim()
    }
}

/// Carrier frequencies of the doubly rotating frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frames {
    pub mw_mhz: f64,
    pub rf_mhz: f64,
}

impl Frames {
    /// Frame resonant with the NV and a bath line at `rf_mhz`.
    pub fn resonant(system: &PairSystem, rf_mhz: f64) -> Self {
        Self { mw_mhz: system.nv_frequency_mhz, rf_mhz }
    }
}

/// Rotating-wave Hamiltonian (MHz) of one block, NV ⊗ bath ordering.
///
/// NV basis is (|0⟩, |1⟩) with σz = |1⟩⟨1| − |0⟩⟨0|. The bath sits in its
/// eigenbasis with energies shifted by −f_rf·mS.
pub fn rotating_frame_hamiltonian(system: &PairSystem, block: &PulseBlock, frames: &Frames) -> Result<Operator> {
    let nb = system.bath_dim();
    let bath = system.bath();
    let nv_id = Operator::identity(2);
    let bath_id = Operator::identity(nb);
    let sigma_z = Operator::from_real_diagonal(&[-1.0, 1.0]);

    let delta = system.nv_frequency_mhz - frames.mw_mhz;
    let bath_diag: Vec<f64> = bath.energies.iter().zip(&bath.manifolds).map(|(e, m)| e - frames.rf_mhz * m).collect();
    let mut e0 = bath_diag.iter().sum::<f64>() / nb as f64;
    if !e0.is_finite() {
        e0 = 0.0;
    }
    // Removing the trace only changes a global phase.
    let bath_h = Operator::from_real_diagonal(&bath_diag.iter().map(|e| e - e0).collect::<Vec<_>>());

    let mut h = sigma_z.scale(delta / 2.0).kron(&bath_id) + nv_id.kron(&bath_h);
    if system.coupling_mhz != 0.0 {
        h += sigma_z.kron(&bath.coupling).scale(system.coupling_mhz / 2.0);
    }
    match block {
        PulseBlock::Mw(p) if p.rabi_mhz != 0.0 => {
            let a = Complex64::from_polar(p.rabi_mhz / 2.0, -p.phase_rad);
            let mut d = Operator::zeros(2);
            d.set(1, 0, a);
            d.set(0, 1, a.conj());
            h += d.kron(&bath_id);
        }
        PulseBlock::Rf(p) if p.rabi_mhz != 0.0 => {
            let a = Complex64::from_polar(p.rabi_mhz, -p.phase_rad);
            let mut d = Operator::zeros(nb);
            for i in 0..nb {
                for j in 0..nb {
                    if bath.manifolds[i] > bath.manifolds[j] {
                        let v = a * bath.drive.get(i, j);
                        d.set(i, j, v);
                        d.set(j, i, v.conj());
                    }
                }
            }
            h += nv_id.kron(&d);
        }
        PulseBlock::Readout => {
            return Err(Error::InvalidArgument("readout has no Hamiltonian".into()));
        }
        _ => {}
    }
    Ok(h)
}
