//! Allowed ESR transitions, relative intensities, and resonance grouping.
//!
//! Selection is by drive matrix element |⟨f|Sx|i⟩|², not by quantum-number
//! rules: at tens of gauss the P1 hyperfine coupling is comparable to the
//! electron Zeeman energy and the basis labels are strongly mixed. A line must
//! also flip the electron polarization, ⟨Sz⟩, by at least `min_electron_flip`;
//! this keeps hyperfine-enhanced nuclear (ΔmS = 0) transitions out of the
//! ESR stick spectrum.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{orientation_axes, FieldConfig, SpeciesKind, SpinSpecies};
use crate::spin_core::{eigh, EigenSystem, Operator, ProductBasis};

pub const DEFAULT_THRESHOLD: f64 = 0.05;
pub const DEFAULT_MIN_ELECTRON_FLIP: f64 = 0.5;

const DEGENERACY_TOL_MHZ: f64 = 1e-9;
const LABEL_TIE_TOL: f64 = 1e-9;
const EQUIVALENT_ORIENTATION_TOL_MHZ: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineOptions {
    /// Minimum |⟨f|drive|i⟩|² relative to the strongest element.
    pub threshold: f64,
    /// Minimum change of electron ⟨Sz⟩ between the two endpoints.
    pub min_electron_flip: f64,
}

impl Default for LineOptions {
    fn default() -> Self {
        Self { threshold: DEFAULT_THRESHOLD, min_electron_flip: DEFAULT_MIN_ELECTRON_FLIP }
    }
}

impl LineOptions {
    fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidArgument(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        if !(self.min_electron_flip >= 0.0) {
            return Err(Error::InvalidArgument("min_electron_flip must be >= 0".into()));
        }
        Ok(())
    }
}

/// Dominant product-basis state of an eigenvector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateLabel {
    pub ms: f64,
    pub mi: Vec<f64>,
    /// Largest basis overlap |⟨basis|ψ⟩|².
    pub weight: f64,
    pub ambiguous: bool,
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|mS={:+}", self.ms)?;
        for m in &self.mi {
            write!(f, ", mI={m:+}")?;
        }
        write!(f, "⟩")?;
        if self.ambiguous {
            write!(f, "?")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LineGroup {
    I,
    II,
    III,
    IV,
    V,
    NvhLow,
    NvhHigh,
    Ungrouped,
}

impl LineGroup {
    pub const P1: [LineGroup; 5] = [LineGroup::I, LineGroup::II, LineGroup::III, LineGroup::IV, LineGroup::V];

    /// Short name used for named frequencies.
    pub fn key(self) -> &'static str {
        match self {
            LineGroup::I => "i",
            LineGroup::II => "ii",
            LineGroup::III => "iii",
            LineGroup::IV => "iv",
            LineGroup::V => "v",
            LineGroup::NvhLow => "nvh_low",
            LineGroup::NvhHigh => "nvh_high",
            LineGroup::Ungrouped => "ungrouped",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionLine {
    pub frequency_mhz: f64,
    pub intensity: f64,
    pub lower: StateLabel,
    pub upper: StateLabel,
    pub multiplicity: u8,
    /// Index of the representative ⟨111⟩ orientation.
    pub orientation: usize,
    pub axial: bool,
    pub group: LineGroup,
}

impl TransitionLine {
    /// Multiplicity-weighted intensity.
    pub fn weight(&self) -> f64 {
        self.multiplicity as f64 * self.intensity
    }
}

/// Consecutive eigenvalue runs closer than the degeneracy tolerance.
fn degenerate_clusters(energies: &[f64]) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (k, &e) in energies.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if e - energies[*c.last().unwrap()] <= DEGENERACY_TOL_MHZ => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    clusters
}

fn label_state(eig: &EigenSystem, k: usize, basis: &ProductBasis, degenerate: bool) -> StateLabel {
    let v = eig.state(k);
    let mut best = (0usize, -1.0_f64);
    let mut second = -1.0_f64;
    for (i, z) in v.iter().enumerate() {
        let w = z.norm_sqr();
        if w > best.1 {
            second = best.1;
            best = (i, w);
        } else if w > second {
            second = w;
        }
    }
    let proj = basis.projections(best.0);
    StateLabel {
        ms: proj[0],
        mi: proj[1..].to_vec(),
        weight: best.1,
        ambiguous: degenerate || (best.1 - second).abs() <= LABEL_TIE_TOL,
    }
}

/// Lines between eigenstates of one orientation.
///
/// `drive` and `polarization` are the electron Sx and Sz in the full space.
/// Degenerate eigenvalues are merged so that intensities do not depend on the
/// arbitrary basis chosen inside a degenerate subspace.
pub fn transition_lines(
    eig: &EigenSystem,
    drive: &Operator,
    polarization: &Operator,
    basis: &ProductBasis,
    options: &LineOptions,
) -> Result<Vec<TransitionLine>> {
    options.validate()?;
    let n = eig.dim();
    for op in [drive, polarization] {
        if op.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: op.dim() });
        }
    }
    let d = eig.transform(drive);
    let sz = eig.transform(polarization);
    let clusters = degenerate_clusters(&eig.energies);
    let pol: Vec<f64> = clusters.iter().map(|c| c.iter().map(|&i| sz.get(i, i).re).sum::<f64>() / c.len() as f64).collect();
    let energy: Vec<f64> = clusters.iter().map(|c| c.iter().map(|&i| eig.energies[i]).sum::<f64>() / c.len() as f64).collect();

    let mut candidates = Vec::new();
    let mut strongest = 0.0_f64;
    for a in 0..clusters.len() {
        for b in (a + 1)..clusters.len() {
            let element: f64 = clusters[a]
                .iter()
                .flat_map(|&i| clusters[b].iter().map(move |&j| (i, j)))
                .map(|(i, j)| d.get(j, i).norm_sqr())
                .sum();
            strongest = strongest.max(element);
            candidates.push((a, b, element));
        }
    }
    if strongest == 0.0 {
        return Ok(vec![]);
    }

    let mut kept: Vec<(usize, usize, f64)> = candidates
        .into_iter()
        .filter(|&(a, b, element)| {
            element >= options.threshold * strongest
                && (pol[b] - pol[a]).abs() >= options.min_electron_flip
                && energy[b] - energy[a] > 0.0
        })
        .collect();
    let norm = kept.iter().map(|k| k.2).fold(0.0_f64, f64::max);
    kept.sort_by(|x, y| (energy[x.1] - energy[x.0]).total_cmp(&(energy[y.1] - energy[y.0])));

    Ok(kept
        .into_iter()
        .map(|(a, b, element)| TransitionLine {
            frequency_mhz: energy[b] - energy[a],
            intensity: element / norm,
            lower: label_state(eig, clusters[a][0], basis, clusters[a].len() > 1),
            upper: label_state(eig, clusters[b][0], basis, clusters[b].len() > 1),
            multiplicity: 1,
            orientation: 0,
            axial: false,
            group: LineGroup::Ungrouped,
        })
        .collect())
}

/// Lines of a species at one orientation, with default drive operators.
pub fn species_lines(species: &SpinSpecies, field: &FieldConfig, options: &LineOptions) -> Result<Vec<TransitionLine>> {
    let eig = eigh(&species.hamiltonian(field))?;
    let s = species.electron_operators();
    transition_lines(&eig, &s.x, &s.z, &species.basis(), options)
}

/// Summary of one resonance group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: LineGroup,
    /// Weighted mean frequency of the members.
    pub center_mhz: f64,
    pub members: usize,
    /// Frequency spread of the members; for group III this is the residual
    /// offset between the merged axial and non-axial central lines.
    pub spread_mhz: f64,
}

fn summarize(lines: &[TransitionLine], groups: &[LineGroup]) -> Vec<GroupSummary> {
    groups
        .iter()
        .filter_map(|&g| {
            let members: Vec<&TransitionLine> = lines.iter().filter(|l| l.group == g).collect();
            if members.is_empty() {
                return None;
            }
            let w: f64 = members.iter().map(|l| l.weight()).sum();
            let center = members.iter().map(|l| l.weight() * l.frequency_mhz).sum::<f64>() / w;
            let lo = members.iter().map(|l| l.frequency_mhz).fold(f64::INFINITY, f64::min);
            let hi = members.iter().map(|l| l.frequency_mhz).fold(f64::NEG_INFINITY, f64::max);
            Some(GroupSummary { group: g, center_mhz: center, members: members.len(), spread_mhz: hi - lo })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupedLines {
    pub lines: Vec<TransitionLine>,
    pub groups: Vec<GroupSummary>,
    /// Groups with no member line (below threshold or missing).
    pub incomplete: Vec<LineGroup>,
}

/// Assigns P1 lines to groups I–V.
///
/// Group membership follows the nuclear projection of the lower state and
/// the orientation class: I axial mI = −1, II non-axial mI = −1, III all
/// mI = 0, IV non-axial mI = +1, V axial mI = +1.
pub fn p1_groups(axial: &[TransitionLine], non_axial: &[TransitionLine]) -> GroupedLines {
    let mut lines: Vec<TransitionLine> = Vec::with_capacity(axial.len() + non_axial.len());
    for (src, is_axial) in [(axial, true), (non_axial, false)] {
        let mut taken: BTreeMap<LineGroup, usize> = BTreeMap::new();
        for line in src {
            let mut l = line.clone();
            l.axial = is_axial;
            l.multiplicity = if is_axial { 1 } else { 3 };
            let mi = l.lower.mi.first().copied().unwrap_or(f64::NAN).round() as i64;
            let group = match (mi, is_axial) {
                (-1, true) => LineGroup::I,
                (-1, false) => LineGroup::II,
                (0, _) => LineGroup::III,
                (1, false) => LineGroup::IV,
                (1, true) => LineGroup::V,
                _ => LineGroup::Ungrouped,
            };
            if group != LineGroup::Ungrouped {
                // One line per group and class; the stronger one wins.
                match taken.get(&group) {
                    Some(&idx) if lines[idx].intensity >= l.intensity => {}
                    Some(&idx) => {
                        lines[idx].group = LineGroup::Ungrouped;
                        l.group = group;
                        taken.insert(group, lines.len());
                    }
                    None => {
                        l.group = group;
                        taken.insert(group, lines.len());
                    }
                }
            }
            lines.push(l);
        }
    }
    lines.sort_by(|a, b| a.frequency_mhz.total_cmp(&b.frequency_mhz));
    let groups = summarize(&lines, &LineGroup::P1);
    let mut incomplete: Vec<LineGroup> = LineGroup::P1.iter().copied().filter(|g| !groups.iter().any(|s| s.group == *g)).collect();
    // Group III needs both classes.
    let iii_axial = lines.iter().any(|l| l.group == LineGroup::III && l.axial);
    let iii_non_axial = lines.iter().any(|l| l.group == LineGroup::III && !l.axial);
    if (!iii_axial || !iii_non_axial) && !incomplete.contains(&LineGroup::III) {
        incomplete.push(LineGroup::III);
    }
    GroupedLines { lines, groups, incomplete }
}

/// Splits each orientation class into its lower and upper hydrogen branch.
fn nvh_groups(lines: &mut [TransitionLine]) {
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, l) in lines.iter().enumerate() {
        classes.entry(l.orientation).or_default().push(k);
    }
    for idx in classes.values_mut() {
        idx.sort_by(|&a, &b| lines[a].frequency_mhz.total_cmp(&lines[b].frequency_mhz));
        if idx.len() % 2 != 0 {
            continue;
        }
        let half = idx.len() / 2;
        for (pos, &k) in idx.iter().enumerate() {
            lines[k].group = if pos < half { LineGroup::NvhLow } else { LineGroup::NvhHigh };
        }
    }
}

/// Stick spectrum over all four ⟨111⟩ orientations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StickSpectrum {
    pub species: SpeciesKind,
    pub field: FieldConfig,
    pub lines: Vec<TransitionLine>,
    pub groups: Vec<GroupSummary>,
    pub incomplete: Vec<LineGroup>,
}

impl StickSpectrum {
    pub fn group(&self, g: LineGroup) -> Option<&GroupSummary> {
        self.groups.iter().find(|s| s.group == g)
    }

    /// Σ multiplicity over lines, i.e. the count with equivalent
    /// orientations expanded.
    pub fn expanded_line_count(&self) -> usize {
        self.lines.iter().map(|l| l.multiplicity as usize).sum()
    }

    /// Weights normalized to unit sum.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let total: f64 = self.lines.iter().map(TransitionLine::weight).sum();
        if total == 0.0 {
            return vec![0.0; self.lines.len()];
        }
        self.lines.iter().map(|l| l.weight() / total).collect()
    }

    /// Named frequencies of this spectrum: group centers, and for the NV
    /// the aligned-orientation lines f2 (lower) and f1 (upper).
    pub fn named_frequencies(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for g in &self.groups {
            out.insert(g.group.key().to_string(), g.center_mhz);
        }
        if self.species == SpeciesKind::Nv {
            let mut aligned: Vec<f64> = self.lines.iter().filter(|l| l.axial).map(|l| l.frequency_mhz).collect();
            aligned.sort_by(f64::total_cmp);
            if aligned.len() == 2 {
                out.insert("f2".into(), aligned[0]);
                out.insert("f1".into(), aligned[1]);
            }
        }
        out
    }
}

fn same_levels(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= EQUIVALENT_ORIENTATION_TOL_MHZ)
}

/// Stick spectrum of `species` (its own axis is ignored) over the four
/// orientations.
///
/// When the field picks out one axial orientation and the other three are
/// equivalent, they are represented once with multiplicity 3; otherwise
/// each orientation contributes separately with multiplicity 1.
pub fn stick_spectrum(species: &SpinSpecies, field: &FieldConfig, options: &LineOptions) -> Result<StickSpectrum> {
    let set = orientation_axes(field);
    let mut per_orientation = Vec::with_capacity(4);
    for o in &set.orientations {
        let sp = species.with_axis(o.axis);
        let eig = eigh(&sp.hamiltonian(field))?;
        let s = sp.electron_operators();
        let mut lines = transition_lines(&eig, &s.x, &s.z, &sp.basis(), options)?;
        for l in &mut lines {
            l.orientation = o.index;
            l.axial = o.axial;
        }
        per_orientation.push((o, eig.energies, lines));
    }

    let non_axial: Vec<_> = per_orientation.iter().filter(|p| !p.0.axial).collect();
    let collapsed = set.axial_count() == 1 && non_axial.iter().all(|p| same_levels(&p.1, &non_axial[0].1));

    let (mut lines, mut groups, mut incomplete) = if collapsed {
        let axial_lines = &per_orientation.iter().find(|p| p.0.axial).unwrap().2;
        let rep = &non_axial[0].2;
        if species.kind == SpeciesKind::P1 {
            let g = p1_groups(axial_lines, rep);
            (g.lines, g.groups, g.incomplete)
        } else {
            let mut lines: Vec<TransitionLine> = axial_lines.clone();
            lines.extend(rep.iter().cloned().map(|mut l| {
                l.multiplicity = 3;
                l
            }));
            (lines, vec![], vec![])
        }
    } else {
        (per_orientation.into_iter().flat_map(|p| p.2).collect(), vec![], vec![])
    };

    let top = lines.iter().map(|l| l.intensity).fold(0.0_f64, f64::max);
    if top > 0.0 {
        for l in &mut lines {
            l.intensity /= top;
        }
    }
    if species.kind == SpeciesKind::P1 && collapsed {
        groups = summarize(&lines, &LineGroup::P1);
    }
    if species.kind == SpeciesKind::Nvh {
        nvh_groups(&mut lines);
        groups = summarize(&lines, &[LineGroup::NvhLow, LineGroup::NvhHigh]);
        incomplete = [LineGroup::NvhLow, LineGroup::NvhHigh].into_iter().filter(|g| !groups.iter().any(|s| s.group == *g)).collect();
    }
    lines.sort_by(|a, b| a.frequency_mhz.total_cmp(&b.frequency_mhz));
    Ok(StickSpectrum { species: species.kind, field: *field, lines, groups, incomplete })
}
