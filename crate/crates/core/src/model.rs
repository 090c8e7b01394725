//! The neural wavefunction and energy surfaces.
//!
//! The electron position `r` and the half-separation `R` (nuclei at
//! `(±R, 0, 0)`) feed four units:
//!
//! * the atomic unit, a fixed map to the 1s orbitals `φ₁ = e^{-|r - R₁|}` and
//!   `φ₂ = e^{-|r - R₂|}`;
//! * the LCAO unit, `φ₁ ± φ₂`;
//! * the basis unit `N`, a sigmoid MLP over `(φ₁, φ₂, R)` that is summed with
//!   its own x-mirror image (the mirror swaps `φ₁` and `φ₂`), so `N` is even
//!   in `x` by construction;
//! * the gate `f(R)` and the energy unit `E(R)`, small MLPs of `R` alone.
//!
//! The wavefunction is `ψ = ψ_LCAO + f(R) · N`.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{distance, JetLanes, Lanes, NodeId, SpatialJet, Tape, LANES};
use crate::error::{Error, Result};

/// Tag stored in checkpoints describing how parameters were initialized.
pub const INIT_SCHEME: &str = "xavier_uniform_zero_bias";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    #[default]
    Symmetric,
    Antisymmetric,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Symmetric => 1.0,
            Parity::Antisymmetric => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Sigmoid,
}

/// Hidden-layer widths of the three trainable units.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub bu_layers: Vec<usize>,
    pub gate_layers: Vec<usize>,
    pub eu_layers: Vec<usize>,
    pub activation: Activation,
    pub parity: Parity,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            bu_layers: vec![16, 16],
            gate_layers: vec![10],
            eu_layers: vec![32, 32],
            activation: Activation::Sigmoid,
            parity: Parity::Symmetric,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, widths) in [
            ("bu_layers", &self.bu_layers),
            ("gate_layers", &self.gate_layers),
            ("eu_layers", &self.eu_layers),
        ] {
            if widths.is_empty() {
                return Err(Error::InvalidConfig(format!("{name} needs at least one hidden layer")));
            }
            if widths.iter().any(|&w| w == 0) {
                return Err(Error::InvalidConfig(format!("{name} contains a zero width")));
            }
        }
        Ok(())
    }

    /// Closed-form parameter count, `Σ (in + 1) · out` over all layers.
    pub fn parameter_count(&self) -> usize {
        let count = |inputs: usize, hidden: &[usize]| {
            let mut total = 0;
            let mut prev = inputs;
            for &w in hidden.iter().chain(std::iter::once(&1)) {
                total += (prev + 1) * w;
                prev = w;
            }
            total
        };
        count(3, &self.bu_layers) + count(1, &self.gate_layers) + count(1, &self.eu_layers)
    }
}

/// Trainable unit a parameter belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Basis,
    Gate,
    Energy,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Basis, Group::Gate, Group::Energy];

    pub fn prefix(self) -> &'static str {
        match self {
            Group::Basis => "bu",
            Group::Gate => "gate",
            Group::Energy => "eu",
        }
    }
}

/// Position of one dense layer inside the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerShape {
    pub group: Group,
    pub index: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub offset: usize,
}

impl LayerShape {
    pub fn len(&self) -> usize {
        (self.inputs + 1) * self.outputs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights(&self) -> Range<usize> {
        self.offset..self.offset + self.inputs * self.outputs
    }

    pub fn bias(&self) -> Range<usize> {
        self.offset + self.inputs * self.outputs..self.offset + self.len()
    }

    pub fn weight_name(&self) -> String {
        format!("{}.{}.weight", self.group.prefix(), self.index)
    }

    pub fn bias_name(&self) -> String {
        format!("{}.{}.bias", self.group.prefix(), self.index)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    layers: Vec<LayerShape>,
    total: usize,
}

impl Layout {
    pub fn new(config: &NetworkConfig) -> Self {
        let mut layers = Vec::new();
        let mut offset = 0;
        for (group, inputs, hidden) in [
            (Group::Basis, 3, &config.bu_layers),
            (Group::Gate, 1, &config.gate_layers),
            (Group::Energy, 1, &config.eu_layers),
        ] {
            let mut prev = inputs;
            for (index, &w) in hidden.iter().chain(std::iter::once(&1)).enumerate() {
                let layer = LayerShape {
                    group,
                    index,
                    inputs: prev,
                    outputs: w,
                    offset,
                };
                offset += layer.len();
                layers.push(layer);
                prev = w;
            }
        }
        Self { layers, total: offset }
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    pub fn group_layers(&self, group: Group) -> impl Iterator<Item = &LayerShape> {
        self.layers.iter().filter(move |l| l.group == group)
    }

    /// Contiguous parameter range of a unit.
    pub fn group_range(&self, group: Group) -> Range<usize> {
        let mut it = self.group_layers(group);
        let first = it.next().expect("every unit has at least one layer");
        let end = self.group_layers(group).last().map(|l| l.offset + l.len()).unwrap_or(first.offset);
        first.offset..end
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

/// All trainable weights, grouped by unit.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet {
    config: NetworkConfig,
    layout: Layout,
    values: Vec<f64>,
}

impl ParameterSet {
    pub fn zeros(config: &NetworkConfig) -> Self {
        let layout = Layout::new(config);
        let values = vec![0.0; layout.len()];
        Self {
            config: config.clone(),
            layout,
            values,
        }
    }

    /// Xavier-uniform weights, `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`,
    /// and zero biases.
    pub fn init(config: &NetworkConfig, seed: u64) -> Self {
        let mut set = Self::zeros(config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in set.layout.layers.clone() {
            let a = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut set.values[layer.weights()] {
                *w = rng.random_range(-a..=a);
            }
        }
        set
    }

    /// Rebuilds a set from named arrays as stored in checkpoints.
    pub fn from_named<'a>(config: &NetworkConfig, mut lookup: impl FnMut(&str) -> Option<&'a [f64]>) -> Result<Self> {
        config.validate()?;
        let mut set = Self::zeros(config);
        for layer in set.layout.layers.clone() {
            for (name, range) in [(layer.weight_name(), layer.weights()), (layer.bias_name(), layer.bias())] {
                let src = lookup(&name).filter(|s| s.len() == range.len()).ok_or(Error::ParameterShape(name))?;
                set.values[range].copy_from_slice(src);
            }
        }
        Ok(set)
    }

    /// `(name, values)` pairs for every weight matrix and bias vector.
    pub fn named(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for layer in &self.layout.layers {
            out.push((layer.weight_name(), &self.values[layer.weights()]));
            out.push((layer.bias_name(), &self.values[layer.bias()]));
        }
        out
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn group(&self, group: Group) -> &[f64] {
        &self.values[self.layout.group_range(group)]
    }

    pub fn group_mut(&mut self, group: Group) -> &mut [f64] {
        let range = self.layout.group_range(group);
        &mut self.values[range]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Everything the network produces at one `(r, R)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WavefunctionEval {
    pub psi: SpatialJet,
    pub psi_lcao: SpatialJet,
    /// `f(R) · N`.
    pub correction: SpatialJet,
    pub gate_value: f64,
    pub energy: f64,
}

/// Nucleus positions `R₁ = (R, 0, 0)` and `R₂ = (-R, 0, 0)`.
pub fn nuclei(half_separation: f64) -> [[f64; 3]; 2] {
    [[half_separation, 0.0, 0.0], [-half_separation, 0.0, 0.0]]
}

/// The hydrogen 1s orbitals centred on each nucleus, as jets.
pub fn atomic_orbitals(r: [f64; 3], half_separation: f64) -> Result<(SpatialJet, SpatialJet)> {
    let coords = SpatialJet::coordinates(r);
    let [n1, n2] = nuclei(half_separation);
    let singular = || Error::SingularPoint {
        point: r,
        half_separation,
    };
    let d1 = distance(&coords, n1).map_err(|_| singular())?;
    let d2 = distance(&coords, n2).map_err(|_| singular())?;
    Ok(((-d1).exp(), (-d2).exp()))
}

/// Unnormalized `φ₁ + φ₂` or `φ₁ - φ₂`.
pub fn lcao(phi1: SpatialJet, phi2: SpatialJet, parity: Parity) -> SpatialJet {
    match parity {
        Parity::Symmetric => phi1 + phi2,
        Parity::Antisymmetric => phi1 - phi2,
    }
}

fn hidden_stack(tape: &mut Tape<'_>, mut x: NodeId, layers: &[LayerShape]) -> NodeId {
    for layer in layers {
        let z = tape.affine(x, layer.offset, layer.outputs);
        x = tape.sigmoid(z);
    }
    x
}

fn split_output<'l>(params: &'l ParameterSet, group: Group) -> (Vec<LayerShape>, LayerShape) {
    let mut layers: Vec<LayerShape> = params.layout().group_layers(group).cloned().collect();
    let out = layers.pop().expect("unit has an output layer");
    (layers, out)
}

/// Records `N(r, R)` on the tape for a pack of points.
///
/// For symmetric parity `N = Σ w_j [B_j(x) + B_j(-x)] + b`; for antisymmetric
/// parity the mirrored branch is subtracted, which cancels the bias and makes
/// `N` odd in `x`.
pub fn basis_unit(tape: &mut Tape<'_>, phi1: JetLanes, phi2: JetLanes, half_separation: Lanes, params: &ParameterSet) -> NodeId {
    let (hidden, out) = split_output(params, Group::Basis);
    let r_jet = JetLanes::values(half_separation);
    let direct = tape.input_lanes(&[phi1, phi2, r_jet], true, false);
    let mirror = tape.input_lanes(&[phi2, phi1, r_jet], true, false);
    let a = hidden_stack(tape, direct, &hidden);
    let b = hidden_stack(tape, mirror, &hidden);
    match params.config().parity {
        Parity::Symmetric => {
            let s = tape.add(a, b);
            tape.affine(s, out.offset, 1)
        }
        Parity::Antisymmetric => {
            let na = tape.affine(a, out.offset, 1);
            let nb = tape.affine(b, out.offset, 1);
            tape.sub(na, nb)
        }
    }
}

fn scalar_unit(tape: &mut Tape<'_>, input: NodeId, params: &ParameterSet, group: Group) -> NodeId {
    let (hidden, out) = split_output(params, group);
    let h = hidden_stack(tape, input, &hidden);
    tape.affine(h, out.offset, 1)
}

/// Records the gate `f(R)`.
pub fn gate(tape: &mut Tape<'_>, half_separation: NodeId, params: &ParameterSet) -> NodeId {
    scalar_unit(tape, half_separation, params, Group::Gate)
}

/// Records the energy unit `E(R)`.
pub fn energy_unit(tape: &mut Tape<'_>, half_separation: NodeId, params: &ParameterSet) -> NodeId {
    scalar_unit(tape, half_separation, params, Group::Energy)
}

/// Node handles of one recorded wavefunction evaluation.
#[derive(Clone, Copy, Debug)]
pub struct WavefunctionNodes {
    pub psi: NodeId,
    pub lcao: NodeId,
    pub basis: NodeId,
    pub gate: NodeId,
    pub correction: NodeId,
    pub energy: NodeId,
}

/// Orbital jets for a pack of points, one point per lane.
pub fn atomic_orbitals_lanes(r: &[[f64; 3]; LANES], half_separation: &Lanes) -> Result<(JetLanes, JetLanes)> {
    let mut phi1 = JetLanes::ZERO;
    let mut phi2 = JetLanes::ZERO;
    for l in 0..LANES {
        let (a, b) = atomic_orbitals(r[l], half_separation[l])?;
        phi1.set_lane(l, a);
        phi2.set_lane(l, b);
    }
    Ok((phi1, phi2))
}

/// Records `ψ = ψ_LCAO + f(R) · N` and `E(R)` for a pack of points.
pub fn record_wavefunction_lanes(tape: &mut Tape<'_>, r: &[[f64; 3]; LANES], half_separation: &Lanes, params: &ParameterSet) -> Result<WavefunctionNodes> {
    let (phi1, phi2) = atomic_orbitals_lanes(r, half_separation)?;
    let sign = params.config().parity.sign();
    let lcao_node = tape.input_lanes(&[phi1.add(&phi2, sign)], true, false);
    let basis = basis_unit(tape, phi1, phi2, *half_separation, params);
    let rr = tape.scalar_input_lanes(*half_separation, false);
    let gate_node = gate(tape, rr, params);
    let correction = tape.mul(gate_node, basis);
    let psi = tape.add(lcao_node, correction);
    let energy = energy_unit(tape, rr, params);
    Ok(WavefunctionNodes {
        psi,
        lcao: lcao_node,
        basis,
        gate: gate_node,
        correction,
        energy,
    })
}

/// Records the wavefunction at a single point, replicated in every lane.
pub fn record_wavefunction(tape: &mut Tape<'_>, r: [f64; 3], half_separation: f64, params: &ParameterSet) -> Result<WavefunctionNodes> {
    record_wavefunction_lanes(tape, &[r; LANES], &[half_separation; LANES], params)
}

/// Repeated forward evaluation with a reusable tape.
pub struct Evaluator<'a> {
    params: &'a ParameterSet,
    tape: Tape<'a>,
}

impl<'a> Evaluator<'a> {
    pub fn new(params: &'a ParameterSet) -> Self {
        Self {
            params,
            tape: Tape::new(params.values()),
        }
    }

    pub fn wavefunction(&mut self, r: [f64; 3], half_separation: f64) -> Result<WavefunctionEval> {
        self.tape.clear();
        let n = record_wavefunction(&mut self.tape, r, half_separation, self.params)?;
        Ok(WavefunctionEval {
            psi: self.tape.jet(n.psi),
            psi_lcao: self.tape.jet(n.lcao),
            correction: self.tape.jet(n.correction),
            gate_value: self.tape.scalar(n.gate),
            energy: self.tape.scalar(n.energy),
        })
    }

    /// Evaluates many points, packing them into lanes.
    pub fn wavefunction_many(&mut self, points: &[([f64; 3], f64)]) -> Result<Vec<WavefunctionEval>> {
        let mut out = Vec::with_capacity(points.len());
        for pack in points.chunks(LANES) {
            let last = pack[pack.len() - 1];
            let mut rs = [last.0; LANES];
            let mut hs = [last.1; LANES];
            for (l, p) in pack.iter().enumerate() {
                rs[l] = p.0;
                hs[l] = p.1;
            }
            self.tape.clear();
            let n = record_wavefunction_lanes(&mut self.tape, &rs, &hs, self.params)?;
            for l in 0..pack.len() {
                out.push(WavefunctionEval {
                    psi: self.tape.jet_lane(n.psi, l),
                    psi_lcao: self.tape.jet_lane(n.lcao, l),
                    correction: self.tape.jet_lane(n.correction, l),
                    gate_value: self.tape.jet_lane(n.gate, l).value,
                    energy: self.tape.jet_lane(n.energy, l).value,
                });
            }
        }
        Ok(out)
    }

    /// `N(r, R)` alone.
    pub fn basis(&mut self, r: [f64; 3], half_separation: f64) -> Result<SpatialJet> {
        self.tape.clear();
        let (phi1, phi2) = atomic_orbitals(r, half_separation)?;
        let n = basis_unit(&mut self.tape, JetLanes::splat(phi1), JetLanes::splat(phi2), [half_separation; LANES], self.params);
        Ok(self.tape.jet(n))
    }

    pub fn gate(&mut self, half_separation: f64) -> f64 {
        self.tape.clear();
        let rr = self.tape.scalar_input(half_separation, false);
        let g = gate(&mut self.tape, rr, self.params);
        self.tape.scalar(g)
    }

    pub fn energy(&mut self, half_separation: f64) -> f64 {
        self.tape.clear();
        let rr = self.tape.scalar_input(half_separation, false);
        let e = energy_unit(&mut self.tape, rr, self.params);
        self.tape.scalar(e)
    }

    /// `(E(R), dE/dR)`, the derivative taken by a reverse sweep to the input.
    pub fn energy_with_derivative(&mut self, half_separation: f64) -> (f64, f64) {
        self.tape.clear();
        let rr = self.tape.scalar_input(half_separation, true);
        let e = energy_unit(&mut self.tape, rr, self.params);
        let value = self.tape.scalar(e);
        let mut seed = [0.0; LANES];
        seed[0] = 1.0;
        let mut sink = vec![0.0; self.params.len()];
        self.tape.backward_seeded(&[(e, seed)], &mut sink);
        (value, self.tape.adjoint(rr)[0].value[0])
    }
}

/// One-shot evaluation of the network at `(r, R)`.
pub fn wavefunction(r: [f64; 3], half_separation: f64, params: &ParameterSet) -> Result<WavefunctionEval> {
    Evaluator::new(params).wavefunction(r, half_separation)
}
