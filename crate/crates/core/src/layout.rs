//! Rotated surface code geometry.
//!
//! Data qubits sit on a `d × d` grid numbered row-major from 1. Plaquettes
//! are addressed by their lower-right grid corner `(a, b)` with
//! `a, b ∈ 0..=d`; plaquette `(a, b)` touches the data cells
//! `(a-1, b-1)`, `(a-1, b)`, `(a, b-1)` and `(a, b)` that exist. X faces have
//! odd `a + b`, Z faces even. Weight-2 X faces live on the top and bottom
//! edges, weight-2 Z faces on the left and right edges.

use std::fmt;

use crate::error::{Error, Result};

/// Validated odd code distance `d ≥ 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeDistance(usize);

impl CodeDistance {
    pub fn new(d: usize) -> Result<Self> {
        if d < 3 || d.is_multiple_of(2) {
            return Err(Error::InvalidDistance(d));
        }
        Ok(Self(d))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn n_data(self) -> usize {
        self.0 * self.0
    }

    pub fn n_ancilla(self) -> usize {
        self.0 * self.0 - 1
    }

    pub fn n_physical(self) -> usize {
        2 * self.0 * self.0 - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StabilizerKind {
    X,
    Z,
}

impl StabilizerKind {
    pub fn letter(self) -> char {
        match self {
            StabilizerKind::X => 'X',
            StabilizerKind::Z => 'Z',
        }
    }
}

/// One interaction slot of a stabilizer's CNOT schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    /// 1-based data-qubit index.
    Data(usize),
    Wait,
}

impl Slot {
    pub fn data(self) -> Option<usize> {
        match self {
            Slot::Data(q) => Some(q),
            Slot::Wait => None,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Data(q) => write!(f, "{q}"),
            Slot::Wait => f.write_str("wait"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stabilizer {
    pub kind: StabilizerKind,
    /// 1-based index within its kind (its row in the stabilizer table).
    pub index: usize,
    /// Plaquette corner `(a, b)`.
    pub plaquette: (usize, usize),
    /// Interaction schedule, including wait markers.
    pub slots: [Slot; 4],
    /// Global id: X stabilizers first, then Z. Also the parallel ancilla offset.
    pub ancilla_id: usize,
    /// Rank in the serialized measurement sequence.
    pub serial_order: usize,
}

impl Stabilizer {
    /// Sorted 1-based data support.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.slots.iter().filter_map(|s| s.data()).collect();
        s.sort_unstable();
        s
    }

    pub fn weight(&self) -> usize {
        self.slots.iter().filter(|s| s.data().is_some()).count()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.slots.contains(&Slot::Data(q))
    }

    /// e.g. `X4X5X9X10`.
    pub fn product_string(&self) -> String {
        self.support()
            .iter()
            .map(|q| format!("{}{}", self.kind.letter(), q))
            .collect()
    }

    /// e.g. `X3`, `Z12`.
    pub fn label(&self) -> String {
        format!("{}{}", self.kind.letter(), self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeLayout {
    pub distance: CodeDistance,
    pub x_stabilizers: Vec<Stabilizer>,
    pub z_stabilizers: Vec<Stabilizer>,
    pub logical_z_support: Vec<usize>,
    pub logical_x_support: Vec<usize>,
}

// Clockwise from bottom right (X) and from top right (Z).
#[derive(Clone, Copy)]
enum Corner {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

const X_ORDER: [Corner; 4] = [Corner::BottomRight, Corner::BottomLeft, Corner::TopLeft, Corner::TopRight];
const Z_ORDER: [Corner; 4] = [Corner::TopRight, Corner::BottomRight, Corner::BottomLeft, Corner::TopLeft];

fn corner_qubit(d: usize, a: usize, b: usize, corner: Corner) -> Slot {
    let (r, c) = match corner {
        Corner::TopLeft => (a.checked_sub(1), b.checked_sub(1)),
        Corner::TopRight => (a.checked_sub(1), Some(b)),
        Corner::BottomLeft => (Some(a), b.checked_sub(1)),
        Corner::BottomRight => (Some(a), Some(b)),
    };
    match (r, c) {
        (Some(r), Some(c)) if r < d && c < d => Slot::Data(r * d + c + 1),
        _ => Slot::Wait,
    }
}

fn plaquette_kind(d: usize, a: usize, b: usize) -> Option<StabilizerKind> {
    let kind = if (a + b) % 2 == 1 { StabilizerKind::X } else { StabilizerKind::Z };
    let row_edge = a == 0 || a == d;
    let col_edge = b == 0 || b == d;
    match (row_edge, col_edge) {
        (true, true) => None,
        (true, false) => (kind == StabilizerKind::X).then_some(kind),
        (false, true) => (kind == StabilizerKind::Z).then_some(kind),
        (false, false) => Some(kind),
    }
}

/// Build the layout for distance `d`.
pub fn build_layout(distance: CodeDistance) -> CodeLayout {
    let d = distance.get();
    let make = |kind, a, b| {
        let order = if kind == StabilizerKind::X { &X_ORDER } else { &Z_ORDER };
        let mut slots = [Slot::Wait; 4];
        for (slot, &corner) in slots.iter_mut().zip(order) {
            *slot = corner_qubit(d, a, b, corner);
        }
        Stabilizer { kind, index: 0, plaquette: (a, b), slots, ancilla_id: 0, serial_order: 0 }
    };

    let mut xs = Vec::new();
    for a in 0..=d {
        for b in 0..=d {
            if plaquette_kind(d, a, b) == Some(StabilizerKind::X) {
                xs.push(make(StabilizerKind::X, a, b));
            }
        }
    }
    let mut zs = Vec::new();
    for b in 0..=d {
        for a in (0..=d).rev() {
            if plaquette_kind(d, a, b) == Some(StabilizerKind::Z) {
                zs.push(make(StabilizerKind::Z, a, b));
            }
        }
    }
    let nx = xs.len();
    for (i, s) in xs.iter_mut().enumerate() {
        s.index = i + 1;
        s.ancilla_id = i;
        s.serial_order = i;
    }
    for (i, s) in zs.iter_mut().enumerate() {
        s.index = i + 1;
        s.ancilla_id = nx + i;
        s.serial_order = nx + i;
    }

    CodeLayout {
        distance,
        x_stabilizers: xs,
        z_stabilizers: zs,
        logical_z_support: (1..=d).collect(),
        logical_x_support: (0..d).map(|r| r * d + 1).collect(),
    }
}

/// The four-slot interaction order of `s`.
pub fn cnot_schedule(s: &Stabilizer) -> [Slot; 4] {
    s.slots
}

/// `(z_support, x_support)`.
pub fn logical_operators(layout: &CodeLayout) -> (Vec<usize>, Vec<usize>) {
    (layout.logical_z_support.clone(), layout.logical_x_support.clone())
}

impl CodeLayout {
    pub fn d(&self) -> usize {
        self.distance.get()
    }

    pub fn n_data(&self) -> usize {
        self.distance.n_data()
    }

    pub fn n_stabilizers(&self) -> usize {
        self.x_stabilizers.len() + self.z_stabilizers.len()
    }

    /// All stabilizers in global-id order (X then Z).
    pub fn stabilizers(&self) -> impl Iterator<Item = &Stabilizer> {
        self.x_stabilizers.iter().chain(self.z_stabilizers.iter())
    }

    pub fn stabilizer(&self, id: usize) -> &Stabilizer {
        let nx = self.x_stabilizers.len();
        if id < nx {
            &self.x_stabilizers[id]
        } else {
            &self.z_stabilizers[id - nx]
        }
    }

    pub fn of_kind(&self, kind: StabilizerKind) -> &[Stabilizer] {
        match kind {
            StabilizerKind::X => &self.x_stabilizers,
            StabilizerKind::Z => &self.z_stabilizers,
        }
    }

    /// Stabilizers in serialized measurement order.
    pub fn serial_sequence(&self) -> Vec<&Stabilizer> {
        let mut v: Vec<&Stabilizer> = self.stabilizers().collect();
        v.sort_by_key(|s| s.serial_order);
        v
    }

    /// Number of `kind` stabilizers containing data qubit `q` (1-based).
    pub fn participation(&self, kind: StabilizerKind, q: usize) -> usize {
        self.of_kind(kind).iter().filter(|s| s.contains(q)).count()
    }

    /// Table-I style listing: index, X product, Z product.
    pub fn table(&self) -> String {
        let mut out = String::from("Index  X-stabilizer      Z-stabilizer\n");
        for (x, z) in self.x_stabilizers.iter().zip(&self.z_stabilizers) {
            out.push_str(&format!("{:<6} {:<17} {}\n", x.index, x.product_string(), z.product_string()));
        }
        out
    }
}
