//! Syndrome-extraction circuits in the cross-resonance gate set.
//!
//! One round has 11 steps:
//!
//! | step | X ancilla   | Z ancilla  | data                             |
//! |------|-------------|------------|----------------------------------|
//! | 0    | RESET       | RESET      | WAIT                             |
//! | 1    | RX90DAG     | WAIT       | WAIT                             |
//! | 2–5  | RZX90 slots | WAIT       | RZX90 target / RX90 fix / WAIT   |
//! | 6    | RX90        | RZX90 slot | RZX90 control / RX90 fix / WAIT  |
//! | 7    | MEASURE_Z   | RZX90 slot | RZX90 control / WAIT             |
//! | 8–9  | WAIT        | RZX90 slot | RZX90 control / WAIT             |
//! | 10   | WAIT        | MEASURE_Z  | RZ90 fix / WAIT                  |
//!
//! Each `R_zx` equals a CNOT up to a quarter turn on each operand, so a data
//! qubit touched an odd number of times per half carries a leftover quarter
//! turn; the RX90/RZ90 "fix" ops cancel it down to a Pauli, and the remaining
//! deterministic Pauli frame is removed by calibration.
//!
//! Every ancilla's ops from RESET to MEASURE_Z form a self-contained block,
//! which is what lets the serialized form replay the blocks one at a time on
//! a single reused ancilla register.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::layout::{CodeLayout, Slot, StabilizerKind};

pub const STEPS_PER_ROUND: usize = 11;

const X_SLOT_STEP: usize = 2;
const Z_SLOT_STEP: usize = 6;
const X_MEASURE_STEP: usize = 7;
const Z_MEASURE_STEP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Rx90,
    Rx90Dag,
    Rz90,
    Rzx90,
    Rzx90Dag,
    MeasureZ,
    Reset,
    Wait,
}

/// Pauli axis of a rotation gate's generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Z,
    /// Z on operand 0, X on operand 1.
    Zx,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::Rx90,
        GateKind::Rx90Dag,
        GateKind::Rz90,
        GateKind::Rzx90,
        GateKind::Rzx90Dag,
        GateKind::MeasureZ,
        GateKind::Reset,
        GateKind::Wait,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx90 => "RX90",
            GateKind::Rx90Dag => "RX90DAG",
            GateKind::Rz90 => "RZ90",
            GateKind::Rzx90 => "RZX90",
            GateKind::Rzx90Dag => "RZX90DAG",
            GateKind::MeasureZ => "MEASURE_Z",
            GateKind::Reset => "RESET",
            GateKind::Wait => "WAIT",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Rzx90 | GateKind::Rzx90Dag => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        self.rotation().is_some()
    }

    /// `(axis, sign)` such that the gate is `exp(-i·sign·π/4·P_axis)`.
    pub fn rotation(self) -> Option<(Axis, f64)> {
        match self {
            GateKind::Rx90 => Some((Axis::X, 1.0)),
            GateKind::Rx90Dag => Some((Axis::X, -1.0)),
            GateKind::Rz90 => Some((Axis::Z, 1.0)),
            GateKind::Rzx90 => Some((Axis::Zx, 1.0)),
            GateKind::Rzx90Dag => Some((Axis::Zx, -1.0)),
            _ => None,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown gate '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseTag {
    OneQubitStep,
    TwoQubitAfterCr,
    CoherentRotation,
    None,
}

impl NoiseTag {
    pub fn name(self) -> &'static str {
        match self {
            NoiseTag::OneQubitStep => "ONE_QUBIT_STEP",
            NoiseTag::TwoQubitAfterCr => "TWO_QUBIT_AFTER_CR",
            NoiseTag::CoherentRotation => "COHERENT_ROTATION",
            NoiseTag::None => "NONE",
        }
    }
}

impl fmt::Display for NoiseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [NoiseTag::OneQubitStep, NoiseTag::TwoQubitAfterCr, NoiseTag::CoherentRotation, NoiseTag::None]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown noise tag '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CircuitOp {
    pub gate: GateKind,
    q: [usize; 2],
    pub step: usize,
    pub round: usize,
    /// Stochastic channel following the op.
    pub noise_tag: NoiseTag,
    /// Global id of the stabilizer whose ancilla block owns this op.
    pub owner: Option<usize>,
}

impl CircuitOp {
    pub fn one(gate: GateKind, q: usize, round: usize, step: usize, owner: Option<usize>) -> Self {
        debug_assert_eq!(gate.arity(), 1);
        Self { gate, q: [q, usize::MAX], step, round, noise_tag: NoiseTag::OneQubitStep, owner }
    }

    /// `RZX` with Z on `zq` and X on `xq`.
    pub fn two(gate: GateKind, zq: usize, xq: usize, round: usize, step: usize, owner: Option<usize>) -> Self {
        debug_assert_eq!(gate.arity(), 2);
        Self { gate, q: [zq, xq], step, round, noise_tag: NoiseTag::TwoQubitAfterCr, owner }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.q[..self.gate.arity()]
    }

    pub fn touches(&self, r: usize) -> bool {
        self.qubits().contains(&r)
    }

    fn with_registers(mut self, f: impl Fn(usize) -> usize) -> Self {
        for i in 0..self.gate.arity() {
            self.q[i] = f(self.q[i]);
        }
        self
    }

    pub fn dump_line(&self) -> String {
        let qs: Vec<String> = self.qubits().iter().map(|q| q.to_string()).collect();
        format!("{} {} {} {} {}", self.round, self.step, self.gate, qs.join(" "), self.noise_tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Schedule {
    Parallel,
    Serialized,
}

impl Schedule {
    pub fn name(self) -> &'static str {
        match self {
            Schedule::Parallel => "parallel",
            Schedule::Serialized => "serialized",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub ops: Vec<CircuitOp>,
    pub n_registers: usize,
    /// Registers `0..n_data` hold data qubits (1-based qubit `q` is register `q - 1`).
    pub n_data: usize,
    pub steps_per_round: usize,
    pub schedule: Schedule,
    pub rounds: usize,
}

impl Circuit {
    /// Register holding stabilizer `id`'s ancilla.
    pub fn ancilla_register(&self, id: usize) -> usize {
        match self.schedule {
            Schedule::Parallel => self.n_data + id,
            Schedule::Serialized => self.n_data,
        }
    }

    /// Maps a register of this circuit back to the parallel-circuit register.
    fn logical_register(&self, r: usize, owner: Option<usize>) -> usize {
        match (self.schedule, owner) {
            (Schedule::Serialized, Some(id)) if r == self.n_data => self.n_data + id,
            _ => r,
        }
    }

    /// Line-oriented text dump, one op per line: `round step gate q0 [q1] noise_tag`.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "# schedule={} n_registers={} n_data={} steps_per_round={} rounds={}\n",
            self.schedule.name(),
            self.n_registers,
            self.n_data,
            self.steps_per_round,
            self.rounds
        );
        for op in &self.ops {
            out.push_str(&op.dump_line());
            out.push('\n');
        }
        out
    }

    /// Inverse of [`Circuit::dump`]. Ownership of ancilla ops is recovered
    /// from the layout: per register in the parallel form, per RESET-delimited
    /// block in serial order for the serialized form.
    pub fn parse_dump(text: &str, layout: &CodeLayout) -> Result<Circuit> {
        let mut header: HashMap<String, String> = HashMap::new();
        let mut ops = Vec::new();
        let serial: Vec<usize> = layout.serial_sequence().iter().map(|s| s.ancilla_id).collect();
        let mut block = (usize::MAX, 0usize); // (round, index within round)

        let mut lines = text.lines().peekable();
        while let Some(line) = lines.peek() {
            let Some(rest) = line.strip_prefix('#') else { break };
            for kv in rest.split_whitespace() {
                if let Some((k, v)) = kv.split_once('=') {
                    header.insert(k.to_string(), v.to_string());
                }
            }
            lines.next();
        }
        let get = |k: &str| -> Result<usize> {
            header
                .get(k)
                .ok_or_else(|| Error::Parse(format!("missing header field '{k}'")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad header field '{k}'")))
        };
        let schedule = match header.get("schedule").map(String::as_str) {
            Some("parallel") => Schedule::Parallel,
            Some("serialized") => Schedule::Serialized,
            other => return Err(Error::Parse(format!("bad schedule {other:?}"))),
        };
        let (n_registers, n_data) = (get("n_registers")?, get("n_data")?);
        if n_data != layout.n_data() {
            return Err(Error::Parse("dump does not match layout".into()));
        }

        for (lineno, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Parse(format!("line {}: '{line}'", lineno + 1));
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() < 5 {
                return Err(bad());
            }
            let round: usize = f[0].parse().map_err(|_| bad())?;
            let step: usize = f[1].parse().map_err(|_| bad())?;
            let gate: GateKind = f[2].parse()?;
            if f.len() != 4 + gate.arity() {
                return Err(bad());
            }
            let qs: Vec<usize> =
                f[3..3 + gate.arity()].iter().map(|s| s.parse().map_err(|_| bad())).collect::<Result<_>>()?;
            let noise_tag: NoiseTag = f[3 + gate.arity()].parse()?;
            if qs.iter().any(|&q| q >= n_registers) {
                return Err(bad());
            }
            let anc = qs.iter().copied().find(|&q| q >= n_data);
            let owner = match (schedule, anc) {
                (_, None) => None,
                (Schedule::Parallel, Some(r)) => Some(r - n_data),
                (Schedule::Serialized, Some(_)) => {
                    if gate == GateKind::Reset {
                        block = if block.0 == round { (round, block.1 + 1) } else { (round, 0) };
                    }
                    Some(*serial.get(block.1).ok_or_else(bad)?)
                }
            };
            let mut q = [usize::MAX; 2];
            q[..qs.len()].copy_from_slice(&qs);
            ops.push(CircuitOp { gate, q, step, round, noise_tag, owner });
        }
        Ok(Circuit { ops, n_registers, n_data, steps_per_round: get("steps_per_round")?, schedule, rounds: get("rounds")? })
    }
}

// One round of the parallel circuit, in step-major then register order.
fn parallel_round_ops(layout: &CodeLayout, round: usize) -> Result<Vec<CircuitOp>> {
    let n_data = layout.n_data();
    let mut table: Vec<Vec<Option<CircuitOp>>> = vec![vec![None; n_data + layout.n_stabilizers()]; STEPS_PER_ROUND];
    fn put(table: &mut [Vec<Option<CircuitOp>>], op: CircuitOp) {
        for &r in op.qubits() {
            debug_assert!(table[op.step][r].is_none(), "register {r} double-booked at step {}", op.step);
            table[op.step][r] = Some(op);
        }
    }

    for s in layout.stabilizers() {
        let a = n_data + s.ancilla_id;
        let own = Some(s.ancilla_id);
        let one = |g, step| CircuitOp::one(g, a, round, step, own);
        put(&mut table, one(GateKind::Reset, 0));
        match s.kind {
            StabilizerKind::X => {
                put(&mut table, one(GateKind::Rx90Dag, 1));
                for (j, slot) in s.slots.iter().enumerate() {
                    let step = X_SLOT_STEP + j;
                    put(&mut table, match slot {
                        Slot::Data(q) => CircuitOp::two(GateKind::Rzx90, a, q - 1, round, step, own),
                        Slot::Wait => one(GateKind::Wait, step),
                    });
                }
                put(&mut table, one(GateKind::Rx90, Z_SLOT_STEP));
                put(&mut table, one(GateKind::MeasureZ, X_MEASURE_STEP));
                for step in X_MEASURE_STEP + 1..STEPS_PER_ROUND {
                    put(&mut table, one(GateKind::Wait, step));
                }
            }
            StabilizerKind::Z => {
                for step in 1..Z_SLOT_STEP {
                    put(&mut table, one(GateKind::Wait, step));
                }
                for (j, slot) in s.slots.iter().enumerate() {
                    let step = Z_SLOT_STEP + j;
                    put(&mut table, match slot {
                        Slot::Data(q) => CircuitOp::two(GateKind::Rzx90, q - 1, a, round, step, own),
                        Slot::Wait => one(GateKind::Wait, step),
                    });
                }
                put(&mut table, one(GateKind::MeasureZ, Z_MEASURE_STEP));
            }
        }
    }

    for q in 1..=n_data {
        let r = q - 1;
        let busy = |table: &[Vec<Option<CircuitOp>>], step: usize| table[step][r].is_some();
        let x_steps: Vec<usize> = (X_SLOT_STEP..Z_SLOT_STEP).filter(|&s| busy(&table, s)).collect();
        let z_steps: Vec<usize> = (Z_SLOT_STEP..Z_SLOT_STEP + 4).filter(|&s| busy(&table, s)).collect();
        let mut fixes = Vec::new();
        if layout.participation(StabilizerKind::X, q) % 2 == 1 {
            let after = x_steps.last().map_or(X_SLOT_STEP, |s| s + 1);
            let before = z_steps.first().copied().unwrap_or(Z_MEASURE_STEP);
            let step = (after..before)
                .find(|&s| !busy(&table, s))
                .ok_or_else(|| Error::Circuit(format!("no free step for the RX90 fix on data qubit {q}")))?;
            fixes.push((step, GateKind::Rx90));
        }
        if layout.participation(StabilizerKind::Z, q) % 2 == 1 {
            fixes.push((Z_MEASURE_STEP, GateKind::Rz90));
        }
        for (step, g) in fixes {
            put(&mut table, CircuitOp::one(g, r, round, step, None));
        }
        for step in 0..STEPS_PER_ROUND {
            if table[step][r].is_none() {
                put(&mut table, CircuitOp::one(GateKind::Wait, r, round, step, None));
            }
        }
    }

    let mut ops = Vec::new();
    for row in &table {
        for (r, op) in row.iter().enumerate() {
            if let Some(op) = op {
                if op.qubits()[0].min(*op.qubits().last().unwrap()) == r {
                    ops.push(*op);
                }
            }
        }
    }
    Ok(ops)
}

/// `rounds` consecutive parallel rounds over `2d² - 1` registers.
pub fn build_parallel(layout: &CodeLayout, rounds: usize) -> Result<Circuit> {
    let mut ops = Vec::new();
    for round in 0..rounds {
        ops.extend(parallel_round_ops(layout, round)?);
    }
    Ok(Circuit {
        ops,
        n_registers: layout.n_data() + layout.n_stabilizers(),
        n_data: layout.n_data(),
        steps_per_round: STEPS_PER_ROUND,
        schedule: Schedule::Parallel,
        rounds,
    })
}

pub fn build_parallel_round(layout: &CodeLayout) -> Result<Circuit> {
    build_parallel(layout, 1)
}

/// Ancilla-reuse form over `d² + 1` registers: each stabilizer block runs in
/// serial order on register `d²`; data-only ops are emitted just before the
/// first block that needs the qubit afterwards.
pub fn build_serialized(layout: &CodeLayout, rounds: usize) -> Result<Circuit> {
    let parallel = build_parallel(layout, rounds)?;
    serialize(&parallel, layout)
}

pub fn build_serialized_round(layout: &CodeLayout) -> Result<Circuit> {
    build_serialized(layout, 1)
}

fn serialize(parallel: &Circuit, layout: &CodeLayout) -> Result<Circuit> {
    let n_data = parallel.n_data;
    let n_reg = parallel.n_registers;
    // Per-register queues of op indices, in program order.
    let mut queue: Vec<Vec<usize>> = vec![Vec::new(); n_reg];
    for (i, op) in parallel.ops.iter().enumerate() {
        for &r in op.qubits() {
            queue[r].push(i);
        }
    }
    let mut cursor = vec![0usize; n_reg];
    let mut emitted = vec![false; parallel.ops.len()];
    let mut out = Vec::with_capacity(parallel.ops.len());
    let shared = n_data;
    let remap = |op: &CircuitOp| op.with_registers(|r| if r >= n_data { shared } else { r });

    let label = |id: usize| layout.stabilizer(id).label();
    let emit = |i: usize, cursor: &mut Vec<usize>, emitted: &mut Vec<bool>, out: &mut Vec<CircuitOp>| {
        let op = &parallel.ops[i];
        for &r in op.qubits() {
            debug_assert_eq!(queue[r][cursor[r]], i);
            cursor[r] += 1;
        }
        emitted[i] = true;
        out.push(remap(op));
    };

    for round in 0..parallel.rounds {
        for stab in layout.serial_sequence() {
            let a = n_data + stab.ancilla_id;
            let block: Vec<usize> =
                queue[a].iter().copied().filter(|&i| parallel.ops[i].round == round).collect();
            for i in block {
                let op = parallel.ops[i];
                for &r in op.qubits().iter().filter(|&&r| r < n_data) {
                    while queue[r][cursor[r]] != i {
                        let pending = queue[r][cursor[r]];
                        match parallel.ops[pending].owner {
                            None => emit(pending, &mut cursor, &mut emitted, &mut out),
                            Some(other) => {
                                return Err(Error::Collision { blocked: label(stab.ancilla_id), by: label(other), qubit: r + 1 })
                            }
                        }
                    }
                }
                emit(i, &mut cursor, &mut emitted, &mut out);
            }
        }
    }
    // Trailing data-only ops (last round's fixes and idles).
    for i in 0..parallel.ops.len() {
        if !emitted[i] {
            let op = parallel.ops[i];
            if op.owner.is_some() {
                return Err(Error::Circuit(format!("ancilla op left unscheduled: {}", op.dump_line())));
            }
            emit(i, &mut cursor, &mut emitted, &mut out);
        }
    }

    Ok(Circuit {
        ops: out,
        n_registers: n_data + 1,
        n_data,
        steps_per_round: parallel.steps_per_round,
        schedule: Schedule::Serialized,
        rounds: parallel.rounds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleReport {
    pub registers_checked: usize,
    pub ops_checked: usize,
    pub blocks_checked: usize,
}

impl fmt::Display for ScheduleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "schedules equivalent: {} registers, {} ops, {} ancilla blocks",
            self.registers_checked, self.ops_checked, self.blocks_checked
        )
    }
}

fn describe(op: &CircuitOp, layout: &CodeLayout) -> String {
    match op.owner {
        Some(id) => format!("[{}] ({})", op.dump_line(), layout.stabilizer(id).label()),
        None => format!("[{}] (data)", op.dump_line()),
    }
}

/// Checks that `serialized` is a legal reordering of `parallel`:
/// (a) every parallel register sees the identical op + noise-tag sequence,
/// which is equivalent to (b) every swap relative to the parallel order
/// involving ops with disjoint support, and (c) consecutive ancilla blocks
/// on the shared register are separated by MEASURE_Z then RESET.
pub fn validate_schedules(parallel: &Circuit, serialized: &Circuit, layout: &CodeLayout) -> Result<ScheduleReport> {
    if parallel.schedule != Schedule::Parallel || serialized.schedule != Schedule::Serialized {
        return Err(Error::ScheduleMismatch("expected (parallel, serialized) circuits".into()));
    }
    if parallel.rounds != serialized.rounds || parallel.n_data != serialized.n_data {
        return Err(Error::ScheduleMismatch("circuits built from different layouts or round counts".into()));
    }
    if parallel.ops.len() != serialized.ops.len() {
        return Err(Error::ScheduleMismatch(format!(
            "op counts differ: {} vs {}",
            parallel.ops.len(),
            serialized.ops.len()
        )));
    }
    let n_reg = parallel.n_registers;
    let project = |c: &Circuit| {
        let mut per: Vec<Vec<CircuitOp>> = vec![Vec::new(); n_reg];
        for op in &c.ops {
            let logical = op.with_registers(|r| c.logical_register(r, op.owner));
            for &r in logical.qubits() {
                per[r].push(logical);
            }
        }
        per
    };
    let (pp, ss) = (project(parallel), project(serialized));
    for r in 0..n_reg {
        for (k, (a, b)) in pp[r].iter().zip(&ss[r]).enumerate() {
            if a != b {
                return Err(Error::ScheduleMismatch(format!(
                    "register {r}, position {k}: expected {} but serialized has {}",
                    describe(a, layout),
                    describe(b, layout)
                )));
            }
        }
        if pp[r].len() != ss[r].len() {
            return Err(Error::ScheduleMismatch(format!("register {r}: sequence lengths differ")));
        }
    }

    // Block structure on the shared ancilla register.
    let shared = serialized.n_data;
    let mut blocks = 0;
    let mut current: Option<(usize, usize)> = None;
    let mut last_active: Option<CircuitOp> = None;
    let mut finished = std::collections::HashSet::new();
    for op in serialized.ops.iter().filter(|o| o.touches(shared)) {
        let key = (op.owner.unwrap_or(usize::MAX), op.round);
        if current != Some(key) {
            if let Some(prev) = last_active {
                if prev.gate != GateKind::MeasureZ {
                    return Err(Error::ScheduleMismatch(format!(
                        "block boundary without MEASURE_Z: {} followed by {}",
                        describe(&prev, layout),
                        describe(op, layout)
                    )));
                }
            }
            if op.gate != GateKind::Reset {
                return Err(Error::ScheduleMismatch(format!(
                    "block does not start with RESET: {} after {}",
                    describe(op, layout),
                    last_active.map_or("start".into(), |p| describe(&p, layout))
                )));
            }
            if let Some(prev) = current {
                finished.insert(prev);
            }
            if finished.contains(&key) {
                return Err(Error::ScheduleMismatch(format!("block re-entered: {}", describe(op, layout))));
            }
            current = Some(key);
            blocks += 1;
        }
        if op.gate != GateKind::Wait {
            last_active = Some(*op);
        }
    }
    Ok(ScheduleReport { registers_checked: n_reg, ops_checked: serialized.ops.len(), blocks_checked: blocks })
}
