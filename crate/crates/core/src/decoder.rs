//! Space-time MWPM decoding of memory-experiment shots.
//!
//! Detection events are syndrome changes between adjacent rounds. Event
//! round `r` compares round `r` with round `r − 1` (round 0 against the
//! all-zero initial frame); Z-type events get an extra round `R` that
//! compares the parities of the final data readout with round `R − 1`.
//!
//! Each kind is decoded on its own graph with unit weight per lattice hop and
//! per round step. Only the Z-type graph (X errors) affects the Z_L outcome.

use std::collections::VecDeque;

use crate::engine::ShotRecord;
use crate::error::{Error, Result};
use crate::layout::{CodeLayout, StabilizerKind};
use crate::matching::min_weight_perfect_matching;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DetectionEvent {
    /// 0..=rounds; `rounds` is the virtual round from the data readout.
    pub round: usize,
    /// 1-based index within the kind, as in the stabilizer table.
    pub stabilizer_index: usize,
    pub kind: StabilizerKind,
}

/// Complete graph over events plus one boundary node (index `events.len()`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingGraph {
    pub kind: StabilizerKind,
    pub events: Vec<DetectionEvent>,
    /// `(a, b, weight)`; `b == events.len()` for boundary edges.
    pub edges: Vec<(usize, usize, u64)>,
}

impl MatchingGraph {
    pub fn boundary(&self) -> usize {
        self.events.len()
    }

    fn weight(&self, a: usize, b: usize) -> u64 {
        let (a, b) = (a.min(b), a.max(b));
        self.edges.iter().find(|e| e.0 == a && e.1 == b).map(|e| e.2).expect("complete graph")
    }
}

/// Each event matched to another event or to the boundary (`None`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Pairing {
    pub pairs: Vec<(usize, Option<usize>)>,
    pub weight: u64,
}

/// Pauli-frame correction: data qubits (1-based) whose frame is flipped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Correction {
    pub data_qubit_flips: Vec<usize>,
}

// Shortest lattice paths between stabilizers of one kind, and to the boundary.
#[derive(Debug, Clone)]
struct Lattice {
    n: usize,
    dist: Vec<u64>,
    path: Vec<Vec<usize>>,
    bdist: Vec<u64>,
    bpath: Vec<Vec<usize>>,
}

impl Lattice {
    fn new(layout: &CodeLayout, kind: StabilizerKind) -> Self {
        let stabs = layout.of_kind(kind);
        let n = stabs.len();
        // edges through a shared data qubit; boundary qubits belong to one stabilizer
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut boundary: Vec<Vec<usize>> = vec![Vec::new(); n];
        for q in 1..=layout.n_data() {
            let owners: Vec<usize> = (0..n).filter(|&i| stabs[i].contains(q)).collect();
            match owners.as_slice() {
                [a] => boundary[*a].push(q),
                [a, b] => {
                    adj[*a].push((*b, q));
                    adj[*b].push((*a, q));
                }
                _ => {}
            }
        }
        let mut dist = vec![u64::MAX; n * n];
        let mut path = vec![Vec::new(); n * n];
        let mut bdist = vec![u64::MAX; n];
        let mut bpath = vec![Vec::new(); n];
        for src in 0..n {
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
            let mut d = vec![u64::MAX; n];
            d[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                for &(v, q) in &adj[u] {
                    if d[v] == u64::MAX {
                        d[v] = d[u] + 1;
                        prev[v] = Some((u, q));
                        queue.push_back(v);
                    }
                }
            }
            let trace = |mut v: usize| {
                let mut qs = Vec::new();
                while let Some((u, q)) = prev[v] {
                    qs.push(q);
                    v = u;
                }
                qs
            };
            for dst in 0..n {
                dist[src * n + dst] = d[dst];
                path[src * n + dst] = trace(dst);
            }
            // nearest stabilizer with a boundary qubit, smallest index on ties
            if let Some(b) = (0..n).filter(|&v| !boundary[v].is_empty() && d[v] != u64::MAX).min_by_key(|&v| (d[v], v)) {
                bdist[src] = d[b] + 1;
                let mut qs = trace(b);
                qs.push(boundary[b][0]);
                bpath[src] = qs;
            }
        }
        Self { n, dist, path, bdist, bpath }
    }
}

/// Precomputed decoding structures for one layout and round count.
#[derive(Debug, Clone)]
pub struct Decoder {
    rounds: usize,
    n_x: usize,
    z_supports: Vec<Vec<usize>>,
    logical_z: Vec<usize>,
    x: Lattice,
    z: Lattice,
}

/// Result of decoding one shot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub logical_flip: bool,
    pub z_events: usize,
    pub x_events: usize,
    pub z_weight: u64,
    pub x_weight: u64,
}

impl Decoder {
    pub fn new(layout: &CodeLayout, rounds: usize) -> Self {
        Self {
            rounds,
            n_x: layout.x_stabilizers.len(),
            z_supports: layout.z_stabilizers.iter().map(|s| s.support()).collect(),
            logical_z: layout.logical_z_support.clone(),
            x: Lattice::new(layout, StabilizerKind::X),
            z: Lattice::new(layout, StabilizerKind::Z),
        }
    }

    fn lattice(&self, kind: StabilizerKind) -> &Lattice {
        match kind {
            StabilizerKind::X => &self.x,
            StabilizerKind::Z => &self.z,
        }
    }

    /// Events of both kinds, sorted by (kind, round, index).
    pub fn detection_events(&self, shot: &ShotRecord) -> Result<Vec<DetectionEvent>> {
        let n_stab = self.n_x + self.z_supports.len();
        if shot.syndromes.len() != self.rounds || shot.syndromes.iter().any(|r| r.len() != n_stab) {
            return Err(Error::Parse(format!(
                "shot record has {} rounds of {:?} bits, decoder expects {} × {}",
                shot.syndromes.len(),
                shot.syndromes.first().map(Vec::len),
                self.rounds,
                n_stab
            )));
        }
        let n_data = self.z_supports.iter().flatten().copied().max().unwrap_or(0);
        if shot.final_data_bits.len() < n_data {
            return Err(Error::Parse(format!("final readout has {} bits, need {n_data}", shot.final_data_bits.len())));
        }
        let mut events = Vec::new();
        for (kind, offset, count) in [(StabilizerKind::X, 0, self.n_x), (StabilizerKind::Z, self.n_x, self.z_supports.len())] {
            let mut prev = vec![false; count];
            for (r, row) in shot.syndromes.iter().enumerate() {
                for i in 0..count {
                    let s = row[offset + i];
                    if s != prev[i] {
                        events.push(DetectionEvent { round: r, stabilizer_index: i + 1, kind });
                    }
                    prev[i] = s;
                }
            }
            if kind == StabilizerKind::Z {
                for (i, support) in self.z_supports.iter().enumerate() {
                    let parity = support.iter().fold(false, |acc, &q| acc ^ shot.final_data_bits[q - 1]);
                    if parity != prev[i] {
                        events.push(DetectionEvent { round: self.rounds, stabilizer_index: i + 1, kind });
                    }
                }
            }
        }
        events.sort();
        Ok(events)
    }

    /// Complete space-time graph over `events` (all of `kind`).
    pub fn build_matching_graph(&self, kind: StabilizerKind, events: &[DetectionEvent]) -> MatchingGraph {
        let lat = self.lattice(kind);
        let events: Vec<DetectionEvent> = events.iter().copied().filter(|e| e.kind == kind).collect();
        let k = events.len();
        let mut edges = Vec::with_capacity(k * (k + 1) / 2);
        for (a, ea) in events.iter().enumerate() {
            for (b, eb) in events.iter().enumerate().skip(a + 1) {
                let space = lat.dist[(ea.stabilizer_index - 1) * lat.n + eb.stabilizer_index - 1];
                edges.push((a, b, space.saturating_add(ea.round.abs_diff(eb.round) as u64)));
            }
            edges.push((a, k, lat.bdist[ea.stabilizer_index - 1]));
        }
        MatchingGraph { kind, events, edges }
    }

    /// Data-qubit flips implied by a pairing (paths cancel pairwise).
    pub fn correction(&self, graph: &MatchingGraph, pairing: &Pairing) -> Correction {
        let lat = self.lattice(graph.kind);
        let mut flips = std::collections::BTreeSet::new();
        let mut toggle = |qs: &[usize]| {
            for &q in qs {
                if !flips.insert(q) {
                    flips.remove(&q);
                }
            }
        };
        for &(a, b) in &pairing.pairs {
            let sa = graph.events[a].stabilizer_index - 1;
            match b {
                Some(b) => toggle(&lat.path[sa * lat.n + graph.events[b].stabilizer_index - 1]),
                None => toggle(&lat.bpath[sa]),
            }
        }
        Correction { data_qubit_flips: flips.into_iter().collect() }
    }

    /// Z_L parity of the corrected final readout; `true` = logical flip.
    pub fn logical_outcome(&self, shot: &ShotRecord, correction: &Correction) -> bool {
        let raw = self.logical_z.iter().fold(false, |acc, &q| acc ^ shot.final_data_bits[q - 1]);
        let crossings = correction.data_qubit_flips.iter().filter(|q| self.logical_z.contains(q)).count();
        raw ^ (crossings % 2 == 1)
    }

    pub fn decode(&self, shot: &ShotRecord) -> Result<Decoded> {
        let events = self.detection_events(shot)?;
        let gx = self.build_matching_graph(StabilizerKind::X, &events);
        let gz = self.build_matching_graph(StabilizerKind::Z, &events);
        let px = mwpm(&gx)?;
        let pz = mwpm(&gz)?;
        let corr = self.correction(&gz, &pz);
        Ok(Decoded {
            logical_flip: self.logical_outcome(shot, &corr),
            z_events: gz.events.len(),
            x_events: gx.events.len(),
            z_weight: pz.weight,
            x_weight: px.weight,
        })
    }
}

/// Detection events of `shot` (convenience over [`Decoder::detection_events`]).
pub fn detection_events(shot: &ShotRecord, layout: &CodeLayout) -> Result<Vec<DetectionEvent>> {
    Decoder::new(layout, shot.syndromes.len()).detection_events(shot)
}

/// Matching graph of the events of one kind.
pub fn build_matching_graph(kind: StabilizerKind, events: &[DetectionEvent], layout: &CodeLayout, rounds: usize) -> MatchingGraph {
    Decoder::new(layout, rounds).build_matching_graph(kind, events)
}

/// Minimum-weight perfect matching of events, each event optionally matched
/// to the boundary. Every event gets a private boundary copy; copies pair
/// freely at zero cost, so any parity is feasible. Ties break towards fewer
/// boundary matches, then by the algorithm's deterministic order.
pub fn mwpm(graph: &MatchingGraph) -> Result<Pairing> {
    let k = graph.events.len();
    if k == 0 {
        return Ok(Pairing::default());
    }
    if graph.edges.iter().any(|e| e.2 == u64::MAX) {
        return Err(Error::Unsupported("event with no path to a partner or boundary".into()));
    }
    let scale = (k + 1) as i64;
    let mut edges = Vec::with_capacity(graph.edges.len() + k * k / 2);
    for &(a, b, w) in &graph.edges {
        if b == k {
            edges.push((a, k + a, w as i64 * scale + 1));
        } else {
            edges.push((a, b, w as i64 * scale));
        }
    }
    for a in 0..k {
        for b in a + 1..k {
            edges.push((k + a, k + b, 0));
        }
    }
    let mate = min_weight_perfect_matching(2 * k, &edges)
        .ok_or_else(|| Error::Unsupported("matching graph has no perfect matching".into()))?;
    let mut pairs = Vec::new();
    let mut weight = 0;
    for (a, &m) in mate.iter().enumerate().take(k) {
        if m >= k {
            pairs.push((a, None));
            weight += graph.weight(a, k);
        } else if m > a {
            pairs.push((a, Some(m)));
            weight += graph.weight(a, m);
        }
    }
    Ok(Pairing { pairs, weight })
}

/// Event dump rows `shot, kind, round, stabilizer_index`.
pub fn write_events<W: std::io::Write>(out: W, shots: &[(u64, Vec<DetectionEvent>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["shot", "kind", "round", "stabilizer_index"])?;
    for (shot, events) in shots {
        for e in events {
            w.write_record([shot.to_string(), e.kind.letter().to_string(), e.round.to_string(), e.stabilizer_index.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{build_layout, CodeDistance};

    fn layout(d: usize) -> CodeLayout {
        build_layout(CodeDistance::new(d).unwrap())
    }

    fn quiet_shot(l: &CodeLayout, rounds: usize) -> ShotRecord {
        ShotRecord {
            syndromes: vec![vec![false; l.n_stabilizers()]; rounds],
            final_data_bits: vec![false; l.n_data()],
            shot_seed: 0,
        }
    }

    #[test]
    fn quiet_shot_has_no_events() {
        let l = layout(3);
        let dec = Decoder::new(&l, 3);
        let shot = quiet_shot(&l, 3);
        assert!(dec.detection_events(&shot).unwrap().is_empty());
        assert!(!dec.decode(&shot).unwrap().logical_flip);
    }

    #[test]
    fn measurement_flip_gives_timelike_pair() {
        let l = layout(5);
        let dec = Decoder::new(&l, 5);
        let mut shot = quiet_shot(&l, 5);
        let z3 = l.x_stabilizers.len() + 2;
        shot.syndromes[2][z3] = true;
        let ev = dec.detection_events(&shot).unwrap();
        let want = [2, 3].map(|round| DetectionEvent { round, stabilizer_index: 3, kind: StabilizerKind::Z });
        assert_eq!(ev, want);
        let g = dec.build_matching_graph(StabilizerKind::Z, &ev);
        let p = mwpm(&g).unwrap();
        assert_eq!(p.pairs, vec![(0, Some(1))]);
        assert_eq!(p.weight, 1);
        assert!(!dec.decode(&shot).unwrap().logical_flip);
    }

    #[test]
    fn single_data_errors_decode_at_d3() {
        let l = layout(3);
        let rounds = 3;
        let dec = Decoder::new(&l, rounds);
        for q in 1..=9 {
            for from in 0..=rounds {
                // X on q before round `from`: every later Z syndrome and the readout flip
                let mut shot = quiet_shot(&l, rounds);
                for r in from..rounds {
                    for (i, s) in l.z_stabilizers.iter().enumerate() {
                        shot.syndromes[r][l.x_stabilizers.len() + i] = s.contains(q);
                    }
                }
                shot.final_data_bits[q - 1] = true;
                let out = dec.decode(&shot).unwrap();
                assert!(!out.logical_flip, "X{q} before round {from}");
                assert!(out.z_events >= 1 && out.z_events <= 2);
            }
        }
    }

    #[test]
    fn boundary_adjacent_event_matches_boundary_at_weight_one() {
        let l = layout(3);
        let dec = Decoder::new(&l, 3);
        // qubit 1 sits in exactly one Z stabilizer
        let owner = l.z_stabilizers.iter().position(|s| s.contains(1)).unwrap();
        assert_eq!(l.z_stabilizers.iter().filter(|s| s.contains(1)).count(), 1);
        let ev = [DetectionEvent { round: 1, stabilizer_index: owner + 1, kind: StabilizerKind::Z }];
        let g = dec.build_matching_graph(StabilizerKind::Z, &ev);
        assert_eq!(g.edges, vec![(0, 1, 1)]);
        let p = mwpm(&g).unwrap();
        assert_eq!(p, Pairing { pairs: vec![(0, None)], weight: 1 });
    }

    #[test]
    fn data_error_pair_is_cheaper_than_boundaries() {
        let l = layout(5);
        let dec = Decoder::new(&l, 5);
        for q in 1..=25 {
            let owners: Vec<usize> = (0..l.z_stabilizers.len()).filter(|&i| l.z_stabilizers[i].contains(q)).collect();
            if owners.len() != 2 {
                continue;
            }
            let ev: Vec<DetectionEvent> =
                owners.iter().map(|&i| DetectionEvent { round: 2, stabilizer_index: i + 1, kind: StabilizerKind::Z }).collect();
            let g = dec.build_matching_graph(StabilizerKind::Z, &ev);
            let w = g.weight(0, 1);
            assert!(w <= g.weight(0, 2) && w <= g.weight(1, 2));
            assert_eq!(mwpm(&g).unwrap().pairs, vec![(0, Some(1))]);
        }
    }

    #[test]
    fn aligned_errors_beyond_half_distance_flip_logical() {
        let l = layout(5);
        let dec = Decoder::new(&l, 5);
        // three X errors down the first column (a vertical logical X string has 5)
        let mut shot = quiet_shot(&l, 5);
        for q in [1, 6, 11] {
            shot.final_data_bits[q - 1] = true;
        }
        for r in 0..5 {
            for (i, s) in l.z_stabilizers.iter().enumerate() {
                let hits = [1, 6, 11].iter().filter(|&&q| s.contains(q)).count();
                shot.syndromes[r][l.x_stabilizers.len() + i] = hits % 2 == 1;
            }
        }
        assert!(dec.decode(&shot).unwrap().logical_flip);
    }

    #[test]
    fn ties_are_repeatable() {
        let events: Vec<DetectionEvent> =
            (1..=4).map(|i| DetectionEvent { round: 0, stabilizer_index: i, kind: StabilizerKind::Z }).collect();
        let mut edges = Vec::new();
        for a in 0..4 {
            for b in a + 1..4 {
                edges.push((a, b, 2));
            }
            edges.push((a, 4, 1));
        }
        let g = MatchingGraph { kind: StabilizerKind::Z, events, edges };
        let first = mwpm(&g).unwrap();
        for _ in 0..10 {
            assert_eq!(mwpm(&g).unwrap(), first);
        }
        assert_eq!(first.weight, 4);
    }

    #[test]
    fn event_dump_format() {
        let mut buf = Vec::new();
        let e = DetectionEvent { round: 2, stabilizer_index: 5, kind: StabilizerKind::Z };
        write_events(&mut buf, &[(7, vec![e])]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "shot,kind,round,stabilizer_index\n7,Z,2,5\n");
    }
}
