//! Truncated positive-energy Fock space.
//!
//! States are creation words applied to the empty vacuum, kept in canonical
//! order: fermion creators `b_n^+` with ascending `n` first, then antifermion
//! creators `c_n^+` with ascending `n`.  Occupations are stored as two
//! fixed-width bitsets over the mode window `[-n_cut, n_cut]`, so the
//! anticommutation sign of a ladder operator is a popcount over the occupied
//! slots that precede the target slot in the canonical word.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Symmetric mode window `[-n_cut, n_cut]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeWindow {
    n_cut: i32,
}

impl ModeWindow {
    pub fn new(n_cut: i32) -> Result<Self> {
        if !(1..=30).contains(&n_cut) {
            return Err(Error::InvalidParams(format!(
                "mode window half-width must be in 1..=30, got {n_cut}"
            )));
        }
        Ok(ModeWindow { n_cut })
    }

    pub fn n_cut(&self) -> i32 {
        self.n_cut
    }

    /// Number of modes in the window, `2 n_cut + 1`.
    pub fn width(&self) -> u32 {
        (2 * self.n_cut + 1) as u32
    }

    pub fn contains(&self, n: i32) -> bool {
        n.abs() <= self.n_cut
    }

    /// Bit position of mode `n`; requires `contains(n)`.
    fn bit(&self, n: i32) -> u32 {
        debug_assert!(self.contains(n));
        (n + self.n_cut) as u32
    }

    /// Mode index stored at bit position `bit`.
    fn mode(&self, bit: u32) -> i32 {
        bit as i32 - self.n_cut
    }

    pub fn modes(&self) -> impl Iterator<Item = i32> {
        -self.n_cut..=self.n_cut
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Fermion,
    Antifermion,
}

/// A single ladder operator: `b_n` / `b_n^+` / `c_n` / `c_n^+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ladder {
    pub species: Species,
    pub n: i32,
    pub dagger: bool,
}

impl Ladder {
    pub fn create_fermion(n: i32) -> Self {
        Ladder { species: Species::Fermion, n, dagger: true }
    }
    pub fn destroy_fermion(n: i32) -> Self {
        Ladder { species: Species::Fermion, n, dagger: false }
    }
    pub fn create_antifermion(n: i32) -> Self {
        Ladder { species: Species::Antifermion, n, dagger: true }
    }
    pub fn destroy_antifermion(n: i32) -> Self {
        Ladder { species: Species::Antifermion, n, dagger: false }
    }
}

/// Occupation bitsets of one basis ket.  Bit `i` of each word is mode
/// `i - n_cut` of the owning window; the window is passed to every operation
/// instead of being stored per state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState {
    fermions: u64,
    antifermions: u64,
}

impl FockState {
    pub const VACUUM: FockState = FockState { fermions: 0, antifermions: 0 };

    pub fn from_modes(window: &ModeWindow, fermions: &[i32], antifermions: &[i32]) -> Result<Self> {
        let mut state = FockState::VACUUM;
        for &n in fermions {
            if !window.contains(n) {
                return Err(Error::OutOfWindow { mode: n, n_cut: window.n_cut() });
            }
            let bit = 1u64 << window.bit(n);
            if state.fermions & bit != 0 {
                return Err(Error::InvalidParams(format!("fermion mode {n} listed twice")));
            }
            state.fermions |= bit;
        }
        for &n in antifermions {
            if !window.contains(n) {
                return Err(Error::OutOfWindow { mode: n, n_cut: window.n_cut() });
            }
            let bit = 1u64 << window.bit(n);
            if state.antifermions & bit != 0 {
                return Err(Error::InvalidParams(format!("antifermion mode {n} listed twice")));
            }
            state.antifermions |= bit;
        }
        Ok(state)
    }

    pub fn fermion_count(&self) -> u32 {
        self.fermions.count_ones()
    }

    pub fn antifermion_count(&self) -> u32 {
        self.antifermions.count_ones()
    }

    pub fn particle_count(&self) -> u32 {
        self.fermion_count() + self.antifermion_count()
    }

    /// Electric charge eigenvalue: fermions minus antifermions.
    pub fn charge(&self) -> i32 {
        self.fermion_count() as i32 - self.antifermion_count() as i32
    }

    pub fn has(&self, window: &ModeWindow, species: Species, n: i32) -> bool {
        let word = match species {
            Species::Fermion => self.fermions,
            Species::Antifermion => self.antifermions,
        };
        window.contains(n) && word & (1u64 << window.bit(n)) != 0
    }

    pub fn fermion_modes(&self, window: &ModeWindow) -> Vec<i32> {
        bits_to_modes(self.fermions, window)
    }

    pub fn antifermion_modes(&self, window: &ModeWindow) -> Vec<i32> {
        bits_to_modes(self.antifermions, window)
    }

    /// Naive axial counting: +1 per fermion with `n >= 0`, -1 per fermion
    /// with `n < 0`, -1 per antifermion with `n > 0`, +1 per antifermion
    /// with `n <= 0`.
    pub fn axial_count(&self, window: &ModeWindow) -> i32 {
        // Bits at positions >= bit(0) are modes n >= 0.
        let zero = window.bit(0);
        let nonneg = !0u64 << zero;
        let f_pos = (self.fermions & nonneg).count_ones() as i32;
        let f_neg = self.fermion_count() as i32 - f_pos;
        // Antifermions split at n > 0 versus n <= 0.
        let strict_pos = !0u64 << (zero + 1);
        let a_pos = (self.antifermions & strict_pos).count_ones() as i32;
        let a_nonpos = self.antifermion_count() as i32 - a_pos;
        f_pos - f_neg - a_pos + a_nonpos
    }

    /// Sum of `|n|` over all occupied modes of both species; the free
    /// Hamiltonian diagonal is `2 pi / L` times this integer.
    pub fn kinetic_units(&self, window: &ModeWindow) -> i64 {
        let mut total = 0i64;
        for word in [self.fermions, self.antifermions] {
            let mut w = word;
            while w != 0 {
                let bit = w.trailing_zeros();
                total += window.mode(bit).unsigned_abs() as i64;
                w &= w - 1;
            }
        }
        total
    }
}

fn bits_to_modes(word: u64, window: &ModeWindow) -> Vec<i32> {
    let mut out = Vec::with_capacity(word.count_ones() as usize);
    let mut w = word;
    while w != 0 {
        let bit = w.trailing_zeros();
        out.push(window.mode(bit));
        w &= w - 1;
    }
    out
}

/// Applies one ladder operator to a basis ket.
///
/// Returns `Ok(None)` when the operator annihilates the state (creating an
/// occupied mode or destroying an empty one), `Ok(Some((sign, state)))`
/// otherwise.  A mode outside the window is a truncation error, not a zero.
pub fn apply_ladder(
    state: &FockState,
    op: Ladder,
    window: &ModeWindow,
) -> Result<Option<(i32, FockState)>> {
    if !window.contains(op.n) {
        return Err(Error::OutOfWindow { mode: op.n, n_cut: window.n_cut() });
    }
    let bit = 1u64 << window.bit(op.n);
    let mut next = *state;
    let (word, preceding_fermions) = match op.species {
        Species::Fermion => (&mut next.fermions, 0),
        // Antifermion slots sit after the whole fermion block in the
        // canonical word.
        Species::Antifermion => (&mut next.antifermions, state.fermions.count_ones()),
    };
    if op.dagger {
        if *word & bit != 0 {
            return Ok(None);
        }
        *word |= bit;
    } else {
        if *word & bit == 0 {
            return Ok(None);
        }
        *word &= !bit;
    }
    // Occupied slots strictly before the target slot, counted on the state
    // as it was before this operator acted.
    let prefix = match op.species {
        Species::Fermion => state.fermions & (bit - 1),
        Species::Antifermion => state.antifermions & (bit - 1),
    };
    let crossings = preceding_fermions + prefix.count_ones();
    let sign = if crossings % 2 == 0 { 1 } else { -1 };
    Ok(Some((sign, next)))
}

/// Applies a product of ladder operators written left to right (so the last
/// element of `word` acts first, as in operator notation).
pub fn apply_word(
    state: &FockState,
    word: &[Ladder],
    window: &ModeWindow,
) -> Result<Option<(i32, FockState)>> {
    let mut sign = 1;
    let mut current = *state;
    for op in word.iter().rev() {
        match apply_ladder(&current, *op, window)? {
            None => return Ok(None),
            Some((s, next)) => {
                sign *= s;
                current = next;
            }
        }
    }
    Ok(Some((sign, current)))
}

/// Charge constraint of a basis sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargeFilter {
    Fixed(i32),
    /// All charges subject to the particle cap; used for checks that need
    /// charge-changing operators (single ladder matrices, anticommutators).
    Any,
}

/// An enumerated, ordered slice of the truncated Fock space.
///
/// Ordering is deterministic: ascending total particle number, then the
/// fermion occupation word, then the antifermion word.  The vacuum, when
/// admissible, is state 0.
#[derive(Debug, Clone)]
pub struct BasisSector {
    window: ModeWindow,
    max_particles: u32,
    charge: ChargeFilter,
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
}

pub type SectorHandle = Arc<BasisSector>;

impl BasisSector {
    pub fn window(&self) -> &ModeWindow {
        &self.window
    }

    pub fn max_particles(&self) -> u32 {
        self.max_particles
    }

    pub fn charge(&self) -> ChargeFilter {
        self.charge
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &FockState {
        &self.states[i]
    }

    pub fn index_of(&self, state: &FockState) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Indices of states whose occupied modes all satisfy
    /// `|n| <= n_cut - mode_margin` and whose particle number is at most
    /// `max_particles - particle_margin`.  These are the states on which
    /// operators shifting modes by up to `mode_margin` and changing the
    /// particle number by up to `particle_margin` act without truncation.
    pub fn interior_indices(&self, mode_margin: i32, particle_margin: u32) -> Vec<usize> {
        let inner = self.window.n_cut() - mode_margin;
        let cap = self.max_particles.saturating_sub(particle_margin);
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| {
                s.particle_count() <= cap
                    && s.fermion_modes(&self.window).iter().all(|n| n.abs() <= inner)
                    && s.antifermion_modes(&self.window).iter().all(|n| n.abs() <= inner)
            })
            .map(|(i, _)| i)
            .collect()
    }
}

/// Enumerates the basis of one charge sector.
///
/// An infeasible charge (`|Q| > max_particles`) yields an empty sector, not
/// an error; invalid cutoffs are errors.
pub fn enumerate_basis(params: &ModelParams, charge: i32) -> Result<BasisSector> {
    params.validate()?;
    enumerate(params, ChargeFilter::Fixed(charge))
}

/// Enumerates all charge sectors at once (see [`ChargeFilter::Any`]).
pub fn enumerate_all_charges(params: &ModelParams) -> Result<BasisSector> {
    params.validate()?;
    enumerate(params, ChargeFilter::Any)
}

fn enumerate(params: &ModelParams, charge: ChargeFilter) -> Result<BasisSector> {
    let window = ModeWindow::new(params.n_cut)?;
    let width = window.width();
    let max_p = params.max_particles;

    let mut states = Vec::new();
    for nf in 0..=max_p.min(width) {
        for na in 0..=(max_p - nf).min(width) {
            if let ChargeFilter::Fixed(q) = charge {
                if nf as i32 - na as i32 != q {
                    continue;
                }
            }
            for f_word in subsets(width, nf) {
                for a_word in subsets(width, na) {
                    states.push(FockState { fermions: f_word, antifermions: a_word });
                }
            }
        }
    }
    states.sort_by_key(|s| (s.particle_count(), s.fermions, s.antifermions));
    states.dedup();

    let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    Ok(BasisSector { window, max_particles: max_p, charge, states, index })
}

/// All `width`-bit words with exactly `count` bits set, ascending.
fn subsets(width: u32, count: u32) -> Vec<u64> {
    if count > width {
        return Vec::new();
    }
    if count == 0 {
        return vec![0];
    }
    let limit = 1u64 << width;
    let mut word = (1u64 << count) - 1;
    let mut out = Vec::new();
    while word < limit {
        out.push(word);
        // Gosper's hack: next word with the same popcount.
        let c = word & word.wrapping_neg();
        let r = word + c;
        word = (((r ^ word) >> 2) / c) | r;
    }
    out
}

/// The unexcited state of winding number `P`.
///
/// `P = 0` is the vacuum; `P >= 1` fills fermion modes `0..=P-1` and
/// antifermion modes `-(P-1)..=0`; `P <= -1` fills fermion modes `P..=-1`
/// and antifermion modes `1..=-P`.  Guarded to `|P| <= n_cut` so every
/// occupied mode is in-window.
pub fn unexcited_state(p: i32, window: &ModeWindow) -> Result<FockState> {
    if p.abs() > window.n_cut() {
        return Err(Error::OutOfWindow { mode: p, n_cut: window.n_cut() });
    }
    let (fermions, antifermions): (Vec<i32>, Vec<i32>) = if p == 0 {
        (Vec::new(), Vec::new())
    } else if p > 0 {
        ((0..p).collect(), (-(p - 1)..=0).collect())
    } else {
        ((p..0).collect(), (1..=-p).collect())
    };
    FockState::from_modes(window, &fermions, &antifermions)
}
