//! Brute-force reference implementation for the acceptance gate.
//!
//! Everything here is deliberately naive and independent of the library's
//! machinery: states are sorted mode lists, signs come from linear scans of
//! the canonical creation word, and operators are assembled by applying each
//! term of their defining sums state by state.  Only the basis itself is
//! imported, so both sides agree on what is being represented.

use std::collections::BTreeMap;

use schwinger_core::fock::SectorHandle;
use schwinger_core::params::ModelParams;
use schwinger_core::sparse::CsrMatrix;

/// Occupied modes, fermions then antifermions, each ascending.
pub type Occ = (Vec<i32>, Vec<i32>);

#[derive(Debug, Clone, Copy)]
pub enum Op {
    CreateF(i32),
    DestroyF(i32),
    CreateA(i32),
    DestroyA(i32),
}

pub struct NaiveSector {
    pub states: Vec<Occ>,
    index: BTreeMap<Occ, usize>,
}

impl NaiveSector {
    pub fn from_sector(sector: &SectorHandle) -> Self {
        let window = sector.window();
        let states: Vec<Occ> = sector
            .states()
            .iter()
            .map(|s| (s.fermion_modes(window), s.antifermion_modes(window)))
            .collect();
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        NaiveSector { states, index }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn lookup(&self, state: &Occ) -> Option<usize> {
        self.index.get(state).copied()
    }
}

/// Count of occupied slots strictly before mode `n` in one species list.
fn slots_before(list: &[i32], n: i32) -> usize {
    list.iter().filter(|&&m| m < n).count()
}

/// Apply one ladder operator; `None` means the amplitude vanished.
pub fn apply(op: Op, state: &Occ) -> Option<(i32, Occ)> {
    let (mut fermions, mut antifermions) = state.clone();
    let sign_from = |exponent: usize| if exponent % 2 == 0 { 1 } else { -1 };
    match op {
        Op::CreateF(n) => {
            if fermions.contains(&n) {
                return None;
            }
            let pos = slots_before(&fermions, n);
            fermions.insert(pos, n);
            Some((sign_from(pos), (fermions, antifermions)))
        }
        Op::DestroyF(n) => {
            let pos = fermions.iter().position(|&m| m == n)?;
            fermions.remove(pos);
            Some((sign_from(slots_before(&fermions, n)), (fermions, antifermions)))
        }
        Op::CreateA(n) => {
            if antifermions.contains(&n) {
                return None;
            }
            let pos = slots_before(&antifermions, n);
            let exponent = fermions.len() + pos;
            antifermions.insert(pos, n);
            Some((sign_from(exponent), (fermions, antifermions)))
        }
        Op::DestroyA(n) => {
            let pos = antifermions.iter().position(|&m| m == n)?;
            antifermions.remove(pos);
            let exponent = fermions.len() + slots_before(&antifermions, n);
            Some((sign_from(exponent), (fermions, antifermions)))
        }
    }
}

/// Apply a product of ladder operators, rightmost factor first.
pub fn apply_word(word: &[Op], state: &Occ) -> Option<(i32, Occ)> {
    let mut sign = 1i32;
    let mut current = state.clone();
    for op in word.iter().rev() {
        let (s, next) = apply(*op, &current)?;
        sign *= s;
        current = next;
    }
    Some((sign, current))
}

/// Row-major dense real matrix, just enough for the oracle.
#[derive(Clone)]
pub struct Dense {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Dense { n, data: vec![0.0; n * n] }
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.n + c]
    }

    /// Product accumulated over the inner index in ascending order, the same
    /// order the sparse row-merge uses.
    pub fn matmul(&self, other: &Dense) -> Dense {
        let n = self.n;
        let mut out = Dense::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.at(r, k);
                if a == 0.0 {
                    continue;
                }
                for c in 0..n {
                    let b = other.at(k, c);
                    if b != 0.0 {
                        *out.at_mut(r, c) += a * b;
                    }
                }
            }
        }
        out
    }

    /// Largest elementwise difference against a sparse matrix (real parts;
    /// any imaginary part counts as a difference).
    pub fn max_diff(&self, sparse: &CsrMatrix) -> f64 {
        assert_eq!(self.n, sparse.nrows());
        assert_eq!(self.n, sparse.ncols());
        let mut worst = 0.0f64;
        for r in 0..self.n {
            for c in 0..self.n {
                let v = sparse.get(r, c);
                worst = worst.max((self.at(r, c) - v.re).abs()).max(v.im.abs());
            }
        }
        worst
    }
}

/// Add `coeff * (sign from word)` into the matrix for every basis state the
/// word acts on without leaving the sector.
fn accumulate(matrix: &mut Dense, sector: &NaiveSector, word: &[Op], coeff: f64) {
    for (col, state) in sector.states.iter().enumerate() {
        if let Some((sign, image)) = apply_word(word, state) {
            if let Some(row) = sector.lookup(&image) {
                *matrix.at_mut(row, col) += coeff * f64::from(sign);
            }
        }
    }
}

pub fn naive_q(sector: &NaiveSector, n_cut: i32) -> Dense {
    let mut out = Dense::zeros(sector.dim());
    for n in -n_cut..=n_cut {
        accumulate(&mut out, sector, &[Op::CreateF(n), Op::DestroyF(n)], 1.0);
        accumulate(&mut out, sector, &[Op::CreateA(n), Op::DestroyA(n)], -1.0);
    }
    out
}

pub fn naive_q5(sector: &NaiveSector, n_cut: i32) -> Dense {
    let mut out = Dense::zeros(sector.dim());
    for n in -n_cut..=n_cut {
        let fermion_sign = if n >= 0 { 1.0 } else { -1.0 };
        let antifermion_sign = if n > 0 { -1.0 } else { 1.0 };
        accumulate(&mut out, sector, &[Op::CreateF(n), Op::DestroyF(n)], fermion_sign);
        accumulate(&mut out, sector, &[Op::CreateA(n), Op::DestroyA(n)], antifermion_sign);
    }
    out
}

fn add_scalar(matrix: &mut Dense, value: f64) {
    let n = matrix.n;
    for i in 0..n {
        *matrix.at_mut(i, i) += value;
    }
}

pub fn naive_q5_reg(sector: &NaiveSector, params: &ModelParams) -> Dense {
    let mut out = naive_q5(sector, params.n_cut);
    add_scalar(&mut out, -params.a * params.l / std::f64::consts::PI - 1.0);
    out
}

pub fn naive_hd0_reg(sector: &NaiveSector, params: &ModelParams) -> Dense {
    let mut out = Dense::zeros(sector.dim());
    let k_unit = 2.0 * std::f64::consts::PI / params.l;
    for n in -params.n_cut..=params.n_cut {
        let k_abs = k_unit * f64::from(n.abs());
        accumulate(&mut out, sector, &[Op::CreateF(n), Op::DestroyF(n)], k_abs);
        accumulate(&mut out, sector, &[Op::CreateA(n), Op::DestroyA(n)], k_abs);
    }
    add_scalar(
        &mut out,
        -params.a * params.a * params.l / (2.0 * std::f64::consts::PI),
    );
    out
}

pub fn naive_hda_reg(sector: &NaiveSector, params: &ModelParams) -> Dense {
    let hd0 = naive_hd0_reg(sector, params);
    let q5r = naive_q5_reg(sector, params);
    let mut out = Dense::zeros(sector.dim());
    for i in 0..out.data.len() {
        out.data[i] = hd0.data[i] + q5r.data[i] * -params.a;
    }
    out
}

/// Literal four-block mode sum of the current component `j0` (charge) or
/// `j1` (axial), truncated to the window; terms whose indices straddle the
/// window edge are dropped, mirroring the split-point definition.
pub fn naive_j_mode(sector: &NaiveSector, params: &ModelParams, m: i32, axial: bool) -> Dense {
    let n_cut = params.n_cut;
    let inv_l = 1.0 / params.l;
    if m == 0 {
        // Zero modes are the charges scaled by 1/L.
        let base = if axial {
            naive_q5_reg(sector, params)
        } else {
            naive_q(sector, n_cut)
        };
        let mut out = Dense::zeros(sector.dim());
        for i in 0..out.data.len() {
            out.data[i] = base.data[i] * inv_l;
        }
        return out;
    }

    let in_window = |n: i32| n.abs() <= n_cut;
    let second = if axial { -1.0 } else { 1.0 };
    let mut out = Dense::zeros(sector.dim());
    for n in -(n_cut + m.abs())..=(n_cut + m.abs()) {
        // b^+_{n-m} b_n on matching-sign mode pairs.
        let np = n - m;
        if in_window(n) && in_window(np) {
            if n >= 0 && np >= 0 {
                accumulate(&mut out, sector, &[Op::CreateF(np), Op::DestroyF(n)], inv_l);
            } else if n < 0 && np < 0 {
                accumulate(&mut out, sector, &[Op::CreateF(np), Op::DestroyF(n)], second * inv_l);
            }
        }
        // Pair creation b^+_{-m-n} c^+_n.
        let np = -m - n;
        if in_window(n) && in_window(np) {
            if n > 0 && np >= 0 {
                accumulate(&mut out, sector, &[Op::CreateF(np), Op::CreateA(n)], inv_l);
            } else if n <= 0 && np < 0 {
                accumulate(&mut out, sector, &[Op::CreateF(np), Op::CreateA(n)], second * inv_l);
            }
        }
        // Pair annihilation c_{m-n} b_n.
        let np = m - n;
        if in_window(n) && in_window(np) {
            if n >= 0 && np > 0 {
                accumulate(&mut out, sector, &[Op::DestroyA(np), Op::DestroyF(n)], inv_l);
            } else if n < 0 && np <= 0 {
                accumulate(&mut out, sector, &[Op::DestroyA(np), Op::DestroyF(n)], second * inv_l);
            }
        }
        // c^+_n c_{n+m}; the charge density carries a minus sign on both
        // branches, the axial one only on positive modes.
        let np = n + m;
        if in_window(n) && in_window(np) {
            if n <= 0 && np <= 0 {
                let coeff = if axial { inv_l } else { -inv_l };
                accumulate(&mut out, sector, &[Op::CreateA(n), Op::DestroyA(np)], coeff);
            } else if n > 0 && np > 0 {
                accumulate(&mut out, sector, &[Op::CreateA(n), Op::DestroyA(np)], -inv_l);
            }
        }
    }
    out
}

/// Coulomb sum `(e^2 L / 2) sum_m (1/k_m^2) (j0(-m) j0(m) + j0(m) j0(-m))`
/// with the vacuum expectation subtracted, composed with the same scalar
/// expressions and the same accumulation order as the library builder so the
/// comparison is entrywise exact.
pub fn naive_coulomb(
    sector: &NaiveSector,
    params: &ModelParams,
    m_max: i32,
    vacuum_row: Option<usize>,
) -> Dense {
    let dim = sector.dim();
    let mut total = Dense::zeros(dim);
    let e2l_half = params.coupling_e * params.coupling_e * params.l / 2.0;
    let k_unit = 2.0 * std::f64::consts::PI / params.l;
    for m in 1..=m_max {
        let k_m = k_unit * f64::from(m);
        let weight = e2l_half / (k_m * k_m);
        let plus = naive_j_mode(sector, params, m, false);
        let minus = naive_j_mode(sector, params, -m, false);
        let first = minus.matmul(&plus);
        let second = plus.matmul(&minus);
        for i in 0..total.data.len() {
            total.data[i] += (first.data[i] + second.data[i]) * weight;
        }
    }
    if let Some(vac) = vacuum_row {
        let vev = total.at(vac, vac);
        add_scalar(&mut total, -(1.0 * vev));
    }
    total
}
