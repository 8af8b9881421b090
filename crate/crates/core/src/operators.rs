//! Matrix representations of the model's operators on a basis sector.
//!
//! Diagonal operators (charge, axial charge, free Hamiltonian) come straight
//! from occupation counting.  The current modes are assembled term by term
//! from their defining mode sums; a term whose mode indices straddle the
//! window edge is dropped and counted, so truncation artifacts are visible
//! rather than silent.
//!
//! All entries are real in this basis but stored as `Complex64`: the sparse
//! layer, the solvers and the file formats stay agnostic of that accident.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{apply_ladder, apply_word, ChargeFilter, FockState, Ladder, SectorHandle};
use crate::params::ModelParams;
use crate::sparse::CsrMatrix;

/// Counterterm added to the naive axial charge: `-aL/pi - 1`.
pub fn axial_counterterm(a: f64, l: f64) -> f64 {
    -a * l / PI - 1.0
}

/// Counterterm added to the naive free Hamiltonian: `-a^2 L / (2 pi)`.
pub fn energy_counterterm(a: f64, l: f64) -> f64 {
    -a * a * l / (2.0 * PI)
}

/// Truncation losses recorded while assembling an operator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Leakage {
    /// Terms of the defining mode sum dropped because one index left the
    /// window while another stayed inside.
    pub clipped_terms: usize,
    /// Images that fell outside the sector's particle cap.
    pub capped_images: usize,
}

impl Leakage {
    fn merge(&mut self, other: Leakage) {
        self.clipped_terms += other.clipped_terms;
        self.capped_images += other.capped_images;
    }
}

/// A sparse operator over one basis sector, tagged with how it was built.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    sector: SectorHandle,
    mat: CsrMatrix,
    provenance: String,
    leakage: Leakage,
}

impl OperatorMatrix {
    fn new(sector: &SectorHandle, mat: CsrMatrix, provenance: String, leakage: Leakage) -> Self {
        debug_assert_eq!(mat.nrows(), sector.dim());
        debug_assert_eq!(mat.ncols(), sector.dim());
        OperatorMatrix { sector: sector.clone(), mat, provenance, leakage }
    }

    pub fn sector(&self) -> &SectorHandle {
        &self.sector
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CsrMatrix {
        self.mat
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn leakage(&self) -> Leakage {
        self.leakage
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Diagonal matrix element for basis state `i`.
    pub fn expectation(&self, i: usize) -> f64 {
        self.mat.get(i, i).re
    }
}

fn check_sector_params(sector: &SectorHandle, params: &ModelParams) -> Result<()> {
    params.validate()?;
    if params.n_cut != sector.window().n_cut() {
        return Err(Error::InvalidParams(format!(
            "params n_cut {} does not match sector window {}",
            params.n_cut,
            sector.window().n_cut()
        )));
    }
    if params.max_particles != sector.max_particles() {
        return Err(Error::InvalidParams(format!(
            "params max_particles {} does not match sector cap {}",
            params.max_particles,
            sector.max_particles()
        )));
    }
    Ok(())
}

fn diagonal_operator<F: Fn(&FockState) -> f64>(
    sector: &SectorHandle,
    provenance: String,
    f: F,
) -> OperatorMatrix {
    let diag: Vec<Complex64> =
        sector.states().iter().map(|s| Complex64::new(f(s), 0.0)).collect();
    OperatorMatrix::new(sector, CsrMatrix::from_diagonal(&diag), provenance, Leakage::default())
}

/// Electric charge `Q = sum_n (b_n^+ b_n - c_n^+ c_n)`.
pub fn build_q(sector: &SectorHandle) -> OperatorMatrix {
    diagonal_operator(sector, "Q".into(), |s| f64::from(s.charge()))
}

/// Naive axial charge: `+1` per fermion with `n >= 0`, `-1` per fermion with
/// `n < 0`, `-1` per antifermion with `n > 0`, `+1` per antifermion with
/// `n <= 0`.  Carries no counterterm and is not invariant under the large
/// gauge transformation.
pub fn build_q5_naive(sector: &SectorHandle) -> OperatorMatrix {
    let window = *sector.window();
    diagonal_operator(sector, "Q5_naive".into(), move |s| f64::from(s.axial_count(&window)))
}

/// Regularized axial charge: the naive counting plus `-aL/pi - 1`.
pub fn build_q5_reg(sector: &SectorHandle, params: &ModelParams) -> Result<OperatorMatrix> {
    check_sector_params(sector, params)?;
    let window = *sector.window();
    let shift = axial_counterterm(params.a, params.l);
    Ok(diagonal_operator(
        sector,
        format!("Q5_reg(a={}, L={})", params.a, params.l),
        move |s| f64::from(s.axial_count(&window)) + shift,
    ))
}

/// Regularized free Dirac Hamiltonian at `a = 0`:
/// `sum_n |k_n| (b_n^+ b_n + c_n^+ c_n) - a^2 L / (2 pi)`.
pub fn build_hd0_reg(sector: &SectorHandle, params: &ModelParams) -> Result<OperatorMatrix> {
    check_sector_params(sector, params)?;
    let window = *sector.window();
    let k_unit = params.k_unit();
    let shift = energy_counterterm(params.a, params.l);
    Ok(diagonal_operator(
        sector,
        format!("HD0_reg(a={}, L={})", params.a, params.l),
        move |s| k_unit * s.kinetic_units(&window) as f64 + shift,
    ))
}

/// Regularized Dirac Hamiltonian coupled to the gauge zero mode:
/// `H_D^{0,reg} - a * Q^{5,reg}`.
///
/// The builder also assembles the equivalent mode-by-mode form
/// `sum_{n>=0} (k_n - a) b^+b - sum_{n<0} (k_n - a) b^+b
///  + sum_{n>0} (k_n + a) c^+c - sum_{n<=0} (k_n + a) c^+c
///  + a^2 L / (2 pi) + a`
/// and asserts the two agree, which pins the counterterm bookkeeping.
pub fn build_hda_reg(sector: &SectorHandle, params: &ModelParams) -> Result<OperatorMatrix> {
    check_sector_params(sector, params)?;
    let hd0 = build_hd0_reg(sector, params)?;
    let q5 = build_q5_reg(sector, params)?;
    let mat = hd0.mat.add(&q5.mat.scale(Complex64::new(-params.a, 0.0)));

    let window = *sector.window();
    let k_unit = params.k_unit();
    let a = params.a;
    let constant = a * a * params.l / (2.0 * PI) + a;
    let modewise = diagonal_operator(sector, String::new(), move |s| {
        let mut total = constant;
        for n in s.fermion_modes(&window) {
            let term = k_unit * f64::from(n) - a;
            total += if n >= 0 { term } else { -term };
        }
        for n in s.antifermion_modes(&window) {
            let term = k_unit * f64::from(n) + a;
            total += if n > 0 { term } else { -term };
        }
        total
    });
    let scale = mat.max_abs().max(1.0);
    let diff = mat.max_abs_diff(&modewise.mat);
    if diff > 1e-12 * scale {
        return Err(Error::Internal(format!(
            "coupled Hamiltonian assemblies disagree by {diff:e} at scale {scale:e}"
        )));
    }

    Ok(OperatorMatrix::new(
        sector,
        mat,
        format!("HDa_reg(a={}, L={})", params.a, params.l),
        Leakage::default(),
    ))
}

/// Which component of the current a mode sum belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CurrentKind {
    /// Charge density; all four blocks enter with a plus sign.
    Charge,
    /// Axial density; the second branch of each block flips sign.
    Axial,
}

struct JTerm {
    /// Operator product written left to right; the last entry acts first.
    word: [Ladder; 2],
    coeff: f64,
}

/// Terms of the `m`-th current mode, together with the clipped-term count.
fn current_mode_terms(kind: CurrentKind, m: i32, n_cut: i32) -> (Vec<JTerm>, usize) {
    let mut terms = Vec::new();
    let mut clipped = 0usize;
    let in_window = |n: i32| n.abs() <= n_cut;
    let reach = n_cut + m.abs();
    let mut push = |n: i32, np: i32, word: [Ladder; 2], coeff: f64| {
        match (in_window(n), in_window(np)) {
            (true, true) => terms.push(JTerm { word, coeff }),
            (true, false) | (false, true) => clipped += 1,
            (false, false) => {}
        }
    };
    let branch_sign = |second_branch: bool| -> f64 {
        match (kind, second_branch) {
            (CurrentKind::Charge, _) | (CurrentKind::Axial, false) => 1.0,
            (CurrentKind::Axial, true) => -1.0,
        }
    };

    for n in -reach..=reach {
        // b_{n'}^+ b_n with n' = n - m, on (n >= 0, n' >= 0) or (n < 0, n' < 0).
        let np = n - m;
        if n >= 0 && np >= 0 {
            push(n, np, [Ladder::create_fermion(np), Ladder::destroy_fermion(n)], 1.0);
        } else if n < 0 && np < 0 {
            push(n, np, [Ladder::create_fermion(np), Ladder::destroy_fermion(n)], branch_sign(true));
        }

        // b_{n'}^+ c_n^+ with n' = -m - n, on (n > 0, n' >= 0) or (n <= 0, n' < 0).
        let np = -m - n;
        if n > 0 && np >= 0 {
            push(n, np, [Ladder::create_fermion(np), Ladder::create_antifermion(n)], 1.0);
        } else if n <= 0 && np < 0 {
            push(
                n,
                np,
                [Ladder::create_fermion(np), Ladder::create_antifermion(n)],
                branch_sign(true),
            );
        }

        // c_{n'} b_n with n' = m - n, on (n >= 0, n' > 0) or (n < 0, n' <= 0).
        let np = m - n;
        if n >= 0 && np > 0 {
            push(n, np, [Ladder::destroy_antifermion(np), Ladder::destroy_fermion(n)], 1.0);
        } else if n < 0 && np <= 0 {
            push(
                n,
                np,
                [Ladder::destroy_antifermion(np), Ladder::destroy_fermion(n)],
                branch_sign(true),
            );
        }

        // c_n^+ c_{n'} with n' = n + m, on (n <= 0, n' <= 0) or (n > 0, n' > 0).
        // The charge density carries a minus sign on both branches; the axial
        // density flips the (n <= 0, n' <= 0) branch to plus.
        let np = n + m;
        if n <= 0 && np <= 0 {
            let coeff = match kind {
                CurrentKind::Charge => -1.0,
                CurrentKind::Axial => 1.0,
            };
            push(n, np, [Ladder::create_antifermion(n), Ladder::destroy_antifermion(np)], coeff);
        } else if n > 0 && np > 0 {
            push(n, np, [Ladder::create_antifermion(n), Ladder::destroy_antifermion(np)], -1.0);
        }
    }
    (terms, clipped)
}

fn build_current_mode(
    sector: &SectorHandle,
    params: &ModelParams,
    m: i32,
    kind: CurrentKind,
) -> Result<OperatorMatrix> {
    check_sector_params(sector, params)?;
    let label = match kind {
        CurrentKind::Charge => "j0",
        CurrentKind::Axial => "j1",
    };
    if m == 0 {
        // The zero modes are the charges themselves: `j0(0) = Q / L` with no
        // anomaly, `j1(0) = Q^{5,reg} / L`.
        let inv_l = Complex64::new(1.0 / params.l, 0.0);
        let base = match kind {
            CurrentKind::Charge => build_q(sector),
            CurrentKind::Axial => build_q5_reg(sector, params)?,
        };
        return Ok(OperatorMatrix::new(
            sector,
            base.mat.scale(inv_l),
            format!("{label}(m=0, L={})", params.l),
            Leakage::default(),
        ));
    }

    let (terms, clipped) = current_mode_terms(kind, m, params.n_cut);
    let window = *sector.window();
    let inv_l = 1.0 / params.l;
    let mut triplets = Vec::new();
    let mut capped = 0usize;
    for (col, state) in sector.states().iter().enumerate() {
        for term in &terms {
            match apply_word(state, &term.word, &window)? {
                None => {}
                Some((sign, image)) => match sector.index_of(&image) {
                    Some(row) => triplets.push((
                        row,
                        col,
                        Complex64::new(term.coeff * f64::from(sign) * inv_l, 0.0),
                    )),
                    None => capped += 1,
                },
            }
        }
    }
    Ok(OperatorMatrix::new(
        sector,
        CsrMatrix::from_triplets(sector.dim(), sector.dim(), triplets),
        format!("{label}(m={m}, L={})", params.l),
        Leakage { clipped_terms: clipped, capped_images: capped },
    ))
}

/// `m`-th Fourier mode of the charge density, `1/L` times the windowed mode
/// sum.  `m = 0` returns `Q / L` exactly.
pub fn build_j0_mode(sector: &SectorHandle, params: &ModelParams, m: i32) -> Result<OperatorMatrix> {
    build_current_mode(sector, params, m, CurrentKind::Charge)
}

/// `m`-th Fourier mode of the axial current density.  `m = 0` returns
/// `Q^{5,reg} / L` exactly.
pub fn build_j1_mode(sector: &SectorHandle, params: &ModelParams, m: i32) -> Result<OperatorMatrix> {
    build_current_mode(sector, params, m, CurrentKind::Axial)
}

/// Coulomb term
/// `(e^2 L / 2) sum_{0 < |m| <= m_max} k_m^{-2} j0(-m) j0(m)`,
/// with its expectation in the empty vacuum subtracted when the vacuum
/// belongs to the sector.  The subtraction constant depends on the cutoffs;
/// it is recomputed per sector, never cached across truncations.
pub fn build_coulomb(
    sector: &SectorHandle,
    params: &ModelParams,
    m_max: i32,
) -> Result<OperatorMatrix> {
    check_sector_params(sector, params)?;
    if m_max < 1 || m_max > 2 * params.n_cut {
        return Err(Error::InvalidParams(format!(
            "m_max must lie in 1..=2*n_cut = {}, got {m_max}",
            2 * params.n_cut
        )));
    }
    let dim = sector.dim();
    let mut total = CsrMatrix::zeros(dim, dim);
    let mut leakage = Leakage::default();
    let e2l_half = params.coupling_e * params.coupling_e * params.l / 2.0;
    for m in 1..=m_max {
        let k_m = params.k_unit() * f64::from(m);
        let weight = Complex64::new(e2l_half / (k_m * k_m), 0.0);
        let plus = build_j0_mode(sector, params, m)?;
        let minus = build_j0_mode(sector, params, -m)?;
        leakage.merge(plus.leakage);
        leakage.merge(minus.leakage);
        // Both signs of m contribute; k_m^2 is even in m.
        let product =
            minus.mat.matmul(&plus.mat).add(&plus.mat.matmul(&minus.mat)).scale(weight);
        total = total.add(&product);
    }
    if let Some(vac) = sector.index_of(&FockState::VACUUM) {
        let vev = total.get(vac, vac);
        total = total.sub(&CsrMatrix::identity(dim).scale(vev));
    }
    Ok(OperatorMatrix::new(
        sector,
        total,
        format!("coulomb(m_max={m_max}, e={}, L={})", params.coupling_e, params.l),
        leakage,
    ))
}

/// Matrix of a single ladder operator on a sector (useful only on
/// [`ChargeFilter::Any`] sectors, where both charges of an image exist).
pub fn ladder_matrix(sector: &SectorHandle, op: Ladder) -> Result<OperatorMatrix> {
    if matches!(sector.charge(), ChargeFilter::Fixed(_)) {
        return Err(Error::InvalidParams(
            "single ladder operators change the charge; use an all-charge sector".into(),
        ));
    }
    let window = *sector.window();
    let mut triplets = Vec::new();
    let mut capped = 0usize;
    for (col, state) in sector.states().iter().enumerate() {
        match apply_ladder(state, op, &window)? {
            None => {}
            Some((sign, image)) => match sector.index_of(&image) {
                Some(row) => triplets.push((row, col, Complex64::new(f64::from(sign), 0.0))),
                None => capped += 1,
            },
        }
    }
    let tag = match (op.species, op.dagger) {
        (crate::fock::Species::Fermion, true) => format!("b^+({})", op.n),
        (crate::fock::Species::Fermion, false) => format!("b({})", op.n),
        (crate::fock::Species::Antifermion, true) => format!("c^+({})", op.n),
        (crate::fock::Species::Antifermion, false) => format!("c({})", op.n),
    };
    Ok(OperatorMatrix::new(
        sector,
        CsrMatrix::from_triplets(sector.dim(), sector.dim(), triplets),
        tag,
        Leakage { clipped_terms: 0, capped_images: capped },
    ))
}
