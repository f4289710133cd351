//! Linear-code secret sharing with explicit access structures.
//!
//! For an [n, k] code over GF(q) with generator G and parity-check H, the
//! dealer embeds the secret as coordinate 0 of a codeword `f = u G` (choosing
//! `u` uniformly with `u . g_0 = m`) and hands coordinate i to participant i.
//! A participant set recovers the secret exactly when the row space of H
//! contains a vector supported on the set (plus coordinate 0) whose first
//! entry is 1; since `v . f = 0`, the secret is `m = -sum_j v_j f_j`.

use std::collections::BTreeSet;

use serde::Deserialize;

use super::field::PrimeField;
use super::GfssError;
use crate::prng::SplitMix64;
use crate::sets::prune_supersets;

/// Dense matrix over GF(q), row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl Mat {
    pub fn from_rows(field: &PrimeField, rows: &[Vec<u64>]) -> Result<Self, GfssError> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if height == 0 || width == 0 {
            return Err(GfssError::Dimensions("matrix must be non-empty".into()));
        }
        let mut data = Vec::with_capacity(height * width);
        for row in rows {
            if row.len() != width {
                return Err(GfssError::Dimensions("ragged rows".into()));
            }
            for &value in row {
                data.push(field.check(value)?);
            }
        }
        Ok(Self {
            rows: height,
            cols: width,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.at(r, c)).collect()
    }

    pub fn rank(&self, field: &PrimeField) -> usize {
        let (_, pivots) = self.row_echelon(field);
        pivots.len()
    }

    /// Returns the reduced row echelon form and the pivot column indices.
    fn row_echelon(&self, field: &PrimeField) -> (Mat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for col in 0..m.cols {
            let Some(src) = (pivot_row..m.rows).find(|&r| m.at(r, col) != 0) else {
                continue;
            };
            for c in 0..m.cols {
                m.data.swap(pivot_row * m.cols + c, src * m.cols + c);
            }
            let inv = field.inv(m.at(pivot_row, col)).expect("pivot nonzero");
            for c in 0..m.cols {
                let scaled = field.mul(m.at(pivot_row, c), inv);
                m.data[pivot_row * m.cols + c] = scaled;
            }
            for r in 0..m.rows {
                if r != pivot_row && m.at(r, col) != 0 {
                    let factor = m.at(r, col);
                    for c in 0..m.cols {
                        let value = field.sub(m.at(r, c), field.mul(factor, m.at(pivot_row, c)));
                        m.data[r * m.cols + c] = value;
                    }
                }
            }
            pivots.push(col);
            pivot_row += 1;
            if pivot_row == m.rows {
                break;
            }
        }
        (m, pivots)
    }

    /// Basis of the right null space `{ v : M v = 0 }` as rows.
    pub fn nullspace_basis(&self, field: &PrimeField) -> Vec<Vec<u64>> {
        let (rref, pivots) = self.row_echelon(field);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Vec::with_capacity(free.len());
        for &fc in &free {
            let mut v = vec![0u64; self.cols];
            v[fc] = 1;
            for (pr, &pc) in pivots.iter().enumerate() {
                v[pc] = field.neg(rref.at(pr, fc));
            }
            basis.push(v);
        }
        basis
    }
}

/// An [n, k] linear code over GF(q) with generator and parity-check matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCode {
    field: PrimeField,
    generator: Mat,
    parity: Mat,
    /// Minimum Hamming distance when known; metadata only.
    pub min_distance: Option<usize>,
}

impl LinearCode {
    pub fn new(
        q: u64,
        generator_rows: &[Vec<u64>],
        parity_rows: &[Vec<u64>],
    ) -> Result<Self, GfssError> {
        let field = PrimeField::new(q)?;
        let generator = Mat::from_rows(&field, generator_rows)?;
        let parity = Mat::from_rows(&field, parity_rows)?;
        if parity.cols() != generator.cols() {
            return Err(GfssError::Dimensions(format!(
                "generator has {} columns but parity check has {}",
                generator.cols(),
                parity.cols()
            )));
        }
        if generator.rows() + parity.rows() != generator.cols() {
            return Err(GfssError::Dimensions(format!(
                "k + (n - k) must equal n: {} + {} != {}",
                generator.rows(),
                parity.rows(),
                generator.cols()
            )));
        }
        Ok(Self {
            field,
            generator,
            parity,
            min_distance: None,
        })
    }

    /// Derive the parity-check matrix as a null-space basis of the generator.
    pub fn from_generator(q: u64, generator_rows: &[Vec<u64>]) -> Result<Self, GfssError> {
        let field = PrimeField::new(q)?;
        let generator = Mat::from_rows(&field, generator_rows)?;
        let parity_rows = generator.nullspace_basis(&field);
        Self::new(q, generator_rows, &parity_rows)
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    /// Code length n.
    pub fn length(&self) -> usize {
        self.generator.cols()
    }

    /// Code dimension k.
    pub fn dimension(&self) -> usize {
        self.generator.rows()
    }

    /// Number of share-holding participants: coordinates 1..n-1.
    pub fn participants(&self) -> usize {
        self.length() - 1
    }

    pub fn generator(&self) -> &Mat {
        &self.generator
    }

    pub fn parity(&self) -> &Mat {
        &self.parity
    }
}

/// Verify H G^T = 0 and both rank conditions.
pub fn lc_validate(code: &LinearCode) -> Result<(), GfssError> {
    let field = code.field();
    let g = code.generator();
    let h = code.parity();
    for hr in 0..h.rows() {
        for gr in 0..g.rows() {
            let mut dot = 0u64;
            for c in 0..g.cols() {
                dot = field.add(dot, field.mul(h.at(hr, c), g.at(gr, c)));
            }
            if dot != 0 {
                return Err(GfssError::NotOrthogonal { row: hr, col: gr });
            }
        }
    }
    let k = g.rows();
    let g_rank = g.rank(field);
    if g_rank != k {
        return Err(GfssError::RankDeficient {
            matrix: "generator",
            expected: k,
            got: g_rank,
        });
    }
    let h_rank = h.rank(field);
    if h_rank != code.length() - k {
        return Err(GfssError::RankDeficient {
            matrix: "parity-check",
            expected: code.length() - k,
            got: h_rank,
        });
    }
    Ok(())
}

/// A dealt codeword: `f_0` is the secret, `f_1..f_{n-1}` are the shares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcDeal {
    pub codeword: Vec<u64>,
}

impl LcDeal {
    pub fn secret(&self) -> u64 {
        self.codeword[0]
    }

    pub fn shares(&self) -> &[u64] {
        &self.codeword[1..]
    }
}

/// Deal a secret: choose `u` uniformly among the q^{k-1} information vectors
/// with `u . g_0 = m` and emit the codeword `u G`.
pub fn lc_deal(code: &LinearCode, secret: u64, seed: u64) -> Result<LcDeal, GfssError> {
    let field = code.field().clone();
    field.check(secret)?;
    let g = code.generator();
    let secret_col = g.column(0);
    let Some(pivot) = secret_col.iter().position(|&v| v != 0) else {
        return Err(GfssError::ZeroSecretColumn);
    };
    let pivot_inv = field.inv(secret_col[pivot])?;

    // particular solution plus a uniform point of the (k-1)-dimensional
    // solution space of u . g_0 = 0
    let mut u = vec![0u64; code.dimension()];
    u[pivot] = field.mul(secret, pivot_inv);
    let mut rng = SplitMix64::new(seed);
    for r in 0..code.dimension() {
        if r == pivot {
            continue;
        }
        // basis vector e_r - (g_0[r] / g_0[pivot]) e_pivot
        let coefficient = field.sample(&mut rng);
        u[r] = field.add(u[r], coefficient);
        let correction = field.mul(coefficient, field.mul(secret_col[r], pivot_inv));
        u[pivot] = field.sub(u[pivot], correction);
    }

    let codeword = (0..code.length())
        .map(|c| {
            u.iter().enumerate().fold(0u64, |acc, (r, &coeff)| {
                field.add(acc, field.mul(coeff, g.at(r, c)))
            })
        })
        .collect();
    Ok(LcDeal { codeword })
}

/// Recovery vector for a participant set, when one exists.
///
/// Solves for `v` in the row space of H with `v_0 = 1` and support inside
/// `{0} ∪ participants`; insufficiency is a result, not an error.
pub fn lc_recovery_vector(
    code: &LinearCode,
    participants: &BTreeSet<usize>,
) -> Result<Option<Vec<u64>>, GfssError> {
    let field = code.field().clone();
    let n = code.length();
    for &p in participants {
        if p == 0 || p >= n {
            return Err(GfssError::BadParticipant(p));
        }
    }
    // v lies in rowspace(H) iff G v = 0. With v_0 = 1 fixed and v zero off
    // the allowed support, solve the k equations over the allowed columns.
    let allowed: Vec<usize> = participants.iter().copied().collect();
    let g = code.generator();
    let k = code.dimension();
    // augmented system: columns = allowed vars, last = rhs (-G[r][0])
    let width = allowed.len() + 1;
    let mut system = Vec::with_capacity(k);
    for r in 0..k {
        let mut row: Vec<u64> = allowed.iter().map(|&c| g.at(r, c)).collect();
        row.push(field.neg(g.at(r, 0)));
        system.push(row);
    }
    let solution = solve_affine(&field, &mut system, width)?;
    match solution {
        None => Ok(None),
        Some(values) => {
            let mut v = vec![0u64; n];
            v[0] = 1;
            for (i, &c) in allowed.iter().enumerate() {
                v[c] = values[i];
            }
            Ok(Some(v))
        }
    }
}

/// Gaussian elimination for an augmented system; free variables take zero.
fn solve_affine(
    field: &PrimeField,
    rows: &mut [Vec<u64>],
    width: usize,
) -> Result<Option<Vec<u64>>, GfssError> {
    let vars = width - 1;
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; vars];
    let mut pivot_row = 0;
    for col in 0..vars {
        let Some(src) = (pivot_row..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(pivot_row, src);
        let inv = field.inv(rows[pivot_row][col])?;
        for entry in rows[pivot_row].iter_mut() {
            *entry = field.mul(*entry, inv);
        }
        for r in 0..rows.len() {
            if r != pivot_row && rows[r][col] != 0 {
                let factor = rows[r][col];
                let pivot = rows[pivot_row].clone();
                for (entry, &p) in rows[r].iter_mut().zip(&pivot) {
                    *entry = field.sub(*entry, field.mul(factor, p));
                }
            }
        }
        pivot_of_col[col] = Some(pivot_row);
        pivot_row += 1;
        if pivot_row == rows.len() {
            break;
        }
    }
    // inconsistent iff a zero row has nonzero rhs
    for row in rows.iter() {
        if row[..vars].iter().all(|&v| v == 0) && row[vars] != 0 {
            return Ok(None);
        }
    }
    let mut solution = vec![0u64; vars];
    for (col, pivot) in pivot_of_col.iter().enumerate() {
        if let Some(r) = pivot {
            solution[col] = rows[*r][vars];
        }
    }
    Ok(Some(solution))
}

/// Recover the secret from shares using a recovery vector:
/// `m = -sum_{j>=1} v_j f_j`, the sign forced by `v . f = 0` with `v_0 = 1`.
pub fn recover_with_vector(code: &LinearCode, v: &[u64], shares: &[u64]) -> u64 {
    let field = code.field();
    let mut acc = 0u64;
    for (j, &share) in shares.iter().enumerate() {
        acc = field.add(acc, field.mul(v[j + 1], share));
    }
    field.neg(acc)
}

/// Minimal access sets and dictatorial participants of a code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessReport {
    /// Inclusion-minimal recoverable participant sets (coordinate indices).
    pub min_sets: BTreeSet<BTreeSet<usize>>,
    /// Participants whose parity column is a scalar multiple of column 0;
    /// they appear in every minimal access set.
    pub dictatorial: Vec<usize>,
}

const ROWSPACE_ENUMERATION_CAP: u128 = 2_000_000;

/// Solve the minimal access structure by exhaustive row-space search.
///
/// Enumerates all q^{n-k} vectors in the row space of H, keeps those with a
/// nonzero first coordinate, normalizes to `v_0 = 1`, collects supports, and
/// purges supersets.
pub fn lc_minimal_access(code: &LinearCode) -> Result<AccessReport, GfssError> {
    let field = code.field().clone();
    let h = code.parity();
    let q = field.q();
    let combos = (q as u128).pow(h.rows() as u32);
    if combos > ROWSPACE_ENUMERATION_CAP {
        return Err(GfssError::InstanceTooLarge(combos));
    }
    let n = code.length();
    let mut supports: Vec<BTreeSet<usize>> = Vec::new();
    let mut coeffs = vec![0u64; h.rows()];
    loop {
        let mut v = vec![0u64; n];
        for (r, &c) in coeffs.iter().enumerate() {
            if c != 0 {
                for (j, entry) in v.iter_mut().enumerate() {
                    *entry = field.add(*entry, field.mul(c, h.at(r, j)));
                }
            }
        }
        if v[0] != 0 {
            let support: BTreeSet<usize> = (1..n).filter(|&j| v[j] != 0).collect();
            supports.push(support);
        }
        let mut position = 0;
        loop {
            if position == coeffs.len() {
                let min_sets = prune_supersets(supports);
                let dictatorial = dictatorial_indices(code);
                return Ok(AccessReport {
                    min_sets,
                    dictatorial,
                });
            }
            coeffs[position] += 1;
            if coeffs[position] < q {
                break;
            }
            coeffs[position] = 0;
            position += 1;
        }
    }
}

fn dictatorial_indices(code: &LinearCode) -> Vec<usize> {
    let field = code.field();
    let h = code.parity();
    let h0 = h.column(0);
    if h0.iter().all(|&v| v == 0) {
        return Vec::new();
    }
    let mut out = Vec::new();
    'cols: for j in 1..code.length() {
        let hj = h.column(j);
        // find the scalar from the first nonzero entry of h0
        let anchor = h0.iter().position(|&v| v != 0).expect("nonzero column");
        if hj[anchor] == 0 {
            continue;
        }
        let lambda = field.mul(hj[anchor], field.inv(h0[anchor]).expect("nonzero"));
        for r in 0..h0.len() {
            if hj[r] != field.mul(lambda, h0[r]) {
                continue 'cols;
            }
        }
        out.push(j);
    }
    out
}

/// Synthesize a code realizing an arbitrary minimal access structure over
/// `channels` participants, together with the owner channel of each share
/// coordinate (coordinate 0 carries the secret and has no owner).
///
/// Each access set contributes a run of coordinates that sum to the secret:
/// all but the last are fresh uniform randomness, the last is the secret
/// minus their total. A channel appearing in several access sets owns several
/// coordinates.
pub fn access_structure_code(
    q: u64,
    channels: usize,
    min_sets: &[BTreeSet<usize>],
) -> Result<(LinearCode, Vec<Option<usize>>), GfssError> {
    let field = PrimeField::new(q)?;
    if min_sets.is_empty() {
        return Err(GfssError::Dimensions("no access sets".into()));
    }
    for set in min_sets {
        if set.is_empty() {
            return Err(GfssError::Dimensions("empty access set".into()));
        }
        for &c in set {
            if c >= channels {
                return Err(GfssError::BadParticipant(c));
            }
        }
    }
    let dimension = 1 + min_sets.iter().map(|s| s.len() - 1).sum::<usize>();
    let mut columns: Vec<Vec<u64>> = Vec::new();
    let mut owners: Vec<Option<usize>> = Vec::new();

    let mut secret_col = vec![0u64; dimension];
    secret_col[0] = 1;
    columns.push(secret_col);
    owners.push(None);

    let mut next_random = 1usize;
    for set in min_sets {
        let members: Vec<usize> = set.iter().copied().collect();
        let mut randoms = Vec::new();
        for &channel in &members[..members.len() - 1] {
            let mut col = vec![0u64; dimension];
            col[next_random] = 1;
            randoms.push(next_random);
            next_random += 1;
            columns.push(col);
            owners.push(Some(channel));
        }
        let mut last = vec![0u64; dimension];
        last[0] = 1;
        for &r in &randoms {
            last[r] = field.neg(1);
        }
        columns.push(last);
        owners.push(Some(members[members.len() - 1]));
    }

    let n = columns.len();
    let generator_rows: Vec<Vec<u64>> = (0..dimension)
        .map(|r| (0..n).map(|c| columns[c][r]).collect())
        .collect();
    let code = LinearCode::from_generator(q, &generator_rows)?;
    Ok((code, owners))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CodeDoc {
    q: u64,
    #[serde(rename = "G")]
    generator: Vec<Vec<u64>>,
    #[serde(rename = "H")]
    parity: Vec<Vec<u64>>,
    #[serde(default)]
    d: Option<usize>,
}

/// Parse a UTF-8 JSON code description `{q, G, H}` and validate it.
pub fn parse_code_document(text: &str) -> Result<LinearCode, GfssError> {
    let doc: CodeDoc =
        serde_json::from_str(text).map_err(|e| GfssError::BadCodeDocument(e.to_string()))?;
    let mut code = LinearCode::new(doc.q, &doc.generator, &doc.parity)?;
    code.min_distance = doc.d;
    lc_validate(&code)?;
    Ok(code)
}
