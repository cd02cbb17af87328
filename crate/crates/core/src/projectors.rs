//! Projector algebra: quantum properties, sample-space decompositions,
//! and the frameworks they generate.
//!
//! A *PDI* (projective decomposition of the identity) is the quantum
//! counterpart of a sample space: mutually orthogonal projectors summing
//! to the identity. A *framework* is the Boolean event algebra a PDI
//! generates, namely all subset-sums of its members. Conjunction of two
//! properties is only defined when their projectors commute; the
//! [`ProjectorError::MeaninglessConjunction`] error is the single
//! enforcement point for that rule, and every higher layer funnels
//! incompatible-property requests into it.

use crate::numerics::{ComplexMatrix, ComplexScalar, NumericsError, Tolerance};
use num_complex::Complex64;
use thiserror::Error;

/// Upper bound on PDI member count for subset-sum searches.
pub const MAX_FRAMEWORK_MEMBERS: usize = 16;

/// Errors raised by projector and framework operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectorError {
    /// The matrix fails the Hermitian-idempotent test.
    #[error("matrix is not a projector: deviation {deviation:.3e} from P = P\u{2020} = P\u{b2}")]
    NotAProjector { deviation: f64 },
    /// A ket had the wrong norm for projector or state construction.
    #[error("ket is not normalized: norm {norm}")]
    NotNormalized { norm: f64 },
    /// Conjunction requested for non-commuting projectors.
    #[error("conjunction of {lhs} and {rhs} is meaningless: projectors do not commute (max commutator entry {max_commutator:.3e})")]
    MeaninglessConjunction {
        lhs: String,
        rhs: String,
        max_commutator: f64,
    },
    /// PDI members do not sum to the identity.
    #[error("PDI is incomplete: members sum to within {deviation:.3e} of the identity, exceeding tolerance")]
    IncompletePdi { deviation: f64 },
    /// Two PDI members fail mutual orthogonality.
    #[error("PDI members {i} and {j} are not orthogonal: max product entry {deviation:.3e}")]
    NonOrthogonal { i: usize, j: usize, deviation: f64 },
    /// A PDI member fails the projector test.
    #[error("PDI member {index} is not a projector: deviation {deviation:.3e}")]
    MemberNotAProjector { index: usize, deviation: f64 },
    /// A PDI needs at least one member.
    #[error("PDI must have at least one member")]
    EmptyPdi,
    /// Member and label counts must agree.
    #[error("PDI has {members} members but {labels} labels")]
    LabelCountMismatch { members: usize, labels: usize },
    /// Members of one PDI must share a dimension.
    #[error("PDI member {index} is {got}-dimensional, expected {expected}")]
    MixedDimensions {
        index: usize,
        got: usize,
        expected: usize,
    },
    /// Combinatorial guard for subset-sum searches.
    #[error("framework has {count} members, subset search supports at most {max}")]
    TooManyMembers { count: usize, max: usize },
    /// Underlying matrix arithmetic failed.
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Deviation of `m` from the projector identities P = P† and P = P².
fn projector_deviation(m: &ComplexMatrix) -> Result<f64, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare {
            op: "is_projector",
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let herm = m.max_abs_diff(&m.adjoint())?;
    let idem = m.mat_mul(m)?.max_abs_diff(m)?;
    Ok(herm.max(idem))
}

/// True when `m` is Hermitian and idempotent within `tol`.
pub fn is_projector(m: &ComplexMatrix, tol: Tolerance) -> Result<bool, ProjectorError> {
    Ok(projector_deviation(m)? <= tol.eps())
}

/// An orthogonal projector, validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: ComplexMatrix,
}

impl Projector {
    /// Wraps a matrix after checking the projector identities.
    pub fn new(matrix: ComplexMatrix, tol: Tolerance) -> Result<Self, ProjectorError> {
        let deviation = projector_deviation(&matrix)?;
        if deviation > tol.eps() {
            return Err(ProjectorError::NotAProjector { deviation });
        }
        Ok(Projector { matrix })
    }

    /// Identity projector (the property that is always true).
    pub fn identity(dim: usize) -> Self {
        Projector {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    /// Zero projector (the property that is always false).
    pub fn zero(dim: usize) -> Self {
        Projector {
            matrix: ComplexMatrix::zeros(dim, dim),
        }
    }

    /// Diagonal indicator projector over the listed basis indices.
    pub fn basis_subset(dim: usize, indices: &[usize]) -> Result<Self, NumericsError> {
        let mut m = ComplexMatrix::zeros(dim, dim);
        for &i in indices {
            if i >= dim {
                return Err(NumericsError::OutOfBounds {
                    row: i,
                    col: i,
                    rows: dim,
                    cols: dim,
                });
            }
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        Ok(Projector { matrix: m })
    }

    /// The underlying matrix.
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Hilbert-space dimension the projector acts on.
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Complementary projector I - P.
    pub fn complement(&self) -> Projector {
        let id = ComplexMatrix::identity(self.dim());
        Projector {
            matrix: id.sub(&self.matrix).expect("same shape"),
        }
    }

    /// Rank, read off the trace (exact for projectors).
    pub fn rank(&self) -> usize {
        self.matrix
            .trace()
            .expect("projector is square")
            .re
            .round() as usize
    }

    /// Sum of projectors, assumed orthogonal by the caller; not validated.
    pub(crate) fn unchecked_sum(terms: &[&Projector]) -> Projector {
        let dim = terms[0].dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for t in terms {
            acc = acc.add(&t.matrix).expect("same shape");
        }
        Projector { matrix: acc }
    }

    /// Kronecker product of projectors (a projector on the joint space).
    pub fn kron(&self, other: &Projector) -> Projector {
        Projector {
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    /// True when `self` projects onto a subspace of `other`'s range,
    /// i.e. `other * self = self`.
    pub fn is_within(&self, other: &Projector, tol: Tolerance) -> Result<bool, ProjectorError> {
        let prod = other.matrix.mat_mul(&self.matrix)?;
        Ok(prod.max_abs_diff(&self.matrix)? <= tol.eps())
    }

    /// True when the projector is zero within `tol`.
    pub fn is_zero(&self, tol: Tolerance) -> bool {
        self.matrix.max_abs() <= tol.eps()
    }
}

/// A normalized state vector stored as a column matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amplitudes: ComplexMatrix,
}

impl Ket {
    /// Wraps a column matrix as a state vector.
    pub fn new(amplitudes: ComplexMatrix) -> Result<Self, NumericsError> {
        if amplitudes.cols() != 1 {
            return Err(NumericsError::DimensionMismatch {
                op: "ket",
                lhs_rows: amplitudes.rows(),
                lhs_cols: amplitudes.cols(),
                rhs_rows: amplitudes.rows(),
                rhs_cols: 1,
            });
        }
        Ok(Ket { amplitudes })
    }

    /// Builds a ket from a list of amplitudes.
    pub fn from_amplitudes(amplitudes: Vec<ComplexScalar>) -> Result<Self, NumericsError> {
        Ok(Ket {
            amplitudes: ComplexMatrix::column(amplitudes)?,
        })
    }

    /// Standard basis state in the given dimension.
    pub fn basis(dim: usize, index: usize) -> Result<Self, NumericsError> {
        Ok(Ket {
            amplitudes: ComplexMatrix::basis_column(dim, index)?,
        })
    }

    /// The amplitude column.
    pub fn amplitudes(&self) -> &ComplexMatrix {
        &self.amplitudes
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.amplitudes.rows()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Tensor product with another ket.
    pub fn kron(&self, other: &Ket) -> Ket {
        Ket {
            amplitudes: self.amplitudes.kron(&other.amplitudes),
        }
    }

    /// Rank-one projector |psi><psi|; requires unit norm within `tol`.
    pub fn projector(&self, tol: Tolerance) -> Result<Projector, ProjectorError> {
        let norm = self.norm();
        if (norm - 1.0).abs() > tol.eps() {
            return Err(ProjectorError::NotNormalized { norm });
        }
        let matrix = self.amplitudes.mat_mul(&self.amplitudes.adjoint())?;
        Ok(Projector { matrix })
    }
}

/// Rank-one projector onto a normalized ket.
pub fn projector_from_ket(psi: &Ket, tol: Tolerance) -> Result<Projector, ProjectorError> {
    psi.projector(tol)
}

/// Largest commutator entry |[P, Q]| between two projectors.
pub fn commutator_norm(p: &Projector, q: &Projector) -> Result<f64, NumericsError> {
    let pq = p.matrix.mat_mul(&q.matrix)?;
    let qp = q.matrix.mat_mul(&p.matrix)?;
    pq.max_abs_diff(&qp)
}

/// True when the projectors commute within `tol` (max-entry norm).
pub fn commutes(p: &Projector, q: &Projector, tol: Tolerance) -> Result<bool, ProjectorError> {
    Ok(commutator_norm(p, q)? <= tol.eps())
}

/// Conjunction P AND Q of two commuting projectors, namely their product.
///
/// For non-commuting projectors the conjunction is not a property at all;
/// the error names both operands so reports can explain which pair of
/// properties was combined illegally.
pub fn conjunction(p: &Projector, q: &Projector, tol: Tolerance) -> Result<Projector, ProjectorError> {
    conjunction_labeled(p, "first operand", q, "second operand", tol)
}

/// [`conjunction`] with caller-supplied names for error reporting.
pub fn conjunction_labeled(
    p: &Projector,
    p_name: &str,
    q: &Projector,
    q_name: &str,
    tol: Tolerance,
) -> Result<Projector, ProjectorError> {
    let max_commutator = commutator_norm(p, q)?;
    if max_commutator > tol.eps() {
        return Err(ProjectorError::MeaninglessConjunction {
            lhs: p_name.to_string(),
            rhs: q_name.to_string(),
            max_commutator,
        });
    }
    let matrix = p.matrix.mat_mul(&q.matrix)?;
    // The product of commuting projectors is again a projector; rounding
    // can still push it slightly off, so the result is re-validated.
    Projector::new(matrix, tol)
}

/// Checks that a list of projectors forms a PDI: mutually orthogonal
/// members summing to the identity.
pub fn validate_pdi(candidate: &[Projector], tol: Tolerance) -> Result<(), ProjectorError> {
    if candidate.is_empty() {
        return Err(ProjectorError::EmptyPdi);
    }
    let dim = candidate[0].dim();
    for (index, p) in candidate.iter().enumerate() {
        if p.dim() != dim {
            return Err(ProjectorError::MixedDimensions {
                index,
                got: p.dim(),
                expected: dim,
            });
        }
        let deviation = projector_deviation(&p.matrix)?;
        if deviation > tol.eps() {
            return Err(ProjectorError::MemberNotAProjector { index, deviation });
        }
    }
    for i in 0..candidate.len() {
        for j in (i + 1)..candidate.len() {
            let prod = candidate[i].matrix.mat_mul(&candidate[j].matrix)?;
            let deviation = prod.max_abs();
            if deviation > tol.eps() {
                return Err(ProjectorError::NonOrthogonal { i, j, deviation });
            }
        }
    }
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for p in candidate {
        sum = sum.add(&p.matrix)?;
    }
    let deviation = sum.max_abs_diff(&ComplexMatrix::identity(dim))?;
    if deviation > tol.eps() {
        return Err(ProjectorError::IncompletePdi { deviation });
    }
    Ok(())
}

/// Projective decomposition of the identity with human-readable member
/// labels, so downstream reports can say which outcome occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct Pdi {
    members: Vec<Projector>,
    labels: Vec<String>,
}

impl Pdi {
    /// Validates and wraps members with their labels.
    pub fn new(
        members: Vec<Projector>,
        labels: Vec<String>,
        tol: Tolerance,
    ) -> Result<Self, ProjectorError> {
        if members.len() != labels.len() {
            return Err(ProjectorError::LabelCountMismatch {
                members: members.len(),
                labels: labels.len(),
            });
        }
        validate_pdi(&members, tol)?;
        Ok(Pdi { members, labels })
    }

    /// The one-member PDI {I}, which asks no question at all.
    pub fn trivial(dim: usize) -> Self {
        Pdi {
            members: vec![Projector::identity(dim)],
            labels: vec!["any".to_string()],
        }
    }

    /// Number of members.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// True when the PDI has no members (never holds for validated PDIs).
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    /// Member projector by index.
    pub fn member(&self, index: usize) -> &Projector {
        &self.members[index]
    }

    /// Member label by index.
    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    /// All members in order.
    pub fn members(&self) -> &[Projector] {
        &self.members
    }

    /// All labels in order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Pairs of (label, member) in order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Projector)> {
        self.labels
            .iter()
            .map(String::as_str)
            .zip(self.members.iter())
    }
}

/// The Boolean event algebra generated by a PDI: every subset-sum of its
/// members is an event, and nothing else is.
#[derive(Debug, Clone, PartialEq)]
pub struct Framework {
    pdi: Pdi,
}

impl Framework {
    /// Wraps a validated PDI.
    pub fn from_pdi(pdi: Pdi) -> Self {
        Framework { pdi }
    }

    /// The underlying PDI.
    pub fn pdi(&self) -> &Pdi {
        &self.pdi
    }

    /// Builds the finest common framework of a set of commuting
    /// projectors: all nonzero products of each input or its complement.
    ///
    /// For inputs P0..P(k-1), candidate members are indexed by bit
    /// patterns, bit i choosing Pi (set) or I - Pi (clear); patterns run
    /// in descending binary order and zero products are dropped.
    pub fn generate(commuting: &[Projector], tol: Tolerance) -> Result<Framework, ProjectorError> {
        if commuting.is_empty() {
            return Err(ProjectorError::EmptyPdi);
        }
        if commuting.len() > MAX_FRAMEWORK_MEMBERS {
            return Err(ProjectorError::TooManyMembers {
                count: commuting.len(),
                max: MAX_FRAMEWORK_MEMBERS,
            });
        }
        let dim = commuting[0].dim();
        for (i, p) in commuting.iter().enumerate() {
            if p.dim() != dim {
                return Err(ProjectorError::MixedDimensions {
                    index: i,
                    got: p.dim(),
                    expected: dim,
                });
            }
            let deviation = projector_deviation(&p.matrix)?;
            if deviation > tol.eps() {
                return Err(ProjectorError::MemberNotAProjector { index: i, deviation });
            }
        }
        for i in 0..commuting.len() {
            for j in (i + 1)..commuting.len() {
                let max_commutator = commutator_norm(&commuting[i], &commuting[j])?;
                if max_commutator > tol.eps() {
                    return Err(ProjectorError::MeaninglessConjunction {
                        lhs: format!("input projector {i}"),
                        rhs: format!("input projector {j}"),
                        max_commutator,
                    });
                }
            }
        }
        let k = commuting.len();
        let mut members = Vec::new();
        let mut labels = Vec::new();
        for pattern in (0..(1u32 << k)).rev() {
            let mut prod = ComplexMatrix::identity(dim);
            let mut label = String::with_capacity(k);
            for (i, p) in commuting.iter().enumerate() {
                let chosen = pattern & (1 << (k - 1 - i)) != 0;
                let factor = if chosen {
                    p.matrix.clone()
                } else {
                    p.complement().matrix
                };
                prod = prod.mat_mul(&factor)?;
                label.push(if chosen { '1' } else { '0' });
            }
            if prod.max_abs() <= tol.eps() {
                continue;
            }
            members.push(Projector::new(prod, tol)?);
            labels.push(label);
        }
        let pdi = Pdi::new(members, labels, tol)?;
        Ok(Framework { pdi })
    }

    /// True when `p` lies in the event algebra, i.e. equals a subset-sum
    /// of PDI members within `tol`. Exhaustive subset search, guarded at
    /// [`MAX_FRAMEWORK_MEMBERS`] members.
    pub fn contains(&self, p: &Projector, tol: Tolerance) -> Result<bool, ProjectorError> {
        Ok(self.member_subset(p, tol)?.is_some())
    }

    /// The subset of member indices whose sum matches `p`, if any.
    pub fn member_subset(
        &self,
        p: &Projector,
        tol: Tolerance,
    ) -> Result<Option<Vec<usize>>, ProjectorError> {
        let k = self.pdi.len();
        if k > MAX_FRAMEWORK_MEMBERS {
            return Err(ProjectorError::TooManyMembers {
                count: k,
                max: MAX_FRAMEWORK_MEMBERS,
            });
        }
        if p.dim() != self.pdi.dim() {
            return Err(ProjectorError::MixedDimensions {
                index: 0,
                got: p.dim(),
                expected: self.pdi.dim(),
            });
        }
        let dim = self.pdi.dim();
        for mask in 0..(1u32 << k) {
            let mut sum = ComplexMatrix::zeros(dim, dim);
            for i in 0..k {
                if mask & (1 << i) != 0 {
                    sum = sum.add(self.pdi.member(i).matrix())?;
                }
            }
            if sum.max_abs_diff(p.matrix())? <= tol.eps() {
                let subset = (0..k).filter(|i| mask & (1 << i) != 0).collect();
                return Ok(Some(subset));
            }
        }
        Ok(None)
    }

    /// True when the two frameworks generate the same event algebra.
    pub fn equivalent(&self, other: &Framework, tol: Tolerance) -> Result<bool, ProjectorError> {
        for m in self.pdi.members() {
            if !other.contains(m, tol)? {
                return Ok(false);
            }
        }
        for m in other.pdi.members() {
            if !self.contains(m, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// True when some member of `f` fails to commute with some member of `g`,
/// so no single framework can host events from both.
pub fn incompatible(f: &Framework, g: &Framework, tol: Tolerance) -> Result<bool, ProjectorError> {
    for p in f.pdi().members() {
        for q in g.pdi().members() {
            if !commutes(p, q, tol)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    /// |z+> and |x+> on one qubit.
    fn z_plus() -> Ket {
        Ket::from_amplitudes(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap()
    }

    fn x_plus() -> Ket {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Ket::from_amplitudes(vec![c(r, 0.0), c(r, 0.0)]).unwrap()
    }

    #[test]
    fn projector_from_uniform_ket_is_half_ones() {
        let p = projector_from_ket(&x_plus(), tol()).unwrap();
        let expected = ComplexMatrix::from_rows(&[
            vec![c(0.5, 0.0), c(0.5, 0.0)],
            vec![c(0.5, 0.0), c(0.5, 0.0)],
        ])
        .unwrap();
        assert!(p.matrix().approx_eq(&expected, tol()).unwrap());
    }

    #[test]
    fn projector_from_circular_ket_has_imaginary_off_diagonal() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let psi = Ket::from_amplitudes(vec![c(r, 0.0), c(0.0, r)]).unwrap();
        let p = projector_from_ket(&psi, tol()).unwrap();
        let expected = ComplexMatrix::from_rows(&[
            vec![c(0.5, 0.0), c(0.0, -0.5)],
            vec![c(0.0, 0.5), c(0.5, 0.0)],
        ])
        .unwrap();
        assert!(p.matrix().approx_eq(&expected, tol()).unwrap());
    }

    #[test]
    fn projector_from_ket_rejects_unnormalized() {
        let psi = Ket::from_amplitudes(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let err = projector_from_ket(&psi, tol()).unwrap_err();
        match err {
            ProjectorError::NotNormalized { norm } => {
                assert!((norm - std::f64::consts::SQRT_2).abs() < 1e-12);
            }
            other => panic!("expected NotNormalized, got {other:?}"),
        }
    }

    #[test]
    fn is_projector_accepts_projectors_and_rejects_others() {
        let p = projector_from_ket(&z_plus(), tol()).unwrap();
        assert!(is_projector(p.matrix(), tol()).unwrap());
        assert!(is_projector(&ComplexMatrix::identity(3), tol()).unwrap());
        assert!(is_projector(&ComplexMatrix::zeros(2, 2), tol()).unwrap());
        // Hermitian but not idempotent.
        let m = ComplexMatrix::diagonal(&[c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(!is_projector(&m, tol()).unwrap());
        // Idempotent but not Hermitian.
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        assert!(!is_projector(&m, tol()).unwrap());
        assert!(is_projector(&ComplexMatrix::zeros(2, 3), tol()).is_err());
    }

    #[test]
    fn z_and_x_projectors_do_not_commute() {
        let pz = projector_from_ket(&z_plus(), tol()).unwrap();
        let px = projector_from_ket(&x_plus(), tol()).unwrap();
        assert!(!commutes(&pz, &px, tol()).unwrap());
        let err = conjunction(&pz, &px, tol()).unwrap_err();
        match err {
            ProjectorError::MeaninglessConjunction { max_commutator, .. } => {
                assert!((max_commutator - 0.5).abs() < 1e-12);
            }
            other => panic!("expected MeaninglessConjunction, got {other:?}"),
        }
    }

    #[test]
    fn conjunction_of_nested_projectors_is_the_smaller() {
        // In d = 3, R = [0] + [1] and [0] commute; R AND [0] = [0].
        let r = Projector::basis_subset(3, &[0, 1]).unwrap();
        let p0 = Projector::basis_subset(3, &[0]).unwrap();
        let conj = conjunction(&r, &p0, tol()).unwrap();
        assert!(conj.matrix().approx_eq(p0.matrix(), tol()).unwrap());
    }

    #[test]
    fn validate_pdi_enforces_all_three_axioms() {
        let p0 = Projector::basis_subset(2, &[0]).unwrap();
        let p1 = Projector::basis_subset(2, &[1]).unwrap();
        assert!(validate_pdi(&[p0.clone(), p1.clone()], tol()).is_ok());

        // Incomplete: members sum short of the identity.
        let err = validate_pdi(std::slice::from_ref(&p0), tol()).unwrap_err();
        assert!(matches!(err, ProjectorError::IncompletePdi { .. }));

        // Non-orthogonal overlapping members.
        let px = x_plus().projector(tol()).unwrap();
        let err = validate_pdi(&[p0.clone(), px], tol()).unwrap_err();
        assert!(matches!(err, ProjectorError::NonOrthogonal { i: 0, j: 1, .. }));

        // A non-projector member is reported by index.
        let half = Projector {
            matrix: ComplexMatrix::diagonal(&[c(0.5, 0.0), c(0.5, 0.0)]).unwrap(),
        };
        let err = validate_pdi(&[p0, half], tol()).unwrap_err();
        assert!(matches!(
            err,
            ProjectorError::MemberNotAProjector { index: 1, .. }
        ));

        assert!(matches!(
            validate_pdi(&[], tol()).unwrap_err(),
            ProjectorError::EmptyPdi
        ));
    }

    #[test]
    fn generate_framework_from_one_projector_gives_it_and_complement() {
        // R = [0] + [1] in d = 3 generates {R, I - R}.
        let r = Projector::basis_subset(3, &[0, 1]).unwrap();
        let fw = Framework::generate(std::slice::from_ref(&r), tol()).unwrap();
        assert_eq!(fw.pdi().len(), 2);
        assert!(fw.pdi().member(0).matrix().approx_eq(r.matrix(), tol()).unwrap());
        assert!(fw
            .pdi()
            .member(1)
            .matrix()
            .approx_eq(r.complement().matrix(), tol())
            .unwrap());
    }

    #[test]
    fn generate_framework_drops_zero_products() {
        // {[0], [1]} in d = 3 refines to {[0], [1], I - R}: the pattern
        // choosing both [0] and [1] multiplies to zero and is dropped.
        let p0 = Projector::basis_subset(3, &[0]).unwrap();
        let p1 = Projector::basis_subset(3, &[1]).unwrap();
        let fw = Framework::generate(&[p0.clone(), p1.clone()], tol()).unwrap();
        assert_eq!(fw.pdi().len(), 3);
        assert!(fw.pdi().member(0).matrix().approx_eq(p0.matrix(), tol()).unwrap());
        assert!(fw.pdi().member(1).matrix().approx_eq(p1.matrix(), tol()).unwrap());
        let rest = Projector::basis_subset(3, &[2]).unwrap();
        assert!(fw.pdi().member(2).matrix().approx_eq(rest.matrix(), tol()).unwrap());
    }

    #[test]
    fn generate_framework_rejects_non_commuting_inputs() {
        let pz = projector_from_ket(&z_plus(), tol()).unwrap();
        let px = projector_from_ket(&x_plus(), tol()).unwrap();
        let err = Framework::generate(&[pz, px], tol()).unwrap_err();
        assert!(matches!(err, ProjectorError::MeaninglessConjunction { .. }));
    }

    #[test]
    fn framework_contains_subset_sums_only() {
        let p0 = Projector::basis_subset(3, &[0]).unwrap();
        let p1 = Projector::basis_subset(3, &[1]).unwrap();
        let fw = Framework::generate(&[p0, p1], tol()).unwrap();
        let r = Projector::basis_subset(3, &[0, 1]).unwrap();
        assert!(fw.contains(&r, tol()).unwrap());
        assert!(fw.contains(&Projector::identity(3), tol()).unwrap());
        assert!(fw.contains(&Projector::zero(3), tol()).unwrap());
        // A rank-one projector across basis states is not in the algebra.
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let across = Ket::from_amplitudes(vec![c(r2, 0.0), c(r2, 0.0), c(0.0, 0.0)])
            .unwrap()
            .projector(tol())
            .unwrap();
        assert!(!fw.contains(&across, tol()).unwrap());
    }

    #[test]
    fn coarse_and_fine_diagonal_frameworks_are_compatible() {
        let r = Projector::basis_subset(3, &[0, 1]).unwrap();
        let coarse = Framework::generate(std::slice::from_ref(&r), tol()).unwrap();
        let p0 = Projector::basis_subset(3, &[0]).unwrap();
        let p1 = Projector::basis_subset(3, &[1]).unwrap();
        let fine = Framework::generate(&[p0, p1], tol()).unwrap();
        assert!(!incompatible(&coarse, &fine, tol()).unwrap());
        // The coarse algebra sits inside the fine one but not conversely.
        assert!(!coarse.equivalent(&fine, tol()).unwrap());
    }

    #[test]
    fn z_and_x_frameworks_are_incompatible() {
        let pz = projector_from_ket(&z_plus(), tol()).unwrap();
        let px = projector_from_ket(&x_plus(), tol()).unwrap();
        let fz = Framework::generate(std::slice::from_ref(&pz), tol()).unwrap();
        let fx = Framework::generate(std::slice::from_ref(&px), tol()).unwrap();
        assert!(incompatible(&fz, &fx, tol()).unwrap());
    }

    #[test]
    fn pdi_carries_labels() {
        let p0 = Projector::basis_subset(2, &[0]).unwrap();
        let p1 = Projector::basis_subset(2, &[1]).unwrap();
        let pdi = Pdi::new(
            vec![p0, p1],
            vec!["Sz=+1/2".to_string(), "Sz=-1/2".to_string()],
            tol(),
        )
        .unwrap();
        assert_eq!(pdi.label(0), "Sz=+1/2");
        assert_eq!(pdi.label(1), "Sz=-1/2");
        let err = Pdi::new(
            vec![Projector::identity(2)],
            vec!["a".to_string(), "b".to_string()],
            tol(),
        )
        .unwrap_err();
        assert!(matches!(err, ProjectorError::LabelCountMismatch { .. }));
    }

    #[test]
    fn member_subset_respects_the_combinatorial_guard() {
        let members: Vec<Projector> = (0..17)
            .map(|i| Projector::basis_subset(17, &[i]).unwrap())
            .collect();
        let labels = (0..17).map(|i| i.to_string()).collect();
        let pdi = Pdi::new(members, labels, tol()).unwrap();
        let fw = Framework::from_pdi(pdi);
        let err = fw.contains(&Projector::identity(17), tol()).unwrap_err();
        assert!(matches!(
            err,
            ProjectorError::TooManyMembers { count: 17, max: 16 }
        ));
    }
}
