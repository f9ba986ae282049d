#pragma once

// Matrix model of SU(n,1) acting on C^{n+1}: the forms Q and Q̂, the block
// structure of su(n,1; Q̂), the geodesic and horocycle subgroups, the
// transversal Σ = exp(D_ε₀) and the identities behind the product form of the
// geodesic flow near PSU(1,1). Index conventions are 0-based; the last two
// coordinates carry the SU(1,1) block.

#include "phsurgery/errors.hpp"
#include "phsurgery/sampling.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace phsurgery::homogeneous {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

enum class FormKind { Q, Qhat };

CMatrix J(int n);      ///< diag(1, …, 1, −1)
CMatrix J_hat(int n);  ///< diag(Id, J₀)
CMatrix J0();
CMatrix T0();
CMatrix T(int n);      ///< diag(Id, T₀), with T̄ᵀJT = Ĵ
CMatrix form_matrix(int n, FormKind kind);

struct Signature {
  int positive = 0;
  int negative = 0;
  int zero = 0;
};
Signature signature(const CMatrix& h);

struct HermitianForm {
  FormKind kind = FormKind::Qhat;
  CMatrix matrix;

  /// Builds J or Ĵ and checks it is Hermitian of signature (n, 1).
  static HermitianForm make(int n, FormKind kind);
  int n() const { return static_cast<int>(matrix.rows()) - 1; }
};

/// Matrix exponential (Eigen's Padé scaling-and-squaring).
CMatrix expm(const CMatrix& a);
/// Scaled Taylor series with `terms` terms; the cross-check oracle.
CMatrix expm_taylor(const CMatrix& a, int terms = 20);

// ---------------------------------------------------------------------------
// Algebra

/// max(|Tr B|, ‖B̄ᵀH + HB‖) for the form H of `kind`.
double su_residual(const CMatrix& b, FormKind kind = FormKind::Qhat);
bool in_su(const CMatrix& b, FormKind kind = FormKind::Qhat, double tol = 1e-12);

struct Blocks {
  CMatrix A;  ///< (n−1)×(n−1), in u(n−1)
  CMatrix v;  ///< (n−1)×2 column pair (v₁, v₂)
  CMatrix D;  ///< 2×2 lower block [[a, ib], [ic, −ā]]
  Complex a;
  double b = 0.0;
  double c = 0.0;
};

/// Splits B into (A, v, D) for the Q̂ block form; a, b, c are read off D.
Blocks block_decompose(const CMatrix& b);
/// Inverse of block_decompose from (A, v, a, b, c): the lower-left block is
/// −J₀v̄ᵀ.
CMatrix block_compose(const CMatrix& a_block, const CMatrix& v, Complex a, double b, double c);

/// Random element of su(n,1; Q̂) with entries of size ~scale.
CMatrix random_su(int n, sampling::Rng& rng, double scale = 0.3);

// ---------------------------------------------------------------------------
// Group

/// max(|det g − 1|, ‖ḡᵀHg − H‖).
double group_residual(const CMatrix& g, FormKind kind = FormKind::Qhat);
bool in_group(const CMatrix& g, FormKind kind = FormKind::Qhat, double tol = 1e-10);

struct ConjugationReport {
  std::size_t samples = 0;
  double t_relation = 0.0;  ///< ‖T̄ᵀJT − Ĵ‖
  double t0_entries = 0.0;  ///< deviation of T₀ from (1/√2)[[1,1],[−1,1]]
  double forward = 0.0;     ///< max group_residual(TĝT⁻¹, Q) over ĝ ∈ SU(n,1;Q̂)
  double backward = 0.0;    ///< max group_residual(T⁻¹gT, Q̂) over those g
  double max() const;
};
/// Samples ĝ = exp(B̂) for random B̂ ∈ su(n,1; Q̂) and checks the conjugation.
ConjugationReport conjugate_forms_check(int n, std::size_t samples = 100, std::uint64_t seed = 0);

CMatrix geodesic(int n, double t);
enum class Horocycle { stable, unstable };
CMatrix horocycle(int n, Horocycle kind, double t);
/// Generator of d_t: diag(0, …, 0, 1, −1).
CMatrix geodesic_generator(int n);

/// A(v₁, v₂) = [[0, v], [−J₀v̄ᵀ, 0]].
CMatrix transversal(const CVector& v1, const CVector& v2);
/// σ(v₁, v₂) = exp A(v₁, v₂); DomainError when ‖(v₁, v₂)‖ ≥ eps0.
CMatrix sigma(const CVector& v1, const CVector& v2, double eps0 = std::numeric_limits<double>::infinity());

/// ‖d_tσ(v₁,v₂)d_t⁻¹ − σ(e^{−t}v₁, e^t v₂)‖.
double conj_identity_check(const CVector& v1, const CVector& v2, double t);
/// Embeds a 2×2 SU(1,1; J₀) matrix as the lower-right block.
CMatrix embed_su11(int n, const CMatrix& u);
/// ‖d_tσ(v₁,v₂)u − σ(e^{−t}v₁, e^t v₂)d_tu‖ for u given as the 2×2 block.
double product_form_check(const CVector& v1, const CVector& v2, const CMatrix& u, double t);

/// Rates at which the v₁, v₂ parameters of d_tA(v)d_t⁻¹ scale.
struct TransverseRates {
  double stable = 0.0;    ///< ‖v₁(t)‖/‖v₁‖, expected e^{−t}
  double unstable = 0.0;  ///< ‖v₂(t)‖/‖v₂‖, expected e^{t}
};
TransverseRates transverse_rates(const CVector& v1, const CVector& v2, double t);

// ---------------------------------------------------------------------------
// W(n−1) and the parametrization

/// diag(A, λ̄, λ̄); DomainError unless A is unitary and λ² = det A.
CMatrix w_element(const CMatrix& a, Complex lambda, double tol = 1e-10);
bool in_w(const CMatrix& g, double tol = 1e-9);
CMatrix random_unitary(int m, sampling::Rng& rng);
/// Random W(n−1) element; `other_root` picks −λ.
CMatrix random_w(int n, sampling::Rng& rng, bool other_root = false);
/// Random element of SU(1,1; J₀) as a 2×2 matrix (exp of a random algebra element).
CMatrix random_su11(sampling::Rng& rng, double scale = 0.5);

/// u with w·u = Id inside the embedded SU(1,1) if one exists.
std::optional<CMatrix> psu_partner(const CMatrix& w, double tol = 1e-9);
/// True when u is ±Id as a 2×2 block, i.e. the identity of PSU(1,1).
bool is_psu_identity(const CMatrix& u, double tol = 1e-9);

/// Equality in W(n−1)\SU(n,1): g₁g₂⁻¹ ∈ W(n−1).
bool coset_equal(const CMatrix& g1, const CMatrix& g2, double tol = 1e-9);

struct LocalDiffeoReport {
  int n = 0;
  int dim_w = 0;
  int dim_sigma = 0;
  int dim_su11 = 0;
  int expected = 0;  ///< dim su(n,1) = n² + 2n
  int rank = 0;
  double min_singular = 0.0;
  bool summands_independent = false;
  std::vector<double> null_vector;  ///< filled on rank deficiency
  bool full_rank() const { return rank == expected; }
};
/// Rank of w(n−1) ⊕ T_idΣ ⊕ su(1,1) → su(n,1) (sum of inclusions) as a real
/// linear map.
LocalDiffeoReport local_diffeo_check(int n);

/// Real basis of each summand, as matrices.
std::vector<CMatrix> basis_w(int n);
std::vector<CMatrix> basis_sigma(int n);
std::vector<CMatrix> basis_su11(int n);

// ---------------------------------------------------------------------------
// Suite

struct HomogeneousReport {
  int n = 0;
  std::size_t samples = 0;
  double algebra = 0.0;           ///< max su_residual of random members and their exp's group residual
  double group = 0.0;             ///< max group_residual over d_t, h^{s/u}_t, σ, W, exp(B)
  double exp_oracle = 0.0;        ///< max ‖expm − expm_taylor‖ on random algebra elements
  double block_roundtrip = 0.0;
  double conj_identity = 0.0;
  double product_form = 0.0;
  double horocycle_scaling = 0.0; ///< ‖d_t h_τ d_{−t} − h_{τe^{±2t}}‖
  double group_laws = 0.0;        ///< one-parameter group laws for d_t, h^{s/u}
  double transverse_rates = 0.0;  ///< deviation from (e^{−t}, e^{t})
  ConjugationReport conjugation;
  LocalDiffeoReport diffeo;
  bool w_cover = false;           ///< both square roots λ give members
  bool intersection_trivial = false;
  bool coset_checks = false;
};

HomogeneousReport homogeneous_suite(int n, std::size_t samples = 100, std::uint64_t seed = 0);

}  // namespace phsurgery::homogeneous
