#include "phsurgery/homogeneous.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace phsurgery::homogeneous {

namespace {

constexpr Complex kI{0.0, 1.0};

void check_n(int n) {
  if (n < 2 || n > 6) throw DomainError("homogeneous: n must lie in 2..6");
}

int n_of(const CMatrix& m) {
  if (m.rows() != m.cols()) throw DomainError("homogeneous: matrix must be square");
  const int n = static_cast<int>(m.rows()) - 1;
  check_n(n);
  return n;
}

double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

Complex random_complex(sampling::Rng& rng, double scale) {
  return {sampling::uniform(rng, -scale, scale), sampling::uniform(rng, -scale, scale)};
}

CVector random_cvector(sampling::Rng& rng, int m, double scale) {
  CVector v(m);
  for (int i = 0; i < m; ++i) v[i] = random_complex(rng, scale);
  return v;
}

}  // namespace

CMatrix J(int n) {
  check_n(n);
  CMatrix j = CMatrix::Identity(n + 1, n + 1);
  j(n, n) = -1.0;
  return j;
}

CMatrix J0() {
  CMatrix j(2, 2);
  j << 0.0, 1.0, 1.0, 0.0;
  return j;
}

CMatrix J_hat(int n) {
  check_n(n);
  CMatrix j = CMatrix::Identity(n + 1, n + 1);
  j.bottomRightCorner(2, 2) = J0();
  return j;
}

CMatrix T0() {
  const double r = 1.0 / std::sqrt(2.0);
  CMatrix t(2, 2);
  t << r, r, -r, r;
  return t;
}

CMatrix T(int n) {
  check_n(n);
  CMatrix t = CMatrix::Identity(n + 1, n + 1);
  t.bottomRightCorner(2, 2) = T0();
  return t;
}

CMatrix form_matrix(int n, FormKind kind) { return kind == FormKind::Q ? J(n) : J_hat(n); }

Signature signature(const CMatrix& h) {
  if (h.rows() != h.cols()) throw DomainError("signature: matrix must be square");
  if (max_abs(h - h.adjoint()) > 1e-12) throw DomainError("signature: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  Signature s;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double e = es.eigenvalues()[i];
    if (e > 1e-12) ++s.positive;
    else if (e < -1e-12) ++s.negative;
    else ++s.zero;
  }
  return s;
}

HermitianForm HermitianForm::make(int n, FormKind kind) {
  HermitianForm f{kind, form_matrix(n, kind)};
  const Signature s = signature(f.matrix);
  if (s.positive != n || s.negative != 1) throw DomainError("HermitianForm: signature is not (n, 1)");
  return f;
}

CMatrix expm(const CMatrix& a) { return a.exp(); }

CMatrix expm_taylor(const CMatrix& a, int terms) {
  if (a.rows() != a.cols()) throw DomainError("expm_taylor: matrix must be square");
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  const int s = norm > 0.5 ? static_cast<int>(std::ceil(std::log2(norm / 0.5))) : 0;
  const CMatrix b = a / std::ldexp(1.0, s);
  CMatrix term = CMatrix::Identity(a.rows(), a.cols());
  CMatrix sum = term;
  for (int k = 1; k < terms; ++k) {
    term = term * b / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

// ---------------------------------------------------------------------------
// Algebra

double su_residual(const CMatrix& b, FormKind kind) {
  const CMatrix h = form_matrix(n_of(b), kind);
  return std::max(std::abs(b.trace()), max_abs(b.adjoint() * h + h * b));
}

bool in_su(const CMatrix& b, FormKind kind, double tol) { return su_residual(b, kind) <= tol; }

Blocks block_decompose(const CMatrix& b) {
  const int m = n_of(b) - 1;
  Blocks out;
  out.A = b.topLeftCorner(m, m);
  out.v = b.topRightCorner(m, 2);
  out.D = b.bottomRightCorner(2, 2);
  out.a = out.D(0, 0);
  out.b = out.D(0, 1).imag();
  out.c = out.D(1, 0).imag();
  return out;
}

CMatrix block_compose(const CMatrix& a_block, const CMatrix& v, Complex a, double b, double c) {
  const int m = static_cast<int>(a_block.rows());
  if (a_block.cols() != m || v.rows() != m || v.cols() != 2) throw DomainError("block_compose: size mismatch");
  check_n(m + 1);
  CMatrix out = CMatrix::Zero(m + 2, m + 2);
  out.topLeftCorner(m, m) = a_block;
  out.topRightCorner(m, 2) = v;
  out.bottomLeftCorner(2, m) = -J0() * v.adjoint();
  out(m, m) = a;
  out(m, m + 1) = kI * b;
  out(m + 1, m) = kI * c;
  out(m + 1, m + 1) = -std::conj(a);
  return out;
}

CMatrix random_su(int n, sampling::Rng& rng, double scale) {
  check_n(n);
  const int m = n - 1;
  CMatrix x(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) x(i, j) = random_complex(rng, scale);
  const CMatrix a_block = 0.5 * (x - x.adjoint());
  CMatrix v(m, 2);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < 2; ++j) v(i, j) = random_complex(rng, scale);
  // Tr B = Tr A + a − ā = 0 fixes Im a.
  const Complex a{sampling::uniform(rng, -scale, scale), -0.5 * a_block.trace().imag()};
  return block_compose(a_block, v, a, sampling::uniform(rng, -scale, scale), sampling::uniform(rng, -scale, scale));
}

// ---------------------------------------------------------------------------
// Group

double group_residual(const CMatrix& g, FormKind kind) {
  const CMatrix h = form_matrix(n_of(g), kind);
  return std::max(std::abs(g.determinant() - 1.0), max_abs(g.adjoint() * h * g - h));
}

bool in_group(const CMatrix& g, FormKind kind, double tol) { return group_residual(g, kind) <= tol; }

double ConjugationReport::max() const { return std::max({t_relation, t0_entries, forward, backward}); }

ConjugationReport conjugate_forms_check(int n, std::size_t samples, std::uint64_t seed) {
  check_n(n);
  ConjugationReport rep;
  rep.samples = samples;
  const CMatrix t = T(n);
  const CMatrix t_inv = t.inverse();
  rep.t_relation = max_abs(t.adjoint() * J(n) * t - J_hat(n));
  const double r = 1.0 / std::sqrt(2.0);
  const CMatrix t0 = T0();
  rep.t0_entries = std::max({std::abs(t0(0, 0) - r), std::abs(t0(0, 1) - r), std::abs(t0(1, 0) + r),
                             std::abs(t0(1, 1) - r)});
  auto rng = sampling::make_rng(seed, 0x50ull);
  for (std::size_t i = 0; i < samples; ++i) {
    const CMatrix g_hat = expm(random_su(n, rng));
    const CMatrix g = t * g_hat * t_inv;
    rep.forward = std::max(rep.forward, group_residual(g, FormKind::Q));
    rep.backward = std::max(rep.backward, group_residual(t_inv * g * t, FormKind::Qhat));
  }
  return rep;
}

CMatrix geodesic(int n, double t) {
  check_n(n);
  CMatrix d = CMatrix::Identity(n + 1, n + 1);
  d(n - 1, n - 1) = std::exp(t);
  d(n, n) = std::exp(-t);
  return d;
}

CMatrix geodesic_generator(int n) {
  check_n(n);
  CMatrix d = CMatrix::Zero(n + 1, n + 1);
  d(n - 1, n - 1) = 1.0;
  d(n, n) = -1.0;
  return d;
}

CMatrix horocycle(int n, Horocycle kind, double t) {
  check_n(n);
  CMatrix h = CMatrix::Identity(n + 1, n + 1);
  if (kind == Horocycle::stable) h(n - 1, n) = kI * t;
  else h(n, n - 1) = kI * t;
  return h;
}

CMatrix transversal(const CVector& v1, const CVector& v2) {
  const int m = static_cast<int>(v1.size());
  if (v2.size() != m) throw DomainError("transversal: v1 and v2 differ in size");
  CMatrix v(m, 2);
  v.col(0) = v1;
  v.col(1) = v2;
  return block_compose(CMatrix::Zero(m, m), v, 0.0, 0.0, 0.0);
}

CMatrix sigma(const CVector& v1, const CVector& v2, double eps0) {
  const double r = std::sqrt(v1.squaredNorm() + v2.squaredNorm());
  if (!(r < eps0)) throw DomainError("sigma: parameter outside the transversal disk");
  return expm(transversal(v1, v2));
}

double conj_identity_check(const CVector& v1, const CVector& v2, double t) {
  const int n = static_cast<int>(v1.size()) + 1;
  const CMatrix lhs = geodesic(n, t) * sigma(v1, v2) * geodesic(n, -t);
  const CMatrix rhs = sigma(std::exp(-t) * v1, std::exp(t) * v2);
  return max_abs(lhs - rhs);
}

CMatrix embed_su11(int n, const CMatrix& u) {
  check_n(n);
  if (u.rows() != 2 || u.cols() != 2) throw DomainError("embed_su11: expected a 2x2 block");
  CMatrix big = CMatrix::Identity(n + 1, n + 1);
  big.bottomRightCorner(2, 2) = u;
  return big;
}

double product_form_check(const CVector& v1, const CVector& v2, const CMatrix& u, double t) {
  const int n = static_cast<int>(v1.size()) + 1;
  const CMatrix big = embed_su11(n, u);
  const CMatrix d = geodesic(n, t);
  const CMatrix lhs = d * sigma(v1, v2) * big;
  const CMatrix rhs = sigma(std::exp(-t) * v1, std::exp(t) * v2) * d * big;
  return max_abs(lhs - rhs);
}

TransverseRates transverse_rates(const CVector& v1, const CVector& v2, double t) {
  const int n = static_cast<int>(v1.size()) + 1;
  if (v1.norm() == 0.0 || v2.norm() == 0.0) throw DomainError("transverse_rates: both parameters must be nonzero");
  const Blocks b = block_decompose(geodesic(n, t) * transversal(v1, v2) * geodesic(n, -t));
  return {b.v.col(0).norm() / v1.norm(), b.v.col(1).norm() / v2.norm()};
}

// ---------------------------------------------------------------------------
// W(n−1)

CMatrix w_element(const CMatrix& a, Complex lambda, double tol) {
  const int m = static_cast<int>(a.rows());
  if (a.cols() != m) throw DomainError("w_element: A must be square");
  check_n(m + 1);
  if (max_abs(a * a.adjoint() - CMatrix::Identity(m, m)) > tol) throw DomainError("w_element: A is not unitary");
  if (std::abs(lambda * lambda - a.determinant()) > tol) throw DomainError("w_element: lambda^2 != det A");
  CMatrix w = CMatrix::Zero(m + 2, m + 2);
  w.topLeftCorner(m, m) = a;
  w(m, m) = std::conj(lambda);
  w(m + 1, m + 1) = std::conj(lambda);
  return w;
}

bool in_w(const CMatrix& g, double tol) {
  const int m = n_of(g) - 1;
  if (max_abs(g.topRightCorner(m, 2)) > tol || max_abs(g.bottomLeftCorner(2, m)) > tol) return false;
  const Complex mu = g(m, m);
  if (std::abs(g(m, m + 1)) > tol || std::abs(g(m + 1, m)) > tol || std::abs(g(m + 1, m + 1) - mu) > tol)
    return false;
  const CMatrix a = g.topLeftCorner(m, m);
  if (max_abs(a * a.adjoint() - CMatrix::Identity(m, m)) > tol) return false;
  const Complex lambda = std::conj(mu);
  return std::abs(std::abs(lambda) - 1.0) <= tol && std::abs(lambda * lambda - a.determinant()) <= tol;
}

CMatrix random_unitary(int m, sampling::Rng& rng) {
  CMatrix z(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) z(i, j) = Complex(sampling::normal(rng), sampling::normal(rng));
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ() * CMatrix::Identity(m, m);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < m; ++j) {
    const Complex d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

CMatrix random_w(int n, sampling::Rng& rng, bool other_root) {
  check_n(n);
  const CMatrix a = random_unitary(n - 1, rng);
  Complex lambda = std::sqrt(a.determinant());
  if (other_root) lambda = -lambda;
  return w_element(a, lambda);
}

CMatrix random_su11(sampling::Rng& rng, double scale) {
  CMatrix d(2, 2);
  const double a = sampling::uniform(rng, -scale, scale);
  d << a, kI * sampling::uniform(rng, -scale, scale), kI * sampling::uniform(rng, -scale, scale), -a;
  return expm(d);
}

std::optional<CMatrix> psu_partner(const CMatrix& w, double tol) {
  const int m = n_of(w) - 1;
  const CMatrix u = w.inverse();
  if (max_abs(u.topLeftCorner(m, m) - CMatrix::Identity(m, m)) > tol) return std::nullopt;
  if (max_abs(u.topRightCorner(m, 2)) > tol || max_abs(u.bottomLeftCorner(2, m)) > tol) return std::nullopt;
  const CMatrix block = u.bottomRightCorner(2, 2);
  // The partner must lie in SU(1,1; J₀).
  if (std::abs(block.determinant() - 1.0) > tol || max_abs(block.adjoint() * J0() * block - J0()) > tol)
    return std::nullopt;
  return block;
}

bool is_psu_identity(const CMatrix& u, double tol) {
  const CMatrix id = CMatrix::Identity(2, 2);
  return max_abs(u - id) <= tol || max_abs(u + id) <= tol;
}

bool coset_equal(const CMatrix& g1, const CMatrix& g2, double tol) { return in_w(g1 * g2.inverse(), tol); }

// ---------------------------------------------------------------------------
// Parametrization

std::vector<CMatrix> basis_w(int n) {
  check_n(n);
  const int m = n - 1;
  std::vector<CMatrix> out;
  auto lift = [&](const CMatrix& x) {
    CMatrix g = CMatrix::Zero(n + 1, n + 1);
    g.topLeftCorner(m, m) = x;
    // λ² = det A differentiates to 2λ' = Tr X, and the lower block is λ̄.
    const Complex mu = -0.5 * x.trace();
    g(m, m) = mu;
    g(m + 1, m + 1) = mu;
    return g;
  };
  for (int j = 0; j < m; ++j) {
    CMatrix x = CMatrix::Zero(m, m);
    x(j, j) = kI;
    out.push_back(lift(x));
  }
  for (int j = 0; j < m; ++j)
    for (int k = j + 1; k < m; ++k) {
      CMatrix x = CMatrix::Zero(m, m);
      x(j, k) = 1.0;
      x(k, j) = -1.0;
      out.push_back(lift(x));
      x(j, k) = kI;
      x(k, j) = kI;
      out.push_back(lift(x));
    }
  return out;
}

std::vector<CMatrix> basis_sigma(int n) {
  check_n(n);
  const int m = n - 1;
  std::vector<CMatrix> out;
  for (int col = 0; col < 2; ++col)
    for (int j = 0; j < m; ++j)
      for (Complex unit : {Complex(1.0, 0.0), kI}) {
        CVector v1 = CVector::Zero(m), v2 = CVector::Zero(m);
        (col == 0 ? v1 : v2)[j] = unit;
        out.push_back(transversal(v1, v2));
      }
  return out;
}

std::vector<CMatrix> basis_su11(int n) {
  check_n(n);
  const CMatrix z = CMatrix::Zero(n - 1, 2);
  const CMatrix a0 = CMatrix::Zero(n - 1, n - 1);
  return {block_compose(a0, z, 1.0, 0.0, 0.0), block_compose(a0, z, 0.0, 1.0, 0.0),
          block_compose(a0, z, 0.0, 0.0, 1.0)};
}

namespace {

Eigen::MatrixXd realify(const std::vector<CMatrix>& basis) {
  if (basis.empty()) return {};
  const auto sz = basis.front().size();
  Eigen::MatrixXd out(2 * sz, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t c = 0; c < basis.size(); ++c) {
    const Eigen::Map<const CVector> flat(basis[c].data(), sz);
    out.col(static_cast<Eigen::Index>(c)) << flat.real(), flat.imag();
  }
  return out;
}

int numeric_rank(const Eigen::MatrixXd& m, double* min_sv = nullptr, Eigen::VectorXd* null = nullptr) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = 1e-10 * std::max(1.0, sv.size() ? sv[0] : 0.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) rank += sv[i] > tol;
  if (min_sv) *min_sv = sv.size() ? sv[sv.size() - 1] : 0.0;
  if (null && rank < m.cols()) *null = svd.matrixV().col(m.cols() - 1);
  return rank;
}

}  // namespace

LocalDiffeoReport local_diffeo_check(int n) {
  check_n(n);
  LocalDiffeoReport rep;
  rep.n = n;
  const auto bw = basis_w(n), bs = basis_sigma(n), bu = basis_su11(n);
  rep.dim_w = static_cast<int>(bw.size());
  rep.dim_sigma = static_cast<int>(bs.size());
  rep.dim_su11 = static_cast<int>(bu.size());
  rep.expected = n * n + 2 * n;
  std::vector<CMatrix> all;
  for (const auto* part : {&bw, &bs, &bu})
    for (const auto& b : *part) {
      if (!in_su(b)) throw NumericalError("local_diffeo_check: basis element outside su(n,1)");
      all.push_back(b);
    }
  rep.summands_independent = numeric_rank(realify(bw)) == rep.dim_w && numeric_rank(realify(bs)) == rep.dim_sigma &&
                             numeric_rank(realify(bu)) == rep.dim_su11;
  Eigen::VectorXd null;
  rep.rank = numeric_rank(realify(all), &rep.min_singular, &null);
  if (rep.rank < static_cast<int>(all.size())) rep.null_vector.assign(null.data(), null.data() + null.size());
  return rep;
}

// ---------------------------------------------------------------------------
// Suite

HomogeneousReport homogeneous_suite(int n, std::size_t samples, std::uint64_t seed) {
  check_n(n);
  HomogeneousReport rep;
  rep.n = n;
  rep.samples = samples;
  auto rng = sampling::make_rng(seed, 0x4844ull + static_cast<std::uint64_t>(n));
  const int m = n - 1;
  rep.w_cover = true;
  rep.intersection_trivial = true;
  rep.coset_checks = true;

  for (std::size_t i = 0; i < samples; ++i) {
    const CMatrix b = random_su(n, rng);
    rep.algebra = std::max(rep.algebra, su_residual(b));
    const CMatrix g = expm(b);
    rep.group = std::max(rep.group, group_residual(g));
    rep.exp_oracle = std::max(rep.exp_oracle, max_abs(g - expm_taylor(b)));
    const Blocks bl = block_decompose(b);
    rep.block_roundtrip = std::max(rep.block_roundtrip, max_abs(block_compose(bl.A, bl.v, bl.a, bl.b, bl.c) - b));

    const double t = sampling::uniform(rng, -2.0, 2.0);
    const double s = sampling::uniform(rng, -2.0, 2.0);
    const double tau = sampling::uniform(rng, -1.0, 1.0);
    for (const CMatrix& e : {geodesic(n, t), horocycle(n, Horocycle::stable, tau), horocycle(n, Horocycle::unstable, tau)})
      rep.group = std::max(rep.group, group_residual(e));
    rep.group_laws = std::max({rep.group_laws, max_abs(geodesic(n, t) * geodesic(n, s) - geodesic(n, t + s)),
                               max_abs(horocycle(n, Horocycle::stable, t) * horocycle(n, Horocycle::stable, s) -
                                       horocycle(n, Horocycle::stable, t + s)),
                               max_abs(horocycle(n, Horocycle::unstable, t) * horocycle(n, Horocycle::unstable, s) -
                                       horocycle(n, Horocycle::unstable, t + s))});
    rep.horocycle_scaling = std::max(
        {rep.horocycle_scaling,
         max_abs(geodesic(n, t) * horocycle(n, Horocycle::stable, tau) * geodesic(n, -t) -
                 horocycle(n, Horocycle::stable, tau * std::exp(2 * t))),
         max_abs(geodesic(n, t) * horocycle(n, Horocycle::unstable, tau) * geodesic(n, -t) -
                 horocycle(n, Horocycle::unstable, tau * std::exp(-2 * t)))});

    const CVector v1 = random_cvector(rng, m, 0.1 / std::sqrt(double(m)));
    const CVector v2 = random_cvector(rng, m, 0.1 / std::sqrt(double(m)));
    rep.group = std::max(rep.group, group_residual(sigma(v1, v2)));
    rep.conj_identity = std::max(rep.conj_identity, conj_identity_check(v1, v2, t));
    const CMatrix u = random_su11(rng);
    rep.product_form = std::max(rep.product_form, product_form_check(v1, v2, u, t));
    const auto rates = transverse_rates(v1, v2, t);
    rep.transverse_rates = std::max({rep.transverse_rates, std::abs(rates.stable * std::exp(t) - 1.0),
                                     std::abs(rates.unstable * std::exp(-t) - 1.0)});

    const CMatrix w1 = random_w(n, rng, false);
    const CMatrix w2 = random_w(n, rng, true);
    rep.group = std::max({rep.group, group_residual(w1), group_residual(w2)});
    rep.w_cover = rep.w_cover && in_w(w1) && in_w(w2);
    for (const CMatrix* w : {&w1, &w2}) {
      const auto partner = psu_partner(*w);
      if (partner && !is_psu_identity(*partner)) rep.intersection_trivial = false;
    }
    rep.coset_checks = rep.coset_checks && coset_equal(g, w1 * g) && coset_equal(w1 * g, g) && coset_equal(g, g) &&
                       !coset_equal(g, horocycle(n, Horocycle::stable, 0.1) * g);
  }
  // The only W elements with an SU(1,1) partner are diag(Id, ±1, ±1).
  const CMatrix minus = w_element(CMatrix::Identity(m, m), -1.0);
  const auto partner = psu_partner(minus);
  rep.intersection_trivial = rep.intersection_trivial && partner && is_psu_identity(*partner);

  rep.conjugation = conjugate_forms_check(n, samples, seed);
  rep.diffeo = local_diffeo_check(n);
  return rep;
}

}  // namespace phsurgery::homogeneous
