#include "cfota/channel.hpp"

#include <Eigen/Eigenvalues>

namespace cfota {

namespace {

bool is_diagonal(const CMatrix& R) {
  for (Eigen::Index c = 0; c < R.cols(); ++c)
    for (Eigen::Index r = 0; r < R.rows(); ++r)
      if (r != c && R(r, c) != cdouble(0)) return false;
  return true;
}

double clip_eigenvalue(double lambda, double scale, double tol) {
  if (lambda >= 0) return lambda;
  if (lambda >= -tol * std::max(scale, 1e-300)) return 0.0;
  throw ValidationError("correlation matrix is not positive semidefinite");
}

}  // namespace

CMatrix psd_sqrt(const CMatrix& R, double tol) {
  if (R.rows() != R.cols()) throw ValidationError("psd_sqrt needs a square matrix");
  const Eigen::Index n = R.rows();
  if (is_diagonal(R)) {
    double scale = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(R(i, i).imag()) > tol * std::max(1.0, std::abs(R(i, i).real())))
        throw ValidationError("correlation matrix is not Hermitian");
      scale = std::max(scale, std::abs(R(i, i).real()));
    }
    CMatrix out = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      out(i, i) = std::sqrt(clip_eigenvalue(R(i, i).real(), scale, tol));
    return out;
  }
  const double asym = (R - R.adjoint()).norm();
  if (asym > tol * std::max(1.0, R.norm())) throw ValidationError("correlation matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (R + R.adjoint()));
  const RVector& lambda = eig.eigenvalues();
  const double scale = lambda.cwiseAbs().maxCoeff();
  RVector root(n);
  for (Eigen::Index i = 0; i < n; ++i) root(i) = std::sqrt(clip_eigenvalue(lambda(i), scale, tol));
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().adjoint();
}

std::vector<CMatrix> sample_ue_ap(const CorrelationSet& corr, Rng& rng) {
  const int L = corr.num_aps;
  const int K = corr.num_ues;
  const int N = corr.antennas;
  std::vector<CMatrix> sqrt_r(corr.R.size());
  for (size_t i = 0; i < corr.R.size(); ++i) sqrt_r[i] = psd_sqrt(corr.R[i]);

  std::vector<CMatrix> H(static_cast<size_t>(L), CMatrix(N, K));
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      CVector g(N);
      for (int n = 0; n < N; ++n) g(n) = rng.complex_normal();
      H[static_cast<size_t>(l)].col(k) = sqrt_r[static_cast<size_t>(k * L + l)] * g;
    }
  }
  return H;
}

std::vector<CMatrix> sample_ap_cpu(const NetworkLayout& layout, int N, int M, Rng& rng) {
  if (N < M) throw ValidationError("N ≥ M violated");
  const int L = static_cast<int>(layout.ap_positions.size());
  std::vector<CMatrix> G;
  G.reserve(static_cast<size_t>(L));
  for (int l = 0; l < L; ++l) {
    const double gain = fronthaul_gain(layout, l);
    CMatrix g = rng.complex_normal_matrix(N, M, gain);
    Eigen::JacobiSVD<CMatrix> svd(g);
    const RVector& sv = svd.singularValues();
    if (sv(M - 1) <= 1e-12 * sv(0)) throw SingularMatrixError("AP-CPU channel is rank deficient");
    G.push_back(std::move(g));
  }
  return G;
}

CMatrix stack_channels(const std::vector<CMatrix>& H) {
  if (H.empty()) return {};
  const Eigen::Index N = H.front().rows();
  const Eigen::Index K = H.front().cols();
  CMatrix out(N * static_cast<Eigen::Index>(H.size()), K);
  for (size_t l = 0; l < H.size(); ++l) out.middleRows(static_cast<Eigen::Index>(l) * N, N) = H[l];
  return out;
}

}  // namespace cfota
