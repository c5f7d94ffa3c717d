#include "cfota/combiner.hpp"

#include <cmath>
#include <limits>

#include "cfota/fronthaul.hpp"

namespace cfota {

ChunkPrior phase1_prior(const Phase1Moments& m, int M) {
  const int length = static_cast<int>(m.mu.size());
  const int chunks = chunk_count(length, M);
  ChunkPrior prior;
  prior.mean = chunk(m.mu.cast<cdouble>(), M);
  prior.cov.assign(static_cast<size_t>(chunks), CMatrix::Zero(M, M));
  for (int i = 0; i < length; ++i) prior.cov[static_cast<size_t>(i / M)](i % M, i % M) = m.C_diag(i);
  return prior;
}

ChunkPrior phase2_prior(const Phase2Moments& m, int tau, int M) {
  const int K = static_cast<int>(m.C.rows());
  const int length = K * tau;
  const int chunks = chunk_count(length, M);
  ChunkPrior prior;
  prior.mean = CMatrix::Zero(M, chunks);
  prior.cov.assign(static_cast<size_t>(chunks), CMatrix::Zero(M, M));
  for (int c = 0; c < chunks; ++c) {
    CMatrix& cov = prior.cov[static_cast<size_t>(c)];
    for (int i = 0; i < M; ++i) {
      const int gi = c * M + i;
      if (gi >= length) break;
      for (int j = 0; j < M; ++j) {
        const int gj = c * M + j;
        if (gj >= length) break;
        if (gi / K == gj / K) cov(i, j) = m.C(gi % K, gj % K);
      }
    }
  }
  return prior;
}

CVector lmmse_chunk_estimate(const CVector& z, const CVector& mu, const CMatrix& C, double rho_c) {
  if (!(rho_c > 0)) throw ValidationError("scaling factor must be positive");
  const Eigen::Index M = z.size();
  const double g = std::sqrt(rho_c);
  // A = rho_c C + I is Hermitian positive definite for PSD C.
  const CMatrix A = rho_c * C + CMatrix::Identity(M, M);
  const CVector innovation = z - g * mu;
  return mu + g * (C * A.llt().solve(innovation));
}

CVector ls_chunk_estimate(const CVector& z, double rho_c) {
  if (!(rho_c > 0)) throw ValidationError("scaling factor must be positive");
  return z / std::sqrt(rho_c);
}

CVector estimate_phase(const CMatrix& Z, double rho_c, EstimatorKind kind, const ChunkPrior& prior,
                       int length) {
  CMatrix X(Z.rows(), Z.cols());
  if (kind == EstimatorKind::kLs) {
    if (!(rho_c > 0)) throw ValidationError("scaling factor must be positive");
    X = Z / std::sqrt(rho_c);
  } else {
    if (prior.mean.cols() != Z.cols() || prior.cov.size() != static_cast<size_t>(Z.cols()))
      throw ValidationError("chunk prior does not match the received frame");
    for (Eigen::Index m = 0; m < Z.cols(); ++m)
      X.col(m) = lmmse_chunk_estimate(Z.col(m), prior.mean.col(m), prior.cov[static_cast<size_t>(m)], rho_c);
  }
  return unchunk(X, length);
}

CMatrix unpack_gramian(const CVector& x1, int K) {
  if (x1.size() != packed_gramian_length(K))
    throw ValidationError("Gramian vector length must be K(K+1)/2");
  CMatrix T(K, K);
  int n = 0;
  for (int r = 0; r < K; ++r) {
    T(r, r) = x1(n++).real();
    for (int c = r + 1; c < K; ++c) {
      T(r, c) = x1(n);
      T(c, r) = std::conj(x1(n));
      ++n;
    }
  }
  return T;
}

EstimatedStatistics unpack(const CVector& x1, const CVector& x2, int K, int tau, EstimatorKind kind) {
  if (x2.size() != static_cast<Eigen::Index>(K) * tau)
    throw ValidationError("matched-filter vector length must be tau K");
  EstimatedStatistics out;
  out.kind = kind;
  out.T_hat = unpack_gramian(x1, K);
  out.t_hat = Eigen::Map<const CMatrix>(x2.data(), K, tau);
  return out;
}

void NmseAccumulator::add(const CVector& x, const CVector& x_hat) {
  if (x.size() != x_hat.size()) throw ValidationError("nmse: dimension mismatch");
  add((x - x_hat).squaredNorm(), x.squaredNorm());
}

void NmseAccumulator::add(double e, double x) {
  ++n_;
  sum_e_ += e;
  sum_x_ += x;
  sum_ee_ += e * e;
  sum_xx_ += x * x;
  sum_ex_ += e * x;
}

void NmseAccumulator::merge(const NmseAccumulator& o) {
  n_ += o.n_;
  sum_e_ += o.sum_e_;
  sum_x_ += o.sum_x_;
  sum_ee_ += o.sum_ee_;
  sum_xx_ += o.sum_xx_;
  sum_ex_ += o.sum_ex_;
}

double NmseAccumulator::ratio() const {
  if (!(sum_x_ > 0)) throw ValidationError("nmse: zero signal energy");
  return sum_e_ / sum_x_;
}

double NmseAccumulator::db() const {
  const double r = ratio();
  return r > 0 ? 10.0 * std::log10(r) : kNmseFloorDb;
}

double NmseAccumulator::stderr_db() const {
  if (n_ < 2) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(n_);
  const double r = ratio();
  if (r <= 0) return 0.0;
  const double me = sum_e_ / n, mx = sum_x_ / n;
  // Var(e - r x) with sample moments.
  const double var_e = sum_ee_ / n - me * me;
  const double var_x = sum_xx_ / n - mx * mx;
  const double cov = sum_ex_ / n - me * mx;
  const double var = std::max(0.0, var_e - 2 * r * cov + r * r * var_x);
  const double se_ratio = std::sqrt(var / (n - 1)) / mx;
  return 10.0 / std::log(10.0) * se_ratio / r;
}

double nmse_db(const CVector& x, const CVector& x_hat) {
  NmseAccumulator acc;
  acc.add(x, x_hat);
  return acc.db();
}

}  // namespace cfota
