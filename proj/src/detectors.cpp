#include "cfota/detectors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace cfota {

namespace {

struct ClippedEigen {
  CMatrix U;
  RVector lambda;
  int clipped = 0;
};

ClippedEigen clipped_eigen(const CMatrix& T, double floor) {
  if (T.rows() != T.cols()) throw ValidationError("Gramian must be square");
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (T + T.adjoint()));
  ClippedEigen out;
  out.U = eig.eigenvectors();
  out.lambda = eig.eigenvalues();
  for (Eigen::Index i = 0; i < out.lambda.size(); ++i) {
    if (out.lambda(i) < floor) {
      out.lambda(i) = floor;
      ++out.clipped;
    }
  }
  return out;
}

CMatrix apply_spectral(const ClippedEigen& e, const RVector& f, const CMatrix& x) {
  return e.U * (f.asDiagonal() * (e.U.adjoint() * x));
}

}  // namespace

CMatrix lmmse_detect(const CMatrix& T, const CMatrix& t, double rho_ul) {
  const ClippedEigen e = clipped_eigen(T, kEigenFloor);
  const RVector f = (rho_ul * e.lambda.array() + 1.0).inverse().matrix();
  return std::sqrt(rho_ul) * apply_spectral(e, f, t);
}

CMatrix ls_detect(const CMatrix& T, const CMatrix& t, double rho_ul) {
  const ClippedEigen e = clipped_eigen(T, kEigenFloor);
  const double cond = e.lambda.maxCoeff() / e.lambda.minCoeff();
  if (!(cond < 1e12)) throw SingularMatrixError("Gramian is singular; LS detector undefined");
  const RVector f = e.lambda.cwiseInverse();
  return apply_spectral(e, f, t) / std::sqrt(rho_ul);
}

std::vector<int> hard_decide(const CMatrix& s_hat, const Constellation& cons) {
  std::vector<int> out(static_cast<size_t>(s_hat.size()));
  for (Eigen::Index c = 0; c < s_hat.cols(); ++c)
    for (Eigen::Index r = 0; r < s_hat.rows(); ++r)
      out[static_cast<size_t>(c * s_hat.rows() + r)] = cons.nearest(s_hat(r, c));
  return out;
}

WhitenedModel whiten(const CMatrix& T, const CMatrix& t, double floor) {
  const ClippedEigen e = clipped_eigen(T, floor);
  WhitenedModel out;
  out.clipped = e.clipped;
  const RVector root = e.lambda.cwiseSqrt();
  out.H_bar = e.U * root.asDiagonal() * e.U.adjoint();
  out.y_bar = apply_spectral(e, root.cwiseInverse(), t);
  return out;
}

double whitened_metric(const CMatrix& H, const CVector& y, double rho_ul, const Constellation& cons,
                       std::span<const int> s) {
  const Eigen::Index K = H.cols();
  CVector sv(K);
  for (Eigen::Index k = 0; k < K; ++k) sv(k) = cons.point(s[static_cast<size_t>(k)]);
  return (y - std::sqrt(rho_ul) * (H * sv)).squaredNorm();
}

SphereSearch::SphereSearch(const CMatrix& H, const CVector& y, double rho_ul, const Constellation& cons)
    : cons_(cons), dims_(2 * static_cast<int>(H.cols())), levels_(cons.axis_levels()) {
  const Eigen::Index K = H.cols();
  const Eigen::Index rows = H.rows();
  const double g = std::sqrt(rho_ul);
  // Real model: [Re y; Im y] interleaved per row, x = [Re s0, Im s0, Re s1, ...].
  RMatrix B(2 * rows, 2 * K);
  RVector yr(2 * rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    yr(2 * r) = y(r).real();
    yr(2 * r + 1) = y(r).imag();
    for (Eigen::Index k = 0; k < K; ++k) {
      const cdouble a = g * H(r, k);
      B(2 * r, 2 * k) = a.real();
      B(2 * r, 2 * k + 1) = -a.imag();
      B(2 * r + 1, 2 * k) = a.imag();
      B(2 * r + 1, 2 * k + 1) = a.real();
    }
  }
  Eigen::HouseholderQR<RMatrix> qr(B);
  R_ = qr.matrixQR().topRows(2 * K).triangularView<Eigen::Upper>();
  y_ = (qr.householderQ().transpose() * yr).head(2 * K);
}

std::vector<int> SphereSearch::search(int dim, int label_bit, int label_value) {
  const int n = dims_;
  const int q = static_cast<int>(levels_.size());
  std::vector<std::vector<int>> allowed(static_cast<size_t>(n));
  for (int d = 0; d < n; ++d) {
    for (int i = 0; i < q; ++i) {
      if (d == dim) {
        const int label = cons_.axis_label(i);
        const int b = (label >> (cons_.bits_per_axis() - 1 - label_bit)) & 1;
        if (b != label_value) continue;
      }
      allowed[static_cast<size_t>(d)].push_back(i);
    }
  }

  std::vector<int> current(static_cast<size_t>(n), 0);
  std::vector<int> best(static_cast<size_t>(n), -1);
  std::vector<double> x(static_cast<size_t>(n), 0.0);
  double radius = std::numeric_limits<double>::infinity();

  // Depth-first Schnorr-Euchner enumeration from the last dimension.
  auto descend = [&](auto&& self, int i, double partial) -> void {
    double center = y_(i);
    for (int j = i + 1; j < n; ++j) center -= R_(i, j) * x[static_cast<size_t>(j)];
    const double rii = R_(i, i);
    const auto& cand = allowed[static_cast<size_t>(i)];
    std::array<std::pair<double, int>, 16> order{};
    const int count = static_cast<int>(cand.size());
    for (int c = 0; c < count; ++c) {
      const double diff = center - rii * levels_[static_cast<size_t>(cand[static_cast<size_t>(c)])];
      order[static_cast<size_t>(c)] = {diff * diff, cand[static_cast<size_t>(c)]};
    }
    std::sort(order.begin(), order.begin() + count);
    for (int c = 0; c < count; ++c) {
      ++nodes_;
      const double metric = partial + order[static_cast<size_t>(c)].first;
      if (!(metric < radius)) break;
      current[static_cast<size_t>(i)] = order[static_cast<size_t>(c)].second;
      x[static_cast<size_t>(i)] = levels_[static_cast<size_t>(current[static_cast<size_t>(i)])];
      if (i == 0) {
        radius = metric;
        best = current;
      } else {
        self(self, i - 1, metric);
      }
    }
  };
  if (q > 16) throw ValidationError("sphere search supports at most 16 levels per axis");
  descend(descend, n - 1, 0.0);
  return best;
}

std::vector<int> SphereSearch::to_symbols(const std::vector<int>& levels) const {
  std::vector<int> out(levels.size() / 2);
  for (size_t k = 0; k < out.size(); ++k) out[k] = cons_.index_of(levels[2 * k], levels[2 * k + 1]);
  return out;
}

namespace {

std::uint64_t hypothesis_count(const Constellation& cons, Eigen::Index K) {
  std::uint64_t total = 1;
  for (Eigen::Index k = 0; k < K; ++k) {
    if (total > (std::uint64_t{1} << 62) / static_cast<std::uint64_t>(cons.order()))
      return std::numeric_limits<std::uint64_t>::max();
    total *= static_cast<std::uint64_t>(cons.order());
  }
  return total;
}

// Visits every s in S^K with an incrementally updated residual y - sqrt(rho) H s.
template <typename Visit>
void enumerate(const CMatrix& H, const CVector& y, double rho_ul, const Constellation& cons, Visit&& visit) {
  const Eigen::Index K = H.cols();
  const int q = cons.order();
  const CMatrix A = std::sqrt(rho_ul) * H;
  std::vector<int> s(static_cast<size_t>(K), 0);
  CVector r = y;
  for (Eigen::Index k = 0; k < K; ++k) r -= A.col(k) * cons.point(0);
  while (true) {
    visit(s, r.squaredNorm());
    Eigen::Index k = 0;
    while (k < K) {
      const int old = s[static_cast<size_t>(k)];
      const int next = (old + 1) % q;
      r -= A.col(k) * (cons.point(next) - cons.point(old));
      s[static_cast<size_t>(k)] = next;
      if (next != 0) break;
      ++k;
    }
    if (k == K) return;
  }
}

}  // namespace

MlDecision ml_detect(const CMatrix& H, const CVector& y, double rho_ul, const Constellation& cons,
                     const MlOptions& opts) {
  MlDecision out;
  if (opts.sphere) {
    SphereSearch sphere(H, y, rho_ul, cons);
    out.symbols = sphere.to_symbols(sphere.search());
    out.nodes = sphere.nodes();
  } else {
    const std::uint64_t total = hypothesis_count(cons, H.cols());
    if (total > opts.exhaustive_budget)
      throw ValidationError("|S|^K exceeds the exhaustive budget; enable the sphere search");
    double best = std::numeric_limits<double>::infinity();
    enumerate(H, y, rho_ul, cons, [&](const std::vector<int>& s, double m) {
      if (m < best) {
        best = m;
        out.symbols = s;
      }
    });
    out.nodes = total;
  }
  out.metric = whitened_metric(H, y, rho_ul, cons, out.symbols);
  return out;
}

RVector soft_llrs(const CMatrix& H, const CVector& y, double rho_ul, const Constellation& cons,
                  LlrMode mode, const MlOptions& opts) {
  const int K = static_cast<int>(H.cols());
  const int bps = cons.bits_per_symbol();
  const int nbits = K * bps;
  RVector llr(nbits);

  if (mode == LlrMode::kMaxLog && opts.sphere) {
    SphereSearch sphere(H, y, rho_ul, cons);
    const std::vector<int> ml_levels = sphere.search();
    const std::vector<int> ml = sphere.to_symbols(ml_levels);
    const double d_ml = whitened_metric(H, y, rho_ul, cons, ml);
    const int bpa = cons.bits_per_axis();
    for (int k = 0; k < K; ++k) {
      for (int b = 0; b < bps; ++b) {
        const int ml_bit = cons.bit(ml[static_cast<size_t>(k)], b);
        const int dim = b < bpa ? 2 * k : 2 * k + 1;
        const int label_bit = b < bpa ? b : b - bpa;
        const std::vector<int> counter = sphere.to_symbols(sphere.search(dim, label_bit, 1 - ml_bit));
        const double d_counter = whitened_metric(H, y, rho_ul, cons, counter);
        llr(k * bps + b) = ml_bit == 1 ? d_counter - d_ml : d_ml - d_counter;
      }
    }
    return llr;
  }

  const std::uint64_t total = hypothesis_count(cons, K);
  if (total > opts.exhaustive_budget)
    throw ValidationError("|S|^K exceeds the exhaustive budget for soft output");

  // Per bit and value: running minimum (max-log) or log-sum-exp (exact).
  std::vector<std::array<double, 2>> best(static_cast<size_t>(nbits),
                                          {std::numeric_limits<double>::infinity(),
                                           std::numeric_limits<double>::infinity()});
  std::vector<std::array<std::vector<int>, 2>> arg(static_cast<size_t>(nbits));
  std::vector<std::array<double, 2>> lse(static_cast<size_t>(nbits),
                                         {-std::numeric_limits<double>::infinity(),
                                          -std::numeric_limits<double>::infinity()});
  enumerate(H, y, rho_ul, cons, [&](const std::vector<int>& s, double m) {
    for (int k = 0; k < K; ++k) {
      for (int b = 0; b < bps; ++b) {
        const size_t i = static_cast<size_t>(k * bps + b);
        const int v = cons.bit(s[static_cast<size_t>(k)], b);
        if (mode == LlrMode::kMaxLog) {
          if (m < best[i][static_cast<size_t>(v)]) {
            best[i][static_cast<size_t>(v)] = m;
            arg[i][static_cast<size_t>(v)] = s;
          }
        } else {
          double& acc = lse[i][static_cast<size_t>(v)];
          const double term = -m;
          if (acc == -std::numeric_limits<double>::infinity()) {
            acc = term;
          } else {
            const double hi = std::max(acc, term);
            acc = hi + std::log1p(std::exp(std::min(acc, term) - hi));
          }
        }
      }
    }
  });
  for (int i = 0; i < nbits; ++i) {
    if (mode == LlrMode::kMaxLog) {
      const double d1 = whitened_metric(H, y, rho_ul, cons, arg[static_cast<size_t>(i)][1]);
      const double d0 = whitened_metric(H, y, rho_ul, cons, arg[static_cast<size_t>(i)][0]);
      llr(i) = d0 - d1;
    } else {
      llr(i) = lse[static_cast<size_t>(i)][1] - lse[static_cast<size_t>(i)][0];
    }
  }
  return llr;
}

}  // namespace cfota
