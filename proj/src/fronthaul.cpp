#include "cfota/fronthaul.hpp"

#include <algorithm>

#include <Eigen/SVD>

namespace cfota {

CVector pack_upper(const CMatrix& T) {
  if (T.rows() != T.cols()) throw ValidationError("Gramian must be square");
  const int K = static_cast<int>(T.rows());
  CVector x(packed_gramian_length(K));
  int n = 0;
  for (int r = 0; r < K; ++r) {
    x(n++) = T(r, r).real();
    for (int c = r + 1; c < K; ++c) x(n++) = T(r, c);
  }
  return x;
}

CVector pack_columns(const CMatrix& t) {
  CVector x(t.size());
  Eigen::Index n = 0;
  for (Eigen::Index c = 0; c < t.cols(); ++c)
    for (Eigen::Index r = 0; r < t.rows(); ++r) x(n++) = t(r, c);
  return x;
}

PackedVector pack(const LocalStatistics& stats, Phase phase) {
  PackedVector out;
  out.phase = phase;
  out.x = phase == Phase::kGramian ? pack_upper(stats.T) : pack_columns(stats.t);
  return out;
}

CMatrix chunk(const CVector& x, int M) {
  if (M < 1) throw ValidationError("chunk size M must be at least 1");
  const int length = static_cast<int>(x.size());
  const int cols = chunk_count(length, M);
  CMatrix X = CMatrix::Zero(M, cols);
  for (int i = 0; i < length; ++i) X(i % M, i / M) = x(i);
  return X;
}

CVector unchunk(const CMatrix& X, int length) {
  if (length > X.size()) throw ValidationError("unchunk length exceeds the frame size");
  const Eigen::Index M = X.rows();
  CVector x(length);
  for (int i = 0; i < length; ++i) x(i) = X(i % M, i / M);
  return x;
}

CMatrix zf_precoder(const CMatrix& G_l) {
  const Eigen::Index M = G_l.cols();
  if (G_l.rows() < M) throw SingularMatrixError("ZF precoder needs N ≥ M");
  Eigen::JacobiSVD<CMatrix> svd(G_l);
  const RVector& sv = svd.singularValues();
  if (sv(M - 1) == 0.0 || sv(0) / sv(M - 1) > 1e12)
    throw SingularMatrixError("AP-CPU channel is rank deficient; ZF precoder undefined");
  const CMatrix gram = G_l.adjoint() * G_l;
  return G_l * gram.ldlt().solve(CMatrix::Identity(M, M));
}

CMatrix expected_precoder_gram(double gain, int N, int M) {
  if (N <= M)
    throw ValidationError("E[W^H W] has no closed form for N = M (the inverse-Wishart mean diverges)");
  if (!(gain > 0)) throw ValidationError("fronthaul gain must be positive");
  return CMatrix::Identity(M, M) / (gain * (N - M));
}

CMatrix expected_precoder_gram_mc(double gain, int N, int M, int draws, Rng& rng) {
  CMatrix acc = CMatrix::Zero(M, M);
  for (int d = 0; d < draws; ++d) {
    const CMatrix G = rng.complex_normal_matrix(N, M, gain);
    const CMatrix W = zf_precoder(G);
    acc += W.adjoint() * W;
  }
  return acc / static_cast<double>(draws);
}

double phase_energy(const CMatrix& second_moment, const CMatrix& EWW, double rho_c) {
  // trace((I kron EWW) Exx) sums trace(EWW * diagonal M x M block); the last
  // block is truncated where the packed vector ends (padding is zero).
  const Eigen::Index M = EWW.rows();
  const Eigen::Index len = second_moment.rows();
  double total = 0;
  for (Eigen::Index start = 0; start < len; start += M) {
    const Eigen::Index b = std::min(M, len - start);
    total += (EWW.topLeftCorner(b, b) * second_moment.block(start, start, b, b)).trace().real();
  }
  return rho_c * total;
}

double phase_energy_blocks(const CMatrix& block, int tau, const CMatrix& EWW, double rho_c) {
  const Eigen::Index M = EWW.rows();
  const Eigen::Index K = block.rows();
  const Eigen::Index len = K * tau;
  double total = 0;
  for (Eigen::Index start = 0; start < len; start += M) {
    const Eigen::Index b = std::min(M, len - start);
    for (Eigen::Index i = 0; i < b; ++i) {
      for (Eigen::Index j = 0; j < b; ++j) {
        const Eigen::Index gi = start + i;
        const Eigen::Index gj = start + j;
        if (gi / K != gj / K) continue;  // different channel uses are uncorrelated
        total += (EWW(i, j) * block(gj % K, gi % K)).real();
      }
    }
  }
  return rho_c * total;
}

double scale_factor(const std::vector<double>& powers, double p_max) {
  if (!(p_max > 0)) throw ValidationError("P_max must be positive");
  double worst = 0;
  for (double p : powers) worst = std::max(worst, p);
  if (!(worst > 0)) throw ValidationError("all reported powers are zero; scaling factor undefined");
  return p_max / worst;
}

CMatrix ota_transmit(const std::vector<CMatrix>& frames, const std::vector<CMatrix>& precoders,
                     const std::vector<CMatrix>& channels, double rho_c, const CMatrix& noise) {
  if (frames.empty()) throw ValidationError("ota_transmit needs at least one AP");
  if (frames.size() != precoders.size() || frames.size() != channels.size())
    throw ValidationError("ota_transmit: frames, precoders and channels differ in count");
  const Eigen::Index M = frames.front().rows();
  const Eigen::Index cols = frames.front().cols();
  CMatrix Z = CMatrix::Zero(M, cols);
  for (size_t l = 0; l < frames.size(); ++l)
    Z.noalias() += channels[l].adjoint() * (precoders[l] * frames[l]);
  Z *= std::sqrt(rho_c);
  if (noise.size() != 0) {
    if (noise.rows() != M || noise.cols() != cols) throw ValidationError("fronthaul noise has the wrong shape");
    Z += noise;
  }
  return Z;
}

CMatrix ota_transmit(const std::vector<CMatrix>& frames, const std::vector<CMatrix>& precoders,
                     const std::vector<CMatrix>& channels, double rho_c, Rng* rng) {
  CMatrix noise;
  if (rng != nullptr && !frames.empty())
    noise = rng->complex_normal_matrix(frames.front().rows(), frames.front().cols());
  return ota_transmit(frames, precoders, channels, rho_c, noise);
}

}  // namespace cfota
