#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cfota/types.hpp"
#include "cfota/uplink.hpp"

namespace cfota {

/// Eigenvalue floor applied to (possibly indefinite) Gramian estimates.
inline constexpr double kEigenFloor = 1e-12;

/// s = sqrt(rho) (rho T + I)^{-1} t per column of t. T is Hermitian-ized and
/// eigenvalues below kEigenFloor are clipped first.
CMatrix lmmse_detect(const CMatrix& T, const CMatrix& t, double rho_ul);

/// s = rho^{-1/2} T^{-1} t per column. Throws SingularMatrixError when the
/// clipped T has condition number >= 1e12.
CMatrix ls_detect(const CMatrix& T, const CMatrix& t, double rho_ul);

/// Hard decisions (nearest point) for a K x tau soft estimate; indices are
/// column-major (user fastest).
std::vector<int> hard_decide(const CMatrix& s_hat, const Constellation& cons);

/// H_bar = T^{1/2}, y_bar = T^{-1/2} t, so that ||y_bar - sqrt(rho) H_bar s||^2
/// equals the stacked ML metric up to a constant.
struct WhitenedModel {
  CMatrix H_bar;  // K x K
  CMatrix y_bar;  // K x tau
  int clipped = 0;  // eigenvalues raised to the floor
};

WhitenedModel whiten(const CMatrix& T, const CMatrix& t, double floor = kEigenFloor);

/// ||y - sqrt(rho) H s||^2 for the symbol indices `s` (length K).
double whitened_metric(const CMatrix& H, const CVector& y, double rho_ul, const Constellation& cons,
                       std::span<const int> s);

struct MlOptions {
  bool sphere = true;
  /// Largest |S|^K enumerated without the sphere search.
  std::uint64_t exhaustive_budget = std::uint64_t{1} << 20;
};

struct MlDecision {
  std::vector<int> symbols;  // length K
  double metric = 0;
  std::uint64_t nodes = 0;  // tree nodes (sphere) or hypotheses (exhaustive)
};

/// argmin over S^K of ||y - sqrt(rho) H s||^2 for one channel use.
MlDecision ml_detect(const CMatrix& H, const CVector& y, double rho_ul, const Constellation& cons,
                     const MlOptions& opts = {});

enum class LlrMode { kExact, kMaxLog };

/// Bit LLRs ln(P(b=1)/P(b=0)) for the K log2|S| bits of one channel use
/// (user-major, MSB first). Exact mode enumerates S^K with log-sum-exp;
/// max-log uses the sphere search (or enumeration when opts.sphere is false)
/// with one constrained counter-hypothesis search per bit.
RVector soft_llrs(const CMatrix& H, const CVector& y, double rho_ul, const Constellation& cons,
                  LlrMode mode, const MlOptions& opts = {});

/// Sphere search over a real lattice. Exposed for tests and the Python layer.
class SphereSearch {
 public:
  /// Model y = sqrt(rho) H s + w in complex form, QAM constellation.
  SphereSearch(const CMatrix& H, const CVector& y, double rho_ul, const Constellation& cons);

  /// Minimum metric with optional restriction: real dimension `dim` (0..2K-1,
  /// in-phase of user k is 2k, quadrature 2k+1) limited to axis levels whose
  /// Gray label has bit `label_bit` equal to `label_value`. dim < 0 means no
  /// restriction. Returns the per-dimension level indices.
  std::vector<int> search(int dim = -1, int label_bit = 0, int label_value = 0);

  /// Symbol indices of a level vector from search().
  std::vector<int> to_symbols(const std::vector<int>& levels) const;
  std::uint64_t nodes() const { return nodes_; }

 private:
  const Constellation& cons_;
  int dims_;
  RMatrix R_;
  RVector y_;
  std::vector<double> levels_;
  std::uint64_t nodes_ = 0;
};

}  // namespace cfota
