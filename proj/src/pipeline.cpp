#include "cfota/pipeline.hpp"

namespace cfota {

FronthaulSetup make_fronthaul(const NetworkLayout& layout, int N, int M, Rng& rng) {
  FronthaulSetup fh;
  fh.G = sample_ap_cpu(layout, N, M, rng);
  const int L = static_cast<int>(fh.G.size());
  for (int l = 0; l < L; ++l) {
    fh.gain.push_back(fronthaul_gain(layout, l));
    fh.W.push_back(zf_precoder(fh.G[static_cast<size_t>(l)]));
    fh.EWW.push_back(expected_precoder_gram(fh.gain.back(), N, M));
  }
  return fh;
}

std::vector<double> phase1_powers(const Phase1Moments& m, const FronthaulSetup& fh, int M) {
  const int chunks = chunk_count(static_cast<int>(m.mu.size()), M);
  std::vector<double> out;
  for (size_t l = 0; l < fh.EWW.size(); ++l)
    out.push_back(phase_power(phase_energy(m.second_moment(static_cast<int>(l)), fh.EWW[l], 1.0), chunks));
  return out;
}

std::vector<double> phase2_powers(const Phase2Moments& m, int tau, const FronthaulSetup& fh, int M) {
  const int K = static_cast<int>(m.C.rows());
  const int chunks = chunk_count(K * tau, M);
  std::vector<double> out;
  for (size_t l = 0; l < fh.EWW.size(); ++l)
    out.push_back(phase_power(phase_energy_blocks(m.C_l[l], tau, fh.EWW[l], 1.0), chunks));
  return out;
}

PhaseResult run_phase(const std::vector<CVector>& packed, const std::vector<double>& powers,
                      double p_max_normalized, const FronthaulSetup& fh, const ChunkPrior& prior,
                      EstimatorKind kind, const CMatrix& noise) {
  if (packed.empty() || packed.size() != fh.W.size())
    throw ValidationError("run_phase: one packed vector per AP required");
  const int M = static_cast<int>(fh.W.front().cols());
  const int length = static_cast<int>(packed.front().size());
  PhaseResult out;
  out.powers = powers;
  out.rho_c = scale_factor(powers, p_max_normalized);
  std::vector<CMatrix> frames;
  out.truth = CVector::Zero(length);
  for (const CVector& x : packed) {
    frames.push_back(chunk(x, M));
    out.truth += x;
  }
  out.Z = ota_transmit(frames, fh.W, fh.G, out.rho_c, noise);
  out.estimate = estimate_phase(out.Z, out.rho_c, kind, prior, length);
  return out;
}

LocalStatistics sum_statistics(const std::vector<LocalStatistics>& stats) {
  if (stats.empty()) throw ValidationError("sum_statistics: no APs");
  LocalStatistics out = stats.front();
  for (size_t l = 1; l < stats.size(); ++l) {
    out.T += stats[l].T;
    out.t += stats[l].t;
  }
  return out;
}

}  // namespace cfota
