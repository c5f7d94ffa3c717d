#include "cfota/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <thread>

#include "cfota/detectors.hpp"
#include "cfota/ldpc.hpp"
#include "cfota/pipeline.hpp"

namespace cfota {

std::string ExperimentResult::to_csv() const {
  std::string out = "value,metric,stderr,trials,label\n";
  char buf[128];
  for (const ResultRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%lld,", r.value, r.metric, r.stderr,
                  static_cast<long long>(r.trials));
    out += buf;
    out += r.label;
    out += "\n";
  }
  return out;
}

const ResultRow& ExperimentResult::at(const std::string& label, double value) const {
  for (const ResultRow& r : rows)
    if (r.label == label && std::abs(r.value - value) < 1e-9) return r;
  throw std::out_of_range("no row for " + label);
}

std::vector<ResultRow> ExperimentResult::series(const std::string& label) const {
  std::vector<ResultRow> out;
  for (const ResultRow& r : rows)
    if (r.label == label) out.push_back(r);
  return out;
}

std::vector<std::string> ExperimentResult::labels() const {
  std::vector<std::string> out;
  for (const ResultRow& r : rows)
    if (std::find(out.begin(), out.end(), r.label) == out.end()) out.push_back(r.label);
  return out;
}

namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

int thread_count(const RunOptions& opts) {
  if (opts.threads > 0) return opts.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [begin, end) on contiguous slices; fn writes only to
// its own slot so the caller can reduce in index order.
template <typename Fn>
void parallel_for(std::int64_t begin, std::int64_t end, int threads, Fn&& fn) {
  const std::int64_t n = end - begin;
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<std::int64_t>(threads, n));
  if (workers <= 1) {
    for (std::int64_t i = begin; i < end; ++i) fn(0, i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::int64_t lo = begin + n * w / workers;
      const std::int64_t hi = begin + n * (w + 1) / workers;
      try {
        for (std::int64_t i = lo; i < hi; ++i) fn(w, i);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Random draws of one trial (one UL coherence block).
struct TrialDraw {
  CorrelationSet corr;
  std::vector<CMatrix> H;
  SymbolFrame frame;
  std::vector<CMatrix> ap_noise;
};

class Scenario {
 public:
  Scenario(const SystemConfig& cfg, ExperimentId exp) : cfg_(cfg), exp_(static_cast<std::uint64_t>(exp)) {
    Rng layout_rng = Rng::substream(cfg.seed, exp_, 0, Stream::kLayout);
    fixed_layout_ = generate_layout(cfg, layout_rng);
  }

  NetworkLayout layout(std::int64_t trial) const {
    if (!cfg_.redraw_layout) return fixed_layout_;
    Rng rng = Rng::substream(cfg_.seed, exp_, static_cast<std::uint64_t>(trial), Stream::kLayout);
    return generate_layout(cfg_, rng);
  }

  // Frame bits come from `frame` when given, otherwise uniform symbols.
  TrialDraw draw(std::int64_t trial, int tau, const Constellation& cons,
                 const std::optional<SymbolFrame>& frame = std::nullopt) const {
    TrialDraw d;
    const auto t = static_cast<std::uint64_t>(trial);
    d.corr = build_correlations(layout(trial), cfg_);
    Rng ch = Rng::substream(cfg_.seed, exp_, t, Stream::kUeChannel);
    d.H = sample_ue_ap(d.corr, ch);
    if (frame) {
      d.frame = *frame;
    } else {
      Rng bits = Rng::substream(cfg_.seed, exp_, t, Stream::kBits);
      d.frame = random_frame(cfg_.K, tau, cons, bits);
    }
    Rng noise = Rng::substream(cfg_.seed, exp_, t, Stream::kApNoise);
    for (int l = 0; l < cfg_.L; ++l) d.ap_noise.push_back(noise.complex_normal_matrix(cfg_.N, d.frame.s.cols()));
    return d;
  }

  CMatrix fronthaul_noise(std::int64_t trial, Phase phase, Eigen::Index cols) const {
    const std::uint64_t key = static_cast<std::uint64_t>(trial) * 2 + (phase == Phase::kGramian ? 0 : 1);
    Rng rng = Rng::substream(cfg_.seed, exp_, key, Stream::kFronthaulNoise);
    return rng.complex_normal_matrix(cfg_.M, cols);
  }

  // Per-worker cache: G is redrawn only when the fronthaul epoch changes.
  const FronthaulSetup& fronthaul(std::int64_t trial, std::optional<std::pair<std::int64_t, FronthaulSetup>>& cache) const {
    const std::int64_t epoch = cfg_.fronthaul_coherence_blocks == 0 ? 0 : trial / cfg_.fronthaul_coherence_blocks;
    if (!cache || cache->first != epoch) {
      Rng rng = Rng::substream(cfg_.seed, exp_, static_cast<std::uint64_t>(epoch), Stream::kFronthaulChannel);
      cache.emplace(epoch, make_fronthaul(fixed_layout_, cfg_.N, cfg_.M, rng));
    }
    return cache->second;
  }

 private:
  const SystemConfig& cfg_;
  std::uint64_t exp_;
  NetworkLayout fixed_layout_;
};

using FronthaulCache = std::optional<std::pair<std::int64_t, FronthaulSetup>>;

// Per-AP pieces of y that do not depend on rho_ul: T_l s and H_l^H n_l.
struct LocalParts {
  std::vector<CMatrix> T;
  std::vector<CMatrix> Ts;
  std::vector<CMatrix> Hn;
};

LocalParts local_parts(const TrialDraw& d) {
  LocalParts p;
  for (size_t l = 0; l < d.H.size(); ++l) {
    p.T.push_back(d.H[l].adjoint() * d.H[l]);
    p.Ts.push_back(p.T.back() * d.frame.s);
    p.Hn.push_back(d.H[l].adjoint() * d.ap_noise[l]);
  }
  return p;
}

std::vector<CMatrix> matched_filter(const LocalParts& p, double rho) {
  const double g = std::sqrt(rho);
  std::vector<CMatrix> t;
  for (size_t l = 0; l < p.T.size(); ++l) t.push_back(g * p.Ts[l] + p.Hn[l]);
  return t;
}

// One phase at the CPU: the frames, their sum and the reported powers.
struct PhaseFrames {
  std::vector<CMatrix> frames;
  CVector truth;
  int length = 0;
  std::vector<double> powers;
};

PhaseFrames gramian_frames(const LocalParts& p, const Phase1Moments& m, const FronthaulSetup& fh, int M) {
  PhaseFrames f;
  f.length = static_cast<int>(m.mu.size());
  f.truth = CVector::Zero(f.length);
  for (const CMatrix& T : p.T) {
    const CVector x = pack_upper(T);
    f.truth += x;
    f.frames.push_back(chunk(x, M));
  }
  f.powers = phase1_powers(m, fh, M);
  return f;
}

PhaseFrames matched_frames(const std::vector<CMatrix>& t, const Phase2Moments& m, const FronthaulSetup& fh,
                           int M) {
  PhaseFrames f;
  const int tau = static_cast<int>(t.front().cols());
  f.length = static_cast<int>(t.front().size());
  f.truth = CVector::Zero(f.length);
  for (const CMatrix& tl : t) {
    const CVector x = pack_columns(tl);
    f.truth += x;
    f.frames.push_back(chunk(x, M));
  }
  f.powers = phase2_powers(m, tau, fh, M);
  return f;
}

struct OtaOutcome {
  double rho_c = 0;
  CMatrix Z;
};

OtaOutcome transmit(const PhaseFrames& f, const FronthaulSetup& fh, double p_max_norm, const CMatrix& noise) {
  OtaOutcome o;
  o.rho_c = scale_factor(f.powers, p_max_norm);
  o.Z = ota_transmit(f.frames, fh.W, fh.G, o.rho_c, noise);
  return o;
}

double p_max_normalized(const SystemConfig& cfg, double p_max_w) { return p_max_w / cfg.noise_power_w(); }

// Hard decisions for every channel use (column-major, user fastest).
// Singular LS inversions mark every symbol of the block as wrong (-1).
std::vector<int> detect_block(const CMatrix& T, const CMatrix& t, double rho, const Constellation& cons,
                              DetectorKind kind) {
  const Eigen::Index K = T.rows();
  switch (kind) {
    case DetectorKind::kLmmse:
      return hard_decide(lmmse_detect(T, t, rho), cons);
    case DetectorKind::kLs:
      try {
        return hard_decide(ls_detect(T, t, rho), cons);
      } catch (const SingularMatrixError&) {
        return std::vector<int>(static_cast<size_t>(t.size()), -1);
      }
    case DetectorKind::kMl:
    case DetectorKind::kSoft: {
      const WhitenedModel w = whiten(T, t);
      std::vector<int> out;
      out.reserve(static_cast<size_t>(t.size()));
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        const CVector y = w.y_bar.col(c);
        if (kind == DetectorKind::kMl) {
          const MlDecision d = ml_detect(w.H_bar, y, rho, cons);
          out.insert(out.end(), d.symbols.begin(), d.symbols.end());
        } else {
          const RVector llr = soft_llrs(w.H_bar, y, rho, cons, LlrMode::kMaxLog);
          const int bps = cons.bits_per_symbol();
          for (Eigen::Index k = 0; k < K; ++k) {
            int index = 0;
            for (int b = 0; b < bps; ++b) index = (index << 1) | (llr(k * bps + b) > 0 ? 1 : 0);
            out.push_back(index);
          }
        }
      }
      return out;
    }
  }
  throw ValidationError("unknown detector");
}

std::int64_t count_symbol_errors(const std::vector<int>& detected, const std::vector<int>& sent) {
  std::int64_t e = 0;
  for (size_t i = 0; i < sent.size(); ++i) e += detected[i] != sent[i];
  return e;
}

// Error counts of one trial for every label.
struct TrialCounts {
  std::vector<std::int64_t> errors;  // metric numerator
  std::vector<std::int64_t> stops;   // counts driving the stopping rule
};

struct LabelTally {
  std::int64_t errors = 0;
  double sum_sq = 0;
  std::int64_t stops = 0;
};

struct PointTally {
  std::int64_t trials = 0;
  std::vector<LabelTally> labels;
};

// Batches of trials until every label has min_errors stop counts or the cap.
template <typename TrialFn>
PointTally run_until(const SystemConfig& cfg, const RunOptions& opts, size_t labels, TrialFn&& fn,
                     const std::string& what) {
  PointTally tally;
  tally.labels.assign(labels, {});
  const int threads = thread_count(opts);
  const std::int64_t cap = cfg.trials;
  const std::int64_t batch = std::max<std::int64_t>(1, cfg.sweep.batch_trials);
  while (tally.trials < cap) {
    const std::int64_t n = std::min(batch, cap - tally.trials);
    std::vector<TrialCounts> results(static_cast<size_t>(n));
    const std::int64_t first = tally.trials;
    parallel_for(0, n, threads, [&](int worker, std::int64_t i) {
      results[static_cast<size_t>(i)] = fn(worker, first + i);
    });
    for (const TrialCounts& r : results) {
      for (size_t j = 0; j < labels; ++j) {
        tally.labels[j].errors += r.errors[j];
        tally.labels[j].sum_sq += static_cast<double>(r.errors[j]) * static_cast<double>(r.errors[j]);
        tally.labels[j].stops += r.stops[j];
      }
    }
    tally.trials += n;
    if (opts.progress) opts.progress(what + " trials=" + std::to_string(tally.trials));
    bool done = true;
    for (const LabelTally& l : tally.labels) done = done && l.stops >= cfg.sweep.min_errors;
    if (done) break;
  }
  return tally;
}

// Rate and its standard error from per-trial counts over `units` per trial.
std::pair<double, double> rate_and_stderr(const LabelTally& l, std::int64_t trials, double units) {
  const double n = static_cast<double>(trials);
  const double mean = static_cast<double>(l.errors) / n;
  const double var = trials > 1 ? std::max(0.0, (l.sum_sq - n * mean * mean) / (n - 1)) : 0.0;
  return {mean / units, std::sqrt(var / n) / units};
}

ExperimentResult make_result(const SystemConfig& cfg, std::string experiment, std::string sweep,
                             std::string metric) {
  ExperimentResult r;
  r.experiment = std::move(experiment);
  r.sweep_variable = std::move(sweep);
  r.metric_name = std::move(metric);
  r.seed = cfg.seed;
  r.fingerprint = config_fingerprint(cfg);
  return r;
}

// Rows grouped by label, each label in sweep order.
void sort_rows(ExperimentResult& r, const std::vector<std::string>& order) {
  std::stable_sort(r.rows.begin(), r.rows.end(), [&](const ResultRow& a, const ResultRow& b) {
    const auto ia = std::find(order.begin(), order.end(), a.label) - order.begin();
    const auto ib = std::find(order.begin(), order.end(), b.label) - order.begin();
    return ia < ib;
  });
}

}  // namespace

ExperimentResult run_nmse(const SystemConfig& cfg, const RunOptions& opts) {
  validate(cfg);
  const Constellation cons = Constellation::from_name(cfg.modulation);
  const Scenario scenario(cfg, ExperimentId::kNmse);
  const auto& rhos = cfg.sweep.rho_ul_db;
  const auto& pmaxes = cfg.sweep.p_max_w;
  const auto& ests = opts.estimators;
  const size_t R = rhos.size(), P = pmaxes.size(), E = ests.size();
  // accumulator index: ((phase * P + p) * E + e) * R + r
  const size_t slots = 2 * P * E * R;
  auto slot = [&](int phase, size_t p, size_t e, size_t r) { return ((phase * P + p) * E + e) * R + r; };

  const int threads = thread_count(opts);
  std::vector<FronthaulCache> caches(static_cast<size_t>(threads));
  std::vector<NmseAccumulator> acc(slots);
  const std::int64_t batch = std::max<std::int64_t>(1, cfg.sweep.batch_trials);
  for (std::int64_t done = 0; done < cfg.trials;) {
    const std::int64_t n = std::min(batch, cfg.trials - done);
    std::vector<std::vector<std::pair<double, double>>> per_trial(static_cast<size_t>(n));
    parallel_for(0, n, threads, [&](int worker, std::int64_t i) {
      const std::int64_t trial = done + i;
      auto& out = per_trial[static_cast<size_t>(i)];
      out.assign(slots, {0.0, 0.0});
      const TrialDraw d = scenario.draw(trial, cfg.tau_u, cons);
      const FronthaulSetup& fh = scenario.fronthaul(trial, caches[static_cast<size_t>(worker)]);
      const LocalParts parts = local_parts(d);
      const Phase1Moments m1 = phase1_moments(d.corr);
      const PhaseFrames f1 = gramian_frames(parts, m1, fh, cfg.M);
      const ChunkPrior prior1 = phase1_prior(m1, cfg.M);
      const CMatrix noise1 = scenario.fronthaul_noise(trial, Phase::kGramian, f1.frames.front().cols());
      const double x1 = f1.truth.squaredNorm();
      for (size_t p = 0; p < P; ++p) {
        const OtaOutcome o = transmit(f1, fh, p_max_normalized(cfg, pmaxes[p]), noise1);
        for (size_t e = 0; e < E; ++e) {
          const CVector est = estimate_phase(o.Z, o.rho_c, ests[e], prior1, f1.length);
          const double err = (est - f1.truth).squaredNorm();
          // The Gramian does not depend on rho_ul; every sweep point sees the same draw.
          for (size_t r = 0; r < R; ++r) out[slot(0, p, e, r)] = {err, x1};
        }
      }
      CMatrix noise2;
      for (size_t r = 0; r < R; ++r) {
        const double rho = db_to_linear(rhos[r]);
        const PhaseFrames f2 = matched_frames(matched_filter(parts, rho), phase2_moments(d.corr, rho), fh, cfg.M);
        if (noise2.size() == 0) noise2 = scenario.fronthaul_noise(trial, Phase::kMatchedFilter, f2.frames.front().cols());
        const ChunkPrior prior2 = phase2_prior(phase2_moments(d.corr, rho), cfg.tau_u, cfg.M);
        const double x2 = f2.truth.squaredNorm();
        for (size_t p = 0; p < P; ++p) {
          const OtaOutcome o = transmit(f2, fh, p_max_normalized(cfg, pmaxes[p]), noise2);
          for (size_t e = 0; e < E; ++e) {
            const CVector est = estimate_phase(o.Z, o.rho_c, ests[e], prior2, f2.length);
            out[slot(1, p, e, r)] = {(est - f2.truth).squaredNorm(), x2};
          }
        }
      }
    });
    for (const auto& t : per_trial)
      for (size_t s = 0; s < slots; ++s) acc[s].add(t[s].first, t[s].second);
    done += n;
    if (opts.progress) opts.progress("nmse trials=" + std::to_string(done));
  }

  ExperimentResult result = make_result(cfg, "nmse", "rho_ul_db", "nmse_db");
  for (int phase = 0; phase < 2; ++phase)
    for (size_t p = 0; p < P; ++p)
      for (size_t e = 0; e < E; ++e) {
        const std::string label = std::string(phase == 0 ? "gramian" : "matched-filter") + "/" +
                                  to_string(ests[e]) + "/pmax=" + fmt_g(pmaxes[p]);
        for (size_t r = 0; r < R; ++r) {
          const NmseAccumulator& a = acc[slot(phase, p, e, r)];
          result.rows.push_back({rhos[r], a.db(), a.stderr_db(), a.count(), label});
        }
      }
  return result;
}

namespace {

// OTA statistics (T_hat, t_hat) for one P_max and estimator.
struct OtaStatistics {
  CMatrix T;
  CMatrix t;
};

struct BlockContext {
  PhaseFrames f1, f2;
  ChunkPrior prior1, prior2;
  CMatrix noise1, noise2;
};

BlockContext block_context(const SystemConfig& cfg, const Scenario& scenario, std::int64_t trial,
                           const TrialDraw& d, const LocalParts& parts, const std::vector<CMatrix>& t,
                           double rho, const FronthaulSetup& fh, bool need_prior) {
  BlockContext c;
  const int tau = static_cast<int>(t.front().cols());
  const Phase1Moments m1 = phase1_moments(d.corr);
  const Phase2Moments m2 = phase2_moments(d.corr, rho);
  c.f1 = gramian_frames(parts, m1, fh, cfg.M);
  c.f2 = matched_frames(t, m2, fh, cfg.M);
  if (need_prior) {
    c.prior1 = phase1_prior(m1, cfg.M);
    c.prior2 = phase2_prior(m2, tau, cfg.M);
  }
  c.noise1 = scenario.fronthaul_noise(trial, Phase::kGramian, c.f1.frames.front().cols());
  c.noise2 = scenario.fronthaul_noise(trial, Phase::kMatchedFilter, c.f2.frames.front().cols());
  return c;
}

OtaStatistics ota_statistics(const BlockContext& c, const FronthaulSetup& fh, double p_max_norm,
                             EstimatorKind kind, int K, int tau) {
  const OtaOutcome o1 = transmit(c.f1, fh, p_max_norm, c.noise1);
  const OtaOutcome o2 = transmit(c.f2, fh, p_max_norm, c.noise2);
  const CVector x1 = estimate_phase(o1.Z, o1.rho_c, kind, c.prior1, c.f1.length);
  const CVector x2 = estimate_phase(o2.Z, o2.rho_c, kind, c.prior2, c.f2.length);
  const EstimatedStatistics s = unpack(x1, x2, K, tau, kind);
  return {s.T_hat, s.t_hat};
}

bool needs_prior(const std::vector<EstimatorKind>& ests) {
  return std::find(ests.begin(), ests.end(), EstimatorKind::kLmmse) != ests.end();
}

}  // namespace

ExperimentResult run_ser(const SystemConfig& cfg, const RunOptions& opts) {
  validate(cfg);
  const Constellation cons = Constellation::from_name(cfg.modulation);
  const Scenario scenario(cfg, ExperimentId::kSerVsSnr);
  const auto& pmaxes = cfg.sweep.p_max_w;
  const auto& ests = opts.estimators;

  std::vector<std::string> labels;
  if (opts.wired_baseline) labels.push_back("wired");
  for (EstimatorKind e : ests)
    for (double p : pmaxes) labels.push_back("ota-" + to_string(e) + "/pmax=" + fmt_g(p));

  const int threads = thread_count(opts);
  std::vector<FronthaulCache> caches(static_cast<size_t>(threads));
  const double units = static_cast<double>(cfg.K) * cfg.tau_u;
  ExperimentResult result = make_result(cfg, "ser-vs-snr", "rho_ul_db", "ser");
  for (double rho_db : cfg.sweep.rho_ul_db) {
    const double rho = db_to_linear(rho_db);
    const PointTally tally = run_until(cfg, opts, labels.size(), [&](int worker, std::int64_t trial) {
      TrialCounts out;
      const TrialDraw d = scenario.draw(trial, cfg.tau_u, cons);
      const FronthaulSetup& fh = scenario.fronthaul(trial, caches[static_cast<size_t>(worker)]);
      const LocalParts parts = local_parts(d);
      const std::vector<CMatrix> t = matched_filter(parts, rho);
      if (opts.wired_baseline) {
        CMatrix T = parts.T.front(), ts = t.front();
        for (size_t l = 1; l < t.size(); ++l) {
          T += parts.T[l];
          ts += t[l];
        }
        out.errors.push_back(count_symbol_errors(detect_block(T, ts, rho, cons, cfg.detector), d.frame.indices));
      }
      const BlockContext c = block_context(cfg, scenario, trial, d, parts, t, rho, fh, needs_prior(ests));
      for (EstimatorKind e : ests) {
        for (double p : pmaxes) {
          const OtaStatistics s = ota_statistics(c, fh, p_max_normalized(cfg, p), e, cfg.K, cfg.tau_u);
          out.errors.push_back(count_symbol_errors(detect_block(s.T, s.t, rho, cons, cfg.detector), d.frame.indices));
        }
      }
      out.stops = out.errors;
      return out;
    }, "ser rho=" + fmt_g(rho_db));
    for (size_t j = 0; j < labels.size(); ++j) {
      const auto [ser, se] = rate_and_stderr(tally.labels[j], tally.trials, units);
      result.rows.push_back({rho_db, ser, se, tally.trials, labels[j]});
    }
  }
  sort_rows(result, labels);
  return result;
}

ExperimentResult run_ser_vs_pmax(const SystemConfig& cfg, const RunOptions& opts) {
  validate(cfg);
  const Constellation cons = Constellation::from_name(cfg.modulation);
  const Scenario scenario(cfg, ExperimentId::kSerVsPmax);
  const auto& ests = opts.estimators;
  const int threads = thread_count(opts);
  std::vector<FronthaulCache> caches(static_cast<size_t>(threads));
  const double units = static_cast<double>(cfg.K) * cfg.tau_u;
  ExperimentResult result = make_result(cfg, "ser-vs-pmax", "p_max_dbm", "ser");
  std::vector<std::string> order;

  for (double rho_db : cfg.sweep.pmax_rho_ul_db) {
    const double rho = db_to_linear(rho_db);
    std::vector<std::string> labels;
    const std::string prefix = "rho=" + fmt_g(rho_db) + "/";
    if (opts.wired_baseline) labels.push_back(prefix + "wired");
    for (EstimatorKind e : ests) labels.push_back(prefix + "ota-" + to_string(e));
    order.insert(order.end(), labels.begin(), labels.end());

    for (double dbm : cfg.sweep.p_max_dbm) {
      const double p_w = std::pow(10.0, (dbm - 30.0) / 10.0);
      const PointTally tally = run_until(cfg, opts, labels.size(), [&](int worker, std::int64_t trial) {
        TrialCounts out;
        const TrialDraw d = scenario.draw(trial, cfg.tau_u, cons);
        const FronthaulSetup& fh = scenario.fronthaul(trial, caches[static_cast<size_t>(worker)]);
        const LocalParts parts = local_parts(d);
        const std::vector<CMatrix> t = matched_filter(parts, rho);
        if (opts.wired_baseline) {
          CMatrix T = parts.T.front(), ts = t.front();
          for (size_t l = 1; l < t.size(); ++l) {
            T += parts.T[l];
            ts += t[l];
          }
          out.errors.push_back(count_symbol_errors(detect_block(T, ts, rho, cons, cfg.detector), d.frame.indices));
        }
        const BlockContext c = block_context(cfg, scenario, trial, d, parts, t, rho, fh, needs_prior(ests));
        for (EstimatorKind e : ests) {
          const OtaStatistics s = ota_statistics(c, fh, p_max_normalized(cfg, p_w), e, cfg.K, cfg.tau_u);
          out.errors.push_back(count_symbol_errors(detect_block(s.T, s.t, rho, cons, cfg.detector), d.frame.indices));
        }
        out.stops = out.errors;
        return out;
      }, "ser-vs-pmax rho=" + fmt_g(rho_db) + " pmax_dbm=" + fmt_g(dbm));
      for (size_t j = 0; j < labels.size(); ++j) {
        const auto [ser, se] = rate_and_stderr(tally.labels[j], tally.trials, units);
        result.rows.push_back({dbm, ser, se, tally.trials, labels[j]});
      }
    }
  }
  sort_rows(result, order);
  return result;
}

namespace {

ldpc::ParityCheckMatrix coded_matrix(const SystemConfig& cfg) {
  if (cfg.coding.prototype_path.empty()) return ldpc::expand_prototype(ldpc::ieee80211_n1944_r12());
  const std::filesystem::path path(cfg.coding.prototype_path);
  if (path.extension() == ".alist") return ldpc::load_alist(path);
  return ldpc::expand_prototype(ldpc::load_prototype_csv(path));
}

// Max-log LLRs for a whole block, codeword bit order per user.
std::vector<std::vector<double>> block_llrs(const CMatrix& T, const CMatrix& t, double rho,
                                            const Constellation& cons) {
  const int K = static_cast<int>(T.rows());
  const int bps = cons.bits_per_symbol();
  const WhitenedModel w = whiten(T, t);
  std::vector<std::vector<double>> out(static_cast<size_t>(K));
  for (auto& v : out) v.reserve(static_cast<size_t>(t.cols() * bps));
  for (Eigen::Index c = 0; c < t.cols(); ++c) {
    const CVector y = w.y_bar.col(c);
    const RVector llr = soft_llrs(w.H_bar, y, rho, cons, LlrMode::kMaxLog);
    for (int k = 0; k < K; ++k)
      for (int b = 0; b < bps; ++b) out[static_cast<size_t>(k)].push_back(llr(k * bps + b));
  }
  return out;
}

}  // namespace

ExperimentResult run_coded_ber(const SystemConfig& cfg, const RunOptions& opts) {
  validate(cfg);
  const Constellation cons = Constellation::from_name(cfg.modulation);
  const ldpc::ParityCheckMatrix H = coded_matrix(cfg);
  const ldpc::Encoder encoder(H);
  const int bps = cons.bits_per_symbol();
  if (encoder.n() % bps != 0) throw ValidationError("codeword length must be a multiple of log2|S|");
  const int tau = encoder.n() / bps;
  const double rate = static_cast<double>(encoder.k()) / encoder.n();
  SystemConfig run_cfg = cfg;
  run_cfg.tau_u = tau;
  const Scenario scenario(run_cfg, ExperimentId::kCodedBer);
  const auto& ests = opts.estimators;
  const auto& pmaxes = cfg.sweep.coded_p_max_w;

  std::vector<std::string> labels;
  if (opts.wired_baseline) labels.push_back("wired");
  for (EstimatorKind e : ests)
    for (double p : pmaxes) labels.push_back("ota-" + to_string(e) + "/pmax=" + fmt_g(p));
  labels.push_back("uncoded-wired");
  const size_t uncoded = labels.size() - 1;

  const int threads = thread_count(opts);
  std::vector<FronthaulCache> caches(static_cast<size_t>(threads));
  ExperimentResult result = make_result(cfg, "coded-ber", "ebn0_db", "ber");
  for (double ebn0 : cfg.sweep.ebn0_db) {
    const double rho = db_to_linear(ebn0 + linear_to_db(bps * rate));
    const double rho_uncoded = db_to_linear(ebn0 + linear_to_db(bps));
    const PointTally tally = run_until(run_cfg, opts, labels.size(), [&](int worker, std::int64_t trial) {
      // One codeword per user per block.
      Rng bit_rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(ExperimentId::kCodedBer),
                                   static_cast<std::uint64_t>(trial), Stream::kBits);
      std::vector<std::vector<std::uint8_t>> msgs(static_cast<size_t>(cfg.K));
      std::vector<std::vector<std::uint8_t>> words(static_cast<size_t>(cfg.K));
      for (int k = 0; k < cfg.K; ++k) {
        auto& m = msgs[static_cast<size_t>(k)];
        m.resize(static_cast<size_t>(encoder.k()));
        for (auto& b : m) b = static_cast<std::uint8_t>(bit_rng.bit());
        words[static_cast<size_t>(k)] = encoder.encode(m);
      }
      std::vector<std::uint8_t> stream;
      stream.reserve(static_cast<size_t>(cfg.K * encoder.n()));
      for (int c = 0; c < tau; ++c)
        for (int k = 0; k < cfg.K; ++k)
          for (int b = 0; b < bps; ++b) stream.push_back(words[static_cast<size_t>(k)][static_cast<size_t>(c * bps + b)]);
      const TrialDraw d = scenario.draw(trial, tau, cons, modulate(stream, cfg.K, cons));
      const FronthaulSetup& fh = scenario.fronthaul(trial, caches[static_cast<size_t>(worker)]);
      const LocalParts parts = local_parts(d);
      const std::vector<CMatrix> t = matched_filter(parts, rho);

      TrialCounts out;
      auto decode_all = [&](const CMatrix& T, const CMatrix& ts) {
        const auto llrs = block_llrs(T, ts, rho, cons);
        std::int64_t bit_errors = 0, frame_errors = 0;
        for (int k = 0; k < cfg.K; ++k) {
          const ldpc::DecodeResult r = ldpc::decode_minsum(llrs[static_cast<size_t>(k)], H,
                                                           cfg.coding.max_iterations, cfg.coding.minsum_scale);
          const std::vector<std::uint8_t> got = encoder.extract(r.bits);
          std::int64_t e = 0;
          for (size_t i = 0; i < got.size(); ++i) e += got[i] != msgs[static_cast<size_t>(k)][i];
          bit_errors += e;
          frame_errors += e > 0;
        }
        out.errors.push_back(bit_errors);
        out.stops.push_back(frame_errors);
      };

      CMatrix T = parts.T.front();
      for (size_t l = 1; l < parts.T.size(); ++l) T += parts.T[l];
      if (opts.wired_baseline) {
        CMatrix ts = t.front();
        for (size_t l = 1; l < t.size(); ++l) ts += t[l];
        decode_all(T, ts);
      }
      const BlockContext c = block_context(run_cfg, scenario, trial, d, parts, t, rho, fh, needs_prior(ests));
      for (EstimatorKind e : ests) {
        for (double p : pmaxes) {
          const OtaStatistics s = ota_statistics(c, fh, p_max_normalized(cfg, p), e, cfg.K, tau);
          decode_all(s.T, s.t);
        }
      }
      // Uncoded reference: same channel and noise, all transmitted bits, Es = Eb log2|S|.
      const std::vector<CMatrix> tu = matched_filter(parts, rho_uncoded);
      CMatrix tsu = tu.front();
      for (size_t l = 1; l < tu.size(); ++l) tsu += tu[l];
      const std::vector<int> hard = detect_block(T, tsu, rho_uncoded, cons, DetectorKind::kMl);
      std::int64_t e = 0;
      for (size_t i = 0; i < hard.size(); ++i)
        for (int b = 0; b < bps; ++b) e += cons.bit(hard[i], b) != cons.bit(d.frame.indices[i], b);
      out.errors.push_back(e);
      out.stops.push_back(e);
      (void)uncoded;
      return out;
    }, "coded-ber ebn0=" + fmt_g(ebn0));
    for (size_t j = 0; j < labels.size(); ++j) {
      const double units = j == uncoded ? static_cast<double>(cfg.K) * encoder.n()
                                        : static_cast<double>(cfg.K) * encoder.k();
      const auto [ber, se] = rate_and_stderr(tally.labels[j], tally.trials, units);
      result.rows.push_back({ebn0, ber, se, tally.trials, labels[j]});
    }
  }
  sort_rows(result, labels);
  return result;
}

bool MomentReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const MomentCheck& c) { return c.pass; });
}

ExperimentResult MomentReport::as_result(const SystemConfig& cfg) const {
  ExperimentResult r = make_result(cfg, "validate-moments", "analytic", "empirical");
  for (const MomentCheck& c : checks) r.rows.push_back({c.analytic, c.empirical, c.stderr, draws, c.quantity});
  return r;
}

namespace {

MomentCheck compare(std::string name, double analytic, cdouble empirical, double se) {
  MomentCheck c;
  c.quantity = std::move(name);
  c.analytic = analytic;
  c.stderr = se;
  if (analytic != 0.0) {
    c.empirical = empirical.real();
    c.pass = std::abs(empirical - analytic) <= kMomentRelTol * std::abs(analytic);
  } else {
    c.empirical = std::abs(empirical);
    c.pass = std::abs(empirical) <= kMomentZeroSigmas * se;
  }
  return c;
}

std::string idx(const std::string& base, Eigen::Index i) { return base + "[" + std::to_string(i) + "]"; }
std::string idx(const std::string& base, Eigen::Index i, Eigen::Index j) {
  return base + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
}

}  // namespace

MomentReport validate_moments(const SystemConfig& cfg, std::int64_t draws, const RunOptions&) {
  validate(cfg);
  const Constellation cons = Constellation::from_name(cfg.modulation);
  const auto exp = static_cast<std::uint64_t>(ExperimentId::kMoments);
  Rng layout_rng = Rng::substream(cfg.seed, exp, 0, Stream::kLayout);
  const NetworkLayout layout = generate_layout(cfg, layout_rng);
  const CorrelationSet corr = build_correlations(layout, cfg);
  const Phase1Moments m1 = phase1_moments(corr);
  const Phase2Moments m2 = phase2_moments(corr, cfg.rho_ul);
  Rng rng = Rng::substream(cfg.seed, exp, 0, Stream::kOracle);
  const EmpiricalMoments emp = mc_moment_oracle(corr, cfg.rho_ul, draws, cons, rng);

  MomentReport report;
  report.draws = draws;
  const Eigen::Index P = m1.mu.size();
  for (Eigen::Index i = 0; i < P; ++i)
    report.checks.push_back(compare(idx("phase1.mean", i), m1.mu(i), emp.mean1(i), emp.mean1_se(i)));
  for (Eigen::Index i = 0; i < P; ++i)
    for (Eigen::Index j = i; j < P; ++j)
      report.checks.push_back(compare(idx("phase1.cov", i, j), i == j ? m1.C_diag(i) : 0.0, emp.cov1(i, j),
                                      emp.cov1_se(i, j)));
  const int K = cfg.K;
  CMatrix own = CMatrix::Zero(K, K);
  for (const CMatrix& c : m2.C_l) own += c;
  const CMatrix cross = m2.C - own;
  const RVector mean2_se = (emp.cov2.diagonal().real() / static_cast<double>(draws)).cwiseSqrt();
  for (int k = 0; k < K; ++k) report.checks.push_back(compare(idx("phase2.mean", k), 0.0, emp.mean2(k), mean2_se(k)));
  for (int i = 0; i < K; ++i)
    for (int j = i; j < K; ++j) {
      report.checks.push_back(compare(idx("phase2.cov", i, j), m2.C(i, j).real(), emp.cov2(i, j), emp.cov2_se(i, j)));
      report.checks.push_back(
          compare(idx("phase2.cross", i, j), cross(i, j).real(), emp.cross2(i, j), emp.cross2_se(i, j)));
    }

  // Precoder Gram expectation against a Monte Carlo mean.
  const double gain = fronthaul_gain(layout, 0);
  const CMatrix eww = expected_precoder_gram(gain, cfg.N, cfg.M);
  Rng g_rng = Rng::substream(cfg.seed, exp, 1, Stream::kOracle);
  CMatrix s1 = CMatrix::Zero(cfg.M, cfg.M);
  RMatrix s2 = RMatrix::Zero(cfg.M, cfg.M);
  for (std::int64_t d = 0; d < draws; ++d) {
    const CMatrix W = zf_precoder(g_rng.complex_normal_matrix(cfg.N, cfg.M, gain));
    const CMatrix g = W.adjoint() * W;
    s1 += g;
    s2 += g.cwiseAbs2();
  }
  const double dn = static_cast<double>(draws);
  const CMatrix mean = s1 / dn;
  const RMatrix se = ((s2 / dn - mean.cwiseAbs2()).cwiseMax(0.0) / dn).cwiseSqrt();
  for (int i = 0; i < cfg.M; ++i)
    for (int j = i; j < cfg.M; ++j)
      report.checks.push_back(compare(idx("eww", i, j), eww(i, j).real(), mean(i, j), se(i, j)));
  return report;
}

PowerReport measure_fronthaul_power(const SystemConfig& cfg, const RunOptions& opts) {
  validate(cfg);
  const Constellation cons = Constellation::from_name(cfg.modulation);
  const Scenario scenario(cfg, ExperimentId::kPower);
  const double sigma2 = cfg.noise_power_w();
  const double p_norm = cfg.p_max_normalized();
  const int threads = thread_count(opts);
  std::vector<FronthaulCache> caches(static_cast<size_t>(threads));
  const size_t L = static_cast<size_t>(cfg.L);

  PowerReport report;
  report.p_max_w = cfg.P_max;
  report.phase1_w.assign(L, 0.0);
  report.phase2_w.assign(L, 0.0);
  std::vector<std::vector<double>> per_trial(static_cast<size_t>(cfg.trials));
  parallel_for(0, cfg.trials, threads, [&](int worker, std::int64_t trial) {
    const TrialDraw d = scenario.draw(trial, cfg.tau_u, cons);
    const FronthaulSetup& fh = scenario.fronthaul(trial, caches[static_cast<size_t>(worker)]);
    const LocalParts parts = local_parts(d);
    const PhaseFrames f1 = gramian_frames(parts, phase1_moments(d.corr), fh, cfg.M);
    const PhaseFrames f2 = matched_frames(matched_filter(parts, cfg.rho_ul), phase2_moments(d.corr, cfg.rho_ul), fh, cfg.M);
    auto& out = per_trial[static_cast<size_t>(trial)];
    out.assign(2 * L, 0.0);
    for (int phase = 0; phase < 2; ++phase) {
      const PhaseFrames& f = phase == 0 ? f1 : f2;
      const double rho_c = scale_factor(f.powers, p_norm);
      for (size_t l = 0; l < L; ++l) {
        const double energy = (fh.W[l] * f.frames[l]).squaredNorm() * rho_c;
        out[static_cast<size_t>(phase) * L + l] = energy / static_cast<double>(f.frames[l].cols()) * sigma2;
      }
    }
  });
  for (const auto& t : per_trial)
    for (size_t l = 0; l < L; ++l) {
      report.phase1_w[l] += t[l];
      report.phase2_w[l] += t[L + l];
    }
  for (size_t l = 0; l < L; ++l) {
    report.phase1_w[l] /= static_cast<double>(cfg.trials);
    report.phase2_w[l] /= static_cast<double>(cfg.trials);
  }
  report.trials = cfg.trials;
  return report;
}

}  // namespace cfota
