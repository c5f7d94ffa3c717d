#include "cfota/moments.hpp"

#include "cfota/channel.hpp"
#include "cfota/fronthaul.hpp"

namespace cfota {

namespace {

// trace(A B) without forming the product.
double trace_product(const CMatrix& A, const CMatrix& B) {
  return A.cwiseProduct(B.transpose()).sum().real();
}

}  // namespace

std::vector<int> diagonal_positions(int K) {
  std::vector<int> out;
  out.reserve(static_cast<size_t>(K));
  for (int j = 0; j < K; ++j) out.push_back(packed_index(K, j, j));
  return out;
}

CMatrix Phase1Moments::second_moment(int l) const {
  const RVector& m = mu_l[static_cast<size_t>(l)];
  RMatrix exx = m * m.transpose();
  exx.diagonal() += C_l_diag[static_cast<size_t>(l)];
  return exx.cast<cdouble>();
}

CMatrix Phase1Moments::covariance() const { return C_diag.cast<cdouble>().asDiagonal(); }

CMatrix Phase2Moments::cross(int l, int lp) const {
  const RVector prod = gram_mean[static_cast<size_t>(l)].cwiseProduct(gram_mean[static_cast<size_t>(lp)]);
  return (rho_ul * prod).cast<cdouble>().asDiagonal();
}

Phase1Moments phase1_moments(const CorrelationSet& corr) {
  const int K = corr.num_ues;
  const int L = corr.num_aps;
  const int P = packed_gramian_length(K);
  Phase1Moments out;
  out.mu = RVector::Zero(P);
  out.C_diag = RVector::Zero(P);
  out.mu_l.assign(static_cast<size_t>(L), RVector::Zero(P));
  out.C_l_diag.assign(static_cast<size_t>(L), RVector::Zero(P));

  for (int l = 0; l < L; ++l) {
    RVector& mu = out.mu_l[static_cast<size_t>(l)];
    RVector& c = out.C_l_diag[static_cast<size_t>(l)];
    for (int j = 0; j < K; ++j) {
      mu(packed_index(K, j, j)) = corr.at(j, l).trace().real();
      for (int jp = j; jp < K; ++jp) c(packed_index(K, j, jp)) = trace_product(corr.at(j, l), corr.at(jp, l));
    }
    out.mu += mu;
    out.C_diag += c;
  }
  return out;
}

Phase2Moments phase2_moments(const CorrelationSet& corr, double rho_ul) {
  const int K = corr.num_ues;
  const int L = corr.num_aps;
  Phase2Moments out;
  out.rho_ul = rho_ul;
  out.gram_mean.assign(static_cast<size_t>(L), RVector::Zero(K));
  out.C_l.assign(static_cast<size_t>(L), CMatrix::Zero(K, K));

  RVector sum_d = RVector::Zero(K);
  RVector sum_d2 = RVector::Zero(K);
  RVector sum_c = RVector::Zero(K);
  for (int l = 0; l < L; ++l) {
    CMatrix r_sum = CMatrix::Zero(corr.antennas, corr.antennas);
    for (int k = 0; k < K; ++k) r_sum += corr.at(k, l);

    RVector& d = out.gram_mean[static_cast<size_t>(l)];
    RVector quartic(K);  // diag of E[(H^H H)^2]
    for (int k = 0; k < K; ++k) {
      const double tr = corr.at(k, l).trace().real();
      d(k) = tr;
      quartic(k) = tr * tr + trace_product(corr.at(k, l), r_sum);
    }
    const RVector c = rho_ul * quartic + d;
    out.C_l[static_cast<size_t>(l)] = c.cast<cdouble>().asDiagonal();
    sum_c += c;
    sum_d += d;
    sum_d2 += d.cwiseAbs2();
  }
  // sum_{l != l'} rho D_l D_l' = rho ((sum D)^2 - sum D^2) for diagonal D.
  const RVector cross = rho_ul * (sum_d.cwiseAbs2() - sum_d2);
  out.C = (sum_c + cross).cast<cdouble>().asDiagonal();
  return out;
}

namespace {

// Running first/second/fourth moments of a complex vector about a shift.
struct VectorMoments {
  CVector shift;
  CVector s1;
  CMatrix s2;
  RMatrix s4;
  std::int64_t n = 0;

  explicit VectorMoments(const CVector& a)
      : shift(a),
        s1(CVector::Zero(a.size())),
        s2(CMatrix::Zero(a.size(), a.size())),
        s4(RMatrix::Zero(a.size(), a.size())) {}

  void add(const CVector& x) {
    const CVector d = x - shift;
    s1 += d;
    s2.noalias() += d * d.adjoint();
    const RVector a2 = d.cwiseAbs2();
    s4.noalias() += a2 * a2.transpose();
    ++n;
  }

  CVector mean() const { return shift + s1 / static_cast<double>(n); }
  CMatrix cov() const {
    const double dn = static_cast<double>(n);
    const CVector m = s1 / dn;
    return s2 / dn - m * m.adjoint();
  }
  // RMS standard error of each covariance entry.
  RMatrix cov_se() const {
    const double dn = static_cast<double>(n);
    const RMatrix second = (s2 / dn).cwiseAbs2();
    RMatrix var = s4 / dn - second;
    return (var.cwiseMax(0.0) / dn).cwiseSqrt();
  }
  RVector mean_se() const {
    const double dn = static_cast<double>(n);
    const RVector var = (s2.diagonal().real() / dn) - (s1 / dn).cwiseAbs2();
    return (var.cwiseMax(0.0) / dn).cwiseSqrt();
  }
};

struct Sampler {
  const CorrelationSet& corr;
  const Constellation& cons;
  double sqrt_rho;
  std::vector<CMatrix> sqrt_r;
  std::vector<CMatrix> H;

  Sampler(const CorrelationSet& c, const Constellation& q, double rho)
      : corr(c), cons(q), sqrt_rho(std::sqrt(rho)) {
    for (const CMatrix& R : c.R) sqrt_r.push_back(psd_sqrt(R));
    H.assign(static_cast<size_t>(c.num_aps), CMatrix(c.antennas, c.num_ues));
  }

  void draw(Rng& rng, CVector& x1, CVector& t_sum, std::vector<CVector>& t_l) {
    const int K = corr.num_ues, L = corr.num_aps, N = corr.antennas;
    CVector s(K);
    for (int k = 0; k < K; ++k) s(k) = cons.point(static_cast<int>(rng.bits() % static_cast<std::uint64_t>(cons.order())));
    x1.setZero(packed_gramian_length(K));
    t_sum.setZero(K);
    CVector g(N), n(N);
    for (int l = 0; l < L; ++l) {
      CMatrix& Hl = H[static_cast<size_t>(l)];
      for (int k = 0; k < K; ++k) {
        for (int a = 0; a < N; ++a) g(a) = rng.complex_normal();
        Hl.col(k) = sqrt_r[static_cast<size_t>(k * L + l)] * g;
      }
      for (int a = 0; a < N; ++a) n(a) = rng.complex_normal();
      const CVector y = sqrt_rho * (Hl * s) + n;
      x1 += pack_upper(Hl.adjoint() * Hl);
      t_l[static_cast<size_t>(l)] = Hl.adjoint() * y;
      t_sum += t_l[static_cast<size_t>(l)];
    }
  }
};

}  // namespace

EmpiricalMoments mc_moment_oracle(const CorrelationSet& corr, double rho_ul, std::int64_t draws,
                                  const Constellation& cons, Rng& rng) {
  if (draws < 2) throw ValidationError("moment oracle needs at least two draws");
  const int K = corr.num_ues, L = corr.num_aps;
  Sampler sampler(corr, cons, rho_ul);
  CVector x1, t_sum;
  std::vector<CVector> t_l(static_cast<size_t>(L));

  // Pilot pass on a separate stream fixes the shift used for stable sums.
  Rng pilot(rng.bits());
  const std::int64_t pilot_draws = std::min<std::int64_t>(draws, 2000);
  CVector shift1 = CVector::Zero(packed_gramian_length(K));
  for (std::int64_t d = 0; d < pilot_draws; ++d) {
    sampler.draw(pilot, x1, t_sum, t_l);
    shift1 += x1;
  }
  shift1 /= static_cast<double>(pilot_draws);

  VectorMoments m1(shift1);
  VectorMoments m2(CVector::Zero(K));
  std::vector<CMatrix> per_ap(static_cast<size_t>(L), CMatrix::Zero(K, K));
  std::vector<CVector> per_ap_mean(static_cast<size_t>(L), CVector::Zero(K));
  CMatrix cross_s1 = CMatrix::Zero(K, K);
  RMatrix cross_s2 = RMatrix::Zero(K, K);

  for (std::int64_t d = 0; d < draws; ++d) {
    sampler.draw(rng, x1, t_sum, t_l);
    m1.add(x1);
    m2.add(t_sum);
    CMatrix own = CMatrix::Zero(K, K);
    for (int l = 0; l < L; ++l) {
      const CVector& t = t_l[static_cast<size_t>(l)];
      const CMatrix outer = t * t.adjoint();
      per_ap[static_cast<size_t>(l)] += outer;
      per_ap_mean[static_cast<size_t>(l)] += t;
      own += outer;
    }
    const CMatrix cross = t_sum * t_sum.adjoint() - own;
    cross_s1 += cross;
    cross_s2 += cross.cwiseAbs2();
  }

  const double dn = static_cast<double>(draws);
  EmpiricalMoments out;
  out.draws = draws;
  out.mean1 = m1.mean();
  out.mean1_se = m1.mean_se();
  out.cov1 = m1.cov();
  out.cov1_se = m1.cov_se();
  out.mean2 = m2.mean();
  out.cov2 = m2.cov();
  out.cov2_se = m2.cov_se();
  out.cov2_l.resize(static_cast<size_t>(L));
  CMatrix own_cov = CMatrix::Zero(K, K);
  for (int l = 0; l < L; ++l) {
    const CVector mu = per_ap_mean[static_cast<size_t>(l)] / dn;
    out.cov2_l[static_cast<size_t>(l)] = per_ap[static_cast<size_t>(l)] / dn - mu * mu.adjoint();
    own_cov += out.cov2_l[static_cast<size_t>(l)];
  }
  out.cross2 = out.cov2 - own_cov;
  const CMatrix cross_mean = cross_s1 / dn;
  out.cross2_se = ((cross_s2 / dn - cross_mean.cwiseAbs2()).cwiseMax(0.0) / dn).cwiseSqrt();
  return out;
}

}  // namespace cfota
