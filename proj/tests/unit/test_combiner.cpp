#include <cmath>

#include "doctest.h"

#include "cfota/combiner.hpp"
#include "cfota/pipeline.hpp"

using namespace cfota;

TEST_CASE("lmmse_chunk_estimate: degenerate prior, scalar case, LS limit") {
  Rng rng(1);
  CVector z(3), mu(3);
  for (int i = 0; i < 3; ++i) {
    z(i) = rng.complex_normal();
    mu(i) = rng.complex_normal();
  }
  CHECK((lmmse_chunk_estimate(z, mu, CMatrix::Zero(3, 3), 2.0) - mu).norm() == 0.0);

  CVector z1(1), mu1(1);
  z1(0) = 1.0;
  mu1(0) = 0.0;
  CHECK(std::abs(lmmse_chunk_estimate(z1, mu1, CMatrix::Identity(1, 1), 1.0)(0) - 0.5) < 1e-15);

  const CMatrix A = rng.complex_normal_matrix(3, 3);
  const CMatrix C = A * A.adjoint() + CMatrix::Identity(3, 3);
  const double rc = 1e8;
  const CVector lmmse = lmmse_chunk_estimate(z, mu, C, rc);
  const CVector ls = ls_chunk_estimate(z, rc);
  CHECK((lmmse - ls).norm() / ls.norm() < 1e-3);
}

TEST_CASE("ls_chunk_estimate") {
  CVector z(1);
  z(0) = 2.0;
  CHECK(ls_chunk_estimate(z, 4.0)(0) == cdouble(1.0, 0.0));
  CHECK_THROWS_AS(ls_chunk_estimate(z, 0.0), ValidationError);
}

namespace {

struct Toy {
  FronthaulSetup fh;
  std::vector<CVector> packed;
  std::vector<double> powers;
};

Toy toy(Rng& rng, int L = 3, int N = 5, int M = 4, int len = 10) {
  Toy t;
  for (int l = 0; l < L; ++l) {
    t.fh.G.push_back(rng.complex_normal_matrix(N, M));
    t.fh.W.push_back(zf_precoder(t.fh.G.back()));
    t.fh.EWW.push_back(expected_precoder_gram(1.0, N, M));
    t.fh.gain.push_back(1.0);
    CVector x(len);
    for (auto& v : x) v = rng.complex_normal();
    t.packed.push_back(x);
    t.powers.push_back(1.0 + l);
  }
  return t;
}

}  // namespace

TEST_CASE("noise off: LS recovers the superposed vector") {
  Rng rng(2);
  const Toy t = toy(rng);
  const PhaseResult r = run_phase(t.packed, t.powers, 50.0, t.fh, ChunkPrior{}, EstimatorKind::kLs, CMatrix());
  CHECK(r.rho_c == doctest::Approx(50.0 / 3.0));
  CHECK((r.estimate - r.truth).norm() / r.truth.norm() < 1e-12);
}

TEST_CASE("LS estimate is unbiased over 1e5 noisy trials") {
  Rng rng(3);
  const Toy t = toy(rng);
  const int trials = 100000;
  CVector bias = CVector::Zero(10);
  RVector sq = RVector::Zero(10);
  for (int i = 0; i < trials; ++i) {
    const CMatrix noise = rng.complex_normal_matrix(4, 3);
    const PhaseResult r = run_phase(t.packed, t.powers, 2.0, t.fh, ChunkPrior{}, EstimatorKind::kLs, noise);
    const CVector e = r.estimate - r.truth;
    bias += e;
    sq += e.cwiseAbs2();
  }
  bias /= trials;
  for (int i = 0; i < 10; ++i) {
    const double se = std::sqrt(sq(i) / trials / trials);
    CHECK(std::abs(bias(i)) < 3 * se);
  }
}

TEST_CASE("unpack: round trip, real diagonal, K=2 layout") {
  Rng rng(4);
  const CMatrix A = rng.complex_normal_matrix(6, 6);
  const CMatrix T = A + A.adjoint();
  CHECK((unpack_gramian(pack_upper(T), 6) - T).norm() < 1e-15);

  CVector x(3);
  x << cdouble(1, 0.5), cdouble(2, 3), cdouble(4, -1);
  const CMatrix U = unpack_gramian(x, 2);
  CHECK(U(0, 0) == cdouble(1, 0));
  CHECK(U(1, 1) == cdouble(4, 0));
  CHECK(U(0, 1) == cdouble(2, 3));
  CHECK(U(1, 0) == cdouble(2, -3));

  CVector t(4);
  t << 1.0, 2.0, 3.0, 4.0;
  const EstimatedStatistics s = unpack(x, t, 2, 2, EstimatorKind::kLmmse);
  CHECK(s.t_hat(1, 0) == cdouble(2, 0));
  CHECK(s.t_hat(0, 1) == cdouble(3, 0));
  CHECK_THROWS_AS(unpack(x, t, 2, 3), ValidationError);
  CHECK_THROWS_AS(unpack_gramian(t, 2), ValidationError);
}

TEST_CASE("phase-2 prior is block diagonal per channel use") {
  Phase2Moments m;
  m.C = CMatrix::Zero(3, 3);
  m.C(0, 0) = 1;
  m.C(1, 1) = 2;
  m.C(2, 2) = 3;
  m.C(0, 2) = 0.5;
  m.C(2, 0) = 0.5;
  const ChunkPrior p = phase2_prior(m, 2, 4);
  REQUIRE(p.cov.size() == 2);
  CHECK(p.cov[0](0, 0) == cdouble(1, 0));
  CHECK(p.cov[0](0, 2) == cdouble(0.5, 0));
  CHECK(p.cov[0](2, 3) == cdouble(0, 0));  // positions 2 and 3 are different channel uses
  CHECK(p.cov[0](3, 3) == cdouble(1, 0));
  CHECK(p.cov[1](0, 0) == cdouble(2, 0));
  CHECK(p.cov[1](2, 2) == cdouble(0, 0));  // padding
}

TEST_CASE("NMSE") {
  Rng rng(5);
  CVector x(8);
  for (auto& v : x) v = rng.complex_normal();
  CHECK(nmse_db(x, x) == kNmseFloorDb);
  CHECK(nmse_db(x, CVector::Zero(8)) == doctest::Approx(0.0));
  CHECK(nmse_db(x, x / 2.0) == doctest::Approx(-6.0206).epsilon(1e-4));

  NmseAccumulator a, b, ab;
  a.add(1.0, 10.0);
  b.add(3.0, 10.0);
  ab.add(1.0, 10.0);
  ab.add(3.0, 10.0);
  a.merge(b);
  CHECK(a.ratio() == ab.ratio());
  CHECK(a.ratio() == doctest::Approx(0.2));
  CHECK(std::isfinite(a.stderr_db()));
  NmseAccumulator empty;
  CHECK_THROWS_AS(empty.ratio(), ValidationError);
}
