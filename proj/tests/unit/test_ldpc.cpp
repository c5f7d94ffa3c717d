#include <cmath>
#include <random>

#include "doctest.h"

#include "cfota/ldpc.hpp"
#include "cfota/random.hpp"

using namespace cfota;
using namespace cfota::ldpc;

namespace {

const std::filesystem::path kData = CFOTA_DATA_DIR;

const ParityCheckMatrix& wifi() {
  static const ParityCheckMatrix H = expand_prototype(ieee80211_n1944_r12());
  return H;
}

const Encoder& wifi_encoder() {
  static const Encoder e(wifi());
  return e;
}

std::vector<std::uint8_t> random_bits(Rng& rng, int n) {
  std::vector<std::uint8_t> b(static_cast<size_t>(n));
  for (auto& v : b) v = static_cast<std::uint8_t>(rng.bit());
  return b;
}

}  // namespace

TEST_CASE("parse_alist: hand-written 3x6 fixture") {
  const ParityCheckMatrix H = load_alist(kData / "toy_3x6.alist");
  CHECK(H.rows == 3);
  CHECK(H.cols == 6);
  CHECK(H.check_vars[0] == std::vector<int>{0, 1, 3});
  CHECK(H.check_vars[1] == std::vector<int>{1, 3, 5});
  CHECK(H.check_vars[2] == std::vector<int>{0, 2, 4});
  CHECK(H.edges() == 9);
  CHECK(parse_alist(to_alist(H)).check_vars == H.check_vars);
}

TEST_CASE("parse_alist: 802.11 file and malformed input") {
  const ParityCheckMatrix H = load_alist(kData / "ieee80211_n1944_r12.alist");
  CHECK(H.rows == 972);
  CHECK(H.cols == 1944);
  CHECK(H.check_vars == wifi().check_vars);

  CHECK_THROWS_AS(parse_alist("6 3\n2 3\n2 2 1 2 1 1\n3 3 3\n1 3\n"), ParseError);
  try {
    parse_alist("6 3\n2 3\n2 2 1 2 1\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  // Column and row lists that disagree.
  CHECK_THROWS_AS(parse_alist("2 2\n1 1\n1 1\n1 1\n1\n2\n2\n1\n"), ParseError);
}

TEST_CASE("expand_prototype: identity, shift and the 802.11 base") {
  const ParityCheckMatrix I = expand_prototype(Prototype{1, 1, 3, {0}});
  for (int i = 0; i < 3; ++i) CHECK(I.check_vars[i] == std::vector<int>{i});
  const ParityCheckMatrix S = expand_prototype(Prototype{1, 1, 3, {1}});
  CHECK(S.check_vars[0] == std::vector<int>{1});
  CHECK(S.check_vars[1] == std::vector<int>{2});
  CHECK(S.check_vars[2] == std::vector<int>{0});
  CHECK_THROWS_AS(expand_prototype(Prototype{1, 1, 3, {3}}), ValidationError);

  CHECK(wifi().rows == 972);
  CHECK(wifi().cols == 1944);
  CHECK(wifi().prototype.has_value());
}

TEST_CASE("prototype CSV round trip and data file") {
  const Prototype p = ieee80211_n1944_r12();
  const Prototype q = parse_prototype_csv(to_prototype_csv(p));
  CHECK(q.z == 81);
  CHECK(q.shifts == p.shifts);
  CHECK(load_prototype_csv(kData / "ieee80211_n1944_r12.csv").shifts == p.shifts);
  CHECK_THROWS_AS(parse_prototype_csv("z=4\n0 1\n2\n"), ParseError);
  CHECK_THROWS_AS(parse_prototype_csv("z=4\n0 9\n"), ParseError);
}

TEST_CASE("encoder: full rank, systematic, valid codewords") {
  const Encoder& enc = wifi_encoder();
  CHECK(enc.rank() == 972);
  CHECK(enc.k() == 972);
  for (int i = 0; i < enc.k(); ++i) CHECK(enc.info_positions()[i] == i);

  const std::vector<std::uint8_t> zero(972, 0);
  const auto c0 = enc.encode(zero);
  CHECK(std::all_of(c0.begin(), c0.end(), [](std::uint8_t b) { return b == 0; }));

  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto msg = random_bits(rng, 972);
    const auto c = enc.encode(msg);
    CHECK(wifi().is_codeword(c));
    CHECK(enc.extract(c) == msg);
  }
  auto m1 = random_bits(rng, 972);
  auto m2 = m1;
  m2[100] ^= 1;
  CHECK(enc.encode(m1) != enc.encode(m2));
  CHECK_THROWS_AS(enc.encode(std::vector<std::uint8_t>(10, 0)), ValidationError);

  // A rank-deficient toy code: the fixture has rank 3 and k = 3.
  const Encoder toy(load_alist(kData / "toy_3x6.alist"));
  CHECK(toy.k() == 3);
  const std::vector<std::uint8_t> m{1, 0, 1};
  CHECK(load_alist(kData / "toy_3x6.alist").is_codeword(toy.encode(m)));
}

TEST_CASE("decode_minsum: clean input, single flip, AWGN") {
  const Encoder& enc = wifi_encoder();
  Rng rng(2);
  const auto c = enc.encode(random_bits(rng, 972));
  std::vector<double> llr(c.size());
  for (size_t i = 0; i < c.size(); ++i) llr[i] = c[i] ? 20.0 : -20.0;
  DecodeResult r = decode_minsum(llr, wifi());
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.bits == c);

  llr[37] = -llr[37];
  r = decode_minsum(llr, wifi());
  CHECK(r.converged);
  CHECK(r.bits == c);

  // All-zero codeword, BPSK (bit 0 -> +1), Es/N0 = 10 dB.
  const double sigma2 = 0.5 * std::pow(10.0, -1.0);
  int ok = 0;
  const int frames = 1000;
  std::vector<double> l(1944);
  for (int f = 0; f < frames; ++f) {
    for (auto& v : l) {
      const double y = 1.0 + std::sqrt(sigma2) * rng.normal();
      v = -2.0 * y / sigma2;
    }
    const DecodeResult d = decode_minsum(l, wifi());
    ok += d.converged && std::all_of(d.bits.begin(), d.bits.end(), [](std::uint8_t b) { return b == 0; });
  }
  CHECK(ok > 999 * frames / 1000 - 1);
}
