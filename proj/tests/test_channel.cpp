#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "twrelay/channel.hpp"

using namespace twrelay;

TEST_CASE("rng streams are reproducible and order-independent") {
  SECTION("same key, same sequence, bit for bit") {
    RngStream a(42, 3, StreamPurpose::realization);
    RngStream b(42, 3, StreamPurpose::realization);
    for (int i = 0; i < 1000; ++i) {
      CHECK(a.next_u64() == b.next_u64());
    }
  }
  SECTION("sampling one substream does not move another") {
    RngStream first(42, 0, StreamPurpose::realization);
    std::vector<double> expected(16);
    for (double& v : expected) v = first.gaussian();

    RngStream other(42, 1, StreamPurpose::realization);
    for (int i = 0; i < 97; ++i) other.gaussian();
    RngStream again(42, 0, StreamPurpose::realization);
    for (double v : expected) CHECK(again.gaussian() == v);
  }
  SECTION("purpose tags separate streams") {
    RngStream a(42, 0, StreamPurpose::realization);
    RngStream b(42, 0, StreamPurpose::slot);
    CHECK(a.next_u64() != b.next_u64());
  }
}

TEST_CASE("rng substreams pass a cross-correlation sanity check") {
  const int n = 10000;
  RngStream a(42, 0, StreamPurpose::realization);
  RngStream b(42, 1, StreamPurpose::realization);
  double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = a.gaussian();
    const double y = b.gaussian();
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
    sab += x * y;
  }
  const double corr = (sab - sa * sb / n) /
                      std::sqrt((saa - sa * sa / n) * (sbb - sb * sb / n));
  CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("gaussian moments") {
  const int n = 100000;
  RngStream stream(42, 0, StreamPurpose::realization);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = stream.gaussian();
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var > 0.97);
  CHECK(var < 1.03);
}

TEST_CASE("complex gaussian has unit total variance") {
  const int n = 100000;
  RngStream stream(43, 0, StreamPurpose::realization);
  double power = 0.0, re = 0.0, im = 0.0;
  for (int i = 0; i < n; ++i) {
    const Complex z = stream.cgaussian();
    power += std::norm(z);
    re += z.real();
    im += z.imag();
  }
  CHECK(power / n == Catch::Approx(1.0).margin(0.02));
  CHECK(std::abs(re / n) < 0.01);
  CHECK(std::abs(im / n) < 0.01);
}

TEST_CASE("fading laws") {
  SECTION("uniform mean and support") {
    const FadingLaw law = FadingLaw::uniform(0.5, 1.5);
    CHECK(law.mean() == 1.0);
    RngStream stream(1, 0, StreamPurpose::realization);
    for (int i = 0; i < 1000; ++i) {
      const double v = law.sample(stream);
      CHECK(v >= 0.5);
      CHECK(v <= 1.5);
    }
  }
  SECTION("constant") {
    const FadingLaw law = FadingLaw::constant(2.0);
    CHECK(law.mean() == 2.0);
    RngStream stream(1, 0, StreamPurpose::realization);
    CHECK(law.sample(stream) == 2.0);
  }
  SECTION("rejects nonpositive support") {
    CHECK_THROWS_AS(FadingLaw::uniform(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(FadingLaw::uniform(1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(FadingLaw::constant(0.0), std::invalid_argument);
  }
}

TEST_CASE("sample_realization dimension contract") {
  SystemConfig cfg;
  cfg.M = 2;
  cfg.N = 3;
  cfg.K = 5;
  RngStream stream(42, 0, StreamPurpose::realization);
  const ChannelRealization real = sample_realization(cfg, stream);
  REQUIRE(real.relay_count() == 5);
  for (const RelayLink& link : real.relays) {
    CHECK(link.h_t1_to_relay.rows() == 3);
    CHECK(link.h_t1_to_relay.cols() == 2);
    CHECK(link.h_relay_to_t2.rows() == 2);
    CHECK(link.h_relay_to_t2.cols() == 3);
    CHECK(link.h_relay_to_t1.rows() == 2);
    CHECK(link.h_relay_to_t1.cols() == 3);
    CHECK(link.h_t2_to_relay.rows() == 3);
    CHECK(link.h_t2_to_relay.cols() == 2);
    CHECK(cfg.fading.contains(link.gain_t1_to_relay));
    CHECK(cfg.fading.contains(link.gain_t2_to_relay));
    CHECK(cfg.fading.contains(link.gain_relay_to_t2));
    CHECK(cfg.fading.contains(link.gain_relay_to_t1));
  }
}

TEST_CASE("sample_realization is deterministic per stream") {
  SystemConfig cfg;
  cfg.M = 2;
  cfg.N = 2;
  cfg.K = 3;
  RngStream s1(42, 7, StreamPurpose::realization);
  RngStream s2(42, 7, StreamPurpose::realization);
  const ChannelRealization a = sample_realization(cfg, s1);
  const ChannelRealization b = sample_realization(cfg, s2);
  for (int k = 0; k < 3; ++k) {
    CHECK(max_abs(a.relays[k].h_t1_to_relay - b.relays[k].h_t1_to_relay) ==
          0.0);
    CHECK(max_abs(a.relays[k].h_t2_to_relay - b.relays[k].h_t2_to_relay) ==
          0.0);
    CHECK(a.relays[k].gain_t1_to_relay == b.relays[k].gain_t1_to_relay);
    CHECK(a.relays[k].gain_relay_to_t1 == b.relays[k].gain_relay_to_t1);
  }
}

TEST_CASE("constant fading yields exact factors") {
  SystemConfig cfg;
  cfg.K = 4;
  cfg.fading = FadingLaw::constant(1.0);
  RngStream stream(42, 0, StreamPurpose::realization);
  const ChannelRealization real = sample_realization(cfg, stream);
  for (const RelayLink& link : real.relays) {
    CHECK(link.gain_t1_to_relay == 1.0);
    CHECK(link.gain_t2_to_relay == 1.0);
    CHECK(link.gain_relay_to_t2 == 1.0);
    CHECK(link.gain_relay_to_t1 == 1.0);
  }
}

TEST_CASE("sample mean of |h|^2 concentrates") {
  // K=2000 scalar channels: the mean of |h|^2 has standard error ~0.022.
  SystemConfig cfg;
  cfg.M = 1;
  cfg.N = 1;
  cfg.K = 2000;
  RngStream stream(42, 0, StreamPurpose::realization);
  const ChannelRealization real = sample_realization(cfg, stream);
  double sum = 0.0;
  for (const RelayLink& link : real.relays) {
    sum += std::norm(link.h_t1_to_relay(0, 0));
  }
  const double mean = sum / 2000.0;
  CHECK(mean > 0.94);
  CHECK(mean < 1.06);
}

TEST_CASE("ensemble_mean_check") {
  SECTION("single scalar relay with unit channel") {
    SystemConfig cfg;
    cfg.M = 1;
    cfg.N = 1;
    cfg.K = 1;
    cfg.fading = FadingLaw::constant(1.0);
    ChannelRealization real;
    RelayLink link;
    link.h_t1_to_relay = CMatrix::from_rows({{1.0}});
    link.h_relay_to_t2 = CMatrix::from_rows({{1.0}});
    link.h_relay_to_t1 = CMatrix::from_rows({{1.0}});
    link.h_t2_to_relay = CMatrix::from_rows({{1.0}});
    real.relays.push_back(link);
    CHECK(ensemble_mean_check(real, cfg) == 0.0);
  }
  SECTION("large K deviation is small and diagonal target is N mu") {
    SystemConfig cfg;
    cfg.M = 2;
    cfg.N = 2;
    cfg.K = 4096;
    RngStream stream(42, 0, StreamPurpose::realization);
    const ChannelRealization real = sample_realization(cfg, stream);
    CHECK(ensemble_mean_check(real, cfg) < 0.15);

    // The same statistic with the target removed: diagonal entries of the
    // normalized Gram sit near N*mu = 2.
    CMatrix sum(2, 2);
    for (const RelayLink& link : real.relays) {
      sum = sum + link.gain_relay_to_t2 *
                      (link.h_relay_to_t2 * adjoint(link.h_relay_to_t2));
    }
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(sum(i, i).real() / 4096.0 - 2.0) < 0.15);
    }
  }
}

TEST_CASE("realization dump format") {
  SystemConfig cfg;
  cfg.M = 1;
  cfg.N = 1;
  cfg.K = 2;
  cfg.fading = FadingLaw::constant(1.0);
  RngStream stream(42, 0, StreamPurpose::realization);
  const ChannelRealization real = sample_realization(cfg, stream);
  std::ostringstream out;
  dump_realization(real, out);
  const std::string text = out.str();
  // 2 relays x (4 matrices x 1 entry + 1 fading line)
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 10);
  CHECK(text.find("1,H,0,0,") != std::string::npos);
  CHECK(text.find("2,Gr,0,0,") != std::string::npos);
  CHECK(text.find("1,fading,1,1,1,1") != std::string::npos);
  CHECK(text.find("2,fading,1,1,1,1") != std::string::npos);
}
