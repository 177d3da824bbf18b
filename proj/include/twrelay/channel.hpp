#pragma once

#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "twrelay/matrix.hpp"
#include "twrelay/rng.hpp"

namespace twrelay {

/// Path-loss/shadowing law for the per-relay gain factors. Support must be
/// strictly positive and bounded; the mean is available in closed form.
class FadingLaw {
 public:
  enum class Kind { uniform, constant };

  static FadingLaw uniform(double lo, double hi) {
    if (!(lo > 0.0) || !(hi >= lo)) {
      throw std::invalid_argument(
          "FadingLaw::uniform: requires 0 < lo <= hi, got [" +
          std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return FadingLaw(Kind::uniform, lo, hi);
  }

  static FadingLaw constant(double c) {
    if (!(c > 0.0)) {
      throw std::invalid_argument("FadingLaw::constant: requires c > 0, got " +
                                  std::to_string(c));
    }
    return FadingLaw(Kind::constant, c, c);
  }

  Kind kind() const { return kind_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  double mean() const {
    return kind_ == Kind::uniform ? 0.5 * (lo_ + hi_) : lo_;
  }

  double sample(RngStream& stream) const {
    return kind_ == Kind::uniform ? stream.uniform(lo_, hi_) : lo_;
  }

  bool contains(double v) const { return v >= lo_ && v <= hi_; }

  std::string describe() const {
    char buf[64];
    if (kind_ == Kind::uniform) {
      std::snprintf(buf, sizeof buf, "uniform:%g:%g", lo_, hi_);
    } else {
      std::snprintf(buf, sizeof buf, "constant:%g", lo_);
    }
    return buf;
  }

 private:
  FadingLaw(Kind kind, double lo, double hi) : kind_(kind), lo_(lo), hi_(hi) {}

  Kind kind_;
  double lo_;
  double hi_;
};

/// All scalar parameters of one experiment point. Powers are linear units.
struct SystemConfig {
  int M = 2;                // antennas at each terminal
  int N = 2;                // antennas per relay
  int K = 1;                // relay count
  double P = 10.0;          // terminal transmit power
  double P_R = 10.0;        // sum power across relays
  double sigma2 = 1.0;      // noise variance per receive antenna
  double alpha = 0.5;       // transmit-phase fraction of the slot
  FadingLaw fading = FadingLaw::uniform(0.5, 1.5);

  void validate() const {
    if (M < 1) throw std::invalid_argument("SystemConfig: M must be >= 1");
    if (N < 1) throw std::invalid_argument("SystemConfig: N must be >= 1");
    if (K < 1) throw std::invalid_argument("SystemConfig: K must be >= 1");
    if (!(P > 0.0)) throw std::invalid_argument("SystemConfig: P must be > 0");
    if (!(P_R > 0.0)) {
      throw std::invalid_argument("SystemConfig: P_R must be > 0");
    }
    if (!(sigma2 > 0.0)) {
      throw std::invalid_argument("SystemConfig: sigma2 must be > 0");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw std::invalid_argument("SystemConfig: alpha must be in [0, 1]");
    }
  }
};

/// One relay's four channel matrices and four gain factors.
///
/// Dimensions: terminal-to-relay matrices are N x M, relay-to-terminal are
/// M x N. Gains are the path-loss/shadowing factors of the matching hop.
struct RelayLink {
  CMatrix h_t1_to_relay;  // N x M, transmit phase
  CMatrix h_relay_to_t2;  // M x N, receive phase
  CMatrix h_relay_to_t1;  // M x N, receive phase
  CMatrix h_t2_to_relay;  // N x M, transmit phase
  double gain_t1_to_relay = 1.0;
  double gain_t2_to_relay = 1.0;
  double gain_relay_to_t2 = 1.0;
  double gain_relay_to_t1 = 1.0;
};

struct ChannelRealization {
  std::vector<RelayLink> relays;

  int relay_count() const { return static_cast<int>(relays.size()); }
};

namespace detail {

inline CMatrix sample_cn_matrix(Eigen::Index rows, Eigen::Index cols,
                                RngStream& stream) {
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = stream.cgaussian();
  }
  return m;
}

}  // namespace detail

/// Draw one independent realization of the whole network: i.i.d. CN(0,1)
/// matrix entries and i.i.d. gains from the fading law. The draw order is
/// fixed (per relay: the four matrices row-major, then the four gains), so a
/// given stream always produces the identical realization.
inline ChannelRealization sample_realization(const SystemConfig& cfg,
                                             RngStream& stream) {
  ChannelRealization real;
  real.relays.reserve(static_cast<std::size_t>(cfg.K));
  for (int k = 0; k < cfg.K; ++k) {
    RelayLink link;
    link.h_t1_to_relay = detail::sample_cn_matrix(cfg.N, cfg.M, stream);
    link.h_relay_to_t2 = detail::sample_cn_matrix(cfg.M, cfg.N, stream);
    link.h_relay_to_t1 = detail::sample_cn_matrix(cfg.M, cfg.N, stream);
    link.h_t2_to_relay = detail::sample_cn_matrix(cfg.N, cfg.M, stream);
    link.gain_t1_to_relay = cfg.fading.sample(stream);
    link.gain_t2_to_relay = cfg.fading.sample(stream);
    link.gain_relay_to_t2 = cfg.fading.sample(stream);
    link.gain_relay_to_t1 = cfg.fading.sample(stream);
    real.relays.push_back(std::move(link));
  }
  return real;
}

/// Law-of-large-numbers diagnostic: max entrywise deviation of
/// (1/K) sum_k P_k G_k G_k* from its ensemble limit mu*N*I.
inline double ensemble_mean_check(const ChannelRealization& real,
                                  const SystemConfig& cfg) {
  const int m = cfg.M;
  CMatrix sum(m, m);
  for (const RelayLink& link : real.relays) {
    sum = sum + link.gain_relay_to_t2 *
                    (link.h_relay_to_t2 * adjoint(link.h_relay_to_t2));
  }
  const double k = static_cast<double>(real.relay_count());
  const double target = cfg.fading.mean() * static_cast<double>(cfg.N);
  const CMatrix dev =
      (1.0 / k) * sum - target * CMatrix::identity(m);
  return max_abs(dev);
}

namespace detail {

inline void dump_matrix_lines(std::ostream& out, int k, const char* name,
                              const CMatrix& m) {
  char buf[160];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%d,%s,%lld,%lld,%.17g,%.17g", k, name,
                    static_cast<long long>(i), static_cast<long long>(j),
                    m(i, j).real(), m(i, j).imag());
      out << buf << '\n';
    }
  }
}

}  // namespace detail

/// Debug dump: one "k,name,row,col,re,im" line per matrix entry plus one
/// "k,fading,E,F,P,Q" line per relay. Relay indices are 1-based.
inline void dump_realization(const ChannelRealization& real,
                             std::ostream& out) {
  char buf[160];
  for (int k = 0; k < real.relay_count(); ++k) {
    const RelayLink& link = real.relays[static_cast<std::size_t>(k)];
    detail::dump_matrix_lines(out, k + 1, "H", link.h_t1_to_relay);
    detail::dump_matrix_lines(out, k + 1, "G", link.h_relay_to_t2);
    detail::dump_matrix_lines(out, k + 1, "Hr", link.h_relay_to_t1);
    detail::dump_matrix_lines(out, k + 1, "Gr", link.h_t2_to_relay);
    std::snprintf(buf, sizeof buf, "%d,fading,%.17g,%.17g,%.17g,%.17g", k + 1,
                  link.gain_t1_to_relay, link.gain_t2_to_relay,
                  link.gain_relay_to_t2, link.gain_relay_to_t1);
    out << buf << '\n';
  }
}

}  // namespace twrelay
