#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "aris/common.hpp"
#include "aris/scenario.hpp"

namespace aris {

/// One realization of every link. Column vectors follow the y = g^H t convention.
struct ChannelSet {
  CMat q;                 // BS -> RIS, L x N
  std::vector<CVec> g_d;  // BS -> IR k, length N
  std::vector<CVec> h_d;  // BS -> ER i, length N
  std::vector<CVec> g_r;  // RIS -> IR k, length L
  std::vector<CVec> h_r;  // RIS -> ER i, length L
  std::vector<Point> ir_positions;
  std::vector<Point> er_positions;

  Index antennas() const { return q.cols(); }
  Index elements() const { return q.rows(); }
  int num_ir() const { return static_cast<int>(g_d.size()); }
  int num_er() const { return static_cast<int>(h_d.size()); }

  void check() const {
    const Index n = antennas(), l = elements();
    if (g_r.size() != g_d.size() || h_r.size() != h_d.size()) throw DimensionError("receiver count mismatch");
    if (ir_positions.size() != g_d.size() || er_positions.size() != h_d.size())
      throw DimensionError("position count mismatch");
    for (const auto& v : g_d)
      if (v.size() != n) throw DimensionError("g_d length");
    for (const auto& v : h_d)
      if (v.size() != n) throw DimensionError("h_d length");
    for (const auto& v : g_r)
      if (v.size() != l) throw DimensionError("g_r length");
    for (const auto& v : h_r)
      if (v.size() != l) throw DimensionError("h_r length");
  }

  bool operator==(const ChannelSet& o) const {
    auto same = [](const std::vector<CVec>& a, const std::vector<CVec>& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].size() != b[i].size() || a[i] != b[i]) return false;
      return true;
    };
    auto same_pts = [](const std::vector<Point>& a, const std::vector<Point>& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].x != b[i].x || a[i].y != b[i].y) return false;
      return true;
    };
    return q.rows() == o.q.rows() && q.cols() == o.q.cols() && q == o.q && same(g_d, o.g_d) &&
           same(h_d, o.h_d) && same(g_r, o.g_r) && same(h_r, o.h_r) && same_pts(ir_positions, o.ir_positions) &&
           same_pts(er_positions, o.er_positions);
  }
};

/// Large-scale power gain for PL = -30 - 10 alpha log10(d) dB.
inline double path_loss(double d, double alpha) {
  if (!(d > 0.0)) throw DomainError("path_loss: distance must be positive");
  const double pl_db = -30.0 - 10.0 * alpha * std::log10(d);
  return std::pow(10.0, pl_db / 10.0);
}

namespace detail {

// Carrier wavelength used only for the LoS phase of a link.
inline constexpr double kWavelength = 0.1;

// Half-wavelength ULA response for direction sine `sin_theta`.
inline CVec ula_response(Index m, double sin_theta) {
  CVec a(m);
  for (Index n = 0; n < m; ++n) a(n) = std::polar(1.0, std::numbers::pi * static_cast<double>(n) * sin_theta);
  return a;
}

inline Complex los_phase(double d) { return std::polar(1.0, -2.0 * std::numbers::pi * d / kWavelength); }

// The BS array lies along the y axis, the RIS along the x axis.
inline double bs_sine(const Point& from, const Point& to) { return (to.y - from.y) / distance(from, to); }
inline double ris_sine(const Point& from, const Point& to) { return (to.x - from.x) / distance(from, to); }

inline Point uniform_in_disc(std::mt19937_64& rng, const Point& c, double r) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double rad = r * std::sqrt(u(rng));
  const double ang = 2.0 * std::numbers::pi * u(rng);
  return {c.x + rad * std::cos(ang), c.y + rad * std::sin(ang)};
}

class RicianMixer {
 public:
  RicianMixer(std::mt19937_64& rng, double kappa)
      : rng_(rng), los_w_(std::sqrt(kappa / (1.0 + kappa))), nlos_w_(std::sqrt(1.0 / (1.0 + kappa))) {}

  Complex nlos() {
    const double re = normal_(rng_);
    const double im = normal_(rng_);
    return {re, im};
  }

  CVec vec(const CVec& los, double pl) {
    CVec out(los.size());
    for (Index i = 0; i < los.size(); ++i) out(i) = std::sqrt(pl) * (los_w_ * los(i) + nlos_w_ * nlos());
    return out;
  }

  CMat mat(const CMat& los, double pl) {
    CMat out(los.rows(), los.cols());
    for (Index i = 0; i < los.rows(); ++i)
      for (Index j = 0; j < los.cols(); ++j) out(i, j) = std::sqrt(pl) * (los_w_ * los(i, j) + nlos_w_ * nlos());
    return out;
  }

 private:
  std::mt19937_64& rng_;
  std::normal_distribution<double> normal_{0.0, std::sqrt(0.5)};
  double los_w_;
  double nlos_w_;
};

}  // namespace detail

/// Draws receiver positions and Rician-faded channels. Deterministic in (scenario, seed).
inline ChannelSet synth_channels(const Scenario& s, std::uint64_t seed) {
  using namespace detail;
  std::mt19937_64 rng(seed);
  std::mt19937_64 pos_rng(s.position_seed);
  std::mt19937_64& placement = s.redraw_positions ? rng : pos_rng;

  const Index n = s.antennas, l = s.elements;
  ChannelSet cs;
  for (int k = 0; k < s.num_ir; ++k) cs.ir_positions.push_back(uniform_in_disc(placement, s.ir_center, s.ir_radius));
  for (int i = 0; i < s.num_er; ++i) cs.er_positions.push_back(uniform_in_disc(placement, s.er_center, s.er_radius));

  RicianMixer mix(rng, s.rician_kappa);

  const double d_q = distance(s.bs, s.ris);
  const CMat q_los = los_phase(d_q) * ula_response(l, ris_sine(s.ris, s.bs)) *
                     ula_response(n, bs_sine(s.bs, s.ris)).adjoint();
  cs.q = mix.mat(q_los, path_loss(d_q, s.alpha.bs_ris));

  auto direct = [&](const Point& p, double alpha) {
    const double d = distance(s.bs, p);
    return mix.vec(los_phase(d) * ula_response(n, bs_sine(s.bs, p)), path_loss(d, alpha));
  };
  auto reflected = [&](const Point& p, double alpha) {
    const double d = distance(s.ris, p);
    return mix.vec(los_phase(d) * ula_response(l, ris_sine(s.ris, p)), path_loss(d, alpha));
  };
  for (const auto& p : cs.ir_positions) cs.g_d.push_back(direct(p, s.alpha.bs_ir));
  for (const auto& p : cs.er_positions) cs.h_d.push_back(direct(p, s.alpha.bs_er));
  for (const auto& p : cs.ir_positions) cs.g_r.push_back(reflected(p, s.alpha.ris_ir));
  for (const auto& p : cs.er_positions) cs.h_r.push_back(reflected(p, s.alpha.ris_er));
  return cs;
}

// ---------------------------------------------------------------------------
// Binary dump: "ARISCHN\0", u32 version, u32 N, L, K_I, K_E, then positions and
// Q (row-major), g_d, h_d, g_r, h_r as (re, im) pairs. Little-endian throughout.

inline constexpr char kChannelMagic[8] = {'A', 'R', 'I', 'S', 'C', 'H', 'N', '\0'};
inline constexpr std::uint32_t kChannelVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b);
    pos_ += 8;
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

  Complex c64() {
    const double re = f64();
    return {re, f64()};
  }

  void expect_magic() {
    need(sizeof kChannelMagic);
    if (std::memcmp(data_.data() + pos_, kChannelMagic, sizeof kChannelMagic) != 0)
      throw FormatError("channel file: bad magic");
    pos_ += sizeof kChannelMagic;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError("channel file: truncated");
  }

  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_channels(const ChannelSet& cs) {
  using detail::put_f64;
  using detail::put_u32;
  cs.check();
  std::string out(kChannelMagic, sizeof kChannelMagic);
  put_u32(out, kChannelVersion);
  put_u32(out, static_cast<std::uint32_t>(cs.antennas()));
  put_u32(out, static_cast<std::uint32_t>(cs.elements()));
  put_u32(out, static_cast<std::uint32_t>(cs.num_ir()));
  put_u32(out, static_cast<std::uint32_t>(cs.num_er()));
  for (const auto& p : cs.ir_positions) {
    put_f64(out, p.x);
    put_f64(out, p.y);
  }
  for (const auto& p : cs.er_positions) {
    put_f64(out, p.x);
    put_f64(out, p.y);
  }
  auto put_c = [&](Complex z) {
    put_f64(out, z.real());
    put_f64(out, z.imag());
  };
  for (Index i = 0; i < cs.q.rows(); ++i)
    for (Index j = 0; j < cs.q.cols(); ++j) put_c(cs.q(i, j));
  for (const auto* group : {&cs.g_d, &cs.h_d, &cs.g_r, &cs.h_r})
    for (const auto& v : *group)
      for (Index i = 0; i < v.size(); ++i) put_c(v(i));
  return out;
}

inline ChannelSet deserialize_channels(const std::string& data) {
  detail::Reader r(data);
  r.expect_magic();
  if (r.u32() != kChannelVersion) throw FormatError("channel file: unsupported version");
  const Index n = r.u32(), l = r.u32();
  const std::uint32_t kir = r.u32(), ker = r.u32();
  if (n == 0 || kir == 0 || n > 4096 || l > 65536 || kir > 4096 || ker > 4096)
    throw FormatError("channel file: implausible dimensions");
  ChannelSet cs;
  for (std::uint32_t k = 0; k < kir; ++k) {
    const double x = r.f64();
    cs.ir_positions.push_back({x, r.f64()});
  }
  for (std::uint32_t i = 0; i < ker; ++i) {
    const double x = r.f64();
    cs.er_positions.push_back({x, r.f64()});
  }
  cs.q.resize(l, n);
  for (Index i = 0; i < l; ++i)
    for (Index j = 0; j < n; ++j) cs.q(i, j) = r.c64();
  auto read_group = [&](std::vector<CVec>& group, std::uint32_t count, Index len) {
    for (std::uint32_t k = 0; k < count; ++k) {
      CVec v(len);
      for (Index i = 0; i < len; ++i) v(i) = r.c64();
      group.push_back(std::move(v));
    }
  };
  read_group(cs.g_d, kir, n);
  read_group(cs.h_d, ker, n);
  read_group(cs.g_r, kir, l);
  read_group(cs.h_r, ker, l);
  if (!r.done()) throw FormatError("channel file: trailing bytes");
  return cs;
}

inline void save_channels(const ChannelSet& cs, const std::string& path) {
  const std::string data = serialize_channels(cs);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline ChannelSet load_channels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_channels(ss.str());
}

/// FNV-1a over the serialized form; equal channel sets have equal digests.
inline std::uint64_t channel_digest(const ChannelSet& cs) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_channels(cs)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace aris
