#pragma once

// Shared vocabulary for the two-body reflection library: unit systems, body
// and spectrum descriptions, the lab <-> (cm, rel) partition and the grid
// containers every physics module fills.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace twobody {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Violated physical precondition (degenerate kinematics, bad parameters).
class PhysicsError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Units

enum class UnitMode { SI, Dimensionless };

/// Physical constants for one unit mode. In dimensionless mode hbar = 1 and
/// k_B = 1; masses and velocities are then ratios chosen by the caller
/// (conventionally with the particle mass equal to one).
struct Units {
  UnitMode mode = UnitMode::SI;
  double hbar = 1.054571817e-34;
  double h = 6.62607015e-34;
  double kB = 1.380649e-23;

  static Units si() { return Units{}; }
  static Units dimensionless() { return Units{UnitMode::Dimensionless, 1.0, kTwoPi, 1.0}; }
};

inline const char* to_string(UnitMode m) {
  return m == UnitMode::SI ? "si" : "dimensionless";
}

// Reference masses used by presets and tests.
inline constexpr double kNeutronMass = 1.67492750056e-27;  // kg
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg

// ---------------------------------------------------------------------------
// Bodies and the cm/rel partition

/// Mass, central velocity and Gaussian velocity spread of one body.
/// dv == 0 denotes a single-wavevector (harmonic) substate.
struct BodySpec {
  double mass = 1.0;
  double v0 = 0.0;
  double dv = 0.0;

  void validate(const char* who) const {
    if (!(mass > 0.0) || !std::isfinite(mass))
      throw PhysicsError(std::string(who) + ": mass must be positive");
    if (!(dv >= 0.0) || !std::isfinite(dv))
      throw PhysicsError(std::string(who) + ": velocity spread must be non-negative");
    if (!std::isfinite(v0))
      throw PhysicsError(std::string(who) + ": central velocity must be finite");
  }
};

/// Lab <-> (cm, rel) constants for one pair of wavevectors.
///
/// K_rel is evaluated as mu (v - V) / hbar, which equals (M k - m K) / M_tot
/// but does not cancel catastrophically when M >> m.
struct PartitionMap {
  double hbar = 1.0;
  double m = 1.0, M = 1.0;
  double v = 0.0, V = 0.0;
  double k = 0.0, K = 0.0;  // lab wavevectors
  double M_tot = 0.0, mu = 0.0;
  double K_cm = 0.0, K_rel = 0.0;
  double E_cm = 0.0, E_rel = 0.0;

  static PartitionMap make(const Units& u, double m, double M, double v, double V) {
    if (!(m > 0.0) || !(M > 0.0)) throw PhysicsError("partition: masses must be positive");
    PartitionMap p;
    p.hbar = u.hbar;
    p.m = m;
    p.M = M;
    p.v = v;
    p.V = V;
    p.k = m * v / u.hbar;
    p.K = M * V / u.hbar;
    p.M_tot = m + M;
    p.mu = m * M / p.M_tot;
    p.K_cm = p.k + p.K;
    p.K_rel = p.mu * (v - V) / u.hbar;
    p.E_cm = u.hbar * u.hbar * p.K_cm * p.K_cm / (2.0 * p.M_tot);
    p.E_rel = u.hbar * u.hbar * p.K_rel * p.K_rel / (2.0 * p.mu);
    return p;
  }

  /// Lab-frame total kinetic energy hbar^2 k^2/2m + hbar^2 K^2/2M.
  double lab_energy() const {
    return 0.5 * m * v * v + 0.5 * M * V * V;
  }
  /// Total angular frequency E / hbar of the eigenstate.
  double omega() const { return lab_energy() / hbar; }

  /// Inverse transform back to lab wavevectors.
  double k_from_cm_rel() const { return m / M_tot * K_cm + K_rel; }
  double K_from_cm_rel() const { return M / M_tot * K_cm - K_rel; }
};

// ---------------------------------------------------------------------------
// Grids

/// Uniform, strictly increasing coordinate axis. n == 1 is a single sample
/// (used for slices); otherwise max > min.
struct Axis {
  double min = 0.0;
  double max = 1.0;
  std::size_t n = 2;

  Axis() = default;
  Axis(double lo, double hi, std::size_t count) : min(lo), max(hi), n(count) { validate(); }

  static Axis point(double x) { return Axis(x, x, 1); }

  void validate() const {
    if (n == 0) throw std::invalid_argument("axis: needs at least one point");
    if (!std::isfinite(min) || !std::isfinite(max))
      throw std::invalid_argument("axis: bounds must be finite");
    if (n == 1 ? (max != min) : !(max > min))
      throw std::invalid_argument("axis: bounds must be strictly increasing");
  }
  double step() const { return n > 1 ? (max - min) / static_cast<double>(n - 1) : 0.0; }
  double at(std::size_t i) const {
    if (n == 1) return min;
    if (i + 1 == n) return max;
    return min + step() * static_cast<double>(i);
  }
  std::vector<double> values() const {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = at(i);
    return out;
  }
  bool contains(double x) const { return x >= min && x <= max; }
};

/// Grid of (x2, x1) points; rows are x2, columns are x1.
struct GridSpec {
  Axis x1;
  Axis x2;
  std::size_t size() const { return x1.n * x2.n; }
};

/// Composite trapezoid weights for one axis (zero for a single point).
inline std::vector<double> trapezoid_weights(const Axis& a) {
  std::vector<double> w(a.n, a.step());
  if (a.n == 1) {
    w[0] = 0.0;
  } else {
    w.front() *= 0.5;
    w.back() *= 0.5;
  }
  return w;
}

/// Joint PDF sampled on a grid at one time. Stored unnormalized; `norm` is
/// its trapezoidal integral.
struct GridSnapshot {
  double t = 0.0;
  Axis x1;
  Axis x2;
  std::vector<double> pdf;  // row-major, pdf[i2 * x1.n + i1]
  double norm = 0.0;
  std::vector<std::string> warnings;

  double at(std::size_t i2, std::size_t i1) const { return pdf[i2 * x1.n + i1]; }

  void recompute_norm() {
    const auto w1 = trapezoid_weights(x1);
    const auto w2 = trapezoid_weights(x2);
    double total = 0.0;
    for (std::size_t i2 = 0; i2 < x2.n; ++i2) {
      double row = 0.0;
      for (std::size_t i1 = 0; i1 < x1.n; ++i1) row += w1[i1] * pdf[i2 * x1.n + i1];
      total += w2[i2] * row;
    }
    norm = total;
  }
};

// ---------------------------------------------------------------------------
// Spectra

/// One (v, V) quadrature node.
struct SpectrumSample {
  double v = 0.0;
  double V = 0.0;
  double weight = 1.0;
  double phase = 0.0;
};

/// Nodes along one body's velocity axis.
struct SpectrumAxis {
  std::vector<double> velocity;
  std::vector<double> weight;
  std::vector<double> phase;
  std::size_t size() const { return velocity.size(); }
};

/// Tensor-product spectrum: every particle node paired with every reflector
/// node. Node phases are per body so a dephased substate stays a property of
/// that body alone.
struct Spectrum {
  SpectrumAxis particle;
  SpectrumAxis reflector;

  std::size_t size() const { return particle.size() * reflector.size(); }

  std::vector<SpectrumSample> samples() const {
    std::vector<SpectrumSample> out;
    out.reserve(size());
    for (std::size_t i = 0; i < particle.size(); ++i) {
      for (std::size_t j = 0; j < reflector.size(); ++j) {
        double ph = particle.phase[i] + reflector.phase[j];
        if (ph >= kTwoPi) ph -= kTwoPi;
        out.push_back({particle.velocity[i], reflector.velocity[j],
                       particle.weight[i] * reflector.weight[j], ph});
      }
    }
    return out;
  }
};

enum class DephaseTarget { None, Particle, Reflector, Both };

/// Phase generator for dephased spectra. The draw sequence is part of the
/// output contract: a 64-bit LCG (Knuth MMIX constants, modulus 2^64) whose
/// top 53 bits map to [0, 2pi).
class PhaseGenerator {
public:
  explicit PhaseGenerator(std::uint64_t seed) : engine_(seed) {}
  double next() {
    const std::uint64_t bits = engine_() >> 11;
    return static_cast<double>(bits) * 0x1.0p-53 * kTwoPi;
  }

private:
  std::linear_congruential_engine<std::uint64_t, 6364136223846793005ULL,
                                  1442695040888963407ULL, 0ULL>
      engine_;
};

struct QuadratureOptions {
  std::size_t nodes_particle = 64;
  std::size_t nodes_reflector = 64;
  double span_sigmas = 4.0;
  std::optional<std::uint64_t> dephase_seed;
  DephaseTarget dephase = DephaseTarget::Both;
};

namespace detail {

inline SpectrumAxis gaussian_axis(const BodySpec& b, std::size_t n, double span) {
  SpectrumAxis ax;
  if (b.dv == 0.0 || n == 1) {
    ax.velocity = {b.v0};
    ax.weight = {1.0};
    ax.phase = {0.0};
    return ax;
  }
  // Uniform nodes over v0 +- span*dv; the node spacing is folded into the
  // weight so results do not depend on the node count.
  const double delta = 2.0 * span * b.dv / static_cast<double>(n - 1);
  const double norm = delta / std::sqrt(b.dv);
  ax.velocity.resize(n);
  ax.weight.resize(n);
  ax.phase.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    // Offsets measured from the centre so weights pair up exactly about v0.
    const double offset = (static_cast<double>(i) - 0.5 * static_cast<double>(n - 1)) * delta;
    ax.velocity[i] = b.v0 + offset;
    const double z = offset / b.dv;
    ax.weight[i] = norm * std::exp(-0.5 * z * z);
  }
  return ax;
}

}  // namespace detail

/// Tensor grid of Gaussian-weighted (v, V) nodes covering v0 +- span*dv for
/// each body. A body with dv == 0 contributes a single node. With a seed, each
/// selected body's node phases are independent uniform draws (particle axis
/// first, then reflector).
inline Spectrum make_quadrature(const BodySpec& particle, const BodySpec& reflector,
                                const QuadratureOptions& opt) {
  particle.validate("particle");
  reflector.validate("reflector");
  if (opt.nodes_particle < 1 || opt.nodes_reflector < 1)
    throw std::invalid_argument("quadrature: need at least one node per axis");
  if (!(opt.span_sigmas > 0.0)) throw std::invalid_argument("quadrature: span must be positive");

  Spectrum s;
  s.particle = detail::gaussian_axis(particle, opt.nodes_particle, opt.span_sigmas);
  s.reflector = detail::gaussian_axis(reflector, opt.nodes_reflector, opt.span_sigmas);
  if (opt.dephase_seed && opt.dephase != DephaseTarget::None) {
    PhaseGenerator gen(*opt.dephase_seed);
    if (opt.dephase == DephaseTarget::Particle || opt.dephase == DephaseTarget::Both)
      for (auto& ph : s.particle.phase) ph = gen.next();
    if (opt.dephase == DephaseTarget::Reflector || opt.dephase == DephaseTarget::Both)
      for (auto& ph : s.reflector.phase) ph = gen.next();
  }
  return s;
}

inline Spectrum make_quadrature(const BodySpec& particle, const BodySpec& reflector,
                                std::size_t n_nodes, double span_sigmas,
                                std::optional<std::uint64_t> dephase_seed = std::nullopt) {
  QuadratureOptions opt;
  opt.nodes_particle = n_nodes;
  opt.nodes_reflector = n_nodes;
  opt.span_sigmas = span_sigmas;
  opt.dephase_seed = dephase_seed;
  return make_quadrature(particle, reflector, opt);
}

}  // namespace twobody
