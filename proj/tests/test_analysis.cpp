#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <twobody/analysis.hpp>

using namespace twobody;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

GridSnapshot tabulate(const Axis& x1, const Axis& x2, const std::function<double(double, double)>& f) {
  GridSnapshot s;
  s.x1 = x1;
  s.x2 = x2;
  s.pdf.resize(x1.n * x2.n);
  for (std::size_t i2 = 0; i2 < x2.n; ++i2)
    for (std::size_t i1 = 0; i1 < x1.n; ++i1) s.pdf[i2 * x1.n + i1] = f(x1.at(i1), x2.at(i2));
  s.recompute_norm();
  return s;
}

Profile sampled(double lo, double hi, std::size_t n, const std::function<double(double)>& f) {
  Profile p;
  const Axis a(lo, hi, n);
  for (std::size_t i = 0; i < n; ++i) {
    p.x.push_back(a.at(i));
    p.y.push_back(f(a.at(i)));
  }
  return p;
}

WavegroupScenario colliding_mirror(std::size_t nodes) {
  WavegroupScenario sc;
  sc.system = SystemKind::Mirror;
  sc.particle = {1.0, 2.0, 0.2};
  sc.reflector = {5.0, -0.5, 0.1};
  sc.quad.nodes_particle = sc.quad.nodes_reflector = nodes;
  return sc;
}

}  // namespace

TEST_CASE("marginals integrate to the snapshot norm", "[analysis]") {
  const GridSnapshot s = tabulate(Axis(-3.0, 2.0, 101), Axis(-1.0, 4.0, 81), [](double a, double b) {
    return std::exp(-a * a - 0.5 * (b - 1.0) * (b - 1.0)) * (1.0 + 0.3 * std::sin(3.0 * a * b));
  });
  for (MarginalAxis ax : {MarginalAxis::ParticleX1, MarginalAxis::ReflectorX2}) {
    const Moments m = moments(as_profile(marginal(s, ax)));
    CHECK_THAT(m.mass, WithinRel(s.norm, 1e-12));
  }
  CHECK_THAT(region_integral(s, -10.0, 10.0, -10.0, 10.0), WithinRel(s.norm, 1e-12));
}

TEST_CASE("moments of a sampled Gaussian", "[analysis]") {
  const Profile p = sampled(-20.0, 30.0, 5001, [](double x) { return std::exp(-0.5 * (x - 4.0) * (x - 4.0) / 2.25); });
  const Moments m = moments(p);
  CHECK_THAT(m.mean, WithinAbs(4.0, 1e-10));
  CHECK_THAT(m.stddev, WithinRel(1.5, 1e-8));
  CHECK_THAT(m.mass, WithinRel(1.5 * std::sqrt(kTwoPi), 1e-10));
}

TEST_CASE("visibility of full and partial fringes", "[analysis]") {
  const Profile full = sampled(0.0, 20.0, 2001, [](double x) { return std::pow(std::sin(x), 2); });
  const Visibility v = visibility(full);
  REQUIRE(v.defined);
  CHECK_THAT(v.value, WithinAbs(1.0, 1e-6));
  CHECK(v.fringes >= 5);

  const Profile part = sampled(0.0, 20.0, 2001, [](double x) { return 1.0 + 0.4 * std::cos(2.0 * x); });
  CHECK_THAT(visibility(part).value, WithinAbs(0.4, 1e-5));

  CHECK_FALSE(visibility(sampled(0.0, 1.0, 11, [](double) { return 2.0; })).defined);
  CHECK_FALSE(visibility(sampled(0.0, 1.0, 11, [](double x) { return x; })).defined);
}

TEST_CASE("visibility is invariant under rescaling the profile", "[analysis]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> scale(1e-30, 1e30), depth(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double d = depth(rng), c = scale(rng);
    const Profile p = sampled(0.0, 30.0, 1501, [&](double x) { return 1.0 + d * std::cos(x); });
    Profile q = p;
    for (double& y : q.y) y *= c;
    CHECK_THAT(visibility(q).value, WithinAbs(visibility(p).value, 1e-12));
  }
}

TEST_CASE("measured fringe spacing recovers pi over the wavevector", "[analysis]") {
  for (double K : {0.7, 1.3, 4.0}) {
    const Profile p = sampled(-40.0, 0.0, 20001, [&](double x) { return std::pow(std::sin(K * x), 2); });
    const auto s = fringe_spacing_measured(p);
    REQUIRE(s.has_value());
    CHECK_THAT(*s, WithinRel(kPi / K, 1e-3));
  }
  CHECK_FALSE(fringe_spacing_measured(sampled(0.0, 1.0, 11, [](double x) { return x; })).has_value());
}

TEST_CASE("extrema of a sampled cosine alternate", "[analysis]") {
  const auto ext = find_extrema(sampled(0.1, 12.0, 1191, [](double x) { return std::cos(x); }));
  REQUIRE(ext.size() >= 3);
  for (std::size_t i = 0; i + 1 < ext.size(); ++i) CHECK(ext[i].is_max != ext[i + 1].is_max);
  CHECK_THAT(ext[0].x, WithinAbs(kPi, 0.02));
}

TEST_CASE("probability flux balances during the collision", "[analysis][flux]") {
  const WavegroupScenario sc = colliding_mirror(24);
  const Rect r{-8.0, 2.0, -4.0, 4.0};
  const FluxAudit a = flux_audit(sc, r, 0.0, 1e-3);
  CHECK(std::abs(a.dP_dt) > 1e-3);
  CHECK(a.relative_residual() < 1e-6);
  // The centred difference error falls as dt^2.
  const FluxAudit coarse = flux_audit(sc, r, 0.0, 0.2);
  const FluxAudit fine = flux_audit(sc, r, 0.0, 0.1);
  CHECK_THAT(coarse.residual / fine.residual, WithinRel(4.0, 0.05));
}

TEST_CASE("a single plane-wave eigenstate carries no net flux", "[analysis][flux]") {
  WavegroupScenario sc = colliding_mirror(1);
  sc.particle.dv = sc.reflector.dv = 0.0;
  const FluxAudit a = flux_audit(sc, {-6.0, 1.0, -3.0, 3.0}, 0.7, 1e-2);
  CHECK(std::abs(a.dP_dt) < 1e-12);
  CHECK(std::abs(a.flux_x1 + a.flux_x2) < 1e-12);
  CHECK_THROWS_AS(flux_audit(sc, {1.0, 0.0, -1.0, 1.0}, 0.0, 1e-2), PhysicsError);
  CHECK_THROWS_AS(flux_audit(sc, {-1.0, 0.0, -1.0, 1.0}, 0.0, 0.0), PhysicsError);
}

TEST_CASE("centroid tracks before the collision follow the central velocities", "[analysis]") {
  const WavegroupScenario sc = colliding_mirror(48);
  // Earlier times would bring a quadrature replica of the virtual reflected
  // group into the window.
  const std::vector<double> times{-25.0, -20.0, -15.0, -10.0};
  auto window = [](double t) { return GridSpec{Axis(2.0 * t - 40.0, 2.0 * t + 40.0, 241), Axis(-0.5 * t - 25.0, -0.5 * t + 25.0, 151)}; };
  for (Conditioning c : {Conditioning::MarginalOnly, Conditioning::Joint}) {
    CHECK_THAT(track_slope(centroid_track(sc, Body::Particle, times, c, window)), WithinRel(2.0, 1e-3));
    CHECK_THAT(track_slope(centroid_track(sc, Body::Reflector, times, c, window)), WithinRel(-0.5, 1e-3));
  }
}

TEST_CASE("sinusoid fit recovers period, offset and amplitude", "[analysis]") {
  std::vector<double> x, y;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 1e-3);
  for (int i = 0; i <= 80; ++i) {
    x.push_back(1440.0 + 0.5 * i);
    y.push_back(0.5 + 0.45 * std::cos(kTwoPi * x.back() / 19.8 + 0.3) + noise(rng));
  }
  const SinusoidFit f = fit_sinusoid(x, y, 10.0, 40.0);
  CHECK_THAT(f.period, WithinRel(19.8, 1e-3));
  CHECK_THAT(f.offset, WithinAbs(0.5, 1e-3));
  CHECK_THAT(f.amplitude, WithinAbs(0.45, 1e-3));
  CHECK(f.rms < 2e-3);
  CHECK_THROWS(fit_sinusoid({1.0, 2.0}, {1.0, 2.0}, 1.0, 2.0));
  CHECK_THROWS(fit_sinusoid(x, y, 5.0, 5.0));
}
