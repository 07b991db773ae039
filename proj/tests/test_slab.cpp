#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <twobody/analysis.hpp>
#include <twobody/decoherence.hpp>
#include <twobody/slab.hpp>

using namespace twobody;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Units kSI = Units::si();

SlabScenario fig5_slab(double v) {
  SlabScenario sc;
  sc.particle = {kAtomicMassUnit, v, 5.0};
  sc.slab = {1e-13, 1e-3, 0.0};
  sc.D = 1e-8;
  sc.T = 1.0;
  sc.quad.nodes_particle = 64;
  sc.quad.nodes_reflector = 128;
  return sc;
}

struct Overlap {
  double band = 0.0;   // integral over the x1 band between the two groups
  double total = 0.0;  // integral over the whole window
  GridSnapshot snap;
};

// Window of +-8e-8 m (x1) by +-8e-15 m (x2) around the mean of the two
// reflected-group centroids.
Overlap overlap_at(const SlabScenario& sc, double t, std::size_t n1 = 161, std::size_t n2 = 201) {
  const auto c = slab_group_centroids(sc, t);
  const double m1 = 0.5 * (c[0].first + c[1].first), m2 = 0.5 * (c[0].second + c[1].second);
  const GridSpec g{Axis(m1 - 8e-8, m1 + 8e-8, n1), Axis(m2 - 8e-15, m2 + 8e-15, n2)};
  Overlap o;
  o.snap = slab_wavegroup_snapshot(sc, g, t);
  const double lo = std::min(c[0].first, c[1].first), hi = std::max(c[0].first, c[1].first);
  o.band = region_integral(o.snap, lo, hi, g.x2.min, g.x2.max);
  o.total = o.snap.norm;
  return o;
}

}  // namespace

TEST_CASE("harmonic slab PDF: zeros, approximation and mass insensitivity", "[slab]") {
  const double m = kNeutronMass, D = 1e-8;
  const double v_zero = kPi * kSI.hbar / (D * m);
  CHECK(slab_harmonic_pdf(kSI, m, 1e-13, v_zero, 0.0, D).approximate < 1e-20);
  const SlabHarmonic h = slab_harmonic_pdf(kSI, m, 1e-13, 1448.0, 1e-3, D);
  CHECK_THAT(h.exact, WithinAbs(h.approximate, 1e-3));
  const SlabHarmonic h10 = slab_harmonic_pdf(kSI, m, 1e-12, 1448.0, 1e-3, D);
  CHECK_THAT(h10.exact, WithinRel(h.exact, 1e-3));
  // A 10 m/s step near 1450 m/s moves the phase by about pi / 2, which turns
  // a maximum of sin^2 into a minimum.
  const double phase_step = D * m * 10.0 / kSI.hbar;
  CHECK_THAT(phase_step, WithinRel(kPi / 2, 0.02));
}

TEST_CASE("recoil offset and overlap temperature bound", "[slab]") {
  CHECK_THAT(slab_recoil_offset(kNeutronMass, 1e-13, 1e-8), WithinRel(3.35e-22, 0.01));
  CHECK_THAT(slab_recoil_offset(kNeutronMass, 1e-13, 2e-8), WithinRel(2 * slab_recoil_offset(kNeutronMass, 1e-13, 1e-8), 1e-15));
  const double Tb = slab_overlap_temperature_bound(kSI, kNeutronMass, 1e-13, 1e-8);
  CHECK_THAT(Tb, WithinRel(1.417e12, 1e-3));
  CHECK_THAT(slab_overlap_temperature_bound(kSI, kNeutronMass, 2e-13, 1e-8), WithinRel(2 * Tb, 1e-15));
  CHECK(slab_no_interference_temperature(kSI, kNeutronMass, 1e-13, 1e-8) == Tb);
}

TEST_CASE("offset below thermal coherence length exactly when T is below the bound", "[slab]") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lg(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double m = kNeutronMass * std::pow(10.0, 4.0 * lg(rng));
    const double M = std::pow(10.0, -20.0 + 10.0 * lg(rng));
    const double D = std::pow(10.0, -10.0 + 4.0 * lg(rng));
    const double T = std::pow(10.0, -3.0 + 20.0 * lg(rng));
    const double bound = slab_overlap_temperature_bound(kSI, m, M, D);
    if (std::abs(T / bound - 1.0) < 1e-9) continue;
    REQUIRE((slab_recoil_offset(m, M, D) < thermal_coherence(kSI, M, T)) == (T < bound));
  }
}

TEST_CASE("slab snapshot: reflection amplitude scaling and empty windows", "[slab]") {
  SlabScenario sc = fig5_slab(1448.0);
  sc.quad.nodes_reflector = 64;
  const Overlap a = overlap_at(sc, 1e-10, 81, 81);
  sc.r = 0.005;
  const Overlap b = overlap_at(sc, 1e-10, 81, 81);
  CHECK_THAT(b.total, WithinRel(a.total / 4.0, 1e-12));
  CHECK(a.snap.warnings.empty());

  const GridSpec far{Axis(1e-6, 2e-6, 11), Axis(-1e-15, 1e-15, 11)};
  const GridSnapshot s = slab_wavegroup_snapshot(sc, far, 1e-10);
  CHECK(s.norm == 0.0);
  REQUIRE(s.warnings.size() == 1);
  for (double p : s.pdf) CHECK(p == 0.0);
}

TEST_CASE("the two reflected groups keep a fixed separation", "[slab]") {
  const SlabScenario sc = fig5_slab(1448.0);
  const auto c0 = slab_group_centroids(sc, 1e-10);
  const auto c1 = slab_group_centroids(sc, 1e-6);
  CHECK_THAT(c1[1].first - c1[0].first, WithinRel(c0[1].first - c0[0].first, 1e-6));
  CHECK_THAT(c1[1].second - c1[0].second, WithinAbs(c0[1].second - c0[0].second, 1e-24));
  // Separation along x1 is about 2 D; along x2 it is the recoil offset.
  CHECK_THAT(std::abs(c0[1].first - c0[0].first), WithinRel(2e-8, 1e-6));
  CHECK_THAT(std::abs(c0[1].second - c0[0].second), WithinRel(slab_recoil_offset(sc.particle.mass, 1e-13, 1e-8), 1e-6));
}

TEST_CASE("constructive and destructive slab overlap at 1448 and 1458 m/s", "[slab]") {
  const Overlap on = overlap_at(fig5_slab(1448.0), 1e-10);
  const Overlap off = overlap_at(fig5_slab(1458.0), 1e-10);
  CHECK(off.band / on.band < 0.2);
}

TEST_CASE("doubling the slab mass barely changes the overlap", "[slab]") {
  SlabScenario a = fig5_slab(1448.0), b = fig5_slab(1448.0);
  b.slab.mass = 2e-13;
  const Overlap oa = overlap_at(a, 1e-10), ob = overlap_at(b, 1e-10);
  CHECK_THAT(ob.band / ob.total, WithinRel(oa.band / oa.total, 0.005));
}

TEST_CASE("thin slabs approach the harmonic contrast at fixed phase", "[slab]") {
  // Hold D m v / hbar at the 1448 and 1458 m/s values while D shrinks. The
  // group offset 2D falls well below the particle coherence length, so the
  // destructive to constructive norm ratio tends to the harmonic one.
  const Units& u = kSI;
  auto ratio = [&](double D) {
    double norm[2];
    int k = 0;
    for (double v : {1448.0, 1458.0}) {
      SlabScenario sc = fig5_slab(1e-8 * v / D);
      sc.D = D;
      norm[k++] = overlap_at(sc, 1e-10).total;
    }
    return norm[1] / norm[0];
  };
  const double target = slab_harmonic_pdf(u, kAtomicMassUnit, 1e-13, 1458.0, 1e-3, 1e-8).exact /
                        slab_harmonic_pdf(u, kAtomicMassUnit, 1e-13, 1448.0, 1e-3, 1e-8).exact;
  const double thick = ratio(1e-8), thin = ratio(3.125e-10);
  CHECK(thick > 3.0 * target);
  CHECK_THAT(thin, WithinRel(target, 0.02));
}
