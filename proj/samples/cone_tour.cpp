// Small tour of the library: a spin-3/2 cone, its charge and velocities, then
// one flavour-oscillation probability near the node.

#include <cstdio>

#include "conelab/conelab.hpp"

int main() {
  using namespace conelab;

  const BlochModel model(su2_rho(4));
  const Vec2 K = dirac_point_k();
  const RVector e = eigvalsh(bloch_hamiltonian(model, K + Vec2(0.01, 0.0)));
  std::printf("E(K + 0.01 x):");
  for (int i = 0; i < e.size(); ++i) std::printf(" %+.6f", e(i));
  std::printf("\n");

  const auto v = fermi_velocities(model, K, Vec2(1.0, 0.0));
  std::printf("velocities:");
  for (double x : v) std::printf(" %.6f", x);
  std::printf("\ncharge at K: %d\n", chiral_winding(model, K));

  const PmnsParams angles{kPi / 4, kPi / 4, kPi / 4, 0.0};
  const MixingSpec spec = MixingSpec::symmetric(angles, Vec3(0.02 * kPi, 0.0, 0.0));
  const Vec2 k = momentum_near_node(0.2 * kPi, kPi / 4);
  const double t = default_probe_time(spec, 0.2 * kPi);
  const std::vector<double> times{t};
  const auto trace = evolve(spec, prepare_flavour_state(spec, k, Flavour::E, Branch::Negative), times);
  std::printf("P(e -> mu) at t = %.3f: %.6f\n", t, trace.probability(Flavour::Mu)[0]);
  return 0;
}
