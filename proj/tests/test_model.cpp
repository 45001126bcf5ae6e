#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "spinchain/model.hpp"
#include "spinchain/random.hpp"
#include "test_util.hpp"

using namespace spinchain;
using testutil::make_sum;
using testutil::max_abs_diff;

namespace {

ChainConfig chain(int n_sites, int cut) {
  ChainConfig cfg;
  cfg.num_sites = n_sites;
  cfg.cut = cut;
  cfg.time_grid = {0.0, 1.0};
  return cfg;
}

}  // namespace

TEST_CASE("chain Hamiltonian construction") {
  SECTION("two sites, unit coupling, no fields") {
    const auto h = build_hamiltonian(chain(2, 2));
    REQUIRE(h.size() == 1);
    REQUIRE(h.coeff(PauliString::from_label("ZZ")) == Complex{1.0, 0.0});
  }
  SECTION("three sites, no fields") {
    const auto h = build_hamiltonian(chain(3, 2));
    REQUIRE(h == make_sum({{1.0, "ZZI"}, {1.0, "IZZ"}}));
  }
  SECTION("field only on the last spin") {
    ChainConfig cfg = chain(3, 2);
    cfg.fields = {0.0, 0.0, 0.7};
    const auto h = build_hamiltonian(cfg);
    REQUIRE(h == make_sum({{1.0, "ZZI"}, {1.0, "IZZ"}, {0.7, "IIX"}}));
  }
  SECTION("per-bond couplings") {
    ChainConfig cfg = chain(3, 2);
    cfg.couplings = {0.5, -2.0};
    const auto h = build_hamiltonian(cfg);
    REQUIRE(h == make_sum({{0.5, "ZZI"}, {-2.0, "IZZ"}}));
  }
  SECTION("Hermitian, and dense form matches embedding-based construction") {
    ChainConfig cfg = chain(4, 2);
    cfg.fields = {0.1, 0.0, -0.4, 1.2};
    cfg.couplings = {1.0, 0.3, 2.0};
    const auto h = build_hamiltonian(cfg);
    REQUIRE(h.is_hermitian());

    Eigen::MatrixXcd want = Eigen::MatrixXcd::Zero(16, 16);
    const DenseOperator zz(
        2, oracle::kron(oracle::pauli_matrix('Z'), oracle::pauli_matrix('Z')));
    for (int j = 1; j <= 3; ++j) {
      want += cfg.coupling(j) * embed(zz, SiteSet::of({j, j + 1}), 4).mat;
    }
    for (int j = 1; j <= 4; ++j) {
      want += cfg.field(j) * embed(DenseOperator(1, oracle::pauli_matrix('X')),
                                   SiteSet::of({j}), 4)
                                 .mat;
    }
    REQUIRE(max_abs_diff(to_dense(h).mat, want) == 0.0);
  }
  SECTION("configuration validation") {
    ChainConfig bad = chain(3, 2);
    bad.couplings = {1.0};
    REQUIRE_THROWS_AS(build_hamiltonian(bad), ValidationError);
    ChainConfig bad2 = chain(3, 5);
    REQUIRE_THROWS_AS(build_hamiltonian(bad2), ValidationError);
    ChainConfig bad3 = chain(3, 2);
    bad3.time_grid = {1.0, 0.5};
    REQUIRE_THROWS_AS(bad3.validate(), ValidationError);
  }
}

TEST_CASE("support split into system, environment and interaction") {
  SECTION("three sites cut at 2") {
    const auto parts = split_hamiltonian(build_hamiltonian(chain(3, 2)), 2);
    REQUIRE(parts.system.empty());
    REQUIRE(parts.environment == make_sum({{1.0, "IZZ"}}));
    REQUIRE(parts.interaction == make_sum({{1.0, "ZZI"}}));
  }
  SECTION("four sites cut at 3") {
    const auto parts = split_hamiltonian(build_hamiltonian(chain(4, 3)), 3);
    REQUIRE(parts.system == make_sum({{1.0, "ZZII"}}));
    REQUIRE(parts.environment == make_sum({{1.0, "IIZZ"}}));
    REQUIRE(parts.interaction == make_sum({{1.0, "IZZI"}}));
  }
  SECTION("a field on the cut spin lands in the environment part") {
    ChainConfig cfg = chain(3, 2);
    cfg.fields = {0.0, 0.3, 0.0};
    const auto parts = split_hamiltonian(build_hamiltonian(cfg), 2);
    REQUIRE(parts.environment.coeff(PauliString::from_label("IXI")) ==
            Complex{0.3, 0.0});
  }
  SECTION("parts re-sum to the Hamiltonian exactly") {
    RngEngine rng(89);
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 3 + static_cast<int>(rng() % 3);
      const auto h = random_pauli_sum(n, 10, rng, false, true);
      const int cut = 2 + static_cast<int>(rng() % (n - 1));
      const auto parts = split_hamiltonian(h, cut);
      REQUIRE(parts.system + parts.environment + parts.interaction == h);
    }
  }
}

TEST_CASE("cut-spin split") {
  SECTION("minimum chain: both bonds, empty remainder") {
    const auto s = split_at_cut_spin(build_hamiltonian(chain(3, 2)), 2);
    REQUIRE(s.left_bond == make_sum({{1.0, "ZZI"}}));
    REQUIRE(s.right_bond == make_sum({{1.0, "IZZ"}}));
    REQUIRE(s.rest.empty());
  }
  SECTION("five sites cut at 3") {
    const auto s = split_at_cut_spin(build_hamiltonian(chain(5, 3)), 3);
    REQUIRE(s.left_bond == make_sum({{1.0, "IZZII"}}));
    REQUIRE(s.right_bond == make_sum({{1.0, "IIZZI"}}));
    REQUIRE(s.rest == make_sum({{1.0, "ZZIII"}, {1.0, "IIIZZ"}}));
  }
  SECTION("a field away from the cut is tolerated and classified as rest") {
    ChainConfig cfg = chain(4, 2);
    cfg.fields = {0.0, 0.0, 0.0, 0.9};
    const auto s = split_at_cut_spin(build_hamiltonian(cfg), 2);
    REQUIRE(s.rest.coeff(PauliString::from_label("IIIX")) ==
            Complex{0.9, 0.0});
    // support classification: the rest splits into system-local and
    // far-environment-local pieces
    for (const auto& [key, c] : s.rest.terms()) {
      const auto term = s.rest.term(key, c);
      const bool sys_local = term.identity_on(SiteSet::range(2, 4));
      const bool far_local = term.identity_on(SiteSet::range(1, 2));
      REQUIRE((sys_local || far_local));
    }
  }
  SECTION("a field on the cut spin is a structure error") {
    ChainConfig cfg = chain(3, 2);
    cfg.fields = {0.0, 0.4, 0.0};
    REQUIRE_THROWS_AS(split_at_cut_spin(build_hamiltonian(cfg), 2),
                      StructureError);
  }
  SECTION("cut bounds") {
    REQUIRE_THROWS_AS(split_at_cut_spin(build_hamiltonian(chain(3, 2)), 3),
                      UsageError);
  }
}

TEST_CASE("initial state assembly") {
  SECTION("basis block with an equatorial cut spin") {
    ChainConfig cfg = chain(3, 2);
    InitialStateSpec spec;
    Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(4, 4);
    block(0, 0) = 1.0;  // |00> on sites (1,3)
    spec.rest_state = DenseOperator(2, block);
    spec.r_x = 1.0;
    const DenseOperator rho = build_initial_state(spec, cfg);

    // oracle: |0> (x) |+> (x) |0>
    Eigen::VectorXcd zero(2), plus(2);
    zero << 1, 0;
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(8);
    for (int b1 = 0; b1 < 2; ++b1)
      for (int b2 = 0; b2 < 2; ++b2)
        for (int b3 = 0; b3 < 2; ++b3)
          psi[b1 * 4 + b2 * 2 + b3] = zero[b1] * plus[b2] * zero[b3];
    REQUIRE(max_abs_diff(rho.mat, psi * psi.adjoint()) < 1e-15);
  }
  SECTION("zero Bloch vector gives I/2 at the cut") {
    ChainConfig cfg = chain(3, 2);
    RngEngine rng(97);
    InitialStateSpec spec;
    spec.rest_state = random_state(2, rng);
    const DenseOperator rho = build_initial_state(spec, cfg);
    // tracing out everything but the cut yields I/2
    const auto cut_state = partial_trace(rho, SiteSet::of({1, 3}));
    REQUIRE(max_abs_diff(cut_state.mat,
                         0.5 * Eigen::MatrixXcd::Identity(2, 2)) < 1e-14);
  }
  SECTION("interleaving against a brute-force oracle") {
    ChainConfig cfg = chain(3, 2);
    RngEngine rng(101);
    InitialStateSpec spec;
    spec.rest_state = random_state(2, rng);
    spec.r_x = 0.3;
    spec.r_y = -0.5;
    const DenseOperator rho = build_initial_state(spec, cfg);
    const Eigen::Matrix2cd cut = bloch_state(0.3, -0.5);
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) {
        const int a1 = (a >> 2) & 1, a2 = (a >> 1) & 1, a3 = a & 1;
        const int b1 = (b >> 2) & 1, b2 = (b >> 1) & 1, b3 = b & 1;
        const Complex want =
            spec.rest_state.mat(a1 * 2 + a3, b1 * 2 + b3) * cut(a2, b2);
        REQUIRE(std::abs(rho.mat(a, b) - want) < 1e-15);
      }
    }
  }
  SECTION("equatorial states have no Z component at the cut") {
    RngEngine rng(103);
    for (int trial = 0; trial < 6; ++trial) {
      const int n = 3 + static_cast<int>(rng() % 2);
      ChainConfig cfg = chain(n, 2 + static_cast<int>(rng() % (n - 2)));
      InitialStateSpec spec;
      spec.rest_state = random_state(n - 1, rng);  // entangled across the cut
      const auto [x, y] = random_bloch_xy(rng);
      spec.r_x = x;
      spec.r_y = y;
      const DenseOperator rho = build_initial_state(spec, cfg);
      const SiteComponents parts =
          decompose_at_site(pauli_expand(rho), cfg.cut);
      REQUIRE(parts.z.empty());
      REQUIRE_FALSE(parts.y.empty());
    }
  }
  SECTION("validation rejects bad inputs") {
    ChainConfig cfg = chain(3, 2);
    InitialStateSpec spec;
    spec.rest_state = DenseOperator::identity(2);  // trace 4, not a state
    REQUIRE_THROWS_AS(build_initial_state(spec, cfg), ValidationError);

    RngEngine rng(107);
    spec.rest_state = random_state(2, rng);
    spec.r_x = 0.9;
    spec.r_y = 0.9;
    REQUIRE_THROWS_AS(build_initial_state(spec, cfg), ValidationError);

    spec.r_x = 0.0;
    spec.r_y = 0.0;
    spec.rest_state = random_state(1, rng);
    REQUIRE_THROWS_AS(build_initial_state(spec, cfg), ValidationError);
  }
}

TEST_CASE("bloch matrix") {
  const Eigen::Matrix2cd rho = bloch_state(0.6, -0.2, 0.1);
  REQUIRE(std::abs(rho.trace() - Complex{1.0, 0.0}) == 0.0);
  REQUIRE(std::abs(rho(0, 1) - Complex{0.3, 0.1}) < 1e-15);
  REQUIRE(std::abs(rho(1, 0) - Complex{0.3, -0.1}) < 1e-15);
  REQUIRE(std::abs(rho(0, 0).real() - 0.55) < 1e-15);
}
