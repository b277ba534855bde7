#include <catch_amalgamated.hpp>

#include "conelab/scenario.hpp"

using namespace conelab;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

Error parse_error(const std::string& text) {
  try {
    (void)parse_scenario_text(text);
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected a scenario error");
  return Error(ErrorKind::Io, "");
}

}  // namespace

TEST_CASE("number expressions", "[scenario]") {
  CHECK(parse_number("2") == 2.0);
  CHECK(parse_number("-1.5e-3") == -1.5e-3);
  CHECK_THAT(parse_number("pi/4"), WithinAbs(kPi / 4, 1e-16));
  CHECK_THAT(parse_number("0.01*2*pi"), WithinAbs(0.02 * kPi, 1e-16));
  CHECK_THAT(parse_number("sqrt(3)"), WithinAbs(std::sqrt(3.0), 1e-16));
  CHECK_THAT(parse_number("-(1 + 2) * 3 / 4"), WithinAbs(-2.25, 1e-16));
  CHECK_THROWS_AS(parse_number("2 +"), Error);
  CHECK_THROWS_AS(parse_number("foo"), Error);
  CHECK_THROWS_AS(parse_number("(1"), Error);
}

TEST_CASE("minimal su2 model gets defaults", "[scenario]") {
  const auto s = parse_scenario_text("[model]\nn = 2\nsu2 = true\n");
  REQUIRE(s.model);
  CHECK(s.model->n == 2);
  CHECK(s.model->t_x == 1.0);
  CHECK(s.model->t_y == 1.0);
  const auto m = s.model->build();
  CHECK_FALSE(m.has_onsite());
  CHECK(m.rho()[0] == 1.0);
  CHECK_FALSE(s.mixing);
  CHECK(s.run.out == "out");
}

TEST_CASE("shipped mixing scenario", "[scenario]") {
  const auto s = parse_scenario(std::string(CONELAB_SCENARIO_DIR) + "/mixing_oscillate.ini");
  REQUIRE(s.mixing);
  const auto spec = s.mixing->build();
  CHECK_THAT(spec.pmns.theta12, WithinAbs(kPi / 4, 1e-16));
  CHECK_THAT(spec.pmns.theta13, WithinAbs(kPi / 4, 1e-16));
  CHECK_THAT(spec.pmns.theta23, WithinAbs(kPi / 4, 1e-16));
  CHECK((spec.h_vectors[1] - Vec3(0.01 * 2 * kPi, 0, 0)).norm() < 1e-16);
  CHECK(spec.is_symmetric_pattern());
  CHECK(s.run.subcommand == std::optional<std::string>("oscillate"));
}

TEST_CASE("two rho forms are rejected", "[scenario][errors]") {
  const auto e = parse_error("[model]\nrho = 1, 2, 1\ntheta = 0.3\nphi = 0.2\n");
  CHECK(e.kind() == ErrorKind::Validation);
  CHECK(e.is_input_error());
}

TEST_CASE("unknown keys and sections are hard errors", "[scenario][errors]") {
  const auto e = parse_error("[model]\nn = 2\nsu2 = true\nt_z = 1\n");
  CHECK(e.kind() == ErrorKind::Validation);
  CHECK_THAT(std::string(e.what()), ContainsSubstring("model.t_z"));
  CHECK_THAT(std::string(e.what()), ContainsSubstring("line 4"));
  CHECK(parse_error("[modle]\nn = 2\n").kind() == ErrorKind::Validation);
}

TEST_CASE("syntax errors carry the line number", "[scenario][errors]") {
  const auto e = parse_error("[model]\nn = 2\nsu2 true\n");
  CHECK(e.kind() == ErrorKind::Parse);
  CHECK_THAT(std::string(e.what()), ContainsSubstring("line 3"));
  CHECK(parse_error("[model\n").kind() == ErrorKind::Parse);
  CHECK(parse_error("n = 2\n").kind() == ErrorKind::Parse);
  CHECK(parse_error("[run]\nnk = 1\nnk = 2\n").kind() == ErrorKind::Parse);
}

TEST_CASE("bad values name the offending key", "[scenario][errors]") {
  const auto e = parse_error("[model]\nn = 4\nsu2 = true\nt_x = 1 +\n");
  CHECK(e.kind() == ErrorKind::Validation);
  CHECK_THAT(std::string(e.what()), ContainsSubstring("model.t_x"));
  CHECK_THAT(std::string(parse_error("[model]\nrho = 1\nn = 3\n").what()), ContainsSubstring("model.n"));
  CHECK_THAT(std::string(parse_error("[model]\nrho = 1, 0, 1\nonsite_h = [1, 0]\n").what()),
             ContainsSubstring("model.onsite_h"));
  CHECK_THAT(std::string(parse_error("[run]\nbranch = up\n").what()), ContainsSubstring("run.branch"));
  CHECK(parse_error("[run]\nkx = 1\n").kind() == ErrorKind::Validation);
  CHECK(parse_error("[mixing]\nh = [1,0,0]\nh2 = [0,0,1]\n").kind() == ErrorKind::Validation);
}

TEST_CASE("double-layer and onsite sections build", "[scenario]") {
  const auto s = parse_scenario_text(
      "# comment\n[model]\ntheta = pi/4\nphi = pi/2  # trailing\nrho_norm = 2\nonsite_diag = 0.1, 0.1, 0.1, 0.1\n");
  REQUIRE(s.model);
  CHECK(s.model->n == 4);
  const auto m = s.model->build();
  CHECK(std::abs(m.onsite()(2, 2) - Complex(0.1)) < 1e-15);
  const auto b = parse_scenario_text("[model]\nrho = 1, 0, 1\nonsite_h = [0.1, 0, 0], [0, 0.2, 0]\n");
  CHECK(b.model->onsite_h.size() == 2);
}

TEST_CASE("missing file is an io error", "[scenario][errors]") {
  try {
    (void)parse_scenario("/nonexistent/file.ini");
    FAIL("no exception");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("run section times and momentum", "[scenario]") {
  const auto s = parse_scenario_text("[run]\nt_max = 10\nn_times = 11\np_mag = 0.1\np_angle = pi/2\n");
  const auto t = s.run.times();
  REQUIRE(t.size() == 11);
  CHECK(t[10] == 10.0);
  const Vec2 k = s.run.momentum();
  CHECK_THAT(k.x(), WithinAbs(kPi / 2, 1e-15));
  CHECK_THAT(k.y(), WithinAbs(kPi / 2 + 0.1, 1e-15));
  CHECK(s.run.deltas.size() == 4);
}
