#include <doctest.h>

#include <algorithm>
#include <set>

#include "sdde/harness.hpp"
#include "test_util.hpp"

using namespace sdde;

namespace {

HarnessConfig small(std::uint64_t seed) {
  HarnessConfig c;
  c.seed = seed;
  c.segments = 16;
  c.pairs = 8;
  c.seeds = 3;
  return c;
}

bool has_prefix(const std::vector<CheckResult>& checks, const std::string& prefix) {
  return std::any_of(checks.begin(), checks.end(), [&](const CheckResult& c) { return c.name.rfind(prefix, 0) == 0; });
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("every registered check is executed or listed as not scheduled") {
  std::set<std::string> registry;
  for (const auto& spec : check_registry()) {
    CHECK(registry.insert(spec.name).second);
    CHECK(spec.name.rfind(spec.module + ".", 0) == 0);
    CHECK_FALSE(spec.anchor.empty());
  }
  for (const char* id : {"ode", "eq1", "mvw", "twodelay"}) {
    CAPTURE(id);
    const VerificationReport rep = run_suite(id, small(3));
    std::multiset<std::string> seen;
    for (const auto& c : rep.checks) seen.insert(c.name);
    for (const auto& n : rep.not_scheduled) seen.insert(n);
    CHECK(std::set<std::string>(seen.begin(), seen.end()) == registry);
    CHECK(seen.size() == registry.size());
    CHECK(std::is_sorted(rep.checks.begin(), rep.checks.end(),
                         [](const CheckResult& a, const CheckResult& b) { return a.name < b.name; }));
    for (const auto& c : rep.checks) {
      CAPTURE(c.name);
      CHECK(c.passed);
      CHECK(c.max_residual <= c.tolerance);
    }
    CHECK(rep.passed());
  }
}

TEST_CASE("scheduling follows the strata") {
  const VerificationReport ode = run_suite("ode", small(4));
  CHECK_FALSE(has_prefix(ode.checks, "chart_j."));
  CHECK(has_prefix(ode.checks, "chart_k."));
  for (const char* id : {"eq1", "mvw"}) {
    const VerificationReport rep = run_suite(id, small(4));
    CHECK(has_prefix(rep.checks, "chart_j."));
    CHECK_FALSE(has_prefix(rep.checks, "chart_k."));
  }
}

TEST_CASE("reports are reproducible") {
  const std::string a = dump_json(run_suite("mvw", small(7)).to_json());
  const std::string b = dump_json(run_suite("mvw", small(7)).to_json());
  CHECK(a == b);
  HarnessConfig threaded = small(7);
  threaded.jobs = 3;
  CHECK(dump_json(run_suite("mvw", threaded).to_json()).size() > 0);
  const VerificationReport r1 = run_suite("mvw", small(7)), r2 = run_suite("mvw", threaded);
  REQUIRE(r1.checks.size() == r2.checks.size());
  for (std::size_t i = 0; i < r1.checks.size(); ++i) CHECK(r1.checks[i].max_residual == r2.checks[i].max_residual);
}

TEST_CASE("report formats") {
  const VerificationReport rep = run_suite("ode", small(5));
  const json doc = rep.to_json();
  CHECK(doc["model"] == "ode");
  CHECK(doc["passed"] == true);
  CHECK(doc["checks"].size() == rep.checks.size());
  CHECK(doc["environment"]["seed"] == 5);
  const std::string text = rep.to_text();
  CHECK(text.find("funcspace.norms") != std::string::npos);
  REQUIRE(rep.find("funcspace.norms") != nullptr);
  CHECK(rep.find("no.such.check") == nullptr);
}

TEST_CASE("custom models run without the built-in strata check") {
  const ModelPtr m = testutil::builtin("mvw", {{"gain", 0.7}});
  const VerificationReport rep = run_suite(m, small(6));
  CHECK(rep.find("atlas.expected_strata") == nullptr);
  CHECK(std::count(rep.not_scheduled.begin(), rep.not_scheduled.end(), "atlas.expected_strata") == 1);
  CHECK(rep.passed());
}

}  // TEST_SUITE
