// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "doctest.h"
#include "test_support.hpp"
#include "tvmerge/selection.hpp"

using namespace tvmerge;
using namespace tvmerge::testing;

TEST_CASE("default grid") {
  const AlphaGrid g;
  REQUIRE(g.values().size() == 9);
  for (std::size_t k = 0; k < 9; ++k) CHECK(g.values()[k] == 0.125 * static_cast<double>(k));
  CHECK(g.contains(0.375));
  CHECK(!g.contains(0.3));
}

TEST_CASE("grid validation") {
  CHECK(error_code_of([] { AlphaGrid(std::vector<double>{}); }) == Errc::InvalidGrid);
  CHECK(error_code_of([] { AlphaGrid({0.5, 0.25}); }) == Errc::InvalidGrid);
  CHECK(error_code_of([] { AlphaGrid({0.5, 0.5}); }) == Errc::InvalidGrid);
  CHECK(error_code_of([] { AlphaGrid({-0.1, 0.5}); }) == Errc::InvalidGrid);
  CHECK(error_code_of([] { AlphaGrid({0.5, 1.5}); }) == Errc::InvalidGrid);
  CHECK(error_code_of([] { AlphaGrid({std::numeric_limits<double>::quiet_NaN()}); }) == Errc::InvalidGrid);
  CHECK(AlphaGrid({0.0, 0.3, 1.0}).values().size() == 3);
}

TEST_CASE("held-out selection") {
  const AlphaGrid g;
  SUBCASE("unique minimum at 0.5") {
    const auto r = select_alpha_heldout(g, "t", {"a", "b"}, [](double a, const std::string&) { return std::abs(a - 0.5); });
    CHECK(r.chosen_alpha == 0.5);
    CHECK(r.mode == SelectionMode::heldout);
    CHECK(r.target == "t");
    CHECK(r.heldout_languages == std::vector<std::string>{"a", "b"});
    CHECK(r.per_alpha_scores.size() == 9);
    CHECK(r.per_alpha_scores.at(0.25).at("b") == 0.25);
  }
  SUBCASE("constant evaluator ties to the smallest alpha") {
    const auto r = select_alpha_heldout(g, "t", {"a"}, [](double, const std::string&) { return 0.3; });
    CHECK(r.chosen_alpha == 0.0);
  }
  SUBCASE("complementary languages give a constant mean") {
    const auto r = select_alpha_heldout(g, "t", {"a", "b"}, [](double a, const std::string& l) { return l == "a" ? a : 1.0 - a; });
    for (const auto& [alpha, obj] : r.objective) CHECK(obj == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.chosen_alpha == 0.0);
  }
  SUBCASE("the target is never evaluated") {
    std::vector<std::string> seen;
    select_alpha_heldout(g, "t", {"a", "b"}, [&](double, const std::string& l) {
      seen.push_back(l);
      return 0.0;
    });
    CHECK(std::find(seen.begin(), seen.end(), "t") == seen.end());
    CHECK(seen.size() == 18);
  }
  SUBCASE("errors") {
    auto zero = [](double, const std::string&) { return 0.0; };
    CHECK(error_code_of([&] { select_alpha_heldout(g, "t", {}, zero); }) == Errc::EmptyHeldout);
    CHECK(error_code_of([&] { select_alpha_heldout(g, "t", {"a", "t"}, zero); }) == Errc::InvalidArgument);
    try {
      select_alpha_heldout(g, "t", {"a", "b"}, [](double a, const std::string& l) -> double {
        if (a == 0.625 && l == "b") throw std::runtime_error("boom");
        return 0.0;
      });
      FAIL("expected EvaluatorFailure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::EvaluatorFailure);
      const std::string msg = e.what();
      CHECK(msg.find("0.625") != std::string::npos);
      CHECK(msg.find("'b'") != std::string::npos);
      CHECK(msg.find("boom") != std::string::npos);
    }
    CHECK(error_code_of([&] {
            select_alpha_heldout(g, "t", {"a"}, [](double, const std::string&) { return std::nan(""); });
          }) == Errc::EvaluatorFailure);
  }
}

TEST_CASE("oracle selection") {
  const AlphaGrid g;
  CHECK(select_alpha_oracle(g, "t", [](double a) { return std::abs(a - 0.875); }).chosen_alpha == 0.875);
  CHECK(select_alpha_oracle(g, "t", [](double a) { return 1.0 - a; }).chosen_alpha == 1.0);
  const auto r = select_alpha_oracle(g, "t", [](double a) { return a * a; });
  CHECK(r.mode == SelectionMode::oracle);
  CHECK(r.per_alpha_scores.at(0.5).at("t") == 0.25);
}

TEST_CASE("oracle dominance on random score tables") {
  const AlphaGrid g;
  toybench::Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::pair<double, std::string>, double> table;
    for (double a : g.values())
      for (const char* l : {"t", "a", "b", "c"}) table[{a, l}] = rng.uniform();
    auto cer = [&](double a, const std::string& l) { return table.at({a, l}); };
    const auto held = select_alpha_heldout(g, "t", {"a", "b", "c"}, cer);
    const auto oracle = select_alpha_oracle(g, "t", [&](double a) { return cer(a, "t"); });
    REQUIRE(g.contains(held.chosen_alpha));
    REQUIRE(g.contains(oracle.chosen_alpha));
    REQUIRE(cer(oracle.chosen_alpha, "t") <= cer(held.chosen_alpha, "t"));
    // Brute-force argmin of the held-out mean.
    double best = std::numeric_limits<double>::infinity(), best_a = -1;
    for (double a : g.values()) {
      const double m = (cer(a, "a") + cer(a, "b") + cer(a, "c")) / 3.0;
      if (m < best) best = m, best_a = a;
    }
    REQUIRE(held.chosen_alpha == best_a);
  }
}

TEST_CASE("shared selection averages per-target held-out means") {
  const AlphaGrid g({0.0, 0.5, 1.0});
  const std::vector<std::string> langs = {"a", "b", "c"};
  // Target "a" prefers 1, others prefer 0.5.
  auto cer = [](double alpha, const std::string& t, const std::string& l) {
    (void)l;
    return t == "a" ? 1.0 - alpha : std::abs(alpha - 0.5);
  };
  const auto r = select_alpha_shared(g, langs, langs, cer);
  CHECK(r.objective.at(0.0) == doctest::Approx((1.0 + 0.5 + 0.5) / 3.0));
  CHECK(r.objective.at(0.5) == doctest::Approx((0.5 + 0.0 + 0.0) / 3.0));
  CHECK(r.chosen_alpha == 0.5);
  CHECK(r.per_alpha_scores.at(1.0).count("a/b") == 1);
  CHECK(r.per_alpha_scores.at(1.0).count("a/a") == 0);
}

TEST_CASE("selection JSON and alpha formatting") {
  CHECK(format_alpha(0.125) == "0.125");
  CHECK(format_alpha(1.0) == "1");
  CHECK(format_alpha(0.0) == "0");
  const auto r = select_alpha_oracle(AlphaGrid(), "t", [](double a) { return std::abs(a - 0.25); });
  const auto j = to_json(r);
  CHECK(j["chosen_alpha"] == 0.25);
  CHECK(j["mode"] == "oracle");
  CHECK(j["target"] == "t");
}
