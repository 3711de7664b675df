// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#include <limits>

#include "doctest.h"
#include "test_support.hpp"
#include "tvmerge/task_arith.hpp"

using namespace tvmerge;
using namespace tvmerge::testing;

namespace {

ParameterSet single(std::initializer_list<double> values) {
  ParameterSet p;
  p.set("w", Tensor::from_values({values.size()}, values));
  return p;
}

TaskVector tv_of(std::initializer_list<double> values) { return TaskVector{single(values), "", ""}; }

std::vector<double> values(const ParameterSet& p) {
  const auto& d = p.at("w").data;
  return {d.data(), d.data() + d.size()};
}

SimilarityMatrix toy_matrix(SimilarityMetric metric) {
  SimilarityMatrix m;
  m.metric = metric;
  m.languages = {"a", "b", "c", "t"};
  m.scores.setIdentity(4, 4);
  m.scores(0, 3) = 0.7;
  m.scores(1, 3) = 0.2;
  m.scores(2, 3) = 0.7;
  return m;
}

}  // namespace

TEST_CASE("task_vector") {
  CHECK(values(task_vector(single({3, 5}), single({1, 2})).params) == std::vector<double>{2, 3});
  const auto zero = task_vector(single({3, 5}), single({3, 5}));
  CHECK(values(zero.params) == std::vector<double>{0, 0});
  CHECK(error_code_of([] { task_vector(single({1, 2}), single({1, 2, 3})); }) == Errc::ShapeMismatch);

  ParameterSet ft = single({1});
  ft.metadata()["role"] = "real";
  ft.metadata()["lang"] = "fr";
  ParameterSet anc = single({0});
  anc.metadata()["role"] = "ancestor";
  const auto tv = task_vector(ft, anc);
  CHECK(tv.minuend == "real/fr");
  CHECK(tv.subtrahend == "ancestor");
}

TEST_CASE("s2r_delta") {
  CHECK(values(s2r_delta(tv_of({4}), tv_of({1})).params) == std::vector<double>{3});
  CHECK(values(s2r_delta(tv_of({4, 2}), tv_of({4, 2})).params) == std::vector<double>{0, 0});
}

TEST_CASE("delta via task vectors equals the direct difference on random checkpoints") {
  toybench::Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const ParameterSet anc = random_params(rng);
    const ParameterSet syn = random_params(rng);
    const ParameterSet real = random_params(rng);
    const auto via = s2r_delta(task_vector(real, anc), task_vector(syn, anc));
    const auto direct = task_vector(real, syn);
    REQUIRE(max_rel_diff(via.params, direct.params) <= 1e-12);
    // Brute-force elementwise.
    for (const auto& [name, t] : real.entries())
      for (Eigen::Index i = 0; i < t.data.size(); ++i)
        REQUIRE(std::abs(via.params.at(name).data(i) - (t.data(i) - syn.at(name).data(i))) <=
                1e-12 * std::max(1.0, std::abs(t.data(i) - syn.at(name).data(i))));
  }
}

TEST_CASE("apply_single_analogy") {
  CHECK(values(apply_single_analogy(single({0, 0}), tv_of({2, -2}), 0.5, 1.0)) == std::vector<double>{1, -1});

  toybench::Rng rng(5);
  ParameterSet target = random_params(rng);
  target.metadata()["role"] = "syn";
  const TaskVector delta{random_params(rng), "", ""};

  SUBCASE("alpha 0 is an exact identity for any beta") {
    for (double beta : {0.0, 0.3, 1.0, 17.0}) CHECK(tensors_bitwise_equal(apply_single_analogy(target, delta, 0.0, beta), target));
  }
  SUBCASE("zero delta leaves the target unchanged") {
    const TaskVector zero = scale(delta, 0.0);
    for (double a : {0.0, 0.5, 1.0}) CHECK(tensors_bitwise_equal(apply_single_analogy(target, zero, a, 3.0), target));
  }
  SUBCASE("linearity in beta") {
    for (double beta : {0.1, 0.7, 2.5}) {
      const auto lhs = apply_single_analogy(target, delta, 0.625, beta);
      const auto rhs = apply_single_analogy(target, scale(delta, beta), 0.625, 1.0);
      CHECK(max_rel_diff(lhs, rhs) <= 1e-12);
    }
  }
  SUBCASE("result is tagged as merged") {
    CHECK(apply_single_analogy(target, delta, 0.5, 1.0).meta("role") == "merged");
  }
  SUBCASE("argument validation") {
    CHECK(error_code_of([&] { apply_single_analogy(target, delta, -0.1, 1.0); }) == Errc::AlphaOutOfRange);
    CHECK(error_code_of([&] { apply_single_analogy(target, delta, 1.01, 1.0); }) == Errc::AlphaOutOfRange);
    CHECK(error_code_of([&] { apply_single_analogy(target, delta, 0.5, -1.0); }) == Errc::InvalidBeta);
    CHECK(error_code_of([&] {
            apply_single_analogy(target, delta, 0.5, std::numeric_limits<double>::quiet_NaN());
          }) == Errc::InvalidBeta);
    CHECK(error_code_of([&] {
            apply_single_analogy(target, delta, 0.5, std::numeric_limits<double>::infinity());
          }) == Errc::InvalidBeta);
    CHECK(error_code_of([&] { apply_single_analogy(single({1}), delta, 0.5, 1.0); }) == Errc::KeySetMismatch);
  }
  SUBCASE("deterministic") {
    CHECK(bitwise_equal(apply_single_analogy(target, delta, 0.375, 0.9), apply_single_analogy(target, delta, 0.375, 0.9)));
  }
}

TEST_CASE("apply_multi_analogy") {
  MergePlan plan;
  plan.target = "t";
  plan.sources = {"s1", "s2"};
  plan.betas = {{"s1", 1.0}, {"s2", 1.0}};
  plan.alpha = 0.5;
  const std::map<std::string, TaskVector> deltas = {{"s1", tv_of({1})}, {"s2", tv_of({3})}};
  CHECK(values(apply_multi_analogy(single({0}), deltas, plan)) == std::vector<double>{2});

  toybench::Rng rng(9);
  const ParameterSet target = random_params(rng);
  const TaskVector d{random_params(rng), "", ""};

  SUBCASE("singleton with beta 1 reduces to the single analogy bitwise") {
    for (double a : {0.0, 0.125, 0.5, 1.0}) {
      MergePlan p{"t", {"s"}, BetaMode::unit, {{"s", 1.0}}, a};
      CHECK(bitwise_equal(apply_multi_analogy(target, {{"s", d}}, p), apply_single_analogy(target, d, a, 1.0)));
    }
  }
  SUBCASE("all-zero deltas leave the target unchanged") {
    MergePlan p{"t", {"a", "b"}, BetaMode::unit, {{"a", 1.0}, {"b", 0.5}}, 1.0};
    const auto out = apply_multi_analogy(target, {{"a", scale(d, 0.0)}, {"b", scale(d, 0.0)}}, p);
    CHECK(tensors_bitwise_equal(out, target));
  }
  SUBCASE("matches a direct per-element sum") {
    const TaskVector d2{random_params(rng), "", ""};
    const TaskVector d3{random_params(rng), "", ""};
    MergePlan p{"t", {"c", "a", "b"}, BetaMode::kl, {{"a", 0.3}, {"b", 0.9}, {"c", 0.1}}, 0.75};
    const auto out = apply_multi_analogy(target, {{"a", d}, {"b", d2}, {"c", d3}}, p);
    for (const auto& [name, t] : target.entries())
      for (Eigen::Index i = 0; i < t.data.size(); ++i) {
        const double expect = t.data(i) + 0.75 * (0.3 * d.params.at(name).data(i) + 0.9 * d2.params.at(name).data(i) +
                                                  0.1 * d3.params.at(name).data(i));
        CHECK(std::abs(out.at(name).data(i) - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
      }
  }
  SUBCASE("source set must match the deltas") {
    MergePlan p{"t", {"a", "b"}, BetaMode::unit, {{"a", 1.0}, {"b", 1.0}}, 0.5};
    try {
      apply_multi_analogy(target, {{"a", d}, {"z", d}}, p);
      FAIL("expected SourceSetMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::SourceSetMismatch);
      CHECK(std::string(e.what()).find("b") != std::string::npos);
    }
  }
  SUBCASE("plan invariants") {
    MergePlan p{"t", {"t"}, BetaMode::unit, {{"t", 1.0}}, 0.5};
    CHECK(error_code_of([&] { apply_multi_analogy(target, {{"t", d}}, p); }) == Errc::InvalidPlan);
    MergePlan q{"t", {"a"}, BetaMode::unit, {{"a", 1.0}}, 1.5};
    CHECK(error_code_of([&] { apply_multi_analogy(target, {{"a", d}}, q); }) == Errc::AlphaOutOfRange);
    MergePlan r{"t", {"a"}, BetaMode::unit, {{"a", -1.0}}, 0.5};
    CHECK(error_code_of([&] { apply_multi_analogy(target, {{"a", d}}, r); }) == Errc::InvalidBeta);
  }
}

TEST_CASE("resolve_betas") {
  const auto unit = resolve_betas(BetaMode::unit, {"a", "b", "c"}, "t", nullptr);
  CHECK(unit == std::map<std::string, double>{{"a", 1.0}, {"b", 1.0}, {"c", 1.0}});
  const auto uni = resolve_betas(BetaMode::uniform, {"a", "b", "c", "d"}, "t", nullptr);
  for (const auto& [_, b] : uni) CHECK(b == 0.25);

  const SimilarityMatrix kl = toy_matrix(SimilarityMetric::kl);
  CHECK(resolve_betas(BetaMode::kl, {"a"}, "t", &kl) == std::map<std::string, double>{{"a", 0.7}});
  CHECK(error_code_of([&] { resolve_betas(BetaMode::kl, {"a"}, "t", nullptr); }) == Errc::MissingSimilarity);
  CHECK(error_code_of([&] { resolve_betas(BetaMode::kl, {"x"}, "t", &kl); }) == Errc::MissingSimilarity);
  CHECK(error_code_of([&] { resolve_betas(BetaMode::jaccard, {"a"}, "t", &kl); }) == Errc::MissingSimilarity);
}

TEST_CASE("informed source selection prefers the largest beta, ties lexicographic") {
  const SimilarityMatrix m = toy_matrix(SimilarityMetric::hellinger);
  const auto [s, b] = select_informed_source({"c", "b", "a"}, "t", m);
  CHECK(s == "a");
  CHECK(b == 0.7);
  CHECK(select_informed_source({"b"}, "t", m).first == "b");
}

TEST_CASE("merge plan JSON") {
  const auto plan = parse_merge_plan(nlohmann::json::parse(
      R"({"target":"de","sources":["en","fr"],"beta_mode":"kl","alpha":{"mode":"fixed","value":0.5},"similarity_file":"kl.tsv"})"));
  CHECK(plan.target == "de");
  CHECK(plan.sources == std::vector<std::string>{"en", "fr"});
  CHECK(plan.beta_mode == BetaMode::kl);
  CHECK(plan.alpha_mode == AlphaMode::fixed);
  CHECK(*plan.alpha_value == 0.5);
  CHECK(*plan.similarity_file == "kl.tsv");
  CHECK(parse_merge_plan(to_json(plan)).sources == plan.sources);

  auto bad = [](const char* text) { return error_code_of([&] { parse_merge_plan(nlohmann::json::parse(text)); }); };
  CHECK(bad(R"({"target":"de","sources":["en"],"beta_mode":"kl","alpha":{"mode":"fixed"}})") == Errc::InvalidPlan);
  CHECK(bad(R"({"target":"de","sources":["de"],"beta_mode":"unit","alpha":{"mode":"heldout"}})") == Errc::InvalidPlan);
  CHECK(bad(R"({"target":"de","sources":[],"beta_mode":"unit","alpha":{"mode":"heldout"}})") == Errc::InvalidPlan);
  CHECK(bad(R"({"target":"de","sources":["en"],"beta_mode":"cosine","alpha":{"mode":"heldout"}})") == Errc::InvalidPlan);
  CHECK(bad(R"({"sources":["en"],"beta_mode":"unit","alpha":{"mode":"heldout"}})") == Errc::InvalidPlan);
  CHECK(bad(R"([1,2])") == Errc::InvalidPlan);
}
