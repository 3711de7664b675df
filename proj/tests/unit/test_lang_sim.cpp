// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "test_support.hpp"
#include "tvmerge/lang_sim.hpp"
#include "tvmerge/utf8.hpp"

using namespace tvmerge;
using namespace tvmerge::testing;

namespace {

NgramProfile profile(std::vector<std::string> lines, std::vector<int> orders, std::string lang = "x") {
  return build_profile(std::span<const std::string>(lines), std::move(lang), orders);
}

NgramProfile from_dist(std::map<std::string, double> d, std::string lang) {
  NgramProfile p;
  p.language = std::move(lang);
  p.orders = {1};
  for (const auto& [k, v] : d) p.dists[1][decode_utf8(k)] = v;
  p.total_counts[1] = 1;
  return p;
}

// Brute-force counting over ASCII lines.
std::map<std::string, double> oracle_dist(const std::vector<std::string>& lines, std::size_t n) {
  std::map<std::string, double> counts;
  double total = 0;
  for (const auto& l : lines)
    for (std::size_t i = 0; i + n <= l.size(); ++i) counts[l.substr(i, n)] += 1, total += 1;
  for (auto& [_, c] : counts) c /= total;
  return counts;
}

double oracle_kl(const std::vector<std::string>& a, const std::vector<std::string>& b, const std::vector<int>& orders,
                 double eps) {
  double sum = 0;
  for (int n : orders) {
    const auto pa = oracle_dist(a, static_cast<std::size_t>(n));
    const auto pb = oracle_dist(b, static_cast<std::size_t>(n));
    double missing = 0;
    for (const auto& [k, _] : pa)
      if (!pb.count(k)) missing += 1;
    const double z = 1.0 + eps * missing;
    double d = 0;
    for (const auto& [k, p] : pa) {
      const auto it = pb.find(k);
      const double q = (it == pb.end() ? eps : it->second) / z;
      d += p * std::log(p / q);
    }
    sum += d;
  }
  return sum / static_cast<double>(orders.size());
}

double oracle_hellinger(const std::vector<std::string>& a, const std::vector<std::string>& b,
                        const std::vector<int>& orders) {
  const double w = 1.0 / static_cast<double>(orders.size());
  double sq = 0;
  for (int n : orders) {
    auto pa = oracle_dist(a, static_cast<std::size_t>(n));
    auto pb = oracle_dist(b, static_cast<std::size_t>(n));
    std::set<std::string> keys;
    for (const auto& [k, _] : pa) keys.insert(k);
    for (const auto& [k, _] : pb) keys.insert(k);
    for (const auto& k : keys) {
      const double d = std::sqrt(w * pa[k]) - std::sqrt(w * pb[k]);
      sq += d * d;
    }
  }
  return 1.0 - std::sqrt(sq) / std::sqrt(2.0);
}

double oracle_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b,
                      const std::vector<int>& orders) {
  std::set<std::pair<int, std::string>> va, vb, un;
  for (int n : orders) {
    for (const auto& [k, _] : oracle_dist(a, static_cast<std::size_t>(n))) va.insert({n, k});
    for (const auto& [k, _] : oracle_dist(b, static_cast<std::size_t>(n))) vb.insert({n, k});
  }
  std::size_t inter = 0;
  for (const auto& x : va) inter += vb.count(x);
  un = va;
  un.insert(vb.begin(), vb.end());
  return static_cast<double>(inter) / static_cast<double>(un.size());
}

std::vector<std::string> random_corpus(toybench::Rng& rng, int alphabet, std::size_t lines) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < lines; ++i) {
    std::string l;
    const auto len = 5 + rng.below(12);
    for (std::uint64_t k = 0; k < len; ++k) l.push_back(static_cast<char>('a' + rng.below(static_cast<std::uint64_t>(alphabet))));
    out.push_back(l);
  }
  return out;
}

}  // namespace

TEST_CASE("profile construction") {
  const auto aa = profile({"aa"}, {1});
  CHECK(aa.dists.at(1).size() == 1);
  CHECK(aa.dists.at(1).at(U"a") == 1.0);

  const auto ab = profile({"ab"}, {1, 2});
  CHECK(ab.dists.at(1).at(U"a") == 0.5);
  CHECK(ab.dists.at(1).at(U"b") == 0.5);
  CHECK(ab.dists.at(2).at(U"ab") == 1.0);

  const auto abab = profile({"abab"}, {2});
  CHECK(abab.dists.at(2).size() == 2);
  CHECK(abab.dists.at(2).at(U"ab") == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(abab.dists.at(2).at(U"ba") == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(abab.total_counts.at(2) == 3);
}

TEST_CASE("profiles count code points and never cross lines") {
  const auto p = profile({"ab", "cd"}, {2});
  CHECK(p.dists.at(2).size() == 2);
  CHECK(p.dists.at(2).count(U"bc") == 0);

  const auto u = profile({"été"}, {1});
  CHECK(u.dists.at(1).at(U"é") == doctest::Approx(2.0 / 3.0));

  std::istringstream in("ab\r\nab\n");
  const auto crlf = build_profile(in, "x", {1});
  CHECK(crlf.dists.at(1).count(U"\r") == 0);
  CHECK(crlf.total_counts.at(1) == 4);
}

TEST_CASE("profiles match a brute-force counter") {
  toybench::Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto corpus = random_corpus(rng, 5, 30);
    const auto p = profile(corpus, {1, 2, 3});
    for (int n : {1, 2, 3}) {
      const auto o = oracle_dist(corpus, static_cast<std::size_t>(n));
      REQUIRE(o.size() == p.dists.at(n).size());
      for (const auto& [k, v] : o) CHECK(p.dists.at(n).at(decode_utf8(k)) == doctest::Approx(v).epsilon(1e-14));
    }
  }
}

TEST_CASE("profile errors") {
  CHECK(error_code_of([] { profile({}, {1}); }) == Errc::EmptyCorpus);
  CHECK(error_code_of([] { profile({"", ""}, {1}); }) == Errc::EmptyCorpus);
  CHECK(error_code_of([] { profile({"ab"}, {3}); }) == Errc::EmptyCorpus);
  CHECK(error_code_of([] { profile({"ab"}, {}); }) == Errc::InvalidArgument);
  CHECK(error_code_of([] { profile({"ab"}, {0}); }) == Errc::InvalidArgument);
  CHECK(error_code_of([] { profile({std::string("a\xff")}, {1}); }) == Errc::InvalidUtf8);
  CHECK(error_code_of([] { profile({std::string("\xc3")}, {1}); }) == Errc::InvalidUtf8);
}

TEST_CASE("KL divergence") {
  const auto a = from_dist({{"a", 0.5}, {"b", 0.5}}, "a");
  const auto b = from_dist({{"a", 0.75}, {"b", 0.25}}, "b");
  const double forward = 0.5 * std::log(0.5 / 0.75) + 0.5 * std::log(0.5 / 0.25);
  const double reverse = 0.75 * std::log(0.75 / 0.5) + 0.25 * std::log(0.25 / 0.5);
  CHECK(kl_divergence(a, b) == doctest::Approx(forward).epsilon(1e-12));
  CHECK(kl_divergence(a, b) == doctest::Approx(0.143841).epsilon(1e-5));
  CHECK(kl_divergence(b, a) == doctest::Approx(reverse).epsilon(1e-12));
  CHECK(kl_divergence(b, a) == doctest::Approx(0.130812).epsilon(1e-5));
  CHECK(kl_divergence(a, b) != kl_divergence(b, a));
  CHECK(kl_divergence(a, a) == 0.0);

  NgramProfile other = a;
  other.orders = {2};
  CHECK(error_code_of([&] { kl_divergence(a, other); }) == Errc::OrderMismatch);
}

TEST_CASE("KL divergence with missing n-grams matches the smoothed oracle") {
  toybench::Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ca = random_corpus(rng, 6, 20);
    const auto cb = random_corpus(rng, 4, 20);
    const std::vector<int> orders = {1, 2, 3};
    const double got = kl_divergence(profile(ca, orders), profile(cb, orders));
    CHECK(got == doctest::Approx(oracle_kl(ca, cb, orders, kDefaultKlEpsilon)).epsilon(1e-10));
    CHECK(got >= 0.0);
  }
}

TEST_CASE("KL matrix") {
  const auto a = from_dist({{"a", 0.5}, {"b", 0.5}}, "a");
  const auto b = from_dist({{"a", 0.75}, {"b", 0.25}}, "b");
  const std::vector<NgramProfile> ps = {a, b};
  const auto m = build_kl_matrix(ps);
  CHECK(m.metric == SimilarityMetric::kl);
  CHECK(m.scores(0, 0) == 1.0);
  CHECK(m.scores(1, 1) == 1.0);
  // Only the larger divergence maps to zero.
  CHECK(m.scores(0, 1) == 0.0);
  CHECK(m.scores(1, 0) == doctest::Approx(1.0 - 0.130812 / 0.143841).epsilon(1e-4));
  CHECK(!m.degenerate);
  REQUIRE(m.raw_divergences);
  CHECK((*m.raw_divergences)(0, 1) == doctest::Approx(0.143841).epsilon(1e-5));

  const std::vector<NgramProfile> same = {a, a, a};
  const auto d = build_kl_matrix(same);
  CHECK(d.degenerate);
  CHECK((d.scores.array() == 1.0).all());
}

TEST_CASE("Hellinger similarity") {
  const auto a = from_dist({{"a", 1.0}}, "a");
  const auto b = from_dist({{"a", 0.5}, {"b", 0.5}}, "b");
  const double expect = 1.0 - std::sqrt(std::pow(1.0 - std::sqrt(0.5), 2) + 0.5) / std::sqrt(2.0);
  CHECK(hellinger_similarity(a, b) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(hellinger_similarity(a, b) == doctest::Approx(0.458804).epsilon(1e-5));
  CHECK(hellinger_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(hellinger_similarity(profile({"ab"}, {1, 2}), profile({"cd"}, {1, 2})) == doctest::Approx(0.0).epsilon(1e-15));

  toybench::Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ca = random_corpus(rng, 5, 15);
    const auto cb = random_corpus(rng, 5, 15);
    const std::vector<int> orders = {1, 2, 3};
    CHECK(hellinger_similarity(profile(ca, orders), profile(cb, orders)) ==
          doctest::Approx(oracle_hellinger(ca, cb, orders)).epsilon(1e-12));
  }
}

TEST_CASE("Jaccard similarity") {
  CHECK(jaccard_similarity(profile({"abc"}, {2}), profile({"bcd"}, {2})) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(jaccard_similarity(profile({"abc"}, {1}), profile({"cab"}, {1})) == 1.0);
  CHECK(error_code_of([] { jaccard_similarity(profile({"abc"}, {1, 2}), profile({"cab"}, {1})); }) == Errc::OrderMismatch);
  CHECK(jaccard_similarity(profile({"ab"}, {1}), profile({"cd"}, {1})) == 0.0);

  // Order tagging: "ab" as a bigram and "ab" as a different order never collide.
  CHECK(jaccard_similarity(profile({"aab"}, {1, 2}), profile({"aab"}, {1, 2})) == 1.0);

  toybench::Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ca = random_corpus(rng, 4, 10);
    const auto cb = random_corpus(rng, 5, 10);
    const std::vector<int> orders = {1, 2, 3, 4};
    CHECK(jaccard_similarity(profile(ca, orders), profile(cb, orders)) ==
          doctest::Approx(oracle_jaccard(ca, cb, orders)).epsilon(1e-15));
  }
}

TEST_CASE("similarity matrix properties on random corpora") {
  toybench::Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<std::string>> corpora;
    std::vector<NgramProfile> ps, doubled;
    for (int l = 0; l < 4; ++l) {
      corpora.push_back(random_corpus(rng, 3 + l, 12));
      ps.push_back(profile(corpora.back(), {1, 2, 3}, "l" + std::to_string(l)));
      auto twice = corpora.back();
      twice.insert(twice.end(), corpora.back().begin(), corpora.back().end());
      doubled.push_back(profile(twice, {1, 2, 3}, "l" + std::to_string(l)));
    }
    for (auto metric : {SimilarityMetric::kl, SimilarityMetric::hellinger, SimilarityMetric::jaccard}) {
      const auto m = build_similarity_matrix(metric, ps);
      CHECK((m.scores.array() >= 0.0).all());
      CHECK((m.scores.array() <= 1.0).all());
      for (int i = 0; i < 4; ++i) CHECK(m.scores(i, i) == 1.0);
      if (metric != SimilarityMetric::kl) CHECK(m.scores == m.scores.transpose());
    }
    const auto kl = build_kl_matrix(ps);
    Eigen::Index mi = 0, mj = 0;
    kl.raw_divergences->maxCoeff(&mi, &mj);
    CHECK(kl.scores(mi, mj) == 0.0);
    CHECK(build_jaccard_matrix(doubled).scores == build_jaccard_matrix(ps).scores);
  }
}

TEST_CASE("similarity TSV round-trip") {
  toybench::Rng rng(2);
  std::vector<NgramProfile> ps;
  for (const char* l : {"de", "en", "fr"}) ps.push_back(profile(random_corpus(rng, 5, 10), {1, 2}, l));
  const auto m = build_hellinger_matrix(ps);
  const std::string tsv = format_similarity_tsv(m);
  CHECK(tsv.rfind("# metric: hellinger\n", 0) == 0);
  CHECK(tsv.find("lang\tde\ten\tfr\n") != std::string::npos);
  std::istringstream in(tsv);
  const auto back = parse_similarity_tsv(in);
  CHECK(back.metric == SimilarityMetric::hellinger);
  CHECK(back.languages == m.languages);
  CHECK((back.scores - m.scores).cwiseAbs().maxCoeff() <= 5e-7);
  CHECK(back.score("en", "fr") == doctest::Approx(m.score("en", "fr")).epsilon(1e-5));
  CHECK(error_code_of([&] { (void)back.score("xx", "fr"); }) == Errc::MissingSimilarity);

  std::istringstream garbage("lang\ta\nfoo\n");
  CHECK_THROWS_AS(parse_similarity_tsv(garbage), Error);
}

TEST_CASE("UTF-8 helpers") {
  CHECK(decode_utf8("a\xc3\xa9\xe2\x82\xac\xf0\x9f\x98\x80") == U"aé€\U0001F600");
  CHECK(encode_utf8(U"aé€\U0001F600") == "a\xc3\xa9\xe2\x82\xac\xf0\x9f\x98\x80");
  for (const char* bad : {"\x80", "\xc0\xaf", "\xed\xa0\x80", "\xf4\x90\x80\x80", "\xe2\x82"})
    CHECK(error_code_of([&] { decode_utf8(bad); }) == Errc::InvalidUtf8);
  CHECK(split_words(U"  the cat\tsat ") == std::vector<std::u32string>{U"the", U"cat", U"sat"});
  CHECK(split_words(U"").empty());
}
