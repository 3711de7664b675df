// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#include "tvmerge/metrics.hpp"

#include <cstdio>

#include "tvmerge/error.hpp"
#include "tvmerge/utf8.hpp"

namespace tvmerge {

namespace {

void check_lengths(const std::vector<std::string>& h, const std::vector<std::string>& r) {
  if (h.size() != r.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(h.size()) + " hypotheses vs " + std::to_string(r.size()) +
                                          " references");
  }
}

template <typename Tokenize>
ErrorTotals totals(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
                   Tokenize tokenize, const char* unit) {
  check_lengths(hypotheses, references);
  ErrorTotals t;
  t.num_samples = references.size();
  for (std::size_t i = 0; i < references.size(); ++i) {
    const auto h = tokenize(hypotheses[i]);
    const auto r = tokenize(references[i]);
    t.edits += edit_distance(h, r);
    t.ref_length += r.size();
  }
  if (t.ref_length == 0) throw Error(Errc::EmptyReferenceCorpus, std::string("references contain no ") + unit);
  return t;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

ErrorTotals cer(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
  return totals(hypotheses, references, [](const std::string& s) { return decode_utf8(s); }, "characters");
}

ErrorTotals wer(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
  return totals(hypotheses, references, [](const std::string& s) { return split_words(decode_utf8(s)); }, "words");
}

EvalReport evaluate(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
                    std::string dataset, std::string model) {
  const auto c = cer(hypotheses, references);
  const auto w = wer(hypotheses, references);
  EvalReport r;
  r.dataset = std::move(dataset);
  r.model = std::move(model);
  r.num_samples = c.num_samples;
  r.cer = c.rate();
  r.wer = w.rate();
  r.total_char_edits = c.edits;
  r.total_ref_chars = c.ref_length;
  r.total_word_edits = w.edits;
  r.total_ref_words = w.ref_length;
  return r;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["model"] = r.model;
  j["num_samples"] = r.num_samples;
  j["cer"] = r.cer;
  j["wer"] = r.wer;
  j["total_char_edits"] = r.total_char_edits;
  j["total_ref_chars"] = r.total_ref_chars;
  j["total_word_edits"] = r.total_word_edits;
  j["total_ref_words"] = r.total_ref_words;
  return j;
}

std::string csv_header() {
  return "dataset,model,num_samples,cer,wer,total_char_edits,total_ref_chars,total_word_edits,total_ref_words\n";
}

std::string csv_row(const EvalReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g,%zu,%zu,%zu,%zu\n", r.num_samples, r.cer, r.wer,
                r.total_char_edits, r.total_ref_chars, r.total_word_edits, r.total_ref_words);
  return csv_escape(r.dataset) + "," + csv_escape(r.model) + buf;
}

}  // namespace tvmerge
