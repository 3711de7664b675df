// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#include "tvmerge/toybench/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "tvmerge/error.hpp"
#include "tvmerge/toybench/random.hpp"

namespace tvmerge::toybench {

namespace {

using Json = nlohmann::ordered_json;

bool informed(BetaMode m) { return beta_mode_metric(m).has_value(); }

std::string kind_name(MergeKind k) { return k == MergeKind::single ? "single" : "multi"; }

double relative_decrease(double before, double after) {
  return before > 0.0 ? (before - after) / before : -after;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// ---------------------------------------------------------------- config I/O

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw Error(Errc::ConfigInvalid, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

StageOptions parse_stage(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw Error(Errc::ConfigInvalid, where + " must be an object");
  reject_unknown(j, {"epochs", "lr"}, where);
  StageOptions s;
  read(j, "epochs", s.epochs);
  read(j, "lr", s.lr);
  return s;
}

Json stage_json(const StageOptions& s) { return Json{{"epochs", s.epochs}, {"lr", s.lr}}; }

MergeConfig parse_merge(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::ConfigInvalid, "merge configuration must be an object");
  reject_unknown(j, {"name", "kind", "beta_mode", "alpha", "sources"}, "merge configuration");
  MergeConfig m;
  m.name = j.at("name").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "single") m.kind = MergeKind::single;
  else if (kind == "multi") m.kind = MergeKind::multi;
  else throw Error(Errc::ConfigInvalid, "merge '" + m.name + "': unknown kind '" + kind + "'");
  m.beta_mode = parse_beta_mode(j.at("beta_mode").get<std::string>());
  if (j.contains("alpha")) {
    const auto& a = j.at("alpha");
    reject_unknown(a, {"mode", "value"}, "alpha of merge '" + m.name + "'");
    const auto mode = a.at("mode").get<std::string>();
    if (mode == "fixed") m.alpha_mode = AlphaMode::fixed;
    else if (mode == "heldout") m.alpha_mode = AlphaMode::heldout;
    else if (mode == "oracle") m.alpha_mode = AlphaMode::oracle;
    else throw Error(Errc::ConfigInvalid, "merge '" + m.name + "': unknown alpha mode '" + mode + "'");
    if (m.alpha_mode == AlphaMode::fixed) m.alpha_value = a.at("value").get<double>();
  }
  read(j, "sources", m.sources);
  return m;
}

Json merge_json(const MergeConfig& m) {
  Json j;
  j["name"] = m.name;
  j["kind"] = kind_name(m.kind);
  j["beta_mode"] = beta_mode_name(m.beta_mode);
  j["alpha"]["mode"] = alpha_mode_name(m.alpha_mode);
  if (m.alpha_mode == AlphaMode::fixed) j["alpha"]["value"] = m.alpha_value;
  if (!m.sources.empty()) j["sources"] = m.sources;
  return j;
}

// ------------------------------------------------------------------ helpers

FrameSet concat(const std::vector<FrameSet>& parts) {
  FrameSet out;
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.features.rows();
  out.features.resize(rows, parts.front().features.cols());
  out.seq_len = parts.front().seq_len;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.features.middleRows(at, p.features.rows()) = p.features;
    at += p.features.rows();
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    out.references.insert(out.references.end(), p.references.begin(), p.references.end());
  }
  return out;
}

TrainOptions options_for(const ExperimentConfig& c, const StageOptions& s) {
  TrainOptions o;
  o.epochs = s.epochs;
  o.lr = s.lr;
  o.batch_size = c.batch_size;
  return o;
}

ToyRecognizer tagged(ToyRecognizer m, const std::string& role, const std::string& lang, const std::string& domain) {
  ParameterSet p = m.params();
  p.metadata()["role"] = role;
  if (!lang.empty()) p.metadata()["lang"] = lang;
  if (!domain.empty()) p.metadata()["domain"] = domain;
  return ToyRecognizer(std::move(p));
}

/// Memoized evaluation of named models on the real test split of a language.
class Evaluator {
 public:
  explicit Evaluator(const World& w) : world_(w) {}

  const EvalReport& eval(const std::string& model_key, const std::function<ParameterSet()>& build,
                         const std::string& lang) {
    const std::string key = model_key + "@" + lang;
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const ToyRecognizer model(build());
    return cache_.emplace(key, evaluate_recognizer(model, world_.real_test.at(lang), lang, model_key)).first->second;
  }

  double cer(const std::string& model_key, const std::function<ParameterSet()>& build, const std::string& lang) {
    return eval(model_key, build, lang).cer;
  }

 private:
  const World& world_;
  std::map<std::string, EvalReport> cache_;
};

std::vector<std::string> others(const std::vector<std::string>& langs, const std::string& t) {
  std::vector<std::string> out;
  for (const auto& l : langs)
    if (l != t) out.push_back(l);
  return out;
}

std::string single_key(const std::string& target, const std::string& source, double alpha, double beta) {
  return "single|" + target + "|" + source + "|" + format_alpha(beta) + "|" + format_alpha(alpha);
}

ConfigResult run_config(const World& w, const MergeConfig& mc, Evaluator& ev) {
  const auto& c = w.config;
  const AlphaGrid grid(c.grid);
  ConfigResult result;
  result.config = mc;

  const SimilarityMatrix* sim = nullptr;
  if (auto metric = beta_mode_metric(mc.beta_mode)) sim = &w.similarity.at(*metric);

  // Source set and betas per target; independent of alpha.
  std::map<std::string, std::map<std::string, double>> betas;
  for (const auto& t : c.languages) {
    std::vector<std::string> pool = others(mc.sources.empty() ? c.languages : mc.sources, t);
    if (pool.empty()) throw Error(Errc::ConfigInvalid, "merge '" + mc.name + "' has no source for target '" + t + "'");
    if (mc.kind == MergeKind::multi) {
      betas[t] = resolve_betas(mc.beta_mode, pool, t, sim);
    } else if (sim) {
      auto [s, b] = select_informed_source(pool, t, *sim);
      betas[t] = {{s, b}};
    } else {
      // Non-informed single analogy: the source that does best on held-out data.
      std::sort(pool.begin(), pool.end());
      std::string best;
      double best_score = 0.0;
      for (const auto& s : pool) {
        auto r = select_alpha_heldout(grid, t, others(c.languages, t), [&](double a, const std::string& h) {
          return ev.cer(single_key(t, s, a, 1.0), [&] { return merge_single(w, t, s, a, 1.0); }, h);
        });
        const double score = r.objective.at(r.chosen_alpha);
        if (best.empty() || score < best_score) best = s, best_score = score;
        result.selections.push_back(std::move(r));
      }
      betas[t] = {{best, 1.0}};
    }
  }

  auto key = [&](const std::string& t, double a) {
    if (mc.kind == MergeKind::single) {
      const auto& [s, b] = *betas.at(t).begin();
      return single_key(t, s, a, b);
    }
    return mc.name + "|" + t + "|" + format_alpha(a);
  };
  auto build = [&](const std::string& t, double a) {
    return [&, t, a] {
      if (mc.kind == MergeKind::single) {
        const auto& [s, b] = *betas.at(t).begin();
        return merge_single(w, t, s, a, b);
      }
      return merge_multi(w, t, betas.at(t), a);
    };
  };
  auto cer_of = [&](const std::string& t, double a, const std::string& lang) {
    return ev.cer(key(t, a), build(t, a), lang);
  };

  std::map<std::string, double> alpha;
  switch (mc.alpha_mode) {
    case AlphaMode::fixed:
      for (const auto& t : c.languages) alpha[t] = mc.alpha_value;
      break;
    case AlphaMode::heldout:
      if (c.per_target_alpha) {
        for (const auto& t : c.languages) {
          auto r = select_alpha_heldout(grid, t, others(c.languages, t),
                                        [&](double a, const std::string& h) { return cer_of(t, a, h); });
          alpha[t] = r.chosen_alpha;
          result.selections.push_back(std::move(r));
        }
      } else {
        auto r = select_alpha_shared(grid, c.languages, c.languages,
                                     [&](double a, const std::string& t, const std::string& h) {
                                       return cer_of(t, a, h);
                                     });
        for (const auto& t : c.languages) alpha[t] = r.chosen_alpha;
        result.selections.push_back(std::move(r));
      }
      break;
    case AlphaMode::oracle:
      break;
  }

  std::vector<double> cers, wers, ocers, owers;
  for (const auto& t : c.languages) {
    auto oracle = select_alpha_oracle(grid, t, [&](double a) { return cer_of(t, a, t); });
    if (mc.alpha_mode == AlphaMode::oracle) {
      alpha[t] = oracle.chosen_alpha;
      result.selections.push_back(oracle);
    }
    TargetResult tr;
    for (const auto& [s, _] : betas.at(t)) tr.sources.push_back(s);
    tr.betas = betas.at(t);
    tr.alpha = alpha.at(t);
    tr.eval = ev.eval(key(t, tr.alpha), build(t, tr.alpha), t);
    tr.oracle_alpha = oracle.chosen_alpha;
    tr.oracle_eval = ev.eval(key(t, tr.oracle_alpha), build(t, tr.oracle_alpha), t);
    cers.push_back(tr.eval.cer);
    wers.push_back(tr.eval.wer);
    ocers.push_back(tr.oracle_eval.cer);
    owers.push_back(tr.oracle_eval.wer);
    result.targets.emplace(t, std::move(tr));
  }
  result.mean_cer = mean_of(cers);
  result.mean_wer = mean_of(wers);
  result.oracle_mean_cer = mean_of(ocers);
  result.oracle_mean_wer = mean_of(owers);
  return result;
}

TransferResult run_transfer(const World& w, Evaluator& ev) {
  const auto& langs = w.config.languages;
  TransferResult tr;
  tr.alpha = w.config.transfer_alpha;
  auto base_cer = [&](const std::string& t, const std::string& lang) {
    return ev.cer("baseline|" + t, [&] { return w.syn.at(t).params(); }, lang);
  };
  auto merged_cer = [&](const std::string& t, const std::string& s, const std::string& lang) {
    return ev.cer(single_key(t, s, tr.alpha, 1.0), [&] { return merge_single(w, t, s, tr.alpha, 1.0); }, lang);
  };
  std::vector<double> matched, mismatched, on_s, on_t, on_q;
  for (const auto& s : langs) {
    for (const auto& t : langs) {
      const double imp = relative_decrease(base_cer(t, t), merged_cer(t, s, t));
      tr.improvement[s][t] = imp;
      (s == t ? matched : mismatched).push_back(imp);
      if (s == t) continue;
      on_t.push_back(imp);
      on_s.push_back(relative_decrease(base_cer(t, s), merged_cer(t, s, s)));
      std::vector<double> q;
      for (const auto& l : langs)
        if (l != s && l != t) q.push_back(relative_decrease(base_cer(t, l), merged_cer(t, s, l)));
      if (!q.empty()) on_q.push_back(mean_of(q));
    }
  }
  tr.matched_mean = mean_of(matched);
  tr.mismatched_mean = mean_of(mismatched);
  tr.on_source_mean = mean_of(on_s);
  tr.on_target_mean = mean_of(on_t);
  tr.on_other_mean = mean_of(on_q);
  return tr;
}

ProbeResult probe_models(const World& w, const std::string& name,
                         const std::function<ParameterSet(const std::string&)>& model_for) {
  ProbeResult pr;
  pr.config = name;
  const auto opt = options_for(w.config, w.config.probe);
  std::vector<double> cers, wers;
  for (const auto& t : w.config.languages) {
    const ToyRecognizer start(model_for(t));
    const auto probed = linear_probe(start, w.real_train.at(t), opt, derive_seed(w.seed, "probe/" + name + "/" + t));
    const auto r = evaluate_recognizer(probed.model, w.real_test.at(t), t, name);
    pr.cer[t] = r.cer;
    pr.wer[t] = r.wer;
    cers.push_back(r.cer);
    wers.push_back(r.wer);
  }
  pr.mean_cer = mean_of(cers);
  pr.mean_wer = mean_of(wers);
  return pr;
}

Json eval_json(const EvalReport& r) {
  return Json{{"cer", r.cer}, {"wer", r.wer}, {"char_edits", r.total_char_edits}, {"ref_chars", r.total_ref_chars},
              {"word_edits", r.total_word_edits}, {"ref_words", r.total_ref_words}};
}

Json similarity_json(const SimilarityMatrix& m) {
  Json j;
  j["languages"] = m.languages;
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.scores.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.scores.cols()));
    for (Eigen::Index k = 0; k < m.scores.cols(); ++k) row[static_cast<std::size_t>(k)] = m.scores(i, k);
    rows.push_back(row);
  }
  j["scores"] = std::move(rows);
  if (m.raw_divergences) {
    Json raw = Json::array();
    for (Eigen::Index i = 0; i < m.raw_divergences->rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(m.raw_divergences->cols()));
      for (Eigen::Index k = 0; k < m.raw_divergences->cols(); ++k)
        row[static_cast<std::size_t>(k)] = (*m.raw_divergences)(i, k);
      raw.push_back(row);
    }
    j["raw_divergences"] = std::move(raw);
  }
  if (m.degenerate) j["degenerate"] = true;
  return j;
}

}  // namespace

// ------------------------------------------------------------------- config

std::vector<MergeConfig> ExperimentConfig::default_merges() {
  return {
      {"single_unit", MergeKind::single, BetaMode::unit, AlphaMode::heldout, 0.0, {}},
      {"single_kl", MergeKind::single, BetaMode::kl, AlphaMode::heldout, 0.0, {}},
      {"single_hellinger", MergeKind::single, BetaMode::hellinger, AlphaMode::heldout, 0.0, {}},
      {"single_jaccard", MergeKind::single, BetaMode::jaccard, AlphaMode::heldout, 0.0, {}},
      {"multi_unit", MergeKind::multi, BetaMode::unit, AlphaMode::heldout, 0.0, {}},
      {"multi_uniform", MergeKind::multi, BetaMode::uniform, AlphaMode::heldout, 0.0, {}},
      {"multi_kl", MergeKind::multi, BetaMode::kl, AlphaMode::heldout, 0.0, {}},
      {"multi_hellinger", MergeKind::multi, BetaMode::hellinger, AlphaMode::heldout, 0.0, {}},
      {"multi_jaccard", MergeKind::multi, BetaMode::jaccard, AlphaMode::heldout, 0.0, {}},
  };
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(Errc::ConfigInvalid, m); };
  if (languages.size() < 3) fail("need at least 3 languages so that S, T and Q all exist");
  if (std::set<std::string>(languages.begin(), languages.end()).size() != languages.size())
    fail("duplicate language ids");
  for (const auto& l : languages)
    if (l.empty() || l.find_first_of("|@/") != std::string::npos) fail("invalid language id '" + l + "'");
  if (alphabet_size < 2 || alphabet_size > kMaxAlphabet) fail("alphabet_size must lie in [2, 27]");
  if (feature_dim < 1 || hidden < 1) fail("feature_dim and hidden must be >= 1");
  if (train_sequences < 1 || test_sequences < 1 || corpus_sequences < 1 || seq_len < 1)
    fail("dataset sizes must be >= 1");
  if (ancestor_noise < 0 || child_noise < 0 || real_noise < 0) fail("noise levels must be >= 0");
  if (per_lang_shift_scale < 0) fail("per_lang_shift_scale must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  for (const auto* s : {&ancestor, &child, &real, &probe})
    if (s->epochs < 0 || !(s->lr >= 0.0)) fail("training stages need epochs >= 0 and lr >= 0");
  if (orders.empty()) fail("orders must be non-empty");
  for (int n : orders)
    if (n < 1) fail("n-gram orders must be >= 1");
  if (!(kl_epsilon > 0.0)) fail("kl_epsilon must be > 0");
  try {
    AlphaGrid g(grid);
  } catch (const Error& e) {
    fail(e.detail());
  }
  if (!(transfer_alpha >= 0.0 && transfer_alpha <= 1.0)) fail("transfer_alpha must lie in [0, 1]");
  if (num_seeds < 1) fail("num_seeds must be >= 1");
  std::set<std::string> names;
  for (const auto& m : merges) {
    if (m.name.empty() || !names.insert(m.name).second) fail("merge names must be unique and non-empty");
    if (m.alpha_mode == AlphaMode::fixed && !(m.alpha_value >= 0.0 && m.alpha_value <= 1.0))
      fail("merge '" + m.name + "': fixed alpha must lie in [0, 1]");
    for (const auto& s : m.sources)
      if (std::find(languages.begin(), languages.end(), s) == languages.end())
        fail("merge '" + m.name + "' names unknown source '" + s + "'");
  }
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw Error(Errc::ConfigInvalid, "experiment config must be a JSON object");
    reject_unknown(j,
                   {"languages", "alphabet_size", "feature_dim", "hidden", "train_sequences", "test_sequences",
                    "corpus_sequences", "seq_len", "domain", "training", "orders", "kl_epsilon", "grid",
                    "per_target_alpha", "transfer_alpha", "linear_probe", "num_seeds", "merges"},
                   "experiment config");
    read(j, "languages", c.languages);
    read(j, "alphabet_size", c.alphabet_size);
    read(j, "feature_dim", c.feature_dim);
    read(j, "hidden", c.hidden);
    read(j, "train_sequences", c.train_sequences);
    read(j, "test_sequences", c.test_sequences);
    read(j, "corpus_sequences", c.corpus_sequences);
    read(j, "seq_len", c.seq_len);
    if (j.contains("domain")) {
      const auto& d = j.at("domain");
      reject_unknown(d,
                     {"ancestor_noise", "child_noise", "real_noise", "shift_matrix_strength", "shift_bias_strength",
                      "per_lang_shift_scale"},
                     "domain");
      read(d, "ancestor_noise", c.ancestor_noise);
      read(d, "child_noise", c.child_noise);
      read(d, "real_noise", c.real_noise);
      read(d, "shift_matrix_strength", c.shift_matrix_strength);
      read(d, "shift_bias_strength", c.shift_bias_strength);
      read(d, "per_lang_shift_scale", c.per_lang_shift_scale);
    }
    if (j.contains("training")) {
      const auto& t = j.at("training");
      reject_unknown(t, {"batch_size", "ancestor", "child", "real", "probe"}, "training");
      read(t, "batch_size", c.batch_size);
      if (t.contains("ancestor")) c.ancestor = parse_stage(t.at("ancestor"), "training.ancestor");
      if (t.contains("child")) c.child = parse_stage(t.at("child"), "training.child");
      if (t.contains("real")) c.real = parse_stage(t.at("real"), "training.real");
      if (t.contains("probe")) c.probe = parse_stage(t.at("probe"), "training.probe");
    }
    read(j, "orders", c.orders);
    read(j, "kl_epsilon", c.kl_epsilon);
    read(j, "grid", c.grid);
    read(j, "per_target_alpha", c.per_target_alpha);
    read(j, "transfer_alpha", c.transfer_alpha);
    read(j, "linear_probe", c.linear_probe);
    read(j, "num_seeds", c.num_seeds);
    if (j.contains("merges")) {
      c.merges.clear();
      for (const auto& m : j.at("merges")) c.merges.push_back(parse_merge(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigInvalid) throw;
    throw Error(Errc::ConfigInvalid, e.detail());
  }
  c.validate();
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["languages"] = c.languages;
  j["alphabet_size"] = c.alphabet_size;
  j["feature_dim"] = c.feature_dim;
  j["hidden"] = c.hidden;
  j["train_sequences"] = c.train_sequences;
  j["test_sequences"] = c.test_sequences;
  j["corpus_sequences"] = c.corpus_sequences;
  j["seq_len"] = c.seq_len;
  j["domain"] = Json{{"ancestor_noise", c.ancestor_noise},
                     {"child_noise", c.child_noise},
                     {"real_noise", c.real_noise},
                     {"shift_matrix_strength", c.shift_matrix_strength},
                     {"shift_bias_strength", c.shift_bias_strength},
                     {"per_lang_shift_scale", c.per_lang_shift_scale}};
  j["training"] = Json{{"batch_size", c.batch_size},
                       {"ancestor", stage_json(c.ancestor)},
                       {"child", stage_json(c.child)},
                       {"real", stage_json(c.real)},
                       {"probe", stage_json(c.probe)}};
  j["orders"] = c.orders;
  j["kl_epsilon"] = c.kl_epsilon;
  j["grid"] = c.grid;
  j["per_target_alpha"] = c.per_target_alpha;
  j["transfer_alpha"] = c.transfer_alpha;
  j["linear_probe"] = c.linear_probe;
  j["num_seeds"] = c.num_seeds;
  Json merges = Json::array();
  for (const auto& m : c.merges) merges.push_back(merge_json(m));
  j["merges"] = std::move(merges);
  return j;
}

// -------------------------------------------------------------------- world

World build_world(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  World w;
  w.config = config;
  w.seed = seed;
  const auto& c = config;
  for (const auto& id : c.languages) w.languages.emplace(id, gen_language(seed, id, c.alphabet_size));
  w.glyphs = make_glyph_templates(seed, c.alphabet_size, c.feature_dim);
  const DomainSpec clean = synthetic_domain(w.glyphs, c.ancestor_noise);
  const DomainSpec augmented = synthetic_domain(w.glyphs, c.child_noise);
  w.real_domain = real_domain(w.glyphs, seed, c.real_noise, c.shift_matrix_strength, c.shift_bias_strength,
                              c.per_lang_shift_scale);

  auto data_seed = [&](const std::string& what, const std::string& id) { return derive_seed(seed, what + "/" + id); };

  std::vector<FrameSet> pooled;
  for (const auto& id : c.languages)
    pooled.push_back(stack_frames(
        sample_dataset(w.languages.at(id), clean, c.train_sequences, c.seq_len, data_seed("clean", id))));
  const auto init = ToyRecognizer::initialize(c.feature_dim, c.hidden, c.alphabet_size, derive_seed(seed, "init"));
  w.ancestor = tagged(train(init, concat(pooled), options_for(c, c.ancestor), derive_seed(seed, "train/ancestor")).model,
                      "ancestor", "", "synthetic");
  pooled.clear();

  std::vector<NgramProfile> profiles;
  for (const auto& id : c.languages) {
    const auto& lang = w.languages.at(id);
    const FrameSet syn_train =
        stack_frames(sample_dataset(lang, augmented, c.train_sequences, c.seq_len, data_seed("syn", id)));
    w.syn.emplace(id, tagged(train(w.ancestor, syn_train, options_for(c, c.child), data_seed("train/syn", id)).model,
                             "syn", id, "synthetic"));
    w.real_train.emplace(
        id, stack_frames(sample_dataset(lang, w.real_domain, c.train_sequences, c.seq_len, data_seed("real-train", id))));
    w.real_test.emplace(
        id, stack_frames(sample_dataset(lang, w.real_domain, c.test_sequences, c.seq_len, data_seed("real-test", id))));
    w.real.emplace(id, tagged(train(w.syn.at(id), w.real_train.at(id), options_for(c, c.real),
                                    data_seed("train/real", id))
                                  .model,
                              "real", id, "real"));

    const TaskVector tau_syn = task_vector(w.syn.at(id).params(), w.ancestor.params());
    const TaskVector tau_real = task_vector(w.real.at(id).params(), w.ancestor.params());
    w.deltas.emplace(id, s2r_delta(tau_real, tau_syn));

    // The synthetic validation corpus: label strings only, one per line.
    auto& corpus = w.corpora[id];
    for (auto& s : sample_dataset(lang, clean, c.corpus_sequences, c.seq_len, data_seed("corpus", id)))
      corpus.push_back(std::move(s.text));
    profiles.push_back(build_profile(corpus, id, c.orders));
  }
  w.similarity.emplace(SimilarityMetric::kl, build_kl_matrix(profiles, c.kl_epsilon));
  w.similarity.emplace(SimilarityMetric::hellinger, build_hellinger_matrix(profiles));
  w.similarity.emplace(SimilarityMetric::jaccard, build_jaccard_matrix(profiles));
  return w;
}

ParameterSet merge_single(const World& w, const std::string& target, const std::string& source, double alpha,
                          double beta) {
  return apply_single_analogy(w.syn.at(target).params(), w.deltas.at(source), alpha, beta);
}

ParameterSet merge_multi(const World& w, const std::string& target, const std::map<std::string, double>& betas,
                         double alpha) {
  MergePlan plan;
  plan.target = target;
  std::map<std::string, TaskVector> deltas;
  for (const auto& [s, b] : betas) {
    plan.sources.push_back(s);
    deltas.emplace(s, w.deltas.at(s));
  }
  plan.betas = betas;
  plan.alpha = alpha;
  return apply_multi_analogy(w.syn.at(target).params(), deltas, plan);
}

// --------------------------------------------------------------- evaluation

const ConfigResult* RunReport::find_config(const std::string& name) const {
  for (const auto& c : configs)
    if (c.config.name == name) return &c;
  return nullptr;
}

RunReport evaluate_world(const World& w) {
  const auto& c = w.config;
  RunReport r;
  r.seed = w.seed;
  r.similarity = w.similarity;
  Evaluator ev(w);

  std::vector<double> ic, iw, bc, bw;
  for (const auto& t : c.languages) {
    r.in_domain.emplace(t, ev.eval("in_domain|" + t, [&] { return w.real.at(t).params(); }, t));
    r.baseline.emplace(t, ev.eval("baseline|" + t, [&] { return w.syn.at(t).params(); }, t));
    ic.push_back(r.in_domain.at(t).cer);
    iw.push_back(r.in_domain.at(t).wer);
    bc.push_back(r.baseline.at(t).cer);
    bw.push_back(r.baseline.at(t).wer);
  }
  r.in_domain_mean_cer = mean_of(ic);
  r.in_domain_mean_wer = mean_of(iw);
  r.baseline_mean_cer = mean_of(bc);
  r.baseline_mean_wer = mean_of(bw);

  for (const auto& mc : c.merges) r.configs.push_back(run_config(w, mc, ev));
  r.transfer = run_transfer(w, ev);

  if (c.linear_probe) {
    r.probes.push_back(probe_models(w, "baseline", [&](const std::string& t) { return w.syn.at(t).params(); }));
    for (MergeKind kind : {MergeKind::single, MergeKind::multi}) {
      const ConfigResult* best = nullptr;
      for (const auto& cr : r.configs)
        if (cr.config.kind == kind && informed(cr.config.beta_mode) && (!best || cr.mean_cer < best->mean_cer))
          best = &cr;
      if (!best) continue;
      r.probes.push_back(probe_models(w, best->config.name, [&](const std::string& t) {
        const auto& tr = best->targets.at(t);
        return kind == MergeKind::single ? merge_single(w, t, tr.sources.front(), tr.alpha, tr.betas.begin()->second)
                                         : merge_multi(w, t, tr.betas, tr.alpha);
      }));
    }
  }
  return r;
}

RunReport run_protocol(const ExperimentConfig& config, std::uint64_t seed) {
  return evaluate_world(build_world(config, seed));
}

ExperimentReport run_experiment(const ExperimentConfig& config, std::uint64_t base_seed) {
  config.validate();
  ExperimentReport rep;
  rep.config = config;
  for (int k = 0; k < config.num_seeds; ++k)
    rep.runs.push_back(run_protocol(config, base_seed + static_cast<std::uint64_t>(k)));
  return rep;
}

// --------------------------------------------------------------------- JSON

Json to_json(const RunReport& r) {
  Json j;
  j["seed"] = r.seed;
  Json sim;
  for (const auto& [metric, m] : r.similarity) sim[std::string(metric_name(metric))] = similarity_json(m);
  j["similarity"] = std::move(sim);

  Json table;
  auto rows = [](const std::map<std::string, EvalReport>& m, double mc, double mw) {
    Json row;
    row["mean_cer"] = mc;
    row["mean_wer"] = mw;
    for (const auto& [t, e] : m) row["targets"][t] = eval_json(e);
    return row;
  };
  table["in_domain"] = rows(r.in_domain, r.in_domain_mean_cer, r.in_domain_mean_wer);
  table["baseline"] = rows(r.baseline, r.baseline_mean_cer, r.baseline_mean_wer);
  Json configs = Json::array();
  for (const auto& cr : r.configs) {
    Json cj = merge_json(cr.config);
    cj["mean_cer"] = cr.mean_cer;
    cj["mean_wer"] = cr.mean_wer;
    cj["delta_cer"] = cr.mean_cer - r.baseline_mean_cer;
    cj["oracle_mean_cer"] = cr.oracle_mean_cer;
    cj["oracle_mean_wer"] = cr.oracle_mean_wer;
    for (const auto& [t, tr] : cr.targets) {
      Json tj;
      tj["sources"] = tr.sources;
      tj["betas"] = tr.betas;
      tj["alpha"] = tr.alpha;
      tj["eval"] = eval_json(tr.eval);
      tj["oracle_alpha"] = tr.oracle_alpha;
      tj["oracle_eval"] = eval_json(tr.oracle_eval);
      cj["targets"][t] = std::move(tj);
    }
    Json sels = Json::array();
    for (const auto& s : cr.selections) sels.push_back(tvmerge::to_json(s));
    cj["selections"] = std::move(sels);
    configs.push_back(std::move(cj));
  }
  table["configs"] = std::move(configs);
  j["results"] = std::move(table);

  Json tr;
  tr["alpha"] = r.transfer.alpha;
  tr["improvement"] = r.transfer.improvement;
  tr["matched_mean"] = r.transfer.matched_mean;
  tr["mismatched_mean"] = r.transfer.mismatched_mean;
  tr["on_source_mean"] = r.transfer.on_source_mean;
  tr["on_target_mean"] = r.transfer.on_target_mean;
  tr["on_other_mean"] = r.transfer.on_other_mean;
  j["transfer"] = std::move(tr);

  Json probes = Json::array();
  for (const auto& p : r.probes)
    probes.push_back(Json{{"model", p.config}, {"mean_cer", p.mean_cer}, {"mean_wer", p.mean_wer}, {"cer", p.cer},
                          {"wer", p.wer}});
  j["linear_probe"] = std::move(probes);
  return j;
}

Json to_json(const ExperimentReport& rep) {
  Json j;
  j["config"] = to_json(rep.config);
  std::vector<std::uint64_t> seeds;
  for (const auto& r : rep.runs) seeds.push_back(r.seed);
  j["seeds"] = seeds;

  const double n = static_cast<double>(rep.runs.size());
  auto avg = [&](auto&& fn) {
    double s = 0.0;
    for (const auto& r : rep.runs) s += fn(r);
    return s / n;
  };

  Json summary;
  Json table = Json::array();
  const double base_cer = avg([](const RunReport& r) { return r.baseline_mean_cer; });
  const double base_wer = avg([](const RunReport& r) { return r.baseline_mean_wer; });
  table.push_back(Json{{"row", "in_domain"},
                       {"cer", avg([](const RunReport& r) { return r.in_domain_mean_cer; })},
                       {"wer", avg([](const RunReport& r) { return r.in_domain_mean_wer; })}});
  table.push_back(Json{{"row", "baseline"}, {"cer", base_cer}, {"wer", base_wer}, {"delta_cer", 0.0}});
  Json gap = Json::array();
  double gap_oracle = 0.0, gap_heldout = 0.0, gap_oracle_w = 0.0, gap_heldout_w = 0.0;
  int gap_rows = 0;
  for (std::size_t k = 0; k < rep.config.merges.size(); ++k) {
    const auto& mc = rep.config.merges[k];
    const double cer = avg([&](const RunReport& r) { return r.configs[k].mean_cer; });
    const double wer = avg([&](const RunReport& r) { return r.configs[k].mean_wer; });
    table.push_back(Json{{"row", mc.name},
                         {"kind", kind_name(mc.kind)},
                         {"beta_mode", beta_mode_name(mc.beta_mode)},
                         {"cer", cer},
                         {"wer", wer},
                         {"delta_cer", cer - base_cer},
                         {"delta_wer", wer - base_wer}});
    if (mc.alpha_mode == AlphaMode::heldout) {
      const double oc = avg([&](const RunReport& r) { return r.configs[k].oracle_mean_cer; });
      const double ow = avg([&](const RunReport& r) { return r.configs[k].oracle_mean_wer; });
      gap.push_back(Json{{"config", mc.name}, {"cer_oracle", oc}, {"cer_heldout", cer}, {"wer_oracle", ow},
                         {"wer_heldout", wer}});
      gap_oracle += oc, gap_heldout += cer, gap_oracle_w += ow, gap_heldout_w += wer;
      ++gap_rows;
    }
  }
  summary["results"] = std::move(table);
  Json gap_table;
  gap_table["configs"] = std::move(gap);
  if (gap_rows) {
    gap_table["average"] = Json{{"cer_oracle", gap_oracle / gap_rows}, {"cer_heldout", gap_heldout / gap_rows},
                                {"wer_oracle", gap_oracle_w / gap_rows}, {"wer_heldout", gap_heldout_w / gap_rows}};
  }
  summary["heldout_vs_oracle"] = std::move(gap_table);
  summary["transfer"] = Json{{"matched_mean", avg([](const RunReport& r) { return r.transfer.matched_mean; })},
                             {"mismatched_mean", avg([](const RunReport& r) { return r.transfer.mismatched_mean; })},
                             {"on_source_mean", avg([](const RunReport& r) { return r.transfer.on_source_mean; })},
                             {"on_target_mean", avg([](const RunReport& r) { return r.transfer.on_target_mean; })},
                             {"on_other_mean", avg([](const RunReport& r) { return r.transfer.on_other_mean; })}};
  if (!rep.runs.empty() && !rep.runs.front().probes.empty()) {
    Json probes = Json::array();
    for (std::size_t k = 0; k < rep.runs.front().probes.size(); ++k) {
      probes.push_back(Json{{"model", rep.runs.front().probes[k].config},
                            {"cer", avg([&](const RunReport& r) { return r.probes[k].mean_cer; })},
                            {"wer", avg([&](const RunReport& r) { return r.probes[k].mean_wer; })}});
    }
    summary["linear_probe"] = std::move(probes);
  }
  j["summary"] = std::move(summary);

  Json runs = Json::array();
  for (const auto& r : rep.runs) runs.push_back(to_json(r));
  j["runs"] = std::move(runs);
  return j;
}

}  // namespace tvmerge::toybench
