// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#include "tvmerge/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tvmerge/checkpoint.hpp"
#include "tvmerge/error.hpp"
#include "tvmerge/lang_sim.hpp"
#include "tvmerge/metrics.hpp"
#include "tvmerge/selection.hpp"
#include "tvmerge/task_arith.hpp"
#include "tvmerge/toybench/protocol.hpp"

namespace tvmerge {

namespace {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write '" + path.string() + "'");
  out << text;
  if (!out.flush()) throw Error(Errc::IoFailure, "write failed for '" + path.string() + "'");
}

nlohmann::json read_json(const fs::path& path, Errc on_error) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(on_error, "'" + path.string() + "': " + e.what());
  }
}

SimilarityMatrix load_similarity(const fs::path& path) {
  std::istringstream in(read_text(path));
  return parse_similarity_tsv(in);
}

std::vector<int> parse_orders(const std::string& text) {
  std::vector<int> orders;
  auto to_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw Error(Errc::InvalidArgument, "bad --orders value '" + text + "'");
    return v;
  };
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const int lo = to_int(text.substr(0, dots));
    const int hi = to_int(text.substr(dots + 2));
    if (lo > hi) throw Error(Errc::InvalidArgument, "empty --orders range '" + text + "'");
    for (int n = lo; n <= hi; ++n) orders.push_back(n);
    return orders;
  }
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) orders.push_back(to_int(part));
  return orders;
}

// --------------------------------------------------------------- commands

int cmd_task_vector(const std::string& fine_tuned, const std::string& ancestor, const std::string& out_path) {
  const TaskVector tv = task_vector(load_checkpoint(fine_tuned), load_checkpoint(ancestor));
  save_checkpoint(tv.params, out_path);
  return 0;
}

int cmd_delta(const std::string& real, const std::string& syn, const std::string& out_path) {
  TaskVector r{load_checkpoint(real), "", ""};
  TaskVector s{load_checkpoint(syn), "", ""};
  save_checkpoint(s2r_delta(r, s).params, out_path);
  return 0;
}

int cmd_merge(const std::string& plan_path, const std::string& target_path, const std::string& deltas_dir,
              const std::string& similarity_path, const std::string& out_path) {
  const MergePlanConfig cfg = parse_merge_plan(read_json(plan_path, Errc::InvalidPlan));
  if (!cfg.alpha_value)
    throw Error(Errc::InvalidPlan, "alpha mode '" + std::string(alpha_mode_name(cfg.alpha_mode)) +
                                       "' needs a resolved value; run select-alpha and record it as alpha.value");
  const ParameterSet target = load_checkpoint(target_path);

  std::map<std::string, TaskVector> deltas;
  std::vector<std::string> missing;
  for (const auto& s : cfg.sources) {
    const fs::path p = fs::path(deltas_dir) / (s + ".tvc");
    if (!fs::exists(p)) {
      missing.push_back(s);
      continue;
    }
    deltas.emplace(s, TaskVector{load_checkpoint(p), "", ""});
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw Error(Errc::SourceSetMismatch, "no delta in '" + deltas_dir + "' for: " + names);
  }

  std::optional<SimilarityMatrix> sim;
  if (beta_mode_metric(cfg.beta_mode)) {
    std::string path = similarity_path;
    if (path.empty() && cfg.similarity_file) {
      // Relative paths in the plan are relative to the plan file.
      fs::path p(*cfg.similarity_file);
      path = p.is_absolute() ? p.string() : (fs::path(plan_path).parent_path() / p).string();
    }
    if (path.empty())
      throw Error(Errc::MissingSimilarity,
                  "beta mode '" + std::string(beta_mode_name(cfg.beta_mode)) + "' needs --similarity");
    sim = load_similarity(path);
  }

  MergePlan plan;
  plan.target = cfg.target;
  plan.sources = cfg.sources;
  plan.beta_mode = cfg.beta_mode;
  plan.betas = resolve_betas(cfg.beta_mode, cfg.sources, cfg.target, sim ? &*sim : nullptr);
  plan.alpha = *cfg.alpha_value;
  const ParameterSet merged = apply_multi_analogy(target, deltas, plan);
  save_checkpoint(merged, out_path);

  nlohmann::ordered_json side;
  side["target"] = plan.target;
  side["sources"] = plan.sources;
  side["beta_mode"] = beta_mode_name(plan.beta_mode);
  side["betas"] = plan.betas;
  side["alpha_mode"] = alpha_mode_name(cfg.alpha_mode);
  side["alpha"] = plan.alpha;
  write_text(out_path + ".json", side.dump(2) + "\n");
  return 0;
}

int cmd_lang_sim(const std::string& corpora_dir, const std::string& orders_text, const std::string& metric,
                 const std::string& out_dir, std::ostream& err) {
  const auto orders = parse_orders(orders_text);
  if (!fs::is_directory(corpora_dir)) throw Error(Errc::IoFailure, "'" + corpora_dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(corpora_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.size() < 2)
    throw Error(Errc::InvalidArgument, "'" + corpora_dir + "' must contain at least two <lang>.txt files");

  std::vector<NgramProfile> profiles;
  for (const auto& f : files) {
    try {
      const auto lines = read_lines(f);
      profiles.push_back(build_profile(lines, f.stem().string(), orders));
    } catch (const Error& e) {
      throw Error(e.code(), "'" + f.string() + "': " + e.detail());
    }
  }

  std::vector<SimilarityMetric> metrics;
  if (metric == "all") metrics = {SimilarityMetric::kl, SimilarityMetric::hellinger, SimilarityMetric::jaccard};
  else metrics = {parse_metric(metric)};
  for (auto m : metrics) {
    const SimilarityMatrix sm = build_similarity_matrix(m, profiles);
    if (sm.degenerate) err << "warning: every KL divergence is zero; all KL scores set to 1\n";
    write_text(fs::path(out_dir) / (std::string(metric_name(m)) + ".tsv"), format_similarity_tsv(sm));
  }
  return 0;
}

int cmd_eval(const std::string& hyp, const std::string& ref, const std::string& out_path, const std::string& csv,
             std::ostream& out) {
  const EvalReport r =
      evaluate(read_lines(hyp), read_lines(ref), fs::path(ref).stem().string(), fs::path(hyp).stem().string());
  const std::string text = to_json(r).dump(2) + "\n";
  if (out_path.empty()) out << text;
  else write_text(out_path, text);
  if (!csv.empty()) {
    const bool fresh = !fs::exists(csv) || fs::file_size(csv) == 0;
    std::ofstream f(csv, std::ios::app);
    if (!f) throw Error(Errc::IoFailure, "cannot append to '" + csv + "'");
    if (fresh) f << csv_header();
    f << csv_row(r);
  }
  return 0;
}

// Score table: {"target": T, "mode": "heldout"|"oracle", "grid": [...]?,
//               "scores": {"<lang>": [CER at each grid point]}}
int cmd_select_alpha(const std::string& config_path, const std::string& out_path, std::ostream& out) {
  const auto j = read_json(config_path, Errc::ConfigInvalid);
  try {
    for (const auto& [key, _] : j.items())
      if (key != "target" && key != "mode" && key != "grid" && key != "scores")
        throw Error(Errc::ConfigInvalid, "unknown key '" + key + "' in score table");
    const auto target = j.at("target").get<std::string>();
    const std::string mode = j.value("mode", std::string("heldout"));
    const AlphaGrid grid = j.contains("grid") ? AlphaGrid(j.at("grid").get<std::vector<double>>()) : AlphaGrid();
    const auto scores = j.at("scores").get<std::map<std::string, std::vector<double>>>();
    for (const auto& [lang, v] : scores)
      if (v.size() != grid.values().size())
        throw Error(Errc::ConfigInvalid, "scores for '" + lang + "' do not match the grid size");
    auto lookup = [&](double alpha, const std::string& lang) {
      const auto& g = grid.values();
      const auto k = static_cast<std::size_t>(std::find(g.begin(), g.end(), alpha) - g.begin());
      return scores.at(lang).at(k);
    };
    SelectionResult r;
    if (mode == "heldout") {
      std::vector<std::string> heldout;
      for (const auto& [lang, _] : scores)
        if (lang != target) heldout.push_back(lang);
      r = select_alpha_heldout(grid, target, heldout, lookup);
    } else if (mode == "oracle") {
      if (!scores.count(target)) throw Error(Errc::ConfigInvalid, "oracle mode needs scores for the target");
      r = select_alpha_oracle(grid, target, [&](double a) { return lookup(a, target); });
    } else {
      throw Error(Errc::ConfigInvalid, "unknown mode '" + mode + "'");
    }
    const std::string text = to_json(r).dump(2) + "\n";
    if (out_path.empty()) out << text;
    else write_text(out_path, text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, e.what());
  }
  return 0;
}

int cmd_toybench(const std::string& config_path, std::uint64_t seed, const std::string& out_path, std::ostream& out) {
  toybench::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = toybench::parse_experiment_config(read_json(config_path, Errc::ConfigInvalid));
  const auto report = toybench::run_experiment(cfg, seed);
  const std::string text = toybench::to_json(report).dump(2) + "\n";
  if (out_path.empty()) out << text;
  else write_text(out_path, text);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Task-vector merging for synthetic-to-real transfer", "tvmerge"};
  app.require_subcommand(1);
  app.fallthrough(false);

  std::string a, b, c, d, e, f;
  std::string orders = "1..5", metric = "all";
  std::uint64_t seed = 0;

  auto* tv = app.add_subcommand("task-vector", "fine-tuned minus ancestor");
  tv->add_option("--fine-tuned", a)->required();
  tv->add_option("--ancestor", b)->required();
  tv->add_option("--out", c)->required();

  auto* delta = app.add_subcommand("delta", "real task vector minus synthetic task vector");
  delta->add_option("--real", a, "task vector fine-tuned on real data")->required();
  delta->add_option("--syn", b, "task vector fine-tuned on synthetic data")->required();
  delta->add_option("--out", c)->required();

  auto* merge = app.add_subcommand("merge", "apply a (multi-source) task analogy");
  merge->add_option("--plan", a)->required();
  merge->add_option("--target-syn", b)->required();
  merge->add_option("--deltas", c, "directory with one <lang>.tvc per source")->required();
  merge->add_option("--similarity", d);
  merge->add_option("--out", e)->required();

  auto* sim = app.add_subcommand("lang-sim", "n-gram similarity matrices");
  sim->add_option("--corpora", a, "directory of <lang>.txt files")->required();
  sim->add_option("--orders", orders, "range lo..hi or comma list");
  sim->add_option("--metric", metric)->check(CLI::IsMember({"all", "kl", "hellinger", "jaccard"}));
  sim->add_option("--out", b)->required();

  auto* ev = app.add_subcommand("eval", "corpus CER and WER");
  ev->add_option("--hyp", a)->required();
  ev->add_option("--ref", b)->required();
  ev->add_option("--out", c);
  ev->add_option("--csv", d, "append a CSV row to this file");

  auto* sel = app.add_subcommand("select-alpha", "grid search for alpha over a score table");
  sel->add_option("--config", a)->required();
  sel->add_option("--out", b);
  sel->add_option("--seed", seed);

  auto* toy = app.add_subcommand("toybench", "run the toy synthetic-to-real benchmark");
  toy->add_option("--config", a);
  toy->add_option("--seed", seed)->required();
  toy->add_option("--out", b);

  for (auto* sub : app.get_subcommands({})) sub->allow_extras(false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  }

  try {
    if (*tv) return cmd_task_vector(a, b, c);
    if (*delta) return cmd_delta(a, b, c);
    if (*merge) return cmd_merge(a, b, c, d, e);
    if (*sim) return cmd_lang_sim(a, orders, metric, b, err);
    if (*ev) return cmd_eval(a, b, c, d, out);
    if (*sel) return cmd_select_alpha(a, b, out);
    if (*toy) return cmd_toybench(a, seed, b, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace tvmerge
