#include "tslt/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace tslt {
namespace {

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

void require_map(const YAML::Node& node, const std::string& path,
                 const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError(path, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(join(path, key), "unknown key");
  }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& path, const char* what) {
  if (!node.IsScalar()) throw ConfigError(path, std::string("expected ") + what);
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, std::string("expected ") + what + ", got '" + node.Scalar() + "'");
  }
}

double real(const YAML::Node& n, const std::string& path) {
  const double v = scalar<double>(n, path, "a number");
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

std::size_t count(const YAML::Node& n, const std::string& path) {
  const auto text = n.IsScalar() ? n.Scalar() : std::string();
  if (!text.empty() && text[0] == '-') throw ConfigError(path, "must be non-negative");
  return scalar<std::size_t>(n, path, "a non-negative integer");
}

template <class T, class F>
std::vector<T> list(const YAML::Node& n, const std::string& path, F&& item) {
  std::vector<T> out;
  if (n.IsScalar()) {
    out.push_back(item(n, path));
    return out;
  }
  if (!n.IsSequence()) throw ConfigError(path, "expected a list");
  for (std::size_t i = 0; i < n.size(); ++i) {
    out.push_back(item(n[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<double> rate_grid(const YAML::Node& n, const std::string& path) {
  if (!n.IsMap()) return list<double>(n, path, real);
  require_map(n, path, {"min", "max", "points", "spacing"});
  for (const char* k : {"min", "max", "points"}) {
    if (!n[k]) throw ConfigError(join(path, k), "required");
  }
  const double lo = real(n["min"], join(path, "min"));
  const double hi = real(n["max"], join(path, "max"));
  const std::size_t pts = count(n["points"], join(path, "points"));
  std::string spacing = "log";
  if (n["spacing"]) spacing = scalar<std::string>(n["spacing"], join(path, "spacing"), "log or linear");
  if (spacing != "log" && spacing != "linear") {
    throw ConfigError(join(path, "spacing"), "expected log or linear");
  }
  if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError(path, "need 0 < min <= max");
  if (pts < 1) throw ConfigError(join(path, "points"), "must be >= 1");
  std::vector<double> out;
  for (std::size_t i = 0; i < pts; ++i) {
    const double t = pts == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(pts - 1);
    out.push_back(spacing == "log" ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t);
  }
  out.back() = hi;
  return out;
}

void parse_model(const YAML::Node& n, ModelConfig& m) {
  const std::string p = "model";
  require_map(n, p,
              {"vocab_size", "context_order", "seed", "concentration", "top_fraction", "top_mass",
               "noise_concentration", "divergence", "target_alpha", "calibration_contexts",
               "calibration_tolerance"});
  if (n["vocab_size"]) m.vocab_size = count(n["vocab_size"], join(p, "vocab_size"));
  if (n["context_order"]) {
    m.context_order = static_cast<int>(count(n["context_order"], join(p, "context_order")));
  }
  if (n["seed"]) m.seed = scalar<std::uint64_t>(n["seed"], join(p, "seed"), "an unsigned integer");
  if (n["concentration"]) {
    const auto& c = n["concentration"];
    if (!(c.IsScalar() && c.Scalar() == "auto")) m.concentration = real(c, join(p, "concentration"));
  }
  if (n["top_fraction"]) m.top_fraction = real(n["top_fraction"], join(p, "top_fraction"));
  if (n["top_mass"]) m.top_mass = real(n["top_mass"], join(p, "top_mass"));
  if (n["noise_concentration"]) {
    m.noise_concentration = real(n["noise_concentration"], join(p, "noise_concentration"));
  }
  if (n["divergence"]) {
    const auto& d = n["divergence"];
    if (!(d.IsScalar() && d.Scalar() == "auto")) m.divergence = real(d, join(p, "divergence"));
  }
  if (n["target_alpha"]) m.target_alpha = real(n["target_alpha"], join(p, "target_alpha"));
  if (n["calibration_contexts"]) {
    m.calibration_contexts = count(n["calibration_contexts"], join(p, "calibration_contexts"));
  }
  if (n["calibration_tolerance"]) {
    m.calibration_tolerance = real(n["calibration_tolerance"], join(p, "calibration_tolerance"));
  }
}

void parse_theory(const YAML::Node& n, ExperimentConfig& c) {
  const std::string p = "theory";
  require_map(n, p,
              {"instances", "min_vocab", "max_vocab", "chain_instances", "chain_vocab",
               "chain_top_k", "chain_depth", "sparsity", "report_all"});
  auto& t = c.theory;
  if (n["instances"]) t.instances = count(n["instances"], join(p, "instances"));
  if (n["min_vocab"]) t.min_vocab = count(n["min_vocab"], join(p, "min_vocab"));
  if (n["max_vocab"]) t.max_vocab = count(n["max_vocab"], join(p, "max_vocab"));
  if (n["chain_instances"]) t.chain_instances = count(n["chain_instances"], join(p, "chain_instances"));
  if (n["chain_vocab"]) t.chain_vocab = count(n["chain_vocab"], join(p, "chain_vocab"));
  if (n["chain_top_k"]) t.chain_top_k = count(n["chain_top_k"], join(p, "chain_top_k"));
  if (n["chain_depth"]) t.chain_depth = count(n["chain_depth"], join(p, "chain_depth"));
  if (n["sparsity"]) t.sparsity = real(n["sparsity"], join(p, "sparsity"));
  if (n["report_all"]) c.theory_report_all = scalar<bool>(n["report_all"], join(p, "report_all"), "true or false");
}

void parse_link(const YAML::Node& n, ExperimentConfig& c) {
  const std::string p = "link";
  require_map(n, p,
              {"vocab_size", "b_prob", "b_idx", "payload_convention", "r_up_mbps",
               "count_draft_token_ids"});
  if (n["vocab_size"]) c.payload_vocab = count(n["vocab_size"], join(p, "vocab_size"));
  if (n["b_prob"]) c.b_prob = static_cast<int>(count(n["b_prob"], join(p, "b_prob")));
  if (n["b_idx"]) {
    const auto& b = n["b_idx"];
    if (!(b.IsScalar() && b.Scalar() == "auto")) c.b_idx = static_cast<int>(count(b, join(p, "b_idx")));
  }
  if (n["payload_convention"]) {
    c.conventions = list<PayloadConvention>(
        n["payload_convention"], join(p, "payload_convention"),
        [](const YAML::Node& x, const std::string& path) {
          const auto text = scalar<std::string>(x, path, "indexed or values_only");
          try {
            return parse_payload_convention(text);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(path, e.what());
          }
        });
  }
  if (n["r_up_mbps"]) {
    c.r_up_bps = rate_grid(n["r_up_mbps"], join(p, "r_up_mbps"));
    for (auto& r : c.r_up_bps) r *= 1e6;
  }
  if (n["count_draft_token_ids"]) {
    c.count_draft_token_ids =
        scalar<bool>(n["count_draft_token_ids"], join(p, "count_draft_token_ids"), "true or false");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!seed) throw ConfigError("seed", "required (set it in the config or pass --seed)");
  if (modes.empty()) throw ConfigError("mode", "at least one mode is required");
  if (draft_len < 1) throw ConfigError("draft.draft_len", "must be >= 1");
  for (auto k : top_k) {
    if (k < 1) throw ConfigError("truncation.top_k", "K must be >= 1");
  }
  for (double r : top_rho) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("truncation.top_rho", "rho must lie in (0, 1]");
  }
  if (model.vocab_size < 2) throw ConfigError("model.vocab_size", "must be >= 2");
  try {
    ModelPairParams mp;
    mp.vocab_size = model.vocab_size;
    mp.context_order = model.context_order;
    mp.concentration = model.concentration.value_or(1.0);
    mp.noise_concentration = model.noise_concentration;
    mp.divergence = model.divergence.value_or(0.0);
    mp.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model", e.what());
  }
  if (!(model.top_fraction > 0.0 && model.top_fraction <= 1.0)) {
    throw ConfigError("model.top_fraction", "must lie in (0, 1]");
  }
  if (!(model.top_mass > 0.0 && model.top_mass < 1.0)) {
    throw ConfigError("model.top_mass", "must lie in (0, 1)");
  }
  if (!(model.target_alpha > 0.0 && model.target_alpha <= 1.0)) {
    throw ConfigError("model.target_alpha", "must lie in (0, 1]");
  }
  if (model.calibration_contexts < 1) throw ConfigError("model.calibration_contexts", "must be >= 1");
  if (!(model.calibration_tolerance > 0.0)) {
    throw ConfigError("model.calibration_tolerance", "must be positive");
  }
  if (payload_vocab < 2) throw ConfigError("link.vocab_size", "must be >= 2");
  if (payload_vocab < model.vocab_size) {
    throw ConfigError("link.vocab_size", "must be >= model.vocab_size");
  }
  if (b_prob != 16 && b_prob != 32) throw ConfigError("link.b_prob", "must be 16 or 32");
  if (b_idx && *b_idx < 1) throw ConfigError("link.b_idx", "must be >= 1");
  if (conventions.empty()) throw ConfigError("link.payload_convention", "at least one is required");
  if (r_up_bps.empty()) throw ConfigError("link.r_up_mbps", "grid must be nonempty");
  for (double r : r_up_bps) {
    if (!(r > 0.0)) throw ConfigError("link.r_up_mbps", "rates must be positive");
  }
  try {
    link(r_up_bps.front(), conventions.front()).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("link", e.what());
  }
  try {
    timing.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("timing", e.what());
  }
  if (trials < 2) throw ConfigError("trials", "must be >= 2 (stderr needs two sessions)");
  if (stop_len < 1) throw ConfigError("stop_len", "must be >= 1");
  if (mass_contexts < 1) throw ConfigError("mass.contexts", "must be >= 1");
  if (theory.min_vocab < 2 || theory.max_vocab < theory.min_vocab) {
    throw ConfigError("theory", "need 2 <= min_vocab <= max_vocab");
  }
  if (theory.chain_top_k < 1 || theory.chain_top_k > theory.chain_vocab) {
    throw ConfigError("theory.chain_top_k", "must lie in 1..chain_vocab");
  }
  if (theory.chain_depth < 1) throw ConfigError("theory.chain_depth", "must be >= 1");
  if (!(theory.sparsity >= 0.0 && theory.sparsity < 1.0)) {
    throw ConfigError("theory.sparsity", "must lie in [0, 1)");
  }
  if (jobs < 1) throw ConfigError("jobs", "must be >= 1");
}

LinkModel ExperimentConfig::link(double r_up, PayloadConvention convention) const {
  auto l = LinkModel::make(r_up, payload_vocab, b_prob, convention);
  if (b_idx) l.b_idx = *b_idx;
  l.count_draft_token_ids = count_draft_token_ids;
  return l;
}

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("", std::string("YAML syntax error: ") + e.what());
  }
  ExperimentConfig c;
  if (!root || root.IsNull()) throw ConfigError("", "config is empty");
  require_map(root, "",
              {"name", "seed", "mode", "draft", "truncation", "model", "link", "timing", "trials",
               "stop_len", "mass", "theory", "output_dir", "jobs"});

  if (root["name"]) c.name = scalar<std::string>(root["name"], "name", "a string");
  if (root["seed"]) c.seed = scalar<std::uint64_t>(root["seed"], "seed", "an unsigned integer");
  if (root["mode"]) {
    c.modes = list<DsdMode>(root["mode"], "mode", [](const YAML::Node& x, const std::string& path) {
      const auto text = scalar<std::string>(x, path, "sc or mc");
      try {
        return parse_dsd_mode(text);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
      }
    });
  }
  if (const auto d = root["draft"]) {
    require_map(d, "draft", {"draft_len", "expansion"});
    if (d["draft_len"]) c.draft_len = count(d["draft_len"], "draft.draft_len");
    if (d["expansion"]) {
      const auto& e = d["expansion"];
      std::string text;
      if (e.IsSequence()) {
        for (std::size_t i = 0; i < e.size(); ++i) {
          if (i) text += ',';
          text += std::to_string(count(e[i], "draft.expansion[" + std::to_string(i) + "]"));
        }
      } else {
        text = scalar<std::string>(e, "draft.expansion", "a list of branch counts");
      }
      try {
        c.expansion = ExpansionConfig::parse(text);
      } catch (const std::invalid_argument& ex) {
        throw ConfigError("draft.expansion", ex.what());
      }
    }
  }
  if (const auto t = root["truncation"]) {
    if (t.IsScalar() && t.Scalar() == "none") {
      c.top_k.clear();
    } else {
      require_map(t, "truncation", {"top_k", "top_rho"});
      if (t["top_k"]) c.top_k = list<std::size_t>(t["top_k"], "truncation.top_k", count);
      if (t["top_rho"]) c.top_rho = list<double>(t["top_rho"], "truncation.top_rho", real);
    }
  }
  if (root["model"]) parse_model(root["model"], c.model);
  if (root["link"]) parse_link(root["link"], c);
  if (const auto t = root["timing"]) {
    require_map(t, "timing", {"t_slm_s", "t_llm_s"});
    if (t["t_slm_s"]) c.timing.t_slm = real(t["t_slm_s"], "timing.t_slm_s");
    if (t["t_llm_s"]) c.timing.t_llm = real(t["t_llm_s"], "timing.t_llm_s");
  }
  if (root["trials"]) c.trials = count(root["trials"], "trials");
  if (root["stop_len"]) c.stop_len = count(root["stop_len"], "stop_len");
  if (const auto m = root["mass"]) {
    require_map(m, "mass", {"contexts"});
    if (m["contexts"]) c.mass_contexts = count(m["contexts"], "mass.contexts");
  }
  if (root["theory"]) parse_theory(root["theory"], c);
  if (root["output_dir"]) c.output_dir = scalar<std::string>(root["output_dir"], "output_dir", "a path");
  if (root["jobs"]) c.jobs = count(root["jobs"], "jobs");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace tslt
