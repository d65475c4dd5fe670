#include "chainflow/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>

#include "chainflow/error.hpp"
#include "json.hpp"

namespace chainflow {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct Field {
  std::string key;
  std::function<json(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const json&)> set;
};

template <typename T>
Field top(std::string key, T PipelineConfig::*member) {
  return {std::move(key), [member](const PipelineConfig& c) { return json(c.*member); },
          [member](PipelineConfig& c, const json& v) { c.*member = v.get<T>(); }};
}

template <typename S, typename T>
Field nested(std::string key, S PipelineConfig::*section, T S::*member) {
  return {std::move(key),
          [section, member](const PipelineConfig& c) { return json((c.*section).*member); },
          [section, member](PipelineConfig& c, const json& v) { (c.*section).*member = v.get<T>(); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using P = PipelineConfig;
    std::vector<Field> f;
    f.push_back(top("input", &P::input));
    f.push_back(top("out", &P::out));
    f.push_back(top("seed", &P::seed));
    f.push_back(top("threads", &P::threads));
    f.push_back(nested("ingest.strict", &P::ingest, &IngestSettings::strict));
    f.push_back(nested("ingest.same_value_threshold", &P::ingest, &IngestSettings::same_value_threshold));
    f.push_back(nested("sequence.token_keys", &P::sequence, &SequenceSettings::token_keys));
    f.push_back(nested("sequence.asset_keys", &P::sequence, &SequenceSettings::asset_keys));
    f.push_back(nested("sequence.ticket_keys", &P::sequence, &SequenceSettings::ticket_keys));
    f.push_back(nested("sequence.pack_keys", &P::sequence, &SequenceSettings::pack_keys));
    f.push_back(nested("sequence.token_key", &P::sequence, &SequenceSettings::token_key));
    f.push_back(top("action.repeat_threshold", &P::repeat_threshold));
    f.push_back(top("flow.min_distinct", &P::min_distinct));
    f.push_back(nested("embed.d_hidden", &P::embed, &EmbedSettings::d_hidden));
    f.push_back(nested("embed.d_out", &P::embed, &EmbedSettings::d_out));
    f.push_back(nested("embed.untrained", &P::embed, &EmbedSettings::untrained));
    f.push_back(nested("embed.epochs", &P::embed, &EmbedSettings::epochs));
    f.push_back(nested("embed.lr", &P::embed, &EmbedSettings::lr));
    f.push_back(nested("embed.mask_rate", &P::embed, &EmbedSettings::mask_rate));
    f.push_back(nested("embed.edge_dropout", &P::embed, &EmbedSettings::edge_dropout));
    f.push_back(nested("embed.train_fraction", &P::embed, &EmbedSettings::train_fraction));
    f.push_back(nested("cluster.algorithms", &P::cluster, &ClusterSettings::algorithms));
    f.push_back(nested("cluster.k", &P::cluster, &ClusterSettings::k));
    f.push_back(nested("cluster.k_max", &P::cluster, &ClusterSettings::k_max));
    f.push_back(nested("cluster.train_only", &P::cluster, &ClusterSettings::train_only));
    f.push_back(nested("cluster.profile_algorithm", &P::cluster, &ClusterSettings::profile_algorithm));
    f.push_back(nested("cluster.mean_shift.quantile", &P::cluster, &ClusterSettings::mean_shift_quantile));
    f.push_back(nested("cluster.mean_shift.bandwidth", &P::cluster, &ClusterSettings::mean_shift_bandwidth));
    f.push_back(nested("cluster.birch.branching", &P::cluster, &ClusterSettings::birch_branching));
    f.push_back(nested("cluster.birch.threshold", &P::cluster, &ClusterSettings::birch_threshold));
    f.push_back(nested("cluster.spectral.gamma", &P::cluster, &ClusterSettings::spectral_gamma));
    f.push_back(nested("cluster.affinity.damping", &P::cluster, &ClusterSettings::affinity_damping));
    f.push_back({"cluster.affinity.preference",
                 [](const P& c) {
                   return c.cluster.affinity_preference ? json(*c.cluster.affinity_preference)
                                                        : json(nullptr);
                 },
                 [](P& c, const json& v) {
                   if (v.is_null()) c.cluster.affinity_preference.reset();
                   else c.cluster.affinity_preference = v.get<double>();
                 }});
    f.push_back(nested("profile.alpha", &P::profile, &LabelParams::alpha));
    f.push_back(nested("profile.beta", &P::profile, &LabelParams::beta));
    f.push_back(nested("profile.gamma", &P::profile, &LabelParams::gamma));
    f.push_back(top("profile.rho_literal", &P::rho_literal));
    f.push_back(top("export.formats", &P::export_formats));
    return f;
  }();
  return table;
}

const Field& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw Error(ErrorKind::Config, "unknown config key '" + std::string(key) + "'");
}

// json::get<unsigned>() silently wraps negatives and truncates fractions.
void check_type(const Field& f, const json& v, const json& current) {
  const bool ok = [&] {
    if (current.is_boolean()) return v.is_boolean();
    if (current.is_string()) return v.is_string();
    if (current.is_array()) {
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); });
    }
    if (current.is_number_unsigned()) return v.is_number_unsigned();
    if (current.is_number_integer()) return v.is_number_integer();
    if (current.is_number_float()) return v.is_number();
    return v.is_null() || v.is_number();
  }();
  if (!ok) throw Error(ErrorKind::Config, "config key '" + f.key + "' has the wrong type");
}

void set_field(PipelineConfig& config, const Field& f, const json& v) {
  check_type(f, v, f.get(config));
  try {
    f.set(config, v);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, "config key '" + f.key + "': " + e.what());
  }
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("CHAINFLOW_SEED");
  if (!raw || !*raw) return std::nullopt;
  const std::string text(raw);
  if (!std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw Error(ErrorKind::Config, "CHAINFLOW_SEED must be a non-negative integer");
  }
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw Error(ErrorKind::Config, "CHAINFLOW_SEED out of range");
  }
}

PipelineConfig default_config() {
  PipelineConfig c;
  if (auto s = env_seed()) c.seed = *s;
  return c;
}

void set_config_value(PipelineConfig& config, std::string_view key, std::string_view json_value) {
  const auto& f = find_field(key);
  json v;
  try {
    v = json::parse(json_value);
  } catch (const json::exception&) {
    // Bare words are taken as strings so `--set cluster.profile_algorithm=birch` works.
    v = std::string(json_value);
  }
  set_field(config, f, v);
}

void apply_config_file(PipelineConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::Config, path.string() + ": expected a JSON object");
  for (const auto& [key, value] : doc.items()) set_field(config, find_field(key), value);
}

void validate(const PipelineConfig& c) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
  parse_token_keying(c.sequence.token_key);
  if (c.sequence.token_keys.empty()) fail("sequence.token_keys must not be empty");
  if (c.repeat_threshold < 2) fail("action.repeat_threshold must be >= 2");
  if (c.min_distinct < 1) fail("flow.min_distinct must be >= 1");
  if (c.embed.d_hidden < 1 || c.embed.d_out < 1) fail("embed dimensions must be positive");
  if (c.embed.epochs < 0) fail("embed.epochs must be >= 0");
  if (!(c.embed.lr >= 0)) fail("embed.lr must be >= 0");
  if (!(c.embed.mask_rate > 0 && c.embed.mask_rate < 1)) fail("embed.mask_rate must be in (0,1)");
  if (!(c.embed.edge_dropout >= 0 && c.embed.edge_dropout < 1)) fail("embed.edge_dropout must be in [0,1)");
  if (!(c.embed.train_fraction > 0 && c.embed.train_fraction < 1)) {
    fail("embed.train_fraction must be in (0,1)");
  }
  const auto& names = algorithm_names();
  for (const auto& a : c.cluster.algorithms) {
    if (std::find(names.begin(), names.end(), a) == names.end()) fail("unknown algorithm '" + a + "'");
  }
  if (std::find(names.begin(), names.end(), c.cluster.profile_algorithm) == names.end()) {
    fail("unknown cluster.profile_algorithm '" + c.cluster.profile_algorithm + "'");
  }
  if (c.cluster.k < 0) fail("cluster.k must be >= 0");
  if (c.cluster.k_max < 2) fail("cluster.k_max must be >= 2");
  if (!(c.cluster.mean_shift_quantile > 0 && c.cluster.mean_shift_quantile <= 1)) {
    fail("cluster.mean_shift.quantile must be in (0,1]");
  }
  if (c.cluster.mean_shift_bandwidth < 0) fail("cluster.mean_shift.bandwidth must be >= 0");
  if (c.cluster.birch_branching < 2) fail("cluster.birch.branching must be >= 2");
  if (c.cluster.birch_threshold < 0) fail("cluster.birch.threshold must be >= 0");
  if (c.cluster.spectral_gamma < 0) fail("cluster.spectral.gamma must be >= 0");
  if (!(c.cluster.affinity_damping >= 0.5 && c.cluster.affinity_damping < 1)) {
    fail("cluster.affinity.damping must be in [0.5,1)");
  }
  if (!(c.profile.alpha >= 0 && c.profile.alpha <= 1)) fail("profile.alpha must be in [0,1]");
  if (!(c.profile.beta > 0 && c.profile.beta <= 1)) fail("profile.beta must be in (0,1]");
  if (c.profile.gamma < 0) fail("profile.gamma must be >= 0");
  for (const auto& f : c.export_formats) {
    if (f != "dot" && f != "graphml" && f != "csv") fail("unsupported export format '" + f + "'");
  }
}

std::string to_json_text(const PipelineConfig& config) {
  ordered_json doc = ordered_json::object();
  for (const auto& f : fields()) doc[f.key] = ordered_json::parse(f.get(config).dump());
  return doc.dump(2) + "\n";
}

SequenceConfig sequence_config(const PipelineConfig& c) {
  SequenceConfig s;
  s.token_keys = c.sequence.token_keys;
  s.asset_keys = c.sequence.asset_keys;
  s.ticket_keys = c.sequence.ticket_keys;
  s.pack_keys = c.sequence.pack_keys;
  s.keying = parse_token_keying(c.sequence.token_key);
  return s;
}

ActionConfig action_config(const PipelineConfig& c) {
  ActionConfig a;
  a.sequence = sequence_config(c);
  a.repeat_threshold = c.repeat_threshold;
  a.threads = c.threads;
  return a;
}

LoadOptions load_options(const PipelineConfig& c) {
  LoadOptions o;
  o.strict = c.ingest.strict;
  o.threads = c.threads;
  o.graph.same_value_threshold = c.ingest.same_value_threshold;
  return o;
}

ModelDims model_dims(const PipelineConfig& c) {
  ModelDims d;
  d.d_hidden = c.embed.d_hidden;
  d.d_out = c.embed.d_out;
  return d;
}

TrainConfig train_config(const PipelineConfig& c) {
  TrainConfig t;
  t.epochs = c.embed.epochs;
  t.lr = c.embed.lr;
  t.mask_rate = c.embed.mask_rate;
  t.edge_dropout = c.embed.edge_dropout;
  t.seed = c.seed;
  t.threads = c.threads;
  return t;
}

AlgorithmSettings algorithm_settings(const PipelineConfig& c) {
  AlgorithmSettings s;
  s.mean_shift.quantile = c.cluster.mean_shift_quantile;
  s.mean_shift.bandwidth = c.cluster.mean_shift_bandwidth;
  s.birch.branching = c.cluster.birch_branching;
  s.birch.threshold = c.cluster.birch_threshold;
  s.spectral.gamma = c.cluster.spectral_gamma;
  s.affinity.damping = c.cluster.affinity_damping;
  s.affinity.preference = c.cluster.affinity_preference;
  return s;
}

ProfileConfig profile_config(const PipelineConfig& c) {
  ProfileConfig p;
  p.label = c.profile;
  p.rho_literal = c.rho_literal;
  return p;
}

std::vector<std::string> cluster_algorithms(const PipelineConfig& c) {
  return c.cluster.algorithms.empty() ? algorithm_names() : c.cluster.algorithms;
}

}  // namespace chainflow
