#include "chainflow/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "chainflow/error.hpp"
#include "chainflow/export.hpp"
#include "chainflow/hash.hpp"
#include "chainflow/ingest.hpp"
#include "json.hpp"

namespace chainflow {

namespace {

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(name) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Internal, std::string(name) + ": " + e.what());
  }
}

Matrix select_rows(const Matrix& X, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace

EmbedResult embed_users(const BehaviourGraph& bg, const PipelineConfig& config) {
  EmbedResult r;
  r.addresses = eligible_users(bg, config.min_distinct);
  if (r.addresses.empty()) throw Error(ErrorKind::DegenerateInput, "no eligible user flows");
  std::vector<GraphTensor> tensors;
  tensors.reserve(r.addresses.size());
  for (const auto& a : r.addresses) {
    tensors.push_back(to_graph_tensor(extract_flow(bg, a, true), bg, config.min_distinct));
  }
  std::tie(r.train, r.test) = split_train_test(r.addresses, config.embed.train_fraction, config.seed);

  const auto dims = model_dims(config);
  r.params = ModelParams::xavier(dims, config.seed);
  if (!config.embed.untrained && !r.train.empty()) {
    const std::set<std::string> train_set(r.train.begin(), r.train.end());
    std::vector<GraphTensor> train_t, test_t;
    for (std::size_t i = 0; i < r.addresses.size(); ++i) {
      (train_set.count(r.addresses[i]) ? train_t : test_t).push_back(tensors[i]);
    }
    r.params = train(train_t, test_t, r.params, train_config(config), &r.report);
  }
  r.embeddings = embed_batch(tensors, r.params, config.threads);
  return r;
}

ClusterResult cluster_embeddings(const Matrix& X, const PipelineConfig& config) {
  ClusterResult r;
  const int n = static_cast<int>(X.rows());
  if (n == 0) throw Error(ErrorKind::DegenerateInput, "no embeddings to cluster");
  r.k = config.cluster.k > 0 ? config.cluster.k : elbow(X, config.cluster.k_max, config.seed);
  if (r.k > n) throw Error(ErrorKind::Config, "k exceeds the number of embeddings");
  const auto settings = algorithm_settings(config);
  for (const auto& name : cluster_algorithms(config)) {
    try {
      auto a = run_algorithm(name, X, r.k, config.seed, settings);
      r.scores.push_back(score(X, a));
      r.assignments.push_back(std::move(a));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config) throw;
      r.failures[name] = e.what();
      ClusterScores s;
      s.algorithm = name;
      r.scores.push_back(s);
    }
  }
  return r;
}

std::map<std::string, std::string> hash_tree(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    out[rel] = sha256_file(entry.path());
  }
  return out;
}

void write_split(const std::filesystem::path& path, const std::vector<std::string>& train,
                 const std::vector<std::string>& test) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "address,set\n";
  for (const auto& a : train) out << a << ",train\n";
  for (const auto& a : test) out << a << ",test\n";
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

void write_training_log(const std::filesystem::path& path, const TrainReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "epoch,loss,validation\n";
  char buf[64];
  for (std::size_t e = 0; e < report.loss.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%.17g", report.loss[e]);
    out << e << ',' << buf << ',';
    if (e < report.validation.size()) {
      std::snprintf(buf, sizeof buf, "%.17g", report.validation[e]);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  stage("config", [&] {
    validate(config);
    if (config.input.empty()) throw Error(ErrorKind::Config, "no input dataset given");
    if (config.out.empty()) throw Error(ErrorKind::Config, "no run directory given");
    return 0;
  });
  if (!std::filesystem::is_regular_file(config.input)) {
    throw Error(ErrorKind::Io, "ingest: input file not found: " + config.input);
  }
  PipelineResult result;
  result.dir = config.out;
  const auto& dir = result.dir;
  stage("setup", [&] {
    std::filesystem::create_directories(dir);
    for (const char* sub : {"graph", "bgraph", "general_flows"}) std::filesystem::remove_all(dir / sub);
    std::filesystem::create_directories(dir / "general_flows");
    return 0;
  });

  const auto graph = stage("ingest", [&] {
    auto loaded = load_dataset(config.input, load_options(config));
    for (std::size_t i = 0; i < loaded.errors.size() && i < 10; ++i) {
      const auto& e = loaded.errors[i];
      std::fprintf(stderr, "ingest: line %zu skipped: %s\n", e.line, e.message.c_str());
    }
    if (loaded.errors.size() > 10) {
      std::fprintf(stderr, "ingest: %zu more lines skipped\n", loaded.errors.size() - 10);
    }
    save_graph(loaded.graph, dir / "graph");
    return std::move(loaded.graph);
  });

  const auto bg = stage("actions", [&] {
    auto b = form_behaviour(graph, action_config(config));
    save_behaviour(b, dir / "bgraph");
    return b;
  });

  auto embedded = stage("embed", [&] {
    auto e = embed_users(bg, config);
    write_embeddings(dir / "embeddings.csv", e.addresses, e.embeddings);
    write_split(dir / "split.csv", e.train, e.test);
    write_training_log(dir / "training.csv", e.report);
    return e;
  });
  result.eligible = embedded.addresses.size();

  auto clustered = stage("cluster", [&] {
    std::vector<std::size_t> rows;
    if (config.cluster.train_only) {
      const std::set<std::string> train(embedded.train.begin(), embedded.train.end());
      for (std::size_t i = 0; i < embedded.addresses.size(); ++i) {
        if (train.count(embedded.addresses[i])) rows.push_back(i);
      }
    } else {
      for (std::size_t i = 0; i < embedded.addresses.size(); ++i) rows.push_back(i);
    }
    for (auto i : rows) result.addresses.push_back(embedded.addresses[i]);
    auto c = cluster_embeddings(select_rows(embedded.embeddings, rows), config);
    for (const auto& [name, msg] : c.failures) {
      std::fprintf(stderr, "cluster: %s failed: %s\n", name.c_str(), msg.c_str());
    }
    write_assignments(dir / "clusters.csv", result.addresses, c.assignments);
    write_scores(dir / "scores.csv", c.scores);
    return c;
  });
  result.k = clustered.k;
  result.scores = clustered.scores;

  stage("profile", [&] {
    const auto it = std::find_if(clustered.assignments.begin(), clustered.assignments.end(),
                                 [&](const ClusterAssignment& a) {
                                   return a.algorithm == config.cluster.profile_algorithm;
                                 });
    if (it == clustered.assignments.end()) {
      throw Error(ErrorKind::Config,
                  "profile algorithm '" + config.cluster.profile_algorithm + "' produced no clusters");
    }
    result.labels = it->labels;
    std::vector<GeneralFlow> flows;
    result.profiles =
        profile_clusters(bg, result.addresses, result.labels, profile_config(config), &flows);
    write_profiles(dir / "profiles.csv", result.profiles);
    for (const auto& gf : flows) {
      const auto g = export_general_flow(gf, &bg);
      for (const auto& f : config.export_formats) {
        const auto format = parse_export_format(f);
        export_graph(g, format,
                     dir / "general_flows" /
                         ("cluster_" + std::to_string(gf.cluster_id) + extension(format)));
      }
    }
    return 0;
  });

  stage("manifest", [&] {
    result.hashes = hash_tree(dir);
    nlohmann::ordered_json m;
    m["format"] = kRunFormat;
    m["config"] = nlohmann::ordered_json::parse(to_json_text(config));
    m["eligible_users"] = result.eligible;
    m["k"] = result.k;
    m["files"] = result.hashes;
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write manifest");
    out << m.dump(2) << '\n';
    return 0;
  });
  return result;
}

}  // namespace chainflow
