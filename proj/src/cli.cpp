#include "chainflow/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "chainflow/config.hpp"
#include "chainflow/export.hpp"
#include "chainflow/pipeline.hpp"
#include "chainflow/sequence.hpp"
#include "chainflow/synthgen.hpp"
#include "json.hpp"

namespace chainflow {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::Schema:
    case ErrorKind::FormatVersion:
    case ErrorKind::EmptySequence:
    case ErrorKind::DanglingUuid:
    case ErrorKind::UnknownAddress:
    case ErrorKind::EmptyCluster:
    case ErrorKind::IneligibleFlow:
    case ErrorKind::DegenerateInput:
    case ErrorKind::EmptyFlow:
      return kExitInput;
    case ErrorKind::Config:
    case ErrorKind::InvalidSpec:
    case ErrorKind::UnsupportedFormat:
      return kExitConfig;
    default:
      return kExitInternal;
  }
}

namespace {

using nlohmann::ordered_json;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::vector<std::string> sets;

  std::string input, out, graph, bgraph, address, token, token_key, format = "dot";
  std::string embeddings, clusters, scores, algo, split, truth, archetypes = "default";
  std::string flows_dir, report;
  bool strict = false, extended = false, untrained = false, auto_k = false, train_only = false;
  bool rho_literal = false, general = false;
  std::optional<unsigned> repeat_threshold;
  std::optional<int> d_hidden, d_out, epochs, k, k_max, cluster_id, gamma, users_per;
  std::optional<double> lr, alpha, beta;
};

PipelineConfig make_config(const Options& o) {
  auto c = default_config();
  if (!o.config_path.empty()) apply_config_file(c, o.config_path);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, "--set expects key=value, got '" + s + "'");
    set_config_value(c, s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.strict) c.ingest.strict = true;
  if (!o.token_key.empty()) c.sequence.token_key = o.token_key;
  if (o.repeat_threshold) c.repeat_threshold = *o.repeat_threshold;
  if (o.untrained) c.embed.untrained = true;
  if (o.d_hidden) c.embed.d_hidden = *o.d_hidden;
  if (o.d_out) c.embed.d_out = *o.d_out;
  if (o.epochs) c.embed.epochs = *o.epochs;
  if (o.lr) c.embed.lr = *o.lr;
  if (o.k) c.cluster.k = *o.k;
  if (o.auto_k) c.cluster.k = 0;
  if (o.k_max) c.cluster.k_max = *o.k_max;
  if (o.train_only) c.cluster.train_only = true;
  if (o.alpha) c.profile.alpha = *o.alpha;
  if (o.beta) c.profile.beta = *o.beta;
  if (o.gamma) c.profile.gamma = *o.gamma;
  if (o.rho_literal) c.rho_literal = true;
  validate(c);
  return c;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

ordered_json entry_json(const EventSeqEntry& e) {
  ordered_json j;
  j["tx_hash"] = e.tx_hash;
  j["timestamp"] = e.timestamp;
  j["block_number"] = e.block_number;
  j["tx_index"] = e.tx_index;
  j["origin"] = to_string(e.origin);
  j["events"] = e.event_names;
  j["token_ids"] = e.data.token_ids;
  j["asset_ids"] = e.data.asset_ids;
  j["ticket_ids"] = e.data.ticket_ids;
  j["pack_ids"] = e.data.pack_ids;
  j["related_addresses"] = e.data.related_addresses;
  j["values"] = e.data.values;
  return j;
}

std::string flow_json(const FlowGraph& f) {
  ordered_json j;
  j["address"] = f.address;
  j["extended"] = f.extended;
  j["actions"] = f.actions;
  j["nfts"] = f.nfts;
  auto edges = ordered_json::array();
  for (const auto& e : f.edges) {
    ordered_json x;
    x["type"] = to_string(e.type);
    x["src"] = std::string(to_string(e.src.type)) + ":" + e.src.key;
    x["dst"] = std::string(to_string(e.dst.type)) + ":" + e.dst.key;
    x["order"] = e.order;
    x["timestamp"] = e.timestamp;
    x["tx_hash"] = e.tx_hash;
    edges.push_back(std::move(x));
  }
  j["edges"] = std::move(edges);
  return j.dump(2) + "\n";
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> pick_labels(const std::map<std::string, std::vector<int>>& columns,
                             const std::string& algo) {
  if (columns.empty()) throw Error(ErrorKind::Schema, "cluster file has no algorithm columns");
  if (algo.empty()) {
    auto it = columns.find("kmeans");
    return it != columns.end() ? it->second : columns.begin()->second;
  }
  auto it = columns.find(algo);
  if (it == columns.end()) throw Error(ErrorKind::Config, "cluster file has no column '" + algo + "'");
  return it->second;
}

std::vector<std::string> read_train(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  std::vector<std::string> train;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma != std::string::npos && line.substr(comma + 1) == "train") {
      train.push_back(line.substr(0, comma));
    }
  }
  return train;
}

int cmd_ingest(const Options& o) {
  const auto c = make_config(o);
  auto loaded = load_dataset(o.input, load_options(c));
  for (const auto& e : loaded.errors) {
    std::fprintf(stderr, "line %zu skipped: %s\n", e.line, e.message.c_str());
  }
  save_graph(loaded.graph, o.out);
  std::printf("%zu transactions, %zu nodes, %zu edges, %zu skipped lines\n",
              loaded.graph.transactions().size(), loaded.graph.nodes().size(),
              loaded.graph.edges().size(), loaded.errors.size());
  return 0;
}

int cmd_sequence(const Options& o) {
  const auto c = make_config(o);
  if (o.address.empty() == o.token.empty()) {
    throw Error(ErrorKind::Config, "give exactly one of --address or --token");
  }
  const auto g = load_graph(o.graph);
  const auto sc = sequence_config(c);
  std::vector<EventSeqEntry> entries;
  if (!o.address.empty()) {
    entries = sequences_for_address(g, canonical_value(o.address), sc).entries;
  } else {
    auto key = TokenKey::parse(o.token);
    if (sc.keying == TokenKeying::TokenIdOnly) key.contract.clear();
    entries = sequences_for_token(g, key, sc).entries;
  }
  std::string text;
  for (const auto& e : entries) text += entry_json(e).dump() + "\n";
  emit(text, o.out);
  return 0;
}

int cmd_actions(const Options& o) {
  const auto c = make_config(o);
  const auto g = load_graph(o.graph);
  const auto bg = form_behaviour(g, action_config(c));
  save_behaviour(bg, o.out);
  std::printf("%zu actions, %zu users, %zu nfts, %zu edges\n", bg.actions.size(), bg.users.size(),
              bg.nfts.size(), bg.edges.size());
  return 0;
}

int cmd_flow(const Options& o) {
  make_config(o);
  const auto bg = load_behaviour(o.bgraph);
  const auto flow = extract_flow(bg, canonical_value(o.address), o.extended);
  if (o.format == "json") {
    emit(flow_json(flow), o.out);
  } else {
    emit(render(export_flow(flow, &bg), parse_export_format(o.format)), o.out);
  }
  return 0;
}

int cmd_embed(const Options& o) {
  const auto c = make_config(o);
  const auto bg = load_behaviour(o.bgraph);
  const auto r = embed_users(bg, c);
  write_embeddings(o.out, r.addresses, r.embeddings);
  if (!o.split.empty()) write_split(o.split, r.train, r.test);
  if (!o.report.empty()) write_training_log(o.report, r.report);
  std::printf("%zu embeddings of width %ld\n", r.addresses.size(),
              static_cast<long>(r.embeddings.cols()));
  return 0;
}

int cmd_cluster(const Options& o) {
  auto c = make_config(o);
  if (!o.algo.empty() && o.algo != "all") c.cluster.algorithms = split_list(o.algo);
  validate(c);
  std::vector<std::string> addresses;
  Matrix X;
  read_embeddings(o.embeddings, addresses, X);
  if (c.cluster.train_only) {
    if (o.split.empty()) throw Error(ErrorKind::Config, "--train-only needs --split");
    const auto train = read_train(o.split);
    const std::set<std::string> keep(train.begin(), train.end());
    std::vector<std::string> kept;
    Matrix Y(static_cast<Eigen::Index>(keep.size()), X.cols());
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < addresses.size(); ++i) {
      if (!keep.count(addresses[i])) continue;
      if (row == Y.rows()) break;
      Y.row(row++) = X.row(static_cast<Eigen::Index>(i));
      kept.push_back(addresses[i]);
    }
    X = Y.topRows(row);
    addresses = std::move(kept);
  }
  const auto r = cluster_embeddings(X, c);
  for (const auto& [name, msg] : r.failures) {
    std::fprintf(stderr, "%s failed: %s\n", name.c_str(), msg.c_str());
  }
  write_assignments(o.out, addresses, r.assignments);
  if (!o.scores.empty()) write_scores(o.scores, r.scores);
  std::printf("k = %d over %zu embeddings\n", r.k, addresses.size());
  return 0;
}

int cmd_profile(const Options& o) {
  const auto c = make_config(o);
  const auto bg = load_behaviour(o.bgraph);
  std::vector<std::string> addresses;
  const auto columns = read_assignments(o.clusters, addresses);
  const auto labels = pick_labels(columns, o.algo);
  std::vector<GeneralFlow> flows;
  const auto profiles = profile_clusters(bg, addresses, labels, profile_config(c), &flows);
  write_profiles(o.out, profiles);
  if (!o.flows_dir.empty()) {
    std::filesystem::create_directories(o.flows_dir);
    for (const auto& gf : flows) {
      for (const auto& f : c.export_formats) {
        const auto format = parse_export_format(f);
        export_graph(export_general_flow(gf, &bg), format,
                     std::filesystem::path(o.flows_dir) /
                         ("cluster_" + std::to_string(gf.cluster_id) + extension(format)));
      }
    }
  }
  for (const auto& p : profiles) {
    std::printf("cluster %d: %zu users, rho %.2f, phi %d, %s\n", p.cluster_id, p.user_count, p.rho,
                p.phi.value, to_string(p.label));
  }
  return 0;
}

int cmd_synth(const Options& o) {
  const auto c = make_config(o);
  SynthConfig sc;
  sc.seed = c.seed;
  sc.repeat_threshold = static_cast<int>(c.repeat_threshold);
  if (o.users_per) sc.users_per_archetype = *o.users_per;
  const auto specs = o.archetypes == "default" ? default_archetypes() : load_archetypes(o.archetypes);
  const auto data = generate(specs, sc);
  write_dataset(o.out, data.transactions);
  if (!o.truth.empty()) write_truth(o.truth, data);
  std::printf("%zu transactions for %zu users\n", data.transactions.size(), data.truth.size());
  return 0;
}

int cmd_pipeline(const Options& o) {
  auto c = make_config(o);
  if (!o.input.empty()) c.input = o.input;
  if (!o.out.empty()) c.out = o.out;
  if (!o.algo.empty() && o.algo != "all") c.cluster.algorithms = split_list(o.algo);
  const auto r = run_pipeline(c);
  std::printf("%zu eligible users, k = %d, run written to %s\n", r.eligible, r.k,
              r.dir.string().c_str());
  for (const auto& p : r.profiles) {
    std::printf("cluster %d: %zu users, rho %.2f, phi %d, %s\n", p.cluster_id, p.user_count, p.rho,
                p.phi.value, to_string(p.label));
  }
  return 0;
}

int cmd_export(const Options& o) {
  make_config(o);
  const auto bg = load_behaviour(o.bgraph);
  const auto format = parse_export_format(o.format);
  if (!o.address.empty()) {
    emit(render(export_flow(extract_flow(bg, canonical_value(o.address), o.extended), &bg), format),
         o.out);
    return 0;
  }
  if (o.clusters.empty() || !o.cluster_id) {
    throw Error(ErrorKind::Config, "give --address, or --clusters with --cluster");
  }
  std::vector<std::string> addresses;
  const auto labels = pick_labels(read_assignments(o.clusters, addresses), o.algo);
  std::vector<FlowGraph> flows;
  for (std::size_t i = 0; i < addresses.size(); ++i) {
    if (labels[i] == *o.cluster_id) flows.push_back(extract_flow(bg, addresses[i], true));
  }
  if (flows.empty()) {
    throw Error(ErrorKind::EmptyCluster, "cluster " + std::to_string(*o.cluster_id) + " has no members");
  }
  const auto g = o.general ? export_general_flow(general_flow(flows, *o.cluster_id), &bg)
                           : export_cluster(flows, *o.cluster_id, &bg);
  emit(render(g, format), o.out);
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Behavioural flow analysis of decoded blockchain event logs", "chainflow"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "Flat JSON config with dotted keys");
  app.add_option("--seed", o.seed, "Random seed (falls back to CHAINFLOW_SEED)");
  app.add_option("--threads", o.threads, "Worker threads");

  auto* ingest = app.add_subcommand("ingest", "Load a dataset and persist its property graph");
  ingest->add_option("--input", o.input)->required();
  ingest->add_option("--out", o.out)->required();
  ingest->add_flag("--strict", o.strict);

  auto* sequence = app.add_subcommand("sequence", "Print event sequences of an address or token");
  sequence->add_option("--graph", o.graph)->required();
  sequence->add_option("--address", o.address);
  sequence->add_option("--token", o.token, "token id, or contract:token_id");
  sequence->add_option("--token-key", o.token_key)->check(CLI::IsMember({"contract+id", "tokenid-only"}));
  sequence->add_option("--out", o.out);

  auto* actions = app.add_subcommand("actions", "Form actions and the behaviour graph");
  actions->add_option("--graph", o.graph)->required();
  actions->add_option("--out", o.out)->required();
  actions->add_option("--repeat-threshold", o.repeat_threshold);
  actions->add_option("--token-key", o.token_key)->check(CLI::IsMember({"contract+id", "tokenid-only"}));

  auto* flow = app.add_subcommand("flow", "Extract one user's flow");
  flow->add_option("--bgraph", o.bgraph)->required();
  flow->add_option("--address", o.address)->required();
  flow->add_flag("--extended", o.extended);
  flow->add_option("--format", o.format)->check(CLI::IsMember({"dot", "graphml", "csv", "json"}));
  flow->add_option("--out", o.out);

  auto* embed = app.add_subcommand("embed", "Embed eligible user flows");
  embed->add_option("--bgraph", o.bgraph)->required();
  embed->add_option("--out", o.out)->required();
  embed->add_flag("--untrained", o.untrained);
  embed->add_option("--d-hidden", o.d_hidden);
  embed->add_option("--d-out", o.d_out);
  embed->add_option("--epochs", o.epochs);
  embed->add_option("--lr", o.lr);
  embed->add_option("--split", o.split, "Write the train/test split here");
  embed->add_option("--report", o.report, "Write per-epoch loss and validation here");

  auto* cluster = app.add_subcommand("cluster", "Cluster embeddings and score the partitions");
  cluster->add_option("--embeddings", o.embeddings)->required();
  cluster->add_option("--algo", o.algo, "all, or a comma-separated list");
  auto* k_opt = cluster->add_option("--k", o.k);
  cluster->add_flag("--auto-k", o.auto_k)->excludes(k_opt);
  cluster->add_option("--k-max", o.k_max);
  cluster->add_flag("--train-only", o.train_only);
  cluster->add_option("--split", o.split);
  cluster->add_option("--out", o.out)->required();
  cluster->add_option("--scores", o.scores);

  auto* profile = app.add_subcommand("profile", "Characterize clusters");
  profile->add_option("--bgraph", o.bgraph)->required();
  profile->add_option("--clusters", o.clusters)->required();
  profile->add_option("--algo", o.algo, "Cluster column to profile (default kmeans)");
  profile->add_option("--out", o.out)->required();
  profile->add_option("--alpha", o.alpha);
  profile->add_option("--beta", o.beta);
  profile->add_option("--gamma", o.gamma);
  profile->add_flag("--rho-literal", o.rho_literal);
  profile->add_option("--flows-dir", o.flows_dir, "Export general flows here");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with planted archetypes");
  synth->add_option("--archetypes", o.archetypes, "default, or a JSON archetype file");
  synth->add_option("--users-per", o.users_per);
  synth->add_option("--out", o.out)->required();
  synth->add_option("--truth", o.truth);

  auto* pipeline = app.add_subcommand("pipeline", "Run every stage into a run directory");
  pipeline->add_option("--input", o.input);
  pipeline->add_option("--out", o.out);
  pipeline->add_option("--set", o.sets, "Override a config key: key=value");
  pipeline->add_option("--algo", o.algo);
  auto* pk = pipeline->add_option("--k", o.k);
  pipeline->add_flag("--auto-k", o.auto_k)->excludes(pk);
  pipeline->add_flag("--untrained", o.untrained);
  pipeline->add_flag("--train-only", o.train_only);
  pipeline->add_flag("--rho-literal", o.rho_literal);

  auto* exp = app.add_subcommand("export", "Render a flow, cluster subgraph or general flow");
  exp->add_option("--bgraph", o.bgraph)->required();
  exp->add_option("--format", o.format)->check(CLI::IsMember({"dot", "graphml", "csv"}));
  exp->add_option("--address", o.address);
  exp->add_flag("--extended", o.extended);
  exp->add_option("--clusters", o.clusters);
  exp->add_option("--cluster", o.cluster_id);
  exp->add_option("--algo", o.algo);
  exp->add_flag("--general", o.general, "General flow instead of the member subgraph");
  exp->add_option("--out", o.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*ingest) return cmd_ingest(o);
    if (*sequence) return cmd_sequence(o);
    if (*actions) return cmd_actions(o);
    if (*flow) return cmd_flow(o);
    if (*embed) return cmd_embed(o);
    if (*cluster) return cmd_cluster(o);
    if (*profile) return cmd_profile(o);
    if (*synth) return cmd_synth(o);
    if (*pipeline) return cmd_pipeline(o);
    if (*exp) return cmd_export(o);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error [internal]: %s\n", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace chainflow
