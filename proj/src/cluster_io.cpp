#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "chainflow/cluster.hpp"
#include "chainflow/error.hpp"

namespace chainflow {

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

const std::vector<std::string>& algorithm_names() {
  static const std::vector<std::string> names{
      "kmeans", "bisecting_kmeans", "mean_shift", "agglomerative",
      "birch",  "spectral",         "affinity_propagation"};
  return names;
}

ClusterAssignment run_algorithm(const std::string& name, const Matrix& X, int k,
                                std::uint64_t seed, const AlgorithmSettings& settings) {
  if (name == "kmeans") return kmeans(X, k, seed, settings.kmeans);
  if (name == "bisecting_kmeans") return bisecting_kmeans(X, k, seed);
  if (name == "mean_shift") return mean_shift(X, settings.mean_shift);
  if (name == "agglomerative") return agglomerative_ward(X, k);
  if (name == "birch") return birch(X, k, settings.birch);
  if (name == "spectral") return spectral(X, k, seed, settings.spectral);
  if (name == "affinity_propagation") return affinity_propagation(X, seed, settings.affinity);
  throw Error(ErrorKind::Config, "unknown clustering algorithm '" + name + "'");
}

void write_assignments(const std::filesystem::path& path, const std::vector<std::string>& addresses,
                       const std::vector<ClusterAssignment>& assignments) {
  for (const auto& a : assignments) {
    if (a.labels.size() != addresses.size()) {
      throw Error(ErrorKind::ShapeMismatch, a.algorithm + " labels do not cover every address");
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "address";
  for (const auto& a : assignments) out << ',' << a.algorithm;
  out << '\n';
  for (std::size_t i = 0; i < addresses.size(); ++i) {
    out << addresses[i];
    for (const auto& a : assignments) out << ',' << a.labels[i];
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::map<std::string, std::vector<int>> read_assignments(const std::filesystem::path& path,
                                                         std::vector<std::string>& addresses) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Schema, path.string() + " is empty");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "address") {
    throw Error(ErrorKind::Schema, path.string() + ": first column must be 'address'");
  }
  std::map<std::string, std::vector<int>> out;
  for (std::size_t c = 1; c < header.size(); ++c) out[header[c]];
  addresses.clear();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::Schema, path.string() + ":" + std::to_string(lineno) +
                                         ": expected " + std::to_string(header.size()) +
                                         " columns");
    }
    addresses.push_back(cells[0]);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      try {
        out[header[c]].push_back(std::stoi(cells[c]));
      } catch (const std::exception&) {
        throw Error(ErrorKind::Schema,
                    path.string() + ":" + std::to_string(lineno) + ": bad label '" + cells[c] + "'");
      }
    }
  }
  return out;
}

void write_scores(const std::filesystem::path& path, const std::vector<ClusterScores>& scores) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "algorithm,k,sc,dbi,chi\n";
  for (const auto& s : scores) {
    out << s.algorithm << ',' << s.k << ',' << format_double(s.sc) << ',' << format_double(s.dbi)
        << ',' << format_double(s.chi) << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace chainflow
