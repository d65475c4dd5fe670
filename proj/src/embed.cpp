#include "chainflow/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "chainflow/error.hpp"
#include "random.hpp"

namespace chainflow {

namespace {

template <typename Fn>
void parallel_rows(std::size_t n, unsigned threads, Fn fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

void fill_xavier(Matrix& W, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(W.rows() + W.cols()));
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = detail::uniform(rng, -a, a);
  }
}

}  // namespace

std::array<double, kActionFeatureCount> action_features(const ActionStats& s, std::int64_t t0) {
  const auto hours = [t0](std::int64_t ts) {
    return ts <= t0 ? 0.0 : static_cast<double>(ts - t0) / 3600.0;
  };
  std::array<double, kActionFeatureCount> f{
      static_cast<double>(s.total_count),
      static_cast<double>(s.min_call),
      static_cast<double>(s.max_call),
      s.mean_call,
      static_cast<double>(s.min_assets),
      static_cast<double>(s.max_assets),
      s.mean_assets,
      static_cast<double>(s.min_tickets),
      static_cast<double>(s.max_tickets),
      s.mean_tickets,
      static_cast<double>(s.min_packs),
      static_cast<double>(s.max_packs),
      s.mean_packs,
      hours(s.min_timestamp),
      hours(s.max_timestamp),
  };
  for (auto& v : f) v = std::log1p(std::max(0.0, v));
  return f;
}

GraphTensor to_graph_tensor(const FlowGraph& flow, const BehaviourGraph& bg,
                            std::size_t min_distinct) {
  if (!flow.extended) {
    throw Error(ErrorKind::IneligibleFlow, "flow of " + flow.address + " is not extended");
  }
  std::set<std::string> distinct;
  for (const auto& e : flow.edges) {
    if (e.type == BEdgeType::NextStep) distinct.insert(e.dst.key);
  }
  if (distinct.size() < min_distinct) {
    throw Error(ErrorKind::IneligibleFlow, "flow of " + flow.address + " has " +
                                               std::to_string(distinct.size()) +
                                               " distinct actions");
  }

  std::map<NodeRef, int> index;
  const int n = static_cast<int>(flow.actions.size() + flow.nfts.size());
  GraphTensor t;
  t.X = Matrix::Zero(n, kNodeFeatures);
  t.B.assign(static_cast<std::size_t>(n), 0);
  int row = 0;
  for (const auto& uuid : flow.actions) {
    const auto* a = bg.find_action(uuid);
    if (!a) throw Error(ErrorKind::DanglingUuid, "flow references unknown action " + uuid);
    const auto f = action_features(a->stats, bg.min_timestamp());
    for (std::size_t k = 0; k < f.size(); ++k) t.X(row, static_cast<int>(k)) = f[k];
    t.X(row, kActionFeatureCount) = 1.0;
    index[{BNodeType::Action, uuid}] = row++;
  }
  for (const auto& key : flow.nfts) {
    const auto* nft = bg.find_nft(key);
    t.X(row, 0) = nft && nft->is_multiple ? 1.0 : 0.0;
    t.X(row, kActionFeatureCount + 1) = 1.0;
    index[{BNodeType::Nft, key}] = row++;
  }

  std::vector<const BehaviourEdge*> kept;
  for (const auto& e : flow.edges) {
    if (e.src.type == BNodeType::User) continue;
    auto s = index.find(e.src), d = index.find(e.dst);
    if (s == index.end() || d == index.end()) continue;
    t.I.push_back({s->second, d->second});
    kept.push_back(&e);
  }
  t.Y = Matrix::Zero(static_cast<Eigen::Index>(kept.size()), kEdgeFeatures);
  if (!kept.empty()) {
    std::int64_t lo = kept.front()->timestamp, hi = lo;
    for (const auto* e : kept) {
      lo = std::min(lo, e->timestamp);
      hi = std::max(hi, e->timestamp);
    }
    for (std::size_t m = 0; m < kept.size(); ++m) {
      const auto i = static_cast<Eigen::Index>(m);
      t.Y(i, 0) = kept[m]->order;
      t.Y(i, 1) = hi == lo ? 0.0
                           : static_cast<double>(kept[m]->timestamp - lo) /
                                 static_cast<double>(hi - lo);
    }
  }
  return t;
}

Matrix layer_norm(const Matrix& X, double eps) {
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double mean = X.row(i).mean();
    const RowVector c = X.row(i).array() - mean;
    const double var = c.squaredNorm() / static_cast<double>(X.cols());
    out.row(i) = c / std::sqrt(var + eps);
  }
  return out;
}

Matrix edge_scatter_mean(const Matrix& Y, const std::vector<std::array<int, 2>>& I, int n) {
  Matrix out = Matrix::Zero(n, Y.cols());
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  for (std::size_t m = 0; m < I.size(); ++m) {
    out.row(I[m][0]) += Y.row(static_cast<Eigen::Index>(m));
    ++count[static_cast<std::size_t>(I[m][0])];
  }
  for (int v = 0; v < n; ++v) {
    if (count[static_cast<std::size_t>(v)] > 0) out.row(v) /= count[static_cast<std::size_t>(v)];
  }
  return out;
}

Matrix neighbour_mean(const Matrix& X, const std::vector<std::array<int, 2>>& I) {
  Matrix out = Matrix::Zero(X.rows(), X.cols());
  std::vector<int> count(static_cast<std::size_t>(X.rows()), 0);
  for (const auto& [src, dst] : I) {
    out.row(dst) += X.row(src);
    ++count[static_cast<std::size_t>(dst)];
  }
  for (Eigen::Index v = 0; v < X.rows(); ++v) {
    if (count[static_cast<std::size_t>(v)] > 0) out.row(v) /= count[static_cast<std::size_t>(v)];
  }
  return out;
}

ModelParams ModelParams::zeros(const ModelDims& dims) {
  ModelParams p;
  p.dims = dims;
  p.W_self = Matrix::Zero(dims.d_cat(), dims.d_hidden);
  p.W_neigh = Matrix::Zero(dims.d_cat(), dims.d_hidden);
  p.b = Vector::Zero(dims.d_hidden);
  p.W_lin = Matrix::Zero(dims.d_hidden, dims.d_out);
  p.b_lin = Vector::Zero(dims.d_out);
  p.W_dec = Matrix::Zero(dims.d_out, dims.d_in_node);
  p.b_dec = Vector::Zero(dims.d_in_node);
  return p;
}

ModelParams ModelParams::xavier(const ModelDims& dims, std::uint64_t seed) {
  auto p = zeros(dims);
  p.seed = seed;
  std::mt19937_64 rng(detail::mix_seed(seed, 1));
  fill_xavier(p.W_self, rng);
  fill_xavier(p.W_neigh, rng);
  fill_xavier(p.W_lin, rng);
  fill_xavier(p.W_dec, rng);
  return p;
}

std::vector<double*> ModelParams::parameters() {
  std::vector<double*> out;
  for (auto* m : {&W_self, &W_neigh, &W_lin, &W_dec}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) out.push_back(m->data() + i);
  }
  for (auto* v : {&b, &b_lin, &b_dec}) {
    for (Eigen::Index i = 0; i < v->size(); ++i) out.push_back(v->data() + i);
  }
  return out;
}

std::size_t ModelParams::parameter_count() const {
  return static_cast<std::size_t>(W_self.size() + W_neigh.size() + W_lin.size() + W_dec.size() +
                                  b.size() + b_lin.size() + b_dec.size());
}

bool ModelParams::all_finite() const {
  return W_self.allFinite() && W_neigh.allFinite() && b.allFinite() && W_lin.allFinite() &&
         b_lin.allFinite() && W_dec.allFinite() && b_dec.allFinite();
}

Matrix sage_forward(const Matrix& X_cat, const std::vector<std::array<int, 2>>& I,
                    const ModelParams& params) {
  const auto& d = params.dims;
  if (X_cat.cols() != d.d_cat() || params.W_self.rows() != d.d_cat() ||
      params.W_neigh.rows() != d.d_cat() || params.W_self.cols() != d.d_hidden ||
      params.W_neigh.cols() != d.d_hidden || params.b.size() != d.d_hidden) {
    throw Error(ErrorKind::ShapeMismatch, "SAGE input has " + std::to_string(X_cat.cols()) +
                                              " columns, model expects " +
                                              std::to_string(d.d_cat()));
  }
  for (const auto& [s, t] : I) {
    if (s < 0 || t < 0 || s >= X_cat.rows() || t >= X_cat.rows()) {
      throw Error(ErrorKind::ShapeMismatch, "edge index out of range");
    }
  }
  Matrix H = X_cat * params.W_self + neighbour_mean(X_cat, I) * params.W_neigh;
  H.rowwise() += params.b.transpose();
  return H;
}

Matrix input_features(const GraphTensor& t) {
  Matrix out(t.X.rows(), t.X.cols() + t.Y.cols());
  out << layer_norm(t.X), edge_scatter_mean(t.Y, t.I, t.nodes());
  return out;
}

RowVector embed_tensor(const GraphTensor& t, const ModelParams& params) {
  if (t.nodes() == 0) return RowVector::Zero(params.dims.d_out);
  const Matrix H = sage_forward(input_features(t), t.I, params);
  Matrix O = H.cwiseMax(0.0) * params.W_lin;
  O.rowwise() += params.b_lin.transpose();
  return O.colwise().mean();
}

Matrix embed_batch(const std::vector<GraphTensor>& tensors, const ModelParams& params,
                   unsigned threads) {
  Matrix out(static_cast<Eigen::Index>(tensors.size()), params.dims.d_out);
  parallel_rows(tensors.size(), threads, [&](std::size_t i) {
    out.row(static_cast<Eigen::Index>(i)) = embed_tensor(tensors[i], params);
  });
  return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_train_test(
    const std::vector<std::string>& addresses, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::Config, "train fraction must be in (0, 1)");
  }
  auto shuffled = addresses;
  std::mt19937_64 rng(detail::mix_seed(seed, 2));
  detail::shuffle(shuffled, rng);
  const auto n_train = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(addresses.size()) + 1e-9));
  std::vector<std::string> train(shuffled.begin(), shuffled.begin() + n_train);
  std::vector<std::string> test(shuffled.begin() + n_train, shuffled.end());
  return {train, test};
}

void write_embeddings(const std::filesystem::path& path, const std::vector<std::string>& addresses,
                      const Matrix& embeddings) {
  if (static_cast<Eigen::Index>(addresses.size()) != embeddings.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "address count does not match embedding rows");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "address";
  for (Eigen::Index j = 0; j < embeddings.cols(); ++j) out << ",e" << j;
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < addresses.size(); ++i) {
    out << addresses[i];
    for (Eigen::Index j = 0; j < embeddings.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", embeddings(static_cast<Eigen::Index>(i), j));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

void read_embeddings(const std::filesystem::path& path, std::vector<std::string>& addresses,
                     Matrix& embeddings) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("address", 0) != 0) {
    throw Error(ErrorKind::Schema, path.string() + ": missing embeddings header");
  }
  const auto dims = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
  std::vector<std::vector<double>> rows;
  addresses.clear();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    addresses.push_back(cell);
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw Error(ErrorKind::Schema,
                    path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      row.push_back(v);
    }
    if (static_cast<Eigen::Index>(row.size()) != dims) {
      throw Error(ErrorKind::Schema, path.string() + ":" + std::to_string(lineno) +
                                         ": expected " + std::to_string(dims) + " values");
    }
    rows.push_back(std::move(row));
  }
  embeddings.resize(static_cast<Eigen::Index>(rows.size()), dims);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < dims; ++j) {
      embeddings(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    }
  }
}

}  // namespace chainflow
