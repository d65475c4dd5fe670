#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "chainflow/embed.hpp"
#include "chainflow/error.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "flows.hpp"

using namespace chainflow;
using fixtures::addr;
using fixtures::tx;

namespace {

GraphTensor doubled(const GraphTensor& t) {
  GraphTensor out;
  const int n = t.nodes();
  out.X = Matrix(2 * n, t.X.cols());
  out.X << t.X, t.X;
  out.Y = Matrix(2 * t.Y.rows(), t.Y.cols());
  out.Y << t.Y, t.Y;
  out.I = t.I;
  for (const auto& e : t.I) out.I.push_back({e[0] + n, e[1] + n});
  out.B.assign(static_cast<std::size_t>(2 * n), 0);
  return out;
}

BehaviourGraph chain_graph(const std::vector<std::string>& steps, bool same_time) {
  std::vector<TxRecord> txs;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    auto t = tx(i + 1, same_time ? 500 : static_cast<std::int64_t>(500 + 60 * i), addr(1), addr(9),
                {{steps[i], {}}});
    t.block_number = 10;
    t.tx_index = i;
    txs.push_back(t);
  }
  return form_behaviour(PropertyGraph::from_records(txs));
}

}  // namespace

TEST_CASE("tensor shapes for a four action flow") {
  const auto bg = chain_graph({"a", "b", "c", "d"}, false);
  const auto t = to_graph_tensor(extract_flow(bg, addr(1), true), bg);
  CHECK(t.X.rows() == 4);
  CHECK(t.X.cols() == 17);
  CHECK(t.edge_count() == 3);
  CHECK(t.Y.rows() == 3);
  CHECK(t.Y.cols() == 2);
  for (int i = 0; i < 4; ++i) {
    CHECK(t.X(i, 15) == 1.0);
    CHECK(t.X(i, 16) == 0.0);
  }
  CHECK(t.Y(0, 1) == 0.0);
  CHECK(t.Y(2, 1) == 1.0);
}

TEST_CASE("equal timestamps normalize to zero") {
  const auto bg = chain_graph({"a", "b", "c", "d"}, true);
  const auto t = to_graph_tensor(extract_flow(bg, addr(1), true), bg);
  CHECK(t.Y.col(1).isZero(0));
}

TEST_CASE("ineligible flows are rejected") {
  const auto bg = chain_graph({"a", "b", "c"}, false);
  CHECK_THROWS_AS(to_graph_tensor(extract_flow(bg, addr(1), true), bg), Error);
  CHECK_THROWS_AS(to_graph_tensor(extract_flow(bg, addr(1), false), bg, 1), Error);
}

TEST_CASE("NFT rows carry is_multiple, padding and the NFT tag") {
  std::vector<TxRecord> txs;
  const char* names[] = {"a", "b", "c", "d"};
  for (std::uint64_t i = 0; i < 4; ++i) {
    txs.push_back(tx(i + 1, static_cast<std::int64_t>(100 + i), addr(1), addr(9),
                     {{names[i], {{"tokenId", i < 2 ? "7" : std::to_string(i)}}}}));
  }
  const auto bg = form_behaviour(PropertyGraph::from_records(txs));
  const auto flow = extract_flow(bg, addr(1), true);
  const auto t = to_graph_tensor(flow, bg);
  REQUIRE(t.nodes() == 4 + 3);
  std::multiset<double> multiple;
  for (int r = 4; r < t.nodes(); ++r) {
    multiple.insert(t.X(r, 0));
    for (int c = 1; c < 16; ++c) CHECK(t.X(r, c) == 0.0);
    CHECK(t.X(r, 16) == 1.0);
  }
  CHECK(multiple == std::multiset<double>{0.0, 0.0, 1.0});
}

TEST_CASE("action features are log1p scaled statistics") {
  ActionStats s;
  s.total_count = 3;
  s.min_call = 1;
  s.max_call = 2;
  s.mean_call = 1.5;
  s.min_timestamp = 3600;
  s.max_timestamp = 7200;
  const auto f = action_features(s, 0);
  CHECK(f[0] == doctest::Approx(std::log1p(3.0)));
  CHECK(f[3] == doctest::Approx(std::log1p(1.5)));
  CHECK(f[13] == doctest::Approx(std::log1p(1.0)));
  CHECK(f[14] == doctest::Approx(std::log1p(2.0)));
}

TEST_CASE("layer norm") {
  Matrix X(3, 2);
  X << 5, 5, 1, -1, 0, 0;
  const auto N = layer_norm(X);
  CHECK(N.row(0).isZero(0));
  const double c = 1.0 / std::sqrt(1.0 + kLayerNormEps);
  CHECK(N(1, 0) == doctest::Approx(c).epsilon(1e-12));
  CHECK(N(1, 1) == doctest::Approx(-c).epsilon(1e-12));
  CHECK(N(1, 0) == doctest::Approx(0.999995).epsilon(1e-6));
  CHECK(N.row(2).isZero(0));
}

TEST_CASE("edge scatter mean") {
  Matrix Y(2, 2);
  Y << 1, 2, 3, 4;
  const auto S = edge_scatter_mean(Y, {{0, 1}, {0, 1}}, 2);
  Matrix want(2, 2);
  want << 2, 3, 0, 0;
  CHECK(S == want);
  CHECK(edge_scatter_mean(Matrix(0, 2), {}, 3).isZero(0));
  CHECK(edge_scatter_mean(Y, {{0, 1}, {1, 0}}, 2) == Y);
}

TEST_CASE("sage layer") {
  ModelDims d;
  d.d_in_node = 2;
  d.d_in_edge = 1;
  d.d_hidden = 3;
  d.d_out = 2;
  auto p = ModelParams::zeros(d);
  p.W_self = Matrix::Identity(3, 3);
  p.W_neigh = Matrix::Identity(3, 3);

  Matrix one(1, 3);
  one << 1, 2, 3;
  CHECK(sage_forward(one, {}, p) == one);
  CHECK(sage_forward(Matrix::Zero(4, 3), {{0, 1}, {2, 3}}, p).isZero(0));

  Matrix two(2, 3);
  two << 1, 2, 3, 10, 20, 30;
  const auto H = sage_forward(two, {{0, 1}}, p);
  CHECK(H.row(0) == two.row(0));
  CHECK(H.row(1) == two.row(0) + two.row(1));

  CHECK_THROWS_AS(sage_forward(Matrix::Zero(2, 4), {}, p), Error);
  CHECK_THROWS_AS(sage_forward(two, {{0, 5}}, p), Error);
}

TEST_CASE("zero fixed point") {
  const auto tensors = fixtures::desk_tensors();
  REQUIRE(!tensors.empty());
  const ModelDims dims;
  for (const auto& t : tensors) CHECK(embed_tensor(t, ModelParams::zeros(dims)).isZero(0));
  GraphTensor z = tensors.front();
  z.X.setZero();
  z.Y.setZero();
  CHECK(embed_tensor(z, ModelParams::xavier(dims, 4)).isZero(0));
}

TEST_CASE("embedding is invariant to node relabeling and duplication") {
  const auto params = ModelParams::xavier(ModelDims{}, 11);
  for (const auto& t : fixtures::desk_tensors()) {
    const auto z = embed_tensor(t, params);
    CHECK((embed_tensor(fixtures::permuted(t, 5), params) - z).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((embed_tensor(doubled(t), params) - z).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("xavier init is deterministic and bounded") {
  const ModelDims dims;
  const auto a = ModelParams::xavier(dims, 3);
  const auto b = ModelParams::xavier(dims, 3);
  CHECK(a.W_self == b.W_self);
  CHECK(a.W_lin == b.W_lin);
  CHECK_FALSE(a.W_self == ModelParams::xavier(dims, 4).W_self);
  const double bound = std::sqrt(6.0 / (dims.d_cat() + dims.d_hidden));
  CHECK(a.W_self.cwiseAbs().maxCoeff() <= bound);
  CHECK(a.b.isZero(0));
  CHECK(a.all_finite());
}

TEST_CASE("train/test split") {
  std::vector<std::string> many;
  for (int i = 0; i < 716; ++i) many.push_back(addr(static_cast<std::uint64_t>(i + 1)));
  const auto [tr, te] = split_train_test(many, 0.7, 1);
  CHECK(tr.size() == 501);
  CHECK(te.size() == 215);
  std::set<std::string> all(tr.begin(), tr.end());
  all.insert(te.begin(), te.end());
  CHECK(all.size() == 716);

  std::vector<std::string> ten(many.begin(), many.begin() + 10);
  const auto a = split_train_test(ten, 0.7, 9);
  CHECK(a.first.size() == 7);
  CHECK(a.second.size() == 3);
  CHECK(split_train_test(ten, 0.7, 9) == a);
  CHECK_THROWS_AS(split_train_test(ten, 1.0, 9), Error);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const auto tensors = fixtures::desk_tensors();
  const auto init = ModelParams::xavier(ModelDims{}, 2);
  TrainConfig cfg;
  cfg.lr = 0;
  cfg.epochs = 3;
  const auto out = train(tensors, {}, init, cfg);
  CHECK(out.W_self == init.W_self);
  CHECK(out.W_neigh == init.W_neigh);
  CHECK(out.W_lin == init.W_lin);
  CHECK(out.W_dec == init.W_dec);
}

TEST_CASE("training on one flow lowers the loss") {
  const auto tensors = fixtures::desk_tensors();
  const std::vector<GraphTensor> one{tensors.front()};
  TrainConfig cfg;
  cfg.epochs = 5;
  TrainReport report;
  train(one, {}, ModelParams::xavier(ModelDims{}, 2), cfg, &report);
  REQUIRE(report.loss.size() >= 2);
  CHECK(report.loss.back() < report.loss.front());
  for (std::size_t i = 1; i < report.loss.size(); ++i) CHECK(report.loss[i] <= report.loss[i - 1]);
}

TEST_CASE("analytic gradient matches central differences") {
  auto tensors = fixtures::desk_tensors();
  tensors.resize(3);
  const auto masks = make_masks(tensors, 0.3, 5);
  auto params = ModelParams::xavier(ModelDims{}, 8);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0, 0.1);
  for (auto* p : params.parameters()) *p += nd(rng);
  ModelParams grad = ModelParams::zeros(params.dims);
  reconstruction_loss(tensors, masks, params, &grad);
  const auto ps = params.parameters();
  const auto gs = grad.parameters();
  REQUIRE(ps.size() == params.parameter_count());
  double worst = 0;
  const double h = 1e-6;
  for (std::size_t i = 0; i < ps.size(); i += 7) {
    const double keep = *ps[i];
    *ps[i] = keep + h;
    const double up = reconstruction_loss(tensors, masks, params);
    *ps[i] = keep - h;
    const double down = reconstruction_loss(tensors, masks, params);
    *ps[i] = keep;
    const double numeric = (up - down) / (2 * h);
    const double analytic = *gs[i];
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic) / scale);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("embedding and training are independent of thread count") {
  const auto tensors = fixtures::desk_tensors(2);
  const auto params = ModelParams::xavier(ModelDims{}, 6);
  CHECK(embed_batch(tensors, params, 1) == embed_batch(tensors, params, 4));
  const auto masks = make_masks(tensors, 0.15, 1);
  CHECK(reconstruction_loss(tensors, masks, params, nullptr, 1) ==
        reconstruction_loss(tensors, masks, params, nullptr, 4));
  TrainConfig cfg;
  cfg.epochs = 3;
  const auto a = train(tensors, {}, params, cfg);
  cfg.threads = 4;
  const auto b = train(tensors, {}, params, cfg);
  CHECK(a.W_self == b.W_self);
  CHECK(a.W_dec == b.W_dec);
}

TEST_CASE("edge dropout keeps nodes and drops edges") {
  const auto t = fixtures::desk_tensors().front();
  CHECK(drop_edges(t, 0.0, 1).I == t.I);
  const auto none = drop_edges(t, 1.0, 1);
  CHECK(none.I.empty());
  CHECK(none.X == t.X);
  const double sim = embedding_similarity({t}, ModelParams::xavier(ModelDims{}, 1), 0.0, 1);
  CHECK(sim == doctest::Approx(1.0));
}

TEST_CASE("embeddings file round trip") {
  const auto dir = fixtures::temp_dir("emb_rt");
  Matrix E(2, 3);
  E << 0.1, -2.5, 1e-17, 3.0, 4.25, -0.0001;
  write_embeddings(dir / "e.csv", {addr(1), addr(2)}, E);
  std::vector<std::string> a;
  Matrix back;
  read_embeddings(dir / "e.csv", a, back);
  CHECK(a == std::vector<std::string>{addr(1), addr(2)});
  CHECK(back == E);
}
