#include <cmath>
#include <thread>

#include "chainflow/embed.hpp"
#include "chainflow/error.hpp"
#include "random.hpp"

namespace chainflow {

namespace {

struct FlowGrad {
  double loss_sum = 0;
  double count = 0;
  ModelParams g;
};

// Unscaled contribution of one tensor: squared error sum over masked entries
// and its gradient with G_rec = 2 (Rec - Xn) * M.
void flow_gradient(const GraphTensor& t, const Matrix& mask, const ModelParams& p,
                   FlowGrad& out, bool want_grad) {
  const Matrix Xn = layer_norm(t.X);
  const Matrix keep = Matrix::Ones(mask.rows(), mask.cols()) - mask;
  Matrix Xc(t.X.rows(), p.dims.d_cat());
  Xc << Xn.cwiseProduct(keep), edge_scatter_mean(t.Y, t.I, t.nodes());
  const Matrix Agg = neighbour_mean(Xc, t.I);
  Matrix H = Xc * p.W_self + Agg * p.W_neigh;
  H.rowwise() += p.b.transpose();
  const Matrix R = H.cwiseMax(0.0);
  Matrix O = R * p.W_lin;
  O.rowwise() += p.b_lin.transpose();
  Matrix Rec = O * p.W_dec;
  Rec.rowwise() += p.b_dec.transpose();
  const Matrix diff = (Rec - Xn).cwiseProduct(mask);

  out.loss_sum = diff.squaredNorm();
  out.count = mask.sum();
  if (!want_grad) return;

  const Matrix G_rec = 2.0 * diff;
  auto& g = out.g;
  g = ModelParams::zeros(p.dims);
  g.W_dec = O.transpose() * G_rec;
  g.b_dec = G_rec.colwise().sum().transpose();
  const Matrix G_O = G_rec * p.W_dec.transpose();
  g.W_lin = R.transpose() * G_O;
  g.b_lin = G_O.colwise().sum().transpose();
  const Matrix G_H = (G_O * p.W_lin.transpose()).cwiseProduct(
      (H.array() > 0.0).cast<double>().matrix());
  g.W_self = Xc.transpose() * G_H;
  g.W_neigh = Agg.transpose() * G_H;
  g.b = G_H.colwise().sum().transpose();
}

void axpy(ModelParams& y, double a, const ModelParams& x) {
  y.W_self += a * x.W_self;
  y.W_neigh += a * x.W_neigh;
  y.b += a * x.b;
  y.W_lin += a * x.W_lin;
  y.b_lin += a * x.b_lin;
  y.W_dec += a * x.W_dec;
  y.b_dec += a * x.b_dec;
}

template <typename Fn>
void parallel_items(std::size_t n, unsigned threads, Fn fn) {
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

}  // namespace

std::vector<Matrix> make_masks(const std::vector<GraphTensor>& tensors, double rate,
                               std::uint64_t seed) {
  std::vector<Matrix> masks;
  masks.reserve(tensors.size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    std::mt19937_64 rng(detail::mix_seed(seed, 1000 + i));
    Matrix m(tensors[i].X.rows(), tensors[i].X.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = detail::uniform01(rng) < rate;
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

double reconstruction_loss(const std::vector<GraphTensor>& tensors,
                           const std::vector<Matrix>& masks, const ModelParams& params,
                           ModelParams* grad, unsigned threads) {
  if (masks.size() != tensors.size()) {
    throw Error(ErrorKind::ShapeMismatch, "one mask per tensor required");
  }
  std::vector<FlowGrad> parts(tensors.size());
  parallel_items(tensors.size(), threads, [&](std::size_t i) {
    flow_gradient(tensors[i], masks[i], params, parts[i], grad != nullptr);
  });
  // Reduce in index order so the result does not depend on the thread count.
  double loss = 0, count = 0;
  for (const auto& p : parts) {
    loss += p.loss_sum;
    count += p.count;
  }
  if (grad) *grad = ModelParams::zeros(params.dims);
  if (count == 0) return 0.0;
  if (grad) {
    for (const auto& p : parts) axpy(*grad, 1.0 / count, p.g);
  }
  return loss / count;
}

GraphTensor drop_edges(const GraphTensor& t, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GraphTensor out;
  out.X = t.X;
  out.B = t.B;
  std::vector<Eigen::Index> kept;
  for (std::size_t m = 0; m < t.I.size(); ++m) {
    if (detail::uniform01(rng) >= p) {
      out.I.push_back(t.I[m]);
      kept.push_back(static_cast<Eigen::Index>(m));
    }
  }
  out.Y.resize(static_cast<Eigen::Index>(kept.size()), t.Y.cols());
  for (std::size_t k = 0; k < kept.size(); ++k) out.Y.row(static_cast<Eigen::Index>(k)) = t.Y.row(kept[k]);
  return out;
}

double embedding_similarity(const std::vector<GraphTensor>& tensors, const ModelParams& params,
                            double dropout, std::uint64_t seed, unsigned threads) {
  if (tensors.empty()) return 0.0;
  std::vector<double> sims(tensors.size());
  parallel_items(tensors.size(), threads, [&](std::size_t i) {
    const RowVector a = embed_tensor(tensors[i], params);
    const RowVector b =
        embed_tensor(drop_edges(tensors[i], dropout, detail::mix_seed(seed, 5000 + i)), params);
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) sims[i] = na == nb ? 1.0 : 0.0;
    else sims[i] = a.dot(b) / (na * nb);
  });
  double sum = 0;
  for (double s : sims) sum += s;
  return sum / static_cast<double>(sims.size());
}

ModelParams train(const std::vector<GraphTensor>& train_set,
                  const std::vector<GraphTensor>& test_set, ModelParams init,
                  const TrainConfig& config, TrainReport* report) {
  if (train_set.empty()) throw Error(ErrorKind::Config, "empty training set");
  const auto masks = make_masks(train_set, config.mask_rate, config.seed);
  ModelParams params = std::move(init);
  ModelParams grad;
  double loss = reconstruction_loss(train_set, masks, params, &grad, config.threads);
  if (!std::isfinite(loss)) throw Error(ErrorKind::Divergence, "initial loss is not finite");

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (report) {
      report->loss.push_back(loss);
      if (!test_set.empty()) {
        report->validation.push_back(embedding_similarity(
            test_set, params, config.edge_dropout, config.seed, config.threads));
      }
    }
    double step = config.lr;
    bool any_finite = false;
    for (int attempt = 0; attempt <= config.max_backtracks; ++attempt, step *= 0.5) {
      ModelParams cand = params;
      axpy(cand, -step, grad);
      ModelParams cand_grad;
      const double cand_loss =
          reconstruction_loss(train_set, masks, cand, &cand_grad, config.threads);
      if (!std::isfinite(cand_loss) || !cand.all_finite()) continue;
      any_finite = true;
      if (cand_loss <= loss) {
        params = std::move(cand);
        grad = std::move(cand_grad);
        loss = cand_loss;
        break;
      }
    }
    if (!any_finite) {
      throw Error(ErrorKind::Divergence,
                  "loss became non-finite at epoch " + std::to_string(epoch));
    }
  }
  if (report) report->loss.push_back(loss);
  return params;
}

}  // namespace chainflow
