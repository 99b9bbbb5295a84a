// Direction-selection network: per-obstacle encoder, average-pooled global
// context, target encoder and a per-obstacle head producing three logits
// (left, right, backward). Inputs are expressed in the robot frame.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vocbf/cbf.hpp"
#include "vocbf/clf.hpp"
#include "vocbf/geometry.hpp"
#include "vocbf/miqp.hpp"

namespace vocbf {

inline constexpr int kObstacleFeatures = 5;  // local position (2), local relative velocity (2), combined radius
inline constexpr int kTargetFeatures = 3;    // local goal position (2), goal distance
inline constexpr int kNumDirections = 3;

struct DecisionFeatures {
  std::vector<std::array<double, kObstacleFeatures>> obstacles;
  std::array<double, kTargetFeatures> target{};

  bool finite() const {
    for (const auto& o : obstacles) {
      for (double v : o) {
        if (!std::isfinite(v)) return false;
      }
    }
    return std::all_of(target.begin(), target.end(), [](double v) { return std::isfinite(v); });
  }
};

/// Features of the neighbours of one robot. Velocities are relative to the
/// robot center velocity; everything is rotated into the heading frame.
inline DecisionFeatures decision_features(const RobotState& s, const RobotGeometry& g, const GoalSpec& goal,
                                          const std::vector<Neighbor>& neighbors) {
  DecisionFeatures f;
  const Vec2 vc = center_velocity(s, g);
  for (const auto& n : neighbors) {
    const Vec2 p = to_local_frame(s, g, n.disk.position);
    const Vec2 v = to_local_direction(s, n.disk.velocity - vc);
    f.obstacles.push_back({p.x(), p.y(), v.x(), v.y(), combined_radius(g, n.radius)});
  }
  const Vec2 t = to_local_frame(s, g, goal.center());
  f.target = {t.x(), t.y(), t.norm()};
  return f;
}

struct LabeledSample {
  DecisionFeatures features;
  std::vector<int> labels;  // Direction per obstacle
};

struct DenseLayer {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;

  DenseLayer() = default;
  DenseLayer(int out, int in) : W(Eigen::MatrixXd::Zero(out, in)), b(Eigen::VectorXd::Zero(out)) {}

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const { return (W * x).colwise() + b; }
};

struct NetGradients;

// tanh written through exp; vectorizes where Eigen's tanh does not
inline Eigen::MatrixXd activation(const Eigen::MatrixXd& x) {
  return 1.0 - 2.0 / ((2.0 * x.array()).exp() + 1.0);
}
inline Eigen::MatrixXf activation_f(const Eigen::MatrixXf& x) {
  return 1.0f - 2.0f / ((2.0f * x.array()).exp() + 1.0f);
}

class DecisionNet {
 public:
  // layer order: obstacle encoder (2), global, target, head (2), output
  enum Layer : int { Enc1 = 0, Enc2, Global, Target, Head1, Head2, Out, kNumLayers };

  DecisionNet() : DecisionNet(64) {}

  explicit DecisionNet(int width, int seed = -1) : width_(width) {
    if (width < 1) throw std::invalid_argument("decision net: width must be >= 1");
    const int shapes[kNumLayers][2] = {{width, kObstacleFeatures}, {width, width},        {width, width},
                                       {width, kTargetFeatures},   {width, 3 * width},    {width, width},
                                       {kNumDirections, width}};
    for (int i = 0; i < kNumLayers; ++i) layers_[i] = DenseLayer(shapes[i][0], shapes[i][1]);
    obstacle_scale_.setOnes(kObstacleFeatures);
    target_scale_.setOnes(kTargetFeatures);
    if (seed >= 0) {
      std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
      for (auto& l : layers_) {
        const double lim = std::sqrt(6.0 / static_cast<double>(l.W.rows() + l.W.cols()));
        std::uniform_real_distribution<double> u(-lim, lim);
        for (Eigen::Index c = 0; c < l.W.cols(); ++c) {
          for (Eigen::Index r = 0; r < l.W.rows(); ++r) l.W(r, c) = u(rng);
        }
      }
    }
    prepare_inference();
  }

  int width() const { return width_; }
  DenseLayer& layer(int i) {
    fast_ready_ = false;
    return layers_.at(static_cast<size_t>(i));
  }
  const DenseLayer& layer(int i) const { return layers_.at(static_cast<size_t>(i)); }
  Eigen::VectorXd& obstacle_scale() { return obstacle_scale_; }
  Eigen::VectorXd& target_scale() { return target_scale_; }
  const Eigen::VectorXd& obstacle_scale() const { return obstacle_scale_; }
  const Eigen::VectorXd& target_scale() const { return target_scale_; }

  /// Forward pass cache for `m` obstacles in each of `b` samples; columns are
  /// sample-major (sample k, obstacle j at column k * m + j).
  struct Cache {
    int m = 0;
    int b = 0;
    Eigen::MatrixXd xo, xt, a1, e, pool, g, t, hin, h1, h2, logits, prob;
  };

  Cache forward(const std::vector<const DecisionFeatures*>& batch) const {
    Cache c;
    c.b = static_cast<int>(batch.size());
    if (c.b == 0) throw std::invalid_argument("decision net: empty batch");
    c.m = static_cast<int>(batch.front()->obstacles.size());
    const int cols = c.m * c.b;
    c.xo.resize(kObstacleFeatures, cols);
    c.xt.resize(kTargetFeatures, c.b);
    for (int k = 0; k < c.b; ++k) {
      const DecisionFeatures& f = *batch[static_cast<size_t>(k)];
      if (static_cast<int>(f.obstacles.size()) != c.m) {
        throw std::invalid_argument("decision net: samples in a batch must share the obstacle count");
      }
      for (int j = 0; j < c.m; ++j) {
        for (int i = 0; i < kObstacleFeatures; ++i) {
          c.xo(i, k * c.m + j) = f.obstacles[static_cast<size_t>(j)][static_cast<size_t>(i)] / obstacle_scale_(i);
        }
      }
      for (int i = 0; i < kTargetFeatures; ++i) c.xt(i, k) = f.target[static_cast<size_t>(i)] / target_scale_(i);
    }
    c.a1 = activation(layers_[Enc1].apply(c.xo));
    c.e = activation(layers_[Enc2].apply(c.a1));
    c.pool = Eigen::MatrixXd::Zero(width_, c.b);
    for (int k = 0; k < c.b; ++k) {
      if (c.m > 0) c.pool.col(k) = c.e.middleCols(k * c.m, c.m).rowwise().mean();
    }
    c.g = activation(layers_[Global].apply(c.pool));
    c.t = activation(layers_[Target].apply(c.xt));
    c.hin.resize(3 * width_, cols);
    for (int k = 0; k < c.b; ++k) {
      for (int j = 0; j < c.m; ++j) {
        const int col = k * c.m + j;
        c.hin.col(col) << c.e.col(col), c.g.col(k), c.t.col(k);
      }
    }
    c.h1 = activation(layers_[Head1].apply(c.hin));
    c.h2 = activation(layers_[Head2].apply(c.h1));
    c.logits = layers_[Out].apply(c.h2);
    c.prob.resize(kNumDirections, cols);
    for (int col = 0; col < cols; ++col) {
      const Eigen::VectorXd z = c.logits.col(col).array() - c.logits.col(col).maxCoeff();
      const Eigen::VectorXd ez = z.array().exp();
      c.prob.col(col) = ez / ez.sum();
    }
    return c;
  }

  /// Per-obstacle probability triples for one sample. Runs in single precision
  /// on a snapshot taken by prepare_inference(); after any edit through the
  /// mutable accessors it falls back to forward() until prepared again.
  std::vector<std::array<double, kNumDirections>> probabilities(const DecisionFeatures& f) const {
    const size_t m = f.obstacles.size();
    std::vector<std::array<double, kNumDirections>> out(m);
    if (m == 0) return out;
    if (!fast_ready_) {
      const Cache c = forward({&f});
      for (size_t j = 0; j < m; ++j) {
        for (int d = 0; d < kNumDirections; ++d) out[j][static_cast<size_t>(d)] = c.prob(d, static_cast<Eigen::Index>(j));
      }
      return out;
    }
    const int w = width_;
    const auto& L = fast_;
    Eigen::MatrixXf xo(kObstacleFeatures, static_cast<Eigen::Index>(m));
    for (size_t j = 0; j < m; ++j) {
      for (int i = 0; i < kObstacleFeatures; ++i) {
        xo(i, static_cast<Eigen::Index>(j)) = static_cast<float>(f.obstacles[j][static_cast<size_t>(i)] / obstacle_scale_(i));
      }
    }
    Eigen::VectorXf xt(kTargetFeatures);
    for (int i = 0; i < kTargetFeatures; ++i) xt(i) = static_cast<float>(f.target[static_cast<size_t>(i)] / target_scale_(i));
    const Eigen::MatrixXf a1 = activation_f((L[Enc1].W * xo).colwise() + L[Enc1].b);
    const Eigen::MatrixXf e = activation_f((L[Enc2].W * a1).colwise() + L[Enc2].b);
    const Eigen::VectorXf pool = e.rowwise().mean();
    const Eigen::VectorXf gv = activation_f(L[Global].W * pool + L[Global].b);
    const Eigen::VectorXf tv = activation_f(L[Target].W * xt + L[Target].b);
    const auto& W1 = L[Head1].W;
    const Eigen::VectorXf shared = W1.middleCols(w, w) * gv + W1.rightCols(w) * tv + L[Head1].b;
    const Eigen::MatrixXf h1 = activation_f((W1.leftCols(w) * e).colwise() + shared);
    const Eigen::MatrixXf h2 = activation_f((L[Head2].W * h1).colwise() + L[Head2].b);
    const Eigen::MatrixXf logits = (L[Out].W * h2).colwise() + L[Out].b;
    for (size_t j = 0; j < m; ++j) {
      const auto col = logits.col(static_cast<Eigen::Index>(j));
      const double mx = col.maxCoeff();
      double z = 0.0;
      for (int d = 0; d < kNumDirections; ++d) z += std::exp(col(d) - mx);
      for (int d = 0; d < kNumDirections; ++d) out[j][static_cast<size_t>(d)] = std::exp(col(d) - mx) / z;
    }
    return out;
  }

  /// Snapshot the weights for probabilities(). Called by the constructor, load() and train().
  void prepare_inference() {
    for (int i = 0; i < kNumLayers; ++i) {
      fast_[i].W = layers_[i].W.cast<float>();
      fast_[i].b = layers_[i].b.cast<float>();
    }
    fast_ready_ = true;
  }
  bool inference_prepared() const { return fast_ready_; }

  /// Mean cross-entropy over all obstacles of the batch; fills `grad` when given.
  double loss(const std::vector<const LabeledSample*>& batch, NetGradients* grad) const;

  void save(std::ostream& os) const;
  static DecisionNet load(std::istream& is);
  void save_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write weights file " + path);
    save(os);
    if (!os) throw std::runtime_error("failed writing weights file " + path);
  }
  static DecisionNet load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read weights file " + path);
    return load(is);
  }

 private:
  int width_;
  std::array<DenseLayer, kNumLayers> layers_;
  Eigen::VectorXd obstacle_scale_;
  Eigen::VectorXd target_scale_;
  struct FloatLayer {
    Eigen::MatrixXf W;
    Eigen::VectorXf b;
  };
  std::array<FloatLayer, kNumLayers> fast_;
  bool fast_ready_ = false;
};

struct NetGradients {
  std::array<DenseLayer, DecisionNet::kNumLayers> layers;

  explicit NetGradients(const DecisionNet& net) {
    for (int i = 0; i < DecisionNet::kNumLayers; ++i) {
      layers[static_cast<size_t>(i)] = DenseLayer(static_cast<int>(net.layer(i).W.rows()),
                                                  static_cast<int>(net.layer(i).W.cols()));
    }
  }
};

inline double DecisionNet::loss(const std::vector<const LabeledSample*>& batch, NetGradients* grad) const {
  std::vector<const DecisionFeatures*> feats;
  feats.reserve(batch.size());
  for (const auto* s : batch) feats.push_back(&s->features);
  const Cache c = forward(feats);
  const int cols = c.m * c.b;
  if (cols == 0) return 0.0;
  double total = 0.0;
  Eigen::MatrixXd dlogits = c.prob;
  for (int k = 0; k < c.b; ++k) {
    const LabeledSample& s = *batch[static_cast<size_t>(k)];
    if (static_cast<int>(s.labels.size()) != c.m) throw std::invalid_argument("decision net: label count mismatch");
    for (int j = 0; j < c.m; ++j) {
      const int lab = s.labels[static_cast<size_t>(j)];
      if (lab < 0 || lab >= kNumDirections) throw std::invalid_argument("decision net: label out of range");
      const int col = k * c.m + j;
      total -= std::log(std::max(c.prob(lab, col), 1e-300));
      dlogits(lab, col) -= 1.0;
    }
  }
  const double inv = 1.0 / static_cast<double>(cols);
  if (!grad) return total * inv;
  dlogits *= inv;

  auto accumulate = [&](int layer, const Eigen::MatrixXd& delta, const Eigen::MatrixXd& input) {
    grad->layers[static_cast<size_t>(layer)].W.noalias() += delta * input.transpose();
    grad->layers[static_cast<size_t>(layer)].b += delta.rowwise().sum();
  };
  auto tanh_back = [](const Eigen::MatrixXd& upstream, const Eigen::MatrixXd& act) {
    return Eigen::MatrixXd(upstream.array() * (1.0 - act.array().square()));
  };

  accumulate(Out, dlogits, c.h2);
  const Eigen::MatrixXd d2 = tanh_back(layers_[Out].W.transpose() * dlogits, c.h2);
  accumulate(Head2, d2, c.h1);
  const Eigen::MatrixXd d1 = tanh_back(layers_[Head2].W.transpose() * d2, c.h1);
  accumulate(Head1, d1, c.hin);
  const Eigen::MatrixXd dhin = layers_[Head1].W.transpose() * d1;

  Eigen::MatrixXd de = dhin.topRows(width_);
  Eigen::MatrixXd dg = Eigen::MatrixXd::Zero(width_, c.b);
  Eigen::MatrixXd dt = Eigen::MatrixXd::Zero(width_, c.b);
  for (int k = 0; k < c.b; ++k) {
    dg.col(k) = dhin.block(width_, k * c.m, width_, c.m).rowwise().sum();
    dt.col(k) = dhin.block(2 * width_, k * c.m, width_, c.m).rowwise().sum();
  }
  const Eigen::MatrixXd dt_pre = tanh_back(dt, c.t);
  accumulate(Target, dt_pre, c.xt);
  const Eigen::MatrixXd dg_pre = tanh_back(dg, c.g);
  accumulate(Global, dg_pre, c.pool);
  const Eigen::MatrixXd dpool = layers_[Global].W.transpose() * dg_pre;
  for (int k = 0; k < c.b; ++k) {
    de.middleCols(k * c.m, c.m).colwise() += dpool.col(k) / static_cast<double>(c.m);
  }
  const Eigen::MatrixXd de_pre = tanh_back(de, c.e);
  accumulate(Enc2, de_pre, c.a1);
  const Eigen::MatrixXd da1 = tanh_back(layers_[Enc2].W.transpose() * de_pre, c.a1);
  accumulate(Enc1, da1, c.xo);
  return total * inv;
}

namespace detail {

// little-endian encoding regardless of host byte order
inline void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, sizeof v);
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    const int c = is.get();
    if (c == EOF) throw std::runtime_error("weights file truncated");
    v |= static_cast<std::uint32_t>(c & 0xFF) << (8 * i);
  }
  return v;
}

inline double get_f64(std::istream& is) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    const int c = is.get();
    if (c == EOF) throw std::runtime_error("weights file truncated");
    v |= static_cast<std::uint64_t>(c & 0xFF) << (8 * i);
  }
  double d;
  std::memcpy(&d, &v, sizeof d);
  return d;
}

inline constexpr char kWeightsMagic[4] = {'V', 'O', 'D', 'N'};
inline constexpr std::uint32_t kWeightsVersion = 1;

}  // namespace detail

// Layout: magic "VODN", u32 version, u32 width, u32 layer count, input scales
// (5 + 3 f64), then per layer u32 rows, u32 cols, W row-major, b.
inline void DecisionNet::save(std::ostream& os) const {
  os.write(detail::kWeightsMagic, 4);
  detail::put_u32(os, detail::kWeightsVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(width_));
  detail::put_u32(os, kNumLayers);
  for (Eigen::Index i = 0; i < kObstacleFeatures; ++i) detail::put_f64(os, obstacle_scale_(i));
  for (Eigen::Index i = 0; i < kTargetFeatures; ++i) detail::put_f64(os, target_scale_(i));
  for (const auto& l : layers_) {
    detail::put_u32(os, static_cast<std::uint32_t>(l.W.rows()));
    detail::put_u32(os, static_cast<std::uint32_t>(l.W.cols()));
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) detail::put_f64(os, l.W(r, c));
    }
    for (Eigen::Index r = 0; r < l.b.size(); ++r) detail::put_f64(os, l.b(r));
  }
}

inline DecisionNet DecisionNet::load(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, detail::kWeightsMagic, 4) != 0) throw std::runtime_error("not a decision net weights file");
  if (detail::get_u32(is) != detail::kWeightsVersion) throw std::runtime_error("unsupported weights file version");
  const auto width = static_cast<int>(detail::get_u32(is));
  if (width < 1 || width > 4096) throw std::runtime_error("weights file: bad width");
  if (detail::get_u32(is) != kNumLayers) throw std::runtime_error("weights file: bad layer count");
  DecisionNet net(width);
  for (Eigen::Index i = 0; i < kObstacleFeatures; ++i) net.obstacle_scale_(i) = detail::get_f64(is);
  for (Eigen::Index i = 0; i < kTargetFeatures; ++i) net.target_scale_(i) = detail::get_f64(is);
  for (auto& l : net.layers_) {
    const auto rows = detail::get_u32(is);
    const auto cols = detail::get_u32(is);
    if (rows != l.W.rows() || cols != l.W.cols()) throw std::runtime_error("weights file: layer shape mismatch");
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = detail::get_f64(is);
    }
    for (Eigen::Index r = 0; r < l.b.size(); ++r) l.b(r) = detail::get_f64(is);
  }
  net.prepare_inference();
  return net;
}

/// Argmax per obstacle; exact ties go to the lowest index.
inline DirectionAssignment decide_from_probabilities(const std::vector<std::array<double, kNumDirections>>& probs) {
  DirectionAssignment a;
  a.reserve(probs.size());
  for (const auto& p : probs) {
    int best = 0;
    for (int d = 1; d < kNumDirections; ++d) {
      if (p[static_cast<size_t>(d)] > p[static_cast<size_t>(best)]) best = d;
    }
    a.push_back(static_cast<Direction>(best));
  }
  return a;
}

/// The argmax assignment first, then every combination of swapping the least
/// confident obstacles (top probability below `confidence`, at most
/// `max_uncertain` of them) to their second choice.
inline std::vector<DirectionAssignment> candidate_assignments(
    const std::vector<std::array<double, kNumDirections>>& probs, double confidence, size_t max_uncertain) {
  const DirectionAssignment first = decide_from_probabilities(probs);
  std::vector<std::pair<double, size_t>> unsure;
  std::vector<Direction> second(probs.size());
  for (size_t j = 0; j < probs.size(); ++j) {
    const auto top = static_cast<size_t>(first[j]);
    size_t alt = top == 0 ? 1 : 0;
    for (size_t d = 0; d < static_cast<size_t>(kNumDirections); ++d) {
      if (d != top && probs[j][d] > probs[j][alt]) alt = d;
    }
    second[j] = static_cast<Direction>(alt);
    if (probs[j][top] < confidence) unsure.push_back({probs[j][top], j});
  }
  std::stable_sort(unsure.begin(), unsure.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  if (unsure.size() > max_uncertain) unsure.resize(max_uncertain);
  std::vector<DirectionAssignment> out;
  for (size_t mask = 0; mask < (size_t{1} << unsure.size()); ++mask) {
    DirectionAssignment a = first;
    for (size_t i = 0; i < unsure.size(); ++i) {
      if (mask >> i & 1u) a[unsure[i].second] = second[unsure[i].second];
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline DirectionAssignment net_decide(const DecisionNet& net, const DecisionFeatures& f) {
  return decide_from_probabilities(net.probabilities(f));
}

struct TrainOptions {
  int epochs = 200;
  double lr = 1e-3;
  double momentum = 0.9;
  int batch_size = 32;
  int seed = 1;
  int width = 64;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean training loss per epoch
  double baseline_loss = std::log(3.0);
};

/// Per-feature input scales: root mean square over the dataset, floored.
inline void fit_input_scales(DecisionNet& net, const std::vector<LabeledSample>& data) {
  Eigen::VectorXd so = Eigen::VectorXd::Zero(kObstacleFeatures);
  Eigen::VectorXd st = Eigen::VectorXd::Zero(kTargetFeatures);
  double no = 0;
  for (const auto& s : data) {
    for (const auto& o : s.features.obstacles) {
      for (int i = 0; i < kObstacleFeatures; ++i) so(i) += o[static_cast<size_t>(i)] * o[static_cast<size_t>(i)];
      no += 1;
    }
    for (int i = 0; i < kTargetFeatures; ++i) {
      st(i) += s.features.target[static_cast<size_t>(i)] * s.features.target[static_cast<size_t>(i)];
    }
  }
  net.obstacle_scale() = (so / std::max(1.0, no)).cwiseSqrt().cwiseMax(1e-3);
  net.target_scale() = (st / std::max<double>(1.0, static_cast<double>(data.size()))).cwiseSqrt().cwiseMax(1e-3);
}

/// Mini-batch gradient descent with momentum. Batches never mix obstacle
/// counts; their order is shuffled each epoch with a seeded generator.
inline DecisionNet train(const std::vector<LabeledSample>& data, const TrainOptions& opt, TrainReport* report = nullptr) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (opt.epochs < 1 || opt.batch_size < 1 || !(opt.lr > 0)) throw std::invalid_argument("train: bad options");
  DecisionNet net(opt.width, opt.seed);
  fit_input_scales(net, data);

  std::map<size_t, std::vector<const LabeledSample*>> by_count;
  for (const auto& s : data) {
    if (s.features.obstacles.empty()) continue;
    if (s.labels.size() != s.features.obstacles.size()) throw std::invalid_argument("train: label count mismatch");
    by_count[s.features.obstacles.size()].push_back(&s);
  }
  if (by_count.empty()) throw std::invalid_argument("train: no sample has obstacles");

  NetGradients velocity(net);
  std::mt19937_64 rng(static_cast<std::uint64_t>(opt.seed) ^ 0x9E3779B97F4A7C15ull);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::vector<std::vector<const LabeledSample*>> batches;
    for (auto& [count, samples] : by_count) {
      std::shuffle(samples.begin(), samples.end(), rng);
      for (size_t i = 0; i < samples.size(); i += static_cast<size_t>(opt.batch_size)) {
        const size_t end = std::min(samples.size(), i + static_cast<size_t>(opt.batch_size));
        batches.emplace_back(samples.begin() + static_cast<std::ptrdiff_t>(i),
                             samples.begin() + static_cast<std::ptrdiff_t>(end));
      }
    }
    std::shuffle(batches.begin(), batches.end(), rng);
    double sum = 0.0;
    double weight = 0.0;
    for (const auto& batch : batches) {
      NetGradients g(net);
      const double l = net.loss(batch, &g);
      const double w = static_cast<double>(batch.size() * batch.front()->labels.size());
      sum += l * w;
      weight += w;
      for (int i = 0; i < DecisionNet::kNumLayers; ++i) {
        auto& v = velocity.layers[static_cast<size_t>(i)];
        v.W = opt.momentum * v.W - opt.lr * g.layers[static_cast<size_t>(i)].W;
        v.b = opt.momentum * v.b - opt.lr * g.layers[static_cast<size_t>(i)].b;
        net.layer(i).W += v.W;
        net.layer(i).b += v.b;
      }
    }
    if (report) report->epoch_loss.push_back(sum / weight);
  }
  net.prepare_inference();
  return net;
}

// ---------------------------------------------------------------------------
// Dataset text format: a header line, then one record per line
//   <m> <target x> <target y> <distance> m x (5 features) m x <label>

inline constexpr const char* kDatasetHeader = "# vocbf-decision-dataset v1";

inline void write_dataset(std::ostream& os, const std::vector<LabeledSample>& data) {
  os << kDatasetHeader << '\n';
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << ' ' << buf;
  };
  for (const auto& s : data) {
    os << s.features.obstacles.size();
    for (double v : s.features.target) num(v);
    for (const auto& o : s.features.obstacles) {
      for (double v : o) num(v);
    }
    for (int l : s.labels) os << ' ' << l;
    os << '\n';
  }
}

inline std::vector<LabeledSample> read_dataset(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kDatasetHeader) throw std::runtime_error("dataset: missing header");
  std::vector<LabeledSample> out;
  size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    size_t m = 0;
    LabeledSample s;
    bool ok = static_cast<bool>(ss >> m) && m <= 64;
    for (auto& v : s.features.target) ok = ok && static_cast<bool>(ss >> v);
    s.features.obstacles.resize(m);
    for (auto& o : s.features.obstacles) {
      for (auto& v : o) ok = ok && static_cast<bool>(ss >> v);
    }
    s.labels.resize(m);
    for (auto& l : s.labels) ok = ok && static_cast<bool>(ss >> l) && l >= 0 && l < kNumDirections;
    std::string extra;
    if (!ok || (ss >> extra) || !s.features.finite()) {
      throw std::runtime_error("dataset: malformed record at line " + std::to_string(lineno));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace vocbf
