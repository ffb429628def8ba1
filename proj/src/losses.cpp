#include "ili/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ili {

namespace {

void check_one_hot(const DenseMatrix& y) {
  for (std::size_t r = 0; r < y.rows; ++r) {
    const double* row = y.row_ptr(r);
    std::size_t ones = 0;
    for (std::size_t c = 0; c < y.cols; ++c) {
      if (row[c] == 1.0)
        ++ones;
      else if (row[c] != 0.0)
        throw std::invalid_argument("targets must be one-hot (0/1 entries)");
    }
    if (ones != 1)
      throw std::invalid_argument("targets must have exactly one 1 per row");
  }
}

double sq_dist(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void validate_metric_args(const DenseMatrix& pa, const DenseMatrix& pv,
                          const std::vector<int>& labels,
                          const std::vector<int>& neg_index) {
  if (!pa.same_shape(pv))
    throw std::invalid_argument("proxy matrices must share a shape");
  if (labels.size() != pa.rows)
    throw std::invalid_argument("label count must match batch size");
  if (neg_index.size() != pa.rows)
    throw std::invalid_argument("neg_index count must match batch size");
  const int b = static_cast<int>(pa.rows);
  for (std::size_t i = 0; i < neg_index.size(); ++i) {
    int n = neg_index[i];
    if (n < -1 || n >= b)
      throw std::invalid_argument("neg_index out of range");
    if (n >= 0 && labels[static_cast<std::size_t>(n)] == labels[i])
      throw std::invalid_argument("negative shares the anchor label");
  }
}

// Cheapest different-label gallery row, lowest index on ties; -1 if none.
int hardest_negative(const DenseMatrix& pa, const DenseMatrix& pv,
                     const std::vector<int>& labels, std::size_t i) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < pv.rows; ++j) {
    if (labels[j] == labels[i]) continue;
    double d = sq_dist(pa.row_ptr(i), pv.row_ptr(j), pa.cols);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

void validate_lir_args(const DenseMatrix& za, const DenseMatrix& zv,
                       const IliGraph& graph,
                       const std::vector<EdgePairs>& pairs) {
  if (za.rows != zv.rows || za.cols != zv.cols)
    throw std::invalid_argument("embedding matrices must share a shape");
  if (graph.nodes() != 2 * za.cols)
    throw std::invalid_argument("graph size must be twice the class count");
  const int nodes = static_cast<int>(graph.nodes());
  const int b = static_cast<int>(za.rows);
  for (const EdgePairs& e : pairs) {
    if (e.from_node < 0 || e.from_node >= nodes || e.to_node < 0 ||
        e.to_node >= nodes)
      throw std::invalid_argument("edge endpoints out of graph range");
    for (const auto& pr : e.pairs)
      if (pr.first < 0 || pr.first >= b || pr.second < 0 || pr.second >= b)
        throw std::invalid_argument("pair row index out of batch range");
  }
}

}  // namespace

MetricVariant metric_variant_from_string(const std::string& name) {
  if (name == "triplet") return MetricVariant::kTriplet;
  if (name == "hard_triplet") return MetricVariant::kHardTriplet;
  if (name == "contrastive") return MetricVariant::kContrastive;
  if (name == "n_pair") return MetricVariant::kNPair;
  throw std::invalid_argument("unknown metric variant: " + name);
}

std::string metric_variant_to_string(MetricVariant v) {
  switch (v) {
    case MetricVariant::kTriplet:
      return "triplet";
    case MetricVariant::kHardTriplet:
      return "hard_triplet";
    case MetricVariant::kContrastive:
      return "contrastive";
    case MetricVariant::kNPair:
      return "n_pair";
  }
  return "triplet";
}

double av_sal(const DenseMatrix& soft_audio, const DenseMatrix& soft_visual,
              const DenseMatrix& targets) {
  if (!soft_audio.same_shape(targets) || !soft_visual.same_shape(targets))
    throw std::invalid_argument("av_sal shape mismatch");
  if (targets.rows == 0) throw std::invalid_argument("av_sal on empty batch");
  check_one_hot(targets);
  double total = 0.0;
  for (std::size_t i = 0; i < targets.data.size(); ++i) {
    double da = soft_audio.data[i] - targets.data[i];
    double dv = soft_visual.data[i] - targets.data[i];
    total += da * da + dv * dv;
  }
  return total / static_cast<double>(targets.rows);
}

void av_sal_grad(const DenseMatrix& soft_audio, const DenseMatrix& soft_visual,
                 const DenseMatrix& targets, DenseMatrix* d_logits_audio,
                 DenseMatrix* d_logits_visual) {
  const double inv_b = 1.0 / static_cast<double>(targets.rows);
  for (std::size_t i = 0; i < targets.data.size(); ++i) {
    double sa = soft_audio.data[i];
    double sv = soft_visual.data[i];
    d_logits_audio->data[i] +=
        2.0 * inv_b * (sa - targets.data[i]) * sa * (1.0 - sa);
    d_logits_visual->data[i] +=
        2.0 * inv_b * (sv - targets.data[i]) * sv * (1.0 - sv);
  }
}

double proxy_triplet(const DenseMatrix& anchors, const DenseMatrix& positives,
                     const DenseMatrix& negatives, double margin) {
  if (!anchors.same_shape(positives) || !anchors.same_shape(negatives))
    throw std::invalid_argument("proxy_triplet shape mismatch");
  if (anchors.rows == 0)
    throw std::invalid_argument("proxy_triplet on empty batch");
  double total = 0.0;
  for (std::size_t r = 0; r < anchors.rows; ++r) {
    double dp = sq_dist(anchors.row_ptr(r), positives.row_ptr(r), anchors.cols);
    double dn = sq_dist(anchors.row_ptr(r), negatives.row_ptr(r), anchors.cols);
    total += std::max(0.0, dp - dn + margin);
  }
  return total / static_cast<double>(anchors.rows);
}

double metric_loss(MetricVariant variant, const DenseMatrix& proxy_audio,
                   const DenseMatrix& proxy_visual,
                   const std::vector<int>& labels,
                   const std::vector<int>& neg_index, double margin) {
  validate_metric_args(proxy_audio, proxy_visual, labels, neg_index);
  const std::size_t b = proxy_audio.rows;
  const std::size_t c = proxy_audio.cols;

  if (variant == MetricVariant::kTriplet ||
      variant == MetricVariant::kHardTriplet) {
    double total = 0.0;
    std::size_t valid = 0;
    for (std::size_t i = 0; i < b; ++i) {
      int n = variant == MetricVariant::kTriplet
                  ? neg_index[i]
                  : hardest_negative(proxy_audio, proxy_visual, labels, i);
      if (n < 0) continue;
      double dp =
          sq_dist(proxy_audio.row_ptr(i), proxy_visual.row_ptr(i), c);
      double dn = sq_dist(proxy_audio.row_ptr(i),
                          proxy_visual.row_ptr(static_cast<std::size_t>(n)), c);
      total += std::max(0.0, dp - dn + margin);
      ++valid;
    }
    return valid == 0 ? 0.0 : total / static_cast<double>(valid);
  }

  if (variant == MetricVariant::kContrastive) {
    double pos = 0.0;
    for (std::size_t i = 0; i < b; ++i)
      pos += sq_dist(proxy_audio.row_ptr(i), proxy_visual.row_ptr(i), c);
    pos /= static_cast<double>(b);
    double neg = 0.0;
    std::size_t valid = 0;
    for (std::size_t i = 0; i < b; ++i) {
      int n = neg_index[i];
      if (n < 0) continue;
      double d = std::sqrt(sq_dist(
          proxy_audio.row_ptr(i), proxy_visual.row_ptr(static_cast<std::size_t>(n)), c));
      double h = std::max(0.0, margin - d);
      neg += h * h;
      ++valid;
    }
    if (valid > 0) neg /= static_cast<double>(valid);
    return pos + neg;
  }

  // n-pair: mean_i log(1 + sum_{j: label differs} exp(a_i.v_j - a_i.v_i))
  double total = 0.0;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < b; ++i) {
    const double* a = proxy_audio.row_ptr(i);
    const double* vi = proxy_visual.row_ptr(i);
    double base = 0.0;
    for (std::size_t k = 0; k < c; ++k) base += a[k] * vi[k];
    double mx = 0.0;
    bool any = false;
    std::vector<double> scores;
    for (std::size_t j = 0; j < b; ++j) {
      if (labels[j] == labels[i]) continue;
      const double* vj = proxy_visual.row_ptr(j);
      double s = 0.0;
      for (std::size_t k = 0; k < c; ++k) s += a[k] * vj[k];
      s -= base;
      scores.push_back(s);
      mx = any ? std::max(mx, s) : std::max(0.0, s);
      any = true;
    }
    if (!any) continue;
    double acc = std::exp(-mx);
    for (double s : scores) acc += std::exp(s - mx);
    total += mx + std::log(acc);
    ++valid;
  }
  return valid == 0 ? 0.0 : total / static_cast<double>(valid);
}

void metric_loss_grad(MetricVariant variant, const DenseMatrix& proxy_audio,
                      const DenseMatrix& proxy_visual,
                      const std::vector<int>& labels,
                      const std::vector<int>& neg_index, double margin,
                      DenseMatrix* d_proxy_audio,
                      DenseMatrix* d_proxy_visual) {
  validate_metric_args(proxy_audio, proxy_visual, labels, neg_index);
  const std::size_t b = proxy_audio.rows;
  const std::size_t c = proxy_audio.cols;

  if (variant == MetricVariant::kTriplet ||
      variant == MetricVariant::kHardTriplet) {
    std::vector<int> chosen(b, -1);
    std::size_t valid = 0;
    for (std::size_t i = 0; i < b; ++i) {
      chosen[i] = variant == MetricVariant::kTriplet
                      ? neg_index[i]
                      : hardest_negative(proxy_audio, proxy_visual, labels, i);
      if (chosen[i] >= 0) ++valid;
    }
    if (valid == 0) return;
    const double coef = 1.0 / static_cast<double>(valid);
    for (std::size_t i = 0; i < b; ++i) {
      int n = chosen[i];
      if (n < 0) continue;
      const double* a = proxy_audio.row_ptr(i);
      const double* p = proxy_visual.row_ptr(i);
      const double* g = proxy_visual.row_ptr(static_cast<std::size_t>(n));
      double dp = sq_dist(a, p, c);
      double dn = sq_dist(a, g, c);
      if (dp - dn + margin <= 0.0) continue;
      double* da = d_proxy_audio->row_ptr(i);
      double* dpv = d_proxy_visual->row_ptr(i);
      double* dnv = d_proxy_visual->row_ptr(static_cast<std::size_t>(n));
      for (std::size_t k = 0; k < c; ++k) {
        da[k] += coef * 2.0 * (g[k] - p[k]);
        dpv[k] += coef * -2.0 * (a[k] - p[k]);
        dnv[k] += coef * 2.0 * (a[k] - g[k]);
      }
    }
    return;
  }

  if (variant == MetricVariant::kContrastive) {
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
      const double* a = proxy_audio.row_ptr(i);
      const double* v = proxy_visual.row_ptr(i);
      double* da = d_proxy_audio->row_ptr(i);
      double* dv = d_proxy_visual->row_ptr(i);
      for (std::size_t k = 0; k < c; ++k) {
        double diff = a[k] - v[k];
        da[k] += 2.0 * inv_b * diff;
        dv[k] -= 2.0 * inv_b * diff;
      }
    }
    std::size_t valid = 0;
    for (std::size_t i = 0; i < b; ++i)
      if (neg_index[i] >= 0) ++valid;
    if (valid == 0) return;
    const double coef = 1.0 / static_cast<double>(valid);
    for (std::size_t i = 0; i < b; ++i) {
      int n = neg_index[i];
      if (n < 0) continue;
      const double* a = proxy_audio.row_ptr(i);
      const double* g = proxy_visual.row_ptr(static_cast<std::size_t>(n));
      double d = std::sqrt(sq_dist(a, g, c));
      if (d <= 0.0 || margin - d <= 0.0) continue;
      double* da = d_proxy_audio->row_ptr(i);
      double* dg = d_proxy_visual->row_ptr(static_cast<std::size_t>(n));
      double f = coef * -2.0 * (margin - d) / d;
      for (std::size_t k = 0; k < c; ++k) {
        double diff = a[k] - g[k];
        da[k] += f * diff;
        dg[k] -= f * diff;
      }
    }
    return;
  }

  // n-pair
  std::size_t valid = 0;
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j)
      if (labels[j] != labels[i]) {
        ++valid;
        break;
      }
  if (valid == 0) return;
  const double coef = 1.0 / static_cast<double>(valid);
  for (std::size_t i = 0; i < b; ++i) {
    const double* a = proxy_audio.row_ptr(i);
    const double* vi = proxy_visual.row_ptr(i);
    double base = 0.0;
    for (std::size_t k = 0; k < c; ++k) base += a[k] * vi[k];
    std::vector<std::size_t> js;
    std::vector<double> scores;
    double mx = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      if (labels[j] == labels[i]) continue;
      const double* vj = proxy_visual.row_ptr(j);
      double s = 0.0;
      for (std::size_t k = 0; k < c; ++k) s += a[k] * vj[k];
      s -= base;
      js.push_back(j);
      scores.push_back(s);
      mx = js.size() == 1 ? std::max(0.0, s) : std::max(mx, s);
    }
    if (js.empty()) continue;
    double denom = std::exp(-mx);
    for (double s : scores) denom += std::exp(s - mx);
    double* da = d_proxy_audio->row_ptr(i);
    double* dvi = d_proxy_visual->row_ptr(i);
    double psum = 0.0;
    for (std::size_t t = 0; t < js.size(); ++t) {
      double p = std::exp(scores[t] - mx) / denom;
      psum += p;
      const double* vj = proxy_visual.row_ptr(js[t]);
      double* dvj = d_proxy_visual->row_ptr(js[t]);
      for (std::size_t k = 0; k < c; ++k) {
        da[k] += coef * p * (vj[k] - vi[k]);
        dvj[k] += coef * p * a[k];
      }
    }
    for (std::size_t k = 0; k < c; ++k) dvi[k] -= coef * psum * a[k];
  }
}

double lir(const DenseMatrix& z_audio, const DenseMatrix& z_visual,
           const IliGraph& graph, const std::vector<EdgePairs>& pairs,
           const ModalityWeights& weights) {
  validate_lir_args(z_audio, z_visual, graph, pairs);
  const int classes = static_cast<int>(z_audio.cols);
  double total = 0.0;
  for (const EdgePairs& e : pairs) {
    if (e.pairs.empty()) continue;
    int fm = e.from_node >= classes;
    int tm = e.to_node >= classes;
    const DenseMatrix& src = fm ? z_visual : z_audio;
    const DenseMatrix& dst = tm ? z_visual : z_audio;
    double mean = 0.0;
    for (const auto& pr : e.pairs)
      mean += std::sqrt(sq_dist(src.row_ptr(static_cast<std::size_t>(pr.first)),
                                dst.row_ptr(static_cast<std::size_t>(pr.second)),
                                z_audio.cols));
    mean /= static_cast<double>(e.pairs.size());
    total += weights.at(fm, tm) *
             graph.adjacency.at(static_cast<std::size_t>(e.from_node),
                                static_cast<std::size_t>(e.to_node)) *
             mean;
  }
  return total;
}

void lir_grad(const DenseMatrix& z_audio, const DenseMatrix& z_visual,
              const IliGraph& graph, const std::vector<EdgePairs>& pairs,
              const ModalityWeights& weights, double scale,
              DenseMatrix* d_z_audio, DenseMatrix* d_z_visual) {
  validate_lir_args(z_audio, z_visual, graph, pairs);
  const int classes = static_cast<int>(z_audio.cols);
  const std::size_t c = z_audio.cols;
  for (const EdgePairs& e : pairs) {
    if (e.pairs.empty()) continue;
    int fm = e.from_node >= classes;
    int tm = e.to_node >= classes;
    const DenseMatrix& src = fm ? z_visual : z_audio;
    const DenseMatrix& dst = tm ? z_visual : z_audio;
    DenseMatrix& d_src = fm ? *d_z_visual : *d_z_audio;
    DenseMatrix& d_dst = tm ? *d_z_visual : *d_z_audio;
    double coef = scale * weights.at(fm, tm) *
                  graph.adjacency.at(static_cast<std::size_t>(e.from_node),
                                     static_cast<std::size_t>(e.to_node)) /
                  static_cast<double>(e.pairs.size());
    for (const auto& pr : e.pairs) {
      const double* s = src.row_ptr(static_cast<std::size_t>(pr.first));
      const double* d = dst.row_ptr(static_cast<std::size_t>(pr.second));
      double dist = std::sqrt(sq_dist(s, d, c));
      if (dist <= 0.0) continue;
      double* gs = d_src.row_ptr(static_cast<std::size_t>(pr.first));
      double* gd = d_dst.row_ptr(static_cast<std::size_t>(pr.second));
      for (std::size_t k = 0; k < c; ++k) {
        double g = coef * (s[k] - d[k]) / dist;
        gs[k] += g;
        gd[k] -= g;
      }
    }
  }
}

LossBreakdown teacher_loss(const ForwardOutput& out, const DenseMatrix& targets,
                           const std::vector<int>& labels,
                           const std::vector<int>& neg_index,
                           const LossConfig& cfg) {
  LossBreakdown b;
  b.avsal = av_sal(out.soft_audio, out.soft_visual, targets);
  b.metric = metric_loss(cfg.variant, out.proxy_audio, out.proxy_visual,
                         labels, neg_index, cfg.margin);
  b.lir = 0.0;
  b.total = b.avsal + b.metric;
  return b;
}

LossBreakdown student_loss(const ForwardOutput& out, const DenseMatrix& targets,
                           const std::vector<int>& labels,
                           const std::vector<int>& neg_index,
                           const IliGraph& graph,
                           const std::vector<EdgePairs>& pairs,
                           const LossConfig& cfg) {
  LossBreakdown b = teacher_loss(out, targets, labels, neg_index, cfg);
  b.lir = lir(out.logits_audio, out.logits_visual, graph, pairs, cfg.weights);
  b.total += cfg.gamma * b.lir;
  return b;
}

}  // namespace ili
