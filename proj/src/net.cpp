#include "ili/net.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "ili/rng.hpp"

namespace ili {

namespace {

std::vector<DenseMatrix*> tensor_list(ModelParams& p) {
  std::vector<DenseMatrix*> out;
  for_each_tensor(p, [&](DenseMatrix& t) { out.push_back(&t); });
  return out;
}

std::vector<const DenseMatrix*> tensor_list(const ModelParams& p) {
  std::vector<const DenseMatrix*> out;
  for_each_tensor(p, [&](const DenseMatrix& t) { out.push_back(&t); });
  return out;
}

ModelParams make_shapes(const NetDims& dims) {
  if (dims.dim_audio == 0 || dims.dim_visual == 0 || dims.hidden == 0 ||
      dims.classes == 0)
    throw std::invalid_argument("model dims must all be positive");
  ModelParams p;
  p.dims = dims;
  auto build_branch = [&](std::size_t in_dim) {
    BranchParams br;
    std::size_t cur = in_dim;
    for (int l = 0; l < 3; ++l) {
      Affine a;
      a.w = DenseMatrix(cur, dims.hidden);
      a.b = DenseMatrix(1, dims.hidden);
      br.hidden.push_back(std::move(a));
      cur = dims.hidden;
    }
    br.proj.w = DenseMatrix(cur, dims.classes);
    br.proj.b = DenseMatrix(1, dims.classes);
    return br;
  };
  p.audio = build_branch(dims.dim_audio);
  p.visual = build_branch(dims.dim_visual);
  auto attn = [&]() {
    AttentionParams a;
    a.wq = DenseMatrix(dims.classes, dims.classes);
    a.wk = DenseMatrix(dims.classes, dims.classes);
    a.wv = DenseMatrix(dims.classes, dims.classes);
    return a;
  };
  p.attn_audio = attn();
  p.attn_visual = attn();
  return p;
}

void add_rows_inplace(DenseMatrix& m, const DenseMatrix& bias) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* row = m.row_ptr(r);
    for (std::size_t c = 0; c < m.cols; ++c) row[c] += bias.data[c];
  }
}

DenseMatrix affine_forward(const DenseMatrix& x, const Affine& a) {
  DenseMatrix y = matmul(x, a.w);
  add_rows_inplace(y, a.b);
  return y;
}

// Accumulates dW, db and returns d_input for y = x w + b.
DenseMatrix affine_backward(const DenseMatrix& x, const Affine& a,
                            const DenseMatrix& d_y, Affine& grad) {
  DenseMatrix dw = matmul_ta(x, d_y);
  for (std::size_t i = 0; i < dw.data.size(); ++i) grad.w.data[i] += dw.data[i];
  for (std::size_t r = 0; r < d_y.rows; ++r) {
    const double* row = d_y.row_ptr(r);
    for (std::size_t c = 0; c < d_y.cols; ++c) grad.b.data[c] += row[c];
  }
  return matmul_tb(d_y, a.w);
}

DenseMatrix branch_forward(const BranchParams& br, const DenseMatrix& input,
                           double rate, bool train, Rng& rng,
                           BranchCache* cache) {
  if (cache) {
    cache->input = input;
    cache->act.clear();
    cache->mask.clear();
    cache->dropped.clear();
  }
  const bool use_dropout = train && rate > 0.0;
  const double keep = 1.0 - rate;
  DenseMatrix x = input;
  for (const Affine& layer : br.hidden) {
    DenseMatrix a = affine_forward(x, layer);
    for (double& v : a.data) v = std::tanh(v);
    if (cache) cache->act.push_back(a);
    if (use_dropout) {
      DenseMatrix mask(a.rows, a.cols);
      for (double& mv : mask.data)
        mv = rng.uniform() < rate ? 0.0 : 1.0 / keep;
      for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] *= mask.data[i];
      if (cache) cache->mask.push_back(std::move(mask));
    }
    if (cache) cache->dropped.push_back(a);
    x = std::move(a);
  }
  DenseMatrix logits = affine_forward(x, br.proj);
  if (cache) cache->logits = logits;
  return logits;
}

void branch_backward(const BranchParams& br, const BranchCache& cache,
                     const DenseMatrix& d_logits, BranchParams& grad) {
  DenseMatrix dx =
      affine_backward(cache.dropped.back(), br.proj, d_logits, grad.proj);
  for (int l = 2; l >= 0; --l) {
    if (!cache.mask.empty())
      for (std::size_t i = 0; i < dx.data.size(); ++i)
        dx.data[i] *= cache.mask[static_cast<std::size_t>(l)].data[i];
    const DenseMatrix& a = cache.act[static_cast<std::size_t>(l)];
    for (std::size_t i = 0; i < dx.data.size(); ++i)
      dx.data[i] *= 1.0 - a.data[i] * a.data[i];
    const DenseMatrix& x =
        l == 0 ? cache.input : cache.dropped[static_cast<std::size_t>(l - 1)];
    dx = affine_backward(x, br.hidden[static_cast<std::size_t>(l)], dx,
                         grad.hidden[static_cast<std::size_t>(l)]);
  }
}

void softmax_rows(DenseMatrix& m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* row = m.row_ptr(r);
    double mx = row[0];
    for (std::size_t c = 1; c < m.cols; ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (std::size_t c = 0; c < m.cols; ++c) row[c] /= sum;
  }
}

// Accumulates attention parameter grads plus dL/dz contributions for both
// the query-side and key/value-side embeddings.
void attn_backward(const AttentionParams& attn, const AttnCache& cache,
                   const DenseMatrix& z_q, const DenseMatrix& z_kv,
                   const DenseMatrix& d_out, AttentionParams& grad,
                   DenseMatrix& d_zq, DenseMatrix& d_zkv) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(z_q.cols));
  for (std::size_t i = 0; i < d_out.data.size(); ++i)
    d_zq.data[i] += d_out.data[i];  // residual path
  DenseMatrix d_weights = matmul_tb(d_out, cache.v);
  DenseMatrix d_v = matmul_ta(cache.weights, d_out);
  DenseMatrix d_s(d_weights.rows, d_weights.cols);
  for (std::size_t r = 0; r < d_weights.rows; ++r) {
    const double* wrow = cache.weights.row_ptr(r);
    const double* grow = d_weights.row_ptr(r);
    double dot = 0.0;
    for (std::size_t c = 0; c < d_weights.cols; ++c) dot += wrow[c] * grow[c];
    double* srow = d_s.row_ptr(r);
    for (std::size_t c = 0; c < d_weights.cols; ++c)
      srow[c] = wrow[c] * (grow[c] - dot) * scale;
  }
  DenseMatrix d_q = matmul(d_s, cache.k);
  DenseMatrix d_k = matmul_ta(d_s, cache.q);
  DenseMatrix t = matmul_ta(z_q, d_q);
  for (std::size_t i = 0; i < t.data.size(); ++i) grad.wq.data[i] += t.data[i];
  t = matmul_tb(d_q, attn.wq);
  for (std::size_t i = 0; i < t.data.size(); ++i) d_zq.data[i] += t.data[i];
  t = matmul_ta(z_kv, d_k);
  for (std::size_t i = 0; i < t.data.size(); ++i) grad.wk.data[i] += t.data[i];
  t = matmul_tb(d_k, attn.wk);
  for (std::size_t i = 0; i < t.data.size(); ++i) d_zkv.data[i] += t.data[i];
  t = matmul_ta(z_kv, d_v);
  for (std::size_t i = 0; i < t.data.size(); ++i) grad.wv.data[i] += t.data[i];
  t = matmul_tb(d_v, attn.wv);
  for (std::size_t i = 0; i < t.data.size(); ++i) d_zkv.data[i] += t.data[i];
}

void check_shape(const DenseMatrix& a, const DenseMatrix& b,
                 const char* what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string("shape mismatch: ") + what);
}

constexpr char kParamMagic[8] = {'I', 'L', 'I', 'P', 'A', 'R', 'M', '1'};

}  // namespace

ModelParams init_params(const NetDims& dims, std::uint64_t seed) {
  ModelParams p = make_shapes(dims);
  Rng rng(seed);
  auto xavier = [&](DenseMatrix& t) {
    double bound = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
    for (double& v : t.data) v = (2.0 * rng.uniform() - 1.0) * bound;
  };
  auto init_branch = [&](BranchParams& br) {
    for (Affine& l : br.hidden) {
      xavier(l.w);
      l.b.fill(0.0);
    }
    xavier(br.proj.w);
    br.proj.b.fill(0.0);
  };
  init_branch(p.audio);
  init_branch(p.visual);
  for (AttentionParams* a : {&p.attn_audio, &p.attn_visual}) {
    xavier(a->wq);
    xavier(a->wk);
    xavier(a->wv);
  }
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = make_shapes(p.dims);
  for_each_tensor(z, [](DenseMatrix& t) { t.fill(0.0); });
  return z;
}

std::size_t param_count(const ModelParams& p) {
  std::size_t n = 0;
  for_each_tensor(p, [&](const DenseMatrix& t) { n += t.data.size(); });
  return n;
}

DenseMatrix cross_attention_proxy(const DenseMatrix& z_q,
                                  const DenseMatrix& z_kv,
                                  const AttentionParams& attn,
                                  AttnCache* cache) {
  if (z_q.rows == 0) throw std::invalid_argument("attention on empty batch");
  if (z_q.cols != z_kv.cols || z_q.rows != z_kv.rows)
    throw std::invalid_argument("attention operand shape mismatch");
  DenseMatrix q = matmul(z_q, attn.wq);
  DenseMatrix k = matmul(z_kv, attn.wk);
  DenseMatrix v = matmul(z_kv, attn.wv);
  DenseMatrix s = matmul_tb(q, k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(z_q.cols));
  for (double& x : s.data) x *= scale;
  softmax_rows(s);
  DenseMatrix out = matmul(s, v);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += z_q.data[i];
  if (cache) {
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->weights = std::move(s);
  }
  return out;
}

ForwardOutput forward(const ModelParams& params, const DenseMatrix& audio,
                      const DenseMatrix& visual, double dropout_rate,
                      std::uint64_t dropout_seed, bool train,
                      ForwardCache* cache) {
  if (audio.rows == 0) throw std::invalid_argument("forward on empty batch");
  if (audio.rows != visual.rows)
    throw std::invalid_argument("audio/visual batch size mismatch");
  if (audio.cols != params.dims.dim_audio ||
      visual.cols != params.dims.dim_visual)
    throw std::invalid_argument("forward input dimension mismatch");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw std::invalid_argument("dropout rate must lie in [0,1)");

  Rng rng(dropout_seed);
  ForwardOutput out;
  out.logits_audio =
      branch_forward(params.audio, audio, dropout_rate, train, rng,
                     cache ? &cache->audio : nullptr);
  out.logits_visual =
      branch_forward(params.visual, visual, dropout_rate, train, rng,
                     cache ? &cache->visual : nullptr);
  out.soft_audio = out.logits_audio;
  for (double& v : out.soft_audio.data) v = 1.0 / (1.0 + std::exp(-v));
  out.soft_visual = out.logits_visual;
  for (double& v : out.soft_visual.data) v = 1.0 / (1.0 + std::exp(-v));
  out.proxy_audio =
      cross_attention_proxy(out.logits_audio, out.logits_visual,
                            params.attn_audio, cache ? &cache->attn_audio : nullptr);
  out.proxy_visual =
      cross_attention_proxy(out.logits_visual, out.logits_audio,
                            params.attn_visual, cache ? &cache->attn_visual : nullptr);
  return out;
}

ModelParams backprop(const ModelParams& params, const ForwardCache& cache,
                     const DenseMatrix& d_logits_audio,
                     const DenseMatrix& d_logits_visual,
                     const DenseMatrix& d_proxy_audio,
                     const DenseMatrix& d_proxy_visual) {
  check_shape(d_logits_audio, cache.audio.logits, "d_logits_audio");
  check_shape(d_logits_visual, cache.visual.logits, "d_logits_visual");
  check_shape(d_proxy_audio, cache.audio.logits, "d_proxy_audio");
  check_shape(d_proxy_visual, cache.visual.logits, "d_proxy_visual");

  ModelParams grads = zeros_like(params);
  DenseMatrix d_za = d_logits_audio;
  DenseMatrix d_zv = d_logits_visual;
  attn_backward(params.attn_audio, cache.attn_audio, cache.audio.logits,
                cache.visual.logits, d_proxy_audio, grads.attn_audio, d_za,
                d_zv);
  attn_backward(params.attn_visual, cache.attn_visual, cache.visual.logits,
                cache.audio.logits, d_proxy_visual, grads.attn_visual, d_zv,
                d_za);
  branch_backward(params.audio, cache.audio, d_za, grads.audio);
  branch_backward(params.visual, cache.visual, d_zv, grads.visual);
  return grads;
}

OptimizerState init_optimizer(const ModelParams& params) {
  OptimizerState st;
  st.m = zeros_like(params);
  st.v = zeros_like(params);
  st.step = 0;
  return st;
}

void adam_step(ModelParams* params, const ModelParams& grads,
               OptimizerState* state, double lr, double beta1, double beta2,
               double eps) {
  auto pt = tensor_list(*params);
  auto gt = tensor_list(grads);
  auto mt = tensor_list(state->m);
  auto vt = tensor_list(state->v);
  if (pt.size() != gt.size())
    throw std::invalid_argument("adam_step: tensor count mismatch");
  state->step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state->step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state->step));
  for (std::size_t t = 0; t < pt.size(); ++t) {
    DenseMatrix& p = *pt[t];
    const DenseMatrix& g = *gt[t];
    DenseMatrix& m = *mt[t];
    DenseMatrix& v = *vt[t];
    if (!p.same_shape(g))
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      m.data[i] = beta1 * m.data[i] + (1.0 - beta1) * g.data[i];
      v.data[i] = beta2 * v.data[i] + (1.0 - beta2) * g.data[i] * g.data[i];
      double mhat = m.data[i] / bc1;
      double vhat = v.data[i] / bc2;
      p.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

void write_params(std::ostream& out, const ModelParams& p) {
  out.write(kParamMagic, sizeof(kParamMagic));
  std::uint64_t dims[4] = {p.dims.dim_audio, p.dims.dim_visual, p.dims.hidden,
                           p.dims.classes};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  for (const DenseMatrix* t : tensor_list(p)) {
    std::uint64_t shape[2] = {t->rows, t->cols};
    out.write(reinterpret_cast<const char*>(shape), sizeof(shape));
    out.write(reinterpret_cast<const char*>(t->data.data()),
              static_cast<std::streamsize>(t->data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("write_params: stream failure");
}

ModelParams read_params(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kParamMagic, sizeof(magic)) != 0)
    throw std::runtime_error("read_params: bad magic");
  std::uint64_t dims[4];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw std::runtime_error("read_params: truncated header");
  NetDims nd;
  nd.dim_audio = dims[0];
  nd.dim_visual = dims[1];
  nd.hidden = dims[2];
  nd.classes = dims[3];
  ModelParams p = make_shapes(nd);
  for (DenseMatrix* t : tensor_list(p)) {
    std::uint64_t shape[2];
    in.read(reinterpret_cast<char*>(shape), sizeof(shape));
    if (!in || shape[0] != t->rows || shape[1] != t->cols)
      throw std::runtime_error("read_params: tensor shape mismatch");
    in.read(reinterpret_cast<char*>(t->data.data()),
            static_cast<std::streamsize>(t->data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("read_params: truncated tensor data");
  }
  return p;
}

}  // namespace ili
