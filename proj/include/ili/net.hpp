#ifndef ILI_NET_HPP_
#define ILI_NET_HPP_

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ili/matrix.hpp"

namespace ili {

// y = x w + b with b broadcast over rows (stored 1 x out).
struct Affine {
  DenseMatrix w;
  DenseMatrix b;
};

// Three affine->tanh->dropout blocks followed by a linear projection to the
// class logits.  Logits double as the embedding.
struct BranchParams {
  std::vector<Affine> hidden;
  Affine proj;
};

// Per-direction cross-attention projections, all C x C.
struct AttentionParams {
  DenseMatrix wq;
  DenseMatrix wk;
  DenseMatrix wv;
};

struct NetDims {
  std::size_t dim_audio = 0;
  std::size_t dim_visual = 0;
  std::size_t hidden = 1024;
  std::size_t classes = 0;
};

struct ModelParams {
  NetDims dims;
  BranchParams audio;
  BranchParams visual;
  AttentionParams attn_audio;   // audio queries attend visual keys/values
  AttentionParams attn_visual;  // visual queries attend audio keys/values
};

// Applies f to every parameter tensor in a fixed order (audio branch, visual
// branch, audio-side attention, visual-side attention).
template <typename Params, typename F>
void for_each_tensor(Params& p, F&& f) {
  auto branch = [&](auto& br) {
    for (auto& layer : br.hidden) {
      f(layer.w);
      f(layer.b);
    }
    f(br.proj.w);
    f(br.proj.b);
  };
  branch(p.audio);
  branch(p.visual);
  f(p.attn_audio.wq);
  f(p.attn_audio.wk);
  f(p.attn_audio.wv);
  f(p.attn_visual.wq);
  f(p.attn_visual.wk);
  f(p.attn_visual.wv);
}

ModelParams init_params(const NetDims& dims, std::uint64_t seed);
ModelParams zeros_like(const ModelParams& p);
std::size_t param_count(const ModelParams& p);

struct ForwardOutput {
  DenseMatrix logits_audio;  // B x C, also the audio embedding
  DenseMatrix logits_visual;
  DenseMatrix soft_audio;  // sigmoid(logits)
  DenseMatrix soft_visual;
  DenseMatrix proxy_audio;  // cross-attention proxies, B x C
  DenseMatrix proxy_visual;
};

struct BranchCache {
  DenseMatrix input;
  std::vector<DenseMatrix> act;      // post-tanh per layer
  std::vector<DenseMatrix> mask;     // inverted dropout masks (empty in eval)
  std::vector<DenseMatrix> dropped;  // post-dropout per layer
  DenseMatrix logits;
};

struct AttnCache {
  DenseMatrix q, k, v;
  DenseMatrix weights;  // row-softmax of qk^T / sqrt(C)
};

struct ForwardCache {
  BranchCache audio;
  BranchCache visual;
  AttnCache attn_audio;
  AttnCache attn_visual;
};

// dropout_seed is consumed in a fixed order (audio layers then visual), so
// equal seeds give identical masks.  Eval mode (train=false) skips dropout.
ForwardOutput forward(const ModelParams& params, const DenseMatrix& audio,
                      const DenseMatrix& visual, double dropout_rate,
                      std::uint64_t dropout_seed, bool train,
                      ForwardCache* cache = nullptr);

// residual = z_q + softmax(z_q Wq (z_kv Wk)^T / sqrt(C)) z_kv Wv
DenseMatrix cross_attention_proxy(const DenseMatrix& z_q,
                                  const DenseMatrix& z_kv,
                                  const AttentionParams& attn,
                                  AttnCache* cache = nullptr);

// Reverse-mode pass: given loss gradients w.r.t. the logits and the proxies,
// returns the full parameter gradient.  The cache must come from a forward
// call with the same params and inputs.
ModelParams backprop(const ModelParams& params, const ForwardCache& cache,
                     const DenseMatrix& d_logits_audio,
                     const DenseMatrix& d_logits_visual,
                     const DenseMatrix& d_proxy_audio,
                     const DenseMatrix& d_proxy_visual);

struct OptimizerState {
  ModelParams m;
  ModelParams v;
  std::uint64_t step = 0;
};

OptimizerState init_optimizer(const ModelParams& params);

// Bias-corrected Adam; one call = one step.
void adam_step(ModelParams* params, const ModelParams& grads,
               OptimizerState* state, double lr, double beta1, double beta2,
               double eps);

void write_params(std::ostream& out, const ModelParams& p);
ModelParams read_params(std::istream& in);

}  // namespace ili

#endif  // ILI_NET_HPP_
