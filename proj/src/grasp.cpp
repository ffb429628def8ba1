#include "ili/grasp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "ili/linalg.hpp"
#include "ili/rng.hpp"

namespace ili {

namespace {

constexpr int kMaxNodes = 64;  // parent sets are stored as bitmasks

std::uint64_t bit(int i) { return std::uint64_t{1} << i; }

// Shared scoring engine: one Gram matrix, per-(node, set) memoization for
// both raw scores and grow-shrink results.  All search paths go through the
// same engine so equal parent sets always reproduce equal floats.
class BicScorer {
 public:
  BicScorer(const DenseMatrix& data, double penalty_mult)
      : p_(static_cast<int>(data.cols)),
        n_(static_cast<double>(data.rows)),
        log_n_(std::log(static_cast<double>(data.rows))),
        penalty_mult_(penalty_mult),
        gram_(matmul_ta(data, data)),
        score_cache_(data.cols),
        gs_cache_(data.cols) {
    if (p_ > kMaxNodes)
      throw std::invalid_argument("bic scorer: at most 64 columns supported");
  }

  int p() const { return p_; }
  double n() const { return n_; }

  double node_score(int node, std::uint64_t parents) {
    auto& cache = score_cache_[static_cast<std::size_t>(node)];
    auto it = cache.find(parents);
    if (it != cache.end()) return it->second;
    double s = raw_score(node, parents);
    cache.emplace(parents, s);
    return s;
  }

  struct GsResult {
    std::uint64_t parents;
    double score;
  };

  // Grow then shrink over the predecessor set, strictly improving steps
  // only; among equal candidates the lowest index wins.
  GsResult grow_shrink(int node, std::uint64_t predecessors) {
    auto& cache = gs_cache_[static_cast<std::size_t>(node)];
    auto it = cache.find(predecessors);
    if (it != cache.end()) return it->second;

    std::uint64_t cur = 0;
    double cur_score = node_score(node, cur);
    for (;;) {  // grow
      int best_c = -1;
      double best_score = cur_score;
      for (int c = 0; c < p_; ++c) {
        if (!(predecessors & bit(c)) || (cur & bit(c))) continue;
        double s = node_score(node, cur | bit(c));
        if (s < best_score) {
          best_score = s;
          best_c = c;
        }
      }
      if (best_c < 0) break;
      cur |= bit(best_c);
      cur_score = best_score;
    }
    for (;;) {  // shrink
      int best_c = -1;
      double best_score = cur_score;
      for (int c = 0; c < p_; ++c) {
        if (!(cur & bit(c))) continue;
        double s = node_score(node, cur & ~bit(c));
        if (s < best_score) {
          best_score = s;
          best_c = c;
        }
      }
      if (best_c < 0) break;
      cur &= ~bit(best_c);
      cur_score = best_score;
    }
    GsResult res{cur, cur_score};
    cache.emplace(predecessors, res);
    return res;
  }

 private:
  double raw_score(int node, std::uint64_t parents) {
    const int k = std::popcount(parents);
    double rss;
    if (k == 0) {
      rss = gram_.at(static_cast<std::size_t>(node),
                     static_cast<std::size_t>(node));
    } else {
      std::vector<int> idx;
      idx.reserve(static_cast<std::size_t>(k));
      for (int i = 0; i < p_; ++i)
        if (parents & bit(i)) idx.push_back(i);
      DenseMatrix sub(static_cast<std::size_t>(k), static_cast<std::size_t>(k));
      std::vector<double> g(static_cast<std::size_t>(k));
      for (int a = 0; a < k; ++a) {
        const auto ia = static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
        g[static_cast<std::size_t>(a)] =
            gram_.at(ia, static_cast<std::size_t>(node));
        for (int b = 0; b < k; ++b) {
          const auto ib =
              static_cast<std::size_t>(idx[static_cast<std::size_t>(b)]);
          sub.at(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) =
              gram_.at(ia, ib);
        }
      }
      std::vector<double> beta;
      solve_spd(sub, g, &beta);
      // RSS of the computed coefficients: y'y - 2 b'g + b'Gb
      double bg = 0.0;
      for (int a = 0; a < k; ++a)
        bg += beta[static_cast<std::size_t>(a)] * g[static_cast<std::size_t>(a)];
      double bgb = 0.0;
      for (int a = 0; a < k; ++a) {
        double s = 0.0;
        for (int b = 0; b < k; ++b)
          s += sub.at(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) *
               beta[static_cast<std::size_t>(b)];
        bgb += beta[static_cast<std::size_t>(a)] * s;
      }
      rss = gram_.at(static_cast<std::size_t>(node),
                     static_cast<std::size_t>(node)) -
            2.0 * bg + bgb;
    }
    if (rss < 1e-12) rss = 1e-12;  // near-deterministic relation
    return n_ * std::log(rss / n_) + k * log_n_ * penalty_mult_;
  }

  int p_;
  double n_;
  double log_n_;
  double penalty_mult_;
  DenseMatrix gram_;
  std::vector<std::unordered_map<std::uint64_t, double>> score_cache_;
  std::vector<std::unordered_map<std::uint64_t, GsResult>> gs_cache_;
};

std::uint64_t mask_of(const std::vector<int>& nodes, int p) {
  std::uint64_t m = 0;
  for (int v : nodes) {
    if (v < 0 || v >= p) throw std::invalid_argument("node index out of range");
    m |= bit(v);
  }
  return m;
}

std::vector<int> mask_to_vec(std::uint64_t m, int p) {
  std::vector<int> out;
  for (int i = 0; i < p; ++i)
    if (m & bit(i)) out.push_back(i);
  return out;
}

void check_permutation(const Ordering& ordering, int p) {
  if (static_cast<int>(ordering.permutation.size()) != p)
    throw std::invalid_argument("ordering length does not match column count");
  std::uint64_t seen = 0;
  for (int v : ordering.permutation) {
    if (v < 0 || v >= p || (seen & bit(v)))
      throw std::invalid_argument("ordering is not a permutation");
    seen |= bit(v);
  }
}

struct OrderingEval {
  double total = 0.0;
  int parent_count = 0;
  std::vector<std::uint64_t> parents_by_node;
};

// Evaluates one permutation through the scorer.  The total is accumulated in
// value-sorted order: it then depends only on the multiset of node scores, so
// permutations inducing the same parent sets compare exactly equal, and the
// comparison survives a relabeling of the columns.
OrderingEval eval_ordering(BicScorer& scorer, const std::vector<int>& perm) {
  const int p = scorer.p();
  OrderingEval ev;
  ev.parents_by_node.assign(static_cast<std::size_t>(p), 0);
  std::vector<double> scores(static_cast<std::size_t>(p), 0.0);
  std::uint64_t preds = 0;
  for (int pos = 0; pos < p; ++pos) {
    const int node = perm[static_cast<std::size_t>(pos)];
    auto gs = scorer.grow_shrink(node, preds);
    ev.parents_by_node[static_cast<std::size_t>(node)] = gs.parents;
    scores[static_cast<std::size_t>(pos)] = gs.score;
    ev.parent_count += std::popcount(gs.parents);
    preds |= bit(node);
  }
  std::sort(scores.begin(), scores.end());
  for (double s : scores) ev.total += s;
  return ev;
}

std::vector<int> apply_reinsertion(const std::vector<int>& perm, int src,
                                   int dst) {
  std::vector<int> out = perm;
  const int node = out[static_cast<std::size_t>(src)];
  out.erase(out.begin() + src);
  out.insert(out.begin() + dst, node);
  return out;
}

struct LocalOptimum {
  std::vector<int> perm;
  OrderingEval eval;
};

// Steepest-descent over the single-node reinsertion neighborhood.
LocalOptimum local_search(BicScorer& scorer, std::vector<int> perm) {
  const int p = scorer.p();
  OrderingEval cur = eval_ordering(scorer, perm);
  for (;;) {
    double best_total = cur.total;
    int best_parents = std::numeric_limits<int>::max();
    int best_src = -1, best_dst = -1;
    std::vector<int> best_perm;
    for (int src = 0; src < p; ++src) {
      for (int dst = 0; dst < p; ++dst) {
        if (dst == src) continue;
        std::vector<int> cand = apply_reinsertion(perm, src, dst);
        OrderingEval ev = eval_ordering(scorer, cand);
        if (ev.total >= cur.total) continue;  // strictly improving only
        bool better = ev.total < best_total ||
                      (ev.total == best_total &&
                       (ev.parent_count < best_parents ||
                        (ev.parent_count == best_parents && best_src < 0)));
        if (better) {
          best_total = ev.total;
          best_parents = ev.parent_count;
          best_src = src;
          best_dst = dst;
          best_perm = std::move(cand);
        }
      }
    }
    if (best_src < 0) break;
    perm = std::move(best_perm);
    cur = eval_ordering(scorer, perm);
  }
  return {std::move(perm), std::move(cur)};
}

}  // namespace

double bic_node_score(const DenseMatrix& data, int node,
                      const std::vector<int>& parents, double penalty_mult) {
  BicScorer scorer(data, penalty_mult);
  if (node < 0 || node >= scorer.p())
    throw std::invalid_argument("bic_node_score: node out of range");
  std::uint64_t mask = mask_of(parents, scorer.p());
  if (mask & bit(node))
    throw std::invalid_argument("bic_node_score: node cannot be its own parent");
  if (data.rows < parents.size() + 2)
    throw std::invalid_argument("bic_node_score: too few rows");
  return scorer.node_score(node, mask);
}

std::vector<int> grow_shrink_parents(const DenseMatrix& data, int node,
                                     const std::vector<int>& predecessors,
                                     double penalty_mult) {
  BicScorer scorer(data, penalty_mult);
  if (node < 0 || node >= scorer.p())
    throw std::invalid_argument("grow_shrink_parents: node out of range");
  std::uint64_t preds = mask_of(predecessors, scorer.p());
  if (preds & bit(node))
    throw std::invalid_argument(
        "grow_shrink_parents: node cannot be its own predecessor");
  return mask_to_vec(scorer.grow_shrink(node, preds).parents, scorer.p());
}

std::pair<double, ParentSets> score_ordering(const DenseMatrix& data,
                                             const Ordering& ordering,
                                             double penalty_mult) {
  BicScorer scorer(data, penalty_mult);
  check_permutation(ordering, scorer.p());
  OrderingEval ev = eval_ordering(scorer, ordering.permutation);
  ParentSets ps;
  ps.parents.resize(static_cast<std::size_t>(scorer.p()));
  for (int j = 0; j < scorer.p(); ++j)
    ps.parents[static_cast<std::size_t>(j)] =
        mask_to_vec(ev.parents_by_node[static_cast<std::size_t>(j)], scorer.p());
  return {ev.total, std::move(ps)};
}

SearchResult grasp_search(const DenseMatrix& data, std::size_t restarts,
                          std::uint64_t seed, double penalty_mult,
                          const Ordering* initial) {
  if (data.cols < 1) throw std::invalid_argument("grasp_search: empty data");
  if (data.rows <= data.cols + 2)
    throw std::invalid_argument("grasp_search: need more rows than cols + 2");
  BicScorer scorer(data, penalty_mult);
  const int p = scorer.p();
  if (initial) check_permutation(*initial, p);

  Rng rng(seed);
  LocalOptimum best;
  bool have_best = false;
  for (std::size_t start = 0; start <= restarts; ++start) {
    std::vector<int> init;
    if (start == 0) {
      if (initial) {
        init = initial->permutation;
      } else {
        init.resize(static_cast<std::size_t>(p));
        for (int i = 0; i < p; ++i) init[static_cast<std::size_t>(i)] = i;
      }
    } else {
      init = rng.permutation(p);
    }
    LocalOptimum opt = local_search(scorer, std::move(init));
    bool better = !have_best || opt.eval.total < best.eval.total ||
                  (opt.eval.total == best.eval.total &&
                   opt.eval.parent_count < best.eval.parent_count);
    if (better) {
      best = std::move(opt);
      have_best = true;
    }
  }

  SearchResult res;
  res.ordering.permutation = best.perm;
  res.total_score = best.eval.total;
  res.restarts_used = restarts + 1;
  res.parent_sets.parents.resize(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j)
    res.parent_sets.parents[static_cast<std::size_t>(j)] =
        mask_to_vec(best.eval.parents_by_node[static_cast<std::size_t>(j)], p);
  return res;
}

void write_search_result(const SearchResult& result,
                         const std::string& csv_path,
                         const std::string& sidecar_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot open for writing: " + csv_path);
  csv << "parent_index,child_index\n";
  for (std::size_t child = 0; child < result.parent_sets.parents.size();
       ++child)
    for (int parent : result.parent_sets.parents[child])
      csv << parent << ',' << child << '\n';

  std::ofstream side(sidecar_path);
  if (!side) throw std::runtime_error("cannot open for writing: " + sidecar_path);
  side << "total_score=" << format_double(result.total_score)
       << " permutation=";
  for (std::size_t i = 0; i < result.ordering.permutation.size(); ++i) {
    if (i) side << ' ';
    side << result.ordering.permutation[i];
  }
  side << '\n';
}

}  // namespace ili
