#include "ili/ili_graph.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ili/grasp.hpp"
#include "ili/linalg.hpp"

namespace ili {

std::vector<std::string> default_class_names(std::size_t num_classes) {
  std::vector<std::string> names;
  names.reserve(2 * num_classes);
  for (std::size_t c = 0; c < num_classes; ++c)
    names.push_back("class_" + std::to_string(c) + "_audio");
  for (std::size_t c = 0; c < num_classes; ++c)
    names.push_back("class_" + std::to_string(c) + "_visual");
  return names;
}

IliGraph infer_ili(const DenseMatrix& logits,
                   const std::vector<std::string>& class_names,
                   double lambda_reg, std::size_t restarts, std::uint64_t seed,
                   const Ordering* initial) {
  const std::size_t p = logits.cols;
  if (p == 0) throw std::invalid_argument("infer_ili: empty logits matrix");
  if (logits.rows <= p + 2)
    throw std::invalid_argument(
        "infer_ili: need more than " + std::to_string(p + 2) +
        " rows for " + std::to_string(p) + " nodes, got " +
        std::to_string(logits.rows));
  if (!class_names.empty() && class_names.size() != p)
    throw std::invalid_argument("infer_ili: class name count mismatch");
  if (!logits.all_finite())
    throw std::invalid_argument("infer_ili: non-finite logits");

  IliGraph g;
  g.class_names = class_names.empty() && p % 2 == 0
                      ? default_class_names(p / 2)
                      : class_names;
  if (g.class_names.empty())
    for (std::size_t i = 0; i < p; ++i)
      g.class_names.push_back("node_" + std::to_string(i));
  g.adjacency = DenseMatrix(p, p);

  DenseMatrix std_logits = standardize_columns(logits);
  SearchResult sr = grasp_search(std_logits, restarts, seed, 1.0, initial);

  for (std::size_t j = 0; j < p; ++j) {
    const std::vector<int>& parents = sr.parent_sets.parents[j];
    if (parents.empty()) continue;
    DenseMatrix x(std_logits.rows, parents.size());
    for (std::size_t r = 0; r < x.rows; ++r)
      for (std::size_t k = 0; k < parents.size(); ++k)
        x.at(r, k) = std_logits.at(r, static_cast<std::size_t>(parents[k]));
    std::vector<double> y = std_logits.col(j);
    RegressionResult fit = lasso_fit(x, y, lambda_reg);
    for (std::size_t k = 0; k < parents.size(); ++k)
      g.adjacency.at(static_cast<std::size_t>(parents[k]), j) =
          std::fabs(fit.coefficients[k]);
  }

  for (std::size_t i = 0; i < p; ++i) g.adjacency.at(i, i) = 0.0;

  double total = 0.0;
  for (double v : g.adjacency.data) total += v;
  if (total == 0.0) {
    g.zero = true;
    return g;
  }
  for (double& v : g.adjacency.data) v /= total;
  return g;
}

FrequencyMatrix edge_frequency(const std::vector<IliGraph>& graphs,
                               double epsilon) {
  if (graphs.empty())
    throw std::invalid_argument("edge_frequency: no graphs given");
  const std::size_t p = graphs[0].nodes();
  for (const IliGraph& g : graphs) {
    if (g.nodes() != p)
      throw std::invalid_argument("edge_frequency: graph size mismatch");
    if (g.class_names != graphs[0].class_names)
      throw std::invalid_argument("edge_frequency: class name mismatch");
  }
  FrequencyMatrix f;
  f.class_names = graphs[0].class_names;
  f.checkpoints = graphs.size();
  f.epsilon = epsilon;
  f.freq = DenseMatrix(p, p);
  const double t = static_cast<double>(graphs.size());
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      std::size_t count = 0;
      for (const IliGraph& g : graphs)
        if (g.adjacency.at(i, j) > epsilon) ++count;
      f.freq.at(i, j) = static_cast<double>(count) / t;
    }
  return f;
}

IliGraph stable_edges(const FrequencyMatrix& freq, const IliGraph& base,
                      double min_freq) {
  const std::size_t p = base.nodes();
  if (freq.freq.rows != p || freq.freq.cols != p)
    throw std::invalid_argument("stable_edges: shape mismatch");
  IliGraph out;
  out.class_names = base.class_names;
  out.adjacency = DenseMatrix(p, p);
  double total = 0.0;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      double v = freq.freq.at(i, j) >= min_freq ? base.adjacency.at(i, j) : 0.0;
      out.adjacency.at(i, j) = v;
      total += v;
    }
  if (total == 0.0) {
    out.zero = true;
    return out;
  }
  for (double& v : out.adjacency.data) v /= total;
  return out;
}

void write_adjacency_csv(const DenseMatrix& m,
                         const std::vector<std::string>& class_names,
                         const std::string& path) {
  if (class_names.size() != m.rows || m.rows != m.cols)
    throw std::invalid_argument("write_adjacency_csv: shape/name mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "class";
  for (const std::string& n : class_names) out << "," << n;
  out << "\n";
  for (std::size_t i = 0; i < m.rows; ++i) {
    out << class_names[i];
    for (std::size_t j = 0; j < m.cols; ++j)
      out << "," << format_double(m.at(i, j));
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

IliGraph read_adjacency_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty adjacency file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  if (header.size() < 2 || header[0] != "class")
    throw std::runtime_error(path + ": malformed adjacency header");
  IliGraph g;
  g.class_names.assign(header.begin() + 1, header.end());
  const std::size_t p = g.class_names.size();
  g.adjacency = DenseMatrix(p, p);
  std::size_t row = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (row >= p)
      throw std::runtime_error(path + ": more rows than header classes");
    std::stringstream ss(line);
    std::string field;
    std::size_t col = 0;
    bool first = true;
    while (std::getline(ss, field, ',')) {
      if (first) {
        if (field != g.class_names[row])
          throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                   ": row label '" + field +
                                   "' does not match header order");
        first = false;
        continue;
      }
      if (col >= p)
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": too many columns");
      try {
        std::size_t used = 0;
        g.adjacency.at(row, col) = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": bad numeric field '" + field + "'");
      }
      ++col;
    }
    if (col != p)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(p) +
                               " values, got " + std::to_string(col));
    ++row;
  }
  if (row != p)
    throw std::runtime_error(path + ": expected " + std::to_string(p) +
                             " rows, got " + std::to_string(row));
  g.zero = true;
  for (double v : g.adjacency.data)
    if (v != 0.0) {
      g.zero = false;
      break;
    }
  return g;
}

void write_heatmap_svg(const DenseMatrix& m,
                       const std::vector<std::string>& class_names,
                       const std::string& path) {
  if (class_names.size() != m.rows || m.rows != m.cols)
    throw std::invalid_argument("write_heatmap_svg: shape/name mismatch");
  const std::size_t p = m.rows;
  const int cell = 24;
  const int margin = 140;
  const int width = margin + cell * static_cast<int>(p) + 8;
  const int height = margin + cell * static_cast<int>(p) + 8;
  double max_v = 0.0;
  for (double v : m.data) max_v = std::max(max_v, v);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      double rel = max_v > 0.0 ? m.at(i, j) / max_v : 0.0;
      int shade = static_cast<int>(std::lround(255.0 * (1.0 - rel)));
      char color[16];
      std::snprintf(color, sizeof(color), "#%02x%02xff", shade, shade);
      out << "<rect class=\"cell\" x=\""
          << margin + cell * static_cast<int>(j) << "\" y=\""
          << margin + cell * static_cast<int>(i) << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"" << color
          << "\" stroke=\"#cccccc\"/>\n";
    }
  for (std::size_t i = 0; i < p; ++i) {
    out << "<text x=\"" << margin - 6 << "\" y=\""
        << margin + cell * static_cast<int>(i) + cell / 2 + 4
        << "\" font-size=\"10\" text-anchor=\"end\">" << class_names[i]
        << "</text>\n";
    out << "<text x=\"" << margin + cell * static_cast<int>(i) + cell / 2
        << "\" y=\"" << margin - 6 << "\" font-size=\"10\" text-anchor=\"start\""
        << " transform=\"rotate(-60 "
        << margin + cell * static_cast<int>(i) + cell / 2 << " " << margin - 6
        << ")\">" << class_names[i] << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ili
