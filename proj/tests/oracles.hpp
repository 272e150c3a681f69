#pragma once

// Reference implementations written as plain loops over std::vector, kept
// apart from the library code they check.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, std::vector<double>(c, 0.0)); }

/// Bilinear pixel with half-pixel centres, clamped at the borders.
inline double bilinear_pixel(const Matrix& src, std::size_t out_h, std::size_t out_w, std::size_t i, std::size_t j) {
  const double in_h = static_cast<double>(src.size()), in_w = static_cast<double>(src[0].size());
  double sy = (static_cast<double>(i) + 0.5) * in_h / static_cast<double>(out_h) - 0.5;
  double sx = (static_cast<double>(j) + 0.5) * in_w / static_cast<double>(out_w) - 0.5;
  sy = std::clamp(sy, 0.0, in_h - 1);
  sx = std::clamp(sx, 0.0, in_w - 1);
  const auto y0 = static_cast<std::size_t>(std::floor(sy)), x0 = static_cast<std::size_t>(std::floor(sx));
  const std::size_t y1 = std::min(y0 + 1, src.size() - 1), x1 = std::min(x0 + 1, src[0].size() - 1);
  const double wy = sy - static_cast<double>(y0), wx = sx - static_cast<double>(x0);
  return (1 - wy) * ((1 - wx) * src[y0][x0] + wx * src[y0][x1]) + wy * ((1 - wx) * src[y1][x0] + wx * src[y1][x1]);
}

/// Three-order weight tensor, indexed [j][a][r]: W_j is the d x k slice
/// for output j.
using Tensor3 = std::vector<Matrix>;

/// Bilinear pooling in slice form: m_j = 1^T (W_j^T x o Q_j^T y).
inline std::vector<double> mfb_tensor_form(const std::vector<double>& x, const std::vector<double>& y,
                                           const Tensor3& w, const Tensor3& q) {
  std::vector<double> m(w.size(), 0.0);
  for (std::size_t j = 0; j < w.size(); ++j) {
    const std::size_t k = w[j][0].size();
    for (std::size_t r = 0; r < k; ++r) {
      double wx = 0, qy = 0;
      for (std::size_t a = 0; a < x.size(); ++a) wx += w[j][a][r] * x[a];
      for (std::size_t b = 0; b < y.size(); ++b) qy += q[j][b][r] * y[b];
      m[j] += wx * qy;
    }
  }
  return m;
}

/// Flattens [j][a][r] to the [a][j*k + r] matrix layout.
inline Matrix reshape_to_matrix(const Tensor3& w) {
  const std::size_t o = w.size(), d = w[0].size(), k = w[0][0].size();
  Matrix out = zeros(d, k * o);
  for (std::size_t j = 0; j < o; ++j)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t r = 0; r < k; ++r) out[a][j * k + r] = w[j][a][r];
  return out;
}

inline std::vector<double> power_l2(std::vector<double> z) {
  double norm = 0;
  for (auto& e : z) {
    e = e < 0 ? -std::sqrt(-e) : std::sqrt(e);
    norm += e * e;
  }
  norm = std::sqrt(norm);
  if (norm > 0)
    for (auto& e : z) e /= norm;
  return z;
}

/// Opcode-gram rows for a category sequence: row r is the concatenation of
/// one-hot blocks for seq[r..r+w-1].
inline Matrix gram(const std::vector<int>& seq, std::size_t w, std::size_t categories = 8) {
  Matrix out;
  if (seq.size() < w) return out;
  for (std::size_t r = 0; r + w <= seq.size(); ++r) {
    std::vector<double> row(categories * w, 0.0);
    for (std::size_t t = 0; t < w; ++t) row[t * categories + static_cast<std::size_t>(seq[r + t])] = 1.0;
    out.push_back(row);
  }
  return out;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c = zeros(a.size(), b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

/// Dense GCN: relu(D^-1/2 (A+I) D^-1/2 H W) per layer, mean over nodes.
inline std::vector<double> gcn_readout(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                       Matrix h, const std::vector<Matrix>& weights) {
  Matrix a = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) a[i][i] = 1;
  for (auto [s, t] : edges)
    if (s != t) a[s][t] = a[t][s] = 1;
  std::vector<double> deg(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a[i][j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] /= std::sqrt(deg[i] * deg[j]);
  for (const auto& w : weights) {
    h = matmul(a, matmul(h, w));
    for (auto& row : h)
      for (auto& e : row) e = std::max(0.0, e);
  }
  std::vector<double> mean(h[0].size(), 0.0);
  for (const auto& row : h)
    for (std::size_t j = 0; j < row.size(); ++j) mean[j] += row[j] / static_cast<double>(n);
  return mean;
}

/// Single-channel-out 2-D convolution, stride 1, zero padding `pad`.
/// x[c][i][j], k[c][ki][kj].
inline Matrix conv2d_single(const std::vector<Matrix>& x, const std::vector<Matrix>& k, double bias, int pad) {
  const int H = static_cast<int>(x[0].size()), W = static_cast<int>(x[0][0].size());
  const int kh = static_cast<int>(k[0].size()), kw = static_cast<int>(k[0][0].size());
  const int Ho = H + 2 * pad - kh + 1, Wo = W + 2 * pad - kw + 1;
  Matrix out = zeros(static_cast<std::size_t>(Ho), static_cast<std::size_t>(Wo));
  for (int oy = 0; oy < Ho; ++oy)
    for (int ox = 0; ox < Wo; ++ox) {
      double s = bias;
      for (std::size_t c = 0; c < x.size(); ++c)
        for (int i = 0; i < kh; ++i)
          for (int j = 0; j < kw; ++j) {
            const int iy = oy + i - pad, ix = ox + j - pad;
            if (iy >= 0 && iy < H && ix >= 0 && ix < W) s += x[c][iy][ix] * k[c][i][j];
          }
      out[oy][ox] = s;
    }
  return out;
}

/// Softmax attention with explicit loops. q, k, v are [t, p].
inline Matrix attention_head(const Matrix& q, const Matrix& k, const Matrix& v, Matrix* weights = nullptr) {
  const std::size_t t = q.size(), p = q[0].size();
  Matrix w = zeros(t, t), out = zeros(t, v[0].size());
  for (std::size_t i = 0; i < t; ++i) {
    double mx = -1e300;
    for (std::size_t j = 0; j < t; ++j) {
      double s = 0;
      for (std::size_t d = 0; d < p; ++d) s += q[i][d] * k[j][d];
      w[i][j] = s / std::sqrt(static_cast<double>(p));
      mx = std::max(mx, w[i][j]);
    }
    double z = 0;
    for (std::size_t j = 0; j < t; ++j) z += (w[i][j] = std::exp(w[i][j] - mx));
    for (std::size_t j = 0; j < t; ++j) w[i][j] /= z;
    for (std::size_t j = 0; j < t; ++j)
      for (std::size_t d = 0; d < v[0].size(); ++d) out[i][d] += w[i][j] * v[j][d];
  }
  if (weights) *weights = w;
  return out;
}

/// Protection-level union per (prefix, method) key, computed by direct
/// dictionary scans rather than the library's grouping.
struct SensitivityOracle {
  std::map<std::string, std::set<std::string>> api_perms;     // api -> perms
  std::map<std::string, std::set<std::string>> perm_levels;   // perm -> levels
  std::vector<std::string> vocab;

  static std::string prefix_of(const std::string& dotted_class) {
    const auto first = dotted_class.find('.');
    if (first == std::string::npos) return dotted_class;
    const auto second = dotted_class.find('.', first + 1);
    return second == std::string::npos ? dotted_class : dotted_class.substr(0, second);
  }
  // `<cls: ret name(args)>` -> (prefix, name)
  static std::pair<std::string, std::string> key_of_api(const std::string& sig) {
    const auto colon = sig.find(':');
    const std::string cls = sig.substr(1, colon - 1);
    const auto paren = sig.find('(');
    std::string head = sig.substr(colon + 2, paren - colon - 2);
    const std::string name = head.substr(head.rfind(' ') + 1);
    return {prefix_of(cls), name};
  }
  std::vector<int> lookup(const std::string& dotted_class, const std::string& method) const {
    std::vector<int> vec(vocab.size(), 0);
    const std::pair<std::string, std::string> key{prefix_of(dotted_class), method};
    for (const auto& [api, perms] : api_perms) {
      if (key_of_api(api) != key) continue;
      for (const auto& p : perms)
        for (const auto& l : perm_levels.at(p))
          vec[static_cast<std::size_t>(std::find(vocab.begin(), vocab.end(), l) - vocab.begin())] = 1;
    }
    return vec;
  }
};

}  // namespace oracle
