#include "metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "image_io.hpp"

namespace kin::eval {

double accuracy(const std::vector<int>& preds, const std::vector<int>& truths) {
  if (preds.empty() || preds.size() != truths.size()) {
    throw std::invalid_argument("accuracy: need equal nonempty lists");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == truths[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double length_error(const std::array<double, 7>& truth,
                    const std::array<double, 7>& pred) {
  double err = 0.0;
  for (std::size_t i = 0; i < 7; ++i) {
    const double diff = truth[i] - pred[i];
    err += diff * diff;
  }
  return err;
}

std::array<double, 7> pad_prediction(int n_hat, std::span<const double> raw) {
  if (n_hat < 1 || n_hat > 6) {
    throw std::invalid_argument("pad_prediction: n_hat out of range [1,6]");
  }
  std::array<double, 7> padded{};
  for (int i = 0; i <= n_hat && i < static_cast<int>(raw.size()); ++i) {
    padded[static_cast<std::size_t>(i)] = raw[static_cast<std::size_t>(i)];
  }
  return padded;
}

void ConfusionMatrix::add(int truth, int pred) {
  if (truth < 1 || truth > 6 || pred < 1 || pred > 6) {
    throw std::invalid_argument("confusion: classes must lie in 1..6");
  }
  ++counts[static_cast<std::size_t>(truth - 1)][static_cast<std::size_t>(pred - 1)];
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t sum = 0;
  for (const auto& row : counts) {
    for (const auto v : row) sum += v;
  }
  return sum;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < 6; ++i) sum += counts[i][i];
  return sum;
}

double ConfusionMatrix::accuracy() const {
  const std::int64_t n = total();
  return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
}

std::string ConfusionMatrix::to_csv() const {
  std::ostringstream out;
  out << "truth\\pred,1,2,3,4,5,6\n";
  for (std::size_t t = 0; t < 6; ++t) {
    out << (t + 1);
    for (std::size_t p = 0; p < 6; ++p) {
      out << "," << counts[t][p];
    }
    out << "\n";
  }
  return out.str();
}

void ConfusionMatrix::write_pgm(const std::string& path) const {
  std::vector<unsigned char> bytes(36, 0);
  for (std::size_t t = 0; t < 6; ++t) {
    std::int64_t row_total = 0;
    for (const auto v : counts[t]) row_total += v;
    for (std::size_t p = 0; p < 6; ++p) {
      const double frac = row_total == 0
                              ? 0.0
                              : static_cast<double>(counts[t][p]) /
                                    static_cast<double>(row_total);
      bytes[t * 6 + p] = static_cast<unsigned char>(std::lround(frac * 255.0));
    }
  }
  render::write_pgm_bytes(bytes, 6, 6, path);
}

ConfusionMatrix confusion(const std::vector<int>& preds,
                          const std::vector<int>& truths) {
  if (preds.empty() || preds.size() != truths.size()) {
    throw std::invalid_argument("confusion: need equal nonempty lists");
  }
  ConfusionMatrix m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    m.add(truths[i], preds[i]);
  }
  return m;
}

} // namespace kin::eval
