#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kin::eval {

// Fraction of exactly matching entries. Throws on empty or mismatched input.
double accuracy(const std::vector<int>& preds, const std::vector<int>& truths);

// Sum of squared differences over the two padded 7-vectors (meters^2).
double length_error(const std::array<double, 7>& truth,
                    const std::array<double, 7>& pred);

// Zero-pads raw regressor outputs above index n_hat into a 7-vector.
std::array<double, 7> pad_prediction(int n_hat, std::span<const double> raw);

struct ConfusionMatrix {
  // counts[truth-1][pred-1]
  std::array<std::array<std::int64_t, 6>, 6> counts{};

  void add(int truth, int pred);
  std::int64_t total() const;
  std::int64_t trace() const;
  double accuracy() const;
  std::string to_csv() const;
  // Row-normalized heatmap, 0-255.
  void write_pgm(const std::string& path) const;
};

ConfusionMatrix confusion(const std::vector<int>& preds,
                          const std::vector<int>& truths);

} // namespace kin::eval
