#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kin::nn {

// Thrown when a gradient or loss stops being a number; training must fail
// loudly rather than continue on garbage.
class NonFiniteError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class OptimizerKind { sgd_momentum, adam };

template <class T>
class Optimizer {
public:
  virtual ~Optimizer() = default;
  virtual void step(std::span<T> params, std::span<const T> grads) = 0;
  virtual void set_lr(double lr) = 0;

protected:
  static void require_finite(std::span<const T> grads) {
    for (const T g : grads) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw NonFiniteError("optimizer: non-finite gradient");
      }
    }
  }
};

template <class T>
class SgdMomentum final : public Optimizer<T> {
public:
  SgdMomentum(double lr, double momentum) : lr_(lr), momentum_(momentum) {}

  void set_lr(double lr) override { lr_ = lr; }

  void step(std::span<T> params, std::span<const T> grads) override {
    this->require_finite(grads);
    if (velocity_.size() != grads.size()) {
      velocity_.assign(grads.size(), T(0));
    }
    const T lr = static_cast<T>(lr_);
    const T mu = static_cast<T>(momentum_);
    for (std::size_t i = 0; i < grads.size(); ++i) {
      velocity_[i] = mu * velocity_[i] + grads[i];
      params[i] -= lr * velocity_[i];
    }
  }

private:
  double lr_, momentum_;
  std::vector<T> velocity_;
};

template <class T>
class Adam final : public Optimizer<T> {
public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void set_lr(double lr) override { lr_ = lr; }

  void step(std::span<T> params, std::span<const T> grads) override {
    this->require_finite(grads);
    if (m_.size() != grads.size()) {
      m_.assign(grads.size(), T(0));
      v_.assign(grads.size(), T(0));
      t_ = 0;
    }
    ++t_;
    const T b1 = static_cast<T>(beta1_);
    const T b2 = static_cast<T>(beta2_);
    const T corr1 = T(1) - static_cast<T>(std::pow(beta1_, t_));
    const T corr2 = T(1) - static_cast<T>(std::pow(beta2_, t_));
    const T lr = static_cast<T>(lr_);
    const T eps = static_cast<T>(eps_);
    for (std::size_t i = 0; i < grads.size(); ++i) {
      m_[i] = b1 * m_[i] + (T(1) - b1) * grads[i];
      v_[i] = b2 * v_[i] + (T(1) - b2) * grads[i] * grads[i];
      const T mhat = m_[i] / corr1;
      const T vhat = v_[i] / corr2;
      params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }

private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<T> m_, v_;
  long t_ = 0;
};

template <class T>
std::unique_ptr<Optimizer<T>> make_optimizer(OptimizerKind kind, double lr,
                                             double momentum = 0.9) {
  if (kind == OptimizerKind::sgd_momentum) {
    return std::make_unique<SgdMomentum<T>>(lr, momentum);
  }
  return std::make_unique<Adam<T>>(lr);
}

} // namespace kin::nn
