/*
Copyright 2026 The gcmap Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#pragma once

#include <cmath>
#include <string>

#include "gcmap/dense.hpp"
#include "gcmap/error.hpp"

namespace gcmap {

enum class OptimizerKind { Sgd, Adam };

inline OptimizerKind parse_optimizer(const std::string &s) {
    if (s == "sgd") return OptimizerKind::Sgd;
    if (s == "adam") return OptimizerKind::Adam;
    throw DataError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

inline const char *to_string(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

/// Per-parameter optimizer state. A zero learning rate leaves the parameter
/// bit-identical under either rule.
class Optimizer {
  public:
    Optimizer() = default;
    Optimizer(OptimizerKind kind, double lr, double weight_decay = 0.0)
        : kind_(kind), lr_(lr), weight_decay_(weight_decay) {}

    void step(DenseMatrix &param, const DenseMatrix &grad) {
        detail::require_shape(param.same_shape(grad), "optimizer: gradient shape " + shape_str(grad) +
                                                          " != parameter shape " + shape_str(param));
        if (lr_ == 0.0) return;
        if (kind_ == OptimizerKind::Sgd) {
            for (std::size_t k = 0; k < param.size(); ++k)
                param.values()[k] -= lr_ * (grad.values()[k] + weight_decay_ * param.values()[k]);
            return;
        }
        if (m_.empty()) {
            m_ = DenseMatrix(param.rows(), param.cols());
            v_ = DenseMatrix(param.rows(), param.cols());
        }
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t k = 0; k < param.size(); ++k) {
            const double g = grad.values()[k] + weight_decay_ * param.values()[k];
            double &m = m_.values()[k];
            double &v = v_.values()[k];
            m = beta1_ * m + (1.0 - beta1_) * g;
            v = beta2_ * v + (1.0 - beta2_) * g * g;
            param.values()[k] -= lr_ * (m / c1) / (std::sqrt(v / c2) + eps_);
        }
    }

    double learning_rate() const noexcept { return lr_; }

  private:
    OptimizerKind kind_ = OptimizerKind::Sgd;
    double lr_ = 0.01;
    double weight_decay_ = 0.0;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    DenseMatrix m_, v_;
    long t_ = 0;
};

} // namespace gcmap
