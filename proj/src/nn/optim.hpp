// nn/optim.hpp

// Copyright 2026  avlearn authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef AVLEARN_NN_OPTIM_HPP
#define AVLEARN_NN_OPTIM_HPP

#include <cmath>
#include <vector>

#include "nn/tensor.hpp"

namespace avlearn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction over a parameter set; the step counter is shared.
template <typename S>
class AdamT {
 public:
  explicit AdamT(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(std::vector<ParamT<S> *> &params, double lr) {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, step_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, step_);
    for (ParamT<S> *p : params) {
      if (p->adam_m.empty()) {
        p->adam_m.assign(p->size(), S(0));
        p->adam_v.assign(p->size(), S(0));
      }
      for (size_t i = 0; i < p->size(); ++i) {
        double g = double(p->grad[i]);
        double m = cfg_.beta1 * double(p->adam_m[i]) + (1.0 - cfg_.beta1) * g;
        double v = cfg_.beta2 * double(p->adam_v[i]) + (1.0 - cfg_.beta2) * g * g;
        p->adam_m[i] = S(m);
        p->adam_v[i] = S(v);
        double mhat = m / bc1, vhat = v / bc2;
        p->value[i] -= S(lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
  }

  int64_t step_count() const { return step_; }
  void set_step_count(int64_t s) { step_ = s; }

 private:
  AdamConfig cfg_;
  int64_t step_ = 0;
};

// Linear warmup to peak over the first warmup_fraction of total steps, then
// linear decay to zero at total_steps.
struct LrSchedule {
  double peak_lr = 0.002;
  int64_t total_steps = 1;
  double warmup_fraction = 0.08;

  double lr_at(int64_t step) const {
    if (peak_lr <= 0.0 || warmup_fraction <= 0.0 || warmup_fraction >= 1.0)
      throw ParamError("LrSchedule: need peak_lr > 0 and warmup_fraction in (0,1)");
    if (step < 0 || step > total_steps) throw ParamError("LrSchedule: step out of range");
    const double warm = warmup_fraction * double(total_steps);
    if (double(step) <= warm) return peak_lr * double(step) / warm;
    return peak_lr * (double(total_steps) - double(step)) / (double(total_steps) - warm);
  }
};

}  // namespace avlearn

#endif  // AVLEARN_NN_OPTIM_HPP
