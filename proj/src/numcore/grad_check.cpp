// Copyright 2026 The cmarr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cmarr/numcore/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "cmarr/error.hpp"

namespace cmarr {

namespace {

double evaluate(const LossFn& loss_fn, ParamStore& params) {
  Graph g(false);
  const Var loss = loss_fn(g, params);
  const double v = loss.value()[0];
  if (!std::isfinite(v)) throw NumericError("grad_check: loss is not finite");
  return v;
}

}  // namespace

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

const GradCheckEntry* GradCheckReport::worst() const {
  const GradCheckEntry* w = nullptr;
  for (const auto& e : entries) {
    if (w == nullptr || e.max_rel_error > w->max_rel_error) w = &e;
  }
  return w;
}

GradCheckReport grad_check(const LossFn& loss_fn, ParamStore& params, double eps,
                           const std::function<bool(const std::string&)>& filter) {
  params.zero_grad();
  {
    Graph g(true);
    const Var loss = loss_fn(g, params);
    if (loss.value().size() != 1) throw ShapeError("grad_check: loss must be scalar");
    if (!std::isfinite(loss.value()[0])) throw NumericError("grad_check: loss is not finite");
    g.backward(loss);
  }

  GradCheckReport report;
  for (auto& [name, entry] : params.entries()) {
    if (filter && !filter(name)) continue;
    GradCheckEntry out{name, 0.0, 0.0};
    auto values = entry.value.data();
    const auto analytic = entry.grad.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double fp = evaluate(loss_fn, params);
      values[i] = saved - eps;
      const double fm = evaluate(loss_fn, params);
      values[i] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      out.max_rel_error = std::max(out.max_rel_error, std::abs(a - numeric) / denom);
      out.max_abs_analytic = std::max(out.max_abs_analytic, std::abs(a));
    }
    report.entries.push_back(out);
  }
  return report;
}

}  // namespace cmarr
