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

#include "cmarr/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cmarr/error.hpp"

namespace cmarr {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() +
                     " vs " + b.shape_string());
  }
}

void require_scalar(const Tensor& s, const char* op) {
  if (s.size() != 1) throw ShapeError(std::string(op) + ": expected a 1x1 scalar");
}

Tensor like(const Tensor& t, double fill = 0.0) {
  return Tensor::matrix(t.rows(), t.cols(), fill);
}

// C = A * B
Tensor mm(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor c = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      const double* bp = b.row(p).data();
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

// C = A * B^T
Tensor mm_nt(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  Tensor c = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.row(i).data();
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.row(j).data();
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c(i, j) = s;
    }
  }
  return c;
}

// C = A^T * B
Tensor mm_tn(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor c = Tensor::matrix(k, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* bi = b.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      double* cp = c.row(p).data();
      for (std::size_t j = 0; j < m; ++j) cp[j] += aip * bi[j];
    }
  }
  return c;
}

template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  const Tensor& x = a.value();
  Tensor y = like(x);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return a.graph().make(std::move(y), {a}, [a, df](Graph& g, const Tensor& go) {
    const Tensor& x = a.value();
    Tensor gx = like(x);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] = go[i] * df(x[i]);
    g.accumulate(a, std::move(gx));
  });
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double softplus_value(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::vector<double> softmax(std::span<const double> v) {
  if (v.empty()) throw ArgumentError("softmax of an empty vector");
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError("softmax input is not finite");
  }
  const double mx = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    z += out[i];
  }
  for (double& o : out) o /= z;
  return out;
}

double gelu(double x) { return x * normal_cdf(x); }

Tensor gelu(const Tensor& x) {
  x.require_finite("gelu input");
  Tensor y = x;
  for (double& v : y.data()) v = gelu(v);
  return y;
}

Var matmul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& w = b.value();
  if (x.cols() != w.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + x.shape_string() + " * " +
                     w.shape_string());
  }
  return a.graph().make(mm(x, w), {a, b}, [a, b](Graph& g, const Tensor& go) {
    if (g.requires_grad(a)) g.accumulate(a, mm_nt(go, b.value()));
    if (g.requires_grad(b)) g.accumulate(b, mm_tn(a.value(), go));
  });
}

Var transpose(Var a) {
  const Tensor& x = a.value();
  Tensor y = Tensor::matrix(x.cols(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y(j, i) = x(i, j);
  return a.graph().make(std::move(y), {a}, [a](Graph& g, const Tensor& go) {
    Tensor gx = Tensor::matrix(go.cols(), go.rows());
    for (std::size_t i = 0; i < go.rows(); ++i)
      for (std::size_t j = 0; j < go.cols(); ++j) gx(j, i) = go(i, j);
    g.accumulate(a, std::move(gx));
  });
}

Var operator+(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor y = like(a.value());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + b.value()[i];
  return a.graph().make(std::move(y), {a, b}, [a, b](Graph& g, const Tensor& go) {
    g.accumulate(a, go);
    g.accumulate(b, go);
  });
}

Var operator-(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor y = like(a.value());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] - b.value()[i];
  return a.graph().make(std::move(y), {a, b}, [a, b](Graph& g, const Tensor& go) {
    g.accumulate(a, go);
    if (g.requires_grad(b)) {
      Tensor gb = go;
      for (double& v : gb.data()) v = -v;
      g.accumulate(b, std::move(gb));
    }
  });
}

Var hadamard(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "hadamard");
  Tensor y = like(a.value());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * b.value()[i];
  return a.graph().make(std::move(y), {a, b}, [a, b](Graph& g, const Tensor& go) {
    if (g.requires_grad(a)) {
      Tensor ga = like(go);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = go[i] * b.value()[i];
      g.accumulate(a, std::move(ga));
    }
    if (g.requires_grad(b)) {
      Tensor gb = like(go);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] = go[i] * a.value()[i];
      g.accumulate(b, std::move(gb));
    }
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double c) {
  Tensor y = like(a.value());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = c * a.value()[i];
  return a.graph().make(std::move(y), {a}, [a, c](Graph& g, const Tensor& go) {
    Tensor ga = go;
    for (double& v : ga.data()) v *= c;
    g.accumulate(a, std::move(ga));
  });
}

Var add_const(Var a, double c) {
  Tensor y = like(a.value());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + c;
  return a.graph().make(std::move(y), {a},
                        [a](Graph& g, const Tensor& go) { g.accumulate(a, go); });
}

Var mul_scalar(Var a, Var s) {
  require_scalar(s.value(), "mul_scalar");
  const double sv = s.value()[0];
  Tensor y = like(a.value());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = sv * a.value()[i];
  return a.graph().make(std::move(y), {a, s}, [a, s](Graph& g, const Tensor& go) {
    const double sv = s.value()[0];
    if (g.requires_grad(a)) {
      Tensor ga = go;
      for (double& v : ga.data()) v *= sv;
      g.accumulate(a, std::move(ga));
    }
    if (g.requires_grad(s)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < go.size(); ++i) acc += go[i] * a.value()[i];
      g.accumulate(s, Tensor::scalar(acc));
    }
  });
}

Var add_scalar(Var a, Var s) {
  require_scalar(s.value(), "add_scalar");
  const double sv = s.value()[0];
  Tensor y = like(a.value());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + sv;
  return a.graph().make(std::move(y), {a, s}, [a, s](Graph& g, const Tensor& go) {
    g.accumulate(a, go);
    if (g.requires_grad(s)) {
      double acc = 0.0;
      for (double v : go.data()) acc += v;
      g.accumulate(s, Tensor::scalar(acc));
    }
  });
}

Var div_scalar(Var a, Var s) {
  require_scalar(s.value(), "div_scalar");
  const double sv = s.value()[0];
  if (sv == 0.0) throw NumericError("div_scalar: division by zero");
  Tensor y = like(a.value());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] / sv;
  return a.graph().make(std::move(y), {a, s}, [a, s](Graph& g, const Tensor& go) {
    const double sv = s.value()[0];
    if (g.requires_grad(a)) {
      Tensor ga = go;
      for (double& v : ga.data()) v /= sv;
      g.accumulate(a, std::move(ga));
    }
    if (g.requires_grad(s)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < go.size(); ++i) acc += go[i] * a.value()[i];
      g.accumulate(s, Tensor::scalar(-acc / (sv * sv)));
    }
  });
}

Var add_row(Var a, Var row) {
  const Tensor& x = a.value();
  const Tensor& r = row.value();
  if (r.rows() != 1 || r.cols() != x.cols()) {
    throw ShapeError("add_row: row " + r.shape_string() + " vs " + x.shape_string());
  }
  Tensor y = x;
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += r[j];
  return a.graph().make(std::move(y), {a, row}, [a, row](Graph& g, const Tensor& go) {
    g.accumulate(a, go);
    if (g.requires_grad(row)) {
      Tensor gr = Tensor::matrix(1, go.cols());
      for (std::size_t i = 0; i < go.rows(); ++i)
        for (std::size_t j = 0; j < go.cols(); ++j) gr[j] += go(i, j);
      g.accumulate(row, std::move(gr));
    }
  });
}

Var mul_row(Var a, Var row) {
  const Tensor& x = a.value();
  const Tensor& r = row.value();
  if (r.rows() != 1 || r.cols() != x.cols()) {
    throw ShapeError("mul_row: row " + r.shape_string() + " vs " + x.shape_string());
  }
  Tensor y = x;
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) *= r[j];
  return a.graph().make(std::move(y), {a, row}, [a, row](Graph& g, const Tensor& go) {
    const Tensor& x = a.value();
    const Tensor& r = row.value();
    if (g.requires_grad(a)) {
      Tensor ga = go;
      for (std::size_t i = 0; i < ga.rows(); ++i)
        for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) *= r[j];
      g.accumulate(a, std::move(ga));
    }
    if (g.requires_grad(row)) {
      Tensor gr = Tensor::matrix(1, go.cols());
      for (std::size_t i = 0; i < go.rows(); ++i)
        for (std::size_t j = 0; j < go.cols(); ++j) gr[j] += go(i, j) * x(i, j);
      g.accumulate(row, std::move(gr));
    }
  });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var log(Var a) {
  for (double v : a.value().data()) {
    if (!(v > 0.0)) throw NumericError("log of a non-positive value");
  }
  return unary(
      a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double x) {
        const double t = std::tanh(x);
        return 1.0 - t * t;
      });
}

Var sigmoid(Var a) {
  return unary(a, sigmoid_value, [](double x) {
    const double s = sigmoid_value(x);
    return s * (1.0 - s);
  });
}

Var softplus(Var a) { return unary(a, softplus_value, sigmoid_value); }

Var square(Var a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var gelu(Var a) {
  return unary(
      a, [](double x) { return gelu(x); },
      [](double x) { return normal_cdf(x) + x * normal_pdf(x); });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.graph().make(Tensor::scalar(s), {a}, [a](Graph& g, const Tensor& go) {
    g.accumulate(a, like(a.value(), go[0]));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.graph().make(Tensor::scalar(s / n), {a}, [a, n](Graph& g, const Tensor& go) {
    g.accumulate(a, like(a.value(), go[0] / n));
  });
}

Var mean_rows(Var a) {
  const Tensor& x = a.value();
  if (x.rows() == 0) throw ShapeError("mean_rows of an empty sequence");
  const double n = static_cast<double>(x.rows());
  Tensor y = Tensor::matrix(1, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y[j] += x(i, j);
  for (double& v : y.data()) v /= n;
  return a.graph().make(std::move(y), {a}, [a, n](Graph& g, const Tensor& go) {
    const Tensor& x = a.value();
    Tensor gx = like(x);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) gx(i, j) = go[j] / n;
    g.accumulate(a, std::move(gx));
  });
}

Var sum_cols(Var a) {
  const Tensor& x = a.value();
  Tensor y = Tensor::matrix(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y[i] += x(i, j);
  return a.graph().make(std::move(y), {a}, [a](Graph& g, const Tensor& go) {
    const Tensor& x = a.value();
    Tensor gx = like(x);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) gx(i, j) = go[i];
    g.accumulate(a, std::move(gx));
  });
}

Var softmax_rows(Var a) {
  const Tensor& x = a.value();
  Tensor y = like(x);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto out = softmax(x.row(i));
    std::copy(out.begin(), out.end(), y.row(i).begin());
  }
  return a.graph().make(std::move(y), {a}, [a](Graph& g, const Tensor& go) {
    const Tensor& x = a.value();
    Tensor gx = like(x);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto y = softmax(x.row(i));
      double dot = 0.0;
      for (std::size_t j = 0; j < y.size(); ++j) dot += go(i, j) * y[j];
      for (std::size_t j = 0; j < y.size(); ++j) gx(i, j) = y[j] * (go(i, j) - dot);
    }
    g.accumulate(a, std::move(gx));
  });
}

Var log_softmax_rows(Var a) {
  const Tensor& x = a.value();
  x.require_finite("log_softmax input");
  Tensor y = like(x);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    const double mx = *std::max_element(r.begin(), r.end());
    double z = 0.0;
    for (double v : r) z += std::exp(v - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < r.size(); ++j) y(i, j) = r[j] - lse;
  }
  return a.graph().make(std::move(y), {a}, [a](Graph& g, const Tensor& go) {
    const Tensor& x = a.value();
    Tensor gx = like(x);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto p = softmax(x.row(i));
      double gs = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) gs += go(i, j);
      for (std::size_t j = 0; j < p.size(); ++j) gx(i, j) = go(i, j) - p[j] * gs;
    }
    g.accumulate(a, std::move(gx));
  });
}

Var layer_norm_rows(Var a, Var gamma, Var beta, double eps) {
  const Tensor& x = a.value();
  const std::size_t c = x.cols();
  if (gamma.value().size() != c || beta.value().size() != c) {
    throw ShapeError("layer_norm: affine parameters do not match width " +
                     std::to_string(c));
  }
  Tensor xhat = like(x);
  Tensor inv = Tensor::matrix(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += x(i, j);
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (x(i, j) - mu) * (x(i, j) - mu);
    var /= static_cast<double>(c);
    inv[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) xhat(i, j) = (x(i, j) - mu) * inv[i];
  }
  Tensor y = like(x);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < c; ++j)
      y(i, j) = xhat(i, j) * gamma.value()[j] + beta.value()[j];
  return a.graph().make(
      std::move(y), {a, gamma, beta},
      [a, gamma, beta, xhat = std::move(xhat), inv = std::move(inv)](Graph& g,
                                                                      const Tensor& go) {
        const std::size_t c = xhat.cols();
        const double n = static_cast<double>(c);
        if (g.requires_grad(a)) {
          Tensor gx = like(xhat);
          for (std::size_t i = 0; i < xhat.rows(); ++i) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
              const double d = go(i, j) * gamma.value()[j];
              m1 += d;
              m2 += d * xhat(i, j);
            }
            m1 /= n;
            m2 /= n;
            for (std::size_t j = 0; j < c; ++j) {
              const double d = go(i, j) * gamma.value()[j];
              gx(i, j) = inv[i] * (d - m1 - xhat(i, j) * m2);
            }
          }
          g.accumulate(a, std::move(gx));
        }
        if (g.requires_grad(gamma) || g.requires_grad(beta)) {
          Tensor gg(gamma.value().shape(), 0.0), gb(beta.value().shape(), 0.0);
          for (std::size_t i = 0; i < xhat.rows(); ++i)
            for (std::size_t j = 0; j < c; ++j) {
              gg[j] += go(i, j) * xhat(i, j);
              gb[j] += go(i, j);
            }
          g.accumulate(gamma, std::move(gg));
          g.accumulate(beta, std::move(gb));
        }
      });
}

Var normalize_rows(Var a) {
  constexpr double kEps2 = 1e-24;
  const Tensor& x = a.value();
  Tensor y = like(x);
  Tensor norms = Tensor::matrix(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = kEps2;
    for (double v : x.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
    for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) = x(i, j) / norms[i];
  }
  const Tensor yv = y;
  return a.graph().make(
      std::move(y), {a},
      [a, yv, norms = std::move(norms)](Graph& g, const Tensor& go) {
        Tensor gx = like(yv);
        for (std::size_t i = 0; i < yv.rows(); ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < yv.cols(); ++j) dot += go(i, j) * yv(i, j);
          for (std::size_t j = 0; j < yv.cols(); ++j)
            gx(i, j) = (go(i, j) - yv(i, j) * dot) / norms[i];
        }
        g.accumulate(a, std::move(gx));
      });
}

Var pairwise_sq_dist(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& z = b.value();
  if (x.cols() != z.cols()) {
    throw ShapeError("pairwise_sq_dist: widths differ " + x.shape_string() + " vs " +
                     z.shape_string());
  }
  Tensor d = Tensor::matrix(x.rows(), z.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < z.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) {
        const double diff = x(i, k) - z(j, k);
        s += diff * diff;
      }
      d(i, j) = s;
    }
  return a.graph().make(std::move(d), {a, b}, [a, b](Graph& g, const Tensor& go) {
    const Tensor& x = a.value();
    const Tensor& z = b.value();
    Tensor gx = like(x), gz = like(z);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < z.rows(); ++j) {
        const double w = 2.0 * go(i, j);
        for (std::size_t k = 0; k < x.cols(); ++k) {
          const double diff = x(i, k) - z(j, k);
          gx(i, k) += w * diff;
          gz(j, k) -= w * diff;
        }
      }
    g.accumulate(a, std::move(gx));
    g.accumulate(b, std::move(gz));
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ArgumentError("concat_cols of nothing");
  const std::size_t r = parts.front().rows();
  std::size_t c = 0;
  for (const Var& p : parts) {
    if (p.rows() != r) throw ShapeError("concat_cols: row counts differ");
    c += p.cols();
  }
  Tensor y = Tensor::matrix(r, c);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& x = p.value();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) y(i, off + j) = x(i, j);
    off += x.cols();
  }
  return parts.front().graph().make(std::move(y), parts,
                                     [parts](Graph& g, const Tensor& go) {
                                       std::size_t off = 0;
                                       for (const Var& p : parts) {
                                         const std::size_t w = p.cols();
                                         if (g.requires_grad(p)) {
                                           Tensor gp = Tensor::matrix(go.rows(), w);
                                           for (std::size_t i = 0; i < go.rows(); ++i)
                                             for (std::size_t j = 0; j < w; ++j)
                                               gp(i, j) = go(i, off + j);
                                           g.accumulate(p, std::move(gp));
                                         }
                                         off += w;
                                       }
                                     });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ArgumentError("concat_rows of nothing");
  const std::size_t c = parts.front().cols();
  std::vector<double> data;
  std::size_t r = 0;
  for (const Var& p : parts) {
    if (p.cols() != c) throw ShapeError("concat_rows: column counts differ");
    data.insert(data.end(), p.value().data().begin(), p.value().data().end());
    r += p.rows();
  }
  return parts.front().graph().make(
      Tensor({r, c}, std::move(data)), parts, [parts](Graph& g, const Tensor& go) {
        std::size_t off = 0;
        for (const Var& p : parts) {
          const std::size_t n = p.value().size();
          if (g.requires_grad(p)) {
            std::vector<double> d(go.data().begin() + static_cast<std::ptrdiff_t>(off),
                                  go.data().begin() + static_cast<std::ptrdiff_t>(off + n));
            g.accumulate(p, Tensor({p.rows(), p.cols()}, std::move(d)));
          }
          off += n;
        }
      });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  const Tensor& x = a.value();
  if (begin > end || end > x.rows()) throw ShapeError("slice_rows out of range");
  const std::size_t c = x.cols();
  std::vector<double> d(x.data().begin() + static_cast<std::ptrdiff_t>(begin * c),
                        x.data().begin() + static_cast<std::ptrdiff_t>(end * c));
  return a.graph().make(Tensor({end - begin, c}, std::move(d)), {a},
                        [a, begin](Graph& g, const Tensor& go) {
                          Tensor gx = like(a.value());
                          const std::size_t c = gx.cols();
                          for (std::size_t i = 0; i < go.size(); ++i)
                            gx[begin * c + i] = go[i];
                          g.accumulate(a, std::move(gx));
                        });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& x = a.value();
  if (begin > end || end > x.cols()) throw ShapeError("slice_cols out of range");
  Tensor y = Tensor::matrix(x.rows(), end - begin);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = begin; j < end; ++j) y(i, j - begin) = x(i, j);
  return a.graph().make(std::move(y), {a}, [a, begin](Graph& g, const Tensor& go) {
    Tensor gx = like(a.value());
    for (std::size_t i = 0; i < go.rows(); ++i)
      for (std::size_t j = 0; j < go.cols(); ++j) gx(i, begin + j) = go(i, j);
    g.accumulate(a, std::move(gx));
  });
}

Var select_cols(Var a, const std::vector<std::size_t>& index) {
  const Tensor& x = a.value();
  for (std::size_t k : index) {
    if (k >= x.cols()) throw ShapeError("select_cols index out of range");
  }
  Tensor y = Tensor::matrix(x.rows(), index.size());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < index.size(); ++j) y(i, j) = x(i, index[j]);
  return a.graph().make(std::move(y), {a}, [a, index](Graph& g, const Tensor& go) {
    Tensor gx = like(a.value());
    for (std::size_t i = 0; i < go.rows(); ++i)
      for (std::size_t j = 0; j < index.size(); ++j) gx(i, index[j]) += go(i, j);
    g.accumulate(a, std::move(gx));
  });
}

Var unfold_rows(Var a, std::size_t kernel) {
  if (kernel % 2 == 0) throw ArgumentError("unfold_rows needs an odd kernel");
  const Tensor& x = a.value();
  const std::size_t t = x.rows(), d = x.cols();
  const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
  Tensor y = Tensor::matrix(t, kernel * d);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t k = 0; k < kernel; ++k) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i + k) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(t)) continue;
      for (std::size_t j = 0; j < d; ++j)
        y(i, k * d + j) = x(static_cast<std::size_t>(src), j);
    }
  return a.graph().make(std::move(y), {a}, [a, kernel, half](Graph& g, const Tensor& go) {
    Tensor gx = like(a.value());
    const std::size_t t = gx.rows(), d = gx.cols();
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t k = 0; k < kernel; ++k) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i + k) - half;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(t)) continue;
        for (std::size_t j = 0; j < d; ++j)
          gx(static_cast<std::size_t>(src), j) += go(i, k * d + j);
      }
    g.accumulate(a, std::move(gx));
  });
}

}  // namespace cmarr
