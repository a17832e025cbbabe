#include "specpert/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "specpert/error.hpp"

namespace specpert {

// ---------------------------------------------------------------------------
// Expression

struct Expression::Node {
  enum class Kind { Constant, S, T, Neg, Add, Sub, Mul, Div, Min, Max, Pow } kind;
  double value = 0.0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;

  double eval(double s, double t) const {
    switch (kind) {
      case Kind::Constant: return value;
      case Kind::S: return s;
      case Kind::T: return t;
      case Kind::Neg: return -lhs->eval(s, t);
      case Kind::Add: return lhs->eval(s, t) + rhs->eval(s, t);
      case Kind::Sub: return lhs->eval(s, t) - rhs->eval(s, t);
      case Kind::Mul: return lhs->eval(s, t) * rhs->eval(s, t);
      case Kind::Div: return lhs->eval(s, t) / rhs->eval(s, t);
      case Kind::Min: return std::min(lhs->eval(s, t), rhs->eval(s, t));
      case Kind::Max: return std::max(lhs->eval(s, t), rhs->eval(s, t));
      case Kind::Pow: return std::pow(lhs->eval(s, t), rhs->eval(s, t));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr, double value = 0.0) {
  auto node = std::make_shared<Expression::Node>();
  node->kind = kind;
  node->value = value;
  node->lhs = std::move(lhs);
  node->rhs = std::move(rhs);
  return node;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    auto root = expr();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected character");
    return root;
  }

  bool uses_variables() const { return uses_variables_; }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError,
                what + " at position " + std::to_string(pos_) + " in '" + std::string(src_) + "'");
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make(Kind::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make(Kind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Kind::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make(Kind::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::Neg, unary());
    return primary();
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of expression");
    if (accept('(')) {
      auto inner = expr();
      expect(')');
      return inner;
    }
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      const std::string_view word = src_.substr(start, pos_ - start);
      if (word == "s") {
        uses_variables_ = true;
        return make(Kind::S);
      }
      if (word == "t") {
        uses_variables_ = true;
        return make(Kind::T);
      }
      if (word == "pi") return make(Kind::Constant, nullptr, nullptr, std::numbers::pi);
      if (word == "e") return make(Kind::Constant, nullptr, nullptr, std::numbers::e);
      Kind kind;
      if (word == "min") {
        kind = Kind::Min;
      } else if (word == "max") {
        kind = Kind::Max;
      } else if (word == "pow") {
        kind = Kind::Pow;
      } else {
        pos_ = start;
        fail("unknown identifier '" + std::string(word) + "'");
      }
      expect('(');
      auto a = expr();
      expect(',');
      auto b = expr();
      expect(')');
      return make(kind, a, b);
    }
    fail("unexpected character");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        pos_ = look;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    const auto* first = src_.data() + start;
    const auto* last = src_.data() + pos_;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      pos_ = start;
      fail("malformed number");
    }
    return make(Kind::Constant, nullptr, nullptr, value);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  bool uses_variables_ = false;
};

}  // namespace

Expression::Expression(std::string_view source) : source_(source) {
  Parser parser(source_);
  root_ = parser.parse();
  uses_variables_ = parser.uses_variables();
}

double Expression::operator()(double s, double t) const { return root_->eval(s, t); }

double evaluate_constant(std::string_view source) {
  const Expression e(source);
  if (e.uses_variables()) {
    throw Error(ErrorCode::ParseError, "constant expression may not use s or t: '" +
                                           std::string(source) + "'");
  }
  return e(0.0, 0.0);
}

// ---------------------------------------------------------------------------
// KernelSpec

std::string to_string(KernelName name) {
  switch (name) {
    case KernelName::BrownianMotion: return "brownian_motion";
    case KernelName::BrownianBridge: return "brownian_bridge";
    case KernelName::Custom: return "custom";
  }
  return "unknown";
}

KernelSpec::KernelSpec(KernelName name, std::function<double(double, double)> fn, std::string label)
    : name_(name), fn_(std::move(fn)), label_(std::move(label)) {}

KernelSpec KernelSpec::brownian_motion() {
  return {KernelName::BrownianMotion, [](double s, double t) { return std::min(s, t); }, "min(s,t)"};
}

KernelSpec KernelSpec::brownian_bridge() {
  return {KernelName::BrownianBridge, [](double s, double t) { return std::min(s, t) - s * t; },
          "min(s,t)-s*t"};
}

KernelSpec KernelSpec::custom(std::string_view expression) {
  Expression e(expression);
  return custom([e](double s, double t) { return e(s, t); }, e.source());
}

KernelSpec KernelSpec::custom(std::function<double(double, double)> fn, std::string label) {
  constexpr int kGrid = 17;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < i; ++j) {
      const double s = static_cast<double>(i) / (kGrid - 1);
      const double t = static_cast<double>(j) / (kGrid - 1);
      const double st = fn(s, t);
      const double ts = fn(t, s);
      if (!std::isfinite(st) || !std::isfinite(ts)) {
        throw Error(ErrorCode::InvalidArgument, "kernel '" + label + "' is not finite on [0,1]^2");
      }
      if (std::abs(st - ts) > 1e-14 * std::max(1.0, std::abs(st))) {
        throw Error(ErrorCode::KernelNotSymmetric, "kernel '" + label + "' is not symmetric");
      }
    }
  }
  return {KernelName::Custom, std::move(fn), std::move(label)};
}

// ---------------------------------------------------------------------------
// Quadrature

namespace {

Quadrature gauss_legendre(Index n) {
  Quadrature q{Vector(n), Vector(n)};
  const double nd = static_cast<double>(n);
  // Roots of P_n on (-1,1) by Newton from the Tricomi initial guess; the
  // i-th guess is close to the i-th largest root.
  for (Index i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (Index k = 2; k <= n; ++k) {
        const double kd = static_cast<double>(k);
        const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
        p0 = p1;
        p1 = p2;
      }
      // p1 = P_n(x), p0 = P_{n-1}(x)
      dp = nd * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Map to [0,1]; symmetric pair (-x, x).
    const Index lo = i;
    const Index hi = n - 1 - i;
    q.nodes(lo) = 0.5 * (1.0 - x);
    q.nodes(hi) = 0.5 * (1.0 + x);
    q.weights(lo) = 0.5 * w;
    q.weights(hi) = 0.5 * w;
  }
  if (n % 2 == 1 && n > 1) q.nodes((n - 1) / 2) = 0.5;
  return q;
}

}  // namespace

Quadrature make_quadrature(QuadratureRule rule, Index n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "quadrature size must be positive");
  if (rule == QuadratureRule::GaussLegendre) return gauss_legendre(n);
  Quadrature q{Vector(n), Vector::Constant(n, 1.0 / static_cast<double>(n))};
  for (Index i = 0; i < n; ++i) q.nodes(i) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  return q;
}

// ---------------------------------------------------------------------------
// Nystrom

SpectralModel nystrom_model(const KernelSpec& kernel, Index n, QuadratureRule rule,
                            const NystromOptions& options) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "Nystrom model needs at least 2 nodes");
  const Quadrature q = make_quadrature(rule, n);
  const Vector sw = q.weights.cwiseSqrt();
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) {
      const double v = sw(i) * sw(j) * kernel(q.nodes(i), q.nodes(j));
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  auto dec = sym_eigen(SymMatrix(a), {.compute_vectors = options.store_vectors});
  const double top = dec.values(0);
  if (!(top > 0.0)) throw Error(ErrorCode::KernelNotPsd, "kernel matrix has no positive eigenvalue");

  const Index negatives = (dec.values.array() < -options.negative_tol_rel * top).count();
  if (static_cast<double>(negatives) > options.max_negative_fraction * static_cast<double>(n)) {
    throw Error(ErrorCode::KernelNotPsd, std::to_string(negatives) + " of " + std::to_string(n) +
                                             " eigenvalues are negative");
  }

  Index kept = 0;
  while (kept < n && dec.values(kept) > options.truncation_rel * top &&
         (kept == 0 || dec.values(kept) < dec.values(kept - 1))) {
    ++kept;
  }
  SpectralModel model(dec.values.head(kept), Provenance::Nystrom);
  NystromData data{q.nodes, q.weights, Matrix()};
  if (options.store_vectors) {
    data.vectors = dec.vectors.leftCols(kept);
    for (Index k = 0; k < kept; ++k) {
      auto col = data.vectors.col(k);
      const double cut = 1e-6 * col.cwiseAbs().maxCoeff();
      for (Index i = 0; i < n; ++i) {
        if (std::abs(col(i)) > cut) {
          if (col(i) < 0.0) col = -col;
          break;
        }
      }
    }
  }
  model.with_nystrom(std::move(data));
  return model;
}

double eigenfunction(const SpectralModel& model, const KernelSpec& kernel, Index index, double s) {
  const auto& data = model.nystrom();
  if (!data || data->vectors.size() == 0) {
    throw Error(ErrorCode::InvalidArgument, "model carries no Nystrom eigenvectors");
  }
  if (index < 1 || index > model.dim()) throw Error(ErrorCode::InvalidArgument, "index out of range");
  double acc = 0.0;
  for (Index j = 0; j < data->nodes.size(); ++j) {
    acc += std::sqrt(data->weights(j)) * kernel(s, data->nodes(j)) * data->vectors(j, index - 1);
  }
  return acc / model.lambda(index);
}

PerturbationMatrix metric_perturbation_from_kernel(const SpectralModel& model, const KernelSpec& rho) {
  const auto& data = model.nystrom();
  if (!data || data->vectors.size() == 0) {
    throw Error(ErrorCode::InvalidArgument, "model carries no Nystrom eigenvectors");
  }
  const Index nodes = data->nodes.size();
  const Vector sw = data->weights.cwiseSqrt();
  Matrix r(nodes, nodes);
  for (Index j = 0; j < nodes; ++j) {
    for (Index i = j; i < nodes; ++i) {
      const double v = sw(i) * sw(j) * rho(data->nodes(i), data->nodes(j));
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  const Matrix b = data->vectors.transpose() * r * data->vectors;
  return {SymMatrix(b), "kernel(" + rho.label() + ")"};
}

}  // namespace specpert
