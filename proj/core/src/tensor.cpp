#include "stdgi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stdgi {

namespace {

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor dimensions must be positive, got " + shape_str(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

}  // namespace

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::string shape_str(const Tensor& t) {
    return t.defined() ? shape_str(t.shape()) : std::string("[undefined]");
}

Tensor::Impl& Tensor::impl() {
    if (!impl_) throw ContractError("use of undefined tensor");
    return *impl_;
}

const Tensor::Impl& Tensor::impl() const {
    if (!impl_) throw ContractError("use of undefined tensor");
    return *impl_;
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    std::size_t n = shape_numel(shape);
    t.impl_->shape = std::move(shape);
    t.impl_->values.assign(n, 0.0);
    if (requires_grad) t.set_requires_grad(true);
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t = zeros(std::move(shape));
    std::fill(t.impl_->values.begin(), t.impl_->values.end(), value);
    return t;
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("shape " + shape_str(shape) + " does not match value count " +
                             std::to_string(values.size()));
    }
    t.impl_->shape = std::move(shape);
    t.impl_->values = std::move(values);
    if (requires_grad) t.set_requires_grad(true);
    return t;
}

Tensor Tensor::scalar(double value) {
    return from_values({1}, {value});
}

const std::vector<int>& Tensor::shape() const { return impl().shape; }

int Tensor::rank() const { return static_cast<int>(impl().shape.size()); }

std::size_t Tensor::numel() const { return impl().values.size(); }

int Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows(): tensor is not rank-2: " + shape_str(*this));
    return impl().shape[0];
}

int Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols(): tensor is not rank-2: " + shape_str(*this));
    return impl().shape[1];
}

double* Tensor::data() { return impl().values.data(); }
const double* Tensor::data() const { return impl().values.data(); }
const std::vector<double>& Tensor::values() const { return impl().values; }

double Tensor::item() const {
    if (numel() != 1) throw ContractError("item(): tensor has " + std::to_string(numel()) + " elements");
    return impl().values[0];
}

double Tensor::at(int i) const { return impl().values.at(static_cast<std::size_t>(i)); }
double& Tensor::at(int i) { return impl().values.at(static_cast<std::size_t>(i)); }

double Tensor::at(int i, int j) const {
    return impl().values.at(static_cast<std::size_t>(i) * static_cast<std::size_t>(cols()) +
                            static_cast<std::size_t>(j));
}

double& Tensor::at(int i, int j) {
    return impl().values.at(static_cast<std::size_t>(i) * static_cast<std::size_t>(cols()) +
                            static_cast<std::size_t>(j));
}

bool Tensor::requires_grad() const { return impl().requires_grad; }

void Tensor::set_requires_grad(bool on) {
    impl().requires_grad = on;
    if (on) ensure_grad();
}

bool Tensor::has_grad() const { return defined() && !impl().grad.empty(); }

void Tensor::ensure_grad() {
    if (impl().grad.empty()) impl().grad.assign(numel(), 0.0);
}

void Tensor::zero_grad() {
    if (!impl().grad.empty()) std::fill(impl().grad.begin(), impl().grad.end(), 0.0);
}

double* Tensor::grad() {
    if (!has_grad()) throw StateError("grad(): tensor has no gradient buffer");
    return impl().grad.data();
}

const double* Tensor::grad() const {
    if (!has_grad()) throw StateError("grad(): tensor has no gradient buffer");
    return impl().grad.data();
}

Tensor Tensor::clone() const {
    Tensor t;
    t.impl_ = std::make_shared<Impl>(impl());
    return t;
}

bool Tensor::all_finite() const {
    for (double v : impl().values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tape::record(std::function<void()> fn) {
    if (consumed_) throw StateError("tape already consumed by backward(); build a new tape");
    ops_.push_back(std::move(fn));
}

void Tape::backward(const Tensor& loss) {
    if (consumed_) throw StateError("backward() already ran on this tape");
    if (!loss.defined() || loss.numel() != 1) {
        throw ContractError("backward() requires a scalar loss, got " + shape_str(loss));
    }
    if (!loss.has_grad()) {
        throw ContractError("backward(): loss does not participate in this tape");
    }
    Tensor l = loss;
    l.grad()[0] = 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    consumed_ = true;
}

UnaryFn unary_fn_from_name(std::string_view name) {
    if (name == "sigmoid") return UnaryFn::Sigmoid;
    if (name == "tanh") return UnaryFn::Tanh;
    if (name == "relu") return UnaryFn::Relu;
    throw ConfigError("unknown unary function: " + std::string(name));
}

BinaryFn binary_fn_from_name(std::string_view name) {
    if (name == "add") return BinaryFn::Add;
    if (name == "sub") return BinaryFn::Sub;
    if (name == "mul") return BinaryFn::Mul;
    if (name == "concat_last_dim") return BinaryFn::ConcatLastDim;
    throw ConfigError("unknown binary function: " + std::string(name));
}

void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
    if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0);
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double aip = arow[p];
            const double* brow = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

std::vector<double> transposed(const double* a, int rows, int cols) {
    std::vector<double> t(static_cast<std::size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            t[static_cast<std::size_t>(j) * rows + i] = a[static_cast<std::size_t>(i) * cols + j];
        }
    }
    return t;
}

namespace ops {

namespace {

bool tracked(const Tensor& t) { return t.has_grad(); }

// Output of a differentiable op: allocate a grad buffer and register the
// closure only when some input is tracked.
template <typename Fn>
void register_backward(Tape* tape, Tensor& out, bool any_tracked, Fn&& fn) {
    if (tape && any_tracked) {
        out.ensure_grad();
        tape->record(std::forward<Fn>(fn));
    }
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        throw DimensionError("matmul: incompatible shapes " + shape_str(a) + " x " + shape_str(b));
    }
    const int m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = Tensor::zeros({m, n});
    gemm_nn(a.data(), b.data(), out.data(), m, k, n, false);
    register_backward(tape, out, tracked(a) || tracked(b), [a, b, out, m, k, n]() mutable {
        if (a.has_grad()) {
            // dA += dC * B^T
            std::vector<double> bt = transposed(b.data(), k, n);
            gemm_nn(out.grad(), bt.data(), a.grad(), m, n, k, true);
        }
        if (b.has_grad()) {
            // dB += A^T * dC
            std::vector<double> at = transposed(a.data(), m, k);
            gemm_nn(at.data(), out.grad(), b.grad(), k, m, n, true);
        }
    });
    return out;
}

Tensor unary_map(Tape* tape, const Tensor& x, UnaryFn fn) {
    const std::size_t n = x.numel();
    Tensor out = Tensor::zeros(x.shape());
    const double* xv = x.data();
    double* ov = out.data();
    switch (fn) {
        case UnaryFn::Sigmoid:
            for (std::size_t i = 0; i < n; ++i) ov[i] = stable_sigmoid(xv[i]);
            break;
        case UnaryFn::Tanh:
            for (std::size_t i = 0; i < n; ++i) ov[i] = std::tanh(xv[i]);
            break;
        case UnaryFn::Relu:
            for (std::size_t i = 0; i < n; ++i) ov[i] = xv[i] > 0.0 ? xv[i] : 0.0;
            break;
    }
    register_backward(tape, out, tracked(x), [x, out, fn, n]() mutable {
        if (!x.has_grad()) return;
        double* gx = x.grad();
        const double* go = out.grad();
        const double* ov = out.data();
        const double* xv = x.data();
        switch (fn) {
            case UnaryFn::Sigmoid:
                for (std::size_t i = 0; i < n; ++i) gx[i] += go[i] * ov[i] * (1.0 - ov[i]);
                break;
            case UnaryFn::Tanh:
                for (std::size_t i = 0; i < n; ++i) gx[i] += go[i] * (1.0 - ov[i] * ov[i]);
                break;
            case UnaryFn::Relu:
                for (std::size_t i = 0; i < n; ++i) gx[i] += xv[i] > 0.0 ? go[i] : 0.0;
                break;
        }
    });
    return out;
}

Tensor sigmoid(Tape* tape, const Tensor& x) { return unary_map(tape, x, UnaryFn::Sigmoid); }
Tensor tanh(Tape* tape, const Tensor& x) { return unary_map(tape, x, UnaryFn::Tanh); }
Tensor relu(Tape* tape, const Tensor& x) { return unary_map(tape, x, UnaryFn::Relu); }

namespace {

enum class Broadcast { Same, ScalarA, ScalarB, RowA, RowB };

// Row broadcasting matches a [1 x n] or [n] operand against an [m x n] one.
bool is_row_of(const Tensor& v, const Tensor& mat) {
    if (mat.rank() != 2) return false;
    const int n = mat.cols();
    if (v.rank() == 1 && v.shape()[0] == n) return true;
    if (v.rank() == 2 && v.rows() == 1 && v.cols() == n) return true;
    return false;
}

Broadcast classify(const Tensor& a, const Tensor& b, const char* opname) {
    if (a.shape() == b.shape()) return Broadcast::Same;
    if (b.numel() == 1) return Broadcast::ScalarB;
    if (a.numel() == 1) return Broadcast::ScalarA;
    if (is_row_of(b, a)) return Broadcast::RowB;
    if (is_row_of(a, b)) return Broadcast::RowA;
    throw DimensionError(std::string(opname) + ": incompatible shapes " + shape_str(a) + " and " +
                         shape_str(b));
}

}  // namespace

Tensor binary_map(Tape* tape, const Tensor& a, const Tensor& b, BinaryFn fn) {
    switch (fn) {
        case BinaryFn::Add: return add(tape, a, b);
        case BinaryFn::Sub: return sub(tape, a, b);
        case BinaryFn::Mul: return mul(tape, a, b);
        case BinaryFn::ConcatLastDim: return concat_cols(tape, a, b);
    }
    throw ContractError("binary_map: unreachable");
}

namespace {

// Shared skeleton for add/sub/mul. Forward combines a[i] with the broadcast
// b element; backward reduces gradients over the broadcast dimension.
template <typename Fwd, typename BwdA, typename BwdB>
Tensor pointwise(Tape* tape, const Tensor& a, const Tensor& b, const char* opname, Fwd fwd,
                 BwdA bwd_a, BwdB bwd_b) {
    const Broadcast bc = classify(a, b, opname);
    const Tensor& big = (bc == Broadcast::ScalarA || bc == Broadcast::RowA) ? b : a;
    Tensor out = Tensor::zeros(big.shape());
    const std::size_t n = out.numel();
    const int ncols = (bc == Broadcast::RowA || bc == Broadcast::RowB) ? big.cols() : 0;

    auto index_a = [bc, ncols](std::size_t i) -> std::size_t {
        switch (bc) {
            case Broadcast::ScalarA: return 0;
            case Broadcast::RowA: return i % static_cast<std::size_t>(ncols);
            default: return i;
        }
    };
    auto index_b = [bc, ncols](std::size_t i) -> std::size_t {
        switch (bc) {
            case Broadcast::ScalarB: return 0;
            case Broadcast::RowB: return i % static_cast<std::size_t>(ncols);
            default: return i;
        }
    };

    const double* av = a.data();
    const double* bv = b.data();
    double* ov = out.data();
    if (bc == Broadcast::Same) {
        for (std::size_t i = 0; i < n; ++i) ov[i] = fwd(av[i], bv[i]);
    } else {
        for (std::size_t i = 0; i < n; ++i) ov[i] = fwd(av[index_a(i)], bv[index_b(i)]);
    }

    register_backward(tape, out, tracked(a) || tracked(b),
                      [a, b, out, n, index_a, index_b, bwd_a, bwd_b]() mutable {
                          const double* av = a.data();
                          const double* bv = b.data();
                          const double* go = out.grad();
                          if (a.has_grad()) {
                              double* ga = a.grad();
                              for (std::size_t i = 0; i < n; ++i) {
                                  ga[index_a(i)] += bwd_a(av[index_a(i)], bv[index_b(i)], go[i]);
                              }
                          }
                          if (b.has_grad()) {
                              double* gb = b.grad();
                              for (std::size_t i = 0; i < n; ++i) {
                                  gb[index_b(i)] += bwd_b(av[index_a(i)], bv[index_b(i)], go[i]);
                              }
                          }
                      });
    return out;
}

}  // namespace

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    return pointwise(
        tape, a, b, "add", [](double x, double y) { return x + y; },
        [](double, double, double g) { return g; }, [](double, double, double g) { return g; });
}

Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
    return pointwise(
        tape, a, b, "sub", [](double x, double y) { return x - y; },
        [](double, double, double g) { return g; }, [](double, double, double g) { return -g; });
}

Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
    return pointwise(
        tape, a, b, "mul", [](double x, double y) { return x * y; },
        [](double, double y, double g) { return y * g; },
        [](double x, double, double g) { return x * g; });
}

Tensor concat_cols(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows()) {
        throw DimensionError("concat_last_dim: incompatible shapes " + shape_str(a) + " and " +
                             shape_str(b));
    }
    const int m = a.rows(), ca = a.cols(), cb = b.cols();
    Tensor out = Tensor::zeros({m, ca + cb});
    double* ov = out.data();
    const double* av = a.data();
    const double* bv = b.data();
    for (int i = 0; i < m; ++i) {
        std::copy(av + static_cast<std::size_t>(i) * ca, av + static_cast<std::size_t>(i + 1) * ca,
                  ov + static_cast<std::size_t>(i) * (ca + cb));
        std::copy(bv + static_cast<std::size_t>(i) * cb, bv + static_cast<std::size_t>(i + 1) * cb,
                  ov + static_cast<std::size_t>(i) * (ca + cb) + ca);
    }
    register_backward(tape, out, tracked(a) || tracked(b), [a, b, out, m, ca, cb]() mutable {
        const double* go = out.grad();
        const int w = ca + cb;
        if (a.has_grad()) {
            double* ga = a.grad();
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < ca; ++j) {
                    ga[static_cast<std::size_t>(i) * ca + j] += go[static_cast<std::size_t>(i) * w + j];
                }
            }
        }
        if (b.has_grad()) {
            double* gb = b.grad();
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < cb; ++j) {
                    gb[static_cast<std::size_t>(i) * cb + j] +=
                        go[static_cast<std::size_t>(i) * w + ca + j];
                }
            }
        }
    });
    return out;
}

Tensor log(Tape* tape, const Tensor& x) {
    const std::size_t n = x.numel();
    Tensor out = Tensor::zeros(x.shape());
    const double* xv = x.data();
    double* ov = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        if (xv[i] <= 0.0) throw ValidationError("log: non-positive input " + std::to_string(xv[i]));
        ov[i] = std::log(xv[i]);
    }
    register_backward(tape, out, tracked(x), [x, out, n]() mutable {
        if (!x.has_grad()) return;
        double* gx = x.grad();
        const double* go = out.grad();
        const double* xv = x.data();
        for (std::size_t i = 0; i < n; ++i) gx[i] += go[i] / xv[i];
    });
    return out;
}

Tensor abs(Tape* tape, const Tensor& x) {
    const std::size_t n = x.numel();
    Tensor out = Tensor::zeros(x.shape());
    const double* xv = x.data();
    double* ov = out.data();
    for (std::size_t i = 0; i < n; ++i) ov[i] = std::fabs(xv[i]);
    register_backward(tape, out, tracked(x), [x, out, n]() mutable {
        if (!x.has_grad()) return;
        double* gx = x.grad();
        const double* go = out.grad();
        const double* xv = x.data();
        for (std::size_t i = 0; i < n; ++i) {
            if (xv[i] > 0.0) {
                gx[i] += go[i];
            } else if (xv[i] < 0.0) {
                gx[i] -= go[i];
            }
        }
    });
    return out;
}

Tensor clamp(Tape* tape, const Tensor& x, double lo, double hi) {
    if (!(lo < hi)) throw ContractError("clamp: lo must be < hi");
    const std::size_t n = x.numel();
    Tensor out = Tensor::zeros(x.shape());
    const double* xv = x.data();
    double* ov = out.data();
    for (std::size_t i = 0; i < n; ++i) ov[i] = std::min(std::max(xv[i], lo), hi);
    register_backward(tape, out, tracked(x), [x, out, lo, hi, n]() mutable {
        if (!x.has_grad()) return;
        double* gx = x.grad();
        const double* go = out.grad();
        const double* xv = x.data();
        for (std::size_t i = 0; i < n; ++i) {
            if (xv[i] > lo && xv[i] < hi) gx[i] += go[i];
        }
    });
    return out;
}

Tensor scale(Tape* tape, const Tensor& x, double c) {
    const std::size_t n = x.numel();
    Tensor out = Tensor::zeros(x.shape());
    const double* xv = x.data();
    double* ov = out.data();
    for (std::size_t i = 0; i < n; ++i) ov[i] = c * xv[i];
    register_backward(tape, out, tracked(x), [x, out, c, n]() mutable {
        if (!x.has_grad()) return;
        double* gx = x.grad();
        const double* go = out.grad();
        for (std::size_t i = 0; i < n; ++i) gx[i] += c * go[i];
    });
    return out;
}

Tensor slice_cols(Tape* tape, const Tensor& x, int col_begin, int col_end) {
    if (x.rank() != 2) throw DimensionError("slice_cols: tensor is not rank-2: " + shape_str(x));
    if (col_begin < 0 || col_end > x.cols() || col_begin >= col_end) {
        throw DimensionError("slice_cols: invalid range [" + std::to_string(col_begin) + ", " +
                             std::to_string(col_end) + ") for " + shape_str(x));
    }
    const int m = x.rows(), c = x.cols(), w = col_end - col_begin;
    Tensor out = Tensor::zeros({m, w});
    const double* xv = x.data();
    double* ov = out.data();
    for (int i = 0; i < m; ++i) {
        std::copy(xv + static_cast<std::size_t>(i) * c + col_begin,
                  xv + static_cast<std::size_t>(i) * c + col_end,
                  ov + static_cast<std::size_t>(i) * w);
    }
    register_backward(tape, out, tracked(x), [x, out, m, c, w, col_begin]() mutable {
        if (!x.has_grad()) return;
        double* gx = x.grad();
        const double* go = out.grad();
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < w; ++j) {
                gx[static_cast<std::size_t>(i) * c + col_begin + j] +=
                    go[static_cast<std::size_t>(i) * w + j];
            }
        }
    });
    return out;
}

Tensor reshape(Tape* tape, const Tensor& x, std::vector<int> new_shape) {
    Tensor out = Tensor::from_values(std::move(new_shape), x.values());
    if (out.numel() != x.numel()) {
        throw DimensionError("reshape: element count mismatch " + shape_str(x) + " -> " +
                             shape_str(out));
    }
    const std::size_t n = x.numel();
    register_backward(tape, out, tracked(x), [x, out, n]() mutable {
        if (!x.has_grad()) return;
        double* gx = x.grad();
        const double* go = out.grad();
        for (std::size_t i = 0; i < n; ++i) gx[i] += go[i];
    });
    return out;
}

Tensor sum_all(Tape* tape, const Tensor& x) {
    const std::size_t n = x.numel();
    const double* xv = x.data();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += xv[i];
    Tensor out = Tensor::scalar(s);
    register_backward(tape, out, tracked(x), [x, out, n]() mutable {
        if (!x.has_grad()) return;
        double* gx = x.grad();
        const double g = out.grad()[0];
        for (std::size_t i = 0; i < n; ++i) gx[i] += g;
    });
    return out;
}

Tensor mean_all(Tape* tape, const Tensor& x) {
    const std::size_t n = x.numel();
    const double* xv = x.data();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += xv[i];
    Tensor out = Tensor::scalar(s / static_cast<double>(n));
    register_backward(tape, out, tracked(x), [x, out, n]() mutable {
        if (!x.has_grad()) return;
        double* gx = x.grad();
        const double g = out.grad()[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) gx[i] += g;
    });
    return out;
}

Tensor adj_mix(Tape* tape, const Tensor& a_hat, const Tensor& h) {
    if (a_hat.rank() != 2 || a_hat.rows() != a_hat.cols()) {
        throw DimensionError("adj_mix: adjacency must be square, got " + shape_str(a_hat));
    }
    if (a_hat.has_grad()) {
        throw ContractError("adj_mix: gradients w.r.t. the adjacency are not supported");
    }
    const int n = a_hat.rows();
    if (h.rank() != 2 || h.rows() % n != 0) {
        throw DimensionError("adj_mix: row count of " + shape_str(h) +
                             " is not a multiple of node count " + std::to_string(n));
    }
    const int blocks = h.rows() / n;
    const int d = h.cols();
    Tensor out = Tensor::zeros(h.shape());
    for (int b = 0; b < blocks; ++b) {
        const std::size_t off = static_cast<std::size_t>(b) * n * d;
        gemm_nn(a_hat.data(), h.data() + off, out.data() + off, n, n, d, false);
    }
    register_backward(tape, out, tracked(h), [a_hat, h, out, blocks, n, d]() mutable {
        if (!h.has_grad()) return;
        std::vector<double> at = transposed(a_hat.data(), n, n);
        for (int b = 0; b < blocks; ++b) {
            const std::size_t off = static_cast<std::size_t>(b) * n * d;
            gemm_nn(at.data(), out.grad() + off, h.grad() + off, n, n, d, true);
        }
    });
    return out;
}

}  // namespace ops

}  // namespace stdgi
