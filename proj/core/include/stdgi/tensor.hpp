#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "stdgi/errors.hpp"

namespace stdgi {

// Dense row-major tensor of 64-bit floats. Copying a Tensor copies the
// handle; both copies refer to the same storage (this is what lets tape
// closures accumulate gradients into parameters). Use clone() for an
// independent deep copy.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor from_values(std::vector<int> shape, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor scalar(double value);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int>& shape() const;
    int rank() const;
    std::size_t numel() const;

    // Rank-2 helpers.
    int rows() const;
    int cols() const;

    double* data();
    const double* data() const;
    const std::vector<double>& values() const;

    double item() const;               // value of a single-element tensor
    double at(int i) const;            // flat index
    double at(int i, int j) const;     // rank-2 index
    double& at(int i);
    double& at(int i, int j);

    bool requires_grad() const;
    void set_requires_grad(bool on);   // allocates the grad buffer when turned on

    // Gradient buffer management. has_grad() is what the tape consults to
    // decide whether a tensor participates in backprop.
    bool has_grad() const;
    void ensure_grad();
    void zero_grad();
    double* grad();
    const double* grad() const;

    Tensor clone() const;

    bool all_finite() const;

private:
    struct Impl {
        std::vector<int> shape;
        std::vector<double> values;
        std::vector<double> grad;  // empty unless participating in backprop
        bool requires_grad = false;
    };

    std::shared_ptr<Impl> impl_;

    Impl& impl();
    const Impl& impl() const;
};

std::string shape_str(const Tensor& t);
std::string shape_str(const std::vector<int>& shape);

// Record of one forward pass. Ops append backward closures; backward() runs
// them in reverse. A tape can be consumed exactly once; build a new tape for
// the next forward pass.
class Tape {
public:
    void record(std::function<void()> fn);
    void backward(const Tensor& loss);

    std::size_t num_ops() const { return ops_.size(); }
    bool consumed() const { return consumed_; }

private:
    std::vector<std::function<void()>> ops_;
    bool consumed_ = false;
};

enum class UnaryFn { Sigmoid, Tanh, Relu };
enum class BinaryFn { Add, Sub, Mul, ConcatLastDim };

UnaryFn unary_fn_from_name(std::string_view name);
BinaryFn binary_fn_from_name(std::string_view name);

// Differentiable operations. `tape` may be null for inference; gradients are
// then not tracked. Gradients flow into every input that has a grad buffer.
namespace ops {

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b);

Tensor unary_map(Tape* tape, const Tensor& x, UnaryFn fn);
Tensor sigmoid(Tape* tape, const Tensor& x);
Tensor tanh(Tape* tape, const Tensor& x);
Tensor relu(Tape* tape, const Tensor& x);

// Elementwise add/sub/mul support equal shapes, a scalar operand, or a
// row-vector operand against a matrix (bias broadcasting). ConcatLastDim
// requires equal leading dimensions.
Tensor binary_map(Tape* tape, const Tensor& a, const Tensor& b, BinaryFn fn);
Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape* tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor concat_cols(Tape* tape, const Tensor& a, const Tensor& b);

Tensor log(Tape* tape, const Tensor& x);
Tensor abs(Tape* tape, const Tensor& x);
Tensor clamp(Tape* tape, const Tensor& x, double lo, double hi);
Tensor scale(Tape* tape, const Tensor& x, double c);
Tensor slice_cols(Tape* tape, const Tensor& x, int col_begin, int col_end);
Tensor reshape(Tape* tape, const Tensor& x, std::vector<int> new_shape);
Tensor sum_all(Tape* tape, const Tensor& x);
Tensor mean_all(Tape* tape, const Tensor& x);

// Left-multiplies each of the B stacked N x d blocks of `h` by the N x N
// matrix `a_hat`. Gradients flow into `h` only; `a_hat` is fixed structure.
Tensor adj_mix(Tape* tape, const Tensor& a_hat, const Tensor& h);

}  // namespace ops

// Raw row-major kernels shared by ops and by modules that assemble data
// outside the tape. C = A * B, optionally accumulating into C.
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate);
std::vector<double> transposed(const double* a, int rows, int cols);

}  // namespace stdgi
