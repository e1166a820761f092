#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

#include "jers/common.hpp"

namespace jers {

class Tensor;

namespace detail {

struct TapeNode;

struct TensorImpl {
    std::vector<int64_t> shape;   // empty shape = scalar
    std::vector<real> data;       // row-major, last axis fastest
    std::vector<real> grad;       // filled by backward(); empty otherwise
    bool requires_grad = false;
    std::shared_ptr<TapeNode> node;   // producing op; null for leaves

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
};

// One recorded operation. `inputs` keep the upstream graph alive; `backward`
// reads output->grad and accumulates into each requires_grad input's grad.
struct TapeNode {
    const char* op = "";
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    TensorImpl* output = nullptr;
    std::function<void()> backward;
};

} // namespace detail

// Dense multi-dimensional array with reverse-mode autodiff. Handles share an
// immutable impl; ops return fresh tensors, and only backward() mutates grad
// buffers. Leaf data may be written through data() between graphs (parameter
// updates, initialization) but never while a recorded graph referencing the
// leaf is still to be differentiated.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int64_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<int64_t> shape, real value, bool requires_grad = false);
    static Tensor from_data(std::vector<int64_t> shape, std::vector<real> values,
                            bool requires_grad = false);
    static Tensor scalar(real value);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int64_t>& shape() const;
    int64_t dim(int axis) const;
    int rank() const { return static_cast<int>(shape().size()); }
    int64_t numel() const;

    const real* data() const;
    real* data();
    const std::vector<real>& values() const;
    real item() const;   // scalar tensors only

    bool requires_grad() const;
    Tensor& set_requires_grad(bool rg);
    bool has_grad() const;
    const std::vector<real>& grad() const;
    void zero_grad();

    const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
    static Tensor wrap(std::shared_ptr<detail::TensorImpl> impl);

private:
    std::shared_ptr<detail::TensorImpl> impl_;
};

// Disables tape recording on this thread while alive (inference, metrics).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

namespace detail {

// Op implementation helpers.
bool wants_grad(std::initializer_list<const Tensor*> inputs);
void record(const char* op, std::initializer_list<const Tensor*> inputs, Tensor& out,
            std::function<void()> backward_fn);
void check_finite(const char* op, const Tensor& t);
void ensure_grad(TensorImpl* t);

} // namespace detail

// ---- elementwise --------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor add_scalar(const Tensor& a, real c);
Tensor mul_scalar(const Tensor& a, real c);
Tensor max_scalar(const Tensor& a, real c);
Tensor square(const Tensor& a);
Tensor log(const Tensor& a);

// ---- reductions ---------------------------------------------------------
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// ---- activations --------------------------------------------------------
Tensor leaky_relu(const Tensor& a, real negative_slope);
// Elementwise 1/(1+exp(-slope*x)); with a large slope this is the smooth
// binarization surrogate used for extraction masks.
Tensor steep_sigmoid(const Tensor& a, real slope);
// Per-voxel softmax across the channel axis of a [C,X,Y,Z] tensor,
// max-shifted for stability.
Tensor softmax_channels(const Tensor& a);

// ---- shape --------------------------------------------------------------
Tensor reshape(const Tensor& a, std::vector<int64_t> shape);
Tensor concat_channels(const Tensor& a, const Tensor& b);        // [N,C,X,Y,Z]
Tensor stack_volumes(const std::vector<Tensor>& vols);           // C x [X,Y,Z] -> [C,X,Y,Z]

// ---- neural-net kernels -------------------------------------------------
// Cross-correlation of [N,Cin,X,Y,Z] with [Cout,Cin,k,k,k]; odd k; output
// extent floor((X + 2*padding - k)/stride) + 1 per axis.
Tensor conv3d(const Tensor& input, const Tensor& kernel, int stride, int padding);
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);    // [N,C,...] + [C]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias); // [N,F],[G,F],[G]
// Sliding cubic window sum over a [X,Y,Z] volume with zero contribution
// outside the volume, i.e. windows are clipped at the boundary.
Tensor box_sum(const Tensor& v, int window);
Tensor upsample_nearest2x(const Tensor& x);                      // [N,C,X,Y,Z]
Tensor global_mean_pool(const Tensor& x);                        // [N,C,X,Y,Z] -> [N,C]

// ---- backward engine ----------------------------------------------------
// Seeds d(root)/d(root) = 1 and walks the recorded graph in reverse
// topological order exactly once per node. Grad buffers of every tensor
// reachable from root are reset at the start of the call, so repeated
// backward passes in a training loop never see stale gradients; multiple
// uses of one tensor inside a single graph still accumulate additively.
void backward(const Tensor& root);

} // namespace jers
