#include "jers/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace jers {

namespace {

thread_local bool g_grad_enabled = true;

int64_t shape_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t e : shape) {
        if (e <= 0) throw DimensionError("tensor extents must be positive");
        n *= e;
    }
    return n;
}

std::string shape_str(const std::vector<int64_t>& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
}

} // namespace

// ---- Tensor -------------------------------------------------------------

Tensor Tensor::zeros(std::vector<int64_t> shape, bool requires_grad) {
    auto impl = std::make_shared<detail::TensorImpl>();
    int64_t n = shape_numel(shape);
    impl->shape = std::move(shape);
    impl->data.assign(static_cast<size_t>(n), real(0));
    impl->requires_grad = requires_grad;
    return wrap(std::move(impl));
}

Tensor Tensor::full(std::vector<int64_t> shape, real value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
    return t;
}

Tensor Tensor::from_data(std::vector<int64_t> shape, std::vector<real> values,
                         bool requires_grad) {
    int64_t n = shape_numel(shape);
    if (n != static_cast<int64_t>(values.size())) {
        throw DimensionError("from_data: value count does not match shape product");
    }
    auto impl = std::make_shared<detail::TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(values);
    impl->requires_grad = requires_grad;
    return wrap(std::move(impl));
}

Tensor Tensor::scalar(real value) {
    auto impl = std::make_shared<detail::TensorImpl>();
    impl->data.assign(1, value);
    return wrap(std::move(impl));
}

Tensor Tensor::wrap(std::shared_ptr<detail::TensorImpl> impl) {
    Tensor t;
    t.impl_ = std::move(impl);
    return t;
}

const std::vector<int64_t>& Tensor::shape() const {
    if (!impl_) throw ValueError("use of undefined tensor");
    return impl_->shape;
}

int64_t Tensor::dim(int axis) const {
    const auto& s = shape();
    if (axis < 0 || axis >= static_cast<int>(s.size())) {
        throw DimensionError("dim: axis out of range");
    }
    return s[axis];
}

int64_t Tensor::numel() const {
    if (!impl_) throw ValueError("use of undefined tensor");
    return impl_->numel();
}

const real* Tensor::data() const {
    if (!impl_) throw ValueError("use of undefined tensor");
    return impl_->data.data();
}

real* Tensor::data() {
    if (!impl_) throw ValueError("use of undefined tensor");
    return impl_->data.data();
}

const std::vector<real>& Tensor::values() const {
    if (!impl_) throw ValueError("use of undefined tensor");
    return impl_->data;
}

real Tensor::item() const {
    if (numel() != 1) throw ValueError("item: tensor is not a scalar");
    return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool rg) {
    if (!impl_) throw ValueError("use of undefined tensor");
    if (impl_->node) throw ValueError("set_requires_grad: only leaf tensors may be toggled");
    impl_->requires_grad = rg;
    return *this;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

const std::vector<real>& Tensor::grad() const {
    if (!has_grad()) throw ValueError("grad: no gradient present; run backward first");
    return impl_->grad;
}

void Tensor::zero_grad() {
    if (impl_) impl_->grad.clear();
}

// ---- grad mode ----------------------------------------------------------

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

// ---- op helpers ---------------------------------------------------------

namespace detail {

bool wants_grad(std::initializer_list<const Tensor*> inputs) {
    if (!g_grad_enabled) return false;
    for (const Tensor* t : inputs) {
        if (t->requires_grad()) return true;
    }
    return false;
}

void record(const char* op, std::initializer_list<const Tensor*> inputs, Tensor& out,
            std::function<void()> backward_fn) {
    auto node = std::make_shared<TapeNode>();
    node->op = op;
    node->inputs.reserve(inputs.size());
    for (const Tensor* t : inputs) node->inputs.push_back(t->impl());
    node->output = out.impl().get();
    node->backward = std::move(backward_fn);
    out.impl()->node = std::move(node);
    out.impl()->requires_grad = true;
}

void check_finite(const char* op, const Tensor& t) {
    const real* p = t.data();
    int64_t n = t.numel();
    for (int64_t i = 0; i < n; ++i) {
        if (!std::isfinite(p[i])) {
            throw NumericError(std::string(op) + " produced a non-finite value");
        }
    }
}

void ensure_grad(TensorImpl* t) {
    if (t->grad.size() != t->data.size()) t->grad.assign(t->data.size(), real(0));
}

} // namespace detail

// ---- backward engine ----------------------------------------------------

void backward(const Tensor& root) {
    if (!root.defined()) throw ValueError("backward: undefined tensor");
    if (root.numel() != 1) throw ValueError("backward: root must be a scalar");

    using detail::TapeNode;
    using detail::TensorImpl;

    // Reverse topological order via iterative post-order DFS.
    std::vector<TapeNode*> order;
    std::unordered_set<TapeNode*> visited;
    struct Frame {
        TapeNode* node;
        size_t next_input;
    };
    std::vector<Frame> stack;

    TapeNode* root_node = root.impl()->node.get();
    if (root_node) {
        visited.insert(root_node);
        stack.push_back({root_node, 0});
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next_input < f.node->inputs.size()) {
                TapeNode* child = f.node->inputs[f.next_input++]->node.get();
                if (child && visited.insert(child).second) {
                    stack.push_back({child, 0});
                }
            } else {
                order.push_back(f.node);
                stack.pop_back();
            }
        }
    }

    // Reset grads of everything reachable so repeated passes start clean.
    std::unordered_set<TensorImpl*> reachable;
    reachable.insert(root.impl().get());
    for (TapeNode* n : order) {
        reachable.insert(n->output);
        for (auto& in : n->inputs) reachable.insert(in.get());
    }
    for (TensorImpl* t : reachable) t->grad.assign(t->data.size(), real(0));

    root.impl()->grad[0] = real(1);

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        (*it)->backward();
    }
}

// ---- elementwise --------------------------------------------------------

namespace {

using detail::TensorImpl;

// Shared skeleton for same-shape binary elementwise ops.
template <class Fwd, class Bwd>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, Fwd fwd, Bwd bwd) {
    require_same_shape(name, a, b);
    Tensor out = Tensor::zeros(a.shape());
    const real* pa = a.data();
    const real* pb = b.data();
    real* po = out.data();
    int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = fwd(pa[i], pb[i]);
    detail::check_finite(name, out);
    if (detail::wants_grad({&a, &b})) {
        auto ai = a.impl().get();
        auto bi = b.impl().get();
        auto oi = out.impl().get();
        detail::record(name, {&a, &b}, out, [ai, bi, oi, bwd, n] {
            if (ai->requires_grad) detail::ensure_grad(ai);
            if (bi->requires_grad) detail::ensure_grad(bi);
            for (int64_t i = 0; i < n; ++i) {
                real g = oi->grad[i];
                auto [da, db] = bwd(ai->data[i], bi->data[i], oi->data[i]);
                if (ai->requires_grad) ai->grad[i] += g * da;
                if (bi->requires_grad) bi->grad[i] += g * db;
            }
        });
    }
    return out;
}

template <class Fwd, class Bwd>
Tensor unary_op(const char* name, const Tensor& a, Fwd fwd, Bwd bwd) {
    Tensor out = Tensor::zeros(a.shape());
    const real* pa = a.data();
    real* po = out.data();
    int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = fwd(pa[i]);
    detail::check_finite(name, out);
    if (detail::wants_grad({&a})) {
        auto ai = a.impl().get();
        auto oi = out.impl().get();
        detail::record(name, {&a}, out, [ai, oi, bwd, n] {
            detail::ensure_grad(ai);
            for (int64_t i = 0; i < n; ++i) {
                ai->grad[i] += oi->grad[i] * bwd(ai->data[i], oi->data[i]);
            }
        });
    }
    return out;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        "add", a, b, [](real x, real y) { return x + y; },
        [](real, real, real) { return std::pair<real, real>(1, 1); });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        "sub", a, b, [](real x, real y) { return x - y; },
        [](real, real, real) { return std::pair<real, real>(1, -1); });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        "mul", a, b, [](real x, real y) { return x * y; },
        [](real x, real y, real) { return std::pair<real, real>(y, x); });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_op(
        "div", a, b, [](real x, real y) { return x / y; },
        [](real x, real y, real) {
            real inv = real(1) / y;
            return std::pair<real, real>(inv, -x * inv * inv);
        });
}

Tensor neg(const Tensor& a) {
    return unary_op(
        "neg", a, [](real x) { return -x; }, [](real, real) { return real(-1); });
}

Tensor add_scalar(const Tensor& a, real c) {
    return unary_op(
        "add_scalar", a, [c](real x) { return x + c; }, [](real, real) { return real(1); });
}

Tensor mul_scalar(const Tensor& a, real c) {
    return unary_op(
        "mul_scalar", a, [c](real x) { return x * c; }, [c](real, real) { return c; });
}

Tensor max_scalar(const Tensor& a, real c) {
    return unary_op(
        "max_scalar", a, [c](real x) { return x > c ? x : c; },
        [c](real x, real) { return x > c ? real(1) : real(0); });
}

Tensor square(const Tensor& a) {
    return unary_op(
        "square", a, [](real x) { return x * x; }, [](real x, real) { return 2 * x; });
}

Tensor log(const Tensor& a) {
    return unary_op(
        "log", a, [](real x) { return std::log(x); },
        [](real x, real) { return real(1) / x; });
}

// ---- reductions ---------------------------------------------------------

Tensor sum(const Tensor& a) {
    Tensor out = Tensor::scalar(0);
    const real* pa = a.data();
    int64_t n = a.numel();
    double acc = 0;
    for (int64_t i = 0; i < n; ++i) acc += pa[i];
    out.data()[0] = static_cast<real>(acc);
    detail::check_finite("sum", out);
    if (detail::wants_grad({&a})) {
        auto ai = a.impl().get();
        auto oi = out.impl().get();
        detail::record("sum", {&a}, out, [ai, oi, n] {
            detail::ensure_grad(ai);
            real g = oi->grad[0];
            for (int64_t i = 0; i < n; ++i) ai->grad[i] += g;
        });
    }
    return out;
}

Tensor mean(const Tensor& a) {
    Tensor out = Tensor::scalar(0);
    const real* pa = a.data();
    int64_t n = a.numel();
    double acc = 0;
    for (int64_t i = 0; i < n; ++i) acc += pa[i];
    out.data()[0] = static_cast<real>(acc / static_cast<double>(n));
    detail::check_finite("mean", out);
    if (detail::wants_grad({&a})) {
        auto ai = a.impl().get();
        auto oi = out.impl().get();
        detail::record("mean", {&a}, out, [ai, oi, n] {
            detail::ensure_grad(ai);
            real g = oi->grad[0] / static_cast<real>(n);
            for (int64_t i = 0; i < n; ++i) ai->grad[i] += g;
        });
    }
    return out;
}

// ---- activations --------------------------------------------------------

Tensor leaky_relu(const Tensor& a, real negative_slope) {
    return unary_op(
        "leaky_relu", a,
        [negative_slope](real x) { return x >= 0 ? x : negative_slope * x; },
        [negative_slope](real x, real) { return x >= 0 ? real(1) : negative_slope; });
}

Tensor steep_sigmoid(const Tensor& a, real slope) {
    if (!(slope > 0)) throw ValueError("steep_sigmoid: slope must be positive");
    return unary_op(
        "steep_sigmoid", a,
        [slope](real x) { return real(1) / (real(1) + std::exp(-slope * x)); },
        [slope](real, real y) { return slope * y * (real(1) - y); });
}

Tensor softmax_channels(const Tensor& a) {
    if (a.rank() != 4) throw DimensionError("softmax_channels: expected [C,X,Y,Z]");
    int64_t c = a.dim(0);
    int64_t vox = a.numel() / c;
    Tensor out = Tensor::zeros(a.shape());
    const real* pa = a.data();
    real* po = out.data();
    for (int64_t v = 0; v < vox; ++v) {
        real hi = pa[v];
        for (int64_t k = 1; k < c; ++k) hi = std::max(hi, pa[k * vox + v]);
        real denom = 0;
        for (int64_t k = 0; k < c; ++k) {
            real e = std::exp(pa[k * vox + v] - hi);
            po[k * vox + v] = e;
            denom += e;
        }
        real inv = real(1) / denom;
        for (int64_t k = 0; k < c; ++k) po[k * vox + v] *= inv;
    }
    detail::check_finite("softmax_channels", out);
    if (detail::wants_grad({&a})) {
        auto ai = a.impl().get();
        auto oi = out.impl().get();
        detail::record("softmax_channels", {&a}, out, [ai, oi, c, vox] {
            detail::ensure_grad(ai);
            for (int64_t v = 0; v < vox; ++v) {
                real dot = 0;
                for (int64_t k = 0; k < c; ++k) {
                    dot += oi->grad[k * vox + v] * oi->data[k * vox + v];
                }
                for (int64_t k = 0; k < c; ++k) {
                    int64_t i = k * vox + v;
                    ai->grad[i] += oi->data[i] * (oi->grad[i] - dot);
                }
            }
        });
    }
    return out;
}

} // namespace jers
