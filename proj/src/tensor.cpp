#include "hazeforge/tensor.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace hazeforge {

int thread_cap() {
    const char* env = std::getenv("HAZEFORGE_THREADS");
    if (!env) return 0;
    int v = std::atoi(env);
    return v < 0 ? 0 : v;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

Tensor Tensor::zeros(Shape shape) {
    auto impl = std::make_shared<Impl>();
    impl->shape = std::move(shape);
    impl->data.assign(shape_numel(impl->shape), real(0));
    return Tensor(std::move(impl));
}

Tensor Tensor::full(Shape shape, real value) {
    Tensor t = zeros(std::move(shape));
    for (auto& v : t.impl_->data) v = value;
    return t;
}

Tensor Tensor::from(Shape shape, std::vector<real> values) {
    if (shape_numel(shape) != values.size())
        throw dim_error("tensor data length " + std::to_string(values.size()) +
                        " does not match shape " + shape_str(shape));
    auto impl = std::make_shared<Impl>();
    impl->shape = std::move(shape);
    impl->data = std::move(values);
    return Tensor(std::move(impl));
}

real& Tensor::at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) {
    const Shape& s = impl_->shape;
    return impl_->data[((b * s[1] + c) * s[2] + y) * s[3] + x];
}

real Tensor::at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    const Shape& s = impl_->shape;
    return impl_->data[((b * s[1] + c) * s[2] + y) * s[3] + x];
}

Tensor& Tensor::set_requires_grad(bool on) {
    impl_->requires_grad = on;
    if (!on) impl_->grad.clear();
    return *this;
}

real* Tensor::grad_data() {
    ensure_grad(impl_);
    return impl_->grad.data();
}

const std::vector<real>& Tensor::grad() const {
    if (impl_->grad.empty())
        throw state_error("gradient not populated; run backward() first");
    return impl_->grad;
}

void Tensor::zero_grad() {
    if (!impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), real(0));
}

Tensor Tensor::detach() const {
    auto impl = std::make_shared<Impl>();
    impl->shape = impl_->shape;
    impl->data = impl_->data;
    return Tensor(std::move(impl));
}

Tensor Tensor::clone() const {
    Tensor t = detach();
    t.impl_->requires_grad = impl_->requires_grad;
    return t;
}

bool Tensor::all_finite() const {
    for (real v : impl_->data)
        if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
}

std::vector<real>& ensure_grad(const std::shared_ptr<Tensor::Impl>& impl) {
    if (impl->grad.empty()) impl->grad.assign(impl->data.size(), real(0));
    return impl->grad;
}

namespace {
// Tapes nest (a discriminator step inside a generator pass); ops record
// to the innermost one.
thread_local std::vector<Tape*> g_tape_stack;
}  // namespace

Tape::Tape() { g_tape_stack.push_back(this); }

Tape::~Tape() {
    if (!g_tape_stack.empty() && g_tape_stack.back() == this) g_tape_stack.pop_back();
}

Tape* Tape::active() { return g_tape_stack.empty() ? nullptr : g_tape_stack.back(); }

void Tape::record(Op op) { ops_.push_back(std::move(op)); }

void Tape::backward(const Tensor& loss) {
    if (consumed_)
        throw state_error("backward() already ran on this tape; rebuild the graph first");
    if (loss.numel() != 1)
        throw state_error("backward() expects a scalar loss, got shape " + shape_str(loss.shape()));
    if (ops_.empty()) throw state_error("backward() on an empty tape");

    bool found = false;
    for (const auto& op : ops_) {
        if (op.output == loss.impl()) {
            found = true;
            break;
        }
    }
    if (!found) throw state_error("loss tensor is not attached to this tape");

    consumed_ = true;
    ensure_grad(loss.impl())[0] = real(1);
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
        // Skip ops whose output never received a gradient: they feed no
        // path to the loss.
        if (it->output->grad.empty()) continue;
        it->backward();
    }
}

}  // namespace hazeforge
