#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "hazeforge/common.hpp"

namespace hazeforge {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

// Dense channels-first tensor. Value handle over shared storage: copies
// alias the same buffer, which is what the tape needs to keep a graph
// alive across scopes. Gradients live next to the data and are only
// allocated for tensors that require them.
class Tensor {
public:
    struct Impl {
        Shape shape;
        std::vector<real> data;
        std::vector<real> grad;  // empty unless requires_grad
        bool requires_grad = false;
    };

    Tensor() : impl_(std::make_shared<Impl>()) {}

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, real value);
    static Tensor from(Shape shape, std::vector<real> values);

    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t numel() const { return impl_->data.size(); }
    std::size_t extent(std::size_t dim) const { return impl_->shape.at(dim); }

    real* data() { return impl_->data.data(); }
    const real* data() const { return impl_->data.data(); }
    std::vector<real>& vec() { return impl_->data; }
    const std::vector<real>& vec() const { return impl_->data; }

    real& operator[](std::size_t i) { return impl_->data[i]; }
    real operator[](std::size_t i) const { return impl_->data[i]; }

    // 4-D convenience accessor (batch, channel, row, col).
    real& at(std::size_t b, std::size_t c, std::size_t y, std::size_t x);
    real at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const;

    Tensor& set_requires_grad(bool on);
    bool requires_grad() const { return impl_->requires_grad; }

    bool has_grad() const { return !impl_->grad.empty(); }
    real* grad_data();
    const std::vector<real>& grad() const;
    void zero_grad();

    // Same data, fresh handle outside any graph.
    Tensor detach() const;
    Tensor clone() const;

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return impl_->shape == other.impl_->shape; }

    std::shared_ptr<Impl> impl() const { return impl_; }

private:
    explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<Impl> impl_;
};

// Reverse-mode tape, rebuilt every forward pass. Constructing a Tape
// pushes it as the active recorder; ops executed while one is active
// append a backward rule when any input requires grad. backward() runs
// the rules once in reverse order and then marks the tape consumed.
class Tape {
public:
    struct Op {
        std::string name;
        std::vector<std::shared_ptr<Tensor::Impl>> inputs;
        std::shared_ptr<Tensor::Impl> output;
        std::function<void()> backward;
    };

    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    void record(Op op);
    void backward(const Tensor& loss);

    std::size_t size() const { return ops_.size(); }
    bool consumed() const { return consumed_; }

    static Tape* active();

private:
    std::vector<Op> ops_;
    bool consumed_ = false;
};

// Ensures grad storage exists and is zeroed on first touch within a backward pass.
std::vector<real>& ensure_grad(const std::shared_ptr<Tensor::Impl>& impl);

}  // namespace hazeforge
