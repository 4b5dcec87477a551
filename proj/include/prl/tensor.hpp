#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "prl/errors.hpp"

namespace prl {

// Test precision is 64-bit; the serialized form (PRLT) is 32-bit.
using Real = double;
using Shape = std::vector<int>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
    Shape shape;
    std::vector<Real> value;
    std::vector<Real> grad;  // allocated on first use
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this->grad, accumulates into parents' grad.
    std::function<void(Node&)> backward_fn;

    std::vector<Real>& ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
        return grad;
    }
};

// Global toggle for the finite-output contract check (on by default).
bool& finite_checks();
void check_finite(const char* op, const std::vector<Real>& v);

}  // namespace detail

// Dense n-d array with shape metadata. Copying a Tensor copies a handle to a
// shared node; node values are immutable after an op builds them, except for
// leaf parameters between training steps and gradient accumulation during
// backward().
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, Real v, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<Real> data, bool requires_grad = false);
    static Tensor scalar(Real v);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return check().shape; }
    int rank() const { return static_cast<int>(check().shape.size()); }
    int dim(int i) const;
    int64_t size() const { return static_cast<int64_t>(check().value.size()); }

    const std::vector<Real>& values() const { return check().value; }
    // Leaf tensors only; used for parameter init and optimizer updates.
    std::vector<Real>& mutable_values();
    Real item() const;
    Real at(std::initializer_list<int> idx) const;

    bool requires_grad() const { return check().requires_grad; }
    void set_requires_grad(bool v);
    const std::vector<Real>& grad() const;
    void zero_grad();

    // Reverse-mode sweep from a scalar root; gradients accumulate additively
    // into every reachable tensor with requires_grad.
    void backward() const;

    std::shared_ptr<detail::Node> node() const { return node_; }

  private:
    detail::Node& check() const {
        if (!node_) throw Error("use of undefined tensor");
        return *node_;
    }
    std::shared_ptr<detail::Node> node_;
};

namespace detail {

// Builds an op node. If no parent requires grad the parents and closure are
// dropped so dead subgraphs free eagerly.
Tensor make_op(const char* op, Shape shape, std::vector<Real> value,
               const std::vector<Tensor>& parents, std::function<void(Node&)> backward_fn);

}  // namespace detail

}  // namespace prl
