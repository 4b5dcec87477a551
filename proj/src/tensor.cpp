#include "prl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace prl {

int64_t numel(const Shape& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeError("non-positive extent in shape " + shape_str(shape));
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

namespace detail {

bool& finite_checks() {
    static bool enabled = true;
    return enabled;
}

void check_finite(const char* op, const std::vector<Real>& v) {
    if (!finite_checks()) return;
    for (Real x : v) {
        if (!std::isfinite(x)) {
            throw NumericalError(std::string("non-finite value produced by op '") + op + "'");
        }
    }
}

Tensor make_op(const char* op, Shape shape, std::vector<Real> value,
               const std::vector<Tensor>& parents, std::function<void(Node&)> backward_fn) {
    if (numel(shape) != static_cast<int64_t>(value.size())) {
        throw ShapeError(std::string("op '") + op + "': value size does not match shape " +
                         shape_str(shape));
    }
    check_finite(op, value);
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->op = op;
    for (const auto& p : parents) {
        if (p.node()->requires_grad) n->requires_grad = true;
    }
    if (n->requires_grad) {
        for (const auto& p : parents) n->parents.push_back(p.node());
        n->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(n));
}

}  // namespace detail

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return from_data(shape, std::vector<Real>(numel(shape), 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, Real v, bool requires_grad) {
    return from_data(shape, std::vector<Real>(numel(shape), v), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<Real> data, bool requires_grad) {
    if (numel(shape) != static_cast<int64_t>(data.size())) {
        throw ShapeError("data length does not match shape " + shape_str(shape));
    }
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::scalar(Real v) { return from_data({1}, {v}); }

int Tensor::dim(int i) const {
    const auto& s = check().shape;
    if (i < 0) i += static_cast<int>(s.size());
    if (i < 0 || i >= static_cast<int>(s.size())) throw ShapeError("dim index out of range");
    return s[i];
}

std::vector<Real>& Tensor::mutable_values() {
    auto& n = check();
    if (n.backward_fn) throw Error("mutable_values() on a non-leaf tensor");
    return n.value;
}

Real Tensor::item() const {
    const auto& n = check();
    if (n.value.size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(n.shape));
    return n.value[0];
}

Real Tensor::at(std::initializer_list<int> idx) const {
    const auto& n = check();
    if (idx.size() != n.shape.size()) throw ShapeError("at(): index rank mismatch");
    int64_t flat = 0;
    int i = 0;
    for (int v : idx) {
        if (v < 0 || v >= n.shape[i]) throw ShapeError("at(): index out of range");
        flat = flat * n.shape[i] + v;
        ++i;
    }
    return n.value[flat];
}

void Tensor::set_requires_grad(bool v) { check().requires_grad = v; }

const std::vector<Real>& Tensor::grad() const {
    auto& n = check();
    n.ensure_grad();
    return n.grad;
}

void Tensor::zero_grad() {
    auto& n = check();
    std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

void Tensor::backward() const {
    auto& root = check();
    if (root.value.size() != 1) throw ShapeError("backward() requires a scalar root");

    // Iterative post-order DFS; graphs can be deep enough that recursion is
    // not worth the risk.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, size_t>> stack;
    stack.emplace_back(&root, 0);
    visited.insert(&root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::Node* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root.ensure_grad();
    root.grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

}  // namespace prl
