#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace epitwin::ad {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_size(const Shape& s);

class Tape;

/// Dense row-major array of doubles. Value semantics; the buffer is
/// shared between copies and treated as immutable once an op has
/// consumed it (values_mut is for leaves owned by an optimizer).
/// A tensor is "tracked" when it was produced on a Tape.
class Tensor {
public:
    Tensor() = default;

    static Tensor scalar(double v);
    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);
    static Tensor from(Shape shape, std::vector<double> values);
    /// Allocated but uninitialized; for kernel outputs.
    static Tensor uninit(Shape shape);

    bool defined() const { return data_ != nullptr; }
    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_ ? data_->size() : 0; }
    std::size_t rank() const { return shape_.size(); }

    std::span<const double> values() const;
    /// Mutable view; only meaningful for untracked tensors (optimizer
    /// state, dataset buffers).
    std::span<double> values_mut();

    /// The single element of a size-1 tensor.
    double item() const;
    double at(std::size_t i) const { return (*data_)[i]; }

    bool all_finite() const;

    bool tracked() const { return tape_ != nullptr; }
    Tape* tape() const { return tape_; }
    int node() const { return node_; }

    /// Same shape and bitwise-equal values.
    bool identical(const Tensor& other) const;

    /// Same buffer and shape without tape linkage.
    Tensor detach() const
    {
        Tensor t = *this;
        t.tape_ = nullptr;
        t.node_ = -1;
        return t;
    }

private:
    friend class Tape;
    Shape shape_;
    std::shared_ptr<std::vector<double>> data_;
    Tape* tape_ = nullptr;
    int node_ = -1;
};

/// Collects parent adjoints during a backward sweep.
class Accum {
public:
    explicit Accum(std::size_t n_nodes) : adjoint_(n_nodes) {}
    void add(int node, const Tensor& grad);
    const Tensor& at(int node) const { return adjoint_[static_cast<std::size_t>(node)]; }
    bool has(int node) const { return adjoint_[static_cast<std::size_t>(node)].defined(); }

private:
    std::vector<Tensor> adjoint_;
};

/// Gradient of a scalar root with respect to each tracked leaf.
/// Leaves the root does not depend on read back as zeros.
class Gradients {
public:
    const Tensor& at(const Tensor& leaf) const;
    bool all_finite() const;

private:
    friend class Tape;
    const Tape* tape_ = nullptr;
    std::vector<Tensor> by_leaf_; // indexed by leaf ordinal
};

/// Ordered record of primitive ops. Replaying the backward closures in
/// reverse record order accumulates exact adjoints; fan-out adds.
/// A tape and its tensors belong to one evaluation context.
class Tape {
public:
    using BackFn = std::function<void(const Tensor& out_grad, Accum& acc)>;

    /// Register a tracked leaf holding a copy of `value`'s buffer.
    Tensor var(const Tensor& value);

    /// Record an interior node; returns its id. Used by the op layer.
    int record(BackFn back);
    /// Bind an op result to a node of this tape.
    void bind(Tensor& t, int node) const;

    /// Reverse sweep from a scalar root.
    Gradients backward(const Tensor& root) const;

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t leaf_count() const { return leaves_.size(); }
    /// Leaf ordinal of a node, or -1 when the node is interior.
    int leaf_ordinal(int node) const { return nodes_[static_cast<std::size_t>(node)].leaf_ordinal; }

private:
    struct Node {
        BackFn back;      // empty for leaves
        int leaf_ordinal; // -1 for interior nodes
    };
    struct Leaf {
        int node;
        Shape shape;
    };
    std::vector<Node> nodes_;
    std::vector<Leaf> leaves_;
};

/// Pick the common tape of an op's operands; null when untracked.
/// Mixing tapes is a contract violation.
Tape* common_tape(const Tensor& a);
Tape* common_tape(const Tensor& a, const Tensor& b);
Tape* common_tape(std::span<const Tensor> ts);

} // namespace epitwin::ad
