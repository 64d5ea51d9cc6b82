#include "epitwin/ad/tensor.hpp"

#include "epitwin/kern/kernels.hpp"
#include "epitwin/util/error.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace epitwin::ad {

std::string shape_str(const Shape& s)
{
    std::ostringstream out;
    out << '(';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i)
            out << ',';
        out << s[i];
    }
    out << ')';
    return out.str();
}

std::size_t shape_size(const Shape& s)
{
    std::size_t n = 1;
    for (std::size_t e : s)
        n *= e;
    return n;
}

Tensor Tensor::scalar(double v)
{
    Tensor t;
    t.shape_ = {};
    t.data_ = std::make_shared<std::vector<double>>(1, v);
    return t;
}

Tensor Tensor::zeros(Shape shape)
{
    return full(std::move(shape), 0.0);
}

Tensor Tensor::full(Shape shape, double v)
{
    Tensor t;
    t.data_ = std::make_shared<std::vector<double>>(shape_size(shape), v);
    t.shape_ = std::move(shape);
    return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values)
{
    require(shape_size(shape) == values.size(), Errc::shape_error,
            "value count " + std::to_string(values.size()) + " does not fill shape " + shape_str(shape));
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::make_shared<std::vector<double>>(std::move(values));
    return t;
}

Tensor Tensor::uninit(Shape shape)
{
    Tensor t;
    t.data_ = std::make_shared<std::vector<double>>(shape_size(shape));
    t.shape_ = std::move(shape);
    return t;
}

std::span<const double> Tensor::values() const
{
    require(defined(), Errc::contract_error, "reading an undefined tensor");
    return {data_->data(), data_->size()};
}

std::span<double> Tensor::values_mut()
{
    require(defined(), Errc::contract_error, "mutating an undefined tensor");
    require(!tracked(), Errc::contract_error, "mutating a tracked tensor would corrupt the tape");
    return {data_->data(), data_->size()};
}

double Tensor::item() const
{
    require(size() == 1, Errc::contract_error, "item() on tensor of shape " + shape_str(shape_));
    return (*data_)[0];
}

bool Tensor::all_finite() const
{
    for (double v : values())
        if (!std::isfinite(v))
            return false;
    return true;
}

bool Tensor::identical(const Tensor& other) const
{
    if (shape_ != other.shape_ || size() != other.size())
        return false;
    if (size() == 0)
        return true;
    return std::memcmp(data_->data(), other.data_->data(), size() * sizeof(double)) == 0;
}

void Accum::add(int node, const Tensor& grad)
{
    Tensor& slot = adjoint_[static_cast<std::size_t>(node)];
    if (!slot.defined()) {
        // Copy so later in-place accumulation cannot alias an op output.
        slot = Tensor::from(grad.shape(), std::vector<double>(grad.values().begin(), grad.values().end()));
        return;
    }
    require(slot.shape() == grad.shape(), Errc::shape_error,
            "adjoint shape mismatch " + shape_str(slot.shape()) + " vs " + shape_str(grad.shape()));
    kern::add_inplace(slot.values_mut().data(), grad.values().data(), grad.size());
}

const Tensor& Gradients::at(const Tensor& leaf) const
{
    require(leaf.tracked() && leaf.tape() == tape_, Errc::contract_error,
            "gradient lookup for a tensor that is not a leaf of this tape");
    int ordinal = tape_->leaf_ordinal(leaf.node());
    require(ordinal >= 0, Errc::contract_error,
            "gradient lookup for an interior node; only var() leaves carry gradients");
    return by_leaf_[static_cast<std::size_t>(ordinal)];
}

bool Gradients::all_finite() const
{
    for (const auto& g : by_leaf_)
        if (g.defined() && !g.all_finite())
            return false;
    return true;
}

Tensor Tape::var(const Tensor& value)
{
    require(value.defined(), Errc::contract_error, "var() on undefined tensor");
    Tensor leaf;
    leaf.shape_ = value.shape();
    leaf.data_ = std::make_shared<std::vector<double>>(value.values().begin(), value.values().end());
    int node = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{BackFn{}, static_cast<int>(leaves_.size())});
    leaves_.push_back(Leaf{node, leaf.shape_});
    leaf.tape_ = this;
    leaf.node_ = node;
    return leaf;
}

int Tape::record(BackFn back)
{
    nodes_.push_back(Node{std::move(back), -1});
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::bind(Tensor& t, int node) const
{
    t.tape_ = const_cast<Tape*>(this);
    t.node_ = node;
}

Gradients Tape::backward(const Tensor& root) const
{
    require(root.tracked() && root.tape() == this, Errc::contract_error,
            "backward root is not on this tape");
    require(root.size() == 1, Errc::contract_error,
            "backward requires a scalar root, got shape " + shape_str(root.shape()));

    Accum acc(nodes_.size());
    Tensor seed = Tensor::full(root.shape(), 1.0);
    acc.add(root.node(), seed);

    for (int i = root.node(); i >= 0; --i) {
        if (!acc.has(i))
            continue;
        const Node& node = nodes_[static_cast<std::size_t>(i)];
        if (node.back)
            node.back(acc.at(i), acc);
    }

    Gradients out;
    out.tape_ = this;
    out.by_leaf_.resize(leaves_.size());
    for (std::size_t l = 0; l < leaves_.size(); ++l) {
        if (acc.has(leaves_[l].node))
            out.by_leaf_[l] = acc.at(leaves_[l].node);
        else
            out.by_leaf_[l] = Tensor::zeros(leaves_[l].shape);
    }
    return out;
}

Tape* common_tape(const Tensor& a)
{
    return a.tape();
}

Tape* common_tape(const Tensor& a, const Tensor& b)
{
    if (a.tracked() && b.tracked()) {
        require(a.tape() == b.tape(), Errc::contract_error,
                "operands live on different tapes");
        return a.tape();
    }
    return a.tracked() ? a.tape() : b.tape();
}

Tape* common_tape(std::span<const Tensor> ts)
{
    Tape* tape = nullptr;
    for (const auto& t : ts) {
        if (!t.tracked())
            continue;
        require(tape == nullptr || tape == t.tape(), Errc::contract_error,
                "operands live on different tapes");
        tape = t.tape();
    }
    return tape;
}

} // namespace epitwin::ad
