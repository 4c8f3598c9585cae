#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stdlab/params.hpp"
#include "stdlab/tensor.hpp"

namespace stdlab {

// Reverse-mode autodiff over matrix nodes. Nodes are created in topological
// order, so backward is a single reverse sweep. Parameters enter via param()
// and can be bound as constants (trainable = false), in which case no gradient
// is tracked for them at all.
class Graph {
public:
    int constant(Tensor t);
    int param(const ParamStore& store, const std::string& name, bool trainable = true);

    // elementwise / structural
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);         // hadamard
    int scale(int a, double c);
    int add_scalar(int a, double c);
    int scale_rows(int a, const std::vector<double>& r);  // row i scaled by r[i]
    int add_rowvec(int a, int bias);                      // bias is 1 x cols
    int tanh_op(int a);
    int relu(int a);
    int matmul(int a, int b);
    int embedding(int table, const std::vector<int>& rows);  // gathers rows
    int concat_cols(const std::vector<int>& parts);
    int sum_all(int a);  // 1 x 1

    void backward(int loss);

    const Tensor& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
    const Tensor& grad(int id) const;
    double scalar(int id) const;  // value of a 1 x 1 node

    // Gradient snapshot for every entry of the store (zero where unused).
    // Multiple bindings of one entry accumulate.
    ParamStore grads_for(const ParamStore& store) const;

    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool needs_grad = false;
        std::function<void()> backprop;  // captures indices; reads/writes via graph
    };
    struct Binding {
        const ParamStore* store;
        std::string name;
        int node;
    };

    int push(Tensor value, bool needs_grad, std::function<void()> backprop = nullptr);
    Tensor& grad_mut(int id) { return nodes_[static_cast<size_t>(id)].grad; }
    void ensure_grad(int id);

    std::vector<Node> nodes_;
    std::vector<Binding> bindings_;
    bool backward_done_ = false;
};

}  // namespace stdlab
