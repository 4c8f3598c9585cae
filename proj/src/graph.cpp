#include "stdlab/graph.hpp"

#include <cmath>

namespace stdlab {

int Graph::push(Tensor value, bool needs_grad, std::function<void()> backprop) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

void Graph::ensure_grad(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.size() != n.value.size()) {
        n.grad = Tensor(n.value.rows, n.value.cols, 0.0);
    }
}

const Tensor& Graph::grad(int id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.size() != n.value.size()) {
        throw std::logic_error("Graph::grad: no gradient recorded for this node");
    }
    return n.grad;
}

double Graph::scalar(int id) const {
    const Tensor& t = value(id);
    if (t.rows != 1 || t.cols != 1) throw std::invalid_argument("Graph::scalar: node is not 1x1");
    return t.v[0];
}

int Graph::constant(Tensor t) { return push(std::move(t), false); }

int Graph::param(const ParamStore& store, const std::string& name, bool trainable) {
    const ParamEntry& e = store.at(name);
    Tensor t;
    if (e.shape.size() == 2) {
        t = Tensor(static_cast<size_t>(e.shape[0]), static_cast<size_t>(e.shape[1]));
    } else if (e.shape.size() == 1) {
        t = Tensor(1, static_cast<size_t>(e.shape[0]));
    } else {
        throw std::invalid_argument("Graph::param: only rank 1 or 2 entries supported");
    }
    t.v = e.data;
    int id = push(std::move(t), trainable);
    if (trainable) bindings_.push_back({&store, name, id});
    return id;
}

int Graph::add(int a, int b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) throw std::invalid_argument("Graph::add: shape mismatch");
    Tensor out = ta;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += tb.v[i];
    bool ng = nodes_[static_cast<size_t>(a)].needs_grad || nodes_[static_cast<size_t>(b)].needs_grad;
    int id = push(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[static_cast<size_t>(id)].backprop = [this, a, b, id]() {
            const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
            if (nodes_[static_cast<size_t>(a)].needs_grad) {
                ensure_grad(a);
                Tensor& ga = grad_mut(a);
                for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
            }
            if (nodes_[static_cast<size_t>(b)].needs_grad) {
                ensure_grad(b);
                Tensor& gb = grad_mut(b);
                for (size_t i = 0; i < g.v.size(); ++i) gb.v[i] += g.v[i];
            }
        };
    }
    return id;
}

int Graph::sub(int a, int b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) throw std::invalid_argument("Graph::sub: shape mismatch");
    Tensor out = ta;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] -= tb.v[i];
    bool ng = nodes_[static_cast<size_t>(a)].needs_grad || nodes_[static_cast<size_t>(b)].needs_grad;
    int id = push(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[static_cast<size_t>(id)].backprop = [this, a, b, id]() {
            const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
            if (nodes_[static_cast<size_t>(a)].needs_grad) {
                ensure_grad(a);
                Tensor& ga = grad_mut(a);
                for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
            }
            if (nodes_[static_cast<size_t>(b)].needs_grad) {
                ensure_grad(b);
                Tensor& gb = grad_mut(b);
                for (size_t i = 0; i < g.v.size(); ++i) gb.v[i] -= g.v[i];
            }
        };
    }
    return id;
}

int Graph::mul(int a, int b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) throw std::invalid_argument("Graph::mul: shape mismatch");
    Tensor out = ta;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= tb.v[i];
    bool ng = nodes_[static_cast<size_t>(a)].needs_grad || nodes_[static_cast<size_t>(b)].needs_grad;
    int id = push(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[static_cast<size_t>(id)].backprop = [this, a, b, id]() {
            const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
            const Tensor& va = nodes_[static_cast<size_t>(a)].value;
            const Tensor& vb = nodes_[static_cast<size_t>(b)].value;
            if (nodes_[static_cast<size_t>(a)].needs_grad) {
                ensure_grad(a);
                Tensor& ga = grad_mut(a);
                for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * vb.v[i];
            }
            if (nodes_[static_cast<size_t>(b)].needs_grad) {
                ensure_grad(b);
                Tensor& gb = grad_mut(b);
                for (size_t i = 0; i < g.v.size(); ++i) gb.v[i] += g.v[i] * va.v[i];
            }
        };
    }
    return id;
}

int Graph::scale(int a, double c) {
    Tensor out = value(a);
    for (auto& x : out.v) x *= c;
    bool ng = nodes_[static_cast<size_t>(a)].needs_grad;
    int id = push(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[static_cast<size_t>(id)].backprop = [this, a, c, id]() {
            const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
            ensure_grad(a);
            Tensor& ga = grad_mut(a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += c * g.v[i];
        };
    }
    return id;
}

int Graph::add_scalar(int a, double c) {
    Tensor out = value(a);
    for (auto& x : out.v) x += c;
    bool ng = nodes_[static_cast<size_t>(a)].needs_grad;
    int id = push(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[static_cast<size_t>(id)].backprop = [this, a, id]() {
            const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
            ensure_grad(a);
            Tensor& ga = grad_mut(a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
        };
    }
    return id;
}

int Graph::scale_rows(int a, const std::vector<double>& r) {
    const Tensor& ta = value(a);
    if (r.size() != ta.rows) throw std::invalid_argument("Graph::scale_rows: row count mismatch");
    Tensor out = ta;
    for (size_t i = 0; i < out.rows; ++i) {
        for (size_t j = 0; j < out.cols; ++j) out.v[i * out.cols + j] *= r[i];
    }
    bool ng = nodes_[static_cast<size_t>(a)].needs_grad;
    int id = push(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[static_cast<size_t>(id)].backprop = [this, a, r, id]() {
            const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
            ensure_grad(a);
            Tensor& ga = grad_mut(a);
            for (size_t i = 0; i < g.rows; ++i) {
                for (size_t j = 0; j < g.cols; ++j) ga.v[i * g.cols + j] += r[i] * g.v[i * g.cols + j];
            }
        };
    }
    return id;
}

int Graph::add_rowvec(int a, int bias) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(bias);
    if (tb.rows != 1 || tb.cols != ta.cols) throw std::invalid_argument("Graph::add_rowvec: bias shape");
    Tensor out = ta;
    for (size_t i = 0; i < out.rows; ++i) {
        for (size_t j = 0; j < out.cols; ++j) out.v[i * out.cols + j] += tb.v[j];
    }
    bool ng = nodes_[static_cast<size_t>(a)].needs_grad || nodes_[static_cast<size_t>(bias)].needs_grad;
    int id = push(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[static_cast<size_t>(id)].backprop = [this, a, bias, id]() {
            const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
            if (nodes_[static_cast<size_t>(a)].needs_grad) {
                ensure_grad(a);
                Tensor& ga = grad_mut(a);
                for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
            }
            if (nodes_[static_cast<size_t>(bias)].needs_grad) {
                ensure_grad(bias);
                Tensor& gb = grad_mut(bias);
                for (size_t i = 0; i < g.rows; ++i) {
                    for (size_t j = 0; j < g.cols; ++j) gb.v[j] += g.v[i * g.cols + j];
                }
            }
        };
    }
    return id;
}

int Graph::tanh_op(int a) {
    Tensor out = value(a);
    for (auto& x : out.v) x = std::tanh(x);
    bool ng = nodes_[static_cast<size_t>(a)].needs_grad;
    int id = push(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[static_cast<size_t>(id)].backprop = [this, a, id]() {
            const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
            const Tensor& y = nodes_[static_cast<size_t>(id)].value;
            ensure_grad(a);
            Tensor& ga = grad_mut(a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * (1.0 - y.v[i] * y.v[i]);
        };
    }
    return id;
}

int Graph::relu(int a) {
    Tensor out = value(a);
    for (auto& x : out.v) x = x > 0.0 ? x : 0.0;
    bool ng = nodes_[static_cast<size_t>(a)].needs_grad;
    int id = push(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[static_cast<size_t>(id)].backprop = [this, a, id]() {
            const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
            const Tensor& y = nodes_[static_cast<size_t>(id)].value;
            ensure_grad(a);
            Tensor& ga = grad_mut(a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += y.v[i] > 0.0 ? g.v[i] : 0.0;
        };
    }
    return id;
}

int Graph::matmul(int a, int b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    Tensor out(ta.rows, tb.cols, 0.0);
    matmul_acc(ta, tb, out);
    bool ng = nodes_[static_cast<size_t>(a)].needs_grad || nodes_[static_cast<size_t>(b)].needs_grad;
    int id = push(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[static_cast<size_t>(id)].backprop = [this, a, b, id]() {
            const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
            const Tensor& va = nodes_[static_cast<size_t>(a)].value;
            const Tensor& vb = nodes_[static_cast<size_t>(b)].value;
            if (nodes_[static_cast<size_t>(a)].needs_grad) {
                ensure_grad(a);
                matmul_a_bt_acc(g, vb, grad_mut(a));  // dA += dC * B^T
            }
            if (nodes_[static_cast<size_t>(b)].needs_grad) {
                ensure_grad(b);
                matmul_at_b_acc(va, g, grad_mut(b));  // dB += A^T * dC
            }
        };
    }
    return id;
}

int Graph::embedding(int table, const std::vector<int>& rows) {
    const Tensor& tt = value(table);
    Tensor out(rows.size(), tt.cols, 0.0);
    for (size_t i = 0; i < rows.size(); ++i) {
        int r = rows[i];
        if (r < 0 || static_cast<size_t>(r) >= tt.rows) {
            throw std::invalid_argument("Graph::embedding: row index out of range");
        }
        for (size_t j = 0; j < tt.cols; ++j) out.v[i * tt.cols + j] = tt.v[static_cast<size_t>(r) * tt.cols + j];
    }
    bool ng = nodes_[static_cast<size_t>(table)].needs_grad;
    int id = push(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[static_cast<size_t>(id)].backprop = [this, table, rows, id]() {
            const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
            ensure_grad(table);
            Tensor& gt = grad_mut(table);
            for (size_t i = 0; i < rows.size(); ++i) {
                const size_t r = static_cast<size_t>(rows[i]);
                for (size_t j = 0; j < g.cols; ++j) gt.v[r * g.cols + j] += g.v[i * g.cols + j];
            }
        };
    }
    return id;
}

int Graph::concat_cols(const std::vector<int>& parts) {
    if (parts.empty()) throw std::invalid_argument("Graph::concat_cols: empty");
    size_t rows = value(parts[0]).rows;
    size_t cols = 0;
    bool ng = false;
    for (int p : parts) {
        if (value(p).rows != rows) throw std::invalid_argument("Graph::concat_cols: row mismatch");
        cols += value(p).cols;
        ng = ng || nodes_[static_cast<size_t>(p)].needs_grad;
    }
    Tensor out(rows, cols);
    size_t off = 0;
    for (int p : parts) {
        const Tensor& tp = value(p);
        for (size_t i = 0; i < rows; ++i) {
            for (size_t j = 0; j < tp.cols; ++j) out.v[i * cols + off + j] = tp.v[i * tp.cols + j];
        }
        off += tp.cols;
    }
    int id = push(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[static_cast<size_t>(id)].backprop = [this, parts, id]() {
            const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
            size_t off2 = 0;
            for (int p : parts) {
                const size_t pc = nodes_[static_cast<size_t>(p)].value.cols;
                if (nodes_[static_cast<size_t>(p)].needs_grad) {
                    ensure_grad(p);
                    Tensor& gp = grad_mut(p);
                    for (size_t i = 0; i < g.rows; ++i) {
                        for (size_t j = 0; j < pc; ++j) gp.v[i * pc + j] += g.v[i * g.cols + off2 + j];
                    }
                }
                off2 += pc;
            }
        };
    }
    return id;
}

int Graph::sum_all(int a) {
    const Tensor& ta = value(a);
    double s = 0.0;
    for (double x : ta.v) s += x;
    Tensor out(1, 1);
    out.v[0] = s;
    bool ng = nodes_[static_cast<size_t>(a)].needs_grad;
    int id = push(std::move(out), ng, nullptr);
    if (ng) {
        nodes_[static_cast<size_t>(id)].backprop = [this, a, id]() {
            const double g = nodes_[static_cast<size_t>(id)].grad.v[0];
            ensure_grad(a);
            Tensor& ga = grad_mut(a);
            for (auto& x : ga.v) x += g;
        };
    }
    return id;
}

void Graph::backward(int loss) {
    const Tensor& lt = value(loss);
    if (lt.rows != 1 || lt.cols != 1) throw std::invalid_argument("Graph::backward: loss must be 1x1");
    if (backward_done_) throw std::logic_error("Graph::backward: already run on this graph");
    backward_done_ = true;
    if (!nodes_[static_cast<size_t>(loss)].needs_grad) {
        // loss does not depend on any trainable leaf; nothing to do
        return;
    }
    ensure_grad(loss);
    grad_mut(loss).v[0] = 1.0;
    for (int id = loss; id >= 0; --id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.needs_grad || !n.backprop) continue;
        if (n.grad.size() != n.value.size()) continue;  // no gradient reached this node
        n.backprop();
    }
}

ParamStore Graph::grads_for(const ParamStore& store) const {
    ParamStore out = store.zeros_like();
    for (const auto& b : bindings_) {
        if (b.store != &store) continue;
        const Node& n = nodes_[static_cast<size_t>(b.node)];
        if (n.grad.size() != n.value.size()) continue;  // never reached by backward
        auto& dst = out.at(b.name).data;
        for (size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad.v[i];
    }
    return out;
}

}  // namespace stdlab
