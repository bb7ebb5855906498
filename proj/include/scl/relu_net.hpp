#ifndef SCL_RELU_NET_HPP
#define SCL_RELU_NET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace scl {

/// One nonzero entry of a sparse weight matrix.
struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

/// Sparse affine map x -> W x + b. Weights are stored as coordinate
/// triplets in row-major order; exact zeros are never stored.
struct AffineLayer {
    int rows = 0;
    int cols = 0;
    std::vector<Triplet> weights;
    std::vector<double> bias;

    AffineLayer() = default;
    AffineLayer(int rows_, int cols_) : rows(rows_), cols(cols_), bias(rows_, 0.0) {}

    void add(int r, int c, double v) {
        if (r < 0 || r >= rows || c < 0 || c >= cols) {
            throw std::out_of_range("AffineLayer::add: index out of range");
        }
        if (v != 0.0) {
            weights.push_back({r, c, v});
        }
    }

    void set_bias(int r, double v) {
        if (r < 0 || r >= rows) {
            throw std::out_of_range("AffineLayer::set_bias: index out of range");
        }
        bias[r] = v;
    }

    /// y = W x + b. Accumulation runs in stored triplet order.
    void apply(std::span<const double> x, std::vector<double>& y) const {
        if (static_cast<int>(x.size()) != cols) {
            throw std::invalid_argument("AffineLayer::apply: input dimension mismatch");
        }
        y.assign(bias.begin(), bias.end());
        for (const Triplet& t : weights) {
            y[t.row] += t.value * x[t.col];
        }
    }

    void sort_weights() {
        std::stable_sort(weights.begin(), weights.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
    }
};

/// Size metrics of a network: number of nonzero stored entries, number of
/// affine layers, maximum layer width (inputs and outputs included) and
/// largest absolute stored entry.
struct NetMetrics {
    std::int64_t connectivity = 0;
    int depth = 0;
    int max_width = 0;
    double weight_magnitude = 0.0;
};

/// Layered ReLU network: alternating sparse affine maps and componentwise
/// ReLU, with ReLU applied after every layer except the last. A network
/// with a single layer is purely affine. Immutable after construction.
class ReluNet {
public:
    ReluNet() = default;

    explicit ReluNet(std::vector<AffineLayer> layers) : layers_(std::move(layers)) {
        if (layers_.empty()) {
            throw std::invalid_argument("ReluNet: at least one layer required");
        }
        for (std::size_t k = 1; k < layers_.size(); ++k) {
            if (layers_[k].cols != layers_[k - 1].rows) {
                throw std::invalid_argument("ReluNet: layer dimensions do not chain");
            }
        }
        for (auto& l : layers_) {
            if (static_cast<int>(l.bias.size()) != l.rows) {
                throw std::invalid_argument("ReluNet: bias length mismatch");
            }
            l.sort_weights();
        }
    }

    int input_dim() const { return layers_.front().cols; }
    int output_dim() const { return layers_.back().rows; }
    int depth() const { return static_cast<int>(layers_.size()); }
    const std::vector<AffineLayer>& layers() const { return layers_; }

    std::vector<double> eval(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != input_dim()) {
            throw std::invalid_argument("ReluNet::eval: input dimension mismatch");
        }
        std::vector<double> cur(x.begin(), x.end());
        std::vector<double> next;
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            layers_[k].apply(cur, next);
            if (k + 1 < layers_.size()) {
                for (double& v : next) v = std::max(v, 0.0);
            }
            cur.swap(next);
        }
        return cur;
    }

    std::vector<double> eval(std::initializer_list<double> x) const {
        return eval(std::span<const double>(x.begin(), x.size()));
    }

private:
    std::vector<AffineLayer> layers_;
};

inline NetMetrics metrics(const ReluNet& net) {
    NetMetrics m;
    m.depth = net.depth();
    m.max_width = net.input_dim();
    for (const AffineLayer& l : net.layers()) {
        m.max_width = std::max(m.max_width, l.rows);
        for (const Triplet& t : l.weights) {
            if (t.value != 0.0) {
                ++m.connectivity;
                m.weight_magnitude = std::max(m.weight_magnitude, std::abs(t.value));
            }
        }
        for (double b : l.bias) {
            if (b != 0.0) {
                ++m.connectivity;
                m.weight_magnitude = std::max(m.weight_magnitude, std::abs(b));
            }
        }
    }
    return m;
}

namespace detail {

/// merged = after * before as affine maps (exact sparse product); used when
/// fusing the last layer of an inner net with the first layer of an outer net.
inline AffineLayer merge_affine(const AffineLayer& after, const AffineLayer& before) {
    if (after.cols != before.rows) {
        throw std::invalid_argument("merge_affine: dimension mismatch");
    }
    AffineLayer out(after.rows, before.cols);
    // bias = W_after * b_before + b_after
    out.bias = after.bias;
    for (const Triplet& t : after.weights) {
        out.bias[t.row] += t.value * before.bias[t.col];
    }
    // weights: accumulate per output row in (row, col) order
    std::vector<std::vector<Triplet>> before_rows(before.rows);
    for (const Triplet& t : before.weights) before_rows[t.row].push_back(t);
    std::map<std::pair<int, int>, double> acc;
    for (const Triplet& ta : after.weights) {
        for (const Triplet& tb : before_rows[ta.col]) {
            acc[{ta.row, tb.col}] += ta.value * tb.value;
        }
    }
    for (const auto& [rc, v] : acc) {
        if (v != 0.0) out.weights.push_back({rc.first, rc.second, v});
    }
    return out;
}

} // namespace detail

/// Function composition outer(inner(x)). The last affine layer of `inner`
/// is fused with the first affine layer of `outer`, so the realized map is
/// exact and depth(result) = depth(inner) + depth(outer) - 1.
inline ReluNet compose(const ReluNet& outer, const ReluNet& inner) {
    if (inner.output_dim() != outer.input_dim()) {
        throw std::invalid_argument("compose: inner output dim != outer input dim");
    }
    std::vector<AffineLayer> layers;
    layers.reserve(inner.depth() + outer.depth() - 1);
    for (int k = 0; k + 1 < inner.depth(); ++k) layers.push_back(inner.layers()[k]);
    layers.push_back(detail::merge_affine(outer.layers().front(), inner.layers().back()));
    for (int k = 1; k < outer.depth(); ++k) layers.push_back(outer.layers()[k]);
    return ReluNet(std::move(layers));
}

/// Side-by-side stacking: the realized map is the concatenation of the
/// member outputs. With shared_input the members read the same input
/// vector, otherwise the input is the concatenation of member inputs.
/// All members must have equal depth; pad with identity_chain first.
inline ReluNet parallel(const std::vector<ReluNet>& nets, bool shared_input) {
    if (nets.empty()) {
        throw std::invalid_argument("parallel: empty net list");
    }
    const int depth = nets.front().depth();
    for (const ReluNet& n : nets) {
        if (n.depth() != depth) {
            throw std::invalid_argument("parallel: member depths differ (pad with identity_chain)");
        }
        if (shared_input && n.input_dim() != nets.front().input_dim()) {
            throw std::invalid_argument("parallel: shared input requires equal input dims");
        }
    }
    std::vector<AffineLayer> layers;
    for (int k = 0; k < depth; ++k) {
        int rows = 0, cols = 0;
        for (const ReluNet& n : nets) {
            rows += n.layers()[k].rows;
            cols += n.layers()[k].cols;
        }
        if (k == 0 && shared_input) cols = nets.front().input_dim();
        AffineLayer l(rows, cols);
        int row_off = 0, col_off = 0;
        for (const ReluNet& n : nets) {
            const AffineLayer& src = n.layers()[k];
            const int coff = (k == 0 && shared_input) ? 0 : col_off;
            for (const Triplet& t : src.weights) l.add(t.row + row_off, t.col + coff, t.value);
            for (int r = 0; r < src.rows; ++r) l.set_bias(r + row_off, src.bias[r]);
            row_off += src.rows;
            col_off += src.cols;
        }
        layers.push_back(std::move(l));
    }
    return ReluNet(std::move(layers));
}

/// Identity on R^dim realized with the given number of affine layers,
/// built from sigma(x) - sigma(-x) pairs (hidden width 2*dim).
inline ReluNet identity_chain(int dim, int depth) {
    if (dim < 1 || depth < 1) {
        throw std::invalid_argument("identity_chain: dim and depth must be >= 1");
    }
    std::vector<AffineLayer> layers;
    if (depth == 1) {
        AffineLayer l(dim, dim);
        for (int i = 0; i < dim; ++i) l.add(i, i, 1.0);
        layers.push_back(std::move(l));
        return ReluNet(std::move(layers));
    }
    AffineLayer first(2 * dim, dim);
    for (int i = 0; i < dim; ++i) {
        first.add(i, i, 1.0);
        first.add(dim + i, i, -1.0);
    }
    layers.push_back(std::move(first));
    for (int k = 1; k + 1 < depth; ++k) {
        AffineLayer mid(2 * dim, 2 * dim);
        for (int i = 0; i < dim; ++i) {
            mid.add(i, i, 1.0);
            mid.add(i, dim + i, -1.0);
            mid.add(dim + i, i, -1.0);
            mid.add(dim + i, dim + i, 1.0);
        }
        layers.push_back(std::move(mid));
    }
    AffineLayer last(dim, 2 * dim);
    for (int i = 0; i < dim; ++i) {
        last.add(i, i, 1.0);
        last.add(i, dim + i, -1.0);
    }
    layers.push_back(std::move(last));
    return ReluNet(std::move(layers));
}

/// Componentwise clipping to [alpha, beta], realized per component as
/// alpha + sigma(x - alpha) - sigma(x - beta).
inline ReluNet clip_net(double alpha, double beta, int dim = 1) {
    if (!(alpha < beta)) {
        throw std::invalid_argument("clip_net: alpha must be < beta");
    }
    if (dim < 1) {
        throw std::invalid_argument("clip_net: dim must be >= 1");
    }
    AffineLayer first(2 * dim, dim);
    AffineLayer last(dim, 2 * dim);
    for (int i = 0; i < dim; ++i) {
        first.add(i, i, 1.0);
        first.set_bias(i, -alpha);
        first.add(dim + i, i, 1.0);
        first.set_bias(dim + i, -beta);
        last.add(i, i, 1.0);
        last.add(i, dim + i, -1.0);
        last.set_bias(i, alpha);
    }
    std::vector<AffineLayer> layers;
    layers.push_back(std::move(first));
    layers.push_back(std::move(last));
    return ReluNet(std::move(layers));
}

/// Piecewise-constant function on J uniform cells of [a, b]; cell j is
/// [a + j*h, a + (j+1)*h) and queries are clamped to the domain.
struct PiecewiseConstantFn {
    double a = 0.0;
    double b = 1.0;
    std::vector<double> values;

    int cells() const { return static_cast<int>(values.size()); }
    double cell_width() const { return (b - a) / cells(); }
    double cell_center(int j) const { return a + (j + 0.5) * cell_width(); }

    double operator()(double x) const {
        const int J = cells();
        int j = static_cast<int>(std::floor((x - a) / cell_width()));
        j = std::clamp(j, 0, J - 1);
        return values[j];
    }

    double l1_norm() const {
        double s = 0.0;
        for (double v : values) s += std::abs(v);
        return s * cell_width();
    }
};

/// Exact L1 distance between two piecewise-constant functions on the same
/// interval (cell counts need not be commensurate).
inline double l1_distance(const PiecewiseConstantFn& f, const PiecewiseConstantFn& g) {
    if (f.a != g.a || f.b != g.b) {
        throw std::invalid_argument("l1_distance: domains differ");
    }
    const double hf = f.cell_width(), hg = g.cell_width();
    int i = 0, j = 0;
    double x = f.a, total = 0.0;
    while (i < f.cells() && j < g.cells()) {
        const double xf = f.a + (i + 1) * hf;
        const double xg = g.a + (j + 1) * hg;
        const double nxt = std::min(xf, xg);
        total += (nxt - x) * std::abs(f.values[i] - g.values[j]);
        x = nxt;
        if (xf <= xg) ++i;
        if (xg <= xf) ++j;
    }
    return total;
}

/// Evaluates `net` at y and wraps the output vector as a piecewise-constant
/// function on uniform cells of [a, b].
inline PiecewiseConstantFn as_solution_function(const ReluNet& net, std::span<const double> y,
                                                double a, double b) {
    if (!(a < b)) {
        throw std::invalid_argument("as_solution_function: empty interval");
    }
    PiecewiseConstantFn fn;
    fn.a = a;
    fn.b = b;
    fn.values = net.eval(y);
    return fn;
}

} // namespace scl

#endif // SCL_RELU_NET_HPP
