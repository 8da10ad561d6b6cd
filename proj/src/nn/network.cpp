#include "aecl/nn/network.h"

#include <Eigen/Core>

#include <atomic>
#include <cmath>
#include <random>
#include <sstream>

namespace aecl::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
MatMap<T> as_matrix(std::vector<T>& v, Eigen::Index rows, Eigen::Index cols) {
    return MatMap<T>(v.data(), rows, cols);
}
template <typename T>
ConstMatMap<T> as_matrix(const std::vector<T>& v, Eigen::Index rows, Eigen::Index cols) {
    return ConstMatMap<T>(v.data(), rows, cols);
}

Shape with_batch(int n, const Shape& sample) {
    Shape s;
    s.reserve(sample.size() + 1);
    s.push_back(n);
    s.insert(s.end(), sample.begin(), sample.end());
    return s;
}

// Rows (n, y, x); columns (ky, kx, c) for a 3x3 window with zero padding.
template <typename T>
std::vector<T> im2col(const Tensor<T>& x, int n, int h, int w, int c) {
    const std::size_t row_len = static_cast<std::size_t>(9 * c);
    std::vector<T> cols(static_cast<std::size_t>(n * h * w) * row_len, T{0});
    for (int b = 0; b < n; ++b) {
        for (int y = 0; y < h; ++y) {
            for (int xx = 0; xx < w; ++xx) {
                T* row = &cols[static_cast<std::size_t>((b * h + y) * w + xx) * row_len];
                for (int ky = 0; ky < 3; ++ky) {
                    const int iy = y + ky - 1;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int ix = xx + kx - 1;
                        if (ix < 0 || ix >= w) continue;
                        const T* src = &x.data[static_cast<std::size_t>(((b * h + iy) * w + ix) * c)];
                        std::copy(src, src + c, row + (ky * 3 + kx) * c);
                    }
                }
            }
        }
    }
    return cols;
}

template <typename T>
void col2im(const std::vector<T>& cols, Tensor<T>& dx, int n, int h, int w, int c) {
    const std::size_t row_len = static_cast<std::size_t>(9 * c);
    for (int b = 0; b < n; ++b) {
        for (int y = 0; y < h; ++y) {
            for (int xx = 0; xx < w; ++xx) {
                const T* row = &cols[static_cast<std::size_t>((b * h + y) * w + xx) * row_len];
                for (int ky = 0; ky < 3; ++ky) {
                    const int iy = y + ky - 1;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int ix = xx + kx - 1;
                        if (ix < 0 || ix >= w) continue;
                        T* dst = &dx.data[static_cast<std::size_t>(((b * h + iy) * w + ix) * c)];
                        const T* src = row + (ky * 3 + kx) * c;
                        for (int k = 0; k < c; ++k) dst[k] += src[k];
                    }
                }
            }
        }
    }
}

template <typename T>
void add_bias(std::vector<T>& out, const std::vector<T>& bias) {
    const std::size_t f = bias.size();
    for (std::size_t i = 0; i < out.size(); i += f) {
        for (std::size_t k = 0; k < f; ++k) out[i + k] += bias[k];
    }
}

template <typename T>
void accumulate_bias_grad(const std::vector<T>& dy, std::vector<T>& db) {
    const std::size_t f = db.size();
    for (std::size_t i = 0; i < dy.size(); i += f) {
        for (std::size_t k = 0; k < f; ++k) db[k] += dy[i + k];
    }
}

struct InitRule {
    int fan_in;
    int fan_out;
    bool relu_follows;
};

template <typename T>
void init_uniform(Tensor<T>& w, const InitRule& rule, std::mt19937_64& rng) {
    const double limit = rule.relu_follows ? std::sqrt(6.0 / rule.fan_in)
                                           : std::sqrt(6.0 / (rule.fan_in + rule.fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : w.data) v = static_cast<T>(dist(rng));
}

}  // namespace

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
    os << ')';
    return os.str();
}

std::string describe(const LayerSpec& spec) {
    struct Visitor {
        std::string operator()(const Dense& d) const {
            return "Dense(" + std::to_string(d.in) + ", " + std::to_string(d.out) + ")";
        }
        std::string operator()(const Conv2D& c) const { return "Conv2D(" + std::to_string(c.filters) + ")"; }
        std::string operator()(const Conv2DTranspose& c) const {
            return "Conv2DTranspose(" + std::to_string(c.filters) + ")";
        }
        std::string operator()(const MaxPool2D&) const { return "MaxPool2D"; }
        std::string operator()(const Activation& a) const {
            switch (a.kind) {
                case ActivationKind::Relu:
                    return "ReLU";
                case ActivationKind::Sigmoid:
                    return "Sigmoid";
                case ActivationKind::Tanh:
                    return "Tanh";
            }
            return "Activation";
        }
        std::string operator()(const Flatten&) const { return "Flatten"; }
        std::string operator()(const Crop2D& c) const {
            return "Crop2D(" + std::to_string(c.height) + ", " + std::to_string(c.width) + ")";
        }
    };
    return std::visit(Visitor{}, spec);
}

Shape infer_shape(const LayerSpec& spec, const Shape& in) {
    auto need_image = [&](const char* what) {
        if (in.size() != 3) {
            throw std::invalid_argument(std::string(what) + " expects an (H, W, C) input, got " + shape_string(in));
        }
    };
    struct Visitor {
        const Shape& in;
        decltype(need_image)& need;
        Shape operator()(const Dense& d) const {
            if (d.in <= 0 || d.out <= 0) throw std::invalid_argument("Dense sizes must be positive");
            if (in.size() != 1 || in[0] != d.in) {
                throw std::invalid_argument(describe(d) + " cannot follow shape " + shape_string(in));
            }
            return {d.out};
        }
        Shape operator()(const Conv2D& c) const {
            need("Conv2D");
            if (c.filters <= 0) throw std::invalid_argument("Conv2D needs a positive filter count");
            return {in[0], in[1], c.filters};
        }
        Shape operator()(const Conv2DTranspose& c) const {
            need("Conv2DTranspose");
            if (c.filters <= 0) throw std::invalid_argument("Conv2DTranspose needs a positive filter count");
            return {in[0] * 2, in[1] * 2, c.filters};
        }
        Shape operator()(const MaxPool2D&) const {
            need("MaxPool2D");
            return {(in[0] + 1) / 2, (in[1] + 1) / 2, in[2]};
        }
        Shape operator()(const Activation&) const { return in; }
        Shape operator()(const Flatten&) const { return {static_cast<int>(numel(in))}; }
        Shape operator()(const Crop2D& c) const {
            need("Crop2D");
            if (c.height <= 0 || c.width <= 0 || c.height > in[0] || c.width > in[1]) {
                throw std::invalid_argument("Crop2D window does not fit " + shape_string(in));
            }
            return {c.height, c.width, in[2]};
        }
    };
    return std::visit(Visitor{in, need_image}, spec);
}

template <typename T>
std::uint64_t Network<T>::next_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
}

template <typename T>
Network<T>::Network(Shape input_shape, std::vector<LayerSpec> layers, std::uint64_t seed)
    : layers_(std::move(layers)), shapes_{std::move(input_shape)}, id_(next_id()) {
    for (int d : shapes_.front()) {
        if (d <= 0) throw std::invalid_argument("network input dimensions must be positive");
    }
    for (const auto& spec : layers_) shapes_.push_back(infer_shape(spec, shapes_.back()));

    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& spec = layers_[i];
        if (!has_parameters(spec)) {
            param_offset_.push_back(-1);
            continue;
        }
        param_offset_.push_back(static_cast<int>(params_.size()));
        const bool relu_follows = i + 1 < layers_.size() && std::holds_alternative<Activation>(layers_[i + 1]) &&
                                  std::get<Activation>(layers_[i + 1]).kind == ActivationKind::Relu;
        const Shape& in = shapes_[i];
        Tensor<T> w;
        Tensor<T> b;
        InitRule rule{};
        if (const auto* d = std::get_if<Dense>(&spec)) {
            w = Tensor<T>({d->in, d->out});
            b = Tensor<T>({d->out});
            rule = {d->in, d->out, relu_follows};
        } else if (const auto* c = std::get_if<Conv2D>(&spec)) {
            w = Tensor<T>({9 * in[2], c->filters});
            b = Tensor<T>({c->filters});
            rule = {9 * in[2], 9 * c->filters, relu_follows};
        } else {
            const auto& ct = std::get<Conv2DTranspose>(spec);
            w = Tensor<T>({in[2], 9 * ct.filters});
            b = Tensor<T>({ct.filters});
            rule = {9 * in[2], 9 * ct.filters, relu_follows};
        }
        init_uniform(w, rule, rng);
        params_.push_back(std::move(w));
        params_.push_back(std::move(b));
    }
}

template <typename T>
Network<T>::Network(const Network& other)
    : layers_(other.layers_),
      shapes_(other.shapes_),
      param_offset_(other.param_offset_),
      params_(other.params_),
      id_(next_id()),
      version_(0) {}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
    if (this != &other) {
        layers_ = other.layers_;
        shapes_ = other.shapes_;
        param_offset_ = other.param_offset_;
        params_ = other.params_;
        id_ = next_id();
        version_ = 0;
    }
    return *this;
}

template <typename T>
std::vector<Tensor<T>>& Network<T>::mutable_parameters() {
    ++version_;
    return params_;
}

template <typename T>
std::vector<Tensor<T>> Network<T>::zero_gradients() const {
    std::vector<Tensor<T>> grads;
    grads.reserve(params_.size());
    for (const auto& p : params_) grads.emplace_back(p.shape);
    return grads;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

template <typename T>
void Network<T>::check_input(const Tensor<T>& input) const {
    const Shape& expect = input_shape();
    const bool ok = input.shape.size() == expect.size() + 1 && input.batch() > 0 &&
                    std::equal(expect.begin(), expect.end(), input.shape.begin() + 1);
    if (!ok) {
        throw std::invalid_argument("network expects batches of " + shape_string(expect) + ", got " +
                                    shape_string(input.shape));
    }
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& input) const {
    return run(input, nullptr);
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& input, Tape<T>& tape) const {
    tape = Tape<T>{};
    tape.network_id = id_;
    tape.version = version_;
    return run(input, &tape);
}

template <typename T>
Tensor<T> Network<T>::run(const Tensor<T>& input, Tape<T>* tape) const {
    check_input(input);
    const int n = input.batch();
    Tensor<T> x = input;
    if (tape) {
        tape->activations.reserve(layers_.size() + 1);
        tape->pool_argmax.resize(layers_.size());
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Shape& in = shapes_[i];
        const Shape& out_shape = shapes_[i + 1];
        Tensor<T> y(with_batch(n, out_shape));
        const LayerSpec& spec = layers_[i];
        const int off = param_offset_[i];

        if (const auto* d = std::get_if<Dense>(&spec)) {
            as_matrix(y.data, n, d->out).noalias() =
                as_matrix(x.data, n, d->in) * as_matrix(params_[off].data, d->in, d->out);
            add_bias(y.data, params_[off + 1].data);
        } else if (const auto* c = std::get_if<Conv2D>(&spec)) {
            const auto cols = im2col(x, n, in[0], in[1], in[2]);
            const Eigen::Index rows = static_cast<Eigen::Index>(n) * in[0] * in[1];
            as_matrix(y.data, rows, c->filters).noalias() =
                as_matrix(cols, rows, 9 * in[2]) * as_matrix(params_[off].data, 9 * in[2], c->filters);
            add_bias(y.data, params_[off + 1].data);
        } else if (const auto* ct = std::get_if<Conv2DTranspose>(&spec)) {
            const int f = ct->filters;
            const Eigen::Index rows = static_cast<Eigen::Index>(n) * in[0] * in[1];
            std::vector<T> patches(static_cast<std::size_t>(rows) * 9 * f);
            as_matrix(patches, rows, 9 * f).noalias() =
                as_matrix(x.data, rows, in[2]) * as_matrix(params_[off].data, in[2], 9 * f);
            const int oh = out_shape[0];
            const int ow = out_shape[1];
            for (int b = 0; b < n; ++b) {
                for (int yy = 0; yy < in[0]; ++yy) {
                    for (int xx = 0; xx < in[1]; ++xx) {
                        const T* p = &patches[static_cast<std::size_t>((b * in[0] + yy) * in[1] + xx) * 9 * f];
                        for (int ky = 0; ky < 3; ++ky) {
                            const int oy = 2 * yy + ky;
                            if (oy >= oh) continue;
                            for (int kx = 0; kx < 3; ++kx) {
                                const int ox = 2 * xx + kx;
                                if (ox >= ow) continue;
                                T* dst = &y.data[static_cast<std::size_t>(((b * oh + oy) * ow + ox) * f)];
                                const T* src = p + (ky * 3 + kx) * f;
                                for (int k = 0; k < f; ++k) dst[k] += src[k];
                            }
                        }
                    }
                }
            }
            add_bias(y.data, params_[off + 1].data);
        } else if (std::holds_alternative<MaxPool2D>(spec)) {
            const int h = in[0], w = in[1], ch = in[2];
            const int oh = out_shape[0], ow = out_shape[1];
            std::vector<int>* argmax = tape ? &tape->pool_argmax[i] : nullptr;
            if (argmax) argmax->assign(y.size(), 0);
            for (int b = 0; b < n; ++b) {
                for (int oy = 0; oy < oh; ++oy) {
                    for (int ox = 0; ox < ow; ++ox) {
                        for (int k = 0; k < ch; ++k) {
                            int best = -1;
                            T best_v{};
                            for (int dy = 0; dy < 2; ++dy) {
                                const int iy = 2 * oy + dy;
                                if (iy >= h) continue;
                                for (int dx = 0; dx < 2; ++dx) {
                                    const int ix = 2 * ox + dx;
                                    if (ix >= w) continue;
                                    const int idx = ((b * h + iy) * w + ix) * ch + k;
                                    if (best < 0 || x.data[static_cast<std::size_t>(idx)] > best_v) {
                                        best = idx;
                                        best_v = x.data[static_cast<std::size_t>(idx)];
                                    }
                                }
                            }
                            const std::size_t o = static_cast<std::size_t>(((b * oh + oy) * ow + ox) * ch + k);
                            y.data[o] = best_v;
                            if (argmax) (*argmax)[o] = best;
                        }
                    }
                }
            }
        } else if (const auto* a = std::get_if<Activation>(&spec)) {
            for (std::size_t k = 0; k < x.size(); ++k) {
                const T v = x.data[k];
                switch (a->kind) {
                    case ActivationKind::Relu:
                        y.data[k] = v > T{0} ? v : T{0};
                        break;
                    case ActivationKind::Sigmoid:
                        y.data[k] = T{1} / (T{1} + std::exp(-v));
                        break;
                    case ActivationKind::Tanh:
                        y.data[k] = std::tanh(v);
                        break;
                }
            }
        } else if (std::holds_alternative<Flatten>(spec)) {
            y.data = x.data;
        } else {
            const auto& cr = std::get<Crop2D>(spec);
            const int oy0 = (in[0] - cr.height) / 2;
            const int ox0 = (in[1] - cr.width) / 2;
            const int ch = in[2];
            for (int b = 0; b < n; ++b) {
                for (int yy = 0; yy < cr.height; ++yy) {
                    const T* src = &x.data[static_cast<std::size_t>(((b * in[0] + yy + oy0) * in[1] + ox0) * ch)];
                    std::copy(src, src + cr.width * ch,
                              &y.data[static_cast<std::size_t>((b * cr.height + yy) * cr.width * ch)]);
                }
            }
        }

        if (tape) tape->activations.push_back(std::move(x));
        x = std::move(y);
    }
    if (tape) tape->activations.push_back(x);
    return x;
}

template <typename T>
Tensor<T> Network<T>::backward(Tape<T>& tape, const Tensor<T>& output_gradient,
                               std::vector<Tensor<T>>& grads) const {
    if (tape.network_id != id_) throw std::logic_error("backward: tape was recorded by a different network");
    if (tape.consumed) throw std::logic_error("backward: tape already consumed");
    if (tape.version != version_) throw std::logic_error("backward: parameters changed since the forward pass");
    if (tape.activations.size() != layers_.size() + 1) throw std::logic_error("backward: incomplete tape");
    if (output_gradient.shape != tape.activations.back().shape) {
        throw std::invalid_argument("backward: gradient shape " + shape_string(output_gradient.shape) +
                                    " does not match output " + shape_string(tape.activations.back().shape));
    }
    if (grads.size() != params_.size()) throw std::invalid_argument("backward: gradient list size mismatch");
    tape.consumed = true;

    const int n = output_gradient.batch();
    Tensor<T> dy = output_gradient;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const Shape& in = shapes_[li];
        const Tensor<T>& x = tape.activations[li];
        const Tensor<T>& y = tape.activations[li + 1];
        const LayerSpec& spec = layers_[li];
        const int off = param_offset_[li];
        Tensor<T> dx(x.shape);

        if (const auto* d = std::get_if<Dense>(&spec)) {
            auto dmat = as_matrix(dy.data, n, d->out);
            as_matrix(grads[off].data, d->in, d->out).noalias() += as_matrix(x.data, n, d->in).transpose() * dmat;
            accumulate_bias_grad(dy.data, grads[off + 1].data);
            as_matrix(dx.data, n, d->in).noalias() = dmat * as_matrix(params_[off].data, d->in, d->out).transpose();
        } else if (const auto* c = std::get_if<Conv2D>(&spec)) {
            const auto cols = im2col(x, n, in[0], in[1], in[2]);
            const Eigen::Index rows = static_cast<Eigen::Index>(n) * in[0] * in[1];
            const int k = 9 * in[2];
            auto dmat = as_matrix(dy.data, rows, c->filters);
            as_matrix(grads[off].data, k, c->filters).noalias() += as_matrix(cols, rows, k).transpose() * dmat;
            accumulate_bias_grad(dy.data, grads[off + 1].data);
            std::vector<T> dcols(static_cast<std::size_t>(rows) * k);
            as_matrix(dcols, rows, k).noalias() = dmat * as_matrix(params_[off].data, k, c->filters).transpose();
            col2im(dcols, dx, n, in[0], in[1], in[2]);
        } else if (const auto* ct = std::get_if<Conv2DTranspose>(&spec)) {
            const int f = ct->filters;
            const int oh = shapes_[li + 1][0];
            const int ow = shapes_[li + 1][1];
            const Eigen::Index rows = static_cast<Eigen::Index>(n) * in[0] * in[1];
            std::vector<T> dpatches(static_cast<std::size_t>(rows) * 9 * f, T{0});
            for (int b = 0; b < n; ++b) {
                for (int yy = 0; yy < in[0]; ++yy) {
                    for (int xx = 0; xx < in[1]; ++xx) {
                        T* p = &dpatches[static_cast<std::size_t>((b * in[0] + yy) * in[1] + xx) * 9 * f];
                        for (int ky = 0; ky < 3; ++ky) {
                            const int oy = 2 * yy + ky;
                            if (oy >= oh) continue;
                            for (int kx = 0; kx < 3; ++kx) {
                                const int ox = 2 * xx + kx;
                                if (ox >= ow) continue;
                                const T* src = &dy.data[static_cast<std::size_t>(((b * oh + oy) * ow + ox) * f)];
                                std::copy(src, src + f, p + (ky * 3 + kx) * f);
                            }
                        }
                    }
                }
            }
            auto dmat = as_matrix(dpatches, rows, 9 * f);
            as_matrix(grads[off].data, in[2], 9 * f).noalias() += as_matrix(x.data, rows, in[2]).transpose() * dmat;
            accumulate_bias_grad(dy.data, grads[off + 1].data);
            as_matrix(dx.data, rows, in[2]).noalias() = dmat * as_matrix(params_[off].data, in[2], 9 * f).transpose();
        } else if (std::holds_alternative<MaxPool2D>(spec)) {
            const auto& argmax = tape.pool_argmax[li];
            for (std::size_t o = 0; o < dy.size(); ++o) dx.data[static_cast<std::size_t>(argmax[o])] += dy.data[o];
        } else if (const auto* a = std::get_if<Activation>(&spec)) {
            for (std::size_t k = 0; k < dy.size(); ++k) {
                switch (a->kind) {
                    case ActivationKind::Relu:
                        dx.data[k] = x.data[k] > T{0} ? dy.data[k] : T{0};
                        break;
                    case ActivationKind::Sigmoid:
                        dx.data[k] = dy.data[k] * y.data[k] * (T{1} - y.data[k]);
                        break;
                    case ActivationKind::Tanh:
                        dx.data[k] = dy.data[k] * (T{1} - y.data[k] * y.data[k]);
                        break;
                }
            }
        } else if (std::holds_alternative<Flatten>(spec)) {
            dx.data = dy.data;
        } else {
            const auto& cr = std::get<Crop2D>(spec);
            const int oy0 = (in[0] - cr.height) / 2;
            const int ox0 = (in[1] - cr.width) / 2;
            const int ch = in[2];
            for (int b = 0; b < n; ++b) {
                for (int yy = 0; yy < cr.height; ++yy) {
                    const T* src = &dy.data[static_cast<std::size_t>((b * cr.height + yy) * cr.width * ch)];
                    std::copy(src, src + cr.width * ch,
                              &dx.data[static_cast<std::size_t>(((b * in[0] + yy + oy0) * in[1] + ox0) * ch)]);
                }
            }
        }
        dy = std::move(dx);
    }
    return dy;
}

template class Network<float>;
template class Network<double>;

}  // namespace aecl::nn
