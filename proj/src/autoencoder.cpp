#include "aecl/autoencoder.h"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "aecl/nn/adam.h"
#include "aecl/nn/checkpoint.h"
#include "aecl/nn/loss.h"

namespace aecl {

namespace {

constexpr std::size_t kEvalChunk = 512;

double mean_loss(const nn::Network<float>& net, const std::vector<Observation>& frames) {
    double total = 0.0;
    for (std::size_t start = 0; start < frames.size(); start += kEvalChunk) {
        const std::size_t end = std::min(frames.size(), start + kEvalChunk);
        std::vector<std::size_t> idx(end - start);
        std::iota(idx.begin(), idx.end(), start);
        const auto x = stack_observations(frames, idx);
        for (double e : nn::bce_per_sample(net.forward(x), x)) total += e;
    }
    return total / static_cast<double>(frames.size());
}

}  // namespace

std::vector<nn::LayerSpec> autoencoder_layers() {
    using nn::Activation;
    using nn::ActivationKind;
    return {nn::Conv2D{16},          Activation{ActivationKind::Relu},    nn::MaxPool2D{},
            nn::Conv2D{8},           Activation{ActivationKind::Relu},    nn::MaxPool2D{},
            nn::Conv2DTranspose{8},  Activation{ActivationKind::Relu},    nn::Conv2DTranspose{16},
            Activation{ActivationKind::Relu},
            nn::Crop2D{kViewSize, kViewSize},
            nn::Conv2D{kObsChannels}, Activation{ActivationKind::Sigmoid}};
}

AutoencoderModel::AutoencoderModel(std::uint64_t seed)
    : net_({kViewSize, kViewSize, kObsChannels}, autoencoder_layers(), seed) {}

AutoencoderModel::AutoencoderModel(nn::Network<float> network) : net_(std::move(network)) {
    const nn::Shape obs{kViewSize, kViewSize, kObsChannels};
    if (net_.input_shape() != obs || net_.output_shape() != obs) {
        throw std::invalid_argument("autoencoder: network must map 7x7x3 to 7x7x3, got " +
                                    nn::shape_string(net_.input_shape()) + " -> " +
                                    nn::shape_string(net_.output_shape()));
    }
}

nn::Network<float>& AutoencoderModel::mutable_network() {
    if (trained_) throw std::logic_error("autoencoder: model is already trained");
    return net_;
}

std::size_t AutoencoderModel::bottleneck_size() const {
    std::size_t smallest = std::numeric_limits<std::size_t>::max();
    for (const auto& s : net_.shapes()) smallest = std::min(smallest, nn::numel(s));
    return smallest;
}

nn::Tensor<float> AutoencoderModel::reconstruct(std::span<const Observation> batch) const {
    return net_.forward(stack_observations(std::vector<Observation>(batch.begin(), batch.end())));
}

void AutoencoderModel::save(const std::filesystem::path& path) const { nn::save_network_file(path, net_); }

AutoencoderModel AutoencoderModel::load(const std::filesystem::path& path) {
    AutoencoderModel m(nn::load_network_file(path));
    m.mark_trained();
    return m;
}

void TrainingHistory::write_csv(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("autoencoder history: cannot open " + path.string());
    os << "epoch,train_loss,val_loss\n";
    os.precision(9);
    for (const auto& e : epochs) os << e.epoch << ',' << e.train_loss << ',' << e.val_loss << '\n';
}

TrainedAutoencoder train_autoencoder(const ObservationBuffer& buffer, const AutoencoderConfig& cfg,
                                     std::uint64_t seed) {
    if (buffer.size() < cfg.min_observations) {
        throw std::invalid_argument("train_autoencoder: need at least " + std::to_string(cfg.min_observations) +
                                    " observations, buffer holds " + std::to_string(buffer.size()));
    }
    auto split = buffer.split(cfg.validation_fraction, seed);
    TrainedAutoencoder out{AutoencoderModel(seed + 1), {}, std::move(split.validation)};
    const auto& train = split.train;

    auto& net = out.model.mutable_network();
    auto adam = nn::make_adam(net.parameters(), cfg.lr);
    std::mt19937_64 rng(seed + 2);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    double best_val = std::numeric_limits<double>::infinity();
    auto best_params = net.parameters();
    int since_best = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double train_total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(end));
            const auto x = stack_observations(train, idx);
            nn::Tape<float> tape;
            const auto y = net.forward(x, tape);
            const auto loss = nn::bce_loss(y, x);
            auto grads = net.zero_gradients();
            net.backward(tape, loss.gradient, grads);
            nn::adam_step(net.mutable_parameters(), grads, adam);
            train_total += loss.value * static_cast<double>(idx.size());
        }
        const double val = mean_loss(net, out.validation);
        out.history.epochs.push_back({epoch, train_total / static_cast<double>(train.size()), val});
        if (val < best_val) {
            best_val = val;
            best_params = net.parameters();
            out.history.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            out.history.stopped_early = true;
            break;
        }
    }
    net.mutable_parameters() = best_params;
    out.model.mark_trained();
    return out;
}

ReconstructionErrors reconstruction_error(const AutoencoderModel& model, std::span<const Observation> batch) {
    if (batch.empty()) throw std::invalid_argument("reconstruction_error: empty batch");
    ReconstructionErrors out;
    const std::vector<Observation> frames(batch.begin(), batch.end());
    const auto x = stack_observations(frames);
    out.per_sample = nn::excess_bce_per_sample(model.network().forward(x), x);
    out.mean = std::accumulate(out.per_sample.begin(), out.per_sample.end(), 0.0) /
               static_cast<double>(out.per_sample.size());
    return out;
}

}  // namespace aecl
