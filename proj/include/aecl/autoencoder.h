#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "aecl/gridworld.h"
#include "aecl/nn/layers.h"
#include "aecl/nn/network.h"
#include "aecl/observation_buffer.h"

namespace aecl {

struct AutoencoderConfig {
    int max_epochs = 100;
    int batch_size = 64;
    double validation_fraction = 0.2;
    int patience = 5;  // epochs without a validation improvement before stopping
    double lr = 1e-3;
    std::size_t min_observations = 5000;
};

/// Conv16-pool-Conv8-pool encoder, two stride-2 transposed convs, a crop back
/// to 7x7 and a 3-filter sigmoid conv.
std::vector<nn::LayerSpec> autoencoder_layers();

class AutoencoderModel {
public:
    explicit AutoencoderModel(std::uint64_t seed);
    /// Throws std::invalid_argument unless the network maps 7x7x3 to 7x7x3.
    explicit AutoencoderModel(nn::Network<float> network);

    const nn::Network<float>& network() const { return net_; }
    /// Throws std::logic_error once the model is marked trained.
    nn::Network<float>& mutable_network();

    bool trained() const { return trained_; }
    void mark_trained() { trained_ = true; }

    /// Element count of the narrowest intermediate shape.
    std::size_t bottleneck_size() const;

    nn::Tensor<float> reconstruct(std::span<const Observation> batch) const;

    void save(const std::filesystem::path& path) const;
    static AutoencoderModel load(const std::filesystem::path& path);  // loaded models are trained

private:
    nn::Network<float> net_;
    bool trained_ = false;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    bool stopped_early = false;

    void write_csv(const std::filesystem::path& path) const;
};

struct TrainedAutoencoder {
    AutoencoderModel model;
    TrainingHistory history;
    std::vector<Observation> validation;  // held out from training, used for calibration
};

/// Adam + BCE with early stopping on validation loss; restores the best epoch.
/// Throws std::invalid_argument when the buffer holds fewer than min_observations frames.
TrainedAutoencoder train_autoencoder(const ObservationBuffer& buffer, const AutoencoderConfig& cfg,
                                     std::uint64_t seed);

struct ReconstructionErrors {
    std::vector<double> per_sample;  // mean excess BCE over the 147 elements of each sample
    double mean = 0.0;
};

/// Throws std::invalid_argument for an empty batch.
ReconstructionErrors reconstruction_error(const AutoencoderModel& model, std::span<const Observation> batch);

}  // namespace aecl
