#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "aecl/autoencoder.h"

namespace aecl {

/// Gaussian fitted to batch-mean reconstruction errors, cut at a confidence quantile.
struct ThresholdModel {
    double mu = 0.0;
    double sigma = 0.0;
    double confidence = 0.9;
    double threshold = 0.0;
    int batch_size = 64;
    std::size_t batches = 0;

    void write(std::ostream& os) const;
    static ThresholdModel read(std::istream& is);
    void save(const std::filesystem::path& path) const;
    static ThresholdModel load(const std::filesystem::path& path);
};

inline constexpr std::size_t kMinCalibrationBatches = 10;

/// Standard-normal quantile.
double normal_quantile(double p);

/// mu and n-1 sigma of the given batch means, threshold = mu + z(confidence) * sigma.
/// A zero sigma yields mu + max(1e-6, 0.01 mu). Throws std::invalid_argument for
/// confidence outside (0, 1) or fewer than two batch means.
ThresholdModel fit_threshold(std::span<const double> batch_means, double confidence, int batch_size);

/// Shuffles frames with seed and returns the mean error of every full batch.
std::vector<double> batch_mean_errors(const AutoencoderModel& model, std::span<const Observation> frames,
                                      int batch_size, std::uint64_t seed);

/// Throws std::invalid_argument when fewer than ten full batches are available.
ThresholdModel calibrate_threshold(const AutoencoderModel& model, std::span<const Observation> validation,
                                   double confidence, int batch_size, std::uint64_t seed);

struct Detector {
    AutoencoderModel autoencoder;
    ThresholdModel threshold;
};

struct MatchDecision {
    enum class Kind { Match, Novel };
    Kind kind = Kind::Novel;
    int pair = -1;  // valid for Match
    double error = 0.0;
    std::vector<double> errors;  // batch-mean error of every candidate, in order

    bool novel() const { return kind == Kind::Novel; }
};

/// Lowest error among the candidates below their own threshold, lowest index on ties;
/// Novel when none is below. Throws std::invalid_argument on a length mismatch.
MatchDecision decide_from_errors(std::span<const double> errors, std::span<const double> thresholds);

/// Scores the probe with every detector and applies decide_from_errors.
/// Throws std::invalid_argument for an empty probe.
MatchDecision decide(std::span<const Detector* const> detectors, std::span<const Observation> probe);

}  // namespace aecl
