#include "aecl/novelty.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>

namespace aecl {

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

ThresholdModel fit_threshold(std::span<const double> batch_means, double confidence, int batch_size) {
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw std::invalid_argument("threshold: confidence must lie in (0, 1), got " + std::to_string(confidence));
    }
    if (batch_means.size() < 2) throw std::invalid_argument("threshold: need at least two batch means");
    ThresholdModel t;
    t.confidence = confidence;
    t.batch_size = batch_size;
    t.batches = batch_means.size();
    const double n = static_cast<double>(batch_means.size());
    t.mu = std::accumulate(batch_means.begin(), batch_means.end(), 0.0) / n;
    const auto [lo, hi] = std::minmax_element(batch_means.begin(), batch_means.end());
    if (*lo == *hi) {
        t.mu = *lo;  // summation rounding must not invent spread
    } else {
        double ss = 0.0;
        for (double e : batch_means) ss += (e - t.mu) * (e - t.mu);
        t.sigma = std::sqrt(ss / (n - 1.0));
    }
    if (t.sigma == 0.0) {
        t.threshold = t.mu + std::max(1e-6, 0.01 * t.mu);
    } else {
        t.threshold = t.mu + normal_quantile(confidence) * t.sigma;
    }
    return t;
}

std::vector<double> batch_mean_errors(const AutoencoderModel& model, std::span<const Observation> frames,
                                      int batch_size, std::uint64_t seed) {
    if (batch_size <= 0) throw std::invalid_argument("batch_mean_errors: batch size must be positive");
    std::vector<std::size_t> order(frames.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto b = static_cast<std::size_t>(batch_size);
    std::vector<double> means;
    std::vector<Observation> batch(b);
    for (std::size_t start = 0; start + b <= order.size(); start += b) {
        for (std::size_t i = 0; i < b; ++i) batch[i] = frames[order[start + i]];
        means.push_back(reconstruction_error(model, batch).mean);
    }
    return means;
}

ThresholdModel calibrate_threshold(const AutoencoderModel& model, std::span<const Observation> validation,
                                   double confidence, int batch_size, std::uint64_t seed) {
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw std::invalid_argument("calibrate_threshold: confidence must lie in (0, 1)");
    }
    if (batch_size <= 0 || validation.size() / static_cast<std::size_t>(batch_size) < kMinCalibrationBatches) {
        throw std::invalid_argument("calibrate_threshold: " + std::to_string(validation.size()) +
                                    " frames do not fill ten batches of " + std::to_string(batch_size));
    }
    const auto means = batch_mean_errors(model, validation, batch_size, seed);
    return fit_threshold(means, confidence, batch_size);
}

void ThresholdModel::write(std::ostream& os) const {
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    os << "mu = " << mu << '\n'
       << "sigma = " << sigma << '\n'
       << "confidence = " << confidence << '\n'
       << "threshold = " << threshold << '\n'
       << "batch_size = " << batch_size << '\n'
       << "batches = " << batches << '\n';
    os.precision(old);
}

ThresholdModel ThresholdModel::read(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    auto get = [&](const char* key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw std::runtime_error(std::string("threshold record: missing key ") + key);
        return it->second;
    };
    ThresholdModel t;
    try {
        t.mu = std::stod(get("mu"));
        t.sigma = std::stod(get("sigma"));
        t.confidence = std::stod(get("confidence"));
        t.threshold = std::stod(get("threshold"));
        t.batch_size = std::stoi(get("batch_size"));
        t.batches = std::stoul(get("batches"));
    } catch (const std::logic_error& e) {
        throw std::runtime_error(std::string("threshold record: malformed value (") + e.what() + ")");
    }
    return t;
}

void ThresholdModel::save(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("threshold: cannot open " + path.string());
    write(os);
}

ThresholdModel ThresholdModel::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("threshold: cannot open " + path.string());
    return read(is);
}

MatchDecision decide_from_errors(std::span<const double> errors, std::span<const double> thresholds) {
    if (errors.size() != thresholds.size()) throw std::invalid_argument("decide: errors and thresholds differ in length");
    MatchDecision d;
    d.errors.assign(errors.begin(), errors.end());
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (errors[i] < thresholds[i] && (d.pair < 0 || errors[i] < d.error)) {
            d.kind = MatchDecision::Kind::Match;
            d.pair = static_cast<int>(i);
            d.error = errors[i];
        }
    }
    return d;
}

MatchDecision decide(std::span<const Detector* const> detectors, std::span<const Observation> probe) {
    if (probe.empty()) throw std::invalid_argument("decide: empty probe");
    std::vector<double> errors, thresholds;
    for (const Detector* d : detectors) {
        errors.push_back(reconstruction_error(d->autoencoder, probe).mean);
        thresholds.push_back(d->threshold.threshold);
    }
    return decide_from_errors(errors, thresholds);
}

}  // namespace aecl
