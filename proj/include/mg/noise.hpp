#pragma once

#include <random>
#include <string>
#include <vector>

namespace mg {

/**
 * Exogenous demand noise eta^t added to the rescaled excess demand before the
 * price response is applied.  Three families:
 *
 *   none      eta = 0 every step
 *   gaussian  eta ~ N(0, sd^2), i.i.d. per step
 *   discrete  eta drawn from a finite set of values; the values are shifted
 *             at construction so the distribution has exactly zero mean
 *
 * The model is copyable and owns no generator: callers pass the stream so the
 * draw order stays under the run's seed-derivation contract.
 */
class NoiseModel {
  public:
    enum class Kind { none, gaussian, discrete };

    static NoiseModel none();
    static NoiseModel gaussian(double sd);
    static NoiseModel discrete(std::vector<double> values, std::vector<double> probs);

    double sample(std::mt19937_64& gen) const;
    double variance() const { return variance_; }
    Kind kind() const { return kind_; }

    /// Gaussian width (0 for none/discrete); used by the theory side.
    double sd() const { return sd_; }
    /// Zero-mean atoms (value, probability); empty unless discrete.
    const std::vector<std::pair<double, double>>& atoms() const { return atoms_; }

    std::string describe() const;

  private:
    NoiseModel() = default;

    Kind kind_ = Kind::none;
    double sd_ = 0.0;
    double variance_ = 0.0;
    std::vector<std::pair<double, double>> atoms_;  // (value, prob), mean 0
    std::vector<double> cumulative_;                // prefix sums of probs
    mutable std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace mg
