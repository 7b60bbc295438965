#include "mg/noise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mg/errors.hpp"

namespace mg {

NoiseModel NoiseModel::none() { return NoiseModel(); }

NoiseModel NoiseModel::gaussian(double sd) {
    if (!(sd >= 0.0)) throw Error("noise model: gaussian sd must be >= 0");
    NoiseModel m;
    m.kind_ = sd > 0.0 ? Kind::gaussian : Kind::none;
    m.sd_ = sd;
    m.variance_ = sd * sd;
    m.normal_ = std::normal_distribution<double>(0.0, sd > 0.0 ? sd : 1.0);
    return m;
}

NoiseModel NoiseModel::discrete(std::vector<double> values, std::vector<double> probs) {
    if (values.empty() || values.size() != probs.size())
        throw Error("noise model: discrete needs equal-length nonempty values/probs");
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw Error("noise model: probabilities must be >= 0");
        total += p;
    }
    if (!(total > 0.0)) throw Error("noise model: probabilities must not all be zero");

    NoiseModel m;
    m.kind_ = Kind::discrete;
    // Normalize, then shift values so the mean is exactly zero: the market
    // model assumes unbiased exogenous noise, and any offset belongs to the
    // producer bias b instead.
    double mean = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) mean += values[i] * (probs[i] / total);
    double var = 0.0, cum = 0.0;
    m.atoms_.reserve(values.size());
    m.cumulative_.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        double v = values[i] - mean;
        double p = probs[i] / total;
        m.atoms_.emplace_back(v, p);
        var += p * v * v;
        cum += p;
        m.cumulative_.push_back(cum);
    }
    m.cumulative_.back() = 1.0;  // guard against rounding in the prefix sums
    m.variance_ = var;
    return m;
}

double NoiseModel::sample(std::mt19937_64& gen) const {
    switch (kind_) {
        case Kind::none:
            return 0.0;
        case Kind::gaussian:
            return normal_(gen);
        case Kind::discrete: {
            double u = std::generate_canonical<double, 53>(gen);
            auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
            std::size_t k = std::min<std::size_t>(
                static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
            return atoms_[k].first;
        }
    }
    return 0.0;  // unreachable
}

std::string NoiseModel::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::none:
            os << "none";
            break;
        case Kind::gaussian:
            os << "gaussian(sd=" << sd_ << ")";
            break;
        case Kind::discrete: {
            os << "discrete[";
            for (std::size_t i = 0; i < atoms_.size(); ++i)
                os << (i ? "," : "") << atoms_[i].first << ":" << atoms_[i].second;
            os << "]";
            break;
        }
    }
    return os.str();
}

}  // namespace mg
