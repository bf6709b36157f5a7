#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "percept/errors.hpp"

namespace percept {

struct GruConfig {
    int hidden_size{16};
    double learning_rate{1e-2};
    int epochs{200};
    std::uint64_t seed{0};
};

/// Single-layer gated recurrent unit over per-timestep feature slices, with a
/// logistic readout of the final hidden state:
///   z_t = sigmoid(Wz x_t + Uz h_{t-1} + bz)
///   r_t = sigmoid(Wr x_t + Ur h_{t-1} + br)
///   c_t = tanh(Wc x_t + Uc (r_t * h_{t-1}) + bc)
///   h_t = (1 - z_t) * h_{t-1} + z_t * c_t
///   p   = sigmoid(w . h_T + b)
/// All parameters live in one flat vector so gradients can be checked against
/// central finite differences coordinate by coordinate.
struct GruParams {
    int input_size{0};
    int hidden_size{0};
    std::vector<double> theta;

    static GruParams zeros(int input_size, int hidden_size);
    std::size_t size() const { return theta.size(); }

    // Offsets into theta. Gate weights are row-major [hidden][input].
    std::size_t wz() const { return 0; }
    std::size_t wr() const { return wz() + static_cast<std::size_t>(hidden_size) * input_size; }
    std::size_t wc() const { return wr() + static_cast<std::size_t>(hidden_size) * input_size; }
    std::size_t uz() const { return wc() + static_cast<std::size_t>(hidden_size) * input_size; }
    std::size_t ur() const { return uz() + static_cast<std::size_t>(hidden_size) * hidden_size; }
    std::size_t uc() const { return ur() + static_cast<std::size_t>(hidden_size) * hidden_size; }
    std::size_t bz() const { return uc() + static_cast<std::size_t>(hidden_size) * hidden_size; }
    std::size_t br() const { return bz() + hidden_size; }
    std::size_t bc() const { return br() + hidden_size; }
    std::size_t w_out() const { return bc() + hidden_size; }
    std::size_t b_out() const { return w_out() + hidden_size; }
};

using Sequence = std::vector<std::vector<double>>;  // [timestep][feature]

/// Mean binary cross-entropy of the batch.
double gru_loss(const GruParams& params, const std::vector<Sequence>& sequences,
                const std::vector<int>& labels);

/// Analytic gradient of gru_loss via backpropagation through time.
GruParams gru_gradient(const GruParams& params, const std::vector<Sequence>& sequences,
                       const std::vector<int>& labels);

class GruClassifier {
public:
    /// Full-batch gradient descent for config.epochs steps. Throws
    /// TrainingDiverged when the loss becomes non-finite.
    static GruClassifier fit(const std::vector<Sequence>& sequences,
                             const std::vector<int>& labels, const GruConfig& config);

    double probability(const Sequence& sequence) const;
    /// Thresholded at 0.5; exactly 0.5 resolves to 0.
    int predict(const Sequence& sequence) const;

    const GruParams& params() const { return params_; }

    nlohmann::json to_json() const;  // debugging aid

    /// Seeded initialization, exposed for gradient-check tests.
    static GruParams init_params(int input_size, int hidden_size, std::uint64_t seed);

private:
    GruParams params_;
};

}  // namespace percept
