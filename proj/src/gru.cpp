#include "percept/gru.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "percept/rng.hpp"

namespace percept {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kProbClamp = 1e-12;

/// y += M x for a row-major [rows x cols] block of theta.
void gemv_add(const std::vector<double>& theta, std::size_t offset, int rows, int cols,
              const double* x, double* y) {
    for (int r = 0; r < rows; ++r) {
        const double* row = theta.data() + offset + static_cast<std::size_t>(r) * cols;
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] += acc;
    }
}

/// y += M^T x (x has `rows` entries, y has `cols`).
void gemv_t_add(const std::vector<double>& theta, std::size_t offset, int rows, int cols,
                const double* x, double* y) {
    for (int r = 0; r < rows; ++r) {
        const double* row = theta.data() + offset + static_cast<std::size_t>(r) * cols;
        const double xr = x[r];
        for (int c = 0; c < cols; ++c) y[c] += row[c] * xr;
    }
}

/// grad[offset + r*cols + c] += x[r] * v[c]  (outer-product accumulation).
void outer_add(std::vector<double>& grad, std::size_t offset, int rows, int cols,
               const double* x, const double* v) {
    for (int r = 0; r < rows; ++r) {
        double* row = grad.data() + offset + static_cast<std::size_t>(r) * cols;
        const double xr = x[r];
        for (int c = 0; c < cols; ++c) row[c] += xr * v[c];
    }
}

struct ForwardTrace {
    // Per timestep: gate activations and hidden states (h[0] is the initial
    // zero state, h[t+1] the state after consuming slice t).
    std::vector<std::vector<double>> z, r, c, h;
    double probability{0.0};
};

ForwardTrace forward(const GruParams& p, const Sequence& seq) {
    const int h_size = p.hidden_size;
    const int steps = static_cast<int>(seq.size());
    ForwardTrace trace;
    trace.z.assign(steps, std::vector<double>(h_size, 0.0));
    trace.r.assign(steps, std::vector<double>(h_size, 0.0));
    trace.c.assign(steps, std::vector<double>(h_size, 0.0));
    trace.h.assign(steps + 1, std::vector<double>(h_size, 0.0));

    std::vector<double> gated(h_size);
    for (int t = 0; t < steps; ++t) {
        const double* x = seq[t].data();
        const double* h_prev = trace.h[t].data();
        std::vector<double>& z = trace.z[t];
        std::vector<double>& r = trace.r[t];
        std::vector<double>& c = trace.c[t];

        for (int i = 0; i < h_size; ++i) z[i] = p.theta[p.bz() + i];
        gemv_add(p.theta, p.wz(), h_size, p.input_size, x, z.data());
        gemv_add(p.theta, p.uz(), h_size, h_size, h_prev, z.data());
        for (int i = 0; i < h_size; ++i) z[i] = sigmoid(z[i]);

        for (int i = 0; i < h_size; ++i) r[i] = p.theta[p.br() + i];
        gemv_add(p.theta, p.wr(), h_size, p.input_size, x, r.data());
        gemv_add(p.theta, p.ur(), h_size, h_size, h_prev, r.data());
        for (int i = 0; i < h_size; ++i) r[i] = sigmoid(r[i]);

        for (int i = 0; i < h_size; ++i) gated[i] = r[i] * h_prev[i];
        for (int i = 0; i < h_size; ++i) c[i] = p.theta[p.bc() + i];
        gemv_add(p.theta, p.wc(), h_size, p.input_size, x, c.data());
        gemv_add(p.theta, p.uc(), h_size, h_size, gated.data(), c.data());
        for (int i = 0; i < h_size; ++i) c[i] = std::tanh(c[i]);

        for (int i = 0; i < h_size; ++i) {
            trace.h[t + 1][i] = (1.0 - z[i]) * h_prev[i] + z[i] * c[i];
        }
    }

    double logit = p.theta[p.b_out()];
    const std::vector<double>& h_final = trace.h[steps];
    for (int i = 0; i < h_size; ++i) logit += p.theta[p.w_out() + i] * h_final[i];
    trace.probability = sigmoid(logit);
    return trace;
}

void backward(const GruParams& p, const Sequence& seq, const ForwardTrace& trace,
              double dlogit, GruParams& grad) {
    const int h_size = p.hidden_size;
    const int steps = static_cast<int>(seq.size());

    std::vector<double> dh(h_size, 0.0);
    for (int i = 0; i < h_size; ++i) {
        grad.theta[p.w_out() + i] += dlogit * trace.h[steps][i];
        dh[i] = dlogit * p.theta[p.w_out() + i];
    }
    grad.theta[p.b_out()] += dlogit;

    std::vector<double> dz(h_size), dc(h_size), dr(h_size), dgated(h_size),
        da(h_size), dh_prev(h_size);
    for (int t = steps - 1; t >= 0; --t) {
        const double* x = seq[t].data();
        const std::vector<double>& z = trace.z[t];
        const std::vector<double>& r = trace.r[t];
        const std::vector<double>& c = trace.c[t];
        const std::vector<double>& h_prev = trace.h[t];

        for (int i = 0; i < h_size; ++i) {
            dz[i] = dh[i] * (c[i] - h_prev[i]);
            dc[i] = dh[i] * z[i];
            dh_prev[i] = dh[i] * (1.0 - z[i]);
        }

        // Candidate path: a_c = Wc x + Uc (r*h_prev) + bc, c = tanh(a_c).
        for (int i = 0; i < h_size; ++i) da[i] = dc[i] * (1.0 - c[i] * c[i]);
        outer_add(grad.theta, p.wc(), h_size, p.input_size, da.data(), x);
        std::vector<double> gated(h_size);
        for (int i = 0; i < h_size; ++i) gated[i] = r[i] * h_prev[i];
        outer_add(grad.theta, p.uc(), h_size, h_size, da.data(), gated.data());
        for (int i = 0; i < h_size; ++i) grad.theta[p.bc() + i] += da[i];
        std::fill(dgated.begin(), dgated.end(), 0.0);
        gemv_t_add(p.theta, p.uc(), h_size, h_size, da.data(), dgated.data());
        for (int i = 0; i < h_size; ++i) {
            dr[i] = dgated[i] * h_prev[i];
            dh_prev[i] += dgated[i] * r[i];
        }

        // Update gate path: a_z = Wz x + Uz h_prev + bz, z = sigmoid(a_z).
        for (int i = 0; i < h_size; ++i) da[i] = dz[i] * z[i] * (1.0 - z[i]);
        outer_add(grad.theta, p.wz(), h_size, p.input_size, da.data(), x);
        outer_add(grad.theta, p.uz(), h_size, h_size, da.data(), h_prev.data());
        for (int i = 0; i < h_size; ++i) grad.theta[p.bz() + i] += da[i];
        gemv_t_add(p.theta, p.uz(), h_size, h_size, da.data(), dh_prev.data());

        // Reset gate path: a_r = Wr x + Ur h_prev + br, r = sigmoid(a_r).
        for (int i = 0; i < h_size; ++i) da[i] = dr[i] * r[i] * (1.0 - r[i]);
        outer_add(grad.theta, p.wr(), h_size, p.input_size, da.data(), x);
        outer_add(grad.theta, p.ur(), h_size, h_size, da.data(), h_prev.data());
        for (int i = 0; i < h_size; ++i) grad.theta[p.br() + i] += da[i];
        gemv_t_add(p.theta, p.ur(), h_size, h_size, da.data(), dh_prev.data());

        dh = dh_prev;
    }
}

void validate_batch(const std::vector<Sequence>& sequences, const std::vector<int>& labels) {
    if (sequences.empty() || sequences.size() != labels.size()) {
        throw InvalidArgument("gru: empty or mismatched training batch");
    }
    for (const Sequence& s : sequences) {
        if (s.empty() || s[0].empty()) throw InvalidArgument("gru: empty sequence");
    }
}

/// Mean BCE over the batch; accumulates the gradient too when grad != nullptr.
double batch_pass(const GruParams& params, const std::vector<Sequence>& sequences,
                  const std::vector<int>& labels, GruParams* grad) {
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(sequences.size());
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        const ForwardTrace trace = forward(params, sequences[i]);
        const double p = std::clamp(trace.probability, kProbClamp, 1.0 - kProbClamp);
        loss += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
        if (grad != nullptr) {
            // d(mean BCE)/d(logit) = (p - y) / N, via the unclamped probability.
            const double dlogit = (trace.probability - labels[i]) * inv_n;
            backward(params, sequences[i], trace, dlogit, *grad);
        }
    }
    return loss * inv_n;
}

}  // namespace

GruParams GruParams::zeros(int input_size, int hidden_size) {
    GruParams p;
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    const std::size_t n = 3 * static_cast<std::size_t>(hidden_size) * input_size +
                          3 * static_cast<std::size_t>(hidden_size) * hidden_size +
                          3 * static_cast<std::size_t>(hidden_size) + hidden_size + 1;
    p.theta.assign(n, 0.0);
    return p;
}

double gru_loss(const GruParams& params, const std::vector<Sequence>& sequences,
                const std::vector<int>& labels) {
    validate_batch(sequences, labels);
    return batch_pass(params, sequences, labels, nullptr);
}

GruParams gru_gradient(const GruParams& params, const std::vector<Sequence>& sequences,
                       const std::vector<int>& labels) {
    validate_batch(sequences, labels);
    GruParams grad = GruParams::zeros(params.input_size, params.hidden_size);
    batch_pass(params, sequences, labels, &grad);
    return grad;
}

GruParams GruClassifier::init_params(int input_size, int hidden_size, std::uint64_t seed) {
    GruParams p = GruParams::zeros(input_size, hidden_size);
    Rng rng(derive_seed(seed, "gru-init"));
    const double w_scale = 1.0 / std::sqrt(static_cast<double>(input_size));
    const double u_scale = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    const std::size_t w_end = p.uz();
    for (std::size_t i = 0; i < w_end; ++i) p.theta[i] = rng.gaussian(0.0, w_scale);
    for (std::size_t i = w_end; i < p.bz(); ++i) p.theta[i] = rng.gaussian(0.0, u_scale);
    // Biases start at zero; readout weights small.
    for (std::size_t i = p.w_out(); i < p.b_out(); ++i) {
        p.theta[i] = rng.gaussian(0.0, u_scale);
    }
    return p;
}

GruClassifier GruClassifier::fit(const std::vector<Sequence>& sequences,
                                 const std::vector<int>& labels, const GruConfig& config) {
    validate_batch(sequences, labels);
    if (config.hidden_size < 1) throw InvalidArgument("gru: hidden_size must be >= 1");
    if (config.epochs < 1) throw InvalidArgument("gru: epochs must be >= 1");

    const int input_size = static_cast<int>(sequences[0][0].size());
    GruClassifier model;
    model.params_ = init_params(input_size, config.hidden_size, config.seed);

    GruParams grad = GruParams::zeros(input_size, config.hidden_size);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::fill(grad.theta.begin(), grad.theta.end(), 0.0);
        const double loss = batch_pass(model.params_, sequences, labels, &grad);
        if (!std::isfinite(loss)) {
            throw TrainingDiverged(
                "gru: non-finite loss at epoch " + std::to_string(epoch), epoch);
        }
        for (std::size_t i = 0; i < model.params_.theta.size(); ++i) {
            model.params_.theta[i] -= config.learning_rate * grad.theta[i];
        }
    }
    return model;
}

double GruClassifier::probability(const Sequence& sequence) const {
    return forward(params_, sequence).probability;
}

int GruClassifier::predict(const Sequence& sequence) const {
    return probability(sequence) > 0.5 ? 1 : 0;
}

nlohmann::json GruClassifier::to_json() const {
    return {{"input_size", params_.input_size},
            {"hidden_size", params_.hidden_size},
            {"theta", params_.theta}};
}

}  // namespace percept
