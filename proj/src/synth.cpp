#include "inspector/dumpio.hpp"
#include "inspector/error.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace inspector {

namespace {

// Class means sit at +/- kClassOffset along a unit direction, so the projected
// noise (std = noise_std) leaves a 4-sigma margin at noise_std = 0.5.
constexpr double kClassOffset = 2.0;
// Within-class level offset along a second, orthogonal direction.
constexpr double kLevelOffset = 1.0;

std::vector<double> unit_direction(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> gauss;
    std::vector<double> v(dim);
    double norm = 0;
    for (auto& x : v) {
        x = gauss(rng);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

}  // namespace

SyntheticData generate_synthetic_dump(const SynthSpec& spec) {
    if (spec.num_layers < 1 || spec.hidden_dim < 1 || spec.num_heads < 1 || spec.num_samples < 1)
        throw Error(ErrorKind::invalid_argument, "synthetic spec dimensions must be positive");
    if (spec.signal_layer < 1 || spec.signal_layer > spec.num_layers)
        throw Error(ErrorKind::invalid_argument, "signal_layer must lie in 1..num_layers");
    if (!(spec.noise_std >= 0)) throw Error(ErrorKind::invalid_argument, "noise_std must be nonnegative");
    if (!(spec.class_balance > 0 && spec.class_balance < 1))
        throw Error(ErrorKind::invalid_argument, "class_balance must lie in (0, 1)");

    const int L = spec.num_layers, d = spec.hidden_dim, R = spec.num_heads;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unit;
    std::uniform_int_distribution<int> seq_len_dist(16, 128);

    const auto class_dir = unit_direction(rng, d);
    std::vector<double> level_dir(d, 0.0);
    if (d > 1) {
        level_dir = unit_direction(rng, d);
        double dot = 0;
        for (int j = 0; j < d; ++j) dot += level_dir[j] * class_dir[j];
        double norm = 0;
        for (int j = 0; j < d; ++j) {
            level_dir[j] -= dot * class_dir[j];
            norm += level_dir[j] * level_dir[j];
        }
        norm = std::sqrt(norm);
        for (auto& x : level_dir) x /= norm;
    }

    SyntheticData out;
    auto& m = out.dump.manifest;
    m.model_id = spec.model_id;
    m.aspect = spec.aspect;
    m.num_layers = L;
    m.hidden_dim = d;
    m.num_heads = R;

    for (int i = 0; i < spec.num_samples; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "s%05d", i);
        const int seq_len = seq_len_dist(rng);
        m.sample_ids.emplace_back(id);
        m.seq_lens[id] = seq_len;

        // Latent quality: class y, then a within-class position t quantized to a level.
        const int y = unit(rng) < spec.class_balance ? 1 : 0;
        const double t = unit(rng);
        const int score = y == 1 ? 4 + (t >= 0.5 ? 1 : 0) : 1 + std::min(2, static_cast<int>(t * 3.0));
        out.scores.push_back(score);
        out.binary.push_back(y);
        out.labels.set(id, spec.aspect, score);

        SampleRepresentation s(L, d, R);
        std::vector<double> anchor(d), g1(d), g2(d), frac(d);
        for (int layer = 1; layer <= L; ++layer) {
            const bool signal = layer == spec.signal_layer;
            PoolMode anchor_pool = PoolMode::mean;
            if (signal) {
                anchor_pool = spec.signal_pool == PoolMode::concat ? PoolMode::mean : spec.signal_pool;
                const double cls = kClassOffset * (2.0 * y - 1.0);
                const double lvl = kLevelOffset * (2.0 * t - 1.0);
                for (int j = 0; j < d; ++j)
                    anchor[j] = spec.signal_scale * (cls * class_dir[j] + lvl * level_dir[j]) +
                                spec.noise_std * gauss(rng);
            } else {
                for (auto& x : anchor) x = gauss(rng);
            }
            for (int j = 0; j < d; ++j) {
                g1[j] = 0.1 + std::abs(gauss(rng));
                g2[j] = 0.1 + std::abs(gauss(rng));
                frac[j] = unit(rng);
            }

            auto mean = s.mean(layer), last = s.last(layer), lo = s.min(layer), hi = s.max(layer);
            for (int j = 0; j < d; ++j) {
                switch (anchor_pool) {
                    case PoolMode::mean:
                    case PoolMode::concat:
                        mean[j] = anchor[j];
                        lo[j] = anchor[j] - g1[j];
                        hi[j] = anchor[j] + g2[j];
                        last[j] = lo[j] + frac[j] * (hi[j] - lo[j]);
                        break;
                    case PoolMode::min:
                        lo[j] = anchor[j];
                        mean[j] = anchor[j] + g1[j];
                        hi[j] = mean[j] + g2[j];
                        last[j] = lo[j] + frac[j] * (hi[j] - lo[j]);
                        break;
                    case PoolMode::max:
                        hi[j] = anchor[j];
                        mean[j] = anchor[j] - g1[j];
                        lo[j] = mean[j] - g2[j];
                        last[j] = lo[j] + frac[j] * (hi[j] - lo[j]);
                        break;
                    case PoolMode::last:
                        last[j] = anchor[j];
                        mean[j] = frac[j] * 2.0 - 1.0;
                        lo[j] = std::min(mean[j], last[j]) - g1[j];
                        hi[j] = std::max(mean[j], last[j]) + g2[j];
                        break;
                }
            }
            const double max_entropy = std::log(static_cast<double>(seq_len));
            for (auto& e : s.entropies(layer)) e = max_entropy * (0.1 + 0.9 * unit(rng));
        }
        // Values are generated at storage precision so write/read is lossless.
        for (auto& v : s.data()) v = static_cast<double>(static_cast<float>(v));
        out.dump.samples.push_back(std::move(s));
    }
    return out;
}

}  // namespace inspector
