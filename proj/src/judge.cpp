#include "inspector/judge.hpp"

#include "inspector/blob.hpp"
#include "inspector/error.hpp"
#include "inspector/selection.hpp"
#include "inspector/version.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace inspector {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'I', 'N', 'S', 'P', 'J', 'D', 'G', 'E'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
    return v;
}

std::uint32_t checksum(std::span<const std::uint8_t> bytes) {
    return static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

// Named f64 sections, written in insertion order.
class SectionWriter {
public:
    void matrix(const std::string& name, const Eigen::MatrixXd& m) {
        TensorBlob b{DType::f64, {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())}, {}};
        b.values.reserve(static_cast<std::size_t>(m.size()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) b.values.push_back(m(r, c));
        add(name, std::move(b));
    }
    void vector(const std::string& name, const Eigen::VectorXd& v) {
        add(name, TensorBlob{DType::f64, {static_cast<std::uint32_t>(v.size())}, {v.data(), v.data() + v.size()}});
    }
    void add(const std::string& name, TensorBlob blob) {
        names_.push_back(name);
        blobs_.push_back(std::move(blob));
    }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<TensorBlob>& blobs() const { return blobs_; }

private:
    std::vector<std::string> names_;
    std::vector<TensorBlob> blobs_;
};

class SectionReader {
public:
    SectionReader(std::vector<std::string> names, std::vector<TensorBlob> blobs, std::string context)
        : names_(std::move(names)), blobs_(std::move(blobs)), context_(std::move(context)) {}

    const TensorBlob& get(const std::string& name, std::size_t ndim) const {
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (names_[i] != name) continue;
            if (blobs_[i].dims.size() != ndim)
                throw Error(ErrorKind::format, context_ + ": section '" + name + "' has wrong rank");
            return blobs_[i];
        }
        throw Error(ErrorKind::format, context_ + ": missing section '" + name + "'");
    }
    Eigen::MatrixXd matrix(const std::string& name) const {
        const auto& b = get(name, 2);
        Eigen::MatrixXd m(b.dims[0], b.dims[1]);
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = b.values[k++];
        return m;
    }
    Eigen::VectorXd vector(const std::string& name) const {
        const auto& b = get(name, 1);
        return Eigen::Map<const Eigen::VectorXd>(b.values.data(), static_cast<Eigen::Index>(b.values.size()));
    }

private:
    std::vector<std::string> names_;
    std::vector<TensorBlob> blobs_;
    std::string context_;
};

json write_pipeline(const PipelineModel& p, SectionWriter& w) {
    w.vector("pipeline.impute_means", p.impute_means);
    w.vector("pipeline.scale_means", p.scale_means);
    w.vector("pipeline.scale_stds", p.scale_stds);
    if (p.pca) {
        w.vector("pipeline.pca.mean", p.pca->mean);
        w.matrix("pipeline.pca.components", p.pca->components);
        w.vector("pipeline.pca.explained", p.pca->explained);
    }
    return json{{"standardize", p.standardize}, {"fitted_on", p.fitted_on}, {"pca", p.pca.has_value()}};
}

PipelineModel read_pipeline(const json& h, const SectionReader& r) {
    PipelineModel p;
    p.impute_means = r.vector("pipeline.impute_means");
    p.scale_means = r.vector("pipeline.scale_means");
    p.scale_stds = r.vector("pipeline.scale_stds");
    p.standardize = h.at("standardize").get<bool>();
    p.fitted_on = h.at("fitted_on").get<int>();
    if (h.at("pca").get<bool>()) {
        PcaModel pca;
        pca.mean = r.vector("pipeline.pca.mean");
        pca.components = r.matrix("pipeline.pca.components");
        pca.explained = r.vector("pipeline.pca.explained");
        p.pca = std::move(pca);
    }
    return p;
}

json write_model(const TrainedClassifier& clf, SectionWriter& w) {
    json h{{"family", to_string(clf.spec.family)},
           {"params", clf.spec.params()},
           {"seed", clf.spec.seed},
           {"classes", clf.classes}};
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LogisticProbe>) {
                w.matrix("model.weights", m.weights);
                w.vector("model.bias", m.bias);
                h["C"] = m.C;
                h["one_vs_rest"] = m.one_vs_rest;
                h["converged"] = m.converged;
                h["iterations"] = m.iterations;
            } else if constexpr (std::is_same_v<T, LinearSvm>) {
                w.matrix("model.weights", m.weights);
                w.vector("model.bias", m.bias);
                w.vector("model.platt_a", m.platt_a);
                w.vector("model.platt_b", m.platt_b);
                h["one_vs_rest"] = m.one_vs_rest;
            } else if constexpr (std::is_same_v<T, RandomForest>) {
                // One row per node: feature, threshold, left, right, leaf_class.
                std::size_t total = 0;
                for (const auto& t : m.trees) total += t.feature.size();
                Eigen::MatrixXd nodes(static_cast<Eigen::Index>(total), 5);
                Eigen::VectorXd offsets(static_cast<Eigen::Index>(m.trees.size() + 1));
                Eigen::Index row = 0;
                for (std::size_t t = 0; t < m.trees.size(); ++t) {
                    offsets[static_cast<Eigen::Index>(t)] = static_cast<double>(row);
                    const auto& tree = m.trees[t];
                    for (std::size_t n = 0; n < tree.feature.size(); ++n, ++row)
                        nodes.row(row) << tree.feature[n], tree.threshold[n], tree.left[n], tree.right[n],
                            tree.leaf_class[n];
                }
                offsets[offsets.size() - 1] = static_cast<double>(row);
                w.matrix("model.nodes", nodes);
                w.vector("model.tree_offsets", offsets);
                h["num_features"] = m.num_features;
            } else {
                for (std::size_t l = 0; l < m.weights.size(); ++l) {
                    w.matrix("model.W" + std::to_string(l), m.weights[l]);
                    w.vector("model.b" + std::to_string(l), m.biases[l]);
                }
                h["num_layers"] = m.weights.size();
                h["epochs_run"] = m.epochs_run;
            }
        },
        clf.model);
    return h;
}

TrainedClassifier read_model(const json& h, const SectionReader& r) {
    TrainedClassifier clf;
    const auto family = parse_family(h.at("family").get<std::string>());
    clf.spec = ClassifierSpec::from_json(family, h.at("params"), h.at("seed").get<std::uint64_t>());
    clf.classes = h.at("classes").get<std::vector<int>>();
    switch (family) {
        case Family::LR: {
            LogisticProbe m;
            m.weights = r.matrix("model.weights");
            m.bias = r.vector("model.bias");
            m.classes = clf.classes;
            m.C = h.at("C").get<double>();
            m.one_vs_rest = h.at("one_vs_rest").get<bool>();
            m.converged = h.at("converged").get<bool>();
            m.iterations = h.at("iterations").get<int>();
            clf.model = std::move(m);
            break;
        }
        case Family::LSVM: {
            LinearSvm m;
            m.weights = r.matrix("model.weights");
            m.bias = r.vector("model.bias");
            m.platt_a = r.vector("model.platt_a");
            m.platt_b = r.vector("model.platt_b");
            m.classes = clf.classes;
            m.one_vs_rest = h.at("one_vs_rest").get<bool>();
            clf.model = std::move(m);
            break;
        }
        case Family::RF: {
            RandomForest m;
            m.classes = clf.classes;
            m.num_features = h.at("num_features").get<int>();
            const auto nodes = r.matrix("model.nodes");
            const auto offsets = r.vector("model.tree_offsets");
            if (nodes.cols() != 5 || offsets.size() < 1)
                throw Error(ErrorKind::format, "random forest sections are malformed");
            for (Eigen::Index t = 0; t + 1 < offsets.size(); ++t) {
                DecisionTree tree;
                const auto lo = static_cast<Eigen::Index>(offsets[t]), hi = static_cast<Eigen::Index>(offsets[t + 1]);
                if (lo < 0 || hi < lo || hi > nodes.rows())
                    throw Error(ErrorKind::format, "random forest tree offsets out of range");
                for (Eigen::Index n = lo; n < hi; ++n) {
                    tree.feature.push_back(static_cast<int>(nodes(n, 0)));
                    tree.threshold.push_back(nodes(n, 1));
                    tree.left.push_back(static_cast<int>(nodes(n, 2)));
                    tree.right.push_back(static_cast<int>(nodes(n, 3)));
                    tree.leaf_class.push_back(static_cast<int>(nodes(n, 4)));
                }
                m.trees.push_back(std::move(tree));
            }
            clf.model = std::move(m);
            break;
        }
        case Family::MLP: {
            Mlp m;
            const auto layers = h.at("num_layers").get<std::size_t>();
            for (std::size_t l = 0; l < layers; ++l) {
                m.weights.push_back(r.matrix("model.W" + std::to_string(l)));
                m.biases.push_back(r.vector("model.b" + std::to_string(l)));
            }
            m.classes = clf.classes;
            m.epochs_run = h.at("epochs_run").get<int>();
            clf.model = std::move(m);
            break;
        }
    }
    return clf;
}

}  // namespace

json Provenance::to_json() const {
    return json{{"model_id", model_id},   {"num_layers", num_layers}, {"hidden_dim", hidden_dim},
                {"num_heads", num_heads}, {"seed", seed},             {"toolkit_version", toolkit_version}};
}

std::vector<std::uint8_t> serialize_artifact(const EvaluatorArtifact& a) {
    SectionWriter w;
    json header{{"aspect", a.aspect},
                {"target", to_string(a.target)},
                {"tau", a.tau},
                {"layers", a.layers},
                {"pool", to_string(a.pool)},
                {"include_attention", a.include_attention},
                {"provenance", a.provenance.to_json()}};
    header["pipeline"] = write_pipeline(a.pipeline, w);
    header["classifier"] = write_model(a.classifier, w);
    header["sections"] = w.names();

    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kArtifactVersion);
    const std::string text = header.dump();
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    put_u32(out, static_cast<std::uint32_t>(w.blobs().size()));
    for (const auto& b : w.blobs()) append_blob(out, b);
    put_u32(out, checksum(out));
    return out;
}

EvaluatorArtifact deserialize_artifact(std::span<const std::uint8_t> bytes, const std::string& context) {
    constexpr std::size_t kFixed = sizeof(kMagic) + 4 + 4 + 4 + 4;
    if (bytes.size() < kFixed) throw Error(ErrorKind::truncated, context + ": file too short for an artifact");
    const std::size_t body = bytes.size() - 4;
    if (checksum(bytes.first(body)) != get_u32(bytes, body))
        throw Error(ErrorKind::integrity, context + ": checksum mismatch");
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw Error(ErrorKind::format, context + ": not an evaluator artifact");
    std::size_t at = sizeof(kMagic);
    const auto version = get_u32(bytes, at);
    at += 4;
    if (version != kArtifactVersion)
        throw Error(ErrorKind::unsupported_version,
                    context + ": artifact version " + std::to_string(version) + " is not supported");
    const auto header_len = get_u32(bytes, at);
    at += 4;
    if (header_len > body - at - 4) throw Error(ErrorKind::truncated, context + ": header exceeds file");

    EvaluatorArtifact a;
    try {
        const json h = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(at),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(at + header_len));
        at += header_len;
        const auto count = get_u32(bytes, at);
        at += 4;
        const auto names = h.at("sections").get<std::vector<std::string>>();
        if (names.size() != count) throw Error(ErrorKind::format, context + ": section count disagrees with header");
        std::vector<TensorBlob> blobs;
        const auto payload = bytes.first(body);
        for (std::uint32_t i = 0; i < count; ++i) blobs.push_back(parse_blob(payload, at, context + "/" + names[i]));
        if (at != body) throw Error(ErrorKind::format, context + ": trailing bytes after sections");
        SectionReader r(names, std::move(blobs), context);

        a.aspect = h.at("aspect").get<std::string>();
        a.target = parse_target(h.at("target").get<std::string>());
        a.tau = h.at("tau").get<int>();
        a.layers = h.at("layers").get<std::vector<int>>();
        a.pool = parse_pool_mode(h.at("pool").get<std::string>());
        a.include_attention = h.at("include_attention").get<bool>();
        const auto& p = h.at("provenance");
        a.provenance.model_id = p.at("model_id").get<std::string>();
        a.provenance.num_layers = p.at("num_layers").get<int>();
        a.provenance.hidden_dim = p.at("hidden_dim").get<int>();
        a.provenance.num_heads = p.at("num_heads").get<int>();
        a.provenance.seed = p.at("seed").get<std::uint64_t>();
        a.provenance.toolkit_version = p.at("toolkit_version").get<std::string>();
        a.pipeline = read_pipeline(h.at("pipeline"), r);
        a.classifier = read_model(h.at("classifier"), r);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::format, context + ": bad header: " + e.what());
    }
    for (int l : a.layers)
        if (l < 1 || l > a.provenance.num_layers)
            throw Error(ErrorKind::dimension_mismatch,
                        context + ": layer " + std::to_string(l) + " outside the declared model depth");
    const int dp = pooled_width(a.provenance.hidden_dim, a.pool);
    const int width = static_cast<int>(a.layers.size()) * (dp + (a.include_attention ? 3 : 0));
    if (a.pipeline.input_dim() != width)
        throw Error(ErrorKind::dimension_mismatch, context + ": pipeline expects " +
                                                       std::to_string(a.pipeline.input_dim()) +
                                                       " columns but provenance implies " + std::to_string(width));
    return a;
}

void save_artifact(const EvaluatorArtifact& artifact, const std::string& path) {
    write_file_bytes(path, serialize_artifact(artifact));
}

EvaluatorArtifact load_artifact(const std::string& path) { return deserialize_artifact(read_file_bytes(path), path); }

std::string artifact_file_name(const std::string& aspect, Target target) {
    return aspect + "." + to_string(target) + ".inspector";
}

std::vector<double> ScoreResult::positive_probability() const {
    if (classes.size() != 2) throw Error(ErrorKind::invalid_argument, "positive probability needs a binary artifact");
    std::vector<double> p(static_cast<std::size_t>(probabilities.rows()));
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = probabilities(static_cast<Eigen::Index>(i), 1);
    return p;
}

void ScoreResult::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path);
    out.precision(17);
    out << "id,label";
    for (int c : classes) out << ",p_" << c;
    out << '\n';
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i] << ',' << labels[i];
        for (Eigen::Index c = 0; c < probabilities.cols(); ++c)
            out << ',' << probabilities(static_cast<Eigen::Index>(i), c);
        out << '\n';
    }
}

ScoreResult score_samples(const EvaluatorArtifact& artifact, const Dump& dump) {
    const auto& m = dump.manifest;
    const auto& p = artifact.provenance;
    if (m.num_layers != p.num_layers || m.hidden_dim != p.hidden_dim || m.num_heads != p.num_heads)
        throw Error(ErrorKind::dimension_mismatch,
                    "artifact expects L=" + std::to_string(p.num_layers) + " d=" + std::to_string(p.hidden_dim) +
                        " R=" + std::to_string(p.num_heads) + " but dump has L=" + std::to_string(m.num_layers) +
                        " d=" + std::to_string(m.hidden_dim) + " R=" + std::to_string(m.num_heads));
    if (m.model_id != p.model_id)
        throw Error(ErrorKind::dimension_mismatch,
                    "artifact was built on model '" + p.model_id + "' but dump comes from '" + m.model_id + "'");
    const auto x = concat_multilayer(dump, artifact.layers, artifact.pool, artifact.include_attention);
    const auto z = artifact.pipeline.transform(x.values);
    ScoreResult r;
    r.ids = m.sample_ids;
    r.classes = artifact.classifier.classes;
    r.probabilities = artifact.classifier.predict_proba(z);
    r.labels = artifact.classifier.predict(z);
    return r;
}

AspectScores to_aspect_scores(const ScoreResult& scores) {
    return AspectScores{scores.ids, scores.labels, scores.positive_probability()};
}

RankResult rank_and_slice(std::span<const std::string> ids, std::span<const int> totals,
                          std::span<const double> margins, std::span<const double> fractions) {
    const std::size_t n = ids.size();
    if (n == 0) throw Error(ErrorKind::invalid_argument, "cannot rank an empty corpus");
    if (totals.size() != n || margins.size() != n)
        throw Error(ErrorKind::dimension_mismatch, "ids, totals and margins differ in length");
    for (std::size_t i = 0; i < fractions.size(); ++i)
        if (!(fractions[i] > 0 && fractions[i] <= 1) || (i > 0 && fractions[i] < fractions[i - 1]))
            throw Error(ErrorKind::invalid_argument, "fractions must be ascending within (0, 1]");

    RankResult r;
    r.order.resize(n);
    std::iota(r.order.begin(), r.order.end(), std::size_t{0});
    std::sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) {
        if (totals[a] != totals[b]) return totals[a] > totals[b];
        if (margins[a] != margins[b]) return margins[a] > margins[b];
        return ids[a] < ids[b];
    });
    r.fractions.assign(fractions.begin(), fractions.end());
    // The epsilon keeps 0.3 * 10 from rounding up to 4.
    for (double f : fractions)
        r.slice_sizes.push_back(std::min(n, static_cast<std::size_t>(std::ceil(f * static_cast<double>(n) - 1e-9))));
    return r;
}

FilterReport aggregate_aspects(const std::map<std::string, AspectScores>& by_aspect,
                               std::span<const double> fractions) {
    for (const char* aspect : kCanonicalAspects)
        if (!by_aspect.count(aspect)) throw Error(ErrorKind::invalid_argument, std::string("missing aspect ") + aspect);
    const auto& ids = by_aspect.at(kCanonicalAspects[0]).ids;

    std::vector<std::map<std::string, std::size_t>> index(kCanonicalAspects.size());
    for (std::size_t a = 0; a < kCanonicalAspects.size(); ++a) {
        const auto& s = by_aspect.at(kCanonicalAspects[a]);
        if (s.bits.size() != s.ids.size() || s.positive_probability.size() != s.ids.size())
            throw Error(ErrorKind::dimension_mismatch, std::string("aspect ") + kCanonicalAspects[a] +
                                                           " has mismatched score vectors");
        for (std::size_t i = 0; i < s.ids.size(); ++i) index[a][s.ids[i]] = i;
    }

    std::vector<FilterRow> rows(ids.size());
    std::vector<int> totals(ids.size());
    std::vector<double> margins(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto& row = rows[i];
        row.id = ids[i];
        for (std::size_t a = 0; a < kCanonicalAspects.size(); ++a) {
            const auto it = index[a].find(ids[i]);
            if (it == index[a].end())
                throw Error(ErrorKind::invalid_argument,
                            "sample " + ids[i] + " is missing aspect " + kCanonicalAspects[a]);
            const auto& s = by_aspect.at(kCanonicalAspects[a]);
            const int bit = s.bits[it->second];
            if (bit != 0 && bit != 1)
                throw Error(ErrorKind::invalid_argument, std::string("aspect ") + kCanonicalAspects[a] +
                                                             " score for " + ids[i] + " is not binary");
            row.bits[a] = bit;
            row.total += bit;
            row.margin += s.positive_probability[it->second] - 0.5;
        }
        totals[i] = row.total;
        margins[i] = row.margin;
    }

    FilterReport report;
    report.ranking = rank_and_slice(ids, totals, margins, fractions);
    for (std::size_t r = 0; r < report.ranking.order.size(); ++r) {
        FilterRow row = rows[report.ranking.order[r]];
        row.rank = static_cast<int>(r + 1);
        for (auto size : report.ranking.slice_sizes) row.in_slice.push_back(r < size);
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

std::string fraction_label(double f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", f);
    return buf;
}

}  // namespace

void FilterReport::write_jsonl(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path);
    for (const auto& row : rows) {
        json j{{"id", row.id}, {"total", row.total}, {"margin", row.margin}, {"rank", row.rank}};
        for (std::size_t a = 0; a < kCanonicalAspects.size(); ++a) j[kCanonicalAspects[a]] = row.bits[a];
        json slices = json::object();
        for (std::size_t s = 0; s < ranking.fractions.size(); ++s)
            slices[fraction_label(ranking.fractions[s])] = static_cast<bool>(row.in_slice[s]);
        j["slices"] = std::move(slices);
        out << j.dump() << '\n';
    }
}

void FilterReport::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path);
    out.precision(17);
    out << "id";
    for (const char* a : kCanonicalAspects) out << ',' << a;
    out << ",total,margin,rank";
    for (double f : ranking.fractions) out << ",slice_" << fraction_label(f);
    out << '\n';
    for (const auto& row : rows) {
        out << row.id;
        for (int b : row.bits) out << ',' << b;
        out << ',' << row.total << ',' << row.margin << ',' << row.rank;
        for (bool in : row.in_slice) out << ',' << (in ? 1 : 0);
        out << '\n';
    }
}

json FilterReport::slices_json() const {
    json out = json::array();
    for (std::size_t s = 0; s < ranking.fractions.size(); ++s) {
        std::vector<std::string> ids;
        for (std::size_t r = 0; r < ranking.slice_sizes[s]; ++r) ids.push_back(rows[r].id);
        out.push_back(json{{"fraction", ranking.fractions[s]}, {"size", ranking.slice_sizes[s]}, {"ids", ids}});
    }
    return out;
}

}  // namespace inspector
