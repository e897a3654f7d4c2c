#include "inspector/classifiers.hpp"

#include "inspector/error.hpp"
#include "inspector/metrics.hpp"
#include "inspector/probes.hpp"

#include <fstream>
#include <set>
#include <sstream>

using nlohmann::json;

namespace inspector {

const char* to_string(Family family) {
    switch (family) {
        case Family::LR: return "LR";
        case Family::LSVM: return "LSVM";
        case Family::RF: return "RF";
        case Family::MLP: return "MLP";
    }
    return "?";
}

Family parse_family(std::string_view text) {
    for (auto f : kAllFamilies)
        if (text == to_string(f)) return f;
    throw Error(ErrorKind::invalid_argument, "unknown classifier family '" + std::string(text) + "'");
}

json ClassifierSpec::params() const {
    switch (family) {
        case Family::LR:
        case Family::LSVM: return json{{"C", C}};
        case Family::RF:
            return json{{"n_estimators", n_estimators},
                        {"max_depth", max_depth == 0 ? json(nullptr) : json(max_depth)},
                        {"min_samples_leaf", min_samples_leaf}};
        case Family::MLP: return json{{"alpha", alpha}, {"learning_rate", learning_rate}, {"hidden", hidden}};
    }
    return json::object();
}

std::string ClassifierSpec::describe() const { return std::string(to_string(family)) + params().dump(); }

ClassifierSpec ClassifierSpec::from_json(Family family, const json& params, std::uint64_t seed) {
    ClassifierSpec spec = default_spec(family, seed);
    std::set<std::string> allowed;
    switch (family) {
        case Family::LR:
        case Family::LSVM: allowed = {"C"}; break;
        case Family::RF: allowed = {"n_estimators", "max_depth", "min_samples_leaf"}; break;
        case Family::MLP: allowed = {"alpha", "learning_rate", "hidden"}; break;
    }
    try {
        for (const auto& [key, value] : params.items()) {
            if (!allowed.count(key))
                throw Error(ErrorKind::invalid_argument,
                            "hyperparameter '" + key + "' is not valid for " + to_string(family));
            if (key == "C") spec.C = value.get<double>();
            else if (key == "n_estimators") spec.n_estimators = value.get<int>();
            else if (key == "max_depth") spec.max_depth = value.is_null() ? 0 : value.get<int>();
            else if (key == "min_samples_leaf") spec.min_samples_leaf = value.get<int>();
            else if (key == "alpha") spec.alpha = value.get<double>();
            else if (key == "learning_rate") spec.learning_rate = value.get<double>();
            else if (key == "hidden") spec.hidden = value.get<std::vector<int>>();
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::format, std::string("bad hyperparameter value: ") + e.what());
    }
    spec.validate();
    return spec;
}

void ClassifierSpec::validate() const {
    auto fail = [&](const std::string& what) { throw Error(ErrorKind::invalid_argument, describe() + ": " + what); };
    switch (family) {
        case Family::LR:
        case Family::LSVM:
            if (!(C > 0)) fail("C must be positive");
            break;
        case Family::RF:
            if (n_estimators < 1) fail("n_estimators must be >= 1");
            if (max_depth < 0) fail("max_depth must be >= 0 (0 = unlimited)");
            if (min_samples_leaf < 1) fail("min_samples_leaf must be >= 1");
            break;
        case Family::MLP:
            if (hidden.empty()) fail("at least one hidden layer required");
            for (int h : hidden)
                if (h < 1) fail("hidden layer sizes must be positive");
            if (!(learning_rate > 0)) fail("learning_rate must be positive");
            if (alpha < 0) fail("alpha must be >= 0");
            break;
    }
}

ClassifierSpec default_spec(Family family, std::uint64_t seed) {
    ClassifierSpec spec;
    spec.family = family;
    spec.seed = seed;
    return spec;
}

std::vector<ClassifierSpec> classifier_grid(Family family, std::uint64_t seed) {
    std::vector<ClassifierSpec> grid;
    auto base = default_spec(family, seed);
    switch (family) {
        case Family::LR:
            for (double c : {0.001, 0.01, 0.1, 1.0}) {
                base.C = c;
                grid.push_back(base);
            }
            break;
        case Family::LSVM:
            for (double c : {0.001, 0.01, 0.1, 1.0, 10.0, 100.0}) {
                base.C = c;
                grid.push_back(base);
            }
            break;
        case Family::RF:
            for (int trees : {100, 300, 500})
                for (int depth : {0, 10, 20})
                    for (int leaf : {1, 2, 5}) {
                        base.n_estimators = trees;
                        base.max_depth = depth;
                        base.min_samples_leaf = leaf;
                        grid.push_back(base);
                    }
            break;
        case Family::MLP:
            for (double alpha : {1e-4, 1e-3, 1e-2})
                for (double lr : {1e-4, 1e-3, 1e-2})
                    for (const auto& shape : {std::vector<int>{200, 100}, std::vector<int>{100},
                                              std::vector<int>{200, 100, 50}}) {
                        base.alpha = alpha;
                        base.learning_rate = lr;
                        base.hidden = shape;
                        grid.push_back(base);
                    }
            break;
    }
    return grid;
}

TrainedClassifier train_classifier(const ClassifierSpec& spec, const Eigen::MatrixXd& x, std::span<const int> y,
                                   Execution exec) {
    spec.validate();
    TrainedClassifier out;
    out.spec = spec;
    switch (spec.family) {
        case Family::LR: {
            auto m = fit_logistic_probe(x, y, LogisticOptions{spec.C, true, 1e-6, 2000});
            out.classes = m.classes;
            out.model = std::move(m);
            break;
        }
        case Family::LSVM: {
            SvmOptions o;
            o.C = spec.C;
            o.seed = spec.seed;
            auto m = fit_linear_svm(x, y, o);
            out.classes = m.classes;
            out.model = std::move(m);
            break;
        }
        case Family::RF: {
            ForestOptions o{spec.n_estimators, spec.max_depth, spec.min_samples_leaf, true, spec.seed};
            auto m = fit_random_forest(x, y, o, exec);
            out.classes = m.classes;
            out.model = std::move(m);
            break;
        }
        case Family::MLP: {
            MlpOptions o;
            o.hidden = spec.hidden;
            o.alpha = spec.alpha;
            o.learning_rate = spec.learning_rate;
            o.seed = spec.seed;
            auto m = fit_mlp(x, y, o);
            out.classes = m.classes;
            out.model = std::move(m);
            break;
        }
    }
    return out;
}

Eigen::MatrixXd TrainedClassifier::predict_proba(const Eigen::MatrixXd& x) const {
    return std::visit([&](const auto& m) { return m.predict_proba(x); }, model);
}

std::vector<int> TrainedClassifier::predict(const Eigen::MatrixXd& x) const {
    return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

std::size_t pick_best(std::span<const GridPoint> points) {
    if (points.empty()) throw Error(ErrorKind::invalid_argument, "empty grid");
    std::size_t best = 0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto& a = points[i];
        const auto& b = points[best];
        if (a.macro_f1_mean > b.macro_f1_mean || (a.macro_f1_mean == b.macro_f1_mean && a.macro_f1_std < b.macro_f1_std))
            best = i;
    }
    return best;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const int> rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    return out;
}

}  // namespace

GridResult grid_search(std::span<const ClassifierSpec> grid, const Eigen::MatrixXd& x, std::span<const int> y,
                       const FoldAssignment& folds, const PipelineOptions& pipeline, Execution exec) {
    if (grid.empty()) throw Error(ErrorKind::invalid_argument, "classifier grid is empty");
    if (x.rows() != static_cast<Eigen::Index>(y.size()) || folds.fold_of.size() != y.size())
        throw Error(ErrorKind::dimension_mismatch, "features, labels and folds must align");

    const int k = folds.k;
    const std::size_t items = grid.size() * static_cast<std::size_t>(k);
    std::vector<Metrics> scores(items);
    std::vector<std::vector<int>> train_rows(k), test_rows(k);
    for (int f = 0; f < k; ++f) {
        train_rows[f] = folds.train_rows(f);
        test_rows[f] = folds.test_rows(f);
    }

    auto run = [&](std::size_t item) {
        const auto& spec = grid[item / k];
        const int fold = static_cast<int>(item % k);
        const auto x_train_raw = take_rows(x, train_rows[fold]);
        std::vector<int> y_train, y_test;
        for (int r : train_rows[fold]) y_train.push_back(y[r]);
        for (int r : test_rows[fold]) y_test.push_back(y[r]);
        const auto model = fit_pipeline(x_train_raw, pipeline);
        const auto clf = train_classifier(spec, model.transform(x_train_raw), y_train, Execution::serial);
        const auto pred = clf.predict(model.transform(take_rows(x, test_rows[fold])));
        scores[item] = compute_metrics(y_test, pred);
    };

    if (exec == Execution::parallel) {
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(items); ++i) {
            try {
                run(static_cast<std::size_t>(i));
            } catch (...) {
#pragma omp critical(inspector_grid_failure)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    } else {
        for (std::size_t i = 0; i < items; ++i) run(i);
    }

    GridResult result;
    result.family = grid.front().family;
    result.fits = static_cast<int>(items);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        GridPoint p;
        p.spec = grid[g];
        for (int f = 0; f < k; ++f) {
            p.fold_macro_f1.push_back(scores[g * k + f].macro_f1);
            p.fold_accuracy.push_back(scores[g * k + f].accuracy);
        }
        const auto mf = mean_std(p.fold_macro_f1);
        const auto ac = mean_std(p.fold_accuracy);
        p.macro_f1_mean = mf.mean;
        p.macro_f1_std = mf.std;
        p.accuracy_mean = ac.mean;
        p.accuracy_std = ac.std;
        result.points.push_back(std::move(p));
    }
    result.best = pick_best(result.points);
    result.pipeline = fit_pipeline(x, pipeline);
    result.refit = train_classifier(result.best_point().spec, result.pipeline.transform(x), y, exec);
    return result;
}

GridResult grid_search(Family family, const Eigen::MatrixXd& x, std::span<const int> y, const FoldAssignment& folds,
                       const PipelineOptions& pipeline, std::uint64_t seed, Execution exec) {
    const auto grid = classifier_grid(family, seed);
    return grid_search(grid, x, y, folds, pipeline, exec);
}

void GridResult::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path);
    out.precision(17);
    out << "family,hyperparameters,fold_macro_f1,macro_f1_mean,macro_f1_std,accuracy_mean,accuracy_std,best\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        std::ostringstream folds;
        folds.precision(17);
        for (std::size_t f = 0; f < p.fold_macro_f1.size(); ++f) folds << (f ? ";" : "") << p.fold_macro_f1[f];
        std::string params = p.spec.params().dump();
        std::string quoted = "\"";
        for (char c : params) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
        quoted += "\"";
        out << to_string(p.spec.family) << ',' << quoted << ',' << folds.str() << ',' << p.macro_f1_mean << ','
            << p.macro_f1_std << ',' << p.accuracy_mean << ',' << p.accuracy_std << ',' << (i == best ? 1 : 0) << '\n';
    }
}

}  // namespace inspector
