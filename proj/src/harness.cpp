#include "classy/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "classy/error.hpp"
#include "classy/metrics.hpp"
#include "classy/parallel.hpp"

namespace classy {

void validate(const ExperimentConfig& config)
{
    if (config.n_replicates < 1)
        throw ConfigError("replicates must be at least 1");
    if (config.n_models < 1)
        throw ConfigError("models must be at least 1");
    if (config.k_grid.empty())
        throw ConfigError("k-grid must not be empty");
    for (int k : config.k_grid)
        if (k < 1)
            throw ConfigError("k-grid entries must be at least 1");
    if (config.methods.empty())
        throw ConfigError("at least one ensemble method is required");
    if (!(config.alpha > 0.0 && config.alpha < 1.0))
        throw ConfigError("alpha must be in (0, 1)");
    if (config.permutation_rounds < 1)
        throw ConfigError("permutation rounds must be at least 1");
    if (config.jobs < 1)
        throw ConfigError("jobs must be at least 1");
    if (config.time_limit_seconds && !(*config.time_limit_seconds > 0.0))
        throw ConfigError("time limit must be positive");
    for (double f : config.fractions)
        if (!(f > 0.0))
            throw ConfigError("split fractions must be positive");
    if (std::abs(config.fractions[0] + config.fractions[1] + config.fractions[2] - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");
    PoolSpec spec;
    spec.n_models = config.n_models;
    spec.family_weights = config.family_weights;
    spec.ranges = config.ranges;
    validate(spec);
}

std::uint64_t replicate_seed(std::uint64_t master, int index)
{
    return derive_seed(master, stream::replicate, static_cast<std::uint64_t>(index));
}

PoolArtifacts prepare_replicate(const Dataset& dataset, const ExperimentConfig& config, std::uint64_t seed)
{
    Rng split_rng = make_rng(derive_seed(seed, stream::split));
    const Split parts = split(dataset, config.fractions, config.stratified, split_rng);
    const Scaler scaler = fit_scaler(parts.train);
    const Dataset train = apply_scaler(scaler, parts.train);
    const Dataset validation = apply_scaler(scaler, parts.validation);
    const Dataset test = apply_scaler(scaler, parts.test);

    PoolSpec spec;
    spec.n_models = config.n_models;
    spec.family_weights = config.family_weights;
    spec.ranges = config.ranges;
    spec.seed = derive_seed(seed, stream::pool);
    const auto pool = sample_and_fit_pool(spec, train, config.jobs);

    PoolArtifacts out;
    out.n_classes = dataset.n_classes;
    out.val_labels = validation.labels;
    out.test_labels = test.labels;
    out.records.resize(pool.size());
    out.test_proba.resize(pool.size());
    out.model_names.resize(pool.size());
    parallel_for(pool.size(), config.jobs, [&](std::size_t i) {
        const auto& model = pool[i];
        out.records[i] = make_record(model.model_id(), model.predict_proba(validation.features), validation.labels,
                                     dataset.n_classes);
        out.test_proba[i] = model.predict_proba(test.features);
        out.model_names[i] = describe(model.hyperparameters());
    });
    return out;
}

namespace {

bool uses_clustering(Method m)
{
    return m == Method::cluster || m == Method::classy_cluster;
}

std::size_t best_single_position(const std::vector<ModelRecord>& records)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto& b = records[best];
        if (r.validation_score > b.validation_score ||
            (r.validation_score == b.validation_score && r.model_id < b.model_id))
            best = i;
    }
    return best;
}

double plain_accuracy(const Labels& truth, const Labels& pred)
{
    return static_cast<double>((truth.array() == pred.array()).count()) / static_cast<double>(truth.size());
}

} // namespace

ValidationChoices select_on_validation(const std::vector<ModelRecord>& records, const Labels& val_labels,
                                       int n_classes, const ExperimentConfig& config, std::uint64_t seed)
{
    if (records.empty())
        throw DataError(DataErrorKind::empty, "no models to select from");
    ValidationChoices out;
    out.best_single = best_single_position(records);

    const auto& grid = config.k_grid;
    std::map<int, Clustering> clusterings;
    if (std::any_of(config.methods.begin(), config.methods.end(), uses_clustering)) {
        std::vector<int> ks(grid.begin(), grid.end());
        std::sort(ks.begin(), ks.end());
        ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
        const Eigen::MatrixXd vectors = span_coordinates(output_vectors(records, config.cluster_output));
        std::vector<Clustering> results(ks.size());
        parallel_for(ks.size(), config.jobs, [&](std::size_t i) {
            Rng rng = make_rng(derive_seed(seed, stream::cluster, static_cast<std::uint64_t>(ks[i])));
            results[i] = kmeans(vectors, ks[i], rng);
            for (std::size_t m = 0; m < records.size(); ++m)
                results[i].model_ids[m] = records[m].model_id;
        });
        for (std::size_t i = 0; i < ks.size(); ++i)
            clusterings.emplace(ks[i], std::move(results[i]));
    }

    const ProbaTable table = ProbaTable::validation(records);
    const auto provider = table.provider();
    const std::size_t n_methods = config.methods.size();
    std::vector<Ensemble> ensembles(n_methods * grid.size());
    std::vector<double> scores(ensembles.size());
    parallel_for(ensembles.size(), config.jobs, [&](std::size_t job) {
        const Method method = config.methods[job / grid.size()];
        const int k = grid[job % grid.size()];
        Ensemble e;
        switch (method) {
        case Method::order:
            e = build_order(records, k);
            break;
        case Method::classy:
            e = build_classy(records, n_classes, k);
            break;
        case Method::cluster:
            e = build_cluster(records, clusterings.at(k));
            break;
        case Method::lexigarden: {
            Rng rng = make_rng(derive_seed(seed, stream::lexigarden, static_cast<std::uint64_t>(k)));
            e = build_lexigarden(records, val_labels, k, rng);
            break;
        }
        case Method::classy_cluster:
            e = build_classy_cluster(records, clusterings.at(k), n_classes, k);
            break;
        }
        scores[job] = balanced_accuracy(val_labels, ensemble_predict(e, provider), n_classes);
        ensembles[job] = std::move(e);
    });

    for (std::size_t m = 0; m < n_methods; ++m) {
        Selection s;
        s.method = config.methods[m];
        std::size_t best = 0;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            s.validation_by_k.push_back(scores[m * grid.size() + j]);
            if (s.validation_by_k[j] > s.validation_by_k[best])
                best = j;
        }
        s.best_k = grid[best];
        s.validation_score = s.validation_by_k[best];
        s.ensemble = std::move(ensembles[m * grid.size() + best]);
        out.selections.push_back(std::move(s));
    }
    return out;
}

ReplicateResult evaluate_pool(const PoolArtifacts& artifacts, const ExperimentConfig& config, std::uint64_t seed)
{
    const auto choices =
        select_on_validation(artifacts.records, artifacts.val_labels, artifacts.n_classes, config, seed);

    ReplicateResult out;
    out.seed = seed;
    const auto b = choices.best_single;
    const auto& best_record = artifacts.records[b];
    const Labels single_pred = weighted_argmax(artifacts.test_proba[b]);
    out.best_single.model_id = best_record.model_id;
    out.best_single.name = b < artifacts.model_names.size() ? artifacts.model_names[b] : "";
    out.best_single.validation_score = best_record.validation_score;
    out.best_single.test_score = balanced_accuracy(artifacts.test_labels, single_pred, artifacts.n_classes);
    out.best_single.test_accuracy = plain_accuracy(artifacts.test_labels, single_pred);

    ProbaTable test_table;
    for (std::size_t i = 0; i < artifacts.records.size(); ++i)
        test_table.add(artifacts.records[i].model_id, artifacts.test_proba[i]);
    const auto provider = test_table.provider();

    for (const auto& s : choices.selections) {
        MethodOutcome o;
        o.method = s.method;
        o.best_k = s.best_k;
        o.ensemble_size = static_cast<int>(s.ensemble.size());
        o.validation_score = s.validation_score;
        o.validation_by_k = s.validation_by_k;
        o.members = s.ensemble.members;
        const Labels pred = ensemble_predict(s.ensemble, provider);
        o.test_score = balanced_accuracy(artifacts.test_labels, pred, artifacts.n_classes);
        o.test_accuracy = plain_accuracy(artifacts.test_labels, pred);
        out.methods.push_back(std::move(o));
    }
    return out;
}

ReplicateResult run_replicate(const Dataset& dataset, const ExperimentConfig& config, int replicate)
{
    const auto seed = replicate_seed(config.seed, replicate);
    try {
        auto result = evaluate_pool(prepare_replicate(dataset, config, seed), config, seed);
        result.replicate = replicate;
        return result;
    } catch (const DataError& e) {
        throw DataError(e.kind(), "replicate " + std::to_string(replicate) + ": " + e.what());
    }
}

void summarize(ExperimentReport& report)
{
    report.summaries.clear();
    report.best_single_families.clear();
    if (report.replicates.empty())
        return;
    const auto& config = report.config;

    std::vector<double> single;
    for (const auto& r : report.replicates) {
        single.push_back(r.best_single.test_score);
        const auto& name = r.best_single.name;
        ++report.best_single_families[name.substr(0, name.find('('))];
    }
    report.best_single_median_test_score = median(single);

    for (std::size_t m = 0; m < config.methods.size(); ++m) {
        MethodSummary s;
        s.method = config.methods[m];
        std::vector<double> tests, sizes, ks;
        for (const auto& r : report.replicates) {
            const auto& o = r.methods.at(m);
            tests.push_back(o.test_score);
            sizes.push_back(o.ensemble_size);
            ks.push_back(o.best_k);
        }
        s.median_test_score = median(tests);
        s.median_ensemble_size = median(sizes);
        s.median_best_k = median(ks);
        Rng rng = make_rng(derive_seed(config.seed, stream::permutation, static_cast<std::uint64_t>(s.method)));
        s.versus_best_single = permutation_test(single, tests, config.permutation_rounds, config.alpha, rng);
        s.win = s.versus_best_single.significant;
        report.summaries.push_back(s);
    }
    const auto wins = std::count_if(report.summaries.begin(), report.summaries.end(),
                                    [](const MethodSummary& s) { return s.win; });
    for (auto& s : report.summaries)
        s.unique_win = s.win && wins == 1;
}

ExperimentReport run_experiment(const Dataset& dataset, const ExperimentConfig& config,
                                const ReplicateCallback& on_replicate)
{
    validate(config);
    validate(dataset);
    ExperimentReport report;
    report.dataset = dataset.source_name;
    report.config = config;

    const auto start = std::chrono::steady_clock::now();
    for (int r = 0; r < config.n_replicates; ++r) {
        if (config.time_limit_seconds) {
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            if (elapsed.count() > *config.time_limit_seconds) {
                report.complete = false;
                break;
            }
        }
        report.replicates.push_back(run_replicate(dataset, config, r));
        if (on_replicate)
            on_replicate(report.replicates.back());
    }
    summarize(report);
    return report;
}

// ---------------------------------------------------------------- bundles

namespace {

std::vector<std::vector<double>> read_numeric_rows(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError(DataErrorKind::missing_file, "missing bundle file '" + path.string() + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        std::vector<double> row;
        std::stringstream fields(line);
        std::string field;
        while (std::getline(fields, field, ',')) {
            const auto first = field.find_first_not_of(" \t");
            const auto last = field.find_last_not_of(" \t");
            const std::string_view token = first == std::string::npos
                                               ? std::string_view{}
                                               : std::string_view(field).substr(first, last - first + 1);
            double v = 0;
            auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
            if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size())
                throw DataError(DataErrorKind::non_numeric, "non-numeric value '" + std::string(token) + "' in '" +
                                                                path.filename().string() + "' line " +
                                                                std::to_string(line_no));
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path)
{
    const auto rows = read_numeric_rows(path);
    if (rows.empty())
        throw DataError(DataErrorKind::empty, "'" + path.filename().string() + "' is empty");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size())
            throw DataError(DataErrorKind::ragged_row,
                            "'" + path.filename().string() + "' row " + std::to_string(i) + " has wrong width");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

Labels read_labels(const std::filesystem::path& path)
{
    std::vector<int> values;
    for (const auto& row : read_numeric_rows(path)) {
        for (double v : row) {
            if (v != std::floor(v))
                throw DataError(DataErrorKind::non_numeric,
                                "non-integer label in '" + path.filename().string() + "'");
            values.push_back(static_cast<int>(v));
        }
    }
    return Eigen::Map<Labels>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path)
{
    std::ofstream out(path);
    char buf[64];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0)
                out << ',';
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, m(i, j));
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
}

void check_proba(const Eigen::MatrixXd& p, Eigen::Index rows, int n_classes, const std::string& model,
                 const char* part)
{
    if (p.rows() != rows || p.cols() != n_classes)
        throw DataError(DataErrorKind::dimension_mismatch,
                        "model '" + model + "' " + part + " probabilities are " + std::to_string(p.rows()) + "x" +
                            std::to_string(p.cols()) + ", expected " + std::to_string(rows) + "x" +
                            std::to_string(n_classes));
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        if ((p.row(i).array() < 0.0).any() || std::abs(p.row(i).sum() - 1.0) > 1e-6)
            throw DataError(DataErrorKind::not_stochastic, "model '" + model + "' " + part + " probability row " +
                                                               std::to_string(i) + " is not a distribution");
    }
}

void check_labels(const Labels& y, int n_classes, const char* part)
{
    if (y.size() == 0)
        throw DataError(DataErrorKind::empty, std::string(part) + " labels are empty");
    if (y.minCoeff() < 0 || y.maxCoeff() >= n_classes)
        throw DataError(DataErrorKind::dimension_mismatch,
                        std::string(part) + " labels fall outside [0, n_classes)");
}

} // namespace

void validate(const PredictionBundle& bundle)
{
    if (bundle.n_classes < 2)
        throw DataError(DataErrorKind::single_class, "bundle needs at least 2 classes");
    const auto n = bundle.model_names.size();
    if (n == 0)
        throw DataError(DataErrorKind::empty, "bundle lists no models");
    if (bundle.val_proba.size() != n || bundle.test_proba.size() != n)
        throw DataError(DataErrorKind::dimension_mismatch, "bundle matrices do not match the model list");
    check_labels(bundle.val_labels, bundle.n_classes, "validation");
    check_labels(bundle.test_labels, bundle.n_classes, "test");
    for (std::size_t i = 0; i < n; ++i) {
        check_proba(bundle.val_proba[i], bundle.val_labels.size(), bundle.n_classes, bundle.model_names[i],
                    "validation");
        check_proba(bundle.test_proba[i], bundle.test_labels.size(), bundle.n_classes, bundle.model_names[i],
                    "test");
    }
}

PredictionBundle load_bundle(const std::filesystem::path& dir)
{
    const auto meta_path = dir / "meta.json";
    std::ifstream meta_in(meta_path);
    if (!meta_in)
        throw DataError(DataErrorKind::missing_file, "missing '" + meta_path.string() + "'");
    nlohmann::json meta;
    try {
        meta_in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataErrorKind::non_numeric, "malformed meta.json: " + std::string(e.what()));
    }
    if (!meta.contains("n_classes") || !meta["n_classes"].is_number_integer() || !meta.contains("models") ||
        !meta["models"].is_array())
        throw DataError(DataErrorKind::missing_column, "meta.json needs integer 'n_classes' and array 'models'");

    PredictionBundle b;
    b.n_classes = meta["n_classes"].get<int>();
    for (const auto& name : meta["models"])
        b.model_names.push_back(name.is_string() ? name.get<std::string>() : name.dump());
    for (std::size_t i = 0; i < b.model_names.size(); ++i) {
        b.val_proba.push_back(read_matrix(dir / ("val_proba_" + std::to_string(i) + ".csv")));
        b.test_proba.push_back(read_matrix(dir / ("test_proba_" + std::to_string(i) + ".csv")));
    }
    b.val_labels = read_labels(dir / "val_labels.csv");
    b.test_labels = read_labels(dir / "test_labels.csv");
    validate(b);
    return b;
}

void write_bundle(const PredictionBundle& bundle, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    nlohmann::json meta;
    meta["n_classes"] = bundle.n_classes;
    meta["models"] = bundle.model_names;
    std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
    for (std::size_t i = 0; i < bundle.model_names.size(); ++i) {
        write_matrix(bundle.val_proba[i], dir / ("val_proba_" + std::to_string(i) + ".csv"));
        write_matrix(bundle.test_proba[i], dir / ("test_proba_" + std::to_string(i) + ".csv"));
    }
    write_matrix(bundle.val_labels.cast<double>(), dir / "val_labels.csv");
    write_matrix(bundle.test_labels.cast<double>(), dir / "test_labels.csv");
}

ReplicateResult aggregate_external(const PredictionBundle& bundle, const ExperimentConfig& config)
{
    validate(bundle);
    PoolArtifacts a;
    a.n_classes = bundle.n_classes;
    a.val_labels = bundle.val_labels;
    a.test_labels = bundle.test_labels;
    a.model_names = bundle.model_names;
    a.test_proba = bundle.test_proba;
    for (std::size_t i = 0; i < bundle.model_names.size(); ++i)
        a.records.push_back(make_record(static_cast<int>(i), bundle.val_proba[i], bundle.val_labels, bundle.n_classes));
    return evaluate_pool(a, config, config.seed);
}

} // namespace classy
