// classy: experiment runner for per-class weighted ensembles.
//
//   classy run --data blobs.csv --seed 7 --out report.json
//   classy aggregate --bundle runs/cifar10 --out table.csv --format csv
//   classy synth --classes 3 --samples 1000 --sep 4 --seed 1 --out blobs.csv

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "classy/data.hpp"
#include "classy/error.hpp"
#include "classy/harness.hpp"
#include "classy/report.hpp"
#include "classy/synth.hpp"

namespace {

using namespace classy;

enum Exit { ok = 0, config_error = 1, data_error = 2, runtime_error = 3 };

std::string join_ints(const std::vector<int>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

std::string join_methods(const std::vector<Method>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? "," : "") + std::string(method_name(v[i]));
    return out;
}

// Flag values are kept as text and applied after the config file so that
// flags > config file > defaults.
struct ExperimentFlags {
    std::string config_file;
    std::string seed;
    std::string replicates;
    std::string models;
    std::string k_grid;
    std::string methods;
    std::string alpha;
    std::string perm_rounds;
    std::string jobs;
    std::string time_limit;
    std::optional<bool> stratified;
    std::string out;
    std::string format = "json";
    int verbosity = 0;

    void attach(CLI::App& app, bool with_pool)
    {
        const ExperimentConfig defaults;
        app.add_option("--config", config_file, "Key-value config file (ExperimentConfig field names)");
        app.add_option("--seed", seed, "Master seed")->default_str(std::to_string(defaults.seed));
        if (with_pool) {
            app.add_option("--replicates", replicates, "Replicate runs per dataset")
                ->default_str(std::to_string(defaults.n_replicates));
            app.add_option("--models", models, "Models fitted per replicate")
                ->default_str(std::to_string(defaults.n_models));
        }
        app.add_option("--k-grid", k_grid, "Comma-separated k values tried per method")
            ->default_str(join_ints(defaults.k_grid));
        app.add_option("--methods", methods, "Comma-separated subset of order,classy,lexigarden,cluster,classy_cluster")
            ->default_str(join_methods(defaults.methods));
        if (with_pool) {
            app.add_option("--alpha", alpha, "Significance level")->default_str("0.05");
            app.add_option("--perm-rounds", perm_rounds, "Permutation test rounds")
                ->default_str(std::to_string(defaults.permutation_rounds));
            auto* strat = app.add_flag_function(
                "--stratified", [this](std::int64_t) { stratified = true; }, "Stratify the 60/20/20 split (default)");
            app.add_flag_function(
                   "--no-stratified", [this](std::int64_t) { stratified = false; }, "Plain random split")
                ->excludes(strat);
            app.add_option("--time-limit", time_limit, "Wall-clock limit in seconds; stops after the current replicate")
                ->default_str("none");
        }
        app.add_option("--jobs", jobs, "Worker threads")->default_str("1");
        app.add_option("--out", out, "Output file (standard output when omitted)");
        app.add_option("--format", format, "Output format")
            ->check(CLI::IsMember({"json", "csv"}))
            ->capture_default_str();
        app.add_flag("-v,--verbose", verbosity, "Progress on standard error (repeatable)");
    }

    ExperimentConfig resolve() const
    {
        ExperimentConfig c;
        if (!config_file.empty())
            load_config_file(c, config_file);
        auto set = [&](const char* key, const std::string& value) {
            if (!value.empty())
                apply_setting(c, key, value);
        };
        set("seed", seed);
        set("n_replicates", replicates);
        set("n_models", models);
        set("k_grid", k_grid);
        set("methods", methods);
        set("alpha", alpha);
        set("permutation_rounds", perm_rounds);
        set("jobs", jobs);
        set("time_limit", time_limit);
        if (stratified)
            c.stratified = *stratified;
        validate(c);
        return c;
    }
};

void emit(const std::string& text, const std::string& path)
{
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError(DataErrorKind::missing_file, "cannot write '" + path + "'");
    out << text;
}

int cmd_run(const std::string& data, const std::string& target_col, bool no_header, const std::string& delimiter,
            const ExperimentFlags& flags)
{
    const ExperimentConfig config = flags.resolve();
    CsvOptions csv;
    csv.target_column = target_col;
    csv.has_header = !no_header;
    if (!delimiter.empty())
        csv.delimiter = delimiter == "tab" || delimiter == "\\t" ? '\t' : delimiter.front();
    const Dataset dataset = load_csv(data, csv);
    validate(dataset);
    if (flags.verbosity > 0)
        std::cerr << "loaded " << dataset.source_name << ": " << dataset.size() << " samples, "
                  << dataset.n_features() << " features, " << dataset.n_classes << " classes\n";

    const auto report = run_experiment(dataset, config, [&](const ReplicateResult& r) {
        if (flags.verbosity > 0)
            std::cerr << "replicate " << r.replicate + 1 << "/" << config.n_replicates
                      << ": best single " << std::fixed << std::setprecision(4) << r.best_single.test_score << '\n';
    });

    const std::string json_text = canonical_dump(to_json(report));
    const std::string csv_text = summary_csv(report);
    if (flags.format == "json") {
        emit(json_text, flags.out);
        if (!flags.out.empty())
            emit(csv_text, std::filesystem::path(flags.out).replace_extension(".csv").string());
    } else {
        emit(csv_text, flags.out);
    }

    // Table 1-style summary; standard output carries it only when the report went to a file.
    std::ostream& table = flags.out.empty() ? std::cerr : std::cout;
    table << std::left << std::setw(16) << "method" << std::setw(10) << "median" << std::setw(10) << "single"
          << std::setw(10) << "p" << std::setw(6) << "win" << std::setw(8) << "unique" << std::setw(8) << "size"
          << "best_k\n";
    for (const auto& s : report.summaries) {
        table << std::left << std::setw(16) << method_name(s.method) << std::fixed << std::setprecision(4)
              << std::setw(10) << s.median_test_score << std::setw(10) << report.best_single_median_test_score
              << std::setw(10) << s.versus_best_single.p_value << std::setw(6) << (s.win ? "yes" : "no")
              << std::setw(8) << (s.unique_win ? "yes" : "no") << std::setprecision(1) << std::setw(8)
              << s.median_ensemble_size << s.median_best_k << '\n';
    }
    if (!report.complete) {
        std::cerr << "error: time limit reached after " << report.replicates.size() << " of "
                  << config.n_replicates << " replicates; report is incomplete\n";
        return runtime_error;
    }
    return ok;
}

int cmd_aggregate(const std::string& bundle_dir, const ExperimentFlags& flags)
{
    const ExperimentConfig config = flags.resolve();
    const auto bundle = load_bundle(bundle_dir);
    const auto result = aggregate_external(bundle, config);
    if (flags.format == "json")
        emit(canonical_dump(to_json(result)), flags.out);
    else
        emit(comparison_csv(result), flags.out);
    if (flags.verbosity > 0) {
        std::cerr << "best single: " << result.best_single.name << " test " << result.best_single.test_accuracy
                  << '\n';
        for (const auto& o : result.methods)
            std::cerr << method_name(o.method) << ": test " << o.test_accuracy << " (k=" << o.best_k
                      << ", size=" << o.ensemble_size << ")\n";
    }
    return ok;
}

int cmd_synth(const BlobSpec& spec, const std::string& out)
{
    const Dataset d = make_blobs(spec);
    if (out.empty()) {
        write_csv(d, std::cout);
    } else {
        write_csv(d, std::filesystem::path(out));
    }
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Ensemble generation experiments: classy, order, cluster, lexigarden, classy_cluster"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run the replicate experiment on a CSV dataset");
    std::string data, target_col = "target", delimiter;
    bool no_header = false;
    ExperimentFlags run_flags;
    run->add_option("--data", data, "Dataset file (.csv, .tsv, optionally .gz)");
    run->add_option("--target-col", target_col, "Target column name (or 0-based index with --no-header)")
        ->capture_default_str();
    run->add_flag("--no-header", no_header, "The file has no header row");
    run->add_option("--delimiter", delimiter, "Field delimiter; detected from the extension by default");
    run_flags.attach(*run, true);

    auto* aggregate = app.add_subcommand("aggregate", "Build ensembles from an external prediction bundle");
    std::string bundle_dir;
    ExperimentFlags agg_flags;
    agg_flags.format = "csv";
    aggregate->add_option("--bundle", bundle_dir, "Bundle directory (meta.json, *_proba_<i>.csv, *_labels.csv)");
    agg_flags.attach(*aggregate, false);

    auto* synth = app.add_subcommand("synth", "Write a Gaussian-blob dataset");
    BlobSpec spec;
    std::string synth_out;
    synth->add_option("--samples", spec.n_samples, "Number of rows")->capture_default_str();
    synth->add_option("--features", spec.n_features, "Number of features")->capture_default_str();
    synth->add_option("--classes", spec.n_classes, "Number of classes")->capture_default_str();
    synth->add_option("--sep", spec.separation, "Distance between class centers (in standard deviations)")
        ->capture_default_str();
    synth->add_option("--noise", spec.label_noise, "Label-noise rate")->capture_default_str();
    synth->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
    synth->add_option("--out", synth_out, "Output CSV (standard output when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    try {
        if (run->parsed()) {
            if (data.empty()) {
                std::cerr << "error: --data is required\n\n" << run->help();
                return config_error;
            }
            return cmd_run(data, target_col, no_header, delimiter, run_flags);
        }
        if (aggregate->parsed()) {
            if (bundle_dir.empty()) {
                std::cerr << "error: --bundle is required\n\n" << aggregate->help();
                return config_error;
            }
            return cmd_aggregate(bundle_dir, agg_flags);
        }
        return cmd_synth(spec, synth_out);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return config_error;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return data_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return runtime_error;
    }
}
