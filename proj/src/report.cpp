#include "classy/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "classy/error.hpp"

namespace classy {

using nlohmann::json;

json to_json(const ExperimentConfig& c)
{
    json j;
    j["n_replicates"] = c.n_replicates;
    j["n_models"] = c.n_models;
    j["k_grid"] = c.k_grid;
    j["fractions"] = c.fractions;
    json methods = json::array();
    for (auto m : c.methods)
        methods.push_back(method_name(m));
    j["methods"] = methods;
    j["alpha"] = c.alpha;
    j["permutation_rounds"] = c.permutation_rounds;
    j["seed"] = c.seed;
    j["stratified"] = c.stratified;
    j["time_limit"] = c.time_limit_seconds ? json(*c.time_limit_seconds) : json(nullptr);
    j["family_weights"] = c.family_weights;
    j["cluster_output"] = c.cluster_output == OutputKind::probabilities ? "probabilities" : "one_hot";
    const auto& r = c.ranges;
    j["ranges"] = {
        {"knn_k", {r.knn_k_min, r.knn_k_max}},
        {"depth", {r.depth_min, r.depth_max}},
        {"trees", {r.trees_min, r.trees_max}},
        {"epochs", {r.epochs_min, r.epochs_max}},
        {"log10_lr", {r.log10_lr_min, r.log10_lr_max}},
        {"l2_choices", r.l2_choices},
    };
    return j;
}

json to_json(const ReplicateResult& r)
{
    json j;
    j["replicate"] = r.replicate;
    j["seed"] = r.seed;
    j["best_single"] = {
        {"model_id", r.best_single.model_id},
        {"name", r.best_single.name},
        {"validation_score", r.best_single.validation_score},
        {"test_score", r.best_single.test_score},
        {"test_accuracy", r.best_single.test_accuracy},
    };
    json methods = json::object();
    for (const auto& o : r.methods) {
        methods[std::string(method_name(o.method))] = {
            {"best_k", o.best_k},
            {"ensemble_size", o.ensemble_size},
            {"validation_score", o.validation_score},
            {"test_score", o.test_score},
            {"test_accuracy", o.test_accuracy},
            {"validation_by_k", o.validation_by_k},
            {"members", o.members},
        };
    }
    j["methods"] = methods;
    return j;
}

json to_json(const ExperimentReport& report)
{
    json j;
    j["dataset"] = report.dataset;
    j["complete"] = report.complete;
    j["config"] = to_json(report.config);
    json reps = json::array();
    for (const auto& r : report.replicates)
        reps.push_back(to_json(r));
    j["replicates"] = reps;
    j["best_single"] = {
        {"median_test_score", report.best_single_median_test_score},
        {"families", report.best_single_families},
    };
    json summary = json::object();
    for (const auto& s : report.summaries) {
        summary[std::string(method_name(s.method))] = {
            {"median_test_score", s.median_test_score},
            {"median_ensemble_size", s.median_ensemble_size},
            {"median_best_k", s.median_best_k},
            {"observed_median_difference", s.versus_best_single.observed_stat},
            {"p_value", s.versus_best_single.p_value},
            {"permutation_rounds", s.versus_best_single.rounds},
            {"win", s.win},
            {"unique_win", s.unique_win},
        };
    }
    j["summary"] = summary;
    return j;
}

std::string canonical_dump(const json& j)
{
    return j.dump(2) + "\n";
}

namespace {

std::string fmt(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
    return std::string(buf, ptr);
}

} // namespace

std::string summary_csv(const ExperimentReport& report)
{
    std::ostringstream out;
    out << "method,median_test_score,best_single_median_test_score,p_value,win,unique_win,median_ensemble_size,"
           "median_best_k,replicates\n";
    for (const auto& s : report.summaries) {
        out << method_name(s.method) << ',' << fmt(s.median_test_score) << ','
            << fmt(report.best_single_median_test_score) << ',' << fmt(s.versus_best_single.p_value) << ','
            << (s.win ? 1 : 0) << ',' << (s.unique_win ? 1 : 0) << ',' << fmt(s.median_ensemble_size) << ','
            << fmt(s.median_best_k) << ',' << report.replicates.size() << '\n';
    }
    return out.str();
}

std::string comparison_csv(const ReplicateResult& result)
{
    std::ostringstream out;
    out << "method,best_k,ensemble_size,validation_score,test_score,test_accuracy,best_single_test_score,"
           "best_single_test_accuracy\n";
    for (const auto& o : result.methods) {
        out << method_name(o.method) << ',' << o.best_k << ',' << o.ensemble_size << ',' << fmt(o.validation_score)
            << ',' << fmt(o.test_score) << ',' << fmt(o.test_accuracy) << ',' << fmt(result.best_single.test_score)
            << ',' << fmt(result.best_single.test_accuracy) << '\n';
    }
    return out.str();
}

namespace {

std::string_view strip(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <class T>
T parse_value(std::string_view key, std::string_view text)
{
    text = strip(text);
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
        throw ConfigError("invalid value '" + std::string(text) + "' for '" + std::string(key) + "'");
    return v;
}

bool parse_bool(std::string_view key, std::string_view text)
{
    text = strip(text);
    if (text == "true" || text == "1" || text == "yes")
        return true;
    if (text == "false" || text == "0" || text == "no")
        return false;
    throw ConfigError("invalid boolean '" + std::string(text) + "' for '" + std::string(key) + "'");
}

std::vector<std::string_view> split_list(std::string_view text)
{
    std::vector<std::string_view> out;
    while (!text.empty()) {
        const auto pos = text.find(',');
        const auto item = strip(text.substr(0, pos));
        if (!item.empty())
            out.push_back(item);
        if (pos == std::string_view::npos)
            break;
        text.remove_prefix(pos + 1);
    }
    return out;
}

} // namespace

std::vector<int> parse_int_list(std::string_view text)
{
    std::vector<int> out;
    for (auto item : split_list(text))
        out.push_back(parse_value<int>("k_grid", item));
    if (out.empty())
        throw ConfigError("empty integer list");
    return out;
}

std::vector<Method> parse_method_list(std::string_view text)
{
    std::vector<Method> out;
    for (auto item : split_list(text)) {
        auto m = parse_method(item);
        if (!m)
            throw ConfigError("unknown method '" + std::string(item) + "'");
        if (std::find(out.begin(), out.end(), *m) == out.end())
            out.push_back(*m);
    }
    if (out.empty())
        throw ConfigError("empty method list");
    return out;
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value)
{
    key = strip(key);
    if (key == "n_replicates") {
        c.n_replicates = parse_value<int>(key, value);
    } else if (key == "n_models") {
        c.n_models = parse_value<int>(key, value);
    } else if (key == "k_grid") {
        c.k_grid = parse_int_list(value);
    } else if (key == "fractions") {
        const auto items = split_list(value);
        if (items.size() != 3)
            throw ConfigError("fractions needs three values");
        for (std::size_t i = 0; i < 3; ++i)
            c.fractions[i] = parse_value<double>(key, items[i]);
    } else if (key == "methods") {
        c.methods = parse_method_list(value);
    } else if (key == "alpha") {
        c.alpha = parse_value<double>(key, value);
    } else if (key == "permutation_rounds") {
        c.permutation_rounds = parse_value<int>(key, value);
    } else if (key == "seed") {
        c.seed = parse_value<std::uint64_t>(key, value);
    } else if (key == "stratified") {
        c.stratified = parse_bool(key, value);
    } else if (key == "time_limit") {
        const auto v = strip(value);
        if (v == "none" || v.empty())
            c.time_limit_seconds.reset();
        else
            c.time_limit_seconds = parse_value<double>(key, v);
    } else if (key == "jobs") {
        c.jobs = parse_value<int>(key, value);
    } else if (key == "family_weights") {
        const auto items = split_list(value);
        if (items.size() != 4)
            throw ConfigError("family_weights needs four values (knn, cart_tree, bagged_trees, linear_sgd)");
        for (std::size_t i = 0; i < 4; ++i)
            c.family_weights[i] = parse_value<double>(key, items[i]);
    } else if (key == "cluster_output") {
        const auto v = strip(value);
        if (v == "probabilities")
            c.cluster_output = OutputKind::probabilities;
        else if (v == "one_hot")
            c.cluster_output = OutputKind::one_hot;
        else
            throw ConfigError("cluster_output must be 'probabilities' or 'one_hot'");
    } else if (key == "knn_k_min") {
        c.ranges.knn_k_min = parse_value<int>(key, value);
    } else if (key == "knn_k_max") {
        c.ranges.knn_k_max = parse_value<int>(key, value);
    } else if (key == "depth_min") {
        c.ranges.depth_min = parse_value<int>(key, value);
    } else if (key == "depth_max") {
        c.ranges.depth_max = parse_value<int>(key, value);
    } else if (key == "trees_min") {
        c.ranges.trees_min = parse_value<int>(key, value);
    } else if (key == "trees_max") {
        c.ranges.trees_max = parse_value<int>(key, value);
    } else if (key == "epochs_min") {
        c.ranges.epochs_min = parse_value<int>(key, value);
    } else if (key == "epochs_max") {
        c.ranges.epochs_max = parse_value<int>(key, value);
    } else if (key == "log10_lr_min") {
        c.ranges.log10_lr_min = parse_value<double>(key, value);
    } else if (key == "log10_lr_max") {
        c.ranges.log10_lr_max = parse_value<double>(key, value);
    } else if (key == "l2_choices") {
        c.ranges.l2_choices.clear();
        for (auto item : split_list(value))
            c.ranges.l2_choices.push_back(parse_value<double>(key, item));
    } else {
        throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
}

void load_config_file(ExperimentConfig& config, const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file '" + path.string() + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        view = strip(view.substr(0, view.find('#')));
        if (view.empty())
            continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(path.filename().string() + ":" + std::to_string(line_no) + ": expected key = value");
        try {
            apply_setting(config, view.substr(0, eq), view.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(path.filename().string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

} // namespace classy
