#include "classy/ensembles.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "classy/error.hpp"
#include "classy/metrics.hpp"

namespace classy {

std::string_view method_name(Method m) noexcept
{
    switch (m) {
    case Method::order:
        return "order";
    case Method::classy:
        return "classy";
    case Method::cluster:
        return "cluster";
    case Method::lexigarden:
        return "lexigarden";
    case Method::classy_cluster:
        return "classy_cluster";
    }
    return "unknown";
}

std::optional<Method> parse_method(std::string_view name) noexcept
{
    for (auto m : all_methods)
        if (method_name(m) == name)
            return m;
    return std::nullopt;
}

ModelRecord make_record(int model_id, Eigen::MatrixXd val_proba, const Labels& val_labels, int n_classes)
{
    if (val_proba.rows() != val_labels.size() || val_proba.cols() != n_classes)
        throw DataError(DataErrorKind::dimension_mismatch,
                        "model " + std::to_string(model_id) + ": validation probabilities are " +
                            std::to_string(val_proba.rows()) + "x" + std::to_string(val_proba.cols()) +
                            ", expected " + std::to_string(val_labels.size()) + "x" + std::to_string(n_classes));
    ModelRecord r;
    r.model_id = model_id;
    r.val_pred = weighted_argmax(val_proba);
    const auto scores = classwise_scores(val_labels, r.val_pred, n_classes);
    r.validation_score = scores.overall;
    r.per_class_accuracy = scores.per_class;
    r.val_proba = std::move(val_proba);
    return r;
}

namespace {

void require_records(const std::vector<ModelRecord>& records, const char* who)
{
    if (records.empty())
        throw DataError(DataErrorKind::empty, std::string(who) + ": empty model list");
}

int clamp_k(int k, std::size_t n)
{
    return std::clamp(k, 1, static_cast<int>(n));
}

Ensemble majority_ensemble(Method method, std::vector<int> members, int n_classes, int k)
{
    Ensemble e;
    e.method = method;
    e.members = std::move(members);
    e.weights.assign(e.members.size(), 1.0);
    e.voters = Eigen::MatrixXi::Ones(static_cast<Eigen::Index>(e.members.size()), n_classes);
    e.k_param = k;
    return e;
}

int class_count(const std::vector<ModelRecord>& records)
{
    return static_cast<int>(records.front().per_class_accuracy.size());
}

// Positions of `subset` sorted for class c: recall desc, then validation score
// desc, then model id asc.
void sort_for_class(std::vector<std::size_t>& subset, const std::vector<ModelRecord>& records, int c)
{
    std::sort(subset.begin(), subset.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = records[a];
        const auto& rb = records[b];
        if (ra.per_class_accuracy[c] != rb.per_class_accuracy[c])
            return ra.per_class_accuracy[c] > rb.per_class_accuracy[c];
        if (ra.validation_score != rb.validation_score)
            return ra.validation_score > rb.validation_score;
        return ra.model_id < rb.model_id;
    });
}

// Runs the per-class top-k selection over `subset`, adding voter bits into the
// position-indexed table and recording first-entry order.
void select_voters(const std::vector<ModelRecord>& records, std::vector<std::size_t> subset, int n_classes, int topk,
                   Eigen::MatrixXi& voter_bits, std::vector<std::size_t>& entry_order)
{
    const auto take = static_cast<std::size_t>(clamp_k(topk, subset.size()));
    for (int c = 0; c < n_classes; ++c) {
        sort_for_class(subset, records, c);
        for (std::size_t r = 0; r < take; ++r) {
            const auto pos = subset[r];
            if (voter_bits.row(static_cast<Eigen::Index>(pos)).sum() == 0)
                entry_order.push_back(pos);
            voter_bits(static_cast<Eigen::Index>(pos), c) = 1;
        }
    }
}

Ensemble weighted_ensemble(Method method, const std::vector<ModelRecord>& records, const Eigen::MatrixXi& voter_bits,
                           const std::vector<std::size_t>& entry_order, int k)
{
    Ensemble e;
    e.method = method;
    e.k_param = k;
    e.voters.resize(static_cast<Eigen::Index>(entry_order.size()), voter_bits.cols());
    for (std::size_t m = 0; m < entry_order.size(); ++m) {
        const auto pos = entry_order[m];
        e.members.push_back(records[pos].model_id);
        e.weights.push_back(records[pos].validation_score);
        e.voters.row(static_cast<Eigen::Index>(m)) = voter_bits.row(static_cast<Eigen::Index>(pos));
    }
    return e;
}

// Record positions grouped by cluster.
std::vector<std::vector<std::size_t>> cluster_positions(const std::vector<ModelRecord>& records,
                                                        const Clustering& clustering)
{
    if (clustering.model_ids.size() != records.size() || clustering.assignments.size() != records.size())
        throw DataError(DataErrorKind::dimension_mismatch, "clustering does not cover the model list");
    std::unordered_map<int, std::size_t> position;
    for (std::size_t i = 0; i < records.size(); ++i)
        position[records[i].model_id] = i;
    std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(clustering.k));
    for (std::size_t i = 0; i < clustering.model_ids.size(); ++i) {
        auto it = position.find(clustering.model_ids[i]);
        const int c = clustering.assignments[i];
        if (it == position.end() || c < 0 || c >= clustering.k)
            throw DataError(DataErrorKind::missing_member,
                            "clustering refers to unknown model " + std::to_string(clustering.model_ids[i]));
        groups[static_cast<std::size_t>(c)].push_back(it->second);
    }
    return groups;
}

} // namespace

Ensemble build_order(const std::vector<ModelRecord>& records, int topk)
{
    require_records(records, "build_order");
    const int k = clamp_k(topk, records.size());
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (records[a].validation_score != records[b].validation_score)
            return records[a].validation_score > records[b].validation_score;
        return records[a].model_id < records[b].model_id;
    });
    std::vector<int> members;
    for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i)
        members.push_back(records[order[i]].model_id);
    return majority_ensemble(Method::order, std::move(members), class_count(records), k);
}

Ensemble build_classy(const std::vector<ModelRecord>& records, int n_classes, int topk)
{
    require_records(records, "build_classy");
    std::vector<std::size_t> all(records.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    Eigen::MatrixXi voter_bits = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(records.size()), n_classes);
    std::vector<std::size_t> entry_order;
    select_voters(records, std::move(all), n_classes, topk, voter_bits, entry_order);
    return weighted_ensemble(Method::classy, records, voter_bits, entry_order, clamp_k(topk, records.size()));
}

Ensemble build_cluster(const std::vector<ModelRecord>& records, const Clustering& clustering)
{
    require_records(records, "build_cluster");
    std::vector<int> members;
    for (const auto& group : cluster_positions(records, clustering)) {
        if (group.empty())
            continue;
        const auto best = *std::min_element(group.begin(), group.end(), [&](std::size_t a, std::size_t b) {
            if (records[a].validation_score != records[b].validation_score)
                return records[a].validation_score > records[b].validation_score;
            return records[a].model_id < records[b].model_id;
        });
        members.push_back(records[best].model_id);
    }
    return majority_ensemble(Method::cluster, std::move(members), class_count(records), clustering.k);
}

std::vector<std::size_t> lexicase_survivors(const std::vector<ModelRecord>& records, const Labels& validation_labels,
                                            const std::vector<Eigen::Index>& order)
{
    std::vector<std::size_t> survivors(records.size());
    std::iota(survivors.begin(), survivors.end(), std::size_t{0});
    std::vector<std::size_t> next;
    for (auto i : order) {
        if (survivors.size() <= 1)
            break;
        next.clear();
        for (auto s : survivors)
            if (records[s].val_pred[i] == validation_labels[i])
                next.push_back(s);
        if (!next.empty())
            survivors.swap(next);
    }
    return survivors;
}

Ensemble build_lexigarden(const std::vector<ModelRecord>& records, const Labels& validation_labels, int garden_size,
                          Rng& rng)
{
    require_records(records, "build_lexigarden");
    for (const auto& r : records)
        if (r.val_pred.size() != validation_labels.size())
            throw DataError(DataErrorKind::dimension_mismatch,
                            "build_lexigarden: model " + std::to_string(r.model_id) +
                                " predictions do not match the validation labels");
    const int rounds = std::max(1, garden_size);
    std::vector<Eigen::Index> instances(static_cast<std::size_t>(validation_labels.size()));
    std::iota(instances.begin(), instances.end(), Eigen::Index{0});

    std::vector<int> members;
    for (int round = 0; round < rounds; ++round) {
        std::shuffle(instances.begin(), instances.end(), rng);
        const auto survivors = lexicase_survivors(records, validation_labels, instances);
        std::uniform_int_distribution<std::size_t> pick(0, survivors.size() - 1);
        members.push_back(records[survivors[pick(rng)]].model_id);
    }
    return majority_ensemble(Method::lexigarden, std::move(members), class_count(records), rounds);
}

Ensemble build_classy_cluster(const std::vector<ModelRecord>& records, const Clustering& clustering, int n_classes,
                              int topk)
{
    require_records(records, "build_classy_cluster");
    Eigen::MatrixXi voter_bits = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(records.size()), n_classes);
    std::vector<std::size_t> entry_order;
    for (auto& group : cluster_positions(records, clustering))
        if (!group.empty())
            select_voters(records, std::move(group), n_classes, topk, voter_bits, entry_order);
    return weighted_ensemble(Method::classy_cluster, records, voter_bits, entry_order, std::max(1, topk));
}

Eigen::MatrixXd output_vectors(const std::vector<ModelRecord>& records, OutputKind kind)
{
    require_records(records, "output_vectors");
    const Eigen::Index rows = records.front().val_proba.rows();
    const Eigen::Index cols = records.front().val_proba.cols();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(records.size()), rows * cols);
    for (std::size_t m = 0; m < records.size(); ++m) {
        const auto& r = records[m];
        if (r.val_proba.rows() != rows || r.val_proba.cols() != cols)
            throw DataError(DataErrorKind::dimension_mismatch,
                            "model " + std::to_string(r.model_id) + " has mismatched validation output shape");
        auto row = out.row(static_cast<Eigen::Index>(m));
        if (kind == OutputKind::probabilities) {
            for (Eigen::Index i = 0; i < rows; ++i)
                row.segment(i * cols, cols) = r.val_proba.row(i);
        } else {
            row.setZero();
            for (Eigen::Index i = 0; i < rows; ++i)
                row[i * cols + r.val_pred[i]] = 1.0;
        }
    }
    return out;
}

Clustering cluster_models(const std::vector<ModelRecord>& records, int k, Rng& rng, OutputKind kind)
{
    Clustering c = kmeans(output_vectors(records, kind), k, rng);
    for (std::size_t i = 0; i < records.size(); ++i)
        c.model_ids[i] = records[i].model_id;
    return c;
}

const Eigen::MatrixXd& ProbaTable::operator()(int model_id) const
{
    auto it = table_.find(model_id);
    if (it == table_.end())
        throw DataError(DataErrorKind::missing_member, "no probabilities for model " + std::to_string(model_id));
    return *it->second;
}

ProbaTable ProbaTable::validation(const std::vector<ModelRecord>& records)
{
    ProbaTable t;
    for (const auto& r : records)
        t.add(r.model_id, r.val_proba);
    return t;
}

namespace {

void check_shape(const Eigen::MatrixXd& p, const Eigen::MatrixXd& reference, const Ensemble& e, int id)
{
    if (p.rows() != reference.rows() || p.cols() != reference.cols() || p.cols() != e.voters.cols())
        throw DataError(DataErrorKind::dimension_mismatch,
                        "probability matrix of model " + std::to_string(id) + " has mismatched dimensions");
}

} // namespace

Eigen::MatrixXd ensemble_scores(const Ensemble& e, const ProbaProvider& proba)
{
    if (e.members.empty())
        throw DataError(DataErrorKind::empty, "ensemble has no members");
    const Eigen::MatrixXd& first = proba(e.members.front());
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(first.rows(), first.cols());
    for (std::size_t m = 0; m < e.members.size(); ++m) {
        const Eigen::MatrixXd& p = proba(e.members[m]);
        check_shape(p, first, e, e.members[m]);
        const Eigen::RowVectorXd mask =
            e.weights[m] * e.voters.row(static_cast<Eigen::Index>(m)).cast<double>();
        acc.array() += p.array().rowwise() * mask.array();
    }
    return acc;
}

Labels ensemble_predict(const Ensemble& e, const ProbaProvider& proba)
{
    if (e.aggregation() == Aggregation::weighted_proba)
        return weighted_argmax(ensemble_scores(e, proba));

    if (e.members.empty())
        throw DataError(DataErrorKind::empty, "ensemble has no members");
    const Eigen::MatrixXd& first = proba(e.members.front());
    Eigen::MatrixXi votes(static_cast<Eigen::Index>(e.members.size()), first.rows());
    for (std::size_t m = 0; m < e.members.size(); ++m) {
        const Eigen::MatrixXd& p = proba(e.members[m]);
        check_shape(p, first, e, e.members[m]);
        votes.row(static_cast<Eigen::Index>(m)) = weighted_argmax(p).transpose();
    }
    return majority_vote(votes);
}

} // namespace classy
