#include "dpair/stacking.hpp"

#include "dpair/parallel.hpp"
#include "dpair/rng.hpp"

#include <algorithm>
#include <set>

namespace dpair {

using nlohmann::json;

std::string to_string(FoldPlan::Model m) {
    switch (m) {
        case FoldPlan::Model::trained_on_p1: return "M1_1(P1)";
        case FoldPlan::Model::trained_on_p2: return "M1_2(P2)";
        case FoldPlan::Model::trained_on_both: return "M1(P1+P2)";
    }
    return "?";
}

FoldPlan::Group FoldPlan::group_of(const std::string& id) const {
    if (std::find(p1.begin(), p1.end(), id) != p1.end()) return Group::p1;
    if (std::find(p2.begin(), p2.end(), id) != p2.end()) return Group::p2;
    if (std::find(p_test.begin(), p_test.end(), id) != p_test.end()) return Group::test;
    throw InvalidInputError("sequence '" + id + "' is not part of the fold plan");
}

FoldPlan::Model FoldPlan::predictor_for(Group g) {
    switch (g) {
        case Group::p1: return Model::trained_on_p2;
        case Group::p2: return Model::trained_on_p1;
        case Group::test: return Model::trained_on_both;
    }
    return Model::trained_on_both;
}

std::vector<std::string> FoldPlan::training_ids(Model m) const {
    switch (m) {
        case Model::trained_on_p1: return p1;
        case Model::trained_on_p2: return p2;
        case Model::trained_on_both: {
            std::vector<std::string> both = p1;
            both.insert(both.end(), p2.begin(), p2.end());
            return both;
        }
    }
    return {};
}

void FoldPlan::validate(const std::vector<std::string>& all_ids) const {
    std::set<std::string> seen;
    for (const auto* part : {&p1, &p2, &p_test}) {
        for (const std::string& id : *part) {
            if (!seen.insert(id).second)
                throw InvalidInputError("fold plan assigns '" + id + "' to more than one group");
        }
    }
    if (seen.size() != all_ids.size())
        throw InvalidInputError("fold plan does not cover the sequence set");
    for (const std::string& id : all_ids)
        if (!seen.count(id)) throw InvalidInputError("fold plan is missing sequence '" + id + "'");

    // Routing can never leak by construction; assert it anyway.
    for (const std::string& id : all_ids) {
        const std::vector<std::string> train = training_ids(predictor_for(group_of(id)));
        if (std::find(train.begin(), train.end(), id) != train.end())
            throw InvalidInputError("fold plan routes '" + id + "' to a model trained on it");
    }
}

FoldPlan make_fold_plan(std::vector<std::string> ids, double test_fraction, std::uint64_t seed) {
    if (ids.size() < 3)
        throw InvalidInputError("out-of-fold split needs at least 3 sequences, got " +
                                std::to_string(ids.size()));
    if (!(test_fraction >= 0.0) || test_fraction >= 1.0)
        throw InvalidInputError("test fraction must lie in [0, 1)");
    {
        std::set<std::string> uniq(ids.begin(), ids.end());
        if (uniq.size() != ids.size()) throw InvalidInputError("duplicate sequence ids in fold input");
    }

    const std::vector<std::string> all = ids;
    // Fisher-Yates with an explicit generator so plans are reproducible
    // across platforms.
    SplitMix64 rng(derive_seed(seed, 0x0f01d));
    for (size_t i = ids.size() - 1; i > 0; --i) {
        const size_t j = static_cast<size_t>(rng.next() % (i + 1));
        std::swap(ids[i], ids[j]);
    }

    const std::int64_t n = static_cast<std::int64_t>(ids.size());
    std::int64_t n_test = std::llround(test_fraction * static_cast<double>(n));
    n_test = std::clamp<std::int64_t>(n_test, 1, n - 2);

    FoldPlan plan;
    plan.seed = seed;
    plan.p_test.assign(ids.begin(), ids.begin() + n_test);
    const std::int64_t rest = n - n_test;
    const std::int64_t n1 = (rest + 1) / 2;  // P1 takes the extra on odd counts
    plan.p1.assign(ids.begin() + n_test, ids.begin() + n_test + n1);
    plan.p2.assign(ids.begin() + n_test + n1, ids.end());
    plan.validate(all);
    return plan;
}

json fold_plan_to_json(const FoldPlan& plan) {
    return {{"P1", plan.p1}, {"P2", plan.p2}, {"P_test", plan.p_test}, {"seed", plan.seed}};
}

FoldPlan fold_plan_from_json(const json& j) {
    FoldPlan plan;
    plan.p1 = j.at("P1").get<std::vector<std::string>>();
    plan.p2 = j.at("P2").get<std::vector<std::string>>();
    plan.p_test = j.at("P_test").get<std::vector<std::string>>();
    plan.seed = j.value("seed", 0ull);
    return plan;
}

std::vector<SequenceSample> run_out_of_fold(const FoldPlan& plan, const Trainer& trainer,
                                            const std::vector<SequenceSample>& inputs) {
    std::vector<std::string> ids;
    ids.reserve(inputs.size());
    for (const SequenceSample& s : inputs) ids.push_back(s.id);
    plan.validate(ids);

    auto dataset_of = [&](const std::string& id) -> const PairedDataset* {
        for (const SequenceSample& s : inputs)
            if (s.id == id) return &s.data;
        throw InvalidInputError("missing dataset for sequence '" + id + "'");
    };

    auto train = [&](FoldPlan::Model m) {
        std::vector<const PairedDataset*> sets;
        for (const std::string& id : plan.training_ids(m)) sets.push_back(dataset_of(id));
        try {
            std::unique_ptr<Denoiser> model = trainer(sets);
            if (!model) throw Error("trainer returned no model");
            return model;
        } catch (const std::exception& e) {
            throw Error("training " + to_string(m) + " failed: " + e.what());
        }
    };

    const std::unique_ptr<Denoiser> on_p1 = train(FoldPlan::Model::trained_on_p1);
    const std::unique_ptr<Denoiser> on_p2 = train(FoldPlan::Model::trained_on_p2);
    const std::unique_ptr<Denoiser> on_both = train(FoldPlan::Model::trained_on_both);

    auto model_for = [&](FoldPlan::Group g) -> const Denoiser& {
        switch (FoldPlan::predictor_for(g)) {
            case FoldPlan::Model::trained_on_p1: return *on_p1;
            case FoldPlan::Model::trained_on_p2: return *on_p2;
            case FoldPlan::Model::trained_on_both: return *on_both;
        }
        return *on_both;
    };

    std::vector<SequenceSample> out(inputs.size());
    for (size_t s = 0; s < inputs.size(); ++s) {
        const SequenceSample& in = inputs[s];
        const Denoiser& model = model_for(plan.group_of(in.id));
        SequenceSample& dst = out[s];
        dst.id = in.id;
        dst.data = in.data;
        parallel_for(0, static_cast<std::int64_t>(dst.data.records.size()), [&](std::int64_t i) {
            dst.data.records[i].lq.depth = model.denoise(in.data.records[i].lq);
        });
    }
    return out;
}

}  // namespace dpair
