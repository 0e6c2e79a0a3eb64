#pragma once

#include "dpair/filters.hpp"
#include "dpair/sequence.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace dpair {

/// Two training folds plus a held-out test group. Routing is fixed by
/// construction: P1 is predicted by the model trained on P2, P2 by the model
/// trained on P1, and P_test by the model trained on P1 u P2, so no sequence
/// is ever predicted by a model that saw it in training.
struct FoldPlan {
    std::vector<std::string> p1;
    std::vector<std::string> p2;
    std::vector<std::string> p_test;
    std::uint64_t seed = 0;

    enum class Group { p1, p2, test };
    enum class Model { trained_on_p1, trained_on_p2, trained_on_both };

    Group group_of(const std::string& id) const;
    static Model predictor_for(Group g);
    std::vector<std::string> training_ids(Model m) const;

    /// Disjointness, coverage, and the no-leakage routing property.
    void validate(const std::vector<std::string>& all_ids) const;
};

std::string to_string(FoldPlan::Model m);

/// Seeded shuffle, then carve off the test fraction and split the remainder
/// evenly (P1 gets the extra sequence on odd counts). Needs >= 3 ids.
FoldPlan make_fold_plan(std::vector<std::string> ids, double test_fraction, std::uint64_t seed);

nlohmann::json fold_plan_to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const nlohmann::json& j);

struct SequenceSample {
    std::string id;
    PairedDataset data;
};

/// Builds a Denoiser from training datasets. Must be deterministic given
/// its input set; the out-of-fold output is only reproducible if it is.
using Trainer = std::function<std::unique_ptr<Denoiser>(const std::vector<const PairedDataset*>&)>;

/// Train the three roster models and route predictions so every sequence is
/// predicted by a model that never saw it. The result has the same
/// cardinality and record counts as the input, with each record's LQ depth
/// replaced by the routed model's prediction (ground truth kept), i.e. the
/// training set for a second-level model.
std::vector<SequenceSample> run_out_of_fold(const FoldPlan& plan, const Trainer& trainer,
                                            const std::vector<SequenceSample>& inputs);

}  // namespace dpair
