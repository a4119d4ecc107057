#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ncwwlab/harness.hpp"
#include "ncwwlab/superop.hpp"
#include "ncwwlab/weights.hpp"

// vendored single-header nlohmann/json
#include <json.hpp>

namespace ncwwlab {

inline constexpr const char* kLibraryVersion = "0.1.0";

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> n_max;
    std::optional<int> threads;
    std::optional<std::string> out_dir;
    bool strict = false;
};

// A fully resolved scenario: algebra, operator, weights and initial element
// are constructed and validated at load time.
struct Scenario {
    TracialAlgebra algebra;
    SuperOperator op;

    struct WeightEntry {
        std::string id;
        WeightSequence seq;
    };
    std::vector<WeightEntry> weights;

    AlgElement initial;
    std::string initial_desc;

    struct Experiment {
        std::string id;
        std::string kind;
        nlohmann::json params;
    };
    std::vector<Experiment> experiments;

    std::uint64_t n_max = 1 << 17;
    Checkpoints checkpoints;
    double trace_budget_fraction = 0.05;
    std::uint64_t seed = 0;
    bool require_ds = false;
    std::string out_dir = "out";

    std::string source_hash;  // fnv1a64 of the scenario file bytes

    const WeightEntry& weight_by_id(const std::string& id) const;
};

Scenario load_scenario(const std::string& path, const Overrides& ov = {});
Scenario parse_scenario(const nlohmann::json& doc, const std::string& source_bytes,
                        const Overrides& ov = {});

// helpers shared with tests
Complex parse_complex(const nlohmann::json& j);
std::string fnv1a64_hex(const std::string& bytes);

}  // namespace ncwwlab
