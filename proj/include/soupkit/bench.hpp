#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "soupkit/checkpoint.hpp"
#include "soupkit/dataset.hpp"
#include "soupkit/entities.hpp"
#include "soupkit/model.hpp"
#include "soupkit/stacking.hpp"

namespace soupkit {

struct BenchReport {
    struct System {
        std::string name;
        std::uint64_t forwards = 0;  // counted, never sampled
        std::uint64_t wall_time_ns = 0;
        std::uint64_t items = 0;
    };

    std::vector<System> systems;

    nlohmann::ordered_json to_json() const;
};

// Scores every registered system over the same items. Forward counts are the
// primary measure (exact and thread-invariant); wall time is recorded as
// secondary evidence only. threads > 1 splits items across workers.
class BenchSuite {
public:
    // A single checkpoint scored alone: one forward per item. Covers both a
    // souped master and a plain single model.
    void add_model(std::string name, const Checkpoint& ckpt, const ModelSpec& spec);
    void add_stack(std::string name, const StackedEnsemble& ensemble);

    BenchReport run(const std::vector<LabeledSentence>& data,
                    const GazetteerSet& gazetteers = GazetteerSet{}, unsigned threads = 1) const;

private:
    struct Entry {
        std::string name;
        const Checkpoint* model = nullptr;  // borrowed; must outlive run()
        ModelSpec spec;
        const StackedEnsemble* stack = nullptr;
    };
    std::vector<Entry> entries_;
};

}  // namespace soupkit
