#include "soupkit/bench.hpp"

#include <chrono>
#include <thread>

#include "soupkit/errors.hpp"

namespace soupkit {

namespace {

// One forward per member plus one for the meta head; the counter tracks the
// actual calls rather than assuming N + 1.
std::uint64_t score_stack_item(const StackedEnsemble& stack, const ModelShape& member_shape,
                               const SparseVec& features) {
    std::uint64_t forwards = 0;
    SparseVec probs;
    probs.reserve(stack.members.size());
    for (std::size_t i = 0; i < stack.members.size(); ++i) {
        const double p = forward(stack.members[i].tensors, features, member_shape);
        ++forwards;
        probs.emplace_back(static_cast<std::uint32_t>(i), static_cast<float>(p));
    }
    const ModelShape meta_shape{ModelKind::TextLinear, stack.members.size(), 0};
    volatile double sink = forward(stack.meta_params, probs, meta_shape);
    (void)sink;
    ++forwards;
    return forwards;
}

}  // namespace

void BenchSuite::add_model(std::string name, const Checkpoint& ckpt, const ModelSpec& spec) {
    entries_.push_back(Entry{std::move(name), &ckpt, spec, nullptr});
}

void BenchSuite::add_stack(std::string name, const StackedEnsemble& ensemble) {
    entries_.push_back(Entry{std::move(name), nullptr, ModelSpec{}, &ensemble});
}

BenchReport BenchSuite::run(const std::vector<LabeledSentence>& data,
                            const GazetteerSet& gazetteers, unsigned threads) const {
    if (data.empty()) {
        throw DomainError("bench: no data");
    }
    BenchReport report;
    for (const Entry& entry : entries_) {
        const ModelSpec& spec = entry.stack ? entry.stack->member_spec : entry.spec;
        const ModelShape member_shape = shape_of(spec);

        auto score_range = [&](std::size_t begin, std::size_t end) {
            std::uint64_t forwards = 0;
            for (std::size_t i = begin; i < end; ++i) {
                const SparseVec features = sentence_features(data[i].text, spec, gazetteers);
                if (entry.stack) {
                    forwards += score_stack_item(*entry.stack, member_shape, features);
                } else {
                    volatile double sink = forward(entry.model->tensors, features, member_shape);
                    (void)sink;
                    ++forwards;
                }
            }
            return forwards;
        };

        const auto started = std::chrono::steady_clock::now();
        std::uint64_t forwards = 0;
        if (threads <= 1) {
            forwards = score_range(0, data.size());
        } else {
            const unsigned worker_count =
                std::min<std::size_t>(threads, data.size());
            std::vector<std::uint64_t> partial(worker_count, 0);
            std::vector<std::thread> workers;
            workers.reserve(worker_count);
            const std::size_t chunk = (data.size() + worker_count - 1) / worker_count;
            for (unsigned w = 0; w < worker_count; ++w) {
                const std::size_t begin = w * chunk;
                const std::size_t end = std::min(begin + chunk, data.size());
                workers.emplace_back([&, w, begin, end] { partial[w] = score_range(begin, end); });
            }
            for (std::thread& t : workers) t.join();
            for (std::uint64_t part : partial) forwards += part;
        }
        const auto elapsed = std::chrono::steady_clock::now() - started;

        report.systems.push_back(BenchReport::System{
            entry.name, forwards,
            static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed).count()),
            data.size()});
    }
    return report;
}

nlohmann::ordered_json BenchReport::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const System& s : systems) {
        rows.push_back(nlohmann::ordered_json{{"name", s.name},
                                              {"forwards", s.forwards},
                                              {"wall_time_ns", s.wall_time_ns},
                                              {"items", s.items}});
    }
    j["systems"] = std::move(rows);
    return j;
}

}  // namespace soupkit
