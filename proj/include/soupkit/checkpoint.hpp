#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "soupkit/tensor_map.hpp"

namespace soupkit {

// Provenance carried by a souped checkpoint: one row per member.
struct SoupMemberInfo {
    std::uint64_t seed = 0;
    std::optional<double> dev_loss;
    double weight = 0.0;

    bool operator==(const SoupMemberInfo&) const = default;
};

struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::optional<double> dev_loss;  // mean dev BCE of the stored parameters
    std::string model_spec_id;
    std::map<std::string, int> label_map = {{"No", 0}, {"Yes", 1}};  // bijection onto {0,1}
    // Fixed by default so that equal inputs always serialize to equal bytes.
    std::string created_at = "1970-01-01T00:00:00Z";
    std::optional<std::vector<SoupMemberInfo>> soup;

    bool operator==(const CheckpointMeta&) const = default;
};

struct Checkpoint {
    NamedTensorMap tensors;
    CheckpointMeta meta;

    bool operator==(const Checkpoint&) const = default;
};

// Container layout, all integers little-endian:
//   bytes 0..3   magic "SOUP"
//   bytes 4..7   format version, u32 = 1
//   bytes 8..15  metadata length M, u64
//   M bytes      UTF-8 JSON {"arch": [{"name","dtype","shape"}...], "meta": {...}}
//   then per arch entry, in order, raw little-endian f32 values
// No padding, no trailing bytes. Writing is a pure function of the checkpoint.
void write_checkpoint(const Checkpoint& ckpt, std::ostream& dest);
Checkpoint read_checkpoint(std::istream& src);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace soupkit
