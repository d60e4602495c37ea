#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace soupkit {

struct TensorEntry {
    std::string name;
    std::vector<std::size_t> shape;  // entries >= 1; empty shape means scalar
    std::vector<float> values;       // row-major, length == product(shape)

    std::size_t element_count() const {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }

    bool operator==(const TensorEntry&) const = default;
};

// Ordered map of named f32 tensors. Insertion order is the serialized order.
// add() enforces unique names, shape/value-length agreement and finiteness.
class NamedTensorMap {
public:
    void add(std::string name, std::vector<std::size_t> shape, std::vector<float> values);

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    bool contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }

    const TensorEntry& entry(std::size_t i) const { return entries_[i]; }
    const TensorEntry& at(std::string_view name) const;

    // Mutable access for optimizer loops; the caller keeps values finite.
    std::span<float> values_mut(std::string_view name);
    std::span<float> values_mut(std::size_t i) { return entries_[i].values; }

    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    bool operator==(const NamedTensorMap& other) const { return entries_ == other.entries_; }

private:
    std::vector<TensorEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Canonical architecture string plus its 64-bit FNV-1a hash. Two tensor maps
// are soup-compatible iff their signatures are byte-equal; values never
// contribute, but names, shapes and entry order all do.
struct ArchSignature {
    std::string canonical;
    std::uint64_t hash = 0;

    bool operator==(const ArchSignature&) const = default;
};

ArchSignature arch_signature(const NamedTensorMap& tensors);

}  // namespace soupkit
